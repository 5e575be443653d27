# Core package for worker code
