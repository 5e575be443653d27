"""
Rateless Toolkit - Configuration Module
Centralized configuration management for construction, decoding and experiments.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_bool(name, default):
    return os.getenv(name, default).lower() == "true"


class Config:
    """Configuration settings for the rateless code toolkit."""

    # Randomness
    DEFAULT_SEED = int(os.getenv("RATELESS_DEFAULT_SEED", "20240601"))
    RNG_NAME = "philox"  # recorded in every CodeSpec dump

    # Construction
    DEFAULT_D_MAX = int(os.getenv("RATELESS_DEFAULT_D_MAX", "50"))
    DEFAULT_DELTA = float(os.getenv("RATELESS_DEFAULT_DELTA", "0.3"))
    DEFAULT_OMEGA = os.getenv("RATELESS_DEFAULT_OMEGA", "0.475*x^3 + 0.525*x^6")

    # BP decoder
    BP_MAX_ITERS = int(os.getenv("RATELESS_BP_MAX_ITERS", "100"))
    LLR_MAX = float(os.getenv("RATELESS_LLR_MAX", "30.0"))

    # EXIT chart
    EXIT_GRID_POINTS = int(os.getenv("RATELESS_EXIT_GRID_POINTS", "201"))
    J_TABLE_POINTS = int(os.getenv("RATELESS_J_TABLE_POINTS", "10000"))
    J_TABLE_SIGMA_MAX = float(os.getenv("RATELESS_J_TABLE_SIGMA_MAX", "60.0"))
    VARIABLE_MODEL = os.getenv("RATELESS_VARIABLE_MODEL", "empirical")  # empirical, regular
    DESIGN_K = int(os.getenv("RATELESS_DESIGN_K", "500"))
    EMPIRICAL_TRIALS = int(os.getenv("RATELESS_EMPIRICAL_TRIALS", "10"))

    # Optimizer
    OPT_EPSILON = float(os.getenv("RATELESS_OPT_EPSILON", "0.05"))
    OPT_GAP_MIN = float(os.getenv("RATELESS_OPT_GAP_MIN", "1e-3"))  # floor on (VND - CND) / (1 - I)
    OPT_MAX_ROUNDS = int(os.getenv("RATELESS_OPT_MAX_ROUNDS", "20"))
    OPT_OMEGA_TOL = float(os.getenv("RATELESS_OPT_OMEGA_TOL", "1e-4"))
    OPT_BETA_STEP = float(os.getenv("RATELESS_OPT_BETA_STEP", "0.25"))

    # Experiments
    DEFAULT_THREADS = int(os.getenv("RATELESS_DEFAULT_THREADS", "0"))  # 0 = physical cores
    TRIAL_BATCH = int(os.getenv("RATELESS_TRIAL_BATCH", "10"))
    EARLY_ABORT = _env_bool("RATELESS_EARLY_ABORT", "true")
    RESULTS_DIR = os.getenv("RATELESS_RESULTS_DIR", "results")
    SHOW_PROGRESS = _env_bool("RATELESS_SHOW_PROGRESS", "false")

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_TO_FILE = _env_bool("LOG_TO_FILE", "false")
    LOG_RETENTION_DAYS = int(os.getenv("LOG_RETENTION_DAYS", "7"))
    DEBUG_MODE = _env_bool("DEBUG_MODE", "false")

    # Test tooling
    SLOW_TESTS = _env_bool("RATELESS_SLOW_TESTS", "false")

    @classmethod
    def thread_count(cls, requested=None):
        """
        Resolve the number of worker threads for Monte Carlo trials.

        Args:
            requested: Explicit thread count; None or 0 falls back to config

        Returns:
            A positive thread count
        """
        n = requested or cls.DEFAULT_THREADS
        if n and n > 0:
            return int(n)
        import psutil
        return psutil.cpu_count(logical=False) or 1

    @classmethod
    def validate_config(cls):
        """Validate that configuration values are usable."""
        errors = []

        if cls.VARIABLE_MODEL not in ["empirical", "regular"]:
            errors.append(f"Invalid RATELESS_VARIABLE_MODEL: {cls.VARIABLE_MODEL}")

        if cls.BP_MAX_ITERS < 1:
            errors.append("RATELESS_BP_MAX_ITERS must be at least 1")

        if cls.LLR_MAX <= 0:
            errors.append("RATELESS_LLR_MAX must be positive")

        if cls.EXIT_GRID_POINTS < 3:
            errors.append("RATELESS_EXIT_GRID_POINTS must be at least 3")

        if cls.DEFAULT_D_MAX < 2:
            errors.append("RATELESS_DEFAULT_D_MAX must be at least 2")

        if cls.DESIGN_K < 2:
            errors.append("RATELESS_DESIGN_K must be at least 2")

        if cls.EMPIRICAL_TRIALS < 1:
            errors.append("RATELESS_EMPIRICAL_TRIALS must be at least 1")

        if not 0 < cls.OPT_EPSILON < 1:
            errors.append("RATELESS_OPT_EPSILON must lie in (0, 1)")

        if cls.OPT_BETA_STEP <= 0:
            errors.append("RATELESS_OPT_BETA_STEP must be positive")

        return errors


# Create a default .env file if it doesn't exist
def create_default_env():
    """Create a default .env file with template values."""
    env_path = Path(".env")
    if not env_path.exists():
        default_content = """# Rateless Toolkit Configuration

# Randomness
RATELESS_DEFAULT_SEED=20240601

# Construction
RATELESS_DEFAULT_D_MAX=50
RATELESS_DEFAULT_DELTA=0.3
RATELESS_DEFAULT_OMEGA=0.475*x^3 + 0.525*x^6

# BP decoder
RATELESS_BP_MAX_ITERS=100
RATELESS_LLR_MAX=30.0

# EXIT chart: "empirical" or "regular" variable-degree model
RATELESS_VARIABLE_MODEL=empirical
RATELESS_DESIGN_K=500
RATELESS_EMPIRICAL_TRIALS=10

# Experiments (0 threads = one per physical core)
RATELESS_DEFAULT_THREADS=0
RATELESS_EARLY_ABORT=true
RATELESS_RESULTS_DIR=results

# Logging
LOG_LEVEL=INFO
LOG_TO_FILE=false
"""
        env_path.write_text(default_content)
        print(f"Created default .env file at {env_path.absolute()}")


if __name__ == "__main__":
    create_default_env()

    print("=== Rateless Toolkit Configuration ===")
    print(f"BP iterations: {Config.BP_MAX_ITERS}")
    print(f"Variable model: {Config.VARIABLE_MODEL}")
    print(f"Threads: {Config.thread_count()}")

    errors = Config.validate_config()
    if errors:
        print("\nConfiguration Errors:")
        for error in errors:
            print(f"  - {error}")
    else:
        print("\n[OK] Configuration is valid!")
