"""
Rateless Toolkit - System Test
Checks dependencies, configuration, module imports and the command line
end to end. Run with pytest, or standalone for a summary: python test_system.py
"""

import os
import tempfile
from pathlib import Path

DEPENDENCIES = {
    "Numerics": ["numpy", "scipy", "scipy.integrate", "scipy.optimize", "scipy.sparse"],
    "System Utils": ["psutil", "dotenv"],
    "Optional": ["tqdm"],
}

MODULES = ["config", "logger", "errors", "gf2", "degdist", "construct", "channel", "codec",
           "exitchart", "optimizer", "harness", "core.worker_trials", "main"]

REQUIRED_FILES = ["requirements.txt", "README.md", "DESIGN.md", "main.py", "config.py", "logger.py"]


def _try_import(name):
    try:
        __import__(name)
        return None
    except Exception as e:
        return e


def test_imports():
    missing = [m for mods in DEPENDENCIES.values() for m in mods
               if m != "tqdm" and _try_import(m) is not None]
    assert not missing, f"missing dependencies: {missing}"


def test_config():
    from config import Config

    assert Config.validate_config() == []
    assert Config.thread_count(3) == 3
    assert Config.thread_count() >= 1


def test_modules():
    failed = {m: e for m in MODULES if (e := _try_import(m)) is not None}
    assert not failed, f"modules failed to import: {failed}"


def test_logging():
    from logger import RatelessLogger, get_logger

    log = get_logger("rateless.system")
    assert RatelessLogger._initialized
    log.info("system test logging check")
    assert RatelessLogger.cleanup_old_logs(10_000) == 0


def test_file_structure():
    root = Path(__file__).parent
    missing = [f for f in REQUIRED_FILES if not (root / f).exists()]
    assert not missing, f"missing files: {missing}"


def test_cli_capacity():
    import main

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "capacity.csv"
        assert main.main(["--out", str(out), "capacity", "--sigma", "0.977"]) == 0
        header, row = out.read_text(encoding="utf-8").splitlines()
    assert header == "rate,sigma,ebn0_db"
    assert abs(float(row.split(",")[0]) - 0.501) < 1e-3


def test_cli_rejects_bad_input():
    import main

    assert main.main(["capacity", "--sigma", "-1"]) == 2


def test_cli_construct_writes_spec():
    import json

    import main

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "spec.json"
        code = main.main(["--seed", "3", "--out", str(out), "construct", "--K", "40"])
        spec = json.loads(out.read_text(encoding="utf-8"))
    assert code == 0
    assert spec["K"] == 40 and spec["seed"] == 3


def test_cli_debug_flag_enables_debug_mode():
    import main
    from config import Config
    from logger import RatelessLogger

    previous = Config.DEBUG_MODE
    try:
        Config.DEBUG_MODE = False
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "capacity.csv"
            assert main.main(["--debug", "--out", str(out), "capacity", "--sigma", "0.5"]) == 0
        assert Config.DEBUG_MODE
    finally:
        Config.DEBUG_MODE = previous
        RatelessLogger.initialize(Config.LOG_LEVEL, Config.LOG_TO_FILE, previous, force=True)


def test_cli_exit_uses_master_seed():
    import numpy as np

    import main
    from degdist import parse_distribution, variable_dist_for
    from exitchart import vnd_curve

    omega = parse_distribution("0.475*x^3 + 0.525*x^6")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "exit.csv"
        args = ["--seed", "5", "--out", str(out), "exit", "--sigma", "0.5", "--K", "40", "--delta", "0.3",
                "--model", "empirical"]
        assert main.main(args) == 0
        rows = out.read_text(encoding="utf-8").splitlines()[1:]
    written = np.array([float(r.split(",")[1]) for r in rows])
    seeded = vnd_curve(variable_dist_for(omega, 40, 52, model="empirical", seed=5), 2 / 0.5, 0.0)
    default = vnd_curve(variable_dist_for(omega, 40, 52, model="empirical"), 2 / 0.5, 0.0)
    assert np.max(np.abs(written - seeded.values)) < 1e-8
    assert np.max(np.abs(written - default.values)) > 1e-6


def main():
    """Run all checks and print a summary."""
    print("\n" + "=" * 60)
    print("     RATELESS TOOLKIT - SYSTEM TEST")
    print("=" * 60)

    print("\nDependencies:")
    for category, modules in DEPENDENCIES.items():
        print(f"  {category}:")
        for module in modules:
            error = _try_import(module)
            print(f"    [OK] {module}" if error is None else f"    [--] {module} - {error}")

    checks = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    passed = 0
    print("\nChecks:")
    for name, fn in checks:
        try:
            fn()
            passed += 1
            print(f"  [OK] {name}")
        except Exception as e:
            print(f"  [FAIL] {name}: {e!r}")

    print("\n" + "=" * 60)
    print(f"Tests Passed: {passed}/{len(checks)}")
    if passed == len(checks):
        print("\nAll checks passed. Try:")
        print("  python main.py capacity --table")
    else:
        print("\nInstall missing dependencies with: pip install -r requirements.txt")
        if not os.path.exists(".env"):
            print("Create a .env template with: python config.py")
    print("=" * 60)
    return len(checks) - passed


if __name__ == "__main__":
    raise SystemExit(main())
