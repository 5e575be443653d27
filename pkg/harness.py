"""
Rateless Toolkit - Experiment Harness
Monte Carlo BER runs: BER vs overhead at a fixed noise level (sweep) and BER
vs noise level at a fixed rate (waterfall), with results persisted as CSV.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from channel import ChannelParams, capacity, channel_llr, modulate, symbols_for_overhead, transmit
from codec import ReceptionState, bp_decode, encode_all, encoded_in_prefix, receive_many, schedule
from config import Config
from construct import CodeSpec, build_graph, derive_seed, make_rng
from core.worker_trials import TrialWorker
from degdist import DegreeDistribution, format_distribution, parse_distribution
from errors import ConfigError, DistributionError
from logger import get_logger

logger = get_logger(__name__)

SWEEP_COLUMNS = ["sigma_n", "overhead", "M", "trials", "bit_errors", "ber", "ci95", "mean_iters", "wall_s"]
WATERFALL_COLUMNS = ["rate", "sigma_n", "M", "trials", "bit_errors", "ber", "ci95", "mean_iters", "wall_s"]

MIN_ERROR_EVENTS = 30
RELATIVE_HALF_WIDTH = 0.1

# Stream labels under the master seed
_NOISE_STREAM = 1
_MESSAGE_STREAM = 2


@dataclass(frozen=True)
class ExperimentConfig:
    K: int
    sigma_n: float
    overheads: Tuple[float, ...] = ()
    trials: int = 200
    max_iters: int = Config.BP_MAX_ITERS
    delta: float = Config.DEFAULT_DELTA
    omega: DegreeDistribution = field(default_factory=lambda: parse_distribution(Config.DEFAULT_OMEGA))
    d_max: int = Config.DEFAULT_D_MAX
    master_seed: int = Config.DEFAULT_SEED
    fixed_graph: bool = False
    all_zero: bool = False
    early_abort: bool = Config.EARLY_ABORT

    def __post_init__(self):
        object.__setattr__(self, "overheads", tuple(float(d) for d in self.overheads))
        if self.K < 2:
            raise ConfigError(f"K must be at least 2, got {self.K}")
        if not self.sigma_n > 0:
            raise ConfigError(f"sigma_n must be positive, got {self.sigma_n}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if any(d < -0.5 for d in self.overheads):
            raise ConfigError("overheads must be at least -0.5")

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown experiment fields: {sorted(unknown)}")
        kwargs = dict(data)
        try:
            if isinstance(kwargs.get("omega"), str):
                kwargs["omega"] = parse_distribution(kwargs["omega"])
            if "overheads" in kwargs:
                kwargs["overheads"] = tuple(kwargs["overheads"])
            return cls(**kwargs)
        except (TypeError, ValueError, DistributionError) as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read experiment config {path}: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> Dict:
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data["omega"] = format_distribution(self.omega)
        data["overheads"] = list(self.overheads)
        return data

    def code_spec(self, seed: int, L_total: int) -> CodeSpec:
        return CodeSpec(K=self.K, delta=self.delta, omega=self.omega, seed=seed,
                        d_max=self.d_max, L_total=max(self.K, L_total))


@dataclass
class SimResult:
    sigma_n: float
    overhead: float
    M: int
    trials: int
    bit_errors: int
    ber: float
    ci95: float
    mean_iters: float
    wall_s: float
    rate: Optional[float] = None

    def row(self, columns: Sequence[str]) -> List[str]:
        out = []
        for name in columns:
            value = getattr(self, name)
            if name == "wall_s":
                out.append(f"{value:.3f}")
            elif isinstance(value, float):
                out.append(repr(value))
            else:
                out.append(str(value))
        return out


def wilson_interval(errors: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Returns:
        (center, half_width)
    """
    if n <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2.0)
    p = errors / n
    denom = 1.0 + z ** 2 / n
    center = (p + z ** 2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z ** 2 / (4 * n ** 2)) / denom
    return center, half


@lru_cache(maxsize=8)
def _cached_graph(spec: CodeSpec):
    return build_graph(spec)


def run_trial(cfg: ExperimentConfig, sigma_n: float, M: int, t: int) -> Tuple[int, int, bool]:
    """
    One transmission: build (or reuse) the graph, encode, send the first M
    scheduled symbols over AWGN and decode.

    Returns:
        (message bit errors, BP iterations, converged)
    """
    boundary = math.floor(cfg.K * (1 + cfg.delta) + 1e-9)
    L = encoded_in_prefix(cfg.K, boundary, M)
    if cfg.fixed_graph:
        spec = cfg.code_spec(cfg.master_seed, max(L, boundary))
        graph = _cached_graph(spec).truncate(max(cfg.K, L))
        spec = spec.replace(L_total=graph.L)
    else:
        spec = cfg.code_spec(derive_seed(cfg.master_seed, t), L)
        graph = build_graph(spec)

    if cfg.all_zero:
        message = np.zeros(cfg.K, dtype=np.uint8)
    else:
        message = make_rng(cfg.master_seed, _MESSAGE_STREAM, t).integers(0, 2, cfg.K, dtype=np.uint8)
    word = np.concatenate([message, encode_all(graph, message)])

    indices = schedule(spec).first(M)
    params = ChannelParams(sigma_n)
    y = transmit(modulate(word[indices]), params, make_rng(cfg.master_seed, _NOISE_STREAM, t))
    state = receive_many(ReceptionState(cfg.K, graph.L), indices, channel_llr(y, params))

    result = bp_decode(graph, state, cfg.max_iters)
    return int(np.count_nonzero(result.bits != message)), result.iterations, result.converged


def _run(cfg: ExperimentConfig, sigma_n: float, M: int, overhead: float, threads: Optional[int],
         label: str) -> SimResult:
    started = time.perf_counter()
    bits_per_trial = cfg.K

    def stop(results) -> bool:
        if not cfg.early_abort:
            return False
        errors = sum(r[0] for r in results)
        if errors < MIN_ERROR_EVENTS:
            return False
        ber = errors / (len(results) * bits_per_trial)
        return wilson_interval(errors, len(results) * bits_per_trial)[1] < RELATIVE_HALF_WIDTH * ber

    worker = TrialWorker(threads)
    results = worker.run(lambda t: run_trial(cfg, sigma_n, M, t), cfg.trials, stop, label)

    trials = len(results)
    errors = sum(r[0] for r in results)
    failures = sum(1 for r in results if not r[2])
    n_bits = trials * bits_per_trial
    if failures:
        logger.warning(f"{label}: BP did not converge in {failures}/{trials} trials")
    return SimResult(
        sigma_n=float(sigma_n),
        overhead=float(overhead),
        M=M,
        trials=trials,
        bit_errors=errors,
        ber=errors / n_bits,
        ci95=wilson_interval(errors, n_bits)[1],
        mean_iters=sum(r[1] for r in results) / trials,
        wall_s=time.perf_counter() - started,
    )


def run_point(cfg: ExperimentConfig, delta: float, threads: Optional[int] = None) -> SimResult:
    """
    BER at overhead delta: M = round(K(1+delta)/C) received symbols per trial.
    """
    M = symbols_for_overhead(cfg.K, cfg.sigma_n, delta)
    result = _run(cfg, cfg.sigma_n, M, delta, threads, f"delta={delta}")
    logger.info(
        f"sigma_n={cfg.sigma_n} delta={delta} M={M}: {result.bit_errors} errors in {result.trials} trials, "
        f"BER={result.ber:.3e} (+/-{result.ci95:.1e}), {result.mean_iters:.1f} iters"
    )
    return result


def sweep(cfg: ExperimentConfig, threads: Optional[int] = None) -> List[SimResult]:
    """run_point for every overhead, in input order."""
    return [run_point(cfg, delta, threads) for delta in cfg.overheads]


def run_rate_point(cfg: ExperimentConfig, rate: float, sigma_n: float, threads: Optional[int] = None) -> SimResult:
    """BER at noise level sigma_n when the receiver holds M = round(K/rate) symbols."""
    if not 0 < rate <= 1:
        raise ConfigError(f"rate must lie in (0, 1], got {rate}")
    M = int(round(cfg.K / rate))
    delta = M * capacity(sigma_n) / cfg.K - 1.0
    result = _run(cfg, sigma_n, M, delta, threads, f"R={rate} sigma_n={sigma_n}")
    result.rate = float(rate)
    logger.info(f"R={rate} sigma_n={sigma_n} M={M}: BER={result.ber:.3e} over {result.trials} trials")
    return result


def waterfall(cfg: ExperimentConfig, rate: float, sigmas: Sequence[float],
              threads: Optional[int] = None) -> List[SimResult]:
    return [run_rate_point(cfg, rate, s, threads) for s in sigmas]


def write_results(rows: Sequence[SimResult], path: Union[str, Path, None] = None,
                  columns: Sequence[str] = SWEEP_COLUMNS, stream=None) -> Optional[Path]:
    """
    Write result rows as CSV to `path` (or to `stream` when given).

    Floats use repr so reruns are byte-identical apart from wall_s.
    """
    if stream is not None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow(r.row(columns))
        return None

    path = Path(path) if path else Path(Config.RESULTS_DIR) / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow(r.row(columns))
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path
