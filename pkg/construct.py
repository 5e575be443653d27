"""
Rateless Toolkit - Ball-into-Bin Construction Module
Builds the Tanner graph of the rateless code from a CodeSpec: Phase I with the
buffer bin (steps 1..K), Phase II afterwards, lowest-degree-first selection.
"""

import json
import math
from dataclasses import asdict, dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from degdist import (CHECK, NODE, DegreeDistribution, format_distribution,
                     parse_distribution, sample_degree)
from errors import ConfigError, DistributionError, SpecInvalidError
from gf2 import SparseBinMatrix
from logger import get_logger

logger = get_logger(__name__)


def make_rng(seed: int, *counters: int) -> np.random.Generator:
    """Philox stream keyed by (seed, *counters); independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, counters)])))


def derive_seed(seed: int, *counters: int) -> int:
    """64-bit child seed for (seed, *counters)."""
    state = np.random.SeedSequence([int(seed), *map(int, counters)]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class CodeSpec:
    """Everything needed to rebuild the same Tanner graph on both ends of the link."""

    K: int
    delta: float
    omega: DegreeDistribution
    seed: int = Config.DEFAULT_SEED
    d_max: int = Config.DEFAULT_D_MAX
    L_total: int = 0
    rng: str = Config.RNG_NAME

    def __post_init__(self):
        if self.L_total == 0:
            object.__setattr__(self, "L_total", self.boundary)
        if self.K < 2:
            raise SpecInvalidError(f"K must be at least 2, got {self.K}")
        if not self.delta > 0:
            raise SpecInvalidError(f"delta must be positive, got {self.delta}")
        if self.L_total < self.K:
            raise SpecInvalidError(f"L_total={self.L_total} is below K={self.K}")
        if self.d_max < 2:
            raise SpecInvalidError(f"d_max must be at least 2, got {self.d_max}")
        if self.rng != Config.RNG_NAME:
            raise SpecInvalidError(f"Unsupported generator '{self.rng}'")
        if self.omega.view != NODE or self.omega.kind != CHECK:
            raise SpecInvalidError("omega must be a node-view check distribution")

    @property
    def boundary(self) -> int:
        """floor(K(1+delta)): number of encoded symbols in sub-codes A and B."""
        return math.floor(self.K * (1 + self.delta) + 1e-9)

    def replace(self, **changes) -> "CodeSpec":
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["omega"] = format_distribution(self.omega)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "CodeSpec":
        try:
            omega = data["omega"]
            if isinstance(omega, str):
                omega = parse_distribution(omega)
            return cls(
                K=int(data["K"]),
                delta=float(data["delta"]),
                omega=omega,
                seed=int(data.get("seed", Config.DEFAULT_SEED)),
                d_max=int(data.get("d_max", Config.DEFAULT_D_MAX)),
                L_total=int(data.get("L_total", 0)),
                rng=data.get("rng", Config.RNG_NAME),
            )
        except (KeyError, TypeError, ValueError, DistributionError) as e:
            raise ConfigError(f"Invalid CodeSpec: {e}") from e

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CodeSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read CodeSpec {path}: {e}") from e
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """
    Parity-check structure: check l (0-based) lists sorted variable indices,
    0..K-1 for message symbols and K..K+L-1 for encoded symbols.

    buffer_log records (step, message ball, bin) for every Phase I step, steps 1-based.
    """

    K: int
    L: int
    checks: Tuple[Tuple[int, ...], ...]
    buffer_log: Tuple[Tuple[int, int, int], ...] = ()
    d_max: Optional[int] = None

    @classmethod
    def from_checks(cls, K: int, checks: Sequence[Sequence[int]]) -> "TannerGraph":
        """Wrap hand-written check lists (toy graphs, decoded dumps)."""
        return cls(K, len(checks), tuple(tuple(sorted(set(c))) for c in checks))

    @property
    def n_vars(self) -> int:
        return self.K + self.L

    @cached_property
    def var_degrees(self) -> np.ndarray:
        flat = np.fromiter((v for c in self.checks for v in c), dtype=np.int64)
        return np.bincount(flat, minlength=self.n_vars).astype(np.int64)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.array([len(c) for c in self.checks], dtype=np.int64)

    @cached_property
    def H(self) -> SparseBinMatrix:
        return SparseBinMatrix(self.L, self.n_vars, self.checks)

    @cached_property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """(check index, variable index) per edge, grouped by check."""
        chk = np.repeat(np.arange(self.L, dtype=np.int64), self.check_degrees)
        var = np.fromiter((v for c in self.checks for v in c), dtype=np.int64, count=int(self.check_degrees.sum()))
        return chk, var

    def truncate(self, L: int) -> "TannerGraph":
        """First L checks; construction is step-wise, so this equals building with L_total=L."""
        if L >= self.L:
            return self
        return TannerGraph(
            self.K, L, self.checks[:L],
            tuple(entry for entry in self.buffer_log if entry[0] <= L),
            self.d_max,
        )


class BinState:
    """
    Degree bins for the construction. Each bin is a list with a position map so
    removal is O(1); balls in the buffer are held outside the bins.
    """

    def __init__(self, n_balls: int, d_max: int):
        self.d_max = d_max
        self.bins: List[List[int]] = [[] for _ in range(d_max + 1)]
        self.degree: List[int] = [-1] * n_balls
        self._pos: List[int] = [-1] * n_balls
        self.buffer: Dict[int, int] = {}

    @classmethod
    def from_bins(cls, bins: Dict[int, Sequence[int]], d_max: int = Config.DEFAULT_D_MAX) -> "BinState":
        n = 1 + max((b for balls in bins.values() for b in balls), default=-1)
        state = cls(n, d_max)
        for degree in sorted(bins):
            for ball in bins[degree]:
                state.add(ball, degree)
        return state

    def add(self, ball: int, degree: int):
        bin_ = self.bins[degree]
        self._pos[ball] = len(bin_)
        bin_.append(ball)
        self.degree[ball] = degree

    def remove(self, ball: int):
        bin_ = self.bins[self.degree[ball]]
        idx = self._pos[ball]
        last = bin_.pop()
        if last != ball:
            bin_[idx] = last
            self._pos[last] = idx
        self._pos[ball] = -1

    def promote(self, ball: int):
        """Move a ball up one bin after it joined a check."""
        self.remove(ball)
        self.add(ball, int(self.degree[ball]) + 1)

    def to_buffer(self, ball: int):
        self.remove(ball)
        self.buffer[ball] = int(self.degree[ball])

    def release_buffer(self):
        for ball, degree in sorted(self.buffer.items()):
            self.add(ball, degree)
        self.buffer.clear()

    def selectable(self) -> int:
        return sum(len(b) for b in self.bins[: self.d_max])

    def lowest_message_ball(self, K: int, rng: np.random.Generator, exclude=()) -> Optional[int]:
        """Uniform pick among message balls in the lowest selectable bin holding one."""
        for bin_ in self.bins[: self.d_max]:
            candidates = sorted(b for b in bin_ if b < K and b not in exclude)
            if candidates:
                return candidates[int(rng.integers(len(candidates)))]
        return None


def select_neighbors(bins: BinState, want: int, rng: np.random.Generator) -> List[int]:
    """
    Gather `want` balls, lowest-degree bins first.

    Whole bins are taken while they fit; the bin that is only partly consumed is
    sampled uniformly without replacement. Balls in the d_max bin are never
    selected. Returns every selectable ball when fewer than `want` exist.
    """
    chosen: List[int] = []
    remaining = want
    for bin_ in bins.bins[: bins.d_max]:
        if remaining <= 0:
            break
        if not bin_:
            continue
        if len(bin_) <= remaining:
            chosen.extend(bin_)
            remaining -= len(bin_)
        else:
            picks = rng.choice(len(bin_), size=remaining, replace=False)
            chosen.extend(bin_[int(j)] for j in picks)
            remaining = 0
    return chosen


def build_graph(spec: CodeSpec) -> TannerGraph:
    """
    Run the ball-into-bin procedure for spec.L_total steps.

    Step l samples a check degree i, joins the new encoded ball K+l-1 with i-1
    balls from select_neighbors and promotes every participant one bin. During
    Phase I (l <= K) one selected message ball goes to the buffer bin; buffered
    balls return to their recorded bins at l = K+1.

    Raises:
        SpecInvalidError: i_max - 1 > K, or no selectable ball is left
    """
    K = spec.K
    i_max = int(spec.omega.degrees.max())
    if i_max - 1 > K:
        raise SpecInvalidError(f"Maximum check degree {i_max} needs more than K={K} message symbols")

    rng = make_rng(spec.seed)
    bins = BinState(K + spec.L_total, spec.d_max)
    for v in range(K):
        bins.add(v, 0)

    checks: List[Tuple[int, ...]] = []
    buffer_log: List[Tuple[int, int, int]] = []

    for l in range(1, spec.L_total + 1):
        if l == K + 1:
            bins.release_buffer()

        i = sample_degree(spec.omega, rng)
        selected = select_neighbors(bins, i - 1, rng)
        if not selected:
            raise SpecInvalidError(f"No selectable balls left at step {l} (d_max={spec.d_max})")

        if l <= K:
            message = [b for b in selected if b < K]
            if not message:
                # Swap the highest-degree pick for a free message ball
                substitute = bins.lowest_message_ball(K, rng, exclude=set(selected))
                if substitute is None:
                    raise SpecInvalidError(f"No free message ball for Phase I step {l}")
                top = max(int(bins.degree[b]) for b in selected)
                highest = [j for j, b in enumerate(selected) if bins.degree[b] == top]
                selected[highest[int(rng.integers(len(highest)))]] = substitute
                message = [substitute]

        encoded = K + l - 1
        for ball in selected:
            bins.promote(ball)
        bins.add(encoded, 1)

        if l <= K:
            ball = message[int(rng.integers(len(message)))]
            bins.to_buffer(ball)
            buffer_log.append((l, ball, bins.buffer[ball]))

        checks.append(tuple(sorted(selected + [encoded])))

    graph = TannerGraph(K, spec.L_total, tuple(checks), tuple(buffer_log), spec.d_max)
    logger.debug(
        f"Built graph K={K} L={spec.L_total} seed={spec.seed}: "
        f"{int(graph.check_degrees.sum())} edges, max var degree {int(graph.var_degrees.max())}"
    )
    return graph


def degree_histogram(graph: TannerGraph, kind: str = "variable") -> Dict[int, int]:
    """Node count per degree for variable or check nodes."""
    degrees = graph.var_degrees if kind == "variable" else graph.check_degrees
    counts = np.bincount(degrees)
    return {int(d): int(c) for d, c in enumerate(counts) if c}


def check_structure(graph: TannerGraph) -> List[str]:
    """
    Scan a constructed graph for structural defects.

    Covers the self-connection, lower-triangular encoded part, buffer discipline
    (upper-triangular message part in buffer order), duplicate-free checks and
    the degree cap.

    Returns:
        Human-readable violations; empty when the graph is well formed
    """
    K, L = graph.K, graph.L
    problems: List[str] = []

    for l, check in enumerate(graph.checks):
        own = K + l
        if own not in check:
            problems.append(f"check {l} misses its encoded symbol {own}")
        if check and check[-1] > own:
            problems.append(f"check {l} uses later encoded symbol {check[-1]}")
        if len(set(check)) != len(check):
            problems.append(f"check {l} repeats a variable")

    phase_one = min(K, L)
    if len(graph.buffer_log) != phase_one:
        problems.append(f"buffer log has {len(graph.buffer_log)} entries, expected {phase_one}")
    order = [ball for _, ball, _ in graph.buffer_log]
    if len(set(order)) != len(order):
        problems.append("a message symbol was buffered twice")

    buffered_at = {ball: step for step, ball, _ in graph.buffer_log}
    for step, ball, _ in graph.buffer_log:
        row = graph.checks[step - 1]
        if ball not in row:
            problems.append(f"row {step} misses its buffered column {ball}")
        for v in row:
            if v < K and v in buffered_at and buffered_at[v] < step:
                problems.append(f"row {step} uses column {v} buffered at step {buffered_at[v]}")

    if graph.d_max is not None and int(graph.var_degrees.max(initial=0)) > graph.d_max:
        problems.append(f"variable degree exceeds d_max={graph.d_max}")
    if L >= K and int(graph.var_degrees.min(initial=1)) < 1:
        problems.append("a variable node has degree 0")
    return problems


def message_order(graph: TannerGraph) -> List[int]:
    """Message columns in buffering order (the upper-triangular permutation)."""
    return [ball for _, ball, _ in graph.buffer_log]
