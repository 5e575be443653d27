"""
Rateless Toolkit - Degree Distribution Optimizer
Searches a check degree distribution, a global Delta and per-SNR rho0 values
that keep every EXIT tunnel open with near-coincident VND curves while
minimizing the worst capacity-to-rate ratio chi.
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from channel import capacity
from config import Config
from degdist import (CHECK, EDGE, NODE, DegreeDistribution, edge_to_node, format_distribution,
                     node_to_edge, parse_distribution, variable_dist_for)
from errors import ConfigError, DistributionError, NoFeasibleError
from exitchart import ExitCurve, cnd_basis, curve_distance, default_grid, tunnel_gap, tunnel_margin, vnd_curve
from logger import get_logger

logger = get_logger(__name__)


def _frange(start: float, stop: float, step: float) -> Tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(round(start + k * step, 10) for k in range(n + 1))


DEFAULT_RHO0_GRID = _frange(0.0, 0.5, 0.05)
DEFAULT_DELTA_GRID = _frange(0.05, 1.0, 0.05)


@dataclass(frozen=True)
class OptProblem:
    """
    Search space and tolerances. snr_points are noise levels sigma_n, kept in
    low-SNR-first order (decreasing sigma_n).
    """

    snr_points: Tuple[float, ...]
    i_max: int = 6
    delta_grid: Tuple[float, ...] = DEFAULT_DELTA_GRID
    rho0_grid: Tuple[float, ...] = DEFAULT_RHO0_GRID
    epsilon: float = Config.OPT_EPSILON
    gap_min: float = Config.OPT_GAP_MIN
    degrees: Optional[Tuple[int, ...]] = None
    K: int = Config.DESIGN_K
    model: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "snr_points", tuple(sorted((float(s) for s in self.snr_points), reverse=True)))
        object.__setattr__(self, "delta_grid", tuple(sorted(float(d) for d in self.delta_grid)))
        object.__setattr__(self, "rho0_grid", tuple(sorted(float(r) for r in self.rho0_grid)))
        if self.degrees is not None:
            object.__setattr__(self, "degrees", tuple(sorted(int(d) for d in self.degrees)))
        if not self.snr_points or not self.delta_grid or not self.rho0_grid:
            raise ConfigError("snr_points, delta_grid and rho0_grid must be nonempty")
        if any(s <= 0 for s in self.snr_points):
            raise ConfigError("snr_points must be positive noise levels")
        if any(d <= 0 for d in self.delta_grid) or any(not 0 <= r < 1 for r in self.rho0_grid):
            raise ConfigError("delta_grid must be positive and rho0_grid within [0, 1)")
        if min(self.degree_set) < 2:
            raise ConfigError("Check degrees must be at least 2")

    @property
    def degree_set(self) -> Tuple[int, ...]:
        return self.degrees if self.degrees else tuple(range(2, self.i_max + 1))

    @classmethod
    def from_dict(cls, data: Dict) -> "OptProblem":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown problem fields: {sorted(unknown)}")
        try:
            kwargs = dict(data)
            for key in ("snr_points", "delta_grid", "rho0_grid", "degrees"):
                if kwargs.get(key) is not None:
                    kwargs[key] = tuple(kwargs[key])
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid optimizer problem: {e}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "OptProblem":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read problem file {path}: {e}") from e
        return cls.from_dict(data)


@dataclass
class OptResult:
    omega: DegreeDistribution
    Omega: DegreeDistribution
    Delta: float
    rho0: List[float]
    chi: List[float]
    max_chi: float
    min_gap: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "omega": format_distribution(self.omega),
            "Omega": format_distribution(self.Omega),
            "delta": self.Delta,
            "rho0": list(self.rho0),
            "chi": list(self.chi),
            "max_chi": self.max_chi,
            "min_gap": list(self.min_gap),
        }

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path


def code_rate(omega: DegreeDistribution, Delta: float, rho0: float, alpha: float) -> float:
    """R = alpha / ((1+Delta)(1-rho0)) * sum_i omega_i / i."""
    if not rho0 < 1:
        raise ValueError(f"rho0 must be below 1, got {rho0}")
    edge = node_to_edge(omega) if omega.view == NODE else omega
    inv_beta = math.fsum(w / i for i, w in edge.entries)
    return alpha / ((1.0 + Delta) * (1.0 - rho0)) * inv_beta


def chi(C: float, R: float) -> float:
    if not R > 0:
        raise ValueError(f"Rate must be positive, got {R}")
    return C / R


def design_alpha(omega: DegreeDistribution, Delta: float, K: int) -> float:
    """Average variable degree alpha = beta * L / (K + L) with L = floor(K(1+Delta))."""
    edge = node_to_edge(omega) if omega.view == NODE else omega
    beta = 1.0 / math.fsum(w / i for i, w in edge.entries)
    L = math.floor(K * (1 + Delta) + 1e-9)
    return beta * L / (K + L)


def design_chi(sigma_n: float, Delta: float, rho0: float) -> float:
    """chi at one SNR point; with alpha tied to beta the degree profile cancels out."""
    return capacity(sigma_n) * (2.0 + Delta) * (1.0 - rho0)


def _to_edge(omega, degrees: Optional[Sequence[int]] = None) -> Tuple[Optional[DegreeDistribution], Optional[int]]:
    """
    Coerce omega to an edge-view distribution.

    Returns (distribution, None) or (None, violated constraint number).
    """
    if isinstance(omega, DegreeDistribution):
        return (node_to_edge(omega) if omega.view == NODE else omega), None
    if isinstance(omega, Mapping):
        items = [(int(d), float(w)) for d, w in omega.items()]
    else:
        items = list(zip(degrees, (float(w) for w in omega)))
    weights = [w for _, w in items]
    if any(w < -1e-12 for w in weights):
        return None, 2
    if abs(math.fsum(weights) - 1.0) > 1e-9:
        return None, 1
    cleaned = {d: max(0.0, round(w, 12)) for d, w in items}
    try:
        return DegreeDistribution.from_mapping(cleaned, EDGE, CHECK), None
    except DistributionError:
        return None, 1


@lru_cache(maxsize=1024)
def _lambda_for(omega_node: DegreeDistribution, Delta: float, K: int, model: Optional[str]) -> DegreeDistribution:
    L = math.floor(K * (1 + Delta) + 1e-9)
    return variable_dist_for(omega_node, K, L, model=model)


def _vnd_curves(omega_edge: DegreeDistribution, Delta: float, rho0s: Sequence[float],
                sigmas: Sequence[float], problem: OptProblem, grid: np.ndarray) -> List[ExitCurve]:
    lam = _lambda_for(edge_to_node(omega_edge), float(Delta), problem.K, problem.model)
    return [vnd_curve(lam, 2.0 / s, r, grid) for s, r in zip(sigmas, rho0s)]


def _evaluate(omega_edge: DegreeDistribution, Delta: float, rho0s: Sequence[float],
              sigmas: Sequence[float], problem: OptProblem) -> Tuple[bool, Dict]:
    grid = default_grid()
    vnds = _vnd_curves(omega_edge, Delta, rho0s, sigmas, problem, grid)
    cnd_values = 1.0 - cnd_basis([d for d, _ in omega_edge.entries], grid) @ omega_edge.probs
    cnd = ExitCurve(grid, np.clip(cnd_values, 0.0, 1.0), "CND_INVERTED")
    gaps = [tunnel_gap(v, cnd)[1] for v in vnds]
    margins = [tunnel_margin(v, cnd) for v in vnds]
    distance = max((curve_distance(a, b) for a, b in itertools.combinations(vnds, 2)), default=0.0)
    chis = [design_chi(s, Delta, r) for s, r in zip(sigmas, rho0s)]
    diagnostics = {"constraint": None, "min_gap": gaps, "margin": margins, "vnd_distance": distance,
                   "chi": chis, "max_chi": max(chis)}
    if not distance < problem.epsilon:
        diagnostics["constraint"] = 3
    elif not min(margins) > problem.gap_min:
        diagnostics["constraint"] = 4
    return diagnostics["constraint"] is None, diagnostics


def feasible(omega, Delta: float, rho0_list: Sequence[float], problem: OptProblem) -> Tuple[bool, Dict]:
    """
    Check the four design constraints for a candidate.

    Constraints 1-2 (simplex) are checked algebraically; 3 (pairwise VND
    sup-distance below epsilon) and 4 (tunnel margin, see exitchart.tunnel_margin,
    above gap_min at every SNR point) on the shared EXIT grid.

    Args:
        omega: Edge-view distribution, {degree: weight} mapping or weights
            aligned with problem.degree_set
        Delta: Sub-code B sizing
        rho0_list: One rho0 per SNR point, in problem.snr_points order
        problem: Search settings

    Returns:
        (flag, diagnostics) where diagnostics["constraint"] names the first
        violated constraint (None when feasible)
    """
    if len(rho0_list) != len(problem.snr_points):
        raise ValueError("One rho0 per SNR point is required")
    edge, violated = _to_edge(omega, problem.degree_set)
    if edge is None:
        return False, {"constraint": violated}
    return _evaluate(edge, Delta, rho0_list, problem.snr_points, problem)


def _beta_targets(degrees: Sequence[int]) -> Tuple[float, ...]:
    """Average check degrees to search, from the smallest to the largest allowed degree."""
    lo, hi = min(degrees), max(degrees)
    if lo == hi:
        return (float(lo),)
    return tuple(b for b in _frange(lo, hi, Config.OPT_BETA_STEP) if b <= hi)


def _seed_omega(degrees: Sequence[int], beta: float) -> np.ndarray:
    """Edge-view weights of the two-degree node distribution with mean beta."""
    d_lo = max(d for d in degrees if d <= beta + 1e-12)
    d_hi = min(d for d in degrees if d >= beta - 1e-12)
    node = {d_lo: 1.0} if d_lo == d_hi else {d_lo: (d_hi - beta) / (d_hi - d_lo),
                                              d_hi: (beta - d_lo) / (d_hi - d_lo)}
    return np.array([node.get(d, 0.0) * d / beta for d in degrees])


def _lp_round(problem: OptProblem, edge: DegreeDistribution, beta: float, Delta: float,
              rho0s: Sequence[float], sigmas: Sequence[float], grid: np.ndarray, basis: np.ndarray):
    """
    One linear program with the VND curves frozen at the lambda of `edge`:
    max t s.t. sum(omega) = 1, sum(omega_i / i) = 1/beta, omega >= 0 and
    sum_i omega_i g_i(I) - t (1 - I) >= 1 - VND(I) on every interior grid point and SNR,
    so t is the tunnel margin of the result.
    """
    degrees = problem.degree_set
    n = len(degrees)
    interior = grid < 1.0
    vnds = _vnd_curves(edge, Delta, rho0s, sigmas, problem, grid)
    slack = (1.0 - grid[interior])[:, None]
    a_ub = np.vstack([np.hstack([-basis, slack]) for _ in vnds])
    b_ub = np.concatenate([v.values[interior] - 1.0 for v in vnds])
    a_eq = [[1.0] * n + [0.0], [1.0 / d for d in degrees] + [0.0]]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    return linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0, 1.0 / beta],
                   bounds=[(0.0, 1.0)] * n + [(None, 1.0)], method="highs")


def _normalized(x: np.ndarray) -> np.ndarray:
    w = np.clip(x, 0.0, None)
    return w / w.sum()


def _solve_omega(problem: OptProblem, Delta: float, rho0s: Sequence[float],
                 sigmas: Sequence[float]) -> Tuple[bool, DegreeDistribution, Dict]:
    """
    Search omega at fixed (Delta, rho0s).

    Every average check degree beta on the search grid gets one linear program
    with lambda taken from a two-degree seed of that beta. The betas are then
    revisited in order of decreasing margin, each iterated to a fixed point
    (LP, re-derive lambda from the new omega, repeat) until one passes the
    feasibility check.
    """
    degrees = problem.degree_set
    grid = default_grid()
    basis = cnd_basis(degrees, grid)[grid < 1.0]

    scored = []
    for beta in _beta_targets(degrees):
        edge, _ = _to_edge(_seed_omega(degrees, beta), degrees)
        result = _lp_round(problem, edge, beta, Delta, rho0s, sigmas, grid, basis)
        if result.success:
            scored.append((-float(result.x[-1]), beta, _normalized(result.x[:len(degrees)])))
        else:
            logger.debug(f"LP failed at beta={beta}: {result.message}")
    if not scored:
        logger.warning(f"No linear program solved at Delta={Delta}, rho0={list(rho0s)}")
        return False, node_to_edge(parse_distribution(Config.DEFAULT_OMEGA)), {"constraint": 4, "rounds": 0}
    scored.sort(key=lambda item: (item[0], item[1]))

    fallback = None
    for neg_margin, beta, weights in scored:
        edge, _ = _to_edge(weights, degrees)
        rounds = 1
        for rounds in range(2, Config.OPT_MAX_ROUNDS + 1):
            result = _lp_round(problem, edge, beta, Delta, rho0s, sigmas, grid, basis)
            if not result.success:
                break
            new = _normalized(result.x[:len(degrees)])
            change = float(np.max(np.abs(new - weights)))
            weights = new
            edge, _ = _to_edge(weights, degrees)
            if change < Config.OPT_OMEGA_TOL:
                break
        else:
            logger.debug(f"Fixed point not reached in {rounds} rounds (beta={beta}, Delta={Delta})")

        ok, diagnostics = _evaluate(edge, Delta, rho0s, sigmas, problem)
        diagnostics["rounds"] = rounds
        diagnostics["beta"] = beta
        logger.debug(f"beta={beta}: constraint {diagnostics['constraint']}, margins {diagnostics['margin']}")
        if ok:
            return True, edge, diagnostics
        if fallback is None:
            fallback = (edge, diagnostics)
        if -neg_margin <= problem.gap_min:
            # remaining betas open no wider under frozen lambda
            break
    return False, fallback[0], fallback[1]


def _result(problem: OptProblem, edge: DegreeDistribution, Delta: float, rho0s: Sequence[float],
            diagnostics: Dict) -> OptResult:
    chis = [design_chi(s, Delta, r) for s, r in zip(problem.snr_points, rho0s)]
    return OptResult(edge, edge_to_node(edge), float(Delta), [float(r) for r in rho0s],
                     chis, max(chis), list(diagnostics.get("min_gap", [])))


def optimize(problem: OptProblem) -> OptResult:
    """
    Minimize max chi over the SNR points subject to the four design constraints.

    Stage 1 walks the SNR points from the lowest SNR up, finding for each the
    smallest-chi (Delta, rho0) pair that admits a feasible omega; the global
    Delta starts at the largest of those. Stage 2 enumerates joint rho0
    vectors (and larger Delta values) in increasing max chi and returns the
    first jointly feasible candidate.

    Raises:
        NoFeasibleError: no grid point admits a feasible omega
    """
    sigmas = problem.snr_points
    j_start = {s: capacity(s) for s in sigmas}
    single_cache: Dict[Tuple[int, float, float], bool] = {}

    def single_ok(z: int, Delta: float, rho0: float) -> bool:
        key = (z, Delta, rho0)
        if key not in single_cache:
            single_cache[key] = _solve_omega(problem, Delta, (rho0,), (sigmas[z],))[0]
        return single_cache[key]

    per_snr_delta = []
    for z, sigma in enumerate(sigmas):
        candidates = sorted(
            itertools.product(problem.delta_grid, problem.rho0_grid),
            key=lambda dr: (design_chi(sigma, *dr), dr[0], dr[1]),
        )
        found = next((dr for dr in candidates if single_ok(z, *dr)), None)
        if found is None:
            raise NoFeasibleError(f"No (Delta, rho0) admits an open tunnel at sigma_n={sigma}")
        logger.info(f"sigma_n={sigma}: Delta={found[0]}, rho0={found[1]}, chi={design_chi(sigma, *found):.4f}")
        per_snr_delta.append(found[0])

    delta_floor = max(per_snr_delta)
    joint = []
    for Delta in (d for d in problem.delta_grid if d >= delta_floor):
        for rho0s in itertools.product(problem.rho0_grid, repeat=len(sigmas)):
            max_chi = max(design_chi(s, Delta, r) for s, r in zip(sigmas, rho0s))
            joint.append((max_chi, Delta, rho0s))
    joint.sort()

    for max_chi, Delta, rho0s in joint:
        # VND(0) = (1-rho0) J(sigma_ch) whatever lambda is
        starts = [(1.0 - r) * j_start[s] for s, r in zip(sigmas, rho0s)]
        if max(starts) - min(starts) >= problem.epsilon:
            continue
        if not all(single_ok(z, Delta, r) for z, r in enumerate(rho0s)):
            continue
        ok, edge, diagnostics = _solve_omega(problem, Delta, rho0s, sigmas)
        if ok:
            result = _result(problem, edge, Delta, rho0s, diagnostics)
            logger.info(f"Optimizer result: Omega={result.Omega}, Delta={Delta}, "
                        f"rho0={result.rho0}, max_chi={result.max_chi:.4f}")
            return result
        logger.debug(f"Joint candidate Delta={Delta}, rho0={rho0s} fails constraint {diagnostics['constraint']}")

    raise NoFeasibleError("No jointly feasible (Delta, rho0) combination")


def grid_search_two_degree(problem: OptProblem, Delta: float, rho0_list: Sequence[float],
                           step: float = 0.025) -> OptResult:
    """
    Exhaustive search over node-view distributions with two nonzero degrees
    from problem.degree_set, weights on a `step` grid.

    Among feasible candidates the one with the widest smallest tunnel gap wins.

    Raises:
        NoFeasibleError: no two-degree candidate is feasible
    """
    best = None
    n_steps = int(round(1.0 / step))
    for lo, hi in itertools.combinations(problem.degree_set, 2):
        for k in range(1, n_steps):
            a = round(k * step, 10)
            Omega = DegreeDistribution.from_mapping({lo: a, hi: 1.0 - a}, NODE, CHECK)
            ok, diagnostics = feasible(Omega, Delta, rho0_list, problem)
            if not ok:
                continue
            margin = min(diagnostics["margin"])
            if best is None or margin > best[0]:
                best = (margin, node_to_edge(Omega), diagnostics)
    if best is None:
        raise NoFeasibleError(f"No two-degree distribution is feasible at Delta={Delta}, rho0={list(rho0_list)}")
    return _result(problem, best[1], Delta, rho0_list, best[2])
