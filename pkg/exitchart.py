"""
Rateless Toolkit - EXIT Chart Module
J-function and its inverse, VND / inverted CND transfer curves with the
zero-information mixture, tunnel analysis and the noise-threshold search.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, interpolate, optimize

from config import Config
from degdist import NODE, DegreeDistribution, node_to_edge, variable_dist_for
from errors import DistributionError, InfeasibleError
from logger import get_logger

logger = get_logger(__name__)

VND = "VND"
CND_INVERTED = "CND_INVERTED"

_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class ExitCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.grid.tolist(), self.values.tolist()))


def default_grid(points: Optional[int] = None) -> np.ndarray:
    return np.linspace(0.0, 1.0, points or Config.EXIT_GRID_POINTS)


def j_function(sigma: float) -> float:
    """
    Mutual information between a bit and a symmetric Gaussian LLR
    (mean sigma^2/2, variance sigma^2), by adaptive quadrature.

    Args:
        sigma: LLR standard deviation (>= 0, may be inf)

    Returns:
        J(sigma) in [0, 1]
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return 0.0
    if math.isinf(sigma):
        return 1.0
    mean = sigma ** 2 / 2.0
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)

    def integrand(mu):
        density = norm * math.exp(-((mu - mean) ** 2) / (2.0 * sigma ** 2))
        return density * np.logaddexp(0.0, -mu) / _LN2

    loss, _ = integrate.quad(integrand, mean - 10.0 * sigma, mean + 10.0 * sigma,
                             limit=200, epsabs=1e-12, epsrel=1e-12)
    return float(min(1.0, max(0.0, 1.0 - loss)))


def j_inverse(I: float) -> float:
    """
    sigma with J(sigma) = I, by bisection on j_function.

    J^-1(1) is +inf; callers treat it symbolically.
    """
    if I < 0 or I > 1:
        raise ValueError(f"Mutual information must lie in [0, 1], got {I}")
    if I == 0:
        return 0.0
    if I == 1:
        return math.inf
    hi = 1.0
    while j_function(hi) < I:
        hi *= 2.0
        if hi > 1e4:
            return math.inf
    return float(optimize.bisect(lambda s: j_function(s) - I, 0.0, hi, xtol=1e-10, maxiter=200))


class JTable:
    """
    Monotone (PCHIP) interpolation of the exact J on a uniform sigma grid,
    with the inverse taken on the strictly increasing part of the table.
    """

    def __init__(self, points: int, sigma_max: float):
        self.sigma_max = sigma_max
        sigma = np.linspace(0.0, sigma_max, points)
        values = np.array([j_function(s) for s in sigma])
        self._forward = interpolate.PchipInterpolator(sigma, values)
        # Quadrature noise near J = 1 makes the tail wobble; keep only new running maxima
        running = np.maximum.accumulate(values)
        increasing = np.concatenate([[True], values[1:] > running[:-1]]) & (values < 1.0 - 1e-13)
        self.i_max = float(values[increasing][-1])
        self._inverse = interpolate.PchipInterpolator(values[increasing], sigma[increasing])
        logger.debug(f"J table built: {points} points on [0, {sigma_max}], inverse up to I={self.i_max:.12f}")

    def j(self, sigma) -> np.ndarray:
        s = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
        out = np.ones_like(s)
        inside = s <= self.sigma_max
        out[inside] = np.clip(self._forward(s[inside]), 0.0, 1.0)
        return out.reshape(np.shape(sigma))

    def j_inv(self, info) -> np.ndarray:
        I = np.atleast_1d(np.asarray(info, dtype=np.float64))
        out = np.empty_like(I)
        out[I <= 0] = 0.0
        out[I >= 1] = np.inf
        inside = (I > 0) & (I <= self.i_max)
        out[inside] = self._inverse(I[inside])
        for idx in np.flatnonzero((I > self.i_max) & (I < 1)):
            out[idx] = j_inverse(float(I[idx]))
        return out.reshape(np.shape(info))


@lru_cache(maxsize=4)
def table(points: Optional[int] = None, sigma_max: Optional[float] = None) -> JTable:
    """Shared J table, built on first use."""
    return JTable(points or Config.J_TABLE_POINTS, sigma_max or Config.J_TABLE_SIGMA_MAX)


def _j(sigma, exact: bool):
    if exact:
        return np.vectorize(j_function, otypes=[float])(sigma)
    return table().j(sigma)


def _j_inv(info, exact: bool):
    if exact:
        return np.vectorize(j_inverse, otypes=[float])(info)
    return table().j_inv(info)


def _as_edge(d: DegreeDistribution) -> DegreeDistribution:
    return node_to_edge(d) if d.view == NODE else d


def _vnd_terms(lam: DegreeDistribution, sigma_ch: float, grid: np.ndarray, exact: bool
               ) -> Tuple[np.ndarray, np.ndarray]:
    """Per-grid sums over lambda of the channel-informed and zero-information VND outputs."""
    s = _j_inv(grid, exact)
    informed = np.zeros_like(grid)
    silent = np.zeros_like(grid)
    j_ch = float(_j(np.array([sigma_ch]), exact)[0])
    for d, weight in lam.entries:
        if d == 1:
            # No extrinsic edges: only the channel speaks
            informed += weight * j_ch
            continue
        with np.errstate(invalid="ignore"):
            arg_informed = np.where(np.isinf(s), np.inf, np.sqrt((d - 1) * s ** 2 + sigma_ch ** 2))
            arg_silent = np.where(np.isinf(s), np.inf, math.sqrt(d - 1) * s)
        informed += weight * _j(arg_informed, exact)
        silent += weight * _j(arg_silent, exact)
    return informed, silent


def vnd_curve(lam: DegreeDistribution, sigma_ch: float, rho0: float = 0.0,
              grid: Optional[np.ndarray] = None, exact: bool = False) -> ExitCurve:
    """
    VND transfer curve with a fraction rho0 of variables lacking channel information.

    I_out = (1-rho0) * sum_d lambda_d J(sqrt((d-1) J^-1(I_A)^2 + sigma_ch^2))
            + rho0 * sum_d lambda_d J(sqrt(d-1) J^-1(I_A))

    Args:
        lam: Variable degree distribution (edge view; node view is converted)
        sigma_ch: Channel LLR standard deviation, 2/sigma_n
        rho0: Zero-information fraction in [0, 1]
        grid: I_A samples (default 201 uniform points)
        exact: Use quadrature J instead of the interpolation table

    Returns:
        ExitCurve of kind VND
    """
    if not 0 <= rho0 <= 1:
        raise ValueError(f"rho0 must lie in [0, 1], got {rho0}")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    informed, silent = _vnd_terms(_as_edge(lam), sigma_ch, grid, exact)
    values = np.clip((1.0 - rho0) * informed + rho0 * silent, 0.0, 1.0)
    return ExitCurve(grid, values, VND)


def vnd_curve_unmixed(lam: DegreeDistribution, sigma_ch: float, grid: Optional[np.ndarray] = None,
                      exact: bool = False) -> ExitCurve:
    """Classic VND curve with channel information on every variable."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    s = _j_inv(grid, exact)
    values = np.zeros_like(grid)
    for d, weight in _as_edge(lam).entries:
        with np.errstate(invalid="ignore"):
            arg = np.where(np.isinf(s), np.inf if d > 1 else sigma_ch, np.sqrt((d - 1) * s ** 2 + sigma_ch ** 2))
        values += weight * _j(arg, exact)
    return ExitCurve(grid, np.clip(values, 0.0, 1.0), VND)


def cnd_basis(degrees: Sequence[int], grid: Optional[np.ndarray] = None, exact: bool = False) -> np.ndarray:
    """
    Matrix g[k, i] = J(J^-1(1 - I_k) / sqrt(degrees[i] - 1)).

    The inverted CND curve of an edge distribution omega is 1 - g @ omega.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    s = _j_inv(1.0 - grid, exact)
    cols = []
    for i in degrees:
        if i < 2:
            raise DistributionError(f"Check degree {i} below 2")
        cols.append(_j(s / math.sqrt(i - 1), exact))
    return np.column_stack(cols)


def cnd_inverted_curve(omega: DegreeDistribution, grid: Optional[np.ndarray] = None,
                       exact: bool = False) -> ExitCurve:
    """I_C-in(I_E) = 1 - sum_i omega_i J(J^-1(1 - I_E) / sqrt(i - 1))."""
    omega = _as_edge(omega)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    basis = cnd_basis([d for d, _ in omega.entries], grid, exact)
    values = np.clip(1.0 - basis @ omega.probs, 0.0, 1.0)
    return ExitCurve(grid, values, CND_INVERTED)


def tunnel_gap(vnd: ExitCurve, cnd: ExitCurve) -> Tuple[bool, float]:
    """
    Smallest vertical distance VND - CND over the grid, leaving out I = 1 where
    both curves meet.

    Returns:
        (open, min_gap) with open = min_gap > 0
    """
    if vnd.grid.shape != cnd.grid.shape or not np.allclose(vnd.grid, cnd.grid):
        raise ValueError("Curves must share one grid")
    interior = vnd.grid < 1.0
    diff = (vnd.values - cnd.values)[interior]
    min_gap = float(diff.min()) if diff.size else 0.0
    return min_gap > 0, min_gap


def tunnel_margin(vnd: ExitCurve, cnd: ExitCurve) -> float:
    """
    Smallest gap relative to the distance from the (1, 1) corner,
    min over I < 1 of (VND - CND) / (1 - I).

    Both curves meet at I = 1, so the raw gap goes to zero linearly there.
    """
    if vnd.grid.shape != cnd.grid.shape or not np.allclose(vnd.grid, cnd.grid):
        raise ValueError("Curves must share one grid")
    interior = vnd.grid < 1.0
    scaled = (vnd.values - cnd.values)[interior] / (1.0 - vnd.grid[interior])
    return float(scaled.min()) if scaled.size else 0.0


def curve_distance(a: ExitCurve, b: ExitCurve) -> float:
    """Sup-norm distance between two curves on the same grid."""
    return float(np.max(np.abs(a.values - b.values)))


@dataclass(frozen=True)
class ReceptionPoint:
    """Decoder view after M = K/R scheduled symbols."""

    M: int
    L_rx: int
    K_prime: int
    rho0: float


def reception_at_rate(K: int, R: float, Delta: float) -> ReceptionPoint:
    """
    Walk the schedule for M = K/R symbols: encoded symbols of sub-codes A and B
    first, then message symbols, then sub-code D.
    """
    M = int(round(K / R))
    boundary = math.floor(K * (1 + Delta) + 1e-9)
    if M <= boundary:
        L_rx, K_prime = M, K
    else:
        n_message = min(K, M - boundary)
        L_rx = boundary + max(0, M - boundary - K)
        K_prime = K - n_message
    return ReceptionPoint(M, L_rx, K_prime, K_prime / (K + L_rx))


def threshold(Omega: DegreeDistribution, R: float, Delta: float, K: Optional[int] = None,
              model: Optional[str] = None, tol: float = 0.002, sigma_floor: float = 0.05,
              grid: Optional[np.ndarray] = None, seed: Optional[int] = None) -> float:
    """
    Largest noise level whose EXIT tunnel stays open at code rate R.

    Args:
        Omega: Check degree distribution (node view)
        R: Code rate; the receiver holds M = K/R scheduled symbols
        Delta: Sub-code B sizing of the schedule
        K: Design message length (Config.DESIGN_K by default)
        model: Variable-degree model, "empirical" or "regular"
        tol: Bisection tolerance on sigma_n
        sigma_floor: Lowest noise level tried
        seed: Construction seed for the empirical variable model (Config.DEFAULT_SEED by default)

    Returns:
        sigma_th

    Raises:
        InfeasibleError: tunnel closed even at sigma_floor
    """
    if not 0 < R < 1:
        raise ValueError(f"Rate must lie in (0, 1), got {R}")
    K = K or Config.DESIGN_K
    grid = default_grid() if grid is None else grid
    point = reception_at_rate(K, R, Delta)
    lam = variable_dist_for(Omega, K, point.L_rx, model=model, seed=seed)
    cnd = cnd_inverted_curve(Omega, grid)

    def is_open(sigma_n: float) -> bool:
        return tunnel_gap(vnd_curve(lam, 2.0 / sigma_n, point.rho0, grid), cnd)[0]

    if not is_open(sigma_floor):
        raise InfeasibleError(f"Tunnel closed at sigma_n={sigma_floor} for R={R}")

    lo, hi = sigma_floor, 1.0
    while is_open(hi):
        lo, hi = hi, hi * 2.0
        if hi > 64.0:
            return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_open(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"Threshold for {Omega} at R={R}: sigma_th={lo:.4f} (rho0={point.rho0:.3f}, L_rx={point.L_rx})")
    return lo
