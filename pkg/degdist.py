"""
Rateless Toolkit - Degree Distribution Module
Node/edge-view degree distributions, the polynomial literal syntax, sampling,
and the variable-node distribution models used by the EXIT analysis.
"""

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from errors import DistributionError
from logger import get_logger

logger = get_logger(__name__)

NODE = "node"
EDGE = "edge"
CHECK = "check"
VARIABLE = "variable"

SUM_TOLERANCE = 1e-12
# Literals such as "0.1x^2 + 0.4x^3 + 0.5x^6" do not sum to exactly 1.0 in floating point.
PARSE_TOLERANCE = 1e-9

_TERM = re.compile(r"^([0-9]*\.?[0-9]*(?:[eE]-?[0-9]+)?)\*?(x(?:\^([0-9]+))?)?$")


@dataclass(frozen=True)
class DegreeDistribution:
    """
    Degree probabilities for check or variable nodes, from the node or edge perspective.

    `entries` holds (degree, probability) pairs with unique, increasing degrees.
    """

    view: str
    entries: Tuple[Tuple[int, float], ...]
    kind: str = CHECK
    max_degree: Optional[int] = None

    def __post_init__(self):
        if self.view not in (NODE, EDGE):
            raise DistributionError(f"Unknown view: {self.view}")
        if self.kind not in (CHECK, VARIABLE):
            raise DistributionError(f"Unknown kind: {self.kind}")
        if not self.entries:
            raise DistributionError("Distribution has no entries")
        degrees = [d for d, _ in self.entries]
        if any(a >= b for a, b in zip(degrees, degrees[1:])):
            raise DistributionError(f"Degrees must be unique and increasing: {degrees}")
        min_degree = 2 if self.kind == CHECK else 0
        if degrees[0] < min_degree:
            raise DistributionError(f"{self.kind} degree {degrees[0]} below minimum {min_degree}")
        if self.max_degree is not None and degrees[-1] > self.max_degree:
            raise DistributionError(f"Degree {degrees[-1]} exceeds maximum {self.max_degree}")
        probs = [p for _, p in self.entries]
        if any(p < 0 or p > 1 for p in probs):
            raise DistributionError(f"Probabilities must lie in [0, 1]: {probs}")
        if abs(math.fsum(probs) - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"Probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float], view: str = NODE, kind: str = CHECK,
                     max_degree: Optional[int] = None, normalize: bool = True) -> "DegreeDistribution":
        """
        Build from {degree: probability}; zero-probability degrees are dropped.

        With normalize=True the weights are rescaled to sum exactly to 1.
        """
        items = sorted((int(d), float(p)) for d, p in mapping.items() if p != 0)
        if any(p < 0 for _, p in items):
            raise DistributionError(f"Negative probability in {dict(items)}")
        if normalize and items:
            total = math.fsum(p for _, p in items)
            if total <= 0:
                raise DistributionError("Distribution has no mass")
            items = [(d, p / total) for d, p in items]
        return cls(view, tuple(items), kind, max_degree)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([d for d, _ in self.entries], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.entries], dtype=np.float64)

    def as_dict(self) -> Dict[int, float]:
        return dict(self.entries)

    def mean(self) -> float:
        return math.fsum(d * p for d, p in self.entries)

    def __str__(self):
        return format_distribution(self)


def parse_distribution(text: str, kind: str = CHECK, max_degree: Optional[int] = None) -> DegreeDistribution:
    """
    Parse a node-view polynomial literal such as "0.475*x^3 + 0.525*x^6".

    Whitespace is ignored, the "*" is optional and repeated degrees are summed.

    Args:
        text: Polynomial literal
        kind: "check" (minimum degree 2) or "variable"
        max_degree: Optional declared maximum degree

    Returns:
        Node-view DegreeDistribution

    Raises:
        DistributionError: on malformed terms or invariant violations
    """
    compact = re.sub(r"\s+", "", text or "")
    if not compact:
        raise DistributionError("Empty distribution literal")

    mapping: Dict[int, float] = {}
    for term in compact.split("+"):
        match = _TERM.match(term)
        if not term or not match or (not match.group(1) and not match.group(2)):
            raise DistributionError(f"Cannot parse term '{term}' in '{text}'")
        coef_text, x_part, power = match.groups()
        coef = float(coef_text) if coef_text else 1.0
        degree = 0 if not x_part else (int(power) if power else 1)
        mapping[degree] = mapping.get(degree, 0.0) + coef

    if kind == CHECK and any(d < 2 and p != 0 for d, p in mapping.items()):
        raise DistributionError(f"Check degrees must be at least 2: '{text}'")
    total = math.fsum(mapping.values())
    if abs(total - 1.0) > PARSE_TOLERANCE:
        raise DistributionError(f"Coefficients of '{text}' sum to {total}, not 1")
    return DegreeDistribution.from_mapping(mapping, NODE, kind, max_degree)


def format_distribution(d: DegreeDistribution) -> str:
    """Render as a polynomial literal that parse_distribution reads back."""
    return " + ".join(f"{p:.12g}*x^{deg}" for deg, p in d.entries)


def node_to_edge(d: DegreeDistribution) -> DegreeDistribution:
    """omega_i = Omega_i * i / beta, beta being the average node degree."""
    if d.view != NODE:
        raise DistributionError("node_to_edge expects a node-view distribution")
    beta = d.mean()
    mapping = {deg: p * deg / beta for deg, p in d.entries if deg > 0}
    return DegreeDistribution.from_mapping(mapping, EDGE, d.kind, d.max_degree)


def edge_to_node(d: DegreeDistribution) -> DegreeDistribution:
    """Omega_i proportional to omega_i / i."""
    if d.view != EDGE:
        raise DistributionError("edge_to_node expects an edge-view distribution")
    mapping = {deg: p / deg for deg, p in d.entries}
    return DegreeDistribution.from_mapping(mapping, NODE, d.kind, d.max_degree)


def average_degree(d: DegreeDistribution) -> float:
    """Average node degree (beta for checks, alpha for variables)."""
    if d.view == EDGE:
        return 1.0 / math.fsum(p / deg for deg, p in d.entries)
    return d.mean()


def sample_degree(d: DegreeDistribution, rng: np.random.Generator) -> int:
    """Draw one degree with probability Omega_i (node view)."""
    return int(sample_degrees(d, rng, 1)[0])


def sample_degrees(d: DegreeDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    if d.view != NODE:
        raise DistributionError("Degrees are sampled from the node view")
    cdf = np.cumsum(d.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return d.degrees[np.minimum(idx, len(cdf) - 1)]


def variable_dist_regular_approx(omega: DegreeDistribution, K: int, L: int
                                 ) -> Tuple[DegreeDistribution, DegreeDistribution]:
    """
    Near-regular variable-degree model: mass on the two integers around
    alpha = beta*L/(K+L), weighted so that the mean equals alpha exactly.

    Returns:
        (node view, edge view)
    """
    if L < 1:
        raise DistributionError("L must be at least 1")
    alpha = average_degree(omega) * L / (K + L)
    lo = math.floor(alpha)
    frac = alpha - lo
    if frac < 1e-12:
        mapping = {lo: 1.0}
    else:
        mapping = {lo: 1.0 - frac, lo + 1: frac}
    node = DegreeDistribution.from_mapping(mapping, NODE, VARIABLE)
    return node, node_to_edge(node)


def variable_dist_empirical(spec, L: int, trials: int) -> DegreeDistribution:
    """
    Mean variable-degree histogram over `trials` independent constructions.

    Trial t rebuilds the graph from spec with a seed derived from (spec.seed, t),
    truncated to L checks.

    Args:
        spec: CodeSpec providing K, Omega, d_max and the master seed
        L: Number of encoded symbols (checks) in each construction
        trials: Number of constructions to average

    Returns:
        Node-view variable DegreeDistribution
    """
    if trials < 1:
        raise DistributionError("trials must be at least 1")
    return _empirical_cached(spec, int(L), int(trials))


@lru_cache(maxsize=512)
def _empirical_cached(spec, L: int, trials: int) -> DegreeDistribution:
    from construct import build_graph, derive_seed

    counts = np.zeros(spec.d_max + 1, dtype=np.int64)
    for t in range(trials):
        trial_spec = spec.replace(seed=derive_seed(spec.seed, t), L_total=max(L, spec.K))
        graph = build_graph(trial_spec).truncate(L)
        counts += np.bincount(graph.var_degrees, minlength=spec.d_max + 1)[: spec.d_max + 1]
    node = DegreeDistribution.from_mapping(
        {d: c / counts.sum() for d, c in enumerate(counts) if c}, NODE, VARIABLE, spec.d_max
    )
    logger.debug(f"Empirical variable distribution (K={spec.K}, L={L}, trials={trials}): mean {node.mean():.4f}")
    return node


def variable_dist_for(omega: DegreeDistribution, K: int, L: int, model: Optional[str] = None,
                      seed: Optional[int] = None, trials: Optional[int] = None,
                      d_max: Optional[int] = None) -> DegreeDistribution:
    """
    Edge-view variable distribution for K message and L encoded symbols, using the
    configured model ("empirical" or "regular").
    """
    from config import Config

    model = model or Config.VARIABLE_MODEL
    if model == "regular":
        return variable_dist_regular_approx(omega, K, L)[1]
    if model != "empirical":
        raise DistributionError(f"Unknown variable model: {model}")

    from construct import CodeSpec

    spec = CodeSpec(
        K=K,
        delta=max(L / K - 1.0, 1e-9),
        omega=omega,
        seed=Config.DEFAULT_SEED if seed is None else seed,
        d_max=d_max or Config.DEFAULT_D_MAX,
        L_total=max(L, K),
    )
    node = variable_dist_empirical(spec, L, trials or Config.EMPIRICAL_TRIALS)
    return node_to_edge(node)
