"""
Rateless Toolkit - Codec Module
Encoding from the Tanner graph, reverse-systematic scheduling (sub-codes A, B,
C and D), incremental reception bookkeeping and the flooding sum-product decoder.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from construct import CodeSpec, TannerGraph
from errors import DuplicateSymbolError
from gf2 import solve_noiseless
from logger import get_logger

logger = get_logger(__name__)

STREAM_HEADER = ["index", "subcode", "y_value"]


def encode_all(graph: TannerGraph, message: Sequence[int]) -> np.ndarray:
    """
    Compute every encoded bit: bit K+l is the XOR of the other variables of check l.

    Checks are processed in order; the lower-triangular encoded part means each
    check only reads message bits and encoded bits already computed.

    Returns:
        uint8 array of length graph.L
    """
    msg = np.asarray(message, dtype=np.uint8) & 1
    if msg.shape[0] != graph.K:
        raise ValueError(f"Message length {msg.shape[0]} != K={graph.K}")
    word = np.zeros(graph.n_vars, dtype=np.uint8)
    word[: graph.K] = msg
    K = graph.K
    for l, check in enumerate(graph.checks):
        own = K + l
        if check[-1] != own:
            raise ValueError(f"Check {l} does not end with its encoded symbol {own}")
        parity = 0
        for v in check[:-1]:
            parity ^= int(word[v])
        word[own] = parity
    return word[K:]


@dataclass(frozen=True)
class TransmissionSchedule:
    """
    Reverse-systematic transmission order over variable indices.

    A: encoded 1..K, B: encoded K+1..floor(K(1+Delta)), C: message 1..K,
    D: the remaining encoded symbols up to L_total.
    """

    K: int
    boundary: int
    L_total: int
    block_size: int = 1

    @property
    def sizes(self) -> Tuple[int, int, int, int]:
        a = min(self.K, self.L_total)
        b = max(0, min(self.boundary, self.L_total) - a)
        return a, b, self.K, max(0, self.L_total - a - b)

    @property
    def order(self) -> np.ndarray:
        a, b, c, d = self.sizes
        K = self.K
        return np.concatenate([
            np.arange(K, K + a + b, dtype=np.int64),
            np.arange(0, c, dtype=np.int64),
            np.arange(K + a + b, K + a + b + d, dtype=np.int64),
        ])

    def __len__(self):
        return sum(self.sizes)

    def subcode_of(self, index: int) -> str:
        a, b, _, _ = self.sizes
        if index < self.K:
            return "C"
        position = index - self.K
        if position < a:
            return "A"
        if position < a + b:
            return "B"
        return "D"

    def first(self, M: int) -> np.ndarray:
        """Variable indices of the first M scheduled symbols."""
        if M > len(self):
            raise ValueError(f"Schedule holds {len(self)} symbols, {M} requested")
        return self.order[:M]

    def blocks(self, M: Optional[int] = None) -> Iterator[np.ndarray]:
        """Yield the (first M) scheduled indices in block_size chunks."""
        order = self.order if M is None else self.first(M)
        for start in range(0, len(order), self.block_size):
            yield order[start:start + self.block_size]


def encoded_in_prefix(K: int, boundary: int, M: int) -> int:
    """Encoded symbols among the first M of an unbounded schedule."""
    if M <= boundary:
        return M
    if M <= boundary + K:
        return boundary
    return M - K


def schedule(spec: CodeSpec, block_size: int = 1) -> TransmissionSchedule:
    return TransmissionSchedule(spec.K, spec.boundary, spec.L_total, block_size)


@dataclass
class ReceptionState:
    """Channel LLRs gathered so far; unreceived variables hold exactly 0."""

    K: int
    L_total: int
    llr: np.ndarray = field(default=None, repr=False)
    received: np.ndarray = field(default=None, repr=False)
    L_rx: int = 0
    K_prime: int = 0

    def __post_init__(self):
        n = self.K + self.L_total
        if self.llr is None:
            self.llr = np.zeros(n, dtype=np.float64)
        if self.received is None:
            self.received = np.zeros(n, dtype=bool)
        self.L_rx = int(self.received[self.K:].sum())
        self.K_prime = self.K - int(self.received[: self.K].sum())

    @property
    def rho0(self) -> float:
        """Fraction of decoder variables without channel information, K'/(K+L_rx)."""
        return self.K_prime / (self.K + self.L_rx)

    def hard_known(self) -> dict:
        """Received variables as {index: bit} by LLR sign."""
        idx = np.flatnonzero(self.received)
        return {int(v): int(self.llr[v] < 0) for v in idx}


def receive(state: ReceptionState, symbol_index: int, llr_value: float) -> ReceptionState:
    """
    Record one received symbol.

    Raises:
        DuplicateSymbolError: the symbol was already received
    """
    v = int(symbol_index)
    if state.received[v]:
        raise DuplicateSymbolError(f"Symbol {v} received twice")
    state.received[v] = True
    state.llr[v] = float(llr_value)
    if v < state.K:
        state.K_prime -= 1
    else:
        state.L_rx += 1
    return state


def receive_many(state: ReceptionState, indices: Sequence[int], llr_values: Sequence[float]) -> ReceptionState:
    """Vectorized receive for a block of distinct symbols."""
    idx = np.asarray(indices, dtype=np.int64)
    if len(np.unique(idx)) != len(idx) or state.received[idx].any():
        raise DuplicateSymbolError("Block repeats a symbol or contains one already received")
    state.received[idx] = True
    state.llr[idx] = np.asarray(llr_values, dtype=np.float64)
    n_message = int((idx < state.K).sum())
    state.K_prime -= n_message
    state.L_rx += len(idx) - n_message
    return state


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int
    posterior: np.ndarray = field(repr=False)


def active_checks(graph: TannerGraph, state: ReceptionState) -> np.ndarray:
    """Checks whose own encoded symbol has been received."""
    own = graph.K + np.arange(graph.L)
    return np.flatnonzero(state.received[own])


def _check_tanh_rule(chk, v2c, c2v, n_checks):
    """Debug assertion: |c2v| never exceeds the smallest other incoming |v2c|."""
    mags = np.abs(v2c)
    for c in range(n_checks):
        edges = np.flatnonzero(chk == c)
        for e in edges:
            others = mags[edges[edges != e]]
            if others.size and abs(c2v[e]) > others.min() + 1e-9:
                raise AssertionError(f"tanh rule violated on check {c}: {abs(c2v[e])} > {others.min()}")


def bp_decode(graph: TannerGraph, state: ReceptionState, max_iters: Optional[int] = None,
              early_stop: bool = True) -> DecodeResult:
    """
    Flooding sum-product decoding over the checks with received encoded symbols.

    Variable-to-check messages start at the channel LLR (0 for unreceived
    symbols). The check update is the tanh rule in the log domain; magnitudes
    are clipped at Config.LLR_MAX inside tanh/atanh.

    Args:
        graph: Tanner graph (may hold more checks than were received)
        state: Reception state over at least graph.n_vars variables
        max_iters: Iteration cap (Config.BP_MAX_ITERS by default)
        early_stop: Stop once hard decisions satisfy every active check

    Returns:
        DecodeResult with message hard decisions, convergence flag,
        iterations used and per-variable posterior LLRs
    """
    max_iters = max_iters or Config.BP_MAX_ITERS
    llr_max = Config.LLR_MAX
    p_max = np.tanh(llr_max / 2.0)
    n = graph.n_vars
    llr_ch = np.clip(state.llr[:n], -llr_max, llr_max)

    active = active_checks(graph, state)
    chk_all, var_all = graph.edges
    keep = np.isin(chk_all, active)
    # Renumber active checks 0..len(active)-1 so bincounts stay small
    remap = np.full(graph.L, -1, dtype=np.int64)
    remap[active] = np.arange(len(active))
    chk = remap[chk_all[keep]]
    var = var_all[keep]
    n_checks = len(active)

    if n_checks == 0:
        total = llr_ch.copy()
        return DecodeResult((total[: graph.K] < 0).astype(np.uint8), True, 0, total)

    v2c = llr_ch[var]
    total = llr_ch.copy()
    converged = False
    iterations = 0

    for iterations in range(1, max_iters + 1):
        t = np.tanh(np.clip(v2c, -llr_max, llr_max) / 2.0)
        mag = np.abs(t)
        zero = mag == 0.0
        log_mag = np.log(np.where(zero, 1.0, mag))
        negative = t < 0

        sum_log = np.bincount(chk, weights=log_mag, minlength=n_checks)
        n_zero = np.bincount(chk, weights=zero, minlength=n_checks)
        n_neg = np.bincount(chk, weights=negative, minlength=n_checks)

        excl_mag = np.where(n_zero[chk] - zero > 0, 0.0, np.exp(sum_log[chk] - log_mag))
        excl_sign = np.where((n_neg[chk] - negative) % 2 == 1, -1.0, 1.0)
        c2v = 2.0 * np.arctanh(np.clip(excl_sign * excl_mag, -p_max, p_max))

        if Config.DEBUG_MODE:
            _check_tanh_rule(chk, v2c, c2v, n_checks)

        total = llr_ch + np.bincount(var, weights=c2v, minlength=n)
        v2c = total[var] - c2v

        if early_stop:
            hard = (total < 0).astype(np.int64)
            if not np.any(np.bincount(chk, weights=hard[var], minlength=n_checks).astype(np.int64) % 2):
                converged = True
                break

    if not early_stop:
        hard = (total < 0).astype(np.int64)
        converged = not np.any(np.bincount(chk, weights=hard[var], minlength=n_checks).astype(np.int64) % 2)

    return DecodeResult((total[: graph.K] < 0).astype(np.uint8), converged, iterations, total)


def decode_noiseless(graph: TannerGraph, known: Union[Mapping[int, int], ReceptionState]) -> np.ndarray:
    """
    Solve for the message exactly from error-free received symbols.

    Uses GF(2) elimination over the checks whose encoded symbol is known; the
    buffer-bin construction makes the first K of them full rank.

    Raises:
        InsufficientRankError: received checks do not pin down the message
        InconsistentSystemError: known values contradict a check
    """
    if isinstance(known, ReceptionState):
        known = known.hard_known()
    K = graph.K
    rows = [l for l in range(graph.L) if (K + l) in known]
    sub = graph.H.take_rows(rows)
    used_encoded = sorted({v for r in rows for v in graph.checks[r] if v >= K})
    columns = list(range(K)) + used_encoded
    reduced = sub.take_cols(columns)
    assignment = [known.get(c, -1) for c in columns]
    solution = solve_noiseless(reduced, knowns=assignment)
    return solution[:K]


def write_symbol_stream(path: Union[str, Path], records: Sequence[Tuple[int, str, float]]) -> Path:
    """Write `index,subcode,y_value` rows."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(STREAM_HEADER)
        for index, subcode, y in records:
            writer.writerow([int(index), subcode, repr(float(y))])
    logger.debug(f"Wrote {len(records)} symbols to {path}")
    return path


def read_symbol_stream(path: Union[str, Path]) -> List[Tuple[int, str, float]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [(int(row["index"]), row["subcode"], float(row["y_value"])) for row in reader]
