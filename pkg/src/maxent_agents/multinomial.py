"""Multinomial counts, partial-information views, and the die-roll simulator.

The likelihood of a full count vector m under side probabilities theta is
the multinomial pmf.  An agent that sees only a subset V of the counts
works with the marginal likelihood obtained by summing over every possible
completion of the hidden counts; that sum collapses to a single aggregated
multinomial term

    n! / (prod_{i in V} m_i! * (n - M_V)!) *
        prod_{i in V} theta_i^{m_i} * (1 - sum_{i in V} theta_i)^{n - M_V},

which is what `log_view_likelihood` evaluates.  Enumeration of hidden
completions is never used outside test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gammaln, xlogy

from .simplex import ThetaPoint, dirichlet_sampler

IMPOSSIBLE_LOG_PROB = float("-inf")

LOG_FACTORIAL_TABLE_MAX = 10**6
_log_factorial_table = gammaln(np.arange(1024, dtype=float) + 1.0)


def log_factorial(n):
    """log(n!) via a cached table, falling back to log-Gamma above the cap.

    The table entries are log-Gamma values themselves, so table and fallback
    agree identically wherever both apply.  n may be a scalar or an array.
    """
    global _log_factorial_table
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("factorial argument must be >= 0")
    top = int(arr.max(initial=0))
    if top >= _log_factorial_table.size and top < LOG_FACTORIAL_TABLE_MAX:
        size = _log_factorial_table.size
        while size <= top:
            size *= 2
        _log_factorial_table = gammaln(
            np.arange(min(size, LOG_FACTORIAL_TABLE_MAX + 1), dtype=float) + 1.0
        )
    if top < _log_factorial_table.size:
        out = _log_factorial_table[arr]
    else:
        out = gammaln(np.asarray(arr, dtype=float) + 1.0)
    return float(out) if np.isscalar(n) or arr.ndim == 0 else out


@dataclass(frozen=True)
class CountVector:
    """Observed roll counts per side; n is their total."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) < 2:
            raise ValueError("need at least 2 sides")
        if any(c < 0 or c != int(c) for c in self.counts):
            raise ValueError(f"counts must be non-negative integers, got {self.counts}")

    @classmethod
    def of(cls, values: Iterable[int]) -> "CountVector":
        return cls(tuple(int(v) for v in values))

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class AgentView:
    """The count components visible to one agent.

    `visible` maps 1-based side indices to their observed counts; the total
    roll count n is known globally even when no counts are visible.  The
    view may be empty (no data) or cover all k sides (full information).
    """

    k: int
    n: int
    visible: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        sides = [s for s, _ in self.visible]
        if len(set(sides)) != len(sides):
            raise ValueError(f"visible sides must be distinct, got {sides}")
        if any(s < 1 or s > self.k for s in sides):
            raise ValueError(f"visible sides must lie in [1, {self.k}], got {sides}")
        if any(c < 0 for _, c in self.visible):
            raise ValueError("visible counts must be >= 0")
        if sum(c for _, c in self.visible) > self.n:
            raise ValueError(
                f"visible counts sum to {sum(c for _, c in self.visible)} > n={self.n}"
            )
        if list(self.visible) != sorted(self.visible):
            raise ValueError("visible must be sorted by side index")

    @classmethod
    def from_mapping(cls, k: int, n: int, visible: Mapping[int, int]) -> "AgentView":
        items = tuple(sorted((int(s), int(c)) for s, c in visible.items()))
        return cls(k=k, n=n, visible=items)

    @classmethod
    def full(cls, counts: CountVector) -> "AgentView":
        return cls.from_mapping(
            counts.k, counts.n, {i + 1: c for i, c in enumerate(counts.counts)}
        )

    @classmethod
    def empty(cls, k: int, n: int) -> "AgentView":
        return cls(k=k, n=n, visible=())

    def as_dict(self) -> dict[int, int]:
        return dict(self.visible)

    @property
    def visible_sides(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.visible)

    @property
    def visible_total(self) -> int:
        return int(sum(c for _, c in self.visible))

    @property
    def is_full(self) -> bool:
        return len(self.visible) == self.k


def _theta_array(theta, k: int) -> np.ndarray:
    arr = theta.as_array() if isinstance(theta, ThetaPoint) else ThetaPoint.of(theta).as_array()
    if arr.size != k:
        raise ValueError(f"theta has {arr.size} components, expected {k}")
    return arr


def log_multinomial(m: CountVector, theta) -> float:
    """log multinomial pmf of counts m at side probabilities theta.

    Result is <= 0; a zero theta component with a positive count yields
    IMPOSSIBLE_LOG_PROB (-inf) rather than a floating-point error.
    xlogy supplies the 0*log(0) = 0 convention.
    """
    t = _theta_array(theta, m.k)
    counts = m.as_array()
    # Sorted reductions make the result exactly invariant under joint
    # permutations of (m, theta).
    coef = log_factorial(m.n) - float(np.sum(np.sort(log_factorial(counts))))
    with np.errstate(divide="ignore"):
        return float(coef + np.sum(np.sort(xlogy(counts.astype(float), t))))


def log_view_likelihood(view: AgentView, theta) -> float:
    """log probability of the visible counts, hidden counts summed out.

    Equals the log-sum of the full multinomial pmf over all completions of
    the hidden counts, evaluated in closed aggregated form.  An empty view
    carries no information and returns 0 (probability 1).
    """
    t = _theta_array(theta, view.k)
    if not view.visible:
        return 0.0
    sides = np.asarray(view.visible_sides, dtype=np.int64) - 1
    mv = np.asarray([c for _, c in view.visible], dtype=np.int64)
    rest_count = view.n - int(mv.sum())
    coef = (
        log_factorial(view.n)
        - float(np.sum(log_factorial(mv)))
        - log_factorial(rest_count)
    )
    theta_rest = max(1.0 - float(t[sides].sum()), 0.0)
    with np.errstate(divide="ignore"):
        val = coef + np.sum(xlogy(mv.astype(float), t[sides]))
        val += xlogy(float(rest_count), theta_rest)
    return float(val)


def view_log_likelihood_nodes(view: AgentView, nodes: np.ndarray) -> np.ndarray:
    """Vectorized `log_view_likelihood` over an (N, k) array of interior points."""
    if nodes.shape[1] != view.k:
        raise ValueError(f"nodes have {nodes.shape[1]} components, expected {view.k}")
    if not view.visible:
        return np.zeros(nodes.shape[0])
    sides = np.asarray(view.visible_sides, dtype=np.int64) - 1
    mv = np.asarray([c for _, c in view.visible], dtype=float)
    rest_count = view.n - float(mv.sum())
    out = np.full(
        nodes.shape[0],
        log_factorial(view.n)
        - float(np.sum(log_factorial(mv.astype(np.int64))))
        - log_factorial(int(rest_count)),
    )
    out += xlogy(mv, nodes[:, sides]).sum(axis=1)
    if rest_count > 0:
        rest = np.maximum(1.0 - nodes[:, sides].sum(axis=1), 0.0)
        out += xlogy(rest_count, rest)
    return out


def simulate_rolls(theta_true, n: int, seed: int) -> CountVector:
    """Roll the die n times: counts ~ Multinomial(n, theta_true), seeded."""
    if n < 0:
        raise ValueError("n must be >= 0")
    t = theta_true.as_array() if isinstance(theta_true, ThetaPoint) else ThetaPoint.of(theta_true).as_array()
    rng = dirichlet_sampler(seed)
    counts = rng.multinomial(n, t / t.sum())
    return CountVector.of(counts)
