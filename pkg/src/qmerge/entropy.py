"""Entropic quantities in bits, with signed conditional and coherent
information.

Every function accepts either a :class:`DensityOperator` or a
:class:`PureState`; pure inputs are reduced without forming the global
projector, and the entropy of a full pure state is the entropy of the
smaller half of any bipartition (zero for the whole system).
"""

from __future__ import annotations

import numpy as np

from .core import (
    DensityOperator,
    Labels,
    PureState,
    State,
    as_labels,
    partial_trace,
    reduced_density,
)


def _entropy_of_eigenvalues(lam: np.ndarray) -> float:
    lam = np.clip(lam, 0.0, None)
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum())


def von_neumann_entropy(rho: State) -> float:
    """S(ρ) = −Tr ρ log2 ρ, with drift eigenvalues clamped and 0·log 0 = 0."""
    if isinstance(rho, PureState):
        return 0.0
    return _entropy_of_eigenvalues(np.linalg.eigvalsh(rho.matrix))


def subset_entropy(state: State, labels: Labels) -> float:
    """Entropy of the reduced state on ``labels``.

    For a pure global state the complement side is used when smaller; the
    two agree by purification duality.
    """
    subset = state.layout.check_subset(labels)
    if isinstance(state, DensityOperator):
        if set(subset) == set(state.layout.labels):
            return von_neumann_entropy(state)
        return von_neumann_entropy(partial_trace(state, subset))
    rest = tuple(l for l in state.layout.labels if l not in set(subset))
    if not rest:
        return 0.0
    side = subset if state.layout.dim_of(subset) <= state.layout.dim_of(rest) else rest
    return von_neumann_entropy(reduced_density(state, side))


def _disjoint(state: State, a: Labels, b: Labels) -> tuple[tuple[str, ...], tuple[str, ...]]:
    a_t = state.layout.check_subset(a, "first label set")
    b_t = state.layout.check_subset(b, "second label set")
    overlap = set(a_t) & set(b_t)
    if overlap:
        raise ValueError(f"label sets overlap on {sorted(overlap)}")
    return a_t, b_t


def conditional_entropy(state: State, of: Labels, given: Labels) -> float:
    """S(A|B) = S(AB) − S(B); signed, negative for entangled states."""
    a, b = _disjoint(state, of, given)
    return subset_entropy(state, a + b) - subset_entropy(state, b)


def mutual_information(state: State, a: Labels, b: Labels) -> float:
    """I(A:B) = S(A) + S(B) − S(AB); nonnegative up to numerics."""
    a_t, b_t = _disjoint(state, a, b)
    return (
        subset_entropy(state, a_t)
        + subset_entropy(state, b_t)
        - subset_entropy(state, a_t + b_t)
    )


def coherent_information(state: State, a: Labels, b: Labels, legacy: bool = False) -> float:
    """I(A⟩B) = −S(A|B), signed.

    ``legacy=True`` returns the clamped variant max{S(B) − S(AB), 0} for
    comparison with the older convention.
    """
    value = -conditional_entropy(state, a, b) + 0.0  # avoid -0.0
    return max(value, 0.0) if legacy else value


def ssa_margin(state: State, a: Labels, b: Labels, c: Labels) -> float:
    """S(A|B) − S(A|BC); nonnegative for every state (strong subadditivity)."""
    a_t, b_t = _disjoint(state, a, b)
    _, c_t = _disjoint(state, a, c)
    if set(b_t) & set(c_t):
        raise ValueError(f"label sets overlap on {sorted(set(b_t) & set(c_t))}")
    return conditional_entropy(state, a_t, b_t) - conditional_entropy(state, a_t, b_t + c_t)


class EntropyReport:
    """Subset entropies of one state, memoized by sorted label subset.

    The 2^m subsets reappear across rate-region constraints; computing each
    once keeps those loops cheap.
    """

    def __init__(self, state: State):
        self.state = state
        self._cache: dict[tuple[str, ...], float] = {}

    @property
    def labels(self) -> tuple[str, ...]:
        return self.state.layout.labels

    def entropy(self, labels: Labels) -> float:
        key = tuple(sorted(as_labels(labels)))
        if key not in self._cache:
            self._cache[key] = subset_entropy(self.state, key)
        return self._cache[key]

    def conditional(self, of: Labels, given: Labels) -> float:
        a, b = _disjoint(self.state, of, given)
        return self.entropy(a + b) - self.entropy(b)

    def mutual(self, a: Labels, b: Labels) -> float:
        a_t, b_t = _disjoint(self.state, a, b)
        return self.entropy(a_t) + self.entropy(b_t) - self.entropy(a_t + b_t)

    def coherent(self, a: Labels, b: Labels, legacy: bool = False) -> float:
        value = -self.conditional(a, b) + 0.0
        return max(value, 0.0) if legacy else value

    def subsets(self, max_size: int | None = None):
        """All non-empty label subsets in binary-counting order."""
        labels = self.labels
        m = len(labels)
        for mask in range(1, 2 ** m):
            subset = tuple(labels[i] for i in range(m) if mask >> i & 1)
            if max_size is None or len(subset) <= max_size:
                yield subset
