"""Entropic applications: distributed-compression and multiple-access rate
regions, entanglement of assistance by minimum-cut enumeration, and an
upper-bounding estimator for the entanglement of purification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import (
    ChannelSpec,
    DEFAULT_DENSITY_CAP,
    DensityOperator,
    DimensionCapError,
    Labels,
    PureState,
    State,
    apply_channel,
    as_labels,
    partial_trace,
    stream_rng,
)
from .entropy import EntropyReport, conditional_entropy, von_neumann_entropy

MAX_PARTIES = 16
MAX_HELPERS = 12


@dataclass(frozen=True)
class RateConstraint:
    subset: tuple[str, ...]
    bound: float


@dataclass(frozen=True)
class RateRegion:
    """Linear per-party rate bounds: lower bounds for compression regions,
    upper bounds for multiple-access regions."""

    parties: tuple[str, ...]
    constraints: tuple[RateConstraint, ...]
    kind: str  # "compression" | "mac"

    def __post_init__(self):
        if self.kind not in ("compression", "mac"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        for c in self.constraints:
            if not math.isfinite(c.bound):
                raise ValueError(f"non-finite bound for subset {c.subset}")

    def contains(self, rates) -> tuple[bool, list[RateConstraint]]:
        """Membership with 1e-9 slack; returns the violated constraints."""
        rates = list(rates)
        if len(rates) != len(self.parties):
            raise ValueError(f"expected {len(self.parties)} rates, got {len(rates)}")
        value = dict(zip(self.parties, rates))
        violated = []
        for c in self.constraints:
            total = sum(value[p] for p in c.subset)
            ok = total >= c.bound - 1e-9 if self.kind == "compression" else total <= c.bound + 1e-9
            if not ok:
                violated.append(c)
        return not violated, violated

    def corner_points(self) -> list[tuple[float, float]]:
        """The two corners of a 2-party compression region, derived from the
        bounds analytically: (S(A), S(B|A)) and (S(A|B), S(B))."""
        if self.kind != "compression" or len(self.parties) != 2:
            raise ValueError("corner points are defined for 2-party compression regions")
        by_subset = {c.subset: c.bound for c in self.constraints}
        a, b = self.parties
        s_ab = by_subset[(a, b)]
        s_a_given_b = by_subset[(a,)]
        s_b_given_a = by_subset[(b,)]
        return [
            (s_ab - s_b_given_a, s_b_given_a),  # (S(A), S(B|A))
            (s_a_given_b, s_ab - s_a_given_b),  # (S(A|B), S(B))
        ]


def subsets_in_counting_order(labels: tuple[str, ...]):
    """Non-empty subsets, bit i of the counter selecting label i."""
    m = len(labels)
    for mask in range(1, 2 ** m):
        yield tuple(labels[i] for i in range(m) if mask >> i & 1)


def compression_region(state: State, parties: Labels | None = None) -> RateRegion:
    """Distributed-compression bounds R_T ≥ S(T | complement) for every
    non-empty subset T of parties."""
    labels = as_labels(parties) if parties is not None else state.layout.labels
    state.layout.check_subset(labels, "parties")
    if len(labels) < 2:
        raise ValueError("need at least 2 parties")
    if len(labels) > MAX_PARTIES:
        raise DimensionCapError(f"more than {MAX_PARTIES} parties")
    if state.layout.dim > DEFAULT_DENSITY_CAP:
        raise DimensionCapError("state dimension exceeds the region cap")
    report = EntropyReport(state)
    s_full = report.entropy(labels)
    constraints = []
    for subset in subsets_in_counting_order(labels):
        complement = tuple(l for l in labels if l not in set(subset))
        bound = s_full - (report.entropy(complement) if complement else 0.0)
        constraints.append(RateConstraint(subset, bound))
    if s_full < -1e-9:
        raise AssertionError("total rate bound must be nonnegative")
    return RateRegion(labels, tuple(constraints), "compression")


def region_contains(region: RateRegion, rates) -> tuple[bool, list[RateConstraint]]:
    return region.contains(rates)


def mac_region(
    state: State,
    sender_a: Labels = "A",
    sender_b: Labels = "B",
    decoder: Labels = "C",
) -> RateRegion:
    """Achievable quantum multiple-access rates in terms of signed coherent
    information: R_A ≤ I(A⟩CB), R_B ≤ I(B⟩CA), R_A+R_B ≤ I(AB⟩C)."""
    a = state.layout.check_subset(sender_a, "sender A")
    b = state.layout.check_subset(sender_b, "sender B")
    c = state.layout.check_subset(decoder, "decoder")
    if (set(a) & set(b)) or (set(a) & set(c)) or (set(b) & set(c)):
        raise ValueError("sender and decoder groups must be disjoint")
    report = EntropyReport(state)
    name_a, name_b = ",".join(a), ",".join(b)
    constraints = (
        RateConstraint((name_a,), report.coherent(a, c + b)),
        RateConstraint((name_b,), report.coherent(b, c + a)),
        RateConstraint((name_a, name_b), report.coherent(a + b, c)),
    )
    return RateRegion((name_a, name_b), constraints, "mac")


@dataclass(frozen=True)
class EoAResult:
    """Minimum-cut entanglement available to Alice and Bob with helpers."""

    value: float
    argmin_cut: tuple[str, ...]
    cut_values: dict[tuple[str, ...], float]


def eoa(psi: PureState, alice: Labels = "A", bob: Labels = "B") -> EoAResult:
    """Entanglement of assistance: minimize min{S(A∪T), S(B∪T̄)} over all
    splits T of the helper parties, first split in counting order on ties."""
    a = psi.layout.check_subset(alice, "alice")
    b = psi.layout.check_subset(bob, "bob")
    if set(a) & set(b):
        raise ValueError("alice and bob groups overlap")
    helpers = tuple(l for l in psi.layout.labels if l not in set(a) | set(b))
    if len(helpers) > MAX_HELPERS:
        raise DimensionCapError(f"more than {MAX_HELPERS} helper parties")
    report = EntropyReport(psi)
    cut_values: dict[tuple[str, ...], float] = {}
    best_value, best_cut = math.inf, ()
    for mask in range(2 ** len(helpers)):
        t = tuple(helpers[i] for i in range(len(helpers)) if mask >> i & 1)
        t_bar = tuple(l for l in helpers if l not in set(t))
        cut = min(report.entropy(a + t), report.entropy(b + t_bar))
        cut_values[t] = cut
        if cut < best_value:
            best_value, best_cut = cut, t
    return EoAResult(best_value, best_cut, cut_values)


@dataclass(frozen=True)
class EpEstimate:
    """Best upper bound found for min over channels on U of S(A, Λ(U))."""

    value: float
    channel: ChannelSpec
    restarts_used: int
    converged: bool


def _hermitian_from(theta: np.ndarray, m: int) -> np.ndarray:
    h = np.zeros((m, m), dtype=complex)
    diag = theta[:m]
    off = theta[m:].reshape(2, -1)
    h[np.diag_indices(m)] = diag
    iu = np.triu_indices(m, k=1)
    h[iu] = off[0] + 1j * off[1]
    h[(iu[1], iu[0])] = off[0] - 1j * off[1]
    return h


def _search_channel(theta: np.ndarray, u_label: str, d_u: int,
                    cap_out: int, cap_env: int) -> ChannelSpec:
    m = cap_out * cap_env
    g = expm(1j * _hermitian_from(theta, m))
    return ChannelSpec(u_label, g[:, :d_u], u_label, cap_out, cap_env)


def entanglement_of_purification(
    rho: DensityOperator,
    alice: Labels = "A",
    u_label: str = "U",
    *,
    cap_out: int | None = None,
    cap_env: int | None = None,
    restarts: int = 4,
    rng: np.random.Generator | None = None,
    max_iters: int = 400,
) -> EpEstimate:
    """Upper-bound min_Λ S(A, Λ(U)) by derivative-free local search.

    The Stinespring isometry is the first d_U columns of exp(iH) on the
    capped output ⊗ environment space, H parameterized by a real vector.
    Random restarts; a restart converges when 50 consecutive iterations
    improve by less than 1e-7. The identity and full-trace channels are
    always scored as baselines, so the estimate never exceeds S(AU).
    """
    a = rho.layout.check_subset(alice, "alice")
    if u_label in set(a):
        raise ValueError("u_label cannot be part of the alice group")
    d_u = rho.layout.dim_of(u_label)
    cap_out = d_u if cap_out is None else int(cap_out)
    cap_env = d_u if cap_env is None else int(cap_env)
    if cap_out < 1 or cap_env < 1 or restarts < 1:
        raise ValueError("caps and restarts must be >= 1")
    if cap_out * cap_env < d_u:
        raise ValueError("cap_out * cap_env must cover the input dimension")
    rng = rng if rng is not None else stream_rng(0)

    def value_of(ch: ChannelSpec) -> float:
        return von_neumann_entropy(apply_channel(rho, ch))

    best_ch = ChannelSpec.identity(u_label, d_u)
    best = math.inf
    candidates = []
    if cap_out >= d_u:
        candidates.append(ChannelSpec.identity(u_label, d_u))
    if cap_env >= d_u:
        candidates.append(ChannelSpec.full_trace(u_label, d_u))
    for ch in candidates:
        v = value_of(ch)
        if v < best:
            best, best_ch = v, ch

    m = cap_out * cap_env
    n_params = m * m
    all_converged = True
    for _ in range(restarts):
        theta = rng.standard_normal(n_params) * 0.5
        f = value_of(_search_channel(theta, u_label, d_u, cap_out, cap_env))
        step = 0.4
        history = [f]
        converged = False
        for _ in range(max_iters):
            direction = rng.standard_normal(n_params)
            moved = False
            for sign in (1.0, -1.0):
                cand = theta + sign * step * direction
                fc = value_of(_search_channel(cand, u_label, d_u, cap_out, cap_env))
                if fc < f - 1e-12:
                    theta, f = cand, fc
                    moved = True
                    break
            step = min(step * 1.4, 2.0) if moved else max(step * 0.8, 1e-6)
            history.append(f)
            if len(history) > 50 and history[-51] - f < 1e-7:
                converged = True
                break
        all_converged = all_converged and converged
        if f < best:
            best = f
            best_ch = _search_channel(theta, u_label, d_u, cap_out, cap_env)
    return EpEstimate(best, best_ch, restarts, all_converged)


@dataclass(frozen=True)
class SideInfoResult:
    r_a: float
    r_b: float
    ep: EpEstimate


def side_info_rates(
    psi: PureState,
    ch: ChannelSpec,
    *,
    alice: Labels = "A",
    restarts: int = 4,
    cap_out: int | None = None,
    cap_env: int | None = None,
    rng: np.random.Generator | None = None,
) -> SideInfoResult:
    """Achievable side-information corner for one choice of the helper
    channel: R_a = S(A|U) and R_b = E_p estimate − S(A|U)."""
    a = psi.layout.check_subset(alice, "alice")
    if ch.input_label in set(a):
        raise ValueError("the side-information channel must not act on Alice")
    rho = apply_channel(psi.density(), ch)
    u = ch.output_label
    r_a = conditional_entropy(rho, a, u)
    rho_au = partial_trace(rho, a + (u,))
    ep = entanglement_of_purification(
        rho_au, a, u, cap_out=cap_out, cap_env=cap_env, restarts=restarts, rng=rng
    )
    return SideInfoResult(r_a, ep.value - r_a, ep)
