"""Simulation of the state-merging protocol.

One run takes n copies of a tripartite pure state shared by Alice, Bob and a
reference, pre-invests EPR pairs when the conditional entropy is positive,
measures Alice's block in a (Haar-random or injected) basis coarse-grained to
blocks of size L, and checks how well Bob's optimal local recovery
reconstructs the global state while the reference stays untouched. Resources
are tallied in ebits (log2 L net of the boost) and cbits (log2 of the
outcome count).
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_PURE_CAP,
    DimensionCapError,
    DensityOperator,
    Labels,
    PureState,
    SubsystemLayout,
    as_labels,
    block_branches,
    fidelity,
    fuse_subsystems,
    haar_unitary,
    permute_subsystems,
    reduced_density,
    stream_rng,
    tensor,
    trace_distance,
)
from .entropy import conditional_entropy
from .presets import bell_pair

DEFAULT_SLACK_BITS = 1.0
RESIDUAL_LABEL = "A1"   # Alice's post-measurement share
ANCILLA_LABEL = "B0"    # Bob's half of the target entangled pair


@dataclass(frozen=True)
class MergePlan:
    """Block size, outcome count and EPR pre-investment for one merge run."""

    n: int
    block_dim: int       # L: dimension Alice keeps
    outcome_count: int   # N = D / L classical outcomes
    k_boost: int         # EPR pairs pre-invested (only when S(A|B) > 0)
    alice_dim: int       # D: Alice's composite dimension after the boost
    cond_entropy: float  # per-copy S(A|B) of the input state
    slack_bits: float
    rate_clipped: bool   # no L ≥ 1 satisfied the rate budget; fell back to L=1
    alice: str = "A"
    bob: str = "B"

    def __post_init__(self):
        if self.block_dim < 1 or self.k_boost < 0:
            raise ValueError("need block_dim >= 1 and k_boost >= 0")
        if self.block_dim * self.outcome_count != self.alice_dim:
            raise ValueError("block_dim * outcome_count must equal alice_dim")
        if self.k_boost > 0 and self.cond_entropy <= 0:
            raise ValueError("EPR boost only applies when S(A|B) > 0")

    @property
    def predicted_epr_bits(self) -> float:
        return math.log2(self.block_dim)

    @property
    def predicted_cbits(self) -> float:
        return math.log2(self.outcome_count)

    @property
    def target_rate(self) -> float:
        return -self.n * self.cond_entropy + 0.0  # avoid -0.0 in reports


@dataclass(frozen=True)
class MergeOutcome:
    """Record of a single merging trial."""

    outcome_index: int
    probability: float
    decoupling_error: float    # ‖σ(A1,R) − I/L ⊗ ρ_R^⊗n‖_tr / 2
    uhlmann_fidelity: float    # F(σ(A1,R), I/L ⊗ ρ_R^⊗n)
    achieved_fidelity: float   # overlap² of the reconstructed global state
    epr_net_bits: float        # log2 L − k_boost
    cbits: float               # log2 N

    def __post_init__(self):
        if not 0 < self.probability <= 1 + 1e-9:
            raise ValueError(f"outcome probability {self.probability} outside (0, 1]")
        for name in ("uhlmann_fidelity", "achieved_fidelity"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1 + 1e-9:
                raise ValueError(f"{name} {v} outside [0, 1]")
        if self.achieved_fidelity > self.uhlmann_fidelity + 1e-6:
            raise ValueError("recovery fidelity exceeds the Uhlmann optimum")


def _smallest_prime_factor(n: int) -> int:
    if n < 2:
        return 2
    f = 2
    while f * f <= n:
        if n % f == 0:
            return f
        f += 1
    return n


def _ceil_bits(x: float) -> int:
    return max(0, math.ceil(x - 1e-9))


def _boost_half_labels(existing, k: int) -> tuple[list[str], list[str]]:
    taken = set(existing)
    a_half, b_half, j = [], [], 0
    while len(a_half) < k:
        ca, cb = f"A{j}", f"B{j}"
        if ca not in taken and cb not in taken:
            a_half.append(ca)
            b_half.append(cb)
        j += 1
    return a_half, b_half


def _boost(psi: PureState, k: int) -> tuple[PureState, list[str], list[str]]:
    a_half, b_half = _boost_half_labels(psi.layout.labels, k)
    out = psi
    for ca, cb in zip(a_half, b_half):
        out = tensor(out, bell_pair(ca, cb))
    return out, a_half, b_half


def epr_boost(psi: PureState, k: int) -> PureState:
    """Append k EPR pairs, one half to Alice's side and one to Bob's.

    Each pair lowers the A-group/B-group conditional entropy by one bit; the
    halves get the first free A0/B0, A1/B1, ... labels.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    return _boost(psi, k)[0]


def plan_merge(
    psi: PureState,
    n: int,
    slack_bits: float = DEFAULT_SLACK_BITS,
    alice: str = "A",
    bob: str = "B",
) -> MergePlan:
    """Choose block size, outcome count and EPR boost for n copies.

    Positive S(A|B) is first cancelled by pre-invested EPR pairs; the block
    then targets rate −S(A|B) per copy, backed off by ``slack_bits`` and
    restricted to powers of the smallest prime factor of Alice's dimension
    so that blocks divide her space exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if slack_bits < 0:
        raise ValueError("slack_bits must be >= 0")
    for label in (alice, bob):
        psi.layout.position(label)
    s = conditional_entropy(psi, alice, bob)
    d_a = psi.layout.dim_of(alice)
    k = _ceil_bits(n * s) + _ceil_bits(slack_bits) if s > 1e-9 else 0
    d_total = d_a ** n * 2 ** k
    budget = k - n * s - slack_bits  # −n·S′(A|B) − slack, S′ per copy after boost
    clipped = budget < -1e-9
    if clipped:
        block = 1
    else:
        p = _smallest_prime_factor(d_a) if d_a > 1 else 2
        max_pow = 0
        rem = d_total
        while rem % p == 0:
            rem //= p
            max_pow += 1
        j = min(int((budget + 1e-9) / math.log2(p)), max_pow)
        block = p ** j
    return MergePlan(
        n=n,
        block_dim=block,
        outcome_count=d_total // block,
        k_boost=k,
        alice_dim=d_total,
        cond_entropy=s,
        slack_bits=slack_bits,
        rate_clipped=clipped,
        alice=alice,
        bob=bob,
    )


def _copy_label(label: str, i: int) -> str:
    return f"{label}.{i}"


def _tensor_copies(psi: PureState, n: int) -> PureState:
    out = psi.relabeled({l: _copy_label(l, 0) for l in psi.layout.labels})
    for i in range(1, n):
        out = tensor(out, psi.relabeled({l: _copy_label(l, i) for l in psi.layout.labels}))
    return out


def _prepare(psi: PureState, plan: MergePlan, dim_cap: int):
    """ψ^⊗n, boosted, with Alice's group fused into one front subsystem."""
    others = [l for l in psi.layout.labels if l not in (plan.alice, plan.bob)]
    if psi.dim ** plan.n * 4 ** plan.k_boost > dim_cap:
        raise DimensionCapError(
            f"prepared state would exceed the {dim_cap}-amplitude cap"
        )
    copies = _tensor_copies(psi, plan.n)
    boosted, a_half, b_half = _boost(copies, plan.k_boost)
    alice_group = [_copy_label(plan.alice, i) for i in range(plan.n)] + a_half
    bob_group = [_copy_label(plan.bob, i) for i in range(plan.n)] + b_half
    ref_group = [_copy_label(l, i) for i in range(plan.n) for l in others]
    fused = fuse_subsystems(boosted, alice_group, plan.alice)
    prepared = permute_subsystems(fused, [plan.alice] + bob_group + ref_group)
    if prepared.layout.dim_of(plan.alice) != plan.alice_dim:
        raise ValueError("plan is inconsistent with the state's dimensions")
    return prepared, bob_group, ref_group


def _merge_target(psi: PureState, plan: MergePlan, dim_cap: int) -> PureState:
    """|Φ_L⟩ on (A1, B0) next to ψ^⊗n with Alice's share moved to Bob's A′."""
    if plan.block_dim ** 2 * psi.dim ** plan.n > dim_cap:
        raise DimensionCapError(f"target state would exceed the {dim_cap}-amplitude cap")
    copies = _tensor_copies(psi, plan.n)
    primed = copies.relabeled(
        {_copy_label(plan.alice, i): _copy_label(plan.alice + "'", i) for i in range(plan.n)}
    )
    return tensor(bell_pair(RESIDUAL_LABEL, ANCILLA_LABEL, plan.block_dim), primed)


def _split_matrix(state: PureState, keep: tuple[str, ...]) -> np.ndarray:
    """Amplitudes as a (keep, rest) matrix with keep axes in the given order."""
    rest = [l for l in state.layout.labels if l not in set(keep)]
    moved = permute_subsystems(state, list(keep) + rest)
    return moved.amplitudes.reshape(state.layout.dim_of(keep), -1)


def recovery_isometry(post: PureState, target: PureState, keep: Labels) -> np.ndarray:
    """Bob's optimal recovery isometry.

    ``keep`` names the subsystems Bob cannot touch (Alice's residual and the
    reference); everything else is his. The isometry maps his share of
    ``post`` into his share of ``target`` and maximizes the global overlap,
    via the polar part of the cross-overlap operator; by Uhlmann's theorem
    the achieved overlap² equals the fidelity of the two reduced states on
    ``keep``.

    When his input outgrows the target's side (spent EPR boost pairs leave
    him extra systems) the isometry lands in target ⊗ junk: row blocks of
    size ``target_dim`` index the junk basis, the junk is discarded, and the
    extra slices sit in the cross operator's null space so the achieved
    fidelity is still the Uhlmann optimum.
    """
    keep_t = as_labels(keep)
    for state in (post, target):
        state.layout.check_subset(keep_t, "keep")
    post_keep = tuple(post.layout.parts[post.layout.position(l)] for l in keep_t)
    target_keep = tuple(target.layout.parts[target.layout.position(l)] for l in keep_t)
    if post_keep != target_keep:
        raise ValueError(
            f"kept subsystems differ: {post_keep} vs {target_keep}"
        )
    p = _split_matrix(post, keep_t)
    t = _split_matrix(target, keep_t)
    bp, bt = p.shape[1], t.shape[1]
    cross = p.T @ t.conj()  # (bob_post, bob_target) overlap operator
    u, _, vh = np.linalg.svd(cross, full_matrices=False)
    v = vh.conj().T @ u.conj().T
    if bt >= bp:
        return v
    # complete the rank-deficient polar part with junk slices: send the
    # unused part of Bob's input space to junk indices >= 1
    rank = min(bp, bt)
    u_full, _, _ = np.linalg.svd(cross, full_matrices=True)
    junk = 1 + -(-(bp - rank) // bt)
    out = np.zeros((bt * junk, bp), dtype=complex)
    out[:bt] = v
    for extra, i in enumerate(range(rank, bp)):
        row = bt * (1 + extra // bt) + extra % bt
        out[row] = u_full[:, i].conj()
    return out


def recovered_overlap_sq(
    post: PureState, target: PureState, keep: Labels, isometry: np.ndarray
) -> float:
    """Fidelity of Bob's reconstruction with the target: |⟨target|(I ⊗ V)
    |post⟩|², summed over the discarded junk basis when V carries one."""
    keep_t = as_labels(keep)
    p = _split_matrix(post, keep_t)
    t = _split_matrix(target, keep_t)
    recon = p @ isometry.T  # (keep, target_bob * junk)
    junk = recon.shape[1] // t.shape[1]
    recon = recon.reshape(recon.shape[0], junk, t.shape[1])
    overlaps = np.tensordot(t.conj(), recon, axes=([0, 1], [0, 2]))
    return float(min(1.0, (np.abs(overlaps) ** 2).sum()))


def _reference_sigma(plan: MergePlan, rho_refs: DensityOperator | None) -> DensityOperator:
    parts = ((RESIDUAL_LABEL, plan.block_dim),)
    mat = np.eye(plan.block_dim) / plan.block_dim
    if rho_refs is not None:
        parts = parts + rho_refs.layout.parts
        mat = np.kron(mat, rho_refs.matrix)
    return DensityOperator(SubsystemLayout(parts), mat)


def _outcome(
    index: int,
    prob: float,
    post: PureState,
    plan: MergePlan,
    ref_group: list[str],
    ref_sigma: DensityOperator,
    target: PureState,
) -> MergeOutcome:
    keep = (RESIDUAL_LABEL, *ref_group)
    sigma = reduced_density(post, keep)
    v = recovery_isometry(post, target, keep)
    return MergeOutcome(
        outcome_index=index,
        probability=prob,
        decoupling_error=trace_distance(sigma, ref_sigma),
        uhlmann_fidelity=fidelity(sigma, ref_sigma),
        achieved_fidelity=recovered_overlap_sq(post, target, keep, v),
        epr_net_bits=math.log2(plan.block_dim) - plan.k_boost,
        cbits=math.log2(plan.outcome_count),
    )


def _run_setup(psi, plan, rng, unitary, dim_cap):
    prepared, bob_group, ref_group = _prepare(psi, plan, dim_cap)
    if unitary is None:
        if rng is None:
            raise ValueError("provide either rng or an explicit measurement unitary")
        unitary = haar_unitary(plan.alice_dim, rng)
    target = _merge_target(psi, plan, dim_cap)
    rho_refs = reduced_density(prepared, ref_group) if ref_group else None
    ref_sigma = _reference_sigma(plan, rho_refs)
    branches = block_branches(prepared, plan.alice, unitary, plan.block_dim, RESIDUAL_LABEL)
    return branches, ref_group, ref_sigma, target


def run_merge(
    psi: PureState,
    plan: MergePlan,
    rng: np.random.Generator,
    *,
    unitary: np.ndarray | None = None,
    dim_cap: int = DEFAULT_PURE_CAP,
) -> MergeOutcome:
    """One merging trial: sample a measurement outcome and score it.

    Draws a fresh Haar basis from ``rng`` unless an explicit ``unitary`` is
    injected (test hook); the outcome is Born-sampled from ``rng`` either way.
    """
    branches, ref_group, ref_sigma, target = _run_setup(psi, plan, rng, unitary, dim_cap)
    live = [(k, p, post) for k, p, post in branches if post is not None]
    probs = np.array([p for _, p, _ in live])
    pick = int(rng.choice(len(live), p=probs / probs.sum()))
    k, p, post = live[pick]
    return _outcome(k, p, post, plan, ref_group, ref_sigma, target)


def run_merge_exhaustive(
    psi: PureState,
    plan: MergePlan,
    rng: np.random.Generator | None = None,
    *,
    unitary: np.ndarray | None = None,
    dim_cap: int = DEFAULT_PURE_CAP,
    max_outcomes: int = 256,
) -> list[MergeOutcome]:
    """Score every outcome of one measurement basis instead of sampling."""
    if plan.outcome_count > max_outcomes:
        raise DimensionCapError(
            f"{plan.outcome_count} outcomes exceed the exhaustive cap {max_outcomes}"
        )
    branches, ref_group, ref_sigma, target = _run_setup(psi, plan, rng, unitary, dim_cap)
    return [
        _outcome(k, p, post, plan, ref_group, ref_sigma, target)
        for k, p, post in branches
        if post is not None
    ]


def ensemble_reference_check(
    psi: PureState,
    plan: MergePlan,
    unitary: np.ndarray,
    *,
    dim_cap: int = DEFAULT_PURE_CAP,
    max_outcomes: int = 4096,
) -> float:
    """Trace distance between Σ_k p_k σ_R^(k) and ρ_R^⊗n.

    Local operations cannot change the unconditioned reference state, so
    this is zero up to roundoff for every basis; the sum runs over all
    outcomes using unnormalized branches, so vanishing-probability outcomes
    contribute exactly.
    """
    if plan.outcome_count > max_outcomes:
        raise DimensionCapError(
            f"{plan.outcome_count} outcomes exceed the enumeration cap {max_outcomes}"
        )
    unitary = np.asarray(unitary)
    if unitary.shape != (plan.alice_dim, plan.alice_dim):
        raise ValueError(f"unitary shape {unitary.shape} does not match {plan.alice_dim}")
    if np.abs(unitary.conj().T @ unitary - np.eye(plan.alice_dim)).max() > 1e-9:
        raise ValueError("measurement basis matrix is not unitary")
    prepared, _, ref_group = _prepare(psi, plan, dim_cap)
    if not ref_group:
        return 0.0
    rho_refs = reduced_density(prepared, ref_group)
    d_ref = rho_refs.dim
    rotated = np.tensordot(unitary, prepared.tensor_view(), axes=([1], [0]))
    flat = rotated.reshape(plan.alice_dim, -1, d_ref)  # (alice, bob, refs)
    avg = np.zeros((d_ref, d_ref), dtype=complex)
    for k in range(plan.outcome_count):
        m = flat[k * plan.block_dim: (k + 1) * plan.block_dim].reshape(-1, d_ref)
        avg += m.T @ m.conj()
    return trace_distance(DensityOperator(rho_refs.layout, avg), rho_refs)


@dataclass(frozen=True)
class CurveRow:
    """Aggregate of the merge trials at one copy count."""

    n: int
    trials: int
    block_dim: int
    outcome_count: int
    k_boost: int
    epr_net_bits: float
    cbits: float
    fidelity_mean: float
    fidelity_median: float
    fidelity_min: float
    decoupling_mean: float
    decoupling_median: float
    decoupling_min: float
    skipped: bool = False


def monte_carlo_merge(
    psi: PureState,
    n_values,
    trials: int,
    slack_bits: float = DEFAULT_SLACK_BITS,
    seed: int = 0,
    *,
    alice: str = "A",
    bob: str = "B",
    dim_cap: int = DEFAULT_PURE_CAP,
) -> list[CurveRow]:
    """Independent merge trials for each copy count, with per-trial streams
    keyed by (seed, n, trial) so adding trials never perturbs earlier ones."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for n in n_values:
        try:
            plan = plan_merge(psi, n, slack_bits, alice, bob)
            outcomes = [
                run_merge(psi, plan, stream_rng(seed, n, t), dim_cap=dim_cap)
                for t in range(trials)
            ]
        except DimensionCapError:
            rows.append(CurveRow(
                n=n, trials=0, block_dim=0, outcome_count=0, k_boost=0,
                epr_net_bits=math.nan, cbits=math.nan,
                fidelity_mean=math.nan, fidelity_median=math.nan, fidelity_min=math.nan,
                decoupling_mean=math.nan, decoupling_median=math.nan,
                decoupling_min=math.nan, skipped=True,
            ))
            continue
        fids = [o.achieved_fidelity for o in outcomes]
        errs = [o.decoupling_error for o in outcomes]
        rows.append(CurveRow(
            n=n,
            trials=trials,
            block_dim=plan.block_dim,
            outcome_count=plan.outcome_count,
            k_boost=plan.k_boost,
            epr_net_bits=outcomes[0].epr_net_bits,
            cbits=outcomes[0].cbits,
            fidelity_mean=statistics.fmean(fids),
            fidelity_median=statistics.median(fids),
            fidelity_min=min(fids),
            decoupling_mean=statistics.fmean(errs),
            decoupling_median=statistics.median(errs),
            decoupling_min=min(errs),
        ))
    return rows


def hadamard_basis(dim: int) -> np.ndarray:
    """H^⊗m for dim = 2^m; the basis used in the classically correlated
    worked example."""
    m = dim.bit_length() - 1
    if 2 ** m != dim:
        raise ValueError(f"Hadamard basis needs a power-of-2 dimension, got {dim}")
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    out = np.eye(1, dtype=complex)
    for _ in range(m):
        out = np.kron(out, h)
    return out
