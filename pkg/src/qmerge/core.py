"""Dense linear algebra over labeled multipartite quantum systems.

States and operators carry a :class:`SubsystemLayout` naming their parts.
The composite basis index is lexicographic with the first listed label most
significant, so ``tensor`` is a plain Kronecker product and reshapes into a
per-subsystem tensor are direct.

All values are immutable after construction; every operation is a pure
function except the ones taking an explicit seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10
EIG_FLOOR = -1e-9          # eigenvalues in [EIG_FLOOR, 0] are treated as 0
RANK_TOL = 1e-12
ZERO_PROB = 1e-12          # measurement branches below this are never sampled

DEFAULT_PURE_CAP = 2 ** 20      # max amplitudes of any pure state we build
DEFAULT_DENSITY_CAP = 2 ** 12   # max side length of any density matrix


class DimensionCapError(RuntimeError):
    """A requested computation would exceed the configured dimension cap."""


Labels = Union[str, Iterable[str]]


def as_labels(labels: Labels) -> tuple[str, ...]:
    """Normalize a label argument: a bare string means a single label."""
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered named subsystems with local dimensions.

    The first listed label is the most significant digit of the composite
    basis index: for parts ``(("A", dA), ("B", dB))`` the basis state
    ``|a⟩|b⟩`` sits at flat index ``a * dB + b``.
    """

    parts: tuple[tuple[str, int], ...]

    def __post_init__(self):
        parts = tuple((str(l), int(d)) for l, d in self.parts)
        object.__setattr__(self, "parts", parts)
        seen = set()
        for label, d in parts:
            if not label:
                raise ValueError("subsystem labels must be non-empty")
            if label in seen:
                raise ValueError(f"duplicate subsystem label {label!r}")
            seen.add(label)
            if d < 1:
                raise ValueError(f"subsystem {label!r} has dimension {d} < 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.parts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.parts)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.parts)

    def position(self, label: str) -> int:
        for i, (l, _) in enumerate(self.parts):
            if l == label:
                return i
        raise ValueError(f"unknown subsystem label {label!r}")

    def dim_of(self, labels: Labels) -> int:
        return math.prod(self.parts[self.position(l)][1] for l in as_labels(labels))

    def check_subset(self, labels: Labels, what: str = "labels") -> tuple[str, ...]:
        """Validate a label subset; returns it reordered to layout order."""
        wanted = as_labels(labels)
        if not wanted:
            raise ValueError(f"{what} must be a non-empty label set")
        unknown = set(wanted) - set(self.labels)
        if unknown:
            raise ValueError(f"unknown subsystem label(s) {sorted(unknown)}")
        if len(set(wanted)) != len(wanted):
            raise ValueError(f"{what} contains repeated labels")
        return tuple(l for l in self.labels if l in set(wanted))


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PureState:
    """A normalized state vector over a :class:`SubsystemLayout`."""

    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape != (self.layout.dim,):
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {self.layout.dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm {norm!r} is not 1 within {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityOperator":
        """The rank-one projector |ψ⟩⟨ψ| as a density operator."""
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def relabeled(self, mapping: dict[str, str]) -> "PureState":
        """Rename subsystems without touching amplitudes."""
        parts = tuple((mapping.get(l, l), d) for l, d in self.layout.parts)
        return PureState(SubsystemLayout(parts), self.amplitudes)


@dataclass(frozen=True)
class DensityOperator:
    """A Hermitian, PSD, unit-trace operator over a :class:`SubsystemLayout`."""

    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = _freeze(np.asarray(self.matrix))
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match layout dimension {d}")
        if np.abs(mat - mat.conj().T).max() > HERMITIAN_TOL:
            raise ValueError(f"matrix is not Hermitian within {HERMITIAN_TOL}")
        tr = mat.trace()
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace {tr!r} is not 1 within 1e-10")
        lo = np.linalg.eigvalsh(mat)[0] if d > 1 else mat[0, 0].real
        if lo < EIG_FLOOR:
            raise ValueError(f"minimum eigenvalue {lo!r} below {EIG_FLOOR}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues with the PSD drift clamped to 0."""
        lam = np.linalg.eigvalsh(self.matrix)
        return np.clip(lam, 0.0, None)

    def relabeled(self, mapping: dict[str, str]) -> "DensityOperator":
        parts = tuple((mapping.get(l, l), d) for l, d in self.layout.parts)
        return DensityOperator(SubsystemLayout(parts), self.matrix)


@dataclass(frozen=True)
class ChannelSpec:
    """A quantum channel given as an explicit Stinespring isometry.

    ``isometry`` maps the input system into output ⊗ environment, with the
    row index composite as ``out * env_dim + env``; the environment is
    discarded on application.
    """

    input_label: str
    isometry: np.ndarray
    output_label: str
    out_dim: int
    env_dim: int

    def __post_init__(self):
        iso = _freeze(np.asarray(self.isometry))
        if iso.ndim != 2 or iso.shape[0] != self.out_dim * self.env_dim:
            raise ValueError(
                f"isometry shape {iso.shape} does not match out*env = "
                f"{self.out_dim * self.env_dim}"
            )
        gram = iso.conj().T @ iso
        if np.abs(gram - np.eye(iso.shape[1])).max() > HERMITIAN_TOL:
            raise ValueError("isometry columns are not orthonormal within 1e-10")
        object.__setattr__(self, "isometry", iso)

    @property
    def in_dim(self) -> int:
        return self.isometry.shape[1]

    @classmethod
    def identity(cls, label: str, dim: int, output_label: str | None = None) -> "ChannelSpec":
        return cls(label, np.eye(dim), output_label or label, dim, 1)

    @classmethod
    def full_trace(cls, label: str, dim: int, output_label: str | None = None) -> "ChannelSpec":
        # |i⟩ → |0⟩_out ⊗ |i⟩_env, i.e. everything ends up in the environment.
        return cls(label, np.eye(dim), output_label or label, 1, dim)


State = Union[PureState, DensityOperator]


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Derive an independent generator from ``(seed, stream-id...)``.

    All randomness in the package flows through this splittable scheme, so a
    fixed master seed reproduces every draw regardless of how many other
    streams are consumed.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# composition and reduction


def tensor(a: State, b: State) -> State:
    """Tensor product; ``a``'s subsystems come first in the joint layout."""
    if type(a) is not type(b):
        raise TypeError("tensor requires two states of the same kind")
    overlap = set(a.layout.labels) & set(b.layout.labels)
    if overlap:
        raise ValueError(f"duplicate subsystem label(s) {sorted(overlap)}")
    layout = SubsystemLayout(a.layout.parts + b.layout.parts)
    if isinstance(a, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes))
    return DensityOperator(layout, np.kron(a.matrix, b.matrix))


def _split_positions(layout: SubsystemLayout, keep: Labels) -> tuple[list[int], list[int]]:
    kept = layout.check_subset(keep, "keep")
    keep_pos = [layout.position(l) for l in kept]
    drop_pos = [i for i in range(len(layout)) if i not in set(keep_pos)]
    return keep_pos, drop_pos


def _sub_layout(layout: SubsystemLayout, positions: Sequence[int]) -> SubsystemLayout:
    return SubsystemLayout(tuple(layout.parts[i] for i in positions))


def partial_trace(rho: DensityOperator, keep: Labels) -> DensityOperator:
    """Trace out everything but ``keep``; kept labels stay in layout order."""
    keep_pos, drop_pos = _split_positions(rho.layout, keep)
    dims = rho.layout.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    # put kept axes first on both the ket and bra sides, then contract
    perm = keep_pos + drop_pos
    t = t.transpose([*perm, *(n + i for i in perm)])
    dk = math.prod(dims[i] for i in keep_pos)
    dd = math.prod(dims[i] for i in drop_pos)
    t = t.reshape(dk, dd, dk, dd)
    reduced = np.einsum("ikjk->ij", t)
    return DensityOperator(_sub_layout(rho.layout, keep_pos), reduced)


def reduced_density(psi: PureState, keep: Labels) -> DensityOperator:
    """Reduced density operator of a pure state, without forming |ψ⟩⟨ψ|."""
    keep_pos, drop_pos = _split_positions(psi.layout, keep)
    dims = psi.layout.dims
    t = psi.tensor_view().transpose(keep_pos + drop_pos)
    dk = math.prod(dims[i] for i in keep_pos)
    m = t.reshape(dk, -1)
    return DensityOperator(_sub_layout(psi.layout, keep_pos), m @ m.conj().T)


def purify(rho: DensityOperator, new_label: str) -> PureState:
    """Canonical purification with the purifier appended as ``new_label``.

    Eigenvalues are taken in descending order and each eigenvector's first
    nonzero component is rotated real positive, so the output is
    reproducible. The purifier dimension equals the rank of ``rho``.
    """
    if new_label in rho.layout.labels:
        raise ValueError(f"label {new_label!r} already present in layout")
    lam, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    rank = max(1, int(np.sum(lam > RANK_TOL)))
    lam = np.clip(lam[:rank], 0.0, None)
    vecs = vecs[:, :rank]
    for i in range(rank):
        col = vecs[:, i]
        nz = np.flatnonzero(np.abs(col) > RANK_TOL)
        if nz.size:
            col0 = col[nz[0]]
            vecs[:, i] = col * (col0.conjugate() / abs(col0))
    amps = (vecs * np.sqrt(lam)).reshape(-1)  # index = system * rank + purifier
    layout = SubsystemLayout(rho.layout.parts + ((new_label, rank),))
    amps = amps / np.linalg.norm(amps)
    return PureState(layout, amps)


def permute_subsystems(state: State, new_order: Sequence[str]) -> State:
    """Reorder the layout; all reduced operators are invariant."""
    layout = state.layout
    if sorted(new_order) != sorted(layout.labels):
        raise ValueError(f"{tuple(new_order)} is not a permutation of {layout.labels}")
    perm = [layout.position(l) for l in new_order]
    new_layout = _sub_layout(layout, perm)
    n = len(layout)
    if isinstance(state, PureState):
        amps = state.tensor_view().transpose(perm).reshape(-1)
        return PureState(new_layout, amps)
    t = state.matrix.reshape(layout.dims + layout.dims)
    t = t.transpose([*perm, *(n + i for i in perm)])
    d = layout.dim
    return DensityOperator(new_layout, t.reshape(d, d))


def fuse_subsystems(psi: PureState, labels: Labels, new_label: str) -> PureState:
    """Merge the named subsystems (in the given order) into one label.

    The fused group is moved to the front of the layout; amplitudes follow
    the index convention automatically.
    """
    group = as_labels(labels)
    psi.layout.check_subset(group, "fuse group")
    rest = [l for l in psi.layout.labels if l not in set(group)]
    if new_label in rest:
        raise ValueError(f"label {new_label!r} already present in layout")
    moved = permute_subsystems(psi, list(group) + rest)
    fused_dim = psi.layout.dim_of(group)
    parts = ((new_label, fused_dim),) + tuple(
        moved.layout.parts[len(group):]
    )
    return PureState(SubsystemLayout(parts), moved.amplitudes)


# ---------------------------------------------------------------------------
# randomness and measurement


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a Haar-distributed unitary.

    QR of a complex standard-Gaussian matrix with the column phases fixed so
    the triangular factor has a positive real diagonal.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def block_branches(
    psi: PureState, party: str, unitary: np.ndarray, block_size: int, new_label: str = "A1"
) -> list[tuple[int, float, PureState | None]]:
    """All branches of a coarse-grained measurement on one party.

    Rotates the party by ``unitary`` and projects onto consecutive blocks of
    ``block_size`` computational indices. Returns ``(outcome, probability,
    post-state)`` for every block; branches with probability below the
    sampling floor carry ``None``. The measured party is relabeled to
    ``new_label`` with dimension ``block_size``.
    """
    pos = psi.layout.position(party)
    d = psi.layout.dims[pos]
    if d % block_size != 0:
        raise ValueError(f"block size {block_size} does not divide party dimension {d}")
    w = np.asarray(unitary)
    if w.shape != (d, d):
        raise ValueError(f"unitary shape {w.shape} does not match party dimension {d}")
    if np.abs(w.conj().T @ w - np.eye(d)).max() > 1e-9:
        raise ValueError("measurement basis matrix is not unitary")
    n_out = d // block_size
    rotated = np.tensordot(w, psi.tensor_view(), axes=([1], [pos]))
    rotated = np.moveaxis(rotated, 0, pos)
    parts = list(psi.layout.parts)
    parts[pos] = (new_label, block_size)
    post_layout = SubsystemLayout(tuple(parts))
    branches: list[tuple[int, float, PureState | None]] = []
    for k in range(n_out):
        block = np.take(rotated, range(k * block_size, (k + 1) * block_size), axis=pos)
        p = float(np.vdot(block, block).real)
        if p < ZERO_PROB:
            branches.append((k, max(p, 0.0), None))
            continue
        post = PureState(post_layout, (block / np.sqrt(p)).reshape(-1))
        branches.append((k, p, post))
    total = sum(p for _, p, _ in branches)
    if abs(total - 1.0) > 1e-10:
        raise AssertionError(f"branch probabilities sum to {total!r}")
    return branches


def block_measure(
    psi: PureState,
    party: str,
    unitary: np.ndarray,
    block_size: int,
    rng: np.random.Generator,
    new_label: str = "A1",
) -> tuple[int, PureState, float]:
    """Sample one outcome of the coarse-grained measurement (Born rule).

    Zero-probability branches are excluded from the sampling distribution and
    the remaining probabilities renormalized.
    """
    branches = block_branches(psi, party, unitary, block_size, new_label)
    live = [(k, p, post) for k, p, post in branches if post is not None]
    probs = np.array([p for _, p, _ in live])
    idx = rng.choice(len(live), p=probs / probs.sum())
    k, p, post = live[int(idx)]
    return k, post, p


# ---------------------------------------------------------------------------
# distance measures and channels


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(mat)
    lam = np.clip(lam, 0.0, None)
    return (vecs * np.sqrt(lam)) @ vecs.conj().T


def _check_same_layout(rho: DensityOperator, sigma: DensityOperator):
    if rho.layout != sigma.layout:
        raise ValueError(
            f"layout mismatch: {rho.layout.parts} vs {sigma.layout.parts}"
        )


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity ``(Tr |√ρ √σ|)²`` in the squared convention."""
    _check_same_layout(rho, sigma)
    s = np.linalg.svd(_psd_sqrt(rho.matrix) @ _psd_sqrt(sigma.matrix), compute_uv=False)
    return float(min(1.0, s.sum() ** 2))


def pure_overlap_sq(psi: PureState, phi: PureState) -> float:
    """|⟨ψ|φ⟩|² for two pure states on the same layout."""
    if psi.layout != phi.layout:
        raise ValueError("layout mismatch")
    return float(min(1.0, abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of ρ − σ."""
    _check_same_layout(rho, sigma)
    lam = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(0.5 * np.abs(lam).sum())


def apply_channel(rho: DensityOperator, ch: ChannelSpec) -> DensityOperator:
    """Apply the channel's isometry to its input subsystem, discard the
    environment, and relabel the output."""
    pos = rho.layout.position(ch.input_label)
    d_in = rho.layout.dims[pos]
    if d_in != ch.in_dim:
        raise ValueError(
            f"channel expects input dimension {ch.in_dim}, subsystem "
            f"{ch.input_label!r} has {d_in}"
        )
    if ch.output_label != ch.input_label and ch.output_label in rho.layout.labels:
        raise ValueError(f"output label {ch.output_label!r} already present")
    dims = rho.layout.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    # contract the isometry on the ket-side input axis and its conjugate on
    # the bra side, landing the new (out*env) axes in the input's position
    t = np.tensordot(ch.isometry, t, axes=([1], [pos]))
    t = np.moveaxis(t, 0, pos)
    t = np.tensordot(t, ch.isometry.conj(), axes=([n + pos], [1]))
    t = np.moveaxis(t, -1, n + pos)
    env = "__env"
    while env in rho.layout.labels or env == ch.output_label:
        env += "_"
    parts = list(rho.layout.parts)
    parts[pos: pos + 1] = [(ch.output_label, ch.out_dim), (env, ch.env_dim)]
    lifted_layout = SubsystemLayout(tuple(parts))
    d = lifted_layout.dim
    lifted = DensityOperator(lifted_layout, t.reshape(d, d))
    keep = [l for l in lifted_layout.labels if l != env]
    return partial_trace(lifted, keep)
