"""Multipartite complex linear algebra: states, distances, purifications.

Dense Hermitian operators carry :class:`~purity.hilbert.HilbertDims` metadata so
subsystem operations (partial trace, dephasing) can be addressed by label.
All trace norms are unhalved, ``|M|_1 = Tr sqrt(M^dag M)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertDims

HERMITICITY_RTOL = 1e-10
PSD_EIG_FLOOR = -1e-10
TRACE_TOL = 1e-10
UNIT_NORM_TOL = 1e-10
POVM_COMPLETENESS_TOL = 1e-8
PROJECTOR_TOL = 1e-8
EIG_GROUP_GAP = 1e-9
RANK_CUTOFF = 1e-12

__all__ = [
    "HilbertDims",
    "HermitianOperator",
    "DensityOperator",
    "PureStateVector",
    "RankOnePovm",
    "EighResult",
    "tensor",
    "partial_trace",
    "trace_distance",
    "generalized_fidelity",
    "purify",
    "eigh",
    "dephase",
    "gentle_measurement_check",
    "sequential_success",
    "trace_norm",
    "operator_norm",
    "psd_sqrt",
]


def _as_dims(dims) -> HilbertDims:
    if isinstance(dims, HilbertDims):
        return dims
    return HilbertDims(tuple(dims))


def trace_norm(matrix: np.ndarray) -> float:
    """Unhalved Schatten 1-norm of an arbitrary square matrix."""
    return float(np.linalg.svd(matrix, compute_uv=False).sum())


def _hermitian_trace_norm(matrix: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(matrix)).sum())


def operator_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix with multipartite dimension metadata.

    The constructor rejects inputs whose anti-Hermitian part exceeds the
    relative tolerance and stores the symmetrized matrix.
    """

    dims: HilbertDims
    matrix: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        m = np.asarray(self.matrix, dtype=complex)
        n = dims.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match total dimension {n}")
        scale = np.linalg.norm(m)
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_RTOL * max(scale, 1e-300):
            raise ValueError("matrix is not Hermitian within tolerance")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def total_dim(self) -> int:
        return self.dims.total_dim

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def with_dims(self, dims) -> "HermitianOperator":
        return HermitianOperator(_as_dims(dims), self.matrix)


@dataclass(frozen=True)
class DensityOperator:
    """Positive semidefinite operator with trace at most one.

    ``normalized`` marks unit-trace states; substates (trace < 1) arise from
    spectrum truncation and carry ``normalized=False``.  Inputs with
    eigenvalues below ``-1e-10`` are rejected rather than clipped.
    """

    op: HermitianOperator
    normalized: bool = True

    def __post_init__(self):
        w = np.linalg.eigvalsh(self.op.matrix)
        if w.min() < PSD_EIG_FLOOR:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
        tr = float(w.sum())
        if not (0.0 < tr <= 1.0 + TRACE_TOL):
            raise ValueError(f"trace {tr!r} outside (0, 1]")
        if self.normalized and abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"state marked normalized but trace is {tr!r}")

    @classmethod
    def from_matrix(cls, matrix, dims, normalized: bool | None = None) -> "DensityOperator":
        op = HermitianOperator(_as_dims(dims), matrix)
        if normalized is None:
            normalized = abs(op.trace() - 1.0) <= TRACE_TOL
        return cls(op, normalized)

    @classmethod
    def diagonal(cls, probs, dims=None, normalized: bool | None = None) -> "DensityOperator":
        p = np.asarray(probs, dtype=float)
        if dims is None:
            dims = HilbertDims.single("A", p.size)
        return cls.from_matrix(np.diag(p.astype(complex)), dims, normalized)

    @property
    def dims(self) -> HilbertDims:
        return self.op.dims

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def total_dim(self) -> int:
        return self.op.total_dim

    def trace(self) -> float:
        return self.op.trace()

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1].copy()


@dataclass(frozen=True)
class PureStateVector:
    """Unit vector with multipartite dimension metadata."""

    dims: HilbertDims
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != dims.total_dim:
            raise ValueError(f"vector length {v.size} does not match total dimension {dims.total_dim}")
        if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"vector norm {np.linalg.norm(v)!r} is not 1 within tolerance")
        v.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def basis_state(cls, dims, index: int) -> "PureStateVector":
        dims = _as_dims(dims)
        v = np.zeros(dims.total_dim, dtype=complex)
        v[index] = 1.0
        return cls(dims, v)

    def density(self, normalized: bool = True) -> DensityOperator:
        return DensityOperator.from_matrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, normalized)

    @property
    def total_dim(self) -> int:
        return self.dims.total_dim


@dataclass(frozen=True)
class RankOnePovm:
    """Weighted unit vectors ``{(c_x, psi_x)}`` summing to the identity.

    Completeness ``sum_x c_x |psi_x><psi_x| = I`` is enforced within 1e-8 in
    operator norm at construction.
    """

    weights: np.ndarray
    vectors: np.ndarray  # shape (k, d); row x is psi_x
    labels: tuple = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        v = np.asarray(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] != w.size:
            raise ValueError("vectors must be a (k, d) array matching the number of weights")
        if w.min() < -1e-12:
            raise ValueError(f"negative POVM weight {w.min()!r}")
        w = np.maximum(w, 0.0)
        norms = np.linalg.norm(v, axis=1)
        bad = (w > 1e-12) & (np.abs(norms - 1.0) > 1e-9)
        if np.any(bad):
            raise ValueError("POVM vectors with positive weight must be unit vectors")
        gram = v.conj().T @ (w[:, None] * v)
        d = v.shape[1]
        if operator_norm(gram - np.eye(d)) > POVM_COMPLETENESS_TOL:
            raise ValueError("POVM elements do not sum to the identity within tolerance")
        labels = self.labels if self.labels is not None else tuple(range(w.size))
        if len(labels) != w.size:
            raise ValueError("labels length must match the number of outcomes")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", tuple(labels))

    @classmethod
    def computational_basis(cls, d: int) -> "RankOnePovm":
        return cls(np.ones(d), np.eye(d, dtype=complex))

    @property
    def num_outcomes(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def element(self, x: int) -> np.ndarray:
        psi = self.vectors[x]
        return self.weights[x] * np.outer(psi, psi.conj())

    def element_sqrt(self, x: int) -> np.ndarray:
        psi = self.vectors[x]
        return np.sqrt(self.weights[x]) * np.outer(psi, psi.conj())

    def outcome_probabilities(self, rho: np.ndarray) -> np.ndarray:
        """P(x) = Tr[Lambda_x rho] for a density matrix given as an array."""
        # Tr[c psi psi^dag rho] = c <psi| rho |psi>
        p = self.weights * np.einsum("xi,ij,xj->x", self.vectors.conj(), rho, self.vectors).real
        return np.maximum(p, 0.0)

    def basis_permutation(self) -> np.ndarray | None:
        """If this is a relabelled computational-basis measurement, return the
        outcome -> basis-index map; otherwise ``None``."""
        if self.num_outcomes != self.dim:
            return None
        if np.any(np.abs(self.weights - 1.0) > 1e-12):
            return None
        perm = np.full(self.dim, -1, dtype=int)
        for x in range(self.num_outcomes):
            row = np.abs(self.vectors[x])
            j = int(row.argmax())
            if abs(row[j] - 1.0) > 1e-12 or row.sum() - row[j] > 1e-12:
                return None
            perm[x] = j
        if len(set(perm.tolist())) != self.dim:
            return None
        return perm


# ---------------------------------------------------------------------------
# operations


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product with concatenated dims."""
    return HermitianOperator(a.dims.concat(b.dims), np.kron(a.matrix, b.matrix))


def _partial_trace_matrix(matrix: np.ndarray, dims: tuple[int, ...], keep_positions: tuple[int, ...]) -> np.ndarray:
    k = len(dims)
    t = matrix.reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep_positions]
    # trace out highest positions first so earlier axis numbers stay valid
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    d_keep = 1
    for i in keep_positions:
        d_keep *= dims[i]
    return t.reshape(d_keep, d_keep)


def partial_trace(op: HermitianOperator, keep) -> HermitianOperator:
    """Trace out every subsystem not named in ``keep``.

    The kept factors retain their original relative order.
    """
    if isinstance(keep, str):
        keep = (keep,)
    keep = tuple(keep)
    positions = sorted(op.dims.position(lbl) for lbl in keep)
    out = _partial_trace_matrix(op.matrix, op.dims.dims, tuple(positions))
    return HermitianOperator(op.dims.subset(keep), out)


def partial_trace_density(rho: DensityOperator, keep) -> DensityOperator:
    return DensityOperator(partial_trace(rho.op, keep), rho.normalized)


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """Unhalved trace distance ``|a - b|_1`` (in [0, 2] for normalized inputs)."""
    if a.dims.dims != b.dims.dims:
        raise ValueError(f"dimension mismatch {a.dims.dims} vs {b.dims.dims}")
    return _hermitian_trace_norm(a.matrix - b.matrix)


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below 0 are treated as 0."""
    w, v = np.linalg.eigh(matrix)
    w = np.sqrt(np.maximum(w, 0.0))
    return (v * w) @ v.conj().T


def generalized_fidelity(a: DensityOperator, b: DensityOperator) -> float:
    """F(a, b) = |sqrt(a) sqrt(b)|_1 + sqrt((1 - Tr a)(1 - Tr b)).

    Coincides with the standard fidelity when either input is normalized.
    """
    if a.dims.dims != b.dims.dims:
        raise ValueError(f"dimension mismatch {a.dims.dims} vs {b.dims.dims}")
    core = trace_norm(psd_sqrt(a.matrix) @ psd_sqrt(b.matrix))
    slack = max(0.0, 1.0 - a.trace()) * max(0.0, 1.0 - b.trace())
    return core + float(np.sqrt(slack))


@dataclass(frozen=True)
class EighResult:
    """Deterministic spectral decomposition.

    Eigenvalues are descending; eigenvalues closer than ``EIG_GROUP_GAP`` are
    grouped, and within a group the (phase-fixed) eigenvectors are ordered by
    lexicographic comparison of their amplitudes, so identical input bytes
    produce identical output.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray  # column i is the eigenvector of eigenvalues[i]
    groups: tuple[tuple[int, int], ...]  # half-open index ranges of degenerate groups


def _phase_fix(column: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(column) > 1e-12)
    if idx.size == 0:
        return column
    a = column[idx[0]]
    return column * (abs(a) / a)


def _lex_key(column: np.ndarray):
    return tuple(np.stack([column.real, column.imag], axis=1).reshape(-1).tolist())


def eigh(op: HermitianOperator | np.ndarray) -> EighResult:
    """Spectral decomposition with deterministic ordering and tie-breaking."""
    matrix = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op, dtype=complex)
    if not isinstance(op, HermitianOperator):
        if np.linalg.norm(matrix - matrix.conj().T) > HERMITICITY_RTOL * max(np.linalg.norm(matrix), 1e-300):
            raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(matrix)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    groups = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[start] - w[i] > EIG_GROUP_GAP:
            groups.append((start, i))
            if i - start > 1:
                cols = [_phase_fix(v[:, j]) for j in range(start, i)]
                order = sorted(range(len(cols)), key=lambda j: _lex_key(cols[j]))
                for off, j in enumerate(order):
                    v[:, start + off] = cols[j]
            else:
                v[:, start] = _phase_fix(v[:, start])
            start = i
    w.setflags(write=False)
    v.setflags(write=False)
    return EighResult(w, v, tuple(groups))


def purify(rho: DensityOperator, ref_label: str = "R") -> PureStateVector:
    """Purification on ``dims + (ref_label, rank(rho))``.

    The reference dimension equals the rank of the input (eigenvalues above
    ``RANK_CUTOFF``); the partial trace over the reference recovers the input.
    """
    if not rho.normalized:
        raise ValueError("purify requires a normalized state")
    if ref_label in rho.dims.labels:
        raise ValueError(f"reference label {ref_label!r} already present in {rho.dims.labels}")
    dec = eigh(rho.op)
    rank = int(np.sum(dec.eigenvalues > RANK_CUTOFF))
    d = rho.total_dim
    amps = np.zeros((d, rank), dtype=complex)
    for i in range(rank):
        amps[:, i] = np.sqrt(dec.eigenvalues[i]) * dec.vectors[:, i]
    dims = rho.dims.concat(HilbertDims.single(ref_label, rank))
    return PureStateVector(dims, amps.reshape(-1))


def dephase(rho: DensityOperator, subsystem: str) -> DensityOperator:
    """Remove coherences in the computational basis of one subsystem.

    Trace preserving and idempotent; the output is block-diagonal with respect
    to the named factor.
    """
    pos = rho.dims.position(subsystem)
    dims = rho.dims.dims
    pre = int(np.prod(dims[:pos], dtype=np.int64)) if pos > 0 else 1
    d = dims[pos]
    post = int(np.prod(dims[pos + 1:], dtype=np.int64)) if pos + 1 < len(dims) else 1
    m = rho.matrix.reshape(pre, d, post, pre, d, post)
    out = np.zeros_like(m)
    for s in range(d):
        out[:, s, :, :, s, :] = m[:, s, :, :, s, :]
    return DensityOperator.from_matrix(out.reshape(rho.total_dim, rho.total_dim), rho.dims, rho.normalized)


def _check_effect(lam: np.ndarray) -> None:
    w = np.linalg.eigvalsh(lam)
    if w.min() < -1e-9 or w.max() > 1.0 + 1e-9:
        raise ValueError(f"operator eigenvalues in [{w.min():.3e}, {w.max():.3e}] not within [0, 1]")


def gentle_measurement_check(rho: DensityOperator, lam: HermitianOperator) -> tuple[float, float]:
    """Measure both sides of the gentle-measurement inequality.

    With ``eps = 1 - Tr[lam rho]`` returns
    ``(|rho - sqrt(lam) rho sqrt(lam)|_1, 2 sqrt(eps))``; the first is at most
    the second.
    """
    _check_effect(lam.matrix)
    eps = max(0.0, 1.0 - float(np.trace(lam.matrix @ rho.matrix).real))
    s = psd_sqrt(lam.matrix)
    lhs = _hermitian_trace_norm(rho.matrix - s @ rho.matrix @ s)
    rhs = 2.0 * float(np.sqrt(eps))
    return lhs, rhs


def sequential_success(rho: DensityOperator, projectors) -> tuple[float, float]:
    """Measure both sides of the sequential-measurement lower bound.

    For projectors ``P_1 .. P_k`` returns
    ``(Tr[P_k .. P_1 rho P_1 .. P_k], Tr[rho] - 2 sqrt(sum_i Tr[(I - P_i) rho]))``;
    the first is at least the second.
    """
    mats = []
    for p in projectors:
        m = p.matrix if isinstance(p, HermitianOperator) else np.asarray(p, dtype=complex)
        if np.linalg.norm(m @ m - m) > PROJECTOR_TOL * max(1.0, np.linalg.norm(m)):
            raise ValueError("sequential_success requires projectors")
        mats.append(m)
    d = rho.total_dim
    prod = np.eye(d, dtype=complex)
    miss = 0.0
    for m in mats:
        prod = m @ prod
        miss += float(np.trace((np.eye(d) - m) @ rho.matrix).real)
    lhs = float(np.trace(prod @ rho.matrix @ prod.conj().T).real)
    rhs = rho.trace() - 2.0 * float(np.sqrt(max(0.0, miss)))
    return lhs, rhs
