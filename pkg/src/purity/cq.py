"""Classical-quantum states: a probability vector plus conditional densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertDims
from .operators import DensityOperator, HermitianOperator, PureStateVector, RankOnePovm, partial_trace

__all__ = ["CqState", "measured_cq", "measurement_reference_cq"]

_PROB_TOL = 1e-10


@dataclass(frozen=True)
class CqState:
    """State of the form ``sum_x p(x) |x><x| (x) rho_x``.

    ``probs`` may be subnormalized (``sum <= 1``); every conditional with
    positive probability must be a normalized density on the shared ``b_dims``.
    Conditionals are stored as plain complex matrices.
    """

    probs: np.ndarray
    conditionals: tuple[np.ndarray, ...]
    b_dims: HilbertDims
    labels: tuple = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("empty label set")
        if p.min() < -_PROB_TOL:
            raise ValueError(f"negative probability {p.min()!r}")
        p = np.maximum(p, 0.0)
        if p.sum() > 1.0 + _PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r} > 1")
        conds = tuple(np.asarray(c, dtype=complex) for c in self.conditionals)
        if len(conds) != p.size:
            raise ValueError("need one conditional per label")
        d = self.b_dims.total_dim
        for x, c in enumerate(conds):
            if c.shape != (d, d):
                raise ValueError(f"conditionals[{x}]: shape {c.shape} does not match b_dims {d}")
            if p[x] > _PROB_TOL:
                tr = np.trace(c).real
                if abs(tr - 1.0) > 1e-8:
                    raise ValueError(f"conditionals[{x}]: trace {tr!r} is not 1")
        labels = self.labels if self.labels is not None else tuple(range(p.size))
        if len(labels) != p.size:
            raise ValueError("labels length must match probs")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "conditionals", conds)
        object.__setattr__(self, "labels", tuple(labels))

    @classmethod
    def classical(cls, joint: np.ndarray, b_label: str = "B", labels=None) -> "CqState":
        """CQ state from a classical joint distribution P(x, b) (diagonal conditionals)."""
        joint = np.asarray(joint, dtype=float)
        probs = joint.sum(axis=1)
        conds = []
        for x in range(joint.shape[0]):
            if probs[x] > _PROB_TOL:
                conds.append(np.diag((joint[x] / probs[x]).astype(complex)))
            else:
                c = np.zeros((joint.shape[1], joint.shape[1]), dtype=complex)
                c[0, 0] = 1.0
                conds.append(c)
        return cls(probs, tuple(conds), HilbertDims.single(b_label, joint.shape[1]), labels)

    @property
    def num_labels(self) -> int:
        return self.probs.size

    @property
    def b_dim(self) -> int:
        return self.b_dims.total_dim

    def total_mass(self) -> float:
        return float(self.probs.sum())

    def average_conditional(self) -> np.ndarray:
        """The B marginal ``sum_x p(x) rho_x`` (unnormalized if subnormalized)."""
        out = np.zeros((self.b_dim, self.b_dim), dtype=complex)
        for x in range(self.num_labels):
            if self.probs[x] > 0.0:
                out += self.probs[x] * self.conditionals[x]
        return out

    def joint_operator(self, x_label: str = "X") -> DensityOperator:
        """Dense block-diagonal operator on X (x) B."""
        d = self.b_dim
        k = self.num_labels
        m = np.zeros((k * d, k * d), dtype=complex)
        for x in range(k):
            if self.probs[x] > 0.0:
                m[x * d:(x + 1) * d, x * d:(x + 1) * d] = self.probs[x] * self.conditionals[x]
        dims = HilbertDims.single(x_label, k).concat(self.b_dims)
        return DensityOperator.from_matrix(m, dims, normalized=abs(self.total_mass() - 1.0) <= _PROB_TOL)

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        """True when every occupied conditional is diagonal (classical side information)."""
        for x in range(self.num_labels):
            if self.probs[x] > 0.0:
                c = self.conditionals[x]
                if np.abs(c - np.diag(np.diagonal(c))).max() > tol:
                    return False
        return True

    def classical_joint(self) -> np.ndarray:
        """P(x, b) table; valid only for diagonal conditionals."""
        out = np.zeros((self.num_labels, self.b_dim))
        for x in range(self.num_labels):
            if self.probs[x] > 0.0:
                out[x] = self.probs[x] * np.diagonal(self.conditionals[x]).real
        return out

    def restricted(self, keep_indices, renormalize: bool = False) -> "CqState":
        """Sub-state on a subset of labels, optionally renormalized."""
        keep = list(keep_indices)
        p = self.probs[keep].copy()
        if renormalize:
            p /= p.sum()
        return CqState(p, tuple(self.conditionals[i] for i in keep), self.b_dims,
                       tuple(self.labels[i] for i in keep))


def measured_cq(phi: PureStateVector, povm: RankOnePovm, measured_label: str,
                keep_labels) -> CqState:
    """CQ state from measuring one subsystem of a pure state with a rank-one POVM.

    Returns ``sum_x p(x)|x><x| (x) rho_x`` where ``p(x) = <phi|Lambda_x|phi>``
    and ``rho_x`` is the normalized post-measurement state on ``keep_labels``.
    """
    if isinstance(keep_labels, str):
        keep_labels = (keep_labels,)
    keep_labels = tuple(keep_labels)
    pos = phi.dims.position(measured_label)
    dims = phi.dims.dims
    d_a = dims[pos]
    if povm.dim != d_a:
        raise ValueError(f"POVM dimension {povm.dim} does not match subsystem {measured_label!r} ({d_a})")
    pre = int(np.prod(dims[:pos], dtype=np.int64)) if pos > 0 else 1
    post = int(np.prod(dims[pos + 1:], dtype=np.int64)) if pos + 1 < len(dims) else 1
    amps = phi.amplitudes.reshape(pre, d_a, post)
    probs = np.zeros(povm.num_outcomes)
    conds = []
    keep_dims = phi.dims.subset(keep_labels)
    rest_op_dims = HilbertDims(tuple(p for p in phi.dims.parts if p[0] != measured_label))
    for x in range(povm.num_outcomes):
        # sqrt(Lambda_x)|phi> = sqrt(c_x) |psi_x> <psi_x|phi>
        overlap = np.einsum("i,aib->ab", np.sqrt(povm.weights[x]) * povm.vectors[x].conj(), amps)
        p = float(np.vdot(overlap, overlap).real)
        probs[x] = p
        if p > 1e-14:
            vec = overlap.reshape(-1) / np.sqrt(p)
            full = np.outer(vec, vec.conj())
            op = HermitianOperator(rest_op_dims, full)
            conds.append(partial_trace(op, keep_labels).matrix)
        else:
            c = np.zeros((keep_dims.total_dim, keep_dims.total_dim), dtype=complex)
            c[0, 0] = 1.0
            conds.append(c)
    return CqState(probs, tuple(conds), keep_dims, povm.labels)


def measurement_reference_cq(rho: DensityOperator, povm: RankOnePovm) -> CqState:
    """Measure a purification's system register; keep the reference register.

    The conditionals are the reference states ``(sqrt(rho) Lambda_x^T sqrt(rho)) / p(x)``
    realized directly from an explicit purification.
    """
    from .operators import purify

    phi = purify(rho, ref_label="_ref")
    label = rho.dims.labels[0] if len(rho.dims) == 1 else None
    if label is None:
        raise ValueError("measurement_reference_cq expects a single-subsystem state")
    return measured_cq(phi, povm, label, ("_ref",))
