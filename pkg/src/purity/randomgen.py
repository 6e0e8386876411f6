"""Seeded generators for random states, unitaries, and rank-one POVMs.

All generators are pure functions of ``(shape parameters, seed)``: the same
seed gives bit-identical output.  Densities are Hilbert-Schmidt (Wishart)
distributed at the requested rank.
"""

from __future__ import annotations

import numpy as np

from .hilbert import HilbertDims
from .operators import DensityOperator, RankOnePovm

__all__ = ["random_density", "haar_unitary", "random_rank_one_povm", "random_cq"]


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_density(d: int, rank: int | None = None, seed: int = 0, label: str = "A") -> DensityOperator:
    """Normalized Wishart density of the given rank on a ``d``-dimensional system."""
    if rank is None:
        rank = d
    if not (1 <= rank <= d):
        raise ValueError(f"rank {rank} not in [1, {d}]")
    rng = np.random.default_rng(seed)
    g = _complex_gaussian(rng, (d, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityOperator.from_matrix(m, HilbertDims.single(label, d), normalized=True)


def haar_unitary(d: int, seed: int = 0) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix with phase fix."""
    rng = np.random.default_rng(seed)
    z = _complex_gaussian(rng, (d, d)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases.conj()


def random_rank_one_povm(d: int, k: int, seed: int = 0) -> RankOnePovm:
    """Rank-one POVM with ``k >= d`` outcomes from the rows of a Haar isometry.

    The rows ``v_x`` of the first ``d`` columns of a Haar unitary on ``C^k``
    satisfy ``sum_x v_x^dag v_x = I``, so ``c_x = |v_x|^2`` and
    ``psi_x = v_x / |v_x|``.  ``k = d`` reduces to an orthonormal-basis
    measurement with unit weights.
    """
    if k < d:
        raise ValueError(f"need at least d={d} outcomes for completeness, got k={k}")
    u = haar_unitary(k, seed)
    rows = u[:, :d].conj()
    weights = np.linalg.norm(rows, axis=1) ** 2
    vectors = np.zeros((k, d), dtype=complex)
    for x in range(k):
        if weights[x] > 1e-300:
            vectors[x] = rows[x] / np.linalg.norm(rows[x])
        else:
            vectors[x, 0] = 1.0
    return RankOnePovm(weights, vectors)


def random_cq(num_labels: int, d: int, seed: int = 0, rank: int | None = None):
    """Random classical-quantum data: a probability vector and conditionals.

    Returns ``(probs, conditionals)`` with conditionals as plain matrices;
    convenient for building :class:`purity.cq.CqState` test inputs.
    """
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(num_labels))
    conds = []
    for x in range(num_labels):
        g = _complex_gaussian(rng, (d, rank if rank is not None else d))
        m = g @ g.conj().T
        conds.append(m / np.trace(m).real)
    return probs, conds
