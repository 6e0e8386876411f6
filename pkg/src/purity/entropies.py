"""Entropic quantities: von Neumann/Shannon, max-entropy variants, D_max.

Smoothing convention: fidelity-ball optimizations are never solved exactly.
The truncation-based surrogates computed here (``support_max_entropy``,
``norm_max_entropy``, ``smooth_max_entropy_bound``) are constructive and are
tagged ``upper-bound`` wherever they stand in for a smoothed quantity.
All values are in bits (base-2 logs); ``+inf`` is a first-class value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cq import CqState
from .operators import (
    DensityOperator,
    HilbertDims,
    eigh,
    psd_sqrt,
)
from .spectral import SpectralMultiset

__all__ = [
    "shannon_entropy",
    "von_neumann_entropy",
    "max_entropy",
    "truncate_tail",
    "support_max_entropy",
    "norm_max_entropy",
    "smooth_max_entropy_bound",
    "conditional_min_entropy_cq",
    "max_relative_entropy",
    "max_information",
    "modified_max_information_cq",
    "EntropyReport",
    "aep_sweep",
    "distillation_rate_report",
]

SUPPORT_CUTOFF = 1e-12
TRUNCATION_SLACK = 1e-12


def shannon_entropy(probs) -> float:
    """Shannon entropy in bits of a normalized probability vector."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if p.min() < -1e-10:
        raise ValueError(f"negative probability {p.min()!r}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Entropy in bits of the eigenvalue distribution of a normalized state."""
    if not rho.normalized:
        raise ValueError("von Neumann entropy requires a normalized state")
    w = np.maximum(rho.eigenvalues(), 0.0)
    return shannon_entropy(w / w.sum())


def _spectrum_of(state) -> np.ndarray:
    """Eigenvalues (or probabilities) of a state-like input, any order."""
    if isinstance(state, DensityOperator):
        return np.maximum(state.eigenvalues(), 0.0)
    if isinstance(state, SpectralMultiset):
        return np.array([v for v, m in state.entries for _ in range(m)])
    p = np.asarray(state, dtype=float).reshape(-1)
    if p.min() < -1e-10:
        raise ValueError(f"negative probability {p.min()!r}")
    return np.maximum(p, 0.0)


def max_entropy(state) -> float:
    """Renyi-1/2 entropy ``2 log2 sum_i sqrt(lambda_i)`` of a substate's spectrum."""
    w = _spectrum_of(state)
    total = np.sqrt(w).sum()
    if total <= 0.0:
        raise ValueError("zero operator has no max-entropy")
    return float(2.0 * np.log2(total))


def _truncation_kept_mask(values: np.ndarray, eps: float) -> np.ndarray:
    """Greedy maximal tail removal: mark atoms kept after removing the
    smallest entries whose total is at most ``eps``.

    Values are addressed by position; ties are broken by removing the higher
    index first, so lower indices are retained.
    """
    if not (0.0 <= eps <= 1.0):
        raise ValueError(f"eps {eps!r} outside [0, 1]")
    order = sorted(range(values.size), key=lambda i: (values[i], -i))
    slack = TRUNCATION_SLACK * max(1.0, eps)
    kept = np.ones(values.size, dtype=bool)
    spent = 0.0
    for i in order:
        if spent + values[i] <= eps + slack:
            kept[i] = False
            spent += values[i]
        else:
            break
    return kept


def truncate_tail(state, eps: float):
    """Zero out the smallest spectrum entries adding up to at most ``eps``.

    Probability vectors come back as vectors with zeroed entries; density
    operators come back as substates assembled from the retained eigenpairs.
    The removal is maximal: the next-smallest retained atom would overshoot.
    """
    if isinstance(state, SpectralMultiset):
        return state.truncate_tail(eps)
    if isinstance(state, DensityOperator):
        dec = eigh(state.op)
        kept = _truncation_kept_mask(np.maximum(dec.eigenvalues, 0.0), eps)
        if kept.all():
            return state
        m = np.zeros_like(state.matrix)
        for i in np.flatnonzero(kept):
            v = dec.vectors[:, i]
            m += dec.eigenvalues[i] * np.outer(v, v.conj())
        return DensityOperator.from_matrix(m, state.dims, normalized=False)
    p = np.asarray(state, dtype=float).reshape(-1)
    kept = _truncation_kept_mask(np.maximum(p, 0.0), eps)
    out = np.where(kept, p, 0.0)
    return out


def _truncated_spectrum(state, eps: float) -> np.ndarray:
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps {eps!r} outside [0, 1)")
    if isinstance(state, SpectralMultiset):
        t = state.truncate_tail(eps)
        return np.array([v for v, m in t.entries for _ in range(m)])
    w = _spectrum_of(state)
    kept = _truncation_kept_mask(w, eps)
    return w[kept & (w > 0.0)]


def support_max_entropy(state, eps: float) -> float:
    """log2 of the support size after removing an eps-tail of the spectrum."""
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps {eps!r} outside [0, 1)")
    if isinstance(state, SpectralMultiset):
        count = state.truncate_tail(eps).support_size
    else:
        count = int(np.sum(_truncated_spectrum(state, eps) > 0.0))
    if count == 0:
        raise ValueError("truncation removed the whole spectrum")
    return float(np.log2(count))


def norm_max_entropy(state, eps: float) -> float:
    """log2 of the largest inverse eigenvalue retained after eps-tail removal."""
    w = _truncated_spectrum(state, eps)
    if w.size == 0:
        raise ValueError("truncation removed the whole spectrum")
    return float(-np.log2(w.min()))


def smooth_max_entropy_bound(state, eps: float) -> float:
    """Constructive upper bound ``2 log2 Tr sqrt(rho')`` on the smoothed max-entropy.

    ``rho'`` is the eps-tail truncation witness, so this dominates the
    fidelity-ball-smoothed max-entropy without solving the ball optimization.
    """
    w = _truncated_spectrum(state, eps)
    if w.size == 0:
        raise ValueError("truncation removed the whole spectrum")
    return float(2.0 * np.log2(np.sqrt(w).sum()))


def conditional_min_entropy_cq(cq: CqState) -> float:
    """Conditional min-entropy ``-log2 sum_x p(x) lambda_max(rho_x)`` of a cq state.

    Nonnegative for every cq input, since each conditional has operator norm
    at most one.
    """
    if cq.total_mass() <= 0.0:
        raise ValueError("empty support")
    if abs(cq.total_mass() - 1.0) > 1e-9:
        raise ValueError("conditional min-entropy requires a normalized cq state")
    guess = 0.0
    for x in range(cq.num_labels):
        if cq.probs[x] > 0.0:
            guess += cq.probs[x] * float(np.linalg.eigvalsh(cq.conditionals[x])[-1])
    return float(-np.log2(guess))


def _support_projector(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(projector onto support, eigenvalues, eigenvectors) with relative cutoff."""
    w, v = np.linalg.eigh(matrix)
    cutoff = max(w.max(), 0.0) * SUPPORT_CUTOFF
    on = w > cutoff
    proj = (v[:, on]) @ (v[:, on]).conj().T
    return proj, w, v


def max_relative_entropy(rho: DensityOperator | np.ndarray, sigma: DensityOperator | np.ndarray) -> float:
    """D_max in bits: ``log2 |sigma^{-1/2} rho sigma^{-1/2}|_inf`` on supp(sigma).

    Returns ``+inf`` when rho has mass outside the support of sigma.
    """
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    s = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma, dtype=complex)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch {r.shape} vs {s.shape}")
    proj, w, v = _support_projector(s)
    leak = float(np.trace(r - proj @ r @ proj).real)
    d = r.shape[0]
    if leak > 1e-10:
        return float("inf")
    cutoff = max(w.max(), 0.0) * SUPPORT_CUTOFF
    inv_sqrt = (v * np.where(w > cutoff, 1.0 / np.sqrt(np.maximum(w, cutoff)), 0.0)) @ v.conj().T
    m = inv_sqrt @ r @ inv_sqrt
    top = float(np.linalg.eigvalsh(m)[-1])
    if top <= 0.0:
        raise ValueError("rho is the zero operator")
    return float(np.log2(top))


def max_information(rho_ab: DensityOperator) -> float:
    """I_max in bits: D_max between the state and the product of its marginals."""
    from .operators import partial_trace, tensor

    if len(rho_ab.dims) != 2:
        raise ValueError("max_information expects a bipartite state")
    a, b = rho_ab.dims.labels
    prod = tensor(partial_trace(rho_ab.op, (a,)), partial_trace(rho_ab.op, (b,)))
    return max_relative_entropy(rho_ab.matrix, prod.matrix)


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach its tolerance; carries a residual report."""

    def __init__(self, message: str, residual: float, best_value: float | None = None):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
        self.best_value = best_value


def modified_max_information_cq(cq: CqState, tol_bits: float = 1e-7,
                                max_iters: int = 10_000) -> tuple[float, DensityOperator]:
    """``min over states sigma of max_x D_max(rho_x || sigma)`` for a cq state.

    Solved through the equivalent operator program
    ``min { Tr tau : tau >= rho_x for all x }`` and its dual, the optimal
    unnormalized discrimination value ``max_POVM sum_x Tr[Y_x rho_x]``.  A
    fixed-point iteration ascends the dual; the returned value is certified by
    the explicit operator inequality ``rho_x <= 2^value sigma*`` and the
    primal-dual gap is driven below ``tol_bits``.
    """
    active = [np.asarray(cq.conditionals[x], dtype=complex)
              for x in range(cq.num_labels) if cq.probs[x] > 0.0]
    if not active:
        raise ValueError("empty support")
    k = len(active)
    d = cq.b_dim
    eye = np.eye(d, dtype=complex)

    def certified(sigma: np.ndarray) -> tuple[float, np.ndarray]:
        sigma = (1.0 - 1e-12) * sigma + 1e-12 * eye / d
        sigma /= np.trace(sigma).real
        vals = [max_relative_entropy(r, sigma) for r in active]
        return max(vals), sigma

    def dual_value(povm: list[np.ndarray]) -> float:
        return float(sum(np.trace(y @ r).real for y, r in zip(povm, active)))

    avg = sum(active) / k
    best_value, best_sigma = certified(avg)
    povm = [eye / k for _ in range(k)]
    lower = float(np.log2(max(dual_value(povm), 1.0)))
    for it in range(max_iters):
        l_op = sum(r @ y @ r for r, y in zip(active, povm))
        proj, w, v = _support_projector(l_op)
        cutoff = max(w.max(), 0.0) * SUPPORT_CUTOFF
        inv_sqrt = (v * np.where(w > cutoff, 1.0 / np.sqrt(np.maximum(w, cutoff)), 0.0)) @ v.conj().T
        new = [inv_sqrt @ (r @ y @ r) @ inv_sqrt for r, y in zip(active, povm)]
        comp = eye - sum(new)
        new[0] = new[0] + comp  # park the unreached subspace on the first outcome
        povm = [0.5 * (y + y.conj().T) for y in new]
        lower = max(lower, float(np.log2(max(dual_value(povm), 1.0))))
        upsilon = sum(y @ r for y, r in zip(povm, active))
        upsilon = 0.5 * (upsilon + upsilon.conj().T)
        wfull, vfull = np.linalg.eigh(upsilon)
        if wfull[-1] > 0:
            cand = (vfull * np.maximum(wfull, 0.0)) @ vfull.conj().T
            value, sigma = certified(cand / np.trace(cand).real)
            if value < best_value:
                best_value, best_sigma = value, sigma
        if best_value - lower <= tol_bits:
            break
    else:
        if best_value - lower > 1e-4:
            raise ConvergenceError("modified max-information solver did not converge",
                                   residual=best_value - lower, best_value=best_value)
    dims = cq.b_dims
    return float(best_value), DensityOperator.from_matrix(best_sigma, dims, normalized=True)


@dataclass
class EntropyReport:
    """Named value map in bits; each entry tagged exact / upper-bound / lower-bound.

    ``symbolic`` carries residual terms that the source bound leaves as
    unspecified constants; they are reported verbatim and never folded into a
    numeric total.
    """

    entries: dict[str, tuple[float, str]] = field(default_factory=dict)
    symbolic: dict[str, str] = field(default_factory=dict)

    def set(self, name: str, value: float, tag: str = "exact") -> None:
        if tag not in ("exact", "upper-bound", "lower-bound"):
            raise ValueError(f"unknown tag {tag!r}")
        if not (np.isfinite(value) or np.isposinf(value)):
            raise ValueError(f"entry {name!r} must be finite or +inf, got {value!r}")
        self.entries[name] = (float(value), tag)

    def value(self, name: str) -> float:
        return self.entries[name][0]

    def to_dict(self) -> dict:
        return {
            "entries": {k: {"value": v, "tag": t} for k, (v, t) in sorted(self.entries.items())},
            "symbolic": dict(sorted(self.symbolic.items())),
        }


def aep_sweep(state, eps: float, n_max: int) -> list[dict]:
    """Per-copy truncation entropies of tensor powers, one row per ``n``.

    Works on the exact eigenvalue multiset, so ``n_max = 30`` on a qubit costs
    milliseconds.  Each row holds ``support``, ``norm`` and ``smooth_ub``
    entropies of the n-fold power divided by ``n``.
    """
    from .spectral import iid_power

    if isinstance(state, SpectralMultiset):
        ms = state
    elif isinstance(state, DensityOperator):
        ms = SpectralMultiset.from_values([v for v in np.maximum(state.eigenvalues(), 0.0) if v > 0.0])
    else:
        p = np.asarray(state, dtype=float)
        ms = SpectralMultiset.from_values([v for v in p if v > 0.0])
    rows = []
    for n in range(1, n_max + 1):
        power = iid_power(ms, n)
        trunc = power.truncate_tail(eps)
        support = sum(m for v, m in trunc.entries if v > 0.0)
        smallest = min(v for v, m in trunc.entries)
        sq = sum(m * np.sqrt(v) for v, m in trunc.entries)
        rows.append({
            "n": n,
            "support": float(np.log2(support)) / n,
            "norm": float(-np.log2(smallest)) / n,
            "smooth_ub": float(2.0 * np.log2(sq)) / n,
        })
    return rows


def distillation_rate_report(rho_ab: DensityOperator, povm, eps: float) -> EntropyReport:
    """Term-by-term report of the one-way distillation rate expression.

    Exact terms: total log-dimension, the two truncation-support entropies of
    the marginals (at ``eps^2/48`` and ``eps``), and the hypothesis-testing
    information of the measured cq state at ``eps0 = eps**(1/4)``.  The
    classical-communication surrogate is the truncation-support entropy of the
    sender's marginal plus ``2 log2(24/eps^2)`` and is an upper bound.
    Unspecified additive constants stay symbolic.
    """
    from .hypothesis_testing import hypothesis_testing_information_cq
    from .operators import partial_trace, purify

    if len(rho_ab.dims) != 2:
        raise ValueError("expected a bipartite state")
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps {eps!r} outside [0, 1)")
    a, b = rho_ab.dims.labels
    rho_a = DensityOperator(partial_trace(rho_ab.op, (a,)), rho_ab.normalized)
    rho_b = DensityOperator(partial_trace(rho_ab.op, (b,)), rho_ab.normalized)
    eps0 = eps ** 0.25 if eps > 0 else 0.0
    eps_a = eps * eps / 48.0

    from .cq import measured_cq
    phi = purify(rho_ab, ref_label="_ref")
    cq = measured_cq(phi, povm, a, (b,))
    ih, _ = hypothesis_testing_information_cq(cq, eps0)

    report = EntropyReport()
    report.set("log2_dim_ab", float(np.log2(rho_ab.total_dim)), "exact")
    report.set("support_max_entropy_a", support_max_entropy(rho_a, eps_a), "exact")
    report.set("support_max_entropy_b", support_max_entropy(rho_b, eps), "exact")
    report.set("hypothesis_testing_information_xb", ih, "exact")
    if eps > 0.0:
        comm = report.value("support_max_entropy_a") + 2.0 * float(np.log2(24.0 / (eps * eps)))
    else:
        comm = float("inf")
    report.set("communication_surrogate", comm, "upper-bound")
    core = (report.value("log2_dim_ab") - report.value("support_max_entropy_a")
            - report.value("support_max_entropy_b") + ih)
    report.set("rate_core", core, "lower-bound")
    report.symbolic["rate_residual"] = "O(log eps) - O(1)"
    report.symbolic["eps0"] = "eps**(1/4) with coefficient 1"
    report.symbolic["smoothing_a"] = "eps**2/48"
    return report
