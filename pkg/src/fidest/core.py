"""Unbiasedness, second moments and exact worst-case variance of one-shot designs."""

import logging

import numpy as np
from scipy.sparse.linalg import lsqr

from .design import EstimatorDesign
from .operators import check_hermitian, lambda_max, pauli_coefficients
from .povm import MeasurementFamily

logger = logging.getLogger(__name__)

PRUNE_THRESHOLD = 1e-9
ADMISSIBILITY_TOL = 1e-9
UNBIASED_TOL = 1e-7
MU_ZERO = 1e-15
GOLDEN_ITERS = 80


class AdmissibilityError(ValueError):
    """A setting with zero probability carries nonzero coefficients."""


class DegenerateCoefficientsError(ValueError):
    pass


class SolverError(RuntimeError):
    """The optimizer failed; ``diagnostics`` carries its status report."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _family_for(design, family):
    if family is None:
        family = MeasurementFamily(design.n, design.settings)
    return family


def coefficient_array(alpha, family):
    """Coerce a coefficient table to a (settings, outcomes) array aligned with ``family``.

    Accepts an array of that shape, a nested ``{setting: {outcome: value}}``
    mapping, or an :class:`EstimatorDesign`.
    """
    if isinstance(alpha, EstimatorDesign):
        return alpha.aligned(family)[1]
    if isinstance(alpha, dict):
        out = np.zeros((family.num_settings, family.dim))
        for u, row in alpha.items():
            s = family.setting_index(u)
            for b, v in row.items():
                out[s, int(b, 2)] = float(v)
        return out
    out = np.asarray(alpha, dtype=float)
    if out.shape != (family.num_settings, family.dim):
        raise ValueError(f"coefficient table has shape {out.shape}, expected {(family.num_settings, family.dim)}")
    return out


def unbiasedness_residual(alpha, target, family):
    """Frobenius norm of sum_{u,b} alpha[u,b] P_{u,b} - O."""
    alpha = coefficient_array(alpha, family)
    return float(np.linalg.norm(family.weighted_sum(alpha) - np.asarray(target)))


def check_admissible(q, alpha, tol=ADMISSIBILITY_TOL):
    q = np.asarray(q, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(q < -tol):
        raise AdmissibilityError("sampling law has negative entries")
    if abs(q.sum() - 1.0) > 1e-10 * max(1, len(q)):
        raise AdmissibilityError(f"sampling law sums to {q.sum()!r}")
    dead = q <= 0
    if np.any(np.abs(alpha[dead]) > tol):
        raise AdmissibilityError("unsampled setting carries nonzero coefficients")


def second_moment_operator(design, family=None):
    """M = sum_{u,b} alpha[u,b]^2 / q(u) P_{u,b}, omitting settings with q(u) = 0."""
    family = _family_for(design, family)
    q, alpha = design.aligned(family)
    check_admissible(q, alpha)
    weights = np.zeros_like(alpha)
    act = q > 0
    weights[act] = alpha[act] ** 2 / q[act, None]
    return family.weighted_sum(weights)


def variance_at_state(design, rho, target, family=None):
    """One-shot variance tr(rho M) - tr(rho O)^2."""
    m = second_moment_operator(design, family)
    rho = np.asarray(rho)
    f = np.real(np.trace(rho @ target))
    return float(np.real(np.trace(rho @ m)) - f**2)


def setting_moments(alpha, rho, family):
    """mu_u(rho) = sum_b alpha[u,b]^2 tr(rho P_{u,b})."""
    alpha = coefficient_array(alpha, family)
    probs = family.outcome_table(rho)
    return np.einsum("sb,sb->s", alpha**2, probs)


def statewise_optimal_law(alpha, rho, family):
    """Optimal sampling law for fixed coefficients at a known state.

    Returns ``(q, value)`` with q(u) proportional to sqrt(mu_u(rho)) and
    ``value = (sum_u sqrt(mu_u))**2``, the minimum of sum_u mu_u / q(u).
    If every mu_u vanishes, any law is optimal: the uniform law and value 0
    are returned with a warning.
    """
    mu = setting_moments(alpha, rho, family)
    mu = np.where(mu < MU_ZERO, 0.0, mu)
    root = np.sqrt(mu)
    total = root.sum()
    if total == 0:
        logger.warning("all setting moments vanish; returning the uniform law")
        return np.full(family.num_settings, 1.0 / family.num_settings), 0.0
    return root / total, float(total**2)


def law_objective(mu, q):
    """sum_u mu_u / q(u), with 0/0 = 0 and mu/0 = inf."""
    mu = np.asarray(mu, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mu > 0, mu / q, 0.0)
    return float(terms.sum())


def surrogate_value(alpha):
    """OASIS surrogate L = sum_u max_b |alpha[u,b]| and the induced law m_u / L."""
    alpha = np.asarray(alpha, dtype=float)
    m = np.abs(alpha).max(axis=1)
    total = float(m.sum())
    if total == 0:
        raise DegenerateCoefficientsError("coefficient table is identically zero")
    return total, m / total


def spectral_objective(m, target, t):
    """h(t) = lambda_max(M - 2 t O) + t^2."""
    return lambda_max(m - 2.0 * t * target) + t * t


def minimize_spectral_objective(m, target, iters=GOLDEN_ITERS):
    """Golden-section minimization of the convex h(t) over [0, 1]; returns (value, t)."""
    m = check_hermitian(m, tol=1e-9)
    target = check_hermitian(target, tol=1e-9)

    def h(t):
        return spectral_objective(m, target, t)

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = h(x1), h(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = h(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = h(x2)
    t_mid = 0.5 * (lo + hi)
    candidates = [(h(t_mid), t_mid), (h(0.0), 0.0), (h(1.0), 1.0)]
    value, t_star = min(candidates)
    return float(value), float(t_star)


def worst_case_variance(design, target, family=None):
    """Exact sup over states of the one-shot variance, as (gamma, t_star)."""
    m = second_moment_operator(design, family)
    return minimize_spectral_objective(m, target)


def prune_design(q, alpha, family, target, threshold=PRUNE_THRESHOLD, tol=UNBIASED_TOL):
    """Admissibility cleanup for numerically solved designs.

    Settings with q(u) < ``threshold`` are dropped (law and coefficients
    zeroed), q is renormalized, and the surviving coefficients receive the
    minimum-norm correction that restores the unbiasedness identity. Raises
    ``AdmissibilityError`` if the identity cannot be restored within ``tol``.
    """
    q = np.clip(np.asarray(q, dtype=float).copy(), 0.0, None)
    alpha = np.asarray(alpha, dtype=float).copy()
    dead = q < threshold
    q[dead] = 0.0
    alpha[dead] = 0.0
    if q.sum() <= 0:
        raise AdmissibilityError("pruning removed every setting")
    q /= q.sum()

    a = family.expansion_matrix(sparse=True)
    rhs = target_traces(target)
    cols = np.repeat(~dead, family.dim)
    a_act = a[:, cols]
    flat = alpha[~dead].ravel()
    resid = rhs - a_act @ flat
    if np.linalg.norm(resid) > 0:
        delta = lsqr(a_act, resid, atol=1e-15, btol=1e-15, iter_lim=10_000)[0]
        alpha[~dead] = (flat + delta).reshape(-1, family.dim)
    final = unbiasedness_residual(alpha, target, family)
    if final > tol:
        raise AdmissibilityError(f"unbiasedness residual {final:.3e} after pruning exceeds {tol:g}")
    return q, alpha


def target_traces(target):
    """tr(sigma_k O) over the lexicographic Pauli basis (right-hand side of the unbiasedness rows)."""
    target = np.asarray(target, dtype=complex)
    return pauli_coefficients(target) * target.shape[0]
