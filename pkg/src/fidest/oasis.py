"""OASIS baseline: minimize sum_u max_b |alpha[u,b]| under unbiasedness, as a linear program."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .base import BaseDesigner
from .core import SolverError, prune_design, surrogate_value, target_traces
from .design import EstimatorDesign, target_fingerprint

DEFAULT_TOL = 1e-8


@dataclass
class LinearProgramInstance:
    """min c @ x  s.t.  A_eq x = b_eq,  A_ub x <= 0,  bounds.

    ``x`` stacks the coefficient table (row-major over settings, outcomes)
    followed by one bound m_u per setting.
    """

    c: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray
    a_ub: sp.csr_matrix
    b_ub: np.ndarray
    bounds: list
    num_alpha: int
    num_settings: int

    @property
    def num_variables(self):
        return self.num_alpha + self.num_settings


def assemble_oasis_lp(target, family):
    n_set, d = family.num_settings, family.dim
    n_alpha = n_set * d
    expand = family.expansion_matrix(sparse=True)
    a_eq = sp.hstack([expand, sp.csr_matrix((expand.shape[0], n_set))]).tocsr()
    b_eq = target_traces(target)

    # m_u >= +alpha and m_u >= -alpha, written as +-alpha - m_u <= 0
    eye = sp.identity(n_alpha, format="csr")
    rep = sp.kron(sp.identity(n_set), np.ones((d, 1)), format="csr")
    a_ub = sp.vstack([sp.hstack([eye, -rep]), sp.hstack([-eye, -rep])]).tocsr()
    c = np.concatenate([np.zeros(n_alpha), np.ones(n_set)])
    bounds = [(None, None)] * n_alpha + [(0, None)] * n_set
    return LinearProgramInstance(
        c=c,
        a_eq=a_eq,
        b_eq=b_eq,
        a_ub=a_ub,
        b_ub=np.zeros(2 * n_alpha),
        bounds=bounds,
        num_alpha=n_alpha,
        num_settings=n_set,
    )


def solve_oasis(target, family, tol=DEFAULT_TOL):
    """Solve the OASIS LP with HiGHS and return the design with its induced law m_u / L."""
    lp = assemble_oasis_lp(target, family)
    res = linprog(
        lp.c,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        A_eq=lp.a_eq,
        b_eq=lp.b_eq,
        bounds=lp.bounds,
        method="highs",
        options={"primal_feasibility_tolerance": min(tol, 1e-7), "dual_feasibility_tolerance": min(tol, 1e-7)},
    )
    diagnostics = {"status": int(res.status), "message": res.message, "iters": int(getattr(res, "nit", -1))}
    if res.status == 2:
        raise SolverError("OASIS LP infeasible: the measurement family does not span the target", diagnostics)
    if res.status != 0:
        raise SolverError(f"OASIS LP failed: {res.message}", diagnostics)

    alpha = res.x[: lp.num_alpha].reshape(family.num_settings, family.dim)
    eq_resid = float(np.linalg.norm(lp.a_eq @ res.x - lp.b_eq, np.inf))
    if eq_resid > max(tol, 1e-7):
        raise SolverError(f"OASIS LP equality residual {eq_resid:.3e} exceeds tolerance", diagnostics)
    _, q = surrogate_value(alpha)
    q, alpha = prune_design(q, alpha, family, target)
    value, q = surrogate_value(alpha)
    return EstimatorDesign(
        n=family.n,
        settings=family.settings,
        q=q,
        alpha=alpha,
        method="oasis",
        target_hash=target_fingerprint(target),
        objective=value,
    )


class OASISDesigner(BaseDesigner):
    """Fit the OASIS linear-program design to a target.

    Parameters
    ----------
    settings : list of str, optional
        Restrict the measurement family to these settings.
    tol : float
        Feasibility tolerance passed to HiGHS.

    Attributes
    ----------
    design_ : EstimatorDesign
    objective_ : float
        Surrogate value L of the solution.
    """

    def __init__(self, settings=None, tol=DEFAULT_TOL):
        self.settings = settings
        self.tol = tol

    def _solve(self, target, family):
        return solve_oasis(target, family, tol=self.tol)
