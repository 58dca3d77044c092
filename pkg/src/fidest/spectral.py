"""Exact spectral minimax design as a semidefinite program.

Variables: law q(u), coefficients alpha[u,b], perspective lifts y[u,b] >= alpha^2/q,
and scalars t, gamma, s. The problem

    minimize    gamma + s
    subject to  sum alpha[u,b] P_{u,b} = O
                q >= 0, sum q = 1
                [[y, alpha], [alpha, q]] >= 0        for every (u, b)
                sum y[u,b] P_{u,b} - 2 t O <= gamma I
                [[s, t], [t, 1]] >= 0,  0 <= t <= 1

has optimal value equal to the smallest achievable worst-case one-shot
variance. Each 2x2 block is modeled as a rotated second-order cone and the
complex LMI through its real symmetric embedding.
"""

import logging
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from .base import BaseDesigner
from .core import (
    AdmissibilityError,
    SolverError,
    minimize_spectral_objective,
    prune_design,
    second_moment_operator,
    target_traces,
)
from .design import DesignCertificate, EstimatorDesign, target_fingerprint
from .operators import check_hermitian, lambda_max, pauli_labels, pauli_string_sparse

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_DEFAULT_QUBITS = 4
POLISH_THRESHOLD = 1e-6
# second attempt drops Ruiz equilibration, which occasionally stalls just short of tol
SOLVER_RETRIES = ({}, {"equilibrate_enable": False})


class ScaleLimitError(ValueError):
    pass


def _embed_sparse(m):
    m = sp.csr_matrix(m)
    return sp.bmat([[m.real, -m.imag], [m.imag, m.real]], format="csr")


def real_embedding(h):
    """[[Re h, -Im h], [Im h, Re h]]: real symmetric, same spectrum with doubled multiplicity."""
    h = check_hermitian(h, tol=1e-9)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


@dataclass
class ConicProblem:
    problem: cp.Problem
    q: cp.Variable
    alpha: cp.Variable
    y: cp.Variable
    t: cp.Variable
    gamma: cp.Variable
    s: cp.Variable
    slack: cp.Variable
    num_settings: int
    num_outcomes: int
    counts: dict = field(default_factory=dict)


def assemble_sdp(target, family, allow_large=False):
    """Build the exact SDP for ``target`` over ``family``."""
    if family.n > 6:
        raise ScaleLimitError("SDP assembly is limited to n <= 6")
    if family.n > MAX_DEFAULT_QUBITS and not allow_large:
        raise ScaleLimitError(
            f"n = {family.n} exceeds the default SDP cutoff of {MAX_DEFAULT_QUBITS}; pass allow_large=True"
        )
    target = check_hermitian(target, tol=1e-9)
    n_set, d = family.num_settings, family.dim
    n_pairs = n_set * d

    q = cp.Variable(n_set, name="q", nonneg=True)
    alpha = cp.Variable(n_pairs, name="alpha")
    y = cp.Variable(n_pairs, name="y")
    t = cp.Variable(name="t")
    gamma = cp.Variable(name="gamma")
    s = cp.Variable(name="s")
    slack = cp.Variable((2 * d, 2 * d), name="lmi_slack", PSD=True)

    repeat = sp.kron(sp.identity(n_set), np.ones((d, 1)), format="csr")
    q_pairs = repeat @ q

    # sum y P = sum_k (A y)_k sigma_k / d with A the sparse Pauli expansion of the effects;
    # each embedded Pauli string has 2d nonzeros, so the LMI stays sparse
    expand = family.expansion_matrix(sparse=True)
    pauli_lift = sp.hstack(
        [_embed_sparse(pauli_string_sparse(lbl)).reshape(-1, 1) for lbl in pauli_labels(family.n)]
    ).tocsr() / d
    weights = cp.Variable(4**family.n, name="pauli_weights")
    emb_target = real_embedding(target).ravel()
    emb_eye = np.eye(2 * d).ravel()

    constraints = [
        expand @ alpha == target_traces(target),
        cp.sum(q) == 1,
        # y q >= alpha^2 with y, q >= 0  <=>  ||(2 alpha, y - q)|| <= y + q
        cp.SOC(y + q_pairs, cp.vstack([2 * alpha, y - q_pairs]), axis=0),
        weights == expand @ y,
        cp.vec(slack, order="F") == gamma * emb_eye - pauli_lift @ weights + 2 * t * emb_target,
        # s >= t^2  <=>  ||(2 t, s - 1)|| <= s + 1
        cp.SOC(s + 1, cp.hstack([2 * t, s - 1])),
        t >= 0,
        t <= 1,
    ]
    problem = cp.Problem(cp.Minimize(gamma + s), constraints)
    counts = {
        "q": n_set,
        "alpha": n_pairs,
        "y": n_pairs,
        "small_blocks": n_pairs + 1,
        "lmi_dim": d,
        "lmi_embedded_dim": 2 * d,
    }
    return ConicProblem(problem, q, alpha, y, t, gamma, s, slack, n_set, d, counts)


def solve_spectral(target, family, tol=DEFAULT_TOL, allow_large=False):
    """Solve the exact SDP with Clarabel; return ``(design, certificate)``."""
    if tol < 1e-9:
        raise ValueError("tol must be >= 1e-9")
    if family.n > MAX_DEFAULT_QUBITS and allow_large:
        logger.warning("solving the n = %d SDP; this is slow and memory hungry", family.n)
    target = check_hermitian(target, tol=1e-9)
    cone = assemble_sdp(target, family, allow_large=allow_large)
    base_opts = {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol, "max_iter": 500, "max_threads": 1}
    diagnostics = None
    for attempt, extra in enumerate(SOLVER_RETRIES):
        raw = _run_clarabel(cone, {**base_opts, **extra})
        diagnostics = {
            "status": cone.problem.status,
            "iters": int(raw.iterations),
            "solve_time": float(raw.solve_time),
            "tol": float(tol),
            "attempt": attempt,
            "primal_obj": float(raw.obj_val),
            "dual_obj": float(raw.obj_val_dual),
            "gap": abs(raw.obj_val - raw.obj_val_dual) / max(1.0, abs(raw.obj_val)),
        }
        if cone.problem.status == cp.OPTIMAL:
            break
    if cone.problem.status == cp.OPTIMAL_INACCURATE and diagnostics["gap"] <= 10 * tol:
        logger.warning("accepting inaccurate SDP solution with relative gap %.2e", diagnostics["gap"])
    elif cone.problem.status != cp.OPTIMAL:
        raise SolverError(f"SDP solve ended with status {cone.problem.status!r}", diagnostics)

    q, alpha = _extract_design(cone, family, target, tol)
    y, t, gamma, s = _repair_certificate(cone, family, target, q, alpha)
    cert = DesignCertificate(y=y, t=t, gamma=gamma, s=s, solver=diagnostics)
    design = EstimatorDesign(
        n=family.n,
        settings=family.settings,
        q=q,
        alpha=alpha,
        method="spectral",
        target_hash=target_fingerprint(target),
        objective=cert.objective,
        certificate=cert,
    )
    return design, cert


def _run_clarabel(cone, opts):
    try:
        data, chain, inverse = cone.problem.get_problem_data(cp.CLARABEL)
        raw = chain.solve_via_data(cone.problem, data, solver_opts=opts)
        with warnings.catch_warnings():
            # inaccurate status is handled by the caller's retry policy
            warnings.simplefilter("ignore", UserWarning)
            cone.problem.unpack_results(raw, chain, inverse)
    except cp.error.SolverError as exc:
        raise SolverError(f"SDP solver failed: {exc}", {"status": "error"}) from exc
    return raw


def _extract_design(cone, family, target, tol):
    """Pruned (q, alpha) from the solver iterate.

    Interior-point iterates leave settings that belong at zero with q of
    order ``tol``. Besides the standard 1e-9 cleanup, a coarser cut at
    ``POLISH_THRESHOLD`` is attempted and kept only when the exact
    worst-case variance does not rise by more than ``tol``.
    """
    raw_q = np.asarray(cone.q.value)
    raw_alpha = np.asarray(cone.alpha.value).reshape(cone.num_settings, cone.num_outcomes)
    q, alpha = prune_design(raw_q, raw_alpha, family, target)
    base = _gamma(q, alpha, family, target)
    try:
        q2, alpha2 = prune_design(raw_q, raw_alpha, family, target, threshold=POLISH_THRESHOLD)
    except AdmissibilityError:
        return q, alpha
    if np.count_nonzero(q2) < np.count_nonzero(q) and _gamma(q2, alpha2, family, target) <= base + tol:
        return q2, alpha2
    return q, alpha


def _gamma(q, alpha, family, target):
    design = EstimatorDesign(n=family.n, settings=family.settings, q=q, alpha=alpha)
    return minimize_spectral_objective(second_moment_operator(design, family), target)[0]


def _repair_certificate(cone, family, target, q, alpha):
    """Lift the solver's (y, gamma, s) onto exact feasibility for the pruned (q, alpha).

    Each component only moves up, by at most the solver's feasibility
    error: y >= alpha^2 / q on sampled settings, gamma >= lambda_max(sum y P - 2 t O),
    s >= t^2.
    """
    y = np.asarray(cone.y.value, dtype=float).reshape(cone.num_settings, cone.num_outcomes).copy()
    act = q > 0
    y[act] = np.maximum(y[act], alpha[act] ** 2 / q[act, None])
    y[~act] = 0.0
    t = float(np.clip(cone.t.value, 0.0, 1.0))
    gamma = max(float(cone.gamma.value), lambda_max(family.weighted_sum(y) - 2 * t * target))
    s = max(float(cone.s.value), t * t)
    return y, t, gamma, s


@dataclass
class CertificateReport:
    checks: dict

    @property
    def ok(self):
        return all(passed for passed, _ in self.checks.values())

    @property
    def failures(self):
        return [name for name, (passed, _) in self.checks.items() if not passed]

    def __str__(self):
        lines = [f"{name}: {'pass' if passed else 'FAIL'} ({value:.3e})" for name, (passed, value) in self.checks.items()]
        return "\n".join(lines)


def validate_certificate(design, cert, target, family, tol=None):
    """Check a design/certificate pair against the SDP constraints and the spectral evaluator.

    Checks, each reported with its worst violation:

    * ``perspective``: y q >= alpha^2 - 1e-8 on sampled settings
    * ``lmi``: lambda_max(sum y P - 2 t O) <= gamma + 1e-8
    * ``epigraph``: s >= t^2 - 1e-9
    * ``objective``: |Gamma(q, alpha) - (gamma + s)| <= 10 tol
    * ``admissible``: q = 0 implies alpha = 0
    """
    if tol is None:
        tol = float(cert.solver.get("tol", DEFAULT_TOL))
    q, alpha = design.aligned(family)
    y = np.zeros_like(alpha)
    for i, u in enumerate(design.settings):
        if u in family._index:
            y[family.setting_index(u)] = cert.y[i]
    act = q > 0

    persp = float(np.max(alpha[act] ** 2 - y[act] * q[act, None], initial=-np.inf))
    lmi = lambda_max(family.weighted_sum(y) - 2 * cert.t * target) - cert.gamma
    epi = cert.t**2 - cert.s
    dead = float(np.max(np.abs(alpha[~act]), initial=0.0))
    try:
        gamma_eval, _ = minimize_spectral_objective(second_moment_operator(design, family), target)
        obj = abs(gamma_eval - cert.objective)
    except ValueError:
        obj = float("inf")
    checks = {
        "perspective": (persp <= 1e-8, persp),
        "lmi": (lmi <= 1e-8, lmi),
        "epigraph": (epi <= 1e-9, epi),
        "objective": (obj <= 10 * tol, obj),
        "admissible": (dead <= 1e-9, dead),
    }
    return CertificateReport(checks)


class SpectralDesigner(BaseDesigner):
    """Fit the worst-case-variance-optimal design by solving the exact SDP.

    Parameters
    ----------
    settings : list of str, optional
        Restrict the measurement family to these settings.
    tol : float
        Relative duality-gap and feasibility tolerance for the conic solver.
    allow_large : bool
        Permit n = 5, 6 solves (slow).

    Attributes
    ----------
    design_ : EstimatorDesign
    certificate_ : DesignCertificate
    objective_ : float
        gamma + s at the solution, the optimal worst-case one-shot variance.
    """

    def __init__(self, settings=None, tol=DEFAULT_TOL, allow_large=False):
        self.settings = settings
        self.tol = tol
        self.allow_large = allow_large

    def _solve(self, target, family):
        design, cert = solve_spectral(target, family, tol=self.tol, allow_large=self.allow_large)
        self.certificate_ = cert
        return design

    def validate(self):
        return validate_certificate(self.design_, self.certificate_, self.target_, self.family_)
