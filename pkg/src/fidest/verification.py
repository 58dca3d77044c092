"""Invariant suites behind ``fidest verify`` plus the brute-force oracles they use.

The oracles deliberately avoid the spectral evaluator: the Bloch-ball grid
maximizes the variance formula directly over one-qubit states, and random
admissible designs are built from a least-squares particular solution
plus a null-space perturbation.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .core import (
    law_objective,
    second_moment_operator,
    setting_moments,
    statewise_optimal_law,
    target_traces,
    worst_case_variance,
)
from .design import EstimatorDesign, target_fingerprint
from .oasis import solve_oasis
from .operators import PAULIS, projector
from .povm import MeasurementFamily, completeness_residuals, ioc_span_dimension
from .simulate import ShotSampler, depolarized_state, haar_random_target, make_rng
from .spectral import solve_spectral, validate_certificate


@dataclass
class CheckResult:
    module: str
    invariant: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.module}: {self.invariant} {self.detail}".rstrip()


def random_density_matrix(d, rng, rank=None):
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_admissible_design(target, family, rng, spread=0.3, floor=0.05):
    """Unbiased design with strictly positive law and a random point of the coefficient fiber."""
    a = family.expansion_matrix()
    rhs = target_traces(target)
    particular = np.linalg.lstsq(a, rhs, rcond=None)[0]
    kernel = null_space(a)
    alpha = particular + kernel @ (spread * rng.standard_normal(kernel.shape[1]))
    q = rng.dirichlet(np.ones(family.num_settings))
    q = (1 - floor) * q + floor / family.num_settings
    return EstimatorDesign(
        n=family.n,
        settings=family.settings,
        q=q,
        alpha=alpha.reshape(family.num_settings, family.dim),
        method="manual",
        target_hash=target_fingerprint(target),
    )


def bloch_grid_max_variance(design, target, family=None, step=0.02):
    """Max of tr(rho M) - tr(rho O)^2 over a (radius, polar, azimuth) grid of the one-qubit Bloch ball."""
    if design.n != 1:
        raise ValueError("the Bloch-ball oracle is one-qubit only")
    m = second_moment_operator(design, family)
    paulis = [PAULIS[c] for c in "XYZ"]
    m0 = np.trace(m).real
    mv = np.array([np.trace(p @ m).real for p in paulis])
    ov = np.array([np.trace(p @ target).real for p in paulis])
    radii = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    theta = np.linspace(0.0, np.pi, int(np.ceil(np.pi / step)) + 1)
    phi = np.arange(0.0, 2 * np.pi, step)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    dm, do = dirs @ mv, dirs @ ov
    best = -np.inf
    for r in radii:
        # rho = (I + r n.sigma) / 2
        var = 0.5 * (m0 + r * dm) - (0.5 * (1.0 + r * do)) ** 2
        best = max(best, float(var.max()))
    return best


def zbasis_problem():
    return projector([1.0, 0.0]), MeasurementFamily(1, ["Z"])


def _check(results, module, invariant, passed, detail=""):
    results.append(CheckResult(module, invariant, bool(passed), detail))


def suite_structure(levels):
    out = []
    for n in levels["rank"]:
        fam = MeasurementFamily(n)
        dim = ioc_span_dimension(fam)
        _check(out, "pauli_povm", f"span dimension n={n}", dim == 4**n, f"rank={dim}")
    for n in levels["completeness"]:
        worst = completeness_residuals(MeasurementFamily(n)).max()
        _check(out, "pauli_povm", f"completeness n={n}", worst <= 1e-12, f"max={worst:.2e}")
    return out


def suite_zbasis():
    out = []
    target, fam = zbasis_problem()
    design, cert = solve_spectral(target, fam)
    _check(out, "spectral_design", "Z-basis gamma* = 1/4", abs(design.objective - 0.25) <= 1e-6, f"{design.objective:.10f}")
    oasis = solve_oasis(target, fam)
    _check(out, "oasis_design", "Z-basis L = 1", abs(oasis.objective - 1.0) <= 1e-8, f"{oasis.objective:.10f}")
    gamma, t = worst_case_variance(oasis, target, fam)
    _check(out, "estimator_core", "Z-basis worst case 1/4 at t=1/2", abs(gamma - 0.25) <= 1e-9 and abs(t - 0.5) <= 1e-6)
    report = validate_certificate(design, cert, target, fam)
    _check(out, "spectral_design", "Z-basis certificate", report.ok, ",".join(report.failures))
    return out


def suite_statewise(ns, pairs, rng):
    out = []
    worst_gap, worst_eq = np.inf, 0.0
    for n in ns:
        fam = MeasurementFamily(n)
        for _ in range(pairs):
            target = projector(haar_random_target(n, int(rng.integers(2**31))))
            design = random_admissible_design(target, fam, rng)
            rho = random_density_matrix(fam.dim, rng)
            law, value = statewise_optimal_law(design.alpha, rho, fam)
            mu = setting_moments(design.alpha, rho, fam)
            worst_eq = max(worst_eq, abs(law_objective(mu, law) - value))
            for q in rng.dirichlet(np.ones(fam.num_settings), size=100):
                worst_gap = min(worst_gap, law_objective(mu, q) - value)
    _check(out, "estimator_core", f"statewise law lower bound n={ns}", worst_gap >= -1e-10, f"min slack={worst_gap:.2e}")
    _check(out, "estimator_core", f"statewise law attained n={ns}", worst_eq <= 1e-9, f"max err={worst_eq:.2e}")
    return out


def suite_bloch(designs, rng):
    out = []
    fam = MeasurementFamily(1)
    worst = 0.0
    for _ in range(designs):
        target = projector(haar_random_target(1, int(rng.integers(2**31))))
        design = random_admissible_design(target, fam, rng)
        gamma, _ = worst_case_variance(design, target, fam)
        worst = max(worst, abs(gamma - bloch_grid_max_variance(design, target, fam)))
    _check(out, "estimator_core", "spectral identity vs Bloch grid", worst <= 2e-3, f"max diff={worst:.2e}")
    return out


def suite_sandwich(ns, targets, rng, tol=1e-8):
    out = []
    for n in ns:
        fam = MeasurementFamily(n)
        worst, worst_relax = 0.0, -np.inf
        for _ in range(targets):
            target = projector(haar_random_target(n, int(rng.integers(2**31))))
            design, cert = solve_spectral(target, fam, tol=tol)
            gamma, _ = worst_case_variance(design, target, fam)
            worst = max(worst, abs(design.objective - gamma))
            oasis = solve_oasis(target, fam)
            worst_relax = max(worst_relax, design.objective - oasis.objective**2)
        _check(out, "spectral_design", f"SDP sandwich n={n}", worst <= 10 * tol, f"max diff={worst:.2e}")
        _check(out, "spectral_design", f"relaxation order n={n}", worst_relax <= 1e-6, f"max(gamma+s - L^2)={worst_relax:.2e}")
    return out


def suite_variance_bound(n, shots, trials, seed):
    out = []
    fam = MeasurementFamily(n)
    target = projector(haar_random_target(n, seed))
    rho = depolarized_state(target, 0.1)
    spectral, _ = solve_spectral(target, fam)
    for design in (solve_oasis(target, fam), spectral):
        gamma, _ = worst_case_variance(design, target, fam)
        sampler = ShotSampler(design, rho)
        est = np.array([sampler.estimate(shots, make_rng(seed, k)) for k in range(trials)])
        bound = gamma / shots * (1 + 4 / np.sqrt(trials))
        _check(out, "shot_simulator", f"variance bound n={n} {design.method}", est.var(ddof=1) <= bound, f"var={est.var(ddof=1):.3e} bound={bound:.3e}")
    return out


def suite_directional(n, targets, trials, seed):
    from .simulate import REFERENCE_SHOTS, ExperimentConfig, run_experiment

    out = []
    fam = MeasurementFamily(n)
    mses = []
    for k in range(targets):
        target = projector(haar_random_target(n, seed + k))
        designs = {"oasis": solve_oasis(target, fam), "spectral": solve_spectral(target, fam)[0]}
        cfg = ExperimentConfig(n=n, target_seed=seed + k, shots=REFERENCE_SHOTS[n], trials=trials, seed=seed + k)
        mse = run_experiment(cfg, designs, target=target).mse
        mses.append((mse["oasis"], mse["spectral"]))
    oasis, spectral = np.mean(mses, axis=0)
    in_range = all(0.5e-4 <= v <= 10e-4 for v in (oasis, spectral))
    _check(out, "shot_simulator", f"directional MSE n={n}", spectral <= oasis and in_range, f"oasis={oasis:.3e} spectral={spectral:.3e}")
    return out


def run_suite(level="quick", seed=0, log=None):
    """Run the invariant suites; ``quick`` covers n=1 only, ``full`` adds n=2, 3."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    rng = make_rng(seed, 2024)
    quick = level == "quick"
    stages = [
        lambda: suite_structure({"rank": [1] if quick else [1, 2, 3], "completeness": [1] if quick else [1, 2, 3, 4]}),
        suite_zbasis,
        lambda: suite_statewise([1] if quick else [1, 2], 10 if quick else 50, rng),
        lambda: suite_bloch(3 if quick else 20, rng),
        lambda: suite_sandwich([1] if quick else [1, 2], 3 if quick else 10, rng),
        lambda: suite_variance_bound(1 if quick else 2, 500, 300 if quick else 1000, seed),
    ]
    if not quick:
        stages.append(lambda: suite_directional(3, 5, 1000, seed))
    results = []
    for stage in stages:
        t0 = time.perf_counter()
        batch = stage()
        for r in batch:
            r.detail = f"{r.detail} ({time.perf_counter() - t0:.1f}s)".strip()
            if log:
                log(r.line())
        results.extend(batch)
    return results

