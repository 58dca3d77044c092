"""Scikit-learn style front end for design solvers.

A designer is fitted to a target (a pure state vector or its projector)
and then acts on shot records: an integer array of shape (N, 2) whose rows
are (setting index, outcome index) pairs, with setting indices into
``designer.design_.settings``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import worst_case_variance
from .operators import check_hermitian, check_pure_state, num_qubits, projector
from .povm import MeasurementFamily


def check_target(target, tol=1e-9):
    """Validate a target given as a state vector or a rank-one projector.

    Returns ``(projector, n)``.
    """
    arr = np.asarray(target, dtype=complex)
    if arr.ndim == 1 or (arr.ndim == 2 and 1 in arr.shape):
        o = projector(check_pure_state(arr.ravel(), tol=1e-10))
    elif arr.ndim == 2:
        o = check_hermitian(arr, tol=tol, name="target")
        if abs(np.trace(o).real - 1) > tol or np.linalg.norm(o @ o - o) > tol:
            raise ValueError("target must be a rank-one projector")
    else:
        raise ValueError(f"target has unsupported shape {arr.shape}")
    return o, num_qubits(o.shape[0])


def check_records(records, design):
    rec = np.asarray(records)
    if rec.ndim != 2 or rec.shape[1] != 2:
        raise ValueError(f"shot records must have shape (N, 2), got {rec.shape}")
    if not np.issubdtype(rec.dtype, np.integer):
        raise ValueError("shot records must be integer indices")
    if rec.size and (rec.min() < 0 or rec[:, 0].max() >= len(design.settings) or rec[:, 1].max() >= 2**design.n):
        raise ValueError("shot record index out of range")
    return rec


class BaseDesigner(BaseEstimator):
    """Shared fit/transform/predict plumbing. Subclasses implement ``_solve``."""

    def _family(self, n):
        return MeasurementFamily(n, self.settings)

    def fit(self, X, y=None):
        target, n = check_target(X)
        self.target_ = target
        self.n_qubits_ = n
        self.family_ = self._family(n)
        self.design_ = self._solve(target, self.family_)
        self.objective_ = self.design_.objective
        return self

    @property
    def q_(self):
        check_is_fitted(self, "design_")
        return self.design_.q

    @property
    def alpha_(self):
        check_is_fitted(self, "design_")
        return self.design_.alpha

    def transform(self, X):
        """Per-shot estimator outputs alpha[u, b] / q(u)."""
        check_is_fitted(self, "design_")
        rec = check_records(X, self.design_)
        if rec.size and np.any(self.design_.q[rec[:, 0]] <= 0):
            raise ValueError("shot record uses a setting the design never samples")
        return self.design_.output_table()[rec[:, 0], rec[:, 1]]

    def predict(self, X):
        """Fidelity estimate: mean of the per-shot outputs."""
        return float(np.mean(self.transform(X)))

    def score(self, X, y):
        """Negative squared error of the estimate against the true fidelity ``y``."""
        return -((self.predict(X) - float(y)) ** 2)

    def worst_case_variance(self):
        check_is_fitted(self, "design_")
        return worst_case_variance(self.design_, self.target_, self.family_)[0]

    def sample(self, rho, shots, random_state=None):
        """Simulate ``shots`` measurement records of state ``rho`` under the fitted design."""
        from .simulate import ShotSampler, make_rng

        check_is_fitted(self, "design_")
        rng = random_state if isinstance(random_state, np.random.Generator) else make_rng(random_state or 0)
        return ShotSampler(self.design_, rho).sample(shots, rng)
