"""Estimator designs, certificates and their JSON form.

A design is a sampling law ``q`` over measurement settings plus a
coefficient table ``alpha[u, b]``. On a sampled outcome (u, b) the one-shot
estimator outputs ``alpha[u, b] / q[u]``.

JSON layout::

    {"n": 2, "method": "spectral", "target_hash": "ab12...", "objective": 0.93,
     "q": {"XX": 0.1, ...}, "alpha": {"XX": {"00": 0.02, ...}, ...},
     "certificate": {"y": {...}, "t": 0.5, "gamma": 0.1, "s": 0.25,
                     "solver": {"status": "optimal", "gap": 1e-10, "iters": 12}}}

Absent entries mean zero. Floats are written with ``repr`` precision so a
reload reproduces every number bit for bit.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .povm import all_outcomes, check_outcome, check_setting

METHODS = ("oasis", "spectral", "manual")


def target_fingerprint(target):
    """Hex SHA-256 of the projector entries rounded to 10 decimals."""
    o = np.asarray(target, dtype=complex)
    if o.ndim == 1:
        o = np.outer(o, o.conj())
    rounded = np.round(o, 10) + (0.0 + 0.0j)
    return hashlib.sha256(np.ascontiguousarray(rounded).tobytes()).hexdigest()


@dataclass
class DesignCertificate:
    """Auxiliary SDP variables (y, t, gamma, s) that certify a spectral design."""

    y: np.ndarray
    t: float
    gamma: float
    s: float
    solver: dict = field(default_factory=dict)

    @property
    def objective(self):
        return self.gamma + self.s


@dataclass
class EstimatorDesign:
    n: int
    settings: tuple
    q: np.ndarray
    alpha: np.ndarray
    method: str = "manual"
    target_hash: str = ""
    objective: float = float("nan")
    certificate: DesignCertificate | None = None

    def __post_init__(self):
        self.n = int(self.n)
        self.settings = tuple(check_setting(u, self.n) for u in self.settings)
        self.q = np.asarray(self.q, dtype=float).reshape(len(self.settings))
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(len(self.settings), 2**self.n)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.alpha))):
            raise ValueError("design has non-finite entries")

    @property
    def active(self):
        return self.q > 0

    def aligned(self, family):
        """(q, alpha) re-indexed onto ``family.settings``.

        Settings the family lacks must carry zero weight.
        """
        q = np.zeros(family.num_settings)
        alpha = np.zeros((family.num_settings, family.dim))
        for i, u in enumerate(self.settings):
            if u in family._index:
                j = family.setting_index(u)
                q[j] = self.q[i]
                alpha[j] = self.alpha[i]
            elif self.q[i] != 0 or np.any(self.alpha[i] != 0):
                raise ValueError(f"design uses setting {u!r} outside the measurement family")
        return q, alpha

    def output_table(self):
        """Per-outcome estimator outputs alpha/q (zero on unsampled settings)."""
        out = np.zeros_like(self.alpha)
        act = self.active
        out[act] = self.alpha[act] / self.q[act, None]
        return out

    def to_dict(self):
        outcomes = all_outcomes(self.n)
        doc = {
            "n": self.n,
            "method": self.method,
            "target_hash": self.target_hash,
            "objective": float(self.objective),
            "q": {u: float(v) for u, v in zip(self.settings, self.q)},
            "alpha": {
                u: {b: float(a) for b, a in zip(outcomes, row)}
                for u, row in zip(self.settings, self.alpha)
            },
        }
        if self.certificate is not None:
            cert = self.certificate
            doc["certificate"] = {
                "y": {
                    u: {b: float(v) for b, v in zip(outcomes, row)}
                    for u, row in zip(self.settings, cert.y)
                },
                "t": float(cert.t),
                "gamma": float(cert.gamma),
                "s": float(cert.s),
                "solver": dict(cert.solver),
            }
        return doc

    @classmethod
    def from_dict(cls, doc):
        n = int(doc["n"])
        keys = set(doc.get("q", {})) | set(doc.get("alpha", {}))
        settings = tuple(sorted(check_setting(u, n) for u in keys))
        if not settings:
            raise ValueError("design document has no settings")
        index = {u: i for i, u in enumerate(settings)}

        def table(mapping):
            out = np.zeros((len(settings), 2**n))
            for u, row in mapping.items():
                for b, v in row.items():
                    out[index[u], int(check_outcome(b, n), 2)] = float(v)
            return out

        q = np.zeros(len(settings))
        for u, v in doc.get("q", {}).items():
            q[index[u]] = float(v)
        cert = None
        if doc.get("certificate") is not None:
            c = doc["certificate"]
            cert = DesignCertificate(
                y=table(c.get("y", {})),
                t=float(c["t"]),
                gamma=float(c["gamma"]),
                s=float(c["s"]),
                solver=dict(c.get("solver", {})),
            )
        return cls(
            n=n,
            settings=settings,
            q=q,
            alpha=table(doc.get("alpha", {})),
            method=doc.get("method", "manual"),
            target_hash=doc.get("target_hash", ""),
            objective=float(doc.get("objective", float("nan"))),
            certificate=cert,
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
