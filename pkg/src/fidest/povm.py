"""Local Pauli measurement family.

Setting ``u`` is a string over ``XYZ`` (one axis per qubit) and outcome
``b`` a bit string; qubit 0 is the most significant bit everywhere. The
effect of (u, b) is ``U_u^dagger |b><b| U_u`` with ``U_Z = I``, ``U_X = H``
and ``U_Y = H S^dagger``.
"""

from itertools import product

import numpy as np
import scipy.sparse as sp

from .operators import check_density_matrix, kron_all, pauli_basis

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.diag([1, 1j])
AXIS_UNITARIES = {
    "Z": np.eye(2, dtype=complex),
    "X": HADAMARD,
    "Y": HADAMARD @ S_GATE.conj().T,
}
AXES = "XYZ"
CLAMP_TOL = 1e-9
EAGER_CACHE_MAX_QUBITS = 4


class InvalidStateError(ValueError):
    pass


def all_settings(n):
    return tuple("".join(p) for p in product(AXES, repeat=n))


def all_outcomes(n):
    return tuple("".join(p) for p in product("01", repeat=n))


def check_setting(u, n=None):
    if not isinstance(u, str) or not u or any(c not in AXES for c in u):
        raise ValueError(f"invalid setting {u!r}; expected a string over 'XYZ'")
    if n is not None and len(u) != n:
        raise ValueError(f"setting {u!r} has length {len(u)}, expected {n}")
    return u


def check_outcome(b, n):
    if not isinstance(b, str) or len(b) != n or any(c not in "01" for c in b):
        raise ValueError(f"invalid outcome {b!r} for {n} qubits")
    return b


def setting_unitary(u):
    """Basis-rotation unitary U_u = U_{u_1} (x) ... (x) U_{u_n}."""
    check_setting(u)
    return kron_all([AXIS_UNITARIES[c] for c in u])


def _rotated_projector(unitary, index):
    row = unitary[index]
    # U^dagger |b><b| U = outer(conj(U[b, :]), U[b, :])
    return np.outer(row.conj(), row)


class MeasurementFamily:
    """The projectors {P_{u,b}} for a (possibly restricted) list of settings.

    Parameters
    ----------
    n : int
        Number of qubits.
    settings : sequence of str, optional
        Subset of settings to include, kept in lexicographic order. Defaults
        to all ``3**n`` settings.
    cache_effects : bool, optional
        Materialize every effect at construction. Defaults to ``n <= 4``.
    """

    def __init__(self, n, settings=None, cache_effects=None):
        if not 1 <= int(n) <= 6:
            raise ValueError("MeasurementFamily supports 1 <= n <= 6 qubits")
        self.n = int(n)
        self.dim = 2**self.n
        if settings is None:
            settings = all_settings(self.n)
        else:
            settings = sorted({check_setting(u, self.n) for u in settings})
            if not settings:
                raise ValueError("empty setting list")
        self.settings = tuple(settings)
        self.outcomes = all_outcomes(self.n)
        self._index = {u: i for i, u in enumerate(self.settings)}
        self.unitaries = np.stack([setting_unitary(u) for u in self.settings])
        self.unitaries.setflags(write=False)
        if cache_effects is None:
            cache_effects = self.n <= EAGER_CACHE_MAX_QUBITS
        self._effects = self._build_effects() if cache_effects else None

    def __repr__(self):
        return f"MeasurementFamily(n={self.n}, settings={len(self.settings)})"

    @property
    def num_settings(self):
        return len(self.settings)

    @property
    def num_outcomes(self):
        return self.dim

    @property
    def is_full(self):
        return self.num_settings == 3**self.n

    def setting_index(self, u):
        try:
            return self._index[u]
        except KeyError:
            raise KeyError(f"setting {u!r} is not part of this family") from None

    def _build_effects(self):
        out = np.empty((self.num_settings, self.dim, self.dim, self.dim), dtype=complex)
        for s, unitary in enumerate(self.unitaries):
            for b in range(self.dim):
                out[s, b] = _rotated_projector(unitary, b)
        out.setflags(write=False)
        return out

    def effect(self, u, b):
        """Rank-one projector P_{u,b}."""
        s = self.setting_index(check_setting(u, self.n))
        k = int(check_outcome(b, self.n), 2)
        if self._effects is not None:
            return self._effects[s, k]
        return _rotated_projector(self.unitaries[s], k)

    def effects(self):
        """All effects as an array of shape (settings, outcomes, d, d)."""
        if self._effects is not None:
            return self._effects
        return self._build_effects()

    def weighted_sum(self, weights):
        """sum_{u,b} w[u,b] P_{u,b} for a (settings, outcomes) real table."""
        w = np.asarray(weights, dtype=float).reshape(self.num_settings, self.dim)
        u = self.unitaries
        out = np.einsum("sbi,sb,sbj->ij", u.conj(), w, u, optimize=True)
        return 0.5 * (out + out.conj().T)

    def outcome_table(self, rho):
        """Raw Born probabilities tr(rho P_{u,b}) for every setting, shape (settings, outcomes)."""
        rho = np.asarray(rho, dtype=complex)
        u = self.unitaries
        probs = np.einsum("sbi,ij,sbj->sb", u, rho, u.conj(), optimize=True).real
        return probs

    def outcome_distribution(self, rho, u):
        """Sampling-ready outcome probabilities for setting ``u``.

        Entries within ``CLAMP_TOL`` below zero are clamped; anything more
        negative raises ``InvalidStateError``. The result is renormalized.
        """
        rho = check_density_matrix(rho)
        s = self.setting_index(check_setting(u, self.n))
        unitary = self.unitaries[s]
        probs = np.einsum("bi,ij,bj->b", unitary, rho, unitary.conj()).real
        return clamp_probabilities(probs)

    def expansion_matrix(self, sparse=False):
        """Real matrix A with A[k, (u,b)] = tr(sigma_k P_{u,b}).

        Rows follow the lexicographic Pauli basis, columns are (setting, outcome)
        pairs in row-major order. Built from the product structure
        tr(sigma_k P_{u,b}) = prod_i [k_i = I or k_i = u_i] (-1)^{b_i [k_i != I]}.
        """
        n, d = self.n, self.dim
        codes = np.array([[AXES.index(c) + 1 for c in u] for u in self.settings])
        bits = np.array([[int(c) for c in b] for b in self.outcomes])
        ncols = self.num_settings * d
        col_codes = np.repeat(codes, d, axis=0)
        col_bits = np.tile(bits, (self.num_settings, 1))
        place = 4 ** np.arange(n - 1, -1, -1)
        rows, cols, vals = [], [], []
        col_ids = np.arange(ncols)
        for mask in product((0, 1), repeat=n):
            m = np.array(mask)
            rows.append(col_codes @ (m * place))
            cols.append(col_ids)
            vals.append((-1.0) ** (col_bits @ m))
        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(4**n, ncols),
        )
        return mat if sparse else mat.toarray()


def clamp_probabilities(probs, tol=CLAMP_TOL):
    probs = np.asarray(probs, dtype=float)
    if probs.min() < -tol:
        raise InvalidStateError(f"negative outcome probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, 1.0)
    return probs / probs.sum()


def completeness_residuals(family):
    """Frobenius norm of sum_b P_{u,b} - I for every setting."""
    eye = np.eye(family.dim)
    effects = family.effects()
    return np.array([np.linalg.norm(effects[s].sum(axis=0) - eye) for s in range(family.num_settings)])


def ioc_span_dimension(family):
    """Rank of the (effects x Pauli basis) expansion matrix, computed from explicit traces."""
    if family.n > 3:
        raise ValueError("ioc_span_dimension is limited to n <= 3")
    basis = pauli_basis(family.n)
    effects = family.effects().reshape(-1, family.dim, family.dim)
    rows = np.einsum("eij,kji->ek", effects, basis).real
    return int(np.linalg.matrix_rank(rows))
