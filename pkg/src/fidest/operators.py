"""Dense Hermitian linear algebra on n-qubit spaces.

Operators are plain ``numpy`` complex arrays. The ``check_*`` helpers
validate inputs in the style of ``sklearn.utils.validation`` and return
clean copies; nothing here mutates its arguments.
"""

from functools import lru_cache, reduce
from itertools import product

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12
MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class NotHermitianError(ValueError):
    pass


def num_qubits(dim):
    """Return n for dim = 2**n, raising if dim is not a power of two."""
    dim = int(dim)
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def symmetrize(a):
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def check_hermitian(a, tol=HERMITIAN_TOL, name="operator"):
    """Validate a square Hermitian matrix on a 2**n space and return it symmetrized.

    Asymmetry is measured as the max-abs entry of ``a - a^dagger``. Raises
    ``NotHermitianError`` when it exceeds ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    num_qubits(a.shape[0])
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if err > tol:
        raise NotHermitianError(f"{name} is not Hermitian (max |A - A^H| = {err:.3e})")
    return symmetrize(a)


def check_pure_state(psi, tol=1e-12):
    psi = np.asarray(psi, dtype=complex).ravel()
    num_qubits(psi.size)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector has norm {norm!r}, expected 1")
    return psi


def check_density_matrix(rho, trace_tol=1e-10, eig_tol=1e-10):
    """Validate a density matrix: Hermitian, unit trace, PSD up to ``eig_tol``."""
    rho = check_hermitian(rho, name="density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix has trace {tr!r}")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -eig_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def projector(psi):
    """Rank-one projector |psi><psi|."""
    psi = check_pure_state(psi)
    return symmetrize(np.outer(psi, psi.conj()))


def tensor_product(a, b):
    """Kronecker product; the left factor indexes the most significant qubit."""
    a = np.asarray(a)
    b = np.asarray(b)
    for m in (a, b):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("tensor_product operands must be square matrices")
    if a.shape[0] * b.shape[0] > 2**MAX_QUBITS:
        raise ValueError(f"tensor product exceeds {MAX_QUBITS} qubits")
    return np.kron(a, b)


def kron_all(mats):
    return reduce(tensor_product, mats)


def lambda_max(h):
    """Largest eigenvalue of a Hermitian matrix (dense eigensolver)."""
    h = check_hermitian(h)
    return float(np.linalg.eigvalsh(h)[-1])


def hs_inner(a, b):
    """Hilbert-Schmidt inner product Re tr(a^dagger b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.real(np.vdot(a, b)))


def pauli_labels(n):
    """Lexicographic Pauli strings with I < X < Y < Z on each qubit."""
    return ["".join(p) for p in product("IXYZ", repeat=n)]


@lru_cache(maxsize=None)
def _pauli_basis(n):
    mats = np.stack([kron_all([PAULIS[c] for c in lbl]) for lbl in pauli_labels(n)])
    mats.setflags(write=False)
    return mats


def pauli_basis(n):
    """All 4**n Pauli strings as a (4**n, d, d) array, normalized so tr(s_j s_k) = d delta_jk."""
    if not 1 <= n <= 6:
        raise ValueError("pauli_basis supports 1 <= n <= 6")
    return _pauli_basis(n)


def pauli_coefficients(h):
    """Expansion coefficients c_k with h = sum_k c_k sigma_k (lexicographic basis).

    Contracts one qubit at a time, so the 4**n basis is never materialized.
    """
    h = check_hermitian(h)
    n = num_qubits(h.shape[0])
    stack = np.stack([PAULIS[c] for c in "IXYZ"])
    letters = "abcdefghijklmnopqr"
    rows, cols, outs = letters[:n], letters[n : 2 * n], letters[2 * n : 3 * n]
    # tr(sigma h) = sum_{r,c} sigma[c, r] h[r, c]
    terms = [f"{outs[i]}{cols[i]}{rows[i]}" for i in range(n)]
    spec = ",".join(terms) + f",{rows}{cols}->{outs}"
    traces = np.einsum(spec, *([stack] * n), h.reshape([2] * (2 * n)), optimize=True)
    return traces.real.reshape(-1) / h.shape[0]


def pauli_string_sparse(label):
    """Sparse matrix of a Pauli string; row r has its single nonzero in column r XOR flip-mask."""
    n = len(label)
    d = 2**n
    rows = np.arange(d)
    flip = int("".join("1" if c in "XY" else "0" for c in label), 2)
    phase = np.ones(d, dtype=complex)
    for i, c in enumerate(label):
        bit = (rows >> (n - 1 - i)) & 1
        if c == "Z":
            phase *= np.where(bit, -1.0, 1.0)
        elif c == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>: entry (r, c) with r_i = 1 - c_i is i for r_i = 1
            phase *= np.where(bit, 1j, -1j)
    return sp.csr_matrix((phase, (rows, rows ^ flip)), shape=(d, d))
