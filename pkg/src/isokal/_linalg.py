"""Small shared linear-algebra helpers (symmetric solves, norms, spectra)."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def symmetrize(m):
    return 0.5 * (m + m.T)


def asymmetry(m):
    """Max asymmetry of ``m`` relative to its largest entry."""
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return 0.0
    return np.max(np.abs(m - m.T)) / scale


def spd_factor(m, what="matrix"):
    """Cholesky factorization of a symmetric positive definite matrix.

    Raises ``numpy.linalg.LinAlgError`` naming ``what`` when the matrix is
    numerically indefinite.
    """
    try:
        return cho_factor(symmetrize(np.asarray(m, dtype=float)), lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"{what} is not positive definite") from exc


def spd_solve(m, b, what="matrix"):
    """Solve m @ x = b for SPD ``m`` via Cholesky (never forms m^-1)."""
    return cho_solve(spd_factor(m, what), np.asarray(b, dtype=float))


def spd_inverse(m, what="matrix"):
    """m^-1 for SPD ``m``, symmetrized."""
    d = m.shape[0]
    return symmetrize(spd_solve(m, np.eye(d), what))


def spectral_norm(m):
    """Largest singular value."""
    m = np.atleast_2d(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def eig_abs_sorted(a):
    """Eigenvalue magnitudes of a general square matrix, descending."""
    return np.sort(np.abs(np.linalg.eigvals(a)))[::-1]


def sym_eigvalsh(m):
    """Eigenvalues of a (numerically) symmetric matrix, ascending."""
    return np.linalg.eigvalsh(symmetrize(m))


def min_max_singular(m):
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[-1]), float(s[0])


def readonly(a):
    """Float64 copy with the writeable flag cleared."""
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out
