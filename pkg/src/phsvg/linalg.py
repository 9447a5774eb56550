"""Dense linear-algebra kernels for the small systems used throughout.

Everything here operates on plain numpy arrays at dimensions <= 8, which is
all the simulator ever needs (state dimensions 4-7 after augmentation).
Solves re-factor on every call; there is no caching and no shared state, so
every function is safe to call from concurrent workers.
"""

import numpy as np

__all__ = [
    "DimensionMismatch",
    "SingularMatrix",
    "as_matrix",
    "as_vector",
    "identity",
    "inf_norm",
    "matvec",
    "mat_add",
    "mat_scale",
    "solve_linear",
    "mat_exp",
]


class DimensionMismatch(ValueError):
    """Operands do not conform."""


class SingularMatrix(ArithmeticError):
    """A pivot fell below the singularity threshold during elimination."""


# Pivots smaller than this times the row-sum norm of A are treated as zero.
PIVOT_RTOL = 1e-14


def as_matrix(entries) -> np.ndarray:
    """Validate and return a 2-D float array with finite entries."""
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def as_vector(entries) -> np.ndarray:
    """Validate and return a 1-D float array with finite entries."""
    v = np.asarray(entries, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D array, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def identity(n: int) -> np.ndarray:
    return np.eye(n)


def inf_norm(a) -> float:
    """Max-abs norm for vectors, max row-sum norm for matrices."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    if a.ndim == 1:
        return float(np.max(np.abs(a)))
    return float(np.max(np.sum(np.abs(a), axis=1)))


def matvec(a, x) -> np.ndarray:
    a = as_matrix(a)
    x = as_vector(x)
    if a.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"cannot apply {a.shape} matrix to length-{x.shape[0]} vector")
    return a @ x


def mat_add(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return a + b


def mat_scale(c: float, a) -> np.ndarray:
    a = as_matrix(a)
    if not np.isfinite(c):
        raise ValueError("scale factor must be finite")
    return c * a


def _gauss_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Partial-pivot Gaussian elimination; b may hold several columns."""
    n = a.shape[0]
    aug = np.hstack([a.astype(float, copy=True), b.astype(float, copy=True)])
    tol = PIVOT_RTOL * inf_norm(a)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        piv = aug[p, k]
        if abs(piv) < tol or piv == 0.0:
            raise SingularMatrix(f"pivot {piv:.3e} below threshold {tol:.3e} at column {k}")
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        factors = aug[k + 1:, k] / aug[k, k]
        aug[k + 1:, k:] -= np.outer(factors, aug[k, k:])
    x = np.zeros_like(aug[:, n:])
    for i in range(n - 1, -1, -1):
        x[i] = (aug[i, n:] - aug[i, i + 1: n] @ x[i + 1:]) / aug[i, i]
    return x


def solve_linear(a, b) -> np.ndarray:
    """Solve A x = b by Gaussian elimination with partial pivoting.

    Raises SingularMatrix when a pivot magnitude falls below
    PIVOT_RTOL * ||A||_inf.
    """
    a = as_matrix(a)
    b = as_vector(b)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch("matrix must be square")
    if b.shape[0] != n:
        raise DimensionMismatch("right-hand side length must match")
    return _gauss_solve(a, b[:, None])[:, 0]


# Numerator coefficients of the degree-13 diagonal Pade approximant to exp.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def mat_exp(a, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{tA} by scaling and squaring.

    The argument is scaled by a power of two until its row-sum norm is at
    most one, a [13/13] Pade approximant is evaluated, and the result is
    squared back up.  At norm <= 1 the approximant's truncation error is far
    below double precision, so accuracy is limited only by rounding in the
    squarings.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch("matrix must be square")
    if not np.isfinite(t):
        raise ValueError("time argument must be finite")

    m = t * a
    norm = inf_norm(m)
    s = 0 if norm <= 1.0 else int(np.ceil(np.log2(norm)))
    if s > 0:
        m = m / (2.0 ** s)

    b = _PADE13
    eye = np.eye(n)
    m2 = m @ m
    m4 = m2 @ m2
    m6 = m2 @ m4
    u = m @ (m6 @ (b[13] * m6 + b[11] * m4 + b[9] * m2)
             + b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * eye)
    v = (m6 @ (b[12] * m6 + b[10] * m4 + b[8] * m2)
         + b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * eye)
    r = _gauss_solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r
