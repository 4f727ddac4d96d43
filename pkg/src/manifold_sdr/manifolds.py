"""Geometry of SPD matrices and the unit sphere.

Both SPD metrics used here flatten the manifold into a fixed vector space:
the log-Euclidean metric through the matrix logarithm, the log-Cholesky
metric through the Cholesky factor with a log-transformed diagonal.  The
sphere is handled through its exponential/logarithm maps at a Frechet mean.
The vectorization operators at the end turn flattened matrices into the
length-q coordinate vectors consumed by the regression layer.
"""

import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    SingularityError,
    ValidationError,
)

# Relative tolerance for accepting a matrix as symmetric; inputs inside the
# tolerance are symmetrized before any eigendecomposition.
SYMMETRY_RTOL = 1e-12

# spd_log rejects matrices whose smallest eigenvalue falls below this
# fraction of the largest one: the logarithm would be numerically meaningless.
EIGVAL_FLOOR = 1e-12


def sym_dim(m):
    """Dimension q = m(m+1)/2 of the space of m x m symmetric matrices."""
    return m * (m + 1) // 2


def _square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    return A


def _check_same_dim(A, B):
    if A.shape != B.shape:
        raise ValidationError(
            f"dimension mismatch: {A.shape} vs {B.shape}"
        )


def check_symmetric(A, name="matrix"):
    """Validate symmetry of `A` and return the symmetrized copy (A + A.T)/2."""
    A = _square(A, name)
    tol = SYMMETRY_RTOL * max(1.0, np.linalg.norm(A, "fro"))
    dev = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if dev > tol:
        raise ValidationError(
            f"{name} is not symmetric: max |A - A.T| = {dev:.3e} exceeds {tol:.3e}"
        )
    return 0.5 * (A + A.T)


def _check_lower_triangular(T, name="matrix"):
    T = _square(T, name)
    upper = np.triu(T, 1)
    if np.any(upper != 0.0):
        raise ValidationError(f"{name} must be lower triangular (zero above diagonal)")
    return T


def is_spd(S, floor=0.0):
    """True when `S` is symmetric with smallest eigenvalue above `floor`."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        return False
    tol = SYMMETRY_RTOL * max(1.0, np.linalg.norm(S, "fro"))
    if np.max(np.abs(S - S.T)) > tol:
        return False
    return float(np.linalg.eigvalsh(S)[0]) > floor


# ---------------------------------------------------------------------------
# SPD matrices: log-Euclidean side
# ---------------------------------------------------------------------------

def spd_log(S):
    """Matrix logarithm of an SPD matrix via symmetric eigendecomposition."""
    S = check_symmetric(S, "S")
    w, Q = np.linalg.eigh(S)
    floor = EIGVAL_FLOOR * w[-1]
    if w[0] <= floor:
        raise SingularityError(
            f"eigenvalue {w[0]:.6e} at or below floor {floor:.6e}; "
            "matrix is not safely positive definite"
        )
    out = (Q * np.log(w)) @ Q.T
    return 0.5 * (out + out.T)


def spd_exp(V):
    """Matrix exponential of a symmetric matrix; inverse of :func:`spd_log`."""
    V = check_symmetric(V, "V")
    w, Q = np.linalg.eigh(V)
    out = (Q * np.exp(w)) @ Q.T
    return 0.5 * (out + out.T)


def group_op(S1, S2):
    """Abelian group operation exp(log S1 + log S2) on SPD matrices."""
    S1 = _square(S1, "S1")
    S2 = _square(S2, "S2")
    _check_same_dim(S1, S2)
    return spd_exp(spd_log(S1) + spd_log(S2))


def dist_log_euclidean(S1, S2):
    """Geodesic distance ||log S1 - log S2||_F under the log-Euclidean metric."""
    S1 = _square(S1, "S1")
    S2 = _square(S2, "S2")
    _check_same_dim(S1, S2)
    return float(np.linalg.norm(spd_log(S1) - spd_log(S2), "fro"))


# ---------------------------------------------------------------------------
# SPD matrices: log-Cholesky side
# ---------------------------------------------------------------------------

def cholesky_factor(S):
    """Lower-triangular Cholesky factor L with positive diagonal, L L.T = S."""
    S = check_symmetric(S, "S")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(
            f"Cholesky factorization failed, matrix not positive definite: {exc}"
        ) from None


def chol_map(L):
    """Log-transform the diagonal of a Cholesky factor.

    Keeps the strict lower triangle and replaces the diagonal by its
    elementwise logarithm, landing in the fixed vector space of
    lower-triangular matrices.
    """
    L = _check_lower_triangular(L, "L")
    d = np.diag(L)
    if np.any(d <= 0.0):
        raise DomainError(
            f"diagonal entries must be positive, got minimum {d.min():.6e}"
        )
    return np.tril(L, -1) + np.diag(np.log(d))


def chol_map_inverse(T):
    """Inverse of :func:`chol_map`: exponentiate the diagonal.

    Only the lower triangle of `T` is used.
    """
    T = _square(T, "T")
    return np.tril(T, -1) + np.diag(np.exp(np.diag(T)))


def dist_log_cholesky(S1, S2):
    """Geodesic distance under the log-Cholesky metric."""
    S1 = _square(S1, "S1")
    S2 = _square(S2, "S2")
    _check_same_dim(S1, S2)
    T1 = chol_map(cholesky_factor(S1))
    T2 = chol_map(cholesky_factor(S2))
    return float(np.linalg.norm(T1 - T2, "fro"))


# ---------------------------------------------------------------------------
# Vectorization operators
# ---------------------------------------------------------------------------

def vecs(A):
    """Row-wise lower-triangle vectorization of a symmetric matrix.

    For a 2 x 2 symmetric A this is (a11, a21, a22); generally the length is
    m(m+1)/2.
    """
    A = check_symmetric(A, "A")
    r, c = np.tril_indices(A.shape[0])
    return A[r, c].copy()


def unvecs(v, m):
    """Rebuild the symmetric matrix whose row-wise lower triangle is `v`."""
    v = np.asarray(v, dtype=float).ravel()
    q = sym_dim(m)
    if v.size != q:
        raise ValidationError(f"expected length {q} for m={m}, got {v.size}")
    A = np.zeros((m, m))
    r, c = np.tril_indices(m)
    A[r, c] = v
    A[c, r] = v
    return A


def vecl(T):
    """Row-wise lower-triangle vectorization of a lower-triangular matrix."""
    T = _check_lower_triangular(T, "T")
    r, c = np.tril_indices(T.shape[0])
    return T[r, c].copy()


def unvecl(v, m):
    """Rebuild the lower-triangular matrix whose row-wise lower triangle is `v`."""
    v = np.asarray(v, dtype=float).ravel()
    q = sym_dim(m)
    if v.size != q:
        raise ValidationError(f"expected length {q} for m={m}, got {v.size}")
    T = np.zeros((m, m))
    r, c = np.tril_indices(m)
    T[r, c] = v
    return T


# ---------------------------------------------------------------------------
# Unit sphere S^2
# ---------------------------------------------------------------------------

def _unit_point(p, name="point"):
    p = np.asarray(p, dtype=float).ravel()
    if p.size != 3:
        raise ValidationError(f"{name} must have length 3, got {p.size}")
    if abs(np.linalg.norm(p) - 1.0) > 1e-12:
        raise ValidationError(
            f"{name} must be a unit vector, got norm {np.linalg.norm(p):.12f}"
        )
    return p


def sphere_exp(p, v):
    """Exponential map on S^2: follow the geodesic from `p` with velocity `v`."""
    p = _unit_point(p, "p")
    v = np.asarray(v, dtype=float).ravel()
    if v.size != 3:
        raise ValidationError(f"tangent vector must have length 3, got {v.size}")
    if abs(float(p @ v)) > 1e-10:
        raise ValidationError(
            f"tangent vector not orthogonal to base point: <p, v> = {float(p @ v):.3e}"
        )
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return p.copy()
    y = np.cos(nv) * p + np.sin(nv) * (v / nv)
    return y / np.linalg.norm(y)


def sphere_log(p, y):
    """Logarithm map on S^2; inverse of :func:`sphere_exp` away from -p."""
    p = _unit_point(p, "p")
    y = _unit_point(y, "y")
    c = float(np.clip(p @ y, -1.0, 1.0))
    if c <= -1.0 + 1e-12:
        raise DomainError("logarithm undefined at the antipodal point")
    theta = float(np.arccos(c))
    u = y - c * p
    nu = float(np.linalg.norm(u))
    if nu == 0.0 or theta == 0.0:
        return np.zeros(3)
    return (theta / nu) * u


def _sphere_log_rows(base, P):
    """Vectorized sphere_log of every row of `P` at `base` (no per-row checks)."""
    c = np.clip(P @ base, -1.0, 1.0)
    if np.any(c <= -1.0 + 1e-12):
        raise DomainError("logarithm undefined at the antipodal point")
    theta = np.arccos(c)
    U = P - c[:, None] * base[None, :]
    nu = np.linalg.norm(U, axis=1)
    safe = np.where(nu > 0.0, nu, 1.0)
    return U * (np.where(nu > 0.0, theta / safe, 0.0))[:, None]


def frechet_mean_sphere(points, tol=1e-10, max_iters=100):
    """Intrinsic mean on S^2 by the gradient fixed-point iteration.

    The iterate moves along the average of the logarithm maps of the data
    until the update norm drops below `tol`.  Intended for point clouds
    inside an open hemisphere, where the mean is unique.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or P.shape[0] == 0:
        raise ValidationError("points must be a nonempty (n, 3) array")
    norms = np.linalg.norm(P, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-12:
        raise ValidationError("all points must be unit vectors")

    mean = P.sum(axis=0)
    nm = np.linalg.norm(mean)
    mean = P[0].copy() if nm < 1e-12 else mean / nm
    for _ in range(max_iters):
        step = _sphere_log_rows(mean, P).mean(axis=0)
        if np.linalg.norm(step) < tol:
            return mean
        step = step - float(step @ mean) * mean  # re-project against drift
        mean = sphere_exp(mean, step)
    raise ConvergenceError(
        f"Frechet mean did not converge in {max_iters} iterations",
        last_iterate=mean,
    )


def tangent_frame(p):
    """Deterministic orthonormal basis of the tangent plane at `p`, as (3, 2)."""
    p = _unit_point(p, "p")
    k = int(np.argmin(np.abs(p)))
    u = np.zeros(3)
    u[k] = 1.0
    u = u - float(u @ p) * p
    u /= np.linalg.norm(u)
    v = np.cross(p, u)
    return np.column_stack([u, v])
