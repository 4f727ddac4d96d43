"""Weighted local linear least squares at anchor points.

The full design for one anchor stacks q response coordinates against a
shared reduced regressor (1, r_i) with r_i = B.T (X_i - X_j).  Because every
coordinate sees the same regressor, the q(1+k) normal equations decouple
into one (1+k) x (1+k) weighted solve applied to q right-hand sides, which
is what this module implements.  The dense Kronecker system exists only as a
test oracle.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficiencyError, ValidationError

# Relative Tikhonov level used when no explicit ridge is supplied: the Gram
# matrix is singular whenever fewer than k+1 points carry positive weight.
RIDGE_SCALE = 1e-8


@dataclass
class LocalFit:
    """Local intercept and slopes at one anchor.

    `a` has length q; `slope` is (q, k) with row s holding the coefficient
    vector of response coordinate s against the reduced regressor.
    """

    a: np.ndarray
    slope: np.ndarray
    anchor: int


def _auto_ridge(gram_trace, size):
    return RIDGE_SCALE * gram_trace / size


def local_linear_fit(Z, X, B, j, w, ridge=None):
    """Weighted local linear fit of embedded responses at anchor `j`.

    Parameters
    ----------
    Z : (n, q) embedded responses.
    X : (n, p) predictors.
    B : (p, k) reduction matrix, or None for the full-dimensional design.
    j : anchor index.
    w : length-n weight vector (normalized by the caller).
    ridge : Tikhonov constant added to the Gram matrix; None selects
        RIDGE_SCALE * trace(Gram) / (1 + k).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float).ravel()
    n = X.shape[0]
    if Z.shape[0] != n or w.size != n:
        raise ValidationError(
            f"inconsistent sample counts: X has {n}, Z has {Z.shape[0]}, w has {w.size}"
        )
    if not 0 <= j < n:
        raise ValidationError(f"anchor index {j} out of range for n={n}")

    R = X if B is None else X @ np.asarray(B, dtype=float)
    r = R - R[j]
    G = np.column_stack([np.ones(n), r])
    WG = G * w[:, None]
    gram = G.T @ WG
    rhs = WG.T @ Z
    if ridge is None:
        ridge = _auto_ridge(float(np.trace(gram)), gram.shape[0])
    if ridge:
        gram = gram + ridge * np.eye(gram.shape[0])
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError(
            f"local Gram matrix singular at anchor {j}", anchor=j
        ) from None
    if not np.all(np.isfinite(sol)):
        raise RankDeficiencyError(
            f"local solve produced non-finite values at anchor {j}", anchor=j
        )
    return LocalFit(a=sol[0].copy(), slope=sol[1:].T.copy(), anchor=j)


def fit_all_anchors(Z, X, B, W, anchors=None, ridge=None):
    """Vectorized :func:`local_linear_fit` at many anchors.

    `W` holds one normalized weight column per anchor, so W[:, c] are the
    weights for anchor index anchors[c].  Returns (a, slopes) with shapes
    (n_anchors, q) and (n_anchors, q, k).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    n = X.shape[0]
    if anchors is None:
        anchors = np.arange(W.shape[1])
    anchors = np.asarray(anchors, dtype=int)

    R = X if B is None else X @ np.asarray(B, dtype=float)
    # G[c, i, :] = (1, R_i - R_anchor_c); kept dense, n^2 (1+k) floats.
    diff = R[None, :, :] - R[anchors][:, None, :]
    G = np.concatenate([np.ones((anchors.size, n, 1)), diff], axis=2)
    WG = G * W.T[:, :, None]
    gram = np.matmul(G.transpose(0, 2, 1), WG)
    rhs = np.matmul(WG.transpose(0, 2, 1), Z)

    size = gram.shape[1]
    if ridge is None:
        lam = _auto_ridge(np.trace(gram, axis1=1, axis2=2), size)
    else:
        lam = np.full(anchors.size, float(ridge))
    idx = np.arange(size)
    gram[:, idx, idx] += lam[:, None]
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError("local Gram matrix singular in batched solve") from None
    if not np.all(np.isfinite(sol)):
        raise RankDeficiencyError("batched local solve produced non-finite values")
    a = sol[:, 0, :].copy()
    slopes = sol[:, 1:, :].transpose(0, 2, 1).copy()
    return a, slopes
