"""Iterative basis estimators for manifold-valued responses.

Two estimators share one skeleton.  The gradient outer-product route (iOPG)
fits full-dimensional local linear models, averages the outer products of
the fitted slopes, and reads the basis off the top eigenvectors.  The
alternating route (iMAVE) fits reduced local models against the current
basis and then solves one pd x pd least-squares system for the basis update.
Responses enter through a metric-specific Euclidean embedding; predictors
are marginally standardized by default and the fitted basis is mapped back
to the original predictor scale.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, RankDeficiencyError, ValidationError
from .local_fit import RIDGE_SCALE, fit_all_anchors
from .manifolds import (
    _sphere_log_rows,
    chol_map,
    cholesky_factor,
    frechet_mean_sphere,
    spd_log,
    tangent_frame,
    vecl,
    vecs,
)
from .smoothing import (
    DEFAULT_C0,
    KernelSpec,
    initial_bandwidth,
    kernel_profile,
    next_bandwidth,
    silverman_bandwidth,
)

METRICS = ("log_euclidean", "log_cholesky", "sphere")

BANDWIDTH_POLICIES = ("schedule", "silverman")

# CLI-facing estimator names.
METHOD_NAMES = {
    "eu-iopg": ("log_euclidean", "iopg"),
    "eu-imave": ("log_euclidean", "imave"),
    "ch-iopg": ("log_cholesky", "iopg"),
    "ch-imave": ("log_cholesky", "imave"),
    "sphere-iopg": ("sphere", "iopg"),
    "sphere-imave": ("sphere", "imave"),
}

# Anchors whose quartic neighborhood is empty retry with an inflated
# bandwidth a few times before being dropped from the sums.
ANCHOR_INFLATE = 1.5
ANCHOR_RETRIES = 5

# Share of droppable anchors beyond which estimation is considered failed.
MAX_SKIP_FRACTION = 0.2


@dataclass(frozen=True)
class FitOptions:
    """Knobs shared by both estimators.

    `bandwidth_policy` selects between the shrinking schedule and a fixed
    normal-reference (Silverman) bandwidth; `fixed_bandwidth` pins an
    explicit value and overrides the policy.  `early_stop_tol` ends the
    iteration once consecutive bases agree to that subspace distance; it is
    off by default so every run performs the full `max_iters` sweeps.
    `seed` is carried only for run reports; the estimators themselves are
    deterministic.
    """

    max_iters: int = 30
    kernel: KernelSpec = KernelSpec("quartic")
    c0: float = DEFAULT_C0
    ridge: float | None = None
    seed: int | None = None
    standardize: bool = True
    bandwidth_policy: str = "schedule"
    fixed_bandwidth: float | None = None
    early_stop_tol: float | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.bandwidth_policy not in BANDWIDTH_POLICIES:
            raise ValidationError(
                f"unknown bandwidth policy {self.bandwidth_policy!r}, "
                f"expected one of {BANDWIDTH_POLICIES}"
            )
        if self.fixed_bandwidth is not None and self.fixed_bandwidth <= 0:
            raise ValidationError("fixed_bandwidth must be positive")
        if self.early_stop_tol is not None and self.early_stop_tol <= 0:
            raise ValidationError("early_stop_tol must be positive")


@dataclass
class EmbeddedSample:
    """Responses flattened into regression targets.

    `Z` is (n, q); `basepoint` is the embedding base (identity matrix for
    the SPD metrics, the Frechet mean for the sphere) and `frame` the
    orthonormal tangent frame used for sphere coordinates.  `standardized`
    marks predictors that are already on the fitted scale.
    """

    Z: np.ndarray
    metric: str
    basepoint: np.ndarray
    X: np.ndarray | None = None
    frame: np.ndarray | None = None
    standardized: bool = False


@dataclass
class FitResult:
    """Fitted basis plus run diagnostics."""

    basis: np.ndarray
    basis_std: np.ndarray
    init_basis: np.ndarray | None = None
    skipped_anchors: int = 0
    final_bandwidth: float = 0.0
    iterations: int = 0


# ---------------------------------------------------------------------------
# Response embedding
# ---------------------------------------------------------------------------

def embed_responses(Y, metric, X=None):
    """Embed manifold responses into tangent coordinates.

    log_euclidean: rows vecs(log Y_i).  log_cholesky: rows of the
    log-diagonal Cholesky coordinates.  sphere: coordinates of the logarithm
    maps at the Frechet mean in a fixed tangent frame (q = 2).
    """
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}, expected one of {METRICS}")
    if X is not None:
        X = np.asarray(X, dtype=float)
    if metric == "sphere":
        P = np.asarray(Y, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3:
            raise ValidationError(f"sphere responses must be (n, 3), got {P.shape}")
        mu = frechet_mean_sphere(P)
        frame = tangent_frame(mu)
        Z = _sphere_log_rows(mu, P) @ frame
        return EmbeddedSample(Z=Z, metric=metric, basepoint=mu, X=X, frame=frame)

    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 3 or Y.shape[1] != Y.shape[2]:
        raise ValidationError(f"SPD responses must be (n, m, m), got {Y.shape}")
    if metric == "log_euclidean":
        rows = [vecs(spd_log(S)) for S in Y]
    else:
        rows = [vecl(chol_map(cholesky_factor(S))) for S in Y]
    return EmbeddedSample(
        Z=np.vstack(rows), metric=metric, basepoint=np.eye(Y.shape[1]), X=X
    )


# ---------------------------------------------------------------------------
# Basis utilities
# ---------------------------------------------------------------------------

def orthonormalize(B):
    """QR orthonormalization with the R diagonal forced positive."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    Q, R = np.linalg.qr(B)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def subspace_error(Bhat, B0):
    """Frobenius distance between the two column-space projectors.

    Invariant to rotation within either span; ranges over [0, sqrt(2d)].
    `B0` is orthonormalized first, so only its span matters.
    """
    Bhat = np.asarray(Bhat, dtype=float)
    B0 = np.asarray(B0, dtype=float)
    if Bhat.ndim == 1:
        Bhat = Bhat[:, None]
    if B0.ndim == 1:
        B0 = B0[:, None]
    if Bhat.shape[0] != B0.shape[0]:
        raise ValidationError(
            f"ambient dimension mismatch: {Bhat.shape[0]} vs {B0.shape[0]}"
        )
    Bh = orthonormalize(Bhat)
    B0 = orthonormalize(B0)
    return float(np.linalg.norm(Bh @ Bh.T - B0 @ B0.T, "fro"))


def standardize_predictors(X):
    """Center columns and scale them to unit sample standard deviation.

    Returns (X_std, mean, scale); the pair (mean, scale) lets a basis fitted
    on the standardized scale be reported on the original one.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError(f"X must be (n >= 2, p), got shape {X.shape}")
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    bad = np.flatnonzero(scale <= 1e-12 * np.maximum(1.0, np.abs(mean)))
    if bad.size:
        raise ValidationError(f"column {int(bad[0])} is constant, cannot standardize")
    return (X - mean) / scale, mean, scale


def _top_eigenvectors(S, d, tie_tol=1e-12):
    """Top-d eigenvectors of a symmetric matrix with deterministic signs.

    Eigenvalues sort descending; each vector's largest-magnitude entry is
    made positive; runs of numerically tied eigenvalues are ordered
    lexicographically.
    """
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    for c in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, c])))
        if V[i, c] < 0:
            V[:, c] = -V[:, c]
    start = 0
    for stop in range(1, w.size + 1):
        tied = stop < w.size and w[stop - 1] - w[stop] < tie_tol * max(1.0, abs(w[stop - 1]))
        if not tied or stop == w.size:
            if stop - start > 1:
                block = V[:, start:stop]
                keys = sorted(range(stop - start), key=lambda c: tuple(block[:, c]))
                V[:, start:stop] = block[:, keys]
            start = stop
    return V[:, :d].copy()


def _solve_sym_guarded(M, rhs, ridge=None):
    """Ridge-stabilized symmetric solve with a pseudo-inverse cutoff.

    Eigenvalues below 1e-12 of the largest are treated as zero, matching the
    Moore-Penrose behavior once conditioning exceeds 1e12.
    """
    M = 0.5 * (M + M.T)
    size = M.shape[0]
    lam = RIDGE_SCALE * float(np.trace(M)) / size if ridge is None else float(ridge)
    if lam:
        M = M + lam * np.eye(size)
    w, Q = np.linalg.eigh(M)
    if not np.all(np.isfinite(w)) or w[-1] <= 0.0:
        raise RankDeficiencyError("basis update system has no positive spectrum")
    cut = 1e-12 * w[-1]
    keep = w > cut
    inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    return Q @ (inv * (Q.T @ rhs))


# ---------------------------------------------------------------------------
# Weights with per-anchor degeneracy handling
# ---------------------------------------------------------------------------

def _weight_matrix(X, B, h, spec):
    """Per-anchor normalized kernel weights for every anchor at once.

    Returns (W, used, skipped) where W is (n, n_used) with column c holding
    the weights for anchor used[c].  Anchors whose quartic neighborhood is
    empty retry with bandwidth inflated by ANCHOR_INFLATE up to
    ANCHOR_RETRIES times, then are dropped.
    """
    R = X if B is None else X @ B
    diff = R[None, :, :] - R[:, None, :]
    S2 = np.einsum("jik,jik->ji", diff, diff)
    K = kernel_profile(spec, S2 / (h * h))
    n = X.shape[0]
    idx = np.arange(n)
    pos = K > 0.0
    pos[idx, idx] = False
    ok = pos.any(axis=1)
    skipped = []
    for j in np.flatnonzero(~ok):
        hj = h
        for _ in range(ANCHOR_RETRIES):
            hj *= ANCHOR_INFLATE
            kj = kernel_profile(spec, S2[j] / (hj * hj))
            mask = kj > 0.0
            mask[j] = False
            if mask.any():
                K[j] = kj
                ok[j] = True
                break
        else:
            skipped.append(j)
    used = np.flatnonzero(ok)
    W = (K[used] / K[used].sum(axis=1, keepdims=True)).T
    return W, used, len(skipped)


# ---------------------------------------------------------------------------
# Core iterations (standardized coordinates)
# ---------------------------------------------------------------------------

def _start_bandwidth(opts, n, p, d):
    if opts.fixed_bandwidth is not None:
        return opts.fixed_bandwidth, True
    if opts.bandwidth_policy == "silverman":
        return silverman_bandwidth(n, d), True
    return initial_bandwidth(n, p, opts.c0), False


def _check_skip_budget(n_skipped, n):
    if n_skipped > MAX_SKIP_FRACTION * n:
        raise EstimationError(
            f"{n_skipped} of {n} anchors degenerate even after bandwidth "
            "inflation; data too sparse for the requested bandwidth"
        )


def _iopg_core(Z, X, d, opts, diag):
    n, p = X.shape
    B = np.eye(p)
    h, fixed = _start_bandwidth(opts, n, p, d)
    for t in range(opts.max_iters):
        W, used, n_skip = _weight_matrix(X, B, h, opts.kernel)
        _check_skip_budget(n_skip, n)
        diag["skipped"] += n_skip
        _, slopes = fit_all_anchors(Z, X, None, W, anchors=used, ridge=opts.ridge)
        lam = np.einsum("jqa,jqb->ab", slopes, slopes) / used.size
        B_new = _top_eigenvectors(lam, d)
        stop = (
            opts.early_stop_tol is not None
            and B.shape == B_new.shape
            and subspace_error(B_new, B) < opts.early_stop_tol
        )
        B = B_new
        diag["iterations"] = t + 1
        if stop:
            break
        if not fixed:
            h = next_bandwidth(h, n, p, d, opts.c0)
    diag["bandwidth"] = h
    return B


def _imave_core(Z, X, d, opts, B_init, diag):
    n, p = X.shape
    B = B_init
    h, fixed = _start_bandwidth(opts, n, p, d)
    for t in range(opts.max_iters):
        W, used, n_skip = _weight_matrix(X, B, h, opts.kernel)
        _check_skip_budget(n_skip, n)
        diag["skipped"] += n_skip
        a, slopes = fit_all_anchors(Z, X, B, W, anchors=used, ridge=opts.ridge)
        Xu = X[used]
        C = slopes.transpose(0, 2, 1)  # (nu, d, q), column s is the slope of coordinate s
        G = np.matmul(C, C.transpose(0, 2, 1))
        # weighted moments around each anchor; weight columns sum to one
        mu = W.T @ X
        zeta = W.T @ Z
        XX = np.einsum("ic,ia,ib->cab", W, X, X)
        XZ = np.einsum("ic,ia,ik->cak", W, X, Z)
        S = (
            XX
            - np.einsum("ca,cb->cab", mu, Xu)
            - np.einsum("ca,cb->cab", Xu, mu)
            + np.einsum("ca,cb->cab", Xu, Xu)
        )
        resid = (
            XZ
            - np.einsum("ca,ck->cak", Xu, zeta)
            - np.einsum("ca,ck->cak", mu - Xu, a)
        )
        M = np.einsum("jcd,jab->cadb", G, S).reshape(p * d, p * d)
        rhs = np.einsum("jpk,jdk->pd", resid, C).ravel(order="F")
        vec_b = _solve_sym_guarded(M, rhs, opts.ridge)
        B_new = orthonormalize(vec_b.reshape((p, d), order="F"))
        stop = (
            opts.early_stop_tol is not None
            and subspace_error(B_new, B) < opts.early_stop_tol
        )
        B = B_new
        diag["iterations"] = t + 1
        if stop:
            break
        if not fixed:
            h = next_bandwidth(h, n, p, d, opts.c0)
    diag["bandwidth"] = h
    return B


# ---------------------------------------------------------------------------
# Public fitting interface
# ---------------------------------------------------------------------------

def _fit(algo, sample, d, opts=None, B_init=None):
    opts = opts if opts is not None else FitOptions()
    if sample.X is None:
        raise ValidationError("sample carries no predictors; attach X before fitting")
    X = np.asarray(sample.X, dtype=float)
    Z = np.asarray(sample.Z, dtype=float)
    n, p = X.shape
    if Z.shape[0] != n:
        raise ValidationError(f"X has {n} rows but Z has {Z.shape[0]}")
    if not 1 <= d <= p:
        raise ValidationError(f"target dimension d={d} must satisfy 1 <= d <= p={p}")

    if opts.standardize:
        Xs, _, scale = standardize_predictors(X)
    else:
        Xs, scale = X, np.ones(p)

    diag = {"skipped": 0, "bandwidth": 0.0, "iterations": 0}
    init_std = None
    if algo == "iopg":
        B_std = _iopg_core(Z, Xs, d, opts, diag)
    else:
        if B_init is None:
            init_std = _iopg_core(Z, Xs, d, opts, diag)
        else:
            B_init = np.asarray(B_init, dtype=float)
            if B_init.ndim == 1:
                B_init = B_init[:, None]
            if B_init.shape != (p, d):
                raise ValidationError(
                    f"B_init must be ({p}, {d}), got {B_init.shape}"
                )
            if np.linalg.norm(B_init.T @ B_init - np.eye(d)) > 1e-8:
                raise ValidationError("B_init must have orthonormal columns")
            init_std = orthonormalize(B_init * scale[:, None])
        B_std = _imave_core(Z, Xs, d, opts, init_std, diag)

    if opts.standardize:
        basis = orthonormalize(B_std / scale[:, None])
        init_basis = (
            orthonormalize(init_std / scale[:, None]) if init_std is not None else None
        )
    else:
        basis = B_std
        init_basis = init_std
    return FitResult(
        basis=basis,
        basis_std=B_std,
        init_basis=init_basis,
        skipped_anchors=diag["skipped"],
        final_bandwidth=diag["bandwidth"],
        iterations=diag["iterations"],
    )


def iopg_fit(sample, d, opts=None):
    """Gradient outer-product basis estimate; returns an orthonormal (p, d) array."""
    return _fit("iopg", sample, d, opts).basis


def imave_fit(sample, d, opts=None, B_init=None):
    """Alternating minimum-average-variance basis estimate.

    `B_init` defaults to the iOPG fit of the same sample.
    """
    return _fit("imave", sample, d, opts, B_init=B_init).basis


def parse_method(name):
    """Map an estimator name like 'eu-imave' to (metric, algorithm)."""
    try:
        return METHOD_NAMES[name]
    except KeyError:
        raise ValidationError(
            f"unknown method {name!r}, expected one of {sorted(METHOD_NAMES)}"
        ) from None


def fit_method(name, sample, d, opts=None):
    """Fit the named estimator on an embedded sample, returning a FitResult."""
    metric, algo = parse_method(name)
    if sample.metric != metric:
        raise ValidationError(
            f"method {name} expects a {metric} embedding, sample uses {sample.metric}"
        )
    return _fit(algo, sample, d, opts)
