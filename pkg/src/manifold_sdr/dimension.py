"""Leave-one-out cross-validation for the structural dimension.

For each working dimension l the basis is estimated, every sample is
predicted by the kernel-weighted average of the remaining ones in the
reduced coordinates, and the average squared residual is recorded.  The
minimizing l is the dimension estimate.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateNeighborhoodError,
    EstimationError,
    SdrError,
    ValidationError,
)
from .estimators import (
    EmbeddedSample,
    FitOptions,
    _fit,
    embed_responses,
    standardize_predictors,
)
from .smoothing import kernel_profile


@dataclass
class CvResult:
    """Cross-validation curve and the selected dimension.

    `cv_values[l-1]` is CV(l); entries are NaN for working dimensions whose
    fit failed.  `d_hat` is the 1-based argmin over the finite entries.
    """

    cv_values: np.ndarray
    d_hat: int
    bandwidths: np.ndarray
    skipped: np.ndarray
    failures: dict = field(default_factory=dict)


def nw_loo_predict(Z, X, B, h, j, spec):
    """Leave-one-out kernel-average prediction of Z_j.

    Weights are K_h(B.T (X_i - X_j)) over i != j; the self term is excluded,
    so the held-out response never influences its own prediction.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 0 <= j < n:
        raise ValidationError(f"anchor index {j} out of range for n={n}")
    if h <= 0.0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    R = X if B is None else X @ np.asarray(B, dtype=float)
    u = R - R[j]
    s2 = np.einsum("ij,ij->i", u, u) / (h * h)
    k = kernel_profile(spec, s2)
    k[j] = 0.0
    total = k.sum()
    if total <= 0.0:
        raise DegenerateNeighborhoodError(
            f"anchor {j} has an empty leave-one-out neighborhood at bandwidth {h:.6g}"
        )
    return (k @ Z) / total


def _cv_detail(Z, X, B, h, spec):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n = Z.shape[0]
    total = 0.0
    kept = 0
    for j in range(n):
        try:
            pred = nw_loo_predict(Z, X, B, h, j, spec)
        except DegenerateNeighborhoodError:
            continue
        r = Z[j] - pred
        total += float(r @ r)
        kept += 1
    if kept == 0:
        raise DegenerateNeighborhoodError(
            f"every anchor had an empty leave-one-out neighborhood at bandwidth {h:.6g}"
        )
    return total / kept, n - kept


def cv_value(Z, X, B, h, spec):
    """Mean squared leave-one-out residual over the non-degenerate anchors."""
    return _cv_detail(Z, X, B, h, spec)[0]


def select_dimension(Y, X, metric, method="iopg", opts=None, p_max=None):
    """Estimate the structural dimension by leave-one-out cross-validation.

    For l = 1..p_max the basis is fitted with the requested algorithm
    ("iopg" by default) and CV(l) is computed with bandwidth
    h_l = c0 n^(-1/(l+4)).  Failed working dimensions are recorded and
    excluded from the argmin.
    """
    opts = opts if opts is not None else FitOptions()
    if method not in ("iopg", "imave"):
        raise ValidationError(f"method must be 'iopg' or 'imave', got {method!r}")
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p_max is None:
        p_max = p
    if not 1 <= p_max <= p:
        raise ValidationError(f"p_max={p_max} must satisfy 1 <= p_max <= p={p}")

    sample = embed_responses(Y, metric, X)
    # Standardize once so the fitted bases and the CV kernel share a scale.
    if opts.standardize:
        Xs, _, _ = standardize_predictors(X)
        fit_opts = replace(opts, standardize=False)
    else:
        Xs = X
        fit_opts = opts
    sample_std = EmbeddedSample(
        Z=sample.Z,
        metric=sample.metric,
        basepoint=sample.basepoint,
        X=Xs,
        frame=sample.frame,
        standardized=opts.standardize,
    )

    cv_values = np.full(p_max, np.nan)
    bandwidths = np.zeros(p_max)
    skipped = np.zeros(p_max, dtype=int)
    failures = {}
    for l in range(1, p_max + 1):
        h_l = opts.c0 * n ** (-1.0 / (l + 4))
        bandwidths[l - 1] = h_l
        try:
            result = _fit(method, sample_std, l, fit_opts)
            value, n_skip = _cv_detail(sample.Z, Xs, result.basis_std, h_l, opts.kernel)
        except SdrError as exc:
            failures[l] = str(exc)
            continue
        cv_values[l - 1] = value
        skipped[l - 1] = n_skip

    if not np.any(np.isfinite(cv_values)):
        raise EstimationError(
            "cross-validation failed at every working dimension: "
            + "; ".join(f"l={l}: {msg}" for l, msg in failures.items())
        )
    d_hat = int(np.nanargmin(cv_values)) + 1
    return CvResult(
        cv_values=cv_values,
        d_hat=d_hat,
        bandwidths=bandwidths,
        skipped=skipped,
        failures=failures,
    )
