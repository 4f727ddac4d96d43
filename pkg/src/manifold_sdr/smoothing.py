"""Kernels, bandwidth schedules, and normalized local weights.

Both estimators smooth with the same machinery: a kernel evaluated on the
projected predictor differences, a geometrically shrinking bandwidth with a
dimension-dependent floor, and per-anchor weights normalized to sum to one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNeighborhoodError, ValidationError

KERNEL_KINDS = ("quartic", "gaussian")

DEFAULT_C0 = 2.34


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice: compactly supported quartic or Gaussian."""

    kind: str = "quartic"

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(
                f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}"
            )


def kernel_profile(spec, s2):
    """Unnormalized kernel value as a function of the squared scaled norm.

    quartic: 15/16 (1 - s2)^2 for s2 < 1, else 0.  gaussian: exp(-s2 / 2).
    The 1/h^dim normalization is omitted; it cancels in weight ratios.
    """
    s2 = np.asarray(s2, dtype=float)
    if spec.kind == "quartic":
        return np.where(s2 < 1.0, 0.9375 * (1.0 - s2) ** 2, 0.0)
    return np.exp(-0.5 * s2)


def kernel_eval(spec, u, h):
    """Scaled kernel K_h(u) = K(u/h) / h^len(u)."""
    if h <= 0.0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    u = np.asarray(u, dtype=float).ravel()
    s2 = float(u @ u) / (h * h)
    return float(kernel_profile(spec, s2)) / h ** u.size


def initial_bandwidth(n, p, c0=DEFAULT_C0):
    """Starting bandwidth c0 n^(-1/(p0+6)) with p0 = max(p, 3)."""
    if n < 2:
        raise ValidationError(f"need at least 2 samples, got n={n}")
    if p < 1:
        raise ValidationError(f"need at least 1 predictor, got p={p}")
    p0 = max(p, 3)
    return c0 * n ** (-1.0 / (p0 + 6))


def next_bandwidth(h_t, n, p, d, c0=DEFAULT_C0):
    """One shrinkage step: max(r_n h_t, c0 n^(-1/(d+4))).

    The ratio r_n = n^(-1/(2(p0+6))) halves the starting rate exponent, so the
    sequence decreases geometrically until it hits the d-dependent floor.
    """
    if h_t <= 0.0:
        raise ValidationError(f"bandwidth must be positive, got {h_t}")
    p0 = max(p, 3)
    r_n = n ** (-1.0 / (2 * (p0 + 6)))
    return max(r_n * h_t, c0 * n ** (-1.0 / (d + 4)))


def silverman_bandwidth(n, d):
    """Normal-reference fixed bandwidth {4/(d+2)}^{1/(d+4)} n^{-1/(d+4)}."""
    if n < 2:
        raise ValidationError(f"need at least 2 samples, got n={n}")
    if d < 1:
        raise ValidationError(f"dimension must be positive, got {d}")
    return (4.0 / (d + 2)) ** (1.0 / (d + 4)) * n ** (-1.0 / (d + 4))


@dataclass(frozen=True)
class BandwidthSchedule:
    """Shrinking bandwidth sequence used across estimator iterations."""

    n: int
    p: int
    d: int
    c0: float = DEFAULT_C0
    max_iters: int = 30

    @property
    def p0(self):
        return max(self.p, 3)

    def initial(self):
        return initial_bandwidth(self.n, self.p, self.c0)

    def floor(self):
        return self.c0 * self.n ** (-1.0 / (self.d + 4))

    def step(self, h):
        return next_bandwidth(h, self.n, self.p, self.d, self.c0)

    def values(self):
        """Bandwidths h_1, ..., h_max_iters (h_1 is the starting value)."""
        out = [self.initial()]
        for _ in range(self.max_iters - 1):
            out.append(self.step(out[-1]))
        return out


def local_weights(X, B, j, h, spec):
    """Normalized kernel weights of every sample around anchor `j`.

    Weights are proportional to K_h(B.T (X_i - X_j)); `B=None` means the
    identity (full predictor differences).  The self term i=j is included.
    Raises DegenerateNeighborhoodError when no other sample carries positive
    kernel value, signaling a too-small bandwidth.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"X must be 2-d, got shape {X.shape}")
    n = X.shape[0]
    if not 0 <= j < n:
        raise ValidationError(f"anchor index {j} out of range for n={n}")
    if h <= 0.0:
        raise ValidationError(f"bandwidth must be positive, got {h}")
    R = X if B is None else X @ np.asarray(B, dtype=float)
    U = R - R[j]
    s2 = np.einsum("ij,ij->i", U, U) / (h * h)
    k = kernel_profile(spec, s2)
    others = k > 0.0
    others[j] = False
    if not np.any(others):
        raise DegenerateNeighborhoodError(
            f"anchor {j} has no neighbor with positive kernel value at "
            f"bandwidth {h:.6g}; bandwidth too small"
        )
    return k / k.sum()
