"""Sample-backed Rosenblatt transform via Gaussian-kernel conditional CDFs.

The forward map sends a d-dimensional sample y to (0,1)^d through the chain
of conditional CDFs F(y_1), F(y_2 | y_1), ..., each estimated with a
Nadaraya-Watson average of Gaussian CDF kernels whose conditioning weights
are products of Gaussian density kernels on the preceding components.  The
inverse map solves each conditional CDF equation by bisection; with Gaussian
kernels the conditionals are smooth and strictly increasing, so bisection
always converges.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .exceptions import NumericalError

# Floor applied when a component has zero sample spread.
_DEGENERATE_FLOOR = 1e-100

_CLAMP = 1e-12
_ZETA_TOL = 1e-10
_MAX_BRACKET_DOUBLINGS = 60
_MAX_BISECTIONS = 200


class RosenblattMap:
    """Conditional-CDF transform backed by a replica sample matrix.

    Args:
        samples: (M, d) replicas, M >= 2; a 1-D array is treated as d = 1.
        bandwidth_factor: scale on the Silverman rule-of-thumb bandwidth
            1.06 * sigma_k * M**(-1/5).  The rule systematically inflates
            predicted spreads, so factors below 1 are the norm.
    """

    def __init__(self, samples, bandwidth_factor: float = 0.75):
        y = np.asarray(samples, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.ndim != 2:
            raise ValueError("samples must be an (M, d) matrix")
        if y.shape[0] < 2:
            raise ValueError(f"need at least 2 replicas, got {y.shape[0]}")
        if not np.isfinite(y).all():
            raise ValueError("samples must be finite")
        if bandwidth_factor <= 0:
            raise ValueError(f"bandwidth_factor must be positive, got {bandwidth_factor}")

        m = y.shape[0]
        sigma = y.std(axis=0, ddof=1)
        h = bandwidth_factor * 1.06 * sigma * m ** (-0.2)
        degenerate = sigma == 0
        if degenerate.any():
            mean_scale = np.finfo(float).eps * np.abs(y.mean(axis=0))
            h = np.where(degenerate, mean_scale + _DEGENERATE_FLOOR, h)

        self.samples = y
        self.bandwidths = h
        self.bandwidth_factor = float(bandwidth_factor)

    @property
    def n_replicas(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def _check_points(self, pts, name):
        p = np.asarray(pts, dtype=float)
        squeeze = p.ndim == 1 and self.dim > 1
        if p.ndim == 1 and self.dim == 1:
            p = p[:, None]
            squeeze = False
        elif p.ndim == 1:
            p = p[None, :]
        if p.ndim != 2 or p.shape[1] != self.dim:
            raise ValueError(f"{name} must have {self.dim} components per point")
        return p, squeeze

    def forward(self, y) -> np.ndarray:
        """Map points to (0,1)^d through the conditional-CDF chain.

        Accepts a single point (d,) or a batch (n, d); outputs are clamped
        to [1e-12, 1 - 1e-12] so downstream germ transforms stay finite.
        """
        pts, squeeze = self._check_points(y, "y")
        n = pts.shape[0]
        out = np.empty_like(pts)
        # log of the conditioning weights, accumulated over components
        logw = np.zeros((n, self.n_replicas))
        for k in range(self.dim):
            u = (pts[:, k, None] - self.samples[None, :, k]) / self.bandwidths[k]
            w = np.exp(logw - logw.max(axis=1, keepdims=True))
            cdf = (w * ndtr(u)).sum(axis=1) / w.sum(axis=1)
            out[:, k] = np.clip(cdf, _CLAMP, 1.0 - _CLAMP)
            if k + 1 < self.dim:
                logw -= 0.5 * u * u
        return out[0] if squeeze else out

    def _conditional_cdf(self, yk, logw, k):
        """F(y_k | conditioning weights) for a batch of scalars yk (n,)."""
        u = (yk[:, None] - self.samples[None, :, k]) / self.bandwidths[k]
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        return (w * ndtr(u)).sum(axis=1) / w.sum(axis=1)

    def inverse(self, zeta) -> np.ndarray:
        """Solve the conditional-CDF chain for y given uniforms in (0,1)^d."""
        z, squeeze = self._check_points(zeta, "zeta")
        if np.any(z <= 0.0) or np.any(z >= 1.0):
            raise ValueError("zeta components must lie strictly inside (0, 1)")
        n = z.shape[0]
        out = np.empty_like(z)
        logw = np.zeros((n, self.n_replicas))
        for k in range(self.dim):
            out[:, k] = self._invert_component(z[:, k], logw, k)
            if k + 1 < self.dim:
                u = (out[:, k, None] - self.samples[None, :, k]) / self.bandwidths[k]
                logw -= 0.5 * u * u
        return out[0] if squeeze else out

    def _invert_component(self, target, logw, k):
        h = self.bandwidths[k]
        col = self.samples[:, k]
        lo = np.full(target.shape, col.min() - 6.0 * h)
        hi = np.full(target.shape, col.max() + 6.0 * h)

        # Widen brackets geometrically until they straddle the target level.
        for attempt in range(_MAX_BRACKET_DOUBLINGS + 1):
            bad_lo = self._conditional_cdf(lo, logw, k) > target
            bad_hi = self._conditional_cdf(hi, logw, k) < target
            if not (bad_lo.any() or bad_hi.any()):
                break
            if attempt == _MAX_BRACKET_DOUBLINGS:
                raise NumericalError(
                    "bracket expansion failed after "
                    f"{_MAX_BRACKET_DOUBLINGS} doublings on component {k}"
                )
            span = hi - lo
            lo = np.where(bad_lo, lo - span, lo)
            hi = np.where(bad_hi, hi + span, hi)

        y_tol = 1e-12 * max(col.max() - col.min(), 12.0 * h)
        for _ in range(_MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            f = self._conditional_cdf(mid, logw, k)
            high = f > target
            lo = np.where(high, lo, mid)
            hi = np.where(high, mid, hi)
            if np.all(((hi - lo) < y_tol) | (np.abs(f - target) < _ZETA_TOL)):
                break
        return 0.5 * (lo + hi)


def build_map(samples, bandwidth_factor: float = 0.75) -> RosenblattMap:
    """Construct a RosenblattMap (thin wrapper around the constructor)."""
    return RosenblattMap(samples, bandwidth_factor=bandwidth_factor)
