"""Grids, discrete fields, region-aware norms and basic vector calculus.

Two grid families: a Cartesian box for full-plane flow and a log-polar
annulus for the exterior domain.  Fields are immutable value holders with
bilinear interpolation (in (log r, theta) on polar grids).  Norm regions:
'all', 'exterior' (the fluid domain), 'obstacle' (the scaled obstacle) or
('annulus', a, b).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainError, ObstacleShape


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform n x n grid on the box [-L, L)^2, spacing h = 2L/n."""

    L: float
    n: int

    def __post_init__(self):
        if self.n % 2 != 0:
            raise ValueError("n must be even")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def mesh(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def points(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.stack([X, Y], axis=-1)


@dataclass(frozen=True)
class PolarExteriorGrid:
    """Log-spaced polar grid r_in <= r <= r_out, n_theta points in angle."""

    r_in: float
    r_out: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise ValueError("need 0 < r_in < r_out")
        if self.n_theta % 4 != 0:
            raise ValueError("n_theta must be divisible by 4")

    @property
    def ds(self) -> float:
        return (np.log(self.r_out) - np.log(self.r_in)) / (self.n_r - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    def s_axis(self) -> np.ndarray:
        return np.log(self.r_in) + self.ds * np.arange(self.n_r)

    def radii(self) -> np.ndarray:
        return np.exp(self.s_axis())

    def thetas(self) -> np.ndarray:
        return self.dtheta * np.arange(self.n_theta)

    def points(self) -> np.ndarray:
        r = self.radii()[:, None]
        th = self.thetas()[None, :]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def area_weights(self) -> np.ndarray:
        """Quadrature weights for integrals over the annulus, shape (n_r, n_theta)."""
        r = self.radii()
        wr = np.full(self.n_r, self.ds)
        wr[0] = wr[-1] = 0.5 * self.ds  # trapezoid in s
        return (r**2 * wr)[:, None] * np.full(self.n_theta, self.dtheta)


class Field:
    """Scalar or vector values on a grid, optionally zero-extended inside
    the obstacle.  Values are (n1, n2) or (n1, n2, 2)."""

    def __init__(self, grid, values, shape: ObstacleShape | None = None,
                 eps: float | None = None, zero_extended: bool = False):
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values
        self.shape = shape
        self.eps = eps
        self.zero_extended = zero_extended

    @property
    def ncomp(self) -> int:
        return 1 if self.values.ndim == 2 else self.values.shape[-1]

    # -- region machinery ---------------------------------------------------

    def _point_radii(self) -> np.ndarray:
        p = self.grid.points()
        return np.hypot(p[..., 0], p[..., 1])

    def _inside_obstacle(self) -> np.ndarray:
        if self.shape is None or self.eps is None:
            return np.zeros(self.values.shape[:2], dtype=bool)
        p = self.grid.points()
        return self.shape.contains(p / self.eps)

    def region_mask(self, region) -> np.ndarray:
        if isinstance(region, tuple) and region[0] == "annulus":
            _, a, b = region
            r = self._point_radii()
            return (r >= a) & (r <= b)
        if region == "all":
            return np.ones(self.values.shape[:2], dtype=bool)
        if region == "exterior":
            return ~self._inside_obstacle()
        if region == "obstacle":
            return self._inside_obstacle()
        raise ValueError(f"unknown region {region!r}")

    def _weights(self) -> np.ndarray:
        if isinstance(self.grid, CartesianGrid):
            return np.full(self.values.shape[:2], self.grid.h**2)
        return self.grid.area_weights()

    # -- interpolation -------------------------------------------------------

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at points x of shape (..., 2).

        Points inside the obstacle evaluate to zero when the field is
        zero-extended.
        """
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        if isinstance(self.grid, CartesianGrid):
            out = self._interp_cartesian(flat)
        else:
            out = self._interp_polar(flat)
        if self.zero_extended and self.shape is not None and self.eps is not None:
            inside = self.shape.contains(flat / self.eps)
            out[inside] = 0.0
        tail = () if self.values.ndim == 2 else (self.ncomp,)
        return out.reshape(x.shape[:-1] + tail)

    def _gather(self, i, j, fi, fj):
        v = self.values
        if v.ndim == 2:
            v = v[..., None]
        w00 = (1 - fi) * (1 - fj)
        w10 = fi * (1 - fj)
        w01 = (1 - fi) * fj
        w11 = fi * fj
        out = (w00[:, None] * v[i, j] + w10[:, None] * v[i + 1, j]
               + w01[:, None] * v[i, j + 1] + w11[:, None] * v[i + 1, j + 1])
        return out if self.values.ndim == 3 else out[:, 0]

    def _interp_cartesian(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        ti = (x[:, 0] + g.L) / g.h
        tj = (x[:, 1] + g.L) / g.h
        i = np.clip(np.floor(ti).astype(int), 0, g.n - 2)
        j = np.clip(np.floor(tj).astype(int), 0, g.n - 2)
        return self._gather(i, j, ti - i, tj - j)

    def _interp_polar(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        r = np.hypot(x[:, 0], x[:, 1])
        th = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
        s = np.log(np.maximum(r, 1e-300))
        ti = (s - np.log(g.r_in)) / g.ds
        tj = th / g.dtheta
        i = np.clip(np.floor(ti).astype(int), 0, g.n_r - 2)
        fj_idx = np.floor(tj).astype(int) % g.n_theta
        v = self.values
        if v.ndim == 2:
            v = v[..., None]
        fi = np.clip(ti - i, 0.0, 1.0)
        fj = tj - np.floor(tj)
        jp = (fj_idx + 1) % g.n_theta
        out = ((1 - fi)[:, None] * ((1 - fj)[:, None] * v[i, fj_idx] + fj[:, None] * v[i, jp])
               + fi[:, None] * ((1 - fj)[:, None] * v[i + 1, fj_idx] + fj[:, None] * v[i + 1, jp]))
        out = out if self.values.ndim == 3 else out[:, 0]
        # outside the annulus the discrete field carries no information
        out[r < g.r_in * (1 - 1e-12)] = 0.0
        return out


# -- norms and calculus ------------------------------------------------------


def l2_norm(f: Field, region="all") -> float:
    """L2 norm over a region, by the grid's native quadrature."""
    mask = f.region_mask(region)
    if not mask.any():
        warnings.warn("empty region in l2_norm", stacklevel=2)
        return 0.0
    mag2 = f.values**2 if f.values.ndim == 2 else np.sum(f.values**2, axis=-1)
    return float(np.sqrt(np.sum(f._weights()[mask] * mag2[mask])))


def sup_norm(f: Field, region="all") -> float:
    mask = f.region_mask(region)
    if not mask.any():
        warnings.warn("empty region in sup_norm", stacklevel=2)
        return 0.0
    mag = np.abs(f.values) if f.values.ndim == 2 else np.sqrt(np.sum(f.values**2, axis=-1))
    return float(np.max(mag[mask]))


def extend_by_zero(f: Field) -> Field:
    """Zero-extension into the obstacle: exact zeros at interior nodes."""
    values = f.values.copy()
    if f.shape is not None and f.eps is not None:
        inside = f._inside_obstacle()
        values[inside] = 0.0
    return Field(f.grid, values, shape=f.shape, eps=f.eps, zero_extended=True)


def circulation(u, radius: float, n: int = 512, center=(0.0, 0.0)) -> float:
    """Line integral of u around a circle, by the trapezoid rule.

    u may be a Field or a callable mapping (N, 2) points to (N, 2) values.
    """
    if isinstance(u, Field):
        if u.shape is not None and u.eps is not None:
            br = u.shape.bounding_radius * u.eps
            if radius <= br and np.allclose(center, 0.0):
                # circle may cross the obstacle
                raise DomainError("circulation circle crosses the obstacle")
        func = u
    else:
        func = u
    th = 2 * np.pi * np.arange(n) / n
    pts = np.array(center) + radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
    tangent = np.stack([-np.sin(th), np.cos(th)], axis=-1)
    vals = np.asarray(func(pts))
    integrand = np.sum(vals * tangent, axis=-1)
    return float(radius * np.sum(integrand) * (2 * np.pi / n))


def divergence(u: Field) -> Field:
    """Centered-difference divergence (interior; one-sided at edges)."""
    if u.ncomp != 2:
        raise ValueError("divergence needs a vector field")
    if isinstance(u.grid, CartesianGrid):
        h = u.grid.h
        dux = np.gradient(u.values[..., 0], h, axis=0)
        dvy = np.gradient(u.values[..., 1], h, axis=1)
        return Field(u.grid, dux + dvy, shape=u.shape, eps=u.eps)
    g = u.grid
    r = g.radii()[:, None]
    th = g.thetas()[None, :]
    ct, st = np.cos(th), np.sin(th)
    ur = u.values[..., 0] * ct + u.values[..., 1] * st
    ut = -u.values[..., 0] * st + u.values[..., 1] * ct
    # div u = (1/r) d(r u_r)/dr + (1/r) d(u_theta)/dtheta, with d/dr = (1/r) d/ds
    drur = np.gradient(r * ur, g.ds, axis=0) / r
    dutdth = np.gradient(ut, g.dtheta, axis=1, edge_order=2)
    # periodic wrap in theta
    dutdth[:, 0] = (ut[:, 1] - ut[:, -1]) / (2 * g.dtheta)
    dutdth[:, -1] = (ut[:, 0] - ut[:, -2]) / (2 * g.dtheta)
    return Field(u.grid, (drur + dutdth) / r, shape=u.shape, eps=u.eps)


# -- free-space Poisson/Biot-Savart on a Cartesian grid -----------------------


def _pad_kernel(grid: CartesianGrid, kernel_func) -> np.ndarray:
    """Sample a kernel on the doubled grid for free-space FFT convolution."""
    n, h = grid.n, grid.h
    idx = np.arange(2 * n)
    idx[n:] -= 2 * n  # wrap to signed offsets
    X = idx[:, None] * h
    Y = idx[None, :] * h
    return kernel_func(X, Y, h)


def _log_kernel(X, Y, h):
    r = np.hypot(X, Y)
    with np.errstate(divide="ignore"):
        G = -np.log(r) / (2 * np.pi)
    # cell average of -log|y|/(2 pi) over the h x h self cell
    G[0, 0] = -(np.log(h) + _LOG_CELL_CONST) / (2 * np.pi)
    return G


def _unit_square_log_avg() -> float:
    # average of log|y| over the unit square [-1/2, 1/2]^2 (Gauss-Legendre)
    x, w = np.polynomial.legendre.leggauss(48)
    x = 0.5 * x
    w = 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return float(np.sum(W * np.log(np.hypot(X, Y))))


_LOG_CELL_CONST = _unit_square_log_avg()  # avg of log|y| over the unit cell


def _velocity_kernels(X, Y, h):
    r2 = X**2 + Y**2
    with np.errstate(divide="ignore", invalid="ignore"):
        kx = -Y / (2 * np.pi * r2)
        ky = X / (2 * np.pi * r2)
    kx[0, 0] = 0.0  # odd kernel: self-cell average vanishes
    ky[0, 0] = 0.0
    return np.stack([kx, ky])


def freespace_psi(grid: CartesianGrid, omega: np.ndarray) -> np.ndarray:
    """Free-space streamfunction psi = G * omega via zero-padded FFT."""
    n = grid.n
    G = _pad_kernel(grid, _log_kernel)
    src = np.zeros((2 * n, 2 * n))
    src[:n, :n] = omega
    out = np.fft.irfft2(np.fft.rfft2(G) * np.fft.rfft2(src), s=(2 * n, 2 * n))
    return out[:n, :n] * grid.h**2


def freespace_velocity(grid: CartesianGrid, omega: np.ndarray) -> np.ndarray:
    """Free-space Biot-Savart velocity on the grid, shape (n, n, 2)."""
    n = grid.n
    K = _pad_kernel(grid, _velocity_kernels)
    src = np.zeros((2 * n, 2 * n))
    src[:n, :n] = omega
    Fs = np.fft.rfft2(src)
    u = np.fft.irfft2(np.fft.rfft2(K[0]) * Fs, s=(2 * n, 2 * n))[:n, :n]
    v = np.fft.irfft2(np.fft.rfft2(K[1]) * Fs, s=(2 * n, 2 * n))[:n, :n]
    return np.stack([u, v], axis=-1) * grid.h**2


def biot_savart_at(grid: CartesianGrid, omega: np.ndarray, x: np.ndarray,
                   chunk: int = 256, mask_tol: float = 1e-14) -> np.ndarray:
    """Direct midpoint Biot-Savart sum from grid vorticity at points x.

    Cells with |omega| below mask_tol (relative to the maximum) are skipped;
    raising it trades a bounded circulation defect for speed."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    pts = grid.points().reshape(-1, 2)
    w = omega.reshape(-1) * grid.h**2
    keep = np.abs(w) > mask_tol * (np.abs(w).max() + 1e-300)
    pts, w = pts[keep], w[keep]
    out = np.zeros_like(flat)
    for i in range(0, len(flat), chunk):
        xi = flat[i:i + chunk]
        dx = xi[:, None, 0] - pts[None, :, 0]
        dy = xi[:, None, 1] - pts[None, :, 1]
        r2 = dx**2 + dy**2
        r2[r2 < 1e-30] = np.inf
        out[i:i + chunk, 0] = np.sum(-dy / r2 * w, axis=1) / (2 * np.pi)
        out[i:i + chunk, 1] = np.sum(dx / r2 * w, axis=1) / (2 * np.pi)
    return out.reshape(x.shape)


def greens_sum_at(grid: CartesianGrid, source: np.ndarray, x: np.ndarray,
                  chunk: int = 256, mask_tol: float = 1e-14) -> np.ndarray:
    """Direct midpoint sum of G * source at points x, G = -log|.| / (2 pi).

    The self cell (when x coincides with a grid node) uses the exact cell
    average of the log kernel.  Cells below mask_tol (relative) are skipped.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    pts = grid.points().reshape(-1, 2)
    w = source.reshape(-1) * grid.h**2
    keep = np.abs(w) > mask_tol * (np.abs(w).max() + 1e-300)
    pts, w = pts[keep], w[keep]
    h = grid.h
    self_val = -(np.log(h) + _LOG_CELL_CONST) / (2 * np.pi)
    out = np.zeros(len(flat))
    for i in range(0, len(flat), chunk):
        xi = flat[i:i + chunk]
        r = np.hypot(xi[:, None, 0] - pts[None, :, 0],
                     xi[:, None, 1] - pts[None, :, 1])
        with np.errstate(divide="ignore"):
            G = -np.log(r) / (2 * np.pi)
        G[r < 0.5 * h] = self_val
        out[i:i + chunk] = G @ w
    return out.reshape(x.shape[:-1])


def stream_function(u: Field, div_tol: float = 1e-2) -> Field:
    """Streamfunction of a decaying divergence-free field on the full plane,
    normalized so psi(0) = 0."""
    if not isinstance(u.grid, CartesianGrid):
        raise ValueError("stream_function expects a Cartesian full-plane field")
    div = divergence(u)
    scale = max(sup_norm(u), 1e-30)
    if sup_norm(div) > div_tol * scale / u.grid.h:
        raise ValueError("input field is not divergence-free to tolerance")
    h = u.grid.h
    omega = (np.gradient(u.values[..., 1], h, axis=0)
             - np.gradient(u.values[..., 0], h, axis=1))
    psi = freespace_psi(u.grid, omega)
    out = Field(u.grid, psi, shape=u.shape, eps=u.eps)
    out = Field(u.grid, psi - out(np.zeros(2)), shape=u.shape, eps=u.eps)
    return out
