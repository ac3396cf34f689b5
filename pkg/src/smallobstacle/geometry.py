"""Obstacle shapes and the conformal map onto the exterior of the unit disk.

The map T sends the exterior of the obstacle onto {|w| > 1}, fixes infinity
and has positive derivative there, so T(z) = beta*z + h(z) with h bounded.
Two shapes are supported: the unit disk (T is the identity) and an ellipse
with semi-axes a >= b > 0, for which T inverts the Joukowski map
z = ((a+b)/2) w + ((a-b)/2) / w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Evaluation requested at a point not strictly exterior to the obstacle."""


@dataclass(frozen=True)
class ObstacleShape:
    """Obstacle geometry: 'disk' (unit disk) or 'ellipse' with a >= b > 0.

    bounding_radius is the smallest stated R with the obstacle inside B_R.
    """

    kind: str
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise ValueError(f"unknown obstacle kind {self.kind!r}")
        if self.kind == "disk":
            object.__setattr__(self, "a", 1.0)
            object.__setattr__(self, "b", 1.0)
        if not (self.a >= self.b > 0):
            raise ValueError("ellipse needs semi-axes a >= b > 0")

    @property
    def bounding_radius(self) -> float:
        return float(self.a)

    def boundary_points(self, n: int) -> np.ndarray:
        """n points on the obstacle boundary, shape (n, 2), counterclockwise."""
        th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return np.stack([self.a * np.cos(th), self.b * np.sin(th)], axis=-1)

    def contains(self, x: np.ndarray) -> np.ndarray:
        """True for points inside or on the closed obstacle."""
        x = np.asarray(x, dtype=float)
        return (x[..., 0] / self.a) ** 2 + (x[..., 1] / self.b) ** 2 <= 1.0


def _as_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1]


def _as_points(z: np.ndarray) -> np.ndarray:
    return np.stack([z.real, z.imag], axis=-1)


class ConformalMap:
    """Conformal map T from the obstacle exterior onto {|w| > 1}.

    Exposes T, its 2x2 real Jacobian DT, the dilation beta at infinity and
    the bounded remainder h(z) = T(z) - beta*z.
    """

    def __init__(self, shape: ObstacleShape):
        self.shape = shape
        if shape.kind == "disk":
            self.beta = 1.0
        else:
            self.beta = 2.0 / (shape.a + shape.b)
        # focal distance of the ellipse (0 for the disk)
        self._c2 = shape.a**2 - shape.b**2

    # -- complex-variable core -------------------------------------------

    def map_complex(self, z: np.ndarray) -> np.ndarray:
        """T as a complex function; z strictly exterior to the obstacle."""
        z = np.asarray(z, dtype=complex)
        if self.shape.kind == "disk":
            return z
        # branch sqrt(z^2 - c^2) = z*sqrt(1 - (c/z)^2) is analytic on the
        # ellipse exterior (the cut [-c, c] lies inside) and ~ z at infinity
        root = z * np.sqrt(1.0 - self._c2 / z**2)
        return (z + root) / (self.shape.a + self.shape.b)

    def dmap_complex(self, z: np.ndarray) -> np.ndarray:
        """Complex derivative T'(z)."""
        z = np.asarray(z, dtype=complex)
        if self.shape.kind == "disk":
            return np.ones_like(z)
        root = z * np.sqrt(1.0 - self._c2 / z**2)
        return (1.0 + z / root) / (self.shape.a + self.shape.b)

    def inverse_complex(self, w: np.ndarray) -> np.ndarray:
        """Inverse map, from {|w| >= 1} back to the obstacle exterior."""
        w = np.asarray(w, dtype=complex)
        if self.shape.kind == "disk":
            return w
        a, b = self.shape.a, self.shape.b
        return 0.5 * (a + b) * w + 0.5 * (a - b) / w

    # -- point interface ---------------------------------------------------

    def _check_exterior(self, x: np.ndarray):
        if np.any(self.shape.contains(x)):
            raise DomainError("point inside or on the obstacle boundary")

    def map_point(self, x: np.ndarray, check: bool = True) -> np.ndarray:
        """T(x) for x (..., 2) strictly exterior."""
        x = np.asarray(x, dtype=float)
        if check:
            self._check_exterior(x)
        return _as_points(self.map_complex(_as_complex(x)))

    def map_jacobian(self, x: np.ndarray, check: bool = True) -> np.ndarray:
        """DT(x) as (..., 2, 2); conformal, so [[re, -im], [im, re]] of T'."""
        x = np.asarray(x, dtype=float)
        if check:
            self._check_exterior(x)
        d = self.dmap_complex(_as_complex(x))
        re, im = d.real, d.imag
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = re
        out[..., 0, 1] = -im
        out[..., 1, 0] = im
        out[..., 1, 1] = re
        return out

    def h(self, x: np.ndarray) -> np.ndarray:
        """Bounded remainder h(x) = T(x) - beta*x, shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        z = _as_complex(x)
        return _as_points(self.map_complex(z) - self.beta * z)

    def asymptotic_params(self):
        """(beta, h-evaluator)."""
        return self.beta, self.h

    def estimate_beta(self, radii=(1e2, 1e3, 1e4)) -> float:
        """Far-field estimate of beta from |T(r,0)|/r; cross-checks closed form."""
        est = [abs(self.map_complex(complex(r, 0.0))) / r for r in radii]
        return float(est[-1])
