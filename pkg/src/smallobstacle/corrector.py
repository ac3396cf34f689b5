"""Cutoff near the obstacle and the corrector velocity built from it.

The corrector replaces the reference velocity u = (d_2 psi, -d_1 psi) by
u_eps = phi_eps * u + psi * perp-grad(phi_eps), which vanishes near the
obstacle and agrees with u outside radius (R+2)*eps.  This module also
measures the five corrector estimates (constants K1..K5, plus K0 and the
normalized K4) on a given flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rates import fit_rate


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _smoothstep_d1(t: np.ndarray) -> np.ndarray:
    out = 30.0 * t**2 * (1.0 - t) ** 2
    return np.where((t > 0) & (t < 1), out, 0.0)


def _smoothstep_d2(t: np.ndarray) -> np.ndarray:
    out = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return np.where((t > 0) & (t < 1), out, 0.0)


# analytic bounds for the quintic smoothstep transition profile
SMOOTHSTEP_D1_MAX = 15.0 / 8.0
SMOOTHSTEP_D2_MAX = 10.0 / np.sqrt(3.0)


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff: 0 on [0, R+1], quintic-smooth rise, 1 on [R+2, inf)."""

    R: float

    def phi(self, r: np.ndarray) -> np.ndarray:
        return _smoothstep(np.asarray(r, dtype=float) - (self.R + 1.0))

    def dphi(self, r: np.ndarray) -> np.ndarray:
        return _smoothstep_d1(np.asarray(r, dtype=float) - (self.R + 1.0))

    def d2phi(self, r: np.ndarray) -> np.ndarray:
        return _smoothstep_d2(np.asarray(r, dtype=float) - (self.R + 1.0))

    @property
    def sup_dphi(self) -> float:
        return SMOOTHSTEP_D1_MAX

    @property
    def sup_d2phi(self) -> float:
        return SMOOTHSTEP_D2_MAX


def cutoff_value(c: Cutoff, eps: float, x: np.ndarray):
    """(phi_eps, grad phi_eps, hessian phi_eps) at points x of shape (..., 2).

    phi_eps(x) = phi(|x|/eps); the gradient scales like 1/eps and the
    Hessian like 1/eps^2, both supported in (R+1)eps < |x| < (R+2)eps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    t = r / eps
    val = c.phi(t)
    d1 = c.dphi(t) / eps
    d2 = c.d2phi(t) / eps**2
    rs = np.where(r > 0, r, 1.0)
    nx = x[..., 0] / rs
    ny = x[..., 1] / rs
    grad = np.stack([d1 * nx, d1 * ny], axis=-1)
    hess = np.empty(x.shape[:-1] + (2, 2))
    tang = np.where(r > 0, d1 / rs, 0.0)  # phi'(r)/r term, zero at origin
    hess[..., 0, 0] = d2 * nx * nx + tang * ny * ny
    hess[..., 0, 1] = (d2 - tang) * nx * ny
    hess[..., 1, 0] = hess[..., 0, 1]
    hess[..., 1, 1] = d2 * ny * ny + tang * nx * nx
    return val, grad, hess


@dataclass
class FlowSample:
    """A smooth reference flow at one instant: velocity, streamfunction,
    pressure (optional), velocity gradient (optional, else finite
    differences) and streamfunction time derivative (optional, default 0).

    Callables take points of shape (N, 2).
    """

    u: Callable
    psi: Callable
    p: Callable | None = None
    grad_u: Callable | None = None
    dpsi_dt: Callable | None = None
    fd_step: float = 1e-5

    _psi0: float = field(default=0.0, init=False)
    _p0: float = field(default=0.0, init=False)
    _dpsi0: float = field(default=0.0, init=False)

    def __post_init__(self):
        origin = np.zeros((1, 2))
        self._psi0 = float(np.asarray(self.psi(origin)).reshape(-1)[0])
        if self.p is not None:
            self._p0 = float(np.asarray(self.p(origin)).reshape(-1)[0])
        if self.dpsi_dt is not None:
            self._dpsi0 = float(np.asarray(self.dpsi_dt(origin)).reshape(-1)[0])

    def psi_pinned(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.psi(x)) - self._psi0

    def p_pinned(self, x: np.ndarray) -> np.ndarray:
        if self.p is None:
            return np.zeros(np.asarray(x).shape[:-1])
        return np.asarray(self.p(x)) - self._p0

    def dpsi_pinned(self, x: np.ndarray) -> np.ndarray:
        if self.dpsi_dt is None:
            return np.zeros(np.asarray(x).shape[:-1])
        return np.asarray(self.dpsi_dt(x)) - self._dpsi0

    def grad_u_at(self, x: np.ndarray) -> np.ndarray:
        if self.grad_u is not None:
            return np.asarray(self.grad_u(x))
        x = np.asarray(x, dtype=float)
        h = self.fd_step
        out = np.empty(x.shape[:-1] + (2, 2))
        for j in range(2):
            dx = np.zeros(2)
            dx[j] = h
            d = (np.asarray(self.u(x + dx)) - np.asarray(self.u(x - dx))) / (2 * h)
            out[..., :, j] = d
        return out

    def speed_at_origin(self) -> float:
        return float(np.linalg.norm(np.asarray(self.u(np.zeros((1, 2))))[0]))


def _perp_grad_phi(grad: np.ndarray) -> np.ndarray:
    # perp-grad f = (d2 f, -d1 f), matching u = perp-grad psi
    return np.stack([grad[..., 1], -grad[..., 0]], axis=-1)


def corrector_velocity(c: Cutoff, flow: FlowSample, eps: float,
                       psi_tol: float = 1e-8) -> Callable:
    """u_eps = phi_eps u + psi perp-grad(phi_eps), as a point evaluator.

    Requires the streamfunction normalization psi(0) = 0.
    """
    if abs(flow._psi0) > psi_tol * (1.0 + abs(flow._psi0)):
        # psi_pinned repins internally, but an unpinned input signals misuse
        raise ValueError("streamfunction not normalized at the origin")

    def u_eps(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        val, grad, _ = cutoff_value(c, eps, x)
        return (val[..., None] * np.asarray(flow.u(x))
                + flow.psi_pinned(x)[..., None] * _perp_grad_phi(grad))

    return u_eps


def corrector_gradient(c: Cutoff, flow: FlowSample, eps: float, x: np.ndarray) -> np.ndarray:
    """Full gradient d_j u_eps_i, shape (..., 2, 2), from the product rule.

    Uses grad psi = (u2-perp): d1 psi = -u2, d2 psi = u1.
    """
    x = np.asarray(x, dtype=float)
    val, gphi, hphi = cutoff_value(c, eps, x)
    u = np.asarray(flow.u(x))
    gu = flow.grad_u_at(x)
    psi = flow.psi_pinned(x)
    gpsi = np.stack([-u[..., 1], u[..., 0]], axis=-1)
    pgphi = _perp_grad_phi(gphi)
    # d_j of perp-grad phi: rows from the Hessian
    dpg = np.stack([hphi[..., 1, :], -hphi[..., 0, :]], axis=-2)  # (...,2(i),2(j))
    out = (u[..., :, None] * gphi[..., None, :]
           + val[..., None, None] * gu
           + pgphi[..., :, None] * gpsi[..., None, :]
           + psi[..., None, None] * dpg)
    return out


@dataclass
class CorrectorConstants:
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    K0: float
    K4_tilde: float | None
    K5_tilde: float
    items: dict
    slopes: dict


def _annulus_quad(eps: float, R: float, n_r: int = 48, n_t: int = 128):
    """Midpoint polar quadrature on the transition annulus (R+1)eps..(R+2)eps."""
    r_lo, r_hi = (R + 1.0) * eps, (R + 2.0) * eps
    r = np.linspace(r_lo, r_hi, n_r + 1)
    rm = 0.5 * (r[:-1] + r[1:])
    dr = np.diff(r)
    th = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    RR, TT = np.meshgrid(rm, th, indexing="ij")
    pts = np.stack([RR * np.cos(TT), RR * np.sin(TT)], axis=-1).reshape(-1, 2)
    w = (rm * dr)[:, None] * np.full(n_t, 2 * np.pi / n_t)
    return pts, w.reshape(-1), rm

def _disk_quad(radius: float, n_r: int = 48, n_t: int = 96):
    r = np.linspace(0.0, radius, n_r + 1)
    rm = 0.5 * (r[:-1] + r[1:])
    dr = np.diff(r)
    th = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    RR, TT = np.meshgrid(rm, th, indexing="ij")
    pts = np.stack([RR * np.cos(TT), RR * np.sin(TT)], axis=-1).reshape(-1, 2)
    w = (rm * dr)[:, None] * np.full(n_t, 2 * np.pi / n_t)
    return pts, w.reshape(-1)


def _exterior_gradu_sq(flow: FlowSample, r_in: float, r_max: float,
                       m_far: float, n_r: int = 160, n_t: int = 96) -> float:
    """Integral of |grad u|^2 over r_in < |x| < infinity, log-polar quadrature
    plus the exact point-vortex tail m^2/(2 pi r_max^2)."""
    s = np.linspace(np.log(r_in), np.log(r_max), n_r + 1)
    sm = 0.5 * (s[:-1] + s[1:])
    rm = np.exp(sm)
    dsm = np.diff(s)
    th = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    RR, TT = np.meshgrid(rm, th, indexing="ij")
    pts = np.stack([RR * np.cos(TT), RR * np.sin(TT)], axis=-1).reshape(-1, 2)
    gu = flow.grad_u_at(pts)
    integrand = np.sum(gu**2, axis=(-2, -1)).reshape(n_r, n_t)
    w = (rm**2 * dsm)[:, None] * np.full(n_t, 2 * np.pi / n_t)
    val = float(np.sum(w * integrand))
    return val + m_far**2 / (2 * np.pi * r_max**2)


def measure_lemma_constants(flows, cutoff: Cutoff, eps_list,
                            r_max: float = 12.0, far_circulation: float = 0.0,
                            eps0: float | None = None) -> CorrectorConstants:
    """Measure the five corrector estimates over a list of eps values.

    flows: one FlowSample or a list (sampled times); the sup over the list
    is taken, approximating the time supremum.  Returns per-item values,
    fitted log-log slopes and the derived constants.
    """
    if isinstance(flows, FlowSample):
        flows = [flows]
    eps_list = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if len(eps_list) < 3:
        raise ValueError("need at least 3 eps values")
    if eps0 is not None and np.any(eps_list >= eps0):
        raise ValueError("eps values must lie below eps0")

    R = cutoff.R
    items = {k: np.zeros(len(eps_list)) for k in
             ("item1", "item2", "item3", "item4", "item5")}
    K0 = 0.0
    sup_gu = 0.0
    for flow in flows:
        # global bounds, approximated on a wide sample grid
        samp_pts, _, _ = _annulus_quad(1.0, r_max / (R + 2.0) - 1.0, 96, 96)
        gu_g = flow.grad_u_at(samp_pts)
        sup_gu = max(sup_gu, float(np.max(np.sqrt(np.sum(gu_g**2, axis=(-2, -1))))))
        K0 = max(K0, sup_gu)
        u_far = np.asarray(flow.u(samp_pts))
        sup_u = float(np.max(np.hypot(u_far[:, 0], u_far[:, 1])))

        for k, eps in enumerate(eps_list):
            pts, w, _ = _annulus_quad(eps, R)
            val, gphi, hphi = cutoff_value(cutoff, eps, pts)
            u = np.asarray(flow.u(pts))
            psi = flow.psi_pinned(pts)
            p = flow.p_pinned(pts)
            dpsi = flow.dpsi_pinned(pts)
            pgphi = _perp_grad_phi(gphi)
            ueps = val[:, None] * u + psi[:, None] * pgphi

            # item 1: ||grad u_eps||^2 = annulus part + |grad u|^2 outside
            gue = corrector_gradient(cutoff, flow, eps, pts)
            ann1 = float(np.sum(w * np.sum(gue**2, axis=(-2, -1))))
            out1 = _exterior_gradu_sq(flow, (R + 2.0) * eps, r_max, far_circulation)
            items["item1"][k] = max(items["item1"][k], ann1 + out1)

            # item 2: sup |u_eps|
            items["item2"][k] = max(items["item2"][k], sup_u,
                                    float(np.max(np.hypot(ueps[:, 0], ueps[:, 1]))))

            # item 3: ||u_eps - u|| + ||u_eps - phi u||
            dpts, dw = _disk_quad((R + 1.0) * eps)
            u_in = np.asarray(flow.u(dpts))
            inner3 = float(np.sum(dw * np.sum(u_in**2, axis=-1)))
            ann3 = float(np.sum(w * np.sum((ueps - u) ** 2, axis=-1)))
            n_diff = np.sqrt(inner3 + ann3)
            n_phi = np.sqrt(float(np.sum(w * psi**2 * np.sum(pgphi**2, axis=-1))))
            items["item3"][k] = max(items["item3"][k], n_diff + n_phi)

            # item 4: componentwise sup sums (grad psi = (-u2, u1))
            gpsi = np.stack([-u[:, 1], u[:, 0]], axis=-1)
            t1 = sum(float(np.max(np.abs(gpsi[:, i] * gphi[:, j])))
                     for i in range(2) for j in range(2))
            t2 = sum(float(np.max(np.abs(psi * hphi[:, i, j])))
                     for i in range(2) for j in range(2))
            items["item4"][k] = max(items["item4"][k], t1 + t2)

            # item 5: ||p grad phi|| + ||dpsi_dt grad phi||
            gp2 = np.sum(gphi**2, axis=-1)
            n_p = np.sqrt(float(np.sum(w * p**2 * gp2)))
            n_dp = np.sqrt(float(np.sum(w * dpsi**2 * gp2)))
            items["item5"][k] = max(items["item5"][k], n_p + n_dp)

    slopes = {}
    for name, vals in items.items():
        if np.all(vals > 0):
            slopes[name] = fit_rate(list(zip(eps_list, vals))).slope
        else:
            slopes[name] = float("nan")

    K1 = float(np.max(items["item1"]))
    K2 = float(np.max(items["item2"]))
    K3 = float(np.max(items["item3"] / eps_list))
    K4 = float(np.max(items["item4"] * eps_list))
    K5 = float(np.max(items["item5"] / eps_list))
    u0_sup = max(flow.speed_at_origin() for flow in flows)
    K4t = K4 / u0_sup if u0_sup > 1e-12 else None
    K5t = K5 + K3 * sup_gu
    return CorrectorConstants(K1=K1, K2=K2, K3=K3, K4=K4, K5=K5, K0=K0,
                              K4_tilde=K4t, K5_tilde=K5t,
                              items={k: v.tolist() for k, v in items.items()}
                              | {"eps": eps_list.tolist()},
                              slopes=slopes)


def measure_k4(flows, cutoff: Cutoff, eps_list, n_r: int = 32,
               n_t: int = 64) -> tuple:
    """K4 (and normalized K4) alone: sup of |grad psi| |grad phi| and
    |psi| |hess phi| component sums over the transition annulus, maximized
    over eps and the supplied flow samples.  Needs only velocity and
    streamfunction evaluations, so it stays cheap on kernel-sum flows.
    """
    if isinstance(flows, FlowSample):
        flows = [flows]
    eps_list = np.asarray(eps_list, dtype=float)
    k4 = 0.0
    u0_sup = 0.0
    for flow in flows:
        u0_sup = max(u0_sup, flow.speed_at_origin())
        for eps in eps_list:
            pts, _, _ = _annulus_quad(eps, cutoff.R, n_r, n_t)
            _, gphi, hphi = cutoff_value(cutoff, eps, pts)
            u = np.asarray(flow.u(pts))
            psi = flow.psi_pinned(pts)
            gpsi = np.stack([-u[:, 1], u[:, 0]], axis=-1)
            t1 = sum(float(np.max(np.abs(gpsi[:, i] * gphi[:, j])))
                     for i in range(2) for j in range(2))
            t2 = sum(float(np.max(np.abs(psi * hphi[:, i, j])))
                     for i in range(2) for j in range(2))
            k4 = max(k4, eps * (t1 + t2))
    k4t = k4 / u0_sup if u0_sup > 1e-12 else None
    return k4, k4t


def k4_tilde(constants: CorrectorConstants):
    """Normalized K4; None when the flow is degenerate at the origin."""
    return constants.K4_tilde
