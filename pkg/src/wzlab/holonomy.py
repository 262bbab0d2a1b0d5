"""Noisy-loop holonomy: exact path-ordered integration and first-order theory.

The field traces a three-segment curve in (Theta, Phi): a unit-parameter
lead-in at Phi = 0 from the base point (Theta_0, 0) up to the fluctuating
start, the noisy circle Theta(t) = Theta_0 + eps*theta(t) with Phi = t over
[0, 2 pi), and a lead-out back to the base point at Phi = 2 pi.

The reference integrator drives the full, non-expanded equator-gauge
connection along the curve,

    dU/dt = i (a(t).sigma) U,
    a(t) = (-sin Theta(t), eps * dtheta/dt, cos(Theta(t))/2),

with a classical fixed-step 4th-order scheme in quaternion coordinates and
per-step renormalization to SU(2).  The closing segments have constant
generator +-eps*theta(0)*sigma_2 and are applied as exact exponentials.
The full-loop north-gauge holonomy is then

    U_N = e^{-i Phi(2pi) sigma_3 / 2} U_E(full)  =  - U_E(full),

the noise correction is U_eps = U_0^dagger U_N, and the displacement vector
is Lambda = log(U_eps) / eps.

The perturbative side assembles the first-order Lambda from closed
per-mode components and provides the order-1/order-2 exponent (Dyson
series resummed into a single exponential) for convergence studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import noise as noise_mod
from .errors import ChartError, DegenerateLogError, DomainError, IntegrationError
from .su2 import (
    AlgebraVector,
    GroupElement2,
    exp_map,
    frame_rotation,
    omega_freq,
)

CHART_MARGIN = 1e-6

_SQRT2PI = math.sqrt(2.0 * math.pi)


def omega(theta0):
    """Drive frequency Omega = sqrt(1 + 3 sin^2 Theta_0)."""
    if np.any(np.asarray(theta0) < 0.0) or np.any(np.asarray(theta0) > math.pi):
        raise DomainError("theta0 must lie in [0, pi]")
    return omega_freq(theta0)


def u0(theta0) -> GroupElement2:
    """Unperturbed full-loop holonomy of the constant-Theta_0 circle.

    U_0 = e^{-i pi} exp(2 i pi (-sin Theta_0 sigma_1 + cos Theta_0 sigma_3 / 2)).
    """
    a0 = np.array([-math.sin(theta0), 0.0, 0.5 * math.cos(theta0)])
    return -exp_map(2.0 * math.pi * a0)


def m_hat(theta0) -> AlgebraVector:
    """Unit vector of the sigma_2 axis conjugated through the full drive rotation."""
    om = float(omega_freq(theta0))
    s, c = math.sin(2.0 * math.pi * om), math.cos(2.0 * math.pi * om)
    return AlgebraVector(
        np.array([-math.cos(theta0) * s / om, c, -2.0 * math.sin(theta0) * s / om])
    )


def m_prime(theta0) -> AlgebraVector:
    """m' = m_hat - e_2; the base-point mismatch vector in the first-order Lambda."""
    return m_hat(theta0) - AlgebraVector(np.array([0.0, 1.0, 0.0]))


@dataclass(frozen=True)
class NoisyCurve:
    """Three-segment noisy field path at fixed Theta_0 and amplitude eps."""

    theta0: float
    eps: float
    realization: noise_mod.NoiseRealization

    T_START = -1.0
    T_END = 2.0 * math.pi + 1.0

    def __post_init__(self):
        if not 0.0 <= self.theta0 <= math.pi:
            raise DomainError("theta0 must lie in [0, pi]")
        if self.eps < 0.0:
            raise DomainError("eps must be >= 0")

    def _segments(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.T_START - 1e-12) or np.any(t > self.T_END + 1e-12):
            raise DomainError("curve parameter outside [-1, 2 pi + 1]")
        return t

    def theta(self, t):
        t = self._segments(t)
        th0 = self.realization.theta(0.0)
        mid = self.realization.theta(np.clip(t, 0.0, 2.0 * math.pi))
        lead_in = th0 * (t + 1.0)
        lead_out = th0 * (1.0 - (t - 2.0 * math.pi))
        dev = np.where(t < 0.0, lead_in, np.where(t < 2.0 * math.pi, mid, lead_out))
        out = self.theta0 + self.eps * dev
        return float(out) if out.ndim == 0 else out

    def phi(self, t):
        t = self._segments(t)
        out = np.clip(t, 0.0, 2.0 * math.pi)
        return float(out) if out.ndim == 0 else out

    def theta_deriv(self, t):
        t = self._segments(t)
        th0 = self.realization.theta(0.0)
        mid = self.realization.theta_dot(np.clip(t, 0.0, 2.0 * math.pi))
        dev = np.where(t < 0.0, th0, np.where(t < 2.0 * math.pi, mid, -th0))
        out = self.eps * dev
        return float(out) if out.ndim == 0 else out

    def phi_deriv(self, t):
        t = self._segments(t)
        out = np.where((t >= 0.0) & (t < 2.0 * math.pi), 1.0, 0.0)
        return float(out) if out.ndim == 0 else out

    def validate_chart(self, margin=CHART_MARGIN):
        """Reject curves that can leave the polar strip [margin, pi - margin].

        Uses the rigorous sup bound on |theta|, so acceptance here is a
        guarantee, not a sampling statement.
        """
        reach = self.eps * self.realization.sup_bound
        if self.theta0 - reach < margin or self.theta0 + reach > math.pi - margin:
            raise ChartError(
                f"curve at theta0 = {self.theta0} with eps = {self.eps} may leave "
                f"the chart strip [{margin}, pi - {margin}]"
            )


@dataclass(frozen=True)
class HolonomyResult:
    """Full-loop holonomy and its noise decomposition."""

    u_n: GroupElement2
    u_eps: GroupElement2
    lam: AlgebraVector
    theta0: float
    eps: float
    steps: int
    drift: float = field(default=0.0)

    @property
    def displacement(self):
        """Bi-invariant angle eps*|Lambda| between U_N and U_0 (by construction)."""
        return self.eps * self.lam.norm


# -- batched quaternion RK4 ---------------------------------------------------


def _stack_noise_grids(realizations, ts):
    """theta and dtheta/dt of a realization batch at times ts, shape (T, B).

    Evaluates all realizations through one mode-matrix product over the
    union of their mode indices.
    """
    b = len(realizations)
    all_modes = sorted({int(m) for r in realizations for m in r.mode_indices})
    theta0s = np.array([r.theta0 for r in realizations])
    if not all_modes:
        ones = np.ones((len(ts), 1))
        return ones * (theta0s / _SQRT2PI), np.zeros((len(ts), b))
    m = np.array(all_modes, dtype=float)
    col = {mm: j for j, mm in enumerate(all_modes)}
    re = np.zeros((b, len(all_modes)))
    im = np.zeros((b, len(all_modes)))
    for i, r in enumerate(realizations):
        for mm, c in zip(r.mode_indices, r.mode_coeffs):
            re[i, col[int(mm)]] = c.real
            im[i, col[int(mm)]] = c.imag
    arg = np.multiply.outer(ts, m)  # (T, M)
    cos_a, sin_a = np.cos(arg), np.sin(arg)
    thetas = (theta0s[None, :] + 2.0 * (cos_a @ re.T - sin_a @ im.T)) / _SQRT2PI
    dthetas = -2.0 * (sin_a @ (re * m).T + cos_a @ (im * m).T) / _SQRT2PI
    return thetas, dthetas


def _rk4_su2(a_of_t, t0, t1, steps):
    """Path-ordered exp of dU/dt = i a(t).sigma U for a batch of generators.

    a_of_t(t) -> (B, 3).  Returns (x0 (B,), x (B, 3), accumulated drift per
    element) in quaternion coordinates, renormalized each step.
    """
    h = (t1 - t0) / steps
    probe = np.asarray(a_of_t(t0), dtype=float)
    if probe.ndim != 2 or probe.shape[1] != 3:
        raise DomainError("generator callback must return (B, 3) arrays")
    b = probe.shape[0]
    x0 = np.ones(b)
    x = np.zeros((b, 3))
    drift = np.zeros(b)

    def rhs(a, y0, y):
        # d/dt (x0 + i x.sigma) = i a.sigma (x0 + i x.sigma)
        dy0 = -np.einsum("bi,bi->b", a, y)
        dy = y0[:, None] * a - np.cross(a, y)
        return dy0, dy

    for n in range(steps):
        t = t0 + n * h
        a1 = probe if n == 0 else np.asarray(a_of_t(t), dtype=float)
        a2 = np.asarray(a_of_t(t + 0.5 * h), dtype=float)
        a4 = np.asarray(a_of_t(t + h), dtype=float)

        k1_0, k1 = rhs(a1, x0, x)
        k2_0, k2 = rhs(a2, x0 + 0.5 * h * k1_0, x + 0.5 * h * k1)
        k3_0, k3 = rhs(a2, x0 + 0.5 * h * k2_0, x + 0.5 * h * k2)
        k4_0, k4 = rhs(a4, x0 + h * k3_0, x + h * k3)

        x0 = x0 + h / 6.0 * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        n2 = x0 * x0 + np.einsum("bi,bi->b", x, x)
        drift += np.abs(n2 - 1.0)
        s = 1.0 / np.sqrt(n2)
        x0 = x0 * s
        x = x * s[:, None]
    return x0, x, drift


try:  # the Monte Carlo kernel is compiled when numba is available
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def _njit(**_kwargs):
        def wrap(fn):
            return fn

        return wrap


@_njit(cache=True)
def _rk4_grid_kernel(gx, gy, gz, h, q, drift):  # pragma: no cover - compiled
    steps = (gx.shape[0] - 1) // 2
    b = gx.shape[1]
    for n in range(steps):
        lo = 2 * n
        for i in range(b):
            q0, q1, q2, q3 = q[i, 0], q[i, 1], q[i, 2], q[i, 3]
            a0, a1, a2 = gx[lo, i], gy[lo, i], gz[lo, i]
            b0, b1, b2 = gx[lo + 1, i], gy[lo + 1, i], gz[lo + 1, i]
            c0, c1, c2 = gx[lo + 2, i], gy[lo + 2, i], gz[lo + 2, i]

            k1_0 = -(a0 * q1 + a1 * q2 + a2 * q3)
            k1_1 = q0 * a0 - (a1 * q3 - a2 * q2)
            k1_2 = q0 * a1 - (a2 * q1 - a0 * q3)
            k1_3 = q0 * a2 - (a0 * q2 - a1 * q1)

            y0 = q0 + 0.5 * h * k1_0
            y1 = q1 + 0.5 * h * k1_1
            y2 = q2 + 0.5 * h * k1_2
            y3 = q3 + 0.5 * h * k1_3
            k2_0 = -(b0 * y1 + b1 * y2 + b2 * y3)
            k2_1 = y0 * b0 - (b1 * y3 - b2 * y2)
            k2_2 = y0 * b1 - (b2 * y1 - b0 * y3)
            k2_3 = y0 * b2 - (b0 * y2 - b1 * y1)

            y0 = q0 + 0.5 * h * k2_0
            y1 = q1 + 0.5 * h * k2_1
            y2 = q2 + 0.5 * h * k2_2
            y3 = q3 + 0.5 * h * k2_3
            k3_0 = -(b0 * y1 + b1 * y2 + b2 * y3)
            k3_1 = y0 * b0 - (b1 * y3 - b2 * y2)
            k3_2 = y0 * b1 - (b2 * y1 - b0 * y3)
            k3_3 = y0 * b2 - (b0 * y2 - b1 * y1)

            y0 = q0 + h * k3_0
            y1 = q1 + h * k3_1
            y2 = q2 + h * k3_2
            y3 = q3 + h * k3_3
            k4_0 = -(c0 * y1 + c1 * y2 + c2 * y3)
            k4_1 = y0 * c0 - (c1 * y3 - c2 * y2)
            k4_2 = y0 * c1 - (c2 * y1 - c0 * y3)
            k4_3 = y0 * c2 - (c0 * y2 - c1 * y1)

            w = h / 6.0
            q0 = q0 + w * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
            q1 = q1 + w * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
            q2 = q2 + w * (k1_2 + 2.0 * k2_2 + 2.0 * k3_2 + k4_2)
            q3 = q3 + w * (k1_3 + 2.0 * k2_3 + 2.0 * k3_3 + k4_3)

            n2 = q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3
            drift[i] += abs(n2 - 1.0)
            s = 1.0 / math.sqrt(n2)
            q[i, 0] = q0 * s
            q[i, 1] = q1 * s
            q[i, 2] = q2 * s
            q[i, 3] = q3 * s


def _rk4_su2_grid(gx, gy, gz, h):
    """RK4 on precomputed half-grid generator components, each (2S+1, B).

    Hot path of the Monte Carlo runs: compiled elementwise when numba is
    installed, otherwise vectorized numpy with the quaternion state in one
    (B, 4) array and cross products written out by component.
    """
    b = gx.shape[1]
    q = np.zeros((b, 4))
    q[:, 0] = 1.0
    drift = np.zeros(b)
    if _HAVE_NUMBA:
        _rk4_grid_kernel(gx, gy, gz, float(h), q, drift)
        return q[:, 0].copy(), q[:, 1:].copy(), drift

    scratch = np.empty_like(q)

    def rhs(a0, a1, a2, y, out):
        y0 = y[:, 0]
        y1 = y[:, 1]
        y2 = y[:, 2]
        y3 = y[:, 3]
        out[:, 0] = -(a0 * y1 + a1 * y2 + a2 * y3)
        out[:, 1] = y0 * a0 - (a1 * y3 - a2 * y2)
        out[:, 2] = y0 * a1 - (a2 * y1 - a0 * y3)
        out[:, 3] = y0 * a2 - (a0 * y2 - a1 * y1)
        return out

    steps = (gx.shape[0] - 1) // 2
    k1 = np.empty_like(q)
    k2 = np.empty_like(q)
    k3 = np.empty_like(q)
    k4 = np.empty_like(q)
    for n in range(steps):
        lo = 2 * n
        rhs(gx[lo], gy[lo], gz[lo], q, k1)
        np.multiply(k1, 0.5 * h, out=scratch)
        scratch += q
        rhs(gx[lo + 1], gy[lo + 1], gz[lo + 1], scratch, k2)
        np.multiply(k2, 0.5 * h, out=scratch)
        scratch += q
        rhs(gx[lo + 1], gy[lo + 1], gz[lo + 1], scratch, k3)
        np.multiply(k3, h, out=scratch)
        scratch += q
        rhs(gx[lo + 2], gy[lo + 2], gz[lo + 2], scratch, k4)
        k2 += k3
        k2 *= 2.0
        k1 += k4
        k1 += k2
        k1 *= h / 6.0
        q += k1
        n2 = np.einsum("bi,bi->b", q, q)
        drift += np.abs(n2 - 1.0)
        q /= np.sqrt(n2)[:, None]
    return q[:, 0].copy(), q[:, 1:].copy(), drift


def path_ordered_exponential(a_of_t, t0, t1, steps) -> GroupElement2:
    """Single-path convenience wrapper around the batched integrator."""

    def batch(t):
        return np.asarray(a_of_t(t), dtype=float).reshape(1, 3)

    x0, x, drift = _rk4_su2(batch, t0, t1, steps)
    if drift[0] > 1e-9:
        raise IntegrationError(f"unitarity drift {drift[0]:.2e} exceeds 1e-9")
    return GroupElement2(float(x0[0]), x[0])


def _quat_mul_batch(a0, a, b0, b):
    c0 = a0 * b0 - np.einsum("bi,bi->b", a, b)
    c = a0[:, None] * b + b0[:, None] * a - np.cross(a, b)
    return c0, c


def _sigma2_exp_batch(beta):
    """exp(i beta sigma_2) per batch element, as quaternions."""
    return np.cos(beta), np.stack(
        [np.zeros_like(beta), np.sin(beta), np.zeros_like(beta)], axis=1
    )


def integrate_holonomy_batch(
    theta0,
    eps,
    realizations,
    steps=20000,
    check_chart=True,
    drift_tol=1e-9,
):
    """Exact holonomies of a batch of noisy curves sharing the step count.

    theta0 and eps may be scalars or per-curve arrays.  Returns
    (u_n_quat (B, 4), lam (B, 3), drift (B,)) with lam = log(U_eps)/eps in
    the base frame (zeros where eps = 0).  Branch-point logs (U_eps = -1)
    raise DegenerateLogError; chart violations raise ChartError.
    """
    b = len(realizations)
    if b == 0:
        raise DomainError("empty batch")
    if steps < 100:
        raise DomainError("need at least 100 integration steps")
    th0 = np.broadcast_to(np.asarray(theta0, dtype=float), (b,)).copy()
    ep = np.broadcast_to(np.asarray(eps, dtype=float), (b,)).copy()
    if check_chart:
        for i, r in enumerate(realizations):
            NoisyCurve(th0[i], ep[i], r).validate_chart()

    # theta and theta' of every realization on the RK4 half-grid, shape (2S+1, B)
    ts = np.linspace(0.0, 2.0 * math.pi, 2 * steps + 1)
    thetas, dthetas = _stack_noise_grids(realizations, ts)

    big_theta = th0[None, :] + ep[None, :] * thetas
    gx = -np.sin(big_theta)
    gy = ep[None, :] * dthetas
    gz = 0.5 * np.cos(big_theta)

    x0, x, drift = _rk4_su2_grid(gx, gy, gz, 2.0 * math.pi / steps)
    if np.any(drift > drift_tol):
        raise IntegrationError(
            f"unitarity drift up to {drift.max():.2e} exceeds {drift_tol:.1e}; "
            "increase the step count"
        )

    # closing segments: exact exponentials exp(-+ i eps theta(0) sigma_2)
    beta = ep * thetas[0, :]
    lo0, lo = _sigma2_exp_batch(-beta)
    li0, li = _sigma2_exp_batch(beta)
    x0, x = _quat_mul_batch(lo0, lo, x0, x)
    x0, x = _quat_mul_batch(x0, x, li0, li)

    # U_N = e^{-i Phi(2pi) sigma_3/2} U_E = -U_E
    x0, x = -x0, -x

    # U_eps = U_0^dagger U_N, logged elementwise (principal branch)
    om = omega_freq(th0)
    ang0 = math.pi * om
    n_axis = np.stack(
        [-2.0 * np.sin(th0) / om, np.zeros(b), np.cos(th0) / om], axis=1
    )
    u0_0 = -np.cos(ang0)
    u0_x = -np.sin(ang0)[:, None] * n_axis
    e0, ev = _quat_mul_batch(u0_0, -u0_x, x0, x)
    r = np.linalg.norm(ev, axis=1)
    live = ep > 0.0
    if np.any((e0 < 0.0) & (r <= 1e-14) & live):
        raise DegenerateLogError(
            "noise correction reached U_eps = -1; outside the log branch"
        )
    angle = np.arctan2(r, e0)
    scale = np.zeros(b)
    ok = live & (r > 1e-14)
    scale[ok] = angle[ok] / (r[ok] * ep[ok])
    lam = ev * scale[:, None]
    lam[live & ~ok] = ev[live & ~ok] / ep[live & ~ok, None]

    u_n_quat = np.concatenate([x0[:, None], x], axis=1)
    return u_n_quat, lam, drift


def integrate_holonomy(curve: NoisyCurve, steps=20000) -> HolonomyResult:
    """Exact full-loop holonomy of one noisy curve.

    Uses the non-expanded equator-gauge connection along the curve, so the
    result is valid to all orders in eps (up to discretization).
    """
    quat, lam, drift = integrate_holonomy_batch(
        curve.theta0, curve.eps, [curve.realization], steps=steps
    )
    u_n = GroupElement2(float(quat[0, 0]), quat[0, 1:])
    u_e = u0(curve.theta0).dagger @ u_n
    return HolonomyResult(
        u_n=u_n,
        u_eps=u_e,
        lam=AlgebraVector(lam[0]),
        theta0=curve.theta0,
        eps=curve.eps,
        steps=int(steps),
        drift=float(drift[0]),
    )


# -- first-order theory -------------------------------------------------------


def _mode_gain(m, om):
    """K(m, Omega) = 4 (Omega^2-1) sin(pi Omega) / (sqrt(2 pi) Omega (m^2 - Omega^2)).

    The removable 0/0 at Omega -> m (reachable for m = 1, 2) is evaluated
    by its analytic limit.
    """
    if abs(om - m) < 1e-9:
        return -((-1.0) ** m) * 2.0 * math.pi * (m * m - 1.0) / (_SQRT2PI * m * m)
    return (
        4.0
        * (om * om - 1.0)
        * math.sin(math.pi * om)
        / (_SQRT2PI * om * (m * m - om * om))
    )


def lambda_mode_primed(m, coeff, theta0):
    """Primed-frame first-order displacement of a single Fourier mode.

    For m >= 1, `coeff` is the complex theta_m; for m = 0 it is the real
    theta_0.
    """
    om = float(omega_freq(theta0))
    sp, cp = math.sin(math.pi * om), math.cos(math.pi * om)
    if m == 0:
        t0 = float(np.real(coeff))
        pref = 2.0 * t0 / (_SQRT2PI * om * om)
        return pref * np.array(
            [
                cp * sp * (om * om - 1.0),
                sp * sp * (om * om - 1.0),
                1.5 * math.pi * om * math.sin(theta0) * math.cos(theta0),
            ]
        )
    k = _mode_gain(m, om)
    tr, ti = coeff.real, coeff.imag
    return -k * np.array([om * cp * tr + m * sp * ti, om * sp * tr - m * cp * ti, 0.0])


def lambda_perturbative(theta0, realization) -> AlgebraVector:
    """First-order-in-eps displacement Lambda, assembled mode by mode.

    Equals -theta(0) m' + integral of the interaction-picture first-order
    connection; returned in the base frame.
    """
    v = lambda_mode_primed(0, realization.theta0, theta0)
    for m, c in zip(realization.mode_indices, realization.mode_coeffs):
        v = v + lambda_mode_primed(int(m), complex(c), theta0)
    primed = AlgebraVector(v, "primed")
    return frame_rotation(theta0, "primed", "base").apply(primed)


def f_tilde(realization, theta0, w):
    """Windowed Fourier transform of f(t) = theta(t) + i Omega dtheta/dt.

    Closed form, written with sinc factors so the removable singularities
    at integer w (populated modes, and w = 0 for the static component) are
    evaluated exactly.
    """
    om = float(omega_freq(theta0))
    w = float(w)
    total = realization.theta0 * np.sinc(w)
    for m, c in zip(realization.mode_indices, realization.mode_coeffs):
        m = int(m)
        sgn = -1.0 if m % 2 else 1.0
        total += (m * om - 1.0) * complex(c) * (-sgn) * np.sinc(w - m)
        total += (m * om + 1.0) * complex(c).conjugate() * sgn * np.sinc(w + m)
    return complex(np.exp(-1j * math.pi * w)) * total


def a1_interaction(theta0, realization, t):
    """Base-frame first-order interaction-picture connection coefficients.

    Vectorized over t; returns (..., 3).  The sigma_3 component's
    derivative term carries 1/Omega (the widely quoted 1/Omega^2 variant
    fails the direct conjugation check).
    """
    om = float(omega_freq(theta0))
    t = np.asarray(t, dtype=float)
    th = realization.theta(t)
    thd = realization.theta_dot(t)
    c, s = np.cos(om * t), np.sin(om * t)
    ct, st = math.cos(theta0), math.sin(theta0)
    out = np.empty(t.shape + (3,))
    out[..., 0] = ct / om ** 2 * ((1.0 - om * om - c) * th - om * s * thd)
    out[..., 1] = c * thd - s / om * th
    out[..., 2] = st / (2.0 * om * om) * (4.0 - 4.0 * c - om * om) * th - (
        2.0 * st / om
    ) * s * thd
    return out


def a2_coefficients(theta0, realization, t):
    """Second-order coefficient vector (parallel to the drive axis, so
    interaction-picture conjugation leaves it unchanged)."""
    t = np.asarray(t, dtype=float)
    th2 = realization.theta(t) ** 2
    out = np.empty(t.shape + (3,))
    out[..., 0] = 0.5 * math.sin(theta0) * th2
    out[..., 1] = 0.0
    out[..., 2] = -0.25 * math.cos(theta0) * th2
    return out


def _dyson_grid_size(realization, base=4096):
    m_max = int(realization.mode_indices.max()) if realization.mode_indices.size else 1
    n = max(base, 512 * m_max)
    return n if n % 2 == 0 else n + 1


def w_dyson(theta0, realization, eps, order=1, grid=None) -> GroupElement2:
    """Perturbative middle-segment evolution in the interaction picture.

    order = 1 exponentiates eps * Int A_1^I; order = 2 adds eps^2 Int A_2^I
    and the antisymmetrized double integral of [A_1^I, A_1^I] (the
    second-order term of the time-ordered series resummed into the
    exponent).
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if eps < 0.0:
        raise DomainError("eps must be >= 0")
    n = grid or _dyson_grid_size(realization)
    t = np.linspace(0.0, 2.0 * math.pi, n + 1)
    h = t[1] - t[0]
    a1 = a1_interaction(theta0, realization, t)

    simp = np.ones(n + 1)
    simp[1:-1:2] = 4.0
    simp[2:-1:2] = 2.0
    simp *= h / 3.0

    exponent = eps * (simp[:, None] * a1).sum(axis=0)
    if order == 2:
        a2 = a2_coefficients(theta0, realization, t)
        exponent = exponent + eps * eps * (simp[:, None] * a2).sum(axis=0)
        # cumulative integral A(t) = int_0^t a1, trapezoid on the fine grid
        cumul = np.zeros_like(a1)
        cumul[1:] = np.cumsum(0.5 * h * (a1[1:] + a1[:-1]), axis=0)
        cross = np.cross(a1, cumul)
        exponent = exponent - eps * eps * (simp[:, None] * cross).sum(axis=0)
    return exp_map(exponent)


def w_exact(theta0, realization, eps, steps=20000) -> GroupElement2:
    """Exact interaction-picture middle-segment evolution, for convergence tests.

    W(2 pi) = exp(-2 i pi A_0 . sigma) U_mid with U_mid the path-ordered
    exponential of the exact connection over the fluctuating circle.
    """
    om_vec = 2.0 * math.pi * np.array(
        [-math.sin(theta0), 0.0, 0.5 * math.cos(theta0)]
    )

    def a_of_t(t):
        th = theta0 + eps * float(realization.theta(t))
        return np.array(
            [
                -math.sin(th),
                eps * float(realization.theta_dot(t)),
                0.5 * math.cos(th),
            ]
        )

    u_mid = path_ordered_exponential(a_of_t, 0.0, 2.0 * math.pi, steps)
    return exp_map(-om_vec) @ u_mid
