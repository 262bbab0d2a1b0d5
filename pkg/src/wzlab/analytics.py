"""Closed-form statistics of the holonomy displacement.

Conventions: every sigma argument named `sigma_mod` is the modulus-based
amplitude sqrt(<|theta_m|^2>) in which the printed displacement formulas
are written; NoiseSpec amplitudes are per-component and enter through
NoiseSpec.modulus_sigma (a factor sqrt(2) for m >= 1).  The two coincide
for m = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateParamsError, DomainError, IntegrationError
from .noise import NoiseSpec
from .su2 import AlgebraVector, frame_rotation, omega_freq

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _sin_over_gap(m, om):
    """|sin(pi Omega)| / |m^2 - Omega^2| with its analytic limit at Omega = m."""
    if abs(om - m) < 1e-9:
        return math.pi / (2.0 * m)
    return abs(math.sin(math.pi * om)) / abs(m * m - om * om)


def drms_mode(m, sigma_mod, theta0, eps):
    """Root-mean-square displacement for single-mode noise of frequency m.

    sigma_mod = sqrt(<|theta_m|^2>).  The m = 2 expression is 0/0 exactly
    at the equator and is evaluated there by its analytic limit,
    d_rms^(2)(pi/2) = (3/2) sqrt(2 pi) eps sigma.
    """
    if m < 0 or int(m) != m:
        raise DomainError("mode index must be a non-negative integer")
    om = float(omega_freq(theta0))
    if m == 0:
        return (
            eps
            * sigma_mod
            / _SQRT2PI
            * math.sqrt(om * om - 1.0)
            / om ** 2
            * math.sqrt(
                4.0 * (om * om - 1.0) * math.sin(math.pi * om) ** 2
                + math.pi ** 2 * om * om * (4.0 - om * om)
            )
        )
    return (
        eps
        * sigma_mod
        / math.sqrt(math.pi)
        * 2.0
        * math.sqrt(m * m + om * om)
        * (om * om - 1.0)
        * _sin_over_gap(m, om)
        / om
    )


def drms_general(autocorr, theta0, eps, tol=1e-10):
    """Root-mean-square displacement for an arbitrary autocorrelation R.

    Numerical quadrature of the single-lag kernel

        d^2 = eps^2 (Om^2-1)/(2 Om^2) Int_0^{2 pi} R(s) B(s) ds,
        B(s) = s Om^2 + 4 (2 pi - s)(Om^2 - 1) cos(s Om) - 4 Om sin(s Om)
             + 4 Om sin(2 pi Om - s Om) - 4 s - 2 pi Om^2 + 8 pi.

    Float64 cancellation leaves an absolute floor of order 1e-13 in d^2
    where the integral vanishes identically.
    """
    om = float(omega_freq(theta0))
    two_pi = 2.0 * math.pi

    def integrand(s):
        b = (
            s * om * om
            + 4.0 * (two_pi - s) * (om * om - 1.0) * math.cos(s * om)
            - 4.0 * om * math.sin(s * om)
            + 4.0 * om * math.sin(two_pi * om - s * om)
            - 4.0 * s
            - two_pi * om * om
            + 8.0 * math.pi
        )
        return autocorr(s) * b

    val, err = quad(integrand, 0.0, two_pi, epsabs=tol, epsrel=tol, limit=400)
    if err > max(100.0 * tol, 1e-8):
        raise IntegrationError(
            f"displacement quadrature error estimate {err:.2e} above tolerance"
        )
    d2 = (om * om - 1.0) / (2.0 * om * om) * val
    return eps * math.sqrt(max(d2, 0.0))


def drms_spec(spec: NoiseSpec, theta0, eps):
    """RMS displacement of a multi-mode spec (modes are independent)."""
    total = 0.0
    for m, _ in spec.modes:
        total += drms_mode(m, spec.modulus_sigma(m), theta0, eps) ** 2
    return math.sqrt(total)


def f2_avg_omega(spec: NoiseSpec, w):
    """<|F(w)|^2> of the windowed transform of theta + i Omega dtheta/dt...

    evaluated with w as a free frequency (the physical case sets
    w = Omega(theta0)); written with sinc factors so integer w is exact.
    """
    w = float(w)
    om = w  # the transform's Omega and the evaluation point coincide
    total = spec.sigma0 ** 2 * np.sinc(w) ** 2
    for m, s in spec.nonzero_modes:
        mod2 = 2.0 * s * s  # <|theta_m|^2>
        num = om * om * (m * m - 1.0) ** 2 + m * m * (om * om - 1.0) ** 2
        total += 2.0 * mod2 * num * (np.sinc(w - m) / (w + m)) ** 2
    return float(total)


def f2_avg(spec: NoiseSpec, theta0):
    """<|F(Omega)|^2> at the drive frequency Omega(theta0)."""
    return f2_avg_omega(spec, float(omega_freq(theta0)))


@dataclass(frozen=True)
class DistributionParams:
    """Parameters of the first-order displacement distribution (tilded frame).

    Per-mode gaussians live in the 1~-2~ plane with semiaxes
    (sigma_bar_m / m, sigma_bar_m / Omega); the static (m = 0) part lies
    on the line spanned by n with scale |n| sigma_0; the multi-mode
    convolution has semiaxes alpha_1, alpha_2 in that plane and tilt mu
    between the 1~ and 3~ components.
    """

    theta0: float
    omega: float
    sigma_bar: dict
    sigma_bar0: float
    mu: float
    alpha1: float
    alpha2: float
    n_tilded: AlgebraVector
    n_base: AlgebraVector
    degenerate: bool

    def mode_axes(self, m):
        """Semiaxes (along 1~, along 2~) of the mode-m planar gaussian."""
        sb = self.sigma_bar[m]
        return sb / m, sb / self.omega

    @property
    def covariance_tilded(self):
        """3x3 covariance of Lambda in the tilded frame.

        diag(alpha1^2, alpha2^2, 0) plus sigma_0^2 n n^T; finite for every
        theta0, including the equator where mu alone diverges.
        """
        c = np.diag([self.alpha1 ** 2, self.alpha2 ** 2, 0.0])
        n = self.n_tilded.v
        sigma0 = self.sigma_bar0 / abs(n[2]) if abs(n[2]) > 0 else 0.0
        # sigma_bar0 = |n_3~| sigma_0; recover sigma_0^2 n n^T robustly
        return c + sigma0 ** 2 * np.outer(n, n)


def sigma_bar(m, sigma, theta0):
    """Per-mode scale sigma_bar_m (per-component sigma input), >= 0."""
    if m < 1:
        raise DomainError("sigma_bar is defined for m >= 1")
    om = float(omega_freq(theta0))
    return 4.0 * m * (om * om - 1.0) * _sin_over_gap(m, om) / _SQRT2PI * sigma


def n_vector(theta0):
    """Direction n of the static-mode displacement, tilded and base frames."""
    om = float(omega_freq(theta0))
    sp = math.sin(math.pi * om)
    pref = 2.0 / (_SQRT2PI * om * om)
    n_t = pref * np.array(
        [
            (om * om - 1.0) * sp,
            0.0,
            1.5 * math.pi * om * math.cos(theta0) * math.sin(theta0),
        ]
    )
    tilded = AlgebraVector(n_t, "tilded")
    base = frame_rotation(theta0, "tilded", "base").apply(tilded)
    return tilded, base


def distribution_params(spec: NoiseSpec, theta0) -> DistributionParams:
    """All printed distribution parameters at theta0 for the given spec.

    At the equator cos(theta0) sin(theta0) = 0 makes sigma_bar0 vanish and
    mu divergent; the result is flagged degenerate and mu set to inf.
    """
    om = float(omega_freq(theta0))
    sp = math.sin(math.pi * om)
    sc = math.cos(theta0) * math.sin(theta0)
    sig0 = spec.sigma0

    bars = {m: sigma_bar(m, s, theta0) for m, s in spec.nonzero_modes}
    alpha1 = math.sqrt(sum((sb / m) ** 2 for m, sb in bars.items()))
    alpha2 = math.sqrt(sum(sb ** 2 for sb in bars.values())) / om

    degenerate = abs(sc) < 1e-12
    if degenerate:
        # cos(theta0) sin(theta0) vanishes: no static tilt, mu undefined
        sigma_bar0 = 0.0
        mu = math.inf
    else:
        sigma_bar0 = 3.0 * math.pi / (_SQRT2PI * om) * abs(sc) * sig0
        mu = 2.0 * (om * om - 1.0) * sp / (3.0 * math.pi * om * sc)

    n_t, n_b = n_vector(theta0)
    return DistributionParams(
        theta0=float(theta0),
        omega=om,
        sigma_bar=bars,
        sigma_bar0=sigma_bar0,
        mu=mu,
        alpha1=alpha1,
        alpha2=alpha2,
        n_tilded=n_t,
        n_base=n_b,
        degenerate=degenerate,
    )


def pdf_lambda(params: DistributionParams, lam: AlgebraVector):
    """General multi-mode gaussian density of Lambda (tilded components).

    Requires all of alpha_1, alpha_2, sigma_bar0 > 0; the delta-supported
    single-mode and static cases are exposed structurally by
    `mode_distribution` instead.
    """
    if lam.frame != "tilded":
        raise DomainError("pdf_lambda expects tilded-frame components")
    a1, a2, s0 = params.alpha1, params.alpha2, params.sigma_bar0
    if min(a1, a2, s0) <= 0.0 or not math.isfinite(params.mu):
        raise DegenerateParamsError(
            "general-form density undefined for degenerate parameters"
        )
    l1, l2, l3 = lam.v
    q = (
        ((l1 - params.mu * l3) / a1) ** 2
        + (l2 / a2) ** 2
        + (l3 / s0) ** 2
    )
    return math.exp(-0.5 * q) / ((2.0 * math.pi) ** 1.5 * a1 * a2 * s0)


@dataclass(frozen=True)
class PlanarGaussian:
    """Mode-m distribution: supported on the plane Lambda_3~ = 0."""

    axis1: float  # along 1~
    axis2: float  # along 2~

    @property
    def support(self):
        return "plane Lambda_3~ = 0"

    def density(self, l1, l2):
        q = (l1 / self.axis1) ** 2 + (l2 / self.axis2) ** 2
        return math.exp(-0.5 * q) / (2.0 * math.pi * self.axis1 * self.axis2)


@dataclass(frozen=True)
class LineGaussian:
    """Static-mode distribution: supported on the line spanned by n."""

    direction: AlgebraVector  # n, tilded frame
    scale: float  # |n| sigma_0

    @property
    def support(self):
        return "line Lambda = theta_0 n"

    def density_along(self, arclength):
        if self.scale <= 0.0:
            raise DegenerateParamsError("static mode has zero scale here")
        return math.exp(-0.5 * (arclength / self.scale) ** 2) / (
            _SQRT2PI * self.scale
        )


def mode_distribution(m, sigma, theta0):
    """Structural (support, marginal) distribution of a single mode.

    sigma is per-component.  m >= 1 yields a PlanarGaussian with semiaxes
    (sigma_bar/m, sigma_bar/Omega); m = 0 yields a LineGaussian along n
    with scale |n| sigma.
    """
    om = float(omega_freq(theta0))
    if m == 0:
        n_t, _ = n_vector(theta0)
        return LineGaussian(n_t, n_t.norm * sigma)
    sb = sigma_bar(m, sigma, theta0)
    if sb <= 0.0:
        raise DegenerateParamsError(f"mode {m} has zero displacement scale here")
    return PlanarGaussian(sb / m, sb / om)
