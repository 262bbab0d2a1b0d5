"""Periodic stochastic fluctuation theta(phi): synthesis and statistics.

The process is a finite Fourier series

    theta(phi) = theta_0/sqrt(2 pi)
               + sum_m (theta_m e^{i m phi} + theta_m^* e^{-i m phi})/sqrt(2 pi)

with theta_0 and the real/imaginary parts of each theta_m drawn as
independent zero-mean gaussians.

Amplitude conventions (important): NoiseSpec stores the PER-COMPONENT
standard deviation sigma_m, i.e. the width of theta_m^R and theta_m^I
separately (and of the real theta_0 for m = 0).  The mean square modulus
is then <|theta_m|^2> = 2 sigma_m^2 for m >= 1.  Closed-form displacement
statistics in `analytics` are written in the modulus convention
sqrt(<|theta_m|^2>); use `NoiseSpec.modulus_sigma` to convert.

Sampling is reproducible and schedule-independent: realization i of an
experiment seeded with `seed` always draws from the counter-based
substream `substream(seed, i)`, no matter in which order or on how many
threads realizations are produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NoiseSpec:
    """Mode list (m, sigma_m) with per-component standard deviations."""

    modes: tuple

    def __post_init__(self):
        seen = set()
        norm = []
        for m, s in self.modes:
            m = int(m)
            s = float(s)
            if m < 0:
                raise ConfigError("mode indices must be non-negative")
            if s < 0.0 or not math.isfinite(s):
                raise ConfigError("mode amplitudes must be finite and >= 0")
            if m in seen:
                raise ConfigError(f"duplicate mode index {m}")
            seen.add(m)
            norm.append((m, s))
        norm.sort()
        object.__setattr__(self, "modes", tuple(norm))

    # -- constructors --------------------------------------------------------

    @classmethod
    def single_mode(cls, m, sigma):
        return cls(((int(m), float(sigma)),))

    @classmethod
    def from_decay(cls, amplitude, alpha, cutoff=100, sigma0=0.0):
        """Power-law spectrum <|theta_m|^2> = amplitude^2 m^-(1+alpha), m = 1..cutoff.

        sigma0 sets the m = 0 component separately (the law diverges there).
        """
        if alpha < 0.0:
            raise ConfigError("decay exponent alpha must be >= 0")
        if cutoff < 1:
            raise ConfigError("decay cutoff must be >= 1")
        modes = []
        if sigma0 > 0.0:
            modes.append((0, float(sigma0)))
        for m in range(1, int(cutoff) + 1):
            modes.append((m, amplitude * m ** (-(1.0 + alpha) / 2.0) / math.sqrt(2.0)))
        return cls(tuple(modes))

    # -- views ----------------------------------------------------------------

    @property
    def sigma0(self):
        for m, s in self.modes:
            if m == 0:
                return s
        return 0.0

    @property
    def nonzero_modes(self):
        return tuple((m, s) for m, s in self.modes if m > 0)

    def sigma_for(self, m):
        for mm, s in self.modes:
            if mm == int(m):
                return s
        return 0.0

    def modulus_sigma(self, m):
        """sqrt(<|theta_m|^2>): per-component sigma times sqrt(2) for m >= 1."""
        s = self.sigma_for(m)
        return s * math.sqrt(2.0) if m >= 1 else s

    # -- serialization ---------------------------------------------------------

    def to_json(self):
        return {"modes": [[m, s] for m, s in self.modes]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("noise spec must be an object")
        if ("modes" in obj) == ("decay" in obj):
            raise ConfigError("noise spec needs exactly one of 'modes' or 'decay'")
        if "modes" in obj:
            try:
                return cls(tuple((int(m), float(s)) for m, s in obj["modes"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad mode list: {exc}") from exc
        d = obj["decay"]
        try:
            return cls.from_decay(
                float(d["amplitude"]),
                float(d["alpha"]),
                int(d["cutoff"]),
                float(d.get("sigma0", 0.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"decay law missing field {exc}") from exc


@dataclass(frozen=True)
class NoiseRealization:
    """One draw of the process: theta_0 and the complex theta_m, m >= 1."""

    theta0: float
    mode_indices: np.ndarray  # (M,) int
    mode_coeffs: np.ndarray  # (M,) complex

    def __post_init__(self):
        idx = np.asarray(self.mode_indices, dtype=int).reshape(-1)
        cf = np.asarray(self.mode_coeffs, dtype=complex).reshape(-1)
        if idx.shape != cf.shape:
            raise DomainError("mode index/coefficient length mismatch")
        if idx.size and (np.any(idx < 1) or np.unique(idx).size != idx.size):
            raise DomainError("mode indices must be distinct and >= 1")
        if not (np.all(np.isfinite(cf.view(float))) and math.isfinite(self.theta0)):
            raise DomainError("realization coefficients must be finite")
        idx.setflags(write=False)
        cf.setflags(write=False)
        object.__setattr__(self, "mode_indices", idx)
        object.__setattr__(self, "mode_coeffs", cf)

    @classmethod
    def zero(cls):
        return cls(0.0, np.empty(0, dtype=int), np.empty(0, dtype=complex))

    def coefficient(self, m):
        hit = np.nonzero(self.mode_indices == int(m))[0]
        return complex(self.mode_coeffs[hit[0]]) if hit.size else 0.0j

    @property
    def sup_bound(self):
        """Rigorous bound on sup_phi |theta(phi)|."""
        return (abs(self.theta0) + 2.0 * np.abs(self.mode_coeffs).sum()) / _SQRT2PI

    # -- evaluation -------------------------------------------------------------

    def theta(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = self.mode_indices
        if m.size == 0:
            return np.broadcast_to(self.theta0 / _SQRT2PI, phi.shape).copy()
        arg = np.multiply.outer(phi, m)  # (..., M)
        val = self.theta0 + 2.0 * (
            np.cos(arg) @ self.mode_coeffs.real - np.sin(arg) @ self.mode_coeffs.imag
        )
        return val / _SQRT2PI

    def theta_dot(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = self.mode_indices
        if m.size == 0:
            return np.zeros(phi.shape)
        arg = np.multiply.outer(phi, m)
        val = -2.0 * (
            np.sin(arg) @ (m * self.mode_coeffs.real)
            + np.cos(arg) @ (m * self.mode_coeffs.imag)
        )
        return val / _SQRT2PI


def evaluate(realization, phi):
    """theta(phi); real, 2 pi periodic."""
    out = realization.theta(phi)
    return float(out) if out.ndim == 0 else out


def evaluate_derivative(realization, phi):
    """d theta / d phi, exact termwise derivative."""
    out = realization.theta_dot(phi)
    return float(out) if out.ndim == 0 else out


def substream(seed, index):
    """Counter-based generator for realization `index` under a master seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def sample(spec: NoiseSpec, rng: np.random.Generator) -> NoiseRealization:
    """Draw one realization: theta_0 ~ N(0, sigma_0^2), components N(0, sigma_m^2).

    Draw order is fixed (theta_0, then ascending m: real part, imaginary
    part) so a given stream state always yields the same realization.
    """
    theta0 = spec.sigma0 * rng.standard_normal() if spec.sigma0 > 0.0 else 0.0
    nz = spec.nonzero_modes
    idx = np.array([m for m, _ in nz], dtype=int)
    coeffs = np.empty(len(nz), dtype=complex)
    for k, (_, s) in enumerate(nz):
        re, im = s * rng.standard_normal(2) if s > 0.0 else (0.0, 0.0)
        coeffs[k] = complex(re, im)
    return NoiseRealization(float(theta0), idx, coeffs)


def sample_many(spec, seed, count, start_index=0):
    """Realizations start_index .. start_index+count-1 from their substreams."""
    return [
        sample(spec, substream(seed, i))
        for i in range(int(start_index), int(start_index) + int(count))
    ]


def autocorrelation_theory(spec: NoiseSpec, delta, derivative=0):
    """R(delta) = <theta(phi) theta(phi - delta)> for the spec'd process.

    R(delta) = sigma_0^2/(2 pi) + sum_m <|theta_m|^2> cos(m delta)/pi with
    <|theta_m|^2> = 2 sigma_m^2 in the per-component convention.
    `derivative` selects d^k R / d delta^k for k in {0, 1, 2} (used by the
    derivative-correlation identities).
    """
    delta = np.asarray(delta, dtype=float)
    out = np.zeros(delta.shape)
    if derivative == 0:
        out = out + spec.sigma0 ** 2 / (2.0 * math.pi)
    for m, s in spec.nonzero_modes:
        amp = 2.0 * s * s / math.pi
        if derivative == 0:
            out = out + amp * np.cos(m * delta)
        elif derivative == 1:
            out = out - amp * m * np.sin(m * delta)
        elif derivative == 2:
            out = out - amp * m * m * np.cos(m * delta)
        else:
            raise DomainError("derivative order must be 0, 1, or 2")
    return float(out) if out.ndim == 0 else out


def autocorrelation_empirical(spec, delta, n_samples, seed, phi_points=64):
    """Monte Carlo estimate of <theta(phi) theta(phi - delta)>, averaged over phi.

    Returns (mean, standard error) over realizations; each realization
    contributes its phase average on a fixed phi grid, which also makes the
    estimator insensitive to where the lag window sits.
    """
    if n_samples < 2:
        raise DomainError("need at least 2 samples")
    phis = np.linspace(0.0, 2.0 * math.pi, int(phi_points), endpoint=False)
    vals = np.empty(int(n_samples))
    for i in range(int(n_samples)):
        r = sample(spec, substream(seed, i))
        vals[i] = float(np.mean(r.theta(phis) * r.theta(phis - delta)))
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return mean, stderr
