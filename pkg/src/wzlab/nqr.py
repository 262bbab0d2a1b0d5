"""Spin-3/2 quadrupole hamiltonian, eigenframes, and degenerate-subspace connections.

Units: hbar = 1 and mu |B|^2 = 1 throughout, so H = (Bhat.J)^2 with
spectrum {1/4, 1/4, 9/4, 9/4}.  Basis ordering is m = 3/2, 1/2, -1/2, -3/2
top to bottom.

Three gauges (local eigenframe choices on the field-direction sphere) are
supported for the m = +-1/2 doublet:

  north    rotation of the Jz eigenvectors along the geodesic from the
           north pole; singular at the south pole,
  south    north times the doublet phases diag(e^{-i phi}, e^{i phi}),
  equator  north times diag(e^{-i phi/2}, e^{i phi/2}); its connection has
           phi-independent coefficients, which is what the holonomy
           integrator uses.

The +-3/2 doublet is carried along for the adiabatic oracle and for the
check that its connection stays diagonal (the operator Bhat.J only couples
neighbouring m values, so no mixing occurs there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, GaugeError
from .su2 import AlgebraVector

GAUGES = ("north", "south", "equator")

# doublet phase exponents kappa_m per unit phi: state m picks up e^{-i kappa_m phi}
_GAUGE_KAPPA = {
    "north": np.zeros(4),
    "south": np.array([3.0, 1.0, -1.0, -3.0]),
    "equator": np.array([1.5, 0.5, -0.5, -1.5]),
}

_POLE_TOL = 1e-8


@dataclass(frozen=True)
class SpinOperators32:
    """Spin-3/2 angular momentum matrices in the Jz eigenbasis."""

    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def as_tuple(self):
        return (self.jx, self.jy, self.jz)


@lru_cache(maxsize=1)
def spin_operators() -> SpinOperators32:
    ms = np.array([1.5, 0.5, -0.5, -1.5])
    jp = np.zeros((4, 4), dtype=complex)
    for i in range(1, 4):
        m = ms[i]
        jp[i - 1, i] = math.sqrt(3.75 - m * (m + 1.0))
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    jz = np.diag(ms).astype(complex)
    for a in (jx, jy, jz):
        a.setflags(write=False)
    return SpinOperators32(jx, jy, jz)


@dataclass(frozen=True)
class FieldDirection:
    """Direction of the quadrupole field, standard spherical angles."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise DomainError(f"theta = {self.theta} outside [0, pi]")

    @property
    def unit_vector(self):
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )


def hamiltonian(direction: FieldDirection) -> np.ndarray:
    """H = (Bhat.J)^2; hermitian with doubly degenerate levels 1/4 and 9/4."""
    ops = spin_operators()
    b = direction.unit_vector
    bj = b[0] * ops.jx + b[1] * ops.jy + b[2] * ops.jz
    return bj @ bj


@dataclass(frozen=True)
class EigenFrame:
    """Instantaneous eigenbasis: columns ordered m = 3/2, 1/2, -1/2, -3/2."""

    states: np.ndarray  # 4x4 complex, columns are the eigenvectors
    gauge: str
    direction: FieldDirection

    @property
    def doublet(self):
        """4x2 block of the m = +1/2, -1/2 states."""
        return self.states[:, 1:3]

    @property
    def outer_doublet(self):
        """4x2 block of the m = +3/2, -3/2 states."""
        return self.states[:, [0, 3]]


def _north_states(theta, phi):
    """Closed-form north-gauge eigenvectors (rotation from the Jz basis)."""
    st = math.sin(theta)
    s2, c2 = math.sin(theta / 2.0), math.cos(theta / 2.0)
    s32, c32 = math.sin(1.5 * theta), math.cos(1.5 * theta)
    e = complex(math.cos(phi), math.sin(phi))
    # sin^2(theta) csc(theta/2) -> 0 smoothly at the pole
    csc_term = st * st / s2 if s2 > 0.0 else 0.0

    plus = np.array(
        [
            -math.sqrt(3.0) / 4.0 * csc_term / e,
            0.25 * (c2 + 3.0 * c32),
            -0.25 * e * (s2 - 3.0 * s32),
            math.sqrt(3.0) / 2.0 * e * e * st * s2,
        ],
        dtype=complex,
    )
    minus = np.array(
        [
            math.sqrt(3.0) / 2.0 * st * s2 / (e * e),
            0.25 * (s2 - 3.0 * s32) / e,
            0.25 * (c2 + 3.0 * c32),
            math.sqrt(3.0) / 4.0 * e * csc_term,
        ],
        dtype=complex,
    )

    # +-3/2 states by the same geodesic rotation, evaluated exactly:
    # exp(-i theta n.J) with n = (-sin phi, cos phi, 0)
    ops = spin_operators()
    nj = -math.sin(phi) * ops.jx + math.cos(phi) * ops.jy
    w, v = np.linalg.eigh(nj)
    rot = (v * np.exp(-1j * theta * w)) @ v.conj().T
    top = rot[:, 0]
    bottom = rot[:, 3]
    return np.stack([top, plus, minus, bottom], axis=1)


def eigenframe(direction: FieldDirection, gauge: str) -> EigenFrame:
    """Eigenbasis of H at the given direction, in the requested gauge."""
    if gauge not in GAUGES:
        raise GaugeError(f"unknown gauge {gauge!r}")
    th, ph = direction.theta, direction.phi
    if gauge == "north" and th > math.pi - _POLE_TOL:
        raise GaugeError("north gauge is singular at the south pole")
    if gauge in ("south", "equator") and th < _POLE_TOL:
        raise GaugeError(f"{gauge} gauge is singular at the north pole")
    states = _north_states(th, ph)
    kappa = _GAUGE_KAPPA[gauge]
    if np.any(kappa):
        states = states * np.exp(-1j * kappa * ph)[None, :]
    return EigenFrame(states, gauge, direction)


@dataclass(frozen=True)
class ConnectionValue:
    """Doublet connection A = (a_theta.sigma) dTheta + (a_phi.sigma) dPhi."""

    a_theta: AlgebraVector
    a_phi: AlgebraVector
    gauge: str
    direction: FieldDirection


def connection_closed_form(direction: FieldDirection, gauge: str) -> ConnectionValue:
    """The printed sigma-coefficient vectors of the doublet connection."""
    th, ph = direction.theta, direction.phi
    st, ct = math.sin(th), math.cos(th)
    sp, cp = math.sin(ph), math.cos(ph)
    if gauge == "north":
        if th > math.pi - _POLE_TOL:
            raise GaugeError("north gauge is singular at the south pole")
        a_th = np.array([-sp, cp, 0.0])
        a_ph = np.array([-st * cp, -st * sp, 0.5 * (ct - 1.0)])
    elif gauge == "south":
        if th < _POLE_TOL:
            raise GaugeError("south gauge is singular at the north pole")
        a_th = np.array([sp, cp, 0.0])
        a_ph = np.array([-st * cp, st * sp, 0.5 * (ct + 1.0)])
    elif gauge == "equator":
        a_th = np.array([0.0, 1.0, 0.0])
        a_ph = np.array([-st, 0.0, 0.5 * ct])
    else:
        raise GaugeError(f"unknown gauge {gauge!r}")
    return ConnectionValue(
        AlgebraVector(a_th), AlgebraVector(a_ph), gauge, direction
    )


def _doublet_connection_fd(direction, gauge, h, block, richardson):
    """Central-difference i<a|d|b> on a doublet; Richardson lifts it to O(h^4)."""
    th, ph = direction.theta, direction.phi

    def frame_block(t, p):
        f = eigenframe(FieldDirection(t, p), gauge)
        return f.doublet if block == "half" else f.outer_doublet

    def deriv(var, step):
        if var == "theta":
            fp = frame_block(th + step, ph)
            fm = frame_block(th - step, ph)
        else:
            fp = frame_block(th, ph + step)
            fm = frame_block(th, ph - step)
        return (fp - fm) / (2.0 * step)

    f0 = frame_block(th, ph)
    out = []
    for var in ("theta", "phi"):
        d1 = f0.conj().T @ deriv(var, h)
        if not richardson:
            out.append(1j * d1)
            continue
        d2 = f0.conj().T @ deriv(var, h / 2.0)
        out.append(1j * (4.0 * d2 - d1) / 3.0)
    return out  # [A_theta, A_phi] as 2x2 matrices


def connection_numeric_matrices(direction, gauge, h=1e-5, block="half", richardson=True):
    """Finite-difference connection matrices (A_theta, A_phi) on a doublet.

    block = "half" gives the m = +-1/2 doublet, "threehalf" the m = +-3/2
    one.  Useful for hermiticity and diagonality checks that the
    sigma-component form would hide.
    """
    if not 0.0 < h <= 1e-3:
        raise DomainError("finite-difference step must be in (0, 1e-3]")
    return _doublet_connection_fd(direction, gauge, h, block, richardson)


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _sigma_components(m):
    return np.array([float(np.trace(m @ s).real) / 2.0 for s in _PAULI])


def connection_numeric(direction, gauge, h=1e-5, richardson=True) -> ConnectionValue:
    """Finite-difference Wilczek-Zee connection of the m = +-1/2 doublet."""
    a_th_m, a_ph_m = connection_numeric_matrices(direction, gauge, h, "half", richardson)
    return ConnectionValue(
        AlgebraVector(_sigma_components(a_th_m)),
        AlgebraVector(_sigma_components(a_ph_m)),
        gauge,
        direction,
    )


# gauge transforms: rho = e^{-i c phi sigma_3} with c = 1 (north<->south)
# and c = 1/2 (north<->equator).  A -> rho+ A rho + i rho+ d rho rotates the
# (1, 2) components by 2 c phi and shifts the sigma_3 dPhi coefficient by c.
_RHO_C = {"rho1": 1.0, "rho2": 0.5}
_RHO_TARGET = {"rho1": ("north", "south"), "rho2": ("north", "equator")}


def gauge_transform(conn: ConnectionValue, which: str, inverse=False) -> ConnectionValue:
    """Apply the doublet gauge factor rho1 or rho2 (or its inverse) to a connection."""
    if which not in _RHO_C:
        raise GaugeError(f"unknown gauge factor {which!r}")
    src, dst = _RHO_TARGET[which]
    if inverse:
        src, dst = dst, src
    if conn.gauge != src:
        raise GaugeError(f"{which} {'inverse ' if inverse else ''}acts on the {src} gauge")
    c = _RHO_C[which] * (-1.0 if inverse else 1.0)
    ang = 2.0 * c * conn.direction.phi
    ca, sa = math.cos(ang), math.sin(ang)

    def rot(a):
        return np.array([a[0] * ca + a[1] * sa, -a[0] * sa + a[1] * ca, a[2]])

    a_th = rot(conn.a_theta.v)
    a_ph = rot(conn.a_phi.v)
    a_ph = a_ph + np.array([0.0, 0.0, c])
    return ConnectionValue(
        AlgebraVector(a_th), AlgebraVector(a_ph), dst, conn.direction
    )
