"""SU(2)/U(2) group elements, exp/log maps, bi-invariant distances, frames.

Group elements are kept in quaternion coordinates: an SU(2) element is
U = x0*1 + i x.sigma with x0^2 + |x|^2 = 1, i.e. a point on S^3.  A U(2)
element carries an extra overall phase, U = e^{i alpha} (x0*1 + i x.sigma).
Products are quaternion products, which avoids the unitarity drift of
repeated 2x2 matrix multiplication; a matrix view is derived on demand.

Algebra vectors are real 3-vectors tagged with the frame their components
refer to.  Four frames appear in the analysis of the noisy precession:

  base    the sigma_1, sigma_2, sigma_3 components,
  primed  rotated by eta about the 2-axis so the unperturbed drive
          generator points along 3',
  ladder  the (sigma_+, sigma_0, sigma_-) view of the primed frame
          (stored by its real primed components; complex view derived),
  tilded  primed rotated about 3' by pi*Omega, in which the per-mode
          displacement statistics are axis-aligned.

All types are immutable values; operations are pure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLogError, DomainError, FrameError

FRAMES = ("base", "primed", "ladder", "tilded")

_NORM_TOL = 1e-12
_RENORM_TRIGGER = 1e-13


def omega_freq(theta0):
    """Omega = sqrt(1 + 3 sin^2 theta0), the drive rotation frequency; in [1, 2]."""
    return np.sqrt(1.0 + 3.0 * np.sin(theta0) ** 2)


def eta_angle(theta0):
    """Tilt eta of the drive generator: cos eta = cos(theta0)/Omega, sin eta = 2 sin(theta0)/Omega."""
    return np.arctan2(2.0 * np.sin(theta0), np.cos(theta0))


def _as_vec3(v):
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise DomainError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("vector components must be finite")
    return a


@dataclass(frozen=True)
class AlgebraVector:
    """Real su(2) coefficient vector tagged with its frame."""

    v: np.ndarray
    frame: str = "base"

    def __post_init__(self):
        a = _as_vec3(self.v)
        a.setflags(write=False)
        object.__setattr__(self, "v", a)
        if self.frame not in FRAMES:
            raise FrameError(f"unknown frame {self.frame!r}")

    def _check_same_frame(self, other):
        if self.frame != other.frame:
            raise FrameError(
                f"cannot combine vectors in frames {self.frame!r} and {other.frame!r}"
            )

    def __add__(self, other):
        self._check_same_frame(other)
        return AlgebraVector(self.v + other.v, self.frame)

    def __sub__(self, other):
        self._check_same_frame(other)
        return AlgebraVector(self.v - other.v, self.frame)

    def __mul__(self, scalar):
        return AlgebraVector(self.v * float(scalar), self.frame)

    __rmul__ = __mul__

    def __neg__(self):
        return AlgebraVector(-self.v, self.frame)

    @property
    def norm(self):
        return float(np.linalg.norm(self.v))

    @property
    def ladder(self):
        """Complex ladder view (L_plus, L_0, L_minus) with L_plus = v1' + i v2'.

        Defined for primed/ladder-tagged vectors, whose stored components are
        the real primed ones.
        """
        if self.frame not in ("primed", "ladder"):
            raise FrameError("ladder view requires primed or ladder frame")
        v1, v2, v3 = self.v
        return (complex(v1, v2), complex(v3, 0.0), complex(v1, -v2))


@dataclass(frozen=True)
class GroupElement2:
    """Unitary 2x2 element U = e^{i phase} (x0*1 + i x.sigma)."""

    x0: float
    x: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        x = _as_vec3(self.x)
        x0 = float(self.x0)
        n2 = x0 * x0 + float(x @ x)
        if abs(n2 - 1.0) > 1e-6:
            raise DomainError(f"quaternion norm {n2} too far from 1")
        if abs(n2 - 1.0) > _RENORM_TRIGGER:
            s = 1.0 / math.sqrt(n2)
            x0 *= s
            x = x * s
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * math.pi))

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls):
        return cls(1.0, np.zeros(3))

    @classmethod
    def minus_identity(cls):
        return cls(-1.0, np.zeros(3))

    @classmethod
    def from_matrix(cls, U, tol=1e-9):
        """Decompose a unitary 2x2 matrix into phase and quaternion parts."""
        U = np.asarray(U, dtype=complex)
        if U.shape != (2, 2):
            raise DomainError("expected a 2x2 matrix")
        dev = np.abs(U @ U.conj().T - np.eye(2)).max()
        if dev > tol:
            raise DomainError(f"matrix is not unitary (deviation {dev:.3e})")
        det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
        alpha = cmath.phase(det) / 2.0
        V = U * cmath.exp(-1j * alpha)  # det V = +-1; fold -1 into quaternion sign
        x0 = V.trace().real / 2.0
        x = np.array(
            [
                V[0, 1].imag + V[1, 0].imag,
                V[0, 1].real - V[1, 0].real,
                V[0, 0].imag - V[1, 1].imag,
            ]
        ) / 2.0
        return cls(x0, x, alpha)

    # -- views -------------------------------------------------------------

    @property
    def matrix(self):
        x0, x = self.x0, self.x
        m = np.array(
            [
                [x0 + 1j * x[2], 1j * x[0] + x[1]],
                [1j * x[0] - x[1], x0 - 1j * x[2]],
            ],
            dtype=complex,
        )
        if self.phase != 0.0:
            m = m * cmath.exp(1j * self.phase)
        return m

    @property
    def quaternion(self):
        return np.concatenate(([self.x0], self.x))

    def is_su2(self, tol=1e-12):
        p = self.phase
        return min(p, abs(p - 2.0 * math.pi)) <= tol

    # -- group operations ---------------------------------------------------

    def __matmul__(self, other):
        x0, x = _quat_mul(self.x0, self.x, other.x0, other.x)
        return GroupElement2(x0, x, self.phase + other.phase)

    @property
    def dagger(self):
        return GroupElement2(self.x0, -self.x, -self.phase)

    def __neg__(self):
        return GroupElement2(-self.x0, -self.x, self.phase)


def _quat_mul(a0, a, b0, b):
    """(a0 + i a.sigma)(b0 + i b.sigma) in quaternion coordinates."""
    c0 = a0 * b0 - a @ b
    c = a0 * b + b0 * a - np.cross(a, b)
    return c0, c


def exp_map(v):
    """exp(i v.sigma) = cos|v| + i sin|v| (v/|v|).sigma, as a group element.

    Accepts a base-frame AlgebraVector or a plain 3-vector of base
    components; other frames must be rotated to base first.
    """
    if isinstance(v, AlgebraVector):
        if v.frame != "base":
            raise FrameError("exp_map takes base-frame components")
        v = v.v
    v = _as_vec3(v)
    a = float(np.linalg.norm(v))
    if a == 0.0:
        return GroupElement2.identity()
    return GroupElement2(math.cos(a), (math.sin(a) / a) * v)


def log_map(U, axis_tol=1e-14):
    """Principal-branch logarithm: v with |v| in [0, pi] and exp_map(v) = U.

    Raises DegenerateLogError at U = -1, where the angle is pi but the axis
    is undefined.
    """
    if not U.is_su2():
        raise DomainError("log_map is defined on SU(2) elements (phase = 0)")
    r = float(np.linalg.norm(U.x))
    if r <= axis_tol:
        if U.x0 < 0.0:
            raise DegenerateLogError()
        return AlgebraVector(np.array(U.x), "base")
    # atan2 keeps full accuracy near the identity, arccos would not
    angle = math.atan2(r, U.x0)
    return AlgebraVector((angle / r) * U.x, "base")


def distance_su2(U, V):
    """Bi-invariant distance arccos(x0 y0 + x.y) on SU(2); range [0, pi].

    Evaluated as 2 atan2(|p - q|, |p + q|) on the S^3 representatives,
    which equals the arccos of the inner product but stays accurate to
    machine precision near 0 and pi (arccos itself loses half the digits
    there).
    """
    if not (U.is_su2() and V.is_su2()):
        raise DomainError("distance_su2 requires SU(2) elements")
    c = U.x0 * V.x0 + float(U.x @ V.x)
    if abs(c) - 1.0 > _NORM_TOL:
        raise DomainError(f"inner product {c} outside [-1, 1]")
    p = np.concatenate(([U.x0], U.x))
    q = np.concatenate(([V.x0], V.x))
    return 2.0 * math.atan2(np.linalg.norm(p - q), np.linalg.norm(p + q))


def distance_u2(U, V):
    """|arccos( Tr(U V^dagger)/2 )| with the complex principal arccos.

    Extends the bi-invariant SU(2) distance to U(2); reduces to it when
    both phases vanish.
    """
    half_trace = cmath.exp(1j * (U.phase - V.phase)) * (
        U.x0 * V.x0 + float(U.x @ V.x)
    )
    if abs(half_trace) - 1.0 > 1e-9:
        raise DomainError(
            f"|Tr(UV+)/2| = {abs(half_trace)} > 1: inputs are off the unitary manifold"
        )
    return abs(cmath.acos(half_trace))


# -- frame rotations --------------------------------------------------------


@dataclass(frozen=True)
class FrameRotation:
    """SO(3) component map between two su(2) frames at fixed theta0."""

    matrix: np.ndarray
    source: str
    target: str
    theta0: float = field(default=float("nan"))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise DomainError("frame rotation must be 3x3")
        if np.abs(m @ m.T - np.eye(3)).max() > 1e-12 or abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise DomainError("frame rotation must be in SO(3)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        for f in (self.source, self.target):
            if f not in FRAMES:
                raise FrameError(f"unknown frame {f!r}")

    def apply(self, vec: AlgebraVector) -> AlgebraVector:
        if vec.frame != self.source:
            raise FrameError(
                f"rotation maps {self.source!r} components, got {vec.frame!r}"
            )
        return AlgebraVector(self.matrix @ vec.v, self.target)

    @property
    def inverse(self):
        return FrameRotation(self.matrix.T, self.target, self.source, self.theta0)


def _base_to_frame_matrix(theta0, frame):
    """Component map from base to the given frame (ladder stores primed)."""
    if frame == "base":
        return np.eye(3)
    e = eta_angle(theta0)
    ce, se = math.cos(e), math.sin(e)
    r_p = np.array([[ce, 0.0, se], [0.0, 1.0, 0.0], [-se, 0.0, ce]])
    if frame in ("primed", "ladder"):
        return r_p
    if frame == "tilded":
        a = math.pi * float(omega_freq(theta0))
        c, s = math.cos(a), math.sin(a)
        r_t = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
        return r_t @ r_p
    raise FrameError(f"unknown frame {frame!r}")


def frame_rotation(theta0, source, target) -> FrameRotation:
    """Component rotation between frames at polar angle theta0.

    base->tilded is the composite of the eta rotation about the 2-axis and
    the pi*Omega rotation about the new 3-axis; the ladder tag is an alias
    of primed for the stored real components.
    """
    m_s = _base_to_frame_matrix(theta0, source)
    m_t = _base_to_frame_matrix(theta0, target)
    return FrameRotation(m_t @ m_s.T, source, target, float(theta0))


def rotate_frame(vec: AlgebraVector, theta0, target) -> AlgebraVector:
    """Re-express an algebra vector in another frame at the given theta0."""
    return frame_rotation(theta0, vec.frame, target).apply(vec)


def angle_axis(rotation_matrix):
    """Angle-axis decomposition of a 3x3 rotation; angle in [0, pi]."""
    r = np.asarray(rotation_matrix, dtype=float)
    c = (np.trace(r) - 1.0) / 2.0
    ang = math.acos(min(1.0, max(-1.0, c)))
    skew = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = np.linalg.norm(skew)
    if s > 1e-12:
        return ang, skew / s
    if ang < 1e-6:
        return 0.0, np.array([0.0, 0.0, 1.0])
    # angle pi: axis from the symmetric part, sign conventional
    d = np.sqrt(np.maximum((np.diag(r) + 1.0) / 2.0, 0.0))
    k = int(np.argmax(d))
    axis = np.empty(3)
    axis[k] = d[k]
    for j in range(3):
        if j != k:
            axis[j] = r[k, j] / (2.0 * d[k])
    axis /= np.linalg.norm(axis)
    return ang, axis
