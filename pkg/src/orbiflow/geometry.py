"""Exact constant-curvature 2-geometry.

Three model surfaces, selected by a curvature sign and a scale R:

* ``+1`` -- round sphere of radius R, points stored as ambient 3-vectors
  with ``|x| = R``;
* ``0``  -- Euclidean plane, points stored as 2-vectors;
* ``-1`` -- hyperbolic plane of curvature ``-1/R^2`` in the hyperboloid
  model, points ``x`` with ``<x,x>_M = -R^2`` and ``x[2] > 0`` where
  ``<.,.>_M`` has signature ``(+,+,-)``.

Everything downstream relies on the closed forms here being exact to
rounding: exponential/logarithm, distance, minimizing geodesic arcs,
parallel transport along geodesics, and the isometry groups (O(3),
Euclidean motions, O(2,1)^+).  Isometries are represented uniformly by a
3x3 matrix (homogeneous for the flat case) so that groups of motions can
be manipulated as stacked arrays.

Scalar wrappers mirror the batched kernels (prefixed ``b``) which operate
on ``(n, d)`` stacks of points and vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (AntipodalPoints, BaseMismatch, NonUniqueGeodesic,
                     OutOfInjectivityRadius, VectorTooLong)

_J = np.diag([1.0, 1.0, -1.0])  # Minkowski form for the hyperboloid model


@dataclass(frozen=True)
class ModelSpace:
    """A constant-curvature model surface."""

    curvature_sign: int   # -1, 0, +1
    scale: float = 1.0    # radius for curved models; 1 for flat

    def __post_init__(self):
        if self.curvature_sign not in (-1, 0, 1):
            raise ValueError("curvature_sign must be -1, 0 or +1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def dim(self) -> int:
        """Ambient coordinate dimension (2 flat, 3 curved)."""
        return 2 if self.curvature_sign == 0 else 3

    @property
    def injectivity_radius(self) -> float:
        return np.pi * self.scale if self.curvature_sign > 0 else np.inf

    @property
    def convexity_radius(self) -> float:
        return np.pi * self.scale / 2 if self.curvature_sign > 0 else np.inf


FLAT = ModelSpace(0, 1.0)


def sphere(radius: float = 1.0) -> ModelSpace:
    return ModelSpace(1, radius)


def hyperbolic(radius: float = 1.0) -> ModelSpace:
    return ModelSpace(-1, radius)


# ---------------------------------------------------------------------------
# ambient bilinear form helpers
# ---------------------------------------------------------------------------

def ambient_dot(space: ModelSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairing of ambient vectors: Euclidean for kappa >= 0, Minkowski else."""
    if space.curvature_sign < 0:
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]
    return np.einsum("...i,...i->...", a, b)


def norm(space: ModelSpace, v: np.ndarray) -> np.ndarray:
    """Riemannian norm of tangent components (positive on tangent spaces)."""
    q = ambient_dot(space, v, v)
    return np.sqrt(np.maximum(q, 0.0))


def check_point(space: ModelSpace, x: np.ndarray, tol: float = None) -> None:
    tol = DEFAULT_TOL.ortho if tol is None else tol
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, expected {space.dim}")
    if space.curvature_sign > 0:
        err = np.abs(ambient_dot(space, x, x) - space.scale ** 2)
        if np.any(err > tol * max(1.0, space.scale ** 2)):
            raise ValueError("point off the sphere quadric")
    elif space.curvature_sign < 0:
        err = np.abs(ambient_dot(space, x, x) + space.scale ** 2)
        if np.any(err > tol * max(1.0, space.scale ** 2)) or np.any(x[..., 2] <= 0):
            raise ValueError("point off the upper hyperboloid sheet")


def check_tangent(space: ModelSpace, x: np.ndarray, v: np.ndarray,
                  tol: float = None) -> None:
    tol = DEFAULT_TOL.ortho if tol is None else tol
    if space.curvature_sign != 0:
        err = np.abs(ambient_dot(space, x, v))
        bound = tol * max(1.0, space.scale) * (1.0 + np.max(norm(space, np.atleast_2d(v))))
        if np.any(err > bound):
            raise ValueError("vector not tangent at its base point")


def project_to_surface(space: ModelSpace, x: np.ndarray) -> np.ndarray:
    """Snap ambient coordinates back onto the quadric (drift control)."""
    if space.curvature_sign == 0:
        return x
    if space.curvature_sign > 0:
        r = np.sqrt(np.einsum("...i,...i->...", x, x))
        return x * (space.scale / r)[..., None]
    q = -ambient_dot(space, x, x)
    y = x * (space.scale / np.sqrt(np.maximum(q, 1e-300)))[..., None]
    return y


def project_to_tangent(space: ModelSpace, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    if space.curvature_sign == 0:
        return v
    s = ambient_dot(space, x, v) / ambient_dot(space, x, x)
    return v - s[..., None] * x


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------

def bexp(space: ModelSpace, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Endpoints of unit-time geodesics with initial velocities ``v``.

    ``x``: (..., d) base points, ``v``: (..., d) tangent components.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if space.curvature_sign == 0:
        return x + v
    R = space.scale
    nv = norm(space, v)
    theta = nv / R
    small = nv < 1e-300
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(small[..., None], 0.0, v / np.where(small, 1.0, nv)[..., None])
    if space.curvature_sign > 0:
        y = np.cos(theta)[..., None] * x + (R * np.sin(theta))[..., None] * u
    else:
        y = np.cosh(theta)[..., None] * x + (R * np.sinh(theta))[..., None] * u
    return np.where(small[..., None], x, y)


def bdist(space: ModelSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if space.curvature_sign == 0:
        return np.sqrt(np.einsum("...i,...i->...", x - y, x - y))
    R = space.scale
    if space.curvature_sign > 0:
        # atan2 form is accurate at both ends of [0, pi*R]
        cr = np.cross(x, y)
        s = np.sqrt(np.einsum("...i,...i->...", cr, cr))
        c = ambient_dot(space, x, y)
        return R * np.arctan2(s, c)
    # Minkowski chord: |x-y|_M^2 = 2 R^2 (cosh(theta) - 1), exact for all theta
    d = x - y
    q = np.maximum(ambient_dot(space, d, d), 0.0)
    return 2.0 * R * np.arcsinh(np.sqrt(q) / (2.0 * R))


def blog(space: ModelSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Inverse of ``bexp`` within the injectivity radius.

    Spherical antipodal pairs are the caller's responsibility; here the
    returned vector degrades continuously (direction chosen from the
    residual, which vanishes at exact antipodes).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if space.curvature_sign == 0:
        return y - x
    R = space.scale
    d = bdist(space, x, y)
    if space.curvature_sign > 0:
        c = ambient_dot(space, x, y) / R ** 2
    else:
        c = -ambient_dot(space, x, y) / R ** 2
    w = y - c[..., None] * x
    # w is tangent at x (spacelike in the hyperbolic case), so the ambient
    # pairing is a genuine squared norm here.
    nw = np.sqrt(np.maximum(ambient_dot(space, w, w), 0.0))
    small = nw < 1e-300
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(small[..., None], 0.0, w / np.where(small, 1.0, nw)[..., None])
    return d[..., None] * u


def btransport(space: ModelSpace, x: np.ndarray, v: np.ndarray,
               w: np.ndarray) -> np.ndarray:
    """Parallel transport of ``w`` along the geodesic ``t -> exp(x, t v)``.

    Returns the components of the transported vector at ``exp(x, v)``.
    Closed form: the unit tangent frame (direction of travel, its
    surface-orthogonal complement) is parallel.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if space.curvature_sign == 0:
        return w
    R = space.scale
    nv = norm(space, v)
    small = nv < 1e-300
    if np.all(small):
        return w
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.where(small[..., None], 0.0, v / np.where(small, 1.0, nv)[..., None])
    xhat = x / R
    theta = nv / R
    if space.curvature_sign > 0:
        e2 = np.cross(xhat, e1)
        e1p = -np.sin(theta)[..., None] * xhat + np.cos(theta)[..., None] * e1
    else:
        e2 = np.einsum("ij,...j->...i", _J, np.cross(xhat, e1))
        e1p = np.sinh(theta)[..., None] * xhat + np.cosh(theta)[..., None] * e1
    a = ambient_dot(space, w, e1)
    b = ambient_dot(space, w, e2)
    out = a[..., None] * e1p + b[..., None] * e2
    return np.where(small[..., None], w, out)


def interpolate(space: ModelSpace, x: np.ndarray, y: np.ndarray,
                t: Union[float, np.ndarray]) -> np.ndarray:
    """Point(s) at parameter ``t`` on the minimizing geodesic from x to y."""
    v = blog(space, x, y)
    t = np.asarray(t, dtype=float)
    return bexp(space, x, t[..., None] * v if t.ndim else t * v)


# ---------------------------------------------------------------------------
# isometries
# ---------------------------------------------------------------------------

def _flat_homogeneous(linear: np.ndarray, translation: np.ndarray) -> np.ndarray:
    m = np.eye(3)
    m[:2, :2] = linear
    m[:2, 2] = translation
    return m


@dataclass(frozen=True)
class Isometry:
    """A global isometry of a model space.

    ``matrix`` is 3x3: orthogonal for the sphere, Lorentz (orthochronous)
    for the hyperbolic plane, homogeneous ``[[A, t], [0, 1]]`` for the
    plane.  Composition is matrix product; orientation is the determinant
    sign of the linear part.
    """

    space: ModelSpace
    matrix: np.ndarray

    @staticmethod
    def identity(space: ModelSpace) -> "Isometry":
        return Isometry(space, np.eye(3))

    @staticmethod
    def flat(linear: np.ndarray, translation=(0.0, 0.0)) -> "Isometry":
        return Isometry(FLAT, _flat_homogeneous(np.asarray(linear, float),
                                                np.asarray(translation, float)))

    @staticmethod
    def from_matrix(space: ModelSpace, matrix: np.ndarray) -> "Isometry":
        return Isometry(space, np.asarray(matrix, dtype=float))

    @property
    def linear_part(self) -> np.ndarray:
        return self.matrix[:2, :2] if self.space.curvature_sign == 0 else self.matrix

    @property
    def translation(self) -> np.ndarray:
        if self.space.curvature_sign != 0:
            return np.zeros(2)
        return self.matrix[:2, 2]

    @property
    def orientation(self) -> int:
        return 1 if np.linalg.det(self.linear_part) > 0 else -1

    def is_identity(self, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.matrix - np.eye(3))) < tol)

    def point(self, x: np.ndarray) -> np.ndarray:
        return apply_motion_points(self.space, self.matrix, x)

    def vector(self, v: np.ndarray) -> np.ndarray:
        return apply_motion_vectors(self.space, self.matrix, v)

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other (apply ``other`` first)."""
        return Isometry(self.space, self.matrix @ other.matrix)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)

    def inverse(self) -> "Isometry":
        k = self.space.curvature_sign
        m = self.matrix
        if k > 0:
            return Isometry(self.space, m.T.copy())
        if k < 0:
            return Isometry(self.space, _J @ m.T @ _J)
        inv = np.eye(3)
        a = m[:2, :2]
        inv[:2, :2] = a.T
        inv[:2, 2] = -a.T @ m[:2, 2]
        return Isometry(self.space, inv)


def apply_motion_points(space: ModelSpace, matrix: np.ndarray,
                        x: np.ndarray) -> np.ndarray:
    """Apply one or a stack of motion matrices to one or a stack of points."""
    x = np.asarray(x, dtype=float)
    if space.curvature_sign == 0:
        lin = matrix[..., :2, :2]
        tr = matrix[..., :2, 2]
        return np.einsum("...ij,...j->...i", lin, x) + tr
    return np.einsum("...ij,...j->...i", matrix, x)


def apply_motion_vectors(space: ModelSpace, matrix: np.ndarray,
                         v: np.ndarray) -> np.ndarray:
    if space.curvature_sign == 0:
        return np.einsum("...ij,...j->...i", matrix[..., :2, :2], v)
    return np.einsum("...ij,...j->...i", matrix, v)


def motion_inverse(space: ModelSpace, matrix: np.ndarray) -> np.ndarray:
    k = space.curvature_sign
    if k > 0:
        return np.swapaxes(matrix, -1, -2).copy()
    if k < 0:
        return _J @ np.swapaxes(matrix, -1, -2) @ _J
    out = np.broadcast_to(np.eye(3), matrix.shape).copy()
    a = np.swapaxes(matrix[..., :2, :2], -1, -2)
    out[..., :2, :2] = a
    out[..., :2, 2] = -np.einsum("...ij,...j->...i", a, matrix[..., :2, 2])
    return out


def renormalize_motion(space: ModelSpace, matrix: np.ndarray) -> np.ndarray:
    """Snap a drifted motion matrix back to the isometry group (polar)."""
    if space.curvature_sign == 0:
        a = matrix[:2, :2]
        u, _, vt = np.linalg.svd(a)
        out = matrix.copy()
        out[:2, :2] = u @ vt
        out[2] = (0.0, 0.0, 1.0)
        return out
    if space.curvature_sign > 0:
        u, _, vt = np.linalg.svd(matrix)
        return u @ vt
    # Lorentz: orthonormalize columns w.r.t. J by Gram-Schmidt on (e2', e0', e1')
    m = matrix.copy()
    c2 = m[:, 2]
    c2 = c2 / np.sqrt(max(-(c2 @ _J @ c2), 1e-300))
    c0 = m[:, 0]
    c0 = c0 - (c0 @ _J @ c2) / (c2 @ _J @ c2) * c2
    c0 = c0 / np.sqrt(max(c0 @ _J @ c0, 1e-300))
    c1 = m[:, 1]
    c1 = c1 - (c1 @ _J @ c2) / (c2 @ _J @ c2) * c2 - (c1 @ _J @ c0) * c0
    c1 = c1 / np.sqrt(max(c1 @ _J @ c1, 1e-300))
    return np.stack([c0, c1, c2], axis=1)


# rotation constructors ------------------------------------------------------

def flat_rotation(angle: float, center=(0.0, 0.0)) -> Isometry:
    c, s = np.cos(angle), np.sin(angle)
    a = np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    return Isometry.flat(a, center - a @ center)


def flat_reflection(point, direction) -> Isometry:
    """Reflection across the line through ``point`` with unit ``direction``."""
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    a = np.array([[d[0] ** 2 - d[1] ** 2, 2 * d[0] * d[1]],
                  [2 * d[0] * d[1], d[1] ** 2 - d[0] ** 2]])
    p = np.asarray(point, float)
    return Isometry.flat(a, p - a @ p)


def sphere_rotation(space: ModelSpace, axis_point: np.ndarray,
                    angle: float) -> Isometry:
    """Rotation of the sphere about the axis through ``axis_point``."""
    k = np.asarray(axis_point, float)
    k = k / np.linalg.norm(k)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    m = np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)
    return Isometry(space, m)


def sphere_reflection(space: ModelSpace, plane_normal: np.ndarray) -> Isometry:
    n = np.asarray(plane_normal, float)
    n = n / np.linalg.norm(n)
    return Isometry(space, np.eye(3) - 2.0 * np.outer(n, n))


def hyperbolic_rotation(space: ModelSpace, center: np.ndarray,
                        angle: float) -> Isometry:
    """Elliptic isometry of the hyperboloid fixing ``center``."""
    t = _hyperbolic_translation_to(space, np.asarray(center, float))
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Isometry(space, t @ rot @ (_J @ t.T @ _J))


def hyperbolic_reflection(space: ModelSpace, plane_normal: np.ndarray) -> Isometry:
    """Reflection across the geodesic cut by the Minkowski plane ``n . J x = 0``."""
    n = np.asarray(plane_normal, float)
    n = n / np.sqrt(max(n @ _J @ n, 1e-300))   # spacelike normal
    return Isometry(space, np.eye(3) - 2.0 * np.outer(_J @ n, n) @ _J)


def _hyperbolic_translation_to(space: ModelSpace, target: np.ndarray) -> np.ndarray:
    """Lorentz boost taking the apex (0,0,R) to ``target``."""
    R = space.scale
    apex = np.array([0.0, 0.0, R])
    if np.allclose(target, apex):
        return np.eye(3)
    v = blog(space, apex, target)
    d = float(norm(space, v))
    u = v[:2] / max(np.linalg.norm(v[:2]), 1e-300)
    t = d / R
    ch, sh = np.cosh(t), np.sinh(t)
    ux, uy = u
    return np.array([
        [1 + (ch - 1) * ux * ux, (ch - 1) * ux * uy, sh * ux],
        [(ch - 1) * ux * uy, 1 + (ch - 1) * uy * uy, sh * uy],
        [sh * ux, sh * uy, ch],
    ])


def rotation_about(space: ModelSpace, center: np.ndarray, angle: float) -> Isometry:
    if space.curvature_sign == 0:
        return flat_rotation(angle, center)
    if space.curvature_sign > 0:
        return sphere_rotation(space, center, angle)
    return hyperbolic_rotation(space, center, angle)


def motion_fingerprint(space: ModelSpace, matrix: np.ndarray,
                       probes: np.ndarray) -> np.ndarray:
    """Images of 3 probe points; used to identify motions on overlaps."""
    return apply_motion_points(space, matrix, probes)


# ---------------------------------------------------------------------------
# spec-level wrappers (scalar API)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelVector:
    """Tangent vector: components attached to a base point."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components",
                           np.asarray(self.components, dtype=float))


def exp_map(base: np.ndarray, v: ModelVector, space: ModelSpace) -> np.ndarray:
    """Endpoint of the unit-time geodesic from ``base`` with velocity ``v``."""
    base = np.asarray(base, dtype=float)
    if not np.allclose(v.base, base, atol=1e-9 * max(1.0, space.scale)):
        raise BaseMismatch("vector is not based at the given point")
    if space.curvature_sign > 0:
        if float(norm(space, v.components)) >= space.injectivity_radius:
            raise VectorTooLong("|v| >= pi * scale leaves the injectivity domain")
    return bexp(space, base, v.components)


def log_map(base: np.ndarray, target: np.ndarray, space: ModelSpace) -> ModelVector:
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    d = float(bdist(space, base, target))
    if space.curvature_sign > 0:
        if d > space.injectivity_radius - DEFAULT_TOL.antipodal_guard * space.scale:
            if d > space.injectivity_radius + 1e-12:
                raise OutOfInjectivityRadius("points beyond the injectivity radius")
            raise AntipodalPoints("antipodal points have no unique logarithm")
    return ModelVector(base, blog(space, base, target))


def distance(a: np.ndarray, b: np.ndarray, space: ModelSpace) -> float:
    return float(bdist(space, a, b))


@dataclass(frozen=True)
class GeodesicArc:
    """Geodesic ``t -> exp(start, (t - t_a) * velocity)`` over ``[t_a, t_b]``."""

    space: ModelSpace
    start: np.ndarray
    velocity: np.ndarray     # components at start, per unit parameter
    interval: tuple

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    @property
    def length(self) -> float:
        ta, tb = self.interval
        return float(norm(self.space, self.velocity)) * (tb - ta)

    @property
    def speed(self) -> float:
        return float(norm(self.space, self.velocity))

    def point(self, t) -> np.ndarray:
        ta, _ = self.interval
        t = np.asarray(t, dtype=float)
        dt = t - ta
        if dt.ndim:
            return bexp(self.space, self.start[None, :],
                        dt[:, None] * self.velocity[None, :])
        return bexp(self.space, self.start, float(dt) * self.velocity)

    def velocity_at(self, t: float) -> np.ndarray:
        """Velocity components at parameter ``t`` (transported along itself)."""
        ta, _ = self.interval
        dt = float(t) - ta
        if self.speed == 0.0 or dt == 0.0:
            return self.velocity.copy()
        return btransport(self.space, self.start, dt * self.velocity, self.velocity)

    @property
    def end(self) -> np.ndarray:
        ta, tb = self.interval
        return self.point(tb)


def geodesic_between(a: np.ndarray, b: np.ndarray, space: ModelSpace,
                     interval=(0.0, 1.0)) -> GeodesicArc:
    """Minimizing geodesic arc from a to b, proportional to arc length."""
    d = float(bdist(space, a, b))
    if space.curvature_sign > 0 and d > space.injectivity_radius - \
            DEFAULT_TOL.antipodal_guard * space.scale:
        raise NonUniqueGeodesic("antipodal points: minimizing geodesic not unique")
    ta, tb = interval
    if tb - ta <= 0:
        return GeodesicArc(space, np.asarray(a, float), np.zeros(space.dim),
                           (ta, ta))
    v = blog(space, a, b) / (tb - ta)
    return GeodesicArc(space, a, v, (ta, tb))


def parallel_transport(v: ModelVector, along: GeodesicArc,
                       space: ModelSpace) -> ModelVector:
    if not np.allclose(v.base, along.start, atol=1e-9 * max(1.0, space.scale)):
        raise BaseMismatch("vector must be based at the arc start")
    ta, tb = along.interval
    move = (tb - ta) * along.velocity
    out = btransport(space, along.start, move, v.components)
    return ModelVector(along.end, out)


def apply_isometry(g: Isometry, x):
    """Spec-level dispatch: points map by g, vectors by (g, dg)."""
    if isinstance(x, ModelVector):
        return ModelVector(g.point(x.base), g.vector(x.components))
    return g.point(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# test/demo helpers
# ---------------------------------------------------------------------------

def random_point(space: ModelSpace, rng: np.random.Generator,
                 spread: float = 1.0) -> np.ndarray:
    if space.curvature_sign == 0:
        return rng.normal(scale=spread, size=2)
    if space.curvature_sign > 0:
        x = rng.normal(size=3)
        return project_to_surface(space, x)
    v = rng.normal(scale=spread, size=2)
    apex = np.array([0.0, 0.0, space.scale])
    return bexp(space, apex, np.array([v[0], v[1], 0.0]))


def random_tangent(space: ModelSpace, x: np.ndarray, rng: np.random.Generator,
                   length: float = 1.0) -> np.ndarray:
    v = rng.normal(size=space.dim)
    v = project_to_tangent(space, x, v)
    n = float(norm(space, v))
    if n < 1e-12:
        return random_tangent(space, x, rng, length)
    return v * (length / n)
