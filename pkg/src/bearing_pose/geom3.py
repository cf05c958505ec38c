"""Geometric primitives on R^3 and SO(3).

Vectors are ``(3,)`` float arrays and matrices ``(3, 3)`` float arrays; rotations
are plain matrices checked with :func:`is_rotation` / :func:`as_rotation`.
The ``_``-prefixed kernels are numba-compiled and shared with the time-stepping
loops in :mod:`bearing_pose.sim` and :mod:`bearing_pose.analysis`; the public
functions validate their inputs and then call the kernels.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

ROTATION_TOL = 1e-9
SKEW_TOL = 1e-9
SMALL_ANGLE = 1e-8


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _skew(v):
    S = np.zeros((3, 3))
    S[0, 1] = -v[2]
    S[0, 2] = v[1]
    S[1, 0] = v[2]
    S[1, 2] = -v[0]
    S[2, 0] = -v[1]
    S[2, 1] = v[0]
    return S


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _psi(C):
    out = np.empty(3)
    out[0] = 0.5 * (C[2, 1] - C[1, 2])
    out[1] = 0.5 * (C[0, 2] - C[2, 0])
    out[2] = 0.5 * (C[1, 0] - C[0, 1])
    return out


@njit(cache=True)
def _mm(A, B):
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return C


@njit(cache=True)
def _mmt(A, B):
    """``A @ B.T``"""
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = A[i, 0] * B[j, 0] + A[i, 1] * B[j, 1] + A[i, 2] * B[j, 2]
    return C


@njit(cache=True)
def _mv(A, x):
    y = np.empty(3)
    for i in range(3):
        y[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]
    return y


@njit(cache=True)
def _mtv(A, x):
    """``A.T @ x``"""
    y = np.empty(3)
    for i in range(3):
        y[i] = A[0, i] * x[0] + A[1, i] * x[1] + A[2, i] * x[2]
    return y


@njit(cache=True)
def _exp(w):
    x, y, z = w[0], w[1], w[2]
    theta2 = x * x + y * y + z * z
    if theta2 < SMALL_ANGLE * SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        theta = math.sqrt(theta2)
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2
    # I + a [w]x + b [w]x^2, with [w]x^2 = w w^T - |w|^2 I
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - b * (y * y + z * z)
    R[1, 1] = 1.0 - b * (x * x + z * z)
    R[2, 2] = 1.0 - b * (x * x + y * y)
    R[0, 1] = b * x * y - a * z
    R[1, 0] = b * x * y + a * z
    R[0, 2] = b * x * z + a * y
    R[2, 0] = b * x * z - a * y
    R[1, 2] = b * y * z - a * x
    R[2, 1] = b * y * z + a * x
    return R


@njit(cache=True)
def _projector(x):
    n2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    return np.eye(3) - np.outer(x, x) / n2


@njit(cache=True)
def _distance_sq(R):
    return 0.25 * (3.0 - (R[0, 0] + R[1, 1] + R[2, 2]))


# ---------------------------------------------------------------- helpers

def _vec(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def _mat(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite components")
    return A


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    """True when ``R`` is orthonormal with unit determinant within ``tol``."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def as_rotation(M, project: bool = False) -> np.ndarray:
    """Return ``M`` as a rotation matrix.

    With ``project=False`` the input must already lie on SO(3) (within
    ``ROTATION_TOL``); otherwise it is replaced by its nearest rotation.
    """
    if project:
        return project_to_rotation(M)
    M = _mat(M)
    if not is_rotation(M):
        raise ValueError("matrix is not a rotation within tolerance")
    return M.copy()


# ---------------------------------------------------------------- public API

def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ y == np.cross(v, y)``."""
    return _skew(_vec(v))


def vex(S) -> np.ndarray:
    """Inverse of :func:`skew`; rejects matrices that are not antisymmetric."""
    S = _mat(S)
    if np.max(np.abs(S + S.T)) > SKEW_TOL:
        raise ValueError("vex requires an antisymmetric matrix")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def pa(A) -> np.ndarray:
    """Antisymmetric part ``(A - A^T) / 2``."""
    A = _mat(A)
    return 0.5 * (A - A.T)


def psi(C) -> np.ndarray:
    """``vex`` of the antisymmetric part of ``C``."""
    return _psi(_mat(C))


def rotation_distance(R) -> float:
    """Normalized distance to the identity, ``sqrt(tr(I - R) / 4)`` in [0, 1].

    Radicands down to -1e-12 are clamped to zero (round-off at the identity).
    """
    R = _mat(R)
    d2 = _distance_sq(R)
    if d2 < 0.0:
        if d2 < -1e-12:
            raise ValueError(f"negative squared distance {d2}; input is not a rotation")
        d2 = 0.0
    return math.sqrt(min(d2, 1.0))


def angle_axis(theta: float, v) -> np.ndarray:
    """Rotation by ``theta`` radians about the unit axis ``v`` (Rodrigues)."""
    v = _vec(v)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("rotation axis must be a unit vector")
    S = _skew(v)
    return np.eye(3) + math.sin(theta) * S + (1.0 - math.cos(theta)) * (S @ S)


def exp_so3(w) -> np.ndarray:
    """Exponential map of the rotation vector ``w``."""
    return _exp(_vec(w))


def log_so3(R) -> np.ndarray:
    """Rotation vector of ``R`` with angle in [0, pi]."""
    R = _mat(R)
    c = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = math.acos(c)
    if theta < 1e-6:
        return _psi(R)
    if math.pi - theta < 1e-6:
        # axis from the symmetric part, sign from the antisymmetric residue
        B = 0.5 * (R + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / math.sqrt(B[k, k])
        s = _psi(R)
        if axis @ s < 0:
            axis = -axis
        return theta * axis
    return theta / math.sin(theta) * _psi(R)


def orthogonal_projector(x) -> np.ndarray:
    """``I - x x^T / |x|^2``: projection onto the plane orthogonal to ``x``."""
    x = _vec(x)
    if x @ x == 0.0:
        raise ValueError("projector of the zero vector is undefined")
    return _projector(x)


def project_to_rotation(M) -> np.ndarray:
    """Nearest rotation to ``M`` in Frobenius norm (orthogonal polar factor)."""
    M = _mat(M)
    if np.linalg.det(M) <= 0.0:
        raise ValueError("cannot project a singular or orientation-reversing matrix")
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    return U @ D @ Vt


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation from a normalized Gaussian quaternion."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


# ---------------------------------------------------------------- symmetric eigensolve

def _null_vector(B: np.ndarray) -> np.ndarray:
    # largest cross product of two rows spans the null space of a rank-2 matrix
    r0, r1, r2 = B
    cands = (np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2))
    norms = [np.linalg.norm(c) for c in cands]
    k = int(np.argmax(norms))
    return cands[k] / norms[k]


def _any_perpendicular(v: np.ndarray) -> np.ndarray:
    a = np.eye(3)[int(np.argmin(np.abs(v)))]
    u = np.cross(v, a)
    return u / np.linalg.norm(u)


def sym_eig3(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric 3x3 matrix from its characteristic cubic.

    Returns ``(w, V)`` with ascending eigenvalues ``w`` and orthonormal
    eigenvectors in the columns of ``V`` (right-handed).  The eigenvector of
    the most isolated root comes from a cross product; the other two solve a
    2x2 problem in the orthogonal plane, which stays well conditioned when
    two eigenvalues (nearly) coincide.
    """
    A = _mat(A)
    A = 0.5 * (A + A.T)
    scale = np.abs(A).max()
    if scale == 0.0:
        return np.zeros(3), np.eye(3)
    A = A / scale
    q = np.trace(A) / 3.0
    off = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    p2 = (A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2 + 2.0 * off
    p = math.sqrt(p2 / 6.0)
    if p <= 1e-15:
        return np.full(3, q * scale), np.eye(3)
    I = np.eye(3)
    r = np.clip(np.linalg.det((A - q * I) / p) / 2.0, -1.0, 1.0)
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    mid = 3.0 * q - hi - lo

    iso = hi if hi - mid >= mid - lo else lo
    v = _null_vector(A - iso * I)
    u = _any_perpendicular(v)
    x = np.cross(v, u)
    a, b, c = u @ A @ u, u @ A @ x, x @ A @ x
    theta = 0.5 * math.atan2(2.0 * b, a - c)
    e1 = math.cos(theta) * u + math.sin(theta) * x
    e2 = -math.sin(theta) * u + math.cos(theta) * x
    vecs = [v, e1, e2]
    vals = np.array([e @ A @ e for e in vecs])
    order = np.argsort(vals, kind="stable")
    V = np.column_stack([vecs[k] for k in order])
    if np.linalg.det(V) < 0:
        V[:, 2] = -V[:, 2]
    return vals[order] * scale, V
