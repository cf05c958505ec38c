import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import polar
from scipy.spatial.transform import Rotation

from bearing_pose.geom3 import (angle_axis, as_rotation, exp_so3, is_rotation, log_so3,
                                orthogonal_projector, pa, project_to_rotation, psi, random_rotation,
                                rotation_distance, skew, sym_eig3, vex)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(float, 3, elements=finite)
mat3 = arrays(float, (3, 3), elements=finite)


@st.composite
def unit_vectors(draw):
    v = draw(vec3)
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([0.0, 0.0, 1.0])
    return v / n


@st.composite
def rotations(draw):
    q = draw(arrays(float, 4, elements=st.floats(-1, 1)))
    if np.linalg.norm(q) < 1e-3:
        return np.eye(3)
    return Rotation.from_quat(q / np.linalg.norm(q)).as_matrix()


@given(vec3, vec3)
def test_skew_is_cross_product(v, y):
    assert np.allclose(skew(v) @ y, np.cross(v, y), atol=1e-12)


@given(vec3)
def test_vex_inverts_skew(v):
    S = skew(v)
    assert np.array_equal(S, -S.T)
    assert np.array_equal(vex(S), v)


def test_vex_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        vex(np.eye(3))


@given(mat3)
def test_psi_is_vex_of_antisymmetric_part(C):
    assert np.allclose(psi(C), vex(pa(C)), atol=1e-12)
    # psi only sees the antisymmetric part
    assert np.allclose(psi(C + C.T), 0.0, atol=1e-12)


@given(st.floats(-math.pi, math.pi), unit_vectors())
def test_rotation_distance_is_half_angle_sine(theta, v):
    R = angle_axis(theta, v)
    assert is_rotation(R)
    assert rotation_distance(R) == pytest.approx(abs(math.sin(theta / 2)), abs=1e-7)


@given(rotations())
def test_rotation_distance_range(R):
    assert 0.0 <= rotation_distance(R) <= 1.0


def test_rotation_distance_endpoints():
    assert rotation_distance(np.eye(3)) == 0.0
    assert rotation_distance(angle_axis(math.pi, np.array([0.0, 1.0, 0.0]))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rotation_distance(2.0 * np.eye(3))


def test_angle_axis_rejects_non_unit_axis():
    with pytest.raises(ValueError):
        angle_axis(0.3, np.array([1.0, 1.0, 0.0]))


@given(vec3)
def test_exp_matches_scipy(w):
    assert np.allclose(exp_so3(w), Rotation.from_rotvec(w).as_matrix(), atol=1e-12)


@given(arrays(float, 3, elements=st.floats(-5e-9, 5e-9)))
def test_exp_small_angle_branch(w):
    R = exp_so3(w)
    assert np.allclose(R, np.eye(3) + skew(w) + 0.5 * skew(w) @ skew(w), rtol=0, atol=1e-17)
    assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-15


def test_exp_continuous_across_small_angle_threshold():
    v = np.array([0.6, -0.0, 0.8])
    below, above = exp_so3((1e-8 - 1e-15) * v), exp_so3((1e-8 + 1e-15) * v)
    assert np.abs(below - above).max() < 1e-14


@given(st.floats(0.0, math.pi), unit_vectors())
def test_log_inverts_exp(theta, v):
    w = log_so3(angle_axis(theta, v))
    assert np.linalg.norm(w) == pytest.approx(theta, abs=1e-6)
    assert np.allclose(exp_so3(w), angle_axis(theta, v), atol=1e-6)


@given(vec3.filter(lambda x: np.linalg.norm(x) > 1e-3))
def test_projector_properties(x):
    P = orthogonal_projector(x)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P @ x, 0.0, atol=1e-10)
    assert np.trace(P) == pytest.approx(2.0)


def test_projector_rejects_zero():
    with pytest.raises(ValueError):
        orthogonal_projector(np.zeros(3))


def _well_conditioned(A) -> bool:
    with np.errstate(all="ignore"):  # subnormal entries trip the LU
        return np.linalg.det(A) > 1e-2


@given(mat3.filter(_well_conditioned))
def test_projection_matches_polar_factor(A):
    U, _ = polar(A)
    R = project_to_rotation(A)
    assert is_rotation(R)
    assert np.allclose(R, U, atol=1e-8)


def test_projection_rejects_reflections():
    with pytest.raises(ValueError):
        project_to_rotation(np.diag([1.0, 1.0, -1.0]))


def test_as_rotation_validates():
    R = angle_axis(0.4, np.array([0.0, 0.6, 0.8]))
    assert np.array_equal(as_rotation(R), R)
    with pytest.raises(ValueError):
        as_rotation(R + 1e-6)
    assert is_rotation(as_rotation(R + 1e-6, project=True))


def test_random_rotation_is_haar_on_average():
    rng = np.random.default_rng(0)
    Rs = np.array([random_rotation(rng) for _ in range(20000)])
    assert all(is_rotation(R) for R in Rs[:100])
    # Haar measure: E[R] = 0 and E[tr R] = 0
    assert np.abs(Rs.mean(axis=0)).max() < 0.02
    assert abs(np.trace(Rs, axis1=1, axis2=2).mean()) < 0.03


@given(mat3)
def test_sym_eig_matches_eigh(A):
    S = 0.5 * (A + A.T)
    w, V = sym_eig3(S)
    assert np.allclose(w, np.linalg.eigh(S)[0], atol=1e-8 * max(1.0, np.abs(S).max()))
    assert np.allclose(V.T @ V, np.eye(3), atol=1e-8)
    assert np.linalg.det(V) == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(S @ V, V * w, atol=1e-6 * max(1.0, np.abs(S).max()))


@pytest.mark.parametrize("diag", [(2.0, 2.0, 2.0), (0.0, 1.0, 1.0), (1.0, 1.0, 3.0)])
def test_sym_eig_repeated(diag):
    Q = Rotation.from_rotvec([0.3, -0.2, 0.5]).as_matrix()
    S = Q @ np.diag(diag) @ Q.T
    w, V = sym_eig3(S)
    assert np.allclose(w, sorted(diag), atol=1e-9)
    assert np.allclose(S @ V, V * w, atol=1e-9)
    assert np.linalg.det(V) == pytest.approx(1.0)


def test_sym_eig_two_bearings_at_right_angle_and_diagonal():
    # bearings (1,0,0) and (1,1,0)/sqrt2: eigenvalues 0 and 1 -+ 1/sqrt2
    b1 = np.array([1.0, 0.0, 0.0])
    b2 = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    w, _ = sym_eig3(np.outer(b1, b1) + np.outer(b2, b2))
    assert np.allclose(w, [0.0, 1 - 1 / math.sqrt(2), 1 + 1 / math.sqrt(2)], atol=1e-12)


@given(rotations(), st.floats(-1e6, 1e6).filter(lambda x: abs(x) > 1e-6), st.floats(-16, -2),
       st.floats(-3, 3))
def test_sym_eig_nearly_repeated(Q, lam, log_gap, other):
    w_true = np.array([lam, lam * (1 + 10 ** log_gap), lam + other * abs(lam)])
    S = Q @ np.diag(w_true) @ Q.T
    S = 0.5 * (S + S.T)
    w, V = sym_eig3(S)
    s = np.abs(S).max()
    assert np.allclose(w, np.sort(w_true), rtol=0, atol=1e-13 * s)
    assert np.abs(S @ V - V * w).max() <= 1e-13 * s
    assert np.allclose(V.T @ V, np.eye(3), atol=1e-13)


def test_sym_eig_zero_matrix():
    w, V = sym_eig3(np.zeros((3, 3)))
    assert np.array_equal(w, np.zeros(3))
    assert np.array_equal(V, np.eye(3))
