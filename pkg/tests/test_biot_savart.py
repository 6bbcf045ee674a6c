import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from annulus_euler import (
    ScalarField,
    ValidationError,
    VelocityReconstructor,
    c0_norm,
    eval_vhat,
    eval_vtilde,
    grid_velocity,
    make_grid,
    solve_velocity,
)
from annulus_euler.biot_savart import rotation_field
from annulus_euler.convergence import band_limited_field, bound_study, mode_field, radial_oracle

from .oracles import annulus_velocity


@pytest.fixture(scope="module")
def g64():
    return make_grid(64, 256)


def ray_points(radii, theta=0.7):
    return np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])


def test_vhat_examples():
    assert np.array_equal(eval_vhat(0.0, [[1.3, 0.4]]), [[0.0, 0.0]])
    assert np.allclose(eval_vhat(2 * np.pi, [[1.0, 0.0]]), [[0.0, 1.0]], atol=1e-15)
    assert np.allclose(eval_vhat(2 * np.pi, [[0.0, 2.0]]), [[-0.5, 0.0]], atol=1e-15)


@pytest.mark.parametrize("pt", [[0.5, 0.0], [2.5, 0.0], [0.0, 0.0]])
def test_vhat_rejects_outside(pt):
    with pytest.raises(ValidationError):
        eval_vhat(1.0, [pt])


def test_vtilde_zero_and_linear():
    g = make_grid(16, 64)
    pts = ray_points(np.linspace(1, 2, 7))
    assert np.array_equal(eval_vtilde(ScalarField.zeros(g), pts), np.zeros((7, 2)))
    w = band_limited_field(g, np.random.default_rng(3).normal(size=(3, 3, 2)))
    a = eval_vtilde(w * 2.0, pts)
    b = 2.0 * eval_vtilde(w, pts)
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(b))


def test_zero_vorticity_gives_rotation(g64):
    pts = ray_points(np.linspace(1, 2, 9), 1.1)
    s = solve_velocity(ScalarField.zeros(g64), 2 * np.pi, pts)
    assert np.array_equal(s.v_tilde, np.zeros_like(pts))
    assert np.max(np.abs(s.grad_phi)) < 1e-14
    assert np.max(np.abs(s.total - rotation_field(pts))) < 1e-14


def test_uniform_vorticity_radial_oracle(g64):
    radii = np.linspace(1, 2, 16)
    s = solve_velocity(ScalarField.from_function(g64, lambda R, TH: 1.0 + 0 * R), 0.0, ray_points(radii, 0.3))
    e_t = np.column_stack([-np.sin(0.3) * np.ones(16), np.cos(0.3) * np.ones(16)])
    u_t = np.einsum("pk,pk->p", s.total, e_t)
    exact = (radii**2 - 1) / (2 * radii)
    assert abs(u_t[0]) < 1e-3 * 0.75
    assert u_t[-1] == pytest.approx(0.75, rel=1e-3)
    assert np.max(np.abs(u_t - exact)) / np.max(exact) < 1e-3


@pytest.mark.parametrize("kind", ["uniform", "quadratic", "cosine"])
def test_radial_oracles_on_grid(kind, g64):
    w, u = radial_oracle(kind)
    gv = grid_velocity(ScalarField.from_function(g64, lambda R, TH: w(R)), 0.0)
    exact = u(g64.r)
    assert np.max(np.abs(gv.total_t - exact[:, None])) < 1e-3 * np.max(np.abs(exact))
    assert np.max(np.abs(gv.total_r)) < 1e-12


@pytest.mark.parametrize("m", [1, 3])
def test_mode_against_quadrature_oracle(m, g64):
    gfun = lambda s: np.sin(np.pi * (s - 1.0)) ** 2
    gv = grid_velocity(mode_field(g64, m), 0.0)
    idx = [0, 9, 21, 32, 47, 63]
    j = 37
    th = g64.theta[j]
    err = 0.0
    for i in idx:
        ur, ut = annulus_velocity(gfun, m, g64.r[i], th)
        err = max(err, abs(gv.total_r[i, j] - ur), abs(gv.total_t[i, j] - ut))
    assert err < 1e-4


def test_point_path_matches_grid_path(g64):
    w = mode_field(g64, 2)
    gv = grid_velocity(w, 2 * np.pi)
    sel = (slice(0, 64, 9), slice(0, 256, 37))
    pts = np.column_stack([g64.X[sel].ravel(), g64.Y[sel].ravel()])
    s = solve_velocity(w, 2 * np.pi, pts)
    ref = gv.cartesian("total").reshape(64, 256, 2)[sel].reshape(-1, 2)
    assert np.max(np.abs(s.total - ref)) < 1e-10


def test_decomposition_exact_and_linear(g64):
    w = band_limited_field(g64, np.random.default_rng(0).normal(size=(4, 5, 2)))
    pts = ray_points(np.linspace(1.0, 2.0, 11), 2.0)
    s = solve_velocity(w, 0.0, pts)
    assert np.array_equal(s.total, s.v_hat + s.v_tilde + s.grad_phi)
    s3 = solve_velocity(w * -3.0, 0.0, pts)
    assert np.max(np.abs(s3.total + 3.0 * s.total)) <= 1e-12 * np.max(np.abs(3.0 * s.total))


def test_boundary_condition_circulation_divergence():
    rng = np.random.default_rng(1)
    coeffs = rng.normal(size=(4, 5, 2))
    divs = []
    for n_r, n_t in ((32, 128), (64, 256), (128, 512)):
        g = make_grid(n_r, n_t)
        w = band_limited_field(g, coeffs)
        gv = grid_velocity(w, 2 * np.pi)
        c0 = c0_norm(w)
        assert gv.boundary_normal_residual() <= 1e-6 * max(1.0, c0)
        assert gv.circulation() == pytest.approx(2 * np.pi, rel=1e-8)
        divs.append(np.max(np.abs(gv.divergence())) / c0)
    assert divs[1] <= 1e-3
    assert divs[2] < divs[1] < divs[0]


def test_bound_ratio_stable_under_refinement():
    r = bound_study([(32, 128), (64, 256), (128, 512)], n_fields=20, seed=0)
    a = np.array(r["64x256"])
    b = np.array(r["128x512"])
    assert np.all(np.isfinite(a)) and np.all(b > 0)
    assert np.max(np.abs(a / b - 1)) < 0.05


def test_bitwise_determinism_across_batching():
    g = make_grid(16, 64)
    w = band_limited_field(g, np.random.default_rng(2).normal(size=(3, 3, 2)))
    pts = np.random.default_rng(5).uniform(-1, 1, size=(97, 2))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * np.linspace(1, 2, 97)[:, None]
    ref = eval_vtilde(w, pts, chunk_size=1)
    for cs, nj in ((7, 1), (128, 1), (16, 3)):
        assert np.array_equal(eval_vtilde(w, pts, chunk_size=cs, n_jobs=nj), ref)
    rev = eval_vtilde(w, pts[::-1], chunk_size=13)[::-1]
    assert np.allclose(rev, ref, rtol=1e-14, atol=1e-15)


def test_estimator_api():
    g = make_grid(16, 64)
    est = VelocityReconstructor(sigma1=1.0)
    assert est.get_params()["sigma1"] == 1.0
    with pytest.raises(NotFittedError):
        est.predict([[1.5, 0.0]])
    with pytest.raises(ValidationError):
        est.fit(np.zeros(g.shape))
    est.fit(ScalarField.zeros(g))
    assert est.neumann_residual_ < 1e-12
    assert est.predict([[1.5, 0.0]]).shape == (1, 2)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_grid_velocity_linear_property(seed, alpha):
    g = make_grid(16, 64)
    w = band_limited_field(g, np.random.default_rng(seed).normal(size=(3, 4, 2)))
    a = grid_velocity(w, 0.0)
    b = grid_velocity(w * alpha, 0.0)
    scale = np.max(np.abs(a.total_t)) * abs(alpha)
    assert np.max(np.abs(b.total_t - alpha * a.total_t)) <= 1e-12 * scale
    assert np.max(np.abs(b.total_r - alpha * a.total_r)) <= 1e-12 * scale
