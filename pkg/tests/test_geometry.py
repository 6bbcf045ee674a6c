import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_euler import ScalarField, ValidationError, boundary_quadrature, c0_norm, c1_norm, make_grid
from annulus_euler.geometry import Annulus, polar_gradient, wrap_angle
from annulus_euler.io import read_field_csv, write_field_csv


def test_small_grid_contract():
    g = make_grid(8, 16)
    assert g.size == 128
    assert g.r[0] == 1.0 and g.r[-1] == 2.0
    assert np.allclose(np.diff(g.theta), 2 * np.pi / 16)
    assert g.nodes.shape == (128, 2)


@pytest.mark.parametrize("shape", [(8, 15), (7, 16), (8, 14), (8, 8)])
def test_grid_rejects_bad_counts(shape):
    with pytest.raises(ValidationError):
        make_grid(*shape)


def test_area_weights_sum_to_annulus_area():
    g = make_grid(64, 256)
    assert g.size == 16384
    assert abs(g.area_weights.sum() - 3 * np.pi) / (3 * np.pi) < 1e-10


def test_annulus_is_fixed():
    assert Annulus().area == pytest.approx(3 * np.pi)
    with pytest.raises(ValidationError):
        Annulus(1.0, 3.0)


def test_field_rejects_nan_and_wrong_size():
    g = make_grid(8, 16)
    with pytest.raises(ValidationError):
        ScalarField(g, np.full(g.shape, np.nan))
    with pytest.raises(ValidationError):
        ScalarField(g, np.zeros(100))


def test_c0_examples():
    g = make_grid(16, 64)
    assert c0_norm(ScalarField.zeros(g)) == 0.0
    assert c0_norm(ScalarField(g, g.X)) == pytest.approx(2.0, abs=1e-15)
    assert c0_norm(ScalarField.from_function(g, lambda R, TH: np.sin(TH))) == pytest.approx(1.0, abs=1e-15)


def test_c1_examples():
    g = make_grid(16, 64)
    assert c1_norm(ScalarField.zeros(g)) == 0.0
    assert c1_norm(ScalarField(g, g.X)) == pytest.approx(2.0, abs=1e-15)


def test_gradient_of_x1_is_unit():
    g = make_grid(32, 128)
    fr, ft = polar_gradient(g, g.X)
    # d_r x1 = cos, (1/r) d_theta x1 = -sin, exact for r, second-order for theta
    assert np.max(np.abs(fr - np.cos(g.TH))) < 1e-12
    assert np.max(np.abs(ft + np.sin(g.TH))) < 2e-3


def test_gradient_second_order_in_r():
    errs = []
    for n in (16, 32, 64):
        g = make_grid(n, 32)
        fr, _ = polar_gradient(g, g.R**3)
        errs.append(np.max(np.abs(fr - 3 * g.R**2)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_boundary_quadrature_examples():
    q1 = boundary_quadrature(1, 32)
    q2 = boundary_quadrature(2, 32)
    assert abs(q1.weights.sum() - 2 * np.pi) / (2 * np.pi) < 1e-14
    assert q2.weights.sum() == pytest.approx(4 * np.pi, rel=1e-14)
    assert abs(q1.integrate(q1.nodes[:, 0] ** 2) - np.pi) / np.pi < 1e-12
    assert np.allclose(np.linalg.norm(q1.normals, axis=1), 1.0)


def test_boundary_quadrature_rejects():
    with pytest.raises(ValidationError):
        boundary_quadrature(1, 8)
    with pytest.raises(ValidationError):
        boundary_quadrature(3, 32)


def test_field_csv_roundtrip(tmp_path):
    g = make_grid(8, 16)
    f = ScalarField.from_function(g, lambda R, TH: np.exp(R) * np.cos(3 * TH) / 7)
    path = tmp_path / "f.csv"
    write_field_csv(path, f)
    assert path.read_text().splitlines()[0] == "r,theta,value"
    back = read_field_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_wrap_angle_range():
    th = np.linspace(-20, 20, 1001)
    w = wrap_angle(th)
    assert np.all(w > -np.pi - 1e-15) and np.all(w <= np.pi)
    assert np.allclose(np.cos(w), np.cos(th)) and np.allclose(np.sin(w), np.sin(th))


@settings(max_examples=30, deadline=None)
@given(
    n_b=st.sampled_from([16, 32, 64]),
    circle=st.sampled_from([1, 2]),
    k=st.integers(0, 40),
    phase=st.floats(0, 2 * np.pi),
)
def test_trapezoid_exact_for_trig_polynomials(n_b, circle, k, phase):
    q = boundary_quadrature(circle, n_b)
    k = k % (n_b // 2)
    exact = 2 * np.pi * q.radius * np.cos(phase) if k == 0 else 0.0
    assert q.integrate(np.cos(k * q.theta + phase)) == pytest.approx(exact, rel=1e-12, abs=1e-12)


field_values = st.integers(0, 2**31 - 1).map(lambda s: np.random.default_rng(s).normal(size=(8, 16)))


@settings(max_examples=40, deadline=None)
@given(v=field_values, alpha=st.floats(-1e3, 1e3, allow_nan=False))
def test_norm_properties(v, alpha):
    g = make_grid(8, 16)
    f = ScalarField(g, v)
    assert c1_norm(f) >= c0_norm(f)
    assert c0_norm(f * alpha) == abs(alpha) * c0_norm(f)
    assert c1_norm(f * alpha) == pytest.approx(abs(alpha) * c1_norm(f), rel=1e-14, abs=0)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_sup_refinement_monotone(n):
    # sup of cos(theta - 0.3) * r on the annulus is 2
    f = lambda R, TH: R * np.cos(TH - 0.3)
    coarse = c0_norm(ScalarField.from_function(make_grid(n, 2 * n), f))
    fine = c0_norm(ScalarField.from_function(make_grid(2 * n, 4 * n), f))
    assert abs(fine - 2.0) <= abs(coarse - 2.0) + 1e-12
