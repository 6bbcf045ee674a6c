import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from annulus_euler import MomentSolver, NeumannData, Unsolvable, ValidationError, boundary_quadrature, make_grid, solve_moment
from annulus_euler.boundary_integral import (
    BoundaryDensity,
    assemble_kernel,
    eval_grad_phi,
    eval_potential,
    jump_coefficients,
    neumann_residual,
)


def quads(n1, n2=None):
    return boundary_quadrature(1, n1), boundary_quadrature(2, n2 or n1)


def band_data(n_b, seed, m_max=8):
    rng = np.random.default_rng(seed)
    q1, q2 = quads(n_b)
    vals = []
    for q in (q1, q2):
        c = rng.normal(size=(m_max, 2))
        vals.append(sum(c[m - 1, 0] * np.cos(m * q.theta) + c[m - 1, 1] * np.sin(m * q.theta) for m in range(1, m_max + 1)))
    return NeumannData(q1, q2, *vals)


def test_same_circle_offdiagonal_is_constant():
    q1, q2 = quads(32)
    A = assemble_kernel(q1, q2)
    block = A[:32, :32]
    off = block[~np.eye(32, dtype=bool)]
    assert np.allclose(off, q1.weights[0] / (4 * np.pi), rtol=1e-12, atol=0)


def test_diagonal_limit_on_outer_circle():
    q1, q2 = quads(32)
    A = assemble_kernel(q1, q2)
    assert np.allclose(np.diag(A)[32:], q2.weights / (8 * np.pi), rtol=1e-15)
    # the limit agrees with the kernel at shrinking separation on the radius-2 circle
    x = np.array([2.0, 0.0])
    vals = []
    for d in (1e-2, 1e-4, 1e-6):
        y = 2.0 * np.array([np.cos(d), np.sin(d)])
        vals.append((x - y) @ (x / 2) / ((x - y) @ (x - y)) / (2 * np.pi))
    # cancellation grows like eps / d^2
    for d, v in zip((1e-2, 1e-4, 1e-6), vals):
        assert v == pytest.approx(1 / (8 * np.pi), rel=1e-15 / d**2 + 1e-12)


def test_row_sums_stable_under_doubling():
    sums = []
    for n in (64, 128):
        q1, q2 = quads(n)
        A = assemble_kernel(q1, q2)
        rs = A.sum(axis=1)
        sums.append((rs[:n], rs[n:]))
    for coarse, fine in zip(*sums):
        assert np.ptp(coarse) < 1e-6 and np.ptp(fine) < 1e-6
    assert abs(sums[0][0][0] - sums[1][0][0]) < 1e-6
    assert abs(sums[0][1][0] - sums[1][1][0]) < 1e-6


def test_same_circle_blocks_are_circulant():
    q1, q2 = quads(24, 40)
    A = assemble_kernel(q1, q2)
    for block, n in ((A[:24, :24], 24), (A[24:, 24:], 40)):
        for p in range(n):
            assert np.allclose(np.roll(block[p], -p), block[0], rtol=1e-12, atol=1e-15)


def test_zero_data_gives_zero_density():
    q1, q2 = quads(32)
    d = solve_moment(assemble_kernel(q1, q2), NeumannData(q1, q2, np.zeros(32), np.zeros(32)))
    assert np.array_equal(d.f_values, np.zeros(64))
    assert d.residual == 0.0


def test_constant_outer_data_unsolvable():
    q1, q2 = quads(32)
    data = NeumannData(q1, q2, np.zeros(32), np.full(32, 0.3))
    assert not data.is_solvable()
    with pytest.raises(Unsolvable):
        solve_moment(assemble_kernel(q1, q2), data)
    with pytest.raises(Unsolvable):
        MomentSolver(32).solve(data)


def test_verbatim_sign_accepts_constant_outer_data():
    # with -1/2 on the inner circle the mode-0 range contains (0, c)
    q1, q2 = quads(32)
    data = NeumannData(q1, q2, np.zeros(32), np.full(32, 0.3))
    d = solve_moment(assemble_kernel(q1, q2), data, convention="verbatim")
    assert d.residual < 1e-10


@pytest.mark.parametrize("convention", ["verbatim", "interior"])
def test_manufactured_density_recovered(convention):
    n, F = 128, 4
    qf1, qf2 = quads(n * F)
    f0 = np.concatenate([np.cos(qf1.theta), np.zeros(n * F)])
    L = assemble_kernel(qf1, qf2) + np.diag(jump_coefficients(n * F, n * F, convention))
    rhs = L @ f0
    q1, q2 = quads(n)
    data = NeumannData(q1, q2, rhs[: n * F][::F], rhs[n * F :][::F])
    d = solve_moment(assemble_kernel(q1, q2), data, convention=convention)
    assert np.max(np.abs(d.f1 - np.cos(q1.theta))) < 1e-4
    assert np.max(np.abs(d.f2)) < 1e-4
    assert d.residual <= 1e-10 * np.linalg.norm(data.values)


def test_bad_inputs():
    q1, q2 = quads(32)
    with pytest.raises(ValidationError):
        NeumannData(q1, q2, np.zeros(31), np.zeros(32))
    with pytest.raises(ValidationError):
        NeumannData(q1, q2, np.full(32, np.nan), np.zeros(32))
    with pytest.raises(ValidationError):
        jump_coefficients(4, 4, "outward")


def test_grad_phi_examples():
    q1, q2 = quads(64)
    zero = BoundaryDensity(q1, q2, np.zeros(128))
    pts = np.array([[1.5, 0.0], [0.3, 1.2], [-1.1, -1.1]])
    assert np.array_equal(eval_grad_phi(zero, pts), np.zeros((3, 2)))
    unit = BoundaryDensity(q1, q2, np.concatenate([np.ones(64), np.zeros(64)]))
    g = eval_grad_phi(unit, pts)
    r2 = np.sum(pts**2, axis=1)
    assert np.allclose(g, pts / r2[:, None], atol=1e-13)
    assert np.linalg.norm(g[0]) == pytest.approx(2 / 3, rel=1e-13)
    f = BoundaryDensity(q1, q2, np.random.default_rng(0).normal(size=128))
    assert np.allclose(eval_grad_phi(f.scaled(2.0), pts), 2 * eval_grad_phi(f, pts), rtol=1e-13, atol=1e-13)


def test_spectral_and_direct_evaluation_agree_away_from_boundary():
    q1, q2 = quads(64)
    f = BoundaryDensity(q1, q2, np.concatenate([np.cos(2 * q1.theta), np.sin(3 * q2.theta)]))
    pts = np.array([[1.5, 0.1], [0.0, -1.4], [1.0, 1.0]])
    assert np.allclose(eval_grad_phi(f, pts, method="direct"), eval_grad_phi(f, pts, method="spectral"), atol=1e-12)


@pytest.mark.parametrize("n_b", [64, 128, 256])
def test_end_to_end_neumann_residual(n_b):
    data = band_data(n_b, seed=11)
    assert data.is_solvable()
    d = MomentSolver(n_b, convention="interior").solve(data)
    assert neumann_residual(d, data) <= 1e-4 * np.max(np.abs(data.values))


def test_verbatim_sign_fails_neumann_check():
    data = band_data(128, seed=11)
    d = solve_moment(assemble_kernel(data.quad1, data.quad2), data, convention="verbatim")
    assert neumann_residual(d, data) > 1e-2 * np.max(np.abs(data.values))


def test_moment_bound_stable():
    ratios = []
    for n_b in (64, 128, 256):
        data = band_data(n_b, seed=4, m_max=5)
        d = MomentSolver(n_b).solve(data)
        ratios.append(np.max(np.abs(d.f_values)) / np.max(np.abs(data.values)))
    assert max(ratios) / min(ratios) - 1 < 0.05


def test_potential_is_harmonic():
    # fourth-order differences in r, spectral in theta
    g = make_grid(64, 256)
    data = band_data(256, seed=2, m_max=4)
    d = MomentSolver(256).solve(data)
    phi = eval_potential(d, g.nodes).reshape(g.shape)
    h, r = g.dr, g.r[2:-2, None]
    m = np.fft.rfftfreq(g.n_theta, 1.0 / g.n_theta)
    p_tt = np.fft.irfft(-(m**2) * np.fft.rfft(phi, axis=1), n=g.n_theta, axis=1)[2:-2]
    p_rr = (-phi[4:] + 16 * phi[3:-1] - 30 * phi[2:-2] + 16 * phi[1:-3] - phi[:-4]) / (12 * h * h)
    p_r = (-phi[4:] + 8 * phi[3:-1] - 8 * phi[1:-3] + phi[:-4]) / (12 * h)
    lap = p_rr + p_r / r + p_tt / r**2
    assert np.max(np.abs(lap)) <= 1e-4 * np.max(np.abs(d.f_values))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(-10, 10))
def test_solver_linear_in_data(seed, alpha):
    data = band_data(32, seed, m_max=6)
    solver = MomentSolver(32)
    a = solver.solve(data).f_values
    b = solver.solve(NeumannData(data.quad1, data.quad2, alpha * data.values1, alpha * data.values2)).f_values
    assert np.allclose(b, alpha * a, rtol=1e-12, atol=1e-12 * np.max(np.abs(a)) * max(1, abs(alpha)))


@settings(max_examples=15, deadline=None)
@given(c1=st.floats(-5, 5), c2=st.floats(-5, 5))
def test_unbalanced_flux_is_unsolvable(c1, c2):
    # circle-constant data is reachable only along (a, a/2), the normal derivative of a ln r
    assume(abs(c1 - 2 * c2) > 1e-3)
    q1, q2 = quads(32)
    data = NeumannData(q1, q2, np.full(32, c1), np.full(32, c2))
    assert not data.is_solvable()
    with pytest.raises(Unsolvable):
        MomentSolver(32).solve(data)


def test_log_potential_data_is_solvable():
    q1, q2 = quads(64)
    d = MomentSolver(64).solve(NeumannData(q1, q2, np.full(64, 0.8), np.full(64, 0.4)))
    pts = np.array([[1.25, 0.0], [0.0, 1.75]])
    r2 = np.sum(pts**2, axis=1)
    assert np.allclose(eval_grad_phi(d, pts), 0.8 * pts / r2[:, None], atol=1e-12)
