import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import fft, integrate

from qgstorm import spectral
from qgstorm.spectral import PI, Grid

# rounded so squared norms never underflow
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False).map(lambda v: round(v, 6))


def field_pair(M, N):
    return st.tuples(arrays(float, (M, N), elements=finite), arrays(float, (M, N), elements=finite))


@pytest.mark.parametrize("m,n,nu,expected", [
    (1, 1, 1.0, -2 * PI**2),
    (1, 1, 0.5, -PI**2),
    (2, 3, 1.0, -13 * PI**2),
])
def test_eigenvalue_examples(m, n, nu, expected):
    assert spectral.eigenvalue(m, n, nu) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("args", [(0, 1, 1.0), (1, 1, 0.0), (1, 1, -1.0)])
def test_eigenvalue_rejects(args):
    with pytest.raises(ValueError):
        spectral.eigenvalue(*args)


def test_basis_eval_points():
    assert spectral.basis_eval(1, 1, 0.5, 0.5) == pytest.approx(2.0, abs=1e-15)
    assert spectral.basis_eval(1, 1, 0.0, 0.3) == 0.0
    with pytest.raises(ValueError):
        spectral.basis_eval(1, 1, 1.5, 0.3)


@pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (5, 1)])
def test_basis_normalized_by_quadrature(m, n):
    val, _ = integrate.dblquad(lambda y, x: spectral.basis_eval(m, n, x, y) ** 2, 0, 1, 0, 1)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_roundtrip_single_mode_and_zero():
    f = spectral.mode_field(8, 8, 1, 1)
    for grid in (Grid(8, 8), Grid(12, 12), Grid(17, 9)):
        tr = spectral.transform(8, 8, grid)
        assert np.abs(tr.to_spectral(tr.to_physical(f)) - f).max() < 1e-12
        assert not tr.to_spectral(tr.to_physical(np.zeros((8, 8)))).any()


def test_roundtrip_random_against_direct_summation(rng):
    f = rng.standard_normal((8, 8))
    grid = Grid(16, 16)
    vals = spectral.to_physical(f, grid)
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    direct = spectral.evaluate(f, X.ravel(), Y.ravel()).reshape(vals.shape)
    assert np.abs(vals - direct).max() < 1e-12
    assert np.abs(spectral.to_spectral(vals, (8, 8)) - f).max() < 1e-10


def test_transform_matches_scipy_dst(rng):
    f = rng.standard_normal((12, 12))
    vals = spectral.to_physical(f, Grid(12, 12))
    # scipy's DST-I is 2 sum_k x_k sin(pi (j+1)(k+1)/(K+1))
    ref = 0.5 * fft.dstn(f, type=1)
    assert np.allclose(vals, ref, atol=1e-12)


def test_transform_rejects_coarse_grid():
    with pytest.raises(ValueError):
        spectral.Transform(8, 8, Grid(6, 8))


def test_dealias_grid():
    g = Grid.for_modes(32, 32)
    assert (g.Kx, g.Ky) == (48, 48)
    assert g.is_dealiasing(32, 32)
    assert not Grid(32, 32).is_dealiasing(32, 32)


def test_laplacian_examples(rng):
    w = spectral.mode_field(4, 4, 1, 1)
    assert np.allclose(spectral.invert_laplacian(w), -w / (2 * PI**2), atol=1e-16)
    psi = spectral.mode_field(4, 4, 2, 3)
    assert np.allclose(spectral.laplacian(psi), -13 * PI**2 * psi)
    f = rng.standard_normal((10, 7))
    assert np.abs(spectral.laplacian(spectral.invert_laplacian(f)) - f).max() < 1e-13
    assert np.abs(spectral.invert_laplacian(spectral.laplacian(f)) - f).max() < 1e-13


def test_gradient_examples():
    f = spectral.mode_field(4, 4, 1, 1)
    fx, _ = spectral.evaluate_gradient(f, [0.5, 0.0], [0.5, 0.5])
    assert fx[0] == pytest.approx(0.0, abs=1e-14)
    assert fx[1] == pytest.approx(2 * PI, rel=1e-14)

    def integrand(y, x):
        gx, gy = spectral.evaluate_gradient(f, x, y)
        return float(gx[0] ** 2 + gy[0] ** 2)
    energy, _ = integrate.dblquad(integrand, 0, 1, 0, 1)
    assert energy == pytest.approx(2 * PI**2, rel=1e-9)


def test_gradient_matches_direct_summation(rng):
    f = rng.standard_normal((6, 5))
    grid = Grid(11, 9)
    gx, gy = spectral.gradient(f, grid)
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    ex, ey = spectral.evaluate_gradient(f, X.ravel(), Y.ravel())
    assert np.allclose(gx.ravel(), ex, atol=1e-12)
    assert np.allclose(gy.ravel(), ey, atol=1e-12)


def test_norms_single_mode():
    l2, h1, sup = spectral.norms(spectral.mode_field(8, 8, 1, 1))
    assert l2 == pytest.approx(1.0)
    assert h1 == pytest.approx(PI * math.sqrt(2))
    assert sup == pytest.approx(2.0)


def test_sup_estimate_bounds_true_sup(rng):
    f = rng.standard_normal((6, 6))
    x = np.linspace(0, 1, 201)
    X, Y = np.meshgrid(x, x, indexing="ij")
    true_sup = np.abs(spectral.evaluate(f, X.ravel(), Y.ravel())).max()
    assert true_sup <= spectral.sup_estimate(f)


def _symbolic_jacobian_coeffs(M, N):
    x, y = sp.symbols("x y")
    phi = lambda m, n: 2 * sp.sin(m * sp.pi * x) * sp.sin(n * sp.pi * y)  # noqa: E731
    psi, om = phi(1, 1), phi(1, 2)
    J = sp.expand(sp.diff(psi, x) * sp.diff(om, y) - sp.diff(psi, y) * sp.diff(om, x))
    out = np.zeros((M, N))
    for p in range(1, M + 1):
        for q in range(1, N + 1):
            val = sp.integrate(J * phi(p, q), (x, 0, 1), (y, 0, 1))
            out[p - 1, q - 1] = float(val)
    return out


def test_jacobian_two_mode_symbolic_oracle():
    M = N = 4
    ref = _symbolic_jacobian_coeffs(M, N)
    got = spectral.jacobian(spectral.mode_field(M, N, 1, 1), spectral.mode_field(M, N, 1, 2))
    assert np.abs(ref).max() > 1.0
    assert np.abs(got - ref).max() < 1e-10


def test_jacobian_is_exact_galerkin_projection(rng):
    # a much finer grid resolves the same projection
    psi, om = rng.standard_normal((6, 6)), rng.standard_normal((6, 6))
    coarse = spectral.jacobian(psi, om)
    fine = spectral.jacobian(psi, om, Grid(40, 40))
    assert np.abs(coarse - fine).max() < 1e-10 * np.abs(fine).max()


@given(field_pair(6, 5), st.floats(-3, 3))
def test_jacobian_antisymmetry(pair, c):
    f, g = pair
    scale = max(1.0, np.abs(f).max() * np.abs(g).max())
    assert np.abs(spectral.jacobian(f, f)).max() <= 1e-10 * scale
    assert np.abs(spectral.jacobian(f, c * f)).max() <= 1e-10 * scale * max(1, abs(c))
    assert np.allclose(spectral.jacobian(f, g), -spectral.jacobian(g, f), atol=1e-10 * scale)


@given(field_pair(8, 8))
def test_jacobian_orthogonality(pair):
    psi, om = pair
    J = spectral.jacobian(psi, om)
    a, b = np.linalg.norm(psi), np.linalg.norm(om)
    assert abs(spectral.inner(J, om)) <= 1e-9 * a * b * b
    assert abs(spectral.inner(J, psi)) <= 1e-9 * a * b * a


def test_x_derivative_matrix_vs_quadrature():
    M = 6
    D = spectral.x_derivative_matrix(M)
    for p in range(1, M + 1):
        for m in range(1, M + 1):
            val, _ = integrate.quad(
                lambda x: 2 * m * PI * math.cos(m * PI * x) * math.sin(p * PI * x), 0, 1)
            assert D[p - 1, m - 1] == pytest.approx(val, abs=1e-12)


def test_project_dx_matches_grid_projection_on_fine_grid(rng):
    f = rng.standard_normal((6, 6))
    grid = Grid(2048, 6)
    fx, _ = spectral.gradient(f, grid)
    approx = spectral.to_spectral(fx, (6, 6))
    assert np.abs(spectral.project_dx(f) - approx).max() < 1e-2
