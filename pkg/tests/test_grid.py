import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessiasol.errors import DomainError, GridError
from hessiasol.grid import (
    BAND,
    EXTERIOR,
    INTERIOR,
    Grid,
    GridField,
    ball,
    box,
    complex_hessian,
    defining_function,
    harmonic_extend,
    hessian_from_values,
    mean_value_defect,
    pseudoconvexity_witness,
    read_csv,
    real_hessian,
    write_csv,
)


def r2(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


@pytest.fixture(scope="module")
def g1():
    return Grid(ball(1), 1 / 16)


@pytest.fixture(scope="module")
def g2():
    return Grid(ball(2), 1 / 4)


def test_domain_validation():
    with pytest.raises(DomainError):
        ball(1, radius=-1.0)
    with pytest.raises(DomainError):
        box(1, (1.0, 2.0, 3.0))
    with pytest.raises(DomainError):
        ball(2, center=(0.0,))
    assert box(2, 0.5).half_widths == (0.5,) * 4


def test_grid_rejects_coarse_spacing():
    with pytest.raises(GridError):
        Grid(ball(1), 1.5)
    with pytest.raises(GridError):
        Grid(ball(1), 0.0)


def test_classification(g1):
    x = g1.coords()
    inside = np.sum(x**2, axis=-1) < 1
    assert np.array_equal(g1.node_class == INTERIOR, inside)
    # band nodes are outside or on the sphere and adjacent to the interior
    assert np.all(g1.depth(g1.band) <= 1e-12)
    assert np.all(g1.depth(g1.band) > -2 * g1.h)
    assert set(np.unique(g1.node_class)) == {INTERIOR, BAND, EXTERIOR}


def test_index_of_roundtrip(g2):
    idx = np.array([0, 17, g2.size - 1])
    assert np.array_equal(g2.index_of(g2.coords(idx)), idx)
    with pytest.raises(GridError):
        g2.index_of(np.full(4, 10.0))


@pytest.mark.parametrize("grid_name", ["g1", "g2"])
def test_hessian_of_r2_is_identity(grid_name, request):
    g = request.getfixturevalue(grid_name)
    H = complex_hessian(g.sample(r2)).H
    assert np.allclose(H, np.eye(g.n), atol=1e-12)


def test_pluriharmonic_fields_have_zero_hessian(g2):
    for f in (lambda z: (z[:, 0] ** 2).real, lambda z: (z[:, 0] * z[:, 1]).imag, lambda z: z[:, 0].real * z[:, 0].imag):
        H = complex_hessian(g2.sample(f)).H
        assert np.allclose(H, 0.0, atol=1e-12)


def test_mixed_hermitian_entry(g2):
    # u = Re(z_1 conj z_2) has u_{1 2bar} = 1/2
    H = complex_hessian(g2.sample(lambda z: (z[:, 0] * np.conj(z[:, 1])).real)).H
    assert np.allclose(H[:, 0, 1], 0.5) and np.allclose(H[:, 1, 0], 0.5)
    assert np.allclose(H[:, 0, 0], 0.0)


def test_complex_gradient(g1):
    # u = x^2 + 3y -> du/dz = (u_x - i u_y) / 2
    D = complex_hessian(g1.sample(lambda z: z[:, 0].real ** 2 + 3 * z[:, 0].imag)).Du
    x = g1.coords(g1.interior)[:, 0]
    assert np.allclose(D[:, 0], 0.5 * (2 * x - 3j))


def test_real_hessian_quadratic(g1):
    u = g1.sample(lambda z: z[:, 0].real ** 2 - 2 * z[:, 0].real * z[:, 0].imag)
    D = real_hessian(u)
    assert np.allclose(D, [[2.0, -2.0], [-2.0, 0.0]])
    assert np.allclose(hessian_from_values(g1, u.values), complex_hessian(u).H)


def test_defining_function(g1):
    rho = defining_function(g1)
    assert rho.values[g1.index_of(np.zeros(2))] == pytest.approx(-0.5)
    H = complex_hessian(rho).H
    assert np.allclose(H, 0.5)
    rb = defining_function(Grid(box(1, 0.5), 1 / 8))
    assert "caveat" in rb.meta
    assert np.all(rb.interior_values() < 0)


def test_pseudoconvexity_witness(g1):
    w = pseudoconvexity_witness(g1)
    assert np.all(w.interior_values() < 0)


def test_gridfield_read_only_and_arithmetic(g1):
    u = g1.sample(r2)
    with pytest.raises(ValueError):
        u.values[0] = 1.0
    v = u + 1.0
    assert np.allclose((v - u).values, 1.0)
    w = u.with_interior(np.zeros(g1.interior.size))
    assert np.all(w.interior_values() == 0) and np.array_equal(w.band_values(), u.band_values())
    with pytest.raises(GridError):
        GridField(g1, np.zeros(3))


@pytest.mark.parametrize(
    "phi, exact",
    [
        (lambda z: np.full(z.shape[0], 2.5), lambda z: np.full(z.shape[0], 2.5)),
        (lambda z: z[:, 0].real, lambda z: z[:, 0].real),
        (lambda z: (z[:, 0] ** 2).real + z[:, 0].imag, lambda z: (z[:, 0] ** 2).real + z[:, 0].imag),
    ],
)
def test_harmonic_extend_reproduces_harmonic_data(g1, phi, exact):
    u = harmonic_extend(g1, phi, tol=1e-11)
    assert np.max(np.abs(u.values[g1.closure] - g1.sample(exact).values[g1.closure])) < 1e-8
    assert np.max(np.abs(mean_value_defect(u))) <= 1e-11


def test_harmonic_extend_constant_trace():
    g = Grid(ball(1), 1 / 8)
    u = harmonic_extend(g, lambda z: np.ones(z.shape[0]))
    assert np.allclose(u.interior_values(), 1.0)


def test_csv_roundtrip(tmp_path, g2):
    u = g2.sample(lambda z: np.sin(r2(z)) + z[:, 1].imag / 3)
    p = tmp_path / "u.csv"
    write_csv(u, p)
    back = read_csv(p, g2.domain)
    assert back.grid == g2
    assert np.array_equal(back.values, u.values)
    assert p.read_text().splitlines()[0] == "x_1,y_1,x_2,y_2,value,class"


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1, 1), st.floats(-1, 1))
def test_hessian_exact_on_random_quadratics(a, b, c):
    g = Grid(ball(1), 1 / 8)
    u = g.sample(lambda z: a * z[:, 0].real ** 2 + b * z[:, 0].real * z[:, 0].imag + c * z[:, 0].imag ** 2)
    H = complex_hessian(u).H
    assert np.allclose(H[:, 0, 0].real, (2 * a + 2 * c) / 4)
