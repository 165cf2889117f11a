import numpy as np
import pytest

from hessiasol.errors import DomainError
from hessiasol.grid import Grid, ball
from hessiasol.regularize import (
    ConvolutionParams,
    abp_check,
    ball_volume,
    contact_set,
    inf_convolution,
    sup_convolution,
)


def bump(z):
    x = np.concatenate([z.real, z.imag], axis=-1)
    return np.sin(3 * x[:, 0]) * np.cos(2 * x[:, 1]) + 0.3 * np.abs(x[:, 0] - 0.2)


@pytest.fixture(scope="module")
def g16():
    return Grid(ball(1), 1 / 16)


def test_params_validation():
    with pytest.raises(DomainError):
        ConvolutionParams(0.0, 1.0)
    with pytest.raises(DomainError):
        ConvolutionParams(1.0, -1.0)
    p = ConvolutionParams(0.5, 2.0)
    assert p.penalty == 4.0
    assert p.semiconvexity_constants() == {"penalty_consistent": 8.0, "as_displayed": 16.0}


def test_from_fields_uses_oscillation(g16):
    u = g16.sample(bump)
    p = ConvolutionParams.from_fields(0.1, u, u + 5.0)
    assert p.C0 == pytest.approx(np.ptp(u.values[g16.closure]))


def test_constant_is_fixed(g16):
    u = g16.sample(lambda z: np.full(z.shape[0], 1.25))
    assert np.allclose(sup_convolution(u, ConvolutionParams(0.1, 1.0)).values[g16.closure], 1.25)


def test_separable_matches_bruteforce():
    g = Grid(ball(1), 1 / 8)
    u = g.sample(bump)
    p = ConvolutionParams.from_fields(0.05, u)
    a, ia = sup_convolution(u, p, return_argmax=True)
    b, ib = sup_convolution(u, p, return_argmax=True, method="brute")
    assert np.allclose(a.values, b.values, atol=1e-14)
    # tied maximizers may differ, but both must realize the max
    x = g.coords()
    val = lambda i: u.values[i] - p.penalty * np.sum((x[i] - x) ** 2, axis=1)
    assert np.allclose(val(ia)[g.closure], val(ib)[g.closure], atol=1e-14)


def test_linear_closed_form():
    h = 1 / 32
    g = Grid(ball(1), h)
    a = np.array([0.5, 0.25])
    C0, eps = 1.0, 0.25
    u = g.sample(lambda z: a[0] * z[:, 0].real + a[1] * z[:, 0].imag)
    ue, arg = sup_convolution(u, ConvolutionParams(eps, C0), return_argmax=True)
    x = g.coords()
    shift = eps * a / (2 * C0)  # (2h, h): a lattice vector
    target = g.domain.inside(x + shift) & (g.node_class != 2)
    exact = u.values + eps * a @ a / (4 * C0)
    assert target.sum() > 100
    assert np.max(np.abs(ue.values[target] - exact[target])) < 1e-8
    assert np.allclose(x[arg[target]], x[target] + shift)


@pytest.mark.parametrize("eps", [0.02, 0.05, 0.1])
def test_dominates_and_monotone(g16, eps):
    u = g16.sample(bump)
    p1 = ConvolutionParams.from_fields(eps, u)
    p2 = ConvolutionParams(2 * eps, p1.C0)
    u1 = sup_convolution(u, p1).values[g16.closure]
    u2 = sup_convolution(u, p2).values[g16.closure]
    assert np.all(u1 >= u.values[g16.closure])
    assert np.all(u2 >= u1)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_lipschitz_and_semiconvexity(g16, eps):
    u = g16.sample(bump)
    p = ConvolutionParams.from_fields(eps, u)
    ue = sup_convolution(u, p)
    h = g16.h
    grads = [np.abs(ue.values[pp] - ue.values[mm]) / h for pp, mm in g16._neighbours["axial"]]
    lip = max(float(np.max(d)) for d in grads)
    assert lip <= 2 * p.C0 / eps + 2 * p.penalty * h
    # penalty-consistent reading: maximizers lie within sqrt(eps) of the node
    assert lip <= 2 * p.penalty * np.sqrt(eps) + 2 * p.penalty * h
    # u^eps + penalty |x|^2 is a max of affine functions, so every lattice
    # second difference (axes and diagonals) is >= -2 C0/eps
    k = p.semiconvexity_constants()["penalty_consistent"]
    v, i, s = ue.values, g16.interior, g16.strides
    dirs = [s[0], s[1], s[0] + s[1], s[0] - s[1]]
    for d, step in zip(dirs, [h, h, np.sqrt(2) * h, np.sqrt(2) * h]):
        ok = np.isfinite(v[i + d]) & np.isfinite(v[i - d])
        dd = (v[i + d] + v[i - d] - 2 * v[i])[ok] / step**2
        assert dd.min() >= -k - 1e-9


def test_maximizer_distance(g16):
    u = g16.sample(bump)
    eps = 0.1
    p = ConvolutionParams.from_fields(eps, u)
    _, arg = sup_convolution(u, p, return_argmax=True)
    x = g16.coords()
    d = np.linalg.norm(x[arg] - x, axis=1)[g16.closure]
    assert np.all(d <= np.sqrt(eps) + g16.h)


def test_inf_is_mirror(g16):
    u = g16.sample(bump)
    p = ConvolutionParams.from_fields(0.1, u)
    neg = u.with_values(-u.values)
    assert np.array_equal(inf_convolution(neg, p).values, -sup_convolution(u, p).values)


@pytest.fixture(scope="module")
def g64():
    return Grid(ball(1), 1 / 64)


def test_contact_set_concave_paraboloid(g64):
    u = g64.sample(lambda z: 1 - np.abs(z[:, 0]) ** 2)
    cs = contact_set(u, 0.4)
    assert cs.measure == pytest.approx(np.pi * 0.2**2, rel=0.15)
    assert np.all(np.isin(cs.members, g64.interior))


def test_contact_set_linear_and_convex():
    g = Grid(ball(1), 1 / 16)
    lin = g.sample(lambda z: 0.3 * z[:, 0].real - 0.1 * z[:, 0].imag)
    assert contact_set(lin, 0.4).count == g.interior.size
    cvx = g.sample(lambda z: np.abs(z[:, 0]) ** 2)
    assert contact_set(cvx, 0.5).count == 0
    with pytest.raises(DomainError):
        contact_set(cvx, 0.0)


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(np.pi)
    assert ball_volume(4) == pytest.approx(np.pi**2 / 2)


def test_abp_paraboloid():
    g = Grid(ball(1), 1 / 32)
    rep = abp_check(g.sample(lambda z: 1 - np.abs(z[:, 0]) ** 2), k=1.0)
    assert rep.delta0 == pytest.approx(0.5, abs=0.05)
    assert rep.semiconvex and rep.bound_ok
    ratios = [e["ratio"] for e in rep.entries]
    assert min(ratios) > 0.5 * np.pi / 4
    assert "bound_ok" in rep.to_dict()


def test_abp_constant_raises():
    g = Grid(ball(1), 1 / 16)
    with pytest.raises(DomainError):
        abp_check(g.sample(lambda z: np.ones(z.shape[0])), k=1.0)


def test_abp_cone_flags_vacuous():
    g = Grid(ball(1), 1 / 32)
    rep = abp_check(g.sample(lambda z: 1 - np.abs(z[:, 0])), k=1.0)
    assert rep.delta0 == pytest.approx(0.5, abs=0.05)
    assert not rep.semiconvex and not rep.bound_ok
