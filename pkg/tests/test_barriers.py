import numpy as np
import pytest

from hessiasol.barriers import (
    boundary_net,
    build_bundle,
    global_barrier,
    holder_barrier,
    holder_constant_at,
)
from hessiasol.errors import DomainError
from hessiasol.grid import Grid, ball, box, defining_function
from hessiasol.viscosity import hessian_op, lagrangian_op, monge_ampere, quotient_op


def r2(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


def zero(z):
    return np.zeros(z.shape[0])


@pytest.fixture(scope="module")
def g1():
    return Grid(ball(1), 1 / 16)


def test_bundle_zero_data(g1):
    b = build_bundle(monge_ampere(1, 1.0), g1, zero)
    assert b.A1 == 1.0
    assert b.certificates["subsolution"].passed and b.certificates["supersolution"].passed
    assert b.ordered
    rho = defining_function(g1).values
    rho_hat = rho - max(rho[g1.band].max(), 0.0)
    inner = g1.interior
    assert np.allclose(b.subsolution.values[inner], (b.A1 + b.A2) * rho_hat[inner])
    # degree-one form: A2 lambda(H rho) = A2/2 must reach psi = 1
    assert b.A2 == 2.0


def test_bundle_psi_scaling(g1):
    small = build_bundle(monge_ampere(1, 1.0), g1, zero)
    big = build_bundle(monge_ampere(1, 1e6), g1, zero)
    assert big.certificates["subsolution"].passed
    assert big.A2 / small.A2 == pytest.approx(1e6, rel=1.0)
    step = next(entry for entry in big.log if entry["search"] == "A2")["steps"]
    assert step[-1]["ok"] and not step[-2]["ok"]


@pytest.mark.parametrize(
    "op",
    [monge_ampere(2, 1.0), quotient_op(2, 2, 1, 1.0), hessian_op(2, 1, 2.0), lagrangian_op(2, np.pi / 2)],
    ids=["ma", "quotient", "hessian", "phase"],
)
def test_bundle_operators_n2(op):
    g = Grid(ball(2), 1 / 4)
    b = build_bundle(op, g, r2)
    assert b.certificates["subsolution"].passed
    assert b.certificates["supersolution"].passed
    assert b.ordered
    assert np.allclose(b.subsolution.band_values() <= b.supersolution.band_values() + 1e-12, True)
    assert set(b.to_dict()) >= {"A1", "A2", "ordered", "certificates", "log"}


def test_holder_constant_at(g1):
    xi = np.array([1.0 + 0j])
    phi = lambda z: np.abs(z[:, 0] - 1.0) ** 0.5
    assert holder_constant_at(g1, phi, xi, 0.25) == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_holder_barrier_n1(g1, alpha):
    xi = np.array([1.0 + 0j])
    phi = lambda z: np.abs(z[:, 0] - 1.0) ** (2 * alpha)
    hb = holder_barrier(xi, alpha, monge_ampere(1, 1.0), g1, phi)
    assert hb.checks["gamma_admissible"] and hb.checks["band_ok"]
    assert hb.checks["boundary_layer_margin"] >= -g1.h
    z = g1.complex_coords(g1.closure)
    assert np.allclose(hb.evaluate(z) + hb.phi_xi, hb.field.values[g1.closure])
    assert hb.field.values[g1.index_of(np.array([0.0, 0.0]))] < hb.phi_xi


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_holder_barrier_n2_reports_layer(alpha):
    g = Grid(ball(2), 1 / 8)
    xi = np.array([1.0 + 0j, 0j])
    phi = lambda z: np.sum(np.abs(z - xi) ** 2, axis=1) ** alpha
    hb = holder_barrier(xi, alpha, monge_ampere(2, 1.0), g, phi)
    assert hb.checks["gamma_margin"] > 0
    assert hb.checks["boundary_layer_nodes"] > 0
    assert hb.to_dict()["alpha"] == alpha


def test_holder_barrier_validation(g1):
    with pytest.raises(DomainError):
        holder_barrier(np.array([0.5 + 0j]), 0.5, monge_ampere(1), g1, zero)
    with pytest.raises(DomainError):
        holder_barrier(np.array([1.0 + 0j]), 1.5, monge_ampere(1), g1, zero)


@pytest.mark.parametrize("n, spacing", [(1, 0.1), (2, 0.5)])
def test_boundary_net_covers_sphere(n, spacing):
    net = boundary_net(ball(n), spacing)
    assert np.allclose(r2(net), 1.0)
    rng = np.random.default_rng(0)
    p = rng.normal(size=(500, 2 * n))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    pc = p[:, 0::2] + 1j * p[:, 1::2]
    d = np.min(np.sqrt(r2(pc[:, None, :] - net[None, :, :])), axis=1)
    assert d.max() <= spacing
    with pytest.raises(DomainError):
        boundary_net(box(1, 1.0), 0.1)


def test_global_barrier_n1():
    g = Grid(ball(1), 1 / 16)
    alpha = 0.5
    xi0 = np.array([1.0 + 0j])
    phi = lambda z: np.abs(z[:, 0] - xi0[0]) ** (2 * alpha)
    fld = global_barrier(monge_ampere(1, 1.0), g, phi, alpha, A_bound=1.0)
    cert = fld.meta["certificate"]
    assert cert.passed
    band = g.band
    z = g.complex_coords(band)
    inside = g.depth(band) > -1e-12
    # on boundary nodes the envelope reproduces phi up to the net resolution
    assert np.all(fld.values[band][inside] <= phi(z[inside]) + 1e-9)
    assert fld.meta["argmax_xi"].shape == (g.size,)
