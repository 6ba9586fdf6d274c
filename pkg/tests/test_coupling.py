import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import eval_hermite

from weylherm.coupling import (
    CouplingMatrix,
    QuadratureNotConverged,
    apply_coupling,
    assemble_coupling,
    assemble_coupling_quadrature,
    assemble_coupling_quartic,
)
from weylherm.grid import Grid
from weylherm.potentials import Potential

GRID = Grid(-4.0, 4.0, 16)


def test_closed_form_entry_example():
    grid = Grid(0.0, 8.0, 8)  # node 1 sits at x = 1
    c = assemble_coupling_quartic(0.5, 0.1, 6, grid).to_dense()
    # E_03(1) = chi hbar^2 x / 4 * <Phi_0, y^3 Phi_3> = 1.25e-3 * sqrt(3/4)
    assert c[1, 0, 3] == pytest.approx(1.25e-3 * math.sqrt(0.75), rel=1e-14)
    assert c[1, 0, 1] == pytest.approx(1.25e-3 * 0.75 * math.sqrt(2), rel=1e-14)
    assert c[0, 0, 3] == 0.0  # x = 0


def test_zero_representations():
    assert assemble_coupling(Potential.harmonic(), 0.1, 8, GRID).is_zero
    assert assemble_coupling_quartic(0.0, 0.1, 8, GRID).is_zero
    assert assemble_coupling_quadrature(Potential.harmonic(), 0.1, 8, GRID).is_zero
    z = CouplingMatrix.zero(4, 16)
    assert z.max_row_sum() == 0.0
    assert np.all(z.apply(np.ones((5, 16))) == 0)
    assert z.to_dense().shape == (16, 5, 5)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 8, 16])
def test_dual_path_agreement(n):
    closed = assemble_coupling_quartic(0.5, 0.1, n, GRID).to_dense()
    by_rule = assemble_coupling_quadrature(Potential.quartic(0.5), 0.1, n, GRID).to_dense()
    assert np.max(np.abs(closed - by_rule)) <= 1e-13


def test_symmetry_and_parity_zeros_are_exact():
    for c in (
        assemble_coupling_quartic(0.5, 0.3, 12, GRID),
        assemble_coupling_quadrature(Potential.quartic(0.5), 0.3, 12, GRID),
        assemble_coupling_quadrature(Potential.from_callables(np.cosh, np.sinh, np.cosh, np.sinh), 0.3, 12, GRID),
    ):
        d = c.to_dense()
        assert np.array_equal(d, np.swapaxes(d, 1, 2))
        k = np.arange(13)
        assert np.all(d[:, (k[:, None] + k[None, :]) % 2 == 0] == 0.0)
        assert np.isrealobj(d)


def _phi(k, y):
    return eval_hermite(k, y) * np.exp(-(y**2) / 2) / math.sqrt(2.0**k * math.factorial(k) * math.sqrt(math.pi))


def test_callable_quadrature_matches_adaptive_integral():
    pot = Potential.from_callables(np.cosh, np.sinh, np.cosh, np.sinh)
    grid = Grid(0.0, 8.0, 8)  # node 1 sits at x = 1
    c = assemble_coupling_quadrature(pot, 0.5, 6, grid, tol=1e-13)
    assert c.representation == "dense"
    assert c.parity_defect < 1e-12
    d = c.to_dense()

    def remainder(y):
        return (math.cosh(1 + 0.25 * y) - math.cosh(1 - 0.25 * y)) / 0.5 - math.sinh(1.0) * y

    for k, l in ((0, 3), (1, 2), (2, 5)):
        ref, _ = quad(lambda y: remainder(y) * _phi(k, y) * _phi(l, y), -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
        assert d[1, k, l] == pytest.approx(ref, rel=1e-10)


def test_quadrature_gives_up():
    pot = Potential.from_callables(lambda x: np.cosh(3 * x), lambda x: 3 * np.sinh(3 * x))
    with pytest.raises(QuadratureNotConverged):
        assemble_coupling_quadrature(pot, 2.0, 4, GRID, q=4, tol=1e-300, max_q=32)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_banded_apply_matches_dense(seed, n):
    rng = np.random.default_rng(seed)
    c = assemble_coupling_quartic(0.5, 0.2, n, GRID)
    modes = rng.standard_normal((n + 1, 16)) + 1j * rng.standard_normal((n + 1, 16))
    dense = np.einsum("jkl,lj->kj", c.to_dense(), modes)
    np.testing.assert_allclose(c.apply(modes), dense, atol=1e-14)
    np.testing.assert_allclose(apply_coupling(c, modes[:, 3], node=3), dense[:, 3], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_coupling_conserves_norm(seed):
    # E real symmetric, so i<E R, R> is purely imaginary and -iE generates no L2 growth
    rng = np.random.default_rng(seed)
    c = assemble_coupling_quadrature(Potential.quartic(0.5), 0.1, 9, GRID)
    modes = rng.standard_normal((10, 16)) + 1j * rng.standard_normal((10, 16))
    val = 1j * np.vdot(modes, c.apply(modes))
    assert abs(val.real) <= 1e-13 * np.abs(val).max(initial=1.0)


def test_max_row_sum_bounds_operator():
    c = assemble_coupling_quartic(0.5, 0.1, 10, GRID)
    dense = c.to_dense()
    norm = max(np.linalg.norm(dense[j], 2) for j in range(16))
    assert norm <= c.max_row_sum() * (1 + 1e-12)
    q = assemble_coupling_quadrature(Potential.quartic(0.5), 0.1, 10, GRID)
    assert q.max_row_sum() == pytest.approx(c.max_row_sum(), rel=1e-12)


def test_shape_checks():
    c = assemble_coupling_quartic(0.5, 0.1, 4, GRID)
    with pytest.raises(ValueError):
        c.apply(np.zeros((4, 16)))
    with pytest.raises(ValueError):
        apply_coupling(c, np.zeros(3), node=0)
    with pytest.raises(ValueError):
        assemble_coupling_quartic(-1.0, 0.1, 4, GRID)
