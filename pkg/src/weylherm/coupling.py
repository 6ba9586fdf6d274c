"""Coupling matrices ``E_kl(x) = int E(x, y) Phi_k(y) Phi_l(y) dy`` of the Weyl remainder.

Three representations are used:

* ``zero``   -- the remainder vanishes (harmonic potential, or ``chi = 0``);
* ``banded`` -- ``E_kl(x) = c(x) * B_kl`` with a constant band matrix ``B``
  (the quartic potential, where ``B`` is the y**3 matrix);
* ``dense``  -- one real symmetric ``(N+1, N+1)`` matrix per grid node.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .hermite import gauss_hermite_rule, hermite_poly_normalized, y3_coefficients, y3_matrix
from .potentials import e_remainder

logger = logging.getLogger(__name__)


class QuadratureNotConverged(RuntimeError):
    """Adaptive coupling quadrature failed to settle below its tolerance."""

    def __init__(self, residual, q):
        super().__init__(f"coupling quadrature not converged at Q={q}: last change {residual:.3e}")
        self.residual = residual
        self.q = q


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    representation: str
    n_modes: int
    n_points: int
    profile: np.ndarray | None = None  # banded: c(x_j)
    bands: tuple | None = None  # banded: (beta_k for k+1 band, alpha_k for k+3 band)
    dense: np.ndarray | None = None  # dense: (Nx, N+1, N+1)
    parity_defect: float = 0.0  # largest |E_kl| with k+l even before zeroing

    @classmethod
    def zero(cls, n_modes, n_points):
        return cls("zero", n_modes, n_points)

    @property
    def is_zero(self):
        return self.representation == "zero"

    def to_dense(self):
        size = self.n_modes + 1
        if self.representation == "zero":
            return np.zeros((self.n_points, size, size))
        if self.representation == "dense":
            return self.dense
        return self.profile[:, None, None] * y3_matrix(self.n_modes)[None]

    def apply(self, modes):
        """``sum_l E_kl(x_j) R_l(x_j)`` for a mode-major array of shape ``(N+1, Nx)``."""
        modes = np.asarray(modes)
        if modes.shape != (self.n_modes + 1, self.n_points):
            raise ValueError(
                f"state shape {modes.shape} does not match coupling ({self.n_modes + 1}, {self.n_points})"
            )
        if self.representation == "zero":
            return np.zeros_like(modes)
        if self.representation == "dense":
            return np.einsum("jkl,lj->kj", self.dense, modes)
        beta, alpha = self.bands
        out = np.zeros_like(modes)
        # B_{k+1,k} = B_{k,k+1} = beta_k ; B_{k+3,k} = B_{k,k+3} = alpha_k
        out[1:] += beta[:, None] * modes[:-1]
        out[:-1] += beta[:, None] * modes[1:]
        if self.n_modes >= 3:
            out[3:] += alpha[:, None] * modes[:-3]
            out[:-3] += alpha[:, None] * modes[3:]
        return self.profile * out

    def max_row_sum(self):
        """``max_{j,k} sum_l |E_kl(x_j)|``."""
        if self.representation == "zero":
            return 0.0
        if self.representation == "banded":
            rows = np.abs(y3_matrix(self.n_modes)).sum(axis=1)
            return float(np.max(np.abs(self.profile)) * np.max(rows))
        return float(np.max(np.abs(self.dense).sum(axis=2)))


def assemble_coupling_quartic(chi, hbar, n, grid):
    """Closed-form banded coupling for ``V = x**2/2 + chi x**4/4``: ``E = chi hbar**2 x y**3 / 4``."""
    if chi < 0:
        raise ValueError("chi must be >= 0")
    if chi == 0:
        return CouplingMatrix.zero(n, grid.n_points)
    k = np.arange(n + 1)
    alpha, beta, _, _ = y3_coefficients(k)
    bands = (beta[:n], alpha[: max(n - 2, 0)])
    profile = 0.25 * chi * hbar**2 * grid.x
    return CouplingMatrix("banded", n, grid.n_points, profile=profile, bands=bands)


def _quadrature_matrices(pot, hbar, n, x, q):
    rule = gauss_hermite_rule(q)
    # nodes whose weight underflowed contribute nothing (and their polynomials may overflow)
    keep = rule.weights > 0
    nodes, weights = rule.nodes[keep], rule.weights[keep]
    # Phi_k Phi_l = P_k P_l exp(-y^2): the rule supplies the Gaussian
    scaled = hermite_poly_normalized(n, nodes) * np.sqrt(weights)
    remainder = e_remainder(pot, hbar, x[:, None], nodes[None, :])
    return np.einsum("ji,ki,li->jkl", remainder, scaled, scaled, optimize=True)


def assemble_coupling_quadrature(pot, hbar, n, grid, q=None, tol=1e-12, max_q=2048):
    """Dense coupling by Gauss-Hermite quadrature.

    Polynomial potentials of degree ``d`` default to ``Q = N + ceil(d/2) + 2``
    nodes, which integrates every entry exactly.  For callables ``Q`` starts at
    ``N + 8`` (or ``q``) and doubles until no entry moves by more than
    ``tol * max(1, max|E|)``.
    """
    if pot.kind == "harmonic" or (pot.kind == "quartic" and pot.chi == 0):
        return CouplingMatrix.zero(n, grid.n_points)
    x = grid.x
    if pot.is_polynomial:
        if q is None:
            q = n + math.ceil(pot.degree / 2) + 2
        mats = _quadrature_matrices(pot, hbar, n, x, q)
    else:
        q = q or n + 8
        mats = _quadrature_matrices(pot, hbar, n, x, q)
        change = math.inf
        while True:
            if 2 * q > max_q:
                raise QuadratureNotConverged(change, q)
            finer = _quadrature_matrices(pot, hbar, n, x, 2 * q)
            change = float(np.max(np.abs(finer - mats))) / max(1.0, float(np.max(np.abs(finer))))
            mats, q = finer, 2 * q
            if change < tol:
                break
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    k = np.arange(n + 1)
    even = (k[:, None] + k[None, :]) % 2 == 0
    defect = float(np.max(np.abs(mats[:, even]))) if mats.size else 0.0
    mats[:, even] = 0.0
    logger.debug("coupling quadrature Q=%d, parity defect before zeroing %.3e", q, defect)
    return CouplingMatrix("dense", n, grid.n_points, dense=mats, parity_defect=defect)


def assemble_coupling(pot, hbar, n, grid):
    """Pick the cheapest exact representation for ``pot``."""
    if pot.kind == "harmonic":
        return CouplingMatrix.zero(n, grid.n_points)
    if pot.kind == "quartic":
        return assemble_coupling_quartic(pot.chi, hbar, n, grid)
    return assemble_coupling_quadrature(pot, hbar, n, grid)


def apply_coupling(coupling, modes, node=None):
    """Apply ``E`` to a full ``(N+1, Nx)`` state, or to one node's mode vector when ``node`` is given."""
    if node is None:
        return coupling.apply(modes)
    modes = np.asarray(modes)
    if modes.shape != (coupling.n_modes + 1,):
        raise ValueError(f"mode vector of length {modes.shape} does not match N+1={coupling.n_modes + 1}")
    if coupling.is_zero:
        return np.zeros_like(modes)
    if coupling.representation == "dense":
        return coupling.dense[node] @ modes
    return coupling.profile[node] * (y3_matrix(coupling.n_modes) @ modes)
