"""Hermite functions, Gauss-Hermite quadrature and coefficient-space ladders.

Coefficient vectors are numpy arrays whose axis 0 is the Hermite mode index;
trailing axes (e.g. a spatial grid) are carried along untouched, so the same
ladder routines act on a single vector or on a full ``(N+1, Nx)`` state.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

_PI_M14 = math.pi ** -0.25
_RESCALE = 1e150


@dataclass(frozen=True)
class BasisSpec:
    n_modes: int
    quad_order: int | None = None

    def __post_init__(self):
        if self.n_modes < 0:
            raise ValueError("n_modes must be >= 0")
        if self.quad_order is not None and self.quad_order < 1:
            raise ValueError("quad_order must be >= 1")

    @property
    def size(self):
        return self.n_modes + 1

    def default_quad_order(self):
        return self.quad_order if self.quad_order is not None else self.n_modes + 8


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight ``exp(-y**2)``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values):
        """Sum ``w_i * values[..., i]`` (the Gaussian weight is implicit)."""
        return np.asarray(values) @ self.weights


def _recurrence(n, y, gaussian):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("phi_all requires finite evaluation points")
    if n < 0:
        raise ValueError("mode count must be >= 0")
    out = np.empty((n + 1,) + y.shape)
    # values are carried as p * exp(log_scale) so that neither the Gaussian
    # factor nor the polynomial growth over/underflows mid-recurrence
    log_scale = np.full(y.shape, math.log(_PI_M14))
    if gaussian:
        log_scale = log_scale - 0.5 * y * y
    p_prev = np.zeros(y.shape)
    p = np.ones(y.shape)
    out[0] = np.exp(log_scale)
    for k in range(n):
        p_next = math.sqrt(2.0 / (k + 1)) * y * p - math.sqrt(k / (k + 1)) * p_prev
        p_prev, p = p, p_next
        big = np.abs(p) > _RESCALE
        if np.any(big):
            p = np.where(big, p / _RESCALE, p)
            p_prev = np.where(big, p_prev / _RESCALE, p_prev)
            log_scale = np.where(big, log_scale + math.log(_RESCALE), log_scale)
        with np.errstate(over="ignore", under="ignore"):
            out[k + 1] = p * np.exp(log_scale)
    return out


def phi_all(n, y):
    """Orthonormal Hermite functions ``Phi_0 .. Phi_n`` evaluated at ``y``.

    Returns an array of shape ``(n + 1,) + np.shape(y)``.  The normalized
    three-term recurrence is used directly, with a running rescaling so that
    large orders and large ``|y|`` neither overflow nor underflow prematurely.
    """
    return _recurrence(n, y, gaussian=True)


def hermite_poly_normalized(n, y):
    """``Phi_k(y) * exp(y**2 / 2)`` for k = 0..n (polynomial part of ``Phi_k``)."""
    return _recurrence(n, y, gaussian=False)


def gauss_hermite_rule(q):
    """Gauss-Hermite nodes and weights (weight ``exp(-y**2)``) with ``q`` points.

    Nodes are eigenvalues of the symmetric Jacobi matrix; weights are
    ``1 / sum_k P_k(y_i)**2`` with ``P_k`` the orthonormal polynomials, which keeps
    full relative accuracy for the small outer weights.
    """
    if q < 1:
        raise ValueError("quadrature order must be >= 1")
    if q == 1:
        return QuadratureRule(np.zeros(1), np.array([math.sqrt(math.pi)]))
    off = np.sqrt(np.arange(1, q) / 2.0)
    nodes = eigh_tridiagonal(np.zeros(q), off, eigvals_only=True)
    # exact symmetry; odd q gets an exact zero at the center
    nodes = 0.5 * (nodes - nodes[::-1])
    polys = hermite_poly_normalized(q - 1, nodes)
    with np.errstate(over="ignore"):
        # far outer nodes overflow the sum; their weights underflow to 0 anyway
        weights = 1.0 / np.sum(polys * polys, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes, weights)


def _shift(c, offset):
    """Return ``d`` with ``d[k] = c[k + offset]`` (zero outside), same shape as ``c``."""
    d = np.zeros_like(c)
    n = c.shape[0]
    if offset >= 0:
        if offset < n:
            d[: n - offset] = c[offset:]
    elif -offset < n:
        d[-offset:] = c[: n + offset]
    return d


def _col(values, c):
    return values.reshape((-1,) + (1,) * (c.ndim - 1))


def apply_y(c):
    """Multiply by ``y`` in coefficient space, truncating back to the input length."""
    c = np.asarray(c)
    k = np.arange(c.shape[0], dtype=float)
    # (y G)_k = sqrt(k/2) c_{k-1} + sqrt((k+1)/2) c_{k+1}
    return _col(np.sqrt(k / 2), c) * _shift(c, -1) + _col(np.sqrt((k + 1) / 2), c) * _shift(c, 1)


def apply_dy(c):
    """Differentiate in ``y`` in coefficient space, truncating back to the input length."""
    c = np.asarray(c)
    k = np.arange(c.shape[0], dtype=float)
    return _col(np.sqrt((k + 1) / 2), c) * _shift(c, 1) - _col(np.sqrt(k / 2), c) * _shift(c, -1)


def y3_coefficients(k):
    """The four band coefficients of ``y**3 Phi_k`` onto modes k+3, k+1, k-1, k-3."""
    k = np.asarray(k, dtype=float)
    alpha = np.sqrt((k + 1) * (k + 2) * (k + 3) / 8)
    beta = 1.5 * (k + 1) * np.sqrt((k + 1) / 2)
    gamma = 1.5 * k * np.sqrt(k / 2)
    tau = np.sqrt(np.maximum(k * (k - 1) * (k - 2), 0.0) / 8)
    return alpha, beta, gamma, tau


def apply_y3(c):
    """Multiply by ``y**3`` in coefficient space (bands +-1, +-3), truncated."""
    c = np.asarray(c)
    k = np.arange(c.shape[0], dtype=float)
    alpha, beta, gamma, tau = y3_coefficients(k)
    # (y^3 G)_k = alpha_{k-3} c_{k-3} + beta_{k-1} c_{k-1} + gamma_{k+1} c_{k+1} + tau_{k+3} c_{k+3}
    out = _col(alpha, c) * c
    out = _shift(out, -3)
    out = out + _shift(_col(beta, c) * c, -1)
    out = out + _shift(_col(gamma, c) * c, 1)
    out = out + _shift(_col(tau, c) * c, 3)
    return out


def y_matrix(n):
    """Dense symmetric matrix of multiplication by ``y`` on modes 0..n."""
    off = np.sqrt(np.arange(1, n + 1) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def y3_matrix(n):
    """Dense symmetric matrix ``<Phi_k, y**3 Phi_l>`` for k, l in 0..n."""
    m = np.zeros((n + 1, n + 1))
    alpha, beta, _, _ = y3_coefficients(np.arange(n + 1))
    for k in range(n + 1):
        if k + 1 <= n:
            m[k + 1, k] = m[k, k + 1] = beta[k]
        if k + 3 <= n:
            m[k + 3, k] = m[k, k + 3] = alpha[k]
    return m


def number_op_pow(c, p):
    """Apply ``(y**2 - d**2/dy**2)**p``: mode k is scaled by ``(2k + 1)**p``."""
    if p < 0:
        raise ValueError("power must be >= 0")
    c = np.asarray(c)
    k = np.arange(c.shape[0], dtype=float)
    return _col((2 * k + 1) ** p, c) * c


def _project(f, n, rule):
    y = rule.nodes
    values = np.asarray(f(y))
    phi = phi_all(n, y)
    return (phi * (rule.weights * np.exp(y * y))) @ values


def project_function(f, n, q=None, tol=1e-10):
    """Coefficients of ``f`` on modes 0..n by Gauss-Hermite quadrature.

    The integrand ``f(y) Phi_k(y)`` is evaluated as ``f(y_i) Phi_k(y_i) exp(y_i**2)``
    against the weighted rule, so it is exact for ``f`` = polynomial times
    ``exp(-y**2 / 2)``.  A second projection with twice the nodes is used as a
    convergence check; a ``RuntimeWarning`` is issued if it moves any
    coefficient by more than ``tol``.
    """
    if q is None:
        q = n + 8
    coeffs = _project(f, n, gauss_hermite_rule(q))
    check = _project(f, n, gauss_hermite_rule(2 * q))
    change = np.max(np.abs(check - coeffs)) if coeffs.size else 0.0
    if change > tol:
        warnings.warn(
            f"projection not converged: doubling the quadrature order changed a coefficient by {change:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return coeffs


def fourier_eigen_multiplier(k):
    """Eigenvalue ``(-i)**k`` of ``Phi_k`` under the unitary Fourier transform."""
    if k < 0:
        raise ValueError("mode index must be >= 0")
    return (1 + 0j, -1j, -1 + 0j, 1j)[k % 4]
