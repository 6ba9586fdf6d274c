"""Observables and error functionals on Hermite states."""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .hermite import apply_dy, apply_y, phi_all

_PHI0_AT_ZERO_CACHE = {}


def l2_norm(state):
    """``sqrt(sum_k ||R_k||^2_{L2_x})``, the L2 norm over (x, y) by orthonormality in y."""
    modes = state.modes
    return math.sqrt(state.grid.dx * float(np.sum(modes.real**2 + modes.imag**2)))


def _phi_at_zero(n):
    if n not in _PHI0_AT_ZERO_CACHE:
        _PHI0_AT_ZERO_CACHE[n] = phi_all(n, 0.0)
    return _PHI0_AT_ZERO_CACHE[n]


def trace(state):
    """``int R(x, 0) dx = sum_k Phi_k(0) int R_k dx`` (complex; the imaginary part should vanish)."""
    weights = _phi_at_zero(state.n_modes)
    return complex(state.grid.dx * np.sum(weights @ state.modes))


def parity_residual(state, eps=1e-300):
    """``max_k ||R_k - (-1)^k conj(R_k)|| / ||R||``."""
    modes = state.modes
    signs = np.where(np.arange(modes.shape[0]) % 2, -1.0, 1.0)[:, None]
    diff = modes - signs * np.conj(modes)
    per_mode = np.sqrt(state.grid.dx * np.sum(np.abs(diff) ** 2, axis=1))
    return float(np.max(per_mode)) / max(l2_norm(state), eps)


def boundary_mass(state, fraction=0.1):
    return state.grid.boundary_mass(state.modes, fraction)


def nm_functional(state, m):
    """``sum_{a+b+alpha+beta <= m} ||x^a d_x^b y^alpha d_y^beta R||``.

    The y-ladders act on the state zero-padded to ``N + m`` modes, so terms of
    a band-limited state are exact up to that order.
    """
    if not 0 <= m <= 6:
        raise ValueError("nm_functional supports 0 <= m <= 6")
    grid = state.grid
    padded = np.zeros((state.n_modes + m + 1, grid.n_points), dtype=complex)
    padded[: state.n_modes + 1] = state.modes
    x = grid.x
    total = 0.0
    for alpha, beta in itertools.product(range(m + 1), repeat=2):
        if alpha + beta > m:
            continue
        g = padded
        for _ in range(beta):
            g = apply_dy(g)
        for _ in range(alpha):
            g = apply_y(g)
        rest = m - alpha - beta
        db = g
        for b in range(rest + 1):
            xa = db
            for a in range(rest - b + 1):
                total += math.sqrt(grid.dx * float(np.sum(np.abs(xa) ** 2)))
                xa = x * xa
            db = grid.ddx(db)
    return total


def projection_tail_certificate(c, n, p):
    """Return ``(tail, bound)`` with ``tail = ||c_{>n}||`` and the number-operator bound.

    ``bound = (2n+3)^{-p} ||(2k+1)^p c_k||``; it is evaluated as
    ``||((2k+1)/(2n+3))^p c_k||`` so that the single-mode case ``c = e_{n+1}``
    gives exact equality.
    """
    c = np.asarray(c)
    if c.shape[0] <= n:
        raise ValueError("coefficient vector must have more than n+1 entries")
    if p < 0:
        raise ValueError("p must be >= 0")
    k = np.arange(c.shape[0], dtype=float)
    sq = np.abs(c) ** 2
    ratio = ((2 * k + 1) / (2 * n + 3)) ** (2 * p)
    tail_sq = float(np.sum(sq[n + 1 :]))
    weighted_tail = float(np.sum(ratio[n + 1 :] * sq[n + 1 :]))
    tail = math.sqrt(tail_sq)
    bound = math.sqrt(float(np.sum(ratio[: n + 1] * sq[: n + 1])) + weighted_tail)
    if tail > bound:
        raise ArithmeticError(f"projection certificate violated: tail {tail!r} > bound {bound!r}")
    return tail, bound


def error_vs_reference(run_snapshots, reference_snapshots, n, time_tol=1e-9):
    """``max_t (sum_{k<=n} ||R_k(t) - R_ref,k(t)||^2)^{1/2}`` over the shared snapshot times."""
    if len(run_snapshots) != len(reference_snapshots):
        raise ValueError("run and reference have different numbers of snapshots")
    worst = 0.0
    for s, r in zip(run_snapshots, reference_snapshots):
        if abs(s.t - r.t) > time_tol:
            raise ValueError(f"snapshot times differ: {s.t} vs {r.t}")
        g, gr = s.grid, r.grid
        if (g.x_min, g.x_max, g.n_points) != (gr.x_min, gr.x_max, gr.n_points):
            raise ValueError("run and reference grids differ")
        if r.n_modes < n:
            raise ValueError("reference has fewer modes than requested")
        diff = s.truncated(n).modes - r.modes[: n + 1]
        worst = max(worst, math.sqrt(g.dx * float(np.sum(np.abs(diff) ** 2))))
    return worst


def order_of_accuracy(e1, n1, e2, n2):
    """Algebraic order ``ln(E1/E2) / ln(N2/N1)`` between two mode counts."""
    if e1 <= 0 or e2 <= 0:
        raise ValueError("errors must be positive")
    if not n2 > n1:
        raise ValueError("need n2 > n1")
    return math.log(e1 / e2) / math.log(n2 / n1)


def wigner_slice(state, xi):
    """``W(x, xi) = (2 pi)^{-1/2} sum_k (-i)^k R_k(x) Phi_k(xi)``.

    Returns ``(W.real, residue)`` where ``W`` has shape ``(Nx, len(xi))`` and
    ``residue`` is ``max|Im W| / max(max|W|, tiny)``.
    """
    xi = np.asarray(xi, dtype=float)
    n = state.n_modes
    phases = np.array([(1, -1j, -1, 1j)[k % 4] for k in range(n + 1)])
    w = (state.modes * phases[:, None]).T @ phi_all(n, xi) / math.sqrt(2 * math.pi)
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    residue = float(np.max(np.abs(w.imag))) / peak if peak > 0 else 0.0
    return w.real, residue


@dataclass
class DiagnosticsReport:
    """Time series of observables sampled at snapshot times."""

    nm_orders: tuple = ()
    rows: list = field(default_factory=list)

    columns_base = ("t", "l2_norm", "trace_re", "trace_im", "parity_residual", "boundary_mass")

    @property
    def columns(self):
        return self.columns_base + tuple(f"n{m}" for m in self.nm_orders)

    def observe(self, state):
        if self.rows and not state.t > self.rows[-1][0]:
            raise ValueError("diagnostics timestamps must increase")
        tr = trace(state)
        row = [state.t, l2_norm(state), tr.real, tr.imag, parity_residual(state), boundary_mass(state)]
        row += [nm_functional(state, m) for m in self.nm_orders]
        self.rows.append(tuple(row))
        return row

    __call__ = observe

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
