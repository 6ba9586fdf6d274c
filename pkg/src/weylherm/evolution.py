"""Truncated Hermite-Galerkin systems for the von Neumann and semiclassical models.

States are stored mode-major: ``modes[k, j] = R_k(x_j)``.  Modes ``-1`` and
``N+1`` are identically zero (Galerkin closure).
"""
import logging
import math
import struct
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .coupling import CouplingMatrix, assemble_coupling
from .grid import Grid
from .hermite import gauss_hermite_rule, phi_all

logger = logging.getLogger(__name__)

MODELS = ("von_neumann", "semiclassical")
TIME_SCHEMES = ("rk4", "implicit_midpoint")
RK4_STABILITY_EXTENT = 2.8


class SolverNotConverged(RuntimeError):
    pass


class NonFiniteState(FloatingPointError):
    def __init__(self, step):
        super().__init__(f"non-finite values in the state after step {step}")
        self.step = step


@dataclass(frozen=True, eq=False)
class HermiteState:
    modes: np.ndarray
    grid: Grid
    t: float = 0.0

    def __post_init__(self):
        modes = np.asarray(self.modes)
        if modes.ndim != 2 or modes.shape[1] != self.grid.n_points:
            raise ValueError(f"modes must have shape (N+1, {self.grid.n_points}), got {modes.shape}")

    @property
    def n_modes(self):
        return self.modes.shape[0] - 1

    def frozen(self):
        """Read-only copy (what observers receive)."""
        modes = np.array(self.modes, dtype=complex, copy=True)
        modes.flags.writeable = False
        return replace(self, modes=modes)

    def truncated(self, n):
        """First ``n + 1`` modes, zero-padded if the state has fewer."""
        out = np.zeros((n + 1, self.grid.n_points), dtype=complex)
        m = min(n, self.n_modes) + 1
        out[:m] = self.modes[:m]
        return replace(self, modes=out)


@dataclass(frozen=True)
class EvolutionConfig:
    model: str = "von_neumann"
    scheme: str = "rk4"
    dt: float = 5e-4
    t_final: float = 2 * math.pi
    hbar: float = 0.1
    safety_factor: float = 0.5
    snapshot_every: int = 100
    check_stability: bool = True
    solver_tol: float = 1e-12
    solver_maxiter: int = 200

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.scheme not in TIME_SCHEMES:
            raise ValueError(f"unknown time scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if not 0 < self.hbar <= 2:
            raise ValueError("hbar must lie in (0, 2]")
        if not 0 < self.safety_factor <= 1:
            raise ValueError("safety_factor must lie in (0, 1]")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass(frozen=True)
class InitialData:
    """Initial datum: a coherent state, a function ``f(x, y)``, or a coefficient table."""

    kind: str = "coherent_state"
    sigma_x: float = 0.6
    function: Callable | None = field(default=None, compare=False)
    table: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("coherent_state", "custom", "coefficient_table"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "coherent_state" and not self.sigma_x > 0:
            raise ValueError("sigma_x must be > 0")
        if self.kind == "custom" and self.function is None:
            raise ValueError("custom initial data needs a function of (x, y)")
        if self.kind == "coefficient_table" and self.table is None:
            raise ValueError("coefficient_table initial data needs a table")

    def build(self, grid, n):
        if self.kind == "coherent_state":
            return coherent_state(grid, n, self.sigma_x)
        if self.kind == "custom":
            return project_initial(self.function, grid, n)
        table = np.asarray(self.table, dtype=complex)
        if table.shape[1] != grid.n_points:
            raise ValueError("coefficient table does not match the grid")
        return HermiteState(table[: n + 1].copy(), grid).truncated(n)


def coherent_state(grid, n, sigma_x=0.6):
    """``exp(-(x**2/sigma**2 + y**2)/2) / (sqrt(2 pi) sigma)``, which lives in mode 0 only."""
    modes = np.zeros((n + 1, grid.n_points), dtype=complex)
    modes[0] = math.pi**0.25 / (math.sqrt(2 * math.pi) * sigma_x) * np.exp(-(grid.x**2) / (2 * sigma_x**2))
    return HermiteState(modes, grid)


def project_initial(f, grid, n, q=None):
    """Project ``f(x, y)`` on modes 0..n at every grid node."""
    q = q or n + 8
    rule = gauss_hermite_rule(q)
    values = np.asarray(f(grid.x[:, None], rule.nodes[None, :]), dtype=complex)
    basis = phi_all(n, rule.nodes) * (rule.weights * np.exp(rule.nodes**2))
    return HermiteState(basis @ values.T, grid)


class GalerkinSystem:
    """Right-hand side ``dR/dt = L R`` of the truncated system for a fixed (potential, grid, N, hbar)."""

    def __init__(self, pot, grid, n, hbar=0.1, model="von_neumann", coupling=None):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        self.pot = pot
        self.grid = grid
        self.n = n
        self.hbar = hbar
        self.model = model
        if model == "semiclassical":
            coupling = CouplingMatrix.zero(n, grid.n_points)
        elif coupling is None:
            coupling = assemble_coupling(pot, hbar, n, grid)
        if coupling.n_modes != n or coupling.n_points != grid.n_points:
            raise ValueError("coupling was assembled for a different N or grid")
        self.coupling = coupling
        self.vprime = pot.deriv(grid.x, 1)
        k = np.arange(n + 1, dtype=float)
        # -i folded into the ladder weights and the coupling profile
        self._down = -1j * np.sqrt(k[1:] / 2)[:, None]  # sqrt(k/2), k = 1..N
        self._up = -1j * np.sqrt((k[:-1] + 1) / 2)[:, None]  # sqrt((k+1)/2), k = 0..N-1
        if coupling.representation == "banded":
            beta, alpha = coupling.bands
            self._beta = beta[:, None]
            self._alpha = alpha[:, None]
            self._profile = -1j * coupling.profile

    @property
    def shape(self):
        return (self.n + 1, self.grid.n_points)

    def __call__(self, modes):
        if modes.shape != self.shape:
            raise ValueError(f"state shape {modes.shape} does not match system {self.shape}")
        dx = self.grid.ddx(modes)
        vr = self.vprime * modes
        out = np.empty(modes.shape, dtype=complex)
        out[0] = 0.0
        if self.n > 0:
            np.multiply(self._down, dx[:-1] + vr[:-1], out=out[1:])  # D R_{k-1}
            out[:-1] += self._up * (vr[1:] - dx[1:])  # D* R_{k+1}
        rep = self.coupling.representation
        if rep == "banded":
            band = np.zeros(modes.shape, dtype=complex)
            band[1:] = self._beta * modes[:-1]
            band[:-1] += self._beta * modes[1:]
            if self.n >= 3:
                band[3:] += self._alpha * modes[:-3]
                band[:-3] += self._alpha * modes[3:]
            band *= self._profile
            out += band
        elif rep == "dense":
            out += -1j * self.coupling.apply(modes)
        return out

    def spectral_radius_estimate(self):
        """``sqrt((N+1)/2) (max symbol + max|V'|) + max row sum of E``.

        The ladder factor is half of the rigorous bound ``sqrt(2(N+1))``; the
        default safety factor 0.5 restores it, so ``dt <= 0.5 * 2.8 / rho`` is
        a provably stable RK4 step.
        """
        ladder = math.sqrt((self.n + 1) / 2)
        return ladder * (self.grid.max_symbol() + float(np.max(np.abs(self.vprime)))) + self.coupling.max_row_sum()


def _check_state(state, system):
    if state.grid != system.grid or state.n_modes != system.n:
        raise ValueError("state and system disagree on grid or mode count")


def rhs_von_neumann(state, pot, hbar, coupling=None):
    system = GalerkinSystem(pot, state.grid, state.n_modes, hbar, "von_neumann", coupling)
    return system(state.modes)


def rhs_semiclassical(state, pot):
    system = GalerkinSystem(pot, state.grid, state.n_modes, model="semiclassical")
    return system(state.modes)


def rk4_step(f, u, dt):
    k1 = f(u)
    k2 = f(u + (0.5 * dt) * k1)
    k3 = f(u + (0.5 * dt) * k2)
    k4 = f(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def midpoint_step(f, u, dt, tol=1e-12, maxiter=200):
    """Implicit midpoint (Cayley) step for the linear generator ``f``, solved by GMRES."""
    shape = u.shape
    half = 0.5 * dt

    def matvec(v):
        v = v.reshape(shape)
        return (v - half * f(v)).ravel()

    op = LinearOperator((u.size, u.size), matvec=matvec, dtype=complex)
    fu = f(u)
    b = (u + half * fu).ravel()
    guess = (u + dt * fu).ravel()
    sol, info = gmres(op, b, x0=guess, rtol=tol, atol=0.0, restart=60, maxiter=maxiter)
    if info != 0:
        residual = np.linalg.norm(matvec(sol) - b) / np.linalg.norm(b)
        raise SolverNotConverged(f"implicit midpoint solve stalled (info={info}, relative residual {residual:.3e})")
    return sol.reshape(shape)


def step(state, config, rhs):
    """Advance ``state`` by ``config.dt`` with the configured scheme."""
    if config.scheme == "rk4":
        modes = rk4_step(rhs, state.modes, config.dt)
    else:
        modes = midpoint_step(rhs, state.modes, config.dt, config.solver_tol, config.solver_maxiter)
    return replace(state, modes=modes, t=state.t + config.dt)


def stable_dt_estimate(config, pot, grid, basis, coupling=None):
    """Largest RK4 step ``2.8 / rho`` for an upper estimate ``rho`` of the generator's spectral radius."""
    n = basis.n_modes if hasattr(basis, "n_modes") else int(basis)
    system = GalerkinSystem(pot, grid, n, config.hbar, config.model, coupling)
    return RK4_STABILITY_EXTENT / system.spectral_radius_estimate()


@dataclass
class RunResult:
    state: HermiteState
    snapshots: list
    steps: int
    records: list = field(default_factory=list)


def run(initial, config, pot, grid=None, n_modes=None, observers=(), system=None):
    """March ``initial`` to ``config.t_final`` with fixed steps (the last one shortened).

    ``initial`` is a :class:`HermiteState` or an :class:`InitialData` (then
    ``grid`` and ``n_modes`` are required).  Every ``config.snapshot_every``
    steps, and at the final time, a read-only snapshot is stored and passed to
    each observer; observer return values are collected in ``records``.
    """
    if isinstance(initial, InitialData):
        if grid is None or n_modes is None:
            raise ValueError("grid and n_modes are required with InitialData")
        state = initial.build(grid, n_modes)
    else:
        state = initial
    if system is None:
        system = GalerkinSystem(pot, state.grid, state.n_modes, config.hbar, config.model)
    _check_state(state, system)
    if state.n_modes % 2:
        warnings.warn("odd mode cutoff: the discrete trace is not conserved", RuntimeWarning, stacklevel=2)
    if config.scheme == "rk4":
        dt_max = config.safety_factor * RK4_STABILITY_EXTENT / system.spectral_radius_estimate()
        if config.dt > dt_max:
            msg = f"dt={config.dt:g} exceeds the RK4 stability estimate {dt_max:.3e}"
            if config.check_stability:
                raise ValueError(msg)
            logger.warning(msg)

    t0 = state.t
    total = config.t_final
    nsteps = max(0, math.ceil(total / config.dt - 1e-9))
    snapshots, records = [], []

    def emit(s):
        snap = s.frozen()
        snapshots.append(snap)
        for obs in observers:
            records.append(obs(snap))

    emit(state)
    modes = np.array(state.modes, dtype=complex)
    for i in range(1, nsteps + 1):
        h = config.dt if i < nsteps else total - (nsteps - 1) * config.dt
        if config.scheme == "rk4":
            modes = rk4_step(system, modes, h)
        else:
            modes = midpoint_step(system, modes, h, config.solver_tol, config.solver_maxiter)
        if not np.isfinite(modes).all():
            raise NonFiniteState(i)
        if i % config.snapshot_every == 0 or i == nsteps:
            t = t0 + (total if i == nsteps else i * config.dt)
            emit(HermiteState(modes, state.grid, t))
    t_end = t0 + (total if nsteps else 0.0)
    return RunResult(HermiteState(modes, state.grid, t_end), snapshots, nsteps, records)


# -- snapshot container -------------------------------------------------------

MAGIC = b"WEYLHERM1"
_HEADER = struct.Struct("<9sIIdddd16s")


def write_snapshots(path, states, hbar, model):
    """Write states as consecutive records: header + (N+1)*Nx little-endian complex64."""
    with open(path, "wb") as fh:
        for s in states:
            g = s.grid
            tag = model.encode("ascii")[:16].ljust(16, b"\0")
            fh.write(_HEADER.pack(MAGIC, s.n_modes, g.n_points, g.x_min, g.x_max, s.t, hbar, tag))
            fh.write(np.ascontiguousarray(s.modes, dtype="<c8").tobytes())


def read_snapshots(path, scheme="central4"):
    """Read records written by :func:`write_snapshots`; returns ``(states, hbar, model)``."""
    states, hbar, model = [], None, None
    with open(path, "rb") as fh:
        while True:
            head = fh.read(_HEADER.size)
            if not head:
                break
            if len(head) < _HEADER.size:
                raise ValueError("truncated snapshot header")
            magic, n, nx, x_min, x_max, t, hbar, tag = _HEADER.unpack(head)
            if magic != MAGIC:
                raise ValueError(f"bad snapshot magic {magic!r}")
            count = (n + 1) * nx
            data = np.frombuffer(fh.read(8 * count), dtype="<c8")
            if data.size != count:
                raise ValueError("truncated snapshot payload")
            model = tag.rstrip(b"\0").decode("ascii")
            grid = Grid(x_min, x_max, nx, scheme)
            states.append(HermiteState(data.reshape(n + 1, nx).astype(complex), grid, t))
    return states, hbar, model
