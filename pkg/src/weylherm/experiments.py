"""Experiment drivers: simulate, converge, hbar sweep and harmonic periodicity."""
import datetime
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .diagnostics import DiagnosticsReport, error_vs_reference, l2_norm, order_of_accuracy
from .evolution import HermiteState, read_snapshots, run, write_snapshots

logger = logging.getLogger(__name__)

# keys that change the reference trajectory of a convergence study
REFERENCE_KEYS = (
    "potential.kind",
    "potential.chi",
    "grid.x_min",
    "grid.x_max",
    "grid.nx",
    "grid.scheme",
    "evolution.model",
    "evolution.scheme",
    "evolution.dt",
    "evolution.t_final",
    "evolution.hbar",
    "evolution.snapshot_every",
    "evolution.solver_tol",
    "initial.kind",
    "initial.sigma_x",
    "converge.reference_modes",
)


@dataclass
class RunArtifacts:
    directory: str
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add(self, name, path):
        self.files[name] = path
        return path

    @property
    def summary_path(self):
        return os.path.join(self.directory, "summary.json")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(v):
    return "" if v is None else format(v, ".17g")


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_plot(path, header, rows):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _finish(artifacts, cfg, results):
    checksum = cfg.checksum()
    artifacts.summary = {
        "experiment": cfg.experiment,
        "config_checksum": checksum,
        "results": {"config_checksum": checksum, **results},
        "files": {
            name: {"path": os.path.relpath(path, artifacts.directory), "sha256": _sha256(path)}
            for name, path in sorted(artifacts.files.items())
        },
        "metadata": {
            "weylherm_version": __version__,
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        },
    }
    with open(artifacts.summary_path, "w") as fh:
        json.dump(artifacts.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return artifacts


def _outdir(cfg, out=None):
    directory = out or cfg["output.directory"]
    os.makedirs(directory, exist_ok=True)
    return directory


# -- library-level studies ---------------------------------------------------


def convergence_study(pot, grid, initial, config, mode_list, reference_modes, reference=None):
    """Errors ``E(N)`` of truncated runs against a run with ``reference_modes`` modes.

    Returns ``(rows, reference_snapshots)`` with rows ``(N, E(N), order)``;
    ``order`` is ``None`` on the first row and otherwise compares with the
    previous row.
    """
    mode_list = tuple(mode_list)
    if any(n >= reference_modes for n in mode_list):
        raise ValueError("reference_modes must exceed every tested mode count")
    if reference is None:
        reference = run(initial, config, pot, grid, reference_modes).snapshots
    rows = []
    prev = None
    for n in mode_list:
        result = run(initial, config, pot, grid, n)
        err = error_vs_reference(result.snapshots, reference, n)
        order = None
        if prev is not None and prev[1] > 0 and err > 0:
            order = order_of_accuracy(prev[1], prev[0], err, n)
        rows.append((n, err, order))
        logger.info("N=%d  E(N)=%.4e  order=%s", n, err, order)
        prev = (n, err)
    return rows, reference


def semiclassical_gap(pot, grid, initial, config, hbar_list, n):
    """``||R^hbar(T) - R(T)||`` between von Neumann and semiclassical runs from the same data."""
    limit = run(initial, replace(config, model="semiclassical"), pot, grid, n).state
    rows = []
    for hbar in hbar_list:
        quantum = run(initial, replace(config, model="von_neumann", hbar=hbar), pot, grid, n).state
        gap = math.sqrt(grid.dx * float(np.sum(np.abs(quantum.modes - limit.modes) ** 2)))
        rows.append((hbar, gap))
    return rows


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def return_error(pot, grid, initial, config, n):
    """``||R(T) - R(0)|| / ||R(0)||``."""
    result = run(initial, config, pot, grid, n)
    start = result.snapshots[0]
    diff = result.state.modes - start.modes
    return math.sqrt(grid.dx * float(np.sum(np.abs(diff) ** 2))) / l2_norm(start)


# -- CLI commands -------------------------------------------------------------


def cmd_simulate(cfg, out=None):
    directory = _outdir(cfg, out)
    artifacts = RunArtifacts(directory)
    grid = cfg.grid()
    report = DiagnosticsReport(nm_orders=tuple(range(1, cfg["diagnostics.nm_max"] + 1)))
    result = run(cfg.initial(), cfg.evolution(), cfg.potential(), grid, cfg["basis.n_modes"], observers=[report])
    report.to_csv(artifacts.add("diagnostics", os.path.join(directory, "diagnostics.csv")))
    snap = artifacts.add("final_snapshot", os.path.join(directory, "final.wh"))
    write_snapshots(snap, [result.state], cfg["evolution.hbar"], cfg["evolution.model"])
    if "dat" in cfg["output.formats"]:
        path = artifacts.add("plot", os.path.join(directory, "diagnostics.dat"))
        _write_plot(path, report.columns, report.rows)
    norms = report.column("l2_norm")
    results = {
        "steps": result.steps,
        "t_final": result.state.t,
        "l2_norm_initial": float(norms[0]),
        "l2_norm_final": float(norms[-1]),
        "l2_relative_drift": float(abs(norms[-1] - norms[0]) / norms[0]) if norms[0] else 0.0,
        "trace_final": [float(report.rows[-1][2]), float(report.rows[-1][3])],
        "parity_residual_max": float(np.max(report.column("parity_residual"))),
        "boundary_mass_max": float(np.max(report.column("boundary_mass"))),
    }
    if results["boundary_mass_max"] > 1e-8:
        logger.warning("boundary mass %.2e exceeds 1e-8; enlarge the domain", results["boundary_mass_max"])
    return _finish(artifacts, cfg, results)


def _as_complex64(states):
    return [replace(s, modes=s.modes.astype(np.complex64).astype(complex)) for s in states]


def load_or_compute_reference(cfg, directory):
    """Reference snapshots for a converge config, cached by the upstream config checksum.

    The reference is always passed through the complex64 snapshot format so a
    cached and a fresh run produce identical error tables.
    """
    key = cfg.checksum(REFERENCE_KEYS)
    cache_dir = os.path.join(directory, "cache")
    path = os.path.join(cache_dir, f"reference_{key[:16]}.wh")
    meta_path = path + ".json"
    grid = cfg.grid()
    config = cfg.evolution()
    if cfg["converge.cache"] and os.path.exists(path) and os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        if meta.get("checksum") != key:
            raise ValueError(f"reference cache {path} was written for a different configuration")
        states, _, _ = read_snapshots(path, grid.scheme)
        logger.info("loaded cached reference %s", path)
        return states, path, True
    reference = run(cfg.initial(), config, cfg.potential(), grid, cfg["converge.reference_modes"]).snapshots
    reference = _as_complex64(reference)
    if cfg["converge.cache"]:
        os.makedirs(cache_dir, exist_ok=True)
        write_snapshots(path, reference, config.hbar, config.model)
        with open(meta_path, "w") as fh:
            json.dump({"checksum": key, "keys": {k: cfg[k] for k in REFERENCE_KEYS}}, fh, indent=2, default=list)
    return reference, path, False


def cmd_converge(cfg, out=None):
    directory = _outdir(cfg, out)
    artifacts = RunArtifacts(directory)
    reference, cache_path, cached = load_or_compute_reference(cfg, directory)
    rows, _ = convergence_study(
        cfg.potential(),
        cfg.grid(),
        cfg.initial(),
        cfg.evolution(),
        cfg["converge.mode_list"],
        cfg["converge.reference_modes"],
        reference=reference,
    )
    _write_rows(artifacts.add("converge", os.path.join(directory, "converge.csv")), ("N", "error", "order"), rows)
    if "dat" in cfg["output.formats"]:
        path = artifacts.add("plot", os.path.join(directory, "converge_plot.dat"))
        _write_plot(path, ("N", "log10_error"), [(n, math.log10(e) if e > 0 else None) for n, e, _ in rows])
    if cfg["converge.cache"]:
        artifacts.add("reference_cache", cache_path)
    errors = [e for _, e, _ in rows]
    orders = [o for _, _, o in rows[1:]]
    results = {
        "rows": [{"N": n, "error": e, "order": o} for n, e, o in rows],
        "reference_from_cache": cached,
        "snapshot_every": cfg["evolution.snapshot_every"],
        "strictly_decreasing": all(b < a for a, b in zip(errors, errors[1:])),
        "orders_non_decreasing": all(b >= a for a, b in zip(orders, orders[1:])),
    }
    return _finish(artifacts, cfg, results)


def cmd_hbar_sweep(cfg, out=None):
    directory = _outdir(cfg, out)
    artifacts = RunArtifacts(directory)
    config = cfg.evolution(t_final=cfg["sweep.t_final"])
    rows = semiclassical_gap(
        cfg.potential(), cfg.grid(), cfg.initial(), config, cfg["sweep.hbar_list"], cfg["basis.n_modes"]
    )
    _write_rows(artifacts.add("hbar_sweep", os.path.join(directory, "hbar_sweep.csv")), ("hbar", "difference"), rows)
    positive = [(h, d) for h, d in rows if d > 0]
    slope = loglog_slope(*zip(*positive)) if len(positive) >= 2 else None
    if "dat" in cfg["output.formats"]:
        path = artifacts.add("plot", os.path.join(directory, "hbar_sweep_plot.dat"))
        _write_plot(path, ("log10_hbar", "log10_difference"), [(math.log10(h), math.log10(d)) for h, d in positive])
    results = {"rows": [{"hbar": h, "difference": d} for h, d in rows], "loglog_slope": slope}
    return _finish(artifacts, cfg, results)


def cmd_periodicity(cfg, out=None):
    if cfg["potential.kind"] != "harmonic":
        raise ValueError("periodicity needs the harmonic potential")
    directory = _outdir(cfg, out)
    artifacts = RunArtifacts(directory)
    t_final = 2 * math.pi * cfg["periodicity.periods"]
    err = return_error(
        cfg.potential(), cfg.grid(), cfg.initial(), cfg.evolution(t_final=t_final), cfg["basis.n_modes"]
    )
    _write_rows(
        artifacts.add("periodicity", os.path.join(directory, "periodicity.csv")),
        ("t_final", "relative_return_error"),
        [(t_final, err)],
    )
    return _finish(artifacts, cfg, {"t_final": t_final, "relative_return_error": err})


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "hbar_sweep": cmd_hbar_sweep,
    "periodicity": cmd_periodicity,
}
