"""CSV and sidecar persistence for pipeline stages.

All files are plain CSV with leading ``#`` comment lines carrying the tool
version and the configuration hash, so external tools (and the figure
scripts) need no bindings.  Writes are atomic (temp file + rename) and
timestamp-free so reruns are bit-identical.
"""

import csv
import io
import json
import os

import numpy as np

from . import __version__
from .attenuation import AttenuationGrid

__all__ = [
    "atomic_write_text",
    "write_grid_csv",
    "read_grid_csv",
    "write_slopes_csv",
    "read_slopes_csv",
    "write_reconstruction_csv",
    "write_schedule_csv",
    "write_sidecar",
    "read_sidecar",
]

GRID_COLUMNS = ["ns", "nt", "chi", "stderr", "method"]
SLOPES_COLUMNS = ["m", "l", "kp_over_kd", "omega_p_tc_over_2pi", "slope",
                  "intercept", "cutoff", "residual_per_dof"]
RECON_COLUMNS = ["k_over_kd", "omega_tc_over_2pi", "S_reconstructed",
                 "S_model_if_known", "m", "lprime", "k0", "omega0", "flag"]
SCHEDULE_COLUMNS = ["qubit", "pulse_time"]


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _render_csv(columns, rows, config_hash=None):
    buf = io.StringIO()
    buf.write(f"# stspec {__version__}\n")
    if config_hash:
        buf.write(f"# config={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _read_csv(path, columns):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if header != columns:
        raise ValueError(f"{path}: expected columns {columns}, got {header}")
    return list(reader)


def write_grid_csv(path, grid, config_hash=None):
    rows = []
    for i, ns in enumerate(grid.ns_values):
        for j, nt in enumerate(grid.nt_values):
            rows.append([ns, nt, grid.chi[i, j], grid.stderr[i, j], grid.method])
    atomic_write_text(path, _render_csv(GRID_COLUMNS, rows, config_hash))


def read_grid_csv(path, tau_p, k_p, period):
    rows = _read_csv(path, GRID_COLUMNS)
    ns_values = sorted({int(r[0]) for r in rows})
    nt_values = sorted({int(r[1]) for r in rows})
    chi = np.full((len(ns_values), len(nt_values)), np.nan)
    err = np.zeros_like(chi)
    method = rows[0][4]
    for r in rows:
        i = ns_values.index(int(r[0]))
        j = nt_values.index(int(r[1]))
        chi[i, j] = float(r[2])
        err[i, j] = float(r[3])
    if np.any(np.isnan(chi)):
        raise ValueError(f"{path}: incomplete (ns, nt) grid")
    return AttenuationGrid(tau_p=tau_p, k_p=k_p, period=period,
                           ns_values=tuple(ns_values), nt_values=tuple(nt_values),
                           chi=chi, stderr=err, method=method)


def write_slopes_csv(path, entries, config_hash=None):
    """entries: iterable of dicts with the SLOPES_COLUMNS keys."""
    rows = [[e[c] for c in SLOPES_COLUMNS] for e in entries]
    atomic_write_text(path, _render_csv(SLOPES_COLUMNS, rows, config_hash))


def read_slopes_csv(path):
    rows = _read_csv(path, SLOPES_COLUMNS)
    return [dict(zip(SLOPES_COLUMNS,
                     [int(r[0]), int(r[1]), float(r[2]), float(r[3]),
                      float(r[4]), float(r[5]), int(r[6]), float(r[7])]))
            for r in rows]


def write_reconstruction_csv(path, rows, config_hash=None):
    """rows: iterable of dicts with the RECON_COLUMNS keys."""
    rendered = [[r[c] for c in RECON_COLUMNS] for r in rows]
    atomic_write_text(path, _render_csv(RECON_COLUMNS, rendered, config_hash))


def write_schedule_csv(path, schedules, tau_p, config_hash=None):
    """Pulse times per qubit, in units of tau_p."""
    rows = []
    for sched in schedules:
        for t in sched.times:
            rows.append([sched.qubit, t / tau_p])
    atomic_write_text(path, _render_csv(SCHEDULE_COLUMNS, rows, config_hash))


def write_sidecar(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_sidecar(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
