"""Batch pipeline: simulate -> slopes -> reconstruct, plus schedule export.

Subcommands
-----------
simulate     write one attenuation-grid CSV per harmonic filter setting
slopes       two-stage linear fits per setting, one slope matrix per group
reconstruct  comb deconvolution of the slope matrices into spectral samples
pipeline     all three stages in order
schedule     export per-qubit pulse schedules for one filter setting

Exit codes: 0 success, 2 configuration error, 3 numerical or diagnostic
failure (no linear trend, ill conditioning, missing inputs, synthesis
problems).  Outputs are deterministic for a fixed config and seed.
"""

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import __version__, io
from .attenuation import attenuation_grid
from .config import load_config, parse_config
from .errors import (ConfigError, MissingInputError, NoLinearTrendError,
                     StspecError)
from .filters import SequenceSettings, schedules_for_register
from .reconstruct import SlopeMatrix, alvarez_suter, slopes_from_grid

TWO_PI = 2.0 * np.pi


def _grid_filename(gi, m, l):
    return f"g{gi:02d}_m{m}_l{l}.csv"


def _slopes_filename(gi):
    return f"slopes_g{gi:02d}.csv"


def _setting_seed(seed, gi, m, l):
    if seed is None:
        return None
    return int(np.random.SeedSequence(entropy=seed,
                                      spawn_key=(gi, m, l)).generate_state(1)[0])


def _settings_table(config):
    """Flat list of every harmonic setting the sweep requires."""
    table = []
    for gi, k0, w0 in config.groups():
        for m, l, kp, wp in config.harmonic_settings(k0, w0):
            table.append({
                "group": gi, "k0": k0, "omega0": w0, "m": m, "l": l,
                "k_p": kp, "omega_p": wp, "tau_p": np.pi / wp,
                "file": _grid_filename(gi, m, l),
            })
    return table


def _simulate_one(raw_config, entry, out_dir):
    """Worker: compute and write a single attenuation grid."""
    config = parse_config(raw_config)
    grid = attenuation_grid(
        config.model, config.layout, tau_p=entry["tau_p"], k_p=entry["k_p"],
        ns_values=config.ns_values, nt_values=config.nt_values,
        method=config.method, realizations=config.realizations,
        seed=_setting_seed(config.seed, entry["group"], entry["m"], entry["l"]),
        m_max=config.m_max)
    path = os.path.join(out_dir, entry["file"])
    io.write_grid_csv(path, grid, config.hash)
    io.write_sidecar(path + ".meta.json", {
        "setting": {k: entry[k] for k in
                    ("group", "k0", "omega0", "m", "l", "k_p", "omega_p", "tau_p")},
        "ns_values": list(config.ns_values),
        "nt_values": list(config.nt_values),
        "method": config.method,
        "seed": config.seed,
        "model": config.raw.get("model"),
        "layout": config.layout.to_dict(),
        "version": __version__,
        "config": config.hash,
    })
    return path


def cmd_simulate(config, out_dir, threads=1):
    """Generate all attenuation grids required by the sweep."""
    grids_dir = os.path.join(out_dir, "grids")
    os.makedirs(grids_dir, exist_ok=True)
    table = _settings_table(config)
    written = []
    try:
        if threads > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_simulate_one, config.raw, entry, grids_dir)
                           for entry in table]
                for fut in futures:
                    written.append(fut.result())
        else:
            for entry in table:
                written.append(_simulate_one(config.raw, entry, grids_dir))
        manifest = {
            "version": __version__,
            "config_hash": config.hash,
            "config": config.raw,
            "settings": [
                {**{k: e[k] for k in ("group", "k0", "omega0", "m", "l",
                                      "k_p", "omega_p", "tau_p")},
                 "file": os.path.join("grids", e["file"])}
                for e in table
            ],
        }
        manifest_path = os.path.join(out_dir, "manifest.json")
        io.write_sidecar(manifest_path, manifest)
        written.append(manifest_path)
    except Exception:
        for path in written:
            for victim in (path, path + ".meta.json"):
                if os.path.exists(victim):
                    os.unlink(victim)
        raise
    return written


def _load_manifest(in_dir):
    path = os.path.join(in_dir, "manifest.json")
    if not os.path.exists(path):
        raise MissingInputError(f"no manifest.json in {in_dir}", [path])
    return io.read_sidecar(path)


def cmd_slopes(in_dir, out_dir=None):
    """Fit every grid and assemble per-group slope files.

    No-linear-trend failures are collected (the run continues for the
    remaining settings) and returned; missing grid files abort with the
    full list.
    """
    out_dir = out_dir or in_dir
    manifest = _load_manifest(in_dir)
    config = parse_config(manifest["config"])
    slopes_dir = os.path.join(out_dir, "slopes")
    os.makedirs(slopes_dir, exist_ok=True)

    missing = [s["file"] for s in manifest["settings"]
               if not os.path.exists(os.path.join(in_dir, s["file"]))]
    if missing:
        raise MissingInputError(
            f"{len(missing)} grid file(s) missing from {in_dir}", missing)

    failures = []
    by_group = {}
    for s in manifest["settings"]:
        grid = io.read_grid_csv(os.path.join(in_dir, s["file"]),
                                tau_p=s["tau_p"], k_p=s["k_p"],
                                period=config.layout.period)
        try:
            result = slopes_from_grid(grid, min_points=config.fit_min_points,
                                      threshold=config.fit_threshold)
        except (NoLinearTrendError, ValueError) as err:
            failures.append({"file": s["file"], "error": str(err)})
            continue
        by_group.setdefault(s["group"], []).append((s, result))

    kd = config.kd
    tc = config.tc
    for gi, items in sorted(by_group.items()):
        entries = []
        diagnostics = []
        for s, result in sorted(items, key=lambda it: (it[0]["m"], it[0]["l"])):
            entries.append({
                "m": s["m"], "l": s["l"],
                "kp_over_kd": s["k_p"] / kd,
                "omega_p_tc_over_2pi": s["omega_p"] * tc / TWO_PI,
                "slope": result.slope,
                "intercept": result.length_fit.intercept,
                "cutoff": result.length_fit.cutoff,
                "residual_per_dof": result.length_fit.residual_per_dof,
            })
            diagnostics.append({
                "m": s["m"], "l": s["l"],
                "stage1_cutoffs": [f.cutoff for f in result.row_fits],
                "stage1_residuals": [f.residual_per_dof for f in result.row_fits],
                "stage2_cutoff": result.length_fit.cutoff,
                "stage2_residual": result.length_fit.residual_per_dof,
                "correlation_time_estimate": result.correlation_time_estimate,
                "correlation_length_estimate": result.correlation_length_estimate,
            })
        path = os.path.join(slopes_dir, _slopes_filename(gi))
        io.write_slopes_csv(path, entries, config.hash)
        io.write_sidecar(path + ".meta.json", {
            "group": gi, "diagnostics": diagnostics, "version": __version__,
            "config": config.hash,
        })
    return failures


def cmd_reconstruct(in_dir, out_dir=None):
    """Run the comb deconvolution over all slope matrices."""
    out_dir = out_dir or in_dir
    manifest = _load_manifest(in_dir)
    config = parse_config(manifest["config"])
    groups = config.groups()

    matrices = []
    missing = []
    for gi, k0, w0 in groups:
        path = os.path.join(in_dir, "slopes", _slopes_filename(gi))
        if not os.path.exists(path):
            missing.append(path)
            continue
        rows = io.read_slopes_csv(path)
        ms = list(range(1, config.m_c + 1, 2))
        values = np.full((len(ms), config.l_c + 1), np.nan)
        residuals = np.full_like(values, np.nan)
        for r in rows:
            values[ms.index(r["m"]), r["l"]] = r["slope"]
            residuals[ms.index(r["m"]), r["l"]] = r["residual_per_dof"]
        if np.any(np.isnan(values)):
            holes = [f"g{gi:02d} m={ms[i]} l={j}"
                     for i, j in zip(*np.nonzero(np.isnan(values)))]
            missing.extend(holes)
            continue
        matrices.append(SlopeMatrix(k0=k0, omega0=w0, m_c=config.m_c,
                                    values=values, fit_residuals=residuals))
    if missing:
        raise MissingInputError(
            f"{len(missing)} slope matrix entries missing", missing)

    result = alvarez_suter(matrices, config.layout, config.m_c, config.l_c,
                           strategy=config.strategy,
                           cond_limit=config.cond_limit)
    kd, tc = config.kd, config.tc
    rows = []
    for p in result.points:
        rows.append({
            "k_over_kd": p.k / kd,
            "omega_tc_over_2pi": p.omega * tc / TWO_PI,
            "S_reconstructed": p.value,
            "S_model_if_known": float(config.model.evaluate(p.k, p.omega)),
            "m": p.m, "lprime": p.l,
            "k0": p.k0 / kd, "omega0": p.omega0 * tc / TWO_PI,
            "flag": "negative" if p.negative else "ok",
        })
    out_path = os.path.join(out_dir, "reconstruction.csv")
    io.write_reconstruction_csv(out_path, rows, config.hash)
    io.write_sidecar(out_path.replace(".csv", ".meta.json"), {
        "condition_numbers": result.condition_numbers,
        "index_sets": {str(m): list(s) for m, s in result.index_sets.items()},
        "skipped_m": list(result.skipped_m),
        "version": __version__,
        "config": config.hash,
    })
    return out_path


def cmd_schedule(config, out_dir):
    """Export pulse schedules (times in units of tau_p) for one setting."""
    if config.schedule is None:
        raise ConfigError("config has no schedule section")
    os.makedirs(out_dir, exist_ok=True)
    settings = SequenceSettings(tau_p=np.pi / config.schedule["omega_p"],
                                k_p=config.schedule["k_p"],
                                n_t=config.schedule["nt"])
    layout = config.layout.with_repetitions(max(config.ns_values))
    schedules = schedules_for_register(layout, settings)
    path = os.path.join(out_dir, "schedule.csv")
    io.write_schedule_csv(path, schedules, settings.tau_p, config.hash)
    return path


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stspec",
        description="Spatiotemporal noise spectroscopy pipeline")
    parser.add_argument("command",
                        choices=["simulate", "slopes", "reconstruct",
                                 "pipeline", "schedule"])
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None,
                        help="override engine.seed")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            raw = dict(config.raw)
            raw["engine"] = dict(raw.get("engine", {}), seed=args.seed)
            config = parse_config(raw)
        out_dir = args.out or config.output_dir
        os.makedirs(out_dir, exist_ok=True)

        if args.command in ("simulate", "pipeline"):
            cmd_simulate(config, out_dir, threads=args.threads)
        if args.command in ("slopes", "pipeline"):
            failures = cmd_slopes(out_dir)
            if failures:
                for f in failures:
                    print(f"slope fit failed: {f['file']}: {f['error']}",
                          file=sys.stderr)
                return 3
        if args.command in ("reconstruct", "pipeline"):
            path = cmd_reconstruct(out_dir)
            print(path)
        if args.command == "schedule":
            print(cmd_schedule(config, out_dir))
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except StspecError as err:
        print(f"error: {err}", file=sys.stderr)
        if isinstance(err, MissingInputError):
            for item in err.missing:
                print(f"  missing: {item}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
