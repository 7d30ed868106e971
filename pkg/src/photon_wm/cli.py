"""Command-line entry point.

Usage::

    photon-wm <propagate|two-photon-demo|turbulence-sweep|mc-validate> \\
        --config run.toml [--out DIR] [--seed N] [--threads N]

The configuration is a TOML file with one table per module.  Unknown
tables or keys, wrong types and non-positive physical parameters are
rejected before any computation starts.  Every run writes
``manifest.json`` next to its outputs.

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import io as pio
from .errors import CFLError, ConfigurationError, NumericalError
from .fields import C_LIGHT, Grid3, MediumMap

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
SUBCOMMANDS = ("propagate", "two-photon-demo", "turbulence-sweep", "mc-validate")


# --- configuration schema ----------------------------------------------------


@dataclass(frozen=True)
class Key:
    kind: type | tuple
    default: object
    positive: bool = False
    choices: tuple | None = None


_INT, _NUM, _STR = (int,), (int, float), (str,)

SCHEMA = {
    "run": {
        "seed": Key(_INT, 12345),
        "threads": Key(_INT, 1, positive=True),
        "out": Key(_STR, "out"),
    },
    "grid": {
        "n": Key(_INT, 32, positive=True),
        "length": Key(_NUM, 1e-6, positive=True),
    },
    "medium": {
        "kind": Key(_STR, "vacuum", choices=("vacuum", "uniform", "sinusoidal")),
        "index": Key(_NUM, 1.5, positive=True),
        "amplitude": Key(_NUM, 0.2, positive=True),
        "axis": Key(_INT, 0, choices=(0, 1, 2)),
        "harmonic": Key(_INT, 1, positive=True),
    },
    "propagate": {
        "initial": Key(_STR, "gaussian", choices=("gaussian", "plane-wave")),
        "width": Key(_NUM, 0.1, positive=True),
        "polarization": Key(list, [1.0, 0.0, 0.0]),
        "mode": Key(list, [0, 0, 1]),
        "helicity": Key(_INT, 1, choices=(1, -1)),
        "periods": Key(_NUM, 1.0, positive=True),
        "steps": Key(_INT, 8, positive=True),
        "integrator": Key(_STR, "auto", choices=("auto", "spectral", "rk4")),
        "cfl_safety": Key(_NUM, 0.5, positive=True),
        "slice_axis": Key(_INT, 2, choices=(0, 1, 2)),
    },
    "two_photon": {
        "l": Key(_INT, 1, positive=True),
        "waist": Key(_NUM, 1 / 6, positive=True),
        "cycles_z": Key(_INT, 2, positive=True),
        "periods": Key(_NUM, 0.5, positive=True),
        "steps": Key(_INT, 4, positive=True),
        "cfl_safety": Key(_NUM, 0.5, positive=True),
    },
    "sweep": {
        "l": Key(list, [1, 2, 3]),
        "w_over_r0_min": Key(_NUM, 0.05, positive=True),
        "w_over_r0_max": Key(_NUM, 3.0, positive=True),
        "count": Key(_INT, 60, positive=True),
        "spacing": Key(_STR, "linear", choices=("linear", "log")),
        "variant": Key(_STR, "closed-form-consistent", choices=("closed-form-consistent", "as-printed")),
    },
    "mc": {
        "samples": Key(_INT, 100_000, positive=True),
        "l": Key(list, [1, 2]),
        "w_over_r0": Key(list, [0.5, 1.0, 2.0]),
        "variant": Key(_STR, "closed-form-consistent", choices=("closed-form-consistent", "as-printed")),
        "n_radial": Key(_INT, 32, positive=True),
    },
}

# Lengths in [propagate] and [two_photon] are fractions of grid.length.
_SECTIONS_FOR = {
    "propagate": ("run", "grid", "medium", "propagate"),
    "two-photon-demo": ("run", "grid", "medium", "two_photon"),
    "turbulence-sweep": ("run", "sweep"),
    "mc-validate": ("run", "mc"),
}


def _check_value(where: str, key: Key, value):
    if key.kind is list:
        if not isinstance(value, list) or not value:
            raise ConfigurationError(f"{where}: expected a non-empty array")
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigurationError(f"{where}: array entries must be numbers")
        return list(value)
    if isinstance(value, bool) or not isinstance(value, key.kind):
        names = "/".join(t.__name__ for t in key.kind)
        raise ConfigurationError(f"{where}: expected {names}, got {type(value).__name__}")
    if key.positive and not value > 0:
        raise ConfigurationError(f"{where}: must be positive, got {value!r}")
    if key.choices is not None and value not in key.choices:
        raise ConfigurationError(f"{where}: must be one of {list(key.choices)}, got {value!r}")
    return float(value) if key.kind == _NUM else value


def resolve_config(raw: dict, subcommand: str) -> dict:
    """Validate ``raw`` against :data:`SCHEMA` and fill in defaults."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigurationError(f"[{section}] must be a table")
        for k in body:
            if k not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {section}.{k}")
    cfg = {}
    for section in _SECTIONS_FOR[subcommand]:
        body = raw.get(section, {})
        cfg[section] = {k: _check_value(f"{section}.{k}", spec, body.get(k, spec.default)) for k, spec in SCHEMA[section].items()}
    _cross_checks(cfg)
    return cfg


def _cross_checks(cfg: dict):
    if "sweep" in cfg:
        s = cfg["sweep"]
        if s["w_over_r0_max"] < s["w_over_r0_min"]:
            raise ConfigurationError("sweep.w_over_r0_max: must not be below sweep.w_over_r0_min")
        _positive_ints("sweep.l", s["l"])
    if "mc" in cfg:
        _positive_ints("mc.l", cfg["mc"]["l"])
        if any(not v > 0 for v in cfg["mc"]["w_over_r0"]):
            raise ConfigurationError("mc.w_over_r0: entries must be positive")
        if cfg["mc"]["samples"] < 2:
            raise ConfigurationError("mc.samples: need at least 2")
    if "propagate" in cfg:
        p = cfg["propagate"]
        if len(p["polarization"]) != 3:
            raise ConfigurationError("propagate.polarization: need 3 components")
        if len(p["mode"]) != 3 or any(float(v) != int(v) for v in p["mode"]):
            raise ConfigurationError("propagate.mode: need 3 integers")
        if not any(p["mode"]) and p["initial"] == "plane-wave":
            raise ConfigurationError("propagate.mode: the zero mode has no period")
        if p["integrator"] == "spectral" and cfg["medium"]["kind"] != "vacuum":
            raise ConfigurationError("propagate.integrator: 'spectral' is only valid in vacuum")


def _positive_ints(where: str, values):
    if any(float(v) != int(v) or int(v) <= 0 for v in values):
        raise ConfigurationError(f"{where}: entries must be positive integers")


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


# --- subcommands ---------------------------------------------------------------


def _grid_and_medium(cfg: dict):
    g = cfg["grid"]
    grid = Grid3.cubic(g["n"], g["length"])
    m = cfg["medium"]
    if m["kind"] == "vacuum":
        return grid, None
    if m["kind"] == "uniform":
        return grid, MediumMap.uniform(grid, m["index"])
    if not m["amplitude"] < 1:
        raise ConfigurationError("medium.amplitude: must be below 1 for a positive permittivity")
    return grid, MediumMap.sinusoidal_epsilon(grid, m["amplitude"], m["axis"], m["harmonic"])


def _into_medium(psi, medium):
    """Re-express a vacuum field with the same divergence-free D and B in ``medium``.

    ``div D = div B = 0`` is exactly the in-medium constraint, so the result
    starts on the constraint surface.
    """
    if medium is None:
        return psi
    from .fields import db_from_rs, rs_from_db

    d, b = db_from_rs(psi)
    return rs_from_db(d, b, medium)


def _time_config(grid, medium, safety, integrator="auto"):
    from .single_photon import PropagationConfig

    if integrator == "spectral" or (integrator == "auto" and medium is None):
        return None
    bound = PropagationConfig(1.0, "rk4", safety).max_stable_dt(grid, medium)
    # RK4 is stable on the imaginary axis up to 2 sqrt(2); the largest curl eigenvalue is v |k|max
    k_max = math.sqrt(sum((math.pi / h) ** 2 for h in grid.spacing))
    limit = 2 * math.sqrt(2) / (k_max * float(np.max(medium.speed)))
    if bound > limit:
        raise CFLError(f"cfl_safety = {safety:g} gives dt = {bound:.3e} s above the RK4 stability limit {limit:.3e} s")
    return PropagationConfig(bound, "rk4", safety)


def _run_propagate(cfg: dict, out: Path, threads: int) -> dict:
    from .single_photon import (
        divergence_residual,
        energy_expectation,
        evolve,
        gaussian_packet,
        plane_wave,
        transverse_part,
    )

    grid, medium = _grid_and_medium(cfg)
    p = cfg["propagate"]
    length = cfg["grid"]["length"]
    if p["initial"] == "gaussian":
        pol = np.asarray(p["polarization"], dtype=float)
        psi = transverse_part(gaussian_packet(grid, p["width"] * length, pol))
        k_ref = 2 * np.pi / length
    else:
        mode = tuple(int(v) for v in p["mode"])
        psi = plane_wave(grid, mode, p["helicity"])
        k_ref = 2 * np.pi * math.sqrt(sum(v * v for v in mode)) / length
    psi = _into_medium(psi, medium)
    v_ref = C_LIGHT if medium is None else float(np.min(medium.speed))
    total = p["periods"] * 2 * np.pi / (k_ref * v_ref)
    tc = _time_config(grid, medium, p["cfl_safety"], p["integrator"])
    if tc is not None:
        n_sub = math.ceil(total / p["steps"] / tc.dt)
        tc = type(tc)(total / p["steps"] / n_sub, "rk4", p["cfl_safety"])

    outputs = {"slice_initial.csv": pio.write_field_slice_csv(out / "slice_initial.csv", psi, p["slice_axis"])}
    e0 = energy_expectation(psi)
    rows = [[0, 0.0, e0, 1.0, divergence_residual(psi, medium)]]
    dt = total / p["steps"]
    for s in range(1, p["steps"] + 1):
        psi = evolve(psi, dt, medium, tc)
        e = energy_expectation(psi)
        rows.append([s, s * dt, e, e / e0, divergence_residual(psi, medium)])
    outputs["energy.csv"] = pio.write_csv(out / "energy.csv", ["step", "t", "energy", "energy_ratio", "divergence_residual"], rows)
    outputs["slice_final.csv"] = pio.write_field_slice_csv(out / "slice_final.csv", psi, p["slice_axis"])
    outputs["field_final.pwm"] = pio.save_field(out / "field_final.pwm", psi)
    return {"outputs": outputs, "summary": {"duration_s": total, "final_energy_ratio": rows[-1][3]}}


def _run_two_photon(cfg: dict, out: Path, threads: int) -> dict:
    from .two_photon import (
        TwoPhotonState,
        assemble,
        evolve,
        joint_density,
        joint_energy,
        oam_pair_state,
    )

    grid, medium = _grid_and_medium(cfg)
    t2 = cfg["two_photon"]
    length = cfg["grid"]["length"]
    state = oam_pair_state(grid, t2["l"], t2["waist"] * length, t2["cycles_z"])
    if medium is not None:
        basis = tuple(_into_medium(b, medium) for b in state.basis)
        state = TwoPhotonState(basis, state.coeffs, (medium,) * len(basis))
    v_ref = C_LIGHT if medium is None else float(np.min(medium.speed))
    kz = 2 * np.pi * t2["cycles_z"] / length
    total = t2["periods"] * 2 * np.pi / (kz * v_ref)
    tc = _time_config(grid, medium, t2["cfl_safety"])
    dt = total / t2["steps"]
    if tc is not None:
        tc = type(tc)(dt / math.ceil(dt / tc.dt), "rk4", t2["cfl_safety"])

    h = length / grid.shape[0]
    pairs = [((0.0, 0.0, 0.0), (2 * h, h, 0.0)), ((2 * h, h, 0.0), (-h, 2 * h, 0.0)), ((h, 0.0, 0.0), (0.0, -h, 2 * h))]
    e0 = joint_energy(state)
    energy_rows, density_rows = [[0, 0.0, e0, 1.0]], []
    for s in range(t2["steps"] + 1):
        if s > 0:
            state = evolve(state, dt, tc)
            e = joint_energy(state)
            energy_rows.append([s, s * dt, e, e / e0])
        for i, (x1, x2) in enumerate(pairs):
            density_rows.append([s, s * dt, i, *x1, *x2, joint_density(state, x1, x2)])
    samples = [assemble(state, x1, x2) for x1, x2 in pairs]
    outputs = {
        "joint_energy.csv": pio.write_csv(out / "joint_energy.csv", ["step", "t", "joint_energy", "ratio"], energy_rows),
        "joint_density.csv": pio.write_csv(
            out / "joint_density.csv", ["step", "t", "pair", "x1", "y1", "z1", "x2", "y2", "z2", "density"], density_rows
        ),
        "joint_samples.csv": pio.write_joint_sample_csv(out / "joint_samples.csv", samples),
    }
    basis_files = []
    for i, b in enumerate(state.basis):
        name = f"basis_{i}.pwm"
        outputs[name] = pio.save_field(out / name, b)
        basis_files.append(outputs[name])
    outputs["state.json"] = pio.write_state_manifest(out / "state.json", state, basis_files)
    return {"outputs": outputs, "summary": {"duration_s": total, "final_energy_ratio": energy_rows[-1][3]}}


def _run_sweep(cfg: dict, out: Path, threads: int) -> dict:
    from .plotting import plot_sweep
    from .turbulence import sweep

    s = cfg["sweep"]
    if s["spacing"] == "log":
        grid = np.geomspace(s["w_over_r0_min"], s["w_over_r0_max"], s["count"])
    else:
        grid = np.linspace(s["w_over_r0_min"], s["w_over_r0_max"], s["count"])
    result = sweep([int(v) for v in s["l"]], grid, s["variant"], max_workers=threads)
    outputs = {
        "sweep.csv": pio.write_sweep_csv(out / "sweep.csv", result),
        "sweep.svg": plot_sweep(result, out / "sweep.svg"),
    }
    failures = [{"l": l, "w_over_r0": r, "error": msg} for l, r, msg in result.failures]
    return {"outputs": outputs, "failures": failures, "summary": {"rows": len(result.rows)}}


def _run_mc(cfg: dict, out: Path, threads: int, seed: int) -> dict:
    from .mc_oracle import RNG_ALGORITHM, mc_channel, mc_density_matrix
    from .turbulence import AtmosphereModel, LgMode, output_density_matrix, transfer_probability

    mc = cfg["mc"]
    n = mc["samples"]
    ch_rows, dm_rows = [], []
    worst = 0.0
    for i, l in enumerate(int(v) for v in mc["l"]):
        for j, ratio in enumerate(float(v) for v in mc["w_over_r0"]):
            sub = seed + 1000 * i + j
            mode, atm = LgMode(l, w=ratio), AtmosphereModel(1.0, mc["variant"])
            ms = [0, 2 * l]
            analytic = transfer_probability(mode, atm, ms)
            est = mc_channel(mode, atm, n, sub, m_list=ms, n_radial=mc["n_radial"], workers=threads)
            for m, a in zip(ms, analytic):
                z = est[m].zscore(a)
                worst = max(worst, z)
                ch_rows.append([l, ratio, m, float(a), est[m].mean, est[m].stderr, n, z])
            rho = output_density_matrix(l, ratio, mc["variant"]).unnormalized
            dm = mc_density_matrix(l, ratio, n, sub + 500, mc["variant"], n_radial=mc["n_radial"], workers=threads)
            zs = dm.zscores(rho)
            worst = max(worst, float(np.max(zs)))
            for a in range(4):
                for b in range(4):
                    dm_rows.append(
                        [l, ratio, a, b, rho[a, b].real, rho[a, b].imag, dm.mean[a, b].real, dm.mean[a, b].imag,
                         dm.stderr_real[a, b], dm.stderr_imag[a, b], n, zs[a, b]]
                    )
    outputs = {
        "mc_channel.csv": pio.write_csv(
            out / "mc_channel.csv", ["l", "w_over_r0", "m", "analytic", "mean", "stderr", "count", "zscore"], ch_rows
        ),
        "mc_density.csv": pio.write_csv(
            out / "mc_density.csv",
            ["l", "w_over_r0", "row", "col", "analytic_re", "analytic_im", "mean_re", "mean_im", "stderr_re", "stderr_im", "count", "zscore"],
            dm_rows,
        ),
    }
    return {"outputs": outputs, "rng": RNG_ALGORITHM, "summary": {"max_zscore": worst}}


# --- driver ----------------------------------------------------------------------


def run(subcommand: str, raw_config: dict, out: Path | None = None, seed: int | None = None, threads: int | None = None) -> dict:
    """Validate, execute and write the manifest; returns the manifest dict."""
    cfg = resolve_config(raw_config, subcommand)
    if seed is not None:
        cfg["run"]["seed"] = int(seed)
    if threads is not None:
        if threads < 1:
            raise ConfigurationError("--threads: must be positive")
        cfg["run"]["threads"] = int(threads)
    out = Path(cfg["run"]["out"] if out is None else out)
    cfg["run"]["out"] = str(out)
    out.mkdir(parents=True, exist_ok=True)

    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    threads = cfg["run"]["threads"]
    if subcommand == "propagate":
        res = _run_propagate(cfg, out, threads)
    elif subcommand == "two-photon-demo":
        res = _run_two_photon(cfg, out, threads)
    elif subcommand == "turbulence-sweep":
        res = _run_sweep(cfg, out, threads)
    else:
        res = _run_mc(cfg, out, threads, cfg["run"]["seed"])
    from .mc_oracle import RNG_ALGORITHM

    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config": cfg,
        "seed": cfg["run"]["seed"],
        "rng_algorithm": RNG_ALGORITHM,
        "started_utc": started,
        "wall_clock_s": time.perf_counter() - t0,
        "outputs": {name: pio.sha256_file(p) for name, p in sorted(res["outputs"].items())},
        "summary": res.get("summary", {}),
        "failures": res.get("failures", []),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photon-wm", description="Two-photon wave mechanics simulations.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, type=Path, help="TOML configuration file")
    p.add_argument("--out", type=Path, help="output directory (overrides run.out)")
    p.add_argument("--seed", type=int, help="random seed, 0 <= seed < 2**64 (overrides run.seed)")
    p.add_argument("--threads", type=int, help="worker threads (overrides run.threads)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigurationError("--seed: must be an unsigned 64-bit integer")
        raw = load_config(args.config)
        manifest = run(args.subcommand, raw, args.out, args.seed, args.threads)
    except ConfigurationError as exc:
        print(f"photon-wm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"photon-wm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"photon-wm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if manifest["failures"]:
        for f in manifest["failures"]:
            print(f"photon-wm: point l={f['l']} w/r0={f['w_over_r0']}: {f['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"photon-wm: wrote {len(manifest['outputs'])} files and manifest.json to {manifest['config']['run']['out']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
