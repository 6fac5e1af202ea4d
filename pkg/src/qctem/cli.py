"""Command-line entry point: ``qctem <command> [--config FILE] [flags]``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 physics-domain error, 4 I/O error. Failures also print one JSON object
on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, resources
from .classical import image_wpoa
from .config import ENGINE_CHOICES, RunConfig, load_config
from .errors import ConfigError, DomainError
from .io import OutputError, array_csv, write_atomic, write_json, write_pgm16
from .optics import DerivedOptics, MicroscopeParams, ctf_csv
from .quantum import (
    Encoding,
    build_ctem_circuit,
    distribution_metrics,
    intensity_from_state,
    phase_discrimination,
    sample_shots,
)
from .specimen import (
    DEFAULT_TABLES,
    SpecimenModel,
    build_mos2_supercell,
    gaussian_phase_grating,
    projected_potential,
    random_phase_potential,
    read_gaussian_tables,
    read_structure,
)
from .wavefield import GridSpec

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3, 4
OUT_ENV = "QCTEM_OUT"


def microscope_params(cfg: RunConfig, **overrides) -> MicroscopeParams:
    m = dict(cfg["microscope"])
    m.update(overrides)
    return MicroscopeParams(**m)


def output_dir(cfg: RunConfig) -> Path:
    return Path(cfg["output"]["dir"] or os.environ.get(OUT_ENV) or "qctem_out")


def build_specimen(cfg: RunConfig) -> SpecimenModel:
    sp = cfg["specimen"]
    tables = dict(DEFAULT_TABLES)
    if sp["gaussian_tables"] is not None:
        tables.update(read_gaussian_tables(sp["gaussian_tables"]))
    n_side = cfg["grid"]["n_side"]
    if sp["source"] == "mos2":
        grid = GridSpec(n_side, cfg["grid"]["box_length"])
        return build_mos2_supercell(sp["nx"], sp["ny"], grid, sp["lattice_constant"], tables)
    sites, box = read_structure(sp["source"])
    return SpecimenModel(sites, GridSpec(n_side, box), tables)


def cmd_ctf(cfg: RunConfig, out: Path) -> int:
    c = cfg["ctf"]
    base = microscope_params(cfg)
    cells = analysis.ctf_grid(
        c["voltages"], c["defoci"], c["c3s"], base,
        k_max=c["k_max"], n_points=c["n_points"], samples=c["samples"], strict_printed=c["strict_printed"],
    )
    summary = []
    for idx, cell in enumerate(cells):
        entry = cell.summary()
        entry["file"] = None
        if cell.table is not None:
            name = f"ctf_{idx:03d}.csv"
            write_atomic(out / name, ctf_csv(cell.table))
            entry["file"] = name
        summary.append(entry)
    write_json(out / "ctf_summary.json", {"cells": summary, "k_max": c["k_max"], "strict_printed": c["strict_printed"]})
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    s = cfg["simulate"]
    engine = s["engine"]
    model = build_specimen(cfg)
    grid = model.grid
    params = microscope_params(cfg)
    optics = DerivedOptics.from_voltage(params.voltage)
    potential = projected_potential(model)
    write_pgm16(out / "potential.pgm", potential)
    write_atomic(out / "potential.csv", array_csv(potential))

    images = {}
    if engine in ("classical", "both"):
        images["classical"] = image_wpoa(potential, params, optics, grid).intensity
    state = enc = None
    if engine in ("quantum", "both"):
        enc = Encoding.for_grid(grid)
        circuit = build_ctem_circuit(potential, params, optics, enc, grid.box_length)
        state = circuit.run()
        images["quantum"] = intensity_from_state(state, enc)
        if s["trace"]:
            write_atomic(out / "circuit_trace.txt", circuit.trace())
            write_atomic(out / "state.csv", state.dump_csv())
    for name, image in images.items():
        write_pgm16(out / f"intensity_{name}.pgm", image)
        write_atomic(out / f"intensity_{name}.csv", array_csv(image))

    contrast = {name: analysis.has_contrast(image) for name, image in images.items()}
    summary = {
        "engine": engine,
        "grid": {"n_side": grid.n_side, "box_length": grid.box_length},
        "n_atoms": model.n_atoms,
        "microscope": {k: v for k, v in vars(params).items()},
        "wavelength": optics.wavelength,
        "sigma": optics.sigma,
        "no_contrast": not all(contrast.values()),
    }
    if engine == "both":
        a, b = images["quantum"], images["classical"]
        if all(contrast.values()):
            report = analysis.compare_images(a, b, voltage=params.voltage, defocus=params.defocus, c3=params.c3)
            write_atomic(out / "comparison.json", report.to_json())
        else:
            diff = a - b
            write_json(out / "comparison.json", {
                "pearson_correlation": None, "mse": float(np.mean(diff**2)),
                "max_abs_diff": float(np.max(np.abs(diff))), "grid_n_side": grid.n_side,
                "note": "flat image, correlation undefined",
            })
    if s["shots"] > 0:
        if state is None:
            raise ConfigError("--shots needs the quantum engine (engine = quantum or both)")
        counts = sample_shots(state, enc, s["shots"], seed=s["seed"])
        write_pgm16(out / "sampled.pgm", counts)
        exact = images["quantum"]
        metrics = distribution_metrics(counts / counts.sum(), exact / exact.sum())
        write_json(out / "shot_metrics.json", {
            "shots": s["shots"], "seed": s["seed"], "rng": "numpy PCG64",
            "classical_fidelity": metrics.classical_fidelity,
            "correlation": metrics.correlation, "tvd": metrics.tvd,
        })
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_resources(cfg: RunConfig, out: Path) -> int:
    r = cfg["resources"]
    model = resources.ResourceModel(
        kappa0=r["kappa0"], kappa1=r["kappa1"], precision_bits=r["precision_bits"],
        code_distance=r["code_distance"], gate_time=r["gate_time_s"],
    )
    table = resources.scaling_table(
        r["grids"], n_atoms=r["n_atoms"], n_gaussians=r["n_gaussians"], epsilon=r["epsilon"], model=model,
    )
    write_atomic(out / "resources.csv", resources.estimates_csv(table))
    write_atomic(out / "resources.json", resources.estimates_json(table))
    itemized = [resources.itemized_obj_report(e.grid_n_side, r["n_atoms"], r["n_gaussians"], r["precision_bits"]) for e in table]
    write_json(out / "itemized_obj.json", itemized)
    if r["atom_multiplier"] != 1:
        scaled = [resources.atoms_scaling(e, r["atom_multiplier"]) for e in table]
        write_atomic(out / "atoms_scaling.csv", resources.estimates_csv(scaled))
        write_atomic(out / "atoms_scaling.json", resources.estimates_json(scaled))
    return EXIT_OK


def cmd_phase_disc(cfg: RunConfig, out: Path) -> int:
    pd = cfg["phase_disc"]
    grid = GridSpec(pd["n_side"], pd["box_length"])
    params = microscope_params(cfg, defocus=pd["defocus"], c3=pd["c3"], propagation_z=0.0)
    optics = DerivedOptics.from_voltage(params.voltage)
    enc = Encoding.for_grid(grid, with_ancilla=True)
    seed = pd["seed"]
    grating = gaussian_phase_grating(grid, pd["peak_phase"], optics.sigma, pd["width_px"])
    rand = random_phase_potential(grid, pd["random_phase_std"], optics.sigma, seed)
    rand_b = random_phase_potential(grid, pd["random_phase_std"], optics.sigma, seed + 1)
    # (case, potential for the "+" column, potential for the "-" column)
    cases = [
        ("zero", np.zeros(grid.shape), np.zeros(grid.shape)),
        ("gaussian_pair", grating, -grating),
        ("random_pair", rand, -rand),
        ("independent_random", rand, rand_b),
    ]

    def expect(v, basis):
        return phase_discrimination(v, params, optics, enc, grid.box_length, basis=basis)

    rows = []
    for name, plus, minus in cases:
        i_plus = image_wpoa(plus, params, optics, grid).intensity
        i_minus = image_wpoa(minus, params, optics, grid).intensity
        y_plus, y_minus = expect(plus, "Y"), expect(minus, "Y")
        rows.append({
            "case": name,
            "x_plus": expect(plus, "X"),
            "y_plus": y_plus,
            "x_minus": expect(minus, "X"),
            "y_minus": y_minus,
            "delta_y": y_plus - y_minus,
            "antisymmetry_residual": y_plus + y_minus,
            "intensity_max_diff": float(np.max(np.abs(i_plus - i_minus))),
        })
    cols = list(rows[0])
    text = ",".join(cols) + "\n" + "".join(
        ",".join(row[c] if isinstance(row[c], str) else f"{row[c] + 0.0:.6g}" for c in cols) + "\n" for row in rows
    )
    write_atomic(out / "phase_disc.csv", text)
    write_json(out / "phase_disc.json", {
        "grid": grid.n_side, "voltage": params.voltage, "defocus": params.defocus, "c3": params.c3,
        "peak_phase": pd["peak_phase"], "width_px": pd["width_px"],
        "random_phase_std": pd["random_phase_std"], "seed": seed, "rows": rows,
    })
    return EXIT_OK


def cmd_throughfocus(cfg: RunConfig, out: Path) -> int:
    tf = cfg["throughfocus"]
    model = build_specimen(cfg)
    potential = projected_potential(model)
    defoci = [float(v) for v in np.linspace(tf["start"], tf["stop"], tf["steps"])]
    images = analysis.through_focus_series(
        potential, model.grid, microscope_params(cfg), defoci, engine=tf["engine"], jobs=cfg["run"]["jobs"],
    )
    index = []
    for idx, (df, image) in enumerate(zip(defoci, images)):
        name = f"throughfocus_{idx:03d}.pgm"
        write_pgm16(out / name, image)
        index.append({"file": name, "defocus": df, "std": float(np.std(image)), "no_contrast": not analysis.has_contrast(image)})
    write_json(out / "throughfocus_index.json", {"engine": tf["engine"], "frames": index})
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    rows = analysis.validate_matrix(jobs=cfg["run"]["jobs"])
    ok = all(
        r["max_amplitude_error"] < 1e-9
        and r["mse"] <= 1e-18
        and (np.isnan(r["pearson_correlation"]) or r["pearson_correlation"] >= 1 - 1e-12)
        for r in rows
    )
    write_json(out / "validate.json", {"passed": ok, "cases": rows})
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "ctf": cmd_ctf,
    "simulate": cmd_simulate,
    "resources": cmd_resources,
    "phase-disc": cmd_phase_disc,
    "through-focus": cmd_throughfocus,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qctem", description="Quantum-circuit CTEM image simulation and resource estimates.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./qctem_out)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--shots", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--engine", choices=ENGINE_CHOICES)
    parser.add_argument("--jobs", type=int)
    return parser


def apply_flags(cfg: RunConfig, args: argparse.Namespace) -> None:
    if args.out is not None:
        cfg.set("output", "dir", args.out)
    if args.seed is not None:
        cfg.set("simulate", "seed", args.seed)
        cfg.set("phase_disc", "seed", args.seed)
    if args.shots is not None:
        cfg.set("simulate", "shots", args.shots)
    if args.epsilon is not None:
        cfg.set("resources", "epsilon", args.epsilon)
    if args.engine is not None:
        cfg.set("simulate", "engine", args.engine)
        if args.engine != "both":
            cfg.set("throughfocus", "engine", args.engine)
    if args.jobs is not None:
        cfg.set("run", "jobs", args.jobs)
    cfg.validate()


def _fail(code: int, exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        apply_flags(cfg, args)
        return COMMANDS[args.command](cfg, output_dir(cfg))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except DomainError as exc:
        return _fail(EXIT_DOMAIN, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":
    sys.exit(main())
