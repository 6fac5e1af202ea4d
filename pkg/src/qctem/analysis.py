"""Engine comparison metrics, through-focus series and CTF parameter sweeps."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .classical import image_wpoa
from .errors import DomainError
from .optics import (
    CTFZero,
    DerivedOptics,
    MicroscopeParams,
    ctf_table,
    first_ctf_zero,
    scherzer_defocus,
)
from .quantum import Encoding, intensity_from_state, run_ctem_circuit
from .specimen import mos2_benchmark
from .wavefield import GridSpec

ENGINES = ("classical", "quantum")
DEFAULT_THROUGH_FOCUS = tuple(float(v) for v in np.linspace(-1000.0, 1050.0, 18))


@dataclass(frozen=True)
class ComparisonReport:
    pearson_correlation: float
    mse: float
    max_abs_diff: float
    grid_n_side: int
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pearson_correlation": self.pearson_correlation,
            "mse": self.mse,
            "max_abs_diff": self.max_abs_diff,
            "grid_n_side": self.grid_n_side,
            "parameters": self.parameters,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(np.dot(da, da)))
    sb = math.sqrt(float(np.dot(db, db)))
    if sa == 0 or sb == 0:
        raise DomainError("correlation is undefined for a constant image")
    return float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))


def compare_images(a: np.ndarray, b: np.ndarray, **parameters) -> ComparisonReport:
    """Pearson correlation, mean squared error and max |a - b| of two real images."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    return ComparisonReport(
        pearson_correlation=pearson(a, b),
        mse=float(np.mean(diff**2)),
        max_abs_diff=float(np.max(np.abs(diff))),
        grid_n_side=int(a.shape[0]),
        parameters=dict(parameters),
    )


def simulate_intensity(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    grid: GridSpec,
    engine: str = "classical",
) -> np.ndarray:
    if engine == "classical":
        return image_wpoa(potential, params, optics, grid).intensity
    if engine == "quantum":
        enc = Encoding.for_grid(grid)
        return intensity_from_state(run_ctem_circuit(potential, params, optics, enc, grid.box_length), enc)
    raise DomainError(f"engine must be one of {ENGINES}, got {engine!r}")


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def through_focus_series(
    potential: np.ndarray,
    grid: GridSpec,
    params: MicroscopeParams,
    defoci: Sequence[float] = DEFAULT_THROUGH_FOCUS,
    engine: str = "classical",
    jobs: int = 1,
) -> list[np.ndarray]:
    """One intensity image per defocus value, returned in input order."""
    if len(defoci) == 0:
        raise DomainError("defocus list is empty")
    optics = DerivedOptics.from_voltage(params.voltage)
    return _map(
        lambda df: simulate_intensity(potential, replace(params, defocus=float(df)), optics, grid, engine),
        list(defoci),
        jobs,
    )


def has_contrast(image: np.ndarray, rel_tol: float = 1e-12) -> bool:
    """False for an image that is flat up to round-off."""
    image = np.asarray(image, dtype=float)
    scale = max(float(np.max(np.abs(image))), np.finfo(float).tiny)
    return float(np.ptp(image)) > rel_tol * scale


@dataclass(frozen=True)
class CTFCell:
    voltage: float
    c3: float
    defocus: float | None
    zero: CTFZero | None
    flag: str | None
    table: dict | None

    def summary(self) -> dict:
        return {
            "voltage": self.voltage,
            "c3": self.c3,
            "defocus": self.defocus,
            "k_zero": None if self.zero is None else self.zero.k_zero,
            "d_res": None if self.zero is None else self.zero.d_res,
            "flag": self.flag,
        }


def ctf_grid(
    voltages: Sequence[float],
    defoci: Sequence[float | str],
    c3s: Sequence[float],
    base: MicroscopeParams | None = None,
    k_max: float = 1.0,
    n_points: int = 512,
    samples: int = 10_000,
    strict_printed: bool = False,
) -> list[CTFCell]:
    """CTF curve and first zero for every (voltage, C3, defocus) combination.

    A defocus entry ``"scherzer"`` picks the Scherzer value of that cell.
    Cells where the defocus is undefined or no zero lies below ``k_max`` are
    flagged instead of raising.
    """
    if not voltages or not defoci or not c3s:
        raise DomainError("voltage, defocus and C3 lists must be nonempty")
    base = base or MicroscopeParams(voltage=voltages[0])
    k = np.linspace(0.0, k_max, n_points)
    cells = []
    for v in voltages:
        optics = DerivedOptics.from_voltage(v)
        for c3 in c3s:
            for df in defoci:
                if isinstance(df, str):
                    if df.lower() != "scherzer":
                        raise DomainError(f"unknown defocus keyword {df!r}")
                    if c3 <= 0:
                        cells.append(CTFCell(v, c3, None, None, "scherzer defocus undefined for C3 = 0", None))
                        continue
                    df = scherzer_defocus(c3, optics.wavelength)
                params = replace(base, voltage=v, c3=c3, defocus=float(df))
                table = ctf_table(k, params, optics, strict_printed=strict_printed)
                try:
                    zero, flag = first_ctf_zero(params, optics, k_max, samples=samples), None
                except DomainError as exc:
                    zero, flag = None, str(exc)
                cells.append(CTFCell(v, c3, float(df), zero, flag, table))
    return cells


DEFAULT_VALIDATION = {
    "grids": (8, 16, 32, 64),
    "voltages": (80e3, 200e3, 300e3),
    "defoci": (-800.0, 0.0, 800.0),
    "c3s": (0.0, 1.3e7),
}


def validate_matrix(
    grids: Sequence[int] = DEFAULT_VALIDATION["grids"],
    voltages: Sequence[float] = DEFAULT_VALIDATION["voltages"],
    defoci: Sequence[float] = DEFAULT_VALIDATION["defoci"],
    c3s: Sequence[float] = DEFAULT_VALIDATION["c3s"],
    jobs: int = 1,
) -> list[dict]:
    """Quantum statevector vs classical image wave on the MoS2 benchmark for every combination."""
    cases = [(n, v, df, c3) for n in grids for v in voltages for df in defoci for c3 in c3s]
    benchmarks = {n: mos2_benchmark(n) for n in grids}

    def run(case):
        n, v, df, c3 = case
        model, potential = benchmarks[n]
        grid = model.grid
        params = MicroscopeParams(voltage=v, defocus=df, c3=c3)
        optics = DerivedOptics.from_voltage(v)
        classical = image_wpoa(potential, params, optics, grid).image_wave.values
        enc = Encoding.for_grid(grid)
        state = run_ctem_circuit(potential, params, optics, enc, grid.box_length)
        amps = state.amplitudes.reshape(grid.shape)
        ci, qi = np.abs(classical) ** 2, np.abs(amps) ** 2
        rho = pearson(ci, qi) if has_contrast(ci) and has_contrast(qi) else float("nan")
        return {
            "grid": n,
            "voltage": v,
            "defocus": df,
            "c3": c3,
            "max_amplitude_error": float(np.max(np.abs(amps - classical))),
            "pearson_correlation": rho,
            "mse": float(np.mean((ci - qi) ** 2)),
            "norm_error": abs(state.norm() - 1.0),
        }

    return _map(run, cases, jobs)
