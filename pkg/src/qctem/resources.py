"""Fault-tolerant resource model: logical qubits, T-gate counts and shot budgets.

Nothing here executes arithmetic circuits. With ``n = 2 log2 N`` data qubits:

* ancilla = max(30, 2n + 10)
* shots = ceil(N^2 / eps^2)
* T_qft = 2 * 50 n (n - 1)          (forward and inverse 2D QFT)
* T_lens_prop = 2 * 16 n^2          (propagation and lens diagonals)
* T_obj = n_atoms * M * (kappa0 + kappa1 n)

kappa0 and kappa1 are calibrated by least squares against the reference
MoS2 resource table (18 atoms, 5 Gaussians each); see :func:`fit_kappa`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError
from .wavefield import is_power_of_two

# reference MoS2 table: grid side -> T-gate total (18 atoms, M = 5, eps = 0.01)
REFERENCE_T_TOTALS = {4: 4.9e5, 16: 5.3e5, 64: 5.7e5, 256: 6.1e5, 1024: 6.6e5}
DEFAULT_GRIDS = (4, 16, 64, 256, 1024)


@dataclass(frozen=True)
class ResourceModel:
    """Constants of the cost model; every field can be overridden from config."""

    kappa0: float = 5120.0
    kappa1: float = 82.6
    qft_coeff: float = 50.0
    diag_coeff: float = 16.0
    ancilla_floor: int = 30
    ancilla_slope: int = 2
    ancilla_offset: int = 10
    precision_bits: int = 24
    code_distance: int = 17
    gate_time: float = 1e-6

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "qft_coeff", "diag_coeff", "gate_time"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative")
        if self.code_distance < 1 or self.precision_bits < 1:
            raise DomainError("code_distance and precision_bits must be >= 1")


@dataclass(frozen=True)
class ResourceEstimate:
    grid_n_side: int
    data_qubits: int
    ancilla_qubits: int
    total_logical: int
    t_gates_obj: float
    t_gates_qft: float
    t_gates_lens_prop: float
    t_gates_total: float
    shots_full_image: int
    epsilon: float
    n_atoms: int
    n_gaussians_per_atom: int
    precision_bits: int
    model: ResourceModel

    @property
    def physical_qubits(self) -> int:
        """Surface-code overhead at 2 d^2 physical qubits per logical qubit."""
        return 2 * self.model.code_distance**2 * self.total_logical

    @property
    def runtime_seconds(self) -> float:
        """shots x T-count x gate time; a crude serial upper bound."""
        return self.shots_full_image * self.t_gates_total * self.model.gate_time

    def to_dict(self) -> dict:
        return {
            "grid": self.grid_n_side,
            "data_qubits": self.data_qubits,
            "ancilla": self.ancilla_qubits,
            "total": self.total_logical,
            "t_obj": self.t_gates_obj,
            "t_qft": self.t_gates_qft,
            "t_lens_prop": self.t_gates_lens_prop,
            "t_total": self.t_gates_total,
            "shots": self.shots_full_image,
            "epsilon": self.epsilon,
            "n_atoms": self.n_atoms,
            "n_gaussians_per_atom": self.n_gaussians_per_atom,
            "physical_qubits": self.physical_qubits,
            "runtime_seconds": self.runtime_seconds,
            "model_constants": asdict(self.model),
        }


def shots_for(n_side: int, epsilon: float) -> int:
    """ceil(N^2 / eps^2), computed in exact rational arithmetic on the decimal eps."""
    eps = Fraction(repr(float(epsilon)))
    return math.ceil(Fraction(n_side * n_side) / (eps * eps))


def estimate(
    n_side: int,
    n_atoms: int = 18,
    n_gaussians: int = 5,
    epsilon: float = 0.01,
    model: ResourceModel | None = None,
) -> ResourceEstimate:
    model = model or ResourceModel()
    if n_side < 2 or not is_power_of_two(n_side):
        raise DomainError(f"grid side must be a power of two >= 2, got {n_side}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if n_atoms < 1 or n_gaussians < 1:
        raise DomainError("n_atoms and n_gaussians must be >= 1")
    n = 2 * (n_side.bit_length() - 1)
    ancilla = max(model.ancilla_floor, model.ancilla_slope * n + model.ancilla_offset)
    t_qft = 2 * model.qft_coeff * n * (n - 1)
    t_lens = 2 * model.diag_coeff * n * n
    t_obj = n_atoms * n_gaussians * (model.kappa0 + model.kappa1 * n)
    return ResourceEstimate(
        grid_n_side=n_side,
        data_qubits=n,
        ancilla_qubits=ancilla,
        total_logical=n + ancilla,
        t_gates_obj=t_obj,
        t_gates_qft=t_qft,
        t_gates_lens_prop=t_lens,
        t_gates_total=t_obj + t_qft + t_lens,
        shots_full_image=shots_for(n_side, epsilon),
        epsilon=epsilon,
        n_atoms=n_atoms,
        n_gaussians_per_atom=n_gaussians,
        precision_bits=model.precision_bits,
        model=model,
    )


def scaling_table(grids: Sequence[int] = DEFAULT_GRIDS, **kwargs) -> list[ResourceEstimate]:
    if len(grids) == 0:
        raise DomainError("grid list is empty")
    return [estimate(int(n), **kwargs) for n in grids]


def atoms_scaling(base: ResourceEstimate, multiplier: float) -> ResourceEstimate:
    """Same grid and model with ``multiplier`` times as many atoms."""
    if multiplier < 1:
        raise DomainError("atom multiplier must be >= 1")
    atoms = base.n_atoms * multiplier
    if abs(atoms - round(atoms)) > 1e-9:
        raise DomainError(f"{base.n_atoms} atoms x {multiplier} is not a whole number of atoms")
    t_obj = base.t_gates_obj * multiplier
    return replace(
        base,
        n_atoms=int(round(atoms)),
        t_gates_obj=t_obj,
        t_gates_total=t_obj + base.t_gates_qft + base.t_gates_lens_prop,
    )


def fit_kappa(
    totals: dict[int, float] = REFERENCE_T_TOTALS,
    n_atoms: int = 18,
    n_gaussians: int = 5,
    qft_coeff: float = 50.0,
    diag_coeff: float = 16.0,
) -> tuple[float, float]:
    """Least-squares (kappa0, kappa1) from a {grid side: T total} table."""
    ns, ys = [], []
    for side, total in sorted(totals.items()):
        n = 2 * (side.bit_length() - 1)
        rest = total - 2 * qft_coeff * n * (n - 1) - 2 * diag_coeff * n * n
        ns.append(n)
        ys.append(rest / (n_atoms * n_gaussians))
    design = np.column_stack([np.ones(len(ns)), np.array(ns, dtype=float)])
    (k0, k1), *_ = np.linalg.lstsq(design, np.array(ys), rcond=None)
    return float(k0), float(k1)


def itemized_obj_report(n_side: int, n_atoms: int = 18, n_gaussians: int = 5, precision_bits: int = 24) -> dict:
    """Step-by-step order-of-magnitude gate estimates for the specimen operator.

    Per-step rules: distance n^2 per atom; 1e4 gates per Gaussian term; one
    p-bit addition per term; 50 p T-gates for the kickback; uncomputation
    doubles the forward cost. These are rough, independent of the fitted
    T-gate model, and not expected to agree with it.
    """
    if n_side < 2 or not is_power_of_two(n_side):
        raise DomainError(f"grid side must be a power of two >= 2, got {n_side}")
    n = 2 * (n_side.bit_length() - 1)
    p = precision_bits
    terms = n_atoms * n_gaussians
    steps = {
        "distance_gates": n * n * n_atoms,
        "gaussian_gates": 10_000 * terms,
        "accumulation_gates": terms * p,
        "kickback_t_gates": 50 * p,
    }
    forward = sum(steps.values())
    return {
        "grid": n_side,
        "n": n,
        "precision_bits": p,
        "gaussian_terms": terms,
        **steps,
        "uncompute_factor": 2,
        "total_gates": 2 * forward,
        "ancilla_breakdown": {"position": 2 * n, "gaussian_io": 2 * p, "accumulator": p},
        "order_of_magnitude_only": True,
    }


def estimates_json(estimates: Sequence[ResourceEstimate]) -> str:
    return json.dumps([e.to_dict() for e in estimates], indent=2, sort_keys=True) + "\n"


CSV_COLUMNS = ("grid", "data_qubits", "ancilla", "total", "t_obj", "t_qft", "t_lens_prop", "t_total", "shots", "epsilon")


def estimates_csv(estimates: Sequence[ResourceEstimate]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in estimates:
        d = e.to_dict()
        writer.writerow([d[c] if isinstance(d[c], int) else f"{d[c]:.6g}" for c in CSV_COLUMNS])
    return buf.getvalue()
