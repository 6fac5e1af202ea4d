"""Atomic structures and Gaussian-parameterized projected potentials.

An isolated atom contributes ``alpha_Z * sum_m a_m exp(-pi r^2 / b_m)`` (V*A)
to the projected potential. Distances use the minimum-image convention on
the periodic box and contributions beyond ``cutoff`` are dropped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .wavefield import GridSpec

MOS2_LATTICE_CONSTANT = 3.16

_SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn"
).split()
SYMBOL_TO_Z = {s: z for z, s in enumerate(_SYMBOLS, start=1)}
Z_TO_SYMBOL = {z: s for s, z in SYMBOL_TO_Z.items()}


@dataclass(frozen=True)
class GaussianTable:
    element: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    alpha_z: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if len(self.a) == 0 or len(self.a) != len(self.b):
            raise DomainError("a Gaussian table needs M >= 1 matching (a, b) pairs")
        if any(not bv > 0 for bv in self.b):
            raise DomainError(f"all widths b_m must be positive (element {self.element})")

    @property
    def n_terms(self) -> int:
        return len(self.a)

    def scaled(self, alpha_z: float) -> GaussianTable:
        return GaussianTable(self.element, self.a, self.b, alpha_z)

    def default_cutoff(self) -> float:
        return 3.0 * math.sqrt(max(self.b) / math.pi)


# Placeholder 5-term tables. The amplitudes are not fitted to scattering
# factors; they are scaled so that sum(a_m * b_m) is roughly 48 V*A^3 times a
# plausible f_e(0) and so a Mo column out-peaks a two-atom S column.
DEFAULT_TABLES: dict[int, GaussianTable] = {
    42: GaussianTable(42, (300.0, 150.0, 60.0, 25.0, 8.0), (0.1, 0.3, 1.0, 3.0, 10.0)),
    16: GaussianTable(16, (120.0, 60.0, 25.0, 10.0, 3.0), (0.1, 0.3, 1.0, 3.0, 10.0)),
}


@dataclass(frozen=True)
class AtomSite:
    element: int
    x: float
    y: float


@dataclass
class SpecimenModel:
    sites: list[AtomSite]
    grid: GridSpec
    tables: dict[int, GaussianTable] = field(default_factory=lambda: dict(DEFAULT_TABLES))

    def __post_init__(self):
        missing = sorted({s.element for s in self.sites} - set(self.tables))
        if missing:
            raise DomainError(f"no Gaussian table for element(s) {missing}")
        L = self.grid.box_length
        self.sites = [AtomSite(s.element, s.x % L, s.y % L) for s in self.sites]

    def with_alpha(self, element: int, alpha_z: float) -> SpecimenModel:
        tables = dict(self.tables)
        tables[element] = tables[element].scaled(alpha_z)
        return SpecimenModel(list(self.sites), self.grid, tables)

    def max_cutoff(self) -> float:
        return max(t.default_cutoff() for t in self.tables.values())

    @property
    def n_atoms(self) -> int:
        return len(self.sites)

    def gaussians_per_atom(self) -> int:
        return max(self.tables[s.element].n_terms for s in self.sites) if self.sites else 0


def atom_potential(r, table: GaussianTable):
    """Projected potential (V*A) of one atom at radial distance ``r`` (A)."""
    r2 = np.square(np.asarray(r, dtype=float))
    total = np.zeros_like(r2)
    for a, b in zip(table.a, table.b):
        total = total + a * np.exp(-math.pi * r2 / b)
    return table.alpha_z * total


def _minimum_image(d: np.ndarray, length: float) -> np.ndarray:
    return d - length * np.round(d / length)


def projected_potential(model: SpecimenModel, cutoff: float | str | None = "auto") -> np.ndarray:
    """Projected potential on the model grid, shape (N, N), units V*A.

    ``cutoff="auto"`` uses ``3*sqrt(max b_m / pi)`` over the model's tables;
    pass ``None`` to keep every minimum-image contribution. Atoms are
    accumulated sequentially in site order, so the result is deterministic.
    """
    grid = model.grid
    L = grid.box_length
    if cutoff == "auto":
        cutoff = model.max_cutoff() if model.tables else None
    coords = grid.positions()
    out = np.zeros(grid.shape)
    for site in model.sites:
        table = model.tables[site.element]
        dx = _minimum_image(coords - site.x, L)
        dy = _minimum_image(coords - site.y, L)
        r2 = dx[:, None] ** 2 + dy[None, :] ** 2
        contrib = np.zeros(grid.shape)
        for a, b in zip(table.a, table.b):
            contrib += a * np.exp(-math.pi * r2 / b)
        contrib *= table.alpha_z
        if cutoff is not None:
            contrib[r2 > cutoff * cutoff] = 0.0
        out += contrib
    return out


def build_mos2_supercell(
    nx: int,
    ny: int,
    grid: GridSpec,
    lattice_constant: float = MOS2_LATTICE_CONSTANT,
    tables: dict[int, GaussianTable] | None = None,
) -> SpecimenModel:
    """Projected 2H-MoS2 monolayer tiled ``nx`` x ``ny`` hexagonal cells.

    Each cell holds Mo at fractional (0, 0) and an S column (two S sites at
    the same projected position) at (2/3, 1/3), with a1 = (a, 0) and
    a2 = (-a/2, a*sqrt(3)/2). The tiled block is centred in the box.
    """
    if nx < 1 or ny < 1:
        raise DomainError("supercell repeats must be >= 1")
    a = lattice_constant
    a1 = np.array([a, 0.0])
    a2 = np.array([-a / 2, a * math.sqrt(3) / 2])
    basis = [(42, (0.0, 0.0)), (16, (2 / 3, 1 / 3)), (16, (2 / 3, 1 / 3))]
    raw = []
    for i in range(nx):
        for j in range(ny):
            for z, (f1, f2) in basis:
                raw.append((z, (i + f1) * a1 + (j + f2) * a2))
    pts = np.array([p for _, p in raw])
    shift = np.full(2, grid.box_length / 2) - (pts.min(axis=0) + pts.max(axis=0)) / 2
    sites = [AtomSite(z, float(p[0] + shift[0]), float(p[1] + shift[1])) for z, p in raw]
    return SpecimenModel(sites, grid, dict(tables) if tables is not None else dict(DEFAULT_TABLES))


def element_number(token: str) -> int:
    token = token.strip()
    if token.isdigit():
        return int(token)
    try:
        return SYMBOL_TO_Z[token.capitalize()]
    except KeyError:
        raise ConfigError(f"unknown element {token!r}") from None


def read_structure(path: str | Path) -> tuple[list[AtomSite], float]:
    """Read an XYZ-like projected structure.

    Line 1 is the atom count, line 2 a comment that must contain
    ``box_length=<A>``, then one ``symbol x y`` line per atom (A).
    """
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ConfigError(f"{path}: structure file needs a count line and a header line")
    try:
        count = int(lines[0].split()[0])
    except ValueError:
        raise ConfigError(f"{path}: first line must be the atom count") from None
    box = None
    for token in lines[1].replace(",", " ").split():
        if token.startswith("box_length="):
            box = float(token.split("=", 1)[1])
    if box is None:
        raise ConfigError(f"{path}: header line must contain box_length=<Angstrom>")
    body = lines[2:]
    if len(body) != count:
        raise ConfigError(f"{path}: expected {count} atom lines, found {len(body)}")
    sites = []
    for ln in body:
        parts = ln.split()
        if len(parts) < 3:
            raise ConfigError(f"{path}: bad atom line {ln!r}")
        sites.append(AtomSite(element_number(parts[0]), float(parts[1]), float(parts[2])))
    return sites, box


def write_structure(path: str | Path, sites: list[AtomSite], box_length: float) -> None:
    lines = [str(len(sites)), f"box_length={box_length!r}"]
    lines += [f"{Z_TO_SYMBOL.get(s.element, s.element)} {s.x!r} {s.y!r}" for s in sites]
    Path(path).write_text("\n".join(lines) + "\n")


def read_gaussian_tables(path: str | Path) -> dict[int, GaussianTable]:
    """Read a CSV with header ``Z,a1..aM,b1..bM`` (Z may be a symbol)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "Z" not in reader.fieldnames:
            raise ConfigError(f"{path}: Gaussian table CSV needs a 'Z' column")
        a_cols = sorted((c for c in reader.fieldnames if c[:1] == "a" and c[1:].isdigit()), key=lambda c: int(c[1:]))
        b_cols = sorted((c for c in reader.fieldnames if c[:1] == "b" and c[1:].isdigit()), key=lambda c: int(c[1:]))
        if not a_cols or len(a_cols) != len(b_cols):
            raise ConfigError(f"{path}: need matching a1..aM and b1..bM columns")
        tables = {}
        for row in reader:
            z = element_number(row["Z"])
            try:
                tables[z] = GaussianTable(z, [float(row[c]) for c in a_cols], [float(row[c]) for c in b_cols])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad row for Z={z}: {exc}") from None
    return tables


# default field of view for the 3 x 2 MoS2 benchmark
BENCHMARK_BOX_LENGTH = 12.8


def mos2_benchmark(n_side: int, box_length: float = BENCHMARK_BOX_LENGTH) -> tuple[SpecimenModel, np.ndarray]:
    """3 x 2 MoS2 supercell (18 sites) and its projected potential on an N x N grid."""
    model = build_mos2_supercell(3, 2, GridSpec(n_side, box_length))
    return model, projected_potential(model)


def gaussian_phase_grating(
    grid: GridSpec,
    peak_phase: float,
    sigma: float,
    width_px: float = 3.0,
    centre: tuple[float, float] | None = None,
) -> np.ndarray:
    """Periodic Gaussian bump scaled so that max(sigma * V) equals ``peak_phase``.

    ``centre`` is in Angstrom (default: box centre); ``width_px`` is the
    standard deviation in pixels.
    """
    if sigma <= 0 or width_px <= 0:
        raise DomainError("sigma and width_px must be positive")
    L = grid.box_length
    cx, cy = centre if centre is not None else (L / 2, L / 2)
    coords = grid.positions()
    dx = _minimum_image(coords - cx, L)
    dy = _minimum_image(coords - cy, L)
    w = width_px * grid.pixel_size
    bump = np.exp(-(dx[:, None] ** 2 + dy[None, :] ** 2) / (2 * w * w))
    return peak_phase / sigma * bump / bump.max()


def random_phase_potential(grid: GridSpec, phase_std: float, sigma: float, seed: int | None = None) -> np.ndarray:
    """Potential whose phase sigma*V is i.i.d. normal with zero mean (PCG64 stream)."""
    if sigma <= 0 or phase_std < 0:
        raise DomainError("sigma must be positive and phase_std non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.normal(0.0, phase_std, grid.shape) / sigma
