import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qctem.errors import ConfigError, DomainError
from qctem.specimen import (
    DEFAULT_TABLES,
    AtomSite,
    GaussianTable,
    SpecimenModel,
    atom_potential,
    build_mos2_supercell,
    gaussian_phase_grating,
    mos2_benchmark,
    projected_potential,
    random_phase_potential,
    read_gaussian_tables,
    read_structure,
    write_structure,
)
from qctem.wavefield import GridSpec


def brute_potential(sites, tables, n, box, cutoff):
    """Loop over every pixel, atom, Gaussian term and periodic image in a 5 x 5 block."""
    out = np.zeros((n, n))
    dx = box / n
    for i in range(n):
        for j in range(n):
            for s in sites:
                t = tables[s.element]
                for ix in range(-2, 3):
                    for iy in range(-2, 3):
                        r2 = (i * dx - s.x - ix * box) ** 2 + (j * dx - s.y - iy * box) ** 2
                        if cutoff is not None and r2 > cutoff**2:
                            continue
                        out[i, j] += t.alpha_z * sum(a * math.exp(-math.pi * r2 / b) for a, b in zip(t.a, t.b))
    return out


def test_atom_potential_examples():
    t = GaussianTable(1, [1.0], [math.pi])
    assert atom_potential(1.0, t) == pytest.approx(math.exp(-1))
    mo = DEFAULT_TABLES[42]
    assert atom_potential(0.0, mo.scaled(1.7)) == pytest.approx(1.7 * sum(mo.a))
    r_far = math.sqrt(10 * max(mo.b) / math.pi)
    assert atom_potential(r_far, mo) < 1e-4 * atom_potential(0.0, mo)


def test_table_validation():
    with pytest.raises(DomainError):
        GaussianTable(1, [], [])
    with pytest.raises(DomainError):
        GaussianTable(1, [1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        GaussianTable(1, [1.0], [0.0])
    assert all(t.n_terms == 5 for t in DEFAULT_TABLES.values())


def test_brute_force_oracle_with_cutoff():
    grid = GridSpec(8, 12.0)
    sites = [AtomSite(42, 3.1, 4.7), AtomSite(16, 10.9, 0.4)]
    model = SpecimenModel(sites, grid)
    cutoff = model.max_cutoff()
    assert cutoff < grid.box_length / 2
    oracle = brute_potential(model.sites, model.tables, 8, 12.0, cutoff)
    assert np.max(np.abs(projected_potential(model) - oracle)) < 1e-10


def test_brute_force_oracle_without_cutoff():
    grid = GridSpec(8, 40.0)
    sites = [AtomSite(42, 13.0, 27.5), AtomSite(16, 38.0, 2.0)]
    model = SpecimenModel(sites, grid)
    oracle = brute_potential(model.sites, model.tables, 8, 40.0, None)
    assert np.max(np.abs(projected_potential(model, cutoff=None) - oracle)) < 1e-10


def test_empty_and_missing_table():
    grid = GridSpec(8, 10.0)
    assert np.all(projected_potential(SpecimenModel([], grid)) == 0)
    with pytest.raises(DomainError):
        SpecimenModel([AtomSite(74, 1.0, 1.0)], grid)


def test_single_atom_peak_and_radial_decrease():
    grid = GridSpec(32, 16.0)
    v = projected_potential(SpecimenModel([AtomSite(42, 8.0, 8.0)], grid))
    assert np.unravel_index(np.argmax(v), v.shape) == (16, 16)
    row = v[16, 16:]
    assert np.all(np.diff(row[:10]) < 0)
    assert np.all(v >= 0)


site_xy = st.floats(0, 20, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([42, 16]), site_xy, site_xy), min_size=2, max_size=6), st.integers(1, 5))
def test_additivity(raw, split):
    grid = GridSpec(16, 20.0)
    sites = [AtomSite(z, x, y) for z, x, y in raw]
    split = min(split, len(sites) - 1)
    whole = projected_potential(SpecimenModel(sites, grid))
    parts = projected_potential(SpecimenModel(sites[:split], grid)) + projected_potential(SpecimenModel(sites[split:], grid))
    assert np.max(np.abs(whole - parts)) < 1e-12 * max(1.0, np.max(whole))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([42, 16]), site_xy, site_xy), min_size=1, max_size=4),
       st.integers(-16, 16), st.integers(-16, 16))
def test_translation_by_whole_pixels_is_cyclic_shift(raw, si, sj):
    grid = GridSpec(16, 20.0)
    dx = grid.pixel_size
    sites = [AtomSite(z, x, y) for z, x, y in raw]
    moved = [AtomSite(s.element, s.x + si * dx, s.y + sj * dx) for s in sites]
    v0 = projected_potential(SpecimenModel(sites, grid))
    v1 = projected_potential(SpecimenModel(moved, grid))
    assert np.max(np.abs(np.roll(v0, (si, sj), axis=(0, 1)) - v1)) < 1e-9 * max(1.0, np.max(v0))


def test_alpha_scaling_is_linear():
    grid = GridSpec(32, 12.8)
    model = build_mos2_supercell(3, 2, grid)
    mo_only = SpecimenModel([s for s in model.sites if s.element == 42], grid)
    base = projected_potential(model)
    doubled = projected_potential(model.with_alpha(42, 2.0))
    assert np.max(np.abs(doubled - base - projected_potential(mo_only))) < 1e-10


def test_mos2_site_counts_and_wrapping():
    grid = GridSpec(64, 12.8)
    model = build_mos2_supercell(3, 2, grid)
    assert model.n_atoms == 18
    assert sum(s.element == 42 for s in model.sites) == 6
    assert model.gaussians_per_atom() == 5
    assert build_mos2_supercell(1, 1, grid).n_atoms == 3
    small = build_mos2_supercell(4, 4, GridSpec(16, 5.0))
    assert all(0 <= s.x < 5.0 and 0 <= s.y < 5.0 for s in small.sites)
    with pytest.raises(DomainError):
        build_mos2_supercell(0, 2, grid)


def test_mos2_geometry():
    grid = GridSpec(64, 30.0)
    model = build_mos2_supercell(1, 1, grid)
    mo, s1, s2 = model.sites
    assert (s1.x, s1.y) == (s2.x, s2.y)
    a = 3.16
    # S column at 2/3 a1 + 1/3 a2 from Mo: |d| = a / sqrt(3)
    assert math.hypot(s1.x - mo.x, s1.y - mo.y) == pytest.approx(a / math.sqrt(3), rel=1e-12)


@pytest.mark.parametrize("n", [64, 128])
def test_mo_columns_brighter_than_s(n):
    model, v = mos2_benchmark(n)
    dx = model.grid.pixel_size

    def peak(element):
        return max(v[int(round(s.x / dx)) % n, int(round(s.y / dx)) % n] for s in model.sites if s.element == element)

    assert peak(42) > peak(16)


def test_structure_round_trip(tmp_path):
    sites = [AtomSite(42, 1.0, 2.0), AtomSite(16, 3.5, 0.25)]
    path = tmp_path / "s.xyz"
    write_structure(path, sites, 12.8)
    read, box = read_structure(path)
    assert box == 12.8 and read == sites


@pytest.mark.parametrize("text", ["", "2\nno box\nMo 0 0\nS 1 1\n", "3\nbox_length=5\nMo 0 0\n", "1\nbox_length=5\nXx 0 0\n"])
def test_structure_errors(tmp_path, text):
    path = tmp_path / "bad.xyz"
    path.write_text(text)
    with pytest.raises(ConfigError):
        read_structure(path)


def test_gaussian_table_csv(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("Z,a1,a2,b1,b2\nMo,10,5,0.5,2\n16,4,2,0.5,2\n")
    tables = read_gaussian_tables(path)
    assert tables[42].a == (10.0, 5.0) and tables[16].b == (0.5, 2.0)
    path.write_text("Z,a1,b1,b2\n42,1,1,1\n")
    with pytest.raises(ConfigError):
        read_gaussian_tables(path)


def test_phase_grating_and_random_potential():
    grid = GridSpec(16, 12.8)
    v = gaussian_phase_grating(grid, 0.5, 1e-3)
    assert np.max(1e-3 * v) == pytest.approx(0.5)
    r1 = random_phase_potential(grid, 0.3, 1e-3, seed=4)
    r2 = random_phase_potential(grid, 0.3, 1e-3, seed=4)
    assert np.array_equal(r1, r2)
    assert not np.array_equal(r1, random_phase_potential(grid, 0.3, 1e-3, seed=5))
