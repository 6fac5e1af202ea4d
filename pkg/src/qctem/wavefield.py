"""Square sampling grids, complex fields and unitary 2D Fourier transforms.

Index conventions used everywhere in the package:

* arrays are indexed ``[i, j]`` with ``i`` the x-index (row, major) and
  ``j`` the y-index, pixel ``(i, j)`` sits at ``(i*dx, j*dx)``;
* reciprocal index ``u`` maps to frequency ``u/L`` for ``u < N/2`` and
  ``(u - N)/L`` otherwise (two's-complement fold, same as ``numpy.fft.fftfreq``);
* both transforms carry ``1/N`` so they are unitary and directly comparable
  with a norm-1 statevector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """N x N periodic grid of physical side ``box_length`` (Angstrom)."""

    n_side: int
    box_length: float

    def __post_init__(self):
        if not isinstance(self.n_side, (int, np.integer)) or self.n_side < 2 or not is_power_of_two(int(self.n_side)):
            raise DomainError(f"n_side must be a power of two >= 2, got {self.n_side!r}")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise DomainError(f"box_length must be positive, got {self.box_length!r}")

    @property
    def pixel_size(self) -> float:
        return self.box_length / self.n_side

    @property
    def k_step(self) -> float:
        return 1.0 / self.box_length

    @property
    def n_bits(self) -> int:
        """Qubits needed per axis (log2 N)."""
        return int(self.n_side).bit_length() - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_side, self.n_side)

    def positions(self) -> np.ndarray:
        """Pixel coordinates along one axis (Angstrom)."""
        return np.arange(self.n_side) * self.pixel_size

    def frequencies(self) -> np.ndarray:
        """Spatial frequency of every reciprocal index along one axis (1/Angstrom)."""
        return np.fft.fftfreq(self.n_side, d=self.pixel_size)

    def k_squared(self) -> np.ndarray:
        """kx^2 + ky^2 on the reciprocal grid, laid out like ``fft2`` output."""
        k = self.frequencies()
        return k[:, None] ** 2 + k[None, :] ** 2

    def k_magnitude(self) -> np.ndarray:
        return np.sqrt(self.k_squared())


def frequency_of(index: int, grid: GridSpec) -> float:
    """Spatial frequency (1/Angstrom) of reciprocal index ``index``."""
    n = grid.n_side
    if not 0 <= index < n:
        raise DomainError(f"index {index} out of range [0, {n})")
    if index < n // 2:
        return index * grid.k_step
    return (index - n) * grid.k_step


@dataclass(frozen=True)
class ComplexField:
    """Complex amplitudes on a grid, ``values[i, j]`` at ``(x_i, y_j)``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise DomainError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: GridSpec, value: complex) -> ComplexField:
        return cls(grid, np.full(grid.shape, value, dtype=complex))

    @classmethod
    def plane_wave(cls, grid: GridSpec) -> ComplexField:
        """Unit-norm uniform field, amplitude 1/N per pixel."""
        return cls.constant(grid, 1.0 / grid.n_side)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def normalize(self) -> ComplexField:
        norm = self.l2_norm()
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("cannot normalize a field with zero or non-finite norm")
        return ComplexField(self.grid, self.values / norm)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def with_values(self, values: np.ndarray) -> ComplexField:
        return ComplexField(self.grid, values)


def fft2(field: ComplexField) -> ComplexField:
    """Unitary forward 2D DFT with the exp(-2 pi i (iu + jv)/N) kernel."""
    return field.with_values(np.fft.fft2(field.values, norm="ortho"))


def ifft2(field: ComplexField) -> ComplexField:
    """Adjoint (and inverse) of :func:`fft2`."""
    return field.with_values(np.fft.ifft2(field.values, norm="ortho"))


def apply_reciprocal_multiplier(field: ComplexField, multiplier: np.ndarray) -> ComplexField:
    """One Fourier round trip: ``ifft2(multiplier * fft2(field))``."""
    spectrum = np.fft.fft2(field.values, norm="ortho")
    return field.with_values(np.fft.ifft2(spectrum * multiplier, norm="ortho"))
