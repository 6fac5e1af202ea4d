"""FFT reference pipeline: phase grating, Fresnel propagation, objective lens.

The incident wave is the unit-norm plane wave (1/N per pixel), matching the
Hadamard-prepared register of the circuit engine. Defocus enters only through
``chi``; ``params.propagation_z`` (default 0) adds an explicit Fresnel step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .optics import DerivedOptics, MicroscopeParams, chi_from_k2
from .wavefield import ComplexField, GridSpec, apply_reciprocal_multiplier


@dataclass(frozen=True)
class ImagingResult:
    exit_wave: ComplexField
    image_wave: ComplexField

    @property
    def intensity(self) -> np.ndarray:
        return self.image_wave.intensity()


def _check_shape(potential: np.ndarray, grid: GridSpec) -> np.ndarray:
    potential = np.asarray(potential, dtype=float)
    if potential.shape != grid.shape:
        raise DomainError(f"potential shape {potential.shape} does not match grid {grid.shape}")
    return potential


def transmit(incident: ComplexField, potential: np.ndarray, sigma: float) -> ComplexField:
    """Multiply by the phase grating exp(i sigma V)."""
    potential = _check_shape(potential, incident.grid)
    return incident.with_values(incident.values * np.exp(1j * sigma * potential))


def fresnel_phase(grid: GridSpec, z: float, wavelength: float) -> np.ndarray:
    """-pi lambda z k^2 on the reciprocal grid."""
    return -math.pi * wavelength * z * grid.k_squared()


def propagate(field: ComplexField, z: float, wavelength: float) -> ComplexField:
    return apply_reciprocal_multiplier(field, np.exp(1j * fresnel_phase(field.grid, z, wavelength)))


def lens_phase(grid: GridSpec, params: MicroscopeParams, optics: DerivedOptics) -> np.ndarray:
    """-chi(k) on the reciprocal grid."""
    return -chi_from_k2(grid.k_squared(), params, optics)


def apply_lens(field: ComplexField, params: MicroscopeParams, optics: DerivedOptics) -> ComplexField:
    return apply_reciprocal_multiplier(field, np.exp(1j * lens_phase(field.grid, params, optics)))


def imaging_phase(grid: GridSpec, params: MicroscopeParams, optics: DerivedOptics) -> np.ndarray:
    """Combined reciprocal phase of the Fresnel step and the lens."""
    return fresnel_phase(grid, params.propagation_z, optics.wavelength) + lens_phase(grid, params, optics)


def _image_round_trip(exit_wave: ComplexField, params, optics) -> ComplexField:
    multiplier = np.exp(1j * imaging_phase(exit_wave.grid, params, optics))
    return apply_reciprocal_multiplier(exit_wave, multiplier)


def image_wpoa(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    grid: GridSpec,
) -> ImagingResult:
    """Plane wave -> phase grating -> one Fourier round trip (Fresnel * lens)."""
    exit_wave = transmit(ComplexField.plane_wave(grid), potential, optics.sigma)
    return ImagingResult(exit_wave, _image_round_trip(exit_wave, params, optics))


def image_multislice(
    slices: Sequence[np.ndarray],
    slice_thickness: float,
    params: MicroscopeParams,
    optics: DerivedOptics,
    grid: GridSpec,
) -> ImagingResult:
    """Alternate transmit/propagate over ``slices``, then apply the imaging round trip.

    With one slice and ``slice_thickness == 0`` this reduces to :func:`image_wpoa`.
    """
    if len(slices) == 0:
        raise DomainError("multislice needs at least one slice")
    wave = ComplexField.plane_wave(grid)
    for v in slices:
        wave = propagate(transmit(wave, v, optics.sigma), slice_thickness, optics.wavelength)
    return ImagingResult(wave, _image_round_trip(wave, params, optics))


def image_defocus_average(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    grid: GridSpec,
    defoci: Sequence[float],
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Incoherent weighted sum of intensities over a list of defocus values."""
    if len(defoci) == 0:
        raise DomainError("defocus list is empty")
    w = np.ones(len(defoci)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (len(defoci),) or np.any(w < 0) or w.sum() <= 0:
        raise DomainError("weights must be non-negative, one per defocus, with positive sum")
    w = w / w.sum()
    total = np.zeros(grid.shape)
    for df, wi in zip(defoci, w):
        total += wi * image_wpoa(potential, replace(params, defocus=float(df)), optics, grid).intensity
    return total


def detector_filter(intensity: np.ndarray, grid: GridSpec, mtf: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Optional detector response: multiply the intensity spectrum by ``mtf(|k|)``.

    ``mtf=None`` returns the input unchanged.
    """
    if mtf is None:
        return np.asarray(intensity, dtype=float)
    spectrum = np.fft.fft2(intensity)
    return np.real(np.fft.ifft2(spectrum * mtf(grid.k_magnitude())))
