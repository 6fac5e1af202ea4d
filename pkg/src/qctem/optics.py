"""Electron-optical constants, the aberration phase and transfer functions.

All lengths are Angstrom and all spatial frequencies 1/Angstrom. Voltages
are volts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as const
from scipy.optimize import bisect

from .errors import DomainError

_M_PER_ANGSTROM = 1e-10

# Scherzer defocus prefactor: -sqrt(3/2 * C3 * lambda)
SCHERZER_COEFF = math.sqrt(1.5)


@dataclass(frozen=True)
class MicroscopeParams:
    """Objective-lens and illumination settings.

    ``defocus`` is negative for underfocus. ``energy_spread_rel`` and
    ``source_size`` are FWHM values.
    """

    voltage: float
    defocus: float = 0.0
    c3: float = 0.0
    c5: float = 0.0
    cc: float = 0.0
    energy_spread_rel: float = 0.0
    source_size: float = 0.0
    propagation_z: float = 0.0

    def __post_init__(self):
        if not self.voltage > 0:
            raise DomainError(f"voltage must be positive, got {self.voltage}")
        for name in ("c3", "cc", "energy_spread_rel", "source_size"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")


@dataclass(frozen=True)
class DerivedOptics:
    wavelength: float
    sigma: float

    @classmethod
    def from_voltage(cls, voltage: float) -> DerivedOptics:
        return cls(electron_wavelength(voltage), interaction_constant(voltage))

    @property
    def k0(self) -> float:
        return 2 * math.pi / self.wavelength


def _check_voltage(voltage: float) -> None:
    if not voltage > 0:
        raise DomainError(f"voltage must be positive, got {voltage}")


def electron_wavelength(voltage: float) -> float:
    """Relativistic electron wavelength in Angstrom."""
    _check_voltage(voltage)
    ev = const.e * voltage
    rest = const.m_e * const.c**2
    return const.h * const.c / math.sqrt(ev * (2 * rest + ev)) / _M_PER_ANGSTROM


def interaction_constant(voltage: float) -> float:
    """sigma = 2 pi m e lambda / h^2 with relativistic mass, in rad/(V*Angstrom)."""
    _check_voltage(voltage)
    m_rel = const.m_e * (1 + const.e * voltage / (const.m_e * const.c**2))
    lam_m = electron_wavelength(voltage) * _M_PER_ANGSTROM
    return 2 * math.pi * m_rel * const.e * lam_m / const.h**2 * _M_PER_ANGSTROM


def chi_from_k2(k2, params: MicroscopeParams, optics: DerivedOptics):
    """Aberration phase (rad) evaluated from k^2 (1/Angstrom^2)."""
    lam = optics.wavelength
    return (
        math.pi * lam * params.defocus * k2
        + 0.5 * math.pi * lam**3 * params.c3 * k2**2
        + math.pi / 3 * lam**5 * params.c5 * k2**3
    )


def chi(k, params: MicroscopeParams, optics: DerivedOptics):
    """Aberration phase (rad) for spatial frequency magnitude ``k``."""
    return chi_from_k2(np.square(k), params, optics)


def coherent_ctf(k, params: MicroscopeParams, optics: DerivedOptics):
    return np.sin(chi(k, params, optics))


def envelope_spatial(k, params: MicroscopeParams, optics: DerivedOptics):
    """Source-size damping exp(-pi^2 D^2 lambda^2 k^4 / (4 ln 2)), D the FWHM size."""
    lam = optics.wavelength
    k4 = np.square(np.square(k))
    return np.exp(-(math.pi**2) * params.source_size**2 * lam**2 * k4 / (4 * math.log(2)))


def envelope_chromatic(k, params: MicroscopeParams, optics: DerivedOptics, strict_printed: bool = False):
    """Energy-spread damping exp(-pi^2 lambda^2 Cc^2 (dE/E)^2 k^4 / (2 ln 2)).

    ``strict_printed=True`` drops the lambda^2 factor. That form has a
    dimensional exponent and damps far too early; it is kept only for
    side-by-side comparison.
    """
    k4 = np.square(np.square(k))
    scale = 1.0 if strict_printed else optics.wavelength**2
    spread = params.cc * params.energy_spread_rel
    return np.exp(-(math.pi**2) * scale * spread**2 * k4 / (2 * math.log(2)))


def effective_ctf(k, params: MicroscopeParams, optics: DerivedOptics, strict_printed: bool = False):
    return (
        envelope_spatial(k, params, optics)
        * envelope_chromatic(k, params, optics, strict_printed=strict_printed)
        * coherent_ctf(k, params, optics)
    )


@dataclass(frozen=True)
class CTFZero:
    k_zero: float
    d_res: float


def first_ctf_zero(
    params: MicroscopeParams,
    optics: DerivedOptics,
    k_max: float,
    k_min: float | None = None,
    samples: int = 10_000,
) -> CTFZero:
    """Smallest k > k_min where sin(chi) changes sign.

    The interval ``[k_min, k_max]`` is scanned on ``samples`` uniform points;
    the first bracket is refined by bisection. ``k_min`` defaults to one scan
    step, which excludes the trivial zero at k = 0.
    """
    if k_max <= 0:
        raise DomainError("k_max must be positive")
    if k_min is None:
        k_min = k_max / samples
    ks = np.linspace(k_min, k_max, samples)
    s = coherent_ctf(ks, params, optics)
    if not np.any(s):
        raise DomainError("no CTF zero to resolve: sin(chi) vanishes identically")
    exact = np.flatnonzero(s == 0.0)
    flips = np.flatnonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))
    candidates = []
    if exact.size:
        candidates.append((exact[0], True))
    if flips.size:
        candidates.append((flips[0], False))
    if not candidates:
        raise DomainError(f"no CTF zero in range ({k_min:g}, {k_max:g}] 1/A")
    idx, is_exact = min(candidates)
    if is_exact:
        k0 = float(ks[idx])
    else:
        f = lambda k: math.sin(float(chi(k, params, optics)))
        k0 = bisect(f, ks[idx], ks[idx + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    return CTFZero(k_zero=k0, d_res=1.0 / k0)


def scherzer_defocus(c3: float, wavelength: float) -> float:
    """Scherzer defocus -sqrt(1.5 C3 lambda) in Angstrom (negative: underfocus)."""
    if c3 <= 0:
        raise DomainError("Scherzer defocus is undefined for C3 <= 0")
    return -SCHERZER_COEFF * math.sqrt(c3 * wavelength)


def ctf_table(k, params: MicroscopeParams, optics: DerivedOptics, strict_printed: bool = False) -> dict:
    """Columns k, CTF, E_s, E_c, CTF_eff as arrays."""
    k = np.asarray(k, dtype=float)
    ctf = coherent_ctf(k, params, optics)
    es = envelope_spatial(k, params, optics)
    ec = envelope_chromatic(k, params, optics, strict_printed=strict_printed)
    return {"k": k, "ctf": ctf, "e_s": es, "e_c": ec, "ctf_eff": es * ec * ctf}


def ctf_csv(table: dict) -> str:
    """Render a :func:`ctf_table` as CSV text with 6 significant figures."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["k", "ctf", "e_s", "e_c", "ctf_eff"]
    writer.writerow(cols)
    for row in zip(*(table[c] for c in cols)):
        writer.writerow([f"{v + 0.0:.6g}" for v in row])
    return buf.getvalue()
