"""Gate-level statevector engine for the CTEM imaging circuit.

Qubit ``q`` is bit ``q`` of the basis index (qubit 0 least significant). A
grid of side N = 2**m uses qubits ``0..m-1`` for the y index ``j`` and
``m..2m-1`` for the x index ``i``, so basis index ``i*N + j`` lines up with
the row-major pixel layout of :mod:`qctem.wavefield`. An ancilla, when
present, is qubit ``2m`` (most significant).

The QFT here uses the exp(-2 pi i jk / 2**m) sign so it equals the unitary
``numpy.fft.fft`` on its register; the textbook circuit is conjugated, which
only negates the controlled-phase angles.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .classical import fresnel_phase, lens_phase
from .errors import DomainError
from .optics import DerivedOptics, MicroscopeParams
from .wavefield import GridSpec, is_power_of_two

# diagonals on more qubits than this are never expanded into phase gates
MAX_EXPANDED_DIAGONAL_QUBITS = 10


@lru_cache(maxsize=32)
def _basis_indices(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _bit(n_qubits: int, q: int) -> np.ndarray:
    return (_basis_indices(n_qubits) >> q) & 1


def _local_index(n_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    """Index into a phase list for every basis state; ``qubits[0]`` is the LSB."""
    local = np.zeros(1 << n_qubits, dtype=np.int64)
    for k, q in enumerate(qubits):
        local |= _bit(n_qubits, q) << k
    return local


@dataclass(frozen=True)
class Encoding:
    """Register layout for an N x N grid, optionally with one ancilla."""

    n_side: int
    with_ancilla: bool = False

    def __post_init__(self):
        if self.n_side < 2 or not is_power_of_two(self.n_side):
            raise DomainError(f"n_side must be a power of two >= 2, got {self.n_side}")

    @classmethod
    def for_grid(cls, grid: GridSpec, with_ancilla: bool = False) -> Encoding:
        return cls(grid.n_side, with_ancilla)

    @property
    def n_bits(self) -> int:
        return self.n_side.bit_length() - 1

    @property
    def y_register(self) -> tuple[int, ...]:
        return tuple(range(self.n_bits))

    @property
    def x_register(self) -> tuple[int, ...]:
        return tuple(range(self.n_bits, 2 * self.n_bits))

    @property
    def data_register(self) -> tuple[int, ...]:
        return self.y_register + self.x_register

    @property
    def ancilla(self) -> int | None:
        return 2 * self.n_bits if self.with_ancilla else None

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_bits + (1 if self.with_ancilla else 0)


@dataclass(frozen=True)
class GateOp:
    """One circuit instruction.

    kinds: ``H``, ``P`` (phase on |1>), ``CP`` (controlled phase), ``MCP``
    (phase when all listed qubits are 1), ``SWAP``, ``GPHASE``, ``DIAG``
    (``phases`` indexed by the listed qubits, first qubit least significant)
    and ``CDIAG`` (``qubits[0]`` is the control; +phases on control 0,
    -phases on control 1).
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0
    phases: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise DomainError(f"non-finite angle in {self.kind}")
        if self.kind in ("DIAG", "CDIAG"):
            phases = np.asarray(self.phases, dtype=float)
            width = len(self.qubits) - (1 if self.kind == "CDIAG" else 0)
            if phases.shape != (1 << width,):
                raise DomainError(f"{self.kind} on {width} qubits needs {1 << width} phases, got {phases.shape}")
            if not np.all(np.isfinite(phases)):
                raise DomainError(f"non-finite phase in {self.kind}")
            object.__setattr__(self, "phases", phases)

    def inverse(self) -> GateOp:
        if self.kind in ("H", "SWAP"):
            return self
        if self.kind in ("DIAG", "CDIAG"):
            return GateOp(self.kind, self.qubits, phases=-self.phases)
        return GateOp(self.kind, self.qubits, -self.angle)

    def trace_line(self) -> str:
        qs = ",".join(str(q) for q in self.qubits)
        if self.kind in ("H", "SWAP"):
            return f"{self.kind} {qs}"
        if self.kind in ("DIAG", "CDIAG"):
            return f"{self.kind} {qs} " + ",".join(repr(float(p)) for p in self.phases)
        return f"{self.kind} {qs} {self.angle!r}"


class QuantumState:
    """Statevector over ``n_qubits`` qubits; gates act in place."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=complex)
            amplitudes[0] = 1.0
        amplitudes = np.array(amplitudes, dtype=complex)
        if amplitudes.shape != (1 << n_qubits,):
            raise DomainError(f"expected {1 << n_qubits} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> QuantumState:
        state = cls(n_qubits)
        state.amplitudes[0] = 0.0
        state.amplitudes[index] = 1.0
        return state

    def copy(self) -> QuantumState:
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def apply(self, op: GateOp) -> QuantumState:
        n = self.n_qubits
        amps = self.amplitudes
        if any(q < 0 or q >= n for q in op.qubits):
            raise DomainError(f"{op.kind} addresses qubits {op.qubits} outside a {n}-qubit state")
        kind = op.kind
        if kind == "H":
            (q,) = op.qubits
            view = amps.reshape(-1, 2, 1 << q)
            a0 = view[:, 0, :].copy()
            a1 = view[:, 1, :]
            view[:, 0, :] = (a0 + a1) / math.sqrt(2)
            view[:, 1, :] = (a0 - a1) / math.sqrt(2)
        elif kind == "P":
            (q,) = op.qubits
            amps.reshape(-1, 2, 1 << q)[:, 1, :] *= np.exp(1j * op.angle)
        elif kind in ("CP", "MCP"):
            mask = np.ones(1 << n, dtype=bool)
            for q in op.qubits:
                mask &= _bit(n, q).astype(bool)
            amps[mask] *= np.exp(1j * op.angle)
        elif kind == "SWAP":
            a, b = op.qubits
            idx = _basis_indices(n)
            differ = _bit(n, a) ^ _bit(n, b)
            perm = idx ^ (differ * ((1 << a) | (1 << b)))
            amps[:] = amps[perm]
        elif kind == "GPHASE":
            amps *= np.exp(1j * op.angle)
        elif kind == "DIAG":
            amps *= np.exp(1j * op.phases[_local_index(n, op.qubits)])
        elif kind == "CDIAG":
            ctrl, *register = op.qubits
            sign = 1 - 2 * _bit(n, ctrl)
            amps *= np.exp(1j * sign * op.phases[_local_index(n, register)])
        else:
            raise DomainError(f"unknown gate kind {kind!r}")
        return self

    def dump_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,re,im\n")
        for g, a in enumerate(self.amplitudes):
            buf.write(f"{g},{float(a.real)!r},{float(a.imag)!r}\n")
        return buf.getvalue()


class Circuit:
    """An ordered list of :class:`GateOp` on a fixed number of qubits."""

    def __init__(self, n_qubits: int, ops: Iterable[GateOp] = ()):
        self.n_qubits = n_qubits
        self.ops: list[GateOp] = list(ops)

    def append(self, op: GateOp) -> Circuit:
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp]) -> Circuit:
        self.ops.extend(ops)
        return self

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)])

    def run(self, state: QuantumState | None = None) -> QuantumState:
        state = QuantumState(self.n_qubits) if state is None else state
        for op in self.ops:
            state.apply(op)
        return state

    def unitary(self) -> np.ndarray:
        """Dense matrix of the circuit (column g is the image of basis state g)."""
        dim = 1 << self.n_qubits
        out = np.empty((dim, dim), dtype=complex)
        for g in range(dim):
            out[:, g] = self.run(QuantumState.basis(self.n_qubits, g)).amplitudes
        return out

    def count(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for op in self.ops:
            counts[op.kind] = counts.get(op.kind, 0) + 1
        return counts

    def trace(self) -> str:
        return "".join(op.trace_line() + "\n" for op in self.ops)


def qft_ops(register: Sequence[int], inverse: bool = False) -> list[GateOp]:
    """H + controlled-phase ladder + swap network for one register (LSB first)."""
    m = len(register)
    ops = []
    for a in reversed(range(m)):
        ops.append(GateOp("H", (register[a],)))
        for b in reversed(range(a)):
            ops.append(GateOp("CP", (register[b], register[a]), -math.pi / (1 << (a - b))))
    for a in range(m // 2):
        ops.append(GateOp("SWAP", (register[a], register[m - 1 - a])))
    if inverse:
        ops = [op.inverse() for op in reversed(ops)]
    return ops


def apply_qft_register(state: QuantumState, register: Sequence[int], inverse: bool = False) -> QuantumState:
    for op in qft_ops(register, inverse=inverse):
        state.apply(op)
    return state


def expand_diagonal(qubits: Sequence[int], phases: np.ndarray, tol: float = 0.0) -> list[GateOp]:
    """Rewrite a diagonal as a product of (multi-)controlled phase gates.

    Writing theta(m) = sum over bit subsets S of c_S * prod_{k in S} m_k, the
    coefficients c_S come from a Moebius transform over subsets; each nonzero
    c_S becomes one gate that fires when every qubit in S is 1.
    """
    k = len(qubits)
    if k > MAX_EXPANDED_DIAGONAL_QUBITS:
        raise DomainError(f"refusing to expand a {k}-qubit diagonal (limit {MAX_EXPANDED_DIAGONAL_QUBITS})")
    coeff = np.array(phases, dtype=float)
    for bit in range(k):
        view = coeff.reshape(-1, 2, 1 << bit)
        view[:, 1, :] -= view[:, 0, :]
    ops = []
    for s, c in enumerate(coeff):
        if abs(c) <= tol:
            continue
        members = tuple(qubits[b] for b in range(k) if (s >> b) & 1)
        if len(members) == 0:
            ops.append(GateOp("GPHASE", (), float(c)))
        elif len(members) == 1:
            ops.append(GateOp("P", members, float(c)))
        elif len(members) == 2:
            ops.append(GateOp("CP", members, float(c)))
        else:
            ops.append(GateOp("MCP", members, float(c)))
    return ops


def diagonal_ops(qubits: Sequence[int], phases: np.ndarray, expand: bool = False) -> list[GateOp]:
    phases = np.asarray(phases, dtype=float).ravel()
    if expand and len(qubits) <= MAX_EXPANDED_DIAGONAL_QUBITS:
        return expand_diagonal(qubits, phases)
    return [GateOp("DIAG", tuple(qubits), phases=phases)]


def controlled_diagonal_ops(ctrl: int, qubits: Sequence[int], phases: np.ndarray, expand: bool = False) -> list[GateOp]:
    phases = np.asarray(phases, dtype=float).ravel()
    if expand and len(qubits) + 1 <= MAX_EXPANDED_DIAGONAL_QUBITS:
        return expand_diagonal(tuple(qubits) + (ctrl,), np.concatenate([phases, -phases]))
    return [GateOp("CDIAG", (ctrl,) + tuple(qubits), phases=phases)]


def apply_diagonal(state: QuantumState, qubits: Sequence[int], phases: Sequence[float]) -> QuantumState:
    return state.apply(GateOp("DIAG", tuple(qubits), phases=np.asarray(phases, dtype=float)))


def prepare_plane_wave(encoding: Encoding) -> QuantumState:
    state = QuantumState(encoding.n_qubits)
    for q in encoding.data_register:
        state.apply(GateOp("H", (q,)))
    return state


def _imaging_ops(grid: GridSpec, params: MicroscopeParams, optics: DerivedOptics, encoding: Encoding, expand: bool) -> list[GateOp]:
    data = encoding.data_register
    ops = qft_ops(encoding.x_register) + qft_ops(encoding.y_register)
    ops += diagonal_ops(data, fresnel_phase(grid, params.propagation_z, optics.wavelength), expand)
    ops += diagonal_ops(data, lens_phase(grid, params, optics), expand)
    ops += qft_ops(encoding.x_register, inverse=True) + qft_ops(encoding.y_register, inverse=True)
    return ops


def _grid_for(potential: np.ndarray, encoding: Encoding, box_length: float) -> GridSpec:
    potential = np.asarray(potential)
    if potential.shape != (encoding.n_side, encoding.n_side):
        raise DomainError(f"potential shape {potential.shape} does not match encoding side {encoding.n_side}")
    return GridSpec(encoding.n_side, box_length)


def build_ctem_circuit(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    encoding: Encoding,
    box_length: float,
    expand_diagonals: bool = False,
) -> Circuit:
    """Hadamards, specimen diagonal, 2D QFT, Fresnel and lens diagonals, inverse 2D QFT."""
    grid = _grid_for(potential, encoding, box_length)
    data = encoding.data_register
    circuit = Circuit(encoding.n_qubits, [GateOp("H", (q,)) for q in data])
    circuit.extend(diagonal_ops(data, optics.sigma * np.asarray(potential, dtype=float), expand_diagonals))
    circuit.extend(_imaging_ops(grid, params, optics, encoding, expand_diagonals))
    return circuit


def run_ctem_circuit(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    encoding: Encoding,
    box_length: float,
    expand_diagonals: bool = False,
) -> QuantumState:
    return build_ctem_circuit(potential, params, optics, encoding, box_length, expand_diagonals).run()


def _data_probabilities(state: QuantumState, encoding: Encoding) -> np.ndarray:
    probs = state.probabilities()
    n2 = encoding.n_side**2
    if encoding.with_ancilla:
        probs = probs.reshape(2, n2).sum(axis=0)
    return probs.reshape(encoding.n_side, encoding.n_side)


def intensity_from_state(state: QuantumState, encoding: Encoding) -> np.ndarray:
    """|amplitude(i*N + j)|^2 as an N x N array; an ancilla is traced out."""
    return _data_probabilities(state, encoding)


def sample_shots(state: QuantumState, encoding: Encoding, shots: int, seed: int | None = None) -> np.ndarray:
    """Counts per pixel from ``shots`` projective measurements.

    Uses numpy's PCG64 generator seeded with ``seed`` and inverse-CDF lookup
    on the cumulative pixel distribution.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    probs = _data_probabilities(state, encoding).ravel()
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    draws = np.minimum(draws, probs.size - 1)
    counts = np.bincount(draws, minlength=probs.size)
    return counts.reshape(encoding.n_side, encoding.n_side)


def _ancilla_coherence(state: QuantumState, encoding: Encoding) -> tuple[float, float, complex]:
    if not encoding.with_ancilla:
        raise DomainError("encoding has no ancilla qubit")
    branches = state.amplitudes.reshape(2, encoding.n_side**2)
    rho00 = float(np.vdot(branches[0], branches[0]).real)
    rho11 = float(np.vdot(branches[1], branches[1]).real)
    rho01 = complex(np.vdot(branches[1], branches[0]))
    return rho00, rho11, rho01


def ancilla_expectations(state: QuantumState, encoding: Encoding) -> dict[str, float]:
    """<X>, <Y>, <Z> of the reduced ancilla state.

    The reduced density matrix is divided by its trace so that round-off in
    the state norm does not leak into the expectations.
    """
    rho00, rho11, rho01 = _ancilla_coherence(state, encoding)
    trace = rho00 + rho11
    return {"X": 2 * rho01.real / trace, "Y": -2 * rho01.imag / trace, "Z": (rho00 - rho11) / trace}


def branch_intensities(state: QuantumState, encoding: Encoding) -> tuple[np.ndarray, np.ndarray]:
    """Normalized data-register intensity conditioned on ancilla 0 and 1."""
    if not encoding.with_ancilla:
        raise DomainError("encoding has no ancilla qubit")
    branches = state.amplitudes.reshape(2, encoding.n_side, encoding.n_side)
    out = []
    for b in branches:
        p = np.abs(b) ** 2
        out.append(p / p.sum())
    return out[0], out[1]


def build_phase_discrimination_circuit(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    encoding: Encoding,
    box_length: float,
    sign: int = 1,
    expand_diagonals: bool = False,
) -> Circuit:
    """Ancilla in |+>, branch-dependent grating exp(+-i sigma V), shared imaging unitary."""
    if not encoding.with_ancilla:
        raise DomainError("phase discrimination needs an encoding with an ancilla")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    grid = _grid_for(potential, encoding, box_length)
    data = encoding.data_register
    circuit = Circuit(encoding.n_qubits, [GateOp("H", (q,)) for q in data + (encoding.ancilla,)])
    phases = sign * optics.sigma * np.asarray(potential, dtype=float)
    circuit.extend(controlled_diagonal_ops(encoding.ancilla, data, phases, expand_diagonals))
    circuit.extend(_imaging_ops(grid, params, optics, encoding, expand_diagonals))
    return circuit


def phase_discrimination(
    potential: np.ndarray,
    params: MicroscopeParams,
    optics: DerivedOptics,
    encoding: Encoding,
    box_length: float,
    basis: str = "Y",
    sign: int = 1,
) -> float:
    """Ancilla expectation in the X or Y basis after the controlled-grating circuit.

    ``sign=+1`` puts exp(+i sigma V) on the ancilla-0 branch; ``sign=-1``
    swaps the branch roles (equivalent to imaging -V).
    """
    basis = basis.upper()
    if basis not in ("X", "Y"):
        raise DomainError(f"basis must be 'X' or 'Y', got {basis!r}")
    state = build_phase_discrimination_circuit(potential, params, optics, encoding, box_length, sign).run()
    return ancilla_expectations(state, encoding)[basis]


@dataclass(frozen=True)
class DistributionMetrics:
    classical_fidelity: float
    correlation: float
    tvd: float


def distribution_metrics(p: np.ndarray, q: np.ndarray, atol: float = 1e-6) -> DistributionMetrics:
    """Fidelity (sum sqrt(p q))^2, Pearson correlation and total variation distance.

    The correlation is NaN when either input is constant.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DomainError("distributions must have the same number of entries")
    for name, d in (("p", p), ("q", q)):
        if np.any(d < 0) or abs(d.sum() - 1.0) > atol:
            raise DomainError(f"{name} is not a normalized probability distribution (sum={d.sum()!r})")
    fidelity = float(np.sum(np.sqrt(p * q)) ** 2)
    tvd = float(0.5 * np.sum(np.abs(p - q)))
    if np.ptp(p) == 0 or np.ptp(q) == 0:
        corr = float("nan")
    else:
        corr = float(np.corrcoef(p, q)[0, 1])
    return DistributionMetrics(min(fidelity, 1.0), corr, tvd)
