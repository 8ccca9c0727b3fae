"""Dense statevector engine for 1-4 qubits.

Covers exactly what the protocol needs: Bell-state preparation, the
H/X/Z/CZ gate set, computational/Hadamard single-qubit measurements, and
the one-EPR-pair controlled-Z gate-teleportation circuit.  All state
comparisons in this package are phase-insensitive (squared overlap).

Wire convention: wire 0 is the leftmost ket factor, i.e. the most
significant bit of the amplitude index.  All randomness is drawn from an
explicitly passed ``numpy.random.Generator``; there is no global RNG.

Amplitude vectors hold at most 16 complex numbers, so gates are applied
through precomputed index tables rather than tensor reshapes; the public
``StateVector`` constructor validates shape and norm, while internal
norm-preserving operations bypass the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

_NORM_TOL = 1e-9
_SQRT_HALF = 1.0 / math.sqrt(2.0)


class MeasurementBasis(Enum):
    """The two reference measurement bases."""

    COMPUTATIONAL = "computational"
    HADAMARD = "hadamard"


@dataclass(frozen=True)
class BellLabel:
    """Labels one of the four Bell states by the two phase/flip bits."""

    s_a: int
    s_b: int

    def __post_init__(self) -> None:
        if self.s_a not in (0, 1) or self.s_b not in (0, 1):
            raise ValueError(f"Bell label bits must be 0/1, got {(self.s_a, self.s_b)}")


class StateVector:
    """Normalized complex amplitude vector over 1-4 qubits."""

    __slots__ = ("amplitudes", "qubit_count")

    def __init__(self, amplitudes) -> None:
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        k = int(amps.size).bit_length() - 1
        if amps.size != (1 << k) or not 1 <= k <= 4:
            raise ValueError(f"amplitude vector length {amps.size} is not 2^k for k in 1..4")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {_NORM_TOL}")
        self.amplitudes = amps
        self.qubit_count = k

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StateVector({self.qubit_count} qubits, {self.amplitudes!r})"


def _wrap(amps: np.ndarray, k: int) -> StateVector:
    # Trusted constructor for amplitudes produced by norm-preserving ops.
    state = object.__new__(StateVector)
    state.amplitudes = amps
    state.qubit_count = k
    return state


@lru_cache(maxsize=None)
def _wire_indices(k: int, wire: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << k)
    bit = (idx >> (k - 1 - wire)) & 1
    return np.nonzero(bit == 0)[0], np.nonzero(bit == 1)[0]


@lru_cache(maxsize=None)
def _cz_indices(k: int, w1: int, w2: int) -> np.ndarray:
    idx = np.arange(1 << k)
    b1 = (idx >> (k - 1 - w1)) & 1
    b2 = (idx >> (k - 1 - w2)) & 1
    return np.nonzero(b1 & b2)[0]


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def _ket_array(k: int, index: int) -> np.ndarray:
    amps = np.zeros(1 << k, dtype=complex)
    amps[index] = 1.0
    amps.flags.writeable = False
    return amps


_PLUS_MINUS = (
    _frozen([_SQRT_HALF, _SQRT_HALF]),
    _frozen([_SQRT_HALF, -_SQRT_HALF]),
)


def ket(bits: tuple[int, ...]) -> StateVector:
    """Computational basis state |bits[0] bits[1] ...>."""
    k = len(bits)
    index = 0
    for b in bits:
        index = (index << 1) | (b & 1)
    return _wrap(_ket_array(k, index), k)


def plus_minus(sign_bit: int) -> StateVector:
    """|+> for sign_bit=0, |-> for sign_bit=1."""
    return _wrap(_PLUS_MINUS[sign_bit], 1)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    amps = (a.amplitudes[:, None] * b.amplitudes[None, :]).ravel()
    return _wrap(amps, a.qubit_count + b.qubit_count)


_BELL_AMPS = {
    (0, 0): _frozen([_SQRT_HALF, 0.0, 0.0, _SQRT_HALF]),
    (1, 0): _frozen([_SQRT_HALF, 0.0, 0.0, -_SQRT_HALF]),
    (0, 1): _frozen([0.0, _SQRT_HALF, _SQRT_HALF, 0.0]),
    (1, 1): _frozen([0.0, _SQRT_HALF, -_SQRT_HALF, 0.0]),
}


def make_bell(label: BellLabel) -> StateVector:
    """Bell state (Z^s_a X^s_b on the first qubit) applied to (|00>+|11>)/sqrt(2)."""
    return _wrap(_BELL_AMPS[(label.s_a, label.s_b)], 2)


def _check_wire(state: StateVector, wire: int) -> None:
    if not 0 <= wire < state.qubit_count:
        raise IndexError(f"qubit index {wire} out of range for {state.qubit_count}-qubit state")


def apply_gate(state: StateVector, gate: str, wire: int, wire2: int | None = None) -> StateVector:
    """Apply H, X, Z (one wire) or CZ (two wires). Returns a new state."""
    k = state.qubit_count
    _check_wire(state, wire)
    amps = state.amplitudes
    if gate == "CZ":
        if wire2 is None:
            raise ValueError("CZ needs two qubit indices")
        _check_wire(state, wire2)
        if wire2 == wire:
            raise ValueError("CZ qubit indices must differ")
        new = amps.copy()
        new[_cz_indices(k, wire, wire2)] *= -1.0
        return _wrap(new, k)
    if wire2 is not None:
        raise ValueError(f"{gate} takes a single qubit index")
    i0, i1 = _wire_indices(k, wire)
    a0, a1 = amps[i0], amps[i1]
    new = np.empty_like(amps)
    if gate == "H":
        new[i0] = (a0 + a1) * _SQRT_HALF
        new[i1] = (a0 - a1) * _SQRT_HALF
    elif gate == "X":
        new[i0] = a1
        new[i1] = a0
    elif gate == "Z":
        new[i0] = a0
        new[i1] = -a1
    else:
        raise ValueError(f"unknown gate {gate!r}")
    return _wrap(new, k)


def measure(
    state: StateVector,
    wire: int,
    basis: MeasurementBasis,
    rng: np.random.Generator,
) -> tuple[int, StateVector]:
    """Born-rule measurement of one qubit; returns (outcome, renormalized post-state).

    Hadamard-basis outcome 0 corresponds to |+>, outcome 1 to |->.
    """
    _check_wire(state, wire)
    work = apply_gate(state, "H", wire) if basis is MeasurementBasis.HADAMARD else state
    k = work.qubit_count
    i0, i1 = _wire_indices(k, wire)
    amps = work.amplitudes
    kept0 = amps[i0]
    p0 = float(np.sum(kept0.real**2 + kept0.imag**2))
    outcome = 0 if rng.random() < p0 else 1
    prob = p0 if outcome == 0 else 1.0 - p0
    keep = i0 if outcome == 0 else i1
    new = np.zeros_like(amps)
    new[keep] = amps[keep] / math.sqrt(prob)
    post = _wrap(new, k)
    if basis is MeasurementBasis.HADAMARD:
        post = apply_gate(post, "H", wire)
    return outcome, post


def measurement_probabilities(state: StateVector, bases: tuple[MeasurementBasis, ...]) -> np.ndarray:
    """Joint outcome probabilities for measuring every qubit, one basis per wire."""
    if len(bases) != state.qubit_count:
        raise ValueError("one basis per qubit required")
    work = state
    for wire, basis in enumerate(bases):
        if basis is MeasurementBasis.HADAMARD:
            work = apply_gate(work, "H", wire)
    amps = work.amplitudes
    return amps.real**2 + amps.imag**2


@dataclass(frozen=True)
class TeleportOutcome:
    """Heralded bits and the two-qubit output of the CZ gate-teleportation circuit."""

    h_a: int
    h_b: int
    post_state: StateVector


def _cnot(state: StateVector, control: int, target: int) -> StateVector:
    state = apply_gate(state, "H", target)
    state = apply_gate(state, "CZ", control, target)
    return apply_gate(state, "H", target)


def teleport_cz(input_state: StateVector, rng: np.random.Generator) -> TeleportOutcome:
    """Apply CZ to a two-qubit state via one EPR pair and local operations.

    Wires, top to bottom: 0 = first data qubit, 1 and 2 = EPR halves,
    3 = second data qubit.  The circuit applies H to wire 2, a CNOT from
    wire 1 onto wire 0, a CNOT from wire 2 onto wire 3, then measures
    wires 0 and 3 to obtain the heralded bits (h_a, h_b).  The output on
    wires 1 and 2 equals
    (X^h_a Z^h_b (x) X^h_b Z^h_a) CZ |input> up to global phase.
    """
    if input_state.qubit_count != 2:
        raise ValueError("teleport_cz expects a two-qubit input")
    epr = make_bell(BellLabel(0, 0))
    full = (
        input_state.amplitudes.reshape(2, 1, 1, 2) * epr.amplitudes.reshape(1, 2, 2, 1)
    ).ravel()
    state = _wrap(full, 4)
    state = apply_gate(state, "H", 2)
    state = _cnot(state, control=1, target=0)
    state = _cnot(state, control=2, target=3)
    h_a, state = measure(state, 0, MeasurementBasis.COMPUTATIONAL, rng)
    h_b, state = measure(state, 3, MeasurementBasis.COMPUTATIONAL, rng)
    post = state.amplitudes.reshape(2, 2, 2, 2)[h_a, :, :, h_b].ravel()
    return TeleportOutcome(h_a, h_b, _wrap(post, 2))


def fidelity_up_to_phase(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2; insensitive to global phase."""
    if a.qubit_count != b.qubit_count:
        raise ValueError("states have different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def pauli_correction(state: StateVector, wire: int, x_power: int, z_power: int) -> StateVector:
    """Apply X^x_power Z^z_power to one wire (Z first, matching operator order)."""
    if z_power:
        state = apply_gate(state, "Z", wire)
    if x_power:
        state = apply_gate(state, "X", wire)
    return state
