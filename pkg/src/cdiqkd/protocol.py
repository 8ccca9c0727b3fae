"""Protocol engine: round execution, classification, checks, and sessions.

Alice and Bob act as verifier state machines around a pluggable device
strategy.  A session runs n independent rounds (challenge types sampled
independently per side), classifies each round, tags test/generation
rounds, sifts mismatched-challenge rounds, estimates the failure fraction
on test rounds with a strict abort threshold, and extracts the raw key
from matched-basis generation rounds.

Determinism contract: identical (seed, params) produce an identical
session, bit for bit.  Round i draws from two substreams spawned from
``SeedSequence(seed).spawn(n)[i]`` - one for the verifiers, one for the
device - so rounds could be executed in parallel without changing any
outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bits import dot, fits
from .devices import ChallengeType, DeviceStrategy
from .etcf import (
    EtcfKeyPair,
    EtcfParams,
    KeyKind,
    NoPreimageError,
    Trapdoor,
    check_preimage,
    invert,
    keygen,
)
from .quantum import (
    MeasurementBasis,
    StateVector,
    apply_gate,
    ket,
    measurement_probabilities,
    pauli_correction,
    plus_minus,
    tensor,
)

SUPPORT_TOLERANCE = 1e-9


class RoundType(Enum):
    BELL = "bell"
    PRODUCT = "product"
    SIFTED = "sifted"


class TestTag(Enum):
    __test__ = False  # keep pytest from collecting the enum

    TEST = "test"
    GENERATE = "generate"


class WinFlag(Enum):
    PASS = "pass"
    FAIL = "fail"
    NA = "na"


@dataclass
class ProtocolParams:
    """Session parameters; the probability knobs default to fair coins."""

    rounds: int
    epsilon: float
    etcf: EtcfParams = field(default_factory=EtcfParams)
    p_theta_hadamard: float = 0.5
    p_ct_b: float = 0.5
    p_generate_given_bell: float = 0.5
    p_question_hadamard: float = 0.5

    def validate(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        for name in ("p_theta_hadamard", "p_ct_b", "p_generate_given_bell", "p_question_hadamard"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        self.etcf.validate()


@dataclass
class SideRecord:
    """One party's stored data for one round."""

    theta: MeasurementBasis
    key: EtcfKeyPair
    trapdoor: Trapdoor
    c: int
    ct: ChallengeType
    z: int | None = None
    d: int | None = None
    question: MeasurementBasis | None = None
    answer: int | None = None
    h: int | None = None
    violation: bool = False  # malformed device message (wrong width/shape)


@dataclass
class RoundRecord:
    index: int
    alice: SideRecord
    bob: SideRecord
    round_type: RoundType
    test_tag: TestTag = TestTag.TEST
    win: WinFlag = WinFlag.NA


@dataclass
class SessionResult:
    records: list[RoundRecord]
    aborted: bool
    fail_fraction: float
    raw_key_a: np.ndarray
    raw_key_b: np.ndarray
    sifted_count: int
    tested_count: int
    failed_count: int
    bell_count: int
    product_count: int
    generate_count: int
    matched_count: int
    dropped_count: int

    @property
    def rounds(self) -> int:
        return len(self.records)


def classify_round(
    ct_a: ChallengeType,
    ct_b: ChallengeType,
    theta_a: MeasurementBasis,
    theta_b: MeasurementBasis,
) -> RoundType:
    """Round type from the published challenge types and state bases."""
    if ct_a is not ct_b:
        return RoundType.SIFTED
    if (
        ct_a is ChallengeType.B
        and theta_a is MeasurementBasis.HADAMARD
        and theta_b is MeasurementBasis.HADAMARD
    ):
        return RoundType.BELL
    return RoundType.PRODUCT


def choose_test_tag(
    round_type: RoundType, rng: np.random.Generator, p_generate: float = 0.5
) -> TestTag:
    """Fair coin on Bell rounds; everything else is a test round."""
    if round_type is RoundType.BELL and rng.random() < p_generate:
        return TestTag.GENERATE
    return TestTag.TEST


def bell_label_bit(d: int, x0: int, x1: int, width: int | None = None) -> int:
    """The phase bit d . (x0 xor x1) over GF(2)."""
    if width is not None:
        for value in (d, x0, x1):
            if not fits(value, width):
                raise ValueError(f"{value} is not a {width}-bit string")
    return dot(d, x0 ^ x1)


def _kind_for_basis(theta: MeasurementBasis) -> KeyKind:
    return KeyKind.CLAW_FREE if theta is MeasurementBasis.HADAMARD else KeyKind.INJECTIVE


def _draw_basis(rng: np.random.Generator, p_hadamard: float) -> MeasurementBasis:
    return (
        MeasurementBasis.HADAMARD
        if rng.random() < p_hadamard
        else MeasurementBasis.COMPUTATIONAL
    )


def _draw_challenge(rng: np.random.Generator, p_b: float) -> ChallengeType:
    return ChallengeType.B if rng.random() < p_b else ChallengeType.A


def _is_bit(value) -> bool:
    return isinstance(value, (int, np.integer)) and value in (0, 1)


def run_round(
    device: DeviceStrategy,
    params: ProtocolParams,
    rng: np.random.Generator,
    device_rng: np.random.Generator | None = None,
    index: int = 0,
) -> RoundRecord:
    """Execute one round of the self-testing interaction and record everything.

    Malformed device responses (wrong widths, non-bit answers) are noted on
    the offending side and later scored as failures; they never raise.
    """
    theta_a = _draw_basis(rng, params.p_theta_hadamard)
    theta_b = _draw_basis(rng, params.p_theta_hadamard)
    key_a, trap_a = keygen(_kind_for_basis(theta_a), params.etcf, rng)
    key_b, trap_b = keygen(_kind_for_basis(theta_b), params.etcf, rng)

    device.reset(device_rng if device_rng is not None else rng)
    c_a, c_b = device.on_keys(key_a, key_b)

    ct_a = _draw_challenge(rng, params.p_ct_b)
    ct_b = _draw_challenge(rng, params.p_ct_b)
    resp_a, resp_b = device.on_challenges(ct_a, ct_b)

    x = _draw_basis(rng, params.p_question_hadamard) if ct_a is ChallengeType.B else None
    y = _draw_basis(rng, params.p_question_hadamard) if ct_b is ChallengeType.B else None
    if x is not None or y is not None:
        a, h_a, b, h_b = device.on_questions(x, y)
    else:
        a = h_a = b = h_b = None

    alice = _ingest_side(theta_a, key_a, trap_a, c_a, ct_a, resp_a, x, a, h_a)
    bob = _ingest_side(theta_b, key_b, trap_b, c_b, ct_b, resp_b, y, b, h_b)
    round_type = classify_round(ct_a, ct_b, theta_a, theta_b)
    return RoundRecord(index=index, alice=alice, bob=bob, round_type=round_type)


def _ingest_side(theta, key, trapdoor, c, ct, response, question, answer, h) -> SideRecord:
    side = SideRecord(theta=theta, key=key, trapdoor=trapdoor, c=0, ct=ct, question=question)
    if isinstance(c, (int, np.integer)) and fits(int(c), key.codomain_bits):
        side.c = int(c)
    else:
        side.violation = True
    if ct is ChallengeType.A:
        if isinstance(response, (int, np.integer)) and fits(int(response), 1 + key.domain_bits):
            side.z = int(response)
        else:
            side.violation = True
    else:
        if isinstance(response, (int, np.integer)) and fits(int(response), key.domain_bits):
            side.d = int(response)
        else:
            side.violation = True
        if _is_bit(answer) and _is_bit(h):
            side.answer = int(answer)
            side.h = int(h)
        else:
            side.violation = True
    return side


def _reconstruct_retained_qubit(side: SideRecord) -> StateVector | None:
    """The one-qubit state an honest device would hold after challenge b.

    None when the commitment is outside the image (nothing honest exists).
    """
    try:
        if side.key.kind is KeyKind.CLAW_FREE:
            x0, x1 = invert(side.trapdoor, side.c)
            return plus_minus(bell_label_bit(side.d, x0, x1))
        b_hat, _ = invert(side.trapdoor, side.c)
        return ket((b_hat,))
    except NoPreimageError:
        return None


def honest_support(record: RoundRecord) -> set[tuple[int, int]]:
    """Answer pairs an honest device could have produced with the reported h bits.

    Reconstructs the two retained qubits from the trapdoor inversions,
    builds the pre-measurement state (CZ, Hadamard on the second qubit,
    then the X^hA Z^hB correction on both qubits), and keeps the outcomes
    whose Born probability under the question bases exceeds the support
    tolerance.  Deterministic honest components reduce this to equality;
    uniform components admit both values.
    """
    alice, bob = record.alice, record.bob
    if alice.ct is not ChallengeType.B or bob.ct is not ChallengeType.B:
        raise ValueError("honest_support applies to rounds where both challenges are b")
    if alice.violation or bob.violation:
        return set()
    qubit_a = _reconstruct_retained_qubit(alice)
    qubit_b = _reconstruct_retained_qubit(bob)
    if qubit_a is None or qubit_b is None:
        return set()
    state = tensor(qubit_a, qubit_b)
    state = apply_gate(state, "CZ", 0, 1)
    state = apply_gate(state, "H", 1)
    for wire in (0, 1):
        state = pauli_correction(state, wire, x_power=alice.h, z_power=bob.h)
    probs = measurement_probabilities(state, (alice.question, bob.question))
    return {
        (a, b)
        for a in (0, 1)
        for b in (0, 1)
        if probs[(a << 1) | b] > SUPPORT_TOLERANCE
    }


def win_condition(record: RoundRecord) -> WinFlag:
    """Evaluate the round checks; requires trapdoors, never raises on device data."""
    if record.round_type is RoundType.SIFTED:
        raise ValueError("sifted rounds are discarded, not scored")
    alice, bob = record.alice, record.bob
    if alice.violation or bob.violation:
        return WinFlag.FAIL
    for side in (alice, bob):
        if side.ct is ChallengeType.A and not check_preimage(side.key, side.z, side.c):
            return WinFlag.FAIL
    if alice.ct is not ChallengeType.B:
        return WinFlag.PASS
    if record.round_type is RoundType.BELL:
        return _bell_check(record)
    return WinFlag.PASS if (alice.answer, bob.answer) in honest_support(record) else WinFlag.FAIL


def _bell_check(record: RoundRecord) -> WinFlag:
    alice, bob = record.alice, record.bob
    if alice.question is bob.question:
        side = bob if alice.question is MeasurementBasis.COMPUTATIONAL else alice
        try:
            x0, x1 = invert(side.trapdoor, side.c)
        except NoPreimageError:
            return WinFlag.FAIL
        expected = bell_label_bit(side.d, x0, x1)
        if (alice.answer ^ bob.answer) != expected:
            return WinFlag.FAIL
    return WinFlag.PASS


def run_session(device: DeviceStrategy, params: ProtocolParams, seed) -> SessionResult:
    """Run the full pipeline: rounds, sifting, estimation, key extraction."""
    params.validate()
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    records: list[RoundRecord] = []
    for i, child in enumerate(master.spawn(params.rounds)):
        verifier_seq, device_seq = child.spawn(2)
        verifier_rng = np.random.Generator(np.random.PCG64(verifier_seq))
        device_rng = np.random.Generator(np.random.PCG64(device_seq))
        record = run_round(device, params, verifier_rng, device_rng, index=i)
        record.test_tag = choose_test_tag(
            record.round_type, verifier_rng, params.p_generate_given_bell
        )
        records.append(record)

    tested = failed = 0
    for record in records:
        if record.round_type is RoundType.SIFTED or record.test_tag is TestTag.GENERATE:
            continue
        record.win = win_condition(record)
        tested += 1
        if record.win is WinFlag.FAIL:
            failed += 1
    fail_fraction = failed / tested if tested else 0.0
    aborted = fail_fraction > params.epsilon

    key_a: list[int] = []
    key_b: list[int] = []
    matched = dropped = 0
    generate_records = [
        r
        for r in records
        if r.round_type is RoundType.BELL and r.test_tag is TestTag.GENERATE
    ]
    if not aborted:
        for record in generate_records:
            bit = _generation_bits(record)
            if bit is None:
                dropped += 1
                continue
            matched += 1
            key_a.append(bit[0])
            key_b.append(bit[1])

    sifted = [r for r in records if r.round_type is not RoundType.SIFTED]
    return SessionResult(
        records=records,
        aborted=aborted,
        fail_fraction=fail_fraction,
        raw_key_a=np.array(key_a, dtype=np.uint8),
        raw_key_b=np.array(key_b, dtype=np.uint8),
        sifted_count=len(sifted),
        tested_count=tested,
        failed_count=failed,
        bell_count=sum(1 for r in sifted if r.round_type is RoundType.BELL),
        product_count=sum(1 for r in sifted if r.round_type is RoundType.PRODUCT),
        generate_count=len(generate_records),
        matched_count=matched,
        dropped_count=dropped,
    )


def _generation_bits(record: RoundRecord) -> tuple[int, int] | None:
    """Alice's and Bob's key bits for a generation round; None for dropped positions.

    Positions are dropped when the question bases differ from the matched
    computational pair or the device data needed to compute the flip bit is
    unusable (only a cheating device can cause the latter).
    """
    alice, bob = record.alice, record.bob
    if alice.violation or bob.violation:
        return None
    if (
        alice.question is not MeasurementBasis.COMPUTATIONAL
        or bob.question is not MeasurementBasis.COMPUTATIONAL
    ):
        return None
    try:
        x0, x1 = invert(bob.trapdoor, bob.c)
    except NoPreimageError:
        return None
    s_b = bell_label_bit(bob.d, x0, x1)
    return alice.answer, bob.answer ^ s_b
