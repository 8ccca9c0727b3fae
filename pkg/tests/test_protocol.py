"""Protocol engine tests: classification, checks, sessions, key extraction."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdiqkd.bits import dot
from cdiqkd.devices import (
    ChallengeType,
    ClassicalDeterministicDevice,
    ClassicalRandomDevice,
    HonestDevice,
    NoiseSpec,
    NoisyHonestDevice,
)
from cdiqkd.etcf import EtcfParams, invert
from cdiqkd.protocol import (
    ProtocolParams,
    RoundType,
    TestTag,
    WinFlag,
    classify_round,
    choose_test_tag,
    bell_label_bit,
    honest_support,
    run_round,
    run_session,
    win_condition,
)
from cdiqkd.quantum import MeasurementBasis

from .helpers import assert_frequency

COMP = MeasurementBasis.COMPUTATIONAL
HAD = MeasurementBasis.HADAMARD
A, B = ChallengeType.A, ChallengeType.B


def params(rounds=256, epsilon=0.05, w=4, **knobs) -> ProtocolParams:
    return ProtocolParams(
        rounds=rounds,
        epsilon=epsilon,
        etcf=EtcfParams(family="ideal", domain_bits=w),
        **knobs,
    )


class TestClassifyRound:
    def test_bell(self):
        assert classify_round(B, B, HAD, HAD) is RoundType.BELL

    def test_mismatched_challenges_are_sifted(self):
        assert classify_round(A, B, HAD, HAD) is RoundType.SIFTED
        assert classify_round(B, A, COMP, COMP) is RoundType.SIFTED

    def test_everything_else_is_product(self):
        assert classify_round(B, B, HAD, COMP) is RoundType.PRODUCT
        assert classify_round(B, B, COMP, HAD) is RoundType.PRODUCT
        assert classify_round(B, B, COMP, COMP) is RoundType.PRODUCT
        assert classify_round(A, A, HAD, HAD) is RoundType.PRODUCT

    def test_exhaustive_table(self):
        for ct_a in (A, B):
            for ct_b in (A, B):
                for theta_a in (COMP, HAD):
                    for theta_b in (COMP, HAD):
                        got = classify_round(ct_a, ct_b, theta_a, theta_b)
                        if ct_a is not ct_b:
                            assert got is RoundType.SIFTED
                        elif ct_a is B and theta_a is HAD and theta_b is HAD:
                            assert got is RoundType.BELL
                        else:
                            assert got is RoundType.PRODUCT


class TestChooseTestTag:
    def test_product_always_test(self):
        rng = np.random.default_rng(0)
        assert all(
            choose_test_tag(RoundType.PRODUCT, rng) is TestTag.TEST for _ in range(100)
        )

    def test_bell_fair_coin(self):
        rng = np.random.default_rng(1)
        n = 10_000
        generate = sum(
            choose_test_tag(RoundType.BELL, rng) is TestTag.GENERATE for _ in range(n)
        )
        assert_frequency(generate, n, 0.5, "generate tag")

    def test_generate_probability_knob(self):
        rng = np.random.default_rng(2)
        assert all(
            choose_test_tag(RoundType.BELL, rng, p_generate=1.0) is TestTag.GENERATE
            for _ in range(50)
        )


class TestComputeS:
    def test_zero_string_gives_zero(self):
        for claw in [(0b0101, 0b0011), (0, 1), (7, 7)]:
            assert bell_label_bit(0, *claw) == 0

    def test_arithmetic_examples(self):
        # strings written first-bit-first: d="11", x0="01", x1="10" -> 0
        assert bell_label_bit(0b11, 0b10, 0b01) == 0
        # d="10", x0="01", x1="10" -> 1
        assert bell_label_bit(0b01, 0b10, 0b01) == 1

    def test_width_validation(self):
        with pytest.raises(ValueError):
            bell_label_bit(4, 0, 1, width=2)

    @given(
        d=st.integers(0, 255), x0=st.integers(0, 255), x1=st.integers(0, 255)
    )
    @settings(max_examples=200)
    def test_properties(self, d, x0, x1):
        assert bell_label_bit(d, x0, x1) == bell_label_bit(d, x1, x0)
        assert bell_label_bit(d, x0, x0) == 0
        assert bell_label_bit(d, x0, x1) == dot(d, x0) ^ dot(d, x1)


def drive_round(device, round_params, seed, index=0):
    seq = np.random.SeedSequence(seed)
    v_seq, d_seq = seq.spawn(2)
    return run_round(
        device,
        round_params,
        np.random.Generator(np.random.PCG64(v_seq)),
        np.random.Generator(np.random.PCG64(d_seq)),
        index=index,
    )


class TestRunRound:
    def test_honest_round_passes(self):
        for seed in range(50):
            record = drive_round(HonestDevice(), params(), seed)
            if record.round_type is not RoundType.SIFTED:
                assert win_condition(record) is WinFlag.PASS

    def test_wrong_width_z_fails(self):
        table = {"z_a": 1 << 10, "z_b": 1 << 10}  # too wide for w=4
        forced = params(p_ct_b=0.0)  # both challenges a
        record = drive_round(ClassicalDeterministicDevice(table), forced, 3)
        assert record.alice.violation
        assert win_condition(record) is WinFlag.FAIL

    def test_sifted_fraction_near_half(self):
        session = run_session(HonestDevice(), params(rounds=10_000), seed=17)
        sifted = session.rounds - session.sifted_count
        assert_frequency(sifted, session.rounds, 0.5, "sifted fraction")

    def test_sifted_rounds_are_not_scored(self):
        session = run_session(HonestDevice(), params(rounds=200), seed=18)
        for record in session.records:
            if record.round_type is RoundType.SIFTED:
                assert record.win is WinFlag.NA
                with pytest.raises(ValueError):
                    win_condition(record)


class TestHonestSupport:
    def bell_record(self, seed):
        forced = params(p_theta_hadamard=1.0, p_ct_b=1.0)
        return drive_round(HonestDevice(), forced, seed)

    def test_bell_computational_support_is_parity_class(self):
        found = 0
        for seed in range(200):
            record = self.bell_record(seed)
            if record.alice.question is COMP and record.bob.question is COMP:
                x0, x1 = invert(record.bob.trapdoor, record.bob.c)
                s_b = bell_label_bit(record.bob.d, x0, x1)
                support = honest_support(record)
                assert support == {(0, s_b), (1, 1 ^ s_b)}
                found += 1
        assert found > 10

    def test_product_computational_answer_is_pinned(self):
        # Alice injective (computational basis state), question computational.
        forced = params(p_theta_hadamard=0.0, p_ct_b=1.0, p_question_hadamard=0.0)
        for seed in range(30):
            record = drive_round(HonestDevice(), forced, seed)
            b_hat, _ = invert(record.alice.trapdoor, record.alice.c)
            support = honest_support(record)
            admissible_a = {a for a, _ in support}
            assert admissible_a == {b_hat ^ record.alice.h}

    def test_product_hadamard_on_basis_state_admits_both(self):
        forced = params(p_theta_hadamard=0.0, p_ct_b=1.0, p_question_hadamard=1.0)
        record = drive_round(HonestDevice(), forced, 5)
        support = honest_support(record)
        assert {a for a, _ in support} == {0, 1}

    def test_invalid_commitment_gives_empty_support(self):
        forced = params(p_theta_hadamard=1.0, p_ct_b=1.0)
        record = drive_round(HonestDevice(), forced, 6)
        gap = next(
            y
            for y in range(1 << record.alice.key.codomain_bits)
            if record.alice.trapdoor.inverse[0, y] < 0
            and record.alice.trapdoor.inverse[1, y] < 0
        )
        record.alice.c = gap
        assert honest_support(record) == set()
        assert win_condition(record) is WinFlag.FAIL

    def test_support_requires_both_challenge_b(self):
        record = drive_round(HonestDevice(), params(p_ct_b=0.0), 7)
        with pytest.raises(ValueError):
            honest_support(record)

    def test_support_agrees_with_bell_parity_bullets(self):
        # Cross-validation of the two check paths on Bell rounds.
        forced = params(p_theta_hadamard=1.0, p_ct_b=1.0)
        for seed in range(150):
            record = drive_round(HonestDevice(), forced, seed)
            support = honest_support(record)
            x, y = record.alice.question, record.bob.question
            if x is not y:
                assert support == {(0, 0), (0, 1), (1, 0), (1, 1)}
                continue
            side = record.bob if x is COMP else record.alice
            x0, x1 = invert(side.trapdoor, side.c)
            parity = bell_label_bit(side.d, x0, x1)
            assert support == {(a, b) for a in (0, 1) for b in (0, 1) if a ^ b == parity}


class TestWinCondition:
    def test_bell_mismatched_questions_always_pass(self):
        forced = params(p_theta_hadamard=1.0, p_ct_b=1.0)
        found = 0
        for seed in range(100):
            record = drive_round(ClassicalRandomDevice(), forced, seed)
            if record.alice.question is not record.bob.question and not (
                record.alice.violation or record.bob.violation
            ):
                assert win_condition(record) is WinFlag.PASS
                found += 1
        assert found > 10

    def test_bell_wrong_parity_fails(self):
        forced = params(p_theta_hadamard=1.0, p_ct_b=1.0)
        for seed in range(60):
            record = drive_round(HonestDevice(), forced, seed)
            if record.alice.question is record.bob.question:
                assert win_condition(record) is WinFlag.PASS
                record.alice.answer ^= 1
                assert win_condition(record) is WinFlag.FAIL

    def test_both_challenge_a_checks_both_sides(self):
        forced = params(p_ct_b=0.0)
        record = drive_round(HonestDevice(), forced, 9)
        assert win_condition(record) is WinFlag.PASS
        record.bob.z ^= 0b10
        assert win_condition(record) is WinFlag.FAIL


class TestRunSession:
    def test_honest_session_statistics(self):
        session = run_session(HonestDevice(), params(rounds=8192, epsilon=0.01), seed=1)
        assert not session.aborted
        assert session.fail_fraction == 0.0
        assert session.failed_count == 0
        assert np.array_equal(session.raw_key_a, session.raw_key_b)
        expected = 8192 / 128
        assert abs(len(session.raw_key_a) - expected) <= 5 * np.sqrt(
            8192 * (1 / 128) * (127 / 128)
        )

    def test_raw_keys_agree_across_seeds(self):
        for seed in range(5):
            session = run_session(HonestDevice(), params(rounds=1024, epsilon=0.01), seed=seed)
            assert np.array_equal(session.raw_key_a, session.raw_key_b)

    def test_determinism(self):
        first = run_session(HonestDevice(), params(rounds=512), seed=123)
        second = run_session(HonestDevice(), params(rounds=512), seed=123)
        assert first.fail_fraction == second.fail_fraction
        assert np.array_equal(first.raw_key_a, second.raw_key_a)
        for r1, r2 in zip(first.records, second.records):
            assert r1.round_type == r2.round_type
            assert r1.test_tag == r2.test_tag
            assert r1.win == r2.win
            assert r1.alice.c == r2.alice.c

    def test_generate_fraction_among_sifted(self):
        session = run_session(HonestDevice(), params(rounds=8192), seed=2)
        assert_frequency(
            session.generate_count, session.sifted_count, 1 / 16, "generate fraction"
        )

    def test_matched_basis_fraction_within_generate(self):
        session = run_session(HonestDevice(), params(rounds=16_384), seed=3)
        assert_frequency(
            session.matched_count, session.generate_count, 0.25, "matched questions"
        )

    def test_generate_rounds_not_scored(self):
        session = run_session(HonestDevice(), params(rounds=2000), seed=4)
        for record in session.records:
            if record.test_tag is TestTag.GENERATE:
                assert record.win is WinFlag.NA

    def test_classical_random_aborts(self):
        session = run_session(ClassicalRandomDevice(), params(rounds=512, epsilon=0.05), seed=5)
        assert session.aborted
        assert len(session.raw_key_a) == 0

    def test_abort_monotone_in_epsilon(self):
        # Same seed, lower threshold: abort can only appear, never vanish.
        fractions = []
        previous_aborted = None
        for epsilon in (0.5, 0.1, 0.05, 0.02, 0.005, 0.0):
            session = run_session(
                NoisyHonestDevice(NoiseSpec(0.1, 0.05)),
                params(rounds=1024, epsilon=epsilon),
                seed=6,
            )
            fractions.append(session.fail_fraction)
            if previous_aborted is not None and previous_aborted:
                assert session.aborted
            previous_aborted = session.aborted
        assert len(set(fractions)) == 1  # epsilon never affects the transcript

    def test_abort_strictly_exceeds(self):
        # fail fraction exactly equal to epsilon must not abort
        device = ClassicalDeterministicDevice({"z_a": 0, "z_b": 0})
        session = run_session(device, params(rounds=64, epsilon=1.0, p_ct_b=0.0), seed=7)
        assert session.fail_fraction <= 1.0
        assert not session.aborted

    def test_noisy_bell_fail_frequency_formula(self):
        # All-Bell sessions via the probability knobs; fails concentrate on
        # matched questions with rate pa(1-pb) + pb(1-pa).
        p_a, p_b = 0.1, 0.0
        session = run_session(
            NoisyHonestDevice(NoiseSpec(p_a, p_b)),
            params(
                rounds=6000,
                epsilon=1.0,
                p_theta_hadamard=1.0,
                p_ct_b=1.0,
                p_generate_given_bell=0.0,
            ),
            seed=8,
        )
        matched = [
            r
            for r in session.records
            if r.alice.question is r.bob.question
        ]
        failed = sum(r.win is WinFlag.FAIL for r in matched)
        expected = p_a * (1 - p_b) + p_b * (1 - p_a)
        assert_frequency(failed, len(matched), expected, "bell parity flips")
        mismatched = [
            r for r in session.records if r.alice.question is not r.bob.question
        ]
        assert all(r.win is WinFlag.PASS for r in mismatched)

    def test_toy_lattice_honest_session(self):
        toy = ProtocolParams(
            rounds=384,
            epsilon=0.01,
            etcf=EtcfParams(family="toy-lattice", n=2, m=4, q=5),
        )
        session = run_session(HonestDevice(), toy, seed=9)
        assert not session.aborted
        assert session.failed_count == 0
        assert np.array_equal(session.raw_key_a, session.raw_key_b)
