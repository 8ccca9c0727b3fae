"""Entropy and key-rate arithmetic.

The asymptotic one-way rate is weight * (H(A|E) - H(A|B)), where the
weight collects the sifting factor, the generation-round probability, and
the matched-basis probability.  With the default fair-coin parameters the
ideal weight is 1/2 * 1/16 * 1/4 = 1/128; overriding the knobs recomputes
the product rather than trusting the constant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .protocol import SessionResult


def binary_entropy(p: float) -> float:
    """Shannon entropy of a bit with bias p, in bits; 0 log 0 := 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


@dataclass(frozen=True)
class EntropyPair:
    """Conditional entropies of Alice's answer bit given Eve / given Bob."""

    h_a_given_e: float
    h_a_given_b: float

    def __post_init__(self) -> None:
        for value in (self.h_a_given_e, self.h_a_given_b):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"single-bit conditional entropy {value} outside [0, 1]")


def devetak_winter(entropies: EntropyPair, weight: float) -> float:
    """Weighted one-way rate weight * (H(A|E) - H(A|B))."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight {weight} outside [0, 1]")
    return weight * (entropies.h_a_given_e - entropies.h_a_given_b)


@dataclass(frozen=True)
class KeyRateParams:
    """Inputs to the rate bounds.

    ``constant_big_c`` and ``exponent_c`` are the unspecified constants of
    the asymptotic bound; the defaults here are illustrative placeholders,
    not derived values, and reports always carry the values used.
    """

    epsilon: float = 0.01
    exponent_c: float = 0.5
    constant_big_c: float = 1.0
    negl_term: float = 0.0
    sift_factor: float = 0.5
    p_generate: float = 1.0 / 16.0
    p_basis_match: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 < self.exponent_c <= 1.0:
            raise ValueError(f"exponent must be in (0, 1], got {self.exponent_c}")
        if self.constant_big_c < 0 or self.negl_term < 0:
            raise ValueError("constant and negl term must be nonnegative")
        for name in ("sift_factor", "p_generate", "p_basis_match"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")


def ideal_rate(params: KeyRateParams | None = None) -> Fraction:
    """Exact rational rate of the ideal state: sift * p_generate * p_basis_match.

    Defaults give exactly 1/128.  H(A|E) = 1 and H(A|B) = 0 for the ideal
    state, so the entropy difference contributes a factor of one.
    """
    if params is None:
        return Fraction(1, 2) * Fraction(1, 16) * Fraction(1, 4)
    return (
        Fraction(params.sift_factor)
        * Fraction(params.p_generate)
        * Fraction(params.p_basis_match)
    )


def asymptotic_rate_bound(params: KeyRateParams) -> float:
    """Asymptotic lower bound: ideal rate - C eps^c |log2 eps| - negl, floored at 0."""
    eps = params.epsilon
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {eps}")
    penalty = params.constant_big_c * eps**params.exponent_c * abs(math.log2(eps))
    return max(0.0, float(ideal_rate(params)) - penalty - params.negl_term)


def continuity_envelope(delta: float, alphabet_size: int) -> float:
    """Conditional-entropy continuity bound for trace distance delta.

    Evaluates 2 delta log2(d) + (1 + delta) h2(delta / (1 + delta)), the
    standard tight envelope for a d-dimensional classical register.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"trace distance {delta} outside [0, 1]")
    if alphabet_size < 2:
        raise ValueError(f"alphabet size must be >= 2, got {alphabet_size}")
    if delta == 0.0:
        return 0.0
    return 2.0 * delta * math.log2(alphabet_size) + (1.0 + delta) * binary_entropy(
        delta / (1.0 + delta)
    )


def _sig12(value: float) -> float:
    # Summary convention: decimal with 12 significant digits.
    return float(f"{value:.12g}")


@dataclass(frozen=True)
class KeyRateReport:
    """Observed session statistics next to the analytic bounds.

    Gross rates divide by all protocol rounds; the net final rate divides
    by kept raw bits only (mismatched-basis generation positions are
    dropped, and both conventions are reported).
    """

    rounds: int
    aborted: bool
    fail_fraction: float
    sifted_count: int
    tested_count: int
    generate_count: int
    matched_count: int
    raw_key_length: int
    final_key_length: int
    leak_bits: int
    qber_estimate: float
    gross_raw_rate: float
    gross_final_rate: float
    net_final_rate: float
    ideal_rate_fraction: str
    ideal_rate_value: float
    devetak_winter_ideal: float
    rate_bound_value: float

    def to_dict(self) -> dict:
        data = asdict(self)
        return {
            key: _sig12(value) if isinstance(value, float) else value
            for key, value in data.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeyRateReport":
        return cls(**data)


def session_rate_report(
    result: "SessionResult",
    params: KeyRateParams,
    final_key_length: int = 0,
    leak_bits: int = 0,
    qber_estimate: float = 0.0,
) -> KeyRateReport:
    """Bundle a finished session with the configured rate bounds."""
    rounds = result.rounds
    raw_len = int(len(result.raw_key_a))
    rate = ideal_rate(params)
    return KeyRateReport(
        rounds=rounds,
        aborted=result.aborted,
        fail_fraction=_sig12(result.fail_fraction),
        sifted_count=result.sifted_count,
        tested_count=result.tested_count,
        generate_count=result.generate_count,
        matched_count=result.matched_count,
        raw_key_length=raw_len,
        final_key_length=0 if result.aborted else int(final_key_length),
        leak_bits=int(leak_bits),
        qber_estimate=_sig12(qber_estimate),
        gross_raw_rate=_sig12(raw_len / rounds if rounds else 0.0),
        gross_final_rate=_sig12(final_key_length / rounds if rounds else 0.0),
        net_final_rate=_sig12(final_key_length / raw_len if raw_len else 0.0),
        ideal_rate_fraction=f"{rate.numerator}/{rate.denominator}",
        ideal_rate_value=_sig12(float(rate)),
        devetak_winter_ideal=_sig12(
            devetak_winter(EntropyPair(1.0, 0.0), float(rate))
        ),
        rate_bound_value=_sig12(asymptotic_rate_bound(params)),
    )
