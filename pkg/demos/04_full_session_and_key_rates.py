"""Full sessions with an honest device: sifting, estimation, raw keys, rates.

With all probability knobs at fair coins, a protocol round contributes a
raw key bit with probability 1/2 (survives sifting) * 1/16 (generation
tag) * 1/4 (both questions computational) = 1/128, so the gross raw rate
converges there, and the asymptotic ideal rate is exactly 1/128.
"""

import numpy as np

from cdiqkd.devices import HonestDevice
from cdiqkd.etcf import EtcfParams
from cdiqkd.keyrate import KeyRateParams, ideal_rate, asymptotic_rate_bound, session_rate_report
from cdiqkd.protocol import ProtocolParams, run_session

print(f"ideal asymptotic rate: {ideal_rate()} = {float(ideal_rate()):.8f}")
print()

print("rounds    sifted  generate  matched  raw bits  gross rate")
for rounds in (2_000, 8_000, 32_000):
    params = ProtocolParams(
        rounds=rounds, epsilon=0.01, etcf=EtcfParams(family="ideal", domain_bits=4)
    )
    session = run_session(HonestDevice(), params, seed=99)
    rate = len(session.raw_key_a) / rounds
    print(
        f"{rounds:6d}  {session.sifted_count:8d}  {session.generate_count:8d}"
        f"  {session.matched_count:7d}  {len(session.raw_key_a):8d}  {rate:.6f}"
    )
    assert np.array_equal(session.raw_key_a, session.raw_key_b)

print()
print("raw keys agree bit for bit on every seed (noiseless honest device).")
print()

print("=== Rate bound with a failure allowance ===")
# The asymptotic bound subtracts a penalty C eps^c |log2 eps| plus a
# negligible term; C and c are free inputs here, never derived values.
for eps in (1e-12, 1e-6, 1e-3, 1e-2):
    params = KeyRateParams(epsilon=eps, constant_big_c=0.01, exponent_c=0.5)
    print(f"  eps = {eps:<8.0e} bound = {asymptotic_rate_bound(params):.6f}")

print()
print("=== Session report ===")
params = ProtocolParams(rounds=32_000, epsilon=0.01)
session = run_session(HonestDevice(), params, seed=99)
report = session_rate_report(
    session, KeyRateParams(epsilon=0.01), final_key_length=0, leak_bits=64
)
for key, value in report.to_dict().items():
    print(f"  {key}: {value}")
