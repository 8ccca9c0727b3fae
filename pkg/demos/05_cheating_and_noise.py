"""Devices that lose: a guessing cheater and an honest-but-noisy device.

A device with no quantum state cannot answer both challenge types at
once; uniform guessing fails the preimage check almost always and the
Bell parity check half the time, so parameter estimation aborts.  A noisy
honest device fails at a predictable rate, and the abort decision is a
strict threshold comparison on the observed failure fraction.
"""

from cdiqkd.devices import ClassicalRandomDevice, NoiseSpec, NoisyHonestDevice
from cdiqkd.protocol import ProtocolParams, run_session

print("=== Uniform guessing device ===")
params = ProtocolParams(rounds=2048, epsilon=0.05)
session = run_session(ClassicalRandomDevice(), params, seed=5)
print(f"observed failure fraction: {session.fail_fraction:.3f} (threshold 0.05)")
print(f"aborted: {session.aborted}; raw key bits released: {len(session.raw_key_a)}")
print()

print("=== Noisy honest device, flip probability 0.1 on Alice's answers ===")
# A flipped answer only shows when the question pins it down: Bell tests
# with matched questions, and the challenge-b product rounds where the
# question hits the deterministic basis - each a coin flip away, so every
# exposed category fails at 0.1/2 = 0.05.  Those categories make up 7/15
# of the test rounds, giving 0.05 * 7/15 = 0.0233.
noisy = lambda: NoisyHonestDevice(NoiseSpec(0.1, 0.0))
session = run_session(noisy(), ProtocolParams(rounds=16384, epsilon=1.0), seed=6)
print(f"observed failure fraction: {session.fail_fraction:.4f} (prediction 0.0233)")

for epsilon in (0.10, 0.05, 0.02):
    outcome = run_session(noisy(), ProtocolParams(rounds=16384, epsilon=epsilon), seed=6)
    verdict = "abort" if outcome.aborted else "continue"
    print(f"  threshold {epsilon:.2f}: {verdict}")
print()
print("Same seed, same transcript: only the threshold comparison changes.")
