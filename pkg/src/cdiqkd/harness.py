"""Experiment runner, transcript/summary emission, and the replay audit.

The authenticated public channel is modeled as an append-only line log:
one JSON record per round, bracketed by a header and a footer.  Test
rounds carry both parties' published data (commitments, responses,
questions, answers, herald bits); the verifiers' key and trapdoor
material for those rounds goes to a separate trapdoor-store file so an
auditor can recompute every check.  Generation rounds publish only state
bases, challenge types, tags, and question bases - their commitments,
responses, and key material are discarded and never reach any output
file.

Determinism: a fixed config (including seed) produces byte-identical
output files.  All numeric fields in summaries are emitted in decimal
with 12 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bits import from_hex, to_hex
from .config import ExperimentConfig
from .devices import ChallengeType, make_device
from .etcf import (
    key_from_dict,
    key_to_dict,
    trapdoor_from_dict,
    trapdoor_to_dict,
)
from .keyrate import KeyRateReport, session_rate_report
from .postprocess import PaSpec, final_length, privacy_amplify, reconcile
from .protocol import (
    RoundRecord,
    RoundType,
    SessionResult,
    SideRecord,
    TestTag,
    WinFlag,
    classify_round,
    run_session,
    win_condition,
)
from .quantum import MeasurementBasis

EXIT_KEY_PRODUCED = 0
EXIT_USAGE = 1
EXIT_ABORTED = 2

_BASIS_CODE = {MeasurementBasis.COMPUTATIONAL: "C", MeasurementBasis.HADAMARD: "H"}
_BASIS_FROM = {"C": MeasurementBasis.COMPUTATIONAL, "H": MeasurementBasis.HADAMARD}


class ReplayError(ValueError):
    """Transcript cannot be audited (truncated or structurally unusable)."""


def _sig12(value: float) -> float:
    return float(f"{value:.12g}")


def _round_floats(node):
    """Apply the 12-significant-digit summary convention recursively."""
    if isinstance(node, float):
        return _sig12(node)
    if isinstance(node, dict):
        return {key: _round_floats(value) for key, value in node.items()}
    if isinstance(node, list):
        return [_round_floats(value) for value in node]
    return node


def _bits_hex(bits: np.ndarray) -> str:
    if len(bits) == 0:
        return ""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


# ---------------------------------------------------------------------------
# Transcript emission
# ---------------------------------------------------------------------------


def _side_fields(side: SideRecord, suffix: str, question_name: str) -> dict:
    fields: dict = {f"c_{suffix}": to_hex(side.c, side.key.codomain_bits)}
    if side.ct is ChallengeType.A:
        if side.z is not None:
            fields[f"z_{suffix}"] = to_hex(side.z, 1 + side.key.domain_bits)
    else:
        if side.d is not None:
            fields[f"d_{suffix}"] = to_hex(side.d, side.key.domain_bits)
        fields[question_name] = _BASIS_CODE[side.question]
        if side.answer is not None:
            fields[suffix] = side.answer
            fields[f"h_{suffix}"] = side.h
    if side.violation:
        fields[f"viol_{suffix}"] = True
    return fields


def _round_line(record: RoundRecord) -> dict:
    line = {
        "record": "round",
        "i": record.index,
        "theta_a": _BASIS_CODE[record.alice.theta],
        "theta_b": _BASIS_CODE[record.bob.theta],
        "ct_a": record.alice.ct.value,
        "ct_b": record.bob.ct.value,
        "rt": record.round_type.value,
        "tag": record.test_tag.value,
        "win": record.win.value,
    }
    if record.round_type is RoundType.SIFTED:
        return line
    if record.test_tag is TestTag.TEST:
        line.update(_side_fields(record.alice, "a", "x"))
        line.update(_side_fields(record.bob, "b", "y"))
    else:
        # Generation round: question bases are published for key matching,
        # everything else stays private and is discarded.
        line["x"] = _BASIS_CODE[record.alice.question]
        line["y"] = _BASIS_CODE[record.bob.question]
    return line


def _keys_line(record: RoundRecord) -> dict:
    return {
        "record": "keys",
        "i": record.index,
        "key_a": key_to_dict(record.alice.key),
        "trapdoor_a": trapdoor_to_dict(record.alice.trapdoor),
        "key_b": key_to_dict(record.bob.key),
        "trapdoor_b": trapdoor_to_dict(record.bob.trapdoor),
    }


def write_transcript(path: str, config: ExperimentConfig, session: SessionResult) -> None:
    header = {
        "record": "header",
        "version": 1,
        "rounds": session.rounds,
        "epsilon": _sig12(config.epsilon),
        "etcf": _etcf_header(config),
        "device": config.device,
    }
    footer = {
        "record": "footer",
        "tested": session.tested_count,
        "failed": session.failed_count,
        "fail_fraction": _sig12(session.fail_fraction),
        "aborted": session.aborted,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for record in session.records:
            fh.write(json.dumps(_round_line(record)) + "\n")
        fh.write(json.dumps(footer) + "\n")


def write_trapdoor_store(path: str, session: SessionResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"record": "keys-header", "version": 1}) + "\n")
        for record in session.records:
            if record.round_type is RoundType.SIFTED or record.test_tag is not TestTag.TEST:
                continue
            fh.write(json.dumps(_keys_line(record)) + "\n")


def _etcf_header(config: ExperimentConfig) -> dict:
    params = config.etcf_params()
    if params.family == "ideal":
        return {"family": "ideal", "domain_bits": params.domain_bits}
    return {"family": "toy-lattice", "n": params.n, "m": params.m, "q": params.q}


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------


@dataclass
class ExperimentOutcome:
    exit_code: int
    session: SessionResult
    report: KeyRateReport
    summary: dict
    final_key_a: np.ndarray
    final_key_b: np.ndarray


def bell_test_qber(session: SessionResult) -> float:
    """Failure frequency among matched-computational Bell test rounds.

    This is the parameter-estimation proxy for the raw-key error rate: a
    Bell test round with both questions computational fails exactly when
    Alice's bit differs from Bob's flip-corrected bit.
    """
    total = failed = 0
    for record in session.records:
        if record.round_type is not RoundType.BELL or record.test_tag is not TestTag.TEST:
            continue
        if (
            record.alice.question is MeasurementBasis.COMPUTATIONAL
            and record.bob.question is MeasurementBasis.COMPUTATIONAL
        ):
            total += 1
            if record.win is WinFlag.FAIL:
                failed += 1
    return failed / total if total else 0.0


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Run a full seeded experiment and write any requested output files."""
    config.validate()
    device = make_device(config.device)
    master = np.random.SeedSequence(config.seed)
    session_seq, post_seq = master.spawn(2)
    session = run_session(device, config.protocol_params(), session_seq)
    post_rng = np.random.Generator(np.random.PCG64(post_seq))

    qber = bell_test_qber(session)
    raw_a, raw_b = session.raw_key_a, session.raw_key_b
    empty = np.zeros(0, dtype=np.uint8)
    recon_dict = None
    pa_dict = None
    final_a = final_b = empty
    verified = False
    leak = 0
    n_final = 0
    if not session.aborted:
        recon = reconcile(raw_a, raw_b, config.recon, post_rng)
        verified = recon.verified
        leak = recon.leak_bits
        qber_for_length = min(qber, 0.4999999)
        n_final = final_length(len(raw_a), qber_for_length, leak, config.eps_sec)
        pa_seed = post_rng.integers(0, 2, size=max(len(raw_a) + n_final - 1, 0), dtype=np.uint8)
        spec = PaSpec(seed=pa_seed, input_len=len(raw_a), output_len=n_final)
        if verified:
            final_a = privacy_amplify(raw_a, spec)
            final_b = privacy_amplify(recon.corrected_key_b, spec)
        recon_dict = {
            "scheme": config.recon,
            "verified": verified,
            "leak_bits": leak,
            "syndromes_hex": _bits_hex(recon.syndromes.ravel()),
            "hash_seed_hex": _bits_hex(recon.hash_seed),
            "hash_a_hex": _bits_hex(recon.hash_a),
            "hash_b_hex": _bits_hex(recon.hash_b),
        }
        pa_dict = {
            "seed_hex": _bits_hex(pa_seed),
            "input_len": int(len(raw_a)),
            "output_len": int(n_final) if verified else 0,
        }
    if not verified:
        n_final = 0
        final_a = final_b = empty

    report = session_rate_report(
        session,
        config.keyrate_params(),
        final_key_length=n_final,
        leak_bits=leak,
        qber_estimate=qber,
    )
    exit_code = EXIT_KEY_PRODUCED if (not session.aborted and verified) else EXIT_ABORTED
    summary = _round_floats({
        "config": config.to_dict(),
        "seed": config.seed,
        "exit_code": exit_code,
        "aborted": session.aborted,
        "verified": verified,
        "fail_fraction": _sig12(session.fail_fraction),
        "qber_estimate": _sig12(qber),
        "counts": {
            "rounds": session.rounds,
            "sifted": session.sifted_count,
            "tested": session.tested_count,
            "failed": session.failed_count,
            "bell": session.bell_count,
            "product": session.product_count,
            "generate": session.generate_count,
            "matched": session.matched_count,
            "dropped": session.dropped_count,
        },
        "raw_key_length": int(len(raw_a)),
        "final_key_length": int(n_final),
        "reconciliation": recon_dict,
        "privacy_amplification": pa_dict,
        "key_rate_report": report.to_dict(),
    })

    if config.transcript:
        write_transcript(config.transcript, config, session)
        store = config.trapdoors or config.transcript + ".keys"
        write_trapdoor_store(store, session)
    if config.summary:
        with open(config.summary, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, indent=2) + "\n")

    return ExperimentOutcome(
        exit_code=exit_code,
        session=session,
        report=report,
        summary=summary,
        final_key_a=final_a,
        final_key_b=final_b,
    )


# ---------------------------------------------------------------------------
# Replay audit
# ---------------------------------------------------------------------------


@dataclass
class ReplayReport:
    verdict: str  # "match" or "mismatch"
    rounds_checked: int
    mismatches: list[str]

    @property
    def match(self) -> bool:
        return self.verdict == "match"


def _side_from_line(line: dict, suffix: str, question_name: str, key, trapdoor) -> SideRecord:
    ct = ChallengeType(line[f"ct_{suffix}"])
    side = SideRecord(
        theta=_BASIS_FROM[line[f"theta_{suffix}"]],
        key=key,
        trapdoor=trapdoor,
        c=from_hex(line.get(f"c_{suffix}", "0")),
        ct=ct,
        violation=bool(line.get(f"viol_{suffix}", False)),
    )
    if ct is ChallengeType.A:
        if f"z_{suffix}" in line:
            side.z = from_hex(line[f"z_{suffix}"])
    else:
        if f"d_{suffix}" in line:
            side.d = from_hex(line[f"d_{suffix}"])
        if question_name in line:
            side.question = _BASIS_FROM[line[question_name]]
        if suffix in line:
            side.answer = int(line[suffix])
            side.h = int(line[f"h_{suffix}"])
    return side


def _load_lines(path: str) -> list[tuple[int, dict | None]]:
    lines: list[tuple[int, dict | None]] = []
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                lines.append((number, json.loads(raw)))
            except json.JSONDecodeError:
                lines.append((number, None))
    return lines


def replay_verify(transcript_path: str, trapdoor_store_path: str) -> ReplayReport:
    """Recompute every round verdict and the abort decision from the files alone.

    Corrupt lines yield a mismatch naming the line; a missing footer (a
    truncated transcript) raises ReplayError naming the last good line.
    """
    lines = _load_lines(transcript_path)
    if not lines or lines[0][1] is None or lines[0][1].get("record") != "header":
        raise ReplayError("transcript has no valid header line")
    header = lines[0][1]
    epsilon = float(header["epsilon"])

    key_material: dict[int, dict] = {}
    for number, entry in _load_lines(trapdoor_store_path):
        if entry is None:
            raise ReplayError(f"trapdoor store corrupt at line {number}")
        if entry.get("record") == "keys":
            key_material[int(entry["i"])] = entry

    mismatches: list[str] = []
    tested = failed = 0
    footer = None
    last_good = 1
    for number, entry in lines[1:]:
        if entry is None:
            mismatches.append(f"line {number}: corrupt record")
            continue
        kind = entry.get("record")
        if kind == "footer":
            footer = (number, entry)
            last_good = number
            continue
        if kind != "round":
            mismatches.append(f"line {number}: unexpected record type {kind!r}")
            continue
        last_good = number
        index = int(entry["i"])
        try:
            recomputed_rt = classify_round(
                ChallengeType(entry["ct_a"]),
                ChallengeType(entry["ct_b"]),
                _BASIS_FROM[entry["theta_a"]],
                _BASIS_FROM[entry["theta_b"]],
            )
        except (KeyError, ValueError):
            mismatches.append(f"line {number}: corrupt record")
            continue
        if recomputed_rt.value != entry.get("rt"):
            mismatches.append(f"line {number}: round {index} type should be {recomputed_rt.value}")
            continue
        if recomputed_rt is RoundType.SIFTED or entry.get("tag") != "test":
            continue
        material = key_material.get(index)
        if material is None:
            mismatches.append(f"line {number}: round {index} has no key material in the store")
            continue
        key_a = key_from_dict(material["key_a"])
        key_b = key_from_dict(material["key_b"])
        record = RoundRecord(
            index=index,
            alice=_side_from_line(
                entry, "a", "x", key_a, trapdoor_from_dict(material["trapdoor_a"], key_a)
            ),
            bob=_side_from_line(
                entry, "b", "y", key_b, trapdoor_from_dict(material["trapdoor_b"], key_b)
            ),
            round_type=recomputed_rt,
            test_tag=TestTag.TEST,
        )
        verdict = win_condition(record)
        tested += 1
        if verdict is WinFlag.FAIL:
            failed += 1
        if verdict.value != entry.get("win"):
            mismatches.append(
                f"line {number}: round {index} verdict should be {verdict.value}"
            )

    if footer is None:
        raise ReplayError(f"transcript truncated: no footer after line {last_good}")
    _, footer_entry = footer
    fail_fraction = failed / tested if tested else 0.0
    recomputed_abort = fail_fraction > epsilon
    if tested != int(footer_entry.get("tested", -1)):
        mismatches.append(f"footer: tested count should be {tested}")
    if failed != int(footer_entry.get("failed", -1)):
        mismatches.append(f"footer: failed count should be {failed}")
    if abs(fail_fraction - float(footer_entry.get("fail_fraction", -1.0))) > 1e-9:
        mismatches.append(f"footer: fail fraction should be {_sig12(fail_fraction)}")
    if recomputed_abort != bool(footer_entry.get("aborted")):
        mismatches.append(f"footer: abort decision should be {recomputed_abort}")

    return ReplayReport(
        verdict="match" if not mismatches else "mismatch",
        rounds_checked=tested,
        mismatches=mismatches,
    )
