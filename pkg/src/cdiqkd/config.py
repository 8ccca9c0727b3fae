"""Experiment configuration: validation, file loading, flag overlay."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, fields

from .etcf import EtcfParams
from .keyrate import KeyRateParams
from .protocol import ProtocolParams


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


_DEVICE_PREFIXES = ("noisy:", "classical-table:")
_DEVICE_NAMES = ("honest", "classical-random")


@dataclass
class ExperimentConfig:
    rounds: int = 1024
    epsilon: float = 0.05
    etcf: str = "ideal"
    domain_bits: int = 4
    lattice_n: int = 3
    lattice_m: int = 6
    lattice_q: int = 17
    device: str = "honest"
    seed: int = 0
    transcript: str | None = None
    summary: str | None = None
    trapdoors: str | None = None
    recon: str = "hamming74"
    eps_sec: float = 2.0**-32
    bound_constant: float = 1.0
    bound_exponent: float = 0.5
    negl_term: float = 0.0

    def validate(self) -> None:
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.etcf not in ("ideal", "toy-lattice"):
            raise ConfigError(f"etcf must be 'ideal' or 'toy-lattice', got {self.etcf!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.recon not in ("hamming74", "none"):
            raise ConfigError(f"recon must be 'hamming74' or 'none', got {self.recon!r}")
        if not 0.0 < self.eps_sec < 1.0:
            raise ConfigError(f"eps_sec must be in (0, 1), got {self.eps_sec}")
        if self.device not in _DEVICE_NAMES and not self.device.startswith(_DEVICE_PREFIXES):
            raise ConfigError(f"unknown device {self.device!r}")
        if self.device.startswith("noisy:"):
            parts = self.device.split(":")
            if len(parts) != 3:
                raise ConfigError(f"noisy device must be noisy:PA:PB, got {self.device!r}")
            try:
                probs = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise ConfigError(f"bad noisy device probabilities in {self.device!r}") from exc
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise ConfigError(f"noisy device probabilities outside [0, 1]: {self.device!r}")
        try:
            self.etcf_params().validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def etcf_params(self) -> EtcfParams:
        if self.etcf == "ideal":
            return EtcfParams(family="ideal", domain_bits=self.domain_bits)
        return EtcfParams(
            family="toy-lattice", n=self.lattice_n, m=self.lattice_m, q=self.lattice_q
        )

    def protocol_params(self) -> ProtocolParams:
        return ProtocolParams(rounds=self.rounds, epsilon=self.epsilon, etcf=self.etcf_params())

    def keyrate_params(self) -> KeyRateParams:
        # A zero threshold leaves the bound's epsilon at the smallest positive
        # value the formula accepts in reports.
        epsilon = self.epsilon if self.epsilon > 0 else 1e-300
        return KeyRateParams(
            epsilon=epsilon,
            exponent_c=self.bound_exponent,
            constant_big_c=self.bound_constant,
            negl_term=self.negl_term,
        )
