"""Extended trapdoor claw-free (ETCF) function families.

Two instantiations behind one interface:

- ``ideal``: explicit random tables.  A claw-free pair is a uniformly
  random perfect matching of the two domain copies, mapped injectively to
  random distinct codomain points (exactly 2-to-1).  An injective pair is
  a uniformly random injective map whose two branch images land in
  disjoint codomain halves.  Properties hold exactly, so an honest device
  wins with probability exactly 1.

- ``toy-lattice``: noise-free linear maps mod a prime q.  Claw-free:
  f_b(x) = A x + b (A s); the claw partner of x under branch 1 is x - s.
  Injective: f_b(x) = A x + b u with u outside the column space of A.
  Functionally an ETCF, deliberately offering no hardness (adversaries in
  this simulator are scripted, not computational).

Domain and codomain elements cross module boundaries as fixed-width bit
strings packed into ints (lattice vectors via little-endian per-coordinate
encoding), because the downstream phase arithmetic is a bit-string inner
product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bits import fits, from_hex, to_hex


class KeyKind(Enum):
    """Claw-free pairs back Hadamard state bases; injective pairs back computational."""

    CLAW_FREE = "claw_free"
    INJECTIVE = "injective"


class NoPreimageError(ValueError):
    """Raised by trapdoor inversion when the point is outside the image."""


@dataclass(frozen=True)
class EtcfParams:
    """Parameters for either family.

    ``family`` is "ideal" (uses ``domain_bits``) or "toy-lattice" (uses the
    lattice dimensions ``n``, ``m`` and prime modulus ``q``).
    """

    family: str = "ideal"
    domain_bits: int = 4
    n: int = 3
    m: int = 6
    q: int = 17

    def validate(self) -> None:
        if self.family == "ideal":
            if not 2 <= self.domain_bits <= 16:
                raise ValueError(f"domain_bits must be in 2..16, got {self.domain_bits}")
        elif self.family == "toy-lattice":
            if self.n < 1:
                raise ValueError("lattice dimension n must be positive")
            if self.m < 2 * self.n:
                raise ValueError(f"m must be at least 2*n, got m={self.m}, n={self.n}")
            if self.q < 2 or not _is_prime(self.q):
                raise ValueError(f"q must be prime, got {self.q}")
        else:
            raise ValueError(f"unknown ETCF family {self.family!r}")

    @property
    def security_param(self) -> int:
        # Labeling convention for reports: lambda = domain_bits (ideal) or n (toy lattice).
        return self.domain_bits if self.family == "ideal" else self.n


def _is_prime(v: int) -> bool:
    if v < 2:
        return False
    for p in range(2, int(math.isqrt(v)) + 1):
        if v % p == 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Ideal table-based family
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IdealKeyPair:
    """Public evaluation tables for the ideal family.

    ``tables[b][x]`` is f_b(x).  Codomain width is domain_bits + 2 for both
    kinds: wide enough that the two branch images of an injective pair fit
    in disjoint halves, that every pair leaves non-image points (so invalid
    commitments are detectable), and that key material does not reveal the
    kind by its width.
    """

    kind: KeyKind
    domain_bits: int
    tables: np.ndarray  # shape (2, 2**domain_bits)

    family = "ideal"

    @property
    def codomain_bits(self) -> int:
        return self.domain_bits + 2

    def in_domain(self, x: int) -> bool:
        return fits(x, self.domain_bits)

    def evaluate(self, b: int, x: int) -> int:
        if b not in (0, 1):
            raise ValueError(f"branch bit must be 0/1, got {b}")
        if not self.in_domain(x):
            raise ValueError(f"{x} outside the {self.domain_bits}-bit domain")
        return int(self.tables[b, x])


@dataclass(frozen=True, eq=False)
class IdealTrapdoor:
    """Private inversion data.  For this family the trapdoor is the tables
    themselves; the codomain-indexed inverse (with -1 marking non-image
    points) is derived lazily on first use.
    """

    kind: KeyKind
    domain_bits: int
    tables: np.ndarray
    _inverse_cache: np.ndarray | None = field(default=None, init=False, repr=False)

    family = "ideal"

    @property
    def inverse(self) -> np.ndarray:
        if self._inverse_cache is None:
            size = 1 << self.domain_bits
            inverse = np.full((2, 4 * size), -1, dtype=np.int64)
            for b in (0, 1):
                inverse[b, self.tables[b]] = np.arange(size)
            object.__setattr__(self, "_inverse_cache", inverse)
        return self._inverse_cache


def _keygen_ideal(kind: KeyKind, params: EtcfParams, rng: np.random.Generator):
    w = params.domain_bits
    size = 1 << w
    tables = np.empty((2, size), dtype=np.int64)
    if kind is KeyKind.CLAW_FREE:
        matching = rng.permutation(size)  # x1 = matching[x0]
        image = rng.permutation(4 * size)[:size]
        tables[0] = image
        tables[1, matching] = image
    else:
        low_branch = int(rng.integers(2))  # which branch lands in the low codomain half
        for b in (0, 1):
            half = 0 if b == low_branch else 2 * size
            tables[b] = rng.permutation(2 * size)[:size] + half
    key = IdealKeyPair(kind=kind, domain_bits=w, tables=tables)
    return key, IdealTrapdoor(kind=kind, domain_bits=w, tables=tables)


# ---------------------------------------------------------------------------
# Toy lattice family (noise-free, no hardness)
# ---------------------------------------------------------------------------


def _coord_bits(q: int) -> int:
    return (q - 1).bit_length()


def encode_vector(vec: np.ndarray, q: int) -> int:
    """Pack a mod-q vector into an int, little-endian bits per coordinate."""
    cb = _coord_bits(q)
    value = 0
    for i, coord in enumerate(vec):
        value |= int(coord) << (i * cb)
    return value


def decode_vector(value: int, length: int, q: int) -> np.ndarray | None:
    """Inverse of encode_vector; None if any coordinate decodes to >= q."""
    cb = _coord_bits(q)
    mask = (1 << cb) - 1
    out = np.empty(length, dtype=np.int64)
    for i in range(length):
        coord = (value >> (i * cb)) & mask
        if coord >= q:
            return None
        out[i] = coord
    if value >> (length * cb):
        return None
    return out


def _solve_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray | None:
    """Solve A x = b over Z_q (q prime) by Gaussian elimination; None if inconsistent.

    A has full column rank by construction, so a solution is unique when it exists.
    """
    m, n = a.shape
    aug = np.concatenate([a % q, (b % q).reshape(m, 1)], axis=1).astype(np.int64)
    row = 0
    pivots = []
    for col in range(n):
        pivot = next((r for r in range(row, m) if aug[r, col] % q), None)
        if pivot is None:
            continue
        aug[[row, pivot]] = aug[[pivot, row]]
        inv = pow(int(aug[row, col]), q - 2, q)
        aug[row] = (aug[row] * inv) % q
        for r in range(m):
            if r != row and aug[r, col]:
                aug[r] = (aug[r] - aug[r, col] * aug[row]) % q
        pivots.append(col)
        row += 1
        if row == m:
            break
    x = np.zeros(n, dtype=np.int64)
    for r, col in enumerate(pivots):
        x[col] = aug[r, n]
    if np.any((a @ x - b) % q):
        return None
    return x


def _rank_mod(a: np.ndarray, q: int) -> int:
    m, n = a.shape
    work = (a % q).astype(np.int64).copy()
    rank = 0
    for col in range(n):
        pivot = next((r for r in range(rank, m) if work[r, col] % q), None)
        if pivot is None:
            continue
        work[[rank, pivot]] = work[[pivot, rank]]
        inv = pow(int(work[rank, col]), q - 2, q)
        work[rank] = (work[rank] * inv) % q
        for r in range(m):
            if r != rank and work[r, col]:
                work[r] = (work[r] - work[r, col] * work[rank]) % q
        rank += 1
    return rank


@dataclass(frozen=True, eq=False)
class ToyLatticeKeyPair:
    """Public matrix A and shift vector (A s for claw-free, u for injective)."""

    kind: KeyKind
    n: int
    m: int
    q: int
    matrix: np.ndarray  # (m, n) mod q
    shift: np.ndarray  # (m,) mod q
    _secret_cache: np.ndarray | None = field(default=None, init=False, repr=False)

    family = "toy-lattice"

    @property
    def domain_bits(self) -> int:
        return self.n * _coord_bits(self.q)

    @property
    def codomain_bits(self) -> int:
        return self.m * _coord_bits(self.q)

    def in_domain(self, x: int) -> bool:
        return fits(x, self.domain_bits) and decode_vector(x, self.n, self.q) is not None

    def evaluate(self, b: int, x: int) -> int:
        if b not in (0, 1):
            raise ValueError(f"branch bit must be 0/1, got {b}")
        vec = decode_vector(x, self.n, self.q) if fits(x, self.domain_bits) else None
        if vec is None:
            raise ValueError(f"{x} does not encode a vector in the domain")
        y = (self.matrix @ vec + b * self.shift) % self.q
        return encode_vector(y, self.q)


@dataclass(frozen=True, eq=False)
class ToyLatticeTrapdoor:
    kind: KeyKind
    key: ToyLatticeKeyPair
    secret: np.ndarray | None  # s for claw-free; None for injective

    family = "toy-lattice"

    @property
    def domain_bits(self) -> int:
        return self.key.domain_bits


def _keygen_toy(kind: KeyKind, params: EtcfParams, rng: np.random.Generator):
    n, m, q = params.n, params.m, params.q
    while True:
        matrix = rng.integers(0, q, size=(m, n), dtype=np.int64)
        if _rank_mod(matrix, q) == n:
            break
    if kind is KeyKind.CLAW_FREE:
        secret = rng.integers(0, q, size=n, dtype=np.int64)
        shift = (matrix @ secret) % q
        key = ToyLatticeKeyPair(kind=kind, n=n, m=m, q=q, matrix=matrix, shift=shift)
        return key, ToyLatticeTrapdoor(kind=kind, key=key, secret=secret)
    while True:
        u = rng.integers(0, q, size=m, dtype=np.int64)
        if _solve_mod(matrix, u, q) is None:
            break
    key = ToyLatticeKeyPair(kind=kind, n=n, m=m, q=q, matrix=matrix, shift=u)
    return key, ToyLatticeTrapdoor(kind=kind, key=key, secret=None)


# ---------------------------------------------------------------------------
# Family-agnostic operations
# ---------------------------------------------------------------------------

EtcfKeyPair = IdealKeyPair | ToyLatticeKeyPair
Trapdoor = IdealTrapdoor | ToyLatticeTrapdoor


def keygen(kind: KeyKind, params: EtcfParams, rng: np.random.Generator):
    """Generate (public key pair, trapdoor) for the requested kind."""
    params.validate()
    if params.family == "ideal":
        return _keygen_ideal(kind, params, rng)
    return _keygen_toy(kind, params, rng)


def evaluate(key: EtcfKeyPair, b: int, x: int) -> int:
    return key.evaluate(b, x)


def invert(trapdoor: Trapdoor, y: int):
    """Trapdoor inversion.

    Claw-free keys return the claw (x0, x1); injective keys return
    (b_hat, x_hat).  Raises NoPreimageError when y is outside the image.
    """
    if isinstance(trapdoor, IdealTrapdoor):
        if not fits(y, trapdoor.domain_bits + 2):
            raise NoPreimageError(f"{y} outside the codomain")
        x0, x1 = int(trapdoor.inverse[0, y]), int(trapdoor.inverse[1, y])
        if trapdoor.kind is KeyKind.CLAW_FREE:
            if x0 < 0 or x1 < 0:
                raise NoPreimageError(f"{y} has no preimage")
            return x0, x1
        if x0 >= 0:
            return 0, x0
        if x1 >= 0:
            return 1, x1
        raise NoPreimageError(f"{y} has no preimage")
    key = trapdoor.key
    vec = decode_vector(y, key.m, key.q) if fits(y, key.codomain_bits) else None
    if vec is None:
        raise NoPreimageError(f"{y} does not encode a codomain vector")
    if trapdoor.kind is KeyKind.CLAW_FREE:
        x0 = _solve_mod(key.matrix, vec, key.q)
        if x0 is None:
            raise NoPreimageError(f"{y} has no preimage")
        x1 = (x0 - trapdoor.secret) % key.q
        return encode_vector(x0, key.q), encode_vector(x1, key.q)
    x = _solve_mod(key.matrix, vec, key.q)
    if x is not None:
        return 0, encode_vector(x, key.q)
    x = _solve_mod(key.matrix, (vec - key.shift) % key.q, key.q)
    if x is not None:
        return 1, encode_vector(x, key.q)
    raise NoPreimageError(f"{y} has no preimage")


def check_preimage(key: EtcfKeyPair, z: int, c: int) -> bool:
    """True iff z = (b || x) satisfies f_b(x) = c.

    The first bit of z selects the branch, the remainder is the domain
    element.  Raises on a z outside the (1 + domain_bits)-wide range; a z
    whose remainder is not a valid domain encoding simply fails the check.
    """
    if not fits(z, 1 + key.domain_bits):
        raise ValueError(f"malformed z: not a {1 + key.domain_bits}-bit string")
    b, x = z & 1, z >> 1
    if not key.in_domain(x):
        return False
    return key.evaluate(b, x) == c


def claw_partner(key: EtcfKeyPair, b: int, x: int) -> int:
    """The other claw member, recovered from public key material only.

    For these desk-scale families the claw is publicly computable (table
    scan or noise-free linear algebra); this stands in for the claw an
    honest device holds in superposition.  Trapdoors never enter here.
    """
    if key.kind is not KeyKind.CLAW_FREE:
        raise ValueError("claw_partner is defined for claw-free keys only")
    if isinstance(key, IdealKeyPair):
        y = key.evaluate(b, x)
        hits = np.nonzero(key.tables[1 - b] == y)[0]
        return int(hits[0])
    secret = _toy_public_secret(key)
    vec = decode_vector(x, key.n, key.q)
    if vec is None:
        raise ValueError(f"{x} does not encode a vector in the domain")
    partner = (vec - secret) % key.q if b == 0 else (vec + secret) % key.q
    return encode_vector(partner, key.q)


def _toy_public_secret(key: ToyLatticeKeyPair) -> np.ndarray:
    # Noise-free instance: s is recoverable from (A, A s) by elimination.
    if key._secret_cache is None:
        secret = _solve_mod(key.matrix, key.shift, key.q)
        if secret is None:
            raise ValueError("claw-free toy key with inconsistent shift")
        object.__setattr__(key, "_secret_cache", secret)
    return key._secret_cache


def image(key: EtcfKeyPair) -> set[int]:
    """The image of the pair, by exhaustive evaluation.  Desk scale only."""
    if isinstance(key, IdealKeyPair):
        return set(int(v) for v in key.tables.ravel())
    points = set()
    for b in (0, 1):
        for x in _domain_iter(key):
            points.add(key.evaluate(b, x))
    return points


def _domain_iter(key: ToyLatticeKeyPair):
    cb = _coord_bits(key.q)
    for packed in range(key.q ** key.n):
        vec = np.empty(key.n, dtype=np.int64)
        rest = packed
        for i in range(key.n):
            vec[i] = rest % key.q
            rest //= key.q
        yield encode_vector(vec, key.q)


# ---------------------------------------------------------------------------
# Wire serialization (hex tables / matrices), used by the transcript format
# ---------------------------------------------------------------------------


def _array_to_hex(a: np.ndarray) -> str:
    return a.astype("<i4").tobytes().hex()


def _array_from_hex(text: str) -> np.ndarray:
    return np.frombuffer(bytes.fromhex(text), dtype="<i4").astype(np.int64)


def key_to_dict(key: EtcfKeyPair) -> dict:
    if isinstance(key, IdealKeyPair):
        return {
            "family": "ideal",
            "kind": key.kind.value,
            "domain_bits": key.domain_bits,
            "tables": _array_to_hex(key.tables),
        }
    return {
        "family": "toy-lattice",
        "kind": key.kind.value,
        "n": key.n,
        "m": key.m,
        "q": key.q,
        "matrix": _array_to_hex(key.matrix),
        "shift": _array_to_hex(key.shift),
    }


def key_from_dict(data: dict) -> EtcfKeyPair:
    kind = KeyKind(data["kind"])
    if data["family"] == "ideal":
        w = int(data["domain_bits"])
        tables = _array_from_hex(data["tables"]).reshape(2, 1 << w)
        return IdealKeyPair(kind=kind, domain_bits=w, tables=tables)
    n, m, q = int(data["n"]), int(data["m"]), int(data["q"])
    return ToyLatticeKeyPair(
        kind=kind,
        n=n,
        m=m,
        q=q,
        matrix=_array_from_hex(data["matrix"]).reshape(m, n),
        shift=_array_from_hex(data["shift"]),
    )


def trapdoor_to_dict(trapdoor: Trapdoor) -> dict:
    if isinstance(trapdoor, IdealTrapdoor):
        return {
            "family": "ideal",
            "kind": trapdoor.kind.value,
            "domain_bits": trapdoor.domain_bits,
            "tables": _array_to_hex(trapdoor.tables),
        }
    secret = trapdoor.secret
    return {
        "family": "toy-lattice",
        "kind": trapdoor.kind.value,
        "secret": _array_to_hex(secret) if secret is not None else None,
    }


def trapdoor_from_dict(data: dict, key: EtcfKeyPair | None = None) -> Trapdoor:
    kind = KeyKind(data["kind"])
    if data["family"] == "ideal":
        w = int(data["domain_bits"])
        tables = _array_from_hex(data["tables"]).reshape(2, 1 << w)
        return IdealTrapdoor(kind=kind, domain_bits=w, tables=tables)
    if not isinstance(key, ToyLatticeKeyPair):
        raise ValueError("toy-lattice trapdoor deserialization needs its public key")
    secret = _array_from_hex(data["secret"]) if data["secret"] is not None else None
    return ToyLatticeTrapdoor(kind=kind, key=key, secret=secret)


def serialized_trapdoor_hex(trapdoor: Trapdoor) -> str:
    """The hex payload of a trapdoor; used by privacy-scan tests."""
    data = trapdoor_to_dict(trapdoor)
    return data["tables"] if data["family"] == "ideal" else (data["secret"] or "")


def to_hex_str(value: int, width: int) -> str:
    return to_hex(value, width)


def from_hex_str(text: str) -> int:
    return from_hex(text)
