"""Three cyclically coupled perturbed maps ("Trident").

Each map's low bits are perturbed by the right-shifted linear part of its
neighbour (x by z, y by x, z by y) and the output word is ``w = x ^ z``.
The y map never reaches the output.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, fields
from typing import Literal

import numpy as np

from . import _kernels
from .coremap import MAX_WIDTH, MIN_WIDTH, MapParams
from .errors import DistinctnessViolation, UnsupportedWidth

BLOB_FIELDS = ("x0", "y0", "z0",
               "a0", "c0", "b0", "d0", "e0", "h0",
               "da", "dc", "db", "dd", "de", "dh")
COEFFICIENTS = ("a0", "c0", "b0", "d0", "e0", "h0")
INCREMENTS = ("da", "dc", "db", "dd", "de", "dh")


def default_shift(n: int) -> int:
    return n // 2


def _mask(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class RawKeyBlob:
    """Fifteen raw n-bit words, in :data:`BLOB_FIELDS` order.

    Serialized as little-endian words, so a 64-bit blob is 120 bytes.
    """

    n: int
    words: tuple[int, ...]

    def __post_init__(self):
        if len(self.words) != len(BLOB_FIELDS):
            raise ValueError(f"expected {len(BLOB_FIELDS)} words, got {len(self.words)}")
        for w in self.words:
            if not 0 <= w <= _mask(self.n):
                raise ValueError(f"word {w} does not fit in {self.n} bits")

    @classmethod
    def from_bytes(cls, data: bytes) -> "RawKeyBlob":
        nbytes, rem = divmod(len(data), len(BLOB_FIELDS))
        if rem or nbytes == 0 or nbytes > MAX_WIDTH // 8:
            raise ValueError(f"key blob of {len(data)} bytes is not 15 whole words")
        words = tuple(int.from_bytes(data[i * nbytes:(i + 1) * nbytes], "little")
                      for i in range(len(BLOB_FIELDS)))
        return cls(n=8 * nbytes, words=words)

    @classmethod
    def from_hex(cls, text: str) -> "RawKeyBlob":
        text = "".join(text.split())
        try:
            data = bytes.fromhex(text)
        except ValueError as exc:
            raise ValueError(f"key is not valid hex: {exc}") from None
        return cls.from_bytes(data)

    @classmethod
    def random(cls, rng: random.Random, n: int = 64) -> "RawKeyBlob":
        return cls(n=n, words=tuple(rng.getrandbits(n) for _ in BLOB_FIELDS))

    def to_bytes(self) -> bytes:
        if self.n % 8:
            raise UnsupportedWidth(f"n={self.n} is not a multiple of 8")
        return b"".join(w.to_bytes(self.n // 8, "little") for w in self.words)

    def hex(self) -> str:
        return self.to_bytes().hex()


@dataclass(frozen=True)
class TridentKey:
    n: int
    s: int
    x0: int
    y0: int
    z0: int
    a0: int
    c0: int
    b0: int
    d0: int
    e0: int
    h0: int
    da: int
    dc: int
    db: int
    dd: int
    de: int
    dh: int
    require_distinct: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if not MIN_WIDTH <= self.n <= MAX_WIDTH:
            raise ValueError(f"n must lie in [{MIN_WIDTH}, {MAX_WIDTH}], got {self.n}")
        if not 1 <= self.s <= self.n:
            raise ValueError(f"s must lie in [1, {self.n}], got {self.s}")
        for name in BLOB_FIELDS:
            v = getattr(self, name)
            if not 0 <= v <= _mask(self.n):
                raise ValueError(f"{name}={v} does not fit in {self.n} bits")
        for name in COEFFICIENTS:
            if getattr(self, name) % 4 != 1:
                raise ValueError(f"{name} must be 1 mod 4")
        for name in INCREMENTS:
            if getattr(self, name) % 8 != 4:
                raise ValueError(f"{name} must be 4 mod 8")
        if self.require_distinct:
            seen: dict[int, str] = {}
            for name in COEFFICIENTS + INCREMENTS:
                v = getattr(self, name)
                if v in seen:
                    raise DistinctnessViolation(
                        f"{name} and {seen[v]} both equal {v:#x}")
                seen[v] = name

    @property
    def increments(self) -> tuple[int, ...]:
        return tuple(getattr(self, name) for name in INCREMENTS)

    def key_bits(self) -> int:
        """Freely chosen bits in the raw key material."""
        return 6 * (self.n - 2) + 6 * (self.n - 3) + 3 * self.n


def key_schedule(blob: RawKeyBlob, s: int | None = None, strict: bool = True) -> TridentKey:
    """Force the raw words into the required congruence classes.

    Coefficients become ``(raw << 2) | 1`` (1 mod 4) and increments
    ``(raw << 3) | 4`` (4 mod 8), both truncated to n bits; seeds pass
    through. With ``strict`` the twelve derived values must be pairwise
    distinct, which is only possible for n >= 6.
    """
    n = blob.n
    m = _mask(n)
    raw = dict(zip(BLOB_FIELDS, blob.words))
    derived = {k: raw[k] for k in ("x0", "y0", "z0")}
    for name in COEFFICIENTS:
        derived[name] = ((raw[name] << 2) | 1) & m
    for name in INCREMENTS:
        derived[name] = ((raw[name] << 3) | 4) & m
    return TridentKey(n=n, s=default_shift(n) if s is None else s,
                      require_distinct=strict, **derived)


@dataclass(frozen=True)
class TridentState:
    x: int
    y: int
    z: int
    a: int
    c: int
    b: int
    d: int
    e: int
    h: int
    t: int = 0

    @classmethod
    def initial(cls, key: TridentKey) -> "TridentState":
        return cls(key.x0, key.y0, key.z0, key.a0, key.c0,
                   key.b0, key.d0, key.e0, key.h0, 0)

    def words(self) -> tuple[int, ...]:
        """The nine dynamic words, without the time counter."""
        return (self.x, self.y, self.z, self.a, self.c, self.b, self.d, self.e, self.h)


def trident_step(state: TridentState, key: TridentKey) -> tuple[TridentState, int]:
    m = _mask(key.n)
    s = key.s
    a = (state.a + key.da) & m
    c = (state.c + key.dc) & m
    b = (state.b + key.db) & m
    d = (state.d + key.dd) & m
    e = (state.e + key.de) & m
    h = (state.h + key.dh) & m
    # all three linear parts use the previous x, y, z
    lx = (a * state.x + c) & m
    ly = (b * state.y + d) & m
    lz = (e * state.z + h) & m
    x = lx ^ (lz >> s)
    y = ly ^ (lx >> s)
    z = lz ^ (ly >> s)
    return TridentState(x, y, z, a, c, b, d, e, h, state.t + 1), x ^ z


def standalone_component(key: TridentKey, which: Literal["X", "Y", "Z"]) -> MapParams:
    """One of the three maps on its own, perturbed by its own shifted bits."""
    picks = {
        "X": ("a0", "da", "c0", "dc", "x0"),
        "Y": ("b0", "db", "d0", "dd", "y0"),
        "Z": ("e0", "de", "h0", "dh", "z0"),
    }
    try:
        mult, dmult, add, dadd, seed = (getattr(key, f) for f in picks[which.upper()])
    except KeyError:
        raise ValueError(f"which must be X, Y or Z, got {which!r}") from None
    return MapParams(n=key.n, s=key.s, a0=mult, delta_a=dmult,
                     c0=add, delta_c=dadd, x0=seed)


def words_to_bytes(words: np.ndarray, n: int) -> bytes:
    """Little-endian serialization of n-bit words (n a multiple of 8)."""
    if n % 8:
        raise UnsupportedWidth(f"n={n} is not a multiple of 8")
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8).reshape(-1, 8)
    return raw[:, :n // 8].tobytes()


class Trident:
    """Keystream generator holding the live coupled state.

    ``read`` is resumable: consecutive calls return consecutive keystream
    bytes regardless of how the requests are split.
    """

    def __init__(self, key: TridentKey):
        self.key = key
        s0 = TridentState.initial(key)
        self._state = np.array(s0.words(), dtype=np.uint64)
        self._inc = np.array(key.increments, dtype=np.uint64)
        self._mask = _kernels.width_mask(key.n)
        self._sh, self._pm = _kernels.shift_args(key.s)
        self.t = 0
        self._pending = b""

    @property
    def state(self) -> TridentState:
        return TridentState(*(int(v) for v in self._state), t=self.t)

    def step(self) -> int:
        return int(self.words(1)[0])

    def words(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        out = np.empty(count, dtype=np.uint64)
        if count:
            _kernels.trident_fill(self._state, self._inc, self._mask,
                                  self._sh, self._pm, out)
            self.t += count
        return out

    def read(self, nbytes: int) -> bytes:
        if self.key.n % 8:
            raise UnsupportedWidth(f"n={self.key.n} is not a multiple of 8")
        if nbytes < 0:
            raise ValueError("nbytes must be non-negative")
        need = nbytes - len(self._pending)
        chunk = self._pending
        if need > 0:
            wb = self.key.n // 8
            chunk += words_to_bytes(self.words(-(-need // wb)), self.key.n)
        self._pending = chunk[nbytes:]
        return chunk[:nbytes]


def keystream_bytes(key: TridentKey, nbytes: int) -> bytes:
    return Trident(key).read(nbytes)


def key_fields(key: TridentKey) -> dict[str, int]:
    return {f.name: getattr(key, f.name) for f in fields(key) if f.name != "require_distinct"}
