"""Single perturbed sawtooth map with dynamically incremented coefficients.

One step of the map advances the coefficients and then evaluates::

    a <- (a + delta_a) mod 2**n
    c <- (c + delta_c) mod 2**n
    L  = (a * x + c)   mod 2**n
    x <- L ^ (L >> s)

With ``delta_a = delta_c = 0`` and ``s = n`` this is a plain linear
congruential generator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

MIN_WIDTH = 4
MAX_WIDTH = 64


def _check_word(name: str, value: int, n: int) -> None:
    if not 0 <= value < (1 << n):
        raise ValueError(f"{name}={value} is not an unsigned {n}-bit value")


@dataclass(frozen=True)
class MapParams:
    """Configuration of one map: width, shift, coefficients and seed."""

    n: int
    s: int
    a0: int
    delta_a: int
    c0: int
    delta_c: int
    x0: int = 0

    def __post_init__(self):
        if not MIN_WIDTH <= self.n <= MAX_WIDTH:
            raise ValueError(f"n must lie in [{MIN_WIDTH}, {MAX_WIDTH}], got {self.n}")
        # s = 0 would give L ^ L = 0 forever
        if not 1 <= self.s <= self.n:
            raise ValueError(f"s must lie in [1, n={self.n}], got {self.s}")
        for name in ("a0", "delta_a", "c0", "delta_c", "x0"):
            _check_word(name, getattr(self, name), self.n)

    @property
    def modulus(self) -> int:
        return 1 << self.n

    @classmethod
    def lcg(cls, n: int, a0: int, c0: int, x0: int = 0) -> "MapParams":
        """Plain sawtooth map: no increments, no perturbation."""
        return cls(n=n, s=n, a0=a0, delta_a=0, c0=c0, delta_c=0, x0=x0)

    def with_seed(self, x0: int) -> "MapParams":
        return replace(self, x0=x0)


@dataclass(frozen=True)
class MapState:
    x: int
    a: int
    c: int
    t: int = 0

    @classmethod
    def initial(cls, params: MapParams) -> "MapState":
        return cls(x=params.x0, a=params.a0, c=params.c0, t=0)


@dataclass(frozen=True)
class ParamClass:
    """Which of the period-related congruence conditions a parameter set meets.

    lcg_maximal
        ``a0 = 1 (mod 4)`` and ``c0`` odd: full period ``2**n`` for the plain map.
    dyn_maximal
        ``a0, c0 = 1 (mod 4)`` and ``delta_a, delta_c = 0 (mod 4)``.
    full_recommended
        ``a0, c0 = 1 (mod 4)`` and ``delta_a, delta_c = 4 (mod 8)``.
    """

    lcg_maximal: bool
    dyn_maximal: bool
    full_recommended: bool


def classify_params(params: MapParams) -> ParamClass:
    a0_ok = params.a0 % 4 == 1
    c0_ok = params.c0 % 4 == 1
    # delta = 0 counts as "0 mod 4" here
    return ParamClass(
        lcg_maximal=a0_ok and params.c0 % 2 == 1,
        dyn_maximal=(a0_ok and c0_ok
                     and params.delta_a % 4 == 0 and params.delta_c % 4 == 0),
        full_recommended=(a0_ok and c0_ok
                          and params.delta_a % 8 == 4 and params.delta_c % 8 == 4),
    )


def linear_part(state: MapState, n: int) -> int:
    """``(a * x + c) mod 2**n`` with the state's current coefficients."""
    return (state.a * state.x + state.c) & ((1 << n) - 1)


def perturb(lin: int, p: int, s: int, n: int) -> int:
    """XOR ``lin`` with ``p >> s``; the result is masked to ``n`` bits."""
    return (lin ^ (p >> s)) & ((1 << n) - 1)


def step(state: MapState, params: MapParams) -> tuple[MapState, int]:
    """Advance the map once and return the new state with its sample.

    Coefficients are incremented before use, so the sample at time t is
    computed from ``a_t = a_{t-1} + delta_a``.
    """
    mask = params.modulus - 1
    a = (state.a + params.delta_a) & mask
    c = (state.c + params.delta_c) & mask
    lin = (a * state.x + c) & mask
    x = perturb(lin, lin, params.s, params.n)
    return MapState(x=x, a=a, c=c, t=state.t + 1), x


class PerturbedMap:
    """Stateful generator over :class:`MapParams`.

    Bulk output goes through a compiled loop; :meth:`step` is the
    pure-Python path and both stay in lockstep.
    """

    def __init__(self, params: MapParams):
        self.params = params
        self.state = MapState.initial(params)

    def step(self) -> int:
        self.state, x = step(self.state, self.params)
        return x

    def take(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        p = self.params
        out = np.empty(count, dtype=np.uint64)
        if count == 0:
            return out
        sh, pm = _kernels.shift_args(p.s)
        x, a, c = _kernels.map_fill(
            np.uint64(self.state.x), np.uint64(self.state.a), np.uint64(self.state.c),
            np.uint64(p.delta_a), np.uint64(p.delta_c),
            _kernels.width_mask(p.n), sh, pm, out)
        self.state = MapState(int(x), int(a), int(c), self.state.t + count)
        return out


def keystream(params: MapParams, count: int) -> np.ndarray:
    """First ``count`` samples x_1..x_count as a uint64 array."""
    return PerturbedMap(params).take(count)
