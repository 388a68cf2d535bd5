"""Dynamical analysis: cycle detection, return maps, bit planes, distinct counts
and parameter recovery for the plain sawtooth map."""

from __future__ import annotations

import io
import math
import random
import statistics
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Literal, Sequence, TypeVar

import numpy as np
from numba import njit

from . import _kernels
from .coremap import MapParams, keystream
from .errors import DistinctnessViolation, InsufficientData, NonInvertibleDifference
from .generator import RawKeyBlob, TridentKey, TridentState, key_schedule, standalone_component

DEFAULT_CAP = 1 << 28

S = TypeVar("S", bound=Hashable)
Family = Literal["lcg", "dyn", "full"]


@dataclass(frozen=True)
class CycleReport:
    """Tail and cycle length of an orbit; both None when the cap was hit."""

    tail: int | None
    period: int | None
    capped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def find_cycle(step_fn: Callable[[S], S], initial: S, cap: int = DEFAULT_CAP) -> CycleReport:
    """Brent's cycle detection on an arbitrary hashable state.

    Uses constant memory. ``cap`` bounds the number of ``step_fn`` calls in
    the period search.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    power = lam = 1
    tortoise = initial
    hare = step_fn(initial)
    calls = 1
    while tortoise != hare:
        if calls >= cap:
            return CycleReport(None, None, capped=True)
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = step_fn(hare)
        lam += 1
        calls += 1

    tortoise = hare = initial
    for _ in range(lam):
        hare = step_fn(hare)
    mu = 0
    while tortoise != hare:
        tortoise = step_fn(tortoise)
        hare = step_fn(hare)
        mu += 1
    return CycleReport(mu, lam)


def _report(mu: int, lam: int) -> CycleReport:
    if lam < 0:
        return CycleReport(None, None, capped=True)
    return CycleReport(int(mu), int(lam))


def map_cycle(params: MapParams, cap: int = DEFAULT_CAP) -> CycleReport:
    """Cycle of the full (x, a, c) state of a single map, compiled."""
    sh, pm = _kernels.shift_args(params.s)
    u = np.uint64
    return _report(*_kernels.map_cycle(
        u(params.x0), u(params.a0), u(params.c0), u(params.delta_a), u(params.delta_c),
        _kernels.width_mask(params.n), sh, pm, cap))


def trident_cycle(key: TridentKey, cap: int = DEFAULT_CAP) -> CycleReport:
    """Cycle of the nine-word coupled state, compiled."""
    state = np.array(TridentState.initial(key).words(), dtype=np.uint64)
    inc = np.array(key.increments, dtype=np.uint64)
    sh, pm = _kernels.shift_args(key.s)
    return _report(*_kernels.trident_cycle(state, inc, _kernels.width_mask(key.n), sh, pm, cap))


def coefficient_period(start: int, delta: int, n: int, cap: int = DEFAULT_CAP) -> CycleReport:
    mask = (1 << n) - 1
    return find_cycle(lambda v: (v + delta) & mask, start, cap)


def coefficient_period_closed(delta: int, n: int) -> int:
    return (1 << n) // math.gcd(delta, 1 << n)


def sample_period(params: MapParams, report: CycleReport) -> int | None:
    """Minimal period of the emitted samples once the state is on its cycle.

    Always divides the state period.
    """
    if report.capped:
        return None
    tail, period = report.tail, report.period
    seq = keystream(params, tail + 2 * period)[tail:]
    for d in _divisors(period):
        if np.array_equal(seq[:period], seq[d:d + period]):
            return d
    return period


def _divisors(k: int) -> list[int]:
    small, large = [], []
    i = 1
    while i * i <= k:
        if k % i == 0:
            small.append(i)
            if i != k // i:
                large.append(k // i)
        i += 1
    return small + large[::-1]


def sample_params(rng: random.Random, n: int, family: Family, s: int | None = None) -> MapParams:
    """Draw a parameter set guaranteed to lie in ``family``.

    Raw fields are drawn uniformly and forced into class by shifting and
    or-ing in the required low bits, as the Trident key schedule does.
    """
    m = (1 << n) - 1
    x0 = rng.getrandbits(n)
    if family == "lcg":
        return MapParams.lcg(n, ((rng.getrandbits(n) << 2) | 1) & m,
                             ((rng.getrandbits(n) << 1) | 1) & m, x0)
    a0 = ((rng.getrandbits(n) << 2) | 1) & m
    c0 = ((rng.getrandbits(n) << 2) | 1) & m
    if family == "dyn":
        da = (rng.getrandbits(n) << 2) & m
        dc = (rng.getrandbits(n) << 2) & m
        shift = n if s is None else s
    elif family == "full":
        da = ((rng.getrandbits(n) << 3) | 4) & m
        dc = ((rng.getrandbits(n) << 3) | 4) & m
        shift = n // 2 if s is None else s
    else:
        raise ValueError(f"unknown parameter family {family!r}")
    return MapParams(n=n, s=shift, a0=a0, delta_a=da, c0=c0, delta_c=dc, x0=x0)


@dataclass
class PeriodStats:
    family: str
    n: int
    s: int | None
    trials: int
    periods: list[int] = field(repr=False)
    sample_periods: list[int | None] = field(repr=False)
    capped_fraction: float
    min: int | None
    median: float | None
    max: int | None
    fraction_at_least_1_5n: float

    def to_dict(self) -> dict:
        return asdict(self)


def measure_periods(family: Family, n: int, trials: int, s: int | None = None,
                    seed: int = 0, cap: int = DEFAULT_CAP,
                    with_sample_periods: bool = False) -> PeriodStats:
    """State periods over ``trials`` random in-class parameter sets.

    Trials are drawn sequentially from one seeded RNG, so results are
    reproducible by trial index. Capped runs count toward
    ``capped_fraction`` and are left out of the summary statistics.
    """
    rng = random.Random(seed)
    periods: list[int] = []
    sample_periods: list[int | None] = []
    capped = 0
    shift = None
    for _ in range(trials):
        params = sample_params(rng, n, family, s)
        shift = params.s
        rep = map_cycle(params, cap)
        if rep.capped:
            capped += 1
            continue
        periods.append(rep.period)
        if with_sample_periods:
            sample_periods.append(sample_period(params, rep))
    threshold = 2 ** (1.5 * n)
    return PeriodStats(
        family=family, n=n, s=shift, trials=trials,
        periods=periods, sample_periods=sample_periods,
        capped_fraction=capped / trials if trials else 0.0,
        min=min(periods) if periods else None,
        median=statistics.median(periods) if periods else None,
        max=max(periods) if periods else None,
        fraction_at_least_1_5n=(sum(p >= threshold for p in periods) / len(periods)
                                if periods else 0.0),
    )


@dataclass
class ReturnMapDump:
    """Consecutive orbit pairs ``(x_{t-1}, x_t)`` as an (N-1, 2) array."""

    pairs: np.ndarray

    @property
    def count(self) -> int:
        return len(self.pairs)

    def to_csv(self, header: bool = False) -> str:
        buf = io.StringIO()
        if header:
            buf.write("x_prev,x_curr\n")
        for prev, cur in self.pairs.tolist():
            buf.write(f"{prev},{cur}\n")
        return buf.getvalue()


def return_map(params: MapParams, N: int) -> ReturnMapDump:
    """Return map of the first ``N`` orbit points ``x_0 .. x_{N-1}``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    orbit = np.empty(N, dtype=np.uint64)
    orbit[0] = params.x0
    orbit[1:] = keystream(params, N - 1)
    return ReturnMapDump(np.column_stack((orbit[:-1], orbit[1:])))


def sawtooth_segments(dump: ReturnMapDump, a: int, c: int, n: int) -> np.ndarray:
    """Branch index ``(a*x + c) // 2**n`` of each pair, or -1 off the sawtooth."""
    prev = [int(v) for v in dump.pairs[:, 0]]
    cur = [int(v) for v in dump.pairs[:, 1]]
    m = 1 << n
    seg = np.empty(len(prev), dtype=np.int64)
    for i, (p, q) in enumerate(zip(prev, cur)):
        j, r = divmod(a * p + c, m)
        seg[i] = j if r == q else -1
    return seg


@njit(cache=True)
def _minimal_period(bits):
    # prefix function: smallest p with bits[i] == bits[i+p] is len - border
    k = bits.shape[0]
    pi = np.zeros(k, dtype=np.int64)
    for i in range(1, k):
        j = pi[i - 1]
        while j > 0 and bits[i] != bits[j]:
            j = pi[j - 1]
        if bits[i] == bits[j]:
            j += 1
        pi[i] = j
    return k - pi[k - 1]


def bitplane_periods(sequence: Sequence[int] | np.ndarray, n: int) -> list[int | None]:
    """Minimal period of each bit plane, or None if no period repeats twice.

    A period p is only accepted when the window holds at least two full
    copies of it (p <= len/2).
    """
    seq = np.asarray(sequence, dtype=np.uint64)
    if seq.size < 2:
        raise InsufficientData("need at least two samples to see a repeated period")
    out: list[int | None] = []
    for k in range(n):
        plane = ((seq >> np.uint64(k)) & np.uint64(1)).astype(np.uint8)
        p = int(_minimal_period(plane))
        out.append(p if 2 * p <= seq.size else None)
    return out


def birthday_expected(m: int, N: int) -> float:
    """Expected number of distinct values among N uniform draws from m values."""
    if m < 1 or N < 0:
        raise ValueError("need m >= 1 and N >= 0")
    if N == 0:
        return 0.0
    if m == 1:
        return 1.0
    return -m * math.expm1(N * math.log1p(-1.0 / m))


def birthday_sigma(m: int, N: int, trials: int = 1000, seed: int = 0) -> float:
    """Monte-Carlo standard deviation of the distinct count for uniform draws."""
    rng = np.random.default_rng(seed)
    counts = np.empty(trials)
    for i in range(trials):
        counts[i] = np.count_nonzero(np.bincount(rng.integers(0, m, N), minlength=m))
    return float(counts.std(ddof=1))


def distinct_count(sequence) -> int:
    return int(np.unique(np.asarray(sequence)).size)


@dataclass(frozen=True)
class RecoveredLCG:
    a: int
    c: int
    consistent: bool

    def to_dict(self) -> dict:
        return {"recovered_a": self.a, "recovered_c": self.c, "consistent": self.consistent}


def lcg_recover(samples: Sequence[int], m: int) -> RecoveredLCG:
    """Recover multiplier and increment of ``x -> a*x + c mod m`` from outputs.

    ``m`` must be a power of two; the first difference has to be odd.
    Remaining samples beyond the third are used as a consistency check.
    """
    xs = [int(v) for v in samples]
    if len(xs) < 3:
        raise InsufficientData("need at least three consecutive samples")
    d0 = (xs[1] - xs[0]) % m
    if d0 % 2 == 0:
        raise NonInvertibleDifference(f"x1 - x0 = {d0} is even modulo {m}")
    a = (xs[2] - xs[1]) * pow(d0, -1, m) % m
    c = (xs[1] - a * xs[0]) % m
    consistent = all((a * p + c) % m == q for p, q in zip(xs, xs[1:]))
    return RecoveredLCG(a, c, consistent)


@dataclass
class TridentPeriodReport:
    n: int
    s: int
    joint: CycleReport
    components: dict[str, CycleReport]
    bare_components: dict[str, CycleReport]
    lcm: int | None
    bare_lcm: int | None
    ratio: float | None
    joint_ge_max_component: bool | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail"] = self.joint.tail
        d["period"] = self.joint.period
        d["capped"] = self.joint.capped
        return d


def _lcm(reports) -> int | None:
    if any(r.capped for r in reports):
        return None
    return math.lcm(*(r.period for r in reports))


def trident_period_study(key: TridentKey, cap: int = DEFAULT_CAP) -> TridentPeriodReport:
    """Compare the joint period against the three maps run on their own.

    Each component is measured twice: self-perturbed with the key's shift,
    and as the bare recurrence with perturbation disabled (s = n). The lcm
    relation is reported, not asserted.
    """
    joint = trident_cycle(key, cap)
    comps, bare = {}, {}
    for which in "XYZ":
        p = standalone_component(key, which)
        comps[which] = map_cycle(p, cap)
        bare[which] = map_cycle(MapParams(n=p.n, s=p.n, a0=p.a0, delta_a=p.delta_a,
                                          c0=p.c0, delta_c=p.delta_c, x0=p.x0), cap)
    lcm = _lcm(comps.values())
    ok = None
    if not joint.capped and lcm is not None:
        ok = joint.period >= max(r.period for r in comps.values())
    return TridentPeriodReport(
        n=key.n, s=key.s, joint=joint, components=comps, bare_components=bare,
        lcm=lcm, bare_lcm=_lcm(bare.values()),
        ratio=joint.period / lcm if ok is not None else None,
        joint_ge_max_component=ok,
    )


def random_small_key(rng: random.Random, n: int, s: int | None = None) -> TridentKey:
    """Random key; distinctness is waived below n = 6 where it cannot hold."""
    while True:
        try:
            return key_schedule(RawKeyBlob.random(rng, n), s=s, strict=n >= 6)
        except DistinctnessViolation:
            continue
