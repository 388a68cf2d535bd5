"""Randomness test battery.

Six frequency/pattern tests follow the reference formulas of NIST SP 800-22
(monobit, block frequency, runs, cumulative sums, serial, approximate
entropy). Two come from Marsaglia and Tsang's compact battery (GCD and
birthday spacings). Bits are taken from byte streams least-significant bit
first; 32-bit words are read little-endian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from . import _gcd_table
from ._kernels import euclid_steps
from .errors import InsufficientData

ALPHA = 0.01
MIN_BITS = 100


@dataclass
class TestReport:
    test_name: str
    statistic: float
    p_value: float
    passed: bool
    alpha: float = ALPHA
    details: dict = field(default_factory=dict)

    # keep pytest from collecting this class
    __test__ = False

    @classmethod
    def make(cls, name: str, statistic: float, p_value: float, alpha: float,
             **details) -> "TestReport":
        p = float(min(1.0, max(0.0, p_value)))
        return cls(name, float(statistic), p, p >= alpha, alpha, details)

    def to_dict(self) -> dict:
        return {"test": self.test_name, "statistic": self.statistic,
                "p_value": self.p_value, "pass": self.passed, **self.details}


def bits_from_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")


def words32_from_bytes(data: bytes) -> np.ndarray:
    usable = len(data) - len(data) % 4
    return np.frombuffer(data[:usable], dtype="<u4").astype(np.uint64)


def _as_bits(bits, minimum: int = MIN_BITS) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if arr.size < minimum:
        raise InsufficientData(f"need at least {minimum} bits, got {arr.size}")
    return arr


def _bonferroni(*ps: float) -> float:
    return min(1.0, len(ps) * min(ps))


def monobit(bits, alpha: float = ALPHA) -> TestReport:
    b = _as_bits(bits)
    s = 2 * int(b.sum()) - b.size
    s_obs = abs(s) / math.sqrt(b.size)
    return TestReport.make("monobit", s_obs, special.erfc(s_obs / math.sqrt(2)), alpha, sum=s)


def block_frequency(bits, M: int = 128, alpha: float = ALPHA) -> TestReport:
    b = _as_bits(bits)
    N = b.size // M
    if N < 1:
        raise InsufficientData(f"block length {M} exceeds {b.size} bits")
    pi = b[:N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(((pi - 0.5) ** 2).sum())
    return TestReport.make("block_frequency", chi2, special.gammaincc(N / 2, chi2 / 2), alpha,
                           blocks=N, M=M)


def runs(bits, alpha: float = ALPHA) -> TestReport:
    b = _as_bits(bits)
    n = b.size
    pi = b.mean()
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        # frequency prerequisite failed; the runs statistic is meaningless
        return TestReport.make("runs", float("nan"), 0.0, alpha, prerequisite="frequency")
    v_obs = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v_obs - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    return TestReport.make("runs", v_obs, special.erfc(num / den), alpha)


def _cusum_p(n: int, z: int) -> float:
    if z == 0:
        return 1.0
    phi = special.ndtr
    sq = math.sqrt(n)
    # integer division truncates toward zero in the reference code
    def tdiv(a: int, b: int) -> int:
        return int(a / b)
    nz = tdiv(n, z)
    k1 = np.arange(tdiv(-nz + 1, 4), tdiv(nz - 1, 4) + 1)
    k2 = np.arange(tdiv(-nz - 3, 4), tdiv(nz - 1, 4) + 1)
    s1 = float((phi((4 * k1 + 1) * z / sq) - phi((4 * k1 - 1) * z / sq)).sum())
    s2 = float((phi((4 * k2 + 3) * z / sq) - phi((4 * k2 + 1) * z / sq)).sum())
    return 1.0 - s1 + s2


def cumulative_sums(bits, alpha: float = ALPHA) -> TestReport:
    """Forward and backward modes; the reported p-value is Bonferroni-combined."""
    b = _as_bits(bits)
    x = 2 * b.astype(np.int64) - 1
    z_fwd = int(np.abs(np.cumsum(x)).max())
    z_rev = int(np.abs(np.cumsum(x[::-1])).max())
    p_fwd = _cusum_p(b.size, z_fwd)
    p_rev = _cusum_p(b.size, z_rev)
    return TestReport.make("cumulative_sums", max(z_fwd, z_rev), _bonferroni(p_fwd, p_rev),
                           alpha, z_forward=z_fwd, z_reverse=z_rev,
                           p_values=[p_fwd, p_rev])


def _pattern_counts(b: np.ndarray, m: int) -> np.ndarray:
    """Counts of all overlapping m-bit patterns, wrapping around the end."""
    n = b.size
    if m <= 0:
        return np.array([n], dtype=np.int64)
    ext = np.concatenate((b, b[:m - 1])).astype(np.int64)
    v = np.zeros(n, dtype=np.int64)
    for j in range(m):
        v = (v << 1) | ext[j:j + n]
    return np.bincount(v, minlength=1 << m)


def _psi2(b: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    counts = _pattern_counts(b, m).astype(np.float64)
    return float((1 << m) / b.size * (counts ** 2).sum() - b.size)


def serial(bits, m: int = 16, alpha: float = ALPHA) -> TestReport:
    """Both serial p-values; the reported one is Bonferroni-combined."""
    b = _as_bits(bits)
    if m < 2:
        raise ValueError("serial test needs m >= 2")
    if m > b.size:
        raise InsufficientData(f"pattern length {m} exceeds {b.size} bits")
    p0, p1, p2 = _psi2(b, m), _psi2(b, m - 1), _psi2(b, m - 2)
    d1 = p0 - p1
    d2 = p0 - 2 * p1 + p2
    pv1 = float(special.gammaincc(2 ** (m - 2), d1 / 2))
    pv2 = float(special.gammaincc(2 ** (m - 3), d2 / 2))
    return TestReport.make("serial", d1, _bonferroni(pv1, pv2), alpha,
                           m=m, del_psi2=d1, del2_psi2=d2, p_values=[pv1, pv2])


def _phi(b: np.ndarray, m: int) -> float:
    counts = _pattern_counts(b, m)
    c = counts[counts > 0] / b.size
    return float((c * np.log(c)).sum())


def approximate_entropy(bits, m: int = 10, alpha: float = ALPHA) -> TestReport:
    b = _as_bits(bits)
    if m < 1 or m + 1 > b.size:
        raise InsufficientData(f"block length {m} unusable for {b.size} bits")
    apen = _phi(b, m) - _phi(b, m + 1)
    chi2 = 2.0 * b.size * (math.log(2) - apen)
    return TestReport.make("approximate_entropy", chi2,
                           special.gammaincc(2 ** (m - 1), chi2 / 2), alpha, m=m, apen=apen)


def _merge_cells(expected: np.ndarray, observed: np.ndarray, minimum: float = 5.0):
    """Pool sparse cells at both tails until each expected count is >= minimum."""
    e = list(expected)
    o = list(observed)
    while len(e) > 2 and e[0] < minimum:
        e[1] += e[0]
        o[1] += o[0]
        del e[0], o[0]
    while len(e) > 2 and e[-1] < minimum:
        e[-2] += e[-1]
        o[-2] += o[-1]
        del e[-1], o[-1]
    return np.array(e, dtype=float), np.array(o, dtype=float)


def _chi2(expected: np.ndarray, observed: np.ndarray) -> tuple[float, float, int]:
    e, o = _merge_cells(expected, observed)
    chi2 = float(((o - e) ** 2 / e).sum())
    df = len(e) - 1
    return chi2, float(stats.chi2.sf(chi2, df)), df


def euclid(u: int, v: int) -> tuple[int, int]:
    """(gcd, number of division steps) in the order the GCD test counts them."""
    k = 0
    while v:
        u, v = v, u % v
        k += 1
    return u, k


def gcd_test(words, min_pairs: int = 10_000, alpha: float = ALPHA) -> TestReport:
    """Chi-square on gcd values and on Euclid step counts of 32-bit pairs.

    Pairs are consecutive words; a pair containing zero is skipped and the
    next pair used in its place. The reported p-value is Bonferroni-combined
    over the two distributions.
    """
    w = np.asarray(words, dtype=np.uint64)
    w = w[: w.size - w.size % 2].reshape(-1, 2)
    nonzero = (w[:, 0] != 0) & (w[:, 1] != 0)
    zero_pairs = int(w.shape[0] - nonzero.sum())
    w = w[nonzero]
    npairs = w.shape[0]
    if npairs < min_pairs:
        raise InsufficientData(f"need {min_pairs} nonzero pairs, got {npairs}")
    u = np.ascontiguousarray(w[:, 0])
    v = np.ascontiguousarray(w[:, 1])
    g = np.empty(npairs, dtype=np.uint64)
    k = np.empty(npairs, dtype=np.int64)
    euclid_steps(u, v, g, k)

    ref = np.asarray(_gcd_table.STEP_COUNTS, dtype=float)
    kmax = max(ref.size, int(k.max()) + 1)
    ref = np.pad(ref, (0, kmax - ref.size))
    exp_k = ref / ref.sum() * npairs
    obs_k = np.bincount(k, minlength=kmax)[:kmax]
    chi_k, p_k, df_k = _chi2(exp_k, obs_k)

    # P(gcd = j) ~ 6 / (pi^2 j^2); tail j >= J pooled in the last cell
    J = max(2, int(math.sqrt(6 / math.pi ** 2 * npairs / 5)) + 1)
    j = np.arange(1, J, dtype=float)
    probs = 6 / (math.pi ** 2 * j ** 2)
    probs = np.append(probs, 1.0 - probs.sum())
    obs_g = np.bincount(np.minimum(g, J).astype(np.int64), minlength=J + 1)[1:]
    chi_g, p_g, df_g = _chi2(probs * npairs, obs_g)

    return TestReport.make("gcd", max(chi_k, chi_g), _bonferroni(p_g, p_k), alpha,
                           pairs=npairs, zero_pairs=zero_pairs,
                           chi2_gcd=chi_g, df_gcd=df_g, chi2_steps=chi_k, df_steps=df_k,
                           p_values=[p_g, p_k])


def spacing_duplicates(birthdays: np.ndarray) -> int:
    """Number of repeated values among the spacings of the sorted birthdays."""
    b = np.sort(np.asarray(birthdays, dtype=np.uint64))
    sp = np.sort(np.diff(b, prepend=np.uint64(0)))
    return int(np.count_nonzero(sp[1:] == sp[:-1]))


def birthday_spacings(samples, days: int = 1 << 32, birthdays: int = 4096,
                      alpha: float = ALPHA) -> TestReport:
    """Duplicate spacings summed over consecutive blocks against Poisson.

    Each block of ``birthdays`` samples contributes a count that is
    approximately Poisson with mean birthdays**3 / (4 * days); the sum over
    R blocks is Poisson with R times that mean. Two-sided p-value.
    """
    s = np.asarray(samples, dtype=np.uint64)
    reps = s.size // birthdays
    if reps < 1:
        raise InsufficientData(f"need at least {birthdays} samples, got {s.size}")
    if s.size and int(s.max()) >= days:
        raise ValueError(f"samples must lie below days={days}")
    lam = birthdays ** 3 / (4 * days)
    counts = [spacing_duplicates(s[i * birthdays:(i + 1) * birthdays]) for i in range(reps)]
    total = sum(counts)
    mean = lam * reps
    p = 2 * min(stats.poisson.cdf(total, mean), stats.poisson.sf(total - 1, mean))
    return TestReport.make("birthday_spacings", total, p, alpha,
                           blocks=reps, expected=mean, duplicates=counts)


TestFn = Callable[[np.ndarray, np.ndarray, float], TestReport]


def default_tests(length_bits: int) -> dict[str, TestFn]:
    """The eight tests with parameters suited to ``length_bits``-bit sequences.

    Pattern lengths follow the usual recommendations (serial m < log2 n - 2,
    approximate entropy m < log2 n - 5), capped at 16 and 10.
    """
    lg = int(math.log2(max(length_bits, 2)))
    m_serial = max(2, min(16, lg - 3))
    m_apen = max(1, min(10, lg - 6))
    return {
        "monobit": lambda b, w, a: monobit(b, alpha=a),
        "block_frequency": lambda b, w, a: block_frequency(b, M=128, alpha=a),
        "runs": lambda b, w, a: runs(b, alpha=a),
        "cumulative_sums": lambda b, w, a: cumulative_sums(b, alpha=a),
        "serial": lambda b, w, a: serial(b, m=m_serial, alpha=a),
        "approximate_entropy": lambda b, w, a: approximate_entropy(b, m=m_apen, alpha=a),
        "gcd": lambda b, w, a: gcd_test(w, alpha=a),
        "birthday_spacings": lambda b, w, a: birthday_spacings(w, alpha=a),
    }


def proportion_interval(alpha: float, k: int) -> tuple[float, float]:
    centre = 1 - alpha
    half = 3 * math.sqrt(alpha * (1 - alpha) / k)
    return centre - half, centre + half


def uniformity_p(p_values: Sequence[float], bins: int = 10) -> float:
    """Chi-square p-value that ``p_values`` are uniform on [0, 1]."""
    counts, _ = np.histogram(np.asarray(p_values, dtype=float), bins=bins, range=(0.0, 1.0))
    return float(stats.chisquare(counts).pvalue)


@dataclass
class BatteryReport:
    alpha: float
    k: int
    length_bits: int
    reports: dict[str, list[TestReport]]

    @property
    def interval(self) -> tuple[float, float]:
        return proportion_interval(self.alpha, self.k)

    def proportion(self, test: str) -> float:
        rs = self.reports[test]
        return sum(r.passed for r in rs) / len(rs)

    def test_verdict(self, test: str) -> bool:
        lo, _ = self.interval
        return self.proportion(test) >= lo

    @property
    def verdict(self) -> bool:
        return all(self.test_verdict(t) for t in self.reports)

    def failing_tests(self) -> list[str]:
        return [t for t in self.reports if not self.test_verdict(t)]

    def to_dict(self) -> dict:
        lo, hi = self.interval
        tests = []
        for name, rs in self.reports.items():
            tests.append({
                "test": name,
                "proportion": self.proportion(name),
                "verdict": self.test_verdict(name),
                "sequences": [r.to_dict() for r in rs],
            })
        return {"alpha": self.alpha, "k": self.k, "length_bits": self.length_bits,
                "interval": [lo, hi], "verdict": self.verdict, "tests": tests}

    def render_table(self) -> str:
        lo, hi = self.interval
        lines = [f"{'test':<22}{'proportion':>12}{'min p':>12}{'median p':>12}  verdict",
                 "-" * 66]
        for name, rs in self.reports.items():
            ps = [r.p_value for r in rs]
            lines.append(f"{name:<22}{self.proportion(name):>12.3f}{min(ps):>12.4g}"
                         f"{float(np.median(ps)):>12.4g}  "
                         f"{'PASS' if self.test_verdict(name) else 'FAIL'}")
        lines.append("-" * 66)
        lines.append(f"k={self.k} sequences x {self.length_bits} bits, alpha={self.alpha}, "
                     f"accepted proportion >= {lo:.4f}")
        lines.append(f"overall: {'PASS' if self.verdict else 'FAIL'}")
        return "\n".join(lines)


def run_battery(source: Callable[[int], bytes], k: int = 100, length_bits: int = 1_000_000,
                alpha: float = ALPHA, tests: dict[str, TestFn] | None = None) -> BatteryReport:
    """Run every test on ``k`` consecutive, disjoint sequences from ``source``.

    ``source(nbytes)`` must return the next ``nbytes`` of the stream. A test
    that raises is recorded as a failure for that sequence with the error
    name as its reason.
    """
    if length_bits % 8:
        raise ValueError("length_bits must be a multiple of 8")
    if k < 1:
        raise ValueError("k must be positive")
    tests = default_tests(length_bits) if tests is None else tests
    reports: dict[str, list[TestReport]] = {name: [] for name in tests}
    for _ in range(k):
        data = source(length_bits // 8)
        if len(data) != length_bits // 8:
            raise InsufficientData("source ran dry")
        bits = bits_from_bytes(data)
        words = words32_from_bytes(data)
        for name, fn in tests.items():
            try:
                rep = fn(bits, words, alpha)
            except (InsufficientData, ValueError) as exc:
                rep = TestReport(name, float("nan"), 0.0, False, alpha,
                                 {"error": type(exc).__name__, "message": str(exc)})
            reports[name].append(rep)
    return BatteryReport(alpha, k, length_bits, reports)


ByteSource = Callable[[int], bytes]


def word_source(words: Callable[[int], np.ndarray], n: int) -> ByteSource:
    """Serialize successive n-bit words little-endian, resuming across calls."""
    wb = n // 8
    if n % 8:
        raise ValueError(f"n={n} is not byte aligned")
    pending = b""

    def read(nbytes: int) -> bytes:
        nonlocal pending
        need = nbytes - len(pending)
        buf = pending
        if need > 0:
            w = words(-(-need // wb))
            buf += np.ascontiguousarray(w, dtype="<u8").view(np.uint8).reshape(-1, 8)[:, :wb].tobytes()
        pending = buf[nbytes:]
        return buf[:nbytes]

    return read


def bitplane_source(words: Callable[[int], np.ndarray], bit: int = 0) -> ByteSource:
    """Stream made of bit ``bit`` of each successive word, packed LSB first."""
    def read(nbytes: int) -> bytes:
        w = words(8 * nbytes)
        plane = ((w >> np.uint64(bit)) & np.uint64(1)).astype(np.uint8)
        return np.packbits(plane, bitorder="little").tobytes()

    return read


def uniform_source(seed: int = 0) -> ByteSource:
    """Reference stream from numpy's PCG64."""
    rng = np.random.default_rng(seed)
    return lambda nbytes: rng.bytes(nbytes)
