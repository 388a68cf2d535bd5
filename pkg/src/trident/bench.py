"""Keystream throughput measurement."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass

from .generator import Trident, TridentKey

BLOCK = 1 << 22


@dataclass
class BenchReport:
    runs: list[float]
    bytes_per_second: float
    seconds_per_run: float
    block_bytes: int
    cpu_mhz: float | None
    nominal_cycles_per_bit: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def cpu_mhz() -> float | None:
    """Nominal clock from /proc/cpuinfo; None where it is not exposed."""
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.lower().startswith("cpu mhz"):
                    return float(line.split(":", 1)[1])
    except (OSError, ValueError):
        pass
    return None


def _one_run(gen: Trident, seconds: float, block: int) -> float:
    done = 0
    start = time.perf_counter()
    while True:
        gen.read(block)
        done += block
        elapsed = time.perf_counter() - start
        if elapsed >= seconds:
            return done / elapsed


def bench(key: TridentKey, seconds: float = 1.0, runs: int = 5, block: int = BLOCK) -> BenchReport:
    """Median keystream throughput over ``runs`` windows of ``seconds`` each."""
    if seconds <= 0:
        raise ValueError("duration must be positive")
    if runs < 1:
        raise ValueError("runs must be positive")
    gen = Trident(key)
    gen.read(block)  # compile and warm caches
    rates = [_one_run(gen, seconds, block) for _ in range(runs)]
    med = statistics.median(rates)
    mhz = cpu_mhz()
    return BenchReport(
        runs=rates, bytes_per_second=med, seconds_per_run=seconds, block_bytes=block,
        cpu_mhz=mhz,
        nominal_cycles_per_bit=(mhz * 1e6 / (med * 8)) if mhz else None,
    )
