"""Injectable time source.

Everything that reads or waits on time (slot scheduling, benchmark
timing, long-polls) goes through a Clock so tests can compress hours of
13-second slots into desk time with ScaledClock while all measured
quantities stay in the virtual domain.
"""

from __future__ import annotations

import threading
import time


class WallClock:
    """Real time, in unix milliseconds."""

    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def real_seconds_until(self, t_ms: int) -> float:
        return max(0.0, (t_ms - self.now_ms()) / 1000.0)

    def sleep_ms(self, duration_ms: float) -> None:
        if duration_ms > 0:
            time.sleep(duration_ms / 1000.0)

    def wait_until(self, t_ms: int, stop: threading.Event | None = None) -> None:
        """Block until virtual time t_ms; returns early if stop is set."""
        while True:
            dt = self.real_seconds_until(t_ms)
            if dt <= 0:
                return
            if stop is None:
                time.sleep(min(dt, 0.5))
            elif stop.wait(min(dt, 0.5)):
                return


class ScaledClock(WallClock):
    """Virtual time running at ``factor`` x real time from an anchor point."""

    def __init__(self, factor: float, start_ms: int | None = None):
        if factor <= 0:
            raise ValueError("factor must be positive")
        self.factor = factor
        self._real_anchor = time.time()
        self._virtual_anchor = start_ms if start_ms is not None else int(self._real_anchor * 1000)

    def now_ms(self) -> int:
        return int(self._virtual_anchor + (time.time() - self._real_anchor) * 1000 * self.factor)

    def real_seconds_until(self, t_ms: int) -> float:
        return max(0.0, (t_ms - self.now_ms()) / 1000.0 / self.factor)

    def sleep_ms(self, duration_ms: float) -> None:
        if duration_ms > 0:
            time.sleep(duration_ms / 1000.0 / self.factor)
