"""Collects one pass/fail line per acceptance criterion."""

from __future__ import annotations

import functools
import time

RESULTS: dict[str, tuple[bool, float, str]] = {}


def criterion(name: str, budget: float | None = None):
    """Record the outcome of a test; ``budget`` is a runtime limit in seconds."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs) or ""
            except BaseException as err:
                RESULTS[name] = (False, time.perf_counter() - start, f"{type(err).__name__}: {err}")
                raise
            elapsed = time.perf_counter() - start
            if budget is not None and elapsed >= budget:
                RESULTS[name] = (False, elapsed, f"took {elapsed:.2f}s, limit {budget}s")
                raise AssertionError(f"{name}: took {elapsed:.2f}s, limit {budget}s")
            RESULTS[name] = (True, elapsed, detail)

        return wrapper

    return decorate


def lines() -> list[str]:
    out = []
    for name, (ok, elapsed, detail) in RESULTS.items():
        status = "PASS" if ok else "FAIL"
        first = detail.splitlines()[0] if detail else ""
        out.append(f"{status}  {name}  ({elapsed:.2f}s)  {first}".rstrip())
    return out
