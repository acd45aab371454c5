#!/usr/bin/env python3
"""Recompute the full case-study table: strategy complexities, worst-case
step counts, and verification verdicts. Exits nonzero on any mismatch."""

import sys
import time

from natstrat.casestudy import run_all


def main() -> int:
    t0 = time.perf_counter()
    results = run_all()
    width = max(len(r.name) for r in results)
    current = None
    for r in results:
        if r.kind != current:
            current = r.kind
            print(f"\n== {current} ==")
        mark = "ok " if r.ok else "FAIL"
        print(f"  {mark} {r.name:<{width}}  {r.actual!r:>6} (expected {r.expected!r})")
    bad = [r for r in results if not r.ok]
    print(f"\n{len(results) - len(bad)}/{len(results)} rows match "
          f"({time.perf_counter() - t0:.2f}s)")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
