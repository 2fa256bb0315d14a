"""Subprocess worker: time library solves on the active kernel lane.

Invoked by the benchmark runner with CONEFORGE_PURE=1 to measure the
pure-Python lane without disturbing the parent process.  Prints one JSON
line: status, min runtime over repeats, iterations, lane.
"""

import json
import sys

import coneforge


def main() -> int:
    path, repeats = sys.argv[1], int(sys.argv[2])
    prob = coneforge.read_problem(path)
    best = float("inf")
    sol = None
    for _ in range(repeats + 1):  # one warmup, then timed repeats
        sol = coneforge.solve(prob)
        best = min(best, sol.setup_time + sol.solve_time)
    print(json.dumps({
        "status": sol.status.value,
        "runtime": best,
        "iterations": sol.iterations,
        "lane": coneforge.LANE,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
