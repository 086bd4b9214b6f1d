"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import
time by ``BINVOTE_NUMBA``). Numba timings exclude the first, compiling call.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, random, sys, time
import numpy as np
import binvote
from binvote import kernels, suites
from binvote.core import BAStructure, Majority, acceptance_table
from binvote.gamefile import bundled, load_game
from binvote.oracle import GridSpec, grid_spe_oracle

repeat = int(sys.argv[1])


def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


out = {"backend": binvote.backend()}
s = BAStructure(5, 3)
accept = acceptance_table(Majority(), s)
out["outcome_table n=5 m=3"] = best(lambda: kernels.outcome_table(5, 3, accept))

rng = np.random.default_rng(0)
outcome = kernels.outcome_table(5, 3, accept)
sat = rng.random((5, 8)) < 0.5
pay = rng.integers(-3, 4, size=(5, 1 << 15)).astype(np.int64)
out["nash_mask n=5 m=3"] = best(lambda: kernels.nash_mask(5, 3, outcome, sat, pay))

game = suites.consistent_game(random.Random(1), 3, 2, Majority(), range(3))
out["grid oracle n=3 m=2 (15625 choices)"] = best(lambda: grid_spe_oracle(game))

clash = load_game(bundled("incompatible_coalitions")).game
grid = GridSpec(payers=(0, 4))
out["grid oracle n=5 m=2, 2 payers"] = best(lambda: grid_spe_oracle(clash, grid))
print(json.dumps(out))
"""


def run(flag: str, repeat: int) -> dict:
    env = {**os.environ, "BINVOTE_NUMBA": flag}
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run("1", args.repeat), run("0", args.repeat)
    print(f"{'kernel':<40}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in fast:
        if key == "backend":
            continue
        a, b = fast[key], slow[key]
        print(f"{key:<40}{a * 1e3:>10.2f}ms{b * 1e3:>10.2f}ms{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
