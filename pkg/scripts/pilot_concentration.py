"""Pilot that fixes the threshold of the two-point concentration acceptance check.

Protocol, fixed before the run: seed 9001 (never used by the main check),
100 replicates of d=2, k=3, r = n^-0.64, n = 1e5.  The pilot estimates the
largest probability mass carried by two consecutive values of the maximum
degree; the threshold is that estimate minus two binomial standard errors,
rounded down to a multiple of 0.05 and capped at 0.9.
"""

import json
import math
import sys
import tempfile

from rggmax.runner import config_from_mapping, run_experiment

PILOT_SEED = 9001
PILOT_REPLICATES = 100


def main() -> int:
    with tempfile.TemporaryDirectory() as out:
        cfg = config_from_mapping({"kind": "max_degree_concentration", "d": 2, "k": 3, "n": "100000",
                                   "radius_exponent": -0.64, "replicates": PILOT_REPLICATES,
                                   "seed": PILOT_SEED, "out": out, "threshold": 0.0})
        summary = run_experiment(cfg)
    p = summary["best_two_point_mass"]
    se = math.sqrt(p * (1 - p) / PILOT_REPLICATES)
    threshold = min(0.9, math.floor((p - 2 * se) / 0.05) * 0.05)
    json.dump({"histogram": summary["histogram"], "best_two_point_mass": p,
               "p_in_k_minus_1_k": summary["p_in_k_minus_1_k"], "threshold": round(threshold, 2)},
              sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
