"""Run an N-sweep from a JSON config (or the built-in defaults) and print a summary table."""

import argparse
import json
import math
from pathlib import Path

from zakharov_inflation.experiments import ExperimentConfig, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", help="JSON file with ExperimentConfig keys")
    args = ap.parse_args()
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = ExperimentConfig.from_dict(data)
    records = run_sweep(cfg)
    print(f"config {cfg.digest()}  case {cfg.case}  (s, l) = ({cfg.s}, {cfg.l})  -> {cfg.out_dir}/{cfg.prefix}.csv")
    print(f"{'N':>6} {'T':>11} {'target':>11} {'ratio':>8} {'S/log^2N':>10} {'tail/A2':>9}  failure")
    for r in records:
        band = r.S_target / math.log(r.N) ** 2
        print(f"{r.N:>6} {r.T:>11.3e} {r.A2_target:>11.4e} {r.ratio:>8.4f} {band:>10.4e} "
              f"{r.tail_norm / r.A2_target:>9.1e}  {r.failure or '-'}")


if __name__ == "__main__":
    main()
