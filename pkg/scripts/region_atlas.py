"""Write region CSVs for d = 1..4 and report overlaps and uncovered inflation points."""

import argparse
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from zakharov_inflation.regions import region_grid, verdicts_to_csv


@dataclass
class AtlasConfig:
    dims: tuple = (1, 2, 3, 4)
    lo: Fraction = Fraction(-4)
    hi: Fraction = Fraction(4)
    step: Fraction = Fraction(1, 10)
    out_dir: str = "results/atlas"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step", default="0.1")
    ap.add_argument("--out-dir", default=AtlasConfig.out_dir)
    args = ap.parse_args()
    cfg = AtlasConfig(step=Fraction(args.step), out_dir=args.out_dir)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for d in cfg.dims:
        rows = region_grid(d, (cfg.lo, cfg.hi), (cfg.lo, cfg.hi), cfg.step)
        (out / f"regions_d{d}.csv").write_text(verdicts_to_csv(rows))
        both = [v for v in rows if v.lwp and v.inflation]
        gaps = [(float(v.s), float(v.l)) for v in rows if v.inflation and not v.covering_case]
        infl = sum(v.inflation for v in rows)
        lwp = sum(v.lwp for v in rows)
        print(f"d={d}: {len(rows)} points, inflation {infl}, lwp {lwp}, overlap {len(both)}, uncovered {gaps}")


if __name__ == "__main__":
    main()
