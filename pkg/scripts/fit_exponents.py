"""Fixed-T sweeps for cases (a) and (d) and log-log fits of the second-order target norm."""

import math
from dataclasses import dataclass

from zakharov_inflation.bounds import target_component
from zakharov_inflation.experiments import expected_exponent, fit_exponent
from zakharov_inflation.initdata import InitialDataSpec, make_grid
from zakharov_inflation.picard import picard_terms
from zakharov_inflation.spectral import sobolev_norm


@dataclass
class FitConfig:
    case: str
    s: float
    l: float
    N_list: tuple = (64, 128, 256, 512)
    T_factor: float = 1e-3
    M_time: int = 32

    def fixed_T(self) -> float:
        N = self.N_list[-1]
        return self.T_factor * N**-2.0 * (math.log(N) if self.case == "a" else 1.0)


def measure(cfg: FitConfig) -> list[tuple[float, float, float]]:
    comp = target_component(cfg.case)
    reg = cfg.s if comp == 1 else cfg.l
    T = cfg.fixed_T()
    rows = []
    for N in cfg.N_list:
        spec = InitialDataSpec.create(cfg.case, N, cfg.s, cfg.l)
        A2 = picard_terms(spec, make_grid(spec, 2), T, 2, cfg.M_time, store="final")[1].final(comp)
        rows.append((N, sobolev_norm(A2, reg), spec.r))
    return rows


def main() -> None:
    for cfg in (FitConfig("a", -1, -1), FitConfig("d", 1, -3)):
        rows = measure(cfg)
        raw = fit_exponent([(N, y) for N, y, _ in rows])
        norm = fit_exponent([(N, y / r**2) for N, y, r in rows])
        want = expected_exponent(cfg.case, cfg.s, cfg.l)
        print(f"case {cfg.case}: T = {cfg.fixed_T():.3e}  raw slope {raw.slope:.3f}  "
              f"slope of norm/r^2 {norm.slope:.3f}  expected {want:g}")


if __name__ == "__main__":
    main()
