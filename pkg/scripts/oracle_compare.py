"""Compare the time stepper with the truncated series on a small case (a) lattice."""

import json
from dataclasses import dataclass

import numpy as np

from zakharov_inflation import oracle
from zakharov_inflation.initdata import InitialDataSpec, build_initial_data, make_grid
from zakharov_inflation.picard import picard_terms


@dataclass
class OracleConfig:
    N: int = 16
    T: float = 0.03
    M_terms: int = 6
    M_time: int = 64
    ladder: tuple = (64, 128, 256)


def main(cfg: OracleConfig = OracleConfig()) -> None:
    spec = InitialDataSpec.create("a", cfg.N, -1, -1)
    grid = make_grid(spec, cfg.M_terms, margin_cells=4)
    u0, n0 = build_initial_data(spec, grid)
    series = oracle.Trajectory.from_terms(
        picard_terms(spec, grid, cfg.T, cfg.M_terms, cfg.M_time, store="all", data=(u0, n0)))
    ladder = oracle.convergence_order(u0, n0, cfg.T, cfg.ladder)
    traj = oracle.step_solver(u0, n0, cfg.T, cfg.T / cfg.ladder[-1])
    mass = [np.sqrt(grid.cell * np.sum(np.abs(u) ** 2)) for u in traj.u]
    print(json.dumps({
        "distance": oracle.relative_distance(ladder["finest"], series),
        "order": ladder["order"],
        "differences": ladder["differences"],
        "residual_solver": oracle.phi_residual(u0, n0, traj),
        "residual_series": oracle.phi_residual(u0, n0, series),
        "mass_drift": float(max(mass) / min(mass) - 1),
    }, indent=2))


if __name__ == "__main__":
    main()
