"""Density curves for the counting experiments, written as CSV with fits.

    python scripts/density_experiments.py --x-max 1e7 --out-dir runs/density
"""

import argparse
import math
import time
from dataclasses import dataclass
from pathlib import Path

from orbicensus.asymptotics_lab import (
    HFunctionSpec,
    disc_embeddable_curve,
    fit_power_log,
    geometric_grid,
    no_small_field_curve,
    phi_embeddable_curve,
    phi_search_bound,
    short_systole_curve,
)
from orbicensus.cli import DENSITY_COLUMNS, emit_csv
from orbicensus.core_arith import sieve_primes
from orbicensus.quadratic_fields import field_from_delta


@dataclass(frozen=True)
class DensityConfig:
    x_min: float = 1e4
    x_max: float = 1e7
    points_per_decade: int = 4
    deltas: tuple[int, ...] = (5, -4, -3, 8)
    x0_values: tuple[float, ...] = (2.0, 2.7, 3.2)
    h_fixed: tuple[float, ...] = (5, 12, 24)
    workers: int = 1
    out_dir: Path = Path("runs/density")

    @property
    def grid(self):
        decades = math.log10(self.x_max / self.x_min)
        return geometric_grid(self.x_min, self.x_max, round(decades * self.points_per_decade) + 1)


def rows(curve):
    try:
        c, a = fit_power_log(curve)
    except Exception:
        c = a = None
    return [(x, n, t, n / t if t else None, c, a) for x, n, t in zip(curve.grid, curve.counts, curve.totals)], a


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x-min", type=float, default=DensityConfig.x_min)
    ap.add_argument("--x-max", type=float, default=DensityConfig.x_max)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", type=Path, default=DensityConfig.out_dir)
    args = ap.parse_args()
    cfg = DensityConfig(x_min=args.x_min, x_max=args.x_max, workers=args.workers, out_dir=args.out_dir)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    phi_table = sieve_primes(math.isqrt(phi_search_bound(cfg.x_max)) + 100)
    grid = cfg.grid
    t0 = time.perf_counter()

    for delta in cfg.deltas:
        K = field_from_delta(delta)
        r, a = rows(phi_embeddable_curve(K, grid, phi_table, cfg.workers))
        emit_csv(r, DENSITY_COLUMNS, cfg.out_dir / f"phi_embeddable_{delta}.csv")
        dr, da = rows(disc_embeddable_curve(K, grid, phi_table, cfg.workers))
        emit_csv(dr, DENSITY_COLUMNS, cfg.out_dir / f"disc_embeddable_{delta}.csv")
        dens = [row[1] / row[0] for row in dr]
        print(f"delta {delta:>4}: phi-ordered a = {a:+.4f}   disc-ordered a = {da:+.4f}   "
              f"decade ratio {dens[-1] / dens[0]:.4f} vs {math.sqrt(math.log(grid[0]) / math.log(grid[-1])):.4f}")

    for x0 in cfg.x0_values:
        r, _ = rows(short_systole_curve(x0, grid, phi_table, workers=cfg.workers))
        emit_csv(r, DENSITY_COLUMNS, cfg.out_dir / f"short_systole_{x0:g}.csv")
        print(f"x0 = {x0:<4g} short fraction: " + " ".join(f"{row[3]:.4f}" for row in r))

    for H in cfg.h_fixed:
        r, _ = rows(no_small_field_curve(grid, HFunctionSpec(threshold=H), phi_table, workers=cfg.workers))
        emit_csv(r, DENSITY_COLUMNS, cfg.out_dir / f"no_small_field_H{H:g}.csv")
        print(f"H = {H:<3g} no-small-field fraction: " + " ".join(f"{row[3]:.4f}" for row in r))

    print(f"done in {time.perf_counter() - t0:.1f}s; CSVs in {cfg.out_dir}")


if __name__ == "__main__":
    main()
