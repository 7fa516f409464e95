"""Growth exponents of classes containing a geodesic surface, for several B0.

    python scripts/surface_exponents.py --b0 6 10 15 --delta-max 10000
"""

import argparse
import time
from dataclasses import dataclass

from orbicensus.asymptotics_lab import fit_power_law, geodesic_surface_density, surface_exactness_cutoff
from orbicensus.core_arith import sieve_primes
from orbicensus.quaternion_census import QuaternionAlgebraQ

# base covolume of Q(sqrt(-3)) rounded down; bounds the largest Phi needed
MIN_BASE_VOLUME = 0.014


@dataclass(frozen=True)
class SurfaceConfig:
    b0: tuple[int, ...] = (6, 10, 15)
    delta_max: int = 10_000
    points: int = 9
    decades: float = 2.0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b0", type=int, nargs="+", default=list(SurfaceConfig.b0))
    ap.add_argument("--delta-max", type=int, default=SurfaceConfig.delta_max)
    ap.add_argument("--points", type=int, default=SurfaceConfig.points)
    args = ap.parse_args()
    cfg = SurfaceConfig(tuple(args.b0), args.delta_max, args.points)

    vmax = surface_exactness_cutoff(cfg.delta_max)
    table = sieve_primes(int(vmax / MIN_BASE_VOLUME) + 100)
    print(f"volume grid {vmax / 10**cfg.decades:.1f} .. {vmax:.1f} ({cfg.points} points)")
    print(f"{'B0':>5} {'surface exp':>12} {'all exp':>9} {'ratio at top':>13} {'secs':>6}")
    for d in cfg.b0:
        t0 = time.perf_counter()
        ws, al = geodesic_surface_density(QuaternionAlgebraQ.from_disc(d), vmax, cfg.delta_max, table, cfg.points, cfg.decades)
        e_ws, e_al = fit_power_law(ws)[1], fit_power_law(al)[1]
        print(f"{d:>5} {e_ws:>12.4f} {e_al:>9.4f} {ws.ratios[-1]:>13.5f} {time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    main()
