"""Summary tables from the 2d census: classes and systole traces by volume band.

    python scripts/census_tables.py --disc-max 100000
"""

import argparse
import math
from collections import Counter
from dataclasses import dataclass

from orbicensus.core_arith import sieve_primes
from orbicensus.quadratic_fields import make_field
from orbicensus.quaternion_census import CensusOptions, enumerate_classes_2d, enumerate_classes_3d


@dataclass(frozen=True)
class TableConfig:
    disc_max: int = 100_000
    bands: int = 5
    kleinian_fields: tuple[int, ...] = (-1, -2, -3, -7, -11)
    kleinian_volume: float = 100.0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--disc-max", type=int, default=TableConfig.disc_max)
    args = ap.parse_args()
    cfg = TableConfig(disc_max=args.disc_max)

    traces = Counter()
    by_band = Counter()
    for r in enumerate_classes_2d(cfg.disc_max, CensusOptions(with_systole=True)):
        traces[r.systole_trace] += 1
        by_band[min(int(math.log10(r.algebra.disc_f)), cfg.bands)] += 1
    total = sum(traces.values())
    print(f"cocompact classes over Q with disc <= {cfg.disc_max}: {total}")
    print("disc decade  classes")
    for band in sorted(by_band):
        print(f"  10^{band:<7} {by_band[band]}")
    print("systole trace  classes  share  length")
    for t in sorted(traces):
        print(f"  {t:>11}  {traces[t]:>7}  {traces[t] / total:.3f}  {2 * math.acosh(t / 2):.6f}")

    table = sieve_primes(10**5)
    print(f"\nclasses over imaginary quadratic fields with covolume <= {cfg.kleinian_volume:g}")
    for d in cfg.kleinian_fields:
        recs = list(enumerate_classes_3d(make_field(d), cfg.kleinian_volume, table))
        cocompact = sum(r.cocompact for r in recs)
        print(f"  Q(sqrt({d})): {len(recs)} classes ({cocompact} cocompact), smallest covolume {recs[0].covolume:.6f}")


if __name__ == "__main__":
    main()
