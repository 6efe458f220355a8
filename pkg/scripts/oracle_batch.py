"""Engine vs machine on a seeded batch of random shift/reset programs.

usage: python scripts/oracle_batch.py [n] [max_size] [label_size] [seed]
"""

import sys
import time

from sosbench.cli import load_signature
from sosbench.machine import oracle_batch
from sosbench.syntax import show


def main(argv):
    n, size, labels, seed = (list(map(int, argv)) + [100, 8, 2, 0][len(argv):])[:4]
    sig = load_signature("shiftreset.sig")
    start = time.perf_counter()
    reports = oracle_batch(sig, n=n, max_size=size, fuel=50, label_size=labels, seed=seed)
    bad = [r for r in reports if not r.clean]
    for r in bad:
        print("discrepancy:", show(sig, r.term))
    print(f"{len(reports)} programs, {sum(r.compared for r in reports)} keys compared, "
          f"{sum(r.skipped for r in reports)} skipped, {len(bad)} with discrepancies, "
          f"{time.perf_counter() - start:.1f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
