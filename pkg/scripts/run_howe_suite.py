"""Howe property suite on both instances, plus a fault-injection run."""

import sys
import time

from sosbench.bisim import compute_bisim
from sosbench.cli import _universe_seeds, load_signature
from sosbench.config import RunConfig
from sosbench.engine import build_label_universe, derive_transitions
from sosbench.howe import build_universe, check_howe_properties, howe_closure, inject
from sosbench.syntax import parse_term


def suite(name, cfg, fault=None):
    sig = load_signature(name)
    start = time.perf_counter()
    labels = build_label_universe(sig, cfg.max_label_size)
    store = derive_transitions(sig, _universe_seeds(sig, cfg), labels, fuel=cfg.fuel, max_universe=cfg.max_universe)
    rel, _ = compute_bisim(store)
    hc = howe_closure(sig, build_universe(sig, cfg.max_term_size, store), (), rel)
    if fault:
        inject(hc, *(parse_term(sig, t) for t in fault))
    results = check_howe_properties(sig, hc, store)
    print(f"== {name}{' with injected pair' if fault else ''}: closure {len(hc.closure)} pairs")
    for r in results:
        print(f"  {'pass' if r.ok else 'FAIL':4}  {r.name:20} checked {r.pairs_checked}  "
              f"skipped {r.skips}  violations {len(r.violations)}")
    print(f"  {time.perf_counter() - start:.1f}s")
    return all(r.ok for r in results)


if __name__ == "__main__":
    cfg = RunConfig()
    ok = suite("shiftreset.sig", cfg) and suite("pcf.sig", RunConfig(max_term_size=4))
    caught = not suite("shiftreset.sig", cfg, fault=("\\x.x", "\\x.shift k.k"))
    sys.exit(0 if ok and caught else 1)
