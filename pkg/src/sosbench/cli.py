"""Command-line entry point.

Exit codes: 0 for a clean run, 1 when a property is violated or a pair is
distinguished, 2 for usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .config import RunConfig
from .signature import Signature, SignatureError, SortError, enumerate_terms
from .syntax import ParseError, parse_signature, parse_term, show

log = logging.getLogger(__name__)

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def signature_path(name: str) -> Path:
    """A path as given, or else a file shipped under ``signatures/``."""
    p = Path(name)
    if p.exists():
        return p
    shipped = resources.files("sosbench") / "signatures" / name
    if shipped.is_file():
        return Path(str(shipped))
    raise UsageError(f"no such signature file: {name}")


def load_signature(name: str) -> Signature:
    return parse_signature(signature_path(name).read_text())


def _term(sig, text):
    return parse_term(sig, text)


def _labels(sig, cfg):
    from .engine import build_label_universe

    return build_label_universe(sig, cfg.max_label_size)


def _seed_sorts(sig):
    tops = []
    for d in sig.edges.values():
        s = sig.top(d.source)
        if s not in tops:
            tops.append(s)
    return tops


def _universe_seeds(sig, cfg):
    out = []
    for s in _seed_sorts(sig):
        out.extend(enumerate_terms(sig, s, (), cfg.max_term_size))
    return out


def _store(sig, seeds, cfg):
    from .engine import derive_transitions

    return derive_transitions(sig, seeds, _labels(sig, cfg), fuel=cfg.fuel, max_universe=cfg.max_universe)


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, results dict, human-readable lines)


def cmd_validate(args, cfg):
    sig = load_signature(args.sig)
    res = {
        "sorts": len(sig.sorts),
        "subsorts": len(sig.subsorts),
        "constructors": len(sig.constructors),
        "operations": len(sig.operations),
        "clauses": len(sig.clauses),
        "edges": len(sig.edges),
        "rules": len(sig.rules),
    }
    lines = [f"{k}: {v}" for k, v in res.items()]
    return OK, res, lines


def cmd_format_check(args, cfg):
    from .formatcheck import format_report

    sig = load_signature(args.sig)
    rep = format_report(sig)
    rows = []
    width = max([len(r.rule) for r in rep.rules] + [4])
    lines = [f"{'rule':{width}}  {'structural':10}  {'cofibration':11}  schedule"]
    for r in rep.rules:
        rows.append({
            "rule": r.rule,
            "ok": r.ok,
            "structural": r.structural.message,
            "structural_ok": r.structural.ok,
            "schedule": r.border.schedule,
            "border": r.border.describe(),
        })
        sched = "-" if r.border.schedule is None else " ".join(map(str, r.border.schedule)) or "(none)"
        line = f"{r.rule:{width}}  {'ok' if r.structural.ok else 'FAIL':10}  {'ok' if r.border.ok else 'FAIL':11}  {sched}"
        if not r.ok:
            line += "  # " + (r.structural.message if not r.structural.ok else r.border.describe())
        lines.append(line)
    for p in rep.op_problems:
        lines.append(f"operation problem: {p}")
    lines.append("result: " + ("pass" if rep.ok else "FAIL"))
    res = {"ok": rep.ok, "rules": rows, "op_problems": [str(p) for p in rep.op_problems]}
    return (OK if rep.ok else FAIL), res, lines


def cmd_step(args, cfg):
    sig = load_signature(args.sig)
    t = _term(sig, args.term)
    st = _store(sig, [t], cfg)
    rows = []
    for key in st.keys_of(t):
        _, edge, labs = key
        for tgt in sorted(show(sig, x) for x in st.observed.get(key, ())):
            rows.append({"edge": edge, "labels": [show(sig, lab) for lab in labs], "target": tgt})
    res = {"term": show(sig, t), "transitions": rows, "exhausted": st.exhausted(t), "converged": st.converged}
    lines = [
        f"{res['term']} -{r['edge']}{'[' + ', '.join(r['labels']) + ']' if r['labels'] else ''}-> {r['target']}"
        for r in rows
    ]
    lines.append(f"exhausted: {res['exhausted']}")
    return OK, res, lines


def cmd_eval(args, cfg):
    sig = load_signature(args.sig)
    t = _term(sig, args.term)
    if args.machine:
        from .machine import ControlStuck, MachineError, Value, run

        try:
            r = run(t, cfg.fuel)
        except MachineError as e:
            raise UsageError(f"--machine needs a shift/reset program: {e}") from e
        if isinstance(r.outcome, Value):
            res = {"outcome": "value", "result": show(sig, r.outcome.value)}
        elif isinstance(r.outcome, ControlStuck):
            res = {"outcome": "stuck", "result": show(sig, r.states[-1])}
        else:
            res = {"outcome": "diverged", "result": None}
        res["steps"] = len(r.states) - 1
        return OK, res, [f"{res['outcome']}: {res['result']} ({res['steps']} steps)"]
    from .engine import tau_edge

    st = _store(sig, [t], cfg)
    tau = tau_edge(sig)
    reach = st.targets(t, tau)
    # tau-normal forms: reachable terms whose only tau-successor is themselves
    normal = sorted(show(sig, u) for u in reach if set(st.targets(u, tau)) <= {u})
    res = {"term": show(sig, t), "normal_forms": normal, "exhausted": st.exhausted(t, tau)}
    lines = [f"{res['term']} =>* {n}" for n in normal] or ["no normal form within bounds"]
    return OK, res, lines


def _witness_json(sig, w):
    if w is None:
        return None
    return {
        "left": show(sig, w.left),
        "right": show(sig, w.right),
        "challenger": w.side,
        "edge": w.edge,
        "labels": [show(sig, lab) for lab in w.labels],
        "target": show(sig, w.target),
        "answers": [{"target": show(sig, a), "why": _witness_json(sig, sub)} for a, sub in w.answers],
    }


def _witness_lines(sig, w, indent=0):
    pad = "  " * indent
    labs = "[" + ", ".join(show(sig, lab) for lab in w.labels) + "]" if w.labels else ""
    who = show(sig, w.left if w.side == "left" else w.right)
    out = [f"{pad}{who} -{w.edge}{labs}-> {show(sig, w.target)}"]
    if not w.answers:
        out.append(f"{pad}  no answer")
    for a, sub in w.answers:
        out.append(f"{pad}  answer {show(sig, a)}")
        out.extend(_witness_lines(sig, sub, indent + 2))
    return out


def cmd_bisim(args, cfg):
    from .bisim import compute_bisim

    sig = load_signature(args.sig)
    a, b = _term(sig, args.t1), _term(sig, args.t2)
    st = _store(sig, [a, b], cfg)
    _, verdicts = compute_bisim(st, [(a, b)])
    v = verdicts[(a, b)]
    res = {
        "left": show(sig, a),
        "right": show(sig, b),
        "verdict": v.kind,
        "depth": v.depth,
        "exhausted": v.exhausted,
        "bounds": v.bounds,
        "witness": _witness_json(sig, v.witness),
    }
    lines = [f"{v.kind} (depth {v.depth}, exhausted {v.exhausted})"]
    if v.witness is not None:
        lines += _witness_lines(sig, v.witness)
    return (FAIL if v.distinguished else OK), res, lines


def _violation_str(sig, v):
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        return {k: _violation_str(sig, x) for k, x in v.items()}
    if isinstance(v, tuple):
        return [_violation_str(sig, x) for x in v]
    if hasattr(v, "args") or hasattr(v, "index"):
        return show(sig, v)
    return v


def cmd_howe(args, cfg):
    from .bisim import compute_bisim
    from .howe import build_universe, check_howe_properties, howe_closure

    sig = load_signature(args.sig)
    st = _store(sig, _universe_seeds(sig, cfg), cfg)
    rel, _ = compute_bisim(st)
    U = build_universe(sig, cfg.max_term_size, st)
    hc = howe_closure(sig, U, (), rel)
    results = check_howe_properties(sig, hc, st)
    rows = []
    lines = [f"universe {len(U)} entries, closure {len(hc.closure)} pairs"]
    for r in results:
        rows.append({
            "property": r.name,
            "checked": r.pairs_checked,
            "skipped": r.skips,
            "bounded": r.bounded,
            "violations": len(r.violations),
            "witnesses": [_violation_str(sig, v) for v in r.violations[:5]],
        })
        mark = "pass" if r.ok else "FAIL"
        lines.append(
            f"{mark:4}  {r.name:20} checked {r.pairs_checked}  skipped {r.skips}  bounded {r.bounded}"
            f"  violations {len(r.violations)}"
        )
    ok = all(r.ok for r in results)
    res = {"universe": len(U), "closure": len(hc.closure), "properties": rows, "ok": ok}
    return (OK if ok else FAIL), res, lines


def cmd_congruence(args, cfg):
    from .bisim import Scope, check_congruence, check_enhanced, compute_bisim

    sig = load_signature(args.sig)
    st = _store(sig, _universe_seeds(sig, cfg), cfg)
    rel, _ = compute_bisim(st)
    scope = Scope(st)
    reports = [
        check_congruence(sig, rel, cfg.samples, cfg.seed, scope),
        check_enhanced(sig, rel, cfg.samples, cfg.seed, scope),
    ]
    rows = []
    lines = []
    for r in reports:
        rows.append({
            "check": r.name,
            "checked": r.checked,
            "skipped": r.skipped,
            "violations": len(r.violations),
            "witnesses": [_violation_str(sig, v) for v in r.violations[:5]],
        })
        lines.append(f"{'pass' if r.ok else 'FAIL':4}  {r.name:10} checked {r.checked}  skipped {r.skipped}"
                     f"  violations {len(r.violations)}")
    ok = all(r.ok for r in reports)
    return (OK if ok else FAIL), {"checks": rows, "ok": ok}, lines


def cmd_oracle_diff(args, cfg):
    from .machine import oracle_compare

    sig = load_signature("shiftreset.sig")
    t = _term(sig, args.term)
    rep = oracle_compare(sig, t, cfg.fuel, _labels(sig, cfg))
    res = {
        "term": show(sig, t),
        "clean": rep.clean,
        "compared": rep.compared,
        "skipped": rep.skipped,
        "discrepancies": [
            {
                "edge": d["key"][1],
                "labels": [show(sig, lab) for lab in d["key"][2]],
                "engine_only": [show(sig, x) for x in d["engine_only"]],
                "machine_only": [show(sig, x) for x in d["machine_only"]],
            }
            for d in rep.discrepancies
        ],
    }
    lines = [f"{'clean' if rep.clean else 'DIFF'}: compared {rep.compared}, skipped {rep.skipped}"]
    for d in res["discrepancies"]:
        lines.append(f"  {d['edge']}{d['labels']}: engine only {d['engine_only']}, machine only {d['machine_only']}")
    return (OK if rep.clean else FAIL), res, lines


COMMANDS = {
    "validate": cmd_validate,
    "format-check": cmd_format_check,
    "step": cmd_step,
    "eval": cmd_eval,
    "bisim": cmd_bisim,
    "howe": cmd_howe,
    "congruence": cmd_congruence,
    "oracle-diff": cmd_oracle_diff,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    d = RunConfig()
    common.add_argument("--fuel", type=int, default=d.fuel)
    common.add_argument("--max-universe", type=int, default=d.max_universe)
    common.add_argument("--label-size", type=int, default=d.max_label_size)
    common.add_argument("--term-size", type=int, default=d.max_term_size)
    common.add_argument("--samples", type=int, default=d.samples)
    common.add_argument("--seed", type=int, default=d.seed)
    common.add_argument("--json", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sosbench", description="Rule engine, format checks and bisimulation tools.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("validate", "format-check", "howe", "congruence"):
        sub.add_parser(name, parents=[common]).add_argument("sig")
    s = sub.add_parser("step", parents=[common])
    s.add_argument("sig")
    s.add_argument("term")
    s = sub.add_parser("eval", parents=[common])
    s.add_argument("sig")
    s.add_argument("term")
    s.add_argument("--machine", action="store_true", help="use the direct shift/reset machine")
    s = sub.add_parser("bisim", parents=[common])
    s.add_argument("sig")
    s.add_argument("t1")
    s.add_argument("t2")
    s = sub.add_parser("oracle-diff", parents=[common])
    s.add_argument("term")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig(
            fuel=args.fuel,
            max_universe=args.max_universe,
            max_label_size=args.label_size,
            max_term_size=args.term_size,
            samples=args.samples,
            seed=args.seed,
            json=args.json,
        )
        code, results, lines = COMMANDS[args.command](args, cfg)
    except (UsageError, ParseError, SignatureError, SortError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    if cfg.json:
        doc = {"command": args.command, "config": cfg.as_dict(), "results": results}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
