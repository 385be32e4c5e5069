"""``qwv`` command line: run programs, check triples and outlines, run the examples and the rule self-test.

Exit codes: 0 success/valid, 1 invalid or failed checks, 2 parse error,
3 other semantic error, 4 a while loop did not converge.
"""

from __future__ import annotations

import argparse
import ast
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import casestudies, config as config_mod, dirac, hoare, semantics
from .assertion import format_operator, parse_assertion
from .config import Config
from .errors import (NoConvergence, QWhileSyntaxError, QWhileTypeError, QWVError, StepFailed, UnknownGate,
                     UnknownVariable)
from .outline import ProofOutline, check_outline
from .parser import parse_with_sidecar, pretty

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_SEMANTIC, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4


class _ParseFailure(Exception):
    def __init__(self, exc: Exception):
        super().__init__(str(exc))
        self.exc = exc


def _config(args) -> Config:
    tol = getattr(args, "tol", None)
    return Config.from_env(eq_tol=tol, psd_tol=tol, while_kmax=getattr(args, "while_kmax", None),
                           max_dim=getattr(args, "max_dim", None), seed=getattr(args, "seed", None))


def _load_program(args):
    try:
        source = Path(args.program).read_text()
        return parse_with_sidecar(source, args.sidecar)
    except (QWhileSyntaxError, QWhileTypeError, UnknownGate, UnknownVariable, json.JSONDecodeError) as exc:
        raise _ParseFailure(exc) from exc


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False) if args.json else text)


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if abs(z.imag) < 1e-12:
        return f"{z.real: .6f}"
    return f"{z.real: .6f}{z.imag:+.6f}i"


def _matrix_table(m: np.ndarray) -> str:
    return "\n".join("  " + "  ".join(_fmt_complex(z) for z in row) for row in m)


# -- run -------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args)
    table, program = _load_program(args)
    if args.input:
        try:
            rho = parse_assertion(args.input, table)
        except (QWhileSyntaxError, UnknownVariable) as exc:
            raise _ParseFailure(exc) from exc
        if rho.is_ket:
            rho = dirac.density(rho)
        rest = [dirac.projector(v, v.qtype.decode(0)) for v in table.variables() if not set(v.labels) & set(rho.out)]
        if rest:
            rho = dirac.tensor(rho, dirac.big_tensor(rest, table))
    else:
        rho = dirac.big_tensor([dirac.projector(v, v.qtype.decode(0)) for v in table.variables()], table)
    out = semantics.evolve(program, rho, cfg)
    q = semantics.quality(semantics.denote(program, table, None, cfg), cfg.psd_tol)
    quality = {"cp": q.is_cp, "trace_nonincreasing": q.is_trace_nonincreasing,
               "trace_preserving": q.is_trace_preserving, "choi_min_eig": q.choi_min_eig,
               "trace_defect": q.trace_defect}
    names = [table.name(l) for l in out.out]
    payload = {"labels": names, "state": format_operator(out), "trace": out.trace().real,
               "matrix": [[[z.real, z.imag] for z in row] for row in out.matrix], "quality": quality}
    text = "\n".join([f"output state on {', '.join(names)} (trace {out.trace().real:.12g}):",
                      _matrix_table(out.matrix),
                      "quality: " + ", ".join(f"{k}={v if isinstance(v, bool) else f'{v:.3g}'}"
                                              for k, v in quality.items())])
    _emit(args, payload, text)
    return EXIT_OK


# -- check -----------------------------------------------------------------------

def read_triple_spec(text: str) -> dict:
    """``pre``/``post``/``mode``/``saturated`` from JSON or from ``key: value`` lines."""
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
    else:
        data = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise QWhileSyntaxError(f"expected 'key: value' in the triple file", n, 1)
            data[key.strip()] = value.strip()
    missing = {"pre", "post"} - data.keys()
    if missing:
        raise QWhileSyntaxError(f"triple file lacks {', '.join(sorted(missing))}")
    sat = data.get("saturated", False)
    data["saturated"] = sat if isinstance(sat, bool) else str(sat).lower() in ("1", "true", "yes")
    data.setdefault("mode", "total")
    if data["mode"] not in ("total", "partial"):
        raise QWhileSyntaxError(f"mode must be total or partial, not {data['mode']!r}")
    return data


def cmd_check(args) -> int:
    cfg = _config(args)
    table, program = _load_program(args)
    try:
        spec = read_triple_spec(Path(args.spec).read_text())
        pre, post = parse_assertion(spec["pre"], table), parse_assertion(spec["post"], table)
    except (QWhileSyntaxError, UnknownVariable, json.JSONDecodeError) as exc:
        raise _ParseFailure(exc) from exc
    j = hoare.Judgment(pre, program, post, spec["mode"], spec["saturated"])
    v = hoare.check_valid(j, cfg)
    diagnostics = []
    if not v.valid:
        diagnostics.append("saturation residual too large" if v.saturated else
                           "pre-condition is not below the weakest pre-condition")
    verdict = {"status": "Valid" if v.valid else "Invalid", "mode": v.mode, "saturated": v.saturated,
               "slack": v.slack, "residual": v.residual, "diagnostics": diagnostics,
               "weakest": format_operator(v.weakest)}
    text = f"{verdict['status']} [{j.flag()}] slack {v.slack:.6g} residual {v.residual:.3g}"
    if diagnostics:
        text += "\n  " + "\n  ".join(diagnostics)
    _emit(args, verdict, text)
    return EXIT_OK if v.valid else EXIT_INVALID


# -- outline ---------------------------------------------------------------------

def cmd_outline(args) -> int:
    cfg = _config(args)
    table, program = _load_program(args)
    try:
        outline = ProofOutline.from_json(args.outline, program, table)
    except (json.JSONDecodeError, StepFailed) as exc:
        raise _ParseFailure(exc) from exc
    report = check_outline(outline, program, table, cfg, strict=False)
    payload = {"ok": report.ok, "steps": [{"index": r.index, "rule": r.rule, "ok": r.ok, "reason": r.reason}
                                          for r in report.results]}
    summary = f"{sum(r.ok for r in report.results)}/{len(report.results)} steps pass"
    _emit(args, payload, "\n".join(report.lines() + [summary]))
    return EXIT_OK if report.ok else EXIT_INVALID


# -- examples --------------------------------------------------------------------

def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _example_params(args) -> dict:
    params: dict = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise _ParseFailure(ValueError(f"--param expects key=value, got {item!r}"))
        params[key.strip()] = _literal(value.strip())
    if args.G:
        params["moduli"] = tuple(int(p) for p in args.G.replace(" ", "").split(","))
    if args.H is not None:
        gens = _literal(args.H) if args.H.strip() else ()
        if isinstance(gens, int):
            gens = ((gens,),)
        elif gens and isinstance(gens, tuple) and all(isinstance(g, int) for g in gens):
            gens = (gens,)
        params["generators"] = tuple(tuple(g) if isinstance(g, (tuple, list)) else (g,) for g in gens)
    return params


def _hsp_summary(study: casestudies.CaseStudy) -> list[str]:
    grp, hperp = study.data["group"], study.data["H_perp"]
    probs = study.data["probabilities"]
    lines = [f"  H⊥ = {{{', '.join(str(grp.coords(g)) for g in hperp.elements)}}}"]
    lines += [f"  Pr{grp.coords(g)} = {probs[g]:.6g}" for g in grp.elements()]
    return lines


def emit_example(study: casestudies.CaseStudy, directory: Path) -> list[Path]:
    """Write the program (and HSP outline) so that ``run``/``check``/``outline`` can read them back."""
    directory.mkdir(parents=True, exist_ok=True)
    text, sidecar = pretty(study.program, study.table)
    written = [directory / f"{study.name}.qw"]
    written[0].write_text(text)
    if sidecar:
        written.append(directory / f"{study.name}.sidecar.json")
        written[-1].write_text(json.dumps(sidecar))
    for k, t in enumerate(study.triples):
        j = t.judgment
        p = directory / f"{study.name}.triple{k}.json"
        p.write_text(json.dumps({"label": t.label, "pre": format_operator(j.pre), "post": format_operator(j.post),
                                 "mode": j.mode, "saturated": j.saturated}, ensure_ascii=False))
        written.append(p)
    if "outline" in study.data:
        written.append(directory / f"{study.name}.outline.json")
        written[-1].write_text(json.dumps(study.data["outline"], indent=2, ensure_ascii=False))
    return written


def cmd_examples(args) -> int:
    cfg = _config(args)
    names = list(casestudies.EXAMPLES) if args.all or not args.ids else args.ids
    unknown = [n for n in names if n not in casestudies.EXAMPLES]
    if unknown:
        raise _ParseFailure(ValueError(f"unknown example(s) {', '.join(unknown)}; "
                                       f"choose from {', '.join(casestudies.EXAMPLES)}"))
    params = _example_params(args)
    if params and len(names) != 1:
        raise _ParseFailure(ValueError("parameter overrides need exactly one example id"))
    per_name = {names[0]: params} if params else {}
    if args.emit:
        for n in names:
            for p in emit_example(casestudies.build(n, **per_name.get(n, {})), Path(args.emit)):
                print(f"wrote {p}", file=sys.stderr)
    reports = casestudies.run_suite(names, per_name, args.jobs, cfg)
    lines = []
    for r in reports:
        lines.append(f"{'PASS' if r.ok else 'FAIL'} {r.name} {r.params} ({r.seconds:.2f}s)")
        if r.name == "hsp" and r.ok:
            lines += _hsp_summary(casestudies.build("hsp", **per_name.get("hsp", {})))
        for c in r.checks:
            if args.verbose or not c.ok:
                lines.append(f"  {'ok  ' if c.ok else 'FAIL'} {c.label}: {c.detail}")
    passed = sum(r.ok for r in reports)
    lines.append(f"{passed}/{len(reports)} pass")
    payload = {"passed": passed, "total": len(reports), "examples": [
        {"name": r.name, "params": r.params, "ok": r.ok, "seconds": r.seconds,
         "checks": [{"label": c.label, "ok": c.ok, "detail": c.detail} for c in r.checks]} for r in reports]}
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if passed == len(reports) else EXIT_INVALID


# -- rules self-test -------------------------------------------------------------

def cmd_rules_selftest(args) -> int:
    cfg = _config(args)
    rules = args.rules or None
    stats = hoare.fuzz_all(rules, trials=args.trials, seed=cfg.seed, jobs=args.jobs, out_dir=args.out)
    lines = [f"{'PASS' if s.ok else 'FAIL'} {s.rule:10s} {s.passed}/{s.trials} min slack {s.min_slack:.3g} "
             f"max residual {s.max_residual:.3g} ({s.seconds:.2f}s)" + "".join(f"\n  counterexample: {p}"
                                                                          for p in s.counterexamples)
             for s in stats]
    total = sum(len(s.counterexamples) for s in stats)
    lines.append(f"{len(stats)} rules, {args.trials} trials each, {total} counterexamples")
    payload = {"rules": [{"rule": s.rule, "trials": s.trials, "passed": s.passed, "min_slack": s.min_slack,
                          "max_residual": s.max_residual, "counterexamples": list(s.counterexamples)}
                         for s in stats], "counterexamples": total}
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if total == 0 else EXIT_INVALID


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="equality and positivity tolerance")
    common.add_argument("--while-kmax", type=int, help="iteration limit for while loops")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--max-dim", type=int, help="largest Hilbert-space dimension to simulate")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for suite commands")

    p = argparse.ArgumentParser(prog="qwv", description="quantum while-programs: simulate and verify Hoare triples")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate a program on an input state")
    r.add_argument("program")
    r.add_argument("--input", help="input state (ket or density operator); default all-zero basis state")
    r.add_argument("--sidecar", help="gate/measurement sidecar JSON")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", parents=[common], help="decide a triple semantically")
    c.add_argument("program")
    c.add_argument("spec", help="file with pre, post, mode, saturated")
    c.add_argument("--sidecar")
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("outline", parents=[common], help="check a proof outline step by step")
    o.add_argument("program")
    o.add_argument("outline")
    o.add_argument("--sidecar")
    o.set_defaults(func=cmd_outline)

    e = sub.add_parser("examples", parents=[common], help="verify built-in case studies")
    e.add_argument("ids", nargs="*", help=f"any of {', '.join(casestudies.EXAMPLES)}")
    e.add_argument("--all", action="store_true")
    e.add_argument("--param", action="append", metavar="KEY=VALUE", help="builder keyword (Python literal)")
    e.add_argument("--G", help="hsp: group moduli, e.g. 2,2")
    e.add_argument("--H", help='hsp: subgroup generators, e.g. "(1,1)" or "[(1,0),(0,1)]"')
    e.add_argument("--emit", metavar="DIR", help="also write program, sidecar, triples and outline files")
    e.add_argument("-v", "--verbose", action="store_true", help="list every check")
    e.set_defaults(func=cmd_examples)

    s = sub.add_parser("rules-selftest", parents=[common], help="randomized soundness test of the proof rules")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--rules", nargs="*", help="rule ids (default: all)")
    s.add_argument("--out", help="directory for counterexample files")
    s.set_defaults(func=cmd_rules_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_mod.set_default(_config(args))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except _ParseFailure as exc:
        print(f"parse error: {exc.exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (QWhileSyntaxError, QWhileTypeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (QWVError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
