"""Command-line front end: ``lambda-eq {check,normalize,star,model-eval} FILE``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .checker import CheckError, Checker
from .parser import Assume, CheckStar, Def, Normalize, SourceFile, parse_file, print_term
from .rewrite import FuelExhausted, default_fuel
from .session import DeclResult, FileReport, check_file
from .stratified import StratifiedChecker, Unstratifiable, elaborate_judgment
from .syntax import Context, name, relaxed_gc, subst, uses_plain_star

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

WARNING = (
    "warning: checking with * : *, which is inconsistent (every type is inhabited); "
    "use --stratified for the universe hierarchy"
)


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _carriers(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError("expected comma-separated sizes, e.g. 0,1,2,3") from err
    if not sizes or any(s < 0 for s in sizes):
        raise argparse.ArgumentTypeError("carrier sizes must be non-negative")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="a .leq source file")
    common.add_argument("--stratified", action="store_true", help="use the universe hierarchy *0 : *1 : ...")
    common.add_argument("--fuel", type=_positive, default=None, help="reduction step budget (default 100000 or $LAMBDA_EQ_FUEL)")
    common.add_argument("--max-level", type=int, default=3, help="highest level tried by level elaboration")
    common.add_argument("--trace", action="store_true", help="print every reduction step")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--jobs", type=_positive, default=1, help="check declarations in parallel")

    p = argparse.ArgumentParser(prog="lambda-eq", description="Type checker for a type theory with extensional type equality.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", parents=[common], help="check every declaration")
    c.add_argument("--elaborate", action="store_true", help="with --stratified, assign levels to bare *")
    n = sub.add_parser("normalize", parents=[common], help="print normal forms of definitions")
    n.add_argument("--def", dest="defn", help="only this definition")
    s = sub.add_parser("star", parents=[common], help="star-translate a definition and re-check it")
    s.add_argument("--def", dest="defn", required=True, help="the definition to translate")
    m = sub.add_parser("model-eval", parents=[common], help="check definitions in the finite set model")
    m.add_argument("--carriers", type=_carriers, default=[0, 1, 2, 3], help="sizes of the sets *0 ranges over")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"error: cannot read {args.file}: {err.strerror or err}", file=sys.stderr)
        return EXIT_IO
    src = parse_file(text, strict=False)
    fuel = args.fuel or default_fuel()
    if not args.stratified and args.command != "model-eval":
        print(WARNING, file=sys.stderr)
    with relaxed_gc():
        match args.command:
            case "check":
                report = _check(src, args, fuel)
            case "normalize":
                report = _normalize(src, args, fuel)
            case "star":
                report = _star(src, args, fuel)
            case "model-eval":
                report = _model_eval(src, args, fuel)
    _emit(report, args.json)
    return EXIT_OK if report.ok else EXIT_FAIL


def _checker(args, fuel: int) -> Checker:
    return StratifiedChecker(fuel) if args.stratified else Checker(fuel)


def _check(src: SourceFile, args, fuel: int) -> FileReport:
    problems: dict[str, str] = {}
    if args.stratified and args.elaborate:
        src, problems = _elaborate_file(src, args.max_level)
    report = check_file(src, _checker(args, fuel), args.trace, args.jobs)
    for r in report.results:
        if r.kind in ("def", "assume") and r.name in problems and not r.ok:
            r.error = problems[r.name]
    return report


def _elaborate_file(src: SourceFile, max_level: int) -> tuple[SourceFile, dict[str, str]]:
    """Give levels to bare * in each declaration, keeping the file's shape."""
    ctx = Context()
    out = []
    bodies = {}
    problems: dict[str, str] = {}
    for d in src.declarations:
        match d:
            case Assume(n, ty) if uses_plain_star(ty):
                try:
                    c2, ty2, _ = elaborate_judgment(ctx, subst(ty, bodies), None, max_level=max_level)
                    d = Assume(n, ty2, d.line)
                except (Unstratifiable, CheckError) as err:
                    problems[n] = f"cannot assign levels: {err}"
                ctx = ctx.extend(name(n), d.type)
            case Assume(n, ty):
                ctx = ctx.extend(name(n), ty)
            case Def(n, ty, body) if uses_plain_star(ty) or uses_plain_star(body):
                try:
                    _, body2, ty2 = elaborate_judgment(ctx, subst(body, bodies), subst(ty, bodies), max_level=max_level)
                    d = Def(n, ty2, body2, d.line)
                except (Unstratifiable, CheckError) as err:
                    problems[n] = f"cannot assign levels: {err}"
                bodies[name(n)] = d.body
            case Def(n, _, body):
                bodies[name(n)] = body
        out.append(d)
    return SourceFile(tuple(out), src.errors), problems


def _only(src: SourceFile, defn: str | None) -> SourceFile:
    """Keep the declarations ``defn`` needs plus a directive for it."""
    if defn is None:
        return src
    out = []
    for d in src.declarations:
        if isinstance(d, (Def, Assume)):
            out.append(d)
            if d.name == defn:
                break
    return SourceFile(tuple(out), src.errors)


def _normalize(src: SourceFile, args, fuel: int) -> FileReport:
    src = _only(src, args.defn)
    names = [d.name for d in src.declarations if isinstance(d, Def) and (args.defn in (None, d.name))]
    if args.defn and args.defn not in names:
        return FileReport([DeclResult(args.defn, "normalize", False, error="no such definition")], [])
    decls = tuple(src.declarations) + tuple(Normalize(n) for n in names)
    report = check_file(SourceFile(decls, src.errors), _checker(args, fuel), args.trace, args.jobs)
    keep = [r for r in report.results if r.kind == "normalize" or not r.ok]
    return FileReport(keep, report.parse_errors, report.system)


def _star(src: SourceFile, args, fuel: int) -> FileReport:
    src = _only(src, args.defn)
    if not any(isinstance(d, Def) and d.name == args.defn for d in src.declarations):
        return FileReport([DeclResult(args.defn, "checkstar", False, error="no such definition")], [])
    decls = tuple(src.declarations) + (CheckStar(args.defn),)
    report = check_file(SourceFile(decls, src.errors), _checker(args, fuel), args.trace, 1)
    keep = [r for r in report.results if r.kind == "checkstar" or not r.ok]
    return FileReport(keep, report.parse_errors, report.system)


def _model_eval(src: SourceFile, args, fuel: int) -> FileReport:
    from .strictmodel import FragmentExceeded, Model, UnsupportedTerm, check_soundness, ordinal

    model = Model(tuple(ordinal(n) for n in args.carriers))
    ctx = Context()
    bodies = {}
    results: list[DeclResult] = []
    for d in src.declarations:
        if isinstance(d, Assume):
            ctx = ctx.extend(name(d.name), subst(d.type, bodies))
            continue
        if not isinstance(d, Def):
            continue
        body, ty = subst(d.body, bodies), subst(d.type, bodies)
        bodies[name(d.name)] = body
        try:
            c2, m2, a2 = elaborate_judgment(ctx, body, ty, max_level=args.max_level, checker=StratifiedChecker(fuel))
            rep = check_soundness(c2, m2, a2, model)
        except (Unstratifiable, FragmentExceeded, UnsupportedTerm) as err:
            results.append(DeclResult(d.name, "model", True, skipped=f"outside the finite fragment: {err}"))
            continue
        except (CheckError, FuelExhausted) as err:
            results.append(DeclResult(d.name, "model", False, error=str(err)))
            continue
        stats = {"environments": rep.environments}
        if rep.ok:
            results.append(DeclResult(d.name, "model", True, type=print_term(a2), stats=stats, detail=[f"holds in {rep.environments} environments"]))
        else:
            results.append(DeclResult(d.name, "model", False, error=str(rep.violations[0]), stats=stats))
    return FileReport(results, [str(e) for e in src.errors], "strict-model")


def _emit(report: FileReport, as_json: bool) -> None:
    if as_json:
        print(report.to_json())
        return
    for line in report.lines():
        print(line)
    s = report.summary()
    tail = f", {s['skipped']} skipped" if s["skipped"] else ""
    tail += f", {s['parse_errors']} parse errors" if s["parse_errors"] else ""
    print(f"{s['passed']} passed, {s['failed']} failed{tail}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
