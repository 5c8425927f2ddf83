"""Checking whole ``.leq`` files: definitions, assumptions and directives."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .checker import CheckError, Checker, Derivation
from .parser import Assume, CheckStar, Def, Normalize, SourceFile, print_term
from .rewrite import FuelExhausted, MissingAnnotation, RedexKind, normalize_counted
from .syntax import Context, Term, VarName, free_vars, name, relaxed_gc, subst


@dataclass
class DeclResult:
    name: str
    kind: str
    ok: bool
    type: str | None = None
    error: str | None = None
    level: int | None = None
    derivation: Derivation | None = field(default=None, repr=False)
    stats: dict[str, Any] = field(default_factory=dict)
    detail: list[str] = field(default_factory=list)
    line: int = 0
    skipped: str | None = None

    @property
    def label(self) -> str:
        return self.name if self.kind in ("def", "assume", "model") else f"#{self.kind} {self.name}"

    @property
    def verdict(self) -> str:
        return "fail" if not self.ok else "skip" if self.skipped else "ok"

    def report_lines(self) -> list[str]:
        if not self.ok:
            return [f"FAIL {self.label} -- {self.error}"]
        if self.skipped:
            return [f"SKIP {self.label} -- {self.skipped}"]
        head = f"OK {self.label} : {self.type}"
        if self.level is not None:
            head += f"  @ *{self.level}"
        return [head, *("   " + d for d in self.detail)]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind, "verdict": self.verdict, "type": self.type}
        if self.skipped is not None:
            out["skipped"] = self.skipped
        if self.error is not None:
            out["error"] = self.error
        if self.level is not None:
            out["level"] = self.level
        if self.stats:
            out["stats"] = self.stats
        return out


@dataclass
class FileReport:
    results: list[DeclResult]
    parse_errors: list[str] = field(default_factory=list)
    system: str = "lambda-eq"

    @property
    def ok(self) -> bool:
        return not self.parse_errors and all(r.ok for r in self.results)

    def __getitem__(self, key: str) -> DeclResult:
        for r in self.results:
            if r.label == key or (r.kind in ("def", "assume") and r.name == key):
                return r
        raise KeyError(key)

    def lines(self) -> list[str]:
        out = [f"FAIL parse -- {e}" for e in self.parse_errors]
        for r in self.results:
            out += r.report_lines()
        return out

    def summary(self) -> dict[str, int]:
        verdicts = [r.verdict for r in self.results]
        return {
            "passed": verdicts.count("ok"),
            "failed": verdicts.count("fail"),
            "skipped": verdicts.count("skip"),
            "parse_errors": len(self.parse_errors),
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "system": self.system,
                "declarations": [r.to_json() for r in self.results],
                "parse_errors": self.parse_errors,
                "summary": self.summary(),
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# jobs

@dataclass(frozen=True)
class _Job:
    decl: Def | Assume | CheckStar | Normalize
    ctx: Context
    term: Term | None
    type: Term | None


def _run_job(job: _Job, checker: Checker, trace: bool) -> DeclResult:
    d = job.decl
    if isinstance(d, (CheckStar, Normalize)) and job.term is None:
        return DeclResult(d.name, _kind(d), False, error=f"{d.name} is an assumption, not a definition", line=d.line)
    try:
        with relaxed_gc():
            match d:
                case Assume():
                    ty, level, der = checker.infer_type(job.ctx, job.type)
                    return _ok(d, "assume", print_term(ty), der, level if _stratified(checker) else None)
                case Def():
                    ty, level, _ = checker.infer_type(job.ctx, job.type)
                    _, der = checker.check(job.ctx, job.term, ty)
                    return _ok(d, "def", print_term(ty), der, level if _stratified(checker) else None)
                case Normalize():
                    return _normalize(job, checker, trace)
                case CheckStar():
                    return _checkstar(job, checker)
    except (CheckError, FuelExhausted, MissingAnnotation) as err:
        return DeclResult(d.name, _kind(d), False, error=_describe(err), line=d.line)
    except Exception as err:  # the theorem runner and star translation raise their own kinds
        return DeclResult(d.name, _kind(d), False, error=f"{type(err).__name__}: {err}", line=d.line)
    raise AssertionError(d)


def _stratified(checker: Checker) -> bool:
    return checker.system != "lambda-eq"


def _kind(d) -> str:
    return {Def: "def", Assume: "assume", CheckStar: "checkstar", Normalize: "normalize"}[type(d)]


def _describe(err: Exception) -> str:
    if isinstance(err, FuelExhausted):
        return f"fuel exhausted after {err.steps} steps"
    return str(err)


def _ok(d, kind: str, ty: str, der: Derivation, level: int | None) -> DeclResult:
    return DeclResult(d.name, kind, True, type=ty, level=level, derivation=der, stats={"derivation_size": der.size()}, line=d.line)


def _normalize(job: _Job, checker: Checker, trace: bool) -> DeclResult:
    steps_seen: list[str] = []

    def record(kind: RedexKind, redex: Term) -> None:
        steps_seen.append(f"{len(steps_seen) + 1}. {kind.name}: {print_term(redex)}")

    ty, _, _ = checker.infer_type(job.ctx, job.type)
    term, _ = checker.check(job.ctx, job.term, ty)  # elaboration fills congruence annotations
    nf, steps = normalize_counted(term, checker.fuel, record if trace else None)
    detail = steps_seen + [f"~> {print_term(nf)}  ({steps} steps)"]
    return DeclResult(
        job.decl.name, "normalize", True, type=print_term(job.type), stats={"steps": steps, "normal_form": print_term(nf)},
        detail=detail, line=job.decl.line,
    )


def _checkstar(job: _Job, checker: Checker) -> DeclResult:
    from .startrans import run_extensionality_theorem

    res = run_extensionality_theorem(job.ctx, job.term, job.type, checker)
    entries = ", ".join(f"{x} : {print_term(a)}" for x, a in res.context)
    size_in, size_out = res.size_stats
    stats = {"derivation_size": res.derivation.size(), "input_size": size_in, "output_size": size_out}
    detail = [
        f"{entries} |- {print_term(res.subject)} : {print_term(res.stated_type)}",
        f"derivation nodes: {stats['derivation_size']}, term size {size_in} -> {size_out}",
    ]
    return DeclResult(
        job.decl.name, "checkstar", True, type=print_term(res.stated_type), derivation=res.derivation,
        stats=stats, detail=detail, line=job.decl.line,
    )


def _worker(args: tuple[_Job, Checker, bool]) -> DeclResult:
    res = _run_job(*args)
    res.derivation = None  # keep inter-process traffic small
    return res


# ---------------------------------------------------------------------------
# driver


def _plan(src: SourceFile) -> tuple[list[_Job], dict[str, set[str]]]:
    """Inline definitions, build each declaration's context, and record dependencies."""
    ctx = Context()
    bodies: dict[VarName, Term] = {}
    known: set[VarName] = set()
    defs: dict[str, tuple[Context, Term, Term]] = {}
    deps: dict[str, set[str]] = {}
    jobs: list[_Job] = []
    for d in src.declarations:
        match d:
            case Assume(n, ty):
                ty2 = subst(ty, bodies) if bodies else ty
                jobs.append(_Job(d, ctx, None, ty2))
                ctx = ctx.extend(name(n), ty2)
                deps[n] = _deps(ty, known, deps)
                known.add(name(n))
            case Def(n, ty, body):
                ty2 = subst(ty, bodies) if bodies else ty
                body2 = subst(body, bodies) if bodies else body
                jobs.append(_Job(d, ctx, body2, ty2))
                bodies[name(n)] = body2
                defs[n] = (ctx, body2, ty2)
                deps[n] = _deps(ty, known, deps) | _deps(body, known, deps)
                known.add(name(n))
            case CheckStar(n) | Normalize(n):
                if n in defs:
                    c, body2, ty2 = defs[n]
                    jobs.append(_Job(d, c, body2, ty2))
                else:
                    jobs.append(_Job(d, ctx, None, None))
    return jobs, deps


def _deps(t: Term, known: set[VarName], deps: dict[str, set[str]]) -> set[str]:
    out: set[str] = set()
    for x in free_vars(t):
        if x in known:
            out.add(str(x))
            out |= deps.get(str(x), set())
    return out


def check_file(src: SourceFile, checker: Checker | None = None, trace: bool = False, jobs: int = 1) -> FileReport:
    """Check every declaration; a failure does not stop later declarations."""
    checker = checker or Checker()
    plan, deps = _plan(src)
    if jobs > 1 and len(plan) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, [(j, checker, trace) for j in plan]))
    else:
        results = [_run_job(j, checker, trace) for j in plan]
    failed = {r.name for r in results if r.kind in ("def", "assume") and not r.ok}
    for r in results:
        directive = r.kind in ("checkstar", "normalize")
        bad = sorted(({r.name} if directive else deps.get(r.name, set())) & failed)
        if bad:
            # report the root cause rather than the cascade
            r.ok, r.error = False, f"depends on failed declaration {', '.join(bad)}"
    errors = [str(e) for e in src.errors]
    return FileReport(results, errors, checker.system)
