"""``nelab`` command line.

Exit codes: 0 holds, 1 fails, 2 undecided, 3 usage error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__, properties as props, spaces
from .calculus import parse_function
from .report import FAILS, HOLDS, UNDECIDED, CheckReport, TIMING_KEY, write_atomic
from .spaces import SpaceError

CHECKS = ("daugavet", "omega", "omega-group", "f-shape", "lemma43", "tsquare", "geom",
          "slice", "denting", "hull", "badproj", "dual", "spread", "scalar")
EXIT = {HOLDS: 0, FAILS: 1, UNDECIDED: 2}
EXIT_USAGE, EXIT_IO = 3, 4
DEFAULT_SEED = 42


class UsageError(ValueError):
    pass


def _scalar(text: str):
    try:
        z = complex(text.strip().replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed scalar {text!r}; use e.g. 2, -0.5, 1+2i") from None
    return z.real if z.imag == 0 else z


def _vector(text: str):
    return [_scalar(t) for t in text.split(",")]


def _fmt(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


@dataclass
class RunConfig:
    check: str
    space: str = "l2(2)"
    field: str = "real"
    omega: complex | float | None = None
    a: complex | float | None = None
    b: complex | float | None = None
    g: str | None = None
    g0: complex | float | None = None
    eps: float | None = None
    alpha: float | None = None
    lam: complex | float | None = None
    sign: str | None = None
    x: list | None = None
    f: list | None = None
    t_grid: list | None = None
    samples: int = 1000
    seed: int = DEFAULT_SEED
    tol: float = 1e-9
    output: str | None = None
    format: str = "json"
    jobs: int = 1

    def render(self) -> list[str]:
        """argv that parses back to this config."""
        argv = ["check", self.check]
        for fd in fields(self):
            if fd.name == "check":
                continue
            v = getattr(self, fd.name)
            if v is None:
                continue
            flag = "--" + fd.name.replace("_", "-")
            if isinstance(v, list):
                argv += [flag, ",".join(_fmt(e) for e in v)]
            elif fd.name in ("omega", "a", "b", "g0", "lam", "eps", "alpha", "tol"):
                argv += [flag, _fmt(v)]
            else:
                argv += [flag, str(v)]
        return argv


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nelab", description="Norm-equality checks on concrete spaces.")
    p.add_argument("--version", action="version", version=f"nelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run one checker")
    c.add_argument("check", choices=CHECKS)
    c.add_argument("--space", default="l2(2)", help="space DSL, e.g. linf(3), sum2(l1(2),l2(2))")
    c.add_argument("--field", default="real", choices=("real", "complex"))
    for name in ("omega", "a", "b", "g0", "lam"):
        c.add_argument(f"--{name}", type=_scalar)
    c.add_argument("--g", help="poly:a0,a1,... or exp|sin|cos|sinh|cosh")
    c.add_argument("--eps", type=float)
    c.add_argument("--alpha", type=float)
    c.add_argument("--sign", choices=("+", "-"))
    c.add_argument("--x", type=_vector, help="comma-separated vector")
    c.add_argument("--f", type=_vector, help="comma-separated functional")
    c.add_argument("--t-grid", type=_vector)
    _common(c)
    s = sub.add_parser("suite", help="run the acceptance battery")
    _common(s)
    return p


def _common(p):
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None, help="default 42, or $NELAB_SEED")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--output", help="report path (stdout when omitted)")
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.add_argument("--jobs", type=int, default=1)


def _default_seed() -> int:
    env = os.environ.get("NELAB_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NELAB_SEED={env!r} is not an integer") from None


def _glue_values(argv: list[str]) -> list[str]:
    # every flag takes exactly one value; gluing lets values such as
    # "-0.2,0.2" or "-" through without being mistaken for options
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and tok not in ("--version", "--help") and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_args(argv) -> RunConfig:
    """Validate argv into a :class:`RunConfig`; raises :class:`UsageError`."""
    parser = _build_parser()
    parser.exit = _raise_exit  # type: ignore[method-assign]
    parser.error = _raise_error  # type: ignore[method-assign]
    for sp in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        sp.exit = _raise_exit
        sp.error = _raise_error
    ns = parser.parse_args(_glue_values(list(argv)))
    seed = ns.seed if ns.seed is not None else _default_seed()
    if ns.samples < 0:
        raise UsageError("--samples must be >= 0")
    if ns.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if ns.tol < 0:
        raise UsageError("--tol must be >= 0")
    if ns.command == "suite":
        return RunConfig(check="suite", space="", samples=ns.samples, seed=seed, tol=ns.tol,
                         output=ns.output, format=ns.format, jobs=ns.jobs)
    cfg = RunConfig(
        check=ns.check, space=ns.space, field=ns.field, omega=ns.omega, a=ns.a, b=ns.b,
        g=ns.g, g0=ns.g0, eps=ns.eps, alpha=ns.alpha, lam=ns.lam, sign=ns.sign, x=ns.x,
        f=ns.f, t_grid=ns.t_grid, samples=ns.samples, seed=seed, tol=ns.tol,
        output=ns.output, format=ns.format, jobs=ns.jobs)
    _validate(cfg)
    return cfg


def _raise_exit(status=0, message=None):
    if status == 0:
        if message:
            sys.stdout.write(message)
        raise SystemExit(0)
    raise UsageError((message or "").strip())


def _raise_error(message):
    raise UsageError(message)


def _space(cfg: RunConfig):
    try:
        return spaces.parse_space(cfg.space, cfg.field)
    except SpaceError as exc:
        raise UsageError(str(exc)) from None


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"check {cfg.check} requires {flags}")


def _validate(cfg: RunConfig) -> None:
    space = _space(cfg)
    for name in ("omega", "a", "b", "g0", "lam"):
        v = getattr(cfg, name)
        if v is not None and isinstance(v, complex) and not space.is_complex:
            raise UsageError(f"--{name} {_fmt(v)} is complex but --field is real")
    if cfg.omega is not None and abs(abs(cfg.omega) - 1) > 1e-12:
        raise UsageError(f"--omega {_fmt(cfg.omega)} is not unimodular (|omega| = {abs(cfg.omega)!r})")
    if cfg.g is not None:
        try:
            parse_function(cfg.g)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    for name in ("x", "f"):
        v = getattr(cfg, name)
        if v is not None and len(v) != space.dim:
            raise UsageError(f"--{name} has {len(v)} entries, space {space.dsl} has dimension {space.dim}")
    req = {"omega": ("omega",), "f-shape": ("a", "b"), "lemma43": ("g0",), "tsquare": ("sign",),
           "geom": ("x", "f", "eps"), "slice": ("f", "alpha"), "denting": ("x",),
           "hull": ("x", "eps"), "spread": ("g",), "scalar": ("g",)}
    _need(cfg, *req.get(cfg.check, ()))
    if cfg.check == "tsquare" and space.is_complex:
        raise UsageError("check tsquare needs --field real")


def _vec(space, v):
    return None if v is None else np.asarray(v, dtype=space.dtype)


def execute(cfg: RunConfig) -> CheckReport:
    """Run the configured check and return its report."""
    space = _space(cfg)
    kw = dict(samples=cfg.samples, seed=cfg.seed, tol=cfg.tol, jobs=cfg.jobs)
    c = cfg.check
    x, f = _vec(space, cfg.x), _vec(space, cfg.f)
    if c == "daugavet":
        return props.check_daugavet(space, **kw)
    if c == "omega":
        return props.check_omega(space, cfg.omega, **kw)
    if c == "omega-group":
        return _group_report(space, cfg)
    if c == "f-shape":
        grid = tuple(cfg.t_grid) if cfg.t_grid else (0, 0.5, 1, 5, 50)
        return props.fixture_prop_f_shape(space, cfg.a, cfg.b, grid)
    if c == "lemma43":
        return props.fixture_lemma43(space, cfg.g0, tuple(cfg.t_grid) if cfg.t_grid else None)
    if c == "tsquare":
        probes = None
        if x is not None and f is not None:
            probes = [(f, x)]
        return props.check_tsquare(space, cfg.sign, probes=probes, **kw)
    if c == "geom":
        return _geom_report(space, cfg, x, f)
    if c == "slice":
        return _slice_report(space, cfg, f)
    if c == "denting":
        grid = (cfg.eps,) if cfg.eps is not None else (0.5, 0.1, 0.01)
        return props.check_denting(space, x, grid)
    if c == "hull":
        dirs = [f] if f is not None else None
        return props.check_hull(space, x, cfg.eps, dirs, tol=cfg.tol, seed=cfg.seed)
    if c == "badproj":
        return props.check_bad_projections(space, **kw)
    if c == "dual":
        return props.check_dual_transfer(space, 1.0 if cfg.omega is None else cfg.omega, **kw)
    if c == "spread":
        return props.spread_report(parse_function(cfg.g), space, 1.0 if cfg.lam is None else cfg.lam,
                                   tol=cfg.tol)
    if c == "scalar":
        return props.scalar_cases(parse_function(cfg.g), None, cfg.field)
    raise UsageError(f"unknown check {c!r}")


def _group_report(space, cfg) -> CheckReport:
    import time
    start = time.perf_counter()
    grp = props.detect_omega_group(space, samples=min(cfg.samples, 32), seed=cfg.seed,
                                   tol=cfg.tol, jobs=cfg.jobs)
    verdict = UNDECIDED if grp.classification == "undecided" else HOLDS
    return CheckReport(
        check="omega-group", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=0.0, witnesses=[], params={
            "classification": grp.classification, "n": grp.n, "coarse": grp.coarse,
            "fine": grp.fine, "survivors_coarse": list(grp.survivors_coarse),
            "survivors_fine": list(grp.survivors_fine), "undecided_points": grp.undecided,
            "scope": "omega-grid"},
        samples=min(cfg.samples, 32), seed=cfg.seed, tolerance=cfg.tol,
        elapsed_ms=1000 * (time.perf_counter() - start))


def _geom_report(space, cfg, x, f) -> CheckReport:
    res = props.search_geometric_condition(space, x, f, cfg.eps, budget=cfg.samples, seed=cfg.seed)
    if res.found:
        verdict = HOLDS
    else:
        verdict = FAILS if res.exhaustive else UNDECIDED
    w = {"functional": [], "vector": [] if res.y is None else list(res.y),
         "values": {"margin": res.margin, "method": res.method, "exhaustive": res.exhaustive}}
    return CheckReport(
        check="geom", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=max(0.0, -res.margin), witnesses=[w],
        params={"x": list(x), "f": list(f), "eps": cfg.eps, "scope": res.method},
        samples=cfg.samples, seed=cfg.seed, tolerance=cfg.tol)


def _slice_report(space, cfg, f) -> CheckReport:
    enc = props.slice_diameter(space, f, cfg.alpha, seed=cfg.seed)
    verdict = HOLDS if enc.certified else UNDECIDED
    w = {"functional": list(f), "vector": [],
         "values": {"diameter_lo": enc.lo, "diameter_hi": enc.hi, "method": enc.method}}
    return CheckReport(
        check="slice", space=space.dsl, field=space.field, verdict=verdict,
        max_violation=0.0, witnesses=[w], params={"alpha": cfg.alpha, "scope": enc.method},
        samples=0, seed=cfg.seed, tolerance=cfg.tol)


def emit_report(report: CheckReport, fmt: str = "json", path: str | None = None) -> None:
    text = report.to_json() if fmt == "json" else report.to_csv()
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


# --------------------------------------------------------------------------
# suite
# --------------------------------------------------------------------------

def suite_battery(samples: int) -> list[tuple[RunConfig, str]]:
    """(config, expected verdict) pairs; ``samples`` bounds sampled checks."""
    s = min(samples, 50)
    R = lambda **kw: RunConfig(samples=s, **kw)  # noqa: E731
    return [
        (R(check="daugavet", space="linf(2)"), FAILS),
        (R(check="daugavet", space="l2(3)"), FAILS),
        (R(check="omega", space="l2(2)", omega=-1.0), FAILS),
        (R(check="omega", space="linf(3)", omega=1.0), HOLDS),
        (R(check="tsquare", space="linf(3)", sign="+", x=[1, -1, 0.9], f=[-0.2, 0.2, 0.6]), FAILS),
        (R(check="tsquare", space="l2(2)", sign="-"), FAILS),
        (R(check="f-shape", space="linf(3)", a=2.0, b=-3.0), HOLDS),
        (R(check="f-shape", space="l2(4)", field="complex", a=1.0, b=1j), HOLDS),
        (R(check="lemma43", space="linf(2)", g0=-1.0), HOLDS),
        (R(check="lemma43", space="l1(3)", g0=0.3), HOLDS),
        (R(check="hull", space="linf(2)", x=[1, 0], eps=0.5, f=[1, 0]), FAILS),
        (R(check="slice", space="linf(2)", f=[1, 0], alpha=0.5), HOLDS),
        (R(check="denting", space="linf(2)", x=[1, 1]), HOLDS),
        (R(check="denting", space="linf(2)", x=[1, 0]), FAILS),
        (R(check="geom", space="linf(2)", x=[1, 0], f=[1, 0], eps=0.1), HOLDS),
        (R(check="badproj", space="l2(2)"), FAILS),
        (R(check="dual", space="linf(2)"), HOLDS),
        (R(check="spread", space="linf(2)", g="poly:0,0,1", lam=1.0), FAILS),
        (R(check="spread", space="linf(2)", g="poly:1,2", lam=1.0), HOLDS),
        (R(check="scalar", g="poly:0,0,1"), HOLDS),
        (R(check="scalar", g="poly:0,0,1", field="complex"), FAILS),
    ]


def run_suite(samples: int, seed: int, tol: float, jobs: int) -> dict:
    out = []
    for cfg, expected in suite_battery(samples):
        cfg.seed, cfg.tol, cfg.jobs = seed, tol, jobs
        rep = execute(cfg)
        argv = cfg.render()
        k = argv.index("--jobs")
        del argv[k:k + 2]  # parallelism must not show up in the record
        out.append({"config": " ".join(shlex.quote(a) for a in argv),
                    "expected": expected, "matches": rep.verdict == expected,
                    "report": rep.to_dict()})
    return {"suite": "nelab", "version": __version__, "seed": seed,
            "passed": sum(r["matches"] for r in out), "total": len(out), "results": out}


def strip_timing(obj):
    """Copy of a report/suite dict without timing fields."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != TIMING_KEY}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def run(cfg: RunConfig) -> int:
    try:
        if cfg.check == "suite":
            result = run_suite(cfg.samples, cfg.seed, cfg.tol, cfg.jobs)
            text = json.dumps(result, indent=2) + "\n"
            if cfg.output:
                write_atomic(cfg.output, text)
            else:
                sys.stdout.write(text)
            return 0 if result["passed"] == result["total"] else 1
        report = execute(cfg)
        emit_report(report, cfg.format, cfg.output)
        return EXIT[report.verdict]
    except OSError as exc:
        print(f"nelab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, SpaceError, ValueError) as exc:
        print(f"nelab: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"nelab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
