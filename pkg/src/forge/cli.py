"""``forge run config.json [--out DIR] [--seed N]``.

A job is a single JSON document naming a ``kind`` and its inputs. The run
writes a report (``<stem>.report.json``) to the output directory, prints one
line per verdict, and exits with 0 when every verdict passes, 1 when a
mathematical check fails and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from .errors import ConfigError, ForgeError
from .evaluation import DEFAULT_SEED, Status, Verdict, ZeroTest, evaluate_array
from .expr import Const, Expr, X, as_expr, differentiate
from .intertwine import conjugate_identities, darboux_transform, factorize, lift_from_eigenfunction
from .kleingordon import (
    KGChainNode,
    catalog,
    chain,
    kg_residual_expr,
    kg_step,
    residual_verdicts,
    separated_solution,
    transport,
    validate_entry,
    wave_seed,
    weber_solution,
)
from .opring import DiffOp, op_equal, op_mul
from .parse import ParseDiagnostic, parse_expr, print_expr
from .reference import coefficient_regression
from .verify import Grid1D, convergence_order, intertwine_numeric_check, pde_fd_residual

SCHEMA_VERSION = 1
PASSING = {Status.ZERO.value, "pass"}
NUMERIC_TOL = 1e-10
ORDER_TOL = 0.3

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# config access with field paths


class Config:
    """Read-only view of a JSON object that reports errors with their path."""

    def __init__(self, data: Any, path: str = "$", constants: Mapping[str, Fraction] | None = None):
        if not isinstance(data, dict):
            raise ConfigError(path, "expected an object")
        self.data = data
        self.path = path
        self.constants = dict(constants or {})

    def _p(self, key: str) -> str:
        return f"{self.path}.{key}"

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default: Any = ...) -> Any:
        if key not in self.data:
            if default is ...:
                raise ConfigError(self._p(key), "required field is missing")
            return default
        return self.data[key]

    def sub(self, key: str, default: Any = ...) -> "Config":
        v = self.raw(key, {} if default is ... else default)
        return Config(v, self._p(key), self.constants)

    def expr(self, key: str, default: Any = ...) -> Expr:
        return self.expr_value(self.raw(key, default), self._p(key))

    def expr_value(self, v: Any, path: str) -> Expr:
        if isinstance(v, bool) or not isinstance(v, (str, int)):
            raise ConfigError(path, "expected an expression string")
        try:
            return parse_expr(str(v), self.constants)
        except ParseDiagnostic as exc:
            raise ConfigError(path, str(exc)) from exc

    def exprs(self, key: str, default: Any = ...) -> list[Expr]:
        v = self.raw(key, default)
        if not isinstance(v, list):
            raise ConfigError(self._p(key), "expected a list of expressions")
        return [self.expr_value(item, f"{self._p(key)}[{i}]") for i, item in enumerate(v)]

    def rational(self, key: str, default: Any = ...) -> Fraction:
        return _rational(self.raw(key, default), self._p(key), self.constants)

    def integer(self, key: str, default: Any = ...) -> int:
        v = self.raw(key, default)
        if isinstance(v, str):
            try:
                v = int(v, 0)
            except ValueError:
                raise ConfigError(self._p(key), "expected an integer") from None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self._p(key), "expected an integer")
        return v

    def number(self, key: str, default: Any = ...) -> float:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self._p(key), "expected a number")
        return float(v)

    def operator(self, key: str) -> DiffOp:
        coeffs = self.exprs(key)
        if not coeffs:
            raise ConfigError(self._p(key), "an operator needs at least one coefficient")
        return DiffOp(coeffs)

    def grid(self, key: str, default: Any = ...) -> Grid1D:
        g = self.sub(key, default)
        try:
            return Grid1D(g.number("start"), g.number("end"), g.integer("n"))
        except ValueError as exc:
            raise ConfigError(self._p(key), str(exc)) from None


def _rational(v: Any, path: str, constants: Mapping[str, Fraction]) -> Fraction:
    if isinstance(v, bool):
        raise ConfigError(path, "expected a rational number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(str(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except ValueError:
            pass
        try:
            e = parse_expr(v, constants)
        except ParseDiagnostic as exc:
            raise ConfigError(path, str(exc)) from exc
        if isinstance(e, Const):
            return e.value
    raise ConfigError(path, "expected a rational number")


def load_constants(data: Any) -> dict[str, Fraction]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("$.constants", "expected an object")
    out = {}
    for k, v in data.items():
        if not k.isidentifier():
            raise ConfigError(f"$.constants.{k}", "not a valid identifier")
        out[k] = _rational(v, f"$.constants.{k}", out)
    return out


def zero_test_from(cfg: Config, seed_override: int | None) -> ZeroTest:
    z = cfg.sub("zero_test", {})
    domain = z.raw("domain", [1.0, 2.0])
    if not (isinstance(domain, list) and len(domain) == 2 and all(isinstance(d, (int, float)) for d in domain)):
        raise ConfigError("$.zero_test.domain", "expected [start, end]")
    seed = seed_override if seed_override is not None else z.integer("seed", DEFAULT_SEED)
    try:
        return ZeroTest(
            domain=(float(domain[0]), float(domain[1])),
            trials=z.integer("trials", 8),
            atol=z.number("atol", 1e-12),
            rtol=z.number("rtol", 1e-12),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError("$.zero_test", str(exc)) from None


# ---------------------------------------------------------------------------
# jobs


class Job:
    """Accumulates results, verdicts and findings for one run."""

    def __init__(self, cfg: Config, zt: ZeroTest, out_dir: Path | None):
        self.cfg = cfg
        self.zt = zt
        self.out_dir = out_dir
        self.results: dict[str, Any] = {}
        self.verdicts: dict[str, dict] = {}
        self.findings: list[dict] = []
        self.files: list[str] = []

    def verdict(self, name: str, v: Verdict) -> None:
        self.verdicts[name] = v.to_json()

    def bound(self, name: str, value: float, limit: float) -> None:
        """Numeric check ``value <= limit``."""
        ok = bool(np.isfinite(value)) and value <= limit
        self.verdicts[name] = {"status": "pass" if ok else "fail", "value": value, "limit": limit}

    def path(self, key: str) -> Path | None:
        outputs = self.cfg.sub("outputs", {})
        if not outputs.has(key):
            return None
        name = outputs.raw(key)
        if not isinstance(name, str):
            raise ConfigError(f"$.outputs.{key}", "expected a file name")
        p = Path(name)
        if not p.is_absolute() and self.out_dir is not None:
            p = self.out_dir / p
        return p

    @property
    def passed(self) -> bool:
        return all(v["status"] in PASSING for v in self.verdicts.values())


def _probes(cfg: Config) -> list[Expr]:
    if cfg.has("probes"):
        return cfg.exprs("probes")
    return [parse_expr(p) for p in ("x^3", "sin(x)", "exp(x)")]


def run_intertwine(job: Job) -> None:
    cfg = job.cfg
    L = cfg.operator("L")
    res = lift_from_eigenfunction(L, cfg.expr("h"), cfg.rational("lambda", 0), job.zt)
    job.results["intertwining"] = res.to_json()
    job.verdict("MT == TL", res.residual_certificate)
    if res.conj_certificate is not None:
        for name, v in conjugate_identities(res, job.zt).items():
            job.verdict(name, v)
    grid = cfg.grid("grid", {"start": job.zt.domain[0], "end": job.zt.domain[1], "n": 101})
    report = intertwine_numeric_check(res.L, res.M, res.T, _probes(cfg), grid)
    job.results["numeric_check"] = report.to_json()
    job.bound("numeric MT - TL", report.max, NUMERIC_TOL)


def run_factor(job: Job) -> None:
    cfg = job.cfg
    L = cfg.operator("L")
    L1, L2 = factorize(L, cfg.expr("h"), job.zt)
    job.results["factors"] = {"L1": L1.to_json(), "L2": L2.to_json()}
    job.verdict("L2*L1 == L", op_equal(op_mul(L2, L1, job.zt), L, job.zt))


def run_darboux(job: Job) -> None:
    cfg = job.cfg
    L = cfg.operator("L")
    res = darboux_transform(L, cfg.expr("h"), cfg.rational("lambda", 0), job.zt)
    job.results["darboux"] = res.to_json()
    job.verdict("gauge constant term", res.constant_certificate)
    job.verdicts["order preserved"] = {"status": "pass" if res.W_op.order == L.order else "fail"}
    for i, u in enumerate(cfg.exprs("kernel", [])):
        job.verdict(f"kernel[{i}] in ker L", job.zt(L(u)))
        job.verdict(f"W annihilates transform(kernel[{i}])", job.zt(res.W_op(res.transform(u))))


def _node_from(cfg: Config, zt: ZeroTest) -> tuple[list[KGChainNode], Expr]:
    """Either a single step (V, h, lambda) or a chain (V, steps)."""
    V = cfg.expr("V", "0")
    if cfg.has("steps"):
        steps_raw = cfg.raw("steps")
        if not isinstance(steps_raw, list) or not steps_raw:
            raise ConfigError("$.steps", "expected a nonempty list")
        steps = []
        for i, st in enumerate(steps_raw):
            sc = Config(st, f"$.steps[{i}]", cfg.constants)
            steps.append((sc.expr("h"), sc.rational("lambda", 0)))
        return chain(V, steps, zt), V
    return [kg_step(V, cfg.expr("h"), cfg.rational("lambda", 0), zero_test=zt)], V


def _seed_field(cfg: Config):
    prof = cfg.sub("profiles", {})
    return wave_seed(prof.raw("X", "exp(-x^2)"), prof.raw("Y", "sin(x)"))


def _record_nodes(job: Job, nodes: list[KGChainNode]) -> None:
    job.results["nodes"] = [n.to_json() for n in nodes]
    for n in nodes:
        job.verdict(f"step[{n.depth}] eigenfunction", n.eigen_certificate)
        job.verdict(f"step[{n.depth}] lift", n.lift_certificate)


def _record_transport(job: Job, nodes: list[KGChainNode], V: Expr) -> None:
    """Transport the wave-equation seed when the chain starts from V = 0."""
    if V != as_expr(0):
        return
    v = transport(nodes, _seed_field(job.cfg))
    job.results["transported_solution"] = v.to_json()
    job.verdict("transported solution", _collapse(residual_verdicts(kg_residual_expr(nodes[-1], v), job.zt)))


def _collapse(verdicts: Mapping[str, Verdict]) -> Verdict:
    for v in verdicts.values():
        if not v.zero:
            return v
    return Verdict(Status.ZERO)


def run_kg(job: Job) -> None:
    nodes, V = _node_from(job.cfg, job.zt)
    _record_nodes(job, nodes)
    job.results["W"] = print_expr(nodes[-1].W)
    _record_transport(job, nodes, V)
    plot = job.path("plot")
    if plot is not None:
        grid = job.cfg.grid("plot_grid", {"start": job.zt.domain[0], "end": job.zt.domain[1], "n": 201})
        job.results["plot"] = emit_plot_data(nodes[-1], grid, plot)
        job.files.append(str(plot))


def run_catalog(job: Job) -> None:
    entries = []
    for entry in catalog():
        r = validate_entry(entry, job.zt)
        entries.append(r.to_json())
        job.verdict(f"catalog/{entry.name}", _collapse(r.certificates))
        job.findings.extend(r.findings)
    job.results["catalog"] = entries


def run_verify_pde(job: Job) -> None:
    cfg = job.cfg
    nodes, V = _node_from(cfg, job.zt)
    _record_nodes(job, nodes)
    if V != as_expr(0):
        raise ConfigError("$.V", "verify-pde transports the wave-equation seed and needs V = 0")
    v = transport(nodes, _seed_field(cfg))
    W = nodes[-1].W
    if cfg.has("W_offset"):
        W = W + cfg.expr("W_offset")
    t_grid, x_grid = cfg.grid("t_grid"), cfg.grid("x_grid")
    coarse = pde_fd_residual(v, W, t_grid, x_grid, job.path("csv"))
    fine = pde_fd_residual(v, W, t_grid.refined(), x_grid.refined())
    order = convergence_order(coarse, fine)
    job.results["coarse"] = coarse.to_json()
    job.results["fine"] = fine.to_json()
    job.results["order"] = order
    target = cfg.number("expected_order", 2.0)
    job.bound("convergence order", abs(order - target), cfg.number("order_tolerance", ORDER_TOL))


def run_weber(job: Job) -> None:
    cfg = job.cfg
    if cfg.has("k"):
        consistent = cfg.raw("consistent", False)
        if not isinstance(consistent, bool):
            raise ConfigError("$.consistent", "expected true or false")
        sol = separated_solution(cfg.rational("k"), cfg.rational("lambda"), consistent)
        job.results["separated"] = sol.to_json()
        for name, v in sol.certificates().items():
            job.verdict(f"separated {name}", v)
        pde = sol.pde_certificate()
        job.results["separated"]["pde_certificate"] = pde.to_json()
        if not pde.zero:
            job.findings.append(
                {
                    "check": "separated/pde",
                    "status": pde.label(),
                    "reference": "X'' + (k - lambda - x^2/4) X = 0",
                    "corrected": "X'' + (k + lambda - x^2/4) X = 0",
                }
            )
        return
    raw = cfg.raw("n")
    ns = raw if isinstance(raw, list) else [raw]
    zt = ZeroTest(domain=(-2.0, 2.0), seed=job.zt.seed, trials=job.zt.trials, atol=job.zt.atol, rtol=job.zt.rtol)
    out = {}
    for i, n in enumerate(ns):
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"$.n[{i}]" if isinstance(raw, list) else "$.n", "expected an integer")
        Xn = weber_solution(n)
        out[str(n)] = print_expr(Xn)
        eq = differentiate(Xn, 2) + (Fraction(n) + Fraction(1, 2) - X * X / 4) * Xn
        job.verdict(f"weber[{n}]", zt(eq))
    job.results["weber"] = out


def run_regression(job: Job) -> None:
    orders = job.cfg.raw("orders", [2, 3])
    if not isinstance(orders, list):
        raise ConfigError("$.orders", "expected a list of orders")
    for order in orders:
        rep = coefficient_regression(order, job.zt)
        job.results[f"order{order}"] = rep.to_json()
        for name, v in rep.certificates.items():
            job.verdict(f"order{order}/{name}", v)
        job.findings.extend(rep.findings())


KINDS: dict[str, Callable[[Job], None]] = {
    "intertwine": run_intertwine,
    "factor": run_factor,
    "lemma2": run_darboux,
    "darboux": run_darboux,
    "kg-step": run_kg,
    "kg-chain": run_kg,
    "catalog-validate": run_catalog,
    "verify-pde": run_verify_pde,
    "weber": run_weber,
    "coefficient-regression": run_regression,
}


# ---------------------------------------------------------------------------
# plot data


def emit_plot_data(node: KGChainNode, x_grid: Grid1D, out: str | Path) -> dict:
    """Write ``x,V,W`` rows for every grid point where both potentials are finite."""
    xs = x_grid.points
    V = evaluate_array(node.V, xs)
    W = evaluate_array(node.W, xs)
    ok = np.isfinite(V) & np.isfinite(W)
    try:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "V", "W"])
            for x, a, b in zip(xs[ok], V[ok], W[ok]):
                w.writerow([repr(float(x)), repr(float(a)), repr(float(b))])
    except OSError as exc:
        raise OSError(f"cannot write plot data to {out}: {exc.strerror}") from exc
    return {"rows": int(ok.sum()), "skipped": int((~ok).sum()), "path": str(out)}


# ---------------------------------------------------------------------------
# entry points


def run(config: Mapping[str, Any], out_dir: Path | None = None, seed: int | None = None) -> dict:
    """Execute a job and return its report; raises ConfigError on invalid configs."""
    started = time.perf_counter()
    constants = load_constants(config.get("constants") if isinstance(config, dict) else None)
    cfg = Config(config, "$", constants)
    kind = cfg.raw("kind")
    if kind not in KINDS:
        raise ConfigError("$.kind", f"unknown kind {kind!r}; expected one of {sorted(KINDS)}")
    zt = zero_test_from(cfg, seed)
    job = Job(cfg, zt, out_dir)
    error = None
    try:
        KINDS[kind](job)
    except ConfigError:
        raise
    except ForgeError as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
    report = {
        "schema_version": SCHEMA_VERSION,
        "forge_version": __version__,
        "config": config,
        "seed": zt.seed,
        "results": job.results,
        "verdicts": job.verdicts,
        "findings": job.findings,
        "files": job.files,
        "passed": error is None and job.passed,
    }
    if error is not None:
        report["error"] = error
    report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
    return report


def canonical(report: Mapping[str, Any]) -> str:
    """Report JSON without the timing field, for determinism comparisons."""
    return dumps({k: v for k, v in report.items() if k != "timing"})


def dumps(report: Mapping[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forge", description="Intertwining operators and Darboux steps.")
    p.add_argument("--version", action="version", version=f"forge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a JSON job config")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, default=None, help="directory for the report and side files")
    r.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="override the zero-test seed")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = json.loads(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: {args.config}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    try:
        report = run(config, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = dumps(report)
    if args.out is not None:
        dest = args.out / f"{args.config.stem}.report.json"
        dest.write_text(text, encoding="utf-8")
    for name, v in report["verdicts"].items():
        print(f"{name}: {v['status']}")
    for f in report["findings"]:
        print(f"finding {f.get('entry', '')} {f['check']}: {f['status']}".replace("  ", " "))
    if "error" in report:
        print(f"error: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
