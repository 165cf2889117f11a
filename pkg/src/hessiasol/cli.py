"""
Command-line driver.

    hessiasol <command> --config <path> [--out <dir>] [--seed <int>] [--threads <k>]

Commands: solve, certify, compare, convolve, abp, barriers, matrix-lemma,
crosscheck, holder. A JSON config (validated against
``schema/config.schema.json``) supplies the parameters; a few flags such
as ``--n`` or ``--samples`` override config keys, so small runs need no
config file at all.

Every run writes ``report.json`` into the output directory. The report
carries the config hash and the package version. Wall time sits under the
separate ``timing`` key, so two runs with the same config and seed give
identical payloads everywhere else.

Exit codes: 0 success, 1 bad config, 2 certification or comparison
failure, 3 numeric non-convergence.
"""
from __future__ import annotations

import argparse
import ast
import hashlib
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

__all__ = ["COMMANDS", "Expr", "dumps17", "main", "run"]

COMMANDS = ("solve", "certify", "compare", "convolve", "abp", "barriers", "matrix-lemma", "crosscheck", "holder")
EXIT_OK, EXIT_CONFIG, EXIT_FAIL, EXIT_NONCONV = 0, 1, 2, 3

# flags that override config keys: (flag, key, type)
_OVERRIDES = [
    ("--n", "n", int),
    ("--samples", "samples", int),
    ("--h", "h", float),
    ("--k", "k", float),
    ("--alpha", "alpha", float),
    ("--eps", "eps", float),
    ("--mode", "mode", str),
    ("--pairs", "pairs", int),
]


class ConfigError(Exception):
    pass


# -- expressions ------------------------------------------------------------

_FUNCS = {
    "abs", "exp", "log", "sqrt", "sin", "cos", "tan", "arctan", "arcsin", "arccos",
    "sinh", "cosh", "tanh", "real", "imag", "conj", "minimum", "maximum", "where", "clip",
}
_BINOPS = {ast.Add: "add", ast.Sub: "subtract", ast.Mult: "multiply", ast.Div: "true_divide", ast.Pow: "power",
           ast.Mod: "mod"}
_CMPOPS = {ast.Lt: "less", ast.LtE: "less_equal", ast.Gt: "greater", ast.GtE: "greater_equal"}


class Expr:
    """A numeric expression of the node coordinates, evaluated without ``eval``.

    Names: ``z1..zn`` (complex), ``x1, y1, ...`` (real parts), ``r2 = |z|^2``,
    ``r = |z|``, ``s`` (the unknown, for right-hand sides), ``pi``, ``e``.
    Functions: numpy ufuncs listed in ``_FUNCS``. Complex results must have
    zero imaginary part.

    >>> import numpy as np
    >>> Expr("r2 + 1")(np.array([[1 + 1j]]))
    array([3.])
    """

    def __init__(self, src):
        self.src = src
        if isinstance(src, (int, float)):
            self.tree = ast.Constant(float(src))
        else:
            try:
                self.tree = ast.parse(str(src), mode="eval").body
            except SyntaxError as exc:
                raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}") from None
        self.names = set()
        self._check(self.tree)

    @property
    def uses_s(self) -> bool:
        return "s" in self.names

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError(f"only numeric constants are allowed in {self.src!r}")
        elif isinstance(node, ast.Name):
            self.names.add(node.id)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand)
        elif isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _CMPOPS:
            self._check(node.left)
            self._check(node.comparators[0])
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if node.keywords:
                raise ConfigError(f"keyword arguments are not allowed in {self.src!r}")
            for a in node.args:
                self._check(a)
        else:
            raise ConfigError(f"unsupported syntax {type(node).__name__} in {self.src!r}")

    def _env(self, z, s):
        import numpy as np

        z = np.atleast_2d(np.asarray(z, dtype=complex))
        env = {"pi": math.pi, "e": math.e}
        for j in range(z.shape[1]):
            env[f"z{j + 1}"] = z[:, j]
            env[f"x{j + 1}"] = z[:, j].real
            env[f"y{j + 1}"] = z[:, j].imag
        r2 = np.sum(np.abs(z) ** 2, axis=1)
        env["r2"], env["r"] = r2, np.sqrt(r2)
        if s is not None:
            env["s"] = np.asarray(s, dtype=float)
        return env, z.shape[0]

    def _eval(self, node, env):
        import numpy as np

        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise ConfigError(f"unknown name {node.id!r} in {self.src!r}")
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return getattr(np, _BINOPS[type(node.op)])(self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Compare):
            op = getattr(np, _CMPOPS[type(node.ops[0])])
            return op(self._eval(node.left, env), self._eval(node.comparators[0], env)).astype(float)
        args = [self._eval(a, env) for a in node.args]
        return getattr(np, node.func.id)(*args)

    def __call__(self, z, s=None):
        import numpy as np

        env, m = self._env(z, s)
        with np.errstate(all="ignore"):
            v = np.asarray(self._eval(self.tree, env))
        if np.iscomplexobj(v):
            if np.any(np.abs(v.imag) > 1e-12 * (1.0 + np.abs(v.real))):
                raise ConfigError(f"expression {self.src!r} is not real-valued")
            v = v.real
        return np.broadcast_to(v.astype(float), (m,)).copy()

    def __repr__(self):
        return f"Expr({self.src!r})"


class _Rhs:
    """``psi(z, s)`` from an expression that may or may not use ``s``."""

    def __init__(self, expr: Expr):
        self.expr = expr

    def __call__(self, z, s=None):
        return self.expr(z, s if self.expr.uses_s else None)


# -- serialization ----------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return "null"
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    return json.dumps(x)


def _plain(obj):
    """numpy scalars/arrays to Python objects."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def dumps17(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written at 17 significant digits (non-finite -> null)."""
    obj = _plain(obj) if _level == 0 else obj
    pad, pad_in = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad_in}{json.dumps(k)}: {dumps17(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_fmt(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad_in + dumps17(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    return _fmt(obj)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# -- config -----------------------------------------------------------------


def _schema() -> dict:
    return json.loads(resources.files("hessiasol").joinpath("schema/config.schema.json").read_text())


def load_config(path, overrides: dict, command: str) -> dict:
    import jsonschema

    cfg = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            cfg = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    cfg["command"] = command
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"field {where}: {e.message}")
        raise ConfigError("; ".join(lines))
    for key in ("field", "sub", "super"):
        f = cfg.get(key)
        if isinstance(f, dict) and "csv" in f and not Path(f["csv"]).is_file():
            raise ConfigError(f"field {key}.csv: file {f['csv']} not found")
    return cfg


def _need(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"command {cfg['command']!r} needs {', '.join(missing)}")


def _domain(cfg):
    from .grid import ball, box

    _need(cfg, "domain")
    d = cfg["domain"]
    center = None
    if "center" in d:
        if len(d["center"]) != d["n"]:
            raise ConfigError(f"field domain.center: need {d['n']} complex entries")
        center = [complex(a, b) for a, b in d["center"]]
    if d.get("shape", "ball") == "ball":
        return ball(d["n"], d.get("radius", 1.0), center)
    if "half_widths" not in d:
        raise ConfigError("field domain.half_widths: required for a box")
    return box(d["n"], d["half_widths"], center)


def _operator(cfg, n):
    from . import viscosity as V

    _need(cfg, "operator")
    o = cfg["operator"]
    kind = o["op"]
    psi = _Rhs(Expr(o.get("psi", 1.0)))
    mono = o.get("monotone_in_s", True)
    try:
        if kind == "monge_ampere":
            return V.monge_ampere(n, psi, monotone_in_s=mono)
        if kind == "hessian":
            return V.hessian_op(n, _int(o, "k"), psi, monotone_in_s=mono)
        if kind == "quotient":
            return V.quotient_op(n, _int(o, "k"), o.get("l", 0), psi, monotone_in_s=mono)
        if kind == "inverse_sigma":
            return V.inverse_sigma_op(n, _int(o, "k"), psi, monotone_in_s=mono)
        phase = o.get("phase")
        if phase is None:
            raise ConfigError("field operator.phase: required for the lagrangian operator")
        if isinstance(phase, (int, float)):
            return V.lagrangian_op(n, float(phase), o.get("delta"))
        if "delta" not in o:
            raise ConfigError("field operator.delta: required when the phase is an expression")
        return V.lagrangian_op(n, Expr(phase), o["delta"])
    except ValueError as exc:  # DomainError
        raise ConfigError(f"field operator: {exc}") from None


def _int(o, key):
    if key not in o:
        raise ConfigError(f"field operator.{key}: required for {o['op']}")
    return int(o[key])


def _grid(cfg):
    from .grid import Grid

    _need(cfg, "h")
    try:
        return Grid(_domain(cfg), cfg["h"])
    except ValueError as exc:
        raise ConfigError(f"field h: {exc}") from None


def _field(cfg, key, grid):
    from .grid import GridField, read_csv

    _need(cfg, key)
    f = cfg[key]
    if "csv" in f:
        u = read_csv(f["csv"], grid.domain, grid.h)
        return u
    return GridField.sample(grid, Expr(f["expr"]), {"source": str(f["expr"])})


# -- commands ---------------------------------------------------------------


def _cmd_solve(cfg, out):
    import numpy as np

    from .errors import ConvergenceError, StabilityError
    from .grid import write_csv
    from .solver import SolveConfig, solve

    dom = _domain(cfg)
    op = _operator(cfg, dom.n)
    _need(cfg, "h", "phi")
    phi = Expr(cfg["phi"])
    sc = SolveConfig(
        op, dom, phi, cfg["h"], dt=cfg.get("dt"), residual_tol=cfg.get("residual_tol", 1e-6),
        max_iters=cfg.get("max_iters", 5_000_000), init=cfg.get("init", "subsolution"),
        method=cfg.get("method", "relaxation"),
    )
    try:
        u, rep = solve(sc)
    except (ConvergenceError, StabilityError) as exc:
        _write_trace(out, exc.history)
        return EXIT_NONCONV, {"error": type(exc).__name__, "message": str(exc),
                              "last_residual": exc.history[-1][1] if exc.history else None}, {}
    write_csv(u, out / "solution.csv")
    _write_trace(out, rep.history)
    result = {"operator": op.to_dict(), "domain": dom.to_dict(), "h": cfg["h"], "solve": rep.to_dict()}
    ok = all(c.passed if hasattr(c, "passed") else c.ok for c in rep.certificates.values())
    if "exact" in cfg:
        ex = Expr(cfg["exact"])(u.grid.complex_coords(u.grid.closure))
        result["sup_error"] = float(np.max(np.abs(u.values[u.grid.closure] - ex)))
        if "error_tol" in cfg:
            result["error_ok"] = result["sup_error"] <= cfg["error_tol"]
            ok = ok and result["error_ok"]
    result["ok"] = ok
    return (EXIT_OK if ok else EXIT_FAIL), result, {"wall_time": rep.wall_time}


def _write_trace(out, history):
    with open(out / "residual.csv", "w") as fh:
        fh.write("iter,residual\n")
        fh.writelines(f"{int(i)},{format(float(r), '.17g')}\n" for i, r in history)


def _cmd_certify(cfg, out):
    from .viscosity import certify_subsolution, certify_supersolution

    g = _grid(cfg)
    u = _field(cfg, "field", g)
    op = _operator(cfg, g.n)
    mode = cfg.get("mode", "both")
    if mode not in ("subsolution", "supersolution", "both"):
        raise ConfigError("field mode: certify takes subsolution, supersolution or both")
    tol = cfg.get("tol")
    res, ok = {}, True
    if mode in ("subsolution", "both"):
        c = certify_subsolution(u, op, tol)
        res["subsolution"] = c.to_dict()
        ok &= c.passed
    if mode in ("supersolution", "both"):
        c = certify_supersolution(u, op, tol, cfg.get("definition", "inf_over_n"))
        res["supersolution"] = c.to_dict()
        ok &= c.passed
    res["ok"] = bool(ok)
    return (EXIT_OK if ok else EXIT_FAIL), res, {}


def _cmd_compare(cfg, out):
    from .viscosity import compare

    g = _grid(cfg)
    u = _field(cfg, "sub", g)
    v = _field(cfg, "super", g)
    op = _operator(cfg, g.n) if "operator" in cfg else None
    rep = compare(u, v, op, cfg.get("C", 1.0), cert_tol=cfg.get("tol"))
    return (EXIT_OK if rep.principle_ok else EXIT_FAIL), rep.to_dict(), {}


def _cmd_convolve(cfg, out):
    import numpy as np

    from .grid import write_csv
    from .regularize import ConvolutionParams, inf_convolution, sup_convolution

    g = _grid(cfg)
    u = _field(cfg, "field", g)
    _need(cfg, "eps")
    params = ConvolutionParams.from_fields(cfg["eps"], u)
    mode = cfg.get("mode", "sup")
    if mode not in ("sup", "inf"):
        raise ConfigError("field mode: convolve takes sup or inf")
    f = sup_convolution(u, params) if mode == "sup" else inf_convolution(u, params)
    write_csv(f, out / f"{mode}_convolution.csv")
    idx = g.closure
    diff = f.values[idx] - u.values[idx]
    dominates = bool(np.min(diff) >= -1e-12) if mode == "sup" else bool(np.max(diff) <= 1e-12)
    res = {
        "mode": mode,
        "eps": params.eps,
        "C0": params.C0,
        "semiconvexity": params.semiconvexity_constants(),
        "min_shift": float(np.min(diff)),
        "max_shift": float(np.max(diff)),
        "ordered": dominates,
        "ok": dominates,
    }
    return (EXIT_OK if dominates else EXIT_FAIL), res, {}


def _cmd_abp(cfg, out):
    from .regularize import abp_check

    g = _grid(cfg)
    u = _field(cfg, "field", g)
    _need(cfg, "k")
    try:
        rep = abp_check(u, cfg["k"], cfg.get("deltas"))
    except ValueError as exc:
        raise ConfigError(f"field field: {exc}") from None
    d = rep.to_dict()
    d["ok"] = rep.bound_ok
    return (EXIT_OK if rep.bound_ok else EXIT_FAIL), d, {}


def _cmd_barriers(cfg, out):
    from .barriers import build_bundle, global_barrier, holder_barrier
    from .errors import ConstructionError
    from .grid import write_csv

    g = _grid(cfg)
    op = _operator(cfg, g.n)
    _need(cfg, "phi")
    phi = Expr(cfg["phi"])
    mode = cfg.get("mode", "bundle")
    try:
        if mode == "bundle":
            b = build_bundle(op, g, phi, cfg.get("tol"))
            write_csv(b.subsolution, out / "subsolution.csv")
            write_csv(b.supersolution, out / "supersolution.csv")
            res = b.to_dict()
            res["ok"] = bool(b.ordered and all(c.passed for c in b.certificates.values()))
        elif mode == "holder":
            _need(cfg, "xi", "alpha")
            xi = [complex(a, b) for a, b in cfg["xi"]]
            hb = holder_barrier(xi, cfg["alpha"], op, g, phi)
            write_csv(hb.field, out / "holder_barrier.csv")
            res = hb.to_dict()
            res["ok"] = True
        elif mode == "global":
            _need(cfg, "alpha", "A_bound")
            env = global_barrier(op, g, phi, cfg["alpha"], cfg["A_bound"])
            write_csv(env, out / "global_barrier.csv")
            res = {k: env.meta[k] for k in ("a", "C", "C_tilde", "alpha")}
            res["net_size"] = len(env.meta["net"])
            res["certificate"] = env.meta["certificate"].to_dict()
            res["log"] = env.meta["log"]
            res["ok"] = True
        else:
            raise ConfigError("field mode: barriers takes bundle, holder or global")
    except ConstructionError as exc:
        return EXIT_FAIL, {"ok": False, "error": str(exc), "worst": exc.worst}, {}
    res["mode"] = mode
    return (EXIT_OK if res["ok"] else EXIT_FAIL), res, {}


def _cmd_matrix_lemma(cfg, out):
    from .hermitian import matrix_lemma_fuzz

    _need(cfg, "n")
    rep = matrix_lemma_fuzz(cfg["n"], cfg.get("samples", 10_000), cfg["seed"], cfg.get("ks"))
    ok = rep["min_gap"] >= -1e-10 and rep.get("gram_max_rel_diff", 0.0) <= 1e-9
    rep["ok"] = bool(ok)
    return (EXIT_OK if ok else EXIT_FAIL), rep, {}


def _solved_or_field(cfg, out):
    """A field from the config, or a fresh solve when only phi is given."""
    from .grid import write_csv
    from .solver import SolveConfig, solve

    if "field" in cfg:
        g = _grid(cfg)
        return _field(cfg, "field", g), None
    dom = _domain(cfg)
    op = _operator(cfg, dom.n)
    _need(cfg, "h", "phi")
    u, rep = solve(SolveConfig(op, dom, Expr(cfg["phi"]), cfg["h"], residual_tol=cfg.get("residual_tol", 1e-6),
                                 method=cfg.get("method", "relaxation")))
    write_csv(u, out / "solution.csv")
    return u, rep


def _cmd_crosscheck(cfg, out):
    from .errors import ConvergenceError, StabilityError
    from .solver import pluripotential_crosscheck

    o = cfg.get("operator", {})
    if o.get("op") not in (None, "inverse_sigma"):
        raise ConfigError("field operator.op: crosscheck works on the inverse_sigma operator")
    k = int(o.get("k", cfg.get("k", 1)))
    try:
        u, rep = _solved_or_field(cfg, out)
    except (ConvergenceError, StabilityError) as exc:
        return EXIT_NONCONV, {"error": type(exc).__name__, "message": str(exc)}, {}
    psi = _Rhs(Expr(cfg.get("psi", o.get("psi", 1.0))))
    res = pluripotential_crosscheck(u, psi, k, cfg.get("n_B", 10), cfg["seed"], cfg.get("tol"))
    if rep is not None:
        res["solve"] = rep.to_dict()
    return (EXIT_OK if res["ok"] else EXIT_FAIL), res, {}


def _cmd_holder(cfg, out):
    from .errors import ConvergenceError, StabilityError
    from .solver import measure_holder

    _need(cfg, "alpha")
    try:
        u, rep = _solved_or_field(cfg, out)
    except (ConvergenceError, StabilityError) as exc:
        return EXIT_NONCONV, {"error": type(exc).__name__, "message": str(exc)}, {}
    res = measure_holder(u, cfg["alpha"], cfg.get("pairs", 100_000), cfg["seed"])
    res["ok"] = not res["divergent"]
    if rep is not None:
        res["solve"] = rep.to_dict()
    return (EXIT_OK if res["ok"] else EXIT_FAIL), res, {}


_HANDLERS = {
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "compare": _cmd_compare,
    "convolve": _cmd_convolve,
    "abp": _cmd_abp,
    "barriers": _cmd_barriers,
    "matrix-lemma": _cmd_matrix_lemma,
    "crosscheck": _cmd_crosscheck,
    "holder": _cmd_holder,
}


def run(command: str, config_path=None, out=None, seed=None, overrides=None) -> int:
    """Execute one command; writes ``report.json`` and returns the exit code."""
    from . import __version__

    t0 = time.perf_counter()
    ov = dict(overrides or {})
    if seed is not None:
        ov["seed"] = seed
    try:
        cfg = load_config(config_path, ov, command)
    except ConfigError as exc:
        print(f"hessiasol: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.setdefault("seed", 0)
    outdir = Path(out or cfg.get("out") or f"hessiasol-out/{command}")
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        code, result, timing = _HANDLERS[command](cfg, outdir)
    except ConfigError as exc:
        print(f"hessiasol: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    timing = dict(timing)
    timing["total_seconds"] = time.perf_counter() - t0
    for key in ("wall_time",):
        if isinstance(result.get("solve"), dict):
            result["solve"].pop(key, None)
    report = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(cfg),
        "config": cfg,
        "seed": cfg["seed"],
        "exit_code": code,
        "result": result,
        "timing": timing,
    }
    (outdir / "report.json").write_text(dumps17(report) + "\n")
    status = {EXIT_OK: "ok", EXIT_FAIL: "FAILED", EXIT_NONCONV: "NOT CONVERGED"}[code]
    print(f"hessiasol {command}: {status} (report: {outdir / 'report.json'})")
    if code == EXIT_FAIL:
        print(dumps17(_worst_summary(result)), file=sys.stderr)
    return code


def _worst_summary(result: dict) -> dict:
    out = {}
    for k, v in result.items():
        if isinstance(v, dict) and ("worst" in v or "passed" in v or "ok" in v):
            out[k] = {kk: v[kk] for kk in ("passed", "ok", "margin", "worst") if kk in v}
    return out or result


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hessiasol", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int, help="cap on worker threads (else HESSIASOL_THREADS)")
        for flag, key, typ in _OVERRIDES:
            s.add_argument(flag, dest=f"ov_{key}", type=typ)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = args.threads or os.environ.get("HESSIASOL_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(int(threads))
    overrides = {key: getattr(args, f"ov_{key}") for _, key, _ in _OVERRIDES}
    return run(args.command, args.config, args.out, args.seed, overrides)


if __name__ == "__main__":
    sys.exit(main())
