"""Batch experiment runner.

Usage:
    fraclap run <config-path> [--out DIR] [--threads K]
    fraclap list-presets

The configuration file is flat ``key = value`` text (``#`` comments and
blank lines ignored).  Recognized keys depend on the problem kind:

    problem   linear | dt | obstacle | graph | precond-bench   (required)
    domain    interval | square | disk | annulus
    s         comma-separated list of fractional orders
    mu        grading exponent (1 = uniform)
    levels    number of study levels
    start_level, ratio, tol, max_iter, seed, out
    preset    graph preset name (problem=graph)
    level     graph mesh refinement level (problem=graph)
    N, M, k   sinc-quadrature sizes (problem=dt)

Every CSV report starts with ``#`` provenance lines (schema version,
package version, timestamp, configuration echo); bodies are deterministic
for a fixed configuration and seed.  Exit codes: 0 success, 2 validation
error, 3 numerical failure.
"""

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import mesh as fmesh

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
SCHEMA_VERSION = 1

PROBLEMS = ("linear", "dt", "obstacle", "graph", "precond-bench")
DOMAINS = ("interval", "square", "disk", "annulus")

#: Ready-made configurations, by name (stable alphabetical listing).
PRESETS = {
    "ex-1d-sign": {"problem": "graph", "preset": "ex-1d-sign",
                   "s": "0.25", "level": "3"},
    "ex-annulus": {"problem": "graph", "preset": "ex-annulus",
                   "s": "0.25", "level": "0"},
    "ex-disk-multis": {"problem": "graph", "preset": "ex-disk-multis",
                       "s": "0.1,0.25,0.4", "level": "0"},
    "getoor-disk": {"problem": "linear", "domain": "disk", "s": "0.5",
                    "mu": "1", "levels": "3"},
    "getoor-interval": {"problem": "linear", "domain": "interval",
                        "s": "0.5", "mu": "1", "levels": "5"},
    "obstacle-disk": {"problem": "obstacle", "domain": "disk", "s": "0.5",
                      "mu": "2", "levels": "3"},
    "precond-bench": {"problem": "precond-bench", "s": "0.5", "levels": "4"},
    "sinc-interval": {"problem": "dt", "domain": "interval", "s": "0.5",
                      "levels": "4"},
}


class ValidationError(Exception):
    """Configuration problem; the message names the offending key."""


@dataclass
class ExperimentConfig:
    problem: str
    domain: str = "disk"
    s_values: tuple = (0.5,)
    mu: float = 1.0
    levels: int = 3
    start_level: int = 1
    ratio: float = 0.5
    tol: float = 1e-6
    max_iter: int = 20000
    seed: int = 0
    out: str = "out"
    preset: str = ""
    level: int = 0
    sinc_n: int = 0
    sinc_m: int = 0
    sinc_k: float = 0.0
    raw: dict = field(default_factory=dict)


def parse_config_text(text):
    """Flat ``key = value`` lines -> dict of strings."""
    out = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {ln}: expected 'key = value'")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _floats(raw, key, default):
    txt = raw.get(key)
    if txt is None:
        return default
    try:
        vals = tuple(float(p) for p in txt.split(",") if p.strip())
    except ValueError:
        raise ValidationError(f"key '{key}': not a number list: {txt!r}")
    return vals


def _scalar(raw, key, default, cast):
    txt = raw.get(key)
    if txt is None:
        return default
    try:
        return cast(txt)
    except ValueError:
        raise ValidationError(f"key '{key}': cannot parse {txt!r}")


def build_config(raw):
    problem = raw.get("problem")
    if problem not in PROBLEMS:
        raise ValidationError(
            f"key 'problem': must be one of {', '.join(PROBLEMS)}")
    domain = raw.get("domain", "disk" if problem != "dt" else "interval")
    if domain not in DOMAINS:
        raise ValidationError(
            f"key 'domain': must be one of {', '.join(DOMAINS)}")
    s_values = _floats(raw, "s", None)
    if not s_values:
        raise ValidationError("key 's': at least one value is required")
    for s in s_values:
        lo, hi = (0.0, 0.5) if problem == "graph" else (0.0, 1.0)
        if not lo < s < hi:
            raise ValidationError(
                f"key 's': {s} outside the admissible range ({lo}, {hi}) "
                f"for problem '{problem}'")
    cfg = ExperimentConfig(
        problem=problem,
        domain=domain,
        s_values=s_values,
        mu=_scalar(raw, "mu", 1.0, float),
        levels=_scalar(raw, "levels", 3, int),
        start_level=_scalar(raw, "start_level", 1, int),
        ratio=_scalar(raw, "ratio", 0.5, float),
        tol=_scalar(raw, "tol", 1e-6, float),
        max_iter=_scalar(raw, "max_iter", 20000, int),
        seed=_scalar(raw, "seed", 0, int),
        out=raw.get("out", "out"),
        preset=raw.get("preset", ""),
        level=_scalar(raw, "level", 0, int),
        sinc_n=_scalar(raw, "N", 0, int),
        sinc_m=_scalar(raw, "M", 0, int),
        sinc_k=_scalar(raw, "k", 0.0, float),
        raw=dict(raw),
    )
    if cfg.levels < 1:
        raise ValidationError("key 'levels': must be >= 1")
    if problem == "graph":
        from .minimal_graph import PRESET_NAMES
        if cfg.preset not in PRESET_NAMES:
            raise ValidationError(
                f"key 'preset': must be one of {', '.join(PRESET_NAMES)}")
    if problem == "dt" and domain != "interval":
        raise ValidationError(
            "key 'domain': the sinc-quadrature solver is one-dimensional; "
            "use domain = interval")
    return cfg


def _domain_object(name):
    return {
        "interval": fmesh.interval_domain,
        "square": fmesh.square_domain,
        "disk": fmesh.disk_domain,
        "annulus": fmesh.annulus_domain,
    }[name]()


def _header(cfg, schema):
    lines = [
        f"# schema={schema} version={SCHEMA_VERSION}",
        f"# package=fraclap {__version__}",
        f"# timestamp={time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]
    for key in sorted(cfg.raw):
        lines.append(f"# config {key}={cfg.raw[key]}")
    return "\n".join(lines) + "\n"


def _write(path, header, body):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(header)
        fh.write(body)
    return path


def _table_body(table):
    rows = [",".join(table.columns)]
    for lev, h, n, err, rate in table.rows:
        rows.append(f"{lev},{h:.12g},{n},{err:.12g},{rate:.12g}")
    return "\n".join(rows) + "\n"


def _fmt(x):
    return f"{x:.12g}"


def _run_linear(cfg, out):
    from .linear import convergence_study
    dom = _domain_object(cfg.domain)
    written = []
    for s in cfg.s_values:
        table = convergence_study(dom, s, cfg.levels, mu=cfg.mu,
                                  start_level=cfg.start_level,
                                  ratio=cfg.ratio)
        body = _table_body(table) + f"# fitted_rate={table.fitted_rate():.12g}\n"
        written.append(_write(out / f"rates-linear-s{s:g}.csv",
                              _header(cfg, "rate-table"), body))
    return written


def _run_dt(cfg, out):
    from .dunford_taylor import dt_convergence_study
    dom = _domain_object(cfg.domain)
    written = []
    for s in cfg.s_values:
        table = dt_convergence_study(dom, s, cfg.levels,
                                     start_level=max(cfg.start_level, 2))
        body = _table_body(table) + f"# fitted_rate={table.fitted_rate():.12g}\n"
        written.append(_write(out / f"rates-dt-s{s:g}.csv",
                              _header(cfg, "rate-table"), body))
    return written


def _run_obstacle(cfg, out):
    from .assembly import assemble_stiffness, free_nodes
    from .obstacle import (ObstacleProblem, ball_obstacle,
                           obstacle_convergence_study, solve_obstacle_pdas)
    dom = _domain_object(cfg.domain)
    written = []
    for s in cfg.s_values:
        if cfg.levels >= 3:
            table = obstacle_convergence_study(dom, s, cfg.levels, mu=cfg.mu,
                                               start_level=cfg.start_level)
            body = (_table_body(table)
                    + f"# fitted_rate={table.fitted_rate():.12g}\n")
            written.append(_write(out / f"rates-obstacle-s{s:g}.csv",
                                  _header(cfg, "rate-table"), body))
        coarse = fmesh.coarse_mesh(dom)
        h = coarse.h_global * cfg.ratio ** max(cfg.start_level, 1)
        m = (fmesh.build_graded(dom, h, mu=cfg.mu) if cfg.mu != 1.0
             else fmesh.uniform_refine(coarse))
        A = assemble_stiffness(m, s, None)
        prob = ObstacleProblem(m, s, ball_obstacle)
        res = solve_obstacle_pdas(prob, stiffness=A)
        chi = prob.chi_nodal(A.free)
        rows = ["x,y,u,chi,lambda,active"]
        pts = m.vertices[A.free]
        for i in range(len(chi)):
            rows.append(",".join([
                _fmt(pts[i, 0]), _fmt(pts[i, 1] if m.dim == 2 else 0.0),
                _fmt(res.values[i]), _fmt(chi[i]), _fmt(res.multiplier[i]),
                str(int(res.active[i]))]))
        written.append(_write(out / f"obstacle-nodes-s{s:g}.csv",
                              _header(cfg, "obstacle-nodes"),
                              "\n".join(rows) + "\n"))
    return written


def _run_graph(cfg, out):
    from .minimal_graph import (graph_preset, solve_graph_newton,
                                stickiness_indicator)
    written = []
    sticky = []
    for s in cfg.s_values:
        prob = graph_preset(cfg.preset, level=cfg.level, s=s)
        state, report = solve_graph_newton(prob, tol=min(cfg.tol, 1e-8))
        if not report.converged:
            raise RuntimeError(
                f"graph preset {cfg.preset}: Newton did not converge "
                f"(residual {report.residual_norms[-1]:.3e})")
        m = prob.mesh
        cols = "x,u" if m.dim == 1 else "x,y,u"
        rows = [cols]
        for i in range(m.num_vertices):
            p = m.vertices[i]
            vals = [_fmt(p[0])] + ([_fmt(p[1])] if m.dim == 2 else [])
            rows.append(",".join(vals + [_fmt(state.values[i])]))
        written.append(_write(out / f"graph-{cfg.preset}-s{s:g}.csv",
                              _header(cfg, "graph-nodes"),
                              "\n".join(rows) + "\n"))
        if m.dim == 1:
            sticky.append((s, stickiness_indicator(state)))
    if sticky:
        rows = ["s,stickiness"] + [f"{_fmt(s)},{_fmt(v)}" for s, v in sticky]
        written.append(_write(out / "stickiness.csv",
                              _header(cfg, "stickiness"),
                              "\n".join(rows) + "\n"))
    return written


def _run_precond_bench(cfg, out):
    from .assembly import assemble_stiffness
    from .solve import (BpxPreconditioner, SolverOptions, cg, gauss_seidel)
    dom = _domain_object(cfg.domain)
    written = []
    opts = SolverOptions(tol=cfg.tol, max_iter=cfg.max_iter)
    for s in cfg.s_values:
        meshes = [fmesh.coarse_mesh(dom)]
        rows = ["level,N,GS,CG,PCG"]
        for lev in range(1, cfg.levels + 1):
            meshes.append(fmesh.uniform_refine(meshes[-1]))
            A = assemble_stiffness(meshes[-1], s, None)
            rng = np.random.default_rng(cfg.seed)
            b = rng.standard_normal(A.matrix.shape[0])
            _, rep_gs = gauss_seidel(A.matrix, b, options=opts)
            _, rep_cg = cg(A.matrix, b, options=opts)
            bpx = BpxPreconditioner(meshes, s)
            _, rep_pcg = cg(A.matrix, b, M=bpx, options=opts)
            rows.append(f"{lev},{A.matrix.shape[0]},{rep_gs.iterations},"
                        f"{rep_cg.iterations},{rep_pcg.iterations}")
        written.append(_write(out / f"precond-bench-s{s:g}.csv",
                              _header(cfg, "precond-bench"),
                              "\n".join(rows) + "\n"))
    return written


_RUNNERS = {
    "linear": _run_linear,
    "dt": _run_dt,
    "obstacle": _run_obstacle,
    "graph": _run_graph,
    "precond-bench": _run_precond_bench,
}


def run(cfg, out_dir=None):
    """Execute one experiment; returns the list of written files."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    return _RUNNERS[cfg.problem](cfg, out)


def list_presets():
    lines = ["domains:"]
    for name in DOMAINS:
        lines.append(f"  {name}")
    lines.append("presets:")
    for name in sorted(PRESETS):
        spec = PRESETS[name]
        kv = " ".join(f"{k}={spec[k]}" for k in sorted(spec))
        lines.append(f"  {name}: {kv}")
    return "\n".join(lines)


def _set_threads(k):
    try:
        import numba
        numba.set_num_threads(max(1, int(k)))
    except Exception:
        pass


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fraclap", description="fractional Laplacian experiment runner")
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="run an experiment configuration")
    p_run.add_argument("config", help="path to a key=value configuration, "
                       "or the name of a preset")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=None,
                       help="cap on worker threads")
    sub.add_parser("list-presets", help="show domains and presets")
    args = parser.parse_args(argv)
    if args.command == "list-presets":
        print(list_presets())
        return EXIT_OK
    if args.command != "run":
        parser.print_help()
        return EXIT_VALIDATION
    if args.threads is not None:
        _set_threads(args.threads)
    try:
        if args.config in PRESETS:
            raw = dict(PRESETS[args.config])
        else:
            path = Path(args.config)
            if not path.is_file():
                raise ValidationError(f"config file not found: {path}")
            raw = parse_config_text(path.read_text())
        cfg = build_config(raw)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        written = run(cfg, out_dir=args.out)
    except Exception as exc:  # numerical / runtime failure
        print(f"failure in problem '{cfg.problem}': {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
