"""Command-line driver: ``heatlab <command> [options]``.

Output is JSON on stdout (or ``--output``), CSV for heat-trace curves.
Exit codes: 0 success, 2 schema/usage error, 3 numerical-contract violation.
``HEATLAB_THREADS`` caps BLAS threads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .exceptions import HeatlabError, NumericalContractError, SchemaError

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3
MODELS = ("circle", "torus", "interval", "sphere2", "sphere4", "complexTorus")
COMMANDS = ("coeffs", "spectrum", "heattrace", "fit", "index", "betti", "gaussbonnet", "boundary",
            "dolbeault", "invariance", "accept")


@dataclass
class ExperimentConfig:
    """Schema of an experiment; defaults make an empty config run ``accept``."""

    command: str = "accept"
    model: str = "circle"
    theta: list = field(default_factory=list)
    bc: str = "relative"
    N: int | None = None
    t: list = field(default_factory=list)
    t_window: list | None = None
    order: int | None = None
    degree: int | None = None
    parity: str | None = None
    point: list = field(default_factory=list)
    chart: dict | None = None
    m: int | None = None
    n: int | None = None
    boundary: bool = False
    no_theta: bool = False
    table: bool = False
    ell: int | None = None
    L: list = field(default_factory=list)
    S: float | None = None
    checks: list = field(default_factory=list)
    output: str | None = None
    format: str = "json"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise SchemaError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise SchemaError(f"unknown command {self.command!r}")
        if self.model not in MODELS:
            raise SchemaError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.bc not in ("relative", "absolute", "dirichlet", "robin"):
            raise SchemaError("bc must be relative, absolute, dirichlet or robin")
        if self.format not in ("json", "csv"):
            raise SchemaError("format must be json or csv")
        if self.N is not None and (not isinstance(self.N, int) or self.N < 1):
            raise SchemaError("N must be a positive integer")
        if self.t_window is not None and (len(self.t_window) != 2 or not 0 < self.t_window[0] < self.t_window[1]):
            raise SchemaError("t_window must be two increasing positive numbers")
        if self.parity not in (None, "all", "even"):
            raise SchemaError("parity must be all or even")


# model construction -----------------------------------------------------------

DEFAULT_N = {"circle": 400, "torus": 24, "interval": 200, "complexTorus": 24}


def _twist(cfg: ExperimentConfig, model):
    from .model_manifolds import TwistForm

    comps = list(cfg.theta) or ["0"] * model.dim
    if len(comps) == 1 and model.dim == 2:
        comps = comps + ["0"]
    return TwistForm.on(model, comps)


def build_complex(cfg: ExperimentConfig):
    from .model_manifolds import ModelManifold
    from .twisted_complexes import (BoundaryConditionSpec, assemble_circle, assemble_dolbeault_torus,
                                    assemble_interval, assemble_torus)

    N = cfg.N or DEFAULT_N.get(cfg.model, 24)
    if cfg.model == "circle":
        return assemble_circle(_twist(cfg, ModelManifold.circle()), N)
    if cfg.model == "torus":
        return assemble_torus(_twist(cfg, ModelManifold.flat_torus()), N)
    if cfg.model == "interval":
        if any(str(t).strip() not in ("0", "") for t in cfg.theta):
            from .exceptions import UnsupportedConfigurationError
            raise UnsupportedConfigurationError("twisted complexes on the interval are not supported")
        flavor = "relative" if cfg.bc in ("relative", "dirichlet") else "absolute"
        return assemble_interval(BoundaryConditionSpec(flavor), N)
    if cfg.model == "complexTorus":
        return assemble_dolbeault_torus(cfg.theta[0] if cfg.theta else "0", N)
    raise SchemaError(f"no spectral complex for model {cfg.model!r}")


def _spectrum(cfg: ExperimentConfig):
    from .spectral_engine import eigensolve

    return eigensolve(build_complex(cfg))


def _t_values(cfg: ExperimentConfig, spec) -> np.ndarray:
    from .spectral_engine import T_MAX, geometric_grid

    if cfg.t:
        return np.asarray(cfg.t, dtype=float)
    lo, hi = cfg.t_window or (max(spec.t_min, 1e-3), T_MAX)
    return geometric_grid(lo, hi)


# commands ---------------------------------------------------------------------

def cmd_spectrum(cfg):
    return _spectrum(cfg).to_dict()


def cmd_heattrace(cfg):
    from .spectral_engine import curves_csv, heat_trace, supertrace

    spec = _spectrum(cfg)
    t = _t_values(cfg, spec)
    if cfg.format == "csv":
        return curves_csv(spec, t)
    traces = heat_trace(spec, t)
    return {"t": t.tolist(), "traces": traces.tolist(), "supertrace": supertrace(spec, t).tolist(),
            "t_min": spec.t_min}


def cmd_fit(cfg):
    from .spectral_engine import fit_asymptotics

    spec = _spectrum(cfg)
    m = 2 if cfg.model in ("torus", "complexTorus") else 1
    window = tuple(cfg.t_window) if cfg.t_window else None
    parity = cfg.parity or ("all" if cfg.model == "interval" else "even")
    fit = fit_asymptotics(spec, m=m, K=cfg.order, t_window=window, degree=cfg.degree, parity=parity)
    doc = fit.to_dict()
    if cfg.model == "circle":
        doc["closed_form"] = _circle_closed_form(cfg)
    return doc


def _circle_closed_form(cfg) -> dict:
    """Quadrature of the a_0, a_2, a_4 densities for the twisted circle."""
    import sympy as sp

    from .expressions import lambdify, parse_expression
    from .laplace_ops import twisted_circle_invariants
    from .model_manifolds import ModelManifold

    expr = cfg.theta[0] if cfg.theta else "0"
    circle = ModelManifold.circle()
    x = sp.Symbol("x", real=True)
    e = parse_expression(expr, ("x",))
    pts, w = circle.quadrature()
    jets = [lambdify(sp.diff(e, x, k) if k else e, ("x",))(pts[:, 0]) for k in range(4)]
    dens = [twisted_circle_invariants([j[i] for j in jets]) for i in range(len(w))]
    key = cfg.degree if cfg.degree is not None else "super"
    return {f"c{2 * k}": float(np.dot(w, [d[key][f"a{2 * k}"] for d in dens])) for k in range(3)}


def cmd_betti(cfg):
    from .spectral_engine import kernel_report

    rep = kernel_report(_spectrum(cfg))
    return {"betti": list(rep["betti"]), "gap_ratio": rep["gap_ratio"]}


def cmd_index(cfg):
    from .spectral_engine import kernel_report

    spec = _spectrum(cfg)
    rep = kernel_report(spec)
    return {"index": int(sum(s * b for s, b in zip(spec.signs, rep["betti"]))), "gap_ratio": rep["gap_ratio"]}


def cmd_gaussbonnet(cfg):
    from .model_manifolds import ModelManifold, euler_characteristic

    if cfg.model == "sphere2":
        model = ModelManifold.round_sphere(2)
    elif cfg.model == "sphere4":
        model = ModelManifold.round_sphere(4)
    elif cfg.model == "torus":
        model = ModelManifold.flat_torus()
    elif cfg.model == "circle":
        model = ModelManifold.circle()
    else:
        raise SchemaError("gaussbonnet needs a closed model (sphere2, sphere4, torus, circle)")
    return {"model": model.to_dict(), "euler_integral": euler_characteristic(model)}


def cmd_boundary(cfg):
    from .laplace_ops import BoundaryData, boundary_Q, boundary_a

    m = cfg.m or 1
    L = np.asarray(cfg.L, dtype=float).reshape(m - 1, m - 1) if cfg.L else np.zeros((m - 1, m - 1))
    if cfg.bc == "robin":
        bd = BoundaryData.robin(cfg.S or 0.0, 1, L, m)
    else:
        bd = BoundaryData.dirichlet(1, L, m)
    doc = {"m": m, "bc": "robin" if cfg.bc == "robin" else "dirichlet"}
    ells = [cfg.ell] if cfg.ell in (0, 1) else [0, 1]
    for ell in ells:
        doc[f"a{ell}_bd"] = boundary_a(ell, bd, m=m)
    doc["Q"] = {str(k): boundary_Q(None, L, k, m) for k in range(0, 1)}
    return doc


def cmd_dolbeault(cfg):
    from .acceptance import _dolbeault_density_integral
    from .spectral_engine import kernel_report, spectral_distance

    cfg.model = "complexTorus"
    spec = _spectrum(cfg)
    rep = kernel_report(spec)
    N = cfg.N or DEFAULT_N["complexTorus"]
    nz = [e[e > 1e-8 * max(1.0, e[-1])] for e in (spec.reliable(0), spec.reliable(1))]
    dist, count = spectral_distance(nz[0], nz[1], (math.pi * N) ** 2)
    theta = cfg.theta[0] if cfg.theta else "0"
    return {"theta": theta, "betti": list(rep["betti"]), "index": rep["betti"][0] - rep["betti"][1],
            "gap_ratio": rep["gap_ratio"], "nonzero_spectrum_dev": dist, "compared": count,
            "a2_density_integral": _dolbeault_density_integral(theta)}


def cmd_coeffs(cfg):
    """Local invariants at a point: twisted circle, or the scalar Laplacian of a chart."""
    from .laplace_ops import LaplaceCoefficients, a0, a2, a4, canonicalize, euler_form
    from .tensor_core.charts import Chart
    from .tensor_core.curvature import christoffel_series, curvature

    if cfg.chart is None:
        if cfg.model != "circle":
            raise SchemaError("coeffs needs --chart or --model circle")
        import sympy as sp

        from .expressions import lambdify, parse_expression
        from .laplace_ops import twisted_circle_invariants

        x0 = float(cfg.point[0]) if cfg.point else 0.0
        e = parse_expression(cfg.theta[0] if cfg.theta else "0", ("x",))
        xs = sp.Symbol("x", real=True)
        jets = [float(lambdify(sp.diff(e, xs, k) if k else e, ("x",))(np.array([x0]))[0]) for k in range(4)]
        return {"point": [x0], "invariants": twisted_circle_invariants(jets)}
    chart = Chart.from_dict(cfg.chart)
    point = np.asarray(cfg.point or [1.0] * chart.dim, dtype=float)
    jet = chart.metric_jet(point, order=4)
    pack = curvature(jet)
    g = jet.to_taylor(4)
    gamma = christoffel_series(g)
    ginv = g.matinv()
    from .tensor_core.taylor import contract

    # scalar Laplacian: A^k = -g^ij Gamma_ij^k, B = 0
    a_series = contract("...ij,...ijk->...k", ginv, gamma).scale(-1).map(lambda c: c[..., None, None])
    b_jets = [np.zeros((1, 1) + (chart.dim,) * k) for k in range(3)]
    op = LaplaceCoefficients(a_series.jets(), b_jets, polynomial=False)
    can = canonicalize(op, jet, e_order=2)
    return {"point": point.tolist(), "tau": float(pack.tau), "euler_form": float(euler_form(pack)),
            "a0": a0(can), "a2": a2(can, pack), "a4": a4(can, pack)}


def cmd_invariance(cfg):
    from .invariance_lab import enumerate_monomials, kernel_scan

    if cfg.m is None or cfg.n is None:
        raise SchemaError("invariance needs --m and --n")
    if cfg.degree == -1:  # enumerate mode
        mons = enumerate_monomials(cfg.m, cfg.n, not cfg.no_theta, cfg.boundary)
        return {"m": cfg.m, "n": cfg.n, "count": len(mons), "monomials": [x.to_dict() for x in mons]}
    res = kernel_scan(cfg.m, cfg.n, not cfg.no_theta, cfg.boundary)
    if cfg.format == "csv" or cfg.table:
        return res.table() + "\n"
    doc = res.to_dict(full=cfg.table)
    doc["survivors"] = [s["monomial"] for s in doc["survivors"]] if not doc["survivors"] else doc["survivors"]
    return doc


def cmd_accept(cfg):
    from .acceptance import run_all

    results = run_all([int(c) for c in cfg.checks] or None)
    for r in results:
        print(r.line(), file=sys.stderr)
    return {"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}


HANDLERS = {
    "coeffs": cmd_coeffs, "spectrum": cmd_spectrum, "heattrace": cmd_heattrace, "fit": cmd_fit,
    "index": cmd_index, "betti": cmd_betti, "gaussbonnet": cmd_gaussbonnet, "boundary": cmd_boundary,
    "dolbeault": cmd_dolbeault, "invariance": cmd_invariance, "accept": cmd_accept,
}


def run(cfg: ExperimentConfig) -> tuple[int, object]:
    """Execute a validated config; returns ``(exit code, payload)``."""
    cfg.validate()
    try:
        return EXIT_OK, HANDLERS[cfg.command](cfg)
    except NumericalContractError as exc:
        return EXIT_NUMERIC, {"error": type(exc).__name__, "message": str(exc),
                              **({"t_min": exc.t_min} if hasattr(exc, "t_min") else {})}
    except (HeatlabError, ValueError, NotImplementedError) as exc:
        return EXIT_SCHEMA, {"error": type(exc).__name__, "message": str(exc)}


# argument parsing ---------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatlab", description="Twisted heat-trace laboratory")
    parser.add_argument("--config", help="JSON experiment config (command-line flags override it)")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--model", choices=MODELS)
        p.add_argument("--theta", action="append", help="twist component; repeat per coordinate")
        p.add_argument("--N", type=int, help="Fourier/sine truncation")
        p.add_argument("--bc", choices=("relative", "absolute", "dirichlet", "robin"))
        p.add_argument("--output", help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"))

    for name in COMMANDS:
        p = sub.add_parser(name)
        common(p)
        if name in ("heattrace", "fit"):
            p.add_argument("--t", type=_floats, help="comma-separated t values")
            p.add_argument("--t-window", type=_floats, dest="t_window")
        if name == "fit":
            p.add_argument("--order", type=int, help="highest n in the fit (default m + 4)")
            p.add_argument("--degree", type=int, help="fit one degree instead of the supertrace")
            p.add_argument("--parity", choices=("all", "even"))
        if name == "coeffs":
            p.add_argument("--chart", help="chart JSON file")
            p.add_argument("--point", type=_floats)
        if name == "boundary":
            p.add_argument("--m", type=int)
            p.add_argument("--ell", type=int)
            p.add_argument("--L", type=_floats, help="second fundamental form, row-major")
            p.add_argument("--S", type=float)
        if name == "invariance":
            p.add_argument("action", nargs="?", choices=("scan", "enumerate"), default="scan")
            p.add_argument("--m", type=int)
            p.add_argument("--n", type=int)
            p.add_argument("--boundary", action="store_true", default=None)
            p.add_argument("--no-theta", action="store_true", dest="no_theta", default=None)
            p.add_argument("--table", action="store_true", default=None)
        if name == "accept":
            p.add_argument("--only", type=int, action="append", dest="checks")
    return parser


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read config: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaError("config must be a JSON object")
    values = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "action")}
    if getattr(args, "action", None) == "enumerate":
        values["degree"] = -1
    if "chart" in values:
        try:
            with open(values["chart"]) as fh:
                values["chart"] = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read chart: {exc}") from exc
    doc.update(values)
    defaults = {"coeffs": "circle", "gaussbonnet": "sphere2", "dolbeault": "complexTorus"}
    if "model" not in doc and doc.get("command") in defaults:
        doc["model"] = defaults[doc["command"]]
    return ExperimentConfig.from_dict(doc)


def _stringify_keys(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify_keys(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stringify_keys(v) for v in obj]
    return obj


def _emit(payload, cfg: ExperimentConfig | None) -> None:
    text = payload if isinstance(payload, str) else json.dumps(_stringify_keys(payload), sort_keys=True,
                                                                 indent=2, default=_default)
    if cfg is not None and cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    threads = os.environ.get("HEATLAB_THREADS")
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    except HeatlabError as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)}, None)
        return EXIT_SCHEMA
    if threads:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=int(threads)):
            code, payload = run(cfg)
    else:
        code, payload = run(cfg)
    if code == EXIT_OK and cfg.command == "accept" and not payload["passed"]:
        code = EXIT_NUMERIC
    _emit(payload, cfg if code == EXIT_OK else None)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
