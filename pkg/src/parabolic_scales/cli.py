"""Command-line front end: one JSON scenario in, one JSON report (and maybe a CSV) out.

    parabolic-scales symalg    --config conf.json
    parabolic-scales integrate --config run.json --out results/
    parabolic-scales check     --config fixture_check.json --tol 1e-8
    parabolic-scales suite     --config suite.json --seed 3

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration or
input data, 3 numerical breakdown.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import lie_core as lc
from .errors import (
    ConfigError,
    DegenerateDirection,
    DegenerateSampling,
    DimensionError,
    NormalizationError,
    NumericalBreakdown,
    SingularMetric,
    SpecMismatch,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_INPUT_ERRORS = (ConfigError, DimensionError, SpecMismatch, NormalizationError, DegenerateDirection)
_NUMERIC_ERRORS = (NumericalBreakdown, DegenerateSampling, SingularMetric, np.linalg.LinAlgError,
                   FloatingPointError)

DEFAULT_TOLERANCES = {
    "integrate": {"residual": 1e-6, "closed_form": 1e-6},
    "check": {"einstein": 1e-7, "closure": 1e-6, "legendrean": 1e-9, "cr": 1e-9},
}


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _tolerances(command: str, config: dict, override: float | None) -> dict:
    tol = dict(DEFAULT_TOLERANCES.get(command, {}))
    tol.update(config.get("tolerances", {}))
    if override is not None:
        tol = {k: override for k in tol}
    return tol


def _seed(config: dict, override: int | None) -> int:
    return override if override is not None else config.get("seed", 0)


def _plain(obj):
    from .acceptance import _plain as plain
    return plain(obj)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_symalg(config: dict, seed: int, tol: dict, ctx: dict) -> tuple:
    geometry, n = config["geometry"], config["n"]
    payload = {"geometry": geometry, "n": n}
    if geometry == "conformal":
        spec = lc.so_conformal(n)
        model = config.get("model", "line")
        U = np.asarray(config.get("U", np.eye(n)[0]), float)
        if U.shape != (n,):
            raise ConfigError(f"U must have length {n}")
        U = U / np.linalg.norm(U)
        C = np.zeros(n)
        if model == "circle":
            C = np.asarray(config.get("C", 0.5 * np.eye(n)[1 % n]), float)
            if C.shape != (n,):
                raise ConfigError(f"C must have length {n}")
            C = C - (C @ U) * U
            V = lc.circle_generator(spec, U, C)
        else:
            V = lc.line_generator(spec, U)
        expected = lc.conformal_sym_dim(n)
        tag, data = f"conf_{model}", {"U": U, "C": C}
        payload["model"] = model
    elif geometry == "legendrean":
        spec = lc.sl_contact(n)
        U = np.asarray(config.get("U", np.eye(n)[0]), float)
        Vc = np.asarray(config.get("V", np.eye(n)[0]), float)
        if U.shape != (n,) or Vc.shape != (n,):
            raise ConfigError(f"U and V must have length {n}")
        if abs(U @ Vc) < 1e-12:
            raise NormalizationError("U and V pair to zero")
        Vc = Vc / (U @ Vc)
        V = lc.legendrean_generator(spec, U, Vc)
        expected = lc.contact_sym_dim(n)
        tag, data = "legendrean", {"U": U, "V": Vc}
    else:
        spec = lc.su_cr(n)
        U = np.asarray(config.get("U", np.eye(n)[0]), float).astype(complex)
        if U.shape != (n,):
            raise ConfigError(f"U must have length {n}")
        V = lc.cr_generator(spec, U)
        expected = None
        tag, data = "cr", {"U": U}
    f = lc.dkr_filtration(spec, V)
    constraints = lc.verify_sym_constraints(f.sym, tag, data)
    moduli = spec.dim - f.sym.dim
    payload.update({"algebra_dim": spec.dim, "chain_dims": f.dims, "sym_dim": f.sym.dim,
                    "moduli_dim": moduli, "constraints_hold": constraints})
    if geometry == "cr":
        payload["expected_moduli_dim"] = 6 * n - 1
        passed = constraints and moduli == 6 * n - 1
    else:
        payload["expected_sym_dim"] = expected
        passed = constraints and f.sym.dim == expected
    return passed, payload


def _metric_from(config: dict):
    from .metrics import get_metric
    spec = config.get("metric")
    if spec is None:
        raise ConfigError("this command needs a 'metric' entry")
    return get_metric(spec["name"], **spec.get("params", {}))


def cmd_integrate(config: dict, seed: int, tol: dict, ctx: dict) -> tuple:
    from .conformal_curves import (
        CurveState,
        cc_residual_norms,
        conformal_circle_integrate,
        geodesic_integrate,
        sphere_geodesic_point,
        write_trajectory_csv,
    )

    m = _metric_from(config)
    init = config["initial"]
    x0 = np.asarray(init["x"], float)
    if x0.shape != (m.n,) or len(init["U"]) != m.n or len(init.get("C", [0] * m.n)) != m.n:
        raise ConfigError(f"initial data must have length {m.n} for metric {m.name}")
    if not m.contains(x0[None])[0]:
        raise ConfigError(f"initial point lies outside the chart box {m.domain_hint}")
    st = CurveState.normalized(m, x0, init["U"], init.get("C"))
    step, length = config.get("step", 1e-3), config.get("length", 1.0)
    if config["mode"] == "geodesic":
        tr = geodesic_integrate(m, st.x, st.U, length=length, step=step)
    else:
        tr = conformal_circle_integrate(m, st.x, st.U, st.C, length=length, step=step)
    E = cc_residual_norms(m, tr)
    payload = {"metric": m.name, "mode": config["mode"], "samples": len(tr),
               "arc_length": float(tr.t[-1]), "left_chart": tr.exited,
               "max_residual": float(E.max()), "drift": tr.drift}
    passed = bool(E.max() < tol["residual"]) and not tr.exited
    form = config.get("closed_form")
    if form is not None:
        s = tr.t[:, None]
        if form == "flat_circle":
            if m.name != "flat":
                raise ConfigError("closed_form 'flat_circle' needs the flat metric")
            k = float(np.linalg.norm(st.C))
            if k == 0.0 or config["mode"] == "geodesic":
                exact = st.x + s * st.U
            else:
                exact = st.x + st.U * np.sin(k * s) / k + st.C * (1 - np.cos(k * s)) / k**2
        else:
            if m.name != "round_sphere" or config["mode"] != "geodesic":
                raise ConfigError("closed_form 'great_circle' needs a round_sphere geodesic")
            exact = sphere_geodesic_point(tr.t, st.x, st.U)
        dev = float(np.max(np.linalg.norm(tr.x - exact, axis=1)))
        payload["closed_form"] = form
        payload["closed_form_deviation"] = dev
        passed = passed and dev < tol["closed_form"]
    if ctx.get("out") is not None:
        path = ctx["out"] / f"{ctx['stem']}.trajectory.csv"
        write_trajectory_csv(path, tr, E)
        payload["trajectory_csv"] = path.name
    return passed, payload


def _start_points(m, count, rng):
    lo, hi = m.domain_hint
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    r = np.minimum(0.3, 0.3 * half)
    return mid + r * rng.uniform(-1.0, 1.0, size=(count, m.n))


def _fixture_path(config: dict, ctx: dict) -> Path:
    if "fixture" not in config:
        raise ConfigError("this check needs a 'fixture' path")
    path = Path(config["fixture"])
    return path if path.is_absolute() else ctx["base"] / path


def cmd_check(config: dict, seed: int, tol: dict, ctx: dict) -> tuple:
    from .conformal_curves import CurveState, eigencheck_norm, geodesic_integrate
    from .riemann_engine import einstein_check
    from .schemas import load_fixture
    from .tractor import closure_defect

    kind = config["kind"]
    rng = np.random.default_rng(seed)
    payload = {"kind": kind}
    if kind == "einstein":
        m = _metric_from(config)
        res = einstein_check(m, _start_points(m, config.get("points", 20), rng), tol["einstein"])
        payload.update({"metric": m.name, "is_einstein": res.is_einstein, "lambda": res.lam,
                        "lambda_variation": res.lam_variation, "max_defect": res.max_defect})
        return res.is_einstein, payload
    if kind == "closure":
        m = _metric_from(config)
        pts = _start_points(m, config.get("curves", 5), rng)
        states = [CurveState.normalized(m, x, rng.normal(size=m.n)) for x in pts]
        trajs = geodesic_integrate(m, states, length=config.get("length", 1.0),
                                   step=config.get("step", 1e-3))
        rows = []
        for tr in trajs:
            cd = closure_defect(m, tr)
            ec = eigencheck_norm(m, tr.x[1:-1], tr.U[1:-1])
            rows.append({"max_closure": float(cd.max()), "max_eigencheck": float(ec.max()),
                         "left_chart": tr.exited})
        distinguished = all(r["max_closure"] < tol["closure"] for r in rows)
        payload.update({"metric": m.name, "curves": rows, "all_distinguished": distinguished})
        return distinguished, payload
    # curvature fixtures
    geometry, samples, meta = load_fixture(_fixture_path(config, ctx), kind)
    if kind == "legendrean":
        from .legendrean import constraint_check, einstein_scale_check, random_direction
        res = einstein_scale_check(samples, tol[kind])
        check, draw = constraint_check, (lambda s: random_direction(s.n, rng))
    else:
        from .cr import cr_constraint_check, cr_einstein_check, random_cr_direction
        res = cr_einstein_check(samples, tol[kind])
        check, draw = cr_constraint_check, (lambda s: random_cr_direction(s.h, rng))
    payload.update({"fixture": Path(config["fixture"]).name, "samples": len(samples),
                    "pure_trace": res.passed, "lambda": res.lam,
                    "lambda_variation": res.lam_variation,
                    "failures": [list(f) for f in res.failures], "curve_meta": meta})
    passed = res.passed
    if "expect_lambda" in config:
        match = abs(res.lam - config["expect_lambda"]) < tol[kind]
        payload["expected_lambda"] = config["expect_lambda"]
        passed = passed and match
    count = config.get("directions", 0)
    if count:
        verdicts = [check(s, draw(s), tol[kind]).passed for s in samples for _ in range(count)]
        payload["directions_distinguished"] = sum(verdicts)
        payload["directions_tested"] = len(verdicts)
    return passed, payload


def cmd_suite(config: dict, seed: int, tol: dict, ctx: dict) -> tuple:
    from .acceptance import run_all

    fixtures = {}
    for key, paths in config.get("fixtures", {}).items():
        fixtures[key] = [str(p if Path(p).is_absolute() else ctx["base"] / p) for p in paths]
    results = run_all(seed, fixtures, config.get("criteria"))
    payload = {"criteria": [r.to_json() for r in results],
               "skipped": [r.number for r in results if r.skipped]}
    if ctx.get("tol_override") is not None:
        payload["tolerance_override_ignored"] = True
    for r in results:
        ctx["echo"](r.line())
    return all(r.passed for r in results if not r.skipped), payload


COMMANDS = {"symalg": cmd_symalg, "integrate": cmd_integrate, "check": cmd_check,
            "suite": cmd_suite}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------
_HELP = {
    "symalg": "symmetry-algebra and moduli dimensions of a model curve",
    "integrate": "integrate a geodesic or conformal circle and compare to a closed form",
    "check": "Einstein, closure, Legendrean or CR scale checks",
    "suite": "run acceptance criteria and collect their verdicts",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parabolic-scales",
                                     description="Distinguished-curve checks for parabolic geometries.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, type=Path, help="scenario JSON file")
        p.add_argument("--out", type=Path, help="directory for the report and CSV output")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--tol", type=float, help="override every tolerance of the command")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    from .schemas import load_config

    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        config = load_config(args.config)
        if config["command"] != args.command:
            raise ConfigError(f"{args.config.name}: config is for '{config['command']}', "
                              f"not '{args.command}'")
        seed = _seed(config, args.seed)
        tol = _tolerances(args.command, config, None if args.command == "suite" else args.tol)
        stem = config.get("id", args.config.stem)
        ctx = {"base": args.config.resolve().parent, "out": args.out, "stem": stem,
               "tol_override": args.tol, "echo": lambda line: print(line, file=stderr)}
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            passed, payload = COMMANDS[args.command](config, seed, tol, ctx)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numerical breakdown: {exc}", file=stderr)
        return EXIT_NUMERIC

    report = {
        "id": stem,
        "command": args.command,
        "passed": bool(passed),
        "payload": _plain(payload),
        "seed": seed,
        "tolerances": tol,
        "tool_version": __version__,
        "config_hash": config_hash(config),
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        (args.out / f"{stem}.report.json").write_text(text)
    else:
        stdout.write(text)
    return EXIT_PASS if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
