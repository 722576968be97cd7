"""Command-line front end: ``mcmc-certify <task> --config PATH``.

Exit codes: 0 success, 2 configuration error, 3 numeric or model error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import tables
from .bounds import (
    GeometricDriftParams,
    MomentInputs,
    PolynomialDriftParams,
    combine_mse_bound,
    confidence_plan,
    geo_bounds,
    geo_complementary,
    poly_bounds,
    poly_complete_moments,
)
from .errors import CertifyError, InadmissibleSmallSetError, InvalidInputError
from .models.contracting_normals import (
    ContractingNormalsModel,
    ContractingNormalsParams,
    contracting_exact_plan,
    contracting_params,
)
from .models.hier_t import HierTModel, HierTParams, hier_t_drift, hier_t_params
from .models.poisson_gamma import REFERENCE_DRIFT, REFERENCE_F_NORM, PumpModel, PumpParams, load_pump_data
from .models.toy_poly import ToyPolyModel, ToyPolyParams
from .regen import estimate_constants, estimate_rmse, simulate_split

TASKS = ("bound", "simulate", "constants", "confidence", "sweep", "table")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}

MODEL_SCHEMAS = {
    "hier_t": {
        "type": "object",
        "properties": {"name": {"const": "hier_t"}, "t": {"type": "integer", "minimum": 4}, "a": _num,
                       "mu0": _num},
        "required": ["name", "t"],
        "additionalProperties": False,
    },
    "contracting_normals": {
        "type": "object",
        "properties": {"name": {"const": "contracting_normals"}, "c": _num, "d": _num, "x0": _num},
        "required": ["name", "c", "d"],
        "additionalProperties": False,
    },
    "poisson_gamma": {
        "type": "object",
        "properties": {
            "name": {"const": "poisson_gamma"},
            "alpha_h": _num, "sigma_h": _num, "gamma_h": _num, "shift": _num,
            "component": {"type": "integer", "minimum": 0},
            "data": {"type": "string"},
            "verify_checksum": {"type": "boolean"},
            "drift": {
                "type": "object",
                "properties": {"lambda": _num, "K": _num, "beta": _num},
                "required": ["lambda", "K", "beta"],
                "additionalProperties": False,
            },
            "f_norm": _num,
        },
        "required": ["name"],
        "additionalProperties": False,
    },
    "toy_poly": {
        "type": "object",
        "properties": {"name": {"const": "toy_poly"}, "alpha": _num, "lambda": _num, "jump": _num,
                       "persist": _num, "x_J": _num},
        "required": ["name"],
        "additionalProperties": False,
    },
    "custom": {
        "type": "object",
        "properties": {"name": {"const": "custom"}, "lambda": _num, "K": _num, "beta": _num, "alpha": _num,
                       "small_set": {"type": "string"}},
        "required": ["name", "lambda", "K", "beta"],
        "additionalProperties": False,
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "task": {"enum": list(TASKS)},
        "model": {"type": "object", "properties": {"name": {"enum": list(MODEL_SCHEMAS)}}, "required": ["name"]},
        "moments": {
            "type": "object",
            "properties": {
                "pi_V": {"oneOf": [_num, {"enum": ["exact", "drift"]}]},
                "pi_sqrtV": _num,
                "pi_V_eta": {"type": "object", "additionalProperties": _num},
                "xi_V": _num, "xi_sqrtV": _num, "start_V": _num,
                "fbar_norm": _num, "f_norm": _num, "inf_V": _num,
                "sqrtV_rule": {"enum": ["drift", "jensen"]},
            },
            "additionalProperties": False,
        },
        "c0_variant": {"enum": ["V", "sqrtV"]},
        "n": {"oneOf": [_pos_int, {"type": "array", "items": _pos_int, "minItems": 1}]},
        "confidence": {
            "type": "object",
            "properties": {"epsilon": _num, "alpha": _num, "ceiling": _pos_int},
            "required": ["epsilon", "alpha"],
            "additionalProperties": False,
        },
        "replicates": _pos_int,
        "n_blocks": _pos_int,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "sweep": {
            "type": "object",
            "properties": {
                "param": {"const": "a"},
                "lo": _num, "hi": _num,
                "points": _pos_int,
                "objective": {"enum": ["sigma_known_pi_V", "sigma_drift_only"]},
            },
            "required": ["lo", "hi"],
            "additionalProperties": False,
        },
        "table": {"enum": [1, 2, 3, 4]},
        "monte_carlo": {"type": "boolean"},
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv", "text"]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    pass


def _path_str(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "/" + "/".join(parts) if parts else "/"


def validate_config(cfg) -> dict:
    v = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        raise ConfigError(f"config error at {_path_str(e)}: {e.message}")
    if "model" in cfg:
        name = cfg["model"]["name"]
        mv = jsonschema.Draft202012Validator(MODEL_SCHEMAS[name])
        errs = sorted(mv.iter_errors(cfg["model"]), key=lambda e: list(e.absolute_path))
        if errs:
            e = errs[0]
            sub = "/".join(str(p) for p in e.absolute_path)
            raise ConfigError(f"config error at /model{'/' + sub if sub else ''}: {e.message}")
    return cfg


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# model assembly
# ---------------------------------------------------------------------------

def _require_model(cfg) -> dict:
    if "model" not in cfg:
        raise ConfigError("config error at /: 'model' is required for this task")
    return cfg["model"]


def _drift_and_moments(cfg):
    """Drift parameters and filled MomentInputs for the configured model."""
    mc = _require_model(cfg)
    mo = dict(cfg.get("moments", {}))
    name = mc["name"]
    pi_V_opt = mo.pop("pi_V", None)
    rule = mo.pop("sqrtV_rule", None)
    try:
        eta = {float(k): v for k, v in mo.pop("pi_V_eta", {}).items()}
    except ValueError as exc:
        raise ConfigError(f"config error at /moments/pi_V_eta: exponent keys must be numbers ({exc})") from exc
    if name == "hier_t":
        if "a" not in mc:
            raise ConfigError("config error at /model: 'a' is required for bounds")
        p = HierTParams(mc["t"], mc["a"])
        dp = hier_t_params(p)
        exact_pi_V = hier_t_drift(p)[2]
        mu0 = mc.get("mu0", 0.0)
        mo.setdefault("start_V", 1 + mu0 * mu0)
        mo.setdefault("fbar_norm", 1.0)
        rule = rule or "drift"
    elif name == "contracting_normals":
        dp = contracting_params(ContractingNormalsParams(mc["c"], mc["d"]))
        exact_pi_V = 2.0
        x0 = mc.get("x0", 0.0)
        mo.setdefault("start_V", 1 + x0 * x0)
        mo.setdefault("fbar_norm", 1.0)
        rule = rule or "jensen"
    elif name == "poisson_gamma":
        d = mc.get("drift")
        dp = GeometricDriftParams(d["lambda"], d["K"], d["beta"], "user") if d else REFERENCE_DRIFT
        exact_pi_V = None
        mo.setdefault("start_V", 1.0)
        if "fbar_norm" not in mo:
            mo.setdefault("f_norm", mc.get("f_norm", REFERENCE_F_NORM))
        rule = rule or "jensen"
    elif name == "toy_poly":
        model = _build_model(mc)
        dp = model.drift
        exact_pi_V = None
        mo.setdefault("start_V", 1.0)
        mo.setdefault("fbar_norm", 1.0)
    else:
        if "alpha" in mc:
            dp = PolynomialDriftParams(mc["lambda"], mc["K"], mc["beta"], mc["alpha"], mc.get("small_set", ""))
        else:
            dp = GeometricDriftParams(mc["lambda"], mc["K"], mc["beta"], mc.get("small_set", ""))
        exact_pi_V = None
        rule = rule or "drift"
    if pi_V_opt == "exact":
        if exact_pi_V is None:
            raise ConfigError("config error at /moments/pi_V: no exact value known for this model")
        mo["pi_V"] = exact_pi_V
    elif isinstance(pi_V_opt, (int, float)):
        mo["pi_V"] = float(pi_V_opt)
    partial = MomentInputs(pi_V_eta=eta, **mo)
    if isinstance(dp, PolynomialDriftParams):
        return dp, poly_complete_moments(dp, partial)
    if partial.fbar_norm is None and partial.f_norm is None:
        raise ConfigError("config error at /moments: one of fbar_norm or f_norm is required")
    return dp, geo_complementary(dp, partial, sqrtV_rule=rule)


def _components(cfg):
    dp, m = _drift_and_moments(cfg)
    if isinstance(dp, PolynomialDriftParams):
        return dp, m, poly_bounds(dp, m)
    return dp, m, geo_bounds(dp, m, c0_variant=cfg.get("c0_variant", "sqrtV"))


def _build_model(mc):
    name = mc["name"]
    if name == "hier_t":
        return HierTModel(HierTParams(mc["t"], mc.get("a", 4.3)))
    if name == "contracting_normals":
        return ContractingNormalsModel(ContractingNormalsParams(mc["c"], mc["d"]))
    if name == "poisson_gamma":
        data = load_pump_data(mc.get("data"), verify=mc.get("verify_checksum", True))
        kw = {k: mc[k] for k in ("alpha_h", "sigma_h", "gamma_h", "shift", "component") if k in mc}
        return PumpModel(PumpParams(**kw), data)
    if name == "toy_poly":
        kw = {k: mc[k] for k in ("alpha", "jump", "persist", "x_J") if k in mc}
        if "lambda" in mc:
            kw["lam"] = mc["lambda"]
        return ToyPolyModel(ToyPolyParams(**kw))
    raise ConfigError(f"config error at /model/name: model {name!r} cannot be simulated")


def _start(model, mc):
    if mc["name"] == "hier_t":
        return float(mc.get("mu0", 0.0))
    if mc["name"] == "contracting_normals":
        return float(mc.get("x0", 0.0))
    return model.start_state()


def _ns(cfg, default=(10, 100, 1000)):
    n = cfg.get("n", list(default))
    return [n] if isinstance(n, int) else list(n)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(type(o))


def _moments_dict(m: MomentInputs) -> dict:
    d = {}
    for k in ("pi_V", "pi_sqrtV", "xi_V", "xi_sqrtV", "start_V", "xiPn_V", "xiPn_sqrtV", "fbar_norm", "f_norm",
              "inf_V"):
        v = getattr(m, k)
        if v is not None and not callable(v):
            d[k] = {"value": v, "source": "bound" if k in m.derived else "input"}
    for k, v in m.pi_V_eta.items():
        d[f"pi_V^{k:g}"] = {"value": v, "source": "bound" if f"pi_V^{k:g}" in m.derived else "input"}
    return d


# ---------------------------------------------------------------------------
# tasks; each returns (payload dict, optional Table or rows for csv/text)
# ---------------------------------------------------------------------------

def cmd_bound(cfg, seed, threads):
    dp, m, comp = _components(cfg)
    out = {
        "task": "bound",
        "model": cfg["model"],
        "drift": {k: v for k, v in vars(dp).items()},
        "moments": _moments_dict(m),
        "bounds": comp.as_dict(),
        "rmse_bound": {str(n): combine_mse_bound(comp, n) for n in _ns(cfg)},
    }
    if "confidence" in cfg:
        cf = cfg["confidence"]
        plan = confidence_plan(lambda n: combine_mse_bound(comp, n), cf["epsilon"], cf["alpha"],
                               cf.get("ceiling", 10**12))
        out["confidence"] = {"epsilon": plan.epsilon, "alpha": plan.alpha_conf, "n_min": plan.n_min}
    rows = [("sigma_as", comp.sigma_as), ("sigma_as_sq", comp.sigma_as_sq), ("c0", comp.c0), ("c1", comp.c1),
            ("c2", comp.c2)]
    rows += [(f"rmse_bound[n={k}]", v) for k, v in out["rmse_bound"].items()]
    if "confidence" in out:
        rows.append(("n_min", out["confidence"]["n_min"]))
    return out, _kv_table("bound", rows)


def cmd_confidence(cfg, seed, threads):
    if "confidence" not in cfg:
        raise ConfigError("config error at /: 'confidence' block is required for this task")
    cf = cfg["confidence"]
    dp, m, comp = _components(cfg)
    plan = confidence_plan(lambda n: combine_mse_bound(comp, n), cf["epsilon"], cf["alpha"],
                           cf.get("ceiling", 10**12))
    out = {"task": "confidence", "model": cfg["model"], "provenance": comp.provenance.value,
           "epsilon": plan.epsilon, "alpha": plan.alpha_conf, "n_min": plan.n_min}
    rows = [("n_min", plan.n_min)]
    if cfg["model"]["name"] == "contracting_normals":
        exact = contracting_exact_plan(cfg["model"]["c"], cf["epsilon"], cf["alpha"], stationary=True)
        out["n_min_exact_law"] = exact
        rows.append(("n_min_exact_law", exact))
    return out, _kv_table("confidence", rows)


def cmd_simulate(cfg, seed, threads):
    mc = _require_model(cfg)
    model = _build_model(mc)
    n = _ns(cfg, (1000,))[0]
    rec = simulate_split(model, n, _start(model, mc), seed)
    out = {"task": "simulate", "model": mc, "seed": seed, **json.loads(rec.to_json())}
    return out, rec


def cmd_constants(cfg, seed, threads):
    mc = _require_model(cfg)
    model = _build_model(mc)
    n = _ns(cfg, (10,))[0]
    ec = estimate_constants(model, n, cfg.get("replicates", 10**4), seed, x0=_start(model, mc),
                            n_blocks=cfg.get("n_blocks", 10**5), threads=threads)
    out = {"task": "constants", "model": mc, "seed": seed, **ec.as_dict()}
    se = ec.standard_errors
    rows = [("sigma_as_sq", (ec.sigma_as_sq_hat, se["sigma_as_sq"])), ("c0", (ec.c0_hat, se["c0"])),
            ("c1", (ec.c1_hat, se["c1"])), ("c2", (ec.c2_hat, se["c2"]))]
    return out, _kv_table("empirical constants", rows)


def cmd_sweep(cfg, seed, threads):
    mc = _require_model(cfg)
    if mc["name"] != "hier_t" or "sweep" not in cfg:
        raise ConfigError("config error at /sweep: sweeps need a hier_t model and a 'sweep' block")
    sw = cfg["sweep"]
    if sw["hi"] < sw["lo"]:
        raise ConfigError("config error at /sweep: empty range (hi < lo)")
    known = sw.get("objective", "sigma_known_pi_V") == "sigma_known_pi_V"
    rows, best = tables.sweep_hier_t(mc["t"], sw["lo"], sw["hi"], sw.get("points", 400), known)
    tab = tables.Table(f"sigma_as bound over a, t={mc['t']}", ["a", "objective"],
                       [{"a": float(a), "objective": float(v)} for a, v in rows],
                       [f"minimum at a={best[0]:.6g}, value={best[1]:.6g}"])
    out = {"task": "sweep", "model": mc, "objective": "sigma_known_pi_V" if known else "sigma_drift_only",
           "rows": tab.rows, "minimum": {"a": best[0], "value": best[1]}}
    return out, tab


def cmd_table(cfg, seed, threads):
    which = cfg.get("table")
    if which is None:
        raise ConfigError("config error at /: 'table' (1-4) is required for this task")
    mc_on = cfg.get("monte_carlo", True)
    reps = cfg.get("replicates", 10**4)
    if which == 1:
        tab = tables.table1()
    elif which == 2 or which == 3:
        emp = rmse = None
        if mc_on:
            a, _ = tables.hier_t_optimal_a(50, False)
            model = HierTModel(HierTParams(50, a))
            emp = estimate_constants(model, 10, reps, seed, x0=0.0, n_blocks=cfg.get("n_blocks", 10**5),
                                     threads=threads)
            if which == 3:
                ests = estimate_rmse(model, list(tables.TABLE3_N), reps, 0.0, seed, threads=threads)
                rmse = {e.n: e for e in ests}
        tab = tables.table2(50, emp) if which == 2 else tables.table3(50, empirical=emp, rmse=rmse)
    else:
        tab = tables.table4()
    out = {"task": "table", "table": which, "seed": seed, **tab.as_dict()}
    return out, tab


def _kv_table(title, rows):
    return tables.Table(title, ["quantity", "value"], [{"quantity": k, "value": v} for k, v in rows])


COMMANDS = {"bound": cmd_bound, "simulate": cmd_simulate, "constants": cmd_constants,
            "confidence": cmd_confidence, "sweep": cmd_sweep, "table": cmd_table}


def render(payload, aux, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if fmt == "csv":
        if hasattr(aux, "to_csv"):
            buf = io.StringIO()
            aux.to_csv(buf)
            return buf.getvalue()
        return tables.render_csv(aux)
    if hasattr(aux, "to_csv"):
        lines = [f"n={payload['n']} R(n)={payload['r_of_n']} overshoot={payload['overshoot']}",
                 f"regeneration epochs: {len(payload['regen_epochs'])}"]
        return "\n".join(lines) + "\n"
    return tables.render_text(aux)


def main(argv: Optional[list] = None) -> int:
    ap = argparse.ArgumentParser(prog="mcmc-certify", description="Nonasymptotic MSE bounds for MCMC averages.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    ap.add_argument("--out", default=None, help="output file (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv", "text"), default=None)
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        cfg = load_config(args.config)
        if "task" in cfg and cfg["task"] != args.task:
            raise ConfigError(f"config error at /task: config names task {cfg['task']!r}, command is {args.task!r}")
        seed = args.seed if args.seed is not None else cfg.get("seed", 1)
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        outcfg = cfg.get("output", {})
        fmt = args.format or outcfg.get("format", "json")
        out_path = args.out or outcfg.get("path")
        payload, aux = COMMANDS[args.task](cfg, seed, args.threads)
        text = render(payload, aux, fmt)
    except ConfigError as exc:
        print(f"mcmc-certify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInputError, InadmissibleSmallSetError) as exc:
        print(f"mcmc-certify: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertifyError as exc:
        print(f"mcmc-certify: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, ValueError) as exc:
        print(f"mcmc-certify: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
