"""Bound pipelines for the bundled models and the reference tables built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .bounds import (
    BoundComponents,
    GeometricDriftParams,
    MomentInputs,
    combine_mse_bound,
    confidence_plan,
    geo_bounds,
    geo_complementary,
    optimize_small_set,
)
from .models.contracting_normals import ContractingNormalsParams, contracting_exact_plan, contracting_params
from .models.hier_t import (
    HierTParams,
    admissible_threshold,
    hier_t_drift,
    hier_t_exact_mse,
    hier_t_params,
    hier_t_sigma_as,
)
from .models.poisson_gamma import REFERENCE_DRIFT, REFERENCE_F_NORM

HIER_T_A_MAX = 20.0
TABLE3_N = (10, 50, 100, 1000, 5000, 10_000, 50_000)


# ---------------------------------------------------------------------------
# per-model pipelines
# ---------------------------------------------------------------------------

def hier_t_bounds(t: int, a: float, known_pi_V: bool, mu0: float = 0.0, c0_variant: str = "sqrtV",
                  sqrtV_rule: str = "drift") -> BoundComponents:
    p = HierTParams(t, a)
    gp = hier_t_params(p)
    _, _, pi_V = hier_t_drift(p)
    partial = MomentInputs(pi_V=pi_V if known_pi_V else None, fbar_norm=1.0, start_V=1.0 + mu0 * mu0)
    m = geo_complementary(gp, partial, sqrtV_rule=sqrtV_rule)
    return geo_bounds(gp, m, c0_variant=c0_variant)


def hier_t_sigma_bound(t: int, a: float, known_pi_V: bool) -> float:
    return hier_t_bounds(t, a, known_pi_V).sigma_as


def hier_t_optimal_a(t: int, known_pi_V: bool, a_hi: float = HIER_T_A_MAX) -> tuple[float, float]:
    """Small-set half-width minimising the sigma_as bound, and the minimum."""
    lo = admissible_threshold(t) * (1 + 1e-9)
    return optimize_small_set(lambda a: hier_t_sigma_bound(t, a, known_pi_V), lo, a_hi)


def contracting_bounds(c: float, d: float, known_pi_V: bool, x0: float = 0.0, c0_variant: str = "sqrtV",
                       sqrtV_rule: str = "jensen") -> BoundComponents:
    gp = contracting_params(ContractingNormalsParams(c, d))
    partial = MomentInputs(pi_V=2.0 if known_pi_V else None, fbar_norm=1.0, start_V=1.0 + x0 * x0)
    m = geo_complementary(gp, partial, sqrtV_rule=sqrtV_rule)
    return geo_bounds(gp, m, c0_variant=c0_variant)


def contracting_bound_plan(c: float, d: float, known_pi_V: bool, epsilon: float, alpha_conf: float,
                           **kw) -> int:
    comp = contracting_bounds(c, d, known_pi_V, **kw)
    return confidence_plan(lambda n: combine_mse_bound(comp, n), epsilon, alpha_conf).n_min


def pump_bounds(drift: GeometricDriftParams = REFERENCE_DRIFT, f_norm: float = REFERENCE_F_NORM,
                start_V: float = 1.0, c0_variant: str = "sqrtV", sqrtV_rule: str = "jensen") -> BoundComponents:
    m = geo_complementary(drift, MomentInputs(f_norm=f_norm, start_V=start_V), sqrtV_rule=sqrtV_rule)
    return geo_bounds(drift, m, c0_variant=c0_variant)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass
class Table:
    title: str
    columns: list
    rows: list
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"title": self.title, "columns": self.columns, "rows": self.rows, "notes": self.notes}


def fmt4(v) -> str:
    if isinstance(v, tuple):
        val, se = v
        return f"{fmt4(val)} ± {se:.2g}"
    if isinstance(v, int):
        return f"{v:,}"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def table1(ts: Sequence[int] = (5, 50, 500)) -> Table:
    rows = []
    for t in ts:
        a_k, s_k = hier_t_optimal_a(t, True)
        a_d, s_d = hier_t_optimal_a(t, False)
        rows.append({"t": t, "sigma_as": hier_t_sigma_as(t), "bound_known_pi_V": s_k, "a_known_pi_V": a_k,
                     "bound_drift_only": s_d, "a_drift_only": a_d})
    return Table("Root asymptotic variance and its bounds (small set optimised per column)",
                 ["t", "sigma_as", "bound_known_pi_V", "a_known_pi_V", "bound_drift_only", "a_drift_only"], rows)


def table2(t: int = 50, empirical=None) -> Table:
    """Bounds on C0, C1, C2 at the drift-only optimal small set; ``empirical`` is an EmpiricalConstants."""
    a, _ = hier_t_optimal_a(t, False)
    known = hier_t_bounds(t, a, True)
    drift = hier_t_bounds(t, a, False)
    emp = {}
    if empirical is not None:
        se = empirical.standard_errors
        emp = {"C0": (empirical.c0_hat, se["c0"]), "C1": (empirical.c1_hat, se["c1"]),
               "C2": (empirical.c2_hat, se["c2"])}
    rows = [
        {"constant": "C0", "actual": emp.get("C0"), "bound_known_pi_V": known.c0, "bound_drift_only": drift.c0},
        {"constant": "C1", "actual": emp.get("C1"), "bound_known_pi_V": known.c1, "bound_drift_only": drift.c1},
        {"constant": "C2", "actual": emp.get("C2"), "bound_known_pi_V": known.c2, "bound_drift_only": drift.c2},
    ]
    return Table(f"Non-leading constants, t={t}, a={a:.4f}",
                 ["constant", "actual", "bound_known_pi_V", "bound_drift_only"], rows,
                 [f"small set J=[-a,a] with a minimising the drift-only sigma_as bound: a={a:.6g}"])


def table3(t: int = 50, ns: Sequence[int] = TABLE3_N, empirical=None, rmse=None, mu0: float = 0.0) -> Table:
    """sqrt(n) * RMSE against sqrt(n) * bound.

    Column (a) uses the exact sigma_as with Monte Carlo C0, C1, C2 (needs
    ``empirical``); (b) and (c) are the known-pi(V) and drift-only bounds,
    both on the small set that minimises the drift-only sigma_as bound (the
    same J as in table 2).  ``rmse`` maps n to an RmseEstimate.
    """
    a_d, _ = hier_t_optimal_a(t, False)
    comp_b = hier_t_bounds(t, a_d, True, mu0)
    comp_c = hier_t_bounds(t, a_d, False, mu0)
    comp_a = None
    if empirical is not None:
        comp_a = BoundComponents(hier_t_sigma_as(t) ** 2, empirical.c0_hat, empirical.c1_hat, empirical.c2_hat)
    rows = []
    for n in ns:
        rn = math.sqrt(n)
        row = {"n": n, "sqrt_n_rmse_exact": rn * math.sqrt(hier_t_exact_mse(t, n, mu0))}
        if rmse is not None and n in rmse:
            row["sqrt_n_rmse_mc"] = (rn * rmse[n].rmse, rn * rmse[n].stderr)
        row["a_actual_constants"] = rn * combine_mse_bound(comp_a, n) if comp_a else None
        row["b_known_pi_V"] = rn * combine_mse_bound(comp_b, n)
        row["c_drift_only"] = rn * combine_mse_bound(comp_c, n)
        rows.append(row)
    cols = ["n", "sqrt_n_rmse_exact"] + (["sqrt_n_rmse_mc"] if rmse is not None else []) + [
        "a_actual_constants", "b_known_pi_V", "c_drift_only"]
    return Table(f"sqrt(n) RMSE and sqrt(n) bounds, t={t}, mu0={mu0:g}", cols, rows,
                 [f"(b) and (c) at a={a_d:.6g}"])


def table4(c: float = 0.5, d: float = 1.7875, epsilon: float = 0.1, alpha_conf: float = 0.1) -> Table:
    row = {
        "bound_drift_only": contracting_bound_plan(c, d, False, epsilon, alpha_conf),
        "bound_known_pi_V": contracting_bound_plan(c, d, True, epsilon, alpha_conf),
        "exact_law": contracting_exact_plan(c, epsilon, alpha_conf, stationary=True),
    }
    return Table(f"Simulation length for P(|theta_hat_n| < {epsilon:g}) > {1 - alpha_conf:g}, c={c:g}, d={d:g}",
                 list(row), [row],
                 ["exact-law column uses a stationary start"])


def render_text(tab: Table) -> str:
    cells = [[fmt4(r.get(c)) if r.get(c) is not None else "-" for c in tab.columns] for r in tab.rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(tab.columns)]
    lines = [tab.title, "  ".join(c.rjust(w) for c, w in zip(tab.columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    lines += [f"note: {n}" for n in tab.notes]
    return "\n".join(lines) + "\n"


def render_csv(tab: Table) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = []
    for c in tab.columns:
        mc = any(isinstance(r.get(c), tuple) for r in tab.rows)
        cols += [c, f"{c}_stderr"] if mc else [c]
    w.writerow(cols)
    for r in tab.rows:
        out = []
        for c in tab.columns:
            v = r.get(c)
            mc = any(isinstance(rr.get(c), tuple) for rr in tab.rows)
            if mc:
                out += [f"{v[0]:.4g}", f"{v[1]:.2g}"] if v is not None else ["", ""]
            else:
                out.append("" if v is None else fmt4(v).replace(",", "") if isinstance(v, (int, float)) else v)
        w.writerow(out)
    return buf.getvalue()


def sweep_hier_t(t: int, lo: float, hi: float, points: int, known_pi_V: bool) -> tuple[list, tuple]:
    """Values of the sigma_as bound over a grid of a, plus the located minimum."""
    if points < 1 or hi < lo:
        raise ValueError("empty sweep range")
    if points == 1 or hi == lo:
        grid = [lo]
    else:
        grid = [lo + (hi - lo) * i / (points - 1) for i in range(points)]
    rows = []
    for a in grid:
        try:
            v = hier_t_sigma_bound(t, a, known_pi_V)
        except ValueError:
            v = math.nan
        rows.append((a, v))
    finite = [r for r in rows if math.isfinite(r[1])]
    if not finite:
        return rows, (math.nan, math.nan)
    if len(grid) == 1:
        return rows, finite[0]
    lo_ok = max(lo, admissible_threshold(t) * (1 + 1e-9))
    best = optimize_small_set(lambda a: hier_t_sigma_bound(t, a, known_pi_V), lo_ok, hi, grid=max(points, 3))
    return rows, best
