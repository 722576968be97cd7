"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that conftest prints in the terminal
summary.  Criteria whose published integers or digits cannot be reproduced
are marked xfail(strict=True): the assertion is the full criterion, so the
suite reports the failure instead of hiding it, and an unexpected pass
turns the run red.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from formula_oracle import geo_oracle, poly_oracle
from mcmc_certify.bounds import (
    GeometricDriftParams,
    MomentInputs,
    PolynomialDriftParams,
    combine_mse_bound,
    geo_bounds,
    poly_bounds,
    poly_complete_moments,
    poly_pi_V_eta_bound,
)
from mcmc_certify.models.contracting_normals import ContractingNormalsModel, ContractingNormalsParams
from mcmc_certify.models.hier_t import HierTModel, HierTParams, hier_t_exact_mse, hier_t_sigma_as
from mcmc_certify.models.poisson_gamma import PumpModel
from mcmc_certify.models.toy_poly import ToyPolyModel
from mcmc_certify.regen import (
    block_lag1_autocorr,
    collect_tours,
    estimate_constants,
    estimate_rmse,
    estimate_sigma_as,
    kac_check,
    tour_moment_identity_check,
    simulate_plain,
    simulate_split_many,
)
from mcmc_certify.tables import (
    TABLE3_N,
    contracting_bounds,
    hier_t_bounds,
    hier_t_optimal_a,
    pump_bounds,
    table1,
    table2,
    table3,
    table4,
)

SEED = 20240611


def sig(x, k):
    return float(f"{x:.{k}g}")


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def hier_t50_constants():
    a, _ = hier_t_optimal_a(50, False)
    t0 = time.perf_counter()
    est = estimate_constants(HierTModel(HierTParams(50, a)), n_for_c2=10, replicates=40_000, rng_seed=SEED,
                             x0=0.0, n_blocks=100_000)
    return est, time.perf_counter() - t0


# ---------------------------------------------------------------------------


def test_criterion_1_table1():
    t0 = time.perf_counter()
    tab = table1()
    dt = time.perf_counter() - t0
    expected = {5: (1.581, 6.40, 11.89), 50: (1.031, 2.38, 2.68), 500: (1.003, 2.00, 2.08)}
    bad = []
    for row in tab.rows:
        ex, kn, dr = expected[row["t"]]
        if round(row["sigma_as"], 3) != ex or abs(row["sigma_as"] - math.sqrt(row["t"] / (row["t"] - 3))) > 5e-5:
            bad.append(f"t={row['t']} sigma {row['sigma_as']:.4f}")
        if sig(row["bound_known_pi_V"], 3) != sig(kn, 3):
            bad.append(f"t={row['t']} known {row['bound_known_pi_V']:.4g}")
        if sig(row["bound_drift_only"], 3) != sig(dr, 3):
            bad.append(f"t={row['t']} drift {row['bound_drift_only']:.4g}")
    ok = not bad and dt < 1.0
    record(1, ok, f"runtime {dt:.2f}s " + ("; ".join(bad) if bad else "all 9 values match"))
    assert ok, bad


def test_criterion_2_table2(hier_t50_constants):
    est, mc_time = hier_t50_constants
    t0 = time.perf_counter()
    tab = table2(50, est)
    dt = time.perf_counter() - t0 + mc_time
    rows = {r["constant"]: r for r in tab.rows}
    bad = []
    for name, kn, dr in (("C0", 1.761, 2.025), ("C1", None, 2.771), ("C2", None, 3.752)):
        if kn is not None and sig(rows[name]["bound_known_pi_V"], 3) != sig(kn, 3):
            bad.append(f"{name} known {rows[name]['bound_known_pi_V']:.4g}")
        if sig(rows[name]["bound_drift_only"], 3) != sig(dr, 3):
            bad.append(f"{name} drift {rows[name]['bound_drift_only']:.4g}")
    emp = []
    for name, ref in (("C0", 0.568), ("C1", 0.125), ("C2", 1.083)):
        val, se = rows[name]["actual"]
        emp.append(f"{name}={val:.4f}±{se:.4f}")
        if abs(val - ref) > 3 * se:
            bad.append(f"{name} empirical {val:.4f} vs {ref} (se {se:.4f})")
    ok = not bad and dt < 300 and est.n_replicates >= 10_000
    record(2, ok, f"runtime {dt:.1f}s {' '.join(emp)} " + ("; ".join(bad) if bad else "bounds match"))
    assert ok, bad


def test_criterion_3_table3(hier_t50_constants):
    est, mc_time = hier_t50_constants
    a, _ = hier_t_optimal_a(50, False)
    t0 = time.perf_counter()
    ests = estimate_rmse(HierTModel(HierTParams(50, a)), list(TABLE3_N), 10_000, 0.0, SEED + 3)
    rmse = {e.n: e for e in ests}
    tab = table3(50, empirical=est, rmse=rmse)
    dt = time.perf_counter() - t0 + mc_time
    col_a = (1.47, 1.21, 1.16, 1.07, 1.05, 1.04, 1.04)
    col_b = (4.87, 3.39, 3.08, 2.60, 2.48, 2.45, 2.41)
    col_c = (5.29, 3.71, 3.39, 2.89, 2.77, 2.75, 2.71)
    exact = (0.98, 1.02, 1.03, 1.03, 1.03, 1.03, 1.03)
    bad = []
    for row, ea, eb, ec, ee in zip(tab.rows, col_a, col_b, col_c, exact):
        n = row["n"]
        if round(row["a_actual_constants"], 2) != ea:
            bad.append(f"n={n} (a) {row['a_actual_constants']:.4f}")
        if sig(row["b_known_pi_V"], 3) != sig(eb, 3):
            bad.append(f"n={n} (b) {row['b_known_pi_V']:.4f}")
        if sig(row["c_drift_only"], 3) != sig(ec, 3):
            bad.append(f"n={n} (c) {row['c_drift_only']:.4f}")
        if round(row["sqrt_n_rmse_exact"], 2) != ee:
            bad.append(f"n={n} exact {row['sqrt_n_rmse_exact']:.4f}")
        mc, se = row["sqrt_n_rmse_mc"]
        if abs(mc - row["sqrt_n_rmse_exact"]) > 3 * se:
            bad.append(f"n={n} MC {mc:.4f} vs exact {row['sqrt_n_rmse_exact']:.4f} (se {se:.4f})")
    ok = not bad and dt < 600
    record(3, ok, f"runtime {dt:.1f}s " + ("; ".join(bad) if bad else "all 35 entries match"))
    assert ok, bad


@pytest.mark.xfail(strict=True, reason="published drift-only and known-pi(V) sample sizes are not "
                                       "reproducible from the stated constants; see notes")
def test_criterion_4_table4():
    t0 = time.perf_counter()
    row = table4().rows[0]
    dt = time.perf_counter() - t0
    got = (row["bound_drift_only"], row["bound_known_pi_V"], row["exact_law"])
    want = (77_285, 43_783, 811)
    ok = got == want and dt < 1.0
    record(4, ok, f"runtime {dt:.3f}s got {got} expected {want}")
    assert ok


@pytest.mark.xfail(strict=True, reason="sigma_as bound evaluates to 171.5 at 4 significant digits, "
                                       "published value is 171.6; C0, C1, C2 match")
def test_criterion_5_pump_pipeline():
    t0 = time.perf_counter()
    comp = pump_bounds()
    dt = time.perf_counter() - t0
    got = (comp.sigma_as, comp.c0, comp.c1, comp.c2)
    want = (171.6, 27.5, 547.7, 676.1)
    flags = [sig(g, 4) == sig(w, 4) for g, w in zip(got, want)]
    ok = all(flags) and dt < 1.0
    detail = ", ".join(f"{n}={g:.4f}{'' if f else ' (expected ' + str(w) + ')'}"
                       for n, g, w, f in zip(("sigma", "C0", "C1", "C2"), got, want, flags))
    record(5, ok, f"runtime {dt:.3f}s {detail}")
    assert ok


def _validity_cases():
    cases = []
    for t in (5, 50):
        a_d, _ = hier_t_optimal_a(t, False)
        a_k, _ = hier_t_optimal_a(t, True)
        cases.append((f"hier_t t={t} drift-only", HierTModel(HierTParams(t, a_d)), 0.0,
                      hier_t_bounds(t, a_d, False), 0.0))
        cases.append((f"hier_t t={t} known pi(V)", HierTModel(HierTParams(t, a_k)), 0.0,
                      hier_t_bounds(t, a_k, True), 0.0))
    cn = ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875))
    cases.append(("contracting drift-only", cn, 0.0, contracting_bounds(0.5, 1.7875, False), 0.0))
    cases.append(("contracting known pi(V)", cn, 0.0, contracting_bounds(0.5, 1.7875, True), 0.0))
    toy = ToyPolyModel()
    comp = poly_bounds(toy.drift, poly_complete_moments(toy.drift, MomentInputs(fbar_norm=1.0, start_V=1.0)))
    cases.append(("toy polynomial drift-only", toy, toy.start_state(), comp, 0.0))
    return cases


def test_criterion_6_bound_validity():
    t0 = time.perf_counter()
    ns = [100, 1000, 10_000]
    violations = []
    checks = 0
    worst = {}
    for label, model, x0, comp, theta in _validity_cases():
        for s in range(20):
            seed = SEED + 1000 * s
            ests = estimate_rmse(model, ns, 1000, x0, seed, theta=theta)
            for e in ests:
                bound = combine_mse_bound(comp, e.n)
                checks += 1
                worst[label] = max(worst.get(label, 0.0), e.rmse / bound)
                if e.rmse > bound:
                    violations.append(f"{label} seed {s} n={e.n}: rmse {e.rmse:.4g} > {bound:.4g}")
            tours = collect_tours(model, 100, 200, x0, seed + 1, theta=theta)
            s2 = estimate_sigma_as(tours, theta=theta).sigma_as_sq
            checks += 1
            if s2 > comp.sigma_as_sq:
                violations.append(f"{label} seed {s}: sigma^2 {s2:.4g} > {comp.sigma_as_sq:.4g}")
    dt = time.perf_counter() - t0
    ok = not violations and dt < 900
    ratios = ", ".join(f"{k}: {v:.2f}" for k, v in worst.items())
    record(6, ok, f"runtime {dt:.0f}s {checks} checks, {len(violations)} violations; max rmse/bound {ratios}")
    assert ok, violations[:5]


def _ks_models():
    pump = PumpModel()
    toy = ToyPolyModel()
    return [
        ("hier_t", HierTModel(HierTParams(50, 4.3)), 0.0, lambda x: x),
        ("contracting", ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875)), 0.0, lambda x: x),
        ("toy", toy, toy.start_state(), lambda x: x[:, 0]),
        ("pump", pump, pump.start_state(), pump.project),
    ]


def test_criterion_7_split_chain_correctness():
    t0 = time.perf_counter()
    problems = []
    models = _ks_models()

    # Marginal laws: split chain vs plain kernel at several times.
    times = (1, 10, 50)
    pvals = []
    for i, (label, model, x0, proj) in enumerate(models):
        recs = simulate_split_many(model, max(times), x0, 3000, SEED + 10 * i)
        plain = simulate_plain(model, max(times), x0, 3000, SEED + 10 * i + 5, record_at=times)
        for n in times:
            a = proj(np.stack([r.states[n] for r in recs]))
            b = proj(plain[n])
            pvals.append((label, n, stats.ks_2samp(a, b).pvalue))
    thresh = 0.001 / len(pvals)
    for label, n, p in pvals:
        if p <= thresh:
            problems.append(f"KS {label} n={n} p={p:.2g}")

    # Tour independence and the regeneration rate.
    for i, (label, model, x0, _) in enumerate(models):
        tours = collect_tours(model, 100, 200, x0, SEED + 100 + i)
        r, rse = block_lag1_autocorr(tours)
        if abs(r) > 3 * rse:
            problems.append(f"lag-1 {label} r={r:.3g} se={rse:.3g}")
        rate, bpj, se = kac_check(tours)
        if abs(rate - bpj) > 3 * se:
            problems.append(f"rate {label} {rate:.4g} vs {bpj:.4g} se={se:.3g}")

    # Tour second moment of V^1/2 against its lagged-product expansion.
    for i, (label, model, x0, _) in enumerate(models[:3]):
        recs = simulate_split_many(model, 2000, x0, 200, SEED + 200 + i)
        lhs, se, rhs = tour_moment_identity_check(recs, lambda x, m=model: np.sqrt(m.V(x)))
        if abs(lhs - rhs) > 3 * se:
            problems.append(f"tour identity {label} {lhs:.4g} vs {rhs:.4g} se={se:.3g}")

    dt = time.perf_counter() - t0
    ok = not problems and dt < 300
    record(7, ok, f"runtime {dt:.0f}s min KS p={min(p for _, _, p in pvals):.3g} (threshold {thresh:.1g}); "
                  + ("; ".join(problems) if problems else "all checks within 3 stderr"))
    assert ok, problems


def test_criterion_8_formula_oracle():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        lam = rng.uniform(0.01, 0.95)
        beta = rng.uniform(0.01, 1.0)
        K = max(1.0, lam + beta) + rng.exponential(5.0)
        alpha = rng.uniform(0.67, 1.0)

        gp = GeometricDriftParams(lam, K, beta)
        pi_V = 1 + rng.uniform() * ((K - lam) / (1 - lam) - 1)
        pi_s = 1 + rng.uniform() * (math.sqrt(pi_V) - 1)
        xv = 1 + rng.exponential(3.0)
        xs = 1 + rng.uniform() * (math.sqrt(xv) - 1)
        xn = 1 + rng.exponential(3.0)
        xns = 1 + rng.uniform() * (math.sqrt(xn) - 1)
        m = MomentInputs(pi_V=pi_V, pi_sqrtV=pi_s, xi_V=xv, xi_sqrtV=xs, xiPn_V=xn, xiPn_sqrtV=xns,
                         fbar_norm=1.0)
        ref = geo_oracle(lam, K, beta, pi_V, pi_s, xv, xs, xn, xns)
        comp_v = geo_bounds(gp, m, c0_variant="V")
        comp_s = geo_bounds(gp, m, c0_variant="sqrtV")
        pairs = [(comp_v.c0, ref["c0_V"]), (comp_s.c0, ref["c0_sqrtV"]), (comp_s.sigma_as_sq, ref["s2"]),
                 (comp_s.c1**2, ref["c1_sq"]), (comp_s.c2**2, ref["c2_sq"])]

        pp = PolynomialDriftParams(lam, K, beta, alpha)
        etas = (alpha, 2 * alpha - 1, 3 * alpha - 2, 1.5 * alpha - 1)
        pi = {e: 1 + rng.uniform() * (poly_pi_V_eta_bound(pp, e) - 1) for e in etas}
        comp_p = poly_bounds(pp, MomentInputs(pi_V_eta=pi, fbar_norm=1.0, start_V=xv))
        refp = poly_oracle(lam, K, beta, alpha, pi, {e: xv**e for e in (2 * alpha - 1, alpha, alpha / 2)})
        pairs += [(comp_p.c0, refp["c0"]), (comp_p.sigma_as_sq, refp["s2"]), (comp_p.c1**2, refp["c1_sq"]),
                  (comp_p.c2**2, refp["c2_sq"])]
        for got, want in pairs:
            worst = max(worst, abs(got - float(want)) / abs(float(want)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    record(8, ok, f"runtime {dt:.2f}s 100 parameter sets, max relative error {worst:.2e}")
    assert ok
