import io
import json
import math

import numpy as np
import pytest

from mcmc_certify.errors import InsufficientDataError, InvalidInputError, MinorizationViolationError
from mcmc_certify.models.base import SplitChainBase
from mcmc_certify.models.contracting_normals import ContractingNormalsModel, ContractingNormalsParams
from mcmc_certify.models.hier_t import HierTModel, HierTParams, hier_t_exact_mse, hier_t_sigma_as
from mcmc_certify.numerics import normal_logpdf
from mcmc_certify.regen import (
    block_lag1_autocorr,
    collect_tours,
    estimate_constants,
    estimate_rmse,
    estimate_sigma_as,
    kac_check,
    simulate_plain,
    simulate_split,
    simulate_split_many,
    tour_moment_identity_check,
)


class IidNormal(SplitChainBase):
    """X_{k+1} ~ N(0, 1) regardless of X_k: J is everything and beta = 1."""

    beta = 1.0
    theta = 0.0

    def __init__(self, f_const=None):
        self.f_const = f_const

    def step(self, x, rng):
        return rng.standard_normal(x.shape)

    def in_small_set(self, x):
        return np.ones(len(x), dtype=bool)

    def log_transition_density(self, x, y):
        return normal_logpdf(y)

    def log_nu_density(self, y):
        return normal_logpdf(y)

    def V(self, x):
        return 1 + x * x

    def f(self, x):
        return x if self.f_const is None else np.full(len(x), self.f_const)


class Overclaiming(IidNormal):
    """Claims beta * nu exceeds the kernel density."""

    beta = 0.9

    def log_nu_density(self, y):
        return normal_logpdf(y) + 1.0


def test_iid_chain_regenerates_every_step():
    rec = simulate_split(IidNormal(), 50, 0.0, rng_seed=3)
    assert rec.bells.all()
    assert [b.length for b in rec.blocks] == [1] * len(rec.blocks)
    assert rec.regen_epochs[0] == 1
    assert rec.overshoot == 1


def test_iid_chain_constants():
    est = estimate_constants(IidNormal(0.0), n_for_c2=10, replicates=200, rng_seed=1, x0=0.0, n_blocks=2000)
    assert est.c0_hat == 0.5
    assert est.standard_errors["c0"] == 0.0
    assert est.c1_hat == 0.0 and est.c2_hat == 0.0
    assert est.sigma_as_sq_hat == 0.0


def test_tour_identity_iid_chain():
    # Every tour has length one, so both sides reduce to E g^2.
    recs = simulate_split_many(IidNormal(), 500, 0.0, replicates=20, rng_seed=4)
    lhs, se, rhs = tour_moment_identity_check(recs, lambda x: np.sqrt(1 + x * x))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert abs(lhs - 2.0) <= 3 * se


def test_minorization_violation_detected():
    with pytest.raises(MinorizationViolationError) as ei:
        simulate_split(Overclaiming(), 10, 0.0, rng_seed=0)
    assert ei.value.ratio > 1


def test_record_structure():
    m = ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875))
    for sid in range(5):
        rec = simulate_split(m, 200, 0.0, rng_seed=11, stream_id=sid)
        eps = rec.regen_epochs
        # Gamma_{k-1} = 1 iff k is a regeneration epoch.
        assert np.array_equal(np.flatnonzero(rec.bells) + 1, eps)
        assert eps[rec.r_of_n - 1] > rec.n >= (eps[rec.r_of_n - 2] if rec.r_of_n >= 2 else 0)
        assert len(rec.states) == eps[-1]
        blocks = rec.blocks
        assert blocks[0].start == eps[0] and blocks[-1].end == eps[-1]
        assert all(a.end == b.start for a, b in zip(blocks, blocks[1:]))
        assert sum(b.length for b in blocks) == eps[-1] - eps[0]
        assert rec.overshoot == eps[-1] - 200
        # Bells only ring from the small set.
        assert not rec.bells[np.abs(rec.states) > 1.7875].any()


def test_record_exports():
    m = HierTModel(HierTParams(50, 4.3))
    rec = simulate_split(m, 30, 0.0, rng_seed=5)
    buf = io.StringIO()
    rec.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "index,state,bell,block_id"
    assert len(lines) == len(rec.states) + 1
    ids = rec.block_ids()
    assert (ids[: rec.regen_epochs[0]] == -1).all()
    payload = json.loads(rec.to_json())
    assert payload["overshoot"] == rec.overshoot
    assert len(payload["blocks"]) == rec.r_of_n - 1


def test_split_states_match_plain_kernel():
    # The bell uses its own uniform, so the split run is a different sample
    # path; compare laws through the stationary moment instead.
    m = ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875))
    recs = simulate_split_many(m, 20, 0.0, replicates=4000, rng_seed=2, threads=2)
    x20 = np.array([r.states[20] for r in recs])
    plain = simulate_plain(m, 20, 0.0, replicates=4000, rng_seed=3, record_at=[20])[20]
    var = 1 - 0.25**20
    for s in (x20, plain):
        assert abs(np.mean(s * s) - var) < 3 * np.std(s * s) / math.sqrt(len(s))


def test_results_independent_of_thread_count():
    m = HierTModel(HierTParams(50, 4.3))
    a = collect_tours(m, 20, 300, 0.0, rng_seed=9, threads=1, batch_size=64)
    b = collect_tours(m, 20, 300, 0.0, rng_seed=9, threads=4, batch_size=64)
    assert np.array_equal(a.length, b.length) and np.array_equal(a.sum_f, b.sum_f)
    e1 = estimate_constants(m, 10, 300, 4, 0.0, n_blocks=2000, threads=1, batch_size=64)
    e4 = estimate_constants(m, 10, 300, 4, 0.0, n_blocks=2000, threads=3, batch_size=64)
    assert e1.as_dict() == e4.as_dict()


def test_sigma_needs_enough_blocks():
    m = HierTModel(HierTParams(50, 4.3))
    tours = collect_tours(m, 5, 10, 0.0, rng_seed=1)
    with pytest.raises(InsufficientDataError):
        estimate_sigma_as(tours)


def test_sigma_plugin_flag():
    m = HierTModel(HierTParams(50, 4.3))
    tours = collect_tours(m, 50, 100, 0.0, rng_seed=1)
    tours.theta = None
    est = estimate_sigma_as(tours)
    assert est.theta_plugin and est.theta == pytest.approx(tours.theta_hat())


@pytest.mark.parametrize("t", [5, 50, 500])
def test_sigma_matches_closed_form(t):
    a = {5: 3.2, 50: 4.3, 500: 8.0}[t]
    m = HierTModel(HierTParams(t, a))
    tours = collect_tours(m, 100, 1000, 0.0, rng_seed=100 + t)
    est = estimate_sigma_as(tours, theta=0.0)
    sd = math.sqrt(est.sigma_as_sq)
    se = est.stderr / (2 * sd)
    assert abs(sd - hier_t_sigma_as(t)) <= 3 * se


def test_sigma_from_records_equals_tours_definition():
    m = ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875))
    recs = simulate_split_many(m, 3000, 0.0, replicates=20, rng_seed=8)
    est = estimate_sigma_as(recs, theta=0.0, min_blocks=100)
    xi = np.array([b.sum_f for r in recs for b in r.blocks])
    tau = np.array([b.length for r in recs for b in r.blocks])
    assert est.sigma_as_sq == pytest.approx(np.mean(xi * xi) / np.mean(tau), rel=1e-12)


def test_kac_and_block_independence_contracting():
    m = ContractingNormalsModel(ContractingNormalsParams(0.5, 1.7875))
    tours = collect_tours(m, 200, 500, 0.0, rng_seed=21)
    rate, bpj, se = kac_check(tours)
    assert abs(rate - bpj) <= 3 * se
    r, rse = block_lag1_autocorr(tours)
    assert abs(r) <= 3 * rse


def test_rmse_constant_function_is_zero():
    est = estimate_rmse(IidNormal(0.0), 10, 100, 0.0, rng_seed=1)
    assert est.rmse == 0.0


def test_rmse_matches_exact_mse():
    m = HierTModel(HierTParams(50, 4.3))
    ns = [10, 100, 1000]
    ests = estimate_rmse(m, ns, 10_000, 0.0, rng_seed=77)
    for n, e in zip(ns, ests):
        assert abs(e.rmse - math.sqrt(hier_t_exact_mse(50, n))) <= 3 * e.stderr


def test_rmse_requires_theta_and_valid_n():
    m = IidNormal()
    m.theta = None
    with pytest.raises(InvalidInputError):
        estimate_rmse(m, 10, 100, 0.0, rng_seed=1)
    with pytest.raises(InvalidInputError):
        estimate_rmse(IidNormal(), 0, 100, 0.0, rng_seed=1)
