"""Split-chain simulation with retrospective regeneration, and empirical constants.

A step draws X_{k+1} from the original kernel and then rings the bell
Gamma_k with probability beta * nu(X_{k+1}) / p(X_{k+1} | X_k) when X_k lies
in the small set.  A bell at step k means a regeneration at epoch k + 1.

Work is split into fixed-size batches of chains; batch b draws from
``RngStream(seed, b)`` and batch results are merged in batch order, so output
does not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidInputError, MinorizationViolationError
from .numerics import RngStream

RATIO_TOL = 1e-9
DEFAULT_BATCH = 1000


class DiagnosticWarning(UserWarning):
    """A Monte Carlo self-consistency diagnostic failed."""


def _default_threads(threads: Optional[int]) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise InvalidInputError(f"threads must be >= 1, got {threads}")
    return threads


def _batches(total: int, batch_size: int) -> list[int]:
    sizes = [batch_size] * (total // batch_size)
    if total % batch_size:
        sizes.append(total % batch_size)
    return sizes


def _run_batches(fn: Callable[[int, int, np.random.Generator], object], total: int, seed: int,
                 threads: Optional[int], batch_size: int = DEFAULT_BATCH) -> list:
    sizes = _batches(total, batch_size)
    threads = _default_threads(threads)

    def job(b):
        return fn(b, sizes[b], RngStream(seed, b).generator())

    if threads == 1 or len(sizes) == 1:
        return [job(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(len(sizes))))


def split_transition(model, x: np.ndarray, rng: np.random.Generator, check: bool = True):
    """One split-chain step for a batch: returns (X_{k+1}, Gamma_k)."""
    y = model.step(x, rng)
    u = rng.random(len(x))
    in_j = np.asarray(model.in_small_set(x), dtype=bool)
    bell = np.zeros(len(x), dtype=bool)
    if in_j.any():
        ratio = model.regen_ratio(x[in_j], y[in_j])
        if check:
            bad = ratio > 1.0 + RATIO_TOL
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise MinorizationViolationError(x[in_j][i], y[in_j][i], float(ratio[i]))
        bell[in_j] = u[in_j] < ratio
    return y, bell


def _start_batch(model, x0, size: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == (0 if model.state_dim == 0 else 1):
        return model.initial(x0, size)
    if len(x0) != size:
        raise InvalidInputError("per-chain start states must match the batch size")
    return x0.copy()


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

class Block(NamedTuple):
    start: int
    end: int
    sum_f: float
    sum_absfbar: float
    length: int


@dataclass
class RegenerationRecord:
    """One split-chain trajectory run until the first regeneration past n.

    ``states`` covers times 0 .. T_{R(n)} - 1 and ``bells[i]`` is Gamma_i, so
    a bell at i marks a regeneration at epoch i + 1.
    """

    n: int
    states: np.ndarray
    bells: np.ndarray
    regen_epochs: np.ndarray
    r_of_n: int
    f_values: np.ndarray
    theta: Optional[float] = None
    projection: Optional[np.ndarray] = None

    @property
    def overshoot(self) -> int:
        """Delta(n) = T_{R(n)} - n."""
        return int(self.regen_epochs[self.r_of_n - 1]) - self.n

    @property
    def blocks(self) -> list[Block]:
        """Tours [T_k, T_{k+1}) partitioning [T_1, T_{R(n)})."""
        th = 0.0 if self.theta is None else self.theta
        eps = self.regen_epochs[: self.r_of_n]
        out = []
        for s, e in zip(eps[:-1], eps[1:]):
            seg = self.f_values[s:e]
            out.append(Block(int(s), int(e), float(seg.sum()), float(np.abs(seg - th).sum()), int(e - s)))
        return out

    def block_ids(self) -> np.ndarray:
        """Tour index of every time point; -1 before T_1."""
        ids = np.full(len(self.bells), -1, dtype=int)
        eps = self.regen_epochs[: self.r_of_n]
        for k, (s, e) in enumerate(zip(eps[:-1], eps[1:])):
            ids[s:e] = k
        return ids

    def to_csv(self, path_or_buf) -> None:
        proj = self.projection if self.projection is not None else (
            self.states if self.states.ndim == 1 else self.states[:, 0])
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(fh)
            w.writerow(["index", "state", "bell", "block_id"])
            for i, (s, b, k) in enumerate(zip(proj, self.bells, self.block_ids())):
                w.writerow([i, repr(float(s)), int(b), int(k)])
        finally:
            if own:
                fh.close()

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "regen_epochs": [int(e) for e in self.regen_epochs],
            "r_of_n": self.r_of_n,
            "overshoot": self.overshoot,
            "blocks": [b._asdict() for b in self.blocks],
        })


def _simulate_split_batch(model, n: int, x0, size: int, rng, theta, check, max_steps):
    x = _start_batch(model, x0, size)
    states, bells, fvals = [], [], []
    done_at = np.full(size, -1, dtype=np.int64)
    k = 0
    while (done_at < 0).any():
        if k >= max_steps:
            raise InsufficientDataError(f"no regeneration past n={n} within {max_steps} steps")
        states.append(x)
        fvals.append(np.asarray(model.f(x), dtype=float))
        y, bell = split_transition(model, x, rng, check)
        bells.append(bell)
        newly = bell & (done_at < 0) & (k + 1 > n)
        done_at[newly] = k + 1
        x = y
        k += 1
    S = np.stack(states, axis=1)
    B = np.stack(bells, axis=1)
    F = np.stack(fvals, axis=1)
    recs = []
    for j in range(size):
        T = int(done_at[j])
        bj = B[j, :T]
        epochs = np.flatnonzero(bj) + 1
        rec_states = S[j, :T]
        proj = np.asarray(model.project(rec_states), dtype=float)
        recs.append(RegenerationRecord(n, rec_states, bj, epochs, len(epochs), F[j, :T], theta, proj))
    return recs


def simulate_split(model, n: int, x0, rng_seed: int, stream_id: int = 0, theta: Optional[float] = None,
                   check_minorization: bool = True, max_steps: int = 10**7) -> RegenerationRecord:
    """Simulate one split chain from x0 until the first regeneration epoch > n."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    th = model.theta if theta is None else theta
    rng = RngStream(rng_seed, stream_id).generator()
    return _simulate_split_batch(model, n, x0, 1, rng, th, check_minorization, max_steps)[0]


def simulate_split_many(model, n: int, x0, replicates: int, rng_seed: int, threads: Optional[int] = None,
                        theta: Optional[float] = None, check_minorization: bool = True,
                        max_steps: int = 10**7, batch_size: int = 256) -> list[RegenerationRecord]:
    th = model.theta if theta is None else theta

    def fn(b, size, rng):
        return _simulate_split_batch(model, n, x0, size, rng, th, check_minorization, max_steps)

    out = []
    for recs in _run_batches(fn, replicates, rng_seed, threads, batch_size):
        out.extend(recs)
    return out


def simulate_plain(model, n: int, x0, replicates: int, rng_seed: int, threads: Optional[int] = None,
                   batch_size: int = DEFAULT_BATCH, record_at: Sequence[int] = ()) -> dict:
    """Plain kernel simulation; returns the states at the requested times."""
    times = sorted(set(int(t) for t in record_at))

    def fn(b, size, rng):
        x = model.initial(x0, size) if np.ndim(x0) == (0 if model.state_dim == 0 else 1) else np.asarray(x0)
        out = {}
        for k in range(n + 1):
            if k in times:
                out[k] = x.copy()
            if k < n:
                x = model.step(x, rng)
        return out

    parts = _run_batches(fn, replicates, rng_seed, threads, batch_size)
    return {t: np.concatenate([p[t] for p in parts]) for t in times}


# ---------------------------------------------------------------------------
# regeneration tours
# ---------------------------------------------------------------------------

@dataclass
class TourSample:
    """Per-tour statistics of nu-started tours (initial segments excluded)."""

    chain: np.ndarray
    length: np.ndarray
    sum_f: np.ndarray
    sum_absfbar: np.ndarray
    n_in_j: np.ndarray
    sum_sqrtV: np.ndarray
    beta: float
    theta: Optional[float]

    @property
    def n_tours(self) -> int:
        return len(self.length)

    def theta_hat(self) -> float:
        return float(self.sum_f.sum() / self.length.sum())


def _tours_batch(model, x0, size, m, rng, theta, check, max_steps):
    x = _start_batch(model, x0, size)
    th = 0.0 if theta is None else theta
    started = np.zeros(size, dtype=bool)
    count = np.zeros(size, dtype=np.int64)
    acc = np.zeros((size, 5))  # length, sum f, sum |f - theta|, visits to J, sum V^1/2
    rec = []
    active = np.arange(size)
    steps = 0
    while active.size:
        steps += 1
        if steps > max_steps:
            raise InsufficientDataError(f"tour collection exceeded {max_steps} steps")
        xa = x[active]
        fx = np.asarray(model.f(xa), dtype=float)
        in_j = np.asarray(model.in_small_set(xa), dtype=float)
        acc[active, 0] += 1
        acc[active, 1] += fx
        acc[active, 2] += np.abs(fx - th)
        acc[active, 3] += in_j
        acc[active, 4] += np.sqrt(np.asarray(model.V(xa), dtype=float))
        y, bell = split_transition(model, xa, rng, check)
        x[active] = y
        if bell.any():
            ended = active[bell]
            keep = ended[started[ended]]
            if keep.size:
                rec.append(np.column_stack([keep, acc[keep]]))
                count[keep] += 1
            started[ended] = True
            acc[ended] = 0.0
            active = active[count[active] < m]
    if rec:
        R = np.concatenate(rec)
        order = np.argsort(R[:, 0], kind="stable")
        R = R[order]
    else:
        R = np.zeros((0, 6))
    return R


def collect_tours(model, tours_per_chain: int, chains: int, x0, rng_seed: int, threads: Optional[int] = None,
                  theta: Optional[float] = None, check_minorization: bool = True, max_steps: int = 10**7,
                  batch_size: int = DEFAULT_BATCH) -> TourSample:
    """Run ``chains`` split chains, each until it completes ``tours_per_chain`` tours after T_1."""
    if tours_per_chain < 1 or chains < 1:
        raise InvalidInputError("tours_per_chain and chains must be >= 1")
    th = model.theta if theta is None else theta

    def fn(b, size, rng):
        R = _tours_batch(model, x0, size, tours_per_chain, rng, th, check_minorization, max_steps)
        R[:, 0] += b * batch_size
        return R

    R = np.concatenate(_run_batches(fn, chains, rng_seed, threads, batch_size))
    return TourSample(R[:, 0].astype(np.int64), R[:, 1].astype(np.int64), R[:, 2], R[:, 3], R[:, 4], R[:, 5],
                      float(model.beta), th)


def _ratio_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Ratio of means and its delta-method standard error."""
    n = len(a)
    ma, mb = a.mean(), b.mean()
    r = ma / mb
    if n < 2:
        return float(r), math.inf
    va, vb = a.var(ddof=1), b.var(ddof=1)
    cab = np.cov(a, b, ddof=1)[0, 1]
    var = (va - 2 * r * cab + r * r * vb) / (mb * mb * n)
    return float(r), float(math.sqrt(max(var, 0.0)))


def _tours_from_records(records: Sequence[RegenerationRecord], model_beta: float = float("nan")) -> TourSample:
    rows = []
    for ci, rec in enumerate(records):
        for blk in rec.blocks:
            rows.append((ci, blk.length, blk.sum_f, blk.sum_absfbar))
    if not rows:
        R = np.zeros((0, 4))
    else:
        R = np.array(rows, dtype=float)
    nanv = np.full(len(R), np.nan)
    th = records[0].theta if records else None
    return TourSample(R[:, 0].astype(np.int64), R[:, 1].astype(np.int64), R[:, 2], R[:, 3], nanv, nanv,
                      model_beta, th)


@dataclass
class SigmaEstimate:
    sigma_as_sq: float
    stderr: float
    n_blocks: int
    theta: float
    theta_plugin: bool


def estimate_sigma_as(tours, theta: Optional[float] = None, min_blocks: int = 1000) -> SigmaEstimate:
    """sigma_as^2 = E_nu Xi(fbar)^2 / E_nu T from nu-started tours.

    ``tours`` is a TourSample or a sequence of RegenerationRecords (their
    initial segments are already excluded from the tour list).
    """
    if not isinstance(tours, TourSample):
        tours = _tours_from_records(list(tours))
    if tours.n_tours < min_blocks:
        raise InsufficientDataError(f"{tours.n_tours} tours available, at least {min_blocks} required")
    plugin = False
    if theta is None:
        theta = tours.theta
    if theta is None:
        theta = tours.theta_hat()
        plugin = True
    length = tours.length.astype(float)
    xi = tours.sum_f - theta * length
    s2, se = _ratio_se(xi * xi, length)
    return SigmaEstimate(s2, se, tours.n_tours, float(theta), plugin)


def kac_check(tours: TourSample) -> tuple[float, float, float]:
    """(1/E_nu T, beta * pi_hat(J), stderr of their difference)."""
    length = tours.length.astype(float)
    rate = 1.0 / length.mean()
    pij = tours.n_in_j.sum() / length.sum()
    diff, se = _ratio_se(1.0 - tours.beta * tours.n_in_j, length)
    return float(rate), float(tours.beta * pij), se


def block_lag1_autocorr(tours: TourSample, theta: Optional[float] = None) -> tuple[float, float]:
    """Lag-1 autocorrelation of Xi_k(fbar) within chains, and its null stderr."""
    th = tours.theta if theta is None else theta
    if th is None:
        th = tours.theta_hat()
    xi = tours.sum_f - th * tours.length
    same = tours.chain[1:] == tours.chain[:-1]
    a, b = xi[:-1][same], xi[1:][same]
    if len(a) < 3:
        raise InsufficientDataError("too few consecutive tours for an autocorrelation")
    r = float(np.corrcoef(a, b)[0, 1])
    return r, 1.0 / math.sqrt(len(a))


def tour_moment_identity_check(records: Sequence[RegenerationRecord], g: Callable[[np.ndarray], np.ndarray]):
    """Compare E_nu Xi(g)^2 with E_nu T (E_pi g^2 + 2 sum_n E_pi g(X_0) g(X_n) 1(T > n)).

    The left side averages squared tour sums; the right side is built from
    lagged products along the trajectories (stationary segment [T_1, T_R(n))),
    with 1(T > n) read off the bell sequence.  Returns (lhs, lhs_se, rhs).
    """
    sq, lengths = [], []
    time_total = 0
    cross_total = 0.0
    for rec in records:
        eps = rec.regen_epochs[: rec.r_of_n]
        if len(eps) < 2:
            continue
        s, e = int(eps[0]), int(eps[-1])
        gv = np.asarray(g(rec.states[s:e]), dtype=float)
        bells = rec.bells[s:e]
        for a, b in zip(eps[:-1] - s, eps[1:] - s):
            sq.append(gv[a:b].sum() ** 2)
            lengths.append(b - a)
        cb = np.concatenate([[0], np.cumsum(bells)])
        total = float(np.sum(gv * gv))
        N = len(gv)
        for lag in range(1, N):
            ok = (cb[lag:N] - cb[: N - lag]) == 0
            if not ok.any():
                break
            total += 2.0 * float(np.sum(gv[: N - lag][ok] * gv[lag:][ok]))
        cross_total += total
        time_total += N
    if len(sq) < 2:
        raise InsufficientDataError("too few tours for the tour second-moment identity")
    sq = np.array(sq)
    mean_T = float(np.mean(lengths))
    lhs = float(sq.mean())
    lhs_se = float(sq.std(ddof=1) / math.sqrt(len(sq)))
    rhs = mean_T * cross_total / time_total
    return lhs, lhs_se, rhs


# ---------------------------------------------------------------------------
# constants C0, C1, C2 and RMSE
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalConstants:
    sigma_as_sq_hat: float
    c0_hat: float
    c1_hat: float
    c2_hat: float
    standard_errors: dict
    n_blocks: int
    n_replicates: int
    n_for_c2: int
    theta: float
    theta_plugin: bool = False
    c0_halves: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["c0_halves"] = list(self.c0_halves)
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _first_regen_batch(model, x, rng, check, max_steps):
    """Time T of the first regeneration for each chain started at x."""
    size = len(x)
    T = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    k = 0
    while active.size:
        if k >= max_steps:
            raise InsufficientDataError(f"no regeneration within {max_steps} steps")
        y, bell = split_transition(model, x[active], rng, check)
        x[active] = y
        T[active[bell]] = k + 1
        active = active[~bell]
        k += 1
    return T


def _warm(model, x0, size, steps, rng):
    x = model.initial(x0, size)
    for _ in range(steps):
        x = model.step(x, rng)
    return x


def _stationary_start(model, x0, size, rng, warmup):
    x = model.sample_stationary(size, rng)
    if x is None:
        x = _warm(model, x0, size, warmup, rng)
    return x


def _first_and_overshoot_batch(model, x0, size, n, rng, theta, check, max_steps):
    """Per chain from x0: S1 = sum_{i<T_1} |fbar|, S2 = 1(T_1 < n) sum_{n<=i<T_R(n)} |fbar|."""
    x = model.initial(x0, size) if np.ndim(x0) == (0 if model.state_dim == 0 else 1) else np.asarray(x0).copy()
    s1 = np.zeros(size)
    s2 = np.zeros(size)
    t1 = np.full(size, -1, dtype=np.int64)
    done = np.zeros(size, dtype=bool)
    active = np.arange(size)
    k = 0
    while active.size:
        if k >= max_steps:
            raise InsufficientDataError(f"no regeneration past n={n} within {max_steps} steps")
        xa = x[active]
        af = np.abs(np.asarray(model.f(xa), dtype=float) - theta)
        pre = t1[active] < 0
        s1[active[pre]] += af[pre]
        if k >= n:
            s2[active] += af
        y, bell = split_transition(model, xa, rng, check)
        x[active] = y
        rang = active[bell]
        first = rang[t1[rang] < 0]
        t1[first] = k + 1
        if k + 1 > n:
            done[rang] = True
        active = active[~done[active]]
        k += 1
    s2 = np.where(t1 < n, s2, 0.0)
    return s1, s2, t1


def _rms_with_se(s: np.ndarray) -> tuple[float, float]:
    m2 = float(np.mean(s * s))
    val = math.sqrt(m2)
    if len(s) < 2 or val == 0:
        return val, 0.0
    se_m2 = float(np.std(s * s, ddof=1) / math.sqrt(len(s)))
    return val, se_m2 / (2 * val)


def estimate_constants(model, n_for_c2: int, replicates: int, rng_seed: int, x0=None,
                       n_blocks: int = 10**5, threads: Optional[int] = None, warmup: int = 1000,
                       theta: Optional[float] = None, check_minorization: bool = True,
                       max_steps: int = 10**7, batch_size: int = DEFAULT_BATCH) -> EmpiricalConstants:
    """Monte Carlo estimates of sigma_as^2, C0, C1 and C2 (for n = n_for_c2).

    C0 uses stationary starts: exact draws when the model provides them,
    otherwise chains warmed up from x0 (half the replicates for ``warmup``
    steps, half for twice as long; the two halves double as a diagnostic).
    """
    if replicates < 2:
        raise InvalidInputError("replicates must be >= 2")
    if x0 is None:
        x0 = model.start_state() if hasattr(model, "start_state") else 0.0
    chains = max(1, min(1000, n_blocks // 100))
    per_chain = max(1, -(-n_blocks // chains))
    tours = collect_tours(model, per_chain, chains, x0, rng_seed, threads, theta,
                          check_minorization, max_steps, batch_size)
    sig = estimate_sigma_as(tours, theta if theta is not None else model.theta, min_blocks=min(1000, n_blocks))
    th = sig.theta

    has_exact = model.sample_stationary(1, np.random.default_rng(0)) is not None
    half = replicates // 2

    def c0_fn(b, size, rng):
        x_a = _stationary_start(model, x0, size, rng, warmup)
        return _first_regen_batch(model, x_a, rng, check_minorization, max_steps)

    def c0_fn_long(b, size, rng):
        x_b = _stationary_start(model, x0, size, rng, 2 * warmup)
        return _first_regen_batch(model, x_b, rng, check_minorization, max_steps)

    seed_c0 = (rng_seed + 0x9E3779B97F4A7C15) % 2**64
    seed_c0b = (rng_seed + 2 * 0x9E3779B97F4A7C15) % 2**64
    Ta = np.concatenate(_run_batches(c0_fn, half, seed_c0, threads, batch_size)).astype(float)
    Tb = np.concatenate(_run_batches(c0_fn if has_exact else c0_fn_long, replicates - half, seed_c0b,
                                     threads, batch_size)).astype(float)
    T = np.concatenate([Ta, Tb])
    c0 = float(T.mean() - 0.5)
    c0_se = float(T.std(ddof=1) / math.sqrt(len(T)))
    ha, hb = Ta.mean() - 0.5, Tb.mean() - 0.5
    se_h = math.sqrt(Ta.var(ddof=1) / len(Ta) + Tb.var(ddof=1) / len(Tb))
    if abs(ha - hb) > 3 * se_h:
        warnings.warn(f"C0 halves disagree: {ha:.4g} vs {hb:.4g} (stderr {se_h:.3g}); "
                      "warm-up may be too short", DiagnosticWarning, stacklevel=2)

    def c12_fn(b, size, rng):
        s1, s2, _ = _first_and_overshoot_batch(model, x0, size, n_for_c2, rng, th, check_minorization, max_steps)
        return np.column_stack([s1, s2])

    seed_c12 = (rng_seed + 3 * 0x9E3779B97F4A7C15) % 2**64
    S = np.concatenate(_run_batches(c12_fn, replicates, seed_c12, threads, batch_size))
    c1, c1_se = _rms_with_se(S[:, 0])
    c2, c2_se = _rms_with_se(S[:, 1])
    return EmpiricalConstants(
        sigma_as_sq_hat=sig.sigma_as_sq,
        c0_hat=c0,
        c1_hat=c1,
        c2_hat=c2,
        standard_errors={"sigma_as_sq": sig.stderr, "c0": c0_se, "c1": c1_se, "c2": c2_se},
        n_blocks=sig.n_blocks,
        n_replicates=replicates,
        n_for_c2=n_for_c2,
        theta=th,
        theta_plugin=sig.theta_plugin,
        c0_halves=(float(ha), float(hb)),
        diagnostics={"c0_halves_stderr": se_h, "exact_stationary_start": has_exact},
    )


@dataclass
class RmseEstimate:
    n: int
    rmse: float
    stderr: float
    replicates: int


def estimate_rmse(model, n, replicates: int, x0, rng_seed: int, threads: Optional[int] = None,
                  theta: Optional[float] = None, batch_size: int = DEFAULT_BATCH):
    """Root-MSE of theta_hat_n = (1/n) sum_{i<n} f(X_i) over independent plain chains.

    ``n`` may be an int or a sequence of ints; all lengths share the same
    chains, and a list of estimates is returned in the latter case.
    """
    th = model.theta if theta is None else theta
    if th is None:
        raise InvalidInputError("theta is required to compute the MSE")
    ns = [int(n)] if np.ndim(n) == 0 else [int(v) for v in n]
    if min(ns) < 1:
        raise InvalidInputError("n must be >= 1")
    if replicates < 2:
        raise InvalidInputError("replicates must be >= 2")
    checkpoints = sorted(set(ns))
    n_max = checkpoints[-1]

    def fn(b, size, rng):
        x = model.initial(x0, size)
        s = np.zeros(size)
        out = np.zeros((size, len(checkpoints)))
        j = 0
        for k in range(n_max):
            s += np.asarray(model.f(x), dtype=float)
            if k + 1 == checkpoints[j]:
                out[:, j] = s / (k + 1) - th
                j += 1
            if k + 1 < n_max:
                x = model.step(x, rng)
        return out

    E = np.concatenate(_run_batches(fn, replicates, rng_seed, threads, batch_size))
    res = {}
    for j, c in enumerate(checkpoints):
        val, se = _rms_with_se(E[:, j])
        res[c] = RmseEstimate(c, val, se, replicates)
    out = [res[v] for v in ns]
    return out[0] if np.ndim(n) == 0 else out
