"""Monte Carlo simulator of the uplink D2D-underlaid massive-MIMO network.

The default ``"analysis"`` mode draws each interferer's distance to its own
serving/nearest MBS independently from the Rayleigh nearest-neighbour law,
matching the independence assumptions behind the closed forms. The
``"full-network"`` mode places an actual MBS PPP, associates every node with
its nearest MBS and schedules S CUEs per cell. It quantifies the modelling
gap and is not meant to agree with the analysis to within MC noise.

Reproducibility: trials are grouped into fixed-size chunks and chunk ``k``
draws from ``PCG64(SeedSequence(seed).spawn(...)[k])``. Chunks are reassembled
in order before any reduction, so a seed yields bitwise-identical results for
any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .params import SystemParams
from .power import cue_tx_power, d2d_tx_power

CHUNK_TRIALS = 200
MIN_TRIALS = 100
DEFAULT_TRIALS = 20_000
MODES = ("analysis", "full-network")


class MonteCarloError(ValueError):
    pass


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_trials: int
    ci95_low: float
    ci95_high: float
    seed: int
    chunk_trials: int = CHUNK_TRIALS

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int) -> "MonteCarloEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        mean = float(np.mean(samples))
        se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean, se, n, mean - 1.96 * se, mean + 1.96 * se, seed)

    def agrees_with(self, value: float, rel: float = 0.05, n_se: float = 3.0) -> bool:
        """|value - mean| <= max(rel |value|, n_se standard errors)."""
        return abs(value - self.mean) <= max(rel * abs(value), n_se * self.std_error)


def _check_trials(n_trials: int, minimum: int = MIN_TRIALS):
    if int(n_trials) != n_trials or n_trials < minimum:
        raise MonteCarloError(f"need at least {minimum} trials, got {n_trials}")


def run_chunks(kernel: Callable[[np.random.Generator, int], np.ndarray], n_trials: int,
               seed: int, workers: int = 1, chunk: int = CHUNK_TRIALS) -> np.ndarray:
    """Evaluate ``kernel(rng, m)`` over fixed chunks and concatenate in chunk order.

    ``seed`` is any ``SeedSequence`` entropy: an int or a tuple of ints.
    """
    sizes = [chunk] * (n_trials // chunk)
    if n_trials % chunk:
        sizes.append(n_trials % chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def job(k):
        return kernel(np.random.Generator(np.random.PCG64(streams[k])), sizes[k])

    if workers <= 1:
        parts = [job(k) for k in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    return np.concatenate(parts, axis=0)


# --- sampling primitives ---------------------------------------------------

def rayleigh_distances(rng: np.random.Generator, lambda_m: float, size) -> np.ndarray:
    """Nearest-MBS distances with pdf 2 pi lambda r exp(-pi lambda r^2)."""
    return np.sqrt(rng.standard_exponential(size) / (math.pi * lambda_m))


def sample_cue_powers(p: SystemParams, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return cue_tx_power(p, rayleigh_distances(rng, p.lambda_m, n))


def sample_d2d_powers(p: SystemParams, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return d2d_tx_power(p, rayleigh_distances(rng, p.lambda_m, n))


def _ppp_annulus(rng, density, r_in, r_out, m):
    """Per-trial PPP on the annulus r_in < |x| < r_out (r_in per trial or scalar).

    Returns (trial index, radius) of every point, trials in order.
    """
    r_in = np.broadcast_to(np.asarray(r_in, dtype=float), (m,))
    area = math.pi * (r_out * r_out - r_in * r_in)
    counts = rng.poisson(density * np.maximum(area, 0.0))
    owner = np.repeat(np.arange(m), counts)
    lo2 = r_in[owner] ** 2
    radius = np.sqrt(lo2 + rng.random(owner.size) * (r_out * r_out - lo2))
    return owner, radius


def _sum_by_trial(owner, values, m):
    return np.bincount(owner, weights=values, minlength=m)


def serving_gain(rng: np.random.Generator, p: SystemParams, size) -> np.ndarray:
    """ZF serving-link gain, Gamma(N - S + 1, 1) (numpy's rejection sampler)."""
    return rng.standard_gamma(p.gamma_shape, size)


def _far_field(density, powers, r_out, alpha):
    """Mean interference from beyond the sampling disc, 2 pi density E[P] r_out^(2-a)/(a-2).

    Past ``r_out`` the field is a sum of many weak terms and is close to its
    mean, so adding the mean removes the truncation bias at negligible cost.
    E[P] comes from this chunk's own interferer draws.
    """
    if powers.size == 0:
        return 0.0
    return 2.0 * math.pi * density * float(np.mean(powers)) * r_out ** (2.0 - alpha) / (alpha - 2.0)


def _cue_interference(rng, p, r_in, m, alpha):
    """Aggregate CUE interference (before multiplying by beta) per trial."""
    if p.s_users == 0:
        return np.zeros(m)
    density = p.s_users * p.lambda_m
    owner, r = _ppp_annulus(rng, density, r_in, p.region_radius, m)
    pw = cue_tx_power(p, rayleigh_distances(rng, p.lambda_m, r.size))
    fade = rng.standard_exponential(r.size)
    near = _sum_by_trial(owner, pw * fade * r ** (-alpha), m)
    return near + _far_field(density, pw, p.region_radius, alpha)


def _d2d_interference(rng, p, r_in, m, alpha):
    if p.lambda_d == 0:
        return np.zeros(m)
    owner, r = _ppp_annulus(rng, p.lambda_d, r_in, p.region_radius, m)
    pw = d2d_tx_power(p, rayleigh_distances(rng, p.lambda_m, r.size))
    fade = rng.standard_exponential(r.size)
    near = _sum_by_trial(owner, pw * fade * r ** (-alpha), m)
    return near + _far_field(p.lambda_d, pw, p.region_radius, alpha)


# --- cellular uplink -------------------------------------------------------

def _cellular_fields(rng, p, m):
    """Serving distance, serving power, I_M and I_D for m analysis-mode trials."""
    d = rayleigh_distances(rng, p.lambda_m, m)
    p_serv = cue_tx_power(p, d)
    i_m = p.beta * _cue_interference(rng, p, d, m, p.alpha_m)
    i_d = p.beta * _d2d_interference(rng, p, 0.0, m, p.alpha_m)
    return d, p_serv, i_m, i_d


def _cue_se_kernel(p):
    def kernel(rng, m):
        d, p_serv, i_m, i_d = _cellular_fields(rng, p, m)
        h = serving_gain(rng, p, m)
        sinr = p_serv * h * p.beta * d ** (-p.alpha_m) / (i_m + i_d + p.sigma2)
        return np.log1p(sinr) / math.log(2.0)
    return kernel


def simulate_cue_se(p: SystemParams, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                    workers: int = 1, mode: str = "analysis") -> MonteCarloEstimate:
    """E[log2(1 + SINR)] at the typical MBS, h ~ Gamma(N-S+1, 1)."""
    _check_trials(n_trials)
    if p.s_users == 0:
        raise MonteCarloError("cellular SE needs s_users >= 1")
    if mode == "full-network":
        kernel = _full_network_kernel(p, cellular=True)
    elif mode == "analysis":
        kernel = _cue_se_kernel(p)
    else:
        raise MonteCarloError(f"unknown mode {mode!r}; choose from {MODES}")
    return MonteCarloEstimate.from_samples(run_chunks(kernel, n_trials, seed, workers), seed)


# --- D2D link ------------------------------------------------------------

def _d2d_fields(rng, p, m):
    """Typical D2D power and J_M + J_D at its receiver (origin)."""
    p_tx = d2d_tx_power(p, rayleigh_distances(rng, p.lambda_m, m))
    j_m = p.beta * _cue_interference(rng, p, p.ref_d1, m, p.alpha_d)
    j_d = p.beta * _d2d_interference(rng, p, p.ref_d2, m, p.alpha_d)
    return p_tx, j_m + j_d


def _d2d_se_kernel(p):
    def kernel(rng, m):
        p_tx, j = _d2d_fields(rng, p, m)
        g = rng.standard_exponential(m)
        sinr = p_tx * g * p.beta * p.d_o ** (-p.alpha_d) / (j + p.sigma2)
        return np.log1p(sinr) / math.log(2.0)
    return kernel


def simulate_d2d_se(p: SystemParams, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                    workers: int = 1, mode: str = "analysis") -> MonteCarloEstimate:
    _check_trials(n_trials)
    if mode == "full-network":
        kernel = _full_network_kernel(p, cellular=False)
    elif mode == "analysis":
        kernel = _d2d_se_kernel(p)
    else:
        raise MonteCarloError(f"unknown mode {mode!r}; choose from {MODES}")
    return MonteCarloEstimate.from_samples(run_chunks(kernel, n_trials, seed, workers), seed)


def simulate_mean_powers(p: SystemParams, n_trials: int = 100_000, seed: int = 0,
                         workers: int = 1) -> tuple[MonteCarloEstimate, MonteCarloEstimate]:
    """(mean CUE power, mean D2D power) from independent Rayleigh distance draws."""
    _check_trials(n_trials)

    def kernel(rng, m):
        pc = cue_tx_power(p, rayleigh_distances(rng, p.lambda_m, m))
        pd = d2d_tx_power(p, rayleigh_distances(rng, p.lambda_m, m))
        return np.stack([pc, pd], axis=1)

    out = run_chunks(kernel, n_trials, seed, workers, chunk=10_000)
    return (MonteCarloEstimate.from_samples(out[:, 0], seed),
            MonteCarloEstimate.from_samples(out[:, 1], seed))


# --- Laplace-functional estimators -------------------------------------------

def _laplace(kernel_values, t, n_trials, seed, workers):
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def kernel(rng, m):
        return kernel_values(rng, m, t)

    out = run_chunks(kernel, n_trials, seed, workers)
    return [MonteCarloEstimate.from_samples(out[:, k], seed) for k in range(t.size)]


def laplace_xi1(p: SystemParams, t, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                workers: int = 1) -> list[MonteCarloEstimate]:
    """E[(1 - e^{-t Z_1}) e^{-t I_M}] with the serving gain fixed at N - S + 1."""
    _check_trials(n_trials)

    def values(rng, m, t):
        d = rayleigh_distances(rng, p.lambda_m, m)
        z1 = cue_tx_power(p, d) * p.gamma_shape * p.beta * d ** (-p.alpha_m)
        i_m = p.beta * _cue_interference(rng, p, d, m, p.alpha_m)
        return -np.expm1(-np.outer(z1, t)) * np.exp(-np.outer(i_m, t))

    return _laplace(values, t, n_trials, seed, workers)


def laplace_xi2(p: SystemParams, t, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                workers: int = 1) -> list[MonteCarloEstimate]:
    """E[e^{-t I_D}] for the D2D interference at the MBS."""
    _check_trials(n_trials)

    def values(rng, m, t):
        i_d = p.beta * _d2d_interference(rng, p, 0.0, m, p.alpha_m)
        return np.exp(-np.outer(i_d, t))

    return _laplace(values, t, n_trials, seed, workers)


def laplace_xi3(p: SystemParams, t, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                workers: int = 1) -> list[MonteCarloEstimate]:
    """E[e^{-t Z_2}] = E[1 / (1 + t P_D beta d_o^-alpha_D)]."""
    _check_trials(n_trials)

    def values(rng, m, t):
        pd = d2d_tx_power(p, rayleigh_distances(rng, p.lambda_m, m))
        return 1.0 / (1.0 + np.outer(pd * p.beta * p.d_o ** (-p.alpha_d), t))

    return _laplace(values, t, n_trials, seed, workers)


def laplace_xi4(p: SystemParams, t, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                workers: int = 1) -> list[MonteCarloEstimate]:
    """E[e^{-t (J_M + J_D)}] at the typical D2D receiver."""
    _check_trials(n_trials)

    def values(rng, m, t):
        j = p.beta * (_cue_interference(rng, p, p.ref_d1, m, p.alpha_d)
                      + _d2d_interference(rng, p, p.ref_d2, m, p.alpha_d))
        return np.exp(-np.outer(j, t))

    return _laplace(values, t, n_trials, seed, workers)


# --- full-network mode -------------------------------------------------------

CANDIDATE_OVERSAMPLING = 4


def _uniform_disc(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _schedule_cues(rng, bs, tree, p):
    """S users per Voronoi cell, drawn uniformly among PPP candidates in the cell.

    Cells holding fewer than S candidates keep all of them.
    """
    area = math.pi * p.region_radius ** 2
    n_cand = rng.poisson(CANDIDATE_OVERSAMPLING * p.s_users * p.lambda_m * area)
    cand = _uniform_disc(rng, n_cand, p.region_radius)
    dist, cell = tree.query(cand)
    order = np.lexsort((rng.random(n_cand), cell))
    cell_sorted = cell[order]
    first = np.searchsorted(cell_sorted, cell_sorted, side="left")
    rank = np.arange(n_cand) - first
    keep = order[rank < p.s_users]
    return cand[keep], dist[keep], cell[keep]


def _full_network_kernel(p: SystemParams, cellular: bool):
    area = math.pi * p.region_radius ** 2
    link = p.beta

    def one_trial(rng):
        n_bs = rng.poisson(p.lambda_m * area)
        # the typical MBS sits at the origin (Palm distribution)
        bs = np.vstack([[0.0, 0.0], _uniform_disc(rng, n_bs, p.region_radius)])
        tree = cKDTree(bs)
        cues, serv_dist, cell = _schedule_cues(rng, bs, tree, p)
        n_d2d = rng.poisson(p.lambda_d * area)
        d2d = _uniform_disc(rng, n_d2d, p.region_radius)
        d2d_near, _ = tree.query(d2d) if n_d2d else (np.empty(0), None)
        pw_c = cue_tx_power(p, np.maximum(serv_dist, 1e-9))
        pw_d = d2d_tx_power(p, np.maximum(d2d_near, 1e-9))
        if cellular:
            own = np.flatnonzero(cell == 0)
            if own.size == 0:
                return math.nan
            k = own[rng.integers(own.size)]
            others = cell != 0
            r_c = np.hypot(*cues[others].T)
            r_d = np.hypot(*d2d.T)
            i_m = np.sum(pw_c[others] * rng.standard_exponential(r_c.size) * r_c ** -p.alpha_m)
            i_d = np.sum(pw_d * rng.standard_exponential(r_d.size) * r_d ** -p.alpha_m)
            h = rng.standard_gamma(p.gamma_shape)
            sig = pw_c[k] * h * link * serv_dist[k] ** -p.alpha_m
            return math.log2(1.0 + sig / (link * (i_m + i_d) + p.sigma2))
        # typical D2D receiver at a uniformly random location, transmitter d_o away
        rx = _uniform_disc(rng, 1, 0.5 * p.region_radius)[0]
        angle = 2 * math.pi * rng.random()
        tx = rx + p.d_o * np.array([math.cos(angle), math.sin(angle)])
        tx_near, _ = tree.query(tx)
        p_tx = d2d_tx_power(p, max(tx_near, 1e-9))
        r_c = np.maximum(np.hypot(*(cues - rx).T), p.ref_d1)
        r_d = np.maximum(np.hypot(*(d2d - rx).T), p.ref_d2)
        j_m = np.sum(pw_c * rng.standard_exponential(r_c.size) * r_c ** -p.alpha_d)
        j_d = np.sum(pw_d * rng.standard_exponential(r_d.size) * r_d ** -p.alpha_d)
        g = rng.standard_exponential()
        sig = p_tx * g * link * p.d_o ** -p.alpha_d
        return math.log2(1.0 + sig / (link * (j_m + j_d) + p.sigma2))

    def kernel(rng, m):
        out = np.array([one_trial(rng) for _ in range(m)])
        # an empty serving cell is a zero-rate trial for the typical MBS
        return np.nan_to_num(out, nan=0.0)

    return kernel
