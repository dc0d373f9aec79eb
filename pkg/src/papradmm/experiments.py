"""Reproducible Monte Carlo drivers behind the CLI subcommands.

Every driver is a pure function of an :class:`ExperimentConfig`: the RNG
stream of symbol ``i`` is derived from ``(seed, i, stage)``, so results are
byte-identical regardless of chunking or worker count.  Drivers return CSV
rows (list of tuples, first row the header); :func:`write_csv` renders them
with fixed formatting.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dsp, metrics
from .channel import (
    MultipathProfile,
    SspaParams,
    channel_frequency_response,
    equalize_zero_forcing,
    multipath_apply,
    noise_variance_per_sample,
    saturation_amplitude,
    sspa,
)
from .config import ExperimentConfig
from .direct import direct_solve
from .params import AdmmParams, db_to_linear
from .rcf import RcfParams, rcf
from .relax import relax_solve

_BITS_STAGE = 0
_NOISE_STAGE = 1


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (symbol, stage) pair."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def make_plan(cfg: ExperimentConfig) -> dsp.CarrierPlan:
    return dsp.CarrierPlan.default(cfg.n_carriers, cfg.n_free)


def generate_bits(cfg: ExperimentConfig, n_symbols: int, const, plan) -> np.ndarray:
    per_symbol = plan.n_data * const.bits_per_symbol
    out = np.empty((n_symbols, per_symbol), dtype=np.int8)
    for i in range(n_symbols):
        out[i] = rng_for(cfg.seed, i, _BITS_STAGE).integers(0, 2, size=per_symbol)
    return out


def admm_params(
    cfg: ExperimentConfig, solver=None, beta=None, iterations=None, eps=None
) -> AdmmParams:
    rho, rho_tilde = cfg.resolved_penalties(solver)
    return AdmmParams(
        alpha=db_to_linear(cfg.alpha_db),
        beta=cfg.beta if beta is None else beta,
        rho=rho,
        rho_tilde=rho_tilde,
        max_iters=cfg.iterations if iterations is None else iterations,
        eps=cfg.eps if eps is None else eps,
    )


def _solve_chunk(cfg, solver, c_o, plan, beta=None):
    """(x, c) for one chunk; c is the solver's frequency-domain output."""
    if solver == "none":
        return dsp.ifft_oversampled(c_o, cfg.oversample), c_o
    if solver == "rcf":
        x = rcf(
            c_o,
            plan,
            RcfParams(cfg.alpha_db, cfg.rcf_iterations),
            cfg.oversample,
        )
        return x, dsp.fft_oversampled(x, cfg.oversample)
    params = admm_params(cfg, solver=solver, beta=beta)
    if solver == "direct":
        x, c, _ = direct_solve(c_o, plan, params, cfg.oversample, compute_kkt=False)
    else:
        x, c, _ = relax_solve(c_o, plan, params, cfg.oversample)
    return x, c


def solve_batch(cfg: ExperimentConfig, solver: str, c_o, plan, beta=None):
    """Dispatch one symbol batch to a solver, chunked across workers.

    Chunk boundaries are fixed by symbol index, and chunk outputs are
    reassembled in order, so the result is independent of ``cfg.workers``.
    """
    c_o = np.atleast_2d(c_o)
    if cfg.workers == 1 or c_o.shape[0] < 2 * cfg.workers:
        return _solve_chunk(cfg, solver, c_o, plan, beta)
    chunks = np.array_split(np.arange(c_o.shape[0]), cfg.workers)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [
            pool.submit(_solve_chunk, cfg, solver, c_o[idx], plan, beta)
            for idx in chunks if idx.size
        ]
        parts = [f.result() for f in futures]
    x = np.concatenate([p[0] for p in parts], axis=0)
    c = np.concatenate([p[1] for p in parts], axis=0)
    return x, c


def write_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _format_cell(cell) -> str:
    if isinstance(cell, float):
        if cell != cell or cell in (float("inf"), float("-inf")):
            return str(cell)
        return f"{cell:.10g}"
    return str(cell)


def run_table2(cfg: ExperimentConfig):
    """EVM of both engines over the beta grid (dB, 4 decimals)."""
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    bits = generate_bits(cfg, cfg.n_symbols, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    rows = [("solver", "beta", "evm_db")]
    for solver in ("direct", "relax"):
        for beta in cfg.beta_grid:
            _, c = solve_batch(cfg, solver, c_o, plan, beta=beta)
            value = metrics.evm_db(c, c_o, plan)
            rows.append((solver, float(beta), round(value, 4)))
    return rows


def run_ccdf(cfg: ExperimentConfig):
    """PAPR exceedance curves for the original signal and each solver."""
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    bits = generate_bits(cfg, cfg.n_symbols, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    thresholds = np.arange(
        cfg.ccdf_min_db, cfg.ccdf_max_db + cfg.ccdf_step_db / 2, cfg.ccdf_step_db
    )
    rows = [("solver", "threshold_db", "ccdf")]
    for solver in ("none", "direct", "relax", "rcf"):
        x, _ = solve_batch(cfg, solver, c_o, plan)
        curve = metrics.ccdf(dsp.papr_db(x), thresholds)
        label = "original" if solver == "none" else solver
        for t, p in zip(thresholds, curve):
            rows.append((label, round(float(t), 4), float(p)))
    return rows


def run_convergence(cfg: ExperimentConfig):
    """Median residual per iteration for both engines (fixed symbol set)."""
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    n = min(cfg.n_symbols, 500)
    bits = generate_bits(cfg, n, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    iters = max(cfg.iterations, 15)
    rows = [("solver", "iteration", "median_residual")]
    params = admm_params(cfg, solver="direct", iterations=iters, eps=0.0)
    _, _, rep = direct_solve(c_o, plan, params, cfg.oversample, compute_kkt=False)
    for k in range(rep.change_residual.shape[0]):
        rows.append(("direct", k + 1, float(np.median(rep.change_residual[k]))))
    rparams = admm_params(cfg, solver="relax", iterations=iters, eps=0.0)
    _, _, rep = relax_solve(c_o, plan, rparams, cfg.oversample)
    for k in range(rep.residual.shape[0]):
        rows.append(("relax", k + 1, float(np.median(rep.residual[k]))))
    return rows


def run_consensus_gap(cfg: ExperimentConfig, rho_tilde_grid=(10.0, 30.0, 100.0, 300.0)):
    """Median converged coupling gap versus the tie penalty (rho = 3*rho_tilde).

    Runs in feasible-start mode so the analytical gap bound applies; emits
    the per-grid-point bound satisfaction fraction alongside the median.
    """
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    n = min(cfg.n_symbols, 200)
    bits = generate_bits(cfg, n, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    rows = [("rho_tilde", "median_gap", "bound_ok_fraction", "feasible_fraction")]
    for rho_tilde in rho_tilde_grid:
        params = AdmmParams(
            alpha=db_to_linear(cfg.alpha_db), beta=cfg.beta,
            rho=3.0 * rho_tilde, rho_tilde=rho_tilde,
            max_iters=max(cfg.iterations, 400), eps=1e-14,
        )
        _, _, rep = relax_solve(c_o, plan, params, cfg.oversample, feasible_start=True)
        feas = rep.feasible_start & ~rep.bypassed
        gap = rep.consensus_gap[feas]
        bound = (rep.sd_dist_initial[feas] - rep.sd_dist_final[feas]) / rho_tilde
        ok = gap <= bound + 1e-12
        rows.append(
            (
                float(rho_tilde),
                float(np.median(gap)),
                float(np.mean(ok)) if ok.size else float("nan"),
                float(np.mean(feas)),
            )
        )
    return rows


def _transmit(cfg, solver, c_o, plan):
    x, _ = solve_batch(cfg, solver, c_o, plan)
    return np.atleast_2d(x)


def run_ber(cfg: ExperimentConfig, solvers=("none", "direct", "relax", "rcf")):
    """BER sweep over Eb/N0 for each solver, with the PA and channel applied.

    Eb is referenced to the averaged energy of the transmitted frequency
    symbols; noise is added per sample so the per-data-carrier SNR meets the
    requested Eb/N0.  With ``channel=multipath`` each symbol gets a cyclic
    prefix and the known tap response is equalized away (perfect CSI).
    """
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    bits = generate_bits(cfg, cfg.n_symbols, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    n_samples = cfg.n_carriers * cfg.oversample
    profile = MultipathProfile()
    h = profile.impulse_response(cfg.oversample * cfg.bandwidth_hz)
    resp = channel_frequency_response(h, n_samples, cfg.n_carriers)
    rows = [("solver", "channel", "ebn0_db", "ber", "bits")]
    for solver in solvers:
        x_clean = _transmit(cfg, solver, c_o, plan)
        c_tx = dsp.fft_oversampled(x_clean, cfg.oversample)
        es_bar = float(np.mean(np.linalg.norm(c_tx, axis=-1) ** 2))
        eb = es_bar / (plan.n_data * const.bits_per_symbol)
        if cfg.pa_enabled:
            a_sat = saturation_amplitude(x_clean, cfg.ibo_db)
            x_tx = sspa(x_clean, SspaParams(cfg.sspa_p, cfg.ibo_db), a_sat=a_sat)
        else:
            x_tx = x_clean
        for ebn0 in cfg.ebn0_db:
            var = noise_variance_per_sample(ebn0, eb, n_samples)
            ebn0_key = int(round(ebn0 * 1000))
            if cfg.channel == "multipath":
                clean = multipath_apply(x_tx, h, cfg.cp_len)
            else:
                clean = x_tx
            noise = _noise_batch(cfg, clean.shape, var, ebn0_key)
            c_hat = dsp.fft_oversampled(clean + noise, cfg.oversample)
            if cfg.channel == "multipath":
                c_hat = equalize_zero_forcing(c_hat, resp)
            acc = metrics.MetricAccumulator()
            acc.add_bits(bits, dsp.demap_bits(c_hat, const, plan))
            rows.append(
                (solver, cfg.channel, float(ebn0), acc.ber_value, acc.bits_total)
            )
    return rows


def _noise_batch(cfg, shape, noise_var, ebn0_key) -> np.ndarray:
    """Complex noise with one deterministic stream per symbol index."""
    out = np.empty(shape, dtype=np.complex128)
    scale = np.sqrt(noise_var / 2.0)
    for i in range(shape[0]):
        rng = rng_for(cfg.seed, i, _NOISE_STAGE, ebn0_key)
        block = rng.normal(scale=scale, size=(2, shape[1]))
        out[i] = block[0] + 1j * block[1]
    return out


def run_psd(cfg: ExperimentConfig, solvers=("none", "direct", "relax", "rcf")):
    """Normalized emission spectra after the PA, one curve per solver."""
    plan = make_plan(cfg)
    const = dsp.Constellation.from_name(cfg.constellation)
    n = min(cfg.n_symbols, 1000)
    bits = generate_bits(cfg, n, const, plan)
    c_o = dsp.map_bits(bits, const, plan)
    rows = [("solver", "freq_norm", "psd_db")]
    for solver in solvers:
        x = _transmit(cfg, solver, c_o, plan)
        if cfg.pa_enabled:
            x = sspa(x, SspaParams(cfg.sspa_p, cfg.ibo_db))
        freqs, pxx = metrics.psd(
            x.ravel(), seg_len=cfg.psd_seg_len, window=cfg.psd_window,
            normalize_peak=True,
        )
        label = "original" if solver == "none" else solver
        # frequency axis in carrier spacings: sample rate is oversample*N spacings
        scale = cfg.oversample * cfg.n_carriers
        for f, p in zip(freqs, pxx):
            rows.append((label, round(float(f * scale), 4), round(float(10 * np.log10(p + 1e-300)), 4)))
    return rows


def run_bench(cfg: ExperimentConfig):
    """Per-iteration wall time of the direct engine versus transform size."""
    rows = [("n_carriers", "ln", "seconds_per_iteration", "fft_pair_seconds")]
    rng = np.random.default_rng(cfg.seed)
    for n_f in cfg.bench_sizes:
        n = int(n_f)
        n_data = n - max(2, n // 8)
        plan = dsp.CarrierPlan.default(n, n - n_data)
        const = dsp.Constellation.qpsk()
        bits = rng.integers(0, 2, size=(cfg.bench_batch, plan.n_data * 2))
        c_o = dsp.map_bits(bits, const, plan)
        params_warm = admm_params(cfg, iterations=1, eps=0.0)
        direct_solve(c_o, plan, params_warm, cfg.oversample, compute_kkt=False)
        iters = 8
        params = admm_params(cfg, iterations=iters, eps=0.0)
        params0 = admm_params(cfg, iterations=0, eps=0.0)
        best = np.inf
        for _ in range(cfg.bench_repeats):
            t0 = time.perf_counter()
            direct_solve(c_o, plan, params, cfg.oversample, compute_kkt=False)
            t1 = time.perf_counter()
            direct_solve(c_o, plan, params0, cfg.oversample, compute_kkt=False)
            t2 = time.perf_counter()
            per_iter = ((t1 - t0) - (t2 - t1)) / iters
            best = min(best, per_iter)
        x = dsp.ifft_oversampled(c_o, cfg.oversample)
        t0 = time.perf_counter()
        for _ in range(10):
            dsp.fft_oversampled(dsp.ifft_oversampled(c_o, cfg.oversample), cfg.oversample)
        fft_pair = (time.perf_counter() - t0) / 10.0
        rows.append((n, n * cfg.oversample, float(best), float(fft_pair)))
    return rows


def loglog_fit(sizes, times):
    """R^2 and slope of log(time) against log(n*log2(n))."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    xs = np.log(sizes * np.log2(sizes))
    ys = np.log(times)
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r_sq = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return r_sq, float(slope)
