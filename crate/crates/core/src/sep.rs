//! Symbol error probability of the beamformed link.
//!
//! The analytic route averages the M-PSK Craig integral over the Erlang law
//! of the target channel energy `ξ = Σ_i |a_mi|²`, with the instantaneous
//! SINR supplied by a [`SinrMap`]. The Monte Carlo route runs the full
//! two-slot chain and counts coherent detection errors.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::protocol::{
    beamform_and_receive, genie_reference_phase, sample_symbols, share_slot,
};
use crate::quadrature::{gauss_laguerre_normalized, integrate_adaptive, AdaptiveSpec, KahanSum};
use crate::stats::{map_trial_blocks, RunningStats};
use crate::stochastic::{
    open_loop_phase, sample_channels, sample_disk_geometry, seed_for_trial, streams, ErrorModel,
};

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Instantaneous SINR with perfect channel knowledge and phase:
/// `μ²b²σ_s²ξ² / (μ²b²σ_η²ξ + σ_v²)`.
pub fn sinr_perfect(params: &SystemParams, xi: f64) -> f64 {
    let mb = params.mu_b_sq();
    safe_ratio(
        mb * params.sigma_s_sq * xi * xi,
        mb * params.sigma_eta_sq() * xi + params.sigma_v_sq,
    )
}

/// SINR when the estimation-error interference `κ` is treated as Gaussian
/// with variance [`kappa_variance`].
pub fn sinr_channel_err(params: &SystemParams, sigma_delta_sq: f64, xi: f64) -> f64 {
    let mb = params.mu_b_sq();
    safe_ratio(
        mb * params.sigma_s_sq * xi * xi,
        kappa_variance(params, sigma_delta_sq, xi) + params.sigma_v_sq,
    )
}

/// Variance of the interference term `κ` given `ξ`:
/// `μ²b²(σ_η² + σ_s²σ_δ²)ξ + μ²b²σ_η²Nσ_δ²`.
pub fn kappa_variance(params: &SystemParams, sigma_delta_sq: f64, xi: f64) -> f64 {
    let mb = params.mu_b_sq();
    let eta = params.sigma_eta_sq();
    mb * (eta + params.sigma_s_sq * sigma_delta_sq) * xi
        + mb * eta * params.nodes as f64 * sigma_delta_sq
}

/// Ratio of mean received signal power with and without i.i.d. phase errors,
/// `(2 + (N−1)|E e^{jτ}|²) / (N+1)`.
///
/// `mean_phasor_sq` is clamped into `[0, 1]`.
pub fn power_reduction_coefficient(nodes: usize, mean_phasor_sq: f64) -> f64 {
    let m = mean_phasor_sq.clamp(0.0, 1.0);
    let n = nodes as f64;
    (2.0 + (n - 1.0) * m) / (n + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinrKind {
    Perfect,
    ChannelErr { sigma_delta_sq: f64 },
    PhaseApprox { a_tau: f64 },
}

/// SINR as a function of `ξ` for one imperfection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrMap {
    params: SystemParams,
    kind: SinrKind,
}

impl SinrMap {
    pub fn perfect(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(SinrMap {
            params: *params,
            kind: SinrKind::Perfect,
        })
    }

    pub fn channel_err(params: &SystemParams, sigma_delta_sq: f64) -> Result<Self> {
        params.validate()?;
        ErrorModel::ChannelError { sigma_delta_sq }.validate()?;
        Ok(SinrMap {
            params: *params,
            kind: SinrKind::ChannelErr { sigma_delta_sq },
        })
    }

    /// Perfect-condition SINR scaled by the power reduction coefficient.
    pub fn phase_approx(params: &SystemParams, a_tau: f64) -> Result<Self> {
        params.validate()?;
        if !(0.0..=1.0).contains(&a_tau) {
            return Err(Error::param("a_tau", format!("must lie in [0, 1], got {a_tau}")));
        }
        Ok(SinrMap {
            params: *params,
            kind: SinrKind::PhaseApprox { a_tau },
        })
    }

    /// Analytic SINR map for an error model. Phase models need the mean
    /// phasor; open-loop uses `phasor_samples` location-error draws.
    pub fn for_model(
        params: &SystemParams,
        model: &ErrorModel,
        phasor_samples: u64,
        seed: u64,
    ) -> Result<Self> {
        match *model {
            ErrorModel::Perfect => Self::perfect(params),
            ErrorModel::ChannelError { sigma_delta_sq } => Self::channel_err(params, sigma_delta_sq),
            _ => {
                let m2 = mean_phasor(params, model, phasor_samples, seed)?;
                Self::phase_approx(params, power_reduction_coefficient(params.nodes, m2.value))
            }
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn kind(&self) -> SinrKind {
        self.kind
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self.kind {
            SinrKind::Perfect => sinr_perfect(&self.params, xi),
            SinrKind::ChannelErr { sigma_delta_sq } => sinr_channel_err(&self.params, sigma_delta_sq, xi),
            SinrKind::PhaseApprox { a_tau } => a_tau * sinr_perfect(&self.params, xi),
        }
    }
}

/// `|E{e^{jτ}}|²` with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorEstimate {
    pub value: f64,
    /// Quadrature error estimate (closed loop) or Monte Carlo standard error
    /// (open loop).
    pub stderr: f64,
}

/// `|E{e^{jτ}}|²` for a phase error model.
///
/// Closed loop integrates the Tikhonov density numerically (`samples` and
/// `seed` are unused). Open loop averages `e^{jτ}` over `samples` draws of
/// node location and location error.
pub fn mean_phasor(
    params: &SystemParams,
    model: &ErrorModel,
    samples: u64,
    seed: u64,
) -> Result<PhasorEstimate> {
    model.validate()?;
    match *model {
        ErrorModel::ClosedLoopPhase { rho_tau } => tikhonov_mean_phasor(rho_tau),
        ErrorModel::OpenLoopPhase { r_max, psi_max } => {
            open_loop_mean_phasor(params.r_over_lambda, r_max, psi_max, samples, seed)
        }
        _ => Err(Error::Usage(format!(
            "mean phasor requested for non-phase model `{}`",
            model.name()
        ))),
    }
}

fn tikhonov_mean_phasor(rho: f64) -> Result<PhasorEstimate> {
    // density ∝ exp(ρ(cos τ − 1)) = exp(−2ρ sin²(τ/2)), symmetric about 0
    let weight = |t: f64| {
        let s = (0.5 * t).sin();
        (-2.0 * rho * s * s).exp()
    };
    let mut breaks = vec![0.0];
    if rho.is_finite() {
        let width = 1.0 / rho.sqrt();
        for k in [1.0, 4.0, 16.0, 64.0] {
            if k * width < PI {
                breaks.push(k * width);
            }
        }
    } else {
        return Ok(PhasorEstimate { value: 1.0, stderr: 0.0 });
    }
    breaks.push(PI);
    let spec = AdaptiveSpec {
        rel_tol: 1e-13,
        ..AdaptiveSpec::default()
    };
    let den = integrate_adaptive(weight, &breaks, &spec)
        .map_err(|e| Error::Numeric(format!("Tikhonov normalizer at ρ={rho}: {e}")))?;
    let spread = integrate_adaptive(
        |t| {
            let s = (0.5 * t).sin();
            2.0 * s * s * weight(t)
        },
        &breaks,
        &spec,
    )
    .map_err(|e| Error::Numeric(format!("Tikhonov mean resultant at ρ={rho}: {e}")))?;
    let mean_cos = 1.0 - spread.value / den.value;
    let err = (spread.error + den.error * spread.value / den.value) / den.value;
    Ok(PhasorEstimate {
        value: (mean_cos * mean_cos).clamp(0.0, 1.0),
        stderr: 2.0 * mean_cos.abs() * err,
    })
}

const PHASOR_CHUNK: u64 = 1 << 14;

fn open_loop_mean_phasor(
    r_over_lambda: f64,
    r_max: f64,
    psi_max: f64,
    samples: u64,
    seed: u64,
) -> Result<PhasorEstimate> {
    if samples < 2 {
        return Err(Error::param("samples", "open-loop mean phasor needs at least 2 samples"));
    }
    let chunks = samples.div_ceil(PHASOR_CHUNK);
    let parts = map_trial_blocks(chunks, |range| {
        let mut acc = [KahanSum::default(); 5];
        for chunk in range {
            let mut rng = seed_for_trial(seed, chunk, streams::ORACLE);
            let count = PHASOR_CHUNK.min(samples - chunk * PHASOR_CHUNK);
            for _ in 0..count {
                let r = r_over_lambda * rng.gen::<f64>().sqrt();
                let psi = 2.0 * PI * rng.gen::<f64>();
                let dr = r_max * (2.0 * rng.gen::<f64>() - 1.0);
                let dpsi = psi_max * (2.0 * rng.gen::<f64>() - 1.0);
                let (s, c) = open_loop_phase(r, psi, 0.0, dr, dpsi).sin_cos();
                acc[0].add(c);
                acc[1].add(s);
                acc[2].add(c * c);
                acc[3].add(s * s);
                acc[4].add(c * s);
            }
        }
        acc.map(|k| k.value())
    });
    let mut tot = [KahanSum::default(); 5];
    for p in &parts {
        for (t, v) in tot.iter_mut().zip(p) {
            t.add(*v);
        }
    }
    let n = samples as f64;
    let [c, s, cc, ss, cs] = tot.map(|k| k.value());
    // unbiased for |E e^{jτ}|² because |e^{jτ}| = 1: Σ_{i≠k} z_i z_k* = |Σz|² − n
    let value = ((c * c + s * s - n) / (n * (n - 1.0))).clamp(0.0, 1.0);
    let (mc, ms) = (c / n, s / n);
    let var_c = (cc / n - mc * mc).max(0.0);
    let var_s = (ss / n - ms * ms).max(0.0);
    let cov = cs / n - mc * ms;
    let linear = 4.0 * (mc * mc * var_c + ms * ms * var_s + 2.0 * mc * ms * cov) / n;
    let quadratic = 2.0 * (var_c * var_c + var_s * var_s + 2.0 * cov * cov) / (n * n);
    Ok(PhasorEstimate {
        value,
        stderr: (linear + quadratic).max(0.0).sqrt(),
    })
}

/// Which integration route handles the average over `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiRoute {
    /// Generalized Gauss–Laguerre with weight `t^{N−1}e^{−t}`, node count
    /// doubled until self-converged.
    GaussLaguerre,
    /// Globally adaptive Gauss–Legendre over the Erlang density, evaluated in
    /// the log domain.
    AdaptiveLegendre,
    /// Gauss–Laguerre, falling back to adaptive when node doubling does not
    /// converge by `max_nodes`.
    Auto,
}

/// Quadrature controls for [`sep_analytic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Relative tolerance on the SEP.
    pub rel_tol: f64,
    /// Relative tolerance of the inner Craig integral over the angle.
    pub inner_rel_tol: f64,
    pub route: XiRoute,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            initial_nodes: 32,
            max_nodes: 512,
            rel_tol: 1e-6,
            inner_rel_tol: 1e-11,
            route: XiRoute::Auto,
        }
    }
}

/// An analytic SEP with its convergence record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepEvaluation {
    pub value: f64,
    pub route: XiRoute,
    /// Laguerre nodes in the accepted rule, or adaptive panels.
    pub nodes: usize,
    /// Relative change from the previous refinement.
    pub self_convergence: f64,
}

/// M-PSK SEP for a fixed SINR `gamma`:
/// `(1/π)∫₀^{(M−1)π/M} exp(−sin²(π/M)·γ / sin²φ) dφ`.
pub fn craig_sep(gamma: f64, order: usize, rel_tol: f64) -> Result<f64> {
    let m = order as f64;
    if gamma <= 0.0 {
        return Ok((m - 1.0) / m);
    }
    if gamma.is_infinite() {
        return Ok(0.0);
    }
    let c = (PI / m).sin().powi(2);
    let upper = (m - 1.0) * PI / m;
    let mut breaks = vec![0.0];
    let knee = (c * gamma).sqrt();
    if knee < 1.0 {
        let phi = knee.asin();
        if phi > 0.0 && phi < upper {
            breaks.push(phi);
        }
    }
    if PI / 2.0 < upper && breaks.last().is_some_and(|&b| b < PI / 2.0) {
        breaks.push(PI / 2.0);
    }
    breaks.push(upper);
    let spec = AdaptiveSpec {
        rel_tol,
        ..AdaptiveSpec::default()
    };
    let value = integrate_adaptive(
        |phi| {
            let s = phi.sin();
            if s == 0.0 {
                0.0
            } else {
                (-c * gamma / (s * s)).exp()
            }
        },
        &breaks,
        &spec,
    )?;
    Ok(value.value / PI)
}

/// Analytic SEP averaged over the Erlang law of `ξ`.
pub fn sep_analytic(map: &SinrMap, spec: &QuadSpec) -> Result<f64> {
    sep_analytic_detailed(map, spec).map(|e| e.value)
}

pub fn sep_analytic_detailed(map: &SinrMap, spec: &QuadSpec) -> Result<SepEvaluation> {
    match spec.route {
        XiRoute::GaussLaguerre => sep_laguerre(map, spec),
        XiRoute::AdaptiveLegendre => sep_adaptive(map, spec),
        XiRoute::Auto => match sep_laguerre(map, spec) {
            Ok(e) => Ok(e),
            Err(Error::Numeric(first)) => sep_adaptive(map, spec).map_err(|e| {
                Error::Numeric(format!("{first}; adaptive fallback also failed: {e}"))
            }),
            Err(e) => Err(e),
        },
    }
}

fn conditional_sep(map: &SinrMap, xi: f64, spec: &QuadSpec) -> Result<f64> {
    craig_sep(map.eval(xi), map.params.psk_order, spec.inner_rel_tol)
}

fn sep_laguerre(map: &SinrMap, spec: &QuadSpec) -> Result<SepEvaluation> {
    let p = map.params;
    let alpha = p.nodes as f64 - 1.0;
    let eval_with = |n: usize| -> Result<f64> {
        let rule = gauss_laguerre_normalized(n, alpha)?;
        let mut acc = KahanSum::default();
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            if w > 0.0 {
                acc.add(w * conditional_sep(map, p.sigma_a_sq * t, spec)?);
            }
        }
        Ok(acc.value())
    };
    let mut n = spec.initial_nodes.max(1);
    let mut prev = eval_with(n)?;
    let mut change = f64::INFINITY;
    while 2 * n <= spec.max_nodes {
        let next = eval_with(2 * n)?;
        n *= 2;
        change = if next == prev {
            0.0
        } else {
            ((next - prev) / next).abs()
        };
        prev = next;
        if change <= spec.rel_tol {
            return Ok(SepEvaluation {
                value: next,
                route: XiRoute::GaussLaguerre,
                nodes: n,
                self_convergence: change,
            });
        }
    }
    Err(Error::Numeric(format!(
        "Gauss–Laguerre SEP not self-converged at {n} nodes: relative change {change:e} > {:e} (value {prev:e})",
        spec.rel_tol
    )))
}

fn sep_adaptive(map: &SinrMap, spec: &QuadSpec) -> Result<SepEvaluation> {
    let p = map.params;
    let alpha = p.nodes as f64 - 1.0;
    let log_norm = ln_gamma(p.nodes as f64);
    let mean = p.nodes as f64;
    // Erlang(N, 1) upper tail beyond this point is below e^{-40} for all N
    let t_hi = mean + 15.0 * mean.sqrt() + 50.0;
    let mut breaks = vec![0.0];
    let mut b = t_hi * 2f64.powi(-50);
    while b < t_hi {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(t_hi);

    let mut failure: Option<Error> = None;
    let integrand = |t: f64| -> f64 {
        let log_density = if alpha == 0.0 {
            -t - log_norm
        } else {
            alpha * t.ln() - t - log_norm
        };
        match conditional_sep(map, p.sigma_a_sq * t, spec) {
            Ok(v) => v * log_density.exp(),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer = AdaptiveSpec {
        rel_tol: 0.1 * spec.rel_tol,
        max_panels: 20_000,
        ..AdaptiveSpec::default()
    };
    let result = integrate_adaptive(integrand, &breaks, &outer);
    if let Some(e) = failure {
        return Err(e);
    }
    let result = result?;
    Ok(SepEvaluation {
        value: result.value,
        route: XiRoute::AdaptiveLegendre,
        nodes: result.panels,
        self_convergence: if result.value > 0.0 {
            result.error / result.value
        } else {
            0.0
        },
    })
}

/// Nearest M-PSK symbol by angle after removing `reference_phase`.
///
/// A point exactly on a sector boundary goes to the lower of the two indices.
pub fn detect_psk(received: Complex64, reference_phase: f64, order: usize) -> usize {
    let theta = (received * Complex64::from_polar(1.0, -reference_phase)).arg();
    let m = order as f64;
    let mut t = theta / (2.0 * PI / m);
    if t < 0.0 {
        t += m;
    }
    if t - 0.5 == m - 1.0 {
        // boundary between M−1 and 0 ties to 0
        return 0;
    }
    ((t - 0.5).ceil().max(0.0) as usize) % order
}

/// Empirical SEP of the full two-slot chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSep {
    pub sep: f64,
    /// Standard error from the spread of per-packet error rates. Symbols in
    /// one packet share a channel draw, so they are not independent.
    pub stderr: f64,
    pub errors: u64,
    pub symbols: u64,
    pub trials: u64,
}

/// Runs `trials` packets, each with fresh geometry, channels, errors,
/// symbols and noise, and counts detection errors on the target source.
pub fn mc_sep(params: &SystemParams, model: &ErrorModel, trials: u64, master_seed: u64) -> Result<McSep> {
    params.validate()?;
    model.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let l = params.packet_len as f64;
    let blocks = map_trial_blocks(trials, |range| -> Result<(u64, RunningStats)> {
        let mut errors = 0u64;
        let mut rate = RunningStats::default();
        for t in range {
            let e = trial_errors(params, model, master_seed, t)?;
            errors += e;
            rate.push(e as f64 / l);
        }
        Ok((errors, rate))
    });
    let mut errors = 0u64;
    let mut rate = RunningStats::default();
    for b in blocks {
        let (e, r) = b?;
        errors += e;
        rate.merge(&r);
    }
    let symbols = trials * params.packet_len as u64;
    Ok(McSep {
        sep: errors as f64 / symbols as f64,
        stderr: rate.stderr(),
        errors,
        symbols,
        trials,
    })
}

fn trial_errors(params: &SystemParams, model: &ErrorModel, seed: u64, trial: u64) -> Result<u64> {
    let geometry = sample_disk_geometry(params, 0.0, &mut seed_for_trial(seed, trial, streams::GEOMETRY));
    let channels = sample_channels(
        params,
        model,
        geometry,
        &mut seed_for_trial(seed, trial, streams::CHANNEL),
    )?;
    let symbols = sample_symbols(params, &mut seed_for_trial(seed, trial, streams::SYMBOLS));
    let slot = share_slot(params, &channels, symbols, &mut seed_for_trial(seed, trial, streams::NOISE))?;
    let y = beamform_and_receive(params, &channels, &slot, channels.geometry.dest_angle)?;
    let reference = if model.is_phase() {
        genie_reference_phase(&channels)
    } else {
        0.0
    };
    let sent = slot.indices_of(channels.target, params.packet_len);
    Ok(y
        .iter()
        .zip(sent)
        .filter(|(r, &s)| detect_psk(**r, reference, params.psk_order) != s)
        .count() as u64)
}
