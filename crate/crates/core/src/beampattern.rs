//! Average beampattern over azimuth and the sidelobe floor added by channel
//! estimation error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Geometry, SystemParams};
use crate::protocol::{node_contributions, node_weights, sample_symbols, share_slot, Steering};
use crate::stats::{map_trial_blocks, RunningStats};
use crate::stochastic::{sample_channels, sample_disk_geometry, seed_for_trial, streams, ErrorModel};

/// Mean received power per azimuth. Destination noise is not included.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternCurve {
    pub phis: Vec<f64>,
    pub power: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
}

impl BeampatternCurve {
    /// Largest minus smallest power on the grid.
    pub fn spread(&self) -> f64 {
        let max = self.power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.power.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().cloned().fold(0.0, f64::max)
    }
}

/// Sidelobe floor added by estimation error of variance `σ_δ²`:
/// `N²μ²b²σ_s²σ_a⁴·(Kσ_δ²/(Nσ_a²) + σ_δ²/(Nγ₁σ_a²))`.
///
/// Evaluated as the equal form `Nμ²b²σ_δ²(Kσ_a²σ_s² + σ_w²)`, which stays
/// finite when `σ_w² = 0`.
pub fn delta_pav_analytic(params: &SystemParams, sigma_delta_sq: f64) -> Result<f64> {
    params.validate()?;
    ErrorModel::ChannelError { sigma_delta_sq }.validate()?;
    let p = params;
    Ok(p.nodes as f64
        * p.mu_b_sq()
        * sigma_delta_sq
        * (p.sources as f64 * p.sigma_a_sq * p.sigma_s_sq + p.sigma_w_sq))
}

#[derive(Clone, Copy)]
enum Mode {
    Plain,
    /// Imperfect minus perfect power, with `±δa` drawn antithetically.
    ChannelErrorDelta,
}

/// Monte Carlo beampattern averaged over node placement, channels, errors,
/// symbols and collaborator noise.
pub fn mc_beampattern(
    params: &SystemParams,
    model: &ErrorModel,
    dest_angle: f64,
    phis: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<BeampatternCurve> {
    run(params, model, None, dest_angle, phis, trials, master_seed, Mode::Plain)
}

/// As [`mc_beampattern`], with node placement held at `geometry`.
pub fn mc_beampattern_fixed(
    params: &SystemParams,
    model: &ErrorModel,
    geometry: &Geometry,
    phis: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<BeampatternCurve> {
    if geometry.len() != params.nodes {
        return Err(Error::Dimension(format!(
            "geometry has {} nodes, params expect {}",
            geometry.len(),
            params.nodes
        )));
    }
    run(
        params,
        model,
        Some(geometry),
        geometry.dest_angle,
        phis,
        trials,
        master_seed,
        Mode::Plain,
    )
}

/// Beampattern with estimation error minus the beampattern without it, on
/// common draws.
///
/// Pairing each draw `δa` with `−δa` makes the averaged difference
/// `(|y₀ + y_δ|² + |y₀ − y_δ|²)/2 − |y₀|²` equal to `|y_δ|²`, the power of the
/// array output driven by the error part of the weights alone, which is what
/// each trial records.
pub fn mc_beampattern_delta(
    params: &SystemParams,
    sigma_delta_sq: f64,
    dest_angle: f64,
    phis: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<BeampatternCurve> {
    run(
        params,
        &ErrorModel::ChannelError { sigma_delta_sq },
        None,
        dest_angle,
        phis,
        trials,
        master_seed,
        Mode::ChannelErrorDelta,
    )
}

#[allow(clippy::too_many_arguments)]
fn run(
    params: &SystemParams,
    model: &ErrorModel,
    fixed: Option<&Geometry>,
    dest_angle: f64,
    phis: &[f64],
    trials: u64,
    seed: u64,
    mode: Mode,
) -> Result<BeampatternCurve> {
    params.validate()?;
    model.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if phis.is_empty() {
        return Err(Error::param("phi_grid", "must not be empty"));
    }
    if let Some(phi) = phis.iter().find(|p| !p.is_finite()) {
        return Err(Error::param("phi_grid", format!("angles must be finite, got {phi}")));
    }
    let blocks = map_trial_blocks(trials, |range| -> Result<Vec<RunningStats>> {
        let mut stats = vec![RunningStats::default(); phis.len()];
        let mut scratch = Scratch::new(params.packet_len);
        for t in range {
            trial(params, model, fixed, dest_angle, phis, seed, t, mode, &mut scratch, &mut stats)?;
        }
        Ok(stats)
    });
    let mut total = vec![RunningStats::default(); phis.len()];
    for block in blocks {
        for (acc, s) in total.iter_mut().zip(&block?) {
            acc.merge(s);
        }
    }
    Ok(BeampatternCurve {
        phis: phis.to_vec(),
        power: total.iter().map(|s| s.mean()).collect(),
        stderr: total.iter().map(|s| s.stderr()).collect(),
        trials,
    })
}

struct Scratch {
    y: Vec<Complex64>,
}

impl Scratch {
    fn new(packet_len: usize) -> Self {
        Scratch {
            y: vec![Complex64::new(0.0, 0.0); packet_len],
        }
    }

    fn power(&mut self, steering: &Steering, contributions: &[Complex64], phi: f64) -> f64 {
        let l = self.y.len();
        steering.response_into(contributions, l, phi, &mut self.y);
        self.y.iter().map(|v| v.norm_sqr()).sum::<f64>() / l as f64
    }
}

#[allow(clippy::too_many_arguments)]
fn trial(
    params: &SystemParams,
    model: &ErrorModel,
    fixed: Option<&Geometry>,
    dest_angle: f64,
    phis: &[f64],
    seed: u64,
    t: u64,
    mode: Mode,
    scratch: &mut Scratch,
    stats: &mut [RunningStats],
) -> Result<()> {
    let l = params.packet_len;
    let geometry = match fixed {
        Some(g) => g.clone(),
        None => sample_disk_geometry(params, dest_angle, &mut seed_for_trial(seed, t, streams::GEOMETRY)),
    };
    let channels = sample_channels(params, model, geometry, &mut seed_for_trial(seed, t, streams::CHANNEL))?;
    let symbols = sample_symbols(params, &mut seed_for_trial(seed, t, streams::SYMBOLS));
    let slot = share_slot(params, &channels, symbols, &mut seed_for_trial(seed, t, streams::NOISE))?;
    let steering = Steering::new(&channels.geometry);
    match mode {
        Mode::Plain => {
            let c = node_contributions(&node_weights(params, &channels), &slot, l);
            for (s, &phi) in stats.iter_mut().zip(phis) {
                s.push(scratch.power(&steering, &c, phi));
            }
        }
        Mode::ChannelErrorDelta => {
            // only the error part of the weights survives the antithetic difference
            let scale = params.mu_m * params.b_m;
            let weights: Vec<Complex64> = channels
                .est_errors
                .iter()
                .zip(&channels.phase_errors)
                .map(|(d, &tau)| d.conj() * Complex64::from_polar(scale, tau))
                .collect();
            let err = node_contributions(&weights, &slot, l);
            for (s, &phi) in stats.iter_mut().zip(phis) {
                s.push(scratch.power(&steering, &err, phi));
            }
        }
    }
    Ok(())
}

/// `n` azimuths evenly spaced over `[−π, π]`, endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
