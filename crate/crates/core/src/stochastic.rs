//! Random draws for one trial of the two-slot protocol.
//!
//! Every trial owns private generators derived from `(master_seed, trial,
//! label)`, so results never depend on how trials are scheduled across
//! workers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Geometry, SystemParams};

pub type TrialRng = ChaCha8Rng;

/// Stream labels used by the simulators.
pub mod streams {
    pub const GEOMETRY: &str = "geometry";
    pub const CHANNEL: &str = "channel";
    pub const SYMBOLS: &str = "symbols";
    pub const NOISE: &str = "noise";
    pub const ORACLE: &str = "oracle";
}

/// Derives an independent generator for one `(trial, label)` pair.
///
/// The 256-bit ChaCha key is the SHA-256 digest of the master seed, trial
/// index, and label, so distinct inputs give unrelated streams.
pub fn seed_for_trial(master_seed: u64, trial_index: u64, stream_label: &str) -> TrialRng {
    let mut hasher = Sha256::new();
    hasher.update(b"beamforge.trial.v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(trial_index.to_le_bytes());
    hasher.update((stream_label.len() as u64).to_le_bytes());
    hasher.update(stream_label.as_bytes());
    TrialRng::from_seed(hasher.finalize().into())
}

/// The imperfection under study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorModel {
    Perfect,
    /// Channel estimates `â = a + δa` with `δa ~ CN(0, σ_δ²)`.
    ChannelError { sigma_delta_sq: f64 },
    /// PLL phase jitter with Tikhonov density, loop SNR `ρ_τ` (linear).
    ClosedLoopPhase { rho_tau: f64 },
    /// Location errors: radius error uniform on `±r_max` (wavelengths),
    /// azimuth error uniform on `±psi_max` (radians).
    OpenLoopPhase { r_max: f64, psi_max: f64 },
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorModel::Perfect => Ok(()),
            ErrorModel::ChannelError { sigma_delta_sq } => {
                if sigma_delta_sq.is_finite() && sigma_delta_sq >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("sigma_delta_sq", format!("must be finite and ≥ 0, got {sigma_delta_sq}")))
                }
            }
            ErrorModel::ClosedLoopPhase { rho_tau } => {
                if rho_tau > 0.0 && !rho_tau.is_nan() {
                    Ok(())
                } else {
                    Err(Error::param("rho_tau", format!("loop SNR must be > 0, got {rho_tau}")))
                }
            }
            ErrorModel::OpenLoopPhase { r_max, psi_max } => {
                if !(r_max.is_finite() && r_max >= 0.0) {
                    return Err(Error::param("r_max", format!("must be finite and ≥ 0, got {r_max}")));
                }
                if !(0.0..=PI).contains(&psi_max) {
                    return Err(Error::param("psi_max", format!("must lie in [0, π], got {psi_max}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_phase(&self) -> bool {
        matches!(
            self,
            ErrorModel::ClosedLoopPhase { .. } | ErrorModel::OpenLoopPhase { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorModel::Perfect => "perfect",
            ErrorModel::ChannelError { .. } => "channel",
            ErrorModel::ClosedLoopPhase { .. } => "closed-loop",
            ErrorModel::OpenLoopPhase { .. } => "open-loop",
        }
    }
}

/// Channel state for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `a_ji`, row-major `K × N`: `gains[j * N + i]`.
    pub gains: Vec<Complex64>,
    /// Estimation errors `δa_mi` on the target row.
    pub est_errors: Vec<Complex64>,
    /// Net per-node phase errors `τ_i`.
    pub phase_errors: Vec<f64>,
    pub geometry: Geometry,
    /// Index of the source being beamformed.
    pub target: usize,
}

impl ChannelRealization {
    pub fn nodes(&self) -> usize {
        self.geometry.len()
    }

    pub fn sources(&self) -> usize {
        self.gains.len() / self.nodes().max(1)
    }

    /// Gains `a_ji` from source `j` to every node.
    pub fn row(&self, j: usize) -> &[Complex64] {
        let n = self.nodes();
        &self.gains[j * n..(j + 1) * n]
    }

    pub fn target_gains(&self) -> &[Complex64] {
        self.row(self.target)
    }

    /// `ξ = Σ_i |a_mi|²`.
    pub fn xi(&self) -> f64 {
        self.target_gains().iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn check(&self, params: &SystemParams) -> Result<()> {
        let n = params.nodes;
        if self.geometry.len() != n
            || self.gains.len() != params.sources * n
            || self.est_errors.len() != n
            || self.phase_errors.len() != n
        {
            return Err(Error::Dimension(format!(
                "realization sized for N={}, K={} does not match N={}, K={}",
                self.geometry.len(),
                self.sources(),
                n,
                params.sources
            )));
        }
        if self.target >= params.sources {
            return Err(Error::Dimension(format!(
                "target source {} out of range for K={}",
                self.target, params.sources
            )));
        }
        Ok(())
    }
}

/// Circularly symmetric complex Gaussian with total variance `variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Area-uniform node placement on the disk of radius `R`.
pub fn sample_disk_geometry<R: Rng + ?Sized>(
    params: &SystemParams,
    dest_angle: f64,
    rng: &mut R,
) -> Geometry {
    let n = params.nodes;
    let mut radii = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen();
        radii.push(params.r_over_lambda * u.sqrt());
        angles.push(2.0 * PI * rng.gen::<f64>());
    }
    Geometry {
        radii,
        angles,
        dest_angle,
        dest_distance: None,
    }
}

/// Draws gains, then estimation errors, then phase errors, in that order, so
/// the gains are identical across error models for the same generator.
pub fn sample_channels<R: Rng + ?Sized>(
    params: &SystemParams,
    model: &ErrorModel,
    geometry: Geometry,
    rng: &mut R,
) -> Result<ChannelRealization> {
    model.validate()?;
    if geometry.len() != params.nodes {
        return Err(Error::Dimension(format!(
            "geometry has {} nodes, params expect {}",
            geometry.len(),
            params.nodes
        )));
    }
    let n = params.nodes;
    let gains = (0..params.sources * n)
        .map(|_| complex_normal(rng, params.sigma_a_sq))
        .collect();
    let est_errors = match *model {
        ErrorModel::ChannelError { sigma_delta_sq } if sigma_delta_sq > 0.0 => {
            (0..n).map(|_| complex_normal(rng, sigma_delta_sq)).collect()
        }
        _ => vec![Complex64::new(0.0, 0.0); n],
    };
    let phase_errors = if model.is_phase() {
        sample_phase_errors(params, &geometry, model, rng)?
    } else {
        vec![0.0; n]
    };
    Ok(ChannelRealization {
        gains,
        est_errors,
        phase_errors,
        geometry,
        target: 0,
    })
}

/// One draw from the Tikhonov (von Mises) density
/// `exp(ρ cos τ) / (2π I₀(ρ))` on `[−π, π]`.
///
/// Best–Fisher rejection; below `ρ = 1e-8` the density is flat to double
/// precision and above `ρ = 1e6` a wrapped normal with variance `1/ρ` is used.
pub fn sample_tikhonov<R: Rng + ?Sized>(rho_tau: f64, rng: &mut R) -> f64 {
    if rho_tau < 1e-8 {
        return PI * (2.0 * rng.gen::<f64>() - 1.0);
    }
    if rho_tau > 1e6 {
        let z: f64 = rng.sample(StandardNormal);
        return wrap_angle(z / rho_tau.sqrt());
    }
    let s = if rho_tau < 1e-5 {
        1.0 / rho_tau + rho_tau
    } else {
        let r = 1.0 + (1.0 + 4.0 * rho_tau * rho_tau).sqrt();
        let rho = (r - (2.0 * r).sqrt()) / (2.0 * rho_tau);
        (1.0 + rho * rho) / (2.0 * rho)
    };
    let w = loop {
        let u: f64 = rng.gen();
        let z = (PI * u).cos();
        let w = (1.0 + s * z) / (s + z);
        let y = rho_tau * (s - w);
        let v: f64 = rng.gen();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let tau = w.clamp(-1.0, 1.0).acos();
    if rng.gen::<f64>() < 0.5 {
        -tau
    } else {
        tau
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Net phase error of each node under a phase model.
///
/// Open loop: the node programs its phase from an erroneous location
/// `(r + δr, ψ + δψ)` while the wave propagates from the true one, giving
/// `τ = 2π[(r+δr)·cos(φ_m − ψ − δψ) − r·cos(φ_m − ψ)]`.
pub fn sample_phase_errors<R: Rng + ?Sized>(
    params: &SystemParams,
    geometry: &Geometry,
    model: &ErrorModel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = params.nodes;
    match *model {
        ErrorModel::ClosedLoopPhase { rho_tau } => {
            model.validate()?;
            Ok((0..n).map(|_| sample_tikhonov(rho_tau, rng)).collect())
        }
        ErrorModel::OpenLoopPhase { r_max, psi_max } => {
            model.validate()?;
            if geometry.len() != n {
                return Err(Error::Dimension(format!(
                    "geometry has {} nodes, params expect {n}",
                    geometry.len()
                )));
            }
            let phi_m = geometry.dest_angle;
            Ok((0..n)
                .map(|i| {
                    let dr = r_max * (2.0 * rng.gen::<f64>() - 1.0);
                    let dpsi = psi_max * (2.0 * rng.gen::<f64>() - 1.0);
                    open_loop_phase(geometry.radii[i], geometry.angles[i], phi_m, dr, dpsi)
                })
                .collect())
        }
        _ => Err(Error::Usage(format!(
            "phase errors requested for non-phase model `{}`",
            model.name()
        ))),
    }
}

#[inline]
pub(crate) fn open_loop_phase(r: f64, psi: f64, phi_m: f64, dr: f64, dpsi: f64) -> f64 {
    2.0 * PI * ((r + dr) * (phi_m - psi - dpsi).cos() - r * (phi_m - psi).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> SystemParams {
        SystemParams::unit(n, 4, 2, 16, 10.0).unwrap()
    }

    #[test]
    fn seeding_is_deterministic_and_separated() {
        let draw = |s: u64, t: u64, l: &str| -> Vec<u64> {
            let mut r = seed_for_trial(s, t, l);
            (0..100).map(|_| r.gen()).collect()
        };
        assert_eq!(draw(42, 0, "chan"), draw(42, 0, "chan"));
        assert_ne!(draw(42, 0, "chan"), draw(42, 1, "chan"));
        assert_ne!(draw(42, 0, "chan"), draw(42, 0, "noise"));
        assert_ne!(draw(42, 0, "chan"), draw(43, 0, "chan"));
        // label boundaries are length-prefixed
        assert_ne!(draw(1, 0, "ab"), draw(1, 0, "a"));
    }

    #[test]
    fn disk_radius_moments() {
        let mut p = params(1000);
        p.r_over_lambda = 3.0;
        let mut rng = seed_for_trial(7, 0, "geom-test");
        let mut radii = Vec::with_capacity(1_000_000);
        for _ in 0..1000 {
            let g = sample_disk_geometry(&p, 0.0, &mut rng);
            assert!(g.radii.iter().all(|&r| (0.0..=3.0).contains(&r)));
            assert!(g.angles.iter().all(|&a| (0.0..2.0 * PI).contains(&a)));
            radii.extend(g.radii);
        }
        let n = radii.len() as f64;
        let mean = radii.iter().sum::<f64>() / n;
        let sd = (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
        let frac = radii.iter().filter(|&&r| r <= 1.5).count() as f64 / n;
        let se = (0.25f64 * 0.75 / n).sqrt();
        assert!((frac - 0.25).abs() < 3.0 * se, "P(r<=R/2) = {frac}");
    }

    #[test]
    fn degenerate_disk() {
        let mut p = params(5);
        p.r_over_lambda = 0.0;
        let g = sample_disk_geometry(&p, 0.0, &mut seed_for_trial(0, 0, "g"));
        assert!(g.radii.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn gain_moments_and_circularity() {
        let p = params(1000);
        let mut rng = seed_for_trial(3, 0, "gain-test");
        let mut power = Vec::new();
        let (mut sum, mut sum_sq) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for _ in 0..250 {
            let g = Geometry::collocated(1000, 0.0);
            let c = sample_channels(&p, &ErrorModel::Perfect, g, &mut rng).unwrap();
            for a in &c.gains {
                power.push(a.norm_sqr());
                sum += a;
                sum_sq += a * a;
            }
        }
        let n = power.len() as f64;
        let mean = power.iter().sum::<f64>() / n;
        let sd = (power.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd / n.sqrt(), "E|a|² = {mean}");
        // each component of a has variance 1/2; a² components have variance 1/2
        let se = (0.5 / n).sqrt();
        assert!((sum / n).re.abs() < 3.0 * se && (sum / n).im.abs() < 3.0 * se);
        assert!((sum_sq / n).re.abs() < 3.0 * se && (sum_sq / n).im.abs() < 3.0 * se);
    }

    #[test]
    fn zero_error_variance_gives_zero_errors() {
        let p = params(16);
        let c = sample_channels(
            &p,
            &ErrorModel::ChannelError { sigma_delta_sq: 0.0 },
            Geometry::collocated(16, 0.0),
            &mut seed_for_trial(0, 0, "x"),
        )
        .unwrap();
        assert!(c.est_errors.iter().all(|e| e.norm_sqr() == 0.0));
        assert!(c.phase_errors.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn gains_shared_across_models() {
        let p = params(8);
        let g = Geometry::collocated(8, 0.0);
        let a = sample_channels(&p, &ErrorModel::Perfect, g.clone(), &mut seed_for_trial(1, 2, "c")).unwrap();
        let b = sample_channels(
            &p,
            &ErrorModel::ChannelError { sigma_delta_sq: 0.3 },
            g,
            &mut seed_for_trial(1, 2, "c"),
        )
        .unwrap();
        assert_eq!(a.gains, b.gains);
        assert!(b.est_errors.iter().any(|e| e.norm_sqr() > 0.0));
    }

    #[test]
    fn tikhonov_large_concentration_variance() {
        let rho = 1e6;
        let mut rng = seed_for_trial(5, 0, "tik");
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_tikhonov(rho, &mut rng)).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // variance of a sample variance of a near-normal is 2σ⁴/n
        let se = (2.0 / n as f64).sqrt() / rho;
        assert!((var - 1.0 / rho).abs() < 4.0 * se, "var {var}");
    }

    #[test]
    fn tikhonov_flat_limit_passes_ks() {
        let mut rng = seed_for_trial(6, 0, "tik");
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_tikhonov(1e-9, &mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x + PI) / (2.0 * PI);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(d < 1.63 / (n as f64).sqrt(), "KS D = {d}");

        let mut xs: Vec<f64> = (0..n).map(|_| sample_tikhonov(1e-6, &mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(xs[0] >= -PI && xs[n - 1] <= PI);
        let median = xs[n / 2];
        assert!(median.abs() < 0.05);
    }

    #[test]
    fn tikhonov_mean_cosine_at_ten() {
        // E{cos τ} = I₁(10)/I₀(10) = 0.948599..., from the Bessel series oracle
        let expected = crate::testutil::bessel_ratio_i1_i0(10.0);
        assert!((expected - 0.9486).abs() < 1e-4);
        let mut rng = seed_for_trial(8, 0, "tik");
        let n = 1_000_000;
        let c: Vec<f64> = (0..n).map(|_| sample_tikhonov(10.0, &mut rng).cos()).collect();
        let mean = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((mean - expected).abs() < 3.0 * sd / (n as f64).sqrt(), "E cos = {mean}");
    }

    #[test]
    fn tikhonov_is_symmetric_and_bounded() {
        let mut rng = seed_for_trial(9, 0, "tik");
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_tikhonov(2.0, &mut rng)).collect();
        assert!(xs.iter().all(|x| (-PI..=PI).contains(x)));
        let mean_sin = xs.iter().map(|x| x.sin()).sum::<f64>() / n as f64;
        assert!(mean_sin.abs() < 3.0 * (0.5 / n as f64).sqrt());
    }

    #[test]
    fn open_loop_without_location_error_is_exact() {
        let p = params(32);
        let mut rng = seed_for_trial(1, 0, "g");
        let g = sample_disk_geometry(&p, 0.4, &mut rng);
        let model = ErrorModel::OpenLoopPhase { r_max: 0.0, psi_max: 0.0 };
        let tau = sample_phase_errors(&p, &g, &model, &mut rng).unwrap();
        assert!(tau.iter().all(|&t| t.abs() < 1e-12));
    }

    #[test]
    fn open_loop_radius_only_on_boresight_line() {
        // node on the destination bearing: τ = 2π·δr
        let p = params(1);
        let g = Geometry {
            radii: vec![4.0],
            angles: vec![0.0],
            dest_angle: 0.0,
            dest_distance: None,
        };
        let model = ErrorModel::OpenLoopPhase { r_max: 0.25, psi_max: 0.0 };
        let mut rng = seed_for_trial(2, 0, "p");
        let mut seen_max: f64 = 0.0;
        for _ in 0..20_000 {
            let t = sample_phase_errors(&p, &g, &model, &mut rng).unwrap()[0];
            assert!(t.abs() <= 2.0 * PI * 0.25 + 1e-12);
            seen_max = seen_max.max(t.abs());
        }
        assert!(seen_max > 0.99 * 2.0 * PI * 0.25);
    }

    #[test]
    fn phase_errors_reject_non_phase_models() {
        let p = params(4);
        let g = Geometry::collocated(4, 0.0);
        let r = sample_phase_errors(&p, &g, &ErrorModel::Perfect, &mut seed_for_trial(0, 0, "x"));
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn model_validation() {
        assert!(ErrorModel::ChannelError { sigma_delta_sq: -1.0 }.validate().is_err());
        assert!(ErrorModel::ClosedLoopPhase { rho_tau: 0.0 }.validate().is_err());
        assert!(ErrorModel::OpenLoopPhase { r_max: 0.1, psi_max: 4.0 }.validate().is_err());
        assert!(ErrorModel::OpenLoopPhase { r_max: 0.1, psi_max: PI }.validate().is_ok());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
