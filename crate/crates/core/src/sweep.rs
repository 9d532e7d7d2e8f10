//! One-dimensional SEP sweeps over an error-model parameter.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{db_to_linear, SystemParams};
use crate::sep::{mc_sep, sep_analytic, QuadSpec, SinrMap};
use crate::stochastic::ErrorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `σ_δ²/σ_a²`.
    SigmaDeltaRatio,
    /// Loop SNR `ρ_τ` in dB.
    RhoTauDb,
    /// `r_max/R`.
    RMaxRatio,
    /// `ψ_max/(2π)`.
    PsiMaxRatio,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [
        SweepAxis::SigmaDeltaRatio,
        SweepAxis::RhoTauDb,
        SweepAxis::RMaxRatio,
        SweepAxis::PsiMaxRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SigmaDeltaRatio => "sigma-delta-ratio",
            SweepAxis::RhoTauDb => "rho-tau-db",
            SweepAxis::RMaxRatio => "r-max-ratio",
            SweepAxis::PsiMaxRatio => "psi-max-ratio",
        }
    }

    /// CSV column header for the swept value.
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::SigmaDeltaRatio => "sigma_delta_ratio",
            SweepAxis::RhoTauDb => "rho_tau_db",
            SweepAxis::RMaxRatio => "r_max_ratio",
            SweepAxis::PsiMaxRatio => "psi_max_ratio",
        }
    }

    fn compatible(self, model: &ErrorModel) -> bool {
        matches!(
            (self, model),
            (SweepAxis::SigmaDeltaRatio, ErrorModel::ChannelError { .. })
                | (SweepAxis::RhoTauDb, ErrorModel::ClosedLoopPhase { .. })
                | (SweepAxis::RMaxRatio | SweepAxis::PsiMaxRatio, ErrorModel::OpenLoopPhase { .. })
        )
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(self, params: &SystemParams, base: &ErrorModel, value: f64) -> Result<ErrorModel> {
        if !self.compatible(base) {
            return Err(Error::config(
                "sweep",
                format!("axis `{}` does not apply to the `{}` error model", self.name(), base.name()),
            ));
        }
        let model = match (self, *base) {
            (SweepAxis::SigmaDeltaRatio, _) => ErrorModel::ChannelError {
                sigma_delta_sq: value * params.sigma_a_sq,
            },
            (SweepAxis::RhoTauDb, _) => ErrorModel::ClosedLoopPhase {
                rho_tau: db_to_linear(value),
            },
            (SweepAxis::RMaxRatio, ErrorModel::OpenLoopPhase { psi_max, .. }) => ErrorModel::OpenLoopPhase {
                r_max: value * params.r_over_lambda,
                psi_max,
            },
            (SweepAxis::PsiMaxRatio, ErrorModel::OpenLoopPhase { r_max, .. }) => ErrorModel::OpenLoopPhase {
                r_max,
                psi_max: value * 2.0 * PI,
            },
            _ => unreachable!("compatibility checked above"),
        };
        model
            .validate()
            .map_err(|e| Error::config("sweep", format!("value {value} on `{}`: {e}", self.name())))?;
        Ok(model)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s || a.column() == s)
            .ok_or_else(|| {
                Error::config(
                    "sweep",
                    format!(
                        "unknown axis `{s}`; expected one of {}",
                        SweepAxis::ALL.map(|a| a.name()).join(", ")
                    ),
                )
            })
    }
}

/// Analytic and simulated SEP along a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SepCurve {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub analytic: Vec<f64>,
    pub mc: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    /// Packets simulated per point.
    pub trials: u64,
}

/// Settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    /// Packets per point; zero skips the simulation.
    pub trials: u64,
    pub master_seed: u64,
    /// Location-error draws for the open-loop mean phasor.
    pub phasor_samples: u64,
    pub quad: QuadSpec,
}

/// Runs every point with the same master seed, so points share geometry,
/// gains, symbols and noise.
pub fn run_sep_sweep(
    params: &SystemParams,
    base: &ErrorModel,
    axis: SweepAxis,
    values: &[f64],
    settings: &SweepSettings,
) -> Result<SepCurve> {
    params.validate()?;
    if values.is_empty() {
        return Err(Error::config("sweep", "needs at least one value"));
    }
    let models = values
        .iter()
        .map(|&v| axis.apply(params, base, v))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = SepCurve {
        axis,
        values: values.to_vec(),
        analytic: Vec::with_capacity(values.len()),
        mc: Vec::with_capacity(values.len()),
        mc_stderr: Vec::with_capacity(values.len()),
        trials: settings.trials,
    };
    for model in &models {
        let map = SinrMap::for_model(params, model, settings.phasor_samples, settings.master_seed)?;
        curve.analytic.push(sep_analytic(&map, &settings.quad)?);
        if settings.trials > 0 {
            let r = mc_sep(params, model, settings.trials, settings.master_seed)?;
            curve.mc.push(r.sep);
            curve.mc_stderr.push(r.stderr);
        } else {
            curve.mc.push(f64::NAN);
            curve.mc_stderr.push(f64::NAN);
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names_round_trip() {
        for a in SweepAxis::ALL {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
            assert_eq!(a.column().parse::<SweepAxis>().unwrap(), a);
        }
        assert!(matches!("sigma".parse::<SweepAxis>(), Err(Error::Config { .. })));
    }

    #[test]
    fn incompatible_axis_is_a_config_error() {
        let p = SystemParams::with_defaults(10).unwrap();
        let closed = ErrorModel::ClosedLoopPhase { rho_tau: 10.0 };
        assert!(matches!(
            SweepAxis::SigmaDeltaRatio.apply(&p, &closed, 0.1),
            Err(Error::Config { .. })
        ));
        assert!(SweepAxis::RMaxRatio.apply(&p, &ErrorModel::Perfect, 0.1).is_err());
        let open = ErrorModel::OpenLoopPhase { r_max: 0.0, psi_max: 0.0 };
        assert!(SweepAxis::PsiMaxRatio.apply(&p, &open, 0.6).is_err());
    }

    #[test]
    fn axis_conversions() {
        let p = SystemParams::with_defaults(10).unwrap();
        let open = ErrorModel::OpenLoopPhase { r_max: 2.0, psi_max: 0.1 };
        assert_eq!(
            SweepAxis::RMaxRatio.apply(&p, &open, 0.3).unwrap(),
            ErrorModel::OpenLoopPhase { r_max: 3.0, psi_max: 0.1 }
        );
        assert_eq!(
            SweepAxis::PsiMaxRatio.apply(&p, &open, 0.05).unwrap(),
            ErrorModel::OpenLoopPhase { r_max: 2.0, psi_max: 0.1 * PI }
        );
        assert_eq!(
            SweepAxis::RhoTauDb.apply(&p, &ErrorModel::ClosedLoopPhase { rho_tau: 1.0 }, 10.0).unwrap(),
            ErrorModel::ClosedLoopPhase { rho_tau: 10.0 }
        );
    }

    #[test]
    fn sweep_has_one_point_per_value() {
        let p = SystemParams::with_defaults(8).unwrap();
        let settings = SweepSettings {
            trials: 64,
            master_seed: 1,
            phasor_samples: 1000,
            quad: QuadSpec::default(),
        };
        let c = run_sep_sweep(
            &p,
            &ErrorModel::ChannelError { sigma_delta_sq: 0.0 },
            SweepAxis::SigmaDeltaRatio,
            &[1e-3, 1e-2, 1e-1, 1.0],
            &settings,
        )
        .unwrap();
        assert_eq!(c.analytic.len(), 4);
        assert_eq!(c.mc.len(), 4);
        for w in c.analytic.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}
