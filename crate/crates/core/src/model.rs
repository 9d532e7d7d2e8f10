//! Model constants, derived powers, and far-field geometry.
//!
//! Powers are linear. Distances are measured in wavelengths, so the carrier
//! wavelength never appears explicitly: a phase of `2π·d` corresponds to a
//! path of `d` wavelengths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts decibels to a linear ratio (`x_dB = 10·log10(x)`).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// All scalar constants of the two-slot collaborative beamforming model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of collaborating nodes.
    #[serde(rename = "n")]
    pub nodes: usize,
    /// Number of simultaneously transmitting sources.
    #[serde(rename = "k")]
    pub sources: usize,
    /// PSK constellation order.
    #[serde(rename = "m")]
    pub psk_order: usize,
    /// Symbols per packet.
    #[serde(rename = "l")]
    pub packet_len: usize,
    pub sigma_s_sq: f64,
    pub sigma_a_sq: f64,
    pub sigma_w_sq: f64,
    pub sigma_v_sq: f64,
    pub mu_m: f64,
    pub b_m: f64,
    pub r_over_lambda: f64,
}

/// Powers that follow from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedPowers {
    /// Interference-plus-noise power at a collaborator, `(K−1)σ_a²σ_s² + σ_w²`.
    pub sigma_eta_sq: f64,
    /// Average collaborator SNR `σ_s²σ_a²/σ_w²`.
    pub gamma1: f64,
    /// Destination SNR figure `N²μ²b²σ_s²σ_a⁴/σ_v²`.
    pub gamma2: f64,
}

impl SystemParams {
    /// Unit conventions (`σ_s² = σ_a² = 1`, `b_m = 1`, `μ_m = 1/N`) with
    /// `K = 4`, BPSK, 16-symbol packets, `R = 10λ` and both SNR figures at
    /// 20 dB.
    pub fn with_defaults(nodes: usize) -> Result<Self> {
        Self::unit(nodes, 4, 2, 16, 10.0)?.derive_powers(20.0, 20.0)
    }

    /// Unit power conventions with the noise powers left at 1; call
    /// [`SystemParams::derive_powers`] to fix them from SNR targets.
    pub fn unit(
        nodes: usize,
        sources: usize,
        psk_order: usize,
        packet_len: usize,
        r_over_lambda: f64,
    ) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let params = SystemParams {
            nodes,
            sources,
            psk_order,
            packet_len,
            sigma_s_sq: 1.0,
            sigma_a_sq: 1.0,
            sigma_w_sq: 1.0,
            sigma_v_sq: 1.0,
            mu_m: 1.0 / nodes as f64,
            b_m: 1.0,
            r_over_lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.sources == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return Err(Error::param(
                "m",
                format!("PSK order must be a power of two ≥ 2, got {}", self.psk_order),
            ));
        }
        if self.packet_len == 0 {
            return Err(Error::param("l", "must be at least 1"));
        }
        let nonneg = [
            ("sigma_s_sq", self.sigma_s_sq),
            ("sigma_w_sq", self.sigma_w_sq),
            ("sigma_v_sq", self.sigma_v_sq),
            ("r_over_lambda", self.r_over_lambda),
        ];
        for (field, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(field, format!("must be finite and ≥ 0, got {v}")));
            }
        }
        let positive = [
            ("sigma_a_sq", self.sigma_a_sq),
            ("mu_m", self.mu_m),
            ("b_m", self.b_m),
        ];
        for (field, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets `σ_w²` and `σ_v²` so that the collaborator and destination SNR
    /// figures equal the given targets.
    pub fn derive_powers(mut self, gamma1_db: f64, gamma2_db: f64) -> Result<Self> {
        let g1 = db_to_linear(gamma1_db);
        let g2 = db_to_linear(gamma2_db);
        if !g1.is_finite() || g1 <= 0.0 {
            return Err(Error::param("gamma1_db", format!("{gamma1_db} dB is not a usable SNR")));
        }
        if !g2.is_finite() || g2 <= 0.0 {
            return Err(Error::param("gamma2_db", format!("{gamma2_db} dB is not a usable SNR")));
        }
        self.sigma_w_sq = self.sigma_s_sq * self.sigma_a_sq / g1;
        self.sigma_v_sq = self.array_gain_power() * self.sigma_s_sq / g2;
        self.validate()?;
        Ok(self)
    }

    /// `N²μ²b²σ_a⁴`, the coherent power gain of the array at the destination.
    pub fn array_gain_power(&self) -> f64 {
        let n = self.nodes as f64;
        n * n * self.mu_b_sq() * self.sigma_a_sq * self.sigma_a_sq
    }

    /// `μ_m²b_m²`.
    pub fn mu_b_sq(&self) -> f64 {
        let mb = self.mu_m * self.b_m;
        mb * mb
    }

    pub fn sigma_eta_sq(&self) -> f64 {
        (self.sources as f64 - 1.0) * self.sigma_a_sq * self.sigma_s_sq + self.sigma_w_sq
    }

    pub fn derived(&self) -> DerivedPowers {
        DerivedPowers {
            sigma_eta_sq: self.sigma_eta_sq(),
            gamma1: self.sigma_s_sq * self.sigma_a_sq / self.sigma_w_sq,
            gamma2: self.array_gain_power() * self.sigma_s_sq / self.sigma_v_sq,
        }
    }
}

/// Node placement around the disk origin and the destination direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Radial coordinates `r_i`, in wavelengths.
    pub radii: Vec<f64>,
    /// Azimuths `ψ_i` in `[0, 2π)`.
    pub angles: Vec<f64>,
    /// Destination azimuth `φ_m`.
    pub dest_angle: f64,
    /// Destination range in wavelengths; `None` means far field.
    pub dest_distance: Option<f64>,
}

impl Geometry {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Every node at the disk center.
    pub fn collocated(nodes: usize, dest_angle: f64) -> Self {
        Geometry {
            radii: vec![0.0; nodes],
            angles: vec![0.0; nodes],
            dest_angle,
            dest_distance: None,
        }
    }
}

/// Far-field phase of node `i` toward azimuth `phi`, relative to its
/// programmed phase toward the destination:
/// `2π·r_i·[cos(φ_m − ψ_i) − cos(φ − ψ_i)]`.
///
/// Zero at the destination azimuth for every node.
pub fn far_field_phase_offset(geometry: &Geometry, i: usize, phi: f64) -> f64 {
    let r = geometry.radii[i];
    let psi = geometry.angles[i];
    2.0 * PI * r * ((geometry.dest_angle - psi).cos() - (phi - psi).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> SystemParams {
        SystemParams::unit(n, 4, 2, 16, 10.0).unwrap()
    }

    #[test]
    fn derive_powers_figure_operating_point() {
        let p = unit(100).derive_powers(20.0, 20.0).unwrap();
        assert!((p.sigma_w_sq - 0.01).abs() < 1e-15);
        assert!((p.sigma_v_sq - 0.01).abs() < 1e-15);
    }

    #[test]
    fn derive_powers_zero_db_is_identity() {
        let p = unit(7).derive_powers(0.0, 0.0).unwrap();
        assert_eq!(p.sigma_w_sq, 1.0);
    }

    #[test]
    fn derive_powers_gamma2_ten_db() {
        let p = unit(10).derive_powers(20.0, 10.0).unwrap();
        assert!((p.sigma_v_sq - 0.1).abs() < 1e-15);
    }

    #[test]
    fn derive_powers_round_trip() {
        for (g1, g2, n) in [(20.0, 20.0, 100), (-3.5, 42.0, 3), (7.25, 0.5, 64)] {
            let mut p = unit(n);
            p.sigma_s_sq = 2.5;
            p.sigma_a_sq = 0.3;
            p.b_m = 1e-3;
            let p = p.derive_powers(g1, g2).unwrap();
            let d = p.derived();
            assert!((linear_to_db(d.gamma1) - g1).abs() <= 1e-12 * g1.abs().max(1.0));
            assert!((d.gamma1 / db_to_linear(g1) - 1.0).abs() < 1e-12);
            assert!((d.gamma2 / db_to_linear(g2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derive_powers_rejects_non_finite() {
        assert!(unit(4).derive_powers(f64::NAN, 0.0).is_err());
        assert!(unit(4).derive_powers(0.0, f64::INFINITY).is_err());
        assert!(unit(4).derive_powers(f64::NEG_INFINITY, 0.0).is_err());
    }

    #[test]
    fn single_source_has_no_interference() {
        let mut p = SystemParams::unit(10, 1, 2, 4, 10.0).unwrap();
        p.sigma_w_sq = 0.37;
        assert_eq!(p.sigma_eta_sq(), 0.37);
    }

    #[test]
    fn validation() {
        assert!(SystemParams::unit(0, 4, 2, 1, 1.0).is_err());
        assert!(SystemParams::unit(4, 0, 2, 1, 1.0).is_err());
        assert!(SystemParams::unit(4, 4, 3, 1, 1.0).is_err());
        assert!(SystemParams::unit(4, 4, 1, 1, 1.0).is_err());
        assert!(SystemParams::unit(4, 4, 8, 0, 1.0).is_err());
        let mut p = unit(4);
        p.mu_m = 0.0;
        assert!(p.validate().is_err());
    }

    fn geometry() -> Geometry {
        Geometry {
            radii: vec![0.0, 1.0, 3.7, 9.9],
            angles: vec![0.3, 0.0, 2.0, 5.5],
            dest_angle: 0.0,
            dest_distance: Some(1e6),
        }
    }

    #[test]
    fn phase_offset_vanishes_at_boresight() {
        let mut g = geometry();
        for dest in [0.0, 1.1, -2.9] {
            g.dest_angle = dest;
            for i in 0..g.len() {
                assert_eq!(far_field_phase_offset(&g, i, dest), 0.0);
            }
        }
    }

    #[test]
    fn phase_offset_center_node_and_endpoints() {
        let g = geometry();
        for phi in [0.1, 1.0, 3.0] {
            assert_eq!(far_field_phase_offset(&g, 0, phi), 0.0);
        }
        let v = far_field_phase_offset(&g, 1, PI);
        assert!((v - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn phase_offset_ignores_range() {
        let mut g = geometry();
        let a = far_field_phase_offset(&g, 2, 0.7);
        g.dest_distance = None;
        assert_eq!(a, far_field_phase_offset(&g, 2, 0.7));
    }
}
