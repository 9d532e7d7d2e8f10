//! The two-slot signal chain.
//!
//! Slot `n`: every source transmits and each collaborating node hears the
//! superposition `x_i = Σ_j a_ji s_j + w_i`. Slot `n+m`: node `i` scales its
//! received packet by `μ_m â*_mi` and the conjugate of its propagation phase
//! toward the destination, so contributions from source `m` add coherently.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Geometry, SystemParams};
use crate::stochastic::{complex_normal, ChannelRealization};

/// PSK symbols of all sources for one packet, row-major `K × L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSymbols {
    pub indices: Vec<usize>,
    pub values: Vec<Complex64>,
}

/// Constellation point `σ_s·e^{j2πk/M}`.
pub fn psk_point(index: usize, order: usize, sigma_s: f64) -> Complex64 {
    Complex64::from_polar(sigma_s, 2.0 * PI * index as f64 / order as f64)
}

pub fn sample_symbols<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> SourceSymbols {
    let count = params.sources * params.packet_len;
    let sigma_s = params.sigma_s_sq.sqrt();
    let indices: Vec<usize> = (0..count).map(|_| rng.gen_range(0..params.psk_order)).collect();
    let values = indices
        .iter()
        .map(|&k| psk_point(k, params.psk_order, sigma_s))
        .collect();
    SourceSymbols { indices, values }
}

/// Everything transmitted and received during the information-sharing slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSignals {
    pub source_symbols: SourceSymbols,
    /// `x_i(n)`, row-major `N × L`.
    pub collab_rx: Vec<Complex64>,
    /// `w_i(n)`, row-major `N × L`.
    pub collab_noise: Vec<Complex64>,
    /// Destination noise `v` for the beamforming slot.
    pub dest_noise: Vec<Complex64>,
}

impl SlotSignals {
    /// Symbols of source `j`.
    pub fn symbols_of(&self, j: usize, packet_len: usize) -> &[Complex64] {
        &self.source_symbols.values[j * packet_len..(j + 1) * packet_len]
    }

    pub fn indices_of(&self, j: usize, packet_len: usize) -> &[usize] {
        &self.source_symbols.indices[j * packet_len..(j + 1) * packet_len]
    }
}

/// Collision reception at every collaborating node. Draws `w_i ~ CN(0, σ_w²I)`
/// then `v ~ CN(0, σ_v²I)` from `rng`.
pub fn share_slot<R: Rng + ?Sized>(
    params: &SystemParams,
    channels: &ChannelRealization,
    symbols: SourceSymbols,
    rng: &mut R,
) -> Result<SlotSignals> {
    channels.check(params)?;
    let (n, k, l) = (params.nodes, params.sources, params.packet_len);
    if symbols.values.len() != k * l || symbols.indices.len() != k * l {
        return Err(Error::Dimension(format!(
            "expected {k}×{l} source symbols, got {}",
            symbols.values.len()
        )));
    }
    let collab_noise: Vec<Complex64> = (0..n * l)
        .map(|_| complex_normal(rng, params.sigma_w_sq))
        .collect();
    let dest_noise: Vec<Complex64> = (0..l)
        .map(|_| complex_normal(rng, params.sigma_v_sq))
        .collect();
    let mut collab_rx = collab_noise.clone();
    for j in 0..k {
        let gains = channels.row(j);
        let s = &symbols.values[j * l..(j + 1) * l];
        for (i, &a) in gains.iter().enumerate() {
            let row = &mut collab_rx[i * l..(i + 1) * l];
            for (x, &sym) in row.iter_mut().zip(s) {
                *x += a * sym;
            }
        }
    }
    Ok(SlotSignals {
        source_symbols: symbols,
        collab_rx,
        collab_noise,
        dest_noise,
    })
}

/// Per-node beamforming weight `μ_m b_m â*_mi e^{jτ_i}`, with `â = a + δa`.
pub fn node_weights(params: &SystemParams, channels: &ChannelRealization) -> Vec<Complex64> {
    let scale = params.mu_m * params.b_m;
    channels
        .target_gains()
        .iter()
        .zip(&channels.est_errors)
        .zip(&channels.phase_errors)
        .map(|((a, d), &tau)| (a + d).conj() * Complex64::from_polar(scale, tau))
        .collect()
}

/// Each node's contribution at the receiver before the propagation phase,
/// `b_m·x̃_i` as a row-major `N × L` matrix.
pub fn node_contributions(weights: &[Complex64], slot: &SlotSignals, packet_len: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(slot.collab_rx.len());
    for (i, &w) in weights.iter().enumerate() {
        out.extend(slot.collab_rx[i * packet_len..(i + 1) * packet_len].iter().map(|&x| w * x));
    }
    out
}

/// Noise-free array output toward azimuth `phi`: `Σ_i b_m x̃_i e^{jΔθ_i(φ)}`.
pub fn array_response(
    geometry: &Geometry,
    contributions: &[Complex64],
    packet_len: usize,
    phi: f64,
) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); packet_len];
    array_response_into(geometry, contributions, packet_len, phi, &mut y);
    y
}

pub(crate) fn array_response_into(
    geometry: &Geometry,
    contributions: &[Complex64],
    packet_len: usize,
    phi: f64,
    y: &mut [Complex64],
) {
    Steering::new(geometry).response_into(contributions, packet_len, phi, y);
}

/// Per-node constants of the far-field phase, for evaluating one geometry at
/// many azimuths.
pub(crate) struct Steering {
    wavenumber_r: Vec<f64>,
    cos_psi: Vec<f64>,
    sin_psi: Vec<f64>,
    toward_dest: Vec<f64>,
    dest_angle: f64,
}

impl Steering {
    pub(crate) fn new(geometry: &Geometry) -> Self {
        let (sin_psi, cos_psi): (Vec<f64>, Vec<f64>) = geometry.angles.iter().map(|a| a.sin_cos()).unzip();
        Steering {
            wavenumber_r: geometry.radii.iter().map(|r| 2.0 * PI * r).collect(),
            cos_psi,
            sin_psi,
            toward_dest: geometry
                .angles
                .iter()
                .map(|psi| (geometry.dest_angle - psi).cos())
                .collect(),
            dest_angle: geometry.dest_angle,
        }
    }

    pub(crate) fn response_into(&self, contributions: &[Complex64], packet_len: usize, phi: f64, y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let rows = contributions.chunks_exact(packet_len);
        if phi == self.dest_angle {
            for row in rows {
                for (acc, &c) in y.iter_mut().zip(row) {
                    *acc += c;
                }
            }
            return;
        }
        let (sin_phi, cos_phi) = phi.sin_cos();
        for (i, row) in rows.enumerate() {
            let toward_phi = cos_phi * self.cos_psi[i] + sin_phi * self.sin_psi[i];
            let (s, c) = (self.wavenumber_r[i] * (self.toward_dest[i] - toward_phi)).sin_cos();
            let phasor = Complex64::new(c, s);
            for (acc, &x) in y.iter_mut().zip(row) {
                *acc += phasor * x;
            }
        }
    }
}

/// Received packet at azimuth `phi` during the beamforming slot, including
/// destination noise.
pub fn beamform_and_receive(
    params: &SystemParams,
    channels: &ChannelRealization,
    slot: &SlotSignals,
    phi: f64,
) -> Result<Vec<Complex64>> {
    channels.check(params)?;
    let l = params.packet_len;
    if slot.collab_rx.len() != params.nodes * l || slot.dest_noise.len() != l {
        return Err(Error::Dimension("slot signals do not match params".into()));
    }
    let weights = node_weights(params, channels);
    let contributions = node_contributions(&weights, slot, l);
    let mut y = array_response(&channels.geometry, &contributions, l, phi);
    for (v, &noise) in y.iter_mut().zip(&slot.dest_noise) {
        *v += noise;
    }
    Ok(y)
}

/// Phase of the effective target gain `Σ_i |a_mi|² e^{jτ_i}`, the reference a
/// pilot-aided coherent receiver would track under phase errors.
pub fn genie_reference_phase(channels: &ChannelRealization) -> f64 {
    let g: Complex64 = channels
        .target_gains()
        .iter()
        .zip(&channels.phase_errors)
        .map(|(a, &tau)| Complex64::from_polar(a.norm_sqr(), tau))
        .sum();
    g.arg()
}
