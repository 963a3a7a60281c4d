//! QPSK mapping, power normalization, and the transmit/receive signal
//! models.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::ChannelMatrix;
use crate::error::{dimension, domain, Result};
use crate::precoder::{ANProjector, PrecoderSet};
use crate::{CVector, Complex64};

/// Transmit power budget, CM/AN split and noise variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub total_power: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma_d2: f64,
    pub sigma_e2: f64,
    pub sigma_z2: f64,
}

impl PowerProfile {
    pub fn new(
        total_power: f64,
        beta1: f64,
        sigma_d2: f64,
        sigma_e2: f64,
        sigma_z2: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta1) {
            return Err(domain(format!("beta1 must lie in [0, 1], got {beta1}")));
        }
        let profile = Self {
            total_power,
            beta1,
            beta2: (1.0 - beta1 * beta1).max(0.0).sqrt(),
            sigma_d2,
            sigma_e2,
            sigma_z2,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Unit transmit power, `sigma_d^2 = sigma_e^2 = 10^(-snr/10)`,
    /// `beta1^2 = beta1_sq` and unit AN variance.
    pub fn from_snr_db(snr_db: f64, beta1_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta1_sq) {
            return Err(domain(format!(
                "beta1^2 must lie in [0, 1], got {beta1_sq}"
            )));
        }
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        Self::new(1.0, beta1_sq.sqrt(), sigma2, sigma2, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_power.is_finite() && self.total_power > 0.0) {
            return Err(domain(format!(
                "total power must be positive, got {}",
                self.total_power
            )));
        }
        if ((self.beta1.powi(2) + self.beta2.powi(2)) - 1.0).abs() > 1e-12 {
            return Err(domain("beta1^2 + beta2^2 must equal 1"));
        }
        for (name, v) in [
            ("sigma_d^2", self.sigma_d2),
            ("sigma_e^2", self.sigma_e2),
            ("sigma_z^2", self.sigma_z2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `P_s / sigma_d^2` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.total_power / self.sigma_d2).log10()
    }
}

/// Power normalization factors of the confidential messages and the AN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormFactors {
    pub alpha1: f64,
    pub alpha2: f64,
}

/// `alpha1 = 1/sqrt(K)` for unit-energy symbols and
/// `alpha2 = 1/sqrt(sigma_z^2 L)` for an orthonormal `N x L` projector.
pub fn norm_factors(profile: &PowerProfile, n_groups: usize, an_dim: usize) -> Result<NormFactors> {
    if n_groups == 0 || an_dim == 0 {
        return Err(domain("group count and AN dimension must be >= 1"));
    }
    Ok(NormFactors {
        alpha1: 1.0 / (n_groups as f64).sqrt(),
        alpha2: 1.0 / (profile.sigma_z2 * an_dim as f64).sqrt(),
    })
}

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray-coded unit-energy QPSK symbol of the bit pair `(b0, b1)`:
/// `00 -> (+1+j)`, `01 -> (-1+j)`, `11 -> (-1-j)`, `10 -> (+1-j)`, over `sqrt(2)`.
#[inline]
pub fn qpsk_symbol(b0: bool, b1: bool) -> Complex64 {
    let re = if b1 { -QPSK_AMP } else { QPSK_AMP };
    let im = if b0 { -QPSK_AMP } else { QPSK_AMP };
    Complex64::new(re, im)
}

/// Quadrant slicer; zero components go to the positive half-plane.
#[inline]
pub fn qpsk_slice(z: Complex64) -> (bool, bool) {
    (z.im < 0.0, z.re < 0.0)
}

pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(domain(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|p| qpsk_symbol(p[0], p[1]))
        .collect())
}

/// Coherent detection: de-rotates by the phase of `channel_gain` and slices.
pub fn qpsk_demodulate(observations: &[Complex64], channel_gain: Complex64) -> Result<Vec<bool>> {
    if channel_gain.norm() == 0.0 || !channel_gain.is_finite() {
        return Err(domain("zero channel gain: symbols cannot be detected"));
    }
    let derotate = channel_gain.conj() / channel_gain.norm();
    Ok(observations
        .iter()
        .flat_map(|&y| {
            let (b0, b1) = qpsk_slice(y * derotate);
            [b0, b1]
        })
        .collect())
}

/// Random QPSK symbol and its bits.
#[inline]
pub fn random_qpsk<R: Rng + ?Sized>(rng: &mut R) -> (Complex64, (bool, bool)) {
    let bits: u8 = rng.random();
    let b0 = bits & 1 != 0;
    let b1 = bits & 2 != 0;
    (qpsk_symbol(b0, b1), (b0, b1))
}

/// Circularly-symmetric complex Gaussian sample of the given variance.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng, variance))
}

/// `s = alpha1 beta1 sqrt(P_s) sum_k v_k x_k + alpha2 beta2 sqrt(P_s) T_AN z`.
pub fn transmit_signal(
    precoders: &PrecoderSet,
    symbols: &[Complex64],
    an: &ANProjector,
    an_sample: &CVector,
    profile: &PowerProfile,
    factors: &NormFactors,
) -> Result<CVector> {
    if symbols.len() != precoders.n_groups() {
        return Err(dimension(format!(
            "{} symbols for {} groups",
            symbols.len(),
            precoders.n_groups()
        )));
    }
    if an_sample.len() != an.dim() {
        return Err(dimension(format!(
            "AN sample has length {}, projector width {}",
            an_sample.len(),
            an.dim()
        )));
    }
    let n = an.matrix.nrows();
    let root = profile.total_power.sqrt();
    let cm_gain = Complex64::new(factors.alpha1 * profile.beta1 * root, 0.0);
    let an_gain = Complex64::new(factors.alpha2 * profile.beta2 * root, 0.0);
    let mut s = &an.matrix * an_sample * an_gain;
    for (k, &x) in symbols.iter().enumerate() {
        let beam = precoders.beam(k);
        if beam.len() != n {
            return Err(dimension(format!(
                "beam {k} has length {}, expected {n}",
                beam.len()
            )));
        }
        s += beam * (cm_gain * x);
    }
    Ok(s)
}

/// `y = H^H s + n`.
pub fn receive(h: &ChannelMatrix, s: &CVector, noise: &CVector) -> Result<CVector> {
    if s.len() != h.n_antennas() || noise.len() != h.n_users() {
        return Err(dimension(format!(
            "channel {:?}, signal {}, noise {}",
            h.as_matrix().shape(),
            s.len(),
            noise.len()
        )));
    }
    Ok(h.as_matrix().adjoint() * s + noise)
}
