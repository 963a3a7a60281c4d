//! Uniform linear array geometry, steering vectors and group channel
//! matrices for a line-of-propagation channel.

use std::f64::consts::PI;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::{CMatrix, CVector, Complex64};

/// Perturbed angles are clipped into `[ANGLE_MARGIN_DEG, 180 - ANGLE_MARGIN_DEG]`.
pub const ANGLE_MARGIN_DEG: f64 = 1e-6;

/// ULA geometry. Only the ratio `d / lambda` enters the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    pub spacing_wavelengths: f64,
}

impl ArrayConfig {
    pub fn new(n_antennas: usize, spacing_wavelengths: f64) -> Result<Self> {
        let cfg = Self {
            n_antennas,
            spacing_wavelengths,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas < 2 {
            return Err(domain(format!(
                "array needs at least 2 antennas, got {}",
                self.n_antennas
            )));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(domain(format!(
                "antenna spacing must be positive, got {}",
                self.spacing_wavelengths
            )));
        }
        Ok(())
    }

    /// Main-lobe width `2 lambda / (N d)` in radians.
    pub fn beam_width_rad(&self) -> f64 {
        2.0 / (self.n_antennas as f64 * self.spacing_wavelengths)
    }

    pub fn beam_width_deg(&self) -> f64 {
        self.beam_width_rad().to_degrees()
    }
}

/// Directions (degrees) of the `K` desired groups and of the eavesdropper
/// group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub desired_angles: Vec<Vec<f64>>,
    pub eavesdropper_angles: Vec<f64>,
}

fn check_open_angle(theta: f64, what: &str) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta < 180.0 {
        Ok(())
    } else {
        Err(domain(format!("{what} angle {theta} deg outside (0, 180)")))
    }
}

impl GroupLayout {
    pub fn new(desired_angles: Vec<Vec<f64>>, eavesdropper_angles: Vec<f64>) -> Result<Self> {
        let layout = Self {
            desired_angles,
            eavesdropper_angles,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Structural checks that do not depend on the array.
    pub fn validate(&self) -> Result<()> {
        if self.desired_angles.is_empty() {
            return Err(domain("at least one desired group is required"));
        }
        for (k, group) in self.desired_angles.iter().enumerate() {
            if group.is_empty() {
                return Err(domain(format!("desired group {k} has no users")));
            }
            for &theta in group {
                check_open_angle(theta, "desired")?;
            }
        }
        if self.eavesdropper_angles.is_empty() {
            return Err(domain("eavesdropper group must be non-empty"));
        }
        for &theta in &self.eavesdropper_angles {
            check_open_angle(theta, "eavesdropper")?;
        }
        Ok(())
    }

    /// Structural checks plus `N > sum T_k`, which the null-space designs need.
    pub fn validate_for(&self, cfg: &ArrayConfig) -> Result<()> {
        self.validate()?;
        cfg.validate()?;
        let total = self.total_desired();
        if cfg.n_antennas <= total {
            return Err(config(format!(
                "N = {} must exceed the total number of desired users {}",
                cfg.n_antennas, total
            )));
        }
        Ok(())
    }

    pub fn n_groups(&self) -> usize {
        self.desired_angles.len()
    }

    pub fn group_size(&self, k: usize) -> usize {
        self.desired_angles[k].len()
    }

    pub fn total_desired(&self) -> usize {
        self.desired_angles.iter().map(Vec::len).sum()
    }

    pub fn n_eavesdroppers(&self) -> usize {
        self.eavesdropper_angles.len()
    }
}

/// Unit-norm array response `h(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub CVector);

impl SteeringVector {
    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }
}

/// `N x T` matrix whose columns are the steering vectors of a user group.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(pub CMatrix);

impl ChannelMatrix {
    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn n_users(&self) -> usize {
        self.0.ncols()
    }

    pub fn n_antennas(&self) -> usize {
        self.0.nrows()
    }

    /// Column `i` as a vector.
    pub fn user(&self, i: usize) -> CVector {
        self.0.column(i).into_owned()
    }

    /// Horizontal concatenation of several channel matrices, in order.
    pub fn hstack<'a>(
        parts: impl IntoIterator<Item = &'a ChannelMatrix>,
        n_antennas: usize,
    ) -> ChannelMatrix {
        let columns: Vec<CVector> = parts
            .into_iter()
            .flat_map(|m| {
                m.0.column_iter()
                    .map(|c| c.into_owned())
                    .collect::<Vec<_>>()
            })
            .collect();
        if columns.is_empty() {
            ChannelMatrix(CMatrix::zeros(n_antennas, 0))
        } else {
            ChannelMatrix(CMatrix::from_columns(&columns))
        }
    }
}

/// Uniform direction-measurement error of at most `max_error_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleErrorModel {
    pub max_error_deg: f64,
    /// Main-lobe width of the array in radians, kept for reporting.
    pub beam_width: f64,
}

impl AngleErrorModel {
    pub fn new(max_error_deg: f64, cfg: &ArrayConfig) -> Result<Self> {
        if !(max_error_deg.is_finite() && max_error_deg >= 0.0) {
            return Err(domain(format!(
                "max angle error must be >= 0, got {max_error_deg}"
            )));
        }
        Ok(Self {
            max_error_deg,
            beam_width: cfg.beam_width_rad(),
        })
    }

    /// `max_error / BW`, both in radians.
    pub fn normalized_max_error(&self) -> f64 {
        self.max_error_deg.to_radians() / self.beam_width
    }
}

/// `h(theta) = N^{-1/2} [exp(j 2 pi psi(1)), ..., exp(j 2 pi psi(N))]^T` with
/// `psi(n) = (n - (N+1)/2) (d/lambda) cos(theta)`.
///
/// Angles are in degrees. The closed interval `[0, 180]` is accepted so that
/// probe receivers can sweep the end-fire directions; user layouts enforce the
/// open interval.
pub fn steering_vector(theta_deg: f64, cfg: &ArrayConfig) -> Result<SteeringVector> {
    cfg.validate()?;
    if !(theta_deg.is_finite() && (0.0..=180.0).contains(&theta_deg)) {
        return Err(domain(format!("angle {theta_deg} deg outside [0, 180]")));
    }
    let n = cfg.n_antennas;
    let center = (n as f64 + 1.0) / 2.0;
    let cos = theta_deg.to_radians().cos();
    let scale = 1.0 / (n as f64).sqrt();
    let v = CVector::from_fn(n, |i, _| {
        let psi = ((i + 1) as f64 - center) * cfg.spacing_wavelengths * cos;
        Complex64::from_polar(scale, 2.0 * PI * psi)
    });
    Ok(SteeringVector(v))
}

/// Stacks the steering vectors of `angles` as columns.
pub fn channel_matrix(angles: &[f64], cfg: &ArrayConfig) -> Result<ChannelMatrix> {
    if angles.is_empty() {
        return Err(domain("channel matrix needs at least one angle"));
    }
    let columns = angles
        .iter()
        .map(|&a| steering_vector(a, cfg).map(SteeringVector::into_vector))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelMatrix(CMatrix::from_columns(&columns)))
}

/// `H_d`: all desired groups side by side, group order then user order.
pub fn stacked_desired_channel(layout: &GroupLayout, cfg: &ArrayConfig) -> Result<ChannelMatrix> {
    layout.validate()?;
    let all: Vec<f64> = layout.desired_angles.iter().flatten().copied().collect();
    channel_matrix(&all, cfg)
}

/// Adds an independent uniform error in `[-max, max]` degrees to each angle,
/// clipping the result into the open sector `(0, 180)`.
pub fn perturb_angles<R: Rng + ?Sized>(
    angles: &[f64],
    model: &AngleErrorModel,
    rng: &mut R,
) -> Vec<f64> {
    if model.max_error_deg == 0.0 {
        return angles.to_vec();
    }
    let dist = Uniform::new_inclusive(-model.max_error_deg, model.max_error_deg)
        .expect("validated non-negative finite bound");
    angles
        .iter()
        .map(|&a| (a + dist.sample(rng)).clamp(ANGLE_MARGIN_DEG, 180.0 - ANGLE_MARGIN_DEG))
        .collect()
}

/// Applies [`perturb_angles`] to every desired group and then to the
/// eavesdropper group, in that order.
pub fn perturb_layout<R: Rng + ?Sized>(
    layout: &GroupLayout,
    model: &AngleErrorModel,
    rng: &mut R,
) -> GroupLayout {
    let desired_angles = layout
        .desired_angles
        .iter()
        .map(|g| perturb_angles(g, model, rng))
        .collect();
    let eavesdropper_angles = perturb_angles(&layout.eavesdropper_angles, model, rng);
    GroupLayout {
        desired_angles,
        eavesdropper_angles,
    }
}

/// Channel matrices of every desired group and of the eavesdropper group.
#[derive(Debug, Clone)]
pub struct Channels {
    pub desired: Vec<ChannelMatrix>,
    pub eavesdropper: ChannelMatrix,
    n_antennas: usize,
}

impl Channels {
    pub fn build(layout: &GroupLayout, cfg: &ArrayConfig) -> Result<Self> {
        layout.validate_for(cfg)?;
        let desired = layout
            .desired_angles
            .iter()
            .map(|g| channel_matrix(g, cfg))
            .collect::<Result<Vec<_>>>()?;
        let eavesdropper = channel_matrix(&layout.eavesdropper_angles, cfg)?;
        Ok(Self {
            desired,
            eavesdropper,
            n_antennas: cfg.n_antennas,
        })
    }

    /// Assembles channels from arbitrary matrices (all with the same row count).
    pub fn from_matrices(desired: Vec<ChannelMatrix>, eavesdropper: ChannelMatrix) -> Result<Self> {
        let n = eavesdropper.n_antennas();
        if desired.is_empty() {
            return Err(domain("at least one desired group is required"));
        }
        if desired
            .iter()
            .any(|h| h.n_antennas() != n || h.n_users() == 0)
        {
            return Err(crate::error::dimension(
                "all channel matrices need N rows and >= 1 column",
            ));
        }
        Ok(Self {
            desired,
            eavesdropper,
            n_antennas: n,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_groups(&self) -> usize {
        self.desired.len()
    }

    pub fn total_desired(&self) -> usize {
        self.desired.iter().map(ChannelMatrix::n_users).sum()
    }

    /// `N - sum T_k`, the AN dimension.
    pub fn an_dim(&self) -> usize {
        self.n_antennas.saturating_sub(self.total_desired())
    }

    /// `H_d`.
    pub fn stacked_desired(&self) -> ChannelMatrix {
        ChannelMatrix::hstack(&self.desired, self.n_antennas)
    }

    /// `H_{d,-k}`: every desired group except `k`.
    pub fn others(&self, k: usize) -> ChannelMatrix {
        ChannelMatrix::hstack(
            self.desired
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, h)| h),
            self.n_antennas,
        )
    }
}
