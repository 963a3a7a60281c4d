//! Confidential-message beamformers and artificial-noise projectors.
//!
//! Three transmit designs are provided:
//!
//! * **Max-GRP + NSP**: each group's beam maximizes the group's total
//!   receive power inside the null space of every other desired group, and
//!   the AN is confined to the null space of all desired users.
//! * **Max-SLNR + Max-ANLNR** ("leakage"): each beam maximizes its
//!   signal-to-leakage-and-noise ratio, and the AN subspace maximizes the
//!   ratio of AN power at the eavesdroppers to AN leaked to desired users
//!   plus noise. Both reduce to Hermitian-definite generalized eigenproblems.
//! * **Block diagonalization (BD)**: the classic zero-forcing baseline, one
//!   projected eigenmode per user of the group carrying the group symbol, with
//!   null-space AN. It is unaware of the eavesdroppers.
//!
//! All outputs are deterministic; eigenvector phases are canonicalized so
//! repeated calls are bit-identical.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::{ChannelMatrix, Channels};
use crate::error::{config, domain, Error, Result};
use crate::linalg::{self, canonicalize_phase, complement_basis, gram_outer, orthonormalize};
use crate::signal::{NormFactors, PowerProfile};
use crate::{CMatrix, CVector, Complex64};

/// Per-group transmit beams. Vector schemes hold one column per group; the
/// BD baseline holds one column per projected mode, scaled so that each
/// group matrix has unit Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    groups: Vec<CMatrix>,
}

impl PrecoderSet {
    pub fn from_vectors(vectors: Vec<CVector>) -> Self {
        Self {
            groups: vectors
                .into_iter()
                .map(|v| CMatrix::from_columns(&[v]))
                .collect(),
        }
    }

    pub fn from_matrices(groups: Vec<CMatrix>) -> Self {
        Self { groups }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_matrix(&self, k: usize) -> &CMatrix {
        &self.groups[k]
    }

    /// Beam actually radiated for the group symbol: the columns summed, since
    /// every column carries the same symbol.
    pub fn beam(&self, k: usize) -> CVector {
        self.groups[k].column_sum()
    }

    pub fn beams(&self) -> Vec<CVector> {
        (0..self.groups.len()).map(|k| self.beam(k)).collect()
    }
}

/// `N x L` AN projection matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ANProjector {
    pub matrix: CMatrix,
}

impl ANProjector {
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// `T T^H`, the projector onto the AN subspace.
    pub fn projector(&self) -> CMatrix {
        gram_outer(&self.matrix)
    }
}

/// Diagonal loading terms of the leakage designs:
/// `desired_load = sigma_d^2 / (alpha1^2 beta1^2 P_s)` and
/// `eve_load = sigma_e^2 / (alpha2^2 beta2^2 P_s L)`.
///
/// `+inf` is accepted and denotes the noise-dominated limit (e.g. no AN power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLoading {
    pub desired_load: f64,
    pub eve_load: f64,
}

impl NoiseLoading {
    pub fn new(desired_load: f64, eve_load: f64) -> Result<Self> {
        for (name, value) in [("desired", desired_load), ("eavesdropper", eve_load)] {
            if value.is_nan() || value <= 0.0 {
                return Err(domain(format!(
                    "{name} noise loading must be positive, got {value}"
                )));
            }
        }
        Ok(Self {
            desired_load,
            eve_load,
        })
    }

    pub fn from_profile(
        profile: &PowerProfile,
        factors: &NormFactors,
        an_dim: usize,
    ) -> Result<Self> {
        let cm = factors.alpha1.powi(2) * profile.beta1.powi(2) * profile.total_power;
        let an =
            factors.alpha2.powi(2) * profile.beta2.powi(2) * profile.total_power * an_dim as f64;
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
        Self::new(ratio(profile.sigma_d2, cm), ratio(profile.sigma_e2, an))
    }
}

/// Orthonormal null-space basis together with rank information.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub basis: CMatrix,
    pub rank: usize,
    /// True when the input had fewer independent columns than columns, in
    /// which case the basis is larger than `N - columns`.
    pub rank_deficient: bool,
}

/// `F` with `F^H F = I` and `H^H F = 0`: the right singular vectors of `H^H`
/// belonging to zero singular values.
pub fn null_space_basis(h: &ChannelMatrix) -> NullSpace {
    let (basis, rank) = complement_basis(h.as_matrix());
    NullSpace {
        basis,
        rank,
        rank_deficient: rank < h.n_users(),
    }
}

fn principal_vector(eig: &linalg::Eigen) -> CVector {
    let mut v = eig.vector(0);
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    canonicalize_phase(&mut v);
    v
}

fn check_group(channels: &Channels, k: usize) -> Result<()> {
    if k >= channels.n_groups() {
        return Err(domain(format!(
            "group index {k} out of range (K = {})",
            channels.n_groups()
        )));
    }
    Ok(())
}

fn projected_basis(channels: &Channels, k: usize) -> Result<CMatrix> {
    check_group(channels, k)?;
    if channels.n_antennas() <= channels.total_desired() {
        return Err(config(format!(
            "empty null space: N = {} but {} desired users",
            channels.n_antennas(),
            channels.total_desired()
        )));
    }
    let ns = null_space_basis(&channels.others(k));
    if ns.basis.ncols() == 0 {
        return Err(config(format!("group {k} has no null space left")));
    }
    Ok(ns.basis)
}

/// Max-GRP beam of group `k`: `v_k = F_k u_k` with `u_k` the principal
/// eigenvector of `F_k^H H_k H_k^H F_k`.
pub fn max_grp_precoder(k: usize, channels: &Channels) -> Result<CVector> {
    let f = projected_basis(channels, k)?;
    let hk = channels.desired[k].as_matrix();
    let reduced = f.adjoint() * gram_outer(hk) * &f;
    let u = linalg::hermitian_eigen(&reduced).vector(0);
    let mut v = &f * u;
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    canonicalize_phase(&mut v);
    Ok(v)
}

/// `T_AN` for null-space projection: an orthonormal basis of the range of
/// `I - H_d (H_d^H H_d)^{-1} H_d^H`.
pub fn nsp_an_projector(hd: &ChannelMatrix) -> Result<ANProjector> {
    let ns = null_space_basis(hd);
    if ns.rank_deficient {
        return Err(config(
            "stacked desired channel is rank deficient (coincident desired directions)",
        ));
    }
    if ns.basis.ncols() == 0 {
        return Err(config("no null space left for artificial noise"));
    }
    Ok(ANProjector { matrix: ns.basis })
}

/// Leakage covariance of group `k`: `sum_{i != k} H_i H_i^H + H_e H_e^H`.
fn leakage_matrix(channels: &Channels, k: usize) -> CMatrix {
    let n = channels.n_antennas();
    let mut m = gram_outer(channels.eavesdropper.as_matrix());
    for (i, h) in channels.desired.iter().enumerate() {
        if i != k {
            m += gram_outer(h.as_matrix());
        }
    }
    debug_assert_eq!(m.nrows(), n);
    m
}

/// `a + load * I`, rescaled to `a / load + I` when the load is infinite or
/// large so the pencil stays well conditioned. Eigenvectors are unaffected.
fn loaded(a: &CMatrix, load: f64) -> CMatrix {
    let n = a.nrows();
    if load.is_infinite() {
        CMatrix::identity(n, n)
    } else if load > 1.0 {
        a / Complex64::new(load, 0.0) + CMatrix::identity(n, n)
    } else {
        a + CMatrix::identity(n, n) * Complex64::new(load, 0.0)
    }
}

/// Max-SLNR beam of group `k`: principal generalized eigenvector of
/// `(H_k H_k^H, leakage + desired_load * I)`.
pub fn slnr_precoder(k: usize, channels: &Channels, loading: &NoiseLoading) -> Result<CVector> {
    check_group(channels, k)?;
    NoiseLoading::new(loading.desired_load, loading.eve_load)?;
    let numer = gram_outer(channels.desired[k].as_matrix());
    let denom = loaded(&leakage_matrix(channels, k), loading.desired_load);
    let eig = linalg::generalized_eigen(&numer, &denom)?;
    Ok(principal_vector(&eig))
}

/// SLNR of beam `v` for group `k`, with the common `alpha1^2 beta1^2 P_s`
/// factor folded into the loading term.
pub fn slnr_value(v: &CVector, channels: &Channels, loading: &NoiseLoading, k: usize) -> f64 {
    if loading.desired_load.is_infinite() {
        return 0.0;
    }
    let signal = linalg::quad_form(&gram_outer(channels.desired[k].as_matrix()), v);
    let leak = linalg::quad_form(&leakage_matrix(channels, k), v);
    signal / (leak + loading.desired_load * v.norm_squared())
}

/// Relative threshold below which a generalized eigenvalue of the ANLNR
/// pencil is treated as zero.
const ANLNR_ZERO_TOL: f64 = 1e-10;

/// Max-ANLNR projector: the `an_dim` dominant generalized eigenvectors of
/// `(H_e H_e^H, H_d H_d^H + eve_load * I)`, orthonormalized.
///
/// `H_e H_e^H` has rank at most `M`, so when `an_dim` exceeds the number of
/// non-zero eigenvalues the remaining columns come from the zero-eigenvalue
/// eigenspace (the null space of `H_e^H`); within it we take the directions
/// with the least leakage towards the desired groups, i.e. the smallest
/// eigenvectors of the denominator restricted to that subspace.
pub fn anlnr_projector(
    channels: &Channels,
    loading: &NoiseLoading,
    an_dim: usize,
) -> Result<ANProjector> {
    let n = channels.n_antennas();
    if an_dim == 0 || an_dim > n {
        return Err(config(format!(
            "AN dimension must lie in 1..={n}, got {an_dim}"
        )));
    }
    NoiseLoading::new(loading.desired_load, loading.eve_load)?;
    let he = channels.eavesdropper.as_matrix();
    let numer = gram_outer(he);
    let denom = loaded(
        &gram_outer(channels.stacked_desired().as_matrix()),
        loading.eve_load,
    );
    let eig = linalg::generalized_eigen(&numer, &denom)?;
    let top = eig.values[0].max(0.0);
    let signal_dim = eig
        .values
        .iter()
        .take(an_dim)
        .filter(|&&l| top > 0.0 && l > ANLNR_ZERO_TOL * top)
        .count();

    let mut columns: Vec<CVector> = (0..signal_dim).map(|i| eig.vector(i)).collect();
    let fill = an_dim - signal_dim;
    if fill > 0 {
        let (z, _) = complement_basis(he);
        if z.ncols() < fill {
            return Err(Error::Numerical(format!(
                "eavesdropper null space has dimension {} < {fill}",
                z.ncols()
            )));
        }
        let restricted = linalg::hermitian_eigen(&(z.adjoint() * &denom * &z));
        let m = restricted.values.len();
        for i in 0..fill {
            columns.push(&z * restricted.vector(m - 1 - i));
        }
    }
    let t = orthonormalize(&CMatrix::from_columns(&columns));
    Ok(ANProjector { matrix: t })
}

/// `tr(T^H H_e H_e^H T) / tr(T^H (H_d H_d^H + eve_load I) T)`.
pub fn anlnr_value(t: &CMatrix, channels: &Channels, loading: &NoiseLoading) -> f64 {
    if loading.eve_load.is_infinite() {
        return 0.0;
    }
    let signal = linalg::trace_form(&gram_outer(channels.eavesdropper.as_matrix()), t);
    let leak = linalg::trace_form(&gram_outer(channels.stacked_desired().as_matrix()), t);
    let power = t.norm_squared();
    signal / (leak + loading.eve_load * power)
}

const BD_PHASE_GRID: usize = 720;
const BD_PHASE_SWEEPS: usize = 3;

/// BD baseline for group `k`: `V_k = F_k U_k / sqrt(T_k)`, with `U_k` the
/// `T_k` principal eigenvectors of `F_k^H H_k H_k^H F_k`.
///
/// Every column carries the group symbol, so the relative phase of the modes
/// decides how the group power is split among users. Mode phases are chosen
/// by coordinate ascent on a 0.5 degree grid to maximize the weakest user's
/// receive power (mode 0 is the phase reference).
pub fn bd_precoder(k: usize, channels: &Channels) -> Result<CMatrix> {
    let f = projected_basis(channels, k)?;
    let hk = channels.desired[k].as_matrix();
    let t_k = hk.ncols();
    let reduced = f.adjoint() * gram_outer(hk) * &f;
    let eig = linalg::hermitian_eigen(&reduced);
    let modes = t_k.min(f.ncols());
    let mut columns: Vec<CVector> = (0..modes)
        .map(|j| {
            let mut c = &f * eig.vector(j);
            let norm = c.norm();
            c /= Complex64::new(norm, 0.0);
            canonicalize_phase(&mut c);
            c
        })
        .collect();

    // responses[i][j] = h_{k,i}^H c_j
    let responses: Vec<Vec<Complex64>> = (0..t_k)
        .map(|i| {
            let h = hk.column(i);
            columns.iter().map(|c| h.dotc(c)).collect()
        })
        .collect();
    let mut phases = vec![0.0f64; modes];
    let weakest = |phases: &[f64]| -> f64 {
        responses
            .iter()
            .map(|row| {
                row.iter()
                    .zip(phases)
                    .map(|(a, &p)| a * Complex64::from_polar(1.0, p))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .fold(f64::INFINITY, f64::min)
    };
    for _ in 0..BD_PHASE_SWEEPS {
        for j in 1..modes {
            let mut best = (weakest(&phases), phases[j]);
            for m in 0..BD_PHASE_GRID {
                let mut trial = phases.clone();
                trial[j] = 2.0 * PI * m as f64 / BD_PHASE_GRID as f64;
                let score = weakest(&trial);
                if score > best.0 {
                    best = (score, trial[j]);
                }
            }
            phases[j] = best.1;
        }
    }
    let scale = 1.0 / (modes as f64).sqrt();
    for (c, &p) in columns.iter_mut().zip(&phases) {
        *c *= Complex64::from_polar(scale, p);
    }
    Ok(CMatrix::from_columns(&columns))
}

/// Transmit scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Max-GRP beams with null-space AN.
    MaxGrpNsp,
    /// Max-SLNR beams with Max-ANLNR AN.
    Leakage,
    /// Block-diagonalization baseline with null-space AN.
    Bd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::MaxGrpNsp, Scheme::Leakage, Scheme::Bd];

    pub fn id(&self) -> &'static str {
        match self {
            Scheme::MaxGrpNsp => "max-grp-nsp",
            Scheme::Leakage => "leakage",
            Scheme::Bd => "bd",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| domain(format!("unknown scheme '{s}'")))
    }
}

/// Beams and AN projector of one scheme for one channel realization.
#[derive(Debug, Clone)]
pub struct Design {
    pub scheme: Scheme,
    pub precoders: PrecoderSet,
    pub an: ANProjector,
}

impl Design {
    pub fn build(scheme: Scheme, channels: &Channels, loading: &NoiseLoading) -> Result<Self> {
        let k = channels.n_groups();
        let (precoders, an) = match scheme {
            Scheme::MaxGrpNsp => {
                let beams = (0..k)
                    .map(|g| max_grp_precoder(g, channels))
                    .collect::<Result<Vec<_>>>()?;
                (
                    PrecoderSet::from_vectors(beams),
                    nsp_an_projector(&channels.stacked_desired())?,
                )
            }
            Scheme::Leakage => {
                let beams = (0..k)
                    .map(|g| slnr_precoder(g, channels, loading))
                    .collect::<Result<Vec<_>>>()?;
                (
                    PrecoderSet::from_vectors(beams),
                    anlnr_projector(channels, loading, channels.an_dim())?,
                )
            }
            Scheme::Bd => {
                let mats = (0..k)
                    .map(|g| bd_precoder(g, channels))
                    .collect::<Result<Vec<_>>>()?;
                (
                    PrecoderSet::from_matrices(mats),
                    nsp_an_projector(&channels.stacked_desired())?,
                )
            }
        };
        Ok(Self {
            scheme,
            precoders,
            an,
        })
    }
}
