//! Experiment orchestration behind the `dmcast` CLI: configuration, seeded
//! Monte Carlo sweeps, and CSV output.
//!
//! Randomness is organized in counter-derived substreams: every batch of
//! symbols (and every angle-error realization) gets its own generator seeded
//! from `(master seed, tag, point, index)`. Work items are scheduled on the
//! current rayon pool and merged in a fixed order with integer error counts,
//! so output files do not depend on the number of worker threads.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{perturb_layout, AngleErrorModel, ArrayConfig, Channels, GroupLayout};
use crate::complexity::{self, FlopsQuery, Method, Variable};
use crate::metrics::{
    secrecy_sum_rate, simulate_probe_errors, BerPoint, ErrorCounts, EveModel, ProbeResponse,
    SsrPoint,
};
use crate::precoder::{Design, NoiseLoading, Scheme};
use crate::signal::{norm_factors, NormFactors, PowerProfile};

/// Symbols per Monte Carlo batch; each batch owns one random substream.
pub const BATCH_SYMBOLS: u64 = 10_000;
/// Smallest accepted `trials`.
pub const MIN_TRIALS: u64 = 10_000;
/// Smallest accepted number of angle-error realizations.
pub const MIN_REALIZATIONS: u64 = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Invalid configuration; `path` names the offending field.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Compute(#[from] crate::Error),
}

impl ExperimentError {
    fn config(path: impl Into<String>, message: impl ToString) -> Self {
        ExperimentError::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config { .. })
    }
}

pub type ExperimentResult<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// `P_s`.
    pub total_power: f64,
    /// Fraction of power on the confidential messages.
    pub beta1_sq: f64,
    /// SNR `P_s / sigma^2` of the BER experiments, dB.
    pub snr_db: f64,
    /// SNR grid of the secrecy-rate experiment, dB.
    pub snr_grid_db: Vec<f64>,
    pub sigma_z2: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            total_power: 1.0,
            beta1_sq: 0.9,
            snr_db: 14.0,
            snr_grid_db: (0..8).map(|i| 2.0 * i as f64).collect(),
            sigma_z2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSelection {
    pub max_grp_nsp: bool,
    pub leakage: bool,
    pub bd: bool,
}

impl Default for SchemeSelection {
    fn default() -> Self {
        Self {
            max_grp_nsp: true,
            leakage: true,
            bd: true,
        }
    }
}

impl SchemeSelection {
    pub fn schemes(&self) -> Vec<Scheme> {
        Scheme::ALL
            .into_iter()
            .filter(|s| match s {
                Scheme::MaxGrpNsp => self.max_grp_nsp,
                Scheme::Leakage => self.leakage,
                Scheme::Bd => self.bd,
            })
            .collect()
    }

    pub fn only(scheme: Scheme) -> Self {
        Self {
            max_grp_nsp: scheme == Scheme::MaxGrpNsp,
            leakage: scheme == Scheme::Leakage,
            bd: scheme == Scheme::Bd,
        }
    }
}

/// Probe directions `start, start + step, ..., stop` in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    /// Explicit directions; when non-empty they replace the range.
    pub points_deg: Vec<f64>,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            start_deg: 0.0,
            stop_deg: 180.0,
            step_deg: 0.5,
            points_deg: Vec::new(),
        }
    }
}

impl AngleGrid {
    pub fn points(&self) -> Vec<f64> {
        if !self.points_deg.is_empty() {
            return self.points_deg.clone();
        }
        let count = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect()
    }

    fn validate(&self, path: &str) -> ExperimentResult<()> {
        let in_range = |a: f64| a.is_finite() && (0.0..=180.0).contains(&a);
        if !self.points_deg.is_empty() {
            if let Some(i) = self.points_deg.iter().position(|&a| !in_range(a)) {
                return Err(ExperimentError::config(
                    format!("{path}.points_deg[{i}]"),
                    "angle outside [0, 180]",
                ));
            }
            return Ok(());
        }
        if !(self.step_deg.is_finite() && self.step_deg > 0.0) {
            return Err(ExperimentError::config(
                format!("{path}.step_deg"),
                "step must be positive",
            ));
        }
        if !in_range(self.start_deg) {
            return Err(ExperimentError::config(
                format!("{path}.start_deg"),
                "angle outside [0, 180]",
            ));
        }
        if !in_range(self.stop_deg) || self.stop_deg < self.start_deg {
            return Err(ExperimentError::config(
                format!("{path}.stop_deg"),
                "must lie in [start_deg, 180]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorSweep {
    pub max_error_deg: f64,
    pub realizations: u64,
}

impl Default for ErrorSweep {
    fn default() -> Self {
        Self {
            max_error_deg: 5.0,
            realizations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlopsSweep {
    pub k: Vec<u64>,
    pub t: Vec<u64>,
    pub n: Vec<u64>,
    pub m: Vec<u64>,
    /// Use `N = K T + M` instead of the `n` list.
    pub auto_scale_n: bool,
}

impl Default for FlopsSweep {
    fn default() -> Self {
        Self {
            k: vec![2],
            t: vec![2],
            n: vec![16],
            m: vec![2],
            auto_scale_n: false,
        }
    }
}

/// Full experiment description. Every field has a default matching the
/// reference scenario: a 16-element half-wavelength ULA, groups at
/// {30, 45} and {120, 135} degrees, eavesdroppers at {75, 100} degrees,
/// `beta1^2 = 0.9`, 14 dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    pub layout: GroupLayout,
    pub power: PowerConfig,
    pub schemes: SchemeSelection,
    pub angle_grid: AngleGrid,
    pub angle_error: ErrorSweep,
    pub flops: FlopsSweep,
    pub eve_model: EveModel,
    /// Symbols per probe direction.
    pub trials: u64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            array: ArrayConfig {
                n_antennas: 16,
                spacing_wavelengths: 0.5,
            },
            layout: GroupLayout {
                desired_angles: vec![vec![30.0, 45.0], vec![120.0, 135.0]],
                eavesdropper_angles: vec![75.0, 100.0],
            },
            power: PowerConfig::default(),
            schemes: SchemeSelection::default(),
            angle_grid: AngleGrid::default(),
            angle_error: ErrorSweep::default(),
            flops: FlopsSweep::default(),
            eve_model: EveModel::Colluding,
            trials: 200_000,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; deserialization errors carry the field path.
    pub fn from_json(text: &str) -> ExperimentResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ExperimentError::config(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> ExperimentResult<()> {
        let cfg = |p: &str, m: &dyn ToString| ExperimentError::config(p, m.to_string());
        if self.array.n_antennas < 2 {
            return Err(cfg("array.n_antennas", &"need at least 2 antennas"));
        }
        if !(self.array.spacing_wavelengths.is_finite() && self.array.spacing_wavelengths > 0.0) {
            return Err(cfg("array.spacing_wavelengths", &"must be positive"));
        }
        if self.layout.desired_angles.is_empty() {
            return Err(cfg("layout.desired_angles", &"need at least one group"));
        }
        for (k, group) in self.layout.desired_angles.iter().enumerate() {
            if group.is_empty() {
                return Err(cfg(
                    &format!("layout.desired_angles[{k}]"),
                    &"group has no users",
                ));
            }
            for (i, &a) in group.iter().enumerate() {
                if !(a.is_finite() && a > 0.0 && a < 180.0) {
                    return Err(cfg(
                        &format!("layout.desired_angles[{k}][{i}]"),
                        &"angle outside (0, 180)",
                    ));
                }
            }
        }
        if self.layout.eavesdropper_angles.is_empty() {
            return Err(cfg(
                "layout.eavesdropper_angles",
                &"need at least one eavesdropper",
            ));
        }
        for (i, &a) in self.layout.eavesdropper_angles.iter().enumerate() {
            if !(a.is_finite() && a > 0.0 && a < 180.0) {
                return Err(cfg(
                    &format!("layout.eavesdropper_angles[{i}]"),
                    &"angle outside (0, 180)",
                ));
            }
        }
        if let Err(e) = self.layout.validate_for(&self.array) {
            return Err(cfg("layout.desired_angles", &e));
        }
        let p = &self.power;
        if !(p.total_power.is_finite() && p.total_power > 0.0) {
            return Err(cfg("power.total_power", &"must be positive"));
        }
        if !(p.beta1_sq > 0.0 && p.beta1_sq <= 1.0) {
            return Err(cfg("power.beta1_sq", &"must lie in (0, 1]"));
        }
        if !p.snr_db.is_finite() {
            return Err(cfg("power.snr_db", &"must be finite"));
        }
        if let Some(i) = p.snr_grid_db.iter().position(|s| !s.is_finite()) {
            return Err(cfg(&format!("power.snr_grid_db[{i}]"), &"must be finite"));
        }
        if !(p.sigma_z2.is_finite() && p.sigma_z2 > 0.0) {
            return Err(cfg("power.sigma_z2", &"must be positive"));
        }
        self.angle_grid.validate("angle_grid")?;
        if !(self.angle_error.max_error_deg.is_finite() && self.angle_error.max_error_deg >= 0.0) {
            return Err(cfg("angle_error.max_error_deg", &"must be >= 0"));
        }
        if self.angle_error.realizations < MIN_REALIZATIONS {
            return Err(cfg(
                "angle_error.realizations",
                &format!("need at least {MIN_REALIZATIONS} realizations"),
            ));
        }
        if self.trials < MIN_TRIALS {
            return Err(cfg(
                "trials",
                &format!("need at least {MIN_TRIALS} symbols per point"),
            ));
        }
        Ok(())
    }

    /// Power profile at the given SNR with `sigma_d^2 = sigma_e^2`.
    pub fn profile_at(&self, snr_db: f64) -> crate::Result<PowerProfile> {
        let sigma2 = self.power.total_power * 10f64.powf(-snr_db / 10.0);
        PowerProfile::new(
            self.power.total_power,
            self.power.beta1_sq.sqrt(),
            sigma2,
            sigma2,
            self.power.sigma_z2,
        )
    }

    fn header(&self, command: &str) -> String {
        format!(
            "# dmcast {command}\n# seed: {}\n# config: {}\n",
            self.seed,
            self.to_json()
        )
    }
}

const TAG_BER: u64 = 0x4245_5231;
const TAG_ROBUST: u64 = 0x524f_4231;
const TAG_PERTURB: u64 = 0x5045_5231;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of substream `(tag, point, index)` under `master`.
pub fn substream_seed(master: u64, tag: u64, point: u64, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for word in [tag, point, index] {
        h = splitmix64(h ^ word);
    }
    h
}

/// Everything needed to simulate one design set at one SNR.
struct Link {
    profile: PowerProfile,
    factors: NormFactors,
    loading: NoiseLoading,
}

impl Link {
    fn new(config: &ExperimentConfig, channels: &Channels, snr_db: f64) -> crate::Result<Self> {
        let profile = config.profile_at(snr_db)?;
        let factors = norm_factors(&profile, channels.n_groups(), channels.an_dim())?;
        let loading = NoiseLoading::from_profile(&profile, &factors, channels.an_dim())?;
        Ok(Self {
            profile,
            factors,
            loading,
        })
    }
}

fn build_designs(
    schemes: &[Scheme],
    channels: &Channels,
    link: &Link,
) -> crate::Result<Vec<Design>> {
    schemes
        .iter()
        .map(|&s| Design::build(s, channels, &link.loading))
        .collect()
}

fn probes_at(
    angle: f64,
    config: &ExperimentConfig,
    designs: &[Design],
) -> crate::Result<Vec<ProbeResponse>> {
    designs
        .iter()
        .map(|d| ProbeResponse::at_angle(angle, &config.array, &d.precoders, &d.an))
        .collect()
}

fn batch_sizes(total: u64) -> Vec<u64> {
    let full = total / BATCH_SYMBOLS;
    let rest = total % BATCH_SYMBOLS;
    let mut sizes = vec![BATCH_SYMBOLS; full as usize];
    if rest > 0 {
        sizes.push(rest);
    }
    sizes
}

#[allow(clippy::needless_range_loop)]
fn collect_points(
    schemes: &[Scheme],
    angles: &[f64],
    counts: &[ErrorCounts],
    n_groups: usize,
    zero_gain: &[Vec<Vec<bool>>],
) -> Vec<BerPoint> {
    let mut points = Vec::with_capacity(schemes.len() * n_groups * angles.len());
    for (s, &scheme) in schemes.iter().enumerate() {
        for k in 0..n_groups {
            for (p, &angle) in angles.iter().enumerate() {
                points.push(BerPoint {
                    sweep_value: angle,
                    group: k,
                    scheme,
                    ber: counts[p].ber(s, k),
                    trials: counts[p].symbols,
                    bit_errors: counts[p].errors[s][k],
                    zero_gain: zero_gain[p][s][k],
                });
            }
        }
    }
    points
}

fn zero_gains(probes: &[ProbeResponse]) -> Vec<Vec<bool>> {
    probes
        .iter()
        .map(|p| {
            p.beam_gains
                .iter()
                .map(|g| g.norm() <= crate::metrics::ZERO_GAIN_TOL)
                .collect()
        })
        .collect()
}

/// BER versus probe direction at `power.snr_db` with exact direction
/// knowledge. Points are ordered by scheme, group, angle.
pub fn ber_angle_points(config: &ExperimentConfig) -> ExperimentResult<Vec<BerPoint>> {
    config.validate()?;
    let schemes = config.schemes.schemes();
    let angles = config.angle_grid.points();
    let channels = Channels::build(&config.layout, &config.array)?;
    let link = Link::new(config, &channels, config.power.snr_db)?;
    let designs = build_designs(&schemes, &channels, &link)?;
    let n_groups = channels.n_groups();
    if schemes.is_empty() {
        return Ok(Vec::new());
    }

    let probes: Vec<Vec<ProbeResponse>> = angles
        .iter()
        .map(|&a| probes_at(a, config, &designs))
        .collect::<crate::Result<_>>()?;
    let batches = batch_sizes(config.trials);
    let work: Vec<(usize, usize)> = (0..angles.len())
        .flat_map(|p| (0..batches.len()).map(move |b| (p, b)))
        .collect();
    let partial: Vec<ErrorCounts> = work
        .par_iter()
        .map(|&(p, b)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(substream_seed(config.seed, TAG_BER, p as u64, b as u64));
            simulate_probe_errors(
                &probes[p],
                &link.profile,
                &link.factors,
                batches[b] as usize,
                &mut rng,
            )
        })
        .collect();

    let mut counts = vec![ErrorCounts::zeros(schemes.len(), n_groups); angles.len()];
    for (&(p, _), c) in work.iter().zip(&partial) {
        counts[p].merge(c);
    }
    let zero: Vec<_> = probes.iter().map(|p| zero_gains(p)).collect();
    Ok(collect_points(&schemes, &angles, &counts, n_groups, &zero))
}

/// Error counts and zero-gain flags of one angle-error realization, per probe.
type RealizationCounts = (Vec<ErrorCounts>, Vec<Vec<Vec<bool>>>);

/// BER versus probe direction when the transmitter designs from angles
/// perturbed by a uniform error of at most `angle_error.max_error_deg`.
///
/// Each realization perturbs every desired and eavesdropper direction,
/// re-derives all designs, and simulates `ceil(trials / realizations)`
/// symbols per probe at the true directions. Reported BER pools the errors
/// of all realizations, which equals the mean per-realization BER.
pub fn robust_ber_points(config: &ExperimentConfig) -> ExperimentResult<Vec<BerPoint>> {
    config.validate()?;
    let schemes = config.schemes.schemes();
    if schemes.is_empty() {
        return Ok(Vec::new());
    }
    let angles = config.angle_grid.points();
    let true_channels = Channels::build(&config.layout, &config.array)?;
    let link = Link::new(config, &true_channels, config.power.snr_db)?;
    let model = AngleErrorModel::new(config.angle_error.max_error_deg, &config.array)?;
    let realizations = config.angle_error.realizations;
    let per_realization = config.trials.div_ceil(realizations);
    let n_groups = true_channels.n_groups();

    let per_real: Vec<crate::Result<RealizationCounts>> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, TAG_PERTURB, r, 0));
            let measured = perturb_layout(&config.layout, &model, &mut rng);
            let channels = Channels::build(&measured, &config.array)?;
            let designs = build_designs(&schemes, &channels, &link)?;
            let mut counts = Vec::with_capacity(angles.len());
            let mut zero = Vec::with_capacity(angles.len());
            for (p, &angle) in angles.iter().enumerate() {
                let probes = probes_at(angle, config, &designs)?;
                let mut rng =
                    ChaCha8Rng::seed_from_u64(substream_seed(config.seed, TAG_ROBUST, p as u64, r));
                counts.push(simulate_probe_errors(
                    &probes,
                    &link.profile,
                    &link.factors,
                    per_realization as usize,
                    &mut rng,
                ));
                zero.push(zero_gains(&probes));
            }
            Ok((counts, zero))
        })
        .collect();

    let mut counts = vec![ErrorCounts::zeros(schemes.len(), n_groups); angles.len()];
    // a stream counts as zero-gain only if it was in every realization
    let mut zero = vec![vec![vec![true; n_groups]; schemes.len()]; angles.len()];
    for item in per_real {
        let (c, z) = item?;
        for p in 0..angles.len() {
            counts[p].merge(&c[p]);
            for s in 0..schemes.len() {
                for k in 0..n_groups {
                    zero[p][s][k] &= z[p][s][k];
                }
            }
        }
    }
    Ok(collect_points(&schemes, &angles, &counts, n_groups, &zero))
}

/// Secrecy sum-rate per group over `power.snr_grid_db`, ordered by scheme,
/// group, SNR.
#[allow(clippy::needless_range_loop)]
pub fn ssr_points(config: &ExperimentConfig) -> ExperimentResult<Vec<SsrPoint>> {
    config.validate()?;
    let schemes = config.schemes.schemes();
    let channels = Channels::build(&config.layout, &config.array)?;
    let mut table = Vec::new();
    for &snr in &config.power.snr_grid_db {
        let link = Link::new(config, &channels, snr)?;
        let designs = build_designs(&schemes, &channels, &link)?;
        let values: Vec<Vec<f64>> = designs
            .iter()
            .map(|d| {
                (0..channels.n_groups())
                    .map(|k| {
                        secrecy_sum_rate(
                            k,
                            &d.precoders,
                            &d.an,
                            &channels,
                            &link.profile,
                            &link.factors,
                            config.eve_model,
                        )
                    })
                    .collect()
            })
            .collect();
        table.push(values);
    }
    let mut points = Vec::new();
    for (s, &scheme) in schemes.iter().enumerate() {
        for k in 0..channels.n_groups() {
            for (i, &snr) in config.power.snr_grid_db.iter().enumerate() {
                points.push(SsrPoint {
                    snr_db: snr,
                    group: k,
                    scheme,
                    ssr: table[i][s][k],
                });
            }
        }
    }
    Ok(points)
}

fn write_ber_csv<W: Write>(
    out: &mut W,
    config: &ExperimentConfig,
    command: &str,
    points: &[BerPoint],
) -> ExperimentResult<()> {
    out.write_all(config.header(command).as_bytes())?;
    writeln!(out, "scheme,group,angle_deg,ber,trials")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.scheme,
            p.group + 1,
            p.sweep_value,
            p.ber,
            p.trials
        )?;
    }
    Ok(())
}

/// Writes the BER-versus-angle CSV. Groups are numbered from 1.
pub fn run_ber_angle<W: Write>(config: &ExperimentConfig, out: &mut W) -> ExperimentResult<()> {
    let points = ber_angle_points(config)?;
    write_ber_csv(out, config, "ber-angle", &points)
}

/// Writes the BER-versus-angle CSV under direction-measurement errors.
pub fn run_robust_ber<W: Write>(config: &ExperimentConfig, out: &mut W) -> ExperimentResult<()> {
    let points = robust_ber_points(config)?;
    write_ber_csv(out, config, "robust-ber", &points)
}

/// Writes the secrecy sum-rate CSV.
pub fn run_ssr_snr<W: Write>(config: &ExperimentConfig, out: &mut W) -> ExperimentResult<()> {
    let points = ssr_points(config)?;
    out.write_all(config.header("ssr-snr").as_bytes())?;
    writeln!(out, "scheme,group,snr_db,ssr")?;
    for p in &points {
        writeln!(out, "{},{},{},{}", p.scheme, p.group + 1, p.snr_db, p.ssr)?;
    }
    Ok(())
}

fn method_of(scheme: Scheme) -> Method {
    match scheme {
        Scheme::MaxGrpNsp => Method::MaxGrpNsp,
        Scheme::Leakage => Method::Leakage,
        Scheme::Bd => Method::Bd,
    }
}

/// One FLOP-count row or a skipped combination.
#[derive(Debug, Clone, PartialEq)]
pub enum FlopsRow {
    Count { query: FlopsQuery, flops: u128 },
    Skipped { query: FlopsQuery, reason: String },
}

/// Log-ratio exponent between the first and last value of a swept variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSummary {
    pub method: Method,
    pub variable: Variable,
    pub from: u64,
    pub to: u64,
    /// `None` when an endpoint violates `N >= K T + M`.
    pub exponent: Option<f64>,
}

fn sweep_n(sweep: &FlopsSweep, k: u64, t: u64, m: u64) -> Vec<u64> {
    if sweep.auto_scale_n {
        vec![k * t + m]
    } else {
        sweep.n.clone()
    }
}

/// FLOP counts over the cartesian product of the sweep lists, plus exponent
/// summaries for every variable swept over two or more values.
pub fn flops_rows(config: &ExperimentConfig) -> (Vec<FlopsRow>, Vec<ExponentSummary>) {
    let sweep = &config.flops;
    let methods: Vec<Method> = config
        .schemes
        .schemes()
        .into_iter()
        .map(method_of)
        .collect();
    let mut rows = Vec::new();
    for &method in &methods {
        for &k in &sweep.k {
            for &t in &sweep.t {
                for &m in &sweep.m {
                    for n in sweep_n(sweep, k, t, m) {
                        let query = FlopsQuery { method, k, t, n, m };
                        rows.push(match complexity::flops(&query) {
                            Ok(flops) => FlopsRow::Count { query, flops },
                            Err(e) => FlopsRow::Skipped {
                                query,
                                reason: e.to_string(),
                            },
                        });
                    }
                }
            }
        }
    }

    let mut summaries = Vec::new();
    let (Some(&k0), Some(&t0), Some(&m0)) = (sweep.k.first(), sweep.t.first(), sweep.m.first())
    else {
        return (rows, summaries);
    };
    let n0 = if sweep.auto_scale_n {
        Some(k0 * t0 + m0)
    } else {
        sweep.n.first().copied()
    };
    let Some(n0) = n0 else {
        return (rows, summaries);
    };
    let mut variables = vec![(Variable::K, &sweep.k), (Variable::T, &sweep.t)];
    if !sweep.auto_scale_n {
        variables.push((Variable::N, &sweep.n));
    }
    for &method in &methods {
        for (variable, values) in &variables {
            let (Some(&from), Some(&to)) = (values.first(), values.last()) else {
                continue;
            };
            if from == to {
                continue;
            }
            let base = FlopsQuery {
                method,
                k: k0,
                t: t0,
                n: n0,
                m: m0,
            };
            let rescale = |q: FlopsQuery| {
                if sweep.auto_scale_n {
                    FlopsQuery {
                        n: q.k * q.t + q.m,
                        ..q
                    }
                } else {
                    q
                }
            };
            let a = rescale(base.with(*variable, from));
            let b = rescale(base.with(*variable, to));
            let exponent = match (complexity::flops(&a), complexity::flops(&b)) {
                (Ok(fa), Ok(fb)) => {
                    complexity::log_slope(fa as f64, fb as f64, from as f64, to as f64).ok()
                }
                _ => None,
            };
            summaries.push(ExponentSummary {
                method,
                variable: *variable,
                from,
                to,
                exponent,
            });
        }
    }
    (rows, summaries)
}

/// Writes the FLOP-count CSV. Skipped combinations and exponent summaries
/// are emitted as `#` comment lines.
pub fn run_flops<W: Write>(config: &ExperimentConfig, out: &mut W) -> ExperimentResult<()> {
    let (rows, summaries) = flops_rows(config);
    out.write_all(config.header("flops").as_bytes())?;
    writeln!(out, "method,K,T,N,M,flops")?;
    for row in &rows {
        match row {
            FlopsRow::Count { query: q, flops } => writeln!(
                out,
                "{},{},{},{},{},{}",
                q.method, q.k, q.t, q.n, q.m, flops
            )?,
            FlopsRow::Skipped { query: q, reason } => writeln!(
                out,
                "# warning: skipped {} K={} T={} N={} M={}: {}",
                q.method, q.k, q.t, q.n, q.m, reason
            )?,
        }
    }
    for s in &summaries {
        match s.exponent {
            Some(e) => writeln!(out, "# exponent,{},{},{},{},{}", s.method, s.variable, s.from, s.to, e)?,
            None => writeln!(
                out,
                "# warning: no {} exponent for {} between {} and {}: endpoint violates N >= K*T + M",
                s.variable, s.method, s.from, s.to
            )?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_361_points() {
        let pts = AngleGrid::default().points();
        assert_eq!(pts.len(), 361);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[60], 30.0);
        assert_eq!(pts[360], 180.0);
    }

    #[test]
    fn substreams_differ() {
        let a = substream_seed(1, TAG_BER, 0, 0);
        assert_ne!(a, substream_seed(1, TAG_BER, 0, 1));
        assert_ne!(a, substream_seed(1, TAG_BER, 1, 0));
        assert_ne!(a, substream_seed(2, TAG_BER, 0, 0));
        assert_eq!(a, substream_seed(1, TAG_BER, 0, 0));
    }

    #[test]
    fn batches_cover_trials() {
        assert_eq!(batch_sizes(25_000), vec![10_000, 10_000, 5_000]);
        assert_eq!(batch_sizes(20_000), vec![10_000, 10_000]);
    }

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn config_errors_name_the_field() {
        let e = ExperimentConfig::from_json(
            r#"{"layout": {"desired_angles": [[30, 200]], "eavesdropper_angles": [90]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("layout.desired_angles[0][1]"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"power": {"beta1_sq": "x"}}"#).unwrap_err();
        assert!(e.is_config());
        assert!(e.to_string().contains("power.beta1_sq"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"trials": 10}"#).unwrap_err();
        assert!(e.to_string().contains("`trials`"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"bogus": 1}"#).unwrap_err();
        assert!(e.is_config());
    }

    #[test]
    fn profile_uses_equal_noise() {
        let c = ExperimentConfig::default();
        let p = c.profile_at(14.0).unwrap();
        assert_eq!(p.sigma_d2, p.sigma_e2);
        assert!((p.snr_db() - 14.0).abs() < 1e-12);
        assert!((p.beta1 * p.beta1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn flops_reference_sizes_and_empty_sweep() {
        let c = ExperimentConfig::default();
        let (rows, summaries) = flops_rows(&c);
        let counts: Vec<u128> = rows
            .iter()
            .map(|r| match r {
                FlopsRow::Count { flops, .. } => *flops,
                FlopsRow::Skipped { .. } => panic!("unexpected skip"),
            })
            .collect();
        assert_eq!(counts, vec![10104, 20480, 3456]);
        assert!(summaries.is_empty());

        let mut empty = c.clone();
        empty.flops.k.clear();
        let mut buf = Vec::new();
        run_flops(&empty, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["method,K,T,N,M,flops"]);
    }

    #[test]
    fn flops_skips_invalid_and_summarizes() {
        let mut c = ExperimentConfig {
            flops: FlopsSweep {
                k: vec![2, 4],
                t: vec![2],
                n: vec![8, 16],
                m: vec![2],
                auto_scale_n: false,
            },
            ..ExperimentConfig::default()
        };
        let (rows, summaries) = flops_rows(&c);
        assert!(rows.iter().any(|r| matches!(r, FlopsRow::Skipped { .. })));
        assert!(summaries.iter().any(|s| s.variable == Variable::N));
        assert!(summaries
            .iter()
            .all(|s| s.variable != Variable::K || s.exponent.is_none()));
        c.flops.auto_scale_n = true;
        let (rows, summaries) = flops_rows(&c);
        assert!(rows.iter().all(|r| matches!(r, FlopsRow::Count { .. })));
        assert_eq!(
            summaries
                .iter()
                .filter(|s| s.variable == Variable::K && s.exponent.is_some())
                .count(),
            3
        );
    }
}
