//! SINR, secrecy sum-rate and Monte Carlo BER.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArrayConfig, Channels};
use crate::error::{domain, Result};
use crate::precoder::{ANProjector, PrecoderSet, Scheme};
use crate::signal::{complex_normal, qpsk_slice, random_qpsk, NormFactors, PowerProfile};
use crate::{CMatrix, CVector, Complex64};

/// Beam responses below this magnitude are treated as a zero composite gain.
pub const ZERO_GAIN_TOL: f64 = 1e-12;

/// Smallest Monte Carlo run accepted by [`ber_at_angle`].
pub const MIN_BER_SYMBOLS: usize = 10_000;

/// Received power of each term at a single-antenna receiver `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermPowers {
    pub signal: f64,
    pub interference: f64,
    pub artificial_noise: f64,
    pub noise: f64,
}

impl TermPowers {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference + self.artificial_noise + self.noise)
    }
}

/// Term powers of stream `k` at receiver `h` with noise variance `noise`.
pub fn term_powers(
    h: &CVector,
    k: usize,
    precoders: &PrecoderSet,
    an: &ANProjector,
    profile: &PowerProfile,
    factors: &NormFactors,
    noise: f64,
) -> TermPowers {
    let cm = factors.alpha1.powi(2) * profile.beta1.powi(2) * profile.total_power;
    let an_scale =
        factors.alpha2.powi(2) * profile.beta2.powi(2) * profile.total_power * profile.sigma_z2;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for j in 0..precoders.n_groups() {
        let p = cm * h.dotc(&precoders.beam(j)).norm_sqr();
        if j == k {
            signal = p;
        } else {
            interference += p;
        }
    }
    let an_leak = (h.adjoint() * &an.matrix).norm_squared();
    TermPowers {
        signal,
        interference,
        artificial_noise: an_scale * an_leak,
        noise,
    }
}

/// SINR of user `i` of group `k`.
pub fn sinr_desired(
    k: usize,
    i: usize,
    precoders: &PrecoderSet,
    an: &ANProjector,
    channels: &Channels,
    profile: &PowerProfile,
    factors: &NormFactors,
) -> f64 {
    let h = channels.desired[k].user(i);
    term_powers(&h, k, precoders, an, profile, factors, profile.sigma_d2).sinr()
}

/// SINR of eavesdropper `m` on stream `k`, all other streams, AN and noise
/// counted as interference.
pub fn sinr_eve(
    m: usize,
    k: usize,
    precoders: &PrecoderSet,
    an: &ANProjector,
    channels: &Channels,
    profile: &PowerProfile,
    factors: &NormFactors,
) -> f64 {
    let h = channels.eavesdropper.user(m);
    term_powers(&h, k, precoders, an, profile, factors, profile.sigma_e2).sinr()
}

/// SINRs of every desired user (`desired[k][i]`) and every eavesdropper on
/// every stream (`eavesdropper[m][k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub desired: Vec<Vec<f64>>,
    pub eavesdropper: Vec<Vec<f64>>,
}

pub fn sinr_report(
    precoders: &PrecoderSet,
    an: &ANProjector,
    channels: &Channels,
    profile: &PowerProfile,
    factors: &NormFactors,
) -> SinrReport {
    let desired = (0..channels.n_groups())
        .map(|k| {
            (0..channels.desired[k].n_users())
                .map(|i| sinr_desired(k, i, precoders, an, channels, profile, factors))
                .collect()
        })
        .collect();
    let eavesdropper = (0..channels.eavesdropper.n_users())
        .map(|m| {
            (0..channels.n_groups())
                .map(|k| sinr_eve(m, k, precoders, an, channels, profile, factors))
                .collect()
        })
        .collect();
    SinrReport {
        desired,
        eavesdropper,
    }
}

/// How the eavesdropper group's rate on a stream is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveModel {
    /// The group jointly decodes with a vector receiver (log-det rate).
    #[default]
    Colluding,
    /// The best single eavesdropper.
    BestSingle,
}

/// `log2 det(I_M + a C_k^{-1} H_e^H v_k v_k^H H_e)` for a colluding group.
pub fn colluding_eve_rate(
    k: usize,
    precoders: &PrecoderSet,
    an: &ANProjector,
    channels: &Channels,
    profile: &PowerProfile,
    factors: &NormFactors,
) -> f64 {
    let he = channels.eavesdropper.as_matrix();
    let m = he.ncols();
    let cm = factors.alpha1.powi(2) * profile.beta1.powi(2) * profile.total_power;
    let an_scale =
        factors.alpha2.powi(2) * profile.beta2.powi(2) * profile.total_power * profile.sigma_z2;
    let c = |x: f64| Complex64::new(x, 0.0);

    let mut cov = CMatrix::identity(m, m) * c(profile.sigma_e2);
    let an_at_eve = he.adjoint() * &an.matrix;
    cov += &an_at_eve * an_at_eve.adjoint() * c(an_scale);
    for j in 0..precoders.n_groups() {
        if j != k {
            let g = he.adjoint() * precoders.beam(j);
            cov += &g * g.adjoint() * c(cm);
        }
    }
    let gk = he.adjoint() * precoders.beam(k);
    let whitened = cov
        .cholesky()
        .expect("noise covariance is positive definite")
        .solve(&(&gk * gk.adjoint() * c(cm)));
    let det = (CMatrix::identity(m, m) + whitened).determinant();
    det.re.max(1.0).log2()
}

/// Secrecy sum-rate of group `k` in bits/s/Hz: the group's summed user rates
/// minus the eavesdropper rate on stream `k`, clamped at zero.
pub fn secrecy_sum_rate(
    k: usize,
    precoders: &PrecoderSet,
    an: &ANProjector,
    channels: &Channels,
    profile: &PowerProfile,
    factors: &NormFactors,
    model: EveModel,
) -> f64 {
    let desired: f64 = (0..channels.desired[k].n_users())
        .map(|i| (1.0 + sinr_desired(k, i, precoders, an, channels, profile, factors)).log2())
        .sum();
    let eve = match model {
        EveModel::Colluding => colluding_eve_rate(k, precoders, an, channels, profile, factors),
        EveModel::BestSingle => (0..channels.eavesdropper.n_users())
            .map(|m| (1.0 + sinr_eve(m, k, precoders, an, channels, profile, factors)).log2())
            .fold(0.0, f64::max),
    };
    (desired - eve).max(0.0)
}

/// One BER estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub sweep_value: f64,
    pub group: usize,
    pub scheme: Scheme,
    pub ber: f64,
    /// Symbols simulated.
    pub trials: u64,
    pub bit_errors: u64,
    /// The composite gain of the stream was zero, so bits were guessed.
    pub zero_gain: bool,
}

/// One secrecy sum-rate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrPoint {
    pub snr_db: f64,
    pub group: usize,
    pub scheme: Scheme,
    pub ssr: f64,
}

/// What a single-antenna probe at some direction sees of one design: the
/// response to every group beam and to every AN column.
#[derive(Debug, Clone)]
pub struct ProbeResponse {
    pub beam_gains: Vec<Complex64>,
    pub an_row: Vec<Complex64>,
}

impl ProbeResponse {
    pub fn new(h: &CVector, precoders: &PrecoderSet, an: &ANProjector) -> Self {
        let beam_gains = precoders.beams().iter().map(|w| h.dotc(w)).collect();
        let an_row = (h.adjoint() * &an.matrix).iter().copied().collect();
        Self { beam_gains, an_row }
    }

    pub fn at_angle(
        theta_deg: f64,
        cfg: &ArrayConfig,
        precoders: &PrecoderSet,
        an: &ANProjector,
    ) -> Result<Self> {
        let h = steering_vector(theta_deg, cfg)?.into_vector();
        Ok(Self::new(&h, precoders, an))
    }
}

/// Bit-error counts per probe and group from one Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorCounts {
    /// `errors[p][k]`
    pub errors: Vec<Vec<u64>>,
    pub symbols: u64,
}

impl ErrorCounts {
    pub fn zeros(n_probes: usize, n_groups: usize) -> Self {
        Self {
            errors: vec![vec![0; n_groups]; n_probes],
            symbols: 0,
        }
    }

    pub fn merge(&mut self, other: &ErrorCounts) {
        for (a, b) in self.errors.iter_mut().zip(&other.errors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.symbols += other.symbols;
    }

    pub fn ber(&self, p: usize, k: usize) -> f64 {
        if self.symbols == 0 {
            return 0.0;
        }
        self.errors[p][k] as f64 / (2 * self.symbols) as f64
    }
}

/// Simulates `n_symbols` transmissions and detects every stream at every
/// probe. All probes share the same symbols, AN samples and receiver noise,
/// so schemes are compared on common random numbers.
///
/// Each symbol draws the `K` group symbols, then `L` AN samples, then the
/// probe noise, in that order. Streams with a zero composite gain are
/// detected by guessing, using an auxiliary generator seeded from `rng` so
/// the main stream stays aligned across probes.
pub fn simulate_probe_errors<R: Rng + ?Sized>(
    probes: &[ProbeResponse],
    profile: &PowerProfile,
    factors: &NormFactors,
    n_symbols: usize,
    rng: &mut R,
) -> ErrorCounts {
    let n_groups = probes.first().map_or(0, |p| p.beam_gains.len());
    let an_dim = probes.first().map_or(0, |p| p.an_row.len());
    let mut counts = ErrorCounts::zeros(probes.len(), n_groups);
    let mut guesser = ChaCha8Rng::seed_from_u64(rng.random());

    let root = profile.total_power.sqrt();
    let cm = factors.alpha1 * profile.beta1 * root;
    let an_amp = factors.alpha2 * profile.beta2 * root;

    // Per probe/group: composite gain and its de-rotation, or None if zero.
    let derotations: Vec<Vec<Option<Complex64>>> = probes
        .iter()
        .map(|p| {
            p.beam_gains
                .iter()
                .map(|g| (g.norm() > ZERO_GAIN_TOL).then(|| g.conj() / g.norm()))
                .collect()
        })
        .collect();

    let mut symbols = vec![Complex64::new(0.0, 0.0); n_groups];
    let mut bits = vec![(false, false); n_groups];
    let mut z = vec![Complex64::new(0.0, 0.0); an_dim];
    for _ in 0..n_symbols {
        for k in 0..n_groups {
            let (x, b) = random_qpsk(rng);
            symbols[k] = x;
            bits[k] = b;
        }
        for zi in z.iter_mut() {
            *zi = complex_normal(rng, profile.sigma_z2);
        }
        let noise = complex_normal(rng, profile.sigma_d2);

        for (p, probe) in probes.iter().enumerate() {
            let cm_part: Complex64 = probe
                .beam_gains
                .iter()
                .zip(&symbols)
                .map(|(g, x)| g * x)
                .sum();
            let an_part: Complex64 = probe.an_row.iter().zip(&z).map(|(q, zi)| q * zi).sum();
            let y = cm_part * cm + an_part * an_amp + noise;
            for k in 0..n_groups {
                let (b0, b1) = match derotations[p][k] {
                    Some(rot) => qpsk_slice(y * rot),
                    None => {
                        let r: u8 = guesser.random();
                        (r & 1 != 0, r & 2 != 0)
                    }
                };
                let (t0, t1) = bits[k];
                counts.errors[p][k] += u64::from(b0 != t0) + u64::from(b1 != t1);
            }
        }
    }
    counts.symbols = n_symbols as u64;
    counts
}

/// Monte Carlo BER of stream `k` at a probe receiver placed at `theta_deg`.
#[allow(clippy::too_many_arguments)]
pub fn ber_at_angle<R: Rng + ?Sized>(
    theta_deg: f64,
    k: usize,
    scheme: Scheme,
    precoders: &PrecoderSet,
    an: &ANProjector,
    cfg: &ArrayConfig,
    profile: &PowerProfile,
    factors: &NormFactors,
    n_symbols: usize,
    rng: &mut R,
) -> Result<BerPoint> {
    if n_symbols < MIN_BER_SYMBOLS {
        return Err(domain(format!(
            "need at least {MIN_BER_SYMBOLS} symbols, got {n_symbols}"
        )));
    }
    if k >= precoders.n_groups() {
        return Err(domain(format!("group index {k} out of range")));
    }
    let probe = ProbeResponse::at_angle(theta_deg, cfg, precoders, an)?;
    let zero_gain = probe.beam_gains[k].norm() <= ZERO_GAIN_TOL;
    let counts = simulate_probe_errors(
        std::slice::from_ref(&probe),
        profile,
        factors,
        n_symbols,
        rng,
    );
    Ok(BerPoint {
        sweep_value: theta_deg,
        group: k,
        scheme,
        ber: counts.ber(0, k),
        trials: counts.symbols,
        bit_errors: counts.errors[0][k],
        zero_gain,
    })
}
