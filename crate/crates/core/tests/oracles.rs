//! Cross-checks of the precoders and the link simulation against
//! independently computed references.

use dmcast::array::{
    channel_matrix, steering_vector, ArrayConfig, ChannelMatrix, Channels, GroupLayout,
};
use dmcast::metrics::{ber_at_angle, term_powers};
use dmcast::precoder::{
    anlnr_projector, nsp_an_projector, slnr_precoder, slnr_value, ANProjector, Design,
    NoiseLoading, PrecoderSet, Scheme,
};
use dmcast::signal::{
    complex_normal_vector, norm_factors, qpsk_demodulate, random_qpsk, receive, transmit_signal,
    NormFactors, PowerProfile,
};
use dmcast::{CMatrix, CVector, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

fn ula16() -> ArrayConfig {
    ArrayConfig::new(16, 0.5).unwrap()
}

fn channels(eves: &[f64]) -> Channels {
    let layout =
        GroupLayout::new(vec![vec![30.0, 45.0], vec![120.0, 135.0]], eves.to_vec()).unwrap();
    Channels::build(&layout, &ula16()).unwrap()
}

fn setup(snr_db: f64, ch: &Channels) -> (PowerProfile, NormFactors, NoiseLoading) {
    let p = PowerProfile::from_snr_db(snr_db, 0.9).unwrap();
    let f = norm_factors(&p, ch.n_groups(), ch.an_dim()).unwrap();
    let l = NoiseLoading::from_profile(&p, &f, ch.an_dim()).unwrap();
    (p, f, l)
}

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn gram(h: &CMatrix) -> CMatrix {
    h * h.adjoint()
}

/// Largest eigenvalue of `B^{-1} A` by plain power iteration on the explicit
/// inverse, reported as the Rayleigh quotient of the pencil.
fn power_iteration_max(a: &CMatrix, b: &CMatrix) -> f64 {
    let m = b.clone().try_inverse().expect("invertible") * a;
    let n = a.nrows();
    let mut x = CVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + i as f64 * 0.1, 0.3 * i as f64)
    });
    for _ in 0..5000 {
        x = &m * &x;
        let norm = x.norm();
        x /= Complex64::new(norm, 0.0);
    }
    x.dotc(&(a * &x)).re / x.dotc(&(b * &x)).re
}

#[test]
fn slnr_value_equals_largest_pencil_eigenvalue() {
    for eves in [[75.0, 100.0], [60.0, 95.0]] {
        let ch = channels(&eves);
        for snr in [0.0, 7.0, 14.0] {
            let (_, _, l) = setup(snr, &ch);
            for k in 0..2 {
                let v = slnr_precoder(k, &ch, &l).unwrap();
                assert!((v.norm() - 1.0).abs() < 1e-12);
                let a = gram(ch.desired[k].as_matrix());
                let mut leak = gram(ch.eavesdropper.as_matrix());
                for j in (0..2).filter(|&j| j != k) {
                    leak += gram(ch.desired[j].as_matrix());
                }
                let b = leak + CMatrix::identity(16, 16) * Complex64::new(l.desired_load, 0.0);
                let oracle = power_iteration_max(&a, &b);
                let got = slnr_value(&v, &ch, &l, k);
                assert!(
                    (got - oracle).abs() <= 1e-8 * oracle.max(1.0),
                    "k={k} snr={snr}: {got} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn max_anlnr_keeps_an_far_below_signal_at_desired_users() {
    let ch = channels(&[75.0, 100.0]);
    let (p, f, l) = setup(14.0, &ch);
    let d = Design::build(Scheme::Leakage, &ch, &l).unwrap();
    for k in 0..2 {
        for i in 0..2 {
            let t = term_powers(
                &ch.desired[k].user(i),
                k,
                &d.precoders,
                &d.an,
                &p,
                &f,
                p.sigma_d2,
            );
            assert!(t.artificial_noise > 0.0);
            let margin_db = 10.0 * (t.signal / t.artificial_noise).log10();
            assert!(margin_db >= 20.0, "group {k} user {i}: {margin_db} dB");
        }
    }
}

#[test]
fn nsp_an_vanishes_per_realization_at_receivers() {
    let ch = channels(&[75.0, 100.0]);
    let (p, f, _) = setup(14.0, &ch);
    let d = Design::build(
        Scheme::MaxGrpNsp,
        &ch,
        &NoiseLoading::new(1.0, 1.0).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let zero = CVector::zeros(2);
    let cm = f.alpha1 * p.beta1 * p.total_power.sqrt();
    for _ in 0..200 {
        let x: Vec<_> = (0..2).map(|_| random_qpsk(&mut rng).0).collect();
        let z = complex_normal_vector(&mut rng, d.an.dim(), p.sigma_z2);
        let s = transmit_signal(&d.precoders, &x, &d.an, &z, &p, &f).unwrap();
        for (k, &xk) in x.iter().enumerate() {
            let y = receive(&ch.desired[k], &s, &zero).unwrap();
            let expected = ch.desired[k].as_matrix().adjoint()
                * d.precoders.beam(k)
                * Complex64::new(cm, 0.0)
                * xk;
            assert!((y - expected).norm() < 1e-10);
        }
    }
}

#[test]
fn eavesdropper_outside_all_beams_sees_only_an_and_noise() {
    // steering vectors with cos differences of 2/N are mutually orthogonal
    let cfg = ula16();
    let hd = channel_matrix(&[90.0], &cfg).unwrap();
    let he = channel_matrix(&[60.0], &cfg).unwrap();
    let v = hd.user(0);
    assert!(he.user(0).dotc(&v).norm() < 1e-12);
    let precoders = PrecoderSet::from_vectors(vec![v]);
    let an = nsp_an_projector(&hd).unwrap();
    let p = PowerProfile::new(1.0, 0.9f64.sqrt(), 0.1, 0.1, 1.0).unwrap();
    let f = norm_factors(&p, 1, an.dim()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = random_qpsk(&mut rng).0;
        let z = complex_normal_vector(&mut rng, an.dim(), 1.0);
        let n = complex_normal_vector(&mut rng, 1, 0.1);
        let s = transmit_signal(&precoders, &[x], &an, &z, &p, &f).unwrap();
        let y = receive(&he, &s, &n).unwrap();
        let an_only =
            he.as_matrix().adjoint() * &an.matrix * &z * Complex64::new(f.alpha2 * p.beta2, 0.0)
                + &n;
        assert!((y - an_only).norm() < 1e-12);
    }
}

#[test]
fn pure_noise_detection_is_a_coin_flip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = complex_normal_vector(&mut rng, 50_000, 1.0);
    let truth: Vec<bool> = (0..100_000).map(|_| rng.random()).collect();
    let bits = qpsk_demodulate(y.as_slice(), Complex64::new(0.3, -1.0)).unwrap();
    let errors = bits.iter().zip(&truth).filter(|(a, b)| a != b).count();
    let ber = errors as f64 / truth.len() as f64;
    assert!((ber - 0.5).abs() < 0.01, "{ber}");
}

fn single_user(
    snr_db: f64,
) -> (
    Channels,
    PrecoderSet,
    ANProjector,
    PowerProfile,
    NormFactors,
) {
    let cfg = ula16();
    let layout = GroupLayout::new(vec![vec![70.0]], vec![120.0]).unwrap();
    let ch = Channels::build(&layout, &cfg).unwrap();
    let precoders = PrecoderSet::from_vectors(vec![ch.desired[0].user(0)]);
    let an = nsp_an_projector(&ch.stacked_desired()).unwrap();
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    let p = PowerProfile::new(1.0, 1.0, sigma2, sigma2, 1.0).unwrap();
    let f = norm_factors(&p, 1, an.dim()).unwrap();
    (ch, precoders, an, p, f)
}

#[test]
fn matched_single_user_ber_is_monotone_in_snr() {
    let cfg = ula16();
    let grid = [0.0, 2.0, 4.0, 6.0, 8.0];
    let n = 100_000;
    let mut bers = Vec::new();
    for (i, &snr) in grid.iter().enumerate() {
        let (_, precoders, an, p, f) = single_user(snr);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let pt = ber_at_angle(
            70.0,
            0,
            Scheme::MaxGrpNsp,
            &precoders,
            &an,
            &cfg,
            &p,
            &f,
            n,
            &mut rng,
        )
        .unwrap();
        bers.push(pt.ber);
    }
    let bits = 2.0 * n as f64;
    let mut inversions = 0;
    for w in bers.windows(2) {
        if w[1] > w[0] {
            inversions += 1;
            let sigma = (w[0] * (1.0 - w[0]) / bits).sqrt();
            assert!(w[1] - w[0] <= 2.0 * sigma, "{bers:?}");
        }
    }
    assert!(inversions <= 1, "{bers:?}");
    for (&snr, &ber) in grid.iter().zip(&bers) {
        let q = q_function(10f64.powf(snr / 20.0));
        assert!(
            (ber - q).abs() < 4.0 * (q * (1.0 - q) / bits).sqrt(),
            "{snr} dB: {ber} vs {q}"
        );
    }
}

#[test]
fn matched_single_user_ber_is_unbiased_in_the_tail() {
    let cfg = ula16();
    let (_, precoders, an, p, f) = single_user(12.0);
    let n = 1_000_000;
    let runs = 10;
    let mut errors = 0;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + seed);
        let pt = ber_at_angle(
            70.0,
            0,
            Scheme::MaxGrpNsp,
            &precoders,
            &an,
            &cfg,
            &p,
            &f,
            n,
            &mut rng,
        )
        .unwrap();
        errors += pt.bit_errors;
    }
    let bits = (2 * n as u64 * runs) as f64;
    let ber = errors as f64 / bits;
    let q = q_function(10f64.powf(12.0 / 20.0));
    let z = (ber - q) / (q * (1.0 - q) / bits).sqrt();
    assert!(z.abs() < 3.0, "BER {ber:e} vs {q:e}: {z} sigma");
}

#[test]
fn power_is_conserved_for_other_splits() {
    let ch = channels(&[75.0, 100.0]);
    for beta1_sq in [0.5, 1.0] {
        let p = PowerProfile::new(2.0, f64::sqrt(beta1_sq), 0.04, 0.04, 1.0).unwrap();
        let f = norm_factors(&p, 2, ch.an_dim()).unwrap();
        let l = NoiseLoading::from_profile(&p, &f, ch.an_dim()).unwrap();
        for scheme in Scheme::ALL {
            let d = Design::build(scheme, &ch, &l).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let draws = 100_000;
            let mut total = 0.0;
            for _ in 0..draws {
                let x: Vec<_> = (0..2).map(|_| random_qpsk(&mut rng).0).collect();
                let z = complex_normal_vector(&mut rng, d.an.dim(), p.sigma_z2);
                total += transmit_signal(&d.precoders, &x, &d.an, &z, &p, &f)
                    .unwrap()
                    .norm_squared();
            }
            let mean = total / draws as f64;
            assert!(
                (mean / p.total_power - 1.0).abs() < 0.01,
                "{scheme} beta1^2={beta1_sq}: {mean}"
            );
        }
    }
}

#[test]
fn anlnr_projector_has_orthonormal_columns_across_snr() {
    let ch = channels(&[75.0, 100.0]);
    for snr in [-5.0, 0.0, 14.0, 30.0] {
        let (_, _, l) = setup(snr, &ch);
        let t = anlnr_projector(&ch, &l, ch.an_dim()).unwrap().matrix;
        let g = t.adjoint() * &t;
        assert!((g - CMatrix::identity(12, 12)).norm() < 1e-8, "{snr}");
        for m in 0..2 {
            let he = ch.eavesdropper.user(m);
            let captured = (t.adjoint() * &he).norm_squared();
            assert!(captured > 0.5, "eavesdropper {m} at {snr} dB: {captured}");
        }
    }
}

#[test]
fn steering_vector_at_sixty_degrees_by_hand() {
    let cfg = ArrayConfig::new(2, 0.5).unwrap();
    let h = steering_vector(60.0, &cfg).unwrap().into_vector();
    let quarter = std::f64::consts::FRAC_PI_4;
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    assert!((h[0] - Complex64::from_polar(amp, -quarter)).norm() < 1e-15);
    assert!((h[1] - Complex64::from_polar(amp, quarter)).norm() < 1e-15);
    let m = ChannelMatrix(CMatrix::from_columns(&[h]));
    assert_eq!(m.n_users(), 1);
}
