//! Acceptance suite. Each test exercises one release criterion at its pinned
//! tolerance and prints a PASS line (visible with `--nocapture`).
//!
//! Run with: `cargo test -p mumimo-core --test acceptance -- --nocapture`

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use mumimo_core::array_geometry::{build_cylinder, build_ura, ArrayTopology};
use mumimo_core::channel::{
    apply_xpol, build_correlation, corrupt_csi, draw_fading, fading_block, link_gains,
    AodSpec, CorrelationMatrix, LinkGainMatrix, LinkGainSpec, RicianSpec,
};
use mumimo_core::montecarlo::{
    run_experiment, CorrelationCache, CorrelationMode, ScenarioConfig,
};
use mumimo_core::precoding::{
    empirical_sinr_oracle, mf_expected_sinr, mf_normalization, zf_expected_snr,
    zf_gram_inverse, zf_normalization, PrecoderKind, TransmitConfig,
};
use mumimo_core::seed::stream;
use mumimo_core::{db_to_linear, linear_to_db};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

fn random_channel<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(m, k, |_, _| complex_gaussian(rng))
}

fn conj(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    g.map(|z| z.conj())
}

#[test]
fn criterion_1_trace_identity_power_normalization() {
    // 100 random channel estimates over mixed dimensions: the average
    // transmit power of both precoders is exactly 1 under the unit
    // total-power symbol convention, E||x||^2 = ||F||_F^2 / K = 1.
    let start = std::time::Instant::now();
    let dims = [(8usize, 1usize), (8, 4), (64, 4), (64, 8), (256, 8), (256, 1)];
    let mut rng = stream(101, 0, "acceptance-1");
    for instance in 0..100 {
        let (m, k) = dims[instance % dims.len()];
        let g = random_channel(m, k, &mut rng);

        let gamma_mf = mf_normalization(&g).unwrap();
        let f_mf = conj(&g) / Complex64::new(gamma_mf.sqrt(), 0.0);
        let power_mf: f64 = f_mf.iter().map(|z| z.norm_sqr()).sum::<f64>() / k as f64;
        assert!((power_mf - 1.0).abs() < 1e-9, "MF power {power_mf} at {m}x{k}");

        let (inv, gamma_zf) = zf_gram_inverse(&g).unwrap();
        let f_zf = conj(&g) * inv / Complex64::new(gamma_zf.sqrt(), 0.0);
        let power_zf: f64 = f_zf.iter().map(|z| z.norm_sqr()).sum::<f64>() / k as f64;
        assert!((power_zf - 1.0).abs() < 1e-9, "ZF power {power_zf} at {m}x{k}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?}");
    println!("PASS criterion 1: MF/ZF trace-identity power normalization, 100 instances, {elapsed:?}");
}

#[test]
fn criterion_2_closed_form_matches_link_level_oracle() {
    // M=64, K=4, i.i.d., perfect CSI: the closed-form per-user expressions
    // agree with the independent received-signal decomposition within 0.5 dB.
    let start = std::time::Instant::now();
    let (m, k) = (64, 4);
    let cfg = TransmitConfig::new(db_to_linear(10.0), k, m).unwrap();
    let mut rng = stream(102, 0, "acceptance-2");
    let g = random_channel(m, k, &mut rng);

    let mf_formula = mf_expected_sinr(&g, &[], 1.0, &cfg).unwrap();
    let mf_oracle = empirical_sinr_oracle(&g, &g, PrecoderKind::Mf, &cfg, 10_000,
        &mut stream(102, 1, "oracle")).unwrap();
    for i in 0..k {
        let gap = (mf_formula.values_db[i] - mf_oracle.values_db[i]).abs();
        assert!(gap < 0.5, "user {i}: MF formula vs oracle gap {gap} dB");
    }

    let gamma_zf = zf_normalization(&g).unwrap();
    let zf_formula = zf_expected_snr(gamma_zf, &[], 1.0, &cfg).unwrap();
    let zf_oracle = empirical_sinr_oracle(&g, &g, PrecoderKind::Zf, &cfg, 10_000,
        &mut stream(102, 2, "oracle")).unwrap();
    for i in 0..k {
        let gap = (zf_formula.values_db[i] - zf_oracle.values_db[i]).abs();
        assert!(gap < 0.5, "user {i}: ZF formula vs oracle gap {gap} dB");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?}");
    println!("PASS criterion 2: Eq-form MF SINR / ZF SNR within 0.5 dB of the link-level oracle, {elapsed:?}");
}

#[test]
fn criterion_3_single_user_precoder_coincidence() {
    // K=1, perfect CSI: the MF SINR and ZF SNR expressions coincide.
    let mut rng = stream(103, 0, "acceptance-3");
    for instance in 0..100 {
        let m = [8, 32, 128][instance % 3];
        let cfg = TransmitConfig::new(db_to_linear(10.0), 1, m).unwrap();
        let g = random_channel(m, 1, &mut rng);
        let mf = db_to_linear(mf_expected_sinr(&g, &[], 1.0, &cfg).unwrap().values_db[0]);
        let gamma = zf_normalization(&g).unwrap();
        let zf = db_to_linear(zf_expected_snr(gamma, &[], 1.0, &cfg).unwrap().values_db[0]);
        let rel = (mf - zf).abs() / mf;
        assert!(rel < 1e-9, "relative gap {rel}");
    }
    println!("PASS criterion 3: K=1 MF SINR equals ZF SNR to 1e-9 relative, 100 channels");
}

#[test]
fn criterion_4_zf_exact_nulling() {
    // Perfect CSI ZF: cross-user received interference power below 1e-18 of
    // the desired power for 100 random 32x4 instances.
    let mut rng = stream(104, 0, "acceptance-4");
    let cfg = TransmitConfig::new(db_to_linear(10.0), 4, 32).unwrap();
    for _ in 0..100 {
        let g = random_channel(32, 4, &mut rng);
        let (inv, gamma) = zf_gram_inverse(&g).unwrap();
        let f = conj(&g) * inv / Complex64::new(gamma.sqrt(), 0.0);
        let coupling = g.transpose() * &f;
        for i in 0..cfg.k_users {
            let desired = coupling[(i, i)].norm_sqr();
            let interference: f64 = (0..cfg.k_users)
                .filter(|&j| j != i)
                .map(|j| coupling[(i, j)].norm_sqr())
                .sum();
            assert!(
                interference < 1e-18 * desired,
                "interference/desired = {}",
                interference / desired
            );
        }
    }
    println!("PASS criterion 4: ZF cross-user interference < 1e-18 of desired, 100 instances");
}

#[test]
fn criterion_5_statistical_model_checks() {
    // Shadowing: dB-domain SD 8 +- 0.2 over 1e5 draws.
    let clusters = mumimo_core::array_geometry::ClusterLayout { centers: vec![[0.0, 0.0]] };
    let users = mumimo_core::array_geometry::UserDrop { positions: vec![[400.0, 0.0]; 100_000] };
    let gains = link_gains(&clusters, &users, &LinkGainSpec::default(),
        &mut stream(105, 0, "gain")).unwrap();
    let dbs: Vec<f64> = gains.beta.iter().map(|b| 10.0 * b.log10()).collect();
    let mean = dbs.iter().sum::<f64>() / dbs.len() as f64;
    let sd = (dbs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / dbs.len() as f64).sqrt();
    assert!((sd - 8.0).abs() < 0.2, "shadowing SD {sd} dB");

    // Rician second moment for K_f in {0, 2, 10}.
    for (i, kf) in [0.0, 2.0, 10.0].into_iter().enumerate() {
        let mut rng = stream(105, 1 + i as u64, "fading");
        let mut acc = 0.0;
        let mut count = 0;
        for _ in 0..1000 {
            let h = fading_block(100, &RicianSpec::new(kf).unwrap(), &mut rng).unwrap();
            acc += h.iter().map(|v| v.norm_sqr()).sum::<f64>();
            count += h.len();
        }
        let moment = acc / count as f64;
        assert!((moment - 1.0).abs() < 0.02, "K_f={kf}: E|h|^2 = {moment}");
    }

    // CSI corruption preserves the per-entry second moment.
    let beta = LinkGainMatrix { beta: DMatrix::from_element(1, 1, 1.0) };
    let corr = CorrelationMatrix::identity(10);
    let rician = RicianSpec::new(0.0).unwrap();
    let mut rng_f = stream(105, 10, "fading");
    let mut rng_c = stream(105, 10, "csi");
    let mut acc = 0.0;
    let mut count = 0;
    for _ in 0..10_000 {
        let blocks = draw_fading(1, 1, 10, &rician, &mut rng_f).unwrap();
        let g = mumimo_core::channel::assemble_channel(&beta, &corr, &blocks).unwrap();
        let ghat = corrupt_csi(&g, &beta, &corr, &rician, 0.6, &mut rng_c).unwrap();
        acc += ghat.g.iter().map(|v| v.norm_sqr()).sum::<f64>();
        count += ghat.g.len();
    }
    let moment = acc / count as f64;
    assert!((moment - 1.0).abs() < 0.02, "CSI-corrupted E|g|^2 = {moment}");

    // Azimuth AOD sample SD matches the NLOS table row.
    let spec = AodSpec::nlos_3gpp();
    let mut rng = stream(105, 20, "aod");
    let az: Vec<f64> = (0..100_000)
        .map(|_| mumimo_core::channel::sample_aod(&spec, &mut rng).0.to_degrees())
        .collect();
    let mean = az.iter().sum::<f64>() / az.len() as f64;
    let sd = (az.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / az.len() as f64).sqrt();
    assert!((sd - 1.29).abs() / 1.29 < 0.02, "azimuth AOD SD {sd} deg");

    println!("PASS criterion 5: shadowing / Rician / CSI / AOD statistics within tolerance");
}

#[test]
fn criterion_6_correlation_structure() {
    let lambda = mumimo_core::SPEED_OF_LIGHT / 2.6e9;
    let wavenumber = 2.0 * std::f64::consts::PI / lambda;
    let layouts = [
        build_ura(16, 8, 2.0 * lambda).unwrap(),
        build_cylinder(16, 8, 2.0 * lambda).unwrap(),
        build_ura(2, 2, 2.0 * lambda).unwrap(),
    ];
    for (i, layout) in layouts.iter().enumerate() {
        let r = build_correlation(layout, &AodSpec::nlos_3gpp(), wavenumber, 2000,
            &mut stream(106, i as u64, "corr")).unwrap();
        let rt = apply_xpol(&r, 0.01).unwrap();
        let m = rt.dim();
        // Hermitian, unit diagonal.
        for a in 0..m {
            assert_eq!(rt.rt()[(a, a)], Complex64::new(1.0, 0.0));
            for b in 0..m {
                assert!((rt.rt()[(a, b)] - rt.rt()[(b, a)].conj()).norm() < 1e-12);
            }
        }
        // PSD after clamping and a faithful square root.
        let eig = nalgebra::linalg::SymmetricEigen::new(rt.rt().clone());
        let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lam_min > -1e-10 * m as f64, "min eigenvalue {lam_min}");
        let err = (rt.sqrt() * rt.sqrt().adjoint() - rt.rt()).norm() / rt.rt().norm();
        assert!(err < 1e-10, "sqrt reconstruction error {err}");
    }

    // Degenerate co-located layout: all-ones co-pol matrix.
    let degenerate = mumimo_core::array_geometry::ElementLayout {
        positions: vec![[0.0, 0.0, 0.0]; 4],
        pol: vec![0, 1, 0, 1],
        p_pairs: 2,
        q_pairs: 1,
        l: lambda,
    };
    let r = build_correlation(&degenerate, &AodSpec::nlos_3gpp(), wavenumber, 100,
        &mut stream(106, 9, "corr")).unwrap();
    for v in r.iter() {
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
    println!("PASS criterion 6: correlation matrices Hermitian, unit-diagonal, PSD, sqrt error < 1e-10");
}

fn median_mf(cfg: &ScenarioConfig, cache: &CorrelationCache) -> f64 {
    run_experiment(cfg, cache).unwrap().mf_cdf.median().unwrap()
}

fn median_zf(cfg: &ScenarioConfig, cache: &CorrelationCache) -> f64 {
    run_experiment(cfg, cache).unwrap().zf_cdf.median().unwrap()
}

#[test]
fn criterion_7a_rician_k_factor_penalty() {
    // K_f 0 -> 2 reduces the median MF expected SINR by about 22 dB
    // (M=256, K=8, N=1, i.i.d. mode).
    let cache = CorrelationCache::new();
    let base = ScenarioConfig {
        correlation_mode: CorrelationMode::Iid,
        n_trials: 500,
        master_seed: 1070,
        ..Default::default()
    };
    let nlos = median_mf(&base, &cache);
    let rician = median_mf(&ScenarioConfig { k_factor: 2.0, ..base }, &cache);
    let drop = nlos - rician;
    assert!((drop - 22.0).abs() < 4.0, "median MF SINR drop {drop} dB");
    println!("PASS criterion 7a: K_f 0->2 median MF SINR drop = {drop:.2} dB (target 22 +- 4)");
}

#[test]
fn criterion_7b_distributed_clusters_zf_gain() {
    // N 1 -> 4 raises the median i.i.d. ZF expected SNR by about 20 dB
    // (M=256, K=32).
    let cache = CorrelationCache::new();
    let base = ScenarioConfig {
        k_users: 32,
        correlation_mode: CorrelationMode::Iid,
        n_trials: 500,
        master_seed: 1071,
        ..Default::default()
    };
    let single = median_zf(&base, &cache);
    let distributed = median_zf(&ScenarioConfig { n_clusters: 4, ..base }, &cache);
    let gain = distributed - single;
    assert!((gain - 20.0).abs() < 4.0, "median ZF SNR gain {gain} dB");
    println!("PASS criterion 7b: N 1->4 median ZF SNR gain = {gain:.2} dB (target 20 +- 4)");
}

#[test]
fn criterion_7c_ura_beats_cylinder_under_correlation() {
    // Correlated NLOS, M=256, K=8: the URA median MF SINR is at least the
    // cylindrical one (sign check). The true gap is marginal (~0.02 dB), so
    // the paired comparison needs 2000 trials to push the median noise below
    // the effect size; at 500 trials the ordering is a coin flip.
    let cache = CorrelationCache::new();
    let base = ScenarioConfig {
        n_trials: 2000,
        master_seed: 1072,
        ..Default::default()
    };
    let ura = median_mf(&base, &cache);
    let cylinder = median_mf(
        &ScenarioConfig { topology: ArrayTopology::Cylindrical, ..base },
        &cache,
    );
    assert!(ura >= cylinder, "URA median {ura} dB < cylindrical {cylinder} dB");
    println!("PASS criterion 7c: URA median MF SINR {ura:.2} dB >= cylindrical {cylinder:.2} dB");
}

#[test]
fn criterion_7d_angle_spread_gain() {
    // Cylindrical topology: 8x angle spread raises the median MF SINR by
    // about 2 dB over 0.125x.
    let cache = CorrelationCache::new();
    let base = ScenarioConfig {
        topology: ArrayTopology::Cylindrical,
        n_trials: 500,
        master_seed: 1073,
        ..Default::default()
    };
    let narrow = median_mf(&ScenarioConfig { spread_multiplier: 0.125, ..base.clone() }, &cache);
    let wide = median_mf(&ScenarioConfig { spread_multiplier: 8.0, ..base }, &cache);
    let gain = wide - narrow;
    assert!((gain - 2.0).abs() < 4.0, "median MF SINR spread gain {gain} dB");
    println!("PASS criterion 7d: 0.125x -> 8x spread median MF SINR gain = {gain:.2} dB (target 2 +- 4)");
}

#[test]
fn oracle_consistency_under_imperfect_csi() {
    // Supporting check for the closed-form expressions away from xi = 1: the
    // formula and the oracle track each other over an ensemble (the
    // expressions are expectations, so only the ensemble mean must agree).
    let (m, k) = (64, 4);
    let cfg = TransmitConfig::new(db_to_linear(10.0), k, m).unwrap();
    let xi = 0.8;
    let beta = LinkGainMatrix { beta: DMatrix::from_element(1, k, 1.0) };
    let corr = CorrelationMatrix::identity(m);
    let rician = RicianSpec::new(0.0).unwrap();
    let p_list: Vec<_> = (0..k)
        .map(|i| mumimo_core::channel::error_covariance(&beta.column(i), &corr))
        .collect();
    let mut formula_acc = 0.0;
    let mut oracle_acc = 0.0;
    let trials = 60;
    for t in 0..trials {
        let blocks = draw_fading(1, k, m, &rician, &mut stream(108, t, "fading")).unwrap();
        let g = mumimo_core::channel::assemble_channel(&beta, &corr, &blocks).unwrap();
        let ghat = corrupt_csi(&g, &beta, &corr, &rician, xi, &mut stream(108, t, "csi")).unwrap();
        let formula = mf_expected_sinr(&ghat.g, &p_list, xi, &cfg).unwrap();
        let oracle = empirical_sinr_oracle(&g.g, &ghat.g, PrecoderKind::Mf, &cfg, 2000,
            &mut stream(108, t, "oracle")).unwrap();
        formula_acc += formula.values_db.iter().map(|v| db_to_linear(*v)).sum::<f64>();
        oracle_acc += oracle.values_db.iter().map(|v| db_to_linear(*v)).sum::<f64>();
    }
    let gap = (linear_to_db(formula_acc) - linear_to_db(oracle_acc)).abs();
    assert!(gap < 1.0, "ensemble-mean formula vs oracle gap {gap} dB at xi={xi}");
    println!("PASS supporting check: imperfect-CSI formula vs oracle ensemble gap = {gap:.3} dB");
}

#[test]
fn simulate_received_matches_model() {
    // y = sqrt(rho) G^T x + n: with x = 0 the received power is pure noise.
    let mut rng = stream(109, 0, "noise");
    let g = random_channel(16, 4, &mut rng);
    let zero = DVector::zeros(16);
    let mut acc = 0.0;
    for _ in 0..5000 {
        let y = mumimo_core::precoding::simulate_received(&g, &zero, 10.0, &mut rng).unwrap();
        acc += y.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let per_entry = acc / (5000.0 * 4.0);
    assert!((per_entry - 1.0).abs() < 0.05, "noise power {per_entry}");
    println!("PASS supporting check: received-signal noise floor is unit variance");
}
