//! Acceptance suite: one test per shipping criterion of the project, from
//! generator correctness through CLI determinism. Each test prints the
//! measured numbers next to its verdict, and the expensive trained models
//! are built once and shared across the criteria that need them.

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use fraclab::classical::ClassicalEstimator;
use fraclab::eval::{benchmark_matrix, compute_report, confidence_interval, quantile_sorted, MatrixSpec, NamedEstimator, REL_TRUTH_THRESHOLD};
use fraclab::generators::{BatchRequest, FouScheme, Generator, HurstSampling};
use fraclab::neural::{
    loss_and_gradients, pack_sequences, train, Architecture, LossKind, LstmModel,
    StandardizedIncrements, TrainConfig,
};
use fraclab::process::{fgn_autocov, FbmParams, FouParams, LfsmParams, ProcessParams};
use fraclab::SeedScheme;

// ---------------------------------------------------------------------------
// Shared helpers

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn rmse(preds: &[f64], labels: &[f64]) -> f64 {
    let n = preds.len() as f64;
    (preds.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / n).sqrt()
}

/// Uniform-H fBm paths on [0, 1], returned with their labels.
fn labeled_paths(n: usize, count: u64, master: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let gen = Generator::new();
    let mut req = BatchRequest::new(
        ProcessParams::Fbm(FbmParams { hurst: 0.5 }),
        n,
        1.0 / n as f64,
        count,
        SeedScheme::new(master),
    );
    req.hurst_sampling = HurstSampling::Uniform;
    let batch = gen.batch(&req).unwrap();
    let labels = batch.iter().map(|t| t.true_hurst().unwrap()).collect();
    let paths = batch.into_iter().map(|t| t.values).collect();
    (paths, labels)
}

fn classical_rmse(est: ClassicalEstimator, paths: &[Vec<f64>], labels: &[f64]) -> f64 {
    let preds: Vec<f64> = paths
        .iter()
        .map(|p| est.estimate(p, false).unwrap().estimate)
        .collect();
    rmse(&preds, labels)
}

// ---------------------------------------------------------------------------
// Desk-scale trained models, built once

struct TrainedNet {
    model: LstmModel<f32>,
    train_secs: f64,
}

fn desk_config(length: usize, epochs: usize, sequences: usize, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(ProcessParams::Fbm(FbmParams { hurst: 0.5 }), length, seed);
    cfg.epochs = epochs;
    cfg.sequences_per_epoch = sequences;
    // The production schedule spreads its learning over two orders of
    // magnitude more optimizer steps; this compressed run needs a hotter
    // rate to converge within its budget.
    cfg.learning_rate = 1e-3;
    cfg
}

static NET400: OnceLock<TrainedNet> = OnceLock::new();
static NET1600: OnceLock<TrainedNet> = OnceLock::new();

fn net400() -> &'static TrainedNet {
    NET400.get_or_init(|| {
        let t0 = Instant::now();
        let out = train(&Generator::new(), &desk_config(400, 5, 10_000, 2024)).unwrap();
        TrainedNet { model: out.model, train_secs: t0.elapsed().as_secs_f64() }
    })
}

fn net1600() -> &'static TrainedNet {
    NET1600.get_or_init(|| {
        let t0 = Instant::now();
        let out = train(&Generator::new(), &desk_config(1600, 3, 4_000, 2025)).unwrap();
        TrainedNet { model: out.model, train_secs: t0.elapsed().as_secs_f64() }
    })
}

// ---------------------------------------------------------------------------
// Covariance machinery for the generator criterion

fn toeplitz(h: f64, n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n]; n];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = fgn_autocov(h, (i as i64 - j as i64).unsigned_abs()).unwrap();
        }
    }
    t
}

fn empirical_covariance(paths: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = paths[0].len();
    let count = paths.len() as f64;
    let mut means = vec![0.0; n];
    for p in paths {
        for (m, v) in means.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= count;
    }
    let mut cov = vec![vec![0.0; n]; n];
    for p in paths {
        for i in 0..n {
            let di = p[i] - means[i];
            for j in 0..=i {
                cov[i][j] += di * (p[j] - means[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            cov[i][j] /= count;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

/// Entrywise check against the target: 4,160 correlated entries share the
/// same 5,000 paths, so a few benign 3-sigma excursions are expected by
/// chance alone. At most 1% of entries may sit beyond 3 standard errors
/// and none beyond 5. Returns (worst deviation in SE, fraction beyond 3).
fn covariance_deviation(sample: &[Vec<f64>], target: &[Vec<f64>], count: usize) -> (f64, f64) {
    let n = target.len();
    let mut checked = 0usize;
    let mut beyond3 = 0usize;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let se = ((target[i][i] * target[j][j] + target[i][j] * target[i][j])
                / count as f64)
                .sqrt();
            let dev = (sample[i][j] - target[i][j]).abs() / se;
            checked += 1;
            if dev > 3.0 {
                beyond3 += 1;
            }
            worst = worst.max(dev);
        }
    }
    (worst, beyond3 as f64 / checked as f64)
}

fn assert_covariance_close(sample: &[Vec<f64>], target: &[Vec<f64>], count: usize, label: &str) {
    let (worst, frac3) = covariance_deviation(sample, target, count);
    assert!(worst <= 5.0, "{label}: worst covariance deviation {worst:.2} SE");
    assert!(frac3 <= 0.01, "{label}: {:.2}% of entries beyond 3 SE", frac3 * 100.0);
}

/// Dense Cholesky factorization, the independent oracle for the sampler.
fn cholesky_lower(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(s > 0.0, "matrix is not positive definite at {i}");
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

// ---------------------------------------------------------------------------
// Normality machinery for the stable-process criterion

fn normal_cdf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    0.5 * (1.0 + sign * erf)
}

fn ks_distance_standard_normal(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let cdf = normal_cdf(*x);
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    d
}

fn lfsm_batch(params: LfsmParams, n: usize, dt: f64, count: u64, master: u64) -> Vec<Vec<f64>> {
    let gen = Generator::new();
    let req = BatchRequest::new(ProcessParams::Lfsm(params), n, dt, count, SeedScheme::new(master));
    gen.batch(&req).unwrap().into_iter().map(|t| t.values).collect()
}

// ---------------------------------------------------------------------------
// Criteria

#[test]
fn c01_fgn_covariance_matches_toeplitz_and_cholesky_oracle() {
    let t0 = Instant::now();
    let n = 64;
    let count = 5000usize;
    let gen = Generator::new();
    for &h in &[0.3, 0.7] {
        let target = toeplitz(h, n);

        let seeds = SeedScheme::new(101);
        let paths: Vec<Vec<f64>> = (0..count)
            .map(|i| gen.fgn_sampler().sample(h, n, &mut seeds.stream(i as u64)).unwrap())
            .collect();
        assert_covariance_close(&empirical_covariance(&paths), &target, count, "circulant");

        let l = cholesky_lower(&target);
        let seeds = SeedScheme::new(202);
        let oracle: Vec<Vec<f64>> = (0..count)
            .map(|i| {
                let mut rng = seeds.stream(i as u64);
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n).map(|r| (0..=r).map(|c| l[r][c] * z[c]).sum()).collect()
            })
            .collect();
        assert_covariance_close(&empirical_covariance(&oracle), &target, count, "cholesky");
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 120.0, "covariance check took {secs:.1} s");
    println!("PASS covariance: circulant and Cholesky both inside the SE band, {secs:.1} s");
}

#[test]
fn c02_one_hundred_thousand_paths_generate_in_time() {
    let t0 = Instant::now();
    let gen = Generator::new();
    let total = 100_000u64;
    let chunk = 12_500u64;
    let mut checksum = 0.0f64;
    let mut req = BatchRequest::new(
        ProcessParams::Fbm(FbmParams { hurst: 0.5 }),
        1600,
        1.0 / 1600.0,
        chunk,
        SeedScheme::new(2),
    );
    // Per-path uniform labels defeat the spectrum cache, which is exactly
    // the workload the training pipeline generates.
    req.hurst_sampling = HurstSampling::Uniform;
    let mut produced = 0u64;
    while produced < total {
        req.first_index = produced;
        let batch = gen.batch(&req).unwrap();
        for t in &batch {
            checksum += t.values[t.values.len() - 1];
        }
        produced += batch.len() as u64;
    }
    let secs = t0.elapsed().as_secs_f64();
    assert_eq!(produced, total);
    assert!(checksum.is_finite());
    assert!(secs < 300.0, "generated {total} paths in {secs:.1} s, expected under 300");
    println!("PASS throughput: {total} paths of length 1600 in {secs:.1} s ({:.0}/s)", total as f64 / secs);
}

#[test]
fn c03_higuchi_error_matches_reference_levels() {
    let t0 = Instant::now();
    let est = ClassicalEstimator::parse("higuchi").unwrap();
    for (li, (n, reference)) in [(400usize, 0.0445), (1600, 0.0246), (6400, 0.0152)]
        .into_iter()
        .enumerate()
    {
        let (paths, labels) = labeled_paths(n, 1000, 300 + li as u64);
        let r = classical_rmse(est, &paths, &labels);
        assert!(
            (r - reference).abs() <= 0.25 * reference,
            "higuchi at n={n}: rmse {r:.4} vs reference {reference}"
        );
        println!("higuchi n={n}: rmse {r:.4} (reference {reference})");
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "higuchi regression took {secs:.1} s");
    println!("PASS higuchi calibration in {secs:.1} s");
}

#[test]
fn c04_trained_network_beats_rescaled_range_and_tracks_higuchi() {
    let net = net400();
    let t0 = Instant::now();
    let (paths, labels) = labeled_paths(400, 2000, 404);
    let preds = net.model.estimate_many(&paths).unwrap();
    let net_rmse = rmse(&preds, &labels);
    let rs_rmse = classical_rmse(ClassicalEstimator::parse("rs").unwrap(), &paths, &labels);
    let hig_rmse = classical_rmse(ClassicalEstimator::parse("higuchi").unwrap(), &paths, &labels);
    let eval_secs = t0.elapsed().as_secs_f64();

    assert!(net_rmse <= 0.045, "network rmse {net_rmse:.4} above 0.045");
    assert!(net_rmse < rs_rmse, "network {net_rmse:.4} not better than R/S {rs_rmse:.4}");
    assert!(
        net_rmse <= 1.5 * hig_rmse,
        "network {net_rmse:.4} beyond 1.5x higuchi {hig_rmse:.4}"
    );
    let budget = net.train_secs + eval_secs;
    assert!(budget < 7200.0, "training plus evaluation took {budget:.0} s");
    println!(
        "PASS training: network {net_rmse:.4}, rs {rs_rmse:.4}, higuchi {hig_rmse:.4}, {budget:.0} s"
    );
}

#[test]
fn c05_analytic_gradients_match_finite_differences() {
    const EPS: f64 = 1e-4;
    let t0 = Instant::now();
    let gen = Generator::new();
    let seeds = SeedScheme::new(31);
    let paths: Vec<Vec<f64>> = [0.3, 0.7]
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            gen.fbm(&FbmParams { hurst: h }, 21, 1.0 / 20.0, seeds, i as u64).unwrap().values
        })
        .collect();
    let stds: Vec<StandardizedIncrements> =
        paths.iter().map(|p| StandardizedIncrements::new(p).unwrap()).collect();
    let steps = stds[0].len();
    let inputs = pack_sequences::<f64>(&stds).unwrap();

    let arch = Architecture { input_dim: 1, lstm_layers: 2, hidden: 8, head_dims: [8, 4, 1] };
    let model = LstmModel::<f64>::init(arch, 11).unwrap();
    let mut worst = 0.0f64;
    // Both losses: the squared branch is smooth, the absolute branch has a
    // kink that the chosen targets keep away from the raw outputs.
    for (kind, targets) in [(LossKind::Mse, vec![0.3, 0.7]), (LossKind::Mae, vec![-0.25, 0.75])] {
        let loss_of = |m: &LstmModel<f64>| {
            let preds = m.forward_packed(inputs.view(), steps).unwrap();
            let b = targets.len() as f64;
            match kind {
                LossKind::Mse => {
                    preds.iter().zip(&targets).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / b
                }
                LossKind::Mae => {
                    preds.iter().zip(&targets).map(|(p, y)| (p - y).abs()).sum::<f64>() / b
                }
            }
        };
        let (_, grads) = loss_and_gradients(&model, inputs.view(), steps, &targets, kind).unwrap();
        let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
        let mut probe = model.clone();
        for (slot, an_slice) in analytic.iter().enumerate() {
            for i in 0..an_slice.len() {
                let orig = probe.param_slices()[slot][i];
                probe.param_slices_mut()[slot][i] = orig + EPS;
                let up = loss_of(&probe);
                probe.param_slices_mut()[slot][i] = orig - EPS;
                let down = loss_of(&probe);
                probe.param_slices_mut()[slot][i] = orig;
                let fd = (up - down) / (2.0 * EPS);
                let an = an_slice[i];
                let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-3);
                worst = worst.max(rel);
                assert!(
                    rel < 1e-4,
                    "{kind}: slot {slot} index {i}: analytic {an:e} vs finite difference {fd:e}"
                );
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "gradient check took {secs:.1} s");
    println!("PASS gradients: worst relative error {worst:.2e} in {secs:.1} s");
}

#[test]
fn c06_estimators_ignore_shift_scale_and_linear_trend() {
    let net = &net400().model;
    let n = 400usize;
    let dt = 1.0 / n as f64;
    let (paths, _) = labeled_paths(n, 100, 606);

    let base: Vec<f64> = net.estimate_many(&paths).unwrap();
    let mut worst_net = 0.0f64;
    for (pi, p) in paths.iter().enumerate() {
        for a in [0.5, 3.0] {
            for b in [-2.0, 10.0] {
                for c in [-0.1, 0.2] {
                    let tx: Vec<f64> = p
                        .iter()
                        .enumerate()
                        .map(|(i, v)| a * v + b + c * (i as f64 * dt))
                        .collect();
                    let e = net.estimate(&tx).unwrap();
                    let dev = (e - base[pi]).abs();
                    worst_net = worst_net.max(dev);
                    assert!(
                        dev <= 1e-6,
                        "network output moved by {dev:e} under a={a} b={b} c={c}"
                    );
                }
            }
        }
    }

    let mut worst_classical = 0.0f64;
    for est in ClassicalEstimator::ALL {
        for p in &paths {
            let base = est.estimate(p, false).unwrap().estimate;
            for a in [0.5, 3.0] {
                for b in [-2.0, 10.0] {
                    let tx: Vec<f64> = p.iter().map(|v| a * v + b).collect();
                    let e = est.estimate(&tx, false).unwrap().estimate;
                    let dev = (e - base).abs();
                    worst_classical = worst_classical.max(dev);
                    assert!(
                        dev <= 1e-9,
                        "{} moved by {dev:e} under a={a} b={b}",
                        est.name()
                    );
                }
            }
        }
    }
    println!(
        "PASS invariance: network worst {worst_net:.1e}, classical worst {worst_classical:.1e}"
    );
}

#[test]
fn c07_fou_reduces_to_fbm_and_reaches_stationary_variance() {
    let gen = Generator::new();

    // Zero mean reversion must be algebraically the rescaled driving path,
    // down to the last bit, for either integration scheme.
    let (n, dt) = (400usize, 1.0 / 400.0);
    for &h in &[0.3, 0.7] {
        let params = FouParams { hurst: h, kappa: 0.0, theta: 5.0, sigma: 1.7, x0: -2.0 };
        let fbm = gen.fbm(&FbmParams { hurst: h }, n, dt, SeedScheme::new(707), 9).unwrap();
        for scheme in [FouScheme::EulerMaruyama, FouScheme::ExponentialEuler] {
            let fou = gen.fou(&params, scheme, n, dt, SeedScheme::new(707), 9).unwrap();
            for k in 0..n {
                let expect = params.x0 + params.sigma * fbm.values[k];
                assert!(
                    fou.values[k] == expect,
                    "H={h} {scheme:?} k={k}: {} != {expect}",
                    fou.values[k]
                );
            }
        }
    }

    // With Brownian driving noise the terminal distribution after 15
    // relaxation times is the stationary one: variance sigma^2 / (2 kappa).
    let params = FouParams { hurst: 0.5, kappa: 2.0, theta: 0.3, sigma: 1.5, x0: 0.3 };
    let (n, dt) = (3001usize, 0.0025);
    let req = BatchRequest::new(
        ProcessParams::Fou(params),
        n,
        dt,
        12_000,
        SeedScheme::new(708),
    );
    let batch = gen.batch(&req).unwrap();
    let last: Vec<f64> = batch.iter().map(|t| t.values[n - 1]).collect();
    let v = variance(&last);
    let target = params.sigma * params.sigma / (2.0 * params.kappa);
    let relative = (v / target - 1.0).abs();
    assert!(
        relative <= 0.05,
        "terminal variance {v:.4} vs {target:.4} ({:.1}% off)",
        relative * 100.0
    );
    println!(
        "PASS mean reversion: bitwise reduction holds, terminal variance {v:.4} vs {target} ({:.1}% off)",
        relative * 100.0
    );
}

#[test]
fn c08_stable_paths_recover_gaussian_limit_and_expose_network_bias() {
    // At the Gaussian endpoint of the stability family the first
    // increments across paths are iid normal.
    let params = LfsmParams { hurst: 0.7, alpha: 2.0, scale: 1.0 };
    let paths = lfsm_batch(params, 16, 1.0, 600, 801);
    let incs: Vec<f64> = paths.iter().map(|v| v[1] - v[0]).collect();
    let m = mean(&incs);
    let sd = variance(&incs).sqrt();
    let standardized: Vec<f64> = incs.iter().map(|x| (x - m) / sd).collect();
    let d = ks_distance_standard_normal(&standardized);
    let threshold = 1.63 / (standardized.len() as f64).sqrt();
    assert!(d < threshold, "KS distance {d:.4} over {threshold:.4}");

    // Higuchi stays calibrated on heavy-tailed paths.
    let est = ClassicalEstimator::parse("higuchi").unwrap();
    let n = 1600usize;
    for (alpha, h) in [(1.5, 0.8), (1.8, 0.7)] {
        let params = LfsmParams { hurst: h, alpha, scale: 1.0 };
        let paths = lfsm_batch(params, n, 1.0 / n as f64, 200, 802);
        let ests: Vec<f64> =
            paths.iter().map(|p| est.estimate(p, false).unwrap().estimate).collect();
        let m = mean(&ests);
        assert!(
            (m - h).abs() <= 0.07,
            "higuchi mean {m:.3} vs H={h} at alpha={alpha}"
        );
        println!("higuchi on stable paths alpha={alpha}: mean {m:.3} (true {h})");
    }

    // The Gaussian-trained network reads heavy tails as extra roughness:
    // its mean estimate sits below the true exponent, and the shortfall
    // grows as the tails get heavier.
    let net = &net400().model;
    let h = 0.7;
    let mut gaps = Vec::new();
    for alpha in [1.8, 1.5, 1.2] {
        let params = LfsmParams { hurst: h, alpha, scale: 1.0 };
        let paths = lfsm_batch(params, 400, 1.0 / 400.0, 200, 803);
        let preds = net.estimate_many(&paths).unwrap();
        let m = mean(&preds);
        assert!(m < h, "network mean {m:.3} not below true {h} at alpha={alpha}");
        gaps.push(h - m);
        println!("network on stable paths alpha={alpha}: mean {m:.3}, gap {:.3}", h - m);
    }
    assert!(
        gaps[0] < gaps[1] && gaps[1] < gaps[2],
        "underestimation does not grow with tail weight: {gaps:?}"
    );
    println!("PASS stable-process sanity");
}

#[test]
fn c09_benchmark_matrix_improves_with_evaluation_length() {
    let m400 = &net400().model;
    let m1600 = &net1600().model;

    // Rows are the two desk-trained networks: the shape under test is how
    // a model trained at one length behaves across evaluation lengths,
    // including length 100, which is below the admissible range of some
    // classical estimators.
    let estimators: Vec<NamedEstimator<'_>> = vec![
        NamedEstimator {
            name: "net400".into(),
            estimate: Box::new(move |p| m400.estimate(p)),
        },
        NamedEstimator {
            name: "net1600".into(),
            estimate: Box::new(move |p| m1600.estimate(p)),
        },
    ];

    let spec = MatrixSpec::new(
        ProcessParams::Fbm(FbmParams { hurst: 0.5 }),
        vec![100, 400, 1600],
        2000,
        SeedScheme::new(909),
    );
    let matrix = benchmark_matrix(&Generator::new(), &estimators, &spec).unwrap();

    for row in &matrix.rows {
        let rmses: Vec<f64> = row.cells.iter().map(|c| c.rmse).collect();
        println!(
            "{}: {}",
            row.name,
            rmses.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ")
        );
        for w in rmses.windows(2) {
            assert!(
                w[1] <= w[0],
                "{}: rmse rises from {:.4} to {:.4} with more data",
                row.name,
                w[0],
                w[1]
            );
        }
        let worst = rmses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(worst, rmses[0], "{}: shortest evaluation is not the worst", row.name);
    }
    println!("PASS benchmark matrix shape");
}

#[test]
fn c10_error_report_matches_naive_recomputation() {
    let pairs: [(f64, f64); 12] = [
        (0.31, 0.30),
        (0.52, 0.50),
        (0.18, 0.20),
        (0.74, 0.70),
        (0.66, 0.65),
        (0.09, 0.10),
        (0.43, 0.40),
        (0.88, 0.90),
        (0.27, 0.25),
        (0.55, 0.60),
        (0.012, 0.010),
        (0.95, 0.85),
    ];
    let r = compute_report(&pairs).unwrap();

    let signed: Vec<f64> = pairs.iter().map(|(e, t)| e - t).collect();
    let abs: Vec<f64> = signed.iter().map(|d| d.abs()).collect();
    let n = pairs.len() as f64;
    let naive_rmse = (abs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let naive_mae = abs.iter().sum::<f64>() / n;
    let naive_max = abs.iter().cloned().fold(0.0f64, f64::max);
    let mut sorted_abs = abs.clone();
    sorted_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rel: Vec<f64> = pairs
        .iter()
        .filter(|(_, t)| t.abs() >= REL_TRUTH_THRESHOLD)
        .map(|(e, t)| (e - t).abs() / t.abs() * 100.0)
        .collect();
    let naive_mre = rel.iter().sum::<f64>() / rel.len() as f64;
    rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let moments = |xs: &[f64]| {
        let m = mean(xs);
        let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / xs.len() as f64;
        m3 / m2.powf(1.5)
    };

    let close = |a: f64, b: f64, what: &str| {
        assert!((a - b).abs() <= 1e-12, "{what}: {a} vs naive {b}");
    };
    assert_eq!(r.count, 12);
    assert_eq!(r.used_relative, 11);
    close(r.rmse, naive_rmse, "rmse");
    close(r.mae, naive_mae, "mae");
    close(r.max_abs, naive_max, "max_abs");
    close(r.abs_q50, quantile_sorted(&sorted_abs, 0.5), "abs_q50");
    close(r.abs_q95, quantile_sorted(&sorted_abs, 0.95), "abs_q95");
    close(r.mre_percent, naive_mre, "mre");
    close(r.rel_q50_percent, quantile_sorted(&rel, 0.5), "rel_q50");
    close(r.rel_q95_percent, quantile_sorted(&rel, 0.95), "rel_q95");
    close(r.skewness_signed, moments(&signed), "skewness_signed");
    close(r.skewness_abs, moments(&abs), "skewness_abs");

    // The interval construction is plain clipped arithmetic and must be
    // reproduced digit for digit.
    assert_eq!(confidence_interval(0.9312, 0.1280), (0.8032, 1.0));
    println!("PASS report metrics and interval arithmetic");
}

#[test]
fn c11_cli_outputs_are_identical_across_thread_counts() {
    let bin = env!("CARGO_BIN_EXE_fraclab");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().expect("binary runs");
        assert!(
            out.status.success(),
            "fraclab {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let path = |s: &str| dir.path().join(s);
    let arg = |p: &std::path::PathBuf| p.to_str().unwrap().to_string();

    for (threads, tag) in [("1", "a"), ("3", "b")] {
        let gen_dir = path(&format!("gen-{tag}"));
        run(&[
            "generate", "--threads", threads, "--n", "256", "--count", "20",
            "--seed", "99", "--out-dir", &arg(&gen_dir),
        ]);
        let train_dir = path(&format!("train-{tag}"));
        run(&[
            "train", "--threads", threads, "--length", "64", "--epochs", "1",
            "--sequences-per-epoch", "64", "--batch-size", "16",
            "--validation-batch-size", "16", "--validation-batches", "1",
            "--lstm-layers", "1", "--hidden", "8", "--head1", "8", "--head2", "4",
            "--seed", "5", "--out-dir", &arg(&train_dir),
        ]);
        let eval_dir = path(&format!("eval-{tag}"));
        run(&[
            "evaluate", "--threads", threads, "--estimators", "higuchi,madogram",
            "--eval-lengths", "100", "--count", "40", "--seed", "21",
            "--out-dir", &arg(&eval_dir),
        ]);
    }

    let identical = |a: &str, b: &str, f: &str| {
        let x = std::fs::read(path(a).join(f)).unwrap();
        let y = std::fs::read(path(b).join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between thread counts");
    };
    identical("gen-a", "gen-b", "trajectories.bin");
    identical("train-a", "train-b", "model.frhn");
    identical("train-a", "train-b", "model-final.frhn");
    identical("train-a", "train-b", "history.csv");
    for f in ["report.csv", "report.txt", "pairs.jsonl", "diagnostics.csv", "localized.csv"] {
        identical("eval-a", "eval-b", f);
    }
    println!("PASS determinism across thread counts");
}
