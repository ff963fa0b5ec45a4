use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use traindesign::admissibility::{ar1_noise_spectrum, iadm_channel_mse, iadm_equalization, jce_exact, SnrRegime};
use traindesign::channel_model::{exponential_corr, random_hpd, sample_channel, standard_complex_normal};
use traindesign::designs::{
    guaranteed_constant, heuristic_ordering, optimal_ordering_exhaustive, solve_adgpp, solve_asgpp, solve_avg_mmse,
    solve_avg_mvu, solve_theorem1, AvgMmseMode,
};
use traindesign::matalg::{c64, identity};
use traindesign::{AsgppCase, KroneckerCov, LinearEstimator};

fn stats(n_t: usize, n_r: usize, b: usize) -> (KroneckerCov, KroneckerCov) {
    let r = c64::new(0.9, 0.0);
    let chan = KroneckerCov::new(exponential_corr(n_t, r).unwrap(), exponential_corr(n_r, r).unwrap()).unwrap();
    let noise = KroneckerCov::new(exponential_corr(b, r).unwrap(), exponential_corr(n_r, r).unwrap()).unwrap();
    (chan, noise)
}

fn designs(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = c.benchmark_group("designs");
    for n in [2usize, 4, 8] {
        let a = random_hpd(n + 2, 0.1, &mut rng);
        let b = random_hpd(n, 0.1, &mut rng);
        g.bench_with_input(BenchmarkId::new("least_energy", n), &n, |bch, _| {
            bch.iter(|| solve_theorem1(black_box(&a), black_box(&b)).unwrap())
        });
    }
    let (chan, noise) = stats(6, 6, 8);
    let adm = iadm_channel_mse(6, 6);
    let k = guaranteed_constant(1.0, 0.99, 6, 6).unwrap();
    g.bench_function("deterministic_guaranteed_6x6", |b| {
        b.iter(|| solve_adgpp(black_box(&noise), &adm, k).unwrap())
    });
    g.bench_function("stochastic_guaranteed_6x6", |b| {
        b.iter(|| solve_asgpp(black_box(&noise), &chan, &adm, k, AsgppCase::RReqSR).unwrap())
    });
    g.bench_function("average_unbiased_6x6", |b| {
        b.iter(|| solve_avg_mvu(black_box(&adm.i_t), noise.left(), 10.0).unwrap())
    });
    g.bench_function("average_bayesian_6x6", |b| {
        b.iter(|| solve_avg_mmse(black_box(&noise), &chan, &adm, 10.0, AvgMmseMode::ItIdentity).unwrap())
    });
    g.finish();
}

fn ordering(c: &mut Criterion) {
    let mut g = c.benchmark_group("ordering");
    for (n_t, b) in [(2usize, 3usize), (3, 4), (4, 5)] {
        let lt: Vec<f64> = (0..n_t).map(|i| 0.3 + i as f64).collect();
        let lq: Vec<f64> = (0..b).map(|i| 0.2 + 0.7 * i as f64).collect();
        g.bench_with_input(BenchmarkId::new("exhaustive", format!("{n_t}x{b}")), &(), |bch, _| {
            bch.iter(|| optimal_ordering_exhaustive(black_box(&lt), black_box(&lq), 5.0).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("heuristic", format!("{n_t}x{b}")), &(), |bch, _| {
            bch.iter(|| heuristic_ordering(black_box(&lt), black_box(&lq), 5.0).unwrap())
        });
    }
    g.finish();
}

fn estimation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (chan, noise) = stats(4, 2, 6);
    let p = standard_complex_normal(4, 6, &mut rng);
    let h = sample_channel(&chan, &mut rng).h;
    let y = &h * &p + standard_complex_normal(2, 6, &mut rng);
    let mut g = c.benchmark_group("estimators");
    g.bench_function("unbiased_build_and_apply", |b| {
        b.iter(|| LinearEstimator::mvu(black_box(&p), &noise).unwrap().apply(&y).unwrap())
    });
    g.bench_function("bayesian_build_and_apply", |b| {
        b.iter(|| LinearEstimator::mmse(black_box(&p), &noise, &chan).unwrap().apply(&y).unwrap())
    });
    let mvu = LinearEstimator::mvu(&p, &noise).unwrap();
    g.bench_function("unbiased_apply", |b| b.iter(|| mvu.apply(black_box(&y)).unwrap()));
    g.finish();

    let spec = ar1_noise_spectrum(&identity(2), c64::new(0.9, 0.0), 1.0).unwrap();
    let h_tilde = standard_complex_normal(2, 4, &mut rng).scale(1e-2);
    let mut g = c.benchmark_group("equalization");
    g.bench_function("exact_cost_512", |b| {
        b.iter(|| jce_exact(black_box(&h), &h_tilde, 31.6, &spec).unwrap())
    });
    g.bench_function("high_snr_weighting", |b| {
        b.iter(|| iadm_equalization(black_box(&h), 31.6, &spec, SnrRegime::High).unwrap())
    });
    g.finish();
}

criterion_group!(benches, designs, ordering, estimation);
criterion_main!(benches);
