//! Distributional checks on the samplers against closed-form moments.

use medqsl_core::linalg::{inner, C64};
use medqsl_core::randgen::{haar_pure, random_density, random_hermitian, RngStream};
use medqsl_core::state::purity;

const SEED: u64 = 0x5eed;

fn first_overlap(dim: usize, draws: u64) -> Vec<f64> {
    (0..draws)
        .map(|k| {
            let psi = haar_pure(dim, &mut RngStream::new(SEED, k)).unwrap();
            psi.pure_vector().unwrap()[0].norm_sqr()
        })
        .collect()
}

#[test]
fn haar_overlap_mean_is_one_over_dim() {
    let xs = first_overlap(2, 100_000);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.01, "mean {mean}");
}

/// Kolmogorov-Smirnov against Beta(1, dim-1), CDF 1 - (1 - x)^(dim-1).
fn ks_statistic(mut xs: Vec<f64>, dim: usize) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |worst: f64, (i, &x)| {
        let cdf = 1.0 - (1.0 - x).powi(dim as i32 - 1);
        let lo = cdf - i as f64 / n;
        let hi = (i + 1) as f64 / n - cdf;
        worst.max(lo).max(hi)
    })
}

#[test]
fn haar_overlap_passes_kolmogorov_smirnov() {
    let n = 100_000;
    // two-sided critical value at level 1e-3
    let critical = (-(0.5e-3f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
    for dim in [2, 3, 5] {
        let d = ks_statistic(first_overlap(dim, n), dim);
        assert!(d <= critical, "dim {dim}: D={d} > {critical}");
    }
}

#[test]
fn haar_overlap_with_any_fixed_state() {
    let phi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let xs: Vec<f64> = (0..100_000u64)
        .map(|k| {
            let psi = haar_pure(2, &mut RngStream::new(SEED + 1, k)).unwrap();
            inner(&phi, psi.pure_vector().unwrap()).norm_sqr()
        })
        .collect();
    let critical = 1.95 / (xs.len() as f64).sqrt();
    assert!(ks_statistic(xs, 2) <= critical);
}

#[test]
fn hilbert_schmidt_mean_purity() {
    // E tr ρ² = (N + K)/(NK + 1) for N = K = dim
    for (dim, draws) in [(2usize, 100_000u64), (3, 20_000)] {
        let n = dim as f64;
        let expected = 2.0 * n / (n * n + 1.0);
        let mean = (0..draws)
            .map(|k| purity(&random_density(dim, &mut RngStream::new(SEED + 2, k)).unwrap()))
            .sum::<f64>()
            / draws as f64;
        assert!(
            (mean - expected).abs() <= 0.01,
            "dim {dim}: {mean} vs {expected}"
        );
    }
}

#[test]
fn gue_trace_mean_vanishes() {
    let draws = 10_000u64;
    let mean = (0..draws)
        .map(|k| {
            let h = random_hermitian(4, &mut RngStream::new(SEED + 3, k)).unwrap();
            h.trace().re / 4.0
        })
        .sum::<f64>()
        / draws as f64;
    assert!(mean.abs() <= 0.02, "{mean}");
}

#[test]
fn draws_are_bit_identical_per_stream() {
    for k in [0u64, 7, 1 << 40] {
        let a = random_density(3, &mut RngStream::new(9, k)).unwrap();
        let b = random_density(3, &mut RngStream::new(9, k)).unwrap();
        let bits = |m: &medqsl_core::linalg::ComplexMatrix| {
            m.as_slice()
                .iter()
                .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(a.matrix()), bits(b.matrix()));
    }
    let x = haar_pure(4, &mut RngStream::new(9, 0)).unwrap();
    let y = haar_pure(4, &mut RngStream::new(9, 1)).unwrap();
    assert_ne!(x.pure_vector(), y.pure_vector());
}
