use fbdesign::criteria::{
    beta_hat, conditional_mse, mean_mse, normal_mixture, squared_error, summarize, tail_q, var_mse,
};
use fbdesign::designs::{build_design, greedy_descent, sample_crfb, ImbalanceMetric, SearchConfig};
use fbdesign::rng::{stream, Domain};
use fbdesign::{
    validate_design, Allocation, CovariateMatrix, DesignDistribution, DesignKind, PairSet,
    ResponseSpec,
};
use proptest::prelude::*;

/// A random mirror-symmetric design: up to `k` distinct balanced allocations,
/// each listed with its negation at equal weight.
fn mirror_design(half: usize, k: usize, seed: u64, weights: &[f64]) -> DesignDistribution {
    let n = 2 * half;
    let mut rng = stream(seed, Domain::Custom(1), 0);
    let mut allocations = Vec::new();
    let mut probs = Vec::new();
    for &weight in weights.iter().take(k) {
        let w = sample_crfb(n, &mut rng);
        if allocations.contains(&w) {
            continue;
        }
        allocations.push(w.negated());
        allocations.push(w);
        probs.extend([weight, weight]);
    }
    let total: f64 = probs.iter().sum();
    let probs = probs.iter().map(|p| p / total).collect();
    DesignDistribution::explicit(DesignKind::Explicit, allocations, probs).unwrap()
}

fn vec_f64(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

fn sized_vectors() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|half| (Just(half), vec_f64(2 * half), vec_f64(2 * half)))
}

fn standard_design(kind_idx: usize, x: &[f64]) -> DesignDistribution {
    let kind = [DesignKind::Crfb, DesignKind::Pb, DesignKind::Pm][kind_idx];
    let x = CovariateMatrix::from_column(x).unwrap();
    build_design(kind, &x, &SearchConfig::new(1, 0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn mirror_designs_are_valid_and_unbiased(
        (half, f, z) in sized_vectors(),
        k in 1usize..5,
        seed in any::<u64>(),
        weights in prop::collection::vec(0.05f64..1.0, 5),
        beta in -5.0f64..5.0,
    ) {
        let d = mirror_design(half, k, seed, &weights);
        prop_assert!(validate_design(&d, 2 * half).unwrap().passed());
        let s = d.support().unwrap();
        let mean: f64 = s.allocations.iter().zip(&s.probs).map(|(w, p)| {
            let y: Vec<f64> = (0..2 * half)
                .map(|i| beta * f64::from(w.as_slice()[i]) + f[i] + z[i])
                .collect();
            p * beta_hat(w, &y).unwrap()
        }).sum();
        prop_assert!((mean - beta).abs() < 1e-12);
    }

    #[test]
    fn conditional_mse_is_support_average(
        (half, f, z) in sized_vectors(),
        k in 1usize..5,
        seed in any::<u64>(),
        weights in prop::collection::vec(0.05f64..1.0, 5),
        beta in -5.0f64..5.0,
    ) {
        let d = mirror_design(half, k, seed, &weights);
        let sigma = d.covariance().unwrap();
        let s = d.support().unwrap();
        let avg: f64 = s.allocations.iter().zip(&s.probs)
            .map(|(w, p)| p * squared_error(w, beta, &f, &z))
            .sum();
        prop_assert!((conditional_mse(&f, &z, &sigma).unwrap() - avg).abs() < 1e-12);
        for i in 0..2 * half {
            prop_assert!((sigma.get(i, i) - 1.0).abs() < 1e-12);
        }
        prop_assert!(sigma.ones_residual() < 1e-10);
    }

    #[test]
    fn rayleigh_quotient_below_lambda_max(
        (_, x, z) in sized_vectors(),
        kind in 0usize..3,
    ) {
        let d = standard_design(kind, &x);
        let sigma = d.covariance().unwrap();
        let norm2: f64 = z.iter().map(|v| v * v).sum();
        prop_assert!(sigma.quad_form(&z) <= sigma.lambda_max() * norm2 + 1e-10 * norm2.max(1.0));
    }

    #[test]
    fn tail_criterion_monotone_in_c(
        (_, x, f) in sized_vectors(),
        kind in 0usize..3,
        sigma_z in 0.0f64..2.0,
        c1 in 0.0f64..5.0,
        dc in 0.0f64..5.0,
    ) {
        let d = standard_design(kind, &x);
        let sigma = d.covariance().unwrap();
        let spec = ResponseSpec::gaussian(1.0, f, sigma_z).unwrap();
        let lo = tail_q(&spec, &sigma, c1).unwrap();
        let hi = tail_q(&spec, &sigma, c1 + dc).unwrap();
        prop_assert!(lo.q <= hi.q);
        if lo.var_mse > 0.0 && dc > 0.0 {
            prop_assert!(lo.q < hi.q);
        }
        prop_assert_eq!(lo.mean_mse, hi.mean_mse);
    }

    #[test]
    fn mixture_moments_are_exact(
        (half, x, f) in sized_vectors(),
        kind in 0usize..3,
        sigma_z in 0.1f64..2.0,
    ) {
        let d = standard_design(kind, &x);
        let sigma = d.covariance().unwrap();
        let n2 = (4 * half * half) as f64;
        let rep = normal_mixture(&f, sigma_z * sigma_z, &sigma).unwrap();
        prop_assert_eq!(rep.total_multiplicity(), 2 * half);
        let spec = ResponseSpec::gaussian(1.0, f.clone(), sigma_z).unwrap();
        let mean = n2 * mean_mse(&f, sigma_z * sigma_z, &sigma).unwrap();
        let var = n2 * n2 * var_mse(&spec, &sigma).unwrap();
        prop_assert!((rep.mean() - mean).abs() <= 1e-9 * mean.max(1.0));
        prop_assert!((rep.variance() - var).abs() <= 1e-9 * var.max(1.0));
    }

    #[test]
    fn greedy_descent_ends_in_local_minimum(
        x in (2usize..=7).prop_flat_map(|h| vec_f64(2 * h)),
        seed in any::<u64>(),
    ) {
        let xm = CovariateMatrix::from_column(&x).unwrap();
        let metric = ImbalanceMetric::new(&xm);
        let start = sample_crfb(x.len(), &mut stream(seed, Domain::Custom(2), 0));
        let run = greedy_descent(&metric, &start);
        prop_assert!(run.allocation.is_balanced());
        prop_assert!(run.final_score <= run.start_score);
        let w = run.allocation.as_slice();
        for i in 0..w.len() {
            for j in 0..w.len() {
                if w[i] > 0 && w[j] < 0 {
                    let mut v = w.to_vec();
                    v.swap(i, j);
                    prop_assert!(metric.score(&v) >= run.final_score - 1e-9 * run.final_score.max(1e-12));
                }
            }
        }
    }

    #[test]
    fn pair_flips_are_balanced_and_antisymmetric(
        perm in (1usize..=8).prop_flat_map(|h| Just((0..2 * h).collect::<Vec<_>>()).prop_shuffle()),
        mask in any::<u64>(),
    ) {
        let pairs = PairSet::new(perm.chunks(2).map(|c| (c[0], c[1])).collect()).unwrap();
        let w = pairs.flip_allocation(mask);
        prop_assert!(w.is_balanced());
        for &(i, j) in pairs.pairs() {
            prop_assert_eq!(w.as_slice()[i], -w.as_slice()[j]);
        }
    }

    #[test]
    fn summary_brackets_sample(samples in prop::collection::vec(0.0f64..10.0, 2..200), q in 0.01f64..0.99) {
        let s = summarize(&samples, q);
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(lo <= s.quantile && s.quantile <= s.max);
        prop_assert!(lo <= s.mean + 1e-12 && s.mean <= s.max + 1e-12);
        if let Some(c) = s.realized_c {
            prop_assert!((c * s.sd - (s.quantile - s.mean)).abs() < 1e-9);
        }
    }

    #[test]
    fn allocation_json_round_trip(half in 1usize..10, seed in any::<u64>()) {
        let w = sample_crfb(2 * half, &mut stream(seed, Domain::Custom(3), 0));
        let text = serde_json::to_string(&w).unwrap();
        prop_assert_eq!(serde_json::from_str::<Allocation>(&text).unwrap(), w);
    }
}
