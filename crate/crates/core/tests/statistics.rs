//! Monte Carlo checks against exact expectations.

use qrewind::oracles::sample_random_function;
use qrewind::qpke::{enc, gen, SchemeParams};
use qrewind::statevector::{haar_state, swap_accept_prob, swap_test};
use qrewind::stats::binomial_se;
use qrewind::SimRng;

// χ² upper 0.999 quantiles (scipy.stats.chi2.ppf(0.999, df)).
const CHI2_999_DF7: f64 = 24.321_886_347_856_854;

fn chi_square(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[test]
fn haar_first_moment() {
    for n in 1..=4 {
        let mut rng = SimRng::new(100 + n as u64);
        let samples: Vec<f64> = (0..4000)
            .map(|_| haar_state(n, &mut rng).unwrap().amp(0).norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let d = (1usize << n) as f64;
        // |⟨0|ψ⟩|² ~ Beta(1, d − 1)
        let var = (d - 1.0) / (d * d * (d + 1.0));
        let sigma = (var / samples.len() as f64).sqrt();
        assert!((mean - 1.0 / d).abs() <= 3.0 * sigma, "n={n}: {mean}");
    }
}

#[test]
fn swap_test_frequency() {
    let mut rng = SimRng::new(5);
    let a = haar_state(2, &mut rng).unwrap();
    let b = haar_state(2, &mut rng).unwrap();
    let p = swap_accept_prob(&a, &b).unwrap();
    let n = 10_000;
    let hits = (0..n).filter(|_| swap_test(&a, &b, &mut rng).unwrap().accept).count();
    let freq = hits as f64 / n as f64;
    assert!((freq - p).abs() <= 4.0 * binomial_se(p, n));
}

#[test]
fn random_function_entries_are_uniform() {
    let mut counts = [0usize; 8];
    for s in 0..10_000 {
        let f = sample_random_function(2, 3, &mut SimRng::new(s)).unwrap();
        counts[f.eval(0) as usize] += 1;
    }
    assert!(chi_square(&counts) < CHI2_999_DF7, "{counts:?}");
}

#[test]
fn encryption_x_marginal_is_uniform() {
    let params = SchemeParams::toy(3, 9, 1).unwrap();
    let mut rng = SimRng::new(9);
    let mut counts = [0usize; 8];
    for _ in 0..10_000 {
        let (mut pk, sk) = gen(&params, &mut rng).unwrap();
        let ct = enc(&params, &mut pk, 0, &mut rng).unwrap();
        assert_eq!(params.prf().eval(sk.k0, ct.x), ct.y);
        counts[ct.x as usize] += 1;
    }
    assert!(chi_square(&counts) < CHI2_999_DF7, "{counts:?}");
}
