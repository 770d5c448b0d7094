//! Scalar generalized-Gaussian density and sampling.
//!
//! The density with shape `alpha` and scale `beta` is
//! `p(v) = exp(-|v|^alpha / beta) / (2 beta^(1/alpha) Gamma(1 + 1/alpha))`.
//! All arithmetic is done in the log domain: `beta^(1/alpha)` overflows
//! long before the log of the normalization constant does.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Log normalization constant `log[ 1 / (2 beta^(1/alpha) Gamma(1 + 1/alpha)) ]`.
///
/// Callers must guarantee `alpha > 0` and `beta > 0`.
#[inline]
pub fn ggd_log_norm(alpha: f64, beta: f64) -> f64 {
    -(2.0f64.ln()) - beta.ln() / alpha - ln_gamma(1.0 + 1.0 / alpha)
}

/// Log density of the generalized Gaussian at `v`.
pub fn ggd_log_density(v: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_params(alpha, beta)?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("ggd_log_density input {v}")));
    }
    Ok(ggd_log_norm(alpha, beta) - v.abs().powf(alpha) / beta)
}

/// Draws one generalized-Gaussian variate.
///
/// Uses the gamma representation: `|v|^alpha / beta` is gamma-distributed
/// with shape `1/alpha`, so `v = sign * (beta * g)^(1/alpha)` with
/// `g ~ Gamma(1/alpha, 1)` and a uniform random sign.
pub fn ggd_sample<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    check_params(alpha, beta)?;
    let gamma = Gamma::new(1.0 / alpha, 1.0)
        .map_err(|e| Error::invalid(format!("gamma sampler: {e}")))?;
    let g: f64 = gamma.sample(rng);
    // (beta * g)^(1/alpha) in log space; g = 0 has measure zero but the
    // gamma sampler can return subnormals for small shapes.
    let magnitude = if g > 0.0 {
        ((beta.ln() + g.ln()) / alpha).exp()
    } else {
        0.0
    };
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    Ok(sign * magnitude)
}

fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("GGD shape {alpha} must be positive")));
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::invalid(format!("GGD scale {beta} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(ggd_log_density(0.0, 0.0, 1.0).is_err());
        assert!(ggd_log_density(0.0, -1.0, 1.0).is_err());
        assert!(ggd_log_density(0.0, 1.0, 0.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ggd_sample(0.0, 1.0, &mut rng).is_err());
        assert!(ggd_sample(1.0, -2.0, &mut rng).is_err());
    }

    #[test]
    fn log_density_at_known_points() {
        // alpha=2, beta=1: -log(2 Gamma(1.5)) = -log(sqrt(pi))
        let got = ggd_log_density(0.0, 2.0, 1.0).unwrap();
        assert!((got - (-0.5723649429247001)).abs() < 1e-12, "{got}");
        // alpha=1, beta=1 at v=1: -log 2 - 1
        let got = ggd_log_density(1.0, 1.0, 1.0).unwrap();
        assert!((got - (-1.6931471805599453)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn alpha_two_matches_gaussian() {
        // alpha=2, beta=2 s^2 is N(0, s^2).
        for &s in &[0.3, 1.0, 2.5] {
            let s2 = s * s;
            for &v in &[-3.0, -0.7, 0.0, 0.4, 1.9] {
                let ggd = ggd_log_density(v, 2.0, 2.0 * s2).unwrap();
                let gauss = -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - v * v / (2.0 * s2);
                assert!((ggd - gauss).abs() < 1e-12, "v={v} s={s}: {ggd} vs {gauss}");
            }
        }
    }

    #[test]
    fn sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;

        // alpha=2, beta=2 is N(0,1): empirical variance close to 1.
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = ggd_sample(2.0, 2.0, &mut rng).unwrap();
            sum_sq += v * v;
        }
        let var = sum_sq / n as f64;
        assert!((var - 1.0).abs() < 0.01, "variance {var}");

        // alpha=1, beta=1 is Laplace with E|v| = 1.
        let mut sum_abs = 0.0;
        for _ in 0..n {
            sum_abs += ggd_sample(1.0, 1.0, &mut rng).unwrap().abs();
        }
        let mean_abs = sum_abs / n as f64;
        assert!((mean_abs - 1.0).abs() < 0.01, "mean |v| {mean_abs}");
    }

    #[test]
    fn sampler_sign_balance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000usize;
        for &(alpha, beta) in &[(0.6, 0.5), (1.5, 1.0), (3.0, 4.0)] {
            let pos = (0..n)
                .filter(|_| ggd_sample(alpha, beta, &mut rng).unwrap() > 0.0)
                .count();
            let frac = pos as f64 / n as f64;
            let se = 0.5 / (n as f64).sqrt();
            assert!(
                (frac - 0.5).abs() < 3.0 * se,
                "sign fraction {frac} for alpha={alpha}, beta={beta}"
            );
        }
    }

    /// Adaptive Simpson quadrature, used as an independent check that the
    /// log normalization constant is right.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        let whole = simpson(f, a, b);
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
                + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Integrate out to where the exponent reaches 35, so the truncated
        // tail stays below 1e-9 even for heavy shapes like alpha = 0.6
        // (a fixed window of 50 would clip 1e-4 of mass there).
        for &alpha in &[0.6, 1.0, 1.5, 2.0, 3.0] {
            for &beta in &[0.5, 1.0, 4.0] {
                let upper = (35.0f64 * beta).powf(1.0 / alpha).max(50.0);
                let pdf = move |v: f64| ggd_log_density(v, alpha, beta).unwrap().exp();
                let integral = 2.0 * adaptive_simpson(&pdf, 0.0, upper, 1e-10, 60);
                assert!(
                    (integral - 1.0).abs() < 1e-6,
                    "alpha={alpha} beta={beta}: integral {integral}"
                );
            }
        }
    }

    #[test]
    fn sampler_matches_density_chi_square() {
        // Chi-square goodness of fit on 40 equal-probability-ish bins.
        let alpha = 1.3;
        let beta = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000usize;
        let lo = -6.0;
        let hi = 6.0;
        let bins = 40usize;
        let step = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins + 2];
        for _ in 0..n {
            let v = ggd_sample(alpha, beta, &mut rng).unwrap();
            let idx = if v < lo {
                0
            } else if v >= hi {
                bins + 1
            } else {
                1 + ((v - lo) / step) as usize
            };
            counts[idx.min(bins + 1)] += 1;
        }
        // Expected mass per bin by quadrature of the density.
        let pdf = move |v: f64| ggd_log_density(v, alpha, beta).unwrap().exp();
        let mut chi2 = 0.0;
        let mut dof = 0usize;
        for b in 0..bins {
            let a = lo + b as f64 * step;
            let p = adaptive_simpson(&pdf, a, a + step, 1e-12, 40);
            let expected = p * n as f64;
            if expected >= 5.0 {
                let diff = counts[b + 1] as f64 - expected;
                chi2 += diff * diff / expected;
                dof += 1;
            }
        }
        // Critical value of chi-square at significance 1e-3 is roughly
        // dof + 3.1 sqrt(2 dof) + 10 for the dof range used here.
        let crit = dof as f64 + 3.1 * (2.0 * dof as f64).sqrt() + 10.0;
        assert!(chi2 < crit, "chi2 {chi2} >= {crit} with dof {dof}");
    }
}
