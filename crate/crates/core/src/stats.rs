//! Floating-point statistics kernels, generic over the scalar type.
//!
//! The two-tailed Student-t p-value goes through the regularized incomplete
//! beta function, evaluated by Lentz's continued fraction to within the
//! scalar's precision (relative tolerance 1e-15 for f64).

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("each group needs at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("slope is undefined when all x values are equal")]
    DegenerateAbscissa,
}

/// ln Γ(z) for z > 0, Lanczos approximation (g = 5, n = 6).
pub fn ln_gamma<F: Real>(z: F) -> F {
    debug_assert!(z > F::zero());
    let coeffs = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut sum = F::from_f64(1.000_000_000_190_015).unwrap();
    for (i, c) in coeffs.iter().enumerate() {
        sum = sum + F::from_f64(*c).unwrap() / (z + F::from_usize(i + 1).unwrap());
    }
    let tmp = z + F::from_f64(5.5).unwrap();
    let tmp = (z + F::from_f64(0.5).unwrap()) * tmp.ln() - tmp;
    tmp + (F::from_f64(2.506_628_274_631_000_5).unwrap() * sum / z).ln()
}

/// Regularized incomplete beta I_x(a, b), a,b > 0, x in [0, 1].
///
/// Continued fraction per Numerical Recipes (modified Lentz), with the
/// symmetry flip for x beyond the convergence midpoint.
pub fn reg_inc_beta<F: Real>(a: F, b: F, x: F) -> F {
    debug_assert!(a > F::zero() && b > F::zero());
    debug_assert!(x >= F::zero() && x <= F::one());
    if x == F::zero() {
        return F::zero();
    }
    if x == F::one() {
        return F::one();
    }

    let one = F::one();
    let two = F::from_f64(2.0).unwrap();
    if x > (a + one) / (a + b + two) {
        return one - reg_inc_beta(b, a, one - x);
    }

    let ln_front = a * x.ln() + b * (one - x).ln() - ln_gamma(a) - ln_gamma(b) + ln_gamma(a + b);
    let front = ln_front.exp();

    let eps = F::convergence_eps();
    let tiny = F::from_f64(1e-30).unwrap();
    let mut c = one;
    let mut d = one - (a + b) * x / (a + one);
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;

    for m in 1..400 {
        let mf = F::from_i32(m).unwrap();
        let two_m = two * mf;

        // even step
        let numer = mf * (b - mf) * x / ((a + two_m - one) * (a + two_m));
        d = one + numer * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = one / d;
        c = one + numer / c;
        if c.abs() < tiny {
            c = tiny;
        }
        h = h * d * c;

        // odd step
        let numer = -(a + mf) * (a + b + mf) * x / ((a + two_m) * (a + two_m + one));
        d = one + numer * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = one / d;
        c = one + numer / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    front * h / a
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn t_two_tailed_p<F: Real>(t: F, df: u32) -> F {
    let dff = F::from_u32(df).unwrap();
    let x = dff / (dff + t * t);
    reg_inc_beta(dff / F::from_f64(2.0).unwrap(), F::from_f64(0.5).unwrap(), x)
}

/// Result of a two-sample comparison; group ordering is fixed so that
/// `sign(t) = sign(mean_b - mean_a)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: u32,
    pub p_two_tailed: f64,
    pub cohens_d: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

pub fn mean<F: Real>(values: &[F]) -> F {
    let sum = values.iter().fold(F::zero(), |acc, v| acc + *v);
    sum / F::from_usize(values.len()).unwrap()
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_sd<F: Real>(values: &[F]) -> F {
    let m = mean(values);
    let ss = values
        .iter()
        .fold(F::zero(), |acc, v| acc + (*v - m) * (*v - m));
    (ss / F::from_usize(values.len() - 1).unwrap()).sqrt()
}

/// Independent two-sample Student t-test with pooled variance.
///
/// df = n_a + n_b - 2; Cohen's d uses the pooled standard deviation. Equal
/// groups degenerate to t = 0, p = 1; zero pooled variance with unequal
/// means is reported explicitly as p = 0 with an infinite statistic.
pub fn two_sample_t(group_a: &[f64], group_b: &[f64]) -> Result<TestResult, StatsError> {
    for g in [group_a, group_b] {
        if g.len() < 2 {
            return Err(StatsError::TooFewValues {
                needed: 2,
                got: g.len(),
            });
        }
    }
    let (n_a, n_b) = (group_a.len(), group_b.len());
    let (mean_a, mean_b) = (mean(group_a), mean(group_b));
    let (sd_a, sd_b) = (sample_sd(group_a), sample_sd(group_b));
    let df = (n_a + n_b - 2) as u32;
    let pooled_var =
        ((n_a - 1) as f64 * sd_a * sd_a + (n_b - 1) as f64 * sd_b * sd_b) / f64::from(df);
    let diff = mean_b - mean_a;

    let (t, p, d) = if pooled_var == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0, 0.0)
        } else {
            let sign = diff.signum();
            (sign * f64::INFINITY, 0.0, sign * f64::INFINITY)
        }
    } else {
        let pooled_sd = pooled_var.sqrt();
        let se = pooled_sd * (1.0 / n_a as f64 + 1.0 / n_b as f64).sqrt();
        let t = diff / se;
        (t, t_two_tailed_p(t, df), diff / pooled_sd)
    };

    Ok(TestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_two_tailed: p,
        cohens_d: d,
        mean_a,
        mean_b,
        sd_a,
        sd_b,
        n_a,
        n_b,
    })
}

/// Ordinary least-squares slope of y on x.
pub fn ols_slope<F: Real>(points: &[(F, F)]) -> Result<F, StatsError> {
    if points.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: points.len(),
        });
    }
    let n = F::from_usize(points.len()).unwrap();
    let mx = points.iter().fold(F::zero(), |a, p| a + p.0) / n;
    let my = points.iter().fold(F::zero(), |a, p| a + p.1) / n;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for (x, y) in points {
        sxx = sxx + (*x - mx) * (*x - mx);
        sxy = sxy + (*x - mx) * (*y - my);
    }
    if sxx == F::zero() {
        return Err(StatsError::DegenerateAbscissa);
    }
    Ok(sxy / sxx)
}

/// Shared display rounding: half away from zero at `decimals` places.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

/// Formats a fraction as a percentage with one decimal, half-up.
pub fn percent_1dp(fraction: f64) -> f64 {
    round_half_up(fraction * 100.0, 1)
}
