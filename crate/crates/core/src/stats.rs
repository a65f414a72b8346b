//! Normal, F and Student-t helpers used by EI, ANOVA and Lenth's method.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::{beta::beta_reg, erf::erfc};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// P(F ≤ x) for an F(df1, df2) variable, via the regularized incomplete beta.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let t = df1 * x / (df1 * x + df2);
    beta_reg(0.5 * df1, 0.5 * df2, t).clamp(0.0, 1.0)
}

/// Upper tail P(F > x). Computed from the complementary beta so small
/// p-values keep their relative precision.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let u = df2 / (df2 + df1 * x);
    beta_reg(0.5 * df2, 0.5 * df1, u).clamp(0.0, 1.0)
}

/// Quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("df must be positive")
        .inverse_cdf(p)
}
