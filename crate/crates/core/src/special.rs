//! Gamma/Beta evaluation, the kernel constant H_lambda, and the complex
//! dispersion relation Psi_lambda whose root mu+ sets the oscillation
//! exponent of the profile near x = 0.

use alloc::format;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::{Error, Result};

// Godfrey's 15-term Lanczos coefficients, g = 607/128. Good to ~15 digits
// on the right half plane.
const LANCZOS_G: f64 = 4.7421875;
const LANCZOS_C: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

const HALF_LOG_TWO_PI: f64 = 0.91893853320467274178;

/// Principal-branch log-Gamma for Re(z) > 0.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.re <= 0.0 {
        return Err(Error::Domain(format!(
            "ln_gamma_complex requires Re(z) > 0, got {z}"
        )));
    }
    let zz = z - 1.0;
    let mut s = Complex64::new(LANCZOS_C[0], 0.0);
    for (k, &c) in LANCZOS_C.iter().enumerate().skip(1) {
        s += c / (zz + k as f64);
    }
    let t = zz + (LANCZOS_G + 0.5);
    Ok((zz + 0.5) * t.ln() - t + HALF_LOG_TWO_PI + s.ln())
}

/// Log-Gamma for real x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    Ok(ln_gamma_complex(Complex64::new(x, 0.0))?.re)
}

/// Gamma for real arguments, using reflection on the negative axis.
pub fn gamma(x: f64) -> Result<f64> {
    if x > 0.0 {
        return Ok(ln_gamma(x)?.exp());
    }
    if x == x.floor() {
        return Err(Error::Domain(format!("gamma pole at x = {x}")));
    }
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    let s = (PI * x).sin();
    Ok(PI / (s * ln_gamma(1.0 - x)?.exp()))
}

/// Classical Beta function B(p, q) = Gamma(p)Gamma(q)/Gamma(p+q), p, q > 0.
pub fn beta_function(p: f64, q: f64) -> Result<f64> {
    if p <= 0.0 || q <= 0.0 {
        return Err(Error::Domain(format!(
            "beta_function requires positive arguments, got ({p}, {q})"
        )));
    }
    Ok((ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?).exp())
}

/// Beta with complex second argument, defined through log-Gamma on the
/// principal branch. Requires Re(q) > 0.
pub fn beta_complex(p: f64, q: Complex64) -> Result<Complex64> {
    if p <= 0.0 {
        return Err(Error::Domain(format!("beta_complex requires p > 0, got {p}")));
    }
    let lg = ln_gamma_complex(Complex64::new(p, 0.0))? + ln_gamma_complex(q)?
        - ln_gamma_complex(q + p)?;
    Ok(lg.exp())
}

/// The constant H_lambda = lambda / B(1-lambda, 1-lambda).
pub fn h_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(lambda / beta_function(1.0 - lambda, 1.0 - lambda)?)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda <= 0.0 || lambda >= 0.5 {
        return Err(Error::Domain(format!(
            "lambda must lie in (0, 1/2), got {lambda}"
        )));
    }
    Ok(())
}

/// The dispersion function
/// Psi_lambda(mu) = (lambda - mu) B(1-lambda, 1-lambda)
///                - (2 lambda - mu) B(1-lambda, 1-lambda+mu).
pub fn psi(lambda: f64, mu: Complex64) -> Result<Complex64> {
    let q = Complex64::new(1.0 - lambda, 0.0) + mu;
    if q.re <= 0.0 {
        return Err(Error::Domain(format!(
            "psi requires Re(1 - lambda + mu) > 0; pole region at mu = {mu}"
        )));
    }
    let b0 = beta_function(1.0 - lambda, 1.0 - lambda)?;
    let b1 = beta_complex(1.0 - lambda, q)?;
    Ok((Complex64::new(lambda, 0.0) - mu) * b0 - (Complex64::new(2.0 * lambda, 0.0) - mu) * b1)
}

/// Newton iteration for the root mu+ of Psi_lambda with positive imaginary
/// part, seeded at lambda/2 + i sqrt(lambda). Residual target 1e-13, step
/// damping 1/2 whenever the residual would not decrease.
pub fn dispersion_root(lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let mut mu = Complex64::new(0.5 * lambda, lambda.sqrt());
    let mut res = psi(lambda, mu)?;
    for _ in 0..100 {
        if res.norm() < 1e-13 {
            return Ok(mu);
        }
        let h = 1e-7 * (1.0 + mu.norm());
        let fp = psi(lambda, mu + h)?;
        let fm = psi(lambda, mu - h)?;
        let deriv = (fp - fm) / (2.0 * h);
        let mut step = res / deriv;
        // damped Newton: halve until the residual decreases
        let mut accepted = false;
        for _ in 0..30 {
            let cand = mu - step;
            if cand.im <= 0.0 || cand.re + 1.0 - lambda <= 0.0 {
                step *= 0.5;
                continue;
            }
            let cand_res = psi(lambda, cand)?;
            if cand_res.norm() < res.norm() {
                mu = cand;
                res = cand_res;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res.norm() < 1e-12 {
        Ok(mu)
    } else {
        Err(Error::Numerical(format!(
            "dispersion_root did not converge: last iterate {mu}, residual {:e}",
            res.norm()
        )))
    }
}

/// Model constants derived from lambda: the kernel constant H_lambda, the
/// dispersion root mu+ = beta + i alpha, and the upper end of the
/// fundamental shooting interval [1, exp(2 pi beta / alpha)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub h_lambda: f64,
    pub mu_plus: Complex64,
    /// Im(mu+), oscillation frequency in log x.
    pub alpha: f64,
    /// Re(mu+), amplitude growth rate in log x.
    pub beta: f64,
    /// exp(2 pi beta / alpha); solutions are indexed by K in [1, this).
    pub k_interval_upper: f64,
}

impl ModelParams {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let h = h_lambda(lambda)?;
        let mu = dispersion_root(lambda)?;
        let alpha = mu.im;
        let beta = mu.re;
        Ok(ModelParams {
            lambda,
            h_lambda: h,
            mu_plus: mu,
            alpha,
            beta,
            k_interval_upper: (2.0 * PI * beta / alpha).exp(),
        })
    }

    /// H_lambda / (lambda (1 - lambda)), the coefficient of UV in the
    /// fixed-point equation for H.
    pub fn uv_coeff(&self) -> f64 {
        self.h_lambda / (self.lambda * (1.0 - self.lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_trivial_identities() {
        assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta_function(0.5, 0.5).unwrap() - PI).abs() < 1e-13 * PI);
    }

    #[test]
    fn beta_rejects_nonpositive() {
        assert!(matches!(beta_function(-1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(beta_function(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn h_lambda_small_lambda_slope() {
        // B(1-l, 1-l) ~ 1 + 2l, so h_lambda(l)/l -> 1
        for l in [1e-4, 1e-5, 1e-6] {
            let r = h_lambda(l).unwrap() / l;
            assert!((r - 1.0).abs() < 3.0 * l, "l={l} ratio={r}");
        }
        // B(0.75, 0.75) > 1 forces H_lambda < lambda
        let h = h_lambda(0.25).unwrap();
        assert!(h > 0.0 && h < 0.25);
    }

    #[test]
    fn psi_at_zero_and_lambda_zero_limit() {
        let l = 0.17;
        let b = beta_function(1.0 - l, 1.0 - l).unwrap();
        let v = psi(l, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v - Complex64::new(-l * b, 0.0)).norm() < 1e-14);

        // lambda -> 0: psi -> -mu^2/(1+mu)
        let mu = Complex64::new(0.3, 0.4);
        let v = psi(1e-12, mu).unwrap();
        let closed = -mu * mu / (1.0 + mu);
        assert!((v - closed).norm() < 1e-9);
    }

    #[test]
    fn psi_conjugate_symmetry() {
        let l = 0.21;
        let mu = Complex64::new(0.12, 0.37);
        let a = psi(l, mu).unwrap();
        let b = psi(l, mu.conj()).unwrap();
        assert!((a.conj() - b).norm() < 1e-14);
    }

    #[test]
    fn dispersion_root_small_lambda_expansion() {
        // mu+ = lambda/2 + i sqrt(lambda) + O(lambda^{3/2})
        let mu = dispersion_root(0.01).unwrap();
        let seed = Complex64::new(0.005, 0.1);
        assert!((mu - seed).norm() < 5.0 * 0.01f64.powf(1.5));
        assert!(psi(0.01, mu).unwrap().norm() < 1e-12);
    }

    #[test]
    fn dispersion_root_quadrant_and_interval() {
        for i in 0..50 {
            let l = 0.3 * (i as f64 + 1.0) / 50.0;
            let p = ModelParams::new(l).unwrap();
            assert!(p.mu_plus.re > 0.0 && p.mu_plus.im > 0.0, "lambda={l}");
            assert!(p.k_interval_upper > 1.0);
        }
    }
}
