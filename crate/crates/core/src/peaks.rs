//! Explicit peak-regime profiles: the one-parameter family
//! (V_a, H_a, U_a), a in (0,2), obtained by inverting the Laplace symbol
//! w(zeta) = (1/zeta)[1 + a (zeta^a - kappa)/(zeta^a + kappa)] on a wedge
//! contour, with closed forms at a = 1 and the exponential decay constants
//! 2a/Gamma(a), -2a/Gamma(-a).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::quad::{integrate, GL16};
use crate::special::gamma;
use crate::{Error, Result};

/// Laplace symbol w(zeta) = (1/zeta)[1 + a (zeta^a - kappa)/(zeta^a + kappa)]
/// on the principal branch.
pub fn laplace_symbol(a: f64, kappa: f64, zeta: Complex64) -> Result<Complex64> {
    if zeta.norm() == 0.0 {
        return Err(Error::Domain("laplace_symbol needs zeta != 0".into()));
    }
    let za = (zeta.ln() * a).exp();
    let denom = za + kappa;
    if denom.norm() < 1e-12 {
        return Err(Error::Domain(format!(
            "zeta^a + kappa vanishes near zeta = {zeta}"
        )));
    }
    Ok((Complex64::new(1.0, 0.0) + (za - kappa) / denom * a) / zeta)
}

/// Leading constants of H_a: growth side H_a ~ c_minus e^{aX} as
/// X -> -infinity, decay side H_a ~ c_plus e^{-aX} as X -> +infinity,
/// with c_minus = 2a/Gamma(a) and c_plus = -2a/Gamma(-a).
pub fn decay_coefficients(a: f64) -> Result<(f64, f64)> {
    if !(0.0 < a && a < 2.0) {
        return Err(Error::Domain(format!("a must lie in (0,2), got {a}")));
    }
    let c_minus = 2.0 * a / gamma(a)?;
    if a == 1.0 {
        return Err(Error::Domain(
            "decay coefficient on the right is undefined at a = 1 (1/Gamma(-1) = 0)".into(),
        ));
    }
    let c_plus = -2.0 * a / gamma(-a)?;
    Ok((c_minus, c_plus))
}

struct Node {
    /// zeta^a on the principal branch
    za: Complex64,
    /// Gauss weight times dzeta times e^zeta / zeta
    w: Complex64,
}

fn push_panel_arc(nodes: &mut Vec<Node>, a: f64, rho: f64, lo: f64, hi: f64) {
    let c = 0.5 * (lo + hi);
    let hw = 0.5 * (hi - lo);
    for (x, gw) in GL16 {
        let phi = c + hw * x;
        // zeta = rho e^{i phi}, dzeta = i zeta dphi, so w = gw hw i e^zeta
        let zeta = Complex64::from_polar(rho, phi);
        let za = Complex64::from_polar(rho.powf(a), a * phi);
        let w = Complex64::new(0.0, gw * hw) * zeta.exp();
        nodes.push(Node { za, w });
    }
}

fn push_panel_ray(nodes: &mut Vec<Node>, a: f64, theta: f64, lo: f64, hi: f64, sign: f64) {
    let c = 0.5 * (lo + hi);
    let hw = 0.5 * (hi - lo);
    for (x, gw) in GL16 {
        let r = c + hw * x;
        // zeta = r e^{i theta}, dzeta = e^{i theta} dr, so w = sign gw hw e^zeta / r
        let zeta = Complex64::from_polar(r, theta);
        let za = Complex64::from_polar(r.powf(a), a * theta);
        let w = zeta.exp() * (sign * gw * hw / r);
        nodes.push(Node { za, w });
    }
}

fn build_nodes(a: f64, theta0: f64, rho: f64, r_max: f64, refine: usize) -> Vec<Node> {
    let mut nodes = Vec::new();
    let n_arc = ((2.0 * theta0 / 0.5).ceil() as usize).max(2) * refine;
    for i in 0..n_arc {
        let lo = -theta0 + 2.0 * theta0 * i as f64 / n_arc as f64;
        let hi = -theta0 + 2.0 * theta0 * (i + 1) as f64 / n_arc as f64;
        push_panel_arc(&mut nodes, a, rho, lo, hi);
    }
    let n_ray = (((r_max - rho) / 3.0).ceil() as usize).max(2) * refine;
    for i in 0..n_ray {
        let lo = rho + (r_max - rho) * i as f64 / n_ray as f64;
        let hi = rho + (r_max - rho) * (i + 1) as f64 / n_ray as f64;
        // outgoing upper ray, incoming lower ray
        push_panel_ray(&mut nodes, a, theta0, lo, hi, 1.0);
        push_panel_ray(&mut nodes, a, -theta0, lo, hi, -1.0);
    }
    nodes
}

/// Peak profile evaluated by contour quadrature:
/// V_a(X) - 1 = (a/2 pi i) int_gamma ((zeta^a - m)/(zeta^a + m)) e^zeta/zeta dzeta,
/// m = kappa e^{aX}, with H_a = -dV_a/dX and
/// U_a(X) = int_0^infty e^{-t} H_a(X - t) dt.
pub struct PeakSolution {
    pub a: f64,
    pub kappa: f64,
    pub theta0: f64,
    pub contour_radius: f64,
    pub quadrature_nodes: usize,
    coarse: Vec<Node>,
    fine: Vec<Node>,
}

impl PeakSolution {
    pub fn new(a: f64, kappa: f64) -> Result<Self> {
        let cap = (PI / a).min(PI);
        Self::with_contour(a, kappa, 0.5 * (0.5 * PI + cap))
    }

    /// Custom contour half-angle, pi/2 < theta0 < min(pi/a, pi).
    pub fn with_contour(a: f64, kappa: f64, theta0: f64) -> Result<Self> {
        if !(0.0 < a && a < 2.0) {
            return Err(Error::Domain(format!("a must lie in (0,2), got {a}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        let cap = (PI / a).min(PI);
        if !(0.5 * PI < theta0 && theta0 < cap) {
            return Err(Error::Domain(format!(
                "contour half-angle {theta0} outside (pi/2, {cap})"
            )));
        }
        let rho = 1.0;
        // truncate the rays where |e^zeta| < e^{-42}
        let r_max = 42.0 / (-theta0.cos());
        let coarse = build_nodes(a, theta0, rho, r_max, 4);
        let fine = build_nodes(a, theta0, rho, r_max, 8);
        let quadrature_nodes = fine.len();
        Ok(PeakSolution {
            a,
            kappa,
            theta0,
            contour_radius: rho,
            quadrature_nodes,
            coarse,
            fine,
        })
    }

    fn m_of(&self, x: f64) -> f64 {
        let e = self.a * x;
        if e > 690.0 {
            f64::INFINITY
        } else {
            self.kappa * e.exp()
        }
    }

    /// (a/2 pi i) Sum w (1 - 2m/(zeta^a + m)); returns (V - 1, imaginary residue).
    fn contour_v(nodes: &[Node], a: f64, m: f64) -> (f64, f64) {
        let mut c = Complex64::new(0.0, 0.0);
        for n in nodes {
            let f = Complex64::new(1.0, 0.0) - (n.za + m).inv() * (2.0 * m);
            c += n.w * f;
        }
        let s = a / (2.0 * PI);
        (s * c.im, -s * c.re)
    }

    /// (a^2/pi i) Sum w m zeta^a/(zeta^a + m)^2; returns (H, imaginary residue).
    fn contour_h(nodes: &[Node], a: f64, m: f64) -> (f64, f64) {
        let mut c = Complex64::new(0.0, 0.0);
        for n in nodes {
            let d = (n.za + m).inv();
            c += n.w * n.za * d * d * m;
        }
        let s = a * a / PI;
        (s * c.im, -s * c.re)
    }

    /// V_a(X); the fine/coarse contour estimates must agree and the
    /// imaginary residue of the quadrature must be negligible.
    pub fn eval_v(&self, x: f64) -> Result<f64> {
        if self.a == 1.0 {
            // V_1(X) = 2 e^{-kappa e^X}
            let y = self.kappa * x.exp();
            return Ok(2.0 * (-y).exp());
        }
        self.eval_v_contour(x)
    }

    /// V_a(X) by contour quadrature unconditionally, bypassing the closed
    /// form at a = 1; the two paths cross-validate each other.
    pub fn eval_v_contour(&self, x: f64) -> Result<f64> {
        let m = self.m_of(x);
        if !m.is_finite() {
            return Ok(1.0 - self.a);
        }
        let (vf, imf) = Self::contour_v(&self.fine, self.a, m);
        let (vc, _) = Self::contour_v(&self.coarse, self.a, m);
        let scale = 1.0 + vf.abs();
        if (vf - vc).abs() > 1e-9 * scale || imf.abs() > 1e-8 * scale {
            return Err(Error::Numerical(format!(
                "contour quadrature for V did not converge at X = {x}: {vf} vs {vc}, imag {imf:e}"
            )));
        }
        Ok(1.0 + vf)
    }

    fn h_raw(&self, nodes: &[Node], x: f64) -> f64 {
        let m = self.m_of(x);
        if m == 0.0 {
            return 0.0;
        }
        if !m.is_finite() {
            return 0.0;
        }
        Self::contour_h(nodes, self.a, m).0
    }

    /// H_a(X) = -dV_a/dX.
    pub fn eval_h(&self, x: f64) -> Result<f64> {
        if self.a == 1.0 {
            // H_1(X) = 2 kappa e^X e^{-kappa e^X}
            let y = self.kappa * x.exp();
            return Ok(2.0 * y * (-y).exp());
        }
        self.eval_h_contour(x)
    }

    /// H_a(X) by contour quadrature unconditionally.
    pub fn eval_h_contour(&self, x: f64) -> Result<f64> {
        let m = self.m_of(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        if !m.is_finite() {
            return Ok(0.0);
        }
        let (hf, imf) = Self::contour_h(&self.fine, self.a, m);
        let (hc, _) = Self::contour_h(&self.coarse, self.a, m);
        let scale = hf.abs().max(1e-280);
        if (hf - hc).abs() > 1e-8 * scale || imf.abs() > 1e-7 * scale {
            return Err(Error::Numerical(format!(
                "contour quadrature for H did not converge at X = {x}: {hf} vs {hc}, imag {imf:e}"
            )));
        }
        Ok(hf)
    }

    /// U_a(X) = int_0^infty e^{-t} H_a(X - t) dt (truncated at t = 45).
    pub fn eval_u(&self, x: f64) -> Result<f64> {
        if self.a == 1.0 {
            return Ok(u_closed_form(self.kappa * x.exp()));
        }
        self.eval_u_contour(x)
    }

    /// U_a(X) by convolving the contour-quadrature H unconditionally.
    pub fn eval_u_contour(&self, x: f64) -> Result<f64> {
        let t_max = 45.0;
        // probe the integrand for an absolute quadrature scale
        let mut peak = 0.0f64;
        for i in 0..=16 {
            let t = t_max * i as f64 / 16.0;
            peak = peak.max((-t).exp() * self.h_raw(&self.fine, x - t).abs());
        }
        let tol = (1e-11 * peak * t_max).max(1e-300);
        let uf = integrate(
            &mut |t: f64| (-t).exp() * self.h_raw(&self.fine, x - t),
            0.0,
            t_max,
            tol,
        )?;
        let uc = integrate(
            &mut |t: f64| (-t).exp() * self.h_raw(&self.coarse, x - t),
            0.0,
            t_max,
            tol,
        )?;
        if (uf - uc).abs() > 1e-7 * uf.abs().max(1e-280) {
            return Err(Error::Numerical(format!(
                "contour quadrature for U did not converge at X = {x}: {uf} vs {uc}"
            )));
        }
        Ok(uf)
    }

    /// Residual of the convolution equation x^2 vbar_x = int_0^x y vbar_y(y)
    /// vbar(x - y) dy at x, with vbar(x) = V(log x) and x vbar_x = -H(log x).
    pub fn convolution_residual(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "convolution residual needs x > 0, got {x}"
            )));
        }
        let lhs = -x * self.eval_h(x.ln())?;
        // split at x/2 and cube-root-grade both endpoint singularities y^a
        let half = 0.5 * x;
        let fail = core::cell::Cell::new(false);
        let vbar_vals = |y: f64, other: f64| -> f64 {
            if y <= 0.0 {
                return 0.0;
            }
            let h = self.eval_h(y.ln()).unwrap_or_else(|_| {
                fail.set(true);
                0.0
            });
            let v = self.eval_v(other.ln()).unwrap_or_else(|_| {
                fail.set(true);
                0.0
            });
            h * v
        };
        let tol = 1e-9 * (1.0 + lhs.abs());
        // int_0^{x/2} hbar(y) vbar(x - y) dy with y = (x/2) tau^3
        let near_zero = integrate(
            &mut |tau: f64| {
                let y = half * tau * tau * tau;
                3.0 * half * tau * tau * vbar_vals(y, x - y)
            },
            0.0,
            1.0,
            tol,
        )?;
        // int_{x/2}^{x} hbar(y) vbar(x - y) dy with x - y = (x/2) tau^3
        let near_x = integrate(
            &mut |tau: f64| {
                let z = half * tau * tau * tau;
                3.0 * half * tau * tau * vbar_vals(x - z, z)
            },
            0.0,
            1.0,
            tol,
        )?;
        if fail.get() {
            return Err(Error::Numerical(format!(
                "profile evaluation failed inside the convolution integral at x = {x}"
            )));
        }
        // rhs = int y vbar_y vbar = -int hbar(y) vbar(x-y) dy
        Ok(lhs + near_zero + near_x)
    }
}

/// ubar(y) = (2/y)(1 - (1 + y) e^{-y}) for a = 1, y = kappa x, with a series
/// branch that avoids cancellation for small y.
pub fn u_closed_form(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y < 0.1 {
        // 1 - (1+y)e^{-y} = sum_{k>=2} (-1)^k (k-1)/k! y^k
        let mut acc = 0.0;
        let mut pow = y * y; // y^k
        let mut fact = 2.0; // k!
        let mut sign = 1.0;
        for k in 2..26 {
            acc += sign * (k as f64 - 1.0) / fact * pow;
            pow *= y;
            fact *= k as f64 + 1.0;
            sign = -sign;
        }
        return 2.0 / y * acc;
    }
    2.0 / y * (1.0 - (1.0 + y) * (-y).exp())
}
