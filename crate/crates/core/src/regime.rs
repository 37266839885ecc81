//! Small-amplitude ODE regime in the rescaled variables (U, omega) with
//! conserved energy E, its period T(E) and adiabatic gain Phi(E), the
//! intermediate valley system in (U, V) with invariant E_hat, and the
//! resulting a_- -> a_+ amplitude map.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::ode::{solve, solve_until, Direction, OdeOptions};
use crate::quad::integrate;
use crate::{Error, Result};

/// Energy level with its turning amplitude Omega_0 = sqrt(2E).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub e: f64,
    pub omega0: f64,
}

impl EnergyLevel {
    pub fn new(e: f64) -> Result<Self> {
        if !(e >= 0.0) {
            return Err(Error::Domain(format!("energy must be nonnegative, got {e}")));
        }
        Ok(EnergyLevel {
            e,
            omega0: (2.0 * e).sqrt(),
        })
    }
}

/// Turning points U_- <= 1 <= U_+ of the level set
/// -log U + (U - 1) = E - omega^2/2, stored together with their logarithms
/// (U_- underflows for E beyond ~700 while log U_- stays representable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub u_minus: f64,
    pub u_plus: f64,
    pub ell_minus: f64,
    pub ell_plus: f64,
}

/// Conserved energy -log U + (U - 1) + omega^2/2 of the unperturbed system.
pub fn energy(u: f64, omega: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("energy requires U > 0, got {u}")));
    }
    Ok(-u.ln() + (u - 1.0) + 0.5 * omega * omega)
}

/// Solve e^l - l - 1 = q on the requested side of 0 by safeguarded Newton.
fn solve_ell(q: f64, positive: bool) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let f = |l: f64| l.exp() - l - 1.0 - q;
    let (mut lo, mut hi, mut l) = if positive {
        // e^l - l - 1 is increasing on l > 0
        let seed = (2.0 * q).sqrt().min((1.0 + q).ln() + 1.0 + (1.0 + q).ln().max(0.0));
        let mut hi = seed.max(1e-8);
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        (0.0, hi, hi.min((2.0 * q).sqrt()))
    } else {
        // decreasing on l < 0; f -> +inf as l -> -inf
        let lo = -(q + 1.0 + (2.0 * q).sqrt() + 1.0);
        (lo, 0.0, -(2.0 * q).sqrt().min(q + 1.0))
    };
    if !(l > lo && l < hi) {
        l = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let fv = f(l);
        if fv.abs() <= 1e-14 * (1.0 + q) {
            break;
        }
        if fv > 0.0 {
            if positive {
                hi = l;
            } else {
                lo = l;
            }
        } else if positive {
            lo = l;
        } else {
            hi = l;
        }
        let d = l.exp() - 1.0;
        let mut step = fv / d;
        if !step.is_finite() {
            step = 0.0;
        }
        let cand = l - step;
        l = if cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
    }
    l
}

/// Turning points at energy E and angular variable omega (requires
/// E >= omega^2/2).
pub fn turning_points(e: f64, omega: f64) -> Result<TurningPoints> {
    let q = e - 0.5 * omega * omega;
    if !(q >= 0.0) {
        return Err(Error::Domain(format!(
            "turning_points requires E >= omega^2/2, got E = {e}, omega = {omega}"
        )));
    }
    let ell_minus = solve_ell(q, false);
    let ell_plus = solve_ell(q, true);
    Ok(TurningPoints {
        u_minus: ell_minus.exp(),
        u_plus: ell_plus.exp(),
        ell_minus,
        ell_plus,
    })
}

/// Period of the closed orbit at energy E:
/// T(E) = sqrt(2) int_{U-}^{U+} d eta / (eta sqrt(E + log eta - (eta - 1))).
///
/// Evaluated in l = log eta where the integrand is 1/sqrt(g),
/// g(l) = E + 1 + l - e^l, with the inverse-square-root endpoints removed by
/// l = l_-/+ -/+ t^2. g is formed as an exact difference from the turning
/// point, g(l_- + d) = d - e^{l_-}(e^d - 1), so no E-sized cancellation
/// occurs near the endpoints.
pub fn period(e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::Domain(format!("period requires E > 0, got {e}")));
    }
    let tp = turning_points(e, 0.0)?;
    let tol = 1e-11 * (1.0 + e).sqrt();
    let exp_lm = tp.ell_minus.exp();
    let left = integrate(
        &mut |t: f64| {
            let d = t * t;
            // for d >= 1 the expm1 form can overflow (e^{l_-} underflows,
            // e^d overflows); the plain difference is safe there
            let g = if d < 1.0 {
                d - exp_lm * d.exp_m1()
            } else {
                d - ((tp.ell_minus + d).exp() - exp_lm)
            };
            2.0 * t / g.sqrt()
        },
        0.0,
        (-tp.ell_minus).sqrt(),
        tol,
    )?;
    let exp_lp = tp.ell_plus.exp();
    let right = integrate(
        &mut |t: f64| {
            let d = t * t;
            let g = -d - exp_lp * (-d).exp_m1();
            2.0 * t / g.sqrt()
        },
        0.0,
        tp.ell_plus.sqrt(),
        tol,
    )?;
    Ok(core::f64::consts::SQRT_2 * (left + right))
}

/// Adiabatic gain Phi(E) = 2 int_0^{sqrt(2E)} (U_+ - U_-) d omega, with the
/// square-root edge at omega = Omega_0 absorbed by omega = Omega_0 sin(theta).
pub fn phi(e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::Domain(format!("phi requires E > 0, got {e}")));
    }
    let omega0 = (2.0 * e).sqrt();
    let tol = 1e-11 * (1.0 + e * (1.0 + e).sqrt());
    let val = integrate(
        &mut |theta: f64| {
            let omega = omega0 * theta.sin();
            let tp = turning_points(e, omega).unwrap_or(TurningPoints {
                u_minus: 1.0,
                u_plus: 1.0,
                ell_minus: 0.0,
                ell_plus: 0.0,
            });
            (tp.u_plus - tp.u_minus) * omega0 * theta.cos()
        },
        0.0,
        0.5 * PI,
        tol,
    )?;
    Ok(2.0 * val)
}

/// Sampled path of the perturbed (or, at lambda = 0, conservative) system.
#[derive(Debug, Clone)]
pub struct RegimePath {
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub omega: Vec<f64>,
    pub energy: Vec<f64>,
    /// Where the small-amplitude regime stopped being valid, if it did:
    /// U grew past 10/lambda or lambda(1 + E) passed 1/2.
    pub regime_exit: Option<f64>,
}

fn perturbed_rhs(sqrt_l: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    // state (p, omega) with p = log U keeps U positive
    move |_xi: f64, y: &[f64], dy: &mut [f64]| {
        let u = y[0].exp();
        dy[0] = y[1] + sqrt_l * (u - 1.0);
        dy[1] = 1.0 - u + sqrt_l * y[1] * (1.0 - u);
    }
}

/// Integrate dU/dxi = U omega + sqrt(lambda) U(U-1),
/// d omega/dxi = 1 - U + sqrt(lambda) omega (1 - U) over `xi_span`,
/// stopping early (with a regime-exit marker, not an error) when the
/// small-amplitude validity conditions fail.
pub fn integrate_perturbed(lambda: f64, u0: f64, omega0: f64, xi_span: f64) -> Result<RegimePath> {
    if !(u0 > 0.0) {
        return Err(Error::Domain(format!("U0 must be positive, got {u0}")));
    }
    if !(0.0..0.5).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, 1/2), got {lambda}"
        )));
    }
    let sqrt_l = lambda.sqrt();
    let opts = OdeOptions::default();
    let y0 = [u0.ln(), omega0];
    let sol = if lambda > 0.0 {
        let u_cap = (10.0 / lambda).ln();
        solve_until(
            &mut perturbed_rhs(sqrt_l),
            0.0,
            &y0,
            xi_span,
            &mut |_xi, y: &[f64]| {
                let u = y[0].exp();
                let e = -y[0] + (u - 1.0) + 0.5 * y[1] * y[1];
                (lambda * (1.0 + e) - 0.5).max(y[0] - u_cap)
            },
            Direction::Up,
            &opts,
        )?
    } else {
        solve(&mut perturbed_rhs(0.0), 0.0, &y0, xi_span, &opts)?
    };
    let mut path = RegimePath {
        xi: sol.ts.clone(),
        u: Vec::with_capacity(sol.ts.len()),
        omega: Vec::with_capacity(sol.ts.len()),
        energy: Vec::with_capacity(sol.ts.len()),
        regime_exit: sol.event_time,
    };
    for y in &sol.ys {
        let u = y[0].exp();
        path.u.push(u);
        path.omega.push(y[1]);
        path.energy.push(-y[0] + (u - 1.0) + 0.5 * y[1] * y[1]);
    }
    Ok(path)
}

/// Sampled path of the intermediate valley system.
#[derive(Debug, Clone)]
pub struct IntermediatePath {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub e_hat: Vec<f64>,
}

pub fn e_hat(lambda: f64, u: f64, v: f64) -> f64 {
    lambda * (u.ln() - u) - v + v.ln()
}

fn intermediate_rhs(lambda: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    // state (log U, log V)
    move |_x: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1].exp() - 1.0;
        dy[1] = lambda * (1.0 - y[0].exp());
    }
}

/// Integrate dU/dX = -U + UV, dV/dX = lambda(V - UV) and report the
/// invariant E_hat = lambda(log U - U) - V + log V along the way.
pub fn integrate_intermediate(
    lambda: f64,
    u0: f64,
    v0: f64,
    x_span: f64,
) -> Result<IntermediatePath> {
    if !(u0 > 0.0) || !(v0 > 0.0) {
        return Err(Error::Domain(format!(
            "intermediate system needs U0, V0 > 0, got ({u0}, {v0})"
        )));
    }
    let sol = solve(
        &mut intermediate_rhs(lambda),
        0.0,
        &[u0.ln(), v0.ln()],
        x_span,
        &OdeOptions::default(),
    )?;
    let mut path = IntermediatePath {
        x: sol.ts.clone(),
        u: Vec::with_capacity(sol.ts.len()),
        v: Vec::with_capacity(sol.ts.len()),
        e_hat: Vec::with_capacity(sol.ts.len()),
    };
    for y in &sol.ys {
        let u = y[0].exp();
        let v = y[1].exp();
        path.u.push(u);
        path.v.push(v);
        path.e_hat.push(lambda * (y[0] - u) - v + y[1]);
    }
    Ok(path)
}

/// V value when the valley trajectory started at (U, V) = (1, 1 - a_minus)
/// next returns to U = 1 (it does so with V = 1 + a_plus).
pub fn intermediate_return(lambda: f64, a_minus: f64) -> Result<f64> {
    if !(0.0 < a_minus && a_minus < 1.0) {
        return Err(Error::Domain(format!(
            "a_minus must lie in (0, 1), got {a_minus}"
        )));
    }
    let span = 4.0 * (1.0 + a_minus) / lambda;
    let sol = solve_until(
        &mut intermediate_rhs(lambda),
        0.0,
        &[0.0, (1.0 - a_minus).ln()],
        span,
        &mut |_x, y: &[f64]| y[0],
        Direction::Up,
        &OdeOptions::default(),
    )?;
    if sol.event_time.is_none() {
        return Err(Error::Numerical(format!(
            "valley trajectory did not return to U = 1 within X-span {span}"
        )));
    }
    Ok(sol.final_state()[1].exp())
}

/// The amplitude map: the unique a_plus > 0 with
/// log(1 + a_plus) - a_plus = log(1 - a_minus) + a_minus.
pub fn a_plus_from_a_minus(a_minus: f64) -> Result<f64> {
    if !(0.0 < a_minus && a_minus < 1.0) {
        return Err(Error::Domain(format!(
            "a_minus must lie in (0, 1), got {a_minus}"
        )));
    }
    let rhs = (-a_minus).ln_1p() + a_minus;
    // g(a) = log(1+a) - a decreases from 0 on a > 0
    let g = |a: f64| a.ln_1p() - a;
    let mut hi = 2.0 * a_minus + 1.0;
    while g(hi) > rhs {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// X-length of the valley between a peak of amplitude a_minus and the next
/// of amplitude a_plus: (1/lambda) log((1 + a_plus)/(1 - a_minus)).
pub fn transition_length(lambda: f64, a_minus: f64, a_plus: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(a_minus < 1.0) || !(a_plus > -1.0) {
        return Err(Error::Domain(format!(
            "transition_length needs a_minus < 1 and a_plus > -1, got ({a_minus}, {a_plus})"
        )));
    }
    Ok(((1.0 + a_plus) / (1.0 - a_minus)).ln() / lambda)
}
