//! Within-cycle energy variation for the unperturbed oscillator:
//! sigma(xi) = int_0^xi [(U_0-1)^2 + omega_0^2 (1-U_0)] ds, its stationary
//! stations xi_1..xi_4, the omega-parametrized integrals, and the sandwich
//! bound min{sigma_1, sigma_3} <= sigma <= max{sigma_2, sigma_4} that
//! justifies the adiabatic approximation.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::ode::{solve, solve_until, Direction, OdeOptions};
use crate::quad::integrate;
use crate::regime::{period, turning_points};
use crate::{Error, Result};

/// One unperturbed cycle at energy E = Omega_0^2/2 started from
/// (U, omega) = (1, Omega_0), with the five stations where sigma is
/// stationary and the sigma values there (sigma_0 = 0 by definition).
#[derive(Debug, Clone, Copy)]
pub struct AdiabaticCycle {
    pub omega0: f64,
    pub e: f64,
    /// xi_0 = 0, xi_1, xi_2, xi_3, xi_4 = T(E)
    pub xi_stations: [f64; 5],
    pub sigma_values: [f64; 5],
    /// omega_0 at the stations (omega_1 = -omega_2, omega_3 = -Omega_0)
    pub omega_at: [f64; 5],
    /// U_0 at the stations
    pub u_at: [f64; 5],
}

/// state (p = log U, omega, sigma)
fn rhs(_s: f64, y: &[f64], dy: &mut [f64]) {
    let u = y[0].exp();
    dy[0] = y[1];
    dy[1] = 1.0 - u;
    dy[2] = (u - 1.0) * (u - 1.0) + y[1] * y[1] * (1.0 - u);
}

/// Integrate one cycle and locate the stations by event detection:
/// d sigma/d xi = (U-1)[(U-1) - omega^2] vanishes where U = 1
/// (xi_0, xi_3, xi_4) or U - 1 = omega^2 (xi_1, xi_2).
pub fn sigma_profile(omega0: f64) -> Result<AdiabaticCycle> {
    if !(omega0 > 0.0) {
        return Err(Error::Domain(format!(
            "sigma profile needs Omega_0 > 0, got {omega0}"
        )));
    }
    let e = 0.5 * omega0 * omega0;
    let t = period(e)?;
    let opts = OdeOptions::default();
    let mut xi = [0.0f64; 5];
    let mut sigma = [0.0f64; 5];
    let mut omega_at = [0.0f64; 5];
    let mut u_at = [0.0f64; 5];
    omega_at[0] = omega0;
    u_at[0] = 1.0;

    let mut state: Vec<f64> = alloc::vec![0.0, omega0, 0.0];
    let mut t0 = 0.0;
    let legs: [(fn(&[f64]) -> f64, Direction); 4] = [
        (|y| (y[0].exp() - 1.0) - y[1] * y[1], Direction::Up),
        (|y| (y[0].exp() - 1.0) - y[1] * y[1], Direction::Down),
        (|y| y[0], Direction::Down),
        (|y| y[0], Direction::Up),
    ];
    for (k, (g, dir)) in legs.iter().enumerate() {
        let sol = solve_until(
            &mut rhs,
            t0,
            &state,
            t0 + 1.5 * t,
            &mut |_s, y: &[f64]| g(y),
            *dir,
            &opts,
        )?;
        let t_ev = sol.event_time.ok_or_else(|| {
            Error::Numerical(format!(
                "station xi_{} not found within 1.5 T at Omega_0 = {omega0}; \
                 reached xi = {}, state {:?}",
                k + 1,
                sol.t_end(),
                sol.final_state()
            ))
        })?;
        state = sol.final_state().to_vec();
        t0 = t_ev;
        xi[k + 1] = t_ev;
        sigma[k + 1] = state[2];
        omega_at[k + 1] = state[1];
        u_at[k + 1] = state[0].exp();
    }
    Ok(AdiabaticCycle {
        omega0,
        e,
        xi_stations: xi,
        sigma_values: sigma,
        omega_at,
        u_at,
    })
}

/// sigma at a station computed with omega_0 as integration variable:
/// sigma_k = int_{omega_k}^{Omega_0} [(U_+(omega) - 1) - omega^2] d omega
/// along the level curve (U-1) - log U + omega^2/2 = Omega_0^2/2.
pub fn sigma_via_omega(omega0: f64, omega_k: f64) -> Result<f64> {
    if !(omega0 > 0.0) || omega_k.abs() > omega0 {
        return Err(Error::Domain(format!(
            "need |omega_k| <= Omega_0, got ({omega_k}, {omega0})"
        )));
    }
    let e = 0.5 * omega0 * omega0;
    let fail = core::cell::Cell::new(false);
    let integrand = |w: f64| match turning_points(e, w) {
        Ok(tp) => (tp.u_plus - 1.0) - w * w,
        Err(_) => {
            fail.set(true);
            f64::NAN
        }
    };
    // U_+(omega) - 1 ~ sqrt(Omega_0^2 - omega^2) near omega = +-Omega_0, so
    // substitute omega = +-(Omega_0 - t^2) at both ends to keep the
    // integrand smooth for the quadrature
    let c = 0.5 * (omega_k + omega0);
    let tol = 1e-11 * (1.0 + e);
    let upper = integrate(
        &mut |t: f64| 2.0 * t * integrand(omega0 - t * t),
        0.0,
        (omega0 - c).sqrt(),
        tol,
    )?;
    let lower = integrate(
        &mut |t: f64| 2.0 * t * integrand(-omega0 + t * t),
        (omega_k + omega0).sqrt(),
        (c + omega0).sqrt(),
        tol,
    )?;
    if fail.get() {
        return Err(Error::Numerical(format!(
            "turning point solve failed inside the omega quadrature at Omega_0 = {omega0}"
        )));
    }
    Ok(upper + lower)
}

/// Sample sigma(xi) on [0, xi_4] and check the sandwich
/// min{sigma_1, sigma_3} <= sigma(xi) <= max{sigma_2, sigma_4} within
/// 1e-8 max(1, Omega_0^3). Returns (holds, worst margin); the margin is the
/// smallest slack observed (negative when the bound is violated).
pub fn sandwich_check(omega0: f64, samples: usize) -> Result<(bool, f64)> {
    let cycle = sigma_profile(omega0)?;
    let xi4 = cycle.xi_stations[4];
    let sol = solve(&mut rhs, 0.0, &[0.0, omega0, 0.0], xi4, &OdeOptions::default())?;
    let lower = cycle.sigma_values[1].min(cycle.sigma_values[3]);
    let upper = cycle.sigma_values[2].max(cycle.sigma_values[4]);
    let tol = 1e-8 * (omega0 * omega0 * omega0).max(1.0);
    let mut margin = f64::INFINITY;
    for i in 0..=samples {
        let xi = xi4 * i as f64 / samples as f64;
        let s = sol.eval(xi)[2];
        margin = margin.min(s - lower).min(upper - s);
    }
    Ok((margin >= -tol, margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::phi;

    #[test]
    fn stations_ordered_and_consistent() {
        for omega0 in [0.3, 1.0, 5.0] {
            let c = sigma_profile(omega0).unwrap();
            let xi = c.xi_stations;
            assert!(xi[0] == 0.0 && xi[1] > 0.0);
            for k in 0..4 {
                assert!(xi[k] < xi[k + 1], "Omega_0={omega0}");
            }
            // omega relations at the stations
            assert!((c.omega_at[1] - (c.u_at[1] - 1.0).sqrt()).abs() < 1e-8);
            assert!((c.omega_at[1] + c.omega_at[2]).abs() < 1e-7, "Omega_0={omega0}");
            assert!((c.omega_at[3] + omega0).abs() < 1e-7);
            assert!((c.omega_at[4] - omega0).abs() < 1e-7);
            assert!((c.u_at[3] - 1.0).abs() < 1e-8 && (c.u_at[4] - 1.0).abs() < 1e-8);
            // the cycle closes at the period
            let t = period(c.e).unwrap();
            assert!((xi[4] - t).abs() < 1e-7 * t, "Omega_0={omega0}");
        }
    }

    #[test]
    fn total_change_is_phi() {
        for omega0 in [0.5, 1.0, 3.0] {
            let c = sigma_profile(omega0).unwrap();
            let p = phi(c.e).unwrap();
            assert!(
                ((c.sigma_values[4] - p) / p).abs() < 1e-6,
                "Omega_0={omega0}: {} vs {p}",
                c.sigma_values[4]
            );
        }
    }

    #[test]
    fn small_omega_asymptotics() {
        let omega0 = 1e-2;
        let c = sigma_profile(omega0).unwrap();
        let s = omega0 * omega0;
        let pi = core::f64::consts::PI;
        assert!((c.sigma_values[2] / s - 0.5 * pi).abs() < 0.03 * 0.5 * pi);
        assert!((c.sigma_values[3] / s - 0.5 * pi).abs() < 0.03 * 0.5 * pi);
        assert!((c.sigma_values[4] / s - pi).abs() < 0.03 * pi);
        // sigma_1 = o(Omega_0^2): the ratio keeps shrinking
        let mut prev = f64::INFINITY;
        for omega0 in [0.04, 0.02, 0.01] {
            let c = sigma_profile(omega0).unwrap();
            let ratio = c.sigma_values[1].abs() / (omega0 * omega0);
            assert!(ratio < prev, "Omega_0={omega0}");
            prev = ratio;
        }
    }

    #[test]
    fn large_omega_asymptotics() {
        let omega0 = 100.0;
        let c = sigma_profile(omega0).unwrap();
        let s = omega0 * omega0 * omega0;
        let lim = 3.0f64.sqrt() / 9.0;
        assert!(
            (c.sigma_values[1] / s + lim).abs() < 0.02 * lim,
            "sigma_1/O^3 = {}",
            c.sigma_values[1] / s
        );
        assert!(
            (c.sigma_values[2] / s - lim).abs() < 0.02 * lim,
            "sigma_2/O^3 = {}",
            c.sigma_values[2] / s
        );
        // sigma_3 = o(Omega_0^3): far below the cubic scale and shrinking
        let c30 = sigma_profile(30.0).unwrap();
        assert!(c.sigma_values[3] / s < c30.sigma_values[3] / (30.0 * 30.0 * 30.0));
        assert!(c.sigma_values[3].abs() / s < 0.01);
        // sigma_4 = Phi(E) ~ (2/3) Omega_0^3
        assert!((c.sigma_values[4] / s - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn sigma_derivative_formula() {
        let omega0 = 1.3;
        let c = sigma_profile(omega0).unwrap();
        let xi4 = c.xi_stations[4];
        let sol = solve(&mut rhs, 0.0, &[0.0, omega0, 0.0], xi4, &OdeOptions::default()).unwrap();
        for frac in [0.1, 0.35, 0.6, 0.85] {
            let xi = frac * xi4;
            let d = 1e-5;
            let ds = (sol.eval(xi + d)[2] - sol.eval(xi - d)[2]) / (2.0 * d);
            let y = sol.eval(xi);
            let u = y[0].exp();
            let formula = (u - 1.0) * ((u - 1.0) - y[1] * y[1]);
            assert!((ds - formula).abs() < 1e-6 * (1.0 + formula.abs()), "xi={xi}");
        }
    }

    #[test]
    fn omega_quadrature_matches_time_quadrature() {
        let omega0 = 1.0;
        let c = sigma_profile(omega0).unwrap();
        // k = 2 and k = 3 (omega_3 = -Omega_0)
        let s2 = sigma_via_omega(omega0, c.omega_at[2]).unwrap();
        assert!((s2 - c.sigma_values[2]).abs() < 1e-6, "{s2} vs {}", c.sigma_values[2]);
        let s3 = sigma_via_omega(omega0, -omega0).unwrap();
        assert!((s3 - c.sigma_values[3]).abs() < 1e-6, "{s3} vs {}", c.sigma_values[3]);
    }

    #[test]
    fn sandwich_holds_across_range() {
        let pi = core::f64::consts::PI;
        for omega0 in [0.01, 0.1, 1.0, 10.0, 30.0] {
            let (ok, margin) = sandwich_check(omega0, 400).unwrap();
            assert!(ok, "Omega_0={omega0} margin={margin:e}");
        }
        // small Omega_0: envelope width about pi Omega_0^2
        let omega0 = 0.01f64;
        let c = sigma_profile(omega0).unwrap();
        let width = c.sigma_values[2].max(c.sigma_values[4])
            - c.sigma_values[1].min(c.sigma_values[3]);
        assert!(width <= 1.05 * pi * omega0 * omega0, "width={width:e}");
        // large Omega_0: |sigma| bounded by C Omega_0^3 with C of order one
        let omega0 = 30.0f64;
        let c = sigma_profile(omega0).unwrap();
        let bound = omega0 * omega0 * omega0;
        for s in c.sigma_values {
            assert!(s.abs() <= bound, "sigma={s:e}");
        }
    }
}
