//! The cross-validation suite behind `coagscale report`: every check pits an
//! implementation against an independent oracle (closed form, alternate
//! quadrature, asymptotic law, or a bridging identity between modules).

use coagscale_core::adiabatic::{sandwich_check, sigma_profile};
use coagscale_core::matching::advance_cycle;
use coagscale_core::ode::{solve_until, Direction, OdeOptions};
use coagscale_core::peaks::{u_closed_form, PeakSolution};
use coagscale_core::profile::{consistency_residuals, eval_i, fixed_point_residual, LogGrid, Trajectory};
use coagscale_core::regime::{
    a_plus_from_a_minus, e_hat, integrate_intermediate, period, phi, turning_points,
};
use coagscale_core::shooting::{march, shoot, Classification, ShootControls};
use coagscale_core::special::{dispersion_root, psi};
use coagscale_core::{Complex64, ModelParams, Result};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check_name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &str, expected: f64, observed: f64, tolerance: f64) -> Check {
    Check {
        check_name: name.to_string(),
        expected,
        observed,
        tolerance,
        pass: (observed - expected).abs() <= tolerance,
    }
}

fn check_flag(name: &str, ok: bool) -> Check {
    Check {
        check_name: name.to_string(),
        expected: 1.0,
        observed: if ok { 1.0 } else { 0.0 },
        tolerance: 0.0,
        pass: ok,
    }
}

/// 1. The constant profile (1,1,1) solves the fixed-point equation exactly.
pub fn check_constant_residual() -> Result<Check> {
    let mut worst = 0.0f64;
    for lambda in [0.05, 0.1, 0.2, 0.3] {
        let params = ModelParams::new(lambda)?;
        let grid = LogGrid::new(-5.0, 0.25, 41)?;
        let traj = Trajectory::constant(params, grid, 1.0);
        for r in fixed_point_residual(&traj)? {
            worst = worst.max(r.abs());
        }
    }
    Ok(check("constant_profile_residual", 0.0, worst, 1e-10))
}

/// 2. The dispersion root annihilates Psi and approaches lambda/2 + i sqrt(lambda)
/// with a 3/2-power correction.
pub fn check_dispersion() -> Result<Vec<Check>> {
    let lambdas = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let mut worst = 0.0f64;
    let mut pts = Vec::new();
    for &l in &lambdas {
        let mu = dispersion_root(l)?;
        worst = worst.max(psi(l, mu)?.norm());
        let seed = Complex64::new(0.5 * l, l.sqrt());
        pts.push((l.ln(), (mu - seed).norm().ln()));
    }
    // least-squares slope of log deviation vs log lambda
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy): (f64, f64) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(vec![
        check("dispersion_root_residual", 0.0, worst, 1e-12),
        check("dispersion_seed_correction_slope", 1.5, slope, 0.2),
    ])
}

/// 3. Contour quadrature reproduces the explicit a = 1 peak profile.
pub fn check_peak_closed_form() -> Result<Check> {
    let sol = PeakSolution::new(1.0, 1.0)?;
    let mut worst = 0.0f64;
    let mut x: f64 = -5.0;
    while x <= 3.0 + 1e-12 {
        let y = x.exp();
        let damp = (-y).exp();
        worst = worst.max((sol.eval_v_contour(x)? - 2.0 * damp).abs());
        worst = worst.max((sol.eval_h_contour(x)? - 2.0 * y * damp).abs());
        worst = worst.max((sol.eval_u_contour(x)? - u_closed_form(y)).abs());
        x += 0.05;
    }
    Ok(check("peak_closed_form_a_one", 0.0, worst, 1e-8))
}

/// 4. Peak limits 1 + a and 1 - a, positivity of H and U, monotone V at a = 0.5.
pub fn check_peak_limits() -> Result<Vec<Check>> {
    let a = 0.5;
    let sol = PeakSolution::new(a, 1.0)?;
    // V approaches 1 + a like -(2/Gamma(a)) e^{aX}; at X = -20 that correction
    // is 5.1e-5, far above the raw tolerance, so test against the corrected
    // limit there and against the bare limit at X = -40 where the correction
    // has died out
    let corr = 2.0 / coagscale_core::special::gamma(a)? * (a * -20.0f64).exp();
    let mut out = vec![
        check("peak_left_limit_with_correction", 1.0 + a - corr, sol.eval_v(-20.0)?, 1e-6),
        check("peak_left_limit", 1.0 + a, sol.eval_v(-40.0)?, 1e-6),
        check("peak_right_limit", 1.0 - a, sol.eval_v(40.0)?, 1e-6),
    ];
    let mut ok = true;
    let mut prev = f64::INFINITY;
    for i in 0..100 {
        let x = -10.0 + 20.0 * i as f64 / 99.0;
        let v = sol.eval_v(x)?;
        ok &= sol.eval_h(x)? > 0.0 && sol.eval_u(x)? > 0.0 && v < prev;
        prev = v;
    }
    out.push(check_flag("peak_signs_and_monotonicity", ok));
    Ok(out)
}

/// 5. The peak profiles satisfy the quadratic convolution equation.
pub fn check_convolution() -> Result<Check> {
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 1.5] {
        let sol = PeakSolution::new(a, 1.0)?;
        for x in [0.5, 1.0, 2.0] {
            worst = worst.max(sol.convolution_residual(x)?.abs());
        }
    }
    Ok(check("peak_convolution_residual", 0.0, worst, 1e-5))
}

/// Measured return time of the conservative cycle started at (U_+, 0).
fn ode_return_time(e: f64) -> Result<f64> {
    let tp = turning_points(e, 0.0)?;
    let t_guess = period(e)?;
    let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = 1.0 - y[0].exp();
    };
    let sol = solve_until(
        &mut rhs,
        0.0,
        &[tp.ell_plus, 0.0],
        1.5 * t_guess,
        &mut |_s, y: &[f64]| y[1],
        Direction::Down,
        &OdeOptions::default(),
    )?;
    sol.event_time.ok_or_else(|| {
        coagscale_core::Error::numerical(format!("cycle at E = {e} did not close"))
    })
}

/// 6. Period limits 2 pi and 2 sqrt(2) sqrt(E), and the ODE return-time oracle.
pub fn check_period() -> Result<Vec<Check>> {
    let mut out = vec![
        check("period_harmonic_limit", 2.0 * PI, period(1e-6)?, 1e-3),
        check(
            "period_large_energy_limit",
            2.0 * 2.0f64.sqrt(),
            period(1e4)? / 100.0,
            0.02 * 2.0 * 2.0f64.sqrt(),
        ),
    ];
    let mut worst = 0.0f64;
    for e in [0.01, 1.0, 100.0] {
        let t = period(e)?;
        worst = worst.max(((ode_return_time(e)? - t) / t).abs());
    }
    out.push(check("period_ode_return_time", 0.0, worst, 1e-6));
    Ok(out)
}

/// 7. Energy gain Phi(E): both asymptotic limits and the trajectory-integral oracle.
pub fn check_gain() -> Result<Vec<Check>> {
    let mut out = vec![
        check("gain_small_energy_limit", 2.0 * PI, phi(1e-3)? / 1e-3, 0.02 * 2.0 * PI),
        check(
            "gain_large_energy_limit",
            4.0 * 2.0f64.sqrt() / 3.0,
            phi(1e4)? / 1e6,
            0.02 * 4.0 * 2.0f64.sqrt() / 3.0,
        ),
    ];
    let mut worst = 0.0f64;
    for e in [0.1, 1.0, 10.0] {
        let p = phi(e)?;
        let sigma4 = sigma_profile((2.0 * e).sqrt())?.sigma_values[4];
        worst = worst.max(((sigma4 - p) / p).abs());
    }
    out.push(check("gain_trajectory_integral", 0.0, worst, 1e-6));
    Ok(out)
}

/// 8. Within-cycle sigma: total equals Phi, small and large amplitude limits,
/// sandwich bound.
pub fn check_adiabatic() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for omega0 in [0.5f64, 1.0, 3.0] {
        let c = sigma_profile(omega0)?;
        let p = phi(c.e)?;
        worst = worst.max(((c.sigma_values[4] - p) / p).abs());
    }
    out.push(check("sigma_total_equals_phi", 0.0, worst, 1e-6));
    let small = sigma_profile(1e-2)?;
    out.push(check(
        "sigma_station2_small_amplitude",
        0.5 * PI,
        small.sigma_values[2] / 1e-4,
        0.03 * 0.5 * PI,
    ));
    let big = sigma_profile(30.0)?;
    let lim = 3.0f64.sqrt() / 9.0;
    out.push(check(
        "sigma_station1_large_amplitude",
        -lim,
        big.sigma_values[1] / 27e3,
        0.05 * lim,
    ));
    let mut ok = true;
    for omega0 in [0.01, 0.1, 1.0, 10.0, 30.0] {
        ok &= sandwich_check(omega0, 400)?.0;
    }
    out.push(check_flag("sigma_sandwich_bound", ok));
    Ok(out)
}

/// 9. Valley amplitude map: defining residual, growth, quadratic expansion order.
pub fn check_amplitude_map() -> Result<Vec<Check>> {
    let mut res = 0.0f64;
    let mut grows = true;
    for i in 0..50 {
        let a_minus = 0.01 + 0.94 * i as f64 / 49.0;
        let a_plus = a_plus_from_a_minus(a_minus)?;
        let lhs = (1.0 + a_plus).ln() - a_plus;
        let rhs = (1.0 - a_minus).ln() + a_minus;
        res = res.max((lhs - rhs).abs());
        grows &= a_plus > a_minus;
    }
    let err = |a: f64| -> Result<f64> {
        Ok((a_plus_from_a_minus(a)? - a - 2.0 / 3.0 * a * a).abs())
    };
    // cubic remainder: halving a divides the error by ~8
    let r1 = err(0.04)? / err(0.02)?;
    let r2 = err(0.02)? / err(0.01)?;
    Ok(vec![
        check("amplitude_map_residual", 0.0, res, 1e-12),
        check_flag("amplitude_map_growth", grows),
        check("amplitude_map_cubic_remainder_ratio", 8.0, 0.5 * (r1 + r2), 2.0),
    ])
}

/// 10. The intermediate valley system conserves E_hat.
pub fn check_intermediate_invariant() -> Result<Check> {
    let lambda = 0.05;
    let path = integrate_intermediate(lambda, 0.01, 0.5, 10.0 / lambda)?;
    let e0 = e_hat(lambda, 0.01, 0.5);
    let mut drift = 0.0f64;
    for e in &path.e_hat {
        drift = drift.max(((e - e0) / e0).abs());
    }
    Ok(check("intermediate_invariant_drift", 0.0, drift, 1e-8))
}

/// Symmetric relative difference between two quantities that should agree.
fn rel_diff(p: f64, q: f64) -> f64 {
    (p - q).abs() / p.abs().max(q.abs())
}

/// 11. Matching bridges: the three spacing formulas agree, and the energy
/// recursion matches the sqrt(lambda)-scaled per-cycle gain.
pub fn check_matching() -> Result<Vec<Check>> {
    let lambda = 1e-3;
    let params = ModelParams::new(lambda)?;
    let mut spacing_worst = 0.0f64;
    let mut energy_worst = 0.0f64;
    for a in [0.02, 0.05, 0.1] {
        let a_plus = a_plus_from_a_minus(a)?;
        let s_valley = ((1.0 + a_plus) / (1.0 - a)).ln() / lambda;
        let e = a * a / (2.0 * lambda);
        let s_period = 2.0 * 2.0f64.sqrt() * e.sqrt() / lambda.sqrt();
        let s_plain = 2.0 * a / lambda;
        for (p, q) in [(s_valley, s_period), (s_valley, s_plain), (s_period, s_plain)] {
            spacing_worst = spacing_worst.max(rel_diff(p, q));
        }
        let step = advance_cycle(&params, 1, a, 0.0)?;
        let e_next = step.a_next * step.a_next / (2.0 * lambda);
        let de = e_next - e;
        // per-cycle gain in the peak-dominated regime:
        // sqrt(lambda) (4 sqrt(2)/3) E^{3/2} = (2/3) a^3 / lambda
        let gain = lambda.sqrt() * 4.0 * 2.0f64.sqrt() / 3.0 * e.powf(1.5);
        energy_worst = energy_worst.max(rel_diff(de, gain));
    }
    Ok(vec![
        check("matching_spacing_bridges", 0.0, spacing_worst, 0.1),
        check("matching_energy_recursion", 0.0, energy_worst, 0.1),
    ])
}

/// Checks 1-11: the fast suite.
pub fn fast_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(check_constant_residual()?);
    out.extend(check_dispersion()?);
    out.push(check_peak_closed_form()?);
    out.extend(check_peak_limits()?);
    out.push(check_convolution()?);
    out.extend(check_period()?);
    out.extend(check_gain()?);
    out.extend(check_adiabatic()?);
    out.extend(check_amplitude_map()?);
    out.push(check_intermediate_invariant()?);
    out.extend(check_matching()?);
    Ok(out)
}

/// Grid long enough for the tail seed and terminal decay at `lambda`.
pub fn shoot_grid(params: &ModelParams, dx: f64, x_max: f64) -> Result<LogGrid> {
    // |K e^{mu+ x}| < 1e-4 at x_start for every K in the fundamental interval
    let x_start = ((1e-4 / params.k_interval_upper).ln() / params.beta).floor().min(-40.0);
    let count = ((x_max - x_start) / dx).ceil() as usize + 1;
    LogGrid::new(x_start, dx, count)
}

/// 12 and 13. End-to-end shoot at `lambda` plus consistency diagnostics on
/// the shot trajectory. The long pole of the suite.
pub fn slow_checks(lambda: f64, threads: usize) -> Result<Vec<Check>> {
    let params = ModelParams::new(lambda)?;
    let controls = ShootControls::default();
    let grid = shoot_grid(&params, 0.02, 60.0)?;
    let (k_star, outcome) = if threads > 1 {
        crate::parallel::shoot_parallel(&params, &grid, &controls, threads)?
    } else {
        shoot(&params, &grid, &controls)?
    };
    let mut out = Vec::new();
    // informational: the refined amplitude, visible in the report output
    out.push(check("shoot_k_star", k_star, k_star, 0.0));
    out.push(check_flag(
        "shoot_bracket_found",
        k_star >= 1.0 && k_star < params.k_interval_upper,
    ));
    out.push(check_flag(
        "shoot_terminal_classification",
        matches!(
            outcome.classification,
            Classification::Converged | Classification::Overshoot | Classification::Undershoot
        ),
    ));
    out.push(check_flag(
        "shoot_amplitudes_increasing",
        outcome.cycles.amplitudes_increasing(),
    ));

    // terminal decay: past the decisive peak, h(x) ~ (2/lambda)(x/x_n)
    // e^{-x/x_n} with x_n at the global maximum of H (the decisive peak is
    // never a recorded cycle: the march terminates before U re-crosses 1)
    {
        let traj = &outcome.trajectory;
        let mut i_peak = 0;
        for i in 0..traj.grid.count {
            if traj.h_values[i] > traj.h_values[i_peak] {
                i_peak = i;
            }
        }
        let x0 = traj.grid.node(i_peak);
        let x_n = x0.exp();
        let x_end = traj.grid.x_end();
        let x_b = (x0 + 2.0).min(x_end);
        let x_a = (x0 + 1.0).min(x_b - 0.5);
        let ha = traj.eval_h(x_a).max(1e-300);
        let hb = traj.eval_h(x_b).max(1e-300);
        // log h = const + log x - x/x_n along the tail shape
        let measured = (ha / hb).ln();
        let predicted = (x_b.exp() - x_a.exp()) / x_n - (x_b.exp() / x_a.exp()).ln();
        out.push(check("shoot_tail_decay_rate", 1.0, measured / predicted, 0.1));
    }

    // residual of the full nonlocal equation along the shot trajectory,
    // relative to the local scale like the marching tolerance itself
    let mut worst = 0.0f64;
    let stride = (outcome.trajectory.grid.count / 200).max(1);
    for i in (0..outcome.trajectory.grid.count).step_by(stride) {
        let x = outcome.trajectory.grid.node(i);
        let c = params.uv_coeff();
        let i_val = eval_i(&outcome.trajectory, x)?;
        let h_i = outcome.trajectory.h_values[i];
        let r = h_i - c * outcome.trajectory.u_values[i] * outcome.trajectory.v_values[i] - i_val;
        worst = worst.max(r.abs() / h_i.abs().max(1.0));
    }
    out.push(check("shoot_fixed_point_residual", 0.0, worst, 10.0 * controls.march.fp_tol));

    out.extend(consistency_checks(0.05)?);
    Ok(out)
}

/// Consistency diagnostics R1, R2 relative to I[H] at the peak stations of
/// a marched trajectory. The ratios measure the kernel simplification
/// error, a property of the regime rather than of the critical amplitude,
/// so a single march suffices.
fn consistency_checks(lambda: f64) -> Result<Vec<Check>> {
    let params = ModelParams::new(lambda)?;
    let grid = shoot_grid(&params, 0.02, 100.0)?;
    let outcome = march(
        &params,
        Complex64::new(1.0, 0.0),
        &grid,
        &coagscale_core::shooting::MarchControls::default(),
    )?;
    let mut rel_worst = 0.0f64;
    for c in &outcome.cycles.cycles {
        let x = c.x_zero.min(outcome.trajectory.grid.x_end());
        let i_val = eval_i(&outcome.trajectory, x)?;
        if i_val.abs() < 1e-12 {
            continue;
        }
        let (r1, r2) = consistency_residuals(&outcome.trajectory, x)?;
        rel_worst = rel_worst.max((r1 / i_val).abs()).max((r2 / i_val).abs());
    }
    Ok(vec![check("shoot_consistency_residuals", 0.0, rel_worst, 0.1)])
}
