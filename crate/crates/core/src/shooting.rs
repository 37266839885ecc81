//! Forward marching of the Volterra system in X and bisection on the
//! shooting amplitude K.
//!
//! The system is
//!   H = (H_lambda/(lambda(1-lambda))) U V + I[H],
//!   dU/dX = (1-lambda)(H - U),
//!   dV/dX = lambda (V - H),
//! started from the linearized tail (1,1,1) + Re(K (1, cu, cv) e^{mu+ X}).
//! U and V advance by an AB4 predictor / AM4 corrector pair (the corrector
//! is linear in U, V and solved exactly); H is resolved at each node by
//! fixed-point iteration of the first equation, which contracts because the
//! self-weight of H(X) inside I[H] is O(step).

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::matching::{CycleRecord, MatchingSequence};
use crate::profile::{
    eval_i_history, interp_uniform, tail_state, IntegralControls, LogGrid, Trajectory,
};
use crate::special::ModelParams;
use crate::{Error, Result};

/// How a single march ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// V fell below -delta during a peak.
    Overshoot,
    /// V fell below the dip threshold during a peak, then bounced back up.
    Undershoot,
    /// V entered [0, delta] with H, U below delta and stayed for a window.
    Converged,
    /// The grid was exhausted before any terminal event.
    Budget,
}

/// Result of one march: terminal classification, where it ended, the stored
/// trajectory, and the cycles observed on the way.
#[derive(Debug, Clone)]
pub struct ShotOutcome {
    pub classification: Classification,
    pub terminal_x: f64,
    pub trajectory: Trajectory,
    pub cycles: MatchingSequence,
}

#[derive(Debug, Clone, Copy)]
pub struct MarchControls {
    /// Terminal-event threshold on V, H, U.
    pub delta: f64,
    /// X-length over which the converged state must persist.
    pub window: f64,
    /// Relative tolerance of the H fixed point.
    pub fp_tol: f64,
    /// Iteration cap for the H fixed point.
    pub max_h_iter: usize,
    /// Hysteresis margin for U-crossing cycle detection.
    pub hysteresis: f64,
    /// V level that marks a decisive peak excursion: only a recovery from
    /// below this level counts as an undershoot. Ordinary oscillatory dips
    /// stay well above it, the terminal collapse goes well below.
    pub dip: f64,
    pub integral: IntegralControls,
}

impl Default for MarchControls {
    fn default() -> Self {
        MarchControls {
            delta: 1e-3,
            window: 5.0,
            fp_tol: 1e-10,
            max_h_iter: 60,
            hysteresis: 0.1,
            dip: 0.5,
            integral: IntegralControls::default(),
        }
    }
}

struct History<'a> {
    params: &'a ModelParams,
    k: Complex64,
    x_start: f64,
    step: f64,
    h: &'a [f64],
}

impl History<'_> {
    fn eval(&self, y: f64) -> f64 {
        if y < self.x_start {
            tail_state(self.params, self.k, y).0
        } else {
            interp_uniform(self.h, self.x_start, self.step, y)
        }
    }
}

/// Cycle detector: watches U cross 1 with hysteresis and V dip and recover.
struct CycleTracker {
    lambda: f64,
    armed: bool,
    in_peak: bool,
    u_max: f64,
    h_max: f64,
    x_at_u_max: f64,
    x_at_h_max: f64,
    x_plus: f64,
    dipped: bool,
    v_min: f64,
    cycles: Vec<CycleRecord>,
}

impl CycleTracker {
    fn new(lambda: f64) -> Self {
        CycleTracker {
            lambda,
            armed: false,
            in_peak: false,
            u_max: 0.0,
            h_max: 0.0,
            x_at_u_max: 0.0,
            x_at_h_max: 0.0,
            x_plus: 0.0,
            dipped: false,
            v_min: f64::INFINITY,
            cycles: Vec::new(),
        }
    }

    /// Feed one node; returns true when an undershoot terminal fires.
    fn push(&mut self, x: f64, h: f64, u: f64, v: f64, controls: &MarchControls) -> bool {
        let hysteresis = controls.hysteresis;
        if self.in_peak {
            if u > self.u_max {
                self.u_max = u;
                self.x_at_u_max = x;
            }
            if h > self.h_max {
                self.h_max = h;
                self.x_at_h_max = x;
            }
            if u <= 1.0 {
                self.in_peak = false;
                if self.u_max >= 1.0 + hysteresis {
                    let a = self.u_max - 1.0;
                    self.cycles.push(CycleRecord {
                        n: self.cycles.len(),
                        a_n: a,
                        x_plus: self.x_plus,
                        x_zero: self.x_at_h_max,
                        x_minus: x,
                        e_n: a * a / (2.0 * self.lambda),
                    });
                }
            }
        } else {
            if u < 1.0 - hysteresis {
                self.armed = true;
            }
            if self.armed && u >= 1.0 {
                self.armed = false;
                self.in_peak = true;
                self.x_plus = x;
                self.u_max = u;
                self.h_max = h;
                self.x_at_u_max = x;
                self.x_at_h_max = x;
            }
        }
        // a decisive peak drives V far below 1; once V has dipped and then
        // risen clear of its minimum the profile bounced instead of
        // crossing zero. V grows monotonically after the peak, so a 10x
        // rise above a level past the noise floor is unambiguous.
        if v < controls.dip {
            self.dipped = true;
        }
        if self.dipped {
            self.v_min = self.v_min.min(v);
        }
        self.dipped && (v >= 1.0 || (v >= controls.delta && v >= 10.0 * self.v_min))
    }
}

/// March the Volterra system across `grid` with tail amplitude `k`.
pub fn march(
    params: &ModelParams,
    k: Complex64,
    grid: &LogGrid,
    controls: &MarchControls,
) -> Result<ShotOutcome> {
    let seed = (k * (params.mu_plus * grid.x_start).exp()).norm();
    if seed >= 1e-3 {
        return Err(Error::Domain(format!(
            "tail amplitude |K e^(mu+ x_start)| = {seed:e} too large; move x_start left"
        )));
    }
    if grid.count < 5 {
        return Err(Error::Domain(format!(
            "grid too short for 4th-order marching: {} nodes",
            grid.count
        )));
    }

    let l = params.lambda;
    let c_uv = params.uv_coeff();
    let dx = grid.step;
    let n = grid.count;

    let mut h = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut fu = Vec::with_capacity(n);
    let mut fv = Vec::with_capacity(n);

    for i in 0..4.min(n) {
        let (hi, ui, vi) = tail_state(params, k, grid.node(i));
        h.push(hi);
        u.push(ui);
        v.push(vi);
        fu.push((1.0 - l) * (hi - ui));
        fv.push(l * (vi - hi));
    }

    let mut tracker = CycleTracker::new(params.lambda);
    for i in 0..h.len() {
        tracker.push(grid.node(i), h[i], u[i], v[i], controls);
    }

    let mut classification = Classification::Budget;
    let mut terminal_x = grid.node(h.len() - 1);
    let mut run_start: Option<f64> = None;

    // AM4 corrector is linear in the new U, V; precompute the divisors
    let au = 1.0 + dx * 9.0 / 24.0 * (1.0 - l);
    let av = 1.0 - dx * 9.0 / 24.0 * l;

    'nodes: for i in h.len()..n {
        let x = grid.node(i);
        // AB4 predictor for U (V follows from the corrector directly)
        let _u_pred = u[i - 1]
            + dx / 24.0 * (55.0 * fu[i - 1] - 59.0 * fu[i - 2] + 37.0 * fu[i - 3] - 9.0 * fu[i - 4]);
        let u_part = u[i - 1] + dx / 24.0 * (19.0 * fu[i - 1] - 5.0 * fu[i - 2] + fu[i - 3]);
        let v_part = v[i - 1] + dx / 24.0 * (19.0 * fv[i - 1] - 5.0 * fv[i - 2] + fv[i - 3]);

        // quadratic extrapolation seeds the H fixed point
        let mut h_i = 3.0 * h[i - 1] - 3.0 * h[i - 2] + h[i - 3];
        h.push(h_i);
        let mut u_i = 0.0;
        let mut v_i = 0.0;
        let mut prev_diff = f64::INFINITY;
        let mut converged = false;
        for _ in 0..controls.max_h_iter {
            u_i = (u_part + dx * 9.0 / 24.0 * (1.0 - l) * h_i) / au;
            v_i = (v_part - dx * 9.0 / 24.0 * l * h_i) / av;
            *h.last_mut().unwrap() = h_i;
            let hist = History {
                params,
                k,
                x_start: grid.x_start,
                step: dx,
                h: &h,
            };
            let i_val = eval_i_history(
                &|y| hist.eval(y),
                x,
                params,
                &[x - grid.x_start],
                &controls.integral,
            )?;
            let h_new = c_uv * u_i * v_i + i_val;
            let diff = (h_new - h_i).abs();
            h_i = h_new;
            if diff <= controls.fp_tol * h_new.abs().max(1.0) {
                converged = true;
                break;
            }
            if diff > 4.0 * prev_diff && diff > 1e-6 {
                return Err(Error::Numerical(format!(
                    "H fixed point diverging at X = {x}; reduce the step size"
                )));
            }
            prev_diff = diff;
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "H fixed point did not reach {:e} at X = {x}; reduce the step size",
                controls.fp_tol
            )));
        }
        *h.last_mut().unwrap() = h_i;
        u.push(u_i);
        v.push(v_i);
        fu.push((1.0 - l) * (h_i - u_i));
        fv.push(l * (v_i - h_i));
        terminal_x = x;

        // V is allowed to cross zero down to -delta before Overshoot
        // fires, and H = c UV + I tracks it slightly negative there; only
        // an excursion past the same grace band (scaled by the UV weight)
        // breaks integrity. U stays strictly positive throughout.
        if h_i < -(1.0 + c_uv * u_i) * controls.delta || !(u_i > 0.0) {
            return Err(Error::Integrity(format!(
                "H or U out of range at X = {x}: H = {h_i}, U = {u_i}"
            )));
        }

        if v_i < -controls.delta {
            classification = Classification::Overshoot;
            break 'nodes;
        }
        if tracker.push(x, h_i, u_i, v_i, controls) {
            classification = Classification::Undershoot;
            break 'nodes;
        }
        let settled = v_i.abs() <= controls.delta && h_i < controls.delta && u_i < controls.delta;
        if settled {
            let start = *run_start.get_or_insert(x);
            if x - start >= controls.window {
                classification = Classification::Converged;
                break 'nodes;
            }
        } else {
            run_start = None;
        }
    }

    let reached = h.len();
    let sub_grid = LogGrid::new(grid.x_start, dx, reached)?;
    let trajectory = Trajectory::new(sub_grid, h, u, v, k, *params)?;
    Ok(ShotOutcome {
        classification,
        terminal_x,
        trajectory,
        cycles: MatchingSequence {
            cycles: tracker.cycles,
        },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ShootControls {
    /// Points in the initial geometric scan of [1, k_upper).
    pub scan_points: usize,
    /// Relative bracket width at which bisection stops.
    pub k_tol_rel: f64,
    pub march: MarchControls,
}

impl Default for ShootControls {
    fn default() -> Self {
        ShootControls {
            scan_points: 64,
            k_tol_rel: 1e-12,
            march: MarchControls::default(),
        }
    }
}

/// Classify the outcome at geometrically spaced K across the fundamental
/// interval [1, k_upper).
pub fn scan(
    params: &ModelParams,
    grid: &LogGrid,
    points: usize,
    controls: &MarchControls,
) -> Result<Vec<(f64, Classification)>> {
    let mut out = Vec::with_capacity(points);
    for j in 0..points {
        let k = scan_point(params, j, points);
        let shot = march(params, Complex64::new(k, 0.0), grid, controls)?;
        out.push((k, shot.classification));
    }
    Ok(out)
}

/// j-th scan abscissa: geometric spacing over [1, k_upper).
pub fn scan_point(params: &ModelParams, j: usize, points: usize) -> f64 {
    let log_upper = params.k_interval_upper.ln();
    (log_upper * j as f64 / points as f64).exp()
}

/// Leftmost adjacent pair with opposite Overshoot/Undershoot outcomes.
///
/// Undershoot-then-Overshoot pairs are preferred: growing K deepens the
/// decisive dip of V, so that orientation brackets the zero crossing of its
/// minimum. The reverse orientation marks where an earlier dip crosses the
/// detection threshold and is used only as a fallback.
pub fn bracket_from_scan(scan: &[(f64, Classification)]) -> Result<(f64, f64)> {
    let is_signed = |c: Classification| {
        matches!(c, Classification::Overshoot | Classification::Undershoot)
    };
    for w in scan.windows(2) {
        let ((k0, c0), (k1, c1)) = (w[0], w[1]);
        if c0 == Classification::Undershoot && c1 == Classification::Overshoot {
            return Ok((k0, k1));
        }
    }
    for w in scan.windows(2) {
        let ((k0, c0), (k1, c1)) = (w[0], w[1]);
        if is_signed(c0) && is_signed(c1) && c0 != c1 {
            return Ok((k0, k1));
        }
    }
    let mut msg = alloc::string::String::from("no Overshoot/Undershoot bracket in scan:");
    for (k, c) in scan {
        msg.push_str(&format!(" K={k:.6}:{c:?}"));
    }
    Err(Error::Search(msg))
}

/// Bisect a classification bracket down to the K tolerance; stops early if
/// a midpoint converges outright.
pub fn bisect(
    params: &ModelParams,
    grid: &LogGrid,
    k_lo: f64,
    k_hi: f64,
    controls: &ShootControls,
) -> Result<(f64, ShotOutcome)> {
    let mut lo = k_lo;
    let mut hi = k_hi;
    let lo_class = march(params, Complex64::new(lo, 0.0), grid, &controls.march)?.classification;
    let mut best: Option<(f64, ShotOutcome)> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let shot = march(params, Complex64::new(mid, 0.0), grid, &controls.march)?;
        let class = shot.classification;
        if class == Classification::Converged {
            return Ok((mid, shot));
        }
        if class == lo_class {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some((mid, shot));
        if hi - lo < controls.k_tol_rel * hi {
            break;
        }
    }
    let (k, shot) =
        best.ok_or_else(|| Error::Search("empty bisection bracket".into()))?;
    Ok((k, shot))
}

/// Scan, bracket, and bisect for the critical amplitude K*.
pub fn shoot(
    params: &ModelParams,
    grid: &LogGrid,
    controls: &ShootControls,
) -> Result<(f64, ShotOutcome)> {
    let scanned = scan(params, grid, controls.scan_points, &controls.march)?;
    let (lo, hi) = bracket_from_scan(&scanned)?;
    let (k, mut shot) = bisect(params, grid, lo, hi, controls)?;
    refine_outcome(&mut shot, &controls.march)?;
    Ok((k, shot))
}

/// Final refinement of a shot trajectory: re-solve H against the stored
/// two-sided interpolant from just before the decisive peak to the end.
pub fn refine_outcome(shot: &mut ShotOutcome, controls: &MarchControls) -> Result<()> {
    let t = &mut shot.trajectory;
    let mut i_peak = 0;
    for i in 0..t.grid.count {
        if t.h_values[i] > t.h_values[i_peak] {
            i_peak = i;
        }
    }
    let x0 = t.grid.node(i_peak);
    crate::profile::polish_h(
        t,
        x0 - 3.0,
        t.grid.x_end(),
        &controls.integral,
        0.5 * controls.fp_tol,
        4,
    )
}
