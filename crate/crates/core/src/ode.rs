//! Adaptive Dormand-Prince 5(4) integrator with a continuous extension and
//! event localization. State vectors are `Vec<f64>`; right-hand sides are
//! closures `f(t, y, dy)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Initial step size; estimated from the first derivative when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            h_init: None,
            h_max: None,
        }
    }
}

/// Which zero crossings of an event function terminate the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Any,
    Up,
    Down,
}

// Dormand-Prince tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// Dense-output weights for the quartic continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + s * (self.rcont[1][i]
                    + s1 * (self.rcont[2][i] + s * (self.rcont[3][i] + s1 * self.rcont[4][i])));
        }
    }
}

/// Integration result: accepted nodes plus the dense interpolant.
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    steps: Vec<DenseStep>,
    /// Time of the terminating event, if one fired.
    pub event_time: Option<f64>,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    /// Interpolated state at `t` within the integration span.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let dim = self.ys[0].len();
        let mut out = vec![0.0; dim];
        if self.steps.is_empty() {
            out.copy_from_slice(&self.ys[0]);
            return out;
        }
        // binary search the step containing t (steps are ordered in t0)
        let fwd = self.steps[0].h > 0.0;
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            let starts_before = if fwd {
                self.steps[mid].t0 <= t
            } else {
                self.steps[mid].t0 >= t
            };
            if starts_before {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        self.steps[lo].eval(t, &mut out);
        out
    }
}

/// Integrate y' = f(t, y) from `t0` to `t_end` (either direction).
pub fn solve(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<OdeSolution> {
    solve_with_event(f, t0, y0, t_end, None, opts)
}

/// Integrate until `t_end` or the first qualifying zero crossing of the
/// event function, whichever comes first. The crossing is refined by
/// bisection on the dense interpolant.
pub fn solve_until(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t_end: f64,
    event: &mut impl FnMut(f64, &[f64]) -> f64,
    direction: Direction,
    opts: &OdeOptions,
) -> Result<OdeSolution> {
    solve_with_event(f, t0, y0, t_end, Some((event, direction)), opts)
}

#[allow(clippy::type_complexity)]
fn solve_with_event(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t_end: f64,
    mut event: Option<(&mut dyn FnMut(f64, &[f64]) -> f64, Direction)>,
    opts: &OdeOptions,
) -> Result<OdeSolution> {
    let dim = y0.len();
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(OdeSolution {
            ts: vec![t0],
            ys: vec![y0.to_vec()],
            steps: Vec::new(),
            event_time: None,
        });
    }
    let sgn = if span > 0.0 { 1.0 } else { -1.0 };
    let h_max = opts.h_max.unwrap_or(span.abs());

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; dim]);
    f(t, &y, &mut k[0]);

    let mut h = match opts.h_init {
        Some(h0) => h0.abs(),
        None => {
            let ynorm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dnorm = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = (1.0 + ynorm) / (1.0 + dnorm);
            (1e-3 * scale).min(h_max).min(span.abs())
        }
    };

    let mut ts = vec![t0];
    let mut ys = vec![y.clone()];
    let mut steps: Vec<DenseStep> = Vec::new();
    let mut event_time = None;

    let mut g_prev = event.as_mut().map(|(g, _)| g(t, &y));
    let mut ytmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    let mut nsteps = 0usize;
    while (t_end - t) * sgn > 0.0 {
        nsteps += 1;
        if nsteps > opts.max_steps {
            return Err(Error::Numerical(format!(
                "ODE step budget exhausted at t = {t} (span [{t0}, {t_end}])"
            )));
        }
        if (t + sgn * h - t_end) * sgn > 0.0 {
            h = (t_end - t).abs();
        }
        let hs = sgn * h;

        // stages 2..7
        let a_rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, a) in a_rows.iter().enumerate() {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, &aij) in a.iter().enumerate() {
                    acc += hs * aij * k[j][i];
                }
                ytmp[i] = acc;
            }
            f(t + C[s + 1] * hs, &ytmp, &mut k[s + 1]);
        }
        for i in 0..dim {
            let mut acc = y[i];
            for j in 0..6 {
                acc += hs * B[j] * k[j][i];
            }
            y_new[i] = acc;
        }
        f(t + hs, &y_new, &mut k[6]);

        // embedded error estimate
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            e *= hs;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            // accept: build the continuous extension for this step
            let mut rcont: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; dim]);
            for i in 0..dim {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - hs * k[6][i] - bspl;
                let mut d = 0.0;
                for j in 0..7 {
                    d += D[j] * k[j][i];
                }
                rcont[4][i] = hs * d;
            }
            let step = DenseStep { t0: t, h: hs, rcont };

            let t_new = t + hs;
            if let Some((g, dir)) = event.as_mut() {
                let g_new = g(t_new, &y_new);
                let g_old = g_prev.unwrap();
                let crossed = match dir {
                    Direction::Any => g_old * g_new < 0.0 || (g_old != 0.0 && g_new == 0.0),
                    Direction::Up => g_old < 0.0 && g_new >= 0.0,
                    Direction::Down => g_old > 0.0 && g_new <= 0.0,
                };
                if crossed {
                    // bisect the dense interpolant for the crossing time
                    let mut lo = t;
                    let mut hi = t_new;
                    let mut g_lo = g_old;
                    let mut buf = vec![0.0; dim];
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        step.eval(mid, &mut buf);
                        let g_mid = g(mid, &buf);
                        if g_mid == 0.0 || (hi - lo).abs() < 1e-14 * (1.0 + mid.abs()) {
                            lo = mid;
                            break;
                        }
                        if (g_lo < 0.0) == (g_mid < 0.0) {
                            lo = mid;
                            g_lo = g_mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t_ev = 0.5 * (lo + hi);
                    step.eval(t_ev, &mut buf);
                    steps.push(step);
                    ts.push(t_ev);
                    ys.push(buf);
                    event_time = Some(t_ev);
                    return Ok(OdeSolution {
                        ts,
                        ys,
                        steps,
                        event_time,
                    });
                }
                g_prev = Some(g_new);
            }

            steps.push(step);
            t = t_new;
            core::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            ts.push(t);
            ys.push(y.clone());
        }

        // PI-free classic controller; a non-finite estimate (overflow in a
        // trial stage) forces a hard step reduction
        let fac = if !err.is_finite() {
            0.2
        } else if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * fac).min(h_max);
        if h < 1e-15 * (1.0 + t.abs()) {
            return Err(Error::Numerical(format!(
                "ODE step size underflow at t = {t}"
            )));
        }
    }

    Ok(OdeSolution {
        ts,
        ys,
        steps,
        event_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let opts = OdeOptions::default();
        let sol = solve(&mut harmonic, 0.0, &[1.0, 0.0], 2.0 * PI, &opts).unwrap();
        let yf = sol.final_state();
        assert!((yf[0] - 1.0).abs() < 1e-8, "y0={}", yf[0]);
        assert!(yf[1].abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_cosine() {
        let opts = OdeOptions::default();
        let sol = solve(&mut harmonic, 0.0, &[1.0, 0.0], 10.0, &opts).unwrap();
        for i in 0..100 {
            let t = 10.0 * i as f64 / 100.0;
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn event_finds_quarter_period() {
        // cos(t) crosses zero downward at t = pi/2
        let opts = OdeOptions::default();
        let sol = solve_until(
            &mut harmonic,
            0.0,
            &[1.0, 0.0],
            10.0,
            &mut |_t, y| y[0],
            Direction::Down,
            &opts,
        )
        .unwrap();
        let t_ev = sol.event_time.unwrap();
        assert!((t_ev - PI / 2.0).abs() < 1e-9, "t_ev={t_ev}");
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::default();
        let sol = solve(&mut harmonic, 2.0 * PI, &[1.0, 0.0], 0.0, &opts).unwrap();
        let yf = sol.final_state();
        assert!((yf[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stiff_decay_budget_error() {
        let opts = OdeOptions {
            max_steps: 10,
            ..OdeOptions::default()
        };
        let r = solve(
            &mut |_t, y: &[f64], dy: &mut [f64]| dy[0] = -1e6 * y[0],
            0.0,
            &[1.0],
            1.0,
            &opts,
        );
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
