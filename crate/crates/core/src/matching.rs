//! Cycle bookkeeping shared by the marching solver (observed cycles) and
//! the asymptotic recursion (predicted cycles): the a_n -> a_{n+1} amplitude
//! map, station positions X_n^+, X_n^0, X_n^-, the composite asymptotic
//! profile, and the final-peak tail prediction.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::peaks::PeakSolution;
use crate::regime::a_plus_from_a_minus;
use crate::special::{gamma, ModelParams};
use crate::{Error, Result};

/// One oscillation cycle: amplitude, the three stations
/// X_n^+ (U crosses 1 upward), X_n^0 (peak of H), X_n^- (U crosses 1
/// downward), and the bridge energy E_n with a_n = sqrt(2 E_n lambda).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub n: usize,
    pub a_n: f64,
    pub x_plus: f64,
    pub x_zero: f64,
    pub x_minus: f64,
    pub e_n: f64,
}

/// Ordered sequence of cycles.
#[derive(Debug, Clone, Default)]
pub struct MatchingSequence {
    pub cycles: Vec<CycleRecord>,
}

impl MatchingSequence {
    pub fn new() -> Self {
        MatchingSequence { cycles: Vec::new() }
    }

    /// Amplitudes must grow strictly from cycle to cycle.
    pub fn amplitudes_increasing(&self) -> bool {
        self.cycles.windows(2).all(|w| w[1].a_n > w[0].a_n)
    }
}

/// Which asymptotic branch produced a composite-profile value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileRegime {
    /// exponential ramp (1+a_n) e^{a_n (X - X_n^+)}
    Ramp,
    /// peak (1/lambda) H_{a_n}(X - X_n^0)
    Peak,
    /// exponential decay (1-a_n) e^{-a_n (X - X_n^-)}
    Decay,
    /// small-U valley, H = UV with V = (1-a_n) e^{lambda (X - X_n^-)}
    Valley,
}

/// The completed cycle record plus the seeds of the next cycle.
#[derive(Debug, Clone, Copy)]
pub struct CycleStep {
    pub record: CycleRecord,
    pub a_next: f64,
    pub x_plus_next: f64,
}

/// One step of the matching recursion: places the stations
/// X_n^0 = X_n^+ + (1/a_n) log(2 a_n / ((1+a_n) Gamma(a_n) lambda)),
/// X_n^- = X_n^0 + (1/a_n) log(-2 a_n / ((1-a_n) Gamma(-a_n) lambda)),
/// maps a_n to a_{n+1}, and sets
/// X_{n+1}^+ = X_n^- + (1/lambda) log((1+a_{n+1})/(1-a_n)).
pub fn advance_cycle(
    params: &ModelParams,
    n: usize,
    a_n: f64,
    x_plus: f64,
) -> Result<CycleStep> {
    if !(0.0 < a_n && a_n < 1.0) {
        return Err(Error::Domain(format!(
            "matching recursion needs a_n in (0,1), got {a_n}"
        )));
    }
    let lambda = params.lambda;
    let g_pos = gamma(a_n)?;
    let g_neg = gamma(-a_n)?;
    // Gamma(-a) < 0 on (0,1), so both log arguments are positive
    let arg_zero = 2.0 * a_n / ((1.0 + a_n) * g_pos * lambda);
    let arg_minus = -2.0 * a_n / ((1.0 - a_n) * g_neg * lambda);
    if !(arg_zero > 0.0) || !(arg_minus > 0.0) {
        return Err(Error::Numerical(format!(
            "station log-arguments not positive at a_n = {a_n}"
        )));
    }
    let x_zero = x_plus + arg_zero.ln() / a_n;
    let x_minus = x_zero + arg_minus.ln() / a_n;
    let a_next = a_plus_from_a_minus(a_n)?;
    let x_plus_next = x_minus + ((1.0 + a_next) / (1.0 - a_n)).ln() / lambda;
    Ok(CycleStep {
        record: CycleRecord {
            n,
            a_n,
            x_plus,
            x_zero,
            x_minus,
            e_n: a_n * a_n / (2.0 * lambda),
        },
        a_next,
        x_plus_next,
    })
}

/// Iterate the matching recursion from (a_1, X_1^+) until the amplitude
/// reaches 1 (sequence terminates) or `max_cycles` records exist.
pub fn run_recursion(
    params: &ModelParams,
    a_1: f64,
    x_1_plus: f64,
    max_cycles: usize,
) -> Result<MatchingSequence> {
    if !(0.0 < a_1 && a_1 < 1.0) {
        return Err(Error::Domain(format!(
            "recursion seed a_1 must lie in (0,1), got {a_1}"
        )));
    }
    let mut seq = MatchingSequence::new();
    let mut a = a_1;
    let mut x_plus = x_1_plus;
    for n in 0..max_cycles {
        if a >= 1.0 {
            break;
        }
        let step = advance_cycle(params, n, a, x_plus)?;
        seq.cycles.push(step.record);
        a = step.a_next;
        x_plus = step.x_plus_next;
    }
    Ok(seq)
}

/// Composite asymptotic prediction for H(X) assembled from the per-cycle
/// ramp/peak/decay/valley branches; branch switches sit at the midpoints of
/// the overlap windows (U-exponent crossover in the valley).
pub fn composite_profile(
    params: &ModelParams,
    seq: &MatchingSequence,
    x: f64,
) -> Result<(f64, ProfileRegime)> {
    let cycles = &seq.cycles;
    if cycles.is_empty() {
        return Err(Error::Range("empty matching sequence".into()));
    }
    let span_end = cycles.last().unwrap().x_minus;
    if x < cycles[0].x_plus || x > span_end {
        return Err(Error::Range(format!(
            "X = {x} outside the sequence span [{}, {span_end}]",
            cycles[0].x_plus
        )));
    }
    // locate the cycle whose x_plus is the last one <= x
    let mut idx = 0;
    for (i, c) in cycles.iter().enumerate() {
        if c.x_plus <= x {
            idx = i;
        }
    }
    let c = &cycles[idx];
    let lambda = params.lambda;
    let b1 = 0.5 * (c.x_plus + c.x_zero);
    let b2 = 0.5 * (c.x_zero + c.x_minus);
    if x <= b1 {
        return Ok((
            (1.0 + c.a_n) * (c.a_n * (x - c.x_plus)).exp(),
            ProfileRegime::Ramp,
        ));
    }
    if x <= b2 {
        let sol = PeakSolution::new(c.a_n, 1.0)?;
        return Ok((sol.eval_h(x - c.x_zero)? / lambda, ProfileRegime::Peak));
    }
    // past the peak: decay until the valley U-exponents cross over
    let (a_next, x_plus_next) = match cycles.get(idx + 1) {
        Some(nx) => (nx.a_n, nx.x_plus),
        None => {
            return Ok((
                (1.0 - c.a_n) * (-c.a_n * (x - c.x_minus)).exp(),
                ProfileRegime::Decay,
            ));
        }
    };
    let b3 = (c.a_n * c.x_minus + a_next * x_plus_next) / (c.a_n + a_next);
    if x <= b3 {
        return Ok((
            (1.0 - c.a_n) * (-c.a_n * (x - c.x_minus)).exp(),
            ProfileRegime::Decay,
        ));
    }
    // H = UV with V = (1-a_n) e^{lambda (X - X_n^-)}, U = e^{a_{n+1}(X - X_{n+1}^+)}
    let v = (1.0 - c.a_n) * (lambda * (x - c.x_minus)).exp();
    let u = (a_next * (x - x_plus_next)).exp();
    Ok((u * v, ProfileRegime::Valley))
}

/// Tail profile after the final a = 1 peak located at x_n = e^{X_n^0}:
/// h(x) = (2/lambda)(x/x_n) e^{-x/x_n}.
pub fn tail_prediction(params: &ModelParams, x_n: f64, x: f64) -> Result<f64> {
    if !(x_n > 0.0) || !(x > 0.0) {
        return Err(Error::Domain(format!(
            "tail prediction needs x, x_n > 0, got x = {x}, x_n = {x_n}"
        )));
    }
    let r = x / x_n;
    Ok(2.0 / params.lambda * r * (-r).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ModelParams {
        ModelParams::new(lambda).unwrap()
    }

    #[test]
    fn station_log_arguments_positive() {
        let p = params(1e-3);
        for i in 1..20 {
            let a = i as f64 / 20.0;
            let step = advance_cycle(&p, 0, a, 0.0).unwrap();
            assert!(step.record.x_plus < step.record.x_zero);
            assert!(step.record.x_zero < step.record.x_minus);
            assert!(step.record.x_minus < step.x_plus_next);
            assert!(step.a_next > a);
        }
        assert!(matches!(advance_cycle(&p, 0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn spacing_leading_order() {
        // X_{n+1}^+ - X_n^+ is (1/lambda) log((1+a_{n+1})/(1-a_n)) plus
        // order (1/a) log(1/lambda) station widths
        let p = params(1e-3);
        let a = 0.3;
        let step = advance_cycle(&p, 0, a, 0.0).unwrap();
        let spacing = step.x_plus_next - step.record.x_plus;
        let leading = ((1.0 + step.a_next) / (1.0 - a)).ln() / p.lambda;
        assert!(
            (spacing - leading).abs() < 0.1 * leading,
            "spacing={spacing} leading={leading}"
        );
    }

    #[test]
    fn energy_recursion_bridge() {
        // E_{n+1} - E_n ~ sqrt(lambda) (4 sqrt2/3) E_n^{3/2} for small a_n
        let p = params(1e-4);
        let a = 0.05;
        let step = advance_cycle(&p, 0, a, 0.0).unwrap();
        let e_n = step.record.e_n;
        let e_next = step.a_next * step.a_next / (2.0 * p.lambda);
        let gain = e_next - e_n;
        let predicted = p.lambda.sqrt() * 4.0 * core::f64::consts::SQRT_2 / 3.0 * e_n.powf(1.5);
        assert!(
            (gain - predicted).abs() < 0.1 * predicted,
            "gain={gain} predicted={predicted}"
        );
    }

    #[test]
    fn recursion_monotone_and_terminates() {
        let p = params(1e-3);
        let seq = run_recursion(&p, 0.05, 0.0, 10_000).unwrap();
        assert!(seq.amplitudes_increasing());
        assert!(seq.cycles.len() < 10_000, "recursion did not terminate");
        let last = seq.cycles.last().unwrap();
        assert!(a_plus_from_a_minus(last.a_n).unwrap() >= 1.0 || last.a_n < 1.0);
        // the map continued past the last record because a reached 1
        let next = a_plus_from_a_minus(last.a_n).unwrap();
        assert!(next >= 1.0);
    }

    #[test]
    fn tiny_amplitude_map_oracle() {
        // a_{n+1} = a_n + (2/3) a_n^2 + O(a_n^3)
        let p = params(1e-3);
        let seq = run_recursion(&p, 1e-3, 0.0, 5).unwrap();
        let mut a = 1e-3f64;
        for c in &seq.cycles {
            // the map deviates from the quadratic truncation at O(a^3)
            assert!((c.a_n - a).abs() < 5.0 * a * a * a, "n={} {} vs {a}", c.n, c.a_n);
            a = a + 2.0 / 3.0 * a * a;
        }
    }

    #[test]
    fn spacing_matches_period_bridge() {
        // the leading-order spacing (1/lambda) log((1+a_{n+1})/(1-a_n)),
        // the period bridge 2 sqrt2 sqrt(E_n)/sqrt(lambda), and 2 a_n/lambda
        // pairwise agree for small a_n
        let p = params(1e-4);
        for a in [0.02, 0.05, 0.1] {
            let step = advance_cycle(&p, 0, a, 0.0).unwrap();
            let spacing = ((1.0 + step.a_next) / (1.0 - a)).ln() / p.lambda;
            let bridge =
                2.0 * core::f64::consts::SQRT_2 * step.record.e_n.sqrt() / p.lambda.sqrt();
            let simple = 2.0 * a / p.lambda;
            assert!((spacing - bridge).abs() < 0.1 * bridge, "a={a}: {spacing} vs {bridge}");
            assert!((spacing - simple).abs() < 0.1 * simple, "a={a}: {spacing} vs {simple}");
            assert!((bridge - simple).abs() < 1e-10 * simple, "a={a}");
        }
    }

    #[test]
    fn composite_profile_stations() {
        let p = params(1e-3);
        let seq = run_recursion(&p, 0.3, 0.0, 3).unwrap();
        assert!(seq.cycles.len() >= 2);
        let c = &seq.cycles[0];
        // ramp value at X_n^+
        let (h, reg) = composite_profile(&p, &seq, c.x_plus).unwrap();
        assert_eq!(reg, ProfileRegime::Ramp);
        assert!((h - (1.0 + c.a_n)).abs() < 1e-12);
        // peak height at X_n^0 is order 1/lambda
        let (h, reg) = composite_profile(&p, &seq, c.x_zero).unwrap();
        assert_eq!(reg, ProfileRegime::Peak);
        let h0 = PeakSolution::new(c.a_n, 1.0).unwrap().eval_h(0.0).unwrap() / p.lambda;
        assert!((h - h0).abs() < 1e-9 * h0);
        // the peak scale is 1/lambda (with an a_n-dependent constant)
        assert!(h > 0.01 / p.lambda && h < 10.0 / p.lambda, "h={h}");
        // out of span
        assert!(matches!(
            composite_profile(&p, &seq, c.x_plus - 1.0),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn ramp_and_peak_branches_overlap() {
        // in the window X - X_n^+ >> 1, X - X_n^0 << -1 the two formulas
        // agree to 15% at lambda = 1e-3
        let p = params(1e-3);
        let a = 0.3;
        let step = advance_cycle(&p, 0, a, 0.0).unwrap();
        let c = step.record;
        let sol = PeakSolution::new(a, 1.0).unwrap();
        // deep in the window the peak branch is within O(e^{a(X - X_n^0)})
        // of its growth asymptote, which is exactly the ramp
        let x = c.x_plus + 3.0;
        assert!(x - c.x_plus > 1.0 && c.x_zero - x > 1.0);
        let ramp = (1.0 + a) * (a * (x - c.x_plus)).exp();
        let peak = sol.eval_h(x - c.x_zero).unwrap() / p.lambda;
        assert!(
            (ramp - peak).abs() < 0.15 * peak,
            "ramp={ramp} peak={peak}"
        );
    }

    #[test]
    fn valley_branch_continuous_with_next_ramp() {
        let p = params(1e-3);
        let seq = run_recursion(&p, 0.3, 0.0, 3).unwrap();
        let nx = &seq.cycles[1];
        // just left of the next X^+ the valley formula approaches 1 + a_{n+1}
        let x = nx.x_plus - 1e-9;
        let (h, reg) = composite_profile(&p, &seq, x).unwrap();
        assert_eq!(reg, ProfileRegime::Valley);
        assert!((h - (1.0 + nx.a_n)).abs() < 1e-6, "h={h}");
    }

    #[test]
    fn tail_prediction_shape() {
        let p = params(0.1);
        let x_n = 3.7;
        // maximum 2/(lambda e) at x = x_n
        let peak = tail_prediction(&p, x_n, x_n).unwrap();
        assert!((peak - 2.0 / (p.lambda * core::f64::consts::E)).abs() < 1e-12);
        assert!(tail_prediction(&p, x_n, 0.9 * x_n).unwrap() < peak);
        assert!(tail_prediction(&p, x_n, 1.1 * x_n).unwrap() < peak);
        // identical to (1/lambda) H_1(X - X_n^0) with x_n = e^{X_n^0}
        let sol = PeakSolution::new(1.0, 1.0).unwrap();
        for x in [0.5, 2.0, 5.0, 20.0] {
            let lhs = tail_prediction(&p, x_n, x).unwrap();
            let rhs = sol.eval_h((x / x_n).ln()).unwrap() / p.lambda;
            assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1e-10), "x={x}");
        }
    }
}
