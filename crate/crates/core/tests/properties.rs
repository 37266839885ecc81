//! Randomized structural invariants: symmetries, homogeneity, monotonicity
//! and conservation laws that must hold on every admissible input, not just
//! at hand-picked points.

use coagscale_core::profile::{eval_i, LogGrid, Trajectory};
use coagscale_core::regime::{a_plus_from_a_minus, energy, period, phi, turning_points};
use coagscale_core::special::{psi, dispersion_root};
use coagscale_core::{Complex64, ModelParams};
use proptest::prelude::*;

fn lambda_strategy() -> impl Strategy<Value = f64> {
    // log-uniform over (1e-3, 0.3]
    (-3.0f64..-0.523).prop_map(|t| 10f64.powf(t))
}

/// Smooth positive bump trajectory for the nonlocal operator tests.
fn bump_trajectory(params: ModelParams, amp: f64, width: f64) -> Trajectory {
    let grid = LogGrid::new(-10.0, 0.05, 401).unwrap();
    let f = |x: f64| 1.0 + amp * (-(x / width) * (x / width)).exp();
    let h: Vec<f64> = (0..grid.count).map(|i| f(grid.node(i))).collect();
    Trajectory::constant(params, grid, 1.0).with_h(h)
}

trait WithH {
    fn with_h(self, h: Vec<f64>) -> Self;
}

impl WithH for Trajectory {
    fn with_h(mut self, h: Vec<f64>) -> Self {
        self.h_values = h;
        self
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    // Psi_lambda(conj mu) = conj Psi_lambda(mu): roots come in conjugate pairs
    #[test]
    fn psi_conjugate_symmetry(
        lambda in lambda_strategy(),
        re in 0.0f64..0.4,
        im in 0.01f64..2.0,
    ) {
        let mu = Complex64::new(re, im);
        let a = psi(lambda, mu).unwrap();
        let b = psi(lambda, mu.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() < 1e-13 * (1.0 + a.norm()));
    }

    // the positive-frequency root sits in the open first quadrant and
    // annihilates Psi
    #[test]
    fn dispersion_root_first_quadrant(lambda in lambda_strategy()) {
        let mu = dispersion_root(lambda).unwrap();
        prop_assert!(mu.re > 0.0 && mu.im > 0.0);
        prop_assert!(psi(lambda, mu).unwrap().norm() < 1e-12);
    }

    // turning points straddle U = 1 and both carry the prescribed energy
    #[test]
    fn turning_points_bracket_and_conserve(e in 1e-6f64..1e4) {
        let tp = turning_points(e, 0.0).unwrap();
        prop_assert!(tp.ell_minus <= 0.0 && tp.u_minus <= 1.0);
        prop_assert!(tp.ell_plus >= 0.0 && tp.u_plus >= 1.0);
        // e^l - l - 1 = E at both ends, stated in l = log U so that the
        // check survives the underflow of U_- at large E
        for l in [tp.ell_minus, tp.ell_plus] {
            prop_assert!((l.exp() - l - 1.0 - e).abs() < 1e-9 * (1.0 + e));
        }
        if tp.u_minus > 0.0 {
            prop_assert!((energy(tp.u_minus, 0.0).unwrap() - e).abs() < 1e-9 * (1.0 + e));
        }
    }

    // T(E) > 2 pi (harmonic limit from below) and increases with E;
    // Phi(E) is positive and increases with E
    #[test]
    fn period_and_gain_monotone(e in 1e-4f64..1e3, factor in 1.1f64..4.0) {
        let t1 = period(e).unwrap();
        let t2 = period(e * factor).unwrap();
        prop_assert!(t1 > 2.0 * core::f64::consts::PI);
        prop_assert!(t2 > t1);
        let p1 = phi(e).unwrap();
        let p2 = phi(e * factor).unwrap();
        prop_assert!(p1 > 0.0 && p2 > p1);
    }

    // the valley exit amplitude exceeds the entry amplitude and the map
    // a_- -> a_+ is strictly increasing
    #[test]
    fn amplitude_map_monotone(a in 0.01f64..0.95, bump in 0.001f64..0.04) {
        let a2 = (a + bump).min(0.99);
        let p1 = a_plus_from_a_minus(a).unwrap();
        let p2 = a_plus_from_a_minus(a2).unwrap();
        prop_assert!(p1 > a);
        prop_assert!(p2 > p1);
    }
}

proptest! {
    // the nonlocal integral is expensive; fewer random cases
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    // I[cH] = c^2 I[H]: the integrand is bilinear in the profile
    #[test]
    fn nonlocal_operator_quadratic_homogeneity(
        amp in 0.1f64..1.0,
        width in 1.0f64..3.0,
        scale in 0.3f64..3.0,
    ) {
        let params = ModelParams::new(0.2).unwrap();
        let base = bump_trajectory(params.clone(), amp, width);
        let mut scaled = base.clone();
        for v in scaled.h_values.iter_mut() {
            *v *= scale;
        }
        scaled.tail_base = base.tail_base * scale;
        let x = 5.0;
        let i1 = eval_i(&base, x).unwrap();
        let i2 = eval_i(&scaled, x).unwrap();
        prop_assert!(
            (i2 - scale * scale * i1).abs() < 1e-8 * (1.0 + i2.abs()),
            "{i2} vs {}", scale * scale * i1
        );
    }

    // pointwise H1 >= H2 >= 0 implies I[H1] >= I[H2]
    #[test]
    fn nonlocal_operator_monotone(
        amp in 0.1f64..1.0,
        extra in 0.05f64..0.5,
        width in 1.0f64..3.0,
    ) {
        let params = ModelParams::new(0.2).unwrap();
        let lo = bump_trajectory(params.clone(), amp, width);
        let hi = bump_trajectory(params, amp + extra, width);
        let x = 5.0;
        prop_assert!(eval_i(&hi, x).unwrap() >= eval_i(&lo, x).unwrap());
    }
}
