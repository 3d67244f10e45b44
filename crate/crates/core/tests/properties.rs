//! Property tests for lattices and discrepancy against brute-force oracles.

use proptest::prelude::*;
use qmc_frames::certify::{Certificate, OmegaSource};
use qmc_frames::discrepancy::{anchored_discrepancy, shift_discrepancy, star_discrepancy_unit, ShiftConfig};
use qmc_frames::gabor::GaussianWindow;
use qmc_frames::geometry::Rect;
use qmc_frames::lattice::Lattice;

/// Grid oracle for the star discrepancy over `η ∈ {0, 1/k, …, 1}²`. Every
/// grid value is attained, and rounding an optimal corner to the grid moves
/// the volume by at most `2/k`, so `exact − 2/k ≤ grid ≤ exact`.
fn star_discrepancy_grid(points: &[[f64; 2]], k: usize) -> f64 {
    // counts[i][j] = #{p : p.x ≤ i/k, p.y ≤ j/k}
    let mut counts = vec![vec![0u32; k + 1]; k + 1];
    for p in points {
        let i = (p[0] * k as f64).ceil() as usize;
        let j = (p[1] * k as f64).ceil() as usize;
        counts[i.min(k)][j.min(k)] += 1;
    }
    for i in 0..=k {
        for j in 0..=k {
            let left = if i > 0 { counts[i - 1][j] } else { 0 };
            let below = if j > 0 { counts[i][j - 1] } else { 0 };
            let diag = if i > 0 && j > 0 { counts[i - 1][j - 1] } else { 0 };
            counts[i][j] += left + below - diag;
        }
    }
    let n = points.len() as f64;
    let mut worst = 0.0f64;
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            let vol = (i as f64 / k as f64) * (j as f64 / k as f64);
            worst = worst.max((c as f64 / n - vol).abs());
        }
    }
    worst
}

fn basis_strategy() -> impl Strategy<Value = [[f64; 2]; 2]> {
    (0.3f64..2.0, -1.0f64..1.0, -1.0f64..1.0, 0.3f64..2.0)
        .prop_filter("well conditioned", |(a, b, c, d)| (a * d - b * c).abs() > 0.2)
        .prop_map(|(a, b, c, d)| [[a, b], [c, d]])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn enumeration_matches_brute_force(
        basis in basis_strategy(),
        x0 in -4.0f64..4.0, w in 0.1f64..4.0,
        y0 in -4.0f64..4.0, h in 0.1f64..4.0,
    ) {
        let lat = Lattice::new(basis, 1.0, 1.0).unwrap();
        let bx = Rect::new(x0, x0 + w, y0, y0 + h).unwrap();
        let mut fast = lat.enumerate_in_box(&bx).unwrap();
        let mut brute = Vec::new();
        for m in -60..=60 {
            for n in -60..=60 {
                let p = lat.point(m, n);
                if bx.contains(p) {
                    brute.push(p);
                }
            }
        }
        let key = |p: &[f64; 2]| (p[0].to_bits(), p[1].to_bits());
        fast.sort_by_key(key);
        brute.sort_by_key(key);
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn star_discrepancy_within_grid_resolution(
        pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..=64)
    ) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let exact = star_discrepancy_unit(&pts, pts.len()).unwrap();
        let grid = star_discrepancy_grid(&pts, 512);
        prop_assert!(grid <= exact + 1e-12, "grid {} exact {}", grid, exact);
        prop_assert!(exact - grid <= 2.0 / 512.0 + 1e-12, "grid {} exact {}", grid, exact);
    }

    #[test]
    fn anchored_discrepancy_is_periodic(
        s in 0.0f64..1.0, t in 0.0f64..1.0, m in -5i64..=5, n in -5i64..=5, a in 0.2f64..0.6,
    ) {
        let lat = Lattice::golden().with_scale(a).unwrap();
        let rho = lat.fundamental_point(s, t);
        let shift = lat.point(m, n);
        let moved = [rho[0] + shift[0], rho[1] + shift[1]];
        let d0 = anchored_discrepancy(&lat, rho).unwrap();
        let d1 = anchored_discrepancy(&lat, moved).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9, "{} vs {}", d0, d1);
    }

    #[test]
    fn admissibility_margin_is_monotone_in_bound(basis in basis_strategy(), m1 in 1u64..40, extra in 0u64..40) {
        let lat = Lattice::new(basis, 1.0, 1.0).unwrap();
        let small = lat.admissibility_margin(m1).unwrap();
        let large = lat.admissibility_margin(m1 + extra).unwrap();
        prop_assert!(large.margin <= small.margin);
        prop_assert!(small.margin >= 0.0);
    }

    #[test]
    fn certificate_arithmetic_is_exact(d in 0.0f64..0.05, omega in 1.0f64..200.0) {
        let est = qmc_frames::discrepancy::DiscrepancyEstimate {
            lower_bound: 0.5 * d,
            estimate: d,
            grid_resolution: 1.0 / 64.0,
            anchors_evaluated: 1,
            argmax_anchor: [0.0, 0.0],
        };
        let c = Certificate::assemble(est, omega, OmegaSource::Closed, &GaussianWindow::optimal(), 0.1);
        prop_assert_eq!(c.lower_bound, 1.0 - c.epsilon);
        prop_assert_eq!(c.upper_bound, 1.0 + c.epsilon);
        prop_assert!(((c.upper_bound - 1.0) - (1.0 - c.lower_bound)).abs() <= 2.0 * f64::EPSILON * c.upper_bound);
        prop_assert_eq!(c.valid, c.epsilon < 1.0);
        prop_assert_eq!(c.valid, c.lower_bound > 0.0);
        prop_assert!(c.epsilon_optimistic <= c.epsilon);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn shift_estimate_brackets(a in 0.15f64..0.6, tau in 0.5f64..2.0) {
        let lat = Lattice::golden().with_scale(a).unwrap().with_tau(tau).unwrap();
        let cfg = ShiftConfig { grid_resolution: 1.0 / 16.0, ..ShiftConfig::default() };
        let d = shift_discrepancy(&lat, &cfg).unwrap();
        prop_assert!(0.0 <= d.lower_bound && d.lower_bound <= d.estimate && d.estimate <= 1.0);
        // the refined estimate is attained at its anchor
        let at = anchored_discrepancy(&lat, d.argmax_anchor).unwrap();
        prop_assert!(at <= d.estimate + 1e-12);
    }
}
