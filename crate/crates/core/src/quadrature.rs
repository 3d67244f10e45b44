//! Weighted quadrature over ℝ²: the weights `a_λ = ∫ χ_{𝕂+ρ}(λ)/N_ρ dρ`, the
//! error functional `e(h, Λ) = ∫h − Σ a_λ h(λ)`, its Koksma–Hlawka bound, and
//! the area-preserving dilation of integrands.
//!
//! Integrands carry a Gaussian envelope `|h(p)| ≤ A·e^{−α|p−c|²}`. Every
//! truncated sum or integral reports the envelope tail it dropped.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::discrepancy::{min_box_count, PointSource};
use crate::error::{check_positive, Error, Result};
use crate::geometry::{pairwise_sum, Point, Rect, BOX_TOL};
use crate::integrate::adaptive_2d;
use crate::lattice::Lattice;

/// Absolute tolerance for adaptive integrals of integrands and their partials.
pub const INTEGRATION_TOL: f64 = 1e-10;

/// Distance from a point to the centre of any unit square containing it.
const HALF_DIAGONAL: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gaussian bound `p ↦ amplitude · exp(−rate·|p − center|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub center: Point,
    pub amplitude: f64,
    pub rate: f64,
}

impl Envelope {
    pub fn gaussian(center: Point, amplitude: f64, rate: f64) -> Result<Self> {
        check_positive("envelope rate", rate)?;
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::NonFinite { name: "envelope amplitude", value: amplitude });
        }
        Ok(Envelope { center, amplitude, rate })
    }

    pub fn at(&self, p: Point) -> f64 {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        self.amplitude * (-self.rate * (dx * dx + dy * dy)).exp()
    }

    /// `∫_{|p−c|>r} E(p) dp`.
    pub fn integral_tail(&self, r: f64) -> f64 {
        PI * self.amplitude / self.rate * (-self.rate * r.max(0.0).powi(2)).exp()
    }

    /// Bound on `Σ_{|λ−c|>r} a_λ E(λ)` when every weight `a_λ` is the area of a
    /// region lying within distance `spread` of `λ`. Infinite for `r < 2·spread`.
    pub fn sum_tail(&self, r: f64, spread: f64) -> f64 {
        let t = r - 2.0 * spread;
        if t < 0.0 {
            return f64::INFINITY;
        }
        let a = self.rate;
        let gauss = (-a * t * t).exp() / (2.0 * a);
        let linear = spread * PI.sqrt() / (2.0 * a.sqrt()) * libm::erfc(a.sqrt() * t);
        2.0 * PI * self.amplitude * (gauss + linear)
    }

    /// Smallest radius (up to bisection accuracy) whose combined sum and
    /// integral tails are at most `tol`.
    pub fn truncation_radius(&self, spread: f64, tol: f64) -> Result<f64> {
        check_positive("truncation tolerance", tol)?;
        let budget = |r: f64| self.integral_tail(r) + self.sum_tail(r, spread);
        let mut lo = 2.0 * spread;
        if self.amplitude == 0.0 {
            return Ok(lo);
        }
        let mut hi = lo + 1.0 / self.rate.sqrt();
        while budget(hi) > tol {
            lo = hi;
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::TruncationBudget { budget: budget(hi), tolerance: tol });
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if budget(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// A smooth integrand on ℝ² with its first mixed partials and a Gaussian envelope.
pub trait SmoothFn2D: Sync {
    fn eval(&self, p: Point) -> Complex64;
    fn d1(&self, p: Point) -> Complex64;
    fn d2(&self, p: Point) -> Complex64;
    fn d12(&self, p: Point) -> Complex64;
    /// Bound on `|eval|`.
    fn envelope(&self) -> Envelope;
    /// Common bound on `|d1|`, `|d2|` and `|d12|`.
    fn derivative_envelope(&self) -> Envelope;
    fn exact_integral(&self) -> Option<Complex64> {
        None
    }
    /// `(‖∂₁h‖₁, ‖∂₂h‖₁, ‖∂₁₂h‖₁)` when known in closed form.
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        None
    }
}

impl<T: SmoothFn2D + ?Sized> SmoothFn2D for &T {
    fn eval(&self, p: Point) -> Complex64 {
        (**self).eval(p)
    }
    fn d1(&self, p: Point) -> Complex64 {
        (**self).d1(p)
    }
    fn d2(&self, p: Point) -> Complex64 {
        (**self).d2(p)
    }
    fn d12(&self, p: Point) -> Complex64 {
        (**self).d12(p)
    }
    fn envelope(&self) -> Envelope {
        (**self).envelope()
    }
    fn derivative_envelope(&self) -> Envelope {
        (**self).derivative_envelope()
    }
    fn exact_integral(&self) -> Option<Complex64> {
        (**self).exact_integral()
    }
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        (**self).exact_partial_l1()
    }
}

/// `exp(−π((x−c₁)²/sx² + (y−c₂)²/sy²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    center: Point,
    sx: f64,
    sy: f64,
}

impl Gaussian {
    pub fn isotropic() -> Self {
        Gaussian { center: [0.0, 0.0], sx: 1.0, sy: 1.0 }
    }

    pub fn new(center: Point, sx: f64, sy: f64) -> Result<Self> {
        check_positive("sx", sx)?;
        check_positive("sy", sy)?;
        if !(center[0].is_finite() && center[1].is_finite()) {
            return Err(Error::NonFinite { name: "center", value: f64::NAN });
        }
        Ok(Gaussian { center, sx, sy })
    }

    pub fn widths(&self) -> (f64, f64) {
        (self.sx, self.sy)
    }

    fn factors(&self, p: Point) -> (f64, f64, f64) {
        let (u, v) = (p[0] - self.center[0], p[1] - self.center[1]);
        let value = (-PI * (u * u / (self.sx * self.sx) + v * v / (self.sy * self.sy))).exp();
        (value, -2.0 * PI * u / (self.sx * self.sx), -2.0 * PI * v / (self.sy * self.sy))
    }
}

impl SmoothFn2D for Gaussian {
    fn eval(&self, p: Point) -> Complex64 {
        Complex64::new(self.factors(p).0, 0.0)
    }
    fn d1(&self, p: Point) -> Complex64 {
        let (h, f1, _) = self.factors(p);
        Complex64::new(f1 * h, 0.0)
    }
    fn d2(&self, p: Point) -> Complex64 {
        let (h, _, f2) = self.factors(p);
        Complex64::new(f2 * h, 0.0)
    }
    fn d12(&self, p: Point) -> Complex64 {
        let (h, f1, f2) = self.factors(p);
        Complex64::new(f1 * f2 * h, 0.0)
    }
    fn envelope(&self) -> Envelope {
        let smax = self.sx.max(self.sy);
        Envelope { center: self.center, amplitude: 1.0, rate: PI / (smax * smax) }
    }
    fn derivative_envelope(&self) -> Envelope {
        // |u|/s² · e^{−πu²/(2s²)} peaks at u² = s²/π; the other half of the
        // exponent is kept as the decay rate.
        let (smin, smax) = (self.sx.min(self.sy), self.sx.max(self.sy));
        let first = 2.0 / smin * (PI / E).sqrt();
        let mixed = 4.0 * PI / (E * self.sx * self.sy);
        Envelope { center: self.center, amplitude: first.max(mixed).max(1.0), rate: PI / (2.0 * smax * smax) }
    }
    fn exact_integral(&self) -> Option<Complex64> {
        Some(Complex64::new(self.sx * self.sy, 0.0))
    }
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        Some([2.0 * self.sy, 2.0 * self.sx, 4.0])
    }
}

/// The zero integrand.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Zero;

impl SmoothFn2D for Zero {
    fn eval(&self, _: Point) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d1(&self, _: Point) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d2(&self, _: Point) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn d12(&self, _: Point) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn envelope(&self) -> Envelope {
        Envelope { center: [0.0, 0.0], amplitude: 0.0, rate: 1.0 }
    }
    fn derivative_envelope(&self) -> Envelope {
        self.envelope()
    }
    fn exact_integral(&self) -> Option<Complex64> {
        Some(Complex64::new(0.0, 0.0))
    }
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        Some([0.0; 3])
    }
}

/// `h_τ(η) = h(τη₁, τ⁻¹η₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilated<H> {
    inner: H,
    tau: f64,
}

pub fn dilate_fn<H: SmoothFn2D>(h: H, tau: f64) -> Result<Dilated<H>> {
    check_positive("tau", tau)?;
    Ok(Dilated { inner: h, tau })
}

impl<H: SmoothFn2D> Dilated<H> {
    fn map(&self, p: Point) -> Point {
        [self.tau * p[0], p[1] / self.tau]
    }

    fn map_envelope(&self, e: Envelope, factor: f64) -> Envelope {
        let t2 = self.tau * self.tau;
        Envelope {
            center: [e.center[0] / self.tau, e.center[1] * self.tau],
            amplitude: e.amplitude * factor,
            rate: e.rate * t2.min(1.0 / t2),
        }
    }
}

impl<H: SmoothFn2D> SmoothFn2D for Dilated<H> {
    fn eval(&self, p: Point) -> Complex64 {
        self.inner.eval(self.map(p))
    }
    fn d1(&self, p: Point) -> Complex64 {
        self.inner.d1(self.map(p)) * self.tau
    }
    fn d2(&self, p: Point) -> Complex64 {
        self.inner.d2(self.map(p)) / self.tau
    }
    fn d12(&self, p: Point) -> Complex64 {
        self.inner.d12(self.map(p))
    }
    fn envelope(&self) -> Envelope {
        self.map_envelope(self.inner.envelope(), 1.0)
    }
    fn derivative_envelope(&self) -> Envelope {
        self.map_envelope(self.inner.derivative_envelope(), self.tau.max(1.0 / self.tau))
    }
    fn exact_integral(&self) -> Option<Complex64> {
        self.inner.exact_integral()
    }
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        self.inner.exact_partial_l1().map(|[n1, n2, n12]| [self.tau * n1, n2 / self.tau, n12])
    }
}

/// Finite sampling set with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch(format!("{} points but {} weights", points.len(), weights.len())));
        }
        for p in &points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::NonFinite { name: "point coordinate", value: f64::NAN });
            }
        }
        for &w in &weights {
            check_positive("weight", w)?;
        }
        Ok(PointSet { points, weights })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses `x, y, weight` rows; a non-numeric first row is taken as header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => {
                    points.push([v[0], v[1]]);
                    weights.push(v[2]);
                }
                Err(_) if points.is_empty() && fields.first() == Some(&"x") => continue,
                _ => return Err(Error::Parse(format!("line {}: expected `x, y, weight`, got `{line}`", i + 1))),
            }
        }
        PointSet::new(points, weights)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,weight\n");
        for (p, w) in self.points.iter().zip(&self.weights) {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], w));
        }
        out
    }
}

impl PointSource for PointSet {
    fn points_in(&self, bx: &Rect) -> Result<Vec<Point>> {
        Ok(self.points.iter().copied().filter(|&p| bx.contains(p)).collect())
    }
}

/// Plain finite point sets.
impl PointSource for [Point] {
    fn points_in(&self, bx: &Rect) -> Result<Vec<Point>> {
        Ok(self.iter().copied().filter(|&p| bx.contains(p)).collect())
    }
}

/// A sampling set that can list weighted points near a location.
pub trait WeightedSource: Sync {
    /// Weighted points inside the closed box.
    fn weighted_in(&self, bx: &Rect) -> Result<Vec<(Point, f64)>>;
    /// Each weight is the area of a region within this distance of its point.
    fn spread(&self) -> f64;
    /// Bounding box for finite sets, which are summed without truncation.
    fn extent(&self) -> Option<Rect>;
}

/// Lattices carry the weight `det(Λ)` on every point.
impl WeightedSource for Lattice {
    fn weighted_in(&self, bx: &Rect) -> Result<Vec<(Point, f64)>> {
        let det = self.det();
        Ok(self.enumerate_in_box(bx)?.into_iter().map(|p| (p, det)).collect())
    }
    fn spread(&self) -> f64 {
        self.fundamental_bbox().1
    }
    fn extent(&self) -> Option<Rect> {
        None
    }
}

impl WeightedSource for PointSet {
    fn weighted_in(&self, bx: &Rect) -> Result<Vec<(Point, f64)>> {
        Ok(self.points.iter().zip(&self.weights).filter(|(p, _)| bx.contains(**p)).map(|(p, w)| (*p, *w)).collect())
    }
    fn spread(&self) -> f64 {
        HALF_DIAGONAL
    }
    fn extent(&self) -> Option<Rect> {
        let mut it = self.points.iter();
        let first = it.next()?;
        let mut r = Rect { x0: first[0], x1: first[0], y0: first[1], y1: first[1] };
        for p in it {
            r.x0 = r.x0.min(p[0]);
            r.x1 = r.x1.max(p[0]);
            r.y0 = r.y0.min(p[1]);
            r.y1 = r.y1.max(p[1]);
        }
        Some(r)
    }
}

/// `N_ρ = #(Λ ∩ (𝕂 + ρ))` in the closed unit square. Zero signals a coverage
/// violation to the caller.
pub fn box_count<S: PointSource + ?Sized>(source: &S, rho: Point) -> Result<usize> {
    Ok(source.points_in(&Rect::unit_at(rho))?.len())
}

/// Input to [`qmc_weights`].
#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a> {
    Lattice(&'a Lattice),
    Points(&'a [Point]),
}

/// Weights `a_λ` for the points of `Λ` inside `region`.
///
/// Lattices are checked for `N_ρ ≥ 1` over a full period of anchors and then
/// receive `det(Λ)`. Finite sets are checked on every anchor whose square fits
/// inside `region`, and each weight is integrated exactly by [`sweep_weight`].
pub fn qmc_weights(sampling: Sampling<'_>, region: &Rect) -> Result<PointSet> {
    match sampling {
        Sampling::Lattice(lat) => {
            let (n, rho) = min_box_count(lat)?;
            if n == 0 {
                return Err(Error::CoverageViolation { x: rho[0], y: rho[1] });
            }
            let points = lat.enumerate_in_box(region)?;
            let weights = vec![lat.det(); points.len()];
            PointSet::new(points, weights)
        }
        Sampling::Points(all) => {
            check_coverage(all, region)?;
            let points: Vec<Point> = all.iter().copied().filter(|&p| region.contains(p)).collect();
            let weights = points.par_iter().map(|&p| sweep_weight(all, p)).collect::<Result<Vec<f64>>>()?;
            PointSet::new(points, weights)
        }
    }
}

/// Exact `a_λ = ∫_{λ−𝕂} 1/N_ρ dρ`. The anchor square `λ − 𝕂` is cut by the
/// entry/exit coordinates of the points within ∞-distance 1 of `λ`; on each
/// open cell `N_ρ` is constant.
pub fn sweep_weight<S: PointSource + ?Sized>(source: &S, lambda: Point) -> Result<f64> {
    let near = source.points_in(&Rect {
        x0: lambda[0] - 1.0,
        x1: lambda[0] + 1.0,
        y0: lambda[1] - 1.0,
        y1: lambda[1] + 1.0,
    })?;
    let cuts = |axis: usize| {
        let (lo, hi) = (lambda[axis] - 1.0, lambda[axis]);
        let mut v = vec![lo, hi];
        for p in &near {
            for c in [p[axis] - 1.0, p[axis]] {
                if c > lo + BOX_TOL && c < hi - BOX_TOL {
                    v.push(c);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= BOX_TOL);
        v
    };
    let (xs, ys) = (cuts(0), cuts(1));
    let mut areas = Vec::with_capacity((xs.len() - 1) * (ys.len() - 1));
    for wx in xs.windows(2) {
        let cx = 0.5 * (wx[0] + wx[1]);
        let column: Vec<f64> = near.iter().filter(|p| (0.0..=1.0).contains(&(p[0] - cx))).map(|p| p[1]).collect();
        for wy in ys.windows(2) {
            let cy = 0.5 * (wy[0] + wy[1]);
            let n = column.iter().filter(|&&y| (0.0..=1.0).contains(&(y - cy))).count();
            if n == 0 {
                return Err(Error::CoverageViolation { x: cx, y: cy });
            }
            areas.push((wx[1] - wx[0]) * (wy[1] - wy[0]) / n as f64);
        }
    }
    Ok(pairwise_sum(&areas))
}

/// Checks `N_ρ ≥ 1` for every anchor `ρ` with `𝕂 + ρ ⊂ region`.
fn check_coverage(points: &[Point], region: &Rect) -> Result<()> {
    let (ax0, ax1, ay0, ay1) = (region.x0, region.x1 - 1.0, region.y0, region.y1 - 1.0);
    if ax1 < ax0 || ay1 < ay0 {
        return Ok(());
    }
    let inside: Vec<Point> = points.iter().copied().filter(|&p| region.contains(p)).collect();
    let events = |axis: usize, lo: f64, hi: f64| {
        let mut v = vec![lo, hi];
        for p in &inside {
            for c in [p[axis] - 1.0, p[axis]] {
                if c > lo && c < hi {
                    v.push(c);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (events(0, ax0, ax1), events(1, ay0, ay1));
    let xs = if xs.len() == 1 { vec![ax0, ax0] } else { xs };
    let ys = if ys.len() == 1 { vec![ay0, ay0] } else { ys };
    for wx in xs.windows(2) {
        let cx = 0.5 * (wx[0] + wx[1]);
        let mut column: Vec<f64> = inside.iter().filter(|p| (0.0..=1.0).contains(&(p[0] - cx))).map(|p| p[1]).collect();
        column.sort_by(f64::total_cmp);
        for wy in ys.windows(2) {
            let cy = 0.5 * (wy[0] + wy[1]);
            let lo = column.partition_point(|&y| y < cy);
            let hi = column.partition_point(|&y| y <= cy + 1.0);
            if hi == lo {
                return Err(Error::CoverageViolation { x: cx, y: cy });
            }
        }
    }
    Ok(())
}

/// `e(h, Λ)` with the budget of everything that was truncated or approximated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureError {
    pub value: Complex64,
    pub integral: Complex64,
    pub weighted_sum: Complex64,
    /// Envelope tail of the truncated sum and integral plus integration error.
    pub budget: f64,
    pub radius: f64,
    pub points_used: usize,
}

fn weighted_sum<H: SmoothFn2D + ?Sized, S: WeightedSource + ?Sized>(
    h: &H,
    source: &S,
    center: Point,
    radius: f64,
) -> Result<(Complex64, usize, bool)> {
    let disc = Rect::new(center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius)?;
    let (bx, truncated) = match source.extent() {
        Some(ext) => (ext.expand(BOX_TOL), false),
        None => (disc, true),
    };
    let pts = source.weighted_in(&bx)?;
    let terms: Vec<Complex64> = pts
        .par_iter()
        .filter(|(p, _)| !truncated || (p[0] - center[0]).hypot(p[1] - center[1]) <= radius)
        .map(|&(p, w)| h.eval(p) * w)
        .collect();
    Ok((pairwise_sum(&terms), terms.len(), truncated))
}

fn integral_of<H: SmoothFn2D + ?Sized>(h: &H, center: Point, radius: f64) -> Result<(Complex64, f64)> {
    if let Some(v) = h.exact_integral() {
        return Ok((v, 0.0));
    }
    let bx = Rect::new(center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius)?;
    let f = |x: f64, y: f64| h.eval([x, y]);
    adaptive_2d(&f, &bx, &[center[0]], &[center[1]], INTEGRATION_TOL)
}

/// `e(h, Λ)` with both `∫h` and `Σ a_λ h(λ)` truncated to the disc of the given
/// radius around the envelope centre (finite sets are summed in full).
pub fn quadrature_error<H: SmoothFn2D + ?Sized, S: WeightedSource + ?Sized>(
    h: &H,
    source: &S,
    radius: f64,
) -> Result<QuadratureError> {
    check_positive("truncation radius", radius)?;
    let env = h.envelope();
    let (weighted_sum, points_used, truncated) = weighted_sum(h, source, env.center, radius)?;
    let (integral, int_err) = integral_of(h, env.center, radius)?;
    let sum_tail = if truncated { env.sum_tail(radius, source.spread()) } else { 0.0 };
    let int_tail = if h.exact_integral().is_some() { 0.0 } else { env.integral_tail(radius) };
    Ok(QuadratureError {
        value: integral - weighted_sum,
        integral,
        weighted_sum,
        budget: sum_tail + int_tail + int_err,
        radius,
        points_used,
    })
}

/// [`quadrature_error`] at the smallest radius whose envelope tails fit `tol`.
pub fn quadrature_error_within<H: SmoothFn2D + ?Sized, S: WeightedSource + ?Sized>(
    h: &H,
    source: &S,
    tol: f64,
) -> Result<QuadratureError> {
    let radius = truncation_radius_for(h, source, 0.5 * tol)?;
    let e = quadrature_error(h, source, radius)?;
    if e.budget > tol {
        return Err(Error::TruncationBudget { budget: e.budget, tolerance: tol });
    }
    Ok(e)
}

pub fn truncation_radius_for<H: SmoothFn2D + ?Sized, S: WeightedSource + ?Sized>(
    h: &H,
    source: &S,
    tol: f64,
) -> Result<f64> {
    h.envelope().truncation_radius(source.spread(), tol)
}

/// `e_ρ(h, Λ) = ∫_{𝕂+ρ} h − N_ρ⁻¹ Σ_{λ ∈ 𝕂+ρ} h(λ)`.
pub fn local_error<H: SmoothFn2D + ?Sized, S: PointSource + ?Sized>(
    h: &H,
    source: &S,
    rho: Point,
) -> Result<Complex64> {
    let square = Rect::unit_at(rho);
    let pts = source.points_in(&square)?;
    if pts.is_empty() {
        return Err(Error::CoverageViolation { x: rho[0], y: rho[1] });
    }
    let f = |x: f64, y: f64| h.eval([x, y]);
    let (int, _) = adaptive_2d(&f, &square, &[], &[], 1e-13)?;
    let vals: Vec<Complex64> = pts.iter().map(|&p| h.eval(p)).collect();
    Ok(int - pairwise_sum(&vals) / pts.len() as f64)
}

/// The three partial L¹ norms with their numerical budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialNorms {
    pub norms: [f64; 3],
    pub budget: f64,
    pub numeric: bool,
}

impl PartialNorms {
    pub fn total(&self) -> f64 {
        self.norms.iter().sum()
    }
}

/// `‖∂₁h‖₁, ‖∂₂h‖₁, ‖∂₁₂h‖₁` by adaptive integration over the disc where the
/// derivative envelope tail drops below the integration tolerance.
pub fn partial_l1_norms<H: SmoothFn2D + ?Sized>(h: &H) -> Result<PartialNorms> {
    let env = h.derivative_envelope();
    if env.amplitude == 0.0 {
        return Ok(PartialNorms { norms: [0.0; 3], budget: 0.0, numeric: true });
    }
    let tail_tol = 0.1 * INTEGRATION_TOL;
    // smallest r with integral_tail(r) ≤ tail_tol, in closed form
    let r = ((PI * env.amplitude / (env.rate * tail_tol)).ln() / env.rate).max(0.0).sqrt();
    let c = env.center;
    let bx = Rect::new(c[0] - r, c[0] + r, c[1] - r, c[1] + r)?;
    let mut norms = [0.0; 3];
    let mut budget = 0.0;
    let parts: [&dyn Fn(Point) -> Complex64; 3] = [&|p| h.d1(p), &|p| h.d2(p), &|p| h.d12(p)];
    let centre = h.envelope().center;
    for (k, part) in parts.iter().enumerate() {
        let f = |x: f64, y: f64| Complex64::new(part([x, y]).norm(), 0.0);
        let (v, e) = adaptive_2d(&f, &bx, &[centre[0]], &[centre[1]], INTEGRATION_TOL)?;
        norms[k] = v.re;
        budget += e + env.integral_tail(r);
    }
    Ok(PartialNorms { norms, budget, numeric: true })
}

/// Exact norms when the integrand provides them, else [`partial_l1_norms`].
pub fn partial_norms<H: SmoothFn2D + ?Sized>(h: &H) -> Result<PartialNorms> {
    match h.exact_partial_l1() {
        Some(norms) => Ok(PartialNorms { norms, budget: 0.0, numeric: false }),
        None => partial_l1_norms(h),
    }
}

/// Right-hand side of the global Koksma–Hlawka inequality,
/// `D*·(‖∂₁h‖₁ + ‖∂₂h‖₁ + ‖∂₁₂h‖₁)`.
pub fn kh_bound<H: SmoothFn2D + ?Sized>(h: &H, d_star: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d_star) {
        return Err(Error::OutOfRange { name: "discrepancy", value: d_star, range: "[0, 1]" });
    }
    if d_star == 0.0 {
        return Ok(0.0);
    }
    let n = partial_norms(h)?;
    Ok(d_star * (n.total() + n.budget))
}
