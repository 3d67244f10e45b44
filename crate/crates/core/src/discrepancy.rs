//! Discrepancy of planar point sets: the exact star discrepancy on the unit
//! square, the anchored discrepancy `D*_ρ`, the shift discrepancy
//! `D*_shift = sup_ρ D*_ρ`, the dilation discrepancy `D*_dil = sup_τ D*_shift(Γ_τ)`,
//! and decay-rate fits over a ladder of scales.
//!
//! Boxes are closed throughout. At a critical corner both the closed count and
//! the open (just-exclusive) count are evaluated, which brackets every boundary
//! convention and recovers the supremum even when it is only approached.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::geometry::{Point, Rect, BOX_TOL};
use crate::lattice::Lattice;

/// Anything that can list its points inside a closed box.
pub trait PointSource {
    fn points_in(&self, bx: &Rect) -> Result<Vec<Point>>;
}

impl PointSource for Lattice {
    fn points_in(&self, bx: &Rect) -> Result<Vec<Point>> {
        self.enumerate_in_box(bx)
    }
}

/// Exact `sup_{η ∈ [0,1]²} |#(P ∩ [0,η])/N − η₁η₂|`.
///
/// Critical corners are the grid (x-coordinates ∪ {1}) × (y-coordinates ∪ {1}).
/// The sweep runs over x-groups in increasing order while maintaining
/// cumulative counts per y-rank, so the cost is `O(#P · #distinct y)`.
pub fn star_discrepancy_unit(points: &[Point], normalizer: usize) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if normalizer == 0 {
        return Err(Error::ZeroNormalizer);
    }
    let mut pts = Vec::with_capacity(points.len());
    for &[x, y] in points {
        let inside = (-BOX_TOL..=1.0 + BOX_TOL).contains(&x) && (-BOX_TOL..=1.0 + BOX_TOL).contains(&y);
        if !inside {
            return Err(Error::OutsideUnitSquare { x, y });
        }
        pts.push([x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)]);
    }
    Ok(star_discrepancy_clamped(&mut pts, normalizer as f64))
}

fn star_discrepancy_clamped(pts: &mut [Point], n: f64) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    ys.push(1.0);
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let k = ys.len();
    let rank = |y: f64| ys.partition_point(|&u| u < y);

    // cnt[j] = #{processed points with y ≤ ys[j]}
    let mut cnt = vec![0u32; k];
    let mut worst = 0.0f64;
    let inv_n = 1.0 / n;
    let mut i = 0;
    loop {
        let v = if i < pts.len() { pts[i][0] } else { 1.0 };
        // open envelope: #{x < v, y < ys[j]}
        let mut prev = 0u32;
        for (j, &u) in ys.iter().enumerate() {
            let d = v * u - prev as f64 * inv_n;
            worst = worst.max(d.abs());
            prev = cnt[j];
        }
        let mut end = i;
        while end < pts.len() && pts[end][0] == v {
            let r = rank(pts[end][1]);
            for c in &mut cnt[r..] {
                *c += 1;
            }
            end += 1;
        }
        // closed envelope: #{x ≤ v, y ≤ ys[j]}
        for (j, &u) in ys.iter().enumerate() {
            let d = cnt[j] as f64 * inv_n - v * u;
            worst = worst.max(d.abs());
        }
        if v >= 1.0 {
            break;
        }
        i = end;
    }
    worst.min(1.0)
}

/// `D*_ρ(Λ)`: star discrepancy of `Λ ∩ (𝕂 + ρ)` translated to the origin and
/// normalized by `N_ρ = #(Λ ∩ (𝕂 + ρ))`.
pub fn anchored_discrepancy<S: PointSource + ?Sized>(source: &S, rho: Point) -> Result<f64> {
    let pts = source.points_in(&Rect::unit_at(rho))?;
    if pts.is_empty() {
        return Err(Error::CoverageViolation { x: rho[0], y: rho[1] });
    }
    let mut rel: Vec<Point> =
        pts.iter().map(|p| [(p[0] - rho[0]).clamp(0.0, 1.0), (p[1] - rho[1]).clamp(0.0, 1.0)]).collect();
    let n = rel.len() as f64;
    Ok(star_discrepancy_clamped(&mut rel, n))
}

/// Result of a shift- or dilation-discrepancy estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyEstimate {
    /// Maximum over the base anchor grid. Every evaluated value is a limit of
    /// attained `D*_ρ` values, so this is a certified lower bound.
    pub lower_bound: f64,
    /// Maximum after local refinement.
    pub estimate: f64,
    pub grid_resolution: f64,
    pub anchors_evaluated: usize,
    pub argmax_anchor: Point,
}

/// Anchor sampling parameters for [`shift_discrepancy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftConfig {
    /// Anchor spacing as a fraction of the fundamental parallelogram's sides.
    pub grid_resolution: f64,
    /// Each round samples a 4× finer local grid around the best cells.
    pub refinement_rounds: usize,
    /// Number of best cells refined per round.
    pub refine_candidates: usize,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig { grid_resolution: 1.0 / 64.0, refinement_rounds: 3, refine_candidates: 8 }
    }
}

/// The anchors `ρ` are cut into rectangular cells by the entry/exit events
/// `ρ₁ ∈ {λ₁ − 1, λ₁}`, `ρ₂ ∈ {λ₂ − 1, λ₂}`. Inside a cell the set
/// `Λ ∩ (𝕂 + ρ)` is fixed and every corner term of the star discrepancy is
/// bilinear in `ρ`, so the supremum over the closed cell is attained at its
/// four vertices, evaluated with the cell's membership.
struct EventCells {
    bx: Vec<f64>,
    by: Vec<f64>,
    window: Vec<Point>,
}

fn dedup_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().is_none_or(|&l| x - l > BOX_TOL) {
            out.push(x);
        }
    }
    out
}

impl EventCells {
    fn new(lattice: &Lattice) -> Result<Self> {
        let (bbox, diam) = lattice.fundamental_bbox();
        let pad = diam.max(1e-3);
        let range = bbox.expand(pad);
        let window_box = Rect { x0: range.x0, x1: range.x1 + 1.0, y0: range.y0, y1: range.y1 + 1.0 };
        let window = lattice.enumerate_in_box(&window_box)?;
        let mut bx = Vec::new();
        let mut by = Vec::new();
        for p in &window {
            for x in [p[0], p[0] - 1.0] {
                if x >= range.x0 && x <= range.x1 {
                    bx.push(x);
                }
            }
            for y in [p[1], p[1] - 1.0] {
                if y >= range.y0 && y <= range.y1 {
                    by.push(y);
                }
            }
        }
        Ok(EventCells { bx: dedup_sorted(bx), by: dedup_sorted(by), window })
    }

    fn cell_of(&self, rho: Point) -> Option<(usize, usize)> {
        let find = |b: &[f64], v: f64| {
            let i = b.partition_point(|&x| x <= v);
            (i >= 1 && i < b.len()).then(|| i - 1)
        };
        Some((find(&self.bx, rho[0])?, find(&self.by, rho[1])?))
    }

    fn cell_center(&self, (ix, iy): (usize, usize)) -> Point {
        [0.5 * (self.bx[ix] + self.bx[ix + 1]), 0.5 * (self.by[iy] + self.by[iy + 1])]
    }

    fn in_range(&self, ix: isize, iy: isize) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) + 1 < self.bx.len() && (iy as usize) + 1 < self.by.len()
    }

    /// Supremum of `D*_ρ` over the closed cell and the vertex attaining it.
    fn evaluate(&self, cell: (usize, usize)) -> Result<(f64, Point)> {
        let c = self.cell_center(cell);
        let members: Vec<Point> = self
            .window
            .iter()
            .filter(|p| {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                (0.0..=1.0).contains(&dx) && (0.0..=1.0).contains(&dy)
            })
            .copied()
            .collect();
        if members.is_empty() {
            return Err(Error::CoverageViolation { x: c[0], y: c[1] });
        }
        let n = members.len() as f64;
        let (ix, iy) = cell;
        let mut best = (-1.0, c);
        let mut rel = Vec::with_capacity(members.len());
        for vx in [self.bx[ix], self.bx[ix + 1]] {
            for vy in [self.by[iy], self.by[iy + 1]] {
                rel.clear();
                rel.extend(members.iter().map(|p| [(p[0] - vx).clamp(0.0, 1.0), (p[1] - vy).clamp(0.0, 1.0)]));
                let d = star_discrepancy_clamped(&mut rel, n);
                if d > best.0 {
                    best = (d, [vx, vy]);
                }
            }
        }
        Ok(best)
    }
}

fn evaluate_cells(
    cells: &EventCells,
    todo: &BTreeSet<(usize, usize)>,
    done: &mut BTreeMap<(usize, usize), (f64, Point)>,
) -> Result<()> {
    let fresh: Vec<(usize, usize)> = todo.iter().filter(|c| !done.contains_key(c)).copied().collect();
    let values: Vec<Result<(f64, Point)>> = fresh.par_iter().map(|&c| cells.evaluate(c)).collect();
    for (c, v) in fresh.into_iter().zip(values) {
        done.insert(c, v?);
    }
    Ok(())
}

fn best_of(done: &BTreeMap<(usize, usize), (f64, Point)>) -> (f64, Point) {
    // BTreeMap iteration is ordered, and ties keep the first cell, so the
    // result does not depend on evaluation scheduling.
    done.values().fold((0.0, [0.0, 0.0]), |acc, &(v, p)| if v > acc.0 { (v, p) } else { acc })
}

/// Estimate of `D*_shift(Λ) = sup_{ρ ∈ ℝ²} D*_ρ(Λ)`.
///
/// `D*_ρ` is Λ-periodic in `ρ`, so anchors are drawn from one fundamental
/// parallelogram. Each anchor is snapped to its event cell (see the cell
/// construction above) and the cell supremum is evaluated at the cell
/// vertices. Refinement rounds revisit the neighbourhood of the best cells on
/// 4× finer local grids and sweep their neighbouring cells.
pub fn shift_discrepancy(lattice: &Lattice, cfg: &ShiftConfig) -> Result<DiscrepancyEstimate> {
    check_positive("grid_resolution", cfg.grid_resolution)?;
    let cells = EventCells::new(lattice)?;
    let k = (1.0 / cfg.grid_resolution).ceil().max(1.0) as usize;

    let locate = |s: f64, t: f64| -> Option<(usize, usize)> { cells.cell_of(lattice.fundamental_point(s, t)) };
    let mut todo = BTreeSet::new();
    for i in 0..k {
        for j in 0..k {
            if let Some(c) = locate(i as f64 / k as f64, j as f64 / k as f64) {
                todo.insert(c);
            }
        }
    }
    let mut done = BTreeMap::new();
    evaluate_cells(&cells, &todo, &mut done)?;
    let (lower_bound, mut argmax) = best_of(&done);

    let h = 1.0 / k as f64;
    for round in 1..=cfg.refinement_rounds {
        let mut ranked: Vec<((usize, usize), f64)> = done.iter().map(|(&c, &(v, _))| (c, v)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let step = h / 4f64.powi(round as i32);
        let mut todo = BTreeSet::new();
        for &((ix, iy), _) in ranked.iter().take(cfg.refine_candidates.max(1)) {
            for dx in -1isize..=1 {
                for dy in -1isize..=1 {
                    let (nx, ny) = (ix as isize + dx, iy as isize + dy);
                    if cells.in_range(nx, ny) {
                        todo.insert((nx as usize, ny as usize));
                    }
                }
            }
            let center = lattice.coefficients(cells.cell_center((ix, iy)));
            for a in -4i32..=4 {
                for b in -4i32..=4 {
                    let (s, t) = (center[0] + a as f64 * step, center[1] + b as f64 * step);
                    let p = lattice.reduce(lattice.fundamental_point(s, t));
                    if let Some(c) = cells.cell_of(p) {
                        todo.insert(c);
                    }
                }
            }
        }
        evaluate_cells(&cells, &todo, &mut done)?;
    }
    let (estimate, best_anchor) = best_of(&done);
    if estimate > lower_bound {
        argmax = best_anchor;
    }
    Ok(DiscrepancyEstimate {
        lower_bound,
        estimate,
        grid_resolution: cfg.grid_resolution,
        anchors_evaluated: done.len() * 4,
        argmax_anchor: argmax,
    })
}

/// `min_ρ N_ρ` over all anchors, with an anchor attaining it. Counts are
/// constant on open event cells and can only grow on cell boundaries (closed
/// squares), so the minimum over cell centres is the global minimum.
pub fn min_box_count(lattice: &Lattice) -> Result<(usize, Point)> {
    let cells = EventCells::new(lattice)?;
    let nx = cells.bx.len().saturating_sub(1);
    let ny = cells.by.len().saturating_sub(1);
    let rows: Vec<(usize, Point)> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let x0 = 0.5 * (cells.bx[ix] + cells.bx[ix + 1]);
            let mut col: Vec<f64> =
                cells.window.iter().filter(|p| (0.0..=1.0).contains(&(p[0] - x0))).map(|p| p[1]).collect();
            col.sort_by(f64::total_cmp);
            let mut best = (usize::MAX, [x0, 0.0]);
            for iy in 0..ny {
                let y0 = 0.5 * (cells.by[iy] + cells.by[iy + 1]);
                let lo = col.partition_point(|&y| y < y0);
                let hi = col.partition_point(|&y| y <= y0 + 1.0);
                if hi - lo < best.0 {
                    best = (hi - lo, [x0, y0]);
                }
            }
            best
        })
        .collect();
    Ok(rows.into_iter().fold((usize::MAX, [0.0, 0.0]), |acc, r| if r.0 < acc.0 { r } else { acc }))
}

/// `max_τ D*_shift(aΓ_τ)` over the sampled dilations.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationEstimate {
    pub estimate: DiscrepancyEstimate,
    pub argmax_tau: f64,
    pub per_tau: Vec<(f64, DiscrepancyEstimate)>,
}

/// Certified lower bound on `D*_dil(aΓ)` from the given `τ` samples. The
/// lattice's own scale and dilation are replaced by `a` and each sample.
pub fn dilation_discrepancy(lattice: &Lattice, a: f64, taus: &[f64], cfg: &ShiftConfig) -> Result<DilationEstimate> {
    check_positive("a", a)?;
    if taus.is_empty() {
        return Err(Error::InsufficientData("no tau samples".into()));
    }
    let mut per_tau = Vec::with_capacity(taus.len());
    for &tau in taus {
        let lat = lattice.with_scale(a)?.with_tau(tau)?;
        per_tau.push((tau, shift_discrepancy(&lat, cfg)?));
    }
    let (mut best, mut best_tau) = (per_tau[0].1.clone(), per_tau[0].0);
    let mut lower = best.lower_bound;
    for (tau, est) in &per_tau[1..] {
        lower = lower.max(est.lower_bound);
        if est.estimate > best.estimate {
            best = est.clone();
            best_tau = *tau;
        }
    }
    best.lower_bound = lower;
    Ok(DilationEstimate { estimate: best, argmax_tau: best_tau, per_tau })
}

/// One row of a decay study.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub a: f64,
    pub estimate: DiscrepancyEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Least-squares slope of `ln D*` against `ln a`.
    pub slope: f64,
    /// `max_a D*(a) / (a² ln(2 + 1/a))`.
    pub c_hat: f64,
    pub table: Vec<DecayRow>,
}

/// Reference rate `a² ln(2 + a⁻¹)` for admissible lattices.
pub fn admissible_rate(a: f64) -> f64 {
    a * a * (2.0 + 1.0 / a).ln()
}

pub fn decay_fit(lattice: &Lattice, scales: &[f64], cfg: &ShiftConfig) -> Result<DecayFit> {
    if scales.len() < 4 {
        return Err(Error::InsufficientData(format!("decay fit needs at least 4 scales, got {}", scales.len())));
    }
    for &a in scales {
        check_positive("a", a)?;
        if a >= 1.0 {
            return Err(Error::InsufficientData(format!("scale {a} is outside (0, 1)")));
        }
    }
    let mut table = Vec::with_capacity(scales.len());
    for &a in scales {
        table.push(DecayRow { a, estimate: shift_discrepancy(&lattice.with_scale(a)?, cfg)? });
    }
    let xs: Vec<f64> = table.iter().map(|r| r.a.ln()).collect();
    let ys: Vec<f64> = table.iter().map(|r| r.estimate.estimate.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let c_hat = table.iter().map(|r| r.estimate.estimate / admissible_rate(r.a)).fold(0.0, f64::max);
    Ok(DecayFit { slope, c_hat, table })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
