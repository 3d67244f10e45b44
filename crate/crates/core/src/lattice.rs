//! Planar lattices `aΓ_τ`: construction, enumeration in boxes, admissibility
//! margins and the badly-approximable generator criterion.
//!
//! A [`Lattice`] stores a basis `Γ = B·ℤ²` (columns of `B` are the generators),
//! a scale `a` and an area-preserving dilation `τ`; the represented point set is
//! `{ (aτ·γ₁, aτ⁻¹·γ₂) : γ ∈ Γ }`.

use rayon::prelude::*;

use crate::dd::Dd;
use crate::error::{check_positive, Error, Result};
use crate::geometry::{Point, Rect};
use crate::surd::QuadraticSurd;

/// A full-rank planar lattice `aΓ_τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    /// Row-major basis; `basis[r][c]` is coordinate `r` of generator `c`.
    basis: [[f64; 2]; 2],
    /// Low-order parts of the basis entries (zero for plain decimal input).
    basis_lo: [[f64; 2]; 2],
    exact: Option<[[QuadraticSurd; 2]; 2]>,
    scale: f64,
    tau: f64,
}

/// Minimum of `|γ₁γ₂|` over the nonzero points with coefficients `|m|, |n| ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityMargin {
    pub margin: f64,
    pub bound: u64,
    pub argmin: (i64, i64),
}

impl Lattice {
    pub fn new(basis: [[f64; 2]; 2], scale: f64, tau: f64) -> Result<Self> {
        if basis.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: "basis entry", value: f64::NAN });
        }
        let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
        let norm = basis.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if det.abs() <= 1e-14 * norm * norm || det == 0.0 {
            return Err(Error::SingularBasis { det });
        }
        check_positive("scale", scale)?;
        check_positive("tau", tau)?;
        Ok(Lattice { basis, basis_lo: [[0.0; 2]; 2], exact: None, scale, tau })
    }

    /// Lattice with an exact quadratic-surd basis. The floating basis is
    /// evaluated in double-double precision.
    pub fn from_surds(basis: [[QuadraticSurd; 2]; 2], scale: f64, tau: f64) -> Result<Self> {
        let mut hi = [[0.0; 2]; 2];
        let mut lo = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let v = basis[r][c].to_dd();
                hi[r][c] = v.hi;
                lo[r][c] = v.lo;
            }
        }
        let mut lat = Lattice::new(hi, scale, tau)?;
        lat.basis_lo = lo;
        lat.exact = Some(basis);
        Ok(lat)
    }

    /// The integer lattice `ℤ²`.
    pub fn integer() -> Self {
        Lattice::new([[1.0, 0.0], [0.0, 1.0]], 1.0, 1.0).expect("identity basis")
    }

    /// The golden lattice with basis `[[1, φ⁻¹], [−φ⁻¹, 1]]`, `a = τ = 1`.
    pub fn golden() -> Self {
        let one = QuadraticSurd::integer(1);
        let inv_phi = QuadraticSurd::inverse_golden_ratio();
        let neg = inv_phi.checked_neg().expect("small surd");
        Lattice::from_surds([[one, inv_phi], [neg, one]], 1.0, 1.0).expect("golden basis is regular")
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_positive("scale", scale)?;
        Ok(Lattice { scale, ..self.clone() })
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        Ok(Lattice { tau, ..self.clone() })
    }

    pub fn basis(&self) -> [[f64; 2]; 2] {
        self.basis
    }

    pub fn exact_basis(&self) -> Option<&[[QuadraticSurd; 2]; 2]> {
        self.exact.as_ref()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `|det B|` of the undilated, unscaled basis.
    pub fn base_det(&self) -> f64 {
        let b = self.basis;
        (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs()
    }

    /// Area of a fundamental domain of `aΓ_τ`, i.e. `a²·|det B|`.
    pub fn det(&self) -> f64 {
        self.scale * self.scale * self.base_det()
    }

    /// Basis of the represented lattice `aΓ_τ`.
    pub fn effective_basis(&self) -> [[f64; 2]; 2] {
        let sx = self.scale * self.tau;
        let sy = self.scale / self.tau;
        [[self.basis[0][0] * sx, self.basis[0][1] * sx], [self.basis[1][0] * sy, self.basis[1][1] * sy]]
    }

    fn effective_basis_dd(&self) -> [[Dd; 2]; 2] {
        let sx = Dd::from_f64(self.scale).mul_f64(self.tau);
        let sy = Dd::from_f64(self.scale).div_f64(self.tau);
        let e = |r: usize, c: usize, s: Dd| Dd::new(self.basis[r][c], self.basis_lo[r][c]) * s;
        [[e(0, 0, sx), e(0, 1, sx)], [e(1, 0, sy), e(1, 1, sy)]]
    }

    /// The lattice point with integer coefficients `(m, n)`.
    pub fn point(&self, m: i64, n: i64) -> Point {
        let e = self.effective_basis();
        let (m, n) = (m as f64, n as f64);
        [e[0][0] * m + e[0][1] * n, e[1][0] * m + e[1][1] * n]
    }

    /// Integer coefficients of `p` with respect to the effective basis (real valued).
    pub fn coefficients(&self, p: Point) -> [f64; 2] {
        let e = self.effective_basis();
        let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        [(e[1][1] * p[0] - e[0][1] * p[1]) / det, (-e[1][0] * p[0] + e[0][0] * p[1]) / det]
    }

    /// Representative of `p` modulo the lattice inside the fundamental
    /// parallelogram `{ s·b₁ + t·b₂ : s, t ∈ [0, 1) }`.
    pub fn reduce(&self, p: Point) -> Point {
        let c = self.coefficients(p);
        let s = c[0] - c[0].floor();
        let t = c[1] - c[1].floor();
        let e = self.effective_basis();
        [e[0][0] * s + e[0][1] * t, e[1][0] * s + e[1][1] * t]
    }

    /// Point of the fundamental parallelogram with coordinates `(s, t)`.
    pub fn fundamental_point(&self, s: f64, t: f64) -> Point {
        let e = self.effective_basis();
        [e[0][0] * s + e[0][1] * t, e[1][0] * s + e[1][1] * t]
    }

    /// Bounding box and diameter of the fundamental parallelogram.
    pub fn fundamental_bbox(&self) -> (Rect, f64) {
        let corners = [
            self.fundamental_point(0.0, 0.0),
            self.fundamental_point(1.0, 0.0),
            self.fundamental_point(0.0, 1.0),
            self.fundamental_point(1.0, 1.0),
        ];
        let xs = corners.iter().map(|c| c[0]);
        let ys = corners.iter().map(|c| c[1]);
        let bbox = Rect {
            x0: xs.clone().fold(f64::INFINITY, f64::min),
            x1: xs.fold(f64::NEG_INFINITY, f64::max),
            y0: ys.clone().fold(f64::INFINITY, f64::min),
            y1: ys.fold(f64::NEG_INFINITY, f64::max),
        };
        let diam = {
            let d1 = (corners[3][0] - corners[0][0]).hypot(corners[3][1] - corners[0][1]);
            let d2 = (corners[1][0] - corners[2][0]).hypot(corners[1][1] - corners[2][1]);
            d1.max(d2)
        };
        (bbox, diam)
    }

    /// All lattice points in the closed box, boundary included (within
    /// [`crate::geometry::BOX_TOL`]). Points are produced from integer
    /// coefficients, ordered by `(m, n)`.
    pub fn enumerate_in_box(&self, bx: &Rect) -> Result<Vec<Point>> {
        Rect::new(bx.x0, bx.x1, bx.y0, bx.y1)?;
        let corners = [[bx.x0, bx.y0], [bx.x1, bx.y0], [bx.x0, bx.y1], [bx.x1, bx.y1]];
        let (mut m_lo, mut m_hi, mut n_lo, mut n_hi) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for c in corners {
            let k = self.coefficients(c);
            m_lo = m_lo.min(k[0]);
            m_hi = m_hi.max(k[0]);
            n_lo = n_lo.min(k[1]);
            n_hi = n_hi.max(k[1]);
        }
        let (m0, m1) = (m_lo.floor() as i64 - 1, m_hi.ceil() as i64 + 1);
        let (n0, n1) = (n_lo.floor() as i64 - 1, n_hi.ceil() as i64 + 1);
        let mut out = Vec::new();
        for m in m0..=m1 {
            for n in n0..=n1 {
                let p = self.point(m, n);
                if bx.contains(p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Number of lattice points in the closed unit square `𝕂 + ρ`.
    pub fn box_count(&self, rho: Point) -> usize {
        self.enumerate_in_box(&Rect::unit_at(rho)).map(|v| v.len()).unwrap_or(0)
    }

    /// Empirical admissibility: `min |γ₁γ₂|` over nonzero coefficient vectors
    /// with `|m|, |n| ≤ bound`. This is an upper bound on `inf |γ₁γ₂|` and is
    /// non-increasing in `bound`; it is never a proof of admissibility.
    ///
    /// Products are formed in double-double precision so cancellation in the
    /// small factor does not leak into the margin.
    pub fn admissibility_margin(&self, bound: u64) -> Result<AdmissibilityMargin> {
        if bound == 0 {
            return Err(Error::InsufficientData("coefficient bound must be at least 1".into()));
        }
        let e = self.effective_basis_dd();
        let bound = bound as i64;
        // γ and −γ have the same product, so scan the half-plane n > 0 plus (m > 0, 0).
        let best = (0..=bound)
            .into_par_iter()
            .map(|n| {
                let m_start = if n == 0 { 1 } else { -bound };
                let mut best = (f64::INFINITY, (0i64, 0i64));
                for m in m_start..=bound {
                    let (mf, nf) = (m as f64, n as f64);
                    let g1 = e[0][0].mul_f64(mf) + e[0][1].mul_f64(nf);
                    let g2 = e[1][0].mul_f64(mf) + e[1][1].mul_f64(nf);
                    let v = (g1 * g2).abs().to_f64();
                    if v < best.0 {
                        best = (v, (m, n));
                    }
                }
                best
            })
            .reduce(|| (f64::INFINITY, (0, 0)), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        Ok(AdmissibilityMargin { margin: best.0, bound: bound as u64, argmin: best.1 })
    }

    /// Exact badly-approximable criterion for a surd basis `[[r, s], [u, v]]`:
    /// the lattice is admissible iff `r/s` and `u/v` are distinct irrational
    /// badly approximable numbers. Returns `None` for lattices without an exact
    /// basis. The verdict inspects `terms` partial quotients of each ratio.
    pub fn badly_approximable_generators(&self, terms: usize) -> Option<Result<GeneratorCriterion>> {
        let b = self.exact.as_ref()?;
        Some((|| {
            let first = b[0][0].checked_div(&b[0][1])?;
            let second = b[1][0].checked_div(&b[1][1])?;
            let cf_first = first.continued_fraction(terms)?;
            let cf_second = second.continued_fraction(terms)?;
            let admissible = first != second && cf_first.is_badly_approximable() && cf_second.is_badly_approximable();
            Ok(GeneratorCriterion { first_ratio: first, second_ratio: second, cf_first, cf_second, admissible })
        })())
    }
}

/// Result of the `r/s`, `u/v` continued-fraction test.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCriterion {
    pub first_ratio: QuadraticSurd,
    pub second_ratio: QuadraticSurd,
    pub cf_first: crate::surd::ContinuedFraction,
    pub cf_second: crate::surd::ContinuedFraction,
    pub admissible: bool,
}

/// Parses the lattice config text format:
///
/// ```text
/// basis = [[r, s], [u, v]]
/// a = 0.5
/// tau = 1
/// ```
///
/// Entries are decimal literals or `phi`, `inv_phi`, `sqrt2` (optionally
/// negated), expanded to 17 significant digits. `a` and `tau` default to 1.
pub fn parse_lattice_config(text: &str) -> Result<Lattice> {
    let mut basis = None;
    let mut a = 1.0;
    let mut tau = 1.0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let value = value.trim();
        match key.trim() {
            "basis" => basis = Some(parse_basis(value)?),
            "a" => a = parse_entry(value)?,
            "tau" => tau = parse_entry(value)?,
            other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
        }
    }
    let basis = basis.ok_or_else(|| Error::Parse("missing `basis`".into()))?;
    Lattice::new(basis, a, tau)
}

fn parse_basis(s: &str) -> Result<[[f64; 2]; 2]> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = cleaned
        .strip_prefix("[[")
        .and_then(|t| t.strip_suffix("]]"))
        .ok_or_else(|| Error::Parse(format!("basis must look like [[r, s], [u, v]], got `{s}`")))?;
    let rows: Vec<&str> = inner.split("],[").collect();
    if rows.len() != 2 {
        return Err(Error::Parse("basis must have exactly two rows".into()));
    }
    let mut out = [[0.0; 2]; 2];
    for (r, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse("each basis row must have exactly two entries".into()));
        }
        for (c, tok) in cols.iter().enumerate() {
            out[r][c] = parse_entry(tok)?;
        }
    }
    Ok(out)
}

fn parse_entry(tok: &str) -> Result<f64> {
    let tok = tok.trim();
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, tok),
    };
    let symbolic = match body {
        "phi" => Some(QuadraticSurd::golden_ratio().to_f64()),
        "inv_phi" => Some(QuadraticSurd::inverse_golden_ratio().to_f64()),
        "sqrt2" => Some(2f64.sqrt()),
        _ => None,
    };
    let v = match symbolic {
        Some(v) => format!("{v:.16e}").parse::<f64>().expect("formatted float"),
        None => body.parse::<f64>().map_err(|_| Error::Parse(format!("invalid number `{tok}`")))?,
    };
    Ok(if neg { -v } else { v })
}
