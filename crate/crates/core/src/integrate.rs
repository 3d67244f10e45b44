//! Numerical integration on intervals and rectangles: globally adaptive
//! Gauss–Kronrod (7/15) in 1D, nested tensor panels in 2D, and fixed
//! Gauss–Legendre product rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Rect;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Panel limit for a single adaptive integral.
pub const MAX_PANELS: usize = 4000;

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    Ok((kron, (kron - gauss).norm()))
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive integral of a (fallible) complex integrand over `[a, b]`, split at
/// the given interior breakpoints. Returns `(value, error estimate)`.
pub fn adaptive_1d<F>(f: &F, a: f64, b: f64, breaks: &[f64], abs_tol: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if b <= a {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (value, e) = gk15(f, w[0], w[1])?;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value, err: e });
    }
    loop {
        if !err.is_finite() {
            return Err(Error::Convergence(format!("adaptive 1D on [{a}, {b}]: non-finite integrand")));
        }
        if err <= abs_tol {
            break;
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Convergence(format!(
                "adaptive 1D on [{a}, {b}]: error {err:e} above {abs_tol:e} after {MAX_PANELS} panels"
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            return Err(Error::Convergence(format!("panel [{}, {}] collapsed", worst.a, worst.b)));
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
    let err = panels.iter().map(|p| p.err).sum();
    Ok((value, err))
}

/// Nested adaptive integral over a rectangle with line breakpoints in each
/// direction (kinks of `|f|` should sit on them).
pub fn adaptive_2d<F>(f: &F, rect: &Rect, breaks_x: &[f64], breaks_y: &[f64], abs_tol: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64, f64) -> Complex64,
{
    let width = rect.x1 - rect.x0;
    let inner_tol = 0.25 * abs_tol / width;
    let outer = |x: f64| -> Result<Complex64> {
        let g = |y: f64| Ok(f(x, y));
        adaptive_1d(&g, rect.y0, rect.y1, breaks_y, inner_tol).map(|r| r.0)
    };
    let (v, e) = adaptive_1d(&outer, rect.x0, rect.x1, breaks_x, 0.5 * abs_tol)?;
    Ok((v, e + 0.25 * abs_tol))
}

/// Real-valued convenience wrapper around [`adaptive_2d`].
pub fn adaptive_2d_real<F>(f: &F, rect: &Rect, breaks_x: &[f64], breaks_y: &[f64], abs_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let g = |x: f64, y: f64| Complex64::new(f(x, y), 0.0);
    adaptive_2d(&g, rect, breaks_x, breaks_y, abs_tol).map(|(v, e)| (v.re, e))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed `n × n` Gauss–Legendre product rule on a rectangle.
pub struct ProductRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ProductRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        ProductRule { nodes, weights }
    }

    pub fn integrate<F>(&self, f: F, rect: &Rect) -> Complex64
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let (cx, hx) = (0.5 * (rect.x0 + rect.x1), 0.5 * (rect.x1 - rect.x0));
        let (cy, hy) = (0.5 * (rect.y0 + rect.y1), 0.5 * (rect.y1 - rect.y0));
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let mut row = Complex64::new(0.0, 0.0);
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                row += f(cx + hx * xi, cy + hy * yj) * *wj;
            }
            acc += row * *wi;
        }
        acc * (hx * hy)
    }
}
