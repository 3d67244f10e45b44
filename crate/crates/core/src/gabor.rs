//! Gaussian Gabor systems: windows `g_σ`, their dilations `g_τ`, the
//! ambiguity function `V_g g`, the reproducing kernel `R(η, ν)`, the iterated
//! kernel `K^{(η,ν)} = R(η, ·)R(·, ν)`, the oscillation functional Ω, and a
//! direct numeric STFT used as an oracle.
//!
//! Conventions: `π(x, ω)g(t) = g(t − x)e^{2πiωt}` and
//! `V_g f(x, ω) = ∫ f(t) \overline{g(t − x)} e^{−2πitω} dt`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::geometry::{Point, Rect};
use crate::integrate::{adaptive_1d, adaptive_2d};
use crate::quadrature::{Envelope, SmoothFn2D};

/// Window values below this fraction of the peak are treated as zero.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Deviation between the numeric Ω bound and the closed form beyond which the
/// report is flagged.
pub const OMEGA_FLAG_THRESHOLD: f64 = 0.02;

/// `g_{σ,τ}(t) = (στ)^{−1/2} exp(−π t² / (2σ²τ²))`, unit norm in `L²(ℝ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWindow {
    sigma: f64,
    tau: f64,
}

impl GaussianWindow {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("tau", tau)?;
        Ok(GaussianWindow { sigma, tau })
    }

    /// The window minimizing Ω, `σ₀ = 1/√2`.
    pub fn optimal() -> Self {
        GaussianWindow { sigma: std::f64::consts::FRAC_1_SQRT_2, tau: 1.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        GaussianWindow::new(self.sigma, tau)
    }

    /// Effective width `s = στ`.
    pub fn width(&self) -> f64 {
        self.sigma * self.tau
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = self.width();
        (-PI * t * t / (2.0 * s * s)).exp() / s.sqrt()
    }

    /// Radius beyond which `g` is below [`SUPPORT_CUTOFF`] of its peak.
    pub fn support_radius(&self) -> f64 {
        self.width() * (2.0 * (1.0 / SUPPORT_CUTOFF).ln() / PI).sqrt()
    }
}

/// `V_g g(x, ω) = exp(−πx²/(4s²) − πs²ω² − πixω)`.
pub fn ambiguity(w: &GaussianWindow, eta: Point) -> Complex64 {
    let s = w.width();
    let (x, om) = (eta[0], eta[1]);
    Complex64::new(-PI * x * x / (4.0 * s * s) - PI * s * s * om * om, -PI * x * om).exp()
}

/// `R(η, ν) = ⟨π(ν)g, π(η)g⟩ = e^{−2πiν₁(η₂−ν₂)} V_g g(η − ν)`.
pub fn kernel_r(w: &GaussianWindow, eta: Point, nu: Point) -> Complex64 {
    let phase = Complex64::new(0.0, -2.0 * PI * nu[0] * (eta[1] - nu[1])).exp();
    phase * ambiguity(w, [eta[0] - nu[0], eta[1] - nu[1]])
}

/// `K^{(η,ν)}(ρ) = R(η, ρ) R(ρ, ν)`.
pub fn iterated_kernel(w: &GaussianWindow, eta: Point, nu: Point, rho: Point) -> Complex64 {
    kernel_r(w, eta, rho) * kernel_r(w, rho, nu)
}

/// `K^{(η,ν)}` as an integrand in `ρ`. The exponent is a separable quadratic
/// `c + q₁ρ₁² + l₁ρ₁ + q₂ρ₂² + l₂ρ₂` with real `q₁, q₂ < 0` (the imaginary
/// `ρ₁ρ₂` terms of the two kernels cancel).
#[derive(Debug)]
pub struct IteratedKernel {
    q: [f64; 2],
    l: [Complex64; 2],
    c: Complex64,
    norms: OnceLock<Option<[f64; 3]>>,
}

impl IteratedKernel {
    pub fn new(w: &GaussianWindow, eta: Point, nu: Point) -> Self {
        let s2 = w.width() * w.width();
        let q = [-PI / (2.0 * s2), -2.0 * PI * s2];
        let l = [
            Complex64::new(PI * (eta[0] + nu[0]) / (2.0 * s2), PI * (nu[1] - eta[1])),
            Complex64::new(2.0 * PI * s2 * (eta[1] + nu[1]), PI * (eta[0] - nu[0])),
        ];
        let c = Complex64::new(
            -PI * (eta[0] * eta[0] + nu[0] * nu[0]) / (4.0 * s2) - PI * s2 * (eta[1] * eta[1] + nu[1] * nu[1]),
            PI * (nu[0] * nu[1] - eta[0] * eta[1]),
        );
        IteratedKernel { q, l, c, norms: OnceLock::new() }
    }

    fn linear(&self, k: usize, x: f64) -> Complex64 {
        self.l[k] + 2.0 * self.q[k] * x
    }

    /// Centre of `|K|`.
    fn peak(&self) -> Point {
        [-self.l[0].re / (2.0 * self.q[0]), -self.l[1].re / (2.0 * self.q[1])]
    }

    fn peak_modulus(&self) -> f64 {
        let log = self.c.re - self.l[0].re.powi(2) / (4.0 * self.q[0]) - self.l[1].re.powi(2) / (4.0 * self.q[1]);
        log.exp()
    }

    /// `∫ |2qu + ib| e^{qu²} du` for `q < 0`.
    fn slope_integral(q: f64, b: f64) -> Option<f64> {
        let r = (40.0 / -q).sqrt();
        let f = |u: f64| Ok(Complex64::new((4.0 * q * q * u * u + b * b).sqrt() * (q * u * u).exp(), 0.0));
        let (v, _) = adaptive_1d(&f, -r, r, &[0.0], 1e-14 * (1.0 + b.abs()) / (-q).sqrt()).ok()?;
        Some(v.re)
    }
}

impl SmoothFn2D for IteratedKernel {
    fn eval(&self, p: Point) -> Complex64 {
        let e = self.c + p[0] * (self.q[0] * p[0] + self.l[0]) + p[1] * (self.q[1] * p[1] + self.l[1]);
        e.exp()
    }
    fn d1(&self, p: Point) -> Complex64 {
        self.linear(0, p[0]) * self.eval(p)
    }
    fn d2(&self, p: Point) -> Complex64 {
        self.linear(1, p[1]) * self.eval(p)
    }
    fn d12(&self, p: Point) -> Complex64 {
        self.linear(0, p[0]) * self.linear(1, p[1]) * self.eval(p)
    }
    fn envelope(&self) -> Envelope {
        let rate = -self.q[0].max(self.q[1]);
        Envelope { center: self.peak(), amplitude: self.peak_modulus(), rate }
    }
    fn derivative_envelope(&self) -> Envelope {
        // |2q u + i·Im l|·e^{q u²/2} ≤ 2√(|q|/e) + |Im l|
        let f = |k: usize| 2.0 * (-self.q[k] / std::f64::consts::E).sqrt() + self.l[k].im.abs();
        let (f1, f2) = (f(0), f(1));
        let amp = f1.max(f2).max(f1 * f2) * self.peak_modulus();
        Envelope { center: self.peak(), amplitude: amp, rate: 0.5 * -self.q[0].max(self.q[1]) }
    }
    fn exact_integral(&self) -> Option<Complex64> {
        let gauss = |k: usize| (PI / -self.q[k]).sqrt() * (-self.l[k] * self.l[k] / (4.0 * self.q[k])).exp();
        Some(self.c.exp() * gauss(0) * gauss(1))
    }
    fn exact_partial_l1(&self) -> Option<[f64; 3]> {
        *self.norms.get_or_init(|| {
            let a = self.peak_modulus();
            let i1 = Self::slope_integral(self.q[0], self.l[0].im)?;
            let i2 = Self::slope_integral(self.q[1], self.l[1].im)?;
            let (g1, g2) = ((PI / -self.q[0]).sqrt(), (PI / -self.q[1]).sqrt());
            Some([a * i1 * g2, a * g1 * i2, a * i1 * i2])
        })
    }
}

/// `Ω(𝒢_σ) = 4π(1/(√2σ) + √2σ) + 4π²`.
pub fn omega_gaussian_closed(sigma: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    let r2 = std::f64::consts::SQRT_2;
    Ok(4.0 * PI * (1.0 / (r2 * sigma) + r2 * sigma) + 4.0 * PI * PI)
}

/// Golden-section search for the minimizer of `f` on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// A window of the form `p(t)·g(t)` with a complex polynomial `p`; closed
/// under `D` (differentiation) and `Z` (multiplication by `2πit`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyWindow {
    /// Coefficients of `p` in increasing degree.
    pub coeffs: Vec<Complex64>,
    width: f64,
}

impl PolyWindow {
    pub fn gaussian(w: &GaussianWindow) -> Self {
        PolyWindow { coeffs: vec![Complex64::new(1.0, 0.0)], width: w.width() }
    }

    /// `(p g)' = (p' − πt p / s²) g`.
    pub fn d(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for k in 1..n {
            out[k - 1] += self.coeffs[k] * k as f64;
        }
        let f = -PI / (self.width * self.width);
        for k in 0..n {
            out[k + 1] += self.coeffs[k] * f;
        }
        PolyWindow { coeffs: out, width: self.width }
    }

    /// `2πit · p g`.
    pub fn z(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        out.extend(self.coeffs.iter().map(|c| c * Complex64::new(0.0, 2.0 * PI)));
        PolyWindow { coeffs: out, width: self.width }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let s = self.width;
        let g = (-PI * t * t / (2.0 * s * s)).exp() / s.sqrt();
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c) * g
    }

    /// `V_g(p g)(x, ω) = V_g g(x, ω) · Σ_k p_k E[(c + W)^k]` with
    /// `c = x/2 − i s² ω` and `W ~ N(0, s²/(2π))`.
    pub fn stft(&self, eta: Point) -> Complex64 {
        let s = self.width;
        let (x, om) = (eta[0], eta[1]);
        let c = Complex64::new(0.5 * x, -s * s * om);
        let var = s * s / (2.0 * PI);
        let n = self.coeffs.len();
        // μ_j: central moments of W
        let mut mu = vec![0.0; n];
        mu[0] = 1.0;
        for j in (2..n).step_by(2) {
            mu[j] = mu[j - 2] * var * (j - 1) as f64;
        }
        let mut poly = Complex64::new(0.0, 0.0);
        for (k, &pk) in self.coeffs.iter().enumerate() {
            if pk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut binom = 1.0;
            let mut term = Complex64::new(0.0, 0.0);
            for (j, &m) in mu.iter().enumerate().take(k + 1) {
                if j % 2 == 0 {
                    term += c.powu((k - j) as u32) * (binom * m);
                }
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            poly += pk * term;
        }
        let gg = Complex64::new(-PI * x * x / (4.0 * s * s) - PI * s * s * om * om, -PI * x * om).exp();
        gg * poly
    }

    /// `‖V_g(p g)‖_{L¹(ℝ²)}` by adaptive integration over the box where the
    /// Gaussian factor exceeds `e^{−πR²}` with `R = 8`.
    pub fn stft_l1(&self) -> Result<(f64, f64)> {
        let s = self.width;
        let r = 8.0;
        let bx = Rect::new(-2.0 * s * r, 2.0 * s * r, -r / s, r / s)?;
        // |p| can vanish on the axes and at ω = ±1/(s√(2π)) for quadratic p
        let kink = 1.0 / (s * (2.0 * PI).sqrt());
        let f = |x: f64, om: f64| Complex64::new(self.stft([x, om]).norm(), 0.0);
        let (v, e) = adaptive_2d(&f, &bx, &[0.0], &[-kink, 0.0, kink], 1e-10)?;
        Ok((v.re, e))
    }
}

/// The numeric Ω bound and its four component norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaNumeric {
    /// `‖V_g g‖₁, ‖V_g Dg‖₁, ‖V_g Zg‖₁, ‖V_g ZDg‖₁`.
    pub norms: [f64; 4],
    /// `2[‖g‖‖Dg‖ + ‖g‖‖Zg‖ + ‖g‖‖ZDg‖ + ‖Dg‖‖Zg‖]` (norms of `V_g ·`).
    pub bound: f64,
    pub closed: f64,
    /// `(bound − closed)/closed`.
    pub relative_deviation: f64,
    /// True when `|relative_deviation|` exceeds [`OMEGA_FLAG_THRESHOLD`].
    pub flagged: bool,
    pub integration_error: f64,
}

pub fn omega_numeric(w: &GaussianWindow) -> Result<OmegaNumeric> {
    let g = PolyWindow::gaussian(w);
    let family = [g.clone(), g.d(), g.z(), g.d().z()];
    let results: Vec<Result<(f64, f64)>> = family.par_iter().map(|p| p.stft_l1()).collect();
    let mut norms = [0.0; 4];
    let mut integration_error = 0.0;
    for (k, r) in results.into_iter().enumerate() {
        let (v, e) = r?;
        norms[k] = v;
        integration_error += e;
    }
    let [n0, nd, nz, nzd] = norms;
    let bound = 2.0 * (n0 * nd + n0 * nz + n0 * nzd + nd * nz);
    let closed = omega_gaussian_closed(w.width())?;
    let relative_deviation = (bound - closed) / closed;
    Ok(OmegaNumeric {
        norms,
        bound,
        closed,
        relative_deviation,
        flagged: relative_deviation.abs() > OMEGA_FLAG_THRESHOLD,
        integration_error,
    })
}

/// A uniformly sampled complex signal `f(t₀ + n·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl Signal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        check_positive("dt", dt)?;
        if !t0.is_finite() {
            return Err(Error::NonFinite { name: "t0", value: t0 });
        }
        if values.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        Ok(Signal { t0, dt, values })
    }

    pub fn sample<F: Fn(f64) -> Complex64>(t0: f64, dt: f64, n: usize, f: F) -> Result<Self> {
        Signal::new(t0, dt, (0..n).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    /// `dt·Σ|f_n|²`.
    pub fn energy(&self) -> f64 {
        self.dt * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Parses `t, re, im` rows on a uniform grid; a header row is allowed.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => rows.push(v),
                Err(_) if rows.is_empty() && fields.first() == Some(&"t") => {}
                _ => return Err(Error::Parse(format!("line {}: expected `t, re, im`, got `{line}`", i + 1))),
            }
        }
        if rows.len() < 2 {
            return Err(Error::Parse("a signal needs at least two samples".into()));
        }
        let (t0, dt) = (rows[0][0], rows[1][0] - rows[0][0]);
        for (k, r) in rows.iter().enumerate() {
            if (r[0] - (t0 + k as f64 * dt)).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::Parse(format!("sample {k} at t = {} is off the uniform grid", r[0])));
            }
        }
        Signal::new(t0, dt, rows.iter().map(|r| Complex64::new(r[1], r[2])).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.time(k), v.re, v.im));
        }
        out
    }
}

/// STFT values on a rectangular `(x, ω)` grid; `values[i][j]` is at `(xs[i], omegas[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StftGrid {
    pub xs: Vec<f64>,
    pub omegas: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

/// Which real part of a complex grid to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPart {
    Re,
    Im,
    Abs,
}

impl StftGrid {
    /// CSV grid: header row of frequencies, first column of times.
    pub fn to_csv(&self, part: GridPart) -> String {
        let mut out = String::from("x\\omega");
        for om in &self.omegas {
            out.push_str(&format!(",{om}"));
        }
        out.push('\n');
        for (x, row) in self.xs.iter().zip(&self.values) {
            out.push_str(&format!("{x}"));
            for v in row {
                let val = match part {
                    GridPart::Re => v.re,
                    GridPart::Im => v.im,
                    GridPart::Abs => v.norm(),
                };
                out.push_str(&format!(",{val}"));
            }
            out.push('\n');
        }
        out
    }

    /// `Σ |V|² Δx Δω` for uniform grids.
    pub fn energy(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        let total: f64 = self.values.iter().flatten().map(|v| v.norm_sqr()).sum();
        total * step(&self.xs) * step(&self.omegas)
    }
}

/// Direct Riemann-sum STFT `Σ_n f(t_n) g(t_n − x) e^{−2πi t_n ω} dt`, with the
/// window truncated at [`GaussianWindow::support_radius`]. Frequencies above
/// the Nyquist limit `1/(2dt)` are rejected.
pub fn stft_numeric(f: &Signal, w: &GaussianWindow, xs: &[f64], omegas: &[f64]) -> Result<StftGrid> {
    let nyquist = 0.5 / f.dt;
    if let Some(&bad) = omegas.iter().find(|o| o.abs() > nyquist * (1.0 + 1e-12)) {
        return Err(Error::Nyquist { requested: bad.abs(), nyquist });
    }
    let radius = w.support_radius();
    let n = f.values.len();
    let values = xs
        .par_iter()
        .map(|&x| {
            let lo = (((x - radius - f.t0) / f.dt).ceil().max(0.0)) as usize;
            let hi = ((((x + radius - f.t0) / f.dt).floor()) as isize).min(n as isize - 1);
            let windowed: Vec<(f64, Complex64)> = if hi < lo as isize {
                Vec::new()
            } else {
                (lo..=hi as usize).map(|k| (f.time(k), f.values[k] * w.eval(f.time(k) - x))).collect()
            };
            omegas
                .iter()
                .map(|&om| {
                    let Some(&(t_first, _)) = windowed.first() else {
                        return Complex64::new(0.0, 0.0);
                    };
                    let step = Complex64::new(0.0, -2.0 * PI * f.dt * om).exp();
                    let mut phase = Complex64::new(0.0, -2.0 * PI * t_first * om).exp();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &(_, v)) in windowed.iter().enumerate() {
                        if k % 64 == 0 {
                            // refresh to keep the recurrence from drifting
                            phase = Complex64::new(0.0, -2.0 * PI * (t_first + k as f64 * f.dt) * om).exp();
                        }
                        acc += v * phase;
                        phase *= step;
                    }
                    acc * f.dt
                })
                .collect()
        })
        .collect();
    Ok(StftGrid { xs: xs.to_vec(), omegas: omegas.to_vec(), values })
}

/// `V_g f(x, ω)` of an analytic signal by adaptive integration (oracle).
pub fn stft_integral<F: Fn(f64) -> Complex64>(f: F, w: &GaussianWindow, eta: Point, tol: f64) -> Result<Complex64> {
    let r = w.support_radius() * 1.5;
    let (x, om) = (eta[0], eta[1]);
    let h = |t: f64| Ok(f(t) * w.eval(t - x) * Complex64::new(0.0, -2.0 * PI * t * om).exp());
    adaptive_1d(&h, x - r, x + r, &[x], tol).map(|r| r.0)
}
