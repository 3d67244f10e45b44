use crate::error::{Error, Result};

/// A point of the phase space ℝ² (time, frequency) or of the unit square.
pub type Point = [f64; 2];

/// Absolute tolerance for membership tests on closed boxes. Points within this
/// distance of a boundary count as inside.
pub const BOX_TOL: f64 = 1e-12;

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0;
        if !ok {
            return Err(Error::DegenerateBox { x0, x1, y0, y1 });
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    /// The closed unit square `𝕂 + ρ`.
    pub fn unit_at(rho: Point) -> Self {
        Rect { x0: rho[0], x1: rho[0] + 1.0, y0: rho[1], y1: rho[1] + 1.0 }
    }

    pub fn centered(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 - BOX_TOL && p[0] <= self.x1 + BOX_TOL && p[1] >= self.y0 - BOX_TOL && p[1] <= self.y1 + BOX_TOL
    }

    pub fn expand(&self, margin: f64) -> Rect {
        Rect { x0: self.x0 - margin, x1: self.x1 + margin, y0: self.y0 - margin, y1: self.y1 + margin }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Sum in a fixed pairwise tree so the result does not depend on how the
/// terms were produced (serially or in parallel).
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    match xs.len() {
        0 => T::default(),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(T::default(), |acc, &x| acc + x),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
