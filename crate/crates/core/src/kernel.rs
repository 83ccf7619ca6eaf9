//! Smoothing kernels `Q` with compact support `[-R, R]`.
//!
//! Polynomial kernels (Epanechnikov, box and the higher-order family built on
//! Epanechnikov) are stored as explicit coefficients in `y`, so windowed sums
//! `Σ_k Q_h(z_k - a)` can be evaluated from prefix power sums.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `3/(4R) (1 - (y/R)²)`.
    Epanechnikov,
    /// Standard normal density restricted to `[-R, R]` and renormalized.
    TruncGaussian,
    /// `1/(2R)`, the box kernel.
    Uniform,
    /// Epanechnikov times an even polynomial chosen so that moments
    /// `1..=k` vanish.
    HighOrder(u32),
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Epanechnikov => write!(f, "epanechnikov"),
            KernelFamily::TruncGaussian => write!(f, "trunc_gaussian"),
            KernelFamily::Uniform => write!(f, "uniform"),
            KernelFamily::HighOrder(k) => write!(f, "high_order({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `Q(y) = Σ_j c_j y^j` on `[-R, R]`.
    Poly(Vec<f64>),
    /// `Q(y) = norm · e^{-y²/2}` on `[-R, R]`.
    Gauss { norm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    radius: f64,
    shape: Shape,
    int_q: f64,
    int_q2: f64,
    l1: f64,
    sup: f64,
}

/// Largest supported high-order kernel (polynomial degree at most 14).
pub const MAX_HIGH_ORDER: u32 = 12;

/// Number of leading moments a symmetric base kernel kills for free.
const SYMMETRIC_ORDER: u32 = 1;

/// Builds a kernel of the given family whose moments `1..=order` vanish.
pub fn kernel_make(family: KernelFamily, radius: f64, order: u32) -> Result<Kernel> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Kernel(format!("support radius must be positive, got {radius}")));
    }
    let shape = match family {
        KernelFamily::HighOrder(k) => {
            if order > k {
                return Err(Error::Kernel(format!("high_order({k}) cannot cancel {order} moments")));
            }
            if k > MAX_HIGH_ORDER {
                return Err(Error::Kernel(format!("high_order({k}) exceeds the supported maximum {MAX_HIGH_ORDER}")));
            }
            Shape::Poly(high_order_coeffs(k, radius)?)
        }
        _ if order > SYMMETRIC_ORDER => {
            return Err(Error::Kernel(format!("{family} is a second-order kernel; {order} vanishing moments need high_order({order})")))
        }
        KernelFamily::Epanechnikov => {
            let c = 0.75 / radius;
            Shape::Poly(vec![c, 0.0, -c / (radius * radius)])
        }
        KernelFamily::Uniform => Shape::Poly(vec![0.5 / radius]),
        KernelFamily::TruncGaussian => {
            // ∫_{-R}^{R} e^{-y²/2} dy = √(2π) (Φ(R) - Φ(-R))
            let mass = quadrature::integrate_from(|y: f64| (-0.5 * y * y).exp(), -radius, radius, 1e-15, 4)?;
            Shape::Gauss { norm: 1.0 / mass }
        }
    };
    let mut kernel = Kernel { family, radius, shape, int_q: 0.0, int_q2: 0.0, l1: 0.0, sup: 0.0 };
    kernel.int_q = kernel.moment(0)?;
    kernel.int_q2 = kernel.integral(|q| q * q)?;
    kernel.l1 = kernel.integral(f64::abs)?;
    kernel.sup = kernel.sup_on_grid(20_001);
    Ok(kernel)
}

/// Default kernel for smoothness `beta`: Epanechnikov when `⌊β⌋ ≤ 1`,
/// otherwise the high-order family with `⌊β⌋` vanishing moments.
pub fn kernel_for_beta(beta: f64, radius: f64) -> Result<Kernel> {
    let order = beta.floor() as u32;
    if order <= SYMMETRIC_ORDER {
        kernel_make(KernelFamily::Epanechnikov, radius, order)
    } else {
        kernel_make(KernelFamily::HighOrder(order), radius, order)
    }
}

/// `∫ y^k 3/(4R)(1 - y²/R²) dy` over `[-R, R]`.
fn epanechnikov_moment(k: u32, radius: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let k = k as f64;
    3.0 * radius.powf(k) / ((k + 1.0) * (k + 3.0))
}

/// Coefficients (in powers of `y`) of Epanechnikov × even polynomial whose
/// moments `1..=k` vanish and whose integral is one.
fn high_order_coeffs(k: u32, radius: f64) -> Result<Vec<f64>> {
    // Unknown d_j multiplies y^{2j}, j = 0..=p. Odd moments vanish by symmetry;
    // even moments 0, 2, ..., 2p give the Hankel system H d = e_0.
    let p = (k / 2) as usize;
    let dim = p + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(dim).enumerate() {
            *cell = epanechnikov_moment(2 * (i + j) as u32, radius);
        }
        row[dim] = if i == 0 { 1.0 } else { 0.0 };
    }
    let d = solve(a).ok_or_else(|| Error::Kernel(format!("moment system for high_order({k}) is singular")))?;
    let c = 0.75 / radius;
    let base = [c, 0.0, -c / (radius * radius)];
    let mut out = vec![0.0; 2 * p + 3];
    for (j, dj) in d.iter().enumerate() {
        for (b, bv) in base.iter().enumerate() {
            out[2 * j + b] += dj * bv;
        }
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..=n {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][n] - s) / a[row][row];
    }
    Some(x)
}

impl Kernel {
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `Q(y)`, zero outside `[-R, R]`.
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        if y.abs() > self.radius {
            return 0.0;
        }
        match &self.shape {
            Shape::Poly(c) => c.iter().rev().fold(0.0, |acc, &cj| acc * y + cj),
            Shape::Gauss { norm } => norm * (-0.5 * y * y).exp(),
        }
    }

    /// `Q_h(y) = Q(y / h) / h`.
    #[inline]
    pub fn eval_h(&self, y: f64, h: f64) -> f64 {
        self.eval(y / h) / h
    }

    /// Coefficients in powers of `y` for polynomial kernels.
    pub fn polynomial_coeffs(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Poly(c) => Some(c),
            Shape::Gauss { .. } => None,
        }
    }

    /// Cached `∫ Q`.
    pub fn integral_q(&self) -> f64 {
        self.int_q
    }

    /// Cached `∫ Q²`.
    pub fn integral_q2(&self) -> f64 {
        self.int_q2
    }

    /// Cached `‖Q‖_{L¹}`.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// Cached `‖Q‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    /// Highest `j` such that all moments `1..=j` vanish by construction.
    pub fn order(&self) -> u32 {
        match self.family {
            KernelFamily::HighOrder(k) => k | 1,
            _ => SYMMETRIC_ORDER,
        }
    }

    /// `∫ y^j Q(y) dy` by quadrature.
    pub fn moment(&self, j: u32) -> Result<f64> {
        let r = self.radius;
        quadrature::integrate_from(|y| y.powi(j as i32) * self.eval(y), -r, r, 1e-14 * r.powi(j as i32).max(1.0), 4)
    }

    /// `∫ g(Q(y)) dy`, split at sign changes of `Q` so `|Q|` has no kinks
    /// inside a piece.
    fn integral(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        let mut lo = -self.radius;
        for root in self.sign_changes(2000) {
            total += quadrature::integrate_from(|y| g(self.eval(y)), lo, root, 1e-14, 2)?;
            lo = root;
        }
        Ok(total + quadrature::integrate_from(|y| g(self.eval(y)), lo, self.radius, 1e-14, 2)?)
    }

    fn sign_changes(&self, cells: usize) -> Vec<f64> {
        let r = self.radius;
        let at = |k: usize| -r + 2.0 * r * k as f64 / cells as f64;
        let mut roots = Vec::new();
        for k in 0..cells {
            let (mut a, mut b) = (at(k), at(k + 1));
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if self.eval(mid).signum() == fa.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        roots
    }

    fn sup_on_grid(&self, points: usize) -> f64 {
        let r = self.radius;
        (0..points).map(|k| self.eval(-r + 2.0 * r * k as f64 / (points - 1) as f64).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_unit_radius() {
        let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
        assert!((q.eval(0.0) - 0.75).abs() < 1e-15);
        assert!((q.eval(0.5) - 0.75 * 0.75).abs() < 1e-15);
        assert_eq!(q.eval(1.5), 0.0);
        assert!((q.integral_q() - 1.0).abs() < 1e-12);
        assert!(q.moment(1).unwrap().abs() < 1e-14);
        assert!((q.integral_q2() - 0.6).abs() < 1e-12);
        assert!((q.sup_norm() - 0.75).abs() < 1e-12);
        assert!((q.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trunc_gaussian_normalization() {
        let q = kernel_make(KernelFamily::TruncGaussian, 3.0, 1).unwrap();
        // Φ(3) - Φ(-3) = erf(3/√2)
        let mass = 0.997_300_203_936_739_8;
        assert!((q.eval(0.0) - 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * mass)).abs() < 1e-15);
        assert!((q.integral_q() - 1.0).abs() < 1e-10);
        assert!(q.polynomial_coeffs().is_none());
    }

    #[test]
    fn high_order_moments_vanish() {
        for k in 2..=6 {
            for r in [0.5, 1.0, 2.0] {
                let q = kernel_make(KernelFamily::HighOrder(k), r, k).unwrap();
                assert!((q.integral_q() - 1.0).abs() < 1e-10, "k={k} R={r}");
                for j in 1..=k {
                    assert!(q.moment(j).unwrap().abs() < 1e-8, "k={k} R={r} j={j}");
                }
                // the next even moment is generically nonzero
                let next = if k % 2 == 0 { k + 2 } else { k + 1 };
                assert!(q.moment(next).unwrap().abs() > 1e-6);
            }
        }
    }

    #[test]
    fn high_order_two_closed_form() {
        // Epanechnikov × (d0 + d1 y²): d0 = 15/8, d1 = -35/8 at R = 1
        let q = kernel_make(KernelFamily::HighOrder(2), 1.0, 2).unwrap();
        let c = q.polynomial_coeffs().unwrap();
        let expect = [0.75 * 15.0 / 8.0, 0.0, -0.75 * 15.0 / 8.0 - 0.75 * 35.0 / 8.0, 0.0, 0.75 * 35.0 / 8.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn order_mismatch_rejected() {
        assert!(kernel_make(KernelFamily::Epanechnikov, 1.0, 2).is_err());
        assert!(kernel_make(KernelFamily::HighOrder(2), 1.0, 3).is_err());
        assert!(kernel_make(KernelFamily::Uniform, 0.0, 0).is_err());
        assert_eq!(kernel_for_beta(2.5, 1.0).unwrap().family(), KernelFamily::HighOrder(2));
        assert_eq!(kernel_for_beta(1.0, 1.0).unwrap().family(), KernelFamily::Epanechnikov);
    }

    #[test]
    fn scaled_kernel_integrates_to_one() {
        let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
        let h = 0.07;
        let v = quadrature::integrate(|y| q.eval_h(y - 0.3, h), 0.3 - h, 0.3 + h, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
