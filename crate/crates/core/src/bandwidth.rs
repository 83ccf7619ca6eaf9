//! Smoothed cross-validation on the jump chain.
//!
//! The pre-jump states `Z_k` are split into an early block `m₁ < k ≤ m₂`
//! used as test points and a late block `ℓ < k ≤ n` that builds the density
//! estimate
//!
//! `π̂(a) = 1/((n-ℓ) N) Σ_{k=ℓ+1}^{n} Σ_i Q_h(Z_k^i - a)`,
//!
//! and the score is `SCV(h) = ∫_0^K π̂² - 2/(N(m₂-m₁)) Σ_{k=m₁+1}^{m₂} Σ_i π̂(Z_k^i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature;
use crate::simulator::EventLog;

/// Pre-jump state vectors of a jump chain, flattened row-major.
#[derive(Debug, Clone, Copy)]
pub struct ChainView<'a> {
    pub states: &'a [f64],
    pub n_neurons: usize,
    pub k_max: f64,
}

impl<'a> ChainView<'a> {
    pub fn of(log: &'a EventLog) -> Self {
        Self { states: log.pre_states(), n_neurons: log.n_neurons(), k_max: log.params().k_max() }
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.n_neurons
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// All coordinates of jumps `from..to` (0-based, half open).
    pub fn block(&self, from: usize, to: usize) -> &'a [f64] {
        &self.states[from * self.n_neurons..to * self.n_neurons]
    }
}

/// Pascal's triangle up to the largest polynomial kernel degree.
const BINOMIAL: [[f64; 16]; 16] = {
    let mut t = [[0.0; 16]; 16];
    let mut n = 0;
    while n < 16 {
        t[n][0] = 1.0;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            k += 1;
        }
        n += 1;
    }
    t
};

/// `a ↦ Σ_k Q_h(z_k - a)` over a fixed set of centers.
///
/// For polynomial kernels the centers are grouped into cells of width `hR`
/// and power sums of `z - anchor` are kept per cell, so a window sum costs a
/// few binary searches and a binomial shift with no catastrophic cancellation.
#[derive(Debug, Clone)]
pub struct KernelSum<'k> {
    kernel: &'k Kernel,
    h: f64,
    r: f64,
    centers: Vec<f64>,
    /// First cell id and, per cell, the index of its first center.
    cell0: i64,
    starts: Vec<usize>,
    /// `prefix[k * stride + q] = Σ_{j<k} (z_j - anchor(z_j))^q`, `stride` being
    /// the number of kernel coefficients.
    prefix: Vec<f64>,
    stride: usize,
}

impl<'k> KernelSum<'k> {
    pub fn new(kernel: &'k Kernel, h: f64, centers: &[f64]) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        if let Some(&z) = centers.iter().find(|z| !z.is_finite()) {
            return Err(Error::Domain(format!("non-finite center {z}")));
        }
        let r = kernel.radius() * h;
        let mut centers = centers.to_vec();
        centers.sort_by(f64::total_cmp);
        let cell = |z: f64| (z / r).floor() as i64;
        let (cell0, starts) = match (centers.first(), centers.last()) {
            (Some(&lo), Some(&hi)) => {
                let (c0, c1) = (cell(lo), cell(hi));
                let starts = (c0..=c1 + 1).map(|c| centers.partition_point(|&z| cell(z) < c)).collect();
                (c0, starts)
            }
            _ => (0, vec![0]),
        };
        let stride = kernel.polynomial_coeffs().map_or(0, <[f64]>::len);
        let mut prefix = vec![0.0; stride * (centers.len() + 1)];
        for (k, &z) in centers.iter().enumerate() {
            let d = z - Self::anchor(cell(z), r);
            let mut pow = 1.0;
            for q in 0..stride {
                prefix[(k + 1) * stride + q] = prefix[k * stride + q] + pow;
                pow *= d;
            }
        }
        Ok(Self { kernel, h, r, centers, cell0, starts, prefix, stride })
    }

    #[inline]
    fn anchor(cell: i64, r: f64) -> f64 {
        (cell as f64 + 0.5) * r
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn eval(&self, a: f64) -> f64 {
        let lo = self.centers.partition_point(|&z| z < a - self.r);
        let hi = self.centers.partition_point(|&z| z <= a + self.r);
        self.eval_window(a, lo, hi)
    }

    /// `Σ_j eval(points_j)`, sweeping sorted points instead of searching.
    pub fn sum_at(&self, points: &[f64]) -> f64 {
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mut lo, mut hi) = (0, 0);
        let n = self.centers.len();
        let mut total = 0.0;
        for &a in &sorted {
            while lo < n && self.centers[lo] < a - self.r {
                lo += 1;
            }
            while hi < n && self.centers[hi] <= a + self.r {
                hi += 1;
            }
            total += self.eval_window(a, lo, hi);
        }
        total
    }

    /// Sum over centers `lo..hi`, which must be exactly those within `hR` of `a`
    /// (boundary ties aside).
    fn eval_window(&self, a: f64, lo: usize, hi: usize) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        let Some(coeffs) = self.kernel.polynomial_coeffs() else {
            return self.centers[lo..hi].iter().map(|&z| self.kernel.eval_h(z - a, self.h)).sum();
        };
        let sums = self.power_sums(a, lo, hi, coeffs.len());
        let mut total = 0.0;
        let mut hpow = self.h;
        for (&cj, &sj) in coeffs.iter().zip(&sums) {
            total += cj * sj / hpow;
            hpow *= self.h;
        }
        total
    }

    /// `Σ_{k ∈ lo..hi} (z_k - a)^q` for `q < count`, assembled per cell from
    /// the anchored prefix sums.
    fn power_sums(&self, a: f64, lo: usize, hi: usize, count: usize) -> [f64; 16] {
        let mut out = [0.0f64; 16];
        let mut raw = [0.0f64; 16];
        let first = (self.centers[lo] / self.r).floor() as i64;
        let last = (self.centers[hi - 1] / self.r).floor() as i64;
        for c in first..=last {
            let k = (c - self.cell0) as usize;
            let (from, to) = (self.starts[k].max(lo), self.starts[k + 1].min(hi));
            if from >= to {
                continue;
            }
            let (pt, pf) = (&self.prefix[to * self.stride..], &self.prefix[from * self.stride..]);
            for q in 0..count {
                raw[q] = pt[q] - pf[q];
            }
            // Σ (z - a)^j = Σ_q C(j, q) s^{j-q} Σ (z - anchor)^q, s = anchor - a
            let s = Self::anchor(c, self.r) - a;
            let mut spow = [1.0f64; 16];
            for i in 1..count {
                spow[i] = spow[i - 1] * s;
            }
            for (j, o) in out.iter_mut().enumerate().take(count) {
                let row = &BINOMIAL[j];
                let mut acc = 0.0;
                for q in 0..=j {
                    acc += row[q] * spow[j - q] * raw[q];
                }
                *o += acc;
            }
        }
        out
    }

    /// `∫_{a0}^{a1} (Σ_{k ∈ lo..hi} Q_h(z_k - a))² da` for a polynomial kernel,
    /// exactly: on the piece the sum is a polynomial in `a - mid`.
    fn square_on_piece(&self, coeffs: &[f64], a0: f64, a1: f64, lo: usize, hi: usize) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        let (half, mid) = (0.5 * (a1 - a0), 0.5 * (a0 + a1));
        let d = coeffs.len();
        let sums = self.power_sums(mid, lo, hi, d);
        // (z - a)^j = Σ_i C(j, i) (z - mid)^{j-i} (-(a - mid))^i
        let mut p = [0.0f64; 16];
        let mut hpow = self.h;
        for (j, &cj) in coeffs.iter().enumerate() {
            if cj != 0.0 {
                let mut binom = 1.0;
                for i in 0..=j {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    p[i] += cj / hpow * binom * sign * sums[j - i];
                    binom = binom * (j - i) as f64 / (i + 1) as f64;
                }
            }
            hpow *= self.h;
        }
        // ∫_{-half}^{half} t^e dt = 2 half^{e+1} / (e+1) for even e
        let mut total = 0.0;
        for i in 0..d {
            for k in 0..d {
                let e = i + k;
                if e % 2 == 0 {
                    total += p[i] * p[k] * 2.0 * half.powi(e as i32 + 1) / (e + 1) as f64;
                }
            }
        }
        total
    }

    /// `∫_lo^hi (Σ_k Q_h(z_k - a))² da`.
    ///
    /// The integrand is smooth between consecutive breakpoints `z_k ± hR`.
    /// For polynomial kernels it is a polynomial there, squared and integrated
    /// in closed form; other kernels are integrated adaptively per piece, with the absolute
    /// tolerance `tol` shared in proportion to piece length.
    pub fn integrate_square(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let poly = self.kernel.polynomial_coeffs();
        let r = self.r;
        let n = self.centers.len();
        // entries z - r and exits z + r are each sorted; merge them
        let (mut ie, mut ix) = (0usize, 0usize);
        let mut prev = lo;
        let mut total = 0.0;
        let span = hi - lo;
        let piece = |a0: f64, a1: f64, enter: usize, exit: usize, total: &mut f64| -> Result<()> {
            if a1 <= a0 {
                return Ok(());
            }
            match poly {
                Some(coeffs) => *total += self.square_on_piece(coeffs, a0, a1, exit, enter),
                None => {
                    let square = |a: f64| {
                        let v = self.eval_window(a, exit, enter);
                        v * v
                    };
                    *total += quadrature::integrate(square, a0, a1, tol * (a1 - a0) / span)?
                }
            }
            Ok(())
        };
        // skip breakpoints at or below `lo`
        while ie < n && self.centers[ie] - r <= lo {
            ie += 1;
        }
        while ix < n && self.centers[ix] + r <= lo {
            ix += 1;
        }
        loop {
            let next_e = if ie < n { self.centers[ie] - r } else { f64::INFINITY };
            let next_x = if ix < n { self.centers[ix] + r } else { f64::INFINITY };
            let next = next_e.min(next_x).min(hi);
            piece(prev, next, ie, ix, &mut total)?;
            if next >= hi {
                break;
            }
            prev = next;
            while ie < n && self.centers[ie] - r <= next {
                ie += 1;
            }
            while ix < n && self.centers[ix] + r <= next {
                ix += 1;
            }
        }
        Ok(total)
    }
}

/// The density estimate built from jumps `ℓ < k ≤ n` (1-based).
#[derive(Debug, Clone)]
pub struct JumpChainDensity<'k> {
    sum: KernelSum<'k>,
    norm: f64,
}

impl JumpChainDensity<'_> {
    pub fn eval(&self, a: f64) -> f64 {
        self.sum.eval(a) / self.norm
    }

    /// `Σ_j π̂(points_j)`.
    pub fn sum_at(&self, points: &[f64]) -> f64 {
        self.sum.sum_at(points) / self.norm
    }

    /// `∫ π̂` over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let min_panels = ((hi - lo) / self.sum.r).ceil().max(1.0) as usize;
        quadrature::integrate_from(|a| self.eval(a), lo, hi, tol, min_panels.min(quadrature::MAX_PANELS / 2))
    }

    /// `∫ π̂²` over `[lo, hi]`; `tol` only matters for non-polynomial kernels.
    pub fn integral_of_square(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        Ok(self.sum.integrate_square(lo, hi, tol * self.norm * self.norm)? / (self.norm * self.norm))
    }
}

pub fn jump_chain_density<'k>(chain: &ChainView<'_>, ell: usize, n: usize, h: f64, q: &'k Kernel) -> Result<JumpChainDensity<'k>> {
    if n > chain.len() {
        return Err(Error::InsufficientJumps { needed: n, available: chain.len() });
    }
    if ell >= n {
        return Err(Error::Config(format!("density block needs ℓ < n, got ℓ = {ell}, n = {n}")));
    }
    let sum = KernelSum::new(q, h, chain.block(ell, n))?;
    let norm = ((n - ell) * chain.n_neurons) as f64;
    Ok(JumpChainDensity { sum, norm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScvConfig {
    pub m1: usize,
    pub m2: usize,
    pub ell: usize,
    pub n: usize,
    /// Candidate bandwidths.
    pub grid: Vec<f64>,
    /// Absolute tolerance for `∫ π̂²` (exact for polynomial kernels).
    pub tol: f64,
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

impl ScvConfig {
    pub const DEFAULT_GRID_SIZE: usize = 32;
    pub const DEFAULT_TOL: f64 = 1e-6;

    /// Splits at `⌈0.2 n⌉, ⌈0.4 n⌉, ⌈0.6 n⌉` and 32 log-spaced bandwidths over
    /// `[t^{-1/2}, t^{-1/8}]`.
    pub fn defaults(n_jumps: usize, horizon: f64) -> Self {
        let frac = |p: f64| (p * n_jumps as f64).ceil() as usize;
        Self {
            m1: frac(0.2),
            m2: frac(0.4),
            ell: frac(0.6),
            n: n_jumps,
            grid: log_grid(horizon.powf(-0.5), horizon.powf(-0.125), Self::DEFAULT_GRID_SIZE),
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn for_log(log: &EventLog) -> Self {
        Self::defaults(log.len(), log.horizon())
    }

    pub fn validate(&self, available: usize) -> Result<()> {
        if !(1 <= self.m1 && self.m1 < self.m2 && self.m2 <= self.ell && self.ell < self.n) {
            return Err(Error::Config(format!(
                "splits must satisfy 1 <= m1 < m2 <= ell < n, got {} {} {} {}",
                self.m1, self.m2, self.ell, self.n
            )));
        }
        if self.n > available {
            return Err(Error::InsufficientJumps { needed: self.n, available });
        }
        if self.grid.is_empty() || self.grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config("bandwidth grid must be nonempty and positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

pub fn scv_score_chain(chain: &ChainView<'_>, cfg: &ScvConfig, h: f64, q: &Kernel) -> Result<f64> {
    cfg.validate(chain.len())?;
    let density = jump_chain_density(chain, cfg.ell, cfg.n, h, q)?;
    let sq = density.integral_of_square(0.0, chain.k_max, cfg.tol)?;
    let test = chain.block(cfg.m1, cfg.m2);
    let cross = density.sum_at(test);
    let score = sq - 2.0 * cross / test.len() as f64;
    if !score.is_finite() {
        return Err(Error::NonFinite { x: h, value: score });
    }
    Ok(score)
}

pub fn scv_score(log: &EventLog, cfg: &ScvConfig, h: f64, q: &Kernel) -> Result<f64> {
    scv_score_chain(&ChainView::of(log), cfg, h, q)
}

/// Grid minimizer of the score (ties to the smaller bandwidth) and the full
/// score curve sorted by bandwidth.
pub fn scv_select_chain(chain: &ChainView<'_>, cfg: &ScvConfig, q: &Kernel) -> Result<(f64, Vec<(f64, f64)>)> {
    cfg.validate(chain.len())?;
    let mut grid = cfg.grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let curve: Vec<(f64, f64)> = grid.par_iter().map(|&h| scv_score_chain(chain, cfg, h, q).map(|s| (h, s))).collect::<Result<_>>()?;
    Ok((select_min(&curve), curve))
}

pub fn scv_select(log: &EventLog, cfg: &ScvConfig, q: &Kernel) -> Result<(f64, Vec<(f64, f64)>)> {
    scv_select_chain(&ChainView::of(log), cfg, q)
}

/// First minimizer of an ascending `(h, score)` curve.
pub fn select_min(curve: &[(f64, f64)]) -> f64 {
    let mut best = curve[0];
    for &(h, s) in &curve[1..] {
        if s < best.1 {
            best = (h, s);
        }
    }
    best.0
}

/// `true` when the selected bandwidth is neither end of the grid.
pub fn is_interior(h: f64, curve: &[(f64, f64)]) -> bool {
    curve.len() > 2 && h != curve[0].0 && h != curve[curve.len() - 1].0
}

pub const SCORE_CSV_HEADER: &str = "h,scv_score";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_make, KernelFamily};
    use rand::SeedableRng;
    use rand_distr::{Beta, Distribution};

    fn brute(kernel: &Kernel, h: f64, centers: &[f64], a: f64) -> f64 {
        centers.iter().map(|&z| kernel.eval_h(z - a, h)).sum()
    }

    #[test]
    fn kernel_sum_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let centers: Vec<f64> = (0..5000).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng)).collect();
        for fam in [KernelFamily::Epanechnikov, KernelFamily::Uniform, KernelFamily::HighOrder(4), KernelFamily::TruncGaussian] {
            let q = kernel_make(fam, 1.0, 0).unwrap();
            for h in [0.01, 0.1, 0.7] {
                let s = KernelSum::new(&q, h, &centers).unwrap();
                let points: Vec<f64> = (0..=40).rev().map(|k| -0.1 + 2.2 * k as f64 / 40.0).collect();
                for &a in &points {
                    let want = brute(&q, h, &centers, a);
                    let got = s.eval(a);
                    assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "{fam} h={h} a={a}: {got} vs {want}");
                }
                let want: f64 = points.iter().map(|&a| brute(&q, h, &centers, a)).sum();
                assert!((s.sum_at(&points) - want).abs() <= 1e-8 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn single_state_is_average_of_bumps() {
        let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
        let states = [0.2, 0.9, 1.4, 0.5, 0.5, 0.5];
        let chain = ChainView { states: &states, n_neurons: 3, k_max: 2.0 };
        let d = jump_chain_density(&chain, 0, 1, 0.3, &q).unwrap();
        for a in [0.1, 0.2, 0.8, 1.5] {
            let want = (q.eval_h(0.2 - a, 0.3) + q.eval_h(0.9 - a, 0.3) + q.eval_h(1.4 - a, 0.3)) / 3.0;
            assert!((d.eval(a) - want).abs() < 1e-12);
        }
        assert!((d.integral(-0.3, 2.3, 1e-9).unwrap() - 1.0).abs() < 1e-9);
        let sq = quadrature::integrate_from(|a| d.eval(a).powi(2), -0.3, 2.3, 1e-10, 64).unwrap();
        assert!((d.integral_of_square(-0.3, 2.3, 1e-12).unwrap() - sq).abs() < 1e-9);
        assert!(jump_chain_density(&chain, 1, 3, 0.3, &q).is_err());
        assert!(jump_chain_density(&chain, 1, 1, 0.3, &q).is_err());
    }

    #[test]
    fn flat_limit_closed_form() {
        // Box kernel with h = H >= K: π̂ ≡ 1/(2H) on [0, K], so
        // SCV = K/(4H²) - 2 · (1/(2H)).
        let q = kernel_make(KernelFamily::Uniform, 1.0, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let states: Vec<f64> = (0..200).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng)).collect();
        let chain = ChainView { states: &states, n_neurons: 2, k_max: 2.0 };
        let cfg = ScvConfig { m1: 10, m2: 40, ell: 50, n: 100, grid: vec![3.0], tol: 1e-12 };
        for big in [3.0, 10.0, 100.0] {
            let s = scv_score_chain(&chain, &cfg, big, &q).unwrap();
            let want = 2.0 / (4.0 * big * big) - 1.0 / big;
            assert!((s - want).abs() < 1e-10, "H={big}: {s} vs {want}");
        }
        // determinism
        assert_eq!(scv_score_chain(&chain, &cfg, 0.3, &q).unwrap(), scv_score_chain(&chain, &cfg, 0.3, &q).unwrap());
    }

    #[test]
    fn tie_and_single_candidate() {
        assert_eq!(select_min(&[(0.5, 1.0)]), 0.5);
        assert_eq!(select_min(&[(0.1, 2.0), (0.2, -1.0), (0.3, -1.0)]), 0.2);
        assert!(!is_interior(0.1, &[(0.1, 0.0), (0.2, 1.0), (0.3, 2.0)]));
        assert!(is_interior(0.2, &[(0.1, 0.0), (0.2, 1.0), (0.3, 2.0)]));
    }

    #[test]
    fn config_validation() {
        let cfg = ScvConfig::defaults(100, 1000.0);
        assert_eq!((cfg.m1, cfg.m2, cfg.ell, cfg.n), (20, 40, 60, 100));
        assert_eq!(cfg.grid.len(), 32);
        assert!((cfg.grid[0] - 1000f64.powf(-0.5)).abs() < 1e-15);
        assert!((cfg.grid[31] - 1000f64.powf(-0.125)).abs() < 1e-12);
        assert!(cfg.validate(100).is_ok());
        assert!(cfg.validate(99).is_err());
        let bad = ScvConfig { m2: 20, ..cfg.clone() };
        assert!(bad.validate(100).is_err());
        let empty = ScvConfig { grid: vec![], ..cfg };
        assert!(empty.validate(100).is_err());
    }

    #[test]
    fn iid_draws_recover_amise_bandwidth() {
        // i.i.d. Beta(3, 3) on [0, 1]; AMISE-optimal Epanechnikov bandwidth
        // h* = (R(Q) / (μ₂² R(p'') n))^{1/5} with R(Q) = 3/5, μ₂ = 1/5.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let beta = Beta::new(3.0, 3.0).unwrap();
        let states: Vec<f64> = (0..40_000).map(|_| beta.sample(&mut rng)).collect();
        let chain = ChainView { states: &states, n_neurons: 1, k_max: 1.0 };
        let n = states.len();
        let cfg = ScvConfig { m1: n / 10, m2: n / 2, ell: n / 2, n, grid: log_grid(0.01, 1.0, 40), tol: 1e-8 };
        let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
        let (h_hat, curve) = scv_select_chain(&chain, &cfg, &q).unwrap();
        assert!(curve.iter().all(|(_, s)| s.is_finite()));
        let p2 = |x: f64| 30.0 * (2.0 - 12.0 * x + 12.0 * x * x);
        let r_p2 = quadrature::integrate(|x| p2(x).powi(2), 0.0, 1.0, 1e-12).unwrap();
        let n_density = (cfg.n - cfg.ell) as f64;
        let h_star = (0.6 / (0.04 * r_p2 * n_density)).powf(0.2);
        assert!(h_hat > h_star / 3.0 && h_hat < h_star * 3.0, "h_hat {h_hat}, h* {h_star}");
    }
}
