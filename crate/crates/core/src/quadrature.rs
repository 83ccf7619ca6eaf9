//! Composite 16-node Gauss–Legendre quadrature.
//!
//! Panels are doubled until two successive composite estimates agree to the
//! requested absolute tolerance, or the panel cap is hit.

use std::cell::Cell;

use crate::error::{Error, Result};

/// Positive abscissae of the 16-point Gauss–Legendre rule on [-1, 1].
const NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];

const WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_09,
];

/// Hard cap on the number of panels (2^14).
pub const MAX_PANELS: usize = 1 << 14;

/// A single 16-node panel over `[a, b]`.
#[inline]
pub fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        let dx = half * x;
        acc += w * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

fn composite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            panel(f, lo, hi)
        })
        .sum()
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, starting from
/// `min_panels` panels.
pub fn integrate_from<F>(mut f: F, a: f64, b: f64, tol: f64, min_panels: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("quadrature tolerance must be positive, got {tol}")));
    }
    // Every evaluation goes through this guard so NaN/inf surface as errors.
    let bad: Cell<Option<(f64, f64)>> = Cell::new(None);
    let mut guarded = |x: f64| {
        let v = f(x);
        if !v.is_finite() && bad.get().is_none() {
            bad.set(Some((x, v)));
        }
        v
    };
    let mut panels = min_panels.clamp(1, MAX_PANELS);
    let mut coarse = composite(&mut guarded, a, b, panels);
    loop {
        if panels * 2 > MAX_PANELS {
            if let Some((x, value)) = bad.get() {
                return Err(Error::NonFinite { x, value });
            }
            return Err(Error::QuadratureNotConverged { tol, panels, change: f64::NAN });
        }
        panels *= 2;
        let fine = composite(&mut guarded, a, b, panels);
        if let Some((x, value)) = bad.get() {
            return Err(Error::NonFinite { x, value });
        }
        let change = (fine - coarse).abs();
        if change <= tol {
            return Ok(fine);
        }
        if panels * 2 > MAX_PANELS {
            return Err(Error::QuadratureNotConverged { tol, panels, change });
        }
        coarse = fine;
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_from(f, a, b, tol, 1)
}
