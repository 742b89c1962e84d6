//! Vector and spectral majorization.
//!
//! `a` majorizes `b` iff every partial sum of the descending rearrangement
//! of `a` dominates the corresponding partial sum of `b`, with equal totals.
//! Vectors of different lengths are compared by zero-padding the shorter.

use crate::error::{Error, Result};
use crate::operators::QuantumState;
use crate::tol;

fn sorted_desc(v: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    out[..v.len()].copy_from_slice(v);
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

/// Whether `a` majorizes `b` within `tolerance` on every partial sum.
pub fn majorizes(a: &[f64], b: &[f64], tolerance: f64) -> bool {
    let len = a.len().max(b.len());
    let a = sorted_desc(a, len);
    let b = sorted_desc(b, len);
    let mut sa = 0.0;
    let mut sb = 0.0;
    for j in 0..len {
        sa += a[j];
        sb += b[j];
        if sa < sb - tolerance {
            return false;
        }
    }
    (sa - sb).abs() <= tolerance
}

/// Majorization between density matrices, via their spectra.
pub fn state_majorizes(rho1: &QuantumState, rho2: &QuantumState, tolerance: f64) -> Result<bool> {
    let s1 = rho1.spectrum()?;
    let s2 = rho2.spectrum()?;
    Ok(majorizes(s1.values(), s2.values(), tolerance))
}

pub fn state_majorizes_default(rho1: &QuantumState, rho2: &QuantumState) -> Result<bool> {
    state_majorizes(rho1, rho2, tol::MAJORIZATION)
}

/// Returns `(b . c, a_down . c_down)`, the two sides of the dot-product
/// bound that holds whenever `a` majorizes `b`.
pub fn lemma_bound(a: &[f64], b: &[f64], c: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::DimensionMismatch(format!(
            "lemma_bound lengths {}, {}, {}",
            a.len(),
            b.len(),
            c.len()
        )));
    }
    let lhs: f64 = b.iter().zip(c).map(|(x, y)| x * y).sum();
    let a_down = sorted_desc(a, a.len());
    let c_down = sorted_desc(c, c.len());
    let rhs: f64 = a_down.iter().zip(&c_down).map(|(x, y)| x * y).sum();
    Ok((lhs, rhs))
}
