//! Slope pairing for `A B = T^k U`.

use crate::error::{HaloError, Result};
use crate::matrix::{fp_matrix_inverse, Matrix};
use crate::polygon::{newton_polygon, Q};
use crate::ring::FpSeries;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairingReport {
    pub k: usize,
    /// Newton slopes of `A`, increasing.
    pub slopes_a: Vec<Q>,
    /// Newton slopes of `B`, decreasing.
    pub slopes_b: Vec<Q>,
    pub pairs: Vec<(Q, Q)>,
}

/// Matches Newton slopes of `A` and `B` into pairs summing to `k`.
pub fn slope_pairing_check(a: &Matrix<FpSeries>, b: &Matrix<FpSeries>, u: &Matrix<FpSeries>, k: usize) -> Result<PairingReport> {
    let n = a.rows();
    if !a.is_square() || [b.rows(), b.cols(), u.rows(), u.cols()].iter().any(|&x| x != n) {
        return Err(HaloError::DimensionMismatch("pairing needs three square matrices of one size".into()));
    }
    if fp_matrix_inverse(&u.residue_matrix(), u.ctx().p).is_none() {
        return Err(HaloError::HypothesisFailed("U does not have invertible reduction".into()));
    }
    if a.mul(b)? != u.mul_t(k) {
        return Err(HaloError::HypothesisFailed(format!("A B differs from T^{k} U")));
    }
    if u.mul(b)? != b.mul(u)? {
        return Err(HaloError::HypothesisFailed("U and B do not commute".into()));
    }
    let pa = newton_polygon(a)?;
    let pb = newton_polygon(b)?;
    if pa.partial || pb.partial {
        return Err(HaloError::PrecisionExhausted("a characteristic coefficient vanishes at this precision".into()));
    }
    let slopes_a = pa.slope_list();
    let mut slopes_b = pb.slope_list();
    slopes_b.reverse();
    if slopes_a.len() != n || slopes_b.len() != n {
        return Err(HaloError::PrecisionExhausted("Newton polygon does not span the full degree".into()));
    }
    let target = Q::from(k as i64);
    let pairs: Vec<(Q, Q)> = slopes_a.iter().copied().zip(slopes_b.iter().copied()).collect();
    if let Some((x, y)) = pairs.iter().find(|(x, y)| *x + *y != target) {
        return Err(HaloError::NoPairing(format!("slopes {x} and {y} do not sum to {k}")));
    }
    Ok(PairingReport {
        k,
        slopes_a,
        slopes_b,
        pairs,
    })
}
