//! Lower-left elimination by the series `X = -sum D^i C A^{-i-1}`.

use super::{certify, lower_left, newton_lower_bound, Decomposition, EliminationTrace, TraceStep};
use crate::error::{HaloError, Result};
use crate::matrix::Matrix;
use crate::polygon::{is_hodge_bounded, is_strictly_bounded, newton_polygon, SlopeProfile, Q};
use crate::ring::{FpSeries, Valuation};

/// `T^L A^{-1}` for a strictly `λ`-bounded square `A`, where `L = max λ`.
pub(crate) fn scaled_inverse(a: &Matrix<FpSeries>, lambda: &[usize]) -> Result<(Matrix<FpSeries>, usize)> {
    let n = a.rows();
    let l_max = lambda.iter().copied().max().unwrap_or(0);
    let ctx = *a.ctx();
    let a_red = Matrix::from_fn(&ctx, n, n, |i, j| a.get(i, j).div_t_pow(lambda[i]));
    let inv = a_red.inverse()?;
    Ok((Matrix::from_fn(&ctx, n, n, |i, j| inv.get(i, j).mul_t_pow(l_max - lambda[j])), l_max))
}

/// Solves `X A - D X = -C` modulo `T^N` by summing the series.
pub(crate) fn sylvester_series(
    a: &Matrix<FpSeries>,
    c: &Matrix<FpSeries>,
    d: &Matrix<FpSeries>,
    lambda_top: &[usize],
    gap: Q,
) -> Result<Matrix<FpSeries>> {
    let n_prec = a.t_prec();
    let ctx = *a.ctx();
    let mut terms = (Q::from(n_prec as i64 + 1) / gap).ceil().to_integer() as usize + a.rows() + d.rows() + 4;
    for _ in 0..8 {
        let (ainv, l) = scaled_inverse(&a.retruncate(n_prec + (terms + 1) * max1(lambda_top)), lambda_top)?;
        let big = ainv.t_prec();
        let (cb, db) = (c.retruncate(big), d.retruncate(big));
        let mut p_i = cb.mul(&ainv)?;
        let mut x = Matrix::zeros(&ctx, c.rows(), c.cols());
        for i in 0..terms {
            let shift = (i + 1) * l;
            if !p_i.min_valuation().is_at_least(shift) {
                return Err(HaloError::InvariantViolation(format!("series term {i} is not integral")));
            }
            let term = p_i.div_t(shift).retruncate(n_prec);
            x = x.sub(&term)?;
            p_i = db.mul(&p_i)?.mul(&ainv)?;
        }
        let residual = x.mul(a)?.sub(&d.mul(&x)?)?.add(c)?;
        if residual.is_zero() {
            return Ok(x);
        }
        terms *= 2;
    }
    Err(HaloError::PrecisionExhausted("elimination series did not converge".into()))
}

fn max1(l: &[usize]) -> usize {
    l.iter().copied().max().unwrap_or(0).max(1)
}

/// Largest Newton slope of `a` and smallest of `d`, as certified bounds.
pub(crate) fn eigen_gap(a: &Matrix<FpSeries>, d: &Matrix<FpSeries>) -> Result<(Q, Q)> {
    let pa = newton_polygon(a)?;
    if pa.partial {
        return Err(HaloError::PrecisionExhausted("top block determinant vanishes at this precision".into()));
    }
    let a_max = pa.slope_list().last().copied().unwrap_or(Q::from(0));
    let pd = newton_lower_bound(d)?;
    let d_min = pd.slope_list().first().copied().unwrap_or(Q::from(d.t_prec() as i64));
    Ok((a_max, d_min))
}

/// Conjugates `M` by `Y = [[I,0],[X,I]]` until the lower-left block vanishes mod `T^N`.
pub fn eliminate_lower_left(
    m: &Matrix<FpSeries>,
    s: usize,
    lambda: &SlopeProfile,
) -> Result<(Matrix<FpSeries>, Decomposition<FpSeries>)> {
    let n = m.rows();
    if !m.is_square() || lambda.len() < n {
        return Err(HaloError::DimensionMismatch("elimination needs a square matrix and a profile covering it".into()));
    }
    if s == 0 || s >= n {
        return Err(HaloError::Invalid(format!("split {s} outside 1..{n}")));
    }
    let lam = &lambda.values()[..n];
    let ctx = *m.ctx();
    let n_prec = m.t_prec();
    let (mut a, b, mut c, mut d) = m.split(s);
    let h0 = c.min_valuation();
    let lam_s = lam[s - 1];
    let eps = match h0 {
        Valuation::AtLeastPrecision => None,
        Valuation::Exact(v) if v > lam_s => Some(v - lam_s),
        Valuation::Exact(v) => {
            return Err(HaloError::GapViolation(format!("H(C,1) = {v} is not above λ_s = {lam_s}")));
        }
    };
    if !is_hodge_bounded(m, lam) {
        return Err(HaloError::HypothesisFailed("matrix is not λ-Hodge bounded".into()));
    }
    let mut x_total = Matrix::zeros(&ctx, n - s, s);
    let mut steps = Vec::new();
    if let Some(eps) = eps {
        if !is_strictly_bounded(&a, &lam[..s]) {
            return Err(HaloError::HypothesisFailed("top-left block is not strictly λ-Hodge bounded".into()));
        }
        let (a_max, d_min) = eigen_gap(&a, &d)?;
        if a_max >= d_min {
            return Err(HaloError::GapViolation(format!("max slope {a_max} of A is not below min slope {d_min} of D")));
        }
        let mut k = 0;
        while !c.is_zero() {
            if k > n_prec + 1 {
                return Err(HaloError::IterationBudgetExceeded(k));
            }
            let hc = c.min_valuation();
            if !hc.is_at_least(lam_s + k * eps) {
                return Err(HaloError::InvariantViolation(format!("ladder broken at step {k}: H(C,1) = {hc:?}")));
            }
            if !is_strictly_bounded(&a, &lam[..s]) {
                return Err(HaloError::InvariantViolation("top-left block lost strict boundedness".into()));
            }
            let (a_max, d_min) = eigen_gap(&a, &d)?;
            let x = sylvester_series(&a, &c, &d, &lam[..s], d_min - a_max)?;
            let xb = x.mul(&b)?;
            let c_next = x.mul(&a)?.add(&c)?.sub(&xb.add(&d)?.mul(&x)?)?;
            a = a.sub(&b.mul(&x)?)?;
            d = xb.add(&d)?;
            let hn = c_next.min_valuation();
            let gain = match (hc, hn) {
                (Valuation::Exact(u), Valuation::Exact(v)) => Some(v.saturating_sub(u)),
                _ => None,
            };
            x_total = x_total.add(&x)?;
            steps.push(TraceStep {
                x,
                lower_left_before: hc,
                gain,
                depth: None,
            });
            c = c_next;
            k += 1;
        }
    }
    let id_top = Matrix::identity(&ctx, s);
    let id_bot = Matrix::identity(&ctx, n - s);
    let zero = Matrix::zeros(&ctx, s, n - s);
    let y = Matrix::from_blocks(&id_top, &zero, &x_total, &id_bot);
    let y_inv = Matrix::from_blocks(&id_top, &zero, &x_total.neg(), &id_bot);
    let result = y.mul(m)?.mul(&y_inv)?;
    let certificates = certify(&y, m, &result, s, lam)?;
    if !lower_left(&result, s).is_zero() {
        return Err(HaloError::InvariantViolation("lower-left block survived elimination".into()));
    }
    let converged_at = steps.len();
    Ok((
        x_total,
        Decomposition {
            w: y,
            result,
            split: s,
            certificates,
            trace: Some(EliminationTrace {
                iterations: steps,
                converged_at,
                step: eps.unwrap_or(0),
            }),
        },
    ))
}
