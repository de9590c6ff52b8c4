//! Finite Newton–Hodge decomposition over `F_p[[T]]`.

use super::hensel::hensel_slope_factor;
use super::smith::smith_form;
use super::{certify, lower_left, Decomposition};
use crate::error::{HaloError, Result};
use crate::matrix::Matrix;
use crate::polygon::{is_hodge_bounded, newton_polygon, touching_vertices, SlopeProfile, DEFAULT_MINOR_CAP};
use crate::ring::{FpSeries, Valuation};

/// `G(M)` for `G(x) = sum_k r_k x^{deg-k}`, by Horner's rule.
fn eval_reversed(r: &[FpSeries], m: &Matrix<FpSeries>) -> Result<Matrix<FpSeries>> {
    let ctx = *m.ctx();
    let n = m.rows();
    let mut acc = Matrix::zeros(&ctx, n, n);
    for c in r {
        acc = acc.mul(m)?.add(&Matrix::identity(&ctx, n).scale_left(c))?;
    }
    Ok(acc)
}

fn block_diag(a: &Matrix<FpSeries>, d: &Matrix<FpSeries>) -> Matrix<FpSeries> {
    let ctx = *a.ctx();
    Matrix::from_blocks(a, &Matrix::zeros(&ctx, a.rows(), d.cols()), &Matrix::zeros(&ctx, d.rows(), a.cols()), d)
}

/// Block-triangularizes a strictly `λ`-bounded `M` at the touching vertex `s`.
pub fn nh_decompose_finite(m: &Matrix<FpSeries>, s: usize, lambda: &SlopeProfile) -> Result<Decomposition<FpSeries>> {
    let n = m.rows();
    if !m.is_square() || lambda.len() < n {
        return Err(HaloError::DimensionMismatch("decomposition needs a square matrix and a profile covering it".into()));
    }
    if s == 0 || s >= n {
        return Err(HaloError::Invalid(format!("split {s} outside 1..{n}")));
    }
    let lam = lambda.prefix(n);
    let l = lam.values();
    let n_prec = m.t_prec();
    if !is_hodge_bounded(m, l) {
        return Err(HaloError::HypothesisFailed("matrix is not λ-Hodge bounded".into()));
    }
    if !touching_vertices(m, &lam, DEFAULT_MINOR_CAP)?.contains(&s) {
        return Err(HaloError::NotTouchingVertex(s));
    }
    let det_val = m.det()?.vt_valuation();
    if det_val != Valuation::Exact(lam.prefix_sum(n)) {
        return Err(HaloError::HodgeSumMismatch(format!(
            "v_T(det M) = {det_val:?}, sum of λ = {}",
            lam.prefix_sum(n)
        )));
    }
    let poly = newton_polygon(m)?;
    let slopes = poly.slope_list();
    if lower_left(m, s).is_zero() {
        let w = Matrix::identity(m.ctx(), n);
        let mut cert = certify(&w, m, m, s, l)?;
        cert.top_slopes_match = Some(newton_polygon(&m.block(0, s, 0, s))?.slope_list() == slopes[..s]);
        return Ok(Decomposition {
            w,
            result: m.clone(),
            split: s,
            certificates: cert,
            trace: None,
        });
    }
    let h = slopes[s - 1];
    let mut work = 2 * n_prec + 2 * lam.prefix_sum(n) + 8;
    for _ in 0..5 {
        if let Some(dec) = attempt(m, s, &lam, h, work, &slopes)? {
            return Ok(dec);
        }
        work *= 2;
    }
    Err(HaloError::PrecisionExhausted("finite decomposition did not stabilize".into()))
}

fn attempt(
    m: &Matrix<FpSeries>,
    s: usize,
    lam: &SlopeProfile,
    h: crate::polygon::Q,
    work: usize,
    slopes: &[crate::polygon::Q],
) -> Result<Option<Decomposition<FpSeries>>> {
    let n = m.rows();
    let n_prec = m.t_prec();
    let l = lam.values();
    let mw = m.retruncate(work);
    let f = mw.charpoly()?;
    let (_q, r) = match hensel_slope_factor(&f, h) {
        Ok(x) => x,
        Err(HaloError::PrecisionExhausted(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if r.len() != n - s + 1 {
        return Ok(None);
    }
    // the image of G(M) is the invariant subspace of the first s slopes
    let g = eval_reversed(&r, &mw)?;
    let sm = smith_form(&g, Some(s))?;
    if sm.diag.len() < s {
        return Ok(None);
    }
    let p1 = sm.u;
    let m1 = p1.mul(&mw)?.mul(&p1.inverse()?)?;
    let (a, _, _, d) = m1.split(s);
    let sa = smith_form(&a, None)?;
    let sd = smith_form(&d, None)?;
    let want_a: Vec<Valuation> = l[..s].iter().map(|&x| Valuation::Exact(x)).collect();
    let want_d: Vec<Valuation> = l[s..].iter().map(|&x| Valuation::Exact(x)).collect();
    if sa.diag != want_a || sd.diag != want_d {
        return Ok(None);
    }
    let w_full = block_diag(&sa.u, &sd.u).mul(&p1)?;
    let w = w_full.retruncate(n_prec);
    let result = w_full.mul(&mw)?.mul(&w_full.inverse()?)?.retruncate(n_prec);
    if !lower_left(&result, s).is_zero() {
        return Ok(None);
    }
    let mut cert = certify(&w, m, &result, s, l)?;
    let top = result.block(0, s, 0, s);
    let top_slopes = newton_polygon(&top)?.slope_list();
    cert.top_slopes_match = Some(top_slopes == slopes[..s]);
    Ok(Some(Decomposition {
        w,
        result,
        split: s,
        certificates: cert,
        trace: None,
    }))
}
