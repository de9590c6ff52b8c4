//! Newton–Hodge decomposition of a finite window of an infinite matrix.

use super::eliminate::{eliminate_lower_left, scaled_inverse};
use super::finite::nh_decompose_finite;
use super::{certify, Decomposition, EliminationTrace, TraceStep};
use crate::error::{HaloError, Result};
use crate::matrix::Matrix;
use crate::polygon::{index_subsets, newton_polygon, submatrix, SlopeProfile, DEFAULT_MINOR_CAP};
use crate::ring::{FpSeries, Valuation};

/// Smallest `ℓ > s_2` with `λ_ℓ > sum_{i<=s_2} λ_i` lying strictly above the Hodge line of slope `λ_{s_2}`.
///
/// `None` when the profile is too short to decide.
pub fn ell_m(lambda: &SlopeProfile, s2: usize) -> Option<usize> {
    let h2 = lambda.prefix_sum(s2) as i128;
    let slope = lambda.get(s2 - 1) as i128;
    (s2 + 1..=lambda.len()).find(|&l| {
        let hl = lambda.prefix_sum(l) as i128;
        lambda.get(l - 1) as i128 > h2 && hl > h2 + slope * (l - s2) as i128
    })
}

/// Permutation bringing a principal `s`-minor with determinant valuation `sum λ` to the front.
fn front_permutation(m: &Matrix<FpSeries>, lambda: &SlopeProfile, s: usize) -> Result<Vec<usize>> {
    let n = m.rows();
    let target = Valuation::Exact(lambda.prefix_sum(s));
    let ls = lambda.get(s - 1);
    let m1 = (1..=n).find(|&j| lambda.get(j - 1) == ls).unwrap();
    let m2 = (1..=n).rev().find(|&j| lambda.get(j - 1) == ls).unwrap();
    let free: Vec<usize> = (m1 - 1..m2).collect();
    let need = s + 1 - m1;
    let count = crate::polygon::binomial(free.len(), need);
    if count > DEFAULT_MINOR_CAP {
        return Err(HaloError::SizeCapExceeded {
            needed: count,
            cap: DEFAULT_MINOR_CAP,
        });
    }
    for pick in index_subsets(free.len(), need) {
        let mut idx: Vec<usize> = (0..m1 - 1).collect();
        idx.extend(pick.iter().map(|&k| free[k]));
        if submatrix(m, &idx, &idx).det()?.vt_valuation() == target {
            let mut perm = idx.clone();
            perm.extend((0..n).filter(|i| !idx.contains(i)));
            return Ok(perm);
        }
    }
    Err(HaloError::HodgeSumMismatch(format!("no principal {s}-minor has valuation {}", lambda.prefix_sum(s))))
}

fn permutation_matrix(ctx: &crate::ring::FpCtx, perm: &[usize]) -> Matrix<FpSeries> {
    let n = perm.len();
    Matrix::from_fn(ctx, n, n, |i, j| FpSeries::constant(*ctx, u64::from(perm[i] == j)))
}

fn embed_top_left(ctx: &crate::ring::FpCtx, p: &Matrix<FpSeries>, n: usize) -> Matrix<FpSeries> {
    let mut out = Matrix::identity(ctx, n);
    out.set_block(0, 0, p);
    out
}

/// Block-triangularizes the window `m` at the first nonzero vertex `s_1` of `omega`.
///
/// `omega` lists touching vertices inside the window, starting at 0.
pub fn nh_decompose_infinite_truncated(
    m: &Matrix<FpSeries>,
    lambda: &SlopeProfile,
    omega: &[usize],
) -> Result<Decomposition<FpSeries>> {
    let window = m.rows();
    if !m.is_square() || lambda.len() < window {
        return Err(HaloError::DimensionMismatch("window needs a square matrix and a profile covering it".into()));
    }
    let mut om: Vec<usize> = omega.iter().copied().filter(|&x| x > 0).collect();
    om.sort_unstable();
    om.dedup();
    if om.len() < 2 {
        return Err(HaloError::Invalid("need at least two positive touching vertices".into()));
    }
    let s1 = om[0];
    // λ_{s_1} < λ_{s_2} after dropping vertices on the same λ level
    let s2 = *om
        .iter()
        .find(|&&x| lambda.get(x - 1) > lambda.get(s1 - 1))
        .ok_or_else(|| HaloError::Invalid("λ does not increase along the touching vertices".into()))?;
    let ell = ell_m(lambda, s2).ok_or(HaloError::WindowTooSmall {
        required: lambda.len() + 1,
        have: window,
    })?;
    if window < ell {
        return Err(HaloError::WindowTooSmall { required: ell, have: window });
    }
    let s = *om.iter().find(|&&x| x >= ell && x <= window).ok_or(HaloError::WindowTooSmall {
        required: om.iter().copied().find(|&x| x >= ell).unwrap_or(ell),
        have: window,
    })?;
    let dec = decompose_window(m, lambda, s1, s)?;
    let mut dec = dec;
    // stability against a window one λ-step smaller
    let ls = lambda.get(window - 1);
    let smaller = (1..window).rev().find(|&w| lambda.get(w - 1) < ls);
    let stable = match smaller {
        Some(w0) if w0 >= s && w0 >= ell => {
            let sub = m.block(0, w0, 0, w0);
            let d0 = decompose_window(&sub, lambda, s1, s)?;
            let c_big = dec.result.block(0, s1, 0, s1).charpoly()?;
            let c_small = d0.result.block(0, s1, 0, s1).charpoly()?;
            Some(c_big == c_small)
        }
        _ => None,
    };
    dec.certificates.window_stable = stable;
    Ok(dec)
}

fn decompose_window(m: &Matrix<FpSeries>, lambda: &SlopeProfile, s1: usize, s: usize) -> Result<Decomposition<FpSeries>> {
    let n = m.rows();
    let ctx = *m.ctx();
    let lam = lambda.prefix(n);
    let l = lam.values();
    // Q_0: permutation, then the finite decomposition of the leading s x s corner
    let perm = front_permutation(m, &lam, s)?;
    let mp = m.permute(&perm);
    let corner = mp.block(0, s, 0, s);
    let fin = nh_decompose_finite(&corner, s1, &lam.prefix(s))?;
    let q0 = embed_top_left(&ctx, &fin.w, n).mul(&permutation_matrix(&ctx, &perm))?;
    let q0_inv = q0.inverse()?;
    let mut w = q0;
    let mut cur = w.mul(m)?.mul(&q0_inv)?;
    let delta = l[s - 1] - l[s1 - 1];
    let lam_s = l[s - 1];
    let mut steps = Vec::new();
    let mut k = 0;
    loop {
        let c_all = cur.block(s1, n, 0, s1);
        if c_all.is_zero() {
            break;
        }
        if k > m.t_prec() + 1 {
            return Err(HaloError::IterationBudgetExceeded(k));
        }
        let far = cur.block(s, n, 0, s1);
        let hc = far.min_valuation();
        if !hc.is_at_least(lam_s + k * delta) {
            return Err(HaloError::InvariantViolation(format!("ladder broken at step {k}: H = {hc:?}")));
        }
        // P_1 clears rows s.. of the first s_1 columns
        let (ainv, lmax) = scaled_inverse(&cur.block(0, s1, 0, s1), &l[..s1])?;
        let prod = far.mul(&ainv)?;
        if !prod.min_valuation().is_at_least(lmax) {
            return Err(HaloError::InvariantViolation("M31 M11^-1 is not integral".into()));
        }
        let z = prod.div_t(lmax);
        let mut p1 = Matrix::identity(&ctx, n);
        p1.set_block(s, 0, &z.neg());
        let mut p1_inv = Matrix::identity(&ctx, n);
        p1_inv.set_block(s, 0, &z);
        let mid = p1.mul(&cur)?.mul(&p1_inv)?;
        // P_2 eliminates inside the leading s x s corner
        let (x, _) = eliminate_lower_left(&mid.block(0, s, 0, s), s1, &lam.prefix(s))?;
        let mut p2 = Matrix::identity(&ctx, n);
        p2.set_block(s1, 0, &x);
        let mut p2_inv = Matrix::identity(&ctx, n);
        p2_inv.set_block(s1, 0, &x.neg());
        let next = p2.mul(&mid)?.mul(&p2_inv)?;
        let q = p2.mul(&p1)?;
        let hn = next.block(s1, n, 0, s1).min_valuation();
        let before = c_all.min_valuation();
        steps.push(TraceStep {
            x: q.block(s1, n, 0, s1),
            lower_left_before: before,
            gain: match (before, hn) {
                (Valuation::Exact(a), Valuation::Exact(b)) => Some(b.saturating_sub(a)),
                _ => None,
            },
            depth: None,
        });
        w = q.mul(&w)?;
        cur = next;
        k += 1;
    }
    let result = w.mul(m)?.mul(&w.inverse()?)?;
    let mut cert = certify(&w, m, &result, s1, l)?;
    let top = newton_polygon(&result.block(0, s1, 0, s1))?.slope_list();
    let all = newton_polygon(m)?.slope_list();
    cert.top_slopes_match = Some(all.len() >= s1 && top == all[..s1]);
    let converged_at = steps.len();
    Ok(Decomposition {
        w,
        result,
        split: s1,
        certificates: cert,
        trace: Some(EliminationTrace {
            iterations: steps,
            converged_at,
            step: delta,
        }),
    })
}
