//! Lower-left elimination over the group rings `(Z/p^M)[G][[T]]`.

use super::eliminate::scaled_inverse;
use super::{certify, lower_left, Decomposition, EliminationTrace, TraceStep};
use crate::error::{HaloError, Result};
use crate::matrix::Matrix;
use crate::padic::vp_u64;
use crate::polygon::{is_hodge_bounded, is_strictly_bounded, newton_polygon, touching_vertices, SlopeProfile, DEFAULT_MINOR_CAP};
use crate::ring::{modpow_u64, FpSeries, RingDescriptor, RingElement, Valuation};
use crate::Element;
use std::sync::Arc;

/// Howell-form basis of a submodule of `(Z/p^M)^r`.
#[derive(Debug, Clone)]
struct ModuleBasis {
    rows: Vec<(usize, u32, Vec<u64>)>,
}

fn unit_inverse_mod(u: u64, p: u64, m: u32) -> u64 {
    let q = p.pow(m);
    let phi = p.pow(m - 1) * (p - 1);
    modpow_u64(u % q, phi - 1, q)
}

impl ModuleBasis {
    fn new(gens: Vec<Vec<u64>>, p: u64, m: u32, width: usize) -> Self {
        let q = p.pow(m);
        let mut pool: Vec<Vec<u64>> = gens.into_iter().filter(|g| g.iter().any(|&x| x != 0)).collect();
        let mut rows = Vec::new();
        for col in 0..width {
            let best = pool
                .iter()
                .enumerate()
                .filter(|(_, r)| r[col] != 0)
                .min_by_key(|(_, r)| vp_u64(r[col], p))
                .map(|(i, _)| i);
            let Some(idx) = best else { continue };
            let mut piv = pool.swap_remove(idx);
            let v = vp_u64(piv[col], p) as u32;
            let pv = p.pow(v);
            let inv = unit_inverse_mod(piv[col] / pv, p, m);
            for x in piv.iter_mut() {
                *x = ((*x as u128 * inv as u128) % q as u128) as u64;
            }
            for r in pool.iter_mut() {
                if r[col] != 0 {
                    let f = r[col] / pv;
                    for (x, y) in r.iter_mut().zip(&piv) {
                        *x = ((*x as u128 + (q - f) as u128 * *y as u128) % q as u128) as u64;
                    }
                }
            }
            if v > 0 {
                let s = p.pow(m - v);
                pool.push(piv.iter().map(|&y| ((y as u128 * s as u128) % q as u128) as u64).collect());
            }
            pool.retain(|r| r.iter().any(|&x| x != 0));
            rows.push((col, v, piv));
        }
        ModuleBasis { rows }
    }

    fn contains(&self, x: &[u64], p: u64, m: u32) -> bool {
        let q = p.pow(m);
        let mut x = x.to_vec();
        for (col, v, row) in &self.rows {
            let pv = p.pow(*v);
            if x[*col] % pv != 0 {
                return false;
            }
            let f = x[*col] / pv;
            if f != 0 {
                for (a, b) in x.iter_mut().zip(row) {
                    *a = ((*a as u128 + (q - f) as u128 * *b as u128) % q as u128) as u64;
                }
            }
        }
        x.iter().all(|&a| a == 0)
    }

    fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Powers `m_0^k = sum_{a+b=k} p^a I^b` of the kernel of reduction in `(Z/p^M)[G]`.
pub struct IdealPowers {
    p: u64,
    m: u32,
    powers: Vec<ModuleBasis>,
}

impl IdealPowers {
    pub fn new(desc: &RingDescriptor<u64>) -> Self {
        let p = desc.p();
        let m = desc.p_prec();
        let q = p.pow(m);
        let r = desc.group_order();
        let group = desc.group().cloned();
        let mul = |g: usize, v: &[u64]| -> Vec<u64> {
            let mut out = vec![0u64; r];
            for (h, &c) in v.iter().enumerate() {
                let gh = group.as_ref().map_or(0, |gr| gr.mul(g, h));
                out[gh] = (out[gh] + c) % q;
            }
            out
        };
        // I^b as modules, b = 0, 1, ... until zero
        let mut aug: Vec<ModuleBasis> = vec![ModuleBasis::new(
            (0..r).map(|g| (0..r).map(|h| u64::from(g == h)).collect()).collect(),
            p,
            m,
            r,
        )];
        loop {
            let last = aug.last().unwrap();
            if last.is_zero() {
                break;
            }
            let mut gens = Vec::new();
            for (_, _, v) in &last.rows {
                for g in 0..r {
                    let gv = mul(g, v);
                    gens.push(gv.iter().zip(v).map(|(a, b)| (a + q - b) % q).collect());
                }
            }
            aug.push(ModuleBasis::new(gens, p, m, r));
        }
        let aug_at = |b: usize| aug.get(b).cloned().unwrap_or(ModuleBasis { rows: vec![] });
        let mut powers = Vec::new();
        for k in 0.. {
            let mut gens = Vec::new();
            for a in 0..=k.min(m as usize - 1) {
                let pa = p.pow(a as u32);
                for (_, _, v) in aug_at(k - a).rows {
                    gens.push(v.iter().map(|&x| ((x as u128 * pa as u128) % q as u128) as u64).collect());
                }
            }
            let basis = ModuleBasis::new(gens, p, m, r);
            let done = basis.is_zero();
            powers.push(basis);
            if done {
                break;
            }
        }
        IdealPowers { p, m, powers }
    }

    /// Smallest `k` with `m^k = 0`.
    pub fn nilpotency(&self) -> usize {
        self.powers.len() - 1
    }

    /// Largest `k` with every T-layer of `x` in `m_0^k`.
    pub fn depth(&self, x: &Element) -> usize {
        let layers = x.descriptor().t_prec();
        let mut best = self.nilpotency();
        for t in 0..layers {
            let layer = x.layer(t);
            if layer.iter().all(|&c| c == 0) {
                continue;
            }
            let k = (0..self.powers.len())
                .rev()
                .find(|&k| self.powers[k].contains(layer, self.p, self.m))
                .unwrap_or(0);
            best = best.min(k);
        }
        best
    }

    pub fn matrix_depth(&self, m: &Matrix<Element>) -> usize {
        m.entries().iter().map(|x| self.depth(x)).min().unwrap_or(self.nilpotency())
    }
}

fn fp_power_valuations(base: &Matrix<FpSeries>, count: usize) -> Result<Vec<usize>> {
    let cap = base.t_prec();
    let mut acc = Matrix::identity(base.ctx(), base.rows());
    let mut out = vec![acc.min_valuation().or_cap(cap)];
    for _ in 0..count {
        acc = acc.mul(base)?;
        out.push(acc.min_valuation().or_cap(cap));
    }
    Ok(out)
}

/// Number of series terms after which every term vanishes mod `T^N`.
fn term_budget(abar_int: &Matrix<FpSeries>, dbar: &Matrix<FpSeries>, lam1: usize, lam_d: usize, alpha: usize, n_prec: usize) -> Result<usize> {
    let jcap = 4 * (n_prec + 1) * (abar_int.rows() + dbar.rows() + 1);
    let work = n_prec + (jcap + 1) * lam1.max(1) + 1;
    let e = fp_power_valuations(&dbar.retruncate(work), jcap)?;
    let fa = fp_power_valuations(&abar_int.retruncate(work), jcap)?;
    let f = |j: usize| fa[j] as i64 - (j * lam1) as i64;
    let bound = |i: usize| (lam_d + alpha) as i64 - lam1 as i64 + e[i - 1] as i64 + f(i);
    let p = (1..=jcap)
        .find(|&j| e[j] as i64 + f(j) >= 1)
        .ok_or_else(|| HaloError::GapViolation("powers of the reduction blocks do not separate".into()))?;
    let delta = e[p] as i64 + f(p);
    let mut q_max = 0i64;
    for r in 1..=p {
        let need = n_prec as i64 - bound(r);
        if need > 0 {
            q_max = q_max.max((need + delta - 1) / delta);
        }
    }
    Ok(p * (q_max as usize + 1))
}

/// Block-triangularizes `M` over a group ring at `n1`, up to `m^K` in the lower-left block.
pub fn nh_decompose_noncommutative(
    m: &Matrix<Element>,
    n1: usize,
    lambda: &SlopeProfile,
    alpha: usize,
    budget: Option<usize>,
) -> Result<Decomposition<Element>> {
    let n = m.rows();
    if !m.is_square() || lambda.len() < n {
        return Err(HaloError::DimensionMismatch("decomposition needs a square matrix and a profile covering it".into()));
    }
    if n1 == 0 || n1 >= n {
        return Err(HaloError::Invalid(format!("split {n1} outside 1..{n}")));
    }
    let desc: Arc<RingDescriptor<u64>> = m.ctx().clone();
    let n_prec = desc.t_prec();
    let lam = lambda.prefix(n);
    let l = lam.values();
    let lam1 = l[n1 - 1];
    let lam_d = l[n1];
    if alpha < lam1 {
        return Err(HaloError::HypothesisFailed(format!("α = {alpha} is below λ_n1 = {lam1}")));
    }
    if !is_hodge_bounded(m, l) {
        return Err(HaloError::HypothesisFailed("matrix is not λ-Hodge bounded".into()));
    }
    let (a0, _, c0, d0) = m.split(n1);
    if !c0.min_valuation().is_at_least(alpha) {
        return Err(HaloError::HypothesisFailed(format!("H(C,1) is below α = {alpha}")));
    }
    if !c0.reduce().is_zero() {
        return Err(HaloError::ReductionHypothesisFailed("C is not 0 modulo m".into()));
    }
    let mbar = m.reduce();
    if !touching_vertices(&mbar, &lam, DEFAULT_MINOR_CAP)?.contains(&n1) {
        return Err(HaloError::ReductionHypothesisFailed(format!("{n1} is not a touching vertex of the reduction")));
    }
    let abar = a0.reduce();
    let dbar = d0.reduce();
    if !is_strictly_bounded(&abar, &l[..n1]) {
        return Err(HaloError::ReductionHypothesisFailed("reduced top-left block is not strictly λ-Hodge bounded".into()));
    }
    let pa = newton_polygon(&abar)?;
    let pd = super::newton_lower_bound(&dbar)?;
    let a_max = pa.slope_list().last().copied();
    let d_min = pd.slope_list().first().copied();
    if let (Some(x), Some(y)) = (a_max, d_min) {
        if x >= y {
            return Err(HaloError::ReductionHypothesisFailed(format!("max slope {x} of Ā is not below min slope {y} of D̄")));
        }
    }
    let ideals = IdealPowers::new(&desc);
    let k_budget = budget.unwrap_or(desc.p_prec() as usize);

    let (abar_int, _) = scaled_inverse(&abar, &l[..n1])?;
    let terms = term_budget(&abar_int, &dbar, lam1, lam_d, alpha, n_prec)?;
    let work = n_prec + (terms + 1) * lam1;
    let wdesc = <Element as RingElement>::retruncate_ctx(&desc, work);
    // fixed special lifts A'(-i) and D(i-1)
    let abar_w = abar_int.retruncate(work);
    let dbar_w = dbar.retruncate(work);
    let mut a_lifts = Vec::with_capacity(terms);
    let mut d_lifts = Vec::with_capacity(terms);
    let mut ap = abar_w.clone();
    let mut dp = Matrix::identity(dbar_w.ctx(), dbar_w.rows());
    for _ in 0..terms {
        a_lifts.push(Matrix::<Element>::lift_from(&wdesc, &ap));
        d_lifts.push(Matrix::<Element>::lift_from(&wdesc, &dp));
        ap = ap.mul(&abar_w)?;
        dp = dp.mul(&dbar_w)?;
    }

    let (mut a, b, mut c, mut d) = m.split(n1);
    let mut x_total = Matrix::zeros(&desc, n - n1, n1);
    let mut steps = Vec::new();
    let mut k = 0;
    while !c.is_zero() && k < k_budget {
        let before = c.min_valuation();
        let (aw, cw, dw) = (a.retruncate(work), c.retruncate(work), d.retruncate(work));
        // Ã^{-1} = T^{-λ_n1} * ainv_int
        let a_red = Matrix::from_fn(&wdesc, n1, n1, |i, j| aw.get(i, j).div_t(l[i]));
        let a_red_inv = a_red.inverse()?;
        let ainv_int = Matrix::from_fn(&wdesc, n1, n1, |i, j| a_red_inv.get(i, j).mul_t(lam1 - l[j]));
        let mut sum = cw.mul(&ainv_int)?;
        sum = divide(&sum, lam1)?;
        for i in 1..=terms {
            let t = dw.mul(&d_lifts[i - 1])?.mul(&cw)?.mul(&a_lifts[i - 1])?.mul(&ainv_int)?;
            sum = sum.add(&divide(&t, (i + 1) * lam1)?)?;
        }
        let x = sum.neg().retruncate(n_prec);
        let xb = x.mul(&b)?;
        let c_next = x.mul(&a)?.add(&c)?.sub(&d.mul(&x)?)?.sub(&xb.mul(&x)?)?;
        a = a.sub(&b.mul(&x)?)?;
        d = xb.add(&d)?;
        let depth = if c_next.is_zero() {
            ideals.nilpotency()
        } else {
            if !c_next.min_valuation().is_at_least(alpha) {
                return Err(HaloError::InvariantViolation(format!("H(C',1) dropped below α at step {}", k + 1)));
            }
            ideals.matrix_depth(&c_next.div_t(alpha))
        };
        if depth < (k + 2).min(ideals.nilpotency()) {
            return Err(HaloError::InvariantViolation(format!("congruence ladder broken at step {}: depth {depth}", k + 1)));
        }
        x_total = x_total.add(&x)?;
        let after = c_next.min_valuation();
        steps.push(TraceStep {
            x,
            lower_left_before: before,
            gain: match (before, after) {
                (Valuation::Exact(u), Valuation::Exact(v)) => Some(v.saturating_sub(u)),
                _ => None,
            },
            depth: Some(depth),
        });
        c = c_next;
        k += 1;
    }
    let id_top = Matrix::identity(&desc, n1);
    let id_bot = Matrix::identity(&desc, n - n1);
    let zero = Matrix::zeros(&desc, n1, n - n1);
    let y = Matrix::from_blocks(&id_top, &zero, &x_total, &id_bot);
    let y_inv = Matrix::from_blocks(&id_top, &zero, &x_total.neg(), &id_bot);
    let result = y.mul(m)?.mul(&y_inv)?;
    let mut cert = certify(&y, m, &result, n1, l)?;
    let ll = lower_left(&result, n1);
    cert.congruence_depth = Some(if ll.is_zero() {
        ideals.nilpotency()
    } else {
        ideals.matrix_depth(&ll.div_t(alpha))
    });
    let converged_at = steps.len();
    Ok(Decomposition {
        w: y,
        result,
        split: n1,
        certificates: cert,
        trace: Some(EliminationTrace {
            iterations: steps,
            converged_at,
            step: 1,
        }),
    })
}

fn divide(m: &Matrix<Element>, k: usize) -> Result<Matrix<Element>> {
    if !m.min_valuation().is_at_least(k) {
        return Err(HaloError::InvariantViolation("series term is not divisible by its T-power".into()));
    }
    Ok(m.div_t(k))
}
