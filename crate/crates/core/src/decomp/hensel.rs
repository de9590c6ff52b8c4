//! Slope factorization of polynomials over `F_p[[T]]` by Hensel lifting.

use crate::error::{HaloError, Result};
use crate::polygon::{Polygon, Q};
use crate::ring::{modpow_u64, FpCtx, FpSeries, Valuation};

/// Polynomial in `X` with coefficients in `F_p[[T]]/T^N`, lowest degree first.
pub type SeriesPoly = Vec<FpSeries>;

pub fn poly_mul(a: &[FpSeries], b: &[FpSeries], max_deg: usize) -> SeriesPoly {
    let ctx = a[0].ctx();
    let mut out = vec![FpSeries::zero(ctx); (a.len() + b.len() - 1).min(max_deg + 1)];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j < out.len() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    out
}

/// Newton polygon of `sum f_k X^k`; vanishing coefficients are left out.
pub fn poly_polygon(f: &[FpSeries]) -> Polygon {
    let vals: Vec<Valuation> = f.iter().map(|c| c.vt_valuation()).collect();
    Polygon::from_values(&vals)
}

fn shift(c: &FpSeries, k: i64) -> Result<FpSeries> {
    if k >= 0 {
        return Ok(c.mul_t_pow(k as usize));
    }
    let m = (-k) as usize;
    if !c.vt_valuation().is_at_least(m) {
        return Err(HaloError::PrecisionExhausted("negative shift of a non-divisible series".into()));
    }
    Ok(c.div_t_pow(m))
}

/// `c(T) -> c(S^d)` modulo `S^prec`.
fn spread(c: &FpSeries, d: usize, prec: usize) -> FpSeries {
    let mut out = vec![0u64; prec];
    for (i, &x) in c.coeffs().iter().enumerate() {
        if i * d < prec {
            out[i * d] = x;
        }
    }
    FpSeries::new(c.p(), prec, &out)
}

/// Inverse of [`spread`]; exponents not divisible by `d` must vanish.
fn unspread(c: &FpSeries, d: usize, t_prec: usize) -> Result<FpSeries> {
    let mut out = vec![0u64; t_prec];
    for (i, &x) in c.coeffs().iter().enumerate() {
        if x == 0 {
            continue;
        }
        if i % d != 0 {
            return Err(HaloError::PrecisionExhausted("ramified coefficient in slope factor".into()));
        }
        if i / d < t_prec {
            out[i / d] = x;
        }
    }
    Ok(FpSeries::new(c.p(), t_prec, &out))
}

/// Rational with the least denominator in `(lo, hi)`; `hi = None` means no upper bound.
fn simplest_between(lo: Q, hi: Option<Q>) -> Q {
    for d in 1i64.. {
        let cand = Q::new((lo * Q::from(d)).floor().to_integer() + 1, d);
        if hi.map_or(true, |h| cand < h) {
            return cand;
        }
    }
    unreachable!()
}

/// Vertex separating slopes `<= h` from slopes `> h`, with its adjacent slopes.
pub fn separating_vertex(poly: &Polygon, h: Q) -> Option<(usize, Option<Q>, Option<Q>)> {
    let v = &poly.vertices;
    let slope = |i: usize, j: usize| (v[j].1 - v[i].1) / Q::from((v[j].0 - v[i].0) as i64);
    (0..v.len()).find_map(|i| {
        let left = (i > 0).then(|| slope(i - 1, i));
        let right = (i + 1 < v.len()).then(|| slope(i, i + 1));
        (left.map_or(true, |l| l <= h) && right.map_or(true, |r| r > h)).then_some((v[i].0, left, right))
    })
}

/// Factors `f = Q*R` with `Q(0) = 1`, where `Q` carries the slopes `<= h` and `R` the rest.
///
/// Coefficients that vanish mod `T^N` only bound the polygon from below; the
/// separating vertex must be certified against that bound.
pub fn hensel_slope_factor(f: &[FpSeries], h: Q) -> Result<(SeriesPoly, SeriesPoly)> {
    if f.is_empty() || !f[0].is_unit() {
        return Err(HaloError::Invalid("slope factorization needs a unit constant term".into()));
    }
    let ctx = f[0].ctx();
    let n_prec = ctx.t_prec;
    let mut f: SeriesPoly = f.to_vec();
    while f.len() > 1 && f.last().is_some_and(|c| c.is_zero()) {
        f.pop();
    }
    let lower: Vec<(usize, Option<Q>)> = f
        .iter()
        .enumerate()
        .map(|(k, c)| (k, Some(Q::from(c.vt_valuation().or_cap(n_prec) as i64))))
        .collect();
    let hull = Polygon::lower_hull(&lower);
    let (s, h_lo, h_hi) =
        separating_vertex(&hull, h).ok_or_else(|| HaloError::NoSeparatingVertex(h.to_string()))?;
    if f[s].vt_valuation().exact().is_none() {
        return Err(HaloError::NoSeparatingVertex(format!("{h}: vertex value not known mod T^{n_prec}")));
    }
    let n = f.len() - 1;
    if s == 0 {
        return Ok((vec![FpSeries::one(ctx)], f));
    }
    if s == n {
        return Ok((f, vec![FpSeries::one(ctx)]));
    }
    let hh = simplest_between(h_lo.unwrap_or(Q::from(0)), h_hi);
    let mut work = 2 * n_prec + 8;
    for _ in 0..6 {
        match factor_at(&f, s, hh, work, n_prec) {
            Ok((q, r)) => {
                let prod = poly_mul(&q, &r, n);
                if (0..=n).all(|k| prod.get(k).map_or(f[k].is_zero(), |x| x == &f[k])) {
                    return Ok((q, r));
                }
            }
            Err(HaloError::PrecisionExhausted(_)) => {}
            Err(e) => return Err(e),
        }
        work *= 2;
    }
    Err(HaloError::PrecisionExhausted("slope factorization did not stabilize".into()))
}

/// One lifting attempt: rescale `X = S^{-hd} Y` over `F_p[[S]]`, `S^d = T`, so that
/// the polynomial reduces to `u Y^s`, then lift `Y^s * u`.
fn factor_at(f: &[FpSeries], s: usize, h: Q, work: usize, out_prec: usize) -> Result<(SeriesPoly, SeriesPoly)> {
    let p = f[0].p();
    let d = *h.denom() as usize;
    let hd = *h.numer();
    let n = f.len() - 1;
    let k_prec = d * work;
    let sctx = FpCtx { p, t_prec: k_prec };
    let vs = f[s].vt_valuation().exact().expect("vertex coefficient is nonzero") as i64;
    let m = d as i64 * vs - s as i64 * hd;
    let ft: Vec<FpSeries> = f
        .iter()
        .enumerate()
        .map(|(k, c)| shift(&spread(&c.with_t_prec(work), d, k_prec), -(m + k as i64 * hd)))
        .collect::<Result<_>>()?;
    let prec_eff = (0..=n)
        .map(|k| k_prec as i64 - (m + k as i64 * hd))
        .min()
        .unwrap()
        .min(k_prec as i64);
    if prec_eff <= 0 {
        return Err(HaloError::PrecisionExhausted("rescaling consumed the precision".into()));
    }
    let prec_eff = prec_eff as usize;
    let u = ft[s].coeffs()[0];
    if u == 0 || (0..=n).any(|k| k != s && ft[k].coeffs()[0] != 0) {
        return Err(HaloError::InvariantViolation("rescaled polynomial does not reduce to a monomial".into()));
    }
    let u_inv = modpow_u64(u, p - 2, p);
    let mut a: SeriesPoly = (0..=s).map(|k| FpSeries::constant(sctx, u64::from(k == s))).collect();
    let mut b: SeriesPoly = (0..=n - s).map(|k| FpSeries::constant(sctx, if k == 0 { u } else { 0 })).collect();
    for j in 1..prec_eff {
        let prod = poly_mul(&a, &b, n);
        for k in 0..=n {
            let y = prod.get(k).map_or(0, |c| c.coeffs()[j]);
            let e = (ft[k].coeffs()[j] + p - y) % p;
            if e == 0 {
                continue;
            }
            if k < s {
                a[k] = a[k].add(&FpSeries::monomial(sctx, e * u_inv % p, j));
            } else {
                b[k - s] = b[k - s].add(&FpSeries::monomial(sctx, e, j));
            }
        }
    }
    let a: SeriesPoly = a.iter().map(|c| FpSeries::new(p, prec_eff, c.coeffs())).collect();
    // Q(X) = A(S^{hd} X) / a_0
    let (v0, unit) = a[0]
        .split_valuation()
        .ok_or_else(|| HaloError::PrecisionExhausted("constant term of the slope factor vanished".into()))?;
    let usable = prec_eff.saturating_sub(v0);
    if usable / d < out_prec {
        return Err(HaloError::PrecisionExhausted("slope factor precision below target".into()));
    }
    let unit_inv = unit.unit_inverse()?;
    let mut q = Vec::with_capacity(s + 1);
    for (k, c) in a.iter().enumerate() {
        let sc = shift(&c.mul(&unit_inv), k as i64 * hd - v0 as i64)?;
        let sc = FpSeries::new(p, usable, sc.coeffs());
        q.push(unspread(&sc, d, usable / d)?.with_t_prec(out_prec));
    }
    // R = f / Q as a power series in X, cut at degree n - s
    let mut r: SeriesPoly = Vec::with_capacity(n - s + 1);
    for k in 0..=n - s {
        let mut acc = f[k].clone();
        for i in 1..=k.min(s) {
            acc = acc.sub(&q[i].mul(&r[k - i]));
        }
        r.push(acc);
    }
    Ok((q, r))
}
