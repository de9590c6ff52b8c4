//! Newton and Hodge functions, polygons and λ-profiles.

use crate::error::{HaloError, Result};
use crate::matrix::{fp_rank, Matrix};
use crate::ring::{RingElement, Valuation};
use num_rational::Ratio;
use num_traits::Zero;

pub type Q = Ratio<i64>;

/// Lower convex hull with integer abscissae.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polygon {
    pub vertices: Vec<(usize, Q)>,
    /// Some input point was only a lower bound and was left out.
    pub partial: bool,
}

impl Polygon {
    /// Lower convex hull of the known points; `None` entries are skipped and mark the hull partial.
    pub fn lower_hull(points: &[(usize, Option<Q>)]) -> Polygon {
        let partial = points.iter().any(|(_, y)| y.is_none());
        let mut pts: Vec<(usize, Q)> = points.iter().filter_map(|(x, y)| y.map(|y| (*x, y))).collect();
        pts.sort_by_key(|(x, _)| *x);
        pts.dedup_by(|b, a| {
            if a.0 == b.0 {
                if b.1 < a.1 {
                    a.1 = b.1;
                }
                true
            } else {
                false
            }
        });
        let mut hull: Vec<(usize, Q)> = Vec::new();
        for pt in pts {
            while hull.len() >= 2 {
                let (x1, y1) = hull[hull.len() - 2];
                let (x2, y2) = hull[hull.len() - 1];
                // drop (x2,y2) if it lies on or above the segment from (x1,y1) to pt
                let lhs = (y2 - y1) * Q::from((pt.0 - x1) as i64);
                let rhs = (pt.1 - y1) * Q::from((x2 - x1) as i64);
                if lhs >= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(pt);
        }
        Polygon {
            vertices: hull,
            partial,
        }
    }

    pub fn from_values(values: &[Valuation]) -> Polygon {
        let pts: Vec<(usize, Option<Q>)> = values
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.exact().map(|x| Q::from(x as i64))))
            .collect();
        Self::lower_hull(&pts)
    }

    /// Slopes with multiplicities, in increasing order.
    pub fn slopes(&self) -> Vec<(Q, usize)> {
        self.vertices
            .windows(2)
            .map(|w| {
                let dx = w[1].0 - w[0].0;
                ((w[1].1 - w[0].1) / Q::from(dx as i64), dx)
            })
            .collect()
    }

    /// Slopes expanded by multiplicity.
    pub fn slope_list(&self) -> Vec<Q> {
        self.slopes()
            .into_iter()
            .flat_map(|(s, m)| std::iter::repeat(s).take(m))
            .collect()
    }

    pub fn is_vertex(&self, x: usize) -> bool {
        self.vertices.iter().any(|(vx, _)| *vx == x)
    }

    /// Value of the polygon at integer `x` inside its range.
    pub fn value_at(&self, x: usize) -> Option<Q> {
        for w in self.vertices.windows(2) {
            if w[0].0 <= x && x <= w[1].0 {
                let t = Q::from((x - w[0].0) as i64) / Q::from((w[1].0 - w[0].0) as i64);
                return Some(w[0].1 + (w[1].1 - w[0].1) * t);
            }
        }
        self.vertices.iter().find(|(vx, _)| *vx == x).map(|(_, y)| *y)
    }
}

/// Nondecreasing integer profile `λ_1 <= λ_2 <= ...` (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeProfile {
    values: Vec<usize>,
}

impl SlopeProfile {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(HaloError::Invalid("slope profile must be nondecreasing".into()));
        }
        Ok(SlopeProfile { values })
    }

    /// `λ_n = floor(n/S) - floor(n/(pS))` for `n = 0..len`.
    pub fn block_profile(s: usize, p: usize, len: usize) -> Self {
        SlopeProfile {
            values: (0..len).map(|n| n / s - n / (p * s)).collect(),
        }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn get(&self, i: usize) -> usize {
        self.values[i]
    }
    /// `λ_1 + ... + λ_k`.
    pub fn prefix_sum(&self, k: usize) -> usize {
        self.values[..k].iter().sum()
    }
    pub fn prefix(&self, k: usize) -> SlopeProfile {
        SlopeProfile {
            values: self.values[..k].to_vec(),
        }
    }
    pub fn suffix(&self, k: usize) -> SlopeProfile {
        SlopeProfile {
            values: self.values[k..].to_vec(),
        }
    }
}

/// `N(M,k)`: valuation of the sum of principal `k x k` minors.
pub fn newton_function<R: RingElement>(m: &Matrix<R>, k: usize) -> Result<Valuation> {
    if !m.is_square() || k > m.rows() {
        return Err(HaloError::DimensionMismatch(format!("k = {k} for a {}x{} matrix", m.rows(), m.cols())));
    }
    if k == 0 {
        return Ok(Valuation::Exact(0));
    }
    Ok(m.charpoly()?[k].vt())
}

/// `N(M,k)` for all `k = 0..=n`.
pub fn newton_values<R: RingElement>(m: &Matrix<R>) -> Result<Vec<Valuation>> {
    if !m.is_square() {
        return Err(HaloError::DimensionMismatch("Newton function of a non-square matrix".into()));
    }
    let c = m.charpoly()?;
    Ok(c.iter()
        .enumerate()
        .map(|(k, x)| if k == 0 { Valuation::Exact(0) } else { x.vt() })
        .collect())
}

pub const DEFAULT_MINOR_CAP: u128 = 4900;

pub fn binomial(n: usize, k: usize) -> u128 {
    crate::padic::binom_u128(n as u64, k as u64)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    subsets(n, k)
}

pub fn submatrix<R: RingElement>(m: &Matrix<R>, rows: &[usize], cols: &[usize]) -> Matrix<R> {
    Matrix::from_fn(m.ctx(), rows.len(), cols.len(), |i, j| m.get(rows[i], cols[j]).clone())
}

/// `H(M,k)`: minimal valuation of a `k x k` minor.
pub fn hodge_function<R: RingElement>(m: &Matrix<R>, k: usize, cap: u128) -> Result<Valuation> {
    let (r, c) = (m.rows(), m.cols());
    if k > r.min(c) {
        return Err(HaloError::DimensionMismatch(format!("k = {k} for a {r}x{c} matrix")));
    }
    match k {
        0 => return Ok(Valuation::Exact(0)),
        1 => return Ok(m.min_valuation()),
        _ => {}
    }
    if !R::commutative(m.ctx()) {
        return Err(HaloError::MinorOrderUnsupported(k));
    }
    let needed = binomial(r, k) * binomial(c, k);
    if needed > cap {
        return Err(HaloError::SizeCapExceeded { needed, cap });
    }
    let rs = subsets(r, k);
    let cs = subsets(c, k);
    let mut best = Valuation::AtLeastPrecision;
    for ri in &rs {
        for ci in &cs {
            let v = submatrix(m, ri, ci).det()?.vt();
            best = best.min(v);
            if best == Valuation::Exact(0) {
                return Ok(best);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaFlags {
    pub hodge_bounded: bool,
    pub strictly_hodge_bounded: bool,
    pub lambda_stable: bool,
}

pub fn is_hodge_bounded<R: RingElement>(m: &Matrix<R>, lambda: &[usize]) -> bool {
    (0..m.rows()).all(|i| m.row_valuation(i).is_at_least(lambda[i]))
}

pub fn is_lambda_stable<R: RingElement>(m: &Matrix<R>, lambda: &[usize]) -> bool {
    (0..m.rows()).all(|i| {
        (0..m.cols()).all(|j| lambda[i] <= lambda[j] || m.get(i, j).vt().is_at_least(lambda[i] - lambda[j]))
    })
}

/// `D(λ)^-1 M` is invertible, decided on the residue field.
pub fn is_strictly_bounded<R: RingElement>(m: &Matrix<R>, lambda: &[usize]) -> bool {
    if !m.is_square() || !is_hodge_bounded(m, lambda) {
        return false;
    }
    let n = m.t_prec();
    if lambda.iter().any(|&l| l >= n) {
        return false;
    }
    let p = R::prime_of(m.ctx());
    let res: Vec<Vec<u64>> = (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| m.get(i, j).div_t(lambda[i]).reduce().coeffs()[0])
                .collect()
        })
        .collect();
    fp_rank(&res, p) == m.rows()
}

pub fn lambda_check<R: RingElement>(m: &Matrix<R>, lambda: &SlopeProfile) -> Result<LambdaFlags> {
    if lambda.len() != m.rows() {
        return Err(HaloError::DimensionMismatch(format!(
            "profile of length {} for {} rows",
            lambda.len(),
            m.rows()
        )));
    }
    let l = lambda.values();
    Ok(LambdaFlags {
        hodge_bounded: is_hodge_bounded(m, l),
        strictly_hodge_bounded: is_strictly_bounded(m, l),
        lambda_stable: m.is_square() && is_lambda_stable(m, l),
    })
}

/// Newton polygon of a square matrix.
pub fn newton_polygon<R: RingElement>(m: &Matrix<R>) -> Result<Polygon> {
    Ok(Polygon::from_values(&newton_values(m)?))
}

/// Hodge polygon of a matrix by exhaustive minors.
pub fn hodge_polygon<R: RingElement>(m: &Matrix<R>, cap: u128) -> Result<Polygon> {
    let n = m.rows().min(m.cols());
    let vals = (0..=n).map(|k| hodge_function(m, k, cap)).collect::<Result<Vec<_>>>()?;
    Ok(Polygon::from_values(&vals))
}

/// Newton polygon of `sum c_k X^k` from coefficient valuations.
pub fn series_polygon<R: RingElement>(coeffs: &[R]) -> Polygon {
    let vals: Vec<Valuation> = coeffs.iter().map(|c| c.vt()).collect();
    Polygon::from_values(&vals)
}

/// Indices `k` where `(k, N(M,k))` is a Newton vertex lying on the Hodge polygon.
pub fn touching_vertices<R: RingElement>(m: &Matrix<R>, lambda: &SlopeProfile, cap: u128) -> Result<Vec<usize>> {
    if !m.is_square() || lambda.len() != m.rows() {
        return Err(HaloError::DimensionMismatch("touching vertices need a square matrix and matching profile".into()));
    }
    let nv = newton_values(m)?;
    let poly = Polygon::from_values(&nv);
    let bounded = is_hodge_bounded(m, lambda.values());
    let mut out = Vec::new();
    for (k, v) in nv.iter().enumerate() {
        let Some(val) = v.exact() else { continue };
        if !poly.is_vertex(k) {
            continue;
        }
        if k == 0 || (bounded && val == lambda.prefix_sum(k)) {
            out.push(k);
            continue;
        }
        if hodge_function(m, k, cap)? == Valuation::Exact(val) {
            out.push(k);
        }
    }
    Ok(out)
}

pub fn q_to_parts(q: &Q) -> (i64, i64) {
    (*q.numer(), *q.denom())
}

pub fn q_is_zero(q: &Q) -> bool {
    q.is_zero()
}
