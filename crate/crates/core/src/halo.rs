//! Compact operator assemblies, characteristic series and slope scans over the weight annulus.

use crate::error::{HaloError, Result};
use crate::mahler::{in_pt_power, mahler_matrix, Basis, CharacterSpec, ModifiedEntry, MonoidElement};
use crate::matrix::Matrix;
use crate::polygon::{Polygon, Q};
use crate::ring::{vp_word, RingDescriptor, TruncatedRingElement};
use crate::word::Word;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// `s x s` grid of cells, each a list of monoid elements `[[pO, O], [pO, O^x]]`.
#[derive(Debug, Clone)]
pub struct UpAssembly {
    pub p: u64,
    pub s: usize,
    pub character: CharacterSpec,
    pub blocks: Vec<Vec<Vec<MonoidElement>>>,
}

impl UpAssembly {
    pub fn new(p: u64, character: CharacterSpec, blocks: Vec<Vec<Vec<MonoidElement>>>) -> Result<Self> {
        let asm = UpAssembly {
            p,
            s: blocks.len(),
            character,
            blocks,
        };
        asm.validate()?;
        Ok(asm)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, s) = (self.p, self.s);
        if s == 0 || self.blocks.iter().any(|r| r.len() != s) {
            return Err(HaloError::StructureViolation("block grid must be square and nonempty".into()));
        }
        let pb = BigInt::from(p);
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                for d in cell {
                    let ok = (&d.a % &pb).is_zero() && (&d.c % &pb).is_zero() && !(&d.d % &pb).is_zero();
                    if !ok || d.det().is_zero() {
                        return Err(HaloError::StructureViolation(format!(
                            "cell ({i},{j}) holds [[{}, {}], [{}, {}]], outside [[pO, O], [pO, O^x]]",
                            d.a, d.b, d.c, d.d
                        )));
                    }
                }
            }
        }
        for i in 0..s {
            let row: usize = self.blocks[i].iter().map(Vec::len).sum();
            let col: usize = self.blocks.iter().map(|r| r[i].len()).sum();
            if row as u64 != p || col as u64 != p {
                return Err(HaloError::StructureViolation(format!(
                    "block row {i} has {row} and block column {i} has {col} elements, need {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn weight_profile(&self) -> WeightProfile {
        WeightProfile {
            p: self.p,
            blocks: vec![self.s],
        }
    }
}

/// Profile of a product of single-place assemblies: a basis vector of degrees `(d_i)`
/// has `λ = Σ (d_i - ⌊d_i/p⌋)`, with multiplicity `Π s_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightProfile {
    pub p: u64,
    pub blocks: Vec<usize>,
}

impl WeightProfile {
    pub fn single(s: usize, p: u64) -> Self {
        WeightProfile { p, blocks: vec![s] }
    }

    fn lambda_of_degree(&self, d: usize) -> usize {
        d - d / self.p as usize
    }

    /// The `len` smallest values of the profile, nondecreasing.
    pub fn sorted(&self, len: usize) -> Vec<usize> {
        let mut bound = 4;
        loop {
            // λ(d) <= bound forces d <= 2·bound + 1
            let mut counts: BTreeMap<usize, usize> = BTreeMap::from([(0, 1)]);
            for &s in &self.blocks {
                let mut next = BTreeMap::new();
                for (v, c) in &counts {
                    for d in 0..=2 * bound + 1 {
                        let w = v + self.lambda_of_degree(d);
                        if w <= bound {
                            *next.entry(w).or_insert(0) += c * s;
                        }
                    }
                }
                counts = next;
            }
            let total: usize = counts.values().sum();
            if total >= len {
                return counts
                    .iter()
                    .flat_map(|(v, c)| std::iter::repeat(*v).take(*c))
                    .take(len)
                    .collect();
            }
            bound *= 2;
        }
    }

    /// `μ_n`: sum of the `n` smallest values.
    pub fn mu(&self, n: usize) -> usize {
        self.sorted(n).iter().sum()
    }

    pub fn mu_sequence(&self, len: usize) -> Vec<usize> {
        let v = self.sorted(len);
        let mut out = Vec::with_capacity(len + 1);
        let mut acc = 0;
        out.push(0);
        for x in v {
            acc += x;
            out.push(acc);
        }
        out
    }
}

/// Distribution-side operator in the plain basis, with the data of its modified basis.
#[derive(Debug, Clone)]
pub struct AssembledOperator<W: Word = u64> {
    /// Transposed plain-basis matrix; the modified entry `(i, j)` is `T^{deg_i - deg_j}` times it.
    pub plain: Matrix<TruncatedRingElement<W>>,
    pub degrees: Vec<usize>,
    /// `λ` of each basis vector.
    pub lambda: Vec<usize>,
    /// Smallest `λ` among basis vectors left out by the truncation.
    pub next_lambda: usize,
    pub profile: WeightProfile,
    /// Entries whose compactness bound lies beyond the working precision.
    pub unverified: usize,
}

impl<W: Word> AssembledOperator<W> {
    pub fn dim(&self) -> usize {
        self.plain.rows()
    }

    pub fn modified_entry(&self, i: usize, j: usize) -> ModifiedEntry<W> {
        ModifiedEntry {
            value: self.plain.get(i, j).clone(),
            shift: self.degrees[i] as i64 - self.degrees[j] as i64,
        }
    }

    /// Checks that row `i` of the modified matrix lies in `(p,T)^{λ_i}`.
    fn check_compactness(&mut self) -> Result<()> {
        self.unverified = 0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let need = self.lambda[i] as i64 - (self.degrees[i] as i64 - self.degrees[j] as i64);
                if need <= 0 {
                    continue;
                }
                match in_pt_power(self.plain.get(i, j), need as usize) {
                    Some(true) => {}
                    Some(false) => {
                        return Err(HaloError::InvariantViolation(format!(
                            "entry ({i},{j}) breaks the compactness bound {}",
                            self.lambda[i]
                        )))
                    }
                    None => self.unverified += 1,
                }
            }
        }
        Ok(())
    }

    /// Operator on the tensor product of the two underlying spaces.
    pub fn kron(&self, o: &Self) -> Result<Self> {
        if self.profile.p != o.profile.p {
            return Err(HaloError::Invalid("places must share p".into()));
        }
        let n2 = o.dim();
        let idx = |i: usize| (i / n2, i % n2);
        let dim = self.dim() * n2;
        let mut profile = self.profile.clone();
        profile.blocks.extend(&o.profile.blocks);
        let mut out = AssembledOperator {
            plain: self.plain.kron(&o.plain),
            degrees: (0..dim).map(|i| self.degrees[idx(i).0] + o.degrees[idx(i).1]).collect(),
            lambda: (0..dim).map(|i| self.lambda[idx(i).0] + o.lambda[idx(i).1]).collect(),
            next_lambda: self.next_lambda.min(o.next_lambda),
            profile,
            unverified: 0,
        };
        out.check_compactness()?;
        Ok(out)
    }

    /// Basis order with the top-degree layer last, the count kept, and that layer's least weight.
    fn top_layer_last(&self) -> (Vec<usize>, usize, usize) {
        let top = *self.degrees.iter().max().unwrap_or(&0);
        let (mut order, last): (Vec<usize>, Vec<usize>) = (0..self.dim()).partition(|&i| self.degrees[i] < top);
        let dropped = last.iter().map(|&i| self.lambda[i]).min().unwrap_or(usize::MAX);
        let kept = order.len();
        order.extend(last);
        (order, kept, dropped)
    }
}

/// Builds the `(s·size) x (s·size)` operator; basis vector `(degree m, block k)` sits at `m·s + k`.
pub fn assemble_up_matrix<W: Word>(
    asm: &UpAssembly,
    desc: &Arc<RingDescriptor<W>>,
    size: usize,
) -> Result<AssembledOperator<W>> {
    asm.validate()?;
    if desc.p() != asm.p {
        return Err(HaloError::Invalid("assembly and ring disagree on p".into()));
    }
    let s = asm.s;
    let dim = s * size;
    let mut plain: Matrix<TruncatedRingElement<W>> = Matrix::zeros(desc, dim, dim);
    for (i, row) in asm.blocks.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            for d in cell {
                let mm = mahler_matrix(d, &asm.character, desc, size, Basis::Plain)?;
                // block (i, j) gets the transpose
                for m in 0..size {
                    for n in 0..size {
                        let (r, c) = (m * s + i, n * s + j);
                        let v = plain.get(r, c).add(mm.plain.get(n, m));
                        plain.set(r, c, v);
                    }
                }
            }
        }
    }
    let p = asm.p as usize;
    let mut op = AssembledOperator {
        plain,
        degrees: (0..dim).map(|g| g / s).collect(),
        lambda: (0..dim).map(|g| g / s - g / (p * s)).collect(),
        next_lambda: size - size / p,
        profile: asm.weight_profile(),
        unverified: 0,
    };
    op.check_compactness()?;
    Ok(op)
}

/// `det(I - XU) = Σ c_n X^n` up to `X^{n_terms}`.
#[derive(Debug, Clone)]
pub struct CharSeries<W: Word = u64> {
    pub coeffs: Vec<TruncatedRingElement<W>>,
    /// `c_n` agrees with the untruncated operator modulo `(p,T)^{certified[n]}`.
    pub certified: Vec<Option<usize>>,
    /// Profile bounding the coefficients past `n_terms`; `None` treats the series as a polynomial.
    pub profile: Option<WeightProfile>,
}

impl<W: Word> CharSeries<W> {
    pub fn n_terms(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Builds a series from explicit coefficients, read as a polynomial.
    pub fn from_coeffs(coeffs: Vec<TruncatedRingElement<W>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0] != TruncatedRingElement::one(coeffs[0].descriptor()) {
            return Err(HaloError::Invalid("c_0 must be 1".into()));
        }
        let certified = vec![None; coeffs.len()];
        Ok(CharSeries {
            coeffs,
            certified,
            profile: None,
        })
    }

    /// `b_{n,m}`: coefficient of `T^m` in `c_n`.
    pub fn b(&self, n: usize, m: usize) -> &W {
        self.coeffs[n].scalar_coeff(m)
    }

    fn desc(&self) -> &Arc<RingDescriptor<W>> {
        self.coeffs[0].descriptor()
    }
}

/// Characteristic series with a tail certificate: dropping the top basis layer moves each
/// `c_n` by an element of `(p,T)^{μ_{n-1} + λ}`, with `λ` the least weight of that layer.
pub fn char_series<W: Word>(op: &AssembledOperator<W>, n_terms: usize) -> Result<CharSeries<W>> {
    if 2 * n_terms > op.dim() {
        return Err(HaloError::Invalid(format!(
            "{n_terms} terms need an operator of size at least {}",
            2 * n_terms
        )));
    }
    let (order, kept, dropped) = op.top_layer_last();
    let permuted = Matrix::from_fn(op.plain.ctx(), order.len(), order.len(), |i, j| {
        op.plain.get(order[i], order[j]).clone()
    });
    let mut both = permuted.charpoly_truncated_leading(n_terms, &[op.dim(), kept])?;
    let coarse = both.pop().expect("two sizes");
    let coeffs = both.pop().expect("two sizes");
    let mu = op.profile.mu_sequence(n_terms);
    let mut certified = vec![None; n_terms + 1];
    for n in 0..=n_terms {
        let prec_dropped = if n == 0 { usize::MAX } else { mu[n - 1] + dropped };
        let diff = coeffs[n].sub(&coarse[n]);
        if !monomials_at_least(&diff, prec_dropped) {
            return Err(HaloError::TailUnstable(n));
        }
        certified[n] = if n == 0 { None } else { Some(mu[n - 1] + op.next_lambda) };
    }
    Ok(CharSeries {
        coeffs,
        certified,
        profile: Some(op.profile.clone()),
    })
}

/// Every visible monomial `a_t T^t` has `t + v_p(a_t) >= k`.
fn monomials_at_least<W: Word>(x: &TruncatedRingElement<W>, k: usize) -> bool {
    let d = x.descriptor();
    (0..d.t_prec()).all(|t| {
        let c = x.scalar_coeff(t);
        c.is_zero() || t + vp_word(c, d.p()) >= k
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoefficientStatus {
    pub n: usize,
    pub mu: usize,
    pub passed: bool,
    /// All `m` with a positive bound were inside the working precision.
    pub complete: bool,
    /// `(m, v_p(b_{n,m}))` of the first failure.
    pub violation: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoefficientBoundReport {
    pub statuses: Vec<CoefficientStatus>,
    /// `n` with `b_{n,μ_n}` a unit.
    pub tight: Vec<usize>,
}

impl CoefficientBoundReport {
    pub fn passed(&self) -> bool {
        self.statuses.iter().all(|s| s.passed)
    }
}

/// Checks `v_p(b_{n,m}) >= max(μ_n - m, 0)` for every visible `b_{n,m}`.
pub fn coefficient_bound_check<W: Word>(cs: &CharSeries<W>, mu: &[usize]) -> CoefficientBoundReport {
    let desc = cs.desc();
    let (p, m_prec, n_prec) = (desc.p(), desc.p_prec() as usize, desc.t_prec());
    let mut statuses = Vec::new();
    let mut tight = Vec::new();
    for n in 0..=cs.n_terms().min(mu.len().saturating_sub(1)) {
        let mu_n = mu[n];
        let mut violation = None;
        for m in 0..mu_n.min(n_prec) {
            let b = cs.b(n, m);
            if !b.is_zero() && vp_word(b, p) < mu_n - m {
                violation = Some((m, vp_word(b, p)));
                break;
            }
        }
        let complete = mu_n <= n_prec && mu_n <= m_prec;
        if mu_n < n_prec && vp_word(cs.b(n, mu_n), p) == 0 {
            tight.push(n);
        }
        statuses.push(CoefficientStatus {
            n,
            mu: mu_n,
            passed: violation.is_none(),
            complete,
            violation,
        });
    }
    CoefficientBoundReport { statuses, tight }
}

/// Valuation of `c_n(t)` for `v_p(t) = v_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecializedValue {
    pub n: usize,
    /// Minimum over visible terms, when it lies below the precision cap.
    pub value: Option<Q>,
    /// Certified lower bound.
    pub lower_bound: Q,
    /// The minimum is attained by at least two terms.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlopeSegment {
    /// Slope indices `start..end` (1-based, inclusive start, exclusive end).
    pub start: usize,
    pub end: usize,
    pub slope: Q,
    /// The segment is determined by unambiguous certified values.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Specialization {
    pub v_t: Q,
    pub values: Vec<SpecializedValue>,
    pub segments: Vec<SlopeSegment>,
}

impl Specialization {
    /// Slope at index `i` (1-based) with its certification flag.
    pub fn slope(&self, i: usize) -> Option<(Q, bool)> {
        self.segments
            .iter()
            .find(|s| s.start <= i && i < s.end)
            .map(|s| (s.slope, s.certified))
    }

    pub fn slope_list(&self) -> Vec<Q> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat(s.slope).take(s.end - s.start))
            .collect()
    }
}

fn q(n: usize) -> Q {
    Q::from(n as i64)
}

/// Generic valuations of `c_n` at `v_p(T) = v_t` and the lower hull they span.
pub fn specialize_slopes<W: Word>(cs: &CharSeries<W>, v_t: Q) -> Result<Specialization> {
    if v_t <= Q::zero() || v_t >= Q::from(1) {
        return Err(HaloError::Invalid(format!("v_t = {v_t} must lie in (0, 1)")));
    }
    let desc = cs.desc();
    let (p, m_prec, n_prec) = (desc.p(), desc.p_prec() as usize, desc.t_prec());
    let vis_cap = q(m_prec).min(q(n_prec) * v_t);
    let mut values = Vec::new();
    for n in 0..=cs.n_terms() {
        let mut cap = vis_cap;
        if let Some(c) = cs.certified[n] {
            cap = cap.min(q(c) * v_t);
        }
        let mut best: Option<Q> = None;
        let mut count = 0;
        for m in 0..n_prec {
            let b = cs.b(n, m);
            if b.is_zero() {
                continue;
            }
            let v = q(vp_word(b, p)) + q(m) * v_t;
            match best {
                Some(x) if v > x => {}
                Some(x) if v == x => count += 1,
                _ => {
                    best = Some(v);
                    count = 1;
                }
            }
        }
        let mut prior = Q::zero();
        if let Some(prof) = &cs.profile {
            prior = q(prof.mu(n)) * v_t;
        }
        let (value, lower_bound, ambiguous) = match best {
            Some(v) if v < cap => (Some(v), v, count > 1),
            _ => (None, cap.max(prior), false),
        };
        values.push(SpecializedValue {
            n,
            value,
            lower_bound,
            ambiguous,
        });
    }
    let pts: Vec<(usize, Option<Q>)> = values.iter().map(|v| (v.n, v.value)).collect();
    let hull = Polygon::lower_hull(&pts);
    let mut segments = Vec::new();
    for w in hull.vertices.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        let slope = (y2 - y1) / q(x2 - x1);
        let line = |x: usize| y1 + slope * (q(x) - q(x1));
        let endpoints_ok = !values[x1].ambiguous && !values[x2].ambiguous;
        let others_ok = values
            .iter()
            .filter(|v| v.value.is_none() || v.ambiguous)
            .all(|v| v.lower_bound >= line(v.n));
        let tail_ok = match &cs.profile {
            None => true,
            Some(prof) => tail_above_line(prof, cs.n_terms(), v_t, &line, slope),
        };
        segments.push(SlopeSegment {
            start: x1 + 1,
            end: x2 + 1,
            slope,
            certified: endpoints_ok && others_ok && tail_ok,
        });
    }
    Ok(Specialization { v_t, values, segments })
}

/// `μ_x v_t` stays on or above the line for every `x > last`.
fn tail_above_line(prof: &WeightProfile, last: usize, v_t: Q, line: &dyn Fn(usize) -> Q, slope: Q) -> bool {
    let mut len = 2 * last + 8;
    loop {
        let lam = prof.sorted(len);
        let mut mu = lam[..last].iter().sum::<usize>();
        for (x, &l) in lam.iter().enumerate().skip(last) {
            // μ_{x+1} = μ_x + λ_x
            mu += l;
            if q(mu) * v_t < line(x + 1) {
                return false;
            }
            if q(l) * v_t >= slope {
                return true;
            }
        }
        len *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    /// slope / v_t is constant, equal to `(p-1)·level`.
    Minus { level: Q },
    /// slope / v_t stays inside `((p-1)l, (p-1)(l+2))`, or `(0, p-1)` at `l = 0`.
    Plus { l: usize },
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Family {
    /// Slope indices `start..end`, 1-based.
    pub start: usize,
    pub end: usize,
    pub kind: FamilyKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HaloReport {
    pub p: u64,
    pub grid: Vec<Q>,
    pub tables: Vec<Specialization>,
    pub families: Vec<Family>,
    /// Indices with an uncertified slope at some grid point.
    pub flagged: Vec<usize>,
    pub failures: Vec<usize>,
    /// `(v_t, index, slope)` rows.
    pub plot: Vec<(Q, usize, Q)>,
}

fn classify(ratios: &[Q], p: u64) -> FamilyKind {
    let unit = Q::from(p as i64 - 1);
    if ratios.windows(2).all(|w| w[0] == w[1]) {
        return FamilyKind::Minus { level: ratios[0] / unit };
    }
    let inside = |lo: Q, hi: Q| ratios.iter().all(|r| *r > lo && *r < hi);
    if inside(Q::zero(), unit) {
        return FamilyKind::Plus { l: 0 };
    }
    let max = ratios.iter().max().copied().unwrap_or_default();
    let mut l = 1usize;
    while unit * q(l) < max {
        if inside(unit * q(l), unit * q(l + 2)) {
            return FamilyKind::Plus { l };
        }
        l += 2;
    }
    FamilyKind::Fail
}

/// Sorts slope indices into `(l, ±)` families across the grid.
pub fn halo_report<W: Word>(cs: &CharSeries<W>, grid: &[Q], p: u64) -> Result<HaloReport> {
    if grid.len() < 2 {
        return Err(HaloError::GridDegenerate);
    }
    let tables: Vec<Specialization> = grid
        .iter()
        .map(|v| specialize_slopes(cs, *v))
        .collect::<Result<_>>()?;
    let mut plot = Vec::new();
    for t in &tables {
        for (i, s) in t.slope_list().iter().enumerate() {
            plot.push((t.v_t, i + 1, *s));
        }
    }
    let mut flagged = Vec::new();
    let mut per_index: Vec<(usize, FamilyKind)> = Vec::new();
    for i in 1..=cs.n_terms() {
        let slopes: Vec<Option<(Q, bool)>> = tables.iter().map(|t| t.slope(i)).collect();
        if slopes.iter().any(|s| !matches!(s, Some((_, true)))) {
            flagged.push(i);
            continue;
        }
        let ratios: Vec<Q> = slopes
            .iter()
            .zip(grid)
            .map(|(s, v)| s.expect("certified").0 / v)
            .collect();
        per_index.push((i, classify(&ratios, p)));
    }
    let failures = per_index
        .iter()
        .filter(|(_, k)| *k == FamilyKind::Fail)
        .map(|(i, _)| *i)
        .collect();
    let mut families: Vec<Family> = Vec::new();
    for (i, kind) in per_index {
        match families.last_mut() {
            Some(f) if f.end == i && f.kind == kind => f.end = i + 1,
            _ => families.push(Family {
                start: i,
                end: i + 1,
                kind,
            }),
        }
    }
    Ok(HaloReport {
        p,
        grid: grid.to_vec(),
        tables,
        families,
        flagged,
        failures,
        plot,
    })
}
