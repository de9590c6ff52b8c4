//! Truncated coefficient rings: `F_p[[T]]/T^N`, `(Z/p^M)[[T]]/T^N` and `(Z/p^M)[G][[T]]/T^N`.

use crate::error::{HaloError, Result};
use crate::group::FiniteGroup;
use crate::word::{pow_word, Word};
use num_bigint::BigUint;
use std::fmt::Debug;
use std::sync::Arc;

/// T-adic valuation of a truncated element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Exact(usize),
    /// The element vanishes modulo `T^N`.
    AtLeastPrecision,
}

impl Valuation {
    pub fn is_at_least(&self, k: usize) -> bool {
        match self {
            Valuation::Exact(v) => *v >= k,
            Valuation::AtLeastPrecision => true,
        }
    }
    pub fn exact(&self) -> Option<usize> {
        match self {
            Valuation::Exact(v) => Some(*v),
            Valuation::AtLeastPrecision => None,
        }
    }
    /// Value with `AtLeastPrecision` replaced by `cap`.
    pub fn or_cap(&self, cap: usize) -> usize {
        self.exact().unwrap_or(cap)
    }
    pub fn min(self, o: Valuation) -> Valuation {
        match (self, o) {
            (Valuation::Exact(a), Valuation::Exact(b)) => Valuation::Exact(a.min(b)),
            (Valuation::Exact(a), _) | (_, Valuation::Exact(a)) => Valuation::Exact(a),
            _ => Valuation::AtLeastPrecision,
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Coefficient ring header: prime, p-precision, T-precision and optional group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingDescriptor<W: Word = u64> {
    p: u64,
    p_prec: u32,
    t_prec: usize,
    group: Option<Arc<FiniteGroup>>,
    q: W,
}

impl<W: Word> RingDescriptor<W> {
    pub fn new(p: u64, p_prec: u32, t_prec: usize, group: Option<FiniteGroup>) -> Result<Arc<Self>> {
        Self::with_group_arc(p, p_prec, t_prec, group.map(Arc::new))
    }

    pub fn with_group_arc(
        p: u64,
        p_prec: u32,
        t_prec: usize,
        group: Option<Arc<FiniteGroup>>,
    ) -> Result<Arc<Self>> {
        if !is_prime(p) || p == 2 {
            return Err(HaloError::Invalid(format!("p = {p} must be an odd prime")));
        }
        if p_prec == 0 || t_prec == 0 {
            return Err(HaloError::Invalid("precisions must be positive".into()));
        }
        if !W::supports(p, p_prec) {
            return Err(HaloError::Invalid(format!("{p}^{p_prec} does not fit the residue word")));
        }
        if let Some(g) = &group {
            if !g.is_p_group(p) {
                return Err(HaloError::Invalid(format!("group order {} is not a power of {p}", g.order())));
            }
        }
        Ok(Arc::new(RingDescriptor {
            p,
            p_prec,
            t_prec,
            group: group.filter(|g| g.order() > 1),
            q: pow_word(p, p_prec),
        }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn p_prec(&self) -> u32 {
        self.p_prec
    }
    pub fn t_prec(&self) -> usize {
        self.t_prec
    }
    pub fn group(&self) -> Option<&Arc<FiniteGroup>> {
        self.group.as_ref()
    }
    pub fn modulus(&self) -> &W {
        &self.q
    }
    pub fn group_order(&self) -> usize {
        self.group.as_ref().map_or(1, |g| g.order())
    }
    pub fn is_commutative(&self) -> bool {
        self.group.as_ref().map_or(true, |g| g.is_abelian())
    }
    pub fn with_t_prec(&self, t_prec: usize) -> Result<Arc<Self>> {
        Self::with_group_arc(self.p, self.p_prec, t_prec, self.group.clone())
    }
    pub fn with_p_prec(&self, p_prec: u32) -> Result<Arc<Self>> {
        Self::with_group_arc(self.p, p_prec, self.t_prec, self.group.clone())
    }
}

/// Element of a truncated ring; coefficient of `g*T^t` stored at `t*|G| + g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedRingElement<W: Word = u64> {
    desc: Arc<RingDescriptor<W>>,
    coeffs: Vec<W>,
}

impl<W: Word> TruncatedRingElement<W> {
    pub fn zero(desc: &Arc<RingDescriptor<W>>) -> Self {
        TruncatedRingElement {
            desc: desc.clone(),
            coeffs: vec![W::zero(); desc.t_prec * desc.group_order()],
        }
    }

    pub fn from_coeffs(desc: &Arc<RingDescriptor<W>>, coeffs: Vec<W>) -> Result<Self> {
        if coeffs.len() != desc.t_prec * desc.group_order() {
            return Err(HaloError::DimensionMismatch("coefficient vector length".into()));
        }
        if coeffs.iter().any(|c| c.to_big() >= desc.q.to_big()) {
            return Err(HaloError::Invalid("residue outside [0, p^M)".into()));
        }
        Ok(TruncatedRingElement {
            desc: desc.clone(),
            coeffs,
        })
    }

    /// Scalar series `sum a_t T^t` (identity group component), reducing each entry.
    pub fn from_series(desc: &Arc<RingDescriptor<W>>, series: &[W]) -> Self {
        let mut x = Self::zero(desc);
        let gs = desc.group_order();
        let e = desc.group.as_ref().map_or(0, |g| g.identity());
        for (t, c) in series.iter().enumerate().take(desc.t_prec) {
            x.coeffs[t * gs + e] = W::from_big(&c.to_big(), &desc.q);
        }
        x
    }

    pub fn from_int(desc: &Arc<RingDescriptor<W>>, v: i64) -> Self {
        let mut x = Self::zero(desc);
        let e = desc.group.as_ref().map_or(0, |g| g.identity());
        let r = W::from_u64(v.unsigned_abs(), &desc.q);
        x.coeffs[e] = if v < 0 { r.neg_mod(&desc.q) } else { r };
        x
    }

    pub fn from_big_int(desc: &Arc<RingDescriptor<W>>, v: &BigUint) -> Self {
        let mut x = Self::zero(desc);
        let e = desc.group.as_ref().map_or(0, |g| g.identity());
        x.coeffs[e] = W::from_big(v, &desc.q);
        x
    }

    pub fn one(desc: &Arc<RingDescriptor<W>>) -> Self {
        Self::from_int(desc, 1)
    }

    /// `T^k` (zero when `k >= N`).
    pub fn t_power(desc: &Arc<RingDescriptor<W>>, k: usize) -> Self {
        Self::one(desc).mul_t_pow(k)
    }

    /// The group element `g` as a ring element.
    pub fn group_element(desc: &Arc<RingDescriptor<W>>, g: usize) -> Self {
        let mut x = Self::zero(desc);
        x.coeffs[g] = W::one();
        x
    }

    pub fn descriptor(&self) -> &Arc<RingDescriptor<W>> {
        &self.desc
    }
    pub fn coeffs(&self) -> &[W] {
        &self.coeffs
    }
    pub fn coeff(&self, t: usize, g: usize) -> &W {
        &self.coeffs[t * self.desc.group_order() + g]
    }
    pub fn set_coeff(&mut self, t: usize, g: usize, v: W) {
        let gs = self.desc.group_order();
        self.coeffs[t * gs + g] = W::from_big(&v.to_big(), &self.desc.q);
    }
    /// The group-algebra layer at `T^t`.
    pub fn layer(&self, t: usize) -> &[W] {
        let gs = self.desc.group_order();
        &self.coeffs[t * gs..(t + 1) * gs]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        let q = &self.desc.q;
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.add_mod(b, q)).collect(),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        let q = &self.desc.q;
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.sub_mod(b, q)).collect(),
        }
    }
    pub fn neg(&self) -> Self {
        let q = &self.desc.q;
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: self.coeffs.iter().map(|a| a.neg_mod(q)).collect(),
        }
    }
    pub fn scale(&self, s: &W) -> Self {
        let q = &self.desc.q;
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: self.coeffs.iter().map(|a| a.mul_mod(s, q)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = &self.desc;
        let q = &d.q;
        let n = d.t_prec;
        match &d.group {
            None => TruncatedRingElement {
                desc: d.clone(),
                coeffs: W::series_dot(&[(&self.coeffs, &o.coeffs)], n, q),
            },
            Some(g) => {
                let gs = g.order();
                let mut out = vec![W::zero(); n * gs];
                for t1 in 0..n {
                    let a = &self.coeffs[t1 * gs..(t1 + 1) * gs];
                    if a.iter().all(|c| c.is_zero()) {
                        continue;
                    }
                    for t2 in 0..n - t1 {
                        let b = &o.coeffs[t2 * gs..(t2 + 1) * gs];
                        let base = (t1 + t2) * gs;
                        for (x, ax) in a.iter().enumerate() {
                            if ax.is_zero() {
                                continue;
                            }
                            for (y, by) in b.iter().enumerate() {
                                if by.is_zero() {
                                    continue;
                                }
                                let k = base + g.mul(x, y);
                                out[k] = out[k].add_mod(&ax.mul_mod(by, q), q);
                            }
                        }
                    }
                }
                TruncatedRingElement {
                    desc: d.clone(),
                    coeffs: out,
                }
            }
        }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(&self.desc);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Multiplication by `T^k`.
    pub fn mul_t_pow(&self, k: usize) -> Self {
        let gs = self.desc.group_order();
        let n = self.desc.t_prec;
        let mut out = vec![W::zero(); n * gs];
        if k < n {
            out[k * gs..].clone_from_slice(&self.coeffs[..(n - k) * gs]);
        }
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: out,
        }
    }

    /// Division by `T^k`, assuming `v_T >= k`; the top `k` layers become zero.
    pub fn div_t_pow(&self, k: usize) -> Self {
        let gs = self.desc.group_order();
        let n = self.desc.t_prec;
        let mut out = vec![W::zero(); n * gs];
        if k < n {
            out[..(n - k) * gs].clone_from_slice(&self.coeffs[k * gs..]);
        }
        TruncatedRingElement {
            desc: self.desc.clone(),
            coeffs: out,
        }
    }

    pub fn vt_valuation(&self) -> Valuation {
        let gs = self.desc.group_order();
        (0..self.desc.t_prec)
            .find(|&t| self.coeffs[t * gs..(t + 1) * gs].iter().any(|c| !c.is_zero()))
            .map_or(Valuation::AtLeastPrecision, Valuation::Exact)
    }

    /// Augmentation followed by reduction mod p.
    pub fn reduce_to_fp(&self) -> FpSeries {
        let gs = self.desc.group_order();
        let p = self.desc.p;
        let coeffs = (0..self.desc.t_prec)
            .map(|t| {
                self.coeffs[t * gs..(t + 1) * gs]
                    .iter()
                    .fold(0u64, |acc, c| (acc + c.rem_u64(p)) % p)
            })
            .collect();
        FpSeries {
            p,
            t_prec: self.desc.t_prec,
            coeffs,
        }
    }

    /// Canonical lift: residues in `[0, p)` at the identity component.
    pub fn special_lift(x: &FpSeries, desc: &Arc<RingDescriptor<W>>) -> Result<Self> {
        if x.p != desc.p {
            return Err(HaloError::Invalid("special lift across different primes".into()));
        }
        let mut out = Self::zero(desc);
        let gs = desc.group_order();
        let e = desc.group.as_ref().map_or(0, |g| g.identity());
        for (t, c) in x.coeffs.iter().enumerate().take(desc.t_prec) {
            out.coeffs[t * gs + e] = W::from_u64(*c, &desc.q);
        }
        Ok(out)
    }

    pub fn is_unit(&self) -> bool {
        self.reduce_to_fp().coeffs[0] != 0
    }

    /// Inverse of a unit by Newton iteration `z <- z(2 - xz)`.
    pub fn unit_inverse(&self) -> Result<Self> {
        let p = self.desc.p;
        let a0 = self.reduce_to_fp().coeffs[0];
        if a0 == 0 {
            return Err(HaloError::NotAUnit);
        }
        let inv_p = modpow_u64(a0, p - 2, p);
        let mut z = Self::from_int(&self.desc, inv_p as i64);
        let one = Self::one(&self.desc);
        let two = Self::from_int(&self.desc, 2);
        for _ in 0..80 {
            let xz = self.mul(&z);
            if xz == one {
                debug_assert_eq!(z.mul(self), one);
                return Ok(z);
            }
            z = z.mul(&two.sub(&xz));
        }
        Err(HaloError::PrecisionExhausted("unit inversion did not converge".into()))
    }

    /// Same element read in a ring with another T-precision (zero padded or truncated).
    pub fn with_t_prec(&self, desc: &Arc<RingDescriptor<W>>) -> Self {
        let gs = self.desc.group_order();
        assert_eq!(gs, desc.group_order());
        let mut out = Self::zero(desc);
        let len = self.desc.t_prec.min(desc.t_prec) * gs;
        out.coeffs[..len].clone_from_slice(&self.coeffs[..len]);
        out
    }

    /// Same element read with another p-precision (residues reinterpreted as integers).
    pub fn with_p_prec<V: Word>(&self, desc: &Arc<RingDescriptor<V>>) -> TruncatedRingElement<V> {
        let gs = self.desc.group_order();
        assert_eq!(gs, desc.group_order());
        let mut out = TruncatedRingElement::zero(desc);
        let len = self.desc.t_prec.min(desc.t_prec) * gs;
        for i in 0..len {
            out.coeffs[i] = V::from_big(&self.coeffs[i].to_big(), desc.modulus());
        }
        out
    }

    /// Trivial-group coefficient of `T^t` as a scalar.
    pub fn scalar_coeff(&self, t: usize) -> &W {
        assert_eq!(self.desc.group_order(), 1);
        &self.coeffs[t]
    }

    /// `(p,T)`-adic valuation `min_t (t + v_p(a_t))` of a trivial-group element.
    pub fn pt_valuation(&self) -> PtValuation {
        let p = self.desc.p;
        let m = self.desc.p_prec as usize;
        let n = self.desc.t_prec;
        let cap = m.min(n);
        let mut best = usize::MAX;
        for t in 0..n {
            let c = &self.coeffs[t * self.desc.group_order()..(t + 1) * self.desc.group_order()];
            for x in c {
                if !x.is_zero() {
                    best = best.min(t + vp_word(x, p));
                }
            }
        }
        if best < cap {
            PtValuation { value: best, exact: true }
        } else {
            PtValuation { value: cap, exact: false }
        }
    }
}

/// `(p,T)`-valuation; `exact = false` means only `value` is certified as a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PtValuation {
    pub value: usize,
    pub exact: bool,
}

pub fn vp_word<W: Word>(x: &W, p: u64) -> usize {
    if x.is_zero() {
        return usize::MAX;
    }
    let mut v = 0;
    let mut y = x.clone();
    while y.rem_u64(p) == 0 {
        y = y.div_u64(p);
        v += 1;
    }
    v
}

pub fn modpow_u64(b: u64, mut e: u64, m: u64) -> u64 {
    let mut base = b % m;
    let mut acc = 1 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Element of `F_p[[T]]/T^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpSeries {
    p: u64,
    t_prec: usize,
    coeffs: Vec<u64>,
}

/// Header for `F_p[[T]]/T^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpCtx {
    pub p: u64,
    pub t_prec: usize,
}

impl FpSeries {
    pub fn new(p: u64, t_prec: usize, coeffs: &[u64]) -> Self {
        let mut c = vec![0; t_prec];
        for (i, x) in coeffs.iter().enumerate().take(t_prec) {
            c[i] = x % p;
        }
        FpSeries {
            p,
            t_prec,
            coeffs: c,
        }
    }
    pub fn from_signed(p: u64, t_prec: usize, coeffs: &[i64]) -> Self {
        let c: Vec<u64> = coeffs.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
        Self::new(p, t_prec, &c)
    }
    pub fn zero(ctx: FpCtx) -> Self {
        Self::new(ctx.p, ctx.t_prec, &[])
    }
    pub fn one(ctx: FpCtx) -> Self {
        Self::new(ctx.p, ctx.t_prec, &[1])
    }
    pub fn constant(ctx: FpCtx, c: u64) -> Self {
        Self::new(ctx.p, ctx.t_prec, &[c])
    }
    /// `c * T^k`.
    pub fn monomial(ctx: FpCtx, c: u64, k: usize) -> Self {
        let mut x = Self::zero(ctx);
        if k < ctx.t_prec {
            x.coeffs[k] = c % ctx.p;
        }
        x
    }
    pub fn ctx(&self) -> FpCtx {
        FpCtx {
            p: self.p,
            t_prec: self.t_prec,
        }
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn t_prec(&self) -> usize {
        self.t_prec
    }
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
    pub fn vt_valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .position(|&c| c != 0)
            .map_or(Valuation::AtLeastPrecision, Valuation::Exact)
    }
    pub fn add(&self, o: &Self) -> Self {
        let p = self.p;
        FpSeries {
            p,
            t_prec: self.t_prec,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| (a + b) % p).collect(),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        let p = self.p;
        FpSeries {
            p,
            t_prec: self.t_prec,
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| (a + p - b) % p).collect(),
        }
    }
    pub fn neg(&self) -> Self {
        let p = self.p;
        FpSeries {
            p,
            t_prec: self.t_prec,
            coeffs: self.coeffs.iter().map(|a| (p - a) % p).collect(),
        }
    }
    pub fn scale(&self, s: u64) -> Self {
        let p = self.p;
        FpSeries {
            p,
            t_prec: self.t_prec,
            coeffs: self.coeffs.iter().map(|a| a * (s % p) % p).collect(),
        }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.t_prec;
        let p = self.p;
        let mut acc = vec![0u64; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs[..n - i].iter().enumerate() {
                acc[i + j] = (acc[i + j] + a * b) % p;
            }
        }
        FpSeries {
            p,
            t_prec: n,
            coeffs: acc,
        }
    }
    pub fn mul_t_pow(&self, k: usize) -> Self {
        let n = self.t_prec;
        let mut c = vec![0; n];
        if k < n {
            c[k..].copy_from_slice(&self.coeffs[..n - k]);
        }
        FpSeries {
            p: self.p,
            t_prec: n,
            coeffs: c,
        }
    }
    pub fn div_t_pow(&self, k: usize) -> Self {
        let n = self.t_prec;
        let mut c = vec![0; n];
        if k < n {
            c[..n - k].copy_from_slice(&self.coeffs[k..]);
        }
        FpSeries {
            p: self.p,
            t_prec: n,
            coeffs: c,
        }
    }
    pub fn is_unit(&self) -> bool {
        self.coeffs[0] != 0
    }
    pub fn unit_inverse(&self) -> Result<Self> {
        let p = self.p;
        let n = self.t_prec;
        if self.coeffs[0] == 0 {
            return Err(HaloError::NotAUnit);
        }
        let inv0 = modpow_u64(self.coeffs[0], p - 2, p);
        let mut out = vec![0u64; n];
        out[0] = inv0;
        for k in 1..n {
            let mut s = 0u64;
            for j in 1..=k {
                s = (s + self.coeffs[j] * out[k - j]) % p;
            }
            out[k] = (p - s) % p * inv0 % p;
        }
        Ok(FpSeries {
            p,
            t_prec: n,
            coeffs: out,
        })
    }
    pub fn with_t_prec(&self, t_prec: usize) -> Self {
        Self::new(self.p, t_prec, &self.coeffs)
    }
    /// The unit part `x / T^v` together with `v`, for nonzero `x`.
    pub fn split_valuation(&self) -> Option<(usize, FpSeries)> {
        let v = self.vt_valuation().exact()?;
        Some((v, self.div_t_pow(v)))
    }
}

/// Common interface of the commutative and group-algebra coefficient rings.
pub trait RingElement: Clone + PartialEq + Debug + Send + Sync {
    type Ctx: Clone + PartialEq + Debug + Send + Sync;
    fn ctx(&self) -> Self::Ctx;
    fn zero_in(ctx: &Self::Ctx) -> Self;
    fn one_in(ctx: &Self::Ctx) -> Self;
    fn int_in(ctx: &Self::Ctx, v: i64) -> Self;
    fn t_prec_of(ctx: &Self::Ctx) -> usize;
    fn prime_of(ctx: &Self::Ctx) -> u64;
    fn commutative(ctx: &Self::Ctx) -> bool;
    /// The same ring with another T-precision.
    fn retruncate_ctx(ctx: &Self::Ctx, t_prec: usize) -> Self::Ctx;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn vt(&self) -> Valuation;
    fn mul_t(&self, k: usize) -> Self;
    fn div_t(&self, k: usize) -> Self;
    fn is_unit(&self) -> bool;
    fn inverse(&self) -> Result<Self>;
    fn reduce(&self) -> FpSeries;
    fn lift(ctx: &Self::Ctx, x: &FpSeries) -> Self;
    fn retruncate(&self, ctx: &Self::Ctx) -> Self;

    fn t_pow_in(ctx: &Self::Ctx, k: usize) -> Self {
        Self::one_in(ctx).mul_t(k)
    }

    /// Optional fast `row · a^i · col` for `i < steps`, `a` square row-major.
    fn fast_krylov(_a: &[Self], _row: &[Self], _col: &[Self], _steps: usize) -> Option<Vec<Self>> {
        None
    }

    /// Optional fast matrix product for row-major `a` (n x k) and `b` (k x m).
    fn fast_matmul(_a: &[Self], _b: &[Self], _dims: (usize, usize, usize)) -> Option<Vec<Self>> {
        None
    }
}

impl RingElement for FpSeries {
    type Ctx = FpCtx;
    fn ctx(&self) -> FpCtx {
        FpSeries::ctx(self)
    }
    fn zero_in(ctx: &FpCtx) -> Self {
        FpSeries::zero(*ctx)
    }
    fn one_in(ctx: &FpCtx) -> Self {
        FpSeries::one(*ctx)
    }
    fn int_in(ctx: &FpCtx, v: i64) -> Self {
        FpSeries::from_signed(ctx.p, ctx.t_prec, &[v])
    }
    fn t_prec_of(ctx: &FpCtx) -> usize {
        ctx.t_prec
    }
    fn prime_of(ctx: &FpCtx) -> u64 {
        ctx.p
    }
    fn commutative(_: &FpCtx) -> bool {
        true
    }
    fn retruncate_ctx(ctx: &FpCtx, t_prec: usize) -> FpCtx {
        FpCtx { p: ctx.p, t_prec }
    }
    fn add(&self, o: &Self) -> Self {
        FpSeries::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        FpSeries::sub(self, o)
    }
    fn neg(&self) -> Self {
        FpSeries::neg(self)
    }
    fn mul(&self, o: &Self) -> Self {
        FpSeries::mul(self, o)
    }
    fn is_zero(&self) -> bool {
        FpSeries::is_zero(self)
    }
    fn vt(&self) -> Valuation {
        self.vt_valuation()
    }
    fn mul_t(&self, k: usize) -> Self {
        self.mul_t_pow(k)
    }
    fn div_t(&self, k: usize) -> Self {
        self.div_t_pow(k)
    }
    fn is_unit(&self) -> bool {
        FpSeries::is_unit(self)
    }
    fn inverse(&self) -> Result<Self> {
        self.unit_inverse()
    }
    fn reduce(&self) -> FpSeries {
        self.clone()
    }
    fn lift(ctx: &FpCtx, x: &FpSeries) -> Self {
        x.with_t_prec(ctx.t_prec)
    }
    fn retruncate(&self, ctx: &FpCtx) -> Self {
        self.with_t_prec(ctx.t_prec)
    }
}

impl<W: Word> RingElement for TruncatedRingElement<W> {
    type Ctx = Arc<RingDescriptor<W>>;
    fn ctx(&self) -> Self::Ctx {
        self.desc.clone()
    }
    fn zero_in(ctx: &Self::Ctx) -> Self {
        Self::zero(ctx)
    }
    fn one_in(ctx: &Self::Ctx) -> Self {
        Self::one(ctx)
    }
    fn int_in(ctx: &Self::Ctx, v: i64) -> Self {
        Self::from_int(ctx, v)
    }
    fn t_prec_of(ctx: &Self::Ctx) -> usize {
        ctx.t_prec
    }
    fn prime_of(ctx: &Self::Ctx) -> u64 {
        ctx.p
    }
    fn commutative(ctx: &Self::Ctx) -> bool {
        ctx.is_commutative()
    }
    fn retruncate_ctx(ctx: &Self::Ctx, t_prec: usize) -> Self::Ctx {
        ctx.with_t_prec(t_prec).expect("valid descriptor")
    }
    fn add(&self, o: &Self) -> Self {
        TruncatedRingElement::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        TruncatedRingElement::sub(self, o)
    }
    fn neg(&self) -> Self {
        TruncatedRingElement::neg(self)
    }
    fn mul(&self, o: &Self) -> Self {
        TruncatedRingElement::mul(self, o)
    }
    fn is_zero(&self) -> bool {
        TruncatedRingElement::is_zero(self)
    }
    fn vt(&self) -> Valuation {
        self.vt_valuation()
    }
    fn mul_t(&self, k: usize) -> Self {
        self.mul_t_pow(k)
    }
    fn div_t(&self, k: usize) -> Self {
        self.div_t_pow(k)
    }
    fn is_unit(&self) -> bool {
        TruncatedRingElement::is_unit(self)
    }
    fn inverse(&self) -> Result<Self> {
        self.unit_inverse()
    }
    fn reduce(&self) -> FpSeries {
        self.reduce_to_fp()
    }
    fn lift(ctx: &Self::Ctx, x: &FpSeries) -> Self {
        Self::special_lift(&x.with_t_prec(ctx.t_prec), ctx).expect("matching prime")
    }
    fn retruncate(&self, ctx: &Self::Ctx) -> Self {
        self.with_t_prec(ctx)
    }
    fn fast_krylov(a: &[Self], row: &[Self], col: &[Self], steps: usize) -> Option<Vec<Self>> {
        let desc = row.first()?.desc.clone();
        if desc.group.is_some() {
            return None;
        }
        let coeffs = |v: &[Self]| v.iter().map(|x| x.coeffs.clone()).collect::<Vec<_>>();
        let out = W::series_krylov(&coeffs(a), &coeffs(row), &coeffs(col), steps, desc.t_prec, &desc.q);
        Some(
            out.into_iter()
                .map(|coeffs| TruncatedRingElement {
                    desc: desc.clone(),
                    coeffs,
                })
                .collect(),
        )
    }
    fn fast_matmul(a: &[Self], b: &[Self], dims: (usize, usize, usize)) -> Option<Vec<Self>> {
        let desc = a.first().or(b.first())?.desc.clone();
        if desc.group.is_some() {
            return None;
        }
        let av: Vec<Vec<W>> = a.iter().map(|x| x.coeffs.clone()).collect();
        let bv: Vec<Vec<W>> = b.iter().map(|x| x.coeffs.clone()).collect();
        let out = W::series_matmul(&av, &bv, dims, desc.t_prec, &desc.q);
        Some(
            out.into_iter()
                .map(|coeffs| TruncatedRingElement {
                    desc: desc.clone(),
                    coeffs,
                })
                .collect(),
        )
    }
}
