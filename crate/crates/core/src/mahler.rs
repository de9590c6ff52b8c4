//! Weight characters, the monoid action on the Mahler basis and its valuation bounds.

use crate::error::{HaloError, Result};
use crate::matrix::Matrix;
use crate::padic::{big_pow, binom_row, floor_log, inv_mod, padic_unit_decompose};
use crate::ring::{vp_word, RingDescriptor, RingElement, TruncatedRingElement};
use crate::word::Word;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Image of the generator `1+p` of `1 + pZ_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WildPart {
    /// `1 + T` in the weight ring.
    Universal,
    /// A concrete unit `1 + t` with `p | t`.
    Specialized(BigInt),
}

/// One character `Z_p^x -> weight ring^x`, split as torsion times wild part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleCharacter {
    /// The torsion part is `omega^k` on Teichmüller representatives.
    pub torsion_exponent: u64,
    pub wild: WildPart,
}

impl SingleCharacter {
    pub fn trivial() -> Self {
        SingleCharacter {
            torsion_exponent: 0,
            wild: WildPart::Specialized(BigInt::zero()),
        }
    }

    pub fn universal() -> Self {
        SingleCharacter {
            torsion_exponent: 0,
            wild: WildPart::Universal,
        }
    }

    fn validate(&self, p: u64) -> Result<()> {
        if let WildPart::Specialized(t) = &self.wild {
            if !(t % BigInt::from(p)).is_zero() {
                return Err(HaloError::Invalid(format!("wild image 1 + {t} is not 1 mod {p}")));
            }
        }
        Ok(())
    }

    fn is_trivial(&self, p: u64) -> bool {
        self.torsion_exponent % (p - 1) == 0 && matches!(&self.wild, WildPart::Specialized(t) if t.is_zero())
    }
}

/// Weight character `(n, ν)`; `ν` is evaluated on the unit part of determinants, so `ν(p) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterSpec {
    pub n: SingleCharacter,
    pub nu: SingleCharacter,
}

impl CharacterSpec {
    pub fn trivial() -> Self {
        CharacterSpec {
            n: SingleCharacter::trivial(),
            nu: SingleCharacter::trivial(),
        }
    }

    pub fn universal() -> Self {
        CharacterSpec {
            n: SingleCharacter::universal(),
            nu: SingleCharacter::trivial(),
        }
    }

    /// Reads the torsion part from explicit values at residues `1..p-1`, which must be
    /// `omega^k mod p^m` for a single `k`.
    pub fn torsion_exponent_from_values(values: &[BigUint], p: u64, m: u32) -> Result<u64> {
        if values.len() != (p - 1) as usize {
            return Err(HaloError::Invalid(format!("torsion part needs {} values", p - 1)));
        }
        let q = big_pow(p, m);
        let omegas: Vec<BigUint> = (1..p)
            .map(|a| teichmuller(&BigUint::from(a), p, m))
            .collect::<Result<_>>()?;
        'k: for k in 0..p - 1 {
            for (w, v) in omegas.iter().zip(values) {
                if w.modpow(&BigUint::from(k), &q) != v % &q {
                    continue 'k;
                }
            }
            return Ok(k);
        }
        Err(HaloError::Invalid("torsion values are not a character of (Z/p)^x".into()))
    }
}

fn teichmuller(x: &BigUint, p: u64, m: u32) -> Result<BigUint> {
    Ok(padic_unit_decompose(x, p, m)?.0)
}

fn big_mod(x: &BigInt, q: &BigUint) -> BigUint {
    let qi = BigInt::from_biguint(Sign::Plus, q.clone());
    x.mod_floor(&qi).to_biguint().expect("nonnegative after mod_floor")
}

fn single_value<W: Word>(
    chi: &SingleCharacter,
    x: &BigUint,
    desc: &Arc<RingDescriptor<W>>,
) -> Result<TruncatedRingElement<W>> {
    let p = desc.p();
    let m = desc.p_prec();
    let n = desc.t_prec();
    chi.validate(p)?;
    if Zero::is_zero(&(x % p)) {
        return Err(HaloError::NotAUnit);
    }
    let q = big_pow(p, m);
    let tors = if chi.torsion_exponent % (p - 1) == 0 {
        <BigUint as One>::one()
    } else {
        teichmuller(x, p, m)?.modpow(&BigUint::from(chi.torsion_exponent), &q)
    };
    let tors = TruncatedRingElement::from_big_int(desc, &tors);
    match &chi.wild {
        WildPart::Specialized(t) => {
            let (_, e) = padic_unit_decompose(x, p, m)?;
            let base = big_mod(&(BigInt::one() + t), &q);
            let v = base.modpow(&e, &q);
            Ok(tors.mul(&TruncatedRingElement::from_big_int(desc, &v)))
        }
        WildPart::Universal => {
            let guard = floor_log(p, n.saturating_sub(1) as u64);
            let (_, e) = padic_unit_decompose(x, p, m + guard + 1)?;
            let row = binom_row(&e, m + guard, (n - 1) as u64, p, m)?;
            let coeffs: Vec<W> = row.iter().map(|c| W::from_big(c, desc.modulus())).collect();
            Ok(tors.mul(&TruncatedRingElement::from_series(desc, &coeffs)))
        }
    }
}

/// `χ(x)` for a unit `x`, in `(Z/p^M)[[T]]/T^N`.
pub fn eval_character<W: Word>(
    chi: &SingleCharacter,
    x: &BigInt,
    desc: &Arc<RingDescriptor<W>>,
) -> Result<TruncatedRingElement<W>> {
    let n = desc.t_prec();
    let guard = floor_log(desc.p(), n.saturating_sub(1) as u64);
    let q = big_pow(desc.p(), desc.p_prec() + guard + 1);
    single_value(chi, &big_mod(x, &q), desc)
}

/// A matrix `[[a, b], [c, d]]` with `p | c`, `p ∤ d`, `ad - bc ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonoidElement {
    #[serde(serialize_with = "ser_bigint")]
    pub a: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub b: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub c: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub d: BigInt,
}

fn ser_bigint<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Which bound on `P_{m,n}` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaShape {
    /// `p | a`: `P_{m,n} ∈ 𝔪^{max(m - ⌊n/p⌋, 0)}`.
    PDividesA,
    /// Any monoid element: `P_{m,n} ∈ 𝔪^{max(m - n, 0)}`.
    General,
}

impl MonoidElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64, p: u64) -> Result<Self> {
        Self::from_big([a, b, c, d].map(BigInt::from), p)
    }

    pub fn from_big(e: [BigInt; 4], p: u64) -> Result<Self> {
        let [a, b, c, d] = e;
        let pb = BigInt::from(p);
        if !(&c % &pb).is_zero() {
            return Err(HaloError::Invalid(format!("c = {c} is not divisible by {p}")));
        }
        if (&d % &pb).is_zero() {
            return Err(HaloError::Invalid(format!("d = {d} is divisible by {p}")));
        }
        if (&a * &d - &b * &c).is_zero() {
            return Err(HaloError::Invalid("determinant is zero".into()));
        }
        Ok(MonoidElement { a, b, c, d })
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn shape(&self, p: u64) -> DeltaShape {
        if (&self.a % BigInt::from(p)).is_zero() {
            DeltaShape::PDividesA
        } else {
            DeltaShape::General
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        MonoidElement {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.c.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// `binom(z, m)`.
    Plain,
    /// `T^m binom(z, m)`.
    Modified,
}

/// Entry `T^shift * value` of the modified basis, read in `Z_p[[T, w]]/(Tw - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedEntry<W: Word = u64> {
    pub value: TruncatedRingElement<W>,
    pub shift: i64,
}

impl<W: Word> ModifiedEntry<W> {
    /// Monomials `(coefficient, p-exponent, T-exponent)` after moving negative `T` powers into
    /// `w = p/T`; the T-exponent is negative when a `w` power remains.
    pub fn monomials(&self) -> Vec<(BigUint, i64, i64)> {
        let desc = self.value.descriptor();
        let p = desc.p();
        let mut out = Vec::new();
        for t in 0..desc.t_prec() {
            let c = self.value.scalar_coeff(t);
            if Word::is_zero(c) {
                continue;
            }
            let v = vp_word(c, p) as i64;
            let unit = c.to_big() / big_pow(p, v as u32);
            out.push((unit, v, t as i64 + self.shift));
        }
        out
    }

    /// Monomials written as `u * p^i * T^j` or `u * p^i * w^j`.
    pub fn format(&self) -> String {
        let terms: Vec<String> = self
            .monomials()
            .into_iter()
            .rev()
            .map(|(u, v, e)| {
                let mut parts = vec![u.to_string()];
                let (pv, var, k) = if e >= 0 { (v, "T", e) } else { (v + e, "w", -e) };
                match pv {
                    0 => {}
                    1 => parts.push("p".into()),
                    _ => parts.push(format!("p^{pv}")),
                }
                match k {
                    0 => {}
                    1 => parts.push(var.to_string()),
                    _ => parts.push(format!("{var}^{k}")),
                }
                if parts.len() > 1 && parts[0] == "1" {
                    parts.remove(0);
                }
                parts.join("*")
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

/// Mahler-basis matrix `P(δ)` with `binom(z,n)∘δ = Σ_m P_{m,n} binom(z,m)`.
#[derive(Debug, Clone)]
pub struct MahlerMatrix<W: Word = u64> {
    pub size: usize,
    pub basis: Basis,
    /// Entries in the plain basis; the modified entries are `T^{n-m} P_{m,n}`.
    pub plain: Matrix<TruncatedRingElement<W>>,
}

impl<W: Word> MahlerMatrix<W> {
    pub fn entry(&self, m: usize, n: usize) -> ModifiedEntry<W> {
        let shift = match self.basis {
            Basis::Plain => 0,
            Basis::Modified => n as i64 - m as i64,
        };
        ModifiedEntry {
            value: self.plain.get(m, n).clone(),
            shift,
        }
    }

    /// Entries as a ring matrix when no entry needs `w = p/T`.
    pub fn as_ring_matrix(&self) -> Result<Matrix<TruncatedRingElement<W>>> {
        let ctx = self.plain.ctx().clone();
        let mut out = Matrix::zeros(&ctx, self.size, self.size);
        for m in 0..self.size {
            for n in 0..self.size {
                let e = self.entry(m, n);
                let v = if e.shift >= 0 {
                    e.value.mul_t(e.shift as usize)
                } else {
                    let k = (-e.shift) as usize;
                    if !e.value.vt().is_at_least(k) {
                        return Err(HaloError::ModifiedBasisOverflow { m, n });
                    }
                    e.value.div_t(k)
                };
                out.set(m, n, v);
            }
        }
        Ok(out)
    }
}

/// `(p,T)`-valuation read from the visible monomials; `None` for zero.
pub fn pt_val<W: Word>(x: &TruncatedRingElement<W>) -> Option<usize> {
    let desc = x.descriptor();
    let p = desc.p();
    (0..desc.t_prec())
        .filter(|&t| !Word::is_zero(x.scalar_coeff(t)))
        .map(|t| t + vp_word(x.scalar_coeff(t), p))
        .min()
}

/// Whether `x ∈ (p,T)^k` can be decided, and the answer.
///
/// `Some(false)` means a visible monomial violates the bound; `None` means the bound
/// reaches beyond the known precision.
pub fn in_pt_power<W: Word>(x: &TruncatedRingElement<W>, k: usize) -> Option<bool> {
    if let Some(v) = pt_val(x) {
        if v < k {
            return Some(false);
        }
    }
    let desc = x.descriptor();
    if k <= desc.t_prec().min(desc.p_prec() as usize) {
        Some(true)
    } else {
        None
    }
}

/// `(az+b)/(cz+d) mod p^k` for `z = 0..count`.
fn moebius_points(delta: &MonoidElement, p: u64, k: u32, count: usize) -> Result<Vec<(BigUint, BigUint)>> {
    let q = big_pow(p, k);
    (0..count)
        .map(|z| {
            let z = BigInt::from(z);
            let num = big_mod(&(&delta.a * &z + &delta.b), &q);
            let den = big_mod(&(&delta.c * &z + &delta.d), &q);
            let y = (num * inv_mod(&den, &q)?) % &q;
            Ok((y, den))
        })
        .collect()
}

fn unit_part(x: &BigInt, p: u64) -> BigInt {
    let mut y = x.abs();
    let pb = BigInt::from(p);
    while (&y % &pb).is_zero() {
        y /= &pb;
    }
    if x.is_negative() {
        -y
    } else {
        y
    }
}

/// Computes `P(δ)` of size `size` over the trivial-group ring `desc`.
///
/// Column `n` is the Mahler expansion of `z ↦ χ(cz+d) ν(ad-bc) binom((az+b)/(cz+d), n)`,
/// obtained by finite differences of its values at `z = 0..size-1`.
pub fn mahler_matrix<W: Word>(
    delta: &MonoidElement,
    chi: &CharacterSpec,
    desc: &Arc<RingDescriptor<W>>,
    size: usize,
    basis: Basis,
) -> Result<MahlerMatrix<W>> {
    if desc.group().is_some() {
        return Err(HaloError::Invalid("the weight ring has no group part".into()));
    }
    if size == 0 {
        return Err(HaloError::Invalid("size must be positive".into()));
    }
    let p = desc.p();
    let m = desc.p_prec();
    let n_t = desc.t_prec();
    let binom_guard = floor_log(p, size as u64 - 1);
    let chi_guard = floor_log(p, n_t.saturating_sub(1) as u64) + 1;
    let work = m + binom_guard.max(chi_guard);
    let points = moebius_points(delta, p, work, size)?;
    let nu_det = if chi.nu.is_trivial(p) {
        TruncatedRingElement::one(desc)
    } else {
        eval_character(&chi.nu, &unit_part(&delta.det(), p), desc)?
    };
    // f[z][n] = scalar binom(y_z, n) and the character factor per z.
    let q = desc.modulus().clone();
    let rows: Vec<(TruncatedRingElement<W>, Vec<W>)> = points
        .par_iter()
        .map(|(y, den)| {
            let chi_v = if chi.n.is_trivial(p) {
                TruncatedRingElement::one(desc)
            } else {
                single_value(&chi.n, den, desc)?
            };
            let b = binom_row(y, m + binom_guard, size as u64 - 1, p, m)?;
            let b = b.iter().map(|x| W::from_big(x, &q)).collect();
            Ok((chi_v.mul(&nu_det), b))
        })
        .collect::<Result<_>>()?;
    // Signed binomial table (-1)^{i-k} C(i,k) mod q.
    let qb = q.to_big();
    let mut pascal = vec![vec![<BigUint as Zero>::zero(); size]; size];
    for i in 0..size {
        pascal[i][0] = <BigUint as One>::one();
        for k in 1..=i {
            let above = if k < i { pascal[i - 1][k].clone() } else { <BigUint as Zero>::zero() };
            pascal[i][k] = (&pascal[i - 1][k - 1] + above) % &qb;
        }
    }
    let diff: Vec<Vec<W>> = (0..size)
        .map(|i| {
            (0..=i)
                .map(|k| {
                    let c = &pascal[i][k];
                    let v = if (i - k) % 2 == 0 { c.clone() } else { (&qb - c) % &qb };
                    W::from_big(&v, &q)
                })
                .collect()
        })
        .collect();
    let columns: Vec<Vec<TruncatedRingElement<W>>> = (0..size)
        .into_par_iter()
        .map(|n| {
            let values: Vec<TruncatedRingElement<W>> = rows.iter().map(|(cv, b)| cv.scale(&b[n])).collect();
            (0..size)
                .map(|i| {
                    let mut acc = TruncatedRingElement::zero(desc);
                    for (k, v) in values.iter().enumerate().take(i + 1) {
                        acc = acc.add(&v.scale(&diff[i][k]));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let plain = Matrix::from_fn(desc, size, size, |i, j| columns[j][i].clone());
    let out = MahlerMatrix { size, basis, plain };
    if basis == Basis::Modified {
        check_modified_integrality(&out)?;
    }
    Ok(out)
}

/// Every modified entry `T^{n-m} P_{m,n}` must have no `w` left over.
///
/// Entries whose bound exceeds the working precision are not decided here.
pub fn check_modified_integrality<W: Word>(mm: &MahlerMatrix<W>) -> Result<()> {
    for m in 0..mm.size {
        for n in 0..m {
            if in_pt_power(mm.plain.get(m, n), m - n) == Some(false) {
                return Err(HaloError::ModifiedBasisOverflow { m, n });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundViolation {
    pub m: usize,
    pub n: usize,
    pub valuation: usize,
    pub bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LwxReport {
    pub shape: DeltaShape,
    pub checked: usize,
    /// Entries whose bound exceeds the working precision.
    pub unverified: usize,
    pub violations: Vec<BoundViolation>,
    /// Smallest `v - bound` over nonzero entries with positive bound, as `(m, n, slack)`.
    pub min_slack: Option<(usize, usize, usize)>,
}

impl LwxReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn lwx_bound(shape: DeltaShape, p: u64, m: usize, n: usize) -> usize {
    match shape {
        DeltaShape::PDividesA => m.saturating_sub(n / p as usize),
        DeltaShape::General => m.saturating_sub(n),
    }
}

/// Checks `P_{m,n} ∈ (p,T)^{bound}` for every entry of a plain-basis matrix.
pub fn verify_lwx_bounds<W: Word>(mm: &MahlerMatrix<W>, delta: &MonoidElement) -> LwxReport {
    let desc = mm.plain.ctx();
    let p = desc.p();
    let shape = delta.shape(p);
    let mut report = LwxReport {
        shape,
        checked: 0,
        unverified: 0,
        violations: vec![],
        min_slack: None,
    };
    for m in 0..mm.size {
        for n in 0..mm.size {
            let x = mm.plain.get(m, n);
            let bound = lwx_bound(shape, p, m, n);
            match in_pt_power(x, bound) {
                Some(true) => report.checked += 1,
                Some(false) => {
                    report.checked += 1;
                    report.violations.push(BoundViolation {
                        m,
                        n,
                        valuation: pt_val(x).expect("violating entry is nonzero"),
                        bound,
                    });
                }
                None => report.unverified += 1,
            }
            if bound > 0 {
                if let Some(v) = pt_val(x) {
                    if v >= bound && report.min_slack.map_or(true, |(_, _, s)| v - bound < s) {
                        report.min_slack = Some((m, n, v - bound));
                    }
                }
            }
        }
    }
    report
}
