//! Residue storage for coefficients modulo q = p^M.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;

/// A machine or big-integer word holding a residue in `[0, q)`.
pub trait Word: Clone + PartialEq + Eq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64, q: &Self) -> Self;
    fn from_big(v: &BigUint, q: &Self) -> Self;
    fn to_big(&self) -> BigUint;
    fn is_zero(&self) -> bool;
    fn add_mod(&self, o: &Self, q: &Self) -> Self;
    fn sub_mod(&self, o: &Self, q: &Self) -> Self;
    fn mul_mod(&self, o: &Self, q: &Self) -> Self;
    fn rem_u64(&self, m: u64) -> u64;
    /// Integer quotient, discarding the remainder.
    fn div_u64(&self, d: u64) -> Self;
    /// Whether a modulus built from `p^m` fits this word.
    fn supports(p: u64, m: u32) -> bool;
    /// Unreduced conversion; panics if the value does not fit.
    fn exact(v: &BigUint) -> Self;

    /// Product of matrices of series, `a` is n x k, `b` is k x m, row-major.
    fn series_matmul(
        a: &[Vec<Self>],
        b: &[Vec<Self>],
        dims: (usize, usize, usize),
        len: usize,
        q: &Self,
    ) -> Vec<Vec<Self>> {
        use rayon::prelude::*;
        let (n, k, m) = dims;
        (0..n * m)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let pairs: Vec<(&[Self], &[Self])> = (0..k)
                    .map(|t| (a[i * k + t].as_slice(), b[t * m + j].as_slice()))
                    .collect();
                Self::series_dot(&pairs, len, q)
            })
            .collect()
    }

    /// `row · a^i · col` for `i < steps`; `a` is r x r row-major, `row` and `col` have length r.
    fn series_krylov(
        a: &[Vec<Self>],
        row: &[Vec<Self>],
        col: &[Vec<Self>],
        steps: usize,
        len: usize,
        q: &Self,
    ) -> Vec<Vec<Self>> {
        let r = row.len();
        let mut v = col.to_vec();
        let mut out = Vec::with_capacity(steps);
        for i in 0..steps {
            out.push(Self::series_matmul(row, &v, (1, r, 1), len, q).remove(0));
            if i + 1 < steps {
                v = Self::series_matmul(a, &v, (r, r, 1), len, q);
            }
        }
        out
    }

    fn neg_mod(&self, q: &Self) -> Self {
        Self::zero().sub_mod(self, q)
    }

    /// `sum_k a_k * b_k` truncated to `len` coefficients, reduced mod q.
    fn series_dot(pairs: &[(&[Self], &[Self])], len: usize, q: &Self) -> Vec<Self> {
        let mut out = vec![Self::zero(); len];
        for (a, b) in pairs {
            for (i, ai) in a.iter().enumerate().take(len) {
                if ai.is_zero() {
                    continue;
                }
                for (j, bj) in b.iter().enumerate().take(len - i) {
                    if bj.is_zero() {
                        continue;
                    }
                    out[i + j] = out[i + j].add_mod(&ai.mul_mod(bj, q), q);
                }
            }
        }
        out
    }
}

impl Word for u64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn from_u64(v: u64, q: &Self) -> Self {
        v % q
    }
    fn from_big(v: &BigUint, q: &Self) -> Self {
        (v % BigUint::from(*q)).to_u64().unwrap()
    }
    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_mod(&self, o: &Self, q: &Self) -> Self {
        let s = self + o;
        if s >= *q {
            s - q
        } else {
            s
        }
    }
    fn sub_mod(&self, o: &Self, q: &Self) -> Self {
        if self >= o {
            self - o
        } else {
            self + q - o
        }
    }
    fn mul_mod(&self, o: &Self, q: &Self) -> Self {
        ((*self as u128 * *o as u128) % *q as u128) as u64
    }
    fn rem_u64(&self, m: u64) -> u64 {
        self % m
    }
    fn div_u64(&self, d: u64) -> Self {
        self / d
    }
    fn supports(p: u64, m: u32) -> bool {
        (p as u128)
            .checked_pow(m)
            .map(|q| q < (1u128 << 63))
            .unwrap_or(false)
    }
    fn exact(v: &BigUint) -> Self {
        v.to_u64().expect("value exceeds u64")
    }

    fn series_dot(pairs: &[(&[Self], &[Self])], len: usize, q: &Self) -> Vec<Self> {
        let qq = *q as u128;
        let mut acc = vec![0u128; len];
        for (a, b) in pairs {
            for (i, &ai) in a.iter().enumerate().take(len) {
                if ai == 0 {
                    continue;
                }
                for (j, &bj) in b.iter().enumerate().take(len - i) {
                    if bj == 0 {
                        continue;
                    }
                    let s = acc[i + j] + ai as u128 * bj as u128;
                    acc[i + j] = if s >= 1u128 << 126 { s % qq } else { s };
                }
            }
        }
        acc.into_iter().map(|x| (x % qq) as u64).collect()
    }
}

impl Word for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_u64(v: u64, q: &Self) -> Self {
        BigUint::from(v) % q
    }
    fn from_big(v: &BigUint, q: &Self) -> Self {
        v % q
    }
    fn to_big(&self) -> BigUint {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_mod(&self, o: &Self, q: &Self) -> Self {
        let s = self + o;
        if &s >= q {
            s - q
        } else {
            s
        }
    }
    fn sub_mod(&self, o: &Self, q: &Self) -> Self {
        if self >= o {
            self - o
        } else {
            self + q - o
        }
    }
    fn mul_mod(&self, o: &Self, q: &Self) -> Self {
        (self * o) % q
    }
    fn rem_u64(&self, m: u64) -> u64 {
        (self % m).to_u64().unwrap()
    }
    fn div_u64(&self, d: u64) -> Self {
        self.div_floor(&BigUint::from(d))
    }
    fn supports(_p: u64, _m: u32) -> bool {
        true
    }
    fn exact(v: &BigUint) -> Self {
        v.clone()
    }

    /// Kronecker substitution: pack each series into one integer, multiply once per pair.
    fn series_dot(pairs: &[(&[Self], &[Self])], len: usize, q: &Self) -> Vec<Self> {
        if len == 0 {
            return Vec::new();
        }
        let terms = pairs.len().max(1) as u64 * len as u64;
        let slot = 2 * q.bits() + (64 - terms.leading_zeros() as u64) + 1;
        let mut acc = <BigUint as Zero>::zero();
        for (a, b) in pairs {
            let pa = pack(a, len, slot);
            if Zero::is_zero(&pa) {
                continue;
            }
            let pb = pack(b, len, slot);
            if Zero::is_zero(&pb) {
                continue;
            }
            acc += pa * pb;
        }
        unpack(&acc, len, slot, q)
    }

    fn series_krylov(
        a: &[Vec<Self>],
        row: &[Vec<Self>],
        col: &[Vec<Self>],
        steps: usize,
        len: usize,
        q: &Self,
    ) -> Vec<Vec<Self>> {
        use rayon::prelude::*;
        let r = row.len();
        if len == 0 {
            return vec![Vec::new(); steps];
        }
        let terms = r.max(1) as u64 * len as u64;
        let slot = 2 * q.bits() + (64 - terms.leading_zeros() as u64) + 1;
        let pa: Vec<BigUint> = a.par_iter().map(|x| pack(x, len, slot)).collect();
        let prow: Vec<BigUint> = row.iter().map(|x| pack(x, len, slot)).collect();
        let dot = |lhs: &[BigUint], v: &[BigUint]| {
            let mut acc = <BigUint as Zero>::zero();
            for (x, y) in lhs.iter().zip(v) {
                if !Zero::is_zero(x) && !Zero::is_zero(y) {
                    acc += x * y;
                }
            }
            acc
        };
        let mut v: Vec<BigUint> = col.iter().map(|x| pack(x, len, slot)).collect();
        let mut out = Vec::with_capacity(steps);
        for i in 0..steps {
            out.push(unpack(&dot(&prow, &v), len, slot, q));
            if i + 1 < steps {
                v = (0..r)
                    .into_par_iter()
                    .map(|k| pack(&unpack(&dot(&pa[k * r..(k + 1) * r], &v), len, slot, q), len, slot))
                    .collect();
            }
        }
        out
    }

    fn series_matmul(
        a: &[Vec<Self>],
        b: &[Vec<Self>],
        dims: (usize, usize, usize),
        len: usize,
        q: &Self,
    ) -> Vec<Vec<Self>> {
        use rayon::prelude::*;
        let (n, k, m) = dims;
        if len == 0 {
            return vec![Vec::new(); n * m];
        }
        let terms = k.max(1) as u64 * len as u64;
        let slot = 2 * q.bits() + (64 - terms.leading_zeros() as u64) + 1;
        let pa: Vec<BigUint> = a.par_iter().map(|x| pack(x, len, slot)).collect();
        let pb: Vec<BigUint> = b.par_iter().map(|x| pack(x, len, slot)).collect();
        (0..n * m)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let mut acc = <BigUint as Zero>::zero();
                for t in 0..k {
                    let x = &pa[i * k + t];
                    let y = &pb[t * m + j];
                    if Zero::is_zero(x) || Zero::is_zero(y) {
                        continue;
                    }
                    acc += x * y;
                }
                unpack(&acc, len, slot, q)
            })
            .collect()
    }
}

fn pack(a: &[BigUint], len: usize, slot: u64) -> BigUint {
    let n = a.len().min(len);
    let total = (n as u64 * slot).div_ceil(64) as usize + 1;
    let mut buf = vec![0u64; total];
    for (i, c) in a.iter().take(n).enumerate() {
        let start = i as u64 * slot;
        let w0 = (start / 64) as usize;
        let sh = start % 64;
        for (k, d) in c.to_u64_digits().into_iter().enumerate() {
            buf[w0 + k] |= d << sh;
            if sh > 0 {
                buf[w0 + k + 1] |= d >> (64 - sh);
            }
        }
    }
    let mut u32s = Vec::with_capacity(buf.len() * 2);
    for w in buf {
        u32s.push(w as u32);
        u32s.push((w >> 32) as u32);
    }
    BigUint::new(u32s)
}

fn unpack(v: &BigUint, len: usize, slot: u64, q: &BigUint) -> Vec<BigUint> {
    let digits = v.to_u64_digits();
    let total_bits = digits.len() as u64 * 64;
    let mut out = Vec::with_capacity(len);
    for i in 0..len as u64 {
        let start = i * slot;
        if start >= total_bits {
            out.push(<BigUint as Zero>::zero());
            continue;
        }
        out.push(extract_bits(&digits, start, slot) % q);
    }
    out
}

fn extract_bits(digits: &[u64], start: u64, width: u64) -> BigUint {
    let first = (start / 64) as usize;
    let shift = start % 64;
    let words = ((shift + width).div_ceil(64)) as usize;
    let mut out = Vec::with_capacity(words);
    for k in 0..words {
        let lo = digits.get(first + k).copied().unwrap_or(0);
        let hi = digits.get(first + k + 1).copied().unwrap_or(0);
        let w = if shift == 0 {
            lo
        } else {
            (lo >> shift) | (hi << (64 - shift))
        };
        out.push(w);
    }
    let rem = width % 64;
    let full = (width / 64) as usize;
    out.truncate(full + usize::from(rem > 0));
    if rem > 0 {
        if let Some(last) = out.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
    let mut u32s = Vec::with_capacity(out.len() * 2);
    for w in out {
        u32s.push(w as u32);
        u32s.push((w >> 32) as u32);
    }
    BigUint::new(u32s)
}

/// `p^e` as a word, unreduced.
pub fn pow_word<W: Word>(p: u64, e: u32) -> W {
    W::exact(&BigUint::from(p).pow(e))
}
