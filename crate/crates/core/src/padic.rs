//! p-adic scalar helpers: Teichmüller splitting and binomial coefficients.

use crate::error::{HaloError, Result};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

pub fn big_pow(p: u64, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}

/// p-adic valuation of a nonzero integer.
pub fn vp_big(x: &BigUint, p: u64) -> u32 {
    assert!(!x.is_zero());
    let pb = BigUint::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        y = q;
        v += 1;
    }
}

pub fn vp_u64(mut x: u64, p: u64) -> u32 {
    assert!(x != 0);
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Largest `k` with `p^k <= n` (zero for `n <= 1`).
pub fn floor_log(p: u64, n: u64) -> u32 {
    let mut k = 0;
    let mut pk = p;
    while pk <= n {
        k += 1;
        pk = match pk.checked_mul(p) {
            Some(v) => v,
            None => break,
        };
    }
    k
}

/// `v_p(n!)`.
pub fn vp_factorial(p: u64, n: u64) -> u32 {
    let mut v = 0;
    let mut pk = p;
    while pk <= n {
        v += (n / pk) as u32;
        pk = match pk.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    v
}

pub fn inv_mod(x: &BigUint, q: &BigUint) -> Result<BigUint> {
    x.modinv(q).ok_or(HaloError::NotAUnit)
}

/// Splits a unit `x mod p^m` as `omega(x) * (1+p)^e(x)` with `omega(x)^(p-1) = 1`.
///
/// Returns `(omega, e)` with `e` reduced mod `p^(m-1)`.
pub fn padic_unit_decompose(x: &BigUint, p: u64, m: u32) -> Result<(BigUint, BigUint)> {
    let q = big_pow(p, m);
    let x = x % &q;
    if (&x % p).is_zero() {
        return Err(HaloError::NotAUnit);
    }
    let omega = x.modpow(&big_pow(p, m - 1), &q);
    let v = (&x * inv_mod(&omega, &q)?) % &q;
    Ok((omega, principal_log(&v, p, m)))
}

/// Discrete log of `v = 1 mod p` to base `1+p` in `(Z/p^m)^x`, as a residue mod `p^(m-1)`.
pub fn principal_log(v: &BigUint, p: u64, m: u32) -> BigUint {
    let q = big_pow(p, m);
    let gen = BigUint::from(1 + p);
    let gen_inv = inv_mod(&gen, &q).expect("1+p is a unit");
    let mut cur = v % &q;
    let mut e = BigUint::zero();
    let mut pi = BigUint::one();
    for i in 0..m.saturating_sub(1) {
        let digit = ((&cur - 1u32) / big_pow(p, i + 1)) % p;
        if !digit.is_zero() {
            let step = gen_inv.modpow(&(&digit * &pi), &q);
            cur = (cur * step) % &q;
            e += &digit * &pi;
        }
        pi *= p;
    }
    debug_assert!(cur.is_one() || m == 0);
    e
}

/// Guard digits needed so that `binom(z, j)` for `j <= n` is determined mod `p^m`
/// by `z mod p^(m + guard)`.
pub fn binom_guard(p: u64, n: u64) -> u32 {
    floor_log(p, n)
}

/// `binom(z, n) mod p^m` from `z` known modulo `p^z_prec`.
pub fn binom_padic(z: &BigUint, z_prec: u32, n: u64, p: u64, m: u32) -> Result<BigUint> {
    let row = binom_row(z, z_prec, n, p, m)?;
    Ok(row.into_iter().last().expect("nonempty row"))
}

/// `binom(z, j) mod p^m` for `j = 0..=n`, using the representative of `z` in `[0, p^z_prec)`.
pub fn binom_row(z: &BigUint, z_prec: u32, n: u64, p: u64, m: u32) -> Result<Vec<BigUint>> {
    let need = m + binom_guard(p, n);
    if z_prec < need {
        return Err(HaloError::InsufficientGuardDigits { need, have: z_prec });
    }
    let zq = big_pow(p, z_prec);
    let z = z % &zq;
    let q = big_pow(p, m);
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(BigUint::one() % &q);
    let mut unit = BigUint::one();
    let mut val: i64 = 0;
    let mut dead = false;
    let pb = BigUint::from(p);
    for j in 1..=n {
        if dead {
            out.push(BigUint::zero());
            continue;
        }
        let jm1 = BigUint::from(j - 1);
        if z <= jm1 {
            dead = true;
            out.push(BigUint::zero());
            continue;
        }
        let mut f = &z - jm1;
        while (&f % &pb).is_zero() {
            f /= &pb;
            val += 1;
        }
        let mut d = j;
        while d % p == 0 {
            d /= p;
            val -= 1;
        }
        unit = (unit * (f % &q)) % &q;
        unit = (unit * inv_mod(&BigUint::from(d), &q)?) % &q;
        debug_assert!(val >= 0);
        if val as u64 >= m as u64 {
            out.push(BigUint::zero());
        } else {
            out.push((&unit * big_pow(p, val as u32)) % &q);
        }
    }
    Ok(out)
}

/// Exact `binom(n, k)` for small arguments.
pub fn binom_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub fn to_u64(x: &BigUint) -> u64 {
    x.to_u64().expect("fits u64")
}
