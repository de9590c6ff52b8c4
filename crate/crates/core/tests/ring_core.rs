use halo_core::io::{format_element, parse_element};
use halo_core::padic::{binom_padic, padic_unit_decompose};
use halo_core::ring::{FpCtx, FpSeries, RingDescriptor, TruncatedRingElement, Valuation};
use halo_core::{Element, FiniteGroup, HaloError, WideElement};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn c3_ring(m: u32, n: usize) -> Arc<RingDescriptor<u64>> {
    RingDescriptor::new(3, m, n, Some(FiniteGroup::cyclic(3))).unwrap()
}

fn el(s: &str, d: &Arc<RingDescriptor<u64>>) -> Element {
    parse_element(s, d).unwrap()
}

#[test]
fn valuation_examples() {
    let f3 = FpCtx { p: 3, t_prec: 8 };
    let x = FpSeries::new(3, 8, &[0, 1, 1]);
    assert_eq!(x.vt_valuation(), Valuation::Exact(1));
    assert_eq!(FpSeries::zero(f3).vt_valuation(), Valuation::AtLeastPrecision);
    let d = RingDescriptor::<u64>::new(3, 2, 8, None).unwrap();
    assert_eq!(el("3*T^2", &d).vt_valuation(), Valuation::Exact(2));
}

#[test]
fn reduction_examples() {
    let d = c3_ring(2, 8);
    assert!(el("(g - 1)*T^2", &d).reduce_to_fp().is_zero());
    let d1 = RingDescriptor::<u64>::new(3, 2, 8, None).unwrap();
    assert_eq!(el("3 + T", &d1).reduce_to_fp(), FpSeries::new(3, 8, &[0, 1]));
    assert_eq!(el("4 + g*T", &d).reduce_to_fp(), FpSeries::new(3, 8, &[1, 1]));
}

#[test]
fn special_lift_examples() {
    let d9 = RingDescriptor::<u64>::new(3, 2, 8, None).unwrap();
    let x = FpSeries::new(3, 8, &[0, 1, 0, 2]);
    let l = Element::special_lift(&x, &d9).unwrap();
    assert_eq!(format_element(&l), "2*T^3 + 1*T");
    let z = Element::special_lift(&FpSeries::new(3, 8, &[]), &d9).unwrap();
    assert_eq!(z.vt_valuation(), Valuation::AtLeastPrecision);
    let d = c3_ring(2, 8);
    let l = Element::special_lift(&FpSeries::new(3, 8, &[0, 2]), &d).unwrap();
    assert_eq!(format_element(&l), "2*e*T");
    assert_eq!(l.vt_valuation(), Valuation::Exact(1));
}

#[test]
fn unit_inverse_examples() {
    let x = FpSeries::new(3, 4, &[1, 2]);
    assert_eq!(x.unit_inverse().unwrap(), FpSeries::new(3, 4, &[1, 1, 1, 1]));
    let t = FpSeries::new(3, 4, &[0, 1]);
    assert_eq!(t.unit_inverse(), Err(HaloError::NotAUnit));
}

/// Solves `x*y = 1` in `(Z/9)[C_3]` by brute force over all 9^3 candidates.
#[test]
fn group_algebra_inverse_matches_brute_force() {
    let d = c3_ring(2, 1);
    let x = el("1 + (g - 1)", &d);
    let y = x.unit_inverse().unwrap();
    let mut found = Vec::new();
    for a in 0..9u64 {
        for b in 0..9u64 {
            for c in 0..9u64 {
                let cand = Element::from_coeffs(&d, vec![a, b, c]).unwrap();
                if x.mul(&cand) == Element::one(&d) {
                    found.push(cand);
                }
            }
        }
    }
    assert_eq!(found, vec![y.clone()]);
    assert_eq!(format_element(&y), "1*g^2");
}

#[test]
fn padic_decompose_examples() {
    let (w, e) = padic_unit_decompose(&BigUint::from(1u32), 3, 3).unwrap();
    assert_eq!((w, e), (BigUint::from(1u32), BigUint::from(0u32)));
    // 4 = 1 mod 3, so its Teichmüller representative is 1 and 4 = (1+3)^1.
    let (w, e) = padic_unit_decompose(&BigUint::from(4u32), 3, 3).unwrap();
    assert_eq!(w, BigUint::from(1u32));
    assert_eq!(e, BigUint::from(1u32));
    assert_eq!(padic_unit_decompose(&BigUint::from(3u32), 3, 3), Err(HaloError::NotAUnit));
}

fn enumerate_log(v: u64, p: u64, m: u32) -> u64 {
    let q = p.pow(m);
    let mut acc = 1u64;
    for k in 0..p.pow(m - 1) {
        if acc == v % q {
            return k;
        }
        acc = acc * (1 + p) % q;
    }
    panic!("no discrete log");
}

#[test]
fn padic_decompose_exhaustive_p3_m3() {
    let (p, m) = (3u64, 3u32);
    let q = p.pow(m);
    for x in (1..q).filter(|x| x % p != 0) {
        let (w, e) = padic_unit_decompose(&BigUint::from(x), p, m).unwrap();
        let w = w.to_u64_digits().first().copied().unwrap_or(0);
        let e = e.to_u64_digits().first().copied().unwrap_or(0);
        assert_eq!(w.pow(2) % q, 1, "teichmuller of {x}");
        assert_eq!(w % p, x % p);
        let winv = (1..q).find(|y| y * w % q == 1).unwrap();
        assert_eq!(e, enumerate_log(x * winv % q, p, m));
    }
}

#[test]
fn padic_recomposition_p3_p5() {
    for p in [3u64, 5] {
        for m in 1..=4u32 {
            let q = BigUint::from(p).pow(m);
            for x in (1..p.pow(m)).filter(|x| x % p != 0) {
                let xb = BigUint::from(x);
                let (w, e) = padic_unit_decompose(&xb, p, m).unwrap();
                let back = (w * BigUint::from(1 + p).modpow(&e, &q)) % &q;
                assert_eq!(back, xb);
            }
        }
    }
}

#[test]
fn binom_padic_examples() {
    let z = BigUint::from(13u32);
    assert_eq!(binom_padic(&z, 4, 0, 3, 3).unwrap(), BigUint::from(1u32));
    assert_eq!(binom_padic(&z, 4, 2, 3, 3).unwrap(), BigUint::from(24u32));
    assert_eq!(binom_padic(&z, 4, 1, 3, 3).unwrap(), BigUint::from(13u32));
    assert!(matches!(
        binom_padic(&z, 3, 3, 3, 3),
        Err(HaloError::InsufficientGuardDigits { .. })
    ));
}

/// `binom(z, n)` only depends on `z mod p^(M + floor(log_p n))`.
#[test]
fn binom_padic_depends_only_on_guarded_residue() {
    let (p, m) = (3u64, 3u32);
    for n in 0..30u64 {
        let g = halo_core::padic::binom_guard(p, n);
        let k = m + g;
        let pk = p.pow(k);
        for z in 0..pk.min(200) {
            let a = binom_padic(&BigUint::from(z), 20, n, p, m).unwrap();
            let b = binom_padic(&BigUint::from(z + 7 * pk), 20, n, p, m).unwrap();
            assert_eq!(a, b, "z={z} n={n}");
            assert_eq!(binom_padic(&BigUint::from(z), k, n, p, m).unwrap(), a);
        }
    }
}

#[test]
fn element_text_round_trip() {
    let d = c3_ring(1, 3);
    let x = el("(1*e + 2*g)*T^2 + 3*e", &d);
    assert_eq!(format_element(&x), "(1*e + 2*g)*T^2");
    let d9 = c3_ring(2, 3);
    let x = el("(1*e + 2*g)*T^2 + 3*e", &d9);
    assert_eq!(format_element(&x), "(1*e + 2*g)*T^2 + 3*e");
    assert_eq!(parse_element(&format_element(&x), &d9).unwrap(), x);
    let h = RingDescriptor::<u64>::new(3, 2, 3, Some(FiniteGroup::heisenberg(3))).unwrap();
    let y = parse_element::<u64>("x*y + 2*y*x*T + z^2", &h).unwrap();
    assert_eq!(parse_element(&format_element(&y), &h).unwrap(), y);
    assert!(parse_element::<u64>("q + 1", &d9).is_err());
}

#[test]
fn heisenberg_is_nonabelian_of_order_27() {
    let g = FiniteGroup::heisenberg(3);
    assert_eq!(g.order(), 27);
    assert!(!g.is_abelian());
    assert!(g.is_p_group(3));
}

#[test]
fn descriptor_validation() {
    assert!(RingDescriptor::<u64>::new(2, 1, 4, None).is_err());
    assert!(RingDescriptor::<u64>::new(9, 1, 4, None).is_err());
    assert!(RingDescriptor::<u64>::new(3, 0, 4, None).is_err());
    assert!(RingDescriptor::<u64>::new(5, 1, 4, Some(FiniteGroup::cyclic(3))).is_err());
    assert!(RingDescriptor::<u64>::new(3, 60, 4, None).is_err());
    assert!(RingDescriptor::<BigUint>::new(3, 60, 4, None).is_ok());
    let bad = FiniteGroup::from_table(vec!["e".into(), "a".into()], vec![vec![0, 1], vec![1, 1]]);
    assert!(bad.is_err());
}

fn random_element(rng: &mut ChaCha8Rng, d: &Arc<RingDescriptor<u64>>) -> Element {
    let q = d.modulus();
    let coeffs = (0..d.t_prec() * d.group_order()).map(|_| rng.gen_range(0..*q)).collect();
    Element::from_coeffs(d, coeffs).unwrap()
}

#[test]
fn unit_inverse_round_trip_all_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rings = [
        RingDescriptor::<u64>::new(3, 1, 6, None).unwrap(),
        RingDescriptor::<u64>::new(5, 3, 6, None).unwrap(),
        c3_ring(2, 5),
        RingDescriptor::<u64>::new(3, 2, 3, Some(FiniteGroup::heisenberg(3))).unwrap(),
    ];
    let mut count = 0;
    while count < 1000 {
        let d = &rings[count % rings.len()];
        let x = random_element(&mut rng, d);
        if !x.is_unit() {
            assert_eq!(x.unit_inverse(), Err(HaloError::NotAUnit));
            continue;
        }
        let y = x.unit_inverse().unwrap();
        assert_eq!(x.mul(&y), Element::one(d));
        assert_eq!(y.mul(&x), Element::one(d));
        count += 1;
    }
    // F_p[[T]] family through FpSeries
    for _ in 0..200 {
        let c: Vec<u64> = (0..7).map(|_| rng.gen_range(0..5)).collect();
        let x = FpSeries::new(5, 7, &c);
        if let Ok(y) = x.unit_inverse() {
            assert_eq!(x.mul(&y), FpSeries::one(FpCtx { p: 5, t_prec: 7 }));
        }
    }
}

#[test]
fn wide_and_narrow_words_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dn = RingDescriptor::<u64>::new(3, 20, 9, None).unwrap();
    let dw = RingDescriptor::<BigUint>::new(3, 20, 9, None).unwrap();
    for _ in 0..100 {
        let a = random_element(&mut rng, &dn);
        let b = random_element(&mut rng, &dn);
        let aw: WideElement = a.with_p_prec(&dw);
        let bw: WideElement = b.with_p_prec(&dw);
        let prod: Element = aw.mul(&bw).with_p_prec(&dn);
        assert_eq!(prod, a.mul(&b));
    }
}

proptest! {
    /// If `v_T(x) >= k` and `x` reduces to zero, then so does `x / T^k`.
    #[test]
    fn t_divisible_property(seed in 0u64..10_000, k in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = c3_ring(2, 6);
        let a = random_element(&mut rng, &d);
        let b = random_element(&mut rng, &d);
        // element of m: p*a + (g-1)*b
        let m_el = a.scale(&3).add(&el("g - 1", &d).mul(&b));
        let x = m_el.mul_t_pow(k);
        prop_assert!(x.vt_valuation().is_at_least(k));
        prop_assert!(x.reduce_to_fp().is_zero());
        let w = x.div_t_pow(k);
        prop_assert_eq!(w.mul_t_pow(k), x.clone());
        prop_assert!(w.reduce_to_fp().is_zero());
    }

    #[test]
    fn special_lift_preserves_valuation(c in proptest::collection::vec(0u64..3, 6)) {
        let x = FpSeries::new(3, 6, &c);
        for d in [c3_ring(2, 6), RingDescriptor::<u64>::new(3, 3, 6, None).unwrap()] {
            let l = Element::special_lift(&x, &d).unwrap();
            prop_assert_eq!(l.vt_valuation(), x.vt_valuation());
            prop_assert_eq!(l.reduce_to_fp(), x.clone());
        }
    }

    #[test]
    fn ring_axioms_group_algebra(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = RingDescriptor::<u64>::new(3, 2, 3, Some(FiniteGroup::heisenberg(3))).unwrap();
        let a = random_element(&mut rng, &d);
        let b = random_element(&mut rng, &d);
        let c = random_element(&mut rng, &d);
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b).reduce_to_fp(), a.reduce_to_fp().mul(&b.reduce_to_fp()));
        let t = Element::t_power(&d, 1);
        prop_assert_eq!(a.mul(&t), t.mul(&a));
    }
}

#[test]
fn ring_descriptor_is_shared() {
    let d = c3_ring(2, 4);
    let x = TruncatedRingElement::one(&d);
    assert!(Arc::ptr_eq(x.descriptor(), &d));
}
