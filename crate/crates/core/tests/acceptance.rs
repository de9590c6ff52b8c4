//! One PASS/FAIL line per acceptance criterion.

use halo_core::decomp::{
    eliminate_lower_left, lower_left, nh_decompose_finite, nh_decompose_infinite_truncated,
    nh_decompose_noncommutative, noncomm::IdealPowers, slope_pairing_check,
};
use halo_core::halo::{
    assemble_up_matrix, char_series, coefficient_bound_check, halo_report, CharSeries, FamilyKind, HaloReport,
    UpAssembly,
};
use halo_core::io::assembly_from_json;
use halo_core::mahler::{
    check_modified_integrality, mahler_matrix, verify_lwx_bounds, Basis, CharacterSpec, DeltaShape, MonoidElement,
};
use halo_core::matrix::Matrix;
use halo_core::polygon::{
    hodge_function, is_lambda_stable, lambda_check, newton_function, newton_polygon, touching_vertices, SlopeProfile, Q,
    DEFAULT_MINOR_CAP,
};
use halo_core::ring::{FpCtx, FpSeries, RingDescriptor, Valuation};
use halo_core::{Element, FiniteGroup};
use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn profile(v: &[usize]) -> SlopeProfile {
    SlopeProfile::new(v.to_vec()).unwrap()
}

fn slopes(m: &Matrix<FpSeries>) -> Vec<Q> {
    newton_polygon(m).unwrap().slope_list()
}

// ---------- brute-force minors ----------

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(vec![], false)];
    }
    let mut out = Vec::new();
    for (perm, odd) in permutations(n - 1) {
        for pos in 0..=perm.len() {
            let mut q = perm.clone();
            q.insert(pos, n - 1);
            out.push((q, odd ^ ((perm.len() - pos) % 2 == 1)));
        }
    }
    out
}

fn leibniz(rows: &[Vec<FpSeries>], ctx: FpCtx) -> FpSeries {
    let mut acc = FpSeries::zero(ctx);
    for (perm, odd) in permutations(rows.len()) {
        let mut term = FpSeries::one(ctx);
        for (i, &j) in perm.iter().enumerate() {
            term = term.mul(&rows[i][j]);
        }
        acc = if odd { acc.sub(&term) } else { acc.add(&term) };
    }
    acc
}

fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

fn minor(m: &Matrix<FpSeries>, r: &[usize], c: &[usize]) -> FpSeries {
    let rows: Vec<Vec<FpSeries>> = r.iter().map(|&i| c.iter().map(|&j| m.get(i, j).clone()).collect()).collect();
    leibniz(&rows, *m.ctx())
}

fn oracle_newton(m: &Matrix<FpSeries>, k: usize) -> Valuation {
    if k == 0 {
        return Valuation::Exact(0);
    }
    let mut s = FpSeries::zero(*m.ctx());
    for idx in combos(m.rows(), k) {
        s = s.add(&minor(m, &idx, &idx));
    }
    s.vt_valuation()
}

fn oracle_hodge(m: &Matrix<FpSeries>, k: usize) -> Valuation {
    if k == 0 {
        return Valuation::Exact(0);
    }
    let mut best = Valuation::AtLeastPrecision;
    for r in combos(m.rows(), k) {
        for c in combos(m.cols(), k) {
            best = best.min(minor(m, &r, &c).vt_valuation());
        }
    }
    best
}

// ---------- generators ----------

fn rand_series(rng: &mut ChaCha8Rng, ctx: FpCtx, min_val: usize) -> FpSeries {
    let c: Vec<u64> = (0..ctx.t_prec).map(|i| if i < min_val { 0 } else { rng.gen_range(0..ctx.p) }).collect();
    FpSeries::new(ctx.p, ctx.t_prec, &c)
}

fn rand_unit(rng: &mut ChaCha8Rng, ctx: FpCtx) -> FpSeries {
    rand_series(rng, ctx, 1).add(&FpSeries::constant(ctx, rng.gen_range(1..ctx.p)))
}

fn rand_entry(rng: &mut ChaCha8Rng, ctx: FpCtx) -> FpSeries {
    if rng.gen_bool(0.15) {
        return FpSeries::zero(ctx);
    }
    let v = rng.gen_range(0..5usize);
    rand_series(rng, ctx, v)
}

fn rand_matrix(rng: &mut ChaCha8Rng, ctx: FpCtx, n: usize) -> Matrix<FpSeries> {
    let data: Vec<FpSeries> = (0..n * n).map(|_| rand_entry(rng, ctx)).collect();
    Matrix::from_vec(&ctx, n, n, data).unwrap()
}

/// Invertible `P` with `v_T(P_ij) >= λ_i - λ_j` below the diagonal.
fn rand_stable_unit(rng: &mut ChaCha8Rng, ctx: FpCtx, lam: &[usize]) -> Matrix<FpSeries> {
    let n = lam.len();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(if i == j {
                rand_unit(rng, ctx)
            } else if i < j {
                rand_series(rng, ctx, 0)
            } else {
                rand_series(rng, ctx, (lam[i] - lam[j]).max(1))
            });
        }
    }
    Matrix::from_vec(&ctx, n, n, data).unwrap()
}

fn rand_profile(rng: &mut ChaCha8Rng, len: usize, strict: bool) -> Vec<usize> {
    let mut lam = vec![rng.gen_range(0..2usize)];
    for _ in 1..len {
        let step = if strict { rng.gen_range(1..3) } else { rng.gen_range(0..3) };
        lam.push(lam.last().unwrap() + step);
    }
    lam
}

fn conjugate(p0: &Matrix<FpSeries>, d: &Matrix<FpSeries>) -> Matrix<FpSeries> {
    p0.mul(d).unwrap().mul(&p0.inverse().unwrap()).unwrap()
}

// ---------- criteria ----------

fn c1_polygon_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checks = 0;
    for case in 0..200 {
        let p = [3u64, 5][case % 2];
        let ctx = FpCtx { p, t_prec: 12 };
        let n = rng.gen_range(1..=5);
        let m = rand_matrix(&mut rng, ctx, n);
        for k in 0..=n {
            let nv = newton_function(&m, k).map_err(|e| e.to_string())?;
            let hv = hodge_function(&m, k, DEFAULT_MINOR_CAP).map_err(|e| e.to_string())?;
            ensure(nv == oracle_newton(&m, k), || format!("case {case}: N(M,{k}) = {nv:?}"))?;
            ensure(hv == oracle_hodge(&m, k), || format!("case {case}: H(M,{k}) = {hv:?}"))?;
            checks += 2;
        }
    }
    Ok(format!("200 matrices, {checks} values equal to minor enumeration"))
}

fn c2_hodge_from_newton() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let p = [3u64, 5][case % 2];
        let n = rng.gen_range(2..=5);
        let lam = rand_profile(&mut rng, n, false);
        let ctx = FpCtx { p, t_prec: lam.iter().sum::<usize>() + 4 };
        let u = rand_stable_unit(&mut rng, ctx, &vec![0; n]);
        let m = Matrix::t_diagonal(&ctx, &lam).mul(&u).unwrap();
        let flags = lambda_check(&m, &profile(&lam)).map_err(|e| e.to_string())?;
        ensure(flags.strictly_hodge_bounded, || format!("case {case}: not strictly bounded"))?;
        let total: usize = lam.iter().sum();
        ensure(newton_function(&m, n).unwrap() == Valuation::Exact(total), || format!("case {case}: N(M,n)"))?;
        let mut acc = 0;
        for k in 0..=n {
            if k > 0 {
                acc += lam[k - 1];
            }
            let h = hodge_function(&m, k, DEFAULT_MINOR_CAP).map_err(|e| e.to_string())?;
            ensure(h == Valuation::Exact(acc), || format!("case {case}: H(M,{k}) = {h:?}, want {acc}"))?;
            ensure(h == oracle_hodge(&m, k), || format!("case {case}: oracle disagrees at {k}"))?;
        }
    }
    Ok("100 matrices, H(M,k) = λ_1 + ... + λ_k at every k".into())
}

fn c3_finite_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    while cases < 50 {
        let p = [3u64, 5][cases % 2];
        let n = rng.gen_range(2..=5);
        let lam = rand_profile(&mut rng, n, true);
        let ctx = FpCtx { p, t_prec: lam.iter().sum::<usize>() + 6 };
        let p0 = rand_stable_unit(&mut rng, ctx, &lam);
        let m = conjugate(&p0, &Matrix::t_diagonal(&ctx, &lam));
        let all = slopes(&m);
        let tv = touching_vertices(&m, &profile(&lam), DEFAULT_MINOR_CAP).map_err(|e| e.to_string())?;
        let Some(&s) = tv.iter().find(|&&s| s > 0 && s < n) else {
            return Err(format!("planted instance {lam:?} has no interior touching vertex"));
        };
        let dec = nh_decompose_finite(&m, s, &profile(&lam)).map_err(|e| format!("λ = {lam:?}, s = {s}: {e}"))?;
        ensure(dec.w.mul(&m).unwrap() == dec.result.mul(&dec.w).unwrap(), || format!("W M != R W for {lam:?}"))?;
        ensure(lower_left(&dec.result, s).is_zero(), || format!("lower-left nonzero for {lam:?}"))?;
        ensure(is_lambda_stable(&dec.w, &lam), || format!("W not λ-stable for {lam:?}"))?;
        ensure(slopes(&dec.result.block(0, s, 0, s)) == all[..s], || format!("top slopes differ for {lam:?}"))?;
        cases += 1;
    }
    Ok("50 planted instances round-trip exactly".into())
}

fn c4_gain_ladder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut cases, mut rejected, mut steps) = (0, 0, 0);
    while cases < 50 {
        let p = [3u64, 5][cases % 2];
        let ctx = FpCtx { p, t_prec: 14 };
        let lam = vec![0usize, 1, 3, 4];
        let s = 2;
        let u = rand_stable_unit(&mut rng, ctx, &lam);
        let mut m = Matrix::t_diagonal(&ctx, &lam).mul(&u).unwrap();
        for i in s..4 {
            for j in 0..s {
                let v = lam[i].max(lam[s - 1] + 1);
                m.set(i, j, rand_series(&mut rng, ctx, v));
            }
        }
        let lp = profile(&lam);
        let (_, dec) = match eliminate_lower_left(&m, s, &lp) {
            Ok(x) => x,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let c = lower_left(&m, s);
        let Some(h) = c.min_valuation().exact() else {
            cases += 1;
            continue;
        };
        let eps = h - lam[s - 1];
        let tr = dec.trace.ok_or("missing trace")?;
        let mut prev: Option<usize> = None;
        for (k, st) in tr.iterations.iter().enumerate() {
            let want = lam[s - 1] + k * eps;
            ensure(st.lower_left_before.is_at_least(want.min(ctx.t_prec)), || {
                format!("case {cases}: step {k} has H = {:?} < {want}", st.lower_left_before)
            })?;
            if let (Some(a), Some(b)) = (prev, st.lower_left_before.exact()) {
                ensure(b >= a + eps, || format!("case {cases}: gain {} < {eps} at step {k}", b - a))?;
            }
            prev = st.lower_left_before.exact();
            steps += 1;
        }
        ensure(lower_left(&dec.result, s).is_zero(), || format!("case {cases}: not eliminated mod T^N"))?;
        ensure(dec.w.mul(&m).unwrap() == dec.result.mul(&dec.w).unwrap(), || format!("case {cases}: round trip"))?;
        cases += 1;
    }
    Ok(format!("50 instances, {steps} iterations gain >= ε each ({rejected} draws outside the hypotheses)"))
}

fn nc_instance(rng: &mut ChaCha8Rng, d: &Arc<RingDescriptor<u64>>) -> Matrix<Element> {
    let n = d.t_prec();
    let r = d.group_order();
    let q = d.p().pow(d.p_prec());
    let mut elt = |min_t: usize, in_m: bool| -> Element {
        let mut c = vec![0u64; n * r];
        for t in min_t..n {
            for g in 0..r {
                c[t * r + g] = rng.gen_range(0..q);
            }
        }
        let x = Element::from_coeffs(d, c).unwrap();
        if in_m {
            x.mul(&Element::group_element(d, 1).sub(&Element::one(d)))
        } else {
            x
        }
    };
    let mut m = Matrix::zeros(d, 2, 2);
    m.set(0, 0, Element::t_power(d, 1).add(&elt(2, false)));
    m.set(0, 1, elt(1, false));
    m.set(1, 0, elt(3, true));
    m.set(1, 1, Element::t_power(d, 3).add(&elt(4, false)));
    m
}

fn c5_noncommutative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut iterations = 0;
    for g in [FiniteGroup::cyclic(3), FiniteGroup::heisenberg(3)] {
        let order = g.order();
        let d = RingDescriptor::new(3, 2, 8, Some(g)).map_err(|e| e.to_string())?;
        let ip = IdealPowers::new(&d);
        let alpha = 3;
        for case in 0..20 {
            let m = nc_instance(&mut rng, &d);
            let dec = nh_decompose_noncommutative(&m, 1, &profile(&[1, 3]), alpha, None)
                .map_err(|e| format!("|G| = {order}, case {case}: {e}"))?;
            ensure(dec.certificates.round_trip, || format!("|G| = {order}, case {case}: round trip"))?;
            ensure(is_lambda_stable(&dec.w, &[1, 3]), || format!("|G| = {order}, case {case}: Y not λ-stable"))?;
            let tr = dec.trace.ok_or("missing trace")?;
            for (k, st) in tr.iterations.iter().enumerate() {
                let depth = st.depth.ok_or("missing depth")?;
                ensure(depth >= (k + 2).min(ip.nilpotency()), || {
                    format!("|G| = {order}, case {case}: depth {depth} after {} iterations", k + 1)
                })?;
            }
            // recompute the final lower-left block from Y M Y^-1 and expand it in the ideal basis
            let y_inv = dec.w.inverse().map_err(|e| e.to_string())?;
            let conj = dec.w.mul(&m).unwrap().mul(&y_inv).unwrap();
            ensure(conj == dec.result, || format!("|G| = {order}, case {case}: result != Y M Y^-1"))?;
            let ll = lower_left(&conj, 1);
            let k = tr.iterations.len();
            ensure(ll.is_zero() || ip.matrix_depth(&ll.div_t(alpha)) >= (k + 1).min(ip.nilpotency()), || {
                format!("|G| = {order}, case {case}: final block outside m^{}", k + 1)
            })?;
            iterations += k;
        }
    }
    Ok(format!("40 instances over C_3 and the Heisenberg group, {iterations} iterations on the ladder"))
}

fn random_delta(rng: &mut ChaCha8Rng, p: u64, shape: DeltaShape) -> MonoidElement {
    let pi = p as i64;
    loop {
        let a = rng.gen_range(-50..50i64) * if shape == DeltaShape::PDividesA { pi } else { 1 };
        let b = rng.gen_range(-50..50i64);
        let c = pi * rng.gen_range(-50..50i64);
        let d = rng.gen_range(-50..50i64);
        if d % pi != 0 && a * d - b * c != 0 && (shape == DeltaShape::PDividesA || a % pi != 0) {
            return MonoidElement::new(a, b, c, d, p).unwrap();
        }
    }
}

/// Runs the bound fuzz; returns (summary, number of modified matrices that were not integral).
fn c6_bound_fuzz() -> (Outcome, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let size = 24;
    let (mut entries, mut non_integral) = (0usize, 0usize);
    for p in [3u64, 5] {
        let desc = RingDescriptor::<u64>::new(p, size as u32, size, None).unwrap();
        for shape in [DeltaShape::PDividesA, DeltaShape::General] {
            for case in 0..500 {
                let d = random_delta(&mut rng, p, shape);
                let mm = match mahler_matrix(&d, &CharacterSpec::universal(), &desc, size, Basis::Modified) {
                    Ok(mm) => mm,
                    Err(e) => return (Err(format!("p = {p}, {d:?}: {e}")), non_integral),
                };
                if check_modified_integrality(&mm).is_err() {
                    non_integral += 1;
                }
                let r = verify_lwx_bounds(&mm, &d);
                if r.shape != shape || !r.violations.is_empty() || r.unverified > 0 {
                    return (
                        Err(format!(
                            "p = {p}, {shape:?} case {case}: {} violations, {} unverified",
                            r.violations.len(),
                            r.unverified
                        )),
                        non_integral,
                    );
                }
                entries += r.checked;
            }
        }
    }
    (Ok(format!("2000 elements, {entries} entries, zero violations")), non_integral)
}

fn c7_mahler_goldens(non_integral: usize) -> Outcome {
    let desc = RingDescriptor::<u64>::new(3, 4, 4, None).unwrap();
    let cst = |v: i64| Element::from_int(&desc, v);
    let t = MonoidElement::new(1, 1, 0, 1, 3).unwrap();
    let mm = mahler_matrix(&t, &CharacterSpec::trivial(), &desc, 8, Basis::Plain).map_err(|e| e.to_string())?;
    for m in 0..8 {
        for n in 0..8 {
            let want = cst(i64::from(m == n || m + 1 == n));
            ensure(mm.plain.get(m, n) == &want, || format!("translation entry ({m},{n})"))?;
        }
    }
    let dil = MonoidElement::new(3, 0, 0, 1, 3).unwrap();
    let mm = mahler_matrix(&dil, &CharacterSpec::trivial(), &desc, 3, Basis::Plain).map_err(|e| e.to_string())?;
    let col: Vec<Element> = (0..3).map(|m| mm.plain.get(m, 2).clone()).collect();
    ensure(col == [cst(0), cst(3), cst(9)], || format!("dilation column {col:?}"))?;
    ensure(non_integral == 0, || format!("{non_integral} fuzz matrices not integral in the modified basis"))?;
    Ok("Pascal 8x8, dilation column (0,3,9), 2000 modified matrices integral".into())
}

fn load(name: &str) -> UpAssembly {
    let path = format!("{}/../../data/assemblies/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    assembly_from_json(&serde_json::from_str(&text).unwrap()).unwrap()
}

/// `λ_n = ⌊n/S⌋ - ⌊n/(pS)⌋` and its partial sums `μ_0..=μ_len`.
fn mu_from_formula(s: usize, p: usize, len: usize) -> Vec<usize> {
    let mut mu = vec![0];
    for n in 0..len {
        mu.push(mu[n] + n / s - n / (p * s));
    }
    mu
}

fn vp(x: &BigUint, p: u64) -> usize {
    let (mut x, mut v) = (x.clone(), 0);
    let pb = BigUint::from(p);
    while Zero::is_zero(&(&x % &pb)) {
        x /= &pb;
        v += 1;
    }
    v
}

struct AssemblyRun {
    name: &'static str,
    s: usize,
    series: CharSeries<BigUint>,
}

fn c8_coefficient_bounds(runs: &mut Vec<AssemblyRun>) -> Outcome {
    let terms = 18;
    let mut lines = Vec::new();
    for (name, prec, size) in [("a1_s1.json", 110u32, 36usize), ("a2_s2.json", 56, 18)] {
        let asm = load(name);
        let desc = RingDescriptor::<BigUint>::new(3, prec, prec as usize, None).map_err(|e| e.to_string())?;
        let op = assemble_up_matrix(&asm, &desc, size).map_err(|e| format!("{name}: {e}"))?;
        let cs = char_series(&op, terms).map_err(|e| format!("{name}: {e}"))?;
        let mu = mu_from_formula(asm.s, 3, terms);
        ensure(mu == op.profile.mu_sequence(terms), || format!("{name}: weight profile differs from λ formula"))?;
        let report = coefficient_bound_check(&cs, &mu);
        ensure(report.passed(), || format!("{name}: bound check failed"))?;
        // direct check of every visible coefficient
        for n in 0..=terms {
            for m in 0..prec as usize {
                let b = cs.b(n, m);
                ensure(Zero::is_zero(b) || vp(b, 3) + m >= mu[n], || format!("{name}: v_p(b_{{{n},{m}}}) too small"))?;
            }
            ensure(mu[n] <= prec as usize, || format!("{name}: μ_{n} beyond the working precision"))?;
            if let Some(c) = cs.certified[n] {
                ensure(c >= mu[n], || format!("{name}: c_{n} certified only to {c} < μ_{n} = {}", mu[n]))?;
            }
        }
        lines.push(format!("{name}: tight at {}/{} indices", report.tight.len(), terms + 1));
        runs.push(AssemblyRun {
            name,
            s: asm.s,
            series: cs,
        });
    }
    Ok(format!("n <= 18; {}", lines.join("; ")))
}

/// Independent specialization at `v_t = a/b` in integer grading: `p` has degree `b`, `T` degree `a`.
/// Returns the certified slope (scaled by `b`) of every index, `None` if uncertified.
fn graded_slopes(cs: &CharSeries<BigUint>, s: usize, a: i64, b: i64) -> Vec<Option<Q>> {
    let desc = cs.coeffs[0].descriptor();
    let (m_prec, n_prec) = (desc.p_prec() as i64, desc.t_prec());
    let terms = cs.coeffs.len() - 1;
    let mu = mu_from_formula(s, 3, 8 * terms + 64);
    // (value, exact) in degree units
    let mut pts: Vec<(i64, bool)> = Vec::new();
    for n in 0..=terms {
        let mut cap = (m_prec * b).min(n_prec as i64 * a);
        if let Some(c) = cs.certified[n] {
            cap = cap.min(c as i64 * a);
        }
        let degs: Vec<i64> = (0..n_prec)
            .filter(|&m| !Zero::is_zero(cs.b(n, m)))
            .map(|m| vp(cs.b(n, m), 3) as i64 * b + m as i64 * a)
            .collect();
        let min = degs.iter().min().copied();
        match min {
            Some(v) if v < cap => pts.push((v, degs.iter().filter(|&&d| d == v).count() == 1)),
            _ => pts.push((cap.max(mu[n] as i64 * a), false)),
        }
    }
    // lower hull of the known values
    let known: Vec<(i64, i64)> = pts
        .iter()
        .enumerate()
        .filter(|(n, (_, ex))| *ex || *n == 0)
        .map(|(n, &(v, _))| (n as i64, v))
        .collect();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &known {
        while hull.len() >= 2 {
            let (o, a1) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a1.0 - o.0) * (pt.1 - o.1) - (a1.1 - o.1) * (pt.0 - o.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = vec![None; terms];
    for w in hull.windows(2) {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        let slope = Q::new(y2 - y1, x2 - x1);
        let line = |x: i64| Q::from(y1) + slope * Q::from(x - x1);
        let others_ok = pts.iter().enumerate().all(|(n, &(v, ex))| ex || n == 0 || Q::from(v) >= line(n as i64));
        let tail_ok = (terms + 1..mu.len()).all(|x| Q::from(mu[x] as i64 * a) >= line(x as i64));
        if others_ok && tail_ok {
            for i in x1..x2 {
                out[i as usize] = Some(slope / Q::from(b));
            }
        }
    }
    out
}

fn classify_independent(ratios: &[Q], p: i64) -> FamilyKind {
    if ratios.iter().all(|r| *r == ratios[0]) {
        return FamilyKind::Minus { level: ratios[0] / Q::from(p - 1) };
    }
    let lo = *ratios.iter().min().unwrap();
    let hi = *ratios.iter().max().unwrap();
    let u = Q::from(p - 1);
    if lo > Q::zero() && hi < u {
        return FamilyKind::Plus { l: 0 };
    }
    for l in (1..64usize).step_by(2) {
        if lo > u * Q::from(l as i64) && hi < u * Q::from(l as i64 + 2) {
            return FamilyKind::Plus { l };
        }
    }
    FamilyKind::Fail
}

fn kind_at(report: &HaloReport, i: usize) -> Option<&FamilyKind> {
    report.families.iter().find(|f| f.start <= i && i < f.end).map(|f| &f.kind)
}

fn c9_halo(runs: &[AssemblyRun]) -> Outcome {
    if runs.is_empty() {
        return Err("no characteristic series from criterion 8".into());
    }
    let grid = [(1i64, 4i64), (1, 3), (1, 2), (2, 3)];
    let qgrid: Vec<Q> = grid.iter().map(|&(a, b)| Q::new(a, b)).collect();
    let mut lines = Vec::new();
    for run in runs {
        let report = halo_report(&run.series, &qgrid, 3).map_err(|e| format!("{}: {e}", run.name))?;
        let indep: Vec<Vec<Option<Q>>> = grid.iter().map(|&(a, b)| graded_slopes(&run.series, run.s, a, b)).collect();
        let terms = run.series.coeffs.len() - 1;
        let mut classified = 0;
        for i in 1..=terms {
            let ratios: Option<Vec<Q>> =
                indep.iter().zip(&qgrid).map(|(sl, v)| sl[i - 1].map(|s| s / v)).collect();
            let flagged = report.flagged.contains(&i);
            match (ratios, flagged) {
                (Some(r), false) => {
                    let mine = classify_independent(&r, 3);
                    ensure(kind_at(&report, i) == Some(&mine), || {
                        format!("{}: index {i} classified {:?}, independent {mine:?}", run.name, kind_at(&report, i))
                    })?;
                    classified += 1;
                }
                (None, true) => {}
                (r, f) => {
                    return Err(format!("{}: index {i} certified by one route only (independent {}, flagged {f})", run.name, r.is_some()))
                }
            }
        }
        let minus = report.families.iter().filter(|f| matches!(f.kind, FamilyKind::Minus { .. })).map(|f| f.end - f.start).sum::<usize>();
        let plus = report.families.iter().filter(|f| matches!(f.kind, FamilyKind::Plus { .. })).map(|f| f.end - f.start).sum::<usize>();
        ensure(report.failures.is_empty(), || format!("{}: FAIL at indices {:?}", run.name, report.failures))?;
        lines.push(format!(
            "{}: {classified} classified ({minus} '-', {plus} '+'), {} flagged, 0 FAIL",
            run.name,
            report.flagged.len()
        ));
    }
    Ok(lines.join("; "))
}

fn c10_pairing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..100 {
        let p = [3u64, 5][case % 2];
        let ctx = FpCtx { p, t_prec: 24 };
        let n = rng.gen_range(2..=3);
        let lam = rand_profile(&mut rng, n, true);
        let k = lam[n - 1] + rng.gen_range(0..3);
        let p0 = rand_stable_unit(&mut rng, ctx, &lam);
        let a = conjugate(&p0, &Matrix::t_diagonal(&ctx, &lam));
        let comp: Vec<usize> = lam.iter().map(|l| k - l).collect();
        let u_scalar = rand_unit(&mut rng, ctx);
        let u = Matrix::from_fn(&ctx, n, n, |i, j| if i == j { u_scalar.clone() } else { FpSeries::zero(ctx) });
        let b = conjugate(&p0, &Matrix::t_diagonal(&ctx, &comp)).mul(&u).unwrap();
        let rep = slope_pairing_check(&a, &b, &u, k).map_err(|e| format!("case {case}: {e}"))?;
        ensure(rep.pairs.len() == n, || format!("case {case}: {} pairs", rep.pairs.len()))?;
        ensure(rep.pairs.iter().all(|(x, y)| *x + *y == Q::from(k as i64)), || format!("case {case}: pair sums"))?;
        ensure(rep.slopes_a == slopes(&a), || format!("case {case}: slopes of A"))?;
    }
    Ok("100 triples, every pair sums to k".into())
}

fn banded(rng: &mut ChaCha8Rng, ctx: FpCtx, lam: &[usize], band: usize) -> Matrix<FpSeries> {
    let n = lam.len();
    let mut m = Matrix::zeros(&ctx, n, n);
    for i in 0..n {
        for j in 0..n {
            if j > i + band {
                continue;
            }
            let u = if i == j {
                rand_unit(rng, ctx)
            } else if j < i {
                rand_series(rng, ctx, 1)
            } else {
                rand_series(rng, ctx, 0)
            };
            m.set(i, j, u.mul_t_pow(lam[i]));
        }
    }
    m
}

fn c11_window_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lam: Vec<usize> = (1..=8).collect();
    let hi = FpCtx { p: 3, t_prec: 40 };
    let n_prec = 12;
    for case in 0..10 {
        let m_hi = banded(&mut rng, hi, &lam, 2);
        let m = m_hi.retruncate(n_prec);
        let small = m.block(0, 7, 0, 7);
        let omega7: Vec<usize> = (0..=7).collect();
        let omega8: Vec<usize> = (0..=8).collect();
        let d7 = nh_decompose_infinite_truncated(&small, &profile(&lam), &omega7).map_err(|e| format!("case {case}: {e}"))?;
        let d8 = nh_decompose_infinite_truncated(&m, &profile(&lam), &omega8).map_err(|e| format!("case {case}: {e}"))?;
        ensure(d7.certificates.window_stable == Some(true), || format!("case {case}: window 7 certificate"))?;
        ensure(d8.certificates.window_stable == Some(true), || format!("case {case}: window 8 certificate"))?;
        let c7 = d7.result.block(0, 1, 0, 1).charpoly().unwrap();
        let c8 = d8.result.block(0, 1, 0, 1).charpoly().unwrap();
        ensure(c7 == c8, || format!("case {case}: top block moved between windows 7 and 8"))?;
        ensure(lower_left(&d8.result, 1).is_zero(), || format!("case {case}: lower-left nonzero"))?;
    }
    Ok("10 banded instances, top block fixed mod T^12 from window 7 to 8".into())
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome, Duration, Option<Duration>)> = Vec::new();
    let mut push = |n, name, (r, d): (Outcome, Duration), limit| results.push((n, name, r, d, limit));
    push(1, "polygon oracle equivalence", timed(c1_polygon_oracle), Some(Duration::from_secs(10)));
    push(2, "Hodge from Newton", timed(c2_hodge_from_newton), None);
    push(3, "finite decomposition round trip", timed(c3_finite_decomposition), Some(Duration::from_secs(30)));
    push(4, "elimination gain ladder", timed(c4_gain_ladder), None);
    push(5, "noncommutative decomposition", timed(c5_noncommutative), None);
    let t = Instant::now();
    let (r6, non_integral) = c6_bound_fuzz();
    push(6, "Mahler bound fuzz", (r6, t.elapsed()), None);
    push(7, "Mahler golden values", timed(|| c7_mahler_goldens(non_integral)), None);
    let mut runs = Vec::new();
    push(8, "characteristic series bounds", timed(|| c8_coefficient_bounds(&mut runs)), Some(Duration::from_secs(60)));
    push(9, "halo scaling", timed(|| c9_halo(&runs)), None);
    push(10, "slope pairing", timed(c10_pairing), None);
    push(11, "infinite-window stability", timed(c11_window_stability), None);

    let mut failed = Vec::new();
    for (n, name, r, d, limit) in &results {
        let over = limit.is_some_and(|l| *d > l);
        let (tag, detail) = match r {
            Ok(s) if !over => ("PASS", s.clone()),
            Ok(s) => ("FAIL", format!("{s}; took longer than {:?}", limit.unwrap())),
            Err(e) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed.push(*n);
        }
        // written past the test harness capture so the lines show in plain `cargo test` runs
        let line = format!("{tag} {n:>2} {name} [{:.1}s]: {detail}\n", d.as_secs_f64());
        let _ = std::io::stdout().write_all(line.as_bytes());
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
