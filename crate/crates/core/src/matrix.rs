//! Dense matrices over the truncated rings.

use crate::error::{HaloError, Result};
use crate::ring::{modpow_u64, FpSeries, RingElement, Valuation};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<R: RingElement> {
    rows: usize,
    cols: usize,
    ctx: R::Ctx,
    data: Vec<R>,
}

impl<R: RingElement> Matrix<R> {
    pub fn from_vec(ctx: &R::Ctx, rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HaloError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| &x.ctx() != ctx) {
            return Err(HaloError::DimensionMismatch("entries from different rings".into()));
        }
        Ok(Matrix {
            rows,
            cols,
            ctx: ctx.clone(),
            data,
        })
    }

    pub fn from_fn(ctx: &R::Ctx, rows: usize, cols: usize, f: impl Fn(usize, usize) -> R) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Matrix {
            rows,
            cols,
            ctx: ctx.clone(),
            data,
        }
    }

    pub fn zeros(ctx: &R::Ctx, rows: usize, cols: usize) -> Self {
        Self::from_fn(ctx, rows, cols, |_, _| R::zero_in(ctx))
    }

    pub fn identity(ctx: &R::Ctx, n: usize) -> Self {
        Self::from_fn(ctx, n, n, |i, j| if i == j { R::one_in(ctx) } else { R::zero_in(ctx) })
    }

    pub fn diagonal(ctx: &R::Ctx, d: &[R]) -> Self {
        Self::from_fn(ctx, d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { R::zero_in(ctx) })
    }

    /// `diag(T^l_1, ..., T^l_n)`.
    pub fn t_diagonal(ctx: &R::Ctx, l: &[usize]) -> Self {
        Self::from_fn(ctx, l.len(), l.len(), |i, j| {
            if i == j {
                R::t_pow_in(ctx, l[i])
            } else {
                R::zero_in(ctx)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn ctx(&self) -> &R::Ctx {
        &self.ctx
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }
    pub fn entries(&self) -> &[R] {
        &self.data
    }
    pub fn t_prec(&self) -> usize {
        R::t_prec_of(&self.ctx)
    }

    fn same_shape(&self, o: &Self) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(HaloError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(self.zip_with(o, |a, b| a.add(b)))
    }
    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(self.zip_with(o, |a, b| a.sub(b)))
    }
    fn zip_with(&self, o: &Self, f: impl Fn(&R, &R) -> R) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            ctx: self.ctx.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }
    pub fn map(&self, f: impl Fn(&R) -> R) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            ctx: self.ctx.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }
    pub fn neg(&self) -> Self {
        self.map(|x| x.neg())
    }
    pub fn scale_left(&self, s: &R) -> Self {
        self.map(|x| s.mul(x))
    }
    pub fn mul_t(&self, k: usize) -> Self {
        self.map(|x| x.mul_t(k))
    }
    pub fn div_t(&self, k: usize) -> Self {
        self.map(|x| x.div_t(k))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(HaloError::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let dims = (self.rows, self.cols, o.cols);
        if self.rows == 0 || o.cols == 0 {
            return Ok(Self::zeros(&self.ctx, self.rows, o.cols));
        }
        if self.cols > 0 {
            if let Some(data) = R::fast_matmul(&self.data, &o.data, dims) {
                return Ok(Matrix {
                    rows: self.rows,
                    cols: o.cols,
                    ctx: self.ctx.clone(),
                    data,
                });
            }
        }
        let (n, k, m) = dims;
        let data: Vec<R> = (0..n * m)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let mut acc = R::zero_in(&self.ctx);
                for t in 0..k {
                    let a = &self.data[i * k + t];
                    let b = &o.data[t * m + j];
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                acc
            })
            .collect();
        Ok(Matrix {
            rows: n,
            cols: m,
            ctx: self.ctx.clone(),
            data,
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(&self.ctx, r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    /// `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let mut m = Self::zeros(&a.ctx, a.rows + c.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(0, a.cols, b);
        m.set_block(a.rows, 0, c);
        m.set_block(a.rows, a.cols, d);
        m
    }

    /// Split at `s`: `(A, B, C, D)` with `A` the top-left `s x s` block.
    pub fn split(&self, s: usize) -> (Self, Self, Self, Self) {
        let n = self.rows;
        (
            self.block(0, s, 0, s),
            self.block(0, s, s, n),
            self.block(s, n, 0, s),
            self.block(s, n, s, n),
        )
    }

    /// Applies `P M P^-1` for the permutation sending index `perm[i]` to position `i`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        Self::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(perm[i], perm[j]).clone())
    }

    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(perm[i], j).clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// `H(M,1)`: minimal entry valuation.
    pub fn min_valuation(&self) -> Valuation {
        self.data
            .iter()
            .map(|x| x.vt())
            .fold(Valuation::AtLeastPrecision, |a, b| a.min(b))
    }

    pub fn row_valuation(&self, i: usize) -> Valuation {
        (0..self.cols)
            .map(|j| self.get(i, j).vt())
            .fold(Valuation::AtLeastPrecision, |a, b| a.min(b))
    }

    /// Same matrix read in a ring with another T-precision.
    pub fn retruncate(&self, t_prec: usize) -> Self {
        let ctx = R::retruncate_ctx(&self.ctx, t_prec);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.retruncate(&ctx)).collect(),
            ctx,
        }
    }

    pub fn reduce(&self) -> Matrix<FpSeries> {
        let data: Vec<FpSeries> = self.data.iter().map(|x| x.reduce()).collect();
        let ctx = crate::ring::FpCtx {
            p: R::prime_of(&self.ctx),
            t_prec: self.t_prec(),
        };
        Matrix {
            rows: self.rows,
            cols: self.cols,
            ctx,
            data,
        }
    }

    /// Entrywise special lift of a matrix over `F_p[[T]]`.
    pub fn lift_from(ctx: &R::Ctx, m: &Matrix<FpSeries>) -> Self {
        Self::from_fn(ctx, m.rows, m.cols, |i, j| R::lift(ctx, m.get(i, j)))
    }

    /// Kronecker product.
    pub fn kron(&self, o: &Self) -> Self {
        Self::from_fn(&self.ctx, self.rows * o.rows, self.cols * o.cols, |i, j| {
            self.get(i / o.rows, j / o.cols).mul(o.get(i % o.rows, j % o.cols))
        })
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::identity(&self.ctx, self.rows);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Characteristic polynomial `det(xI - M)` by Berkowitz' division-free algorithm.
    ///
    /// Returns `c` with `det(xI - M) = sum_k c[k] x^(n-k)`; equivalently `c[k]` is the
    /// coefficient of `X^k` in `det(I - XM)`.
    pub fn charpoly(&self) -> Result<Vec<R>> {
        if !self.is_square() {
            return Err(HaloError::DimensionMismatch("charpoly of a non-square matrix".into()));
        }
        if !R::commutative(&self.ctx) {
            return Err(HaloError::NoncommutativeRing);
        }
        let ctx = &self.ctx;
        let n = self.rows;
        let one = R::one_in(ctx);
        let mut v = vec![one.clone()];
        for r in 0..n {
            let a = self.get(r, r);
            // t = [1, -a, -R C, -R A C, ..., -R A^(r-1) C]
            let mut t = Vec::with_capacity(r + 2);
            t.push(one.clone());
            t.push(a.neg());
            let mut col: Vec<R> = (0..r).map(|i| self.get(i, r).clone()).collect();
            for _ in 0..r {
                let mut s = R::zero_in(ctx);
                for (j, cj) in col.iter().enumerate() {
                    s = s.add(&self.get(r, j).mul(cj));
                }
                t.push(s.neg());
                col = (0..r)
                    .map(|i| {
                        let mut s = R::zero_in(ctx);
                        for (j, cj) in col.iter().enumerate() {
                            s = s.add(&self.get(i, j).mul(cj));
                        }
                        s
                    })
                    .collect();
            }
            let mut nv = Vec::with_capacity(r + 2);
            for i in 0..r + 2 {
                let mut s = R::zero_in(ctx);
                for (j, vj) in v.iter().enumerate() {
                    if j <= i {
                        s = s.add(&t[i - j].mul(vj));
                    }
                }
                nv.push(s);
            }
            v = nv;
        }
        Ok(v)
    }

    /// Coefficients `c_0..=c_k` of `det(I - XM)`, Berkowitz' recursion cut at degree `k`.
    pub fn charpoly_truncated(&self, k: usize) -> Result<Vec<R>> {
        Ok(self.charpoly_truncated_leading(k, &[self.rows])?.remove(0))
    }

    /// Truncated charpolys of the leading principal submatrices of the given sizes, from one pass.
    pub fn charpoly_truncated_leading(&self, k: usize, sizes: &[usize]) -> Result<Vec<Vec<R>>> {
        if !self.is_square() {
            return Err(HaloError::DimensionMismatch("charpoly of a non-square matrix".into()));
        }
        if sizes.iter().any(|&m| m > self.rows) {
            return Err(HaloError::DimensionMismatch("leading size exceeds the matrix".into()));
        }
        if !R::commutative(&self.ctx) {
            return Err(HaloError::NoncommutativeRing);
        }
        let ctx = &self.ctx;
        let n = self.rows;
        let one = R::one_in(ctx);
        let mut v = vec![one.clone()];
        let mut snaps: Vec<Option<Vec<R>>> = vec![None; sizes.len()];
        let mut snap = |r: usize, v: &Vec<R>| {
            for (slot, &m) in snaps.iter_mut().zip(sizes) {
                if m == r {
                    let mut c = v.clone();
                    c.resize(k + 1, R::zero_in(ctx));
                    *slot = Some(c);
                }
            }
        };
        snap(0, &v);
        for r in 0..n {
            let len = (r + 2).min(k + 1);
            let mut t = vec![one.clone(), self.get(r, r).neg()];
            t.truncate(len);
            if len > 2 {
                let a = self.block(0, r, 0, r);
                let row = self.block(r, r + 1, 0, r);
                let col = self.block(0, r, r, r + 1);
                let steps = len - 2;
                let krylov = match R::fast_krylov(&a.data, &row.data, &col.data, steps) {
                    Some(x) => x,
                    None => {
                        let mut out = Vec::with_capacity(steps);
                        let mut col = col;
                        for i in 0..steps {
                            out.push(row.mul(&col)?.get(0, 0).clone());
                            if i + 1 < steps {
                                col = a.mul(&col)?;
                            }
                        }
                        out
                    }
                };
                t.extend(krylov.iter().map(|x| x.neg()));
            }
            v = (0..len)
                .map(|i| {
                    let mut s = R::zero_in(ctx);
                    for (j, vj) in v.iter().enumerate().take(i + 1) {
                        s = s.add(&t[i - j].mul(vj));
                    }
                    s
                })
                .collect();
            snap(r + 1, &v);
        }
        Ok(snaps.into_iter().map(|c| c.expect("every size visited")).collect())
    }

    pub fn det(&self) -> Result<R> {
        let c = self.charpoly()?;
        let n = self.rows;
        let last = c[n].clone();
        Ok(if n % 2 == 1 { last.neg() } else { last })
    }

    /// Reduction modulo the maximal ideal, as a matrix over `F_p`.
    pub fn residue_matrix(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).reduce().coeffs()[0]).collect())
            .collect()
    }

    /// Inverse via the residue-field inverse refined by Newton iteration.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(HaloError::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let p = R::prime_of(&self.ctx);
        let n = self.rows;
        let inv0 = fp_matrix_inverse(&self.residue_matrix(), p).ok_or(HaloError::NotAUnit)?;
        let ctx = &self.ctx;
        let mut z = Self::from_fn(ctx, n, n, |i, j| R::int_in(ctx, inv0[i][j] as i64));
        let id = Self::identity(ctx, n);
        for _ in 0..80 {
            let e = id.sub(&self.mul(&z)?)?;
            if e.is_zero() {
                return Ok(z);
            }
            z = z.add(&z.mul(&e)?)?;
        }
        Err(HaloError::PrecisionExhausted("matrix inversion did not converge".into()))
    }
}

/// Inverse of a matrix over `F_p` by Gaussian elimination.
pub fn fp_matrix_inverse(a: &[Vec<u64>], p: u64) -> Option<Vec<Vec<u64>>> {
    let n = a.len();
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<u64> = r.iter().map(|x| x % p).collect();
            row.extend((0..n).map(|j| u64::from(i == j)));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| m[r][c] != 0)?;
        m.swap(c, piv);
        let inv = modpow_u64(m[c][c], p - 2, p);
        for x in m[c].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..n {
            if r != c && m[r][c] != 0 {
                let f = m[r][c];
                for k in 0..2 * n {
                    m[r][k] = (m[r][k] + (p - f) * m[c][k]) % p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Rank of a matrix over `F_p`.
pub fn fp_rank(a: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = modpow_u64(m[rank][c], p - 2, p);
        for r in 0..rows {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c] * inv % p;
                for k in 0..cols {
                    m[r][k] = (m[r][k] + (p - f) * m[rank][k]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}
