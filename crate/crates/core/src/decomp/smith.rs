//! Smith normal form over `F_p[[T]]/T^N`.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::ring::{FpSeries, Valuation};

#[derive(Debug, Clone)]
pub struct SmithForm {
    /// `u * m * v` is diagonal with entries `T^{diag[i]}` on the pivots found.
    pub u: Matrix<FpSeries>,
    pub v: Matrix<FpSeries>,
    pub diag: Vec<Valuation>,
}

/// Smith form with at most `max_pivots` pivot steps (all of them when `None`).
///
/// Pivots are taken of minimal valuation, first in row-major order.
pub fn smith_form(m: &Matrix<FpSeries>, max_pivots: Option<usize>) -> Result<SmithForm> {
    let (rows, cols) = (m.rows(), m.cols());
    let ctx = *m.ctx();
    let mut a: Vec<Vec<FpSeries>> = (0..rows).map(|i| (0..cols).map(|j| m.get(i, j).clone()).collect()).collect();
    let mut u: Vec<Vec<FpSeries>> = identity_rows(ctx, rows);
    let mut v: Vec<Vec<FpSeries>> = identity_rows(ctx, cols);
    let steps = rows.min(cols).min(max_pivots.unwrap_or(usize::MAX));
    let mut diag = Vec::new();
    for k in 0..steps {
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                if let Some(val) = x.vt_valuation().exact() {
                    if best.map_or(true, |b| val < b.2) {
                        best = Some((i, j, val));
                    }
                }
            }
        }
        let Some((pi, pj, val)) = best else { break };
        a.swap(k, pi);
        u.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        for row in v.iter_mut() {
            row.swap(k, pj);
        }
        // normalize the pivot to T^val
        let inv = a[k][k].div_t_pow(val).unit_inverse()?;
        for x in a[k].iter_mut() {
            *x = x.mul(&inv);
        }
        for x in u[k].iter_mut() {
            *x = x.mul(&inv);
        }
        for i in k + 1..rows {
            if a[i][k].is_zero() {
                continue;
            }
            let f = a[i][k].div_t_pow(val);
            for j in 0..cols {
                let t = f.mul(&a[k][j]);
                a[i][j] = a[i][j].sub(&t);
            }
            for j in 0..rows {
                let t = f.mul(&u[k][j]);
                u[i][j] = u[i][j].sub(&t);
            }
        }
        for j in k + 1..cols {
            if a[k][j].is_zero() {
                continue;
            }
            let f = a[k][j].div_t_pow(val);
            for row in a.iter_mut() {
                let t = row[k].mul(&f);
                row[j] = row[j].sub(&t);
            }
            for row in v.iter_mut() {
                let t = row[k].mul(&f);
                row[j] = row[j].sub(&t);
            }
        }
        diag.push(Valuation::Exact(val));
    }
    Ok(SmithForm {
        u: Matrix::from_vec(&ctx, rows, rows, u.into_iter().flatten().collect())?,
        v: Matrix::from_vec(&ctx, cols, cols, v.into_iter().flatten().collect())?,
        diag,
    })
}

fn identity_rows(ctx: crate::ring::FpCtx, n: usize) -> Vec<Vec<FpSeries>> {
    (0..n)
        .map(|i| (0..n).map(|j| FpSeries::constant(ctx, u64::from(i == j))).collect())
        .collect()
}
