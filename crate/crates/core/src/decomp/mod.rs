//! Newton–Hodge block triangularization.

pub mod eliminate;
pub mod finite;
pub mod hensel;
pub mod infinite;
pub mod noncomm;
pub mod pairing;
pub mod smith;

pub use eliminate::eliminate_lower_left;
pub use finite::nh_decompose_finite;
pub use hensel::{hensel_slope_factor, SeriesPoly};
pub use infinite::{ell_m, nh_decompose_infinite_truncated};
pub use noncomm::nh_decompose_noncommutative;
pub use pairing::{slope_pairing_check, PairingReport};
pub use smith::{smith_form, SmithForm};

use crate::matrix::Matrix;
use crate::polygon::{is_hodge_bounded, is_lambda_stable, Polygon, Q};
use crate::ring::{FpSeries, RingElement, Valuation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificates {
    pub w_lambda_stable: bool,
    pub result_hodge_bounded: bool,
    /// Valuation of the lower-left block of the result.
    pub residual_valuation: Valuation,
    /// `W*M = result*W` holds exactly at the working precision.
    pub round_trip: bool,
    /// Top-block slopes agree with the first `s` Newton slopes (finite routes only).
    pub top_slopes_match: Option<bool>,
    /// Achieved `k` with lower-left in `m^k` (noncommutative route only).
    pub congruence_depth: Option<usize>,
    /// Top-block characteristic polynomial unchanged by one λ-step of window growth.
    pub window_stable: Option<bool>,
}

impl Certificates {
    pub fn all_ok(&self) -> bool {
        self.w_lambda_stable && self.result_hodge_bounded && self.round_trip && self.top_slopes_match != Some(false) && self.window_stable != Some(false)
    }
}

#[derive(Debug, Clone)]
pub struct TraceStep<R: RingElement> {
    pub x: Matrix<R>,
    /// `H(C_k,1)` before this step.
    pub lower_left_before: Valuation,
    /// `H(C_{k+1},1) - H(C_k,1)`, absent once the block vanishes.
    pub gain: Option<usize>,
    /// Congruence depth reached after this step (noncommutative route).
    pub depth: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EliminationTrace<R: RingElement> {
    pub iterations: Vec<TraceStep<R>>,
    pub converged_at: usize,
    /// Guaranteed per-step gain of the ladder.
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct Decomposition<R: RingElement> {
    pub w: Matrix<R>,
    pub result: Matrix<R>,
    pub split: usize,
    pub certificates: Certificates,
    pub trace: Option<EliminationTrace<R>>,
}

/// Lower-left block of a square matrix split at `s`.
pub fn lower_left<R: RingElement>(m: &Matrix<R>, s: usize) -> Matrix<R> {
    m.block(s, m.rows(), 0, s)
}

pub(crate) fn certify<R: RingElement>(
    w: &Matrix<R>,
    m: &Matrix<R>,
    result: &Matrix<R>,
    s: usize,
    lambda: &[usize],
) -> crate::error::Result<Certificates> {
    let round_trip = w.mul(m)? == result.mul(w)?;
    Ok(Certificates {
        w_lambda_stable: is_lambda_stable(w, lambda),
        result_hodge_bounded: is_hodge_bounded(result, lambda),
        residual_valuation: lower_left(result, s).min_valuation(),
        round_trip,
        top_slopes_match: None,
        congruence_depth: None,
        window_stable: None,
    })
}

/// Newton polygon of a square matrix over `F_p[[T]]` where vanishing
/// characteristic coefficients enter at their lower bound `N`.
pub fn newton_lower_bound(m: &Matrix<FpSeries>) -> crate::error::Result<Polygon> {
    let n_prec = m.t_prec();
    let c = m.charpoly()?;
    let pts: Vec<(usize, Option<Q>)> = c
        .iter()
        .enumerate()
        .map(|(k, x)| (k, Some(Q::from(x.vt_valuation().or_cap(n_prec) as i64))))
        .collect();
    Ok(Polygon::lower_hull(&pts))
}
