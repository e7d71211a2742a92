//! Prediction markets as reachable sets.
//!
//! A cost-function market maker quotes a convex cost `C(q)` over outstanding
//! outcome shares; the equivalent reachable set holds the reserves that back
//! those shares. The two views convert in both directions: the cost is the
//! smallest uniform deposit that keeps the post-trade reserves in the set,
//! and the set is recovered from the cost by checking that holding the
//! negated reserves costs nothing.

use crate::numerics::{bisect_boundary, expand_bracket, minimize_scalar_convex, Bracket, Tolerance};
use crate::reachable::{ReachableSet, SharedSet, MEMBERSHIP_SLACK};
use crate::{Error, Result};

/// A market cost function as a first-class value.
pub struct CostFn {
    dim: usize,
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl CostFn {
    /// Wrap an arbitrary evaluator over share vectors of length `dim`.
    pub fn from_closure<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(f),
        }
    }

    /// The log-sum-exp scoring rule cost with liquidity `b` over `n`
    /// outcomes.
    ///
    /// # Errors
    /// Requires `b > 0` and at least two outcomes.
    pub fn lmsr(b: f64, n: usize) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "liquidity parameter must be positive and finite, got {b}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "scoring rule needs at least two outcomes, got {n}"
            )));
        }
        Ok(Self::from_closure(n, move |q| lmsr_cost_unchecked(b, q)))
    }

    /// Derive the cost function of an existing set by running the uniform
    /// deposit search on every call. Evaluation errors surface as NaN.
    pub fn from_set(set: SharedSet, tol: Tolerance) -> Self {
        let dim = set.dim();
        Self {
            dim,
            eval: Box::new(move |q: &[f64]| {
                cost_from_set(set.as_ref(), q, &tol).unwrap_or(f64::NAN)
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate at a share vector of length `dim()`.
    pub fn eval(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.dim);
        (self.eval)(q)
    }
}

impl std::fmt::Debug for CostFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CostFn").field("dim", &self.dim).finish()
    }
}

fn lmsr_cost_unchecked(b: f64, q: &[f64]) -> f64 {
    let m = q.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    if !m.is_finite() {
        return f64::NAN;
    }
    let sum: f64 = q.iter().map(|&x| ((x - m) / b).exp()).sum();
    m + b * sum.ln()
}

/// Log-sum-exp scoring rule cost, evaluated stably for any share magnitudes.
///
/// # Errors
/// Requires `b > 0` and a nonempty, finite share vector.
pub fn lmsr_cost(b: f64, q: &[f64]) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "liquidity parameter must be positive and finite, got {b}"
        )));
    }
    if q.is_empty() {
        return Err(Error::InvalidArgument("share vector must be nonempty".into()));
    }
    if let Some(x) = q.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("shares must be finite, got {x}")));
    }
    Ok(lmsr_cost_unchecked(b, q))
}

/// Cost of holding shares `q` against a reachable set: the least uniform
/// deposit `a` such that `a * 1 - q` stays in the set.
///
/// The deposit is found by bisection above the orthant bound `max(q)`; when
/// the set already contains the point at that bound, the bound itself is the
/// cost. Returns positive infinity when no deposit suffices.
///
/// # Errors
/// Rejects mis-sized or non-finite share vectors and propagates bisection
/// failures.
pub fn cost_from_set(set: &dyn ReachableSet, q: &[f64], tol: &Tolerance) -> Result<f64> {
    if q.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: q.len(),
        });
    }
    if let Some(x) = q.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("shares must be finite, got {x}")));
    }
    tol.validate()?;
    // Below a = max(q) some reserve is negative, so the cost lives in
    // [max(q), inf). Work in the shifted variable t = a - max(q) > 0 so the
    // bracket expansion stays on positive ground even for negative costs.
    let lower = q.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    let mut reserves = vec![0.0; q.len()];
    let mut pred = |t: f64| {
        for (r, &x) in reserves.iter_mut().zip(q.iter()) {
            *r = (lower + t) - x;
        }
        set.contains(&reserves)
    };
    if pred(0.0) {
        return Ok(lower);
    }
    let seed = 1.0 + (-lower).max(0.0);
    match expand_bracket(&mut pred, seed) {
        Ok(bracket) => {
            let t = bisect_boundary(pred, bracket, tol)?;
            Ok(lower + t)
        }
        Err(Error::NoBracketFound { .. }) => {
            if pred(seed) {
                // Feasible at every tested scale: the boundary hides below
                // the smallest representable shift.
                Ok(lower)
            } else {
                Ok(f64::INFINITY)
            }
        }
        Err(e) => Err(e),
    }
}

/// The reachable set induced by a cost function: nonnegative reserves whose
/// negation costs nothing to hold.
#[derive(Debug)]
pub struct CostBackedSet {
    cost: CostFn,
}

impl ReachableSet for CostBackedSet {
    fn dim(&self) -> usize {
        self.cost.dim()
    }

    fn contains(&self, r: &[f64]) -> bool {
        if r.len() != self.cost.dim() || r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return false;
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        self.cost.eval(&neg) <= MEMBERSHIP_SLACK
    }
}

/// Wrap a cost function as the reachable set it induces.
pub fn set_from_cost(cost: CostFn) -> CostBackedSet {
    CostBackedSet { cost }
}

/// Best expected payoff available to a trader with outcome beliefs `p`,
/// starting from outstanding shares `q0`: the supremum over share vectors of
/// expected winnings net of the cost move.
///
/// The supremum may be approached only asymptotically (degenerate beliefs
/// push shares to infinity), so the search runs coordinate ascent inside a
/// box around `q0` wide enough that the tail beyond it is negligible for
/// costs with bounded liquidity.
///
/// # Errors
/// Beliefs must be a probability vector matching the cost dimension;
/// tolerance and iteration failures propagate.
pub fn expected_payoff(cost: &CostFn, p: &[f64], q0: &[f64], tol: &Tolerance) -> Result<f64> {
    if p.len() != cost.dim() {
        return Err(Error::DimensionMismatch {
            expected: cost.dim(),
            got: p.len(),
        });
    }
    if q0.len() != cost.dim() {
        return Err(Error::DimensionMismatch {
            expected: cost.dim(),
            got: q0.len(),
        });
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beliefs must be nonnegative and finite, got {p:?}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "beliefs must sum to one, got {total}"
        )));
    }
    if let Some(x) = q0.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("shares must be finite, got {x}")));
    }
    tol.validate()?;
    let base = cost.eval(q0);
    if !base.is_finite() {
        return Err(Error::InvalidArgument("cost is not finite at the starting shares".into()));
    }
    let scale = q0.iter().fold(1.0_f64, |a, &x| a.max(x.abs()));
    let half_width = 50.0 * scale;
    let mut q = q0.to_vec();
    let gain = |q: &[f64], cost_q: f64| {
        let mut g = 0.0;
        for i in 0..q.len() {
            g += p[i] * (q[i] - q0[i]);
        }
        g - (cost_q - base)
    };
    let mut best = gain(&q, base);
    for _ in 0..tol.max_iter {
        let before = best;
        for i in 0..q.len() {
            let lo = q0[i] - half_width;
            let hi = q0[i] + half_width;
            let line = |t: f64| {
                let mut probe = q.clone();
                probe[i] = t;
                -gain(&probe, cost.eval(&probe))
            };
            let (t, neg_g) = minimize_scalar_convex(line, Bracket::new(lo, hi)?, tol)?;
            if -neg_g > best {
                best = -neg_g;
                q[i] = t;
            }
        }
        if best - before <= tol.abs.max(tol.rel * best.abs()) {
            return Ok(best.max(0.0));
        }
    }
    Err(Error::MaxIterExceeded {
        max_iter: tol.max_iter,
    })
}
