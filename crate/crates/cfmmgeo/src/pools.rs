//! Reference pools with closed-form evaluators.
//!
//! Four concrete reachable sets: the constant-product pool, its translated
//! (concentrated-liquidity tick) variant, a two-asset Curve-style pool, and
//! the LMSR scoring-rule set. The first three carry closed-form trading
//! functions that double as oracles for the generic bisection path; the
//! scoring-rule set deliberately has none so the numeric machinery stays
//! honest.

use crate::reachable::{ReachableSet, MEMBERSHIP_SLACK};
use crate::{Error, Result};

fn level_slack(k: f64) -> f64 {
    MEMBERSHIP_SLACK * k.abs().max(1.0)
}

fn nonneg_finite(r: &[f64], dim: usize) -> bool {
    r.len() == dim && r.iter().all(|x| x.is_finite() && *x >= 0.0)
}

/// Constant-product pool: reserves with `R1 * R2 >= k`.
#[derive(Debug, Clone, Copy)]
pub struct UniswapV2 {
    k: f64,
}

impl UniswapV2 {
    /// # Errors
    /// `k` must be positive and finite; `k <= 0` would put the origin in the
    /// set, which this crate rejects everywhere.
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "constant-product level must be positive and finite, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

impl ReachableSet for UniswapV2 {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, r: &[f64]) -> bool {
        nonneg_finite(r, 2) && r[0] * r[1] >= self.k - level_slack(self.k)
    }

    fn invariant_value(&self, r: &[f64]) -> Option<f64> {
        Some(r[0] * r[1])
    }

    fn invariant_level(&self) -> Option<f64> {
        Some(self.k)
    }

    fn phi_closed(&self, r: &[f64]) -> Option<f64> {
        Some((r[0] * r[1] / self.k).sqrt())
    }

    fn grad_phi_closed(&self, r: &[f64]) -> Option<Vec<f64>> {
        if r[0] <= 0.0 || r[1] <= 0.0 {
            return None;
        }
        let denom = 2.0 * (self.k * r[0] * r[1]).sqrt();
        Some(vec![r[1] / denom, r[0] / denom])
    }

    fn pv_closed(&self, c: &[f64]) -> Option<f64> {
        Some(2.0 * (self.k * c[0] * c[1]).sqrt())
    }

    fn pv_minimizer_closed(&self, c: &[f64]) -> Option<Vec<f64>> {
        if c[0] <= 0.0 || c[1] <= 0.0 {
            // The infimum at boundary prices is a limit, not a point.
            return None;
        }
        Some(vec![(self.k * c[1] / c[0]).sqrt(), (self.k * c[0] / c[1]).sqrt()])
    }
}

/// Translated constant-product pool: reserves with `(R1 + alpha)(R2 + beta) >= k`.
///
/// The translation models a concentrated-liquidity tick: virtual reserves
/// `alpha`, `beta` shift the hyperbola so the pool quotes prices only inside
/// a band, and either real reserve can reach zero.
#[derive(Debug, Clone, Copy)]
pub struct UniswapV3Tick {
    alpha: f64,
    beta: f64,
    k: f64,
}

impl UniswapV3Tick {
    /// # Errors
    /// Requires `alpha >= 0`, `beta >= 0`, and `k > alpha * beta`; at
    /// `k <= alpha * beta` the origin would be a member.
    pub fn new(alpha: f64, beta: f64, k: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() || !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "virtual reserves must be nonnegative and finite, got ({alpha}, {beta})"
            )));
        }
        if !k.is_finite() || !(k > alpha * beta) {
            return Err(Error::InvalidArgument(format!(
                "level must exceed the product of virtual reserves: k={k}, alpha*beta={}",
                alpha * beta
            )));
        }
        Ok(Self { alpha, beta, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

impl ReachableSet for UniswapV3Tick {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, r: &[f64]) -> bool {
        nonneg_finite(r, 2)
            && (r[0] + self.alpha) * (r[1] + self.beta) >= self.k - level_slack(self.k)
    }

    fn invariant_value(&self, r: &[f64]) -> Option<f64> {
        Some((r[0] + self.alpha) * (r[1] + self.beta))
    }

    fn invariant_level(&self) -> Option<f64> {
        Some(self.k)
    }

    fn phi_closed(&self, r: &[f64]) -> Option<f64> {
        // Scaling the boundary (R1/l + a)(R2/l + b) = k by l and solving the
        // quadratic in l gives the positive root below; d = k - a*b > 0.
        let d = self.k - self.alpha * self.beta;
        let u = self.beta * r[0] + self.alpha * r[1];
        let w = (u * u + 4.0 * d * r[0] * r[1]).sqrt();
        Some((u + w) / (2.0 * d))
    }

    fn grad_phi_closed(&self, r: &[f64]) -> Option<Vec<f64>> {
        if r[0] <= 0.0 || r[1] <= 0.0 {
            return None;
        }
        let d = self.k - self.alpha * self.beta;
        let u = self.beta * r[0] + self.alpha * r[1];
        let w = (u * u + 4.0 * d * r[0] * r[1]).sqrt();
        let g1 = (self.beta + (u * self.beta + 2.0 * d * r[1]) / w) / (2.0 * d);
        let g2 = (self.alpha + (u * self.alpha + 2.0 * d * r[0]) / w) / (2.0 * d);
        Some(vec![g1, g2])
    }

    fn pv_closed(&self, c: &[f64]) -> Option<f64> {
        // Three regimes depending on where c's price ray meets the translated
        // hyperbola: pinned at the R2 = 0 corner, interior tangency, or
        // pinned at the R1 = 0 corner. Written with products so no division
        // can overflow for boundary prices.
        let (a, b, k) = (self.alpha, self.beta, self.k);
        let v = if k * c[0] < b * b * c[1] {
            c[0] * (k / b - a)
        } else if a * a * c[0] <= k * c[1] {
            2.0 * (k * c[0] * c[1]).sqrt() - a * c[0] - b * c[1]
        } else {
            c[1] * (k / a - b)
        };
        Some(v.max(0.0))
    }

    fn pv_minimizer_closed(&self, c: &[f64]) -> Option<Vec<f64>> {
        let (a, b, k) = (self.alpha, self.beta, self.k);
        if k * c[0] < b * b * c[1] {
            Some(vec![k / b - a, 0.0])
        } else if a * a * c[0] <= k * c[1] {
            if c[0] <= 0.0 || c[1] <= 0.0 {
                return None;
            }
            Some(vec![
                ((k * c[1] / c[0]).sqrt() - a).max(0.0),
                ((k * c[0] / c[1]).sqrt() - b).max(0.0),
            ])
        } else {
            Some(vec![0.0, k / a - b])
        }
    }
}

/// Two-asset Curve-style pool: reserves with `R1 + R2 - alpha/(R1*R2) >= k`.
///
/// The constant-sum term keeps prices flat near balance while the reciprocal
/// term walls off the axes.
#[derive(Debug, Clone, Copy)]
pub struct CurveTwoAsset {
    alpha: f64,
    k: f64,
}

impl CurveTwoAsset {
    /// # Errors
    /// Requires `alpha > 0` and finite `k`. The closed-form trading function
    /// is provided for `k > 0`; other levels fall back to bisection.
    pub fn new(alpha: f64, k: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "curvature weight must be positive and finite, got {alpha}"
            )));
        }
        if !k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "level must be finite, got {k}"
            )));
        }
        Ok(Self { alpha, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Cubic whose positive root is the trading function: evaluated on the
    /// boundary condition scaled by `lambda^..` and cleared of denominators.
    fn cubic(&self, r: &[f64], lambda: f64) -> f64 {
        let prod = r[0] * r[1];
        self.alpha * lambda.powi(3) + self.k * prod * lambda - prod * (r[0] + r[1])
    }
}

impl ReachableSet for CurveTwoAsset {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, r: &[f64]) -> bool {
        if !nonneg_finite(r, 2) {
            return false;
        }
        // r[0] * r[1] = 0 sends the invariant to -inf, correctly excluding
        // the axes.
        let psi = r[0] + r[1] - self.alpha / (r[0] * r[1]);
        psi >= self.k - level_slack(self.k)
    }

    fn invariant_value(&self, r: &[f64]) -> Option<f64> {
        Some(r[0] + r[1] - self.alpha / (r[0] * r[1]))
    }

    fn invariant_level(&self) -> Option<f64> {
        Some(self.k)
    }

    fn phi_closed(&self, r: &[f64]) -> Option<f64> {
        if self.k <= 0.0 {
            return None;
        }
        let prod = r[0] * r[1];
        if prod == 0.0 {
            return Some(0.0);
        }
        // Depressed cubic t^3 + p t + q = 0 with p > 0, so there is exactly
        // one real root and the radical formula needs no branch choice. The
        // form u - p/(3u) avoids cancellation because q < 0.
        let p = self.k * prod / self.alpha;
        let q = -prod * (r[0] + r[1]) / self.alpha;
        let s = ((q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0)).sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let mut lambda = u - p / (3.0 * u);
        // Two Newton steps tighten the radical result to machine precision;
        // the derivative 3*alpha*l^2 + k*prod is strictly positive.
        for _ in 0..2 {
            let f = self.cubic(r, lambda);
            let fp = 3.0 * self.alpha * lambda * lambda + self.k * prod;
            lambda -= f / fp;
        }
        let scale = (self.alpha * lambda.powi(3)).abs()
            + (self.k * prod * lambda).abs()
            + prod * (r[0] + r[1]);
        if !lambda.is_finite() || lambda <= 0.0 || self.cubic(r, lambda).abs() > 1e-9 * scale {
            // Overflow or a poorly conditioned radical; let the caller fall
            // back to bisection.
            return None;
        }
        Some(lambda)
    }

    fn grad_phi_closed(&self, r: &[f64]) -> Option<Vec<f64>> {
        if r[0] <= 0.0 || r[1] <= 0.0 {
            return None;
        }
        let lambda = self.phi_closed(r)?;
        let prod = r[0] * r[1];
        let fp = 3.0 * self.alpha * lambda * lambda + self.k * prod;
        let g1 = (2.0 * r[0] * r[1] + r[1] * r[1] - self.k * r[1] * lambda) / fp;
        let g2 = (2.0 * r[0] * r[1] + r[0] * r[0] - self.k * r[0] * lambda) / fp;
        Some(vec![g1, g2])
    }
}

/// Scoring-rule reachable set: reserves with `sum(exp(-R_i/b)) <= 1`.
///
/// This is the set whose cost function is the log-sum-exp market scoring
/// rule. It has no closed-form trading function, which makes it the standing
/// test case for the bisection and minimization paths.
#[derive(Debug, Clone, Copy)]
pub struct LmsrSet {
    b: f64,
    n: usize,
}

impl LmsrSet {
    /// # Errors
    /// Requires `b > 0` and at least two outcomes; with one outcome the set
    /// would contain the origin.
    pub fn new(b: f64, n: usize) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "liquidity parameter must be positive and finite, got {b}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "scoring-rule set needs at least two outcomes, got {n}"
            )));
        }
        Ok(Self { b, n })
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl ReachableSet for LmsrSet {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, r: &[f64]) -> bool {
        if !nonneg_finite(r, self.n) {
            return false;
        }
        let psi: f64 = -r.iter().map(|x| (-x / self.b).exp()).sum::<f64>();
        psi >= -1.0 - MEMBERSHIP_SLACK
    }

    fn invariant_value(&self, r: &[f64]) -> Option<f64> {
        Some(-r.iter().map(|x| (-x / self.b).exp()).sum::<f64>())
    }

    fn invariant_level(&self) -> Option<f64> {
        Some(-1.0)
    }
}

/// Closed-form trading function of a reference pool.
///
/// # Errors
/// [`Error::Unsupported`] when the set has no closed form (the scoring-rule
/// set, most composites); use `reachable::phi` for the generic path.
pub fn pool_phi_closed(set: &dyn ReachableSet, r: &[f64]) -> Result<f64> {
    if r.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: r.len(),
        });
    }
    set.phi_closed(r)
        .ok_or_else(|| Error::Unsupported("no closed-form trading function for this set".into()))
}

/// Closed-form portfolio value of a reference pool.
///
/// # Errors
/// [`Error::Unsupported`] when the set has no closed form; use
/// `reachable::portfolio_value` for the generic path.
pub fn pool_pv_closed(set: &dyn ReachableSet, c: &[f64]) -> Result<f64> {
    if c.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: c.len(),
        });
    }
    set.pv_closed(c)
        .ok_or_else(|| Error::Unsupported("no closed-form portfolio value for this set".into()))
}

/// Closed-form gradient of a reference pool's trading function at strictly
/// positive reserves.
///
/// # Errors
/// [`Error::Unsupported`] when no closed gradient exists (use finite
/// differences via `reachable::marginal_prices`); [`Error::InvalidArgument`]
/// for reserves on the orthant boundary.
pub fn pool_grad_phi(set: &dyn ReachableSet, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: r.len(),
        });
    }
    if r.iter().any(|x| *x <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient requires strictly positive reserves, got {r:?}"
        )));
    }
    set.grad_phi_closed(r)
        .ok_or_else(|| Error::Unsupported("no closed-form gradient for this set".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tolerance;
    use crate::reachable::{phi_via_membership, ReachableSet};

    #[test]
    fn constant_product_phi_closed_form() {
        let pool = UniswapV2::new(4.0).unwrap();
        let p = pool_phi_closed(&pool, &[4.0, 4.0]).unwrap();
        assert!((p - 2.0).abs() <= 1e-15, "sqrt(16/4), got {p}");
    }

    #[test]
    fn translated_pool_phi_closed_form() {
        let pool = UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap();
        let p = pool_phi_closed(&pool, &[1.0, 1.0]).unwrap();
        assert!((p - 1.0).abs() <= 1e-15, "(2 + 4)/6, got {p}");
    }

    #[test]
    fn curve_phi_closed_form_at_balance() {
        let pool = CurveTwoAsset::new(1.0, 1.0).unwrap();
        let p = pool_phi_closed(&pool, &[1.0, 1.0]).unwrap();
        assert!((p - 1.0).abs() <= 1e-12, "root of t^3 + t - 2, got {p}");
    }

    #[test]
    fn curve_phi_matches_bisection() {
        let pool = CurveTwoAsset::new(1.0, 1.0).unwrap();
        let tol = Tolerance::default();
        for r in [[0.3, 2.0], [5.0, 5.0], [0.11, 0.13], [9.7, 0.4]] {
            let closed = pool_phi_closed(&pool, &r).unwrap();
            let bis = phi_via_membership(&pool, &r, &tol).unwrap();
            assert!(
                (closed - bis).abs() <= 1e-8 * closed.abs().max(1e-12),
                "closed {closed} vs bisection {bis} at {r:?}"
            );
        }
    }

    #[test]
    fn curve_phi_is_homogeneous() {
        let pool = CurveTwoAsset::new(2.0, 3.0).unwrap();
        let base = pool_phi_closed(&pool, &[1.3, 0.8]).unwrap();
        for t in [0.25, 0.5, 2.0, 7.5] {
            let scaled = pool_phi_closed(&pool, &[1.3 * t, 0.8 * t]).unwrap();
            assert!(
                (scaled - t * base).abs() <= 1e-7 * (t * base),
                "phi(t R) = t phi(R) failed at t={t}: {scaled} vs {}",
                t * base
            );
        }
    }

    #[test]
    fn scoring_rule_set_has_no_closed_forms() {
        let pool = LmsrSet::new(1.0, 2).unwrap();
        assert!(matches!(pool_phi_closed(&pool, &[1.0, 1.0]), Err(Error::Unsupported(_))));
        assert!(matches!(pool_pv_closed(&pool, &[1.0, 1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constant_product_portfolio_value() {
        let pool = UniswapV2::new(1.0).unwrap();
        let v = pool_pv_closed(&pool, &[1.0, 1.0]).unwrap();
        assert!((v - 2.0).abs() <= 1e-15, "got {v}");
    }

    #[test]
    fn translated_pool_portfolio_value_interior_branch() {
        let pool = UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap();
        let v = pool_pv_closed(&pool, &[1.0, 1.0]).unwrap();
        assert!((v - 2.0).abs() <= 1e-15, "2*2 - 2, got {v}");
    }

    #[test]
    fn translated_pool_portfolio_value_corner_branch() {
        // Lopsided prices pin the minimizer at the R2 = 0 corner; the value
        // there is c1 * (k/beta - alpha), here 0.1 * 3 = 0.3.
        let pool = UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap();
        let v = pool_pv_closed(&pool, &[0.1, 1.0]).unwrap();
        assert!((v - 0.3).abs() <= 1e-15, "corner value, got {v}");
        let m = pool.pv_minimizer_closed(&[0.1, 1.0]).unwrap();
        assert_eq!(m, vec![3.0, 0.0], "minimizer sits on the corner");
        // The corner value must actually be the minimum over the set.
        let direct = 0.1 * m[0] + 1.0 * m[1];
        assert!((v - direct).abs() <= 1e-15);
        for r in [[3.5, 0.0], [2.0, 1.0 / 3.0], [5.0, 0.0], [1.0, 1.0]] {
            assert!(pool.contains(&r), "{r:?} should be a member");
            assert!(0.1 * r[0] + r[1] >= v - 1e-12, "found cheaper member {r:?}");
        }
    }

    #[test]
    fn translated_pool_value_is_continuous_across_branches() {
        let pool = UniswapV3Tick::new(0.5, 2.0, 3.0).unwrap();
        // Branch switch at k*c1 = beta^2*c2, i.e. c1/c2 = 4/3.
        let p = 4.0 / 3.0;
        let below = pool_pv_closed(&pool, &[p - 1e-9, 1.0]).unwrap();
        let above = pool_pv_closed(&pool, &[p + 1e-9, 1.0]).unwrap();
        assert!((below - above).abs() <= 1e-7, "jump at the corner branch: {below} vs {above}");
        // And at alpha^2*c1 = k*c2, i.e. c1/c2 = 12.
        let p = 12.0;
        let below = pool_pv_closed(&pool, &[p - 1e-8, 1.0]).unwrap();
        let above = pool_pv_closed(&pool, &[p + 1e-8, 1.0]).unwrap();
        assert!((below - above).abs() <= 1e-6, "jump at the other corner: {below} vs {above}");
    }

    #[test]
    fn constant_product_gradient() {
        let pool = UniswapV2::new(1.0).unwrap();
        assert_eq!(pool_grad_phi(&pool, &[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(pool_grad_phi(&pool, &[1.0, 4.0]).unwrap(), vec![1.0, 0.25]);
        let pool = UniswapV2::new(4.0).unwrap();
        assert_eq!(pool_grad_phi(&pool, &[2.0, 2.0]).unwrap(), vec![0.25, 0.25]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let tol = 1e-6;
        let pools: Vec<Box<dyn ReachableSet>> = vec![
            Box::new(UniswapV2::new(2.0).unwrap()),
            Box::new(UniswapV3Tick::new(1.0, 0.5, 3.0).unwrap()),
            Box::new(CurveTwoAsset::new(1.5, 2.0).unwrap()),
        ];
        for pool in &pools {
            for r in [[1.0, 4.0], [2.5, 0.7], [6.0, 6.0]] {
                let g = pool.grad_phi_closed(&r).expect("closed gradient");
                for i in 0..2 {
                    let h = 1e-6 * r[i].max(1.0);
                    let mut up = r;
                    up[i] += h;
                    let mut dn = r;
                    dn[i] -= h;
                    let fd = (pool.phi_closed(&up).unwrap() - pool.phi_closed(&dn).unwrap())
                        / (2.0 * h);
                    assert!(
                        (g[i] - fd).abs() <= tol * fd.abs().max(1.0),
                        "coordinate {i} at {r:?}: closed {} vs fd {fd}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn translated_pool_superlevel_set_matches_invariant() {
        let pool = UniswapV3Tick::new(1.0, 2.0, 5.0).unwrap();
        for r in [[0.1, 0.1], [1.0, 1.0], [4.0, 0.0], [0.0, 4.0], [0.4, 0.9], [3.0, 0.2]] {
            let by_phi = pool.phi_closed(&r).unwrap() >= 1.0 - 1e-12;
            let by_psi = (r[0] + 1.0) * (r[1] + 2.0) >= 5.0 - 1e-12;
            assert_eq!(by_phi, by_psi, "disagreement at {r:?}");
        }
    }

    #[test]
    fn parameter_validation_rejects_degenerate_sets() {
        assert!(UniswapV2::new(0.0).is_err());
        assert!(UniswapV2::new(-1.0).is_err());
        assert!(UniswapV3Tick::new(1.0, 1.0, 1.0).is_err(), "origin would be a member");
        assert!(UniswapV3Tick::new(-0.1, 1.0, 4.0).is_err());
        assert!(CurveTwoAsset::new(0.0, 1.0).is_err());
        assert!(LmsrSet::new(1.0, 1).is_err(), "single outcome admits the origin");
        assert!(LmsrSet::new(0.0, 2).is_err());
    }

    #[test]
    fn origin_is_never_a_member() {
        let pools: Vec<Box<dyn ReachableSet>> = vec![
            Box::new(UniswapV2::new(1.0).unwrap()),
            Box::new(UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap()),
            Box::new(CurveTwoAsset::new(1.0, 1.0).unwrap()),
            Box::new(LmsrSet::new(1.0, 3).unwrap()),
        ];
        for pool in &pools {
            let zero = vec![0.0; pool.dim()];
            assert!(!pool.contains(&zero), "origin must be excluded");
        }
    }
}
