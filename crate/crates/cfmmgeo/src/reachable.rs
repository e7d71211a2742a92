//! Reachable reserve sets and the canonical trading function.
//!
//! A fee-free market maker is modeled by the set of reserve vectors it is
//! willing to occupy: a nonempty, convex, upward-closed subset of the
//! nonnegative orthant that excludes the origin. Everything else in this
//! crate is derived from that set. The canonical trading function `phi`
//! measures how far a reserve vector can be scaled down while staying in the
//! set; it is concave, nondecreasing, and homogeneous of degree one, and the
//! set itself is recovered as `{R | phi(R) >= 1}`.

use std::sync::Arc;

use crate::numerics::{bisect_boundary, expand_bracket, minimize_positive_orthant, simplex_normalize, Tolerance};
use crate::{Error, Result};

/// Absolute slack applied to invariant-level comparisons so that boundary
/// reserves count as members of the (closed) set.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// A set of reserve vectors a fee-free market maker may occupy.
///
/// Implementations must describe a nonempty, convex, upward-closed subset of
/// the nonnegative orthant that does not contain the origin. `contains` is
/// the only required evaluator; the optional methods expose an invariant
/// function or closed forms when the set has them, and the free functions in
/// this module fall back to generic numerics when they are absent.
pub trait ReachableSet: Send + Sync {
    /// Number of assets.
    fn dim(&self) -> usize;

    /// Membership test. Must return false for vectors of the wrong
    /// dimension, with non-finite entries, or with negative entries.
    fn contains(&self, r: &[f64]) -> bool;

    /// Quasiconcave invariant function backing the set, where one exists:
    /// the set is `{R >= 0 | invariant_value(R) >= invariant_level()}`.
    fn invariant_value(&self, _r: &[f64]) -> Option<f64> {
        None
    }

    /// Level paired with [`ReachableSet::invariant_value`].
    fn invariant_level(&self) -> Option<f64> {
        None
    }

    /// Closed-form canonical trading function, when available.
    fn phi_closed(&self, _r: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form gradient of the canonical trading function at strictly
    /// positive reserves, when available.
    fn grad_phi_closed(&self, _r: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Closed-form portfolio value, when available.
    fn pv_closed(&self, _c: &[f64]) -> Option<f64> {
        None
    }

    /// Reserves achieving the closed-form portfolio value, when available
    /// and attained.
    fn pv_minimizer_closed(&self, _c: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Shared handle to a reachable set; composition trees and trading sets hold
/// children through this alias.
pub type SharedSet = Arc<dyn ReachableSet>;

/// A point of the liquidity cone: reserves together with a scale, where
/// positive scale means `reserves/scale` lies in the underlying set and zero
/// scale captures the cone's closure at the base.
#[derive(Debug, Clone)]
pub struct LiquidityConePoint {
    pub reserves: Vec<f64>,
    pub scale: f64,
}

fn check_vector(set: &dyn ReachableSet, v: &[f64], what: &str) -> Result<()> {
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} must have finite entries, got {v:?}"
        )));
    }
    Ok(())
}

fn check_nonnegative(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| *x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be nonnegative, got {v:?}"
        )));
    }
    Ok(())
}

/// Validated membership test.
///
/// # Errors
/// [`Error::DimensionMismatch`] if the vector length does not match the set;
/// [`Error::InvalidArgument`] for non-finite entries. Negative entries are
/// not an error: the set lives in the nonnegative orthant, so such points
/// are simply not members.
pub fn contains(set: &dyn ReachableSet, r: &[f64]) -> Result<bool> {
    check_vector(set, r, "reserves")?;
    Ok(set.contains(r))
}

/// Canonical trading function `phi(R) = sup{lambda > 0 | R/lambda in S}`.
///
/// Uses the set's closed form when it has one, otherwise bisects the
/// monotone predicate `lambda -> contains(R/lambda)`. Reserves that are not
/// reachable at any positive scale (for example axis points of a
/// constant-product set) yield 0.
///
/// # Errors
/// Dimension and finiteness violations as in [`contains`]; reserves must be
/// nonnegative.
pub fn phi(set: &dyn ReachableSet, r: &[f64], tol: &Tolerance) -> Result<f64> {
    check_vector(set, r, "reserves")?;
    check_nonnegative(r, "reserves")?;
    if let Some(v) = set.phi_closed(r) {
        return Ok(v);
    }
    phi_bisection(set, r, tol)
}

/// Canonical trading function computed by bisection regardless of whether
/// the set carries a closed form. Exists so closed forms can be checked
/// against the generic path.
pub fn phi_via_membership(set: &dyn ReachableSet, r: &[f64], tol: &Tolerance) -> Result<f64> {
    check_vector(set, r, "reserves")?;
    check_nonnegative(r, "reserves")?;
    phi_bisection(set, r, tol)
}

fn phi_bisection(set: &dyn ReachableSet, r: &[f64], tol: &Tolerance) -> Result<f64> {
    if r.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut scaled = vec![0.0; r.len()];
    let mut pred = |lambda: f64| {
        for (s, x) in scaled.iter_mut().zip(r) {
            *s = x / lambda;
        }
        set.contains(&scaled)
    };
    // Membership holds for small lambda (scaled-up reserves, upward closure)
    // and fails for large lambda; the flip point is phi(R).
    match expand_bracket(&mut pred, 1.0) {
        Ok(bracket) => bisect_boundary(&mut pred, bracket, tol),
        Err(Error::NoBracketFound { .. }) => {
            if pred(1.0) {
                // Still a member at the largest probed scale; the supremum
                // exceeds anything representable here.
                Ok(f64::INFINITY)
            } else {
                Ok(0.0)
            }
        }
        Err(e) => Err(e),
    }
}

/// Projects reserves onto the boundary of the set along their ray:
/// `R / phi(R)`.
///
/// # Errors
/// [`Error::ZeroLiquidity`] when `phi(R) = 0`, i.e. the ray through `R`
/// never meets the set.
pub fn scale_to_boundary(set: &dyn ReachableSet, r: &[f64], tol: &Tolerance) -> Result<Vec<f64>> {
    let p = phi(set, r, tol)?;
    if p <= 0.0 {
        return Err(Error::ZeroLiquidity);
    }
    Ok(r.iter().map(|x| x / p).collect())
}

/// Marginal prices at strictly positive reserves: the gradient of `phi`,
/// reported with the last asset as numeraire (final coordinate scaled to 1).
///
/// The gradient comes from the set's closed form when present, otherwise
/// from central finite differences of `phi` with step `1e-6 * max(1, R_i)`
/// per coordinate.
///
/// # Errors
/// [`Error::NonSmoothPoint`] when the one-sided differences of a coordinate
/// disagree by more than 1e-4 relative, which signals a kink in the boundary
/// (common for intersections). [`Error::DegenerateNumeraire`] when the
/// numeraire coordinate of the gradient vanishes, making the normalization
/// meaningless.
pub fn marginal_prices(set: &dyn ReachableSet, r: &[f64], tol: &Tolerance) -> Result<Vec<f64>> {
    check_vector(set, r, "reserves")?;
    if r.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "marginal prices require strictly positive reserves, got {r:?}"
        )));
    }
    let grad = match set.grad_phi_closed(r) {
        Some(g) => g,
        None => finite_difference_gradient(set, r, tol)?,
    };
    normalize_to_numeraire(&grad)
}

fn finite_difference_gradient(
    set: &dyn ReachableSet,
    r: &[f64],
    tol: &Tolerance,
) -> Result<Vec<f64>> {
    // Bisection noise in phi must sit well below the finite-difference step,
    // otherwise smooth boundaries look like kinks. Tighten the inner
    // tolerance relative to whatever the caller asked for.
    let inner = Tolerance {
        rel: tol.rel.min(1e-13),
        abs: tol.abs.min(1e-15),
        max_iter: tol.max_iter.max(300),
    };
    let f0 = phi(set, r, &inner)?;
    let mut grad = vec![0.0; r.len()];
    let mut probe = r.to_vec();
    for i in 0..r.len() {
        let h = 1e-6 * r[i].abs().max(1.0);
        probe[i] = r[i] + h;
        let f_plus = phi(set, &probe, &inner)?;
        let d_plus = (f_plus - f0) / h;
        let d = if r[i] - h > 0.0 {
            probe[i] = r[i] - h;
            let f_minus = phi(set, &probe, &inner)?;
            let d_minus = (f0 - f_minus) / h;
            let scale = d_plus.abs().max(d_minus.abs()).max(1e-300);
            if (d_plus - d_minus).abs() > 1e-4 * scale {
                return Err(Error::NonSmoothPoint);
            }
            0.5 * (d_plus + d_minus)
        } else {
            d_plus
        };
        probe[i] = r[i];
        grad[i] = d;
    }
    Ok(grad)
}

fn normalize_to_numeraire(grad: &[f64]) -> Result<Vec<f64>> {
    let last = *grad.last().expect("gradient is nonempty");
    let peak = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if !last.is_finite() || last <= 0.0 || last < 1e-12 * peak {
        return Err(Error::DegenerateNumeraire);
    }
    Ok(grad.iter().map(|g| g / last).collect())
}

/// Portfolio value `V(c) = inf{c . R | R in S}` together with reserves
/// achieving it.
///
/// Sets with closed forms answer directly. The generic path minimizes the
/// ratio `c . R / phi(R)` over the unit simplex (the ratio is constant along
/// rays, so the simplex restriction loses nothing) and rescales the argmin
/// to the boundary.
///
/// # Errors
/// The generic path requires strictly positive prices; values at the
/// boundary of the price orthant are limits and are only available through
/// closed forms. Dimension and finiteness violations as in [`contains`].
pub fn portfolio_value(
    set: &dyn ReachableSet,
    c: &[f64],
    tol: &Tolerance,
) -> Result<(f64, Vec<f64>)> {
    check_vector(set, c, "prices")?;
    check_nonnegative(c, "prices")?;
    if c.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument(
            "prices must not be identically zero".to_string(),
        ));
    }
    if let (Some(v), Some(m)) = (set.pv_closed(c), set.pv_minimizer_closed(c)) {
        return Ok((v, m));
    }
    if let Some(v) = set.pv_closed(c) {
        // Closed value without an attained minimizer (boundary prices).
        return Ok((v, vec![f64::NAN; c.len()]));
    }
    if c.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidArgument(
            "the generic portfolio value path requires strictly positive prices".to_string(),
        ));
    }
    let objective = |y: &[f64]| {
        let rhat = simplex_normalize(y);
        let p = match phi(set, &rhat, tol) {
            Ok(p) if p > 0.0 => p,
            _ => return f64::INFINITY,
        };
        dot(c, &rhat) / p
    };
    let (y_star, _) = minimize_positive_orthant(objective, c.len(), tol)?;
    let rhat = simplex_normalize(&y_star);
    let minimizer = scale_to_boundary(set, &rhat, tol)?;
    Ok((dot(c, &minimizer), minimizer))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pools::{LmsrSet, UniswapV2, UniswapV3Tick};

    fn v2(k: f64) -> UniswapV2 {
        UniswapV2::new(k).unwrap()
    }

    #[test]
    fn membership_matches_invariant_level() {
        let pool = v2(1.0);
        assert!(contains(&pool, &[1.0, 1.0]).unwrap(), "boundary reserves are members");
        assert!(!contains(&pool, &[0.5, 0.5]).unwrap(), "product 0.25 is below the level");
    }

    #[test]
    fn membership_rejects_wrong_dimension() {
        let pool = v2(1.0);
        let r = contains(&pool, &[1.0, 1.0, 1.0]);
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 2, got: 3 })));
    }

    #[test]
    fn phi_matches_constant_product_closed_form() {
        let pool = v2(1.0);
        let tol = Tolerance::default();
        let p = phi(&pool, &[1.0, 4.0], &tol).unwrap();
        assert!((p - 2.0).abs() <= 1e-12, "closed form should give exactly 2, got {p}");
        let pb = phi_via_membership(&pool, &[1.0, 4.0], &tol).unwrap();
        assert!((pb - 2.0).abs() <= 1e-9, "bisection should agree, got {pb}");
    }

    #[test]
    fn phi_is_zero_on_the_axis() {
        let pool = v2(1.0);
        let p = phi(&pool, &[0.0, 1.0], &Tolerance::default()).unwrap();
        assert_eq!(p, 0.0, "no positive scaling of an axis point is reachable");
    }

    #[test]
    fn phi_handles_sets_without_closed_forms() {
        let pool = LmsrSet::new(1.0, 2).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let p = phi(&pool, &[ln2, ln2], &Tolerance::default()).unwrap();
        assert!((p - 1.0).abs() <= 1e-9, "scoring-rule set boundary at unit scale, got {p}");
    }

    #[test]
    fn boundary_projection_divides_by_phi() {
        let pool = v2(1.0);
        let tol = Tolerance::default();
        let b = scale_to_boundary(&pool, &[2.0, 2.0], &tol).unwrap();
        assert!((b[0] - 1.0).abs() <= 1e-9 && (b[1] - 1.0).abs() <= 1e-9, "{b:?}");
        let b = scale_to_boundary(&pool, &[1.0, 4.0], &tol).unwrap();
        assert!((b[0] - 0.5).abs() <= 1e-9 && (b[1] - 2.0).abs() <= 1e-9, "{b:?}");
    }

    #[test]
    fn boundary_projection_fails_off_the_cone() {
        let pool = v2(1.0);
        let r = scale_to_boundary(&pool, &[0.0, 1.0], &Tolerance::default());
        assert!(matches!(r, Err(Error::ZeroLiquidity)));
    }

    #[test]
    fn prices_use_the_last_asset_as_numeraire() {
        let pool = v2(1.0);
        let tol = Tolerance::default();
        let p = marginal_prices(&pool, &[1.0, 1.0], &tol).unwrap();
        assert!((p[0] - 1.0).abs() <= 1e-9 && (p[1] - 1.0).abs() <= 1e-9, "{p:?}");
        let p = marginal_prices(&pool, &[1.0, 4.0], &tol).unwrap();
        assert!((p[0] - 4.0).abs() <= 1e-9, "price of the scarce asset, got {p:?}");
        assert_eq!(p[1], 1.0, "numeraire coordinate is exactly one");
        let p = marginal_prices(&pool, &[4.0, 1.0], &tol).unwrap();
        assert!((p[0] - 0.25).abs() <= 1e-9, "{p:?}");
    }

    #[test]
    fn finite_difference_prices_agree_with_closed_gradient() {
        // Strip the closed forms by wrapping the pool behind a membership-only view.
        struct Opaque(UniswapV2);
        impl ReachableSet for Opaque {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn contains(&self, r: &[f64]) -> bool {
                self.0.contains(r)
            }
        }
        let tol = Tolerance::default();
        let exact = marginal_prices(&v2(1.0), &[1.0, 4.0], &tol).unwrap();
        let fd = marginal_prices(&Opaque(v2(1.0)), &[1.0, 4.0], &tol).unwrap();
        for (e, f) in exact.iter().zip(&fd) {
            assert!((e - f).abs() <= 1e-5 * e.abs().max(1.0), "exact {exact:?} vs fd {fd:?}");
        }
    }

    #[test]
    fn portfolio_value_of_constant_product_pool() {
        let pool = v2(1.0);
        let tol = Tolerance::default();
        let (v, m) = portfolio_value(&pool, &[1.0, 1.0], &tol).unwrap();
        assert!((v - 2.0).abs() <= 1e-12, "got {v}");
        assert!((m[0] - 1.0).abs() <= 1e-9 && (m[1] - 1.0).abs() <= 1e-9, "{m:?}");
        let (v, m) = portfolio_value(&pool, &[4.0, 1.0], &tol).unwrap();
        assert!((v - 4.0).abs() <= 1e-12, "got {v}");
        assert!((m[0] - 0.5).abs() <= 1e-9 && (m[1] - 2.0).abs() <= 1e-9, "{m:?}");
    }

    #[test]
    fn portfolio_value_of_translated_pool() {
        let pool = UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap();
        let (v, m) = portfolio_value(&pool, &[1.0, 1.0], &Tolerance::default()).unwrap();
        assert!((v - 2.0).abs() <= 1e-12, "got {v}");
        assert!((m[0] - 1.0).abs() <= 1e-9 && (m[1] - 1.0).abs() <= 1e-9, "{m:?}");
    }

    #[test]
    fn generic_portfolio_value_matches_closed_form() {
        struct Opaque(UniswapV2);
        impl ReachableSet for Opaque {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn contains(&self, r: &[f64]) -> bool {
                self.0.contains(r)
            }
        }
        let tol = Tolerance::default();
        let (v, m) = portfolio_value(&Opaque(v2(1.0)), &[4.0, 1.0], &tol).unwrap();
        assert!((v - 4.0).abs() <= 1e-6, "generic path should find 4, got {v}");
        assert!((m[0] - 0.5).abs() <= 1e-3 && (m[1] - 2.0).abs() <= 1e-3, "{m:?}");
    }

    #[test]
    fn portfolio_value_rejects_zero_prices() {
        let pool = v2(1.0);
        let r = portfolio_value(&pool, &[0.0, 0.0], &Tolerance::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn phi_recovery_of_the_set() {
        let pool = v2(1.0);
        let tol = Tolerance::default();
        for r in [[1.5, 1.0], [0.9, 0.9], [2.0, 0.4], [0.3, 3.0]] {
            let member = contains(&pool, &r).unwrap();
            let p = phi(&pool, &r, &tol).unwrap();
            assert_eq!(member, p >= 1.0 - 1e-9, "membership and phi disagree at {r:?}: phi={p}");
        }
    }
}
