//! Conic duality between reachable sets and portfolio values.
//!
//! A reachable set induces a liquidity cone (its homogenization) and a dual
//! cone of price/offset pairs. The portfolio value function and the trading
//! function are support-function transforms of one another; this module hosts
//! the wrappers for membership in both cones and the numeric transforms in
//! each direction, so that either representation can be recovered from the
//! other without closed forms.

use crate::numerics::{minimize_positive_orthant, simplex_normalize, Tolerance};
use crate::reachable::{self, dot, LiquidityConePoint, ReachableSet, SharedSet, MEMBERSHIP_SLACK};
use crate::{Error, Result};

/// A point of the dual cone: a price vector together with a scalar offset.
///
/// The pair `(c, eta)` belongs to the dual cone when `c` is nonnegative and
/// `V(c) + eta >= 0` up to slack, where `V` is the portfolio value of the
/// underlying set.
#[derive(Debug, Clone, PartialEq)]
pub struct DualConePoint {
    pub price: Vec<f64>,
    pub offset: f64,
}

/// A portfolio value function as a first-class value.
///
/// Wraps an evaluator `c -> V(c)` with its dimension so the dual-side
/// operations can work from a closed form, a table, or the generic
/// minimization over a set, interchangeably.
pub struct PortfolioValueFn {
    dim: usize,
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl PortfolioValueFn {
    /// Wrap an arbitrary evaluator. The closure must accept exactly `dim`
    /// prices; non-finite outputs are treated as "no value" by the callers
    /// here.
    pub fn from_closure<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(f),
        }
    }

    /// Evaluate by minimizing `c . R` over the given set. Closed forms on
    /// the set are used when present; otherwise each call runs the generic
    /// minimization at the given tolerance. Evaluation errors surface as NaN
    /// so this stays usable as a plain function.
    pub fn from_set(set: SharedSet, tol: Tolerance) -> Self {
        let dim = set.dim();
        Self {
            dim,
            eval: Box::new(move |c: &[f64]| {
                match reachable::portfolio_value(set.as_ref(), c, &tol) {
                    Ok((v, _)) => v,
                    Err(_) => f64::NAN,
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate at a price vector of length `dim()`.
    pub fn eval(&self, c: &[f64]) -> f64 {
        debug_assert_eq!(c.len(), self.dim);
        (self.eval)(c)
    }
}

impl std::fmt::Debug for PortfolioValueFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PortfolioValueFn").field("dim", &self.dim).finish()
    }
}

fn check_finite(label: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{label} must be finite, got {x}")));
    }
    Ok(())
}

/// Membership of a scaled-reserve point in the liquidity cone of a set.
///
/// For positive scale this is membership of `reserves / scale` in the set;
/// at scale zero the cone closes onto the nonnegative orthant.
///
/// # Errors
/// Rejects negative or non-finite scale, and non-finite or mis-sized
/// reserves.
pub fn cone_contains(set: &dyn ReachableSet, point: &LiquidityConePoint) -> Result<bool> {
    if point.reserves.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: point.reserves.len(),
        });
    }
    check_finite("cone point reserves", &point.reserves)?;
    if !point.scale.is_finite() || point.scale < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cone scale must be nonnegative and finite, got {}",
            point.scale
        )));
    }
    if point.scale == 0.0 {
        return Ok(point.reserves.iter().all(|x| *x >= 0.0));
    }
    let descaled: Vec<f64> = point.reserves.iter().map(|x| x / point.scale).collect();
    reachable::contains(set, &descaled)
}

/// Membership of a price/offset pair in the dual cone of the value function.
///
/// # Errors
/// Rejects non-finite prices or offset, and mis-sized prices.
pub fn dual_cone_contains(v: &PortfolioValueFn, point: &DualConePoint) -> Result<bool> {
    if point.price.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: point.price.len(),
        });
    }
    check_finite("dual cone prices", &point.price)?;
    if !point.offset.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dual cone offset must be finite, got {}",
            point.offset
        )));
    }
    if point.price.iter().any(|x| *x < 0.0) {
        return Ok(false);
    }
    let val = v.eval(&point.price);
    if val.is_nan() {
        return Ok(false);
    }
    let slack = MEMBERSHIP_SLACK * point.offset.abs().max(1.0);
    Ok(val + point.offset >= -slack)
}

/// Recover the portfolio value at `c` from a trading-function evaluator:
/// the infimum of `c . R / phi(R)` over positive reserves.
///
/// The objective is scale-free, so the search runs over the floored unit
/// simplex; infima attained only in the limit at a simplex boundary are
/// reported at the floor. Evaluations where `phi` is zero, negative, or
/// non-finite count as no constraint.
///
/// # Errors
/// Rejects empty, negative, non-finite, or all-zero price vectors, and
/// propagates non-convergence from the minimizer.
pub fn pv_from_phi<F>(mut phi: F, c: &[f64], tol: &Tolerance) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if c.is_empty() {
        return Err(Error::InvalidArgument("price vector must be nonempty".into()));
    }
    check_finite("prices", c)?;
    if c.iter().any(|x| *x < 0.0) {
        return Err(Error::InvalidArgument(format!("prices must be nonnegative, got {c:?}")));
    }
    if c.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidArgument("prices must not all be zero".into()));
    }
    let dim = c.len();
    let objective = |y: &[f64]| {
        let r = simplex_normalize(y);
        let p = phi(&r);
        if !(p > 0.0) || !p.is_finite() {
            return f64::INFINITY;
        }
        dot(c, &r) / p
    };
    let (_, value) = minimize_positive_orthant(objective, dim, tol)?;
    Ok(value)
}

/// Recover the trading function at `R` from a portfolio value function:
/// the infimum of `c . R / V(c)` over positive prices.
///
/// Scale-free in `c`, so the search runs over the floored unit simplex.
/// Evaluations where `V` is zero, negative, or non-finite count as no
/// constraint.
///
/// # Errors
/// Rejects negative, non-finite, or mis-sized reserves, and propagates
/// non-convergence from the minimizer.
pub fn phi_from_pv(v: &PortfolioValueFn, r: &[f64], tol: &Tolerance) -> Result<f64> {
    if r.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: r.len(),
        });
    }
    check_finite("reserves", r)?;
    if r.iter().any(|x| *x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reserves must be nonnegative, got {r:?}"
        )));
    }
    let objective = |y: &[f64]| {
        let c = simplex_normalize(y);
        let val = v.eval(&c);
        if !(val > 0.0) || !val.is_finite() {
            return f64::INFINITY;
        }
        dot(&c, r) / val
    };
    let (_, value) = minimize_positive_orthant(objective, r.len(), tol)?;
    Ok(value)
}

/// Membership functional of the replicating-market-maker form: the minimum
/// of `c . R - V(c)` over the floored unit simplex.
///
/// Nonnegative exactly when `R` lies in the set that `V` values, so the sign
/// decides membership without any direct set access.
///
/// # Errors
/// Rejects non-finite or mis-sized reserves, and propagates non-convergence.
pub fn rmm_phi0(v: &PortfolioValueFn, r: &[f64], tol: &Tolerance) -> Result<f64> {
    if r.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: r.len(),
        });
    }
    check_finite("reserves", r)?;
    let objective = |y: &[f64]| {
        let c = simplex_normalize(y);
        let val = v.eval(&c);
        if val.is_nan() {
            return f64::INFINITY;
        }
        dot(&c, r) - val
    };
    let (_, value) = minimize_positive_orthant(objective, r.len(), tol)?;
    Ok(value)
}

/// Search for a price vector separating `r` from the set.
///
/// Minimizes `c . R - V(c)` over the floored simplex, re-evaluates the value
/// function at the winning price, and returns `Some((c, gap))` with
/// `gap = V(c) - c . R` only when the certified gap clears the tolerance
/// band. `None` means no separating price was found, which is the expected
/// outcome for members.
///
/// # Errors
/// Rejects non-finite or mis-sized reserves, and propagates non-convergence
/// from the minimizer.
pub fn separation_certificate(
    set: &dyn ReachableSet,
    r: &[f64],
    tol: &Tolerance,
) -> Result<Option<(Vec<f64>, f64)>> {
    if r.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: r.len(),
        });
    }
    check_finite("reserves", r)?;
    let objective = |y: &[f64]| {
        let c = simplex_normalize(y);
        match reachable::portfolio_value(set, &c, tol) {
            Ok((val, _)) => dot(&c, r) - val,
            Err(_) => f64::INFINITY,
        }
    };
    let (y_best, _) = minimize_positive_orthant(objective, r.len(), tol)?;
    let c = simplex_normalize(&y_best);
    let (val, _) = reachable::portfolio_value(set, &c, tol)?;
    let gap = val - dot(&c, r);
    let threshold = tol.abs.max(tol.rel * (1.0 + dot(&c, r).abs()));
    if gap > threshold {
        Ok(Some((c, gap)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pools::{LmsrSet, UniswapV2, UniswapV3Tick};
    use crate::reachable::phi;
    use std::sync::Arc;

    fn v2_value_fn(k: f64) -> PortfolioValueFn {
        PortfolioValueFn::from_closure(2, move |c| 2.0 * (k * c[0] * c[1]).sqrt())
    }

    #[test]
    fn liquidity_cone_rescales_membership() {
        let pool = UniswapV2::new(1.0).unwrap();
        let inside = LiquidityConePoint {
            reserves: vec![2.0, 8.0],
            scale: 2.0,
        };
        assert!(cone_contains(&pool, &inside).unwrap());
        let outside = LiquidityConePoint {
            reserves: vec![2.0, 8.0],
            scale: 8.0,
        };
        assert!(!cone_contains(&pool, &outside).unwrap());
    }

    #[test]
    fn liquidity_cone_base_is_the_orthant() {
        let pool = UniswapV2::new(1.0).unwrap();
        let flat = LiquidityConePoint {
            reserves: vec![3.0, 0.0],
            scale: 0.0,
        };
        assert!(cone_contains(&pool, &flat).unwrap());
        let neg = LiquidityConePoint {
            reserves: vec![-0.1, 1.0],
            scale: 0.0,
        };
        assert!(!cone_contains(&pool, &neg).unwrap());
        let bad = LiquidityConePoint {
            reserves: vec![1.0, 1.0],
            scale: -1.0,
        };
        assert!(cone_contains(&pool, &bad).is_err());
    }

    #[test]
    fn dual_cone_boundary_and_interior() {
        let v = v2_value_fn(1.0);
        let on_boundary = DualConePoint {
            price: vec![1.0, 1.0],
            offset: -2.0,
        };
        assert!(dual_cone_contains(&v, &on_boundary).unwrap());
        let inside = DualConePoint {
            price: vec![1.0, 1.0],
            offset: 5.0,
        };
        assert!(dual_cone_contains(&v, &inside).unwrap());
        let outside = DualConePoint {
            price: vec![1.0, 1.0],
            offset: -2.0 - 1e-6,
        };
        assert!(!dual_cone_contains(&v, &outside).unwrap());
        let negative_price = DualConePoint {
            price: vec![-1.0, 1.0],
            offset: 10.0,
        };
        assert!(!dual_cone_contains(&v, &negative_price).unwrap());
    }

    #[test]
    fn value_from_trading_function_matches_closed_form() {
        let pool = UniswapV2::new(1.0).unwrap();
        let tol = Tolerance::default();
        for c in [[1.0, 1.0], [4.0, 1.0], [0.3, 2.5]] {
            let numeric = pv_from_phi(|r| pool.phi_closed(r).unwrap(), &c, &tol).unwrap();
            let exact = 2.0 * (c[0] * c[1]).sqrt();
            assert!(
                (numeric - exact).abs() <= 1e-6 * exact,
                "c={c:?}: {numeric} vs {exact}"
            );
        }
    }

    #[test]
    fn trading_function_from_value_matches_closed_form() {
        let v = v2_value_fn(1.0);
        let tol = Tolerance::default();
        for r in [[1.0, 4.0], [2.0, 2.0], [0.5, 0.7]] {
            let numeric = phi_from_pv(&v, &r, &tol).unwrap();
            let exact = (r[0] * r[1]).sqrt();
            assert!(
                (numeric - exact).abs() <= 1e-6 * exact,
                "r={r:?}: {numeric} vs {exact}"
            );
        }
    }

    #[test]
    fn transform_roundtrip_on_translated_pool() {
        let pool = Arc::new(UniswapV3Tick::new(1.0, 1.0, 4.0).unwrap());
        let tol = Tolerance::default();
        let v = PortfolioValueFn::from_set(pool.clone(), tol);
        for r in [[1.0, 1.0], [3.0, 0.5], [0.2, 4.0]] {
            let direct = phi(pool.as_ref(), &r, &tol).unwrap();
            let via_value = phi_from_pv(&v, &r, &tol).unwrap();
            assert!(
                (direct - via_value).abs() <= 1e-6 * direct.abs().max(1e-6),
                "r={r:?}: {direct} vs {via_value}"
            );
        }
    }

    #[test]
    fn membership_functional_sign_tracks_membership() {
        let v = v2_value_fn(1.0);
        let tol = Tolerance::default();
        let inside = rmm_phi0(&v, &[1.0, 4.0], &tol).unwrap();
        assert!(inside > 1e-7, "interior point should score positive, got {inside}");
        let outside = rmm_phi0(&v, &[0.1, 0.1], &tol).unwrap();
        assert!(outside < -1e-7, "exterior point should score negative, got {outside}");
        let boundary = rmm_phi0(&v, &[0.5, 2.0], &tol).unwrap();
        assert!(boundary.abs() <= 1e-6, "boundary point should score near zero, got {boundary}");
    }

    #[test]
    fn membership_functional_works_from_a_set_backed_value() {
        let pool: SharedSet = Arc::new(LmsrSet::new(1.0, 2).unwrap());
        // The set has no closed forms, so every value evaluation is itself a
        // minimization; a loose tolerance keeps the nesting affordable while
        // the sign margins stay large.
        let tol = Tolerance {
            rel: 1e-6,
            abs: 1e-8,
            max_iter: 200,
        };
        let v = PortfolioValueFn::from_set(pool.clone(), tol);
        let two = std::f64::consts::LN_2;
        let inside = rmm_phi0(&v, &[2.0 * two, 2.0 * two], &tol).unwrap();
        assert!(inside > 0.0, "got {inside}");
        let outside = rmm_phi0(&v, &[0.1, 0.1], &tol).unwrap();
        assert!(outside < 0.0, "got {outside}");
    }

    #[test]
    fn certificate_separates_exterior_points_only() {
        let pool = UniswapV2::new(1.0).unwrap();
        let tol = Tolerance::default();
        let found = separation_certificate(&pool, &[0.5, 0.5], &tol).unwrap();
        let (c, gap) = found.expect("exterior point must be separated");
        let sum: f64 = c.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "certificate price should be normalized");
        assert!((gap - 0.5).abs() <= 1e-6, "balanced point sits 0.5 below value, got {gap}");
        // The certified pair (c, -V(c)) is itself a dual cone member.
        let v = v2_value_fn(1.0);
        let pair = DualConePoint {
            price: c.clone(),
            offset: -v.eval(&c),
        };
        assert!(dual_cone_contains(&v, &pair).unwrap());
        let member = separation_certificate(&pool, &[2.0, 2.0], &tol).unwrap();
        assert!(member.is_none(), "members admit no separating price");
    }
}
