//! Optimal order routing across several markets by dual decomposition.
//!
//! The primal problem maximizes the utility of the net received basket over
//! per-pool trades; its dual separates into one arbitrage subproblem per
//! pool at shared prices. Minimizing the dual prices and reading the pools'
//! arbitrage trades back off recovers the routing, with the duality gap as
//! the certificate of optimality.

use crate::compose::AssetMapping;
use crate::numerics::{minimize_scalar_convex, Bracket, Tolerance};
use crate::reachable::dot;
use crate::trade::{arb, marginal_price_cone_contains, TradeVector, TradingSet};
use crate::{Error, Result};

/// What the router maximizes over the net received basket.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    /// Liquidate the basket at fixed external prices; the basket itself must
    /// be nonnegative (no outside inventory to settle shortfalls).
    Arbitrage { prices: Vec<f64> },
}

/// A routing problem: several trading sets, each quoting a subset of a
/// global asset universe, and a utility over the combined output.
pub struct RoutingInstance {
    n: usize,
    pools: Vec<(Box<dyn TradingSet>, AssetMapping)>,
    utility: UtilitySpec,
}

impl RoutingInstance {
    /// # Errors
    /// Every mapping must target the global universe and match its pool's
    /// dimension; arbitrage prices must be nonnegative, finite, not all
    /// zero, and of global length.
    pub fn new(
        n: usize,
        pools: Vec<(Box<dyn TradingSet>, AssetMapping)>,
        utility: UtilitySpec,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("asset universe must be nonempty".into()));
        }
        if pools.is_empty() {
            return Err(Error::InvalidArgument("need at least one pool to route through".into()));
        }
        for (pool, mapping) in &pools {
            if mapping.global_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: mapping.global_dim(),
                });
            }
            if mapping.local_dim() != pool.dim() {
                return Err(Error::DimensionMismatch {
                    expected: pool.dim(),
                    got: mapping.local_dim(),
                });
            }
        }
        match &utility {
            UtilitySpec::Arbitrage { prices } => {
                if prices.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: prices.len(),
                    });
                }
                if prices.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "prices must be nonnegative and finite, got {prices:?}"
                    )));
                }
                if prices.iter().all(|x| *x == 0.0) {
                    return Err(Error::InvalidArgument("prices must not all be zero".into()));
                }
            }
        }
        Ok(Self { n, pools, utility })
    }

    pub fn asset_count(&self) -> usize {
        self.n
    }

    pub fn pools(&self) -> &[(Box<dyn TradingSet>, AssetMapping)] {
        &self.pools
    }

    pub fn utility(&self) -> &UtilitySpec {
        &self.utility
    }

    fn prices(&self) -> &[f64] {
        match &self.utility {
            UtilitySpec::Arbitrage { prices } => prices,
        }
    }
}

impl std::fmt::Debug for RoutingInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoutingInstance")
            .field("n", &self.n)
            .field("pools", &self.pools.len())
            .field("utility", &self.utility)
            .finish()
    }
}

/// The routed trades with their optimality evidence.
#[derive(Debug, Clone)]
pub struct RoutingSolution {
    /// Per-pool trades in each pool's local coordinates.
    pub trades: Vec<TradeVector>,
    /// Net basket received, in global coordinates, exactly as aggregated
    /// from the trades (small negative entries can appear up to the gap).
    pub psi: Vec<f64>,
    /// Utility of the nonnegative part of the basket.
    pub primal: f64,
    /// Dual bound at the reported prices.
    pub dual: f64,
    /// Dual prices the pools were arbitraged against.
    pub nu: Vec<f64>,
    /// `dual - primal`; at or below tolerance the solution is certified.
    pub gap: f64,
}

/// Dual objective at prices `nu`: the summed per-pool arbitrage profits,
/// or positive infinity outside the conjugate domain `nu >= c`.
///
/// # Errors
/// Shape errors and failures of the per-pool arbitrage searches.
pub fn dual_objective(instance: &RoutingInstance, nu: &[f64], tol: &Tolerance) -> Result<f64> {
    if nu.len() != instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.n,
            got: nu.len(),
        });
    }
    if let Some(x) = nu.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("dual prices must be finite, got {x}")));
    }
    let c = instance.prices();
    if nu.iter().zip(c.iter()).any(|(v, p)| v < p) {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for (pool, mapping) in &instance.pools {
        let local = mapping.restrict(nu);
        let (profit, _) = arb(pool.as_ref(), &local, tol)?;
        total += profit;
    }
    Ok(total)
}

fn convergence_band(tol: &Tolerance, dual: f64) -> f64 {
    tol.abs.max(1e3 * tol.rel * (1.0 + dual.abs()))
}

/// Component `j` of the aggregate basket the pools hand back when arbitraged
/// at prices `nu`. This is the dual objective's slope along `nu[j]`.
fn basket_component(
    instance: &RoutingInstance,
    nu: &[f64],
    j: usize,
    tol: &Tolerance,
) -> Result<f64> {
    let mut total = 0.0;
    for (pool, mapping) in &instance.pools {
        let local = mapping.restrict(nu);
        let (_, delta) = arb(pool.as_ref(), &local, tol)?;
        total += mapping.extend(&delta)[j];
    }
    Ok(total)
}

/// Drive each unpinned price coordinate to the zero crossing of its basket
/// component. The dual value is flat to second order at its minimum, so a
/// value-based line search leaves the slope at the square root of its own
/// resolution; root-finding the slope itself recovers the lost digits and
/// with them the complementarity products that make up the duality gap.
fn polish_complementarity(
    instance: &RoutingInstance,
    nu: &mut [f64],
    floor: &[f64],
    caps: &[f64],
    tol: &Tolerance,
) -> Result<()> {
    for _pass in 0..2 {
        for j in 0..instance.n {
            if nu[j] <= floor[j] * (1.0 + 1e-12) {
                continue;
            }
            let eval = |v: f64| -> Result<f64> {
                let mut probe = nu.to_vec();
                probe[j] = v;
                basket_component(instance, &probe, j, tol)
            };
            let mut v0 = nu[j];
            let mut g0 = eval(v0)?;
            if g0 == 0.0 {
                continue;
            }
            // The component grows with the price, so step against its sign.
            let mut v1 = (v0 * (1.0 - 1e-6 * g0.signum())).clamp(floor[j], caps[j]);
            let mut g1 = eval(v1)?;
            let (mut held_v, mut held_g) = if g1.abs() < g0.abs() { (v1, g1) } else { (v0, g0) };
            for _ in 0..8 {
                if g1 == g0 || !g1.is_finite() {
                    break;
                }
                let raw = v1 - g1 * (v1 - v0) / (g1 - g0);
                let v2 = raw.clamp(v1 / 1.5, v1 * 1.5).clamp(floor[j], caps[j]);
                if (v2 - v1).abs() <= 1e-14 * v1.abs() {
                    break;
                }
                let g2 = eval(v2)?;
                if g2.abs() < held_g.abs() {
                    (held_v, held_g) = (v2, g2);
                }
                (v0, g0, v1, g1) = (v1, g1, v2, g2);
            }
            nu[j] = held_v;
        }
    }
    Ok(())
}

fn recover(instance: &RoutingInstance, nu: &[f64], dual: f64, tol: &Tolerance) -> Result<RoutingSolution> {
    let c = instance.prices();
    let mut trades = Vec::with_capacity(instance.pools.len());
    let mut psi = vec![0.0; instance.n];
    for (pool, mapping) in &instance.pools {
        let local = mapping.restrict(nu);
        let (_, delta) = arb(pool.as_ref(), &local, tol)?;
        let global = mapping.extend(&delta);
        for (p, g) in psi.iter_mut().zip(global.iter()) {
            *p += g;
        }
        trades.push(delta);
    }
    let clipped: Vec<f64> = psi.iter().map(|x| x.max(0.0)).collect();
    let primal = dot(c, &clipped);
    Ok(RoutingSolution {
        trades,
        psi,
        primal,
        dual,
        nu: nu.to_vec(),
        gap: dual - primal,
    })
}

/// Solve the routing problem.
///
/// Minimizes the dual objective by coordinate descent in log-price space
/// over the box `[c, cap]`, growing the cap when the minimizer pins against
/// it, root-finds the complementarity conditions the descent leaves
/// unresolved, then recovers the per-pool trades at the optimal prices.
///
/// # Errors
/// [`Error::RoutingNotConverged`] carries the best solution when the gap
/// stays above tolerance; shape and iteration errors propagate.
pub fn route(instance: &RoutingInstance, tol: &Tolerance) -> Result<RoutingSolution> {
    tol.validate()?;
    let c = instance.prices();
    let scale = c.iter().fold(f64::MIN_POSITIVE, |a, &x| a.max(x));
    let floor: Vec<f64> = c.iter().map(|&x| x.max(1e-12 * scale)).collect();
    let mut cap_factor = 1e3;
    let mut nu = floor.clone();
    let mut caps = floor.clone();
    for _attempt in 0..3 {
        caps = floor.iter().map(|&f| (scale * cap_factor).max(10.0 * f)).collect();
        nu = floor.clone();
        let mut best = dual_objective(instance, &nu, tol)?;
        for _sweep in 0..tol.max_iter {
            let before = best;
            for j in 0..instance.n {
                let bracket = Bracket::new(floor[j].ln(), caps[j].ln())?;
                let line = |t: f64| {
                    let mut probe = nu.clone();
                    probe[j] = t.exp();
                    dual_objective(instance, &probe, tol).unwrap_or(f64::INFINITY)
                };
                let (t, value) = minimize_scalar_convex(line, bracket, tol)?;
                if value < best {
                    best = value;
                    nu[j] = t.exp();
                }
            }
            if before - best <= tol.abs.max(tol.rel * best.abs()) {
                break;
            }
        }
        let pinned = nu
            .iter()
            .zip(caps.iter())
            .any(|(v, cap)| *v >= cap * (1.0 - 1e-6));
        if !pinned {
            break;
        }
        cap_factor *= 100.0;
    }
    polish_complementarity(instance, &mut nu, &floor, &caps, tol)?;
    let dual = dual_objective(instance, &nu, tol)?;
    let solution = recover(instance, &nu, dual, tol)?;
    if solution.gap <= convergence_band(tol, solution.dual) {
        Ok(solution)
    } else {
        Err(Error::RoutingNotConverged {
            gap: solution.gap,
            solution: Box::new(solution),
        })
    }
}

/// Re-derive a solution's certificate from scratch: recompute the dual at
/// its prices, the primal from its trades, require the gap within
/// tolerance, and require each pool's trade to be optimal against the
/// restricted prices.
///
/// # Errors
/// Shape errors and arbitrage search failures; an honest negative answer is
/// `Ok(false)`.
pub fn verify_optimality(
    instance: &RoutingInstance,
    solution: &RoutingSolution,
    tol: &Tolerance,
) -> Result<bool> {
    if solution.trades.len() != instance.pools.len() || solution.nu.len() != instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.pools.len(),
            got: solution.trades.len(),
        });
    }
    let c = instance.prices();
    let mut psi = vec![0.0; instance.n];
    for ((pool, mapping), delta) in instance.pools.iter().zip(solution.trades.iter()) {
        if delta.len() != pool.dim() || !pool.feasible(delta) {
            return Ok(false);
        }
        for (p, g) in psi.iter_mut().zip(mapping.extend(delta).iter()) {
            *p += g;
        }
    }
    let dual = dual_objective(instance, &solution.nu, tol)?;
    if !dual.is_finite() {
        return Ok(false);
    }
    let clipped: Vec<f64> = psi.iter().map(|x| x.max(0.0)).collect();
    let primal = dot(c, &clipped);
    if dual - primal > convergence_band(tol, dual) {
        return Ok(false);
    }
    for ((pool, mapping), delta) in instance.pools.iter().zip(solution.trades.iter()) {
        let local = mapping.restrict(&solution.nu);
        if !marginal_price_cone_contains(pool.as_ref(), delta, &local, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}
