//! Fee-aware single-trade markets: trading sets, the trade-side trading
//! function, arbitrage, price cones, bounded liquidity, and path
//! independence.
//!
//! A trading set holds the trades a market accepts at its current reserves,
//! in trader sign convention: positive entries are received by the trader,
//! negative entries are tendered. Fees enter by crediting only a fraction of
//! the tendered side to the reserves, which breaks the equivalence between a
//! trade sequence and its aggregate; the checks here make that loss
//! observable.

use crate::numerics::{bisect_boundary, expand_bracket, minimize_scalar_convex, Bracket, Tolerance};
use crate::reachable::{self, dot, SharedSet, MEMBERSHIP_SLACK};
use crate::{Error, Result};

/// Trade amounts in trader sign convention: positive received, negative
/// tendered.
pub type TradeVector = Vec<f64>;

/// A set of acceptable trades at fixed reserves.
///
/// Implementations are immutable; executing a trade yields fresh reserves
/// for constructing the next set rather than mutating this one.
pub trait TradingSet: Send + Sync {
    fn dim(&self) -> usize;

    /// The reserves this set is anchored at.
    fn reserves(&self) -> &[f64];

    /// Whether the trade can execute. Mis-shaped or non-finite trades are
    /// simply not members.
    fn feasible(&self, delta: &[f64]) -> bool;

    /// Reserves after executing the trade, fee-adjusted, without feasibility
    /// or sign enforcement.
    fn post_trade_reserves(&self, delta: &[f64]) -> Vec<f64>;

    /// Closed-form trade-side trading function, where one exists.
    fn phi_closed(&self, _delta: &[f64]) -> Option<f64> {
        None
    }

    /// Signed residual of the conserved quantity after the trade: zero on
    /// the acceptability boundary, positive strictly inside, smooth in the
    /// trade. `None` when the set tracks no differentiable invariant.
    ///
    /// Boundary searches use this to land outputs within rounding error of
    /// the true boundary instead of a bisection width away, which matters
    /// to callers that difference trades across nearby prices.
    fn boundary_residual(&self, _delta: &[f64]) -> Option<f64> {
        None
    }
}

fn split_trade(delta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let plus: Vec<f64> = delta.iter().map(|d| d.max(0.0)).collect();
    let minus: Vec<f64> = delta.iter().map(|d| (-d).max(0.0)).collect();
    (plus, minus)
}

/// Trades against a pool that keeps a `1 - gamma` fraction of every tender
/// as fees, re-anchored at the pool's current invariant level.
pub struct FeePoolTradingSet {
    pool: SharedSet,
    reserves: Vec<f64>,
    gamma: f64,
    level: Option<f64>,
    phi_level: f64,
    tol: Tolerance,
}

impl FeePoolTradingSet {
    /// # Errors
    /// Reserves must be a member of the pool ([`Error::NotInSet`]) with the
    /// right shape, and `gamma` must lie in `[0, 1]`.
    pub fn new(pool: SharedSet, reserves: Vec<f64>, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "fee parameter must lie in [0, 1], got {gamma}"
            )));
        }
        if !reachable::contains(pool.as_ref(), &reserves)? {
            return Err(Error::NotInSet);
        }
        let level = pool.invariant_value(&reserves);
        let tol = Tolerance::default();
        let phi_level = if level.is_some() {
            0.0
        } else {
            // No invariant to track; fall back to the trading function as
            // the conserved quantity, at the cost of a bisection per
            // feasibility query.
            reachable::phi(pool.as_ref(), &reserves, &tol)?
        };
        Ok(Self {
            pool,
            reserves,
            gamma,
            level,
            phi_level,
            tol,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pool(&self) -> &SharedSet {
        &self.pool
    }
}

impl TradingSet for FeePoolTradingSet {
    fn dim(&self) -> usize {
        self.reserves.len()
    }

    fn reserves(&self) -> &[f64] {
        &self.reserves
    }

    fn feasible(&self, delta: &[f64]) -> bool {
        if delta.len() != self.reserves.len() || delta.iter().any(|d| !d.is_finite()) {
            return false;
        }
        let post = self.post_trade_reserves(delta);
        if post.iter().any(|x| *x < 0.0) {
            return false;
        }
        match self.level {
            Some(lvl) => match self.pool.invariant_value(&post) {
                Some(v) => v >= lvl - MEMBERSHIP_SLACK * lvl.abs().max(1.0),
                None => false,
            },
            None => match reachable::phi(self.pool.as_ref(), &post, &self.tol) {
                Ok(p) => p >= self.phi_level * (1.0 - 1e-9),
                Err(_) => false,
            },
        }
    }

    fn post_trade_reserves(&self, delta: &[f64]) -> Vec<f64> {
        let (plus, minus) = split_trade(delta);
        self.reserves
            .iter()
            .zip(plus.iter().zip(minus.iter()))
            .map(|(r, (p, m))| r + self.gamma * m - p)
            .collect()
    }

    fn boundary_residual(&self, delta: &[f64]) -> Option<f64> {
        let level = self.level?;
        let value = self.pool.invariant_value(&self.post_trade_reserves(delta))?;
        Some(value - level)
    }
}

/// The trade set carved out of a fixed reachable set: a trade is acceptable
/// when the reserves it leaves behind are still members.
pub struct ReachableTradingSet {
    set: SharedSet,
    reserves: Vec<f64>,
}

/// Build the trading set of a reachable set at given member reserves.
///
/// # Errors
/// [`Error::NotInSet`] when the reserves are not a member.
pub fn trading_set_from_reachable(set: SharedSet, reserves: Vec<f64>) -> Result<ReachableTradingSet> {
    if !reachable::contains(set.as_ref(), &reserves)? {
        return Err(Error::NotInSet);
    }
    Ok(ReachableTradingSet { set, reserves })
}

impl TradingSet for ReachableTradingSet {
    fn dim(&self) -> usize {
        self.reserves.len()
    }

    fn reserves(&self) -> &[f64] {
        &self.reserves
    }

    fn feasible(&self, delta: &[f64]) -> bool {
        if delta.len() != self.reserves.len() || delta.iter().any(|d| !d.is_finite()) {
            return false;
        }
        let post = self.post_trade_reserves(delta);
        post.iter().all(|x| *x >= 0.0) && self.set.contains(&post)
    }

    fn post_trade_reserves(&self, delta: &[f64]) -> Vec<f64> {
        self.reserves.iter().zip(delta.iter()).map(|(r, d)| r - d).collect()
    }

    fn boundary_residual(&self, delta: &[f64]) -> Option<f64> {
        let level = self.set.invariant_level()?;
        let value = self.set.invariant_value(&self.post_trade_reserves(delta))?;
        Some(value - level)
    }
}

fn check_trade_shape(t: &dyn TradingSet, delta: &[f64]) -> Result<()> {
    if delta.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: delta.len(),
        });
    }
    if let Some(d) = delta.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument(format!("trade entries must be finite, got {d}")));
    }
    Ok(())
}

/// Whether a trade executes against the set.
///
/// # Errors
/// Mis-sized or non-finite trades are rejected as errors here (the trait
/// method silently excludes them).
pub fn trade_feasible(t: &dyn TradingSet, delta: &[f64]) -> Result<bool> {
    check_trade_shape(t, delta)?;
    Ok(t.feasible(delta))
}

/// Trade-side trading function: the least scale-down `lambda` at which
/// `delta / lambda` executes.
///
/// Zero for trades that only tender, positive infinity (a value, not an
/// error) when no scale makes the trade acceptable.
///
/// # Errors
/// Shape errors and bisection iteration failure only.
pub fn trade_phi(t: &dyn TradingSet, delta: &[f64], tol: &Tolerance) -> Result<f64> {
    check_trade_shape(t, delta)?;
    tol.validate()?;
    if delta.iter().all(|d| *d <= 0.0) {
        return Ok(0.0);
    }
    let mut scaled = vec![0.0; delta.len()];
    let mut pred = |lambda: f64| {
        for (s, d) in scaled.iter_mut().zip(delta.iter()) {
            *s = d / lambda;
        }
        t.feasible(&scaled)
    };
    match expand_bracket(&mut pred, 1.0) {
        Ok(bracket) => {
            let lambda = bisect_boundary(pred, bracket, tol)?;
            // The membership band makes a value-destroying direction look
            // acceptable once the executed trade shrinks enough: linearly
            // destructive directions flip at the band's own size, breakeven
            // directions (killed only by curvature) at its square root. A
            // flip found below that size is no boundary: the direction
            // admits no acceptable scale.
            let magnitude = delta.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
            let reserve_scale = t.reserves().iter().fold(1.0_f64, |a, r| a.max(r.abs()));
            if magnitude / lambda <= 32.0 * MEMBERSHIP_SLACK.sqrt() * reserve_scale {
                Ok(f64::INFINITY)
            } else {
                Ok(lambda)
            }
        }
        Err(Error::NoBracketFound { .. }) => {
            // Uniform predicate over the whole tested range: acceptable at
            // every scale means the infimum vanishes, acceptable at none
            // means it is infinite.
            Ok(if pred(1.0) { 0.0 } else { f64::INFINITY })
        }
        Err(e) => Err(e),
    }
}

/// Closed-form trade-side trading function for a two-asset constant-product
/// pool with fee `gamma`, anchored at reserves `r` on level `k`.
///
/// Derived by holding the product constant through the fee-adjusted update:
/// with `a = gamma * tendered - received` per asset, the boundary scale is
/// `-a1*a2 / (r1*a2 + r2*a1)`. Trades that only add reserves score zero; a
/// nonpositive denominator means no scale is acceptable and scores positive
/// infinity.
///
/// # Errors
/// Shape and parameter validation only.
pub fn v2_fee_phi_closed(r: &[f64], k: f64, gamma: f64, delta: &[f64]) -> Result<f64> {
    if r.len() != 2 || delta.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: if r.len() != 2 { r.len() } else { delta.len() },
        });
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("level must be positive, got {k}")));
    }
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "fee parameter must lie in [0, 1], got {gamma}"
        )));
    }
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument(
            "reserves must be nonnegative and trades finite".into(),
        ));
    }
    let a1 = gamma * (-delta[0]).max(0.0) - delta[0].max(0.0);
    let a2 = gamma * (-delta[1]).max(0.0) - delta[1].max(0.0);
    if a1 >= 0.0 && a2 >= 0.0 {
        return Ok(0.0);
    }
    let denom = r[0] * a2 + r[1] * a1;
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-a1 * a2 / denom)
}

/// Largest amount of `recv` obtainable for tendering `x` of `tender`,
/// found by bisection against the set's own feasibility.
fn max_receivable(
    t: &dyn TradingSet,
    recv: usize,
    tender: usize,
    x: f64,
    tol: &Tolerance,
) -> Result<f64> {
    let cap = t.reserves()[recv];
    let mut delta = vec![0.0; t.dim()];
    delta[tender] = -x;
    if cap <= 0.0 {
        return Ok(0.0);
    }
    delta[recv] = cap;
    if t.feasible(&delta) {
        return Ok(cap);
    }
    delta[recv] = 0.0;
    if !t.feasible(&delta) {
        return Ok(0.0);
    }
    let mut pred = |y: f64| {
        delta[recv] = y;
        t.feasible(&delta)
    };
    let seed = bisect_boundary(&mut pred, Bracket::new(0.0, cap)?, tol)?;
    Ok(polish_receivable(t, recv, tender, x, seed, cap))
}

/// Refine a bisected boundary output with a secant solve on the set's
/// invariant residual. Bisection leaves `seed` a bracket width inside the
/// boundary, and that width quantizes the output as a function of the
/// tendered amount; a couple of secant steps on the smooth residual removes
/// the quantization, which matters to callers that difference nearby trades.
/// Falls back to `seed` whenever the residual is unavailable or the iteration
/// leaves the feasible range.
fn polish_receivable(
    t: &dyn TradingSet,
    recv: usize,
    tender: usize,
    x: f64,
    seed: f64,
    cap: f64,
) -> f64 {
    let mut delta = vec![0.0; t.dim()];
    delta[tender] = -x;
    let mut residual = |y: f64| {
        delta[recv] = y;
        t.boundary_residual(&delta)
    };
    let mut y0 = seed;
    let Some(mut g0) = residual(y0) else {
        return seed;
    };
    let mut y1 = (seed + 1e-6 * cap).min(cap);
    if y1 <= y0 {
        y1 = 0.5 * (y0 + cap);
    }
    let Some(mut g1) = residual(y1) else {
        return seed;
    };
    for _ in 0..8 {
        if g1 == g0 || !g1.is_finite() {
            break;
        }
        let y2 = (y1 - g1 * (y1 - y0) / (g1 - g0)).clamp(0.0, cap);
        if y2 == y1 || (y2 - y1).abs() <= f64::EPSILON * cap {
            y1 = y2;
            break;
        }
        let Some(g2) = residual(y2) else {
            break;
        };
        (y0, g0, y1, g1) = (y1, g1, y2, g2);
    }
    delta[recv] = y1;
    if y1.is_finite() && t.feasible(&delta) {
        y1
    } else {
        seed
    }
}

/// Sharpen a golden-section estimate of the most profitable tender.
///
/// Value comparisons localize a smooth maximum only to the square root of
/// the value resolution, which leaves the tender with noise around 1e-6
/// relative. The centered difference of the profit moves first order across
/// the optimum, so bisecting its sign recovers the lost digits. Callers that
/// difference trades across nearby prices need them.
fn polish_tender(
    t: &dyn TradingSet,
    recv: usize,
    tender: usize,
    x: f64,
    c: &[f64],
    tol: &Tolerance,
) -> f64 {
    // The difference step is sized by the reserves, not the tender: the
    // output's rounding is absolute at the reserve scale, so shrinking the
    // step with a small tender would sink the slope signal below it. The
    // cap keeps the downshifted point positive.
    let r = t.reserves();
    let scale = r[recv].max(r[tender]).max(1.0);
    let h = (1e-6 * scale).min(0.125 * x);
    if !(h > 0.0) {
        return x;
    }
    let increasing = |x: f64| -> Option<bool> {
        if x <= h {
            return None;
        }
        let above = max_receivable(t, recv, tender, x + h, tol).ok()?;
        let below = max_receivable(t, recv, tender, x - h, tol).ok()?;
        Some(c[recv] * (above - below) >= c[tender] * 2.0 * h)
    };
    // The seed's relative error grows as the profit curve flattens, so try
    // successively wider spans until one straddles the slope's sign change.
    let mut lo = x;
    let mut hi = x;
    let mut straddles = false;
    for width in [1e-4, 1e-3, 1e-2] {
        lo = x * (1.0 - width);
        hi = x * (1.0 + width);
        if increasing(lo) == Some(true) && increasing(hi) == Some(false) {
            straddles = true;
            break;
        }
    }
    if !straddles {
        return x;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match increasing(mid) {
            Some(true) => lo = mid,
            Some(false) => hi = mid,
            None => return x,
        }
        if hi - lo <= f64::EPSILON * (x + scale) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Best value extractable at external prices `c`: the supremum of `c . delta`
/// over the set, with a trade attaining it.
///
/// A negative price admits unbounded tender profit; that case reports
/// positive infinity with the zero trade as a non-witness. The search covers
/// two-asset sets by maximizing each tender direction along the boundary.
///
/// # Errors
/// [`Error::Unsupported`] beyond two assets (route through the routing
/// machinery instead); shape and iteration errors otherwise.
pub fn arb(t: &dyn TradingSet, c: &[f64], tol: &Tolerance) -> Result<(f64, TradeVector)> {
    if c.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: c.len(),
        });
    }
    if let Some(x) = c.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("prices must be finite, got {x}")));
    }
    tol.validate()?;
    if c.iter().any(|x| *x < 0.0) {
        return Ok((f64::INFINITY, vec![0.0; t.dim()]));
    }
    if t.dim() != 2 {
        return Err(Error::Unsupported(
            "direct arbitrage search covers two-asset sets; compose through routing for more".into(),
        ));
    }
    let r = t.reserves();
    let mut best_profit = 0.0;
    let mut best_trade = vec![0.0, 0.0];
    // The membership band lets boundary trades leak value at its own
    // magnitude; a candidate must clear that noise before it displaces the
    // zero trade.
    let noise = tol.abs.max(tol.rel * (1.0 + dot(c, r).abs()));
    for (recv, tender) in [(0usize, 1usize), (1, 0)] {
        if c[recv] == 0.0 {
            // Nothing received is worth anything in this direction.
            continue;
        }
        let scale = r[0].max(r[1]).max(1.0);
        let bracket = Bracket::new((1e-12 * scale).ln(), (1e7 * scale).ln())?;
        let objective = |ln_x: f64| {
            let x = ln_x.exp();
            match max_receivable(t, recv, tender, x, tol) {
                Ok(y) => -(c[recv] * y - c[tender] * x),
                Err(_) => f64::INFINITY,
            }
        };
        let (ln_x, _) = minimize_scalar_convex(objective, bracket, tol)?;
        let x = polish_tender(t, recv, tender, ln_x.exp(), c, tol);
        let y = max_receivable(t, recv, tender, x, tol)?;
        let mut delta = vec![0.0, 0.0];
        delta[recv] = y;
        delta[tender] = -x;
        let profit = c[recv] * y - c[tender] * x;
        if profit > best_profit + noise && t.feasible(&delta) {
            best_profit = profit;
            best_trade = delta;
        }
    }
    Ok((best_profit, best_trade))
}

fn profit_band(tol: &Tolerance, reference: f64) -> f64 {
    tol.abs.max(10.0 * tol.rel) * (1.0 + reference.abs())
}

/// Whether the external price admits no profitable trade, up to a band
/// scaled by the reserve value.
///
/// # Errors
/// Same contract as [`arb`].
pub fn in_no_trade_cone(t: &dyn TradingSet, c: &[f64], tol: &Tolerance) -> Result<bool> {
    if c.len() == t.dim() && c.iter().any(|x| x.is_finite() && *x < 0.0) {
        return Ok(false);
    }
    let (profit, _) = arb(t, c, tol)?;
    Ok(profit <= profit_band(tol, dot(c, t.reserves())))
}

/// Whether `delta` is an optimal trade at price `c`: its value must match
/// the arbitrage supremum. Infeasible trades belong to no price cone.
///
/// # Errors
/// Same contract as [`arb`].
pub fn marginal_price_cone_contains(
    t: &dyn TradingSet,
    delta: &[f64],
    c: &[f64],
    tol: &Tolerance,
) -> Result<bool> {
    check_trade_shape(t, delta)?;
    if !t.feasible(delta) {
        return Ok(false);
    }
    if c.len() == t.dim() && c.iter().any(|x| x.is_finite() && *x < 0.0) {
        return Ok(false);
    }
    let (profit, _) = arb(t, c, tol)?;
    let value = dot(c, delta);
    Ok((value - profit).abs() <= profit_band(tol, value))
}

/// A liquidity bound estimate for one asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedLiquidity {
    /// The estimated supremum of the receivable amount.
    pub value: f64,
    /// Whether the supremum is reached by an actual trade, as opposed to
    /// being a limit value only approached.
    pub attained: bool,
}

/// Estimate the supremum of the receivable amount of one asset when every
/// other asset is tendered without limit.
///
/// Samples the best output at three geometrically spaced tender caps. An
/// exact plateau means the bound is attained; a contracting tail is
/// extrapolated to its limit (not attained); anything else, such as linear
/// growth, is unresolved and reported as `None`.
///
/// # Errors
/// [`Error::IndexOutOfRange`] for a bad asset index; iteration errors from
/// the inner bisections.
pub fn bounded_liquidity(
    t: &dyn TradingSet,
    asset: usize,
    tol: &Tolerance,
) -> Result<Option<BoundedLiquidity>> {
    if asset >= t.dim() {
        return Err(Error::IndexOutOfRange {
            index: asset,
            dim: t.dim(),
        });
    }
    tol.validate()?;
    let scale = t.reserves().iter().fold(1.0_f64, |a, &x| a.max(x));
    let x0 = 1e6 * scale;
    let sample = |tendered: f64| -> Result<f64> {
        // Tender the cap on every other asset jointly; for two assets this
        // is the single opposing direction.
        let mut probe = vec![-tendered; t.dim()];
        let ceiling = t.reserves()[asset];
        if ceiling <= 0.0 {
            return Ok(0.0);
        }
        probe[asset] = ceiling;
        if t.feasible(&probe) {
            return Ok(ceiling);
        }
        probe[asset] = 0.0;
        if !t.feasible(&probe) {
            return Ok(0.0);
        }
        let pred = |y: f64| {
            let mut candidate = probe.clone();
            candidate[asset] = y;
            t.feasible(&candidate)
        };
        bisect_boundary(pred, Bracket::new(0.0, ceiling)?, tol)
    };
    let f1 = sample(0.5 * x0)?;
    let f2 = sample(x0)?;
    let f3 = sample(2.0 * x0)?;
    let d1 = f2 - f1;
    let d2 = f3 - f2;
    let band = tol.abs.max(tol.rel * f3.abs());
    if d1.abs() <= band && d2.abs() <= band {
        return Ok(Some(BoundedLiquidity {
            value: f3,
            attained: true,
        }));
    }
    if d1 > 0.0 && d2 > 0.0 && d2 < 0.75 * d1 {
        // Geometric tail: summing the remaining increments at the observed
        // contraction ratio gives the limit.
        return Ok(Some(BoundedLiquidity {
            value: f3 + d2 * d2 / (d1 - d2),
            attained: false,
        }));
    }
    Ok(None)
}

/// Whether executing `delta1` then `delta2` is equivalent to executing their
/// sum: the defining test of path independence.
///
/// The market after the first trade is rebuilt through the factory at the
/// set's own post-trade reserves, so fee retention between the legs is
/// honored.
///
/// # Errors
/// [`Error::InfeasibleFirstTrade`] when `delta1` does not execute at `r`;
/// construction errors from the factory propagate.
pub fn path_independence_check<T, F>(
    make_t: F,
    r: &[f64],
    delta1: &[f64],
    delta2: &[f64],
    tol: &Tolerance,
) -> Result<bool>
where
    T: TradingSet,
    F: Fn(&[f64]) -> Result<T>,
{
    tol.validate()?;
    let first = make_t(r)?;
    check_trade_shape(&first, delta1)?;
    check_trade_shape(&first, delta2)?;
    if !first.feasible(delta1) {
        return Err(Error::InfeasibleFirstTrade);
    }
    let after = first.post_trade_reserves(delta1);
    let second = make_t(&after)?;
    let sequential = second.feasible(delta2);
    let combined: Vec<f64> = delta1.iter().zip(delta2.iter()).map(|(a, b)| a + b).collect();
    let aggregate = first.feasible(&combined);
    Ok(sequential == aggregate)
}
