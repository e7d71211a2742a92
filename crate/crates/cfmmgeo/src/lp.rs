//! Liquidity provision accounting.
//!
//! Providers own fractional shares of a pool. Deposits and withdrawals that
//! scale the reserves proportionally leave marginal prices untouched, so
//! share bookkeeping reduces to reweighting a ledger while the reserves
//! scale by the same factor.

use std::collections::BTreeMap;

use crate::numerics::Tolerance;
use crate::reachable::{marginal_prices, ReachableSet};
use crate::{Error, Result};

/// Fractional pool ownership per provider. Weights are nonnegative and sum
/// to one; lookups of unknown providers read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareLedger {
    weights: BTreeMap<String, f64>,
}

impl ShareLedger {
    /// Build a ledger from explicit weights. The sum may be off from one by
    /// rounding (up to `1e-9`); it is renormalized exactly.
    ///
    /// # Errors
    /// Weights must be nonnegative and finite, and their sum close to one.
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("share ledger must not be empty".into()));
        }
        for (who, w) in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "share of {who} must be nonnegative and finite, got {w}"
                )));
            }
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "shares must sum to one, got {total}"
            )));
        }
        let mut ledger = Self { weights };
        ledger.renormalize();
        Ok(ledger)
    }

    /// A ledger with a single provider owning the whole pool.
    pub fn sole(provider: impl Into<String>) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(provider.into(), 1.0);
        Self { weights }
    }

    /// Current share of a provider; zero for providers never seen.
    pub fn weight(&self, provider: &str) -> f64 {
        self.weights.get(provider).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    fn renormalize(&mut self) {
        let total: f64 = self.weights.values().sum();
        if total > 0.0 && (total - 1.0).abs() > 1e-13 {
            for w in self.weights.values_mut() {
                *w /= total;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiquidityDirection {
    Add,
    Remove,
}

/// A deposit or withdrawal, sized as a fraction of the pool.
///
/// For a deposit, `fraction` is the ratio of new capital to the pool's
/// current value; for a withdrawal it is the share of the pool being
/// redeemed and may not exceed the provider's weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidityEvent {
    pub provider: String,
    pub fraction: f64,
    pub direction: LiquidityDirection,
}

/// Apply one deposit or withdrawal, returning the reweighted ledger and the
/// proportionally scaled reserves. The inputs are left untouched.
///
/// # Errors
/// [`Error::NonPositiveFraction`] unless `fraction > 0` and finite;
/// [`Error::RemoveExceedsShare`] when a withdrawal exceeds the provider's
/// weight or would drain the pool entirely.
pub fn apply_liquidity(
    ledger: &ShareLedger,
    reserves: &[f64],
    event: &LiquidityEvent,
) -> Result<(ShareLedger, Vec<f64>)> {
    let nu = event.fraction;
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::NonPositiveFraction);
    }
    if reserves.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reserves must be nonnegative and finite, got {reserves:?}"
        )));
    }
    let held = ledger.weight(&event.provider);
    let factor = match event.direction {
        LiquidityDirection::Add => 1.0 + nu,
        LiquidityDirection::Remove => {
            if nu > held || nu >= 1.0 {
                return Err(Error::RemoveExceedsShare);
            }
            1.0 - nu
        }
    };
    let signed = match event.direction {
        LiquidityDirection::Add => nu,
        LiquidityDirection::Remove => -nu,
    };
    let mut weights = ledger.weights.clone();
    for w in weights.values_mut() {
        *w /= factor;
    }
    let entry = weights.entry(event.provider.clone()).or_insert(0.0);
    *entry = (held + signed) / factor;
    let mut next = ShareLedger { weights };
    next.renormalize();
    let scaled = reserves.iter().map(|r| r * factor).collect();
    Ok((next, scaled))
}

/// Check that scaling the reserves by `1 + nu` leaves the normalized
/// marginal prices unchanged within tolerance. Proportional deposits and
/// withdrawals should pass; anything that skews the reserve ratio should
/// not.
///
/// # Errors
/// Reserves must be strictly positive with prices defined at both the
/// original and scaled points; `1 + nu` must be positive.
pub fn price_invariance_check(
    set: &dyn ReachableSet,
    reserves: &[f64],
    nu: f64,
    tol: &Tolerance,
) -> Result<bool> {
    if !nu.is_finite() || 1.0 + nu <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "scaling by 1 + nu requires nu > -1, got {nu}"
        )));
    }
    let before = marginal_prices(set, reserves, tol)?;
    let scaled: Vec<f64> = reserves.iter().map(|r| r * (1.0 + nu)).collect();
    let after = marginal_prices(set, &scaled, tol)?;
    Ok(before.iter().zip(after.iter()).all(|(p, q)| {
        let band = tol.abs.max(1e-6 * (1.0 + p.abs()));
        (p - q).abs() <= band
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pools::{UniswapV2, UniswapV3Tick};

    fn event(provider: &str, fraction: f64, direction: LiquidityDirection) -> LiquidityEvent {
        LiquidityEvent {
            provider: provider.into(),
            fraction,
            direction,
        }
    }

    #[test]
    fn new_provider_doubling_the_pool_takes_half() {
        let ledger = ShareLedger::sole("alice");
        let reserves = [3.0, 12.0];
        let (next, scaled) =
            apply_liquidity(&ledger, &reserves, &event("bob", 1.0, LiquidityDirection::Add))
                .unwrap();
        assert!((next.weight("alice") - 0.5).abs() <= 1e-15);
        assert!((next.weight("bob") - 0.5).abs() <= 1e-15);
        assert_eq!(scaled, vec![6.0, 24.0]);
        assert_eq!(ledger.weight("alice"), 1.0, "the input ledger is untouched");
    }

    #[test]
    fn full_withdrawal_of_a_half_share() {
        let ledger = ShareLedger::sole("alice");
        let (ledger, reserves) =
            apply_liquidity(&ledger, &[1.0, 1.0], &event("bob", 1.0, LiquidityDirection::Add))
                .unwrap();
        let (next, scaled) =
            apply_liquidity(&ledger, &reserves, &event("alice", 0.5, LiquidityDirection::Remove))
                .unwrap();
        assert_eq!(next.weight("alice"), 0.0);
        assert!((next.weight("bob") - 1.0).abs() <= 1e-15);
        assert_eq!(scaled, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_and_negative_fractions_are_rejected() {
        let ledger = ShareLedger::sole("alice");
        for bad in [0.0, -0.25, f64::NAN] {
            let err = apply_liquidity(&ledger, &[1.0], &event("bob", bad, LiquidityDirection::Add))
                .unwrap_err();
            assert!(matches!(err, Error::NonPositiveFraction));
        }
    }

    #[test]
    fn withdrawals_cannot_exceed_the_held_share() {
        let ledger = ShareLedger::sole("alice");
        let (ledger, reserves) =
            apply_liquidity(&ledger, &[1.0, 1.0], &event("bob", 0.25, LiquidityDirection::Add))
                .unwrap();
        let err = apply_liquidity(
            &ledger,
            &reserves,
            &event("bob", 0.3, LiquidityDirection::Remove),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RemoveExceedsShare));
        let err = apply_liquidity(
            &ledger,
            &reserves,
            &event("alice", 1.0, LiquidityDirection::Remove),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RemoveExceedsShare), "draining the pool has no successor state");
    }

    #[test]
    fn unknown_withdrawers_hold_nothing() {
        let ledger = ShareLedger::sole("alice");
        let err = apply_liquidity(
            &ledger,
            &[1.0],
            &event("mallory", 0.1, LiquidityDirection::Remove),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RemoveExceedsShare));
    }

    #[test]
    fn weights_stay_normalized_across_many_events() {
        let mut ledger = ShareLedger::sole("p0");
        let mut reserves = vec![1.0, 1.0];
        for i in 0..2000 {
            let who = format!("p{}", i % 7);
            let fraction = 0.01 + 0.37 * ((i * 2654435761_usize % 1000) as f64 / 1000.0);
            let ev = if i % 3 == 0 && ledger.weight(&who) > fraction {
                event(&who, fraction, LiquidityDirection::Remove)
            } else {
                event(&who, fraction, LiquidityDirection::Add)
            };
            let (next, scaled) = apply_liquidity(&ledger, &reserves, &ev).unwrap();
            ledger = next;
            reserves = scaled;
            assert!((ledger.total() - 1.0).abs() <= 1e-12, "after event {i}");
            assert!(ledger.weights().values().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn bystander_value_is_untouched_by_others_deposits() {
        // A provider who sits out a deposit keeps the same slice of a pool
        // whose value grew by the same factor the weights shrank by.
        let ledger = ShareLedger::sole("alice");
        let (ledger, _) =
            apply_liquidity(&ledger, &[1.0, 4.0], &event("bob", 0.8, LiquidityDirection::Add))
                .unwrap();
        let value_factor = 1.8;
        let alice_before = 1.0;
        let alice_after = ledger.weight("alice") * value_factor;
        assert!((alice_after - alice_before).abs() <= 1e-12);
        let bob_gain = ledger.weight("bob") * value_factor;
        assert!((bob_gain - 0.8).abs() <= 1e-12, "the depositor owns exactly what was put in");
    }

    #[test]
    fn ledger_constructor_validates() {
        let mut raw = BTreeMap::new();
        raw.insert("a".to_string(), 0.25);
        raw.insert("b".to_string(), 0.75 + 3e-10);
        let ledger = ShareLedger::new(raw).unwrap();
        assert!((ledger.total() - 1.0).abs() <= 1e-15, "small drift is renormalized away");

        let mut bad = BTreeMap::new();
        bad.insert("a".to_string(), 0.5);
        assert!(ShareLedger::new(bad.clone()).is_err(), "sum far from one");
        bad.insert("b".to_string(), -0.1);
        assert!(ShareLedger::new(bad).is_err(), "negative weight");
    }

    #[test]
    fn proportional_scaling_preserves_prices() {
        let v2 = UniswapV2::new(1.0).unwrap();
        let tol = Tolerance::default();
        assert!(price_invariance_check(&v2, &[1.0, 4.0], 0.5, &tol).unwrap());
        let tick = UniswapV3Tick::new(0.5, 0.5, 2.0).unwrap();
        assert!(price_invariance_check(&tick, &[1.0, 1.0], 1.0, &tol).unwrap());
    }

    #[test]
    fn skewed_reserve_changes_move_prices() {
        // Compare the pool against itself after a one-sided top-up rather
        // than a proportional one: prices at (2, 4) differ from (1, 4).
        let v2 = UniswapV2::new(1.0).unwrap();
        let tol = Tolerance::default();
        let before = marginal_prices(&v2, &[1.0, 4.0], &tol).unwrap();
        let after = marginal_prices(&v2, &[2.0, 4.0], &tol).unwrap();
        let moved = before
            .iter()
            .zip(after.iter())
            .any(|(p, q)| (p - q).abs() > 1e-3);
        assert!(moved);
        assert!(price_invariance_check(&v2, &[1.0, 4.0], -0.5, &tol).unwrap(), "scaling down works too");
    }
}
