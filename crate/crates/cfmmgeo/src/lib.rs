//! Geometry of constant function market makers.
//!
//! A fee-free CFMM is modeled as a *reachable set*: the closed, convex,
//! upward-closed set of nonnegative reserve vectors the market is willing to
//! hold. Everything else in this crate is derived from that one object:
//!
//! - [`reachable`] defines the set abstraction, the canonical trading
//!   function `phi` (concave, homogeneous, nondecreasing), marginal prices,
//!   and the portfolio value `V(c) = min { c'R : R in S }`.
//! - [`pools`] provides the closed-form reference pools (constant product,
//!   a concentrated-liquidity tick, a two-asset Curve-style set, and an
//!   LMSR-derived set) used as analytic oracles for the generic routines.
//! - [`duality`] implements the conic machinery: liquidity-cone and
//!   dual-cone membership, the transforms between `phi` and `V` in both
//!   directions, the sign witness `phi0`, and separation certificates.
//! - [`compose`] builds new sets from old ones (scaling, Minkowski sums,
//!   intersections, asset embeddings) with portfolio values composed
//!   homomorphically.
//! - [`prediction`] converts between reachable sets and prediction-market
//!   cost functions, with a numerically stable LMSR and expected payoffs.
//! - [`trade`] covers the fee-aware single-trade model: trading sets, the
//!   convex trading function, arbitrage profit, no-trade and marginal-price
//!   cones, bounded liquidity, and path-independence checks.
//! - [`routing`] solves optimal routing across several pools through dual
//!   decomposition over per-pool arbitrage subproblems.
//! - [`lp`] tracks liquidity-provider share weights under proportional
//!   reserve changes.
//! - [`numerics`] holds the scalar root finding and derivative-free
//!   minimization everything above relies on.
//! - [`schema`] parses the JSON pool and routing descriptions consumed by
//!   the command-line tool and the C bindings.
//!
//! All numerical routines are deterministic: identical inputs produce
//! identical outputs, bit for bit.

pub mod compose;
mod error;
pub mod duality;
pub mod lp;
pub mod numerics;
pub mod pools;
pub mod prediction;
pub mod reachable;
pub mod routing;
pub mod schema;
pub mod trade;

pub use error::{Error, Result};
