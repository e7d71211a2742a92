//! JSON descriptions of pools and routing problems.
//!
//! These mirror the library types closely enough to build them, while
//! staying plain data so files can be written by hand. Composite sets nest
//! through `children`; routing instances name their assets and map each
//! pool onto the global universe by those names.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compose::{asset_image, intersect_sets, scale_set, sum_sets, AssetMapping};
use crate::numerics::Tolerance;
use crate::pools::{CurveTwoAsset, LmsrSet, UniswapV2, UniswapV3Tick};
use crate::reachable::SharedSet;
use crate::routing::{RoutingInstance, UtilitySpec};
use crate::trade::{FeePoolTradingSet, TradingSet};
use crate::{Error, Result};

/// A reachable set in data form. `children` carries the operands of the
/// composite variants; `scaled` and `asset_image` take exactly one child.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSpec {
    UniswapV2 {
        k: f64,
    },
    UniswapV3Tick {
        alpha: f64,
        beta: f64,
        k: f64,
    },
    Curve2 {
        alpha: f64,
        k: f64,
    },
    Lmsr {
        b: f64,
        n: usize,
    },
    Scaled {
        alpha: f64,
        children: Vec<PoolSpec>,
    },
    Sum {
        children: Vec<PoolSpec>,
    },
    Intersection {
        children: Vec<PoolSpec>,
    },
    AssetImage {
        mapping: Vec<usize>,
        global_dim: usize,
        children: Vec<PoolSpec>,
    },
}

fn one_child(children: &[PoolSpec], what: &str) -> Result<PoolSpec> {
    match children {
        [only] => Ok(only.clone()),
        _ => Err(Error::Parse(format!(
            "{what} takes exactly one child, got {}",
            children.len()
        ))),
    }
}

impl PoolSpec {
    /// Build the described set. `tol` seeds the membership tolerance of
    /// composites that need one.
    ///
    /// # Errors
    /// Parameter validation of the underlying constructors, plus arity
    /// errors for composites.
    pub fn build(&self, tol: &Tolerance) -> Result<SharedSet> {
        match self {
            Self::UniswapV2 { k } => Ok(Arc::new(UniswapV2::new(*k)?)),
            Self::UniswapV3Tick { alpha, beta, k } => {
                Ok(Arc::new(UniswapV3Tick::new(*alpha, *beta, *k)?))
            }
            Self::Curve2 { alpha, k } => Ok(Arc::new(CurveTwoAsset::new(*alpha, *k)?)),
            Self::Lmsr { b, n } => Ok(Arc::new(LmsrSet::new(*b, *n)?)),
            Self::Scaled { alpha, children } => {
                let child = one_child(children, "scaled")?.build(tol)?;
                Ok(Arc::new(scale_set(*alpha, child)?))
            }
            Self::Sum { children } => {
                let built = children
                    .iter()
                    .map(|c| c.build(tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(sum_sets(built, *tol)?))
            }
            Self::Intersection { children } => {
                let built = children
                    .iter()
                    .map(|c| c.build(tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(intersect_sets(built)?))
            }
            Self::AssetImage {
                mapping,
                global_dim,
                children,
            } => {
                let child = one_child(children, "asset_image")?.build(tol)?;
                let mapping = AssetMapping::new(mapping.clone(), *global_dim)?;
                Ok(Arc::new(asset_image(mapping, child)?))
            }
        }
    }
}

/// One market inside a routing problem: a pool, its live reserves, a fee
/// retention factor, and the global names of its local assets in order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RoutingPoolSpec {
    pub pool: PoolSpec,
    pub reserves: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub assets: Vec<String>,
}

fn default_gamma() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityJson {
    Arbitrage { prices: Vec<f64> },
}

/// A routing problem in data form. `assets` fixes the global order that
/// `prices` and every pool's `assets` list resolve against.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RoutingSpec {
    pub assets: Vec<String>,
    pub pools: Vec<RoutingPoolSpec>,
    pub utility: UtilityJson,
}

impl RoutingSpec {
    /// Resolve names, build every pool, and assemble the instance.
    ///
    /// # Errors
    /// Unknown or duplicate asset names, reserves outside a pool's set, and
    /// any constructor failure from the parts.
    pub fn build(&self, tol: &Tolerance) -> Result<RoutingInstance> {
        let mut index = BTreeMap::new();
        for (i, name) in self.assets.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::Parse(format!("duplicate asset name {name:?}")));
            }
        }
        let n = self.assets.len();
        let mut pools: Vec<(Box<dyn TradingSet>, AssetMapping)> = Vec::with_capacity(self.pools.len());
        for entry in &self.pools {
            let local_to_global = entry
                .assets
                .iter()
                .map(|name| {
                    index
                        .get(name.as_str())
                        .copied()
                        .ok_or_else(|| Error::Parse(format!("unknown asset name {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mapping = AssetMapping::new(local_to_global, n)?;
            let set = entry.pool.build(tol)?;
            let trading = FeePoolTradingSet::new(set, entry.reserves.clone(), entry.gamma)?;
            pools.push((Box::new(trading), mapping));
        }
        let utility = match &self.utility {
            UtilityJson::Arbitrage { prices } => UtilitySpec::Arbitrage {
                prices: prices.clone(),
            },
        };
        RoutingInstance::new(n, pools, utility)
    }
}

/// Parse a pool description from JSON text.
///
/// # Errors
/// [`Error::Parse`] describing what the document got wrong.
pub fn parse_pool_spec(text: &str) -> Result<PoolSpec> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("pool spec: {e}")))
}

/// Parse a routing problem from JSON text.
///
/// # Errors
/// [`Error::Parse`] describing what the document got wrong.
pub fn parse_routing_spec(text: &str) -> Result<RoutingSpec> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("routing spec: {e}")))
}

/// Parse a share ledger from JSON text: a flat object of provider to
/// weight.
///
/// # Errors
/// [`Error::Parse`] on malformed JSON; weight validation happens in
/// [`crate::lp::ShareLedger::new`].
pub fn parse_ledger(text: &str) -> Result<BTreeMap<String, f64>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("ledger: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reachable;
    use crate::routing::route;

    #[test]
    fn every_leaf_variant_builds() {
        let tol = Tolerance::default();
        let cases = [
            (r#"{"type":"uniswap_v2","k":4.0}"#, [4.0, 4.0], 2.0),
            (
                r#"{"type":"uniswap_v3_tick","alpha":1.0,"beta":1.0,"k":4.0}"#,
                [1.0, 1.0],
                1.0,
            ),
            (r#"{"type":"curve2","alpha":1.0,"k":1.0}"#, [1.0, 1.0], 1.0),
        ];
        for (text, reserves, want) in cases {
            let set = parse_pool_spec(text).unwrap().build(&tol).unwrap();
            let phi = reachable::phi(set.as_ref(), &reserves, &tol).unwrap();
            assert!((phi - want).abs() <= 1e-9, "{text}: {phi} vs {want}");
        }
        let lmsr = parse_pool_spec(r#"{"type":"lmsr","b":1.0,"n":3}"#)
            .unwrap()
            .build(&tol)
            .unwrap();
        assert_eq!(lmsr.dim(), 3);
    }

    #[test]
    fn composites_nest() {
        let tol = Tolerance::default();
        let text = r#"{
            "type": "scaled",
            "alpha": 2.0,
            "children": [{"type": "uniswap_v2", "k": 1.0}]
        }"#;
        let set = parse_pool_spec(text).unwrap().build(&tol).unwrap();
        let phi = reachable::phi(set.as_ref(), &[4.0, 4.0], &tol).unwrap();
        assert!((phi - 2.0).abs() <= 1e-9, "doubling a unit pool matches k = 4");

        let text = r#"{
            "type": "sum",
            "children": [
                {"type": "uniswap_v2", "k": 1.0},
                {"type": "uniswap_v2", "k": 1.0}
            ]
        }"#;
        let set = parse_pool_spec(text).unwrap().build(&tol).unwrap();
        assert!(reachable::contains(set.as_ref(), &[2.0, 2.0]).unwrap());

        let text = r#"{
            "type": "asset_image",
            "mapping": [0, 2],
            "global_dim": 3,
            "children": [{"type": "uniswap_v2", "k": 1.0}]
        }"#;
        let set = parse_pool_spec(text).unwrap().build(&tol).unwrap();
        assert_eq!(set.dim(), 3);
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        assert!(matches!(
            parse_pool_spec(r#"{"type":"uniswap_v4","k":1.0}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_pool_spec(r#"{"type":"uniswap_v2","k":1.0,"extra":true}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_pool_spec(r#"{"type":"scaled","alpha":2.0,"children":[]}"#)
                .unwrap()
                .build(&Tolerance::default()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_pool_spec("not json"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn routing_spec_resolves_names_and_routes() {
        let tol = Tolerance::default();
        let text = r#"{
            "assets": ["X", "Y"],
            "pools": [
                {
                    "pool": {"type": "uniswap_v2", "k": 2.0},
                    "reserves": [1.0, 2.0],
                    "gamma": 1.0,
                    "assets": ["X", "Y"]
                },
                {
                    "pool": {"type": "uniswap_v2", "k": 2.0},
                    "reserves": [2.0, 1.0],
                    "assets": ["X", "Y"]
                }
            ],
            "utility": {"type": "arbitrage", "prices": [1.0, 1.0]}
        }"#;
        let instance = parse_routing_spec(text).unwrap().build(&tol).unwrap();
        let sol = route(&instance, &tol).unwrap();
        let expected = 2.0 * (3.0 - 2.0 * 2.0_f64.sqrt());
        assert!((sol.primal - expected).abs() <= 1e-6);
    }

    #[test]
    fn routing_spec_rejects_bad_names_and_reserves() {
        let tol = Tolerance::default();
        let unknown = r#"{
            "assets": ["X", "Y"],
            "pools": [{
                "pool": {"type": "uniswap_v2", "k": 1.0},
                "reserves": [1.0, 1.0],
                "assets": ["X", "Z"]
            }],
            "utility": {"type": "arbitrage", "prices": [1.0, 1.0]}
        }"#;
        assert!(matches!(
            parse_routing_spec(unknown).unwrap().build(&tol),
            Err(Error::Parse(_))
        ));

        let duplicate = r#"{
            "assets": ["X", "X"],
            "pools": [],
            "utility": {"type": "arbitrage", "prices": [1.0, 1.0]}
        }"#;
        assert!(matches!(
            parse_routing_spec(duplicate).unwrap().build(&tol),
            Err(Error::Parse(_))
        ));

        let off_curve = r#"{
            "assets": ["X", "Y"],
            "pools": [{
                "pool": {"type": "uniswap_v2", "k": 100.0},
                "reserves": [1.0, 1.0],
                "assets": ["X", "Y"]
            }],
            "utility": {"type": "arbitrage", "prices": [1.0, 1.0]}
        }"#;
        assert!(matches!(
            parse_routing_spec(off_curve).unwrap().build(&tol),
            Err(Error::NotInSet)
        ));
    }

    #[test]
    fn specs_round_trip_through_serialization() {
        let spec = PoolSpec::Sum {
            children: vec![
                PoolSpec::UniswapV2 { k: 1.0 },
                PoolSpec::Scaled {
                    alpha: 3.0,
                    children: vec![PoolSpec::Curve2 { alpha: 0.5, k: 2.0 }],
                },
            ],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(parse_pool_spec(&text).unwrap(), spec);
    }
}
