//! Set-level composition: scaling, Minkowski sums, intersections, and
//! embeddings into a larger asset universe.
//!
//! Each combinator yields another reachable set, so composites nest and every
//! generic operation (membership bisection, value minimization, certificates)
//! applies unchanged. Closed forms are forwarded through the structure where
//! the algebra allows, which keeps common composites as cheap as their
//! leaves.

use crate::numerics::{minimize_positive_orthant, simplex_normalize, Tolerance};
use crate::reachable::{self, dot, ReachableSet, SharedSet};
use crate::{Error, Result};

/// Injection of a set's local asset coordinates into a larger universe.
///
/// `local_to_global[i]` is the global index of local asset `i`; the indices
/// are distinct and the remaining global coordinates are unconstrained
/// (beyond nonnegativity).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetMapping {
    local_to_global: Vec<usize>,
    global_dim: usize,
}

impl AssetMapping {
    /// # Errors
    /// Indices must be distinct and within `global_dim`; the map must be
    /// nonempty.
    pub fn new(local_to_global: Vec<usize>, global_dim: usize) -> Result<Self> {
        if local_to_global.is_empty() {
            return Err(Error::InvalidArgument("asset mapping must be nonempty".into()));
        }
        let mut seen = vec![false; global_dim];
        for &g in &local_to_global {
            if g >= global_dim {
                return Err(Error::IndexOutOfRange {
                    index: g,
                    dim: global_dim,
                });
            }
            if seen[g] {
                return Err(Error::InvalidArgument(format!(
                    "asset mapping repeats global index {g}"
                )));
            }
            seen[g] = true;
        }
        Ok(Self {
            local_to_global,
            global_dim,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn global_dim(&self) -> usize {
        self.global_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.local_to_global
    }

    /// Gather the local coordinates out of a global vector.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.local_to_global.iter().map(|&g| global[g]).collect()
    }

    /// Scatter local coordinates into a global vector, zero elsewhere.
    pub fn extend(&self, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.global_dim];
        for (l, &g) in self.local_to_global.iter().enumerate() {
            out[g] = local[l];
        }
        out
    }
}

/// A reachable set built from other reachable sets.
pub enum ComposedSet {
    /// Pointwise dilation `alpha * S`.
    Scaled { alpha: f64, child: SharedSet },
    /// Minkowski sum of same-dimension sets. Membership has no pointwise
    /// test, so it is decided through the dual: the summed value function
    /// must support the point, checked by minimizing over normalized prices
    /// at the stored tolerance.
    Sum {
        children: Vec<SharedSet>,
        tol: Tolerance,
    },
    /// Intersection of same-dimension sets.
    Intersection { children: Vec<SharedSet> },
    /// The set embedded in a larger asset universe through a mapping; the
    /// untouched coordinates are free nonnegative.
    AssetImage {
        mapping: AssetMapping,
        child: SharedSet,
    },
}

impl std::fmt::Debug for ComposedSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComposedSet::Scaled { alpha, .. } => {
                f.debug_struct("Scaled").field("alpha", alpha).finish_non_exhaustive()
            }
            ComposedSet::Sum { children, .. } => f
                .debug_struct("Sum")
                .field("children", &children.len())
                .finish_non_exhaustive(),
            ComposedSet::Intersection { children } => f
                .debug_struct("Intersection")
                .field("children", &children.len())
                .finish(),
            ComposedSet::AssetImage { mapping, .. } => f
                .debug_struct("AssetImage")
                .field("mapping", mapping)
                .finish_non_exhaustive(),
        }
    }
}

/// Dilate a set by a positive factor.
///
/// # Errors
/// [`Error::InvalidScale`] unless `alpha` is positive and finite.
pub fn scale_set(alpha: f64, child: SharedSet) -> Result<ComposedSet> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidScale(alpha));
    }
    Ok(ComposedSet::Scaled { alpha, child })
}

fn common_dim(children: &[SharedSet]) -> Result<usize> {
    let first = children
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one set".into()))?
        .dim();
    for ch in children {
        if ch.dim() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                got: ch.dim(),
            });
        }
    }
    Ok(first)
}

/// Minkowski sum of same-dimension sets. The tolerance governs the dual
/// membership test every `contains` call runs.
///
/// # Errors
/// Rejects an empty list, mismatched dimensions, or an invalid tolerance.
pub fn sum_sets(children: Vec<SharedSet>, tol: Tolerance) -> Result<ComposedSet> {
    tol.validate()?;
    common_dim(&children)?;
    Ok(ComposedSet::Sum { children, tol })
}

/// Intersection of same-dimension sets.
///
/// # Errors
/// Rejects an empty list or mismatched dimensions.
pub fn intersect_sets(children: Vec<SharedSet>) -> Result<ComposedSet> {
    common_dim(&children)?;
    Ok(ComposedSet::Intersection { children })
}

/// Embed a set into a larger asset universe.
///
/// # Errors
/// The mapping's local side must match the child's dimension.
pub fn asset_image(mapping: AssetMapping, child: SharedSet) -> Result<ComposedSet> {
    if mapping.local_dim() != child.dim() {
        return Err(Error::DimensionMismatch {
            expected: child.dim(),
            got: mapping.local_dim(),
        });
    }
    Ok(ComposedSet::AssetImage { mapping, child })
}

/// Aggregate pools quoted on overlapping asset subsets into one market-level
/// set: the Minkowski sum of the embedded children.
///
/// # Errors
/// All mappings must share a global dimension and fit their children; the
/// list must be nonempty.
pub fn aggregate(parts: Vec<(AssetMapping, SharedSet)>, tol: Tolerance) -> Result<ComposedSet> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("need at least one pool to aggregate".into()));
    }
    let global = parts[0].0.global_dim();
    let mut children: Vec<SharedSet> = Vec::with_capacity(parts.len());
    for (mapping, child) in parts {
        if mapping.global_dim() != global {
            return Err(Error::DimensionMismatch {
                expected: global,
                got: mapping.global_dim(),
            });
        }
        children.push(std::sync::Arc::new(asset_image(mapping, child)?));
    }
    sum_sets(children, tol)
}

fn shaped(r: &[f64], dim: usize) -> bool {
    r.len() == dim && r.iter().all(|x| x.is_finite() && *x >= 0.0)
}

impl ReachableSet for ComposedSet {
    fn dim(&self) -> usize {
        match self {
            ComposedSet::Scaled { child, .. } => child.dim(),
            ComposedSet::Sum { children, .. } | ComposedSet::Intersection { children } => {
                children[0].dim()
            }
            ComposedSet::AssetImage { mapping, .. } => mapping.global_dim(),
        }
    }

    fn contains(&self, r: &[f64]) -> bool {
        match self {
            ComposedSet::Scaled { alpha, child } => {
                if r.len() != child.dim() {
                    return false;
                }
                let descaled: Vec<f64> = r.iter().map(|x| x / alpha).collect();
                child.contains(&descaled)
            }
            ComposedSet::Sum { children, tol } => {
                let dim = children[0].dim();
                if !shaped(r, dim) {
                    return false;
                }
                // R is in the sum iff c.R >= sum of child values for every
                // price c; test the worst normalized price. A failed
                // minimization counts as non-membership.
                let objective = |y: &[f64]| {
                    let c = simplex_normalize(y);
                    let mut total = dot(&c, r);
                    for ch in children {
                        match reachable::portfolio_value(ch.as_ref(), &c, tol) {
                            Ok((v, _)) => total -= v,
                            Err(_) => return f64::INFINITY,
                        }
                    }
                    total
                };
                match minimize_positive_orthant(objective, dim, tol) {
                    Ok((y, worst)) => {
                        let c = simplex_normalize(&y);
                        let band = tol.abs.max(tol.rel * (1.0 + dot(&c, r).abs()));
                        worst.is_finite() && worst >= -band
                    }
                    Err(_) => false,
                }
            }
            ComposedSet::Intersection { children } => children.iter().all(|ch| ch.contains(r)),
            ComposedSet::AssetImage { mapping, child } => {
                shaped(r, mapping.global_dim()) && child.contains(&mapping.restrict(r))
            }
        }
    }

    fn invariant_value(&self, r: &[f64]) -> Option<f64> {
        match self {
            ComposedSet::Scaled { alpha, child } => {
                let descaled: Vec<f64> = r.iter().map(|x| x / alpha).collect();
                child.invariant_value(&descaled)
            }
            ComposedSet::AssetImage { mapping, child } => {
                child.invariant_value(&mapping.restrict(r))
            }
            _ => None,
        }
    }

    fn invariant_level(&self) -> Option<f64> {
        match self {
            ComposedSet::Scaled { child, .. } | ComposedSet::AssetImage { child, .. } => {
                child.invariant_level()
            }
            _ => None,
        }
    }

    fn phi_closed(&self, r: &[f64]) -> Option<f64> {
        match self {
            ComposedSet::Scaled { alpha, child } => {
                let descaled: Vec<f64> = r.iter().map(|x| x / alpha).collect();
                child.phi_closed(&descaled)
            }
            ComposedSet::Sum { .. } => None,
            ComposedSet::Intersection { children } => {
                let mut best = f64::INFINITY;
                for ch in children {
                    best = best.min(ch.phi_closed(r)?);
                }
                Some(best)
            }
            ComposedSet::AssetImage { mapping, child } => {
                child.phi_closed(&mapping.restrict(r))
            }
        }
    }

    fn grad_phi_closed(&self, r: &[f64]) -> Option<Vec<f64>> {
        match self {
            ComposedSet::Scaled { alpha, child } => {
                let descaled: Vec<f64> = r.iter().map(|x| x / alpha).collect();
                let g = child.grad_phi_closed(&descaled)?;
                Some(g.iter().map(|x| x / alpha).collect())
            }
            ComposedSet::AssetImage { mapping, child } => {
                let g = child.grad_phi_closed(&mapping.restrict(r))?;
                Some(mapping.extend(&g))
            }
            _ => None,
        }
    }

    fn pv_closed(&self, c: &[f64]) -> Option<f64> {
        match self {
            ComposedSet::Scaled { alpha, child } => Some(alpha * child.pv_closed(c)?),
            ComposedSet::Sum { children, .. } => {
                let mut total = 0.0;
                for ch in children {
                    total += ch.pv_closed(c)?;
                }
                Some(total)
            }
            ComposedSet::Intersection { .. } => None,
            ComposedSet::AssetImage { mapping, child } => {
                child.pv_closed(&mapping.restrict(c))
            }
        }
    }

    fn pv_minimizer_closed(&self, c: &[f64]) -> Option<Vec<f64>> {
        match self {
            ComposedSet::Scaled { alpha, child } => {
                let m = child.pv_minimizer_closed(c)?;
                Some(m.iter().map(|x| alpha * x).collect())
            }
            ComposedSet::Sum { children, .. } => {
                let mut agg = vec![0.0; c.len()];
                for ch in children {
                    let m = ch.pv_minimizer_closed(c)?;
                    for (a, x) in agg.iter_mut().zip(&m) {
                        *a += x;
                    }
                }
                Some(agg)
            }
            ComposedSet::Intersection { .. } => None,
            ComposedSet::AssetImage { mapping, child } => {
                let m = child.pv_minimizer_closed(&mapping.restrict(c))?;
                Some(mapping.extend(&m))
            }
        }
    }
}

/// Portfolio value of a composite, decomposed along its structure.
///
/// Scaling multiplies the child value, sums add child values (and child
/// minimizers), and embeddings restrict the price vector; intersections have
/// no such decomposition and fall back to the generic minimization over the
/// composite itself. One structural level is peeled here; deeper levels are
/// reached through each child's own closed forms or the generic path.
///
/// # Errors
/// Same contract as `reachable::portfolio_value`.
pub fn composed_pv(set: &ComposedSet, c: &[f64], tol: &Tolerance) -> Result<(f64, Vec<f64>)> {
    if c.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: c.len(),
        });
    }
    match set {
        ComposedSet::Scaled { alpha, child } => {
            let (v, m) = reachable::portfolio_value(child.as_ref(), c, tol)?;
            Ok((alpha * v, m.iter().map(|x| alpha * x).collect()))
        }
        ComposedSet::Sum { children, .. } => {
            let mut total = 0.0;
            let mut agg = vec![0.0; c.len()];
            for ch in children {
                let (v, m) = reachable::portfolio_value(ch.as_ref(), c, tol)?;
                total += v;
                for (a, x) in agg.iter_mut().zip(&m) {
                    *a += x;
                }
            }
            Ok((total, agg))
        }
        ComposedSet::Intersection { .. } => reachable::portfolio_value(set, c, tol),
        ComposedSet::AssetImage { mapping, child } => {
            let local = mapping.restrict(c);
            let (v, m) = reachable::portfolio_value(child.as_ref(), &local, tol)?;
            Ok((v, mapping.extend(&m)))
        }
    }
}
