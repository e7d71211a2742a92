//! Scalar root finding and low-dimensional derivative-free minimization.
//!
//! Every routine here is deterministic and allocation-light. The rest of the
//! crate reduces its numerical work to three primitives: locating the flip
//! point of a monotone predicate by bisection, shrinking a bracket around the
//! minimum of a unimodal function by golden-section steps, and cyclic
//! coordinate descent over the strictly positive orthant in log coordinates.

use crate::{Error, Result};

/// Convergence control shared by all iterative routines.
///
/// A scalar result `x` is accepted once the enclosing interval is narrower
/// than `max(abs, rel * |x|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Relative tolerance.
    pub rel: f64,
    /// Absolute tolerance.
    pub abs: f64,
    /// Iteration budget (bisection steps, golden-section steps, or
    /// coordinate-descent sweeps, depending on the routine).
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0) || !self.rel.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "relative tolerance must be positive and finite, got {}",
                self.rel
            )));
        }
        if !(self.abs > 0.0) || !self.abs.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "absolute tolerance must be positive and finite, got {}",
                self.abs
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "iteration budget must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Acceptable interval width around a value of magnitude `x`.
    pub fn width_at(&self, x: f64) -> f64 {
        self.abs.max(self.rel * x.abs())
    }
}

/// An interval whose endpoints straddle a predicate flip or enclose a
/// minimum.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bracket requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Locates the flip point of a monotone predicate inside `bracket`.
///
/// The predicate must be monotone on the bracket: true below some threshold
/// and false above it, or the reverse. On success the returned point is the
/// endpoint of the final interval on which the predicate holds, so callers
/// always receive a feasible witness no further than one tolerance width
/// from the true threshold.
///
/// # Errors
/// * [`Error::NonBracketing`] if the predicate agrees at both endpoints.
/// * [`Error::MaxIterExceeded`] if the budget runs out first. Intervals that
///   collapse to adjacent floating-point numbers count as converged.
pub fn bisect_boundary<P>(mut pred: P, bracket: Bracket, tol: &Tolerance) -> Result<f64>
where
    P: FnMut(f64) -> bool,
{
    tol.validate()?;
    let mut lo = bracket.lo;
    let mut hi = bracket.hi;
    let p_lo = pred(lo);
    if p_lo == pred(hi) {
        return Err(Error::NonBracketing);
    }
    let feasible = |lo: f64, hi: f64| if p_lo { lo } else { hi };
    for _ in 0..tol.max_iter {
        if hi - lo <= tol.width_at(0.5 * (lo + hi)) {
            return Ok(feasible(lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // The interval has collapsed to machine precision.
            return Ok(feasible(lo, hi));
        }
        if pred(mid) == p_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= tol.width_at(0.5 * (lo + hi)) {
        return Ok(feasible(lo, hi));
    }
    Err(Error::MaxIterExceeded {
        max_iter: tol.max_iter,
    })
}

/// Grows a bracket around the flip point of a monotone predicate by repeated
/// doubling above the seed and halving below it.
///
/// At most 128 steps are taken in each direction, clamped to the range
/// `[1e-300, 1e300]`.
///
/// # Errors
/// * [`Error::NoBracketFound`] if the predicate never changes value, which
///   signals a threshold at 0 or infinity; callers decide what that means
///   (for trading functions it encodes the 0 and unbounded cases).
pub fn expand_bracket<P>(mut pred: P, seed: f64) -> Result<Bracket>
where
    P: FnMut(f64) -> bool,
{
    if !(seed > 0.0) || !seed.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bracket seed must be positive and finite, got {seed}"
        )));
    }
    let p0 = pred(seed);
    let mut prev = seed;
    for _ in 0..128 {
        let cur = prev * 2.0;
        if cur > 1e300 {
            break;
        }
        if pred(cur) != p0 {
            return Bracket::new(prev, cur);
        }
        prev = cur;
    }
    prev = seed;
    for _ in 0..128 {
        let cur = prev * 0.5;
        if cur < 1e-300 {
            break;
        }
        if pred(cur) != p0 {
            return Bracket::new(cur, prev);
        }
        prev = cur;
    }
    Err(Error::NoBracketFound { seed })
}

/// Minimizes a convex (or merely unimodal) scalar function on a bracket by
/// golden-section search. Returns `(argmin, min)`.
///
/// The bracket shrinks by the inverse golden ratio each step, so the default
/// budget comfortably reaches machine-level interval widths. Function values
/// of `+inf` are tolerated; the search drifts into the finite region.
pub fn minimize_scalar_convex<G>(mut g: G, bracket: Bracket, tol: &Tolerance) -> Result<(f64, f64)>
where
    G: FnMut(f64) -> f64,
{
    tol.validate()?;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    const INV_PHI2: f64 = 1.0 - INV_PHI;
    let mut a = bracket.lo;
    let mut b = bracket.hi;
    let mut x1 = a + INV_PHI2 * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..tol.max_iter {
        if b - a <= tol.width_at(0.5 * (a + b)) {
            let xm = 0.5 * (a + b);
            return Ok((xm, g(xm)));
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_PHI2 * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = g(x2);
        }
        if !(x1 < x2) {
            // Adjacent floats: the bracket cannot shrink further.
            let xm = 0.5 * (a + b);
            return Ok((xm, g(xm)));
        }
    }
    Err(Error::MaxIterExceeded {
        max_iter: tol.max_iter,
    })
}

/// Minimizes a convex function over the strictly positive orthant by cyclic
/// coordinate descent in log coordinates. Returns `(argmin, min)`.
///
/// Each coordinate is line-searched by golden section over a symmetric
/// window in its logarithm; the window widens (up to `e^40` in each
/// direction) whenever the line minimum lands on the window edge. Working in
/// logarithms keeps all iterates strictly positive without projection.
///
/// Homogeneous objectives have no isolated minimizer over the orthant;
/// normalize them first (divide the argument by its coordinate sum) so the
/// search effectively runs on the unit simplex, and rescale afterwards.
pub fn minimize_positive_orthant<G>(
    mut g: G,
    dim: usize,
    tol: &Tolerance,
) -> Result<(Vec<f64>, f64)>
where
    G: FnMut(&[f64]) -> f64,
{
    tol.validate()?;
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "cannot minimize over a zero-dimensional orthant".to_string(),
        ));
    }
    let mut x = vec![1.0; dim];
    let mut fx = g(&x);
    let line_tol = Tolerance {
        max_iter: tol.max_iter.max(120),
        ..*tol
    };
    for _ in 0..tol.max_iter {
        let f_before = fx;
        for i in 0..dim {
            let t0 = x[i].ln();
            let mut half_width = 2.0;
            loop {
                let lo = t0 - half_width;
                let hi = t0 + half_width;
                let line = |t: f64| {
                    let mut y = x.clone();
                    y[i] = t.exp();
                    g(&y)
                };
                let (t_min, f_min) =
                    minimize_scalar_convex(line, Bracket { lo, hi }, &line_tol)?;
                let edge = 0.01 * half_width;
                let pinned = t_min <= lo + edge || t_min >= hi - edge;
                if !pinned || half_width >= 40.0 {
                    if f_min < fx {
                        x[i] = t_min.exp();
                        fx = f_min;
                    }
                    break;
                }
                half_width *= 4.0;
            }
        }
        if f_before - fx <= tol.abs.max(tol.rel * fx.abs()) {
            return Ok((x, fx));
        }
    }
    Err(Error::MaxIterExceeded {
        max_iter: tol.max_iter,
    })
}

/// Projects a positive vector onto the unit simplex with a floor of `1e-9`
/// on every coordinate.
///
/// Minimizations of homogeneous objectives run over simplex-normalized
/// arguments; the floor keeps evaluations away from the boundary, where the
/// objectives below are defined only as limits.
pub fn simplex_normalize(y: &[f64]) -> Vec<f64> {
    const FLOOR: f64 = 1e-9;
    let sum: f64 = y.iter().sum();
    let mut c: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        y.iter().map(|v| (v / sum).max(FLOOR)).collect()
    } else {
        vec![1.0 / y.len() as f64; y.len()]
    };
    let renorm: f64 = c.iter().sum();
    for v in &mut c {
        *v /= renorm;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_square_root_threshold() {
        let tol = Tolerance::default();
        let x = bisect_boundary(|x| x * x <= 4.0, Bracket { lo: 0.0, hi: 10.0 }, &tol).unwrap();
        assert!((x - 2.0).abs() <= tol.width_at(2.0) * 2.0, "got {x}");
    }

    #[test]
    fn bisection_finds_unit_scale_of_constant_product_boundary() {
        // (1/lambda)^2 >= 1 holds up to lambda = 1.
        let tol = Tolerance::default();
        let x = bisect_boundary(
            |l| (1.0 / l) * (1.0 / l) >= 1.0,
            Bracket { lo: 0.5, hi: 8.0 },
            &tol,
        )
        .unwrap();
        assert!((x - 1.0).abs() <= 1e-9, "got {x}");
    }

    #[test]
    fn bisection_solves_exponential_threshold() {
        // 2 * exp(-ln 2 / lambda) <= 1 exactly up to lambda = 1.
        let tol = Tolerance::default();
        let ln2 = std::f64::consts::LN_2;
        let x = bisect_boundary(
            |l| 2.0 * (-ln2 / l).exp() <= 1.0,
            Bracket { lo: 0.1, hi: 10.0 },
            &tol,
        )
        .unwrap();
        assert!((x - 1.0).abs() <= 1e-9, "got {x}");
    }

    #[test]
    fn bisection_rejects_non_bracketing_interval() {
        let r = bisect_boundary(
            |x| x < 100.0,
            Bracket { lo: 0.0, hi: 10.0 },
            &Tolerance::default(),
        );
        assert!(matches!(r, Err(Error::NonBracketing)));
    }

    #[test]
    fn bisection_returns_the_feasible_side() {
        let tol = Tolerance::default();
        let x = bisect_boundary(|x| x * x <= 4.0, Bracket { lo: 0.0, hi: 10.0 }, &tol).unwrap();
        assert!(x * x <= 4.0, "result must satisfy the predicate, got {x}");
        let y = bisect_boundary(|x| x * x >= 4.0, Bracket { lo: 0.0, hi: 10.0 }, &tol).unwrap();
        assert!(y * y >= 4.0, "result must satisfy the predicate, got {y}");
    }

    #[test]
    fn bisection_is_deterministic() {
        let tol = Tolerance::default();
        let run = || {
            bisect_boundary(
                |x| x.sin() > 0.1,
                Bracket { lo: 0.2, hi: 3.1 },
                &tol,
            )
            .unwrap()
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }

    #[test]
    fn expansion_brackets_a_threshold_above_the_seed() {
        let b = expand_bracket(|x| x <= 5.0, 1.0).unwrap();
        assert!(b.lo <= 5.0 && 5.0 <= b.hi, "bracket [{}, {}]", b.lo, b.hi);
    }

    #[test]
    fn expansion_brackets_a_threshold_below_the_seed() {
        let b = expand_bracket(|x| x <= 0.01, 1.0).unwrap();
        assert!(b.lo <= 0.01 && 0.01 <= b.hi, "bracket [{}, {}]", b.lo, b.hi);
    }

    #[test]
    fn expansion_fails_for_a_constant_predicate() {
        let r = expand_bracket(|_| true, 1.0);
        assert!(matches!(r, Err(Error::NoBracketFound { .. })));
    }

    #[test]
    fn golden_section_minimizes_sum_of_reciprocal_pair() {
        let (x, v) = minimize_scalar_convex(
            |x| x + 1.0 / x,
            Bracket { lo: 0.01, hi: 100.0 },
            &Tolerance::default(),
        )
        .unwrap();
        assert!((x - 1.0).abs() <= 1e-6, "argmin {x}");
        assert!((v - 2.0).abs() <= 1e-9, "min {v}");
    }

    #[test]
    fn golden_section_minimizes_shifted_parabola() {
        let (x, v) = minimize_scalar_convex(
            |x| (x - 3.0) * (x - 3.0),
            Bracket { lo: 0.0, hi: 10.0 },
            &Tolerance::default(),
        )
        .unwrap();
        assert!((x - 3.0).abs() <= 1e-6, "argmin {x}");
        assert!(v.abs() <= 1e-12, "min {v}");
    }

    #[test]
    fn golden_section_handles_asymmetric_weights() {
        let (x, v) = minimize_scalar_convex(
            |x| 4.0 * x + 1.0 / x,
            Bracket { lo: 0.01, hi: 100.0 },
            &Tolerance::default(),
        )
        .unwrap();
        assert!((x - 0.5).abs() <= 1e-6, "argmin {x}");
        assert!((v - 4.0).abs() <= 1e-9, "min {v}");
    }

    #[test]
    fn coordinate_descent_recovers_quadratic_minimizer() {
        let (x, v) = minimize_positive_orthant(
            |c| (c[0] - 1.0).powi(2) + (c[1] - 2.0).powi(2),
            2,
            &Tolerance::default(),
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-6 && (x[1] - 2.0).abs() <= 1e-6, "{x:?}");
        assert!(v <= 1e-10, "min {v}");
    }

    #[test]
    fn coordinate_descent_finds_geometric_mean_equality_case() {
        // c1 + c2 - 2 sqrt(c1 c2) over the simplex is minimized (at 0) when
        // the coordinates agree.
        let g = |y: &[f64]| {
            let c = simplex_normalize(y);
            c[0] + c[1] - 2.0 * (c[0] * c[1]).sqrt()
        };
        let (y, v) = minimize_positive_orthant(g, 2, &Tolerance::default()).unwrap();
        let c = simplex_normalize(&y);
        assert!(v.abs() <= 1e-9, "min {v}");
        assert!((c[0] - 0.5).abs() <= 1e-4, "{c:?}");
    }

    #[test]
    fn coordinate_descent_balances_weighted_geometric_mean() {
        // c1 + 4 c2 - 4 sqrt(c1 c2) over the simplex vanishes at c
        // proportional to (4, 1).
        let g = |y: &[f64]| {
            let c = simplex_normalize(y);
            c[0] + 4.0 * c[1] - 4.0 * (c[0] * c[1]).sqrt()
        };
        let (y, v) = minimize_positive_orthant(g, 2, &Tolerance::default()).unwrap();
        let c = simplex_normalize(&y);
        assert!(v.abs() <= 1e-9, "min {v}");
        assert!((c[0] - 0.8).abs() <= 1e-4, "{c:?}");
    }

    #[test]
    fn simplex_normalization_floors_and_sums_to_one() {
        let c = simplex_normalize(&[1e-15, 1.0]);
        assert!(c[0] >= 1e-10);
        assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }
}
