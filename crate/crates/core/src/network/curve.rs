//! Piecewise-linear supply and demand curves.

use serde::{Deserialize, Serialize};

use crate::error::CurveError;

/// A continuous piecewise-linear function on `[0, upper]`.
///
/// Breakpoint densities are strictly increasing, the first sits at density 0
/// and the last at the domain upper bound (the jam density of the owning
/// link). Arguments outside the domain are clamped before evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, CurveError> {
        if points.len() < 2 {
            return Err(CurveError::TooFewBreakpoints(points.len()));
        }
        if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(CurveError::NonFinite);
        }
        if points[0].0 != 0.0 {
            return Err(CurveError::NotAnchoredAtZero(points[0].0));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(CurveError::NotIncreasing { index: i + 1 });
            }
        }
        Ok(Self { points })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Right end of the domain.
    pub fn upper(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.upper());
        // First breakpoint with density >= x; the clamp guarantees one exists.
        let i = self.points.partition_point(|&(px, _)| px < x);
        if i == 0 {
            return self.points[0].1;
        }
        let (x0, y0) = self.points[i - 1];
        let (x1, y1) = self.points[i];
        if x == x1 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slopes of the linear pieces, one per consecutive breakpoint pair.
    pub fn slopes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points
            .windows(2)
            .map(|w| (w[0].0, w[1].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes().map(|(_, _, m)| m.abs()).fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `x` with `self.eval(x) >= value`, for a non-decreasing curve.
    ///
    /// Targets above the curve's maximum by at most `tol` resolve to the
    /// first point where the maximum is attained; anything larger is `None`.
    pub fn min_preimage(&self, value: f64, tol: f64) -> Option<f64> {
        let (x0, y0) = self.points[0];
        if value <= y0 {
            return Some(x0);
        }
        for w in self.points.windows(2) {
            let (xa, ya) = w[0];
            let (xb, yb) = w[1];
            if value <= yb {
                if yb == ya {
                    return Some(xa);
                }
                return Some(xa + (value - ya) * (xb - xa) / (yb - ya));
            }
        }
        let top = self.max_value();
        if value <= top + tol {
            return self.points.iter().find(|p| p.1 == top).map(|p| p.0);
        }
        None
    }

    /// Merged, sorted breakpoint densities of two curves on the same domain.
    pub(crate) fn merged_knots(&self, other: &Self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.points.iter().chain(other.points.iter()).map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseLinear {
    type Error = CurveError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<PiecewiseLinear> for Vec<(f64, f64)> {
    fn from(f: PiecewiseLinear) -> Self {
        f.points
    }
}

/// Crossing of a demand and supply curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub density: f64,
    pub flow: f64,
}

/// Locates the crossing of `demand` and `supply`.
///
/// The sign change of `demand - supply` is bracketed by bisection over the
/// merged breakpoints of both curves; inside the bracketing piece both curves
/// are affine, so the root is solved for exactly. Returns `None` when there is
/// no sign change on the domain.
pub fn critical_point(demand: &PiecewiseLinear, supply: &PiecewiseLinear) -> Option<CriticalPoint> {
    let gap = |x: f64| demand.eval(x) - supply.eval(x);
    let knots = demand.merged_knots(supply);
    let first = *knots.first()?;
    let last = *knots.last()?;
    let g_first = gap(first);
    if g_first >= 0.0 {
        // d(0) = 0, so this only happens when s(0) = 0 too.
        return Some(CriticalPoint {
            density: first,
            flow: demand.eval(first),
        });
    }
    if gap(last) < 0.0 {
        return None;
    }
    // Invariant: gap(knots[lo]) < 0 <= gap(knots[hi]).
    let (mut lo, mut hi) = (0usize, knots.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if gap(knots[mid]) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (xa, xb) = (knots[lo], knots[hi]);
    let (ga, gb) = (gap(xa), gap(xb));
    let density = if gb == 0.0 {
        xb
    } else {
        (xa - ga * (xb - xa) / (gb - ga)).clamp(xa, xb)
    };
    Some(CriticalPoint {
        density,
        flow: demand.eval(density),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capped(cap: f64, jam: f64) -> (PiecewiseLinear, PiecewiseLinear) {
        let d = PiecewiseLinear::new(vec![(0.0, 0.0), (cap, cap), (jam, cap)]).unwrap();
        let s = PiecewiseLinear::new(vec![(0.0, cap), (jam - cap, cap), (jam, 0.0)]).unwrap();
        (d, s)
    }

    #[test]
    fn eval_interpolates_and_clamps() {
        let (d, s) = capped(15.0, 30.0);
        assert_eq!(d.eval(7.5), 7.5);
        assert_eq!(d.eval(22.0), 15.0);
        assert_eq!(d.eval(-3.0), 0.0);
        assert_eq!(s.eval(40.0), 0.0);
        assert_eq!(s.eval(25.0), 5.0);
    }

    #[test]
    fn rejects_malformed_breakpoints() {
        assert!(matches!(
            PiecewiseLinear::new(vec![(1.0, 0.0), (2.0, 1.0)]),
            Err(CurveError::NotAnchoredAtZero(_))
        ));
        assert!(matches!(
            PiecewiseLinear::new(vec![(0.0, 0.0), (2.0, 1.0), (2.0, 3.0)]),
            Err(CurveError::NotIncreasing { index: 2 })
        ));
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn critical_point_of_symmetric_curves() {
        let (d, s) = capped(15.0, 30.0);
        assert_eq!(
            critical_point(&d, &s),
            Some(CriticalPoint {
                density: 15.0,
                flow: 15.0
            })
        );
        let (d, s) = capped(50.0, 100.0);
        assert_eq!(
            critical_point(&d, &s),
            Some(CriticalPoint {
                density: 50.0,
                flow: 50.0
            })
        );
    }

    #[test]
    fn critical_point_of_linear_curves() {
        let d = PiecewiseLinear::new(vec![(0.0, 0.0), (15.0, 15.0)]).unwrap();
        let s = PiecewiseLinear::new(vec![(0.0, 30.0), (15.0, 0.0)]).unwrap();
        let cp = critical_point(&d, &s).unwrap();
        assert!((cp.density - 10.0).abs() < 1e-12);
        assert!((cp.flow - 10.0).abs() < 1e-12);
    }

    #[test]
    fn no_crossing_is_none() {
        let d = PiecewiseLinear::new(vec![(0.0, 0.0), (10.0, 1.0)]).unwrap();
        let s = PiecewiseLinear::new(vec![(0.0, 5.0), (10.0, 4.0)]).unwrap();
        assert_eq!(critical_point(&d, &s), None);
    }

    #[test]
    fn min_preimage_handles_flat_top() {
        let (d, _) = capped(15.0, 30.0);
        assert_eq!(d.min_preimage(15.0, 0.0), Some(15.0));
        assert_eq!(d.min_preimage(4.0, 0.0), Some(4.0));
        assert_eq!(d.min_preimage(0.0, 0.0), Some(0.0));
        assert_eq!(d.min_preimage(15.0 + 1e-13, 1e-12), Some(15.0));
        assert_eq!(d.min_preimage(16.0, 1e-12), None);
    }
}
