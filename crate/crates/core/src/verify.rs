//! Numerical oracles: quadrature, exact summation and Monte Carlo.
//!
//! These only use `logdensity3` against Lebesgue or counting measure and the
//! sampler, so they check the engine from the outside.

use crate::density::logdensity3;
use crate::error::{MeasureError, Result};
use crate::logweight::WeightClass;
use crate::measure::{Measure, Node};
use crate::point::Point;
use crate::rng::Rng;
use crate::sampling::{draw, is_probability};

/// Maximum bisection depth of adaptive Simpson.
pub const MAX_DEPTH: u32 = 40;
/// Bisection levels always performed before accepting an estimate.
const MIN_DEPTH: u32 = 6;

/// Axis-aligned region.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Interval(f64, f64),
    /// Integers `lo..=hi`.
    IntegerRange(i64, i64),
    ProductRegion(Vec<Region>),
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Interval(a, b) if !(a < b) || !a.is_finite() || !b.is_finite() => {
                Err(MeasureError::Invalid(format!("interval ({a}, {b}) needs finite a < b")))
            }
            Region::IntegerRange(lo, hi) if lo > hi => {
                Err(MeasureError::Invalid(format!("integer range {lo}..={hi} is empty")))
            }
            Region::ProductRegion(cs) if cs.is_empty() => Err(MeasureError::Invalid("empty product region".into())),
            Region::ProductRegion(cs) => cs.iter().try_for_each(Region::validate),
            _ => Ok(()),
        }
    }

    /// Lebesgue, counting, or their product, matching the region.
    pub fn reference(&self) -> Measure {
        match self {
            Region::Interval(..) => Measure::lebesgue(),
            Region::IntegerRange(..) => Measure::counting(),
            Region::ProductRegion(cs) => Measure::new(Node::Product(cs.iter().map(Region::reference).collect())),
        }
    }
}

/// Result of a mass computation.
#[derive(Clone, Debug, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    /// Set when a summation's last term exceeds the tolerance.
    pub tail_warning: Option<String>,
}

/// `μ(r)` by quadrature or summation of `exp(logdensity3(μ, reference, ·))`.
/// Undefined or infinite densities inside `r` are errors.
pub fn mass(mu: &Measure, r: &Region, tol: f64) -> Result<f64> {
    mass_report(mu, r, tol).map(|m| m.mass)
}

pub fn mass_report(mu: &Measure, r: &Region, tol: f64) -> Result<MassReport> {
    r.validate()?;
    let reference = r.reference();
    let density = |x: &Point| -> Result<f64> {
        let v = logdensity3(mu, &reference, x)?;
        match v.class() {
            WeightClass::Undefined => Err(MeasureError::UndefinedDensity(x.to_string())),
            WeightClass::PosInf => Err(MeasureError::UndefinedDensity(format!("{x} (not dominated by {reference})"))),
            _ => Ok(v.exp()),
        }
    };
    match r {
        Region::Interval(a, b) => {
            let mass = simpson(&|x| density(&Point::Real(x)), *a, *b, tol)?;
            Ok(MassReport { mass, tail_warning: None })
        }
        Region::IntegerRange(lo, hi) => {
            let mut total = 0.0;
            let mut last = 0.0;
            for k in *lo..=*hi {
                last = density(&Point::Int(k))?;
                total += last;
            }
            let tail_warning = (last > tol).then(|| format!("last term {last:e} at {hi} exceeds tolerance {tol:e}"));
            Ok(MassReport { mass: total, tail_warning })
        }
        Region::ProductRegion(dims) => {
            let mass = iterated(&density, dims, &mut Vec::new(), tol)?;
            Ok(MassReport { mass, tail_warning: None })
        }
    }
}

fn iterated(f: &dyn Fn(&Point) -> Result<f64>, dims: &[Region], prefix: &mut Vec<Point>, tol: f64) -> Result<f64> {
    let Some((first, rest)) = dims.split_first() else {
        return f(&Point::Tuple(prefix.clone()));
    };
    let mut inner = |x: Point| -> Result<f64> {
        prefix.push(x);
        let v = iterated(f, rest, prefix, tol);
        prefix.pop();
        v
    };
    match first {
        Region::Interval(a, b) => {
            let cell = std::cell::RefCell::new(&mut inner);
            simpson(&|x| (cell.borrow_mut())(Point::Real(x)), *a, *b, tol)
        }
        Region::IntegerRange(lo, hi) => (*lo..=*hi).map(|k| inner(Point::Int(k))).sum(),
        Region::ProductRegion(_) => Err(MeasureError::Invalid("nested product regions are not supported".into())),
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, [a, m, b], [fa, fm, fb], whole, tol, 0)
}

fn simpson_step(f: &dyn Fn(f64) -> Result<f64>, x: [f64; 3], y: [f64; 3], whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let [a, m, b] = x;
    let [fa, fm, fb] = y;
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, [a, lm, m], [fa, flm, fm], left, 0.5 * tol, depth + 1)?
        + simpson_step(f, [m, rm, b], [fm, frm, fb], right, 0.5 * tol, depth + 1)?)
}

/// `|μ(A ∪ B) + μ(A ∩ B) − μ(A) − μ(B)|` for two intervals or two integer
/// ranges. A disjoint union is measured as hull minus gap.
pub fn additivity_check(mu: &Measure, a: &Region, b: &Region, tol: f64) -> Result<f64> {
    let (ma, mb) = (mass(mu, a, tol)?, mass(mu, b, tol)?);
    let (union, inter) = match (a, b) {
        (Region::Interval(a0, a1), Region::Interval(b0, b1)) => {
            let hull = Region::Interval(a0.min(*b0), a1.max(*b1));
            let (lo, hi) = (a0.max(*b0), a1.min(*b1));
            if lo < hi {
                (mass(mu, &hull, tol)?, mass(mu, &Region::Interval(lo, hi), tol)?)
            } else if lo == hi {
                (mass(mu, &hull, tol)?, 0.0)
            } else {
                (mass(mu, &hull, tol)? - mass(mu, &Region::Interval(hi, lo), tol)?, 0.0)
            }
        }
        (Region::IntegerRange(a0, a1), Region::IntegerRange(b0, b1)) => {
            let hull = Region::IntegerRange(*a0.min(b0), *a1.max(b1));
            let (lo, hi) = (*a0.max(b0), *a1.min(b1));
            if lo <= hi {
                (mass(mu, &hull, tol)?, mass(mu, &Region::IntegerRange(lo, hi), tol)?)
            } else if hi + 1 == lo {
                (mass(mu, &hull, tol)?, 0.0)
            } else {
                (mass(mu, &hull, tol)? - mass(mu, &Region::IntegerRange(hi + 1, lo - 1), tol)?, 0.0)
            }
        }
        _ => return Err(MeasureError::Invalid("additivity needs two intervals or two integer ranges".into())),
    };
    Ok((union + inter - ma - mb).abs())
}

/// `(1/n) Σ f(xᵢ)` with `xᵢ` drawn from `Rng::new(seed).split(i)`.
pub fn mc_mean(mu: &Measure, f: impl Fn(&Point) -> f64, n: usize, seed: u64) -> Result<f64> {
    if !is_probability(mu) {
        return Err(MeasureError::NotProbability(mu.to_string()));
    }
    if n == 0 {
        return Err(MeasureError::Invalid("Monte Carlo mean over zero samples".into()));
    }
    let root = Rng::new(seed);
    let mut total = 0.0;
    for i in 0..n {
        total += f(&draw(mu, &mut root.split(i as u64))?);
    }
    Ok(total / n as f64)
}

/// Whether `μ` lives on a discrete set, judged by the primitives its base
/// chain ends in.
pub fn is_discrete(mu: &Measure) -> bool {
    match mu.node() {
        Node::Counting | Node::Dirac(_) => true,
        Node::Lebesgue => false,
        Node::Parameterized(p) => is_discrete(&p.base()),
        Node::Weighted { base, .. } | Node::Integral { base, .. } => is_discrete(base),
        Node::Superposition(a, b) => is_discrete(a) && is_discrete(b),
        Node::PointwiseProduct { prior, .. } => is_discrete(prior),
        Node::Pushforward { of, .. } => is_discrete(of),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::combinators::scale;
    use crate::logweight::LogWeight;

    #[test]
    fn lebesgue_lengths() {
        for (a, b) in [(0.0, 1.0), (-3.5, 2.25), (10.0, 1000.0)] {
            let m = mass(&Measure::lebesgue(), &Region::Interval(a, b), 1e-10).unwrap();
            assert!((m - (b - a)).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_and_scaled_normal() {
        let n = catalog::normal(0.0, 1.0).unwrap();
        let r = Region::Interval(-8.0, 8.0);
        assert!((mass(&n, &r, 1e-8).unwrap() - 1.0).abs() < 1e-6);
        let half = scale(LogWeight::new(0.5f64.ln()), n).unwrap();
        assert!((mass(&half, &r, 1e-8).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn summation_and_tail() {
        let p = catalog::poisson(3.0).unwrap();
        let rep = mass_report(&p, &Region::IntegerRange(0, 60), 1e-12).unwrap();
        assert!((rep.mass - 1.0).abs() < 1e-12 && rep.tail_warning.is_none());
        let short = mass_report(&p, &Region::IntegerRange(0, 3), 1e-12).unwrap();
        assert!(short.tail_warning.is_some());
    }

    #[test]
    fn undefined_density_is_an_error() {
        let r = Region::Interval(-1.0, 1.0);
        assert!(matches!(mass(&Measure::dirac(0.0), &r, 1e-8), Err(MeasureError::UndefinedDensity(_))));
    }

    #[test]
    fn additivity() {
        let n = catalog::normal(0.0, 1.0).unwrap();
        let tol = 1e-10;
        let v = additivity_check(&n, &Region::Interval(-1.0, 1.0), &Region::Interval(0.0, 2.0), tol).unwrap();
        assert!(v < 1e-6);
        let v = additivity_check(&n, &Region::Interval(-2.0, -1.0), &Region::Interval(1.0, 2.0), tol).unwrap();
        assert!(v < 1e-6);
        let a = Region::Interval(-0.5, 1.5);
        assert!(additivity_check(&n, &a, &a, tol).unwrap() < 1e-12);
    }

    #[test]
    fn product_region() {
        let n = catalog::normal(0.0, 1.0).unwrap();
        let m = crate::combinators::product(n.clone(), catalog::poisson(2.0).unwrap());
        let r = Region::ProductRegion(vec![Region::Interval(-8.0, 8.0), Region::IntegerRange(0, 40)]);
        assert!((mass(&m, &r, 1e-8).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo() {
        assert_eq!(mc_mean(&Measure::dirac(3.0), |x| x.as_scalar().unwrap(), 10, 1).unwrap(), 3.0);
        assert!(mc_mean(&Measure::lebesgue(), |_| 0.0, 10, 1).is_err());
    }
}
