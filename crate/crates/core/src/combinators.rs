//! Measure-forming operations.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::affine::AffineMap;
use crate::density::{ld2, logdensity3};
use crate::error::{MeasureError, Result};
use crate::kernels::Kernel;
use crate::logweight::{LogWeight, WeightClass};
use crate::measure::{Measure, Node};
use crate::point::Point;

/// `μ ⊗ ν`, a measure on pairs.
pub fn product(mu: Measure, nu: Measure) -> Measure {
    Measure::new(Node::Product(vec![mu, nu]))
}

/// Product of any number of factors, on tuples of matching length.
pub fn product_all(factors: Vec<Measure>) -> Result<Measure> {
    if factors.is_empty() {
        return Err(MeasureError::Invalid("product of no measures".into()));
    }
    Ok(Measure::new(Node::Product(factors)))
}

/// iid power over `shape`; points are flat row-major tuples.
pub fn power(mu: Measure, shape: &[usize]) -> Result<Measure> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(MeasureError::Invalid(format!("power shape {shape:?} must be nonempty and positive")));
    }
    Ok(Measure::new(Node::Power { of: mu, shape: shape.to_vec() }))
}

/// `⊗ᵢ κ(i)` over `indices`. The kernel is checked at every index.
pub fn for_product(indices: Vec<Point>, kernel: Kernel) -> Result<Measure> {
    if indices.is_empty() {
        return Err(MeasureError::Invalid("indexed product over no indices".into()));
    }
    for i in &indices {
        kernel.apply(i)?;
    }
    Ok(Measure::new(Node::ForProduct { indices, kernel }))
}

/// `μ ⊗ κ`: pairs `(x, y)` with `x ~ μ` and `y ~ κ(x)`.
pub fn bind(mu: Measure, kernel: Kernel) -> Result<Measure> {
    let space = mu.space();
    if !kernel.domain().compatible(&space) {
        return Err(MeasureError::Kernel(format!("kernel {kernel:?} is not defined on {space}")));
    }
    Ok(Measure::new(Node::Bind { of: mu, kernel }))
}

/// `μ + ν`.
pub fn superpose(mu: Measure, nu: Measure) -> Result<Measure> {
    let (a, b) = (mu.space(), nu.space());
    if !a.compatible(&b) {
        return Err(MeasureError::ShapeMismatch { expected: a.to_string(), found: b.to_string() });
    }
    Ok(Measure::new(Node::Superposition(mu, nu)))
}

/// Folds a nonempty list into left-nested binary superpositions.
pub fn superpose_all(parts: Vec<Measure>) -> Result<Measure> {
    let mut it = parts.into_iter();
    let first = it.next().ok_or_else(|| MeasureError::Invalid("superposition of no measures".into()))?;
    it.try_fold(first, superpose)
}

/// `e^logw · μ`. Nested weights are merged.
pub fn scale(logw: LogWeight, mu: Measure) -> Result<Measure> {
    match logw.class() {
        WeightClass::PosInf | WeightClass::Undefined => {
            Err(MeasureError::Invalid(format!("scale weight must be finite or -inf, got {logw}")))
        }
        _ => Ok(match mu.node() {
            Node::Weighted { logw: inner, base } => {
                Measure::new(Node::Weighted { logw: logw + *inner, base: base.clone() })
            }
            _ => Measure::new(Node::Weighted { logw, base: mu }),
        }),
    }
}

/// Observed data together with the kernel that generated it.
#[derive(Clone, Debug)]
pub struct Likelihood {
    kernel: Kernel,
    data: Point,
}

impl Likelihood {
    pub fn new(kernel: Kernel, data: Point) -> Self {
        Likelihood { kernel, data }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn data(&self) -> &Point {
        &self.data
    }

    /// `logdensity2(κ(p), x)`.
    pub fn loglik(&self, p: &Point) -> Result<LogWeight> {
        let m = self.kernel.apply(p)?;
        m.space().check(&self.data)?;
        ld2(&m, &self.data)
    }

    pub(crate) fn structural_cmp(&self, other: &Likelihood) -> Ordering {
        self.kernel.structural_cmp(&other.kernel).then_with(|| self.data.total_cmp(&other.data))
    }
}

pub fn loglik(l: &Likelihood, p: &Point) -> Result<LogWeight> {
    l.loglik(p)
}

/// `μ ⊙ ℓ`: same base as `μ`, log-density shifted by `loglik(ℓ, ·)`.
pub fn pointwise_product(prior: Measure, likelihood: Likelihood) -> Result<Measure> {
    let space = prior.space();
    if !likelihood.kernel.domain().compatible(&space) {
        return Err(MeasureError::Kernel(format!("likelihood kernel is not defined on {space}")));
    }
    Ok(Measure::new(Node::PointwiseProduct { prior, likelihood }))
}

/// `x ↦ dμ/dν(x)`, or its logarithm when `logspace` is set.
#[derive(Clone, Debug)]
pub struct DensityClosure {
    pub numerator: Measure,
    pub denominator: Measure,
    pub logspace: bool,
}

impl DensityClosure {
    pub fn log_eval(&self, x: &Point) -> Result<LogWeight> {
        logdensity3(&self.numerator, &self.denominator, x)
    }

    /// The closure's value; undefined densities come back as NaN.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        let v = self.log_eval(x)?;
        Ok(if self.logspace { v.to_f64() } else { v.exp() })
    }
}

/// `∂(μ, ν)`.
pub fn rn_derivative(mu: Measure, nu: Measure) -> DensityClosure {
    DensityClosure { numerator: mu, denominator: nu, logspace: false }
}

/// `log∂(μ, ν)`.
pub fn log_rn_derivative(mu: Measure, nu: Measure) -> DensityClosure {
    DensityClosure { numerator: mu, denominator: nu, logspace: true }
}

type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Density of an integral node.
#[derive(Clone)]
pub enum DensityFn {
    /// Nonnegative density.
    Linear(PointFn),
    /// Log-density.
    Log(PointFn),
    /// A Radon-Nikodym derivative, integrated in its own space.
    Closure(DensityClosure),
}

impl DensityFn {
    pub(crate) fn log_value(&self, x: &Point) -> Result<LogWeight> {
        match self {
            DensityFn::Linear(f) => {
                let v = f(x);
                if v < 0.0 {
                    return Err(MeasureError::NegativeDensity { value: v, at: x.to_string() });
                }
                Ok(LogWeight::new(libm::log(v)))
            }
            DensityFn::Log(f) => Ok(LogWeight::new(f(x))),
            DensityFn::Closure(c) => c.log_eval(x),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            DensityFn::Linear(_) => 0,
            DensityFn::Log(_) => 1,
            DensityFn::Closure(_) => 2,
        }
    }

    pub(crate) fn structural_cmp(&self, other: &DensityFn) -> Ordering {
        let addr = |f: &PointFn| Arc::as_ptr(f) as *const () as usize;
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (DensityFn::Linear(f), DensityFn::Linear(g)) | (DensityFn::Log(f), DensityFn::Log(g)) => {
                addr(f).cmp(&addr(g))
            }
            (DensityFn::Closure(a), DensityFn::Closure(b)) => a
                .numerator
                .structural_cmp(&b.numerator)
                .then_with(|| a.denominator.structural_cmp(&b.denominator))
                .then(a.logspace.cmp(&b.logspace)),
            _ => Ordering::Equal,
        })
    }
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityFn::Linear(_) => f.write_str("<density>"),
            DensityFn::Log(_) => f.write_str("<log-density>"),
            DensityFn::Closure(c) => write!(f, "∂({}, {})", c.numerator, c.denominator),
        }
    }
}

/// `∫(f, ν)`: the measure with density `f` relative to `ν`.
pub fn integrate(f: impl Fn(&Point) -> f64 + Send + Sync + 'static, base: Measure) -> Measure {
    Measure::new(Node::Integral { density: DensityFn::Linear(Arc::new(f)), base })
}

/// `∫exp(ℓ, ν)`: the measure with log-density `ℓ` relative to `ν`.
pub fn integrate_exp(l: impl Fn(&Point) -> f64 + Send + Sync + 'static, base: Measure) -> Measure {
    Measure::new(Node::Integral { density: DensityFn::Log(Arc::new(l)), base })
}

/// `∫(∂(μ, ν), ν)` or `∫exp(log∂(μ, ν), ν)`, according to the closure.
pub fn integrate_closure(c: DensityClosure, base: Measure) -> Measure {
    Measure::new(Node::Integral { density: DensityFn::Closure(c), base })
}

/// `t⋆μ`.
pub fn pushforward(t: AffineMap, mu: Measure) -> Result<Measure> {
    let (want, have) = (t.space(), mu.space());
    if !want.compatible(&have) {
        return Err(MeasureError::ShapeMismatch { expected: want.to_string(), found: have.to_string() });
    }
    Ok(Measure::new(Node::Pushforward { map: t, of: mu }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::density::{basemeasure, logdensity2};
    use crate::kernels::{make_kernel, ParamMap};

    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

    fn n(mu: f64, sigma: f64) -> Measure {
        catalog::normal(mu, sigma).unwrap()
    }

    fn ld3(mu: &Measure, nu: &Measure, x: Point) -> f64 {
        logdensity3(mu, nu, &x).unwrap().to_f64()
    }

    #[test]
    fn products() {
        let leb2 = product(Measure::lebesgue(), Measure::lebesgue());
        let v = ld3(&product(n(0.0, 1.0), n(0.0, 1.0)), &leb2, Point::reals(&[0.0, 0.0]));
        assert!((v - -1.837_877_066_409_345_3).abs() < 1e-12);
        let atoms = product(Measure::dirac(1.0), Measure::dirac(2.0));
        assert_eq!(logdensity2(&atoms, &Point::reals(&[1.0, 2.0])).unwrap(), LogWeight::ZERO);
        let b = basemeasure(&product(n(0.0, 1.0), n(0.0, 1.0)), &Point::reals(&[0.0, 0.0])).unwrap();
        let w = scale(LogWeight::new(-HALF_LN_2PI), Measure::lebesgue()).unwrap();
        assert_eq!(b, product(w.clone(), w));
    }

    #[test]
    fn powers() {
        assert!(power(n(0.0, 1.0), &[]).is_err());
        let p3 = power(n(0.0, 1.0), &[3]).unwrap();
        let leb3 = power(Measure::lebesgue(), &[3]).unwrap();
        let v = ld3(&p3, &leb3, Point::reals(&[0.0; 3]));
        assert!((v - -2.756_815_599_614_018_2).abs() < 1e-12);
        let p1 = power(n(0.3, 2.0), &[1]).unwrap();
        let a = ld3(&p1, &power(Measure::lebesgue(), &[1]).unwrap(), Point::reals(&[1.1]));
        let b = ld3(&n(0.3, 2.0), &Measure::lebesgue(), Point::Real(1.1));
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn indexed_products() {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity), ("σ", ParamMap::Const(1.0))]).unwrap();
        let idx: Vec<Point> = (1..=3).map(Point::Int).collect();
        let f = for_product(idx, k).unwrap();
        let x = Point::reals(&[1.0, 2.0, 3.0]);
        assert_eq!(logdensity2(&f, &x).unwrap(), LogWeight::ZERO);
        let explicit = product_all(vec![n(1.0, 1.0), n(2.0, 1.0), n(3.0, 1.0)]).unwrap();
        let leb = power(Measure::lebesgue(), &[3]).unwrap();
        let y = Point::reals(&[0.5, 2.5, -1.0]);
        assert!((ld3(&f, &leb, y.clone()) - ld3(&explicit, &leb, y)).abs() < 1e-12);
    }

    #[test]
    fn binds() {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
        let b = bind(Measure::dirac(2.0), k.clone()).unwrap();
        assert_eq!(logdensity2(&b, &Point::reals(&[2.0, 2.0])).unwrap(), LogWeight::ZERO);
        let b = bind(n(0.0, 1.0), k).unwrap();
        let leb2 = product(Measure::lebesgue(), Measure::lebesgue());
        assert!((ld3(&b, &leb2, Point::reals(&[0.0, 0.0])) - -1.837_877_066_409_345_3).abs() < 1e-12);
    }

    #[test]
    fn superpositions() {
        let mix = superpose(n(0.0, 1.0), n(1.0, 1.0)).unwrap();
        let v = ld3(&mix, &Measure::lebesgue(), Point::Real(0.0));
        assert!((v - -0.444_861_549_024_566_06).abs() < 1e-12);
        let same = superpose(n(0.0, 1.0), n(0.0, 1.0)).unwrap();
        for x in [-1.0, 0.0, 2.5] {
            let a = logdensity2(&same, &Point::Real(x)).unwrap().to_f64();
            let b = logdensity2(&n(0.0, 1.0), &Point::Real(x)).unwrap().to_f64();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn spike_and_slab() {
        let half = LogWeight::new(0.5f64.ln());
        let s = superpose(scale(half, Measure::dirac(0.0)).unwrap(), scale(half, n(0.0, 1.0)).unwrap()).unwrap();
        let at0 = ld3(&s, &Measure::counting(), Point::Real(0.0));
        assert!((at0 - 0.5f64.ln()).abs() < 1e-15);
        let at1 = ld3(&s, &Measure::lebesgue(), Point::Real(1.0));
        let slab = ld3(&n(0.0, 1.0), &Measure::lebesgue(), Point::Real(1.0));
        assert!((at1 - (0.5f64.ln() + slab)).abs() < 1e-12);
        assert_eq!(logdensity3(&s, &Measure::lebesgue(), &Point::Real(0.0)).unwrap(), LogWeight::POS_INF);
    }

    #[test]
    fn scaling() {
        let m = n(0.0, 1.0);
        let x = Point::Real(0.3);
        let leb = Measure::lebesgue();
        assert_eq!(ld3(&scale(LogWeight::ZERO, m.clone()).unwrap(), &leb, x.clone()), ld3(&m, &leb, x.clone()));
        let ab = scale(LogWeight::new(0.25), scale(LogWeight::new(0.5), m.clone()).unwrap()).unwrap();
        assert_eq!(ab, scale(LogWeight::new(0.75), m.clone()).unwrap());
        assert!(scale(LogWeight::POS_INF, m.clone()).is_err());
        assert!(scale(LogWeight::Undefined, m).is_err());
    }

    #[test]
    fn pointwise_products() {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
        let l = Likelihood::new(k, Point::Real(0.5));
        assert_eq!(l.loglik(&Point::Real(0.5)).unwrap(), LogWeight::ZERO);
        assert_eq!(l.loglik(&Point::Real(0.0)).unwrap(), LogWeight::new(-0.125));
        let post = pointwise_product(n(0.0, 1.0), l).unwrap();
        assert_eq!(logdensity2(&post, &Point::Real(0.0)).unwrap(), LogWeight::new(-0.125));
        let t = Point::Real(0.9);
        assert_eq!(basemeasure(&post, &t).unwrap(), basemeasure(&n(0.0, 1.0), &t).unwrap());
    }

    #[test]
    fn negbinomial_likelihood() {
        let k = make_kernel("NegativeBinomial", vec![("r", ParamMap::Identity), ("p", ParamMap::Const(0.75))])
            .unwrap();
        let v = Likelihood::new(k, Point::Int(2)).loglik(&Point::Real(10.0)).unwrap().to_f64();
        assert!((v - -1.642_076_261_525_119_6).abs() < 1e-12);
    }

    #[test]
    fn densities_and_integrals() {
        let d = rn_derivative(n(0.0, 1.0), Measure::lebesgue());
        assert!((d.eval(&Point::Real(0.0)).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let u = catalog::uniform01();
        let mu = integrate(|x| 1.0 + x.as_scalar().unwrap().powi(2), u.clone());
        let back = rn_derivative(mu, u.clone());
        for x in [0.1, 0.5, 0.9] {
            assert!((back.eval(&Point::Real(x)).unwrap() - (1.0 + x * x)).abs() < 1e-12);
        }
        let one = integrate(|_| 1.0, u.clone());
        assert_eq!(ld3(&one, &u, Point::Real(0.4)), 0.0);
        let neg = integrate(|_| -1.0, u);
        assert!(matches!(
            logdensity2(&neg, &Point::Real(0.5)),
            Err(MeasureError::NegativeDensity { .. })
        ));
    }

    #[test]
    fn pushforwards() {
        let t = AffineMap::forward_scalar(2.0, 1.0).unwrap();
        let p = pushforward(t.clone(), n(0.0, 1.0)).unwrap();
        let v = ld3(&p, &Measure::lebesgue(), Point::Real(1.0));
        assert!((v - -1.612_085_713_764_618_1).abs() < 1e-12);
        let z = Point::Real(0.37);
        let fz = t.forward(&z).unwrap();
        assert_eq!(logdensity2(&p, &fz).unwrap(), logdensity2(&n(0.0, 1.0), &z).unwrap());
        let back = pushforward(t.inverse_map(), p).unwrap();
        let x = Point::Real(-0.8);
        let (a, b) = (ld3(&back, &Measure::lebesgue(), x.clone()), ld3(&n(0.0, 1.0), &Measure::lebesgue(), x));
        assert!((a - b).abs() < 1e-12);
    }
}
