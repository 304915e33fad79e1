//! Kernels (measure-valued functions) and Markov chains.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::catalog::{self, Family, ParamSet};
use crate::density::ld2;
use crate::error::{MeasureError, Result};
use crate::logweight::LogWeight;
use crate::measure::{Measure, Node};
use crate::point::{Point, Space};
use crate::rng::Rng;
use crate::sampling::{draw, total_mass};

type ScalarFn = Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>;
type MeasureFn = Arc<dyn Fn(&Point) -> Result<Measure> + Send + Sync>;

/// Map from a kernel's input point to one parameter value.
#[derive(Clone)]
pub enum ParamMap {
    Identity,
    Sqrt,
    Const(f64),
    /// `x ↦ a·x + b`.
    Affine(f64, f64),
    Fn(ScalarFn),
}

impl ParamMap {
    pub fn from_fn(f: impl Fn(&Point) -> Result<f64> + Send + Sync + 'static) -> Self {
        ParamMap::Fn(Arc::new(f))
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        match self {
            ParamMap::Identity => x.expect_scalar(),
            ParamMap::Sqrt => Ok(x.expect_scalar()?.sqrt()),
            ParamMap::Const(v) => Ok(*v),
            ParamMap::Affine(a, b) => Ok(a * x.expect_scalar()? + b),
            ParamMap::Fn(f) => f(x),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ParamMap::Identity => 0,
            ParamMap::Sqrt => 1,
            ParamMap::Const(_) => 2,
            ParamMap::Affine(..) => 3,
            ParamMap::Fn(_) => 4,
        }
    }

    fn structural_cmp(&self, other: &ParamMap) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (ParamMap::Const(a), ParamMap::Const(b)) => a.total_cmp(b),
            (ParamMap::Affine(a, b), ParamMap::Affine(c, d)) => a.total_cmp(c).then(b.total_cmp(d)),
            (ParamMap::Fn(f), ParamMap::Fn(g)) => addr(f).cmp(&addr(g)),
            _ => Ordering::Equal,
        })
    }
}

impl fmt::Debug for ParamMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamMap::Identity => f.write_str("identity"),
            ParamMap::Sqrt => f.write_str("sqrt"),
            ParamMap::Const(v) => write!(f, "const:{v}"),
            ParamMap::Affine(a, b) => write!(f, "affine:{a}:{b}"),
            ParamMap::Fn(_) => f.write_str("<fn>"),
        }
    }
}

fn addr<T: ?Sized>(p: &Arc<T>) -> usize {
    Arc::as_ptr(p) as *const () as usize
}

/// A measure-valued function of a point.
#[derive(Clone)]
pub enum Kernel {
    /// `x ↦ target(name = map(x), ...)` for a catalog family or `Dirac`.
    Family { target: String, maps: Vec<(String, ParamMap)> },
    /// An opaque function; compared by identity.
    Fn { domain: Space, codomain: Space, f: MeasureFn },
}

/// Builds a kernel from a family name and per-parameter maps.
pub fn make_kernel(family: &str, maps: Vec<(&str, ParamMap)>) -> Result<Kernel> {
    let names: Vec<&str> = maps.iter().map(|(n, _)| *n).collect();
    if family == "Dirac" {
        if names != ["a"] {
            return Err(MeasureError::UnknownParameterization { family: family.into(), names: names.join(",") });
        }
    } else {
        let fam = Family::from_name(family).ok_or_else(|| MeasureError::UnknownFamily(family.to_string()))?;
        catalog::resolve_form(fam, &names)?;
    }
    let maps = maps.into_iter().map(|(n, m)| (catalog::canonical_name(n).to_string(), m)).collect();
    Ok(Kernel::Family { target: family.to_string(), maps })
}

impl Kernel {
    pub fn from_fn(
        domain: Space,
        codomain: Space,
        f: impl Fn(&Point) -> Result<Measure> + Send + Sync + 'static,
    ) -> Kernel {
        Kernel::Fn { domain, codomain, f: Arc::new(f) }
    }

    /// `κ(x)`.
    pub fn apply(&self, x: &Point) -> Result<Measure> {
        match self {
            Kernel::Family { target, maps } => {
                let mut params = ParamSet::new();
                for (name, map) in maps {
                    params.insert(name, map.eval(x)?);
                }
                catalog::make(target, &params)
            }
            Kernel::Fn { domain, f, .. } => {
                domain.check(x)?;
                f(x)
            }
        }
    }

    pub fn domain(&self) -> Space {
        match self {
            Kernel::Family { maps, .. } => {
                if maps.iter().all(|(_, m)| matches!(m, ParamMap::Const(_))) {
                    Space::Any
                } else {
                    Space::Scalar
                }
            }
            Kernel::Fn { domain, .. } => domain.clone(),
        }
    }

    pub fn codomain(&self) -> Space {
        match self {
            Kernel::Family { .. } => Space::Scalar,
            Kernel::Fn { codomain, .. } => codomain.clone(),
        }
    }

    /// Expression depth of the measures this kernel returns, as far as it
    /// is known without applying it.
    pub fn output_depth(&self) -> usize {
        1
    }

    pub(crate) fn structural_cmp(&self, other: &Kernel) -> Ordering {
        match (self, other) {
            (Kernel::Family { target: s, maps: a }, Kernel::Family { target: t, maps: b }) => {
                s.cmp(t).then_with(|| {
                    for ((n, m), (o, p)) in a.iter().zip(b) {
                        let c = n.cmp(o).then_with(|| m.structural_cmp(p));
                        if c != Ordering::Equal {
                            return c;
                        }
                    }
                    a.len().cmp(&b.len())
                })
            }
            (Kernel::Family { .. }, Kernel::Fn { .. }) => Ordering::Less,
            (Kernel::Fn { .. }, Kernel::Family { .. }) => Ordering::Greater,
            (Kernel::Fn { f, .. }, Kernel::Fn { f: g, .. }) => addr(f).cmp(&addr(g)),
        }
    }
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Kernel) -> bool {
        self.structural_cmp(other) == Ordering::Equal
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Family { target, maps } => {
                write!(f, "kernel({target}")?;
                for (i, (n, m)) in maps.iter().enumerate() {
                    write!(f, "{} {n}={m:?}", if i == 0 { ";" } else { "," })?;
                }
                f.write_str(")")
            }
            Kernel::Fn { domain, codomain, .. } => write!(f, "kernel(<fn> {domain} -> {codomain})"),
        }
    }
}

/// A Markov chain: an initial law and a transition kernel.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    initial: Measure,
    step: Kernel,
}

/// Builds a chain from a step kernel and a probability initial measure.
pub fn chain(step: Kernel, initial: Measure) -> Result<ChainSpec> {
    match total_mass(&initial) {
        Some(m) if (m - 1.0).abs() <= 1e-9 => {}
        _ => return Err(MeasureError::NotProbability(format!("chain initial measure {initial}"))),
    }
    let space = initial.space();
    if !step.domain().compatible(&space) || !step.codomain().compatible(&space) {
        return Err(MeasureError::Kernel(format!(
            "chain step {step:?} does not map the state space {space} to itself"
        )));
    }
    Ok(ChainSpec { initial, step })
}

impl ChainSpec {
    pub fn initial(&self) -> &Measure {
        &self.initial
    }

    pub fn step(&self) -> &Kernel {
        &self.step
    }

    /// The chain as a measure on sequence prefixes.
    pub fn measure(&self) -> Measure {
        Measure::new(Node::Chain(self.clone()))
    }

    pub fn sample(&self, seed: u64) -> ChainSample {
        ChainSample { spec: self.clone(), seed }
    }

    pub(crate) fn structural_cmp(&self, other: &ChainSpec) -> Ordering {
        self.initial.structural_cmp(&other.initial).then_with(|| self.step.structural_cmp(&other.step))
    }
}

pub fn sample_chain(spec: &ChainSpec, seed: u64) -> ChainSample {
    spec.sample(seed)
}

/// `logdensity2(initial, x₁) + Σ logdensity2(step(xᵢ₋₁), xᵢ)`.
pub fn chain_logdensity2(spec: &ChainSpec, prefix: &[Point]) -> Result<LogWeight> {
    let (first, _) = prefix
        .split_first()
        .ok_or_else(|| MeasureError::shape("a nonempty sequence prefix", &Point::Tuple(vec![])))?;
    let mut total = ld2(&spec.initial, first)?;
    for w in prefix.windows(2) {
        total += ld2(&spec.step.apply(&w[0])?, &w[1])?;
    }
    Ok(total)
}

/// A seeded, lazily evaluated infinite sample path.
#[derive(Clone, Debug)]
pub struct ChainSample {
    spec: ChainSpec,
    seed: u64,
}

impl ChainSample {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    /// A fresh iterator from the start of the path.
    pub fn iter(&self) -> ChainIter<'_> {
        ChainIter { sample: self, root: Rng::new(self.seed), index: 0, state: None }
    }

    pub fn take_prefix(&self, k: usize) -> Result<Vec<Point>> {
        self.iter().take(k).collect()
    }
}

impl<'a> IntoIterator for &'a ChainSample {
    type Item = Result<Point>;
    type IntoIter = ChainIter<'a>;

    fn into_iter(self) -> ChainIter<'a> {
        self.iter()
    }
}

/// Element `i` is drawn with the stream `Rng::new(seed).split(i)`.
pub struct ChainIter<'a> {
    sample: &'a ChainSample,
    root: Rng,
    index: u64,
    state: Option<Point>,
}

impl Iterator for ChainIter<'_> {
    type Item = Result<Point>;

    fn next(&mut self) -> Option<Result<Point>> {
        let mut rng = self.root.split(self.index);
        let next = match &self.state {
            None => draw(&self.sample.spec.initial, &mut rng),
            Some(prev) => self.sample.spec.step.apply(prev).and_then(|m| draw(&m, &mut rng)),
        };
        match next {
            Ok(p) => {
                self.index += 1;
                self.state = Some(p.clone());
                Some(Ok(p))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk() -> ChainSpec {
        let step = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
        chain(step, catalog::normal(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn kernel_application() {
        let k = make_kernel("Normal", vec![("mu", ParamMap::Identity), ("sigma", ParamMap::Sqrt)]).unwrap();
        assert_eq!(k.apply(&Point::Real(4.0)).unwrap(), catalog::normal(4.0, 2.0).unwrap());
        assert!(k.apply(&Point::Real(-1.0)).is_err());
        let c = make_kernel("Normal", vec![("μ", ParamMap::Identity), ("σ", ParamMap::Const(1.0))]).unwrap();
        assert_eq!(c.apply(&Point::Real(0.0)).unwrap(), catalog::normal(0.0, 1.0).unwrap());
        assert_eq!(k.apply(&Point::Real(9.0)).unwrap(), k.apply(&Point::Real(9.0)).unwrap());
    }

    #[test]
    fn kernel_errors() {
        assert!(matches!(make_kernel("Gamma", vec![]), Err(MeasureError::UnknownFamily(_))));
        assert!(matches!(
            make_kernel("Normal", vec![("tau", ParamMap::Identity)]),
            Err(MeasureError::UnknownParameterization { .. })
        ));
    }

    #[test]
    fn chain_golden_value() {
        let x = [-0.493_154_373_703_452_3, -0.566_189_511_618_641_7, -1.328_697_767_059_022_8];
        let prefix: Vec<Point> = x.iter().copied().map(Point::Real).collect();
        let v = chain_logdensity2(&walk(), &prefix).unwrap().to_f64();
        assert!((v - -0.414_977_103_643_934_2).abs() < 1e-12, "{v}");
    }

    #[test]
    fn chain_rejects_bad_inputs() {
        let step = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
        assert!(matches!(chain(step.clone(), Measure::lebesgue()), Err(MeasureError::NotProbability(_))));
        let pairs = Kernel::from_fn(Space::Tuple(vec![Space::Scalar; 2]), Space::Scalar, |_| {
            catalog::normal(0.0, 1.0)
        });
        assert!(chain(pairs, catalog::normal(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn constant_chain() {
        let step = make_kernel("Dirac", vec![("a", ParamMap::Identity)]).unwrap();
        let spec = chain(step, Measure::dirac(0.0)).unwrap();
        let xs = spec.sample(3).take_prefix(5).unwrap();
        assert!(xs.iter().all(|p| *p == Point::Real(0.0)));
    }

    #[test]
    fn reiteration_reproduces() {
        let s = walk().sample(99);
        assert_eq!(format!("{:?}", s.take_prefix(50).unwrap()), format!("{:?}", s.take_prefix(50).unwrap()));
    }
}
