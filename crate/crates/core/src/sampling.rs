//! Total masses and seeded sampling.

use crate::error::{MeasureError, Result};
use crate::kernels::Kernel;
use crate::logweight::WeightClass;
use crate::measure::{Measure, Node};
use crate::point::Point;
use crate::rng::Rng;

/// Total mass of `m`, when it is finite and known in closed form.
///
/// Kernels are assumed to be Markov, so a bind has the mass of its first
/// factor.
pub fn total_mass(m: &Measure) -> Option<f64> {
    match m.node() {
        Node::Lebesgue | Node::Counting => None,
        Node::Dirac(_) | Node::Parameterized(_) => Some(1.0),
        Node::Weighted { logw, base } => match logw.class() {
            WeightClass::NegInf => Some(0.0),
            WeightClass::Finite => Some(logw.exp() * total_mass(base)?),
            _ => None,
        },
        Node::Product(cs) => cs.iter().map(total_mass).product(),
        Node::Power { of, shape } => Some(total_mass(of)?.powi(Measure::power_len(shape) as i32)),
        Node::ForProduct { indices, kernel } => indices
            .iter()
            .map(|i| kernel.apply(i).ok().and_then(|k| total_mass(&k)))
            .product(),
        Node::Bind { of, .. } => total_mass(of),
        Node::Superposition(a, b) => Some(total_mass(a)? + total_mass(b)?),
        Node::PointwiseProduct { .. } | Node::Integral { .. } => None,
        Node::Pushforward { of, .. } => total_mass(of),
        Node::Chain(spec) => total_mass(spec.initial()),
    }
}

pub fn is_probability(m: &Measure) -> bool {
    matches!(total_mass(m), Some(v) if (v - 1.0).abs() <= 1e-9)
}

/// One draw from the probability measure `m`, a deterministic function of
/// `(m, seed)`.
pub fn sample(m: &Measure, seed: u64) -> Result<Point> {
    if matches!(m.node(), Node::Chain(_)) {
        return Err(MeasureError::Invalid("a chain is an infinite sequence; sample a prefix instead".into()));
    }
    if !is_probability(m) {
        return Err(MeasureError::NotProbability(m.to_string()));
    }
    draw(m, &mut Rng::new(seed))
}

/// Draws from `m` normalized to unit mass. Sub-draws use child streams.
pub fn draw(m: &Measure, rng: &mut Rng) -> Result<Point> {
    match m.node() {
        Node::Dirac(a) => Ok(a.clone()),
        Node::Parameterized(p) => Ok(p.sample(rng)),
        Node::Weighted { base, .. } => draw(base, rng),
        Node::Product(cs) => cs
            .iter()
            .enumerate()
            .map(|(i, c)| draw(c, &mut rng.split(i as u64)))
            .collect::<Result<Vec<_>>>()
            .map(Point::Tuple),
        Node::Power { of, shape } => (0..Measure::power_len(shape))
            .map(|i| draw(of, &mut rng.split(i as u64)))
            .collect::<Result<Vec<_>>>()
            .map(Point::Tuple),
        Node::ForProduct { indices, kernel } => indices
            .iter()
            .enumerate()
            .map(|(i, idx)| draw(&kernel.apply(idx)?, &mut rng.split(i as u64)))
            .collect::<Result<Vec<_>>>()
            .map(Point::Tuple),
        Node::Bind { of, kernel } => draw_bind(of, kernel, rng),
        Node::Superposition(a, b) => {
            let (ma, mb) = match (total_mass(a), total_mass(b)) {
                (Some(x), Some(y)) if x + y > 0.0 => (x, y),
                _ => return Err(MeasureError::NotProbability(m.to_string())),
            };
            if rng.uniform() * (ma + mb) < ma {
                draw(a, &mut rng.split(0))
            } else {
                draw(b, &mut rng.split(1))
            }
        }
        Node::Pushforward { map, of } => map.forward(&draw(of, rng)?),
        Node::Chain(_) => Err(MeasureError::Invalid("a chain is an infinite sequence; sample a prefix instead".into())),
        Node::Lebesgue | Node::Counting | Node::PointwiseProduct { .. } | Node::Integral { .. } => {
            Err(MeasureError::NotProbability(m.to_string()))
        }
    }
}

fn draw_bind(of: &Measure, kernel: &Kernel, rng: &Rng) -> Result<Point> {
    let x = draw(of, &mut rng.split(0))?;
    let y = draw(&kernel.apply(&x)?, &mut rng.split(1))?;
    Ok(Point::Tuple(vec![x, y]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::combinators;
    use crate::kernels::{make_kernel, ParamMap};
    use crate::logweight::LogWeight;

    #[test]
    fn dirac_and_determinism() {
        assert_eq!(sample(&Measure::dirac(3.0), 17).unwrap(), Point::Real(3.0));
        let n = catalog::normal(0.0, 1.0).unwrap();
        assert_eq!(format!("{:?}", sample(&n, 5).unwrap()), format!("{:?}", sample(&n, 5).unwrap()));
        assert!(matches!(sample(&Measure::lebesgue(), 1), Err(MeasureError::NotProbability(_))));
    }

    #[test]
    fn masses() {
        let half = LogWeight::new(0.5f64.ln());
        let n = catalog::normal(0.0, 1.0).unwrap();
        let mix = combinators::superpose(
            combinators::scale(half, Measure::dirac(0.0)).unwrap(),
            combinators::scale(half, n.clone()).unwrap(),
        )
        .unwrap();
        assert!((total_mass(&mix).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(total_mass(&combinators::scale(LogWeight::NEG_INF, n).unwrap()), Some(0.0));
    }

    #[test]
    fn bind_uses_split_streams() {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
        let n = catalog::normal(0.0, 1.0).unwrap();
        let b = combinators::bind(n.clone(), k.clone()).unwrap();
        let p = sample(&b, 8).unwrap();
        let root = Rng::new(8);
        let x = draw(&n, &mut root.split(0)).unwrap();
        let y = draw(&k.apply(&x).unwrap(), &mut root.split(1)).unwrap();
        assert_eq!(p, Point::Tuple(vec![x, y]));
    }
}
