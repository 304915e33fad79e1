//! Base measures and the density recursion.
//!
//! `logdensity3(μ, ν, x)` is computed by telescoping through base measures:
//!
//! ```text
//! log dμ/dν = log dμ/dα + log dα/dβ − log dν/dβ,   α = base(μ, x), β = base(ν, x)
//! ```
//!
//! until the two sides meet or both are terminal. Terminal pairs are settled
//! by the primitive rules below. Each pair is evaluated in a canonical
//! orientation (the structurally smaller measure first) and negated for the
//! other orientation, so antisymmetry holds bit for bit.

use std::cmp::Ordering;

use crate::error::{MeasureError, Result};
use crate::logweight::{LogWeight, WeightClass};
use crate::measure::{Measure, Node};
use crate::point::Point;

/// Recursion depth at which evaluation gives up.
const MAX_DEPTH: usize = 512;

/// Base measure of `m` near `x`.
pub fn basemeasure(m: &Measure, x: &Point) -> Result<Measure> {
    m.space().check(x)?;
    base(m, x)
}

/// Log-density of `m` with respect to its own base measure at `x`.
pub fn logdensity2(m: &Measure, x: &Point) -> Result<LogWeight> {
    m.space().check(x)?;
    ld2(m, x)
}

/// Log-density `log dμ/dν` at `x`.
pub fn logdensity3(mu: &Measure, nu: &Measure, x: &Point) -> Result<LogWeight> {
    mu.space().check(x)?;
    nu.space().check(x)?;
    ld3(mu, nu, x, 0)
}

/// Number of `basemeasure` steps from `m` to a measure that is its own base.
pub fn base_chain_length(m: &Measure, x: &Point) -> Result<usize> {
    m.space().check(x)?;
    let mut current = m.clone();
    for steps in 0..=MAX_DEPTH {
        let next = base(&current, x)?;
        if next.structural_cmp(&current) == Ordering::Equal {
            return Ok(steps);
        }
        current = next;
    }
    Err(MeasureError::Invalid(format!("base-measure chain of {m} does not terminate")))
}

impl Measure {
    pub fn basemeasure(&self, x: &Point) -> Result<Measure> {
        basemeasure(self, x)
    }

    /// Log-density with respect to the base measure.
    pub fn logdensity(&self, x: &Point) -> Result<LogWeight> {
        logdensity2(self, x)
    }

    /// Log-density with respect to `nu`.
    pub fn logdensity_wrt(&self, nu: &Measure, x: &Point) -> Result<LogWeight> {
        logdensity3(self, nu, x)
    }
}

/// Whether `base(m, x)` is the same for every `x`.
fn has_global_base(m: &Measure) -> bool {
    match m.node() {
        Node::Lebesgue | Node::Counting | Node::Dirac(_) | Node::Weighted { .. } | Node::Parameterized(_) => true,
        Node::Integral { .. } => true,
        Node::Product(cs) => cs.iter().all(has_global_base),
        Node::Power { of, .. } => has_global_base(of),
        Node::Superposition(a, b) => has_global_base(a) && has_global_base(b),
        Node::PointwiseProduct { prior, .. } => has_global_base(prior),
        Node::Pushforward { of, .. } => has_global_base(of),
        Node::ForProduct { .. } | Node::Bind { .. } | Node::Chain(_) => false,
    }
}

fn items(x: &Point, n: usize) -> Result<&[Point]> {
    x.expect_tuple(n)
}

fn prefix(x: &Point) -> Result<&[Point]> {
    match x.as_tuple() {
        Some(items) if !items.is_empty() => Ok(items),
        _ => Err(MeasureError::shape("a nonempty sequence prefix", x)),
    }
}

pub(crate) fn base(m: &Measure, x: &Point) -> Result<Measure> {
    Ok(match m.node() {
        Node::Lebesgue | Node::Counting | Node::Dirac(_) => m.clone(),
        Node::Weighted { base, .. } | Node::Integral { base, .. } => base.clone(),
        Node::Parameterized(p) => p.base(),
        Node::Product(cs) => {
            let xs = items(x, cs.len())?;
            let bases = cs.iter().zip(xs).map(|(c, xi)| base(c, xi)).collect::<Result<_>>()?;
            Measure::new(Node::Product(bases))
        }
        Node::Power { of, shape } => {
            let n = Measure::power_len(shape);
            let xs = items(x, n)?;
            if has_global_base(of) {
                match base(of, &xs[0])?.node() {
                    Node::Weighted { logw, base } => Measure::new(Node::Weighted {
                        logw: logw.times(n as f64),
                        base: Measure::new(Node::Power { of: base.clone(), shape: shape.clone() }),
                    }),
                    _ => Measure::new(Node::Power { of: base(of, &xs[0])?, shape: shape.clone() }),
                }
            } else {
                let bases = xs.iter().map(|xi| base(of, xi)).collect::<Result<_>>()?;
                Measure::new(Node::Product(bases))
            }
        }
        Node::ForProduct { indices, kernel } => {
            let xs = items(x, indices.len())?;
            let bases = indices
                .iter()
                .zip(xs)
                .map(|(i, xi)| base(&kernel.apply(i)?, xi))
                .collect::<Result<_>>()?;
            Measure::new(Node::Product(bases))
        }
        Node::Bind { of, kernel } => {
            let xs = items(x, 2)?;
            let inner = kernel.apply(&xs[0])?;
            Measure::new(Node::Product(vec![base(of, &xs[0])?, base(&inner, &xs[1])?]))
        }
        Node::Superposition(a, b) => Measure::new(Node::Superposition(base(a, x)?, base(b, x)?)),
        Node::PointwiseProduct { prior, .. } => base(prior, x)?,
        Node::Pushforward { map, of } => map.push(&base(of, &map.inverse(x)?)?)?,
        Node::Chain(spec) => {
            let xs = prefix(x)?;
            let mut bases = Vec::with_capacity(xs.len());
            bases.push(base(spec.initial(), &xs[0])?);
            for w in xs.windows(2) {
                bases.push(base(&spec.step().apply(&w[0])?, &w[1])?);
            }
            Measure::new(Node::Product(bases))
        }
    })
}

pub(crate) fn ld2(m: &Measure, x: &Point) -> Result<LogWeight> {
    match m.node() {
        Node::Lebesgue | Node::Counting | Node::Dirac(_) => Ok(LogWeight::ZERO),
        Node::Weighted { logw, .. } => Ok(*logw),
        Node::Parameterized(p) => p.logdensity(x),
        Node::Product(cs) => {
            let xs = items(x, cs.len())?;
            cs.iter().zip(xs).map(|(c, xi)| ld2(c, xi)).sum()
        }
        Node::Power { of, shape } => {
            let xs = items(x, Measure::power_len(shape))?;
            xs.iter().map(|xi| ld2(of, xi)).sum()
        }
        Node::ForProduct { indices, kernel } => {
            let xs = items(x, indices.len())?;
            indices.iter().zip(xs).map(|(i, xi)| ld2(&kernel.apply(i)?, xi)).sum()
        }
        Node::Bind { of, kernel } => {
            let xs = items(x, 2)?;
            Ok(ld2(of, &xs[0])? + ld2(&kernel.apply(&xs[0])?, &xs[1])?)
        }
        Node::Superposition(a, b) => superposition_ld2(a, b, x),
        Node::PointwiseProduct { prior, likelihood } => Ok(ld2(prior, x)? + likelihood.loglik(x)?),
        Node::Pushforward { map, of } => ld2(of, &map.inverse(x)?),
        Node::Chain(spec) => crate::kernels::chain_logdensity2(spec, prefix(x)?),
        Node::Integral { density, .. } => density.log_value(x),
    }
}

/// Density of `a + b` with respect to `α + β`:
/// `f / (1 + (dα/dβ)⁻¹) + g / (dα/dβ + 1)`, with `dα/dβ` evaluated once.
fn superposition_ld2(a: &Measure, b: &Measure, x: &Point) -> Result<LogWeight> {
    let f = ld2(a, x)?;
    let g = ld2(b, x)?;
    let alpha = base(a, x)?;
    let beta = base(b, x)?;
    if alpha == beta {
        return Ok(f.logaddexp(g) - LogWeight::Value(std::f64::consts::LN_2));
    }
    let r = ld3(&alpha, &beta, x, 0)?;
    Ok((f - (-r).softplus()).logaddexp(g - r.softplus()))
}

pub(crate) fn ld3(mu: &Measure, nu: &Measure, x: &Point, depth: usize) -> Result<LogWeight> {
    if depth > MAX_DEPTH {
        return Err(MeasureError::Invalid(format!("density recursion did not terminate for {mu} and {nu}")));
    }
    match mu.structural_cmp(nu) {
        Ordering::Equal => Ok(LogWeight::ZERO),
        Ordering::Less => oriented(mu, nu, x, depth + 1),
        Ordering::Greater => Ok(-oriented(nu, mu, x, depth + 1)?),
    }
}

fn is_unrelated(e: &MeasureError) -> bool {
    matches!(e, MeasureError::UnrelatedPrimitives { .. })
}

/// `log d(σ₁ + σ₂)/dη` from `log dσᵢ/dη`. The sum is dominated by `η` only
/// if both parts are, and dominates `η` if either part does, so an undefined
/// part next to a part that dominates `η` gives `+∞`. A part whose chain ends
/// at a primitive unrelated to the target contributes nothing.
fn sum_densities(a: LogWeight, b: LogWeight) -> LogWeight {
    let dominates = |v: LogWeight| matches!(v.class(), WeightClass::Finite | WeightClass::PosInf);
    match (a.is_undefined(), b.is_undefined()) {
        (false, false) => a.logaddexp(b),
        (true, false) if dominates(b) => LogWeight::POS_INF,
        (false, true) if dominates(a) => LogWeight::POS_INF,
        _ => LogWeight::Undefined,
    }
}

fn combine_components(l: Result<LogWeight>, r: Result<LogWeight>) -> Result<LogWeight> {
    match (l, r) {
        (Ok(a), Ok(b)) => Ok(sum_densities(a, b)),
        (Ok(a), Err(e)) | (Err(e), Ok(a)) if is_unrelated(&e) => Ok(a),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// `log dμ/dν` for `μ` strictly before `ν` in the structural order.
fn oriented(mu: &Measure, nu: &Measure, x: &Point, depth: usize) -> Result<LogWeight> {
    if let Some(v) = primitive_pair(mu, nu, x) {
        return v;
    }
    if let Node::Superposition(a, b) = mu.node() {
        if base(mu, x)? == *nu {
            return ld2(mu, x);
        }
        return combine_components(ld3(a, nu, x, depth), ld3(b, nu, x, depth));
    }
    if let Node::Superposition(a, b) = nu.node() {
        if base(nu, x)? == *mu {
            return Ok(-ld2(nu, x)?);
        }
        return Ok(-combine_components(ld3(a, mu, x, depth), ld3(b, mu, x, depth))?);
    }
    if let Some(v) = elementwise(mu, nu, x, depth) {
        return v;
    }
    if let (Node::Pushforward { map: s, of: a }, Node::Pushforward { map: t, of: b }) = (mu.node(), nu.node()) {
        if s.structural_cmp(t) == Ordering::Equal {
            return ld3(a, b, &s.inverse(x)?, depth);
        }
    }
    if let Some((a, b)) = pushed_parts(mu) {
        return combine_components(ld3(&a, nu, x, depth), ld3(&b, nu, x, depth));
    }
    if let Some((a, b)) = pushed_parts(nu) {
        return Ok(-combine_components(ld3(&a, mu, x, depth), ld3(&b, mu, x, depth))?);
    }
    match (mu.is_terminal(), nu.is_terminal()) {
        (true, true) => Err(unrelated(mu, nu)),
        (false, false) => {
            let bmu = base(mu, x)?;
            if bmu == *nu {
                return ld2(mu, x);
            }
            let bnu = base(nu, x)?;
            if bnu == *mu {
                return Ok(-ld2(nu, x)?);
            }
            Ok(ld2(mu, x)? + ld3(&bmu, &bnu, x, depth)? - ld2(nu, x)?)
        }
        (false, true) => {
            let bmu = base(mu, x)?;
            Ok(ld2(mu, x)? + ld3(&bmu, nu, x, depth)?)
        }
        (true, false) => {
            let bnu = base(nu, x)?;
            Ok(ld3(mu, &bnu, x, depth)? - ld2(nu, x)?)
        }
    }
}

/// Components of a pushed superposition `T⋆(a + b) = T⋆a + T⋆b`.
fn pushed_parts(m: &Measure) -> Option<(Measure, Measure)> {
    let Node::Pushforward { map, of } = m.node() else { return None };
    let (a, b) = match of.node() {
        Node::Superposition(a, b) => (a.clone(), b.clone()),
        Node::Pushforward { .. } => pushed_parts(of)?,
        _ => return None,
    };
    let push = |c: Measure| Measure::new(Node::Pushforward { map: map.clone(), of: c });
    Some((push(a), push(b)))
}

fn unrelated(mu: &Measure, nu: &Measure) -> MeasureError {
    MeasureError::UnrelatedPrimitives { left: mu.to_string(), right: nu.to_string() }
}

enum Local {
    /// Lebesgue measure.
    Diffuse,
    /// Unit atoms on a discrete set; the flag says whether `x` is one.
    Atoms(bool),
}

fn local_kind(m: &Measure, x: &Point) -> Option<Local> {
    match m.node() {
        Node::Lebesgue => Some(Local::Diffuse),
        Node::Counting => Some(Local::Atoms(x.as_integer().is_some())),
        Node::Dirac(a) => Some(Local::Atoms(a == x)),
        Node::Pushforward { map, of } if matches!(of.node(), Node::Counting) => {
            let z = map.inverse(x).ok()?;
            Some(Local::Atoms(z.as_integer().is_some()))
        }
        _ => None,
    }
}

/// Rules for pairs of distinct primitive (or pushed counting) measures.
fn primitive_pair(mu: &Measure, nu: &Measure, x: &Point) -> Option<Result<LogWeight>> {
    let pair = (local_kind(mu, x)?, local_kind(nu, x)?);
    let dirac_vs_lebesgue = |dirac: &Measure, at_atom: bool| match dirac.node() {
        Node::Dirac(_) if at_atom => Ok(LogWeight::Undefined),
        Node::Dirac(_) => Ok(LogWeight::NEG_INF),
        _ => Err(unrelated(mu, nu)),
    };
    Some(match pair {
        (Local::Atoms(true), Local::Atoms(true)) => Ok(LogWeight::ZERO),
        (Local::Atoms(true), Local::Atoms(false)) => Ok(LogWeight::POS_INF),
        (Local::Atoms(false), Local::Atoms(true)) => Ok(LogWeight::NEG_INF),
        (Local::Atoms(false), Local::Atoms(false)) => Ok(LogWeight::Undefined),
        (Local::Atoms(at), Local::Diffuse) => dirac_vs_lebesgue(mu, at),
        (Local::Diffuse, Local::Atoms(at)) => dirac_vs_lebesgue(nu, at).map(|v| -v),
        (Local::Diffuse, Local::Diffuse) => Ok(LogWeight::ZERO),
    })
}

/// Number of factors of a product-like measure.
fn arity(m: &Measure) -> Option<usize> {
    match m.node() {
        Node::Product(cs) => Some(cs.len()),
        Node::Power { shape, .. } => Some(Measure::power_len(shape)),
        Node::ForProduct { indices, .. } => Some(indices.len()),
        Node::Dirac(Point::Tuple(items)) => Some(items.len()),
        _ => None,
    }
}

fn factor(m: &Measure, i: usize) -> Result<Measure> {
    Ok(match m.node() {
        Node::Product(cs) => cs[i].clone(),
        Node::Power { of, .. } => of.clone(),
        Node::ForProduct { indices, kernel } => kernel.apply(&indices[i])?,
        Node::Dirac(Point::Tuple(items)) => Measure::new(Node::Dirac(items[i].clone())),
        _ => unreachable!("factor of a non-product measure"),
    })
}

fn has_superposition(m: &Measure) -> bool {
    match m.node() {
        Node::Superposition(..) => true,
        Node::Weighted { base, .. } | Node::Integral { base, .. } => has_superposition(base),
        Node::Product(cs) => cs.iter().any(has_superposition),
        Node::Power { of, .. } | Node::Pushforward { of, .. } => has_superposition(of),
        Node::PointwiseProduct { prior, .. } => has_superposition(prior),
        _ => false,
    }
}

/// Factorwise sum for two product-like measures of equal arity. Two powers
/// are split only once both are terminal, so that weights of the element
/// measure are factored out first, unless an element involves a
/// superposition; those are settled one element at a time.
fn elementwise(mu: &Measure, nu: &Measure, x: &Point, depth: usize) -> Option<Result<LogWeight>> {
    let n = arity(mu)?;
    if arity(nu)? != n {
        return None;
    }
    match (mu.node(), nu.node()) {
        (Node::Power { of: a, .. }, Node::Power { of: b, .. })
            if !(mu.is_terminal() && nu.is_terminal()) && !has_superposition(a) && !has_superposition(b) =>
        {
            return None
        }
        (Node::Dirac(_), Node::Dirac(_)) => return None,
        _ => {}
    }
    let run = || -> Result<LogWeight> {
        let xs = items(x, n)?;
        if let (Node::Power { of: a, .. }, Node::Power { of: b, .. }) = (mu.node(), nu.node()) {
            return xs.iter().map(|xi| ld3(a, b, xi, depth)).sum();
        }
        (0..n).map(|i| ld3(&factor(mu, i)?, &factor(nu, i)?, &xs[i], depth)).sum()
    };
    Some(run())
}
