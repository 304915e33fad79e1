//! The measure expression tree.
//!
//! A [`Measure`] is an immutable, cheaply clonable handle to a [`Node`].
//! Equality is structural: same kind, same children, bitwise-equal
//! parameters. Opaque user functions (in kernels and densities) compare by
//! identity. [`Measure::structural_cmp`] extends equality to a total order,
//! which the density engine uses to pick a canonical orientation for each
//! pair of measures.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::affine::AffineMap;
use crate::catalog::Parameterized;
use crate::combinators::{DensityFn, Likelihood};
use crate::kernels::{ChainSpec, Kernel};
use crate::logweight::LogWeight;
use crate::point::{Point, Space};

#[derive(Clone)]
pub struct Measure(Arc<Node>);

/// Node kinds of a measure expression.
pub enum Node {
    Lebesgue,
    Counting,
    Dirac(Point),
    /// Constant log-density `logw` with respect to `base`.
    Weighted { logw: LogWeight, base: Measure },
    Parameterized(Parameterized),
    Product(Vec<Measure>),
    /// iid product over a shape; points are flat row-major tuples.
    Power { of: Measure, shape: Vec<usize> },
    ForProduct { indices: Vec<Point>, kernel: Kernel },
    /// Pair measure `(x, y)` with `x ~ of` and `y ~ kernel(x)`.
    Bind { of: Measure, kernel: Kernel },
    Superposition(Measure, Measure),
    PointwiseProduct { prior: Measure, likelihood: Likelihood },
    Pushforward { map: AffineMap, of: Measure },
    Chain(ChainSpec),
    /// Measure with density `density` relative to `base`.
    Integral { density: DensityFn, base: Measure },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Lebesgue,
    Counting,
    Dirac,
    Weighted,
    Parameterized,
    Product,
    Power,
    ForProduct,
    Bind,
    Superposition,
    PointwiseProduct,
    Pushforward,
    Chain,
    Integral,
}

impl Measure {
    pub fn new(node: Node) -> Self {
        Measure(Arc::new(node))
    }

    pub fn lebesgue() -> Self {
        Measure::new(Node::Lebesgue)
    }

    pub fn counting() -> Self {
        Measure::new(Node::Counting)
    }

    pub fn dirac(atom: impl Into<Point>) -> Self {
        Measure::new(Node::Dirac(atom.into()))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn kind(&self) -> MeasureKind {
        match self.node() {
            Node::Lebesgue => MeasureKind::Lebesgue,
            Node::Counting => MeasureKind::Counting,
            Node::Dirac(_) => MeasureKind::Dirac,
            Node::Weighted { .. } => MeasureKind::Weighted,
            Node::Parameterized(_) => MeasureKind::Parameterized,
            Node::Product(_) => MeasureKind::Product,
            Node::Power { .. } => MeasureKind::Power,
            Node::ForProduct { .. } => MeasureKind::ForProduct,
            Node::Bind { .. } => MeasureKind::Bind,
            Node::Superposition(..) => MeasureKind::Superposition,
            Node::PointwiseProduct { .. } => MeasureKind::PointwiseProduct,
            Node::Pushforward { .. } => MeasureKind::Pushforward,
            Node::Chain(_) => MeasureKind::Chain,
            Node::Integral { .. } => MeasureKind::Integral,
        }
    }

    /// Lebesgue, counting and Dirac measures are their own base measures.
    pub fn is_primitive(&self) -> bool {
        matches!(self.node(), Node::Lebesgue | Node::Counting | Node::Dirac(_))
    }

    /// Fixed point of `basemeasure`: primitives and combinations of them
    /// that no rule reduces further.
    pub fn is_terminal(&self) -> bool {
        match self.node() {
            Node::Lebesgue | Node::Counting | Node::Dirac(_) => true,
            Node::Product(cs) => cs.iter().all(Measure::is_terminal),
            Node::Power { of, .. } => of.is_terminal(),
            Node::Superposition(a, b) => a.is_terminal() && b.is_terminal(),
            Node::Pushforward { map, of } => of.is_terminal() && !map.simplifies(of),
            _ => false,
        }
    }

    /// Number of elements in a power's shape.
    pub(crate) fn power_len(shape: &[usize]) -> usize {
        shape.iter().product()
    }

    pub fn space(&self) -> Space {
        match self.node() {
            Node::Lebesgue | Node::Counting | Node::Parameterized(_) => Space::Scalar,
            Node::Dirac(a) => space_of_point(a),
            Node::Weighted { base, .. } | Node::Integral { base, .. } => base.space(),
            Node::Product(cs) => Space::Tuple(cs.iter().map(Measure::space).collect()),
            Node::Power { of, shape } => Space::Array(Measure::power_len(shape), Box::new(of.space())),
            Node::ForProduct { indices, kernel } => Space::Array(indices.len(), Box::new(kernel.codomain())),
            Node::Bind { of, kernel } => Space::Tuple(vec![of.space(), kernel.codomain()]),
            Node::Superposition(a, _) => a.space(),
            Node::PointwiseProduct { prior, .. } => prior.space(),
            Node::Pushforward { of, .. } => of.space(),
            Node::Chain(spec) => Space::Sequence(Box::new(spec.initial().space())),
        }
    }

    /// Height of the expression tree; leaves have depth 1.
    pub fn depth(&self) -> usize {
        1 + match self.node() {
            Node::Lebesgue | Node::Counting | Node::Dirac(_) | Node::Parameterized(_) => 0,
            Node::Weighted { base, .. } | Node::Integral { base, .. } => base.depth(),
            Node::Product(cs) => cs.iter().map(Measure::depth).max().unwrap_or(0),
            Node::Power { of, .. } => of.depth(),
            Node::ForProduct { kernel, .. } => kernel.output_depth(),
            Node::Bind { of, kernel } => of.depth().max(kernel.output_depth()),
            Node::Superposition(a, b) => a.depth().max(b.depth()),
            Node::PointwiseProduct { prior, .. } => prior.depth(),
            Node::Pushforward { of, .. } => of.depth(),
            Node::Chain(spec) => spec.initial().depth().max(spec.step().output_depth()),
        }
    }

    fn kind_rank(&self) -> u8 {
        self.kind() as u8
    }

    /// Total order consistent with structural equality.
    pub fn structural_cmp(&self, other: &Measure) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let by_kind = self.kind_rank().cmp(&other.kind_rank());
        if by_kind != Ordering::Equal {
            return by_kind;
        }
        match (self.node(), other.node()) {
            (Node::Lebesgue, Node::Lebesgue) | (Node::Counting, Node::Counting) => Ordering::Equal,
            (Node::Dirac(a), Node::Dirac(b)) => a.total_cmp(b),
            (Node::Weighted { logw: w1, base: b1 }, Node::Weighted { logw: w2, base: b2 }) => w1
                .to_f64()
                .total_cmp(&w2.to_f64())
                .then_with(|| b1.structural_cmp(b2)),
            (Node::Parameterized(p), Node::Parameterized(q)) => p.structural_cmp(q),
            (Node::Product(a), Node::Product(b)) => cmp_slices(a, b),
            (Node::Power { of: a, shape: s }, Node::Power { of: b, shape: t }) => {
                s.cmp(t).then_with(|| a.structural_cmp(b))
            }
            (Node::ForProduct { indices: i, kernel: k }, Node::ForProduct { indices: j, kernel: l }) => {
                cmp_points(i, j).then_with(|| k.structural_cmp(l))
            }
            (Node::Bind { of: a, kernel: k }, Node::Bind { of: b, kernel: l }) => {
                a.structural_cmp(b).then_with(|| k.structural_cmp(l))
            }
            (Node::Superposition(a1, b1), Node::Superposition(a2, b2)) => {
                a1.structural_cmp(a2).then_with(|| b1.structural_cmp(b2))
            }
            (
                Node::PointwiseProduct { prior: p, likelihood: l },
                Node::PointwiseProduct { prior: q, likelihood: m },
            ) => p.structural_cmp(q).then_with(|| l.structural_cmp(m)),
            (Node::Pushforward { map: s, of: a }, Node::Pushforward { map: t, of: b }) => {
                s.structural_cmp(t).then_with(|| a.structural_cmp(b))
            }
            (Node::Chain(a), Node::Chain(b)) => a.structural_cmp(b),
            (Node::Integral { density: f, base: a }, Node::Integral { density: g, base: b }) => {
                f.structural_cmp(g).then_with(|| a.structural_cmp(b))
            }
            _ => unreachable!("kinds compared equal"),
        }
    }
}

pub(crate) fn cmp_slices(a: &[Measure], b: &[Measure]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.structural_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn cmp_points(a: &[Point], b: &[Point]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn cmp_f64s(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn space_of_point(p: &Point) -> Space {
    match p {
        Point::Tuple(items) => Space::Tuple(items.iter().map(space_of_point).collect()),
        _ => Space::Scalar,
    }
}

impl PartialEq for Measure {
    fn eq(&self, other: &Measure) -> bool {
        self.structural_cmp(other) == Ordering::Equal
    }
}

impl Eq for Measure {}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Lebesgue => f.write_str("Lebesgue"),
            Node::Counting => f.write_str("Counting"),
            Node::Dirac(a) => write!(f, "Dirac({a})"),
            Node::Weighted { logw, base } => write!(f, "Weighted({logw}, {base})"),
            Node::Parameterized(p) => write!(f, "{p}"),
            Node::Product(cs) => {
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ⊗ ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            Node::Power { of, shape } => write!(f, "{of}^{shape:?}"),
            Node::ForProduct { indices, kernel } => write!(f, "For[{} indices]({kernel:?})", indices.len()),
            Node::Bind { of, kernel } => write!(f, "({of} ⊗ {kernel:?})"),
            Node::Superposition(a, b) => write!(f, "({a} + {b})"),
            Node::PointwiseProduct { prior, likelihood } => write!(f, "({prior} ⊙ {likelihood:?})"),
            Node::Pushforward { map, of } => write!(f, "{map:?}⋆{of}"),
            Node::Chain(spec) => write!(f, "Chain({}, {:?})", spec.initial(), spec.step()),
            Node::Integral { base, .. } => write!(f, "∫(f, {base})"),
        }
    }
}
