//! Sample-space points and the shapes of sample spaces.

use std::cmp::Ordering;
use std::fmt;

use crate::error::MeasureError;
use crate::logweight::format_g17;

/// An element of a measure's sample space.
///
/// Tuples serve both as points of product spaces and as finite prefixes of
/// sequences (powers, indexed products and chains).
#[derive(Clone, Debug)]
pub enum Point {
    Real(f64),
    Int(i64),
    Tuple(Vec<Point>),
}

impl Point {
    pub fn tuple<I: IntoIterator<Item = Point>>(items: I) -> Point {
        Point::Tuple(items.into_iter().collect())
    }

    /// A tuple of reals.
    pub fn reals(xs: &[f64]) -> Point {
        Point::Tuple(xs.iter().copied().map(Point::Real).collect())
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match *self {
            Point::Real(v) => Some(v),
            Point::Int(i) => Some(i as f64),
            Point::Tuple(_) => None,
        }
    }

    /// Integer value of a scalar, if it has one.
    pub fn as_integer(&self) -> Option<i64> {
        match *self {
            Point::Int(i) => Some(i),
            Point::Real(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Some(v as i64),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Point]> {
        match self {
            Point::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Scalar components of a flat tuple of scalars.
    pub fn scalars(&self) -> Option<Vec<f64>> {
        self.as_tuple()?.iter().map(Point::as_scalar).collect()
    }

    pub fn expect_scalar(&self) -> Result<f64, MeasureError> {
        self.as_scalar().ok_or_else(|| MeasureError::shape("a scalar", self))
    }

    pub fn expect_tuple(&self, len: usize) -> Result<&[Point], MeasureError> {
        match self.as_tuple() {
            Some(items) if items.len() == len => Ok(items),
            _ => Err(MeasureError::shape(format!("a tuple of length {len}"), self)),
        }
    }

    /// Total order used to canonicalize structures holding points.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        match (self, other) {
            (Point::Tuple(a), Point::Tuple(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Point::Tuple(_), _) => Ordering::Greater,
            (_, Point::Tuple(_)) => Ordering::Less,
            (a, b) => {
                let (x, y) = (a.as_scalar().unwrap(), b.as_scalar().unwrap());
                x.total_cmp(&y)
            }
        }
    }
}

impl PartialEq for Point {
    /// Scalars compare numerically, so `Int(3) == Real(3.0)`.
    fn eq(&self, other: &Point) -> bool {
        match (self, other) {
            (Point::Tuple(a), Point::Tuple(b)) => a == b,
            (Point::Tuple(_), _) | (_, Point::Tuple(_)) => false,
            (a, b) => a.as_scalar() == b.as_scalar(),
        }
    }
}

impl From<f64> for Point {
    fn from(v: f64) -> Self {
        Point::Real(v)
    }
}

impl From<i64> for Point {
    fn from(v: i64) -> Self {
        Point::Int(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Int(i) => write!(f, "{i}"),
            Point::Real(v) if v.is_finite() => f.write_str(&format_g17(*v)),
            Point::Real(v) => write!(f, "{v}"),
            Point::Tuple(items) => {
                f.write_str("[")?;
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Shape of a sample space.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Scalar,
    /// Heterogeneous fixed-arity tuple.
    Tuple(Vec<Space>),
    /// Homogeneous tuple of fixed length.
    Array(usize, Box<Space>),
    /// Finite prefixes (length at least one) of an infinite sequence.
    Sequence(Box<Space>),
    /// Shape not known until a kernel is applied.
    Any,
}

impl Space {
    /// Checks that `x` has this shape.
    pub fn check(&self, x: &Point) -> Result<(), MeasureError> {
        match self {
            Space::Any => Ok(()),
            Space::Scalar => x.expect_scalar().map(|_| ()),
            Space::Tuple(children) => {
                let items = x.expect_tuple(children.len())?;
                children.iter().zip(items).try_for_each(|(s, p)| s.check(p))
            }
            Space::Array(n, elem) => {
                let items = x.expect_tuple(*n)?;
                items.iter().try_for_each(|p| elem.check(p))
            }
            Space::Sequence(elem) => match x.as_tuple() {
                Some(items) if !items.is_empty() => items.iter().try_for_each(|p| elem.check(p)),
                _ => Err(MeasureError::shape("a nonempty sequence prefix", x)),
            },
        }
    }

    /// Whether two shapes can describe the same sample space.
    pub fn compatible(&self, other: &Space) -> bool {
        use Space::*;
        match (self, other) {
            (Any, _) | (_, Any) => true,
            (Scalar, Scalar) => true,
            (Tuple(a), Tuple(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y)),
            (Array(n, e), Tuple(b)) | (Tuple(b), Array(n, e)) => *n == b.len() && b.iter().all(|y| e.compatible(y)),
            (Array(n, a), Array(m, b)) => n == m && a.compatible(b),
            (Sequence(a), Sequence(b)) => a.compatible(b),
            (Sequence(a), Array(_, b)) | (Array(_, b), Sequence(a)) => a.compatible(b),
            (Sequence(a), Tuple(b)) | (Tuple(b), Sequence(a)) => b.iter().all(|y| a.compatible(y)),
            _ => false,
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Scalar => f.write_str("scalar"),
            Space::Any => f.write_str("any"),
            Space::Array(n, e) => write!(f, "{e}^{n}"),
            Space::Sequence(e) => write!(f, "seq<{e}>"),
            Space::Tuple(items) => {
                f.write_str("(")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}
