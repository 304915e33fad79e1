//! Invertible affine maps and their pushforwards.
//!
//! A map is stored in one of two parameterizations. `Forward(σ, x₀)` sends
//! `z ↦ σz + x₀`. `Inverse(ψ, μ₀)` is described by its inverse `x ↦ ψ(x − μ₀)`,
//! so it sends `z ↦ ψ⁻¹z + μ₀`. The factor is a nonzero scalar or a square
//! lower-triangular matrix with positive diagonal.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{MeasureError, Result};
use crate::logweight::LogWeight;
use crate::measure::{cmp_f64s, Measure, Node};
use crate::point::{Point, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AffineMode {
    Forward,
    Inverse,
}

/// Scale (Forward) or precision factor (Inverse).
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Scalar(f64),
    /// Row-major `n × n` lower-triangular matrix.
    Lower { n: usize, entries: Vec<f64> },
}

impl Factor {
    /// Builds a lower-triangular factor from rows; entries above the
    /// diagonal must be zero.
    pub fn lower(rows: &[Vec<f64>]) -> Result<Factor> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(MeasureError::SingularTransform("factor must be a nonempty square matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i + 1..].iter().any(|&v| v != 0.0) {
                return Err(MeasureError::SingularTransform(format!("factor row {i} is not lower-triangular")));
            }
        }
        Ok(Factor::Lower { n, entries: rows.concat() })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Factor::Scalar(_) => None,
            Factor::Lower { n, .. } => Some(*n),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Factor::Scalar(v) => std::slice::from_ref(v),
            Factor::Lower { entries, .. } => entries,
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Factor::Scalar(v) => vec![vec![*v]],
            Factor::Lower { n, entries } => entries.chunks(*n).map(<[f64]>::to_vec).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Factor::Scalar(v) if *v == 0.0 || !v.is_finite() => {
                Err(MeasureError::SingularTransform(format!("scale {v} is not invertible")))
            }
            Factor::Scalar(_) => Ok(()),
            Factor::Lower { n, entries } => {
                if entries.iter().any(|v| !v.is_finite()) {
                    return Err(MeasureError::SingularTransform("factor has non-finite entries".into()));
                }
                match (0..*n).map(|i| entries[i * n + i]).find(|d| *d <= 0.0) {
                    Some(d) => Err(MeasureError::SingularTransform(format!("diagonal entry {d} is not positive"))),
                    None => Ok(()),
                }
            }
        }
    }

    fn log_abs_det(&self) -> f64 {
        match self {
            Factor::Scalar(v) => libm::log(v.abs()),
            Factor::Lower { n, entries } => (0..*n).map(|i| libm::log(entries[i * n + i])).sum(),
        }
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Factor::Scalar(s) => v.iter().map(|x| s * x).collect(),
            Factor::Lower { n, entries } => (0..*n)
                .map(|i| (0..=i).map(|j| entries[i * n + j] * v[j]).sum())
                .collect(),
        }
    }

    /// Solves `F y = v` by forward substitution.
    fn solve(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Factor::Scalar(s) => v.iter().map(|x| x / s).collect(),
            Factor::Lower { n, entries } => {
                let mut y = vec![0.0; *n];
                for i in 0..*n {
                    let partial: f64 = (0..i).map(|j| entries[i * n + j] * y[j]).sum();
                    y[i] = (v[i] - partial) / entries[i * n + i];
                }
                y
            }
        }
    }

    fn from_values(&self, values: Vec<f64>) -> Factor {
        match self {
            Factor::Scalar(_) => Factor::Scalar(values[0]),
            Factor::Lower { n, .. } => Factor::Lower { n: *n, entries: values },
        }
    }

    /// Inverse of a lower-triangular factor, column by column.
    fn inverse(&self) -> Factor {
        match self {
            Factor::Scalar(s) => Factor::Scalar(1.0 / s),
            Factor::Lower { n, .. } => {
                let mut inv = vec![0.0; n * n];
                for c in 0..*n {
                    let mut e = vec![0.0; *n];
                    e[c] = 1.0;
                    for (r, v) in self.solve(&e).into_iter().enumerate() {
                        inv[r * n + c] = v;
                    }
                }
                self.from_values(inv)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    mode: AffineMode,
    factor: Factor,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(mode: AffineMode, factor: Factor, offset: Vec<f64>) -> Result<Self> {
        factor.validate()?;
        let want = factor.dim().unwrap_or(1);
        if offset.len() != want {
            return Err(MeasureError::ShapeMismatch {
                expected: format!("offset of length {want}"),
                found: format!("length {}", offset.len()),
            });
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::SingularTransform("offset must be finite".into()));
        }
        Ok(AffineMap { mode, factor, offset })
    }

    /// `z ↦ σz + x₀` for scalars.
    pub fn forward_scalar(sigma: f64, x0: f64) -> Result<Self> {
        AffineMap::new(AffineMode::Forward, Factor::Scalar(sigma), vec![x0])
    }

    /// `z ↦ ψ⁻¹z + μ₀` for scalars.
    pub fn inverse_scalar(psi: f64, mu0: f64) -> Result<Self> {
        AffineMap::new(AffineMode::Inverse, Factor::Scalar(psi), vec![mu0])
    }

    pub fn mode(&self) -> AffineMode {
        self.mode
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Sample space of points the map acts on.
    pub fn space(&self) -> Space {
        match self.factor.dim() {
            None => Space::Scalar,
            Some(n) => Space::Array(n, Box::new(Space::Scalar)),
        }
    }

    fn coords(&self, x: &Point) -> Result<Vec<f64>> {
        match self.factor.dim() {
            None => Ok(vec![x.expect_scalar()?]),
            Some(n) => {
                let items = x.expect_tuple(n)?;
                items.iter().map(Point::expect_scalar).collect()
            }
        }
    }

    fn to_point(&self, v: Vec<f64>) -> Point {
        match self.factor.dim() {
            None => Point::Real(v[0]),
            Some(_) => Point::Tuple(v.into_iter().map(Point::Real).collect()),
        }
    }

    fn apply_forward(&self, z: &[f64]) -> Vec<f64> {
        let lin = match self.mode {
            AffineMode::Forward => self.factor.mul(z),
            AffineMode::Inverse => self.factor.solve(z),
        };
        lin.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        match self.mode {
            AffineMode::Forward => self.factor.solve(&centered),
            AffineMode::Inverse => self.factor.mul(&centered),
        }
    }

    /// `t(z)`.
    pub fn forward(&self, z: &Point) -> Result<Point> {
        Ok(self.to_point(self.apply_forward(&self.coords(z)?)))
    }

    /// `t⁻¹(x)`.
    pub fn inverse(&self, x: &Point) -> Result<Point> {
        Ok(self.to_point(self.apply_inverse(&self.coords(x)?)))
    }

    /// `log |det Dt|`: `+log|σ|` for Forward, `−log|ψ|` for Inverse.
    pub fn log_abs_det_forward(&self) -> f64 {
        match self.mode {
            AffineMode::Forward => self.factor.log_abs_det(),
            AffineMode::Inverse => -self.factor.log_abs_det(),
        }
    }

    /// The map `t⁻¹`, expressed in the other parameterization.
    pub fn inverse_map(&self) -> AffineMap {
        let shift = match self.mode {
            AffineMode::Forward => self.factor.solve(&self.offset),
            AffineMode::Inverse => self.factor.mul(&self.offset),
        };
        let mode = match self.mode {
            AffineMode::Forward => AffineMode::Inverse,
            AffineMode::Inverse => AffineMode::Forward,
        };
        AffineMap { mode, factor: self.factor.clone(), offset: shift.into_iter().map(|v| -v).collect() }
    }

    /// The same map in the other parameterization.
    pub fn dual(&self) -> AffineMap {
        let mode = match self.mode {
            AffineMode::Forward => AffineMode::Inverse,
            AffineMode::Inverse => AffineMode::Forward,
        };
        AffineMap { mode, factor: self.factor.inverse(), offset: self.offset.clone() }
    }

    /// Whether `m` is Lebesgue measure on this map's space.
    fn is_lebesgue_here(&self, m: &Measure) -> bool {
        match (self.factor.dim(), m.node()) {
            (None, Node::Lebesgue) => true,
            (Some(n), Node::Product(cs)) => cs.len() == n && cs.iter().all(|c| matches!(c.node(), Node::Lebesgue)),
            (Some(n), Node::Power { of, shape }) => {
                Measure::power_len(shape) == n && matches!(of.node(), Node::Lebesgue)
            }
            _ => false,
        }
    }

    /// Whether [`push`](Self::push) rewrites `t⋆m` into another node kind.
    pub fn simplifies(&self, m: &Measure) -> bool {
        self.is_lebesgue_here(m)
            || matches!(m.node(), Node::Weighted { .. } | Node::Dirac(_) | Node::Superposition(..))
    }

    /// `t⋆m`, rewritten where a closed form exists: Lebesgue picks up the
    /// constant `−log|det Dt|`, weights and superpositions commute with `t`,
    /// and atoms move.
    pub fn push(&self, m: &Measure) -> Result<Measure> {
        if self.is_lebesgue_here(m) {
            let logw = LogWeight::new(-self.log_abs_det_forward());
            return Ok(Measure::new(Node::Weighted { logw, base: m.clone() }));
        }
        Ok(match m.node() {
            Node::Weighted { logw, base } => Measure::new(Node::Weighted { logw: *logw, base: self.push(base)? }),
            Node::Dirac(a) => Measure::new(Node::Dirac(self.forward(a)?)),
            Node::Superposition(a, b) => Measure::new(Node::Superposition(self.push(a)?, self.push(b)?)),
            _ => Measure::new(Node::Pushforward { map: self.clone(), of: m.clone() }),
        })
    }

    pub(crate) fn structural_cmp(&self, other: &AffineMap) -> Ordering {
        let shape = |f: &Factor| f.dim().unwrap_or(0);
        self.mode
            .cmp(&other.mode)
            .then(shape(&self.factor).cmp(&shape(&other.factor)))
            .then_with(|| cmp_f64s(self.factor.values(), other.factor.values()))
            .then_with(|| cmp_f64s(&self.offset, &other.offset))
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = match self.mode {
            AffineMode::Forward => ("σ", "x₀"),
            AffineMode::Inverse => ("ψ", "μ₀"),
        };
        let factor = match &self.factor {
            Factor::Scalar(v) => v.to_string(),
            m => format!("{:?}", m.rows()),
        };
        let offset = if self.offset.len() == 1 { self.offset[0].to_string() } else { format!("{:?}", self.offset) };
        write!(f, "{:?}({a}={factor}, {b}={offset})", self.mode)
    }
}
