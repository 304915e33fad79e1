//! First-class measures with local log-densities.
//!
//! Measures are immutable expression trees ([`Measure`]). Every measure
//! reports a base measure near each point and its log-density with respect
//! to that base; [`logdensity3`] combines these into `log dμ/dν` for any pair
//! of measures by walking both base chains.
//!
//! ```
//! use measurekit::{catalog, logdensity3, Measure, Point};
//!
//! let n = catalog::normal(0.0, 1.0).unwrap();
//! let v = logdensity3(&n, &Measure::lebesgue(), &Point::Real(1.0)).unwrap();
//! assert!((v.to_f64() - -1.4189385332046727).abs() < 1e-12);
//! ```

pub mod affine;
pub mod catalog;
pub mod cli;
pub mod combinators;
pub mod density;
pub mod doc;
pub mod error;
pub mod kernels;
pub mod logweight;
pub mod measure;
pub mod point;
pub mod rng;
pub mod sampling;
pub mod verify;

pub use affine::{AffineMap, AffineMode, Factor};
pub use catalog::{Family, ParamSet, Parameterized};
pub use combinators::{DensityClosure, Likelihood};
pub use density::{basemeasure, logdensity2, logdensity3};
pub use error::{MeasureError, Result};
pub use kernels::{chain, chain_logdensity2, make_kernel, sample_chain, ChainSample, ChainSpec, Kernel, ParamMap};
pub use logweight::{LogWeight, WeightClass};
pub use measure::{Measure, MeasureKind, Node};
pub use point::{Point, Space};
pub use rng::Rng;
pub use sampling::{sample, total_mass};
