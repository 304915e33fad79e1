//! Parameterized measure families.
//!
//! Each family registers one or more parameterizations, identified by the
//! set of parameter names. A measure keeps the parameterization it was built
//! with; densities and samplers dispatch on it. The two-argument log-density
//! of a family is its data-dependent term, while parameter-dependent and
//! constant terms live in the base measure as a [`Node::Weighted`] weight.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{MeasureError, Result};
use crate::logweight::LogWeight;
use crate::measure::{cmp_f64s, Measure, Node};
use crate::point::Point;
use crate::rng::Rng;

/// `0.5 * ln(2π)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Normal,
    NegativeBinomial,
    Uniform01,
    Bernoulli,
    Poisson,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Normal,
        Family::NegativeBinomial,
        Family::Uniform01,
        Family::Bernoulli,
        Family::Poisson,
        Family::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "Normal",
            Family::NegativeBinomial => "NegativeBinomial",
            Family::Uniform01 => "Uniform01",
            Family::Bernoulli => "Bernoulli",
            Family::Poisson => "Poisson",
            Family::Exponential => "Exponential",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Registered parameterizations, in canonical parameter order.
    fn forms(self) -> &'static [Form] {
        match self {
            Family::Normal => &[Form::MuSigma],
            Family::NegativeBinomial => &[Form::RP, Form::AlphaBeta],
            Family::Uniform01 => &[Form::Unit],
            Family::Bernoulli => &[Form::P],
            Family::Poisson | Family::Exponential => &[Form::Rate],
        }
    }
}

/// A registered parameterization of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Form {
    MuSigma,
    RP,
    AlphaBeta,
    Unit,
    P,
    Rate,
}

impl Form {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Form::MuSigma => &["μ", "σ"],
            Form::RP => &["r", "p"],
            Form::AlphaBeta => &["α", "β"],
            Form::Unit => &[],
            Form::P => &["p"],
            Form::Rate => &["λ"],
        }
    }

    /// Values filled in for omitted names.
    fn default_for(self, name: &str) -> Option<f64> {
        match (self, name) {
            (Form::MuSigma, "μ") => Some(0.0),
            (Form::MuSigma, "σ") => Some(1.0),
            _ => None,
        }
    }
}

/// Maps ASCII spellings onto the canonical symbols.
pub fn canonical_name(name: &str) -> &str {
    match name {
        "mu" => "μ",
        "sigma" => "σ",
        "alpha" => "α",
        "beta" => "β",
        "lambda" => "λ",
        other => other,
    }
}

/// ASCII spelling of a canonical parameter name.
pub fn ascii_name(name: &str) -> &str {
    match name {
        "μ" => "mu",
        "σ" => "sigma",
        "α" => "alpha",
        "β" => "beta",
        "λ" => "lambda",
        other => other,
    }
}

/// Ordered parameter names and values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, f64)>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    /// Adds a parameter. A repeated name replaces the earlier value.
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((name.to_string(), value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<const N: usize> From<[(&str, f64); N]> for ParamSet {
    fn from(items: [(&str, f64); N]) -> Self {
        items.into_iter().fold(ParamSet::new(), |p, (n, v)| p.with(n, v))
    }
}

/// Finds the parameterization of `family` matching `names` (ASCII or
/// symbol spellings). Omitted names with defaults are allowed.
pub fn resolve_form(family: Family, names: &[&str]) -> Result<Form> {
    let given: Vec<&str> = names.iter().map(|n| canonical_name(n)).collect();
    for &form in family.forms() {
        let registered = form.names();
        let all_known = given.iter().all(|n| registered.contains(n));
        let all_present = registered.iter().all(|r| given.contains(r) || form.default_for(r).is_some());
        if all_known && all_present {
            return Ok(form);
        }
    }
    Err(MeasureError::UnknownParameterization { family: family.name().into(), names: names.join(",") })
}

/// A member of a catalog family with its parameterization.
#[derive(Clone, Debug)]
pub struct Parameterized {
    family: Family,
    form: Form,
    params: ParamSet,
}

impl Parameterized {
    pub fn new(family: Family, params: &ParamSet) -> Result<Self> {
        let mut seen = Vec::new();
        for name in params.names() {
            let c = canonical_name(name);
            if seen.contains(&c) {
                return Err(MeasureError::param(family.name(), format!("parameter '{name}' given twice")));
            }
            seen.push(c);
        }
        let names: Vec<&str> = params.names().collect();
        let form = resolve_form(family, &names)?;
        let mut canonical = ParamSet::new();
        for &name in form.names() {
            let value = params
                .iter()
                .find(|(n, _)| canonical_name(n) == name)
                .map(|(_, v)| v)
                .or_else(|| form.default_for(name))
                .expect("resolve_form checked presence");
            canonical.insert(name, value);
        }
        let p = Parameterized { family, form, params: canonical };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let fam = self.family.name();
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(MeasureError::param(fam, msg)) };
        for (name, v) in self.params.iter() {
            check(v.is_finite(), &format!("{} must be finite, got {v}", ascii_name(name)))?;
        }
        match self.form {
            Form::MuSigma => check(self.p("σ") > 0.0, "sigma must be positive"),
            Form::RP => {
                check(self.p("r") > 0.0, "r must be positive")?;
                check(self.p("p") > 0.0 && self.p("p") < 1.0, "p must lie in (0, 1)")
            }
            Form::AlphaBeta => {
                check(self.p("α") > 0.0, "alpha must be positive")?;
                check(self.p("β") > 0.0, "beta must be positive")
            }
            Form::Unit => Ok(()),
            Form::P => check((0.0..=1.0).contains(&self.p("p")), "p must lie in [0, 1]"),
            Form::Rate => check(self.p("λ") > 0.0, "lambda must be positive"),
        }
    }

    #[inline]
    fn p(&self, name: &str) -> f64 {
        self.params.get(name).expect("validated parameter")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    /// Data-dependent log-density term; `-inf` off the support.
    pub fn logdensity(&self, x: &Point) -> Result<LogWeight> {
        let x = x.expect_scalar()?;
        let v = match self.form {
            Form::MuSigma => {
                let z = (x - self.p("μ")) / self.p("σ");
                -0.5 * z * z
            }
            Form::RP => match count(x) {
                Some(y) => {
                    let (r, p) = (self.p("r"), self.p("p"));
                    ln_choose_shifted(y, r) + r * libm::log(p) + y * libm::log1p(-p)
                }
                None => f64::NEG_INFINITY,
            },
            Form::AlphaBeta => match count(x) {
                Some(y) => {
                    let (a, b) = (self.p("α"), self.p("β"));
                    ln_choose_shifted(y, a) + a * libm::log(b / (b + 1.0)) - y * libm::log1p(b)
                }
                None => f64::NEG_INFINITY,
            },
            Form::Unit => {
                if (0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Form::P => {
                let p = self.p("p");
                if x == 1.0 {
                    libm::log(p)
                } else if x == 0.0 {
                    libm::log1p(-p)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Form::Rate => match self.family {
                Family::Poisson => match count(x) {
                    Some(y) => y * libm::log(self.p("λ")) - libm::lgamma(y + 1.0),
                    None => f64::NEG_INFINITY,
                },
                _ => {
                    if x >= 0.0 {
                        -self.p("λ") * x
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            },
        };
        Ok(LogWeight::new(v))
    }

    /// Base measure carrying the parameter-dependent and constant terms.
    pub fn base(&self) -> Measure {
        match (self.family, self.form) {
            (Family::Normal, _) => {
                Measure::new(Node::Weighted { logw: self.base_logweight(), base: Measure::lebesgue() })
            }
            (Family::Exponential, _) => {
                Measure::new(Node::Weighted { logw: self.base_logweight(), base: Measure::lebesgue() })
            }
            (Family::Poisson, _) => {
                Measure::new(Node::Weighted { logw: self.base_logweight(), base: Measure::counting() })
            }
            (Family::Uniform01, _) => Measure::lebesgue(),
            (Family::NegativeBinomial, _) | (Family::Bernoulli, _) => Measure::counting(),
        }
    }

    /// The parameter-dependent plus constant term. Every call is recorded by
    /// [`instrument`].
    pub fn base_logweight(&self) -> LogWeight {
        instrument::record_base_weight();
        let w = match self.family {
            Family::Normal => -libm::log(self.p("σ")) - HALF_LN_2PI,
            Family::Exponential => libm::log(self.p("λ")),
            Family::Poisson => -self.p("λ"),
            _ => 0.0,
        };
        LogWeight::new(w)
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        match self.form {
            Form::MuSigma => Point::Real(self.p("μ") + self.p("σ") * rng.standard_normal()),
            Form::RP | Form::AlphaBeta => {
                let (r, p) = self.negbin_rp();
                let rate = rng.gamma(r) * (1.0 - p) / p;
                Point::Int(rng.poisson(rate))
            }
            Form::Unit => Point::Real(rng.uniform()),
            Form::P => Point::Int(i64::from(rng.uniform() < self.p("p"))),
            Form::Rate => match self.family {
                Family::Poisson => Point::Int(rng.poisson(self.p("λ"))),
                _ => Point::Real(rng.exponential(self.p("λ"))),
            },
        }
    }

    fn negbin_rp(&self) -> (f64, f64) {
        match self.form {
            Form::AlphaBeta => {
                let b = self.p("β");
                (self.p("α"), b / (b + 1.0))
            }
            _ => (self.p("r"), self.p("p")),
        }
    }

    /// Mean of the family, used by sampler checks.
    pub fn mean(&self) -> f64 {
        match self.form {
            Form::MuSigma => self.p("μ"),
            Form::RP | Form::AlphaBeta => {
                let (r, p) = self.negbin_rp();
                r * (1.0 - p) / p
            }
            Form::Unit => 0.5,
            Form::P => self.p("p"),
            Form::Rate => match self.family {
                Family::Poisson => self.p("λ"),
                _ => 1.0 / self.p("λ"),
            },
        }
    }

    pub fn variance(&self) -> f64 {
        match self.form {
            Form::MuSigma => self.p("σ").powi(2),
            Form::RP | Form::AlphaBeta => {
                let (r, p) = self.negbin_rp();
                r * (1.0 - p) / (p * p)
            }
            Form::Unit => 1.0 / 12.0,
            Form::P => self.p("p") * (1.0 - self.p("p")),
            Form::Rate => match self.family {
                Family::Poisson => self.p("λ"),
                _ => 1.0 / self.p("λ").powi(2),
            },
        }
    }

    pub(crate) fn structural_cmp(&self, other: &Parameterized) -> Ordering {
        self.family
            .cmp(&other.family)
            .then(self.form.cmp(&other.form))
            .then_with(|| cmp_f64s(&self.params.values(), &other.params.values()))
    }
}

impl fmt::Display for Parameterized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family.name())?;
        for (i, (n, v)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str(")")
    }
}

/// Nonnegative integer value of `x`, if it is one.
fn count(x: f64) -> Option<f64> {
    (x >= 0.0 && x.fract() == 0.0).then_some(x)
}

/// `ln C(y + r - 1, r - 1)` through log-gamma, valid for real `r > 0`.
fn ln_choose_shifted(y: f64, r: f64) -> f64 {
    libm::lgamma(y + r) - libm::lgamma(r) - libm::lgamma(y + 1.0)
}

/// Builds a catalog family, or a Dirac atom for the name `Dirac`
/// (parameter `a`).
pub fn make(name: &str, params: &ParamSet) -> Result<Measure> {
    if name == "Dirac" {
        let names: Vec<&str> = params.names().collect();
        if names != ["a"] {
            return Err(MeasureError::UnknownParameterization { family: "Dirac".into(), names: names.join(",") });
        }
        let a = params.get("a").unwrap();
        if !a.is_finite() {
            return Err(MeasureError::param("Dirac", "atom must be finite"));
        }
        return Ok(Measure::dirac(a));
    }
    let family = Family::from_name(name).ok_or_else(|| MeasureError::UnknownFamily(name.to_string()))?;
    Ok(Measure::new(Node::Parameterized(Parameterized::new(family, params)?)))
}

pub fn make_normal(params: &ParamSet) -> Result<Measure> {
    make("Normal", params)
}

pub fn make_negbinomial(params: &ParamSet) -> Result<Measure> {
    make("NegativeBinomial", params)
}

/// The smaller families: Uniform01, Bernoulli, Poisson, Exponential, Dirac.
pub fn make_simple(kind: &str, params: &ParamSet) -> Result<Measure> {
    match kind {
        "Uniform01" | "Bernoulli" | "Poisson" | "Exponential" | "Dirac" => make(kind, params),
        other => Err(MeasureError::UnknownFamily(other.to_string())),
    }
}

pub fn normal(mu: f64, sigma: f64) -> Result<Measure> {
    make_normal(&ParamSet::new().with("μ", mu).with("σ", sigma))
}

pub fn uniform01() -> Measure {
    make("Uniform01", &ParamSet::new()).expect("no parameters")
}

pub fn bernoulli(p: f64) -> Result<Measure> {
    make("Bernoulli", &ParamSet::new().with("p", p))
}

pub fn poisson(rate: f64) -> Result<Measure> {
    make("Poisson", &ParamSet::new().with("λ", rate))
}

pub fn exponential(rate: f64) -> Result<Measure> {
    make("Exponential", &ParamSet::new().with("λ", rate))
}

pub fn negbinomial_rp(r: f64, p: f64) -> Result<Measure> {
    make_negbinomial(&ParamSet::new().with("r", r).with("p", p))
}

pub fn negbinomial_ab(alpha: f64, beta: f64) -> Result<Measure> {
    make_negbinomial(&ParamSet::new().with("α", alpha).with("β", beta))
}

/// Per-thread count of base-weight evaluations.
pub mod instrument {
    use std::cell::Cell;

    thread_local! {
        static BASE_WEIGHT_EVALS: Cell<u64> = const { Cell::new(0) };
    }

    pub(crate) fn record_base_weight() {
        BASE_WEIGHT_EVALS.with(|c| c.set(c.get() + 1));
    }

    pub fn base_weight_evaluations() -> u64 {
        BASE_WEIGHT_EVALS.with(Cell::get)
    }

    pub fn reset_base_weight_evaluations() {
        BASE_WEIGHT_EVALS.with(|c| c.set(0));
    }
}
