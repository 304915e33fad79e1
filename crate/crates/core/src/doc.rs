//! JSON documents for measure expressions.
//!
//! Every node is an object with a single key naming its kind:
//!
//! ```json
//! {"Superpose": [
//!   {"Scale": {"logw": -0.6931471805599453, "of": {"Dirac": {"a": 0}}}},
//!   {"Scale": {"logw": -0.6931471805599453, "of": {"Normal": {"mu": 0, "sigma": 1}}}}
//! ]}
//! ```
//!
//! Kernels are `{"family": NAME, "maps": {PARAM: MAP}}` where each map is
//! `"identity"`, `"sqrt"`, `"const:<v>"` or `"affine:<a>:<b>"`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::affine::{AffineMap, AffineMode, Factor};
use crate::catalog::{self, ParamSet};
use crate::combinators::{self, Likelihood};
use crate::error::MeasureError;
use crate::kernels::{self, Kernel, ParamMap};
use crate::logweight::{LogWeight, WeightClass};
use crate::measure::{Measure, Node};
use crate::point::Point;

/// A document error, located by a JSON path such as `$.Superpose[1].Normal`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct DocError {
    pub path: String,
    pub message: String,
    /// The underlying construction error, when there is one.
    pub source_error: Option<MeasureError>,
}

fn err(path: &str, message: impl Into<String>) -> DocError {
    DocError { path: path.to_string(), message: message.into(), source_error: None }
}

fn wrap(path: &str) -> impl Fn(MeasureError) -> DocError + '_ {
    move |e| DocError { path: path.to_string(), message: e.to_string(), source_error: Some(e) }
}

type DocResult<T> = Result<T, DocError>;

/// Parses a measure from JSON text.
pub fn parse_str(text: &str) -> DocResult<Measure> {
    let v: Value = serde_json::from_str(text).map_err(|e| err("$", format!("invalid JSON: {e}")))?;
    parse_expr(&v)
}

pub fn parse_expr(doc: &Value) -> DocResult<Measure> {
    expr(doc, "$")
}

/// Parses a point: a number or a (nested) array of numbers.
pub fn parse_point(doc: &Value) -> DocResult<Point> {
    point(doc, "$")
}

pub fn parse_point_str(text: &str) -> DocResult<Point> {
    let v: Value = serde_json::from_str(text).map_err(|e| err("$", format!("invalid JSON point: {e}")))?;
    parse_point(&v)
}

fn single_key<'a>(doc: &'a Value, path: &str) -> DocResult<(&'a str, &'a Value)> {
    match doc.as_object() {
        Some(obj) if obj.len() == 1 => {
            let (k, v) = obj.iter().next().unwrap();
            Ok((k.as_str(), v))
        }
        Some(obj) => Err(err(path, format!("expected one node kind, found {} keys", obj.len()))),
        None => Err(err(path, "expected an object naming a node kind")),
    }
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> DocResult<&'a Map<String, Value>> {
    let obj = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(err(path, format!("unknown key '{k}' (expected one of {})", allowed.join(", "))));
    }
    Ok(obj)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> DocResult<&'a Value> {
    obj.get(key).ok_or_else(|| err(path, format!("missing key '{key}'")))
}

fn array<'a>(v: &'a Value, path: &str) -> DocResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn number(v: &Value, path: &str) -> DocResult<f64> {
    v.as_f64().ok_or_else(|| err(path, "expected a number"))
}

fn point(v: &Value, path: &str) -> DocResult<Point> {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Point::Int(i)),
            None => Ok(Point::Real(n.as_f64().unwrap())),
        },
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, x)| point(x, &format!("{path}[{i}]")))
            .collect::<DocResult<Vec<_>>>()
            .map(Point::Tuple),
        _ => Err(err(path, "expected a number or an array")),
    }
}

fn expr(doc: &Value, path: &str) -> DocResult<Measure> {
    let (kind, body) = single_key(doc, path)?;
    let path = &format!("{path}.{kind}");
    match kind {
        "Lebesgue" | "Counting" => {
            object(body, path, &[])?;
            Ok(if kind == "Lebesgue" { Measure::lebesgue() } else { Measure::counting() })
        }
        "Dirac" => {
            let obj = object(body, path, &["a"])?;
            Ok(Measure::dirac(point(field(obj, "a", path)?, &format!("{path}.a"))?))
        }
        "Scale" => {
            let obj = object(body, path, &["logw", "of"])?;
            let logw = match field(obj, "logw", path)? {
                Value::String(s) if s == "-inf" => LogWeight::NEG_INF,
                v => LogWeight::new(number(v, &format!("{path}.logw"))?),
            };
            let of = expr(field(obj, "of", path)?, &format!("{path}.of"))?;
            combinators::scale(logw, of).map_err(wrap(path))
        }
        "Product" => {
            let parts = children(body, path)?;
            combinators::product_all(parts).map_err(wrap(path))
        }
        "Superpose" => {
            let parts = children(body, path)?;
            combinators::superpose_all(parts).map_err(wrap(path))
        }
        "Power" => {
            let obj = object(body, path, &["of", "shape"])?;
            let of = expr(field(obj, "of", path)?, &format!("{path}.of"))?;
            let shape_path = format!("{path}.shape");
            let shape = array(field(obj, "shape", path)?, &shape_path)?
                .iter()
                .map(|d| d.as_u64().map(|d| d as usize).ok_or_else(|| err(&shape_path, "expected positive integers")))
                .collect::<DocResult<Vec<_>>>()?;
            combinators::power(of, &shape).map_err(wrap(path))
        }
        "Pushforward" => pushforward(body, path),
        "Chain" => {
            let obj = object(body, path, &["initial", "step"])?;
            let initial = expr(field(obj, "initial", path)?, &format!("{path}.initial"))?;
            let step = kernel(field(obj, "step", path)?, &format!("{path}.step"))?;
            kernels::chain(step, initial).map(|c| c.measure()).map_err(wrap(path))
        }
        "Bind" => {
            let obj = object(body, path, &["of", "kernel"])?;
            let of = expr(field(obj, "of", path)?, &format!("{path}.of"))?;
            let k = kernel(field(obj, "kernel", path)?, &format!("{path}.kernel"))?;
            combinators::bind(of, k).map_err(wrap(path))
        }
        "For" => {
            let obj = object(body, path, &["indices", "kernel"])?;
            let ipath = format!("{path}.indices");
            let indices = array(field(obj, "indices", path)?, &ipath)?
                .iter()
                .enumerate()
                .map(|(i, v)| point(v, &format!("{ipath}[{i}]")))
                .collect::<DocResult<Vec<_>>>()?;
            let k = kernel(field(obj, "kernel", path)?, &format!("{path}.kernel"))?;
            combinators::for_product(indices, k).map_err(wrap(path))
        }
        "PointwiseProduct" => {
            let obj = object(body, path, &["prior", "likelihood"])?;
            let prior = expr(field(obj, "prior", path)?, &format!("{path}.prior"))?;
            let lpath = format!("{path}.likelihood");
            let l = object(field(obj, "likelihood", path)?, &lpath, &["kernel", "x"])?;
            let k = kernel(field(l, "kernel", &lpath)?, &format!("{lpath}.kernel"))?;
            let x = point(field(l, "x", &lpath)?, &format!("{lpath}.x"))?;
            combinators::pointwise_product(prior, Likelihood::new(k, x)).map_err(wrap(path))
        }
        family => {
            let obj = body.as_object().ok_or_else(|| err(path, "expected an object of parameters"))?;
            let mut params = ParamSet::new();
            for (name, v) in obj {
                params.insert(name, number(v, &format!("{path}.{name}"))?);
            }
            catalog::make(family, &params).map_err(wrap(path))
        }
    }
}

fn children(body: &Value, path: &str) -> DocResult<Vec<Measure>> {
    array(body, path)?.iter().enumerate().map(|(i, c)| expr(c, &format!("{path}[{i}]"))).collect()
}

fn factor(v: &Value, path: &str) -> DocResult<Factor> {
    match v {
        Value::Number(_) => Ok(Factor::Scalar(number(v, path)?)),
        Value::Array(rows) => {
            let rows = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let rp = format!("{path}[{i}]");
                    array(r, &rp)?.iter().map(|x| number(x, &rp)).collect::<DocResult<Vec<_>>>()
                })
                .collect::<DocResult<Vec<_>>>()?;
            Factor::lower(&rows).map_err(wrap(path))
        }
        _ => Err(err(path, "expected a number or a square matrix")),
    }
}

fn offset(v: &Value, path: &str) -> DocResult<Vec<f64>> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| number(x, path)).collect(),
        _ => Ok(vec![number(v, path)?]),
    }
}

fn pushforward(body: &Value, path: &str) -> DocResult<Measure> {
    let mode = body.get("mode").and_then(Value::as_str);
    let (mode, fkey, okey) = match mode {
        Some("Forward") => (AffineMode::Forward, "sigma", "x0"),
        Some("Inverse") => (AffineMode::Inverse, "psi", "mu0"),
        _ => return Err(err(path, "mode must be \"Forward\" or \"Inverse\"")),
    };
    let obj = object(body, path, &["mode", fkey, okey, "of"])?;
    let f = factor(field(obj, fkey, path)?, &format!("{path}.{fkey}"))?;
    let o = offset(field(obj, okey, path)?, &format!("{path}.{okey}"))?;
    let of = expr(field(obj, "of", path)?, &format!("{path}.of"))?;
    let map = AffineMap::new(mode, f, o).map_err(wrap(path))?;
    combinators::pushforward(map, of).map_err(wrap(path))
}

fn param_map(s: &str, path: &str) -> DocResult<ParamMap> {
    let num = |t: &str| t.parse::<f64>().map_err(|_| err(path, format!("bad number '{t}' in map '{s}'")));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["identity"] => Ok(ParamMap::Identity),
        ["sqrt"] => Ok(ParamMap::Sqrt),
        ["const", v] => Ok(ParamMap::Const(num(v)?)),
        ["affine", a, b] => Ok(ParamMap::Affine(num(a)?, num(b)?)),
        _ => Err(err(path, format!("unknown map '{s}' (expected identity, sqrt, const:<v> or affine:<a>:<b>)"))),
    }
}

fn kernel(v: &Value, path: &str) -> DocResult<Kernel> {
    let obj = object(v, path, &["family", "maps"])?;
    let family = field(obj, "family", path)?.as_str().ok_or_else(|| err(path, "family must be a string"))?;
    let mpath = format!("{path}.maps");
    let maps = field(obj, "maps", path)?.as_object().ok_or_else(|| err(&mpath, "expected an object"))?;
    let maps = maps
        .iter()
        .map(|(name, m)| {
            let p = format!("{mpath}.{name}");
            let s = m.as_str().ok_or_else(|| err(&p, "expected a map string"))?;
            Ok((name.as_str(), param_map(s, &p)?))
        })
        .collect::<DocResult<Vec<_>>>()?;
    kernels::make_kernel(family, maps).map_err(wrap(path))
}

/// Error for values with no document form (opaque functions).
fn opaque(what: &str) -> DocError {
    err("$", format!("{what} has no document form"))
}

/// Prints a measure as a document. Opaque kernels and densities, and
/// internal nodes such as chains with function kernels, are rejected.
pub fn to_json(m: &Measure) -> DocResult<Value> {
    Ok(match m.node() {
        Node::Lebesgue => json!({"Lebesgue": {}}),
        Node::Counting => json!({"Counting": {}}),
        Node::Dirac(a) => json!({"Dirac": {"a": point_to_json(a)}}),
        Node::Weighted { logw, base } => {
            let w = match logw.class() {
                WeightClass::NegInf => json!("-inf"),
                WeightClass::Finite => json!(logw.to_f64()),
                _ => return Err(opaque("a non-finite weight")),
            };
            json!({"Scale": {"logw": w, "of": to_json(base)?}})
        }
        Node::Parameterized(p) => {
            let params: Map<String, Value> =
                p.params().iter().map(|(n, v)| (catalog::ascii_name(n).to_string(), json!(v))).collect();
            json!({ p.family().name(): params })
        }
        Node::Product(cs) => json!({"Product": cs.iter().map(to_json).collect::<DocResult<Vec<_>>>()?}),
        Node::Power { of, shape } => json!({"Power": {"of": to_json(of)?, "shape": shape}}),
        Node::ForProduct { indices, kernel } => json!({"For": {
            "indices": indices.iter().map(point_to_json).collect::<Vec<_>>(),
            "kernel": kernel_json(kernel)?,
        }}),
        Node::Bind { of, kernel } => json!({"Bind": {"of": to_json(of)?, "kernel": kernel_json(kernel)?}}),
        Node::Superposition(a, b) => json!({"Superpose": [to_json(a)?, to_json(b)?]}),
        Node::PointwiseProduct { prior, likelihood } => json!({"PointwiseProduct": {
            "prior": to_json(prior)?,
            "likelihood": {"kernel": kernel_json(likelihood.kernel())?, "x": point_to_json(likelihood.data())},
        }}),
        Node::Pushforward { map, of } => {
            let factor = match map.factor() {
                Factor::Scalar(v) => json!(v),
                f => json!(f.rows()),
            };
            let offset = match map.factor().dim() {
                None => json!(map.offset()[0]),
                Some(_) => json!(map.offset()),
            };
            let (fk, ok, mode) = match map.mode() {
                AffineMode::Forward => ("sigma", "x0", "Forward"),
                AffineMode::Inverse => ("psi", "mu0", "Inverse"),
            };
            json!({"Pushforward": {"mode": mode, fk: factor, ok: offset, "of": to_json(of)?}})
        }
        Node::Chain(spec) => json!({"Chain": {
            "initial": to_json(spec.initial())?,
            "step": kernel_json(spec.step())?,
        }}),
        Node::Integral { .. } => return Err(opaque("an integral node")),
    })
}

pub fn to_string(m: &Measure) -> DocResult<String> {
    Ok(to_json(m)?.to_string())
}

/// JSON form of a point: numbers and nested arrays.
pub fn point_to_json(p: &Point) -> Value {
    match p {
        Point::Int(i) => json!(i),
        Point::Real(v) => json!(v),
        Point::Tuple(items) => Value::Array(items.iter().map(point_to_json).collect()),
    }
}

fn kernel_json(k: &Kernel) -> DocResult<Value> {
    match k {
        Kernel::Family { target, maps } => {
            let mut out = Map::new();
            for (name, m) in maps {
                let s = match m {
                    ParamMap::Identity => "identity".to_string(),
                    ParamMap::Sqrt => "sqrt".to_string(),
                    ParamMap::Const(v) => format!("const:{v:?}"),
                    ParamMap::Affine(a, b) => format!("affine:{a:?}:{b:?}"),
                    ParamMap::Fn(_) => return Err(opaque("a function parameter map")),
                };
                out.insert(catalog::ascii_name(name).to_string(), json!(s));
            }
            Ok(json!({"family": target, "maps": out}))
        }
        Kernel::Fn { .. } => Err(opaque("a function kernel")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_families() {
        assert_eq!(parse_str(r#"{"Normal":{"mu":0,"sigma":1}}"#).unwrap(), catalog::normal(0.0, 1.0).unwrap());
        let nb = parse_str(r#"{"NegativeBinomial":{"alpha":10,"beta":3}}"#).unwrap();
        assert_eq!(nb, catalog::negbinomial_ab(10.0, 3.0).unwrap());
        let e = parse_str(r#"{"Normal":{"mu":0,"tau":1}}"#).unwrap_err();
        assert!(e.to_string().contains("unknown parameterization {mu,tau}"), "{e}");
    }

    #[test]
    fn errors_name_the_path() {
        let e = parse_str(r#"{"Superpose":[{"Lebesgue":{}},{"Normal":{"sigma":-1}}]}"#).unwrap_err();
        assert_eq!(e.path, "$.Superpose[1].Normal");
        let e = parse_str(r#"{"Scale":{"logw":0,"of":{"Lebesgue":{}},"extra":1}}"#).unwrap_err();
        assert!(e.message.contains("unknown key 'extra'"));
        assert!(parse_str(r#"{"Lebesgue":{},"Counting":{}}"#).is_err());
        assert!(parse_str(r#"{"Gamma":{"k":1}}"#).is_err());
    }

    #[test]
    fn round_trips() {
        for text in [
            r#"{"Superpose":[{"Scale":{"logw":-0.6931471805599453,"of":{"Dirac":{"a":0}}}},{"Scale":{"logw":-0.6931471805599453,"of":{"Normal":{"mu":0,"sigma":1}}}}]}"#,
            r#"{"Pushforward":{"mode":"Forward","sigma":2,"x0":1,"of":{"Normal":{}}}}"#,
            r#"{"Pushforward":{"mode":"Inverse","psi":[[2,0],[1,3]],"mu0":[0,1],"of":{"Power":{"of":{"Normal":{}},"shape":[2]}}}}"#,
            r#"{"Chain":{"initial":{"Normal":{"mu":0}},"step":{"family":"Normal","maps":{"mu":"identity","sigma":"const:1"}}}}"#,
            r#"{"Scale":{"logw":"-inf","of":{"Uniform01":{}}}}"#,
        ] {
            let m = parse_str(text).unwrap();
            let printed = to_string(&m).unwrap();
            assert_eq!(parse_str(&printed).unwrap(), m, "{printed}");
        }
    }

    #[test]
    fn points() {
        assert_eq!(parse_point_str("[1, 2.5]").unwrap(), Point::Tuple(vec![Point::Int(1), Point::Real(2.5)]));
        assert!(parse_point_str("\"x\"").is_err());
    }
}
