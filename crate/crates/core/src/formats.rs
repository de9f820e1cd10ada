//! Text formats shared by the CLI and the Python bindings.
//!
//! Cubics are read as `"a,b,c,d"` with each entry `"n"` or `"n/m"`, or as a
//! JSON object `{"a":"1","b":"0","c":"0","d":"-1"}`. Exact quantities are
//! written as rational strings so no precision is lost on the way out.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    delta, discriminant, psi_eval, CubicClass, CubicCoeffs, CubicKind, MonomialWeight, PhasePoint,
};
use crate::dynamics::{classify_initial, f_dot, OrbitReport, Termination, Trajectory};
use crate::scalar::{
    parse_rational, parse_rational_list, rational_to_string, ParseError, Rational,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Number(#[from] ParseError),
    #[error("malformed cubic JSON: {0}")]
    Json(String),
    #[error("expected {expected} comma-separated values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("grid counts must be positive integers, got {0:?}")]
    GridCount(String),
}

/// Reads a cubic from either accepted notation.
pub fn parse_cubic(s: &str) -> Result<CubicCoeffs<Rational>, FormatError> {
    let s = s.trim();
    if s.starts_with('{') {
        return parse_cubic_json(s);
    }
    let v = parse_rational_list(s, 4)?;
    let [a, b, c, d]: [Rational; 4] = v.try_into().expect("length checked");
    Ok(CubicCoeffs::new(a, b, c, d))
}

fn parse_cubic_json(s: &str) -> Result<CubicCoeffs<Rational>, FormatError> {
    let map: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(s).map_err(|e| FormatError::Json(e.to_string()))?;
    if let Some(k) = map
        .keys()
        .find(|k| !["a", "b", "c", "d"].contains(&k.as_str()))
    {
        return Err(FormatError::Json(format!("unexpected key {k:?}")));
    }
    let get = |k: &str| -> Result<Rational, FormatError> {
        match map.get(k) {
            Some(serde_json::Value::String(v)) => Ok(parse_rational(v)?),
            // Plain JSON integers are unambiguous; floats are not accepted.
            Some(serde_json::Value::Number(n)) if n.is_i64() => Ok(parse_rational(&n.to_string())?),
            Some(other) => Err(FormatError::Json(format!(
                "{k:?} must be a rational string, got {other}"
            ))),
            None => Err(FormatError::Json(format!("missing key {k:?}"))),
        }
    };
    Ok(CubicCoeffs::new(get("a")?, get("b")?, get("c")?, get("d")?))
}

/// A phase point given either exactly or as floats.
#[derive(Debug, Clone, PartialEq)]
pub enum PointInput {
    Exact(PhasePoint<Rational>),
    Float(PhasePoint<f64>),
}

impl PointInput {
    pub fn to_f64(&self) -> PhasePoint<f64> {
        match self {
            PointInput::Exact(z) => z.to_f64(),
            PointInput::Float(z) => z.clone(),
        }
    }
}

/// Reads `"p,q"`. Both entries rational gives an exact point; otherwise both
/// must parse as finite floats.
pub fn parse_point(s: &str) -> Result<PointInput, FormatError> {
    if let Ok(v) = parse_rational_list(s, 2) {
        let [p, q]: [Rational; 2] = v.try_into().expect("length checked");
        return Ok(PointInput::Exact(PhasePoint::new(p, q)));
    }
    let v = parse_floats(s, 2)?;
    Ok(PointInput::Float(PhasePoint::new(v[0], v[1])))
}

/// Exactly `n` comma-separated finite floats.
pub fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, FormatError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(FormatError::Arity {
            expected: n,
            got: parts.len(),
        });
    }
    parts
        .into_iter()
        .map(|x| match x.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseError::BadNumber(x.to_string()).into()),
        })
        .collect()
}

/// Rectangle `p0,p1,np,q0,q1,nq` of initial points, `np × nq` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub p: (f64, f64, usize),
    pub q: (f64, f64, usize),
}

impl Grid {
    /// Nodes in row-major order: `q` outer, `p` inner.
    pub fn points(&self) -> Vec<PhasePoint<f64>> {
        let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
            if n == 1 {
                return vec![lo];
            }
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        let ps = axis(self.p);
        axis(self.q)
            .into_iter()
            .flat_map(|q| ps.iter().map(move |&p| PhasePoint::new(p, q)))
            .collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, FormatError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(FormatError::Arity {
            expected: 6,
            got: parts.len(),
        });
    }
    let float = |x: &str| parse_floats(x, 1).map(|v| v[0]);
    let count = |x: &str| match x.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(FormatError::GridCount(x.to_string())),
    };
    Ok(Grid {
        p: (float(parts[0])?, float(parts[1])?, count(parts[2])?),
        q: (float(parts[3])?, float(parts[4])?, count(parts[5])?),
    })
}

pub const CSV_HEADER: &str = "t,p,q,psi,F,Fdot";

/// One row per sample, 17 significant digits per value.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in &traj.samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.z.p, s.z.q, s.psi, s.f, s.f_dot
        )?;
    }
    out.flush()
}

pub fn cubic_strings(c: &CubicCoeffs<Rational>) -> [String; 4] {
    c.as_array().map(|x| rational_to_string(&x))
}

/// JSON form of a point: rational strings when exact, numbers otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointJson {
    Exact([String; 2]),
    Float([f64; 2]),
}

impl From<&PointInput> for PointJson {
    fn from(z: &PointInput) -> Self {
        match z {
            PointInput::Exact(z) => {
                PointJson::Exact([rational_to_string(&z.p), rational_to_string(&z.q)])
            }
            PointInput::Float(z) => PointJson::Float([z.p, z.q]),
        }
    }
}

/// Verdict printed by `cubicflow classify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub class: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<PointJson>,
    /// Set when `w` has irrational entries and is printed as floats.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub w_approximate: bool,
    pub delta_disc: String,
}

impl From<&CubicClass<Rational>> for ClassVerdict {
    fn from(class: &CubicClass<Rational>) -> Self {
        let (w, w_approximate) = match &class.kind {
            CubicKind::MonomialComplete(MonomialWeight::Exact(w)) => (
                Some(PointJson::Exact([
                    rational_to_string(&w.p),
                    rational_to_string(&w.q),
                ])),
                false,
            ),
            CubicKind::MonomialComplete(MonomialWeight::Approximate(w)) => {
                (Some(PointJson::Float([w.p, w.q])), true)
            }
            _ => (None, false),
        };
        ClassVerdict {
            class: class.kind.name(),
            w,
            w_approximate,
            delta_disc: rational_to_string(&class.delta_discriminant),
        }
    }
}

/// Initial invariants evaluated without rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactInvariants {
    pub psi0: String,
    pub f0: String,
    pub fdot0: String,
    pub g3: String,
    pub delta_disc: String,
}

pub fn exact_invariants(c: &CubicCoeffs<Rational>, z0: &PhasePoint<Rational>) -> ExactInvariants {
    let f0 = delta(c, z0);
    let fd = f_dot(c, z0);
    let g3 = Rational::from_integer(4.into()) * &f0 * &f0 * &f0 - &fd * &fd;
    ExactInvariants {
        psi0: rational_to_string(&psi_eval(c, z0)),
        f0: rational_to_string(&f0),
        fdot0: rational_to_string(&fd),
        g3: rational_to_string(&g3),
        delta_disc: rational_to_string(&discriminant(c)),
    }
}

/// Summary printed by `cubicflow predict` and, with measurements, by
/// `cubicflow integrate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSummary {
    pub cubic: [String; 4],
    pub z0: PointJson,
    #[serde(flatten)]
    pub report: OrbitReport,
    /// Present when `z0` was given exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactInvariants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_pole_forward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_pole_backward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

impl OrbitSummary {
    /// Initial classification and predicted poles, without integrating.
    pub fn new(c: &CubicCoeffs<Rational>, z0: &PointInput) -> Self {
        let (report, exact) = match z0 {
            PointInput::Exact(z) => (classify_initial(c, z), Some(exact_invariants(c, z))),
            PointInput::Float(z) => (classify_initial(&c.to_f64(), z), None),
        };
        OrbitSummary {
            cubic: cubic_strings(c),
            z0: PointJson::from(z0),
            report,
            exact,
            termination: None,
            measured_pole_forward: None,
            measured_pole_backward: None,
            samples: None,
            csv: None,
        }
    }

    /// Adds the measurements of an integration run.
    pub fn with_run(self, traj: &Trajectory, csv: Option<String>) -> Self {
        let term = traj.termination;
        OrbitSummary {
            termination: Some(term),
            measured_pole_forward: term.forward.blow_up_time(),
            measured_pole_backward: term.backward.blow_up_time(),
            samples: Some(traj.samples.len()),
            csv,
            ..self
        }
    }
}

/// `|measured − predicted| / |predicted|`, when both exist.
pub fn relative_gap(measured: Option<f64>, predicted: Option<f64>) -> Option<f64> {
    match (measured, predicted) {
        (Some(m), Some(p)) if p != 0.0 => Some((m - p).abs() / p.abs()),
        _ => None,
    }
}
