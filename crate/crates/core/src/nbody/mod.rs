//! Five-body Euler simulation written in the input language, and the distance experiments run on it.

mod experiment;

pub use experiment::{run_experiment, CellResult, ExperimentError, ExperimentPlan, ExperimentSummary};

use std::fmt::Write;

const STANDARD: &str = include_str!("../../data/nbody_constants.txt");

/// Initial state of one body, as decimal literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodySpec {
    pub name: String,
    pub position: [String; 3],
    /// Before scaling by `days_per_year`.
    pub velocity: [String; 3],
    /// Fraction of `solar_mass`.
    pub mass: String,
}

/// Bodies plus the two scaling constants. The first body never moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NbodyConstants {
    pub days_per_year: String,
    pub solar_mass: String,
    pub bodies: Vec<BodySpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NbodyError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("body `{body}` has no `{field}`")]
    Missing { body: String, field: String },
    #[error("`{0}` is not defined")]
    MissingGlobal(String),
    #[error("need at least two bodies, got {0}")]
    TooFewBodies(usize),
    #[error("`{0}` is not a usable body name")]
    BadName(String),
}

const FIELDS: [&str; 7] = ["x", "y", "z", "vx", "vy", "vz", "mass"];

impl NbodyConstants {
    /// The shipped Sun, Jupiter, Saturn, Uranus, Neptune state.
    pub fn standard() -> Self {
        Self::parse(STANDARD).expect("shipped constants parse")
    }

    /// Reads the `key = value` format of the shipped data file.
    pub fn parse(text: &str) -> Result<Self, NbodyError> {
        let mut globals = std::collections::HashMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut fields: std::collections::HashMap<(String, String), String> = Default::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| NbodyError::Syntax {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim().to_string());
            if value.is_empty() {
                return Err(NbodyError::Syntax {
                    line: i + 1,
                    msg: format!("`{key}` has no value"),
                });
            }
            if key == "body" {
                if !value.chars().all(|c| c.is_ascii_alphanumeric()) || value.is_empty() {
                    return Err(NbodyError::BadName(value));
                }
                order.push(value);
            } else if let Some((body, field)) = key.split_once('.') {
                fields.insert((body.to_ascii_lowercase(), field.to_string()), value);
            } else {
                globals.insert(key.to_string(), value);
            }
        }
        let global = |k: &str| globals.get(k).cloned().ok_or_else(|| NbodyError::MissingGlobal(k.into()));
        let mut bodies = Vec::new();
        for name in order {
            let mut get = |field: &str| {
                fields
                    .remove(&(name.to_ascii_lowercase(), field.to_string()))
                    .ok_or_else(|| NbodyError::Missing {
                        body: name.clone(),
                        field: field.into(),
                    })
            };
            let v: Vec<String> = FIELDS.iter().map(|f| get(f)).collect::<Result<_, _>>()?;
            bodies.push(BodySpec {
                name: name.clone(),
                position: [v[0].clone(), v[1].clone(), v[2].clone()],
                velocity: [v[3].clone(), v[4].clone(), v[5].clone()],
                mass: v[6].clone(),
            });
        }
        Ok(NbodyConstants {
            days_per_year: global("days_per_year")?,
            solar_mass: global("solar_mass")?,
            bodies,
        })
    }

    /// Names of the moving bodies.
    pub fn planets(&self) -> Vec<&str> {
        self.bodies.iter().skip(1).map(|b| b.name.as_str()).collect()
    }
}

/// Loop bound for a horizon in years, with time counted in days. Half a step is taken off
/// so the accumulated time is never compared with a value it may round onto.
pub fn t_max_for_years(years: f64, dt: f64) -> f64 {
    let t = years * 365.24 - dt / 2.0;
    // drop representation noise such as 3652.3950000000004
    format!("{t:.9}").parse().unwrap()
}

/// Names of the position variables of `body`.
pub fn position_vars(body: &str) -> [String; 3] {
    ["x", "y", "z"].map(|c| format!("{c}{body}"))
}

fn literal(v: f64) -> String {
    // `{:?}` keeps a decimal point or exponent, so the text always lexes as a number
    format!("{v:?}")
}

/// Generates the simulation program: initial state, a `while (t < t_max)` Euler loop with all
/// pairwise interactions, and `require_nsb(p, req)` on every position of a moving body.
pub fn build_nbody_program(c: &NbodyConstants, dt: f64, t_max: f64, req: u32) -> Result<String, NbodyError> {
    if c.bodies.len() < 2 {
        return Err(NbodyError::TooFewBodies(c.bodies.len()));
    }
    let b = &c.bodies;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "days_per_year = {};", c.days_per_year).unwrap();
    writeln!(w, "solar_mass = {};", c.solar_mass).unwrap();
    writeln!(w, "dt = {};", literal(dt)).unwrap();
    writeln!(w, "t = 0.0;").unwrap();
    writeln!(w, "t_max = {};", literal(t_max)).unwrap();
    for body in b {
        let n = &body.name;
        for (axis, v) in ["x", "y", "z"].iter().zip(&body.position) {
            writeln!(w, "{axis}{n} = {v};").unwrap();
        }
        for (axis, v) in ["vx", "vy", "vz"].iter().zip(&body.velocity) {
            writeln!(w, "{axis}{n} = {v} * days_per_year;").unwrap();
        }
        writeln!(w, "mass{n} = {} * solar_mass;", body.mass).unwrap();
    }
    writeln!(w, "while (t < t_max) {{").unwrap();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let (bi, bj) = (&b[i].name, &b[j].name);
            for axis in ["x", "y", "z"] {
                writeln!(w, "  d{axis} = {axis}{bi} - {axis}{bj};").unwrap();
            }
            writeln!(w, "  distance = sqrt(dx * dx + dy * dy + dz * dz);").unwrap();
            writeln!(w, "  mag = dt / (distance * distance * distance);").unwrap();
            if i != 0 {
                for axis in ["x", "y", "z"] {
                    writeln!(w, "  v{axis}{bi} = v{axis}{bi} - d{axis} * mass{bj} * mag;").unwrap();
                }
            }
            for axis in ["x", "y", "z"] {
                writeln!(w, "  v{axis}{bj} = v{axis}{bj} + d{axis} * mass{bi} * mag;").unwrap();
            }
        }
    }
    for body in &b[1..] {
        let n = &body.name;
        for axis in ["x", "y", "z"] {
            writeln!(w, "  {axis}{n} = {axis}{n} + dt * v{axis}{n};").unwrap();
        }
    }
    writeln!(w, "  t = t + dt;").unwrap();
    writeln!(w, "}}").unwrap();
    for body in &b[1..] {
        for v in position_vars(&body.name) {
            writeln!(w, "require_nsb({v}, {req});").unwrap();
        }
    }
    Ok(out)
}

/// Kinetic plus potential energy of the moving bodies, the first body being a fixed
/// attractor. Values are read from `get(name)` in AU, AU/year and solar-mass units.
pub fn energy(c: &NbodyConstants, get: impl Fn(&str) -> f64) -> f64 {
    let names: Vec<&str> = c.bodies.iter().map(|b| b.name.as_str()).collect();
    let pos = |n: &str| position_vars(n).map(|v| get(&v));
    let mut e = 0.0;
    for (i, n) in names.iter().enumerate() {
        let m = get(&format!("mass{n}"));
        if i > 0 {
            let v = ["vx", "vy", "vz"].map(|a| get(&format!("{a}{n}")));
            e += 0.5 * m * v.iter().map(|x| x * x).sum::<f64>();
        }
        for o in &names[i + 1..] {
            let (p, q) = (pos(n), pos(o));
            let r = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt();
            e -= m * get(&format!("mass{o}")) / r;
        }
    }
    e
}
