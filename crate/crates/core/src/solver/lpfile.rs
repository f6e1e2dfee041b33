use std::collections::BTreeMap;
use std::fmt::Write;

use crate::constraints::ConstraintSystem;

use super::program::LinearProgram;
use super::{NsbAssignment, Policy, SolveError};

/// CPLEX-LP text for `s`, with carry definitions resolved by `pol` (needed when present).
///
/// Rows on a single variable become bounds; all variables are declared general integers.
pub fn export_lp(s: &ConstraintSystem, pol: Option<&Policy>) -> Result<String, SolveError> {
    let ones = Policy::constant_one(s);
    let pol = match pol {
        Some(p) => p,
        None if s.xi_defs.is_empty() => &ones,
        None => {
            return Err(SolveError::PolicyMismatch {
                got: 0,
                expected: s.xi_defs.len(),
            })
        }
    };
    let lp = LinearProgram::new(s, pol)?;
    let name = |j: usize| s.vars[j].lp_name();
    let mut lower = vec![0i64; lp.num_vars()];
    let mut rows = Vec::new();
    for r in &lp.rows {
        let mut coef: BTreeMap<usize, i64> = BTreeMap::new();
        *coef.entry(r.lhs).or_default() += 1;
        for (c, v) in &r.terms {
            *coef.entry(*v).or_default() -= c;
        }
        coef.retain(|_, c| *c != 0);
        match coef.len() {
            0 => {
                if r.constant > 0 {
                    return Err(SolveError::Infeasible);
                }
            }
            1 if coef.values().next() == Some(&1) => {
                let j = *coef.keys().next().unwrap();
                lower[j] = lower[j].max(r.constant);
            }
            _ => rows.push((coef, r.constant)),
        }
    }

    let mut out = String::from("\\ bit-width minimisation\nMinimize\n min:");
    for j in 0..lp.num_vars() {
        if lp.objective[j] != 0 {
            write!(out, " +{}", name(j)).unwrap();
        }
    }
    out.push_str("\nSubject To\n");
    for (i, (coef, k)) in rows.iter().enumerate() {
        write!(out, " c{}:", i + 1).unwrap();
        for (v, c) in coef {
            match *c {
                1 => write!(out, " +{}", name(*v)),
                -1 => write!(out, " -{}", name(*v)),
                c if c < 0 => write!(out, " -{} {}", -c, name(*v)),
                c => write!(out, " +{} {}", c, name(*v)),
            }
            .unwrap();
        }
        writeln!(out, " >= {k}").unwrap();
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        if lower[j] > 0 {
            writeln!(out, " {} >= {}", name(j), lower[j]).unwrap();
        }
        if let Some(u) = lp.upper[j] {
            writeln!(out, " {} <= {u}", name(j)).unwrap();
        }
    }
    out.push_str("General\n");
    for j in 0..lp.num_vars() {
        writeln!(out, " {}", name(j)).unwrap();
    }
    out.push_str("End\n");
    Ok(out)
}

/// Reads `name = value` (or `name value`) lines produced by an external solver.
///
/// Variables the text does not mention are zero; unknown names are errors.
pub fn parse_solution(text: &str, s: &ConstraintSystem) -> Result<NsbAssignment, SolveError> {
    let index: BTreeMap<String, usize> = (0..s.num_vars()).map(|j| (s.vars[j].lp_name(), j)).collect();
    let mut values = vec![0i64; s.num_vars()];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut parts = line.split(|c: char| c == '=' || c.is_whitespace()).filter(|p| !p.is_empty());
        let (Some(n), Some(v)) = (parts.next(), parts.next()) else {
            return Err(SolveError::Import(format!("malformed line `{line}`")));
        };
        let j = *index
            .get(n)
            .ok_or_else(|| SolveError::Import(format!("unknown variable `{n}`")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| SolveError::Import(format!("bad value `{v}` for `{n}`")))?;
        if (x - x.round()).abs() > 1e-6 {
            return Err(SolveError::Import(format!("`{n}` = {v} is not an integer")));
        }
        values[j] = x.round() as i64;
    }
    Ok(NsbAssignment {
        vars: s.vars.clone(),
        values,
        optimal: false,
    })
}
