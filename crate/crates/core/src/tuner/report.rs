use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::constraints::system_stats;
use crate::frontend::{ControlPoint, LabeledProgram, PointKind};
use crate::solver::NsbAssignment;

use super::{Method, SolveInfo, VerificationRow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: u32,
    /// What the point labels, e.g. `def x` or `op *`.
    pub label: String,
    /// 1-based source line.
    pub line: u32,
    pub nsb: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub method: Method,
    pub points: Vec<PointReport>,
    /// Σ nsb over all control points.
    pub total_bits: i64,
    pub ilp_total: Option<i64>,
    pub pi_total: Option<i64>,
    pub pi_iterations: Option<usize>,
    pub pi_converged: Option<bool>,
    pub num_vars: usize,
    pub num_constraints: usize,
    pub num_xi_defs: usize,
    /// Points whose range was zero everywhere.
    pub zero_range_points: Vec<u32>,
    /// Wall clock from parsing through solving.
    pub analysis_seconds: Option<f64>,
    pub verification: Vec<VerificationRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("total_bits is {total} but the points sum to {sum}")]
    Total { total: i64, sum: i64 },
}

pub fn point_label(p: &LabeledProgram, cp: ControlPoint) -> String {
    match p.kind(cp) {
        PointKind::Input(v) => format!("input {}", p.var_name(v)),
        PointKind::Def(v) => format!("def {}", p.var_name(v)),
        PointKind::Read(v) => format!("read {}", p.var_name(v)),
        PointKind::Literal => "literal".into(),
        PointKind::Binary(op) => format!("op {}", op.symbol()),
        PointKind::Neg => "op neg".into(),
        PointKind::Sqrt => "op sqrt".into(),
        PointKind::Compare(op) => format!("cmp {}", op.symbol()),
        PointKind::Require(v) => format!("require {}", p.var_name(v)),
    }
}

impl TuningReport {
    pub fn new(
        p: &LabeledProgram,
        a: &NsbAssignment,
        method: Method,
        info: &SolveInfo,
        analysis_seconds: Option<f64>,
    ) -> Self {
        let nsb = a.nsb_by_point(p.num_points());
        let points: Vec<PointReport> = (0..p.num_points())
            .map(|i| {
                let cp = ControlPoint(i as u32);
                PointReport {
                    point: i as u32,
                    label: point_label(p, cp),
                    line: p.spans[i].0,
                    nsb: nsb[i],
                }
            })
            .collect();
        let stats = info.system.as_ref().map(system_stats);
        TuningReport {
            method,
            total_bits: points.iter().map(|r| r.nsb).sum(),
            points,
            ilp_total: info.ilp_total,
            pi_total: info.pi_total,
            pi_iterations: info.pi_iterations,
            pi_converged: info.pi_converged,
            num_vars: stats.map_or(0, |s| s.num_vars),
            num_constraints: stats.map_or(0, |s| s.num_constraints),
            num_xi_defs: stats.map_or(0, |s| s.num_xi_defs),
            zero_range_points: info
                .system
                .as_ref()
                .map(|s| s.zero_range_points.iter().map(|c| c.0).collect())
                .unwrap_or_default(),
            analysis_seconds,
            verification: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a report and checks that its total matches its points.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let r: TuningReport = serde_json::from_str(text)?;
        let sum = r.points.iter().map(|p| p.nsb).sum();
        if sum != r.total_bits {
            return Err(ReportError::Total {
                total: r.total_bits,
                sum,
            });
        }
        Ok(r)
    }

    pub fn verification_passed(&self) -> bool {
        self.verification.iter().all(|r| r.pass)
    }

    /// Human-readable form with aligned columns.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let method = match self.method {
            Method::Ilp => "ilp",
            Method::Pi => "pi",
        };
        writeln!(out, "method            {method}").unwrap();
        writeln!(out, "total bits        {}", self.total_bits).unwrap();
        if let Some(t) = self.ilp_total {
            writeln!(out, "ilp total         {t}").unwrap();
        }
        if let Some(t) = self.pi_total {
            writeln!(out, "pi total          {t}").unwrap();
        }
        if let (Some(n), Some(c)) = (self.pi_iterations, self.pi_converged) {
            writeln!(out, "pi iterations     {n}{}", if c { "" } else { " (cap reached)" }).unwrap();
        }
        writeln!(out, "variables         {}", self.num_vars).unwrap();
        writeln!(out, "constraints       {}", self.num_constraints).unwrap();
        if self.num_xi_defs > 0 {
            writeln!(out, "carry definitions {}", self.num_xi_defs).unwrap();
        }
        if let Some(s) = self.analysis_seconds {
            writeln!(out, "analysis time     {s:.3} s").unwrap();
        }
        if !self.verification.is_empty() {
            out.push('\n');
            out.push_str(&super::verify::rows_text(&self.verification));
        }
        out.push('\n');
        let label_w = self.points.iter().map(|p| p.label.len()).max().unwrap_or(5).max(5);
        writeln!(out, "{:>6}  {:>5}  {:<label_w$}  {:>4}", "point", "line", "label", "nsb").unwrap();
        for p in &self.points {
            writeln!(out, "{:>6}  {:>5}  {:<label_w$}  {:>4}", p.point, p.line, p.label, p.nsb).unwrap();
        }
        out
    }
}
