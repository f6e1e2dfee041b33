use crate::frontend::{ControlPoint, LabeledProgram};
use crate::numerics::{ufp_or_sentinel, MpFloat, NumericConfig, Scalar};

use super::{execute, Bindings, EvalConfig, EvalError, RangeRecorder, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct UfpEntry {
    pub ufp: i64,
    pub max_abs: MpFloat,
    pub min_abs: MpFloat,
    pub visits: u64,
}

/// Observed magnitude of every control point.
#[derive(Debug, Clone, PartialEq)]
pub struct UfpMap {
    entries: Vec<Option<UfpEntry>>,
    numeric: NumericConfig,
}

impl UfpMap {
    pub fn empty(points: usize, numeric: NumericConfig) -> Self {
        UfpMap {
            entries: vec![None; points],
            numeric,
        }
    }

    /// A map with prescribed ufps and no other information.
    pub fn from_ufps(
        points: usize,
        ufps: impl IntoIterator<Item = (ControlPoint, i64)>,
        numeric: NumericConfig,
    ) -> Self {
        let mut m = UfpMap::empty(points, numeric);
        for (p, u) in ufps {
            let v = MpFloat::from_parts(false, 1u32.into(), u, 1);
            m.entries[p.index()] = Some(UfpEntry {
                ufp: u,
                max_abs: v.clone(),
                min_abs: v,
                visits: 1,
            });
        }
        m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: ControlPoint) -> Option<&UfpEntry> {
        self.entries.get(p.index()).and_then(Option::as_ref)
    }

    pub fn ufp(&self, p: ControlPoint) -> Option<i64> {
        self.get(p).map(|e| e.ufp)
    }

    pub fn numeric(&self) -> NumericConfig {
        self.numeric
    }

    pub fn unvisited(&self) -> Vec<ControlPoint> {
        self.points_where(|e| e.is_none())
    }

    /// Points whose observed value was exactly zero at every visit.
    pub fn zero_points(&self) -> Vec<ControlPoint> {
        self.points_where(|e| e.is_some_and(|e| e.max_abs.is_zero()))
    }

    fn points_where(&self, f: impl Fn(Option<&UfpEntry>) -> bool) -> Vec<ControlPoint> {
        (0..self.entries.len())
            .filter(|&i| f(self.entries[i].as_ref()))
            .map(|i| ControlPoint(i as u32))
            .collect()
    }

    /// Pointwise union of the observations of two runs.
    pub fn merge(&mut self, other: &UfpMap) {
        for (mine, theirs) in self.entries.iter_mut().zip(&other.entries) {
            match (mine.as_mut(), theirs) {
                (_, None) => {}
                (None, Some(t)) => *mine = Some(t.clone()),
                (Some(m), Some(t)) => {
                    if t.max_abs > m.max_abs {
                        m.max_abs = t.max_abs.clone();
                    }
                    if t.min_abs < m.min_abs {
                        m.min_abs = t.min_abs.clone();
                    }
                    m.visits += t.visits;
                    m.ufp = ufp_or_sentinel(&m.max_abs, &self.numeric);
                }
            }
        }
    }
}

fn run_map<S: Scalar>(
    p: &LabeledProgram,
    widths: &[u32],
    inputs: &Bindings,
    cfg: &EvalConfig,
    numeric: NumericConfig,
) -> Result<(Trace<S>, UfpMap), EvalError> {
    let mut rec = RangeRecorder::<S>::new(p.num_points());
    let trace = execute(p, widths, inputs, cfg, Some(&mut rec))?;
    let mut run = UfpMap::empty(p.num_points(), numeric);
    for i in 0..p.num_points() {
        if let (Some(hi), Some(lo)) = (&rec.max_abs[i], &rec.min_abs[i]) {
            let max_abs = hi.to_mp();
            run.entries[i] = Some(UfpEntry {
                ufp: ufp_or_sentinel(&max_abs, &numeric),
                max_abs,
                min_abs: lo.to_mp(),
                visits: trace.visits[i],
            });
        }
    }
    Ok((trace, run))
}

/// Range analysis executed in the scalar `S` at uniform width `pref`.
///
/// The map is the union over all `runs` (a closed program needs one empty binding set).
pub fn analyze_ranges_with<S: Scalar>(
    p: &LabeledProgram,
    pref: u32,
    runs: &[Bindings],
    cfg: &EvalConfig,
    numeric: NumericConfig,
) -> Result<UfpMap, EvalError> {
    let widths = vec![pref; p.num_points()];
    let mut map = UfpMap::empty(p.num_points(), numeric);
    for inputs in runs {
        let (_, run) = run_map::<S>(p, &widths, inputs, cfg, numeric)?;
        map.merge(&run);
    }
    Ok(map)
}

/// One multi-precision run at `pref` bits giving both the reference trace and its ranges.
pub fn reference_with_ranges(
    p: &LabeledProgram,
    pref: u32,
    inputs: &Bindings,
    cfg: &EvalConfig,
) -> Result<(Trace<MpFloat>, UfpMap), EvalError> {
    run_map::<MpFloat>(p, &vec![pref; p.num_points()], inputs, cfg, NumericConfig::default())
}

/// Range analysis in multi-precision arithmetic.
pub fn analyze_ranges(p: &LabeledProgram, pref: u32, runs: &[Bindings], cfg: &EvalConfig) -> Result<UfpMap, EvalError> {
    analyze_ranges_with::<MpFloat>(p, pref, runs, cfg, NumericConfig::default())
}
