use std::fmt::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::norms::{error_norms, estimators_h_h2, Norms};
use super::problem::ProblemSpec;
use super::solve::{solve, IgaSolution, SolveError};
use crate::gluing::GluingData;
use crate::mpatch::MultiPatchSpline;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Exact,
    Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyOptions {
    pub levels: usize,
    /// Also compute h-h/2 estimators when an exact solution is known (one extra solve).
    pub estimators: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub level: usize,
    pub k: usize,
    pub h: f64,
    pub dim: usize,
    pub errors: Option<Norms>,
    pub estimators: Option<Norms>,
    pub linear: SolveError,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLedger {
    pub problem: String,
    pub solution: String,
    pub lambda: Option<f64>,
    pub measure: Measure,
    pub rows: Vec<LedgerRow>,
}

fn orders_of(values: &[Option<Norms>]) -> Vec<Option<[f64; 3]>> {
    let mut out = vec![None];
    for w in values.windows(2) {
        out.push(match (w[0], w[1]) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.as_array(), b.as_array());
                Some([0, 1, 2].map(|i| (a[i] / b[i]).log2()))
            }
            _ => None,
        });
    }
    out.truncate(values.len());
    out
}

impl ConvergenceLedger {
    /// The reported measure of each row.
    pub fn primary(&self) -> Vec<Option<Norms>> {
        self.rows
            .iter()
            .map(|r| match self.measure {
                Measure::Exact => r.errors,
                Measure::Estimator => r.estimators,
            })
            .collect()
    }

    /// Observed orders `log2(e_{L-1} / e_L)` of the reported measure, per row.
    pub fn orders(&self) -> Vec<Option<[f64; 3]>> {
        orders_of(&self.primary())
    }

    pub fn estimator_orders(&self) -> Vec<Option<[f64; 3]>> {
        orders_of(&self.rows.iter().map(|r| r.estimators).collect::<Vec<_>>())
    }

    /// Orders of the last level pair, if there is one.
    pub fn final_orders(&self) -> Option<[f64; 3]> {
        self.orders().last().copied().flatten()
    }

    /// CSV with columns `level,h,dim,eL2,eH1,eH2,order_L2,order_H1,order_H2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dim,eL2,eH1,eH2,order_L2,order_H1,order_H2\n");
        for ((row, e), o) in self.rows.iter().zip(self.primary()).zip(self.orders()) {
            let e = e.map(|e| e.as_array());
            let cell = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                row.level,
                row.h,
                row.dim,
                cell(e.map(|e| e[0])),
                cell(e.map(|e| e[1])),
                cell(e.map(|e| e[2])),
                cell(o.map(|o| o[0])),
                cell(o.map(|o| o[1])),
                cell(o.map(|o| o[2])),
            );
        }
        s
    }
}

/// Solves `problem` on `levels` dyadic refinements of `geometry` and records errors
/// (exact solutions) or h-h/2 estimators (one extra level).
pub fn convergence_study(
    problem: &ProblemSpec,
    geometry: &MultiPatchSpline,
    gluing: &[GluingData],
    opts: StudyOptions,
) -> Result<ConvergenceLedger> {
    if opts.levels == 0 {
        return Err(Error::InvalidArgument("a study needs at least one level".into()));
    }
    let exact = problem.solution.exact([0.0; 3]).is_some();
    let need_est = !exact || opts.estimators;
    let solves = opts.levels + need_est as usize;
    let mut levels: Vec<(MultiPatchSpline, IgaSolution, f64)> = Vec::with_capacity(solves);
    for l in 0..solves {
        let t = Instant::now();
        let geo = geometry.refine(l as u32)?;
        let sol = solve(problem, &geo, gluing)?;
        log::info!("level {l}: dim {} in {:.1?}", sol.dim, t.elapsed());
        levels.push((geo, sol, t.elapsed().as_secs_f64()));
    }
    let mut rows = Vec::with_capacity(opts.levels);
    for l in 0..opts.levels {
        let (geo, sol, secs) = &levels[l];
        let errors = if exact {
            Some(error_norms(geo, &sol.coefs, problem.solution.as_ref())?)
        } else {
            None
        };
        let estimators = if need_est {
            let (fg, fs, _) = &levels[l + 1];
            Some(estimators_h_h2(geo, &sol.coefs, fg, &fs.coefs)?)
        } else {
            None
        };
        let k = geo.space.space.inner_knots();
        rows.push(LedgerRow {
            level: l,
            k,
            h: 1.0 / (k + 1) as f64,
            dim: sol.dim,
            errors,
            estimators,
            linear: sol.residual,
            seconds: *secs,
        });
    }
    let (problem_name, lambda) = match problem.kind {
        super::ProblemKind::Dirichlet => ("dirichlet", None),
        super::ProblemKind::Reaction { lambda } => ("reaction", Some(lambda)),
    };
    Ok(ConvergenceLedger {
        problem: problem_name.into(),
        solution: problem.solution.name().into(),
        lambda,
        measure: if exact { Measure::Exact } else { Measure::Estimator },
        rows,
    })
}
