//! AS-G1 construction: a G1 multi-patch surface is approximated in `S^{p,r}_k` by a
//! spline surface that satisfies the AS-G1 conditions for linear gluing data estimated
//! from the input.
//!
//! The local method solves small problems in three stages (vertices, interfaces,
//! patches), each stage in parallel; the global method solves one problem.

mod check;
mod dofs;
mod stages;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use check::{check_asg1, CheckReport, InterfaceCheck};
pub use dofs::{DofMap, StageRecord};
pub use stages::{edge_form, Owner};

use crate::gluing::{estimate_all, estimator_by_name, GluingData};
use crate::mpatch::{relative_errors, MultiPatchSpline, RelativeErrors, SurfaceSource};
use crate::spline::{SpaceParams, SplineSpace1D, TensorSpace};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};
use dofs::StageBuilder;
use stages::Context;

/// Target space and options of a construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub p: usize,
    pub r: usize,
    pub k: usize,
    /// Registered gluing estimator name.
    pub estimator: String,
}

impl ConstructionParams {
    /// Checks `p >= 3`, `1 <= r <= p - 2` and `k (p - r - 1) >= 5 - p`.
    pub fn new(p: usize, r: usize, k: usize) -> Result<Self> {
        if p < 3 {
            return Err(Error::Admissibility(format!("degree {p} below 3")));
        }
        if r < 1 || r + 2 > p {
            return Err(Error::Admissibility(format!(
                "regularity {r} outside [1, {}]",
                p - 2
            )));
        }
        if k * (p - r - 1) + p < 5 {
            return Err(Error::Admissibility(format!(
                "k = {k} too small: need k >= (5 - p) / (p - r - 1)"
            )));
        }
        Ok(ConstructionParams {
            p,
            r,
            k,
            estimator: "surface".into(),
        })
    }

    pub fn with_estimator(mut self, name: &str) -> Self {
        self.estimator = name.into();
        self
    }

    /// `1 / (p (k + 1))`.
    pub fn sigma(&self) -> f64 {
        1.0 / (self.p * (self.k + 1)) as f64
    }

    pub fn space(&self) -> Result<SplineSpace1D> {
        SplineSpace1D::new(self.p, self.r, self.k)
    }

    /// For spline inputs `S^{p~,r~}_{k~}`: `p >= p~`, the input breakpoints are target
    /// breakpoints (`k~ + 1` divides `k + 1`) and, when the input has inner knots,
    /// `r <= r~`.
    pub fn check_source(&self, source: &dyn SurfaceSource) -> Result<()> {
        let Some(s) = source.spline_params() else {
            return Ok(());
        };
        if self.p < s.p {
            return Err(Error::Admissibility(format!(
                "target degree {} below input degree {}",
                self.p, s.p
            )));
        }
        if (self.k + 1) % (s.k + 1) != 0 {
            return Err(Error::Admissibility(format!(
                "k + 1 = {} is not a multiple of the input's k + 1 = {}",
                self.k + 1,
                s.k + 1
            )));
        }
        if s.k > 0 && self.r > s.r {
            return Err(Error::Admissibility(format!(
                "target regularity {} above input regularity {}",
                self.r, s.r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub gluing_s: f64,
    pub vertex_s: f64,
    pub interface_s: f64,
    pub patch_s: f64,
    pub global_s: f64,
    pub check_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub method: String,
    pub source: String,
    pub space: SpaceParams,
    pub sigma: f64,
    pub estimator: String,
    pub gluing: Vec<GluingData>,
    /// Sampled G1 residual of the input with the estimated gluing data.
    pub input_g1_residual: f64,
    pub stages: Vec<StageRecord>,
    pub check: CheckReport,
    pub errors: RelativeErrors,
    pub timings: Timings,
}

pub struct Construction {
    pub surface: MultiPatchSpline,
    pub gluing: Vec<GluingData>,
    pub report: ConstructionReport,
}

/// Samples taken by the construction's own AS-G1 check.
pub const CHECK_SAMPLES: usize = 101;

/// A strategy turning a G1 source into an AS-G1 spline surface.
pub trait ConstructionMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn construct(&self, source: &dyn SurfaceSource, params: &ConstructionParams) -> Result<Construction>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocalMethod;

#[derive(Debug, Clone, Copy, Default)]
pub struct GlobalMethod;

pub fn method_names() -> &'static [&'static str] {
    &["local", "global"]
}

pub fn method_by_name(name: &str) -> Result<Box<dyn ConstructionMethod>> {
    match name {
        "local" => Ok(Box::new(LocalMethod)),
        "global" => Ok(Box::new(GlobalMethod)),
        _ => Err(Error::UnknownName {
            kind: "construction method",
            name: name.into(),
        }),
    }
}

/// Stage owner of every coefficient class (see `DofMap`) in the local method.
///
/// Fails with `Admissibility` if two stages would claim one coefficient.
pub fn stage_owners(source: &dyn SurfaceSource, params: &ConstructionParams) -> Result<(DofMap, Vec<Owner>)> {
    let ctx = Context::new(source, params, Vec::new())?;
    Ok((ctx.dofs, ctx.owner))
}

/// Sampled G1 residual of a source under given gluing data, normalised per interface.
pub fn source_g1_residual(source: &dyn SurfaceSource, gluing: &[GluingData], samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (iface, g) in source.topology().interfaces.iter().zip(gluing) {
        let [f1, f2] = iface.sides;
        let jet = |f: &crate::mpatch::EdgeFrame, t: f64| -> Result<crate::mpatch::Jet> {
            Ok(f.local_jet(&source.jet(f.patch, f.param(0.0, t))?))
        };
        let mut scale: f64 = f64::MIN_POSITIVE;
        for t in [0.0, 1.0] {
            for f in [&f1, &f2] {
                let j = jet(f, t)?;
                scale = scale.max(vec3::norm(j.d[1][0])).max(vec3::norm(j.d[0][1]));
            }
        }
        for i in 0..samples {
            let t = i as f64 / (samples - 1) as f64;
            let (j1, j2) = (jet(&f1, t)?, jet(&f2, t)?);
            let r = g.g1_residual(t, j1.d[1][0], j1.d[0][1], j2.d[1][0]);
            worst = worst.max(vec3::norm(r) / scale);
        }
    }
    Ok(worst)
}

struct Prepared<'a> {
    ctx: Context<'a>,
    input_g1: f64,
    gluing_s: f64,
}

fn prepare<'a>(source: &'a dyn SurfaceSource, params: &'a ConstructionParams) -> Result<Prepared<'a>> {
    params.check_source(source)?;
    let t = Instant::now();
    let estimator = estimator_by_name(&params.estimator)?;
    let gluing = estimate_all(estimator.as_ref(), source)?;
    for g in &gluing {
        let positive = g.alpha.iter().all(|a| a.at0 > 0.0 && a.at1 > 0.0);
        if !positive {
            return Err(Error::GluingDegenerate {
                interface: g.interface,
            });
        }
    }
    let gluing_s = t.elapsed().as_secs_f64();
    let input_g1 = source_g1_residual(source, &gluing, CHECK_SAMPLES)?;
    if input_g1 > 1e-6 {
        log::warn!("input is not AS-G1 for the estimated gluing data (residual {input_g1:.3e})");
    }
    let ctx = Context::new(source, params, gluing)?;
    Ok(Prepared {
        ctx,
        input_g1,
        gluing_s,
    })
}

fn finish(
    method: &str,
    prep: Prepared<'_>,
    values: Vec<Vec3>,
    stages: Vec<StageRecord>,
    mut timings: Timings,
    start: Instant,
) -> Result<Construction> {
    let ctx = prep.ctx;
    let surface = MultiPatchSpline {
        space: TensorSpace::new(ctx.space.clone()),
        patches: ctx.dofs.expand(&values),
        topology: ctx.source.topology().clone(),
    };
    let t = Instant::now();
    let check = check_asg1(&surface, &ctx.gluing, CHECK_SAMPLES)?;
    let errors = relative_errors(&surface, ctx.source, ctx.sigma())?;
    timings.check_s = t.elapsed().as_secs_f64();
    timings.gluing_s = prep.gluing_s;
    timings.total_s = start.elapsed().as_secs_f64();
    let report = ConstructionReport {
        method: method.into(),
        source: ctx.source.name(),
        space: ctx.space.params(),
        sigma: ctx.sigma(),
        estimator: ctx.params.estimator.clone(),
        gluing: ctx.gluing.clone(),
        input_g1_residual: prep.input_g1,
        stages,
        check,
        errors,
        timings,
    };
    Ok(Construction {
        surface,
        gluing: ctx.gluing,
        report,
    })
}

impl ConstructionMethod for LocalMethod {
    fn name(&self) -> &'static str {
        "local"
    }

    fn construct(&self, source: &dyn SurfaceSource, params: &ConstructionParams) -> Result<Construction> {
        let start = Instant::now();
        let prep = prepare(source, params)?;
        let ctx = &prep.ctx;
        let mut values = vec![vec3::ZERO; ctx.dofs.num_classes];
        let mut determined = vec![false; ctx.dofs.num_classes];
        let mut records = Vec::new();
        let mut timings = Timings::default();

        let t = Instant::now();
        let vertices: Vec<usize> = (0..source.topology().vertices.len())
            .filter(|&v| source.topology().vertices[v].valency() >= 2)
            .collect();
        let out = vertices
            .par_iter()
            .map(|&v| ctx.vertex_stage(v, &values, &determined))
            .collect::<Result<Vec<_>>>()?;
        for o in out {
            o.write(&mut values, &mut determined);
            records.push(o.into_record());
        }
        timings.vertex_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let out = (0..source.topology().interfaces.len())
            .into_par_iter()
            .map(|i| ctx.interface_stage(i, &values, &determined))
            .collect::<Result<Vec<_>>>()?;
        for o in out {
            o.write(&mut values, &mut determined);
            records.push(o.into_record());
        }
        timings.interface_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let out = (0..source.num_patches())
            .into_par_iter()
            .map(|p| {
                let gram = ctx.patch_gram(p)?;
                ctx.patch_stage(p, &gram, &values, &determined)
            })
            .collect::<Result<Vec<_>>>()?;
        for o in out {
            o.write(&mut values, &mut determined);
            records.push(o.into_record());
        }
        timings.patch_s = t.elapsed().as_secs_f64();
        debug_assert!(determined.iter().all(|&d| d));
        finish(self.name(), prep, values, records, timings, start)
    }
}

impl ConstructionMethod for GlobalMethod {
    fn name(&self) -> &'static str {
        "global"
    }

    fn construct(&self, source: &dyn SurfaceSource, params: &ConstructionParams) -> Result<Construction> {
        let start = Instant::now();
        let prep = prepare(source, params)?;
        let ctx = &prep.ctx;
        let topo = source.topology();
        let mut timings = Timings::default();
        let t = Instant::now();
        let grams = (0..source.num_patches())
            .into_par_iter()
            .map(|p| ctx.patch_gram(p))
            .collect::<Result<Vec<_>>>()?;
        let nc = ctx.dofs.num_classes;
        let zeros = vec![vec3::ZERO; nc];
        let determined = vec![true; nc];
        let per_iface = ctx.trace.dim() + ctx.transversal.dim();
        let mut sb = StageBuilder::new(
            "global".into(),
            &ctx.dofs,
            &zeros,
            &determined,
            (0..nc).collect(),
            per_iface * topo.interfaces.len(),
        );
        let nn = ctx.n() * ctx.n();
        for (p, gram) in grams.iter().enumerate() {
            for i in 0..nn {
                let gi = ctx.dofs.global(p, i);
                for j in 0..nn {
                    let q = gram.g[(i, j)];
                    if q != 0.0 {
                        sb.add_hessian_entry(gi, ctx.dofs.global(p, j), q);
                    }
                }
                sb.add_linear(gi, gram.r[i]);
            }
        }
        for v in topo.vertices.iter().filter(|v| v.valency() >= 2) {
            for &(i, end) in &v.interfaces {
                ctx.add_vertex_interface_constraints(&mut sb, i, end)?;
            }
        }
        for i in 0..topo.interfaces.len() {
            let aux0 = sb.aux_col(i * per_iface);
            let aux1 = sb.aux_col(i * per_iface + ctx.trace.dim());
            ctx.add_interface_constraints(&mut sb, i, aux0, aux1)?;
        }
        let out = sb.solve()?;
        let mut values = vec![vec3::ZERO; nc];
        for (&c, &v) in out.classes.iter().zip(&out.values) {
            values[c] = v;
        }
        let patches = ctx.dofs.expand(&values);
        let mut record = out.into_record();
        record.objective = grams
            .iter()
            .zip(&patches)
            .map(|(g, x)| g.distance_sq(x))
            .sum();
        timings.global_s = t.elapsed().as_secs_f64();
        finish(self.name(), prep, values, vec![record], timings, start)
    }
}
