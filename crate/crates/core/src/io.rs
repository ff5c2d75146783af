//! Geometry and report files, and mesh export.
//!
//! Geometry files are JSON. Numbers are written as shortest round-trip decimals, so
//! reading a written file reproduces every coordinate bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construct::{CheckReport, ConstructionReport};
use crate::gluing::{GluingData, LinearFn};
use crate::iga::ConvergenceLedger;
use crate::mpatch::{BoundaryCurve, EdgeFrame, Interface, MultiPatchSpline, Side, VertexKind};
use crate::spline::{SpaceParams, SplineSpace1D};
use crate::vec3::Vec3;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub id: usize,
    /// Index `j1 * n + j2`.
    pub control_points: Vec<Vec3>,
}

/// Gluing functions as end values `[at 0, at 1]` for sides a and b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingRecord {
    pub alpha_a: [f64; 2],
    pub alpha_b: [f64; 2],
    pub beta_a: [f64; 2],
    pub beta_b: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceRecord {
    pub id: usize,
    pub patch_a: usize,
    pub side_a: Side,
    pub patch_b: usize,
    pub side_b: Side,
    /// Side b runs against side a.
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gluing: Option<GluingRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub patch: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub kind: VertexKind,
    pub patches_ccw: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFile {
    pub version: u32,
    pub space: SpaceParams,
    pub patches: Vec<PatchRecord>,
    pub interfaces: Vec<InterfaceRecord>,
    #[serde(default)]
    pub boundary: Vec<BoundaryRecord>,
    #[serde(default)]
    pub vertices: Vec<VertexRecord>,
}

fn lin(v: [f64; 2]) -> LinearFn {
    LinearFn {
        at0: v[0],
        at1: v[1],
    }
}

impl GeometryFile {
    pub fn from_surface(s: &MultiPatchSpline, gluing: Option<&[GluingData]>) -> Self {
        let ends = |f: LinearFn| [f.at0, f.at1];
        GeometryFile {
            version: FORMAT_VERSION,
            space: s.params(),
            patches: s
                .patches
                .iter()
                .enumerate()
                .map(|(id, p)| PatchRecord {
                    id,
                    control_points: p.clone(),
                })
                .collect(),
            interfaces: s
                .topology
                .interfaces
                .iter()
                .enumerate()
                .map(|(i, f)| InterfaceRecord {
                    id: f.id,
                    patch_a: f.sides[0].patch,
                    side_a: f.sides[0].side,
                    patch_b: f.sides[1].patch,
                    side_b: f.sides[1].side,
                    reversed: f.sides[1].reversed,
                    gluing: gluing.map(|g| GluingRecord {
                        alpha_a: ends(g[i].alpha[0]),
                        alpha_b: ends(g[i].alpha[1]),
                        beta_a: ends(g[i].beta[0]),
                        beta_b: ends(g[i].beta[1]),
                    }),
                })
                .collect(),
            boundary: s
                .topology
                .boundaries
                .iter()
                .map(|b| BoundaryRecord {
                    patch: b.frame.patch,
                    side: b.frame.side,
                })
                .collect(),
            vertices: s
                .topology
                .vertices
                .iter()
                .map(|v| VertexRecord {
                    id: v.id,
                    kind: v.kind,
                    patches_ccw: v.patches_ccw(),
                })
                .collect(),
        }
    }

    /// Validates and builds the surface; gluing data is returned only if every
    /// interface carries it.
    pub fn to_surface(&self) -> Result<(MultiPatchSpline, Option<Vec<GluingData>>)> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported version {}", self.version)));
        }
        let SpaceParams { p, r, k } = self.space;
        let space = SplineSpace1D::new(p, r, k).map_err(|e| Error::Parse(format!("space: {e}")))?;
        for (i, pr) in self.patches.iter().enumerate() {
            if pr.id != i {
                return Err(Error::Parse(format!("patch ids must be 0..{}", self.patches.len())));
            }
            if pr.control_points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("patch {i} has non-finite control points")));
            }
        }
        let interfaces: Vec<Interface> = self
            .interfaces
            .iter()
            .map(|r| Interface {
                id: r.id,
                sides: [
                    EdgeFrame::new(r.patch_a, r.side_a, false),
                    EdgeFrame::new(r.patch_b, r.side_b, r.reversed),
                ],
            })
            .collect();
        let boundaries = (!self.boundary.is_empty()).then(|| {
            self.boundary
                .iter()
                .enumerate()
                .map(|(id, b)| BoundaryCurve {
                    id,
                    frame: EdgeFrame::new(b.patch, b.side, false),
                })
                .collect()
        });
        let patches = self.patches.iter().map(|p| p.control_points.clone()).collect();
        let surface = MultiPatchSpline::canonicalize(space, patches, interfaces, boundaries)?;
        if !self.vertices.is_empty() {
            let mut want: Vec<_> = self.vertices.iter().map(|v| v.patches_ccw.len()).collect();
            let mut got: Vec<_> = surface.topology.vertices.iter().map(|v| v.valency()).collect();
            want.sort_unstable();
            got.sort_unstable();
            if want != got {
                return Err(Error::Topology(format!(
                    "vertex valencies {want:?} disagree with the interfaces ({got:?})"
                )));
            }
        }
        let gluing = self
            .interfaces
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.gluing.map(|g| GluingData {
                    interface: i,
                    alpha: [lin(g.alpha_a), lin(g.alpha_b)],
                    beta: [lin(g.beta_a), lin(g.beta_b)],
                })
            })
            .collect::<Option<Vec<_>>>();
        Ok((surface, gluing))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

pub fn read_geometry(path: &Path) -> Result<(MultiPatchSpline, Option<Vec<GluingData>>)> {
    GeometryFile::read(path)?.to_surface()
}

pub fn write_geometry(path: &Path, s: &MultiPatchSpline, gluing: Option<&[GluingData]>) -> Result<()> {
    GeometryFile::from_surface(s, gluing).write(path)
}

/// Machine-readable run report. Only `construction.timings` and `seconds` fields vary
/// between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceLedger>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReportFile {
    pub fn new() -> Self {
        Self {
            version: FORMAT_VERSION,
            ..Default::default()
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Vtk,
    CsvGrid,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(Self::Vtk),
            "csv-grid" => Ok(Self::CsvGrid),
            _ => Err(Error::UnknownName {
                kind: "export format",
                name: s.into(),
            }),
        }
    }
}

/// Uniform parameters `i / (m - 1)`.
pub fn grid_params(m: usize) -> Vec<f64> {
    (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
}

/// Optional per-point scalar `(name, f(patch, xi))`.
pub type ScalarField<'a> = (&'a str, &'a dyn Fn(usize, [f64; 2]) -> Result<f64>);

/// Legacy ASCII VTK structured grid of one patch, `m x m` points, `xi1` fastest:
///
/// ```text
/// # vtk DataFile Version 3.0
/// asg1 patch <id>
/// ASCII
/// DATASET STRUCTURED_GRID
/// DIMENSIONS <m> <m> 1
/// POINTS <m*m> double
/// <x> <y> <z>            (one line per point)
/// POINT_DATA <m*m>       (only with a scalar field)
/// SCALARS <name> double 1
/// LOOKUP_TABLE default
/// <value>                (one line per point)
/// ```
pub fn export_vtk_patch(
    s: &MultiPatchSpline,
    patch: usize,
    m: usize,
    scalar: Option<ScalarField<'_>>,
) -> Result<String> {
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples per direction".into()));
    }
    let g = grid_params(m);
    let mut out = format!(
        "# vtk DataFile Version 3.0\nasg1 patch {patch}\nASCII\nDATASET STRUCTURED_GRID\nDIMENSIONS {m} {m} 1\nPOINTS {} double\n",
        m * m
    );
    for &v in &g {
        for &u in &g {
            let x = s.eval(patch, [u, v], 0, 0)?;
            let _ = writeln!(out, "{} {} {}", x[0], x[1], x[2]);
        }
    }
    if let Some((name, f)) = scalar {
        let _ = write!(out, "POINT_DATA {}\nSCALARS {name} double 1\nLOOKUP_TABLE default\n", m * m);
        for &v in &g {
            for &u in &g {
                let _ = writeln!(out, "{}", f(patch, [u, v])?);
            }
        }
    }
    Ok(out)
}

/// CSV with header `patch,i,j,xi1,xi2,x,y,z[,name]`, `i` indexing `xi1`.
pub fn export_csv_grid(s: &MultiPatchSpline, m: usize, scalar: Option<ScalarField<'_>>) -> Result<String> {
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples per direction".into()));
    }
    let g = grid_params(m);
    let mut out = String::from("patch,i,j,xi1,xi2,x,y,z");
    if let Some((name, _)) = scalar {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for patch in 0..s.patches.len() {
        for (j, &v) in g.iter().enumerate() {
            for (i, &u) in g.iter().enumerate() {
                let x = s.eval(patch, [u, v], 0, 0)?;
                let _ = write!(out, "{patch},{i},{j},{u},{v},{},{},{}", x[0], x[1], x[2]);
                if let Some((_, f)) = scalar {
                    let _ = write!(out, ",{}", f(patch, [u, v])?);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}
