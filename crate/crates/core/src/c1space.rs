//! The C1 isogeometric space on an AS-G1 multi-patch spline surface.
//!
//! Coefficients are stored per patch (no sharing). Coefficients at distance >= 2 from
//! every side are unconstrained; the coefficients of the first two rows along every side
//! satisfy linear conditions whose nullspace is computed numerically:
//!
//! * on each interface, a common trace `g0` in `S^{p,r+1}` and a transversal function
//!   `g1` in `S^{p-1,r}` with `d_d psi_1 + beta_1 g0' = alpha_1 g1` and
//!   `d_d psi_2 + beta_2 g0' = -alpha_2 g1`;
//! * the same on boundary curves with `alpha = 1`, `beta = 0`;
//! * at every vertex of valency >= 2, equal values, tangential gradients and tangential
//!   Hessians from all incident patches.
//!
//! Every condition lies in `S^{p,r}` along the curve, so collocation at its Greville
//! abscissae is exact.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::construct::check_asg1;
use crate::gluing::GluingData;
use crate::mpatch::{Corner, EdgeFrame, MultiPatchSpline, SurfaceSource, Vertex};
use crate::numerics::{nullspace, orthonormal_columns};
use crate::spline::SplineSpace1D;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Relative singular-value threshold of the constraint nullspace.
pub const NULLSPACE_TOL: f64 = 1e-9;

/// AS-G1 residual above which the geometry is rejected.
pub const ASG1_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct C1Options {
    /// Zero the first two coefficient rows along boundary curves.
    pub clamp_boundary: bool,
    /// Skip the AS-G1 check of the geometry (for negative controls).
    pub skip_geometry_check: bool,
}

#[derive(Debug, Clone)]
pub struct C1Space {
    pub geometry: MultiPatchSpline,
    pub gluing: Vec<GluingData>,
    /// Global indices `patch * n^2 + flat` of the constrained coefficients.
    pub edge: Vec<usize>,
    /// Global indices of the free coefficients.
    pub interior: Vec<usize>,
    /// Orthonormal basis of the constrained coefficients, `edge.len() x dim_edge`.
    pub z_edge: Mat<f64>,
    pub clamped: bool,
}

/// Position of a global coefficient within the space's coefficient blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Edge(usize),
    Interior(usize),
}

fn is_edge(j1: usize, j2: usize, n: usize) -> bool {
    j1 < 2 || j2 < 2 || j1 + 2 >= n || j2 + 2 >= n
}

impl C1Space {
    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    pub fn space(&self) -> &SplineSpace1D {
        &self.geometry.space.space
    }

    /// Number of coefficients of all patches.
    pub fn num_coefficients(&self) -> usize {
        self.geometry.patches.len() * self.n() * self.n()
    }

    pub fn dim_edge(&self) -> usize {
        self.z_edge.ncols()
    }

    /// Dimension: free coefficients plus the edge nullspace.
    pub fn dim(&self) -> usize {
        self.interior.len() + self.dim_edge()
    }

    pub fn slots(&self) -> Vec<Slot> {
        let mut s = vec![Slot::Interior(usize::MAX); self.num_coefficients()];
        for (i, &g) in self.edge.iter().enumerate() {
            s[g] = Slot::Edge(i);
        }
        for (i, &g) in self.interior.iter().enumerate() {
            s[g] = Slot::Interior(i);
        }
        s
    }

    /// Full coefficient vector of `sum_j y_j phi_j`; interior basis functions first.
    pub fn expand(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim());
        let mut c = vec![0.0; self.num_coefficients()];
        let ni = self.interior.len();
        for (i, &g) in self.interior.iter().enumerate() {
            c[g] = y[i];
        }
        for (r, &g) in self.edge.iter().enumerate() {
            c[g] = (0..self.dim_edge()).map(|j| self.z_edge[(r, j)] * y[ni + j]).sum();
        }
        c
    }

    /// Full coefficient vector of basis function `j`.
    pub fn basis_vector(&self, j: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        y[j] = 1.0;
        self.expand(&y)
    }

    /// Value and derivatives `d1^a d2^b` of a discrete field on one patch.
    pub fn eval(&self, coefs: &[f64], patch: usize, xi: [f64; 2], a: usize, b: usize) -> Result<f64> {
        let nn = self.n() * self.n();
        self.geometry
            .space
            .eval_scalar(&coefs[patch * nn..(patch + 1) * nn], xi, a, b)
    }
}

/// Sparse row over global coefficient indices.
type Row = Vec<(usize, f64)>;

struct RowFactory<'a> {
    space: &'a SplineSpace1D,
    n: usize,
}

impl RowFactory<'_> {
    fn edge(&self, f: &EdgeFrame, t: f64, a: usize, b: usize) -> Row {
        crate::construct::edge_form(self.space, f, t, a, b)
    }

    fn corner(&self, c: &Corner, a: usize, b: usize) -> Row {
        let [x, y] = c.param();
        let bu = self.space.eval_basis_unchecked(x, a);
        let bv = self.space.eval_basis_unchecked(y, b);
        let base = c.patch * self.n * self.n;
        let mut out = Vec::new();
        for i in bu.indices() {
            for j in bv.indices() {
                let w = bu.get(a, i) * bv.get(b, j);
                if w != 0.0 {
                    out.push((base + i * self.n + j, w));
                }
            }
        }
        out
    }
}


fn sum_rows(parts: &[(f64, &Row)]) -> Row {
    parts
        .iter()
        .flat_map(|(s, r)| r.iter().map(move |&(g, w)| (g, s * w)))
        .collect()
}

struct Constraints {
    rows: Vec<(Row, Vec<(usize, f64)>)>,
}

impl Constraints {
    fn push(&mut self, row: Row, aux: Vec<(usize, f64)>) {
        self.rows.push((row, aux));
    }
}

/// Adds the edge-function conditions of one curve. `sides` holds one frame for a
/// boundary curve and two for an interface.
#[allow(clippy::too_many_arguments)]
fn curve_conditions(
    cons: &mut Constraints,
    rf: &RowFactory<'_>,
    trace: &SplineSpace1D,
    transversal: &SplineSpace1D,
    zeta: &[f64],
    sides: &[EdgeFrame],
    g: &GluingData,
    aux0: usize,
    aux1: usize,
) {
    for &z in zeta {
        let b0 = trace.eval_basis_unchecked(z, 1);
        let b1 = transversal.eval_basis_unchecked(z, 0);
        for (s, f) in sides.iter().enumerate() {
            let sign = if s == 0 { 1.0 } else { -1.0 };
            // psi(0, z) - g0(z) = 0
            let aux: Vec<_> = b0.indices().map(|i| (aux0 + i, -b0.get(0, i))).collect();
            cons.push(rf.edge(f, z, 0, 0), aux);
            // d_d psi + beta g0' -+ alpha g1 = 0
            let (a, be) = (g.alpha[s].eval(z), g.beta[s].eval(z));
            let mut aux: Vec<_> = b0.indices().map(|i| (aux0 + i, be * b0.get(1, i))).collect();
            aux.extend(b1.indices().map(|i| (aux1 + i, -sign * a * b1.get(0, i))));
            cons.push(rf.edge(f, z, 1, 0), aux);
        }
    }
}

/// Tangential value, gradient and Hessian rows at a vertex corner, in the tangent frame
/// `e` at `x0`.
fn tangential_rows(
    rf: &RowFactory<'_>,
    geo: &MultiPatchSpline,
    c: &Corner,
    e: [Vec3; 2],
) -> Result<[Row; 6]> {
    let jet = geo.jet(c.patch, c.param())?;
    let proj = |v: Vec3| [vec3::dot(e[0], v), vec3::dot(e[1], v)];
    let (t1, t2) = (proj(jet.d[1][0]), proj(jet.d[0][1]));
    // J = [t1 t2] (columns), J^{-1}
    let det = t1[0] * t2[1] - t2[0] * t1[1];
    if det.abs() < 1e-14 {
        return Err(Error::Regularity {
            patch: c.patch,
            c1: c.c[0],
            c2: c.c[1],
        });
    }
    let jinv = [[t2[1] / det, -t2[0] / det], [-t1[1] / det, t1[0] / det]];
    let p1 = rf.corner(c, 1, 0);
    let p2 = rf.corner(c, 0, 1);
    // gradient in tangent coordinates: grad = J^{-T} [psi_1, psi_2]
    let grad = |k: usize| sum_rows(&[(jinv[0][k], &p1), (jinv[1][k], &p2)]);
    let (g0, g1) = (grad(0), grad(1));
    let tab = [
        proj(jet.d[2][0]),
        proj(jet.d[1][1]),
        proj(jet.d[0][2]),
    ];
    let psi = [rf.corner(c, 2, 0), rf.corner(c, 1, 1), rf.corner(c, 0, 2)];
    // Psi_ab - sum_c (E^T F_ab)_c grad_c, entries (11, 12, 22)
    let m: Vec<Row> = (0..3)
        .map(|i| sum_rows(&[(1.0, &psi[i]), (-tab[i][0], &g0), (-tab[i][1], &g1)]))
        .collect();
    // H = J^{-T} M J^{-1}; H_kl = sum_ab Jinv[a][k] M_ab Jinv[b][l]
    let h = |k: usize, l: usize| {
        let w11 = jinv[0][k] * jinv[0][l];
        let w12 = jinv[0][k] * jinv[1][l] + jinv[1][k] * jinv[0][l];
        let w22 = jinv[1][k] * jinv[1][l];
        sum_rows(&[(w11, &m[0]), (w12, &m[1]), (w22, &m[2])])
    };
    Ok([rf.corner(c, 0, 0), g0.clone(), g1.clone(), h(0, 0), h(0, 1), h(1, 1)])
}

fn vertex_conditions(
    cons: &mut Constraints,
    rf: &RowFactory<'_>,
    geo: &MultiPatchSpline,
    v: &Vertex,
) -> Result<()> {
    let first = v.corners[0];
    let jet = geo.jet(first.patch, first.param())?;
    let e0 = vec3::scale(1.0 / vec3::norm(jet.d[1][0]), jet.d[1][0]);
    let mut e1 = jet.d[0][1];
    let c = -vec3::dot(e0, e1);
    vec3::axpy(&mut e1, c, e0);
    let e1 = vec3::scale(1.0 / vec3::norm(e1), e1);
    let base = tangential_rows(rf, geo, &first, [e0, e1])?;
    for c in &v.corners[1..] {
        let rows = tangential_rows(rf, geo, c, [e0, e1])?;
        for (a, b) in rows.iter().zip(&base) {
            cons.push(sum_rows(&[(1.0, a), (-1.0, b)]), Vec::new());
        }
    }
    Ok(())
}

/// The stacked coupling conditions over the edge coefficients and auxiliary edge
/// functions. Rows are normalized; columns are `edge` followed by the auxiliaries.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub a: Mat<f64>,
    pub edge: Vec<usize>,
    pub interior: Vec<usize>,
}

impl ConstraintSystem {
    pub fn num_aux(&self) -> usize {
        self.a.ncols() - self.edge.len()
    }
}

fn check_geometry(geometry: &MultiPatchSpline, gluing: &[GluingData]) -> Result<()> {
    let rep = check_asg1(geometry, gluing, 33)?;
    if let Some(w) = rep.worst() {
        let r = w
            .g1_residual
            .max(w.c0_residual)
            .max(w.trace_residual)
            .max(w.transversal_residual);
        if r > ASG1_TOL {
            return Err(Error::NotAsG1 {
                interface: w.interface,
                residual: r,
            });
        }
    }
    Ok(())
}

/// Assembles the coupling conditions of the C1 space.
pub fn constraint_system(
    geometry: &MultiPatchSpline,
    gluing: &[GluingData],
    clamp_boundary: bool,
) -> Result<ConstraintSystem> {
    let space = &geometry.space.space;
    let n = space.dim();
    let nn = n * n;
    let np = geometry.patches.len();
    let (trace, transversal) = space.companion_spaces()?;
    let zeta = space.greville();
    let rf = RowFactory { space, n };
    let topo = &geometry.topology;
    if gluing.len() != topo.interfaces.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gluing records for {} interfaces",
            gluing.len(),
            topo.interfaces.len()
        )));
    }

    let mut edge = Vec::new();
    let mut interior = Vec::new();
    for p in 0..np {
        for j1 in 0..n {
            for j2 in 0..n {
                if is_edge(j1, j2, n) {
                    edge.push(p * nn + j1 * n + j2);
                } else {
                    interior.push(p * nn + j1 * n + j2);
                }
            }
        }
    }
    let mut col = vec![usize::MAX; np * nn];
    for (i, &g) in edge.iter().enumerate() {
        col[g] = i;
    }

    let per_curve = trace.dim() + transversal.dim();
    let n_aux = per_curve * (topo.interfaces.len() + topo.boundaries.len());
    let mut cons = Constraints { rows: Vec::new() };
    let mut aux_next = edge.len();
    for (iface, g) in topo.interfaces.iter().zip(gluing) {
        curve_conditions(
            &mut cons, &rf, &trace, &transversal, &zeta, &iface.sides, g, aux_next,
            aux_next + trace.dim(),
        );
        aux_next += per_curve;
    }
    for b in &topo.boundaries {
        curve_conditions(
            &mut cons, &rf, &trace, &transversal, &zeta, &[b.frame], &GluingData::BOUNDARY,
            aux_next, aux_next + trace.dim(),
        );
        aux_next += per_curve;
    }
    for v in topo.vertices.iter().filter(|v| v.valency() >= 2) {
        vertex_conditions(&mut cons, &rf, geometry, v)?;
    }
    if clamp_boundary {
        for b in &topo.boundaries {
            for d in 0..2 {
                for t in 0..n {
                    let g = b.frame.patch * nn + b.frame.flat(d, t, n);
                    cons.push(vec![(g, 1.0)], Vec::new());
                }
            }
        }
    }

    let ncols = edge.len() + n_aux;
    let mut a = Mat::<f64>::zeros(cons.rows.len(), ncols);
    for (r, (row, aux)) in cons.rows.iter().enumerate() {
        for &(g, w) in row {
            debug_assert!(col[g] != usize::MAX, "condition reads an interior coefficient");
            a[(r, col[g])] += w;
        }
        for &(c, w) in aux {
            a[(r, c)] += w;
        }
        let norm: f64 = (0..ncols).map(|j| a[(r, j)] * a[(r, j)]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for j in 0..ncols {
                a[(r, j)] /= norm;
            }
        }
    }
    Ok(ConstraintSystem { a, edge, interior })
}

/// Builds the C1 space of an AS-G1 surface with its gluing data.
pub fn build_c1_space(
    geometry: &MultiPatchSpline,
    gluing: &[GluingData],
    options: C1Options,
) -> Result<C1Space> {
    if !options.skip_geometry_check {
        check_geometry(geometry, gluing)?;
    }
    let sys = constraint_system(geometry, gluing, options.clamp_boundary)?;
    let z = nullspace(sys.a.as_ref(), NULLSPACE_TOL)?;
    let z_e = z.subrows(0, sys.edge.len()).to_owned();
    let z_edge = orthonormal_columns(z_e.as_ref(), NULLSPACE_TOL)?;
    Ok(C1Space {
        geometry: geometry.clone(),
        gluing: gluing.to_vec(),
        edge: sys.edge,
        interior: sys.interior,
        z_edge,
        clamped: options.clamp_boundary,
    })
}

/// Coefficients of a function in a C1 space, interior basis functions first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub coefs: Vec<f64>,
}

/// Evaluates `d1^a d2^b (u o F)` on one patch, `a + b <= 2`.
pub fn eval_c1(
    space: &C1Space,
    field: &DiscreteField,
    patch: usize,
    xi: [f64; 2],
    a: usize,
    b: usize,
) -> Result<f64> {
    if field.coefs.len() != space.dim() {
        return Err(Error::InvalidArgument(format!(
            "field has {} coefficients, space dimension is {}",
            field.coefs.len(),
            space.dim()
        )));
    }
    if patch >= space.geometry.patches.len() || a + b > 2 {
        return Err(Error::InvalidArgument(format!(
            "patch {patch}, derivative ({a}, {b})"
        )));
    }
    space.eval(&space.expand(&field.coefs), patch, xi, a, b)
}

/// Least-squares representation of full patch coefficients in the space, returning
/// the field and the relative residual of the edge part.
pub fn project_coefficients(space: &C1Space, full: &[f64]) -> (DiscreteField, f64) {
    let ni = space.interior.len();
    let z = &space.z_edge;
    let mut y: Vec<f64> = space.interior.iter().map(|&g| full[g]).collect();
    let ce: Vec<f64> = space.edge.iter().map(|&g| full[g]).collect();
    let coeff: Vec<f64> = (0..z.ncols())
        .map(|k| (0..z.nrows()).map(|r| z[(r, k)] * ce[r]).sum())
        .collect();
    let mut res = 0.0;
    for (r, c) in ce.iter().enumerate() {
        let proj: f64 = (0..z.ncols()).map(|k| z[(r, k)] * coeff[k]).sum();
        res += (c - proj).powi(2);
    }
    let total: f64 = full.iter().map(|v| v * v).sum();
    y.extend(coeff);
    debug_assert_eq!(y.len(), ni + z.ncols());
    (DiscreteField { coefs: y }, (res / total.max(f64::MIN_POSITIVE)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Verification {
    /// Max absolute jump of values across interfaces over all basis functions.
    pub value_jump: f64,
    /// Max jump of surface gradients relative to the largest sampled surface gradient.
    pub gradient_jump: f64,
}

/// Surface-gradient rows (three components) at the local point `(0, t)` of a side.
fn gradient_rows(sp: &C1Space, f: &EdgeFrame, t: f64) -> Result<[Row; 3]> {
    let space = sp.space();
    let jet = f.local_jet(&sp.geometry.jet(f.patch, f.param(0.0, t))?);
    let (fd, ft) = (jet.d[1][0], jet.d[0][1]);
    let g = [[vec3::dot(fd, fd), vec3::dot(fd, ft)], [vec3::dot(fd, ft), vec3::dot(ft, ft)]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let gi = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let rd = crate::construct::edge_form(space, f, t, 1, 0);
    let rt = crate::construct::edge_form(space, f, t, 0, 1);
    // grad = sum_ab g^{ab} psi_a F_b
    let comp = |k: usize| {
        let wd = gi[0][0] * fd[k] + gi[0][1] * ft[k];
        let wt = gi[1][0] * fd[k] + gi[1][1] * ft[k];
        sum_rows(&[(wd, &rd), (wt, &rt)])
    };
    Ok([comp(0), comp(1), comp(2)])
}

fn apply_rows_to_basis(rows: &[Row], slots: &[Slot], z: &Mat<f64>) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let mut out = vec![0.0; z.ncols()];
            for &(g, w) in row {
                if let Slot::Edge(r) = slots[g] {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += w * z[(r, j)];
                    }
                }
            }
            out
        })
        .collect()
}

/// Samples value and surface-gradient jumps of every basis function across interfaces.
///
/// Interior basis functions vanish to first order on all sides and are skipped.
pub fn verify_c1(sp: &C1Space, samples: usize) -> Result<C1Verification> {
    let slots = sp.slots();
    let space = sp.space();
    let mut vj: f64 = 0.0;
    let mut gj: f64 = 0.0;
    let mut gmax: f64 = 0.0;
    for iface in &sp.geometry.topology.interfaces {
        let [f1, f2] = iface.sides;
        for i in 0..samples {
            let t = i as f64 / (samples - 1).max(1) as f64;
            let v1 = crate::construct::edge_form(space, &f1, t, 0, 0);
            let v2 = crate::construct::edge_form(space, &f2, t, 0, 0);
            let g1 = gradient_rows(sp, &f1, t)?;
            let g2 = gradient_rows(sp, &f2, t)?;
            let mut rows = vec![sum_rows(&[(1.0, &v1), (-1.0, &v2)])];
            for k in 0..3 {
                rows.push(sum_rows(&[(1.0, &g1[k]), (-1.0, &g2[k])]));
            }
            rows.extend(g1.iter().cloned());
            let vals = apply_rows_to_basis(&rows, &slots, &sp.z_edge);
            for j in 0..sp.dim_edge() {
                vj = vj.max(vals[0][j].abs());
                let jump = (1..4).map(|k| vals[k][j] * vals[k][j]).sum::<f64>().sqrt();
                let grad = (4..7).map(|k| vals[k][j] * vals[k][j]).sum::<f64>().sqrt();
                gj = gj.max(jump);
                gmax = gmax.max(grad);
            }
        }
    }
    Ok(C1Verification {
        value_jump: vj,
        gradient_jump: gj / gmax.max(f64::MIN_POSITIVE),
    })
}

/// Max over coarse edge basis functions of the relative distance of their refined
/// representation from the fine space.
pub fn embedding_residual(coarse: &C1Space, fine: &C1Space) -> Result<f64> {
    let p1d = coarse.space().prolongation(fine.space())?;
    let nc = coarse.n();
    let ni = coarse.interior.len();
    let mut worst: f64 = 0.0;
    for j in 0..coarse.dim_edge() {
        let c = coarse.basis_vector(ni + j);
        let refined: Vec<f64> = c
            .chunks(nc * nc)
            .flat_map(|patch| coarse.geometry.space.prolong_coefs(&p1d, patch))
            .collect();
        worst = worst.max(project_coefficients(fine, &refined).1);
    }
    Ok(worst)
}
