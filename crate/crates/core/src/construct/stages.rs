//! Vertex, interface and patch stage problems and the shared constraint families.

use std::collections::BTreeSet;

use faer::Mat;

use super::dofs::{combine, DofMap, Form, FormFactory, StageBuilder, StageOutcome, StageRecord};
use super::ConstructionParams;
use crate::gluing::GluingData;
use crate::mpatch::{EdgeFrame, SurfaceSource, Vertex};
use crate::numerics::solve_spd;
use crate::spline::SplineSpace1D;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Which stage determines a coefficient class in the local method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Vertex(usize),
    Interface(usize),
    Patch(usize),
}

/// Everything the stages share.
pub struct Context<'a> {
    pub source: &'a dyn SurfaceSource,
    pub params: &'a ConstructionParams,
    pub space: SplineSpace1D,
    pub trace: SplineSpace1D,
    pub transversal: SplineSpace1D,
    pub greville: Vec<f64>,
    pub dofs: DofMap,
    pub gluing: Vec<GluingData>,
    pub owner: Vec<Owner>,
}

impl<'a> Context<'a> {
    pub fn new(
        source: &'a dyn SurfaceSource,
        params: &'a ConstructionParams,
        gluing: Vec<GluingData>,
    ) -> Result<Self> {
        let space = params.space()?;
        let (trace, transversal) = space.companion_spaces()?;
        let n = space.dim();
        let dofs = DofMap::new(source.topology(), n);
        let mut ctx = Context {
            source,
            params,
            greville: space.greville(),
            space,
            trace,
            transversal,
            dofs,
            gluing,
            owner: Vec::new(),
        };
        ctx.owner = ctx.assign_owners()?;
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.space.dim()
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma()
    }

    pub fn forms(&self) -> FormFactory<'_> {
        FormFactory {
            space: &self.space,
            n: self.n(),
        }
    }

    fn topology(&self) -> &crate::mpatch::Topology {
        self.source.topology()
    }

    /// Classes of the corner triangles `i + j <= 2` around a vertex.
    pub fn vertex_classes(&self, v: &Vertex) -> Vec<usize> {
        let n = self.n();
        let mut set = BTreeSet::new();
        for c in &v.corners {
            for i in 0..3 {
                for j in 0..3 - i {
                    let (j1, j2) = c.index(i, j, n);
                    set.insert(self.dofs.class(c.patch, j1 * n + j2));
                }
            }
        }
        set.into_iter().collect()
    }

    /// Row 0 at `3..n-4` and row 1 at `2..n-3` on both sides of an interface.
    pub fn interface_classes(&self, i: usize) -> Vec<usize> {
        let n = self.n();
        let [a, b] = self.topology().interfaces[i].sides;
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut push = |f: &EdgeFrame, d: usize, t: usize| {
            let c = self.dofs.class(f.patch, f.flat(d, t, n));
            if seen.insert(c) {
                out.push(c);
            }
        };
        for t in 3..n - 3 {
            push(&a, 0, t);
        }
        for f in [&a, &b] {
            for t in 2..n - 2 {
                push(f, 1, t);
            }
        }
        out
    }

    fn assign_owners(&self) -> Result<Vec<Owner>> {
        let n = self.n();
        let mut owner: Vec<Option<Owner>> = vec![None; self.dofs.num_classes];
        let mut claim = |c: usize, o: Owner| -> Result<()> {
            if let Some(prev) = owner[c] {
                return Err(Error::Admissibility(format!(
                    "coefficient claimed by {prev:?} and {o:?}; the space needs more inner knots"
                )));
            }
            owner[c] = Some(o);
            Ok(())
        };
        for (vi, v) in self.topology().vertices.iter().enumerate() {
            if v.valency() >= 2 {
                for c in self.vertex_classes(v) {
                    claim(c, Owner::Vertex(vi))?;
                }
            }
        }
        for i in 0..self.topology().interfaces.len() {
            for c in self.interface_classes(i) {
                claim(c, Owner::Interface(i))?;
            }
        }
        let nn = n * n;
        let mut out = Vec::with_capacity(owner.len());
        for (g, &cls) in self.dofs.class_of.iter().enumerate() {
            if owner[cls].is_none() {
                owner[cls] = Some(Owner::Patch(g / nn));
            }
        }
        for o in owner {
            out.push(o.expect("every class owned"));
        }
        Ok(out)
    }

    /// Local source jet `d_d^a d_t^b` at `(0, t)` of an edge frame.
    fn source_edge_jet(&self, f: &EdgeFrame, t: f64) -> Result<crate::mpatch::Jet> {
        Ok(f.local_jet(&self.source.jet(f.patch, f.param(0.0, t))?))
    }

    /// Vertex constraints at one interface end: derivatives of the shared trace up to
    /// order two and the G1 identity with its first derivative, all along the curve.
    pub fn add_vertex_interface_constraints(
        &self,
        sb: &mut StageBuilder<'_>,
        iface: usize,
        end: usize,
    ) -> Result<()> {
        let ff = self.forms();
        let [f1, f2] = self.topology().interfaces[iface].sides;
        let g = &self.gluing[iface];
        let t = end as f64;
        let s = self.sigma();
        for w in 0..3 {
            let diff = combine(&[(1.0, &ff.edge(&f1, t, 0, w)), (-1.0, &ff.edge(&f2, t, 0, w))]);
            sb.add_constraint(&combine(&[(s.powi(w as i32), &diff)]), &[], vec3::ZERO)?;
        }
        let (a1, a2) = (g.alpha[0].eval(t), g.alpha[1].eval(t));
        let (b1, b2) = (g.beta[0].eval(t), g.beta[1].eval(t));
        let (da1, da2) = (g.alpha[0].slope(), g.alpha[1].slope());
        let (db1, db2) = (g.beta[0].slope(), g.beta[1].slope());
        let e = |f: &EdgeFrame, a, b| ff.edge(f, t, a, b);
        let (d1, t1, dt1, tt1) = (e(&f1, 1, 0), e(&f1, 0, 1), e(&f1, 1, 1), e(&f1, 0, 2));
        let (d2, t2, dt2, tt2) = (e(&f2, 1, 0), e(&f2, 0, 1), e(&f2, 1, 1), e(&f2, 0, 2));
        // G = a2 (d_d F1 + b1 d_t F1) + a1 (d_d F2 + b2 d_t F2)
        let g0 = combine(&[(a2, &d1), (a2 * b1, &t1), (a1, &d2), (a1 * b2, &t2)]);
        let g1 = combine(&[
            (da2, &d1),
            (da2 * b1 + a2 * db1, &t1),
            (a2, &dt1),
            (a2 * b1, &tt1),
            (da1, &d2),
            (da1 * b2 + a1 * db2, &t2),
            (a1, &dt2),
            (a1 * b2, &tt2),
        ]);
        sb.add_constraint(&combine(&[(s, &g0)]), &[], vec3::ZERO)?;
        sb.add_constraint(&combine(&[(s * s, &g1)]), &[], vec3::ZERO)?;
        Ok(())
    }

    /// Interface constraints: trace in `S^{p,r+1}` and the transversal function in
    /// `S^{p-1,r}` from both sides, collocated at the Greville abscissae of `S^{p,r}`.
    /// `aux0` and `aux1` are the first auxiliary columns of the two companion functions.
    pub fn add_interface_constraints(
        &self,
        sb: &mut StageBuilder<'_>,
        iface: usize,
        aux0: usize,
        aux1: usize,
    ) -> Result<()> {
        let ff = self.forms();
        let n = self.n();
        let [f1, f2] = self.topology().interfaces[iface].sides;
        let g = &self.gluing[iface];
        let s = self.sigma();
        for (j, &z) in self.greville.iter().enumerate() {
            let b0 = self.trace.eval_basis_unchecked(z, 0);
            let aux_f0: Vec<(usize, f64)> = b0
                .indices()
                .map(|i| (aux0 + i, -b0.get(0, i)))
                .collect();
            sb.add_constraint(&ff.edge(&f1, z, 0, 0), &aux_f0, vec3::ZERO)?;
            if (3..n - 3).contains(&j) {
                sb.add_constraint(&ff.edge(&f2, z, 0, 0), &aux_f0, vec3::ZERO)?;
            }
            let b1 = self.transversal.eval_basis_unchecked(z, 0);
            let (a1, a2) = (g.alpha[0].eval(z), g.alpha[1].eval(z));
            let (be1, be2) = (g.beta[0].eval(z), g.beta[1].eval(z));
            let n1 = combine(&[(s, &ff.edge(&f1, z, 1, 0)), (s * be1, &ff.edge(&f1, z, 0, 1))]);
            let aux_f1: Vec<(usize, f64)> = b1
                .indices()
                .map(|i| (aux1 + i, -s * a1 * b1.get(0, i)))
                .collect();
            sb.add_constraint(&n1, &aux_f1, vec3::ZERO)?;
            if (2..n - 2).contains(&j) {
                let n2 = combine(&[
                    (-s, &ff.edge(&f2, z, 1, 0)),
                    (-s * be2, &ff.edge(&f2, z, 0, 1)),
                ]);
                let aux_f1: Vec<(usize, f64)> = b1
                    .indices()
                    .map(|i| (aux1 + i, -s * a2 * b1.get(0, i)))
                    .collect();
                sb.add_constraint(&n2, &aux_f1, vec3::ZERO)?;
            }
        }
        Ok(())
    }

    /// Vertex stage: weighted derivative fit at the corners under the vertex
    /// constraints; with `pin` the vertex itself is fixed to the source point.
    pub fn vertex_stage(
        &self,
        vi: usize,
        values: &[Vec3],
        determined: &[bool],
    ) -> Result<StageOutcome> {
        let v = &self.topology().vertices[vi];
        let n = self.n();
        let first = v.corners[0];
        let (j1, j2) = first.index(0, 0, n);
        let pinned = self.dofs.class(first.patch, j1 * n + j2);
        let mut known = values.to_vec();
        let mut det = determined.to_vec();
        known[pinned] = self.source.jet(first.patch, first.param())?.point();
        det[pinned] = true;
        let classes: Vec<usize> = self
            .vertex_classes(v)
            .into_iter()
            .filter(|&c| c != pinned)
            .collect();
        let label = format!("vertex {}", v.id);
        let mut sb = StageBuilder::new(label, &self.dofs, &known, &det, classes, 0);
        let ff = self.forms();
        let s = self.sigma();
        for c in &v.corners {
            let jet = self.source.jet(c.patch, c.param())?;
            for a in 0..3 {
                for b in 0..3 - a {
                    if a + b == 0 {
                        continue;
                    }
                    sb.add_objective(s.powi((a + b) as i32), &ff.corner(c, a, b), jet.d[a][b])?;
                }
            }
        }
        for &(i, end) in &v.interfaces {
            self.add_vertex_interface_constraints(&mut sb, i, end)?;
        }
        let mut out = sb.solve()?;
        out.classes.push(pinned);
        out.values.push(known[pinned]);
        Ok(out)
    }

    /// Interface stage: edge-restricted weighted H1 fit of both sides.
    pub fn interface_stage(
        &self,
        i: usize,
        values: &[Vec3],
        determined: &[bool],
    ) -> Result<StageOutcome> {
        let iface = &self.topology().interfaces[i];
        let classes = self.interface_classes(i);
        let n0 = self.trace.dim();
        let n1 = self.transversal.dim();
        let label = format!("interface {}", iface.id);
        let mut sb = StageBuilder::new(label, &self.dofs, values, determined, classes, n0 + n1);
        let aux0 = sb.aux_col(0);
        let aux1 = sb.aux_col(n0);
        self.add_edge_objective(&mut sb, &iface.sides)?;
        self.add_interface_constraints(&mut sb, i, aux0, aux1)?;
        sb.solve()
    }

    fn add_edge_objective(&self, sb: &mut StageBuilder<'_>, sides: &[EdgeFrame; 2]) -> Result<()> {
        let ff = self.forms();
        let s = self.sigma();
        let quad = self.space.quadrature(self.space.degree() + 1)?;
        for f in sides {
            for &(t, w) in &quad {
                let jet = self.source_edge_jet(f, t)?;
                sb.add_objective(w, &ff.edge(f, t, 0, 0), jet.d[0][0])?;
                sb.add_objective(s * w, &ff.edge(f, t, 1, 0), jet.d[1][0])?;
                sb.add_objective(s * w, &ff.edge(f, t, 0, 1), jet.d[0][1])?;
            }
        }
        Ok(())
    }

    /// Weighted H1 Gram matrix, load and source norm of one patch.
    pub fn patch_gram(&self, patch: usize) -> Result<PatchGram> {
        let n = self.n();
        let q = self.space.degree() + 1;
        let s = self.sigma();
        let m = self.space.gram(0, 0, q)?;
        let d = self.space.gram(1, 1, q)?;
        let nn = n * n;
        let g = Mat::from_fn(nn, nn, |i, j| {
            let (i1, i2, j1, j2) = (i / n, i % n, j / n, j % n);
            m[(i1, j1)] * m[(i2, j2)] + s * (d[(i1, j1)] * m[(i2, j2)] + m[(i1, j1)] * d[(i2, j2)])
        });
        let quad = self.space.quadrature(q)?;
        let basis: Vec<_> = quad
            .iter()
            .map(|&(x, _)| self.space.eval_basis_unchecked(x, 1))
            .collect();
        let mut r = vec![vec3::ZERO; nn];
        let mut norm_sq = 0.0;
        for (qa, &(x, wx)) in quad.iter().enumerate() {
            for (qb, &(y, wy)) in quad.iter().enumerate() {
                let jet = self.source.jet(patch, [x, y])?;
                let w = wx * wy;
                let (s0, s1, s2) = (jet.d[0][0], jet.d[1][0], jet.d[0][1]);
                norm_sq += w * (vec3::dot(s0, s0) + s * (vec3::dot(s1, s1) + vec3::dot(s2, s2)));
                let (bu, bv) = (&basis[qa], &basis[qb]);
                for i1 in bu.indices() {
                    for i2 in bv.indices() {
                        let (u0, u1) = (bu.get(0, i1), bu.get(1, i1));
                        let (v0, v1) = (bv.get(0, i2), bv.get(1, i2));
                        let e = &mut r[i1 * n + i2];
                        vec3::axpy(e, w * u0 * v0, s0);
                        vec3::axpy(e, w * s * u1 * v0, s1);
                        vec3::axpy(e, w * s * u0 * v1, s2);
                    }
                }
            }
        }
        Ok(PatchGram { g, r, norm_sq })
    }

    /// Patch stage: weighted H1 fit of the remaining coefficients.
    pub fn patch_stage(
        &self,
        patch: usize,
        gram: &PatchGram,
        values: &[Vec3],
        determined: &[bool],
    ) -> Result<StageOutcome> {
        let n = self.n();
        let nn = n * n;
        let free: Vec<usize> = (0..nn)
            .filter(|&f| self.owner[self.dofs.class(patch, f)] == Owner::Patch(patch))
            .collect();
        let fixed: Vec<usize> = (0..nn)
            .filter(|&f| self.owner[self.dofs.class(patch, f)] != Owner::Patch(patch))
            .collect();
        let label = format!("patch {patch}");
        for &f in &fixed {
            if !determined[self.dofs.class(patch, f)] {
                return Err(Error::Degenerate {
                    stage: format!("{label}: boundary data missing"),
                });
            }
        }
        let xk: Vec<Vec3> = fixed
            .iter()
            .map(|&f| values[self.dofs.class(patch, f)])
            .collect();
        let gff = Mat::from_fn(free.len(), free.len(), |i, j| gram.g[(free[i], free[j])]);
        let rhs = Mat::from_fn(free.len(), 3, |i, k| {
            let mut v = gram.r[free[i]][k];
            for (j, &f) in fixed.iter().enumerate() {
                v -= gram.g[(free[i], f)] * xk[j][k];
            }
            v
        });
        let x = solve_spd(gff.as_ref(), rhs.as_ref()).map_err(|e| e.in_stage(label.clone()))?;
        let mut full = vec![vec3::ZERO; nn];
        for (i, &f) in free.iter().enumerate() {
            full[f] = [x[(i, 0)], x[(i, 1)], x[(i, 2)]];
        }
        for (j, &f) in fixed.iter().enumerate() {
            full[f] = xk[j];
        }
        let objective = gram.distance_sq(&full);
        let residual = (0..free.len())
            .map(|i| {
                let mut r = [0.0; 3];
                for k in 0..3 {
                    r[k] = (0..nn).map(|j| gram.g[(free[i], j)] * full[j][k]).sum::<f64>()
                        - gram.r[free[i]][k];
                }
                vec3::norm(r)
            })
            .fold(0.0, f64::max);
        Ok(StageOutcome {
            label: label.clone(),
            classes: free.iter().map(|&f| self.dofs.class(patch, f)).collect(),
            values: free.iter().map(|&f| full[f]).collect(),
            record: StageRecord {
                stage: label,
                unknowns: free.len(),
                constraints: 0,
                objective,
                constraint_residual: 0.0,
                stationarity_residual: residual,
            },
        })
    }
}

/// Weighted H1 normal equations of one patch.
pub struct PatchGram {
    pub g: Mat<f64>,
    pub r: Vec<Vec3>,
    pub norm_sq: f64,
}

impl PatchGram {
    /// `||F - S||^2 = x^T G x - 2 r^T x + ||S||^2` for full patch coefficients.
    pub fn distance_sq(&self, x: &[Vec3]) -> f64 {
        let nn = x.len();
        let mut v = self.norm_sq;
        for k in 0..3 {
            for i in 0..nn {
                let gx: f64 = (0..nn).map(|j| self.g[(i, j)] * x[j][k]).sum();
                v += x[i][k] * (gx - 2.0 * self.r[i][k]);
            }
        }
        v.max(0.0)
    }
}

/// Form for `d_d^a d_t^b` used by checks and tests.
pub fn edge_form(space: &SplineSpace1D, frame: &EdgeFrame, t: f64, a: usize, b: usize) -> Form {
    FormFactory {
        space,
        n: space.dim(),
    }
    .edge(frame, t, a, b)
}
