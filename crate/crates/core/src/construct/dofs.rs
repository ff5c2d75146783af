//! Shared degrees of freedom and the per-stage quadratic program builder.

use std::collections::HashMap;

use faer::Mat;

use crate::mpatch::{Corner, EdgeFrame, Topology};
use crate::numerics::{solve_saddle, QuadraticProgram, SaddleSolution};
use crate::spline::SplineSpace1D;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Sparse linear functional over global coefficient indices `patch * n^2 + j1 * n + j2`.
pub type Form = Vec<(usize, f64)>;

/// Coefficients identified along interfaces: glued edge rows share one class.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n: usize,
    pub num_patches: usize,
    pub class_of: Vec<usize>,
    pub num_classes: usize,
}

impl DofMap {
    pub fn new(topology: &Topology, n: usize) -> Self {
        let total = topology.num_patches * n * n;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for iface in &topology.interfaces {
            let [a, b] = iface.sides;
            for t in 0..n {
                let ga = a.patch * n * n + a.flat(0, t, n);
                let gb = b.patch * n * n + b.flat(0, t, n);
                let (ra, rb) = (find(&mut parent, ga), find(&mut parent, gb));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut class_of = vec![usize::MAX; total];
        let mut root_class: HashMap<usize, usize> = HashMap::new();
        for g in 0..total {
            let r = find(&mut parent, g);
            let next = root_class.len();
            class_of[g] = *root_class.entry(r).or_insert(next);
        }
        DofMap {
            n,
            num_patches: topology.num_patches,
            class_of,
            num_classes: root_class.len(),
        }
    }

    #[inline]
    pub fn global(&self, patch: usize, flat: usize) -> usize {
        patch * self.n * self.n + flat
    }

    #[inline]
    pub fn class(&self, patch: usize, flat: usize) -> usize {
        self.class_of[self.global(patch, flat)]
    }

    /// Expands class values to per-patch control points.
    pub fn expand(&self, values: &[Vec3]) -> Vec<Vec<Vec3>> {
        let nn = self.n * self.n;
        (0..self.num_patches)
            .map(|p| (0..nn).map(|f| values[self.class_of[p * nn + f]]).collect())
            .collect()
    }

    /// Collects class values from per-patch control points (first occurrence wins).
    pub fn collect(&self, patches: &[Vec<Vec3>]) -> Vec<Vec3> {
        let nn = self.n * self.n;
        let mut out = vec![vec3::ZERO; self.num_classes];
        for (g, &c) in self.class_of.iter().enumerate().rev() {
            out[c] = patches[g / nn][g % nn];
        }
        out
    }
}

/// Evaluates linear functionals of patch coefficients.
pub struct FormFactory<'a> {
    pub space: &'a SplineSpace1D,
    pub n: usize,
}

impl FormFactory<'_> {
    /// `d_d^a d_t^b` at the local point `(0, t)` of an edge frame.
    pub fn edge(&self, frame: &EdgeFrame, t: f64, a: usize, b: usize) -> Form {
        let bd = self.space.eval_basis_unchecked(0.0, a);
        let bt = self.space.eval_basis_unchecked(t, b);
        let base = frame.patch * self.n * self.n;
        let mut out = Vec::with_capacity((a + 1) * bt.ders[0].len());
        for di in bd.indices() {
            let wd = bd.get(a, di);
            if wd == 0.0 {
                continue;
            }
            for ti in bt.indices() {
                let w = wd * bt.get(b, ti);
                if w != 0.0 {
                    out.push((base + frame.flat(di, ti, self.n), w));
                }
            }
        }
        out
    }

    /// `d1^a d2^b` at a patch corner in the patch's own parameters.
    pub fn corner(&self, corner: &Corner, a: usize, b: usize) -> Form {
        let [x, y] = corner.param();
        let bu = self.space.eval_basis_unchecked(x, a);
        let bv = self.space.eval_basis_unchecked(y, b);
        let base = corner.patch * self.n * self.n;
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

/// `sum_k s_k f_k` of forms.
pub fn combine(parts: &[(f64, &Form)]) -> Form {
    let mut out: Form = Vec::new();
    for (s, f) in parts {
        if *s == 0.0 {
            continue;
        }
        out.extend(f.iter().map(|&(g, w)| (g, s * w)));
    }
    out
}

/// Accumulates one equality-constrained least-squares problem over a subset of classes
/// plus auxiliary unknowns.
pub struct StageBuilder<'a> {
    pub label: String,
    dofs: &'a DofMap,
    known: &'a [Vec3],
    determined: &'a [bool],
    col_of: HashMap<usize, usize>,
    pub classes: Vec<usize>,
    n_aux: usize,
    h: Mat<f64>,
    c: Mat<f64>,
    rows: Vec<(Vec<(usize, f64)>, Vec3)>,
    obj_const: f64,
}

impl<'a> StageBuilder<'a> {
    pub fn new(
        label: String,
        dofs: &'a DofMap,
        known: &'a [Vec3],
        determined: &'a [bool],
        classes: Vec<usize>,
        n_aux: usize,
    ) -> Self {
        let col_of: HashMap<usize, usize> =
            classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let nc = classes.len() + n_aux;
        StageBuilder {
            label,
            dofs,
            known,
            determined,
            col_of,
            classes,
            n_aux,
            h: Mat::zeros(nc, nc),
            c: Mat::zeros(nc, 3),
            rows: Vec::new(),
            obj_const: 0.0,
        }
    }

    pub fn aux_col(&self, i: usize) -> usize {
        debug_assert!(i < self.n_aux);
        self.classes.len() + i
    }

    pub fn num_cols(&self) -> usize {
        self.classes.len() + self.n_aux
    }

    /// Splits a form into unknown columns and the value of its fixed part.
    fn split(&self, form: &Form) -> Result<(Vec<(usize, f64)>, Vec3)> {
        let mut cols: Vec<(usize, f64)> = Vec::with_capacity(form.len());
        let mut fixed = vec3::ZERO;
        for &(g, w) in form {
            let cls = self.dofs.class_of[g];
            match self.col_of.get(&cls) {
                Some(&col) => cols.push((col, w)),
                None => {
                    if !self.determined[cls] {
                        return Err(Error::Degenerate {
                            stage: format!("{}: reads an undetermined coefficient", self.label),
                        });
                    }
                    vec3::axpy(&mut fixed, w, self.known[cls]);
                }
            }
        }
        cols.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(cols.len());
        for (c, w) in cols {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += w,
                _ => merged.push((c, w)),
            }
        }
        Ok((merged, fixed))
    }

    /// Adds `weight * ||form(x) - target||^2 / 2` to the objective.
    pub fn add_objective(&mut self, weight: f64, form: &Form, target: Vec3) -> Result<()> {
        let (cols, fixed) = self.split(form)?;
        let off = vec3::sub(fixed, target);
        for &(i, wi) in &cols {
            for &(j, wj) in &cols {
                self.h[(i, j)] += weight * wi * wj;
            }
            for k in 0..3 {
                self.c[(i, k)] += weight * wi * off[k];
            }
        }
        self.obj_const += weight * vec3::dot(off, off);
        Ok(())
    }

    /// Adds a quadratic term `x_i^T q x_j` directly between two classes (both unknown).
    pub fn add_hessian_entry(&mut self, gi: usize, gj: usize, q: f64) {
        let ci = self.col_of[&self.dofs.class_of[gi]];
        let cj = self.col_of[&self.dofs.class_of[gj]];
        self.h[(ci, cj)] += q;
    }

    /// Adds `-r^T x_i` to the objective for the class of global coefficient `gi`.
    pub fn add_linear(&mut self, gi: usize, r: Vec3) {
        let ci = self.col_of[&self.dofs.class_of[gi]];
        for k in 0..3 {
            self.c[(ci, k)] -= r[k];
        }
    }

    /// Adds the constraint `form(x) + sum aux = rhs`.
    pub fn add_constraint(&mut self, form: &Form, aux: &[(usize, f64)], rhs: Vec3) -> Result<()> {
        let (mut cols, fixed) = self.split(form)?;
        cols.extend_from_slice(aux);
        self.rows.push((cols, vec3::sub(rhs, fixed)));
        Ok(())
    }

    /// Solves the program; returns class values, auxiliary values and diagnostics.
    pub fn solve(self) -> Result<StageOutcome> {
        let nc = self.num_cols();
        let m = self.rows.len();
        let mut a = Mat::zeros(m, nc);
        let mut b = Mat::zeros(m, 3);
        for (r, (cols, rhs)) in self.rows.iter().enumerate() {
            for &(c, w) in cols {
                a[(r, c)] += w;
            }
            for k in 0..3 {
                b[(r, k)] = rhs[k];
            }
        }
        let qp = QuadraticProgram {
            h: self.h,
            c: self.c,
            a,
            b,
        };
        let sol: SaddleSolution = solve_saddle(&qp).map_err(|e| e.in_stage(self.label.clone()))?;
        // objective = sum w ||form x - target||^2 = x^T H x + 2 c^T x + const
        let mut objective = self.obj_const;
        let hx = &qp.h * &sol.x;
        for k in 0..3 {
            for i in 0..nc {
                objective += sol.x[(i, k)] * (hx[(i, k)] + 2.0 * qp.c[(i, k)]);
            }
        }
        let values = (0..self.classes.len())
            .map(|i| [sol.x[(i, 0)], sol.x[(i, 1)], sol.x[(i, 2)]])
            .collect();
        Ok(StageOutcome {
            label: self.label,
            classes: self.classes,
            values,
            record: StageRecord {
                stage: String::new(),
                unknowns: nc,
                constraints: m,
                objective: objective.max(0.0),
                constraint_residual: sol.constraint_residual,
                stationarity_residual: sol.stationarity_residual,
            },
        })
    }
}

/// Diagnostics of one solved stage problem.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub unknowns: usize,
    pub constraints: usize,
    pub objective: f64,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
}

pub struct StageOutcome {
    pub label: String,
    pub classes: Vec<usize>,
    pub values: Vec<Vec3>,
    pub record: StageRecord,
}

impl StageOutcome {
    pub fn write(&self, values: &mut [Vec3], determined: &mut [bool]) {
        for (&c, &v) in self.classes.iter().zip(&self.values) {
            values[c] = v;
            determined[c] = true;
        }
    }

    pub fn into_record(self) -> StageRecord {
        StageRecord {
            stage: self.label,
            ..self.record
        }
    }
}
