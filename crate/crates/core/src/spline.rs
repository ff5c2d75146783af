//! Univariate spline spaces on [0, 1] with uniform open knot vectors and their
//! tensor products.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::numerics::{gauss_legendre, solve_spd};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Knots closer than this are treated as equal.
const KNOT_EPS: f64 = 1e-13;

/// `S^{p,r}_k`: degree `p`, `C^r` at `k` uniform inner knots of multiplicity `p - r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpaceParams", into = "SpaceParams")]
pub struct SplineSpace1D {
    p: usize,
    r: usize,
    k: usize,
    knots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub p: usize,
    pub r: usize,
    pub k: usize,
}

impl From<SpaceParams> for SplineSpace1D {
    fn from(s: SpaceParams) -> Self {
        SplineSpace1D::build(s.p, s.r, s.k)
    }
}

impl From<SplineSpace1D> for SpaceParams {
    fn from(s: SplineSpace1D) -> Self {
        s.params()
    }
}

/// Basis functions `first..first+p+1` and their derivatives at one parameter.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub first: usize,
    /// `ders[d][i]` is the `d`-th derivative of basis function `first + i`.
    pub ders: Vec<Vec<f64>>,
}

impl BasisValues {
    /// Derivative `d` of global basis function `j` (zero outside the support).
    pub fn get(&self, d: usize, j: usize) -> f64 {
        if j < self.first || d >= self.ders.len() {
            return 0.0;
        }
        self.ders[d].get(j - self.first).copied().unwrap_or(0.0)
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.ders[0].len()
    }
}

impl SplineSpace1D {
    pub fn new(p: usize, r: usize, k: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("degree must be positive".into()));
        }
        if r >= p {
            return Err(Error::InvalidArgument(format!(
                "regularity {r} must be below degree {p}"
            )));
        }
        Ok(Self::build(p, r, k))
    }

    fn build(p: usize, r: usize, k: usize) -> Self {
        let mult = p - r.min(p.saturating_sub(1));
        let mut knots = vec![0.0; p + 1];
        for i in 1..=k {
            let x = i as f64 / (k + 1) as f64;
            knots.extend(std::iter::repeat_n(x, mult));
        }
        knots.extend(std::iter::repeat_n(1.0, p + 1));
        SplineSpace1D { p, r, k, knots }
    }

    pub fn params(&self) -> SpaceParams {
        SpaceParams {
            p: self.p,
            r: self.r,
            k: self.k,
        }
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn regularity(&self) -> usize {
        self.r
    }

    pub fn inner_knots(&self) -> usize {
        self.k
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `p + 1 + k (p - r)`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.p - 1
    }

    /// Uniform mesh size `1 / (k + 1)`.
    pub fn mesh_size(&self) -> f64 {
        1.0 / (self.k + 1) as f64
    }

    /// Trace space `S^{p,r+1}` and transversal space `S^{p-1,r}` on the same knots.
    pub fn companion_spaces(&self) -> Result<(SplineSpace1D, SplineSpace1D)> {
        if self.r + 1 >= self.p {
            return Err(Error::InvalidArgument(format!(
                "companion spaces need r <= p - 2 (p = {}, r = {})",
                self.p, self.r
            )));
        }
        Ok((
            SplineSpace1D::build(self.p, self.r + 1, self.k),
            SplineSpace1D::build(self.p - 1, self.r, self.k),
        ))
    }

    /// Same degree and regularity with `2^levels (k + 1) - 1` inner knots.
    pub fn refine_dyadic(&self, levels: u32) -> SplineSpace1D {
        SplineSpace1D::build(self.p, self.r, (self.k + 1) * (1usize << levels) - 1)
    }

    /// Index `mu` with `t_mu <= x < t_{mu+1}`; the last non-empty span at `x = 1`.
    pub fn find_span(&self, x: f64) -> usize {
        let n = self.dim();
        if x >= self.knots[n] {
            return n - 1;
        }
        let mut lo = self.p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Non-zero basis functions and derivatives up to `max_deriv` at `x`; left limit at 1.
    pub fn eval_basis(&self, x: f64, max_deriv: usize) -> Result<BasisValues> {
        if !(-KNOT_EPS..=1.0 + KNOT_EPS).contains(&x) || x.is_nan() {
            return Err(Error::Domain { value: x });
        }
        Ok(self.eval_basis_unchecked(x.clamp(0.0, 1.0), max_deriv))
    }

    pub(crate) fn eval_basis_unchecked(&self, x: f64, max_deriv: usize) -> BasisValues {
        let p = self.p;
        let t = &self.knots;
        let span = self.find_span(x);
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let nd = max_deriv.min(p);
        let mut ders = vec![vec![0.0; p + 1]; max_deriv + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kd in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - kd as isize;
                let pk = p - kd;
                if r >= kd {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize {
                    kd - 1
                } else {
                    p - r
                };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kd] = -a[s1][kd - 1] / ndu[pk + 1][r];
                    d += a[s2][kd] * ndu[r][pk];
                }
                ders[kd][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (kd, row) in ders.iter_mut().enumerate().take(nd + 1).skip(1) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= (p - kd) as f64;
        }
        BasisValues {
            first: span - p,
            ders,
        }
    }

    /// Greville abscissae `(t_{j+1} + ... + t_{j+p}) / p`.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.p;
        (0..self.dim())
            .map(|j| self.knots[j + 1..=j + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// The `k + 1` non-empty knot spans.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        let h = self.mesh_size();
        (0..=self.k)
            .map(|i| (i as f64 * h, if i == self.k { 1.0 } else { (i + 1) as f64 * h }))
            .collect()
    }

    /// Composite Gauss rule with `q` points per span.
    pub fn quadrature(&self, q: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(q * (self.k + 1));
        for (a, b) in self.spans() {
            out.extend(gauss_legendre(q, a, b)?.iter());
        }
        Ok(out)
    }

    /// Evaluates `sum_j c_j N_j^{(d)}(x)`.
    pub fn eval(&self, coefs: &[f64], x: f64, d: usize) -> Result<f64> {
        let b = self.eval_basis(x, d)?;
        Ok(b.indices().map(|j| coefs[j] * b.get(d, j)).sum())
    }

    /// Gram matrix `int N_i^{(da)} N_j^{(db)}` with `q` Gauss points per span.
    pub fn gram(&self, da: usize, db: usize, q: usize) -> Result<Mat<f64>> {
        let n = self.dim();
        let mut g = Mat::zeros(n, n);
        for (x, w) in self.quadrature(q)? {
            let b = self.eval_basis_unchecked(x, da.max(db));
            for i in b.indices() {
                for j in b.indices() {
                    g[(i, j)] += w * b.get(da, i) * b.get(db, j);
                }
            }
        }
        Ok(g)
    }

    /// Collocation matrix `N_j(x_i)`.
    pub fn collocation(&self, xs: &[f64], d: usize) -> Result<Mat<f64>> {
        let mut m = Mat::zeros(xs.len(), self.dim());
        for (i, &x) in xs.iter().enumerate() {
            let b = self.eval_basis(x, d)?;
            for j in b.indices() {
                m[(i, j)] = b.get(d, j);
            }
        }
        Ok(m)
    }

    /// Interpolant at the Greville abscissae.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        use faer::linalg::solvers::Solve;
        let g = self.greville();
        let a = self.collocation(&g, 0)?;
        let rhs = Mat::from_fn(g.len(), 1, |i, _| f(g[i]));
        let x = a.partial_piv_lu().solve(&rhs);
        Ok((0..g.len()).map(|i| x[(i, 0)]).collect())
    }

    /// L2 projection with `p + 1` Gauss points per span.
    pub fn l2_project(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let q = self.p + 1;
        let n = self.dim();
        let m = self.gram(0, 0, q)?;
        let mut rhs = Mat::zeros(n, 1);
        for (x, w) in self.quadrature(q)? {
            let b = self.eval_basis_unchecked(x, 0);
            let fx = f(x);
            for j in b.indices() {
                rhs[(j, 0)] += w * fx * b.get(0, j);
            }
        }
        let c = solve_spd(m.as_ref(), rhs.as_ref())?;
        Ok((0..n).map(|i| c[(i, 0)]).collect())
    }

    /// Whether every function of `self` lies in `fine`.
    pub fn is_nested_in(&self, fine: &SplineSpace1D) -> bool {
        if fine.p < self.p {
            return false;
        }
        // each coarse breakpoint must appear in fine with continuity no higher
        let coarse_mult = breakpoint_multiplicities(&self.knots);
        let fine_mult = breakpoint_multiplicities(&fine.knots);
        coarse_mult.iter().all(|&(x, m)| {
            let cont_coarse = self.p as isize - m as isize;
            let m_f = fine_mult
                .iter()
                .find(|(y, _)| (x - y).abs() < KNOT_EPS)
                .map(|&(_, m)| m)
                .unwrap_or(0);
            let cont_fine = fine.p as isize - m_f as isize;
            cont_fine <= cont_coarse
        })
    }

    /// Matrix `P` with `N^coarse_j = sum_i P_ij N^fine_i`, by Greville interpolation.
    pub fn prolongation(&self, fine: &SplineSpace1D) -> Result<Mat<f64>> {
        use faer::linalg::solvers::Solve;
        if !self.is_nested_in(fine) {
            return Err(Error::InvalidArgument(format!(
                "S^{{{},{}}}_{} is not nested in S^{{{},{}}}_{}",
                self.p, self.r, self.k, fine.p, fine.r, fine.k
            )));
        }
        let g = fine.greville();
        let a = fine.collocation(&g, 0)?;
        let rhs = self.collocation(&g, 0)?;
        Ok(a.partial_piv_lu().solve(&rhs))
    }
}

fn breakpoint_multiplicities(knots: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &t in knots {
        match out.last_mut() {
            Some((x, m)) if (t - *x).abs() < KNOT_EPS => *m += 1,
            _ => out.push((t, 1)),
        }
    }
    out
}

/// Tensor-product space `S ⊗ S`, coefficient index `j1 * n + j2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpace {
    pub space: SplineSpace1D,
}

impl TensorSpace {
    pub fn new(space: SplineSpace1D) -> Self {
        TensorSpace { space }
    }

    pub fn n(&self) -> usize {
        self.space.dim()
    }

    pub fn dim(&self) -> usize {
        self.n() * self.n()
    }

    #[inline]
    pub fn index(&self, j1: usize, j2: usize) -> usize {
        j1 * self.n() + j2
    }

    /// Evaluates `d1^a d2^b` of a point-valued patch at `xi`.
    pub fn eval_patch(&self, coefs: &[Vec3], xi: [f64; 2], a: usize, b: usize) -> Result<Vec3> {
        let bu = self.space.eval_basis(xi[0], a)?;
        let bv = self.space.eval_basis(xi[1], b)?;
        Ok(self.combine(coefs, &bu, &bv, a, b))
    }

    /// Evaluates `d1^a d2^b` of a scalar patch at `xi`.
    pub fn eval_scalar(&self, coefs: &[f64], xi: [f64; 2], a: usize, b: usize) -> Result<f64> {
        let bu = self.space.eval_basis(xi[0], a)?;
        let bv = self.space.eval_basis(xi[1], b)?;
        let mut s = 0.0;
        for i in bu.indices() {
            for j in bv.indices() {
                s += coefs[self.index(i, j)] * bu.get(a, i) * bv.get(b, j);
            }
        }
        Ok(s)
    }

    pub(crate) fn combine(
        &self,
        coefs: &[Vec3],
        bu: &BasisValues,
        bv: &BasisValues,
        a: usize,
        b: usize,
    ) -> Vec3 {
        let mut s = vec3::ZERO;
        for i in bu.indices() {
            let wu = bu.get(a, i);
            if wu == 0.0 {
                continue;
            }
            for j in bv.indices() {
                vec3::axpy(&mut s, wu * bv.get(b, j), coefs[self.index(i, j)]);
            }
        }
        s
    }

    /// Tensor L2 projection of a point-valued map.
    pub fn l2_project(&self, f: impl Fn([f64; 2]) -> Vec3) -> Result<Vec<Vec3>> {
        let n = self.n();
        let q = self.space.degree() + 1;
        let quad = self.space.quadrature(q)?;
        let m = self.space.gram(0, 0, q)?;
        let basis: Vec<BasisValues> = quad
            .iter()
            .map(|&(x, _)| self.space.eval_basis_unchecked(x, 0))
            .collect();
        let mut out = vec![vec3::ZERO; n * n];
        for c in 0..3 {
            let mut r = Mat::<f64>::zeros(n, n);
            for (qa, &(xa, wa)) in quad.iter().enumerate() {
                for (qb, &(xb, wb)) in quad.iter().enumerate() {
                    let v = f([xa, xb])[c] * wa * wb;
                    for i in basis[qa].indices() {
                        for j in basis[qb].indices() {
                            r[(i, j)] += v * basis[qa].get(0, i) * basis[qb].get(0, j);
                        }
                    }
                }
            }
            // coefficients C = M^{-1} R M^{-1}
            let y = solve_spd(m.as_ref(), r.as_ref())?;
            let x = solve_spd(m.as_ref(), y.transpose())?;
            for i in 0..n {
                for j in 0..n {
                    out[self.index(i, j)][c] = x[(j, i)];
                }
            }
        }
        Ok(out)
    }

    /// Interpolation at the tensor Greville grid.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> Vec3) -> Result<Vec<Vec3>> {
        use faer::linalg::solvers::Solve;
        let n = self.n();
        let g = self.space.greville();
        let a = self.space.collocation(&g, 0)?;
        let lu = a.partial_piv_lu();
        let mut out = vec![vec3::ZERO; n * n];
        for c in 0..3 {
            let vals = Mat::from_fn(n, n, |i, j| f([g[i], g[j]])[c]);
            let y = lu.solve(&vals);
            let x = lu.solve(y.transpose());
            for i in 0..n {
                for j in 0..n {
                    out[self.index(i, j)][c] = x[(j, i)];
                }
            }
        }
        Ok(out)
    }

    /// Refined coefficients of a patch under nested refinement `P ⊗ P`.
    pub fn prolong_coefs<T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>>(
        &self,
        p1d: &Mat<f64>,
        coefs: &[T],
    ) -> Vec<T> {
        let nc = self.n();
        let nf = p1d.nrows();
        let mut tmp = vec![T::default(); nf * nc];
        for i in 0..nf {
            for j1 in 0..nc {
                let w = p1d[(i, j1)];
                if w == 0.0 {
                    continue;
                }
                for j2 in 0..nc {
                    tmp[i * nc + j2] += coefs[j1 * nc + j2] * w;
                }
            }
        }
        let mut out = vec![T::default(); nf * nf];
        for i in 0..nf {
            for j in 0..nf {
                let mut s = T::default();
                for j2 in 0..nc {
                    let w = p1d[(j, j2)];
                    if w != 0.0 {
                        s += tmp[i * nc + j2] * w;
                    }
                }
                out[i * nf + j] = s;
            }
        }
        out
    }
}

/// Point-valued coefficient wrapper so `prolong_coefs` can act on control points.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct P3(pub Vec3);

impl std::ops::AddAssign for P3 {
    fn add_assign(&mut self, o: P3) {
        self.0 = vec3::add(self.0, o.0);
    }
}

impl std::ops::Mul<f64> for P3 {
    type Output = P3;
    fn mul(self, s: f64) -> P3 {
        P3(vec3::scale(s, self.0))
    }
}

/// Refines point-valued patch coefficients from `coarse` to the nested `fine` space.
pub fn prolong_points(coarse: &TensorSpace, fine: &SplineSpace1D, coefs: &[Vec3]) -> Result<Vec<Vec3>> {
    let p = coarse.space.prolongation(fine)?;
    let wrapped: Vec<P3> = coefs.iter().map(|&c| P3(c)).collect();
    Ok(coarse
        .prolong_coefs(&p, &wrapped)
        .into_iter()
        .map(|c| c.0)
        .collect())
}
