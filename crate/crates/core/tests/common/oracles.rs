//! Dense oracles in plain `Vec` arithmetic for the saddle-point and least-squares kernels.
#![allow(dead_code)]

use asg1::numerics::{lsq_min_norm, solve_saddle, QuadraticProgram};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn to_mat(a: &Dense, cols: usize) -> Mat<f64> {
    Mat::from_fn(a.len(), cols, |i, j| a[i][j])
}

pub fn col(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn transpose(a: &Dense, cols: usize) -> Dense {
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| (0..cols).map(|j| (0..inner).map(|k| r[k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1.0)
}

/// `n x n` orthogonal matrix by modified Gram-Schmidt on a Gaussian-like random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let mut q: Dense = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = norm(&v);
        if nv > 1e-3 {
            q.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    // rows are orthonormal; return columns = rows^T
    transpose(&q, n)
}

/// `A = U diag(s) V^T` with known factors, so the pseudoinverse is known exactly.
pub struct Factored {
    pub a: Dense,
    pub u: Dense,
    pub s: Vec<f64>,
    pub v: Dense,
}

pub fn factored(rng: &mut ChaCha8Rng, m: usize, n: usize, rank: usize) -> Factored {
    let u = random_orthogonal(rng, m);
    let v = random_orthogonal(rng, n);
    let s: Vec<f64> = (0..rank).map(|_| rng.random_range(0.5..2.0)).collect();
    let a = (0..m)
        .map(|i| (0..n).map(|j| (0..rank).map(|k| u[i][k] * s[k] * v[j][k]).sum()).collect())
        .collect();
    Factored { a, u, s, v }
}

pub fn pinv_apply(f: &Factored, b: &[f64]) -> Vec<f64> {
    let n = f.v.len();
    let mut x = vec![0.0; n];
    for (k, &sk) in f.s.iter().enumerate() {
        let c: f64 = (0..b.len()).map(|i| f.u[i][k] * b[i]).sum::<f64>() / sk;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += c * f.v[j][k];
        }
    }
    x
}

/// Gaussian elimination with full pivoting on a square nonsingular system.
pub fn dense_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, &v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    (pi, pj, best) = (i, j, v.abs());
                }
            }
        }
        assert!(best > 1e-14, "oracle system is singular");
        a.swap(k, pi);
        b.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        perm.swap(k, pj);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - s) / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    x
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let q = random_orthogonal(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| q[i][k] * d[k] * q[j][k]).sum()).collect())
        .collect()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn lsq_case(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1..9);
    let n = rng.random_range(1..9);
    let rank = rng.random_range(0..=m.min(n));
    let f = factored(rng, m, n, rank);
    let b = random_vec(rng, m);
    let x = lsq_min_norm(to_mat(&f.a, n).as_ref(), Mat::from_fn(m, 1, |i, _| b[i]).as_ref()).unwrap();
    rel_diff(&col(&x, 0), &pinv_apply(&f, &b))
}

/// SPD objective, full-row-rank constraints: the KKT matrix is nonsingular.
fn saddle_case_regular(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(2..9);
    let m = rng.random_range(0..n);
    let h = random_spd(rng, n);
    let a = factored(rng, m, n, m).a;
    let c = random_vec(rng, n);
    let b = random_vec(rng, m);
    let mut kkt: Dense = vec![vec![0.0; n + m]; n + m];
    for i in 0..n {
        kkt[i][..n].copy_from_slice(&h[i]);
    }
    for (r, row) in a.iter().enumerate() {
        for j in 0..n {
            kkt[n + r][j] = row[j];
            kkt[j][n + r] = row[j];
        }
    }
    let mut rhs: Vec<f64> = c.iter().map(|v| -v).collect();
    rhs.extend_from_slice(&b);
    let oracle = dense_solve(kkt, rhs);
    let sol = solve_saddle(&QuadraticProgram {
        h: to_mat(&h, n),
        c: Mat::from_fn(n, 1, |i, _| c[i]),
        a: if m == 0 { Mat::zeros(0, n) } else { to_mat(&a, n) },
        b: Mat::from_fn(m, 1, |i, _| b[i]),
    })
    .unwrap();
    rel_diff(&col(&sol.x, 0), &oracle[..n])
}

/// Duplicated constraint rows and a zero objective: the answer is `pinv(A) b`.
fn saddle_case_redundant(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(2..9);
    let rank = rng.random_range(1..n);
    let f = factored(rng, rank, n, rank);
    let x0 = random_vec(rng, n);
    let b0 = matvec(&f.a, &x0);
    let mut a = f.a.clone();
    let mut b = b0.clone();
    let dup = rng.random_range(0..rank);
    a.push(f.a[dup].iter().map(|v| 2.0 * v).collect());
    b.push(2.0 * b0[dup]);
    let m = a.len();
    let sol = solve_saddle(&QuadraticProgram {
        h: Mat::zeros(n, n),
        c: Mat::zeros(n, 1),
        a: to_mat(&a, n),
        b: Mat::from_fn(m, 1, |i, _| b[i]),
    })
    .unwrap();
    rel_diff(&col(&sol.x, 0), &pinv_apply(&f, &b0))
}

/// Positive semidefinite objective whose kernel meets the constraint kernel: the minimal
/// norm minimiser is the unique minimiser of `x^T x` over the solution set, obtained here
/// from the regular KKT system of `min 1/2 x^T (H + P) x + c^T x` with `P` the projector
/// onto that common kernel (the objective is flat there, so adding `P` selects min norm).
fn saddle_case_semidefinite(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(3..9);
    let q = random_orthogonal(rng, n);
    // columns of q: first `kh` span the kernel of H; A annihilates the first `kc <= kh`
    let kh = rng.random_range(1..n);
    let kc = rng.random_range(1..=kh);
    let d: Vec<f64> = (0..n).map(|k| if k < kh { 0.0 } else { rng.random_range(0.5..3.0) }).collect();
    let h: Dense = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| q[i][k] * d[k] * q[j][k]).sum()).collect())
        .collect();
    let m = n - kc;
    let mix = random_orthogonal(rng, m);
    let qt = transpose(&q, n);
    let a: Dense = matmul(&mix, &qt[kc..].to_vec());
    // c orthogonal to the common kernel keeps the objective bounded
    let mut c = random_vec(rng, n);
    for k in 0..kc {
        let dk: f64 = (0..n).map(|i| c[i] * q[i][k]).sum();
        (0..n).for_each(|i| c[i] -= dk * q[i][k]);
    }
    let b = random_vec(rng, m);
    let mut hp = h.clone();
    for i in 0..n {
        for j in 0..n {
            hp[i][j] += (0..kc).map(|k| q[i][k] * q[j][k]).sum::<f64>();
        }
    }
    let mut kkt: Dense = vec![vec![0.0; n + m]; n + m];
    for i in 0..n {
        kkt[i][..n].copy_from_slice(&hp[i]);
    }
    for (r, row) in a.iter().enumerate() {
        for j in 0..n {
            kkt[n + r][j] = row[j];
            kkt[j][n + r] = row[j];
        }
    }
    let mut rhs: Vec<f64> = c.iter().map(|v| -v).collect();
    rhs.extend_from_slice(&b);
    let oracle = dense_solve(kkt, rhs);
    let sol = solve_saddle(&QuadraticProgram {
        h: to_mat(&h, n),
        c: Mat::from_fn(n, 1, |i, _| c[i]),
        a: to_mat(&a, n),
        b: Mat::from_fn(m, 1, |i, _| b[i]),
    })
    .unwrap();
    rel_diff(&col(&sol.x, 0), &oracle[..n])
}

/// Worst relative deviation over the 100 randomized cases (25 per family).
pub fn randomized_suite(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        worst = worst.max(lsq_case(&mut rng));
        worst = worst.max(saddle_case_regular(&mut rng));
        worst = worst.max(saddle_case_redundant(&mut rng));
        worst = worst.max(saddle_case_semidefinite(&mut rng));
    }
    worst
}

