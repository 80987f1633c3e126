//! Thin wrappers over faer for the dense problems in this crate.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;

use crate::fourier::C64;

pub type CMat = Mat<C64>;

/// Full eigendecomposition `A = V diag(values) V^{-1}`.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub values: Vec<C64>,
    pub vectors: CMat,
    pub inverse: CMat,
    /// `||V||_F ||V^{-1}||_F`, a cheap proxy for the eigenvector condition number.
    pub condition: f64,
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>, String> {
    a.eigenvalues().map_err(|e| format!("{e:?}"))
}

pub fn eigen_decompose(a: &CMat) -> Result<EigenData, String> {
    let evd = a.eigen().map_err(|e| format!("{e:?}"))?;
    let n = a.nrows();
    let s = evd.S().column_vector();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let vectors = evd.U().to_owned();
    let inverse = vectors.partial_piv_lu().inverse();
    let condition = vectors.norm_l2() * inverse.norm_l2();
    if !condition.is_finite() || values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err("non-finite eigendecomposition".into());
    }
    Ok(EigenData { values, vectors, inverse, condition })
}

pub fn mat_vec(a: &CMat, x: &[C64]) -> Vec<C64> {
    let (r, c) = (a.nrows(), a.ncols());
    debug_assert_eq!(c, x.len());
    let mut out = vec![C64::new(0.0, 0.0); r];
    for j in 0..c {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for i in 0..r {
            out[i] += col[i] * xj;
        }
    }
    out
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

fn norm_one(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm = norm_one(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = C64::new(0.5f64.powi(s), 0.0);
    let a1: CMat = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = identity(n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| C64::new(B[k], 0.0);
    let lin = |x: &CMat, y: &CMat, z: &CMat, w: &CMat, cs: [usize; 4]| -> CMat {
        Mat::from_fn(n, n, |i, j| x[(i, j)] * c(cs[0]) + y[(i, j)] * c(cs[1]) + z[(i, j)] * c(cs[2]) + w[(i, j)] * c(cs[3]))
    };
    let inner_u = Mat::from_fn(n, n, |i, j| a6[(i, j)] * c(13) + a4[(i, j)] * c(11) + a2[(i, j)] * c(9));
    let tail_u = lin(&a6, &a4, &a2, &id, [7, 5, 3, 1]);
    let u_core = &a6 * &inner_u + tail_u;
    let u = &a1 * &u_core;
    let inner_v = Mat::from_fn(n, n, |i, j| a6[(i, j)] * c(12) + a4[(i, j)] * c(10) + a2[(i, j)] * c(8));
    let v = &a6 * &inner_v + lin(&a6, &a4, &a2, &id, [6, 4, 2, 0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Dense real solve `A x = b` by partial-pivot LU. Returns `None` when the result is not finite.
pub fn solve_real(a: &Mat<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}
