//! Dense complex linear algebra: matrix exponential, linear solves, and a
//! Jacobi eigensolver for Hermitian matrices.
//!
//! Dimensions in this crate never exceed 512, so everything is dense and
//! allocation-light rather than clever.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn norm_sqr(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn normalized(v: &CVec) -> CVec {
    let n = norm_sqr(v).sqrt();
    v.mapv(|z| z / n)
}

pub fn normalize_inplace(v: &mut CVec) {
    let n = norm_sqr(v).sqrt();
    v.mapv_inplace(|z| z / n);
}

/// Max column sum of absolute values.
pub fn one_norm(a: &CMat) -> f64 {
    let mut max = 0.0f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        max = max.max(s);
    }
    max
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    let scale = max_abs(a).max(1.0);
    max_abs_diff(a, &dagger(a)) <= tol * scale
}

/// Padé(13) coefficients for the scaling-and-squaring matrix exponential
/// (Higham 2005).
const PADE13: [f64; 14] = [
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

/// Matrix exponential exp(A) via scaling-and-squaring with Padé(13).
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scale = c(0.5f64.powi(s as i32));
    let a1 = a * scale;

    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(n);

    let u_inner = &a6 * c(PADE13[13]) + &a4 * c(PADE13[11]) + &a2 * c(PADE13[9]);
    let u_poly = a6.dot(&u_inner)
        + &a6 * c(PADE13[7])
        + &a4 * c(PADE13[5])
        + &a2 * c(PADE13[3])
        + &eye * c(PADE13[1]);
    let u = a1.dot(&u_poly);

    let v_inner = &a6 * c(PADE13[12]) + &a4 * c(PADE13[10]) + &a2 * c(PADE13[8]);
    let v = a6.dot(&v_inner)
        + &a6 * c(PADE13[6])
        + &a4 * c(PADE13[4])
        + &a2 * c(PADE13[2])
        + &eye * c(PADE13[0]);

    let num = &v + &u;
    let den = &v - &u;
    let mut r = solve(&den, &num);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();

    for col in 0..n {
        let mut piv_row = col;
        let mut piv_val = lu[[col, col]].norm();
        for row in (col + 1)..n {
            let v = lu[[row, col]].norm();
            if v > piv_val {
                piv_val = v;
                piv_row = row;
            }
        }
        assert!(piv_val > 0.0, "singular matrix in solve");
        if piv_row != col {
            for j in 0..n {
                lu.swap([col, j], [piv_row, j]);
            }
            for j in 0..m {
                x.swap([col, j], [piv_row, j]);
            }
        }
        let pivot = lu[[col, col]];
        for row in (col + 1)..n {
            let factor = lu[[row, col]] / pivot;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lu[[col, j]];
                lu[[row, j]] -= factor * v;
            }
            for j in 0..m {
                let v = x[[col, j]];
                x[[row, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for j in 0..m {
            let mut sum = x[[col, j]];
            for k in (col + 1)..n {
                sum -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    x
}

/// Compute exp(f·M)·v by a Taylor series on the vector, splitting the factor
/// until each partial exponent has small norm. Used for propagation over
/// arbitrary sub-steps where no dense propagator is cached.
pub fn expm_multiply_scaled(m: &CMat, factor: C64, v: &CVec) -> CVec {
    let scale = one_norm(m) * factor.norm();
    let splits = if scale > 1.0 { scale.ceil() as usize } else { 1 };
    let f = factor / c(splits as f64);
    let mut out = v.clone();
    for _ in 0..splits {
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..=80u32 {
            let t2 = m.dot(&term) * (f / c(f64::from(k)));
            let tn: f64 = t2.iter().map(|z| z.norm_sqr()).sum();
            let an: f64 = acc.iter().map(|z| z.norm_sqr()).sum();
            term = t2;
            acc += &term;
            if tn <= 1e-32 * an.max(1e-300) {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Eigenvalues of a Hermitian matrix by the cyclic complex Jacobi method,
/// returned in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    debug_assert!(is_hermitian(a, 1e-10));
    let mut m = a.clone();
    let scale = max_abs(&m).max(1e-300);
    let tol = 1e-14 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m[[p, q]];
                let b = beta.norm();
                if b <= tol * 1e-2 {
                    continue;
                }
                let alpha = m[[p, p]].re;
                let gamma = m[[q, q]].re;
                let phase = beta / c(b);
                // tan(2θ) = 2|β| / (α − γ)
                let tau = (alpha - gamma) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // R differs from identity at [p,p]=c, [p,q]=−s·phase,
                // [q,p]=s·conj(phase), [q,q]=c;  M ← R† M R.
                let s_pq = c(sth) * phase;
                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = mip * c(cth) + miq * s_pq.conj();
                    m[[i, q]] = -mip * s_pq + miq * c(cth);
                }
                for j in 0..n {
                    let mpj = m[[p, j]];
                    let mqj = m[[q, j]];
                    m[[p, j]] = mpj * c(cth) + mqj * s_pq;
                    m[[q, j]] = -mpj * s_pq.conj() + mqj * c(cth);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
