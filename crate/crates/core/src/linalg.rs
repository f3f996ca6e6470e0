//! Small dense helpers on top of `faer` plus the bit-level kernels used by the
//! matrix-free paths.
//!
//! Qubit `q` of an `n`-qubit register lives at bit position `n - 1 - q`, so
//! site 0 is the most significant bit and a bitstring reads left to right.
//! Bit value 0 is spin up (σᶻ = +1).

use faer::prelude::*;
use faer::linalg::solvers::DenseSolveCore;

use crate::error::{Error, Result};

pub type C64 = faer::c64;
pub type Gate4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn adjoint(a: MatRef<'_, C64>) -> Mat<C64> {
    a.adjoint().to_owned()
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `‖AB − BA‖_max`.
pub fn commutator_norm(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let ab = a * b;
    let ba = b * a;
    max_abs_diff(ab.as_ref(), ba.as_ref())
}

/// `‖A†A − 1‖_max`.
pub fn unitarity_residual(a: MatRef<'_, C64>) -> f64 {
    let p = a.adjoint() * a;
    max_abs_diff(p.as_ref(), identity(a.nrows()).as_ref())
}

pub fn inverse(a: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let inv = a.partial_piv_lu().inverse();
    if inv.as_ref().norm_max().is_finite() {
        Ok(inv)
    } else {
        Err(Error::Numerical("singular matrix in inverse".into()))
    }
}

pub fn eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))
}

/// Eigenvalues and right eigenvectors (columns).
pub fn eigen(a: MatRef<'_, C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigen solver failed: {e:?}")))?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigen-decomposition of a unitary (or any normal) matrix with an orthonormal
/// eigenvector matrix: vectors inside clusters of nearly equal eigenvalues are
/// re-orthonormalized, which the general solver does not guarantee.
pub fn unitary_eigen(a: MatRef<'_, C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let (vals, mut vecs) = eigen(a)?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| phase(vals[i]).total_cmp(&phase(vals[j])));
    let tol = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[order[end]] - vals[order[end - 1]]).norm() < tol {
            end += 1;
        }
        // wrap-around cluster at phase 0 / 2π is merged by the check below
        let cluster: Vec<usize> = order[start..end].to_vec();
        gram_schmidt(&mut vecs, &cluster);
        start = end;
    }
    if n > 1 && (vals[order[0]] - vals[order[n - 1]]).norm() < tol {
        let mut cluster = Vec::new();
        let mut i = n;
        while i > 0 && (vals[order[i - 1]] - vals[order[0]]).norm() < tol {
            cluster.push(order[i - 1]);
            i -= 1;
        }
        let mut k = 0;
        while k < n && (vals[order[k]] - vals[order[0]]).norm() < tol {
            if !cluster.contains(&order[k]) {
                cluster.push(order[k]);
            }
            k += 1;
        }
        gram_schmidt(&mut vecs, &cluster);
    }
    Ok((vals, vecs))
}

fn gram_schmidt(v: &mut Mat<C64>, cols: &[usize]) {
    let n = v.nrows();
    for (a, &ca) in cols.iter().enumerate() {
        for &cb in &cols[..a] {
            let mut dot = ZERO;
            for i in 0..n {
                dot += v[(i, cb)].conj() * v[(i, ca)];
            }
            for i in 0..n {
                let t = v[(i, cb)];
                v[(i, ca)] -= dot * t;
            }
        }
        let mut nrm = 0.0;
        for i in 0..n {
            nrm += v[(i, ca)].norm_sqr();
        }
        let nrm = nrm.sqrt();
        for i in 0..n {
            v[(i, ca)] /= nrm;
        }
    }
}

/// Phase of a complex number mapped into [0, 2π).
pub fn phase(z: C64) -> f64 {
    wrap_2pi(z.arg())
}

pub fn wrap_2pi(x: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = x.rem_euclid(t);
    if r >= t {
        0.0
    } else {
        r
    }
}

/// Eigenvalues of a Hermitian matrix (ascending) with orthonormal eigenvectors.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigen solver failed: {e:?}")))?;
    let vals = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn gate_to_mat(g: &Gate4) -> Mat<C64> {
    Mat::from_fn(4, 4, |i, j| g[i][j])
}

pub fn mat_to_gate(m: MatRef<'_, C64>) -> Gate4 {
    let mut g = [[ZERO; 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = m[(i, j)];
        }
    }
    g
}

pub fn gate_mul(a: &Gate4, b: &Gate4) -> Gate4 {
    let mut r = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = ZERO;
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            r[i][j] = s;
        }
    }
    r
}

pub fn gate_adjoint(a: &Gate4) -> Gate4 {
    let mut r = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[j][i].conj();
        }
    }
    r
}

pub fn gate_identity() -> Gate4 {
    let mut r = [[ZERO; 4]; 4];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = ONE;
    }
    r
}

pub fn gate_max_diff(a: &Gate4, b: &Gate4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// True when every entry outside the U(1) pattern (corners plus central 2×2
/// block) is exactly zero.
pub fn is_mc_pattern(g: &Gate4) -> bool {
    mc_leak(g) == 0.0
}

/// Largest modulus among the entries that must vanish for a magnetization
/// conserving gate.
pub fn mc_leak(g: &Gate4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let allowed = i == j || (i == 1 && j == 2) || (i == 2 && j == 1);
            if !allowed {
                m = m.max(g[i][j].norm());
            }
        }
    }
    m
}

/// Applies a 4×4 gate to qubits `(q1, q2)` of an `n`-qubit state in place;
/// local index is `2·b(q1) + b(q2)`.
pub fn apply_two_qubit(psi: &mut [C64], n: usize, q1: usize, q2: usize, g: &Gate4) {
    debug_assert_eq!(psi.len(), 1usize << n);
    let b1 = 1usize << (n - 1 - q1);
    let b2 = 1usize << (n - 1 - q2);
    let mask = b1 | b2;
    if is_mc_pattern(g) {
        let (c0, c3) = (g[0][0], g[3][3]);
        let (m11, m12, m21, m22) = (g[1][1], g[1][2], g[2][1], g[2][2]);
        for i in 0..psi.len() {
            if i & mask != 0 {
                continue;
            }
            let (i01, i10, i11) = (i | b2, i | b1, i | mask);
            psi[i] *= c0;
            psi[i11] *= c3;
            let (x, y) = (psi[i01], psi[i10]);
            psi[i01] = m11 * x + m12 * y;
            psi[i10] = m21 * x + m22 * y;
        }
    } else {
        for i in 0..psi.len() {
            if i & mask != 0 {
                continue;
            }
            let idx = [i, i | b2, i | b1, i | mask];
            let v = [psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]];
            for (r, &ir) in idx.iter().enumerate() {
                psi[ir] = g[r][0] * v[0] + g[r][1] * v[1] + g[r][2] * v[2] + g[r][3] * v[3];
            }
        }
    }
}

/// Pauli matrices in the |0⟩ = up convention.
pub fn pauli(which: char) -> [[C64; 2]; 2] {
    match which {
        'x' => [[ZERO, ONE], [ONE, ZERO]],
        'y' => [[ZERO, -I], [I, ZERO]],
        'z' => [[ONE, ZERO], [ZERO, -ONE]],
        _ => [[ONE, ZERO], [ZERO, ONE]],
    }
}

pub fn kron2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Gate4 {
    let mut r = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    r
}

/// Embeds an operator acting on `k` consecutive (cyclic) qubits starting at
/// `start` into the full `n`-qubit space and accumulates `scale * op` into `out`.
pub fn add_local(out: &mut Mat<C64>, n: usize, start: usize, op: MatRef<'_, C64>, scale: C64) {
    let k = op.nrows().trailing_zeros() as usize;
    let dim = 1usize << n;
    let sites: Vec<usize> = (0..k).map(|t| (start + t) % n).collect();
    let bits: Vec<usize> = sites.iter().map(|&s| 1usize << (n - 1 - s)).collect();
    let mask: usize = bits.iter().fold(0, |a, b| a | b);
    let local = |x: usize| -> usize {
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(x & b != 0))
    };
    let spread = |l: usize| -> usize {
        let mut x = 0;
        for (t, &b) in bits.iter().enumerate() {
            if l & (1 << (k - 1 - t)) != 0 {
                x |= b;
            }
        }
        x
    };
    let spreads: Vec<usize> = (0..1usize << k).map(spread).collect();
    for col in 0..dim {
        let rest = col & !mask;
        let lc = local(col);
        for (lr, &sp) in spreads.iter().enumerate() {
            let v = op[(lr, lc)];
            if v != ZERO {
                out[(rest | sp, col)] += scale * v;
            }
        }
    }
}
