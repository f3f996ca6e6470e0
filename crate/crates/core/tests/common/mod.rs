//! Independent reference routines shared by the integration tests. Nothing
//! here calls into the closed forms under test.
#![allow(dead_code)]

use brickwall::linalg::{c, C64};
use faer::Mat;

pub fn cm(re: f64, im: f64) -> C64 {
    c(re, im)
}

pub fn pauli_mat(ch: char) -> Mat<C64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let e = match ch {
        '1' => [[o, z], [z, o]],
        'x' => [[z, o], [o, z]],
        'y' => [[z, -i], [i, z]],
        'z' => [[o, z], [z, -o]],
        _ => panic!("unknown Pauli {ch}"),
    };
    Mat::from_fn(2, 2, |r, s| e[r][s])
}

pub fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Tensor product of single-site Paulis, first character on the first site.
pub fn string(s: &str) -> Mat<C64> {
    let mut it = s.chars();
    let mut m = pauli_mat(it.next().unwrap());
    for ch in it {
        m = kron(&m, &pauli_mat(ch));
    }
    m
}

pub fn scale(m: &Mat<C64>, s: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn eye(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn norm1(a: &Mat<C64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a 20-term Taylor series.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    let nrm = norm1(a);
    let s = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = scale(a, c(0.5f64.powi(s), 0.0));
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..=20 {
        term = scale(&(&term * &a), c(1.0 / k as f64, 0.0));
        sum = &sum + &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn gate_mat(g: &[[C64; 4]; 4]) -> Mat<C64> {
    Mat::from_fn(4, 4, |i, j| g[i][j])
}

/// A two-site operator on sites `(a, b)` of an `n`-site chain, built by
/// expanding it in Pauli strings and tensoring explicitly.
pub fn embed_pair(op: &Mat<C64>, a: usize, b: usize, n: usize) -> Mat<C64> {
    let labels = ['1', 'x', 'y', 'z'];
    let dim = 1usize << n;
    let mut out = Mat::<C64>::zeros(dim, dim);
    for p in labels {
        for q in labels {
            let basis = kron(&pauli_mat(p), &pauli_mat(q));
            let mut coef = c(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    coef += basis[(j, i)].conj() * op[(j, i)];
                }
            }
            coef = coef / 4.0;
            if coef.norm() < 1e-15 {
                continue;
            }
            let mut s = vec!['1'; n];
            s[a] = p;
            s[b] = q;
            let st: String = s.into_iter().collect();
            out = &out + &scale(&string(&st), coef);
        }
    }
    out
}

/// Dense Floquet operator of a brickwork circuit: bonds `(2j, 2j+1)` first,
/// then `(2j+1, 2j+2)` including `(L−1, 0)` for periodic chains.
pub fn brickwork(odd: &[Mat<C64>], even: &[Mat<C64>], n: usize, periodic: bool) -> Mat<C64> {
    let mut u1 = eye(1 << n);
    for (j, g) in odd.iter().enumerate() {
        u1 = &embed_pair(g, 2 * j, 2 * j + 1, n) * &u1;
    }
    let mut u2 = eye(1 << n);
    for (j, g) in even.iter().enumerate() {
        let a = 2 * j + 1;
        let b = a + 1;
        if b == n && !periodic {
            continue;
        }
        u2 = &embed_pair(g, a, b % n, n) * &u2;
    }
    &u2 * &u1
}

/// `h = J(XX+YY) + ΔZZ + M(Z₁+Z₂) + B(Z₂−Z₁) + D(XY−YX) + A` from Pauli strings.
pub fn generator(j: f64, delta: f64, m: f64, b: f64, d: f64, a: f64) -> Mat<C64> {
    let r = |x: f64| c(x, 0.0);
    let mut h = scale(&(&string("xx") + &string("yy")), r(j));
    h = &h + &scale(&string("zz"), r(delta));
    h = &h + &scale(&(&string("z1") + &string("1z")), r(m));
    h = &h + &scale(&(&string("1z") - &string("z1")), r(b));
    h = &h + &scale(&(&string("xy") - &string("yx")), r(d));
    &h + &scale(&eye(4), r(a))
}

pub fn commutator(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    &(a * b) - &(b * a)
}

/// Fourth-order central difference `f'(x)`.
pub fn d1_five_point(f: impl Fn(f64) -> Mat<C64>, x: f64, h: f64) -> Mat<C64> {
    let w = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let mut acc = scale(&f(x + w[0].0 * h), c(w[0].1, 0.0));
    for &(k, wk) in &w[1..] {
        acc = &acc + &scale(&f(x + k * h), c(wk, 0.0));
    }
    scale(&acc, c(1.0 / (12.0 * h), 0.0))
}

/// Fourth-order central difference `f''(x)`.
pub fn d2_five_point(f: impl Fn(f64) -> Mat<C64>, x: f64, h: f64) -> Mat<C64> {
    let w = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
    let mut acc = scale(&f(x + w[0].0 * h), c(w[0].1, 0.0));
    for &(k, wk) in &w[1..] {
        acc = &acc + &scale(&f(x + k * h), c(wk, 0.0));
    }
    scale(&acc, c(1.0 / (12.0 * h * h), 0.0))
}
