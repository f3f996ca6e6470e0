use faer::Mat;

use super::rmatrix::{r_matrix, Phase, RMatrixParams};
use crate::error::{param, Error, Result};
use crate::linalg::{apply_two_qubit, c, gate_mul, Gate4, C64, ONE, ZERO};
use crate::operators::{sector_basis, Block, BlockOperator, Operator, DENSE_MAX_L};

/// `T(x; u) = tr_𝔞[R_{1𝔞}(x₊) R_{2𝔞}(x₋) ⋯ R_{L𝔞}(x₋)]` with `x± = x ± u/2`
/// on sites 1, 3, … and 2, 4, … respectively, and `R = PŘ`.
#[derive(Clone, Copy, Debug)]
pub struct TransferMatrixSpec {
    pub params: RMatrixParams,
    pub x: C64,
    pub l: usize,
}

pub(crate) fn swap_gate() -> Gate4 {
    let mut p = [[ZERO; 4]; 4];
    p[0][0] = ONE;
    p[1][2] = ONE;
    p[2][1] = ONE;
    p[3][3] = ONE;
    p
}

fn check(l: usize) -> Result<()> {
    if l < 2 || l % 2 != 0 {
        return param(format!("L = {l} must be even and at least 2"));
    }
    if l > DENSE_MAX_L {
        return Err(Error::Capacity(format!("transfer matrices limited to L <= {DENSE_MAX_L}")));
    }
    Ok(())
}

/// Taylor coefficients `R_m` of `PŘ(x0 + h) = Σ_m R_m h^m`, `m = 0..=order`,
/// from a discretized Cauchy integral on a circle well inside the radius of
/// analyticity.
pub fn r_taylor(p: &RMatrixParams, x0: C64, order: usize) -> Result<Vec<Gate4>> {
    let pm = swap_gate();
    if order == 0 {
        return Ok(vec![gate_mul(&pm, &r_matrix(p, x0)?)]);
    }
    let pole = pole_distance(p, x0);
    let growth = 1.0 + p.beta.abs() + p.xi.abs();
    let radius = (pole / 3.0).min(0.5 / growth);
    if !(radius > 1e-6) {
        return Err(Error::Numerical(format!(
            "spectral argument too close to a pole of the R matrix (distance {pole:.3e})"
        )));
    }
    let n = 64;
    let mut coef = vec![[[ZERO; 4]; 4]; order + 1];
    for k in 0..n {
        let w = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64);
        let r = gate_mul(&pm, &r_matrix(p, x0 + w * radius)?);
        for (m, cm) in coef.iter_mut().enumerate() {
            let f = (w * radius).powi(-(m as i32)) / n as f64;
            for i in 0..4 {
                for j in 0..4 {
                    cm[i][j] += r[i][j] * f;
                }
            }
        }
    }
    Ok(coef)
}

/// Distance from `x0` to the nearest zero of `sin(x+iρ)` (phase I) or
/// `sinh(x+iρ)` (phase II).
fn pole_distance(p: &RMatrixParams, x0: C64) -> f64 {
    use std::f64::consts::PI;
    let (centre, pole): (f64, Box<dyn Fn(f64) -> C64>) = match p.phase {
        Phase::II => ((x0.im + p.rho) / PI, Box::new(|n| c(0.0, PI * n - p.rho))),
        _ => (x0.re / PI, Box::new(|n| c(PI * n, -p.rho))),
    };
    let n0 = centre.round();
    [n0 - 1.0, n0, n0 + 1.0].iter().map(|&n| (x0 - pole(n)).norm()).fold(f64::INFINITY, f64::min)
}

/// Applies the Taylor jet of `T(x0 + h)` to a state: returns `T_m ψ` for
/// `m = 0..=order`, where `T(x0 + h) = Σ_m T_m h^m`.
pub fn transfer_jet_apply(p: &RMatrixParams, x0: C64, l: usize, order: usize, psi: &[C64]) -> Result<Vec<Vec<C64>>> {
    let u = c(p.u, 0.0);
    let plus = r_taylor(p, x0 + u / 2.0, order)?;
    let minus = r_taylor(p, x0 - u / 2.0, order)?;
    Ok(jet_apply_with(&plus, &minus, l, psi))
}

fn jet_apply_with(plus: &[Gate4], minus: &[Gate4], l: usize, psi: &[C64]) -> Vec<Vec<C64>> {
    let order = plus.len() - 1;
    let n = l + 1;
    let dim = 1usize << n;
    let mut out = vec![vec![ZERO; 1 << l]; order + 1];
    for a in 0..2usize {
        // jets[m] holds the order-m coefficient of the partially contracted state
        let mut jets: Vec<Vec<C64>> = vec![vec![ZERO; dim]; order + 1];
        for (s, &v) in psi.iter().enumerate() {
            jets[0][(s << 1) | a] = v;
        }
        for site in (0..l).rev() {
            let coeffs = if site % 2 == 0 { plus } else { minus };
            let mut next: Vec<Vec<C64>> = vec![vec![ZERO; dim]; order + 1];
            for (i, gi) in coeffs.iter().enumerate() {
                for j in 0..=(order - i) {
                    if jets[j].iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    let mut t = jets[j].clone();
                    apply_two_qubit(&mut t, n, site, l, gi);
                    for (acc, v) in next[i + j].iter_mut().zip(t) {
                        *acc += v;
                    }
                }
            }
            jets = next;
        }
        for (m, jet) in jets.iter().enumerate() {
            for (s, o) in out[m].iter_mut().enumerate() {
                *o += jet[(s << 1) | a];
            }
        }
    }
    out
}

/// Matrix-free `T(x; u) ψ`.
pub fn transfer_apply(spec: &TransferMatrixSpec, psi: &[C64]) -> Result<Vec<C64>> {
    check(spec.l)?;
    if psi.len() != 1 << spec.l {
        return param("state length does not match L");
    }
    Ok(transfer_jet_apply(&spec.params, spec.x, spec.l, 0, psi)?.remove(0))
}

/// Dense `T(x; u)` (L ≤ 12).
pub fn transfer_matrix(spec: &TransferMatrixSpec) -> Result<Operator> {
    check(spec.l)?;
    let u = c(spec.params.u, 0.0);
    let plus = r_taylor(&spec.params, spec.x + u / 2.0, 0)?;
    let minus = r_taylor(&spec.params, spec.x - u / 2.0, 0)?;
    let n = 1usize << spec.l;
    let mut m = Mat::<C64>::zeros(n, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        let col = jet_apply_with(&plus, &minus, spec.l, &e).remove(0);
        e[j] = ZERO;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    Operator::new(m, "transfer matrix")
}

/// Magnetization blocks of the Taylor coefficients `T_0, …, T_order` of
/// `T(x0 + h)`.
pub fn transfer_jet_blocks(p: &RMatrixParams, x0: C64, l: usize, order: usize) -> Result<Vec<BlockOperator>> {
    check(l)?;
    let u = c(p.u, 0.0);
    let plus = r_taylor(p, x0 + u / 2.0, order)?;
    let minus = r_taylor(p, x0 - u / 2.0, order)?;
    let mut result: Vec<BlockOperator> = (0..=order).map(|_| BlockOperator { l, blocks: Vec::new() }).collect();
    for m in crate::operators::magnetizations(l) {
        let basis = sector_basis(l, m, None)?;
        let states: Vec<usize> = basis.states.iter().map(|s| s.representative).collect();
        let d = states.len();
        let mut mats: Vec<Mat<C64>> = (0..=order).map(|_| Mat::zeros(d, d)).collect();
        let mut e = vec![ZERO; 1 << l];
        for (col, &s) in states.iter().enumerate() {
            e[s] = ONE;
            let jets = jet_apply_with(&plus, &minus, l, &e);
            e[s] = ZERO;
            for (k, jet) in jets.iter().enumerate() {
                for (row, &t) in states.iter().enumerate() {
                    mats[k][(row, col)] = jet[t];
                }
            }
        }
        for (k, mat) in mats.into_iter().enumerate() {
            result[k].blocks.push(Block { magnetization: m, states: states.clone(), matrix: mat });
        }
    }
    Ok(result)
}
