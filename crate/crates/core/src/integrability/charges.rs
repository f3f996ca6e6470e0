use faer::Mat;
use serde::{Deserialize, Serialize};

use super::rmatrix::{r_matrix, r_matrix_derivative, Phase, RMatrixParams};
use super::transfer::transfer_jet_blocks;
use crate::error::{param, Error, Result};
use crate::linalg::{self, c, gate_to_mat, kron, pauli, C64, I, ONE};
use crate::operators::{Block, BlockOperator, DENSE_MAX_L};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// A conserved charge `Q_ℓ±(u)` on `L` sites, stored by magnetization blocks.
/// For `ℓ = 1` the three-site density and the first site of each window are
/// kept as well.
#[derive(Clone, Debug)]
pub struct ChargeFamily {
    pub ell: usize,
    pub sign: Sign,
    pub u: f64,
    /// Number of sites carrying the local density, `2ℓ + 1`.
    pub density_support: usize,
    pub density: Option<Mat<C64>>,
    /// 0-based first site of every density window.
    pub window_starts: Vec<usize>,
    pub operator: BlockOperator,
}

impl ChargeFamily {
    /// `(Q + Q†)/2`.
    pub fn hermitian_part(&self) -> BlockOperator {
        self.operator.hermitian_part()
    }

    /// `(Q − Q†)/(2i)`.
    pub fn anti_hermitian_part(&self) -> BlockOperator {
        self.operator.anti_hermitian_part()
    }
}

fn check_l(l: usize, min: usize) -> Result<()> {
    if l % 2 != 0 || l < min {
        return param(format!("L = {l} must be even and at least {min}"));
    }
    if l > DENSE_MAX_L {
        return Err(Error::Capacity(format!("charges limited to L <= {DENSE_MAX_L}")));
    }
    Ok(())
}

fn require_phase(p: &RMatrixParams) -> Result<()> {
    if p.phase == Phase::Critical {
        return Err(Error::Unsupported("charges on the critical manifold".into()));
    }
    Ok(())
}

fn window_starts(l: usize, sign: Sign) -> Vec<usize> {
    (0..l / 2)
        .map(|j| match sign {
            Sign::Plus => (2 * j + 1) % l,
            Sign::Minus => 2 * j,
        })
        .collect()
}

fn m4(p: &RMatrixParams, x: f64) -> Result<Mat<C64>> {
    Ok(gate_to_mat(&r_matrix(p, c(x, 0.0))?))
}

fn dm4(p: &RMatrixParams, x: f64) -> Result<Mat<C64>> {
    Ok(gate_to_mat(&r_matrix_derivative(p, c(x, 0.0))?))
}

/// Three-site density of `Q₁±` from the first logarithmic derivative of the
/// transfer matrix, using the analytic `∂ₓŘ`.
pub fn q1_density(p: &RMatrixParams, sign: Sign) -> Result<Mat<C64>> {
    require_phase(p)?;
    let u = p.u;
    let id = linalg::identity(2);
    let k1 = |m: &Mat<C64>| kron(m.as_ref(), id.as_ref());
    let k2 = |m: &Mat<C64>| kron(id.as_ref(), m.as_ref());
    match sign {
        Sign::Plus => {
            // ∂ₓ[Ř₁₂(x + u/2) Ř₂₃(x − u/2)] at x = u/2, times Ř₁₂(u)⁻¹
            let g = m4(p, u)?;
            let d = k1(&dm4(p, u)?) * k2(&m4(p, 0.0)?) + k1(&g) * k2(&dm4(p, 0.0)?);
            let gi = linalg::inverse(g.as_ref())?;
            Ok(d * k1(&gi))
        }
        Sign::Minus => {
            // Ř₂₃(u) ∂ₓ[Ř₁₂(x + u/2) Ř₂₃(x − u/2)] at x = −u/2
            let d = k1(&dm4(p, 0.0)?) * k2(&m4(p, -u)?) + k1(&m4(p, 0.0)?) * k2(&dm4(p, -u)?);
            Ok(k2(&m4(p, u)?) * d)
        }
    }
}

/// `Q₁±(u)` assembled from [`q1_density`] on windows starting at odd
/// (`+`) or even (`−`) 0-based sites, with periodic boundaries.
pub fn charge_q1(p: &RMatrixParams, sign: Sign, l: usize) -> Result<ChargeFamily> {
    check_l(l, 6)?;
    let density = q1_density(p, sign)?;
    let starts = window_starts(l, sign);
    let terms: Vec<(usize, Mat<C64>)> = starts.iter().map(|&s| (s, density.clone())).collect();
    let operator = BlockOperator::from_local_terms(l, &terms)?;
    Ok(ChargeFamily { ell: 1, sign, u: p.u, density_support: 3, density: Some(density), window_starts: starts, operator })
}

fn op3(ops: [char; 3]) -> Mat<C64> {
    let m = |ch: char| {
        let p = pauli(ch);
        Mat::from_fn(2, 2, |i, j| p[i][j])
    };
    let a = kron(m(ops[0]).as_ref(), m(ops[1]).as_ref());
    kron(a.as_ref(), m(ops[2]).as_ref())
}

fn pair(a: usize, b: usize, x: char, y: char) -> Mat<C64> {
    let mut ops = ['1'; 3];
    ops[a] = x;
    ops[b] = y;
    op3(ops)
}

/// `σˣσˣ + σʸσʸ` on sites `(a, b)` of a three-site window.
fn h_xx(a: usize, b: usize) -> Mat<C64> {
    pair(a, b, 'x', 'x') + pair(a, b, 'y', 'y')
}

/// `σˣσʸ − σʸσˣ` on sites `(a, b)` of a three-site window.
fn h_dm(a: usize, b: usize) -> Mat<C64> {
    pair(a, b, 'x', 'y') - pair(a, b, 'y', 'x')
}

fn z(a: usize) -> Mat<C64> {
    let mut ops = ['1'; 3];
    ops[a] = 'z';
    op3(ops)
}

fn scale(m: &Mat<C64>, s: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Explicit three-site density of `Q₁±` written with `h^XX`, `h^DM` and
/// `σᶻσᶻ` terms. Phase II uses the continuation `u → iu, ρ → iρ, ξ → −iξ`
/// and an extra factor `i`, which matches the derivative construction.
pub fn q1_closed_form_density(p: &RMatrixParams, sign: Sign) -> Result<Mat<C64>> {
    require_phase(p)?;
    let (u, rho, xi) = match p.phase {
        Phase::II => (c(0.0, p.u), c(0.0, p.rho), c(0.0, -p.xi)),
        _ => (c(p.u, 0.0), c(p.rho, 0.0), c(p.xi, 0.0)),
    };
    let den = (u * 2.0).cos() - (rho * 2.0).cosh();
    if den.norm() < 1e-14 {
        return Err(Error::Degenerate("cos 2u - cosh 2rho vanishes".into()));
    }
    let s = sign.value();
    let th = c(p.theta, 0.0);
    let pre = ONE / (c(0.0, 2.0) * den);
    let (tp, tm) = (th + xi * u * s, th - xi * u * s);

    let mut t1 = scale(&h_xx(0, 1), tp.cos()) + scale(&h_xx(1, 2), tm.cos())
        - scale(&h_dm(0, 1), tp.sin())
        - scale(&h_dm(1, 2), tm.sin());
    let zz = z(0) * z(1) + z(1) * z(2);
    t1 = t1 - scale(&zz, rho.cosh() / u.cos());
    let t1 = scale(&t1, u.cos() * rho.sinh() * 2.0);

    let t2 = scale(&h_xx(0, 2), (th * 2.0).cos()) - scale(&h_dm(0, 2), (th * 2.0).sin()) + z(0) * z(2);
    let t2 = scale(&t2, -(u.sin() * u.sin()) * 2.0 / rho.tanh());

    let t3 = (scale(&h_xx(0, 1), tp.sin()) + scale(&h_dm(0, 1), tp.cos())) * z(2);
    let t3 = scale(&t3, -(u.sin() * rho.cosh()) * 2.0 * s);

    let t4 = (scale(&h_xx(0, 2), (th * 2.0).sin()) + scale(&h_dm(0, 2), (th * 2.0).cos())) * z(1);
    let t4 = scale(&t4, -(u * 2.0).sin() * s);

    let t5 = (scale(&h_xx(1, 2), tm.sin()) + scale(&h_dm(1, 2), tm.cos())) * z(0);
    let t5 = scale(&t5, -(u.sin() * rho.cosh()) * 2.0 * s);

    let total = t1 + t2 + t3 + t4 + t5;
    let overall = match p.phase {
        Phase::II => pre * I,
        _ => pre,
    };
    Ok(scale(&total, overall))
}

/// `Q₁±(u)` from the explicit density, on the same windows as [`charge_q1`].
/// It carries no identity component.
pub fn charge_q1_closed_form(p: &RMatrixParams, sign: Sign, l: usize) -> Result<ChargeFamily> {
    check_l(l, 6)?;
    let density = q1_closed_form_density(p, sign)?;
    let starts = window_starts(l, sign);
    let terms: Vec<(usize, Mat<C64>)> = starts.iter().map(|&s| (s, density.clone())).collect();
    let operator = BlockOperator::from_local_terms(l, &terms)?;
    Ok(ChargeFamily { ell: 1, sign, u: p.u, density_support: 3, density: Some(density), window_starts: starts, operator })
}

/// `Q_ℓ± = ∂ₓ^ℓ log T(x; u)` at `x = ±u/2`.
///
/// The Taylor coefficients `T_m` of `T(±u/2 + h)` are contracted exactly
/// from Taylor coefficients of the R matrix. Since all `T(x)` commute,
/// `log T(x0 + h) = log T_0 + log(1 + X)` with `X = Σ_{m≥1} T_0⁻¹T_m h^m`, so
/// the ℓ-th derivative is `ℓ!` times the `h^ℓ` coefficient of the series of
/// `log(1 + X)`; no matrix logarithm of `T_0` is needed.
pub fn higher_charge(p: &RMatrixParams, ell: usize, sign: Sign, l: usize) -> Result<ChargeFamily> {
    require_phase(p)?;
    if ell == 0 {
        return param("charge order must be at least 1");
    }
    check_l(l, 2 * (2 * ell + 1))?;
    let x0 = c(sign.value() * p.u / 2.0, 0.0);
    let jets = transfer_jet_blocks(p, x0, l, ell)?;
    let mut blocks = Vec::new();
    for (bi, b0) in jets[0].blocks.iter().enumerate() {
        let d = b0.matrix.nrows();
        let t0_inv = linalg::inverse(b0.matrix.as_ref())?;
        let check = &t0_inv * &b0.matrix;
        let res = linalg::max_abs_diff(check.as_ref(), linalg::identity(d).as_ref());
        if res > 1e-8 {
            return Err(Error::Numerical(format!("transfer matrix ill-conditioned (inverse residual {res:.3e})")));
        }
        // a[m] = T_0⁻¹ T_m
        let a: Vec<Mat<C64>> = (1..=ell).map(|m| &t0_inv * &jets[m].blocks[bi].matrix).collect();
        // power[k] = coefficients of X^n truncated at h^ell (index = power of h)
        let mut acc = Mat::<C64>::zeros(d, d);
        let mut power: Vec<Option<Mat<C64>>> = vec![None; ell + 1];
        for (m, am) in a.iter().enumerate() {
            power[m + 1] = Some(am.clone());
        }
        for n in 1..=ell {
            if let Some(cn) = &power[ell] {
                let f = if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
                acc += scale(cn, c(f, 0.0));
            }
            if n == ell {
                break;
            }
            let mut next: Vec<Option<Mat<C64>>> = vec![None; ell + 1];
            for (k, pk) in power.iter().enumerate() {
                let Some(pk) = pk else { continue };
                for (m, am) in a.iter().enumerate() {
                    let deg = k + m + 1;
                    if deg > ell {
                        break;
                    }
                    let prod = pk * am;
                    next[deg] = Some(match next[deg].take() {
                        Some(x) => x + prod,
                        None => prod,
                    });
                }
            }
            power = next;
        }
        let fact: f64 = (1..=ell).map(|k| k as f64).product();
        blocks.push(Block {
            magnetization: b0.magnetization,
            states: b0.states.clone(),
            matrix: scale(&acc, c(fact, 0.0)),
        });
    }
    let operator = BlockOperator { l, blocks };
    Ok(ChargeFamily {
        ell,
        sign,
        u: p.u,
        density_support: 2 * ell + 1,
        density: None,
        window_starts: Vec::new(),
        operator,
    })
}

