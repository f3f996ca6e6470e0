use std::f64::consts::{FRAC_PI_2, PI, TAU};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{gate_from_haar, haar_params_from_gate, HaarGateParams, HamiltonianGateParams, Provenance, TwoQubitGate};
use crate::linalg::{self, c, gate_max_diff, gate_to_mat, Gate4, C64, I, ZERO};

/// Tolerance on `|cosφ − cosγ|` (and on `|LHS − 1|` of the Hamiltonian
/// criterion) inside which a gate is labelled critical.
pub const EPS_CRIT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "critical")]
    Critical,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::Critical => "critical",
        })
    }
}

/// Parameters of the asymmetric six-vertex Ř matrix
/// `Ř(x) = e^{iβx} [[1,0,0,0], [0, i b e^{−iξx}, −a e^{−iθ}, 0],
/// [0, −a e^{iθ}, i b e^{iξx}, 0], [0,0,0,1]]`
/// with `a = sin x / sin(x+iρ)`, `b = sinh ρ / sin(x+iρ)` in phase I and the
/// hyperbolic counterparts in phase II. The physical gate is `Ř(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RMatrixParams {
    pub beta: f64,
    pub xi: f64,
    pub theta: f64,
    pub rho: f64,
    pub u: f64,
    pub phase: Phase,
}

/// `(a, b)` at spectral argument `x`.
pub fn ab(phase: Phase, x: C64, rho: C64) -> (C64, C64) {
    match phase {
        Phase::II => {
            let den = (x + I * rho).sinh();
            (x.sinh() / den, rho.sin() / den)
        }
        _ => {
            let den = (x + I * rho).sin();
            (x.sin() / den, rho.sinh() / den)
        }
    }
}

/// `(∂ₓa, ∂ₓb)`.
pub fn ab_derivative(phase: Phase, x: C64, rho: C64) -> (C64, C64) {
    match phase {
        Phase::II => {
            let s = (x + I * rho).sinh();
            let s2 = s * s;
            (I * rho.sin() / s2, -rho.sin() * (x + I * rho).cosh() / s2)
        }
        _ => {
            let s = (x + I * rho).sin();
            let s2 = s * s;
            (I * rho.sinh() / s2, -rho.sinh() * (x + I * rho).cos() / s2)
        }
    }
}

/// Ř with every parameter allowed complex, used for analytic continuation
/// between the two phases.
pub fn r_matrix_continued(phase: Phase, beta: C64, xi: C64, theta: f64, rho: C64, x: C64) -> Gate4 {
    let (a, b) = ab(phase, x, rho);
    let pre = (I * beta * x).exp();
    let et = c(theta.cos(), theta.sin());
    let ex = (I * xi * x).exp();
    let mut r = [[ZERO; 4]; 4];
    r[0][0] = pre;
    r[3][3] = pre;
    r[1][1] = pre * I * b / ex;
    r[2][2] = pre * I * b * ex;
    r[1][2] = -(pre * a / et);
    r[2][1] = -(pre * a * et);
    r
}

fn require_phase(p: &RMatrixParams) -> Result<()> {
    if p.phase == Phase::Critical {
        return Err(Error::Degenerate(
            "the R-matrix parametrization is singular on the critical manifold".into(),
        ));
    }
    Ok(())
}

pub fn r_matrix(p: &RMatrixParams, x: C64) -> Result<Gate4> {
    require_phase(p)?;
    Ok(r_matrix_continued(p.phase, c(p.beta, 0.0), c(p.xi, 0.0), p.theta, c(p.rho, 0.0), x))
}

/// Analytic `∂ₓŘ(x)`.
pub fn r_matrix_derivative(p: &RMatrixParams, x: C64) -> Result<Gate4> {
    require_phase(p)?;
    let rho = c(p.rho, 0.0);
    let (a, b) = ab(p.phase, x, rho);
    let (da, db) = ab_derivative(p.phase, x, rho);
    let pre = (I * p.beta * x).exp();
    let et = c(p.theta.cos(), p.theta.sin());
    let ex = (I * p.xi * x).exp();
    let ib = I * p.beta;
    let ixi = I * p.xi;
    let mut r = [[ZERO; 4]; 4];
    r[0][0] = ib * pre;
    r[3][3] = ib * pre;
    r[1][1] = pre * I * (db + (ib - ixi) * b) / ex;
    r[2][2] = pre * I * (db + (ib + ixi) * b) * ex;
    r[1][2] = -(pre * (da + ib * a) / et);
    r[2][1] = -(pre * (da + ib * a) * et);
    Ok(r)
}

impl RMatrixParams {
    /// The gate `Ř(u)`.
    pub fn gate(&self) -> Result<TwoQubitGate> {
        let m = r_matrix(self, c(self.u, 0.0))?;
        Ok(TwoQubitGate { matrix: m, provenance: Provenance::RMatrix })
    }

    /// `(a, b)` at the stored `u`.
    pub fn ab(&self) -> (C64, C64) {
        ab(self.phase, c(self.u, 0.0), c(self.rho, 0.0))
    }
}

fn embed3(g: &Gate4, first: bool) -> Mat<C64> {
    let gm = gate_to_mat(g);
    let id = linalg::identity(2);
    if first {
        linalg::kron(gm.as_ref(), id.as_ref())
    } else {
        linalg::kron(id.as_ref(), gm.as_ref())
    }
}

/// `‖Ř₁₂(x)Ř₂₃(x+y)Ř₁₂(y) − Ř₂₃(y)Ř₁₂(x+y)Ř₂₃(x)‖_max` on three qubits.
pub fn check_yang_baxter(p: &RMatrixParams, x: f64, y: f64) -> Result<f64> {
    let rx = r_matrix(p, c(x, 0.0))?;
    let ry = r_matrix(p, c(y, 0.0))?;
    let rxy = r_matrix(p, c(x + y, 0.0))?;
    let lhs = embed3(&rx, true) * embed3(&rxy, false) * embed3(&ry, true);
    let rhs = embed3(&ry, false) * embed3(&rxy, true) * embed3(&rx, false);
    Ok(linalg::max_abs_diff(lhs.as_ref(), rhs.as_ref()))
}

/// `‖Ř(−x)Ř(x) − 1‖_max`.
pub fn check_inversion(p: &RMatrixParams, x: f64) -> Result<f64> {
    let prod = linalg::gate_mul(&r_matrix(p, c(-x, 0.0))?, &r_matrix(p, c(x, 0.0))?);
    Ok(linalg::gate_max_diff(&prod, &linalg::gate_identity()))
}

/// Result of mapping Haar angles onto Ř parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarToR {
    pub params: RMatrixParams,
    /// `γ = δ − α + π` after reduction into [−π/2, π/2).
    pub gamma: f64,
    pub phi: f64,
    /// Haar angles after the π-shifts of `(α, χ, ϑ)` used to reduce `γ`.
    pub reduced: HaarGateParams,
    /// `‖Ř(u) − U_Haar‖_max`.
    pub reconstruction_error: f64,
}

fn wrap_sym(x: f64) -> f64 {
    // into [−π, π)
    (x + PI).rem_euclid(TAU) - PI
}

/// Maps Haar angles to `(β, ξ, θ, ρ, u)` and the phase label.
pub fn haar_to_r(p: &HaarGateParams) -> Result<HaarToR> {
    p.validate()?;
    let target = gate_from_haar(p);
    let (mut alpha, mut chi, mut theta_v) = (p.alpha, p.chi, p.theta_v);
    let mut gamma = wrap_sym(p.delta_phase - alpha + PI);
    if gamma >= FRAC_PI_2 {
        gamma -= PI;
        alpha += PI;
        chi += PI;
        theta_v += PI;
    } else if gamma < -FRAC_PI_2 {
        gamma += PI;
        alpha -= PI;
        chi -= PI;
        theta_v -= PI;
    }
    let reduced = HaarGateParams { alpha, chi, theta_v, ..*p };
    let phi = p.phi;

    if target.is_identity(1e-14) {
        let params = RMatrixParams { beta: 0.0, xi: 0.0, theta: 0.0, rho: 1.0, u: 0.0, phase: Phase::I };
        return Ok(HaarToR { params, gamma, phi, reduced, reconstruction_error: 0.0 });
    }

    let (sp, cp) = (phi.sin(), phi.cos());
    let (sg, cg) = (gamma.sin(), gamma.cos());
    let defect = cp - cg;
    if defect.abs() < EPS_CRIT {
        return Err(Error::CriticalManifold { defect: defect.abs() });
    }
    if sp < 1e-14 {
        return Err(Error::Degenerate("phi = 0 corresponds to u -> infinity".into()));
    }
    let (phase, u, rho, xi_u) = if cp < cg {
        if cp < 1e-14 {
            return Err(Error::Degenerate("phi = pi/2 corresponds to rho -> infinity".into()));
        }
        let u = (sg / sp).clamp(-1.0, 1.0).acos();
        let rho = (cg / cp).max(1.0).acosh();
        (Phase::I, u, rho, chi - FRAC_PI_2)
    } else {
        let s = if sg >= 0.0 { 1.0 } else { -1.0 };
        let u = (sg.abs() / sp).max(1.0).acosh();
        let rho = s * (cg / cp).clamp(-1.0, 1.0).acos();
        (Phase::II, u, rho, chi - s * FRAC_PI_2)
    };
    if u.abs() < 1e-300 {
        return Err(Error::Degenerate("u = 0 for a non-identity gate".into()));
    }
    let params = RMatrixParams { beta: p.delta_phase / u, xi: xi_u / u, theta: theta_v, rho, u, phase };
    let rec = r_matrix(&params, c(u, 0.0))?;
    let reconstruction_error = gate_max_diff(&rec, &target.matrix);
    Ok(HaarToR { params, gamma, phi, reduced, reconstruction_error })
}

/// Haar extraction followed by [`haar_to_r`]. The magnetization phase of the
/// gate is returned alongside, since Ř carries equal corner phases.
pub fn gate_to_r(g: &TwoQubitGate) -> Result<(HaarToR, f64)> {
    let ex = haar_params_from_gate(g)?;
    Ok((haar_to_r(&ex.params)?, ex.magnetization_phase))
}

/// Value of the phase-I criterion
/// `|sin(2τΔ)/sin(2τ√(J²+D²+B²)) · √(1+B²/(J²+D²))| > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCriterion {
    pub lhs: f64,
    /// Set when the denominator vanishes; the gate is then reported as phase I.
    pub infinite: bool,
    pub phase: Phase,
}

pub fn classify_phase_hamiltonian(p: &HamiltonianGateParams) -> Result<PhaseCriterion> {
    p.validate()?;
    let jd = p.j * p.j + p.d * p.d;
    if jd == 0.0 {
        return Err(Error::Degenerate("J = D = 0 leaves no hopping".into()));
    }
    let num = (2.0 * p.tau * p.delta).sin();
    let den = (2.0 * p.tau * (jd + p.b * p.b).sqrt()).sin();
    let fac = (1.0 + p.b * p.b / jd).sqrt();
    if den.abs() < 1e-15 {
        return Ok(PhaseCriterion { lhs: f64::INFINITY, infinite: true, phase: Phase::I });
    }
    let lhs = (num / den * fac).abs();
    let phase = if lhs > 1.0 + EPS_CRIT {
        Phase::I
    } else if lhs < 1.0 - EPS_CRIT {
        Phase::II
    } else {
        Phase::Critical
    };
    Ok(PhaseCriterion { lhs, infinite: false, phase })
}

/// Phase label from the `(cosφ, cosγ)` rule without building the map.
pub fn classify_phase_haar(p: &HaarGateParams) -> Phase {
    let mut gamma = wrap_sym(p.delta_phase - p.alpha + PI);
    if gamma >= FRAC_PI_2 {
        gamma -= PI;
    } else if gamma < -FRAC_PI_2 {
        gamma += PI;
    }
    let d = p.phi.cos() - gamma.cos();
    if d.abs() < EPS_CRIT {
        Phase::Critical
    } else if d < 0.0 {
        Phase::I
    } else {
        Phase::II
    }
}
