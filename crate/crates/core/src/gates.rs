//! Magnetization-conserving two-qubit gates in the Hamiltonian and Haar
//! (Hurwitz) parametrizations.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{
    self, c, cis, gate_max_diff, gate_mul, kron2, mc_leak, pauli, wrap_2pi, Gate4, ONE, ZERO,
};

/// Parameters of `h = J(XX+YY) + Δ ZZ + M(Z₁+Z₂) + B(Z₂−Z₁) + D(X₁Y₂−Y₁X₂) + A`,
/// with the gate `U = exp(−iτh)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianGateParams {
    pub tau: f64,
    pub delta: f64,
    #[serde(rename = "B", alias = "b", default)]
    pub b: f64,
    #[serde(rename = "D", alias = "d", default)]
    pub d: f64,
    #[serde(rename = "M", alias = "m", default)]
    pub m: f64,
    #[serde(rename = "A", alias = "a", default)]
    pub a: f64,
    #[serde(rename = "J", alias = "j", default = "one")]
    pub j: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for HamiltonianGateParams {
    fn default() -> Self {
        Self { tau: 0.0, delta: 0.0, b: 0.0, d: 0.0, m: 0.0, a: 0.0, j: 1.0 }
    }
}

impl HamiltonianGateParams {
    /// `(τ, Δ, B, D)` with `M = A = 0` and `J = 1`.
    pub fn new(tau: f64, delta: f64, b: f64, d: f64) -> Self {
        Self { tau, delta, b, d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.tau, self.delta, self.b, self.d, self.m, self.a, self.j];
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            param("Hamiltonian gate parameters must be finite")
        }
    }

    /// The 4×4 two-site generator `h`, assembled from Pauli products.
    pub fn generator(&self) -> Gate4 {
        let (x, y, z, id) = (pauli('x'), pauli('y'), pauli('z'), pauli('1'));
        let terms: [(f64, Gate4); 7] = [
            (self.j, kron2(&x, &x)),
            (self.j, kron2(&y, &y)),
            (self.delta, kron2(&z, &z)),
            (self.m, add(&kron2(&z, &id), &kron2(&id, &z), 1.0)),
            (self.b, add(&kron2(&id, &z), &kron2(&z, &id), -1.0)),
            (self.d, add(&kron2(&x, &y), &kron2(&y, &x), -1.0)),
            (self.a, kron2(&id, &id)),
        ];
        let mut h = [[ZERO; 4]; 4];
        for (w, t) in terms.iter() {
            for i in 0..4 {
                for k in 0..4 {
                    h[i][k] += t[i][k] * *w;
                }
            }
        }
        h
    }
}

fn add(a: &Gate4, b: &Gate4, sb: f64) -> Gate4 {
    let mut r = *a;
    for i in 0..4 {
        for k in 0..4 {
            r[i][k] += b[i][k] * sb;
        }
    }
    r
}

/// Haar (Hurwitz) angles: corner phase `δ`, block phase `α`, mixing angle `φ`,
/// and the two relative phases `χ`, `ϑ` of the central block
/// `V = e^{iα}[[sinφ e^{−iχ}, cosφ e^{−iϑ}], [cosφ e^{iϑ}, −sinφ e^{iχ}]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarGateParams {
    #[serde(alias = "delta")]
    pub delta_phase: f64,
    pub alpha: f64,
    pub phi: f64,
    pub chi: f64,
    #[serde(alias = "theta")]
    pub theta_v: f64,
}

impl HaarGateParams {
    /// Reduces every phase into [0, 2π) and `φ` into [0, π/2].
    pub fn canonical(self) -> Self {
        Self {
            delta_phase: wrap_2pi(self.delta_phase),
            alpha: wrap_2pi(self.alpha),
            phi: self.phi.clamp(0.0, FRAC_PI_2),
            chi: wrap_2pi(self.chi),
            theta_v: wrap_2pi(self.theta_v),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.delta_phase, self.alpha, self.phi, self.chi, self.theta_v];
        if !v.iter().all(|x| x.is_finite()) {
            return param("Haar angles must be finite");
        }
        if !(0.0..=FRAC_PI_2).contains(&self.phi) {
            return param(format!("phi = {} outside [0, pi/2]", self.phi));
        }
        Ok(())
    }
}

/// How a gate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Hamiltonian(HamiltonianGateParams),
    Haar(HaarGateParams),
    /// Square root `exp(−iτh/2)` of the gate with these parameters.
    Sqrt(HamiltonianGateParams),
    RMatrix,
    Raw,
}

/// A magnetization-conserving unitary in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitGate {
    pub matrix: Gate4,
    pub provenance: Provenance,
}

impl TwoQubitGate {
    /// Wraps a raw matrix. Entries outside the U(1) pattern must be below
    /// 1e−12 and are then set to exactly zero; unitarity is checked to 1e−12.
    pub fn from_matrix(matrix: Gate4) -> Result<Self> {
        let leak = mc_leak(&matrix);
        if leak > 1e-12 {
            return Err(Error::Structure(format!("off-pattern entry of modulus {leak:.3e}")));
        }
        let mut m = matrix;
        for i in 0..4 {
            for k in 0..4 {
                let allowed = i == k || (i == 1 && k == 2) || (i == 2 && k == 1);
                if !allowed {
                    m[i][k] = ZERO;
                }
            }
        }
        let g = Self { matrix: m, provenance: Provenance::Raw };
        let res = g.unitarity_residual();
        if res > 1e-12 {
            return param(format!("gate is not unitary (residual {res:.3e})"));
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        Self { matrix: linalg::gate_identity(), provenance: Provenance::Raw }
    }

    pub fn swap() -> Self {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = ONE;
        m[1][2] = ONE;
        m[2][1] = ONE;
        m[3][3] = ONE;
        Self { matrix: m, provenance: Provenance::Raw }
    }

    pub fn unitarity_residual(&self) -> f64 {
        let p = gate_mul(&linalg::gate_adjoint(&self.matrix), &self.matrix);
        gate_max_diff(&p, &linalg::gate_identity())
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: linalg::gate_adjoint(&self.matrix), provenance: Provenance::Raw }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        gate_max_diff(&self.matrix, &linalg::gate_identity()) < tol
    }

    /// A magnetization-conserving square root: `exp(−iτh/2)` when the gate
    /// came from Hamiltonian parameters, otherwise the root obtained from the
    /// principal generator of [`hamiltonian_params_from_gate`].
    pub fn mc_sqrt(&self) -> Result<Self> {
        match self.provenance {
            Provenance::Hamiltonian(p) => gate_sqrt(&p),
            _ => gate_sqrt(&hamiltonian_params_from_gate(self)?),
        }
    }
}

/// `exp(−iτh)` in closed form: corners are pure phases, the central block is
/// exponentiated through its 2×2 eigen-decomposition.
pub fn gate_from_hamiltonian(p: &HamiltonianGateParams) -> Result<TwoQubitGate> {
    p.validate()?;
    let tau = p.tau;
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = cis(-tau * (p.delta + 2.0 * p.m + p.a));
    m[3][3] = cis(-tau * (p.delta - 2.0 * p.m + p.a));
    // central block: (A − Δ)·1 + [[−2B, w], [w*, 2B]] with w = 2(J + iD)
    let w = c(2.0 * p.j, 2.0 * p.d);
    let omega = (4.0 * p.b * p.b + w.norm_sqr()).sqrt();
    let (cw, sw) = ((tau * omega).cos(), sinc_mul(tau, omega));
    let pre = cis(-tau * (p.a - p.delta));
    let mi = c(0.0, -1.0);
    m[1][1] = pre * (c(cw, 0.0) + mi * sw * (-2.0 * p.b));
    m[2][2] = pre * (c(cw, 0.0) + mi * sw * (2.0 * p.b));
    m[1][2] = pre * mi * sw * w;
    m[2][1] = pre * mi * sw * w.conj();
    Ok(TwoQubitGate { matrix: m, provenance: Provenance::Hamiltonian(*p) })
}

/// `sin(τω)/ω`, continuous at ω = 0.
fn sinc_mul(tau: f64, omega: f64) -> f64 {
    if omega.abs() < 1e-300 {
        tau
    } else {
        (tau * omega).sin() / omega
    }
}

/// The MC square root `exp(−iτh/2)`.
pub fn gate_sqrt(p: &HamiltonianGateParams) -> Result<TwoQubitGate> {
    let half = HamiltonianGateParams { tau: p.tau / 2.0, ..*p };
    let mut g = gate_from_hamiltonian(&half)?;
    g.provenance = Provenance::Sqrt(*p);
    Ok(g)
}

pub fn gate_from_haar(p: &HaarGateParams) -> TwoQubitGate {
    let (s, cphi) = (p.phi.sin(), p.phi.cos());
    let e = cis(p.alpha);
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = cis(p.delta_phase);
    m[3][3] = cis(p.delta_phase);
    m[1][1] = e * cis(-p.chi) * s;
    m[1][2] = e * cis(-p.theta_v) * cphi;
    m[2][1] = e * cis(p.theta_v) * cphi;
    m[2][2] = -(e * cis(p.chi) * s);
    TwoQubitGate { matrix: m, provenance: Provenance::Haar(*p) }
}

/// Haar angles of a gate together with the magnetization phase `μ` that was
/// factored out: `g = diag(e^{iμ}, 1, 1, e^{−iμ}) · U_Haar(params)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarExtraction {
    pub params: HaarGateParams,
    pub magnetization_phase: f64,
}

pub fn haar_params_from_gate(g: &TwoQubitGate) -> Result<HaarExtraction> {
    let u = &g.matrix;
    let leak = mc_leak(u);
    if leak > 1e-12 {
        return Err(Error::Structure(format!("off-pattern entry of modulus {leak:.3e}")));
    }
    let res = g.unitarity_residual();
    if res > 1e-10 {
        return param(format!("gate is not unitary (residual {res:.3e})"));
    }
    let (c0, c3) = (u[0][0].arg(), u[3][3].arg());
    let mu = wrap_pi(c0 - c3) / 2.0;
    let delta = wrap_2pi(c0 - mu);
    let v = [[u[1][1], u[1][2]], [u[2][1], u[2][2]]];
    let (s, cphi) = (v[0][0].norm(), v[1][0].norm());
    let phi = s.atan2(cphi);
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let alpha = wrap_2pi((-det).arg() / 2.0);
    let chi = if s < 1e-14 { 0.0 } else { wrap_2pi(alpha - v[0][0].arg()) };
    let theta_v = if cphi < 1e-14 { 0.0 } else { wrap_2pi(v[1][0].arg() - alpha) };
    Ok(HaarExtraction {
        params: HaarGateParams { delta_phase: delta, alpha, phi, chi, theta_v },
        magnetization_phase: mu,
    })
}

/// Wraps into (−π, π].
pub(crate) fn wrap_pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Draws from the invariant measure `d(sin²φ) dχ dα dϑ dδ`.
pub fn sample_haar_with<R: Rng + ?Sized>(rng: &mut R) -> HaarGateParams {
    let s2: f64 = rng.random();
    HaarGateParams {
        delta_phase: rng.random::<f64>() * TAU,
        alpha: rng.random::<f64>() * TAU,
        phi: s2.sqrt().asin(),
        chi: rng.random::<f64>() * TAU,
        theta_v: rng.random::<f64>() * TAU,
    }
}

/// One Haar-distributed gate from a seed.
pub fn sample_haar(seed: u64) -> HaarGateParams {
    sample_haar_with(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// `n` gates from one seeded stream.
pub fn sample_haar_stream(seed: u64, n: usize) -> Vec<HaarGateParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_haar_with(&mut rng)).collect()
}

/// Hamiltonian parameters with `τ = 1` whose gate reproduces `g` exactly,
/// using the principal generator of each magnetization block.
pub fn hamiltonian_params_from_gate(g: &TwoQubitGate) -> Result<HamiltonianGateParams> {
    let u = &g.matrix;
    let leak = mc_leak(u);
    if leak > 1e-12 {
        return Err(Error::Structure(format!("off-pattern entry of modulus {leak:.3e}")));
    }
    let h00 = -u[0][0].arg();
    let h33 = -u[3][3].arg();
    // central block W = e^{iη} S with S ∈ SU(2), S = exp(−iω n·σ)
    let w = [[u[1][1], u[1][2]], [u[2][1], u[2][2]]];
    let det = w[0][0] * w[1][1] - w[0][1] * w[1][0];
    let eta = det.arg() / 2.0;
    let ph = cis(-eta);
    let s = [[w[0][0] * ph, w[0][1] * ph], [w[1][0] * ph, w[1][1] * ph]];
    let cos_w = ((s[0][0] + s[1][1]).re / 2.0).clamp(-1.0, 1.0);
    let omega = cos_w.acos();
    let sin_w = omega.sin();
    // ω n·σ = i ω (S − cos ω) / sin ω
    let (nz, nx, ny) = if sin_w.abs() < 1e-14 {
        if cos_w > 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (PI, 0.0, 0.0)
        }
    } else {
        let f = c(0.0, omega / sin_w);
        let a00 = f * (s[0][0] - cos_w);
        let a01 = f * s[0][1];
        let a10 = f * s[1][0];
        (a00.re, ((a01 + a10) / 2.0).re, ((a10 - a01) / c(0.0, 2.0)).re)
    };
    // block generator: −η + [[nz, nx − i ny], [nx + i ny, −nz]]
    let h11 = -eta + nz;
    let h22 = -eta - nz;
    let off = c(nx, -ny);
    Ok(HamiltonianGateParams {
        tau: 1.0,
        a: (h00 + h33 + h11 + h22) / 4.0,
        delta: (h00 + h33 - h11 - h22) / 4.0,
        m: (h00 - h33) / 4.0,
        b: (h22 - h11) / 4.0,
        j: off.re / 2.0,
        d: off.im / 2.0,
    })
}
