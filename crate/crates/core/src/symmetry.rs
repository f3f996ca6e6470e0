//! Anti-unitary time reversal of MC gates and open brickwall circuits, the
//! Dzyaloshinskii–Moriya rotation and the square-root equivalent circuit.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gates::{haar_params_from_gate, wrap_pi, HamiltonianGateParams, TwoQubitGate};
use crate::linalg::{self, cis, Gate4, C64, ZERO};
use crate::operators::{build_propagator, Boundary, BrickworkCircuit, Operator, PlacedGate};

/// `𝒯 = W K` with `W` diagonal in the computational basis and `K` complex
/// conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiUnitary {
    pub l: usize,
    /// Diagonal of `W`.
    pub unitary_part: Vec<C64>,
}

impl AntiUnitary {
    pub fn conjugation(l: usize) -> Self {
        Self { l, unitary_part: vec![C64::new(1.0, 0.0); 1 << l] }
    }

    /// `W = Π_j exp(iφ_j σᶻ_j)`.
    pub fn from_site_angles(angles: &[f64]) -> Self {
        let l = angles.len();
        let unitary_part = (0..1usize << l)
            .map(|s| {
                let arg: f64 = angles
                    .iter()
                    .enumerate()
                    .map(|(j, a)| if s & (1 << (l - 1 - j)) == 0 { *a } else { -*a })
                    .sum();
                cis(arg)
            })
            .collect();
        Self { l, unitary_part }
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        psi.iter().zip(&self.unitary_part).map(|(x, w)| w * x.conj()).collect()
    }

    /// `𝒯 A 𝒯⁻¹ = W Ā W†`.
    pub fn conjugate(&self, a: &Mat<C64>) -> Mat<C64> {
        let w = &self.unitary_part;
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| w[i] * a[(i, j)].conj() * w[j].conj())
    }

    /// `‖W W̄ − 1‖_max`, which vanishes iff `𝒯² = 1`.
    pub fn square_residual(&self) -> f64 {
        self.unitary_part.iter().map(|w| (w * w.conj() - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }

    /// `‖𝒯 A 𝒯⁻¹ − A†‖_max`.
    pub fn reversal_residual(&self, a: &Mat<C64>) -> f64 {
        linalg::max_abs_diff(self.conjugate(a).as_ref(), linalg::adjoint(a.as_ref()).as_ref())
    }

    pub fn unitary_operator(&self) -> Operator {
        let n = self.unitary_part.len();
        let m = Mat::from_fn(n, n, |i, j| if i == j { self.unitary_part[i] } else { ZERO });
        Operator { matrix: m, label: "time-reversal unitary part".into() }
    }
}

/// The angle `ϑ` of a gate, or `None` when its central block is diagonal
/// and any angle works.
fn reversal_angle(g: &TwoQubitGate) -> Result<Option<f64>> {
    let ex = haar_params_from_gate(g)?;
    if ex.params.phi.cos() < 1e-14 {
        Ok(None)
    } else {
        Ok(Some(ex.params.theta_v))
    }
}

/// `𝒯₁ = W K` with `W = exp[iϑ/2 (σᶻ₂ − σᶻ₁)]` and `ϑ` the Haar angle of `g`,
/// so that `𝒯₁ g 𝒯₁⁻¹ = g†`.
pub fn single_gate_time_reversal(g: &TwoQubitGate) -> Result<AntiUnitary> {
    let theta = reversal_angle(g)?.unwrap_or(0.0);
    let t = AntiUnitary::from_site_angles(&[-theta / 2.0, theta / 2.0]);
    let res = t.reversal_residual(&linalg::gate_to_mat(&g.matrix));
    if res > 1e-12 {
        return Err(Error::Numerical(format!("single-gate time reversal residual {res:.3e}")));
    }
    Ok(t)
}

/// The rotation angle `ϑ` with `tan 2ϑ = −D/J`.
pub fn dm_angle(p: &HamiltonianGateParams) -> f64 {
    0.5 * (-p.d).atan2(p.j)
}

/// `W_ϑ = exp[−iϑ/2 (σᶻ₂ − σᶻ₁)]` for [`dm_angle`].
pub fn dm_rotation(p: &HamiltonianGateParams) -> Gate4 {
    let t = dm_angle(p);
    let mut w = [[ZERO; 4]; 4];
    w[0][0] = C64::new(1.0, 0.0);
    w[1][1] = cis(t);
    w[2][2] = cis(-t);
    w[3][3] = C64::new(1.0, 0.0);
    w
}

/// Parameters of `W_ϑ h W_ϑ†`: the DM term is absorbed into the hopping.
pub fn rotate_out_dm(p: &HamiltonianGateParams) -> HamiltonianGateParams {
    HamiltonianGateParams { j: p.j.hypot(p.d), d: 0.0, ..*p }
}

fn require_brickwall(c: &BrickworkCircuit) -> Result<()> {
    if c.layers.len() != 2 {
        return param("expected a two-layer brickwall circuit");
    }
    Ok(())
}

/// `𝕌̃ = Π √U_odd · Π U_even · Π √U_odd`, with MC square roots from
/// halving the gate duration. It is a cyclic permutation of `𝕌`.
pub fn equivalent_circuit(c: &BrickworkCircuit) -> Result<BrickworkCircuit> {
    require_brickwall(c)?;
    let half: Vec<PlacedGate> = c.layers[0]
        .iter()
        .map(|p| Ok(PlacedGate { site: p.site, gate: p.gate.mc_sqrt()? }))
        .collect::<Result<_>>()?;
    BrickworkCircuit::from_layers(c.l, c.boundary, vec![half.clone(), c.layers[1].clone(), half])
}

/// Per-bond angles `ϑ^{(j)}` for bonds `(j, j+1)`, checked for consistency
/// between all gates sharing a bond (angles only matter modulo π).
fn bond_angles(c: &BrickworkCircuit) -> Result<Vec<Option<f64>>> {
    let n_bonds = match c.boundary {
        Boundary::Open => c.l - 1,
        Boundary::Periodic => c.l,
    };
    let mut angles: Vec<Option<f64>> = vec![None; n_bonds];
    for layer in &c.layers {
        for p in layer {
            let Some(t) = reversal_angle(&p.gate)? else { continue };
            match angles[p.site] {
                None => angles[p.site] = Some(t),
                Some(prev) => {
                    let d = wrap_pi(2.0 * (t - prev)) / 2.0;
                    if d.abs() > 1e-8 {
                        return Err(Error::Structure(format!(
                            "gates on bond {} need incompatible reversal angles",
                            p.site
                        )));
                    }
                }
            }
        }
    }
    Ok(angles)
}

/// `Σ_j ϑ^{(j)}` around a periodic ring, wrapped into (−π, π].
pub fn angle_defect(c: &BrickworkCircuit) -> Result<f64> {
    let angles = bond_angles(c)?;
    if angles.iter().any(Option::is_none) {
        return Ok(0.0);
    }
    Ok(wrap_pi(angles.iter().flatten().sum()))
}

/// `𝒯 = Π_j exp(iφ_j σᶻ_j) K` with `φ_{j+1} − φ_j = ϑ^{(j)}` and `φ_0 = 0`.
///
/// Open chains always admit it. A periodic ring closes only if the angle
/// defect vanishes modulo π; otherwise the defect is returned as an error.
pub fn global_time_reversal(c: &BrickworkCircuit) -> Result<AntiUnitary> {
    let angles = bond_angles(c)?;
    let l = c.l;
    let mut start = 0;
    if c.boundary == Boundary::Periodic {
        match angles.iter().position(Option::is_none) {
            Some(free) => start = (free + 1) % l,
            None => {
                let defect = angle_defect(c)?;
                let mod_pi = wrap_pi(2.0 * defect) / 2.0;
                if mod_pi.abs() > 1e-10 {
                    return Err(Error::AngleDefect { defect });
                }
            }
        }
    }
    let mut phi = vec![0.0; l];
    for step in 0..l - 1 {
        let j = (start + step) % l;
        let theta = angles.get(j).copied().flatten().unwrap_or(0.0);
        phi[(j + 1) % l] = phi[j] + theta;
    }
    Ok(AntiUnitary::from_site_angles(&phi))
}

/// Largest circular distance between two eigenphase multisets after
/// matching. Sorted phases are compared under the three cyclic alignments
/// around the 0/2π cut; a greedy nearest-neighbour matching is the fallback
/// when near-degeneracies make the sort unreliable.
pub fn spectral_match_error(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let sorted = |v: &[C64]| {
        let mut p: Vec<f64> = v.iter().map(|z| linalg::wrap_2pi(z.arg())).collect();
        p.sort_by(f64::total_cmp);
        p
    };
    let dist = |x: f64, y: f64| wrap_pi(x - y).abs();
    let (pa, pb) = (sorted(a), sorted(b));
    let mut best = f64::INFINITY;
    for off in [0, 1, n - 1] {
        let e = (0..n).map(|i| dist(pa[i], pb[(i + off) % n])).fold(0.0, f64::max);
        best = best.min(e);
    }
    if best < 1e-10 {
        return best;
    }
    let mut used = vec![false; n];
    let mut worst = 0.0f64;
    for &x in &pa {
        let (k, d) = pb
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, &y)| (k, dist(x, y)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(d);
    }
    best.min(worst)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeReversalReport {
    pub boundary: Boundary,
    #[serde(rename = "L")]
    pub l: usize,
    /// `‖𝒯𝕌̃𝒯⁻¹ − 𝕌̃†‖_max`; absent when the construction is refused.
    #[serde(rename = "residual_TR")]
    pub residual_tr: Option<f64>,
    pub spectral_match_error: f64,
    pub angle_defect: f64,
    pub refused: bool,
}

/// Builds `𝕌̃` and `𝒯` densely and reports both checks.
pub fn time_reversal_check(c: &BrickworkCircuit) -> Result<TimeReversalReport> {
    let eq = equivalent_circuit(c)?;
    let u = build_propagator(c)?;
    let ut = build_propagator(&eq)?;
    let spectral = spectral_match_error(&u.eigenvalues()?, &ut.eigenvalues()?);
    let defect = match c.boundary {
        Boundary::Open => 0.0,
        Boundary::Periodic => angle_defect(c)?,
    };
    let (residual_tr, refused) = match global_time_reversal(&eq) {
        Ok(t) => (Some(t.reversal_residual(&ut.matrix)), false),
        Err(Error::AngleDefect { .. }) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(TimeReversalReport { boundary: c.boundary, l: c.l, residual_tr, spectral_match_error: spectral, angle_defect: defect, refused })
}
