//! Symmetry-resolved eigenphase statistics of brickwall propagators.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{param, Error, Result};
use crate::linalg::{self, apply_two_qubit, C64, ZERO};
use crate::operators::{reflect_state, sector_basis, shift_state, Boundary, BrickworkCircuit, LinearAction, SectorBasis};

/// Which symmetry block of a `(m, k)` sector a spectrum belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLabel {
    /// Eigenvalue ±1 of spin flip combined with reflection, when resolved.
    pub y_parity: Option<i8>,
    /// Half of the space-time operator's eigenphases: 0 for [0, π), 1 for [π, 2π).
    pub k_half: Option<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumResult {
    #[serde(rename = "L")]
    pub l: usize,
    pub boundary: Boundary,
    pub m: i32,
    pub k: Option<usize>,
    pub block: BlockLabel,
    /// Sorted eigenphases of the propagator in [0, 2π).
    pub eigenphases: Vec<f64>,
    /// Cyclic nearest-neighbour spacings scaled to unit mean.
    pub spacings: Vec<f64>,
    /// Mean of `min(s_n, s_{n+1}) / max(s_n, s_{n+1})`; NaN below three levels.
    pub r_tilde: f64,
}

impl SpectrumResult {
    fn new(circuit: &BrickworkCircuit, m: i32, k: Option<usize>, block: BlockLabel, mut phases: Vec<f64>) -> Self {
        phases.iter_mut().for_each(|p| *p = linalg::wrap_2pi(*p));
        phases.sort_by(f64::total_cmp);
        let spacings = unit_spacings(&phases);
        let r_tilde = mean(&ratios(&spacings));
        Self { l: circuit.l, boundary: circuit.boundary, m, k, block, eigenphases: phases, spacings, r_tilde }
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Cyclic spacings of sorted phases, scaled by `n/2π` so their mean is one.
pub fn unit_spacings(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    if n < 2 {
        return Vec::new();
    }
    let scale = n as f64 / TAU;
    (0..n)
        .map(|i| {
            let next = if i + 1 < n { sorted[i + 1] } else { sorted[0] + TAU };
            (next - sorted[i]) * scale
        })
        .collect()
}

/// Ratios of consecutive cyclic spacings; pairs of exact zeros are skipped.
pub fn ratios(spacings: &[f64]) -> Vec<f64> {
    let n = spacings.len();
    if n < 3 {
        return Vec::new();
    }
    (0..n)
        .filter_map(|i| {
            let (a, b) = (spacings[i], spacings[(i + 1) % n]);
            let hi = a.max(b);
            (hi > 0.0).then(|| a.min(b) / hi)
        })
        .collect()
}

/// `r̃` of a list of eigenphases (any order).
pub fn r_tilde(phases: &[f64]) -> f64 {
    let mut p: Vec<f64> = phases.iter().map(|&x| linalg::wrap_2pi(x)).collect();
    p.sort_by(f64::total_cmp);
    mean(&ratios(&unit_spacings(&p)))
}

/// Pooled `r̃`: the mean over every ratio of every block.
pub fn pooled_r_tilde(results: &[SpectrumResult]) -> f64 {
    let all: Vec<f64> = results.iter().flat_map(|r| ratios(&r.spacings)).collect();
    mean(&all)
}

/// Spin flip combined with the reflection that maps the brickwall onto
/// itself: `j → 1 − j (mod L)` on rings, `j → L − 1 − j` on open chains.
pub struct FlipReflection {
    pub l: usize,
    pub boundary: Boundary,
}

impl FlipReflection {
    pub fn map(&self, s: usize) -> usize {
        let l = self.l;
        let full = (1usize << l) - 1;
        let r = match self.boundary {
            Boundary::Open => reflect_state(s, l),
            // j → L−1−j, then j → j+2
            Boundary::Periodic => shift_state(reflect_state(s, l), l, 2),
        };
        r ^ full
    }
}

impl LinearAction for FlipReflection {
    fn dim(&self) -> usize {
        1 << self.l
    }
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; psi.len()];
        for (s, v) in psi.iter().enumerate() {
            out[self.map(s)] = *v;
        }
        out
    }
}

/// `K = S · V_odd` for a periodic brickwall whose even layer is the odd
/// layer shifted by one site; `S` moves site `j` to `j + 1`, so that
/// `K² = S² 𝕌`.
pub struct SpaceTimeOperator<'a> {
    circuit: &'a BrickworkCircuit,
}

impl<'a> SpaceTimeOperator<'a> {
    pub fn new(circuit: &'a BrickworkCircuit) -> Result<Self> {
        if circuit.boundary != Boundary::Periodic || !circuit.is_homogeneous() {
            return param("space-time resolution needs a homogeneous periodic brickwall");
        }
        Ok(Self { circuit })
    }
}

impl LinearAction for SpaceTimeOperator<'_> {
    fn dim(&self) -> usize {
        1 << self.circuit.l
    }
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let l = self.circuit.l;
        let mut v = psi.to_vec();
        for g in &self.circuit.layers[0] {
            apply_two_qubit(&mut v, l, g.site, g.site + 1, &g.gate.matrix);
        }
        let mut out = vec![ZERO; v.len()];
        for (s, x) in v.into_iter().enumerate() {
            out[shift_state(s, l, 1)] = x;
        }
        out
    }
}

fn project_block(a: &Mat<C64>, p: &Mat<C64>) -> Mat<C64> {
    p.adjoint() * a * p
}

/// Orthonormal eigenvectors of a Hermitian-symmetrized involution for the
/// eigenvalues +1 and −1.
fn involution_split(y: &Mat<C64>) -> Result<[(i8, Mat<C64>); 2]> {
    let h = Mat::from_fn(y.nrows(), y.ncols(), |i, j| (y[(i, j)] + y[(j, i)].conj()) * 0.5);
    let (w, v) = linalg::hermitian_eigen(h.as_ref())?;
    let pick = |sign: f64| {
        let cols: Vec<usize> = (0..w.len()).filter(|&i| (w[i] - sign).abs() < 1e-8).collect();
        Mat::from_fn(v.nrows(), cols.len(), |i, j| v[(i, cols[j])])
    };
    let (plus, minus) = (pick(1.0), pick(-1.0));
    if plus.ncols() + minus.ncols() != y.nrows() {
        return Err(Error::Numerical("symmetry block is not an involution".into()));
    }
    Ok([(1, plus), (-1, minus)])
}

fn phases_of(a: &Mat<C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let res = linalg::unitarity_residual(a.as_ref());
    if res > 1e-10 {
        return Err(Error::Numerical(format!("sector block not unitary (residual {res:.3e})")));
    }
    Ok(linalg::eigenvalues(a.as_ref())?.iter().map(|z| linalg::wrap_2pi(z.arg())).collect())
}

/// Whether the flip-reflection maps this sector onto itself.
fn y_preserves(basis: &SectorBasis) -> bool {
    if basis.magnetization != 0 {
        return false;
    }
    match basis.momentum {
        None => true,
        Some(k) => (2 * k) % (basis.l / 2) == 0,
    }
}

/// Eigenphase spectra of one `(m, k)` sector, split further by every symmetry
/// that is present: the flip-reflection when it commutes with the block
/// (m = 0, and k ∈ {0, π} on rings), and for homogeneous rings with
/// `spacetime` set, the space-time operator `K`.
///
/// With `K`, the propagator phases are `2θ_K − κ` and the two halves of the
/// `K` spectrum give two blocks. Where the flip-reflection anticommutes with
/// `K` (κ = π), the halves are mirror images and only the first is kept.
pub fn sector_spectrum(circuit: &BrickworkCircuit, m: i32, k: Option<usize>, spacetime: bool) -> Result<Vec<SpectrumResult>> {
    if k.is_some() && circuit.boundary != Boundary::Periodic {
        return param("momentum resolution needs periodic boundaries");
    }
    if spacetime && k.is_none() {
        return param("space-time resolution needs a momentum sector");
    }
    let basis = sector_basis(circuit.l, m, k)?;
    if basis.dim() > 5000 {
        return Err(Error::Capacity(format!("sector dimension {} too large for dense diagonalization", basis.dim())));
    }
    let u = basis.restrict_action(circuit)?;
    let y = if y_preserves(&basis) {
        let y = basis.restrict_action(&FlipReflection { l: circuit.l, boundary: circuit.boundary })?;
        (linalg::commutator_norm(u.as_ref(), y.as_ref()) < 1e-10).then_some(y)
    } else {
        None
    };
    let split = |a: &Mat<C64>, y: Option<&Mat<C64>>| -> Result<Vec<(Option<i8>, Mat<C64>)>> {
        match y {
            None => Ok(vec![(None, a.clone())]),
            Some(y) => Ok(involution_split(y)?.into_iter().map(|(s, p)| (Some(s), project_block(a, &p))).collect()),
        }
    };
    let mut out = Vec::new();
    if !spacetime {
        for (sign, block) in split(&u, y.as_ref())? {
            let label = BlockLabel { y_parity: sign, k_half: None };
            out.push(SpectrumResult::new(circuit, m, k, label, phases_of(&block)?));
        }
        return Ok(out);
    }
    let kop = basis.restrict_action(&SpaceTimeOperator::new(circuit)?)?;
    let kappa = TAU * k.unwrap_or(0) as f64 / (circuit.l / 2) as f64;
    // Y either commutes with K (split by Y, keep both halves) or anticommutes
    // (K ↦ −K swaps the halves: keep one half of the unsplit sector).
    let (y_split, halves): (Option<&Mat<C64>>, &[u8]) = match &y {
        None => (None, &[0, 1]),
        Some(y) => {
            let anti = &kop * y + y * &kop;
            if linalg::commutator_norm(kop.as_ref(), y.as_ref()) < 1e-10 {
                (Some(y), &[0, 1])
            } else if linalg::max_abs(anti.as_ref()) < 1e-10 {
                (None, &[0])
            } else {
                return Err(Error::Numerical("flip-reflection neither commutes nor anticommutes with K".into()));
            }
        }
    };
    for (sign, kb) in split(&kop, y_split)? {
        let theta = phases_of(&kb)?;
        for &h in halves {
            let lo = h as f64 * PI;
            let ph: Vec<f64> = theta.iter().filter(|&&t| t >= lo && t < lo + PI).map(|t| 2.0 * t - kappa).collect();
            out.push(SpectrumResult::new(circuit, m, k, BlockLabel { y_parity: sign, k_half: Some(h) }, ph));
        }
    }
    Ok(out)
}

/// How far to resolve a circuit's spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// Magnetization only (and the flip-reflection where present).
    Magnetization,
    /// Magnetization and two-site momentum (rings only).
    Momentum,
    /// Magnetization, momentum and the space-time operator (homogeneous rings).
    Full,
}

/// Default magnetization window for pooled statistics: `|m| ≤ L/3`, i.e. at
/// least a third of the spins flipped either way. Sectors with only a
/// couple of magnons have few, rigidly spaced levels and are not in the
/// regime where either reference law applies.
pub fn bulk_magnetization_window(l: usize) -> i32 {
    (l / 3) as i32
}

/// Spectra of every sector with `|m| ≤ max_abs_m`, in sector-key order.
pub fn all_sectors(circuit: &BrickworkCircuit, resolution: Resolution, max_abs_m: i32) -> Result<Vec<SpectrumResult>> {
    let l = circuit.l;
    let momenta: Vec<Option<usize>> = match resolution {
        Resolution::Magnetization => vec![None],
        _ => {
            if circuit.boundary != Boundary::Periodic {
                return param("momentum resolution needs periodic boundaries");
            }
            (0..l / 2).map(Some).collect()
        }
    };
    let mut out = Vec::new();
    for m in crate::operators::magnetizations(l).filter(|m| m.abs() <= max_abs_m) {
        for &k in &momenta {
            let basis_dim = sector_basis(l, m, k)?.dim();
            if basis_dim == 0 {
                continue;
            }
            out.extend(sector_spectrum(circuit, m, k, resolution == Resolution::Full)?);
        }
    }
    Ok(out)
}

/// Reference level-spacing laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    Poisson,
    Coe,
    Cue,
}

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [Ensemble::Poisson, Ensemble::Coe, Ensemble::Cue];

    /// Probability density (Wigner surmises for the circular ensembles).
    pub fn density(self, s: f64) -> f64 {
        match self {
            Ensemble::Poisson => (-s).exp(),
            Ensemble::Coe => PI / 2.0 * s * (-PI * s * s / 4.0).exp(),
            Ensemble::Cue => 32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp(),
        }
    }

    pub fn cdf(self, s: f64) -> f64 {
        match self {
            Ensemble::Poisson => 1.0 - (-s).exp(),
            Ensemble::Coe => 1.0 - (-PI * s * s / 4.0).exp(),
            Ensemble::Cue => erf(2.0 * s / PI.sqrt()) - 4.0 * s / PI * (-4.0 * s * s / PI).exp(),
        }
    }

    /// Large-matrix `r̃` values: `2 ln 2 − 1` for Poisson; the circular
    /// values are the accepted numerical results for large matrices.
    pub fn r_tilde(self) -> f64 {
        match self {
            Ensemble::Poisson => 2.0 * std::f64::consts::LN_2 - 1.0,
            Ensemble::Coe => 0.5307,
            Ensemble::Cue => 0.5996,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub edges: Vec<f64>,
    /// Normalized density per bin.
    pub density: Vec<f64>,
    /// Reference densities at bin centres, in [`Ensemble::ALL`] order.
    pub references: Vec<Vec<f64>>,
    /// Total-variation distance to each reference, in [`Ensemble::ALL`] order.
    pub tv_distance: Vec<f64>,
    pub closest: Ensemble,
    pub count: usize,
    /// Set below 200 spacings, where the comparison is not meaningful.
    pub too_few: bool,
}

/// Histogram of unit-mean spacings on `[0, s_max)` with `bins` bins.
/// Total-variation distances use the exact bin probabilities of each
/// reference law, with the mass beyond `s_max` as one extra bin.
pub fn spacing_histogram(spacings: &[f64], bins: usize, s_max: f64) -> Result<SpacingHistogram> {
    if bins == 0 || !(s_max > 0.0) {
        return param("histogram needs at least one bin and a positive range");
    }
    let width = s_max / bins as f64;
    let mut counts = vec![0usize; bins + 1];
    for &s in spacings {
        let b = ((s / width) as usize).min(bins);
        counts[b] += 1;
    }
    let n = spacings.len();
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let emp: Vec<f64> = counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect();
    let density = emp[..bins].iter().map(|p| p / width).collect();
    let mut references = Vec::new();
    let mut tv_distance = Vec::new();
    for e in Ensemble::ALL {
        references.push((0..bins).map(|i| e.density((i as f64 + 0.5) * width)).collect());
        let mut probs: Vec<f64> = (0..bins).map(|i| e.cdf(edges[i + 1]) - e.cdf(edges[i])).collect();
        probs.push(1.0 - e.cdf(s_max));
        tv_distance.push(0.5 * probs.iter().zip(&emp).map(|(q, p)| (q - p).abs()).sum::<f64>());
    }
    let best = (0..3).min_by(|&a, &b| tv_distance[a].total_cmp(&tv_distance[b])).unwrap_or(0);
    Ok(SpacingHistogram {
        edges,
        density,
        references,
        tv_distance,
        closest: Ensemble::ALL[best],
        count: n,
        too_few: n < 200,
    })
}
