//! Truncated operator propagator on translation-invariant r-local operators
//! of the infinite brickwall chain, its spectrum and the gap-versus-r fits.
//!
//! Operators are strings over `{1, z, √2σ⁺, √2σ⁻}`, orthonormal under
//! `⟨a|b⟩ = tr(a†b)/2^n`. A basis element `q` is a string of length `r`
//! whose first site is not the identity, anchored at site 0 (even parity) or
//! site 1 (odd parity); `o_k[q] = Σ_j e^{ikj} S^{2j} q`.

use faer::Mat;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gates::TwoQubitGate;
use crate::linalg::{self, c, cis, Gate4, C64, ONE, ZERO};

pub const MAX_R: usize = 6;

/// Coefficients below this are dropped after each gate.
const DUST: f64 = 1e-15;

/// Letters of the local operator basis, two bits each.
const ID: u8 = 0;
const Z: u8 = 1;
const PLUS: u8 = 2;
const MINUS: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "even-start")]
    Even,
    #[serde(rename = "odd-start")]
    Odd,
}

impl Parity {
    pub fn site(self) -> i64 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    fn of_site(a: i64) -> Self {
        if a.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

fn letter(code: u64, i: usize) -> u8 {
    ((code >> (2 * i)) & 3) as u8
}

fn letter_charge(l: u8) -> i32 {
    match l {
        PLUS => 1,
        MINUS => -1,
        _ => 0,
    }
}

fn string_charge(code: u64, len: usize) -> i32 {
    (0..len).map(|i| letter_charge(letter(code, i))).sum()
}

/// Renders a string code as letters `1 z + -`.
pub fn string_label(code: u64, len: usize) -> String {
    (0..len)
        .map(|i| match letter(code, i) {
            ID => '1',
            Z => 'z',
            PLUS => '+',
            _ => '-',
        })
        .collect()
}

/// Parses a label produced by [`string_label`].
pub fn parse_string(label: &str) -> Result<u64> {
    let mut code = 0u64;
    for (i, ch) in label.chars().enumerate() {
        let l = match ch {
            '1' => ID,
            'z' => Z,
            '+' => PLUS,
            '-' => MINUS,
            _ => return param(format!("bad operator letter {ch:?}")),
        };
        code |= (l as u64) << (2 * i);
    }
    Ok(code)
}

fn local_matrix(l: u8) -> [[C64; 2]; 2] {
    let s = std::f64::consts::SQRT_2;
    match l {
        ID => [[ONE, ZERO], [ZERO, ONE]],
        Z => [[ONE, ZERO], [ZERO, -ONE]],
        // |0⟩ is spin up, so σ⁺ = |0⟩⟨1|
        PLUS => [[ZERO, c(s, 0.0)], [ZERO, ZERO]],
        _ => [[ZERO, ZERO], [c(s, 0.0), ZERO]],
    }
}

/// Dense `2^len × 2^len` matrix of a string; site 0 is the most significant
/// qubit.
pub fn string_matrix(code: u64, len: usize) -> Mat<C64> {
    let mut m = Mat::from_fn(1, 1, |_, _| ONE);
    for i in 0..len {
        let a = local_matrix(letter(code, i));
        let am = Mat::from_fn(2, 2, |r, c| a[r][c]);
        m = linalg::kron(m.as_ref(), am.as_ref());
    }
    m
}

/// Coefficients of a dense `n`-site operator in the string basis, keeping
/// entries above `1e-15`.
pub fn expand_in_strings(op: &Mat<C64>, n: usize) -> Result<Vec<(u64, C64)>> {
    if op.nrows() != 1 << n || op.ncols() != 1 << n {
        return param("operator dimension does not match the number of sites");
    }
    let norm = (1u64 << n) as f64;
    let mut out = Vec::new();
    for code in 0..1u64 << (2 * n) {
        let b = string_matrix(code, n);
        let mut acc = ZERO;
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                if b[(i, j)] != ZERO {
                    // tr(b† op) = Σ conj(b_ij) op_ij
                    acc += b[(i, j)].conj() * op[(i, j)];
                }
            }
        }
        let v = acc / norm;
        if v.norm() > 1e-15 {
            out.push((code, v));
        }
    }
    Ok(out)
}

/// r-local strings of one parity and operator charge.
#[derive(Clone, Debug)]
pub struct LocalOperatorSpace {
    pub r: usize,
    pub parity: Parity,
    pub charge_block: i32,
    pub basis: Vec<u64>,
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 {
        return param("r must be at least 1");
    }
    if r > MAX_R {
        return Err(Error::Capacity(format!("r = {r} exceeds the supported maximum {MAX_R}")));
    }
    Ok(())
}

pub fn build_basis(r: usize, parity: Parity, charge_block: i32) -> Result<LocalOperatorSpace> {
    check_r(r)?;
    let basis = (0..1u64 << (2 * r))
        .filter(|&code| letter(code, 0) != ID && string_charge(code, r) == charge_block)
        .collect();
    Ok(LocalOperatorSpace { r, parity, charge_block, basis })
}

impl LocalOperatorSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.basis.iter().map(|&b| string_label(b, self.r)).collect()
    }
}

/// Heisenberg superoperator `A ↦ g† A g` on two sites in the string basis,
/// stored by input column. Entries that would change the operator charge are
/// dropped; their largest magnitude is kept in `leak`.
#[derive(Clone, Debug)]
struct SuperGate {
    columns: Vec<Vec<(u8, C64)>>,
    leak: f64,
}

impl SuperGate {
    fn new(g: &Gate4) -> Self {
        let basis: Vec<Gate4> = (0..16u8)
            .map(|idx| linalg::kron2(&local_matrix(idx >> 2), &local_matrix(idx & 3)))
            .collect();
        let gd = linalg::gate_adjoint(g);
        let mut columns = vec![Vec::new(); 16];
        let mut leak = 0.0f64;
        for (i, b_in) in basis.iter().enumerate() {
            let out = linalg::gate_mul(&gd, &linalg::gate_mul(b_in, g));
            let q_in = letter_charge(i as u8 >> 2) + letter_charge(i as u8 & 3);
            for (o, b_out) in basis.iter().enumerate() {
                let mut acc = ZERO;
                for r in 0..4 {
                    for s in 0..4 {
                        acc += b_out[r][s].conj() * out[r][s];
                    }
                }
                let v = acc / 4.0;
                let q_out = letter_charge(o as u8 >> 2) + letter_charge(o as u8 & 3);
                if q_out != q_in {
                    leak = leak.max(v.norm());
                } else if v != ZERO {
                    columns[i].push((o as u8, v));
                }
            }
        }
        Self { columns, leak }
    }
}

/// An operator on the window `[origin, origin + len)` of the infinite chain,
/// as a sparse sum of strings (site `origin + i` at letter `i`).
#[derive(Clone, Debug)]
pub struct WindowOperator {
    pub origin: i64,
    pub len: usize,
    pub terms: FxHashMap<u64, C64>,
}

impl WindowOperator {
    /// Embeds an r-site string anchored at its parity site into the window
    /// `[p − 2, p + r + 1]` that contains its one-step light cone.
    pub fn embed(code: u64, r: usize, parity: Parity) -> Result<Self> {
        check_r(r)?;
        let mut terms = FxHashMap::default();
        terms.insert(code << 4, ONE);
        Ok(Self { origin: parity.site() - 2, len: r + 4, terms })
    }

    /// Left- and right-most non-identity absolute sites over all terms.
    pub fn support(&self) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for (&code, _) in &self.terms {
            for i in 0..self.len {
                if letter(code, i) != ID {
                    lo = lo.min(self.origin + i as i64);
                    hi = hi.max(self.origin + i as i64);
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Iterates `(absolute first site, letters from there, coefficient)`.
    pub fn strings(&self) -> impl Iterator<Item = (i64, Vec<u8>, C64)> + '_ {
        self.terms.iter().map(move |(&code, &v)| {
            let letters: Vec<u8> = (0..self.len).map(|i| letter(code, i)).collect();
            (self.origin, letters, v)
        })
    }

    fn conjugate_bond(&mut self, i: usize, sg: &SuperGate) {
        let shift = 2 * i;
        let mut out: FxHashMap<u64, C64> = FxHashMap::default();
        out.reserve(self.terms.len() * 2);
        for (&code, &v) in &self.terms {
            let a = letter(code, i);
            let b = letter(code, i + 1);
            if a == ID && b == ID {
                *out.entry(code).or_insert(ZERO) += v;
                continue;
            }
            // local index 4·left + right; letter i is the left site
            let idx = ((a << 2) | b) as usize;
            let rest = code & !(0xF << shift);
            for &(o, w) in &sg.columns[idx] {
                let oc = (((o & 3) as u64) << 2 | (o >> 2) as u64) << shift;
                *out.entry(rest | oc).or_insert(ZERO) += w * v;
            }
        }
        // rounding dust from cancelling paths
        out.retain(|_, v| v.norm() > DUST);
        self.terms = out;
    }
}

/// `𝒰q = 𝕌† q 𝕌` for a homogeneous brickwall with `𝕌 = U_even U_odd`,
/// where the odd layer acts on bonds `(2j, 2j+1)`: conjugation by the even
/// layer first, then by the odd layer. The operator must keep two idle sites
/// on either side of its support.
pub fn heisenberg_step(q: &WindowOperator, gate: &TwoQubitGate) -> Result<WindowOperator> {
    heisenberg_step_with(q, &SuperGate::new(&gate.matrix))
}

fn heisenberg_step_with(q: &WindowOperator, sg: &SuperGate) -> Result<WindowOperator> {
    let mut out = q.clone();
    let Some((lo, hi)) = q.support() else {
        return Ok(out);
    };
    if lo < q.origin + 2 || hi > q.origin + q.len as i64 - 3 {
        return param("window does not contain the one-step light cone of the operator");
    }
    for first_parity in [1i64, 0] {
        for i in 0..q.len - 1 {
            if (q.origin + i as i64).rem_euclid(2) == first_parity {
                out.conjugate_bond(i, sg);
            }
        }
    }
    Ok(out)
}

/// One charge block of `𝕋(k)`: even-start strings first, then odd-start.
#[derive(Clone, Debug)]
pub struct PropagatorBlock {
    pub charge: i32,
    pub basis: Vec<(Parity, u64)>,
    pub matrix: Mat<C64>,
}

impl PropagatorBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, parity: Parity, code: u64) -> Option<usize> {
        self.basis.iter().position(|&(p, c)| p == parity && c == code)
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedPropagator {
    pub k: f64,
    pub r: usize,
    pub blocks: Vec<PropagatorBlock>,
    /// Largest charge-changing matrix element of the local superoperator.
    pub charge_leak: f64,
    /// Largest `|j|` among the shifts `S^{2j}` that contributed.
    pub max_shift: i64,
}

/// Reduces a window string to `(parity, r-site representative, shift j)`, or
/// `None` when its support is longer than `r`.
fn representative(origin: i64, code: u64, len: usize, r: usize) -> Option<(Parity, u64, i64)> {
    let first = (0..len).find(|&i| letter(code, i) != ID)?;
    let last = (0..len).rev().find(|&i| letter(code, i) != ID)?;
    if last - first + 1 > r {
        return None;
    }
    let a = origin + first as i64;
    let parity = Parity::of_site(a);
    let j = (a - parity.site()) / 2;
    Some((parity, code >> (2 * first), j))
}

/// Builds `[𝕋(k)]_{q',q} = Σ_j e^{−ikj} ⟨S^{2j} q'|𝒰q⟩` block by block.
pub fn truncated_propagator(gate: &TwoQubitGate, r: usize, k: f64) -> Result<TruncatedPropagator> {
    check_r(r)?;
    let sg = SuperGate::new(&gate.matrix);
    let r_i = r as i32;
    let mut blocks = Vec::new();
    let mut max_shift = 0i64;
    for charge in -r_i..=r_i {
        let mut basis = Vec::new();
        for parity in [Parity::Even, Parity::Odd] {
            basis.extend(build_basis(r, parity, charge)?.basis.into_iter().map(|c| (parity, c)));
        }
        if basis.is_empty() {
            continue;
        }
        let index: FxHashMap<(Parity, u64), usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let n = basis.len();
        let mut m = Mat::<C64>::zeros(n, n);
        for (col, &(parity, code)) in basis.iter().enumerate() {
            let q = WindowOperator::embed(code, r, parity)?;
            let uq = heisenberg_step_with(&q, &sg)?;
            for (&wc, &v) in &uq.terms {
                let Some((p2, rep, j)) = representative(uq.origin, wc, uq.len, r) else { continue };
                let row = *index.get(&(p2, rep)).ok_or_else(|| {
                    Error::Numerical(format!("string {} left its charge block", string_label(rep, r)))
                })?;
                max_shift = max_shift.max(j.abs());
                m[(row, col)] += cis(-k * j as f64) * v;
            }
        }
        blocks.push(PropagatorBlock { charge, basis, matrix: m });
    }
    Ok(TruncatedPropagator { k, r, blocks, charge_leak: sg.leak, max_shift })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RpEigenvalue {
    pub charge_block: i32,
    pub re: f64,
    pub im: f64,
}

impl RpEigenvalue {
    pub fn value(&self) -> C64 {
        c(self.re, self.im)
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Eigenvalues of every block, with right eigenvectors for those of modulus
/// above `1 − keep`.
#[derive(Clone, Debug)]
pub struct RpSpectrum {
    pub k: f64,
    pub r: usize,
    pub eigenvalues: Vec<RpEigenvalue>,
    /// `(charge block, eigenvalue, right eigenvector in that block's basis)`.
    pub leading: Vec<(i32, C64, Vec<C64>)>,
}

pub fn rp_spectrum(tp: &TruncatedPropagator, keep: f64) -> Result<RpSpectrum> {
    let mut eigenvalues = Vec::new();
    let mut leading = Vec::new();
    for b in &tp.blocks {
        let (vals, vecs) = linalg::eigen(b.matrix.as_ref())?;
        for (i, v) in vals.iter().enumerate() {
            eigenvalues.push(RpEigenvalue { charge_block: b.charge, re: v.re, im: v.im });
            if v.norm() > 1.0 - keep {
                leading.push((b.charge, *v, vecs.col(i).iter().copied().collect()));
            }
        }
    }
    eigenvalues.sort_by(|a, b| b.modulus().total_cmp(&a.modulus()));
    Ok(RpSpectrum { k: tp.k, r: tp.r, eigenvalues, leading })
}

pub const UNIT_TOL: f64 = 1e-8;

impl RpSpectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, RpEigenvalue::modulus)
    }

    /// Number of eigenvalues within `tol` of 1.
    pub fn unit_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|e| (e.value() - ONE).norm() < tol).count()
    }

    /// Largest modulus outside the eigenvalue-1 cluster.
    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.iter().filter(|e| (e.value() - ONE).norm() >= UNIT_TOL).map(RpEigenvalue::modulus).next()
    }
}

/// Coefficients of `Σ_j S^{2j} h` (at momentum `k`) in the block basis, for a
/// density `h` on `n` sites starting at `start`.
pub fn density_vector(block: &PropagatorBlock, r: usize, k: f64, density: &Mat<C64>, n: usize, start: i64) -> Result<Vec<C64>> {
    let mut v = vec![ZERO; block.dim()];
    for (code, coeff) in expand_in_strings(density, n)? {
        if code == 0 {
            // the identity is not part of any o_k[q]
            continue;
        }
        let Some((parity, rep, j)) = representative(start, code, n, r) else {
            return param(format!("density has support longer than r = {r}"));
        };
        if string_charge(rep, r) != block.charge {
            if coeff.norm() > 1e-12 {
                return param("density is not in this charge block");
            }
            continue;
        }
        let idx = block.index_of(parity, rep).ok_or_else(|| Error::Numerical("representative missing from basis".into()))?;
        v[idx] += cis(-k * j as f64) * coeff;
    }
    Ok(v)
}

/// Orthonormal basis of the numerical kernel of `𝕋 − 1` on one block:
/// right singular vectors with singular value below `tol`.
pub fn conserved_subspace(block: &PropagatorBlock, tol: f64) -> Result<Mat<C64>> {
    let n = block.dim();
    let mut a = block.matrix.clone();
    for i in 0..n {
        a[(i, i)] -= ONE;
    }
    let svd = a.svd().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    let sv: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let v = svd.V();
    let keep: Vec<usize> = (0..n).filter(|&i| sv[i] < tol).collect();
    Ok(Mat::from_fn(n, keep.len(), |i, j| v[(i, keep[j])]))
}

/// Modified Gram–Schmidt on the columns; near-dependent columns are an error.
pub fn orthonormalize(a: &Mat<C64>) -> Result<Mat<C64>> {
    let mut q = a.clone();
    for j in 0..q.ncols() {
        for i in 0..j {
            let mut d = ZERO;
            for r in 0..q.nrows() {
                d += q[(r, i)].conj() * q[(r, j)];
            }
            for r in 0..q.nrows() {
                let t = q[(r, i)];
                q[(r, j)] -= d * t;
            }
        }
        let norm = (0..q.nrows()).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Numerical("linearly dependent vectors".into()));
        }
        for r in 0..q.nrows() {
            q[(r, j)] /= norm;
        }
    }
    Ok(q)
}

/// Largest principal angle between the column spans of `a` and `b`, via the
/// sine form `‖(1 − P_b) Q_a‖₂`, which stays accurate for tiny angles.
/// Spans of different dimension give π/2.
pub fn max_principal_angle(a: &Mat<C64>, b: &Mat<C64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let qa = orthonormalize(a)?;
    let qb = orthonormalize(b)?;
    let proj = &qb * (linalg::adjoint(qb.as_ref()) * &qa);
    let res = &qa - proj;
    let gram = linalg::adjoint(res.as_ref()) * &res;
    let (vals, _) = linalg::hermitian_eigen(gram.as_ref())?;
    let s = vals.iter().copied().fold(0.0f64, f64::max).max(0.0).sqrt();
    Ok(s.min(1.0).asin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapModel {
    /// `1 − |λ₂| = c e^{−rate·r}`, fitted on the logarithm.
    Exponential,
    /// `1 − |λ₂| = intercept + slope·r`.
    Linear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapFit {
    pub k: f64,
    pub model: GapModel,
    pub r: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Exponential model: `c`; linear model: intercept.
    pub c: f64,
    /// Exponential model: decay rate; linear model: slope.
    pub rate: f64,
    pub sse: f64,
}

/// Least-squares line through `(x, y)`: `(intercept, slope, sse)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (intercept, slope, sse)
}

/// Gaps `1 − |λ₂|` for each `r`, fitted with the exponential model at
/// `k = 0` and the linear model otherwise. Needs two distinct `r` values
/// (the two-point estimate is exact) and nonzero gaps.
pub fn gap_scaling(gate: &TwoQubitGate, k: f64, r_list: &[usize]) -> Result<GapFit> {
    let mut rs = r_list.to_vec();
    rs.sort_unstable();
    rs.dedup();
    if rs.len() < 2 {
        return param("gap fit needs at least two distinct r values");
    }
    if rs.iter().any(|&r| !(3..=MAX_R).contains(&r)) {
        return param(format!("r values must lie in 3..={MAX_R}"));
    }
    let mut gaps = Vec::new();
    for &r in &rs {
        let spec = rp_spectrum(&truncated_propagator(gate, r, k)?, 0.0)?;
        let gap = spec.lambda2().map_or(0.0, |l| 1.0 - l);
        if gap.abs() < 1e-12 {
            return Err(Error::Degenerate(format!("no spectral gap at r = {r}; fit refused")));
        }
        gaps.push(gap);
    }
    let x: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
    let model = if k.abs() < 1e-12 { GapModel::Exponential } else { GapModel::Linear };
    let (c, rate, sse) = match model {
        GapModel::Exponential => {
            if gaps.iter().any(|&g| g <= 0.0) {
                return Err(Error::Numerical("negative gap from a spectral radius above one".into()));
            }
            let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
            let (b, s, sse) = line_fit(&x, &y);
            (b.exp(), -s, sse)
        }
        GapModel::Linear => line_fit(&x, &gaps),
    };
    Ok(GapFit { k, model, r: rs, gaps, c, rate, sse })
}
