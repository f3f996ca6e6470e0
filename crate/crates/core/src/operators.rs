//! Dense operators, symmetry-sector bases and the brickwall propagator.

use std::io::{BufRead, Write};

use faer::Mat;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gates::TwoQubitGate;
use crate::linalg::{self, apply_two_qubit, c, cis, gate_adjoint, Gate4, C64, ONE, ZERO};

/// Largest site count for full-space dense matrices.
pub const DENSE_MAX_L: usize = 12;
/// Largest site count for matrix-free state-vector paths.
pub const MATRIX_FREE_MAX_L: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" | "obc" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            _ => param(format!("unknown boundary '{s}' (expected open or periodic)")),
        }
    }
}

/// Something that maps state vectors to state vectors.
pub trait LinearAction {
    fn dim(&self) -> usize;
    fn apply(&self, psi: &[C64]) -> Vec<C64>;
}

/// A dense square complex matrix with a label.
#[derive(Clone, Debug)]
pub struct Operator {
    pub matrix: Mat<C64>,
    pub label: String,
}

impl Operator {
    pub fn new(matrix: Mat<C64>, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return param(format!("operator must be square, got {}x{}", matrix.nrows(), matrix.ncols()));
        }
        Ok(Self { matrix, label: label.into() })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: linalg::identity(dim), label: "identity".into() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(self.matrix.as_ref())
    }

    /// `‖O†O − 1‖_max < tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() < tol
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: linalg::adjoint(self.matrix.as_ref()), label: format!("{}^dag", self.label) }
    }

    pub fn commutator_norm(&self, other: &Operator) -> f64 {
        linalg::commutator_norm(self.matrix.as_ref(), other.matrix.as_ref())
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        linalg::max_abs_diff(self.matrix.as_ref(), other.matrix.as_ref())
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(self.matrix.as_ref())
    }

    /// Writes `# dim=<n>` followed by one `row,col,re,im` line per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.dim();
        writeln!(w, "# dim={n}")?;
        writeln!(w, "# label={}", self.label)?;
        writeln!(w, "row,col,re,im")?;
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = None;
        let mut label = String::new();
        let mut m: Option<Mat<C64>> = None;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# dim=") {
                let n: usize = rest.parse().map_err(|_| Error::Parameter(format!("bad dim '{rest}'")))?;
                dim = Some(n);
                m = Some(Mat::zeros(n, n));
                continue;
            }
            if let Some(rest) = line.strip_prefix("# label=") {
                label = rest.to_string();
                continue;
            }
            if line.is_empty() || line.starts_with('#') || line.starts_with("row") {
                continue;
            }
            let mat = m.as_mut().ok_or_else(|| Error::Parameter("missing '# dim=' header".into()))?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return param(format!("expected 4 fields, got '{line}'"));
            }
            let bad = |s: &str| Error::Parameter(format!("bad number '{s}'"));
            let i: usize = f[0].parse().map_err(|_| bad(f[0]))?;
            let j: usize = f[1].parse().map_err(|_| bad(f[1]))?;
            let re: f64 = f[2].parse().map_err(|_| bad(f[2]))?;
            let im: f64 = f[3].parse().map_err(|_| bad(f[3]))?;
            if i >= mat.nrows() || j >= mat.ncols() {
                return param(format!("entry ({i},{j}) out of range"));
            }
            mat[(i, j)] = c(re, im);
        }
        let _ = dim.ok_or_else(|| Error::Parameter("missing '# dim=' header".into()))?;
        Operator::new(m.unwrap(), label)
    }
}

impl LinearAction for Operator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![ZERO; n];
        for j in 0..n {
            let v = psi[j];
            if v == ZERO {
                continue;
            }
            let col = self.matrix.col(j);
            for i in 0..n {
                out[i] += col[i] * v;
            }
        }
        out
    }
}

/// Total magnetization `Σσᶻ` of a bitstring (bit 0 = up).
pub fn magnetization_of(s: usize, l: usize) -> i32 {
    l as i32 - 2 * s.count_ones() as i32
}

/// Moves the spin on site `j` to site `j + by` (mod L).
pub fn shift_state(s: usize, l: usize, by: usize) -> usize {
    let by = by % l;
    if by == 0 {
        return s;
    }
    let mask = (1usize << l) - 1;
    ((s >> by) | (s << (l - by))) & mask
}

/// Reverses the site order (`j → L−1−j`).
pub fn reflect_state(s: usize, l: usize) -> usize {
    let mut r = 0;
    for j in 0..l {
        if s & (1 << j) != 0 {
            r |= 1 << (l - 1 - j);
        }
    }
    r
}

/// One basis vector of a sector as a sparse combination of bitstrings.
#[derive(Clone, Debug)]
pub struct BasisState {
    pub representative: usize,
    pub components: Vec<(usize, C64)>,
}

/// Orthonormal basis of a magnetization (and optionally two-site momentum)
/// sector. Computational states are ordered by integer value; momentum
/// states by their smallest orbit member.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    pub l: usize,
    pub magnetization: i32,
    pub momentum: Option<usize>,
    pub states: Vec<BasisState>,
    lookup: FxHashMap<usize, (usize, C64)>,
}

fn check_l(l: usize, max: usize) -> Result<()> {
    if l < 2 || l % 2 != 0 {
        return param(format!("L = {l} must be even and at least 2"));
    }
    if l > max {
        return Err(Error::Capacity(format!("L = {l} exceeds the limit {max}")));
    }
    Ok(())
}

pub fn sector_basis(l: usize, m: i32, k: Option<usize>) -> Result<SectorBasis> {
    check_l(l, MATRIX_FREE_MAX_L)?;
    if (l as i32 + m) % 2 != 0 || m.abs() > l as i32 {
        return param(format!("magnetization {m} impossible for L = {l}"));
    }
    let n_down = ((l as i32 - m) / 2) as u32;
    let members: Vec<usize> = (0..1usize << l).filter(|s| s.count_ones() == n_down).collect();
    let mut states = Vec::new();
    match k {
        None => {
            for s in members {
                states.push(BasisState { representative: s, components: vec![(s, ONE)] });
            }
        }
        Some(k) => {
            let n = l / 2;
            if k >= n {
                return param(format!("momentum index {k} outside 0..{n}"));
            }
            let kappa = std::f64::consts::TAU * k as f64 / n as f64;
            for s in members {
                let mut orbit = vec![s];
                let mut t = shift_state(s, l, 2);
                while t != s {
                    orbit.push(t);
                    t = shift_state(t, l, 2);
                }
                if orbit.iter().any(|&o| o < s) {
                    continue;
                }
                let p = orbit.len();
                // S² acts with phase e^{iκ}; the state survives iff κ·P ≡ 0
                if (k * p) % n != 0 {
                    continue;
                }
                let norm = 1.0 / (p as f64).sqrt();
                let components = orbit.iter().enumerate().map(|(j, &o)| (o, cis(-kappa * j as f64) * norm)).collect();
                states.push(BasisState { representative: s, components });
            }
        }
    }
    let mut lookup = FxHashMap::default();
    for (b, st) in states.iter().enumerate() {
        for &(s, a) in &st.components {
            lookup.insert(s, (b, a));
        }
    }
    Ok(SectorBasis { l, magnetization: m, momentum: k, states, lookup })
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Coefficients `⟨b|ψ⟩` of a full-space vector.
    pub fn project(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for (b, st) in self.states.iter().enumerate() {
            let mut acc = ZERO;
            for &(s, a) in &st.components {
                acc += a.conj() * psi[s];
            }
            out[b] = acc;
        }
        out
    }

    /// Full-space vector `Σ_b c_b |b⟩`.
    pub fn embed(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut psi = vec![ZERO; 1 << self.l];
        for (st, &cb) in self.states.iter().zip(coeffs) {
            for &(s, a) in &st.components {
                psi[s] += a * cb;
            }
        }
        psi
    }

    /// Basis index and amplitude of a bitstring, if it belongs to the sector.
    pub fn locate(&self, s: usize) -> Option<(usize, C64)> {
        self.lookup.get(&s).copied()
    }

    /// Dense block `⟨b'|A|b⟩` of a linear action. Fails if the image of any
    /// basis vector leaks out of the sector by more than 1e−10.
    pub fn restrict_action<A: LinearAction + ?Sized>(&self, a: &A) -> Result<Mat<C64>> {
        if a.dim() != 1 << self.l {
            return param(format!("action dimension {} does not match L = {}", a.dim(), self.l));
        }
        let d = self.dim();
        let mut block = Mat::<C64>::zeros(d, d);
        let mut leak = 0.0f64;
        let mut e = vec![ZERO; d];
        for b in 0..d {
            e[b] = ONE;
            let v = self.embed(&e);
            e[b] = ZERO;
            let w = a.apply(&v);
            let col = self.project(&w);
            let back = self.embed(&col);
            for (x, y) in w.iter().zip(&back) {
                leak = leak.max((x - y).norm());
            }
            for i in 0..d {
                block[(i, b)] = col[i];
            }
        }
        if leak > 1e-10 {
            return Err(Error::SymmetryViolation { norm: leak });
        }
        Ok(block)
    }
}

/// `⟨b'|op|b⟩` on a sector, with the symmetry checked.
pub fn restrict<A: LinearAction + ?Sized>(op: &A, basis: &SectorBasis) -> Result<Operator> {
    let block = basis.restrict_action(op)?;
    let mut label = format!("L={} m={}", basis.l, basis.magnetization);
    if let Some(k) = basis.momentum {
        label.push_str(&format!(" k={k}"));
    }
    Operator::new(block, label)
}

fn check_bond(first: usize, second: usize, l: usize, boundary: Boundary) -> Result<()> {
    if first >= l || second >= l {
        return param(format!("sites ({first}, {second}) outside 0..{l}"));
    }
    let ok = match boundary {
        Boundary::Open => second == first + 1,
        Boundary::Periodic => second == (first + 1) % l,
    };
    if ok {
        Ok(())
    } else {
        param(format!("sites ({first}, {second}) are not adjacent with {boundary} boundaries"))
    }
}

/// Acts with a gate on sites `(first, second)` of a state vector (0-based
/// sites; `second` must follow `first`).
pub fn apply_gate(state: &[C64], gate: &TwoQubitGate, sites: (usize, usize), l: usize, boundary: Boundary) -> Result<Vec<C64>> {
    check_l(l, MATRIX_FREE_MAX_L)?;
    check_bond(sites.0, sites.1, l, boundary)?;
    if state.len() != 1 << l {
        return param("state length does not match L");
    }
    let mut out = state.to_vec();
    apply_two_qubit(&mut out, l, sites.0, sites.1, &gate.matrix);
    Ok(out)
}

/// `G O G†` with the gate embedded at `(first, second)`.
pub fn conjugate_by_gate(op: &Operator, gate: &TwoQubitGate, sites: (usize, usize), l: usize, boundary: Boundary) -> Result<Operator> {
    check_l(l, DENSE_MAX_L)?;
    check_bond(sites.0, sites.1, l, boundary)?;
    if op.dim() != 1 << l {
        return param("operator dimension does not match L");
    }
    let left = left_multiply(&op.matrix, l, sites, &gate.matrix);
    let t = linalg::adjoint(left.as_ref());
    let both = left_multiply(&t, l, sites, &gate.matrix);
    Ok(Operator { matrix: linalg::adjoint(both.as_ref()), label: op.label.clone() })
}

fn left_multiply(m: &Mat<C64>, l: usize, sites: (usize, usize), g: &Gate4) -> Mat<C64> {
    let n = m.nrows();
    let mut out = m.clone();
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = out[(i, j)];
        }
        apply_two_qubit(&mut col, l, sites.0, sites.1, g);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// A gate placed on bond `(site, site + 1 mod L)`.
#[derive(Clone, Debug)]
pub struct PlacedGate {
    pub site: usize,
    pub gate: TwoQubitGate,
}

/// A layered circuit of nearest-neighbour gates. The standard brickwall has
/// two layers: odd bonds `(0,1), (2,3), …` first, then even bonds
/// `(1,2), (3,4), …` (plus `(L−1, 0)` with periodic boundaries).
#[derive(Clone, Debug)]
pub struct BrickworkCircuit {
    pub l: usize,
    pub boundary: Boundary,
    pub layers: Vec<Vec<PlacedGate>>,
}

impl BrickworkCircuit {
    /// `gates_odd[j]` acts on sites `(2j, 2j+1)` and `gates_even[j]` on
    /// `(2j+1, 2j+2 mod L)`.
    pub fn new(l: usize, gates_odd: Vec<TwoQubitGate>, gates_even: Vec<TwoQubitGate>, boundary: Boundary) -> Result<Self> {
        check_l(l, MATRIX_FREE_MAX_L)?;
        let n_even = match boundary {
            Boundary::Open => l / 2 - 1,
            Boundary::Periodic => l / 2,
        };
        if gates_odd.len() != l / 2 || gates_even.len() != n_even {
            return param(format!(
                "expected {} odd-layer and {} even-layer gates, got {} and {}",
                l / 2,
                n_even,
                gates_odd.len(),
                gates_even.len()
            ));
        }
        let odd = gates_odd.into_iter().enumerate().map(|(j, gate)| PlacedGate { site: 2 * j, gate }).collect();
        let even = gates_even.into_iter().enumerate().map(|(j, gate)| PlacedGate { site: 2 * j + 1, gate }).collect();
        Ok(Self { l, boundary, layers: vec![odd, even] })
    }

    pub fn homogeneous(gate: &TwoQubitGate, l: usize, boundary: Boundary) -> Result<Self> {
        Self::two_gate(gate, gate, l, boundary)
    }

    /// One gate on every odd bond, another on every even bond.
    pub fn two_gate(odd: &TwoQubitGate, even: &TwoQubitGate, l: usize, boundary: Boundary) -> Result<Self> {
        check_l(l, MATRIX_FREE_MAX_L)?;
        let n_even = match boundary {
            Boundary::Open => l / 2 - 1,
            Boundary::Periodic => l / 2,
        };
        Self::new(l, vec![*odd; l / 2], vec![*even; n_even], boundary)
    }

    /// Arbitrary layers; every gate acts on `(site, site + 1)` (cyclic only
    /// with periodic boundaries).
    pub fn from_layers(l: usize, boundary: Boundary, layers: Vec<Vec<PlacedGate>>) -> Result<Self> {
        check_l(l, MATRIX_FREE_MAX_L)?;
        for layer in &layers {
            for g in layer {
                check_bond(g.site, (g.site + 1) % l, l, boundary)?;
            }
        }
        Ok(Self { l, boundary, layers })
    }

    pub fn gates_odd(&self) -> Vec<TwoQubitGate> {
        self.layers.first().map(|v| v.iter().map(|p| p.gate).collect()).unwrap_or_default()
    }

    pub fn gates_even(&self) -> Vec<TwoQubitGate> {
        self.layers.get(1).map(|v| v.iter().map(|p| p.gate).collect()).unwrap_or_default()
    }

    /// True when all gates within each layer are identical matrices.
    pub fn is_layer_uniform(&self) -> bool {
        self.layers.iter().all(|layer| layer.windows(2).all(|w| w[0].gate.matrix == w[1].gate.matrix))
    }

    /// True for the two-layer brickwall with one gate everywhere.
    pub fn is_homogeneous(&self) -> bool {
        self.layers.len() == 2
            && self.is_layer_uniform()
            && match (self.layers[0].first(), self.layers[1].first()) {
                (Some(a), Some(b)) => a.gate.matrix == b.gate.matrix,
                _ => false,
            }
    }

    /// One period in place.
    pub fn step(&self, psi: &mut [C64]) {
        for layer in &self.layers {
            for g in layer {
                apply_two_qubit(psi, self.l, g.site, (g.site + 1) % self.l, &g.gate.matrix);
            }
        }
    }

    /// One period of the inverse in place.
    pub fn step_inverse(&self, psi: &mut [C64]) {
        for layer in self.layers.iter().rev() {
            for g in layer.iter().rev() {
                apply_two_qubit(psi, self.l, g.site, (g.site + 1) % self.l, &gate_adjoint(&g.gate.matrix));
            }
        }
    }
}

impl LinearAction for BrickworkCircuit {
    fn dim(&self) -> usize {
        1 << self.l
    }
    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = psi.to_vec();
        self.step(&mut out);
        out
    }
}

/// Dense one-period propagator (L ≤ 12).
pub fn build_propagator(circuit: &BrickworkCircuit) -> Result<Operator> {
    if circuit.l > DENSE_MAX_L {
        return Err(Error::Capacity(format!(
            "dense propagator limited to L <= {DENSE_MAX_L}; use propagator_apply for L = {}",
            circuit.l
        )));
    }
    let n = 1usize << circuit.l;
    let mut m = Mat::<C64>::zeros(n, n);
    let mut v = vec![ZERO; n];
    for j in 0..n {
        v.iter_mut().for_each(|x| *x = ZERO);
        v[j] = ONE;
        circuit.step(&mut v);
        for i in 0..n {
            m[(i, j)] = v[i];
        }
    }
    Operator::new(m, "propagator")
}

/// Matrix-free one-period action.
pub fn propagator_apply(circuit: &BrickworkCircuit, state: &[C64]) -> Result<Vec<C64>> {
    if state.len() != 1 << circuit.l {
        return param("state length does not match L");
    }
    let mut out = state.to_vec();
    circuit.step(&mut out);
    Ok(out)
}

/// Dense diagonal operator `Σ_j σᶻ_j` (L ≤ 12).
pub fn total_magnetization(l: usize) -> Result<Operator> {
    check_l(l, DENSE_MAX_L)?;
    let n = 1usize << l;
    let m = Mat::from_fn(n, n, |i, j| if i == j { c(magnetization_of(i, l) as f64, 0.0) } else { ZERO });
    Operator::new(m, "total magnetization")
}

/// Dense permutation moving every site `j → j + by` (L ≤ 12).
pub fn shift_operator(l: usize, by: usize) -> Result<Operator> {
    check_l(l, DENSE_MAX_L)?;
    let n = 1usize << l;
    let mut m = Mat::<C64>::zeros(n, n);
    for s in 0..n {
        m[(shift_state(s, l, by), s)] = ONE;
    }
    Operator::new(m, format!("shift by {by}"))
}

/// Dense embedding of a `k`-site operator starting at `start` (cyclic).
pub fn embed_local(op: &Mat<C64>, start: usize, l: usize) -> Result<Operator> {
    check_l(l, DENSE_MAX_L)?;
    let mut m = Mat::<C64>::zeros(1 << l, 1 << l);
    linalg::add_local(&mut m, l, start, op.as_ref(), ONE);
    Operator::new(m, "local")
}

/// One magnetization block of a magnetization-conserving operator, over the
/// computational states listed in `states` (ascending).
#[derive(Clone, Debug)]
pub struct Block {
    pub magnetization: i32,
    pub states: Vec<usize>,
    pub matrix: Mat<C64>,
}

/// A magnetization-conserving operator stored block by block, which keeps
/// L = 12 operators at a fraction of the dense footprint.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub l: usize,
    pub blocks: Vec<Block>,
}

fn sector_states(l: usize, m: i32) -> Vec<usize> {
    let n_down = ((l as i32 - m) / 2) as u32;
    (0..1usize << l).filter(|s| s.count_ones() == n_down).collect()
}

/// Magnetizations `L, L−2, …, −L`.
pub fn magnetizations(l: usize) -> impl Iterator<Item = i32> {
    (0..=l).map(move |n| l as i32 - 2 * n as i32)
}

impl BlockOperator {
    /// Blocks of a linear action; fails if it leaks between sectors.
    pub fn from_action<A: LinearAction + ?Sized>(a: &A, l: usize) -> Result<Self> {
        check_l(l, MATRIX_FREE_MAX_L)?;
        let mut blocks = Vec::new();
        for m in magnetizations(l) {
            let basis = sector_basis(l, m, None)?;
            let matrix = basis.restrict_action(a)?;
            let states = basis.states.iter().map(|s| s.representative).collect();
            blocks.push(Block { magnetization: m, states, matrix });
        }
        Ok(Self { l, blocks })
    }

    /// Blocks of a dense operator; fails if entries between different
    /// magnetizations exceed 1e−10.
    pub fn from_dense(op: &Operator, l: usize) -> Result<Self> {
        check_l(l, DENSE_MAX_L)?;
        if op.dim() != 1 << l {
            return param("operator dimension does not match L");
        }
        let n = op.dim();
        let mut leak = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                if magnetization_of(i, l) != magnetization_of(j, l) {
                    leak = leak.max(op.matrix[(i, j)].norm());
                }
            }
        }
        if leak > 1e-10 {
            return Err(Error::SymmetryViolation { norm: leak });
        }
        let blocks = magnetizations(l)
            .map(|m| {
                let states = sector_states(l, m);
                let d = states.len();
                let matrix = Mat::from_fn(d, d, |i, j| op.matrix[(states[i], states[j])]);
                Block { magnetization: m, states, matrix }
            })
            .collect();
        Ok(Self { l, blocks })
    }

    /// Sum of local terms `(start, op)`; each op acts on consecutive cyclic
    /// sites and must conserve magnetization.
    pub fn from_local_terms(l: usize, terms: &[(usize, Mat<C64>)]) -> Result<Self> {
        check_l(l, MATRIX_FREE_MAX_L)?;
        let mut blocks = Vec::new();
        for m in magnetizations(l) {
            let states = sector_states(l, m);
            let d = states.len();
            let index: FxHashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            let mut matrix = Mat::<C64>::zeros(d, d);
            for (start, op) in terms {
                let k = op.nrows().trailing_zeros() as usize;
                let bits: Vec<usize> = (0..k).map(|t| 1usize << (l - 1 - (start + t) % l)).collect();
                let mask = bits.iter().fold(0, |a, b| a | b);
                for (col, &s) in states.iter().enumerate() {
                    let lc = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(s & b != 0));
                    for lr in 0..1usize << k {
                        let v = op[(lr, lc)];
                        if v == ZERO {
                            continue;
                        }
                        let mut t = s & !mask;
                        for (q, &b) in bits.iter().enumerate() {
                            if lr & (1 << (k - 1 - q)) != 0 {
                                t |= b;
                            }
                        }
                        let row = *index.get(&t).ok_or(Error::SymmetryViolation { norm: v.norm() })?;
                        matrix[(row, col)] += v;
                    }
                }
            }
            blocks.push(Block { magnetization: m, states, matrix });
        }
        Ok(Self { l, blocks })
    }

    pub fn to_dense(&self) -> Result<Operator> {
        check_l(self.l, DENSE_MAX_L)?;
        let n = 1usize << self.l;
        let mut m = Mat::<C64>::zeros(n, n);
        for b in &self.blocks {
            for (j, &sj) in b.states.iter().enumerate() {
                for (i, &si) in b.states.iter().enumerate() {
                    m[(si, sj)] = b.matrix[(i, j)];
                }
            }
        }
        Operator::new(m, "blocks")
    }

    pub fn block(&self, m: i32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.magnetization == m)
    }

    fn zip_max(&self, other: &Self, f: impl Fn(&Mat<C64>, &Mat<C64>) -> f64) -> f64 {
        self.blocks
            .iter()
            .map(|b| match other.block(b.magnetization) {
                Some(o) => f(&b.matrix, &o.matrix),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// `‖AB − BA‖_max`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        self.zip_max(other, |a, b| linalg::commutator_norm(a.as_ref(), b.as_ref()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.zip_max(other, |a, b| linalg::max_abs_diff(a.as_ref(), b.as_ref()))
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::max_abs(b.matrix.as_ref())).fold(0.0, f64::max)
    }

    /// `tr(O) / 2^L`.
    pub fn normalized_trace(&self) -> C64 {
        let mut t = ZERO;
        for b in &self.blocks {
            for i in 0..b.matrix.nrows() {
                t += b.matrix[(i, i)];
            }
        }
        t / (1u64 << self.l) as f64
    }

    /// Entry-wise map over blocks.
    pub fn map_blocks(&self, f: impl Fn(&Mat<C64>) -> Mat<C64>) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block { magnetization: b.magnetization, states: b.states.clone(), matrix: f(&b.matrix) })
            .collect();
        Self { l: self.l, blocks }
    }

    /// `O − tr(O)/2^L`.
    pub fn traceless(&self) -> Self {
        let t = self.normalized_trace();
        self.map_blocks(|m| {
            let mut r = m.clone();
            for i in 0..r.nrows() {
                r[(i, i)] -= t;
            }
            r
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_blocks(|m| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s))
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|m| linalg::adjoint(m.as_ref()))
    }

    /// `(O + O†)/2`.
    pub fn hermitian_part(&self) -> Self {
        self.map_blocks(|m| Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5))
    }

    /// `(O − O†)/(2i)`.
    pub fn anti_hermitian_part(&self) -> Self {
        let f = c(0.0, -0.5);
        self.map_blocks(|m| Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] - m[(j, i)].conj()) * f))
    }

    /// Hilbert–Schmidt norm `sqrt(tr(O†O)/2^L)`.
    pub fn hs_norm(&self) -> f64 {
        let mut s = 0.0;
        for b in &self.blocks {
            for j in 0..b.matrix.ncols() {
                for i in 0..b.matrix.nrows() {
                    s += b.matrix[(i, j)].norm_sqr();
                }
            }
        }
        (s / (1u64 << self.l) as f64).sqrt()
    }
}

/// Length of the shortest cyclic interval containing every site in `set`.
pub fn cyclic_support(set: usize, l: usize) -> usize {
    if set == 0 {
        return 0;
    }
    let site = |j: usize| set & (1 << (l - 1 - j)) != 0;
    let mut longest = 0;
    let mut run = 0;
    for j in 0..2 * l {
        if site(j % l) {
            run = 0;
        } else {
            run += 1;
            longest = longest.max(run.min(l));
        }
    }
    l - longest
}

/// Hilbert–Schmidt weight `tr(O†O)/2^L` of an operator resolved by the cyclic
/// support length of its strings over `{1, σᶻ, σ⁺, σ⁻}`; entry `k` collects
/// strings acting nontrivially on a shortest interval of `k` sites. The
/// identity component (k = 0) is reported but is not part of any density.
pub fn support_weights(op: &BlockOperator) -> Vec<f64> {
    let l = op.l;
    let n = 1usize << l;
    let supp: Vec<usize> = (0..n).map(|s| cyclic_support(s, l)).collect();
    let mut by_flip: FxHashMap<usize, Vec<(usize, C64)>> = FxHashMap::default();
    for b in &op.blocks {
        for (j, &s) in b.states.iter().enumerate() {
            for (i, &t) in b.states.iter().enumerate() {
                let v = b.matrix[(i, j)];
                if v != ZERO {
                    by_flip.entry(s ^ t).or_default().push((s, v));
                }
            }
        }
    }
    let mut weights = vec![0.0; l + 1];
    let mut g = vec![ZERO; n];
    for (f, entries) in by_flip {
        g.iter_mut().for_each(|x| *x = ZERO);
        for (s, v) in entries {
            g[s] = v;
        }
        let mut free = 0u32;
        for p in 0..l {
            let bit = 1usize << p;
            if f & bit != 0 {
                continue;
            }
            free += 1;
            for i in 0..n {
                if i & bit == 0 {
                    let (a, b) = (g[i], g[i | bit]);
                    g[i] = a + b;
                    g[i | bit] = a - b;
                }
            }
        }
        let norm = (1u64 << free) as f64;
        let flip_factor = 0.5f64.powi(f.count_ones() as i32);
        for (x, v) in g.iter().enumerate() {
            if *v == ZERO {
                continue;
            }
            let set = f | (x & !f);
            weights[supp[set]] += (v / norm).norm_sqr() * flip_factor;
        }
    }
    weights
}
