//! Infinite-temperature correlation functions and domain-wall melting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gates::TwoQubitGate;
use crate::linalg::{self, cis, C64, ZERO};
use crate::operators::{BlockOperator, Boundary, BrickworkCircuit, DENSE_MAX_L, MATRIX_FREE_MAX_L};

/// How the `2^L`-dimensional trace is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Method {
    /// Eigen-decomposition of every magnetization block of `𝕌`.
    ExactTrace,
    /// Average of `⟨ψ|A(t)B|ψ⟩` over normalized complex Gaussian vectors.
    /// Vector `i` is drawn from ChaCha8 seeded with `seed` on stream `i`.
    Typicality { samples: usize, seed: u64 },
}

pub const DEFAULT_TYPICALITY_SAMPLES: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub times: Vec<usize>,
    pub values: Vec<f64>,
    /// Sample standard error; typicality only.
    pub estimator_error: Option<Vec<f64>>,
    pub method: Method,
}

/// A diagonal observable given by its value on each computational state.
pub type Diagonal = Vec<f64>;

fn sz(s: usize, l: usize, site: usize) -> f64 {
    // |0⟩ is spin up
    if s >> (l - 1 - site) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn sigma_z(l: usize, site: usize) -> Diagonal {
    (0..1usize << l).map(|s| sz(s, l, site)).collect()
}

/// `S = Σ_j (−1)^j (σᶻ_{2j−1} + σᶻ_{2j})` in 1-based sites, i.e. 0-based
/// pairs `(2i, 2i+1)` with sign `(−1)^{i+1}`.
pub fn staggered_magnetization(l: usize) -> Diagonal {
    (0..1usize << l)
        .map(|s| (0..l).map(|q| if (q / 2) % 2 == 0 { -sz(s, l, q) } else { sz(s, l, q) }).sum())
        .collect()
}

/// `tr(A(t) B)/2^L` with `A(t) = 𝕌^{−t} A 𝕌^t`, for `t = 0..=steps`.
pub fn correlation(circuit: &BrickworkCircuit, a: &Diagonal, b: &Diagonal, steps: usize, method: Method, threads: usize) -> Result<CorrelationSeries> {
    let n = 1usize << circuit.l;
    if a.len() != n || b.len() != n {
        return param("observable length does not match L");
    }
    let times: Vec<usize> = (0..=steps).collect();
    match method {
        Method::ExactTrace => {
            if circuit.l > DENSE_MAX_L {
                return Err(Error::Capacity(format!("exact traces limited to L <= {DENSE_MAX_L}")));
            }
            let values = exact_correlation(circuit, a, b, steps)?;
            Ok(CorrelationSeries { times, values, estimator_error: None, method })
        }
        Method::Typicality { samples, seed } => {
            if circuit.l > MATRIX_FREE_MAX_L {
                return Err(Error::Capacity(format!("typicality limited to L <= {MATRIX_FREE_MAX_L}")));
            }
            if samples < 2 {
                return param("typicality needs at least two samples");
            }
            let per_sample = run_samples(samples, threads, |i| typical_sample(circuit, a, b, steps, seed, i as u64));
            let (values, errors) = mean_and_error(&per_sample, steps + 1);
            Ok(CorrelationSeries { times, values, estimator_error: Some(errors), method })
        }
    }
}

fn run_samples<F>(samples: usize, threads: usize, f: F) -> Vec<Vec<f64>>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let threads = threads.clamp(1, samples);
    if threads == 1 {
        return (0..samples).map(&f).collect();
    }
    let mut out: Vec<Option<Vec<f64>>> = vec![None; samples];
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..threads)
            .map(|t| scope.spawn(move || (t..samples).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("typicality worker panicked") {
                out[i] = Some(v);
            }
        }
    });
    out.into_iter().map(|v| v.expect("every sample computed")).collect()
}

fn mean_and_error(samples: &[Vec<f64>], len: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut mean = vec![0.0; len];
    let mut err = vec![0.0; len];
    for t in 0..len {
        let m = samples.iter().map(|s| s[t]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / (n - 1.0);
        mean[t] = m;
        err[t] = (var / n).sqrt();
    }
    (mean, err)
}

/// Normalized complex Gaussian vector from ChaCha8 (`seed`, stream `stream`).
pub fn random_state(l: usize, seed: u64, stream: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut v: Vec<C64> = (0..1usize << l)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

fn typical_sample(circuit: &BrickworkCircuit, a: &Diagonal, b: &Diagonal, steps: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut psi = random_state(circuit.l, seed, stream);
    let mut phi: Vec<C64> = psi.iter().zip(b).map(|(z, w)| z * w).collect();
    let mut out = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            circuit.step(&mut psi);
            circuit.step(&mut phi);
        }
        let v: f64 = psi.iter().zip(&phi).zip(a).map(|((p, f), w)| (p.conj() * f).re * w).sum();
        out.push(v);
    }
    out
}

/// `Σ_blocks Σ_{ab} Ã_ab B̃_ba e^{i(θ_b − θ_a)t} / 2^L` in the eigenbasis of
/// each block.
fn exact_correlation(circuit: &BrickworkCircuit, a: &Diagonal, b: &Diagonal, steps: usize) -> Result<Vec<f64>> {
    let u = BlockOperator::from_action(circuit, circuit.l)?;
    let norm = (1usize << circuit.l) as f64;
    let mut out = vec![0.0; steps + 1];
    for block in &u.blocks {
        let d = block.states.len();
        let (vals, v) = linalg::unitary_eigen(block.matrix.as_ref())?;
        let theta: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        let rot = |w: &Diagonal| {
            let dv = faer::Mat::from_fn(d, d, |i, j| v[(i, j)] * w[block.states[i]]);
            linalg::adjoint(v.as_ref()) * dv
        };
        let at = rot(a);
        let bt = rot(b);
        // w_ab = Ã_ab B̃_ba
        let w = faer::Mat::from_fn(d, d, |i, j| at[(i, j)] * bt[(j, i)]);
        for (t, slot) in out.iter_mut().enumerate() {
            let ph: Vec<C64> = theta.iter().map(|th| cis(th * t as f64)).collect();
            let mut acc = ZERO;
            for i in 0..d {
                let mut row = ZERO;
                for j in 0..d {
                    row += w[(i, j)] * ph[j];
                }
                acc += row * ph[i].conj();
            }
            *slot += acc.re / norm;
        }
    }
    Ok(out)
}

/// `tr(σᶻ₁(t) σᶻ₁)/2^L` for the homogeneous open chain.
pub fn boundary_autocorrelation(gate: &TwoQubitGate, l: usize, steps: usize, method: Method, threads: usize) -> Result<CorrelationSeries> {
    let circuit = BrickworkCircuit::homogeneous(gate, l, Boundary::Open)?;
    let z = sigma_z(l, 0);
    correlation(&circuit, &z, &z, steps, method, threads)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub sse: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    LineFit { intercept, slope, sse }
}

/// Power-law (`log C` vs `log t`) and exponential (`log C` vs `t`) fits on
/// `[t_min, t_max]`, both scored by the SSE of `log C`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFits {
    pub t_min: usize,
    pub t_max: usize,
    /// `C ≈ e^{intercept} t^{slope}`.
    pub power_law: LineFit,
    /// `C ≈ e^{intercept + slope·t}`.
    pub exponential: LineFit,
    /// `SSE_exponential / SSE_power_law`.
    pub sse_ratio: f64,
}

pub fn fit_decay(series: &CorrelationSeries, t_min: usize, t_max: usize) -> Result<DecayFits> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| (t_min..=t_max).contains(*t) && **t > 0)
        .map(|(&t, &v)| (t as f64, v))
        .collect();
    if pts.len() < 3 {
        return param("decay fit needs at least three time points");
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::Numerical(format!("correlation {v:.3e} at t = {t} is not positive; log fits undefined")));
    }
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let logc: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let power_law = line_fit(&logt, &logc);
    let exponential = line_fit(&t, &logc);
    Ok(DecayFits { t_min, t_max, power_law, exponential, sse_ratio: exponential.sse / power_law.sse })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StaggeredResult {
    pub series: CorrelationSeries,
    pub fits: Option<DecayFits>,
}

/// `C(t) = tr(S(t) S)/(L 2^L)` on a periodic ring, with decay fits on the
/// window `[steps/20, steps]` when every value there is positive.
pub fn staggered_correlation(gate: &TwoQubitGate, l: usize, steps: usize, method: Method, threads: usize) -> Result<StaggeredResult> {
    if l % 4 != 0 {
        return param("staggered magnetization needs L divisible by 4");
    }
    let circuit = BrickworkCircuit::homogeneous(gate, l, Boundary::Periodic)?;
    let s = staggered_magnetization(l);
    let mut series = correlation(&circuit, &s, &s, steps, method, threads)?;
    series.values.iter_mut().for_each(|v| *v /= l as f64);
    if let Some(e) = series.estimator_error.as_mut() {
        e.iter_mut().for_each(|v| *v /= l as f64);
    }
    let fits = if steps >= 20 { fit_decay(&series, (steps / 20).max(1), steps).ok() } else { None };
    Ok(StaggeredResult { series, fits })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainWallResult {
    #[serde(rename = "L")]
    pub l: usize,
    /// `⟨σᶻ_j(t)⟩`, one row per step.
    pub profiles: Vec<Vec<f64>>,
    /// `ΔM(t) = (L/2 − Σ_{j<L/2} ⟨σᶻ_j(t)⟩)/2`: spins moved across the centre.
    pub transported: Vec<f64>,
    /// Largest change of the total magnetization.
    pub magnetization_drift: f64,
}

fn profile(psi: &[C64], l: usize) -> Vec<f64> {
    let mut out = vec![0.0; l];
    for (s, z) in psi.iter().enumerate() {
        let p = z.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (q, slot) in out.iter_mut().enumerate() {
            *slot += p * sz(s, l, q);
        }
    }
    out
}

/// Evolves `|↑…↑↓…↓⟩` under the homogeneous open chain.
pub fn domain_wall_evolution(gate: &TwoQubitGate, l: usize, steps: usize) -> Result<DomainWallResult> {
    if l % 2 != 0 {
        return param("domain wall needs even L");
    }
    if l > MATRIX_FREE_MAX_L {
        return Err(Error::Capacity(format!("state-vector evolution limited to L <= {MATRIX_FREE_MAX_L}")));
    }
    let circuit = BrickworkCircuit::homogeneous(gate, l, Boundary::Open)?;
    let mut psi = vec![ZERO; 1 << l];
    // left half up (bit 0), right half down (bit 1)
    psi[(1usize << (l / 2)) - 1] = C64::new(1.0, 0.0);
    let mut profiles = Vec::with_capacity(steps + 1);
    let mut transported = Vec::with_capacity(steps + 1);
    let mut drift = 0.0f64;
    for t in 0..=steps {
        if t > 0 {
            circuit.step(&mut psi);
        }
        let p = profile(&psi, l);
        let left: f64 = p[..l / 2].iter().sum();
        drift = drift.max(p.iter().sum::<f64>().abs());
        transported.push((l as f64 / 2.0 - left) / 2.0);
        profiles.push(p);
    }
    Ok(DomainWallResult { l, profiles, transported, magnetization_drift: drift })
}
