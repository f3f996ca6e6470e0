//! Acceptance run: one PASS/FAIL line per criterion. Criteria are computed
//! in parallel and reported in order; the process fails if any criterion
//! fails.

use std::f64::consts::PI;
use std::time::Instant;

use brickwall::dynamics::{boundary_autocorrelation, staggered_correlation, Method};
use brickwall::gates::{
    gate_from_haar, gate_from_hamiltonian, hamiltonian_params_from_gate, sample_haar_stream, HaarGateParams, HamiltonianGateParams,
    TwoQubitGate,
};
use brickwall::integrability::{
    charge_q1, charge_q1_closed_form, check_inversion, check_yang_baxter, classify_phase_haar, classify_phase_hamiltonian, gate_to_r,
    haar_to_r, higher_charge, q1_density, Phase, Sign,
};
use brickwall::linalg::C64;
use brickwall::operators::{support_weights, BlockOperator, Boundary, BrickworkCircuit};
use brickwall::ruelle::{conserved_subspace, density_vector, gap_scaling, max_principal_angle, rp_spectrum, truncated_propagator, UNIT_TOL};
use brickwall::spectral::{all_sectors, bulk_magnetization_window, pooled_r_tilde, Resolution};
use brickwall::symmetry::{global_time_reversal, time_reversal_check};
use brickwall::Error;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference_gate(delta: f64) -> TwoQubitGate {
    gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5)).unwrap()
}

fn haar_gates_per_phase(count: usize, seed: u64) -> Vec<(Phase, HaarGateParams)> {
    let (mut n1, mut n2) = (0, 0);
    let mut out = Vec::new();
    for p in sample_haar_stream(seed, 100 * count) {
        let phase = classify_phase_haar(&p);
        let slot = match phase {
            Phase::I => &mut n1,
            Phase::II => &mut n2,
            Phase::Critical => continue,
        };
        if *slot < count && haar_to_r(&p).is_ok() {
            *slot += 1;
            out.push((phase, p));
        }
        if n1 == count && n2 == count {
            break;
        }
    }
    out
}

fn c1_yang_baxter() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut ybe, mut inv, mut skipped) = (0.0f64, 0.0f64, 0);
    for p in sample_haar_stream(1, 1000) {
        let Ok(map) = haar_to_r(&p) else {
            skipped += 1;
            continue;
        };
        let u = map.params.u;
        let (x, y) = (rng.random_range(-1.0..1.0) * u, rng.random_range(-1.0..1.0) * u);
        ybe = ybe.max(check_yang_baxter(&map.params, x, y).unwrap());
        inv = inv.max(check_inversion(&map.params, x).unwrap());
    }
    outcome(ybe < 1e-12 && inv < 1e-13, format!("1000 Haar gates ({skipped} on degenerate points): max YBE {ybe:.2e} (< 1e-12), max inversion {inv:.2e} (< 1e-13)"))
}

fn c2_map_round_trip() -> Outcome {
    let (mut rec, mut compared, mut disagree, mut mapped) = (0.0f64, 0, 0, 0);
    for p in sample_haar_stream(2, 1000) {
        if let Ok(map) = haar_to_r(&p) {
            mapped += 1;
            rec = rec.max(map.reconstruction_error);
        }
        let rule = classify_phase_haar(&p);
        let ham = hamiltonian_params_from_gate(&gate_from_haar(&p)).and_then(|h| classify_phase_hamiltonian(&h)).unwrap();
        if rule == Phase::Critical || ham.phase == Phase::Critical {
            continue;
        }
        compared += 1;
        if rule != ham.phase {
            disagree += 1;
        }
    }
    outcome(
        rec < 1e-11 && disagree == 0 && mapped > 990,
        format!("reconstruction max {rec:.2e} (< 1e-11) over {mapped} mapped gates; phase labels disagree on {disagree}/{compared}"),
    )
}

fn c3_first_charges() -> Outcome {
    let l = 8;
    let (mut comm, mut closed) = (0.0f64, 0.0f64);
    let gates = haar_gates_per_phase(50, 3);
    for (_, p) in &gates {
        let gate = gate_from_haar(p);
        let rp = haar_to_r(p).unwrap().params;
        let u = BlockOperator::from_action(&BrickworkCircuit::homogeneous(&gate, l, Boundary::Periodic).unwrap(), l).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let q = charge_q1(&rp, sign, l).unwrap();
            comm = comm.max(q.operator.commutator_norm(&u));
            let cf = charge_q1_closed_form(&rp, sign, l).unwrap();
            closed = closed.max(cf.operator.max_abs_diff(&q.operator.traceless()));
        }
    }
    outcome(
        comm < 1e-9 && closed < 1e-10 && gates.len() == 100,
        format!("{} gates at L=8: max ||[Q1, U]|| {comm:.2e} (< 1e-9), closed form vs derivative {closed:.2e} (< 1e-10)", gates.len()),
    )
}

fn c4_second_charge() -> Outcome {
    let l = 12;
    let jobs: Vec<(f64, Sign)> = [1.0, 1.4].iter().flat_map(|&d| [(d, Sign::Plus), (d, Sign::Minus)]).collect();
    let results: Vec<(f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(delta, sign)| {
                s.spawn(move || {
                    let gate = reference_gate(delta);
                    let p = gate_to_r(&gate).unwrap().0.params;
                    let u = BlockOperator::from_action(&BrickworkCircuit::homogeneous(&gate, l, Boundary::Periodic).unwrap(), l).unwrap();
                    let q = higher_charge(&p, 2, sign, l).unwrap();
                    let w = support_weights(&q.operator.traceless());
                    let total: f64 = w[1..].iter().sum();
                    let outside: f64 = w[6..].iter().sum();
                    ((outside / total).sqrt(), q.operator.commutator_norm(&u))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let resid = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let comm = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        resid < 1e-7 && comm < 1e-7,
        format!("Q2 at L=12, both reference points and signs: weight beyond 5 sites {resid:.2e} (< 1e-7), ||[Q2, U]|| {comm:.2e} (< 1e-7)"),
    )
}

fn letter_z() -> Mat<C64> {
    Mat::from_fn(2, 2, |i, j| if i != j { C64::new(0.0, 0.0) } else { C64::new(1.0 - 2.0 * i as f64, 0.0) })
}

fn c5_unit_eigenvalues() -> Outcome {
    let mut gates = vec![reference_gate(1.0), reference_gate(1.4)];
    gates.extend(haar_gates_per_phase(5, 5).iter().map(|(_, p)| gate_from_haar(p)));
    let (mut bad_mult, mut angle) = (Vec::new(), 0.0f64);
    for (i, gate) in gates.iter().enumerate() {
        for r in [3, 5] {
            let m = rp_spectrum(&truncated_propagator(gate, r, 0.0).unwrap(), 0.0).unwrap().unit_multiplicity(UNIT_TOL);
            if m != r {
                bad_mult.push(format!("gate {i} r={r}: {m}"));
            }
        }
        let tp = truncated_propagator(gate, 3, 0.0).unwrap();
        let block = tp.blocks.iter().find(|b| b.charge == 0).unwrap();
        let p = gate_to_r(gate).unwrap().0.params;
        let z = letter_z();
        let a = density_vector(block, 3, 0.0, &z, 1, 0).unwrap();
        let b = density_vector(block, 3, 0.0, &z, 1, 1).unwrap();
        let qp = density_vector(block, 3, 0.0, &q1_density(&p, Sign::Plus).unwrap(), 3, 1).unwrap();
        let qm = density_vector(block, 3, 0.0, &q1_density(&p, Sign::Minus).unwrap(), 3, 0).unwrap();
        let cols = [a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>(), qp, qm];
        let reference = Mat::from_fn(block.dim(), 3, |i, j| cols[j][i]);
        let kernel = conserved_subspace(block, 1e-8).unwrap();
        angle = angle.max(max_principal_angle(&kernel, &reference).unwrap());
    }
    outcome(
        bad_mult.is_empty() && angle < 1e-6,
        format!("{} gates: multiplicity = r at r in {{3,5}} ({} mismatches {:?}); r=3 max principal angle {angle:.2e} (< 1e-6)", gates.len(), bad_mult.len(), bad_mult),
    )
}

fn c6_gap_scaling() -> Outcome {
    let f1 = gap_scaling(&reference_gate(1.0), 0.0, &[3, 5]).unwrap();
    let f2 = gap_scaling(&reference_gate(1.4), 0.0, &[3, 5]).unwrap();
    let shrink = |g: &[f64]| g[1] < g[0];
    let pass = shrink(&f1.gaps)
        && shrink(&f2.gaps)
        && (f1.rate - 0.5).abs() <= 0.2
        && (f2.rate - 0.5).abs() <= 0.2
        && f1.c > f2.c
        && (f1.c - 0.8).abs() <= 0.3 * 0.8
        && (f2.c - 0.12).abs() <= 0.5 * 0.12;
    outcome(
        pass,
        format!(
            "delta=1.0: gaps {:.4}/{:.4}, rate {:.3}, c {:.4} (0.8 +- 30%); delta=1.4: gaps {:.4}/{:.4}, rate {:.3}, c {:.4} (0.12 +- 50%)",
            f1.gaps[0], f1.gaps[1], f1.rate, f1.c, f2.gaps[0], f2.gaps[1], f2.rate, f2.c
        ),
    )
}

fn pooled(l: usize, boundary: Boundary, two_gate: bool, resolution: Resolution, realizations: u64) -> f64 {
    let mut all = Vec::new();
    for i in 0..realizations {
        let g = sample_haar_stream(i, 2);
        let a = gate_from_haar(&g[0]);
        let c = if two_gate {
            BrickworkCircuit::two_gate(&a, &gate_from_haar(&g[1]), l, boundary).unwrap()
        } else {
            BrickworkCircuit::homogeneous(&a, l, boundary).unwrap()
        };
        all.extend(all_sectors(&c, resolution, bulk_magnetization_window(l)).unwrap());
    }
    pooled_r_tilde(&all)
}

fn c7_level_statistics() -> Outcome {
    let l = 12;
    let cases = [
        ("homogeneous PBC full", Boundary::Periodic, false, Resolution::Full, 0.386),
        ("two-gate OBC magnetization", Boundary::Open, true, Resolution::Magnetization, 0.53),
        ("two-gate PBC momentum", Boundary::Periodic, true, Resolution::Momentum, 0.60),
    ];
    let got: Vec<f64> = std::thread::scope(|s| {
        let h: Vec<_> = cases.iter().map(|&(_, b, two, res, _)| s.spawn(move || pooled(l, b, two, res, 10))).collect();
        h.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let parts: Vec<String> = cases
        .iter()
        .zip(&got)
        .map(|((name, _, _, _, want), r)| format!("{name} {r:.4} ({want} +- 0.015{})", if (r - want).abs() <= 0.015 { "" } else { ", miss" }))
        .collect();
    let pass = cases.iter().zip(&got).all(|(c, r)| (r - c.4).abs() <= 0.015);
    outcome(pass, format!("L=12, 10 realizations: {}", parts.join("; ")))
}

fn random_ham_gate(rng: &mut ChaCha8Rng) -> TwoQubitGate {
    let p = HamiltonianGateParams {
        tau: rng.random_range(0.2..1.5),
        delta: rng.random_range(-1.5..1.5),
        b: rng.random_range(-1.0..1.0),
        d: rng.random_range(-1.0..1.0),
        m: rng.random_range(-0.5..0.5),
        a: rng.random_range(-0.5..0.5),
        j: rng.random_range(0.3..1.3),
    };
    gate_from_hamiltonian(&p).unwrap()
}

fn disordered(l: usize, boundary: Boundary, rng: &mut ChaCha8Rng) -> BrickworkCircuit {
    let n_even = if boundary == Boundary::Open { l / 2 - 1 } else { l / 2 };
    let odd = (0..l / 2).map(|_| random_ham_gate(rng)).collect();
    let even = (0..n_even).map(|_| random_ham_gate(rng)).collect();
    BrickworkCircuit::new(l, odd, even, boundary).unwrap()
}

/// Sum over gates of `arg V₁₀ − α`, taken straight from the matrices.
fn defect_oracle(c: &BrickworkCircuit) -> f64 {
    let mut total = 0.0;
    for layer in &c.layers {
        for p in layer {
            let g = p.gate.matrix;
            let det = g[1][1] * g[2][2] - g[1][2] * g[2][1];
            total += g[2][1].arg() - (-det).arg() / 2.0;
        }
    }
    total
}

fn c8_time_reversal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut spec, mut rev) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let rep = time_reversal_check(&disordered(8, Boundary::Open, &mut rng)).unwrap();
        spec = spec.max(rep.spectral_match_error);
        rev = rev.max(rep.residual_tr.unwrap_or(f64::INFINITY));
    }
    let (mut refused, mut defect_err) = (0, 0.0f64);
    for _ in 0..20 {
        let c = disordered(8, Boundary::Periodic, &mut rng);
        if let Err(Error::AngleDefect { defect }) = global_time_reversal(&c) {
            refused += 1;
            // reversal angles are fixed modulo π per gate
            let d = defect - defect_oracle(&c);
            defect_err = defect_err.max((d - (d / PI).round() * PI).abs());
        }
    }
    outcome(
        spec < 1e-10 && rev < 1e-11 && refused == 20 && defect_err < 1e-10,
        format!("20 OBC L=8: spectra {spec:.2e} (< 1e-10), TUT^-1 - U^dag {rev:.2e} (< 1e-11); PBC refused {refused}/20, defect error {defect_err:.2e}"),
    )
}

fn c9_strong_zero_mode() -> Outcome {
    let s1 = boundary_autocorrelation(&reference_gate(1.0), 12, 200, Method::ExactTrace, 1).unwrap();
    let s2 = boundary_autocorrelation(&reference_gate(1.4), 12, 200, Method::ExactTrace, 1).unwrap();
    let plateau = s1.values[20..].iter().copied().fold(f64::INFINITY, f64::min);
    let (t_min, low) = s2.values.iter().copied().enumerate().fold((0, f64::INFINITY), |a, (t, v)| if v < a.1 { (t, v) } else { a });
    let tail = &s2.values[100..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    outcome(
        plateau > 0.1 && low < 0.02,
        format!("L=12 OBC exact: phase I min over t in [20,200] {plateau:.4} (> 0.1); phase II min {low:.4} at t={t_min} (< 0.02), mean over t in [100,200] {tail_mean:.4}"),
    )
}

fn c10_staggered() -> Outcome {
    let r = staggered_correlation(&reference_gate(1.0), 12, 200, Method::ExactTrace, 1).unwrap();
    let window = &r.series.values[10..];
    let negatives = window.iter().filter(|v| **v <= 0.0).count();
    match &r.fits {
        Some(f) => outcome(f.sse_ratio >= 3.0, format!("L=12 phase I: SSE(exp)/SSE(power) {:.3} (>= 3) on t in [{}, {}]", f.sse_ratio, f.t_min, f.t_max)),
        None => outcome(
            false,
            format!(
                "L=12 phase I: no log-space fit, C(t) is non-positive at {negatives}/{} times in [10,200] (C(10) {:+.2e}, max |C| there {:.2e})",
                window.len(),
                r.series.values[10],
                window.iter().map(|v| v.abs()).fold(0.0, f64::max)
            ),
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Yang-Baxter and inversion", c1_yang_baxter),
        ("Haar map round trip and phase labels", c2_map_round_trip),
        ("first charges", c3_first_charges),
        ("second charge support", c4_second_charge),
        ("RP unit eigenvalues", c5_unit_eigenvalues),
        ("RP gap scaling", c6_gap_scaling),
        ("level statistics", c7_level_statistics),
        ("time reversal", c8_time_reversal),
        ("strong zero mode", c9_strong_zero_mode),
        ("staggered magnetization decay", c10_staggered),
    ];
    let start = Instant::now();
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t0 = Instant::now();
                    (f(), t0.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        failed += !o.pass as usize;
        println!("criterion {:>2} {}: {name} [{secs:.1}s] {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
