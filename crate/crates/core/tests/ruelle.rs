mod common;

use std::f64::consts::{PI, SQRT_2};

use brickwall::error::Error;
use brickwall::gates::{gate_from_haar, gate_from_hamiltonian, sample_haar, HamiltonianGateParams, TwoQubitGate};
use brickwall::integrability::{classify_phase_haar, gate_to_r, q1_density, Phase, Sign};
use brickwall::linalg::C64;
use brickwall::ruelle::*;
use common::{brickwork, cm, eye, gate_mat, kron, max_diff};
use faer::Mat;
use proptest::prelude::*;

fn reference_gate(delta: f64) -> TwoQubitGate {
    gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5)).unwrap()
}

/// Dense single-site factor for a letter, built here from matrix units.
fn letter_mat(ch: char) -> Mat<C64> {
    let (o, z) = (cm(1.0, 0.0), cm(0.0, 0.0));
    let s = cm(SQRT_2, 0.0);
    let e = match ch {
        '1' => [[o, z], [z, o]],
        'z' => [[o, z], [z, -o]],
        '+' => [[z, s], [z, z]],
        '-' => [[z, z], [s, z]],
        _ => unreachable!(),
    };
    Mat::from_fn(2, 2, |r, c| e[r][c])
}

fn ring_operator(n: usize, placed: &[(usize, char)]) -> Mat<C64> {
    let mut letters = vec!['1'; n];
    for &(site, ch) in placed {
        letters[site % n] = ch;
    }
    let mut m = letter_mat(letters[0]);
    for &ch in &letters[1..] {
        m = kron(&m, &letter_mat(ch));
    }
    m
}

#[test]
fn basis_sizes() {
    for r in 1..=5 {
        let total: usize = [Parity::Even, Parity::Odd]
            .iter()
            .flat_map(|&p| (-(r as i32)..=r as i32).map(move |q| build_basis(r, p, q).unwrap().dim()))
            .sum();
        assert_eq!(total, 2 * (4usize.pow(r as u32) - 4usize.pow(r as u32 - 1)), "r = {r}");
    }
    let mut r1 = build_basis(1, Parity::Even, 0).unwrap().labels();
    r1.extend(build_basis(1, Parity::Even, 1).unwrap().labels());
    r1.extend(build_basis(1, Parity::Even, -1).unwrap().labels());
    r1.sort();
    assert_eq!(r1, vec!["+", "-", "z"]);

    // brute enumeration of two-letter words with balanced raising/lowering
    let letters = ['1', 'z', '+', '-'];
    let mut brute = Vec::new();
    for a in letters {
        for b in letters {
            let q: i32 = [a, b]
                .iter()
                .map(|c| match c {
                    '+' => 1,
                    '-' => -1,
                    _ => 0,
                })
                .sum();
            if a != '1' && q == 0 {
                brute.push(format!("{a}{b}"));
            }
        }
    }
    brute.sort();
    let mut got = build_basis(2, Parity::Odd, 0).unwrap().labels();
    got.sort();
    assert_eq!(got, brute);
}

#[test]
fn oversized_r_is_a_capacity_error() {
    assert!(matches!(build_basis(7, Parity::Even, 0), Err(Error::Capacity(_))));
    assert!(matches!(truncated_propagator(&TwoQubitGate::identity(), 7, 0.0), Err(Error::Capacity(_))));
}

#[test]
fn heisenberg_step_matches_dense_conjugation() {
    let n = 10;
    let gate = gate_from_haar(&sample_haar(21));
    let g = gate_mat(&gate.matrix);
    let u = brickwork(&vec![g.clone(); n / 2], &vec![g; n / 2], n, true);
    let ud = u.adjoint().to_owned();
    for (label, parity) in [("z+-", Parity::Even), ("+1-", Parity::Odd), ("zzz", Parity::Even), ("-z+", Parity::Odd), ("+zz", Parity::Even)] {
        let code = parse_string(label).unwrap();
        let p = 2 + parity.site() as usize;
        let placed: Vec<(usize, char)> = label.chars().enumerate().map(|(i, ch)| (p + i, ch)).collect();
        let want = &ud * ring_operator(n, &placed) * &u;

        let w = WindowOperator::embed(code, 3, parity).unwrap();
        let evolved = heisenberg_step(&w, &gate).unwrap();
        let mut got = Mat::<C64>::zeros(1 << n, 1 << n);
        for (origin, letters, v) in evolved.strings() {
            let placed: Vec<(usize, char)> = letters
                .iter()
                .enumerate()
                .map(|(i, &l)| ((origin + 2 + i as i64) as usize, ['1', 'z', '+', '-'][l as usize]))
                .collect();
            got = &got + &(ring_operator(n, &placed) * faer::Scale(v));
        }
        assert!(max_diff(&got, &want) < 1e-12, "{label}");
    }
}

#[test]
fn window_must_contain_the_light_cone() {
    let mut w = WindowOperator::embed(parse_string("zz").unwrap(), 2, Parity::Even).unwrap();
    w.origin += 1;
    w.len -= 2;
    let shifted: rustc_hash::FxHashMap<u64, C64> = w.terms.iter().map(|(k, v)| (k >> 2, *v)).collect();
    w.terms = shifted;
    assert!(matches!(heisenberg_step(&w, &TwoQubitGate::swap()), Err(Error::Parameter(_))));
}

#[test]
fn identity_gate_gives_identity_propagator() {
    let id = TwoQubitGate::identity();
    let q = WindowOperator::embed(parse_string("+z-").unwrap(), 3, Parity::Odd).unwrap();
    let out = heisenberg_step(&q, &id).unwrap();
    assert_eq!(out.terms.len(), 1);
    let (k, v) = out.terms.iter().next().unwrap();
    assert_eq!(q.terms.get(k).map(|_| ()), Some(()));
    assert!((v - cm(1.0, 0.0)).norm() < 1e-15);
    let tp = truncated_propagator(&id, 3, 0.0).unwrap();
    for b in &tp.blocks {
        assert!(max_diff(&b.matrix, &eye(b.dim())) < 1e-14);
    }
    assert!(matches!(gap_scaling(&id, 0.0, &[3, 4]), Err(Error::Degenerate(_))));
}

#[test]
fn gap_fit_needs_two_r_values() {
    assert!(matches!(gap_scaling(&reference_gate(1.0), 0.0, &[3]), Err(Error::Parameter(_))));
    assert!(matches!(gap_scaling(&reference_gate(1.0), 0.0, &[3, 3]), Err(Error::Parameter(_))));
}

fn gates_per_phase(count: usize) -> Vec<(Phase, TwoQubitGate)> {
    let mut out = Vec::new();
    let (mut n1, mut n2) = (0, 0);
    for seed in 1000.. {
        let p = sample_haar(seed);
        let phase = classify_phase_haar(&p);
        let slot = if phase == Phase::I { &mut n1 } else { &mut n2 };
        if *slot < count {
            *slot += 1;
            out.push((phase, gate_from_haar(&p)));
        }
        if n1 == count && n2 == count {
            break;
        }
    }
    out
}

#[test]
fn unit_multiplicity_equals_r_for_odd_r() {
    for (phase, gate) in gates_per_phase(20) {
        for r in [3, 5] {
            let tp = truncated_propagator(&gate, r, 0.0).unwrap();
            assert!(tp.charge_leak < 1e-13);
            assert!(tp.max_shift <= 1);
            let spec = rp_spectrum(&tp, 0.0).unwrap();
            assert!(spec.spectral_radius() <= 1.0 + 1e-10);
            assert_eq!(spec.unit_multiplicity(UNIT_TOL), r, "{phase:?}, r = {r}");
        }
    }
}

fn conserved_reference(gate: &TwoQubitGate, block: &PropagatorBlock) -> Mat<C64> {
    let (map, _) = gate_to_r(gate).unwrap();
    let z = letter_mat('z');
    let mag: Vec<C64> = {
        let a = density_vector(block, 3, 0.0, &z, 1, 0).unwrap();
        let b = density_vector(block, 3, 0.0, &z, 1, 1).unwrap();
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    let qp = density_vector(block, 3, 0.0, &q1_density(&map.params, Sign::Plus).unwrap(), 3, 1).unwrap();
    let qm = density_vector(block, 3, 0.0, &q1_density(&map.params, Sign::Minus).unwrap(), 3, 0).unwrap();
    let cols = [mag, qp, qm];
    Mat::from_fn(block.dim(), 3, |i, j| cols[j][i])
}

#[test]
fn conserved_eigenspace_is_magnetization_and_first_charges() {
    let mut gates = vec![reference_gate(1.0), reference_gate(1.4)];
    gates.extend(gates_per_phase(3).into_iter().map(|(_, g)| g));
    for gate in gates {
        let tp = truncated_propagator(&gate, 3, 0.0).unwrap();
        let block = tp.blocks.iter().find(|b| b.charge == 0).unwrap();
        let reference = conserved_reference(&gate, block);
        // each reference vector is an exact fixed point
        let image = &block.matrix * &reference;
        assert!(max_diff(&image, &reference) < 1e-10);
        let kernel = conserved_subspace(block, 1e-8).unwrap();
        assert_eq!(kernel.ncols(), 3);
        let angle = max_principal_angle(&kernel, &reference).unwrap();
        assert!(angle < 1e-6, "angle {angle:e}");
    }
}

#[test]
fn no_unit_eigenvalue_at_momentum_pi() {
    for delta in [1.0, 1.4] {
        for r in [3, 4] {
            let spec = rp_spectrum(&truncated_propagator(&reference_gate(delta), r, PI).unwrap(), 0.0).unwrap();
            assert_eq!(spec.unit_multiplicity(1e-6), 0);
            assert!(spec.spectral_radius() < 1.0 - 1e-6);
        }
    }
}

#[test]
fn leading_gap_shrinks_with_r() {
    for delta in [1.0, 1.4] {
        let l2: Vec<f64> = (3..=5)
            .map(|r| rp_spectrum(&truncated_propagator(&reference_gate(delta), r, 0.0).unwrap(), 0.0).unwrap().lambda2().unwrap())
            .collect();
        assert!(l2.windows(2).all(|w| w[1] >= w[0]), "delta {delta}: {l2:?}");
    }
}

#[test]
fn gap_fit_at_reference_points() {
    let f1 = gap_scaling(&reference_gate(1.0), 0.0, &[3, 5]).unwrap();
    let f2 = gap_scaling(&reference_gate(1.4), 0.0, &[3, 5]).unwrap();
    for f in [&f1, &f2] {
        assert!((f.rate - 0.5).abs() < 0.2, "rate {}", f.rate);
        assert!(f.gaps[1] < f.gaps[0]);
        assert!(f.sse < 1e-20);
    }
    assert!((f1.c - 0.8).abs() < 0.3 * 0.8, "c = {}", f1.c);
    assert!((f2.c - 0.12).abs() < 0.5 * 0.12, "c = {}", f2.c);
    assert!(f1.c > f2.c);
    let lin = gap_scaling(&reference_gate(1.0), PI, &[3, 4, 5]).unwrap();
    assert_eq!(lin.model, GapModel::Linear);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn charge_blocks_decouple_and_radius_is_bounded(seed in any::<u64>(), k in 0.0f64..6.3) {
        let gate = gate_from_haar(&sample_haar(seed));
        let tp = truncated_propagator(&gate, 3, k).unwrap();
        prop_assert!(tp.charge_leak < 1e-13);
        let spec = rp_spectrum(&tp, 0.0).unwrap();
        prop_assert!(spec.spectral_radius() <= 1.0 + 1e-10);
    }
}
