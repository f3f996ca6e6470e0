mod common;

use std::f64::consts::TAU;

use brickwall::gates::{gate_from_haar, sample_haar_stream, TwoQubitGate};
use brickwall::linalg::{self, C64};
use brickwall::operators::{build_propagator, shift_operator, Boundary, BrickworkCircuit, LinearAction};
use brickwall::spectral::{all_sectors, r_tilde, spacing_histogram, Ensemble, FlipReflection, Resolution, SpaceTimeOperator};
use common::{cm, max_diff};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Haar unitary from Gram–Schmidt on a complex Ginibre matrix.
fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> Mat<C64> {
    let mut a = Mat::from_fn(n, n, |_, _| cm(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    for j in 0..n {
        for i in 0..j {
            let mut d = cm(0.0, 0.0);
            for r in 0..n {
                d += a[(r, i)].conj() * a[(r, j)];
            }
            for r in 0..n {
                let t = a[(r, i)];
                a[(r, j)] -= d * t;
            }
        }
        let nrm = (0..n).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            a[(r, j)] /= nrm;
        }
    }
    a
}

fn phases(m: &Mat<C64>) -> Vec<f64> {
    linalg::eigenvalues(m.as_ref()).unwrap().iter().map(|z| z.arg()).collect()
}

fn pooled(samples: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let mut ratios = Vec::new();
    let mut spacings = Vec::new();
    for p in samples {
        let mut s = p.clone();
        s.iter_mut().for_each(|x| *x = x.rem_euclid(TAU));
        s.sort_by(f64::total_cmp);
        let sp = brickwall::spectral::unit_spacings(&s);
        ratios.extend(brickwall::spectral::ratios(&sp));
        spacings.extend(sp);
    }
    (ratios.iter().sum::<f64>() / ratios.len() as f64, spacings)
}

#[test]
fn reference_cdfs_integrate_their_densities() {
    for e in Ensemble::ALL {
        let mut acc = 0.0;
        let h = 1e-3;
        for i in 0..4000 {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc += h / 6.0 * (e.density(a) + 4.0 * e.density(0.5 * (a + b)) + e.density(b));
            if (i + 1) % 500 == 0 {
                assert!((acc - e.cdf(b)).abs() < 1e-9, "{e:?} at {b}");
            }
        }
    }
}

#[test]
fn uniform_phases_give_poisson() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p: Vec<f64> = (0..20000).map(|_| rng.random::<f64>() * TAU).collect();
    let r = r_tilde(&p);
    assert!((r - Ensemble::Poisson.r_tilde()).abs() < 0.01, "r = {r}");
    let mut s = p.clone();
    s.sort_by(f64::total_cmp);
    let h = spacing_histogram(&brickwall::spectral::unit_spacings(&s), 30, 3.0).unwrap();
    assert_eq!(h.closest, Ensemble::Poisson);
    assert!(h.tv_distance[0] < 0.05);
}

#[test]
fn cue_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<Vec<f64>> = (0..40).map(|_| phases(&haar_unitary(120, &mut rng))).collect();
    let (r, spacings) = pooled(&samples);
    assert!((r - Ensemble::Cue.r_tilde()).abs() < 0.01, "r = {r}");
    let h = spacing_histogram(&spacings, 30, 3.0).unwrap();
    assert_eq!(h.closest, Ensemble::Cue);
    assert!(h.tv_distance[2] < 0.05);
}

#[test]
fn coe_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let samples: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let u = haar_unitary(120, &mut rng);
            phases(&(u.transpose() * &u))
        })
        .collect();
    let (r, spacings) = pooled(&samples);
    assert!((r - Ensemble::Coe.r_tilde()).abs() < 0.01, "r = {r}");
    let h = spacing_histogram(&spacings, 30, 3.0).unwrap();
    assert_eq!(h.closest, Ensemble::Coe);
    assert!(h.tv_distance[1] < 0.05);
}

fn haar_pair(seed: u64) -> (TwoQubitGate, TwoQubitGate) {
    let g = sample_haar_stream(seed, 2);
    (gate_from_haar(&g[0]), gate_from_haar(&g[1]))
}

fn dense_phases(c: &BrickworkCircuit) -> Vec<f64> {
    let mut p: Vec<f64> = build_propagator(c).unwrap().eigenvalues().unwrap().iter().map(|z| linalg::wrap_2pi(z.arg())).collect();
    p.sort_by(f64::total_cmp);
    p
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[test]
fn sectors_partition_the_spectrum() {
    let (a, b) = haar_pair(5);
    let cases = [
        (BrickworkCircuit::two_gate(&a, &b, 8, Boundary::Open).unwrap(), Resolution::Magnetization),
        (BrickworkCircuit::two_gate(&a, &b, 8, Boundary::Periodic).unwrap(), Resolution::Momentum),
        (BrickworkCircuit::homogeneous(&a, 8, Boundary::Periodic).unwrap(), Resolution::Momentum),
    ];
    for (c, res) in cases {
        let mut got: Vec<f64> = all_sectors(&c, res, 8).unwrap().into_iter().flat_map(|s| s.eigenphases).collect();
        got.sort_by(f64::total_cmp);
        let want = dense_phases(&c);
        assert_eq!(got.len(), want.len());
        let mut used = vec![false; want.len()];
        for g in &got {
            let (k, d) = want
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, circ_dist(*g, *w)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            used[k] = true;
            assert!(d < 1e-9, "{res:?}: unmatched phase {g}");
        }
    }
}

#[test]
fn fully_resolved_phases_lie_in_the_spectrum() {
    let (a, _) = haar_pair(6);
    let c = BrickworkCircuit::homogeneous(&a, 8, Boundary::Periodic).unwrap();
    let want = dense_phases(&c);
    let full = all_sectors(&c, Resolution::Full, 8).unwrap();
    for s in &full {
        for p in &s.eigenphases {
            let d = want.iter().map(|w| circ_dist(*p, *w)).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "phase {p} from block {:?}", s.block);
        }
    }
}

fn dense_of<A: LinearAction>(a: &A) -> Mat<C64> {
    let n = a.dim();
    let mut m = Mat::<C64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![cm(0.0, 0.0); n];
        e[j] = cm(1.0, 0.0);
        let col = a.apply(&e);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

#[test]
fn spacetime_operator_squares_to_shifted_propagator() {
    let (a, _) = haar_pair(7);
    let c = BrickworkCircuit::homogeneous(&a, 8, Boundary::Periodic).unwrap();
    let k = dense_of(&SpaceTimeOperator::new(&c).unwrap());
    let s2 = shift_operator(8, 2).unwrap().matrix;
    let u = build_propagator(&c).unwrap().matrix;
    assert!(max_diff(&(&k * &k), &(&s2 * &u)) < 1e-12);
}

/// Restriction to the zero-magnetization states, where the spin flip maps
/// the sector onto itself.
fn m0_block(a: &Mat<C64>, l: usize) -> Mat<C64> {
    let idx: Vec<usize> = (0..1usize << l).filter(|s| s.count_ones() as usize * 2 == l).collect();
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

#[test]
fn flip_reflection_is_a_symmetry_in_zero_magnetization() {
    let (a, b) = haar_pair(8);
    for boundary in [Boundary::Open, Boundary::Periodic] {
        let y = m0_block(&dense_of(&FlipReflection { l: 8, boundary }), 8);
        let u = m0_block(&build_propagator(&BrickworkCircuit::homogeneous(&a, 8, boundary).unwrap()).unwrap().matrix, 8);
        assert!(max_diff(&(&y * &u), &(&u * &y)) < 1e-12, "{boundary:?}");
        let u2 = m0_block(&build_propagator(&BrickworkCircuit::two_gate(&a, &b, 8, boundary).unwrap()).unwrap().matrix, 8);
        // the reflection maps odd bonds onto odd bonds, so two layers of
        // different gates keep the symmetry
        assert!(max_diff(&(&y * &u2), &(&u2 * &y)) < 1e-12, "{boundary:?}: two gates");
    }
}

#[test]
fn identity_circuit_has_zero_phases() {
    let c = BrickworkCircuit::homogeneous(&TwoQubitGate::identity(), 6, Boundary::Open).unwrap();
    for s in all_sectors(&c, Resolution::Magnetization, 6).unwrap() {
        assert!(s.eigenphases.iter().all(|p| circ_dist(*p, 0.0) < 1e-12));
    }
}

#[test]
fn unresolved_chaotic_spectrum_is_not_coe() {
    // superposing independent sectors destroys level repulsion
    let (a, b) = haar_pair(9);
    let c = BrickworkCircuit::two_gate(&a, &b, 10, Boundary::Open).unwrap();
    let merged: Vec<f64> = all_sectors(&c, Resolution::Magnetization, 10).unwrap().into_iter().flat_map(|s| s.eigenphases).collect();
    let r = r_tilde(&merged);
    assert!(r < 0.45, "r = {r}");
}
