//! Ruelle–Pollicott spectrum of the truncated operator propagator at the two
//! reference Hamiltonian points, and the gap-versus-r fit.
//!
//! cargo run --release --example rp_spectrum -- [r_max]

use std::f64::consts::PI;
use std::time::Instant;

use brickwall::gates::{gate_from_hamiltonian, HamiltonianGateParams};
use brickwall::ruelle::{gap_scaling, rp_spectrum, truncated_propagator, UNIT_TOL};

fn main() -> brickwall::Result<()> {
    let r_max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    for delta in [1.0, 1.4] {
        let gate = gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5))?;
        println!("delta = {delta}");
        for r in 3..=r_max {
            for k in [0.0, PI] {
                let t0 = Instant::now();
                let tp = truncated_propagator(&gate, r, k)?;
                let dims: Vec<usize> = tp.blocks.iter().map(|b| b.dim()).collect();
                let spec = rp_spectrum(&tp, 0.0)?;
                println!(
                    "  r = {r}, k = {k:.3}: blocks {dims:?}, radius {:.12}, unit multiplicity {}, |lambda2| = {:.6}, {:.1}s",
                    spec.spectral_radius(),
                    spec.unit_multiplicity(UNIT_TOL),
                    spec.lambda2().unwrap_or(0.0),
                    t0.elapsed().as_secs_f64()
                );
            }
        }
        let fit = gap_scaling(&gate, 0.0, &[3, 5])?;
        println!("  k = 0 fit: gaps {:?}, c = {:.4}, rate = {:.4}", fit.gaps, fit.c, fit.rate);
    }
    Ok(())
}
