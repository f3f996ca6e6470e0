//! Phase labels and Ř-matrix parameters for the two reference gates and a
//! few Haar-random ones, with the reconstruction error of each map.
//!
//! cargo run --example gate_map

use std::f64::consts::PI;

use brickwall::gates::{gate_from_haar, gate_from_hamiltonian, sample_haar_stream, HamiltonianGateParams};
use brickwall::integrability::{classify_phase_hamiltonian, gate_to_r};

fn main() -> brickwall::Result<()> {
    for delta in [1.0, 1.4] {
        let p = HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5);
        let crit = classify_phase_hamiltonian(&p)?;
        let (map, mu) = gate_to_r(&gate_from_hamiltonian(&p)?)?;
        let r = map.params;
        println!(
            "delta = {delta}: criterion {:.4} -> phase {}; u = {:.4}, rho = {:.4}, beta = {:.4}, xi = {:.4}, theta = {:.4}, mu = {mu:.4}, error {:.1e}",
            crit.lhs, crit.phase, r.u, r.rho, r.beta, r.xi, r.theta, map.reconstruction_error
        );
    }
    for (i, h) in sample_haar_stream(3, 6).iter().enumerate() {
        match gate_to_r(&gate_from_haar(h)) {
            Ok((map, _)) => println!("haar {i}: phi = {:.3}, gamma = {:+.3}, phase {}, u = {:.4}, error {:.1e}", map.phi, map.gamma, map.params.phase, map.params.u, map.reconstruction_error),
            Err(e) => println!("haar {i}: {e}"),
        }
    }
    Ok(())
}
