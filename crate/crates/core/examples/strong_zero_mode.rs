//! Boundary-spin autocorrelation of the open chain in both phases: it
//! plateaus in phase I and decays in phase II.
//!
//! cargo run --release --example strong_zero_mode -- [L] [steps]

use std::f64::consts::PI;

use brickwall::dynamics::{boundary_autocorrelation, Method};
use brickwall::gates::{gate_from_hamiltonian, HamiltonianGateParams};
use brickwall::integrability::classify_phase_hamiltonian;

fn main() -> brickwall::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let l = args.first().copied().unwrap_or(12);
    let steps = args.get(1).copied().unwrap_or(200);
    for delta in [1.0, 1.4] {
        let p = HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5);
        let phase = classify_phase_hamiltonian(&p)?.phase;
        let s = boundary_autocorrelation(&gate_from_hamiltonian(&p)?, l, steps, Method::ExactTrace, 1)?;
        let tail = &s.values[steps / 2..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        println!("delta = {delta} (phase {phase:?}): C(t) at t = 0, 10, 50, {steps}:");
        for t in [0, 10, 50, steps] {
            println!("  {t:>4} {:+.6}", s.values[t]);
        }
        println!("  mean over the second half {mean:+.6}");
    }
    Ok(())
}
