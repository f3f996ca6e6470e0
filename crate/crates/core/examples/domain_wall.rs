//! Melting of the domain wall |↑…↑↓…↓⟩ on an open chain: frozen at the
//! phase-I reference point, transported in a free-like phase-II circuit.
//!
//! cargo run --release --example domain_wall -- [L] [steps]

use std::f64::consts::PI;

use brickwall::dynamics::domain_wall_evolution;
use brickwall::gates::{gate_from_hamiltonian, HamiltonianGateParams};
use brickwall::integrability::classify_phase_hamiltonian;

fn main() -> brickwall::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let l = args.first().copied().unwrap_or(12);
    let steps = args.get(1).copied().unwrap_or(200);
    let points = [
        ("phase-I reference", HamiltonianGateParams::new(PI / 3.0, 1.0, 0.5, 0.5)),
        ("phase-II reference", HamiltonianGateParams::new(PI / 3.0, 1.4, 0.5, 0.5)),
        ("free-like XX", HamiltonianGateParams::new(0.3, 0.0, 0.0, 0.0)),
    ];
    for (name, p) in points {
        let phase = classify_phase_hamiltonian(&p)?.phase;
        let dw = domain_wall_evolution(&gate_from_hamiltonian(&p)?, l, steps)?;
        print!("{name} (phase {phase:?}): transported");
        for t in [1, 5, 10, 20, 50, 100, steps] {
            if t <= steps {
                print!("  t={t}: {:.4}", dw.transported[t]);
            }
        }
        println!();
        let last = &dw.profiles[steps];
        let profile: Vec<String> = last.iter().map(|z| format!("{z:+.2}")).collect();
        println!("  profile at t = {steps}: [{}]", profile.join(" "));
    }
    Ok(())
}
