//! Time reversal of the equivalent square-root circuit: open chains always
//! admit it, rings only when the reversal angles close around the ring.
//!
//! cargo run --example time_reversal

use std::f64::consts::PI;

use brickwall::gates::{gate_from_haar, gate_from_hamiltonian, sample_haar_stream, HamiltonianGateParams};
use brickwall::operators::{Boundary, BrickworkCircuit};
use brickwall::symmetry::time_reversal_check;

fn main() -> brickwall::Result<()> {
    let l = 8;
    let reference = gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, 1.0, 0.5, 0.5))?;
    let g = sample_haar_stream(4, l);
    let odd: Vec<_> = g[..l / 2].iter().map(gate_from_haar).collect();
    let even: Vec<_> = g[l / 2..].iter().map(gate_from_haar).collect();
    let circuits = [
        ("homogeneous open", BrickworkCircuit::homogeneous(&reference, l, Boundary::Open)?),
        ("homogeneous ring", BrickworkCircuit::homogeneous(&reference, l, Boundary::Periodic)?),
        ("disordered open", BrickworkCircuit::new(l, odd.clone(), even[..l / 2 - 1].to_vec(), Boundary::Open)?),
        ("disordered ring", BrickworkCircuit::new(l, odd, even, Boundary::Periodic)?),
    ];
    for (name, c) in circuits {
        let r = time_reversal_check(&c)?;
        let rev = r.residual_tr.map_or("refused".to_string(), |x| format!("{x:.1e}"));
        println!("{name}: spectra agree to {:.1e}, reversal residual {rev}, angle defect {:+.4}", r.spectral_match_error, r.angle_defect);
    }
    Ok(())
}
