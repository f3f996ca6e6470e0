//! Local conserved charges of the reference circuits from logarithmic
//! derivatives of the transfer matrix: commutators with the Floquet
//! propagator and the support of the charge densities.
//!
//! cargo run --release --example conserved_charges -- [L]

use std::f64::consts::PI;
use std::time::Instant;

use brickwall::gates::{gate_from_hamiltonian, HamiltonianGateParams};
use brickwall::integrability::{charge_q1, charge_q1_closed_form, gate_to_r, higher_charge, Sign};
use brickwall::operators::{support_weights, BlockOperator, Boundary, BrickworkCircuit};

fn main() -> brickwall::Result<()> {
    let l: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    for delta in [1.0, 1.4] {
        let gate = gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, delta, 0.5, 0.5))?;
        let (map, _) = gate_to_r(&gate)?;
        let p = map.params;
        let u = BlockOperator::from_action(&BrickworkCircuit::homogeneous(&p.gate()?, l, Boundary::Periodic)?, l)?;
        println!("delta = {delta}: phase {:?}, u = {:.4}", p.phase, p.u);
        for sign in [Sign::Plus, Sign::Minus] {
            let q1 = charge_q1(&p, sign, l)?;
            let closed = charge_q1_closed_form(&p, sign, l)?;
            println!(
                "  Q1{sign}: ||[Q, U]|| = {:.2e}, closed form vs derivative {:.2e}",
                q1.operator.commutator_norm(&u),
                closed.operator.max_abs_diff(&q1.operator.traceless())
            );
            let t0 = Instant::now();
            let q2 = higher_charge(&p, 2, sign, l)?;
            let w = support_weights(&q2.operator.traceless());
            let total: f64 = w[1..].iter().sum();
            let outside: f64 = w[6..].iter().sum();
            println!(
                "  Q2{sign}: ||[Q, U]|| = {:.2e}, weight beyond 5 sites {:.2e}, {:.1}s",
                q2.operator.commutator_norm(&u),
                (outside / total).sqrt(),
                t0.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
