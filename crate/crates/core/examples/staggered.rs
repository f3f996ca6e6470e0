//! Staggered-magnetization autocorrelation on a ring at the phase-I
//! reference point, with power-law and exponential fits when the series
//! stays positive.
//!
//! cargo run --release --example staggered -- [L] [steps]

use std::f64::consts::PI;

use brickwall::dynamics::{staggered_correlation, Method};
use brickwall::gates::{gate_from_hamiltonian, HamiltonianGateParams};

fn main() -> brickwall::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let l = args.first().copied().unwrap_or(12);
    let steps = args.get(1).copied().unwrap_or(200);
    let gate = gate_from_hamiltonian(&HamiltonianGateParams::new(PI / 3.0, 1.0, 0.5, 0.5))?;
    let r = staggered_correlation(&gate, l, steps, Method::ExactTrace, 1)?;
    for t in [0, 1, 2, 5, 10, 20, 50, 100, steps] {
        if t <= steps {
            println!("{t:>4} {:+.6e}", r.series.values[t]);
        }
    }
    match r.fits {
        Some(f) => println!("power-law slope {:.3}, exponential rate {:.4}, SSE ratio {:.2}", f.power_law.slope, -f.exponential.slope, f.sse_ratio),
        None => println!("no fit: C(t) changes sign on the fit window"),
    }
    Ok(())
}
