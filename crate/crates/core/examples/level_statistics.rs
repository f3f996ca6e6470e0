//! Pooled r̃ for homogeneous and two-gate brickwalls with Haar-random gates.
//!
//! cargo run --release --example level_statistics -- [L] [realizations]

use std::time::Instant;

use brickwall::gates::{gate_from_haar, sample_haar_stream};
use brickwall::operators::{Boundary, BrickworkCircuit};
use brickwall::spectral::{all_sectors, bulk_magnetization_window, pooled_r_tilde, spacing_histogram, Ensemble, Resolution, SpectrumResult};

fn main() -> brickwall::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let l = args.first().copied().unwrap_or(10);
    let n = args.get(1).copied().unwrap_or(4);

    let cases = [
        ("homogeneous, PBC, fully resolved", Boundary::Periodic, true, Resolution::Full, Ensemble::Poisson),
        ("two gates, OBC, magnetization", Boundary::Open, false, Resolution::Magnetization, Ensemble::Coe),
        ("two gates, PBC, momentum", Boundary::Periodic, false, Resolution::Momentum, Ensemble::Cue),
    ];
    for (name, boundary, homogeneous, resolution, reference) in cases {
        let t0 = Instant::now();
        let mut pooled: Vec<SpectrumResult> = Vec::new();
        for seed in 0..n as u64 {
            let g = sample_haar_stream(seed, 2);
            let (a, b) = (gate_from_haar(&g[0]), gate_from_haar(&g[1]));
            let circuit = if homogeneous {
                BrickworkCircuit::homogeneous(&a, l, boundary)?
            } else {
                BrickworkCircuit::two_gate(&a, &b, l, boundary)?
            };
            let spectra = all_sectors(&circuit, resolution, bulk_magnetization_window(l))?;
            println!("  seed {seed}: r = {:.4}", pooled_r_tilde(&spectra));
            pooled.extend(spectra);
        }
        let spacings: Vec<f64> = pooled.iter().flat_map(|s| s.spacings.iter().copied()).collect();
        let hist = spacing_histogram(&spacings, 30, 3.0)?;
        println!(
            "{name}: pooled r = {:.4} (reference {:?} {:.4}), closest law {:?}, {:.1}s",
            pooled_r_tilde(&pooled),
            reference,
            reference.r_tilde(),
            hist.closest,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
