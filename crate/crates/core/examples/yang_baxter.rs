//! Braid Yang-Baxter and inversion residuals of Ř for Haar-random gates in
//! both phases.
//!
//! cargo run --release --example yang_baxter -- [gates]

use brickwall::gates::sample_haar_stream;
use brickwall::integrability::{check_inversion, check_yang_baxter, haar_to_r, Phase};

fn main() -> brickwall::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let mut worst = [(0usize, 0.0f64, 0.0f64); 2];
    let mut skipped = 0;
    for h in sample_haar_stream(0, n) {
        let Ok(map) = haar_to_r(&h) else {
            skipped += 1;
            continue;
        };
        let p = map.params;
        let slot = &mut worst[(p.phase == Phase::II) as usize];
        slot.0 += 1;
        slot.1 = slot.1.max(check_yang_baxter(&p, 0.3 * p.u, -0.7 * p.u)?);
        slot.2 = slot.2.max(check_inversion(&p, 0.5 * p.u)?);
    }
    for (name, (count, ybe, inv)) in ["I", "II"].iter().zip(worst) {
        println!("phase {name}: {count} gates, max YBE residual {ybe:.2e}, max inversion residual {inv:.2e}");
    }
    println!("{skipped} draws on degenerate points");
    Ok(())
}
