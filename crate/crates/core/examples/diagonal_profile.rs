//! The README walkthrough: one Radon value computed three ways.

use gauss_radon::gauss::Flat;
use gauss_radon::hermite::{HermiteSeries, Integrand};
use gauss_radon::multi_index::MultiIndex;
use gauss_radon::{Engine, Result};

fn main() -> Result<()> {
    // f(x, y) = x * y  (a single Hermite term: He_1 ⊗ He_1)
    let f = HermiteSeries::<f64>::from_terms(2, [(MultiIndex::new(vec![1, 1]), 1.0)])?;
    let f = Integrand::Series(f);

    // the hyperplane { <u, x> = t } for the diagonal direction
    let diag = [1.0, 1.0];
    let flat = Flat::hyperplane(&diag, 1.5)?;

    // three engines, one story
    let (exact, _) = gauss_radon::radon::gauss_radon(&f, &flat, Engine::Exact)?;
    let (quad, _) = gauss_radon::radon::gauss_radon(&f, &flat, Engine::Quadrature { level: 8 })?;
    let (mc, stderr) = gauss_radon::radon::gauss_radon(
        &f,
        &flat,
        Engine::MonteCarlo {
            samples: 100_000,
            seed: 7,
        },
    )?;

    // on this family the profile is the parabola (t^2 - 1) / 2
    assert!((exact - (1.5f64 * 1.5 - 1.0) / 2.0).abs() < 1e-12);
    assert!((quad - exact).abs() < 1e-12);
    assert!((mc - exact).abs() < 4.0 * stderr.unwrap());

    println!("exact      {exact:.15}");
    println!("quadrature {quad:.15}");
    println!("monte carlo {mc:.6} +/- {:.6}", stderr.unwrap());
    Ok(())
}
