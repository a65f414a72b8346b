//! Fixtures shared by the benchmarks.

use adoe_core::plant::{ccd_runs, PlantOracle};
use adoe_core::DesignSpace;

/// The CCD table in coded units with its ΔT column.
pub fn coded_table() -> (Vec<Vec<f64>>, Vec<f64>) {
    let space = DesignSpace::injection_moulding();
    let t = ccd_runs();
    let coded = t
        .settings
        .iter()
        .map(|r| space.to_coded(r).expect("table rows have four settings"))
        .collect();
    (coded, t.response_column(0))
}

/// Noise-free plant ΔT at `n` coded points spread over the box.
pub fn plant_sample(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let plant = PlantOracle::moulding().with_noise(0.0, 0.0);
    let space = DesignSpace::injection_moulding();
    let coded: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..4)
                .map(|j| {
                    let u = ((i * (2 * j + 3) + j * 7) % n) as f64 / (n.max(2) - 1) as f64;
                    -2.0 + 4.0 * u
                })
                .collect()
        })
        .collect();
    let y = coded
        .iter()
        .map(|c| plant.mean_response(&space.from_coded(c).expect("four coordinates")).expect("in range").dt)
        .collect();
    (coded, y)
}
