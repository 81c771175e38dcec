// Scratch calibration driver (not part of the deliverable API surface).
use gbll_core::gbll::OptimizerOptions;
use gbll_core::measures::{Channel, FiniteMeasure, GbllInstance};
use gbll_core::smoothing::{smooth_constant, SmoothOptions};

fn main() {
    let q = FiniteMeasure::new(vec![0.3, 0.7]).unwrap();
    let chs = vec![Channel::bsc(0.11)];
    let weights = vec![2.0];
    let inst = GbllInstance::from_source(q, chs, weights).unwrap();
    let inst3 = inst.tensor_power(3).unwrap();

    let base = SmoothOptions {
        inner: OptimizerOptions {
            restarts: 16,
            ..OptimizerOptions::default()
        },
        ..SmoothOptions::default()
    };
    let no_refine = SmoothOptions {
        refine: false,
        ..base.clone()
    };
    let t0 = std::time::Instant::now();
    let patterns = smooth_constant(&inst3.mu, &inst3.channels, &inst3.nus, &inst3.weights, 0.2, &no_refine).unwrap();
    let refined = smooth_constant(&inst3.mu, &inst3.channels, &inst3.nus, &inst3.weights, 0.2, &base).unwrap();
    println!(
        "patterns only: {:.8}  refined: {:.8}  diff: {:.2e}   ({:?})",
        patterns.value.to_f64(),
        refined.value.to_f64(),
        patterns.value.to_f64() - refined.value.to_f64(),
        t0.elapsed()
    );
    let s: Vec<f64> = (0..8)
        .map(|x| refined.smoothing_measure.weight(x) / inst3.mu.weight(x))
        .collect();
    println!("best s: {s:?}  e1={:.4}", refined.e1_used);
}
