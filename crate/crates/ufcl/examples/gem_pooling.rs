//! Generalized-mean pooling over a spatial feature map.
//!
//! GeM computes `((1/n) * sum x^p)^(1/p)` per channel with a learnable
//! exponent `p >= 1`. At `p = 1` it is average pooling; as `p` grows it
//! approaches max pooling. This example shows the interpolation and checks
//! the analytic exponent gradient against a finite difference.
//!
//! Run with: `cargo run --example gem_pooling`

use ufcl::encoder::{gem_pool, gem_pool_backward, FeatureTensor, GEM_EXPONENT_INIT};

fn main() -> ufcl::Result<()> {
    // A 3x3 map with 2 channels. Channel 0 has one hot spot; channel 1 is
    // nearly flat, so pooling barely changes with p there.
    let mut data = Vec::new();
    for pos in 0..9 {
        data.push(if pos == 4 { 9.0 } else { 1.0 });
        data.push(2.0 + 0.01 * pos as f64);
    }
    let map = FeatureTensor::new(3, 3, 2, data)?;

    let n = map.positions() as f64;
    let mean0: f64 = (0..map.positions()).map(|p| map.at(p, 0)).sum::<f64>() / n;
    let max0 = (0..map.positions()).map(|p| map.at(p, 0)).fold(f64::MIN, f64::max);
    println!("channel 0: mean = {mean0:.4}, max = {max0:.4}");
    println!("{:>8} {:>10} {:>10}", "p", "gem ch0", "gem ch1");
    for p in [1.0, 2.0, GEM_EXPONENT_INIT, 8.0, 32.0, 128.0] {
        let pooled = gem_pool(&map, &[p, p])?;
        println!("{p:>8.1} {:>10.4} {:>10.4}", pooled[0], pooled[1]);
    }
    println!("(p = 1 reproduces the mean; large p climbs toward the max)\n");

    // Gradient of the pooled value w.r.t. the exponent, checked against a
    // central finite difference.
    let exps = [GEM_EXPONENT_INIT, GEM_EXPONENT_INIT];
    let upstream = vec![1.0, 1.0]; // d(loss)/d(pooled) = 1 for both channels
    let grads = gem_pool_backward(&map, &exps, &upstream)?;

    let h = 1e-6;
    for c in 0..2 {
        let mut up = exps;
        let mut dn = exps;
        up[c] += h;
        dn[c] -= h;
        let fd = (gem_pool(&map, &up)?[c] - gem_pool(&map, &dn)?[c]) / (2.0 * h);
        println!(
            "channel {c}: d(gem)/dp analytic = {:+.6}, finite diff = {fd:+.6}",
            grads.exponents[c]
        );
    }
    println!("\nA positive gradient means raising p raises the pooled value;");
    println!("the hot-spot channel gains much more from max-like pooling.");
    Ok(())
}
