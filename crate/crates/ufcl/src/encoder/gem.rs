//! Generalized-mean (GeM) pooling over spatial feature maps.
//!
//! Each channel `k` of a `W x H x K` activation tensor is reduced to a single
//! value
//!
//! ```text
//! f_k = ( (1/n) * sum_i x_i^p_k )^(1/p_k),    n = W * H
//! ```
//!
//! with a learnable exponent `p_k >= 1` per channel. `p = 1` recovers average
//! pooling and `p -> inf` approaches max pooling, so the exponent interpolates
//! between the two and can be trained by gradient descent like any other
//! parameter.

use crate::error::{Error, Result};

/// Activations are clamped to this floor before powering so that `x^p` and
/// `ln x` stay finite. Zero activations get a zero subgradient instead.
const GEM_EPS: f64 = 1e-12;

/// A `width x height x channels` activation tensor, position-major:
/// `data[(y * width + x) * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::invalid("feature tensor dimensions must be positive"));
        }
        if data.len() != width * height * channels {
            return Err(Error::shape(format!(
                "tensor {}x{}x{} needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("feature tensor contains non-finite values"));
        }
        if data.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("GeM pooling expects non-negative activations"));
        }
        Ok(FeatureTensor { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn positions(&self) -> usize {
        self.width * self.height
    }

    /// Activation of channel `c` at flattened spatial position `pos`.
    pub fn at(&self, pos: usize, c: usize) -> f64 {
        self.data[pos * self.channels + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Gradients produced by [`gem_pool_backward`].
#[derive(Debug, Clone)]
pub struct GemGrads {
    /// dL/dx, same layout as the input tensor.
    pub input: Vec<f64>,
    /// dL/dp, one value per channel.
    pub exponents: Vec<f64>,
}

fn check_exponents(tensor: &FeatureTensor, exponents: &[f64]) -> Result<()> {
    if exponents.len() != tensor.channels() {
        return Err(Error::shape(format!(
            "expected {} exponents, got {}",
            tensor.channels(),
            exponents.len()
        )));
    }
    for &p in exponents {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::invalid(format!("GeM exponent must be finite and >= 1, got {p}")));
        }
    }
    Ok(())
}

/// Pools each channel with its exponent, returning one value per channel.
///
/// The computation factors out the channel maximum so that large exponents do
/// not overflow: `f = M * ((1/n) * sum (x/M)^p)^(1/p)`.
pub fn gem_pool(tensor: &FeatureTensor, exponents: &[f64]) -> Result<Vec<f64>> {
    check_exponents(tensor, exponents)?;
    let n = tensor.positions();
    let mut pooled = Vec::with_capacity(tensor.channels());
    for (c, &p) in exponents.iter().enumerate() {
        let mut max = GEM_EPS;
        for pos in 0..n {
            max = max.max(tensor.at(pos, c).max(GEM_EPS));
        }
        let mut sum = 0.0;
        for pos in 0..n {
            let r = tensor.at(pos, c).max(GEM_EPS) / max;
            sum += r.powf(p);
        }
        pooled.push(max * (sum / n as f64).powf(1.0 / p));
    }
    Ok(pooled)
}

/// Analytic gradients of the pooled outputs with respect to the activations
/// and the exponents, contracted with `upstream = dL/df` (one value per
/// channel).
///
/// Per channel, with `S = sum x_i^p` and `A = S/n`:
///
/// ```text
/// df/dx_i = A^(1/p - 1) * x_i^(p-1) / n
/// df/dp   = f * ( -ln(A)/p^2 + (sum x_i^p ln x_i) / (p * S) )
/// ```
///
/// Activations at the clamp floor receive a zero subgradient. Both formulas
/// are evaluated in max-rescaled space for stability.
pub fn gem_pool_backward(
    tensor: &FeatureTensor,
    exponents: &[f64],
    upstream: &[f64],
) -> Result<GemGrads> {
    check_exponents(tensor, exponents)?;
    if upstream.len() != tensor.channels() {
        return Err(Error::shape(format!(
            "expected {} upstream values, got {}",
            tensor.channels(),
            upstream.len()
        )));
    }
    let n = tensor.positions();
    let nf = n as f64;
    let channels = tensor.channels();
    let mut input = vec![0.0; tensor.data().len()];
    let mut dp = vec![0.0; channels];

    for (c, &p) in exponents.iter().enumerate() {
        let g = upstream[c];
        let mut max = GEM_EPS;
        for pos in 0..n {
            max = max.max(tensor.at(pos, c).max(GEM_EPS));
        }
        // Ratios r_i = x_i / max, so r_i <= 1 and powers stay bounded.
        let mut sum_r = 0.0;
        let mut sum_r_ln = 0.0;
        for pos in 0..n {
            let r = tensor.at(pos, c).max(GEM_EPS) / max;
            let rp = r.powf(p);
            sum_r += rp;
            sum_r_ln += rp * r.ln();
        }
        let mean_r = sum_r / nf;
        let f = max * mean_r.powf(1.0 / p);

        // df/dx_i = (S_r/n)^(1/p - 1) * r_i^(p-1) / n; the max factors cancel.
        let lead = mean_r.powf(1.0 / p - 1.0) / nf;
        for pos in 0..n {
            let x = tensor.at(pos, c);
            if x <= GEM_EPS {
                continue; // subgradient 0 at the clamp floor
            }
            let r = x / max;
            input[pos * channels + c] = g * lead * r.powf(p - 1.0);
        }

        // The ln(max) terms cancel, leaving the rescaled form of df/dp.
        let dfdp = f * (-mean_r.ln() / (p * p) + sum_r_ln / (p * sum_r));
        dp[c] = g * dfdp;
    }
    Ok(GemGrads { input, exponents: dp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_channel(values: &[f64]) -> FeatureTensor {
        FeatureTensor::new(values.len(), 1, 1, values.to_vec()).unwrap()
    }

    #[test]
    fn p_one_is_average_pooling() {
        let t = single_channel(&[1.0, 3.0]);
        let out = gem_pool(&t, &[1.0]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_cube_exponent() {
        // ((1^3 + 2^3) / 2)^(1/3) = 4.5^(1/3)
        let t = single_channel(&[1.0, 2.0]);
        let out = gem_pool(&t, &[3.0]).unwrap();
        assert!((out[0] - 4.5f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn large_exponent_approaches_max() {
        let t = single_channel(&[1.0, 3.0]);
        let out = gem_pool(&t, &[1000.0]).unwrap();
        assert!((out[0] - 3.0).abs() < 0.01);
        assert!(out[0] <= 3.0 + 1e-12);
    }

    #[test]
    fn huge_exponent_does_not_overflow() {
        let t = single_channel(&[10.0, 9.0, 0.5]);
        let out = gem_pool(&t, &[5000.0]).unwrap();
        assert!(out[0].is_finite());
        assert!((out[0] - 10.0).abs() < 0.01);
    }

    #[test]
    fn channels_pool_independently() {
        // Two positions, two channels.
        let t = FeatureTensor::new(2, 1, 2, vec![1.0, 5.0, 3.0, 5.0]).unwrap();
        let out = gem_pool(&t, &[1.0, 1.0]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12);
        assert!((out[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_exponents() {
        let t = single_channel(&[1.0, 2.0]);
        assert!(gem_pool(&t, &[0.5]).is_err());
        assert!(gem_pool(&t, &[f64::NAN]).is_err());
        assert!(gem_pool(&t, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_negative_activations() {
        assert!(FeatureTensor::new(2, 1, 1, vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_activation_gets_zero_subgradient() {
        let t = single_channel(&[0.0, 2.0]);
        let grads = gem_pool_backward(&t, &[3.0], &[1.0]).unwrap();
        assert_eq!(grads.input[0], 0.0);
        assert!(grads.input[1] > 0.0);
    }

    #[test]
    fn finite_difference_matches_input_gradients() {
        let values = [0.7, 2.3, 1.1, 0.2, 3.9, 1.6];
        let t = FeatureTensor::new(3, 2, 1, values.to_vec()).unwrap();
        let p = [2.7];
        let grads = gem_pool_backward(&t, &p, &[1.0]).unwrap();
        let h = 1e-6;
        for i in 0..values.len() {
            let mut lo = values.to_vec();
            let mut hi = values.to_vec();
            lo[i] -= h;
            hi[i] += h;
            let f_lo = gem_pool(&FeatureTensor::new(3, 2, 1, lo).unwrap(), &p).unwrap()[0];
            let f_hi = gem_pool(&FeatureTensor::new(3, 2, 1, hi).unwrap(), &p).unwrap()[0];
            let fd = (f_hi - f_lo) / (2.0 * h);
            let rel = (grads.input[i] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-5, "input {i}: analytic {} vs fd {}", grads.input[i], fd);
        }
    }

    #[test]
    fn finite_difference_matches_exponent_gradient() {
        let values = [0.7, 2.3, 1.1, 0.2];
        let t = FeatureTensor::new(2, 2, 1, values.to_vec()).unwrap();
        for &p in &[1.0f64, 1.5, 3.0, 8.0] {
            let grads = gem_pool_backward(&t, &[p], &[1.0]).unwrap();
            let h = 1e-6;
            // One-sided at the p = 1 boundary.
            let (p_lo, p_hi) = if p - h < 1.0 { (p, p + h) } else { (p - h, p + h) };
            let f_lo = gem_pool(&t, &[p_lo]).unwrap()[0];
            let f_hi = gem_pool(&t, &[p_hi]).unwrap()[0];
            let fd = (f_hi - f_lo) / (p_hi - p_lo);
            let rel = (grads.exponents[0] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-4, "p {p}: analytic {} vs fd {}", grads.exponents[0], fd);
        }
    }

    #[test]
    fn uniform_activations_have_zero_exponent_gradient() {
        let t = single_channel(&[1.7, 1.7, 1.7]);
        let grads = gem_pool_backward(&t, &[4.0], &[1.0]).unwrap();
        assert!(grads.exponents[0].abs() < 1e-12);
    }

    proptest! {
        // Pooled value is monotone in p and bracketed by mean and max.
        #[test]
        fn monotone_in_exponent(
            values in proptest::collection::vec(0.01f64..10.0, 2..12),
            p_lo in 1.0f64..20.0,
            delta in 0.1f64..20.0,
        ) {
            let t = single_channel(&values);
            let f_lo = gem_pool(&t, &[p_lo]).unwrap()[0];
            let f_hi = gem_pool(&t, &[p_lo + delta]).unwrap()[0];
            prop_assert!(f_hi >= f_lo - 1e-9);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let max = values.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(f_lo >= mean - 1e-9);
            prop_assert!(f_hi <= max + 1e-9);
        }
    }
}
