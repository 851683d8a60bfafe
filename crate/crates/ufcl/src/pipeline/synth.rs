//! Synthetic benchmark data: unit-sphere class means with a prescribed
//! pairwise angle, isotropic Gaussian samples, and optional label noise that
//! drags a fraction of samples halfway toward another class.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Knobs of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Pairwise angle between class means, in radians.
    pub separation: f64,
    /// Per-coordinate standard deviation of the Gaussian sample noise.
    pub spread: f64,
    /// Fraction of samples whose center is blended 50/50 with another
    /// class's mean.
    pub noise_frac: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        // spread 0.10 leaves the first clustering pass visibly imperfect
        // (epoch-1 ACC around 0.85) so a training run has something to learn,
        // while staying easy enough that it converges within a couple dozen
        // epochs.
        SynthParams {
            classes: 20,
            per_class: 50,
            dim: 64,
            separation: 1.2,
            spread: 0.10,
            noise_frac: 0.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::invalid("classes, per_class and dim must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.noise_frac) {
            return Err(Error::invalid(format!(
                "noise_frac must lie in [0, 1], got {}",
                self.noise_frac
            )));
        }
        if self.noise_frac > 0.0 && self.classes < 2 {
            return Err(Error::invalid("label noise needs at least two classes"));
        }
        if !(self.spread >= 0.0) || !self.spread.is_finite() {
            return Err(Error::invalid(format!("spread must be non-negative, got {}", self.spread)));
        }
        if self.classes >= 2 {
            if !(self.separation > 0.0) || self.separation > std::f64::consts::PI {
                return Err(Error::invalid(format!(
                    "separation must lie in (0, pi], got {}",
                    self.separation
                )));
            }
            if self.dim < self.classes {
                return Err(Error::invalid(format!(
                    "{} equiangular means need dimension >= {}, got {}",
                    self.classes, self.classes, self.dim
                )));
            }
            // C unit vectors with pairwise cosine t exist iff the Gram matrix
            // (1-t)I + t 11^T is positive semidefinite: t >= -1/(C-1).
            let t = self.separation.cos();
            let floor = -1.0 / (self.classes as f64 - 1.0);
            if t < floor - 1e-12 {
                return Err(Error::invalid(format!(
                    "separation {} is infeasible for {} classes (max angle {})",
                    self.separation,
                    self.classes,
                    floor.acos()
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Unit class means with every pairwise angle equal to `params.separation`,
/// embedded in a random orientation drawn from `rng`.
///
/// Construction: in a C-dimensional frame, `a e_i + b 1/sqrt(C)` has unit
/// norm and pairwise cosine t when `a = sqrt(1-t)` and
/// `b = -a/sqrt(C) + sqrt((1 + (C-1)t)/C)`; the frame is then mapped through
/// C random orthonormal directions, which preserves the Gram matrix.
pub fn class_means<R: Rng>(params: &SynthParams, rng: &mut R) -> Result<Matrix> {
    params.validate()?;
    let c = params.classes;
    let d = params.dim;
    if c == 1 {
        let v = loop {
            let g = gaussian_vec(rng, d);
            if let Ok(u) = crate::encoder::l2_normalize(&g) {
                break u;
            }
        };
        return Matrix::from_rows(&[v]);
    }
    let t = params.separation.cos();
    let a = (1.0 - t).sqrt();
    let disc = ((1.0 + (c as f64 - 1.0) * t) / c as f64).max(0.0);
    let b = -a / (c as f64).sqrt() + disc.sqrt();

    // Random orthonormal frame via Gram-Schmidt on Gaussian draws.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(c);
    while basis.len() < c {
        let mut v = gaussian_vec(rng, d);
        for q in &basis {
            let proj = dot(&v, q);
            for (x, qx) in v.iter_mut().zip(q) {
                *x -= proj * qx;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }

    let offset = b / (c as f64).sqrt();
    let mut means = Matrix::zeros(c, d);
    for i in 0..c {
        let row = means.row_mut(i);
        for q in &basis {
            for (slot, qx) in row.iter_mut().zip(q) {
                *slot += offset * qx;
            }
        }
        for (slot, qx) in row.iter_mut().zip(&basis[i]) {
            *slot += a * qx;
        }
    }
    Ok(means)
}

fn draw_samples<R: Rng>(
    params: &SynthParams,
    means: &Matrix,
    rng: &mut R,
) -> Result<(Matrix, Vec<usize>)> {
    let c = params.classes;
    let n = c * params.per_class;
    let mut data = Matrix::zeros(n, params.dim);
    let mut labels = Vec::with_capacity(n);
    for class in 0..c {
        for s in 0..params.per_class {
            let row = class * params.per_class + s;
            labels.push(class);
            let noisy = params.noise_frac > 0.0 && rng.random_bool(params.noise_frac);
            // Confusable samples sit halfway toward the ring neighbor, so
            // each adjacent class pair accumulates a clump of in-between
            // points rather than thin dust spread over every pair.
            let other = if noisy { Some((class + 1) % c) } else { None };
            let dst = data.row_mut(row);
            let mean = means.row(class);
            match other {
                Some(o) => {
                    let blend = means.row(o);
                    for ((slot, m1), m2) in dst.iter_mut().zip(mean).zip(blend) {
                        *slot = 0.5 * m1 + 0.5 * m2;
                    }
                }
                None => dst.copy_from_slice(mean),
            }
            if params.spread > 0.0 {
                for slot in dst.iter_mut() {
                    *slot += params.spread * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }
    Ok((data, labels))
}

/// One split of `classes * per_class` samples with labels, grouped by class.
///
/// The means are drawn from a dedicated seed stream, so different splits of
/// the same seed share identical means while their sample noise stays
/// independent.
pub fn synth_dataset(params: &SynthParams, seed: u64) -> Result<(Matrix, Vec<usize>)> {
    params.validate()?;
    let means = class_means(params, &mut super::seed_stream(seed, super::STREAM_MEANS))?;
    draw_samples(params, &means, &mut super::seed_stream(seed, super::STREAM_TRAIN))
}

/// Train and held-out test splits around the same class means.
pub fn synth_benchmark(params: &SynthParams, seed: u64) -> Result<super::Dataset> {
    params.validate()?;
    let means = class_means(params, &mut super::seed_stream(seed, super::STREAM_MEANS))?;
    let (train, train_labels) =
        draw_samples(params, &means, &mut super::seed_stream(seed, super::STREAM_TRAIN))?;
    let (test, test_labels) =
        draw_samples(params, &means, &mut super::seed_stream(seed, super::STREAM_TEST))?;
    super::Dataset::new(train, train_labels, test, test_labels)
}
