//! Closed-form converse machinery for CR generation.
//!
//! Bounds are returned raw — possibly negative, i.e. vacuous — so that
//! monotonicity properties survive; [`clamp_unit`] is the presentation
//! helper. The Gaussian tail `Q` goes through `erfc`, accurate to about
//! 1e-15 relative error over the tested range. Monte Carlo estimates
//! use fixed-size shards with per-shard derived ChaCha streams, so they
//! are bit-reproducible given `(seed, samples)` regardless of how the
//! shards are scheduled.

use crate::gaussian::{variance_v, GaussianInstance};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// A CR rate point: common-randomness rate `R` and message rates `R_j`.
#[derive(Clone, Debug)]
pub struct RatePoint {
    pub r: f64,
    pub r_j: Vec<f64>,
}

impl RatePoint {
    pub fn new(r: f64, r_j: Vec<f64>) -> Result<Self> {
        if !r.is_finite() || r < 0.0 || r_j.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "rates must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { r, r_j })
    }
}

/// Cardinalities of the CR integer and the messages.
#[derive(Clone, Debug)]
pub struct SchemeSizes {
    pub k_size: u64,
    pub w_sizes: Vec<u64>,
}

impl SchemeSizes {
    pub fn new(k_size: u64, w_sizes: Vec<u64>) -> Result<Self> {
        if k_size < 1 || w_sizes.iter().any(|w| *w < 1) {
            return Err(Error::InvalidParameter("sizes must be ≥ 1".into()));
        }
        Ok(Self { k_size, w_sizes })
    }
}

/// Whether `d* + Σ_j c_j R_j ≥ (Σ_j c_j − 1) R` holds for the given
/// weight vector.
pub fn region_check(point: &RatePoint, dstar_value: f64, weights: &[f64]) -> bool {
    let c_sum: f64 = weights.iter().sum();
    let lhs = dstar_value
        + weights
            .iter()
            .zip(&point.r_j)
            .map(|(c, r)| c * r)
            .sum::<f64>();
    lhs >= (c_sum - 1.0) * point.r
}

/// One row of a region sweep.
#[derive(Clone, Debug)]
pub struct RegionPoint {
    pub weights: Vec<f64>,
    pub dstar: f64,
    /// `None` when `Σ c_j ≤ 1` (no rate cap can be extracted there).
    pub r_max: Option<f64>,
}

/// Sweeps the region boundary: for each weight vector in the grid,
/// `R_max = (d*(c) + Σ c_j R_j)/(Σ c_j − 1)`. The achievable region is
/// the pointwise infimum over the grid.
pub fn region_trace(
    dstar_fn: &dyn Fn(&[f64]) -> f64,
    c_grid: &[Vec<f64>],
    r_j: &[f64],
) -> Vec<RegionPoint> {
    c_grid
        .iter()
        .map(|c| {
            let c_sum: f64 = c.iter().sum();
            let ds = dstar_fn(c);
            let r_max = if c_sum > 1.0 {
                Some((ds + c.iter().zip(r_j).map(|(ci, ri)| ci * ri).sum::<f64>()) / (c_sum - 1.0))
            } else {
                None
            };
            RegionPoint {
                weights: c.clone(),
                dstar: ds,
                r_max,
            }
        })
        .collect()
}

/// Single-shot one-communicator bound (`m = 1`): a lower bound on the
/// key-uniformity defect `δ_2`,
///
/// `1 − δ − δ_3 − 1/|K|
///    − 2^{1/(1−ε)} e^{d/(c(1−ε))} |W| / ((ε′−δ_4)^{1/(c(1−ε))} |K|^{1−1/(c(1−ε))})`,
///
/// under `δ_3 δ_4 = δ_1 + δ`, `ε′ > δ_4`, `c(1−ε) > 1`. Returned raw.
#[allow(clippy::too_many_arguments)]
pub fn one_comm_bound(
    delta: f64,
    delta1: f64,
    delta3: f64,
    delta4: f64,
    eps: f64,
    eps_prime: f64,
    c: f64,
    d: f64,
    sizes: &SchemeSizes,
) -> Result<f64> {
    if sizes.w_sizes.len() != 1 {
        return Err(Error::InvalidParameter(
            "one-communicator bound is stated for m = 1".into(),
        ));
    }
    for (name, v) in [
        ("δ", delta),
        ("δ1", delta1),
        ("δ3", delta3),
        ("δ4", delta4),
        ("ε", eps),
        ("ε'", eps_prime),
    ] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0,1), got {v}"
            )));
        }
    }
    if (delta3 * delta4 - (delta1 + delta)).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "need δ3·δ4 = δ1 + δ: {} vs {}",
            delta3 * delta4,
            delta1 + delta
        )));
    }
    if eps_prime <= delta4 {
        return Err(Error::InvalidParameter(format!(
            "need ε' > δ4, got {eps_prime} ≤ {delta4}"
        )));
    }
    let exponent = c * (1.0 - eps);
    if exponent <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need c(1−ε) > 1, got {exponent}"
        )));
    }
    let k = sizes.k_size as f64;
    let w = sizes.w_sizes[0] as f64;
    let last = 2.0f64.powf(1.0 / (1.0 - eps)) * (d / exponent).exp() * w
        / ((eps_prime - delta4).powf(1.0 / exponent) * k.powf(1.0 - 1.0 / exponent));
    Ok(1.0 - delta - delta3 - 1.0 / k - last)
}

/// Omniscient-helper single-shot bound: a lower bound on
/// `½|Q_{K^m} − T_{K^m}|`,
///
/// `1 − 1/|K| − (Π_l |W_l|^{c_l/Σc}) e^{d/Σc} / |K|^{1−1/Σc} − δ`,
///
/// valid whenever `d ≥ d(μ, Q_{Y_j}, c^m)` for some `μ` with
/// `E_1(Q_{Y^m}‖μ) ≤ δ`. Returned raw.
pub fn omni_bound(sizes: &SchemeSizes, weights: &[f64], d: f64, delta: f64) -> f64 {
    assert_eq!(sizes.w_sizes.len(), weights.len(), "weights per message");
    let c_sum: f64 = weights.iter().sum();
    let k = sizes.k_size as f64;
    let w_prod: f64 = sizes
        .w_sizes
        .iter()
        .zip(weights)
        .map(|(w, c)| (*w as f64).powf(c / c_sum))
        .product();
    1.0 - 1.0 / k - w_prod * (d / c_sum).exp() / k.powf(1.0 - 1.0 / c_sum) - delta
}

/// TV–Rényi bound: for `T` equiprobable on `{1,…,M}` and unnormalized
/// `μ`, `E_1(T‖μ) ≥ 1 − 1/M − exp(−(1−α) D_α(T‖μ))` for `α ∈ (0,1)`.
pub fn tv_renyi_bound(m: u64, alpha: f64, renyi_value: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidParameter("M must be ≥ 1".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "α must lie in (0,1), got {alpha}"
        )));
    }
    Ok(1.0 - 1.0 / m as f64 - (-(1.0 - alpha) * renyi_value).exp())
}

/// Standard normal upper tail `Q(x) = P[N(0,1) > x]`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    1.0 - q_function(x)
}

/// Clamps a raw bound into `[0,1]` for presentation.
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Metric translation (one-communicator metrics → joint-TV metric):
/// `(δ_1, δ_2)` satisfying agreement and uniformity imply the joint TV
/// metric `δ = δ_1 + δ_2`.
pub fn tv_from_one_comm_deltas(delta1: f64, delta2: f64) -> f64 {
    delta1 + delta2
}

/// Metric translation (joint-TV metric → one-communicator metrics):
/// `δ` satisfying the joint TV constraint yields `δ_1 = δ_2 = δ`.
pub fn one_comm_deltas_from_tv(tv: f64) -> (f64, f64) {
    (tv, tv)
}

const SHARD: u64 = 4096;

fn shard_seed(seed: u64, shard: u64) -> u64 {
    // splitmix64 over (seed, shard)
    let mut z = seed ^ shard.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of `P[λ_max(W) ≤ d1]` for the standard Wigner
/// matrix `W = (A + Aᵀ)/√2`, `A` having i.i.d. standard normal entries.
///
/// Returns `(estimate, standard error)`. Bit-reproducible under a fixed
/// `(seed, samples)` pair.
pub fn wigner_lambda_max_cdf(
    dim: usize,
    d1: f64,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be ≥ 1".into()));
    }
    let mut hits = 0u64;
    let shards = samples.div_ceil(SHARD);
    for shard in 0..shards {
        let mut rng = ChaCha12Rng::seed_from_u64(shard_seed(seed, shard));
        let in_shard = SHARD.min(samples - shard * SHARD);
        for _ in 0..in_shard {
            let lmax = if dim == 1 {
                let a: f64 = rng.sample(StandardNormal);
                a * std::f64::consts::SQRT_2
            } else {
                let mut w = DMatrix::zeros(dim, dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let a: f64 = rng.sample(StandardNormal);
                        w[(i, j)] = a;
                    }
                }
                let sym = (&w + w.transpose()) / std::f64::consts::SQRT_2;
                sym.symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            if lmax <= d1 {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    Ok((p, se))
}

/// Pieces of the second-order converse bound.
#[derive(Clone, Debug)]
pub struct SecondOrderReport {
    pub v: f64,
    pub wigner_cdf: f64,
    pub wigner_se: f64,
    pub q_term: f64,
    /// `P[λ_max(W) ≤ D_1] − Q(D_2/√V)`.
    pub bound: f64,
}

/// Second-order bound for the Gaussian omniscient-helper problem:
/// `P[λ_max(W) ≤ D_1] − Q(D_2/√V)` lower-bounds the limiting TV metric
/// of any scheme sequence whose rates beat the region by more than
/// `(log e/2)(m − Σc_j) D_1 + D_2` at scale `√n`.
///
/// `D_1, D_2` are restricted to `(0, 1]`. The Wigner dimension defaults
/// to the source dimension; pass `wigner_dim` to override. `V = 0` makes
/// the `Q` term 0 (the `Q(∞) = 0` convention, applied also at `D_2 = 0`).
pub fn second_order_bound(
    inst: &GaussianInstance,
    d1: f64,
    d2: f64,
    samples: u64,
    seed: u64,
    wigner_dim: Option<usize>,
) -> Result<SecondOrderReport> {
    for (name, v) in [("D1", d1), ("D2", d2)] {
        if !(0.0 < v && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in (0,1], got {v}"
            )));
        }
    }
    let v = variance_v(inst)?;
    let q_term = if v == 0.0 { 0.0 } else { q_function(d2 / v.sqrt()) };
    let dim = wigner_dim.unwrap_or(inst.dim());
    let (wigner_cdf, wigner_se) = wigner_lambda_max_cdf(dim, d1, samples, seed)?;
    Ok(SecondOrderReport {
        v,
        wigner_cdf,
        wigner_se,
        q_term,
        bound: wigner_cdf - q_term,
    })
}
