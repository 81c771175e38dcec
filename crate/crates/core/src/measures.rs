//! Finite measures, channels, and divergences.
//!
//! Alphabets are dense integer index ranges `0..k`; symbolic labels, if
//! any, live in front-ends. Measures are plain nonnegative weight
//! vectors and need not be normalized — several constructions below
//! (smoothing measures, restricted measures) are deliberately
//! sub-probability. All quantities are in nats.
//!
//! Conventions, hard-coded throughout: `0·log(0/q) = 0` for any `q`, and
//! `p·log(p/0) = +∞` for `p > 0`. Infinite values are explicit
//! [`ExtReal`] variants.

use crate::ext_real::ExtReal;
use crate::{check_dims, Error, Result};

/// A nonnegative weight vector over a finite alphabet.
///
/// At least one weight must be strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty alphabet".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidMeasure(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self { weights })
    }

    /// Uniform probability measure on `k` symbols.
    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Point mass at symbol `x` on `k` symbols.
    pub fn point_mass(k: usize, x: usize) -> Self {
        assert!(x < k);
        let mut weights = vec![0.0; k];
        weights[x] = 1.0;
        Self { weights }
    }

    pub fn alphabet_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True iff the weights sum to 1 within 1e-12.
    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&x| self.weights[x] > 0.0)
            .collect()
    }

    /// Rescaled copy summing to 1.
    pub fn normalized(&self) -> Self {
        let s = self.total_mass();
        Self {
            weights: self.weights.iter().map(|w| w / s).collect(),
        }
    }

    /// Copy scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0 && s.is_finite());
        Self {
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }

    /// Product measure on the product alphabet, indexed row-major
    /// (`self` is the slow axis).
    pub fn tensor(&self, other: &FiniteMeasure) -> Self {
        let mut weights = Vec::with_capacity(self.weights.len() * other.weights.len());
        for &a in &self.weights {
            for &b in &other.weights {
                weights.push(a * b);
            }
        }
        Self { weights }
    }

    /// n-fold product measure. `n = 0` yields the trivial unit mass.
    pub fn tensor_power(&self, n: usize) -> Self {
        let mut out = Self {
            weights: vec![1.0],
        };
        for _ in 0..n {
            out = out.tensor(self);
        }
        out
    }
}

/// A row-stochastic kernel from an input alphabet to an output alphabet.
///
/// Stored row-major: `kernel[x * output_size + y] = Q(y|x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kernel: Vec<f64>,
    input_size: usize,
    output_size: usize,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidChannel("empty kernel".into()));
        }
        let output_size = rows[0].len();
        let mut kernel = Vec::with_capacity(rows.len() * output_size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::InvalidChannel(format!("ragged row {i}")));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChannel(format!(
                    "row {i} sums to {sum}, not 1"
                )));
            }
            kernel.extend_from_slice(row);
        }
        Ok(Self {
            kernel,
            input_size: rows.len(),
            output_size,
        })
    }

    /// Identity channel on `k` symbols.
    pub fn identity(k: usize) -> Self {
        let mut kernel = vec![0.0; k * k];
        for x in 0..k {
            kernel[x * k + x] = 1.0;
        }
        Self {
            kernel,
            input_size: k,
            output_size: k,
        }
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p));
        Self {
            kernel: vec![1.0 - p, p, p, 1.0 - p],
            input_size: 2,
            output_size: 2,
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.kernel[x * self.output_size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.kernel[x * self.output_size..(x + 1) * self.output_size]
    }

    /// Kronecker product with another channel: input and output alphabets
    /// multiply, `self` on the slow axis.
    pub fn tensor(&self, other: &Channel) -> Self {
        let input_size = self.input_size * other.input_size;
        let output_size = self.output_size * other.output_size;
        let mut kernel = vec![0.0; input_size * output_size];
        for xa in 0..self.input_size {
            for xb in 0..other.input_size {
                let x = xa * other.input_size + xb;
                for ya in 0..self.output_size {
                    let pa = self.prob(xa, ya);
                    if pa == 0.0 {
                        continue;
                    }
                    for yb in 0..other.output_size {
                        kernel[x * output_size + ya * other.output_size + yb] =
                            pa * other.prob(xb, yb);
                    }
                }
            }
        }
        Self {
            kernel,
            input_size,
            output_size,
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        assert!(n >= 1, "tensor power needs n >= 1");
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }
}

/// Pushes `p` through `ch`: output weights are `pᵀ · kernel`.
///
/// Preserves total mass.
pub fn push_forward(p: &FiniteMeasure, ch: &Channel) -> Result<FiniteMeasure> {
    check_dims(p.alphabet_size(), ch.input_size(), "push_forward input")?;
    let mut out = vec![0.0; ch.output_size()];
    for x in 0..ch.input_size() {
        let px = p.weight(x);
        if px == 0.0 {
            continue;
        }
        for (y, out_y) in out.iter_mut().enumerate() {
            *out_y += px * ch.prob(x, y);
        }
    }
    FiniteMeasure::new(out)
}

/// The full data of a GBLL best-constant problem: a reference measure
/// `μ` on X, channels `Q_{Y_j|X}`, reference measures `ν_j` on the
/// output alphabets, and positive weights `c_j`.
///
/// Neither `μ` nor the `ν_j` need to be probability measures, and `ν_j`
/// need not be the push-forward of `μ`.
#[derive(Clone, Debug)]
pub struct GbllInstance {
    pub mu: FiniteMeasure,
    pub channels: Vec<Channel>,
    pub nus: Vec<FiniteMeasure>,
    pub weights: Vec<f64>,
}

impl GbllInstance {
    pub fn new(
        mu: FiniteMeasure,
        channels: Vec<Channel>,
        nus: Vec<FiniteMeasure>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidInstance("need m >= 1 channels".into()));
        }
        check_dims(channels.len(), nus.len(), "channels vs nus")?;
        check_dims(channels.len(), weights.len(), "channels vs weights")?;
        for (j, ch) in channels.iter().enumerate() {
            check_dims(mu.alphabet_size(), ch.input_size(), "mu vs channel input")?;
            check_dims(
                ch.output_size(),
                nus[j].alphabet_size(),
                "channel output vs nu",
            )?;
        }
        if weights.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::InvalidInstance(
                "weights c_j must be finite and positive".into(),
            ));
        }
        Ok(Self {
            mu,
            channels,
            nus,
            weights,
        })
    }

    /// Instance with `μ = q_x` and `ν_j` the push-forwards of `q_x`: the
    /// configuration whose objective is the function `σ`.
    pub fn from_source(
        q_x: FiniteMeasure,
        channels: Vec<Channel>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let nus = channels
            .iter()
            .map(|ch| push_forward(&q_x, ch))
            .collect::<Result<Vec<_>>>()?;
        Self::new(q_x, channels, nus, weights)
    }

    pub fn m(&self) -> usize {
        self.channels.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.mu.alphabet_size()
    }

    /// Product instance. Requires equal weight vectors.
    pub fn tensor(&self, other: &GbllInstance) -> Result<GbllInstance> {
        check_dims(self.m(), other.m(), "tensor weight count")?;
        if self
            .weights
            .iter()
            .zip(&other.weights)
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidInstance(
                "tensor requires identical weights c^m".into(),
            ));
        }
        GbllInstance::new(
            self.mu.tensor(&other.mu),
            self.channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.tensor(b))
                .collect(),
            self.nus
                .iter()
                .zip(&other.nus)
                .map(|(a, b)| a.tensor(b))
                .collect(),
            self.weights.clone(),
        )
    }

    pub fn tensor_power(&self, n: usize) -> Result<GbllInstance> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }
}

/// Relative entropy `D(P‖μ) = Σ_x P(x) log(P(x)/μ(x))` in nats.
///
/// `P` must be a probability measure; `μ` may be unnormalized. Returns
/// `+∞` iff `P` puts mass where `μ` has none.
pub fn rel_entropy(p: &FiniteMeasure, mu: &FiniteMeasure) -> Result<ExtReal> {
    check_dims(p.alphabet_size(), mu.alphabet_size(), "rel_entropy")?;
    debug_assert!(p.is_probability(), "rel_entropy: P must be a probability");
    let mut sum = 0.0;
    for x in 0..p.alphabet_size() {
        let px = p.weight(x);
        if px == 0.0 {
            continue;
        }
        let mx = mu.weight(x);
        if mx == 0.0 {
            return Ok(ExtReal::PosInf);
        }
        sum += px * (px / mx).ln();
    }
    Ok(ExtReal::Finite(sum))
}

/// Rényi divergence of order `α ∈ (0,1) ∪ (1,∞)`:
/// `(1/(α−1)) log Σ_x P(x)^α μ(x)^{1−α}`.
pub fn renyi_div(alpha: f64, p: &FiniteMeasure, mu: &FiniteMeasure) -> Result<ExtReal> {
    check_dims(p.alphabet_size(), mu.alphabet_size(), "renyi_div")?;
    if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Rényi order must lie in (0,1) ∪ (1,∞), got {alpha}"
        )));
    }
    debug_assert!(p.is_probability(), "renyi_div: P must be a probability");
    let mut sum = 0.0;
    for x in 0..p.alphabet_size() {
        let px = p.weight(x);
        let mx = mu.weight(x);
        if px == 0.0 {
            // p^α = 0 for α > 0 regardless of μ.
            continue;
        }
        if mx == 0.0 {
            if alpha > 1.0 {
                // p^α μ^{1−α} = p^α / μ^{α−1} → ∞.
                return Ok(ExtReal::PosInf);
            }
            continue; // α < 1: μ^{1−α} = 0.
        }
        sum += px.powf(alpha) * mx.powf(1.0 - alpha);
    }
    if sum == 0.0 {
        // Possible only for α < 1 with disjoint supports.
        return Ok(ExtReal::PosInf);
    }
    Ok(ExtReal::Finite(sum.ln() / (alpha - 1.0)))
}

/// `E_γ` divergence `Σ_x (ν(x) − γ μ(x))⁺` for `γ ≥ 1`.
///
/// Equals the supremum of `ν(A) − γ μ(A)` over subsets `A`.
pub fn e_gamma(nu: &FiniteMeasure, mu: &FiniteMeasure, gamma: f64) -> Result<f64> {
    check_dims(nu.alphabet_size(), mu.alphabet_size(), "e_gamma")?;
    if !(gamma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "E_γ requires γ >= 1, got {gamma}"
        )));
    }
    let mut sum = 0.0;
    for x in 0..nu.alphabet_size() {
        let diff = nu.weight(x) - gamma * mu.weight(x);
        if diff > 0.0 {
            sum += diff;
        }
    }
    Ok(sum)
}

/// Information density `ı_{P‖μ}(x) = log(P(x)/μ(x))`, with the usual
/// `±∞` conventions at zeros. `0/0` is taken as `log 1 = 0`.
pub fn info_density(p: &FiniteMeasure, mu: &FiniteMeasure, x: usize) -> ExtReal {
    let px = p.weight(x);
    let mx = mu.weight(x);
    if px == 0.0 && mx == 0.0 {
        ExtReal::Finite(0.0)
    } else if px == 0.0 {
        ExtReal::NegInf
    } else if mx == 0.0 {
        ExtReal::PosInf
    } else {
        ExtReal::Finite((px / mx).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn fm(w: &[f64]) -> FiniteMeasure {
        FiniteMeasure::new(w.to_vec()).unwrap()
    }

    fn random_prob(rng: &mut impl Rng, k: usize) -> FiniteMeasure {
        let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().ln()).collect();
        let s: f64 = raw.iter().sum();
        fm(&raw.iter().map(|w| w / s).collect::<Vec<_>>())
    }

    fn random_channel(rng: &mut impl Rng, nx: usize, ny: usize) -> Channel {
        let rows = (0..nx)
            .map(|_| {
                let raw: Vec<f64> = (0..ny).map(|_| -rng.random::<f64>().ln()).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|w| w / s).collect()
            })
            .collect();
        Channel::new(rows).unwrap()
    }

    #[test]
    fn rel_entropy_identical_is_zero() {
        let p = fm(&[0.5, 0.5]);
        assert_eq!(rel_entropy(&p, &p).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn rel_entropy_point_mass_vs_uniform() {
        let p = fm(&[1.0, 0.0]);
        let mu = fm(&[0.5, 0.5]);
        assert_abs_diff_eq!(
            rel_entropy(&p, &mu).unwrap().expect_finite("finite"),
            2.0_f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rel_entropy_unnormalized_reference() {
        // D(P‖sμ) = D(P‖μ) − log s with s = 1/2.
        let p = fm(&[0.5, 0.5]);
        let mu = fm(&[0.25, 0.25]);
        assert_abs_diff_eq!(
            rel_entropy(&p, &mu).unwrap().expect_finite("finite"),
            2.0_f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rel_entropy_escaping_support_is_infinite() {
        let p = fm(&[0.5, 0.5]);
        let mu = fm(&[1.0, 0.0]);
        assert_eq!(rel_entropy(&p, &mu).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn rel_entropy_scaling_law() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let k = rng.random_range(2..6);
            let p = random_prob(&mut rng, k);
            let mu = random_prob(&mut rng, k);
            let s = rng.random_range(0.1..10.0);
            let base = rel_entropy(&p, &mu).unwrap().expect_finite("finite");
            let scaled = rel_entropy(&p, &mu.scaled(s)).unwrap().expect_finite("finite");
            assert_abs_diff_eq!(scaled, base - s.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rel_entropy_joint_convexity() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..50 {
            let k = rng.random_range(2..6);
            let (p1, p2) = (random_prob(&mut rng, k), random_prob(&mut rng, k));
            let (m1, m2) = (random_prob(&mut rng, k), random_prob(&mut rng, k));
            let lam: f64 = rng.random_range(0.0..1.0);
            let mix = |a: &FiniteMeasure, b: &FiniteMeasure| {
                fm(&(0..k)
                    .map(|x| lam * a.weight(x) + (1.0 - lam) * b.weight(x))
                    .collect::<Vec<_>>())
            };
            let lhs = rel_entropy(&mix(&p1, &p2), &mix(&m1, &m2))
                .unwrap()
                .expect_finite("finite");
            let rhs = lam * rel_entropy(&p1, &m1).unwrap().expect_finite("finite")
                + (1.0 - lam) * rel_entropy(&p2, &m2).unwrap().expect_finite("finite");
            assert!(lhs <= rhs + 1e-10, "convexity violated: {lhs} > {rhs}");
        }
    }

    #[test]
    fn rel_entropy_data_processing() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let nx = rng.random_range(2..5);
            let ny = rng.random_range(2..5);
            let p = random_prob(&mut rng, nx);
            let mu = random_prob(&mut rng, nx);
            let ch = random_channel(&mut rng, nx, ny);
            let before = rel_entropy(&p, &mu).unwrap().expect_finite("finite");
            let after = rel_entropy(
                &push_forward(&p, &ch).unwrap(),
                &push_forward(&mu, &ch).unwrap(),
            )
            .unwrap()
            .expect_finite("finite");
            assert!(after <= before + 1e-10);
        }
    }

    #[test]
    fn renyi_matches_direct_evaluation() {
        // α = 0.5, P = [0.9, 0.1], μ = uniform: the defining sum is
        // √0.45 + √0.05 = √1.25 · (0.6 + 0.2) ... frozen via ln(5/4):
        // (1/(0.5−1)) ln(√0.45 + √0.05) = −2 ln(1/√1.25) = ln 1.25.
        let p = fm(&[0.9, 0.1]);
        let mu = fm(&[0.5, 0.5]);
        let v = renyi_div(0.5, &p, &mu).unwrap().expect_finite("finite");
        assert_abs_diff_eq!(v, 1.25_f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn renyi_trivial_cases() {
        let u = fm(&[0.5, 0.5]);
        assert_abs_diff_eq!(
            renyi_div(0.5, &u, &u).unwrap().expect_finite("finite"),
            0.0,
            epsilon = 1e-15
        );
        let point = fm(&[1.0, 0.0]);
        assert_abs_diff_eq!(
            renyi_div(2.0, &point, &u).unwrap().expect_finite("finite"),
            2.0_f64.ln(),
            epsilon = 1e-15
        );
        assert!(renyi_div(1.0, &u, &u).is_err());
    }

    #[test]
    fn e_gamma_examples() {
        let p = fm(&[0.3, 0.7]);
        assert_eq!(e_gamma(&p, &p, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            e_gamma(&fm(&[1.0, 0.0]), &fm(&[0.5, 0.5]), 1.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // (0.5 − 0.2)⁺ + (0.5 − 1.8)⁺ = 0.3
        assert_abs_diff_eq!(
            e_gamma(&fm(&[0.5, 0.5]), &fm(&[0.1, 0.9]), 2.0).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        assert!(e_gamma(&p, &p, 0.5).is_err());
    }

    /// Brute-force E_γ as a subset supremum, summing in index order so
    /// agreement with the closed form is exact.
    fn e_gamma_brute(nu: &FiniteMeasure, mu: &FiniteMeasure, gamma: f64) -> f64 {
        let k = nu.alphabet_size();
        let mut best = 0.0; // empty set
        for mask in 0u32..(1 << k) {
            let mut v = 0.0;
            for x in 0..k {
                if mask >> x & 1 == 1 {
                    v += nu.weight(x) - gamma * mu.weight(x);
                }
            }
            if v > best {
                best = v;
            }
        }
        best
    }

    #[test]
    fn e_gamma_equals_subset_supremum() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..200 {
            let k = rng.random_range(1..9);
            let nu = random_prob(&mut rng, k).scaled(rng.random_range(0.2..2.0));
            let mu = random_prob(&mut rng, k).scaled(rng.random_range(0.2..2.0));
            let gamma = rng.random_range(1.0..3.0);
            assert_eq!(
                e_gamma(&nu, &mu, gamma).unwrap(),
                e_gamma_brute(&nu, &mu, gamma)
            );
        }
    }

    #[test]
    fn push_forward_identity_and_bsc() {
        let p = fm(&[0.3, 0.7]);
        assert_eq!(push_forward(&p, &Channel::identity(2)).unwrap(), p);
        let out = push_forward(&fm(&[1.0, 0.0]), &Channel::bsc(0.11)).unwrap();
        assert_abs_diff_eq!(out.weight(0), 0.89, epsilon = 1e-15);
        assert_abs_diff_eq!(out.weight(1), 0.11, epsilon = 1e-15);
    }

    #[test]
    fn push_forward_doubly_stochastic_fixes_uniform() {
        let ch = Channel::new(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.3, 0.2],
            vec![0.3, 0.2, 0.5],
        ])
        .unwrap();
        let u = FiniteMeasure::uniform(3);
        let out = push_forward(&u, &ch).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(out.weight(x), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn push_forward_preserves_mass() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let nx = rng.random_range(2..5);
            let ny = rng.random_range(2..5);
            let p = random_prob(&mut rng, nx).scaled(rng.random_range(0.2..3.0));
            let ch = random_channel(&mut rng, nx, ny);
            let out = push_forward(&p, &ch).unwrap();
            assert_abs_diff_eq!(out.total_mass(), p.total_mass(), epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_power_basics() {
        let inst = GbllInstance::from_source(
            fm(&[0.4, 0.6]),
            vec![Channel::bsc(0.11)],
            vec![1.5],
        )
        .unwrap();
        let t1 = inst.tensor_power(1).unwrap();
        assert_eq!(t1.mu, inst.mu);
        assert_eq!(t1.channels[0], inst.channels[0]);

        let t3 = inst.tensor_power(3).unwrap();
        assert_eq!(t3.alphabet_size(), 8);
        // Masses multiply: index 5 = (1,0,1).
        assert_abs_diff_eq!(t3.mu.weight(5), 0.6 * 0.4 * 0.6, epsilon = 1e-15);
    }

    #[test]
    fn push_forward_commutes_with_tensor() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let p = random_prob(&mut rng, 3);
        let ch = random_channel(&mut rng, 3, 2);
        let lhs = push_forward(&p.tensor(&p), &ch.tensor(&ch)).unwrap();
        let single = push_forward(&p, &ch).unwrap();
        let rhs = single.tensor(&single);
        for y in 0..lhs.alphabet_size() {
            assert_abs_diff_eq!(lhs.weight(y), rhs.weight(y), epsilon = 1e-14);
        }
    }

    #[test]
    fn info_density_basics() {
        let p = fm(&[0.5, 0.5]);
        assert_eq!(info_density(&p, &p, 0), ExtReal::Finite(0.0));
        let mu = fm(&[0.25, 0.25]);
        for x in 0..2 {
            assert_abs_diff_eq!(
                info_density(&p, &mu, x).expect_finite("finite"),
                2.0_f64.ln(),
                epsilon = 1e-15
            );
        }
        assert_eq!(info_density(&fm(&[0.0, 1.0]), &p, 0), ExtReal::NegInf);
        assert_eq!(info_density(&p, &fm(&[0.0, 1.0]), 0), ExtReal::PosInf);
    }

    #[test]
    fn info_density_mean_is_rel_entropy() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..30 {
            let k = rng.random_range(2..7);
            let p = random_prob(&mut rng, k);
            let mu = random_prob(&mut rng, k).scaled(rng.random_range(0.3..3.0));
            let mean: f64 = (0..k)
                .map(|x| p.weight(x) * info_density(&p, &mu, x).to_f64())
                .filter(|v| *v != 0.0 || true)
                .sum();
            assert_abs_diff_eq!(
                mean,
                rel_entropy(&p, &mu).unwrap().expect_finite("finite"),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn dimension_mismatch_errors() {
        let p2 = fm(&[0.5, 0.5]);
        let p3 = fm(&[0.2, 0.3, 0.5]);
        assert!(rel_entropy(&p2, &p3).is_err());
        assert!(renyi_div(0.5, &p2, &p3).is_err());
        assert!(e_gamma(&p2, &p3, 1.0).is_err());
        assert!(push_forward(&p3, &Channel::bsc(0.1)).is_err());
    }

    #[test]
    fn invalid_constructions_rejected() {
        assert!(FiniteMeasure::new(vec![]).is_err());
        assert!(FiniteMeasure::new(vec![0.0, 0.0]).is_err());
        assert!(FiniteMeasure::new(vec![-0.1, 1.1]).is_err());
        assert!(Channel::new(vec![vec![0.6, 0.6]]).is_err());
        assert!(GbllInstance::new(
            fm(&[1.0]),
            vec![Channel::identity(1)],
            vec![fm(&[1.0])],
            vec![0.0]
        )
        .is_err());
    }
}
