//! Gaussian-case constants.
//!
//! For a Gaussian source `X ~ N(0, Σ)` observed through linear maps
//! `Y_j = A_j X + Z_j` with Gaussian noise, and Lebesgue reference
//! measures, the envelope value reduces to a log-determinant program:
//!
//! `F(M) = sup { h(X|U) − Σ_j c_j h(Y_j|U) }  over  Σ_X ⪯ M`
//!       `= sup_{0 ⪯ S ⪯ M} ½ log((2πe)^k det S) − Σ_j (c_j/2) log((2πe)^{k_j} det(A_j S A_jᵀ + N_j))`
//!
//! (Gaussian `X` and constant `U` suffice), and
//! `d*(Q_X, Q_{Y_j}, c^m) = F(Σ) + C` with
//! `C = Σ_j c_j h(Y_j) − h(X)`.
//!
//! `F` can genuinely be `+∞`: with noiseless block observations the
//! objective grows without bound along `S → 0` whenever `Σ_j c_j k_j`
//! exceeds `k` (for scalar blocks: `Σ c_j > m`). The optimizer detects
//! this analytically along shrinking directions and by a runtime cap.
//!
//! All determinants go through symmetric eigendecompositions; entries of
//! the information-density variance `V` come from the closed form
//! `V = ½ tr((H Ω)²)` for the Gaussian quadratic form.

use crate::ext_real::ExtReal;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default dimension cap; eigendecompositions at desk scale.
pub const MAX_DIM: usize = 8;

const LN_2PE: f64 = 2.837877066409345; // ln(2πe)

/// Source covariance, per-output linear maps, noise covariances, and
/// weights `c_j`. Noise may be exactly zero (noiseless observation), but
/// every output covariance `A_j Σ A_jᵀ + N_j` must be nondegenerate.
#[derive(Clone, Debug)]
pub struct GaussianInstance {
    sigma: DMatrix<f64>,
    maps: Vec<DMatrix<f64>>,
    noise: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInstance(format!("{what} must be square")));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidInstance(format!("{what} is not symmetric")));
            }
        }
    }
    Ok((m + m.transpose()) * 0.5)
}

fn sym_eigvals(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect()
}

/// Symmetric square root, clamping tiny negative eigenvalues to zero.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// log det of a PSD matrix; `NegInf` when singular to working precision.
fn logdet_psd(m: &DMatrix<f64>) -> ExtReal {
    let eigs = sym_eigvals(m);
    let scale = eigs.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let mut sum = 0.0;
    for &e in &eigs {
        if e <= 1e-13 * scale {
            return ExtReal::NegInf;
        }
        sum += e.ln();
    }
    ExtReal::Finite(sum)
}

impl GaussianInstance {
    pub fn new(
        sigma: DMatrix<f64>,
        maps: Vec<DMatrix<f64>>,
        noise: Vec<DMatrix<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let sigma = check_symmetric(&sigma, "Σ")?;
        let k = sigma.nrows();
        if k == 0 || k > MAX_DIM {
            return Err(Error::InvalidInstance(format!(
                "source dimension must be 1..={MAX_DIM}"
            )));
        }
        let min_eig = sym_eigvals(&sigma).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig <= 1e-12 * sigma.amax() {
            return Err(Error::InvalidInstance("Σ must be positive definite".into()));
        }
        if maps.is_empty() || maps.len() != noise.len() || maps.len() != weights.len() {
            return Err(Error::InvalidInstance(
                "need matching nonempty maps, noise, weights".into(),
            ));
        }
        if weights.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::InvalidInstance("weights must be positive".into()));
        }
        let mut sym_noise = Vec::with_capacity(noise.len());
        for (j, (a, n)) in maps.iter().zip(&noise).enumerate() {
            if a.ncols() != k {
                return Err(Error::InvalidInstance(format!("A_{j} has wrong width")));
            }
            if a.nrows() == 0 || a.nrows() > MAX_DIM {
                return Err(Error::InvalidInstance(format!(
                    "output {j} dimension must be 1..={MAX_DIM}"
                )));
            }
            let n = check_symmetric(n, "noise")?;
            if n.nrows() != a.nrows() {
                return Err(Error::InvalidInstance(format!("N_{j} has wrong size")));
            }
            let lo = sym_eigvals(&n).into_iter().fold(f64::INFINITY, f64::min);
            if lo < -1e-9 * n.amax().max(1.0) {
                return Err(Error::InvalidInstance(format!("N_{j} is not PSD")));
            }
            sym_noise.push(n);
        }
        let inst = Self {
            sigma,
            maps,
            noise: sym_noise,
            weights,
        };
        for j in 0..inst.m() {
            if logdet_psd(&inst.output_cov(j, &inst.sigma)) == ExtReal::NegInf {
                return Err(Error::InvalidInstance(format!(
                    "output covariance {j} is degenerate"
                )));
            }
        }
        Ok(inst)
    }

    /// The omniscient-helper configuration `X = (Y_1, …, Y_m)`: maps are
    /// noiseless block selectors of the given dimensions.
    pub fn omniscient(sigma: DMatrix<f64>, block_dims: &[usize], weights: Vec<f64>) -> Result<Self> {
        let k: usize = block_dims.iter().sum();
        if sigma.nrows() != k {
            return Err(Error::InvalidInstance(
                "block dimensions must sum to the source dimension".into(),
            ));
        }
        let mut maps = Vec::with_capacity(block_dims.len());
        let mut noise = Vec::with_capacity(block_dims.len());
        let mut offset = 0;
        for &dim in block_dims {
            let mut a = DMatrix::zeros(dim, k);
            for r in 0..dim {
                a[(r, offset + r)] = 1.0;
            }
            maps.push(a);
            noise.push(DMatrix::zeros(dim, dim));
            offset += dim;
        }
        Self::new(sigma, maps, noise, weights)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self, j: usize) -> &DMatrix<f64> {
        &self.maps[j]
    }

    pub fn noise_cov(&self, j: usize) -> &DMatrix<f64> {
        &self.noise[j]
    }

    /// `A_j S A_jᵀ + N_j`.
    pub fn output_cov(&self, j: usize, s: &DMatrix<f64>) -> DMatrix<f64> {
        &self.maps[j] * s * self.maps[j].transpose() + &self.noise[j]
    }
}

/// Differential entropy `½ log((2πe)^k det cov)` in nats; `−∞` for a
/// singular covariance.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<ExtReal> {
    let cov = check_symmetric(cov, "covariance")?;
    let k = cov.nrows() as f64;
    Ok(match logdet_psd(&cov) {
        ExtReal::Finite(ld) => ExtReal::Finite(0.5 * (k * LN_2PE + ld)),
        inf => inf,
    })
}

/// Result of the `F(M)` log-det maximization.
#[derive(Clone, Debug)]
pub struct GaussianFResult {
    pub value: ExtReal,
    /// Maximizing `S` (within `0 ⪯ S ⪯ M`) when the value is finite.
    pub optimal_cov: Option<DMatrix<f64>>,
    pub diverged_reason: Option<String>,
}

struct FObjective<'a> {
    inst: &'a GaussianInstance,
    m_sqrt: DMatrix<f64>,
}

impl<'a> FObjective<'a> {
    /// f(S) = h(S) − Σ_j c_j h(C_j(S)); +∞ exactly when some noiseless
    /// output covariance degenerates faster than S.
    fn value(&self, s: &DMatrix<f64>) -> ExtReal {
        let hs = match logdet_psd(s) {
            ExtReal::Finite(ld) => 0.5 * (self.inst.dim() as f64 * LN_2PE + ld),
            _ => return ExtReal::NegInf,
        };
        let mut acc = hs;
        for j in 0..self.inst.m() {
            let cj = self.inst.output_cov(j, s);
            match logdet_psd(&cj) {
                ExtReal::Finite(ld) => {
                    acc -= self.inst.weights[j] * 0.5 * (cj.nrows() as f64 * LN_2PE + ld);
                }
                _ => return ExtReal::PosInf,
            }
        }
        ExtReal::Finite(acc)
    }

    fn s_of_t(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        &self.m_sqrt * t * &self.m_sqrt
    }

    /// ∇_T f = M^{1/2} (½ S⁻¹ − Σ_j (c_j/2) A_jᵀ C_j⁻¹ A_j) M^{1/2}.
    fn gradient_t(&self, s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let mut g = s.clone().try_inverse()? * 0.5;
        for j in 0..self.inst.m() {
            let cj_inv = self.inst.output_cov(j, s).try_inverse()?;
            g -= self.inst.maps[j].transpose() * cj_inv * &self.inst.maps[j]
                * (self.inst.weights[j] * 0.5);
        }
        Some(&self.m_sqrt * g * &self.m_sqrt)
    }
}

/// Projects a symmetric matrix onto `{T : η ⪯ T ⪯ I}` by eigenvalue
/// clipping.
fn clip_to_box(t: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let eig = ((t + t.transpose()) * 0.5).symmetric_eigen();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.clamp(eta, 1.0)),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Asymptotic slope of `f(S(ε))` in `log ε` as `ε → 0` when the
/// `T`-space directions in `v` (orthonormal columns) are scaled by `ε`:
/// `(dim V − Σ_j c_j d_j)/2`, where `d_j` is the number of output
/// directions of `C_j` that degenerate in the limit. A negative slope
/// certifies `f → +∞` along that face.
fn shrink_slope(
    inst: &GaussianInstance,
    m_sqrt: &DMatrix<f64>,
    m_cap: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> f64 {
    let k = inst.dim();
    let p_perp = DMatrix::identity(k, k) - v * v.transpose();
    let s0 = m_sqrt * p_perp * m_sqrt;
    let mut weighted = 0.0;
    for j in 0..inst.m() {
        let c0 = inst.output_cov(j, &s0);
        let scale = inst.output_cov(j, m_cap).amax().max(1e-300);
        let d_j = sym_eigvals(&c0)
            .iter()
            .filter(|&&e| e <= 1e-9 * scale)
            .count();
        weighted += inst.weights[j] * d_j as f64;
    }
    (v.ncols() as f64 - weighted) / 2.0
}

/// Orthonormal basis of the column span of `m` (thin QR).
fn orth(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let q = qr.q();
    q.columns(0, m.ncols().min(q.ncols())).into_owned()
}

/// Maximizes `f(S) = h(S) − Σ_j c_j h(A_j S A_jᵀ + N_j)` over
/// `0 ⪯ S ⪯ M` by projected gradient ascent in `S = M^{1/2} T M^{1/2}`
/// with eigenvalues of `T` clipped to `[η, 1]`, `η = 1e-10`.
pub fn gaussian_f(m_cap: &DMatrix<f64>, inst: &GaussianInstance) -> Result<GaussianFResult> {
    let m_cap = check_symmetric(m_cap, "M")?;
    if m_cap.nrows() != inst.dim() {
        return Err(Error::DimensionMismatch {
            left: m_cap.nrows(),
            right: inst.dim(),
            context: "F cap vs source dimension",
        });
    }
    let min_eig = sym_eigvals(&m_cap).into_iter().fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::InvalidParameter("M must be positive definite".into()));
    }

    // Outputs degenerate for every feasible S: f ≡ +∞.
    for j in 0..inst.m() {
        if logdet_psd(&inst.output_cov(j, &m_cap)) == ExtReal::NegInf {
            return Ok(GaussianFResult {
                value: ExtReal::PosInf,
                optimal_cov: None,
                diverged_reason: Some(format!("output {j} is degenerate for all S ⪯ M")),
            });
        }
    }
    let eta = 1e-10;
    let cap = 50.0;
    let obj = FObjective {
        inst,
        m_sqrt: sym_sqrt(&m_cap),
    };
    let k = inst.dim();

    // Exact unboundedness test along the full space (catches Σ c_j k_j
    // > k for noiseless blocks) and every coordinate-aligned face.
    let mut faces: Vec<DMatrix<f64>> = vec![DMatrix::identity(k, k)];
    for mask in 1u32..(1u32 << k) - 1 {
        let cols: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let e_w = DMatrix::from_fn(k, cols.len(), |r, c| if r == cols[c] { 1.0 } else { 0.0 });
        faces.push(orth(&(&obj.m_sqrt * e_w)));
    }
    for v in &faces {
        let slope = shrink_slope(inst, &obj.m_sqrt, &m_cap, v);
        if slope < -1e-9 {
            return Ok(GaussianFResult {
                value: ExtReal::PosInf,
                optimal_cov: None,
                diverged_reason: Some(format!(
                    "objective unbounded along a {}-dim shrinking face (slope {slope:.3})",
                    v.ncols()
                )),
            });
        }
    }

    let mut starts: Vec<DMatrix<f64>> = vec![
        DMatrix::identity(k, k),
        DMatrix::identity(k, k) * 0.5,
        DMatrix::identity(k, k) * 0.05,
    ];
    // Deterministic pseudo-random contractions.
    let mut lcg = 0x9e3779b97f4a7c15u64;
    for _ in 0..3 {
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((lcg >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        starts.push(clip_to_box(&(DMatrix::identity(k, k) * 0.6 + t * 0.4), eta));
    }

    let mut best_value = f64::NEG_INFINITY;
    let mut best_s: Option<DMatrix<f64>> = None;
    for t0 in starts {
        let mut t = t0;
        let mut s = obj.s_of_t(&t);
        let mut value = match obj.value(&s) {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => {
                return Ok(GaussianFResult {
                    value: ExtReal::PosInf,
                    optimal_cov: None,
                    diverged_reason: Some("objective +∞ at an interior point".into()),
                })
            }
            ExtReal::NegInf => continue,
        };
        let mut step = 0.1;
        for _ in 0..4000 {
            let Some(g) = obj.gradient_t(&s) else { break };
            let mut improved = false;
            while step > 1e-18 {
                let cand = clip_to_box(&(&t + &g * step), eta);
                let s_cand = obj.s_of_t(&cand);
                match obj.value(&s_cand) {
                    ExtReal::Finite(v) if v > value + 1e-15 => {
                        let gain = v - value;
                        t = cand;
                        s = s_cand;
                        value = v;
                        step = (step * 1.5).min(10.0);
                        improved = true;
                        if value > cap {
                            return Ok(GaussianFResult {
                                value: ExtReal::PosInf,
                                optimal_cov: None,
                                diverged_reason: Some(
                                    "objective exceeded the magnitude cap".into(),
                                ),
                            });
                        }
                        if gain < 1e-13 {
                            improved = false; // converged
                        }
                        break;
                    }
                    ExtReal::PosInf => {
                        return Ok(GaussianFResult {
                            value: ExtReal::PosInf,
                            optimal_cov: None,
                            diverged_reason: Some("objective +∞ along the ascent path".into()),
                        })
                    }
                    _ => step *= 0.5,
                }
            }
            if !improved {
                break;
            }
        }
        if value > best_value {
            best_value = value;
            best_s = Some(s);
        }
    }

    // The optimizer may drift toward a degenerate face it cannot fully
    // reach; certify those faces analytically from the small
    // eigendirections of the converged iterate.
    if let Some(s_star) = &best_s {
        let m_inv_sqrt = {
            let eig = obj.m_sqrt.clone().symmetric_eigen();
            let d = DMatrix::from_diagonal(&DVector::from_iterator(
                eig.eigenvalues.len(),
                eig.eigenvalues.iter().map(|&v| 1.0 / v.max(1e-300)),
            ));
            &eig.eigenvectors * d * eig.eigenvectors.transpose()
        };
        let t_star = &m_inv_sqrt * s_star * &m_inv_sqrt;
        let eig = ((&t_star + t_star.transpose()) * 0.5).symmetric_eigen();
        for threshold in [100.0 * eta, 1e-6, 1e-4, 1e-2] {
            let small: Vec<usize> = (0..k)
                .filter(|&i| eig.eigenvalues[i] <= threshold)
                .collect();
            if small.is_empty() || small.len() == k {
                continue;
            }
            let v = DMatrix::from_fn(k, small.len(), |r, c| eig.eigenvectors[(r, small[c])]);
            let slope = shrink_slope(inst, &obj.m_sqrt, &m_cap, &orth(&v));
            if slope < -1e-9 {
                return Ok(GaussianFResult {
                    value: ExtReal::PosInf,
                    optimal_cov: None,
                    diverged_reason: Some(format!(
                        "objective unbounded along the face approached by the optimizer \
                         (slope {slope:.3})"
                    )),
                });
            }
        }
    }

    Ok(GaussianFResult {
        value: ExtReal::Finite(best_value),
        optimal_cov: best_s,
        diverged_reason: None,
    })
}

/// `C = Σ_j c_j h(Y_j) − h(X)` at the source law (`h(X)`, reading the
/// subscripted form as the source entropy).
pub fn gaussian_c(inst: &GaussianInstance) -> Result<f64> {
    let mut c = match gaussian_entropy(inst.sigma())? {
        ExtReal::Finite(h) => -h,
        _ => return Err(Error::InvalidInstance("Σ entropy is degenerate".into())),
    };
    for j in 0..inst.m() {
        match gaussian_entropy(&inst.output_cov(j, inst.sigma()))? {
            ExtReal::Finite(h) => c += inst.weights[j] * h,
            _ => {
                return Err(Error::InvalidInstance(format!(
                    "output {j} entropy is degenerate"
                )))
            }
        }
    }
    Ok(c)
}

/// `d* = F(Σ) + C`; `+∞` propagates from a diverged `F`.
pub fn gaussian_dstar(inst: &GaussianInstance) -> Result<ExtReal> {
    let f = gaussian_f(inst.sigma(), inst)?;
    match f.value {
        ExtReal::PosInf => Ok(ExtReal::PosInf),
        ExtReal::Finite(v) => Ok(ExtReal::Finite(v + gaussian_c(inst)?)),
        ExtReal::NegInf => Ok(ExtReal::NegInf),
    }
}

/// Variance of `Σ_j c_j ı_{Q_{Y_j}‖ν_j}(Y_j) − ı_{Q_X‖μ}(X)` under the
/// source law, for Lebesgue references: the closed form
/// `V = ½ tr((H Ω)²)` of the Gaussian quadratic form, where `Ω` is the
/// joint covariance of the source and the (nonzero) noises.
pub fn variance_v(inst: &GaussianInstance) -> Result<f64> {
    let k = inst.dim();
    // ξ = (X, Z_j for noisy outputs); Ω = blockdiag(Σ, N_j...).
    let noisy: Vec<usize> = (0..inst.m())
        .filter(|&j| inst.noise[j].amax() > 0.0)
        .collect();
    let total: usize = k + noisy.iter().map(|&j| inst.noise[j].nrows()).sum::<usize>();
    let mut omega = DMatrix::zeros(total, total);
    omega.view_mut((0, 0), (k, k)).copy_from(&inst.sigma);
    let mut offsets = vec![0usize; inst.m()];
    let mut off = k;
    for &j in &noisy {
        let d = inst.noise[j].nrows();
        omega.view_mut((off, off), (d, d)).copy_from(&inst.noise[j]);
        offsets[j] = off;
        off += d;
    }

    let mut h = DMatrix::zeros(total, total);
    // −B_Xᵀ Σ⁻¹ B_X.
    let sigma_inv = inst
        .sigma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInstance("Σ is numerically singular".into()))?;
    h.view_mut((0, 0), (k, k)).copy_from(&(-&sigma_inv));
    for j in 0..inst.m() {
        let cj = inst.output_cov(j, &inst.sigma);
        let cj_inv = cj
            .try_inverse()
            .ok_or_else(|| Error::InvalidInstance(format!("C_{j} is degenerate")))?;
        let d = inst.maps[j].nrows();
        let mut b = DMatrix::zeros(d, total);
        b.view_mut((0, 0), (d, k)).copy_from(&inst.maps[j]);
        if inst.noise[j].amax() > 0.0 {
            let o = offsets[j];
            for r in 0..d {
                b[(r, o + r)] = 1.0;
            }
        }
        h += b.transpose() * cj_inv * b * inst.weights[j];
    }

    let ho = &h * &omega;
    let v = 0.5 * (&ho * &ho).trace();
    Ok(v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn dm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn scalar_instance(c: f64, a: f64, n: f64, sigma: f64) -> GaussianInstance {
        GaussianInstance::new(
            dm(1, 1, &[sigma]),
            vec![dm(1, 1, &[a])],
            vec![dm(1, 1, &[n])],
            vec![c],
        )
        .unwrap()
    }

    #[test]
    fn entropy_basics() {
        let h = gaussian_entropy(&dm(1, 1, &[1.0])).unwrap().expect_finite("f");
        assert_abs_diff_eq!(h, 0.5 * LN_2PE, epsilon = 1e-12);
        assert!((h - 1.4189385332).abs() < 1e-9);

        // Scaling: h(s·cov) = h(cov) + (k/2) ln s.
        let base = gaussian_entropy(&dm(2, 2, &[1.0, 0.2, 0.2, 0.7])).unwrap().expect_finite("f");
        let scaled = gaussian_entropy(&dm(2, 2, &[3.0, 0.6, 0.6, 2.1])).unwrap().expect_finite("f");
        assert_abs_diff_eq!(scaled, base + 3.0f64.ln(), epsilon = 1e-10);

        // 2×2 diagonal [1, 4].
        let h2 = gaussian_entropy(&dm(2, 2, &[1.0, 0.0, 0.0, 4.0])).unwrap().expect_finite("f");
        assert_abs_diff_eq!(h2, 0.5 * (2.0 * LN_2PE + 4.0f64.ln()), epsilon = 1e-12);

        // Singular → −∞; asymmetric → error.
        assert_eq!(
            gaussian_entropy(&dm(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap(),
            ExtReal::NegInf
        );
        assert!(gaussian_entropy(&dm(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    }

    #[test]
    fn scalar_f_matches_grid_oracle() {
        // c = 1, A = 1, N = σ²: f(S) = ½ ln(S/(S+σ²)) is increasing, so
        // the optimum sits at S = M.
        let inst = scalar_instance(1.0, 1.0, 0.25, 1.0);
        let m = dm(1, 1, &[1.0]);
        let res = gaussian_f(&m, &inst).unwrap();
        let ours = res.value.expect_finite("finite");
        assert_abs_diff_eq!(ours, 0.5 * (1.0f64 / 1.25).ln(), epsilon = 1e-9);

        let mut grid_best = f64::NEG_INFINITY;
        let mut s: f64 = 1e-4;
        while s <= 1.0 + 1e-12 {
            let v = 0.5 * (LN_2PE + s.ln()) - 0.5 * (LN_2PE + (s + 0.25).ln());
            grid_best = grid_best.max(v);
            s += 1e-4;
        }
        assert!((ours - grid_best).abs() <= 1e-6, "{ours} vs {grid_best}");
        let s_star = res.optimal_cov.unwrap()[(0, 0)];
        assert_abs_diff_eq!(s_star, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn f_monotone_in_cap() {
        let inst = scalar_instance(1.0, 1.0, 0.5, 1.0);
        let f_small = gaussian_f(&dm(1, 1, &[0.5]), &inst).unwrap().value.to_f64();
        let f_large = gaussian_f(&dm(1, 1, &[1.0]), &inst).unwrap().value.to_f64();
        assert!(f_small <= f_large + 1e-10);

        // 2-d PSD ordering.
        let inst2 = GaussianInstance::omniscient(
            dm(2, 2, &[1.0, 0.4, 0.4, 1.0]),
            &[1, 1],
            vec![0.6, 0.7],
        )
        .unwrap();
        let m1 = dm(2, 2, &[0.8, 0.3, 0.3, 0.9]);
        let m2 = dm(2, 2, &[1.0, 0.4, 0.4, 1.2]);
        let f1 = gaussian_f(&m1, &inst2).unwrap().value.to_f64();
        let f2 = gaussian_f(&m2, &inst2).unwrap().value.to_f64();
        assert!(f1 <= f2 + 1e-8, "{f1} > {f2}");
    }

    #[test]
    fn scaling_identity_block_structure() {
        // X = Y^m with scalar blocks: F((1+ε)Σ) − F(Σ) = (ln(1+ε)/2)(m − Σc).
        let sigma = dm(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let weights = vec![0.6, 0.7];
        let inst = GaussianInstance::omniscient(sigma.clone(), &[1, 1], weights.clone()).unwrap();
        let c_sum: f64 = weights.iter().sum();
        for eps in [0.01, 0.1] {
            let f0 = gaussian_f(&sigma, &inst).unwrap().value.expect_finite("f");
            let f1 = gaussian_f(&(&sigma * (1.0 + eps)), &inst)
                .unwrap()
                .value
                .expect_finite("f");
            assert_abs_diff_eq!(
                f1 - f0,
                0.5 * (1.0 + eps).ln() * (2.0 - c_sum),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn weight_sum_above_m_diverges() {
        // Noiseless identity observation with c > 1: +∞.
        let inst = GaussianInstance::new(
            dm(1, 1, &[1.0]),
            vec![dm(1, 1, &[1.0])],
            vec![dm(1, 1, &[0.0])],
            vec![1.5],
        )
        .unwrap();
        let res = gaussian_f(&dm(1, 1, &[1.0]), &inst).unwrap();
        assert_eq!(res.value, ExtReal::PosInf);
        assert!(res.diverged_reason.is_some());

        // Omniscient with Σ c_j > m.
        let inst2 = GaussianInstance::omniscient(
            dm(2, 2, &[1.0, 0.3, 0.3, 1.0]),
            &[1, 1],
            vec![1.2, 1.3],
        )
        .unwrap();
        assert_eq!(gaussian_dstar(&inst2).unwrap(), ExtReal::PosInf);

        // Anisotropic divergence: only one block carries excess weight.
        let inst3 = GaussianInstance::omniscient(
            dm(2, 2, &[1.0, 0.2, 0.2, 1.0]),
            &[1, 1],
            vec![1.5, 0.3],
        )
        .unwrap();
        let res3 = gaussian_f(&dm(2, 2, &[1.0, 0.2, 0.2, 1.0]), &inst3).unwrap();
        assert_eq!(res3.value, ExtReal::PosInf, "block-wise unbounded case");
    }

    #[test]
    fn dstar_zero_for_unit_weight() {
        for (a, n, sigma) in [(1.0, 1.0, 1.0), (0.7, 0.3, 2.0), (2.0, 0.8, 0.5)] {
            let inst = scalar_instance(1.0, a, n, sigma);
            let d = gaussian_dstar(&inst).unwrap().expect_finite("f");
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn dstar_matches_correlation_grid_oracle() {
        // Scalar c = 0.5, A = 1, N = 1, Σ = 1: brute force over jointly
        // Gaussian U via the correlation ρ between U and X:
        // c I(U;Y) − I(U;X) = −(c/2) ln(1 − ρ²/2) + ½ ln(1 − ρ²).
        let inst = scalar_instance(0.5, 1.0, 1.0, 1.0);
        let ours = gaussian_dstar(&inst).unwrap().expect_finite("f");
        let mut oracle = f64::NEG_INFINITY;
        let mut rho = 0.0;
        while rho < 0.999 {
            let v = -0.25 * (1.0 - rho * rho / 2.0f64).ln() + 0.5 * (1.0 - rho * rho).ln();
            oracle = oracle.max(v);
            rho += 1e-4;
        }
        assert_abs_diff_eq!(ours, oracle, epsilon = 1e-6);
    }

    #[test]
    fn gaussian_c_plug_in() {
        // m = 1, c = 1, A = I, N = 1, Σ = 1: C = ½ ln 2.
        let inst = scalar_instance(1.0, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(gaussian_c(&inst).unwrap(), 0.5 * 2.0f64.ln(), epsilon = 1e-10);

        // Recomputation through entropy calls.
        let sigma = dm(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let inst2 = GaussianInstance::new(
            sigma.clone(),
            vec![DMatrix::identity(2, 2), dm(1, 2, &[1.0, -1.0])],
            vec![DMatrix::identity(2, 2) * 0.5, dm(1, 1, &[0.2])],
            vec![1.0, 0.8],
        )
        .unwrap();
        let expect = gaussian_entropy(&inst2.output_cov(0, &sigma)).unwrap().expect_finite("f")
            + 0.8 * gaussian_entropy(&inst2.output_cov(1, &sigma)).unwrap().expect_finite("f")
            - gaussian_entropy(&sigma).unwrap().expect_finite("f");
        assert_abs_diff_eq!(gaussian_c(&inst2).unwrap(), expect, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_c_scaling() {
        // Σ ← sΣ, N ← sN shifts C by (Σ c_j k_j − k)(ln s)/2.
        let inst = scalar_instance(0.7, 1.3, 0.4, 1.1);
        let s = 2.5;
        let scaled = GaussianInstance::new(
            inst.sigma() * s,
            vec![inst.map(0).clone()],
            vec![inst.noise_cov(0) * s],
            vec![0.7],
        )
        .unwrap();
        let shift = (0.7 - 1.0) * 0.5 * s.ln();
        assert_abs_diff_eq!(
            gaussian_c(&scaled).unwrap(),
            gaussian_c(&inst).unwrap() + shift,
            epsilon = 1e-10
        );
    }

    #[test]
    fn variance_matching_references_is_zero() {
        // m = 1, c = 1, Y = X: the statistic is (c−1)·ı ≡ 0.
        let inst = GaussianInstance::omniscient(dm(1, 1, &[1.7]), &[1], vec![1.0]).unwrap();
        assert_abs_diff_eq!(variance_v(&inst).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_block_additivity() {
        // Independent blocks: V(joint) = V(block 1) + V(block 2).
        let b1 = GaussianInstance::omniscient(dm(1, 1, &[1.0]), &[1], vec![2.0]).unwrap();
        let b2 = GaussianInstance::omniscient(dm(1, 1, &[3.0]), &[1], vec![0.5]).unwrap();
        let joint = GaussianInstance::omniscient(
            dm(2, 2, &[1.0, 0.0, 0.0, 3.0]),
            &[1, 1],
            vec![2.0, 0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(
            variance_v(&joint).unwrap(),
            variance_v(&b1).unwrap() + variance_v(&b2).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn variance_monte_carlo_oracle() {
        // Scalar standard Gaussian, single output Y = X, c = 2:
        // Z = 2 ln q(X) − ln q(X) = ln q(X); V = Var(−X²/2 + const) = ½.
        let inst = GaussianInstance::omniscient(dm(1, 1, &[1.0]), &[1], vec![2.0]).unwrap();
        let v = variance_v(&inst).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);

        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let batches = 100;
        let per = 10_000;
        let mut batch_vars = Vec::with_capacity(batches);
        for _ in 0..batches {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..per {
                let x: f64 = rng.sample(StandardNormal);
                let z = -0.5 * x * x; // statistic up to an additive constant
                sum += z;
                sum2 += z * z;
            }
            let mean = sum / per as f64;
            batch_vars.push(sum2 / per as f64 - mean * mean);
        }
        let mc: f64 = batch_vars.iter().sum::<f64>() / batches as f64;
        let sd = (batch_vars
            .iter()
            .map(|b| (b - mc) * (b - mc))
            .sum::<f64>()
            / (batches - 1) as f64)
            .sqrt()
            / (batches as f64).sqrt();
        assert!((mc - v).abs() <= 3.0 * sd, "MC {mc} vs closed form {v} (se {sd})");
    }

    #[test]
    fn variance_monte_carlo_noisy_channel() {
        // Nontrivial joint case: Y = X + Z with noise; cross-check the
        // quadratic-form formula by simulation.
        let inst = GaussianInstance::new(
            dm(1, 1, &[1.0]),
            vec![dm(1, 1, &[1.0])],
            vec![dm(1, 1, &[0.5])],
            vec![1.7],
        )
        .unwrap();
        let v = variance_v(&inst).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(100);
        let batches = 80;
        let per = 10_000;
        let c = 1.7;
        let cy = 1.5; // Var Y
        let mut batch_vars = Vec::with_capacity(batches);
        for _ in 0..batches {
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..per {
                let x: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5f64.sqrt();
                let y = x + z;
                let stat = c * (-0.5 * y * y / cy) - (-0.5 * x * x);
                sum += stat;
                sum2 += stat * stat;
            }
            let mean = sum / per as f64;
            batch_vars.push(sum2 / per as f64 - mean * mean);
        }
        let mc: f64 = batch_vars.iter().sum::<f64>() / batches as f64;
        let sd = (batch_vars
            .iter()
            .map(|b| (b - mc) * (b - mc))
            .sum::<f64>()
            / (batches - 1) as f64)
            .sqrt()
            / (batches as f64).sqrt();
        assert!((mc - v).abs() <= 3.0 * sd, "MC {mc} vs closed form {v} (se {sd})");
    }

    #[test]
    fn instance_validation() {
        assert!(GaussianInstance::new(
            dm(2, 2, &[1.0, 2.0, 2.0, 1.0]), // indefinite
            vec![DMatrix::identity(2, 2)],
            vec![DMatrix::identity(2, 2)],
            vec![1.0],
        )
        .is_err());
        assert!(GaussianInstance::new(
            dm(1, 1, &[1.0]),
            vec![dm(1, 1, &[1.0])],
            vec![dm(1, 1, &[-0.5])], // negative noise
            vec![1.0],
        )
        .is_err());
        assert!(GaussianInstance::new(
            dm(1, 1, &[1.0]),
            vec![dm(1, 1, &[0.0])], // degenerate output, zero noise
            vec![dm(1, 1, &[0.0])],
            vec![1.0],
        )
        .is_err());
    }
}
