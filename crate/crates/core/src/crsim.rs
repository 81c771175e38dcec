//! Exhaustively evaluable omniscient-helper CR-generation schemes.
//!
//! The source emits tuples `(y_1, …, y_m)`; the helper observes the full
//! tuple sequence `x^n = (y^n_1, …, y^n_m)`, computes an integer `K` and
//! messages `W_j`, and terminal `j` decodes `K_j` from `(y_j^n, W_j)`.
//! Encoders and decoders are explicit conditional tables (stochastic
//! maps; deterministic schemes are point-mass rows), so every metric is
//! an exact finite sum — no sampling anywhere.
//!
//! `converse_certificate` checks a scheme's exact TV-to-ideal metric
//! against the omniscient-helper single-shot bound instantiated with a
//! constant produced by the `gbll` or `smoothing` modules; the verdict
//! must be SOUND for any correct bound instantiation.

use crate::bounds::{omni_bound, SchemeSizes};
use crate::ext_real::ExtReal;
use crate::measures::{Channel, FiniteMeasure, GbllInstance};
use crate::{check_dims, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Enumeration budget for exact scheme evaluation:
/// `#sequences × |K| × Π|W_j|`.
pub const SCHEME_ENUMERATION_CAP: u128 = 10_000_000;

/// A joint source over `Y_1 × … × Y_m`, stored as one probability
/// vector over the product alphabet (terminal 0 on the slow axis).
#[derive(Clone, Debug)]
pub struct JointSource {
    terminal_sizes: Vec<usize>,
    probs: FiniteMeasure,
}

impl JointSource {
    pub fn new(terminal_sizes: Vec<usize>, probs: FiniteMeasure) -> Result<Self> {
        if terminal_sizes.is_empty() || terminal_sizes.iter().any(|s| *s == 0) {
            return Err(Error::InvalidInstance("terminal sizes must be ≥ 1".into()));
        }
        let product: usize = terminal_sizes.iter().product();
        check_dims(probs.alphabet_size(), product, "joint source size")?;
        if !probs.is_probability() {
            return Err(Error::InvalidMeasure("source must be a probability".into()));
        }
        Ok(Self {
            terminal_sizes,
            probs,
        })
    }

    /// Doubly symmetric binary source: uniform `Y_1`, `Y_2` its BSC(p)
    /// corruption.
    pub fn dsbs(p: f64) -> Self {
        let q = vec![
            (1.0 - p) / 2.0,
            p / 2.0,
            p / 2.0,
            (1.0 - p) / 2.0,
        ];
        Self {
            terminal_sizes: vec![2, 2],
            probs: FiniteMeasure::new(q).expect("valid DSBS"),
        }
    }

    pub fn m(&self) -> usize {
        self.terminal_sizes.len()
    }

    pub fn terminal_sizes(&self) -> &[usize] {
        &self.terminal_sizes
    }

    pub fn symbol_size(&self) -> usize {
        self.terminal_sizes.iter().product()
    }

    pub fn probs(&self) -> &FiniteMeasure {
        &self.probs
    }

    /// Coordinate `j` of a product-alphabet symbol.
    pub fn component(&self, symbol: usize, j: usize) -> usize {
        let mut idx = symbol;
        for jj in (0..self.m()).rev() {
            let s = self.terminal_sizes[jj];
            if jj == j {
                return idx % s;
            }
            idx /= s;
        }
        unreachable!("j < m");
    }

    /// Deterministic channel projecting the joint symbol onto terminal
    /// `j`'s coordinate.
    pub fn projection_channel(&self, j: usize) -> Channel {
        let rows = (0..self.symbol_size())
            .map(|x| {
                let mut row = vec![0.0; self.terminal_sizes[j]];
                row[self.component(x, j)] = 1.0;
                row
            })
            .collect();
        Channel::new(rows).expect("deterministic rows")
    }

    /// The source-matched GBLL instance of the omniscient problem:
    /// `μ = Q_{Y^m}`, channels the coordinate projections,
    /// `ν_j = Q_{Y_j}`.
    pub fn gbll_instance(&self, weights: &[f64]) -> Result<GbllInstance> {
        check_dims(weights.len(), self.m(), "weights per terminal")?;
        let channels: Vec<Channel> = (0..self.m()).map(|j| self.projection_channel(j)).collect();
        GbllInstance::from_source(self.probs.clone(), channels, weights.to_vec())
    }
}

/// Digits of a sequence index, base `k`, most significant first.
fn digits(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for slot in (0..n).rev() {
        d[slot] = idx % k;
        idx /= k;
    }
    d
}

/// A blocklength-`n` omniscient-helper scheme with explicit conditional
/// tables.
#[derive(Clone, Debug)]
pub struct CrScheme {
    pub n: usize,
    pub source: JointSource,
    pub k_size: usize,
    pub w_sizes: Vec<usize>,
    /// Row `x^n` (sequence index), column `k · Π|W_l| + w_joint`, where
    /// `w_joint` is mixed-radix over the messages (`W_1` slowest).
    encoder: Vec<Vec<f64>>,
    /// Per terminal: row `y_j^n · |W_j| + w_j`, column `k_j`.
    decoders: Vec<Vec<Vec<f64>>>,
}

fn check_rows(table: &[Vec<f64>], cols: usize, what: &str) -> Result<()> {
    for (i, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidInstance(format!("{what} row {i} has wrong width")));
        }
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInstance(format!(
                "{what} row {i} has a negative entry"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInstance(format!(
                "{what} row {i} sums to {s}"
            )));
        }
    }
    Ok(())
}

impl CrScheme {
    pub fn new(
        n: usize,
        source: JointSource,
        k_size: usize,
        w_sizes: Vec<usize>,
        encoder: Vec<Vec<f64>>,
        decoders: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if n == 0 || k_size == 0 || w_sizes.iter().any(|w| *w == 0) {
            return Err(Error::InvalidInstance("sizes must be ≥ 1".into()));
        }
        check_dims(w_sizes.len(), source.m(), "messages per terminal")?;
        check_dims(decoders.len(), source.m(), "decoders per terminal")?;
        let seqs = (source.symbol_size() as u128).pow(n as u32);
        let combos: u128 = k_size as u128 * w_sizes.iter().map(|&w| w as u128).product::<u128>();
        if seqs * combos > SCHEME_ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                needed: seqs * combos,
                cap: SCHEME_ENUMERATION_CAP,
            });
        }
        let seqs = seqs as usize;
        check_dims(encoder.len(), seqs, "encoder rows")?;
        check_rows(&encoder, combos as usize, "encoder")?;
        for (j, dec) in decoders.iter().enumerate() {
            let y_seqs = source.terminal_sizes[j].pow(n as u32);
            check_dims(dec.len(), y_seqs * w_sizes[j], "decoder rows")?;
            check_rows(dec, k_size, "decoder")?;
        }
        Ok(Self {
            n,
            source,
            k_size,
            w_sizes,
            encoder,
            decoders,
        })
    }

    pub fn sizes(&self) -> SchemeSizes {
        SchemeSizes::new(
            self.k_size as u64,
            self.w_sizes.iter().map(|&w| w as u64).collect(),
        )
        .expect("validated sizes")
    }

    /// Sequence index of terminal `j`'s observation for source sequence
    /// `x_seq`.
    fn y_seq(&self, x_seq: usize, j: usize) -> usize {
        let sym = self.source.symbol_size();
        let mut out = 0;
        for &x in &digits(x_seq, sym, self.n) {
            out = out * self.source.terminal_sizes[j] + self.source.component(x, j);
        }
        out
    }

    /// Probability of source sequence `x_seq` under `Q^{⊗n}`.
    fn seq_prob(&self, x_seq: usize) -> f64 {
        digits(x_seq, self.source.symbol_size(), self.n)
            .into_iter()
            .map(|x| self.source.probs.weight(x))
            .product()
    }

    fn w_joint_parts(&self, mut w_joint: usize) -> Vec<usize> {
        let mut parts = vec![0; self.w_sizes.len()];
        for j in (0..self.w_sizes.len()).rev() {
            parts[j] = w_joint % self.w_sizes[j];
            w_joint /= self.w_sizes[j];
        }
        parts
    }

    /// Returns a copy whose decoder rows are mixed with random
    /// distributions: `(1−eps)·row + eps·random`.
    pub fn perturb_decoders(&self, eps: f64, seed: u64) -> CrScheme {
        assert!((0.0..=1.0).contains(&eps));
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for dec in out.decoders.iter_mut() {
            for row in dec.iter_mut() {
                let mut noise: Vec<f64> = (0..row.len())
                    .map(|_| -rng.random::<f64>().ln())
                    .collect();
                let s: f64 = noise.iter().sum();
                noise.iter_mut().for_each(|v| *v /= s);
                for (r, nz) in row.iter_mut().zip(noise) {
                    *r = (1.0 - eps) * *r + eps * nz;
                }
            }
        }
        out
    }
}

/// Exact performance metrics of a scheme.
#[derive(Clone, Debug)]
pub struct SchemeEvaluation {
    /// `ℙ[K = K_1 = … = K_m]` (helper key included).
    pub p_agree: f64,
    /// `ℙ[K_1 = … = K_m]` (decoders only).
    pub p_agree_decoders: f64,
    /// `½ |Q_{K^m} − T_{K^m}|` with `T_{K^m}(k^m) = 1{k_1=…=k_m}/|K|`,
    /// over the decoder outputs.
    pub tv_to_ideal: f64,
    /// One-communicator metric `δ_1 = 1 − ℙ[K_1 = … = K_m]`, taking the
    /// helper's key as `K := K_1` per the metric-translation remark.
    pub one_comm_delta1: f64,
    /// One-communicator metric `δ_2 = ½|Q_{K_1} − T_K|`.
    pub one_comm_delta2: f64,
    /// Joint law of `(K_1, …, K_m)`, row-major with `K_1` slowest.
    pub joint_k_dist: Vec<f64>,
}

/// Evaluates a scheme by exact summation over all outcomes.
pub fn evaluate_scheme(scheme: &CrScheme) -> Result<SchemeEvaluation> {
    let m = scheme.source.m();
    let k = scheme.k_size;
    let joint_size = k.checked_pow(m as u32).ok_or(Error::EnumerationCap {
        needed: u128::MAX,
        cap: SCHEME_ENUMERATION_CAP,
    })?;
    let mut joint = vec![0.0; joint_size];
    let mut p_agree = 0.0;

    let seqs = scheme.encoder.len();
    let combos = scheme.encoder[0].len();
    for x_seq in 0..seqs {
        let px = scheme.seq_prob(x_seq);
        if px == 0.0 {
            continue;
        }
        let y_seqs: Vec<usize> = (0..m).map(|j| scheme.y_seq(x_seq, j)).collect();
        for col in 0..combos {
            let pe = scheme.encoder[x_seq][col];
            if pe == 0.0 {
                continue;
            }
            let weight = px * pe;
            let k_enc = col / scheme.w_sizes.iter().product::<usize>();
            let w_parts = scheme.w_joint_parts(col % scheme.w_sizes.iter().product::<usize>());
            let rows: Vec<&[f64]> = (0..m)
                .map(|j| {
                    scheme.decoders[j][y_seqs[j] * scheme.w_sizes[j] + w_parts[j]].as_slice()
                })
                .collect();
            // Joint over decoder keys is the product across terminals.
            for (tuple, slot) in joint.iter_mut().enumerate() {
                let mut prob = weight;
                let mut t = tuple;
                for row in rows.iter().rev() {
                    prob *= row[t % k];
                    if prob == 0.0 {
                        break;
                    }
                    t /= k;
                }
                *slot += prob;
            }
            let mut agree_all = weight;
            for row in &rows {
                agree_all *= row[k_enc];
            }
            p_agree += agree_all;
        }
    }

    let all_equal = |tuple: usize| -> bool {
        let mut t = tuple;
        let first = t % k;
        for _ in 0..m {
            if t % k != first {
                return false;
            }
            t /= k;
        }
        true
    };
    let mut p_agree_decoders = 0.0;
    let mut tv = 0.0;
    for (tuple, &prob) in joint.iter().enumerate() {
        if all_equal(tuple) {
            p_agree_decoders += prob;
            tv += (prob - 1.0 / k as f64).abs();
        } else {
            tv += prob;
        }
    }
    tv *= 0.5;

    // Marginal of K_1 (slowest axis).
    let block = joint_size / k;
    let mut k1_marginal = vec![0.0; k];
    for (tuple, &prob) in joint.iter().enumerate() {
        k1_marginal[tuple / block] += prob;
    }
    let delta2 = 0.5
        * k1_marginal
            .iter()
            .map(|p| (p - 1.0 / k as f64).abs())
            .sum::<f64>();

    Ok(SchemeEvaluation {
        p_agree,
        p_agree_decoders,
        tv_to_ideal: tv,
        one_comm_delta1: 1.0 - p_agree_decoders,
        one_comm_delta2: delta2,
        joint_k_dist: joint,
    })
}

/// Random-binning scheme: `K` and each `W_j` are uniform labelings of
/// the source sequences (the identity labeling when the message alphabet
/// can index them exactly), and decoder `j` maps `(y_j^n, w_j)` to the
/// key of the maximum-probability consistent sequence.
pub fn random_binning_scheme(
    source: &JointSource,
    n: usize,
    k_size: usize,
    w_sizes: &[usize],
    seed: u64,
) -> Result<CrScheme> {
    if n == 0 || k_size == 0 || w_sizes.iter().any(|w| *w == 0) {
        return Err(Error::InvalidParameter("sizes must be ≥ 1".into()));
    }
    check_dims(w_sizes.len(), source.m(), "messages per terminal")?;
    let sym = source.symbol_size();
    let seqs_u = (sym as u128).pow(n as u32);
    let combos: u128 = k_size as u128 * w_sizes.iter().map(|&w| w as u128).product::<u128>();
    if seqs_u * combos > SCHEME_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            needed: seqs_u * combos,
            cap: SCHEME_ENUMERATION_CAP,
        });
    }
    let seqs = seqs_u as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let k_label: Vec<usize> = (0..seqs).map(|_| rng.random_range(0..k_size)).collect();
    let w_labels: Vec<Vec<usize>> = w_sizes
        .iter()
        .map(|&w| {
            if w >= seqs {
                (0..seqs).collect()
            } else {
                (0..seqs).map(|_| rng.random_range(0..w)).collect()
            }
        })
        .collect();

    let w_prod: usize = w_sizes.iter().product();
    let encoder: Vec<Vec<f64>> = (0..seqs)
        .map(|x| {
            let mut row = vec![0.0; k_size * w_prod];
            let mut w_joint = 0;
            for j in 0..source.m() {
                w_joint = w_joint * w_sizes[j] + w_labels[j][x];
            }
            row[k_label[x] * w_prod + w_joint] = 1.0;
            row
        })
        .collect();

    let seq_prob = |x_seq: usize| -> f64 {
        digits(x_seq, sym, n)
            .into_iter()
            .map(|x| source.probs.weight(x))
            .product()
    };
    let mut decoders = Vec::with_capacity(source.m());
    for j in 0..source.m() {
        let ty = source.terminal_sizes[j];
        let y_seqs = ty.pow(n as u32);
        // Invert the projection once: sequences consistent with each y^n.
        let mut consistent: Vec<Vec<usize>> = vec![Vec::new(); y_seqs];
        for x_seq in 0..seqs {
            let mut y = 0;
            for &x in &digits(x_seq, sym, n) {
                y = y * ty + source.component(x, j);
            }
            consistent[y].push(x_seq);
        }
        let mut table = vec![vec![0.0; k_size]; y_seqs * w_sizes[j]];
        for (y, xs) in consistent.iter().enumerate() {
            for w in 0..w_sizes[j] {
                let mut best: Option<(f64, usize)> = None;
                for &x_seq in xs {
                    if w_labels[j][x_seq] != w {
                        continue;
                    }
                    let p = seq_prob(x_seq);
                    let better = match best {
                        None => true,
                        Some((bp, _)) => p > bp,
                    };
                    if better {
                        best = Some((p, x_seq));
                    }
                }
                let guess = best.map_or(0, |(_, x_seq)| k_label[x_seq]);
                table[y * w_sizes[j] + w][guess] = 1.0;
            }
        }
        decoders.push(table);
    }

    CrScheme::new(n, source.clone(), k_size, w_sizes.to_vec(), encoder, decoders)
}

/// A converse-soundness check record.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    /// The omniscient-helper bound instantiated at `(d, δ)`; `−∞` when
    /// `d = +∞`.
    pub bound: ExtReal,
    pub actual_tv: f64,
    pub d_used: ExtReal,
    pub delta_used: f64,
    /// `actual_tv ≥ bound − 1e-9`: the theorem's prediction holds.
    pub sound: bool,
    /// Bound is nonpositive, so the verdict is trivially sound.
    pub vacuous: bool,
}

/// Certifies a scheme against the omniscient-helper single-shot bound.
///
/// `d_value` must upper-bound `d(μ, Q_{Y_j}, c^m)` for some `μ` with
/// `E_1(Q_{Y^m}^{⊗n}‖μ) ≤ delta`; `(n·d(Q), 0)` from the plain constant
/// and `(value, δ)` from the smoothing module are both valid.
pub fn converse_certificate(
    scheme: &CrScheme,
    weights: &[f64],
    d_value: ExtReal,
    delta: f64,
) -> Result<CertificateReport> {
    check_dims(weights.len(), scheme.source.m(), "weights per terminal")?;
    let eval = evaluate_scheme(scheme)?;
    let bound = match d_value {
        ExtReal::Finite(d) => ExtReal::Finite(omni_bound(&scheme.sizes(), weights, d, delta)),
        ExtReal::PosInf => ExtReal::NegInf,
        ExtReal::NegInf => {
            return Err(Error::InvalidParameter("d must not be −∞".into()));
        }
    };
    let (sound, vacuous) = match bound {
        ExtReal::Finite(b) => (eval.tv_to_ideal >= b - 1e-9, b <= 0.0),
        _ => (true, true),
    };
    Ok(CertificateReport {
        bound,
        actual_tv: eval.tv_to_ideal,
        d_used: d_value,
        delta_used: delta,
        sound,
        vacuous,
    })
}
