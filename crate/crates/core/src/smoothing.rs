//! The δ-smooth GBLL constant and typical-set restrictions.
//!
//! `smooth_constant` approximates
//! `d_δ(Q_X, ν_j, c^m) = inf { d(μ, ν_j, c^m) : E_1(Q_X‖μ) ≤ δ }`.
//! The outer infimum runs over pointwise mass-cut measures
//! `μ = s ⊙ Q_X`, `s ∈ [0,1]^{|X|}`: `E_1` only charges mass deficit,
//! and `d(μ)` is monotone nondecreasing in `μ` pointwise, so any `μ`
//! with `μ(x) > Q_X(x)` somewhere can be projected down to `μ ∧ Q_X`
//! without raising the inner constant or the `E_1` cost. An optional
//! inflation mode (`s` up to `s_max`) is exposed anyway; whether the
//! best measure found ever inflates is reported.
//!
//! Small supports are searched exhaustively over binary cut patterns and
//! then refined coordinate-wise in `[0,1]`; larger supports fall back to
//! greedy cutting ordered by each point's contribution to the inner
//! maximizer's objective, followed by swap-based local search.

use crate::ext_real::ExtReal;
use crate::gbll::{gbll_constant, GbllResult, OptimizerOptions};
use crate::measures::{push_forward, Channel, FiniteMeasure, GbllInstance};
use crate::envelope::{self, CostFunction};
use crate::{check_dims, Error, Result};

/// Hard cap on exact sequence enumeration.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Options for the outer minimization.
#[derive(Clone, Debug)]
pub struct SmoothOptions {
    /// Allow `s(x) > 1` (costs nothing in `E_1`; never helps, reported).
    pub allow_inflation: bool,
    pub s_max: f64,
    /// Support size up to which cut patterns are enumerated exhaustively.
    pub exhaustive_cap: usize,
    /// Run the continuous refinement pass after the discrete search.
    pub refine: bool,
    /// Inner best-constant optimizer settings.
    pub inner: OptimizerOptions,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            allow_inflation: false,
            s_max: 10.0,
            exhaustive_cap: 20,
            refine: true,
            inner: OptimizerOptions::default(),
        }
    }
}

/// Outcome of a smooth-constant computation.
#[derive(Clone, Debug)]
pub struct SmoothResult {
    /// `d(smoothing_measure, ν_j, c^m)`, the best inner value found.
    pub value: ExtReal,
    /// The minimizing measure `s ⊙ Q_X` (unnormalized).
    pub smoothing_measure: FiniteMeasure,
    /// `E_1(Q_X‖smoothing_measure)` actually spent (≤ δ).
    pub e1_used: f64,
    /// Full inner optimizer result at the minimizing measure.
    pub inner: GbllResult,
    /// True iff the reported optimum uses `s(x) > 1` somewhere.
    pub used_inflation: bool,
}

fn e1_cost(q_x: &FiniteMeasure, s: &[f64]) -> f64 {
    (0..q_x.alphabet_size())
        .map(|x| q_x.weight(x) * (1.0 - s[x]).max(0.0))
        .sum()
}

struct InnerEval<'a> {
    q_x: &'a FiniteMeasure,
    channels: &'a [Channel],
    nus: &'a [FiniteMeasure],
    weights: &'a [f64],
    opts: OptimizerOptions,
    warm: Option<FiniteMeasure>,
}

impl<'a> InnerEval<'a> {
    /// Inner best constant for μ = s ⊙ Q_X; `None` when `s` zeroes out
    /// all of `Q_X`.
    fn eval(&mut self, s: &[f64], restarts: usize) -> Option<GbllResult> {
        let w: Vec<f64> = (0..self.q_x.alphabet_size())
            .map(|x| self.q_x.weight(x) * s[x])
            .collect();
        let mu = FiniteMeasure::new(w).ok()?;
        let inst = GbllInstance::new(
            mu,
            self.channels.to_vec(),
            self.nus.to_vec(),
            self.weights.to_vec(),
        )
        .ok()?;
        let mut opts = self.opts.clone().with_restarts(restarts);
        if let Some(warm) = &self.warm {
            opts.warm_starts.push(warm.clone());
        }
        let res = gbll_constant(&inst, &opts);
        if !res.diverged {
            self.warm = Some(res.maximizer.clone());
        }
        Some(res)
    }
}

/// Computes the δ-smooth constant.
///
/// `ν_j` are arbitrary reference measures (pass the push-forwards of
/// `Q_X` for the source-matched configuration). Returns the lowest inner
/// constant found together with the minimizing measure.
pub fn smooth_constant(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    nus: &[FiniteMeasure],
    weights: &[f64],
    delta: f64,
    opts: &SmoothOptions,
) -> Result<SmoothResult> {
    if !q_x.is_probability() {
        return Err(Error::InvalidMeasure("Q_X must be a probability".into()));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "δ must lie in [0,1), got {delta}"
        )));
    }
    check_dims(channels.len(), nus.len(), "smooth channels vs nus")?;
    check_dims(channels.len(), weights.len(), "smooth channels vs weights")?;

    let k = q_x.alphabet_size();
    let ones = vec![1.0; k];
    let mut inner = InnerEval {
        q_x,
        channels,
        nus,
        weights,
        opts: opts.inner.clone(),
        warm: None,
    };

    // Candidate scans run with a light budget (warm starts carry the
    // inner maximizer along); only the leaders are re-verified at the
    // caller's full settings.
    let full_restarts = opts.inner.restarts;
    let scan_restarts = (full_restarts / 8).clamp(2, 8);

    let finalize = |s: Vec<f64>, res: GbllResult, q_x: &FiniteMeasure| -> SmoothResult {
        let w: Vec<f64> = (0..k).map(|x| q_x.weight(x) * s[x]).collect();
        SmoothResult {
            value: res.constant,
            e1_used: e1_cost(q_x, &s),
            smoothing_measure: FiniteMeasure::new(w).expect("nonzero measure"),
            inner: res,
            used_inflation: s.iter().any(|v| *v > 1.0 + 1e-12),
        }
    };

    // δ = 0: within the mass-cut family the ball is the single point Q_X.
    if delta == 0.0 {
        let res = inner.eval(&ones, full_restarts).expect("Q_X is valid");
        return Ok(finalize(ones, res, q_x));
    }

    let support = q_x.support();
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new(); // (s, value)

    let baseline = inner.eval(&ones, scan_restarts).expect("Q_X is valid");
    candidates.push((ones.clone(), baseline.constant.to_f64()));

    if support.len() <= opts.exhaustive_cap && support.len() <= 25 {
        // Exhaustive over the vertices of the E₁ polytope
        // {s ∈ [0,1]^k : Σ Q(x)(1−s(x)) ≤ δ}: every binary cut pattern
        // within budget, plus one budget-exhausting partial cut on top.
        let n_bits = support.len();
        let mut patterns: Vec<(Vec<f64>, f64)> = Vec::new(); // (s, remaining budget)
        for mask in 0u32..(1u32 << n_bits) {
            let mut s = ones.clone();
            let mut cut_mass = 0.0;
            for (bit, &x) in support.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    s[x] = 0.0;
                    cut_mass += q_x.weight(x);
                }
            }
            if cut_mass > delta + 1e-12 || (mask.count_ones() as usize) == n_bits {
                continue;
            }
            patterns.push((s, delta - cut_mass));
        }
        let mut pattern_vals: Vec<(usize, f64)> = Vec::with_capacity(patterns.len());
        for (idx, (s, _)) in patterns.iter().enumerate() {
            if s.iter().all(|&v| v == 1.0) {
                pattern_vals.push((idx, baseline.constant.to_f64()));
                continue;
            }
            if let Some(res) = inner.eval(s, scan_restarts) {
                let v = res.constant.to_f64();
                candidates.push((s.clone(), v));
                pattern_vals.push((idx, v));
            }
        }
        // Partial-cut vertices. Keep the enumeration bounded by
        // extending only the most promising base patterns when large.
        let mut order: Vec<usize> = pattern_vals.iter().map(|(i, _)| *i).collect();
        if patterns.len() * support.len() > 4096 {
            pattern_vals.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            order = pattern_vals.into_iter().take(40).map(|(i, _)| i).collect();
        }
        for idx in order {
            let (base, remaining) = patterns[idx].clone();
            if remaining <= 1e-15 {
                continue;
            }
            for &x in &support {
                if base[x] == 0.0 || q_x.weight(x) <= remaining + 1e-15 {
                    continue; // full cut of x is itself a pattern
                }
                let mut s = base.clone();
                s[x] = 1.0 - remaining / q_x.weight(x);
                if let Some(res) = inner.eval(&s, scan_restarts) {
                    candidates.push((s, res.constant.to_f64()));
                }
            }
        }
    } else {
        // Greedy cutting ordered by per-point objective contribution;
        // warm starts carry the maximizer along, so a small restart
        // budget suffices during the walk.
        let greedy_restarts = 4;
        let mut s = ones.clone();
        let mut budget = delta;
        let mut current = baseline.clone();
        loop {
            let contrib = point_contributions(q_x, channels, nus, weights, &s, &current);
            let mut cut: Option<usize> = None;
            let mut best_score = f64::NEG_INFINITY;
            for &x in &support {
                if s[x] == 0.0 || q_x.weight(x) > budget + 1e-12 {
                    continue;
                }
                if contrib[x] > best_score {
                    best_score = contrib[x];
                    cut = Some(x);
                }
            }
            let Some(x) = cut else { break };
            let mut cand = s.clone();
            cand[x] = 0.0;
            let Some(res) = inner.eval(&cand, greedy_restarts) else {
                break;
            };
            candidates.push((cand.clone(), res.constant.to_f64()));
            budget -= q_x.weight(x);
            s = cand;
            current = res;
        }
        // Budget-exhausting partial cut on the best remaining point (a
        // vertex of the E₁ polytope has at most one fractional entry).
        if budget > 1e-12 {
            let contrib = point_contributions(q_x, channels, nus, weights, &s, &current);
            let best_partial = support
                .iter()
                .filter(|&&x| s[x] > 0.0 && q_x.weight(x) > budget)
                .max_by(|&&a, &&b| contrib[a].partial_cmp(&contrib[b]).unwrap());
            if let Some(&x) = best_partial {
                let mut cand = s.clone();
                cand[x] = 1.0 - budget / q_x.weight(x);
                if let Some(res) = inner.eval(&cand, greedy_restarts) {
                    candidates.push((cand, res.constant.to_f64()));
                }
            }
        }
        // Swap local search over a contribution-ranked shortlist.
        let (mut best_s, mut best_val) = candidates
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .cloned()
            .unwrap();
        'swap: for _ in 0..2 {
            let spent = e1_cost(q_x, &best_s);
            let mut restores: Vec<usize> = support
                .iter()
                .copied()
                .filter(|&x| best_s[x] == 0.0)
                .collect();
            restores.sort_by(|&a, &b| {
                q_x.weight(b).partial_cmp(&q_x.weight(a)).unwrap()
            });
            restores.truncate(6);
            let base_res = match inner.eval(&best_s, greedy_restarts) {
                Some(r) => r,
                None => break,
            };
            let contrib = point_contributions(q_x, channels, nus, weights, &best_s, &base_res);
            let mut cuts: Vec<usize> = support
                .iter()
                .copied()
                .filter(|&x| best_s[x] > 0.0)
                .collect();
            cuts.sort_by(|&a, &b| contrib[b].partial_cmp(&contrib[a]).unwrap());
            cuts.truncate(6);
            let mut improved = false;
            for &restore in &restores {
                for &cut in &cuts {
                    let new_spent = spent - q_x.weight(restore) + q_x.weight(cut);
                    if new_spent > delta + 1e-12 {
                        continue;
                    }
                    let mut cand = best_s.clone();
                    cand[restore] = 1.0;
                    cand[cut] = 0.0;
                    if let Some(res) = inner.eval(&cand, greedy_restarts) {
                        let v = res.constant.to_f64();
                        candidates.push((cand.clone(), v));
                        if v < best_val - 1e-12 {
                            best_s = cand;
                            best_val = v;
                            improved = true;
                            continue 'swap;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    candidates.truncate(5);

    // Continuous refinement of the leading patterns (coordinate descent
    // across the whole support; affordable only at exhaustive sizes).
    if opts.refine && support.len() <= opts.exhaustive_cap {
        let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
        for (s0, v0) in candidates.iter().take(3).cloned() {
            let mut s = s0;
            let mut value = v0;
            for _pass in 0..2 {
                let mut any = false;
                for &x in &support {
                    let others: f64 = support
                        .iter()
                        .filter(|&&y| y != x)
                        .map(|&y| q_x.weight(y) * (1.0 - s[y]).max(0.0))
                        .sum();
                    let slack = delta - others;
                    if slack < -1e-12 {
                        continue;
                    }
                    let s_min = (1.0 - slack / q_x.weight(x)).max(0.0);
                    for t in [s_min, 0.25, 0.5, 0.75] {
                        if t < s_min - 1e-12 || t > 1.0 || (t - s[x]).abs() < 1e-9 {
                            continue;
                        }
                        let mut cand = s.clone();
                        cand[x] = t;
                        if let Some(res) = inner.eval(&cand, scan_restarts) {
                            let v = res.constant.to_f64();
                            if v < value - 1e-12 {
                                s = cand;
                                value = v;
                                any = true;
                            }
                        }
                    }
                }
                if !any {
                    break;
                }
            }
            refined.push((s, value));
        }
        candidates.extend(refined);
        candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    }

    // Optional inflation probes above the best pattern.
    if opts.allow_inflation {
        let leader = candidates[0].0.clone();
        for factor in [1.5, opts.s_max] {
            let cand: Vec<f64> = leader
                .iter()
                .map(|&v| if v > 0.0 { (v * factor).min(opts.s_max) } else { 0.0 })
                .collect();
            if let Some(res) = inner.eval(&cand, scan_restarts) {
                candidates.push((cand, res.constant.to_f64()));
            }
        }
        candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    }

    // Re-verify the leaders with the full restart budget; more restarts
    // can only raise an inner value, so verified numbers stay honest.
    let mut best: Option<(Vec<f64>, GbllResult)> = None;
    for (s, _) in candidates.into_iter().take(3) {
        if let Some(res) = inner.eval(&s, full_restarts) {
            let better = match &best {
                None => true,
                Some((_, cur)) => res.constant < cur.constant,
            };
            if better {
                best = Some((s, res));
            }
        }
    }
    let (s, res) = best.expect("at least the uncut measure evaluates");
    Ok(finalize(s, res, q_x))
}

/// Per-point contribution of each symbol to the inner maximizer's
/// objective, used to order greedy cuts.
fn point_contributions(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    nus: &[FiniteMeasure],
    weights: &[f64],
    s: &[f64],
    inner: &GbllResult,
) -> Vec<f64> {
    let k = q_x.alphabet_size();
    let p = &inner.maximizer;
    let mut contrib = vec![f64::NEG_INFINITY; k];
    let pushes: Vec<FiniteMeasure> = channels
        .iter()
        .map(|ch| push_forward(p, ch).expect("dims checked"))
        .collect();
    for x in 0..k {
        let px = p.weight(x);
        if px == 0.0 {
            contrib[x] = f64::NEG_INFINITY;
            continue;
        }
        let mut v = 0.0;
        for (j, ch) in channels.iter().enumerate() {
            for y in 0..ch.output_size() {
                let q = ch.prob(x, y);
                if q == 0.0 {
                    continue;
                }
                let ratio = pushes[j].weight(y) / nus[j].weight(y);
                if ratio > 0.0 {
                    v += weights[j] * q * ratio.ln();
                }
            }
        }
        let mux = q_x.weight(x) * s[x];
        if mux > 0.0 {
            v -= (px / mux).ln();
        }
        contrib[x] = px * v;
    }
    contrib
}

/// A product measure restricted to the sequences passing cost and
/// information-density typicality tests.
#[derive(Clone, Debug)]
pub struct TypicalRestriction {
    /// `Q_X^{⊗n}`.
    pub base: FiniteMeasure,
    /// Membership of each sequence index in the kept set.
    pub kept: Vec<bool>,
    /// Exact mass of the kept set under `base`.
    pub retained_mass: f64,
}

impl TypicalRestriction {
    /// The restriction as an (unnormalized) measure: `base` on the kept
    /// set, zero elsewhere.
    pub fn restricted(&self) -> Result<FiniteMeasure> {
        let w: Vec<f64> = (0..self.base.alphabet_size())
            .map(|i| if self.kept[i] { self.base.weight(i) } else { 0.0 })
            .collect();
        FiniteMeasure::new(w)
    }

    /// `E_1(base‖restriction)`, which equals `1 − retained_mass`.
    pub fn e1_to_base(&self) -> Result<f64> {
        crate::measures::e_gamma(&self.base, &self.restricted()?, 1.0)
    }
}

/// Digits of `idx` in base `k`, most significant first.
fn seq_digits(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for slot in (0..n).rev() {
        d[slot] = idx % k;
        idx /= k;
    }
    d
}

/// Builds the restriction of `Q_X^{⊗n}` to the sequences satisfying
/// every per-letter cost budget `(1/n) Σ_i τ_α(x_i) ≤ eps1` and the
/// information-density constraint
/// `(1/n) Σ_i [ ı_{Q_X‖μ}(x_i) − Σ_j c_j E[ı_{Q_{Y_j}‖ν_j}(Y_j)|X=x_i] ] ≤ C + eps2`,
/// where `μ` is counting measure on `X` and `C` is the `Q_X`-mean of the
/// bracketed per-letter quantity.
///
/// Each cost function's own `epsilon` is ignored here; `eps1` plays the
/// shared threshold role.
pub fn typical_restriction(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    nus: &[FiniteMeasure],
    weights: &[f64],
    n: usize,
    eps1: f64,
    eps2: f64,
    costs: &[CostFunction],
) -> Result<TypicalRestriction> {
    if !q_x.is_probability() {
        return Err(Error::InvalidMeasure("Q_X must be a probability".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    check_dims(channels.len(), nus.len(), "typical channels vs nus")?;
    check_dims(channels.len(), weights.len(), "typical channels vs weights")?;
    for cf in costs {
        check_dims(cf.values.len(), q_x.alphabet_size(), "cost length")?;
    }
    let k = q_x.alphabet_size();
    let total = (k as u128).pow(n as u32);
    if total > ENUMERATION_CAP as u128 {
        return Err(Error::EnumerationCap {
            needed: total,
            cap: ENUMERATION_CAP as u128,
        });
    }

    // Per-letter information-density score and its mean C.
    let mut score = vec![f64::NEG_INFINITY; k];
    let mut c_mean = 0.0;
    for x in 0..k {
        let qx = q_x.weight(x);
        if qx == 0.0 {
            continue; // sequences through here carry no mass
        }
        let mut v = qx.ln();
        for (j, ch) in channels.iter().enumerate() {
            let qyj = push_forward(q_x, ch)?;
            for y in 0..ch.output_size() {
                let q = ch.prob(x, y);
                if q == 0.0 {
                    continue;
                }
                v -= weights[j] * q * (qyj.weight(y) / nus[j].weight(y)).ln();
            }
        }
        score[x] = v;
        c_mean += qx * v;
    }

    let base = q_x.tensor_power(n);
    let total = total as usize;
    let mut kept = vec![false; total];
    let mut retained_mass = 0.0;
    'seq: for idx in 0..total {
        if base.weight(idx) == 0.0 {
            continue;
        }
        let digits = seq_digits(idx, k, n);
        for cf in costs {
            let mut sum = 0.0;
            for &x in &digits {
                let t = cf.values[x];
                if t == f64::INFINITY {
                    continue 'seq;
                }
                sum += t;
            }
            if sum / n as f64 > eps1 {
                continue 'seq;
            }
        }
        let info: f64 = digits.iter().map(|&x| score[x]).sum::<f64>() / n as f64;
        if info > c_mean + eps2 {
            continue;
        }
        kept[idx] = true;
        retained_mass += base.weight(idx);
    }
    Ok(TypicalRestriction {
        base,
        kept,
        retained_mass,
    })
}

/// One entry of the finite-n smooth-rate curve.
#[derive(Clone, Debug)]
pub struct SmoothCurvePoint {
    pub n: usize,
    /// `d_δ(Q^{⊗n}, ·) / n` as found by the outer search.
    pub value_per_letter: f64,
    /// Unsmoothed single-letter constant `d` (reference line).
    pub d_single: f64,
    /// `d*` (reference line).
    pub dstar: f64,
    /// `dstar − value_per_letter`; reported, not asserted.
    pub slack_vs_dstar: f64,
}

/// Normalized smooth constants of tensor powers `n = 1..=n_max` in the
/// source-matched configuration, with `d` and `d*` reference values.
pub fn smooth_rate_curve(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    weights: &[f64],
    delta: f64,
    n_max: usize,
    opts: &SmoothOptions,
) -> Result<Vec<SmoothCurvePoint>> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be ≥ 1".into()));
    }
    let k = q_x.alphabet_size() as u128;
    if k.pow(n_max as u32) > ENUMERATION_CAP as u128 {
        return Err(Error::EnumerationCap {
            needed: k.pow(n_max as u32),
            cap: ENUMERATION_CAP as u128,
        });
    }
    let single = GbllInstance::from_source(q_x.clone(), channels.to_vec(), weights.to_vec())?;
    let d_single = gbll_constant(&single, &opts.inner).constant.to_f64();
    let (ds, _) = envelope::dstar(
        q_x,
        channels,
        weights,
        envelope::default_u_cap(q_x.alphabet_size()),
        &opts.inner,
    )?;

    let mut curve = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let inst_n = single.tensor_power(n)?;
        let nus_n: Vec<FiniteMeasure> = inst_n.nus.clone();
        let res = smooth_constant(
            &inst_n.mu,
            &inst_n.channels,
            &nus_n,
            &inst_n.weights,
            delta,
            opts,
        )?;
        let value_per_letter = res.value.to_f64() / n as f64;
        curve.push(SmoothCurvePoint {
            n,
            value_per_letter,
            d_single,
            dstar: ds,
            slack_vs_dstar: ds - value_per_letter,
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fm(w: &[f64]) -> FiniteMeasure {
        FiniteMeasure::new(w.to_vec()).unwrap()
    }

    fn quick_smooth_opts() -> SmoothOptions {
        SmoothOptions {
            inner: OptimizerOptions {
                restarts: 16,
                ..OptimizerOptions::default()
            },
            ..SmoothOptions::default()
        }
    }

    /// Source-matched binary demo: uniform X through BSC(0.11), c = 2.
    fn dsbs_demo() -> (FiniteMeasure, Vec<Channel>, Vec<FiniteMeasure>, Vec<f64>) {
        let q = FiniteMeasure::uniform(2);
        let chs = vec![Channel::bsc(0.11)];
        let nus = vec![push_forward(&q, &chs[0]).unwrap()];
        (q, chs, nus, vec![2.0])
    }

    #[test]
    fn delta_zero_equals_plain_constant() {
        let (q, chs, nus, w) = dsbs_demo();
        let res = smooth_constant(&q, &chs, &nus, &w, 0.0, &quick_smooth_opts()).unwrap();
        let inst = GbllInstance::new(q.clone(), chs, nus, w).unwrap();
        let d = gbll_constant(&inst, &quick_smooth_opts().inner).constant;
        assert_eq!(res.value, d);
        assert_eq!(res.e1_used, 0.0);
    }

    #[test]
    fn monotone_in_delta() {
        let (q, chs, nus, w) = dsbs_demo();
        let opts = quick_smooth_opts();
        let v0 = smooth_constant(&q, &chs, &nus, &w, 0.0, &opts).unwrap().value.to_f64();
        let v5 = smooth_constant(&q, &chs, &nus, &w, 0.05, &opts).unwrap().value.to_f64();
        let v10 = smooth_constant(&q, &chs, &nus, &w, 0.10, &opts).unwrap().value.to_f64();
        assert!(v10 <= v5 + 1e-9, "{v10} > {v5}");
        assert!(v5 <= v0 + 1e-9, "{v5} > {v0}");
    }

    #[test]
    fn e1_budget_respected() {
        let (q, chs, nus, w) = dsbs_demo();
        let delta = 0.22;
        let res = smooth_constant(&q, &chs, &nus, &w, delta, &quick_smooth_opts()).unwrap();
        assert!(res.e1_used <= delta + 1e-12);
        // The result invariant: value is the constant of the smoothing
        // measure.
        let inst = GbllInstance::new(
            res.smoothing_measure.clone(),
            chs,
            nus,
            w,
        )
        .unwrap();
        let check = gbll_constant(&inst, &quick_smooth_opts().inner.clone().with_restarts(32));
        assert_abs_diff_eq!(
            check.constant.to_f64(),
            res.value.to_f64(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn rejects_bad_delta() {
        let (q, chs, nus, w) = dsbs_demo();
        assert!(smooth_constant(&q, &chs, &nus, &w, 1.0, &quick_smooth_opts()).is_err());
        assert!(smooth_constant(&q, &chs, &nus, &w, -0.1, &quick_smooth_opts()).is_err());
    }

    #[test]
    fn inflation_never_helps() {
        let (q, chs, nus, w) = dsbs_demo();
        let mut opts = quick_smooth_opts();
        opts.allow_inflation = true;
        let res = smooth_constant(&q, &chs, &nus, &w, 0.15, &opts).unwrap();
        assert!(!res.used_inflation, "inflating μ should never lower d");
    }

    #[test]
    fn typical_restriction_infinite_thresholds_keep_everything() {
        let (q, chs, nus, w) = dsbs_demo();
        let tr = typical_restriction(
            &q,
            &chs,
            &nus,
            &w,
            4,
            f64::INFINITY,
            f64::INFINITY,
            &[],
        )
        .unwrap();
        assert_abs_diff_eq!(tr.retained_mass, 1.0, epsilon = 1e-12);
        assert!(tr.kept.iter().all(|&b| b));
        assert_abs_diff_eq!(tr.e1_to_base().unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn typical_restriction_mass_trend() {
        // Asymmetric source so the typicality constraints bite; retained
        // mass should trend to 1 by the law of large numbers.
        let q = fm(&[0.3, 0.7]);
        let chs = vec![Channel::bsc(0.11)];
        let nus = vec![push_forward(&q, &chs[0]).unwrap()];
        let w = vec![2.0];
        let cost = CostFunction::new(vec![1.0 / 0.3 - 1.0, -1.0], 0.0).unwrap();
        let masses: Vec<f64> = (1..=10)
            .map(|n| {
                typical_restriction(&q, &chs, &nus, &w, n, 0.6, 0.25, &[cost.clone()])
                    .unwrap()
                    .retained_mass
            })
            .collect();
        assert!(
            masses[9] > masses[0],
            "no LLN trend: {masses:?}"
        );
        assert!(masses[9] > 0.8, "mass should approach 1: {masses:?}");
        for (i, pair) in masses.windows(2).enumerate() {
            assert!(
                pair[1] >= pair[0] - 0.05,
                "large dip at n = {}: {masses:?}",
                i + 1
            );
        }
        // E_1 to the base equals the lost mass.
        let tr =
            typical_restriction(&q, &chs, &nus, &w, 6, 0.6, 0.25, &[cost]).unwrap();
        assert_abs_diff_eq!(
            tr.e1_to_base().unwrap(),
            1.0 - tr.retained_mass,
            epsilon = 1e-12
        );
    }

    #[test]
    fn restriction_preserves_divergence_on_support() {
        // D(P‖μ_n) = D(P‖Q^{⊗n}) for P supported on the kept set.
        let (q, chs, nus, w) = dsbs_demo();
        let tr = typical_restriction(&q, &chs, &nus, &w, 3, 0.5, 0.1, &[]).unwrap();
        let restricted = tr.restricted().unwrap();
        let kept: Vec<usize> = (0..8).filter(|&i| tr.kept[i]).collect();
        assert!(!kept.is_empty());
        let mut pw = vec![0.0; 8];
        for (rank, &i) in kept.iter().enumerate() {
            pw[i] = (rank + 1) as f64;
        }
        let s: f64 = pw.iter().sum();
        pw.iter_mut().for_each(|v| *v /= s);
        let p = fm(&pw);
        let d_restricted = crate::measures::rel_entropy(&p, &restricted).unwrap();
        let d_base = crate::measures::rel_entropy(&p, &tr.base).unwrap();
        assert_abs_diff_eq!(
            d_restricted.expect_finite("f"),
            d_base.expect_finite("f"),
            epsilon = 1e-14
        );
    }

    #[test]
    fn enumeration_cap_enforced() {
        let q = FiniteMeasure::uniform(10);
        let ch = Channel::identity(10);
        let nus = vec![push_forward(&q, &ch).unwrap()];
        let out = typical_restriction(&q, &[ch], &nus, &[1.0], 7, 1.0, 1.0, &[]);
        assert!(matches!(out, Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn vertex_family_attains_continuous_optimum() {
        // The optimum over all mass-cutting measures is attained at a
        // vertex of the E₁ polytope (cut pattern plus at most one
        // partial coordinate): disabling the continuous refinement must
        // not change the value.
        let q = fm(&[0.3, 0.7]);
        let inst = GbllInstance::from_source(q, vec![Channel::bsc(0.11)], vec![2.0])
            .unwrap()
            .tensor_power(3)
            .unwrap();
        let base = quick_smooth_opts();
        let no_refine = SmoothOptions {
            refine: false,
            ..base.clone()
        };
        let vertex_only =
            smooth_constant(&inst.mu, &inst.channels, &inst.nus, &inst.weights, 0.2, &no_refine)
                .unwrap();
        let refined =
            smooth_constant(&inst.mu, &inst.channels, &inst.nus, &inst.weights, 0.2, &base)
                .unwrap();
        assert!(
            (vertex_only.value.to_f64() - refined.value.to_f64()).abs() <= 1e-6,
            "vertex {} vs refined {}",
            vertex_only.value.to_f64(),
            refined.value.to_f64()
        );
    }

    #[test]
    fn curve_first_entry_matches_single_letter_smooth() {
        let (q, chs, _, w) = dsbs_demo();
        let opts = quick_smooth_opts();
        let curve = smooth_rate_curve(&q, &chs, &w, 0.1, 2, &opts).unwrap();
        assert_eq!(curve.len(), 2);
        let nus = vec![push_forward(&q, &chs[0]).unwrap()];
        let direct = smooth_constant(&q, &chs, &nus, &w, 0.1, &opts).unwrap();
        assert_abs_diff_eq!(
            curve[0].value_per_letter,
            direct.value.to_f64(),
            epsilon = 1e-9
        );
        // Tensorization plus smoothing can only help.
        for pt in &curve {
            assert!(pt.value_per_letter <= pt.d_single + 1e-6);
        }
    }
}
