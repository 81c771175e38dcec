//! The GBLL best constant and its functional dual.
//!
//! `gbll_constant` computes
//! `d(μ, (Q_{Y_j|X}), (ν_j), c^m) = sup_P { Σ_l c_l D(P_{Y_l}‖ν_l) − D(P_X‖μ) }`
//! over probability measures `P ≪ μ` by multi-start gradient ascent in a
//! softmax parameterization of the simplex on `supp(μ)`.
//!
//! The dual side is the functional inequality
//! `∫ exp(Σ_j E[log f_j(Y_j)|X=·] − d) dμ ≤ Π_j (∫ f_j^{1/c_j} dν_j)^{c_j}`,
//! valid for all nonnegative `f_j` exactly when `d` is at least the best
//! constant. `gbll_functional_gap` evaluates the log-gap of that
//! inequality and `worst_case_functions` searches for the tuple that
//! maximizes it, which provides an independent check of the primal
//! optimizer: the maximal gap at a given `d` equals `d(·) − d`.

use crate::ext_real::ExtReal;
use crate::measures::{push_forward, FiniteMeasure, GbllInstance};
use crate::{check_dims, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Exponent cap used when log-parameterized quantities would overflow.
const LOG_CAP: f64 = 300.0;

/// Knobs for the multi-start ascent.
#[derive(Clone, Debug)]
pub struct OptimizerOptions {
    /// Number of random (uniform-on-the-simplex) restarts, in addition to
    /// the deterministic starts at `μ` normalized and each vertex.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the objective improves by less than this on an accepted
    /// step (checked over a few consecutive iterations).
    pub tol: f64,
    pub seed: u64,
    /// Objective value beyond which the supremum is declared `+∞`.
    pub magnitude_cap: f64,
    /// Extra starting points, e.g. the maximizer of a neighboring
    /// instance when running inside a minimax loop.
    pub warm_starts: Vec<FiniteMeasure>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 4000,
            tol: 1e-10,
            seed: 0,
            magnitude_cap: 50.0,
            warm_starts: Vec::new(),
        }
    }
}

impl OptimizerOptions {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Outcome of a best-constant computation.
#[derive(Clone, Debug)]
pub struct GbllResult {
    /// The supremum found; `+∞` iff `diverged`.
    pub constant: ExtReal,
    /// Best probability measure probed (zero off `supp(μ)`).
    pub maximizer: FiniteMeasure,
    /// Set when iterates exceeded the magnitude cap or concentrated while
    /// the objective was still climbing, signaling `sup = +∞`.
    pub diverged: bool,
    /// Set when the maximizer sits against the simplex boundary, where
    /// the supremum may be approached but not attained.
    pub possibly_unattained: bool,
    /// Best objective per restart, for diagnostics.
    pub trace: Vec<(usize, f64)>,
}

/// A tuple of nonnegative functions `f_j` on the output alphabets.
#[derive(Clone, Debug)]
pub struct FunctionTuple {
    fs: Vec<Vec<f64>>,
}

impl FunctionTuple {
    pub fn new(fs: Vec<Vec<f64>>) -> Result<Self> {
        for (j, f) in fs.iter().enumerate() {
            if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "f_{j} must be finite and nonnegative"
                )));
            }
            if f.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "f_{j} must have a positive entry"
                )));
            }
        }
        Ok(Self { fs })
    }

    /// Constant-one tuple matching the instance's output alphabets.
    pub fn ones(inst: &GbllInstance) -> Self {
        Self {
            fs: inst
                .channels
                .iter()
                .map(|ch| vec![1.0; ch.output_size()])
                .collect(),
        }
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.fs
    }
}

/// `Σ_l c_l D(P_{Y_l}‖ν_l) − D(P‖μ)`; `−∞` when `P` is not dominated by `μ`.
pub fn gbll_objective(inst: &GbllInstance, p: &FiniteMeasure) -> Result<ExtReal> {
    check_dims(p.alphabet_size(), inst.alphabet_size(), "gbll_objective")?;
    debug_assert!(p.is_probability(), "gbll_objective: P must be a probability");
    for x in 0..p.alphabet_size() {
        if p.weight(x) > 0.0 && inst.mu.weight(x) == 0.0 {
            return Ok(ExtReal::NegInf);
        }
    }
    let mut total = ExtReal::Finite(0.0);
    for j in 0..inst.m() {
        let pj = push_forward(p, &inst.channels[j])?;
        let dj = crate::measures::rel_entropy(&pj, &inst.nus[j])?;
        total = total + dj.scale(inst.weights[j]);
    }
    let dx = crate::measures::rel_entropy(p, &inst.mu)?;
    // dx is finite here because P ≪ μ was checked above.
    Ok(total - dx)
}

/// Objective and ascent machinery restricted to `supp(μ)`.
struct Ascent<'a> {
    inst: &'a GbllInstance,
    support: Vec<usize>,
    /// ln μ(x) over the support.
    log_mu: Vec<f64>,
}

impl<'a> Ascent<'a> {
    fn new(inst: &'a GbllInstance) -> Self {
        let support = inst.mu.support();
        let log_mu = support.iter().map(|&x| inst.mu.weight(x).ln()).collect();
        Self {
            inst,
            support,
            log_mu,
        }
    }

    fn dim(&self) -> usize {
        self.support.len()
    }

    /// Softmax of logits; numerically safe for any finite logits.
    fn probs(&self, logits: &[f64]) -> Vec<f64> {
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logits.iter().map(|t| (t - mx).exp()).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        p
    }

    /// Push a support-indexed probability vector through channel `j`.
    fn push(&self, p: &[f64], j: usize) -> Vec<f64> {
        let ch = &self.inst.channels[j];
        let mut out = vec![0.0; ch.output_size()];
        for (i, &x) in self.support.iter().enumerate() {
            if p[i] == 0.0 {
                continue;
            }
            for (y, o) in out.iter_mut().enumerate() {
                *o += p[i] * ch.prob(x, y);
            }
        }
        out
    }

    /// Objective value; `PosInf` when an output escapes its reference.
    fn objective(&self, p: &[f64]) -> ExtReal {
        let mut acc = 0.0;
        for j in 0..self.inst.m() {
            let pj = self.push(p, j);
            let nu = &self.inst.nus[j];
            let mut d = 0.0;
            for (y, &py) in pj.iter().enumerate() {
                if py <= 0.0 {
                    continue;
                }
                let ny = nu.weight(y);
                if ny == 0.0 {
                    return ExtReal::PosInf;
                }
                d += py * (py / ny).ln();
            }
            acc += self.inst.weights[j] * d;
        }
        for (i, &pi) in p.iter().enumerate() {
            if pi > 0.0 {
                acc -= pi * (pi.ln() - self.log_mu[i]);
            }
        }
        ExtReal::Finite(acc)
    }

    /// Euclidean gradient ∂f/∂P over the support (up to an additive
    /// constant, which the softmax chain rule cancels). Only valid when
    /// the objective is finite at `p`.
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for j in 0..self.inst.m() {
            let pj = self.push(p, j);
            let nu = &self.inst.nus[j];
            let log_ratio: Vec<f64> = pj
                .iter()
                .enumerate()
                .map(|(y, &py)| {
                    if py > 0.0 {
                        (py / nu.weight(y)).ln()
                    } else {
                        0.0 // coefficient Q(y|x) is 0 for every supported x
                    }
                })
                .collect();
            let ch = &self.inst.channels[j];
            for (i, &x) in self.support.iter().enumerate() {
                let mut e = 0.0;
                for (y, &lr) in log_ratio.iter().enumerate() {
                    let q = ch.prob(x, y);
                    if q > 0.0 {
                        e += q * lr;
                    }
                }
                g[i] += self.inst.weights[j] * e;
            }
        }
        for (i, &pi) in p.iter().enumerate() {
            let pi = pi.max(1e-300);
            g[i] -= pi.ln() - self.log_mu[i];
        }
        g
    }

    /// Embeds a support-indexed vector into the full alphabet.
    fn embed(&self, p: &[f64]) -> FiniteMeasure {
        let mut w = vec![0.0; self.inst.alphabet_size()];
        for (i, &x) in self.support.iter().enumerate() {
            w[x] = p[i];
        }
        FiniteMeasure::new(w).expect("valid probability vector")
    }
}

enum RunOutcome {
    Converged { p: Vec<f64>, value: f64 },
    Diverged,
}

/// One gradient-ascent run from the given logits.
fn ascend(a: &Ascent<'_>, mut logits: Vec<f64>, opts: &OptimizerOptions) -> RunOutcome {
    let mut p = a.probs(&logits);
    let mut value = match a.objective(&p) {
        ExtReal::PosInf => return RunOutcome::Diverged,
        ExtReal::Finite(v) if v > opts.magnitude_cap => return RunOutcome::Diverged,
        ExtReal::Finite(v) => v,
        ExtReal::NegInf => unreachable!("softmax point is dominated by μ"),
    };
    let mut step = 0.5;
    let mut stall = 0;
    let mut concentrated_growth = 0;
    for _ in 0..opts.max_iters {
        let g = a.gradient(&p);
        let mean: f64 = p.iter().zip(&g).map(|(pi, gi)| pi * gi).sum();
        let dir: Vec<f64> = p
            .iter()
            .zip(&g)
            .map(|(pi, gi)| pi * (gi - mean))
            .collect();

        // Backtracking line search on the logit step.
        let mut improved = false;
        while step > 1e-16 {
            let cand: Vec<f64> = logits
                .iter()
                .zip(&dir)
                .map(|(t, d)| (t + step * d).clamp(-LOG_CAP, LOG_CAP))
                .collect();
            let pc = a.probs(&cand);
            match a.objective(&pc) {
                ExtReal::PosInf => return RunOutcome::Diverged,
                ExtReal::Finite(v) if v > opts.magnitude_cap => return RunOutcome::Diverged,
                ExtReal::Finite(v) if v > value => {
                    let gain = v - value;
                    logits = cand;
                    p = pc;
                    value = v;
                    step = (step * 1.6).min(1e3);
                    improved = true;
                    // A finite vertex optimum makes gains decay as the
                    // iterate concentrates; a supremum of +∞ keeps
                    // climbing at full speed. Only the latter counts.
                    let concentrated = p.iter().cloned().fold(0.0, f64::max) > 1.0 - 1e-9;
                    if concentrated && gain > 1e-4 {
                        concentrated_growth += 1;
                        if concentrated_growth >= 30 {
                            return RunOutcome::Diverged;
                        }
                    } else {
                        concentrated_growth = 0;
                    }
                    if gain < opts.tol {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !improved || stall >= 3 {
            break;
        }
    }
    RunOutcome::Converged { p, value }
}

/// Computes the GBLL best constant by multi-start ascent.
///
/// Starts: `μ` normalized, a near-vertex start per support symbol, any
/// caller-provided warm starts, and `opts.restarts` uniform draws from
/// the simplex. Exact vertices and `μ` normalized are also probed
/// directly so closed-form boundary optima are never missed.
pub fn gbll_constant(inst: &GbllInstance, opts: &OptimizerOptions) -> GbllResult {
    let a = Ascent::new(inst);
    let k = a.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    // μ normalized.
    starts.push(
        a.support
            .iter()
            .map(|&x| inst.mu.weight(x).ln())
            .collect::<Vec<_>>(),
    );
    // Near-vertex starts; on large alphabets only the heaviest vertices
    // get a full ascent (exact vertices are all probed below anyway).
    let vertex_starts: Vec<usize> = if k <= 24 {
        (0..k).collect()
    } else {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&i, &j| {
            inst.mu.weight(a.support[j])
                .partial_cmp(&inst.mu.weight(a.support[i]))
                .unwrap()
        });
        idx.truncate(24);
        idx
    };
    for i in vertex_starts {
        let mut t = vec![0.0; k];
        t[i] = 12.0;
        starts.push(t);
    }
    for w in &opts.warm_starts {
        if w.alphabet_size() != inst.alphabet_size() {
            continue;
        }
        let mass: f64 = a.support.iter().map(|&x| w.weight(x)).sum();
        if mass <= 0.0 {
            continue;
        }
        starts.push(
            a.support
                .iter()
                .map(|&x| (w.weight(x).max(1e-12) / mass).ln())
                .collect(),
        );
    }
    for _ in 0..opts.restarts {
        // Dirichlet(1) draw, entered through logits.
        let t: Vec<f64> = (0..k)
            .map(|_| {
                let e: f64 = -rng.random::<f64>().ln();
                e.max(1e-12).ln()
            })
            .collect();
        starts.push(t);
    }

    let uniform = vec![1.0 / k as f64; k];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_p: Option<Vec<f64>> = None;
    let mut trace = Vec::with_capacity(starts.len());
    for (r, start) in starts.into_iter().enumerate() {
        match ascend(&a, start, opts) {
            RunOutcome::Diverged => {
                return GbllResult {
                    constant: ExtReal::PosInf,
                    maximizer: a.embed(&uniform),
                    diverged: true,
                    possibly_unattained: true,
                    trace,
                };
            }
            RunOutcome::Converged { p, value } => {
                trace.push((r, value));
                if value > best_value {
                    best_value = value;
                    best_p = Some(p);
                }
            }
        }
    }

    // Exact-point probes (vertices and μ normalized).
    let mut probes: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut p = vec![0.0; k];
            p[i] = 1.0;
            p
        })
        .collect();
    let total: f64 = a.support.iter().map(|&x| inst.mu.weight(x)).sum();
    probes.push(a.support.iter().map(|&x| inst.mu.weight(x) / total).collect());
    for p in probes {
        match a.objective(&p) {
            ExtReal::PosInf => {
                return GbllResult {
                    constant: ExtReal::PosInf,
                    maximizer: a.embed(&p),
                    diverged: true,
                    possibly_unattained: true,
                    trace,
                };
            }
            ExtReal::Finite(v) => {
                if v > best_value {
                    best_value = v;
                    best_p = Some(p);
                }
            }
            ExtReal::NegInf => {}
        }
    }

    let p = best_p.expect("at least one start");
    let boundary = p.iter().cloned().fold(0.0, f64::max) > 1.0 - 1e-6;
    GbllResult {
        constant: ExtReal::Finite(best_value),
        maximizer: a.embed(&p),
        diverged: false,
        possibly_unattained: boundary,
        trace,
    }
}

/// Log-gap of the functional inequality at constant `d`:
/// `log ∫ exp(Σ_j E[log f_j(Y_j)|X=·] − d) dμ − Σ_j c_j log ∫ f_j^{1/c_j} dν_j`.
///
/// Conventions: `exp(−∞) = 0` when some `f_j(y) = 0` carries positive
/// conditional mass, and a vanishing norm on the right makes the gap `+∞`.
pub fn gbll_functional_gap(inst: &GbllInstance, d: f64, fs: &FunctionTuple) -> Result<ExtReal> {
    check_dims(fs.fs.len(), inst.m(), "function tuple arity")?;
    for (j, f) in fs.fs.iter().enumerate() {
        check_dims(f.len(), inst.channels[j].output_size(), "f_j length")?;
    }
    let log_fs: Vec<Vec<f64>> = fs
        .fs
        .iter()
        .map(|f| f.iter().map(|v| v.ln()).collect()) // ln 0 = −∞ is intended
        .collect();

    // Left side: log-sum-exp of ln μ(x) + Σ_j E[ln f_j | X=x] − d.
    let mut exponents: Vec<f64> = Vec::new();
    for x in 0..inst.alphabet_size() {
        let mx = inst.mu.weight(x);
        if mx == 0.0 {
            continue;
        }
        let mut e = mx.ln() - d;
        'outer: for j in 0..inst.m() {
            let ch = &inst.channels[j];
            for y in 0..ch.output_size() {
                let q = ch.prob(x, y);
                if q == 0.0 {
                    continue;
                }
                let lf = log_fs[j][y];
                if lf == f64::NEG_INFINITY {
                    e = f64::NEG_INFINITY;
                    break 'outer;
                }
                e += q * lf;
            }
        }
        if e > f64::NEG_INFINITY {
            exponents.push(e);
        }
    }
    if exponents.is_empty() {
        return Ok(ExtReal::NegInf);
    }
    let mx = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lhs = mx + exponents.iter().map(|e| (e - mx).exp()).sum::<f64>().ln();

    let mut rhs = 0.0;
    for j in 0..inst.m() {
        let c = inst.weights[j];
        let nu = &inst.nus[j];
        let integral: f64 = fs.fs[j]
            .iter()
            .enumerate()
            .map(|(y, &f)| nu.weight(y) * f.powf(1.0 / c))
            .sum();
        if integral == 0.0 {
            return Ok(ExtReal::PosInf);
        }
        rhs += c * integral.ln();
    }
    Ok(ExtReal::Finite(lhs - rhs))
}

/// Builds the dual-optimal tuple for a given `P`: `f_j = (dP_j/dν_j)^{c_j}`,
/// log-parameterized and capped.
fn tuple_from_p(inst: &GbllInstance, p: &FiniteMeasure) -> Vec<Vec<f64>> {
    (0..inst.m())
        .map(|j| {
            let pj = push_forward(p, &inst.channels[j]).expect("dims checked");
            let nu = &inst.nus[j];
            (0..pj.alphabet_size())
                .map(|y| {
                    let (py, ny) = (pj.weight(y), nu.weight(y));
                    let log_ratio = if py == 0.0 {
                        -LOG_CAP
                    } else if ny == 0.0 {
                        LOG_CAP
                    } else {
                        (py / ny).ln()
                    };
                    (inst.weights[j] * log_ratio).clamp(-LOG_CAP, LOG_CAP).exp()
                })
                .collect()
        })
        .collect()
}

/// One coordinate-ascent run alternating the closed-form `P`-step and
/// `f`-step from a starting tuple; returns the tuple and the achieved
/// gap at `d = 0`.
fn alternate_from_tuple(
    inst: &GbllInstance,
    mut fs: Vec<Vec<f64>>,
    max_iters: usize,
    tol: f64,
) -> (Vec<Vec<f64>>, f64) {
    let support = inst.mu.support();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        // P-step: P(x) ∝ μ(x) exp(Σ_j E[ln f_j | X=x]).
        let mut scores: Vec<f64> = Vec::with_capacity(support.len());
        for &x in &support {
            let mut e = inst.mu.weight(x).ln();
            for j in 0..inst.m() {
                let ch = &inst.channels[j];
                for y in 0..ch.output_size() {
                    let q = ch.prob(x, y);
                    if q == 0.0 {
                        continue;
                    }
                    let f = fs[j][y];
                    e += q * if f > 0.0 { f.ln() } else { -LOG_CAP };
                }
            }
            scores.push(e);
        }
        let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut pw: Vec<f64> = scores.iter().map(|s| (s - mx).exp()).collect();
        let total: f64 = pw.iter().sum();
        pw.iter_mut().for_each(|v| *v /= total);
        let mut full = vec![0.0; inst.alphabet_size()];
        for (i, &x) in support.iter().enumerate() {
            full[x] = pw[i];
        }
        let p = FiniteMeasure::new(full).expect("valid P");

        // f-step has a closed form.
        fs = tuple_from_p(inst, &p);
        let tuple = FunctionTuple { fs: fs.clone() };
        let gap = gbll_functional_gap(inst, 0.0, &tuple)
            .expect("dims fixed")
            .to_f64();
        if !gap.is_finite() {
            return (fs, gap);
        }
        if gap - best < tol {
            return (fs, gap.max(best));
        }
        best = best.max(gap);
    }
    (fs, best)
}

/// Searches for the function tuple maximizing the functional gap at `d`.
///
/// Coordinate ascent alternates a closed-form `P`-step with the
/// closed-form `f_j = (dP_j/dν_j)^{c_j}` update, started from random
/// tuples, random simplex points, and closed-form indicator probes built
/// from level sets of the best output density found so far.
pub fn worst_case_functions(
    inst: &GbllInstance,
    d: f64,
    opts: &OptimizerOptions,
) -> (FunctionTuple, ExtReal) {
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0x77cf_3ab1);
    let support = inst.mu.support();
    let mut best_gap = f64::NEG_INFINITY;
    let mut best_fs: Vec<Vec<f64>> = FunctionTuple::ones(inst).fs;

    fn consider(fs: Vec<Vec<f64>>, gap: f64, best_gap: &mut f64, best_fs: &mut Vec<Vec<f64>>) {
        if gap > *best_gap {
            *best_gap = gap;
            *best_fs = fs;
        }
    }

    // Random log-space tuples.
    let starts = opts.restarts.max(4);
    for _ in 0..starts {
        let fs: Vec<Vec<f64>> = inst
            .channels
            .iter()
            .map(|ch| {
                (0..ch.output_size())
                    .map(|_| rng.random_range(-2.0..2.0f64).exp())
                    .collect()
            })
            .collect();
        let (fs, gap) = alternate_from_tuple(inst, fs, 400, 1e-13);
        consider(fs, gap, &mut best_gap, &mut best_fs);
    }

    // Simplex-seeded starts: the tuple induced by μ normalized, each
    // vertex of supp(μ), and random simplex points.
    let mut p_starts: Vec<FiniteMeasure> = vec![inst.mu.normalized()];
    for &x in &support {
        p_starts.push(FiniteMeasure::point_mass(inst.alphabet_size(), x));
    }
    for _ in 0..starts {
        let mut w = vec![0.0; inst.alphabet_size()];
        for &x in &support {
            w[x] = -rng.random::<f64>().ln();
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        p_starts.push(FiniteMeasure::new(w).expect("valid P"));
    }
    for p in p_starts {
        let fs = tuple_from_p(inst, &p);
        let (fs, gap) = alternate_from_tuple(inst, fs, 400, 1e-13);
        consider(fs, gap, &mut best_gap, &mut best_fs);
    }

    // Indicator probes in the Remark-10 shape f_j = (1_A + Q_{Y_j}(A) 1_Ā)^{c_j},
    // with A running over level sets of the best f_j so far.
    let q_x = inst.mu.normalized();
    for j in 0..inst.m() {
        let ch = &inst.channels[j];
        let qy = push_forward(&q_x, ch).expect("dims checked");
        let mut order: Vec<usize> = (0..ch.output_size()).collect();
        let snapshot = best_fs.clone();
        order.sort_by(|&a, &b| snapshot[j][b].partial_cmp(&snapshot[j][a]).unwrap());
        for cut in 1..order.len() {
            let mut in_set = vec![false; ch.output_size()];
            for &y in &order[..cut] {
                in_set[y] = true;
            }
            let qa: f64 = (0..ch.output_size())
                .filter(|&y| in_set[y])
                .map(|y| qy.weight(y))
                .sum();
            if qa <= 0.0 {
                continue;
            }
            let mut fs = snapshot.clone();
            fs[j] = (0..ch.output_size())
                .map(|y| if in_set[y] { 1.0 } else { qa }.powf(inst.weights[j]))
                .collect();
            let (fs, gap) = alternate_from_tuple(inst, fs, 400, 1e-13);
            consider(fs, gap, &mut best_gap, &mut best_fs);
        }
    }

    let tuple = FunctionTuple { fs: best_fs };
    let gap = ExtReal::from_f64(best_gap) - ExtReal::Finite(d);
    (tuple, gap)
}
