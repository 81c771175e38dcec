//! The mutual-information constant `d*` and its concave-envelope
//! characterization.
//!
//! `d*(Q_X, c^m) = sup_{P_{U|X}} { Σ_l c_l I(U;Y_l) − I(U;X) }` is
//! computed by ascent over auxiliary channels `P_{U|X}` of bounded
//! cardinality, refined by a linear-programming reweighting of the
//! resulting decomposition `{(w_u, P_{X|U=u})}`. Writing
//! `σ(P) = Σ_j c_j D(P_{Y_j}‖Q_{Y_j}) − D(P‖Q_X)`, the same quantity is
//! the upper concave envelope of `σ` evaluated at `Q_X`; `envelope_at`
//! computes that envelope directly by an LP over a simplex grid and
//! serves as an independent oracle for small alphabets.
//!
//! `constrained_single_letter` computes the cost-constrained single
//! letter value `g(1)`: the supremum of `Σ_u w_u obj(P_u)` without the
//! barycenter constraint but subject to `E[τ_α(X)] ≤ ε_α` under the
//! mixture, which upper-bounds the corresponding multi-letter values
//! `g(n)`.

use crate::ext_real::ExtReal;
use crate::gbll::{gbll_constant, GbllResult, OptimizerOptions};
use crate::linprog::{self, LpOutcome};
use crate::measures::{push_forward, Channel, FiniteMeasure, GbllInstance};
use crate::{check_dims, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Recommended auxiliary cardinality: concavification over a
/// `(|X|−1)`-simplex needs at most `|X|` points, plus one of margin for
/// cost-constrained variants.
pub fn default_u_cap(alphabet_size: usize) -> usize {
    alphabet_size + 1
}

/// A finite mixture representation of an auxiliary variable: `P_U` and
/// the conditional laws `P_{X|U=u}`.
#[derive(Clone, Debug)]
pub struct AuxDecomposition {
    pub u_weights: Vec<f64>,
    pub components: Vec<FiniteMeasure>,
}

impl AuxDecomposition {
    pub fn new(u_weights: Vec<f64>, components: Vec<FiniteMeasure>) -> Result<Self> {
        check_dims(u_weights.len(), components.len(), "aux weights vs components")?;
        if u_weights.is_empty() {
            return Err(Error::InvalidParameter("empty decomposition".into()));
        }
        if u_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (u_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidParameter(
                "u_weights must be a probability vector".into(),
            ));
        }
        let k = components[0].alphabet_size();
        for c in &components {
            check_dims(c.alphabet_size(), k, "component alphabet")?;
        }
        Ok(Self {
            u_weights,
            components,
        })
    }

    /// Trivial decomposition (constant `U`).
    pub fn constant(q_x: &FiniteMeasure) -> Self {
        Self {
            u_weights: vec![1.0],
            components: vec![q_x.clone()],
        }
    }

    /// The mixture `Σ_u w_u P_{X|U=u}`.
    pub fn barycenter(&self) -> FiniteMeasure {
        let k = self.components[0].alphabet_size();
        let mut w = vec![0.0; k];
        for (wu, comp) in self.u_weights.iter().zip(&self.components) {
            for x in 0..k {
                w[x] += wu * comp.weight(x);
            }
        }
        FiniteMeasure::new(w).expect("mixture of probabilities")
    }

    /// Largest coordinate deviation of the barycenter from `q`.
    pub fn barycenter_gap(&self, q: &FiniteMeasure) -> f64 {
        let b = self.barycenter();
        (0..q.alphabet_size())
            .map(|x| (b.weight(x) - q.weight(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// A per-letter cost `τ: X → ℝ ∪ {+∞}` with its budget `ε`.
///
/// Infinite costs encode hard support restrictions: any symbol with
/// `τ(x) = +∞` under a finite budget is forced out of the support.
#[derive(Clone, Debug)]
pub struct CostFunction {
    pub values: Vec<f64>,
    pub epsilon: f64,
}

impl CostFunction {
    pub fn new(values: Vec<f64>, epsilon: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty cost function".into()));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter(
                "costs must be real or +∞".into(),
            ));
        }
        if epsilon.is_nan() {
            return Err(Error::InvalidParameter("ε must not be NaN".into()));
        }
        if !values.iter().any(|v| v.is_finite() && *v <= epsilon) {
            return Err(Error::Infeasible(
                "no symbol has finite cost within the budget".into(),
            ));
        }
        Ok(Self { values, epsilon })
    }
}

/// `σ(P) = Σ_j c_j D(P_{Y_j}‖Q_{Y_j}) − D(P‖Q_X)`, the GBLL objective of
/// the source-matched configuration. Weights may be zero here (the
/// `c_j = 0` limit is well defined even though instances require
/// positive weights).
pub fn sigma(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    weights: &[f64],
    p: &FiniteMeasure,
) -> Result<ExtReal> {
    check_dims(channels.len(), weights.len(), "sigma weights")?;
    check_dims(p.alphabet_size(), q_x.alphabet_size(), "sigma P")?;
    if weights.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidParameter("σ weights must be ≥ 0".into()));
    }
    for x in 0..p.alphabet_size() {
        if p.weight(x) > 0.0 && q_x.weight(x) == 0.0 {
            return Ok(ExtReal::NegInf);
        }
    }
    let mut total = ExtReal::Finite(0.0);
    for (j, ch) in channels.iter().enumerate() {
        if weights[j] == 0.0 {
            continue;
        }
        let pj = push_forward(p, ch)?;
        let qj = push_forward(q_x, ch)?;
        total = total + crate::measures::rel_entropy(&pj, &qj)?.scale(weights[j]);
    }
    Ok(total - crate::measures::rel_entropy(p, q_x)?)
}

/// Kernel-space ascent state for `Σ_l c_l I(U;Y_l) − I(U;X)`.
struct KernelAscent<'a> {
    q: Vec<f64>,                 // Q_X restricted to its support
    support: Vec<usize>,
    channels: &'a [Channel],
    weights: &'a [f64],
    q_ys: Vec<Vec<f64>>,         // output marginals of Q_X
    u: usize,
}

impl<'a> KernelAscent<'a> {
    fn new(
        q_x: &FiniteMeasure,
        channels: &'a [Channel],
        weights: &'a [f64],
        u: usize,
    ) -> Self {
        let support = q_x.support();
        let q = support.iter().map(|&x| q_x.weight(x)).collect();
        let q_ys = channels
            .iter()
            .map(|ch| push_forward(q_x, ch).expect("dims checked").weights().to_vec())
            .collect();
        Self {
            q,
            support,
            channels,
            weights,
            q_ys,
            u,
        }
    }

    fn dim(&self) -> usize {
        self.support.len() * self.u
    }

    /// Row-wise softmax of logits into a conditional kernel k(u|x).
    fn kernel(&self, logits: &[f64]) -> Vec<f64> {
        let n = self.support.len();
        let mut k = vec![0.0; n * self.u];
        for i in 0..n {
            let row = &logits[i * self.u..(i + 1) * self.u];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for (u, &t) in row.iter().enumerate() {
                let e = (t - mx).exp();
                k[i * self.u + u] = e;
                s += e;
            }
            for u in 0..self.u {
                k[i * self.u + u] /= s;
            }
        }
        k
    }

    fn objective(&self, k: &[f64]) -> f64 {
        let n = self.support.len();
        let mut p_u = vec![0.0; self.u];
        for i in 0..n {
            for u in 0..self.u {
                p_u[u] += self.q[i] * k[i * self.u + u];
            }
        }
        let mut i_ux = 0.0;
        for i in 0..n {
            for u in 0..self.u {
                let joint = self.q[i] * k[i * self.u + u];
                if joint > 0.0 {
                    i_ux += joint * (k[i * self.u + u] / p_u[u]).ln();
                }
            }
        }
        let mut value = -i_ux;
        for (l, ch) in self.channels.iter().enumerate() {
            if self.weights[l] == 0.0 {
                continue;
            }
            let ny = ch.output_size();
            let mut p_uy = vec![0.0; self.u * ny];
            for (i, &x) in self.support.iter().enumerate() {
                for u in 0..self.u {
                    let joint = self.q[i] * k[i * self.u + u];
                    if joint == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        p_uy[u * ny + y] += joint * ch.prob(x, y);
                    }
                }
            }
            let mut i_uy = 0.0;
            for u in 0..self.u {
                for y in 0..ny {
                    let j = p_uy[u * ny + y];
                    if j > 0.0 {
                        i_uy += j * (j / (p_u[u] * self.q_ys[l][y])).ln();
                    }
                }
            }
            value += self.weights[l] * i_uy;
        }
        value
    }

    fn gradient(&self, k: &[f64]) -> Vec<f64> {
        let n = self.support.len();
        let mut p_u = vec![0.0; self.u];
        for i in 0..n {
            for u in 0..self.u {
                p_u[u] += self.q[i] * k[i * self.u + u];
            }
        }
        let mut g = vec![0.0; n * self.u];
        for i in 0..n {
            for u in 0..self.u {
                let kv = k[i * self.u + u].max(1e-300);
                g[i * self.u + u] = -self.q[i] * (kv / p_u[u].max(1e-300)).ln();
            }
        }
        for (l, ch) in self.channels.iter().enumerate() {
            if self.weights[l] == 0.0 {
                continue;
            }
            let ny = ch.output_size();
            let mut p_uy = vec![0.0; self.u * ny];
            for (i, &x) in self.support.iter().enumerate() {
                for u in 0..self.u {
                    let joint = self.q[i] * k[i * self.u + u];
                    if joint == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        p_uy[u * ny + y] += joint * ch.prob(x, y);
                    }
                }
            }
            for (i, &x) in self.support.iter().enumerate() {
                for u in 0..self.u {
                    let mut e = 0.0;
                    for y in 0..ny {
                        let qxy = ch.prob(x, y);
                        if qxy == 0.0 {
                            continue;
                        }
                        let cond = p_uy[u * ny + y] / p_u[u].max(1e-300);
                        if cond > 0.0 {
                            e += qxy * (cond / self.q_ys[l][y]).ln();
                        }
                    }
                    g[i * self.u + u] += self.weights[l] * self.q[i] * e;
                }
            }
        }
        g
    }

    /// Gradient ascent with backtracking on row-wise softmax logits.
    fn ascend(&self, mut logits: Vec<f64>, opts: &OptimizerOptions) -> (Vec<f64>, f64) {
        let n = self.support.len();
        let mut k = self.kernel(&logits);
        let mut value = self.objective(&k);
        let mut step = 0.5;
        let mut stall = 0;
        for _ in 0..opts.max_iters {
            let g = self.gradient(&k);
            let mut dir = vec![0.0; n * self.u];
            for i in 0..n {
                let row_k = &k[i * self.u..(i + 1) * self.u];
                let row_g = &g[i * self.u..(i + 1) * self.u];
                let mean: f64 = row_k.iter().zip(row_g).map(|(a, b)| a * b).sum();
                for u in 0..self.u {
                    dir[i * self.u + u] = row_k[u] * (row_g[u] - mean);
                }
            }
            let mut improved = false;
            while step > 1e-16 {
                let cand: Vec<f64> = logits
                    .iter()
                    .zip(&dir)
                    .map(|(t, d)| (t + step * d).clamp(-300.0, 300.0))
                    .collect();
                let kc = self.kernel(&cand);
                let v = self.objective(&kc);
                if v > value {
                    let gain = v - value;
                    logits = cand;
                    k = kc;
                    value = v;
                    step = (step * 1.6).min(1e3);
                    improved = true;
                    if gain < opts.tol {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !improved || stall >= 3 {
                break;
            }
        }
        (k, value)
    }

    /// Conditional components P_{X|U=u} (full-alphabet), dropping
    /// negligible u.
    fn components(&self, k: &[f64], alphabet: usize) -> Vec<(f64, FiniteMeasure)> {
        let n = self.support.len();
        let mut out = Vec::new();
        for u in 0..self.u {
            let w: f64 = (0..n).map(|i| self.q[i] * k[i * self.u + u]).sum();
            if w < 1e-12 {
                continue;
            }
            let mut comp = vec![0.0; alphabet];
            for (i, &x) in self.support.iter().enumerate() {
                comp[x] = self.q[i] * k[i * self.u + u] / w;
            }
            out.push((w, FiniteMeasure::new(comp).expect("valid component")));
        }
        out
    }
}

/// Reweights a pool of candidate components by the LP
/// `max Σ w_u σ(P_u)` s.t. `Σ w_u P_u = Q_X`, `w ≥ 0`.
///
/// Returns `None` when the LP fails (should not happen while `Q_X`
/// itself is in the pool).
fn lp_reweight(
    q_x: &FiniteMeasure,
    pool: &[(FiniteMeasure, f64)], // (component, σ value)
) -> Option<(f64, AuxDecomposition)> {
    let k = q_x.alphabet_size();
    let n = pool.len();
    let mut a_eq = vec![vec![0.0; n]; k];
    for (col, (comp, _)) in pool.iter().enumerate() {
        for (row, a_row) in a_eq.iter_mut().enumerate() {
            a_row[col] = comp.weight(row);
        }
    }
    let b_eq: Vec<f64> = (0..k).map(|x| q_x.weight(x)).collect();
    let c: Vec<f64> = pool.iter().map(|(_, v)| *v).collect();
    match linprog::maximize(&c, &a_eq, &b_eq, &[], &[]) {
        LpOutcome::Optimal(sol) => {
            let mut u_weights = Vec::new();
            let mut components = Vec::new();
            for (col, &w) in sol.x.iter().enumerate() {
                if w > 1e-12 {
                    u_weights.push(w);
                    components.push(pool[col].0.clone());
                }
            }
            let total: f64 = u_weights.iter().sum();
            u_weights.iter_mut().for_each(|w| *w /= total);
            let dec = AuxDecomposition::new(u_weights, components).ok()?;
            Some((sol.value, dec))
        }
        _ => None,
    }
}

/// Computes `d*` with auxiliary cardinality at most `u_cap`.
///
/// Alternating scheme: softmax ascent on the conditional kernel
/// `P_{U|X}` (which preserves the barycenter by construction) from
/// multiple restarts, followed by an exact LP reweighting of the pooled
/// components. The returned value is the best mixture found; it is
/// always ≥ 0 because the constant-`U` decomposition is included.
pub fn dstar(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    weights: &[f64],
    u_cap: usize,
    opts: &OptimizerOptions,
) -> Result<(f64, AuxDecomposition)> {
    if u_cap < 1 {
        return Err(Error::Infeasible("u_cap must be at least 1".into()));
    }
    if !q_x.is_probability() {
        return Err(Error::InvalidMeasure("Q_X must be a probability".into()));
    }
    check_dims(channels.len(), weights.len(), "dstar weights")?;
    for ch in channels {
        check_dims(q_x.alphabet_size(), ch.input_size(), "dstar channel input")?;
    }
    if weights.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidParameter("weights must be ≥ 0".into()));
    }

    let alphabet = q_x.alphabet_size();
    let sigma_of = |p: &FiniteMeasure| -> f64 {
        sigma(q_x, channels, weights, p)
            .expect("dims checked")
            .to_f64()
    };

    let mut best_value = 0.0;
    let mut best_dec = AuxDecomposition::constant(q_x);
    if u_cap == 1 {
        return Ok((best_value, best_dec));
    }

    let ka = KernelAscent::new(q_x, channels, weights, u_cap);
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0xd57a_0001);
    let mut pool: Vec<(FiniteMeasure, f64)> = vec![(q_x.clone(), 0.0)];
    for &x in &q_x.support() {
        let v = FiniteMeasure::point_mass(alphabet, x);
        let s = sigma_of(&v);
        if s.is_finite() {
            pool.push((v, s));
        }
    }
    // Coarse grid probes for tiny alphabets.
    if alphabet == 2 {
        for i in 1..100 {
            let p = FiniteMeasure::new(vec![i as f64 / 100.0, 1.0 - i as f64 / 100.0]).unwrap();
            let s = sigma_of(&p);
            if s.is_finite() {
                pool.push((p, s));
            }
        }
    } else if alphabet == 3 {
        let steps = 20;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                if let Ok(p) = FiniteMeasure::new(vec![a, b, 1.0 - a - b]) {
                    let s = sigma_of(&p);
                    if s.is_finite() {
                        pool.push((p, s));
                    }
                }
            }
        }
    }

    for _ in 0..opts.restarts.max(1) {
        let logits: Vec<f64> = (0..ka.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (k, value) = ka.ascend(logits, opts);
        let comps = ka.components(&k, alphabet);
        if comps.is_empty() {
            continue;
        }
        if value > best_value {
            let (ws, cs): (Vec<f64>, Vec<FiniteMeasure>) = comps.iter().cloned().unzip();
            let total: f64 = ws.iter().sum();
            let dec = AuxDecomposition::new(ws.iter().map(|w| w / total).collect(), cs)?;
            best_value = value;
            best_dec = dec;
        }
        for (_, comp) in comps {
            let s = sigma_of(&comp);
            if s.is_finite() {
                pool.push((comp, s));
            }
        }
    }

    if let Some((lp_value, dec)) = lp_reweight(q_x, &pool) {
        if lp_value > best_value && dec.u_weights.len() <= u_cap {
            best_value = lp_value;
            best_dec = dec;
        }
    }

    // Constant U achieves exactly 0; never report below it.
    if best_value < 0.0 {
        best_value = 0.0;
        best_dec = AuxDecomposition::constant(q_x);
    }
    Ok((best_value, best_dec))
}

/// Values of `dstar` across a range of cardinality caps, for
/// sensitivity reporting.
pub fn dstar_cap_report(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    weights: &[f64],
    caps: &[usize],
    opts: &OptimizerOptions,
) -> Result<Vec<(usize, f64)>> {
    caps.iter()
        .map(|&cap| dstar(q_x, channels, weights, cap, opts).map(|(v, _)| (cap, v)))
        .collect()
}

/// Upper concave envelope of `σ` at `Q_X`, by linear programming over a
/// simplex grid with the given step. Limited to `|X| ≤ 3`.
pub fn envelope_at(
    q_x: &FiniteMeasure,
    channels: &[Channel],
    weights: &[f64],
    grid_step: f64,
) -> Result<f64> {
    let k = q_x.alphabet_size();
    if k > 3 {
        return Err(Error::InvalidParameter(format!(
            "envelope grid supports |X| ≤ 3, got {k}"
        )));
    }
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::InvalidParameter("grid step must lie in (0,1)".into()));
    }
    let mut points: Vec<FiniteMeasure> = vec![q_x.clone()];
    let steps = (1.0 / grid_step).round() as usize;
    match k {
        1 => {}
        2 => {
            for i in 0..=steps {
                let a = i as f64 / steps as f64;
                if let Ok(p) = FiniteMeasure::new(vec![a, 1.0 - a]) {
                    points.push(p);
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = i as f64 / steps as f64;
                    let b = j as f64 / steps as f64;
                    if let Ok(p) = FiniteMeasure::new(vec![a, b, 1.0 - a - b]) {
                        points.push(p);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let mut pool = Vec::with_capacity(points.len());
    for p in points {
        let s = sigma(q_x, channels, weights, &p)?.to_f64();
        if s.is_finite() {
            pool.push((p, s));
        }
    }
    lp_reweight(q_x, &pool)
        .map(|(v, _)| v)
        .ok_or_else(|| Error::Infeasible("envelope LP failed".into()))
}

/// Generic softmax-parameterized ascent over the simplex spanned by
/// `support` indices of a `dim`-sized alphabet.
fn penalized_ascent(
    dim: usize,
    support: &[usize],
    objective: &dyn Fn(&FiniteMeasure) -> f64,
    starts: usize,
    seed: u64,
    max_iters: usize,
) -> Vec<FiniteMeasure> {
    let n = support.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let embed = |p: &[f64]| {
        let mut w = vec![0.0; dim];
        for (i, &x) in support.iter().enumerate() {
            w[x] = p[i];
        }
        FiniteMeasure::new(w).expect("valid point")
    };
    let softmax = |t: &[f64]| {
        let mx = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = t.iter().map(|v| (v - mx).exp()).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        p
    };
    let mut out = Vec::with_capacity(starts);
    for _ in 0..starts {
        let mut logits: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let mut p = softmax(&logits);
        let mut value = objective(&embed(&p));
        let mut step = 0.3;
        for _ in 0..max_iters {
            // Numerical gradient in logit space (dimension is tiny here).
            let mut grad = vec![0.0; n];
            let h = 1e-6;
            for i in 0..n {
                let mut tp = logits.clone();
                tp[i] += h;
                let vp = objective(&embed(&softmax(&tp)));
                tp[i] -= 2.0 * h;
                let vm = objective(&embed(&softmax(&tp)));
                grad[i] = (vp - vm) / (2.0 * h);
            }
            let mut improved = false;
            while step > 1e-12 {
                let cand: Vec<f64> = logits
                    .iter()
                    .zip(&grad)
                    .map(|(t, g)| (t + step * g).clamp(-60.0, 60.0))
                    .collect();
                let pc = softmax(&cand);
                let v = objective(&embed(&pc));
                if v > value + 1e-14 {
                    logits = cand;
                    p = pc;
                    value = v;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        out.push(embed(&p));
    }
    out
}

/// The cost-constrained single-letter value `g(1)`: supremum of
/// `Σ_u w_u [ Σ_j c_j D(P_{Y_j|u}‖ν_j) − D(P_{X|u}‖μ) ]` over mixtures
/// whose average cost meets every budget. With no active budgets this
/// reduces to the plain best constant.
pub fn constrained_single_letter(
    inst: &GbllInstance,
    costs: &[CostFunction],
    u_cap: usize,
    opts: &OptimizerOptions,
) -> Result<f64> {
    if u_cap < 1 {
        return Err(Error::Infeasible("u_cap must be at least 1".into()));
    }
    let alphabet = inst.alphabet_size();
    for cf in costs {
        check_dims(cf.values.len(), alphabet, "cost function length")?;
    }
    // Symbols allowed in the support: dominated by μ and not excluded by
    // an infinite cost under a finite budget.
    let allowed: Vec<usize> = (0..alphabet)
        .filter(|&x| {
            inst.mu.weight(x) > 0.0
                && costs
                    .iter()
                    .all(|cf| cf.values[x].is_finite() || cf.epsilon == f64::INFINITY)
        })
        .collect();
    if allowed.is_empty() {
        return Err(Error::Infeasible(
            "every symbol is excluded by the cost constraints".into(),
        ));
    }
    let active: Vec<&CostFunction> = costs.iter().filter(|cf| cf.epsilon.is_finite()).collect();

    // Restricted instance whose support is exactly the allowed set.
    let mut mu_w = vec![0.0; alphabet];
    for &x in &allowed {
        mu_w[x] = inst.mu.weight(x);
    }
    let restricted = GbllInstance::new(
        FiniteMeasure::new(mu_w)?,
        inst.channels.clone(),
        inst.nus.clone(),
        inst.weights.clone(),
    )?;

    let obj = |p: &FiniteMeasure| -> f64 {
        crate::gbll::gbll_objective(&restricted, p)
            .expect("dims checked")
            .to_f64()
    };

    // Candidate pool: unconstrained maximizer, penalized maximizers,
    // vertices, μ normalized, structured grid for tiny alphabets, and
    // random simplex points.
    let mut pool: Vec<FiniteMeasure> = Vec::new();
    let unconstrained: GbllResult = gbll_constant(&restricted, opts);
    if !unconstrained.diverged {
        pool.push(unconstrained.maximizer.clone());
    }
    for &x in &allowed {
        pool.push(FiniteMeasure::point_mass(alphabet, x));
    }
    pool.push(restricted.mu.normalized());
    // Mean cost with the 0 · ∞ = 0 convention (excluded symbols carry
    // no mass by construction).
    let mean_cost = |p: &FiniteMeasure, cf: &CostFunction| -> f64 {
        (0..p.alphabet_size())
            .filter(|&x| p.weight(x) > 0.0)
            .map(|x| p.weight(x) * cf.values[x])
            .sum()
    };
    for lambda in [3.0, 30.0, 300.0] {
        let pen_obj = |p: &FiniteMeasure| -> f64 {
            let mut v = obj(p);
            for cf in &active {
                let mean = mean_cost(p, cf);
                if mean > cf.epsilon {
                    v -= lambda * (mean - cf.epsilon);
                }
            }
            v
        };
        pool.extend(penalized_ascent(
            alphabet,
            &allowed,
            &pen_obj,
            4,
            opts.seed ^ lambda as u64,
            400,
        ));
    }
    if allowed.len() == 2 {
        for i in 1..60 {
            let a = i as f64 / 60.0;
            let mut w = vec![0.0; alphabet];
            w[allowed[0]] = a;
            w[allowed[1]] = 1.0 - a;
            pool.push(FiniteMeasure::new(w).unwrap());
        }
    } else if allowed.len() == 3 {
        let steps = 15;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 / steps as f64;
                let b = j as f64 / steps as f64;
                let mut w = vec![0.0; alphabet];
                w[allowed[0]] = a;
                w[allowed[1]] = b;
                w[allowed[2]] = 1.0 - a - b;
                if let Ok(p) = FiniteMeasure::new(w) {
                    pool.push(p);
                }
            }
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0xc057);
    for _ in 0..200 {
        let mut w = vec![0.0; alphabet];
        for &x in &allowed {
            w[x] = -rng.random::<f64>().ln();
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        pool.push(FiniteMeasure::new(w).unwrap());
    }

    // LP over the pool: max Σ w_u v_u  s.t.  Σ w_u E_{P_u}[τ_α] ≤ ε_α,
    // Σ w_u = 1.
    let cols: Vec<(&FiniteMeasure, f64)> = pool
        .iter()
        .map(|p| (p, obj(p)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    if cols.is_empty() {
        return Err(Error::Infeasible("no finite-objective candidates".into()));
    }
    let n = cols.len();
    let a_eq = vec![vec![1.0; n]];
    let b_eq = vec![1.0];
    let mut a_ub = Vec::with_capacity(active.len());
    let mut b_ub = Vec::with_capacity(active.len());
    for cf in &active {
        a_ub.push(cols.iter().map(|(p, _)| mean_cost(p, cf)).collect());
        b_ub.push(cf.epsilon);
    }
    let c: Vec<f64> = cols.iter().map(|(_, v)| *v).collect();
    match linprog::maximize(&c, &a_eq, &b_eq, &a_ub, &b_ub) {
        LpOutcome::Optimal(sol) => {
            let support = sol.x.iter().filter(|w| **w > 1e-12).count();
            if support > u_cap {
                // Re-solve restricted to the u_cap heaviest columns so the
                // reported value honors the cardinality cap.
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| sol.x[b].partial_cmp(&sol.x[a]).unwrap());
                let keep: Vec<usize> = idx.into_iter().take(u_cap).collect();
                let c2: Vec<f64> = keep.iter().map(|&i| c[i]).collect();
                let a_eq2 = vec![vec![1.0; keep.len()]];
                let a_ub2: Vec<Vec<f64>> = a_ub
                    .iter()
                    .map(|row| keep.iter().map(|&i| row[i]).collect())
                    .collect();
                if let LpOutcome::Optimal(sol2) =
                    linprog::maximize(&c2, &a_eq2, &b_eq, &a_ub2, &b_ub)
                {
                    return Ok(sol2.value);
                }
            }
            Ok(sol.value)
        }
        LpOutcome::Infeasible => Err(Error::Infeasible(
            "cost constraints admit no distribution".into(),
        )),
        LpOutcome::Unbounded => unreachable!("mixture weights are bounded"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fm(w: &[f64]) -> FiniteMeasure {
        FiniteMeasure::new(w.to_vec()).unwrap()
    }

    fn opts() -> OptimizerOptions {
        OptimizerOptions {
            restarts: 32,
            ..OptimizerOptions::default()
        }
    }

    fn random_source(rng: &mut ChaCha12Rng, nx: usize, nys: &[usize]) -> (FiniteMeasure, Vec<Channel>) {
        let raw: Vec<f64> = (0..nx).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let q = fm(&raw.iter().map(|w| w / s).collect::<Vec<_>>());
        let channels = nys
            .iter()
            .map(|&ny| {
                Channel::new(
                    (0..nx)
                        .map(|_| {
                            let row: Vec<f64> =
                                (0..ny).map(|_| rng.random_range(0.05..1.0)).collect();
                            let s: f64 = row.iter().sum();
                            row.iter().map(|v| v / s).collect()
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        (q, channels)
    }

    #[test]
    fn sigma_vanishes_at_source() {
        let q = fm(&[0.3, 0.7]);
        let chs = vec![Channel::bsc(0.2)];
        let v = sigma(&q, &chs, &[1.7], &q).unwrap();
        assert_abs_diff_eq!(v.expect_finite("finite"), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sigma_zero_weights_is_negative_divergence() {
        let q = fm(&[0.3, 0.7]);
        let chs = vec![Channel::bsc(0.2)];
        let p = fm(&[0.6, 0.4]);
        let v = sigma(&q, &chs, &[0.0], &p).unwrap().expect_finite("finite");
        let d = crate::measures::rel_entropy(&p, &q).unwrap().expect_finite("finite");
        assert_abs_diff_eq!(v, -d, epsilon = 1e-14);
        assert!(v <= 0.0);
    }

    #[test]
    fn sigma_matches_gbll_objective() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..20 {
            let (q, chs) = random_source(&mut rng, 3, &[2, 3]);
            let weights = vec![rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)];
            let inst = GbllInstance::from_source(q.clone(), chs.clone(), weights.clone()).unwrap();
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let p = fm(&raw.iter().map(|v| v / s).collect::<Vec<_>>());
            assert_abs_diff_eq!(
                sigma(&q, &chs, &weights, &p).unwrap().expect_finite("f"),
                crate::gbll::gbll_objective(&inst, &p).unwrap().expect_finite("f"),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn dstar_zero_for_unit_weight() {
        // c = 1: I(U;Y) ≤ I(U;X) by data processing, so d* = 0.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..5 {
            let (q, chs) = random_source(&mut rng, 3, &[3]);
            let (v, dec) = dstar(&q, &chs, &[1.0], 4, &opts()).unwrap();
            assert!((0.0..=1e-8).contains(&v), "d* = {v}");
            assert!(dec.barycenter_gap(&q) < 1e-9);
        }
    }

    #[test]
    fn dstar_identity_doubled_weight_is_entropy() {
        // c = 2, identity channel: sup 2I − I = H(Q_X) = log 2.
        let q = FiniteMeasure::uniform(2);
        let (v, dec) = dstar(&q, &[Channel::identity(2)], &[2.0], 3, &opts()).unwrap();
        assert_abs_diff_eq!(v, 2.0_f64.ln(), epsilon = 1e-6);
        assert!(dec.barycenter_gap(&q) < 1e-9);
    }

    #[test]
    fn dstar_dsbs_hypercontractivity_threshold() {
        // DSBS(p = 0.11): s*(X;Y) = ρ² with ρ = 1 − 2p; d* = 0 exactly
        // for c ≤ 1/ρ² and becomes positive above the threshold.
        let rho: f64 = 1.0 - 2.0 * 0.11;
        let q = FiniteMeasure::uniform(2);
        let chs = vec![Channel::bsc(0.11)];
        let (below, _) = dstar(&q, &chs, &[0.95 / (rho * rho)], 4, &opts()).unwrap();
        assert!(below <= 1e-6, "below threshold: {below}");
        let (above, _) = dstar(&q, &chs, &[1.0 / (rho * rho) + 0.05], 4, &opts()).unwrap();
        assert!(above > 1e-4, "above threshold: {above}");
    }

    #[test]
    fn dstar_bounded_by_gbll_constant() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..5 {
            let (q, chs) = random_source(&mut rng, 3, &[2]);
            let c = rng.random_range(1.0..2.5);
            let (ds, _) = dstar(&q, &chs, &[c], 4, &opts()).unwrap();
            let inst = GbllInstance::from_source(q.clone(), chs.clone(), vec![c]).unwrap();
            let d = gbll_constant(&inst, &opts()).constant.expect_finite("finite");
            assert!(
                ds <= d + 1e-6,
                "envelope value {ds} exceeds global sup {d}"
            );
        }
    }

    #[test]
    fn dstar_cap_sensitivity_stabilizes() {
        let q = FiniteMeasure::uniform(2);
        let chs = vec![Channel::bsc(0.11)];
        let c = 1.0 / (0.78f64 * 0.78) + 0.1;
        let report = dstar_cap_report(&q, &chs, &[c], &[1, 2, 3, 4], &opts()).unwrap();
        for w in report.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9, "not nondecreasing: {report:?}");
        }
        // |X| + 1 = 3 suffices on this instance.
        assert_abs_diff_eq!(report[2].1, report[3].1, epsilon = 1e-6);
    }

    #[test]
    fn envelope_unit_weight_zero() {
        let q = fm(&[0.4, 0.6]);
        let v = envelope_at(&q, &[Channel::bsc(0.2)], &[1.0], 1e-3).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn envelope_zero_weights_zero() {
        let q = fm(&[0.4, 0.6]);
        let v = envelope_at(&q, &[Channel::bsc(0.2)], &[0.0], 1e-3).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn envelope_agrees_with_dstar_on_binary() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for _ in 0..4 {
            let (q, chs) = random_source(&mut rng, 2, &[2]);
            let c = rng.random_range(1.2..2.5);
            let (ds, _) = dstar(&q, &chs, &[c], 3, &opts()).unwrap();
            let env = envelope_at(&q, &chs, &[c], 1e-3).unwrap();
            assert!(
                (ds - env).abs() <= 2e-3,
                "dstar {ds} vs envelope {env}"
            );
        }
    }

    #[test]
    fn envelope_rejects_large_alphabets() {
        let q = FiniteMeasure::uniform(4);
        let ch = Channel::identity(4);
        assert!(envelope_at(&q, &[ch], &[1.0], 0.01).is_err());
    }

    #[test]
    fn constrained_without_costs_equals_gbll_constant() {
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        let (q, chs) = random_source(&mut rng, 3, &[2]);
        let inst = GbllInstance::from_source(q, chs, vec![1.8]).unwrap();
        let free = CostFunction::new(vec![0.0; 3], f64::INFINITY).unwrap();
        let g1 = constrained_single_letter(&inst, &[free], 4, &opts()).unwrap();
        let d = gbll_constant(&inst, &opts()).constant.expect_finite("finite");
        assert_abs_diff_eq!(g1, d, epsilon = 1e-6);
    }

    #[test]
    fn constrained_singleton_costs_match_dstar() {
        // τ_x(·) = 1{·=x}/Q(x) − 1 with ε = 0 forces P_X = Q_X, so the
        // value is the concave envelope at Q_X.
        let mut rng = ChaCha12Rng::seed_from_u64(46);
        let (q, chs) = random_source(&mut rng, 2, &[2]);
        let c = 2.2;
        let inst = GbllInstance::from_source(q.clone(), chs.clone(), vec![c]).unwrap();
        let costs: Vec<CostFunction> = (0..2)
            .map(|x| {
                let vals = (0..2)
                    .map(|y| if y == x { 1.0 / q.weight(x) - 1.0 } else { -1.0 })
                    .collect();
                CostFunction::new(vals, 0.0).unwrap()
            })
            .collect();
        let g1 = constrained_single_letter(&inst, &costs, 3, &opts()).unwrap();
        let (ds, _) = dstar(&q, &chs, &[c], 3, &opts()).unwrap();
        assert!(g1 <= ds + 1e-6, "g1 = {g1} vs d* = {ds}");
        assert!(g1 >= ds - 2e-3, "g1 = {g1} vs d* = {ds}");
    }

    #[test]
    fn constrained_infinite_costs_restrict_support() {
        // +∞ cost on symbol 2 with finite ε: optimizer must avoid it.
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let (q, chs) = random_source(&mut rng, 3, &[2]);
        let inst = GbllInstance::from_source(q, chs, vec![1.5]).unwrap();
        let cost = CostFunction::new(vec![0.0, 0.0, f64::INFINITY], 0.5).unwrap();
        let g1 = constrained_single_letter(&inst, &[cost], 4, &opts()).unwrap();
        // Compare against the instance restricted to {0, 1}.
        let mut mu_w: Vec<f64> = inst.mu.weights().to_vec();
        mu_w[2] = 0.0;
        let restricted = GbllInstance::new(
            FiniteMeasure::new(mu_w).unwrap(),
            inst.channels.clone(),
            inst.nus.clone(),
            inst.weights.clone(),
        )
        .unwrap();
        let d = gbll_constant(&restricted, &opts()).constant.expect_finite("f");
        assert_abs_diff_eq!(g1, d, epsilon = 1e-6);
    }

    #[test]
    fn constrained_infeasible_costs_error() {
        assert!(CostFunction::new(vec![5.0, 7.0], 1.0).is_err());
        let q = FiniteMeasure::uniform(2);
        let inst = GbllInstance::from_source(q, vec![Channel::bsc(0.3)], vec![1.0]).unwrap();
        // Jointly infeasible pair of budgets: τ and −τ cannot both have
        // mean ≤ −1.
        let c1 = CostFunction::new(vec![-2.0, 2.0], -1.0).unwrap();
        let c2 = CostFunction::new(vec![2.0, -2.0], -1.0).unwrap();
        let out = constrained_single_letter(&inst, &[c1, c2], 3, &opts());
        assert!(matches!(out, Err(Error::Infeasible(_))), "{out:?}");
    }

    #[test]
    fn two_letter_value_bounded_by_single_letter() {
        // g(2) ≤ g(1): brute-force the two-letter value by an LP over a
        // dense candidate pool on the X² simplex with averaged costs.
        let q = fm(&[0.45, 0.55]);
        let chs = vec![Channel::bsc(0.15)];
        let c = 1.9;
        let inst = GbllInstance::from_source(q.clone(), chs, vec![c]).unwrap();
        let tau = vec![-0.4, 0.6];
        let eps = 0.1;
        let cost = CostFunction::new(tau.clone(), eps).unwrap();
        let g1 = constrained_single_letter(&inst, &[cost], 3, &opts()).unwrap();

        let inst2 = inst.tensor_power(2).unwrap();
        // Per-letter averaged cost on X²: (τ(x₁) + τ(x₂)) / 2.
        let tau2: Vec<f64> = (0..4)
            .map(|idx| (tau[idx / 2] + tau[idx % 2]) / 2.0)
            .collect();
        let mut rng = ChaCha12Rng::seed_from_u64(48);
        let mut pool: Vec<FiniteMeasure> = Vec::new();
        for x in 0..4 {
            pool.push(FiniteMeasure::point_mass(4, x));
        }
        for _ in 0..4000 {
            let raw: Vec<f64> = (0..4).map(|_| -rng.random::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            pool.push(fm(&raw.iter().map(|v| v / s).collect::<Vec<_>>()));
        }
        let cols: Vec<(f64, f64)> = pool
            .iter()
            .map(|p| {
                let v = crate::gbll::gbll_objective(&inst2, p).unwrap().to_f64();
                let t: f64 = (0..4).map(|x| p.weight(x) * tau2[x]).sum();
                (v, t)
            })
            .filter(|(v, _)| v.is_finite())
            .collect();
        let objective: Vec<f64> = cols.iter().map(|(v, _)| *v).collect();
        let a_eq = vec![vec![1.0; cols.len()]];
        let a_ub = vec![cols.iter().map(|(_, t)| *t).collect::<Vec<f64>>()];
        let g2 = match linprog::maximize(&objective, &a_eq, &[1.0], &a_ub, &[eps]) {
            LpOutcome::Optimal(sol) => sol.value / 2.0,
            other => panic!("brute-force LP failed: {other:?}"),
        };
        assert!(g2 <= g1 + 1e-5, "g(2) = {g2} exceeds g(1) = {g1}");
    }
}
