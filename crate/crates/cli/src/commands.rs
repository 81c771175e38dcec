//! Subcommand implementations. All computations are deterministic given
//! the explicit seeds; output ordering is fixed.

use crate::instance::{self, Construction, InstanceFile};
use crate::CliError;
use gbll_core::bounds;
use gbll_core::crsim;
use gbll_core::envelope;
use gbll_core::ext_real::ExtReal;
use gbll_core::gaussian;
use gbll_core::gbll::{self, OptimizerOptions};
use gbll_core::measures::{Channel, FiniteMeasure, GbllInstance};
use gbll_core::smoothing::{self, SmoothOptions};
use std::path::Path;

const LN_2: f64 = std::f64::consts::LN_2;

fn unit(bits: bool) -> &'static str {
    if bits {
        "bits"
    } else {
        "nats"
    }
}

fn conv(v: f64, bits: bool) -> f64 {
    if bits {
        v / LN_2
    } else {
        v
    }
}

fn show(v: ExtReal, bits: bool) -> String {
    match v {
        ExtReal::Finite(x) => format!("{:.9}", conv(x, bits)),
        ExtReal::PosInf => "+inf".into(),
        ExtReal::NegInf => "-inf".into(),
    }
}

fn require_discrete(
    file: &InstanceFile,
) -> Result<(instance::DiscreteInstance, String), CliError> {
    match file {
        InstanceFile::DiscreteGbll {
            metadata,
            mu,
            channels,
            nus,
            weights,
        } => {
            let built = instance::build_discrete(mu, channels, nus, weights)?;
            let label = metadata.get("name").cloned().unwrap_or_default();
            Ok((built, label))
        }
        _ => Err(CliError::Schema(
            "expected a discrete-gbll instance file".into(),
        )),
    }
}

fn tensor_guard(instance: &GbllInstance, n: usize) -> Result<GbllInstance, CliError> {
    let size = (instance.alphabet_size() as u128).saturating_pow(n as u32);
    if size > 1_000_000 {
        return Err(CliError::ResourceCap(format!(
            "tensor power alphabet {size} exceeds the 1e6 cap"
        )));
    }
    instance.tensor_power(n).map_err(CliError::from)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_gbll(
    path: &Path,
    delta: Option<f64>,
    tensor_n: usize,
    restarts: usize,
    seed: u64,
    bits: bool,
    u_cap: Option<usize>,
) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let (built, label) = require_discrete(&file)?;
    let base = built.instance;
    let inst = tensor_guard(&base, tensor_n)?;
    let per_letter = tensor_n as f64;

    let opts = OptimizerOptions::default()
        .with_restarts(restarts)
        .with_seed(seed);
    let res = gbll::gbll_constant(&inst, &opts);

    if !label.is_empty() {
        println!("instance: {label}");
    }
    println!(
        "alphabet |X| = {}, outputs m = {}, tensor n = {tensor_n}",
        base.alphabet_size(),
        base.m()
    );
    let d_scaled = match res.constant {
        ExtReal::Finite(v) => ExtReal::Finite(v / per_letter),
        inf => inf,
    };
    println!("d (per letter)   = {} {}", show(d_scaled, bits), unit(bits));
    if res.diverged {
        println!("diverged: the supremum is +inf");
    }
    if res.possibly_unattained {
        println!("note: maximizer sits on the simplex boundary (possibly unattained)");
    }

    if built.source_matched {
        let cap = u_cap.unwrap_or_else(|| envelope::default_u_cap(base.alphabet_size()));
        let (ds, _) = envelope::dstar(&base.mu, &base.channels, &base.weights, cap, &opts)?;
        println!(
            "d* (u_cap = {cap}) = {:.9} {}",
            conv(ds, bits),
            unit(bits)
        );
    } else {
        println!("d* skipped: references are not the source push-forwards");
    }

    if let ExtReal::Finite(d) = res.constant {
        let audit_opts = OptimizerOptions {
            restarts: restarts.min(16),
            ..OptimizerOptions::default()
        }
        .with_seed(seed);
        let (_, gap) = gbll::worst_case_functions(&inst, d, &audit_opts);
        println!("duality gap at d = {}", show(gap, bits));
    }

    if let Some(delta) = delta {
        let sm_opts = SmoothOptions {
            inner: opts.clone(),
            ..SmoothOptions::default()
        };
        let sm = smoothing::smooth_constant(
            &inst.mu,
            &inst.channels,
            &inst.nus,
            &inst.weights,
            delta,
            &sm_opts,
        )?;
        let scaled = match sm.value {
            ExtReal::Finite(v) => ExtReal::Finite(v / per_letter),
            inf => inf,
        };
        println!(
            "d_delta (delta = {delta}, per letter) = {} {} (E1 used {:.6})",
            show(scaled, bits),
            unit(bits),
            sm.e1_used
        );
    }

    print!("maximizer P = [");
    let w = res.maximizer.weights();
    for (i, v) in w.iter().enumerate() {
        print!("{}{:.6}", if i > 0 { ", " } else { "" }, v);
    }
    println!("]");
    Ok(())
}

pub fn cmd_dstar(
    path: &Path,
    u_cap: Option<usize>,
    restarts: usize,
    seed: u64,
    bits: bool,
) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let (built, label) = require_discrete(&file)?;
    let base = built.instance;
    if !label.is_empty() {
        println!("instance: {label}");
    }
    let opts = OptimizerOptions::default()
        .with_restarts(restarts)
        .with_seed(seed);
    let cap = u_cap.unwrap_or_else(|| envelope::default_u_cap(base.alphabet_size()));
    let (ds, dec) = envelope::dstar(&base.mu, &base.channels, &base.weights, cap, &opts)?;
    println!("d* (u_cap = {cap}) = {:.9} {}", conv(ds, bits), unit(bits));
    println!(
        "decomposition: {} components, barycenter gap {:.2e}",
        dec.u_weights.len(),
        dec.barycenter_gap(&base.mu)
    );
    println!("cap sensitivity:");
    let caps: Vec<usize> = (1..=cap + 1).collect();
    for (c, v) in envelope::dstar_cap_report(&base.mu, &base.channels, &base.weights, &caps, &opts)?
    {
        println!("  u_cap {c:2} -> {:.9}", conv(v, bits));
    }
    if base.alphabet_size() <= 3 {
        let step = if base.alphabet_size() == 2 { 1e-3 } else { 2e-2 };
        let env = envelope::envelope_at(&base.mu, &base.channels, &base.weights, step)?;
        println!(
            "concave-envelope oracle (grid {step}) = {:.9} {}",
            conv(env, bits),
            unit(bits)
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_smooth(
    path: &Path,
    delta: f64,
    tensor_n: usize,
    curve: Option<usize>,
    restarts: usize,
    seed: u64,
    bits: bool,
    allow_inflation: bool,
) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let (built, label) = require_discrete(&file)?;
    let base = built.instance;
    if !label.is_empty() {
        println!("instance: {label}");
    }
    let sm_opts = SmoothOptions {
        allow_inflation,
        inner: OptimizerOptions::default()
            .with_restarts(restarts)
            .with_seed(seed),
        ..SmoothOptions::default()
    };

    if let Some(n_max) = curve {
        if !built.source_matched {
            return Err(CliError::Schema(
                "smooth-rate curves need source-matched references (omit `nus`)".into(),
            ));
        }
        println!("n,value_per_letter,d_single,dstar,slack_vs_dstar");
        for pt in smoothing::smooth_rate_curve(
            &base.mu,
            &base.channels,
            &base.weights,
            delta,
            n_max,
            &sm_opts,
        )? {
            println!(
                "{},{:.9},{:.9},{:.9},{:.9}",
                pt.n,
                conv(pt.value_per_letter, bits),
                conv(pt.d_single, bits),
                conv(pt.dstar, bits),
                conv(pt.slack_vs_dstar, bits)
            );
        }
        return Ok(());
    }

    let inst = tensor_guard(&base, tensor_n)?;
    let sm = smoothing::smooth_constant(
        &inst.mu,
        &inst.channels,
        &inst.nus,
        &inst.weights,
        delta,
        &sm_opts,
    )?;
    let per = tensor_n as f64;
    let scaled = match sm.value {
        ExtReal::Finite(v) => ExtReal::Finite(v / per),
        inf => inf,
    };
    println!(
        "d_delta (delta = {delta}, n = {tensor_n}, per letter) = {} {}",
        show(scaled, bits),
        unit(bits)
    );
    println!("E1 used = {:.6}", sm.e1_used);
    let cut = (0..inst.alphabet_size())
        .filter(|&x| sm.smoothing_measure.weight(x) < inst.mu.weight(x) - 1e-15)
        .count();
    println!(
        "smoothing measure: {cut} of {} points reduced, total mass {:.6}{}",
        inst.alphabet_size(),
        sm.smoothing_measure.total_mass(),
        if sm.used_inflation {
            " (uses inflation)"
        } else {
            ""
        }
    );
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<Vec<f64>>, CliError> {
    // Axes separated by 'x', each "start:stop:count"; the grid is the
    // cartesian product.
    let mut axes: Vec<Vec<f64>> = Vec::new();
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    for part in spec.split('x') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(CliError::Schema(format!(
                "grid axis `{part}` is not start:stop:count"
            )));
        }
        let start: f64 = fields[0]
            .parse()
            .map_err(|_| CliError::Schema(format!("bad grid start `{}`", fields[0])))?;
        let stop: f64 = fields[1]
            .parse()
            .map_err(|_| CliError::Schema(format!("bad grid stop `{}`", fields[1])))?;
        let count: usize = fields[2]
            .parse()
            .map_err(|_| CliError::Schema(format!("bad grid count `{}`", fields[2])))?;
        if count == 0 {
            axes.push(Vec::new());
        } else if count == 1 {
            axes.push(vec![start]);
        } else {
            axes.push(
                (0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            );
        }
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::new();
        for prefix in &grid {
            for &v in &axis {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        grid = next;
    }
    if grid.len() == 1 && grid[0].is_empty() {
        grid.clear();
    }
    Ok(grid)
}

fn parse_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Schema(format!("bad number `{s}` in list")))
        })
        .collect()
}

pub fn cmd_region(
    path: &Path,
    c_grid: Option<&str>,
    rj: Option<&str>,
    restarts: usize,
    seed: u64,
) -> Result<(), CliError> {
    let file = instance::load(path)?;
    match &file {
        InstanceFile::DiscreteGbll { .. } => {
            let (built, _) = require_discrete(&file)?;
            let base = built.instance;
            let grid = parse_grid(c_grid.ok_or_else(|| {
                CliError::Schema("discrete instances need --c-grid".into())
            })?)?;
            for row in &grid {
                if row.len() != base.m() {
                    return Err(CliError::Schema(format!(
                        "grid rows must have m = {} entries",
                        base.m()
                    )));
                }
            }
            let r_j = match rj {
                Some(s) => parse_list(s)?,
                None => vec![0.0; base.m()],
            };
            if r_j.len() != base.m() {
                return Err(CliError::Schema("--rj length must equal m".into()));
            }
            let opts = OptimizerOptions::default()
                .with_restarts(restarts)
                .with_seed(seed);
            let cap = envelope::default_u_cap(base.alphabet_size());
            let dstar_fn = |c: &[f64]| -> f64 {
                envelope::dstar(&base.mu, &base.channels, c, cap, &opts)
                    .map(|(v, _)| v)
                    .unwrap_or(f64::NAN)
            };
            emit_region_csv(&dstar_fn, &grid, &r_j, base.m());
            Ok(())
        }
        InstanceFile::BoundsQuery {
            r_j,
            c_grid: file_grid,
            dstar_values,
            points,
            ..
        } => {
            if dstar_values.len() != file_grid.len() {
                return Err(CliError::Schema(
                    "dstar_values must match c_grid in length".into(),
                ));
            }
            let m = r_j.len();
            for row in file_grid {
                if row.len() != m {
                    return Err(CliError::Schema("c_grid rows must have m entries".into()));
                }
            }
            let lookup = |c: &[f64]| -> f64 {
                file_grid
                    .iter()
                    .position(|row| row == c)
                    .map(|i| dstar_values[i])
                    .unwrap_or(f64::NAN)
            };
            emit_region_csv(&lookup, file_grid, r_j, m);
            for pt in points {
                let point = bounds::RatePoint::new(pt.r, pt.r_j.clone())
                    .map_err(|e| CliError::Schema(e.to_string()))?;
                for (c, ds) in file_grid.iter().zip(dstar_values) {
                    let ok = bounds::region_check(&point, *ds, c);
                    eprintln!(
                        "check R={} R_j={:?} at c={:?}: {}",
                        pt.r,
                        pt.r_j,
                        c,
                        if ok { "inside" } else { "outside" }
                    );
                }
            }
            Ok(())
        }
        _ => Err(CliError::Schema(
            "region expects a discrete-gbll or bounds-query file".into(),
        )),
    }
}

fn emit_region_csv(dstar_fn: &dyn Fn(&[f64]) -> f64, grid: &[Vec<f64>], r_j: &[f64], m: usize) {
    let header: Vec<String> = (1..=m)
        .map(|j| format!("c_{j}"))
        .chain(["dstar".into(), "R_max".into()])
        .collect();
    println!("{}", header.join(","));
    for point in bounds::region_trace(dstar_fn, grid, r_j) {
        match point.r_max {
            Some(r_max) => {
                let cs: Vec<String> = point.weights.iter().map(|c| format!("{c}")).collect();
                println!("{},{:.9},{:.9}", cs.join(","), point.dstar, r_max);
            }
            None => {
                eprintln!(
                    "note: skipping c = {:?} (sum of weights ≤ 1, no rate cap)",
                    point.weights
                );
            }
        }
    }
}

pub fn cmd_gaussian(path: &Path, eps_list: Option<&str>, bits: bool) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let InstanceFile::Gaussian {
        sigma,
        blocks,
        maps,
        noise,
        weights,
        ..
    } = &file
    else {
        return Err(CliError::Schema("expected a gaussian instance file".into()));
    };
    let inst = instance::build_gaussian(sigma, blocks, maps, noise, weights)?;
    println!("dimension k = {}, outputs m = {}", inst.dim(), inst.m());
    let f = gaussian::gaussian_f(inst.sigma(), &inst)?;
    println!("F(Sigma) = {} {}", show(f.value, bits), unit(bits));
    if let Some(reason) = &f.diverged_reason {
        println!("  diverged: {reason}");
    }
    let c = gaussian::gaussian_c(&inst)?;
    println!("C        = {:.9} {}", conv(c, bits), unit(bits));
    let ds = gaussian::gaussian_dstar(&inst)?;
    println!("d*       = {} {}", show(ds, bits), unit(bits));
    match gaussian::variance_v(&inst) {
        Ok(v) => println!("V        = {:.9}", v),
        Err(e) => println!("V        = n/a ({e})"),
    }
    if let Some(spec) = eps_list {
        for eps in parse_list(spec)? {
            let f_eps = gaussian::gaussian_f(&(inst.sigma() * (1.0 + eps)), &inst)?;
            match (f_eps.value, f.value) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => println!(
                    "F((1+{eps})Sigma) - F(Sigma) = {:.9} {}",
                    conv(a - b, bits),
                    unit(bits)
                ),
                _ => println!("F((1+{eps})Sigma) - F(Sigma) = n/a (diverged)"),
            }
        }
    }
    Ok(())
}

fn build_scheme(
    file: &InstanceFile,
) -> Result<(crsim::CrScheme, crsim::JointSource), CliError> {
    let InstanceFile::CrScheme {
        source,
        n,
        k_size,
        w_sizes,
        construction,
        ..
    } = file
    else {
        return Err(CliError::Schema("expected a cr-scheme instance file".into()));
    };
    let src = instance::build_source(source)?;
    let scheme = match construction {
        Construction::RandomBinning { seed } => {
            crsim::random_binning_scheme(&src, *n, *k_size, w_sizes, *seed)?
        }
        Construction::Explicit { encoder, decoders } => crsim::CrScheme::new(
            *n,
            src.clone(),
            *k_size,
            w_sizes.clone(),
            encoder.clone(),
            decoders.clone(),
        )?,
    };
    Ok((scheme, src))
}

pub fn cmd_certify(
    path: &Path,
    delta: Option<f64>,
    weights_spec: Option<&str>,
    restarts: usize,
    seed: u64,
) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let (scheme, source) = build_scheme(&file)?;
    let weights = match weights_spec {
        Some(s) => parse_list(s)?,
        None => vec![2.0; source.m()],
    };
    if weights.len() != source.m() {
        return Err(CliError::Schema(format!(
            "--weights needs {} entries",
            source.m()
        )));
    }
    let opts = OptimizerOptions::default()
        .with_restarts(restarts)
        .with_seed(seed);
    let inst = source.gbll_instance(&weights)?;
    let d1 = gbll::gbll_constant(&inst, &opts).constant;
    let eval = crsim::evaluate_scheme(&scheme)?;
    println!(
        "scheme: n={} |K|={} |W|={:?}  p_agree={:.6} tv_to_ideal={:.6}",
        scheme.n, scheme.k_size, scheme.w_sizes, eval.p_agree, eval.tv_to_ideal
    );

    let mut all_sound = true;
    let d_plain = match d1 {
        ExtReal::Finite(d) => ExtReal::Finite(scheme.n as f64 * d),
        inf => inf,
    };
    let report = crsim::converse_certificate(&scheme, &weights, d_plain, 0.0)?;
    print_certificate("unsmoothed", &report);
    all_sound &= report.sound;

    if let Some(delta) = delta {
        let inst_n = inst.tensor_power(scheme.n)?;
        let sm = smoothing::smooth_constant(
            &inst_n.mu,
            &inst_n.channels,
            &inst_n.nus,
            &inst_n.weights,
            delta,
            &SmoothOptions {
                inner: opts.clone(),
                ..SmoothOptions::default()
            },
        )?;
        let report = crsim::converse_certificate(&scheme, &weights, sm.value, delta)?;
        print_certificate(&format!("smoothed delta={delta}"), &report);
        all_sound &= report.sound;
    }
    if !all_sound {
        return Err(CliError::Unsound(
            "a converse certificate reported UNSOUND".into(),
        ));
    }
    Ok(())
}

fn print_certificate(label: &str, report: &crsim::CertificateReport) {
    println!(
        "certificate[{label}]: d={} delta={:.4} bound={}{} actual_tv={:.6} -> {}",
        show(report.d_used, false),
        report.delta_used,
        show(report.bound, false),
        if report.vacuous { " (vacuous)" } else { "" },
        report.actual_tv,
        if report.sound { "SOUND" } else { "UNSOUND" }
    );
}

pub fn cmd_simulate(path: &Path, perturb: Option<f64>, seed: u64) -> Result<(), CliError> {
    let file = instance::load(path)?;
    let (mut scheme, _) = build_scheme(&file)?;
    if let Some(eps) = perturb {
        if !(0.0..=1.0).contains(&eps) {
            return Err(CliError::Schema("--perturb must lie in [0,1]".into()));
        }
        scheme = scheme.perturb_decoders(eps, seed);
    }
    let eval = crsim::evaluate_scheme(&scheme)?;
    println!(
        "scheme: n={} |K|={} |W|={:?}",
        scheme.n, scheme.k_size, scheme.w_sizes
    );
    println!("p_agree          = {:.9}", eval.p_agree);
    println!("p_agree_decoders = {:.9}", eval.p_agree_decoders);
    println!("tv_to_ideal      = {:.9}", eval.tv_to_ideal);
    println!("one_comm_delta1  = {:.9}", eval.one_comm_delta1);
    println!("one_comm_delta2  = {:.9}", eval.one_comm_delta2);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_second_order(
    path: &Path,
    d1: f64,
    d2: f64,
    samples: u64,
    seed: u64,
    wigner_dim: Option<usize>,
) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Schema("--samples must be at least 1".into()));
    }
    let file = instance::load(path)?;
    let InstanceFile::Gaussian {
        sigma,
        blocks,
        maps,
        noise,
        weights,
        ..
    } = &file
    else {
        return Err(CliError::Schema("expected a gaussian instance file".into()));
    };
    if blocks.is_none() {
        return Err(CliError::Schema(
            "second-order needs the block (X = Y^m) form of the gaussian file".into(),
        ));
    }
    let inst = instance::build_gaussian(sigma, blocks, maps, noise, weights)?;
    let rep = bounds::second_order_bound(&inst, d1, d2, samples, seed, wigner_dim)?;
    println!("V             = {:.9}", rep.v);
    println!(
        "wigner_cdf    = {:.9} +- {:.9} (dim {}, {} samples, seed {})",
        rep.wigner_cdf,
        rep.wigner_se,
        wigner_dim.unwrap_or(inst.dim()),
        samples,
        seed
    );
    println!("q_term        = {:.9}", rep.q_term);
    println!("bound         = {:.9}", rep.bound);
    Ok(())
}

pub fn cmd_selftest(seed: u64) -> Result<(), CliError> {
    use rand::prelude::*;
    let mut results: Vec<(&str, bool)> = Vec::new();

    // E_gamma closed form vs subset brute force.
    {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut ok = true;
        for _ in 0..100 {
            let k = rng.random_range(1..=8usize);
            let nu =
                FiniteMeasure::new((0..k).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>());
            let mu =
                FiniteMeasure::new((0..k).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>());
            let (Ok(nu), Ok(mu)) = (nu, mu) else { continue };
            let closed = gbll_core::measures::e_gamma(&nu, &mu, 1.0).unwrap();
            let mut brute: f64 = 0.0;
            for mask in 0u32..(1 << k) {
                let v: f64 = (0..k)
                    .filter(|x| mask >> x & 1 == 1)
                    .map(|x| nu.weight(x) - mu.weight(x))
                    .sum();
                brute = brute.max(v);
            }
            ok &= closed == brute;
        }
        results.push(("e_gamma subset supremum", ok));
    }

    // Duality on a small random instance.
    {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 1);
        let mu = FiniteMeasure::new({
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .unwrap();
        let ch = Channel::new(
            (0..3)
                .map(|_| {
                    let row: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = row.iter().sum();
                    row.iter().map(|v| v / s).collect()
                })
                .collect(),
        )
        .unwrap();
        let inst = GbllInstance::from_source(mu, vec![ch], vec![1.7]).unwrap();
        let opts = OptimizerOptions {
            restarts: 16,
            ..OptimizerOptions::default()
        };
        let d = gbll::gbll_constant(&inst, &opts).constant.to_f64();
        let (_, gap) = gbll::worst_case_functions(&inst, d, &opts);
        results.push(("functional duality gap", gap.to_f64().abs() <= 1e-5));
    }

    // Tensorization.
    {
        let u = FiniteMeasure::uniform(2);
        let inst =
            GbllInstance::new(u.clone(), vec![Channel::bsc(0.11)], vec![u], vec![2.0]).unwrap();
        let opts = OptimizerOptions {
            restarts: 16,
            ..OptimizerOptions::default()
        };
        let d1 = gbll::gbll_constant(&inst, &opts).constant.to_f64();
        let d2 = gbll::gbll_constant(&inst.tensor_power(2).unwrap(), &opts)
            .constant
            .to_f64();
        results.push(("tensorization", (d2 - 2.0 * d1).abs() <= 1e-5));
    }

    // Wigner dim-1 against the closed form.
    {
        let (est, se) = bounds::wigner_lambda_max_cdf(1, 1.0, 20_000, seed).unwrap();
        let exact = bounds::normal_cdf(1.0 / std::f64::consts::SQRT_2);
        results.push(("wigner dim-1 closed form", (est - exact).abs() <= 3.0 * se));
    }

    // Converse certificate on the DSBS demo.
    {
        let source = crsim::JointSource::dsbs(0.11);
        let weights = [2.0, 2.0];
        let opts = OptimizerOptions {
            restarts: 16,
            ..OptimizerOptions::default()
        };
        let inst = source.gbll_instance(&weights).unwrap();
        let d1 = gbll::gbll_constant(&inst, &opts).constant.to_f64();
        let scheme = crsim::random_binning_scheme(&source, 2, 2, &[2, 2], seed).unwrap();
        let rep = crsim::converse_certificate(
            &scheme,
            &weights,
            ExtReal::Finite(2.0 * d1),
            0.0,
        )
        .unwrap();
        results.push(("converse certificate", rep.sound));
    }

    let mut all_ok = true;
    for (name, ok) in results {
        println!(
            "selftest: {name:<28} {}",
            if ok { "PASS" } else { "FAIL" }
        );
        all_ok &= ok;
    }
    if !all_ok {
        return Err(CliError::Unsound("selftest failed".into()));
    }
    Ok(())
}
