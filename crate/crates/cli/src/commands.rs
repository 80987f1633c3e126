use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wavetrain::bloch::{critical_curve, scan_frequencies, spectra, subharmonic_spectrum, verify_diffusive_stability, StabilityOptions, StabilityReport, SubharmonicGapReport};
use wavetrain::evolve::{resolve_profile, run_experiment, write_snapshot, write_trace_csv, SimulationConfig};
use wavetrain::model::ReactionModel;
use wavetrain::profile::{profile_residual, solve_profile_with_report, ProfileDocument, SolveOptions, WaveProfile};
use wavetrain::semigroup::{
    crossover_probe, linear_decay_series, log_time_grid, measure_decay, sum_bound_check, CrossoverProbe, CutoffSpec, GridFunction,
    LinearPropagator,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{csv, digest_file, fmt_f64, sha256_hex, FileDigest, OutputDir, SCHEMA_VERSION};
use crate::{GapArgs, Guess, LinearDecayArgs, ProfileArgs, SimulateArgs, SolveFor, SpectrumArgs, SumBoundsArgs};

pub const PROFILE_FILE: &str = "profile.json";

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn print_json<T: Serialize>(x: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(x).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn profile_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(PROFILE_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Profile from a file or a directory holding `profile.json`, with the digest of the bytes read.
pub fn load_profile(path: &Path) -> CliResult<(WaveProfile, FileDigest)> {
    let path = profile_path(path);
    let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
    let doc: ProfileDocument = serde_json::from_slice(&bytes).map_err(|e| CliError::io(&path, format!("not a profile document: {e}")))?;
    let profile = WaveProfile::from_document(&doc)?;
    Ok((profile, FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) }))
}

pub fn profile(args: &ProfileArgs) -> CliResult<()> {
    let params: BTreeMap<String, f64> = args.params.iter().cloned().collect();
    let model = ReactionModel::new(&args.model, &params)?;
    let mut inputs = Vec::new();
    let guess = match &args.guess {
        Guess::Auto => WaveProfile::initial_guess(&model, args.modes)?,
        Guess::Analytic => WaveProfile::analytic(&model, args.modes)?,
        Guess::File(path) => {
            let (mut g, digest) = load_profile(path)?;
            if g.model.id() != model.id() {
                return Err(CliError::Validation(format!("guess file holds a {} profile, not {}", g.model.id(), model.id())));
            }
            inputs.push(digest);
            g.model = model.clone();
            g.resampled(args.modes)?
        }
    };
    let unknowns = match args.solve_for {
        SolveFor::C => wavetrain::profile::SolveFor::Speed,
        SolveFor::K => wavetrain::profile::SolveFor::Wavenumber,
    };
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, ..Default::default() };
    let (p, report) = solve_profile_with_report(&model, &guess, unknowns, &opts).map_err(|e| {
        eprintln!(
            "profile solve failed for {} {:?} at M_F = {}: guess residual {:.3e}, k = {}, c = {}, tol {:.1e}, max {} iterations",
            model.id(),
            model.params(),
            args.modes,
            profile_residual(&guess),
            guess.k,
            guess.c,
            args.tol,
            args.max_iter
        );
        CliError::from(e)
    })?;
    let doc = p.to_document();
    let Some(out) = &args.out else {
        return print_json(&doc);
    };
    let mut dir = OutputDir::create(out)?;
    dir.write_json(PROFILE_FILE, &doc)?;
    dir.finish("profile", to_value(args), inputs, Some(report.residuals.len().saturating_sub(1) as u64))?;
    println!(
        "converged in {} iteration(s): residual {:.3e}, k = {}, c = {}, max amplitude {:.12}",
        report.residuals.len().saturating_sub(1),
        p.residual_norm,
        p.k,
        p.c,
        p.max_amplitude(1024)
    );
    Ok(())
}

#[derive(Serialize)]
struct CurveSamples {
    xi: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize)]
struct SpectrumDocument {
    schema_version: u32,
    verdict: bool,
    theta: f64,
    a: Option<f64>,
    d: Option<f64>,
    xi_1: f64,
    delta_1: f64,
    critical_curve: Option<CurveSamples>,
    critical_curve_error: Option<String>,
    stability: StabilityReport,
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult<()> {
    let (p, digest) = load_profile(&args.profile)?;
    let opts = StabilityOptions { scan: args.scan as usize, m_f: args.m_f, ..Default::default() };
    let rep = verify_diffusive_stability(&p, &opts)?;
    let (curve, curve_error) = match critical_curve(&p, args.xi_max, args.samples as usize, rep.m_f) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let doc = SpectrumDocument {
        schema_version: SCHEMA_VERSION,
        verdict: rep.verdict,
        theta: rep.theta,
        a: curve.as_ref().map(|c| c.a),
        d: curve.as_ref().map(|c| c.d),
        xi_1: rep.xi_1,
        delta_1: rep.delta_1,
        critical_curve: curve.map(|c| CurveSamples {
            re: c.lambda_c.iter().map(|z| z.re).collect(),
            im: c.lambda_c.iter().map(|z| z.im).collect(),
            xi: c.xi_samples,
        }),
        critical_curve_error: curve_error,
        stability: rep,
    };
    let Some(out) = &args.out_dir else {
        return print_json(&doc);
    };
    let xis = scan_frequencies(args.scan as usize);
    let specs = spectra(&p, &xis, doc.stability.m_f)?;
    let rows = xis.iter().zip(&specs).flat_map(|(&xi, vals)| {
        vals.iter().enumerate().map(move |(i, z)| vec![fmt_f64(xi), i.to_string(), fmt_f64(z.re), fmt_f64(z.im)])
    });
    let mut dir = OutputDir::create(out)?;
    dir.write("spectrum.csv", csv(&["xi", "index", "re", "im"], rows).as_bytes())?;
    dir.write_json("stability.json", &doc)?;
    dir.finish("spectrum", to_value(args), vec![digest], None)?;
    println!(
        "verdict {}: theta = {:.4e}, a = {}, d = {}, xi_1 = {:.4}, delta_1 = {:.4e}",
        doc.verdict,
        doc.theta,
        doc.a.map_or("-".into(), |a| format!("{a:.4e}")),
        doc.d.map_or("-".into(), |d| format!("{d:.6e}")),
        doc.xi_1,
        doc.delta_1
    );
    if let Some(e) = &doc.critical_curve_error {
        eprintln!("warning: critical curve: {e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct GapDocument {
    schema_version: u32,
    reports: Vec<SubharmonicGapReport>,
}

pub fn gap(args: &GapArgs) -> CliResult<()> {
    let (p, digest) = load_profile(&args.profile)?;
    let m_f = args.m_f.unwrap_or(p.m_f);
    let reports = args.n.0.iter().map(|&n| subharmonic_spectrum(&p, n as i64, m_f)).collect::<Result<Vec<_>, _>>()?;
    let doc = GapDocument { schema_version: SCHEMA_VERSION, reports };
    let Some(out) = &args.out_dir else {
        return print_json(&doc);
    };
    let scaled = |r: &SubharmonicGapReport| r.delta_n * (r.n_periods * r.n_periods) as f64 / (4.0 * PI * PI);
    let rows = doc.reports.iter().map(|r| vec![r.n_periods.to_string(), fmt_f64(r.delta_n), fmt_f64(r.attaining_xi), fmt_f64(scaled(r))]);
    let mut dir = OutputDir::create(out)?;
    dir.write("gap.csv", csv(&["N", "delta_n", "attaining_xi", "delta_n_n2_over_4pi2"], rows).as_bytes())?;
    dir.write_json("gap.json", &doc)?;
    dir.finish("gap", to_value(args), vec![digest], None)?;
    println!("{:>6} {:>14} {:>10} {:>14}", "N", "delta_N", "xi", "dN^2/4pi^2");
    for r in &doc.reports {
        println!("{:>6} {:>14.6e} {:>10.5} {:>14.6e}", r.n_periods, r.delta_n, r.attaining_xi, scaled(r));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitBrief {
    window: (f64, f64),
    samples: usize,
    exponent: f64,
    constant: f64,
    super_polynomial: bool,
}

#[derive(Serialize)]
struct DecayPerN {
    n_periods: usize,
    sp: Option<FitBrief>,
    stilde: Option<FitBrief>,
    /// `sup_t norm (1 + t)^{-claimed}`.
    sp_constant: f64,
    stilde_constant: f64,
}

#[derive(Serialize)]
struct DecayDocument {
    schema_version: u32,
    l: u32,
    m: u32,
    seed: u64,
    xi_1: f64,
    claimed_sp_exponent: f64,
    claimed_stilde_exponent: f64,
    fit_window: (f64, f64),
    per_n: Vec<DecayPerN>,
    /// Largest over smallest constant across `N`.
    sp_constant_spread: f64,
    stilde_constant_spread: f64,
}

fn weighted_sup(t: &[f64], norms: &[f64], claimed: f64) -> f64 {
    t.iter().zip(norms).map(|(&ti, &ni)| ni * (1.0 + ti).powf(-claimed)).fold(0.0, f64::max)
}

fn spread(x: impl Iterator<Item = f64> + Clone) -> f64 {
    x.clone().fold(0.0, f64::max) / x.fold(f64::INFINITY, f64::min)
}

pub fn linear_decay(args: &LinearDecayArgs) -> CliResult<()> {
    let n_max = *args.n.0.last().expect("non-empty period list");
    let fit_end = args.fit_end.unwrap_or((n_max * n_max) as f64 / 10.0);
    if !(args.fit_start > 0.0 && fit_end > args.fit_start) {
        return Err(CliError::Validation(format!("fit window [{}, {fit_end}] is empty", args.fit_start)));
    }
    if args.tmax < fit_end {
        return Err(CliError::Validation(format!(
            "horizon t_max = {} ends before the fit window [{}, {fit_end}]; pass --tmax {fit_end} or more, or lower --fit-end",
            args.tmax, args.fit_start
        )));
    }
    let (p, digest) = load_profile(&args.profile)?;
    let stab = verify_diffusive_stability(&p, &StabilityOptions { scan: 64, ..Default::default() })?;
    if !stab.verdict {
        return Err(CliError::Validation("profile is not diffusively stable; the linear decay rates do not apply".into()));
    }
    let mut times = vec![0.0];
    times.extend(log_time_grid(0.01, args.tmax, args.samples as usize)?);
    let claimed_sp = -0.25 - 0.5 * (args.l + args.m) as f64;
    let claimed_stilde = -0.75;
    // one field shared by every N so the constants are comparable
    let base = GridFunction::localized_random(8, args.m_x, p.n(), 3.0, 0.5, args.seed);
    let mut per_n = Vec::new();
    let mut rows = Vec::new();
    for &n in &args.n.0 {
        let v = base.recentered(n);
        let v = v.scale(1.0 / v.l1());
        let prop = LinearPropagator::new(&p, n, args.m_x, CutoffSpec::new(stab.xi_1)?, &Default::default())?;
        let series = linear_decay_series(&prop, &v, &times, args.l, args.m)?;
        let sp: Vec<f64> = series.iter().map(|r| r.norm_sp).collect();
        let st: Vec<f64> = series.iter().map(|r| r.norm_stilde).collect();
        let window = (args.fit_start, fit_end.min((n * n) as f64 / 10.0));
        let fit = |norms: &[f64], claimed: f64| {
            measure_decay(&times, norms, claimed, window).ok().map(|f| FitBrief {
                window,
                samples: f.samples_in_window,
                exponent: f.exponent,
                constant: f.constant,
                super_polynomial: f.super_polynomial,
            })
        };
        per_n.push(DecayPerN {
            n_periods: n,
            sp: fit(&sp, claimed_sp),
            stilde: fit(&st, claimed_stilde),
            sp_constant: weighted_sup(&times, &sp, claimed_sp),
            stilde_constant: weighted_sup(&times, &st, claimed_stilde),
        });
        rows.extend(series.iter().map(|r| {
            vec![n.to_string(), fmt_f64(r.t), fmt_f64(r.norm_total), fmt_f64(r.norm_mean_phase), fmt_f64(r.norm_sp), fmt_f64(r.norm_stilde)]
        }));
    }
    let doc = DecayDocument {
        schema_version: SCHEMA_VERSION,
        l: args.l,
        m: args.m,
        seed: args.seed,
        xi_1: stab.xi_1,
        claimed_sp_exponent: claimed_sp,
        claimed_stilde_exponent: claimed_stilde,
        fit_window: (args.fit_start, fit_end),
        sp_constant_spread: spread(per_n.iter().map(|r| r.sp_constant)),
        stilde_constant_spread: spread(per_n.iter().map(|r| r.stilde_constant)),
        per_n,
    };
    let Some(out) = &args.out_dir else {
        return print_json(&doc);
    };
    let mut dir = OutputDir::create(out)?;
    dir.write("decay.csv", csv(&["N", "t", "norm_total", "norm_mean_phase", "norm_sp", "norm_stilde"], rows).as_bytes())?;
    dir.write_json("decay.json", &doc)?;
    dir.finish("linear-decay", to_value(args), vec![digest], None)?;
    let show = |f: &Option<FitBrief>| f.as_ref().map_or("-".to_string(), |f| format!("{:.3}", f.exponent));
    println!("{:>6} {:>10} {:>12} {:>10} {:>12}", "N", "s_p slope", "s_p const", "S~ slope", "S~ const");
    for r in &doc.per_n {
        println!("{:>6} {:>10} {:>12.4e} {:>10} {:>12.4e}", r.n_periods, show(&r.sp), r.sp_constant, show(&r.stilde), r.stilde_constant);
    }
    println!("constant spread across N: s_p {:.3}, S~ {:.3}", doc.sp_constant_spread, doc.stilde_constant_spread);
    Ok(())
}

#[derive(Serialize)]
struct SumTableSummary {
    r: u32,
    c_min: f64,
    continuum_constant: f64,
    ratio_to_continuum: f64,
}

#[derive(Serialize)]
struct ProbeOutcome {
    n_periods: usize,
    r: u32,
    t_max: f64,
    probe: Option<CrossoverProbe>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SumBoundsDocument {
    schema_version: u32,
    d: f64,
    times: usize,
    tables: Vec<SumTableSummary>,
    probes: Vec<ProbeOutcome>,
}

pub fn sum_bounds(args: &SumBoundsArgs) -> CliResult<()> {
    let mut times = vec![0.0];
    times.extend(log_time_grid(0.01f64.min(args.tmax / 2.0), args.tmax, args.samples as usize)?);
    let mut tables = Vec::new();
    let mut rows = Vec::new();
    for &r in &args.r {
        let tab = sum_bound_check(args.d, r, &args.n.0, &times)?;
        rows.extend(tab.c_min_per_n.iter().map(|&(n, c)| vec![r.to_string(), n.to_string(), fmt_f64(c)]));
        tables.push(SumTableSummary { r, c_min: tab.c_min, continuum_constant: tab.continuum_constant, ratio_to_continuum: tab.ratio_to_continuum() });
    }
    let mut probes = Vec::new();
    for &r in &args.r {
        for &n in &args.probe_n.0 {
            // eight crossover times past t* ~ N^2 / (2 d (2 pi)^2 ...) with room to fit the tail
            let t_max = 2.0 * (n * n) as f64 / args.d;
            let (probe, error) = match crossover_probe(args.d, n, r, t_max) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            probes.push(ProbeOutcome { n_periods: n, r, t_max, probe, error });
        }
    }
    let doc = SumBoundsDocument { schema_version: SCHEMA_VERSION, d: args.d, times: times.len(), tables, probes };
    let Some(out) = &args.out_dir else {
        return print_json(&doc);
    };
    let mut dir = OutputDir::create(out)?;
    dir.write("sum_bounds.csv", csv(&["r", "N", "c_min"], rows).as_bytes())?;
    dir.write_json("sum_bounds.json", &doc)?;
    dir.finish("sum-bounds", to_value(args), vec![], None)?;
    for t in &doc.tables {
        println!("r = {}: C = {:.4e}, continuum {:.4e}, ratio {:.3}", t.r, t.c_min, t.continuum_constant, t.ratio_to_continuum);
    }
    for p in &doc.probes {
        match (&p.probe, &p.error) {
            (Some(q), _) => println!(
                "r = {} N = {}: t* = {}, late rate {} (predicted {:.4e})",
                p.r,
                p.n_periods,
                q.t_star.map_or("-".into(), |t| format!("{t:.4e}")),
                q.late_rate.map_or("-".into(), |x| format!("{x:.4e}")),
                q.predicted_rate
            ),
            (None, Some(e)) => println!("r = {} N = {}: {e}", p.r, p.n_periods),
            (None, None) => {}
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) });
            let mut cfg = SimulationConfig::from_toml(&text)?;
            // profile paths in a config are relative to the config file
            if let (Some(p), Some(base)) = (&cfg.profile, path.parent()) {
                if p.is_relative() {
                    cfg.profile = Some(base.join(p));
                }
            }
            cfg
        }
        None => SimulationConfig::default(),
    };
    if let Some(p) = &args.profile {
        cfg.profile = Some(p.clone());
    }
    if let Some(p) = &cfg.profile {
        let p = profile_path(p);
        inputs.push(digest_file(&p)?);
        cfg.profile = Some(p);
    }
    if let Some(mode) = &args.extract {
        cfg.extraction.mode = mode.parse()?;
    }
    if let Some(seed) = args.seed {
        cfg.perturbation.seed = seed;
    }
    // the report embeds the config, so keep the destination out of it
    let out_dir = args.out_dir.clone().or(cfg.output_dir.take());
    let profile = resolve_profile(&cfg)?;
    let out = run_experiment(&profile, &cfg)?;
    let report = &out.report;
    let Some(out_dir) = out_dir else {
        return print_json(report);
    };
    let mut dir = OutputDir::create(&out_dir)?;
    let mut trace = Vec::new();
    write_trace_csv(&out.rows, &mut trace)?;
    dir.write("trace.csv", &trace)?;
    for (i, snap) in out.snapshots.iter().enumerate() {
        let mut bytes = Vec::new();
        write_snapshot(snap, &mut bytes)?;
        dir.write(&format!("snapshots/{i:05}.bin"), &bytes)?;
    }
    dir.write_json("report.json", report)?;
    dir.finish("simulate", to_value(&cfg), inputs, Some(report.steps))?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    println!(
        "{} steps, {} snapshots, E_0 = {:.3e}: {}",
        report.steps,
        report.snapshots,
        report.e0,
        if report.pass { "all checks pass".to_string() } else { format!("failed checks: {}", failed.join(", ")) }
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
