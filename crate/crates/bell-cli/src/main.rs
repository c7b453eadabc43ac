//! Command-line driver: amplitude scans of optimized Bell functions,
//! storage-time/amplitude violation thresholds, locality-loophole timing
//! reports, and simulator equivalence checks. Emits CSV plus a JSON mirror;
//! identical config and seed give byte-identical outputs.

mod config;
mod oracle;
mod report;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use bell_core::bellopt::{scan_alpha, Family, OptimizerConfig};
use bell_core::decoherence::{bell_at_optimal_settings, DecoherenceParams, Timeline};
use bell_core::locality::{
    max_waveguide_diameter, min_travel_times, LocalityInputs, SPEED_OF_LIGHT,
};

use config::{ContourSection, FamilyId, GridSection, PhysicsSection, RunConfig, TimelineSection};
use report::{
    contour_csv, scan_csv, ContourRecord, ContourReport, ContourSummary, LocalityReport,
    ScanRecord, ScanReport, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "bell-cli",
    version,
    about = "Bell-CHSH scans for atom-field entanglement: optimized violation curves, \
             decoherence thresholds, and locality-loophole timing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize the Bell function over an amplitude grid and emit CSV/JSON
    Scan(ScanArgs),
    /// Map the Bell value over photon storage time and amplitude, locating
    /// the violation threshold
    Contour(ContourArgs),
    /// Minimal transit times, separations, and the waveguide cutoff
    Locality(LocalityArgs),
    /// Closed-form vs Fock-space simulator equivalence suites
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Output directory for CSV/JSON files
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    family: Option<FamilyId>,
    /// Detector efficiency for the on/off family
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha_start: Option<f64>,
    #[arg(long)]
    alpha_stop: Option<f64>,
    #[arg(long)]
    alpha_step: Option<f64>,
}

#[derive(Args)]
struct ContourArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Atomic lifetime in the cylinder, seconds
    #[arg(long)]
    tatom: Option<f64>,
    /// Complete inhibition of emission in the cylinder (t_atom infinite)
    #[arg(long)]
    tatom_inf: bool,
}

#[derive(Args)]
struct LocalityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Atomic transition frequency in GHz for the waveguide cutoff
    #[arg(long, default_value_t = 51.1)]
    omega0_ghz: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Angle-grid resolution per axis for the closed-form suites
    #[arg(long, default_value_t = 4)]
    angles: usize,
    /// Random sample count for the indirect identity
    #[arg(long, default_value_t = 2000)]
    samples: usize,
}

enum AppError {
    Validation(String),
    Numerical(String),
}

impl From<config::ConfigError> for AppError {
    fn from(e: config::ConfigError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Validation(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(AppError::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run() -> Result<(), AppError> {
    match Cli::parse().cmd {
        Cmd::Scan(args) => cmd_scan(args),
        Cmd::Contour(args) => cmd_contour(args),
        Cmd::Locality(args) => cmd_locality(args),
        Cmd::OracleCheck(args) => cmd_oracle(args),
    }
}

fn load_or_default(args: &CommonArgs, family: Option<FamilyId>) -> Result<RunConfig, AppError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::minimal(
            family.unwrap_or(FamilyId::Parity),
            args.seed.unwrap_or(0),
            args.restarts.unwrap_or(16),
        ),
    };
    if let Some(f) = family {
        cfg.run.family = f;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(restarts) = args.restarts {
        cfg.run.restarts = restarts;
    }
    Ok(cfg)
}

fn cmd_scan(args: ScanArgs) -> Result<(), AppError> {
    let cfg = load_or_default(&args.common, args.family)?;
    let mut grid = cfg.grid.clone().unwrap_or(GridSection {
        alpha_start: 0.05,
        alpha_stop: 1.5,
        alpha_step: 0.05,
        eta_values: vec![],
    });
    if let Some(v) = args.alpha_start {
        grid.alpha_start = v;
    }
    if let Some(v) = args.alpha_stop {
        grid.alpha_stop = v;
    }
    if let Some(v) = args.alpha_step {
        grid.alpha_step = v;
    }
    if let Some(eta) = args.eta {
        if !(0.0..=1.0).contains(&eta) {
            return Err(AppError::Validation(format!("eta = {eta} outside [0, 1]")));
        }
        grid.eta_values = vec![eta];
    }
    let alphas = grid.alphas();
    if alphas.is_empty() {
        return Err(AppError::Validation("empty amplitude grid".into()));
    }

    let physics = cfg.physics.clone().unwrap_or_else(PhysicsSection::defaults);
    let params = physics.to_params()?;
    let timeline_cfg = cfg.timeline.clone().unwrap_or_else(TimelineSection::defaults);
    let opt = OptimizerConfig {
        restarts: cfg.run.restarts,
        seed: cfg.run.seed,
        tol: cfg.run.tol,
        max_iters: 400,
    };
    let family_name = cfg.run.family.to_string();

    fn to_record(
        family: String,
        eta: Option<f64>,
        sep: Option<f64>,
    ) -> impl Fn(bell_core::bellopt::ScanPoint) -> ScanRecord {
        move |p| ScanRecord {
            family: family.clone(),
            alpha: p.alpha,
            eta,
            separation_m: sep,
            bell: p.result.best_value,
            argmax: p.result.argmax,
            restarts: p.result.restarts_used,
            converged: p.result.converged,
            dropout: p.dropout,
        }
    }

    let mut records: Vec<ScanRecord> = Vec::new();
    match cfg.run.family {
        FamilyId::Onoff => {
            let etas =
                if grid.eta_values.is_empty() { vec![1.0] } else { grid.eta_values.clone() };
            for (row, &eta) in etas.iter().enumerate() {
                let row_cfg = OptimizerConfig {
                    seed: opt.seed.wrapping_add(1000 * row as u64),
                    ..opt
                };
                let pts =
                    scan_alpha(|a| Family::OnOff { alpha: a, eta }, &alphas, &row_cfg, false);
                let make = to_record(family_name.clone(), Some(eta), None);
                records.extend(pts.into_iter().map(make));
            }
        }
        FamilyId::Parity | FamilyId::ParityReal => {
            let restricted = cfg.run.family == FamilyId::ParityReal;
            let pts = scan_alpha(
                |a| {
                    if restricted {
                        Family::ParityRealZeta { alpha: a }
                    } else {
                        Family::Parity { alpha: a }
                    }
                },
                &alphas,
                &opt,
                true,
            );
            let make = to_record(family_name.clone(), None, None);
            records.extend(pts.into_iter().map(make));
        }
        FamilyId::Indirect => {
            let chi = params.chi;
            let pts = scan_alpha(|a| Family::Indirect { alpha: a, chi }, &alphas, &opt, true);
            let make = to_record(family_name.clone(), None, None);
            records.extend(pts.into_iter().map(make));
        }
        FamilyId::Decohered => {
            let seps = if timeline_cfg.separations_m.is_empty() {
                vec![0.1]
            } else {
                timeline_cfg.separations_m.clone()
            };
            for (row, &l) in seps.iter().enumerate() {
                let tl = timeline_cfg.to_timeline(l)?;
                if tl.t5 < tl.t3 {
                    return Err(AppError::Validation(format!(
                        "separation {l} m too small: the probe interaction does not fit (t5 < t3)"
                    )));
                }
                let row_cfg = OptimizerConfig {
                    seed: opt.seed.wrapping_add(1000 * row as u64),
                    ..opt
                };
                let pts = scan_alpha(
                    |a| Family::Decohered { alpha: a, params, timeline: tl },
                    &alphas,
                    &row_cfg,
                    false,
                );
                let make = to_record(family_name.clone(), None, Some(l));
                records.extend(pts.into_iter().map(make));
            }
        }
    }

    let max_bell = records.iter().map(|r| r.bell).fold(0.0, f64::max);
    if max_bell > 2.0 * 2.0f64.sqrt() + 1e-9 {
        return Err(AppError::Numerical(format!(
            "Bell value {max_bell} exceeds the quantum bound; numerical failure"
        )));
    }
    if records.iter().any(|r| !r.converged) {
        eprintln!("warning: some grid points did not converge (recorded with converged=false)");
    }

    let csv = scan_csv(&records);
    let json = ScanReport { schema_version: SCHEMA_VERSION, records };
    let stem = format!("scan_{family_name}");
    let (csv_path, json_path) = report::write_pair(&args.common.out, &stem, &csv, &json)?;
    std::fs::write(args.common.out.join("config_used.toml"), cfg.to_toml())?;
    let peak = json
        .records
        .iter()
        .max_by(|a, b| a.bell.total_cmp(&b.bell))
        .expect("non-empty scan");
    println!(
        "{family_name}: {} grid points, peak B = {:.6} at alpha = {:.4}",
        json.records.len(),
        peak.bell,
        peak.alpha
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn cmd_contour(args: ContourArgs) -> Result<(), AppError> {
    let cfg = load_or_default(&args.common, Some(FamilyId::Decohered))?;
    let mut section = cfg.contour.clone().unwrap_or_else(ContourSection::defaults);
    if args.tatom_inf {
        section.t_atom_s = None;
    } else if let Some(t) = args.tatom {
        if t <= 0.0 {
            return Err(AppError::Validation(format!("t_atom = {t} must be positive")));
        }
        section.t_atom_s = Some(t);
    }
    let physics = cfg.physics.clone().unwrap_or_else(PhysicsSection::defaults);
    let base = physics.to_params()?;
    let timeline_cfg = cfg.timeline.clone().unwrap_or_else(TimelineSection::defaults);
    let gammap = section.t_atom_s.map_or(0.0, |t| 1.0 / (2.0 * t));

    let us = 1e-6;
    let timeline = Timeline::new(
        timeline_cfg.t1_us * us,
        timeline_cfg.t2_us * us,
        timeline_cfg.t3_us * us,
        section.t4_s,
        section.t5_us * us,
        timeline_cfg.t6_us * us,
        timeline_cfg.v_m_per_s,
    )
    .map_err(|e| AppError::Validation(e.to_string()))?;

    let alphas = linspace(section.alpha_min, section.alpha_max, section.alpha_points);
    let storage_times = linspace(section.tc_min_s, section.tc_max_s, section.tc_points);

    let best_over_alpha = |t_c: f64| -> Result<(f64, f64), AppError> {
        let p = DecoherenceParams { kappa: 1.0 / (2.0 * t_c), gammap, ..base };
        let mut best = (0.0f64, 0.0f64);
        for &a in &alphas {
            let b = bell_at_optimal_settings(a, &p, &timeline)
                .map_err(|e| AppError::Numerical(e.to_string()))?;
            if b > best.1 {
                best = (a, b);
            }
        }
        Ok(best)
    };

    let mut records = Vec::with_capacity(storage_times.len() * alphas.len());
    let mut threshold: Option<(f64, f64)> = None;
    let mut previous_tc: Option<f64> = None;
    for &t_c in &storage_times {
        let p = DecoherenceParams { kappa: 1.0 / (2.0 * t_c), gammap, ..base };
        let mut row_best = (0.0f64, 0.0f64);
        for &a in &alphas {
            let b = bell_at_optimal_settings(a, &p, &timeline)
                .map_err(|e| AppError::Numerical(e.to_string()))?;
            records.push(ContourRecord { t_cavity_s: t_c, alpha: a, bell: b });
            if b > row_best.1 {
                row_best = (a, b);
            }
        }
        if threshold.is_none() && row_best.1 > 2.0 {
            // refine the crossing between the previous grid row and this one
            let (mut lo, mut hi) = (previous_tc.unwrap_or(t_c), t_c);
            if previous_tc.is_some() {
                for _ in 0..40 {
                    if hi - lo < 1e-6 * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if best_over_alpha(mid)?.1 > 2.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            let refined = best_over_alpha(hi)?;
            threshold = Some((hi, refined.0));
        }
        previous_tc = Some(t_c);
    }

    let summary = ContourSummary {
        t_atom_s: section.t_atom_s,
        threshold_tc_s: threshold.map(|t| t.0),
        alpha_at_threshold: threshold.map(|t| t.1),
    };
    match threshold {
        Some((tc, a)) => println!(
            "violation threshold: storage time {tc:.1} s at alpha = {a:.3} (t_atom {})",
            section.t_atom_s.map_or("inf".into(), |t| format!("{t}")),
        ),
        None => println!("no Bell violation anywhere on the grid"),
    }
    let csv = contour_csv(&records);
    let json = ContourReport { schema_version: SCHEMA_VERSION, summary, records };
    let (csv_path, json_path) = report::write_pair(&args.common.out, "contour", &csv, &json)?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_locality(args: LocalityArgs) -> Result<(), AppError> {
    let cfg = load_or_default(&args.common, Some(FamilyId::Decohered))?;
    let tl_cfg = cfg.timeline.clone().unwrap_or_else(TimelineSection::defaults);
    let base = tl_cfg
        .to_timeline(0.0)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    let inputs = LocalityInputs::new(base).map_err(|e| AppError::Validation(e.to_string()))?;

    let with_t6 =
        min_travel_times(&inputs, true).map_err(|e| AppError::Numerical(e.to_string()))?;
    let without_t6 =
        min_travel_times(&inputs, false).map_err(|e| AppError::Numerical(e.to_string()))?;
    let omega0 = 2.0 * std::f64::consts::PI * args.omega0_ghz * 1e9;
    let diameter = max_waveguide_diameter(omega0, SPEED_OF_LIGHT);

    let t_atom_meas = base.t1 + base.t6;
    let t_field_meas = base.t3 + base.t2 + base.t1 + base.t6;
    let single_location_min = 0.5 * SPEED_OF_LIGHT * (t_field_meas + t_atom_meas);
    let satisfied = with_t6.residuals.iter().all(|r| *r >= -1e-9);

    println!("minimal transit times (detection time included):");
    println!("  t4 = {:.4} s", with_t6.t4);
    println!("  t5 = {:.4} us", with_t6.t5 * 1e6);
    println!("  separation l = v (t4 + t5) = {:.2} km", with_t6.l / 1e3);
    println!("dropping the detection time from both inequalities:");
    println!("  t4 = {:.4} s, t5 = {:.4} us", without_t6.t4, without_t6.t5 * 1e6);
    println!(
        "  separation l = {:.2} km (the published figure matches this variant)",
        without_t6.l / 1e3
    );
    println!(
        "single-location bound: l >= {:.2} km; spatially-resolved constraints {}",
        single_location_min / 1e3,
        if satisfied { "satisfied" } else { "VIOLATED" }
    );
    println!(
        "waveguide cutoff diameter at {} GHz: {:.3} mm",
        args.omega0_ghz,
        diameter * 1e3
    );

    let json = LocalityReport {
        schema_version: SCHEMA_VERSION,
        t4_s: with_t6.t4,
        t5_s: with_t6.t5,
        l_m: with_t6.l,
        l_no_detection_m: without_t6.l,
        t4_no_detection_s: without_t6.t4,
        t5_no_detection_s: without_t6.t5,
        waveguide_diameter_m: diameter,
        constraint_residuals_m: with_t6.residuals,
        single_location_min_m: single_location_min,
        constraints_satisfied: satisfied,
    };
    std::fs::create_dir_all(&args.common.out)?;
    let path = args.common.out.join("locality.json");
    let mut payload = serde_json::to_string_pretty(&json).expect("report serializes");
    payload.push('\n');
    std::fs::write(&path, payload)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), AppError> {
    if args.angles < 2 {
        return Err(AppError::Validation("need at least 2 angles per axis".into()));
    }
    let suites = [
        oracle::onoff_suite(args.angles),
        oracle::parity_suite(args.angles),
        oracle::indirect_identity_suite(args.samples, args.seed),
        oracle::probe_sequence_suite(),
    ];
    let mut all_ok = true;
    for s in &suites {
        let verdict = if s.passed() { "ok" } else { "FAILED" };
        println!(
            "{:<45} max dev {:9.3e}  tol {:7.1e}  {verdict}",
            s.name, s.max_dev, s.tol
        );
        all_ok &= s.passed();
    }
    if !all_ok {
        return Err(AppError::Numerical(
            "simulator equivalence outside tolerance".into(),
        ));
    }
    Ok(())
}
