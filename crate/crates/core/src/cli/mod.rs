//! Command-line experiment runner.
//!
//! Every experiment command resolves a scenario (`--config` or `--preset`),
//! applies flag overrides, writes `manifest.json` and the resolved
//! `config.json`, runs the Monte-Carlo loop and emits `truth.csv`,
//! `observations.csv`, `estimates.csv`, `metrics.csv` and `summary.txt`.
//! All files are written atomically.

pub mod experiments;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Point3;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::metrics::{mean_std, ospa, OspaParams};
use crate::phd::Scan;
use crate::sim::{
    fmt_f64, init_thread_pool, observations_csv, par_runs, preset, truth_csv, Baseline,
    GroundTruth, ScenarioConfig,
};
use crate::Error;
use experiments::{calibration_run, localisation_case, phd_run, single_run};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dfusion",
    version,
    about = "Disparity-space estimation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static single-object localisation (RMSE grid or baseline comparison).
    Localise(RunArgs),
    /// Single-object tracking against a baseline.
    Track(RunArgs),
    /// Multi-object GM-PHD tracking scored by OSPA.
    Phd(RunArgs),
    /// Joint multi-object tracking and right-camera calibration.
    Calibrate(RunArgs),
    /// OSPA distance between two point-set CSV files (columns x,y,z).
    Ospa(OspaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Pf,
    Idekf,
    None,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Checked-in scenario name.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `out/<command>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Particle count of the baseline particle filter.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Sensor particles for calibration.
    #[arg(long = "calib-particles")]
    pub calib_particles: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OspaArgs {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    #[arg(long, short = 'c', default_value_t = 20.0)]
    pub cutoff: f64,
    #[arg(long, short = 'p', default_value_t = 1.0)]
    pub order: f64,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) | Error::InvalidParameter(m) | Error::InvalidInput(m) => {
                CliError::Config(m)
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_thread_pool();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("dfusion: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Localise(a) => experiment("localise", a),
        Command::Track(a) => experiment("track", a),
        Command::Phd(a) => experiment("phd", a),
        Command::Calibrate(a) => experiment("calibrate", a),
        Command::Ospa(a) => {
            let d = cmd_ospa(&a.file_a, &a.file_b, a.cutoff, a.order)?;
            println!("{}", fmt_f64(d));
            Ok(())
        }
    }
}

fn default_preset(command: &str) -> &'static str {
    match command {
        "localise" => "localise_s1",
        "track" => "track",
        "phd" => "phd",
        _ => "calibrate",
    }
}

/// Loads the scenario and applies flag overrides.
pub fn resolve_config(command: &str, a: &RunArgs) -> CliResult<(ScenarioConfig, String)> {
    let (mut cfg, source) = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            (
                ScenarioConfig::from_json(&text)?,
                path.display().to_string(),
            )
        }
        (None, Some(name)) => (preset(name)?, format!("preset:{name}")),
        (None, None) => {
            let name = default_preset(command);
            (preset(name)?, format!("preset:{name}"))
        }
    };
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(b) = a.baseline {
        cfg.filter.baseline = match b {
            BaselineArg::Pf => Baseline::Pf,
            BaselineArg::Idekf => Baseline::Idekf,
            BaselineArg::None => Baseline::None,
        };
    }
    if let Some(n) = a.particles {
        cfg.filter.baseline_particles = n;
    }
    if let Some(m) = a.calib_particles {
        let cal = cfg.calibration.as_mut().ok_or_else(|| {
            CliError::Config("--calib-particles needs a calibration section".into())
        })?;
        cal.particles = m;
    }
    match command {
        "phd" if cfg.filter.phd.is_none() => {
            return Err(CliError::Config("phd needs a filter.phd section".into()))
        }
        "calibrate" if cfg.calibration.is_none() => {
            return Err(CliError::Config(
                "calibrate needs a calibration section".into(),
            ))
        }
        _ => {}
    }
    cfg.validate()?;
    Ok((cfg, source))
}

/// Stable digest of the canonical JSON form of a config.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serialises");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub config_hash: String,
    pub seed: u64,
    pub runs: usize,
    pub out_dir: String,
    pub run_status: Vec<String>,
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn write_manifest(dir: &Path, m: &RunManifest) -> CliResult<()> {
    write_atomic(
        &dir.join("manifest.json"),
        &(serde_json::to_string_pretty(m).expect("manifest serialises") + "\n"),
    )?;
    Ok(())
}

/// CSV bodies and summary of one experiment.
#[derive(Debug, Default)]
pub struct Outputs {
    pub truth: String,
    pub observations: String,
    pub estimates: String,
    pub metrics: String,
    pub summary: String,
    pub run_status: Vec<String>,
    pub successes: usize,
}

fn experiment(command: &str, a: &RunArgs) -> CliResult<()> {
    let (cfg, source) = resolve_config(command, a)?;
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(command));
    fs::create_dir_all(&dir)?;
    let mut manifest = RunManifest {
        command: command.to_string(),
        config: source,
        config_hash: config_hash(&cfg),
        seed: cfg.seed,
        runs: cfg.runs,
        out_dir: dir.display().to_string(),
        run_status: vec!["pending".into(); cfg.runs],
    };
    write_manifest(&dir, &manifest)?;
    write_atomic(&dir.join("config.json"), &(cfg.to_json() + "\n"))?;
    let out = run_experiment(command, &cfg)?;
    for (name, body) in [
        ("truth.csv", &out.truth),
        ("observations.csv", &out.observations),
        ("estimates.csv", &out.estimates),
        ("metrics.csv", &out.metrics),
        ("summary.txt", &out.summary),
    ] {
        write_atomic(&dir.join(name), body)?;
    }
    manifest.run_status = out.run_status.clone();
    write_manifest(&dir, &manifest)?;
    print!("{}", out.summary);
    if out.successes == 0 {
        return Err(CliError::Numerical("every run failed".into()));
    }
    Ok(())
}

/// Runs an experiment command on a resolved config without touching the
/// file system.
pub fn run_experiment(command: &str, cfg: &ScenarioConfig) -> CliResult<Outputs> {
    match command {
        "localise" => Ok(localise(cfg)),
        "track" => Ok(track(cfg)),
        "phd" => Ok(phd(cfg)),
        "calibrate" => Ok(calibrate_cmd(cfg)),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

fn prefixed(prefix: &str, csv: &str, header_prefix: &str, with_header: bool, out: &mut String) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or("");
    if with_header {
        out.push_str(&format!("{header_prefix},{header}\n"));
    }
    for l in lines {
        out.push_str(&format!("{prefix},{l}\n"));
    }
}

fn append_run_data(o: &mut Outputs, case: &str, run: usize, truth: &GroundTruth, scans: &[Scan]) {
    let first = o.truth.is_empty();
    prefixed(
        &format!("{case},{run}"),
        &truth_csv(truth),
        "case,run",
        first,
        &mut o.truth,
    );
    prefixed(
        &format!("{case},{run}"),
        &observations_csv(scans),
        "case,run",
        first,
        &mut o.observations,
    );
}

fn point_row(out: &mut String, prefix: &str, p: &Point3<f64>) {
    out.push_str(&format!(
        "{prefix},{},{},{}\n",
        fmt_f64(p.x),
        fmt_f64(p.y),
        fmt_f64(p.z)
    ));
}

fn baseline_label(b: Baseline) -> &'static str {
    match b {
        Baseline::None => "none",
        Baseline::Pf => "pf",
        Baseline::Idekf => "idekf",
    }
}

/// Single-object runs over every case, collecting CSV rows and per-step
/// error series.
fn single_cases(
    cfg: &ScenarioConfig,
    cases: &[(String, ScenarioConfig)],
    o: &mut Outputs,
) -> Vec<CaseStats> {
    o.estimates = "case,run,time,filter,x,y,z\n".into();
    let mut stats = Vec::new();
    for (case, c) in cases {
        let results = par_runs(c.runs, cfg.seed, |_, seed| single_run(c, seed));
        let mut cs = CaseStats::new(case);
        for (run, res) in results.into_iter().enumerate() {
            let r = match res {
                Ok(r) => r,
                Err(e) => {
                    o.run_status.push(format!("{case}/{run}: failed: {e}"));
                    continue;
                }
            };
            append_run_data(o, case, run, &r.truth, &r.scans);
            for (t, p) in r.estimates.iter().enumerate() {
                point_row(&mut o.estimates, &format!("{case},{run},{t},disparity"), p);
            }
            if let Some(b) = &r.baseline {
                for (t, p) in b.estimates.iter().enumerate() {
                    point_row(
                        &mut o.estimates,
                        &format!("{case},{run},{t},{}", baseline_label(b.kind)),
                        p,
                    );
                }
            }
            cs.push(&r);
            o.run_status.push(format!("{case}/{run}: ok"));
            o.successes += 1;
        }
        stats.push(cs);
    }
    stats
}

/// Per-case error series for the single-object commands.
struct CaseStats {
    case: String,
    ds_errors: Vec<Vec<f64>>,
    ds_rmse: Vec<f64>,
    bl_errors: Vec<Vec<f64>>,
    bl_rmse: Vec<f64>,
    bl_kind: Option<Baseline>,
    divergences: usize,
}

impl CaseStats {
    fn new(case: &str) -> Self {
        Self {
            case: case.to_string(),
            ds_errors: Vec::new(),
            ds_rmse: Vec::new(),
            bl_errors: Vec::new(),
            bl_rmse: Vec::new(),
            bl_kind: None,
            divergences: 0,
        }
    }

    fn push(&mut self, r: &experiments::SingleRun) {
        let e = r.errors();
        self.ds_rmse.push(rms(&e));
        self.ds_errors.push(e);
        if let (Some(b), Some(e)) = (&r.baseline, r.baseline_errors()) {
            self.bl_kind = Some(b.kind);
            self.divergences += b.divergences;
            self.bl_rmse.push(rms(&e));
            self.bl_errors.push(e);
        }
    }
}

fn rms(e: &[f64]) -> f64 {
    (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt()
}

fn column_stats(series: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    (0..len)
        .map(|t| mean_std(&series.iter().map(|s| s[t]).collect::<Vec<_>>()))
        .collect()
}

fn single_metrics(stats: &[CaseStats]) -> String {
    let mut m = String::from("case,time,filter,mean_error,std_error\n");
    for cs in stats {
        for (label, series) in [
            ("disparity", &cs.ds_errors),
            (cs.bl_kind.map(baseline_label).unwrap_or(""), &cs.bl_errors),
        ] {
            for (t, (mean, std)) in column_stats(series).into_iter().enumerate() {
                m.push_str(&format!(
                    "{},{t},{label},{},{}\n",
                    cs.case,
                    fmt_f64(mean),
                    fmt_f64(std)
                ));
            }
        }
    }
    m
}

fn localise(cfg: &ScenarioConfig) -> Outputs {
    let mut o = Outputs::default();
    let cases: Vec<(String, ScenarioConfig)> = match &cfg.grid {
        Some(g) => g
            .distances
            .iter()
            .flat_map(|&d| {
                g.disparity_priors.iter().map(move |&p| {
                    (
                        format!("z{d}_mu{}_var{}", p.mean, p.variance),
                        localisation_case(cfg, d, p),
                    )
                })
            })
            .collect(),
        None => vec![("single".to_string(), cfg.clone())],
    };
    let stats = single_cases(cfg, &cases, &mut o);
    o.metrics = single_metrics(&stats);
    let mut s = format!("localise: {} ({} runs per case)\n", cfg.name, cfg.runs);
    s.push_str("RMSE over time, mean (std) across runs [cm]\n");
    for cs in &stats {
        let (m, sd) = mean_std(&cs.ds_rmse);
        let _ = write!(
            s,
            "{:<28} disparity {} ({})",
            cs.case,
            fmt_short(m),
            fmt_short(sd)
        );
        if let Some(k) = cs.bl_kind {
            let (bm, bsd) = mean_std(&cs.bl_rmse);
            let _ = write!(
                s,
                "  {} {} ({})",
                baseline_label(k),
                fmt_short(bm),
                fmt_short(bsd)
            );
        }
        s.push('\n');
        if cfg.grid.is_none() {
            let ds = column_stats(&cs.ds_errors);
            let bl = column_stats(&cs.bl_errors);
            s.push_str("step  disparity_error  baseline_error\n");
            for (t, (m, _)) in ds.iter().enumerate() {
                let b = bl
                    .get(t)
                    .map(|x| fmt_short(x.0))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "{t:>4}  {:>15}  {:>14}", fmt_short(*m), b);
            }
        }
    }
    o.summary = s;
    o
}

fn track(cfg: &ScenarioConfig) -> Outputs {
    let mut o = Outputs::default();
    let stats = single_cases(cfg, &[("track".into(), cfg.clone())], &mut o);
    o.metrics = single_metrics(&stats);
    let cs = &stats[0];
    let mut s = format!("track: {} ({} runs)\n", cfg.name, cfg.runs);
    let (m, sd) = mean_std(&cs.ds_rmse);
    let _ = writeln!(
        s,
        "disparity filter: time-averaged RMSE {} ({}) cm",
        fmt_short(m),
        fmt_short(sd)
    );
    if let Some(k) = cs.bl_kind {
        let (bm, bsd) = mean_std(&cs.bl_rmse);
        let _ = writeln!(
            s,
            "{} baseline ({} particles): time-averaged RMSE {} ({}) cm, {} divergences",
            baseline_label(k),
            cfg.filter.baseline_particles,
            fmt_short(bm),
            fmt_short(bsd),
            cs.divergences
        );
    }
    o.summary = s;
    o
}

fn phd(cfg: &ScenarioConfig) -> Outputs {
    let mut o = Outputs {
        estimates: "case,run,time,target,x,y,z\n".into(),
        ..Default::default()
    };
    let results = par_runs(cfg.runs, cfg.seed, |_, seed| phd_run(cfg, seed));
    let mut ospa_series = Vec::new();
    let mut card_series = Vec::new();
    let n_true = cfg.objects.len();
    for (run, res) in results.into_iter().enumerate() {
        let r = match res {
            Ok(r) => r,
            Err(e) => {
                o.run_status.push(format!("{run}: failed: {e}"));
                continue;
            }
        };
        append_run_data(&mut o, "phd", run, &r.truth, &r.scans);
        for st in &r.steps {
            for (k, p) in st.estimates.iter().enumerate() {
                point_row(&mut o.estimates, &format!("phd,{run},{},{k}", st.time), p);
            }
        }
        ospa_series.push(r.ospa.clone());
        card_series.push(
            r.steps
                .iter()
                .map(|s| s.cardinality as f64)
                .collect::<Vec<_>>(),
        );
        o.run_status.push(format!("{run}: ok"));
        o.successes += 1;
    }
    let ospa_stats = column_stats(&ospa_series);
    let card_stats = column_stats(&card_series);
    o.metrics = String::from("time,mean_ospa,std_ospa,mean_cardinality,std_cardinality\n");
    for (t, ((om, os), (cm, csd))) in ospa_stats.iter().zip(&card_stats).enumerate() {
        let _ = writeln!(
            o.metrics,
            "{t},{},{},{},{}",
            fmt_f64(*om),
            fmt_f64(*os),
            fmt_f64(*cm),
            fmt_f64(*csd)
        );
    }
    let late: Vec<f64> = card_series
        .iter()
        .flat_map(|s| s.iter().skip(11).copied())
        .collect();
    let hit =
        late.iter().filter(|&&c| c as usize == n_true).count() as f64 / late.len().max(1) as f64;
    let early = ospa_stats.iter().skip(1).take(5).map(|x| x.0).sum::<f64>() / 5.0;
    let late_ospa: Vec<f64> = ospa_stats.iter().skip(11).map(|x| x.0).collect();
    let mut s = format!(
        "phd: {} ({} runs, {} successful)\n",
        cfg.name, cfg.runs, o.successes
    );
    let _ = writeln!(
        s,
        "cardinality = {n_true} in {:.1}% of steps after step 10",
        100.0 * hit
    );
    let _ = writeln!(s, "mean OSPA steps 1-5: {}", fmt_short(early));
    let _ = writeln!(
        s,
        "mean OSPA after step 10: {}",
        fmt_short(mean_std(&late_ospa).0)
    );
    o.summary = s;
    o
}

fn calibrate_cmd(cfg: &ScenarioConfig) -> Outputs {
    let mut o = Outputs {
        estimates:
            "case,run,time,x,y,z,yaw,pitch,roll,std_x,std_y,std_z,std_yaw,std_pitch,std_roll,ess\n"
                .into(),
        ..Default::default()
    };
    let mut err_series: Vec<Vec<[f64; 6]>> = Vec::new();
    let mut final_rows = Vec::new();
    let results = par_runs(cfg.runs, cfg.seed, |_, seed| calibration_run(cfg, seed));
    for (run, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => {
                append_run_data(&mut o, "calibrate", run, &r.truth, &r.scans);
                for st in &r.output.steps {
                    let m = st.estimate.mean.to_array();
                    let sd = st.estimate.std;
                    let vals: Vec<String> = m.iter().chain(&sd).map(|v| fmt_f64(*v)).collect();
                    let _ = writeln!(
                        o.estimates,
                        "calibrate,{run},{},{},{}",
                        st.time,
                        vals.join(","),
                        fmt_f64(st.ess)
                    );
                }
                final_rows.push((
                    run,
                    r.prior_error,
                    *r.errors.last().unwrap_or(&[f64::NAN; 6]),
                ));
                err_series.push(r.errors);
                o.run_status.push(format!("{run}: ok"));
                o.successes += 1;
            }
            Err(e) => o.run_status.push(format!("{run}: failed: {e}")),
        }
    }
    o.metrics = String::from("time,component,mean_abs_error,std_abs_error\n");
    let names = ["x", "y", "z", "yaw", "pitch", "roll"];
    let len = err_series.iter().map(|s| s.len()).min().unwrap_or(0);
    for t in 0..len {
        for (i, name) in names.iter().enumerate() {
            let col: Vec<f64> = err_series.iter().map(|s| s[t][i].abs()).collect();
            let (m, sd) = mean_std(&col);
            let _ = writeln!(o.metrics, "{t},{name},{},{}", fmt_f64(m), fmt_f64(sd));
        }
    }
    let cal = cfg.calibration.expect("validated");
    let mut s = format!(
        "calibrate: {} ({} runs, M = {})\n",
        cfg.name, cfg.runs, cal.particles
    );
    s.push_str("run  prior error (x y z cm, yaw pitch roll rad) -> final error\n");
    for (run, p, f) in &final_rows {
        let fmt6 = |a: &[f64; 6]| {
            a.iter()
                .map(|v| format!("{:+.3}", v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "{run:>3}  {}  ->  {}", fmt6(p), fmt6(f));
    }
    o.summary = s;
    o
}

fn fmt_short(x: f64) -> String {
    format!("{x:.4}")
}

/// Reads a point-set CSV with a header and `x,y,z` columns.
pub fn read_points(path: &Path) -> CliResult<Vec<Point3<f64>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_points(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

pub fn parse_points(text: &str) -> std::result::Result<Vec<Point3<f64>>, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("missing header")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or(format!("missing column '{name}'"))
    };
    let (ix, iy, iz) = (idx("x")?, idx("y")?, idx("z")?);
    let mut out = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(format!(
                "line {}: expected {} fields, found {}",
                n + 1,
                cols.len(),
                f.len()
            ));
        }
        let num = |i: usize| {
            f[i].parse::<f64>()
                .map_err(|e| format!("line {}: {e}", n + 1))
        };
        out.push(Point3::new(num(ix)?, num(iy)?, num(iz)?));
    }
    Ok(out)
}

pub fn cmd_ospa(a: &Path, b: &Path, cutoff: f64, order: f64) -> CliResult<f64> {
    let x = read_points(a)?;
    let y = read_points(b)?;
    Ok(ospa(&x, &y, &OspaParams::euclidean(cutoff, order))?)
}
