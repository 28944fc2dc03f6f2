//! Command-line front end: configuration ingestion, the six
//! subcommands, and deterministic CSV emission for stability
//! experiments at desk scale.
//!
//! The harness is a stability laboratory, not a field tool: sweeps
//! measure empirical errors against a KNOWN data potential, so
//! `potential_true` (defaulting to the reference) always names the
//! function whose zeros feed the inverse pipeline.
//!
//! Configuration is line-oriented `key = value` text; `#` starts a
//! comment, lists are comma-separated, and file paths resolve relative
//! to the configuration file's directory.  Outputs are plain CSV
//! (comma-separated, `.` decimal, LF endings) and are byte-identical
//! across runs of the same configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use thiserror::Error;

use crate::bounds::{fit_constant, theorem31_envelope, theorem61_envelope};
use crate::jost::ForwardJost;
use crate::kernels::{k_kernel, l_kernel, volterra_residual};
use crate::potential::Potential;
use crate::reconstruction::{reconstruct_from_zeros, ReconstructionResult};
use crate::zeros::{find_zeros, perturb_zeros, ZeroKind, ZeroSet};

/// Tolerance used for every zero search launched by the harness.
pub const ZERO_FIND_TOL: f64 = 1e-9;
/// Series truncation tolerance for kernels built by the harness.
const SERIES_TOL: f64 = 1e-10;
/// File name of the zero list inside the output directory.
const ZERO_FILE: &str = "zeros_true.txt";

#[derive(Parser, Debug)]
#[command(
    name = "resolab",
    version,
    about = "Resonance-data inversion laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Locate the data potential's Jost zeros and write the zero list.
    Forward(CommonArgs),
    /// Summarize and verify a previously written zero list.
    Zeros(CommonArgs),
    /// Build and dump the transformation kernels for the configured pair.
    Kernels(CommonArgs),
    /// Run the inverse pipeline on the zero list against the reference.
    Reconstruct(CommonArgs),
    /// Sweep the (R, eps) grid and emit the stability report.
    Sweep(CommonArgs),
    /// Print envelope values for the configured (R, eps) grid.
    Bound(CommonArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Path to the line-oriented `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding the configuration's `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cmd {
    fn common(&self) -> &CommonArgs {
        match self {
            Cmd::Forward(a)
            | Cmd::Zeros(a)
            | Cmd::Kernels(a)
            | Cmd::Reconstruct(a)
            | Cmd::Sweep(a)
            | Cmd::Bound(a) => a,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("missing required key '{key}'")]
    Missing { key: &'static str },
    #[error("{msg}")]
    Invalid { msg: String },
}

/// Failures at the command level, split by exit code: configuration or
/// file-system problems exit with 2, numerical failures with 3.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl RunError {
    fn config(msg: impl std::fmt::Display) -> Self {
        RunError::Config(msg.to_string())
    }

    fn numerical(msg: impl std::fmt::Display) -> Self {
        RunError::Numerical(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "{msg}"),
            RunError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

/// Everything a sweep (or any other subcommand) needs, as read from the
/// configuration file.  Paths are kept as written; resolution against
/// the configuration directory happens in the accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub potential_ref: String,
    pub potential_true: Option<String>,
    pub r_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub p: f64,
    pub h: f64,
    pub seed: u64,
    pub out_dir: String,
    base_dir: PathBuf,
}

impl SweepConfig {
    pub fn ref_path(&self) -> PathBuf {
        self.base_dir.join(&self.potential_ref)
    }

    pub fn true_path(&self) -> Option<PathBuf> {
        self.potential_true.as_ref().map(|p| self.base_dir.join(p))
    }

    /// Output directory: the command-line override wins (relative to
    /// the working directory), otherwise `out_dir` relative to the
    /// configuration file.
    pub fn out_path(&self, cli_out: Option<&Path>) -> PathBuf {
        match cli_out {
            Some(p) => p.to_path_buf(),
            None => self.base_dir.join(&self.out_dir),
        }
    }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.parse::<f64>().map_err(|e| ConfigError::Malformed {
        line,
        msg: format!("bad {key} value '{raw}': {e}"),
    })
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| parse_f64(line, key, tok.trim()))
        .collect()
}

/// Parse the `key = value` configuration grammar; `base_dir` anchors
/// relative paths (normally the configuration file's directory).
pub fn parse_config(text: &str, base_dir: &Path) -> Result<SweepConfig, ConfigError> {
    let mut potential_ref: Option<String> = None;
    let mut potential_true: Option<String> = None;
    let mut r_list: Option<Vec<f64>> = None;
    let mut eps_list: Option<Vec<f64>> = None;
    let mut p: Option<f64> = None;
    let mut h: Option<f64> = None;
    let mut seed: Option<u64> = None;
    let mut out_dir: Option<String> = None;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line,
            msg: "expected 'key = value'".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::Malformed {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
        seen.push(key.to_string());
        match key {
            "potential_ref" => potential_ref = Some(value.to_string()),
            "potential_true" => potential_true = Some(value.to_string()),
            "R_list" => r_list = Some(parse_list(line, key, value)?),
            "eps_list" => eps_list = Some(parse_list(line, key, value)?),
            "p" => p = Some(parse_f64(line, key, value)?),
            "h" => h = Some(parse_f64(line, key, value)?),
            "seed" => {
                seed = Some(value.parse::<u64>().map_err(|e| ConfigError::Malformed {
                    line,
                    msg: format!("bad seed value '{value}': {e}"),
                })?)
            }
            "out_dir" => out_dir = Some(value.to_string()),
            other => {
                return Err(ConfigError::Malformed {
                    line,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
    }

    let cfg = SweepConfig {
        potential_ref: potential_ref.ok_or(ConfigError::Missing {
            key: "potential_ref",
        })?,
        potential_true,
        r_list: r_list.unwrap_or_default(),
        eps_list: {
            let mut e = eps_list.unwrap_or_else(|| vec![0.0]);
            e.sort_by(f64::total_cmp);
            e
        },
        p: p.unwrap_or(2.0),
        h: h.unwrap_or(1.0 / 32.0),
        seed: seed.unwrap_or(0),
        out_dir: out_dir.unwrap_or_else(|| "out".into()),
        base_dir: base_dir.to_path_buf(),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &SweepConfig) -> Result<(), ConfigError> {
    let bad = |msg: String| Err(ConfigError::Invalid { msg });
    for w in cfg.r_list.windows(2) {
        if !(w[0] < w[1]) {
            return bad(format!(
                "R_list must be strictly ascending, found {} then {}",
                w[0], w[1]
            ));
        }
    }
    if let Some(r) = cfg.r_list.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return bad(format!(
            "R_list entries must be positive and finite, found {r}"
        ));
    }
    if let Some(e) = cfg.eps_list.iter().find(|e| !(0.0..0.75).contains(*e)) {
        return bad(format!("eps_list entries must lie in [0, 0.75), found {e}"));
    }
    if !(cfg.p > 1.0 && cfg.p <= 2.0) {
        return bad(format!("p must lie in (1, 2], found {}", cfg.p));
    }
    let inv = 1.0 / cfg.h;
    let m = inv.round();
    if !(cfg.h > 0.0)
        || (inv - m).abs() > 1e-9
        || !(m as u64).is_power_of_two()
        || m < 16.0
        || m > 4096.0
    {
        return bad(format!(
            "h must be 1/2^k with 16 <= 2^k <= 4096, found {}",
            cfg.h
        ));
    }
    Ok(())
}

/// Per-cell perturbation seed: decorrelates cells deterministically
/// from the base seed and the cell's position in the sorted lists.
fn cell_seed(base: u64, r_index: usize, eps_index: usize) -> u64 {
    base ^ (r_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (eps_index as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Pipeline run plus empirical error against the known truth: the
/// shared compute path behind `reconstruct` and every sweep cell.
pub fn evaluate_reconstruction(
    q_ref: &Potential,
    q_true: &Potential,
    zs: &ZeroSet,
    p: f64,
    h: f64,
) -> Result<(ReconstructionResult, f64), RunError> {
    let rec = reconstruct_from_zeros(zs, q_ref, p, h).map_err(RunError::numerical)?;
    let diff = q_true.subtract(q_ref);
    let sup_error = rec
        .xs
        .iter()
        .zip(&rec.estimate)
        .map(|(x, est)| (est - diff.tail_integral(*x)).norm())
        .fold(0.0, f64::max);
    Ok((rec, sup_error))
}

/// One sweep cell: perturb the exact zeros at level `eps` (a level of
/// zero is an exact copy), then run the shared pipeline path.
pub fn sweep_cell(
    q_ref: &Potential,
    q_true: &Potential,
    exact: &ZeroSet,
    eps: f64,
    seed: u64,
    p: f64,
    h: f64,
) -> Result<(ReconstructionResult, f64), RunError> {
    let shaken = perturb_zeros(exact, eps, seed);
    evaluate_reconstruction(q_ref, q_true, &shaken, p, h)
}

/// One row of the stability report; `sup_error` is empty for cells
/// whose pipeline stage failed (the sweep continues past them).
#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub big_r: f64,
    pub epsilon: f64,
    pub sup_error: Option<f64>,
    pub envelope: Option<f64>,
    pub status: String,
}

/// Sweep outcome: rows sorted by (R, eps), one fitted constant over
/// the successful cells, and a comment block echoing the
/// configuration.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub fitted_c: Option<f64>,
    pub fit_residual: Option<f64>,
    pub meta: String,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut s = self.meta.clone();
        s.push_str("R,eps,sup_error,envelope,fitted_C,status\n");
        for row in &self.rows {
            let sup = row.sup_error.map(|v| v.to_string()).unwrap_or_default();
            let env = row.envelope.map(|v| v.to_string()).unwrap_or_default();
            let c = match (row.sup_error, self.fitted_c) {
                (Some(_), Some(v)) => v.to_string(),
                _ => String::new(),
            };
            writeln!(
                s,
                "{},{},{},{},{},{}",
                row.big_r, row.epsilon, sup, env, c, row.status
            )
            .unwrap();
        }
        s
    }
}

fn config_echo(cfg: &SweepConfig) -> String {
    let join = |xs: &[f64]| {
        xs.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "# sweep seed={} p={} h={}\n# ref={} true={}\n# R_list={} eps_list={}\n",
        cfg.seed,
        cfg.p,
        cfg.h,
        cfg.potential_ref,
        cfg.potential_true.as_deref().unwrap_or("-"),
        join(&cfg.r_list),
        join(&cfg.eps_list)
    )
}

/// Run the full (R, eps) grid.  Cells that fail keep their row (with an
/// error status) and the sweep continues; the constant is fitted over
/// whatever succeeded, provided at least three cells did.
pub fn run_sweep(cfg: &SweepConfig, q_ref: &Potential, q_true: &Potential) -> StabilityReport {
    let mut rows = Vec::new();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (ri, &big_r) in cfg.r_list.iter().enumerate() {
        let exact = find_zeros(&ForwardJost::new(q_true.clone()), big_r, ZERO_FIND_TOL);
        let mut prev_env: Option<f64> = None;
        for (ei, &eps) in cfg.eps_list.iter().enumerate() {
            let envelope = theorem61_envelope(big_r, eps, cfg.p).ok();
            if let (Some(prev), Some(cur)) = (prev_env, envelope) {
                // eps_list is sorted, so the formula must be monotone.
                assert!(cur >= prev, "envelope decreased in eps at R = {big_r}");
            }
            prev_env = envelope.or(prev_env);
            let outcome = match (&exact, envelope) {
                (Err(e), _) => Err(RunError::numerical(format!("zero search failed: {e}"))),
                (_, None) => Err(RunError::numerical(format!(
                    "envelope undefined at R = {big_r}, eps = {eps}"
                ))),
                (Ok(zs), Some(_)) => sweep_cell(
                    q_ref,
                    q_true,
                    zs,
                    eps,
                    cell_seed(cfg.seed, ri, ei),
                    cfg.p,
                    cfg.h,
                ),
            };
            match outcome {
                Ok((_, sup_error)) => {
                    if let Some(env) = envelope {
                        pairs.push((env, sup_error));
                    }
                    rows.push(StabilityRow {
                        big_r,
                        epsilon: eps,
                        sup_error: Some(sup_error),
                        envelope,
                        status: "ok".into(),
                    });
                }
                Err(e) => rows.push(StabilityRow {
                    big_r,
                    epsilon: eps,
                    sup_error: None,
                    envelope,
                    status: sanitize(&e.to_string()),
                }),
            }
        }
    }
    let fit = fit_constant(&pairs).ok();
    StabilityReport {
        rows,
        fitted_c: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.1),
        meta: config_echo(cfg),
    }
}

/// Keep per-cell error text CSV-safe: one line, no commas.
fn sanitize(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ").replace(',', ";")
}

fn read_file(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path)
        .map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))
}

fn load_potential(path: &Path) -> Result<Potential, RunError> {
    Potential::parse(&read_file(path)?)
        .map_err(|e| RunError::config(format!("potential file {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents)
        .map_err(|e| RunError::config(format!("cannot write {}: {e}", path.display())))
}

/// Execute a parsed command line; returns the text to print on stdout.
pub fn execute(cli: &Cli) -> Result<String, RunError> {
    let common = cli.cmd.common();
    let text = read_file(&common.config)?;
    let base = common
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let cfg = parse_config(&text, base)?;
    let out_dir = cfg.out_path(common.out.as_deref());

    let q_ref = load_potential(&cfg.ref_path())?;
    let q_true = match cfg.true_path() {
        Some(p) => load_potential(&p)?,
        None => q_ref.clone(),
    };

    match &cli.cmd {
        Cmd::Forward(_) => cmd_forward(&cfg, &q_true, &out_dir),
        Cmd::Zeros(_) => cmd_zeros(&out_dir),
        Cmd::Kernels(_) => cmd_kernels(&cfg, &q_ref, &q_true, &out_dir),
        Cmd::Reconstruct(_) => cmd_reconstruct(&cfg, &q_ref, &q_true, &out_dir),
        Cmd::Sweep(_) => cmd_sweep(&cfg, &q_ref, &q_true, &out_dir),
        Cmd::Bound(_) => cmd_bound(&cfg),
    }
}

fn ensure_out(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)
        .map_err(|e| RunError::config(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_forward(cfg: &SweepConfig, q_true: &Potential, out_dir: &Path) -> Result<String, RunError> {
    let big_r = *cfg
        .r_list
        .last()
        .ok_or_else(|| RunError::config("R_list is empty; forward needs a disc radius"))?;
    let zs = find_zeros(&ForwardJost::new(q_true.clone()), big_r, ZERO_FIND_TOL)
        .map_err(RunError::numerical)?;
    ensure_out(out_dir)?;
    let path = out_dir.join(ZERO_FILE);
    write_file(&path, &zs.to_text())?;
    Ok(format!(
        "forward: radius={} entries={} multiplicity={} residual={} wrote {}\n",
        big_r,
        zs.zeros.len(),
        zs.total_multiplicity(),
        zs.residual,
        path.display()
    ))
}

fn cmd_zeros(out_dir: &Path) -> Result<String, RunError> {
    let path = out_dir.join(ZERO_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        RunError::config(format!(
            "cannot read zero list {}: {e}; run `resolab forward` first",
            path.display()
        ))
    })?;
    let zs = ZeroSet::parse(&text)
        .map_err(|e| RunError::config(format!("zero list {}: {e}", path.display())))?;
    let again = ZeroSet::parse(&zs.to_text())
        .map_err(|e| RunError::numerical(format!("round trip failed: {e}")))?;
    if again != zs {
        return Err(RunError::numerical("zero list does not round-trip"));
    }
    let count = |k: ZeroKind| zs.zeros.iter().filter(|z| z.kind == k).count();
    Ok(format!(
        "zeros: radius={} center={} entries={} multiplicity={} eigenvalues={} resonances={} real_axis={} residual={} eps={}\nround_trip=ok\n",
        zs.radius,
        zs.center,
        zs.zeros.len(),
        zs.total_multiplicity(),
        count(ZeroKind::Eigenvalue),
        count(ZeroKind::Resonance),
        count(ZeroKind::RealAxis),
        zs.residual,
        zs.epsilon
    ))
}

fn cmd_kernels(
    cfg: &SweepConfig,
    q_ref: &Potential,
    q_true: &Potential,
    out_dir: &Path,
) -> Result<String, RunError> {
    let pair = k_kernel(q_ref, q_true, cfg.h, SERIES_TOL).map_err(RunError::numerical)?;
    let k_ref =
        k_kernel(&Potential::zero(), q_ref, cfg.h, SERIES_TOL).map_err(RunError::numerical)?;
    let l_ref = l_kernel(&k_ref).map_err(RunError::numerical)?;
    let residual = volterra_residual(&k_ref, &l_ref);
    ensure_out(out_dir)?;
    let k_path = out_dir.join("kernel_k.txt");
    let l_path = out_dir.join("kernel_l.txt");
    write_file(&k_path, &pair.to_text())?;
    write_file(&l_path, &l_ref.to_text())?;
    Ok(format!(
        "kernels: h={} sup_pair={} sup_inverse={} inverse_residual={} wrote {} {}\n",
        cfg.h,
        pair.sup(),
        l_ref.sup(),
        residual,
        k_path.display(),
        l_path.display()
    ))
}

fn cmd_reconstruct(
    cfg: &SweepConfig,
    q_ref: &Potential,
    q_true: &Potential,
    out_dir: &Path,
) -> Result<String, RunError> {
    let path = out_dir.join(ZERO_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        RunError::config(format!(
            "cannot read zero list {}: {e}; run `resolab forward` first",
            path.display()
        ))
    })?;
    let zs = ZeroSet::parse(&text)
        .map_err(|e| RunError::config(format!("zero list {}: {e}", path.display())))?;
    let (rec, sup_error) = evaluate_reconstruction(q_ref, q_true, &zs, cfg.p, cfg.h)?;
    let envelope =
        theorem61_envelope(rec.big_r, rec.epsilon, cfg.p).map_err(RunError::numerical)?;
    let diff = q_true.subtract(q_ref);
    let truth = |x: f64| -> Complex64 { diff.tail_integral(x) };
    ensure_out(out_dir)?;
    let csv_path = out_dir.join("reconstruction.csv");
    write_file(&csv_path, &rec.to_csv(Some(&truth)))?;
    Ok(format!(
        "reconstruct: R={} eps={} sup_error={} envelope={} diverged={} warnings={} wrote {}\n",
        rec.big_r,
        rec.epsilon,
        sup_error,
        envelope,
        rec.diverged,
        rec.warnings.len(),
        csv_path.display()
    ))
}

fn cmd_sweep(
    cfg: &SweepConfig,
    q_ref: &Potential,
    q_true: &Potential,
    out_dir: &Path,
) -> Result<String, RunError> {
    let report = run_sweep(cfg, q_ref, q_true);
    ensure_out(out_dir)?;
    let path = out_dir.join("sweep.csv");
    write_file(&path, &report.to_csv())?;
    let ok = report.rows.iter().filter(|r| r.sup_error.is_some()).count();
    let show = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
    Ok(format!(
        "sweep: cells={} ok={} fitted_C={} fit_residual={} wrote {}\n",
        report.rows.len(),
        ok,
        show(report.fitted_c),
        show(report.fit_residual),
        path.display()
    ))
}

fn cmd_bound(cfg: &SweepConfig) -> Result<String, RunError> {
    let mut s = String::new();
    for &big_r in &cfg.r_list {
        if big_r < std::f64::consts::E {
            return Err(RunError::numerical(format!(
                "envelopes are stated for R >= e, got {big_r}"
            )));
        }
        let shape = theorem31_envelope(big_r);
        for &eps in &cfg.eps_list {
            let env = theorem61_envelope(big_r, eps, cfg.p).map_err(RunError::numerical)?;
            writeln!(s, "R={big_r} eps={eps} envelope={env} model_shape={shape}").unwrap();
        }
    }
    Ok(s)
}
