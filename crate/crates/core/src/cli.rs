//! Command-line front end: JSON run configs, flag overrides and the
//! subcommands that write CSV, JSON and SVG artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::continuation::{
    self, continue_cycles, continue_equilibria, continue_fold_curve, continue_hopf_curve, lpc_curve, Branch,
    BranchKind, BranchPoint, ContinuationOptions, CycleOptions, PlaneWindow, SpecialPoint, Tag,
};
use crate::dynamics::{self, chart, portrait::CycleOverlay, threshold, SolverOptions};
use crate::equilibria::{self, Equilibrium, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::io::{config_comment, fmt17, to_json};
use crate::loci::{self, LocusKind, LocusPoint};
use crate::lyapunov::{self, NormalFormData, OracleOptions};
use crate::model::{ModelParams, ParamId, State};
use crate::svg;

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "DELISI_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LociConfig {
    pub kinds: Vec<LocusKind>,
    /// `lambda` grid for the saddle-node and Hopf kinds.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for LociConfig {
    fn default() -> Self {
        LociConfig {
            kinds: vec![LocusKind::TakensBogdanov, LocusKind::Bautin],
            lambda_min: 0.05,
            lambda_max: 2.0,
            points: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Hopf point at this `lambda2 / lambda1`; `None` keeps `lambda2` fixed.
    pub lambda: Option<f64>,
    pub oracle: bool,
    pub oracle_options: OracleOptions,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            lambda: None,
            oracle: true,
            oracle_options: OracleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRequest {
    #[default]
    Equilibrium,
    Fold,
    Hopf,
    Cycles,
    Lpc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchConfig {
    pub kind: BranchRequest,
    /// Free parameter of equilibrium and cycle branches.
    pub free: ParamId,
    pub window: [f64; 2],
    /// Start towards increasing values (of the free parameter, of `lambda`
    /// on fold and Hopf curves, of `lambda2` on LPC curves).
    pub forward: bool,
    /// Index into the equilibria at `params` for equilibrium branches.
    pub start: usize,
    pub plane: PlaneWindow,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            kind: BranchRequest::Equilibrium,
            free: ParamId::Lambda1,
            window: [1e-3, 0.1],
            forward: true,
            start: 1,
            plane: default_plane(),
        }
    }
}

fn default_plane() -> PlaneWindow {
    PlaneWindow {
        lambda1: [2e-3, 5e-2],
        lambda2: [1e-3, 2e-2],
        lambda: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramConfig {
    pub plane: PlaneWindow,
    /// The cycle family runs at `lambda2 = lambda2_GH (1 - cycle_offset)`.
    pub cycle_offset: f64,
    pub cycle_max_points: usize,
    /// `lambda2` values whose cycle families are followed to the
    /// large-period end; the ends form the homoclinic proxy.
    pub homoclinic_lambda2: Vec<f64>,
    pub homoclinic_max_points: usize,
}

impl Default for DiagramConfig {
    fn default() -> Self {
        DiagramConfig {
            plane: default_plane(),
            cycle_offset: 0.023,
            cycle_max_points: 300,
            homoclinic_lambda2: Vec::new(),
            homoclinic_max_points: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitConfig {
    /// `(x, y)` seeds; empty picks seeds around the equilibria.
    pub seeds: Vec<[f64; 2]>,
    pub t_max: f64,
    pub threshold: bool,
    /// Overlay the cycles found by continuation from the Hopf point at the
    /// same `lambda2`.
    pub cycles: bool,
    pub cycle_max_points: usize,
    /// `[x0, x1, y0, y1]`.
    pub frame: Option<[f64; 4]>,
}

impl Default for PortraitConfig {
    fn default() -> Self {
        PortraitConfig {
            seeds: Vec::new(),
            t_max: 5000.0,
            threshold: false,
            cycles: false,
            cycle_max_points: 400,
            frame: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub offset: f64,
    /// Seeds per side of the two-sided classification; 0 skips it.
    pub classify: usize,
    pub classify_offset: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            offset: threshold::SEED_OFFSET,
            classify: 20,
            classify_offset: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub equilibria: EquilibriumOptions,
    pub loci: LociConfig,
    pub lyapunov: LyapunovConfig,
    pub continuation: ContinuationOptions,
    pub cycles: CycleOptions,
    pub branch: BranchConfig,
    pub diagram: DiagramConfig,
    pub portrait: PortraitConfig,
    pub threshold: ThresholdConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            format: Format::Csv,
            output: None,
            equilibria: EquilibriumOptions::default(),
            loci: LociConfig::default(),
            lyapunov: LyapunovConfig::default(),
            continuation: ContinuationOptions::default(),
            cycles: CycleOptions::default(),
            branch: BranchConfig::default(),
            diagram: DiagramConfig::default(),
            portrait: PortraitConfig::default(),
            threshold: ThresholdConfig::default(),
        }
    }
}

impl RunConfig {
    /// Tolerances and step sizes must be positive, grids non-degenerate.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let c = &self.continuation;
        let y = &self.cycles;
        let o = &self.lyapunov.oracle_options;
        let e = &self.equilibria;
        let positive = [
            ("continuation.h0", c.h0),
            ("continuation.h_min", c.h_min),
            ("continuation.h_max", c.h_max),
            ("continuation.residual_tol", c.residual_tol),
            ("continuation.step_tol", c.step_tol),
            ("continuation.bisect_tol", c.bisect_tol),
            ("cycles.rtol", y.rtol),
            ("cycles.atol", y.atol),
            ("cycles.initial_amplitude", y.initial_amplitude),
            ("cycles.period_cap", y.period_cap),
            ("cycles.stall_period_ratio", y.stall_period_ratio),
            ("cycles.min_amplitude", y.min_amplitude),
            ("lyapunov.oracle_options.scale", o.scale),
            ("lyapunov.oracle_options.rtol", o.rtol),
            ("lyapunov.oracle_options.atol", o.atol),
            ("equilibria.det_tol", e.det_tol),
            ("equilibria.trace_tol", e.trace_tol),
            ("equilibria.fold_tol", e.fold_tol),
            ("portrait.t_max", self.portrait.t_max),
            ("threshold.offset", self.threshold.offset),
            ("threshold.classify_offset", self.threshold.classify_offset),
            ("loci.lambda_min", self.loci.lambda_min),
            ("loci.lambda_max", self.loci.lambda_max),
            ("diagram.cycle_offset", self.diagram.cycle_offset),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(c.h_min <= c.h0 && c.h0 <= c.h_max) {
            return Err(Error::Config(
                "continuation step sizes must satisfy h_min <= h0 <= h_max".into(),
            ));
        }
        if self.loci.lambda_min > self.loci.lambda_max {
            return Err(Error::Config("loci.lambda_min exceeds loci.lambda_max".into()));
        }
        if y.segments < 2 {
            return Err(Error::Config("cycles.segments must be at least 2".into()));
        }
        if !(self.branch.window[0] < self.branch.window[1]) {
            return Err(Error::Config("branch.window must be increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "delisi",
    version,
    about = "Bifurcation analysis of the polynomial Delisi tumor-immune model"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run config; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or directory for `diagram`.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default from DELISI_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub lambda1: Option<f64>,
    #[arg(long, global = true)]
    pub lambda2: Option<f64>,
    #[arg(long, global = true)]
    pub alpha1: Option<f64>,
    #[arg(long, global = true)]
    pub alpha2: Option<f64>,
    #[arg(long, global = true)]
    pub xc: Option<f64>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Any config key, as `dotted.key=json`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria and their classification.
    Equilibria,
    /// Closed-form bifurcation loci.
    Loci {
        /// Comma-separated kinds: saddle_node, takens_bogdanov, hopf, neutral_saddle, bautin.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Normal-form coefficients and the first Lyapunov coefficient.
    Lyapunov {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        no_oracle: bool,
    },
    /// One continuation run.
    Continue {
        #[arg(long, value_parser = ["equilibrium", "fold", "hopf", "cycles", "lpc"])]
        branch: Option<String>,
        #[arg(long)]
        free: Option<String>,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        backward: bool,
    },
    /// Fold, Hopf, cycle and LPC continuations in the (lambda1, lambda2) plane.
    Diagram,
    /// Phase portrait SVG.
    Portrait {
        /// Seed as `x,y`; repeatable.
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        seed: Vec<String>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        threshold: bool,
        #[arg(long)]
        cycles: bool,
    },
    /// Elimination-threshold curve and the two-sided classification test.
    Threshold {
        #[arg(long)]
        classify: Option<usize>,
    },
    /// Linearization, consistency and reduced flows of the chart at infinity.
    InfinityCheck,
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("config key '{key}' does not name an object path")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn num(v: f64) -> Result<Value> {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .ok_or_else(|| Error::Config(format!("non-finite value {v}")))
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut v = serde_json::to_value(RunConfig::default())?;
    if let Some(path) = &cli.common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)?;
        if !file.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        merge(&mut v, file);
    }
    let c = &cli.common;
    let mut sets: Vec<(String, Value)> = Vec::new();
    for (k, x) in [
        ("params.lambda1", c.lambda1),
        ("params.lambda2", c.lambda2),
        ("params.alpha1", c.alpha1),
        ("params.alpha2", c.alpha2),
        ("params.xc", c.xc),
    ] {
        if let Some(x) = x {
            sets.push((k.into(), num(x)?));
        }
    }
    if let Some(f) = &c.format {
        sets.push(("format".into(), Value::String(f.clone())));
    }
    if let Some(o) = &c.out {
        sets.push(("output".into(), Value::String(o.display().to_string())));
    }
    match &cli.command {
        Command::Loci {
            kinds,
            lambda_min,
            lambda_max,
            points,
        } => {
            if let Some(ks) = kinds {
                let parsed = ks
                    .iter()
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<LocusKind>().map(|k| Value::String(k.as_str().into())))
                    .collect::<Result<Vec<_>>>()?;
                sets.push(("loci.kinds".into(), Value::Array(parsed)));
            }
            if let Some(x) = lambda_min {
                sets.push(("loci.lambda_min".into(), num(*x)?));
            }
            if let Some(x) = lambda_max {
                sets.push(("loci.lambda_max".into(), num(*x)?));
            }
            if let Some(n) = points {
                sets.push(("loci.points".into(), Value::from(*n)));
            }
        }
        Command::Lyapunov { lambda, no_oracle } => {
            if let Some(x) = lambda {
                sets.push(("lyapunov.lambda".into(), num(*x)?));
            }
            if *no_oracle {
                sets.push(("lyapunov.oracle".into(), Value::Bool(false)));
            }
        }
        Command::Continue {
            branch,
            free,
            min,
            max,
            backward,
        } => {
            if let Some(b) = branch {
                sets.push(("branch.kind".into(), Value::String(b.clone())));
            }
            if let Some(f) = free {
                let id: ParamId = f.parse()?;
                sets.push(("branch.free".into(), serde_json::to_value(id)?));
            }
            if let Some(x) = min {
                sets.push(("branch.window.0".into(), num(*x)?));
            }
            if let Some(x) = max {
                sets.push(("branch.window.1".into(), num(*x)?));
            }
            if *backward {
                sets.push(("branch.forward".into(), Value::Bool(false)));
            }
        }
        Command::Portrait {
            seed,
            t_max,
            threshold,
            cycles,
        } => {
            if !seed.is_empty() {
                let seeds = seed.iter().map(|s| parse_seed(s)).collect::<Result<Vec<_>>>()?;
                sets.push(("portrait.seeds".into(), serde_json::to_value(seeds)?));
            }
            if let Some(t) = t_max {
                sets.push(("portrait.t_max".into(), num(*t)?));
            }
            if *threshold {
                sets.push(("portrait.threshold".into(), Value::Bool(true)));
            }
            if *cycles {
                sets.push(("portrait.cycles".into(), Value::Bool(true)));
            }
        }
        Command::Threshold { classify } => {
            if let Some(n) = classify {
                sets.push(("threshold.classify".into(), Value::from(*n)));
            }
        }
        Command::Equilibria | Command::Diagram | Command::InfinityCheck => {}
    }
    for s in &c.set {
        let (k, raw) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
        let val = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        sets.push((k.to_string(), val));
    }
    for (k, val) in sets {
        if let Some(idx) = k.strip_prefix("branch.window.") {
            let i: usize = idx.parse().map_err(|_| Error::Config(format!("bad key {k}")))?;
            v["branch"]["window"][i] = val;
        } else {
            set_path(&mut v, &k, val)?;
        }
    }
    let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_seed(s: &str) -> Result<[f64; 2]> {
    let bad = || Error::Config(format!("seed must be 'x,y', got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok([
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ])
}

/// Sets the global worker pool from `--threads` or the environment.
pub fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{s}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        // A pool built earlier in the same process wins; that is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// What a command produced: named artifacts plus warnings for partial output.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn single(name: &str, body: String) -> Outcome {
        Outcome {
            files: vec![(name.to_string(), body)],
            warnings: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn json_doc<T: Serialize>(cfg: &RunConfig, result: T) -> Result<String> {
    to_json(&Wrapped { config: cfg, result })
}

fn csv_doc<F>(cfg: &RunConfig, write: F) -> Result<String>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = config_comment(cfg)?.into_bytes();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
}

fn svg_doc(cfg: &RunConfig, svg: String) -> Result<String> {
    let comment = format!(
        "<!-- config: {} -->\n",
        serde_json::to_string(cfg)?.replace("--", "- -")
    );
    let cut = svg.find("<svg").unwrap_or(0);
    Ok(format!("{}{}{}", &svg[..cut], comment, &svg[cut..]))
}

pub fn write_equilibria_csv<W: Write>(w: W, params: &ModelParams, eqs: &[Equilibrium]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["psi", "xc", "x0", "y0", "trace", "det", "kind"])?;
    for e in eqs {
        wr.write_record([
            fmt17(params.psi()),
            fmt17(params.xc),
            fmt17(e.state.x),
            fmt17(e.state.y),
            fmt17(e.trace),
            fmt17(e.det),
            e.kind.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn cmd_equilibria(cfg: &RunConfig) -> Result<Outcome> {
    let eqs = equilibria::find_equilibria_with(&cfg.params, &cfg.equilibria);
    let body = match cfg.format {
        Format::Csv => csv_doc(cfg, |b| write_equilibria_csv(b, &cfg.params, &eqs))?,
        Format::Json => json_doc(cfg, &eqs)?,
    };
    Ok(Outcome::single("equilibria", body))
}

fn lambda_grid(c: &LociConfig) -> Vec<f64> {
    match c.points {
        0 => Vec::new(),
        1 => vec![c.lambda_min],
        n => (0..n)
            .map(|k| c.lambda_min + (c.lambda_max - c.lambda_min) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn neutral_saddles(p: &ModelParams) -> Result<Vec<LocusPoint>> {
    let mut out = Vec::new();
    for r in loci::hopf_lambda_roots(p.psi(), p.xc)? {
        if r.kind != LocusKind::NeutralSaddle {
            continue;
        }
        let q = ModelParams::from_composites(p.psi(), r.lambda, p.alpha1, p.alpha2, p.xc)?;
        let s = State::new(r.x0, equilibria::equilibrium_ordinate(&q, r.x0));
        let eq = equilibria::classify(&q, s, &EquilibriumOptions::strict());
        let mut d = std::collections::BTreeMap::new();
        d.insert("hopf_residual".to_string(), r.residual);
        out.push(LocusPoint {
            kind: LocusKind::NeutralSaddle,
            params: q,
            equilibrium: eq,
            diagnostics: d,
        });
    }
    Ok(out)
}

/// Rows for every selected kind, in the order the kinds are listed.
pub fn loci_points(cfg: &RunConfig) -> Result<(Vec<LocusPoint>, Vec<String>)> {
    let p = &cfg.params;
    let (a1, a2, xc) = (p.alpha1, p.alpha2, p.xc);
    let grid = lambda_grid(&cfg.loci);
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for kind in &cfg.loci.kinds {
        match kind {
            LocusKind::SaddleNode => out.extend(loci::saddle_node_curve(a1, a2, xc, &grid)?),
            LocusKind::TakensBogdanov => out.push(loci::bt_point(a1, a2, xc)?),
            LocusKind::Bautin => match loci::bautin_point(a1, a2, xc) {
                Ok(b) => out.push(b),
                Err(e) => warnings.push(format!("bautin: {e}")),
            },
            LocusKind::Hopf => {
                let pts: Vec<_> = grid
                    .par_iter()
                    .map(|&l| loci::hopf_locus_point(a1, a2, xc, l))
                    .collect();
                let mut skipped = 0;
                for r in pts {
                    match r {
                        Ok(pt) => out.push(pt),
                        Err(_) => skipped += 1,
                    }
                }
                if skipped > 0 {
                    warnings.push(format!("hopf: {skipped} grid values of lambda carry no Hopf point"));
                }
            }
            LocusKind::NeutralSaddle => out.extend(neutral_saddles(p)?),
        }
    }
    Ok((out, warnings))
}

pub fn cmd_loci(cfg: &RunConfig) -> Result<Outcome> {
    let (pts, warnings) = loci_points(cfg)?;
    let body = match cfg.format {
        Format::Csv => csv_doc(cfg, |b| loci::write_loci_csv(b, &pts))?,
        Format::Json => json_doc(cfg, &pts)?,
    };
    Ok(Outcome {
        files: vec![("loci".into(), body)],
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub params: ModelParams,
    pub x0: f64,
    pub y0: f64,
    #[serde(flatten)]
    pub normal_form: NormalFormData,
    pub oracle_sign: Option<i8>,
}

pub fn lyapunov_report(cfg: &RunConfig) -> Result<LyapunovReport> {
    let p = &cfg.params;
    let (q, eq) = match cfg.lyapunov.lambda {
        Some(l) => loci::hopf_point_at_lambda(p.alpha1, p.alpha2, p.xc, l)?,
        None => loci::hopf_point_at_lambda2(p.alpha1, p.alpha2, p.xc, p.lambda2)?,
    };
    let nf = lyapunov::first_lyapunov(&q, &eq)?;
    let oracle_sign = if cfg.lyapunov.oracle {
        let o = OracleOptions {
            scale: cfg.lyapunov.oracle_options.scale * eq.state.x,
            ..cfg.lyapunov.oracle_options
        };
        Some(lyapunov::model_oracle(&q, &eq, &o)?.sign)
    } else {
        None
    };
    Ok(LyapunovReport {
        params: q,
        x0: eq.state.x,
        y0: eq.state.y,
        normal_form: nf,
        oracle_sign,
    })
}

pub fn cmd_lyapunov(cfg: &RunConfig) -> Result<Outcome> {
    Ok(Outcome::single("lyapunov", json_doc(cfg, lyapunov_report(cfg)?)?))
}

fn hopf_start(p: &ModelParams) -> Result<(ModelParams, Equilibrium)> {
    loci::hopf_point_at_lambda2(p.alpha1, p.alpha2, p.xc, p.lambda2)
}

fn cycle_family(p: &ModelParams, cfg: &RunConfig, window: [f64; 2], opts: &ContinuationOptions) -> Result<Branch> {
    let (q, eq) = hopf_start(p)?;
    continue_cycles(&q, &eq, ParamId::Lambda1, window, &cfg.cycles, opts)
}

fn sign(forward: bool) -> f64 {
    if forward {
        1.0
    } else {
        -1.0
    }
}

pub fn run_branch(cfg: &RunConfig) -> Result<Branch> {
    let p = &cfg.params;
    let b = &cfg.branch;
    let opts = &cfg.continuation;
    match b.kind {
        BranchRequest::Equilibrium => {
            let eqs = equilibria::find_equilibria_with(p, &cfg.equilibria);
            let e = eqs.get(b.start).ok_or_else(|| {
                Error::Precondition(format!(
                    "branch.start = {} but only {} equilibria exist",
                    b.start,
                    eqs.len()
                ))
            })?;
            continue_equilibria(p, e.state, b.free, b.window, b.forward, opts)
        }
        BranchRequest::Fold => {
            let start = loci::saddle_node_point(p.alpha1, p.alpha2, p.xc, p.lambda())?;
            continue_fold_curve(&start, sign(b.forward), b.plane, opts)
        }
        BranchRequest::Hopf => {
            let start = loci::hopf_locus_point(p.alpha1, p.alpha2, p.xc, p.lambda())?;
            continue_hopf_curve(&start, sign(b.forward), b.plane, opts)
        }
        BranchRequest::Cycles => {
            if b.free != ParamId::Lambda1 {
                return Err(Error::Config("cycle families run in lambda1".into()));
            }
            cycle_family(p, cfg, b.window, opts)
        }
        BranchRequest::Lpc => {
            let fam = cycle_family(p, cfg, b.window, opts)?;
            let start = fam
                .tagged(Tag::Lpc)
                .next()
                .ok_or_else(|| Error::Precondition(format!("cycle family has no LPC ({})", fam.end)))?;
            lpc_curve(start, sign(b.forward), b.plane, &cfg.cycles, opts)
        }
    }
}

fn branch_csv(cfg: &RunConfig, b: &Branch) -> Result<String> {
    csv_doc(cfg, |w| continuation::write_branch_csv(w, b))
}

pub fn cmd_continue(cfg: &RunConfig) -> Result<Outcome> {
    let b = run_branch(cfg)?;
    let index = continuation::special_point_index(&[("branch".to_string(), &b)]);
    let mut out = Outcome {
        files: vec![
            ("branch".into(), branch_csv(cfg, &b)?),
            ("specials".into(), json_doc(cfg, &index)?),
        ],
        warnings: Vec::new(),
    };
    out.warnings.push(format!("branch ended: {}", b.end));
    Ok(out)
}

/// `backward` reversed, then `forward` without its first point. Both must
/// start from the same corrected point.
pub fn join_branches(backward: Branch, forward: Branch) -> Branch {
    let nb = backward.points.len();
    let mut points: Vec<BranchPoint> = backward.points.into_iter().rev().collect();
    let mut specials: Vec<SpecialPoint> = backward
        .special_points
        .iter()
        .map(|s| SpecialPoint {
            index: nb - 1 - s.index,
            tag: s.tag,
        })
        .collect();
    specials.reverse();
    let off = points.len() - 1;
    let shift = points.first().map_or(0.0, |p| p.arclength);
    for p in points.iter_mut() {
        p.arclength = shift - p.arclength;
    }
    for (i, mut p) in forward.points.into_iter().enumerate() {
        if i == 0 {
            continue;
        }
        p.arclength += shift;
        points.push(p);
    }
    specials.extend(
        forward
            .special_points
            .iter()
            .filter(|s| s.index > 0)
            .map(|s| SpecialPoint {
                index: s.index + off,
                tag: s.tag,
            }),
    );
    Branch {
        kind: forward.kind,
        test_names: forward.test_names,
        points,
        special_points: specials,
        end: format!("backward: {}; forward: {}", backward.end, forward.end),
    }
}

/// All branches of the two-parameter diagram, in drawing order.
pub struct DiagramRun {
    pub branches: Vec<(String, Branch)>,
    pub warnings: Vec<String>,
}

pub fn build_diagram(cfg: &RunConfig) -> Result<DiagramRun> {
    let p = &cfg.params;
    let (a1, a2, xc) = (p.alpha1, p.alpha2, p.xc);
    let d = &cfg.diagram;
    let opts = cfg.continuation;
    let mut branches = Vec::new();
    let mut warnings = Vec::new();
    fn record(name: &str, r: Result<Branch>, branches: &mut Vec<(String, Branch)>, warnings: &mut Vec<String>) {
        match r {
            Ok(b) => branches.push((name.to_string(), b)),
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
    }

    let bt = loci::bt_point(a1, a2, xc)?;
    let fold_start = loci::saddle_node_point(a1, a2, xc, 1.25 * bt.params.lambda())?;
    let fold = continue_fold_curve(&fold_start, 1.0, d.plane, &opts).and_then(|up| {
        Ok(join_branches(
            up,
            continue_fold_curve(&fold_start, -1.0, d.plane, &opts)?,
        ))
    });
    record("fold", fold, &mut branches, &mut warnings);
    record(
        "hopf",
        continue_hopf_curve(&bt, -1.0, d.plane, &opts),
        &mut branches,
        &mut warnings,
    );

    let gh = loci::bautin_point(a1, a2, xc);
    let l2c = match &gh {
        Ok(g) => Some(g.params.lambda2 * (1.0 - d.cycle_offset)),
        Err(e) => {
            warnings.push(format!("bautin: {e}"));
            None
        }
    };
    if let Some(l2) = l2c {
        let q = p.with(ParamId::Lambda2, l2);
        let fam_opts = ContinuationOptions {
            max_points: d.cycle_max_points,
            ..opts
        };
        match cycle_family(&q, cfg, d.plane.lambda1, &fam_opts) {
            Ok(fam) => {
                let lpc = fam.tagged(Tag::Lpc).next().cloned();
                branches.push(("cycles".into(), fam));
                match lpc {
                    Some(start) => {
                        let runs: Vec<_> = [1.0, -1.0]
                            .par_iter()
                            .map(|&s| lpc_curve(&start, s, d.plane, &cfg.cycles, &opts))
                            .collect();
                        let mut it = runs.into_iter();
                        record("lpc_up", it.next().expect("two runs"), &mut branches, &mut warnings);
                        record("lpc_down", it.next().expect("two runs"), &mut branches, &mut warnings);
                    }
                    None => warnings.push(format!("cycles: no LPC at lambda2 = {l2}")),
                }
            }
            Err(e) => warnings.push(format!("cycles: {e}")),
        }
    }

    if !d.homoclinic_lambda2.is_empty() {
        let hom_opts = ContinuationOptions {
            max_points: d.homoclinic_max_points,
            ..opts
        };
        let ends: Vec<_> = d
            .homoclinic_lambda2
            .par_iter()
            .map(|&l2| {
                let fam = cycle_family(&p.with(ParamId::Lambda2, l2), cfg, d.plane.lambda1, &hom_opts)?;
                let end = fam.tagged(Tag::HomApprox).next().cloned();
                Ok::<_, Error>(end)
            })
            .collect();
        let mut points = Vec::new();
        for (l2, r) in d.homoclinic_lambda2.iter().zip(ends) {
            match r {
                Ok(Some(pt)) => points.push(pt),
                Ok(None) => warnings.push(format!("homoclinic: family at lambda2 = {l2} ended without HOM_APPROX")),
                Err(e) => warnings.push(format!("homoclinic: lambda2 = {l2}: {e}")),
            }
        }
        points.sort_by(|a, b| a.params.lambda2.total_cmp(&b.params.lambda2));
        let special_points = (0..points.len())
            .map(|index| SpecialPoint {
                index,
                tag: Tag::HomApprox,
            })
            .collect();
        branches.push((
            "homoclinic".into(),
            Branch {
                kind: BranchKind::HomoclinicProxy,
                test_names: Vec::new(),
                points,
                special_points,
                end: "collected".into(),
            },
        ));
    }
    Ok(DiagramRun { branches, warnings })
}

pub fn cmd_diagram(cfg: &RunConfig) -> Result<Outcome> {
    let run = build_diagram(cfg)?;
    let mut files = Vec::new();
    for (name, b) in &run.branches {
        files.push((format!("{name}.csv"), branch_csv(cfg, b)?));
    }
    let named: Vec<(String, &Branch)> = run.branches.iter().map(|(n, b)| (n.clone(), b)).collect();
    files.push((
        "specials.json".into(),
        json_doc(cfg, continuation::special_point_index(&named))?,
    ));
    let layers: Vec<svg::DiagramLayer<'_>> = run
        .branches
        .iter()
        .filter(|(_, b)| b.kind != BranchKind::CycleFamily)
        .map(|(n, b)| svg::DiagramLayer { name: n, branch: b })
        .collect();
    let frame = svg::Frame {
        x: cfg.diagram.plane.lambda1,
        y: cfg.diagram.plane.lambda2,
    };
    files.push((
        "diagram.svg".into(),
        svg_doc(cfg, svg::diagram_svg(&layers, &[], Some(frame)))?,
    ));
    Ok(Outcome {
        files,
        warnings: run.warnings,
    })
}

fn default_seeds(p: &ModelParams) -> Vec<State> {
    let mut seeds = Vec::new();
    for e in equilibria::find_equilibria(p) {
        let (x, y) = (e.state.x, e.state.y);
        if x <= 0.0 {
            continue;
        }
        for (dx, dy) in [
            (0.1, 0.0),
            (-0.1, 0.0),
            (0.0, 0.1),
            (0.0, -0.1),
            (0.5, 0.5),
            (-0.5, -0.5),
        ] {
            let s = State::new(x * (1.0 + dx), y * (1.0 + dy));
            if s.x >= 0.0 && s.x <= p.xc && s.y >= 0.0 {
                seeds.push(s);
            }
        }
    }
    for k in 1..=6 {
        seeds.push(State::new(0.5 * k as f64, 1.5));
    }
    seeds
}

pub fn build_portrait(cfg: &RunConfig) -> Result<(dynamics::PhasePortrait, Vec<String>)> {
    let p = &cfg.params;
    let c = &cfg.portrait;
    let seeds: Vec<State> = if c.seeds.is_empty() {
        default_seeds(p)
    } else {
        c.seeds.iter().map(|s| State::new(s[0], s[1])).collect()
    };
    let mut pp = dynamics::phase_portrait(p, &seeds, c.t_max)?;
    let mut warnings = Vec::new();
    if c.threshold {
        match threshold::threshold_curve_with(p, cfg.threshold.offset, &SolverOptions::default()) {
            Ok(h) => pp = pp.with_threshold(h),
            Err(e) => warnings.push(format!("threshold: {e}")),
        }
    }
    if c.cycles {
        match portrait_cycles(cfg) {
            Ok(cs) => {
                warnings.push(format!("cycles: {} at lambda1 = {}", cs.len(), p.lambda1));
                pp = pp.with_cycles(cs);
            }
            Err(e) => warnings.push(format!("cycles: {e}")),
        }
    }
    Ok((pp, warnings))
}

/// Cycles at `params.lambda1` on the family born at the Hopf point with
/// the same `lambda2`.
pub fn portrait_cycles(cfg: &RunConfig) -> Result<Vec<CycleOverlay>> {
    let p = &cfg.params;
    let opts = ContinuationOptions {
        max_points: cfg.portrait.cycle_max_points,
        ..cfg.continuation
    };
    let fam = cycle_family(p, cfg, cfg.branch.plane.lambda1, &opts)?;
    let pts = continuation::cycles_at(&fam, ParamId::Lambda1, p.lambda1, &cfg.cycles, &cfg.continuation)?;
    Ok(pts
        .into_iter()
        .filter_map(|pt| pt.cycle)
        .map(|c| CycleOverlay {
            stable: c.stability == continuation::Stability::Stable,
            samples: c.samples,
        })
        .collect())
}

pub fn cmd_portrait(cfg: &RunConfig) -> Result<Outcome> {
    let (pp, warnings) = build_portrait(cfg)?;
    let frame = cfg.portrait.frame.map(|f| svg::Frame {
        x: [f[0], f[1]],
        y: [f[2], f[3]],
    });
    Ok(Outcome {
        files: vec![("portrait.svg".into(), svg_doc(cfg, svg::portrait_svg(&pp, frame))?)],
        warnings,
    })
}

#[derive(Debug, Serialize)]
pub struct ThresholdReport {
    pub y_c: f64,
    pub max_residual: f64,
    pub samples: usize,
    pub classification: Option<threshold::Classification>,
}

pub fn cmd_threshold(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let h = threshold::threshold_curve_with(p, cfg.threshold.offset, &SolverOptions::default())?;
    let classification = match cfg.threshold.classify {
        0 => None,
        n => Some(threshold::classify_sides(p, &h, n, cfg.threshold.classify_offset)?),
    };
    let mut warnings = Vec::new();
    if let Some(c) = &classification {
        if c.misclassified > 0 {
            warnings.push(format!("{} misclassified seeds", c.misclassified));
        }
    }
    let body = match cfg.format {
        Format::Csv => csv_doc(cfg, |b| {
            let mut wr = csv::Writer::from_writer(b);
            wr.write_record(["x", "h"])?;
            for &(x, y) in &h.samples {
                wr.write_record([fmt17(x), fmt17(y)])?;
            }
            wr.flush()?;
            Ok(())
        })?,
        Format::Json => json_doc(cfg, &h)?,
    };
    let report = ThresholdReport {
        y_c: h.y_c(),
        max_residual: h.max_residual(),
        samples: h.samples.len(),
        classification,
    };
    Ok(Outcome {
        files: vec![
            ("threshold".into(), body),
            ("classification".into(), json_doc(cfg, report)?),
        ],
        warnings,
    })
}

/// Large-`y` affine sample points for the chart consistency check.
pub fn large_y_points(params: &ModelParams, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) / n as f64;
            (params.xc * t, 1e3 * (1.0 + 9.0 * ((7.0 * t).fract())))
        })
        .collect()
}

pub fn cmd_infinity_check(cfg: &RunConfig) -> Result<Outcome> {
    let r = chart::infinity_report(&cfg.params, &large_y_points(&cfg.params, 100));
    Ok(Outcome::single("infinity", json_doc(cfg, r)?))
}

/// Runs one command and writes its artifacts. With one artifact and no
/// `output`, it goes to stdout; a directory `output` receives every file.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    init_threads(cli.common.threads)?;
    let cfg = resolve_config(cli)?;
    let out = match &cli.command {
        Command::Equilibria => cmd_equilibria(&cfg)?,
        Command::Loci { .. } => cmd_loci(&cfg)?,
        Command::Lyapunov { .. } => cmd_lyapunov(&cfg)?,
        Command::Continue { .. } => cmd_continue(&cfg)?,
        Command::Diagram => cmd_diagram(&cfg)?,
        Command::Portrait { .. } => cmd_portrait(&cfg)?,
        Command::Threshold { .. } => cmd_threshold(&cfg)?,
        Command::InfinityCheck => cmd_infinity_check(&cfg)?,
    };
    write_outcome(&cli.command, &cfg, &out)?;
    Ok(out.warnings)
}

fn write_outcome(cmd: &Command, cfg: &RunConfig, out: &Outcome) -> Result<()> {
    let dir_mode = matches!(cmd, Command::Diagram);
    match &cfg.output {
        None if dir_mode => write_dir(Path::new("diagram"), out),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.files[0].1.as_bytes())?;
            Ok(())
        }
        Some(path) if dir_mode => write_dir(path, out),
        Some(path) => {
            fs::write(path, &out.files[0].1)?;
            for (name, body) in out.files.iter().skip(1) {
                fs::write(path.with_extension(format!("{name}.json")), body)?;
            }
            Ok(())
        }
    }
}

fn write_dir(dir: &Path, out: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in &out.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("delisi").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn config_roundtrips_through_json() {
        let mut c = RunConfig::default();
        c.loci.kinds = vec![LocusKind::SaddleNode, LocusKind::Hopf];
        c.lyapunov.lambda = Some(0.4);
        c.portrait.frame = Some([0.0, 4.0, 0.0, 3.0]);
        c.diagram.homoclinic_lambda2 = vec![0.003, 0.0035];
        let s = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_config_keys() {
        let cli = parse(&[
            "--lambda1",
            "0.02",
            "--set",
            "continuation.h_max=0.01",
            "loci",
            "--kinds",
            "bt,gh",
        ]);
        let c = resolve_config(&cli).unwrap();
        assert_eq!(c.params.lambda1, 0.02);
        assert_eq!(c.continuation.h_max, 0.01);
        assert_eq!(c.loci.kinds, vec![LocusKind::TakensBogdanov, LocusKind::Bautin]);
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let cli = parse(&["--set", "continuation.residual_tol=0", "equilibria"]);
        let e = resolve_config(&cli).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let cli = parse(&["--set", "loci.bogus=1", "loci"]);
        assert_eq!(resolve_config(&cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn bt_and_bautin_rows() {
        let (pts, _) = loci_points(&RunConfig::default()).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].params.lambda() - 0.66720).abs() < 1e-5);
        assert!((pts[1].params.lambda() - 0.33280).abs() < 1e-5);
    }

    #[test]
    fn join_reindexes_tags() {
        let bt = loci::bt_point(0.297312, 0.00318, 2500.0).unwrap();
        let start = loci::saddle_node_point(0.297312, 0.00318, 2500.0, 1.25 * bt.params.lambda()).unwrap();
        let w = PlaneWindow {
            lambda1: [5e-3, 2e-2],
            lambda2: [2e-3, 1e-2],
            lambda: None,
        };
        let o = ContinuationOptions::default();
        let up = continue_fold_curve(&start, 1.0, w, &o).unwrap();
        let down = continue_fold_curve(&start, -1.0, w, &o).unwrap();
        let n = up.points.len() + down.points.len() - 1;
        let j = join_branches(up, down);
        assert_eq!(j.points.len(), n);
        assert_eq!(j.count(Tag::TakensBogdanov), 1);
        let t = j.tagged(Tag::TakensBogdanov).next().unwrap();
        assert!((t.params.lambda1 / bt.params.lambda1 - 1.0).abs() < 1e-6);
        for w in j.points.windows(2) {
            assert!(w[1].arclength >= w[0].arclength);
        }
    }

    #[test]
    fn equilibria_csv_has_header_and_config() {
        let out = cmd_equilibria(&RunConfig::default()).unwrap();
        let body = &out.files[0].1;
        assert!(body.starts_with("# config: "));
        assert_eq!(body.lines().nth(1).unwrap(), "psi,xc,x0,y0,trace,det,kind");
        let kinds: Vec<_> = body
            .lines()
            .skip(2)
            .map(|l| l.rsplit(',').next().unwrap().to_string())
            .collect();
        assert_eq!(kinds, ["trivial_saddle", "degenerate"]);
    }
}
