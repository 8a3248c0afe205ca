//! Workflows behind the `wsn-tpc` binary: feasibility slices, policy
//! solves, Monte Carlo simulation and parameter sweeps.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use wsn_tpc::mdp::PolicyDocument;
use wsn_tpc::power_control::write_slice_csv;
use wsn_tpc::sim::{monte_carlo, sweep, MonteCarloSummary, SweepAxis};

pub use config::ConfigDocument;

pub const SUMMARY_FORMAT: &str = "wsn-tpc-summary/1";

#[derive(Debug)]
pub enum CliError {
    Core(wsn_tpc::Error),
    Io { path: PathBuf, source: io::Error },
    Parse { path: PathBuf, message: String },
    /// The policy was solved for a different configuration.
    PolicyMismatch(String),
    /// Every point of a sweep failed.
    SweepFailed,
}

impl From<wsn_tpc::Error> for CliError {
    fn from(e: wsn_tpc::Error) -> Self {
        Self::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Core(e) => write!(f, "{e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Parse { path, message } => write!(f, "{}: {message}", path.display()),
            Self::PolicyMismatch(m) => write!(f, "{m}; rerun solve or pass --force"),
            Self::SweepFailed => f.write_str("every sweep point failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// 2 for usage, configuration and I/O problems; 3 for domain errors and
    /// infeasible requirements.
    pub fn exit_code(&self) -> u8 {
        use wsn_tpc::Error as E;
        match self {
            Self::Core(E::Usage(_) | E::Config(_)) => 2,
            Self::Core(E::Domain(_) | E::Infeasible(_) | E::NoConvergence(_)) => 3,
            Self::Io { .. } | Self::Parse { .. } | Self::PolicyMismatch(_) => 2,
            Self::SweepFailed => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// SHA-256 over `blob <len>\0<bytes>`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn hash_without(doc: &ConfigDocument, drop: &[&str]) -> String {
    let mut v = serde_json::to_value(doc).expect("config serialises");
    if let Some(map) = v.as_object_mut() {
        for key in drop {
            map.remove(*key);
        }
    }
    content_hash(serde_json::to_string(&v).expect("value serialises").as_bytes())
}

/// Hash of everything except the output location.
pub fn config_hash(doc: &ConfigDocument) -> String {
    hash_without(doc, &["output"])
}

/// Hash of the parts a policy depends on.
pub fn solve_hash(doc: &ConfigDocument) -> String {
    hash_without(doc, &["output", "simulation"])
}

/// A loaded configuration and where its outputs go.
#[derive(Debug, Clone)]
pub struct Context {
    pub doc: ConfigDocument,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut doc = ConfigDocument::from_json(&text)
            .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        if let Some(s) = seed {
            doc.simulation.seed = s;
        }
        let out_dir = out.unwrap_or_else(|| doc.output.dir.clone());
        Ok(Self { doc, out_dir })
    }

    pub fn config_hash(&self) -> String {
        config_hash(&self.doc)
    }

    fn create_out_dir(&self) -> CliResult<()> {
        fs::create_dir_all(&self.out_dir).map_err(io_err(&self.out_dir))
    }

    fn write_file(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<PathBuf> {
        self.create_out_dir()?;
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).and_then(|()| w.flush()).map_err(io_err(&path))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("output serialises");
        text.push('\n');
        self.write_file(name, |w| w.write_all(text.as_bytes()))
    }
}

/// Parses `link=kappa` pairs with one-based link numbers, e.g. `3=0.9`.
pub fn parse_fixed(items: &[String]) -> CliResult<Vec<(usize, f64)>> {
    let usage = |m: String| CliError::Core(wsn_tpc::Error::Usage(m));
    items
        .iter()
        .flat_map(|s| s.split(','))
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (l, k) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("expected LINK=KAPPA, got {item:?}")))?;
            let link: usize = l.trim().parse().map_err(|_| usage(format!("bad link number {l:?}")))?;
            let kappa: f64 = k.trim().parse().map_err(|_| usage(format!("bad PSR {k:?}")))?;
            if link == 0 {
                return Err(usage("links are numbered from 1".into()));
            }
            Ok((link, kappa))
        })
        .collect()
}

pub fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Core(wsn_tpc::Error::Usage(format!("bad sweep value {s:?}"))))
        })
        .collect()
}

/// Writes `feasibility.csv`: the feasible set of the two links left out of
/// `fixed`.
pub fn cmd_feasibility(ctx: &Context, fixed: &[(usize, f64)], resolution: usize) -> CliResult<PathBuf> {
    let links = ctx.doc.links();
    let mut pins = vec![None; links];
    for &(link, kappa) in fixed {
        if link > links {
            return Err(wsn_tpc::Error::Usage(format!("link {link} does not exist in a {links}-link network")).into());
        }
        pins[link - 1] = Some(kappa);
    }
    let net = ctx.doc.to_scenario()?.radio_network()?;
    let cells = net.feasibility_region_slice(&pins, resolution)?;
    let hash = ctx.config_hash();
    ctx.write_file("feasibility.csv", |w| {
        writeln!(w, "# config_hash: {hash}")?;
        write_slice_csv(w, &cells)
    })
}

/// Solves the configured MDP and writes `policy.json`.
pub fn cmd_solve(ctx: &Context) -> CliResult<PathBuf> {
    let scenario = ctx.doc.to_scenario()?;
    let solved = scenario.solve()?;
    let sol = &solved.solution;
    if !sol.converged {
        eprintln!(
            "warning: value iteration stopped after {} sweeps with change {:.3e} > {:.3e}",
            sol.sweeps, sol.final_delta, sol.config.epsilon
        );
    }
    if solved.actions_below_floor > 0 {
        eprintln!(
            "note: {} of {} actions allocate less than p_min on some link",
            solved.actions_below_floor,
            solved.mdp.actions().len()
        );
    }
    let mut doc = PolicyDocument::new(&solved.mdp, sol, &solved.policy);
    doc.config_hash = Some(ctx.config_hash());
    doc.solve_hash = Some(solve_hash(&ctx.doc));
    ctx.write_json("policy.json", &doc)
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    format: &'static str,
    config_hash: String,
    policy_solve_hash: Option<&'a str>,
    config: &'a ConfigDocument,
    summary: &'a MonteCarloSummary,
}

/// Simulates the policy at `policy_path` and writes `summary.json`, plus
/// one trace per episode under `traces/` when asked.
pub fn cmd_simulate(ctx: &Context, policy_path: &Path, traces: bool, force: bool) -> CliResult<PathBuf> {
    let text = fs::read_to_string(policy_path).map_err(io_err(policy_path))?;
    let doc: PolicyDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse { path: policy_path.to_path_buf(), message: e.to_string() })?;
    let expected = solve_hash(&ctx.doc);
    if doc.solve_hash.as_deref() != Some(expected.as_str()) {
        let msg = format!("policy {} was not solved for this configuration", policy_path.display());
        if !force {
            return Err(CliError::PolicyMismatch(msg));
        }
        eprintln!("warning: {msg}; continuing because of --force");
    }
    let policy = doc.to_policy()?;
    let scenario = ctx.doc.to_scenario()?;
    let (summary, episode_traces) = monte_carlo(&policy, &scenario.systems, &scenario.run, traces)?;
    let hash = ctx.config_hash();
    for (e, t) in episode_traces.iter().enumerate() {
        ctx.write_file(&format!("traces/episode_{e:04}.csv"), |w| t.write_csv(w, Some(&hash)))?;
    }
    let file = SummaryFile {
        format: SUMMARY_FORMAT,
        config_hash: hash.clone(),
        policy_solve_hash: doc.solve_hash.as_deref(),
        config: &ctx.doc,
        summary: &summary,
    };
    ctx.write_json("summary.json", &file)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_header(links: usize) -> String {
    let mut h = String::from(
        "axis,value,status,actions,sweeps,converged,final_delta,\
         sum_P,sum_P_hw,sum_p_watt,sum_p_watt_hw",
    );
    for l in 1..=links {
        write!(h, ",P_{l},P_{l}_hw,p_watt_{l},p_watt_{l}_hw").unwrap();
    }
    h
}

/// Re-solves and simulates at every value and writes `sweep.csv`. Fails
/// only if no point succeeds.
pub fn cmd_sweep(ctx: &Context, axis: SweepAxis, values: &[f64]) -> CliResult<PathBuf> {
    let scenario = ctx.doc.to_scenario()?;
    let rows = sweep(&scenario, axis, values)?;
    let links = scenario.links();
    let hash = ctx.config_hash();
    let path = ctx.write_file("sweep.csv", |w| {
        writeln!(w, "# config_hash: {hash}")?;
        writeln!(w, "{}", sweep_header(links))?;
        for r in &rows {
            match &r.outcome {
                Ok(o) => {
                    let s = &o.summary;
                    write!(
                        w,
                        "{axis},{},ok,{},{},{},{},{},{},{},{}",
                        r.value,
                        o.actions,
                        o.sweeps,
                        o.converged,
                        o.final_delta,
                        s.network_covariance,
                        opt(s.network_covariance_half_width),
                        s.network_power_watt,
                        opt(s.network_power_half_width)
                    )?;
                    for l in &s.links {
                        write!(
                            w,
                            ",{},{},{},{}",
                            l.mean_covariance,
                            opt(l.covariance_half_width),
                            l.mean_power_watt,
                            opt(l.power_half_width)
                        )?;
                    }
                    writeln!(w)?;
                }
                Err(msg) => {
                    let status = format!("error: {}", msg.replace([',', '\n', '"'], " "));
                    writeln!(w, "{axis},{},{status}{}", r.value, ",".repeat(8 + 4 * links))?;
                }
            }
        }
        Ok(())
    })?;
    for r in &rows {
        if let Err(msg) = &r.outcome {
            eprintln!("warning: {axis} = {}: {msg}", r.value);
        }
    }
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(CliError::SweepFailed);
    }
    Ok(path)
}
