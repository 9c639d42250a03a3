use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use log::info;
use rankbid_core::contest::{monte_carlo_contest_with, sequential_best_response, Strategy};
use rankbid_core::graph::{build_transition, matrix_power, network_values, SelfLoopPolicy};
use rankbid_core::voter::{empirical_adoption, trajectory};
use rankbid_core::{ContestSummary, EquilibriumFamily, ExploitOutcome, InfluenceGraph, PreferenceState, ValueVector};
use serde::Deserialize;

use crate::{CliError, Scenario};

pub const DEFAULT_CURVE_POINTS: usize = 1000;
/// Self-check bound for simulated payoffs, in standard errors.
pub const SIMULATE_Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct Options {
    pub output: PathBuf,
    pub strict_graph: bool,
    pub self_check: bool,
    pub curve_points: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            output: PathBuf::from("."),
            strict_graph: false,
            self_check: false,
            curve_points: DEFAULT_CURVE_POINTS,
        }
    }
}

impl Options {
    fn file(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.output).map_err(|e| io_error(&self.output, e))?;
        Ok(self.output.join(name))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

/// Writes a CSV with `\n` line endings and shortest round-trip float text.
fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_error = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| io_error(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load_graph(scenario: &Scenario, opts: &Options) -> Result<Option<InfluenceGraph>, CliError> {
    let Some(path) = &scenario.graph else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let policy = if opts.strict_graph { SelfLoopPolicy::Strict } else { SelfLoopPolicy::Repair };
    let loaded = InfluenceGraph::parse(&text, policy)?;
    let n = loaded.graph.node_count();
    if n != scenario.values.len() {
        return Err(CliError::Input(format!(
            "graph {} has {n} nodes but values lists {} customers",
            path.display(),
            scenario.values.len()
        )));
    }
    Ok(Some(loaded.graph))
}

/// Intrinsic values, the graph if any, and the values the contest is played
/// over (network values when a graph is given).
struct Inputs {
    intrinsic: ValueVector,
    graph: Option<InfluenceGraph>,
    values: ValueVector,
}

fn inputs(scenario: &Scenario, opts: &Options) -> Result<Inputs, CliError> {
    let intrinsic = scenario.values.to_vector()?;
    let graph = load_graph(scenario, opts)?;
    let values = match &graph {
        Some(g) => network_values(&intrinsic, &build_transition(g), scenario.tau)?,
        None => intrinsic.clone(),
    };
    Ok(Inputs { intrinsic, graph, values })
}

fn require_graph(graph: Option<InfluenceGraph>, command: &str) -> Result<InfluenceGraph, CliError> {
    graph.ok_or_else(|| CliError::Usage(format!("`{command}` needs a scenario with a `graph` key")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetValueReport {
    pub intrinsic_total: f64,
    pub network_total: f64,
    pub csv: PathBuf,
}

impl fmt::Display for NetValueReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "W = {}", self.intrinsic_total)?;
        write!(f, "V = {}", self.network_total)
    }
}

pub fn cmd_netvalue(scenario: &Scenario, opts: &Options) -> Result<NetValueReport, CliError> {
    let Inputs { intrinsic, graph, values } = inputs(scenario, opts)?;
    require_graph(graph, "netvalue")?;
    let csv = opts.file("netvalue.csv")?;
    let rows = (0..values.len()).map(|n| vec![n.to_string(), intrinsic.get(n).to_string(), values.get(n).to_string()]);
    write_csv(&csv, &["customer", "intrinsic", "network"], rows)?;
    Ok(NetValueReport { intrinsic_total: intrinsic.total(), network_total: values.total(), csv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub customer: usize,
    pub value: f64,
    pub total_value: f64,
    pub support_upper: f64,
    pub mean_offer: f64,
    pub cdf_csv: PathBuf,
    pub quantile_csv: PathBuf,
}

impl fmt::Display for EquilibriumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "customer {}: v = {} of V = {}", self.customer, self.value, self.total_value)?;
        writeln!(f, "support = [0, {}]", self.support_upper)?;
        write!(f, "mean offer = {}", self.mean_offer)
    }
}

pub fn cmd_equilibrium(scenario: &Scenario, customer: usize, opts: &Options) -> Result<EquilibriumReport, CliError> {
    let Inputs { values, .. } = inputs(scenario, opts)?;
    if customer >= values.len() {
        return Err(CliError::Input(format!("customer {customer} out of range for {} customers", values.len())));
    }
    let family = EquilibriumFamily::new(scenario.rule()?, scenario.budget, values.total())?;
    let v = values.get(customer);
    let cdf_csv = opts.file("equilibrium_cdf.csv")?;
    let pairs = |c: Vec<(f64, f64)>| c.into_iter().map(|(a, b)| vec![a.to_string(), b.to_string()]);
    write_csv(&cdf_csv, &["x", "cdf"], pairs(family.cdf_curve(v, opts.curve_points)?))?;
    let quantile_csv = opts.file("equilibrium_quantile.csv")?;
    write_csv(&quantile_csv, &["u", "quantile"], pairs(family.quantile_curve(v, opts.curve_points)?))?;
    Ok(EquilibriumReport {
        customer,
        value: v,
        total_value: values.total(),
        support_upper: family.support_upper(v),
        mean_offer: family.mean_offer(v),
        cdf_csv,
        quantile_csv,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub summary: ContestSummary,
    pub fair_share: f64,
    /// Largest |mean − V/K| in standard errors; absent for a single trial.
    pub max_z: Option<f64>,
    pub csv: PathBuf,
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials = {}, V/K = {}", self.summary.trials, self.fair_share)?;
        match self.max_z {
            Some(z) => write!(f, "max |z| = {z:.3}"),
            None => write!(f, "max |z| = n/a"),
        }
    }
}

pub fn cmd_simulate(scenario: &Scenario, opts: &Options) -> Result<SimulateReport, CliError> {
    let Inputs { values, .. } = inputs(scenario, opts)?;
    let family = EquilibriumFamily::new(scenario.rule()?, scenario.budget, values.total())?;
    let plays = vec![Strategy::Equilibrium; scenario.campaigns];
    let summary =
        monte_carlo_contest_with(&family, &values, &plays, scenario.tie_break, scenario.trials, scenario.seed)?;
    let fair_share = values.total() / scenario.campaigns as f64;
    let csv = opts.file("contest.csv")?;
    let rows = summary.mean.iter().zip(&summary.stderr).enumerate().map(|(k, (m, se))| {
        let se = if summary.has_stderr() { se.to_string() } else { "n/a".into() };
        vec![k.to_string(), m.to_string(), se, summary.trials.to_string()]
    });
    write_csv(&csv, &["campaign", "mean_payoff", "stderr", "trials"], rows)?;
    let max_z = summary.max_z_score(fair_share);
    if opts.self_check {
        if let Some(z) = max_z.filter(|z| z.is_nan() || *z > SIMULATE_Z_LIMIT) {
            return Err(CliError::SelfCheck(format!("a campaign is {z:.3} standard errors from V/K")));
        }
    }
    Ok(SimulateReport { summary, fair_share, max_z, csv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoterReport {
    pub max_abs_error: f64,
    /// 3·sqrt(0.25 / replications).
    pub bound: f64,
    pub csv: PathBuf,
    pub trajectory_csv: Option<PathBuf>,
}

impl fmt::Display for VoterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "max abs error = {} (bound {})", self.max_abs_error, self.bound)
    }
}

/// Compares empirical adoption with the walk matrix power. With
/// `with_trajectory`, also dumps every customer's top choice per round,
/// starting from the rotating preference state.
pub fn cmd_voter(scenario: &Scenario, with_trajectory: bool, opts: &Options) -> Result<VoterReport, CliError> {
    let Inputs { graph, .. } = inputs(scenario, opts)?;
    let graph = require_graph(graph, "voter")?;
    let (tau, reps, seed) = (scenario.tau, scenario.replications, scenario.seed);
    let empirical = empirical_adoption(&graph, tau, reps, seed)?;
    let exact = matrix_power(&build_transition(&graph), tau);
    let n = graph.node_count();
    let csv = opts.file("duality.csv")?;
    let rows = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| {
        let (e, x) = (empirical.get(j, k), exact.get(j, k));
        vec![j.to_string(), k.to_string(), e.to_string(), x.to_string(), (e - x).abs().to_string()]
    });
    write_csv(&csv, &["from", "to", "empirical", "exact", "abs_error"], rows)?;

    let trajectory_csv = if with_trajectory {
        let start = PreferenceState::rotating(n, scenario.campaigns)?;
        let path = opts.file("trajectory.csv")?;
        let rows = trajectory(&graph, &start, tau, reps, seed)?
            .into_iter()
            .map(|r| vec![r.replication.to_string(), r.time.to_string(), r.node.to_string(), r.top_choice.to_string()]);
        write_csv(&path, &["replication", "time", "node", "top_choice"], rows)?;
        Some(path)
    } else {
        None
    };

    let report = VoterReport {
        max_abs_error: empirical.max_abs_diff(&exact),
        bound: 3.0 * (0.25 / reps as f64).sqrt(),
        csv,
        trajectory_csv,
    };
    if opts.self_check && (report.max_abs_error.is_nan() || report.max_abs_error >= report.bound) {
        return Err(CliError::SelfCheck(format!("adoption error {} exceeds {}", report.max_abs_error, report.bound)));
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct OpponentRow {
    customer: usize,
    offer: f64,
}

/// Reads `customer,offer` rows; every customer must appear exactly once.
pub fn read_opponent(path: &Path, customers: usize) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut offers: Vec<Option<f64>> = vec![None; customers];
    for row in reader.deserialize() {
        let row: OpponentRow = row.map_err(|e| bad(e.to_string()))?;
        if row.customer >= customers {
            return Err(bad(format!("customer {} out of range for {customers} customers", row.customer)));
        }
        if !(row.offer >= 0.0 && row.offer.is_finite()) {
            return Err(bad(format!("offer {} for customer {} is not a nonnegative number", row.offer, row.customer)));
        }
        if offers[row.customer].replace(row.offer).is_some() {
            return Err(bad(format!("customer {} listed twice", row.customer)));
        }
    }
    offers.into_iter().enumerate().map(|(n, o)| o.ok_or_else(|| bad(format!("customer {n} missing")))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitReport {
    pub outcome: ExploitOutcome,
    pub csv: PathBuf,
}

impl fmt::Display for ExploitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "captured share = {}", self.outcome.captured_share)?;
        write!(f, "conceded {} customers", self.outcome.dropped.len())?;
        if self.outcome.shortfall {
            write!(f, " (margins could not be financed at the requested drop fraction)")?;
        }
        Ok(())
    }
}

pub fn cmd_exploit(
    scenario: &Scenario,
    opponent_path: &Path,
    drop_fraction: f64,
    epsilon: f64,
    opts: &Options,
) -> Result<ExploitReport, CliError> {
    let Inputs { values, .. } = inputs(scenario, opts)?;
    let opponent = read_opponent(opponent_path, values.len())?;
    let outcome = sequential_best_response(&opponent, &values, scenario.budget, drop_fraction, epsilon)?;
    let csv = opts.file("exploit.csv")?;
    let rows = (0..values.len()).map(|n| {
        vec![n.to_string(), opponent[n].to_string(), outcome.counter[n].to_string(), outcome.winners[n].to_string()]
    });
    write_csv(&csv, &["customer", "opponent_offer", "counter_offer", "winner"], rows)?;
    Ok(ExploitReport { outcome, csv })
}
