//! Flat `key = value` scenario files.
//!
//! ```text
//! # three campaigns over a small graph
//! graph = path3.txt
//! values = 1, 1, 1
//! campaigns = 3
//! budget = 1000
//! rule = winner-takes-all
//! tau = 1
//! seed = 42
//! ```
//!
//! Blank lines and `#` comments are ignored. Each key may appear once;
//! unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rankbid_core::{RankScoringRule, TieBreakPolicy, ValueVector};

use crate::CliError;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_REPLICATIONS: usize = 10_000;

const KEYS: [&str; 10] =
    ["graph", "values", "campaigns", "budget", "rule", "tau", "seed", "trials", "replications", "tie_break"];

#[derive(Debug, Clone, PartialEq)]
pub enum ValuesSpec {
    List(Vec<f64>),
    /// `n` customers of unit value.
    Uniform(usize),
}

impl ValuesSpec {
    pub fn len(&self) -> usize {
        match self {
            ValuesSpec::List(v) => v.len(),
            ValuesSpec::Uniform(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vector(&self) -> Result<ValueVector, CliError> {
        Ok(match self {
            ValuesSpec::List(v) => ValueVector::new(v.clone())?,
            ValuesSpec::Uniform(n) => ValueVector::uniform(*n, 1.0)?,
        })
    }
}

impl fmt::Display for ValuesSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuesSpec::List(v) => write_list(f, v),
            ValuesSpec::Uniform(n) => write!(f, "uniform:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleSpec {
    WinnerTakesAll,
    Borda,
    /// Raw scores, normalized when the rule is built.
    Explicit(Vec<f64>),
}

impl RuleSpec {
    pub fn build(&self, campaigns: usize) -> Result<RankScoringRule, CliError> {
        Ok(match self {
            RuleSpec::WinnerTakesAll => RankScoringRule::winner_takes_all(campaigns)?,
            RuleSpec::Borda => RankScoringRule::borda(campaigns)?,
            RuleSpec::Explicit(raw) => RankScoringRule::normalize(raw)?,
        })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::WinnerTakesAll => f.write_str("winner-takes-all"),
            RuleSpec::Borda => f.write_str("borda"),
            RuleSpec::Explicit(raw) => write_list(f, raw),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[f64]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Option<PathBuf>,
    pub values: ValuesSpec,
    pub campaigns: usize,
    pub budget: f64,
    pub rule: RuleSpec,
    pub tau: u32,
    pub seed: u64,
    pub trials: usize,
    pub replications: usize,
    pub tie_break: TieBreakPolicy,
}

impl Scenario {
    /// Reads a scenario file; a relative `graph` path is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut scenario: Scenario = text.parse()?;
        if let (Some(g), Some(dir)) = (scenario.graph.as_mut(), path.parent()) {
            if g.is_relative() {
                *g = dir.join(&*g);
            }
        }
        Ok(scenario)
    }

    pub fn rule(&self) -> Result<RankScoringRule, CliError> {
        self.rule.build(self.campaigns)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.campaigns < 2 {
            return Err(CliError::Input(format!("campaigns must be at least 2, got {}", self.campaigns)));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(CliError::Input(format!("budget must be positive, got {}", self.budget)));
        }
        if self.trials == 0 || self.replications == 0 {
            return Err(CliError::Input("trials and replications must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(CliError::Input("values must name at least one customer".into()));
        }
        if let RuleSpec::Explicit(raw) = &self.rule {
            if raw.len() != self.campaigns {
                return Err(CliError::Input(format!(
                    "rule has {} scores but campaigns = {}",
                    raw.len(),
                    self.campaigns
                )));
            }
        }
        self.values.to_vector()?;
        self.rule()?;
        Ok(())
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(|t| parse_num(key, t.trim())).collect()
}

fn parse_num<T: FromStr>(key: &str, text: &str) -> Result<T, CliError> {
    text.parse().map_err(|_| CliError::Input(format!("invalid value `{text}` for `{key}`")))
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut fields: [Option<String>; KEYS.len()] = Default::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| CliError::Input(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            if fields[slot].replace(value.trim().to_string()).is_some() {
                return Err(CliError::Input(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        let [graph, values, campaigns, budget, rule, tau, seed, trials, replications, tie_break] = fields;
        let required = |key: &str, v: Option<String>| v.ok_or_else(|| CliError::Input(format!("missing key `{key}`")));

        let values = required("values", values)?;
        let values = match values.strip_prefix("uniform:") {
            Some(n) => ValuesSpec::Uniform(parse_num("values", n.trim())?),
            None => ValuesSpec::List(parse_list("values", &values)?),
        };
        let rule = match required("rule", rule)?.as_str() {
            "winner-takes-all" => RuleSpec::WinnerTakesAll,
            "borda" => RuleSpec::Borda,
            other => RuleSpec::Explicit(parse_list("rule", other)?),
        };
        let scenario = Scenario {
            graph: graph.map(PathBuf::from),
            values,
            campaigns: parse_num("campaigns", &required("campaigns", campaigns)?)?,
            budget: parse_num("budget", &required("budget", budget)?)?,
            rule,
            tau: tau.map_or(Ok(0), |t| parse_num("tau", &t))?,
            seed: seed.map_or(Ok(0), |s| parse_num("seed", &s))?,
            trials: trials.map_or(Ok(DEFAULT_TRIALS), |t| parse_num("trials", &t))?,
            replications: replications.map_or(Ok(DEFAULT_REPLICATIONS), |r| parse_num("replications", &r))?,
            tie_break: tie_break.map_or(Ok(TieBreakPolicy::default()), |t| t.parse())?,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(g) = &self.graph {
            writeln!(f, "graph = {}", g.display())?;
        }
        writeln!(f, "values = {}", self.values)?;
        writeln!(f, "campaigns = {}", self.campaigns)?;
        writeln!(f, "budget = {}", self.budget)?;
        writeln!(f, "rule = {}", self.rule)?;
        writeln!(f, "tau = {}", self.tau)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "replications = {}", self.replications)?;
        writeln!(f, "tie_break = {}", self.tie_break)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "values = uniform:20\ncampaigns = 3\nbudget = 1000\nrule = borda\n";

    #[test]
    fn defaults_fill_optional_keys() {
        let s: Scenario = MINIMAL.parse().unwrap();
        assert_eq!(s.graph, None);
        assert_eq!(s.values, ValuesSpec::Uniform(20));
        assert_eq!((s.tau, s.seed), (0, 0));
        assert_eq!(s.trials, DEFAULT_TRIALS);
        assert_eq!(s.tie_break, TieBreakPolicy::AverageScores);
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# header\n\n  values =  1, 2.5 ,3 # trailing\ncampaigns=2\nbudget=10\nrule = 3, 1\n";
        let s: Scenario = text.parse().unwrap();
        assert_eq!(s.values, ValuesSpec::List(vec![1.0, 2.5, 3.0]));
        assert_eq!(s.rule, RuleSpec::Explicit(vec![3.0, 1.0]));
        assert_eq!(s.rule().unwrap().scores(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            format!("{MINIMAL}colour = red\n"),
            format!("{MINIMAL}campaigns = 4\n"),
            MINIMAL.replace("campaigns = 3", "campaigns = 1"),
            MINIMAL.replace("budget = 1000", "budget = 0"),
            MINIMAL.replace("budget = 1000", "budget = -3"),
            MINIMAL.replace("rule = borda", "rule = 1,1,1"),
            MINIMAL.replace("rule = borda", "rule = 3,2"),
            MINIMAL.replace("uniform:20", "uniform:0"),
            MINIMAL.replace("uniform:20", "1,-2"),
            format!("{MINIMAL}trials = 0\n"),
            format!("{MINIMAL}tau = -1\n"),
            format!("{MINIMAL}tie_break = coin\n"),
            MINIMAL.replace("budget = 1000\n", ""),
            "values".to_string(),
        ] {
            let err = bad.parse::<Scenario>().expect_err(&bad);
            assert_eq!(err.exit_code(), 1, "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        let text = "graph = g.txt\nvalues = 0.1,2,3e-7\ncampaigns = 3\nbudget = 12.5\nrule = 5,1,0\n\
                    tau = 4\nseed = 18446744073709551615\ntrials = 7\nreplications = 9\ntie_break = seeded-random\n";
        let s: Scenario = text.parse().unwrap();
        assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
    }
}
