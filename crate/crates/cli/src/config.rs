//! Run configuration files (TOML).

use crate::error::{CliError, CliResult};
use delayrec_core::delay::{DelaySchedule, ObservableFamily};
use delayrec_core::spaces::{Tree, TreeArc};
use delayrec_core::{MapKind, ObservableSpec, Point, Space};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Embed,
    Entropy,
    Chainrec,
    Tsp,
    Coincide,
    InferOrbit,
    ScanGeneric,
    OracleSuite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Embed => "embed",
            Command::Entropy => "entropy",
            Command::Chainrec => "chainrec",
            Command::Tsp => "tsp",
            Command::Coincide => "coincide",
            Command::InferOrbit => "infer-orbit",
            Command::ScanGeneric => "scan-generic",
            Command::OracleSuite => "oracle-suite",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Names the run directory; letters, digits, `-`, `_` and `.` only.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<MapKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed: Option<EmbedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chainrec: Option<ChainrecConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tsp: Option<TspConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincide: Option<CoincideConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infer_orbit: Option<InferOrbitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Interval,
    Circle,
    Triangle,
    Cantor { depth: usize },
    Gasket { depth: usize },
    Carpet { depth: usize },
    Star { arms: usize, arm_length: f64 },
    Dendrite { vertices: usize, arcs: Vec<TreeArc> },
    Finite { size: usize },
}

/// Upper bound on address depths accepted from a config.
pub const MAX_DEPTH: usize = 24;

impl SpaceConfig {
    pub fn build(&self) -> CliResult<Space> {
        let depth_ok = |depth: usize| {
            if (1..=MAX_DEPTH).contains(&depth) {
                Ok(())
            } else {
                Err(CliError::config(
                    "space.depth",
                    format!("must be in 1..={MAX_DEPTH}, got {depth}"),
                ))
            }
        };
        Ok(match self {
            SpaceConfig::Interval => Space::interval(),
            SpaceConfig::Circle => Space::circle(),
            SpaceConfig::Triangle => Space::triangle(),
            SpaceConfig::Cantor { depth } => {
                depth_ok(*depth)?;
                Space::cantor(*depth)
            }
            SpaceConfig::Gasket { depth } => {
                depth_ok(*depth)?;
                Space::gasket(*depth)
            }
            SpaceConfig::Carpet { depth } => {
                depth_ok(*depth)?;
                Space::carpet(*depth)
            }
            SpaceConfig::Star { arms, arm_length } => {
                Space::dendrite(Tree::star(*arms, *arm_length).map_err(CliError::at("space"))?)
            }
            SpaceConfig::Dendrite { vertices, arcs } => {
                Space::dendrite(Tree::new(*vertices, arcs.clone()).map_err(CliError::at("space"))?)
            }
            SpaceConfig::Finite { size } => {
                if *size == 0 {
                    return Err(CliError::config("space.size", "must be at least 1"));
                }
                Space::finite(*size)
            }
        })
    }
}

/// A point given as a number, a coordinate list, or an explicit tagged point
/// such as `{ state = 3 }` or `{ arc = { arc = 0, t = 0.5 } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointInput {
    Scalar(f64),
    Coords(Vec<f64>),
    Exact(Point),
}

impl PointInput {
    pub fn point(&self) -> Point {
        match self {
            PointInput::Scalar(x) => Point::real(*x),
            PointInput::Coords(c) => Point::Real(c.clone()),
            PointInput::Exact(p) => p.clone(),
        }
    }
}

/// The delay schedule named by exactly one of `k` (times `0..=k`) and `times`.
pub fn build_schedule(k: Option<usize>, times: &Option<Vec<usize>>, section: &str) -> CliResult<DelaySchedule> {
    match (k, times) {
        (Some(k), None) => Ok(DelaySchedule::prefix(k)),
        (None, Some(times)) => DelaySchedule::explicit(times.clone())
            .map_err(|e| CliError::config(format!("{section}.times"), e.to_string())),
        _ => Err(CliError::config(
            format!("{section}.k"),
            "give exactly one of `k` and `times`",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<usize>>,
    pub alpha: f64,
    /// Random pairs to keep; requires a seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    /// Use every pair of a finite space instead of random pairs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exhaustive: bool,
    /// Sample points for the shift naturality identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naturality_samples: Option<usize>,
    /// Input radius for the reconstructed-shift continuity probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    pub mesh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

/// Compare the source entropy with that of the reconstructed shift on `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub k: usize,
    pub tolerance: f64,
    /// Separation threshold of the embedding check that certifies the comparison.
    pub alpha: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainrecConfig {
    pub mesh: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_cap: Option<usize>,
    /// Run the decomposition check on the recurrent cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Check that periodic points of period at most this are recurrent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic_n: Option<usize>,
    /// Expect every cell to be recurrent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_full: Option<bool>,
    /// Expect every recurrent cell centre inside one of these intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_within: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TspConfig {
    pub k: usize,
    pub eta: f64,
    pub d: usize,
    #[serde(default = "default_guard")]
    pub guard: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Evaluate this separator instead of searching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<PointInput>>,
}

fn default_guard() -> f64 {
    1e-3
}

fn default_budget() -> usize {
    64
}

fn default_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincideConfig {
    pub horizon: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PointInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<PointInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Seeded observables, each tested on random trajectory-separated pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: ObservableFamily,
    pub observables: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferOrbitConfig {
    pub x: PointInput,
    pub y: PointInput,
    pub terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default = "default_infer_tolerance")]
    pub tolerance: f64,
}

fn default_infer_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub family: ObservableFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<usize>>,
    pub alpha: f64,
    pub draws: usize,
    pub pairs_per_draw: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_density: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Every self-map of a small finite set with an injective observable.
    Finite,
    /// Chain recurrent sets with known answers.
    AnalyticCr,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Finite => "finite",
            Suite::AnalyticCr => "analytic_cr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_suites")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_states")]
    pub states: usize,
    /// Replace the induced shift with a corrupted rule.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fault: bool,
}

fn default_suites() -> Vec<Suite> {
    vec![Suite::Finite, Suite::AnalyticCr]
}

fn default_states() -> usize {
    5
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            suites: default_suites(),
            states: default_states(),
            fault: false,
        }
    }
}

/// A parsed config together with its verbatim text.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub text: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let deserializer = toml::Deserializer::new(text);
        let config: RunConfig = serde_path_to_error::deserialize(deserializer).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().trim().to_string();
            CliError::config(if path == "." { String::new() } else { path }, message)
        })?;
        validate_name(&config.name)?;
        Ok(Self {
            text: text.to_string(),
            config,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The command to run: the one named on the command line, which must
    /// agree with the config if it names one too.
    pub fn resolve_command(&self, requested: Option<Command>) -> CliResult<Command> {
        match (requested, self.config.command) {
            (Some(r), Some(c)) if r != c => Err(CliError::config(
                "command",
                format!("config declares `{c}` but `{r}` was requested"),
            )),
            (Some(r), _) => Ok(r),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(CliError::config(
                "command",
                "missing; name one in the config or on the command line",
            )),
        }
    }
}

fn validate_name(name: &str) -> CliResult<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::config(
            "name",
            format!("`{name}` must be non-empty and use only letters, digits, `-`, `_` and `.`"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENTROPY: &str = r#"
name = "tent"
command = "entropy"
seed = 3

[space]
kind = "interval"

[system]
map = "tent"

[entropy]
epsilons = [0.2, 0.1]
ns = [1, 2, 3]
mesh = 0.01
"#;

    #[test]
    fn parses_and_round_trips() {
        let loaded = LoadedConfig::parse(ENTROPY).unwrap();
        assert_eq!(loaded.config.command, Some(Command::Entropy));
        assert_eq!(loaded.config.system, Some(MapKind::Tent));
        let echoed = toml::to_string(&loaded.config).unwrap();
        assert_eq!(LoadedConfig::parse(&echoed).unwrap().config, loaded.config);
    }

    #[test]
    fn errors_carry_field_paths() {
        let bad = ENTROPY.replace("mesh = 0.01", "mesh = \"fine\"");
        match LoadedConfig::parse(&bad) {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "entropy.mesh"),
            other => panic!("{other:?}"),
        }
        let unknown = ENTROPY.replace("mesh = 0.01", "mesh = 0.01\nmesht = 2");
        match LoadedConfig::parse(&unknown) {
            Err(CliError::Config { path, message }) => {
                assert_eq!(path, "entropy.mesht");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let name = ENTROPY.replace("name = \"tent\"", "name = \"../x\"");
        assert!(matches!(LoadedConfig::parse(&name), Err(CliError::Config { path, .. }) if path == "name"));
    }

    #[test]
    fn points_accept_several_spellings() {
        #[derive(Deserialize)]
        struct P {
            a: PointInput,
            b: PointInput,
            c: PointInput,
        }
        let p: P = toml::from_str("a = 0.3\nb = [0.2, 0.1]\nc = { state = 4 }").unwrap();
        assert_eq!(p.a.point(), Point::real(0.3));
        assert_eq!(p.b.point(), Point::Real(vec![0.2, 0.1]));
        assert_eq!(p.c.point(), Point::State(4));
    }

    #[test]
    fn command_must_agree() {
        let loaded = LoadedConfig::parse(ENTROPY).unwrap();
        assert_eq!(loaded.resolve_command(None).unwrap(), Command::Entropy);
        assert!(loaded.resolve_command(Some(Command::Tsp)).is_err());
        let bare = LoadedConfig::parse(&ENTROPY.replace("command = \"entropy\"\n", "")).unwrap();
        assert!(bare.resolve_command(None).is_err());
        assert_eq!(bare.resolve_command(Some(Command::Entropy)).unwrap(), Command::Entropy);
    }
}
