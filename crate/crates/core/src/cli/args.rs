//! Command-line grammar: one subcommand per verb plus `run`, each verb with
//! shared model and output flags.

use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{Map, Value};

use super::scan::ScanArgs;
use super::verbs::*;
use super::{Format, ModelSpec, OutputBlock, RunConfig};
use crate::error::{Error, Result};

/// Depinning forces, discommensurations and invariant circles of tilted
/// Frenkel-Kontorova chains.
#[derive(Parser, Debug)]
#[command(name = "depinn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

/// Model selection flags.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelArgs {
    /// standard_fk, double_well, bistable, mane or fourier.
    #[arg(long, default_value = "standard_fk")]
    pub model: String,
    /// Spring constant or coupling.
    #[arg(long)]
    pub k: Option<f64>,
    /// Second-harmonic weight of the double well.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub s1: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    /// Fourier model: spring rest length.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Fourier model: cosine coefficients of harmonics 1, 2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cos: Vec<f64>,
    /// Fourier model: sine coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sin: Vec<f64>,
    /// Extend the model beyond the spacing band M,N.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, allow_hyphen_values = true)]
    pub band_extension: Option<Vec<i64>>,
}

impl ModelArgs {
    /// Resolves the flags through the same schema as the TOML model block.
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let mut map = Map::new();
        map.insert("kind".into(), Value::from(self.model.clone()));
        let mut put = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                map.insert(key.into(), Value::from(v));
            }
        };
        let needs_k = self.model != "mane";
        put("k", if needs_k { Some(self.k.unwrap_or(1.0)) } else { self.k });
        put("b", if self.model == "double_well" { Some(self.b.unwrap_or(2.0)) } else { self.b });
        put("c1", self.c1);
        put("c2", self.c2);
        put("s1", self.s1);
        put("a1", self.a1);
        put("a2", self.a2);
        put("b1", self.b1);
        put("b2", self.b2);
        put("a", self.shift);
        if !self.cos.is_empty() {
            map.insert("cos".into(), Value::from(self.cos.clone()));
        }
        if !self.sin.is_empty() {
            map.insert("sin".into(), Value::from(self.sin.clone()));
        }
        if let Some(b) = &self.band_extension {
            map.insert("band_extension".into(), Value::from(b.clone()));
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Output flags.
#[derive(Args, Clone, Debug, Default)]
pub struct OutputArgs {
    /// Directory for artifacts; without it only stdout is written.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Artifact formats: json, csv, svg (repeat or comma-separate).
    #[arg(long = "format", value_delimiter = ',')]
    pub formats: Vec<Format>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl OutputArgs {
    /// Overrides the fields given on the command line.
    pub fn apply(&self, base: &mut OutputBlock) {
        if let Some(d) = &self.output_dir {
            base.dir = Some(d.clone());
        }
        if !self.formats.is_empty() {
            base.formats = self.formats.clone();
        }
        if let Some(j) = self.jobs {
            base.jobs = j;
        }
    }
}

/// A verb with its model and output flags.
#[derive(Args, Clone, Debug)]
pub struct VerbLine<T: Args> {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub args: T,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Depinning force F_d(p/q).
    Fd(VerbLine<FdArgs>),
    /// One-sided limit of F_d along mediants.
    FdLimit(VerbLine<FdLimitArgs>),
    /// Newton equilibrium with Aubry plot.
    Equilibrium(VerbLine<EquilibriumArgs>),
    /// Pinned or sliding verdict with hull function.
    Classify(VerbLine<ClassifyArgs>),
    /// Equilibrium discommensuration.
    Disc(VerbLine<DiscArgs>),
    /// Sliding discommensuration front.
    Front(VerbLine<FrontArgs>),
    /// Orbit of the twist map.
    MapOrbit(VerbLine<MapOrbitArgs>),
    /// Separatrices of one gap between hyperbolic points.
    Manifolds(VerbLine<ManifoldsArgs>),
    /// Lobe area against action difference.
    ActionArea(VerbLine<ActionAreaArgs>),
    /// Invariant-circle verdict.
    CircleVerdict(VerbLine<CircleVerdictArgs>),
    /// Invariant ordered circles.
    Ioc(VerbLine<IocArgs>),
    /// Mountain-pass saddles.
    Minimax(VerbLine<MinimaxArgs>),
    /// Gluing and mediant assembly.
    Glue(VerbLine<GlueArgs>),
    /// Band extension of the generating function.
    ModifyH(VerbLine<ModifyHArgs>),
    /// Parallel parameter scan.
    Scan(VerbLine<ScanArgs>),
    /// Runs a TOML configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn line<T: Args>(l: VerbLine<T>, wrap: fn(T) -> Command) -> Result<RunConfig> {
    let mut output = OutputBlock::default();
    l.output.apply(&mut output);
    Ok(RunConfig { model: l.model.to_spec()?, command: wrap(l.args), output })
}

impl CliCommand {
    /// The run configuration this command line stands for.
    pub fn into_config(self) -> Result<RunConfig> {
        match self {
            CliCommand::Fd(l) => line(l, Command::Fd),
            CliCommand::FdLimit(l) => line(l, Command::FdLimit),
            CliCommand::Equilibrium(l) => line(l, Command::Equilibrium),
            CliCommand::Classify(l) => line(l, Command::Classify),
            CliCommand::Disc(l) => line(l, Command::Disc),
            CliCommand::Front(l) => line(l, Command::Front),
            CliCommand::MapOrbit(l) => line(l, Command::MapOrbit),
            CliCommand::Manifolds(l) => line(l, Command::Manifolds),
            CliCommand::ActionArea(l) => line(l, Command::ActionArea),
            CliCommand::CircleVerdict(l) => line(l, Command::CircleVerdict),
            CliCommand::Ioc(l) => line(l, Command::Ioc),
            CliCommand::Minimax(l) => line(l, Command::Minimax),
            CliCommand::Glue(l) => line(l, Command::Glue),
            CliCommand::ModifyH(l) => line(l, Command::ModifyH),
            CliCommand::Scan(l) => line(l, Command::Scan),
            CliCommand::Run { config, output } => {
                let mut cfg = RunConfig::load(&config)?;
                output.apply(&mut cfg.output);
                Ok(cfg)
            }
        }
    }
}

impl Cli {
    /// Parses arguments with negative numbers accepted as flag values.
    pub fn parse_from_args<I, S>(args: I) -> std::result::Result<Self, clap::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let mut cmd = Cli::command();
        let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
        for name in names {
            cmd = cmd.mut_subcommand(name, |s| s.allow_negative_numbers(true));
        }
        let matches = cmd.try_get_matches_from(args)?;
        Cli::from_arg_matches(&matches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BuiltinSpec;

    fn parse(args: &[&str]) -> RunConfig {
        Cli::parse_from_args(std::iter::once("depinn").chain(args.iter().copied())).unwrap().command.into_config().unwrap()
    }

    #[test]
    fn grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_and_toml_share_defaults() {
        let cfg = parse(&["fd", "--model", "standard_fk", "--k", "1"]);
        let from_toml = RunConfig::from_toml("[model]\nkind = \"standard_fk\"\nk = 1.0\n[command]\nverb = \"fd\"\n").unwrap();
        assert_eq!(cfg, from_toml);
    }

    #[test]
    fn negative_values_and_lists() {
        let cfg = parse(&["equilibrium", "--p", "1", "--q", "2", "--guess", "-0.2,0.4", "--force", "-0.01"]);
        match cfg.command {
            Command::Equilibrium(a) => {
                assert_eq!(a.guess, Some(vec![-0.2, 0.4]));
                assert_eq!(a.force, -0.01);
            }
            other => panic!("{other:?}"),
        }
        let cfg = parse(&["modify-h", "--m", "-3", "--n", "4"]);
        assert!(matches!(cfg.command, Command::ModifyH(ModifyHArgs { m: -3, n: 4, .. })));
    }

    #[test]
    fn model_flags_fill_per_kind_defaults() {
        let cfg = parse(&["ioc", "--model", "double_well", "--k", "0.03", "--p", "1", "--q", "2"]);
        assert_eq!(cfg.model.as_builtin(), Some(&BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 }));
        let cfg = parse(&["circle-verdict", "--model", "mane"]);
        assert_eq!(cfg.model.as_builtin(), Some(&BuiltinSpec::mane_default()));
        let err = Cli::parse_from_args(["depinn", "fd", "--model", "nope"]).unwrap().command.into_config().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn output_flags_override() {
        let cfg = parse(&["scan", "--output-dir", "out", "--format", "csv,svg", "--jobs", "3"]);
        assert_eq!(cfg.output.dir, Some(PathBuf::from("out")));
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Svg]);
        assert_eq!(cfg.output.jobs, 3);
    }
}
