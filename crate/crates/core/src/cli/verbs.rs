//! Per-verb parameters and execution. Every parameter struct doubles as a
//! clap argument group and a serde table, with the clap defaults shared by
//! both.

use std::fmt::Write as _;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scan::{run_scan, ScanArgs};
use super::svg::{write_scatter_svg, write_xy_svg};
use super::{to_value, Artifact, ModelSpec, VerbOutput};
use crate::config::{aubry_rows, PeriodicConfiguration};
use crate::disc::{
    build_mediant_config, find_equilibrium_disc, find_sliding_disc_with, glue, morse_index_truncated, DiscKind,
    FrontVerdict, GluingPlan, HeteroclinicSolution, Piece,
};
use crate::error::{Error, Result};
use crate::flow::{
    classify, depinning_force, energy, extract_hull, find_equilibrium, DepinningMethod, FlowSettings, VelocityVerdict,
};
use crate::ioc::{
    build_ioc_with, find_all_equilibria, minimax_with, verify_ioc, EquilibriumCatalog, IocOptions, MinimaxOptions,
    MinimaxResult,
};
use crate::model::{modify_band, verify_properties, GeneratingFunction, TiltedEnergy};
use crate::rotation::{farey_neighbours, fd_limit, Side};
use crate::twistmap::{
    action_area, apply, circle_verdict_with, find_intersections, hyperbolic_gaps, inverse, Branch, CylinderPoint,
    HyperbolicGaps, ManifoldOptions, VerdictOptions,
};

/// Parses an empty argument list so that serde defaults equal clap defaults.
fn clap_defaults<T: Args + clap::FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults").no_binary_name(true));
    let matches = cmd.try_get_matches_from(Vec::<String>::new()).expect("every verb flag has a default");
    T::from_arg_matches(&matches).expect("defaults parse")
}

macro_rules! clap_default {
    ($($t:ty),* $(,)?) => {
        $(impl Default for $t {
            fn default() -> Self {
                clap_defaults()
            }
        })*
    };
}

clap_default!(
    FdArgs,
    FdLimitArgs,
    EquilibriumArgs,
    ClassifyArgs,
    DiscArgs,
    FrontArgs,
    MapOrbitArgs,
    ManifoldsArgs,
    ActionAreaArgs,
    CircleVerdictArgs,
    IocArgs,
    MinimaxArgs,
    GlueArgs,
    ModifyHArgs,
    ScanArgs,
);

/// `F_d(p/q)` by bisection, continuation or both.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// bisection, continuation or cross-validated.
    #[arg(long, default_value = "cross-validated")]
    pub method: DepinningMethod,
    /// Force tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// One-sided limit of `F_d` along a mediant sequence.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdLimitArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// plus or minus.
    #[arg(long, default_value = "plus")]
    pub side: Side,
    /// Number of mediants.
    #[arg(long, default_value_t = 6)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// Newton equilibrium of type `(p, q)` at a given force.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    /// Offset of the uniform initial guess `x_n = n p/q + offset`.
    #[arg(long, default_value_t = 0.5)]
    pub offset: f64,
    /// Explicit initial guess `x_0,...,x_{q-1}`; overrides the offset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub guess: Option<Vec<f64>>,
}

/// Pinned or sliding verdict for the overdamped flow.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    /// Offset of the uniform initial state.
    #[arg(long, default_value_t = 0.05)]
    pub offset: f64,
    /// Time budget before escalation.
    #[arg(long)]
    pub t_max: Option<f64>,
}

/// Equilibrium discommensuration between a pinned state and its next
/// translate.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// advancing or retreating.
    #[arg(long, default_value = "advancing")]
    pub kind: DiscKind,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    /// Window half-width in sites; defaults to `12 q`.
    #[arg(long)]
    pub half_width: Option<i64>,
}

/// Sliding front between a pinned state and its next translate.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value = "advancing")]
    pub kind: DiscKind,
    #[arg(long, default_value_t = 0.1)]
    pub force: f64,
    /// Window half-width in sites; defaults to `24 q`.
    #[arg(long)]
    pub half_width: Option<i64>,
}

/// Iterates the twist map from one point.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapOrbitArgs {
    #[arg(long, default_value_t = 0.1)]
    pub x0: f64,
    /// Initial momentum.
    #[arg(long, default_value_t = 0.0)]
    pub p0: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    /// Iterate the inverse map.
    #[arg(long, default_value_t = false)]
    pub backward: bool,
}

/// The four separatrix branches around one gap between hyperbolic points.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldsArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Gap index over one period.
    #[arg(long, default_value_t = 0)]
    pub gap: usize,
    /// Arc length per branch in units of the gap chord.
    #[arg(long, default_value_t = 2.0)]
    pub arc_factor: f64,
    #[arg(long, default_value_t = 16)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub max_segment: f64,
}

/// Lobe areas between crossing separatrices against action differences.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionAreaArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0)]
    pub gap: usize,
    /// advancing (unstable arc leaves the left point) or retreating.
    #[arg(long, default_value = "advancing")]
    pub direction: DiscKind,
    #[arg(long, default_value_t = 2.0)]
    pub arc_factor: f64,
    #[arg(long, default_value_t = 16)]
    pub grid_density: usize,
    /// Number of consecutive lobes to measure.
    #[arg(long, default_value_t = 2)]
    pub lobes: usize,
}

/// Whether the type-`(p, q)` orbits lie on a rotational invariant circle.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleVerdictArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 16)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub coincide_tol: f64,
    #[arg(long, default_value_t = 2.0)]
    pub arc_factor: f64,
}

/// Invariant ordered circles from the equilibrium catalog.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IocArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    #[arg(long, default_value_t = 16)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub max_chord: f64,
}

/// Mountain-pass saddles; by default one per invariant ordered circle,
/// between the minima bracketing its highest saddle.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    #[arg(long, default_value_t = 16)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 33)]
    pub nodes: usize,
    /// First minimum `x_0,...,x_{q-1}`; needs `min_b` as well.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub min_a: Option<Vec<f64>>,
    /// Second minimum.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub min_b: Option<Vec<f64>>,
    /// Waypoint of the initial string.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub via: Option<Vec<f64>>,
}

/// Glues a discommensuration between its asymptotes and assembles the
/// mediant periodic state from it.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlueArgs {
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub force: f64,
    /// Window half-width; defaults to `12 q`.
    #[arg(long)]
    pub half_width: Option<i64>,
    /// Mediant multiplicity: the state has type `(n p + p', n q + q')`.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Largest accepted cut mismatch.
    #[arg(long, default_value_t = 1e-2)]
    pub delta: f64,
}

/// Extends the generating function beyond a spacing band and reports the
/// seam.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModifyHArgs {
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    pub m: i64,
    #[arg(long, default_value_t = 3)]
    pub n: i64,
    /// Position at which the spacing profile is tabulated.
    #[arg(long, default_value_t = 0.25)]
    pub x: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

/// One verb with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "kebab-case")]
pub enum Command {
    Fd(FdArgs),
    FdLimit(FdLimitArgs),
    Equilibrium(EquilibriumArgs),
    Classify(ClassifyArgs),
    Disc(DiscArgs),
    Front(FrontArgs),
    MapOrbit(MapOrbitArgs),
    Manifolds(ManifoldsArgs),
    ActionArea(ActionAreaArgs),
    CircleVerdict(CircleVerdictArgs),
    Ioc(IocArgs),
    Minimax(MinimaxArgs),
    Glue(GlueArgs),
    ModifyH(ModifyHArgs),
    Scan(ScanArgs),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Fd(_) => "fd",
            Command::FdLimit(_) => "fd-limit",
            Command::Equilibrium(_) => "equilibrium",
            Command::Classify(_) => "classify",
            Command::Disc(_) => "disc",
            Command::Front(_) => "front",
            Command::MapOrbit(_) => "map-orbit",
            Command::Manifolds(_) => "manifolds",
            Command::ActionArea(_) => "action-area",
            Command::CircleVerdict(_) => "circle-verdict",
            Command::Ioc(_) => "ioc",
            Command::Minimax(_) => "minimax",
            Command::Glue(_) => "glue",
            Command::ModifyH(_) => "modify-h",
            Command::Scan(_) => "scan",
        }
    }
}

/// Dispatches one command on a validated model.
pub fn run_command(cmd: &Command, _model: &ModelSpec, h: &GeneratingFunction) -> Result<VerbOutput> {
    match cmd {
        Command::Fd(a) => run_fd(a, h),
        Command::FdLimit(a) => run_fd_limit(a, h),
        Command::Equilibrium(a) => run_equilibrium(a, h),
        Command::Classify(a) => run_classify(a, h),
        Command::Disc(a) => run_disc(a, h),
        Command::Front(a) => run_front(a, h),
        Command::MapOrbit(a) => run_map_orbit(a, h),
        Command::Manifolds(a) => run_manifolds(a, h),
        Command::ActionArea(a) => run_action_area(a, h),
        Command::CircleVerdict(a) => run_circle_verdict(a, h),
        Command::Ioc(a) => run_ioc(a, h),
        Command::Minimax(a) => run_minimax(a, h),
        Command::Glue(a) => run_glue(a, h),
        Command::ModifyH(a) => run_modify_h(a, h),
        Command::Scan(a) => run_scan(a, h),
    }
}

/// CSV text with a header line; floats use the shortest round-trip form.
pub(crate) fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn tilted(h: &GeneratingFunction, force: f64) -> Result<TiltedEnergy> {
    TiltedEnergy::new(h.clone(), force)
}

/// A pinned state of type `(p, q)`, reached by relaxing a uniform start.
fn pinned_state(p: i64, q: usize, e: &TiltedEnergy) -> Result<PeriodicConfiguration> {
    match classify(&PeriodicConfiguration::uniform(p, q, 0.05), e, &FlowSettings::default()) {
        VelocityVerdict::Pinned(eq) => Ok(eq.config),
        VelocityVerdict::Sliding(s) => Err(Error::NoSolution(format!(
            "no pinned state of type ({p},{q}) at F = {}: the chain slides with v = {:.3e}",
            e.force, s.velocity
        ))),
        VelocityVerdict::Undetermined { t, .. } => {
            Err(Error::Undetermined(format!("pinned state of type ({p},{q}) not resolved by t = {t:.3e}")))
        }
    }
}

/// The pinned state and its translate by the upper Farey neighbour, one
/// step of `1/q` higher.
fn asymptotes(p: i64, q: usize, e: &TiltedEnergy) -> Result<(PeriodicConfiguration, PeriodicConfiguration, (i64, i64))> {
    let xm = pinned_state(p, q, e)?;
    let upper = farey_neighbours(p, q as i64)?.upper;
    let xp = xm.translate(upper.1, upper.0);
    Ok((xm, xp, upper))
}

fn window_csv(sol: &HeteroclinicSolution, lower: &PeriodicConfiguration, upper: &PeriodicConfiguration) -> String {
    let w = &sol.window;
    csv_table("n,x,lower,upper", (w.l()..=w.r()).map(|n| vec![n as f64, w.at(n), lower.at(n), upper.at(n)]))
}

fn run_fd(a: &FdArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let r = depinning_force(a.p, a.q, h, a.method, a.tol)?;
    let csv = csv_table("p,q,F_lo,F_hi,F_d", [vec![r.p as f64, r.q as f64, r.f_lo, r.f_hi, r.f_d]]);
    Ok(VerbOutput {
        summary: format!("F_d({}/{}) = {:.10} in [{:.10}, {:.10}]", r.p, r.q, r.f_d, r.f_lo, r.f_hi),
        result: to_value(&r),
        artifacts: vec![Artifact::csv("fd.csv", csv)],
    })
}

fn run_fd_limit(a: &FdLimitArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let r = fd_limit(a.p, a.q as i64, a.side, h, a.nmax, a.tol)?;
    let csv = csv_table("P,Q,F_d", r.samples.iter().map(|s| vec![s.p as f64, s.q as f64, s.f_d]));
    let series = vec![
        r.samples.iter().map(|s| (s.q as f64, s.f_d)).collect::<Vec<_>>(),
        r.samples.iter().map(|s| (s.q as f64, r.estimate)).collect(),
    ];
    let sign = if a.side == Side::Plus { "+" } else { "-" };
    let mut result = to_value(&r);
    result["cauchy_tail"] = json!(r.cauchy_tail());
    Ok(VerbOutput {
        summary: format!(
            "F_d({}/{}{sign}) ≈ {:.10} (F_d({}/{}) = {:.10})",
            a.p, a.q, r.estimate, a.p, a.q, r.center
        ),
        result,
        artifacts: vec![
            Artifact::csv("fd_limit.csv", csv),
            Artifact::svg("fd_limit.svg", write_xy_svg("F_d along the mediant sequence against Q", &series)),
        ],
    })
}

fn run_equilibrium(a: &EquilibriumArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let guess = match &a.guess {
        Some(g) => PeriodicConfiguration::new(a.p, a.q, g.clone())?,
        None => PeriodicConfiguration::uniform(a.p, a.q, a.offset),
    };
    let eq = find_equilibrium(&guess, &e)?;
    let rows = aubry_rows(&eq.config);
    let csv = csv_table("n,x", rows.iter().map(|&(n, x)| vec![n as f64, x]));
    let series = vec![rows.iter().map(|&(n, x)| (n as f64, x)).collect()];
    Ok(VerbOutput {
        summary: format!(
            "equilibrium of type ({},{}) with Morse index {}, residual {:.2e}",
            a.p, a.q, eq.spectrum.morse_index, eq.residual
        ),
        result: json!({
            "equilibrium": eq,
            "energy": energy(&eq.config, &e),
            "birkhoff": eq.config.is_birkhoff(None),
        }),
        artifacts: vec![
            Artifact::csv("equilibrium.csv", csv),
            Artifact::svg("equilibrium.svg", write_xy_svg("x_n against n", &series)),
        ],
    })
}

fn run_classify(a: &ClassifyArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let mut settings = FlowSettings::default();
    if let Some(t) = a.t_max {
        settings.t_max = t;
    }
    settings.validate()?;
    let verdict = classify(&PeriodicConfiguration::uniform(a.p, a.q, a.offset), &e, &settings);
    let mut artifacts = Vec::new();
    let mut result = json!({ "verdict": verdict });
    let summary = match &verdict {
        VelocityVerdict::Pinned(eq) => format!("pinned (residual {:.2e})", eq.residual),
        VelocityVerdict::Sliding(s) => {
            let hull = extract_hull(s, settings.recur_tol);
            artifacts.push(Artifact::csv("hull.csv", csv_table("alpha,X", hull.rows.iter().map(|&(a, x)| vec![a, x]))));
            artifacts.push(Artifact::svg("hull.svg", write_xy_svg("hull function X(alpha)", &[hull.rows.clone()])));
            result["hull"] = to_value(&hull);
            format!("sliding with v = {:.10}, period {:.6}", s.velocity, s.period)
        }
        VelocityVerdict::Undetermined { t, .. } => format!("undetermined at t = {t:.3e}"),
    };
    Ok(VerbOutput { summary, result, artifacts })
}

fn run_disc(a: &DiscArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let (xm, xp, upper) = asymptotes(a.p, a.q, &e)?;
    let hw = a.half_width.unwrap_or(12 * a.q as i64);
    let sol = find_equilibrium_disc(&xm, &xp, a.kind, &e, hw)?;
    let w = &sol.window;
    let index = morse_index_truncated(w, w.l(), w.r(), &e)?;
    let series = vec![(w.l()..=w.r()).map(|n| (n as f64, w.at(n) - xm.at(n))).collect::<Vec<_>>()];
    Ok(VerbOutput {
        summary: format!(
            "{:?} discommensuration on [{}, {}], residual {:.2e}, truncated index {}",
            a.kind,
            w.l(),
            w.r(),
            sol.residual,
            index.index
        ),
        result: json!({
            "lower": xm,
            "upper": xp,
            "upper_neighbour": upper,
            "solution": sol,
            "truncated_index": index,
        }),
        artifacts: vec![
            Artifact::csv("disc.csv", window_csv(&sol, &xm, &xp)),
            Artifact::svg("disc.svg", write_xy_svg("x_n minus the lower asymptote", &series)),
        ],
    })
}

fn run_front(a: &FrontArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let (xm, xp, _) = asymptotes(a.p, a.q, &e)?;
    let hw = a.half_width.unwrap_or(24 * a.q as i64);
    let verdict = find_sliding_disc_with(&xm, &xp, a.kind, &e, &FlowSettings::default(), hw)?;
    let mut artifacts = Vec::new();
    let summary = match &verdict {
        FrontVerdict::Sliding(s) => {
            let mut csv = String::from("t,n,x\n");
            for (t, w) in &s.snapshots {
                for n in w.l()..=w.r() {
                    let _ = writeln!(csv, "{t},{n},{}", w.at(n));
                }
            }
            artifacts.push(Artifact::csv("front.csv", csv));
            let series: Vec<Vec<(f64, f64)>> = s
                .snapshots
                .iter()
                .step_by(8)
                .map(|(_, w)| (w.l()..=w.r()).map(|n| (n as f64, w.at(n) - xm.at(n))).collect())
                .collect();
            artifacts.push(Artifact::svg("front.svg", write_xy_svg("front profiles over one period", &series)));
            format!("sliding front with velocity {:.10}, period {:.6}", s.velocity, s.period)
        }
        FrontVerdict::Undetermined { pinned, t, .. } => {
            if *pinned {
                format!("front pinned by t = {t:.3e}")
            } else {
                format!("front undetermined at t = {t:.3e}")
            }
        }
    };
    Ok(VerbOutput { summary, result: json!({ "lower": xm, "upper": xp, "verdict": verdict }), artifacts })
}

fn run_map_orbit(a: &MapOrbitArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let mut z = CylinderPoint::new(a.x0, a.p0);
    let mut points = vec![z];
    let mut stopped = None;
    for _ in 0..a.steps {
        let next = if a.backward { inverse(&e, z) } else { apply(&e, z) };
        match next {
            Ok(n) => {
                z = n;
                points.push(z);
            }
            Err(err) => {
                stopped = Some(err.to_string());
                break;
            }
        }
    }
    let csv = csv_table(
        "n,x,p,x_mod_1",
        points.iter().enumerate().map(|(i, z)| vec![i as f64, z.x, z.p, z.x.rem_euclid(1.0)]),
    );
    let portrait = vec![points.iter().map(|z| (z.x.rem_euclid(1.0), z.p)).collect()];
    let last = *points.last().expect("orbit starts with its seed");
    let rotation = (last.x - points[0].x) / (points.len() - 1).max(1) as f64;
    Ok(VerbOutput {
        summary: format!("{} iterates, mean advance per step {:.10}", points.len() - 1, rotation),
        result: json!({
            "iterates": points.len() - 1,
            "last": last,
            "mean_advance": rotation,
            "stopped": stopped,
        }),
        artifacts: vec![
            Artifact::csv("orbit.csv", csv),
            Artifact::svg("orbit.svg", write_scatter_svg("orbit on the cylinder (x mod 1, p)", &portrait)),
        ],
    })
}

fn gaps_for(p: i64, q: usize, e: &TiltedEnergy, grid_density: usize, gap: usize) -> Result<(HyperbolicGaps, usize)> {
    let g = hyperbolic_gaps(p, q, e, grid_density)?;
    if g.gaps.is_empty() {
        return Err(Error::NoSolution(format!("no hyperbolic orbit of type ({p},{q})")));
    }
    if gap >= g.gaps.len() {
        return Err(Error::InvalidParameter(format!("gap {gap} out of range 0..{}", g.gaps.len())));
    }
    Ok((g, gap))
}

fn run_manifolds(a: &ManifoldsArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = TiltedEnergy::untilted(h.clone());
    let (g, gi) = gaps_for(a.p, a.q, &e, a.grid_density, a.gap)?;
    let (lo, hi) = &g.gaps[gi];
    let chord = lo.point.dist(hi.point);
    let opts = ManifoldOptions { max_segment: a.max_segment, ..ManifoldOptions::default() };
    let target = a.arc_factor * chord;
    let specs = [
        (lo, Branch::UnstableRight),
        (hi, Branch::StableLeft),
        (hi, Branch::UnstableLeft),
        (lo, Branch::StableRight),
    ];
    let mut artifacts = Vec::new();
    let mut arcs = Vec::new();
    let mut series = Vec::new();
    for (site, branch) in specs {
        let arc = g.arc(site, branch, target, &e, &opts)?;
        let name = serde_json::to_value(branch).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        artifacts.push(Artifact::csv(format!("manifold_{name}.csv"), arc.to_csv()));
        series.push(arc.points.iter().map(|z| (z.x, z.p)).collect::<Vec<_>>());
        arcs.push(json!({
            "branch": branch,
            "base": arc.base,
            "expansion": arc.expansion,
            "epsilon": arc.epsilon,
            "points": arc.points.len(),
            "length": arc.length(),
            "complete": arc.complete,
        }));
    }
    series.push(vec![(lo.point.x, lo.point.p), (hi.point.x, hi.point.p)]);
    artifacts.push(Artifact::svg("manifolds.svg", write_scatter_svg("separatrices of one gap", &series)));
    Ok(VerbOutput {
        summary: format!(
            "4 branches around gap {gi} of {} between x = {:.6} and x = {:.6}",
            g.gaps.len(),
            lo.point.x,
            hi.point.x
        ),
        result: json!({ "gap": [lo, hi], "gaps": g.gaps.len(), "chord": chord, "arcs": arcs }),
        artifacts,
    })
}

fn run_action_area(a: &ActionAreaArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = TiltedEnergy::untilted(h.clone());
    let (g, gi) = gaps_for(a.p, a.q, &e, a.grid_density, a.gap)?;
    let (lo, hi) = &g.gaps[gi];
    let chord = lo.point.dist(hi.point);
    let target = a.arc_factor * chord;
    let opts = ManifoldOptions::default();
    let (u_site, u_branch, s_site, s_branch) = match a.direction {
        DiscKind::Advancing => (lo, Branch::UnstableRight, hi, Branch::StableLeft),
        DiscKind::Retreating => (hi, Branch::UnstableLeft, lo, Branch::StableRight),
    };
    let u = g.arc(u_site, u_branch, target, &e, &opts)?;
    let s = g.arc(s_site, s_branch, target, &e, &opts)?;
    let left = &g.orbits[u_site.orbit].config;
    let right = &g.orbits[s_site.orbit].config;
    let crossings: Vec<_> = find_intersections(&u, &s)?
        .into_iter()
        .filter(|x| x.point.dist(u.base) > 0.2 * chord && x.point.dist(s.base) > 0.2 * chord)
        .collect();
    let mut lobes = Vec::new();
    for pair in crossings.windows(2).take(a.lobes) {
        let r = action_area(&u, &s, &pair[0], &pair[1], left, right)?;
        lobes.push(json!({
            "from": pair[0].point,
            "to": pair[1].point,
            "area": r.area,
            "delta_w": r.delta_w,
            "mismatch": (r.area - r.delta_w).abs(),
            "tail": r.tail,
        }));
    }
    let summary = match lobes.first() {
        Some(l) => format!(
            "lobe area {:.6e}, action difference {:.6e}, mismatch {:.2e}",
            l["area"].as_f64().unwrap_or(f64::NAN),
            l["delta_w"].as_f64().unwrap_or(f64::NAN),
            l["mismatch"].as_f64().unwrap_or(f64::NAN)
        ),
        None => format!("{} transverse crossings; no lobe to measure", crossings.len()),
    };
    Ok(VerbOutput {
        summary,
        result: json!({ "gap": [lo, hi], "direction": a.direction, "crossings": crossings, "lobes": lobes }),
        artifacts: vec![Artifact::svg(
            "action_area.svg",
            write_scatter_svg(
                "unstable and stable arcs",
                &[
                    u.points.iter().map(|z| (z.x, z.p)).collect(),
                    s.points.iter().map(|z| (z.x, z.p)).collect(),
                    crossings.iter().map(|c| (c.point.x, c.point.p)).collect(),
                ],
            ),
        )],
    })
}

fn run_circle_verdict(a: &CircleVerdictArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = TiltedEnergy::untilted(h.clone());
    let opts = VerdictOptions {
        grid_density: a.grid_density,
        coincide_tol: a.coincide_tol,
        arc_factor: a.arc_factor,
        ..VerdictOptions::default()
    };
    let v = circle_verdict_with(a.p, a.q, &e, &opts)?;
    let rows = v.gaps().iter().map(|g| {
        vec![
            g.lo.x,
            g.hi.x,
            connection_distance(&g.advancing),
            connection_distance(&g.retreating),
            f64::from(u8::from(g.advancing.coincides())),
            f64::from(u8::from(g.retreating.coincides())),
        ]
    });
    let csv = csv_table("lo_x,hi_x,advancing_distance,retreating_distance,advancing_coincides,retreating_coincides", rows);
    Ok(VerbOutput {
        summary: v.name().to_string(),
        result: json!({ "verdict": v.name(), "detail": v }),
        artifacts: vec![Artifact::csv("circle_verdict.csv", csv)],
    })
}

fn connection_distance(c: &crate::twistmap::Connection) -> f64 {
    use crate::twistmap::Connection;
    match c {
        Connection::Coincide { distance } | Connection::Split { distance, .. } | Connection::Unresolved { distance } => {
            *distance
        }
    }
}

fn catalog_summary(cat: &EquilibriumCatalog) -> Value {
    let max_index = cat.entries.iter().map(|c| c.morse_index).max().unwrap_or(0);
    let counts: Vec<usize> = (0..=max_index).map(|i| cat.with_index(i).count()).collect();
    json!({
        "entries": cat.entries.len(),
        "by_index": counts,
        "degenerate": cat.entries.iter().filter(|c| c.degenerate).count(),
        "starts": cat.starts,
        "converged": cat.converged,
    })
}

fn run_ioc(a: &IocArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let cat = find_all_equilibria(a.p, a.q, &e, a.grid_density)?;
    let opts = IocOptions { max_chord: a.max_chord, ..IocOptions::default() };
    let circles = build_ioc_with(&cat, &e, &opts)?;
    let mut artifacts = Vec::new();
    let mut out = Vec::new();
    let mut series = Vec::new();
    for (i, c) in circles.iter().enumerate() {
        let report = verify_ioc(c, &e)?;
        artifacts.push(Artifact::csv(format!("ioc_{i}.csv"), c.to_csv()));
        series.push(if c.q >= 2 {
            c.configs.iter().map(|x| (x[0], x[1])).collect::<Vec<_>>()
        } else {
            c.s.iter().zip(&c.configs).map(|(s, x)| (*s, x[0])).collect()
        });
        out.push(json!({
            "source": c.source,
            "samples": c.len(),
            "saddles": c.saddles,
            "minima": c.minima,
            "report": report,
        }));
    }
    let passing = out.iter().filter(|c| c["report"]["passes"].as_bool() == Some(true)).count();
    if !series.is_empty() {
        let title = if a.q >= 2 { "circles projected on (x_0, x_1)" } else { "x_0 along each circle" };
        artifacts.push(Artifact::svg("ioc.svg", write_xy_svg(title, &series)));
    }
    Ok(VerbOutput {
        summary: format!("{} invariant ordered circles, {passing} pass verification", circles.len()),
        result: json!({ "catalog": catalog_summary(&cat), "circles": out }),
        artifacts,
    })
}

fn minimax_json(r: &MinimaxResult) -> Value {
    json!({
        "saddle": r.saddle,
        "height": r.height,
        "barrier_from_a": r.barrier_from_a,
        "barrier_from_b": r.barrier_from_b,
        "morse_index": r.morse_index,
        "gradient_norm": r.gradient_norm,
        "iterations": r.iterations,
    })
}

fn string_csv(r: &MinimaxResult, template: &PeriodicConfiguration, e: &TiltedEnergy) -> Result<String> {
    let q = template.q();
    let header = std::iter::once("node,energy".to_string()).chain((0..q).map(|n| format!("x_{n}"))).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, x) in r.string.iter().enumerate() {
        let w = energy(&template.with_values(x.clone())?, e);
        let mut row = vec![i as f64, w];
        row.extend(x);
        rows.push(row);
    }
    Ok(csv_table(&header.join(","), rows))
}

fn run_minimax(a: &MinimaxArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let opts = MinimaxOptions { nodes: a.nodes, via: a.via.clone(), ..MinimaxOptions::default() };
    let mut pairs: Vec<(PeriodicConfiguration, PeriodicConfiguration, Option<PeriodicConfiguration>)> = Vec::new();
    match (&a.min_a, &a.min_b) {
        (Some(x), Some(y)) => pairs.push((
            PeriodicConfiguration::new(a.p, a.q, x.clone())?,
            PeriodicConfiguration::new(a.p, a.q, y.clone())?,
            None,
        )),
        (None, None) => {
            let cat = find_all_equilibria(a.p, a.q, &e, a.grid_density)?;
            for c in build_ioc_with(&cat, &e, &IocOptions::default())? {
                let top = (0..c.saddles.len())
                    .max_by(|&i, &j| energy(&c.saddles[i], &e).total_cmp(&energy(&c.saddles[j], &e)))
                    .ok_or_else(|| Error::NoSolution("circle without saddles".into()))?;
                pairs.push((c.minima[top].clone(), c.minima[top + 1].clone(), Some(c.saddles[top].clone())));
            }
        }
        _ => return Err(Error::InvalidParameter("give both min_a and min_b, or neither".into())),
    }
    let mut results = Vec::new();
    let mut artifacts = Vec::new();
    for (i, (x, y, expected)) in pairs.iter().enumerate() {
        let r = minimax_with(x, y, &e, &opts)?;
        artifacts.push(Artifact::csv(format!("minimax_{i}.csv"), string_csv(&r, x, &e)?));
        let mut v = minimax_json(&r);
        v["min_a"] = to_value(x);
        v["min_b"] = to_value(y);
        if let Some(s) = expected {
            v["circle_saddle_distance"] = json!(r.saddle.orbit_distance(s));
        }
        results.push(v);
    }
    let heights: Vec<String> = results.iter().map(|r| format!("{:.12}", r["height"].as_f64().unwrap_or(f64::NAN))).collect();
    Ok(VerbOutput {
        summary: format!("{} saddle(s) at heights [{}]", results.len(), heights.join(", ")),
        result: json!({ "saddles": results }),
        artifacts,
    })
}

fn run_glue(a: &GlueArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let e = tilted(h, a.force)?;
    let (xm, xp, (pp, qp)) = asymptotes(a.p, a.q, &e)?;
    let hw = a.half_width.unwrap_or(12 * a.q as i64);
    let z = find_equilibrium_disc(&xm, &xp, DiscKind::Advancing, &e, hw)?;
    let cut = (hw / 2).max(1);
    let plan = GluingPlan {
        pieces: vec![Piece::Periodic(xm.clone()), Piece::Window(z.window.clone()), Piece::Periodic(xp.clone())],
        cuts: vec![-cut, cut],
        range: (-hw, hw),
        delta: a.delta,
    };
    let report = glue(&plan, &e)?;
    let mediant = build_mediant_config(&xm, &z, pp, qp, a.n, &e)?;
    let polished = find_equilibrium(&mediant.config, &e)?;
    let w = &report.window;
    let csv = csv_table("n,x", (w.l()..=w.r()).map(|n| vec![n as f64, w.at(n)]));
    let series = vec![aubry_rows(&polished.config).iter().map(|&(n, x)| (n as f64, x)).collect::<Vec<_>>()];
    let (mp, mq) = (mediant.config.p(), mediant.config.q());
    Ok(VerbOutput {
        summary: format!(
            "glued window: junction |v| {:.2e} ≤ bound {}; mediant ({mp},{mq}) seed |v| {:.2e}, polished residual {:.2e}",
            report.junction_velocity, report.bound_holds, mediant.max_velocity, polished.residual
        ),
        result: json!({
            "glue": {
                "delta": report.delta,
                "junction_velocity": report.junction_velocity,
                "piece_velocity": report.piece_velocity,
                "coupling": report.coupling,
                "bound_holds": report.bound_holds,
            },
            "mediant": {
                "p": mp,
                "q": mq,
                "seed_velocity": mediant.max_velocity,
                "seed_delta": mediant.delta,
                "polished_residual": polished.residual,
                "polish_distance": polished.config.distance(&mediant.config),
                "morse_index": polished.spectrum.morse_index,
                "config": polished.config,
            },
        }),
        artifacts: vec![
            Artifact::csv("glue.csv", csv),
            Artifact::svg("mediant.svg", write_xy_svg("mediant periodic state", &series)),
        ],
    })
}

fn run_modify_h(a: &ModifyHArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let modified = modify_band(h, a.m, a.n)?;
    let before = verify_properties(h, a.samples);
    let after = verify_properties(&modified, a.samples);
    let (lo, hi) = ((a.m - 3) as f64, (a.n + 3) as f64);
    let steps = ((hi - lo) / 0.05).round() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut inside_gap: f64 = 0.0;
    let mut min_twist = f64::INFINITY;
    for i in 0..=steps {
        let d = lo + (hi - lo) * i as f64 / steps as f64;
        let (b, m) = (h.eval(a.x, a.x + d), modified.eval(a.x, a.x + d));
        if d >= a.m as f64 && d <= a.n as f64 {
            inside_gap = inside_gap.max((b.h - m.h).abs());
        }
        min_twist = min_twist.min(-m.h12);
        rows.push(vec![d, b.h, m.h, b.h12, m.h12]);
    }
    let csv = csv_table("spacing,h,h_modified,h12,h12_modified", rows.clone());
    let series = vec![
        rows.iter().map(|r| (r[0], -r[3])).collect::<Vec<_>>(),
        rows.iter().map(|r| (r[0], -r[4])).collect(),
    ];
    Ok(VerbOutput {
        summary: format!(
            "band [{}, {}]: modified h valid = {}, min(-h12) {:.4} against c = {:.4}",
            a.m, a.n, after.is_valid(), after.min_neg_h12, after.c
        ),
        result: json!({
            "band": [a.m, a.n],
            "original": before,
            "modified": after,
            "max_change_inside_band": inside_gap,
            "min_twist_on_profile": min_twist,
        }),
        artifacts: vec![
            Artifact::csv("modify_h.csv", csv),
            Artifact::svg("modify_h.svg", write_xy_svg("-h12 against spacing: original and modified", &series)),
        ],
    })
}
