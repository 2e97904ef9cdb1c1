//! Run configuration: flat `key = value` files overridden by CLI flags.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored, a key may appear once per file. Unknown keys are
//! rejected. The single-letter names `J`, `T`, `Q`, `M`, `K` and `N_x` are
//! aliases of `j`, `t_final`, `q`, `samples`, `modes` and `points`.
//!
//! Precedence, lowest first: command defaults, `SLDG_SEED`, config file,
//! flags. The command is resolved before anything else, so its defaults
//! fill every key the file and the flags leave open. [`HELP`] lists the
//! keys and defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sldg_core::initial::InitialData;
use sldg_core::ldg::FluxOrientation;
use sldg_core::potential::Potential;
use sldg_core::Complex64;

use crate::CliError;

/// Key reference printed by `--help`.
pub const HELP: &str = "\
CONFIG KEYS (file `key = value`, or the flag of the same name):
  cmd           run | charge | temporal-order | spatial-order | cost-rate | regularity | noise-check
  left, right   domain endpoints; `pi` and `2pi` accepted
  k             polynomial degree (1..=8)
  j | J         LDG cells
  dt            time step, 0 < dt < 1
  t_final | T   final time
  q | Q         potential: a number, `cos` or `cos:<amplitude>`
  modes | K     noise modes
  decay         eigenvalue decay s of mu_k = a (1+k)^-s
  amplitude     a (power law) or c (constant noise)
  noise         power | constant | none
  u0            plane:<m> | cos:<a> (exp(i a cos x)) | const:<c>
  samples | M   Monte-Carlo samples
  seed          RNG seed; falls back to SLDG_SEED, then 0
  out           output directory
  flux          alternating | mirrored | same-side
  levels        dyadic exponents l, dt = 2^-l (temporal-order, regularity)
  mesh          cell counts (spatial-order)
  costs         cost exponents e, cost 2^e (cost-rate)
  points | N_x  collocation points of spectral runs (power of two)
  space         spectral | ldg (temporal-order)
  reference     commuting | fine (temporal-order)
  mode          deterministic | stochastic (spatial-order)
  moment_steps  steps of the moment check (regularity, uses dt)
  dump_noise    true | false: `run` writes noise.bin
  noise_file    `run` replays a noise dump

DEFAULTS (all commands unless overridden below):
  left=0 right=1 k=1 J=32 dt=0.001 T=1 Q=cos:1 noise=power K=32 decay=3
  amplitude=1 u0=plane:1 M=200 seed=0 out=out flux=alternating points=256
  mesh=8,16,32,64 costs=10,12,14 levels=4,5,6,7,8 space=spectral
  reference=commuting mode=deterministic moment_steps=1000
temporal-order: right=2pi Q=1 noise=constant K=1 amplitude=0.5 u0=cos:0.5 T=4
spatial-order:  noise=none T=0.1 M=1
cost-rate:      right=2pi Q=1 noise=constant K=1 amplitude=2 u0=cos:0.5 T=0.5 M=100 points=64
regularity:     right=2pi u0=cos:0.5 T=0.5 M=100 points=128 levels=5,6,7,8,9

EXIT CODES:
  0 all acceptance bands met   1 config or IO error
  2 study or solver failure    3 an acceptance band was missed
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Charge,
    TemporalOrder,
    SpatialOrder,
    CostRate,
    Regularity,
    NoiseCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Run,
        Command::Charge,
        Command::TemporalOrder,
        Command::SpatialOrder,
        Command::CostRate,
        Command::Regularity,
        Command::NoiseCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Charge => "charge",
            Command::TemporalOrder => "temporal-order",
            Command::SpatialOrder => "spatial-order",
            Command::CostRate => "cost-rate",
            Command::Regularity => "regularity",
            Command::NoiseCheck => "noise-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("unknown command `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Constant(f64),
    Cos { amplitude: f64 },
}

impl PotentialSpec {
    pub fn build(self) -> Potential {
        match self {
            PotentialSpec::Constant(q) => Potential::Constant(q),
            PotentialSpec::Cos { amplitude } => Potential::Cosine { amplitude },
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Constant(q) => write!(f, "{q}"),
            PotentialSpec::Cos { amplitude } => write!(f, "cos:{amplitude}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    PowerLaw,
    Constant,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Spectral,
    Ldg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Commuting,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialModeSpec {
    Deterministic,
    Stochastic,
}

/// Fully validated configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub left: f64,
    pub right: f64,
    pub k: usize,
    pub j: usize,
    pub dt: f64,
    pub t_final: f64,
    pub q: PotentialSpec,
    pub modes: usize,
    pub decay: f64,
    pub amplitude: f64,
    pub noise: NoiseKind,
    pub u0: InitialData,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub flux: FluxOrientation,
    pub levels: Option<Vec<u32>>,
    pub mesh: Vec<usize>,
    pub costs: Vec<u32>,
    pub points: usize,
    pub space: SpaceKind,
    pub reference: ReferenceKind,
    pub mode: SpatialModeSpec,
    pub moment_steps: usize,
    pub dump_noise: bool,
    pub noise_file: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults of one subcommand, tuned so that each command on its own
    /// reproduces its acceptance experiment.
    pub fn defaults(command: Command) -> Self {
        let base = Self {
            command,
            left: 0.0,
            right: 1.0,
            k: 1,
            j: 32,
            dt: 1e-3,
            t_final: 1.0,
            q: PotentialSpec::Cos { amplitude: 1.0 },
            modes: 32,
            decay: 3.0,
            amplitude: 1.0,
            noise: NoiseKind::PowerLaw,
            u0: InitialData::PlaneWave { frequency: 1 },
            samples: 200,
            seed: 0,
            out: PathBuf::from("out"),
            flux: FluxOrientation::Alternating,
            levels: None,
            mesh: vec![8, 16, 32, 64],
            costs: vec![10, 12, 14],
            points: 256,
            space: SpaceKind::Spectral,
            reference: ReferenceKind::Commuting,
            mode: SpatialModeSpec::Deterministic,
            moment_steps: 1000,
            dump_noise: false,
            noise_file: None,
        };
        let commuting = |c: f64| Self {
            left: 0.0,
            right: 2.0 * PI,
            q: PotentialSpec::Constant(1.0),
            noise: NoiseKind::Constant,
            amplitude: c,
            modes: 1,
            u0: InitialData::PhaseModulated { amplitude: 0.5 },
            ..base.clone()
        };
        match command {
            Command::Run | Command::Charge | Command::NoiseCheck => base,
            Command::TemporalOrder => Self {
                t_final: 4.0,
                ..commuting(0.5)
            },
            Command::SpatialOrder => Self {
                noise: NoiseKind::None,
                t_final: 0.1,
                samples: 1,
                ..base
            },
            Command::CostRate => Self {
                t_final: 0.5,
                samples: 100,
                points: 64,
                ..commuting(2.0)
            },
            Command::Regularity => Self {
                right: 2.0 * PI,
                u0: InitialData::PhaseModulated { amplitude: 0.5 },
                t_final: 0.5,
                samples: 100,
                points: 128,
                ..base
            },
        }
    }

    /// Dyadic exponents used when `levels` is not given.
    pub fn default_levels(&self) -> &'static [u32] {
        match self.command {
            Command::Regularity => &[5, 6, 7, 8, 9],
            _ => &[4, 5, 6, 7, 8],
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim();
    // Single-letter physics names are case-sensitive aliases.
    let exact = match k {
        "J" => Some("j"),
        "T" => Some("t_final"),
        "Q" => Some("q"),
        "M" => Some("samples"),
        "K" => Some("modes"),
        "N_x" => Some("points"),
        _ => None,
    };
    if exact.is_some() {
        return exact;
    }
    let lower = k.to_ascii_lowercase().replace('-', "_");
    Some(match lower.as_str() {
        "cmd" | "command" => "cmd",
        "left" => "left",
        "right" => "right",
        "k" | "degree" => "k",
        "j" | "cells" => "j",
        "dt" => "dt",
        "t_final" | "tfinal" => "t_final",
        "q" | "potential" => "q",
        "modes" => "modes",
        "decay" | "s" => "decay",
        "amplitude" | "c" => "amplitude",
        "noise" => "noise",
        "u0" => "u0",
        "samples" | "m" => "samples",
        "seed" => "seed",
        "out" => "out",
        "flux" => "flux",
        "levels" => "levels",
        "mesh" => "mesh",
        "costs" => "costs",
        "points" | "n_x" => "points",
        "space" => "space",
        "reference" => "reference",
        "mode" => "mode",
        "moment_steps" => "moment_steps",
        "dump_noise" => "dump_noise",
        "noise_file" => "noise_file",
        _ => return None,
    })
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| bad(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_real(key: &str, value: &str) -> Result<f64, CliError> {
    let v = value.trim();
    let x = match v {
        "pi" => PI,
        "2pi" => 2.0 * PI,
        "-pi" => -PI,
        _ => parse_num::<f64>(key, v)?,
    };
    if !x.is_finite() {
        return Err(bad(key, "must be finite"));
    }
    Ok(x)
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(bad(key, "list is empty"));
    }
    Ok(items)
}

fn parse_prefixed<'a>(value: &'a str, prefix: &str) -> Option<&'a str> {
    value.strip_prefix(prefix).and_then(|r| r.strip_prefix(':'))
}

impl RunConfig {
    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let canon = canonical_key(key).ok_or_else(|| bad(key, "unknown key"))?;
        let v = value.trim();
        match canon {
            "cmd" => self.command = v.parse().map_err(|e: String| bad(key, e))?,
            "left" => self.left = parse_real(key, v)?,
            "right" => self.right = parse_real(key, v)?,
            "k" => self.k = parse_num(key, v)?,
            "j" => self.j = parse_num(key, v)?,
            "dt" => self.dt = parse_real(key, v)?,
            "t_final" => self.t_final = parse_real(key, v)?,
            "q" => {
                self.q = if v == "cos" {
                    PotentialSpec::Cos { amplitude: 1.0 }
                } else if let Some(a) = parse_prefixed(v, "cos") {
                    PotentialSpec::Cos {
                        amplitude: parse_real(key, a)?,
                    }
                } else {
                    PotentialSpec::Constant(parse_real(key, v)?)
                }
            }
            "modes" => self.modes = parse_num(key, v)?,
            "decay" => self.decay = parse_real(key, v)?,
            "amplitude" => self.amplitude = parse_real(key, v)?,
            "noise" => {
                self.noise = match v {
                    "power" => NoiseKind::PowerLaw,
                    "constant" => NoiseKind::Constant,
                    "none" => NoiseKind::None,
                    _ => return Err(bad(key, format!("expected power, constant or none, got `{v}`"))),
                }
            }
            "u0" => {
                self.u0 = if let Some(m) = parse_prefixed(v, "plane") {
                    InitialData::PlaneWave {
                        frequency: parse_num(key, m)?,
                    }
                } else if let Some(a) = parse_prefixed(v, "cos") {
                    InitialData::PhaseModulated {
                        amplitude: parse_real(key, a)?,
                    }
                } else if let Some(c) = parse_prefixed(v, "const") {
                    InitialData::Constant(Complex64::new(parse_real(key, c)?, 0.0))
                } else {
                    return Err(bad(key, format!("expected plane:<m>, cos:<a> or const:<c>, got `{v}`")));
                }
            }
            "samples" => self.samples = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "flux" => {
                self.flux = match v {
                    "alternating" => FluxOrientation::Alternating,
                    "mirrored" => FluxOrientation::Mirrored,
                    "same-side" | "same_side" => FluxOrientation::SameSide,
                    _ => return Err(bad(key, format!("expected alternating, mirrored or same-side, got `{v}`"))),
                }
            }
            "levels" => self.levels = Some(parse_list(key, v)?),
            "mesh" => self.mesh = parse_list(key, v)?,
            "costs" => self.costs = parse_list(key, v)?,
            "points" => self.points = parse_num(key, v)?,
            "space" => {
                self.space = match v {
                    "spectral" => SpaceKind::Spectral,
                    "ldg" => SpaceKind::Ldg,
                    _ => return Err(bad(key, format!("expected spectral or ldg, got `{v}`"))),
                }
            }
            "reference" => {
                self.reference = match v {
                    "commuting" => ReferenceKind::Commuting,
                    "fine" => ReferenceKind::Fine,
                    _ => return Err(bad(key, format!("expected commuting or fine, got `{v}`"))),
                }
            }
            "mode" => {
                self.mode = match v {
                    "deterministic" => SpatialModeSpec::Deterministic,
                    "stochastic" => SpatialModeSpec::Stochastic,
                    _ => return Err(bad(key, format!("expected deterministic or stochastic, got `{v}`"))),
                }
            }
            "moment_steps" => self.moment_steps = parse_num(key, v)?,
            "dump_noise" => self.dump_noise = parse_num(key, v)?,
            "noise_file" => self.noise_file = Some(PathBuf::from(v)),
            _ => unreachable!("canonical key without handler"),
        }
        Ok(())
    }

    /// Parses a config file body into ordered `(key, value)` pairs.
    pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                bad(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if let Some(canon) = canonical_key(key) {
                if let Some(prev) = seen.insert(canon, lineno + 1) {
                    return Err(bad(key, format!("line {}: duplicate of line {prev}", lineno + 1)));
                }
            }
            out.push((key.to_string(), value.trim().to_string()));
        }
        Ok(out)
    }

    /// Builds a config from ordered overrides; the command is resolved
    /// first so that its defaults sit underneath every override.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let mut command = Command::Run;
        for (k, v) in &pairs {
            if canonical_key(k) == Some("cmd") {
                command = v.trim().parse().map_err(|e: String| bad(k, e))?;
            }
        }
        let mut cfg = RunConfig::defaults(command);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Exponents `l` with `Δt = 2^{-l}` for the dyadic studies.
    pub fn levels(&self) -> Vec<u32> {
        self.levels.clone().unwrap_or_else(|| self.default_levels().to_vec())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.left >= self.right {
            return Err(bad("right", format!("domain needs left < right, got [{}, {}]", self.left, self.right)));
        }
        if self.k < 1 || self.k > 8 {
            return Err(bad("k", format!("degree must lie in 1..=8, got {}", self.k)));
        }
        if self.j < 2 {
            return Err(bad("j", format!("need at least 2 cells, got {}", self.j)));
        }
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(bad("dt", format!("κ = √(4|ln Δt|) needs 0 < Δt < 1, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) {
            return Err(bad("t_final", "must be positive"));
        }
        let ratio = self.t_final / self.dt;
        if matches!(self.command, Command::Run | Command::Charge | Command::SpatialOrder)
            && (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0)
        {
            return Err(bad("dt", format!("T/Δt = {ratio} must be an integer")));
        }
        if self.modes == 0 {
            return Err(bad("modes", "need at least one noise mode"));
        }
        if self.decay < 0.0 {
            return Err(bad("decay", "must be non-negative"));
        }
        if self.samples == 0 {
            return Err(bad("samples", "need at least one sample"));
        }
        if !self.points.is_power_of_two() || self.points < 2 {
            return Err(bad("points", format!("must be a power of two ≥ 2, got {}", self.points)));
        }
        if self.mesh.iter().any(|&j| j < 2) {
            return Err(bad("mesh", "every mesh needs at least 2 cells"));
        }
        {
            let levels = self.levels();
            if levels.iter().any(|&l| l == 0 || l > 30) {
                return Err(bad("levels", "exponents must lie in 1..=30"));
            }
            for &l in &levels {
                let n = self.t_final * (1u64 << l) as f64;
                if matches!(self.command, Command::TemporalOrder | Command::Regularity)
                    && (n < 1.0 || (n - n.round()).abs() > 1e-9 * n)
                {
                    return Err(bad("levels", format!("T·2^{l} = {n} is not a positive integer step count")));
                }
            }
        }
        if self.costs.iter().any(|&e| e == 0 || e > 24) {
            return Err(bad("costs", "exponents must lie in 1..=24"));
        }
        if self.command == Command::Regularity && self.moment_steps == 0 {
            return Err(bad("moment_steps", "need at least one step"));
        }
        Ok(())
    }

    /// `key=value` rendering of every field, for logs and the run header.
    pub fn describe(&self) -> String {
        fn list<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let u0 = match self.u0 {
            InitialData::PlaneWave { frequency } => format!("plane:{frequency}"),
            InitialData::PhaseModulated { amplitude } => format!("cos:{amplitude}"),
            InitialData::Constant(c) => format!("const:{}", c.re),
            InitialData::Mixed { frequency, cosine } => format!("mixed:{frequency}:{cosine}"),
        };
        let noise = match self.noise {
            NoiseKind::PowerLaw => "power",
            NoiseKind::Constant => "constant",
            NoiseKind::None => "none",
        };
        let flux = match self.flux {
            FluxOrientation::Alternating => "alternating",
            FluxOrientation::Mirrored => "mirrored",
            FluxOrientation::SameSide => "same-side",
        };
        format!(
            "cmd={} left={} right={} k={} J={} dt={} T={} Q={} K={} decay={} amplitude={} noise={} u0={} M={} seed={} flux={} levels={} mesh={} costs={} points={}",
            self.command,
            self.left,
            self.right,
            self.k,
            self.j,
            self.dt,
            self.t_final,
            self.q,
            self.modes,
            self.decay,
            self.amplitude,
            noise,
            u0,
            self.samples,
            self.seed,
            flux,
            self.levels.as_deref().map(list).unwrap_or_else(|| "default".into()),
            list(&self.mesh),
            list(&self.costs),
            self.points,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_fills_defaults() {
        let pairs = RunConfig::parse_pairs("cmd=charge\nJ=32\nk=1\ndt=0.001\nT=1.0\n").unwrap();
        let cfg = RunConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(cfg.command, Command::Charge);
        assert_eq!(cfg.j, 32);
        assert_eq!(cfg.steps(), 1000);
        assert_eq!(cfg.modes, 32);
        assert_eq!(cfg.decay, 3.0);
    }

    #[test]
    fn rejects_dt_at_least_one() {
        let err = RunConfig::from_pairs([("dt", "1.5"), ("T", "3")]).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn rejects_unknown_key_by_name() {
        let err = RunConfig::from_pairs([("theta", "1")]).unwrap_err();
        assert!(err.to_string().contains("theta"));
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let err = RunConfig::from_pairs([("J", "many")]).unwrap_err();
        assert!(err.to_string().contains('J'));
    }

    #[test]
    fn comments_and_duplicates() {
        let pairs = RunConfig::parse_pairs("# header\n k = 2 # trailing\n\n").unwrap();
        assert_eq!(pairs, vec![("k".to_string(), "2".to_string())]);
        assert!(RunConfig::parse_pairs("k=1\ndegree=2").is_err());
        assert!(RunConfig::parse_pairs("novalue").is_err());
    }

    #[test]
    fn potential_and_domain_forms() {
        let cfg = RunConfig::from_pairs([("Q", "cos:2.5"), ("right", "2pi"), ("u0", "cos:0.5")]).unwrap();
        assert_eq!(cfg.q, PotentialSpec::Cos { amplitude: 2.5 });
        assert!((cfg.right - 2.0 * PI).abs() < 1e-15);
        assert_eq!(cfg.u0, InitialData::PhaseModulated { amplitude: 0.5 });
    }

    #[test]
    fn non_integer_step_count_rejected() {
        assert!(RunConfig::from_pairs([("dt", "0.3"), ("T", "1")]).is_err());
    }

    #[test]
    fn level_step_counts_must_be_integers() {
        let err = RunConfig::from_pairs([("cmd", "temporal-order"), ("T", "0.3"), ("levels", "2,3")]).unwrap_err();
        assert!(err.to_string().contains("levels"));
    }
}
