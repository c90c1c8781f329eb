//! Experiment configuration: a flat TOML file, overridden key by key from the
//! command line.
//!
//! ```toml
//! preset = "signal-compression-desk"
//! method = "reduced-avg-proj"
//! coordinator = "C"
//! tol = 1e-12
//! seed = 7
//! ```
//!
//! A custom problem lists its sets in a small text syntax instead of a preset:
//!
//! ```toml
//! sets = ["box alpha=1 n=2", "halfspace normal=1,1 offset=0", "ball center=0.5,0 radius=1"]
//! x0 = [3.0, -2.0]
//! ```
//!
//! Set syntax is `kind key=value ...`; vectors are comma lists and lists of
//! vectors are separated by `;`:
//!
//! | kind        | keys                          |
//! |-------------|-------------------------------|
//! | `box`       | `alpha`, `n`                  |
//! | `ball`      | `center`, `radius`            |
//! | `halfspace` | `normal`, `offset` (`<a,x> <= b`) |
//! | `span`      | `vectors`, optional `n`       |
//! | `affine`    | `vectors`, `offset`           |
//! | `points`    | `points`                      |
//! | `full`      | `n`                           |
//! | `zero`      | `n`                           |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use feaslift::algorithms::GdrParams;
use feaslift::{Point, SetDescriptor};
use serde::{Deserialize, Serialize};

use crate::error::{validation, HResult, HarnessError};

pub const PRESET_FULL: &str = "signal-compression";
pub const PRESET_DESK: &str = "signal-compression-desk";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AvgProj,
    ReducedAvgProj,
    ParallelGdr,
    Gdr2,
    Map2,
    Dr2,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::AvgProj, Method::ReducedAvgProj, Method::ParallelGdr, Method::Gdr2, Method::Map2, Method::Dr2];

    pub fn id(self) -> &'static str {
        match self {
            Method::AvgProj => "avg-proj",
            Method::ReducedAvgProj => "reduced-avg-proj",
            Method::ParallelGdr => "parallel-gdr",
            Method::Gdr2 => "gdr-2",
            Method::Map2 => "map-2",
            Method::Dr2 => "dr-2",
        }
    }

    pub fn uses_coordinator(self) -> bool {
        self != Method::AvgProj
    }

    pub fn two_set_only(self) -> bool {
        matches!(self, Method::Gdr2 | Method::Map2 | Method::Dr2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> HResult<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| HarnessError::Validation(format!("unknown method `{s}`")))
    }
}

/// Which set plays the coordinator role in the reduced lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinator {
    /// The last set in the list.
    Last,
    Index(usize),
    /// `L`, `M` or `C` of the signal-compression preset.
    Named(char),
}

impl FromStr for Coordinator {
    type Err = HarnessError;

    fn from_str(s: &str) -> HResult<Self> {
        match s {
            "L" | "M" | "C" => Ok(Coordinator::Named(s.chars().next().expect("nonempty"))),
            "last" => Ok(Coordinator::Last),
            _ => s
                .parse::<usize>()
                .map(Coordinator::Index)
                .map_err(|_| HarnessError::Validation(format!("coordinator must be L, M, C or an index, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Problem {
    SignalCompression { n: usize, m: usize, d: usize, alpha: f64 },
    Custom { sets: Vec<String>, x0: Option<Vec<f64>> },
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub method: Method,
    pub coordinator: Coordinator,
    pub lambda: f64,
    pub mu: f64,
    pub relax_alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Snapshot stride when the state is too large for full history.
    pub history_stride: usize,
    pub out: Option<PathBuf>,
}

/// Raw key-value form shared by the config file and the command line.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub sets: Option<Vec<String>>,
    pub x0: Option<Vec<f64>>,
    pub method: Option<String>,
    pub coordinator: Option<String>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub relax_alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub history_stride: Option<usize>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RawConfig {
    pub fn from_toml(text: &str) -> HResult<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Validation(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> HResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RawConfig) -> Self {
        overlay!(
            self, top, preset, n, m, d, alpha, sets, x0, method, coordinator, lambda, mu, relax_alpha, tol,
            max_iter, seed, history_stride, out
        );
        self
    }

    pub fn resolve(&self) -> HResult<ExperimentConfig> {
        let problem = match (&self.preset, &self.sets) {
            (Some(_), Some(_)) => return Err(HarnessError::Validation("give either `preset` or `sets`, not both".into())),
            (None, None) => return Err(HarnessError::Validation("no problem given: set `preset` or `sets`".into())),
            (Some(p), None) => {
                let (n, m, d) = match p.as_str() {
                    PRESET_FULL => (128, 512, 8),
                    PRESET_DESK => (32, 128, 4),
                    other => return Err(HarnessError::Validation(format!("unknown preset `{other}`"))),
                };
                let (n, m, d) = (self.n.unwrap_or(n), self.m.unwrap_or(m), self.d.unwrap_or(d));
                let alpha = self.alpha.unwrap_or(0.1);
                if !(d >= 1 && d <= n && n <= m) {
                    return Err(HarnessError::Validation(format!("preset needs 1 <= d <= n <= m, got d={d} n={n} m={m}")));
                }
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(HarnessError::Validation(format!("box half-width must be positive, got {alpha}")));
                }
                if self.x0.is_some() {
                    return Err(HarnessError::Validation("`x0` is drawn from the seed for presets".into()));
                }
                Problem::SignalCompression { n, m, d, alpha }
            }
            (None, Some(sets)) => {
                if sets.is_empty() {
                    return Err(HarnessError::Validation("`sets` is empty".into()));
                }
                if self.n.is_some() || self.m.is_some() || self.d.is_some() || self.alpha.is_some() {
                    return Err(HarnessError::Validation("`n`, `m`, `d`, `alpha` only apply to presets".into()));
                }
                Problem::Custom { sets: sets.clone(), x0: self.x0.clone() }
            }
        };
        let method = self.method.as_deref().unwrap_or("avg-proj").parse()?;
        let coordinator = match &self.coordinator {
            Some(c) => c.parse()?,
            None => Coordinator::Last,
        };
        let cfg = ExperimentConfig {
            problem,
            method,
            coordinator,
            lambda: self.lambda.unwrap_or(1.0),
            mu: self.mu.unwrap_or(1.0),
            relax_alpha: self.relax_alpha.unwrap_or(0.5),
            tol: self.tol.unwrap_or(1e-12),
            max_iter: self.max_iter.unwrap_or(100_000),
            seed: self.seed.unwrap_or(0),
            history_stride: self.history_stride.unwrap_or(10),
            out: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn set_count(&self) -> usize {
        match &self.problem {
            Problem::SignalCompression { .. } => 3,
            Problem::Custom { sets, .. } => sets.len(),
        }
    }

    /// Coordinator as an index into the set list.
    pub fn coordinator_index(&self) -> HResult<usize> {
        let r = self.set_count();
        let idx = match self.coordinator {
            Coordinator::Last => r - 1,
            Coordinator::Index(i) => i,
            Coordinator::Named(c) => match (&self.problem, c) {
                (Problem::SignalCompression { .. }, 'L') => 0,
                (Problem::SignalCompression { .. }, 'M') => 1,
                (Problem::SignalCompression { .. }, 'C') => 2,
                _ => return Err(HarnessError::Validation(format!("coordinator `{c}` only names preset sets"))),
            },
        };
        if idx >= r {
            return Err(HarnessError::Validation(format!("coordinator index {idx} out of range for {r} sets")));
        }
        Ok(idx)
    }

    /// Parameters for the gDR-family methods.
    pub fn gdr_params(&self) -> HResult<GdrParams> {
        match self.method {
            Method::Map2 => Ok(GdrParams::alternating_projections()),
            Method::Dr2 => GdrParams::douglas_rachford(self.relax_alpha).map_err(validation),
            _ => GdrParams::new(self.lambda, self.mu, self.relax_alpha).map_err(validation),
        }
    }

    fn validate(&self) -> HResult<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(HarnessError::Validation(format!("tol must be positive, got {}", self.tol)));
        }
        if self.history_stride == 0 {
            return Err(HarnessError::Validation("history_stride must be positive".into()));
        }
        if self.method.two_set_only() && self.set_count() != 2 {
            return Err(HarnessError::Validation(format!(
                "{} needs exactly 2 sets, got {}",
                self.method,
                self.set_count()
            )));
        }
        if self.method.uses_coordinator() && self.set_count() < 2 {
            return Err(HarnessError::Validation(format!("{} needs at least 2 sets", self.method)));
        }
        self.coordinator_index()?;
        if matches!(self.method, Method::ParallelGdr | Method::Gdr2 | Method::Dr2 | Method::Map2) {
            self.gdr_params()?;
        }
        Ok(())
    }

    /// Human-readable names of the sets, in order.
    pub fn set_names(&self) -> Vec<String> {
        match &self.problem {
            Problem::SignalCompression { .. } => vec!["L".into(), "M".into(), "C".into()],
            Problem::Custom { sets, .. } => (0..sets.len()).map(|i| i.to_string()).collect(),
        }
    }

    /// Configurations must agree on this to be compared side by side.
    pub fn pairing_key(&self) -> (String, u64) {
        (format!("{:?}", self.problem), self.seed)
    }
}

/// Parses one set description.
pub fn parse_set(spec: &str) -> HResult<SetDescriptor> {
    let bad = |msg: String| HarnessError::Validation(format!("set `{spec}`: {msg}"));
    let mut words = spec.split_whitespace();
    let kind = words.next().ok_or_else(|| bad("empty description".into()))?;
    let mut kv = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{w}`")))?;
        if kv.insert(k, v).is_some() {
            return Err(bad(format!("duplicate key `{k}`")));
        }
    }
    let mut take = |k: &str| kv.remove(k).ok_or_else(|| bad(format!("missing `{k}`")));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: `{s}`")));
    let count = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(format!("not a count: `{s}`")));
    let vector = |s: &str| -> HResult<Point> {
        let v = s.split(',').map(num).collect::<HResult<Vec<_>>>()?;
        Point::new(v).map_err(validation)
    };
    let vectors = |s: &str| s.split(';').map(vector).collect::<HResult<Vec<_>>>();

    let set = match kind {
        "box" => SetDescriptor::inf_box(num(take("alpha")?)?, count(take("n")?)?),
        "ball" => SetDescriptor::ball(vector(take("center")?)?, num(take("radius")?)?),
        "halfspace" => SetDescriptor::half_space(vector(take("normal")?)?, num(take("offset")?)?),
        "span" => {
            let vs = vectors(take("vectors")?)?;
            let n = match kv.remove("n") {
                Some(n) => count(n)?,
                None => vs[0].dim(),
            };
            SetDescriptor::span(n, &vs)
        }
        "affine" => {
            let vs = vectors(take("vectors")?)?;
            let offset = vector(take("offset")?)?;
            let dir = SetDescriptor::span(offset.dim(), &vs).map_err(validation)?;
            SetDescriptor::affine_subspace(dir.subspace_basis().expect("span is a subspace").clone(), offset)
        }
        "points" => SetDescriptor::finite_points(vectors(take("points")?)?),
        "full" => SetDescriptor::full_space(count(take("n")?)?),
        "zero" => SetDescriptor::zero_subspace(count(take("n")?)?),
        other => return Err(bad(format!("unknown set kind `{other}`"))),
    }
    .map_err(validation)?;
    if let Some(k) = kv.keys().next() {
        return Err(bad(format!("unknown key `{k}`")));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        RawConfig::from_toml(text).unwrap()
    }

    #[test]
    fn preset_defaults_and_overrides() {
        let cfg = raw("preset = \"signal-compression\"").resolve().unwrap();
        assert_eq!(cfg.problem, Problem::SignalCompression { n: 128, m: 512, d: 8, alpha: 0.1 });
        assert_eq!(cfg.coordinator_index().unwrap(), 2);

        let cli = RawConfig { n: Some(16), coordinator: Some("M".into()), ..Default::default() };
        let cfg = raw("preset = \"signal-compression-desk\"\nn = 64").overlay(&cli).resolve().unwrap();
        assert_eq!(cfg.problem, Problem::SignalCompression { n: 16, m: 128, d: 4, alpha: 0.1 });
        assert_eq!(cfg.coordinator_index().unwrap(), 1);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(RawConfig::from_toml("bogus = 1").is_err());
        for text in [
            "",
            "preset = \"nope\"",
            "preset = \"signal-compression\"\nd = 200",
            "preset = \"signal-compression\"\ncoordinator = \"3\"",
            "preset = \"signal-compression\"\nmethod = \"gdr-2\"",
            "preset = \"signal-compression\"\ntol = 0.0",
            "sets = [\"full n=2\"]\ncoordinator = \"L\"",
            "sets = [\"full n=2\", \"zero n=2\"]\nmethod = \"dr-2\"\nrelax_alpha = 1.0",
        ] {
            let r = raw(text).resolve();
            assert!(matches!(r, Err(HarnessError::Validation(_))), "{text:?} gave {r:?}");
        }
    }

    #[test]
    fn set_syntax() {
        let b = parse_set("box alpha=0.5 n=3").unwrap();
        assert_eq!(b.box_alpha(), Some(0.5));
        assert_eq!(b.ambient_dim(), 3);
        let s = parse_set("span vectors=1,0,0;0,1,0").unwrap();
        assert_eq!(s.subspace_basis().unwrap().ncols(), 2);
        let a = parse_set("affine vectors=1,1 offset=0,1").unwrap();
        assert!(a.contains(&Point::from_slice(&[2., 3.]).unwrap(), 1e-12).unwrap());
        let p = parse_set("points points=1,0;0,1;1,1").unwrap();
        assert_eq!(p.points().unwrap().len(), 3);
        let h = parse_set("halfspace normal=1,0 offset=2").unwrap();
        assert!(h.contains(&Point::from_slice(&[2., 9.]).unwrap(), 0.0).unwrap());

        for bad in ["", "box alpha=1", "box alpha=x n=2", "cube n=2", "full n=2 extra=1", "ball center=1,2 radius=-1"] {
            assert!(parse_set(bad).is_err(), "{bad}");
        }
    }
}
