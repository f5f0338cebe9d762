//! Experiment configuration, presets and the flat `key = value` file format.
//!
//! ```text
//! # comment
//! experiment = sparse-vs-m      # sparse-vs-m | lowrank-vs-m | nodither-vs-m | delta-sweep | custom
//! matrix     = gaussian         # gaussian | partial-dct | bernoulli
//! model      = sparse           # sparse (n, k) | lowrank (n1, n2, r)
//! n = 512
//! k = 4
//! m_min = 78                    # or: m = 78, 120, 256
//! m_max = 512
//! m_points = 10
//! m_log = true
//! delta = 0.5, 1, 2
//! dither = on                   # on | off
//! trials = 100
//! seed = 0
//! fit_min_m = 146               # optional
//! fixed_matrix = false          # optional
//! name = exp-a                  # optional, output file stem
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::SignalModel;
use crate::quantize::DitherMode;
use crate::sensing::OperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    SparseVsM,
    LowRankVsM,
    NoDitherVsM,
    DeltaSweep,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SparseVsM,
        ExperimentKind::LowRankVsM,
        ExperimentKind::NoDitherVsM,
        ExperimentKind::DeltaSweep,
        ExperimentKind::Custom,
    ];

    /// Stable numeric id that enters seed derivation.
    pub fn id(self) -> u64 {
        match self {
            ExperimentKind::SparseVsM => 1,
            ExperimentKind::LowRankVsM => 2,
            ExperimentKind::NoDitherVsM => 3,
            ExperimentKind::DeltaSweep => 4,
            ExperimentKind::Custom => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SparseVsM => "sparse-vs-m",
            ExperimentKind::LowRankVsM => "lowrank-vs-m",
            ExperimentKind::NoDitherVsM => "nodither-vs-m",
            ExperimentKind::DeltaSweep => "delta-sweep",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MGrid {
    List(Vec<usize>),
    Range {
        min: usize,
        max: usize,
        points: usize,
        log: bool,
    },
}

impl MGrid {
    /// Grid values rounded to integers, ascending, deduplicated.
    pub fn values(&self) -> Vec<usize> {
        let mut v = match self {
            MGrid::List(list) => list.clone(),
            &MGrid::Range {
                min,
                max,
                points,
                log,
            } => {
                if points <= 1 || min == max {
                    vec![min]
                } else {
                    (0..points)
                        .map(|i| {
                            let t = i as f64 / (points - 1) as f64;
                            let v = if log {
                                ((min as f64).ln() + t * ((max as f64).ln() - (min as f64).ln()))
                                    .exp()
                            } else {
                                min as f64 + t * (max as f64 - min as f64)
                            };
                            v.round() as usize
                        })
                        .collect()
                }
            }
        };
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Output file stem.
    pub name: String,
    pub experiment: ExperimentKind,
    pub matrix: OperatorKind,
    pub model: SignalModel,
    pub m_grid: MGrid,
    pub deltas: Vec<f64>,
    pub dither: DitherMode,
    pub trials: usize,
    pub seed: u64,
    /// Smallest `m` entering the decay fit; all points when `None`.
    pub fit_min_m: Option<usize>,
    /// Draw one `Φ` per `m` and one `ξ` per `(m, δ)` and reuse them for every trial.
    pub fixed_matrix: bool,
}

pub const PRESETS: [&str; 4] = ["exp-a", "exp-b", "exp-c", "exp-d"];

/// Sparse sweeps start at `⌈4k·ln(n/k)⌉`.
fn sparse_m_min(n: usize, k: usize) -> usize {
    (4.0 * k as f64 * (n as f64 / k as f64).ln()).ceil() as usize
}

fn log_grid(min: usize, max: usize, points: usize) -> MGrid {
    MGrid::Range {
        min,
        max,
        points,
        log: true,
    }
}

impl ExperimentConfig {
    /// Built-in experiment definitions.
    ///
    /// * `exp-a`: Gaussian, 4-sparse in `R^512`, 10 log-spaced `m` from 78 to 512,
    ///   `δ ∈ {0.5, 1, 2}`, 100 trials, fit over the upper two thirds of the grid.
    /// * `exp-b`: partial DCT, rank-2 `64×64`, 9 log-spaced `m` from 256 to 4096, 50 trials.
    /// * `exp-c`: as `exp-a` with a partial DCT and no dither, fit over the upper half.
    /// * `exp-d`: Gaussian, rank-2 `64×64`, `m = 2048`, `δ = 2^-3 .. 2^5`, 50 trials.
    pub fn preset(name: &str) -> Result<Self> {
        let sparse = SignalModel::sparse(512, 4)?;
        let lowrank = SignalModel::low_rank(64, 64, 2)?;
        let sparse_grid = log_grid(sparse_m_min(512, 4), 512, 10);
        let mut cfg = match name {
            "exp-a" => ExperimentConfig {
                name: name.into(),
                experiment: ExperimentKind::SparseVsM,
                matrix: OperatorKind::DenseGaussian,
                model: sparse,
                m_grid: sparse_grid,
                deltas: vec![0.5, 1.0, 2.0],
                dither: DitherMode::Uniform,
                trials: 100,
                seed: 0,
                fit_min_m: None,
                fixed_matrix: false,
            },
            "exp-b" => ExperimentConfig {
                name: name.into(),
                experiment: ExperimentKind::LowRankVsM,
                matrix: OperatorKind::PartialDct,
                model: lowrank,
                m_grid: log_grid(256, 4096, 9),
                deltas: vec![0.5, 1.0, 2.0],
                dither: DitherMode::Uniform,
                trials: 50,
                seed: 0,
                fit_min_m: None,
                fixed_matrix: false,
            },
            "exp-c" => ExperimentConfig {
                name: name.into(),
                experiment: ExperimentKind::NoDitherVsM,
                matrix: OperatorKind::PartialDct,
                model: sparse,
                m_grid: sparse_grid,
                deltas: vec![0.5, 1.0, 2.0],
                dither: DitherMode::None,
                trials: 100,
                seed: 0,
                fit_min_m: None,
                fixed_matrix: false,
            },
            "exp-d" => ExperimentConfig {
                name: name.into(),
                experiment: ExperimentKind::DeltaSweep,
                matrix: OperatorKind::DenseGaussian,
                model: lowrank,
                m_grid: MGrid::List(vec![2048]),
                deltas: (-3..=5).map(|e| 2f64.powi(e)).collect(),
                dither: DitherMode::Uniform,
                trials: 50,
                seed: 0,
                fit_min_m: None,
                fixed_matrix: false,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        let grid = cfg.m_values();
        cfg.fit_min_m = match name {
            "exp-a" => Some(grid[grid.len() / 3]),
            "exp-c" => Some(grid[grid.len() / 2]),
            _ => None,
        };
        Ok(cfg)
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_grid.values()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let n = self.model.dim();
        let ms = self.m_values();
        if ms.is_empty() {
            return Err(Error::Config("the m grid is empty".into()));
        }
        if let MGrid::Range {
            min, max, points, ..
        } = self.m_grid
        {
            if min > max || points == 0 {
                return Err(Error::Config(format!(
                    "m range needs m_min <= m_max and m_points >= 1 (got {min}..{max}, {points} points)"
                )));
            }
        }
        if let Some(&bad) = ms.iter().find(|&&m| m == 0 || m > n) {
            return Err(Error::Config(format!(
                "every m must lie in 1..={n} (the ambient dimension), found {bad}"
            )));
        }
        if self.deltas.is_empty() {
            return Err(Error::Config("the delta list is empty".into()));
        }
        if let Some(bad) = self.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Config(format!(
                "every delta must be positive and finite, found {bad}"
            )));
        }
        let mut sorted = self.deltas.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("the delta list has duplicates".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "invalid output name '{}'",
                self.name
            )));
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. Unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{key}' (known keys: {})",
                    lineno + 1,
                    KEYS.join(", ")
                )));
            }
            if kv
                .insert(key.clone(), (lineno + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: key '{key}' given twice",
                    lineno + 1
                )));
            }
        }
        let mut p = Parser { kv };

        let experiment: ExperimentKind = p.take("experiment")?.unwrap_or(ExperimentKind::Custom);
        let matrix = match p.take_str("matrix")? {
            Some(s) => OperatorKind::from_name(&s).ok_or_else(|| {
                Error::Config(format!(
                    "matrix: unknown kind '{s}' (gaussian, partial-dct, bernoulli)"
                ))
            })?,
            None => return Err(Error::Config("missing key 'matrix'".into())),
        };
        let model = match p.take_str("model")?.as_deref() {
            Some("sparse") => SignalModel::Sparse {
                n: p.require("n")?,
                k: p.require("k")?,
            },
            Some("lowrank") => SignalModel::LowRank {
                n1: p.require("n1")?,
                n2: p.require("n2")?,
                r: p.require("r")?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "model: expected 'sparse' or 'lowrank', got '{other}'"
                )))
            }
            None => return Err(Error::Config("missing key 'model'".into())),
        };
        let list = p.take_str("m")?;
        let m_grid = match list {
            Some(list) => {
                for key in ["m_min", "m_max", "m_points", "m_log"] {
                    if p.kv.contains_key(key) {
                        return Err(Error::Config(format!(
                            "give either 'm' or '{key}', not both"
                        )));
                    }
                }
                MGrid::List(parse_list("m", &list)?)
            }
            None => MGrid::Range {
                min: p.require("m_min")?,
                max: p.require("m_max")?,
                points: p.require("m_points")?,
                log: p.take_bool("m_log")?.unwrap_or(true),
            },
        };
        let deltas = match p.take_str("delta")? {
            Some(list) => parse_list("delta", &list)?,
            None => return Err(Error::Config("missing key 'delta'".into())),
        };
        let dither = match p.take_str("dither")?.as_deref() {
            None | Some("on") => DitherMode::Uniform,
            Some("off") => DitherMode::None,
            Some(other) => {
                return Err(Error::Config(format!(
                    "dither: expected on or off, got '{other}'"
                )))
            }
        };
        let cfg = ExperimentConfig {
            name: p
                .take_str("name")?
                .unwrap_or_else(|| experiment.name().to_string()),
            experiment,
            matrix,
            model,
            m_grid,
            deltas,
            dither,
            trials: p.take("trials")?.unwrap_or(10),
            seed: p.take("seed")?.unwrap_or(0),
            fit_min_m: p.take("fit_min_m")?,
            fixed_matrix: p.take_bool("fixed_matrix")?.unwrap_or(false),
        };
        if let Some((key, (line, _))) = p.kv.into_iter().next() {
            return Err(Error::Config(format!(
                "line {line}: key '{key}' does not apply to this model or grid"
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the configuration in the format accepted by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "matrix = {}", self.matrix);
        match self.model {
            SignalModel::Sparse { n, k } => {
                let _ = writeln!(s, "model = sparse\nn = {n}\nk = {k}");
            }
            SignalModel::LowRank { n1, n2, r } => {
                let _ = writeln!(s, "model = lowrank\nn1 = {n1}\nn2 = {n2}\nr = {r}");
            }
        }
        match &self.m_grid {
            MGrid::List(ms) => {
                let _ = writeln!(s, "m = {}", join(ms));
            }
            MGrid::Range {
                min,
                max,
                points,
                log,
            } => {
                let _ = writeln!(
                    s,
                    "m_min = {min}\nm_max = {max}\nm_points = {points}\nm_log = {log}"
                );
            }
        }
        let _ = writeln!(s, "delta = {}", join(&self.deltas));
        let _ = writeln!(
            s,
            "dither = {}",
            if self.dither.is_on() { "on" } else { "off" }
        );
        let _ = writeln!(s, "trials = {}\nseed = {}", self.trials, self.seed);
        if let Some(f) = self.fit_min_m {
            let _ = writeln!(s, "fit_min_m = {f}");
        }
        let _ = writeln!(s, "fixed_matrix = {}", self.fixed_matrix);
        s
    }
}

const KEYS: [&str; 20] = [
    "name",
    "experiment",
    "matrix",
    "model",
    "n",
    "k",
    "n1",
    "n2",
    "r",
    "m",
    "m_min",
    "m_max",
    "m_points",
    "m_log",
    "delta",
    "dither",
    "trials",
    "seed",
    "fit_min_m",
    "fixed_matrix",
];

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", p.trim())))
        })
        .collect()
}

struct Parser {
    kv: BTreeMap<String, (usize, String)>,
}

impl Parser {
    fn take_str(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.kv.remove(key).map(|(_, v)| v))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.kv.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!(
                    "line {line}: cannot parse '{v}' as the value of '{key}'"
                ))
            }),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_grids() {
        let a = ExperimentConfig::preset("exp-a").unwrap();
        let ms = a.m_values();
        assert_eq!(ms.len(), 10);
        assert_eq!((ms[0], ms[9]), (78, 512));
        assert_eq!(a.fit_min_m, Some(ms[3]));
        assert_eq!(a.trials, 100);
        assert_eq!(a.deltas, vec![0.5, 1.0, 2.0]);

        let b = ExperimentConfig::preset("exp-b").unwrap();
        assert_eq!(
            b.m_values(),
            vec![256, 362, 512, 724, 1024, 1448, 2048, 2896, 4096]
        );
        assert_eq!(b.model.dim(), 4096);

        let c = ExperimentConfig::preset("exp-c").unwrap();
        assert_eq!(c.dither, DitherMode::None);
        assert_eq!(c.m_values(), ms);
        assert_eq!(c.fit_min_m, Some(ms[5]));

        let d = ExperimentConfig::preset("exp-d").unwrap();
        assert_eq!(d.m_values(), vec![2048]);
        assert_eq!(d.deltas.len(), 9);
        assert_eq!((d.deltas[0], d.deltas[8]), (0.125, 32.0));

        for p in PRESETS {
            ExperimentConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("exp-z").is_err());
    }

    #[test]
    fn sparse_grid_start() {
        // ⌈16·ln 128⌉ = ⌈77.63⌉
        assert_eq!(sparse_m_min(512, 4), 78);
    }

    #[test]
    fn text_round_trip() {
        for p in PRESETS {
            let cfg = ExperimentConfig::preset(p).unwrap();
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn parse_example_file() {
        let text = "# small sweep\nmatrix = partial-dct\nmodel = sparse  # Σ_k\nn = 64\nk = 2\n\
                    m = 16, 32, 64\ndelta = 1\ndither = off\ntrials = 3\nseed = 9\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Custom);
        assert_eq!(cfg.m_values(), vec![16, 32, 64]);
        assert_eq!(cfg.dither, DitherMode::None);
        assert_eq!((cfg.trials, cfg.seed), (3, 9));
    }

    #[test]
    fn parse_errors_are_actionable() {
        let base = "matrix = gaussian\nmodel = sparse\nn = 64\nk = 2\nm = 16\ndelta = 1\n";
        let err = |extra: &str| {
            ExperimentConfig::parse(&format!("{base}{extra}"))
                .unwrap_err()
                .to_string()
        };
        assert!(err("colour = red\n").contains("unknown key 'colour'"));
        assert!(err("n = 3\n").contains("given twice"));
        assert!(err("r = 3\n").contains("does not apply"));
        assert!(err("trials = many\n").contains("trials"));
        assert!(err("m_min = 3\n").contains("either 'm'"));
        assert!(ExperimentConfig::parse("matrix = gaussian\n")
            .unwrap_err()
            .to_string()
            .contains("model"));
        assert!(ExperimentConfig::parse(&base.replace("m = 16", "m = 65"))
            .unwrap_err()
            .to_string()
            .contains("1..=64"));
        assert!(ExperimentConfig::parse(&base.replace("delta = 1", "delta = 0")).is_err());
        assert!(ExperimentConfig::parse(&base.replace("delta = 1", "delta = 1, 1")).is_err());
        assert!(ExperimentConfig::parse(&base.replace("k = 2", "k = 0")).is_err());
        assert!(ExperimentConfig::parse("matrix gaussian\n")
            .unwrap_err()
            .to_string()
            .contains("key = value"));
        assert!(ExperimentConfig::parse(&base.replace("gaussian", "fourier")).is_err());
    }

    #[test]
    fn grid_rounding_and_dedup() {
        let g = MGrid::Range {
            min: 1,
            max: 4,
            points: 10,
            log: true,
        };
        assert_eq!(g.values(), vec![1, 2, 3, 4]);
        let g = MGrid::Range {
            min: 10,
            max: 50,
            points: 5,
            log: false,
        };
        assert_eq!(g.values(), vec![10, 20, 30, 40, 50]);
        assert_eq!(MGrid::List(vec![5, 3, 5]).values(), vec![3, 5]);
    }
}
