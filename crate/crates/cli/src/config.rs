//! Run configuration: one JSON or TOML file per run, with per-command
//! bodies. The keys `command`, `seed`, `threads` and `out` are shared by all
//! commands; everything else belongs to the command.

use clap::ValueEnum;
use gapforge::driver::{Disk, InitStrategy, KSpec, LatticeGrid, LatticeSpec, OptimizeConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

use crate::error::{invalid, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Bands,
    Optimize1d,
    Optimize2d,
    Sweep,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Optimize1d => "optimize1d",
            Command::Optimize2d => "optimize2d",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

/// Keys shared by every command.
const COMMON_KEYS: [&str; 4] = ["command", "seed", "threads", "out"];

/// A parsed configuration file before the command body is interpreted.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Command-specific keys.
    pub body: Map<String, Value>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, col)
}

fn is_toml(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("toml")
}

/// Parse a configuration from its text; TOML when the path ends in `.toml`,
/// JSON otherwise.
pub fn parse_config(path: &Path, text: &str) -> CliResult<ConfigFile> {
    let value: Value = if is_toml(path) {
        let t: toml::Table = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            CliError::Syntax {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        serde_json::to_value(t).map_err(|e| CliError::Invalid(e.to_string()))?
    } else {
        serde_json::from_str(text).map_err(|e| CliError::Syntax {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?
    };
    let Value::Object(mut body) = value else {
        return Err(CliError::Invalid(format!(
            "{}: top level must be a table/object",
            path.display()
        )));
    };
    let mut common = Map::new();
    for k in COMMON_KEYS {
        if let Some(v) = body.remove(k) {
            common.insert(k.to_string(), v);
        }
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Common {
        command: Option<Command>,
        seed: Option<u64>,
        threads: Option<usize>,
        out: Option<PathBuf>,
    }
    let c: Common = from_value(path, Value::Object(common))?;
    Ok(ConfigFile {
        path: path.to_path_buf(),
        command: c.command,
        seed: c.seed,
        threads: c.threads,
        out: c.out,
        body,
    })
}

pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(path, &text)
}

/// Deserialize with the dotted path of the failing field in the error. A
/// missing field is reported under its own name.
pub fn from_value<T: DeserializeOwned>(path: &Path, v: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let message = e.inner().to_string();
        let mut field = e.path().to_string();
        if let Some(name) = message
            .strip_prefix("missing field `")
            .and_then(|r| r.split('`').next())
        {
            field = if field == "." {
                name.to_string()
            } else {
                format!("{field}.{name}")
            };
        }
        CliError::Field {
            path: path.to_path_buf(),
            field,
            message,
        }
    })
}

impl ConfigFile {
    /// Directory against which relative paths in the file are resolved.
    pub fn base_dir(&self) -> PathBuf {
        self.path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir().join(p)
        }
    }

    pub fn parse_body<T: DeserializeOwned>(&self) -> CliResult<T> {
        from_value(&self.path, Value::Object(self.body.clone()))
    }
}

/// Where a fixed potential comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSource {
    Constant {
        value: f64,
    },
    /// `.csv` grid with its `.json` sidecar, or a `.json` step potential (1D).
    File {
        path: PathBuf,
    },
    /// 1D step potential on one period.
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// 2D zero disks (fractional centers, physical radii).
    Disks {
        disks: Vec<Disk>,
    },
    /// One of the optimizer's initial potentials.
    Init {
        strategy: InitStrategy,
        m: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for PotentialSource {
    fn default() -> Self {
        PotentialSource::Constant { value: 0.0 }
    }
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    /// The reported and highlighted gap lies between bands `m` and `m + 1`.
    pub m: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub lattice: Option<LatticeSpec>,
    /// Grid size; taken from the file for file potentials.
    pub n: Option<usize>,
    pub v_plus: Option<f64>,
    #[serde(default)]
    pub potential: PotentialSource,
    /// 2D sampling; defaults to the irreducible-zone path (closed for plotting).
    pub k_sampling: Option<KSpec>,
    /// 1D: samples on `[0, pi/X]`.
    pub k_points: Option<usize>,
    /// 1D period.
    pub period: Option<f64>,
    /// Number of bands; defaults to `m + 2`.
    pub bands: Option<usize>,
}

/// 1D initial potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Init1d {
    #[default]
    Cosine,
    /// Barrier of width `b` at the left end of the period.
    KronigPenney { b: f64 },
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// JSON step potential.
    File { path: PathBuf },
}

fn default_vp() -> f64 {
    100.0
}
fn default_period() -> f64 {
    1.0
}
fn default_iters_1d() -> usize {
    50
}
fn default_eps_1d() -> f64 {
    1e-6
}
fn default_grid_1d() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Optimize1dConfig {
    pub m: usize,
    #[serde(default = "default_vp")]
    pub v_plus: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default)]
    pub init: Init1d,
    #[serde(default = "default_iters_1d")]
    pub max_iters: usize,
    /// Stop when `{V = V+}` moves by less than `eps * period`.
    #[serde(default = "default_eps_1d")]
    pub eps: f64,
    /// Size of the sampled grid written next to the step potential.
    #[serde(default = "default_grid_1d")]
    pub n: usize,
    /// Tolerance of the sign conditions in the certificate.
    #[serde(default = "default_eps_1d")]
    pub certificate_tol: f64,
}

impl Optimize1dConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |s: String| Err(CliError::Invalid(s));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.v_plus.is_finite() && self.v_plus > 0.0) {
            return bad(format!("v_plus = {} must be positive", self.v_plus));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad(format!("period = {} must be positive", self.period));
        }
        if self.max_iters == 0 || self.n < 2 || !(self.eps > 0.0) || !(self.certificate_tol > 0.0) {
            return bad("max_iters, n, eps and certificate_tol must be positive".into());
        }
        Ok(())
    }
}

fn default_half_bz() -> usize {
    4
}

/// Sweep-specific keys; the remaining keys form an [`OptimizeConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SweepKind {
    Contrast {
        /// One curve per lattice.
        lattices: Vec<LatticeSpec>,
        v_plus_list: Vec<f64>,
    },
    Lattice {
        #[serde(default)]
        grid: LatticeGrid,
        #[serde(default = "default_half_bz")]
        half_bz_resolution: usize,
    },
}

const SWEEP_KEYS: [&str; 5] = [
    "kind",
    "lattices",
    "v_plus_list",
    "grid",
    "half_bz_resolution",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub sweep: SweepKind,
    pub base: OptimizeConfig,
}

impl ConfigFile {
    pub fn optimize2d(&self) -> CliResult<OptimizeConfig> {
        let mut cfg: OptimizeConfig = self.parse_body()?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(invalid)?;
        Ok(cfg)
    }

    pub fn sweep(&self) -> CliResult<SweepConfig> {
        let mut rest = self.body.clone();
        let mut own = Map::new();
        for k in SWEEP_KEYS {
            if let Some(v) = rest.remove(k) {
                own.insert(k.to_string(), v);
            }
        }
        if !own.contains_key("kind") {
            return Err(CliError::Field {
                path: self.path.clone(),
                field: "kind".into(),
                message: "missing field `kind` (\"contrast\" or \"lattice\")".into(),
            });
        }
        let sweep: SweepKind = from_value(&self.path, Value::Object(own))?;
        // Placeholders for the per-point values so the shared settings
        // parse as one optimizer configuration.
        if let SweepKind::Contrast {
            lattices,
            v_plus_list,
        } = &sweep
        {
            if v_plus_list.is_empty() {
                return Err(CliError::Invalid("v_plus_list is empty".into()));
            }
            if v_plus_list.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CliError::Invalid(
                    "v_plus_list must be strictly ascending".into(),
                ));
            }
            if lattices.is_empty() {
                return Err(CliError::Invalid("lattices is empty".into()));
            }
            for key in ["lattice", "v_plus"] {
                if rest.contains_key(key) {
                    return Err(CliError::Invalid(format!(
                        "`{key}` is set per point in a contrast sweep; use `lattices` and `v_plus_list`"
                    )));
                }
            }
            rest.insert(
                "lattice".into(),
                serde_json::to_value(lattices[0]).expect("serializable"),
            );
            rest.insert("v_plus".into(), v_plus_list[0].into());
        } else {
            if rest.contains_key("lattice") {
                return Err(CliError::Invalid("`lattice` is swept; remove it".into()));
            }
            rest.insert("lattice".into(), "square".into());
            if rest.contains_key("k_sampling") {
                return Err(CliError::Invalid(
                    "a lattice sweep samples half zones; set `half_bz_resolution` instead of `k_sampling`".into(),
                ));
            }
        }
        let mut base: OptimizeConfig = from_value(&self.path, Value::Object(rest))?;
        if let Some(s) = self.seed {
            base.seed = s;
        }
        match &sweep {
            SweepKind::Contrast {
                lattices,
                v_plus_list,
            } => {
                for l in lattices {
                    for &vp in v_plus_list {
                        OptimizeConfig {
                            lattice: *l,
                            v_plus: vp,
                            ..base.clone()
                        }
                        .validate()
                        .map_err(invalid)?;
                    }
                }
            }
            SweepKind::Lattice {
                grid,
                half_bz_resolution,
            } => {
                if grid.a_points == 0
                    || grid.b_points == 0
                    || !(grid.b_max >= grid.b_min && grid.b_min > 0.0)
                {
                    return Err(CliError::Invalid(format!("bad lattice grid {grid:?}")));
                }
                if *half_bz_resolution == 0 {
                    return Err(CliError::Invalid(
                        "half_bz_resolution must be positive".into(),
                    ));
                }
                base.validate().map_err(invalid)?;
            }
        }
        Ok(SweepConfig { sweep, base })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_syntax_error_has_position() {
        let e = parse_config(Path::new("x.json"), "{\n  \"m\": 1,\n  oops\n}").unwrap_err();
        match e {
            CliError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_syntax_error_has_position() {
        let e = parse_config(Path::new("x.toml"), "m = 1\nv_plus = = 3\n").unwrap_err();
        match e {
            CliError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn common_keys_are_split_off() {
        let c = parse_config(
            Path::new("x.toml"),
            "command = \"optimize2d\"\nseed = 3\nm = 1\nv_plus = 100.0\nlattice = \"square\"\nn = 16\n",
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::Optimize2d));
        assert_eq!(c.seed, Some(3));
        let o = c.optimize2d().unwrap();
        assert_eq!(o.seed, 3);
    }

    #[test]
    fn missing_and_nested_fields_are_named() {
        let c = parse_config(
            Path::new("x.json"),
            r#"{"v_plus": 100, "lattice": "square", "n": 16}"#,
        )
        .unwrap();
        match c.optimize2d().unwrap_err() {
            CliError::Field { field, .. } => assert_eq!(field, "m"),
            other => panic!("{other:?}"),
        }
        let c = parse_config(
            Path::new("x.json"),
            r#"{"m": 1, "v_plus": 100, "lattice": "square", "n": 16, "k_sampling": {"kind": "ibz-boundary", "points_per_sid": 3}}"#,
        )
        .unwrap();
        match c.optimize2d().unwrap_err() {
            CliError::Field { field, .. } => assert!(field.starts_with("k_sampling"), "{field}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contrast_sweep_needs_points() {
        let c = parse_config(
            Path::new("x.json"),
            r#"{"kind": "contrast", "m": 1, "n": 16, "lattices": ["square"], "v_plus_list": []}"#,
        )
        .unwrap();
        assert!(matches!(c.sweep().unwrap_err(), CliError::Invalid(_)));
    }
}
