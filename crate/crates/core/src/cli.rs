//! Command-line front end: configuration, the result cache and artifact
//! emission.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::families::{cascades_csv, family_cascade, max_relative_spread, UnimodalFamily};
use crate::hdim::{build_hierarchy, dim_estimate};
use crate::kneading::{CopyLabel, Word};
use crate::mandelplane::{
    feigenbaum_point, gap_csv, hairiness_series, max_iter_for, render_grid_with, zoom_mismatch, Sampling,
};
use crate::paramspace::{misiurewicz_cascade, orbit_scaling, real_window, sigma_real, tuned_cascade, SigmaOptions};
use crate::scalar::{ComplexScalar, Scalar};
use crate::series::SeriesConfig;
use crate::solver::{fixed_point, periodic_orbit, SolverConfig};
use crate::spectrum::{analyze_fixed_point_with, cocycle_expansion};

/// Part of every cache key.
pub const CODE_VERSION: &str = concat!("renormalab-", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";
pub const CACHE_DIR_ENV: &str = "RENORMALAB_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

const LOCK_NAME: &str = ".lock";
const LOCK_WAIT: Duration = Duration::from_secs(30);

/// Keys accepted in a TOML config file. All are optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "N")]
    pub truncation: Option<usize>,
    pub rho: Option<f64>,
    pub newton_tol: Option<f64>,
    pub kneading_depth: Option<usize>,
    pub drift_tol: Option<f64>,
    pub seed_depth: Option<usize>,
    pub letters: Option<Vec<String>>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub iter_factor: Option<usize>,
    pub sampling: Option<Sampling>,
}

const KNOWN_KEYS: &[&str] = &[
    "truncation",
    "N",
    "rho",
    "newton_tol",
    "kneading_depth",
    "drift_tol",
    "seed_depth",
    "letters",
    "output_dir",
    "cache_dir",
    "resolution",
    "iter_factor",
    "sampling",
];

impl ConfigFile {
    /// Fields set in `top` win.
    pub fn overlay(self, top: &ConfigFile) -> ConfigFile {
        let t = top.clone();
        ConfigFile {
            truncation: t.truncation.or(self.truncation),
            rho: t.rho.or(self.rho),
            newton_tol: t.newton_tol.or(self.newton_tol),
            kneading_depth: t.kneading_depth.or(self.kneading_depth),
            drift_tol: t.drift_tol.or(self.drift_tol),
            seed_depth: t.seed_depth.or(self.seed_depth),
            letters: t.letters.or(self.letters),
            output_dir: t.output_dir.or(self.output_dir),
            cache_dir: t.cache_dir.or(self.cache_dir),
            resolution: t.resolution.or(self.resolution),
            iter_factor: t.iter_factor.or(self.iter_factor),
            sampling: t.sampling.or(self.sampling),
        }
    }

    pub fn from_toml(text: &str) -> Result<ConfigFile> {
        let table: toml::Table = toml::from_str(text).map_err(|e| config_parse(text, &e))?;
        if let Some(k) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::UnknownKey(k.clone()));
        }
        toml::from_str(text).map_err(|e| config_parse(text, &e))
    }
}

fn config_parse(text: &str, e: &toml::de::Error) -> Error {
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::ConfigParse(format!("line {line}, column {column}: {}", e.message()))
        }
        None => Error::ConfigParse(e.message().to_string()),
    }
}

/// Inputs that determine the numbers a subcommand produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub truncation: usize,
    pub rho: f64,
    pub newton_tol: f64,
    pub kneading_depth: usize,
    pub drift_tol: f64,
    /// Renormalization rounds applied to cascade seeds.
    pub seed_depth: usize,
    pub letters: Vec<String>,
    pub resolution: usize,
    pub iter_factor: usize,
    pub sampling: Sampling,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            truncation: 30,
            rho: 2.5,
            newton_tol: 1e-10,
            kneading_depth: 40,
            drift_tol: 1e-3,
            seed_depth: 4,
            letters: vec!["2".into(), "3".into()],
            resolution: 512,
            iter_factor: 1,
            sampling: Sampling::PixelCenter,
        }
    }
}

impl Numerics {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            series: SeriesConfig::default().with_radius(self.rho),
            tol: self.newton_tol,
            ..SolverConfig::default()
        }
    }

    pub fn copy_labels(&self) -> Result<Vec<CopyLabel>> {
        self.letters.iter().map(|l| l.parse()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub numerics: Numerics,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub use_cache: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if n.truncation < 16 || n.truncation % 2 != 0 {
            return bad(format!("truncation {} must be even and >= 16", n.truncation));
        }
        for (name, v) in [("rho", n.rho), ("newton_tol", n.newton_tol), ("drift_tol", n.drift_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if n.kneading_depth == 0 || n.iter_factor == 0 {
            return bad("kneading_depth and iter_factor must be positive".into());
        }
        if n.resolution < 64 || !n.resolution.is_power_of_two() {
            return bad(format!("resolution {} must be a power of two >= 64", n.resolution));
        }
        n.copy_labels()?;
        Ok(())
    }
}

/// Defaults, then the file, then the cache directory from the environment,
/// then flags.
pub fn resolve_config(file: ConfigFile, flags: &ConfigFile, env_cache: Option<PathBuf>) -> Result<RunConfig> {
    let env = ConfigFile {
        cache_dir: env_cache,
        ..ConfigFile::default()
    };
    let c = file.overlay(&env).overlay(flags);
    let d = Numerics::default();
    let cfg = RunConfig {
        numerics: Numerics {
            truncation: c.truncation.unwrap_or(d.truncation),
            rho: c.rho.unwrap_or(d.rho),
            newton_tol: c.newton_tol.unwrap_or(d.newton_tol),
            kneading_depth: c.kneading_depth.unwrap_or(d.kneading_depth),
            drift_tol: c.drift_tol.unwrap_or(d.drift_tol),
            seed_depth: c.seed_depth.unwrap_or(d.seed_depth),
            letters: c.letters.unwrap_or(d.letters),
            resolution: c.resolution.unwrap_or(d.resolution),
            iter_factor: c.iter_factor.unwrap_or(d.iter_factor),
            sampling: c.sampling.unwrap_or(d.sampling),
        },
        output_dir: c.output_dir.unwrap_or_else(|| PathBuf::from("renormalab-out")),
        cache_dir: c.cache_dir.unwrap_or_else(|| PathBuf::from(".renormalab-cache")),
        use_cache: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the optional TOML file and applies `RENORMALAB_CACHE_DIR` and flags.
pub fn parse_config(path: Option<&Path>, flags: &ConfigFile) -> Result<RunConfig> {
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ConfigFile::from_toml(&text)?
        }
        None => ConfigFile::default(),
    };
    resolve_config(file, flags, std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
}

fn parse_sampling(s: &str) -> std::result::Result<Sampling, String> {
    match s {
        "pixel-center" => Ok(Sampling::PixelCenter),
        "distance-estimate" => Ok(Sampling::DistanceEstimate),
        _ => Err(format!("unknown sampling `{s}` (pixel-center, distance-estimate)")),
    }
}

#[derive(Parser, Debug)]
#[command(name = "renormalab", version, about = "Renormalization experiments for real quadratic-like maps")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Truncation degree N, even and >= 16 [default: 30]
    #[arg(long = "N", visible_alias = "truncation", global = true)]
    pub truncation: Option<usize>,
    /// Trust radius rho of normalized germs [default: 2.5]
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Sup-norm residual required of Newton solutions [default: 1e-10]
    #[arg(long, global = true)]
    pub newton_tol: Option<f64>,
    /// Kneading symbols compared by the straightening map [default: 40]
    #[arg(long, global = true)]
    pub kneading_depth: Option<usize>,
    /// Largest eigenvalue drift across truncations N-8, N, N+8 [default: 1e-3]
    #[arg(long, global = true)]
    pub drift_tol: Option<f64>,
    /// Renormalization rounds applied to cascade seeds [default: 4]
    #[arg(long, global = true)]
    pub seed_depth: Option<usize>,
    /// Letters of the combinatorial family, comma separated [default: 2,3]
    #[arg(long, value_delimiter = ',', global = true)]
    pub letters: Option<Vec<String>>,
    /// Artifact directory [default: renormalab-out]
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Cache directory; RENORMALAB_CACHE_DIR overrides the config file [default: .renormalab-cache]
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Image resolution, a power of two >= 64 [default: 512]
    #[arg(long = "res", global = true)]
    pub resolution: Option<usize>,
    /// Multiplier of the 1000 eps^-1/2 iteration budget [default: 1]
    #[arg(long, global = true)]
    pub iter_factor: Option<usize>,
    /// Pixel classification: pixel-center or distance-estimate [default: pixel-center]
    #[arg(long, value_parser = parse_sampling, global = true)]
    pub sampling: Option<Sampling>,
    /// Neither read nor write the cache
    #[arg(long, global = true)]
    pub no_cache: bool,
}

impl GlobalArgs {
    pub fn overrides(&self) -> ConfigFile {
        ConfigFile {
            truncation: self.truncation,
            rho: self.rho,
            newton_tol: self.newton_tol,
            kneading_depth: self.kneading_depth,
            drift_tol: self.drift_tol,
            seed_depth: self.seed_depth,
            letters: self.letters.clone(),
            output_dir: self.output_dir.clone(),
            cache_dir: self.cache_dir.clone(),
            resolution: self.resolution,
            iter_factor: self.iter_factor,
            sampling: self.sampling,
        }
    }
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Fixed point of renormalization for a stationary word
    FixedPoint(WordArgs),
    /// Spectrum of the linearized operator at a fixed point
    Spectrum(WordArgs),
    /// Superstable parameters along a tuning cascade
    Cascade(CascadeArgs),
    /// Cascades of several unimodal families
    Universality(UniversalityArgs),
    /// Parameter windows of tuned copies
    Windows(WindowsArgs),
    /// Iterates of the straightening map on the real line
    Sigma(SigmaArgs),
    /// Misiurewicz-type parameters accumulating at -2
    Misiurewicz(MisiurewiczArgs),
    /// Gap statistic r(eps) on a zoom sequence
    Hairiness(HairinessArgs),
    /// One membership image
    Zoom(ZoomArgs),
    /// Mismatch between windows of half-width eps and eps/lambda
    Selfsim(SelfsimArgs),
    /// Dimension estimate of the real combinatorial Cantor set
    Hdim(HdimArgs),
    /// Periodic orbits of renormalization over the letters
    Horseshoe(HorseshoeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FixedPoint(_) => "fixed-point",
            Command::Spectrum(_) => "spectrum",
            Command::Cascade(_) => "cascade",
            Command::Universality(_) => "universality",
            Command::Windows(_) => "windows",
            Command::Sigma(_) => "sigma",
            Command::Misiurewicz(_) => "misiurewicz",
            Command::Hairiness(_) => "hairiness",
            Command::Zoom(_) => "zoom",
            Command::Selfsim(_) => "selfsim",
            Command::Hdim(_) => "hdim",
            Command::Horseshoe(_) => "horseshoe",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WordArgs {
    /// Comma-separated copy labels, e.g. 2 or 3 or 2,3
    #[arg(long, default_value = "2")]
    pub word: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CascadeArgs {
    #[arg(long, default_value = "doubling")]
    pub letter: String,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct UniversalityArgs {
    #[arg(long, default_value = "doubling")]
    pub letter: String,
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "quadratic,logistic,sine")]
    pub families: Vec<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WindowsArgs {
    /// Repeatable
    #[arg(long = "word", default_values = ["2", "3"])]
    pub words: Vec<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SigmaArgs {
    #[arg(long, default_value = "doubling")]
    pub letter: String,
    /// Starting parameter
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MisiurewiczArgs {
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HairinessArgs {
    /// `feigenbaum` or `re,im`
    #[arg(long, default_value = "feigenbaum", allow_hyphen_values = true)]
    pub center: String,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ZoomArgs {
    /// `feigenbaum` or `re,im`
    #[arg(long, default_value = "feigenbaum", allow_hyphen_values = true)]
    pub center: String,
    /// Half-width of the window
    #[arg(long, default_value_t = 1e-3)]
    pub scale: f64,
    /// Defaults to iter_factor * 1000 scale^-1/2
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelfsimArgs {
    /// `feigenbaum` or `re,im`
    #[arg(long, default_value = "feigenbaum", allow_hyphen_values = true)]
    pub center: String,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
    /// Zoom factor; defaults to the doubling cascade's delta at the Feigenbaum point
    #[arg(long)]
    pub lambda: Option<String>,
    /// Extra iteration budget of the inner window
    #[arg(long, default_value_t = 2)]
    pub inner_iter_factor: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HdimArgs {
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HorseshoeArgs {
    /// Word length; words are taken up to rotation and constant words are skipped
    #[arg(long, default_value_t = 2)]
    pub length: usize,
}

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &str, text: String) -> Artifact {
        Artifact {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }

    pub fn json<T: Serialize + ?Sized>(name: &str, value: &T) -> Result<Artifact> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        Ok(Artifact::text(name, s))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of the operation, its canonical inputs and [`CODE_VERSION`].
pub fn cache_key(operation: &str, inputs: &Value) -> String {
    let canonical = json!({
        "code_version": CODE_VERSION,
        "operation": operation,
        "inputs": inputs,
    });
    sha256_hex(&serde_json::to_vec(&canonical).unwrap())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedFile {
    pub name: String,
    pub sha256: String,
    /// `utf8` or `hex`.
    pub encoding: String,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub operation: String,
    pub code_version: String,
    pub created_at: u64,
    pub payload: Vec<CachedFile>,
}

impl CacheEntry {
    fn artifacts(&self) -> Option<Vec<Artifact>> {
        self.payload
            .iter()
            .map(|f| {
                let bytes = match f.encoding.as_str() {
                    "utf8" => f.content.clone().into_bytes(),
                    "hex" => hex::decode(&f.content).ok()?,
                    _ => return None,
                };
                (sha256_hex(&bytes) == f.sha256).then(|| Artifact {
                    name: f.name.clone(),
                    bytes,
                })
            })
            .collect()
    }
}

pub struct Cache {
    pub dir: PathBuf,
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// The stored artifacts, if an intact entry exists for `key`.
    pub fn load(&self, key: &str) -> Option<Vec<Artifact>> {
        let text = fs::read_to_string(self.entry_path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        if entry.key != key || entry.code_version != CODE_VERSION {
            return None;
        }
        entry.artifacts()
    }

    fn lock(&self) -> Result<LockGuard> {
        let path = self.dir.join(LOCK_NAME);
        let start = Instant::now();
        loop {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(LockGuard(path));
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && start.elapsed() < LOCK_WAIT => {
                    thread::sleep(Duration::from_millis(25));
                }
                Err(e) => return Err(Error::io(&path, e)),
            }
        }
    }

    pub fn store(&self, key: &str, operation: &str, artifacts: &[Artifact]) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let payload = artifacts
            .iter()
            .map(|a| {
                let (encoding, content) = match std::str::from_utf8(&a.bytes) {
                    Ok(s) => ("utf8", s.to_string()),
                    Err(_) => ("hex", hex::encode(&a.bytes)),
                };
                CachedFile {
                    name: a.name.clone(),
                    sha256: sha256_hex(&a.bytes),
                    encoding: encoding.into(),
                    content,
                }
            })
            .collect();
        let entry = CacheEntry {
            key: key.into(),
            operation: operation.into(),
            code_version: CODE_VERSION.into(),
            created_at: unix_seconds(),
            payload,
        };
        let _guard = self.lock()?;
        write_atomic(&self.entry_path(key), serde_json::to_string(&entry)?.as_bytes())
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub compute_seconds: f64,
    pub write_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub subcommand: String,
    pub cache_key: Option<String>,
    pub cache_hit: bool,
    pub config: Value,
    pub files: Vec<FileRecord>,
    /// Set when earlier contents of the output directory were moved aside.
    pub previous: Option<String>,
    pub wall_times: WallTimes,
}

impl Manifest {
    pub fn new(subcommand: &str, config: Value) -> Manifest {
        Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            code_version: CODE_VERSION.into(),
            subcommand: subcommand.into(),
            cache_key: None,
            cache_hit: false,
            config,
            files: Vec::new(),
            previous: None,
            wall_times: WallTimes::default(),
        }
    }
}

/// Moves everything except earlier `previous-*` folders into a fresh
/// `previous-<unix seconds>` folder.
fn preserve_previous(dir: &Path) -> Result<Option<String>> {
    let io = |e| Error::io(dir, e);
    let existing: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .filter(|e| !e.file_name().to_string_lossy().starts_with("previous-"))
        .collect();
    if existing.is_empty() {
        return Ok(None);
    }
    let stamp = unix_seconds();
    let mut name = format!("previous-{stamp}");
    let mut k = 1;
    while dir.join(&name).exists() {
        name = format!("previous-{stamp}-{k}");
        k += 1;
    }
    let target = dir.join(&name);
    fs::create_dir(&target).map_err(|e| Error::io(&target, e))?;
    for e in existing {
        let to = target.join(e.file_name());
        fs::rename(e.path(), &to).map_err(|err| Error::io(&to, err))?;
    }
    Ok(Some(name))
}

/// Writes every artifact atomically, then `manifest.json`. Earlier contents
/// of `output_dir` are preserved under `previous-<timestamp>/`.
pub fn write_artifacts(artifacts: &[Artifact], output_dir: &Path, mut manifest: Manifest) -> Result<Manifest> {
    let start = Instant::now();
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    manifest.previous = preserve_previous(output_dir)?;
    manifest.files.clear();
    for a in artifacts {
        if a.name == MANIFEST_NAME || a.name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("bad artifact name {}", a.name)));
        }
        write_atomic(&output_dir.join(&a.name), &a.bytes)?;
        manifest.files.push(FileRecord {
            path: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len() as u64,
        });
    }
    manifest.wall_times.write_seconds = start.elapsed().as_secs_f64();
    manifest.wall_times.total_seconds = manifest.wall_times.compute_seconds + manifest.wall_times.write_seconds;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&output_dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}

/// `feigenbaum` or `re[,im]`.
pub fn parse_center(s: &str) -> Result<ComplexScalar> {
    if s.eq_ignore_ascii_case("feigenbaum") {
        return Ok(feigenbaum_point());
    }
    let mut parts = s.split(',');
    let re: Scalar = parts.next().unwrap_or("").parse()?;
    let im: Scalar = match parts.next() {
        Some(t) => t.parse()?,
        None => Scalar::ZERO,
    };
    if parts.next().is_some() {
        return Err(Error::Parse(format!("center `{s}` has more than two parts")));
    }
    Ok(ComplexScalar::new(re, im))
}

/// Lexicographically least rotations of all non-constant words of `length`
/// letters (all letters when `length == 1`).
pub fn necklaces(letters: &[CopyLabel], length: usize) -> Vec<Word> {
    let k = letters.len();
    let mut out = Vec::new();
    if k == 0 || length == 0 {
        return out;
    }
    let total = k.pow(length as u32);
    for code in 0..total {
        let digits: Vec<usize> = (0..length).map(|i| code / k.pow((length - 1 - i) as u32) % k).collect();
        let least = (0..length)
            .map(|r| digits[r..].iter().chain(&digits[..r]).copied().collect::<Vec<_>>())
            .min()
            .unwrap();
        let constant = digits.iter().all(|&d| d == digits[0]);
        if least == digits && (length == 1 || !constant) {
            out.push(Word(digits.iter().map(|&d| letters[d].clone()).collect()));
        }
    }
    out
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Runs the numerics of one subcommand.
pub fn compute(command: &Command, n: &Numerics) -> Result<Vec<Artifact>> {
    let cfg = n.solver();
    match command {
        Command::FixedPoint(a) => {
            let word: Word = a.word.parse()?;
            let fp = fixed_point(&word, n.truncation, n.seed_depth, &cfg)?;
            let mut csv = String::from("k,a_k\n");
            for (k, c) in fp.germ.coeffs().iter().enumerate() {
                csv.push_str(&csv_line(&[k.to_string(), c.to_decimal(34)]));
            }
            Ok(vec![Artifact::json("fixed_point.json", &fp)?, Artifact::text("coefficients.csv", csv)])
        }
        Command::Spectrum(a) => {
            let word: Word = a.word.parse()?;
            let (fp, report) = analyze_fixed_point_with(&word, n.truncation, n.seed_depth, &cfg, n.drift_tol)?;
            let doc = json!({
                "word": word.to_string(),
                "truncation": n.truncation,
                "fixed_point_residual": fp.residual,
                "scaling": fp.lambda,
                "report": report,
            });
            Ok(vec![Artifact::json("spectrum.json", &doc)?, Artifact::text("eigenvalues.csv", report.to_csv())])
        }
        Command::Cascade(a) => {
            let letter: CopyLabel = a.letter.parse()?;
            let table = tuned_cascade(&letter, a.n_max)?;
            let alpha = orbit_scaling(&letter, &table).ok().map(|o| o.alpha_extrapolated);
            let summary = json!({
                "letter": letter.to_string(),
                "n_max": a.n_max,
                "delta_extrapolated": table.delta_extrapolated,
                "c_limit": table.c_limit,
                "alpha_extrapolated": alpha,
            });
            Ok(vec![Artifact::text("cascade.csv", table.to_csv()), Artifact::json("cascade_summary.json", &summary)?])
        }
        Command::Universality(a) => {
            let letter: CopyLabel = a.letter.parse()?;
            let cascades = a
                .families
                .iter()
                .map(|f| family_cascade(&f.parse::<UnimodalFamily>()?, &letter, a.n_max))
                .collect::<Result<Vec<_>>>()?;
            let deltas: serde_json::Map<String, Value> = cascades
                .iter()
                .map(|c| (c.family.clone(), json!({"delta": c.report.delta_estimate, "mu_limit": c.report.mu_limit, "fit_residual": c.report.fit_residual})))
                .collect();
            let summary = json!({
                "letter": letter.to_string(),
                "n_max": a.n_max,
                "families": deltas,
                "max_relative_spread": max_relative_spread(&cascades),
            });
            Ok(vec![
                Artifact::text("universality.csv", cascades_csv(&cascades)),
                Artifact::json("universality_summary.json", &summary)?,
            ])
        }
        Command::Windows(a) => {
            let windows = a
                .words
                .iter()
                .map(|w| real_window(&w.parse()?))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![Artifact::json("windows.json", &windows)?])
        }
        Command::Sigma(a) => {
            let letter: CopyLabel = a.letter.parse()?;
            let opts = SigmaOptions {
                depth: n.kneading_depth,
                ..SigmaOptions::default()
            };
            let mut c: Scalar = a.c.parse()?;
            let mut csv = String::from("step,c\n");
            csv.push_str(&csv_line(&["0".into(), c.to_decimal(34)]));
            for step in 1..=a.steps {
                c = sigma_real(c, &letter, &opts)?;
                csv.push_str(&csv_line(&[step.to_string(), c.to_decimal(34)]));
            }
            Ok(vec![Artifact::text("sigma.csv", csv)])
        }
        Command::Misiurewicz(a) => {
            let rows = misiurewicz_cascade(a.n_max)?;
            let mut csv = String::from("n,c_n,scaled,ratio\n");
            for r in &rows {
                csv.push_str(&csv_line(&[
                    r.n.to_string(),
                    r.c.to_decimal(34),
                    r.scaled.to_decimal(17),
                    r.ratio.map(|x| x.to_decimal(17)).unwrap_or_default(),
                ]));
            }
            Ok(vec![Artifact::text("misiurewicz.csv", csv)])
        }
        Command::Hairiness(a) => {
            let center = parse_center(&a.center)?;
            let reports = hairiness_series(center, &a.eps, n.resolution, n.iter_factor, n.sampling)?;
            Ok(vec![Artifact::text("hairiness.csv", gap_csv(&reports)), Artifact::json("hairiness.json", &reports)?])
        }
        Command::Zoom(a) => {
            let center = parse_center(&a.center)?;
            let max_iter = a.max_iter.unwrap_or_else(|| max_iter_for(a.scale) * n.iter_factor);
            let grid = render_grid_with(center, Scalar::from_f64(a.scale), n.resolution, max_iter, n.sampling)?;
            let meta = json!({
                "center": [grid.center[0], grid.center[1]],
                "scale": grid.scale,
                "resolution": grid.resolution,
                "max_iter": grid.max_iter,
                "sampling": grid.sampling,
                "member_count": grid.member_count(),
            });
            Ok(vec![
                Artifact {
                    name: "zoom.pgm".into(),
                    bytes: grid.to_pgm(),
                },
                Artifact::json("zoom.json", &meta)?,
            ])
        }
        Command::Selfsim(a) => {
            let center = parse_center(&a.center)?;
            let lambda = match (&a.lambda, a.center.eq_ignore_ascii_case("feigenbaum")) {
                (Some(l), _) => l.parse()?,
                (None, true) => tuned_cascade(&CopyLabel::doubling(), 12)?
                    .delta_extrapolated
                    .ok_or_else(|| Error::PrecisionExhausted("no cascade delta".into()))?,
                (None, false) => return Err(Error::InvalidArgument("--lambda is required away from the Feigenbaum point".into())),
            };
            let mut csv = String::from("epsilon,lambda,mismatch\n");
            for &eps in &a.eps {
                let m = zoom_mismatch(center, eps, lambda, n.resolution, n.iter_factor, a.inner_iter_factor, n.sampling)?;
                csv.push_str(&csv_line(&[format!("{eps:e}"), lambda.to_decimal(17), m.to_decimal(17)]));
            }
            Ok(vec![Artifact::text("selfsim.csv", csv)])
        }
        Command::Hdim(a) => {
            let letters = n.copy_labels()?;
            let tree = build_hierarchy(&letters, a.depth)?;
            let report = dim_estimate(&tree)?;
            Ok(vec![
                Artifact::text("hdim_tree.json", tree.to_json()? + "\n"),
                Artifact::text("hdim.csv", report.to_csv()),
                Artifact::json("hdim_summary.json", &report)?,
            ])
        }
        Command::Horseshoe(a) => {
            let letters = n.copy_labels()?;
            let fixed = letters
                .iter()
                .map(|l| fixed_point(&Word::single(l.clone()), n.truncation, n.seed_depth, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let depth = (n.seed_depth / a.length.max(1)).max(1);
            let mut csv = String::from("word,shift_consistency,cocycle_expansion,min_fixed_point_distance\n");
            let mut cycles = Vec::new();
            let mut rows = Vec::new();
            for word in necklaces(&letters, a.length) {
                let cycle = periodic_orbit(&word, n.truncation, depth, &cfg)?;
                let expansion = cocycle_expansion(&cycle, &cfg)?;
                let distances = fixed
                    .iter()
                    .map(|fp| cycle.distance_to(std::slice::from_ref(&fp.germ), &cfg))
                    .collect::<Result<Vec<_>>>()?;
                let nearest = distances.iter().copied().fold(Scalar::from_f64(f64::INFINITY), Scalar::min);
                csv.push_str(&csv_line(&[
                    format!("\"{word}\""),
                    cycle.shift_consistency.to_decimal(6),
                    expansion.to_decimal(17),
                    nearest.to_decimal(6),
                ]));
                rows.push(json!({
                    "word": word.to_string(),
                    "shift_consistency": cycle.shift_consistency,
                    "cocycle_expansion": expansion,
                    "fixed_point_distances": distances,
                    "residuals": cycle.residuals,
                    "lambdas": cycle.lambdas,
                }));
                cycles.push(cycle);
            }
            let summary = json!({
                "letters": n.letters,
                "length": a.length,
                "fixed_points": fixed.iter().map(|f| json!({"word": f.word.to_string(), "scaling": f.lambda, "residual": f.residual})).collect::<Vec<_>>(),
                "cycles": rows,
            });
            Ok(vec![
                Artifact::text("horseshoe.csv", csv),
                Artifact::json("horseshoe.json", &summary)?,
                Artifact::json("horseshoe_cycles.json", &cycles)?,
            ])
        }
    }
}

/// Resolves the config, serves or computes the artifacts and writes them.
pub fn execute(cli: &Cli) -> Result<Manifest> {
    let mut cfg = parse_config(cli.global.config.as_deref(), &cli.global.overrides())?;
    cfg.use_cache = !cli.global.no_cache;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let op = cli.command.name();
    let args = serde_json::to_value(&cli.command)?;
    let key = cache_key(op, &json!({"args": args, "numerics": cfg.numerics}));
    let cache = Cache::new(&cfg.cache_dir);
    let start = Instant::now();
    let cached = if cfg.use_cache { cache.load(&key) } else { None };
    let cache_hit = cached.is_some();
    let artifacts = match cached {
        Some(a) => a,
        None => {
            let a = compute(&cli.command, &cfg.numerics)?;
            if cfg.use_cache {
                if let Err(e) = cache.store(&key, op, &a) {
                    eprintln!("warning: result not cached: {e}");
                }
            }
            a
        }
    };
    let mut manifest = Manifest::new(op, json!({"run": cfg, "args": args}));
    manifest.cache_key = Some(key);
    manifest.cache_hit = cache_hit;
    manifest.wall_times.compute_seconds = start.elapsed().as_secs_f64();
    write_artifacts(&artifacts, &cfg.output_dir, manifest)
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_USAGE
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(m) => {
            println!(
                "{}: {} file(s){}",
                m.subcommand,
                m.files.len(),
                if m.cache_hit { " (cached)" } else { "" }
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
