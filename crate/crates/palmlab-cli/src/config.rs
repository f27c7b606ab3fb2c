//! JSON experiment configuration.
//!
//! Configs are read into a `serde_json::Value` and walked with JSON
//! pointers, so every validation error names the exact field it refers to
//! (`/noise/sigma: must be positive`).  Parsing is strict about types and
//! domains but tolerant of extra fields.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use palmlab::decoding::Decoder;
use palmlab::montecarlo::Mode;
use palmlab::noise::NoiseModel;
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    /// A config field is missing, has the wrong type, or an invalid value.
    /// `pointer` is the JSON pointer of the offending field.
    Config { pointer: String, message: String },
    Io { path: PathBuf, message: String },
    /// A computation failed after validation; `row` identifies the sweep
    /// point when one is to blame.
    Runtime { row: Option<usize>, message: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { pointer, message } if pointer.is_empty() => {
                write!(f, "config: {message}")
            }
            CliError::Config { pointer, message } => write!(f, "config {pointer}: {message}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Runtime { row: Some(i), message } => {
                write!(f, "row {i}: {message}")
            }
            CliError::Runtime { row: None, message } => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Process exit code: config problems are distinguished from
    /// computation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

fn bad(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

pub fn load_config(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| bad("", format!("malformed JSON: {e}")))
}

fn require<'a>(root: &'a Value, pointer: &str) -> Result<&'a Value, CliError> {
    root.pointer(pointer)
        .ok_or_else(|| bad(pointer, "required field is missing"))
}

pub fn req_f64(root: &Value, pointer: &str) -> Result<f64, CliError> {
    require(root, pointer)?
        .as_f64()
        .ok_or_else(|| bad(pointer, "expected a number"))
}

pub fn opt_f64(root: &Value, pointer: &str) -> Result<Option<f64>, CliError> {
    match root.pointer(pointer) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| bad(pointer, "expected a number")),
    }
}

pub fn req_u64(root: &Value, pointer: &str) -> Result<u64, CliError> {
    require(root, pointer)?
        .as_u64()
        .ok_or_else(|| bad(pointer, "expected a non-negative integer"))
}

pub fn opt_u64(root: &Value, pointer: &str) -> Result<Option<u64>, CliError> {
    match root.pointer(pointer) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| bad(pointer, "expected a non-negative integer")),
    }
}

fn req_str<'a>(root: &'a Value, pointer: &str) -> Result<&'a str, CliError> {
    require(root, pointer)?
        .as_str()
        .ok_or_else(|| bad(pointer, "expected a string"))
}

fn positive(root: &Value, pointer: &str) -> Result<f64, CliError> {
    let x = req_f64(root, pointer)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(pointer, "must be positive"))
    }
}

/// Parse the noise model rooted at `ptr` (normally `/noise`, but also
/// `/decoder/design` for mismatched decoding).
pub fn parse_noise(root: &Value, ptr: &str) -> Result<NoiseModel, CliError> {
    let kind_ptr = format!("{ptr}/kind");
    let kind = req_str(root, &kind_ptr)?;
    let built = match kind {
        "wgn" => NoiseModel::white_gaussian(positive(root, &format!("{ptr}/sigma"))?),
        "symexp" => NoiseModel::white_sym_exp(positive(root, &format!("{ptr}/sigma"))?),
        "uniform" => NoiseModel::white_uniform(positive(root, &format!("{ptr}/sigma"))?),
        "cgn-ar1" => {
            let a = req_f64(root, &format!("{ptr}/a"))?;
            let sigma_eps = positive(root, &format!("{ptr}/sigma_eps"))?;
            let max_n = opt_u64(root, &format!("{ptr}/max_n"))?.unwrap_or(512) as usize;
            NoiseModel::colored_ar1(a, sigma_eps, max_n)
        }
        "markov-ar1" => {
            let a = req_f64(root, &format!("{ptr}/a"))?;
            let sigma_eps = positive(root, &format!("{ptr}/sigma_eps"))?;
            NoiseModel::markov_gaussian(a, sigma_eps)
        }
        other => {
            return Err(bad(
                &kind_ptr,
                format!(
                    "unknown noise kind '{other}' \
                     (expected wgn, symexp, uniform, cgn-ar1, or markov-ar1)"
                ),
            ))
        }
    };
    built.map_err(|e| bad(ptr, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodebookSpec {
    Poisson,
    Matern { epsilon: f64, r_excl: Option<f64> },
    Grid,
}

/// Parse `/codebook`; absent means Poisson.
pub fn parse_codebook(root: &Value) -> Result<CodebookSpec, CliError> {
    if root.pointer("/codebook").is_none() {
        return Ok(CodebookSpec::Poisson);
    }
    match req_str(root, "/codebook/kind")? {
        "poisson" => Ok(CodebookSpec::Poisson),
        "matern" => {
            let epsilon = opt_f64(root, "/codebook/epsilon")?.unwrap_or(0.0);
            if !(epsilon >= 0.0) || !epsilon.is_finite() {
                return Err(bad("/codebook/epsilon", "must be finite and >= 0"));
            }
            let r_excl = match opt_f64(root, "/codebook/r_excl")? {
                Some(r) if r > 0.0 && r.is_finite() => Some(r),
                Some(_) => return Err(bad("/codebook/r_excl", "must be positive")),
                None => None,
            };
            Ok(CodebookSpec::Matern { epsilon, r_excl })
        }
        "grid" => Ok(CodebookSpec::Grid),
        other => Err(bad(
            "/codebook/kind",
            format!("unknown codebook '{other}' (expected poisson, matern, or grid)"),
        )),
    }
}

/// Parse `/decoder`; absent means maximum likelihood.
pub fn parse_decoder(root: &Value) -> Result<Decoder, CliError> {
    if root.pointer("/decoder").is_none() {
        return Ok(Decoder::Mle);
    }
    match req_str(root, "/decoder/kind")? {
        "mle" => Ok(Decoder::Mle),
        "typicality" => {
            let delta = req_f64(root, "/decoder/delta")?;
            if !(delta > 0.0) || !delta.is_finite() {
                return Err(bad("/decoder/delta", "must be positive"));
            }
            Ok(Decoder::Typicality { delta })
        }
        "mismatched" => {
            let design = parse_noise(root, "/decoder/design")?;
            Ok(Decoder::Mismatched { design })
        }
        other => Err(bad(
            "/decoder/kind",
            format!("unknown decoder '{other}' (expected mle, typicality, or mismatched)"),
        )),
    }
}

/// The one swept axis of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Alpha(Vec<f64>),
    N(Vec<usize>),
}

/// Parse `/sweep`, enforcing exactly one axis.
pub fn parse_sweep(root: &Value) -> Result<Sweep, CliError> {
    let alpha = root.pointer("/sweep/alpha_list");
    let n = root.pointer("/sweep/n_list");
    match (alpha, n) {
        (Some(_), Some(_)) => Err(bad(
            "/sweep",
            "exactly one of alpha_list and n_list may be given",
        )),
        (None, None) => Err(bad("/sweep", "one of alpha_list or n_list is required")),
        (Some(list), None) => {
            let arr = list
                .as_array()
                .ok_or_else(|| bad("/sweep/alpha_list", "expected an array of numbers"))?;
            let mut out = Vec::with_capacity(arr.len());
            for (i, v) in arr.iter().enumerate() {
                let ptr = format!("/sweep/alpha_list/{i}");
                let a = v.as_f64().ok_or_else(|| bad(&ptr, "expected a number"))?;
                if !a.is_finite() || a <= 0.0 {
                    return Err(bad(&ptr, "must be finite and positive"));
                }
                out.push(a);
            }
            if out.is_empty() {
                return Err(bad("/sweep/alpha_list", "must not be empty"));
            }
            Ok(Sweep::Alpha(out))
        }
        (None, Some(list)) => {
            let arr = list
                .as_array()
                .ok_or_else(|| bad("/sweep/n_list", "expected an array of integers"))?;
            let mut out = Vec::with_capacity(arr.len());
            for (i, v) in arr.iter().enumerate() {
                let ptr = format!("/sweep/n_list/{i}");
                let n = v.as_u64().ok_or_else(|| bad(&ptr, "expected an integer"))?;
                if n == 0 {
                    return Err(bad(&ptr, "must be at least 1"));
                }
                out.push(n as usize);
            }
            if out.is_empty() {
                return Err(bad("/sweep/n_list", "must not be empty"));
            }
            Ok(Sweep::N(out))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McSpec {
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
}

/// Parse `/mc`.  `seed_override` (the `--seed` flag) wins over the config.
pub fn parse_mc(root: &Value, seed_override: Option<u64>) -> Result<McSpec, CliError> {
    let trials = req_u64(root, "/mc/trials")?;
    if trials == 0 {
        return Err(bad("/mc/trials", "must be at least 1"));
    }
    let seed = match seed_override {
        Some(s) => s,
        None => opt_u64(root, "/mc/seed")?.unwrap_or(0),
    };
    let mode = match root.pointer("/mc/mode") {
        None => Mode::Reduced,
        Some(v) => match v.as_str() {
            Some("explicit") => Mode::Explicit,
            Some("reduced") => Mode::Reduced,
            _ => return Err(bad("/mc/mode", "expected \"explicit\" or \"reduced\"")),
        },
    };
    // Batch size is part of the reproducibility contract: results are
    // bit-identical across thread counts only because batches are fixed.
    if let Some(b) = opt_u64(root, "/mc/batch_size")? {
        if b != 1024 {
            return Err(bad(
                "/mc/batch_size",
                "batch size is fixed at 1024 for reproducibility",
            ));
        }
    }
    Ok(McSpec { trials, seed, mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Resolve the output file path and format: `--out` wins over
/// `/output/path`; format defaults to CSV.
pub fn parse_output(
    root: &Value,
    out_flag: Option<&Path>,
) -> Result<(PathBuf, OutputFormat), CliError> {
    let path = match out_flag {
        Some(p) => p.to_path_buf(),
        None => match root.pointer("/output/path") {
            Some(v) => PathBuf::from(
                v.as_str()
                    .ok_or_else(|| bad("/output/path", "expected a string"))?,
            ),
            None => {
                return Err(bad(
                    "/output/path",
                    "output path required: set it here or pass --out",
                ))
            }
        },
    };
    let format = match root.pointer("/output/format") {
        None => OutputFormat::Csv,
        Some(v) => match v.as_str() {
            Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            _ => return Err(bad("/output/format", "expected \"csv\" or \"json\"")),
        },
    };
    Ok((path, format))
}

/// Signal power for the power-constrained channel commands: `/power` or
/// `/amplitude` (power = amplitude squared), exactly one.
pub fn parse_power(root: &Value) -> Result<(f64, f64, &'static str), CliError> {
    match (root.pointer("/power"), root.pointer("/amplitude")) {
        (Some(_), Some(_)) => Err(bad("", "give only one of /power and /amplitude")),
        (Some(_), None) => {
            let p = positive(root, "/power")?;
            Ok((p, p, "P"))
        }
        (None, Some(_)) => {
            let a = positive(root, "/amplitude")?;
            Ok((a * a, a, "A"))
        }
        (None, None) => Err(bad("", "one of /power or /amplitude is required")),
    }
}
