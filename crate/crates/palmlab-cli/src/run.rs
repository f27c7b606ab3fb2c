//! Subcommand implementations and file emission.
//!
//! Every command computes its full row set in memory first and only then
//! touches the filesystem, so a failed run never leaves a partial output
//! behind.  The data file is deterministic for a given config (reruns are
//! byte-identical); wall-clock provenance lives in a separate sidecar.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use palmlab::decoding::Decoder;
use palmlab::exact::{
    grid_log_ps, matern_mle_log_pe_bound, poisson_mle_log_pe, typicality_log_pe_bound,
};
use palmlab::exponents::{
    matern_exponent, poisson_exponent, shannon_capacity_bounds, shannon_exponent_curve,
    Codebook, ExponentResult, Method,
};
use palmlab::montecarlo::{estimate_pe, Mode};
use palmlab::pointprocess::{PalmKind, PalmScenario, WindowSpec};
use serde_json::{json, Value};

use crate::config::{
    self, CliError, CodebookSpec, McSpec, OutputFormat, Sweep,
};

/// One output cell; knows how to print itself for CSV and JSON.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(k) => format!("{k}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Int(k) => Value::from(*k),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Computed result set of one command, plus per-row provenance for the
/// sidecar.
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub row_seconds: Vec<f64>,
    pub row_seeds: Vec<Option<u64>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            row_seconds: Vec::new(),
            row_seeds: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>, seconds: f64, seed: Option<u64>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
        self.row_seconds.push(seconds);
        self.row_seeds.push(seed);
    }
}

fn runtime_at(row: usize, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime {
        row: Some(row),
        message: e.to_string(),
    }
}

fn bad(pointer: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ClosedForm => "closed-form",
        Method::NumericInf => "numeric-inf",
    }
}

fn alpha_sweep_only(sweep: Sweep, command: &str) -> Result<Vec<f64>, CliError> {
    match sweep {
        Sweep::Alpha(list) => Ok(list),
        Sweep::N(_) => Err(bad(
            "/sweep/n_list",
            format!("{command} sweeps alpha only"),
        )),
    }
}

fn require_alpha_at_least_one(alphas: &[f64]) -> Result<(), CliError> {
    for (i, &a) in alphas.iter().enumerate() {
        if a < 1.0 {
            return Err(bad(
                &format!("/sweep/alpha_list/{i}"),
                "exponents are defined for alpha >= 1",
            ));
        }
    }
    Ok(())
}

/// Resolve the (n, alpha) pairs of an error-probability sweep: one axis
/// swept, the other fixed by `/n` or `/alpha`.
fn pe_sweep_points(root: &Value, sweep: Sweep) -> Result<Vec<(usize, f64)>, CliError> {
    match sweep {
        Sweep::Alpha(alphas) => {
            let n = config::req_u64(root, "/n")?;
            if n == 0 {
                return Err(bad("/n", "must be at least 1"));
            }
            Ok(alphas.into_iter().map(|a| (n as usize, a)).collect())
        }
        Sweep::N(ns) => {
            let alpha = config::req_f64(root, "/alpha")?;
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(bad("/alpha", "must be finite and positive"));
            }
            Ok(ns.into_iter().map(|n| (n, alpha)).collect())
        }
    }
}

pub fn cmd_exponent(root: &Value) -> Result<Table, CliError> {
    let model = config::parse_noise(root, "/noise")?;
    let codebook = config::parse_codebook(root)?;
    let alphas = alpha_sweep_only(config::parse_sweep(root)?, "exponent")?;
    require_alpha_at_least_one(&alphas)?;
    let compute: Box<dyn Fn(f64) -> Result<ExponentResult, palmlab::exponents::ExponentError>> =
        match codebook {
            CodebookSpec::Poisson => Box::new(|a| poisson_exponent(&model, a)),
            CodebookSpec::Matern { .. } => Box::new(|a| matern_exponent(&model, a)),
            CodebookSpec::Grid => {
                return Err(bad("/codebook/kind", "the grid codebook has no exponent curve"))
            }
        };
    let mut table = Table::new(&["alpha", "exponent", "minimizer", "branch", "method", "model"]);
    for (i, &alpha) in alphas.iter().enumerate() {
        let start = Instant::now();
        let res = compute(alpha).map_err(|e| runtime_at(i, e))?;
        table.push(
            vec![
                Cell::Num(res.alpha),
                Cell::Num(res.exponent),
                res.minimizer.map_or(Cell::Empty, Cell::Num),
                Cell::Text(res.branch.to_string()),
                Cell::Text(method_name(res.method).to_string()),
                Cell::Text(model.kind_name().to_string()),
            ],
            start.elapsed().as_secs_f64(),
            None,
        );
    }
    Ok(table)
}

pub fn cmd_pe_exact(root: &Value) -> Result<Table, CliError> {
    let model = config::parse_noise(root, "/noise")?;
    let codebook = config::parse_codebook(root)?;
    let decoder = config::parse_decoder(root)?;
    let points = pe_sweep_points(root, config::parse_sweep(root)?)?;
    if matches!(decoder, Decoder::Mismatched { .. }) {
        return Err(bad(
            "/decoder/kind",
            "mismatched decoding is estimated by simulation; use pe-mc",
        ));
    }
    if matches!(decoder, Decoder::Typicality { .. }) && codebook != CodebookSpec::Poisson {
        return Err(bad(
            "/decoder/kind",
            "the typicality bound applies to the poisson codebook",
        ));
    }
    if codebook == CodebookSpec::Grid && model.kind_name() != "wgn" {
        return Err(bad(
            "/codebook/kind",
            "the grid closed form requires white Gaussian noise",
        ));
    }
    let mut table = Table::new(&["n", "alpha", "log_pe", "minus_log_pe_over_n", "method"]);
    for (i, &(n, alpha)) in points.iter().enumerate() {
        let start = Instant::now();
        let rate = -(model.entropy_rate() + alpha.ln());
        let (log_pe, method) = match (&decoder, &codebook) {
            (Decoder::Typicality { delta }, _) => (
                typicality_log_pe_bound(&model, n, rate, *delta)
                    .map_err(|e| runtime_at(i, e))?,
                "typicality-bound",
            ),
            (Decoder::Mle, CodebookSpec::Poisson) => (
                poisson_mle_log_pe(&model, n, alpha)
                    .map_err(|e| runtime_at(i, e))?
                    .log_pe,
                "quadrature",
            ),
            (Decoder::Mle, CodebookSpec::Matern { epsilon, .. }) => (
                matern_mle_log_pe_bound(&model, n, alpha, *epsilon)
                    .map_err(|e| runtime_at(i, e))?,
                "bound",
            ),
            (Decoder::Mle, CodebookSpec::Grid) => {
                let sigma = model.variance_per_dim().sqrt();
                let log_ps = grid_log_ps(n, rate, sigma);
                ((-log_ps.exp()).ln_1p(), "closed-form")
            }
            (Decoder::Mismatched { .. }, _) => unreachable!("rejected above"),
        };
        table.push(
            vec![
                Cell::Int(n as u64),
                Cell::Num(alpha),
                Cell::Num(log_pe),
                Cell::Num(-log_pe / n as f64),
                Cell::Text(method.to_string()),
            ],
            start.elapsed().as_secs_f64(),
            None,
        );
    }
    Ok(table)
}

pub fn cmd_pe_mc(root: &Value, seed_override: Option<u64>) -> Result<Table, CliError> {
    let model = config::parse_noise(root, "/noise")?;
    let codebook = config::parse_codebook(root)?;
    let decoder = config::parse_decoder(root)?;
    let mc: McSpec = config::parse_mc(root, seed_override)?;
    let points = pe_sweep_points(root, config::parse_sweep(root)?)?;
    if mc.mode == Mode::Reduced {
        if !matches!(decoder, Decoder::Mle) {
            return Err(bad(
                "/mc/mode",
                "reduced mode supports only the mle decoder",
            ));
        }
        if codebook != CodebookSpec::Poisson {
            return Err(bad(
                "/mc/mode",
                "reduced mode supports only the poisson codebook",
            ));
        }
    }
    let (kind, r_excl) = match &codebook {
        CodebookSpec::Poisson => (PalmKind::PoissonSlivnyak, 0.0),
        CodebookSpec::Matern { r_excl: Some(r), .. } => (PalmKind::Matern1Palm, *r),
        CodebookSpec::Matern { r_excl: None, .. } => {
            return Err(bad(
                "/codebook/r_excl",
                "required for pe-mc with the matern codebook",
            ))
        }
        CodebookSpec::Grid => (PalmKind::GridPalm, 0.0),
    };
    let mode_name = match mc.mode {
        Mode::Explicit => "explicit",
        Mode::Reduced => "reduced",
    };
    let mut table = Table::new(&[
        "n",
        "alpha",
        "mean",
        "se",
        "ci_lo",
        "ci_hi",
        "trials",
        "edge_events",
        "mode",
    ]);
    for (i, &(n, alpha)) in points.iter().enumerate() {
        let start = Instant::now();
        let rate = -(model.entropy_rate() + alpha.ln());
        let scenario = PalmScenario {
            kind,
            n,
            log_lambda: n as f64 * rate,
            r_excl,
            window: WindowSpec::default_for(n, model.variance_per_dim().sqrt(), r_excl, rate),
        };
        let row_seed = mc.seed.wrapping_add(i as u64);
        let est = estimate_pe(&scenario, &decoder, &model, mc.trials, row_seed, mc.mode)
            .map_err(|e| runtime_at(i, e))?;
        table.push(
            vec![
                Cell::Int(n as u64),
                Cell::Num(alpha),
                Cell::Num(est.mean),
                Cell::Num(est.std_error),
                Cell::Num(est.ci95.0),
                Cell::Num(est.ci95.1),
                Cell::Int(est.trials),
                Cell::Int(est.edge_events),
                Cell::Text(mode_name.to_string()),
            ],
            start.elapsed().as_secs_f64(),
            Some(row_seed),
        );
    }
    Ok(table)
}

pub fn cmd_capacity(root: &Value) -> Result<Table, CliError> {
    let model = config::parse_noise(root, "/noise")?;
    let p_list: Vec<f64> = match root.pointer("/p_list") {
        None => vec![1.0, 10.0, 100.0],
        Some(v) => {
            let arr = v
                .as_array()
                .ok_or_else(|| bad("/p_list", "expected an array of numbers"))?;
            if arr.is_empty() {
                return Err(bad("/p_list", "must not be empty"));
            }
            let mut out = Vec::with_capacity(arr.len());
            for (i, x) in arr.iter().enumerate() {
                let ptr = format!("/p_list/{i}");
                let p = x
                    .as_f64()
                    .ok_or_else(|| bad(&ptr, "expected a number"))?;
                if !(p > 0.0) || !p.is_finite() {
                    return Err(bad(&ptr, "must be positive"));
                }
                out.push(p);
            }
            out
        }
    };
    let h = model.entropy_rate();
    let mut table = Table::new(&[
        "model",
        "entropy_rate",
        "capacity",
        "p",
        "shannon_lower",
        "shannon_upper",
        "gap",
    ]);
    for (i, &p) in p_list.iter().enumerate() {
        let start = Instant::now();
        let (lo, hi) = shannon_capacity_bounds(&model, p).map_err(|e| runtime_at(i, e))?;
        table.push(
            vec![
                Cell::Text(model.kind_name().to_string()),
                Cell::Num(h),
                Cell::Num(-h),
                Cell::Num(p),
                Cell::Num(lo),
                Cell::Num(hi),
                Cell::Num(hi - lo),
            ],
            start.elapsed().as_secs_f64(),
            None,
        );
    }
    Ok(table)
}

pub fn cmd_shannon_map(root: &Value) -> Result<Table, CliError> {
    let model = config::parse_noise(root, "/noise")?;
    let codebook = match config::parse_codebook(root)? {
        CodebookSpec::Poisson => Codebook::Poisson,
        CodebookSpec::Matern { .. } => Codebook::Matern,
        CodebookSpec::Grid => {
            return Err(bad("/codebook/kind", "the grid codebook has no exponent curve"))
        }
    };
    let (power, given, _label) = config::parse_power(root)?;
    let alphas = alpha_sweep_only(config::parse_sweep(root)?, "shannon-map")?;
    require_alpha_at_least_one(&alphas)?;
    let start = Instant::now();
    let curve = shannon_exponent_curve(&model, power, &alphas, codebook)
        .map_err(|e| runtime_at(0, e))?;
    let seconds = start.elapsed().as_secs_f64() / curve.rows.len().max(1) as f64;
    let mut table = Table::new(&["rate", "exponent_lower_bound", "alpha", "P_or_A"]);
    for point in &curve.rows {
        table.push(
            vec![
                Cell::Num(point.rate),
                Cell::Num(point.exponent),
                Cell::Num(point.alpha),
                Cell::Num(given),
            ],
            seconds,
            None,
        );
    }
    Ok(table)
}

/// Append `.sidecar.json` to the data file's name.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".sidecar.json");
    PathBuf::from(name)
}

fn render_csv(table: &Table) -> String {
    let mut text = table.columns.join(",");
    text.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    text
}

fn render_json(table: &Table) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (name, cell) in table.columns.iter().zip(row) {
                obj.insert((*name).to_string(), cell.json());
            }
            Value::Object(obj)
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&Value::Array(rows)).expect("plain data");
    text.push('\n');
    text
}

/// Write the data file and its provenance sidecar.  Called only after the
/// whole computation has succeeded.
pub fn write_outputs(
    out: &Path,
    format: OutputFormat,
    command: &str,
    table: &Table,
    resolved_config: &Value,
    effective_seed: Option<u64>,
    threads: usize,
    total_seconds: f64,
) -> Result<(), CliError> {
    let body = match format {
        OutputFormat::Csv => render_csv(table),
        OutputFormat::Json => render_json(table),
    };
    let io_err = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    std::fs::write(out, body).map_err(|e| io_err(out, e))?;
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let rows: Vec<Value> = table
        .row_seconds
        .iter()
        .zip(&table.row_seeds)
        .enumerate()
        .map(|(i, (secs, seed))| {
            json!({
                "index": i,
                "wall_clock_seconds": secs,
                "seed": seed,
            })
        })
        .collect();
    let sidecar = json!({
        "schema_version": 1,
        "command": command,
        "library_version": palmlab::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "created_unix_seconds": created,
        "threads": threads,
        "effective_seed": effective_seed,
        "config": resolved_config,
        "columns": table.columns,
        "rows": rows,
        "total_wall_clock_seconds": total_seconds,
    });
    let sidecar_file = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("plain data");
    text.push('\n');
    std::fs::write(&sidecar_file, text).map_err(|e| io_err(&sidecar_file, e))?;
    Ok(())
}
