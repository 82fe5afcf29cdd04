use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use shieldkey::criteria::noise_threshold_eps_star;
use shieldkey::recurrence::{closed_form_r, key_block_norm};
use shieldkey::shielded::horodecki_family_with_limit;
use shieldkey::*;

mod table;

use table::{Cell, Table};

#[derive(Parser)]
#[command(name = "shieldkey", version, about = "Key distillability of shielded two-qubit states")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output file; stdout when absent. Relative paths resolve under the output directory if one is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Default output directory; with no --out, output goes to <dir>/<command>.<ext>.
    #[arg(long, global = true, env = "SHIELDKEY_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Largest total matrix dimension to materialize.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    /// Margin a strict inequality must exceed in verdicts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Verdicts and key spectrum for a state spec (JSON file, or - for stdin).
    Check { spec: PathBuf },
    /// Margins and thresholds over a p-grid of the projector family.
    ScanHorodecki {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Explicit comma-separated p values.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["p_min", "p_max", "p_step"])]
        p: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.01)]
        p_min: f64,
        #[arg(long, default_value_t = 0.49)]
        p_max: f64,
        #[arg(long, default_value_t = 0.01)]
        p_step: f64,
        /// White-noise weight applied to every state.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Whitespace-separated layout for gnuplot.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Verdicts over q1 for the 4x4 example with q2 = 1 - q1.
    #[command(name = "scan-4x4")]
    Scan4x4 {
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["q_min", "q_max", "q_step"])]
        q1: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        q_min: f64,
        #[arg(long, default_value_t = 1.0)]
        q_max: f64,
        #[arg(long, default_value_t = 0.05)]
        q_step: f64,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Explicit recurrence rounds next to the closed form.
    Recurrence {
        spec: PathBuf,
        /// Number of rounds.
        #[arg(long)]
        k: usize,
    },
    /// Noisy thresholds of the projector family over an eps-grid.
    NoiseScan {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["eps_min", "eps_max", "eps_step"])]
        eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        eps_min: f64,
        #[arg(long, default_value_t = 0.2)]
        eps_max: f64,
        #[arg(long, default_value_t = 0.005)]
        eps_step: f64,
        /// Offset in p used to cross-check each threshold.
        #[arg(long, default_value_t = 1e-3)]
        p_step: f64,
    },
    /// Advantage distillation: closed form, Monte Carlo and security check.
    AdSim {
        spec: PathBuf,
        /// Block size N.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
}

/// Bad command-line input; exits with code 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Validation(_) | Error::Degenerate(_) => 2,
                Error::Resource { .. } => 3,
                Error::Consistency(_) => 1,
            };
        }
        if cause.is::<Invalid>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn grid(list: Option<Vec<f64>>, min: f64, max: f64, step: f64, name: &str) -> Result<Vec<f64>> {
    if let Some(values) = list {
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("{name} grid must be a non-empty list of numbers")));
        }
        return Ok(values);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!("{name} step must be positive, got {step}")));
    }
    if min > max || min.is_nan() || max.is_nan() {
        return Err(invalid(format!("{name} grid is empty: min {min} > max {max}")));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

fn read_spec(path: &PathBuf) -> Result<StateSpec64> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    }
    let spec: StateSpec64 =
        serde_json::from_str(&text).with_context(|| format!("invalid state spec {}", path.display()))?;
    Ok(spec)
}

struct Output {
    format: Format,
    gnuplot: bool,
}

enum Payload {
    Table(Table),
    Json(serde_json::Value, Table),
}

fn emit(g: &Global, name: &str, out: Output, payload: Payload) -> Result<()> {
    let ext = match (out.gnuplot, out.format) {
        (true, _) => "dat",
        (_, Format::Json) => "json",
        (_, Format::Csv) => "csv",
    };
    let path = match (&g.out, &g.out_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{name}.{ext}"))),
        (None, None) => None,
    };
    let mut sink: Box<dyn Write> = match &path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let table = match &payload {
        Payload::Table(t) | Payload::Json(_, t) => t,
    };
    if out.gnuplot {
        table.write_gnuplot(&mut sink)?;
    } else {
        match out.format {
            Format::Csv => table.write_csv(&mut sink)?,
            Format::Json => {
                let value = match &payload {
                    Payload::Json(v, _) => v.clone(),
                    Payload::Table(t) => t.to_json(),
                };
                serde_json::to_writer_pretty(&mut sink, &value)?;
                writeln!(sink)?;
            }
        }
    }
    sink.flush()?;
    Ok(())
}

const VERDICT_COLUMNS: [&str; 8] = [
    "entangled_margin",
    "entangled",
    "recurrence_margin",
    "recurrence_ok",
    "ad_margin",
    "ad_ok",
    "ppt_min_eig",
    "ppt",
];

fn verdict_cells(v: &Verdict64) -> Vec<Cell> {
    vec![
        v.entangled_margin.into(),
        v.entangled.into(),
        v.recurrence_margin.into(),
        v.recurrence_ok.into(),
        v.ad_margin.into(),
        v.ad_ok.into(),
        v.ppt_margin.into(),
        v.ppt.into(),
    ]
}

fn options(g: &Global) -> Result<VerdictOptions<f64>> {
    if !(g.tolerance >= 0.0 && g.tolerance.is_finite()) {
        return Err(invalid(format!("tolerance must be nonnegative, got {}", g.tolerance)));
    }
    Ok(VerdictOptions {
        tolerance: g.tolerance,
        max_dim: g.max_dim,
    })
}

/// Notes `column flips between x and y` for every sign change of a boolean column.
fn flip_notes(t: &Table, key: usize, columns: &[&str]) -> Vec<String> {
    let mut notes = Vec::new();
    for name in columns {
        let col = t.columns.iter().position(|c| c == name).unwrap();
        let mut prev: Option<(&Cell, &Cell)> = None;
        for row in &t.rows {
            if let Cell::Bool(b) = &row[col] {
                if let Some((x, Cell::Bool(pb))) = prev {
                    if pb != b {
                        notes.push(format!("{name} flips between {} and {}", cell_text(x), cell_text(&row[key])));
                    }
                }
                prev = Some((&row[key], &row[col]));
            }
        }
    }
    notes
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(x) => table::g12(*x),
        other => format!("{other:?}"),
    }
}

fn cmd_check(g: &Global, spec: &PathBuf) -> Result<()> {
    let spec = read_spec(spec)?;
    let s = spec.build(g.max_dim)?;
    let v = full_verdict_with(&s, &options(g)?)?;
    let k = key_spectrum(&s);
    let mut columns = VERDICT_COLUMNS.to_vec();
    columns.extend(["lambda1", "lambda2", "lambda3", "lambda4"]);
    let mut t = Table::new(columns);
    let mut row = verdict_cells(&v);
    row.extend(k.lambda.iter().map(|&x| Cell::from(x)));
    t.push(row);
    let value = json!({
        "spec": spec,
        "shield_dims": s.shield_dims(),
        "norms": s.norms(),
        "key_spectrum": k.lambda,
        "verdict": v,
    });
    emit(
        g,
        "check",
        Output {
            format: g.format.unwrap_or(Format::Json),
            gnuplot: false,
        },
        Payload::Json(value, t),
    )
}

fn cmd_scan_horodecki(g: &Global, d: usize, l: usize, ps: Vec<f64>, eps: f64, gnuplot: bool) -> Result<()> {
    if d < 2 || l < 1 {
        return Err(invalid(format!("need d >= 2 and l >= 1, got d={d}, l={l}")));
    }
    let lu = u32::try_from(l).map_err(|_| invalid("l too large"))?;
    let (p1, p2): (f64, f64) = thresholds_horodecki(lu);
    let bound: f64 = shieldkey::shielded::horodecki_ppt_bound(d as u32, lu);
    let opts = options(g)?;
    let rows: Vec<Result<Vec<Cell>>> = ps
        .par_iter()
        .map(|&p| {
            let built = horodecki_family_with_limit(p, d, l, g.max_dim).and_then(|s| add_white_noise(&s, eps));
            let (cells, err) = match built {
                Ok(s) => {
                    let v = full_verdict_with(&s, &opts)?;
                    let ppt_key = v.ppt.map(|ppt| ppt && v.ad_ok);
                    let mut cells = verdict_cells(&v);
                    cells.extend([v.ad_ok.into(), ppt_key.into()]);
                    (cells, Cell::Empty)
                }
                Err(e @ Error::Resource { .. }) => (vec![Cell::Empty; 10], Cell::Text(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            let mut row = vec![p.into()];
            row.extend(cells);
            row.extend([p1.into(), p2.into(), bound.into(), err]);
            Ok(row)
        })
        .collect();
    let mut columns = vec!["p"];
    columns.extend(VERDICT_COLUMNS);
    columns.extend(["key_distillable", "ppt_key_distillable", "p1", "p2", "ppt_bound", "error"]);
    let mut t = Table::new(columns);
    for row in rows {
        t.push(row?);
    }
    t.notes = flip_notes(&t, 0, &["entangled", "ad_ok", "ppt"]);
    emit(
        g,
        "scan-horodecki",
        Output {
            format: g.format.unwrap_or(Format::Csv),
            gnuplot,
        },
        Payload::Table(t),
    )
}

fn cmd_scan_4x4(g: &Global, qs: Vec<f64>, gnuplot: bool) -> Result<()> {
    let opts = options(g)?;
    let rows: Vec<Result<Vec<Cell>>> = qs
        .par_iter()
        .map(|&q1| {
            let s = example_4x4(q1, 1.0 - q1)?;
            let v = full_verdict_with(&s, &opts)?;
            let mut row = vec![q1.into(), (1.0 - q1).into()];
            row.extend(verdict_cells(&v));
            row.extend(key_spectrum(&s).lambda.iter().map(|&x| Cell::from(x)));
            Ok(row)
        })
        .collect();
    let mut columns = vec!["q1", "q2"];
    columns.extend(VERDICT_COLUMNS);
    columns.extend(["lambda1", "lambda2", "lambda3", "lambda4"]);
    let mut t = Table::new(columns);
    for row in rows {
        t.push(row?);
    }
    t.notes = flip_notes(&t, 0, &["entangled", "recurrence_ok", "ad_ok"]);
    emit(
        g,
        "scan-4x4",
        Output {
            format: g.format.unwrap_or(Format::Csv),
            gnuplot,
        },
        Payload::Table(t),
    )
}

fn cmd_recurrence(g: &Global, spec: &PathBuf, k: usize) -> Result<()> {
    if !(1..=62).contains(&k) {
        return Err(invalid(format!("k must lie in 1..=62, got {k}")));
    }
    let s = read_spec(spec)?.build(g.max_dim)?;
    let n = s.norms();
    let trace = iterate(&s, k, g.max_dim)?;
    let mut t = Table::new(vec!["round", "effective_m", "r_explicit", "r_closed", "abs_diff", "success_prob"]);
    let r0 = key_block_norm(&s);
    let c0 = closed_form_r(&n, 1);
    t.push(vec![0u64.into(), 1u64.into(), r0.into(), c0.into(), (r0 - c0).abs().into(), Cell::Empty]);
    for round in 1..=k {
        let m = 1u64 << round;
        let closed = closed_form_r(&n, m);
        let (r, diff, p) = match trace.r.get(round - 1) {
            Some(&r) => (Some(r), Some((r - closed).abs()), trace.success_prob.get(round - 1).copied()),
            None => (None, None, None),
        };
        t.push(vec![(round as u64).into(), m.into(), r.into(), closed.into(), diff.into(), p.into()]);
    }
    if let Some(at) = trace.truncated_at {
        t.notes.push(format!(
            "truncated at round {at}: total dimension {} exceeds limit {}",
            4 * s.shield_dim().saturating_pow(1 << at.min(6)),
            g.max_dim
        ));
    }
    emit(
        g,
        "recurrence",
        Output {
            format: g.format.unwrap_or(Format::Csv),
            gnuplot: false,
        },
        Payload::Table(t),
    )
}

fn cmd_noise_scan(g: &Global, l: usize, d: usize, eps_grid: Vec<f64>, p_step: f64) -> Result<()> {
    if d < 2 || l < 1 {
        return Err(invalid(format!("need d >= 2 and l >= 1, got d={d}, l={l}")));
    }
    if p_step <= 0.0 || p_step.is_nan() {
        return Err(invalid(format!("p-step must be positive, got {p_step}")));
    }
    let lu = u32::try_from(l).map_err(|_| invalid("l too large"))?;
    // AD verdict on the noisy family at p, or None when p leaves (0, 1/2).
    let ad_at = |p: f64, eps: f64| -> Result<Option<bool>> {
        if !(p > 0.0 && p < 0.5) {
            return Ok(None);
        }
        let s = add_white_noise(&horodecki_family_with_limit(p, d, l, g.max_dim)?, eps)?;
        Ok(Some(ad_condition(&s).holds))
    };
    let rows: Vec<Result<Vec<Cell>>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let th = noise_thresholds_horodecki::<f64>(lu, eps)?;
            let mut row: Vec<Cell> = vec![eps.into(), th.closed_form.into(), th.sufficient.into(), th.exact.into()];
            for root in [th.closed_form, th.exact] {
                match root {
                    Some(p) => {
                        let below = ad_at(p - p_step, eps)?;
                        let above = ad_at(p + p_step, eps)?;
                        let consistent = below.zip(above).map(|(b, a)| !b && a);
                        row.extend([below.into(), above.into(), consistent.into()]);
                    }
                    None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
                }
            }
            Ok(row)
        })
        .collect();
    let mut t = Table::new(vec![
        "eps",
        "p_min",
        "p_min_sufficient",
        "p_min_exact",
        "ad_below_p_min",
        "ad_above_p_min",
        "p_min_consistent",
        "ad_below_p_exact",
        "ad_above_p_exact",
        "p_exact_consistent",
    ]);
    for row in rows {
        t.push(row?);
    }
    let star: f64 = noise_threshold_eps_star(lu);
    t.notes.push(format!("p_min is none for eps > {}", table::g12(star)));
    emit(
        g,
        "noise-scan",
        Output {
            format: g.format.unwrap_or(Format::Csv),
            gnuplot: false,
        },
        Payload::Table(t),
    )
}

fn cmd_ad_sim(g: &Global, spec: &PathBuf, n: usize, trials: u64) -> Result<()> {
    let s = read_spec(spec)?.build(g.max_dim)?;
    let ccq = ccq_from_spectrum(&key_spectrum(&s))?;
    let analytic = ad_block_stats(&ccq, n)?;
    let empirical = ad_monte_carlo(&ccq, n, trials, g.seed)?;
    let security = ad_security_check(&ccq)?;
    let mut t = Table::new(vec![
        "block_size",
        "trials",
        "seed",
        "accept_prob",
        "accept_prob_analytic",
        "accept_stderr",
        "post_error",
        "post_error_analytic",
        "post_error_stderr",
        "eve_overlap_effective",
        "secure",
        "security_margin",
    ]);
    t.push(vec![
        (n as u64).into(),
        trials.into(),
        g.seed.into(),
        empirical.stats.accept_prob.into(),
        analytic.accept_prob.into(),
        empirical.accept_stderr.into(),
        empirical.stats.post_error.into(),
        analytic.post_error.into(),
        empirical.post_error_stderr.into(),
        analytic.eve_overlap_effective.into(),
        security.holds.into(),
        security.margin.into(),
    ]);
    let value = json!({
        "seed": g.seed,
        "ccq": ccq,
        "analytic": analytic,
        "empirical": empirical,
        "security": security,
    });
    emit(
        g,
        "ad-sim",
        Output {
            format: g.format.unwrap_or(Format::Json),
            gnuplot: false,
        },
        Payload::Json(value, t),
    )
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Check { spec } => cmd_check(g, &spec),
        Command::ScanHorodecki {
            d,
            l,
            p,
            p_min,
            p_max,
            p_step,
            eps,
            gnuplot,
        } => cmd_scan_horodecki(g, d, l, grid(p, p_min, p_max, p_step, "p")?, eps, gnuplot),
        Command::Scan4x4 {
            q1,
            q_min,
            q_max,
            q_step,
            gnuplot,
        } => cmd_scan_4x4(g, grid(q1, q_min, q_max, q_step, "q1")?, gnuplot),
        Command::Recurrence { spec, k } => cmd_recurrence(g, &spec, k),
        Command::NoiseScan {
            l,
            d,
            eps,
            eps_min,
            eps_max,
            eps_step,
            p_step,
        } => cmd_noise_scan(g, l, d, grid(eps, eps_min, eps_max, eps_step, "eps")?, p_step),
        Command::AdSim { spec, n, trials } => cmd_ad_sim(g, &spec, n, trials),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn grids() {
        assert_eq!(grid(None, 0.0, 0.5, 0.25, "p").unwrap(), vec![0.0, 0.25, 0.5]);
        assert_eq!(grid(None, 0.1, 0.1, 0.1, "p").unwrap(), vec![0.1]);
        assert_eq!(grid(None, 0.0, 0.3, 0.1, "p").unwrap().len(), 4);
        assert!(grid(None, 0.0, 0.5, 0.0, "p").is_err());
        assert!(grid(None, 0.5, 0.0, 0.1, "p").is_err());
        assert!(grid(Some(vec![]), 0.0, 0.0, 0.0, "p").is_err());
        assert_eq!(grid(Some(vec![0.2, 0.1]), 0.0, 0.0, 0.0, "p").unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&anyhow!(Error::Resource { required: 2, limit: 1 })), 3);
        assert_eq!(exit_code(&anyhow!(Error::Degenerate("x".into())).context("ad-sim")), 2);
        assert_eq!(exit_code(&invalid("bad")), 2);
        assert_eq!(exit_code(&anyhow!("io")), 1);
    }
}
