mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use convexlab::body::parse_body_in;
use convexlab::harness::{emit, exit_code, registry_entry, run_claim, ClaimId, ClaimReport, ExperimentSpec, ReportFormat, Verdict};
use convexlab::positions::{position_report, PositionTag, DEFAULT_DIRS, DEFAULT_SAMPLE_SIZE};
use convexlab::sampling::{sample_uniform, ChainConfig};
use convexlab::BodyExpr;

use config::Config;

#[derive(Parser)]
#[command(name = "convexlab", version, about = "Numerical laboratory for uniformly convex symmetric bodies")]
struct Cli {
    /// TOML file with default values for the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the norm and the dual norm at a point.
    Norm {
        #[arg(long)]
        body: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Draw uniform points and write them as CSV.
    Sample {
        #[arg(long)]
        body: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thinning: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Place a body in a position and report its functionals as JSON (or CSV by extension).
    Position {
        #[arg(long)]
        body: String,
        #[arg(long, default_value = "iso")]
        tag: PositionTag,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_DIRS)]
        dirs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one registered claim.
    Claim {
        #[arg(long)]
        id: ClaimId,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Body templates replacing the registry's (repeatable).
        #[arg(long = "body")]
        bodies: Vec<String>,
        /// Extra parameter `key=value` (repeatable); values parse as JSON when possible.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, Value)>,
        #[arg(long)]
        format: Option<ReportFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the registry and write one report per claim plus a summary.
    Suite {
        /// Run every registered claim.
        #[arg(long)]
        all: bool,
        /// Run only these claims.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<ClaimId>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kv(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), v))
}

fn parse_body(src: &str) -> Result<BodyExpr, String> {
    let cwd = std::env::current_dir().map_err(|e| e.to_string())?;
    parse_body_in(src, &cwd).map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| format!("{}: {e}", path.display()))
}

/// The experiment for `id` from registry defaults, then the config file, then the flags.
fn build_spec(id: ClaimId, cfg: &Config, flags: SpecFlags) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default_for(id);
    let known: Vec<&str> = registry_entry(id).params.iter().map(|(k, _)| *k).collect();
    if let Some(s) = cfg.seed {
        spec.seed = s;
    }
    if let Some(d) = &cfg.dims {
        spec.dims = d.clone();
    }
    if let Some(p) = &cfg.p {
        if known.contains(&"p") {
            spec.params.insert("p".into(), p.clone());
        }
    }
    for (k, v) in &cfg.params {
        if known.contains(&k.as_str()) {
            spec.params.insert(k.clone(), v.clone());
        }
    }
    if let Some(o) = cfg.claims.get(id.as_str()) {
        if let Some(d) = &o.dims {
            spec.dims = d.clone();
        }
        if let Some(b) = &o.bodies {
            spec.bodies = b.clone();
        }
        if let Some(s) = o.seed {
            spec.seed = s;
        }
        spec.params.extend(o.params.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    if let Some(s) = flags.seed {
        spec.seed = s;
    }
    if let Some(d) = flags.dims {
        spec.dims = d;
    }
    if let Some(p) = flags.p {
        let v = if p.len() == 1 { Value::from(p[0]) } else { Value::from(p) };
        spec.params.insert("p".into(), v);
    }
    if !flags.bodies.is_empty() {
        spec.bodies = flags.bodies;
    }
    spec.params.extend(flags.params);
    spec
}

struct SpecFlags {
    seed: Option<u64>,
    dims: Option<Vec<usize>>,
    p: Option<Vec<f64>>,
    bodies: Vec<String>,
    params: Vec<(String, Value)>,
}

fn summary_line(r: &ClaimReport) -> String {
    let failed: Vec<String> = r.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.series, c.detail)).collect();
    let mut s = format!("{:<16} {:<5} rows={} failed_rows={}", r.claim_id.as_str(), r.verdict.to_string(), r.rows.len(), r.failed_rows);
    if !failed.is_empty() {
        s.push_str(&format!(" | {}", failed.join(" | ")));
    }
    s
}

fn run(cli: Cli) -> Result<i32, String> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let err = |e: convexlab::Error| e.to_string();
    match cli.command {
        Command::Norm { body, x } => {
            let b = parse_body(&body)?;
            let x: Vec<f64> = x
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad coordinate {s:?}")))
                .collect::<Result<_, _>>()?;
            println!("norm={:.15e}", b.norm(&x).map_err(err)?);
            println!("dual_norm={:.15e}", b.dual_norm(&x).map_err(err)?);
            Ok(0)
        }
        Command::Sample { body, count, seed, burn_in, thinning, out } => {
            let b = parse_body(&body)?;
            let mut c = ChainConfig::new(seed.or(cfg.seed).unwrap_or(0));
            c.burn_in = burn_in;
            c.thinning = thinning;
            let batch = sample_uniform(&b, &c, count).map_err(err)?;
            let mut w = create(&out)?;
            batch.write_csv(&mut w).map_err(err)?;
            w.flush().map_err(|e| e.to_string())?;
            eprintln!("wrote {} points to {}", batch.count(), out.display());
            Ok(0)
        }
        Command::Position { body, tag, samples, dirs, seed, out } => {
            let b = parse_body(&body)?;
            let r = position_report(&b, tag, samples, dirs, seed.or(cfg.seed).unwrap_or(0)).map_err(err)?;
            let mut w = create(&out)?;
            if out.extension().is_some_and(|e| e == "csv") {
                writeln!(w, "{}", convexlab::positions::PositionReport::CSV_HEADER.join(",")).map_err(|e| e.to_string())?;
                writeln!(w, "{}", r.csv_row().join(",")).map_err(|e| e.to_string())?;
            } else {
                serde_json::to_writer_pretty(&mut w, &r).map_err(|e| e.to_string())?;
                writeln!(w).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Claim { id, dims, p, seed, bodies, params, format, out } => {
            let spec = build_spec(id, &cfg, SpecFlags { seed, dims, p, bodies, params });
            let report = run_claim(&spec).map_err(err)?;
            println!("{}", summary_line(&report));
            let format = match format {
                Some(f) => f,
                None => cfg.format.as_deref().map(str::parse).transpose().map_err(err)?.unwrap_or(ReportFormat::Json),
            };
            if let Some(path) = out.or(spec.output.clone()) {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                }
                emit(&report, format, &path).map_err(err)?;
            }
            Ok(exit_code([&report.verdict]))
        }
        Command::Suite { all, ids, seed, out } => {
            let ids: Vec<ClaimId> = if all || ids.is_empty() { ClaimId::ALL.to_vec() } else { ids };
            let dir = out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("reports"));
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let mut verdicts = Vec::new();
            let mut summary = Vec::new();
            for id in ids {
                let spec = build_spec(id, &cfg, SpecFlags { seed, dims: None, p: None, bodies: Vec::new(), params: Vec::new() });
                let start = std::time::Instant::now();
                let verdict = match run_claim(&spec) {
                    Ok(r) => {
                        println!("{} ({:.0}s)", summary_line(&r), start.elapsed().as_secs_f64());
                        emit(&r, ReportFormat::Json, &dir.join(format!("{id}.json"))).map_err(err)?;
                        emit(&r, ReportFormat::Csv, &dir.join(format!("{id}.csv"))).map_err(err)?;
                        emit(&r, ReportFormat::Long, &dir.join(format!("{id}.long.csv"))).map_err(err)?;
                        r.verdict
                    }
                    Err(e) => {
                        println!("{:<16} ERROR {e}", id.as_str());
                        Verdict::Error
                    }
                };
                summary.push((id, verdict, start.elapsed().as_secs_f64()));
                verdicts.push(verdict);
            }
            let mut w = create(&dir.join("summary.csv"))?;
            writeln!(w, "claim_id,verdict,seconds").map_err(|e| e.to_string())?;
            for (id, v, t) in &summary {
                writeln!(w, "{id},{v},{t:.1}").map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
            let counts: BTreeMap<String, usize> = verdicts.iter().fold(BTreeMap::new(), |mut m, v| {
                *m.entry(v.to_string()).or_default() += 1;
                m
            });
            println!("summary: {counts:?}");
            Ok(exit_code(&verdicts))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
