use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sqfn_cli::checks::{build_lab, describe, run_checks, CHECKS};
use sqfn_cli::config::{RawConfig, RunConfig};
use sqfn_cli::report::{output_dir, write_all};
use sqfn_core::multipliers::MultiplierProfile;
use sqfn_core::spectral::kernel_matrix;
use sqfn_core::verify::{TestFamily, Transform};
use sqfn_core::GridFunction;

const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "sqfn", version, about = "Numerical checks for square functions of self-adjoint operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured checks: `run [CONFIG] [--key value]...`
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Print the formula, tolerance and config keys of a check
    Describe { tag: String },
    /// List check tags
    ListChecks,
    /// Write a kernel matrix: `dump-operator [CONFIG] [--profile heat|poisson|wave] [--t T] [--key value]...`
    DumpOperator {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Write a test-family member and optionally its transform:
    /// `dump-function [CONFIG] [--member I] [--transform T] [--key value]...`
    DumpFunction {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

/// Config plus the subcommand's own `--name value` options.
struct Invocation {
    cfg: RunConfig,
    extras: Vec<(String, String)>,
}

fn parse_args(args: &[String], extra_keys: &[&str]) -> Result<Invocation, String> {
    let mut iter = args.iter().peekable();
    let mut raw = match iter.peek() {
        Some(first) if !first.starts_with("--") => {
            let path = iter.next().expect("peeked");
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            RawConfig::parse(&text).map_err(|e| format!("{path}: {e}"))?
        }
        _ => RawConfig::default(),
    };
    let mut checks: Vec<String> = Vec::new();
    let mut extras = Vec::new();
    while let Some(arg) = iter.next() {
        let name = arg.strip_prefix("--").ok_or_else(|| format!("expected --key value, got {arg:?}"))?;
        let (key, value) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (name.to_string(), iter.next().ok_or_else(|| format!("--{name} needs a value"))?.clone()),
        };
        if key == "check" {
            checks.push(value);
        } else if extra_keys.contains(&key.as_str()) {
            extras.push((key, value));
        } else {
            raw.set(&key, &value, None, None).map_err(|e| format!("--{key}: {e}"))?;
        }
    }
    if !checks.is_empty() {
        raw.set("checks", &checks.join(","), None, None).map_err(|e| e.to_string())?;
    }
    let cfg = RunConfig::from_raw(&raw).map_err(|e| e.to_string())?;
    Ok(Invocation { cfg, extras })
}

fn extra<T: std::str::FromStr>(inv: &Invocation, key: &str, default: T) -> Result<T, String> {
    match inv.extras.iter().rev().find(|(k, _)| k == key) {
        Some((_, v)) => v.parse().map_err(|_| format!("--{key}: cannot parse {v:?}")),
        None => Ok(default),
    }
}

fn run(args: &[String]) -> Result<ExitCode, String> {
    let inv = parse_args(args, &[])?;
    let cfg = inv.cfg;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| e.to_string())?;
    let records = pool.install(|| run_checks(&cfg));
    let dir = output_dir(&cfg);
    let files = write_all(&dir, &cfg, &records).map_err(|e| format!("{}: {e}", dir.display()))?;
    for r in &records {
        println!("{} {}", if r.passed { "pass" } else { "FAIL" }, r.tag);
    }
    println!("config {} -> {}", cfg.hash, files[0].display());
    let failing: Vec<&str> = records.iter().filter(|r| !r.passed).map(|r| r.tag.as_str()).collect();
    if failing.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed: {}", failing.join(", "));
        Ok(ExitCode::FAILURE)
    }
}

fn write_dat(inv: &Invocation, name: &str, body: String) -> Result<ExitCode, String> {
    let dir = output_dir(&inv.cfg);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path: PathBuf = dir.join(name);
    fs::write(&path, format!("# config_hash={}\n{body}", inv.cfg.hash)).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn dump_operator(args: &[String]) -> Result<ExitCode, String> {
    let inv = parse_args(args, &["profile", "t"])?;
    let t: f64 = extra(&inv, "t", 0.1)?;
    let profile = match extra(&inv, "profile", "heat".to_string())?.as_str() {
        "heat" => MultiplierProfile::heat(t),
        "poisson" => MultiplierProfile::poisson(t),
        "wave" => MultiplierProfile::wave(t),
        other => return Err(format!("--profile: unknown profile {other:?} (heat, poisson, wave)")),
    };
    let lab = build_lab(&inv.cfg).map_err(|e| e.to_string())?;
    let k = kernel_matrix(lab.op(), &profile, inv.cfg.kernel_budget_mb).map_err(|e| e.to_string())?;
    let grid = *lab.grid();
    let mut body = format!("# {} kernel, {}\n", k.generator_tag(), lab.label());
    for x in 0..k.size() {
        for y in 0..k.size() {
            let (a, b) = if grid.dim() == 1 { (grid.point(x)[0], grid.point(y)[0]) } else { (x as f64, y as f64) };
            let _ = writeln!(body, "{a:e} {b:e} {:e}", k.get(x, y));
        }
        body.push('\n');
    }
    write_dat(&inv, "kernel.dat", body)
}

fn dump_function(args: &[String]) -> Result<ExitCode, String> {
    let inv = parse_args(args, &["member", "transform"])?;
    let member: usize = extra(&inv, "member", 0)?;
    let transform: Option<Transform> = match inv.extras.iter().rev().find(|(k, _)| k == "transform") {
        Some((_, v)) => Some(v.parse().map_err(|e| format!("--transform: {e}"))?),
        None => None,
    };
    let lab = build_lab(&inv.cfg).map_err(|e| e.to_string())?;
    let fam = TestFamily::mixed(&lab, inv.cfg.seed, member + 1).map_err(|e| e.to_string())?;
    let f = &fam.members[member];
    let tf: Option<GridFunction> = transform.map(|t| lab.apply(t, f)).transpose().map_err(|e| e.to_string())?;
    let grid = *lab.grid();
    let mut body = format!("# member {member} ({:?}){}\n", fam.shapes[member], transform.map_or(String::new(), |t| format!(", {t}")));
    for i in 0..grid.len() {
        let x = grid.point(i);
        let coords = if grid.dim() == 1 { format!("{:e}", x[0]) } else { format!("{:e} {:e}", x[0], x[1]) };
        let _ = write!(body, "{coords} {:e}", f.values()[i].re);
        if let Some(tf) = &tf {
            let _ = write!(body, " {:e}", tf.values()[i].re);
        }
        body.push('\n');
        if grid.dim() == 2 && (i + 1) % grid.n() == 0 {
            body.push('\n');
        }
    }
    write_dat(&inv, "function.dat", body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { args } => run(&args),
        Command::Describe { tag } => describe(&tag).map(|text| {
            print!("{text}");
            ExitCode::SUCCESS
        }),
        Command::ListChecks => {
            for c in CHECKS {
                println!("{}", c.tag);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpOperator { args } => dump_operator(&args),
        Command::DumpFunction { args } => dump_function(&args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("sqfn: {e}");
        ExitCode::from(USAGE)
    })
}
