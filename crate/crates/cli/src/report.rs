use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use crate::checks::Record;
use crate::config::RunConfig;

/// Output directory: `SQFN_OUT` if set, else the config's `out`.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os("SQFN_OUT").map_or_else(|| cfg.out.clone(), PathBuf::from)
}

/// Report lines; the first (header) line alone carries the timestamp.
pub fn jsonl(cfg: &RunConfig, records: &[Record]) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut s = json!({ "config_hash": cfg.hash, "timestamp": stamp, "checks": cfg.checks }).to_string();
    s.push('\n');
    for r in records {
        let line = json!({ "config_hash": cfg.hash, "check": r.check, "tag": r.tag, "passed": r.passed, "result": r.body });
        s.push_str(&line.to_string());
        s.push('\n');
    }
    s
}

pub fn csv(cfg: &RunConfig, records: &[Record]) -> String {
    let mut s = format!("# config_hash={}\ncheck,tag,passed,value\n", cfg.hash);
    for r in records {
        let v = r.value.map_or(String::new(), |v| format!("{v:e}"));
        let _ = writeln!(s, "{},{},{},{v}", r.check, r.tag, r.passed);
    }
    s
}

/// Two-column gnuplot data.
pub fn dat(hash: &str, comment: &str, x: &[f64], y: &[f64]) -> String {
    let mut s = format!("# config_hash={hash}\n# {comment}\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{a:e} {b:e}");
    }
    s
}

fn file_name(tag: &str) -> String {
    tag.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Writes `report.jsonl`, `summary.csv` and one `.dat` per growth fit.
pub fn write_all(dir: &Path, cfg: &RunConfig, records: &[Record]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("report.jsonl"), dir.join("summary.csv")];
    fs::write(&written[0], jsonl(cfg, records))?;
    fs::write(&written[1], csv(cfg, records))?;
    for r in records {
        if let Some((x, y)) = &r.series {
            let path = dir.join(format!("{}.dat", file_name(&r.tag)));
            fs::write(&path, dat(&cfg.hash, &format!("{}: ||w||_A  sup ||Tf||/||f||", r.tag), x, y))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Concatenates the records of several reports; refuses reports with
/// different config hashes.
pub fn merge_reports(reports: &[String]) -> Result<String, String> {
    let mut hash: Option<String> = None;
    let mut merged = String::new();
    for (i, text) in reports.iter().enumerate() {
        let mut lines = text.lines();
        let header: serde_json::Value =
            serde_json::from_str(lines.next().ok_or(format!("report {i} is empty"))?).map_err(|e| format!("report {i}: {e}"))?;
        let h = header["config_hash"].as_str().ok_or(format!("report {i} has no config hash"))?.to_string();
        match &hash {
            None => {
                merged.push_str(&json!({ "config_hash": h, "merged": reports.len() }).to_string());
                merged.push('\n');
                hash = Some(h);
            }
            Some(first) if *first != h => return Err(format!("report {i} has config hash {h}, expected {first}")),
            Some(_) => {}
        }
        for line in lines {
            merged.push_str(line);
            merged.push('\n');
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_has_a_hash_header() {
        let cfg = RunConfig::parse("").unwrap();
        let text = jsonl(&cfg, &[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains(&cfg.hash));
        assert!(csv(&cfg, &[]).starts_with(&format!("# config_hash={}", cfg.hash)));
    }

    #[test]
    fn merge_checks_hashes() {
        let a = RunConfig::parse("N = 64").unwrap();
        let b = RunConfig::parse("N = 128").unwrap();
        let (ra, rb) = (jsonl(&a, &[]), jsonl(&b, &[]));
        assert!(merge_reports(&[ra.clone(), ra.clone()]).is_ok());
        assert!(merge_reports(&[ra, rb]).unwrap_err().contains("config hash"));
    }
}
