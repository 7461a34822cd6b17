//! File formats: counts/states CSV ingestion with validation, label tables,
//! and provenance-stamped output writing.

use std::path::Path;

use spurt_core::TacticLabels;

use crate::config::{CliError, RunConfig};

/// Provenance block prepended to every CSV output.
pub fn provenance(config: &RunConfig, seed: u64) -> String {
    format!(
        "# tool-version: spurt {}\n# seed: {}\n# config-hash: {}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        seed,
        config.hash(),
        config.canonical_json(),
    )
}

/// Provenance fields for JSON outputs.
pub fn provenance_json(config: &RunConfig, seed: u64) -> serde_json::Value {
    serde_json::json!({
        "tool_version": format!("spurt {}", env!("CARGO_PKG_VERSION")),
        "seed": seed,
        "config_hash": config.hash(),
        "config": serde_json::from_str::<serde_json::Value>(&config.canonical_json()).unwrap(),
    })
}

/// Write a fully assembled output in one step so failures leave no partial
/// file behind.
pub fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

/// Days since the civil epoch for an ISO-8601 date; used only to check
/// that dated inputs are contiguous.
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = (y - era * 400) as u64;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + u64::from(doy);
    era * 146_097 + doe as i64 - 719_468
}

fn parse_date(s: &str, path: &Path, line: usize) -> Result<i64, CliError> {
    let bad = || {
        CliError::Data(format!(
            "{} line {line}: '{s}' is not an ISO-8601 date",
            path.display()
        ))
    };
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return Err(bad());
    }
    let y: i64 = parts[0].parse().map_err(|_| bad())?;
    let m: u32 = parts[1].parse().map_err(|_| bad())?;
    let d: u32 = parts[2].parse().map_err(|_| bad())?;
    if !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return Err(bad());
    }
    Ok(days_from_civil(y, m, d))
}

/// Read a daily count series. Two shapes are accepted: one nonnegative
/// integer per line, or `date,count` rows with contiguous daily ISO dates.
/// A leading `count` or `date,count` header and `#` comments are skipped.
pub fn read_counts(path: &Path) -> Result<Vec<u32>, CliError> {
    let mut rows = read_lines(path)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let header = rows[0].1.to_ascii_lowercase().replace(' ', "");
    if header == "count" || header == "date,count" {
        rows.remove(0);
    }
    let mut counts = Vec::with_capacity(rows.len());
    let mut prev_day: Option<i64> = None;
    let dated = rows.first().map(|(_, l)| l.contains(',')).unwrap_or(false);
    for (line, text) in &rows {
        let count_str = if dated {
            let Some((date, count)) = text.split_once(',') else {
                return Err(CliError::Data(format!(
                    "{} line {line}: expected date,count",
                    path.display()
                )));
            };
            let day = parse_date(date.trim(), path, *line)?;
            if let Some(prev) = prev_day {
                if day != prev + 1 {
                    return Err(CliError::Data(format!(
                        "{} line {line}: date {} breaks daily continuity",
                        path.display(),
                        date.trim()
                    )));
                }
            }
            prev_day = Some(day);
            count.trim()
        } else {
            if text.contains(',') {
                return Err(CliError::Data(format!(
                    "{} line {line}: mixed plain and dated rows",
                    path.display()
                )));
            }
            text.as_str()
        };
        let count: u32 = count_str.parse().map_err(|_| {
            CliError::Data(format!(
                "{} line {line}: '{count_str}' is not a nonnegative integer count",
                path.display()
            ))
        })?;
        counts.push(count);
    }
    Ok(counts)
}

/// Read a 0/1 state sequence (one per line, comments skipped).
pub fn read_states(path: &Path) -> Result<Vec<u8>, CliError> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| match text.as_str() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(CliError::Data(format!(
                "{} line {line}: state '{other}' is not 0 or 1",
                path.display()
            ))),
        })
        .collect()
}

pub const LABEL_HEADER: &str = "window,resilient,coordinating,both,active";

pub fn labels_csv(labels: &[TacticLabels]) -> String {
    let mut out = String::from(LABEL_HEADER);
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            u8::from(l.resilient),
            u8::from(l.coordinating),
            u8::from(l.both),
            u8::from(l.active)
        ));
    }
    out
}

/// Read a label table written by `classify`.
pub fn read_labels(path: &Path) -> Result<Vec<TacticLabels>, CliError> {
    let mut rows = read_lines(path)?;
    if rows.first().map(|(_, l)| l.as_str()) == Some(LABEL_HEADER) {
        rows.remove(0);
    }
    rows.into_iter()
        .map(|(line, text)| {
            let fields: Vec<&str> = text.split(',').collect();
            let bad = || {
                CliError::Data(format!(
                    "{} line {line}: expected '{}'",
                    path.display(),
                    LABEL_HEADER
                ))
            };
            if fields.len() != 5 {
                return Err(bad());
            }
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad()),
            };
            Ok(TacticLabels {
                resilient: flag(fields[1])?,
                coordinating: flag(fields[2])?,
                both: flag(fields[3])?,
                active: flag(fields[4])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn plain_counts_with_comments() {
        let f = write_tmp("# seed: 1\n0\n3\n\n2\n");
        assert_eq!(read_counts(f.path()).unwrap(), vec![0, 3, 2]);
    }

    #[test]
    fn dated_counts_must_be_contiguous() {
        let f = write_tmp("date,count\n2001-02-27,1\n2001-02-28,0\n2001-03-01,2\n");
        assert_eq!(read_counts(f.path()).unwrap(), vec![1, 0, 2]);
        let f = write_tmp("2001-02-27,1\n2001-03-01,2\n");
        let err = read_counts(f.path()).unwrap_err();
        assert!(err.to_string().contains("continuity"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bad_count_names_line() {
        let f = write_tmp("0\n1\nx\n");
        let err = read_counts(f.path()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn labels_round_trip() {
        let labels = vec![
            TacticLabels {
                resilient: true,
                coordinating: false,
                both: false,
                active: true,
            },
            TacticLabels::default(),
        ];
        let f = write_tmp(&labels_csv(&labels));
        assert_eq!(read_labels(f.path()).unwrap(), labels);
    }
}
