//! File ingestion and result serialization.
//!
//! Two CSV formats and a JSON summary schema form the tool's public
//! contract. Writers are byte-stable for identical inputs: fixed field
//! order, `\n` line endings, and floats at 12 significant digits.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::IoError;
use crate::graph::{DynamicNetwork, Partition};
use crate::greedy::RunRecord;
use crate::metrics::SummaryReport;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const RUN_LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct EdgeListOptions {
    /// Input indices start at 1 instead of 0.
    pub one_based: bool,
    pub directed: bool,
    /// Inferred from the data maxima when absent.
    pub num_nodes: Option<usize>,
    pub num_times: Option<usize>,
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File { path: path.display().to_string(), source }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Malformed { path: path.display().to_string(), line, message: message.into() }
}

fn parse_field(
    path: &Path,
    line: usize,
    name: &str,
    raw: Option<&str>,
    one_based: bool,
) -> Result<usize, IoError> {
    let raw = raw.ok_or_else(|| malformed(path, line, format!("missing field `{name}`")))?;
    let value: usize = raw
        .trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("field `{name}` is not a non-negative integer: `{raw}`")))?;
    if one_based {
        value
            .checked_sub(1)
            .ok_or_else(|| malformed(path, line, format!("field `{name}` is 0 in one-based input")))
    } else {
        Ok(value)
    }
}

/// Reads the `t,i,j` edge-list CSV. Dimensions not supplied in `opts` are
/// inferred from the maxima seen in the file.
pub fn read_edge_list(path: &Path, opts: &EdgeListOptions) -> Result<DynamicNetwork, IoError> {
    let file = fs::File::open(path).map_err(|e| file_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(file_err(path, e)),
        None => return Err(malformed(path, 1, "empty file, expected header `t,i,j`")),
    };
    if header.trim_end_matches('\r') != "t,i,j" {
        return Err(malformed(path, 1, format!("expected header `t,i,j`, got `{header}`")));
    }

    let mut rows: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| file_err(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = parse_field(path, line_no, "t", fields.next(), opts.one_based)?;
        let i = parse_field(path, line_no, "i", fields.next(), opts.one_based)?;
        let j = parse_field(path, line_no, "j", fields.next(), opts.one_based)?;
        if fields.next().is_some() {
            return Err(malformed(path, line_no, "expected exactly three fields"));
        }
        if i == j {
            return Err(malformed(path, line_no, format!("self-edge ({i},{i}) is not allowed")));
        }
        rows.push((line_no, t, i, j));
    }

    let num_times = match opts.num_times {
        Some(v) => v,
        None => match rows.iter().map(|r| r.1).max() {
            Some(m) => m + 1,
            None => return Err(malformed(path, 1, "cannot infer num_times from an empty edge list; pass it explicitly")),
        },
    };
    let num_nodes = match opts.num_nodes {
        Some(v) => v,
        None => match rows.iter().map(|r| r.2.max(r.3)).max() {
            Some(m) => m + 1,
            None => return Err(malformed(path, 1, "cannot infer num_nodes from an empty edge list; pass it explicitly")),
        },
    };

    for &(line_no, t, i, j) in &rows {
        if t >= num_times {
            return Err(malformed(path, line_no, format!("time {t} exceeds declared num_times {num_times}")));
        }
        if i >= num_nodes || j >= num_nodes {
            return Err(malformed(path, line_no, format!("node index exceeds declared num_nodes {num_nodes}")));
        }
    }

    let triples: Vec<(usize, usize, usize)> = rows.iter().map(|r| (r.1, r.2, r.3)).collect();
    DynamicNetwork::from_edge_list(&triples, num_nodes, num_times, opts.directed)
        .map_err(|e| IoError::Graph { path: path.display().to_string(), source: e })
}

/// Writes the canonical `t,i,j` CSV (sorted, deduplicated edges).
pub fn write_edge_list(path: &Path, net: &DynamicNetwork) -> Result<(), IoError> {
    let mut out = String::from("t,i,j\n");
    for (t, i, j) in net.edge_list() {
        out.push_str(&format!("{t},{i},{j}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Writes the `t,node,group` CSV, one row per (frame, node).
pub fn write_partition(path: &Path, p: &Partition) -> Result<(), IoError> {
    let mut out = String::from("t,node,group\n");
    for t in 0..p.num_times() {
        for i in 0..p.num_nodes() {
            out.push_str(&format!("{t},{i},{}\n", p.label(t, i)));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a `t,node,group` CSV back into a partition. Every (frame, node)
/// pair must appear exactly once; capacity is the largest group plus one.
pub fn read_partition(path: &Path) -> Result<Partition, IoError> {
    let file = fs::File::open(path).map_err(|e| file_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(file_err(path, e)),
        None => return Err(malformed(path, 1, "empty file, expected header `t,node,group`")),
    };
    if header.trim_end_matches('\r') != "t,node,group" {
        return Err(malformed(path, 1, format!("expected header `t,node,group`, got `{header}`")));
    }
    let mut rows: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| file_err(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = parse_field(path, line_no, "t", fields.next(), false)?;
        let node = parse_field(path, line_no, "node", fields.next(), false)?;
        let group = parse_field(path, line_no, "group", fields.next(), false)?;
        if fields.next().is_some() {
            return Err(malformed(path, line_no, "expected exactly three fields"));
        }
        rows.push((line_no, t, node, group));
    }
    if rows.is_empty() {
        return Err(malformed(path, 1, "partition file has no data rows"));
    }
    let num_times = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let num_nodes = rows.iter().map(|r| r.2).max().unwrap() + 1;
    let k_up = rows.iter().map(|r| r.3).max().unwrap() + 1;
    let mut labels: Vec<Option<u32>> = vec![None; num_times * num_nodes];
    for &(line_no, t, node, group) in &rows {
        let slot = &mut labels[t * num_nodes + node];
        if slot.is_some() {
            return Err(malformed(path, line_no, format!("duplicate entry for (t={t}, node={node})")));
        }
        *slot = Some(group as u32);
    }
    for t in 0..num_times {
        for node in 0..num_nodes {
            if labels[t * num_nodes + node].is_none() {
                return Err(IoError::MissingEntry {
                    path: path.display().to_string(),
                    time: t,
                    node,
                });
            }
        }
    }
    let flat: Vec<u32> = labels.into_iter().map(|l| l.unwrap()).collect();
    Partition::from_flat(flat, num_times, num_nodes, k_up)
        .map_err(|e| IoError::Graph { path: path.display().to_string(), source: e })
}

/// Formats a float with 12 significant digits, enough to round-trip
/// objective comparisons at the testing tolerances. Non-finite values
/// become JSON strings.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else if x > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

fn json_f64_array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", items.join(","))
}

fn json_usize_array(xs: &[usize]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

/// Renders the summary document; field names and order are fixed.
pub fn format_summary_json(report: &SummaryReport) -> String {
    let sizes: Vec<String> = report.group_sizes.iter().map(|r| json_usize_array(r)).collect();
    let trans: Vec<String> = report.transition_means.iter().map(|r| json_f64_array(r)).collect();
    let conn: Vec<String> = report
        .connection_means
        .iter()
        .map(|row| {
            let items: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Some(x) => fmt_f64(*x),
                    None => "null".to_string(),
                })
                .collect();
            format!("[{}]", items.join(","))
        })
        .collect();
    format!(
        concat!(
            "{{\n",
            "  \"schema_version\": {},\n",
            "  \"nonempty_per_frame\": {},\n",
            "  \"group_sizes\": [{}],\n",
            "  \"avg_out_degree\": {},\n",
            "  \"avg_in_degree\": {},\n",
            "  \"transition_means\": [{}],\n",
            "  \"connection_means\": [{}],\n",
            "  \"icl\": {{\"log_lik\": {}, \"log_prior\": {}, \"total\": {}}}\n",
            "}}\n"
        ),
        SUMMARY_SCHEMA_VERSION,
        json_usize_array(&report.nonempty_per_frame),
        sizes.join(","),
        json_f64_array(&report.avg_out_degree),
        json_f64_array(&report.avg_in_degree),
        trans.join(","),
        conn.join(","),
        fmt_f64(report.icl.log_lik),
        fmt_f64(report.icl.log_prior),
        fmt_f64(report.icl.total),
    )
}

pub fn write_summary_json(path: &Path, report: &SummaryReport) -> Result<(), IoError> {
    write_atomic(path, format_summary_json(report).as_bytes())
}

/// Renders the per-run fit log.
pub fn format_run_log(base_seed: u64, restarts: usize, runs: &[RunRecord]) -> String {
    let entries: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                concat!(
                    "    {{\"strategy\": \"{}\", \"restart\": {}, \"seed\": {}, ",
                    "\"k_up\": {}, \"icl_total\": {}, \"num_groups\": {}, ",
                    "\"sweeps\": {}, \"moves_accepted\": {}, \"merges_accepted\": {}, ",
                    "\"wall_secs\": {}}}"
                ),
                r.strategy,
                r.restart,
                r.seed,
                r.k_up,
                fmt_f64(r.icl_total),
                r.num_groups,
                r.sweeps,
                r.moves_accepted,
                r.merges_accepted,
                fmt_f64(r.wall_secs),
            )
        })
        .collect();
    let best = runs
        .iter()
        .max_by(|a, b| a.icl_total.partial_cmp(&b.icl_total).unwrap_or(std::cmp::Ordering::Less));
    let best_line = match best {
        Some(r) => format!(
            "  \"best\": {{\"strategy\": \"{}\", \"restart\": {}, \"icl_total\": {}}},\n",
            r.strategy,
            r.restart,
            fmt_f64(r.icl_total)
        ),
        None => String::new(),
    };
    format!(
        "{{\n  \"schema_version\": {RUN_LOG_SCHEMA_VERSION},\n  \"base_seed\": {base_seed},\n  \"restarts\": {restarts},\n{best_line}  \"runs\": [\n{}\n  ]\n}}\n",
        entries.join(",\n"),
    )
}

pub fn write_run_log(
    path: &Path,
    base_seed: u64,
    restarts: usize,
    runs: &[RunRecord],
) -> Result<(), IoError> {
    write_atomic(path, format_run_log(base_seed, restarts, runs).as_bytes())
}

/// Writes the per-frame non-empty-group counts as `t,k` CSV.
pub fn write_kt_csv(path: &Path, kt: &[usize]) -> Result<(), IoError> {
    let mut out = String::from("t,k\n");
    for (t, k) in kt.iter().enumerate() {
        out.push_str(&format!("{t},{k}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Writes through a sibling temp file and renames, so a failed write never
/// leaves a partial output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| file_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| file_err(path, e))
}
