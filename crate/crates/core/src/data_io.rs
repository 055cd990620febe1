//! AE incidence tables in, analysis reports and plot tables out.
//!
//! Input is delimiter-separated text (comma by default, tab on request) with
//! a header row naming the columns `sa`, `ae`, `events_1`, `subjects_1`,
//! `events_2`, `subjects_2`. Extra columns are ignored. Comment lines start
//! with `#`; comments of the form `# arm_1 = <label>` / `# arm_2 = <label>`
//! carry optional arm labels.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::engine::{AeRow, Comparison, CrossSaMethod, SaGroup, SaRow, SafeConfig, SafeResult};
use crate::stats::{two_proportion_pvalue, ArmCounts, Sidedness};
use crate::{Result, SafeError};

pub const REQUIRED_COLUMNS: [&str; 6] = ["sa", "ae", "events_1", "subjects_1", "events_2", "subjects_2"];

/// p-values are floored here before taking log10 for plotting.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceRow {
    pub sa_id: String,
    pub ae_id: String,
    pub arm1: ArmCounts,
    pub arm2: ArmCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SafetyDataset {
    pub arm_labels: [Option<String>; 2],
    pub rows: Vec<IncidenceRow>,
}

impl SafetyDataset {
    /// Number of distinct synergy areas.
    pub fn sa_count(&self) -> usize {
        self.rows.iter().map(|r| r.sa_id.as_str()).collect::<HashSet<_>>().len()
    }
}

fn parse_err(line: u64, reason: impl Into<String>) -> SafeError {
    SafeError::Parse { line, reason: reason.into() }
}

/// Reads and validates an incidence table.
pub fn parse_dataset<R: Read>(mut input: R, delimiter: Delimiter) -> Result<SafetyDataset> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        parse_err(line as u64, "input is not valid UTF-8")
    })?;

    let mut arm_labels = [None, None];
    let mut header_line = None;
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "arm_1" => arm_labels[0] = Some(value.trim().to_string()),
                    "arm_2" => arm_labels[1] = Some(value.trim().to_string()),
                    _ => {}
                }
            }
        } else if !trimmed.is_empty() && header_line.is_none() {
            header_line = Some(idx as u64 + 1);
        }
    }
    let header_line = header_line.ok_or_else(|| parse_err(1, "missing header row"))?;

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(header_line, format!("unreadable header: {e}")))?.clone();
    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(header_line, format!("missing required column `{name}`")))?;
    }

    let mut rows = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = |k: usize| -> Result<&str> {
            record
                .get(columns[k])
                .ok_or_else(|| parse_err(line, format!("missing value for `{}`", REQUIRED_COLUMNS[k])))
        };
        let count = |k: usize| -> Result<u64> {
            let raw = field(k)?;
            raw.parse::<u64>().map_err(|_| {
                parse_err(line, format!("`{}` must be a nonnegative integer, got `{raw}`", REQUIRED_COLUMNS[k]))
            })
        };
        let sa_id = field(0)?.to_string();
        let ae_id = field(1)?.to_string();
        if sa_id.is_empty() || ae_id.is_empty() {
            return Err(parse_err(line, "empty `sa` or `ae` label"));
        }
        let arm = |e: usize, n: usize, which: u8| -> Result<ArmCounts> {
            ArmCounts::new(count(e)?, count(n)?).map_err(|err| match err {
                SafeError::InvalidInput(msg) => parse_err(line, format!("arm {which}: {msg}")),
                other => other,
            })
        };
        let arm1 = arm(2, 3, 1)?;
        let arm2 = arm(4, 5, 2)?;
        if !seen.insert((sa_id.clone(), ae_id.clone())) {
            return Err(parse_err(line, format!("duplicate AE `{ae_id}` in synergy area `{sa_id}`")));
        }
        rows.push(IncidenceRow { sa_id, ae_id, arm1, arm2 });
    }
    if rows.is_empty() {
        return Err(parse_err(header_line, "no data rows"));
    }
    Ok(SafetyDataset { arm_labels, rows })
}

/// Serializes a dataset in the format read by [`parse_dataset`].
pub fn write_dataset(ds: &SafetyDataset, delimiter: Delimiter) -> Result<String> {
    let mut out = String::new();
    for (i, label) in ds.arm_labels.iter().enumerate() {
        if let Some(label) = label {
            let _ = writeln!(out, "# arm_{} = {label}", i + 1);
        }
    }
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter.byte()).from_writer(Vec::new());
    let csv_err = |e: csv::Error| SafeError::invalid(format!("cannot serialize dataset: {e}"));
    writer.write_record(REQUIRED_COLUMNS).map_err(csv_err)?;
    for r in &ds.rows {
        writer
            .write_record([
                r.sa_id.clone(),
                r.ae_id.clone(),
                r.arm1.events().to_string(),
                r.arm1.subjects().to_string(),
                r.arm2.events().to_string(),
                r.arm2.subjects().to_string(),
            ])
            .map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| SafeError::invalid(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output of UTF-8 fields is UTF-8"));
    Ok(out)
}

/// Raw p-values per AE, grouped by SA in order of first appearance.
pub fn dataset_to_groups(ds: &SafetyDataset, sidedness: Sidedness) -> Result<Vec<SaGroup>> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<SaGroup> = Vec::new();
    for row in &ds.rows {
        let p = two_proportion_pvalue(row.arm1, row.arm2, sidedness);
        let slot = *index.entry(row.sa_id.as_str()).or_insert_with(|| {
            groups.push(SaGroup { sa_id: row.sa_id.clone(), ae_ids: Vec::new(), raw_p: Vec::new() });
            groups.len() - 1
        });
        groups[slot].ae_ids.push(row.ae_id.clone());
        groups[slot].raw_p.push(p);
    }
    for g in &groups {
        g.validate()?;
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// One JSON object per line, tagged by `record`.
    Structured,
    #[default]
    Table,
}

/// Line record of the structured report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReportRecord {
    Config(SafeConfig),
    Sa(SaRow),
    Ae(AeRow),
    Warning { message: String },
}

/// Formats `x` with four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-3..5).contains(&exponent) {
        format!("{x:.3e}")
    } else {
        format!("{x:.*}", (3 - exponent).max(0) as usize)
    }
}

fn method_name(m: CrossSaMethod) -> &'static str {
    match m {
        CrossSaMethod::Bh => "BH",
        CrossSaMethod::By => "BY",
    }
}

fn json_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("report records serialize"));
    out.push('\n');
}

pub fn emit_report(result: &SafeResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut out = String::new();
            json_line(&mut out, &ReportRecord::Config(result.config));
            for sa in &result.per_sa {
                json_line(&mut out, &ReportRecord::Sa(sa.clone()));
            }
            for ae in &result.per_ae {
                json_line(&mut out, &ReportRecord::Ae(ae.clone()));
            }
            for w in &result.warnings {
                json_line(&mut out, &ReportRecord::Warning { message: w.clone() });
            }
            out
        }
        ReportFormat::Table => render_table(result),
    }
}

fn render_table(result: &SafeResult) -> String {
    let c = &result.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Synergy-area screening: l = {}, alpha = {}, within-SA Holm, cross-SA {}",
        c.l,
        c.alpha,
        method_name(c.cross_sa_method)
    );
    let _ = writeln!(out);

    let mut n_ae: HashMap<&str, usize> = HashMap::new();
    for ae in &result.per_ae {
        *n_ae.entry(ae.sa_id.as_str()).or_default() += 1;
    }
    let sa_w = result.per_sa.iter().map(|s| s.sa_id.chars().count()).max().unwrap_or(0).max(2);
    let _ = writeln!(out, "{:<sa_w$}  {:>5}  {:>3}  {:>10}  {:>10}  flag", "SA", "n_AE", "l", "SA p", "q-value");
    for s in &result.per_sa {
        let _ = writeln!(
            out,
            "{:<sa_w$}  {:>5}  {:>3}  {:>10}  {:>10}  {}",
            s.sa_id,
            n_ae.get(s.sa_id.as_str()).copied().unwrap_or(0),
            s.l,
            sig4(s.sa_pvalue),
            sig4(s.q_value),
            if s.flagged { "*" } else { "" }
        );
    }
    let flagged = result.per_sa.iter().filter(|s| s.flagged).count();
    let _ = writeln!(out, "\n{flagged} of {} synergy area(s) flagged (*)", result.per_sa.len());

    let _ = writeln!(out, "\nAE detail");
    let ae_w = result.per_ae.iter().map(|a| a.ae_id.chars().count()).max().unwrap_or(0).max(2);
    let _ = writeln!(out, "{:<sa_w$}  {:<ae_w$}  {:>10}  {:>10}", "SA", "AE", "raw p", "Holm p");
    for a in &result.per_ae {
        let _ = writeln!(
            out,
            "{:<sa_w$}  {:<ae_w$}  {:>10}  {:>10}",
            a.sa_id,
            a.ae_id,
            sig4(a.raw_p),
            sig4(a.holm_adjusted_p)
        );
    }
    if !result.warnings.is_empty() {
        let _ = writeln!(out, "\nWarnings");
        for w in &result.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

/// Rebuilds a result from its structured report.
pub fn parse_structured_report(text: &str) -> Result<SafeResult> {
    let mut config = None;
    let (mut per_sa, mut per_ae, mut warnings) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord = serde_json::from_str(line).map_err(|e| parse_err(idx as u64 + 1, e.to_string()))?;
        match record {
            ReportRecord::Config(c) => config = Some(c),
            ReportRecord::Sa(s) => per_sa.push(s),
            ReportRecord::Ae(a) => per_ae.push(a),
            ReportRecord::Warning { message } => warnings.push(message),
        }
    }
    let config = config.ok_or_else(|| parse_err(1, "missing config record"))?;
    Ok(SafeResult { per_ae, per_sa, config, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub sa_id: String,
    pub log10_p1: f64,
    pub log10_p2: f64,
    pub q_value: f64,
    pub flagged: bool,
}

/// Per-SA smallest and second-smallest Holm-adjusted p-values on a log10
/// scale, with the second-layer q-value and flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotTable {
    pub rows: Vec<PlotRow>,
    pub warnings: Vec<String>,
}

impl PlotTable {
    /// Tab-separated text with header `sa, log10_p1, log10_p2, q_value, flagged`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sa\tlog10_p1\tlog10_p2\tq_value\tflagged\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{:?}\t{:?}\t{:?}\t{}", r.sa_id, r.log10_p1, r.log10_p2, r.q_value, r.flagged);
        }
        out
    }
}

pub fn emit_plot_table(result: &SafeResult) -> PlotTable {
    let mut adjusted: HashMap<&str, Vec<f64>> = HashMap::new();
    for ae in &result.per_ae {
        adjusted.entry(ae.sa_id.as_str()).or_default().push(ae.holm_adjusted_p);
    }
    let log = |p: f64| p.max(LOG_FLOOR).log10();
    let mut warnings = Vec::new();
    let rows = result
        .per_sa
        .iter()
        .map(|sa| {
            let mut values = adjusted.get(sa.sa_id.as_str()).cloned().unwrap_or_default();
            values.sort_by(f64::total_cmp);
            let p1 = values.first().copied().unwrap_or(1.0);
            let p2 = values.get(1).copied().unwrap_or_else(|| {
                warnings.push(format!(
                    "synergy area `{}` has fewer than 2 AE variables; its second adjusted p-value is shown as 1",
                    sa.sa_id
                ));
                1.0
            });
            PlotRow {
                sa_id: sa.sa_id.clone(),
                log10_p1: log(p1),
                log10_p2: log(p2),
                q_value: sa.q_value,
                flagged: sa.flagged,
            }
        })
        .collect();
    PlotTable { rows, warnings }
}

/// Side-by-side record for one AE across the three methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub sa_id: String,
    pub ae_id: String,
    pub raw_p: f64,
    pub within_sa_holm_p: f64,
    pub safe_sa_q_value: f64,
    pub safe_sa_flagged: bool,
    pub holm_direct_p: f64,
    pub holm_direct_flagged: bool,
    pub bh_direct_q: f64,
    pub bh_direct_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub sa_id: String,
    pub safe_q_value: f64,
    pub safe_flagged: bool,
    pub holm_direct_flagged_aes: usize,
    pub bh_direct_flagged_aes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ComparisonRecord {
    Sa(ComparisonSummary),
    Ae(ComparisonRow),
}

pub fn comparison_records(cmp: &Comparison) -> Vec<ComparisonRecord> {
    let by_sa: HashMap<&str, &SaRow> = cmp.safe.per_sa.iter().map(|s| (s.sa_id.as_str(), s)).collect();
    let rows: Vec<ComparisonRow> = cmp
        .safe
        .per_ae
        .iter()
        .zip(&cmp.holm_direct.per_ae)
        .zip(&cmp.bh_direct.per_ae)
        .map(|((ae, holm), bh)| {
            let sa = by_sa[ae.sa_id.as_str()];
            ComparisonRow {
                sa_id: ae.sa_id.clone(),
                ae_id: ae.ae_id.clone(),
                raw_p: ae.raw_p,
                within_sa_holm_p: ae.holm_adjusted_p,
                safe_sa_q_value: sa.q_value,
                safe_sa_flagged: sa.flagged,
                holm_direct_p: holm.adjusted_or_q_value,
                holm_direct_flagged: holm.flagged,
                bh_direct_q: bh.adjusted_or_q_value,
                bh_direct_flagged: bh.flagged,
            }
        })
        .collect();
    let mut out: Vec<ComparisonRecord> = cmp
        .safe
        .per_sa
        .iter()
        .map(|sa| {
            let mine = rows.iter().filter(|r| r.sa_id == sa.sa_id);
            ComparisonRecord::Sa(ComparisonSummary {
                sa_id: sa.sa_id.clone(),
                safe_q_value: sa.q_value,
                safe_flagged: sa.flagged,
                holm_direct_flagged_aes: mine.clone().filter(|r| r.holm_direct_flagged).count(),
                bh_direct_flagged_aes: mine.filter(|r| r.bh_direct_flagged).count(),
            })
        })
        .collect();
    out.extend(rows.into_iter().map(ComparisonRecord::Ae));
    out
}

pub fn emit_comparison(cmp: &Comparison, format: ReportFormat) -> String {
    let records = comparison_records(cmp);
    let mut out = String::new();
    if format == ReportFormat::Structured {
        for r in &records {
            json_line(&mut out, r);
        }
        return out;
    }
    let _ = writeln!(
        out,
        "Method comparison at alpha = {}: synergy-area screening (l = 2, BH) vs direct Holm vs direct BH\n",
        cmp.holm_direct.alpha
    );
    let sa_w = cmp.safe.per_sa.iter().map(|s| s.sa_id.chars().count()).max().unwrap_or(0).max(2);
    let _ = writeln!(out, "{:<sa_w$}  {:>10}  {:>4}  {:>10}  {:>8}", "SA", "SAFE q", "flag", "Holm AEs", "BH AEs");
    for r in &records {
        if let ComparisonRecord::Sa(s) = r {
            let _ = writeln!(
                out,
                "{:<sa_w$}  {:>10}  {:>4}  {:>10}  {:>8}",
                s.sa_id,
                sig4(s.safe_q_value),
                if s.safe_flagged { "*" } else { "" },
                s.holm_direct_flagged_aes,
                s.bh_direct_flagged_aes
            );
        }
    }
    let flagged_aes: Vec<&ComparisonRow> = records
        .iter()
        .filter_map(|r| match r {
            ComparisonRecord::Ae(a) if a.safe_sa_flagged || a.holm_direct_flagged || a.bh_direct_flagged => Some(a),
            _ => None,
        })
        .collect();
    let _ = writeln!(out, "\nAE variables flagged by any method");
    if flagged_aes.is_empty() {
        let _ = writeln!(out, "(none)");
    } else {
        let ae_w = flagged_aes.iter().map(|a| a.ae_id.chars().count()).max().unwrap_or(0).max(2);
        let _ = writeln!(
            out,
            "{:<sa_w$}  {:<ae_w$}  {:>10}  {:>4}  {:>10}  {:>4}  {:>10}  {:>4}",
            "SA", "AE", "raw p", "SAFE", "Holm p", "Holm", "BH q", "BH"
        );
        let mark = |b: bool| if b { "*" } else { "" };
        for a in flagged_aes {
            let _ = writeln!(
                out,
                "{:<sa_w$}  {:<ae_w$}  {:>10}  {:>4}  {:>10}  {:>4}  {:>10}  {:>4}",
                a.sa_id,
                a.ae_id,
                sig4(a.raw_p),
                mark(a.safe_sa_flagged),
                sig4(a.holm_direct_p),
                mark(a.holm_direct_flagged),
                sig4(a.bh_direct_q),
                mark(a.bh_direct_flagged)
            );
        }
    }
    out
}
