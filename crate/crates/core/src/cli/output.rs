use std::fmt::Write as _;
use std::path::Path;

use super::{io_err, CliError, Format};
use crate::verifier::{to_canonical_json, RatioReport};

pub const SUMMARY_HEADER: &str = "id,family,mode,statistic,n_parts,ratio,ratio_se,lower_floor,floor_ok,band_lo,band_hi,band_ok,jensen_ok,delta2_ok,sweep_ok,pass";

const REPORT_HEADER: &str =
    "id,family,mode,statistic,n_parts,seed,scenario_hash,lhs,lhs_se,rhs_head,rhs_norm_term,rhs_total,ratio,ratio_se,statistic_mean,jensen_ok,delta2_ok,floor_ok,band_ok,pass";

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_bool(b: Option<bool>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn tag<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn summary_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        let [lo, hi] = r.band.map_or([None, None], |[l, h]| [Some(l), Some(h)]);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            field(&r.id),
            r.family.as_str(),
            tag(&r.mode),
            tag(&r.statistic),
            r.n_parts,
            num(r.ratio),
            num(r.ratio_se),
            opt_num(r.lower_floor),
            r.floor_ok,
            opt_num(lo),
            opt_num(hi),
            opt_bool(r.band_ok),
            r.jensen_ok,
            r.delta2_ok,
            opt_bool(r.sweep.as_ref().map(|s| s.ok)),
            r.pass
        )
        .unwrap();
    }
    out
}

fn report_csv(r: &RatioReport) -> String {
    format!(
        "{REPORT_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        field(&r.id),
        r.family.as_str(),
        tag(&r.mode),
        tag(&r.statistic),
        r.n_parts,
        r.seed,
        r.scenario_hash,
        num(r.lhs),
        num(r.lhs_se),
        num(r.rhs_head),
        num(r.rhs_norm_term),
        num(r.rhs_total),
        num(r.ratio),
        num(r.ratio_se),
        num(r.statistic_mean),
        r.jensen_ok,
        r.delta2_ok,
        r.floor_ok,
        opt_bool(r.band_ok),
        r.pass
    )
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Single writer for all run outputs, called after every scenario finished.
pub(super) fn write_outputs(out: &Path, format: Format, reports: &[RatioReport], manifest: &str) -> Result<(), CliError> {
    let reports_dir = out.join("reports");
    let plot_dir = out.join("plotdata");
    for d in [out, reports_dir.as_path(), plot_dir.as_path()] {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    for r in reports {
        match format {
            Format::Json => write(&reports_dir.join(format!("{}.json", r.id)), &to_canonical_json(r))?,
            Format::Csv => write(&reports_dir.join(format!("{}.csv", r.id)), &report_csv(r))?,
        }
        if let Some(sweep) = &r.sweep {
            let mut csv = String::from("a,n,ratio,ratio_se\n");
            for row in &sweep.rows {
                writeln!(csv, "{},{},{},{}", num(row.a), row.n, num(row.ratio), num(row.ratio_se)).unwrap();
            }
            write(&plot_dir.join(format!("{}.csv", r.id)), &csv)?;
        }
    }
    write(&out.join("summary.csv"), &summary_csv(reports))?;
    write(&out.join("manifest.json"), manifest)
}
