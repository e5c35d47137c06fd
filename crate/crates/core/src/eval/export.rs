use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{EvalError, EvalReport, RocCurve, RocPoint};

/// One line of a report CSV; `fold` is `None` on the mean row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub fold: Option<usize>,
    pub auc1: f64,
    pub auc2: Option<f64>,
}

impl EvalReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.folds
            .iter()
            .map(|f| ReportRow {
                fold: Some(f.fold),
                auc1: f.auc1,
                auc2: f.auc2,
            })
            .chain(std::iter::once(ReportRow {
                fold: None,
                auc1: self.mean_auc1,
                auc2: self.mean_auc2,
            }))
            .collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row_fields(r: &ReportRow) -> String {
    let fold = r.fold.map_or_else(|| "mean".to_string(), |f| f.to_string());
    format!("{fold},{},{}", r.auc1, opt(r.auc2))
}

pub fn write_roc_csv<W: Write>(curve: &RocCurve, mut w: W) -> io::Result<()> {
    writeln!(w, "threshold,fpr,tpr")?;
    for p in &curve.points {
        writeln!(w, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    w.flush()
}

pub fn export_roc_csv(curve: &RocCurve, path: &Path) -> Result<(), EvalError> {
    Ok(write_roc_csv(curve, BufWriter::new(File::create(path)?))?)
}

pub fn write_report<W: Write>(report: &EvalReport, mut w: W) -> io::Result<()> {
    writeln!(w, "fold,auc1,auc2")?;
    for r in report.rows() {
        writeln!(w, "{}", row_fields(&r))?;
    }
    w.flush()
}

pub fn export_report(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    Ok(write_report(report, BufWriter::new(File::create(path)?))?)
}

/// Several methods in one file: `method,fold,auc1,auc2`, each method's
/// folds followed by its mean row.
pub fn write_combined_report<W: Write>(reports: &[EvalReport], mut w: W) -> io::Result<()> {
    writeln!(w, "method,fold,auc1,auc2")?;
    for rep in reports {
        for r in rep.rows() {
            writeln!(w, "{},{}", rep.method, row_fields(&r))?;
        }
    }
    w.flush()
}

fn bad(line: usize, reason: impl Into<String>) -> EvalError {
    EvalError::Format {
        line,
        reason: reason.into(),
    }
}

fn num(s: &str, line: usize) -> Result<f64, EvalError> {
    s.trim().parse().map_err(|_| bad(line, format!("`{s}` is not a number")))
}

fn data_lines<R: BufRead>(r: R, header: &str) -> Result<Vec<(usize, String)>, EvalError> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == header => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(bad(1, format!("expected header `{header}`"))),
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let l = l?;
        if !l.trim().is_empty() {
            out.push((i + 1, l));
        }
    }
    Ok(out)
}

pub fn parse_roc_csv<R: BufRead>(r: R) -> Result<Vec<RocPoint>, EvalError> {
    data_lines(r, "threshold,fpr,tpr")?
        .into_iter()
        .map(|(ln, l)| match l.split(',').collect::<Vec<_>>().as_slice() {
            [t, f, p] => Ok(RocPoint {
                threshold: num(t, ln)?,
                fpr: num(f, ln)?,
                tpr: num(p, ln)?,
            }),
            _ => Err(bad(ln, "expected 3 fields")),
        })
        .collect()
}

pub fn read_roc_csv(path: &Path) -> Result<Vec<RocPoint>, EvalError> {
    parse_roc_csv(BufReader::new(File::open(path)?))
}

fn parse_row(fields: &[&str], ln: usize) -> Result<ReportRow, EvalError> {
    let [fold, a1, a2] = fields else {
        return Err(bad(ln, "expected fold,auc1,auc2"));
    };
    let fold = match *fold {
        "mean" => None,
        f => Some(f.parse().map_err(|_| bad(ln, format!("bad fold `{f}`")))?),
    };
    let auc2 = if a2.is_empty() { None } else { Some(num(a2, ln)?) };
    Ok(ReportRow {
        fold,
        auc1: num(a1, ln)?,
        auc2,
    })
}

pub fn parse_report<R: BufRead>(r: R) -> Result<Vec<ReportRow>, EvalError> {
    data_lines(r, "fold,auc1,auc2")?
        .into_iter()
        .map(|(ln, l)| parse_row(&l.split(',').collect::<Vec<_>>(), ln))
        .collect()
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>, EvalError> {
    parse_report(BufReader::new(File::open(path)?))
}

/// Reads a combined report back as `(method, row)` pairs.
pub fn parse_combined_report<R: BufRead>(r: R) -> Result<Vec<(String, ReportRow)>, EvalError> {
    data_lines(r, "method,fold,auc1,auc2")?
        .into_iter()
        .map(|(ln, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            match fields.split_first() {
                Some((m, rest)) => Ok((m.to_string(), parse_row(rest, ln)?)),
                None => Err(bad(ln, "empty line")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{roc_auc, FoldSpec, FoldFitLog, FoldResult, Method};
    use super::*;

    fn report(auc2: bool) -> EvalReport {
        let fold = |i: usize, a1: f64, a2: f64| FoldResult {
            fold: i,
            auc1: a1,
            auc2: auc2.then_some(a2),
            hyperparameter: None,
            fit_log: FoldFitLog::default(),
            test_scores: Vec::new(),
            ranker: None,
        };
        EvalReport {
            method: Method::Proposed,
            folds: vec![fold(0, 0.75, 0.6123456789012345), fold(1, 1.0, 0.7)],
            mean_auc1: 0.875,
            mean_auc2: auc2.then_some(0.65617283945061725),
            fold_spec: FoldSpec {
                k: 2,
                seed: 0,
                test_ids: vec![],
            },
            config_echo: String::new(),
        }
    }

    #[test]
    fn perfect_curve_csv() {
        let c = roc_auc(&[1.0, 0.0], &[true, false]).unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "inf,0,0");
        assert_eq!(lines[3], "0,1,1");
        assert_eq!(parse_roc_csv(buf.as_slice()).unwrap(), c.points);
    }

    #[test]
    fn report_rows_and_round_trip() {
        for with_auc2 in [true, false] {
            let rep = report(with_auc2);
            let mut buf = Vec::new();
            write_report(&rep, &mut buf).unwrap();
            let rows = parse_report(buf.as_slice()).unwrap();
            assert_eq!(rows.len(), 3);
            assert_eq!(rows[2].fold, None);
            assert_eq!(rows, rep.rows());
        }
    }

    #[test]
    fn combined_report_sections() {
        let mut other = report(true);
        other.method = Method::Anomaly;
        let mut buf = Vec::new();
        write_combined_report(&[report(true), other], &mut buf).unwrap();
        let rows = parse_combined_report(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].0, "proposed");
        assert_eq!(rows[5].0, "anomaly");
        assert_eq!(rows[5].1.fold, None);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = roc_auc(&[0.7, 0.4, 0.4, 0.1], &[true, false, true, false]).unwrap();
        let p = dir.path().join("roc.csv");
        export_roc_csv(&c, &p).unwrap();
        assert_eq!(read_roc_csv(&p).unwrap(), c.points);
        let rp = dir.path().join("report.csv");
        export_report(&report(true), &rp).unwrap();
        assert_eq!(read_report(&rp).unwrap(), report(true).rows());
    }
}
