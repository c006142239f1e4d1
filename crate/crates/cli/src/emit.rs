use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{config_error, Result};
use crate::record::{Row, RunRecord, Value, CSV_HEADER};

/// Long-format CSV of the record rows, header first.
pub fn write_csv<W: Write>(record: &RunRecord, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &record.rows {
        w.write_record([
            r.experiment.as_str(),
            &r.replicate.to_string(),
            &r.point,
            &r.metric,
            &r.value.render(),
            &r.error_kind,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(record: &RunRecord) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(record, &mut buf)?;
    Ok(buf)
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(config_error("unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let bad = || config_error(format!("malformed CSV row {:?}", rec));
        rows.push(Row {
            experiment: rec[0].to_string(),
            replicate: rec[1].parse().map_err(|_| bad())?,
            point: rec[2].to_string(),
            metric: rec[3].to_string(),
            value: Value::parse(&rec[4]).ok_or_else(bad)?,
            error_kind: rec[5].to_string(),
        });
    }
    Ok(rows)
}

pub fn write_summary<W: Write>(record: &RunRecord, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &record_summary(record))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Everything but the rows.
fn record_summary(record: &RunRecord) -> serde_json::Value {
    let mut v = serde_json::to_value(record).expect("record serialises");
    if let Some(m) = v.as_object_mut() {
        m.remove("rows");
    }
    v
}

/// Writes `<kind>.csv` and `<kind>.summary.json` into `dir`.
pub fn emit(record: &RunRecord, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    emit_as(record, dir, record.config.kind.name())
}

/// As [`emit`], with the file stem `stem`.
pub fn emit_as(record: &RunRecord, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.summary.json"));
    std::fs::write(&csv_path, csv_bytes(record)?)?;
    let mut buf = Vec::new();
    write_summary(record, &mut buf)?;
    std::fs::write(&json_path, buf)?;
    Ok((csv_path, json_path))
}
