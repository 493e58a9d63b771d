use std::io::Write;

use serde::Serialize;

use super::config::OutputFormat;
use crate::error::Result;

/// Writes `rows` as CSV with a header derived from the field names.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// CSV of `rows`, or JSON of `whole`.
pub fn write_table<R: Serialize, J: Serialize + ?Sized, W: Write>(
    format: OutputFormat,
    rows: &[R],
    whole: &J,
    w: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, w),
        OutputFormat::Json => write_json(whole, w),
    }
}
