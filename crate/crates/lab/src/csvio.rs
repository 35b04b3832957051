//! CSV writers and readers; headers are the record field names.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io_err, LabResult};

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> LabResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // serde headers come from the first row; write them by hand otherwise.
        w.write_record(header)?;
    } else {
        for r in rows {
            w.serialize(r)?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> LabResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}
