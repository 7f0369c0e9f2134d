use std::io::Read;

use crate::error::{Error, Result};

/// Reads rows of two numeric columns, skipping a non-numeric first row.
pub(crate) fn read_two_columns<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidData(format!(
                "row {} has {} columns, expected 2",
                line + 1,
                rec.len()
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if line == 0 => continue,
            _ => {
                return Err(Error::InvalidData(format!(
                    "row {} is not numeric: {:?}",
                    line + 1,
                    rec
                )))
            }
        }
    }
    Ok((xs, ys))
}
