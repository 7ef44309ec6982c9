//! Small helpers shared by the CSV writers and readers.

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Split a data line into trimmed fields.
pub(crate) fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

pub(crate) fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Csv {
        line,
        msg: format!("`{field}` is not a number"),
    })
}

/// Check that the first line equals the expected header.
pub(crate) fn expect_header<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    columns: &[&str],
) -> Result<()> {
    let header = lines.next().ok_or(Error::Csv {
        line: 1,
        msg: "missing header row".into(),
    })?;
    let got = fields(header);
    if got != columns {
        return Err(Error::Csv {
            line: 1,
            msg: format!("expected header `{}`, found `{header}`", columns.join(",")),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567, 0.0] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
