//! CSV and float formatting helpers shared by all subcommands.

use std::io::Write;
use std::path::Path;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_f(v),
        None => "NA".to_string(),
    }
}

/// Write a CSV file with a single header line and pre-rendered rows.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> std::io::Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.as_ref())?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            1.0,
            -0.1,
            std::f64::consts::PI,
            1e-300,
            -7.234_567_890_123_456e17,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f(f64::NAN), "NA");
        assert_eq!(fmt_opt(None), "NA");
    }
}
