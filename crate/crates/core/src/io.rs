//! CSV plumbing shared by the CLI and the library types.

use std::fs::File;
use std::path::Path;

use crate::error::Result;

/// Fixed-point decimal with 17 significant digits, enough to round-trip any
/// `f64`. Zero prints as `0`; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // log10 can land one below the true exponent near powers of ten.
    let digits = s
        .bytes()
        .filter(u8::is_ascii_digit)
        .skip_while(|&b| b == b'0')
        .count();
    if digits > 17 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        s
    }
}

/// Writes a header row followed by `rows`.
pub fn write_csv<P, H, R>(path: P, header: &[H], rows: impl IntoIterator<Item = R>) -> Result<()>
where
    P: AsRef<Path>,
    H: AsRef<str>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
