//! Deterministic report serialization: JSON with sorted keys and fixed float
//! formatting, and fixed-column CSV.

use std::io::{self, Write};

use anyhow::Result;
use serde::Serialize;

/// JSON formatter that renders every float with 17 significant digits, so
/// identical reports serialize to identical bytes and values round-trip
/// exactly.
struct SciFloatFormatter;

impl serde_json::ser::Formatter for SciFloatFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any report to canonical JSON: keys sorted (via the value tree),
/// floats at 17 significant digits, one trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    // round-trip through Value so object keys come out sorted
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFloatFormatter);
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out)?)
}

/// Quotes a CSV field if it contains a separator, quote, or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One CSV line from already-formatted fields.
pub fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}

pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}
