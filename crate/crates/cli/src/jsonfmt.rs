//! JSON emission with full double precision.
//!
//! Every float is printed with 17 significant digits in scientific notation
//! ({:.16e}), which round-trips any f64 exactly and keeps payloads
//! byte-stable. Non-finite values never reach the formatter: serde_json maps
//! them to null before calling write_f64 (used for the +inf totals of
//! separated models).

use serde::Serialize;
use serde_json::ser::Formatter;

struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serializes to compact JSON with full-precision floats and a trailing
/// newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::with_capacity(256);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Full-precision rendering for CSV cells.
pub fn csv_f64(value: f64) -> String {
    format!("{value:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let vals = [std::f64::consts::PI, 1.0 / 3.0, 2f64.sqrt() * 1e-200, -0.0, 6.02e23];
        for v in vals {
            let bytes = to_json_bytes(&v).unwrap();
            let s = String::from_utf8(bytes).unwrap();
            let back: f64 = serde_json::from_str(s.trim()).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn infinities_become_null() {
        let bytes = to_json_bytes(&f64::INFINITY).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap().trim(), "null");
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = String::from_utf8(to_json_bytes(&std::f64::consts::PI).unwrap()).unwrap();
        assert_eq!(s.trim(), "3.1415926535897931e0");
    }
}
