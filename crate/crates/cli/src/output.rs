use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

/// Compact JSON in which every float is written with 17 significant digits.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        let v = json!({"a": 0.1, "b": [1, 2.5], "c": "x"});
        assert_eq!(
            to_json(&v),
            r#"{"a":1.0000000000000001e-1,"b":[1,2.5000000000000000e0],"c":"x"}"#
        );
    }
}
