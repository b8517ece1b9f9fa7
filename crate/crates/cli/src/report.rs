//! Report envelope and canonical JSON rendering.
//!
//! Every subcommand prints exactly one envelope: the resolved
//! configuration, the tool version, wall-clock seconds, and a flat list
//! of checks whose conjunction decides the exit status. Rendering is
//! canonical — keys sorted, floats at 17 significant digits — so a rerun
//! with the same arguments is byte-identical except for the wall clock.

use serde::Serialize;
use serde_json::Value;

/// One verification outcome: a measured value, optionally an error bar,
/// a reference bound, and a z-score, plus a free-form note.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            value: None,
            error_bar: None,
            bound: None,
            bound_label: None,
            z: None,
            details: None,
        }
    }

    pub fn value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn error_bar(mut self, error_bar: f64) -> Self {
        self.error_bar = Some(error_bar);
        self
    }

    pub fn bound(mut self, bound: f64, label: impl Into<String>) -> Self {
        self.bound = Some(bound);
        self.bound_label = Some(label.into());
        self
    }

    pub fn z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    pub fn details(mut self, details: impl Into<String>) -> Self {
        self.details = Some(details.into());
        self
    }
}

/// The complete output of one invocation.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub config: Value,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Full structured result backing the checks (condition report,
    /// per-identity estimates, distance rows, ...), when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
}

impl Envelope {
    pub fn render(&self) -> anyhow::Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(canonical_json(&value))
    }
}

/// Fixed-width float formatting: 17 significant digits round-trip any
/// f64, and the constant width keeps reruns byte-comparable.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render with two-space indentation, object keys sorted, and all floats
/// through [`format_float`]. Ends with a newline.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = num.as_u64() {
                out.push_str(&u.to_string());
            } else {
                // serde_json numbers are i64, u64, or finite f64.
                out.push_str(&format_float(num.as_f64().expect("finite float")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline_indent(indent + 1, out);
                write_value(item, indent + 1, out);
            }
            newline_indent(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // Sort explicitly instead of trusting the map type, so the
            // contract survives a preserve-order feature someone might
            // pull in transitively.
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline_indent(indent + 1, out);
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push_str(": ");
                write_value(&map[key.as_str()], indent + 1, out);
            }
            newline_indent(indent, out);
            out.push('}');
        }
    }
}

fn newline_indent(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_print_seventeen_significant_digits() {
        assert_eq!(format_float(4.0), "4.0000000000000000e0");
        // The nearest f64 to 0.05 is a hair above it, and 17 digits show that.
        assert_eq!(format_float(0.05), "5.0000000000000003e-2");
        assert_eq!(format_float(-1.0 / 3.0), "-3.3333333333333331e-1");
        // Round trip: the printed form recovers the exact bits.
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn keys_render_sorted_and_indented() {
        let v = json!({"zeta": [1, true, null], "alpha": {"b": 2.5, "a": "x\"y"}});
        let text = canonical_json(&v);
        assert_eq!(
            text,
            "{\n  \"alpha\": {\n    \"a\": \"x\\\"y\",\n    \"b\": 2.5000000000000000e0\n  },\n  \"zeta\": [\n    1,\n    true,\n    null\n  ]\n}\n"
        );
    }

    #[test]
    fn empty_containers_stay_inline() {
        assert_eq!(canonical_json(&json!({})), "{}\n");
        assert_eq!(canonical_json(&json!([])), "[]\n");
    }
}
