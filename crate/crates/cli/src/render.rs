//! Deterministic JSON text: sorted keys, two-space indentation, floats with
//! 17 significant digits.

use serde_json::Value;

pub fn float(f: f64) -> String {
    if f == 0.0 {
        // one spelling for both signed zeros
        return "0.0000000000000000e0".to_string();
    }
    format!("{f:.16e}")
}

pub fn to_string(v: &Value) -> String {
    let mut out = String::new();
    write(v, 0, &mut out);
    out.push('\n');
    out
}

fn write(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => out.push_str(&i.to_string()),
            (_, Some(u), _) => out.push_str(&u.to_string()),
            (_, _, Some(f)) => out.push_str(&float(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(depth + 1, out);
                write(item, depth + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write(&map[*k], depth + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(2.0), "2.0000000000000000e0");
        assert_eq!(float(-0.0), float(0.0));
        let v: f64 = float(1.0 / 3.0).parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn keys_sorted_and_integers_kept() {
        let s = to_string(&json!({"b": 1, "a": [true, null, 1.5]}));
        assert_eq!(s, "{\n  \"a\": [\n    true,\n    null,\n    1.5000000000000000e0\n  ],\n  \"b\": 1\n}\n");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][2], json!(1.5));
    }
}
