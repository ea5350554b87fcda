//! Serialization with 17 significant digits for every float.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use gibbs_core::verify::Table;
use serde::Serialize;
use serde_json::{Number, Value};

/// `x` with 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rewrite every non-integer number of `v` with 17 significant digits.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(
                format_float(x)
                    .parse::<Number>()
                    .expect("valid JSON number"),
            ),
            _ => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = canonical(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

const INTEGER_COLUMNS: &[&str] = &[
    "ell",
    "k",
    "j",
    "d",
    "coordinate",
    "replicate",
    "n",
    "n_components",
    "largest",
];

pub fn table_csv(t: &Table) -> String {
    let mut s = t.header.join(",");
    s.push('\n');
    let integer: Vec<bool> = t
        .header
        .iter()
        .map(|h| INTEGER_COLUMNS.contains(&h.as_str()))
        .collect();
    for row in &t.rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            if integer.get(i).copied().unwrap_or(false) && x.fract() == 0.0 && x.abs() < 1e15 {
                let _ = write!(s, "{}", *x as i64);
            } else if x.is_finite() {
                s.push_str(&format_float(*x));
            } else {
                s.push_str("nan");
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_table(path: &Path, t: &Table) -> Result<()> {
    std::fs::write(path, table_csv(t)).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_get_seventeen_digits() {
        let v = canonical(json!({"a": 0.1, "b": [1, 2.5], "c": "x", "d": 7}));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(
            s,
            r#"{"a":1.0000000000000001e-1,"b":[1,2.5000000000000000e+0],"c":"x","d":7}"#
        );
        let back: f64 = serde_json::from_str::<Value>(&s).unwrap()["a"]
            .as_f64()
            .unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn nonfinite_become_null() {
        let v = canonical(serde_json::to_value(vec![f64::NAN, 1.0]).unwrap());
        assert_eq!(v[0], Value::Null);
    }

    #[test]
    fn csv_keeps_integer_columns() {
        let t = Table {
            n: 3,
            header: vec!["ell".into(), "p".into()],
            rows: vec![vec![2.0, 0.25]],
        };
        assert_eq!(table_csv(&t), "ell,p\n2,2.5000000000000000e-1\n");
    }
}
