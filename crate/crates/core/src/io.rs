//! JSON helpers that report failures with a JSON-pointer path.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{c, Mat, C64};

pub fn child(ptr: &str, key: &str) -> String {
    format!("{}/{}", ptr, key.replace('~', "~0").replace('/', "~1"))
}

pub fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::schema("", format!("invalid JSON: {e}")))
}

pub fn as_obj<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::schema(ptr, "expected an object"))
}

pub fn as_arr<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::schema(ptr, "expected an array"))
}

pub fn as_str<'a>(v: &'a Value, ptr: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::schema(ptr, "expected a string"))
}

pub fn as_f64(v: &Value, ptr: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| Error::schema(ptr, "expected a number"))?;
    if !x.is_finite() {
        return Err(Error::schema(ptr, "non-finite number"));
    }
    Ok(x)
}

pub fn as_usize(v: &Value, ptr: &str, cap: usize) -> Result<usize> {
    let n = v.as_u64().ok_or_else(|| Error::schema(ptr, "expected a non-negative integer"))?;
    if n as usize > cap {
        return Err(Error::schema(ptr, format!("value {n} exceeds limit {cap}")));
    }
    Ok(n as usize)
}

pub fn field<'a>(m: &'a Map<String, Value>, key: &str, ptr: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| Error::schema(child(ptr, key), "missing field"))
}

pub fn complex(v: &Value, ptr: &str) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(c(x, 0.0));
    }
    let a = as_arr(v, ptr)?;
    if a.len() != 2 {
        return Err(Error::schema(ptr, "complex numbers are [re, im]"));
    }
    Ok(c(as_f64(&a[0], &child(ptr, "0"))?, as_f64(&a[1], &child(ptr, "1"))?))
}

pub fn cvec(v: &Value, ptr: &str) -> Result<Vec<C64>> {
    as_arr(v, ptr)?.iter().enumerate().map(|(i, x)| complex(x, &child(ptr, &i.to_string()))).collect()
}

/// Row-major nested array; all rows must have the same length.
pub fn cmatrix(v: &Value, ptr: &str) -> Result<Mat> {
    let rows = as_arr(v, ptr)?;
    let mut data = Vec::new();
    let mut width = None;
    for (i, row) in rows.iter().enumerate() {
        let p = child(ptr, &i.to_string());
        let row = cvec(row, &p)?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => return Err(Error::schema(p, "ragged matrix")),
            _ => {}
        }
        data.extend(row);
    }
    let w = width.unwrap_or(0);
    Ok(Mat::from_row_slice(rows.len(), w, &data))
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn vec_json(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&z| complex_json(z)).collect())
}

pub fn matrix_json(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect(),
    )
}

/// Splits a key like `"a,b;c"` into its comma groups.
pub fn split_key(key: &str, groups: &[usize], ptr: &str) -> Result<Vec<Vec<String>>> {
    let parts: Vec<&str> = key.split(';').collect();
    if parts.len() != groups.len() {
        return Err(Error::schema(ptr, format!("malformed key `{key}`")));
    }
    let mut out = Vec::new();
    for (part, &n) in parts.iter().zip(groups) {
        let items: Vec<String> = part.split(',').map(|s| s.trim().to_string()).collect();
        if items.len() != n || items.iter().any(|s| s.is_empty()) {
            return Err(Error::schema(ptr, format!("malformed key `{key}`")));
        }
        out.push(items);
    }
    Ok(out)
}
