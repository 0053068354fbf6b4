//! Pose and 2.5D sample files.
//!
//! A pose file is a JSON array of samples; each sample is 21 `[x, y, z]`
//! triples in joint order. A 2.5D file is a JSON array of
//! `{"uv": [[u, v], ...21], "zr": [...21]}` objects.

use std::path::Path;

use serde_json::Value;

use crate::camera::TwoPointFiveD;
use crate::error::{Error, Result};
use crate::hand::{HandPose, NUM_JOINTS};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json(text: &str) -> Result<Vec<Value>> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::schema("", format!("malformed JSON: {e}")))?;
    match value {
        Value::Array(items) => Ok(items),
        _ => Err(Error::schema("", "expected a top-level array of samples")),
    }
}

fn numbers<const N: usize>(v: &Value, path: &str) -> Result<[f64; N]> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == N)
        .ok_or_else(|| Error::schema(path, format!("expected an array of {N} numbers")))?;
    let mut out = [0.0; N];
    for (k, x) in arr.iter().enumerate() {
        out[k] = x
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::schema(format!("{path}[{k}]"), "expected a finite number"))?;
    }
    Ok(out)
}

fn rows<const N: usize>(v: &Value, path: &str) -> Result<[[f64; N]; NUM_JOINTS]> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == NUM_JOINTS)
        .ok_or_else(|| Error::schema(path, format!("expected {NUM_JOINTS} joints")))?;
    let mut out = [[0.0; N]; NUM_JOINTS];
    for (j, item) in arr.iter().enumerate() {
        out[j] = numbers(item, &format!("{path}[{j}]"))?;
    }
    Ok(out)
}

pub fn parse_poses(text: &str) -> Result<Vec<HandPose>> {
    parse_json(text)?
        .iter()
        .enumerate()
        .map(|(i, v)| HandPose::new(rows::<3>(v, &format!("[{i}]"))?))
        .collect()
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<HandPose>> {
    parse_poses(&read_text(path.as_ref())?)
}

pub fn poses_to_json(poses: &[HandPose]) -> String {
    serde_json::to_string(poses).expect("poses serialize")
}

pub fn write_poses(poses: &[HandPose], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, poses_to_json(poses) + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_25d(text: &str) -> Result<Vec<TwoPointFiveD>> {
    parse_json(text)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("[{i}]");
            let obj = v
                .as_object()
                .ok_or_else(|| Error::schema(&path, "expected an object with `uv` and `zr`"))?;
            if let Some(k) = obj.keys().find(|k| *k != "uv" && *k != "zr") {
                return Err(Error::schema(format!("{path}.{k}"), "unknown field"));
            }
            let uv_path = format!("{path}.uv");
            let zr_path = format!("{path}.zr");
            let uv = rows::<2>(obj.get("uv").ok_or_else(|| Error::schema(&uv_path, "missing field"))?, &uv_path)?;
            let zr = numbers::<NUM_JOINTS>(obj.get("zr").ok_or_else(|| Error::schema(&zr_path, "missing field"))?, &zr_path)?;
            TwoPointFiveD::new(uv, zr).map_err(|e| Error::schema(&path, e.to_string()))
        })
        .collect()
}

pub fn read_25d(path: impl AsRef<Path>) -> Result<Vec<TwoPointFiveD>> {
    parse_25d(&read_text(path.as_ref())?)
}
