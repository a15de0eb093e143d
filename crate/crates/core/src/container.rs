//! Self-describing binary container: a magic line, one JSON header line, then
//! the named `f64` arrays in little-endian order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &str = "MOTSLAB-CONTAINER 1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct ArrayEntry {
    name: String,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    arrays: Vec<ArrayEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: serde_json::Value,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            meta,
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, data: Vec<f64>) {
        self.arrays.push((name.into(), data));
    }

    pub fn take(&mut self, name: &str) -> Result<Vec<f64>> {
        let pos = self
            .arrays
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::Format(format!("missing array `{name}`")))?;
        Ok(self.arrays.swap_remove(pos).1)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            arrays: self
                .arrays
                .iter()
                .map(|(n, v)| ArrayEntry {
                    name: n.clone(),
                    len: v.len(),
                })
                .collect(),
        };
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(serde_json::to_string(&header)?.as_bytes());
        out.push(b'\n');
        for (_, v) in &self.arrays {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl1 = bytes
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::Format("no magic line".into()))?;
        if &bytes[..nl1] != MAGIC.as_bytes() {
            return Err(Error::Format("bad magic line".into()));
        }
        let rest = &bytes[nl1 + 1..];
        let nl2 = rest
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::Format("no header line".into()))?;
        let header: Header = serde_json::from_slice(&rest[..nl2])
            .map_err(|e| Error::Format(format!("header: {e}")))?;
        let mut body = &rest[nl2 + 1..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for entry in header.arrays {
            let nbytes = entry
                .len
                .checked_mul(8)
                .filter(|n| *n <= body.len())
                .ok_or_else(|| Error::Format(format!("array `{}` truncated", entry.name)))?;
            let data = body[..nbytes]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            body = &body[nbytes..];
            arrays.push((entry.name, data));
        }
        if !body.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", body.len())));
        }
        Ok(Self {
            kind: header.kind,
            meta: header.meta,
            arrays,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path, expect_kind: &str) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let c = Self::from_bytes(&bytes)?;
        if c.kind != expect_kind {
            return Err(Error::Format(format!(
                "{} holds a `{}`, expected `{expect_kind}`",
                path.display(),
                c.kind
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let mut c = Container::new("demo", serde_json::json!({"n": 3}));
        c.push("a", vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300]);
        c.push("empty", vec![]);
        let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back.kind, "demo");
        let a = &back.arrays[0].1;
        assert_eq!(a[1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, c);
    }

    #[test]
    fn truncation_is_a_format_error() {
        let mut c = Container::new("demo", serde_json::Value::Null);
        c.push("a", vec![1.0, 2.0]);
        let bytes = c.to_bytes().unwrap();
        let err = Container::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(matches!(Container::from_bytes(b"junk\n{}\n"), Err(Error::Format(_))));
    }
}
