use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::{Error, FormatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    DepthPair,
    ViewSequence,
    /// Output of a non-curation command (warp, refine, fuse, ...).
    Derived,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::DepthPair => "depth_pair",
            SampleKind::ViewSequence => "view_sequence",
            SampleKind::Derived => "derived",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "depth_pair" => Some(SampleKind::DepthPair),
            "view_sequence" => Some(SampleKind::ViewSequence),
            "derived" => Some(SampleKind::Derived),
            _ => None,
        }
    }
}

/// One curated sample: where its files live, and the seed and parameters
/// needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleManifest {
    pub sample_id: String,
    pub kind: SampleKind,
    /// Role name to path relative to the manifest's directory.
    pub paths: BTreeMap<String, String>,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
    /// Keys this version does not interpret; kept verbatim on rewrite.
    pub extra: BTreeMap<String, Value>,
}

const REQUIRED: [&str; 5] = ["sample_id", "kind", "paths", "seed", "params"];

impl SampleManifest {
    pub fn new(sample_id: impl Into<String>, kind: SampleKind, seed: u64) -> Self {
        SampleManifest {
            sample_id: sample_id.into(),
            kind,
            paths: BTreeMap::new(),
            seed,
            params: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn with_path(mut self, role: &str, path: &str) -> Self {
        self.paths.insert(role.to_owned(), path.to_owned());
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    /// Checks that every referenced file exists relative to `dir`.
    pub fn validate_paths(&self, dir: &Path) -> Result<(), Error> {
        for (role, rel) in &self.paths {
            if !dir.join(rel).is_file() {
                return Err(FormatError::Schema {
                    key: format!("paths.{role}"),
                    reason: format!("{} does not exist", dir.join(rel).display()),
                }
                .into());
            }
        }
        Ok(())
    }
}

fn schema(key: impl Into<String>, reason: impl Into<String>) -> FormatError {
    FormatError::Schema {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Parses one JSONL record.
pub fn read_manifest(line: &str) -> Result<SampleManifest, FormatError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| schema("<record>", format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(schema("<record>", "record is not a JSON object"));
    };
    for key in REQUIRED {
        if !obj.contains_key(key) {
            return Err(schema(key, "missing required key"));
        }
    }
    let sample_id = match obj.remove("sample_id") {
        Some(Value::String(s)) => s,
        _ => return Err(schema("sample_id", "must be a string")),
    };
    let kind = match obj.remove("kind") {
        Some(Value::String(s)) => {
            SampleKind::parse(&s).ok_or_else(|| schema("kind", format!("unknown kind `{s}`")))?
        }
        _ => return Err(schema("kind", "must be a string")),
    };
    let seed = obj
        .remove("seed")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| schema("seed", "must be an unsigned 64-bit integer"))?;
    let paths = match obj.remove("paths") {
        Some(Value::Object(m)) => m
            .into_iter()
            .map(|(k, v)| match v {
                Value::String(s) => Ok((k, s)),
                _ => Err(schema(format!("paths.{k}"), "must be a string")),
            })
            .collect::<Result<_, _>>()?,
        _ => return Err(schema("paths", "must be an object")),
    };
    let params = match obj.remove("params") {
        Some(Value::Object(m)) => m
            .into_iter()
            .map(|(k, v)| match v.as_f64() {
                Some(f) if v.is_number() => Ok((k, f)),
                _ => Err(schema(format!("params.{k}"), format!("`{v}` is not a number"))),
            })
            .collect::<Result<_, _>>()?,
        _ => return Err(schema("params", "must be an object")),
    };
    Ok(SampleManifest {
        sample_id,
        kind,
        paths,
        seed,
        params,
        extra: obj.into_iter().collect(),
    })
}

/// Parses every non-blank line of a JSONL document.
pub fn read_manifests(text: &str) -> Result<Vec<SampleManifest>, FormatError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(read_manifest)
        .collect()
}

/// Serializes to a single line with lexicographically ordered keys at every
/// nesting level. No trailing newline.
pub fn write_manifest(m: &SampleManifest) -> Result<String, Error> {
    let mut obj: Map<String, Value> = m.extra.clone().into_iter().collect();
    obj.insert("sample_id".into(), Value::String(m.sample_id.clone()));
    obj.insert("kind".into(), Value::String(m.kind.as_str().into()));
    obj.insert("seed".into(), Value::Number(m.seed.into()));
    obj.insert(
        "paths".into(),
        Value::Object(
            m.paths
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        ),
    );
    let mut params = Map::new();
    for (k, v) in &m.params {
        let n = Number::from_f64(*v).ok_or_else(|| {
            Error::InvalidValue(format!("manifest param `{k}` is not finite"))
        })?;
        params.insert(k.clone(), Value::Number(n));
    }
    obj.insert("params".into(), Value::Object(params));
    Ok(serde_json::to_string(&Value::Object(obj)).expect("JSON values always serialize"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"sample_id":"s1","kind":"depth_pair","seed":42,"paths":{"alpha":"alpha.pfm","d_fg_raw":"dfg.pfm","d_bg":"dbg.pfm","d_in":"d_in.pfm","d_gt":"d_gt.pfm"},"params":{"alpha_th":0.5,"sigma_blur":1.25,"d_max":10.0}}"#;

    #[test]
    fn minimal_record_canonicalizes() {
        let m = read_manifest(MINIMAL).unwrap();
        assert_eq!(m.paths.len(), 5);
        assert_eq!(m.seed, 42);
        let line = write_manifest(&m).unwrap();
        assert_eq!(
            line,
            r#"{"kind":"depth_pair","params":{"alpha_th":0.5,"d_max":10.0,"sigma_blur":1.25},"paths":{"alpha":"alpha.pfm","d_bg":"dbg.pfm","d_fg_raw":"dfg.pfm","d_gt":"d_gt.pfm","d_in":"d_in.pfm"},"sample_id":"s1","seed":42}"#
        );
        assert_eq!(read_manifest(&line).unwrap(), m);
    }

    #[test]
    fn missing_seed() {
        let line = MINIMAL.replace(r#""seed":42,"#, "");
        match read_manifest(&line) {
            Err(FormatError::Schema { key, .. }) => assert_eq!(key, "seed"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_param() {
        let line = MINIMAL.replace("0.5", "\"abc\"");
        match read_manifest(&line) {
            Err(FormatError::Schema { key, .. }) => assert_eq!(key, "params.alpha_th"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_survive() {
        let line = MINIMAL.replace("{\"sample_id\"", "{\"zz_note\":{\"b\":1,\"a\":[true]},\"sample_id\"");
        let m = read_manifest(&line).unwrap();
        let out = write_manifest(&m).unwrap();
        assert!(out.ends_with(r#""zz_note":{"a":[true],"b":1}}"#), "{out}");
    }

    #[test]
    fn non_finite_param_not_written() {
        let m = SampleManifest::new("x", SampleKind::Derived, 0).with_param("bad", f64::NAN);
        assert!(write_manifest(&m).is_err());
    }
}
