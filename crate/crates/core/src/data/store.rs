//! `.helios` model files.
//!
//! A model file is a small JSON envelope around a compact JSON payload:
//!
//! ```text
//! {
//!   "format": "helios-model",
//!   "version": 1,
//!   "kind": "bnn" | "markov",
//!   "checksum": "sha256:<hex of the payload text>",
//!   "payload": {...}
//! }
//! ```
//!
//! The payload is written with shortest round-trip float formatting, so
//! saving, loading and saving again reproduces the file byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::bnn::BnnModel;
use crate::error::{Error, Result};
use crate::predict::MarkovModel;

pub const MODEL_FORMAT: &str = "helios-model";
pub const MODEL_VERSION: u32 = 1;

// the size gap is irrelevant: a handful of these exist per run
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel {
    Bnn(BnnModel),
    Markov(MarkovModel),
}

impl StoredModel {
    pub fn kind(&self) -> &'static str {
        match self {
            StoredModel::Bnn(_) => "bnn",
            StoredModel::Markov(_) => "markov",
        }
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    kind: &'a str,
    checksum: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: Option<String>,
    version: Option<u32>,
    kind: Option<String>,
    checksum: Option<String>,
    payload: Option<Box<RawValue>>,
}

fn checksum(payload: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(payload.as_bytes())))
}

/// Canonical text of a model file.
pub fn to_canonical_string(model: &StoredModel) -> Result<String> {
    let payload = match model {
        StoredModel::Bnn(m) => serde_json::to_string(m)?,
        StoredModel::Markov(m) => serde_json::to_string(m)?,
    };
    let raw = RawValue::from_string(payload)?;
    let envelope = EnvelopeOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        kind: model.kind(),
        checksum: checksum(raw.get()),
        payload: &raw,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

pub fn save_model(model: &StoredModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_canonical_string(model)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<StoredModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

fn parse_model(text: &str, path: &Path) -> Result<StoredModel> {
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let env: EnvelopeIn = serde_json::from_str(text).map_err(|e| schema(format!("not a model envelope: {e}")))?;
    match env.format.as_deref() {
        Some(MODEL_FORMAT) => {}
        other => return Err(schema(format!("expected format `{MODEL_FORMAT}`, found {other:?}"))),
    }
    match env.version {
        Some(MODEL_VERSION) => {}
        Some(v) => return Err(schema(format!("unsupported version {v}; this build reads version {MODEL_VERSION}"))),
        None => return Err(schema("missing `version` field".into())),
    }
    let payload = env.payload.ok_or_else(|| schema("missing `payload` field".into()))?;
    let stored = env.checksum.ok_or_else(|| schema("missing `checksum` field".into()))?;
    let actual = checksum(payload.get());
    if stored != actual {
        return Err(schema(format!("checksum mismatch: file says {stored}, payload hashes to {actual}")));
    }
    match env.kind.as_deref() {
        Some("bnn") => Ok(StoredModel::Bnn(
            serde_json::from_str(payload.get()).map_err(|e| schema(format!("bad bnn payload: {e}")))?,
        )),
        Some("markov") => Ok(StoredModel::Markov(
            serde_json::from_str(payload.get()).map_err(|e| schema(format!("bad markov payload: {e}")))?,
        )),
        other => Err(schema(format!("unknown model kind {other:?}"))),
    }
}

pub fn load_bnn(path: impl AsRef<Path>) -> Result<BnnModel> {
    let path = path.as_ref();
    match load_model(path)? {
        StoredModel::Bnn(m) => Ok(m),
        other => Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("expected a bnn model, found {}", other.kind()),
        }),
    }
}

pub fn load_markov(path: impl AsRef<Path>) -> Result<MarkovModel> {
    let path = path.as_ref();
    match load_model(path)? {
        StoredModel::Markov(m) => Ok(m),
        other => Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("expected a markov model, found {}", other.kind()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{init_model, predict_mean, BnnConfig, BnnInput};
    use crate::predict::fit_markov;
    use crate::data::StepSeries;
    use crate::light::PhotosynthesisParams;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn markov() -> MarkovModel {
        let params = PhotosynthesisParams::default();
        let days: Vec<StepSeries> = (1..=5)
            .map(|d| {
                let date = NaiveDate::from_ymd_opt(2001, 3, d).unwrap();
                let ppfd: Vec<f64> = (0..8).map(|t| ((t * d as usize) % 7) as f64 * 113.7).collect();
                StepSeries::from_ppfd(date, 900, &ppfd, &params).unwrap()
            })
            .collect();
        fit_markov(&days, 4, 1.0).unwrap()
    }

    #[test]
    fn markov_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.helios");
        let model = StoredModel::Markov(markov());
        save_model(&model, &path).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(to_canonical_string(&loaded).unwrap(), first);
    }

    #[test]
    fn bnn_round_trip_preserves_parameters_and_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.helios");
        let config = BnnConfig {
            hidden_sizes: [8, 8],
            ..BnnConfig::default()
        };
        let model = init_model(&config);
        save_model(&StoredModel::Bnn(model.clone()), &path).unwrap();
        let loaded = load_bnn(&path).unwrap();
        assert_eq!(loaded, model);
        let input = BnnInput { sun_ppfd: 321.0, step: 17.0 };
        let a = predict_mean(&model, input, 10, &mut ChaCha8Rng::seed_from_u64(3));
        let b = predict_mean(&loaded, input, 10, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn schema_violations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.helios");
        save_model(&StoredModel::Markov(markov()), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let no_version = text.replacen("\"version\": 1,", "", 1);
        assert!(matches!(parse_model(&no_version, &path), Err(Error::Schema { message, .. }) if message.contains("version")));

        let future = text.replacen("\"version\": 1,", "\"version\": 99,", 1);
        assert!(matches!(parse_model(&future, &path), Err(Error::Schema { .. })));

        let tampered = text.replacen("\"alpha\":1.0", "\"alpha\":2.0", 1);
        assert_ne!(tampered, text);
        assert!(matches!(parse_model(&tampered, &path), Err(Error::Schema { message, .. }) if message.contains("checksum")));

        assert!(load_bnn(&path).is_err());
    }
}
