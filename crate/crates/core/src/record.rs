//! Dataset manifest records and the clean/noisy labeling rule.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::signal::SignalClass;

/// At or above this SNR a record counts as clean.
pub const CLEAN_MIN_DB: f64 = 20.0;
/// At or below this SNR a record counts as noisy.
pub const NOISY_MAX_DB: f64 = 5.0;

/// Target SNR of a record: a number of dB, or no noise at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrDb {
    Clean,
    Db(f64),
}

impl SnrDb {
    pub fn db(self) -> Option<f64> {
        match self {
            SnrDb::Clean => None,
            SnrDb::Db(x) => Some(x),
        }
    }
}

impl fmt::Display for SnrDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnrDb::Clean => f.write_str("clean"),
            SnrDb::Db(x) => write!(f, "{x} dB"),
        }
    }
}

impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SnrDb::Clean => s.serialize_str("clean"),
            SnrDb::Db(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) if x.is_finite() => Ok(SnrDb::Db(x)),
            Repr::Num(x) => Err(serde::de::Error::custom(format!("non-finite snr_db {x}"))),
            Repr::Text(t) if t == "clean" => Ok(SnrDb::Clean),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "snr_db must be a number or \"clean\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLabel {
    Clean,
    Noisy,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Clean => "clean",
            BinaryLabel::Noisy => "noisy",
        }
    }

    /// Training target: noisy = 1.
    pub fn target(self) -> f64 {
        match self {
            BinaryLabel::Clean => 0.0,
            BinaryLabel::Noisy => 1.0,
        }
    }
}

/// Clean iff no noise or ≥ 20 dB, noisy iff ≤ 5 dB; `None` in the guard band.
pub fn binary_label_for(snr: SnrDb) -> Option<BinaryLabel> {
    match snr {
        SnrDb::Clean => Some(BinaryLabel::Clean),
        SnrDb::Db(x) if x >= CLEAN_MIN_DB => Some(BinaryLabel::Clean),
        SnrDb::Db(x) if x <= NOISY_MAX_DB => Some(BinaryLabel::Noisy),
        SnrDb::Db(_) => None,
    }
}

/// One line of a dataset manifest. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub path: String,
    pub class: SignalClass,
    pub snr_db: SnrDb,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub binary_label: Option<BinaryLabel>,
}

impl DatasetRecord {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_boundaries() {
        assert_eq!(binary_label_for(SnrDb::Clean), Some(BinaryLabel::Clean));
        assert_eq!(binary_label_for(SnrDb::Db(20.0)), Some(BinaryLabel::Clean));
        assert_eq!(binary_label_for(SnrDb::Db(5.0)), Some(BinaryLabel::Noisy));
        assert_eq!(binary_label_for(SnrDb::Db(0.0)), Some(BinaryLabel::Noisy));
        assert_eq!(binary_label_for(SnrDb::Db(10.0)), None);
        assert_eq!(binary_label_for(SnrDb::Db(19.9)), None);
    }

    #[test]
    fn record_json_keys_and_order() {
        let r = DatasetRecord {
            id: "cw-00000".into(),
            path: "signals/cw-00000.f32".into(),
            class: SignalClass::Cw,
            snr_db: SnrDb::Clean,
            seed: 17,
            duration_s: 1.0,
            sample_rate: 8000,
            binary_label: Some(BinaryLabel::Clean),
        };
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(
            line,
            r#"{"id":"cw-00000","path":"signals/cw-00000.f32","class":"cw","snr_db":"clean","seed":17,"duration_s":1.0,"sample_rate":8000,"binary_label":"clean"}"#
        );
        let back: DatasetRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn numeric_snr_parses() {
        let r: SnrDb = serde_json::from_str("-5").unwrap();
        assert_eq!(r, SnrDb::Db(-5.0));
        assert!(serde_json::from_str::<SnrDb>("\"loud\"").is_err());
    }
}
