//! Solve reports and JSON helpers shared by the two solvers and the CLI.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An `f64` that serializes non-finite values as the strings `"inf"`,
/// `"-inf"`, `"nan"` instead of JSON `null`, so sentinel infinities survive a
/// round trip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsonReal(pub f64);

impl From<f64> for JsonReal {
    fn from(v: f64) -> Self {
        JsonReal(v)
    }
}

impl Serialize for JsonReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else if self.0.is_nan() {
            serializer.serialize_str("nan")
        } else if self.0 > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for JsonReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(JsonReal(v)),
            Raw::Text(s) => match s.as_str() {
                "inf" => Ok(JsonReal(f64::INFINITY)),
                "-inf" => Ok(JsonReal(f64::NEG_INFINITY)),
                "nan" => Ok(JsonReal(f64::NAN)),
                other => Err(D::Error::custom(format!("not a real value: {other:?}"))),
            },
        }
    }
}

/// JSON report of one solve. Case-two solves carry the extra gap fields; they
/// are omitted from case-one reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub case: String,
    pub status: String,
    pub objective: JsonReal,
    pub l1_residual: JsonReal,
    pub bound_rhs: JsonReal,
    pub epsilon: JsonReal,
    pub w: Vec<f64>,
    pub policy: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_emp: Option<JsonReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_pop: Option<JsonReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inactive_mass: Option<JsonReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_q: Option<JsonReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max: Option<JsonReal>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
