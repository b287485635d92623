//! Canonical JSON: object keys sorted, compact or pretty.

use serde::Serialize;

/// Serializes through `serde_json::Value`, whose maps are key-sorted, so the
/// output is byte-stable regardless of struct field order.
pub fn to_canonical_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("value serializes to JSON")
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&to_canonical_value(value)).expect("JSON value prints")
}

pub fn to_canonical_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(&to_canonical_value(value)).expect("JSON value prints")
}
