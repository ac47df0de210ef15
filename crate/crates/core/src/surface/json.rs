use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Connection2;
use crate::chart::{Chart2, ChartSpec};
use crate::error::{Error, Result};
use crate::symexpr::ScalarField;
use crate::tensor::Coeffs;

/// Serialized connection. Gamma keys are `"ljk"` with 1-based indices,
/// the upper index first; omitted keys are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    pub chart: ChartSpec,
    #[serde(default)]
    pub gamma: BTreeMap<String, String>,
}

fn parse_key(key: &str) -> Option<[usize; 3]> {
    let b = key.as_bytes();
    if b.len() != 3 {
        return None;
    }
    let mut idx = [0; 3];
    for (slot, c) in idx.iter_mut().zip(b) {
        *slot = match c {
            b'1' => 0,
            b'2' => 1,
            _ => return None,
        };
    }
    Some(idx)
}

impl Connection2 {
    pub fn to_spec(&self) -> ConnectionSpec {
        let mut gamma = BTreeMap::new();
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let f = self.gamma(l, j, k);
                    if !f.is_zero() {
                        gamma.insert(format!("{}{}{}", l + 1, j + 1, k + 1), f.to_string());
                    }
                }
            }
        }
        ConnectionSpec {
            chart: self.chart.to_spec(),
            gamma,
        }
    }

    pub fn from_spec(spec: &ConnectionSpec) -> Result<Self> {
        let chart = Chart2::from_spec(&spec.chart)?;
        let mut gamma = Coeffs::zeros(2, 3);
        for (key, text) in &spec.gamma {
            let idx = parse_key(key).ok_or_else(|| {
                Error::InvalidInput(format!("gamma key `{key}` is not of the form ljk with l,j,k in 1..2"))
            })?;
            gamma.set(&idx, ScalarField::parse(text, 2)?);
        }
        Connection2::new(chart, gamma)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"chart": {"box": [[0.5, 2], [0.5, 2]], "excluded": ["y1"]},
                       "gamma": {"111": "-y2", "222": "y1"}}"#;
        let c = Connection2::from_json(text).unwrap();
        assert_eq!(c.gamma(0, 0, 0).eval(&[1.0, 3.0]).unwrap(), -3.0);
        assert!(c.gamma(0, 1, 0).is_zero());
        let again = Connection2::from_json(&c.to_json()).unwrap();
        assert!(again.same_coefficients(&c));
        assert_eq!(again.chart().to_spec(), c.chart().to_spec());
    }

    #[test]
    fn bad_keys_and_expressions() {
        let bad_key = r#"{"chart": {"box": [[0, 1], [0, 1]]}, "gamma": {"131": "y1"}}"#;
        assert!(matches!(Connection2::from_json(bad_key), Err(Error::InvalidInput(_))));
        let bad_expr = r#"{"chart": {"box": [[0, 1], [0, 1]]}, "gamma": {"111": "x1"}}"#;
        assert!(matches!(Connection2::from_json(bad_expr), Err(Error::Parse(_))));
    }
}
