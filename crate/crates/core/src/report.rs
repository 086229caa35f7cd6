//! Structured pass/fail records produced by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Informational; never fails a suite.
    Diagnostic,
    /// Not applicable for the configured dimension or data.
    Skipped,
}

/// Resolution the check ran at.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub n: usize,
    pub r_max: f64,
    /// Initial (or representative) time step; 0 for static checks.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The result under test, in words.
    pub anchor: String,
    #[serde(with = "nonfinite::map")]
    pub quantities: BTreeMap<String, f64>,
    #[serde(with = "nonfinite")]
    pub residual: f64,
    #[serde(with = "nonfinite")]
    pub tolerance: f64,
    pub verdict: Verdict,
    pub meta: RunMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// A graded report: passes iff `residual <= tolerance` (NaN fails).
    pub fn graded(name: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        let verdict = if residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            quantities: BTreeMap::new(),
            residual,
            tolerance,
            verdict,
            meta: RunMeta::default(),
            notes: Vec::new(),
        }
    }

    pub fn diagnostic(name: &str, anchor: &str, residual: f64) -> Self {
        let mut r = Self::graded(name, anchor, residual, f64::INFINITY);
        r.verdict = Verdict::Diagnostic;
        r
    }

    pub fn skipped(name: &str, anchor: &str, reason: &str) -> Self {
        let mut r = Self::graded(name, anchor, 0.0, 0.0);
        r.verdict = Verdict::Skipped;
        r.notes.push(reason.to_string());
        r
    }

    /// A failed report for a check that could not be evaluated.
    pub fn errored(name: &str, anchor: &str, err: &dyn std::fmt::Display) -> Self {
        let mut r = Self::graded(name, anchor, f64::INFINITY, 0.0);
        r.verdict = Verdict::Fail;
        r.notes.push(format!("error: {err}"));
        r
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.quantities.insert(key.to_string(), value);
        self
    }

    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn note_if(self, cond: bool, note: &str) -> Self {
        if cond {
            self.note(note)
        } else {
            self
        }
    }

    /// Combines this report with an additional requirement: the verdict
    /// becomes `Fail` if `ok` is false.
    pub fn require(mut self, ok: bool, what: &str) -> Self {
        if !ok && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Fail;
        }
        if !ok {
            self.notes.push(format!("failed requirement: {what}"));
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Floats that JSON numbers cannot hold (`inf`, `-inf`, `nan`) are written
/// as those strings; everything else stays a number.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        match x {
            x if x.is_finite() => Repr::Num(x),
            x if x.is_nan() => Repr::Text("nan".into()),
            x if x > 0.0 => Repr::Text("inf".into()),
            _ => Repr::Text("-inf".into()),
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("expected a number, got '{other}'"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod map {
        use std::collections::BTreeMap;

        use super::*;

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            s.collect_map(m.iter().map(|(k, v)| (k, to_repr(*v))))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            BTreeMap::<String, Repr>::deserialize(d)?.into_iter().map(|(k, v)| Ok((k, from_repr(v)?))).collect()
        }
    }
}

/// Relative residual `max_k |a_k - b_k| / max_k |b_k|`, falling back to the
/// absolute residual when the reference is below `floor`.
pub fn relative_residual(lhs: &[f64], rhs: &[f64], floor: f64) -> f64 {
    let diff = lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if scale > floor {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_residual() {
        assert_eq!(CheckReport::graded("a", "x", 1e-3, 1e-2).verdict, Verdict::Pass);
        assert_eq!(CheckReport::graded("a", "x", 1e-1, 1e-2).verdict, Verdict::Fail);
        assert_eq!(CheckReport::graded("a", "x", f64::NAN, 1e-2).verdict, Verdict::Fail);
        assert!(CheckReport::diagnostic("a", "x", 5.0).passed());
        assert!(!CheckReport::graded("a", "x", 0.0, 1.0).require(false, "sign").passed());
    }

    #[test]
    fn nonfinite_values_survive_json() {
        let r = CheckReport::diagnostic("a", "x", f64::NAN).with("q", f64::NEG_INFINITY).with("p", 0.1);
        let back: CheckReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.residual.is_nan());
        assert_eq!(back.tolerance, f64::INFINITY);
        assert_eq!(back.quantities["q"], f64::NEG_INFINITY);
        assert_eq!(back.quantities["p"], 0.1);
    }
}
