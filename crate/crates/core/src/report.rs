//! Check reports: a status, a capped list of witnesses and scan counts.

use std::collections::BTreeMap;

use serde::Serialize;

/// Witnesses kept per report; the total is always counted.
pub const MAX_WITNESSES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One violated instance of a checked property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub property: String,
    pub points: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perm: Option<String>,
    pub detail: String,
}

impl Violation {
    pub fn new(property: impl Into<String>, points: Vec<String>, detail: impl Into<String>) -> Self {
        Violation {
            property: property.into(),
            points,
            perm: None,
            detail: detail.into(),
        }
    }

    pub fn with_perm(mut self, perm: impl ToString) -> Self {
        self.perm = Some(perm.to_string());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub check: String,
    pub status: Status,
    pub violation_count: u64,
    pub witnesses: Vec<Violation>,
    pub counts: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Report {
            check: check.into(),
            status: Status::Pass,
            violation_count: 0,
            witnesses: Vec::new(),
            counts: BTreeMap::new(),
            info: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn push(&mut self, v: Violation) {
        self.status = Status::Fail;
        self.violation_count += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(v);
        }
    }

    pub fn extend(&mut self, vs: impl IntoIterator<Item = Violation>) {
        for v in vs {
            self.push(v);
        }
    }

    pub fn count(&mut self, key: &str, n: u64) {
        *self.counts.entry(key.to_string()).or_insert(0) += n;
    }

    pub fn set_info(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.info.insert(key.to_string(), value);
    }

    /// Folds another report in, prefixing nothing; witnesses keep their order.
    pub fn absorb(&mut self, other: Report) {
        let Report {
            status,
            violation_count,
            witnesses,
            counts,
            info,
            ..
        } = other;
        if status == Status::Fail {
            self.status = Status::Fail;
        }
        self.violation_count += violation_count;
        let room = MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses.extend(witnesses.into_iter().take(room));
        for (k, v) in counts {
            self.count(&k, v);
        }
        self.info.extend(info);
    }

    /// Violations of one property among the kept witnesses.
    pub fn witnesses_for<'a>(&'a self, property: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.witnesses.iter().filter(move |w| w.property == property)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_witnesses_but_counts_all() {
        let mut r = Report::new("demo");
        assert!(r.passed());
        for i in 0..(MAX_WITNESSES + 7) {
            r.push(Violation::new("p", vec![i.to_string()], ""));
        }
        assert!(!r.passed());
        assert_eq!(r.violation_count as usize, MAX_WITNESSES + 7);
        assert_eq!(r.witnesses.len(), MAX_WITNESSES);
        assert_eq!(r.witnesses[0].points, vec!["0"]);
    }

    #[test]
    fn serializes_stable_schema() {
        let mut r = Report::new("axioms");
        r.count("quadruples", 3);
        r.push(Violation::new("property-1", vec!["a".into()], "x").with_perm("(12)"));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["check"], "axioms");
        assert_eq!(v["status"], "fail");
        assert_eq!(v["witnesses"][0]["perm"], "(12)");
        assert_eq!(v["counts"]["quadruples"], 3);
    }
}
