//! Inequality reports, verdict logic and report bundles.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Direction of the checked inequality `lhs <= rhs` or `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    #[default]
    Le,
    Ge,
}

/// Serializes non-finite floats as strings so reports stay valid JSON and
/// round-trip exactly.
pub mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("bad float `{s}`"))),
            },
        }
    }
}

/// How a report row was computed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
}

impl Provenance {
    pub fn method(m: &str) -> Self {
        Self {
            method: m.to_string(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub field: String,
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub relation: Relation,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    #[serde(with = "float")]
    pub lhs_se: f64,
    #[serde(with = "float")]
    pub rhs_se: f64,
    /// Combined uncertainty of `rhs - lhs` (MC noise and FD bias).
    #[serde(with = "float")]
    pub se_total: f64,
    /// Deterministic slack granted on top of `z * se_total`.
    #[serde(with = "float")]
    pub slack: f64,
    pub verdict: Verdict,
    /// Signed distance in favour of the inequality (`rhs - lhs` for `<=`).
    #[serde(with = "float")]
    pub margin: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Inputs of the verdict rule.
#[derive(Debug, Clone, Copy)]
pub struct VerdictRule {
    pub z: f64,
    /// Rows whose uncertainty band `z * se_total` exceeds this fraction of
    /// `1 + |lhs| + |rhs|` cannot resolve anything and are inconclusive.
    pub resolution: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self {
            z: 4.0,
            resolution: 0.5,
        }
    }
}

impl VerdictRule {
    pub fn decide(&self, relation: Relation, lhs: f64, rhs: f64, se_total: f64, slack: f64) -> Verdict {
        if !(lhs.is_finite() && rhs.is_finite() && se_total.is_finite() && slack.is_finite()) {
            return Verdict::Inconclusive;
        }
        let deficit = match relation {
            Relation::Le => lhs - rhs,
            Relation::Ge => rhs - lhs,
        };
        let band = self.z * se_total + slack;
        if deficit > band {
            Verdict::Violated
        } else if self.z * se_total > self.resolution * (1.0 + lhs.abs() + rhs.abs()) {
            Verdict::Inconclusive
        } else {
            Verdict::Verified
        }
    }
}

/// Builder collecting the numeric pieces of one report row.
#[derive(Debug, Clone)]
pub struct Row {
    pub inequality: String,
    pub field: String,
    pub point: Vec<f64>,
    pub point2: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub q: Option<f64>,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub se_total: f64,
    pub slack: f64,
    pub provenance: Provenance,
    pub note: Option<String>,
}

impl Row {
    pub fn new(inequality: &str, field: &str, point: &[f64], lhs: f64, rhs: f64) -> Self {
        Self {
            inequality: inequality.to_string(),
            field: field.to_string(),
            point: point.to_vec(),
            point2: None,
            t: None,
            q: None,
            relation: Relation::Le,
            lhs,
            rhs,
            lhs_se: 0.0,
            rhs_se: 0.0,
            se_total: 0.0,
            slack: 0.0,
            provenance: Provenance::default(),
            note: None,
        }
    }

    pub fn ge(mut self) -> Self {
        self.relation = Relation::Ge;
        self
    }
    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }
    pub fn q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }
    pub fn point2(mut self, p: &[f64]) -> Self {
        self.point2 = Some(p.to_vec());
        self
    }
    pub fn slack(mut self, s: f64) -> Self {
        self.slack = s;
        self
    }
    pub fn se(mut self, lhs_se: f64, rhs_se: f64, total: f64) -> Self {
        self.lhs_se = lhs_se;
        self.rhs_se = rhs_se;
        self.se_total = total;
        self
    }
    pub fn provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn finish(self, rule: &VerdictRule) -> InequalityReport {
        let verdict = rule.decide(self.relation, self.lhs, self.rhs, self.se_total, self.slack);
        let margin = match self.relation {
            Relation::Le => self.rhs - self.lhs,
            Relation::Ge => self.lhs - self.rhs,
        };
        InequalityReport {
            inequality: self.inequality,
            field: self.field,
            point: self.point,
            point2: self.point2,
            t: self.t,
            q: self.q,
            relation: self.relation,
            lhs: self.lhs,
            rhs: self.rhs,
            lhs_se: self.lhs_se,
            rhs_se: self.rhs_se,
            se_total: self.se_total,
            slack: self.slack,
            verdict,
            margin,
            provenance: self.provenance,
            note: self.note,
        }
    }
}

/// A field/inequality pair that was not evaluated, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub inequality: String,
    pub field: String,
    pub reason: String,
}

/// Pathwise contraction study for one coupling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub geometry: String,
    pub initial_distance: f64,
    pub times: Vec<f64>,
    /// Max over paths of `d(B_t, B~_t) / d(p, p~)`.
    pub base_ratio_max: Vec<f64>,
    pub base_bound: Vec<f64>,
    /// Max over paths of `d_E(Y_t, Y~_t) / d(p, p~)`.
    pub fiber_ratio_max: Vec<f64>,
    pub fiber_bound: Vec<f64>,
    /// Per display time, max over paths of each fiber level distance over
    /// `d(p, p~)`.
    #[serde(default)]
    pub fiber_levels_max: Vec<Vec<f64>>,
    /// Relative discretization margin on the base bound.
    pub epsilon_dt: f64,
    /// Same for the fiber bound.
    #[serde(default)]
    pub epsilon_fiber: f64,
    #[serde(default)]
    pub refinement: Vec<crate::coupling::RefinementLevel>,
    #[serde(default)]
    pub increment_law: crate::coupling::IncrementLaw,
    pub dt: f64,
    pub n_paths: u64,
    pub abort_fraction: f64,
    pub verdict: Verdict,
    pub fiber_verdict: Verdict,
}

impl ContractionReport {
    /// Ratios of positive base overshoots between consecutive refinement
    /// levels (coarser over finer). `None` when no level overshoots at all,
    /// in which case there is nothing to shrink.
    pub fn refinement_shrink(&self) -> Option<Vec<f64>> {
        let o: Vec<f64> = self.refinement.iter().map(|l| l.base_overshoot.max(0.0)).collect();
        if o.iter().all(|v| *v == 0.0) {
            return None;
        }
        Some(o.windows(2).map(|w| w[1] / w[0]).collect())
    }
}

/// Empirical Heisenberg constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergSummary {
    pub k_cap: f64,
    pub family_max: f64,
    pub reference_lower_bound: f64,
    pub small_t: f64,
    pub small_t_max_deviation: f64,
    pub rows: Vec<HeisenbergRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergRow {
    pub field: String,
    pub point: Vec<f64>,
    pub t: f64,
    pub q: f64,
    pub k_hat: f64,
    pub k_hat_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberBoundTable {
    pub k: f64,
    pub c_sigma: f64,
    pub t: f64,
    /// `K_1(t), ..., K_n(t)` as used by the checks.
    pub values: Vec<f64>,
    /// The same constants by numerical integration of the recursion.
    #[serde(default)]
    pub recursive: Vec<f64>,
    /// Largest relative difference between the two.
    #[serde(default)]
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub context: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub scenario: String,
    pub seed: u64,
    pub reports: Vec<InequalityReport>,
    #[serde(default)]
    pub skipped: Vec<Skipped>,
    #[serde(default)]
    pub contraction: Vec<ContractionReport>,
    #[serde(default)]
    pub heisenberg: Option<HeisenbergSummary>,
    #[serde(default)]
    pub fiber_bounds: Vec<FiberBoundTable>,
    #[serde(default)]
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl ReportBundle {
    pub fn violations(&self) -> usize {
        self.reports
            .iter()
            .filter(|r| r.verdict == Verdict::Violated)
            .count()
            + self
                .contraction
                .iter()
                .filter(|c| c.verdict == Verdict::Violated || c.fiber_verdict == Verdict::Violated)
                .count()
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.reports.iter().filter(|r| r.verdict == v).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "inequality", "field", "point", "point2", "t", "q", "lhs", "rhs", "se_total", "verdict",
            "margin",
        ])?;
        let fmt_point =
            |p: &[f64]| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        for r in &self.reports {
            out.write_record([
                r.inequality.clone(),
                r.field.clone(),
                fmt_point(&r.point),
                r.point2.as_deref().map(fmt_point).unwrap_or_default(),
                r.t.map(|v| v.to_string()).unwrap_or_default(),
                r.q.map(|v| v.to_string()).unwrap_or_default(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.se_total.to_string(),
                r.verdict.label().to_string(),
                r.margin.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn emit(&self, format: Format, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        match format {
            Format::Json => {
                let mut f = std::io::BufWriter::new(file);
                f.write_all(self.to_json()?.as_bytes())?;
                f.write_all(b"\n")?;
                f.flush()?;
            }
            Format::Csv => self.write_csv(file)?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rule() {
        let r = VerdictRule::default();
        assert_eq!(r.decide(Relation::Le, 1.0, 1.0, 0.0, 0.0), Verdict::Verified);
        assert_eq!(r.decide(Relation::Le, 1.1, 1.0, 0.0, 0.0), Verdict::Violated);
        assert_eq!(r.decide(Relation::Le, 1.1, 1.0, 0.03, 0.0), Verdict::Verified);
        assert_eq!(r.decide(Relation::Ge, 1.1, 1.0, 0.0, 0.0), Verdict::Verified);
        assert_eq!(r.decide(Relation::Ge, 0.9, 1.0, 0.0, 0.05), Verdict::Violated);
        assert_eq!(r.decide(Relation::Le, 0.0, 1.0, 1.0, 0.0), Verdict::Inconclusive);
        assert_eq!(r.decide(Relation::Le, f64::NAN, 1.0, 0.0, 0.0), Verdict::Inconclusive);
    }

    #[test]
    fn bundle_round_trip_with_nonfinite_values() {
        let rule = VerdictRule::default();
        let mut b = ReportBundle {
            scenario: "flat-exact".into(),
            seed: 7,
            ..Default::default()
        };
        b.reports.push(
            Row::new("be-p", "linear-xi", &[0.1, 0.2], 0.1 + 0.2, 1.0 / 3.0)
                .t(0.5)
                .provenance(Provenance::method("quadrature"))
                .finish(&rule),
        );
        b.reports
            .push(Row::new("rls", "x", &[0.0, 0.0], f64::INFINITY, f64::NAN).finish(&rule));
        let s = b.to_json().unwrap();
        let back = ReportBundle::from_json(&s).unwrap();
        assert_eq!(back.to_json().unwrap(), s);
        assert_eq!(back.reports[0], b.reports[0]);
        assert!(back.reports[1].rhs.is_nan());
        let mut csv = Vec::new();
        b.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
