//! Verification campaigns: each scenario sweeps a field library over point
//! and time grids, runs the matching inequality checks and collects the rows
//! in a [`ReportBundle`].
//!
//! Configuration problems abort with [`Error::Config`]; anything that goes
//! wrong on a single row is recorded in `bundle.errors` and the run goes on.

pub mod config;

mod common;
mod flat;
mod general;
mod heisenberg;
mod iterated;
mod manifold;
mod relativistic;

pub use config::{GeneratorParams, RunConfig, Scenario, SimSettings};
pub use flat::{sharpness, SharpnessRow, FLAT_LIBRARY};
pub use general::general_coefficient;

use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::generator::GeneratorSpec;
use crate::geometry::Geometry;
use crate::report::{ReportBundle, VerdictRule};

use common::Sink;

/// Runs every check enabled by `cfg.scenario`.
pub fn run_suite(cfg: &RunConfig) -> Result<ReportBundle> {
    validate(cfg)?;
    let mut bundle = ReportBundle {
        scenario: cfg.scenario.id().to_string(),
        seed: cfg.seed,
        ..ReportBundle::default()
    };
    let mut sink = Sink { bundle: &mut bundle };
    match cfg.scenario {
        Scenario::FlatExact => flat::run_exact(cfg, &mut sink)?,
        Scenario::FlatMc => flat::run_mc(cfg, &mut sink)?,
        Scenario::Relativistic => relativistic::run(cfg, &mut sink)?,
        Scenario::GeneralCd => general::run(cfg, &mut sink)?,
        Scenario::ManifoldCoupling => manifold::run(cfg, &mut sink)?,
        Scenario::Iterated => iterated::run(cfg, &mut sink)?,
        Scenario::Heisenberg => heisenberg::run(cfg, &mut sink)?,
    }
    Ok(bundle)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::Config(m.to_string()));
    if !(cfg.z > 0.0 && cfg.z.is_finite()) {
        return bad("z must be positive");
    }
    if cfg.fields.as_ref().is_some_and(|v| v.is_empty()) {
        return bad("empty field library");
    }
    if cfg.points.as_ref().is_some_and(|v| v.is_empty()) {
        return bad("empty point grid");
    }
    if let Some(t) = &cfg.times {
        common::check_grid("time", t)?;
    }
    if let Some(q) = &cfg.q {
        if q.is_empty() || q.iter().any(|v| !(*v >= 1.0 && v.is_finite())) {
            return bad("q grid must be nonempty with entries >= 1");
        }
    }
    if cfg.random_points == Some(0) {
        return bad("random_points must be >= 1");
    }
    if let Some(s) = &cfg.sim {
        if s.n_paths == 0 || !(s.dt > 0.0 && s.dt.is_finite()) || !(s.fd_step > 0.0 && s.fd_step.is_finite()) {
            return bad("sim needs n_paths >= 1, dt > 0 and fd_step > 0");
        }
    }
    if let Some(a) = cfg.alpha {
        if !(a > 1.0 && a.is_finite()) {
            return bad("alpha must exceed 1");
        }
    }
    if let Some(k) = cfg.k_cap {
        if !(k > 0.0 && k.is_finite()) {
            return bad("k_cap must be positive");
        }
    }
    if let (Some(p), Some(pp)) = (&cfg.points, &cfg.partner_points) {
        if p.len() != pp.len() {
            return bad("partner_points must pair up with points");
        }
    }
    if cfg.partner_points.is_some() && cfg.points.is_none() {
        return bad("partner_points given without points");
    }
    Ok(())
}

/// Scenario-default resolution of the optional parts of a [`RunConfig`].
impl RunConfig {
    pub(crate) fn rule(&self) -> VerdictRule {
        VerdictRule {
            z: self.z,
            ..VerdictRule::default()
        }
    }

    pub(crate) fn times_or(&self, default: &[f64]) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| default.to_vec())
    }

    pub(crate) fn q_or(&self) -> Vec<f64> {
        self.q.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0])
    }

    pub(crate) fn sim_or(&self, n_paths: usize, dt: f64) -> SimSettings {
        self.sim.clone().unwrap_or_else(|| SimSettings::new(n_paths, dt))
    }

    pub(crate) fn fields_or(&self, default: &[&str], gen: &GeneratorSpec) -> Result<Vec<FieldRef>> {
        let ids: Vec<String> = match &self.fields {
            Some(v) => v.clone(),
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        common::resolve_fields(&ids, gen.layout()).map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
    }

    /// Configured points (checked against the state space) or `default`.
    pub(crate) fn points_or(&self, default: Vec<Vec<f64>>, gen: &GeneratorSpec) -> Result<Vec<Vec<f64>>> {
        let pts = self.points.clone().unwrap_or(default);
        for p in &pts {
            check_point(gen, p)?;
        }
        Ok(pts)
    }

    pub(crate) fn generator_or_reject(&self, allowed: &[&str]) -> Result<()> {
        let g = &self.generator;
        let given = [
            ("geometry", g.geometry.is_some()),
            ("d", g.d.is_some()),
            ("sigma", g.sigma.is_some()),
            ("c_sigma", g.c_sigma.is_some()),
            ("rho", g.rho.is_some()),
            ("levels", g.levels.is_some()),
        ];
        for (name, set) in given {
            if set && !allowed.contains(&name) {
                return Err(Error::Config(format!(
                    "generator.{name} is not used by scenario {}",
                    self.scenario
                )));
            }
        }
        if let Some(s) = g.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("sigma must be positive".into()));
            }
        }
        if g.d == Some(0) || g.levels == Some(0) {
            return Err(Error::Config("d and levels must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_point(gen: &GeneratorSpec, p: &[f64]) -> Result<()> {
    let n = gen.layout().total();
    if p.len() != n {
        return Err(Error::Config(format!(
            "point has {} coordinates, state space has {n}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("point has non-finite coordinates".into()));
    }
    let bd = gen.geometry.ambient_dim();
    if !matches!(gen.geometry, Geometry::Euclidean(_) | Geometry::Heisenberg)
        && gen.geometry.constraint_residual(&p[..bd]) > 1e-9
    {
        return Err(Error::Config(format!("point {p:?} is not on {}", gen.geometry)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_time_grid_is_a_config_error() {
        let mut cfg = RunConfig::new(Scenario::FlatExact);
        cfg.times = Some(vec![]);
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_is_a_config_error() {
        let mut cfg = RunConfig::new(Scenario::FlatExact);
        cfg.fields = Some(vec!["no-such-field".into()]);
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn misplaced_generator_parameter_is_rejected() {
        let mut cfg = RunConfig::new(Scenario::FlatExact);
        cfg.generator.rho = Some(0.5);
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn wrong_point_dimension_is_rejected() {
        let mut cfg = RunConfig::new(Scenario::FlatExact);
        cfg.points = Some(vec![vec![0.0; 3]]);
        assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
    }
}
