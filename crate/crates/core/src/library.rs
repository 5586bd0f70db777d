use std::collections::BTreeMap;

use crate::primitives::{policy_library, Policy, PolicyId, PrimitiveKind, RobotModel};
use crate::reach::{
    collect_samples, compute_distance_range, fit_with_fallback, read_table, write_table, ReachConfig,
    ReachError, ReachEstimator,
};

/// Policy set of one robot together with its fitted estimators and the
/// translation range every forward policy can realize.
#[derive(Debug, Clone)]
pub struct MotionLibrary {
    pub model: RobotModel,
    pub policies: Vec<Policy>,
    estimators: BTreeMap<PolicyId, ReachEstimator>,
    pub d_min: f64,
    pub d_max: f64,
}

impl MotionLibrary {
    /// Rolls out every policy and fits its estimator.
    pub fn build(model: RobotModel, levels: u32, cfg: &ReachConfig) -> Result<Self, ReachError> {
        let policies = policy_library(&model, levels)?;
        let mut estimators = Vec::with_capacity(policies.len());
        for p in &policies {
            let samples = collect_samples(&model, p, &cfg.horizons)?;
            estimators.push(fit_with_fallback(p.id, &samples, cfg.degree, cfg.holdout)?);
        }
        Self::assemble(model, policies, estimators)
    }

    /// Rebuilds a library from a cached estimator table.
    pub fn from_table(model: RobotModel, levels: u32, table: &str) -> Result<Self, ReachError> {
        let policies = policy_library(&model, levels)?;
        Self::assemble(model, policies, read_table(table)?)
    }

    fn assemble(
        model: RobotModel,
        policies: Vec<Policy>,
        estimators: Vec<ReachEstimator>,
    ) -> Result<Self, ReachError> {
        let estimators: BTreeMap<PolicyId, ReachEstimator> =
            estimators.into_iter().map(|e| (e.policy, e)).collect();
        for p in &policies {
            if !estimators.contains_key(&p.id) {
                return Err(ReachError::Table {
                    line: 0,
                    message: format!("no estimator for policy {}", p.id),
                });
            }
        }
        let (d_min, d_max) = compute_distance_range(
            policies
                .iter()
                .filter(|p| p.kind() == PrimitiveKind::Forward)
                .map(|p| &estimators[&p.id]),
        )?;
        Ok(Self {
            model,
            policies,
            estimators,
            d_min,
            d_max,
        })
    }

    pub fn table(&self) -> String {
        let ordered: Vec<ReachEstimator> = self
            .policies
            .iter()
            .map(|p| self.estimators[&p.id].clone())
            .collect();
        write_table(&ordered)
    }

    pub fn policy(&self, id: PolicyId) -> Option<&Policy> {
        self.policies.iter().find(|p| p.id == id)
    }

    pub fn estimator(&self, id: PolicyId) -> &ReachEstimator {
        &self.estimators[&id]
    }

    pub fn estimators(&self) -> impl Iterator<Item = &ReachEstimator> {
        self.policies.iter().map(|p| &self.estimators[&p.id])
    }

    pub fn of_kind(&self, kind: PrimitiveKind) -> impl Iterator<Item = &Policy> {
        self.policies.iter().filter(move |p| p.kind() == kind)
    }

    /// Smallest angle some rotation policy of `kind` can realize.
    pub fn min_rotation(&self, kind: PrimitiveKind) -> f64 {
        self.of_kind(kind)
            .map(|p| self.estimators[&p.id].d_min)
            .fold(f64::INFINITY, f64::min)
    }
}
