//! Sequential policies: UCB, the OFUL-style joint linear baseline and OSOM.
//!
//! Every policy follows the same protocol: `select_arm(t, slate)` then
//! `observe(t, arm, reward, slate)`, strictly alternating. Rounds are
//! 1-based, arms 0-based. The first `K` rounds play arms `0..K` in order.

use std::fmt;

use crate::envelopes::{EnvelopeParams, KappaAccumulator};
use crate::error::{Error, Result};
use crate::estimation::{
    confidence_radius, optimistic_max, self_normalized_radius, ArmTracker, ConfidenceBall, RidgeState,
};
use crate::types::{AlgoConfig, ContextSlate, InstanceSpec, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Ucb,
    Oful,
    Osom,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Ucb, PolicyKind::Oful, PolicyKind::Osom];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Ucb => "ucb",
            PolicyKind::Oful => "oful",
            PolicyKind::Osom => "osom",
        }
    }

    /// Builds a fresh policy for `spec`. Only the noise scale, the context
    /// eigenvalue bounds and the shape of the instance are read; the hidden
    /// parameters are not.
    pub fn build(self, spec: &InstanceSpec, cfg: AlgoConfig) -> Result<Box<dyn Policy>> {
        let setup = Setup::new(spec, cfg)?;
        Ok(match self {
            PolicyKind::Ucb => Box::new(Ucb::new(setup)),
            PolicyKind::Oful => Box::new(Oful::new(setup)),
            PolicyKind::Osom => Box::new(Osom::new(setup)),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ucb" => Ok(PolicyKind::Ucb),
            "oful" => Ok(PolicyKind::Oful),
            "osom" => Ok(PolicyKind::Osom),
            other => Err(Error::InvalidParameter {
                name: "policies",
                reason: format!("unknown policy `{other}`"),
            }),
        }
    }
}

/// What a policy decided at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub arm: usize,
    /// Model whose estimate was played.
    pub mode: ModelKind,
    /// Optimistic value of the model estimate driving the policy; `None` in warm-up.
    pub optimistic_value: Option<f64>,
    /// True at the round where OSOM switched to the complex model.
    pub switched: bool,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn select_arm(&mut self, t: usize, slate: &ContextSlate) -> Result<Decision>;

    fn observe(&mut self, t: usize, arm: usize, reward: f64, slate: &ContextSlate) -> Result<()>;

    /// Current-model flag.
    fn mode(&self) -> ModelKind {
        ModelKind::Simple
    }

    /// Round at which the switching test fired, if it did.
    fn switch_round(&self) -> Option<usize> {
        None
    }
}

/// Run constants every policy needs.
#[derive(Debug, Clone, Copy)]
pub struct Setup {
    pub arms: usize,
    pub dim: usize,
    pub sigma: f64,
    pub cfg: AlgoConfig,
    pub params: EnvelopeParams,
}

impl Setup {
    pub fn new(spec: &InstanceSpec, cfg: AlgoConfig) -> Result<Self> {
        cfg.check_arms(spec.arms())?;
        let params = EnvelopeParams::new(
            cfg.delta_prime(),
            spec.sigma(),
            spec.arms(),
            spec.dim(),
            cfg.horizon(),
            spec.context().rho_min(),
            spec.context().rho_max(),
        )?;
        Ok(Self {
            arms: spec.arms(),
            dim: spec.dim(),
            sigma: spec.sigma(),
            cfg,
            params,
        })
    }

    fn check_round(&self, t: usize, slate: &ContextSlate) -> Result<()> {
        if t == 0 || t > self.cfg.horizon() {
            return Err(Error::HorizonExceeded {
                round: t,
                horizon: self.cfg.horizon(),
            });
        }
        if slate.round() != t {
            return Err(Error::RoundMismatch {
                expected: t,
                slate: slate.round(),
            });
        }
        if slate.arms() != self.arms || slate.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.arms * self.dim,
                actual: slate.arms() * slate.dim(),
            });
        }
        Ok(())
    }
}

/// Index of the largest value, ties to the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone)]
struct Arms {
    trackers: Vec<ArmTracker>,
}

impl Arms {
    fn new(k: usize) -> Self {
        Self {
            trackers: vec![ArmTracker::new(); k],
        }
    }

    fn best(&self) -> usize {
        argmax(self.trackers.iter().map(ArmTracker::ucb))
    }

    fn record(&mut self, arm: usize, reward: f64, setup: &Setup) {
        self.trackers[arm].record(reward, setup.sigma, setup.arms, setup.cfg.delta_prime());
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    round: usize,
    arm: usize,
}

fn take_pending(pending: &mut Option<Pending>, t: usize, arm: usize) -> Result<()> {
    match pending.take() {
        Some(p) if p.round == t && p.arm == arm => Ok(()),
        other => {
            *pending = other;
            Err(Error::ArmMismatch {
                selected: other.map(|p| p.arm),
                observed: arm,
            })
        }
    }
}

/// Upper-confidence policy on the per-arm estimates; ignores contexts.
#[derive(Debug, Clone)]
pub struct Ucb {
    setup: Setup,
    arms: Arms,
    pending: Option<Pending>,
}

impl Ucb {
    pub fn new(setup: Setup) -> Self {
        Self {
            arms: Arms::new(setup.arms),
            setup,
            pending: None,
        }
    }

    pub fn trackers(&self) -> &[ArmTracker] {
        &self.arms.trackers
    }
}

impl Policy for Ucb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ucb
    }

    fn select_arm(&mut self, t: usize, slate: &ContextSlate) -> Result<Decision> {
        self.setup.check_round(t, slate)?;
        let (arm, value) = if t <= self.setup.arms {
            (t - 1, None)
        } else {
            let arm = self.arms.best();
            (arm, Some(self.arms.trackers[arm].ucb()))
        };
        self.pending = Some(Pending { round: t, arm });
        Ok(Decision {
            arm,
            mode: ModelKind::Simple,
            optimistic_value: value,
            switched: false,
        })
    }

    fn observe(&mut self, t: usize, arm: usize, reward: f64, _slate: &ContextSlate) -> Result<()> {
        take_pending(&mut self.pending, t, arm)?;
        self.arms.record(arm, reward, &self.setup);
        Ok(())
    }
}

/// Optimistic value of `arm` under the joint linear model over features
/// `(e_arm, context)`: `<x, phi_hat> + beta * |x|_{V^-1}`.
///
/// The number of arms is `joint_ridge.dim() - context.len()`.
pub fn oful_value(joint_ridge: &RidgeState, arm: usize, context: &[f64], beta: f64) -> Result<f64> {
    let x = joint_feature(joint_ridge.dim(), arm, context)?;
    let phi = joint_ridge.theta_hat();
    let mean: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
    Ok(mean + beta * joint_ridge.inv_norm_sq(&x).sqrt())
}

fn joint_feature(total: usize, arm: usize, context: &[f64]) -> Result<Vec<f64>> {
    let arms = total.checked_sub(context.len()).ok_or(Error::DimensionMismatch {
        expected: total,
        actual: context.len(),
    })?;
    if arm >= arms {
        return Err(Error::InvalidParameter {
            name: "arm",
            reason: format!("arm {arm} out of range for K = {arms}"),
        });
    }
    let mut x = vec![0.0; total];
    x[arm] = 1.0;
    x[arms..].copy_from_slice(context);
    Ok(x)
}

/// OFUL-style baseline on the joint parameter `(mu, theta)` with unit
/// regularization and parameter bound `sqrt(K + 1)`.
#[derive(Debug, Clone)]
pub struct Oful {
    setup: Setup,
    ridge: RidgeState,
    bound: f64,
    pending: Option<Pending>,
}

impl Oful {
    pub fn new(setup: Setup) -> Self {
        Self {
            ridge: RidgeState::new(setup.arms + setup.dim),
            bound: ((setup.arms + 1) as f64).sqrt(),
            setup,
            pending: None,
        }
    }

    pub fn beta(&self) -> f64 {
        self_normalized_radius(
            self.ridge.log_det(),
            self.setup.sigma,
            self.setup.cfg.delta_prime(),
            self.bound,
        )
    }

    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }
}

impl Policy for Oful {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Oful
    }

    fn select_arm(&mut self, t: usize, slate: &ContextSlate) -> Result<Decision> {
        self.setup.check_round(t, slate)?;
        let (arm, value) = if t <= self.setup.arms {
            (t - 1, None)
        } else {
            let beta = self.beta();
            let values = (0..self.setup.arms)
                .map(|i| oful_value(&self.ridge, i, slate.vector(i), beta))
                .collect::<Result<Vec<_>>>()?;
            let arm = argmax(values.iter().copied());
            (arm, Some(values[arm]))
        };
        self.pending = Some(Pending { round: t, arm });
        Ok(Decision {
            arm,
            mode: ModelKind::Complex,
            optimistic_value: value,
            switched: false,
        })
    }

    fn observe(&mut self, t: usize, arm: usize, reward: f64, slate: &ContextSlate) -> Result<()> {
        take_pending(&mut self.pending, t, arm)?;
        if t > self.setup.arms {
            let x = joint_feature(self.ridge.dim(), arm, slate.vector(arm))?;
            self.ridge.update(&x, reward)?;
        }
        Ok(())
    }
}

/// Optimistic selection of models.
///
/// Plays the UCB arm while the cumulative optimism of the complex model over
/// the rewards actually received stays within the `W` envelope; once it
/// exceeds it, switches permanently to the complex-model arm.
#[derive(Debug, Clone)]
pub struct Osom {
    setup: Setup,
    arms: Arms,
    ridge: RidgeState,
    radii: KappaAccumulator,
    mode: ModelKind,
    sum_optimistic: f64,
    sum_received: f64,
    switch_round: Option<usize>,
    pending: Option<Pending>,
    accumulate_reward: bool,
}

impl Osom {
    pub fn new(setup: Setup) -> Self {
        Self {
            arms: Arms::new(setup.arms),
            ridge: RidgeState::new(setup.dim),
            radii: KappaAccumulator::new(),
            mode: ModelKind::Simple,
            sum_optimistic: 0.0,
            sum_received: 0.0,
            switch_round: None,
            pending: None,
            accumulate_reward: false,
            setup,
        }
    }

    pub fn trackers(&self) -> &[ArmTracker] {
        &self.arms.trackers
    }

    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    /// Sum of the complex model's optimistic values over the rounds played in simple mode.
    pub fn sum_optimistic(&self) -> f64 {
        self.sum_optimistic
    }

    /// Sum of the rewards received over the rounds played in simple mode.
    pub fn sum_received(&self) -> f64 {
        self.sum_received
    }

    /// Switching threshold the next check will use.
    pub fn threshold(&self) -> f64 {
        self.radii.w(&self.setup.params)
    }

    #[cfg(test)]
    pub(crate) fn force_sums(&mut self, optimistic: f64, received: f64) {
        self.sum_optimistic = optimistic;
        self.sum_received = received;
    }
}

impl Policy for Osom {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Osom
    }

    fn select_arm(&mut self, t: usize, slate: &ContextSlate) -> Result<Decision> {
        self.setup.check_round(t, slate)?;
        let k = self.setup.arms;
        if t <= k {
            self.pending = Some(Pending { round: t, arm: t - 1 });
            self.accumulate_reward = false;
            return Ok(Decision {
                arm: t - 1,
                mode: self.mode,
                optimistic_value: None,
                switched: false,
            });
        }

        let simple_arm = self.arms.best();

        let radius = confidence_radius(&self.ridge, &self.setup.params, t - 1, self.setup.cfg.radius_mode())?;
        let ball = ConfidenceBall::new(self.ridge.theta_hat().to_vec(), radius)?;
        let tol = self.setup.cfg.maximizer_tol();
        let mut values = Vec::with_capacity(k);
        for (i, tracker) in self.arms.trackers.iter().enumerate() {
            let point = optimistic_max(slate.vector(i), &ball, tol)?;
            values.push(tracker.ucb() + point.value);
        }
        let complex_arm = argmax(values.iter().copied());
        let complex_value = values[complex_arm];

        let mut switched = false;
        if self.mode == ModelKind::Simple && t > k + 1 {
            // radii holds rounds K+1..t-1, so this is W at t-1.
            let threshold = self.radii.w(&self.setup.params);
            if self.sum_optimistic - self.sum_received > threshold {
                self.mode = ModelKind::Complex;
                self.switch_round = Some(t);
                switched = true;
            }
        }
        self.radii.push(radius);

        let arm = match self.mode {
            ModelKind::Simple => {
                self.sum_optimistic += complex_value;
                self.accumulate_reward = true;
                simple_arm
            }
            ModelKind::Complex => {
                self.accumulate_reward = false;
                complex_arm
            }
        };
        self.pending = Some(Pending { round: t, arm });
        Ok(Decision {
            arm,
            mode: self.mode,
            optimistic_value: Some(complex_value),
            switched,
        })
    }

    fn observe(&mut self, t: usize, arm: usize, reward: f64, slate: &ContextSlate) -> Result<()> {
        take_pending(&mut self.pending, t, arm)?;
        if t > self.setup.arms {
            // target uses the arm's index from the end of the previous round
            let target = reward - self.arms.trackers[arm].ucb();
            self.ridge.update(slate.vector(arm), target)?;
        }
        self.arms.record(arm, reward, &self.setup);
        if self.accumulate_reward {
            self.sum_received += reward;
            self.accumulate_reward = false;
        }
        Ok(())
    }

    fn mode(&self) -> ModelKind {
        self.mode
    }

    fn switch_round(&self) -> Option<usize> {
        self.switch_round
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ContextDistSpec, ContextKind, RadiusMode};

    fn spec(k: usize, d: usize) -> InstanceSpec {
        let ctx = ContextDistSpec::isotropic(ContextKind::UnitSphereUniform, d).unwrap();
        InstanceSpec::new(ModelKind::Simple, vec![0.0; k], vec![0.0; d], 1.0, ctx).unwrap()
    }

    fn slate(t: usize, k: usize, d: usize) -> ContextSlate {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        ContextSlate::new(t, vec![v; k]).unwrap()
    }

    fn cfg(n: usize) -> AlgoConfig {
        AlgoConfig::new(0.05, n, RadiusMode::Empirical, 1e-9).unwrap()
    }

    #[test]
    fn warm_up_plays_arms_in_order() {
        for kind in PolicyKind::ALL {
            let mut p = kind.build(&spec(3, 2), cfg(10)).unwrap();
            for t in 1..=3 {
                let s = slate(t, 3, 2);
                let d = p.select_arm(t, &s).unwrap();
                assert_eq!(d.arm, t - 1);
                assert_eq!(d.optimistic_value, None);
                p.observe(t, d.arm, 0.0, &s).unwrap();
            }
        }
    }

    #[test]
    fn observe_checks_arm_and_horizon() {
        let mut p = PolicyKind::Osom.build(&spec(2, 2), cfg(3)).unwrap();
        let s = slate(1, 2, 2);
        p.select_arm(1, &s).unwrap();
        assert_eq!(
            p.observe(1, 1, 0.0, &s),
            Err(Error::ArmMismatch {
                selected: Some(0),
                observed: 1
            })
        );
        p.observe(1, 0, 0.0, &s).unwrap();
        assert!(matches!(
            p.select_arm(4, &slate(4, 2, 2)),
            Err(Error::HorizonExceeded { round: 4, horizon: 3 })
        ));
    }

    #[test]
    fn ucb_first_pull() {
        let mut p = Ucb::new(Setup::new(&spec(2, 1), cfg(5)).unwrap());
        let s = slate(1, 2, 1);
        p.select_arm(1, &s).unwrap();
        p.observe(1, 0, 0.25, &s).unwrap();
        assert_eq!(p.trackers()[0].mean(), 0.25);
        assert_eq!(p.trackers()[0].pulls(), 1);
    }

    #[test]
    fn osom_ridge_starts_after_warm_up() {
        let mut p = Osom::new(Setup::new(&spec(2, 2), cfg(10)).unwrap());
        for t in 1..=3 {
            let s = slate(t, 2, 2);
            let d = p.select_arm(t, &s).unwrap();
            p.observe(t, d.arm, 1.0, &s).unwrap();
            assert_eq!(p.ridge().rows_seen(), t.saturating_sub(2));
        }
    }

    #[test]
    fn switch_requires_strict_excess() {
        let k = 2;
        let mut p = Osom::new(Setup::new(&spec(k, 2), cfg(50)).unwrap());
        for t in 1..=4 {
            let s = slate(t, k, 2);
            let d = p.select_arm(t, &s).unwrap();
            p.observe(t, d.arm, 0.0, &s).unwrap();
        }
        let w = p.threshold();
        p.force_sums(w, 0.0);
        let d = p.select_arm(5, &slate(5, k, 2)).unwrap();
        assert_eq!(d.mode, ModelKind::Simple);
        assert!(!d.switched);
        p.observe(5, d.arm, 0.0, &slate(5, k, 2)).unwrap();

        let w = p.threshold();
        p.force_sums(w.next_up(), 0.0);
        let d = p.select_arm(6, &slate(6, k, 2)).unwrap();
        assert!(d.switched);
        assert_eq!(d.mode, ModelKind::Complex);
        assert_eq!(p.switch_round(), Some(6));
    }

    #[test]
    fn oful_value_without_data() {
        let ridge = RidgeState::new(5);
        let v = oful_value(&ridge, 1, &[0.6, 0.0, 0.8], 2.0).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-12);

        // K = 1, d = 0: a single-arm index on the bias.
        let mut r = RidgeState::new(1);
        r.update(&[1.0], 0.8).unwrap();
        let v = oful_value(&r, 0, &[], 1.5).unwrap();
        assert!((v - (0.4 + 1.5 / 2f64.sqrt())).abs() < 1e-12);
    }
}
