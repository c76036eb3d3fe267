//! Value types shared by the estimators, policies, environments and harness.
//!
//! Everything here is immutable once constructed. Constructors validate, so a
//! value that exists satisfies its invariants.

use std::fmt;

use crate::error::{Error, Result};

/// Slack allowed on unit-norm constraints to absorb rounding in sampled vectors.
pub(crate) const NORM_SLACK: f64 = 1e-12;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Which reward model generates the data, and also OSOM's current-model flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Simple,
    Complex,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Complex => "complex",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(ModelKind::Simple),
            "complex" => Ok(ModelKind::Complex),
            other => Err(Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextKind {
    /// Uniform on the unit sphere in `d` dimensions.
    UnitSphereUniform,
    /// I.i.d. coordinates uniform on `{-1/sqrt(d), +1/sqrt(d)}`.
    ScaledHypercube,
    /// Supplied by the caller through [`crate::env::ContextSampler`].
    Custom,
}

impl ContextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::UnitSphereUniform => "sphere",
            ContextKind::ScaledHypercube => "hypercube",
            ContextKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ContextKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(ContextKind::UnitSphereUniform),
            "hypercube" => Ok(ContextKind::ScaledHypercube),
            "custom" => Ok(ContextKind::Custom),
            other => Err(Error::InvalidParameter {
                name: "context",
                reason: format!("unknown context distribution `{other}`"),
            }),
        }
    }
}

/// Context distribution together with its assumed eigenvalue bounds.
///
/// `rho_min` lower-bounds the minimum eigenvalue of the context covariance and
/// `rho_max` is the contexts' sub-Gaussian parameter. Both are inputs: the
/// algorithm assumes they are known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextDistSpec {
    kind: ContextKind,
    rho_min: f64,
    rho_max: f64,
}

impl ContextDistSpec {
    pub fn new(kind: ContextKind, rho_min: f64, rho_max: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "d",
                reason: "dimension must be positive".into(),
            });
        }
        if !(rho_min > 0.0 && rho_min.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho_min",
                reason: format!("must be positive, got {rho_min}"),
            });
        }
        if !(rho_max >= rho_min && rho_max <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho_max",
                reason: format!("need rho_min <= rho_max <= 1, got {rho_max}"),
            });
        }
        // Bounded contexts force the covariance trace below 1.
        if rho_min > 1.0 / dim as f64 + NORM_SLACK {
            return Err(Error::InvalidParameter {
                name: "rho_min",
                reason: format!("must be at most 1/d = {}, got {rho_min}", 1.0 / dim as f64),
            });
        }
        Ok(Self { kind, rho_min, rho_max })
    }

    /// `rho_min = rho_max = 1/d`, exact for the hypercube and the adopted default for the sphere.
    pub fn isotropic(kind: ContextKind, dim: usize) -> Result<Self> {
        let r = 1.0 / dim.max(1) as f64;
        Self::new(kind, r, r, dim)
    }

    pub fn kind(&self) -> ContextKind {
        self.kind
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
}

/// The hidden generative model of one bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    model: ModelKind,
    biases: Vec<f64>,
    theta_star: Vec<f64>,
    sigma: f64,
    context: ContextDistSpec,
}

impl InstanceSpec {
    /// Builds and validates an instance. The arm count is `biases.len()` and the
    /// dimension is `theta_star.len()`.
    pub fn new(
        model: ModelKind,
        biases: Vec<f64>,
        theta_star: Vec<f64>,
        sigma: f64,
        context: ContextDistSpec,
    ) -> Result<Self> {
        let spec = Self {
            model,
            biases,
            theta_star,
            sigma,
            context,
        };
        validate_instance(&spec)?;
        Ok(spec)
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn arms(&self) -> usize {
        self.biases.len()
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn context(&self) -> &ContextDistSpec {
        &self.context
    }

    /// Mean reward of `arm` given its context vector.
    pub fn mean_reward(&self, arm: usize, context: &[f64]) -> f64 {
        match self.model {
            ModelKind::Simple => self.biases[arm],
            ModelKind::Complex => self.biases[arm] + dot(&self.theta_star, context),
        }
    }
}

/// Checks every [`InstanceSpec`] invariant.
pub fn validate_instance(spec: &InstanceSpec) -> Result<()> {
    if spec.biases.is_empty() {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: "need at least one arm".into(),
        });
    }
    if spec.theta_star.is_empty() {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "dimension must be positive".into(),
        });
    }
    for (arm, &b) in spec.biases.iter().enumerate() {
        if !(-1.0..=1.0).contains(&b) {
            return Err(Error::BiasOutOfRange { arm, value: b });
        }
    }
    let n = norm(&spec.theta_star);
    if !n.is_finite() || n > 1.0 + NORM_SLACK {
        return Err(Error::ThetaNormExceeded { norm: n });
    }
    if spec.model == ModelKind::Simple && spec.theta_star.iter().any(|&x| x != 0.0) {
        return Err(Error::SimpleModelNonzeroTheta);
    }
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be positive, got {}", spec.sigma),
        });
    }
    if spec.context.rho_min > 1.0 / spec.dim() as f64 + NORM_SLACK {
        return Err(Error::InvalidParameter {
            name: "rho_min",
            reason: "must be at most 1/d".into(),
        });
    }
    Ok(())
}

/// The `K` context vectors revealed at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSlate {
    round: usize,
    dim: usize,
    // Row-major, one row of length `dim` per arm.
    data: Vec<f64>,
}

impl ContextSlate {
    pub fn new(round: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            data.extend_from_slice(v);
        }
        Self::from_flat(round, dim, data)
    }

    pub(crate) fn from_flat(round: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if round == 0 {
            return Err(Error::InvalidParameter {
                name: "round",
                reason: "rounds are numbered from 1".into(),
            });
        }
        if dim > 0 {
            for row in data.chunks(dim) {
                let n = norm(row);
                if !n.is_finite() || n > 1.0 + NORM_SLACK {
                    return Err(Error::ContextNormExceeded { norm: n });
                }
            }
        }
        Ok(Self { round, dim, data })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arms(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn vector(&self, arm: usize) -> &[f64] {
        &self.data[arm * self.dim..(arm + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1))
    }
}

/// How the complex-model confidence radius is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadiusMode {
    /// The analytic envelope `kappa_envelope`.
    Theoretical,
    /// Self-normalized ellipsoid radius from the observed Gram matrix.
    Empirical,
}

impl RadiusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RadiusMode::Theoretical => "theoretical",
            RadiusMode::Empirical => "empirical",
        }
    }
}

impl std::str::FromStr for RadiusMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(RadiusMode::Theoretical),
            "empirical" => Ok(RadiusMode::Empirical),
            other => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("unknown radius mode `{other}`"),
            }),
        }
    }
}

pub const DEFAULT_MAXIMIZER_TOL: f64 = 1e-9;

/// Algorithm-level configuration shared by all policies of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig {
    delta: f64,
    horizon: usize,
    radius_mode: RadiusMode,
    maximizer_tol: f64,
}

impl AlgoConfig {
    pub fn new(delta: f64, horizon: usize, radius_mode: RadiusMode, maximizer_tol: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must lie in (0, 1), got {delta}"),
            });
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "horizon must be positive".into(),
            });
        }
        if !(maximizer_tol > 0.0 && maximizer_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "maximizer_tol",
                reason: format!("must be positive, got {maximizer_tol}"),
            });
        }
        Ok(Self {
            delta,
            horizon,
            radius_mode,
            maximizer_tol,
        })
    }

    /// Checks the horizon against the arm count. A horizon equal to `K` is
    /// accepted so that warm-up-only runs can be expressed.
    pub fn check_arms(&self, arms: usize) -> Result<()> {
        if self.horizon < arms {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("horizon {} is shorter than the warm-up ({arms} arms)", self.horizon),
            });
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Per-round failure level `delta / n`.
    pub fn delta_prime(&self) -> f64 {
        self.delta / self.horizon as f64
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn radius_mode(&self) -> RadiusMode {
        self.radius_mode
    }

    pub fn maximizer_tol(&self) -> f64 {
        self.maximizer_tol
    }
}

/// One round of a simulation run. Arms are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub arm: usize,
    pub reward: f64,
    pub mode: ModelKind,
    /// `None` during warm-up.
    pub optimistic_value: Option<f64>,
    pub inst_regret: f64,
}
