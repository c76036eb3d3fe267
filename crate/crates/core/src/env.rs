//! Simulated environments: instance generation, context sampling, reward
//! draws and the pseudo-regret oracle.
//!
//! Randomness comes from three independent ChaCha streams derived from one
//! master seed (see [`RunSeeds`]). Contexts are drawn for arms `0..K` in
//! order, coordinate by coordinate, from the context stream. Each reward
//! consumes exactly one standard normal from the noise stream. Because the
//! context and noise streams never depend on which arm is played, two
//! policies run with the same seeds see the same contexts and noise.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{ContextDistSpec, ContextKind, ContextSlate, InstanceSpec, ModelKind};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `stream` of master seed `master`: `splitmix64(master + stream * GOLDEN)`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(stream.wrapping_mul(GOLDEN)))
}

/// Per-run seeds for the instance, context and noise streams (stream ids 0, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub instance: u64,
    pub context: u64,
    pub noise: u64,
}

impl RunSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            instance: derive_seed(master, 0),
            context: derive_seed(master, 1),
            noise: derive_seed(master, 2),
        }
    }
}

/// Source of per-arm context vectors.
pub trait ContextSampler: Send {
    /// Fills `out` with one context vector of norm at most 1.
    fn sample(&mut self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// Uniform on the unit sphere (normalized standard Gaussian).
#[derive(Debug, Clone, Copy, Default)]
pub struct SphereSampler;

impl ContextSampler for SphereSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        loop {
            for v in out.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let n = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                out.iter_mut().for_each(|v| *v /= n);
                return;
            }
        }
    }
}

/// I.i.d. coordinates uniform on `{-1/sqrt(d), +1/sqrt(d)}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HypercubeSampler;

impl ContextSampler for HypercubeSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let s = 1.0 / (out.len() as f64).sqrt();
        for v in out.iter_mut() {
            *v = if rng.random::<bool>() { s } else { -s };
        }
    }
}

fn uniform_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    SphereSampler.sample(rng, &mut v);
    v
}

/// Parameters from which experiment instances are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceTemplate {
    pub model: ModelKind,
    pub arms: usize,
    pub dim: usize,
    pub sigma: f64,
    pub context: ContextDistSpec,
}

impl InstanceTemplate {
    /// Biases i.i.d. uniform on (-1, 1); theta uniform on the unit sphere for
    /// the complex model and zero otherwise.
    pub fn draw(&self, seed: u64) -> Result<InstanceSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let biases = (0..self.arms).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = match self.model {
            ModelKind::Simple => vec![0.0; self.dim],
            ModelKind::Complex => {
                let mut v = uniform_sphere(&mut rng, self.dim);
                // guard against 1 + ulp norms
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1.0 {
                    v.iter_mut().for_each(|x| *x /= n);
                }
                v
            }
        };
        InstanceSpec::new(self.model, biases, theta, self.sigma, self.context)
    }
}

/// One simulated environment.
pub struct Environment {
    spec: InstanceSpec,
    sampler: Box<dyn ContextSampler>,
    context_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    slate: Option<ContextSlate>,
}

impl std::fmt::Debug for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Environment")
            .field("spec", &self.spec)
            .field("slate", &self.slate)
            .finish_non_exhaustive()
    }
}

impl Environment {
    /// Environment with the built-in sampler for the instance's context kind.
    pub fn new(spec: InstanceSpec, seeds: RunSeeds) -> Result<Self> {
        let sampler: Box<dyn ContextSampler> = match spec.context().kind() {
            ContextKind::UnitSphereUniform => Box::new(SphereSampler),
            ContextKind::ScaledHypercube => Box::new(HypercubeSampler),
            ContextKind::Custom => return Err(Error::MissingSampler),
        };
        Ok(Self::with_sampler(spec, seeds, sampler))
    }

    pub fn with_sampler(spec: InstanceSpec, seeds: RunSeeds, sampler: Box<dyn ContextSampler>) -> Self {
        Self {
            spec,
            sampler,
            context_rng: ChaCha8Rng::seed_from_u64(seeds.context),
            noise_rng: ChaCha8Rng::seed_from_u64(seeds.noise),
            slate: None,
        }
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn current_slate(&self) -> Option<&ContextSlate> {
        self.slate.as_ref()
    }

    /// Draws fresh contexts for round `t`.
    pub fn sample_slate(&mut self, t: usize) -> Result<&ContextSlate> {
        let (k, d) = (self.spec.arms(), self.spec.dim());
        let mut data = vec![0.0; k * d];
        for row in data.chunks_mut(d) {
            self.sampler.sample(&mut self.context_rng, row);
        }
        self.slate = Some(ContextSlate::from_flat(t, d, data)?);
        Ok(self.slate.as_ref().expect("just set"))
    }

    fn slate_for(&self, t: usize) -> Result<&ContextSlate> {
        match &self.slate {
            Some(s) if s.round() == t => Ok(s),
            Some(s) => Err(Error::RoundMismatch {
                expected: t,
                slate: s.round(),
            }),
            None => Err(Error::RoundMismatch { expected: t, slate: 0 }),
        }
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.spec.arms() {
            return Err(Error::InvalidParameter {
                name: "arm",
                reason: format!("arm {arm} out of range for K = {}", self.spec.arms()),
            });
        }
        Ok(())
    }

    /// Mean reward of `arm` plus Gaussian noise of scale sigma.
    pub fn draw_reward(&mut self, t: usize, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        let mean = self.spec.mean_reward(arm, self.slate_for(t)?.vector(arm));
        let z: f64 = StandardNormal.sample(&mut self.noise_rng);
        Ok(mean + self.spec.sigma() * z)
    }

    /// Best arm of the current slate (ties to the lowest index) and its mean.
    pub fn best_arm(&self, t: usize) -> Result<(usize, f64)> {
        let slate = self.slate_for(t)?;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, a) in slate.iter().enumerate() {
            let m = self.spec.mean_reward(i, a);
            if m > best.1 {
                best = (i, m);
            }
        }
        Ok(best)
    }

    /// Pseudo-regret of playing `arm` at round `t`.
    pub fn inst_regret(&self, t: usize, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        let (_, best) = self.best_arm(t)?;
        let chosen = self.spec.mean_reward(arm, self.slate_for(t)?.vector(arm));
        Ok((best - chosen).max(0.0))
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("writing to a String");
    }
    s
}

/// Serializes an instance as `key=value` lines in the fixed order
/// `model, arms, dim, sigma, context, rho_min, rho_max, biases, theta_star`.
/// Vectors are comma-separated; floats use shortest round-trip formatting.
pub fn instance_to_text(spec: &InstanceSpec) -> String {
    let c = spec.context();
    format!(
        "model={}\narms={}\ndim={}\nsigma={}\ncontext={}\nrho_min={}\nrho_max={}\nbiases={}\ntheta_star={}\n",
        spec.model(),
        spec.arms(),
        spec.dim(),
        spec.sigma(),
        c.kind().as_str(),
        c.rho_min(),
        c.rho_max(),
        join(spec.biases()),
        join(spec.theta_star()),
    )
}

/// Parses the format written by [`instance_to_text`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn instance_from_text(text: &str) -> Result<InstanceSpec> {
    const KEYS: [&str; 9] = [
        "model",
        "arms",
        "dim",
        "sigma",
        "context",
        "rho_min",
        "rho_max",
        "biases",
        "theta_star",
    ];
    let mut values: [Option<(usize, &str)>; 9] = [None; 9];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            reason: "expected key=value".into(),
        })?;
        let slot = KEYS.iter().position(|k| *k == key.trim()).ok_or_else(|| Error::Parse {
            line: idx + 1,
            reason: format!("unknown key `{}`", key.trim()),
        })?;
        values[slot] = Some((idx + 1, value.trim()));
    }
    let get = |i: usize| {
        values[i].ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing key `{}`", KEYS[i]),
        })
    };
    fn num<T: std::str::FromStr>((line, v): (usize, &str)) -> Result<T> {
        v.parse().map_err(|_| Error::Parse {
            line,
            reason: format!("invalid number `{v}`"),
        })
    }
    fn list((line, v): (usize, &str)) -> Result<Vec<f64>> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|x| num((line, x.trim()))).collect()
    }

    let model: ModelKind = get(0)?.1.parse()?;
    let arms: usize = num(get(1)?)?;
    let dim: usize = num(get(2)?)?;
    let sigma: f64 = num(get(3)?)?;
    let kind: ContextKind = get(4)?.1.parse()?;
    let rho_min: f64 = num(get(5)?)?;
    let rho_max: f64 = num(get(6)?)?;
    let biases = list(get(7)?)?;
    let theta = list(get(8)?)?;
    if biases.len() != arms {
        return Err(Error::DimensionMismatch {
            expected: arms,
            actual: biases.len(),
        });
    }
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: theta.len(),
        });
    }
    let context = ContextDistSpec::new(kind, rho_min, rho_max, dim)?;
    InstanceSpec::new(model, biases, theta, sigma, context)
}
