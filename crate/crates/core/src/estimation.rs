//! Online estimators: per-arm upper confidence estimates, the bias-corrected
//! ridge regression for the shared context parameter, its confidence ball,
//! and the optimistic maximizer over the ball intersected with the unit ball.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::envelopes::{kappa_unchecked, EnvelopeParams};
use crate::error::{Error, Result};
use crate::types::{dot, norm, RadiusMode, NORM_SLACK};

/// Confidence width of an arm pulled `pulls` times.
///
/// `sigma * sqrt((1+T)/T^2 * (1 + 2 ln(K sqrt(1+T) / delta')))`.
pub fn arm_ucb_width(pulls: u64, sigma: f64, arms: usize, delta_prime: f64) -> Result<f64> {
    if pulls == 0 {
        return Err(Error::ZeroPulls);
    }
    let t = pulls as f64;
    let log_term = (arms as f64 * (1.0 + t).sqrt() / delta_prime).ln();
    Ok(sigma * ((1.0 + t) / (t * t) * (1.0 + 2.0 * log_term)).sqrt())
}

/// Pull count, empirical mean and upper confidence estimate of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmTracker {
    pulls: u64,
    reward_sum: f64,
    mean: f64,
    width: f64,
    ucb: f64,
}

impl Default for ArmTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl ArmTracker {
    /// An unpulled arm: its index is `+inf`.
    pub fn new() -> Self {
        Self {
            pulls: 0,
            reward_sum: 0.0,
            mean: 0.0,
            width: f64::INFINITY,
            ucb: f64::INFINITY,
        }
    }

    pub fn record(&mut self, reward: f64, sigma: f64, arms: usize, delta_prime: f64) {
        self.pulls += 1;
        self.reward_sum += reward;
        self.mean = self.reward_sum / self.pulls as f64;
        // pulls >= 1 here
        self.width = arm_ucb_width(self.pulls, sigma, arms, delta_prime).unwrap_or(f64::INFINITY);
        self.ucb = self.mean + self.width;
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn ucb(&self) -> f64 {
        self.ucb
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// Ridge regression state `V = I + sum x x^T`, `b = sum x y`, `theta = V^{-1} b`.
///
/// The Cholesky factor of `V` is refreshed on every update and reused for
/// solves and the log-determinant.
#[derive(Debug, Clone)]
pub struct RidgeState {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    theta_hat: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    rows_seen: usize,
}

impl RidgeState {
    pub fn new(dim: usize) -> Self {
        let gram = DMatrix::identity(dim, dim);
        let chol = Cholesky::new(gram.clone()).expect("identity is positive definite");
        Self {
            gram,
            moment: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            chol,
            rows_seen: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// Adds one regression row.
    pub fn update(&mut self, context: &[f64], target: f64) -> Result<()> {
        if context.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: context.len(),
            });
        }
        let x = DVector::from_column_slice(context);
        self.gram.ger(1.0, &x, &x, 1.0);
        self.moment.axpy(target, &x, 1.0);
        self.rows_seen += 1;
        // gram >= I stays positive definite
        self.chol = Cholesky::new(self.gram.clone()).expect("ridge Gram matrix is positive definite");
        self.theta_hat = self.chol.solve(&self.moment);
        Ok(())
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn theta_hat(&self) -> &[f64] {
        self.theta_hat.as_slice()
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.gram.symmetric_eigenvalues().min()
    }

    /// `x^T V^{-1} x`.
    pub fn inv_norm_sq(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let sol = self.chol.solve(&v);
        v.dot(&sol).max(0.0)
    }
}

/// Self-normalized ellipsoid radius `sqrt(2 sigma^2 ln(det(V)^{1/2} / delta')) + bound`.
pub fn self_normalized_radius(log_det: f64, sigma: f64, delta_prime: f64, bound: f64) -> f64 {
    let inner = 0.5 * log_det + (1.0 / delta_prime).ln();
    (2.0 * sigma * sigma * inner.max(0.0)).sqrt() + bound
}

/// Euclidean radius of the confidence ball built from the rows through round `t`.
///
/// `t = K` (no rows yet) is accepted; earlier rounds are rejected.
pub fn confidence_radius(state: &RidgeState, p: &EnvelopeParams, t: usize, mode: RadiusMode) -> Result<f64> {
    if t < p.arms() {
        return Err(Error::RoundBeforeWarmup {
            round: t,
            arms: p.arms(),
        });
    }
    Ok(match mode {
        RadiusMode::Theoretical => kappa_unchecked(p, t),
        RadiusMode::Empirical => {
            let beta = self_normalized_radius(state.log_det(), p.sigma(), p.delta_prime(), 1.0);
            beta / state.min_eigenvalue().sqrt()
        }
    })
}

/// Euclidean ball `{theta : |theta - center| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBall {
    center: Vec<f64>,
    radius: f64,
}

impl ConfidenceBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be positive, got {radius}"),
            });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "center",
                reason: "must be finite".into(),
            });
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Result of [`optimistic_max`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticPoint {
    pub value: f64,
    pub theta: Vec<f64>,
    /// The ball missed the unit ball; `theta` is the projection of its center
    /// onto the unit sphere.
    pub center_projected: bool,
}

/// Maximizes `<alpha, theta>` over the ball intersected with the closed unit ball.
///
/// The optimum lies in `span{center, alpha}`. Depending on which constraints
/// bind it is `center + r * alpha_hat`, `alpha_hat`, or the end of the
/// feasible arc of the unit circle (in that plane) nearest to `alpha_hat`.
pub fn optimistic_max(alpha: &[f64], ball: &ConfidenceBall, tol: f64) -> Result<OptimisticPoint> {
    let dim = ball.center.len();
    if alpha.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: alpha.len(),
        });
    }
    let alpha_norm = norm(alpha);
    if alpha_norm > 1.0 + NORM_SLACK {
        return Err(Error::ContextNormExceeded { norm: alpha_norm });
    }
    let r = ball.radius;
    let center = &ball.center;
    let center_norm = norm(center);
    if center_norm > 1.0 + r {
        // Empty intersection: fall back to the unit-ball point nearest the ball,
        // which is feasible for every larger radius.
        let theta: Vec<f64> = center.iter().map(|c| c / center_norm).collect();
        return Ok(OptimisticPoint {
            value: dot(alpha, &theta),
            theta,
            center_projected: true,
        });
    }
    if alpha_norm == 0.0 {
        let theta = if center_norm > 1.0 {
            center.iter().map(|c| c / center_norm).collect()
        } else {
            center.clone()
        };
        return Ok(OptimisticPoint {
            value: 0.0,
            theta,
            center_projected: false,
        });
    }
    let alpha_hat: Vec<f64> = alpha.iter().map(|a| a / alpha_norm).collect();
    let finish = |theta: Vec<f64>| OptimisticPoint {
        value: dot(alpha, &theta),
        theta,
        center_projected: false,
    };

    // Only the confidence ball binds.
    let top: Vec<f64> = center.iter().zip(&alpha_hat).map(|(c, a)| c + r * a).collect();
    if norm(&top) <= 1.0 + tol {
        return Ok(finish(top));
    }
    // Only the unit ball binds.
    let gap: Vec<f64> = alpha_hat.iter().zip(center).map(|(a, c)| a - c).collect();
    if norm(&gap) <= r + tol {
        return Ok(finish(alpha_hat));
    }

    // Both bind. On the unit circle the ball constraint reads
    // <theta, c_hat> >= (1 + |c|^2 - r^2) / (2 |c|), an arc of half-angle psi.
    let c_hat: Vec<f64> = center.iter().map(|c| c / center_norm).collect();
    let cos_psi = ((1.0 + center_norm * center_norm - r * r) / (2.0 * center_norm)).clamp(-1.0, 1.0);
    let sin_psi = (1.0 - cos_psi * cos_psi).max(0.0).sqrt();
    let cos_omega = dot(&alpha_hat, &c_hat).clamp(-1.0, 1.0);
    let mut perp: Vec<f64> = alpha_hat.iter().zip(&c_hat).map(|(a, c)| a - cos_omega * c).collect();
    let perp_norm = norm(&perp);
    if perp_norm > 1e-12 {
        perp.iter_mut().for_each(|v| *v /= perp_norm);
    } else {
        // alpha is anti-parallel to the center; every arc end is optimal.
        perp = orthogonal_unit(&c_hat);
    }
    let theta = c_hat
        .iter()
        .zip(&perp)
        .map(|(c, e)| cos_psi * c + sin_psi * e)
        .collect();
    Ok(finish(theta))
}

fn orthogonal_unit(u: &[f64]) -> Vec<f64> {
    let pivot = u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i);
    let mut e = vec![0.0; u.len()];
    if u.len() < 2 {
        return e;
    }
    e[pivot] = 1.0;
    let proj = u[pivot];
    e.iter_mut().zip(u).for_each(|(v, c)| *v -= proj * c);
    let n = norm(&e);
    e.iter_mut().for_each(|v| *v /= n);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn width_fixture() {
        let w = arm_ucb_width(1, 1.0, 2, 0.1).unwrap();
        assert!(((w - 3.920_360_118_067_708) / w).abs() < 1e-12);
        assert_eq!(arm_ucb_width(0, 1.0, 2, 0.1), Err(Error::ZeroPulls));
    }

    #[test]
    fn width_vanishes() {
        assert!(arm_ucb_width(100_000_000, 1.0, 5, 1e-3).unwrap() < 1e-3);
    }

    #[test]
    fn width_strictly_decreasing() {
        let mut prev = arm_ucb_width(1, 1.0, 5, 1e-3).unwrap();
        for t in 2..=1_000_000u64 {
            let w = arm_ucb_width(t, 1.0, 5, 1e-3).unwrap();
            assert!(w < prev, "width not decreasing at T = {t}");
            prev = w;
        }
    }

    #[test]
    fn tracker_first_pull() {
        let mut a = ArmTracker::new();
        assert_eq!(a.ucb(), f64::INFINITY);
        a.record(0.7, 1.0, 3, 0.05);
        assert_eq!(a.pulls(), 1);
        assert_eq!(a.mean(), 0.7);
        assert_eq!(a.width(), a.ucb() - a.mean());
        assert!((a.width() - arm_ucb_width(1, 1.0, 3, 0.05).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ridge_single_row() {
        let mut r = RidgeState::new(3);
        r.update(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let th = r.theta_hat();
        assert!((th[0] - 0.5).abs() < 1e-15 && th[1] == 0.0 && th[2] == 0.0);
        let before = r.theta_hat().to_vec();
        r.update(&[0.0, 0.0, 0.0], 3.0).unwrap();
        assert_eq!(r.theta_hat(), before.as_slice());
        assert_eq!(r.rows_seen(), 2);
    }

    #[test]
    fn ridge_residual_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = RidgeState::new(6);
        for _ in 0..40 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-0.4..0.4)).collect();
            r.update(&x, rng.random_range(-2.0..2.0)).unwrap();
            let resid = r.gram() * DVector::from_column_slice(r.theta_hat()) - r.moment();
            assert!(resid.norm() < 1e-10);
            assert!(r.min_eigenvalue() >= 1.0 - 1e-12);
            let direct = r.gram().determinant().ln();
            assert!((r.log_det() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn empirical_radius_without_rows() {
        let p = EnvelopeParams::new(0.01, 1.0, 3, 4, 100, 0.25, 0.25).unwrap();
        let r = RidgeState::new(4);
        let radius = confidence_radius(&r, &p, 3, RadiusMode::Empirical).unwrap();
        let beta = (2.0 * (1.0f64 / 0.01).ln()).sqrt() + 1.0;
        assert!((radius - beta).abs() < 1e-12);
        assert!(confidence_radius(&r, &p, 2, RadiusMode::Empirical).is_err());
    }

    #[test]
    fn theoretical_radius_delegates() {
        let p = EnvelopeParams::new(0.01, 1.0, 3, 4, 100, 0.25, 0.25).unwrap();
        let r = RidgeState::new(4);
        for t in [4, 10, 99] {
            let got = confidence_radius(&r, &p, t, RadiusMode::Theoretical).unwrap();
            let want = crate::envelopes::kappa_envelope(&p, t).unwrap();
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn optimistic_zero_alpha() {
        let ball = ConfidenceBall::new(vec![0.3, 0.4], 0.2).unwrap();
        let s = optimistic_max(&[0.0, 0.0], &ball, 1e-9).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.theta, vec![0.3, 0.4]);

        let far = ConfidenceBall::new(vec![1.2, 0.0], 0.5).unwrap();
        let s = optimistic_max(&[0.0, 0.0], &far, 1e-9).unwrap();
        assert!((norm(&s.theta) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimistic_inner_ball() {
        let ball = ConfidenceBall::new(vec![0.0; 3], 0.5).unwrap();
        let s = optimistic_max(&[1.0, 0.0, 0.0], &ball, 1e-9).unwrap();
        assert!((s.value - 0.5).abs() < 1e-15);
        assert_eq!(s.theta, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn optimistic_huge_ball_is_unit_ball() {
        let ball = ConfidenceBall::new(vec![0.1, -0.2], 10.0).unwrap();
        let s = optimistic_max(&[0.6, 0.8], &ball, 1e-9).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimistic_disjoint_ball_is_projected() {
        let ball = ConfidenceBall::new(vec![3.0, 0.0], 0.5).unwrap();
        let s = optimistic_max(&[0.0, 1.0], &ball, 1e-9).unwrap();
        assert!(s.center_projected);
        assert_eq!(s.theta, vec![1.0, 0.0]);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn optimistic_both_constraints_bind() {
        let ball = ConfidenceBall::new(vec![0.9, 0.0, 0.0], 0.5).unwrap();
        let s = optimistic_max(&[0.0, 1.0, 0.0], &ball, 1e-9).unwrap();
        let cos_psi: f64 = (1.0 + 0.81 - 0.25) / 1.8;
        let sin_psi = (1.0 - cos_psi * cos_psi).sqrt();
        assert!((s.value - sin_psi).abs() < 1e-12);
        assert!((s.theta[0] - cos_psi).abs() < 1e-12);
        assert!((norm(&s.theta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimistic_anti_parallel() {
        // Center beyond the unit sphere, alpha pointing back through the origin.
        let ball = ConfidenceBall::new(vec![1.2, 0.0], 0.4).unwrap();
        let s = optimistic_max(&[-0.5, 0.0], &ball, 1e-9).unwrap();
        assert!((s.value + 0.5 * 0.8).abs() < 1e-12);
        let ball = ConfidenceBall::new(vec![0.9, 0.0], 0.5).unwrap();
        let s = optimistic_max(&[-1.0, 0.0], &ball, 1e-9).unwrap();
        assert!((s.value + 0.4).abs() < 1e-12);
    }
}
