#![allow(dead_code)]

use osom::env::{Environment, InstanceTemplate, RunSeeds};
use osom::{AlgoConfig, ContextDistSpec, ContextKind, InstanceSpec, ModelKind, Policy, RadiusMode, RoundLog};

pub fn sphere(d: usize) -> ContextDistSpec {
    ContextDistSpec::isotropic(ContextKind::UnitSphereUniform, d).unwrap()
}

pub fn simple_instance(biases: &[f64], d: usize, sigma: f64) -> InstanceSpec {
    InstanceSpec::new(ModelKind::Simple, biases.to_vec(), vec![0.0; d], sigma, sphere(d)).unwrap()
}

pub fn complex_instance(biases: &[f64], theta: &[f64], sigma: f64) -> InstanceSpec {
    InstanceSpec::new(
        ModelKind::Complex,
        biases.to_vec(),
        theta.to_vec(),
        sigma,
        sphere(theta.len()),
    )
    .unwrap()
}

pub fn template(model: ModelKind, arms: usize, dim: usize, sigma: f64) -> InstanceTemplate {
    InstanceTemplate {
        model,
        arms,
        dim,
        sigma,
        context: sphere(dim),
    }
}

pub fn cfg(delta: f64, n: usize, mode: RadiusMode) -> AlgoConfig {
    AlgoConfig::new(delta, n, mode, 1e-9).unwrap()
}

/// Plays `policy` for `n` rounds, calling `inspect` with the policy and the
/// round just completed.
pub fn drive<P: Policy>(
    policy: &mut P,
    spec: &InstanceSpec,
    master: u64,
    n: usize,
    mut inspect: impl FnMut(&P, &RoundLog),
) -> Vec<RoundLog> {
    let mut env = Environment::new(spec.clone(), RunSeeds::from_master(master)).unwrap();
    let mut logs = Vec::with_capacity(n);
    for t in 1..=n {
        let slate = env.sample_slate(t).unwrap().clone();
        let d = policy.select_arm(t, &slate).unwrap();
        let reward = env.draw_reward(t, d.arm).unwrap();
        let inst_regret = env.inst_regret(t, d.arm).unwrap();
        policy.observe(t, d.arm, reward, &slate).unwrap();
        let log = RoundLog {
            round: t,
            arm: d.arm,
            reward,
            mode: d.mode,
            optimistic_value: d.optimistic_value,
            inst_regret,
        };
        inspect(policy, &log);
        logs.push(log);
    }
    logs
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ridge solution of `(A^T A + I) theta = A^T g` from scratch.
pub fn ridge_oracle(rows: &[Vec<f64>], targets: &[f64], d: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (x, g) in rows.iter().zip(targets) {
        for i in 0..d {
            b[i] += x[i] * g;
            for j in 0..d {
                a[i][j] += x[i] * x[j];
            }
        }
    }
    dense_solve(a, b)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `(max - min) / min` of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    (max - min) / min
}
