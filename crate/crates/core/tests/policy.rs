mod common;

use common::*;
use osom::harness::run_single;
use osom::policy::{Oful, Osom, Setup, Ucb};
use osom::{ModelKind, Policy, PolicyKind, RadiusMode};

/// Mode sequence of `logs` has the shape `Simple+ Complex*`.
fn modes_are_monotone(logs: &[osom::RoundLog]) -> bool {
    let first_complex = logs
        .iter()
        .position(|l| l.mode == ModelKind::Complex)
        .unwrap_or(logs.len());
    first_complex > 0 && logs[first_complex..].iter().all(|l| l.mode == ModelKind::Complex)
}

#[test]
fn long_run_switches_once_and_keeps_the_accounting_identity() {
    let n = 200_000;
    let spec = complex_instance(&[0.0, 0.0], &[1.0, 0.0], 0.1);
    let k = spec.arms();
    let mut osom = Osom::new(Setup::new(&spec, cfg(0.05, n, RadiusMode::Empirical)).unwrap());
    let (mut opt, mut recv) = (0.0, 0.0);
    let mut frozen = None;
    let logs = drive(&mut osom, &spec, 0, n, |pol, log| {
        if log.round > k && log.mode == ModelKind::Simple {
            opt += log.optimistic_value.unwrap();
            recv += log.reward;
        }
        // O(n) oracle: plain sums over the simple-mode rounds after warm-up
        let tol = 1e-9 * (1.0 + opt.abs() + recv.abs());
        assert!((pol.sum_optimistic() - opt).abs() <= tol);
        assert!((pol.sum_received() - recv).abs() <= tol);
        if log.mode == ModelKind::Complex {
            let now = (pol.sum_optimistic(), pol.sum_received());
            assert_eq!(*frozen.get_or_insert(now), now);
        }
    });
    let switch = osom.switch_round().expect("a switch on a long horizon");
    assert!(modes_are_monotone(&logs));
    assert_eq!(logs[switch - 1].mode, ModelKind::Complex);
    assert_eq!(logs[switch - 2].mode, ModelKind::Simple);
}

#[test]
fn warm_up_order_is_shared() {
    let spec = simple_instance(&[0.9, -0.5, 0.2], 4, 1.0);
    for kind in PolicyKind::ALL {
        let rec = run_single(kind, &spec, 5, cfg(0.05, 3, RadiusMode::Empirical)).unwrap();
        let arms: Vec<usize> = rec.logs.iter().map(|l| l.arm).collect();
        assert_eq!(arms, vec![0, 1, 2]);
    }
}

#[test]
fn osom_plays_ucb_until_it_switches() {
    let tmpl = template(ModelKind::Simple, 5, 10, 1.0);
    for seed in 0..20 {
        let spec = tmpl.draw(seed).unwrap();
        let config = cfg(0.05, 300, RadiusMode::Empirical);
        let ucb = run_single(PolicyKind::Ucb, &spec, seed, config).unwrap();
        let osom = run_single(PolicyKind::Osom, &spec, seed, config).unwrap();
        let stop = osom.switch_round.map_or(300, |t| t - 1);
        for (a, b) in ucb.logs.iter().zip(&osom.logs).take(stop) {
            assert_eq!(a.arm, b.arm);
            assert_eq!(a.reward, b.reward);
        }
        assert!(modes_are_monotone(&osom.logs));
    }
}

#[test]
fn runs_are_deterministic() {
    let spec = template(ModelKind::Complex, 4, 6, 1.0).draw(9).unwrap();
    for kind in PolicyKind::ALL {
        let config = cfg(0.05, 150, RadiusMode::Empirical);
        let a = run_single(kind, &spec, 77, config).unwrap();
        let b = run_single(kind, &spec, 77, config).unwrap();
        let bits = |r: &osom::harness::RunRecord| -> Vec<(usize, u64, u64)> {
            r.logs
                .iter()
                .map(|l| (l.arm, l.reward.to_bits(), l.inst_regret.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a, b);
    }
}

#[test]
fn every_policy_logs_its_mode_and_optimism() {
    let spec = complex_instance(&[0.2, 0.1], &[0.0, 0.6, 0.8], 1.0);
    let config = cfg(0.05, 40, RadiusMode::Theoretical);
    let mut ucb = Ucb::new(Setup::new(&spec, config).unwrap());
    let mut oful = Oful::new(Setup::new(&spec, config).unwrap());
    let ucb_logs = drive(&mut ucb, &spec, 4, 40, |_, _| {});
    let oful_logs = drive(&mut oful, &spec, 4, 40, |_, _| {});
    assert!(ucb_logs.iter().all(|l| l.mode == ModelKind::Simple));
    assert!(oful_logs.iter().all(|l| l.mode == ModelKind::Complex));
    assert!(ucb_logs[2..].iter().all(|l| l.optimistic_value.is_some()));
    assert_eq!(oful.ridge().rows_seen(), 38);
}

#[test]
fn oful_regret_is_sublinear_on_complex_instances() {
    let tmpl = template(ModelKind::Complex, 5, 50, 1.0);
    let (mut at_100, mut at_300) = (0.0, 0.0);
    let seeds = 50;
    for seed in 0..seeds {
        let spec = tmpl.draw(seed).unwrap();
        let rec = run_single(PolicyKind::Oful, &spec, seed, cfg(0.05, 300, RadiusMode::Empirical)).unwrap();
        let cum = rec.cumulative_regret();
        at_100 += cum[99] / 100.0;
        at_300 += cum[299] / 300.0;
    }
    let (a, b) = (at_100 / seeds as f64, at_300 / seeds as f64);
    assert!(b <= 0.6 * a, "average regret per round {a} at n=100, {b} at n=300");
}

#[test]
fn osom_switches_on_a_large_model_gap() {
    let n = 2000;
    let spec = complex_instance(&[0.0, 0.0], &[1.0, 0.0], 0.1);
    let seeds = 50;
    let switched = (0..seeds)
        .filter(|&seed| {
            run_single(PolicyKind::Osom, &spec, seed, cfg(0.05, n, RadiusMode::Empirical))
                .unwrap()
                .switch_round
                .is_some()
        })
        .count();
    let freq = switched as f64 / seeds as f64;
    assert!(freq >= 0.8, "switch frequency {freq}");
}
