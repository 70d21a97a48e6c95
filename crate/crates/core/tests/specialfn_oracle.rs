mod common;

use common::{oracle_table, rel_err};
use mcev_core::specialfn::{ratio, RatioKernel, RatioMethod, RatioParams};

#[test]
fn dispatcher_matches_oracle_table() {
    let mut worst = 0.0_f64;
    for row in oracle_table() {
        let p = RatioParams::new(row.theta, row.omega, row.x).unwrap();
        let e = ratio(&p, 1e-10).unwrap_or_else(|err| panic!("{row:?}: {err}"));
        let r = rel_err(e.value, row.value);
        worst = worst.max(r);
        assert!(r <= 1e-9, "{row:?}: got {} via {:?} (rel {r:e})", e.value, e.method);
    }
    println!("worst relative error {worst:e}");
}

#[test]
fn every_successful_method_matches_oracle() {
    let k = RatioKernel::default();
    let mut counts = std::collections::HashMap::new();
    for row in oracle_table() {
        let p = RatioParams::new(row.theta, row.omega, row.x).unwrap();
        for m in RatioMethod::ALL {
            if let Ok(e) = k.evaluate(m, &p, 1e-10) {
                *counts.entry(m).or_insert(0) += 1;
                let r = rel_err(e.value, row.value);
                assert!(r <= 1e-9_f64.max(10.0 * e.est_error / row.value.abs()), "{m:?} {row:?}: rel {r:e}");
            }
        }
    }
    println!("{counts:?}");
    assert_eq!(counts[&RatioMethod::ContinuedFraction], oracle_table().len());
}

#[test]
fn cross_method_agreement() {
    let k = RatioKernel::default();
    let thetas: [f64; 6] = [0.4, 0.9, 1.5, 2.7, 4.2, 7.3];
    let omegas = [0.6, 1.3, 2.9, 6.1];
    let xs = [0.0, 0.05, 0.7, 3.0, 9.0, 25.0, 60.0, 150.0, 400.0, 800.0];
    for &t in &thetas {
        for &w in &omegas {
            if (t - w) >= 0.0 && (t - w).fract() == 0.0 {
                continue;
            }
            for &x in &xs {
                let p = RatioParams::new(t, w, x).unwrap();
                let evals: Vec<_> = RatioMethod::ALL
                    .iter()
                    .filter_map(|&m| k.evaluate(m, &p, 1e-11).ok())
                    .collect();
                assert!(!evals.is_empty());
                for a in &evals {
                    for b in &evals {
                        let tol = (a.est_error / a.value.abs() + b.est_error / b.value.abs()).max(1e-8);
                        assert!(
                            rel_err(a.value, b.value) <= tol,
                            "({t},{w},{x}) {:?}={} vs {:?}={}",
                            a.method, a.value, b.method, b.value
                        );
                    }
                }
            }
        }
    }
}
