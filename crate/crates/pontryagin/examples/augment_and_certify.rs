//! The time-augmentation certificate.  Any autonomous problem lifts to one
//! with an extra state s (rescaled time, s' = v) and extra control v.  Along
//! a lifted extremal the new costate p_s must equal the Hamiltonian of the
//! base problem, and p_s must be constant because the augmented Hamiltonian
//! does not depend on s.  Checking both numerically certifies that H itself
//! is constant along the base extremal.

use pontryagin::augment::{augment, augmented_cost, lift, restrict, verify_lift};
use pontryagin::catalog;
use pontryagin::model::cost;

fn main() {
    let entry = catalog::get("lqr-scalar").expect("catalog entry");
    let e = entry.analytic_extremal(2001);
    let base = &entry.problem;

    let v_bar = 0.5;
    let alpha = 0.0;
    let beta = alpha + (base.b - base.a) / (1.0 - v_bar);
    let ap = augment(base, alpha, beta).expect("augment");
    println!(
        "augmented problem: {} states, {} controls, horizon [{alpha}, {beta}]",
        ap.state_dim(),
        ap.control_dim()
    );

    let lifted = lift(base, &e, v_bar, alpha).expect("lift");
    let report = verify_lift(&ap, &lifted, 1e-6).expect("verify lift");
    for c in &report.conditions {
        println!(
            "{:<28} max residual {:>12.3e}  pass = {}",
            c.name, c.max_residual, c.pass
        );
    }
    assert!(report.pass);

    println!(
        "p_s = {:.10}  vs  base hbar = {:.10}",
        lifted.p_s[0], entry.hbar_star
    );

    // The change of variable preserves cost and the original trajectory.
    let j_base = cost(base, &e).expect("base cost");
    let j_lift = augmented_cost(&ap, &lifted).expect("lifted cost");
    println!("cost: base {j_base:.10}, lifted {j_lift:.10}");
    assert!((j_base - j_lift).abs() < 1e-6);

    let back = restrict(&lifted).expect("restrict");
    let worst = e
        .times
        .iter()
        .zip(&back.times)
        .fold(0.0_f64, |a, (s, t)| a.max((s - t).abs()));
    println!("round trip grid error after restriction: {worst:.3e}");
}
