//! Machine-check a candidate extremal: control and adjoint residuals,
//! pointwise maximality, and constancy of the Hamiltonian, with a
//! per-condition report.  A corrupted copy of the same trajectory is checked
//! too, to show what failure looks like.

use pontryagin::catalog;
use pontryagin::verify::verify_extremal;

fn main() {
    let entry = catalog::get("harmonic-action").expect("catalog entry");
    let e = entry.analytic_extremal(2001);

    let report = verify_extremal(&entry.problem, &e, 1e-6).expect("verify");
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    assert!(report.pass);
    println!(
        "hbar = {:.10} (reference {:.10})",
        report.hbar.unwrap(),
        entry.hbar_star
    );

    // Corrupt one interior state value and watch the dynamics residual blow up.
    let mut bad = e.clone();
    bad.x[1000][0] += 1e-3;
    let report = verify_extremal(&entry.problem, &bad, 1e-6).expect("verify");
    assert!(!report.pass);
    for c in &report.conditions {
        println!(
            "{:<24} max residual {:>12.3e}  pass = {}",
            c.name, c.max_residual, c.pass
        );
    }
}
