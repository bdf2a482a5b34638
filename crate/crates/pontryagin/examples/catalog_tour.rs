//! Walk the built-in benchmark problems: every entry carries a closed-form
//! extremal, and every analytic trajectory passes verification at a tight
//! tolerance.

use pontryagin::catalog;
use pontryagin::model::cost;
use pontryagin::verify::verify_extremal;

fn main() {
    for (name, _) in catalog::list() {
        let entry = catalog::get(name).expect("entry");
        println!("{name}: {}", entry.description);
        println!("  provenance: {}", entry.provenance);
        println!("  L = {}", entry.problem.cost);
        for (i, phi) in entry.problem.dynamics.iter().enumerate() {
            println!("  phi[{i}] = {phi}");
        }

        let e = entry.analytic_extremal(2001);
        let report = verify_extremal(&entry.problem, &e, 1e-8).expect("verify");
        let j = cost(&entry.problem, &e).expect("cost");
        println!(
            "  verified at 1e-8: {}   hbar = {:.10} (ref {:.10})   cost = {:.10} (ref {:.10})",
            report.pass,
            report.hbar.unwrap(),
            entry.hbar_star,
            j,
            entry.cost_star
        );
        assert!(report.pass);
        println!();
    }
}
