//! Single shooting on the scalar linear-quadratic problem
//!
//!   minimize  ∫₀¹ (x² + u²)/2 dt,   x' = u,   x(0) = 1,  x(1) free,
//!
//! whose extremal is x(t) = sinh(1-t)/sinh(1) with initial costate
//! psi(0) = -coth(1).  The solver starts from a deliberately poor guess and
//! the result is compared against the closed form.

use pontryagin::catalog;
use pontryagin::numerics::{shoot, IntegratorConfig, ShootingConfig};

fn main() {
    let entry = catalog::get("lqr-scalar").expect("catalog entry");
    let coth1 = 1f64.cosh() / 1f64.sinh();

    let result = shoot(
        &entry.problem,
        -1.0,
        &[-3.0], // true value is about -1.313
        &ShootingConfig::default(),
        &IntegratorConfig::rk4(1e-3),
    )
    .expect("shooting converges");

    println!(
        "converged in {} iterations, boundary residual {:.3e}",
        result.iterations, result.residual_norm
    );
    println!("psi(0) computed : {:.12}", result.psi_a[0]);
    println!("psi(0) closed   : {:.12}", -coth1);

    let e = &result.extremal;
    let mut worst = 0.0_f64;
    for (k, &t) in e.times.iter().enumerate() {
        let (x_ref, _, _) = entry.analytic_at(t);
        worst = worst.max((e.x[k][0] - x_ref[0]).abs());
    }
    println!("max |x - x_ref| on the grid: {worst:.3e}");
    assert!((result.psi_a[0] + coth1).abs() < 1e-8);
    assert!(worst < 1e-8);
}
