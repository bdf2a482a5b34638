//! A bang-bang extremal: minimize ∫₀¹ x dt with x' = u, u ∈ [-1, 1],
//! x(0) = x(1) = 0.  The costate psi(t) = t - 1/2 crosses zero at t = 1/2,
//! the control switches from -1 to +1 there, and the Hamiltonian stays at
//! the constant 1/2 straight through the switch.

use pontryagin::catalog;
use pontryagin::model::hamiltonian;
use pontryagin::numerics::{shoot, IntegratorConfig, ShootingConfig};
use pontryagin::verify::hamiltonian_constancy;

fn main() {
    let entry = catalog::get("bang-integrator").expect("catalog entry");

    // Without event localization the switch time is quantized to integrator
    // stages, which floors the boundary residual at O(h); ask for a
    // tolerance the discretization can actually deliver.
    let cfg = ShootingConfig {
        residual_tol: 1e-3,
        ..ShootingConfig::default()
    };
    let result = shoot(&entry.problem, -1.0, &[-0.2], &cfg, &IntegratorConfig::rk4(1e-3))
        .expect("shooting converges");
    let e = &result.extremal;

    println!("psi(0) computed : {:.12}", result.psi_a[0]);
    println!("psi(0) closed   : -0.5");

    // Locate the switch: the first node where the control leaves -1.
    let k = e.u.iter().position(|u| u[0] > 0.0).expect("switch exists");
    println!(
        "control switches from {} to {} between t = {:.4} and t = {:.4}",
        e.u[k - 1][0],
        e.u[k][0],
        e.times[k - 1],
        e.times[k]
    );

    for &t_probe in &[0.25, 0.499, 0.501, 0.75] {
        let k = e
            .times
            .iter()
            .position(|&t| (t - t_probe).abs() < 5e-4)
            .unwrap();
        let h = hamiltonian(&entry.problem, &e.x[k], &e.u[k], e.psi0, &e.psi[k]).unwrap();
        println!("H at t = {:>6.4}: {h:.12}", e.times[k]);
    }

    let constancy = hamiltonian_constancy(&entry.problem, e, 1e-4).unwrap();
    println!(
        "hbar = {:.12}, max deviation {:.3e} (constant across the switch)",
        constancy.hbar, constancy.max_dev
    );
    assert!(constancy.pass);
}
