//! Built-in benchmark problems with closed-form extremals. These are the
//! oracles for everything else: each entry carries analytic trajectories
//! plus reference constants computed by hand from the closed form.

use crate::expr::parse;
use crate::model::{BoundarySpec, ControlProblem, ControlRegion, Endpoint, Extremal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
}

/// Closed-form (x, u, psi) at a given time.
pub type AnalyticPoint = fn(f64) -> (Vec<f64>, Vec<f64>, Vec<f64>);

pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Where the closed form comes from.
    pub provenance: &'static str,
    pub problem: ControlProblem,
    pub psi_a_star: Vec<f64>,
    pub hbar_star: f64,
    pub cost_star: f64,
    /// Control switch times that should appear as explicit grid nodes.
    pub switch_times: Vec<f64>,
    analytic: AnalyticPoint,
}

impl CatalogEntry {
    pub fn analytic_at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (self.analytic)(t)
    }

    /// Samples the closed-form extremal on a uniform grid with `nodes`
    /// points, inserting any switch time that is not already a node.
    pub fn analytic_extremal(&self, nodes: usize) -> Extremal {
        let (a, b) = (self.problem.a, self.problem.b);
        let mut times: Vec<f64> = (0..nodes)
            .map(|k| a + (b - a) * k as f64 / (nodes - 1) as f64)
            .collect();
        for &sw in &self.switch_times {
            if !times.iter().any(|t| (t - sw).abs() < 1e-14) {
                times.push(sw);
            }
        }
        times.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut x = Vec::with_capacity(times.len());
        let mut u = Vec::with_capacity(times.len());
        let mut psi = Vec::with_capacity(times.len());
        for &t in &times {
            let (xt, ut, pt) = (self.analytic)(t);
            x.push(xt);
            u.push(ut);
            psi.push(pt);
        }
        Extremal::new(times, x, u, -1.0, psi).expect("catalog closed form is a valid extremal")
    }
}

pub const NAMES: [&str; 4] = ["lqr-scalar", "bang-integrator", "harmonic-action", "rest"];

pub fn list() -> Vec<(&'static str, &'static str)> {
    NAMES
        .iter()
        .map(|name| {
            let e = get(name).unwrap();
            (e.name, e.description)
        })
        .collect()
}

pub fn get(name: &str) -> Result<CatalogEntry, CatalogError> {
    match name {
        "lqr-scalar" => Ok(lqr_scalar()),
        "bang-integrator" => Ok(bang_integrator()),
        "harmonic-action" => Ok(harmonic_action()),
        "rest" => Ok(rest()),
        other => Err(CatalogError::UnknownEntry(other.to_string())),
    }
}

fn boundary(xa: f64, xb: f64) -> BoundarySpec {
    BoundarySpec {
        start: vec![Endpoint::Fixed(xa)],
        end: vec![Endpoint::Fixed(xb)],
    }
}

fn lqr_scalar() -> CatalogEntry {
    fn analytic(t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let sinh1 = 1f64.sinh();
        let x = (1.0 - t).sinh() / sinh1;
        let u = -(1.0 - t).cosh() / sinh1;
        (vec![x], vec![u], vec![u])
    }
    let coth1 = 1.0 / 1f64.tanh();
    CatalogEntry {
        name: "lqr-scalar",
        description: "scalar linear-quadratic regulator on [0,1], x(0)=1 to x(1)=0",
        provenance: "x(t) = sinh(1-t)/sinh(1), psi = u = x'; H level 1/(2 sinh^2 1)",
        problem: ControlProblem {
            n: 1,
            r: 1,
            cost: parse("(x1^2 + u1^2)/2", 1, 1).unwrap(),
            dynamics: vec![parse("u1", 1, 1).unwrap()],
            region: ControlRegion::Unconstrained,
            a: 0.0,
            b: 1.0,
            boundary: boundary(1.0, 0.0),
        },
        psi_a_star: vec![-coth1],
        hbar_star: 0.5 / 1f64.sinh().powi(2),
        cost_star: 0.5 * coth1,
        switch_times: vec![],
        analytic,
    }
}

fn bang_integrator() -> CatalogEntry {
    fn analytic(t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        // Switch at t = 1/2; at the node itself the maximizer is singular
        // and the tie-break takes the lower bound.
        if t <= 0.5 {
            (vec![-t], vec![-1.0], vec![t - 0.5])
        } else {
            (vec![t - 1.0], vec![1.0], vec![t - 0.5])
        }
    }
    CatalogEntry {
        name: "bang-integrator",
        description: "minimum integral of x for an integrator with |u| <= 1, x(0)=x(1)=0",
        provenance: "psi(t) = t - 1/2, u = sign(psi), x piecewise linear; H = 1/2",
        problem: ControlProblem {
            n: 1,
            r: 1,
            cost: parse("x1", 1, 1).unwrap(),
            dynamics: vec![parse("u1", 1, 1).unwrap()],
            region: ControlRegion::Box {
                lo: vec![-1.0],
                hi: vec![1.0],
            },
            a: 0.0,
            b: 1.0,
            boundary: boundary(0.0, 0.0),
        },
        psi_a_star: vec![-0.5],
        hbar_star: 0.5,
        cost_star: -0.25,
        switch_times: vec![0.5],
        analytic,
    }
}

fn harmonic_action() -> CatalogEntry {
    fn analytic(t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![t.sin()], vec![t.cos()], vec![t.cos()])
    }
    CatalogEntry {
        name: "harmonic-action",
        description: "harmonic-oscillator action on [0, pi/2], x(0)=0 to x(pi/2)=1",
        provenance: "x = sin t, psi = u = cos t; H = 1/2 is the total energy",
        problem: ControlProblem {
            n: 1,
            r: 1,
            cost: parse("(u1^2 - x1^2)/2", 1, 1).unwrap(),
            dynamics: vec![parse("u1", 1, 1).unwrap()],
            region: ControlRegion::Unconstrained,
            a: 0.0,
            b: std::f64::consts::FRAC_PI_2,
            boundary: boundary(0.0, 1.0),
        },
        psi_a_star: vec![1.0],
        hbar_star: 0.5,
        cost_star: 0.0,
        switch_times: vec![],
        analytic,
    }
}

fn rest() -> CatalogEntry {
    fn analytic(_t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![0.0], vec![0.0], vec![0.0])
    }
    CatalogEntry {
        name: "rest",
        description: "minimum control energy with coincident endpoints; everything stays zero",
        provenance: "x = u = psi = 0; H = 0",
        problem: ControlProblem {
            n: 1,
            r: 1,
            cost: parse("u1^2", 1, 1).unwrap(),
            dynamics: vec![parse("u1", 1, 1).unwrap()],
            region: ControlRegion::Unconstrained,
            a: 0.0,
            b: 1.0,
            boundary: boundary(0.0, 0.0),
        },
        psi_a_star: vec![0.0],
        hbar_star: 0.0,
        cost_star: 0.0,
        switch_times: vec![],
        analytic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cost, validate};
    use crate::verify::verify_extremal;

    #[test]
    fn listing_round_trips() {
        let entries = list();
        assert_eq!(entries.len(), 4);
        assert!(entries.iter().any(|(n, _)| *n == "lqr-scalar"));
        for (name, _) in entries {
            assert_eq!(get(name).unwrap().name, name);
        }
    }

    #[test]
    fn unknown_entry() {
        assert!(matches!(get("nope"), Err(CatalogError::UnknownEntry(_))));
    }

    #[test]
    fn reference_constants() {
        let e = get("lqr-scalar").unwrap();
        assert!((e.psi_a_star[0] + 1.3130352854993312).abs() < 1e-7);
        assert!((e.hbar_star - 0.3620308304831553) .abs() < 1e-7);
        assert!((e.cost_star - 0.6565176427496656).abs() < 1e-7);
        let e = get("bang-integrator").unwrap();
        assert_eq!(e.hbar_star, 0.5);
        assert_eq!(e.cost_star, -0.25);
        let e = get("harmonic-action").unwrap();
        assert_eq!(e.psi_a_star, vec![1.0]);
        assert_eq!(e.hbar_star, 0.5);
    }

    #[test]
    fn problems_validate() {
        for name in NAMES {
            let e = get(name).unwrap();
            assert!(validate(&e.problem).is_empty(), "{name} has defects");
        }
    }

    #[test]
    fn analytic_extremals_verify_at_1e8() {
        for name in NAMES {
            let entry = get(name).unwrap();
            let e = entry.analytic_extremal(2001);
            let report = verify_extremal(&entry.problem, &e, 1e-8).unwrap();
            assert!(report.pass, "{name}: {report:#?}");
            assert!(
                (report.hbar.unwrap() - entry.hbar_star).abs() < 1e-7,
                "{name} hbar {:?}",
                report.hbar
            );
        }
    }

    #[test]
    fn analytic_costs_match() {
        for name in NAMES {
            let entry = get(name).unwrap();
            let e = entry.analytic_extremal(2001);
            let c = cost(&entry.problem, &e).unwrap();
            assert!(
                (c - entry.cost_star).abs() < 1e-5,
                "{name} cost {c} vs {}",
                entry.cost_star
            );
        }
    }

    #[test]
    fn shoot_recovers_reference_costates() {
        use crate::numerics::{shoot, IntegratorConfig, ShootingConfig};
        for name in ["lqr-scalar", "harmonic-action"] {
            let entry = get(name).unwrap();
            let guess: Vec<f64> = entry.psi_a_star.iter().map(|v| v + 0.3).collect();
            let result = shoot(
                &entry.problem,
                -1.0,
                &guess,
                &ShootingConfig::default(),
                &IntegratorConfig::rk4(1e-3),
            )
            .unwrap();
            assert!(
                (result.psi_a[0] - entry.psi_a_star[0]).abs() < 1e-6,
                "{name}: psi_a {}",
                result.psi_a[0]
            );
        }
    }
}
