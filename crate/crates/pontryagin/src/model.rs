//! The autonomous optimal control problem, its Pontryagin Hamiltonian, and
//! candidate extremals sampled on a time grid.

use crate::expr::{ExprError, ExprTree};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid extremal: {0}")]
    InvalidExtremal(String),
}

/// The admissible control set Ω.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlRegion {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    FiniteSet(Vec<Vec<f64>>),
    Unconstrained,
    /// Scalar control with values in the open interval (0,1); used by the
    /// time-augmented problem, where the added control is a reparametrization
    /// speed.
    OpenUnitInterval,
}

impl ControlRegion {
    /// Diameter in the max norm; `None` when unbounded.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ControlRegion::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| h - l)
                .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d)))),
            ControlRegion::FiniteSet(points) => {
                let mut diam: f64 = 0.0;
                for (i, p) in points.iter().enumerate() {
                    for q in &points[i + 1..] {
                        let d = p
                            .iter()
                            .zip(q)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0_f64, f64::max);
                        diam = diam.max(d);
                    }
                }
                Some(diam)
            }
            ControlRegion::Unconstrained => None,
            ControlRegion::OpenUnitInterval => Some(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Fixed(f64),
    Free,
}

/// Coordinate-wise boundary conditions at both ends of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub start: Vec<Endpoint>,
    pub end: Vec<Endpoint>,
}

/// The autonomous problem: minimize the integral of `cost` along solutions of
/// `x' = dynamics(x,u)` with `u` in `region` and the stated boundary data.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub n: usize,
    pub r: usize,
    /// Running cost L(x,u).
    pub cost: ExprTree,
    /// Dynamics components, one scalar tree per state coordinate.
    pub dynamics: Vec<ExprTree>,
    pub region: ControlRegion,
    pub a: f64,
    pub b: f64,
    pub boundary: BoundarySpec,
}

/// Candidate Pontryagin quadruple (x, u, psi0, psi) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub psi0: f64,
    pub psi: Vec<Vec<f64>>,
}

const NONTRIVIALITY_TOL: f64 = 1e-12;

impl Extremal {
    /// Builds an extremal, checking grid monotonicity, dimensions, the sign
    /// convention psi0 <= 0, and nontriviality of the multipliers.
    pub fn new(
        times: Vec<f64>,
        x: Vec<Vec<f64>>,
        u: Vec<Vec<f64>>,
        psi0: f64,
        psi: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let m = times.len();
        if m < 2 {
            return Err(ModelError::InvalidExtremal(
                "grid needs at least two nodes".to_string(),
            ));
        }
        if x.len() != m || u.len() != m || psi.len() != m {
            return Err(ModelError::Dimension(format!(
                "grid has {m} nodes but samples have lengths x={}, u={}, psi={}",
                x.len(),
                u.len(),
                psi.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidExtremal(
                "grid times must be strictly increasing".to_string(),
            ));
        }
        if psi0 > 0.0 {
            return Err(ModelError::InvalidExtremal(format!(
                "psi0 must be <= 0, got {psi0}"
            )));
        }
        for (k, pk) in psi.iter().enumerate() {
            let norm = pk
                .iter()
                .map(|v| v.abs())
                .fold(psi0.abs(), f64::max);
            if norm <= NONTRIVIALITY_TOL {
                return Err(ModelError::InvalidExtremal(format!(
                    "trivial multipliers (psi0, psi) at node {k}"
                )));
            }
        }
        Ok(Extremal {
            times,
            x,
            u,
            psi0,
            psi,
        })
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }
}

fn check_point_dims(p: &ControlProblem, x: &[f64], u: &[f64], psi: &[f64]) -> Result<(), ModelError> {
    if x.len() != p.n || psi.len() != p.n {
        return Err(ModelError::Dimension(format!(
            "state/costate length must be {}, got x={}, psi={}",
            p.n,
            x.len(),
            psi.len()
        )));
    }
    if u.len() != p.r {
        return Err(ModelError::Dimension(format!(
            "control length must be {}, got {}",
            p.r,
            u.len()
        )));
    }
    Ok(())
}

/// Pontryagin Hamiltonian H = psi0 L(x,u) + psi . phi(x,u).
pub fn hamiltonian(
    p: &ControlProblem,
    x: &[f64],
    u: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<f64, ModelError> {
    check_point_dims(p, x, u, psi)?;
    let mut h = psi0 * p.cost.eval(x, u)?;
    for (phi_i, psi_i) in p.dynamics.iter().zip(psi) {
        h += psi_i * phi_i.eval(x, u)?;
    }
    Ok(h)
}

/// Returns (dH/dx, dH/dpsi). The costate partial is phi(x,u) exactly, by
/// linearity of H in psi.
pub fn hamiltonian_partials(
    p: &ControlProblem,
    x: &[f64],
    u: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    check_point_dims(p, x, u, psi)?;
    let mut dh_dx = p.cost.grad_x(x, u)?.values;
    for g in dh_dx.iter_mut() {
        *g *= psi0;
    }
    let mut dh_dpsi = Vec::with_capacity(p.n);
    for (phi_i, psi_i) in p.dynamics.iter().zip(psi) {
        dh_dpsi.push(phi_i.eval(x, u)?);
        let grad_phi = phi_i.grad_x(x, u)?.values;
        for (g, dphi) in dh_dx.iter_mut().zip(&grad_phi) {
            *g += psi_i * dphi;
        }
    }
    Ok((dh_dx, dh_dpsi))
}

/// dH/du at a point, needed by the pointwise maximization of H over Ω.
pub fn hamiltonian_grad_u(
    p: &ControlProblem,
    x: &[f64],
    u: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<Vec<f64>, ModelError> {
    check_point_dims(p, x, u, psi)?;
    let mut g = p.cost.grad_u(x, u)?.values;
    for v in g.iter_mut() {
        *v *= psi0;
    }
    for (phi_i, psi_i) in p.dynamics.iter().zip(psi) {
        let gp = phi_i.grad_u(x, u)?.values;
        for (v, d) in g.iter_mut().zip(&gp) {
            *v += psi_i * d;
        }
    }
    Ok(g)
}

/// Performance index along the sampled trajectory, by composite trapezoidal
/// quadrature on the extremal's own grid.
pub fn cost(p: &ControlProblem, traj: &Extremal) -> Result<f64, ModelError> {
    let t0 = *traj.times.first().unwrap();
    let t1 = *traj.times.last().unwrap();
    let span_tol = 1e-9 * (1.0 + p.b.abs() + p.a.abs());
    if (t0 - p.a).abs() > span_tol || (t1 - p.b).abs() > span_tol {
        return Err(ModelError::GridMismatch(format!(
            "grid spans [{t0}, {t1}] but the horizon is [{}, {}]",
            p.a, p.b
        )));
    }
    let mut values = Vec::with_capacity(traj.nodes());
    for k in 0..traj.nodes() {
        values.push(p.cost.eval(&traj.x[k], &traj.u[k])?);
    }
    let mut total = 0.0;
    for k in 0..traj.nodes() - 1 {
        let dt = traj.times[k + 1] - traj.times[k];
        total += 0.5 * dt * (values[k] + values[k + 1]);
    }
    Ok(total)
}

/// A structural defect found by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Defect {
    pub code: String,
    pub message: String,
}

fn defect(code: &str, message: impl Into<String>) -> Defect {
    Defect {
        code: code.to_string(),
        message: message.into(),
    }
}

/// Checks a problem for structural defects. Never aborts; an empty list
/// means the problem is well formed.
pub fn validate(p: &ControlProblem) -> Vec<Defect> {
    let mut defects = Vec::new();
    if p.a >= p.b {
        defects.push(defect(
            "empty-horizon",
            format!("horizon requires a < b, got a={}, b={}", p.a, p.b),
        ));
    }
    if p.dynamics.len() != p.n {
        defects.push(defect(
            "dynamics-arity",
            format!("expected {} dynamics components, got {}", p.n, p.dynamics.len()),
        ));
    }
    if p.cost.state_dim() != p.n || p.cost.control_dim() != p.r {
        defects.push(defect(
            "cost-dims",
            "running cost was parsed against different dimensions".to_string(),
        ));
    }
    for (i, phi) in p.dynamics.iter().enumerate() {
        if phi.state_dim() != p.n || phi.control_dim() != p.r {
            defects.push(defect(
                "dynamics-dims",
                format!("dynamics component {} was parsed against different dimensions", i + 1),
            ));
        }
    }
    match &p.region {
        ControlRegion::Box { lo, hi } => {
            if lo.len() != p.r || hi.len() != p.r {
                defects.push(defect("region-dims", "box bounds must have length r"));
            }
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                defects.push(defect("inverted-box", "box has lo > hi in some coordinate"));
            }
        }
        ControlRegion::FiniteSet(points) => {
            if points.is_empty() {
                defects.push(defect("empty-set", "finite control set is empty"));
            }
            if points.iter().any(|q| q.len() != p.r) {
                defects.push(defect("region-dims", "finite-set point with wrong length"));
            }
        }
        ControlRegion::OpenUnitInterval => {
            if p.r != 1 {
                defects.push(defect(
                    "region-dims",
                    "open-unit-interval region requires a scalar control",
                ));
            }
        }
        ControlRegion::Unconstrained => {}
    }
    if p.boundary.start.len() != p.n || p.boundary.end.len() != p.n {
        defects.push(defect("boundary-dims", "boundary spec must have n entries per endpoint"));
    }
    if !p
        .boundary
        .start
        .iter()
        .any(|e| matches!(e, Endpoint::Fixed(_)))
    {
        defects.push(defect(
            "no-anchor",
            "at least one state coordinate must be fixed at t = a",
        ));
    }
    defects
}
