//! Pointwise maximization of the Hamiltonian over the control region,
//! integration of the coupled state-costate system, and single shooting on
//! the unknown initial costate.

use crate::model::{
    hamiltonian, hamiltonian_grad_u, hamiltonian_partials, ControlProblem, ControlRegion,
    Endpoint, Extremal, ModelError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Hamiltonian is unbounded over the control region (|u| exceeded {0:e})")]
    UnboundedHamiltonian(f64),
    #[error("unsupported control region for pointwise maximization: {0}")]
    UnsupportedRegion(String),
    #[error("unsupported boundary for shooting: {0}")]
    UnsupportedBoundary(String),
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            step,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 10_000_000,
        }
    }

    pub fn rk45(abs_tol: f64, rel_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            step: 1e-2,
            abs_tol,
            rel_tol,
            max_steps: 1_000_000,
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::rk4(1e-3)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig {
    pub max_iterations: usize,
    pub residual_tol: f64,
    /// Initial Newton step fraction in (0,1].
    pub damping: f64,
    /// Step halvings tried before declaring no convergence.
    pub max_halvings: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            max_iterations: 25,
            residual_tol: 1e-10,
            damping: 1.0,
            max_halvings: 8,
        }
    }
}

/// Result of maximizing H over the control region at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMax {
    pub u: Vec<f64>,
    pub h: f64,
    /// The maximum is attained on a non-singleton set (within tolerance);
    /// the returned maximizer is the deterministic tie-break.
    pub singular: bool,
}

const TIE_TOL: f64 = 1e-10;
const UNBOUNDED_LIMIT: f64 = 1e8;

/// Maximality condition: u* attaining max over Ω of v -> H(x, v, psi0, psi).
///
/// Ties return the lexicographically smallest maximizer (first listed point
/// for finite sets, the lower bound for box vertex ties) with the singular
/// flag set.
pub fn maximize_hamiltonian(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<HamiltonianMax, NumericsError> {
    match &p.region {
        ControlRegion::FiniteSet(points) => {
            if points.is_empty() {
                return Err(NumericsError::UnsupportedRegion(
                    "finite control set is empty".to_string(),
                ));
            }
            let mut best: Option<(usize, f64)> = None;
            let mut values = Vec::with_capacity(points.len());
            for (k, cand) in points.iter().enumerate() {
                let h = hamiltonian(p, x, cand, psi0, psi)?;
                values.push(h);
                if best.map_or(true, |(_, hb)| h > hb) {
                    best = Some((k, h));
                }
            }
            let (_, h_star) = best.unwrap();
            let tol = TIE_TOL * (1.0 + h_star.abs());
            let mut winner = None;
            let mut ties = 0;
            for (k, h) in values.iter().enumerate() {
                if h_star - h <= tol {
                    ties += 1;
                    if winner.is_none() {
                        winner = Some(k);
                    }
                }
            }
            let k = winner.unwrap();
            Ok(HamiltonianMax {
                u: points[k].clone(),
                h: values[k],
                singular: ties > 1,
            })
        }
        ControlRegion::Box { lo, hi } => maximize_box(p, x, psi0, psi, lo, hi),
        ControlRegion::Unconstrained => maximize_unconstrained(p, x, psi0, psi),
        ControlRegion::OpenUnitInterval => Err(NumericsError::UnsupportedRegion(
            "open-unit-interval control has no attained maximum in general".to_string(),
        )),
    }
}

fn grad_at(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &[f64],
) -> Result<Vec<f64>, NumericsError> {
    Ok(hamiltonian_grad_u(p, x, u, psi0, psi)?)
}

fn grads_agree(gs: &[Vec<f64>]) -> bool {
    let scale = gs
        .iter()
        .flat_map(|g| g.iter())
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * (1.0 + scale);
    for g in &gs[1..] {
        for (a, b) in g.iter().zip(&gs[0]) {
            if (a - b).abs() > tol {
                return false;
            }
        }
    }
    true
}

fn maximize_box(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<HamiltonianMax, NumericsError> {
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let probes = [
        grad_at(p, x, psi0, psi, lo)?,
        grad_at(p, x, psi0, psi, hi)?,
        grad_at(p, x, psi0, psi, &mid)?,
    ];
    if grads_agree(&probes) {
        // H is affine in each control coordinate: vertex rule by coefficient
        // sign; a vanishing coefficient is a singular (tie) coordinate and
        // takes the lower bound.
        let coeff = &probes[2];
        let mut u = Vec::with_capacity(lo.len());
        let mut singular = false;
        for (j, c) in coeff.iter().enumerate() {
            if *c > TIE_TOL {
                u.push(hi[j]);
            } else if *c < -TIE_TOL {
                u.push(lo[j]);
            } else {
                u.push(lo[j]);
                if hi[j] - lo[j] > 0.0 {
                    singular = true;
                }
            }
        }
        let h = hamiltonian(p, x, &u, psi0, psi)?;
        return Ok(HamiltonianMax { u, h, singular });
    }

    // General box: coordinate grid seed + golden-section sweeps.
    let mut u = mid.clone();
    seed_coordinate_grid(p, x, psi0, psi, &mut u, lo, hi)?;
    for _ in 0..100 {
        let mut moved = 0.0_f64;
        for j in 0..u.len() {
            if hi[j] - lo[j] <= 0.0 {
                continue;
            }
            let new = golden_max_coord(p, x, psi0, psi, &mut u, j, lo[j], hi[j])?;
            moved = moved.max((new - u[j]).abs());
            u[j] = new;
        }
        if moved < 1e-11 {
            break;
        }
    }
    let h = hamiltonian(p, x, &u, psi0, psi)?;
    Ok(HamiltonianMax {
        u,
        h,
        singular: false,
    })
}

fn maximize_unconstrained(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
) -> Result<HamiltonianMax, NumericsError> {
    let r = p.r;
    let zeros = vec![0.0; r];
    let ones = vec![1.0; r];
    let minus_two = vec![-2.0; r];
    let probes = [
        grad_at(p, x, psi0, psi, &zeros)?,
        grad_at(p, x, psi0, psi, &ones)?,
        grad_at(p, x, psi0, psi, &minus_two)?,
    ];
    if grads_agree(&probes) {
        let gnorm = probes[0].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm > TIE_TOL {
            // Affine with a nonzero slope and no constraint: no maximum.
            return Err(NumericsError::UnboundedHamiltonian(UNBOUNDED_LIMIT));
        }
        let h = hamiltonian(p, x, &zeros, psi0, psi)?;
        return Ok(HamiltonianMax {
            u: zeros,
            h,
            singular: true,
        });
    }

    // Newton on the control gradient from u = 0 handles the common smooth
    // concave case in a handful of gradient evaluations.  Fall back to a
    // coordinate grid seed plus golden-section sweeps when Newton stalls
    // away from a stationary point.
    let mut u = zeros;
    newton_polish(p, x, psi0, psi, &mut u)?;
    let g = grad_at(p, x, psi0, psi, &u)?;
    let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let unorm = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if gnorm > 1e-10 * (1.0 + unorm) {
        u = vec![0.0; r];
        let span = vec![(-10.0, 10.0); r];
        for j in 0..r {
            seed_coordinate_grid_one(p, x, psi0, psi, &mut u, j, span[j].0, span[j].1)?;
        }
        for _ in 0..100 {
            let mut moved = 0.0_f64;
            for j in 0..r {
                let (lo, hi) = expand_bracket(p, x, psi0, psi, &mut u, j)?;
                let new = golden_max_coord(p, x, psi0, psi, &mut u, j, lo, hi)?;
                moved = moved.max((new - u[j]).abs());
                u[j] = new;
            }
            if moved < 1e-11 {
                break;
            }
        }
        newton_polish(p, x, psi0, psi, &mut u)?;
    }

    let h = hamiltonian(p, x, &u, psi0, psi)?;
    Ok(HamiltonianMax {
        u,
        h,
        singular: false,
    })
}

fn seed_coordinate_grid(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &mut [f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<(), NumericsError> {
    for j in 0..u.len() {
        seed_coordinate_grid_one(p, x, psi0, psi, u, j, lo[j], hi[j])?;
    }
    Ok(())
}

/// Greedy 32-point line search along coordinate `j`, other coordinates held.
fn seed_coordinate_grid_one(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &mut [f64],
    j: usize,
    lo: f64,
    hi: f64,
) -> Result<(), NumericsError> {
    let mut best_v = u[j];
    let mut best_h = hamiltonian(p, x, u, psi0, psi)?;
    for k in 0..32 {
        let cand = lo + (hi - lo) * k as f64 / 31.0;
        u[j] = cand;
        let h = hamiltonian(p, x, u, psi0, psi)?;
        if h > best_h {
            best_h = h;
            best_v = cand;
        }
    }
    u[j] = best_v;
    Ok(())
}

/// Expands a bracket around u[j] until the maximum lies inside it.
fn expand_bracket(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &mut [f64],
    j: usize,
) -> Result<(f64, f64), NumericsError> {
    let center = u[j];
    let eval = |v: f64, u: &mut [f64]| -> Result<f64, NumericsError> {
        let old = u[j];
        u[j] = v;
        let h = hamiltonian(p, x, u, psi0, psi);
        u[j] = old;
        Ok(h?)
    };
    let mut d = 1.0 + center.abs() * 1e-3;
    let hc = eval(center, u)?;
    loop {
        let hl = eval(center - d, u)?;
        let hr = eval(center + d, u)?;
        if hc >= hl && hc >= hr {
            return Ok((center - d, center + d));
        }
        d *= 2.0;
        if d > UNBOUNDED_LIMIT {
            return Err(NumericsError::UnboundedHamiltonian(UNBOUNDED_LIMIT));
        }
    }
}

/// Golden-section maximization along coordinate `j` on [lo, hi].
fn golden_max_coord(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &mut [f64],
    j: usize,
    lo: f64,
    hi: f64,
) -> Result<f64, NumericsError> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let old = u[j];
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    u[j] = c;
    let mut fc = hamiltonian(p, x, u, psi0, psi)?;
    u[j] = d;
    let mut fd = hamiltonian(p, x, u, psi0, psi)?;
    while (b - a).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            u[j] = c;
            fc = hamiltonian(p, x, u, psi0, psi)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            u[j] = d;
            fd = hamiltonian(p, x, u, psi0, psi)?;
        }
    }
    u[j] = old;
    Ok(0.5 * (a + b))
}

/// Newton iterations on the control gradient, for interior maxima. Leaves
/// `u` unchanged when a step does not improve H.
fn newton_polish(
    p: &ControlProblem,
    x: &[f64],
    psi0: f64,
    psi: &[f64],
    u: &mut Vec<f64>,
) -> Result<(), NumericsError> {
    let r = u.len();
    let sqrt_eps = f64::EPSILON.sqrt();
    for _ in 0..40 {
        let g = grad_at(p, x, psi0, psi, u)?;
        let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let unorm = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm <= 1e-14 * (1.0 + unorm) {
            break;
        }
        if unorm > UNBOUNDED_LIMIT {
            return Err(NumericsError::UnboundedHamiltonian(UNBOUNDED_LIMIT));
        }
        // FD Hessian column by column from the dual-number gradient.
        let mut hess = vec![vec![0.0; r]; r];
        for j in 0..r {
            let h = sqrt_eps * (1.0 + u[j].abs());
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let gp = grad_at(p, x, psi0, psi, &up)?;
            let gm = grad_at(p, x, psi0, psi, &dn)?;
            for i in 0..r {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = match solve_linear(hess, rhs) {
            Some(d) => d,
            None => g.clone(), // singular Hessian: plain ascent direction
        };
        // Accept the longest halved step that improves H.
        let h0 = hamiltonian(p, x, u, psi0, psi)?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            let h1 = hamiltonian(p, x, &cand, psi0, psi)?;
            if h1 >= h0 {
                *u = cand;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting; None when singular.
pub(crate) fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Integration of the coupled Hamiltonian system
// ---------------------------------------------------------------------------

fn system_rhs(
    p: &ControlProblem,
    psi0: f64,
    y: &[f64],
) -> Result<Vec<f64>, NumericsError> {
    let n = p.n;
    let (x, psi) = y.split_at(n);
    let m = maximize_hamiltonian(p, x, psi0, psi)?;
    let (dh_dx, dh_dpsi) = hamiltonian_partials(p, x, &m.u, psi0, psi)?;
    let mut dy = Vec::with_capacity(2 * n);
    dy.extend(dh_dpsi);
    dy.extend(dh_dx.iter().map(|v| -v));
    Ok(dy)
}

fn axpy(y: &[f64], k: &[f64], c: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + c * b).collect()
}

/// Integrates x' = dH/dpsi, psi' = -dH/dx from t = a to t = b with the
/// maximality condition enforced at every derivative evaluation.
pub fn propagate(
    p: &ControlProblem,
    x_a: &[f64],
    psi_a: &[f64],
    psi0: f64,
    cfg: &IntegratorConfig,
) -> Result<Extremal, NumericsError> {
    if x_a.len() != p.n || psi_a.len() != p.n {
        return Err(NumericsError::Model(ModelError::Dimension(format!(
            "initial state/costate must have length {}",
            p.n
        ))));
    }
    let mut y: Vec<f64> = x_a.iter().chain(psi_a).copied().collect();
    let mut times = Vec::new();
    let mut ys = Vec::new();
    times.push(p.a);
    ys.push(y.clone());

    match cfg.method {
        Method::Rk4Fixed => {
            if cfg.step <= 0.0 {
                return Err(NumericsError::IntegrationFailure(
                    "step must be positive".to_string(),
                ));
            }
            let span = p.b - p.a;
            let steps = ((span / cfg.step).round() as usize).max(1);
            if steps > cfg.max_steps {
                return Err(NumericsError::IntegrationFailure(format!(
                    "{steps} steps exceed the limit {}",
                    cfg.max_steps
                )));
            }
            let h = span / steps as f64;
            for k in 0..steps {
                let k1 = system_rhs(p, psi0, &y)?;
                let k2 = system_rhs(p, psi0, &axpy(&y, &k1, 0.5 * h))?;
                let k3 = system_rhs(p, psi0, &axpy(&y, &k2, 0.5 * h))?;
                let k4 = system_rhs(p, psi0, &axpy(&y, &k3, h))?;
                for i in 0..y.len() {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                let t = if k + 1 == steps {
                    p.b
                } else {
                    p.a + (k + 1) as f64 * h
                };
                times.push(t);
                ys.push(y.clone());
            }
        }
        Method::Rk45Adaptive => {
            rk45_adaptive(p, psi0, cfg, &mut y, &mut times, &mut ys)?;
        }
    }

    // Sample the maximizing control at every stored node.
    let n = p.n;
    let mut xs = Vec::with_capacity(ys.len());
    let mut us = Vec::with_capacity(ys.len());
    let mut psis = Vec::with_capacity(ys.len());
    for yk in &ys {
        let (x, psi) = yk.split_at(n);
        let m = maximize_hamiltonian(p, x, psi0, psi)?;
        xs.push(x.to_vec());
        us.push(m.u);
        psis.push(psi.to_vec());
    }
    Ok(Extremal::new(times, xs, us, psi0, psis)?)
}

/// Dormand-Prince 5(4) with standard proportional step control.
fn rk45_adaptive(
    p: &ControlProblem,
    psi0: f64,
    cfg: &IntegratorConfig,
    y: &mut Vec<f64>,
    times: &mut Vec<f64>,
    ys: &mut Vec<Vec<f64>>,
) -> Result<(), NumericsError> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let span = p.b - p.a;
    let mut t = p.a;
    let mut h = cfg.step.min(span);
    let mut steps = 0;
    while t < p.b {
        if steps > cfg.max_steps {
            return Err(NumericsError::IntegrationFailure(format!(
                "exceeded {} adaptive steps",
                cfg.max_steps
            )));
        }
        if h < 1e-14 * span {
            return Err(NumericsError::IntegrationFailure(
                "adaptive step underflow".to_string(),
            ));
        }
        if t + h > p.b {
            h = p.b - t;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(system_rhs(p, psi0, y)?);
        for stage in 0..6 {
            let mut ys_stage = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let c = A[stage][j] * h;
                if c != 0.0 {
                    for (v, d) in ys_stage.iter_mut().zip(kj) {
                        *v += c * d;
                    }
                }
            }
            k.push(system_rhs(p, psi0, &ys_stage)?);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..y.len() {
                y5[i] += h * B5[j] * kj[i];
                y4[i] += h * B4[j] * kj[i];
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / scale).abs());
        }
        if err <= 1.0 {
            t += h;
            *y = y5;
            times.push(t);
            ys.push(y.clone());
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        steps += 1;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Single shooting
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ShootingResult {
    pub extremal: Extremal,
    pub psi_a: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn initial_state(p: &ControlProblem) -> Result<Vec<f64>, NumericsError> {
    p.boundary
        .start
        .iter()
        .map(|e| match e {
            Endpoint::Fixed(v) => Ok(*v),
            Endpoint::Free => Err(NumericsError::UnsupportedBoundary(
                "single shooting on the initial costate needs every state \
                 coordinate fixed at t = a"
                    .to_string(),
            )),
        })
        .collect()
}

fn boundary_residual(p: &ControlProblem, e: &Extremal) -> Vec<f64> {
    let xb = e.x.last().unwrap();
    let psib = e.psi.last().unwrap();
    p.boundary
        .end
        .iter()
        .enumerate()
        .map(|(j, cond)| match cond {
            Endpoint::Fixed(target) => xb[j] - target,
            // Natural condition for a free endpoint coordinate.
            Endpoint::Free => psib[j],
        })
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Damped Newton iteration on psi(a), with a forward finite-difference
/// Jacobian of the boundary residual map.
pub fn shoot(
    p: &ControlProblem,
    psi0: f64,
    guess: &[f64],
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
) -> Result<ShootingResult, NumericsError> {
    if guess.len() != p.n {
        return Err(NumericsError::Model(ModelError::Dimension(format!(
            "costate guess must have length {}",
            p.n
        ))));
    }
    let x_a = initial_state(p)?;
    let sqrt_eps = f64::EPSILON.sqrt();

    let mut psi_a = guess.to_vec();
    let mut extremal = propagate(p, &x_a, &psi_a, psi0, icfg)?;
    let mut res = boundary_residual(p, &extremal);
    let mut res_norm = norm2(&res);

    for iter in 0..cfg.max_iterations {
        if res_norm <= cfg.residual_tol {
            return Ok(ShootingResult {
                extremal,
                psi_a,
                iterations: iter,
                residual_norm: res_norm,
            });
        }
        // Forward-difference Jacobian, one propagation per column.  The
        // base step is sqrt(eps)-scaled; when the residual map is a
        // staircase in the guess (bang-bang switch times quantized to
        // integrator stages) that step sits inside a flat plateau, so on a
        // singular Jacobian or a failed line search the step is escalated
        // to span several plateaus.
        let n = p.n;
        let mut accepted = false;
        for scale in [1.0, 1e3, 1e6] {
            let mut jac = vec![vec![0.0; n]; n];
            for col in 0..n {
                let step = scale * sqrt_eps * (1.0 + psi_a[col].abs());
                let mut pert = psi_a.clone();
                pert[col] += step;
                let e = propagate(p, &x_a, &pert, psi0, icfg)?;
                let rp = boundary_residual(p, &e);
                for row in 0..n {
                    jac[row][col] = (rp[row] - res[row]) / step;
                }
            }
            let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
            let direction = match solve_linear(jac, rhs) {
                Some(d) => d,
                None => continue,
            };

            let mut t = cfg.damping;
            for _ in 0..=cfg.max_halvings {
                let cand: Vec<f64> =
                    psi_a.iter().zip(&direction).map(|(a, d)| a + t * d).collect();
                let e = propagate(p, &x_a, &cand, psi0, icfg)?;
                let r = boundary_residual(p, &e);
                let rn = norm2(&r);
                if rn < res_norm {
                    psi_a = cand;
                    extremal = e;
                    res = r;
                    res_norm = rn;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            return Err(NumericsError::NoConvergence {
                iterations: iter + 1,
                residual: res_norm,
            });
        }
    }
    if res_norm <= cfg.residual_tol {
        Ok(ShootingResult {
            extremal,
            psi_a,
            iterations: cfg.max_iterations,
            residual_norm: res_norm,
        })
    } else {
        Err(NumericsError::NoConvergence {
            iterations: cfg.max_iterations,
            residual: res_norm,
        })
    }
}
