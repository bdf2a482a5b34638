//! Machine checks of a candidate extremal: the control system, the adjoint
//! system, the maximality condition, and the constancy of the Hamiltonian
//! along the trajectory.
//!
//! Grid derivatives use fourth-order finite differences on uniform grids
//! (offset stencils at the ends) and second-order three-point formulas on
//! non-uniform grids. Nodes whose stencil crosses a detected control switch
//! are excluded from the control/adjoint residual maxima and counted
//! separately; a difference quotient across a jump measures the jump, not a
//! defect.

use crate::model::{
    hamiltonian, hamiltonian_partials, ControlProblem, ControlRegion, Extremal, ModelError,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

/// One checked condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    pub max_residual: f64,
    /// Grid time at which the maximum residual occurs.
    pub location: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub checked_nodes: usize,
    pub excluded_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub conditions: Vec<ConditionEntry>,
    /// Mean Hamiltonian value along the trajectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    pub grid_nodes: usize,
    pub pass: bool,
}

impl VerificationReport {
    fn finalize(mut self) -> Self {
        self.pass = self.conditions.iter().all(|c| c.pass);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    /// Grid time of the maximum residual.
    pub location: f64,
    pub checked: usize,
    pub excluded: usize,
}

fn empty_stats() -> ResidualStats {
    ResidualStats {
        max: 0.0,
        mean: 0.0,
        location: f64::NAN,
        checked: 0,
        excluded: 0,
    }
}

// ---------------------------------------------------------------------------
// Grid derivatives
// ---------------------------------------------------------------------------

fn is_uniform(times: &[f64]) -> bool {
    if times.len() < 3 {
        return true;
    }
    let h0 = times[1] - times[0];
    times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-9 * h0.abs())
}

/// Stencil index range used at node `k`; anything between `lo` and `hi`
/// inclusive participates in the difference quotient there.
fn stencil_range(k: usize, m: usize, uniform: bool) -> (usize, usize) {
    if uniform && m >= 5 {
        if k < 2 {
            (0, 4)
        } else if k + 2 >= m {
            (m - 5, m - 1)
        } else {
            (k - 2, k + 2)
        }
    } else if k == 0 {
        (0, 2.min(m - 1))
    } else if k + 1 >= m {
        (m.saturating_sub(3), m - 1)
    } else {
        (k - 1, k + 1)
    }
}

/// First-derivative estimates for a sampled scalar series.
pub(crate) fn fd_derivative(times: &[f64], y: &[f64]) -> Vec<f64> {
    let m = times.len();
    assert!(m >= 2 && y.len() == m);
    if m < 3 {
        let d = (y[1] - y[0]) / (times[1] - times[0]);
        return vec![d; 2];
    }
    let uniform = is_uniform(times);
    let mut out = Vec::with_capacity(m);
    if uniform && m >= 5 {
        let h = times[1] - times[0];
        for k in 0..m {
            let d = if k == 0 {
                (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
            } else if k == 1 {
                (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
            } else if k == m - 2 {
                (3.0 * y[m - 1] + 10.0 * y[m - 2] - 18.0 * y[m - 3] + 6.0 * y[m - 4] - y[m - 5])
                    / (12.0 * h)
            } else if k == m - 1 {
                (25.0 * y[m - 1] - 48.0 * y[m - 2] + 36.0 * y[m - 3] - 16.0 * y[m - 4]
                    + 3.0 * y[m - 5])
                    / (12.0 * h)
            } else {
                (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h)
            };
            out.push(d);
        }
    } else {
        // Three-point Lagrange derivative, second order on arbitrary grids.
        for k in 0..m {
            let c = k.clamp(1, m - 2);
            let (t0, t1, t2) = (times[c - 1], times[c], times[c + 1]);
            let (y0, y1, y2) = (y[c - 1], y[c], y[c + 1]);
            let t = times[k];
            let d = y0 * (2.0 * t - t1 - t2) / ((t0 - t1) * (t0 - t2))
                + y1 * (2.0 * t - t0 - t2) / ((t1 - t0) * (t1 - t2))
                + y2 * (2.0 * t - t0 - t1) / ((t2 - t0) * (t2 - t1));
            out.push(d);
        }
    }
    out
}

/// Indices of grid intervals (k, k+1) across which the control jumps by more
/// than half the control-region diameter.
pub(crate) fn switch_intervals(region: &ControlRegion, u: &[Vec<f64>]) -> Vec<usize> {
    let Some(diam) = region.diameter() else {
        return Vec::new();
    };
    if diam <= 0.0 {
        return Vec::new();
    }
    let mut jumps = Vec::new();
    for k in 0..u.len().saturating_sub(1) {
        let step = u[k]
            .iter()
            .zip(&u[k + 1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if step > 0.5 * diam {
            jumps.push(k);
        }
    }
    jumps
}

fn excluded_mask(times: &[f64], jumps: &[usize], uniform: bool) -> Vec<bool> {
    let m = times.len();
    let mut mask = vec![false; m];
    for k in 0..m {
        let (lo, hi) = stencil_range(k, m, uniform);
        if jumps.iter().any(|&j| j >= lo && j + 1 <= hi) {
            mask[k] = true;
        }
    }
    mask
}

fn residual_stats(
    times: &[f64],
    residuals: &[f64],
    mask: &[bool],
) -> ResidualStats {
    let mut stats = empty_stats();
    let mut sum = 0.0;
    for (k, r) in residuals.iter().enumerate() {
        if mask[k] {
            stats.excluded += 1;
            continue;
        }
        stats.checked += 1;
        sum += r;
        if *r >= stats.max {
            stats.max = *r;
            stats.location = times[k];
        }
    }
    if stats.checked > 0 {
        stats.mean = sum / stats.checked as f64;
    }
    stats
}

fn check_grid(p: &ControlProblem, e: &Extremal) -> Result<(), VerifyError> {
    if e.x[0].len() != p.n || e.u[0].len() != p.r {
        return Err(VerifyError::GridMismatch(format!(
            "extremal dimensions ({}, {}) do not match the problem ({}, {})",
            e.x[0].len(),
            e.u[0].len(),
            p.n,
            p.r
        )));
    }
    Ok(())
}

/// Residual of the control system x' = dH/dpsi = phi(x,u) on the grid.
pub fn residual_control(p: &ControlProblem, e: &Extremal) -> Result<ResidualStats, VerifyError> {
    check_grid(p, e)?;
    let m = e.nodes();
    let uniform = is_uniform(&e.times);
    let jumps = switch_intervals(&p.region, &e.u);
    let mask = excluded_mask(&e.times, &jumps, uniform);

    let mut residuals = vec![0.0_f64; m];
    for i in 0..p.n {
        let series: Vec<f64> = e.x.iter().map(|xk| xk[i]).collect();
        let deriv = fd_derivative(&e.times, &series);
        for k in 0..m {
            let phi = p.dynamics[i].eval(&e.x[k], &e.u[k])?;
            residuals[k] = residuals[k].max((deriv[k] - phi).abs());
        }
    }
    Ok(residual_stats(&e.times, &residuals, &mask))
}

/// Residual of the adjoint system psi' = -dH/dx on the grid.
pub fn residual_adjoint(p: &ControlProblem, e: &Extremal) -> Result<ResidualStats, VerifyError> {
    check_grid(p, e)?;
    let m = e.nodes();
    let uniform = is_uniform(&e.times);
    let jumps = switch_intervals(&p.region, &e.u);
    let mask = excluded_mask(&e.times, &jumps, uniform);

    let mut derivs = Vec::with_capacity(p.n);
    for i in 0..p.n {
        let series: Vec<f64> = e.psi.iter().map(|pk| pk[i]).collect();
        derivs.push(fd_derivative(&e.times, &series));
    }
    let mut residuals = vec![0.0_f64; m];
    for k in 0..m {
        let (dh_dx, _) = hamiltonian_partials(p, &e.x[k], &e.u[k], e.psi0, &e.psi[k])?;
        for i in 0..p.n {
            residuals[k] = residuals[k].max((derivs[i][k] + dh_dx[i]).abs());
        }
    }
    Ok(residual_stats(&e.times, &residuals, &mask))
}

/// Gap between the best sampled control and the applied one:
/// gap(t) = max over sampled v of H(x,v) - H(x,u). Positive gaps indicate a
/// maximality violation; tiny negative values mean the applied control beats
/// every sample.
pub fn maximality_gap(
    p: &ControlProblem,
    e: &Extremal,
    samples: usize,
) -> Result<ResidualStats, VerifyError> {
    check_grid(p, e)?;
    let m = e.nodes();
    let mut stats = empty_stats();
    stats.location = e.times[0];
    let mut sum = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..m {
        let h_applied = hamiltonian(p, &e.x[k], &e.u[k], e.psi0, &e.psi[k])?;
        let mut h_best = f64::NEG_INFINITY;
        for cand in sample_region(&p.region, &e.u[k], samples) {
            let h = hamiltonian(p, &e.x[k], &cand, e.psi0, &e.psi[k])?;
            h_best = h_best.max(h);
        }
        let gap = h_best - h_applied;
        sum += gap;
        stats.checked += 1;
        if gap > worst {
            worst = gap;
            stats.location = e.times[k];
        }
    }
    stats.max = worst;
    stats.mean = sum / m as f64;
    Ok(stats)
}

fn sample_region(region: &ControlRegion, center: &[f64], samples: usize) -> Vec<Vec<f64>> {
    match region {
        ControlRegion::FiniteSet(points) => points.clone(),
        ControlRegion::Box { lo, hi } => grid_samples(lo, hi, samples),
        ControlRegion::Unconstrained => {
            // Max-norm ball of radius 10 around the applied control.
            let lo: Vec<f64> = center.iter().map(|c| c - 10.0).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + 10.0).collect();
            let mut pts = grid_samples(&lo, &hi, samples);
            pts.push(center.to_vec());
            pts
        }
        ControlRegion::OpenUnitInterval => {
            let count = samples.max(3);
            (1..count)
                .map(|k| vec![k as f64 / count as f64])
                .collect()
        }
    }
}

/// Per-axis uniform grid, endpoints included, with roughly `samples` points
/// overall.
fn grid_samples(lo: &[f64], hi: &[f64], samples: usize) -> Vec<Vec<f64>> {
    let r = lo.len();
    if r == 0 {
        return vec![Vec::new()];
    }
    let per_axis = ((samples.max(2) as f64).powf(1.0 / r as f64).round() as usize).max(2);
    let mut points = vec![Vec::new()];
    for j in 0..r {
        let mut next = Vec::with_capacity(points.len() * per_axis);
        for prefix in &points {
            for k in 0..per_axis {
                let v = lo[j] + (hi[j] - lo[j]) * k as f64 / (per_axis - 1) as f64;
                let mut q = prefix.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyResult {
    pub hbar: f64,
    pub max_dev: f64,
    /// Grid time of the largest deviation.
    pub location: f64,
    pub pass: bool,
}

/// Checks H(x(t), u(t), psi0, psi(t)) == constant along the grid. Passes
/// when the largest deviation from the mean is at most tol * (1 + |hbar|).
pub fn hamiltonian_constancy(
    p: &ControlProblem,
    e: &Extremal,
    tol: f64,
) -> Result<ConstancyResult, VerifyError> {
    check_grid(p, e)?;
    let mut values = Vec::with_capacity(e.nodes());
    for k in 0..e.nodes() {
        values.push(hamiltonian(p, &e.x[k], &e.u[k], e.psi0, &e.psi[k])?);
    }
    let hbar = values.iter().sum::<f64>() / values.len() as f64;
    let mut max_dev = 0.0;
    let mut location = e.times[0];
    for (k, v) in values.iter().enumerate() {
        let dev = (v - hbar).abs();
        if dev > max_dev {
            max_dev = dev;
            location = e.times[k];
        }
    }
    Ok(ConstancyResult {
        hbar,
        max_dev,
        location,
        pass: max_dev <= tol * (1.0 + hbar.abs()),
    })
}

/// Default sample count for the maximality check.
pub const DEFAULT_MAXIMALITY_SAMPLES: usize = 101;

/// Runs all four checks and aggregates them into a report. The constancy
/// check is a necessary consequence of the other three for autonomous
/// problems, and is labeled as such.
pub fn verify_extremal(
    p: &ControlProblem,
    e: &Extremal,
    tol: f64,
) -> Result<VerificationReport, VerifyError> {
    let control = residual_control(p, e)?;
    let adjoint = residual_adjoint(p, e)?;
    let gap = maximality_gap(p, e, DEFAULT_MAXIMALITY_SAMPLES)?;
    let constancy = hamiltonian_constancy(p, e, tol)?;

    let nodes = e.nodes();
    let stats_entry = |name: &str, s: &ResidualStats, note: Option<String>| ConditionEntry {
        name: name.to_string(),
        max_residual: s.max,
        location: s.location,
        tolerance: tol,
        pass: s.max <= tol,
        checked_nodes: s.checked,
        excluded_nodes: s.excluded,
        note,
    };
    let mut conditions = vec![
        stats_entry("control system", &control, None),
        stats_entry("adjoint system", &adjoint, None),
        stats_entry(
            "maximality",
            &gap,
            Some(format!(
                "checked on {nodes} grid nodes with sampled controls; \
                 measure-zero violations between samples are invisible"
            )),
        ),
    ];
    let extremality_pass = conditions.iter().all(|c| c.pass);
    let mut constancy_note =
        "necessary consequence: for autonomous problems, constancy of H follows \
         from the three extremality conditions"
            .to_string();
    if !constancy.pass && extremality_pass {
        constancy_note.push_str(
            "; the extremality conditions pass at this tolerance, so this failure \
             indicates numerical drift rather than a non-extremal",
        );
    }
    conditions.push(ConditionEntry {
        name: "hamiltonian constancy".to_string(),
        max_residual: constancy.max_dev,
        location: constancy.location,
        tolerance: tol * (1.0 + constancy.hbar.abs()),
        pass: constancy.pass,
        checked_nodes: nodes,
        excluded_nodes: 0,
        note: Some(constancy_note),
    });

    Ok(VerificationReport {
        conditions,
        hbar: Some(constancy.hbar),
        grid_nodes: nodes,
        pass: false,
    }
    .finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{BoundarySpec, Endpoint};

    fn lqr() -> ControlProblem {
        ControlProblem {
            n: 1,
            r: 1,
            cost: parse("(x1^2 + u1^2)/2", 1, 1).unwrap(),
            dynamics: vec![parse("u1", 1, 1).unwrap()],
            region: ControlRegion::Unconstrained,
            a: 0.0,
            b: 1.0,
            boundary: BoundarySpec {
                start: vec![Endpoint::Fixed(1.0)],
                end: vec![Endpoint::Fixed(0.0)],
            },
        }
    }

    fn bang() -> ControlProblem {
        ControlProblem {
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
            boundary: BoundarySpec {
                start: vec![Endpoint::Fixed(0.0)],
                end: vec![Endpoint::Fixed(0.0)],
            },
        }
    }

    fn lqr_analytic(nodes: usize) -> Extremal {
        let sinh1 = 1f64.sinh();
        let mut times = Vec::new();
        let mut x = Vec::new();
        let mut u = Vec::new();
        let mut psi = Vec::new();
        for k in 0..nodes {
            let t = k as f64 / (nodes - 1) as f64;
            times.push(t);
            x.push(vec![(1.0 - t).sinh() / sinh1]);
            let v = -(1.0 - t).cosh() / sinh1;
            u.push(vec![v]);
            psi.push(vec![v]);
        }
        Extremal::new(times, x, u, -1.0, psi).unwrap()
    }

    fn bang_analytic(nodes: usize) -> Extremal {
        let mut times = Vec::new();
        let mut x = Vec::new();
        let mut u = Vec::new();
        let mut psi = Vec::new();
        for k in 0..nodes {
            let t = k as f64 / (nodes - 1) as f64;
            times.push(t);
            if t < 0.5 {
                x.push(vec![-t]);
                u.push(vec![-1.0]);
            } else {
                x.push(vec![t - 1.0]);
                u.push(vec![if t == 0.5 { -1.0 } else { 1.0 }]);
            }
            psi.push(vec![t - 0.5]);
        }
        Extremal::new(times, x, u, -1.0, psi).unwrap()
    }

    fn rest_extremal(nodes: usize) -> (ControlProblem, Extremal) {
        let p = ControlProblem {
            cost: parse("u1^2", 1, 1).unwrap(),
            boundary: BoundarySpec {
                start: vec![Endpoint::Fixed(0.0)],
                end: vec![Endpoint::Fixed(0.0)],
            },
            ..lqr()
        };
        // psi == 0 everywhere is nontrivial as long as psi0 != 0.
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let zeros = vec![vec![0.0]; nodes];
        let e = Extremal::new(times, zeros.clone(), zeros.clone(), -1.0, zeros).unwrap();
        (p, e)
    }

    #[test]
    fn control_residual_rest() {
        let (p, e) = rest_extremal(101);
        let s = residual_control(&p, &e).unwrap();
        assert_eq!(s.max, 0.0);
    }

    #[test]
    fn control_residual_analytic_lqr() {
        let p = lqr();
        let e = lqr_analytic(1001);
        let s = residual_control(&p, &e).unwrap();
        assert!(s.max <= 1e-5, "max residual {}", s.max);
    }

    #[test]
    fn control_residual_flags_corruption() {
        let p = lqr();
        let mut e = lqr_analytic(1001);
        e.x[500][0] += 1e-2;
        let s = residual_control(&p, &e).unwrap();
        assert!(s.max >= 1.0, "max residual {}", s.max);
    }

    #[test]
    fn adjoint_residual_harmonic() {
        let p = ControlProblem {
            cost: parse("(u1^2 - x1^2)/2", 1, 1).unwrap(),
            b: std::f64::consts::FRAC_PI_2,
            ..lqr()
        };
        let nodes = 1001;
        let mut times = Vec::new();
        let mut x = Vec::new();
        let mut u = Vec::new();
        let mut psi = Vec::new();
        for k in 0..nodes {
            let t = std::f64::consts::FRAC_PI_2 * k as f64 / (nodes - 1) as f64;
            times.push(t);
            x.push(vec![t.sin()]);
            u.push(vec![t.cos()]);
            psi.push(vec![t.cos()]);
        }
        let e = Extremal::new(times, x, u, -1.0, psi).unwrap();
        let s = residual_adjoint(&p, &e).unwrap();
        assert!(s.max <= 1e-5, "max residual {}", s.max);

        // Sign-flipped costate violates psi' = -dH/dx by about 2 max|x|.
        let mut bad = e.clone();
        for pk in bad.psi.iter_mut() {
            pk[0] = -pk[0];
        }
        let s = residual_adjoint(&p, &bad).unwrap();
        assert!(s.max > 1.5, "max residual {}", s.max);
    }

    #[test]
    fn maximality_gap_bang() {
        let p = bang();
        let e = bang_analytic(2001);
        let s = maximality_gap(&p, &e, 101).unwrap();
        assert!(s.max <= 1e-12, "gap {}", s.max);

        // Wrong control on [0, 1/2): worst gap 2|psi(0)| = 1 at t = 0.
        let mut bad = e.clone();
        for uk in bad.u.iter_mut() {
            uk[0] = 1.0;
        }
        let s = maximality_gap(&p, &bad, 101).unwrap();
        assert!((s.max - 1.0).abs() < 1e-12, "gap {}", s.max);
        assert_eq!(s.location, 0.0);
    }

    #[test]
    fn maximality_gap_singleton_set() {
        let p = ControlProblem {
            region: ControlRegion::FiniteSet(vec![vec![0.25]]),
            ..bang()
        };
        let nodes = 11;
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let e = Extremal::new(
            times,
            vec![vec![0.0]; nodes],
            vec![vec![0.25]; nodes],
            -1.0,
            vec![vec![0.5]; nodes],
        )
        .unwrap();
        let s = maximality_gap(&p, &e, 101).unwrap();
        assert_eq!(s.max, 0.0);
    }

    #[test]
    fn constancy_lqr_analytic() {
        let p = lqr();
        let e = lqr_analytic(2001);
        let c = hamiltonian_constancy(&p, &e, 1e-8).unwrap();
        let expected = 0.5 / 1f64.sinh().powi(2);
        assert!((c.hbar - expected).abs() < 1e-7, "hbar {}", c.hbar);
        assert!(c.max_dev <= 1e-9, "max dev {}", c.max_dev);
        assert!(c.pass);
    }

    #[test]
    fn constancy_bang_across_switch() {
        let p = bang();
        let e = bang_analytic(2001); // node at exactly t = 0.5
        let c = hamiltonian_constancy(&p, &e, 1e-12).unwrap();
        assert!((c.hbar - 0.5).abs() < 1e-12, "hbar {}", c.hbar);
        assert!(c.max_dev <= 1e-12, "max dev {}", c.max_dev);
    }

    #[test]
    fn constancy_passes_for_nonextremal_with_constant_h() {
        // x = t, u = 1, psi = t, psi0 = -1, L = x1, phi = u1 gives
        // H = -t + t = 0 on the grid: constancy alone cannot reject it.
        let p = bang();
        let nodes = 101;
        let mut times = Vec::new();
        let mut x = Vec::new();
        let mut u = Vec::new();
        let mut psi = Vec::new();
        for k in 0..nodes {
            let t = k as f64 / (nodes - 1) as f64;
            times.push(t);
            x.push(vec![t]);
            u.push(vec![1.0]);
            psi.push(vec![t]);
        }
        let e = Extremal::new(times, x, u, -1.0, psi).unwrap();
        let c = hamiltonian_constancy(&p, &e, 1e-10).unwrap();
        assert!(c.pass, "H should be constant, dev {}", c.max_dev);
        // The cross-check: control and adjoint both hold here (x' = 1 = u,
        // psi' = 1 = -dH/dx), and maximality holds since psi >= 0 selects
        // u = +1; the fixture documents that a constant H is necessary, not
        // sufficient, and defects must surface in the extremality residuals.
        let report = verify_extremal(&p, &e, 1e-6).unwrap();
        let maximality = &report.conditions[2];
        assert!(maximality.max_residual <= 1e-10);
    }

    #[test]
    fn report_lists_injected_defects() {
        let p = lqr();
        let mut e = lqr_analytic(1001);
        for pk in e.psi.iter_mut() {
            pk[0] = -pk[0];
        }
        let report = verify_extremal(&p, &e, 1e-4).unwrap();
        assert!(!report.pass);
        let adjoint = report
            .conditions
            .iter()
            .find(|c| c.name == "adjoint system")
            .unwrap();
        assert!(!adjoint.pass);
        let maximality = report
            .conditions
            .iter()
            .find(|c| c.name == "maximality")
            .unwrap();
        assert!(!maximality.pass);
    }

    #[test]
    fn tolerance_monotonicity() {
        let p = lqr();
        let e = lqr_analytic(201);
        let loose = verify_extremal(&p, &e, 1e-3).unwrap();
        let tight = verify_extremal(&p, &e, 1e-12).unwrap();
        for (l, t) in loose.conditions.iter().zip(&tight.conditions) {
            if !l.pass {
                assert!(!t.pass, "tightening flipped {} to passing", t.name);
            }
        }
    }

    #[test]
    fn switch_nodes_are_excluded() {
        let p = bang();
        let e = bang_analytic(2001);
        let s = residual_control(&p, &e).unwrap();
        assert!(s.excluded > 0);
        assert!(s.max <= 1e-8, "max residual {}", s.max);
        let s = residual_adjoint(&p, &e).unwrap();
        assert!(s.max <= 1e-8, "max residual {}", s.max);
    }

    #[test]
    fn report_determinism() {
        let p = lqr();
        let e = lqr_analytic(301);
        let a = verify_extremal(&p, &e, 1e-6).unwrap();
        let b = verify_extremal(&p, &e, 1e-6).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
