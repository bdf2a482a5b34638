//! Time augmentation: from an autonomous problem on [a,b], build the
//! auxiliary problem on [alpha,beta] with one extra state s (the accumulated
//! time shift, s' = v in (0,1)) and one extra control v. Under the change of
//! variable t = tau - s(tau), extremals of the base problem lift to
//! extremals of the augmented one; the augmented Hamiltonian is
//! `(1 - v) H(z, w, p0, p_z) + v p_s` and never references s. Stationarity in v forces p_s = H along a lifted
//! extremal, and the adjoint equation for s forces p_s to be constant, which
//! is exactly the constancy of H being certified here.

use crate::interp::{piecewise_constant, MonotoneCubic};
use crate::model::{
    hamiltonian, hamiltonian_partials, validate, ControlProblem, Extremal, ModelError,
};
use crate::verify::{
    fd_derivative, switch_intervals, ConditionEntry, VerificationReport, VerifyError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error("augmented horizon too short: beta - alpha = {span} must exceed b - a = {base_span}")]
    HorizonTooShort { span: f64, base_span: f64 },
    #[error("v must lie in the open interval (0,1), got {0}")]
    VOutOfRange(f64),
    #[error("v_bar must lie in the open interval (0,1), got {0}")]
    VBarOutOfRange(f64),
    #[error("base problem has defects: {0}")]
    InvalidBase(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

/// The auxiliary problem built from a base problem: states (z, s), controls
/// (w, v), running cost (1-v) L(z,w), dynamics z' = (1-v) phi(z,w), s' = v,
/// with the base boundary conditions on z and s pinned to
/// s(alpha) = alpha - a, s(beta) = beta - b.
#[derive(Debug, Clone)]
pub struct AugmentedProblem {
    pub base: ControlProblem,
    pub alpha: f64,
    pub beta: f64,
}

impl AugmentedProblem {
    pub fn state_dim(&self) -> usize {
        self.base.n + 1
    }

    pub fn control_dim(&self) -> usize {
        self.base.r + 1
    }

    /// Boundary values (s(alpha), s(beta)).
    pub fn s_boundary(&self) -> (f64, f64) {
        (self.alpha - self.base.a, self.beta - self.base.b)
    }
}

pub fn augment(p: &ControlProblem, alpha: f64, beta: f64) -> Result<AugmentedProblem, AugmentError> {
    let defects = validate(p);
    if !defects.is_empty() {
        let list: Vec<&str> = defects.iter().map(|d| d.code.as_str()).collect();
        return Err(AugmentError::InvalidBase(list.join(", ")));
    }
    let span = beta - alpha;
    let base_span = p.b - p.a;
    if span <= base_span {
        return Err(AugmentError::HorizonTooShort { span, base_span });
    }
    Ok(AugmentedProblem {
        base: p.clone(),
        alpha,
        beta,
    })
}

/// Extremal of the augmented problem sampled on a tau grid.
#[derive(Debug, Clone)]
pub struct LiftedExtremal {
    pub tau: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub p0: f64,
    pub p_z: Vec<Vec<f64>>,
    pub p_s: Vec<f64>,
}

impl LiftedExtremal {
    pub fn nodes(&self) -> usize {
        self.tau.len()
    }

    /// The original time t = tau - s(tau) at each node.
    pub fn base_times(&self) -> Vec<f64> {
        self.tau.iter().zip(&self.s).map(|(t, s)| t - s).collect()
    }
}

/// Augmented Hamiltonian (1-v) H(z,w,p0,p_z) + v p_s. The state s does not
/// appear, by construction.
pub fn augmented_hamiltonian(
    ap: &AugmentedProblem,
    z: &[f64],
    w: &[f64],
    v: f64,
    p0: f64,
    p_z: &[f64],
    p_s: f64,
) -> Result<f64, AugmentError> {
    if !(0.0..1.0).contains(&v) || v == 0.0 {
        return Err(AugmentError::VOutOfRange(v));
    }
    let h = hamiltonian(&ap.base, z, w, p0, p_z)?;
    Ok(h * (1.0 - v) + p_s * v)
}

/// Lifts a base extremal through the affine reparametrization with constant
/// speed v_bar: s(tau) = (alpha - a) + v_bar (tau - alpha), so that
/// t = tau - s(tau) sweeps [a,b] as tau sweeps [alpha, beta] with
/// beta = alpha + (b-a)/(1-v_bar).
///
/// State, control, and costate samples are resampled by monotone-cubic
/// interpolation (piecewise-constant for the control when a switch is
/// detected); p_s is initialized to the mean of H along the base extremal,
/// and `verify_lift` independently checks p_s against H everywhere.
pub fn lift(
    p: &ControlProblem,
    e: &Extremal,
    v_bar: f64,
    alpha: f64,
) -> Result<LiftedExtremal, AugmentError> {
    if !(v_bar > 0.0 && v_bar < 1.0) {
        return Err(AugmentError::VBarOutOfRange(v_bar));
    }
    let m = e.nodes();
    let stretch = 1.0 / (1.0 - v_bar);

    // H values and their mean along the base extremal.
    let mut h_sum = 0.0;
    for k in 0..m {
        h_sum += hamiltonian(p, &e.x[k], &e.u[k], e.psi0, &e.psi[k])?;
    }
    let p_s_value = h_sum / m as f64;

    let has_switch = !switch_intervals(&p.region, &e.u).is_empty();

    let x_interp: Vec<MonotoneCubic> = (0..p.n)
        .map(|i| {
            let series: Vec<f64> = e.x.iter().map(|xk| xk[i]).collect();
            MonotoneCubic::new(&e.times, &series)
        })
        .collect();
    let psi_interp: Vec<MonotoneCubic> = (0..p.n)
        .map(|i| {
            let series: Vec<f64> = e.psi.iter().map(|pk| pk[i]).collect();
            MonotoneCubic::new(&e.times, &series)
        })
        .collect();
    let u_series: Vec<Vec<f64>> = (0..p.r)
        .map(|j| e.u.iter().map(|uk| uk[j]).collect())
        .collect();
    let u_interp: Vec<Option<MonotoneCubic>> = if has_switch {
        (0..p.r).map(|_| None).collect()
    } else {
        u_series
            .iter()
            .map(|s| Some(MonotoneCubic::new(&e.times, s)))
            .collect()
    };

    let mut tau = Vec::with_capacity(m);
    let mut z = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut p_z = Vec::with_capacity(m);
    for k in 0..m {
        let tau_k = alpha + (e.times[k] - p.a) * stretch;
        let s_k = (alpha - p.a) + v_bar * (tau_k - alpha);
        let t_k = tau_k - s_k;
        tau.push(tau_k);
        s.push(s_k);
        v.push(v_bar);
        z.push(x_interp.iter().map(|c| c.eval(t_k)).collect());
        p_z.push(psi_interp.iter().map(|c| c.eval(t_k)).collect());
        let wk: Vec<f64> = (0..p.r)
            .map(|j| match &u_interp[j] {
                Some(c) => c.eval(t_k),
                None => piecewise_constant(&e.times, &u_series[j], t_k),
            })
            .collect();
        w.push(wk);
    }

    Ok(LiftedExtremal {
        tau,
        z,
        s,
        w,
        v,
        p0: e.psi0,
        p_z,
        p_s: vec![p_s_value; m],
    })
}

/// Checks the lifted extremal against the augmented problem: dynamics of z
/// and s, the adjoint equations for p_z and p_s, and the stationarity
/// condition in v (p_s = H along the lift). Passes iff every maximum
/// residual is at most tol.
pub fn verify_lift(
    ap: &AugmentedProblem,
    le: &LiftedExtremal,
    tol: f64,
) -> Result<VerificationReport, AugmentError> {
    let m = le.nodes();
    if m < 2 {
        return Err(AugmentError::GridMismatch(
            "lifted grid needs at least two nodes".to_string(),
        ));
    }
    let span_tol = 1e-9 * (1.0 + ap.alpha.abs() + ap.beta.abs());
    if le.tau[0] < ap.alpha - span_tol || *le.tau.last().unwrap() > ap.beta + span_tol {
        return Err(AugmentError::GridMismatch(format!(
            "tau grid [{}, {}] escapes [{}, {}]",
            le.tau[0],
            le.tau.last().unwrap(),
            ap.alpha,
            ap.beta
        )));
    }
    let p = &ap.base;
    if le.z[0].len() != p.n || le.w[0].len() != p.r {
        return Err(AugmentError::GridMismatch(
            "lifted sample dimensions do not match the base problem".to_string(),
        ));
    }
    for vk in &le.v {
        if !(*vk > 0.0 && *vk < 1.0) {
            return Err(AugmentError::VOutOfRange(*vk));
        }
    }

    // Same switch-node exclusion rule as the base checks: a difference
    // quotient across a control jump measures the jump.
    let jumps = switch_intervals(&p.region, &le.w);
    let excluded = |k: usize| {
        let (lo, hi) = if k < 2 {
            (0usize, 4usize.min(m - 1))
        } else if k + 2 >= m {
            (m.saturating_sub(5), m - 1)
        } else {
            (k - 2, k + 2)
        };
        jumps.iter().any(|&j| j >= lo && j + 1 <= hi)
    };

    // H along the lift, used by both stationarity and the adjoint of p_z.
    let mut h_vals = Vec::with_capacity(m);
    for k in 0..m {
        h_vals.push(hamiltonian(p, &le.z[k], &le.w[k], le.p0, &le.p_z[k])?);
    }

    let entry = |name: &str, residuals: Vec<f64>, skip_switches: bool| {
        let mut max = 0.0_f64;
        let mut location = le.tau[0];
        let mut checked = 0usize;
        let mut skipped = 0usize;
        for (k, r) in residuals.iter().enumerate() {
            if skip_switches && excluded(k) {
                skipped += 1;
                continue;
            }
            checked += 1;
            if *r >= max {
                max = *r;
                location = le.tau[k];
            }
        }
        ConditionEntry {
            name: name.to_string(),
            max_residual: max,
            location,
            tolerance: tol,
            pass: max <= tol,
            checked_nodes: checked,
            excluded_nodes: skipped,
            note: None,
        }
    };

    // (i) dynamics: z' = (1-v) phi(z,w), s' = v.
    let mut z_res = vec![0.0_f64; m];
    for i in 0..p.n {
        let series: Vec<f64> = le.z.iter().map(|zk| zk[i]).collect();
        let deriv = fd_derivative(&le.tau, &series);
        for k in 0..m {
            let phi = p.dynamics[i].eval(&le.z[k], &le.w[k])?;
            z_res[k] = z_res[k].max((deriv[k] - (1.0 - le.v[k]) * phi).abs());
        }
    }
    let s_deriv = fd_derivative(&le.tau, &le.s);
    let s_res: Vec<f64> = s_deriv
        .iter()
        .zip(&le.v)
        .map(|(d, v)| (d - v).abs())
        .collect();

    // (ii) adjoints: p_z' = -(1-v) dH/dz, and p_s' = -dH/ds = 0, checked as
    // the per-step increment of p_s.
    let mut pz_res = vec![0.0_f64; m];
    for i in 0..p.n {
        let series: Vec<f64> = le.p_z.iter().map(|pk| pk[i]).collect();
        let deriv = fd_derivative(&le.tau, &series);
        for k in 0..m {
            let (dh_dz, _) = hamiltonian_partials(p, &le.z[k], &le.w[k], le.p0, &le.p_z[k])?;
            pz_res[k] = pz_res[k].max((deriv[k] + (1.0 - le.v[k]) * dh_dz[i]).abs());
        }
    }
    let mut ps_res = vec![0.0_f64; m];
    for k in 0..m - 1 {
        let d = (le.p_s[k + 1] - le.p_s[k]).abs();
        ps_res[k] = ps_res[k].max(d);
        ps_res[k + 1] = ps_res[k + 1].max(d);
    }

    // (iii) stationarity in v: dH_aug/dv = p_s - H(z,w,p0,p_z).
    let stat_res: Vec<f64> = h_vals
        .iter()
        .zip(&le.p_s)
        .map(|(h, ps)| (ps - h).abs())
        .collect();

    let conditions = vec![
        entry("z dynamics", z_res, true),
        entry("s dynamics", s_res, false),
        entry("p_z adjoint", pz_res, true),
        entry("p_s constancy", ps_res, false),
        entry("v stationarity (p_s = H)", stat_res, false),
    ];
    let pass = conditions.iter().all(|c| c.pass);
    let hbar = h_vals.iter().sum::<f64>() / m as f64;
    Ok(VerificationReport {
        conditions,
        hbar: Some(hbar),
        grid_nodes: m,
        pass,
    })
}

/// Cost of the lifted trajectory under the augmented integrand (1-v) L(z,w),
/// by trapezoidal quadrature on the tau grid. Equals the base cost up to
/// quadrature error, since dt = (1 - s'(tau)) dtau.
pub fn augmented_cost(ap: &AugmentedProblem, le: &LiftedExtremal) -> Result<f64, AugmentError> {
    let mut values = Vec::with_capacity(le.nodes());
    for k in 0..le.nodes() {
        let l = ap.base.cost.eval(&le.z[k], &le.w[k])?;
        values.push((1.0 - le.v[k]) * l);
    }
    let mut total = 0.0;
    for k in 0..le.nodes() - 1 {
        total += 0.5 * (le.tau[k + 1] - le.tau[k]) * (values[k] + values[k + 1]);
    }
    Ok(total)
}

/// Restricts a lifted extremal back through t = tau - s(tau), recovering a
/// base extremal on the induced time grid.
pub fn restrict(le: &LiftedExtremal) -> Result<Extremal, AugmentError> {
    Ok(Extremal::new(
        le.base_times(),
        le.z.clone(),
        le.w.clone(),
        le.p0,
        le.p_z.clone(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{BoundarySpec, ControlRegion, Endpoint};

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

    #[test]
    fn augment_boundaries() {
        let ap = augment(&lqr(), 0.0, 2.0).unwrap();
        assert_eq!(ap.state_dim(), 2);
        assert_eq!(ap.control_dim(), 2);
        assert_eq!(ap.s_boundary(), (0.0, 1.0));

        let mut bang = lqr();
        bang.a = 0.0;
        bang.b = 1.0;
        let ap = augment(&bang, 1.0, 4.0).unwrap();
        assert_eq!(ap.s_boundary(), (1.0, 3.0));
    }

    #[test]
    fn augment_rejects_short_horizon() {
        let p = lqr();
        assert!(matches!(
            augment(&p, 0.0, 1.0),
            Err(AugmentError::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn augmented_hamiltonian_affine_in_v() {
        let ap = augment(&lqr(), 0.0, 2.0).unwrap();
        let (z, w, p_z) = (vec![0.4], vec![-0.3], vec![0.8]);
        let h = hamiltonian(&ap.base, &z, &w, -1.0, &p_z).unwrap();
        // v -> 0 limit reproduces H.
        let near0 = augmented_hamiltonian(&ap, &z, &w, 1e-12, -1.0, &p_z, 2.5).unwrap();
        assert!((near0 - h).abs() <= 1e-9 * (1.0 + h.abs()));
        // v -> 1 limit reproduces p_s; v = 1 itself is rejected.
        assert!(augmented_hamiltonian(&ap, &z, &w, 1.0, -1.0, &p_z, 2.5).is_err());
        let near1 = augmented_hamiltonian(&ap, &z, &w, 1.0 - 1e-12, -1.0, &p_z, 2.5).unwrap();
        assert!((near1 - 2.5).abs() <= 1e-9 * (h - 2.5).abs());
        // p_s = H kills the v dependence.
        let v1 = augmented_hamiltonian(&ap, &z, &w, 0.3, -1.0, &p_z, h).unwrap();
        let v2 = augmented_hamiltonian(&ap, &z, &w, 0.7, -1.0, &p_z, h).unwrap();
        assert!((v1 - v2).abs() <= 1e-12);
    }

    #[test]
    fn lift_geometry() {
        let p = lqr();
        let e = lqr_analytic(101);
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        assert!((le.tau.last().unwrap() - 2.0).abs() < 1e-12);
        for (tau, s) in le.tau.iter().zip(&le.s) {
            assert!((s - 0.5 * tau).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_rejects_bad_vbar() {
        let p = lqr();
        let e = lqr_analytic(11);
        assert!(matches!(lift(&p, &e, 0.0, 0.0), Err(AugmentError::VBarOutOfRange(_))));
        assert!(matches!(lift(&p, &e, 1.0, 0.0), Err(AugmentError::VBarOutOfRange(_))));
    }

    #[test]
    fn lift_ps_matches_lqr_level() {
        let p = lqr();
        let e = lqr_analytic(2001);
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        let expected = 0.5 / 1f64.sinh().powi(2);
        assert!(
            (le.p_s[0] - expected).abs() < 1e-6,
            "p_s = {}, expected {}",
            le.p_s[0],
            expected
        );
    }

    #[test]
    fn lift_ps_matches_harmonic_energy() {
        let p = ControlProblem {
            cost: parse("(u1^2 - x1^2)/2", 1, 1).unwrap(),
            b: std::f64::consts::FRAC_PI_2,
            boundary: BoundarySpec {
                start: vec![Endpoint::Fixed(0.0)],
                end: vec![Endpoint::Fixed(1.0)],
            },
            ..lqr()
        };
        let nodes = 2001;
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
        let le = lift(&p, &e, 0.25, 0.0).unwrap();
        let beta = le.tau.last().unwrap();
        assert!((beta - std::f64::consts::FRAC_PI_2 / 0.75).abs() < 1e-12);
        assert!((le.p_s[0] - 0.5).abs() < 1e-6, "p_s = {}", le.p_s[0]);
    }

    #[test]
    fn verify_lift_passes_and_catches_perturbation() {
        let p = lqr();
        let e = lqr_analytic(2001);
        let ap = augment(&p, 0.0, 3.0).unwrap();
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        let report = verify_lift(&ap, &le, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
        let stat = report
            .conditions
            .iter()
            .find(|c| c.name.starts_with("v stationarity"))
            .unwrap();
        assert!(stat.max_residual <= 1e-8);

        let mut bad = le;
        for ps in bad.p_s.iter_mut() {
            *ps += 0.1;
        }
        let report = verify_lift(&ap, &bad, 1e-6).unwrap();
        assert!(!report.pass);
        let stat = report
            .conditions
            .iter()
            .find(|c| c.name.starts_with("v stationarity"))
            .unwrap();
        assert!((stat.max_residual - 0.1).abs() < 1e-6);
    }

    #[test]
    fn verify_lift_rest_solution() {
        let p = ControlProblem {
            cost: parse("u1^2", 1, 1).unwrap(),
            boundary: BoundarySpec {
                start: vec![Endpoint::Fixed(0.0)],
                end: vec![Endpoint::Fixed(0.0)],
            },
            ..lqr()
        };
        let nodes = 101;
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let zeros = vec![vec![0.0]; nodes];
        let e = Extremal::new(times, zeros.clone(), zeros.clone(), -1.0, zeros).unwrap();
        let ap = augment(&p, 0.0, 2.5).unwrap();
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        let report = verify_lift(&ap, &le, 1e-10).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(le.p_s.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn round_trip_restriction() {
        let p = lqr();
        let e = lqr_analytic(501);
        let le = lift(&p, &e, 0.4, -1.0).unwrap();
        let back = restrict(&le).unwrap();
        for k in 0..e.nodes() {
            assert!((back.times[k] - e.times[k]).abs() < 1e-8);
            assert!((back.x[k][0] - e.x[k][0]).abs() < 1e-8);
            assert!((back.u[k][0] - e.u[k][0]).abs() < 1e-8);
            assert!((back.psi[k][0] - e.psi[k][0]).abs() < 1e-8);
        }
    }

    #[test]
    fn cost_invariance_under_lift() {
        let p = lqr();
        let e = lqr_analytic(2001);
        let base_cost = crate::model::cost(&p, &e).unwrap();
        let ap = augment(&p, 0.0, 2.5).unwrap();
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        let lifted = augmented_cost(&ap, &le).unwrap();
        assert!(
            (lifted - base_cost).abs() < 1e-5,
            "lifted {lifted} vs base {base_cost}"
        );
    }

    #[test]
    fn augmented_hamiltonian_ignores_s() {
        // There is no s argument at all; evaluate through the lift and check
        // that shifting s leaves every value bit-identical.
        let p = lqr();
        let e = lqr_analytic(101);
        let ap = augment(&p, 0.0, 2.0).unwrap();
        let le = lift(&p, &e, 0.5, 0.0).unwrap();
        let mut shifted = le.clone();
        for s in shifted.s.iter_mut() {
            *s += 17.0;
        }
        for k in 0..le.nodes() {
            let h1 = augmented_hamiltonian(&ap, &le.z[k], &le.w[k], le.v[k], le.p0, &le.p_z[k], le.p_s[k])
                .unwrap();
            let h2 = augmented_hamiltonian(
                &ap,
                &shifted.z[k],
                &shifted.w[k],
                shifted.v[k],
                shifted.p0,
                &shifted.p_z[k],
                shifted.p_s[k],
            )
            .unwrap();
            assert_eq!(h1.to_bits(), h2.to_bits());
        }
    }
}
