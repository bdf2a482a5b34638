//! Monotone cubic (Fritsch-Carlson) interpolation, used when resampling
//! trajectories onto the reparametrized grid, plus a piecewise-constant
//! variant for controls across detected switches.

/// Shape-preserving cubic Hermite interpolant on a strictly increasing grid.
pub struct MonotoneCubic {
    t: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(t: &[f64], y: &[f64]) -> Self {
        assert_eq!(t.len(), y.len());
        assert!(t.len() >= 2, "need at least two nodes");
        let m = t.len();
        let mut delta = Vec::with_capacity(m - 1);
        for k in 0..m - 1 {
            delta.push((y[k + 1] - y[k]) / (t[k + 1] - t[k]));
        }
        let mut slope = vec![0.0; m];
        slope[0] = delta[0];
        slope[m - 1] = delta[m - 2];
        for k in 1..m - 1 {
            if delta[k - 1] * delta[k] <= 0.0 {
                slope[k] = 0.0;
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let h0 = t[k] - t[k - 1];
                let h1 = t[k + 1] - t[k];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slope[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        // Clamp endpoint slopes (Fritsch-Carlson boundary adjustment).
        for (k, edge) in [(0usize, 0usize), (m - 1, m - 2)] {
            if slope[k] * delta[edge] <= 0.0 {
                slope[k] = 0.0;
            } else if delta[edge].abs() > 0.0 && slope[k].abs() > 3.0 * delta[edge].abs() {
                slope[k] = 3.0 * delta[edge];
            }
        }
        MonotoneCubic {
            t: t.to_vec(),
            y: y.to_vec(),
            slope,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = bracket(&self.t, s);
        let h = self.t[k + 1] - self.t[k];
        let u = ((s - self.t[k]) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (d0, d1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        y0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + d0 * (u3 - 2.0 * u2 + u)
            + y1 * (-2.0 * u3 + 3.0 * u2)
            + d1 * (u3 - u2)
    }
}

/// Left-continuous piecewise-constant interpolation (sample-and-hold).
pub fn piecewise_constant(t: &[f64], y: &[f64], s: f64) -> f64 {
    let k = bracket(t, s);
    // Take the nearer node so switch locations stay put.
    if s - t[k] <= t[k + 1] - s {
        y[k]
    } else {
        y[k + 1]
    }
}

fn bracket(t: &[f64], s: f64) -> usize {
    match t.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
        Ok(k) => k.min(t.len() - 2),
        Err(k) => k.clamp(1, t.len() - 1) - 1,
    }
}
