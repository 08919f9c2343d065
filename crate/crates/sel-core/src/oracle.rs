//! Independent reference computations used to cross-check the solvers.

use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid oracle input: {0}")]
    Input(String),
    #[error("shooting bracket not found: {0}")]
    Bracket(String),
}

/// `H(t)` for `H'' = -t^(-alpha)`, `H(0) = 0`, `H(b) = 1` by nested
/// Gauss-Legendre quadrature of `H(t) = t H'(b) + int_0^t int_s^b sigma^(-alpha)`.
pub fn barrier_beta_zero(alpha: f64, b: f64, t: f64) -> Result<f64, OracleError> {
    if !(alpha > 0.0 && alpha < 1.0) || !(b > 0.0) || !(t > 0.0 && t <= b) {
        return Err(OracleError::Input(format!("need 0 < alpha < 1, 0 < t <= b; got alpha {alpha}, t {t}, b {b}")));
    }
    // inner: int_s^b sigma^(-alpha) d sigma in ln sigma
    let inner = |s: f64| quad::integrate(|y| (y * (1.0 - alpha)).exp(), s.ln(), b.ln(), 8);
    // outer over s in (0, t], s = t e^(-y): the integrand decays like e^(-y (2 - alpha))
    let outer = |t: f64| {
        let ymax = 60.0 / (2.0 - alpha);
        quad::integrate(
            |y| {
                let s = t * (-y).exp();
                inner(s) * s
            },
            0.0,
            ymax,
            60,
        )
    };
    let slope_b = (1.0 - outer(b)) / b;
    Ok(t * slope_b + outer(t))
}

/// Fine-grid profile of the symmetric solution of `-u'' = x^(-q) u^(-p)` on
/// `(0, 1)`, obtained by shooting from the midpoint with `u'(1/2) = 0`.
#[derive(Debug, Clone)]
pub struct IntervalShot {
    tau0: f64,
    dtau: f64,
    /// `u` and `du/dtau` on the uniform `tau = -ln x` grid.
    u: Vec<f64>,
    du: Vec<f64>,
    gamma: f64,
    pub midpoint_value: f64,
}

fn shot_rhs(p: f64, q: f64, tau: f64, y: [f64; 2]) -> [f64; 2] {
    if !(y[0] > 0.0) {
        return [f64::NAN; 2];
    }
    [y[1], -y[1] - ((q - 2.0) * tau).exp() * y[0].powf(-p)]
}

/// `true` when the shot stays positive and the extrapolated `u(0)` is nonnegative.
fn integrate_shot(p: f64, q: f64, gamma: f64, m: f64, tau0: f64, dtau: f64, steps: usize, mut keep: impl FnMut(usize, [f64; 2])) -> bool {
    let mut y = [m, 0.0];
    keep(0, y);
    for k in 0..steps {
        let tau = tau0 + k as f64 * dtau;
        let k1 = shot_rhs(p, q, tau, y);
        let k2 = shot_rhs(p, q, tau + 0.5 * dtau, [y[0] + 0.5 * dtau * k1[0], y[1] + 0.5 * dtau * k1[1]]);
        let k3 = shot_rhs(p, q, tau + 0.5 * dtau, [y[0] + 0.5 * dtau * k2[0], y[1] + 0.5 * dtau * k2[1]]);
        let k4 = shot_rhs(p, q, tau + dtau, [y[0] + dtau * k3[0], y[1] + dtau * k3[1]]);
        for j in 0..2 {
            y[j] += dtau / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !(y[0] > 0.0) || !y[1].is_finite() {
            return false;
        }
        keep(k + 1, y);
    }
    // u ~ C x^gamma near zero, so u - x u_x / gamma = u + u_tau / gamma -> 0
    y[0] + y[1] / gamma >= 0.0
}

impl IntervalShot {
    /// Shoots with `steps` RK4 steps in `tau` from `x = 1/2` to `x = x_end`.
    pub fn new(p: f64, q: f64, steps: usize, x_end: f64) -> Result<Self, OracleError> {
        if !(p >= 0.0) || !(0.0..2.0).contains(&q) || steps < 100 || !(x_end > 0.0 && x_end < 0.5) {
            return Err(OracleError::Input(format!("p {p}, q {q}, steps {steps}, x_end {x_end}")));
        }
        let gamma = if p + q > 1.0 { (2.0 - q) / (1.0 + p) } else { 1.0 };
        let tau0 = 2f64.ln();
        let dtau = (-x_end.ln() - tau0) / steps as f64;
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut tries = 0;
        while !integrate_shot(p, q, gamma, hi, tau0, dtau, steps, |_, _| {}) {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(OracleError::Bracket("no midpoint value keeps u positive".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if integrate_shot(p, q, gamma, mid, tau0, dtau, steps, |_, _| {}) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut u = vec![0.0; steps + 1];
        let mut du = vec![0.0; steps + 1];
        integrate_shot(p, q, gamma, hi, tau0, dtau, steps, |k, y| {
            u[k] = y[0];
            du[k] = y[1];
        });
        Ok(IntervalShot { tau0, dtau, u, du, gamma, midpoint_value: hi })
    }

    /// `u` at distance `d` from the nearest endpoint (cubic Hermite in `tau`,
    /// power-law extension below the shooting floor).
    pub fn eval(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let tau = (-d.ln()).max(self.tau0);
        let last = self.u.len() - 1;
        let s = (tau - self.tau0) / self.dtau;
        if s >= last as f64 {
            let tau_end = self.tau0 + last as f64 * self.dtau;
            return self.u[last] * (-(tau - tau_end) * self.gamma).exp();
        }
        let k = (s.floor() as usize).min(last - 1);
        let t = s - k as f64;
        let h = self.dtau;
        let (y0, y1, m0, m1) = (self.u[k], self.u[k + 1], self.du[k] * h, self.du[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_quadrature_matches_closed_form() {
        for alpha in [0.3f64, 0.5, 0.9] {
            let b = 0.5f64;
            let k = (1.0 - alpha) * (2.0 - alpha);
            let s0 = (1.0 + b.powf(2.0 - alpha) / k) / b;
            for t in [1e-6f64, 1e-3, 0.1, 0.5] {
                let ex = s0 * t - t.powf(2.0 - alpha) / k;
                let got = barrier_beta_zero(alpha, b, t).unwrap();
                assert!(((got - ex) / ex).abs() < 1e-10, "alpha {alpha} t {t}: {got} vs {ex}");
            }
        }
    }

    #[test]
    fn shot_reproduces_p_zero_parabola() {
        let s = IntervalShot::new(0.0, 0.0, 20_000, 1e-10).unwrap();
        for x in [1e-8, 0.01, 0.2, 0.5] {
            let ex = 0.5 * x * (1.0 - x);
            assert!((s.eval(x) - ex).abs() < 1e-9, "{x}: {} vs {ex}", s.eval(x));
        }
    }

    #[test]
    fn inverse_square_root_midpoint() {
        // -u'' = 1/u: the energy identity u'^2 = 2 ln(m / u) gives m = 1 / sqrt(2 pi)
        let s = IntervalShot::new(1.0, 0.0, 50_000, 1e-12).unwrap();
        let ex = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((s.midpoint_value - ex).abs() < 1e-4, "{}", s.midpoint_value);
    }
}
