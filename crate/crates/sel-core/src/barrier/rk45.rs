//! Adaptive Dormand-Prince 5(4) integrator for two-component systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Rk45 {
    fn default() -> Self {
        Rk45 { rtol: 1e-13, atol: 1e-300, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Reached the end point with this state.
    Reached(State),
    /// The right-hand side became undefined (or the step collapsed) at `t`.
    Failed { t: f64, y: State },
}

impl Rk45 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`. Every point of `stops`
    /// (increasing, inside `(t0, t1]`) is hit exactly and reported to `on_stop`.
    /// `f` returns `None` where the right-hand side is undefined.
    pub fn integrate(
        &self,
        f: impl Fn(f64, &State) -> Option<State>,
        t0: f64,
        y0: State,
        t1: f64,
        stops: &[f64],
        mut on_stop: impl FnMut(usize, f64, &State),
    ) -> Outcome {
        let mut t = t0;
        let mut y = y0;
        let mut k1 = match f(t, &y) {
            Some(k) => k,
            None => return Outcome::Failed { t, y },
        };
        let mut h = 1e-3 * (t1 - t0);
        let mut next_stop = 0;
        while next_stop < stops.len() && stops[next_stop] <= t0 {
            next_stop += 1;
        }
        for _ in 0..self.max_steps {
            if t >= t1 {
                return Outcome::Reached(y);
            }
            let target = if next_stop < stops.len() { stops[next_stop].min(t1) } else { t1 };
            let mut step = h.min(target - t);
            let hit_target = step >= target - t;
            if hit_target {
                step = target - t;
            }
            match self.try_step(&f, t, &y, &k1, step) {
                Some((yn, kn, err)) if err <= 1.0 => {
                    t = if hit_target { target } else { t + step };
                    y = yn;
                    k1 = kn;
                    if hit_target && next_stop < stops.len() && target == stops[next_stop] {
                        on_stop(next_stop, t, &y);
                        next_stop += 1;
                    }
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !hit_target {
                        h = step * fac;
                    } else {
                        h = h.max(step * fac);
                    }
                }
                Some((_, _, err)) => {
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                None => {
                    h = 0.25 * step;
                }
            }
            if h < self.h_min * (1.0 + t.abs()) {
                return Outcome::Failed { t, y };
            }
        }
        Outcome::Failed { t, y }
    }

    fn try_step(
        &self,
        f: &impl Fn(f64, &State) -> Option<State>,
        t: f64,
        y: &State,
        k1: &State,
        h: f64,
    ) -> Option<(State, State, f64)> {
        let mut k = [[0.0; 2]; 7];
        k[0] = *k1;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    ys[c] += h * A[s][j] * kj[c];
                }
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h * d5;
            let sc = self.atol + self.rtol * y[c].abs().max(y5[c].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if !(y5[0].is_finite() && y5[1].is_finite() && err.is_finite()) {
            return None;
        }
        // first-same-as-last: stage 7 is f at the new point
        Some((y5, k[6], err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let rk = Rk45::default();
        let stops = [1.0, 2.0];
        let mut seen = Vec::new();
        let out = rk.integrate(|_, y| Some([y[1], -y[0]]), 0.0, [0.0, 1.0], 3.0, &stops, |_, t, y| seen.push((t, y[0])));
        match out {
            Outcome::Reached(y) => assert!((y[0] - 3f64.sin()).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
        assert_eq!(seen.len(), 2);
        assert!((seen[0].1 - 1f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn undefined_rhs_fails() {
        let rk = Rk45::default();
        let out = rk.integrate(|t, _| if t < 0.5 { Some([1.0, 0.0]) } else { None }, 0.0, [0.0, 0.0], 1.0, &[], |_, _, _| {});
        assert!(matches!(out, Outcome::Failed { .. }));
    }
}
