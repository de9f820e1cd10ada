//! Dormand–Prince 5(4) with PI step-size control for autonomous planar systems.

pub(crate) type State = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Hairer's defaults for DOPRI5.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    Reached,
    Escaped,
    Underflow { t: f64 },
    Budget,
}

#[derive(Debug, Clone)]
pub(crate) struct Run {
    /// Accepted points `(t, y)` in integration order, starting at `(0, y0)`.
    pub points: Vec<(f64, State)>,
    pub stop: Stop,
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        out[0] += h * w * k[0];
        out[1] += h * w * k[1];
    }
    out
}

fn error_norm(err: &State, y: &State, y_new: &State, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sk = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs());
        acc += (err[i] / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn rms_scaled(v: &State, y: &State, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sk = ctl.abs_tol + ctl.rel_tol * y[i].abs();
        acc += (v[i] / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn initial_step<F: Fn(&State) -> State>(f: &F, y0: &State, f0: &State, ctl: &StepControl) -> f64 {
    let d0 = rms_scaled(y0, y0, ctl);
    let d1 = rms_scaled(f0, y0, ctl);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(ctl.max_step);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = f(&y1);
    let diff = [f1[0] - f0[0], f1[1] - f0[1]];
    let d2 = rms_scaled(&diff, y0, ctl) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.max_step)
}

/// Integrates `ẏ = f(y)` from `t = 0` towards `t_end` (either sign), stopping
/// early when `escaped(y)` holds after an accepted step.
pub(crate) fn integrate_direction<F, E>(
    f: F,
    y0: State,
    t_end: f64,
    ctl: &StepControl,
    escaped: E,
) -> Run
where
    F: Fn(&State) -> State,
    E: Fn(&State) -> bool,
{
    let mut points = vec![(0.0, y0)];
    if t_end == 0.0 {
        return Run {
            points,
            stop: Stop::Reached,
        };
    }
    let dir = t_end.signum();
    let mut t = 0.0_f64;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = initial_step(&f, &y, &k1, ctl);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;

    loop {
        if points.len() >= ctl.max_points {
            return Run {
                points,
                stop: Stop::Budget,
            };
        }
        let remaining = (t_end - t).abs();
        let mut step = h.min(ctl.max_step);
        let last = step >= remaining;
        if last {
            step = remaining;
        }
        let hs = dir * step;
        if t + hs == t || step < 16.0 * f64::EPSILON * t.abs() {
            return Run {
                points,
                stop: Stop::Underflow { t },
            };
        }

        let k2 = f(&axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(
            &y,
            hs,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = f(&axpy(
            &y,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = axpy(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(&y_new);
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, ctl);
        let finite = en.is_finite() && y_new.iter().chain(k7.iter()).all(|v| v.is_finite());

        if !finite {
            h = step * FAC_MIN;
            last_rejected = true;
            continue;
        }

        let fac11 = en.powf(EXPO1);
        if en <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = step / fac;
            if last_rejected {
                h_new = h_new.min(step);
            }
            fac_old = en.max(1e-4);
            last_rejected = false;
            t = if last { t_end } else { t + hs };
            y = y_new;
            k1 = k7;
            h = h_new;
            points.push((t, y));
            if escaped(&y) {
                return Run {
                    points,
                    stop: Stop::Escaped,
                };
            }
            if last {
                return Run {
                    points,
                    stop: Stop::Reached,
                };
            }
        } else {
            h = step / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            last_rejected = true;
        }
    }
}

/// Values at `t = k·h` for `k = 0..=n` (`h` of either sign), each grid
/// interval integrated on its own so every value is a step endpoint.
/// Stops early if an interval cannot be completed.
pub(crate) fn march_grid<F>(f: F, y0: State, h: f64, n: usize, ctl: &StepControl) -> Vec<State>
where
    F: Fn(&State) -> State,
{
    let mut out = Vec::with_capacity(n + 1);
    out.push(y0);
    let mut y = y0;
    for _ in 0..n {
        let run = integrate_direction(&f, y, h, ctl, |_| false);
        if run.stop != Stop::Reached {
            break;
        }
        y = run.points[run.points.len() - 1].1;
        out.push(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(tol: f64) -> StepControl {
        StepControl {
            rel_tol: tol,
            abs_tol: tol,
            max_step: 1.0,
            max_points: 1_000_000,
        }
    }

    #[test]
    fn harmonic_oscillator_one_period() {
        let run = integrate_direction(
            |y| [y[1], -y[0]],
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &ctl(1e-11),
            |_| false,
        );
        assert_eq!(run.stop, Stop::Reached);
        let (t, y) = *run.points.last().unwrap();
        assert_eq!(t, 2.0 * std::f64::consts::PI);
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn backward_exponential() {
        let run = integrate_direction(|y| [y[0], 0.0], [1.0, 0.0], -3.0, &ctl(1e-12), |_| false);
        let (t, y) = *run.points.last().unwrap();
        assert_eq!(t, -3.0);
        assert!((y[0] - (-3f64).exp()).abs() < 1e-11);
        assert!(run.points.windows(2).all(|w| w[1].0 < w[0].0));
    }

    #[test]
    fn riccati_escape() {
        // ẏ = y², y(0) = 1 blows up at t = 1.
        let run = integrate_direction(
            |y| [y[0] * y[0], 0.0],
            [1.0, 0.0],
            5.0,
            &ctl(1e-10),
            |y| y[0].abs() >= 1e8,
        );
        assert_eq!(run.stop, Stop::Escaped);
        let (t, y) = *run.points.last().unwrap();
        assert!(y[0] >= 1e8);
        assert!((t - 1.0).abs() < 1e-7, "{t}");
    }

    #[test]
    fn riccati_without_threshold_underflows() {
        let run = integrate_direction(
            |y| [y[0] * y[0], 0.0],
            [1.0, 0.0],
            5.0,
            &ctl(1e-10),
            |_| false,
        );
        assert!(matches!(run.stop, Stop::Underflow { .. }), "{:?}", run.stop);
    }

    #[test]
    fn grid_march_lands_on_nodes() {
        let ys = march_grid(|y| [y[1], -y[0]], [0.0, 1.0], -0.01, 100, &ctl(1e-12));
        assert_eq!(ys.len(), 101);
        for (k, y) in ys.iter().enumerate() {
            let t = -0.01 * k as f64;
            assert!((y[0] - t.sin()).abs() < 1e-11 && (y[1] - t.cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn sample_budget() {
        let mut c = ctl(1e-10);
        c.max_step = 1e-3;
        c.max_points = 10;
        let run = integrate_direction(|_| [1.0, 0.0], [0.0, 0.0], 1.0, &c, |_| false);
        assert_eq!(run.stop, Stop::Budget);
        assert_eq!(run.points.len(), 10);
    }
}
