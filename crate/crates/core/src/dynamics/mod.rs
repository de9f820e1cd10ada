//! Hamiltonian flow `ż = Γ_z z = (−ψ_q, ψ_p)`: integration, orbit
//! diagnostics, and finite-time blow-up detection.
//!
//! Along any integral curve `z̈ = 2Fz` with `F = Δ∘z`, `F̈ = 6F²` and
//! `(Ḟ)² = 4F³ − g₃`. The constant `g₃` is evaluated once at `t = 0`.

mod compensated;
pub(crate) mod integrator;
pub mod residuals;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    delta, delta_grad, discriminant, hamiltonian_field, psi_eval, psi_grad, CubicCoeffs, PhasePoint,
};
use crate::elliptic::{pole_distance, WpParams};
use crate::scalar::Scalar;
use compensated::SplitCoeffs;
use integrator::{integrate_direction, StepControl, Stop};

pub use residuals::{residual_report, zero_energy_check, ResidualReport, ZeroEnergyResiduals};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("sample budget of {0} exhausted before the span was covered")]
    SampleBudgetExceeded(usize),
    #[error("blow-up tail needs at least 3 samples, got {0}")]
    TailTooShort(usize),
    #[error("blow-up tail must have F > 0 strictly increasing")]
    TailNotIncreasing,
    #[error("trajectory needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero-energy check requires ψ(z0) = 0, got {0:e}")]
    NotZeroEnergy(f64),
    #[error("zero-energy check requires z0 ≠ 0")]
    ZeroInitialPoint,
}

/// Step controller and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in model time.
    pub max_step: f64,
    /// `‖z‖∞` at which a direction is declared to blow up.
    pub blowup_norm: f64,
    /// Requested interval; must contain 0.
    pub t_span: (f64, f64),
    /// Cap on accepted steps per direction.
    pub max_samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            blowup_norm: 1e8,
            t_span: (-10.0, 10.0),
            max_samples: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn symmetric(t: f64) -> Self {
        Self {
            t_span: (-t, t),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidConfig(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be positive");
        }
        if !(self.blowup_norm > 0.0) {
            return bad("blowup_norm must be positive");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        let (t0, t1) = self.t_span;
        if !(t0.is_finite() && t1.is_finite() && t0 <= 0.0 && 0.0 <= t1) {
            return bad("t_span must be finite and contain 0");
        }
        if self.max_samples < 2 {
            return bad("max_samples must be at least 2");
        }
        Ok(())
    }
}

/// One emitted point of an integral curve with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub z: PhasePoint<f64>,
    /// Energy `ψ(z)`.
    pub psi: f64,
    /// `F = Δ(z)`.
    pub f: f64,
    /// `Ḟ` along the flow.
    pub f_dot: f64,
}

impl TrajectorySample {
    pub fn at(c: &CubicCoeffs<f64>, t: f64, z: PhasePoint<f64>) -> Self {
        Self {
            t,
            psi: psi_eval(c, &z),
            f: delta(c, &z),
            f_dot: f_dot(c, &z),
            z,
        }
    }
}

/// How one time direction ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Outcome {
    SpanCompleted,
    /// `‖z‖∞` crossed the threshold; `t_est` is the extrapolated pole.
    BlowUp {
        t_est: f64,
    },
    /// The step size collapsed without the norm test firing.
    StepUnderflow {
        t: f64,
    },
}

impl Outcome {
    pub fn blow_up_time(&self) -> Option<f64> {
        match self {
            Outcome::BlowUp { t_est } => Some(*t_est),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Termination {
    pub forward: Outcome,
    pub backward: Outcome,
}

impl Termination {
    pub fn any_blow_up(&self) -> bool {
        self.forward.blow_up_time().is_some() || self.backward.blow_up_time().is_some()
    }

    pub fn any_underflow(&self) -> bool {
        matches!(self.forward, Outcome::StepUnderflow { .. })
            || matches!(self.backward, Outcome::StepUnderflow { .. })
    }

    pub fn span_completed(&self) -> bool {
        self.forward == Outcome::SpanCompleted && self.backward == Outcome::SpanCompleted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// Coefficients rounded to floats; used for the per-sample diagnostics.
    pub cubic: CubicCoeffs<f64>,
    /// Rounding residuals `exact − rounded` of the coefficients, zero for
    /// float input. The integrator sees `cubic + cubic_residual`.
    pub cubic_residual: [f64; 4],
    pub z0: PhasePoint<f64>,
    /// Strictly increasing in `t`; contains `t = 0`.
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
    pub g3: f64,
    /// Configuration the trajectory was produced with.
    pub config: IntegratorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitClass {
    /// `ξ(z0) = 0`: constant solution.
    Critical,
    /// `ψ(z0) = 0`, not critical: `g₃ = 0` and `ż ∥ z`.
    ZeroEnergy,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub initial_class: OrbitClass,
    pub psi0: f64,
    pub f0: f64,
    pub fdot0: f64,
    /// `4F0³ − Ḟ0²`.
    pub g3: f64,
    /// `−9 δ ψ0²`, which must agree with `g3`.
    pub g3_from_discriminant: f64,
    /// Time of the next pole of `F` ahead of `t = 0`, if any.
    pub predicted_pole_forward: Option<f64>,
    /// Time (negative) of the nearest pole behind `t = 0`, if any.
    pub predicted_pole_backward: Option<f64>,
}

/// `Ḟ = F_q ψ_p − F_p ψ_q`, the derivative of `Δ` along the field.
pub fn f_dot<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> S {
    let (f_p, f_q) = delta_grad(c, z);
    let (psi_p, psi_q) = psi_grad(c, z);
    f_q * psi_p - f_p * psi_q
}

fn roundoff_scale(c: &CubicCoeffs<f64>, z: &PhasePoint<f64>, degree: i32) -> f64 {
    64.0 * f64::EPSILON * c.max_abs_f64() * z.norm_inf().powi(degree)
}

/// Classifies the orbit through `z0`, evaluates `g₃`, and predicts the
/// nearest poles of `F` in both time directions.
///
/// Exact inputs are evaluated exactly before conversion, so the critical and
/// zero-energy tests are decided without tolerance.
pub fn classify_initial<S: Scalar>(c: &CubicCoeffs<S>, z0: &PhasePoint<S>) -> OrbitReport {
    let field = hamiltonian_field(c, z0);
    let psi0 = psi_eval(c, z0);
    let f0 = delta(c, z0);
    let fd0 = f_dot(c, z0);
    let four = S::from_i64(4);
    let g3 = four * f0.cube() - fd0.square();
    let g3_disc = -(S::from_i64(9) * discriminant(c) * psi0.square());

    let (cf, zf) = (c.to_f64(), z0.to_f64());
    let field_tol = roundoff_scale(&cf, &zf, 2);
    let psi_tol = roundoff_scale(&cf, &zf, 3);
    let initial_class = if field.p.near_zero(field_tol) && field.q.near_zero(field_tol) {
        OrbitClass::Critical
    } else if psi0.near_zero(psi_tol) {
        OrbitClass::ZeroEnergy
    } else {
        OrbitClass::Generic
    };

    let (psi0, f0, fdot0, g3) = (psi0.to_f64(), f0.to_f64(), fd0.to_f64(), g3.to_f64());
    let (forward, backward) = if initial_class == OrbitClass::Critical {
        (None, None)
    } else {
        let params = WpParams::new(g3);
        let finite = |r: Result<f64, _>| r.ok().filter(|d: &f64| d.is_finite());
        (
            finite(pole_distance(params, f0, fdot0)),
            finite(pole_distance(params, f0, -fdot0)).map(|d| -d),
        )
    };
    OrbitReport {
        initial_class,
        psi0,
        f0,
        fdot0,
        g3,
        g3_from_discriminant: g3_disc.to_f64(),
        predicted_pole_forward: forward,
        predicted_pole_backward: backward,
    }
}

/// Fits `F(t) ≈ (t − t*)⁻²` to the tail by least squares on `F^{-1/2}`
/// against `t` and returns `t*`.
///
/// The tail is ordered towards the pole: `F` must be positive and strictly
/// increasing along the slice, and `t` strictly monotone.
pub fn estimate_blowup(tail: &[TrajectorySample]) -> Result<f64, DynamicsError> {
    if tail.len() < 3 {
        return Err(DynamicsError::TailTooShort(tail.len()));
    }
    let increasing = tail.windows(2).all(|w| w[1].f > w[0].f) && tail[0].f > 0.0;
    let monotone_t =
        tail.windows(2).all(|w| w[1].t > w[0].t) || tail.windows(2).all(|w| w[1].t < w[0].t);
    if !increasing || !monotone_t {
        return Err(DynamicsError::TailNotIncreasing);
    }
    // Centre on the last sample for conditioning.
    let t_ref = tail[tail.len() - 1].t;
    let xs: Vec<f64> = tail.iter().map(|s| s.t - t_ref).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.f.powf(-0.5)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(t_ref - intercept / slope)
}

const TAIL_LEN: usize = 8;

fn tail_estimate(samples: &[TrajectorySample]) -> f64 {
    let window = &samples[samples.len().saturating_sub(TAIL_LEN)..];
    // Longest suffix on which F is positive and increasing.
    let mut start = window.len() - 1;
    while start > 0 && window[start - 1].f > 0.0 && window[start - 1].f < window[start].f {
        start -= 1;
    }
    let fallback = samples[samples.len() - 1].t;
    estimate_blowup(&window[start..]).unwrap_or(fallback)
}

impl IntegratorConfig {
    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_points: self.max_samples,
        }
    }
}

/// The field as seen by the integrator, evaluated with compensated sums.
pub(crate) fn planar_field(c: SplitCoeffs) -> impl Fn(&[f64; 2]) -> [f64; 2] {
    move |y| compensated::field(&c, y)
}

/// Integrates the flow through `z0` forward and backward over `cfg.t_span`.
///
/// Exact coefficients are carried to about twice float precision, so a
/// monomial cubic with non-binary coefficients stays monomial to within
/// ~1e-32 instead of turning into a nearby incomplete cubic.
pub fn integrate<S: Scalar>(
    exact: &CubicCoeffs<S>,
    z0: &PhasePoint<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let split = exact.as_array().map(|x| x.split_f64());
    let cubic_residual = split.map(|(_, lo)| lo);
    let cf = exact.to_f64();
    let c = &cf;
    let report = classify_initial(c, z0);
    let (t0, t1) = cfg.t_span;

    if report.initial_class == OrbitClass::Critical {
        let mut times = vec![t0, 0.0, t1];
        times.dedup();
        let samples = times
            .into_iter()
            .map(|t| TrajectorySample::at(c, t, z0.clone()))
            .collect();
        return Ok(Trajectory {
            cubic: c.clone(),
            cubic_residual,
            z0: z0.clone(),
            samples,
            termination: Termination {
                forward: Outcome::SpanCompleted,
                backward: Outcome::SpanCompleted,
            },
            g3: report.g3,
            config: *cfg,
        });
    }

    let ctl = cfg.step_control();
    let field = planar_field(split);
    let escaped = |y: &[f64; 2]| y[0].abs().max(y[1].abs()) >= cfg.blowup_norm;
    let y0 = [z0.p, z0.q];

    let run_direction = |t_end: f64| -> Result<(Vec<TrajectorySample>, Outcome), DynamicsError> {
        let run = integrate_direction(&field, y0, t_end, &ctl, escaped);
        let samples: Vec<TrajectorySample> = run
            .points
            .iter()
            .map(|&(t, y)| TrajectorySample::at(c, t, PhasePoint::new(y[0], y[1])))
            .collect();
        let outcome = match run.stop {
            Stop::Reached => Outcome::SpanCompleted,
            Stop::Escaped => Outcome::BlowUp {
                t_est: tail_estimate(&samples),
            },
            Stop::Underflow { t } => Outcome::StepUnderflow { t },
            Stop::Budget => return Err(DynamicsError::SampleBudgetExceeded(cfg.max_samples)),
        };
        Ok((samples, outcome))
    };

    let (forward, fwd_outcome) = run_direction(t1)?;
    let (backward, bwd_outcome) = run_direction(t0)?;

    let mut samples: Vec<TrajectorySample> = backward.into_iter().skip(1).rev().collect();
    samples.extend(forward);

    Ok(Trajectory {
        cubic: c.clone(),
        cubic_residual,
        z0: z0.clone(),
        samples,
        termination: Termination {
            forward: fwd_outcome,
            backward: bwd_outcome,
        },
        g3: report.g3,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};

    fn cf(a: f64, b: f64, c: f64, d: f64) -> CubicCoeffs<f64> {
        CubicCoeffs::new(a, b, c, d)
    }

    // Γ(1/3)³/(4π)·108^{-1/6}, frozen with mpmath.
    const POLE_108: f64 = 0.701_091_052_662_727_1;

    #[test]
    fn f_dot_examples() {
        let z = PhasePoint::<Rational>::from_ints(1, 1);
        assert_eq!(f_dot(&CubicCoeffs::from_ints(1, 0, 0, -1), &z), int(2));
        assert_eq!(f_dot(&CubicCoeffs::from_ints(0, 1, 1, 0), &z), int(0));
        assert_eq!(
            f_dot(
                &CubicCoeffs::<Rational>::from_ints(4, 2, -7, 1),
                &PhasePoint::zero()
            ),
            int(0)
        );
    }

    #[test]
    fn f_dot_matches_factorisations() {
        // ψ = (p³ − q³)/3: Ḟ = p³ + q³.  ψ = p²q + pq²: Ḟ = (q − p)(2p + q)(p + 2q).
        for (p, q) in [(2, -3), (5, 1), (-4, 7)] {
            let z = PhasePoint::<Rational>::from_ints(p, q);
            assert_eq!(
                f_dot(&CubicCoeffs::from_ints(1, 0, 0, -1), &z),
                int(p * p * p + q * q * q)
            );
            assert_eq!(
                f_dot(&CubicCoeffs::from_ints(0, 1, 1, 0), &z),
                int((q - p) * (2 * p + q) * (p + 2 * q))
            );
        }
    }

    #[test]
    fn classify_initial_examples() {
        let r = classify_initial(
            &CubicCoeffs::<Rational>::from_ints(0, 1, 1, 0),
            &PhasePoint::from_ints(1, 1),
        );
        assert_eq!(r.initial_class, OrbitClass::Generic);
        assert_eq!((r.psi0, r.f0, r.fdot0, r.g3), (2.0, 3.0, 0.0, 108.0));
        assert_eq!(r.g3_from_discriminant, 108.0);
        let fwd = r.predicted_pole_forward.unwrap();
        assert!((fwd - POLE_108).abs() < 1e-12);
        assert!((fwd + r.predicted_pole_backward.unwrap()).abs() < 1e-9 * fwd);

        let r = classify_initial(
            &CubicCoeffs::<Rational>::from_ints(1, 0, 0, -1),
            &PhasePoint::from_ints(1, 1),
        );
        assert_eq!(r.initial_class, OrbitClass::ZeroEnergy);
        assert_eq!(r.g3, 0.0);
        // F = (t − 1)^{-2} with F0 = 1, Ḟ0 = 2: pole ahead at t = 1, none behind.
        assert_eq!(r.predicted_pole_forward, Some(1.0));
        assert_eq!(r.predicted_pole_backward, None);

        let r = classify_initial(
            &CubicCoeffs::<f64>::from_ints(3, 1, 4, 1),
            &PhasePoint::zero(),
        );
        assert_eq!(r.initial_class, OrbitClass::Critical);
        assert_eq!(r.predicted_pole_forward, None);
    }

    #[test]
    fn non_origin_critical_point() {
        // ψ = pq²: the p-axis is critical.
        let r = classify_initial(&cf(0.0, 0.0, 1.0, 0.0), &PhasePoint::new(2.5, 0.0));
        assert_eq!(r.initial_class, OrbitClass::Critical);
        let traj = integrate(
            &cf(0.0, 0.0, 1.0, 0.0),
            &PhasePoint::new(2.5, 0.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(traj
            .samples
            .iter()
            .all(|s| s.z == PhasePoint::new(2.5, 0.0)));
    }

    #[test]
    fn constant_trajectory_at_critical_point() {
        let traj = integrate(
            &cf(1.0, 0.0, 0.0, 0.0),
            &PhasePoint::new(0.0, 1.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(traj.termination.span_completed());
        assert_eq!(traj.samples.len(), 3);
        assert!(traj
            .samples
            .iter()
            .all(|s| s.z == PhasePoint::new(0.0, 1.0)));
    }

    #[test]
    fn monomial_orbit_is_affine() {
        let traj = integrate(
            &cf(1.0, 0.0, 0.0, 0.0),
            &PhasePoint::new(1.0, 0.0),
            &IntegratorConfig::symmetric(10.0),
        )
        .unwrap();
        assert!(traj.termination.span_completed());
        assert_eq!(traj.samples.first().unwrap().t, -10.0);
        assert_eq!(traj.samples.last().unwrap().t, 10.0);
        for s in &traj.samples {
            assert!(
                (s.z.p - 1.0).abs() < 1e-12 && (s.z.q - s.t).abs() < 1e-9,
                "{s:?}"
            );
        }
    }

    #[test]
    fn equianharmonic_orbit_blows_up_both_ways() {
        let traj = integrate(
            &cf(0.0, 1.0, 1.0, 0.0),
            &PhasePoint::new(1.0, 1.0),
            &IntegratorConfig::symmetric(2.0),
        )
        .unwrap();
        let fwd = traj.termination.forward.blow_up_time().unwrap();
        let bwd = traj.termination.backward.blow_up_time().unwrap();
        assert!((fwd - POLE_108).abs() < 1e-6, "{fwd}");
        assert!((bwd + POLE_108).abs() < 1e-6, "{bwd}");
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(traj.samples.last().unwrap().z.norm_inf() >= 1e8);
        assert!(traj.samples.first().unwrap().z.norm_inf() >= 1e8);
    }

    #[test]
    fn zero_energy_orbit_blows_up_forward_only() {
        // On the diagonal p = q: ṗ = p², p = 1/(1 − t).
        let traj = integrate(
            &cf(1.0, 0.0, 0.0, -1.0),
            &PhasePoint::new(1.0, 1.0),
            &IntegratorConfig::symmetric(5.0),
        )
        .unwrap();
        let fwd = traj.termination.forward.blow_up_time().unwrap();
        assert!((fwd - 1.0).abs() < 1e-7, "{fwd}");
        assert_eq!(traj.termination.backward, Outcome::SpanCompleted);
        let first = &traj.samples[0];
        assert!((first.z.p - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn estimate_blowup_examples() {
        let mk = |t: f64, f: f64| TrajectorySample {
            t,
            z: PhasePoint::new(0.0, 0.0),
            psi: 0.0,
            f,
            f_dot: 0.0,
        };
        let tail: Vec<_> = [0.90, 0.95, 0.99]
            .iter()
            .map(|&t| mk(t, (t - 1.0_f64).powi(-2)))
            .collect();
        let t_star = estimate_blowup(&tail).unwrap();
        assert!((t_star - 1.0).abs() < 1e-12, "{t_star}");

        // Backward approach towards t* = −2.
        let tail: Vec<_> = [-1.5, -1.9, -1.99, -1.999]
            .iter()
            .map(|&t| mk(t, (t + 2.0_f64).powi(-2)))
            .collect();
        assert!((estimate_blowup(&tail).unwrap() + 2.0).abs() < 1e-12);

        let flat: Vec<_> = (0..4).map(|i| mk(i as f64, 5.0)).collect();
        assert_eq!(
            estimate_blowup(&flat),
            Err(DynamicsError::TailNotIncreasing)
        );
        assert_eq!(
            estimate_blowup(&flat[..2]),
            Err(DynamicsError::TailTooShort(2))
        );
        let negative: Vec<_> = (0..4).map(|i| mk(i as f64, -5.0 + i as f64)).collect();
        assert_eq!(
            estimate_blowup(&negative),
            Err(DynamicsError::TailNotIncreasing)
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = IntegratorConfig::default();
        cfg.t_span = (0.5, 1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = IntegratorConfig::default();
        cfg.rel_tol = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = IntegratorConfig::default();
        cfg.blowup_norm = -1.0;
        assert!(cfg.validate().is_err());
        assert!(IntegratorConfig::default().validate().is_ok());
    }

    #[test]
    fn sample_budget_is_an_error() {
        let cfg = IntegratorConfig {
            max_samples: 5,
            ..IntegratorConfig::symmetric(10.0)
        };
        let r = integrate(&cf(1.0, 0.0, 0.0, 0.0), &PhasePoint::new(1.0, 0.0), &cfg);
        assert_eq!(r, Err(DynamicsError::SampleBudgetExceeded(5)));
    }
}
