//! Residuals of the identities satisfied along an integral curve.

use std::collections::BTreeMap;

use serde::Serialize;

use super::integrator::march_grid;
use super::{planar_field, DynamicsError, Trajectory};
use crate::algebra::{
    delta, discriminant, hamiltonian_field, omega, psi_eval, CubicCoeffs, PhasePoint,
};

/// Grid step of the uniform resampling, as a fraction of the covered span.
pub const GRID_FRACTION: f64 = 1e-3;

/// Sixth-order centred stencil for the second derivative.
const D2_STENCIL: [f64; 7] = [
    1.0 / 90.0,
    -3.0 / 20.0,
    3.0 / 2.0,
    -49.0 / 18.0,
    3.0 / 2.0,
    -3.0 / 20.0,
    1.0 / 90.0,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// (E) `max |ψ(z_t) − ψ(z₀)|` over samples.
    pub energy: f64,
    /// (A) `max ‖z̈ − 2Fz‖∞` on the interior of the uniform grid.
    pub second_order_z: f64,
    /// (B) `max |F̈ − 6F²|` on the interior of the uniform grid.
    pub second_order_f: f64,
    /// (C) `max |Ḟ² − 4F³ + g₃|` over samples, `Ḟ` analytic.
    pub first_integral: f64,
    /// (D) `|g₃ + 9δψ₀²|`.
    pub g3_identity: f64,
    /// Grid step used for (A) and (B).
    pub grid_step: f64,
}

impl ResidualReport {
    pub fn as_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("energy", self.energy),
            ("second_order_z", self.second_order_z),
            ("second_order_f", self.second_order_f),
            ("first_integral", self.first_integral),
            ("g3_identity", self.g3_identity),
        ])
    }
}

/// Samples the orbit on the uniform grid `t = k·step` (anchored at `t = 0`)
/// covering the sampled span. Every node is reached by the integrator itself
/// with the trajectory's tolerances, so no interpolation error enters the
/// finite differences.
pub fn resample_uniform(traj: &Trajectory, step: f64) -> Vec<(f64, PhasePoint<f64>)> {
    let s = &traj.samples;
    let (t_lo, t_hi) = (s[0].t, s[s.len() - 1].t);
    // Nodes within a rounding margin of the span ends are kept.
    let count = |len: f64| (len / step * (1.0 + 1e-12)).floor().max(0.0) as usize;
    let ctl = traj.config.step_control();
    let y0 = [traj.z0.p, traj.z0.q];
    let c = &traj.cubic;
    let r = &traj.cubic_residual;
    let field = planar_field([(c.a, r[0]), (c.b, r[1]), (c.c, r[2]), (c.d, r[3])]);
    let forward = march_grid(&field, y0, step, count(t_hi), &ctl);
    let backward = march_grid(&field, y0, -step, count(-t_lo), &ctl);
    let node = |k: isize, y: &[f64; 2]| (k as f64 * step, PhasePoint::new(y[0], y[1]));
    let mut out: Vec<_> = backward
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .map(|(k, y)| node(-(k as isize), y))
        .collect();
    out.extend(forward.iter().enumerate().map(|(k, y)| node(k as isize, y)));
    out
}

fn second_difference(values: &[f64], i: usize, h: f64) -> f64 {
    D2_STENCIL
        .iter()
        .enumerate()
        .map(|(k, w)| w * values[i + k - 3])
        .sum::<f64>()
        / (h * h)
}

/// Residuals (E), (A), (B), (C), (D) along `traj`.
pub fn residual_report(traj: &Trajectory) -> Result<ResidualReport, DynamicsError> {
    const MIN_SAMPLES: usize = 5;
    if traj.samples.len() < MIN_SAMPLES {
        return Err(DynamicsError::TooFewSamples {
            needed: MIN_SAMPLES,
            got: traj.samples.len(),
        });
    }
    let c = &traj.cubic;
    let psi0 = psi_eval(c, &traj.z0);
    let g3 = traj.g3;

    let energy = traj
        .samples
        .iter()
        .map(|s| (s.psi - psi0).abs())
        .fold(0.0, f64::max);
    let first_integral = traj
        .samples
        .iter()
        .map(|s| (s.f_dot * s.f_dot - 4.0 * s.f.powi(3) + g3).abs())
        .fold(0.0, f64::max);
    let g3_identity = (g3 + 9.0 * discriminant(c) * psi0 * psi0).abs();

    let span = traj.samples[traj.samples.len() - 1].t - traj.samples[0].t;
    let grid = resample_uniform(traj, GRID_FRACTION * span);
    let h = GRID_FRACTION * span;
    let ps: Vec<f64> = grid.iter().map(|(_, z)| z.p).collect();
    let qs: Vec<f64> = grid.iter().map(|(_, z)| z.q).collect();
    let fs: Vec<f64> = grid.iter().map(|(_, z)| delta(c, z)).collect();
    let mut second_order_z = 0.0_f64;
    let mut second_order_f = 0.0_f64;
    for i in 3..grid.len().saturating_sub(3) {
        let f = fs[i];
        let rp = second_difference(&ps, i, h) - 2.0 * f * ps[i];
        let rq = second_difference(&qs, i, h) - 2.0 * f * qs[i];
        second_order_z = second_order_z.max(rp.abs().max(rq.abs()));
        second_order_f = second_order_f.max((second_difference(&fs, i, h) - 6.0 * f * f).abs());
    }

    Ok(ResidualReport {
        energy,
        second_order_z,
        second_order_f,
        first_integral,
        g3_identity,
        grid_step: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroEnergyResiduals {
    /// `max |Ω(z, ż)|`; equals `3 max |ψ(z)|`.
    pub parallelism: f64,
    /// `max |λ² − F|` with `λ = ⟨ż, z⟩ / ⟨z, z⟩`.
    pub lambda: f64,
}

/// Checks `ż = λz` with `λ̇ = F = λ²` along a zero-energy orbit.
pub fn zero_energy_check(
    c: &CubicCoeffs<f64>,
    traj: &Trajectory,
) -> Result<ZeroEnergyResiduals, DynamicsError> {
    let z0 = &traj.z0;
    if z0.p == 0.0 && z0.q == 0.0 {
        return Err(DynamicsError::ZeroInitialPoint);
    }
    let psi0 = psi_eval(c, z0);
    let tol = 64.0 * f64::EPSILON * c.max_abs_f64() * z0.norm_inf().powi(3);
    if psi0.abs() > tol {
        return Err(DynamicsError::NotZeroEnergy(psi0));
    }
    let mut out = ZeroEnergyResiduals {
        parallelism: 0.0,
        lambda: 0.0,
    };
    for s in &traj.samples {
        let v = hamiltonian_field(c, &s.z);
        out.parallelism = out.parallelism.max(omega(&s.z, &v).abs());
        let lambda = v.dot(&s.z) / s.z.dot(&s.z);
        out.lambda = out.lambda.max((lambda * lambda - delta(c, &s.z)).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig};

    #[test]
    fn affine_monomial_residuals_vanish() {
        let c = CubicCoeffs::new(1.0, 0.0, 0.0, 0.0);
        let traj = integrate(
            &c,
            &PhasePoint::new(1.0, 0.0),
            &IntegratorConfig::symmetric(10.0),
        )
        .unwrap();
        let r = residual_report(&traj).unwrap();
        for (name, v) in r.as_map() {
            assert!(v <= 1e-9, "{name} = {v}");
        }
        assert_eq!(traj.g3, 0.0);
    }

    #[test]
    fn equianharmonic_g3_identity() {
        let c = CubicCoeffs::new(0.0, 1.0, 1.0, 0.0);
        let cfg = IntegratorConfig {
            t_span: (0.0, 0.6),
            ..IntegratorConfig::default()
        };
        let traj = integrate(&c, &PhasePoint::new(1.0, 1.0), &cfg).unwrap();
        let r = residual_report(&traj).unwrap();
        assert!(r.g3_identity <= 1e-8 * 108.0, "{r:?}");
    }

    #[test]
    fn equianharmonic_second_order_residuals() {
        let c = CubicCoeffs::new(0.0, 1.0, 1.0, 0.0);
        let cfg = IntegratorConfig {
            t_span: (-0.6, 0.6),
            ..IntegratorConfig::default()
        };
        let traj = integrate(&c, &PhasePoint::new(1.0, 1.0), &cfg).unwrap();
        let r = residual_report(&traj).unwrap();
        assert!(r.energy <= 1e-8 && r.first_integral <= 1.08e-4, "{r:?}");
        assert!(
            r.second_order_z <= 1e-4 && r.second_order_f <= 1e-4,
            "{r:?}"
        );
    }

    #[test]
    fn uniform_grid_is_anchored_at_zero() {
        let c = CubicCoeffs::new(0.0, 1.0, 1.0, 0.0);
        let cfg = IntegratorConfig {
            t_span: (-0.25, 0.5),
            ..IntegratorConfig::default()
        };
        let traj = integrate(&c, &PhasePoint::new(1.0, 1.0), &cfg).unwrap();
        let grid = resample_uniform(&traj, 0.05);
        assert_eq!(grid.len(), 16);
        assert!((grid[0].0 + 0.25).abs() < 1e-12 && (grid[15].0 - 0.5).abs() < 1e-12);
        assert_eq!(grid[5].1, traj.z0);
    }

    #[test]
    fn too_few_samples() {
        let c = CubicCoeffs::new(1.0, 0.0, 0.0, 0.0);
        let traj = integrate(&c, &PhasePoint::new(0.0, 1.0), &IntegratorConfig::default()).unwrap();
        assert!(matches!(
            residual_report(&traj),
            Err(DynamicsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn zero_energy_examples() {
        let c = CubicCoeffs::new(1.0, 0.0, 0.0, -1.0);
        let cfg = IntegratorConfig {
            t_span: (-10.0, 0.9),
            ..IntegratorConfig::default()
        };
        for (z0, t_end) in [((1.0, 1.0), 0.9), ((2.0, 2.0), 0.45)] {
            let cfg = IntegratorConfig {
                t_span: (-10.0, t_end),
                ..cfg
            };
            let traj = integrate(&c, &PhasePoint::new(z0.0, z0.1), &cfg).unwrap();
            let r = zero_energy_check(&c, &traj).unwrap();
            assert!(r.parallelism <= 1e-9 && r.lambda <= 1e-7, "{r:?}");
        }

        let c = CubicCoeffs::new(0.0, 1.0, 1.0, 0.0);
        let traj = integrate(
            &c,
            &PhasePoint::new(1.0, 1.0),
            &IntegratorConfig::symmetric(0.3),
        )
        .unwrap();
        assert_eq!(
            zero_energy_check(&c, &traj),
            Err(DynamicsError::NotZeroEnergy(2.0))
        );
    }
}
