//! Equianharmonic Weierstrass ℘ (`g₂ = 0`) on the real axis.
//!
//! Along an integral curve the scalar `F = Δ∘z` obeys `(Ḟ)² = 4F³ − g₃`,
//! so every non-zero `F` is a real shift of `℘(·; 0, g₃)` (or `(t − a)⁻²`
//! when `g₃ = 0`). This module evaluates ℘ independently of the flow
//! integrator and predicts the time to the next double pole from `(F, Ḟ)`.

pub mod quadrature;

use thiserror::Error;

use quadrature::QuadError;

/// Relative accuracy requested from the pole-distance quadratures.
const QUAD_REL_TOL: f64 = 1e-14;
/// Fraction of the half-period inside which the Laurent series is summed directly.
const SERIES_FRACTION: f64 = 0.4;
/// Arguments beyond this many real periods are rejected (argument reduction
/// would lose most significant digits).
const HORIZON_PERIODS: f64 = 1e6;
/// Relative mismatch tolerated in `Ḟ² = 4F³ − g₃` for pole prediction.
const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EllipticError {
    #[error("℘ has a pole at t = {0}")]
    PoleAt(f64),
    #[error("|t| = {t} exceeds the evaluation horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("g3 = 0 has no period lattice")]
    NoLattice,
    #[error("inconsistent initial data: Ḟ² − (4F³ − g₃) = {residual:e}")]
    InconsistentData { residual: f64 },
    #[error("F0 = {f0} lies below the real root e1 = {e1}")]
    BelowRealRoot { f0: f64, e1: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Invariants of the lattice; `g₂` is identically zero here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpParams {
    pub g3: f64,
}

impl WpParams {
    pub fn new(g3: f64) -> Self {
        Self { g3 }
    }

    /// Real root `e₁ = (g₃/4)^{1/3}` of `4e³ − g₃`.
    pub fn real_root(&self) -> f64 {
        (self.g3 / 4.0).cbrt()
    }
}

/// `∫_{f0}^{∞} dF / √(4F³ − g₃)` for `f0 ≥ e₁`.
///
/// Near infinity the substitution `u = F^{-1/2}` gives `2 du / √(4 − g₃u⁶)`;
/// near `e₁` the substitution `F = e₁ + s²` gives `ds / √(F² + Fe₁ + e₁²)`.
/// Both integrands are smooth on their ranges.
fn tail_integral(g3: f64, f0: f64) -> Result<f64, EllipticError> {
    let e1 = (g3 / 4.0).cbrt();
    if g3 == 0.0 {
        return Ok(if f0 > 0.0 {
            f0.powf(-0.5)
        } else {
            f64::INFINITY
        });
    }
    let f_split = 2.0 * e1.abs();
    let near_infinity = |u_max: f64| {
        quadrature::integrate(
            |u| 2.0 / (4.0 - g3 * u.powi(6)).sqrt(),
            0.0,
            u_max,
            0.0,
            QUAD_REL_TOL,
        )
    };
    if f0 >= f_split {
        return Ok(near_infinity(f0.powf(-0.5))?.value);
    }
    let near_root = quadrature::integrate(
        |s| {
            let f = e1 + s * s;
            1.0 / (f * f + f * e1 + e1 * e1).sqrt()
        },
        (f0 - e1).max(0.0).sqrt(),
        (f_split - e1).sqrt(),
        0.0,
        QUAD_REL_TOL,
    )?;
    Ok(near_root.value + near_infinity(f_split.powf(-0.5))?.value)
}

/// Real half-period `ω = ∫_{e₁}^{∞} dF / √(4F³ − g₃)`.
///
/// The real period of `℘(·; 0, g₃)` is `2ω`; `ω(g₃) = ω(sign g₃)·|g₃|^{-1/6}`.
pub fn half_period(g3: f64) -> Result<f64, EllipticError> {
    if !g3.is_finite() {
        return Err(EllipticError::NonFinite);
    }
    if g3 == 0.0 {
        return Err(EllipticError::NoLattice);
    }
    tail_integral(g3, WpParams::new(g3).real_root())
}

/// Forward time from `F(0) = f0`, `Ḟ(0) = fdot0` to the next pole of `F`,
/// or `+∞` when `F` decays to zero without one.
///
/// * `Ḟ > 0`: `∫_{F0}^{∞}`.
/// * `Ḟ ≤ 0`, `g₃ ≠ 0`: `F` first descends to `e₁`, then climbs:
///   `∫_{e₁}^{F0} + ∫_{e₁}^{∞}`.
/// * `Ḟ ≤ 0`, `g₃ = 0`: `F = (t − a)⁻²` with the pole behind, or `F ≡ 0`.
pub fn pole_distance(params: WpParams, f0: f64, fdot0: f64) -> Result<f64, EllipticError> {
    let g3 = params.g3;
    if !(g3.is_finite() && f0.is_finite() && fdot0.is_finite()) {
        return Err(EllipticError::NonFinite);
    }
    let residual = fdot0 * fdot0 - (4.0 * f0.powi(3) - g3);
    let scale = 1f64
        .max(4.0 * f0.abs().powi(3))
        .max(g3.abs())
        .max(fdot0 * fdot0);
    if residual.abs() > CONSISTENCY_TOL * scale {
        return Err(EllipticError::InconsistentData { residual });
    }
    let e1 = params.real_root();
    if f0 < e1 - CONSISTENCY_TOL * e1.abs().max(1.0) {
        return Err(EllipticError::BelowRealRoot { f0, e1 });
    }
    let f0 = f0.max(e1);
    if g3 == 0.0 {
        return Ok(if fdot0 > 0.0 && f0 > 0.0 {
            f0.powf(-0.5)
        } else {
            f64::INFINITY
        });
    }
    if fdot0 > 0.0 {
        tail_integral(g3, f0)
    } else {
        let omega = tail_integral(g3, e1)?;
        Ok(2.0 * omega - tail_integral(g3, f0)?)
    }
}

/// `℘(·; 0, g₃)` with precomputed Laurent coefficients and half-period.
#[derive(Debug, Clone)]
pub struct Weierstrass {
    g3: f64,
    /// `(exponent, coefficient)` pairs of `Σ c_k t^{2k−2}`, `k ≥ 3`.
    series: Vec<(i32, f64)>,
    half_period: Option<f64>,
}

impl Weierstrass {
    pub fn new(params: WpParams) -> Result<Self, EllipticError> {
        let g3 = params.g3;
        if !g3.is_finite() {
            return Err(EllipticError::NonFinite);
        }
        if g3 == 0.0 {
            return Ok(Self {
                g3,
                series: Vec::new(),
                half_period: None,
            });
        }
        let omega = half_period(g3)?;
        let radius = SERIES_FRACTION * omega;
        // c_2 = g2/20 = 0, c_3 = g3/28,
        // c_k = 3/((2k+1)(k−3)) Σ_{m=2}^{k−2} c_m c_{k−m}.
        let mut c = vec![0.0_f64; 4];
        c[3] = g3 / 28.0;
        let mut series = vec![(4, c[3])];
        let lead = radius.powi(-2);
        for k in 4.. {
            let sum: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
            let ck = 3.0 / (((2 * k + 1) * (k - 3)) as f64) * sum;
            c.push(ck);
            let exponent = 2 * k as i32 - 2;
            if ck != 0.0 {
                series.push((exponent, ck));
            }
            let bound = ck.abs() * radius.powi(exponent);
            if (ck != 0.0 && bound < 1e-17 * lead) || k > 200 {
                break;
            }
        }
        Ok(Self {
            g3,
            series,
            half_period: Some(omega),
        })
    }

    pub fn g3(&self) -> f64 {
        self.g3
    }

    pub fn half_period(&self) -> Option<f64> {
        self.half_period
    }

    /// Largest `|t|` at which the Laurent series is summed directly.
    pub fn series_radius(&self) -> f64 {
        self.half_period
            .map(|w| SERIES_FRACTION * w)
            .unwrap_or(f64::INFINITY)
    }

    fn series_value(&self, t: f64) -> f64 {
        let t2 = t * t;
        let tail: f64 = self.series.iter().map(|&(e, c)| c * t.powi(e)).sum();
        1.0 / t2 + tail
    }

    /// `(℘(t), ℘'(t))` from the series and its term-wise derivative.
    /// Valid for `0 < |t| ≤ series_radius()`.
    pub fn series_with_derivative(&self, t: f64) -> Result<(f64, f64), EllipticError> {
        if t == 0.0 {
            return Err(EllipticError::PoleAt(t));
        }
        let radius = self.series_radius();
        if t.abs() > radius {
            return Err(EllipticError::HorizonExceeded { t, horizon: radius });
        }
        let d_tail: f64 = self
            .series
            .iter()
            .map(|&(e, c)| c * e as f64 * t.powi(e - 1))
            .sum();
        Ok((self.series_value(t), -2.0 / t.powi(3) + d_tail))
    }

    /// `℘(t; 0, g₃)` for real `t`.
    ///
    /// `t` is reduced modulo the real period `2ω`, halved until it falls in
    /// the series range, and the duplication formula
    /// `℘(2u) = −2℘(u) + 9℘(u)⁴ / (4℘(u)³ − g₃)` is applied back up.
    pub fn eval(&self, t: f64) -> Result<f64, EllipticError> {
        if !t.is_finite() {
            return Err(EllipticError::NonFinite);
        }
        if t == 0.0 {
            return Err(EllipticError::PoleAt(t));
        }
        let Some(omega) = self.half_period else {
            return Ok(1.0 / (t * t));
        };
        let period = 2.0 * omega;
        let horizon = HORIZON_PERIODS * period;
        if t.abs() > horizon {
            return Err(EllipticError::HorizonExceeded { t, horizon });
        }
        let reduced = t - period * (t / period).round();
        if reduced == 0.0 {
            return Err(EllipticError::PoleAt(t));
        }
        let radius = self.series_radius();
        let mut u = reduced;
        let mut doublings = 0;
        while u.abs() > radius {
            u *= 0.5;
            doublings += 1;
        }
        let mut wp = self.series_value(u);
        for _ in 0..doublings {
            let w3 = wp * wp * wp;
            wp = -2.0 * wp + 9.0 * w3 * wp / (4.0 * w3 - self.g3);
        }
        Ok(wp)
    }
}

/// One-shot `℘(t; 0, g₃)`.
pub fn wp_eval(params: WpParams, t: f64) -> Result<f64, EllipticError> {
    Weierstrass::new(params)?.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen with mpmath (30 digits): Γ(1/3)³/(4π) and direct quadrature
    // ∫_{e1}^∞ dF/√(4F³ − g₃) agree to all printed digits.
    const OMEGA_1: f64 = 1.529_954_037_057_192_9;
    const OMEGA_108: f64 = 0.701_091_052_662_727_1;
    const OMEGA_MINUS_1: f64 = 2.649_958_125_428_175;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn wp_examples() {
        assert_eq!(wp_eval(WpParams::new(0.0), 0.5).unwrap(), 4.0);
        let v = wp_eval(WpParams::new(1.0), 0.1).unwrap();
        assert!((v - 100.000_003_571_428_57).abs() < 1e-11, "{v}");
        let wp = Weierstrass::new(WpParams::new(1.0)).unwrap();
        let at_half = wp.eval(wp.half_period().unwrap()).unwrap();
        assert!(
            (at_half - 0.629_960_524_947_436_6).abs() < 1e-10,
            "{at_half}"
        );
    }

    #[test]
    fn wp_errors() {
        assert_eq!(
            wp_eval(WpParams::new(1.0), 0.0),
            Err(EllipticError::PoleAt(0.0))
        );
        let wp = Weierstrass::new(WpParams::new(1.0)).unwrap();
        assert!(matches!(
            wp.eval(1e12),
            Err(EllipticError::HorizonExceeded { .. })
        ));
        assert!(matches!(
            wp.series_with_derivative(1.0),
            Err(EllipticError::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn wp_is_even_and_periodic() {
        let wp = Weierstrass::new(WpParams::new(3.0)).unwrap();
        let period = 2.0 * wp.half_period().unwrap();
        for &t in &[0.13, 0.7, 1.1] {
            let v = wp.eval(t).unwrap();
            assert!(close(wp.eval(-t).unwrap(), v, 1e-13));
            assert!(close(wp.eval(t + period).unwrap(), v, 1e-9));
        }
    }

    #[test]
    fn half_period_examples() {
        assert!((half_period(1.0).unwrap() - 1.529_954_037_0).abs() < 1e-8);
        assert!(close(half_period(1.0).unwrap(), OMEGA_1, 1e-13));
        assert!(close(half_period(108.0).unwrap(), OMEGA_108, 1e-13));
        assert!(close(half_period(64.0).unwrap(), OMEGA_1 / 2.0, 1e-13));
        assert!(close(half_period(-1.0).unwrap(), OMEGA_MINUS_1, 1e-13));
        assert_eq!(half_period(0.0), Err(EllipticError::NoLattice));
    }

    #[test]
    fn pole_distance_examples() {
        let d = pole_distance(WpParams::new(0.0), 4.0, 16.0).unwrap();
        assert!(close(d, 0.5, 1e-15));
        let d = pole_distance(WpParams::new(108.0), 3.0, 0.0).unwrap();
        assert!(close(d, OMEGA_108, 1e-12), "{d}");
        assert_eq!(
            pole_distance(WpParams::new(0.0), 1.0, -2.0).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            pole_distance(WpParams::new(0.0), 0.0, 0.0).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn pole_distance_errors() {
        assert!(matches!(
            pole_distance(WpParams::new(0.0), 1.0, 5.0),
            Err(EllipticError::InconsistentData { .. })
        ));
        // e1 = 1 for g3 = 4; F0 = 0.5 gives 4F0³ − g3 < 0.
        assert!(pole_distance(WpParams::new(4.0), 0.5, 0.0).is_err());
    }

    #[test]
    fn pole_distance_branches_match_wp() {
        // F(t) = ℘(t − a) with a = −0.3: at t = 0 F is decreasing, so the next
        // pole is at t = 2ω − 0.3.
        let g3 = 2.5;
        let wp = Weierstrass::new(WpParams::new(g3)).unwrap();
        let omega = wp.half_period().unwrap();
        let f0 = wp.eval(0.3).unwrap();
        let fdot_sq = 4.0 * f0.powi(3) - g3;
        let down = pole_distance(WpParams::new(g3), f0, -fdot_sq.sqrt()).unwrap();
        assert!(close(down, 2.0 * omega - 0.3, 1e-11), "{down}");
        let up = pole_distance(WpParams::new(g3), f0, fdot_sq.sqrt()).unwrap();
        assert!(close(up, 0.3, 1e-11), "{up}");
    }

    #[test]
    fn negative_g3_crosses_zero() {
        let g3 = -5.0;
        let wp = Weierstrass::new(WpParams::new(g3)).unwrap();
        let omega = wp.half_period().unwrap();
        let e1 = WpParams::new(g3).real_root();
        assert!(close(wp.eval(omega).unwrap(), e1, 1e-10));
        let t = 0.9 * omega;
        let f0 = wp.eval(t).unwrap();
        assert!(f0 < 0.0);
        let fdot = -(4.0 * f0.powi(3) - g3).sqrt();
        let d = pole_distance(WpParams::new(g3), f0, fdot).unwrap();
        assert!(close(d, 2.0 * omega - t, 1e-11), "{d}");
    }
}
