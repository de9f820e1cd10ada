//! Pointwise constructions for a homogeneous cubic on the symplectic plane.
//!
//! Coordinates are taken in a fixed symplectic basis `(u, v)` with
//! `Ω(u, v) = 1`, so `Ω(x, y) = x.p·y.q − x.q·y.p`. A cubic is stored by the
//! four coefficients of
//!
//! ```text
//! ψ(p, q) = (a p³ + 3b p²q + 3c pq² + d q³) / 3
//! ```
//!
//! and its symmetric map `z ↦ Γ_z` is the traceless matrix with
//! `Ψ(x, y, z) = 2 Ω(x, Γ_z y)`, where `Ψ` is the full polarization of `ψ`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("classification requires exact (rational) coefficients")]
    InexactRegime,
    #[error("cubic is not a monomial: b² = ac, c² = bd, bc = ad fail")]
    NotMonomial,
}

/// Coefficients `(a, b, c, d)` of `ψ = (a p³ + 3b p²q + 3c pq² + d q³)/3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicCoeffs<S> {
    pub a: S,
    pub b: S,
    pub c: S,
    pub d: S,
}

impl<S: Scalar> CubicCoeffs<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(
            S::from_i64(a),
            S::from_i64(b),
            S::from_i64(c),
            S::from_i64(d),
        )
    }

    pub fn is_zero(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .all(|x| x.is_zero())
    }

    pub fn to_f64(&self) -> CubicCoeffs<f64> {
        CubicCoeffs::new(
            self.a.to_f64(),
            self.b.to_f64(),
            self.c.to_f64(),
            self.d.to_f64(),
        )
    }

    pub fn as_array(&self) -> [S; 4] {
        [
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.d.clone(),
        ]
    }

    /// Largest coefficient magnitude, as a float. Used to scale float tolerances.
    pub fn max_abs_f64(&self) -> f64 {
        self.as_array()
            .iter()
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// A point `z = p u + q v`; also used for velocities and monomial weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint<S> {
    pub p: S,
    pub q: S,
}

impl<S: Scalar> PhasePoint<S> {
    pub fn new(p: S, q: S) -> Self {
        Self { p, q }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn from_ints(p: i64, q: i64) -> Self {
        Self::new(S::from_i64(p), S::from_i64(q))
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.p.clone() + other.p.clone(),
            self.q.clone() + other.q.clone(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.p.clone() - other.p.clone(),
            self.q.clone() - other.q.clone(),
        )
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::new(s.clone() * self.p.clone(), s.clone() * self.q.clone())
    }

    /// Euclidean inner product in the fixed basis.
    pub fn dot(&self, other: &Self) -> S {
        self.p.clone() * other.p.clone() + self.q.clone() * other.q.clone()
    }

    pub fn to_f64(&self) -> PhasePoint<f64> {
        PhasePoint::new(self.p.to_f64(), self.q.to_f64())
    }
}

impl PhasePoint<f64> {
    pub fn norm_inf(&self) -> f64 {
        self.p.abs().max(self.q.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}

/// The symplectic form `Ω(x, y) = x.p·y.q − x.q·y.p`.
pub fn omega<S: Scalar>(x: &PhasePoint<S>, y: &PhasePoint<S>) -> S {
    x.p.clone() * y.q.clone() - x.q.clone() * y.p.clone()
}

/// 2×2 matrix acting on column vectors `(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mat2<S> {
    pub m00: S,
    pub m01: S,
    pub m10: S,
    pub m11: S,
}

impl<S: Scalar> Mat2<S> {
    pub fn new(m00: S, m01: S, m10: S, m11: S) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn identity() -> Self {
        Self::new(S::one(), S::zero(), S::zero(), S::one())
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero(), S::zero())
    }

    pub fn apply(&self, v: &PhasePoint<S>) -> PhasePoint<S> {
        PhasePoint::new(
            self.m00.clone() * v.p.clone() + self.m01.clone() * v.q.clone(),
            self.m10.clone() * v.p.clone() + self.m11.clone() * v.q.clone(),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let e = |a: &S, b: &S, c: &S, d: &S| a.clone() * b.clone() + c.clone() * d.clone();
        Self::new(
            e(&self.m00, &o.m00, &self.m01, &o.m10),
            e(&self.m00, &o.m01, &self.m01, &o.m11),
            e(&self.m10, &o.m00, &self.m11, &o.m10),
            e(&self.m10, &o.m01, &self.m11, &o.m11),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.m00.clone() + o.m00.clone(),
            self.m01.clone() + o.m01.clone(),
            self.m10.clone() + o.m10.clone(),
            self.m11.clone() + o.m11.clone(),
        )
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::new(
            s.clone() * self.m00.clone(),
            s.clone() * self.m01.clone(),
            s.clone() * self.m10.clone(),
            s.clone() * self.m11.clone(),
        )
    }

    pub fn trace(&self) -> S {
        self.m00.clone() + self.m11.clone()
    }

    pub fn det(&self) -> S {
        self.m00.clone() * self.m11.clone() - self.m01.clone() * self.m10.clone()
    }
}

/// `ψ(z) = (a p³ + 3b p²q + 3c pq² + d q³) / 3`.
pub fn psi_eval<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> S {
    let three = S::from_i64(3);
    let (p, q) = (&z.p, &z.q);
    let poly = c.a.clone() * p.cube()
        + three.clone() * c.b.clone() * p.square() * q.clone()
        + three.clone() * c.c.clone() * p.clone() * q.square()
        + c.d.clone() * q.cube();
    poly / three
}

/// `(ψ_p, ψ_q) = (a p² + 2b pq + c q², b p² + 2c pq + d q²)`.
pub fn psi_grad<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> (S, S) {
    let two = S::from_i64(2);
    let (p, q) = (&z.p, &z.q);
    let pq = p.clone() * q.clone();
    let psi_p = c.a.clone() * p.square()
        + two.clone() * c.b.clone() * pq.clone()
        + c.c.clone() * q.square();
    let psi_q = c.b.clone() * p.square() + two * c.c.clone() * pq + c.d.clone() * q.square();
    (psi_p, psi_q)
}

/// Second partials `(ψ_pp, ψ_pq, ψ_qq) = 2(ap + bq, bp + cq, cp + dq)`.
pub fn psi_hessian<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> (S, S, S) {
    let two = S::from_i64(2);
    let (a_, b_, c_) = gamma_entries(c, z);
    (two.clone() * a_, two.clone() * b_, two * c_)
}

// (ap + bq, bp + cq, cp + dq)
fn gamma_entries<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> (S, S, S) {
    let (p, q) = (&z.p, &z.q);
    (
        c.a.clone() * p.clone() + c.b.clone() * q.clone(),
        c.b.clone() * p.clone() + c.c.clone() * q.clone(),
        c.c.clone() * p.clone() + c.d.clone() * q.clone(),
    )
}

/// Full polarization `Ψ(x, y, z)` by inclusion–exclusion.
pub fn trilinear<S: Scalar>(
    c: &CubicCoeffs<S>,
    x: &PhasePoint<S>,
    y: &PhasePoint<S>,
    z: &PhasePoint<S>,
) -> S {
    let psi = |v: &PhasePoint<S>| psi_eval(c, v);
    psi(&x.add(y).add(z)) - (psi(&y.add(z)) + psi(&z.add(x)) + psi(&x.add(y)))
        + psi(x)
        + psi(y)
        + psi(z)
}

/// `Γ_z = [[−(bp+cq), −(cp+dq)], [ap+bq, bp+cq]]`.
///
/// This is `J⁻¹ H / 2` with `H` the Hessian of `ψ` and `J` the matrix of `Ω`,
/// so `2 Ω(x, Γ_z y) = Hess ψ(z)(x, y) = Ψ(x, y, z)`.
pub fn gamma<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> Mat2<S> {
    let (ap_bq, bp_cq, cp_dq) = gamma_entries(c, z);
    Mat2::new(-bp_cq.clone(), -cp_dq, ap_bq, bp_cq)
}

/// Hamiltonian vector field `ξ(z) = (−ψ_q, ψ_p) = Γ_z z`.
pub fn hamiltonian_field<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> PhasePoint<S> {
    let (psi_p, psi_q) = psi_grad(c, z);
    PhasePoint::new(-psi_q, psi_p)
}

/// Coefficients `(b² − ac, bc − ad, c² − bd)` of the quadratic `Δ`.
pub fn delta_coeffs<S: Scalar>(c: &CubicCoeffs<S>) -> (S, S, S) {
    (
        c.b.square() - c.a.clone() * c.c.clone(),
        c.b.clone() * c.c.clone() - c.a.clone() * c.d.clone(),
        c.c.square() - c.b.clone() * c.d.clone(),
    )
}

/// `Δ(z) = −det Γ_z = (b² − ac)p² + (bc − ad)pq + (c² − bd)q²`.
pub fn delta<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> S {
    let (k0, k1, k2) = delta_coeffs(c);
    k0 * z.p.square() + k1 * z.p.clone() * z.q.clone() + k2 * z.q.square()
}

/// Gradient `(F_p, F_q)` of the quadratic `Δ`.
pub fn delta_grad<S: Scalar>(c: &CubicCoeffs<S>, z: &PhasePoint<S>) -> (S, S) {
    let two = S::from_i64(2);
    let (k0, k1, k2) = delta_coeffs(c);
    (
        two.clone() * k0 * z.p.clone() + k1.clone() * z.q.clone(),
        k1 * z.p.clone() + two * k2 * z.q.clone(),
    )
}

/// Discriminant `δ = a²d² − 3b²c² + 4ac³ + 4b³d − 6abcd` of the cubic `3ψ`.
pub fn discriminant<S: Scalar>(c: &CubicCoeffs<S>) -> S {
    let (a, b, cc, d) = (&c.a, &c.b, &c.c, &c.d);
    let k = S::from_i64;
    a.square() * d.square() - k(3) * b.square() * cc.square()
        + k(4) * a.clone() * cc.cube()
        + k(4) * b.cube() * d.clone()
        - k(6) * a.clone() * b.clone() * cc.clone() * d.clone()
}

/// Weight `w` of a monomial cubic `ψ = Ω(w, ·)³ / 3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MonomialWeight<S> {
    /// Representable in the input's own regime.
    Exact(PhasePoint<S>),
    /// Real cube roots were irrational; float approximation.
    Approximate(PhasePoint<f64>),
}

impl<S: Scalar> MonomialWeight<S> {
    pub fn to_f64(&self) -> PhasePoint<f64> {
        match self {
            MonomialWeight::Exact(w) => w.to_f64(),
            MonomialWeight::Approximate(w) => w.clone(),
        }
    }
}

fn monomial_identities_hold<S: Scalar>(c: &CubicCoeffs<S>) -> bool {
    let tol = 1e-12 * c.max_abs_f64().powi(2);
    let (k0, k1, k2) = delta_coeffs(c);
    k0.near_zero(tol) && k1.near_zero(tol) && k2.near_zero(tol)
}

/// Recovers `w = (μ, −λ)` with `λ³ = a`, `μ³ = d`, so that
/// `a p³ + 3b p²q + 3c pq² + d q³ = (λp + μq)³ = Ω(w, z)³`.
///
/// Float inputs test the coefficient identities at relative tolerance 1e-12.
pub fn monomial_weight<S: Scalar>(c: &CubicCoeffs<S>) -> Result<MonomialWeight<S>, AlgebraError> {
    if !monomial_identities_hold(c) {
        return Err(AlgebraError::NotMonomial);
    }
    match (c.a.cube_root(), c.d.cube_root()) {
        (Some(lambda), Some(mu)) => Ok(MonomialWeight::Exact(PhasePoint::new(mu, -lambda))),
        _ => {
            let lambda = c.a.to_f64().cbrt();
            let mu = c.d.to_f64().cbrt();
            Ok(MonomialWeight::Approximate(PhasePoint::new(mu, -lambda)))
        }
    }
}

/// Coefficients of `ψ^w(z) = Ω(w, z)³ / 3`.
pub fn monomial_cubic<S: Scalar>(w: &PhasePoint<S>) -> CubicCoeffs<S> {
    let (w1, w2) = (&w.p, &w.q);
    CubicCoeffs::new(
        -w2.cube(),
        w2.square() * w1.clone(),
        -(w2.clone() * w1.square()),
        w1.cube(),
    )
}

/// `Γ^w_z v = Ω(z, w) Ω(w, v) w`.
pub fn gamma_w<S: Scalar>(
    w: &PhasePoint<S>,
    z: &PhasePoint<S>,
    v: &PhasePoint<S>,
) -> PhasePoint<S> {
    w.scale(&(omega(z, w) * omega(w, v)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CubicKind<S> {
    Zero,
    MonomialComplete(MonomialWeight<S>),
    /// `δ > 0`: `Δ` vanishes on two lines and takes both signs.
    LinePair,
    /// `δ = 0`, `Δ ≢ 0`: `Δ` vanishes on one line, positive elsewhere.
    SingleLine,
    /// `δ < 0`: `Δ` is positive away from the origin.
    Definite,
}

impl<S> CubicKind<S> {
    pub fn name(&self) -> &'static str {
        match self {
            CubicKind::Zero => "Zero",
            CubicKind::MonomialComplete(_) => "MonomialComplete",
            CubicKind::LinePair => "LinePair",
            CubicKind::SingleLine => "SingleLine",
            CubicKind::Definite => "Definite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicClass<S> {
    pub kind: CubicKind<S>,
    pub delta_discriminant: S,
}

impl<S> CubicClass<S> {
    /// Complete Hamiltonian flow, i.e. `Δ ≡ 0`.
    pub fn is_complete(&self) -> bool {
        matches!(self.kind, CubicKind::Zero | CubicKind::MonomialComplete(_))
    }
}

/// Completeness and canonical-form classification. Exact regime only.
pub fn classify<S: Scalar>(c: &CubicCoeffs<S>) -> Result<CubicClass<S>, AlgebraError> {
    if !S::EXACT {
        return Err(AlgebraError::InexactRegime);
    }
    let disc = discriminant(c);
    let kind = if c.is_zero() {
        CubicKind::Zero
    } else if let Ok(w) = monomial_weight(c) {
        CubicKind::MonomialComplete(w)
    } else if disc > S::zero() {
        CubicKind::LinePair
    } else if disc.is_zero() {
        CubicKind::SingleLine
    } else {
        CubicKind::Definite
    };
    Ok(CubicClass {
        kind,
        delta_discriminant: disc,
    })
}

/// Convenience for the common exact case.
pub fn classify_exact(c: &CubicCoeffs<Rational>) -> CubicClass<Rational> {
    classify(c).expect("rational input is exact")
}
