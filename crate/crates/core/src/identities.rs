//! Exact identity suite over rationals.
//!
//! Each check returns `true` when the identity holds with exact equality.
//! The map `z ↦ Γ_z` is injectable so that a deliberately broken map can
//! exercise the failure path of `cubicflow verify`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::{
    delta, delta_coeffs, discriminant, gamma, gamma_w, monomial_cubic, omega, psi_eval, psi_grad,
    psi_hessian, trilinear, CubicCoeffs, Mat2, PhasePoint,
};
use crate::scalar::{int, rational, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Rational;
pub type GammaFn = fn(&CubicCoeffs<Q>, &PhasePoint<Q>) -> Mat2<Q>;

/// Names of the identities, in report order.
pub const IDENTITY_NAMES: [&str; 12] = [
    "delta_is_minus_det_gamma",
    "gamma_traceless",
    "gamma_squared_is_delta_identity",
    "delta_of_gamma_z_z_is_delta_squared",
    "gamma_symmetry",
    "polarization_defining_relation",
    "psi_reconstruction",
    "gradient_relation",
    "anticommutator",
    "discriminant_of_delta",
    "second_derivative_hamilton",
    "monomial_gamma_w",
];

/// One random instance: a cubic, three points, and a monomial weight.
#[derive(Debug, Clone)]
pub struct IdentityInput {
    pub cubic: CubicCoeffs<Q>,
    pub x: PhasePoint<Q>,
    pub y: PhasePoint<Q>,
    pub z: PhasePoint<Q>,
    pub w: PhasePoint<Q>,
}

#[derive(Debug, Clone, Copy)]
pub struct IdentitySuite {
    gamma: GammaFn,
}

impl Default for IdentitySuite {
    fn default() -> Self {
        Self { gamma }
    }
}

impl IdentitySuite {
    pub fn with_gamma(gamma: GammaFn) -> Self {
        Self { gamma }
    }

    /// Evaluates every identity on `input`, in the order of [`IDENTITY_NAMES`].
    pub fn check(&self, input: &IdentityInput) -> [bool; 12] {
        let g = self.gamma;
        let IdentityInput {
            cubic: c,
            x,
            y,
            z,
            w,
        } = input;
        let gz = g(c, z);
        let dz = delta(c, z);
        let gzz = gz.apply(z);
        let id = Mat2::<Q>::identity();
        let two = rational(2, 1);
        let three = rational(3, 1);

        let delta_neg_det = dz == -gz.det();
        let traceless = gz.trace().is_zero();
        let cayley_hamilton = gz.mul(&gz) == id.scale(&dz);
        let theorem = delta(c, &gzz) == dz.clone() * dz.clone();
        let symmetry = g(c, x).apply(y) == g(c, y).apply(x);
        let defining = trilinear(c, x, y, z) == two.clone() * omega(x, &gz.apply(y));
        let reconstruction = psi_eval(c, z) == omega(z, &gzz) / three;
        let (psi_p, psi_q) = psi_grad(c, z);
        let gradient = omega(x, &gzz) == psi_p.clone() * x.p.clone() + psi_q.clone() * x.q.clone();

        let gx = g(c, x);
        let gy = g(c, y);
        let anti = gx.mul(&gy).add(&gy.mul(&gx));
        let polar = delta(c, &x.add(y)) - delta(c, x) - delta(c, y);
        let anticommutator = anti == id.scale(&polar);

        let (k0, k1, k2) = delta_coeffs(c);
        let disc_identity = k1.clone() * k1 - rational(4, 1) * k0 * k2 == discriminant(c);

        let (pp, pq, qq) = psi_hessian(c, z);
        let p_ddot = pq.clone() * psi_q.clone() - psi_p.clone() * qq;
        let q_ddot = pq * psi_p - psi_q * pp;
        let second =
            p_ddot == two.clone() * dz.clone() * z.p.clone() && q_ddot == two * dz * z.q.clone();

        let monomial = gamma_w(w, z, x) == g(&monomial_cubic(w), z).apply(x);

        [
            delta_neg_det,
            traceless,
            cayley_hamilton,
            theorem,
            symmetry,
            defining,
            reconstruction,
            gradient,
            anticommutator,
            disc_identity,
            second,
            monomial,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
}

/// Per-identity pass/fail counts, in [`IDENTITY_NAMES`] order. Serializes
/// as a JSON object keyed by identity name, keeping that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityTally {
    pub entries: Vec<(String, Tally)>,
}

impl IdentityTally {
    pub fn new() -> Self {
        Self {
            entries: IDENTITY_NAMES
                .iter()
                .map(|n| (n.to_string(), Tally::default()))
                .collect(),
        }
    }

    pub fn record(&mut self, results: &[bool; 12]) {
        for ((_, t), ok) in self.entries.iter_mut().zip(results) {
            if *ok {
                t.pass += 1;
            } else {
                t.fail += 1;
            }
        }
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.fail == 0)
    }

    pub fn total_failures(&self) -> u64 {
        self.entries.iter().map(|(_, t)| t.fail).sum()
    }
}

impl Serialize for IdentityTally {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        use serde::ser::SerializeMap;
        let mut map = ser.serialize_map(Some(self.entries.len()))?;
        for (name, tally) in &self.entries {
            map.serialize_entry(name, tally)?;
        }
        map.end()
    }
}

impl Default for IdentityTally {
    fn default() -> Self {
        Self::new()
    }
}

/// Entries of random instances are integers drawn uniformly from this range.
pub const RANDOM_RANGE: std::ops::RangeInclusive<i64> = -9..=9;

impl IdentityInput {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let v: Vec<Q> = (0..12).map(|_| int(rng.gen_range(RANDOM_RANGE))).collect();
        let pt = |i: usize| PhasePoint::new(v[i].clone(), v[i + 1].clone());
        Self {
            cubic: CubicCoeffs::new(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()),
            x: pt(4),
            y: pt(6),
            z: pt(8),
            w: pt(10),
        }
    }
}

/// Runs `count` random instances drawn from a ChaCha8 stream seeded with
/// `seed`. The same `(seed, count)` always yields the same tally.
pub fn run_random(suite: &IdentitySuite, seed: u64, count: u64) -> IdentityTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = IdentityTally::new();
    for _ in 0..count {
        tally.record(&suite.check(&IdentityInput::random(&mut rng)));
    }
    tally
}

/// A broken `Γ`: correct except for an extra `+1` in the top-right entry.
pub fn faulty_gamma(c: &CubicCoeffs<Q>, z: &PhasePoint<Q>) -> Mat2<Q> {
    let mut m = gamma(c, z);
    m.m01 = m.m01 + Q::one();
    m
}
