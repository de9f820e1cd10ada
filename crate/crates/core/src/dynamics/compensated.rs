//! Compensated evaluation of the Hamiltonian field.
//!
//! Near a monomial cubic the gradient `(ψ_p, ψ_q)` is a small difference of
//! large terms: for `ψ = Ω(w, z)³/3` along an orbit, `a p²` and `c q²` grow
//! like `|z|²` while their sum stays constant. Products are split with FMA
//! and summed in double-double, so the result is as accurate as if computed
//! in twice the working precision and then rounded.

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `Σ kᵢ xᵢ yᵢ` with `kᵢ = hi + lo` given in double-double, accumulated in
/// double-double.
fn sum_triple_products(terms: [((f64, f64), f64, f64); 3]) -> f64 {
    let (mut hi, mut lo) = (0.0, 0.0);
    for ((k, k_lo), x, y) in terms {
        let (p1, e1) = two_prod(k, x);
        let (p2, e2) = two_prod(p1, y);
        let (s, e) = two_sum(hi, p2);
        hi = s;
        lo += e + e2 + e1 * y + k_lo * x * y;
    }
    hi + lo
}

/// Coefficients `[a, b, c, d]`, each split as `(hi, lo)`.
pub(crate) type SplitCoeffs = [(f64, f64); 4];

/// `ξ(z) = (−ψ_q, ψ_p)`.
pub(crate) fn field(c: &SplitCoeffs, y: &[f64; 2]) -> [f64; 2] {
    let [a, b, cc, d] = *c;
    let twice = |(h, l): (f64, f64)| (2.0 * h, 2.0 * l);
    let [p, q] = *y;
    let psi_p = sum_triple_products([(a, p, p), (twice(b), p, q), (cc, q, q)]);
    let psi_q = sum_triple_products([(b, p, p), (twice(cc), p, q), (d, q, q)]);
    [-psi_q, psi_p]
}
