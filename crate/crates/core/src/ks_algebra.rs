//! Exact truncated algebra of the twisted torus and the automorphisms K_γ.
//!
//! Series live in a strictly convex cone spanned by a unimodular pair of
//! charges. The degree of a charge is the sum of its cone coordinates and
//! every product is truncated at `max_degree`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::charge_lattice::{pair, Charge};

#[derive(Debug, Error, PartialEq)]
pub enum KsError {
    #[error("series live in different cones or truncations")]
    MismatchedCones,
    #[error("charge {0} is not in the cone")]
    OutsideCone(Charge),
    #[error("charges {0} and {1} are not proportional")]
    NotProportional(Charge, Charge),
    #[error("cone basis is not unimodular")]
    BadBasis,
}

/// Cone spanned by two charges with ⟨b1,b2⟩ = ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cone {
    pub b1: Charge,
    pub b2: Charge,
}

impl Cone {
    pub fn new(b1: Charge, b2: Charge) -> Result<Self, KsError> {
        if pair(b1, b2).abs() != 1 {
            return Err(KsError::BadBasis);
        }
        Ok(Cone { b1, b2 })
    }

    /// Cone for the first collision pattern, spanned by γ_e=(0,1) and γ_m=(1,0).
    pub fn type_one() -> Self {
        Cone { b1: Charge(0, 1), b2: Charge(1, 0) }
    }

    /// Cone spanned by −γ_e and γ_m.
    pub fn type_two() -> Self {
        Cone { b1: Charge(0, -1), b2: Charge(1, 0) }
    }

    /// Coordinates (c1, c2) with g = c1·b1 + c2·b2.
    pub fn coords(&self, g: Charge) -> (i64, i64) {
        let d = pair(self.b1, self.b2);
        (pair(g, self.b2) * d, pair(self.b1, g) * d)
    }

    pub fn contains(&self, g: Charge) -> bool {
        let (a, b) = self.coords(g);
        a >= 0 && b >= 0
    }

    pub fn degree(&self, g: Charge) -> i64 {
        let (a, b) = self.coords(g);
        a + b
    }
}

/// Truncated formal sum Σ c_γ X_γ with the twisted product.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedSeries {
    pub terms: BTreeMap<Charge, BigRational>,
    pub cone: Cone,
    pub max_degree: i64,
}

fn sign(k: i64) -> BigRational {
    if k.rem_euclid(2) == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// Generalized binomial coefficient C(e, k) for integer e, k ≥ 0.
pub fn binomial(e: i64, k: i64) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(e - j);
        den *= BigInt::from(j + 1);
    }
    BigRational::new(num, den)
}

impl TwistedSeries {
    pub fn zero(cone: Cone, max_degree: i64) -> Self {
        TwistedSeries { terms: BTreeMap::new(), cone, max_degree }
    }

    pub fn one(cone: Cone, max_degree: i64) -> Self {
        Self::monomial(cone, max_degree, Charge::ZERO, BigRational::one()).unwrap()
    }

    pub fn monomial(cone: Cone, max_degree: i64, g: Charge, c: BigRational) -> Result<Self, KsError> {
        if !cone.contains(g) {
            return Err(KsError::OutsideCone(g));
        }
        let mut s = Self::zero(cone, max_degree);
        s.add_term(g, c);
        Ok(s)
    }

    pub fn x(cone: Cone, max_degree: i64, g: Charge) -> Result<Self, KsError> {
        Self::monomial(cone, max_degree, g, BigRational::one())
    }

    fn add_term(&mut self, g: Charge, c: BigRational) {
        if c.is_zero() || self.cone.degree(g) > self.max_degree {
            return;
        }
        let e = self.terms.entry(g).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&g);
        }
    }

    pub fn coeff(&self, g: Charge) -> BigRational {
        self.terms.get(&g).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &TwistedSeries) -> Result<TwistedSeries, KsError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (&g, c) in &other.terms {
            out.add_term(g, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TwistedSeries) -> Result<TwistedSeries, KsError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (&g, c) in &other.terms {
            out.add_term(g, -c.clone());
        }
        Ok(out)
    }

    fn compatible(&self, other: &TwistedSeries) -> Result<(), KsError> {
        if self.cone != other.cone || self.max_degree != other.max_degree {
            return Err(KsError::MismatchedCones);
        }
        Ok(())
    }

    /// Twisted product X_γ X_γ' = (−1)^⟨γ,γ'⟩ X_{γ+γ'}, truncated.
    pub fn multiply(&self, other: &TwistedSeries) -> Result<TwistedSeries, KsError> {
        self.compatible(other)?;
        let mut out = Self::zero(self.cone, self.max_degree);
        for (&g, a) in &self.terms {
            let dg = self.cone.degree(g);
            for (&h, b) in &other.terms {
                if dg + self.cone.degree(h) > self.max_degree {
                    continue;
                }
                out.add_term(g + h, sign(pair(g, h)) * a * b);
            }
        }
        Ok(out)
    }

    /// Lowest degree carrying a nonzero coefficient.
    pub fn min_degree(&self) -> Option<i64> {
        self.terms.keys().map(|&g| self.cone.degree(g)).min()
    }

    /// Sorted "c * X[(p,q)]" lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (g, c) in &self.terms {
            let _ = writeln!(out, "{} * X[({},{})]", c, g.0, g.1);
        }
        out
    }
}

/// Substitutes X_γ' ↦ X_γ'(1−X_g)^{n⟨γ',g⟩} in every monomial.
pub fn apply_k(g: Charge, n: i64, s: &TwistedSeries) -> Result<TwistedSeries, KsError> {
    let cone = s.cone;
    if g.is_zero() || !cone.contains(g) {
        return Err(KsError::OutsideCone(g));
    }
    let dg = cone.degree(g);
    let mut out = TwistedSeries::zero(cone, s.max_degree);
    for (&h, c) in &s.terms {
        let e = n * pair(h, g);
        let room = s.max_degree - cone.degree(h);
        let kmax = if room < 0 { -1 } else { room / dg };
        // (1−X_g)^e = Σ_k C(e,k)(−1)^k X_{kg}, and X_h X_{kg} = (−1)^{k⟨h,g⟩} X_{h+kg}.
        let mut k = 0;
        while k <= kmax {
            if e >= 0 && k > e {
                break;
            }
            let coef = binomial(e, k) * sign(k) * sign(k * pair(h, g)) * c;
            out.add_term(h + k * g, coef);
            k += 1;
        }
    }
    Ok(out)
}

/// ∏ K_γ^{Ω} over mutually proportional charges.
pub fn stokes_factor(ray: &[(Charge, i64)], s: &TwistedSeries) -> Result<TwistedSeries, KsError> {
    if let Some(&(g0, _)) = ray.first() {
        for &(g, _) in ray {
            if !g.proportional(g0) {
                return Err(KsError::NotProportional(g0, g));
            }
        }
    }
    sector_product(ray, s)
}

/// Composition of the factors as algebra maps: `[A, B]` acts as A∘B.
pub fn sector_product(factors: &[(Charge, i64)], s: &TwistedSeries) -> Result<TwistedSeries, KsError> {
    let mut cur = s.clone();
    for &(g, n) in factors.iter().rev() {
        if n != 0 {
            cur = apply_k(g, n, &cur)?;
        }
    }
    Ok(cur)
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub generator: [i64; 2],
    pub degree: i64,
    pub charge: [i64; 2],
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub holds: bool,
    pub first_discrepancy: Option<Discrepancy>,
}

/// Compares two ordered products on both generators up to degree `n`.
pub fn compare_products(
    cone: Cone,
    n: i64,
    lhs: &[(Charge, i64)],
    rhs: &[(Charge, i64)],
    generators: &[Charge],
) -> Result<IdentityReport, KsError> {
    let mut first: Option<Discrepancy> = None;
    for &gen in generators {
        let x = TwistedSeries::x(cone, n, gen)?;
        let l = sector_product(lhs, &x)?;
        let r = sector_product(rhs, &x)?;
        let d = l.sub(&r)?;
        if let Some(deg) = d.min_degree() {
            let (&g, _) = d.terms.iter().filter(|(&g, _)| cone.degree(g) == deg).next().unwrap();
            let cand = Discrepancy {
                generator: [gen.0, gen.1],
                degree: deg,
                charge: [g.0, g.1],
                lhs: l.coeff(g).to_string(),
                rhs: r.coeff(g).to_string(),
            };
            if first.as_ref().map_or(true, |f| deg < f.degree) {
                first = Some(cand);
            }
        }
    }
    Ok(IdentityReport { holds: first.is_none(), first_discrepancy: first })
}

#[derive(Clone, Debug, Serialize)]
pub struct PentagonReport {
    pub degree: i64,
    /// K_e∘K_m = K_m∘K_{e+m}∘K_e in the cone of {γ_e, γ_m}.
    pub type_one: IdentityReport,
    /// K_m∘K_{−e} = K_{−e}∘K_{−e+m}∘K_m in the cone of {−γ_e, γ_m}.
    pub type_two: IdentityReport,
    /// The second identity with the factor order K_{−e}∘K_m = K_m∘K_{−e+m}∘K_{−e}.
    pub type_two_reversed_order: IdentityReport,
}

impl PentagonReport {
    pub fn identity(&self) -> bool {
        self.type_one.holds && self.type_two.holds
    }
}

pub const GAMMA_M: Charge = Charge(1, 0);
pub const GAMMA_E: Charge = Charge(0, 1);

pub fn pentagon_check(n: i64) -> Result<PentagonReport, KsError> {
    let (e, m) = (GAMMA_E, GAMMA_M);
    let gens = [m, e];
    let type_one = compare_products(Cone::type_one(), n, &[(e, 1), (m, 1)], &[(m, 1), (e + m, 1), (e, 1)], &gens)?;
    let ne = -e;
    let gens2 = [m, ne];
    let type_two =
        compare_products(Cone::type_two(), n, &[(m, 1), (ne, 1)], &[(ne, 1), (ne + m, 1), (m, 1)], &gens2)?;
    let type_two_reversed_order =
        compare_products(Cone::type_two(), n, &[(ne, 1), (m, 1)], &[(m, 1), (ne + m, 1), (ne, 1)], &gens2)?;
    Ok(PentagonReport { degree: n, type_one, type_two, type_two_reversed_order })
}

/// Pentagon check with K_{e+m} dropped from the right-hand side.
pub fn mutated_pentagon_check(n: i64) -> Result<IdentityReport, KsError> {
    let (e, m) = (GAMMA_E, GAMMA_M);
    compare_products(Cone::type_one(), n, &[(e, 1), (m, 1)], &[(m, 1), (e, 1)], &[m, e])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn series_from(cone: Cone, n: i64, coeffs: &[(i64, i64, i64)]) -> TwistedSeries {
        let mut s = TwistedSeries::zero(cone, n);
        for &(a, b, c) in coeffs {
            let g = Charge(a, b);
            if cone.contains(g) {
                s.add_term(g, q(c));
            }
        }
        s
    }

    #[test]
    fn product_examples() {
        let c = Cone::type_one();
        let x1 = TwistedSeries::x(c, 4, Charge(1, 0)).unwrap();
        let x2 = TwistedSeries::x(c, 4, Charge(0, 1)).unwrap();
        let p = x1.multiply(&x2).unwrap();
        assert_eq!(p.coeff(Charge(1, 1)), q(-1));
        let one = TwistedSeries::one(c, 4);
        assert_eq!(one.multiply(&p).unwrap(), p);
        let s = x1.add(&x2).unwrap();
        let sq = s.multiply(&s).unwrap();
        // (−1)^{⟨γ₁,γ₂⟩} = (−1)^{⟨γ₂,γ₁⟩} = −1, so the cross terms add.
        assert_eq!(sq.terms.len(), 3);
        assert_eq!(sq.coeff(Charge(1, 1)), q(-2));
        assert_eq!(sq.coeff(Charge(2, 0)), q(1));
        assert_eq!(sq.coeff(Charge(0, 2)), q(1));
    }

    #[test]
    fn mismatched_cones_rejected() {
        let a = TwistedSeries::one(Cone::type_one(), 3);
        let b = TwistedSeries::one(Cone::type_two(), 3);
        assert_eq!(a.multiply(&b), Err(KsError::MismatchedCones));
    }

    #[test]
    fn k_action_examples() {
        let c = Cone::type_one();
        let xe = TwistedSeries::x(c, 5, GAMMA_E).unwrap();
        assert_eq!(apply_k(GAMMA_E, 1, &xe).unwrap(), xe);
        // ⟨γ_e,γ_m⟩ = −1, so K_m X_e = X_e(1−X_m)^{−1} = X_e Σ X_{km}
        // and X_e X_{km} = (−1)^k X_{e+km}.
        let k = apply_k(GAMMA_M, 1, &xe).unwrap();
        for j in 0..=4 {
            let expect = if j % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(k.coeff(Charge(j, 1)), expect);
        }
        assert_eq!(k.terms.len(), 5);
        // K_e X_m = X_m(1−X_e)^{+1} = X_m − X_m X_e = X_m + X_{m+e}.
        let xm = TwistedSeries::x(c, 5, GAMMA_M).unwrap();
        let k = apply_k(GAMMA_E, 1, &xm).unwrap();
        assert_eq!(k.to_text(), "1 * X[(1,0)]\n1 * X[(1,1)]\n");
    }

    #[test]
    fn stokes_factor_examples() {
        let c = Cone::type_one();
        let xm = TwistedSeries::x(c, 6, GAMMA_M).unwrap();
        let e = GAMMA_E;
        assert_eq!(stokes_factor(&[(e, 1)], &xm).unwrap(), apply_k(e, 1, &xm).unwrap());
        assert_eq!(stokes_factor(&[(e, 1), (2 * e, 0)], &xm).unwrap(), apply_k(e, 1, &xm).unwrap());
        let a = stokes_factor(&[(e, 1), (2 * e, 1)], &xm).unwrap();
        let b = stokes_factor(&[(2 * e, 1), (e, 1)], &xm).unwrap();
        assert_eq!(a, b);
        assert!(matches!(stokes_factor(&[(e, 1), (GAMMA_M, 1)], &xm), Err(KsError::NotProportional(_, _))));
    }

    #[test]
    fn sector_product_examples() {
        let c = Cone::type_one();
        let xe = TwistedSeries::x(c, 4, GAMMA_E).unwrap();
        assert_eq!(sector_product(&[], &xe).unwrap(), xe);
        let two = sector_product(&[(GAMMA_E, 1), (GAMMA_M, 1)], &xe).unwrap();
        let manual = apply_k(GAMMA_E, 1, &apply_k(GAMMA_M, 1, &xe).unwrap()).unwrap();
        assert_eq!(two, manual);
    }

    #[test]
    fn pentagon_holds_low_and_high_order() {
        for n in [1, 2, 3, 8] {
            let r = pentagon_check(n).unwrap();
            assert!(r.type_one.holds, "type one fails at N={n}: {:?}", r.type_one.first_discrepancy);
            assert!(r.type_two.holds, "type two fails at N={n}");
        }
    }

    #[test]
    fn reversed_type_two_order_fails() {
        let r = pentagon_check(4).unwrap();
        let d = r.type_two_reversed_order.first_discrepancy.expect("literal order should fail");
        assert_eq!(d.degree, 3);
    }

    #[test]
    fn mutated_pentagon_fails_first_at_degree_three() {
        // X_γ·X_{e+m} has cone degree ≥ 3, so K_{e+m} is invisible below that.
        assert!(mutated_pentagon_check(2).unwrap().holds);
        let r = mutated_pentagon_check(3).unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_discrepancy.unwrap().degree, 3);
    }

    #[test]
    fn pentagon_up_to_ten() {
        for n in 1..=10 {
            assert!(pentagon_check(n).unwrap().identity());
        }
    }

    #[test]
    fn generalized_binomial() {
        assert_eq!(binomial(-1, 3), q(-1));
        assert_eq!(binomial(-2, 2), q(3));
        assert_eq!(binomial(3, 4), q(0));
        assert_eq!(binomial(5, 2), q(10));
    }

    fn arb_series(n: i64) -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
        prop::collection::vec((0i64..=n, 0i64..=n, -3i64..=3), 0..6)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn k_is_morphism(a in arb_series(4), b in arb_series(4), n in -2i64..=2, which in 0usize..3) {
            let c = Cone::type_one();
            let g = [GAMMA_E, GAMMA_M, GAMMA_E + GAMMA_M][which];
            let sa = series_from(c, 5, &a);
            let sb = series_from(c, 5, &b);
            let lhs = apply_k(g, n, &sa.multiply(&sb).unwrap()).unwrap();
            let rhs = apply_k(g, n, &sa).unwrap().multiply(&apply_k(g, n, &sb).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn k_inverse(a in arb_series(5), n in 1i64..=3, which in 0usize..3) {
            let c = Cone::type_one();
            let g = [GAMMA_E, GAMMA_M, GAMMA_E + GAMMA_M][which];
            let s = series_from(c, 6, &a);
            let back = apply_k(g, -n, &apply_k(g, n, &s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn proportional_factors_commute(a in arb_series(4), m1 in -2i64..=2, m2 in -2i64..=2) {
            let c = Cone::type_one();
            let s = series_from(c, 6, &a);
            let e = GAMMA_E;
            let x = stokes_factor(&[(e, m1), (2 * e, m2)], &s).unwrap();
            let y = stokes_factor(&[(2 * e, m2), (e, m1)], &s).unwrap();
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn cone_coordinates() {
        let c = Cone::type_two();
        assert_eq!(c.coords(Charge(1, -1)), (1, 1));
        assert!(!c.contains(GAMMA_E));
        assert!(Cone::new(Charge(1, 0), Charge(2, 0)).is_err());
        let t = TwistedSeries::x(c, 3, Charge(1, -2)).unwrap();
        assert!(t.coeff(Charge(1, -2)) > BigRational::zero());
    }
}
