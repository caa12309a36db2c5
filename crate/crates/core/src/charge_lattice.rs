//! Rank-2 charge lattice, symplectic pairing, twisted angles and BPS spectra.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("vanishing cycle {0} is not primitive")]
    NonPrimitive(Charge),
}

/// Integer charge in the local basis {γ₁, γ₂}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Charge(pub i64, pub i64);

impl Charge {
    pub const ZERO: Charge = Charge(0, 0);
    pub const G1: Charge = Charge(1, 0);
    pub const G2: Charge = Charge(0, 1);

    pub fn new(p: i64, q: i64) -> Self {
        Charge(p, q)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0 && self.1 == 0
    }

    pub fn is_primitive(self) -> bool {
        self.0.gcd(&self.1) == 1
    }

    /// Euclidean norm on the coordinates.
    pub fn norm(self) -> f64 {
        ((self.0 * self.0 + self.1 * self.1) as f64).sqrt()
    }

    /// True when `self` and `other` span a rank ≤ 1 sublattice.
    pub fn proportional(self, other: Charge) -> bool {
        pair(self, other) == 0
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

impl Add for Charge {
    type Output = Charge;
    fn add(self, o: Charge) -> Charge {
        Charge(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Charge {
    type Output = Charge;
    fn sub(self, o: Charge) -> Charge {
        Charge(self.0 - o.0, self.1 - o.1)
    }
}

impl Neg for Charge {
    type Output = Charge;
    fn neg(self) -> Charge {
        Charge(-self.0, -self.1)
    }
}

impl Mul<Charge> for i64 {
    type Output = Charge;
    fn mul(self, g: Charge) -> Charge {
        Charge(self * g.0, self * g.1)
    }
}

/// Antisymmetric pairing in the default basis, ⟨γ₁,γ₂⟩ = 1.
pub fn pair(g: Charge, h: Charge) -> i64 {
    g.0 * h.1 - g.1 * h.0
}

/// A general antisymmetric integer pairing matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pairing {
    pub matrix: [[i64; 2]; 2],
}

impl Default for Pairing {
    fn default() -> Self {
        Pairing { matrix: [[0, 1], [-1, 0]] }
    }
}

impl Pairing {
    pub fn eval(&self, g: Charge, h: Charge) -> i64 {
        let m = &self.matrix;
        let a = [g.0, g.1];
        let b = [h.0, h.1];
        let mut s = 0;
        for i in 0..2 {
            for j in 0..2 {
                s += a[i] * m[i][j] * b[j];
            }
        }
        s
    }
}

/// Angles on the torus fiber, θ_{γ₁} and θ_{γ₂}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusAngles {
    pub theta1: f64,
    pub theta2: f64,
}

impl TorusAngles {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        TorusAngles { theta1: wrap(theta1), theta2: wrap(theta2) }
    }
}

/// Reduce an angle to [0, 2π).
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// θ_g for the twisted character, reduced to [0, 2π).
pub fn twisted_angle(base: TorusAngles, g: Charge) -> f64 {
    wrap(twisted_angle_raw(base.theta1, base.theta2, g))
}

/// Unreduced θ_g = pθ₁ + qθ₂ − πpq. Linear up to multiples of 2π.
pub fn twisted_angle_raw(theta1: f64, theta2: f64, g: Charge) -> f64 {
    g.0 as f64 * theta1 + g.1 as f64 * theta2 - PI * (g.0 * g.1) as f64
}

/// Complexified version used for Υ: θ_g = pΥ₁ + qΥ₂ − πpq.
pub fn twisted_angle_c(t1: Complex64, t2: Complex64, g: Charge) -> Complex64 {
    t1 * g.0 as f64 + t2 * g.1 as f64 - PI * (g.0 * g.1) as f64
}

/// g + ⟨g,v⟩v.
pub fn picard_lefschetz(g: Charge, vanishing: Charge) -> Result<Charge, LatticeError> {
    if !vanishing.is_primitive() {
        return Err(LatticeError::NonPrimitive(vanishing));
    }
    Ok(g + pair(g, vanishing) * vanishing)
}

/// Pentagon monodromy around infinity: γ₁ ↦ −γ₂, γ₂ ↦ γ₁+γ₂.
pub fn monodromy_infinity(g: Charge) -> Charge {
    Charge(g.1, g.1 - g.0)
}

pub fn monodromy_infinity_inv(g: Charge) -> Charge {
    Charge(g.0 - g.1, g.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Inside,
    /// Outside, across the wall where γ₁+γ₂ becomes stable.
    OutsideI,
    /// Outside, across the wall where γ₁−γ₂ becomes stable.
    OutsideII,
    OoguriVafa,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub charge: [i64; 2],
    pub omega: i64,
}

/// Finite BPS spectrum with a support bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BpsSpectrum {
    pub region: Region,
    pub entries: BTreeMap<Charge, i64>,
    pub support_bound: f64,
}

impl BpsSpectrum {
    pub fn from_pairs(region: Region, pairs: &[(Charge, i64)]) -> Self {
        let mut entries = BTreeMap::new();
        for &(g, o) in pairs {
            if o != 0 {
                entries.insert(g, o);
                entries.insert(-g, o);
            }
        }
        BpsSpectrum { region, entries, support_bound: 0.0 }
    }

    pub fn empty() -> Self {
        Self::from_pairs(Region::Empty, &[])
    }

    pub fn ooguri_vafa() -> Self {
        Self::from_pairs(Region::OoguriVafa, &[(Charge::G2, 1)])
    }

    pub fn pentagon(region: Region) -> Self {
        let g1 = Charge::G1;
        let g2 = Charge::G2;
        match region {
            Region::Inside => Self::from_pairs(region, &[(g1, 1), (g2, 1)]),
            Region::OutsideI => Self::from_pairs(region, &[(g1, 1), (g2, 1), (g1 + g2, 1)]),
            Region::OutsideII => Self::from_pairs(region, &[(g1, 1), (g2, 1), (g1 - g2, 1)]),
            Region::OoguriVafa => Self::ooguri_vafa(),
            Region::Empty => Self::empty(),
        }
    }

    pub fn with_support_bound(mut self, k: f64) -> Self {
        self.support_bound = k;
        self
    }

    pub fn omega(&self, g: Charge) -> i64 {
        self.entries.get(&g).copied().unwrap_or(0)
    }

    pub fn support(&self) -> Vec<Charge> {
        self.entries.iter().filter(|(_, &o)| o != 0).map(|(&g, _)| g).collect()
    }

    /// Ω(γ) = Ω(−γ) for every stored charge.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(&g, &o)| self.omega(-g) == o)
    }

    pub fn to_json_entries(&self) -> Vec<SpectrumEntry> {
        self.entries
            .iter()
            .map(|(g, &o)| SpectrumEntry { charge: [g.0, g.1], omega: o })
            .collect()
    }
}

/// |Z_γ|/‖γ‖ > K on the support of `spec` restricted to `charges`.
pub fn check_support<F>(spec: &BpsSpectrum, charges: &[Charge], z: F) -> bool
where
    F: Fn(Charge) -> Complex64,
{
    charges
        .iter()
        .filter(|&&g| spec.omega(g) != 0 && !g.is_zero())
        .all(|&g| z(g).norm() / g.norm() > spec.support_bound)
}
