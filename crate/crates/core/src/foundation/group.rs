use std::fmt;

use crate::error::{Error, Result};

/// A normed abelian coefficient group whose closed balls are compact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientGroup {
    Integers,
    IntegersMod(u32),
    Reals,
}

/// An element of a [`CoefficientGroup`]. `Mod` stores the reduced residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement {
    Int(i64),
    Mod { residue: u32, modulus: u32 },
    Real(f64),
}

/// Real coefficients below this magnitude are treated as cancelled.
pub const REAL_ZERO: f64 = 1e-12;

impl CoefficientGroup {
    pub fn integers_mod(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::GroupMismatch(format!("modulus must be >= 2, got {m}")));
        }
        Ok(CoefficientGroup::IntegersMod(m))
    }

    pub fn zero(&self) -> GroupElement {
        match *self {
            CoefficientGroup::Integers => GroupElement::Int(0),
            CoefficientGroup::IntegersMod(m) => GroupElement::Mod { residue: 0, modulus: m },
            CoefficientGroup::Reals => GroupElement::Real(0.0),
        }
    }

    /// Image of an integer under the canonical map Z -> G.
    pub fn from_int(&self, n: i64) -> GroupElement {
        match *self {
            CoefficientGroup::Integers => GroupElement::Int(n),
            CoefficientGroup::IntegersMod(m) => GroupElement::Mod {
                residue: n.rem_euclid(m as i64) as u32,
                modulus: m,
            },
            CoefficientGroup::Reals => GroupElement::Real(n as f64),
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        matches!(
            (self, g),
            (CoefficientGroup::Integers, GroupElement::Int(_)) | (CoefficientGroup::Reals, GroupElement::Real(_))
        ) || matches!((self, g), (CoefficientGroup::IntegersMod(m), GroupElement::Mod { modulus, .. }) if m == modulus)
    }

    /// Parses a coefficient written as a decimal string.
    pub fn parse(&self, s: &str) -> Result<GroupElement> {
        let s = s.trim();
        match *self {
            CoefficientGroup::Reals => s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(GroupElement::Real)
                .ok_or_else(|| Error::Parse(format!("bad real coefficient {s:?}"))),
            _ => s
                .parse::<i64>()
                .map(|n| self.from_int(n))
                .map_err(|_| Error::Parse(format!("bad integer coefficient {s:?}"))),
        }
    }

    /// Every element of the closed ball of radius `d` (finite groups and Z only).
    pub fn ball(&self, d: f64) -> Option<Vec<GroupElement>> {
        match *self {
            CoefficientGroup::Integers => {
                let r = d.floor() as i64;
                Some((-r..=r).map(GroupElement::Int).collect())
            }
            CoefficientGroup::IntegersMod(m) => Some(
                (0..m)
                    .map(|r| GroupElement::Mod { residue: r, modulus: m })
                    .filter(|g| g.norm() <= d)
                    .collect(),
            ),
            CoefficientGroup::Reals => None,
        }
    }
}

impl GroupElement {
    pub fn group(&self) -> CoefficientGroup {
        match *self {
            GroupElement::Int(_) => CoefficientGroup::Integers,
            GroupElement::Mod { modulus, .. } => CoefficientGroup::IntegersMod(modulus),
            GroupElement::Real(_) => CoefficientGroup::Reals,
        }
    }

    pub fn add(&self, other: &GroupElement) -> Result<GroupElement> {
        match (*self, *other) {
            (GroupElement::Int(a), GroupElement::Int(b)) => Ok(GroupElement::Int(a + b)),
            (GroupElement::Real(a), GroupElement::Real(b)) => Ok(GroupElement::Real(a + b)),
            (GroupElement::Mod { residue: a, modulus: m }, GroupElement::Mod { residue: b, modulus: n }) => {
                if m != n {
                    return Err(Error::GroupMismatch(format!("modulus {m} vs {n}")));
                }
                Ok(GroupElement::Mod {
                    residue: ((a as u64 + b as u64) % m as u64) as u32,
                    modulus: m,
                })
            }
            (a, b) => Err(Error::GroupMismatch(format!("{a:?} + {b:?}"))),
        }
    }

    pub fn sub(&self, other: &GroupElement) -> Result<GroupElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GroupElement {
        match *self {
            GroupElement::Int(a) => GroupElement::Int(-a),
            GroupElement::Real(a) => GroupElement::Real(-a),
            GroupElement::Mod { residue, modulus } => GroupElement::Mod {
                residue: (modulus - residue) % modulus,
                modulus,
            },
        }
    }

    /// Multiplies by +1 or -1.
    pub fn signed(&self, positive: bool) -> GroupElement {
        if positive {
            *self
        } else {
            self.neg()
        }
    }

    /// The group norm; `min(r, m - r)` for residues.
    pub fn norm(&self) -> f64 {
        match *self {
            GroupElement::Int(a) => a.unsigned_abs() as f64,
            GroupElement::Real(a) => a.abs(),
            GroupElement::Mod { residue, modulus } => residue.min(modulus - residue) as f64,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            GroupElement::Int(a) => a == 0,
            GroupElement::Real(a) => a.abs() <= REAL_ZERO,
            GroupElement::Mod { residue, .. } => residue == 0,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            GroupElement::Int(a) => a as f64,
            GroupElement::Real(a) => a,
            GroupElement::Mod { residue, .. } => residue as f64,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GroupElement::Int(a) => write!(f, "{a}"),
            GroupElement::Real(a) => write!(f, "{a}"),
            GroupElement::Mod { residue, .. } => write!(f, "{residue}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let z5 = CoefficientGroup::integers_mod(5).unwrap();
        assert_eq!(z5.from_int(3).norm(), 2.0);
        assert_eq!(GroupElement::Int(-4).norm(), 4.0);
        let s = GroupElement::Real(1.5).add(&GroupElement::Real(-1.5)).unwrap();
        assert_eq!(s, GroupElement::Real(0.0));
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn mismatches_are_errors() {
        assert!(GroupElement::Int(1).add(&GroupElement::Real(1.0)).is_err());
        let a = CoefficientGroup::IntegersMod(3).from_int(1);
        let b = CoefficientGroup::IntegersMod(4).from_int(1);
        assert!(a.add(&b).is_err());
        assert!(CoefficientGroup::integers_mod(1).is_err());
    }

    #[test]
    fn modular_norm_axioms_exhaustive() {
        for m in 2..=12u32 {
            let g = CoefficientGroup::IntegersMod(m);
            let all: Vec<_> = (0..m as i64).map(|r| g.from_int(r)).collect();
            for a in &all {
                assert!(a.norm() >= 0.0);
                assert_eq!(a.norm() == 0.0, a.is_zero());
                assert_eq!(a.neg().norm(), a.norm());
                for b in &all {
                    let s = a.add(b).unwrap();
                    assert!(s.norm() <= a.norm() + b.norm());
                    assert_eq!(s, b.add(a).unwrap());
                }
            }
        }
    }

    #[test]
    fn balls_are_finite() {
        assert_eq!(CoefficientGroup::Integers.ball(2.5).unwrap().len(), 5);
        assert_eq!(CoefficientGroup::IntegersMod(7).ball(1.0).unwrap().len(), 3);
        assert!(CoefficientGroup::Reals.ball(1.0).is_none());
    }
}
