//! Trap-avoidance probabilities and the fooling-probability bounds.
//!
//! An attack with `a` X factors, `b` Z factors and `c` XZ factors hits
//! fixed positions while the role permutation is uniform with `m = N/3`
//! positions of each role. No trap flips iff every X lands on a resource
//! or `|+⟩` trap, every Z on a resource or `|0⟩` trap, and every XZ on a
//! resource qubit. Summing over how many X and Z factors land on resource
//! qubits gives
//!
//! ```text
//! P = Σ_{i,j} C(a,i) C(b,j) [m]_{i+j+c} [m]_{a-i} [m]_{b-j} / [N]_{a+b+c}
//! ```
//!
//! with `[x]_k` the falling factorial.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::pauli::{PauliString, SinglePauli};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackProfile {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub n: usize,
}

impl AttackProfile {
    pub fn new(a: usize, b: usize, c: usize, n: usize) -> Result<Self> {
        let p = AttackProfile { a, b, c, n };
        p.validate()?;
        Ok(p)
    }

    /// Counts the X, Z and XZ factors of an attack string.
    pub fn of(p: &PauliString) -> Self {
        let (a, b, c) = p.counts();
        AttackProfile { a, b, c, n: p.num_qubits() }
    }

    pub fn weight(&self) -> usize {
        self.a + self.b + self.c
    }

    fn validate(&self) -> Result<()> {
        if !self.n.is_multiple_of(3) {
            return Err(Error::NotDivisibleByThree(self.n));
        }
        if self.weight() > self.n {
            return Err(Error::InvalidArgument(format!("attack weight {} exceeds {} qubits", self.weight(), self.n)));
        }
        Ok(())
    }
}

fn falling(x: usize, k: usize) -> BigInt {
    if k > x {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(x - i))
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    falling(n, k) / falling(k, k)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Exact probability that no trap flips, from the closed sum.
pub fn trap_avoid_exact(profile: &AttackProfile) -> Result<BigRational> {
    profile.validate()?;
    let AttackProfile { a, b, c, n } = *profile;
    let m = n / 3;
    let mut num = BigInt::zero();
    for i in 0..=a {
        for j in 0..=b {
            let term = binomial(a, i) * binomial(b, j) * falling(m, i + j + c) * falling(m, a - i) * falling(m, b - j);
            num += term;
        }
    }
    Ok(ratio(num, falling(n, a + b + c)))
}

/// The same probability by placing one attacked position at a time and
/// conditioning on the roles still available.
pub fn trap_avoid_recursive(profile: &AttackProfile) -> Result<BigRational> {
    profile.validate()?;
    let m = profile.n / 3;
    let mut memo = HashMap::new();
    Ok(avoid_rec(profile.a, profile.b, profile.c, [m, m, m], &mut memo))
}

type Key = (usize, usize, usize, [usize; 3]);

fn avoid_rec(a: usize, b: usize, c: usize, left: [usize; 3], memo: &mut HashMap<Key, BigRational>) -> BigRational {
    if a + b + c == 0 {
        return BigRational::one();
    }
    if let Some(v) = memo.get(&(a, b, c, left)) {
        return v.clone();
    }
    let [r, p, z] = left;
    let total = BigInt::from(r + p + z);
    let frac = |k: usize| BigRational::new(BigInt::from(k), total.clone());
    // which roles are safe for the next attacked position
    let (rest, safe): ((usize, usize, usize), &[usize]) = if c > 0 {
        ((a, b, c - 1), &[0])
    } else if a > 0 {
        ((a - 1, b, c), &[0, 1])
    } else {
        ((a, b - 1, c), &[0, 2])
    };
    let mut acc = BigRational::zero();
    for &role in safe {
        if left[role] == 0 {
            continue;
        }
        let mut next = left;
        next[role] -= 1;
        acc += frac(left[role]) * avoid_rec(rest.0, rest.1, rest.2, next, memo);
    }
    memo.insert((a, b, c, left), acc.clone());
    acc
}

/// `(N - a)! ∏_{k<a} (2N/3 - k) / N!`: all `a` X factors miss the `|0⟩`
/// traps.
pub fn single_type_formula(n: usize, a: usize) -> Result<BigRational> {
    AttackProfile::new(a, 0, 0, n)?;
    Ok(ratio(falling(2 * n / 3, a), falling(n, a)))
}

fn pow_ratio(num: i64, den: i64, k: usize) -> BigRational {
    BigRational::new(BigInt::from(num).pow(k as u32), BigInt::from(den).pow(k as u32))
}

/// `(2/3)^max(a,b)` when the largest count is a or b, otherwise `(1/3)^c`.
pub fn trap_avoid_bound(profile: &AttackProfile) -> BigRational {
    let AttackProfile { a, b, c, .. } = *profile;
    let top = a.max(b).max(c);
    if a == top || b == top {
        pow_ratio(2, 3, a.max(b))
    } else {
        pow_ratio(1, 3, c)
    }
}

/// `(2/3)^{w/3}` for an attack of weight `w`.
pub fn weight_bound(weight: usize) -> f64 {
    (2.0f64 / 3.0).powf(weight as f64 / 3.0)
}

/// Bound on fooling the trap protocol with code distance `d`.
pub fn fooling_bound_p1(d: usize) -> f64 {
    weight_bound(d)
}

/// Bound on fooling the topological protocol with code distance `d`.
pub fn fooling_bound_p2(d: usize) -> f64 {
    0.75f64.powi(d as i32)
}

/// Probability that a uniform `(h, t)` key maps `factor` into `{Z, XZ}`.
pub fn survival_prob(factor: SinglePauli) -> Result<f64> {
    match factor {
        SinglePauli::X | SinglePauli::XZ => Ok(0.75),
        SinglePauli::Z => Ok(0.5),
        SinglePauli::I => Err(Error::InvalidArgument("the identity factor has no survival probability".into())),
    }
}

/// Product of [`survival_prob`] over the non-identity factors.
pub fn string_survival_prob(p: &PauliString) -> f64 {
    p.support().map(|(_, f)| survival_prob(f).expect("non-identity")).product()
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn worked_values() {
        assert_eq!(trap_avoid_exact(&AttackProfile::new(1, 0, 0, 3).unwrap()).unwrap(), r(2, 3));
        assert_eq!(trap_avoid_exact(&AttackProfile::new(1, 1, 0, 6).unwrap()).unwrap(), r(7, 15));
        assert_eq!(trap_avoid_exact(&AttackProfile::new(0, 0, 0, 9).unwrap()).unwrap(), r(1, 1));
    }

    #[test]
    fn recursion_matches_closed_sum() {
        for n in [3, 6, 9, 12, 30] {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..3 {
                        if a + b + c > n {
                            continue;
                        }
                        let p = AttackProfile::new(a, b, c, n).unwrap();
                        assert_eq!(trap_avoid_exact(&p).unwrap(), trap_avoid_recursive(&p).unwrap(), "{p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn bounds() {
        let p = AttackProfile::new(1, 1, 0, 6).unwrap();
        assert_eq!(trap_avoid_bound(&p), r(2, 3));
        assert!(trap_avoid_bound(&p) >= trap_avoid_exact(&p).unwrap());
        assert_eq!(trap_avoid_bound(&AttackProfile::new(0, 0, 2, 6).unwrap()), r(1, 9));
        assert_eq!(trap_avoid_bound(&AttackProfile::new(0, 0, 0, 6).unwrap()), r(1, 1));
    }

    #[test]
    fn fooling_bounds() {
        assert!((fooling_bound_p1(3) - 2.0 / 3.0).abs() < 1e-15);
        assert!((fooling_bound_p2(1) - 0.75).abs() < 1e-15);
        for d in 1..20 {
            assert!(fooling_bound_p1(d + 1) < fooling_bound_p1(d));
            assert!(fooling_bound_p2(d + 1) < fooling_bound_p2(d));
        }
    }

    #[test]
    fn survival_table() {
        assert_eq!(survival_prob(SinglePauli::X).unwrap(), 0.75);
        assert_eq!(survival_prob(SinglePauli::Z).unwrap(), 0.5);
        assert_eq!(survival_prob(SinglePauli::XZ).unwrap(), 0.75);
        assert!(survival_prob(SinglePauli::I).is_err());
    }

    #[test]
    fn invalid_profiles() {
        assert_eq!(AttackProfile::new(1, 0, 0, 4).unwrap_err(), Error::NotDivisibleByThree(4));
        assert!(AttackProfile::new(2, 2, 0, 3).is_err());
    }
}
