//! Integrability exponents as exact rationals.
//!
//! The admissibility relations (3/p + 2/q = 1, conjugacy, the derived
//! pairs 2p/(p+2) and friends) must be decided exactly, not up to float
//! noise: (9, 3) satisfies 3/p + 2/q = 1 while 0.333... + 0.666... does
//! not in binary. Infinite exponents are first-class.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

type Rat = Ratio<i64>;

/// One exponent in [1, infinity].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exp {
    Finite { num: i64, den: i64 },
    Inf,
}

impl Exp {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParam("exponent denominator is zero".into()));
        }
        let r = Rat::new(num, den);
        if r < Rat::from_integer(1) {
            return Err(Error::InvalidParam(format!(
                "exponent {num}/{den} is below 1"
            )));
        }
        Ok(Exp::Finite {
            num: *r.numer(),
            den: *r.denom(),
        })
    }

    pub fn int(v: i64) -> Result<Self> {
        Self::new(v, 1)
    }

    pub fn rat(&self) -> Option<Rat> {
        match self {
            Exp::Finite { num, den } => Some(Rat::new(*num, *den)),
            Exp::Inf => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exp::Inf)
    }

    /// 1/p as an exact rational (0 for infinity).
    pub fn recip(&self) -> Rat {
        match self.rat() {
            Some(r) => r.recip(),
            None => Rat::from_integer(0),
        }
    }

    /// Conjugate exponent: 1/p + 1/p' = 1 with the infinity <-> 1 pairing.
    pub fn conjugate(&self) -> Exp {
        match self.rat() {
            None => Exp::Finite { num: 1, den: 1 },
            Some(r) if r == Rat::from_integer(1) => Exp::Inf,
            Some(r) => {
                let c = r / (r - Rat::from_integer(1));
                Exp::Finite {
                    num: *c.numer(),
                    den: *c.denom(),
                }
            }
        }
    }

    pub fn to_float<T: Scalar>(&self) -> T {
        match self.rat() {
            Some(r) => lit::<T>(*r.numer() as f64) / lit::<T>(*r.denom() as f64),
            None => T::infinity(),
        }
    }

    /// Map p -> (a p) / (p + b), taking the finite limit a at infinity.
    /// Covers the derived exponents 2p/(p+2), 2q/(q+2), 2p/(p+1), ...
    pub fn scaled_conjugate_map(&self, a: i64, b: i64) -> Result<Exp> {
        match self.rat() {
            None => Exp::int(a),
            Some(r) => {
                let num = Rat::from_integer(a) * r;
                let den = r + Rat::from_integer(b);
                let out = num / den;
                Exp::new(*out.numer(), *out.denom())
            }
        }
    }

    /// Double the exponent (2p' and friends); infinity stays infinite.
    pub fn doubled(&self) -> Exp {
        match self.rat() {
            None => Exp::Inf,
            Some(r) => {
                let d = r * Rat::from_integer(2);
                Exp::Finite {
                    num: *d.numer(),
                    den: *d.denom(),
                }
            }
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::Inf => write!(f, "inf"),
            Exp::Finite { num, den } if *den == 1 => write!(f, "{num}"),
            Exp::Finite { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

impl FromStr for Exp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") || s == "oo" {
            return Ok(Exp::Inf);
        }
        if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad exponent '{s}'")))?;
            let den: i64 = b
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad exponent '{s}'")))?;
            return Exp::new(num, den);
        }
        let v: i64 = s
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad exponent '{s}'")))?;
        Exp::int(v)
    }
}

/// Space-time integrability pair (p, q) with its criticality
/// kappa = 3/p + 2/q and exact conjugates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exp,
    pub q: Exp,
}

impl ExponentPair {
    pub fn new(p: Exp, q: Exp) -> Result<Self> {
        let pair = Self { p, q };
        let k = pair.kappa();
        if k < Rat::from_integer(0) || k > Rat::from_integer(5) {
            return Err(Error::InvalidParam(format!(
                "criticality 3/p + 2/q = {k} outside [0, 5]"
            )));
        }
        Ok(pair)
    }

    pub fn ints(p: i64, q: i64) -> Result<Self> {
        Self::new(Exp::int(p)?, Exp::int(q)?)
    }

    /// kappa = 3/p + 2/q, exact.
    pub fn kappa(&self) -> Rat {
        Rat::from_integer(3) * self.p.recip() + Rat::from_integer(2) * self.q.recip()
    }

    pub fn kappa_float<T: Scalar>(&self) -> T {
        let k = self.kappa();
        lit::<T>(*k.numer() as f64) / lit::<T>(*k.denom() as f64)
    }

    /// Exact test of 3/p + 2/q = target.
    pub fn kappa_is(&self, num: i64, den: i64) -> bool {
        self.kappa() == Rat::new(num, den)
    }

    pub fn conjugate(&self) -> ExponentPair {
        ExponentPair {
            p: self.p.conjugate(),
            q: self.q.conjugate(),
        }
    }

    pub fn floats<T: Scalar>(&self) -> (T, T) {
        (self.p.to_float(), self.q.to_float())
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={})", self.p, self.q)
    }
}
