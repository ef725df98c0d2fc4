//! Resource configurations and exact ebit bookkeeping.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::party_name;

pub type Q = Ratio<i64>;

/// Σ c_p · log₂ p over primes p with rational coefficients. The p = 2 term
/// is the rational part.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogSum(BTreeMap<u64, Q>);

fn factorize(mut n: u64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

impl LogSum {
    pub fn zero() -> Self {
        LogSum::default()
    }

    /// log₂ n, exactly.
    pub fn log2(n: u64) -> Self {
        assert!(n > 0, "log of zero");
        let mut s = LogSum::zero();
        for (p, e) in factorize(n) {
            s.0.insert(p, Q::from_integer(e));
        }
        s
    }

    pub fn rational(q: Q) -> Self {
        let mut s = LogSum::zero();
        s.add_term(2, q);
        s
    }

    fn add_term(&mut self, p: u64, c: Q) {
        let e = self.0.entry(p).or_insert_with(|| Q::from_integer(0));
        *e += c;
        if *e.numer() == 0 {
            self.0.remove(&p);
        }
    }

    pub fn add(&self, other: &LogSum) -> LogSum {
        let mut s = self.clone();
        for (&p, &c) in &other.0 {
            s.add_term(p, c);
        }
        s
    }

    pub fn scale(&self, q: Q) -> LogSum {
        let mut s = LogSum::zero();
        for (&p, &c) in &self.0 {
            s.add_term(p, c * q);
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Q)> + '_ {
        self.0.iter().map(|(&p, &c)| (p, c))
    }

    /// N with self = log₂ N, when every coefficient is a non-negative integer.
    pub fn single_log(&self) -> Option<u64> {
        let mut n: u64 = 1;
        for (&p, c) in &self.0 {
            if !c.is_integer() || *c.numer() < 0 {
                return None;
            }
            n = n.checked_mul(p.checked_pow(u32::try_from(*c.numer()).ok()?)?)?;
        }
        Some(n)
    }

    pub fn to_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|(&p, c)| (*c.numer() as f64 / *c.denom() as f64) * (p as f64).log2())
            .sum()
    }
}

impl fmt::Display for LogSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&p, c) in &self.0 {
            let neg = *c.numer() < 0;
            let a = if neg { -*c } else { *c };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let one = a == Q::from_integer(1);
            match (p, one) {
                (2, _) => write!(f, "{a}")?,
                (_, true) => write!(f, "log2({p})")?,
                _ => write!(f, "{a}*log2({p})")?,
            }
        }
        Ok(())
    }
}

impl Serialize for LogSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Best rational approximation with denominator at most `max_den`, accepted
/// only when it reproduces `x` to `tol`.
pub fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - x).abs() <= tol {
            return Some(Q::new(h1, k1));
        }
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 > 0 && ((h1 as f64) / (k1 as f64) - x).abs() <= tol).then(|| Q::new(h1, k1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    /// Average number of copies consumed.
    #[serde(with = "ratio_str")]
    pub amount: Q,
    pub dim: usize,
    pub parties: (usize, usize),
}

impl ResourceEntry {
    pub fn new(amount: Q, dim: usize, parties: (usize, usize)) -> Result<Self> {
        if amount < Q::from_integer(0) {
            return Err(Error::Protocol("negative resource amount".into()));
        }
        if dim < 2 {
            return Err(Error::Protocol(format!("resource dimension {dim} < 2")));
        }
        if parties.0 == parties.1 {
            return Err(Error::Protocol("resource shared by a party with itself".into()));
        }
        Ok(ResourceEntry { amount, dim, parties })
    }

    pub fn ebits_per_copy(&self) -> LogSum {
        LogSum::log2(self.dim as u64)
    }

    pub fn label(&self) -> String {
        format!(
            "({}, phi+({})_{}{})",
            self.amount,
            self.dim,
            party_name(self.parties.0),
            party_name(self.parties.1)
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceConfig {
    pub entries: Vec<ResourceEntry>,
}

impl ResourceConfig {
    pub fn total_ebits(&self) -> LogSum {
        self.entries
            .iter()
            .fold(LogSum::zero(), |acc, e| acc.add(&e.ebits_per_copy().scale(e.amount)))
    }
}

mod ratio_str {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Q>().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_terms() {
        assert_eq!(LogSum::log2(27).to_string(), "3*log2(3)");
        assert_eq!(LogSum::log2(4).to_string(), "2");
        let s = LogSum::log2(2).add(&LogSum::log2(12));
        assert_eq!(s.to_string(), "3 + log2(3)");
        assert!((s.to_f64() - (3.0 + 3f64.log2())).abs() < 1e-12);
        assert!(LogSum::log2(6).add(&LogSum::log2(6).scale(Q::from_integer(-1))).is_zero());
        assert_eq!(LogSum::log2(27).single_log(), Some(27));
        assert_eq!(s.single_log(), Some(24));
        assert_eq!(LogSum::rational(Q::new(9, 4)).single_log(), None);
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(rationalize(1.25, 1_000_000, 1e-12), Some(Q::new(5, 4)));
        assert_eq!(rationalize(4.0 / 3.0, 1_000_000, 1e-12), Some(Q::new(4, 3)));
        assert_eq!(rationalize(0.0, 10, 1e-12), Some(Q::from_integer(0)));
        assert_eq!(rationalize(std::f64::consts::PI, 100, 1e-12), None);
    }

    #[test]
    fn config_total() {
        let c = ResourceConfig {
            entries: vec![
                ResourceEntry::new(Q::from_integer(1), 2, (0, 1)).unwrap(),
                ResourceEntry::new(Q::from_integer(1), 4, (1, 2)).unwrap(),
            ],
        };
        assert_eq!(c.total_ebits(), LogSum::rational(Q::from_integer(3)));
        assert!(ResourceEntry::new(Q::from_integer(1), 1, (0, 1)).is_err());
    }
}
