//! Product-state arithmetic: local vectors, product states, bipartitions and
//! the root-of-unity vector builders shared by every construction.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Absolute tolerance for every orthogonality decision.
pub const ORTHO_TOL: f64 = 1e-9;

pub const PARTY_NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

pub fn party_name(k: usize) -> String {
    PARTY_NAMES
        .get(k)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("P{k}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SystemDims(Vec<usize>);

impl SystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return domain(format!("need at least 2 parties, got {}", dims.len()));
        }
        if let Some(k) = dims.iter().position(|&d| d < 2) {
            return domain(format!("party {} has dimension {} < 2", party_name(k), dims[k]));
        }
        let mut total: u64 = 1;
        for &d in &dims {
            total = total
                .checked_mul(d as u64)
                .ok_or_else(|| crate::Error::Domain("total dimension overflows u64".into()))?;
        }
        Ok(SystemDims(dims))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).product()
    }

    pub fn all_equal(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// Joint dimension of an ordered party list.
    pub fn joint(&self, parties: &[usize]) -> usize {
        parties.iter().map(|&k| self.0[k]).product()
    }
}

impl TryFrom<Vec<usize>> for SystemDims {
    type Error = crate::Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SystemDims::new(v)
    }
}

impl From<SystemDims> for Vec<usize> {
    fn from(d: SystemDims) -> Vec<usize> {
        d.0
    }
}

impl std::fmt::Display for SystemDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// exp(2πi·exponent/order), kept symbolic so products stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    order: u64,
    exponent: u64,
}

impl RootOfUnity {
    pub fn new(order: u64, exponent: i64) -> Result<Self> {
        if order == 0 {
            return domain("root of unity of order 0");
        }
        let e = exponent.rem_euclid(order as i64) as u64;
        Ok(RootOfUnity { order, exponent: e })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn value(&self) -> Complex64 {
        // exact on the axes, where cos/sin would leave 1e-16 residue
        let (n, e) = (self.order, self.exponent);
        if e == 0 {
            Complex64::new(1.0, 0.0)
        } else if 2 * e == n {
            Complex64::new(-1.0, 0.0)
        } else if 4 * e == n {
            Complex64::new(0.0, 1.0)
        } else if 4 * e == 3 * n {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::from_polar(1.0, TAU * e as f64 / n as f64)
        }
    }

    pub fn conj(&self) -> Self {
        RootOfUnity {
            order: self.order,
            exponent: (self.order - self.exponent) % self.order,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = lcm(self.order, other.order);
        let e = self.exponent * (order / self.order) + other.exponent * (order / other.order);
        RootOfUnity {
            order,
            exponent: e % order,
        }
    }

    /// Reduced form, so equal values compare equal.
    pub fn reduced(&self) -> Self {
        let g = gcd(self.order, self.exponent);
        let g = if g == 0 { self.order } else { g };
        RootOfUnity {
            order: self.order / g,
            exponent: self.exponent / g,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn omega_power(order: u64, exponent: i64) -> Result<Complex64> {
    Ok(RootOfUnity::new(order, exponent)?.value())
}

/// One party's factor: amplitudes over a subset of its computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalVector {
    pub party: usize,
    pub support: Vec<usize>,
    pub amps: Vec<Complex64>,
}

impl LocalVector {
    pub fn new(party: usize, d: usize, support: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        if support.is_empty() {
            return domain("empty support");
        }
        if support.len() != amps.len() {
            return domain("support and amplitude lengths differ");
        }
        let mut seen = vec![false; d];
        for &s in &support {
            if s >= d {
                return domain(format!("support index {s} exceeds local dimension {d}"));
            }
            if seen[s] {
                return domain(format!("repeated support index {s}"));
            }
            seen[s] = true;
        }
        if amps.iter().any(|a| a.norm() == 0.0) {
            return domain("zero amplitude listed in support");
        }
        Ok(LocalVector { party, support, amps })
    }

    pub fn basis(party: usize, d: usize, k: usize) -> Result<Self> {
        Self::new(party, d, vec![k], vec![Complex64::new(1.0, 0.0)])
    }

    pub fn amp(&self, k: usize) -> Complex64 {
        self.support
            .iter()
            .position(|&s| s == k)
            .map(|p| self.amps[p])
            .unwrap_or_default()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &LocalVector) -> Complex64 {
        self.support
            .iter()
            .zip(&self.amps)
            .map(|(&s, a)| a.conj() * other.amp(s))
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_dense(&self, d: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); d];
        for (&s, &a) in self.support.iter().zip(&self.amps) {
            v[s] = a;
        }
        v
    }

    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }
}

/// DFT-row vector: support `offset..offset+length` (with `0` prepended when
/// `zero_head` is set) and amplitude ω_order^{row·u} at position u.
pub fn dft_local_vector(
    party: usize,
    d: usize,
    offset: usize,
    length: usize,
    row: usize,
    order: usize,
    zero_head: bool,
) -> Result<LocalVector> {
    if length == 0 {
        return domain("dft vector of length 0");
    }
    if offset + length > d {
        return domain(format!(
            "support {offset}..{} exceeds local dimension {d}",
            offset + length - 1
        ));
    }
    if order == 0 || row >= order {
        return domain(format!("row {row} outside Z_{order}"));
    }
    if zero_head && offset == 0 {
        return domain("zero head overlaps the support");
    }
    let mut support = Vec::with_capacity(length + 1);
    if zero_head {
        support.push(0);
    }
    support.extend(offset..offset + length);
    let amps = (0..support.len())
        .map(|u| omega_power(order as u64, (row * u) as i64))
        .collect::<Result<Vec<_>>>()?;
    LocalVector::new(party, d, support, amps)
}

/// |a⟩ + sign·|b⟩
pub fn pm_local_vector(party: usize, d: usize, a: usize, b: usize, sign: i8) -> Result<LocalVector> {
    if a == b {
        return domain(format!("degenerate pair |{a}±{b}⟩"));
    }
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    LocalVector::new(
        party,
        d,
        vec![a, b],
        vec![Complex64::new(1.0, 0.0), Complex64::new(s, 0.0)],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateTag {
    pub subset: usize,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub factors: Vec<LocalVector>,
    pub tag: StateTag,
}

impl ProductState {
    pub fn new(factors: Vec<LocalVector>, tag: StateTag) -> Result<Self> {
        if let Some(k) = factors.iter().enumerate().position(|(k, f)| f.party != k) {
            return domain(format!("factor {k} is labelled for another party"));
        }
        Ok(ProductState { factors, tag })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.factors.iter().map(|f| f.norm_sqr()).product()
    }

    /// Full amplitude tensor, lexicographic in party order.
    pub fn to_dense(&self, dims: &SystemDims) -> Vec<Complex64> {
        let parties: Vec<usize> = (0..self.n()).collect();
        joint_dense(self, &parties, dims)
    }
}

/// ⟨x|y⟩ = Π_k ⟨x_k|y_k⟩
pub fn inner_product(x: &ProductState, y: &ProductState) -> Result<Complex64> {
    if x.n() != y.n() {
        return domain(format!("party counts differ: {} vs {}", x.n(), y.n()));
    }
    Ok(x.factors
        .iter()
        .zip(&y.factors)
        .map(|(a, b)| a.inner(b))
        .product())
}

/// Ordered split of the parties into X | Y.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl Bipartition {
    pub fn new(x: Vec<usize>, y: Vec<usize>, n: usize) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return domain("bipartition with an empty block");
        }
        let mut seen = vec![false; n];
        for &k in x.iter().chain(&y) {
            if k >= n {
                return domain(format!("party {k} out of range for {n} parties"));
            }
            if seen[k] {
                return domain(format!("party {} appears twice", party_name(k)));
            }
            seen[k] = true;
        }
        if seen.iter().any(|s| !s) {
            return domain("bipartition does not cover every party");
        }
        Ok(Bipartition { x, y })
    }

    /// X as given, Y = complement in ascending order.
    pub fn from_x(x: Vec<usize>, n: usize) -> Result<Self> {
        let y = (0..n).filter(|k| !x.contains(k)).collect();
        Self::new(x, y, n)
    }

    /// X_i: every party except `i`, listed cyclically from i+1.
    pub fn cyclic(i: usize, n: usize) -> Result<Self> {
        if i >= n {
            return domain(format!("party {i} out of range for {n} parties"));
        }
        let x = (1..n).map(|s| (i + s) % n).collect();
        Self::new(x, vec![i], n)
    }

    pub fn swapped(&self) -> Self {
        Bipartition {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    pub fn dim_x(&self, dims: &SystemDims) -> usize {
        dims.joint(&self.x)
    }

    pub fn dim_y(&self, dims: &SystemDims) -> usize {
        dims.joint(&self.y)
    }

    pub fn label(&self) -> String {
        let names = |v: &[usize]| v.iter().map(|&k| party_name(k)).collect::<String>();
        format!("{}|{}", names(&self.x), names(&self.y))
    }

    /// Parse "BC|A" or "BC" (Y implied).
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let party = |c: char| -> Result<usize> {
            PARTY_NAMES
                .iter()
                .position(|p| p.starts_with(c.to_ascii_uppercase()))
                .filter(|&k| k < n)
                .ok_or_else(|| crate::Error::Domain(format!("unknown party '{c}'")))
        };
        let parse_side = |t: &str| -> Result<Vec<usize>> { t.trim().chars().map(party).collect() };
        match s.split_once('|') {
            Some((x, y)) => Self::new(parse_side(x)?, parse_side(y)?, n),
            None => Self::from_x(parse_side(s)?, n),
        }
    }
}

/// Dense tensor of the listed parties' factors, first party most significant.
pub fn joint_dense(x: &ProductState, parties: &[usize], dims: &SystemDims) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for &k in parties {
        let f = x.factors[k].to_dense(dims.get(k));
        let mut next = Vec::with_capacity(out.len() * f.len());
        for a in &out {
            for b in &f {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// (X part, Y part) flattened under the bipartition.
pub fn group_vector(
    x: &ProductState,
    bip: &Bipartition,
    dims: &SystemDims,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if bip.x.is_empty() || bip.y.is_empty() {
        return domain("bipartition with an empty block");
    }
    if x.n() != dims.n() || bip.x.len() + bip.y.len() != dims.n() {
        return domain("party count mismatch");
    }
    Ok((joint_dense(x, &bip.x, dims), joint_dense(x, &bip.y, dims)))
}

/// Inverse of [`group_vector`]: the full vector in the natural party order.
pub fn ungroup(xv: &[Complex64], yv: &[Complex64], bip: &Bipartition, dims: &SystemDims) -> Vec<Complex64> {
    let radices = dims.as_slice();
    let rx: Vec<usize> = bip.x.iter().map(|&k| radices[k]).collect();
    let ry: Vec<usize> = bip.y.iter().map(|&k| radices[k]).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); dims.total() as usize];
    let mut digits = vec![0; radices.len()];
    for (i, a) in xv.iter().enumerate() {
        for (k, d) in bip.x.iter().zip(unflatten(i, &rx)) {
            digits[*k] = d;
        }
        for (j, b) in yv.iter().enumerate() {
            for (k, d) in bip.y.iter().zip(unflatten(j, &ry)) {
                digits[*k] = d;
            }
            out[flatten(&digits, radices)] = a * b;
        }
    }
    out
}

/// Flattened joint index of per-party digits (first most significant).
pub fn flatten(digits: &[usize], radices: &[usize]) -> usize {
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
}

pub fn unflatten(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        out[k] = idx % radices[k];
        idx /= radices[k];
    }
    out
}
