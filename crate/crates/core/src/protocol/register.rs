//! Register layout and the sparse joint state carried through a protocol.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{party_name, ProductState, SystemDims};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub owner: usize,
}

/// Registers in creation order. The first `n_main` are the parties' own
/// systems; the rest are ancillas from shared resources.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub registers: Vec<Register>,
    /// Per party, the main registers it holds, in merge order.
    pub main_of: Vec<Vec<usize>>,
    pub n_main: usize,
}

impl Layout {
    pub fn new(dims: &SystemDims) -> Self {
        let n = dims.n();
        Layout {
            registers: (0..n)
                .map(|k| Register {
                    name: party_name(k),
                    dim: dims.get(k),
                    owner: k,
                })
                .collect(),
            main_of: (0..n).map(|k| vec![k]).collect(),
            n_main: n,
        }
    }

    pub fn parties(&self) -> usize {
        self.main_of.len()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    pub fn ancillas_of(&self, p: usize) -> Vec<usize> {
        (self.n_main..self.registers.len())
            .filter(|&r| self.registers[r].owner == p)
            .collect()
    }

    pub fn main_dim(&self, p: usize) -> usize {
        self.main_of[p].iter().map(|&r| self.registers[r].dim).product()
    }

    /// Main registers first, then owned ancillas.
    pub fn local_registers(&self, p: usize) -> Vec<usize> {
        let mut v = self.main_of[p].clone();
        v.extend(self.ancillas_of(p));
        v
    }

    /// Flattened main index of party `p`, first merged register most significant.
    pub fn main_index(&self, p: usize, digits: &[usize]) -> usize {
        self.main_of[p]
            .iter()
            .fold(0, |acc, &r| acc * self.registers[r].dim + digits[r])
    }

    pub fn add_pair(&mut self, left: (usize, &str), right: (usize, &str), dim: usize) -> Result<()> {
        for (p, name) in [left, right] {
            if p >= self.parties() {
                return Err(Error::Protocol(format!("no party {p}")));
            }
            if self.find(name).is_some() {
                return Err(Error::Protocol(format!("register {name} already exists")));
            }
        }
        if left.1 == right.1 {
            return Err(Error::Protocol(format!("register {} used twice", left.1)));
        }
        for (p, name) in [left, right] {
            self.registers.push(Register {
                name: name.to_string(),
                dim,
                owner: p,
            });
        }
        Ok(())
    }

    /// Moves every main register of `from` to the end of `to`'s list and
    /// returns the dimension moved.
    pub fn teleport(&mut self, from: usize, to: usize) -> Result<usize> {
        if from == to || from >= self.parties() || to >= self.parties() {
            return Err(Error::Protocol(format!("bad teleport {from} -> {to}")));
        }
        let moved = std::mem::take(&mut self.main_of[from]);
        let dim = moved.iter().map(|&r| self.registers[r].dim).product();
        for &r in &moved {
            self.registers[r].owner = to;
        }
        self.main_of[to].extend(moved);
        Ok(dim)
    }

    /// Human-readable name of a party's merged system, e.g. "B~(B,C)".
    pub fn party_label(&self, p: usize) -> String {
        if self.main_of[p].len() == 1 && self.main_of[p][0] == p {
            return party_name(p);
        }
        let names: Vec<&str> = self.main_of[p].iter().map(|&r| self.registers[r].name.as_str()).collect();
        format!("{}~({})", party_name(p), names.join(","))
    }
}

/// Sparse amplitude list; each entry holds one digit per register.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    pub entries: Vec<(Vec<usize>, Complex64)>,
}

impl ExtendedState {
    pub fn from_product(ps: &ProductState) -> Self {
        let mut entries = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
        for f in &ps.factors {
            let mut next = Vec::with_capacity(entries.len() * f.support.len());
            for (d, a) in &entries {
                for (&s, &b) in f.support.iter().zip(&f.amps) {
                    let mut d2 = d.clone();
                    d2.push(s);
                    next.push((d2, a * b));
                }
            }
            entries = next;
        }
        let mut s = ExtendedState { entries };
        s.normalize();
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for (_, a) in &mut self.entries {
                *a /= n;
            }
        }
    }

    /// Appends |φ⁺(d)⟩ on two fresh registers.
    pub fn share(&mut self, dim: usize) {
        let c = 1.0 / (dim as f64).sqrt();
        let mut next = Vec::with_capacity(self.entries.len() * dim);
        for (d, a) in &self.entries {
            for v in 0..dim {
                let mut d2 = d.clone();
                d2.push(v);
                d2.push(v);
                next.push((d2, a * c));
            }
        }
        self.entries = next;
    }

    /// Keeps the entries accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&[usize]) -> bool) -> ExtendedState {
        ExtendedState {
            entries: self.entries.iter().filter(|(d, _)| keep(d)).cloned().collect(),
        }
    }

    pub fn inner(&self, other: &ExtendedState) -> Complex64 {
        use std::collections::HashMap;
        let map: HashMap<&[usize], Complex64> = other.entries.iter().map(|(d, a)| (d.as_slice(), *a)).collect();
        self.entries
            .iter()
            .filter_map(|(d, a)| map.get(d.as_slice()).map(|b| a.conj() * b))
            .sum()
    }

    /// Measures register `r` in the Fourier basis and keeps outcome `m`.
    /// The register is left in |0⟩ so register positions stay stable.
    /// Unnormalized.
    pub fn fourier_outcome(&self, r: usize, dim: usize, m: usize) -> ExtendedState {
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        let c = 1.0 / (dim as f64).sqrt();
        for (d, a) in &self.entries {
            let phase = crate::state::omega_power(dim as u64, -((m * d[r]) as i64)).unwrap();
            let mut key = d.clone();
            key[r] = 0;
            *acc.entry(key).or_default() += a * phase * c;
        }
        ExtendedState {
            entries: acc.into_iter().filter(|(_, a)| a.norm() > 1e-14).collect(),
        }
    }

    /// Distinct values register `r` takes.
    pub fn register_support(&self, r: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.entries.iter().map(|(d, _)| d[r]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
