//! The orthogonal product set families, their closed-form sizes, and the
//! JSON interchange format.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::state::{
    dft_local_vector, inner_product, party_name, pm_local_vector, LocalVector, ProductState,
    StateTag, SystemDims, ORTHO_TOL,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OpsFamilyId {
    /// 3⊗3 domino set.
    Bennett33,
    /// 24-state set in 3⊗3⊗3.
    Yuan333,
    /// Twelve-subset family in dA⊗dB⊗dC, all d ≥ 3.
    H12,
    /// 48-state set in 4⊗4⊗4.
    S48,
    /// Twenty-four-subset family in dA⊗dB⊗dC, all d ≥ 4.
    H8x3,
    /// Four-party family, all d ≥ 3.
    U4party,
    /// Anything loaded from a file that is not one of the above.
    Custom(String),
}

impl OpsFamilyId {
    pub const BUILTIN: [OpsFamilyId; 6] = [
        OpsFamilyId::Bennett33,
        OpsFamilyId::Yuan333,
        OpsFamilyId::H12,
        OpsFamilyId::S48,
        OpsFamilyId::H8x3,
        OpsFamilyId::U4party,
    ];

    pub fn name(&self) -> &str {
        match self {
            OpsFamilyId::Bennett33 => "Bennett33",
            OpsFamilyId::Yuan333 => "Yuan333",
            OpsFamilyId::H12 => "H12",
            OpsFamilyId::S48 => "S48",
            OpsFamilyId::H8x3 => "H8x3",
            OpsFamilyId::U4party => "U4party",
            OpsFamilyId::Custom(s) => s,
        }
    }

    pub fn parse(s: &str) -> OpsFamilyId {
        Self::BUILTIN
            .iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .cloned()
            .unwrap_or_else(|| OpsFamilyId::Custom(s.to_string()))
    }

    /// Checks `dims` against the family's admissibility bound.
    pub fn admissible(&self, dims: &SystemDims) -> Result<()> {
        let d = dims.as_slice();
        let exact = |want: &[usize]| {
            if d == want {
                Ok(())
            } else {
                domain(format!("{} is defined only for dims {:?}, got {}", self.name(), want, dims))
            }
        };
        let lower = |n: usize, min: usize| {
            if d.len() != n {
                return domain(format!("{} needs {n} parties, got {}", self.name(), d.len()));
            }
            match d.iter().position(|&x| x < min) {
                Some(k) => domain(format!(
                    "{} needs every dimension >= {min}, but d_{} = {}",
                    self.name(),
                    party_name(k),
                    d[k]
                )),
                None => Ok(()),
            }
        };
        match self {
            OpsFamilyId::Bennett33 => exact(&[3, 3]),
            OpsFamilyId::Yuan333 => exact(&[3, 3, 3]),
            OpsFamilyId::S48 => exact(&[4, 4, 4]),
            OpsFamilyId::H12 => lower(3, 3),
            OpsFamilyId::H8x3 => lower(3, 4),
            OpsFamilyId::U4party => lower(4, 3),
            OpsFamilyId::Custom(_) => Ok(()),
        }
    }
}

impl fmt::Display for OpsFamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for OpsFamilyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OpsFamilyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(OpsFamilyId::parse(&s))
    }
}

/// One tile S_r: its per-party basis block and the states living on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Subset {
    pub label: String,
    pub block: Vec<Vec<usize>>,
    pub states: Vec<ProductState>,
}

impl Subset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpsInstance {
    pub dims: SystemDims,
    pub family: OpsFamilyId,
    pub subsets: Vec<Subset>,
}

impl OpsInstance {
    /// Validates supports, block disjointness and pairwise orthogonality.
    pub fn new(dims: SystemDims, family: OpsFamilyId, mut subsets: Vec<Subset>) -> Result<Self> {
        let n = dims.n();
        for (r, s) in subsets.iter_mut().enumerate() {
            if s.block.len() != n {
                return domain(format!("subset {} has a block over {} parties", s.label, s.block.len()));
            }
            for (k, b) in s.block.iter_mut().enumerate() {
                b.sort_unstable();
                b.dedup();
                if b.is_empty() || b.iter().any(|&i| i >= dims.get(k)) {
                    return domain(format!("subset {} has an invalid block on party {}", s.label, party_name(k)));
                }
            }
            for (idx, st) in s.states.iter_mut().enumerate() {
                st.tag = StateTag { subset: r, index: idx };
                if st.n() != n {
                    return domain(format!("state in {} has {} factors", s.label, st.n()));
                }
                for (k, f) in st.factors.iter().enumerate() {
                    if f.party != k || f.support.iter().any(|&i| i >= dims.get(k)) {
                        return domain(format!("state in {} has a bad factor on party {}", s.label, party_name(k)));
                    }
                    if f.sorted_support() != s.block[k] {
                        return domain(format!(
                            "state {} of {} does not have full support on its block at party {}",
                            idx,
                            s.label,
                            party_name(k)
                        ));
                    }
                }
            }
        }
        for a in 0..subsets.len() {
            for b in a + 1..subsets.len() {
                if !blocks_disjoint(&subsets[a].block, &subsets[b].block) {
                    return domain(format!("blocks of {} and {} intersect", subsets[a].label, subsets[b].label));
                }
            }
        }
        let ops = OpsInstance { dims, family, subsets };
        if let Some((x, y, v)) = ops.first_non_orthogonal_pair() {
            return domain(format!("states {x} and {y} are not orthogonal (|<x|y>| = {v:e})"));
        }
        Ok(ops)
    }

    pub fn n(&self) -> usize {
        self.dims.n()
    }

    pub fn len(&self) -> usize {
        self.subsets.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self) -> impl Iterator<Item = &ProductState> {
        self.subsets.iter().flat_map(|s| s.states.iter())
    }

    pub fn state_label(&self, tag: StateTag) -> String {
        format!("{}#{}", self.subsets[tag.subset].label, tag.index)
    }

    pub fn subset_index(&self, label: &str) -> Option<usize> {
        self.subsets.iter().position(|s| s.label == label)
    }

    /// First pair with |⟨x|y⟩| ≥ tolerance, by label.
    pub fn first_non_orthogonal_pair(&self) -> Option<(String, String, f64)> {
        let all: Vec<&ProductState> = self.states().collect();
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                let v = inner_product(all[a], all[b]).map(|z| z.norm()).unwrap_or(f64::INFINITY);
                if v >= ORTHO_TOL {
                    return Some((self.state_label(all[a].tag), self.state_label(all[b].tag), v));
                }
            }
        }
        None
    }

    /// Copy without the named subsets.
    pub fn without(&self, labels: &[&str]) -> Result<OpsInstance> {
        let subsets = self
            .subsets
            .iter()
            .filter(|s| !labels.contains(&s.label.as_str()))
            .cloned()
            .collect();
        OpsInstance::new(self.dims.clone(), self.family.clone(), subsets)
    }
}

pub fn blocks_disjoint(a: &[Vec<usize>], b: &[Vec<usize>]) -> bool {
    a.iter().zip(b).any(|(x, y)| !x.iter().any(|i| y.contains(i)))
}

/// Factor shapes appearing in the families; `Top` is d' = d − 1.
#[derive(Clone, Copy, Debug)]
enum F {
    K(usize),
    Top,
    Pm(usize, usize),
    PmTop,
    Xi,
    Eta,
    Gamma,
    Alpha,
    Alpha0,
    Alpha1,
    Alpha3,
}

impl F {
    /// (index letter, number of rows) for DFT-type factors.
    fn rows(self, d: usize) -> Option<(char, usize)> {
        match self {
            F::Xi => Some(('i', d - 2)),
            F::Eta => Some(('j', d - 1)),
            F::Gamma => Some(('k', d - 1)),
            F::Alpha => Some(('i', d - 3)),
            F::Alpha0 => Some(('j', d - 2)),
            F::Alpha1 => Some(('k', d - 2)),
            F::Alpha3 => Some(('l', d - 2)),
            _ => None,
        }
    }

    fn vector(self, party: usize, d: usize, row: usize, sign: i8) -> Result<LocalVector> {
        match self {
            F::K(k) => LocalVector::basis(party, d, k),
            F::Top => LocalVector::basis(party, d, d - 1),
            F::Pm(a, b) => pm_local_vector(party, d, a, b, sign),
            F::PmTop => pm_local_vector(party, d, 0, d - 1, sign),
            F::Xi => dft_local_vector(party, d, 1, d - 2, row, d - 2, false),
            F::Eta => dft_local_vector(party, d, 0, d - 1, row, d - 1, false),
            F::Gamma => dft_local_vector(party, d, 1, d - 1, row, d - 1, false),
            F::Alpha => dft_local_vector(party, d, 2, d - 3, row, d - 3, false),
            F::Alpha0 => dft_local_vector(party, d, 2, d - 3, row, d - 2, true),
            F::Alpha1 => dft_local_vector(party, d, 1, d - 2, row, d - 2, false),
            F::Alpha3 => dft_local_vector(party, d, 2, d - 2, row, d - 2, false),
        }
    }

    fn is_pm(self) -> bool {
        matches!(self, F::Pm(..) | F::PmTop)
    }
}

/// Enumerates one subset. Rows are ordered by index letter (i, j, k, l),
/// party order breaking ties; the ± sign varies fastest.
fn expand(label: &str, shape: &[F], dims: &SystemDims) -> Result<Subset> {
    let n = dims.n();
    let mut axes: Vec<(char, usize, usize)> = Vec::new(); // (letter, party, rows)
    let mut pm_party = None;
    for (k, f) in shape.iter().enumerate() {
        if let Some((c, rows)) = f.rows(dims.get(k)) {
            axes.push((c, k, rows));
        }
        if f.is_pm() {
            pm_party = Some(k);
        }
    }
    axes.sort_by_key(|&(c, k, _)| (c, k));
    let signs: &[i8] = if pm_party.is_some() { &[1, -1] } else { &[1] };
    let radices: Vec<usize> = axes.iter().map(|a| a.2).collect();
    let count: usize = radices.iter().product();
    let mut states = Vec::new();
    for flat in 0..count {
        let rows = crate::state::unflatten(flat, &radices);
        for &sign in signs {
            let mut factors = Vec::with_capacity(n);
            for (k, f) in shape.iter().enumerate() {
                let row = axes
                    .iter()
                    .position(|a| a.1 == k)
                    .map(|p| rows[p])
                    .unwrap_or(0);
                factors.push(f.vector(k, dims.get(k), row, sign)?);
            }
            let tag = StateTag { subset: 0, index: states.len() };
            states.push(ProductState::new(factors, tag)?);
        }
    }
    let block = states[0].factors.iter().map(|f| f.sorted_support()).collect();
    Ok(Subset {
        label: label.to_string(),
        block,
        states,
    })
}

fn shapes(family: &OpsFamilyId) -> Vec<(&'static str, Vec<F>)> {
    use F::*;
    let p01 = Pm(0, 1);
    let p02 = Pm(0, 2);
    let p12 = Pm(1, 2);
    let p23 = Pm(2, 3);
    match family {
        OpsFamilyId::Bennett33 => vec![
            ("S_1", vec![K(0), p01]),
            ("S_2", vec![p12, K(0)]),
            ("S_3", vec![K(2), p12]),
            ("S_4", vec![p01, K(2)]),
        ],
        OpsFamilyId::Yuan333 => vec![
            ("S_1", vec![K(0), K(1), p01]),
            ("S_2", vec![K(1), p01, K(0)]),
            ("S_3", vec![p01, K(0), K(1)]),
            ("S_4", vec![K(1), K(2), p01]),
            ("S_5", vec![K(2), p01, K(1)]),
            ("S_6", vec![p01, K(1), K(2)]),
            ("S_7", vec![K(0), K(2), p02]),
            ("S_8", vec![K(2), p02, K(0)]),
            ("S_9", vec![p02, K(0), K(2)]),
            ("S_10", vec![K(2), K(1), p02]),
            ("S_11", vec![K(1), p02, K(2)]),
            ("S_12", vec![p02, K(2), K(1)]),
        ],
        OpsFamilyId::H12 => vec![
            ("H_1", vec![K(0), Xi, Eta]),
            ("H_2", vec![Xi, Eta, K(0)]),
            ("H_3", vec![Eta, K(0), Xi]),
            ("H_4", vec![Xi, Top, Eta]),
            ("H_5", vec![Top, Eta, Xi]),
            ("H_6", vec![Eta, Xi, Top]),
            ("H_7", vec![K(0), Top, PmTop]),
            ("H_8", vec![Top, PmTop, K(0)]),
            ("H_9", vec![PmTop, K(0), Top]),
            ("H_10", vec![Top, Xi, PmTop]),
            ("H_11", vec![Xi, PmTop, Top]),
            ("H_12", vec![PmTop, Top, Xi]),
        ],
        OpsFamilyId::S48 => vec![
            ("S_11", vec![K(0), K(1), p23]),
            ("S_12", vec![K(1), p23, K(0)]),
            ("S_13", vec![p23, K(0), K(1)]),
            ("S_21", vec![K(0), K(2), p12]),
            ("S_22", vec![K(2), p12, K(0)]),
            ("S_23", vec![p12, K(0), K(2)]),
            ("S_31", vec![K(0), K(3), p02]),
            ("S_32", vec![K(3), p02, K(0)]),
            ("S_33", vec![p02, K(0), K(3)]),
            ("S_41", vec![K(1), K(0), p01]),
            ("S_42", vec![K(0), p01, K(1)]),
            ("S_43", vec![p01, K(1), K(0)]),
            ("S_51", vec![K(1), K(3), p23]),
            ("S_52", vec![K(3), p23, K(1)]),
            ("S_53", vec![p23, K(1), K(3)]),
            ("S_61", vec![K(2), K(3), p12]),
            ("S_62", vec![K(3), p12, K(2)]),
            ("S_63", vec![p12, K(2), K(3)]),
            ("S_71", vec![K(3), K(0), p23]),
            ("S_72", vec![K(0), p23, K(3)]),
            ("S_73", vec![p23, K(3), K(0)]),
            ("S_81", vec![K(3), K(1), p01]),
            ("S_82", vec![K(1), p01, K(3)]),
            ("S_83", vec![p01, K(3), K(1)]),
        ],
        OpsFamilyId::H8x3 => vec![
            ("H_11", vec![K(0), K(1), Alpha3]),
            ("H_12", vec![K(1), Alpha3, K(0)]),
            ("H_13", vec![Alpha3, K(0), K(1)]),
            ("H_21", vec![K(0), Alpha, Alpha1]),
            ("H_22", vec![Alpha, Alpha1, K(0)]),
            ("H_23", vec![Alpha1, K(0), Alpha]),
            ("H_31", vec![K(0), Top, Alpha0]),
            ("H_32", vec![Top, Alpha0, K(0)]),
            ("H_33", vec![Alpha0, K(0), Top]),
            ("H_41", vec![K(1), K(0), p01]),
            ("H_42", vec![K(0), p01, K(1)]),
            ("H_43", vec![p01, K(1), K(0)]),
            ("H_51", vec![K(1), Top, Alpha3]),
            ("H_52", vec![Top, Alpha3, K(1)]),
            ("H_53", vec![Alpha3, K(1), Top]),
            ("H_61", vec![Alpha, Top, Alpha1]),
            ("H_62", vec![Top, Alpha1, Alpha]),
            ("H_63", vec![Alpha1, Alpha, Top]),
            ("H_71", vec![Top, K(0), Alpha3]),
            ("H_72", vec![K(0), Alpha3, Top]),
            ("H_73", vec![Alpha3, Top, K(0)]),
            ("H_81", vec![Top, K(1), p01]),
            ("H_82", vec![K(1), p01, Top]),
            ("H_83", vec![p01, Top, K(1)]),
        ],
        OpsFamilyId::U4party => vec![
            ("U_11", vec![K(0), Xi, Eta, PmTop]),
            ("U_12", vec![Xi, Eta, PmTop, K(0)]),
            ("U_13", vec![Eta, PmTop, K(0), Xi]),
            ("U_14", vec![PmTop, K(0), Xi, Eta]),
            ("U_21", vec![Xi, Top, Gamma, Eta]),
            ("U_22", vec![Top, Gamma, Eta, Xi]),
            ("U_23", vec![Gamma, Eta, Xi, Top]),
            ("U_24", vec![Eta, Xi, Top, Gamma]),
            ("U_31", vec![Top, K(0), PmTop, Gamma]),
            ("U_32", vec![K(0), PmTop, Gamma, Top]),
            ("U_33", vec![PmTop, Gamma, Top, K(0)]),
            ("U_34", vec![Gamma, Top, K(0), PmTop]),
            ("U_41", vec![Xi, Xi, K(0), Gamma]),
            ("U_42", vec![Xi, K(0), Gamma, Xi]),
            ("U_43", vec![K(0), Gamma, Xi, Xi]),
            ("U_44", vec![Gamma, Xi, Xi, K(0)]),
            ("U_51", vec![Top, Top, Xi, PmTop]),
            ("U_52", vec![Top, Xi, PmTop, Top]),
            ("U_53", vec![Xi, PmTop, Top, Top]),
            ("U_54", vec![PmTop, Top, Top, Xi]),
            ("U_61", vec![K(0), K(0), Top, Eta]),
            ("U_62", vec![K(0), Top, Eta, K(0)]),
            ("U_63", vec![Top, Eta, K(0), K(0)]),
            ("U_64", vec![Eta, K(0), K(0), Top]),
            ("U_71", vec![K(0), Xi, K(0), Xi]),
            ("U_72", vec![Xi, K(0), Xi, K(0)]),
            ("U_81", vec![K(0), Top, K(0), Top]),
            ("U_82", vec![Top, K(0), Top, K(0)]),
            ("U_91", vec![Xi, Top, Xi, Top]),
            ("U_92", vec![Top, Xi, Top, Xi]),
        ],
        OpsFamilyId::Custom(_) => vec![],
    }
}

pub fn build(family: &OpsFamilyId, dims: &SystemDims) -> Result<OpsInstance> {
    if let OpsFamilyId::Custom(name) = family {
        return domain(format!("no constructor for custom family '{name}'"));
    }
    family.admissible(dims)?;
    let subsets = shapes(family)
        .iter()
        .map(|(label, shape)| expand(label, shape, dims))
        .collect::<Result<Vec<_>>>()?;
    OpsInstance::new(dims.clone(), family.clone(), subsets)
}

/// Closed-form set size.
pub fn expected_size(family: &OpsFamilyId, dims: &SystemDims) -> Result<usize> {
    family.admissible(dims)?;
    let d = dims.as_slice();
    let pair_sum = |d: &[usize]| d[0] * d[1] + d[1] * d[2] + d[0] * d[2];
    let sum = |d: &[usize]| d.iter().sum::<usize>();
    Ok(match family {
        OpsFamilyId::Bennett33 => 8,
        OpsFamilyId::Yuan333 => 24,
        OpsFamilyId::S48 => 48,
        OpsFamilyId::H12 => 2 * (pair_sum(d) + 3 - 2 * sum(d)),
        OpsFamilyId::H8x3 => 2 * (pair_sum(d) + 12 - 3 * sum(d)),
        OpsFamilyId::U4party => {
            d.iter().product::<usize>() - d.iter().map(|x| x - 2).product::<usize>() - 2
        }
        OpsFamilyId::Custom(name) => return domain(format!("no closed form for custom family '{name}'")),
    })
}

/// N = max_r |S_r|.
pub fn max_block_statistic(ops: &OpsInstance) -> usize {
    ops.subsets.iter().map(|s| s.len()).max().unwrap_or(0)
}

/// Moves party k's factor to party k+1 (mod n).
pub fn cyclic_shift(x: &ProductState) -> ProductState {
    let n = x.n();
    let factors = (0..n)
        .map(|k| {
            let mut f = x.factors[(k + n - 1) % n].clone();
            f.party = k;
            f
        })
        .collect();
    ProductState { factors, tag: x.tag }
}

/// Whether the cyclic party permutation maps the set of rays onto itself.
pub fn check_symmetric(ops: &OpsInstance) -> Result<bool> {
    if !ops.dims.all_equal() {
        return domain(format!("symmetry needs equal dimensions, got {}", ops.dims));
    }
    let all: Vec<&ProductState> = ops.states().collect();
    let norms: Vec<f64> = all.iter().map(|s| s.norm_sqr()).collect();
    for x in &all {
        let y = cyclic_shift(x);
        let ny = y.norm_sqr();
        let found = all.iter().zip(&norms).any(|(z, &nz)| {
            let ov = inner_product(&y, z).map(|v| v.norm_sqr()).unwrap_or(0.0);
            ov >= (1.0 - ORTHO_TOL) * ny * nz
        });
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Serialize, Deserialize)]
struct OpsFile {
    dims: Vec<usize>,
    family: String,
    subsets: Vec<SubsetFile>,
}

type FactorFile = (usize, Vec<(usize, f64, f64)>);

#[derive(Serialize, Deserialize)]
struct SubsetFile {
    label: String,
    block: Vec<Vec<usize>>,
    states: Vec<Vec<FactorFile>>,
}

impl OpsInstance {
    pub fn to_json(&self) -> Result<String> {
        let file = OpsFile {
            dims: self.dims.as_slice().to_vec(),
            family: self.family.name().to_string(),
            subsets: self
                .subsets
                .iter()
                .map(|s| SubsetFile {
                    label: s.label.clone(),
                    block: s.block.clone(),
                    states: s
                        .states
                        .iter()
                        .map(|st| {
                            st.factors
                                .iter()
                                .map(|f| {
                                    let entries = f
                                        .support
                                        .iter()
                                        .zip(&f.amps)
                                        .map(|(&i, a)| (i, a.re, a.im))
                                        .collect();
                                    (f.party, entries)
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: OpsFile = serde_json::from_str(text)?;
        let dims = SystemDims::new(file.dims)?;
        let mut subsets = Vec::with_capacity(file.subsets.len());
        for (r, s) in file.subsets.into_iter().enumerate() {
            let mut states = Vec::with_capacity(s.states.len());
            for (idx, st) in s.states.into_iter().enumerate() {
                let mut factors = Vec::with_capacity(st.len());
                for (party, entries) in st {
                    if party >= dims.n() {
                        return Err(Error::Format(format!("party {party} out of range")));
                    }
                    let (support, amps) = entries
                        .into_iter()
                        .map(|(i, re, im)| (i, Complex64::new(re, im)))
                        .unzip();
                    factors.push(LocalVector::new(party, dims.get(party), support, amps)?);
                }
                factors.sort_by_key(|f| f.party);
                states.push(ProductState::new(factors, StateTag { subset: r, index: idx })?);
            }
            subsets.push(Subset {
                label: s.label,
                block: s.block,
                states,
            });
        }
        OpsInstance::new(dims, OpsFamilyId::parse(&file.family), subsets)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Small hand-made sets used as controls.
pub mod toy {
    use super::*;

    fn basis_subset(label: &str, dims: &SystemDims, ket: &[usize]) -> Result<Subset> {
        let factors = ket
            .iter()
            .enumerate()
            .map(|(k, &i)| LocalVector::basis(k, dims.get(k), i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Subset {
            label: label.to_string(),
            block: ket.iter().map(|&i| vec![i]).collect(),
            states: vec![ProductState::new(factors, StateTag { subset: 0, index: 0 })?],
        })
    }

    /// One subset per computational basis ket.
    pub fn full_basis(dims: &SystemDims) -> Result<OpsInstance> {
        let radices = dims.as_slice();
        let subsets = (0..dims.total() as usize)
            .map(|i| {
                let ket = crate::state::unflatten(i, radices);
                let label = format!("|{}>", ket.iter().map(|d| d.to_string()).collect::<String>());
                basis_subset(&label, dims, &ket)
            })
            .collect::<Result<Vec<_>>>()?;
        OpsInstance::new(dims.clone(), OpsFamilyId::Custom("full-basis".into()), subsets)
    }

    /// {|0⟩|0⟩}, {|1⟩|1⟩} in 2⊗2.
    pub fn disjoint_tiles() -> Result<OpsInstance> {
        let dims = SystemDims::new(vec![2, 2])?;
        let subsets = vec![
            basis_subset("T_1", &dims, &[0, 0])?,
            basis_subset("T_2", &dims, &[1, 1])?,
        ];
        OpsInstance::new(dims, OpsFamilyId::Custom("disjoint-tiles".into()), subsets)
    }

    /// A single basis ket as the whole set.
    pub fn single(dims: &SystemDims, ket: &[usize]) -> Result<OpsInstance> {
        OpsInstance::new(
            dims.clone(),
            OpsFamilyId::Custom("single".into()),
            vec![basis_subset("T_1", dims, ket)?],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(v: &[usize]) -> SystemDims {
        SystemDims::new(v.to_vec()).unwrap()
    }

    #[test]
    fn yuan_first_subset() {
        let ops = build(&OpsFamilyId::Yuan333, &dims(&[3, 3, 3])).unwrap();
        assert_eq!(ops.len(), 24);
        assert_eq!(ops.subsets.len(), 12);
        let s1 = &ops.subsets[0];
        assert_eq!(s1.label, "S_1");
        assert_eq!(s1.block, vec![vec![0], vec![1], vec![0, 1]]);
        assert_eq!(s1.states[1].factors[2].amps[1], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn sizes_at_anchor_dims() {
        for (f, d, n) in [
            (OpsFamilyId::H12, vec![3, 3, 3], 24),
            (OpsFamilyId::H8x3, vec![4, 4, 4], 48),
            (OpsFamilyId::U4party, vec![3, 3, 3, 3], 78),
            (OpsFamilyId::Bennett33, vec![3, 3], 8),
            (OpsFamilyId::S48, vec![4, 4, 4], 48),
        ] {
            let d = dims(&d);
            assert_eq!(build(&f, &d).unwrap().len(), n, "{f}");
            assert_eq!(expected_size(&f, &d).unwrap(), n, "{f}");
        }
        assert_eq!(expected_size(&OpsFamilyId::U4party, &dims(&[4, 4, 4, 4])).unwrap(), 238);
    }

    #[test]
    fn admissibility_errors() {
        let e = build(&OpsFamilyId::H8x3, &dims(&[3, 3, 3])).unwrap_err();
        assert!(e.to_string().contains(">= 4"), "{e}");
        assert!(build(&OpsFamilyId::S48, &dims(&[4, 4, 5])).is_err());
        assert!(build(&OpsFamilyId::U4party, &dims(&[3, 3, 3])).is_err());
        assert!(expected_size(&OpsFamilyId::Custom("x".into()), &dims(&[2, 2])).is_err());
    }

    #[test]
    fn symmetry() {
        let y = build(&OpsFamilyId::Yuan333, &dims(&[3, 3, 3])).unwrap();
        assert!(check_symmetric(&y).unwrap());
        let b = build(&OpsFamilyId::Bennett33, &dims(&[3, 3])).unwrap();
        assert!(!check_symmetric(&b).unwrap());
        let t = toy::single(&dims(&[2, 2, 2]), &[0, 0, 0]).unwrap();
        assert!(check_symmetric(&t).unwrap());
        let h = build(&OpsFamilyId::H12, &dims(&[3, 4, 4])).unwrap();
        assert!(check_symmetric(&h).is_err());
    }

    #[test]
    fn block_statistic() {
        let s = build(&OpsFamilyId::S48, &dims(&[4, 4, 4])).unwrap();
        assert_eq!(max_block_statistic(&s), 2);
        let h = build(&OpsFamilyId::H12, &dims(&[4, 4, 4])).unwrap();
        assert_eq!(max_block_statistic(&h), 6);
    }

    #[test]
    fn h8x3_at_four_is_the_48_set() {
        let a = build(&OpsFamilyId::H8x3, &dims(&[4, 4, 4])).unwrap();
        let b = build(&OpsFamilyId::S48, &dims(&[4, 4, 4])).unwrap();
        for (x, y) in a.subsets.iter().zip(&b.subsets) {
            assert_eq!(x.block, y.block, "{} vs {}", x.label, y.label);
        }
    }

    #[test]
    fn ordering_inside_subsets() {
        let h = build(&OpsFamilyId::H12, &dims(&[4, 4, 4])).unwrap();
        let h1 = &h.subsets[0];
        // outer i on B, inner j on C
        assert_eq!(h1.states[1].factors[2].amps[1], omega(3, 1));
        assert_eq!(h1.states[3].factors[1].amps[1], Complex64::new(-1.0, 0.0));
        let h10 = &h.subsets[9];
        assert_eq!(h10.states[1].factors[2].amps[1], Complex64::new(-1.0, 0.0));
        assert_eq!(h10.states[2].factors[1].amps[1], Complex64::new(-1.0, 0.0));
    }

    fn omega(n: u64, e: i64) -> Complex64 {
        crate::state::omega_power(n, e).unwrap()
    }

    #[test]
    fn json_roundtrip() {
        let h = build(&OpsFamilyId::U4party, &dims(&[3, 3, 4, 3])).unwrap();
        let back = OpsInstance::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn rejects_overlapping_blocks() {
        let mut y = build(&OpsFamilyId::Yuan333, &dims(&[3, 3, 3])).unwrap();
        let dup = y.subsets[0].clone();
        y.subsets.push(dup);
        assert!(OpsInstance::new(y.dims.clone(), y.family.clone(), y.subsets).is_err());
    }
}
