//! Certifies that the states reaching a leaf can be told apart by LOCC.
//!
//! Three sufficient rules are applied recursively:
//! a single state; two orthogonal states; a party whose local supports
//! split the set into mutually orthogonal groups. When none applies, a
//! party measures one of its registers in the Fourier basis and every
//! outcome must again be orthogonal and certifiable.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::register::{ExtendedState, Layout};
use crate::state::{ProductState, SystemDims};

const INNER_TOL: f64 = 1e-9;
const NORM_FLOOR: f64 = 1e-12;
const SEARCH_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Strategy {
    Single,
    Pair,
    Split {
        party: usize,
        groups: Vec<Vec<usize>>,
        then: Vec<Strategy>,
    },
    Fourier {
        register: String,
        outcomes: Vec<(usize, Strategy)>,
    },
}

impl Strategy {
    pub fn depth(&self) -> usize {
        match self {
            Strategy::Single | Strategy::Pair => 0,
            Strategy::Split { then, .. } => 1 + then.iter().map(Strategy::depth).max().unwrap_or(0),
            Strategy::Fourier { outcomes, .. } => 1 + outcomes.iter().map(|(_, s)| s.depth()).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafCertificate {
    pub certified: bool,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

struct Search<'a> {
    layout: &'a Layout,
    budget: usize,
}

type Sparse = HashMap<Vec<usize>, Complex64>;

fn local_basis(layout: &Layout, party: usize, s: &ExtendedState) -> Vec<Sparse> {
    let local = layout.local_registers(party);
    let mut is_local = vec![false; layout.registers.len()];
    for &r in &local {
        is_local[r] = true;
    }
    let mut cols: HashMap<Vec<usize>, Sparse> = HashMap::new();
    for (d, a) in &s.entries {
        let lk: Vec<usize> = local.iter().map(|&r| d[r]).collect();
        let rk: Vec<usize> = (0..d.len()).filter(|&r| !is_local[r]).map(|r| d[r]).collect();
        *cols.entry(rk).or_default().entry(lk).or_default() += a;
    }
    let mut keys: Vec<_> = cols.keys().cloned().collect();
    keys.sort();
    let mut basis: Vec<Sparse> = Vec::new();
    for k in keys {
        let mut v = cols.remove(&k).unwrap();
        for q in &basis {
            let c = sparse_inner(q, &v);
            for (key, qa) in q {
                *v.entry(key.clone()).or_default() -= c * qa;
            }
        }
        let n: f64 = v.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-10 {
            v.retain(|_, a| a.norm() > 1e-15);
            for a in v.values_mut() {
                *a /= n;
            }
            basis.push(v);
        }
    }
    basis
}

fn sparse_inner(a: &Sparse, b: &Sparse) -> Complex64 {
    let (small, large, flip) = if a.len() <= b.len() { (a, b, false) } else { (b, a, true) };
    let s: Complex64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| x.conj() * y))
        .sum();
    if flip {
        s.conj()
    } else {
        s
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

fn first_overlap(states: &[ExtendedState]) -> Option<(usize, usize, f64)> {
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let v = states[i].inner(&states[j]).norm();
            if v > INNER_TOL {
                return Some((i, j, v));
            }
        }
    }
    None
}

impl Search<'_> {
    fn split(&self, states: &[ExtendedState]) -> Option<(usize, Vec<Vec<usize>>)> {
        for p in 0..self.layout.parties() {
            if self.layout.local_registers(p).is_empty() {
                continue;
            }
            let bases: Vec<Vec<Sparse>> = states.iter().map(|s| local_basis(self.layout, p, s)).collect();
            let mut parent: Vec<usize> = (0..states.len()).collect();
            for i in 0..states.len() {
                for j in i + 1..states.len() {
                    if find(&mut parent, i) == find(&mut parent, j) {
                        continue;
                    }
                    let touch = bases[i]
                        .iter()
                        .any(|q| bases[j].iter().any(|r| sparse_inner(q, r).norm() > INNER_TOL));
                    if touch {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for i in 0..states.len() {
                let r = find(&mut parent, i);
                groups.entry(r).or_default().push(i);
            }
            if groups.len() > 1 {
                let mut g: Vec<Vec<usize>> = groups.into_values().collect();
                g.sort();
                return Some((p, g));
            }
        }
        None
    }

    fn certify(&mut self, states: Vec<ExtendedState>) -> Result<Strategy, String> {
        if self.budget == 0 {
            return Err("search budget exhausted".into());
        }
        self.budget -= 1;
        match states.len() {
            0 | 1 => return Ok(Strategy::Single),
            2 => return Ok(Strategy::Pair),
            _ => {}
        }
        if let Some((party, groups)) = self.split(&states) {
            let mut then = Vec::new();
            for g in &groups {
                let sub: Vec<ExtendedState> = g.iter().map(|&i| states[i].clone()).collect();
                then.push(self.certify(sub)?);
            }
            return Ok(Strategy::Split { party, groups, then });
        }
        // Ancillas first, then main registers.
        let n_main = self.layout.n_main;
        let order = (n_main..self.layout.registers.len()).chain(0..n_main);
        let mut last = String::from("no rule applies");
        for r in order {
            let support_wide = states.iter().any(|s| s.register_support(r).len() > 1);
            if !support_wide {
                continue;
            }
            let dim = self.layout.registers[r].dim;
            match self.fourier(&states, r, dim) {
                Ok(outcomes) => {
                    return Ok(Strategy::Fourier {
                        register: self.layout.registers[r].name.clone(),
                        outcomes,
                    })
                }
                Err(e) => last = e,
            }
            if self.budget == 0 {
                break;
            }
        }
        Err(last)
    }

    fn fourier(&mut self, states: &[ExtendedState], r: usize, dim: usize) -> Result<Vec<(usize, Strategy)>, String> {
        let mut per_outcome = Vec::new();
        for m in 0..dim {
            let mut post = Vec::new();
            for s in states {
                let mut f = s.fourier_outcome(r, dim, m);
                if f.norm_sqr() > NORM_FLOOR {
                    f.normalize();
                    post.push(f);
                }
            }
            if let Some((i, j, v)) = first_overlap(&post) {
                return Err(format!(
                    "Fourier outcome {m} on {} leaves overlap {v:.3e} between states {i} and {j}",
                    self.layout.registers[r].name
                ));
            }
            per_outcome.push((m, post));
        }
        let mut out = Vec::new();
        for (m, post) in per_outcome {
            out.push((m, self.certify(post)?));
        }
        Ok(out)
    }
}

/// Certifies a set of (normalized) post-measurement states at a leaf.
pub fn leaf_distinguishable(layout: &Layout, states: &[ExtendedState]) -> LeafCertificate {
    let mut norm: Vec<ExtendedState> = states.to_vec();
    for s in &mut norm {
        s.normalize();
    }
    if let Some((i, j, v)) = first_overlap(&norm) {
        return LeafCertificate {
            certified: false,
            states: states.len(),
            strategy: None,
            reason: Some(format!("states {i} and {j} are not orthogonal (overlap {v:.3e})")),
        };
    }
    let mut search = Search {
        layout,
        budget: SEARCH_BUDGET,
    };
    match search.certify(norm) {
        Ok(s) => LeafCertificate {
            certified: true,
            states: states.len(),
            strategy: Some(s),
            reason: None,
        },
        Err(e) => LeafCertificate {
            certified: false,
            states: states.len(),
            strategy: None,
            reason: Some(e),
        },
    }
}

/// Same certifier applied to plain product states with no resources.
pub fn product_states_distinguishable(dims: &SystemDims, states: &[ProductState]) -> LeafCertificate {
    let layout = Layout::new(dims);
    let ext: Vec<ExtendedState> = states.iter().map(ExtendedState::from_product).collect();
    leaf_distinguishable(&layout, &ext)
}
