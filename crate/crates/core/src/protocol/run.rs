//! Runs a protocol tree on every state of a set and audits the outcome.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::leaf::{leaf_distinguishable, LeafCertificate};
use super::register::{ExtendedState, Layout};
use super::resources::{rationalize, LogSum, Q};
use super::tree::{apply_events_to_layout, classify, NodeKind, Node, ProtocolTree, ResourceEvent, TreeCheck};
use crate::construct::OpsInstance;
use crate::error::{Error, Result};

const PRUNE: f64 = 1e-12;
const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub state: String,
    pub subset: String,
    /// (node id, element label) per measurement.
    pub path: Vec<(String, String)>,
    pub leaf: String,
    pub weight: f64,
    /// Copies consumed per resource entry.
    pub units: Vec<u64>,
    pub ebits: LogSum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryUsage {
    pub entry: String,
    pub declared: LogSum,
    pub expected_copies: String,
    pub expected: LogSum,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EbitAccount {
    pub entries: Vec<EntryUsage>,
    pub expected_total: LogSum,
    pub declared_total: LogSum,
    pub within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafReport {
    pub id: String,
    pub claimed: Vec<String>,
    pub states: Vec<String>,
    pub certificate: LeafCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub tree: String,
    pub family: String,
    pub dims: Vec<usize>,
    pub states: usize,
    pub check: TreeCheck,
    pub verdict: bool,
    pub soundness_failures: Vec<String>,
    pub uncertified_leaves: Vec<String>,
    pub probability_residual: f64,
    pub ebits: EbitAccount,
    pub leaves: Vec<LeafReport>,
    #[serde(skip)]
    pub transcripts: Vec<Transcript>,
}

impl ProtocolResult {
    /// One JSON object per line.
    pub fn transcripts_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.transcripts {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Layout, claimed subsets and (state index, branch state) per leaf.
type Arrivals = BTreeMap<String, (Layout, Vec<String>, Vec<(usize, ExtendedState)>)>;

struct Walk<'a> {
    tree: &'a ProtocolTree,
    label: String,
    subset: String,
    state_idx: usize,
    transcripts: Vec<Transcript>,
    arrivals: &'a mut Arrivals,
}

impl Walk<'_> {
    fn visit(
        &mut self,
        node: &Node,
        layout: &Layout,
        mut state: ExtendedState,
        path: &mut Vec<(String, String)>,
        units: &mut Vec<u64>,
    ) -> Result<()> {
        let mut layout = layout.clone();
        let saved = units.clone();
        for ev in &node.events {
            match ev {
                ResourceEvent::Share { entry, dim, .. } => {
                    state.share(*dim);
                    units[*entry] += 1;
                }
                ResourceEvent::Teleport { entry, from, .. } => {
                    // Teleportation is simulated as a relabeling of who holds the register.
                    if layout.main_dim(*from) > 1 {
                        units[*entry] += 1;
                    }
                }
            }
        }
        apply_events_to_layout(&mut layout, &node.events, &self.tree.resources)?;
        match &node.kind {
            NodeKind::Leaf { claimed } => {
                let weight = state.norm_sqr();
                let mut ebits = LogSum::zero();
                for (k, &u) in units.iter().enumerate() {
                    let e = &self.tree.resources.entries[k];
                    ebits = ebits.add(&e.ebits_per_copy().scale(Q::from_integer(u as i64)));
                }
                self.transcripts.push(Transcript {
                    state: self.label.clone(),
                    subset: self.subset.clone(),
                    path: path.clone(),
                    leaf: node.id.clone(),
                    weight,
                    units: units.clone(),
                    ebits,
                });
                let slot = self
                    .arrivals
                    .entry(node.id.clone())
                    .or_insert_with(|| (layout.clone(), claimed.clone(), Vec::new()));
                slot.2.push((self.state_idx, state));
            }
            NodeKind::Measure {
                party,
                elements,
                children,
            } => {
                let anc = layout.ancillas_of(*party);
                let names: Vec<&str> = anc.iter().map(|&r| layout.registers[r].name.as_str()).collect();
                let mut parts: Vec<Vec<(Vec<usize>, num_complex::Complex64)>> = vec![Vec::new(); elements.len()];
                for (d, a) in &state.entries {
                    let m = layout.main_index(*party, d);
                    let map: HashMap<&str, usize> = names.iter().copied().zip(anc.iter().map(|&r| d[r])).collect();
                    let k = classify(elements, m, &map).ok_or_else(|| {
                        Error::Protocol(format!("node {}: a component is outside every element", node.id))
                    })?;
                    parts[k].push((d.clone(), *a));
                }
                for (k, entries) in parts.into_iter().enumerate() {
                    let post = ExtendedState { entries };
                    if post.norm_sqr() < PRUNE {
                        continue;
                    }
                    path.push((node.id.clone(), elements[k].label.clone()));
                    self.visit(&children[k], &layout, post, path, units)?;
                    path.pop();
                }
            }
        }
        *units = saved;
        Ok(())
    }
}

/// Expected consumption per resource entry, averaged over the input states.
pub fn ebit_accounting(tree: &ProtocolTree, transcripts: &[Transcript], n_states: usize) -> EbitAccount {
    let n = n_states.max(1) as f64;
    let mut entries = Vec::new();
    let mut expected_total = LogSum::zero();
    let mut within_budget = true;
    for (k, e) in tree.resources.entries.iter().enumerate() {
        let copies: f64 = transcripts.iter().map(|t| t.weight * t.units[k] as f64).sum::<f64>() / n;
        let q = rationalize(copies, 1_000_000, 1e-12);
        let (expected, text, within) = match q {
            Some(q) => (e.ebits_per_copy().scale(q), q.to_string(), q <= e.amount),
            None => (
                LogSum::zero(),
                format!("{copies} (not rational)"),
                copies <= *e.amount.numer() as f64 / *e.amount.denom() as f64 + 1e-12,
            ),
        };
        within_budget &= within;
        expected_total = expected_total.add(&expected);
        entries.push(EntryUsage {
            entry: e.label(),
            declared: e.ebits_per_copy().scale(e.amount),
            expected_copies: text,
            expected,
            within,
        });
    }
    EbitAccount {
        entries,
        expected_total,
        declared_total: tree.resources.total_ebits(),
        within_budget,
    }
}

/// Simulates the tree on every state, checks soundness of each leaf claim,
/// certifies every leaf and accounts for the resources used.
pub fn run_protocol(tree: &ProtocolTree, ops: &OpsInstance) -> Result<ProtocolResult> {
    if tree.dims != ops.dims {
        return Err(Error::Protocol(format!(
            "tree is for {:?}, set is {:?}",
            tree.dims.as_slice(),
            ops.dims.as_slice()
        )));
    }
    let check = tree.check()?;
    let layout = Layout::new(&tree.dims);
    let mut arrivals = BTreeMap::new();
    let mut transcripts = Vec::new();
    let mut labels = Vec::new();
    let mut subsets = Vec::new();
    let mut probability_residual: f64 = 0.0;
    for (i, ps) in ops.states().enumerate() {
        let label = ops.state_label(ps.tag);
        let subset = ops.subsets[ps.tag.subset].label.clone();
        subsets.push(subset.clone());
        let mut walk = Walk {
            tree,
            label: label.clone(),
            subset,
            state_idx: i,
            transcripts: Vec::new(),
            arrivals: &mut arrivals,
        };
        let mut units = vec![0; tree.resources.entries.len()];
        walk.visit(&tree.root, &layout, ExtendedState::from_product(ps), &mut Vec::new(), &mut units)?;
        let total: f64 = walk.transcripts.iter().map(|t| t.weight).sum();
        probability_residual = probability_residual.max((total - 1.0).abs());
        transcripts.extend(walk.transcripts);
        labels.push(label);
    }
    let mut soundness_failures = Vec::new();
    let mut leaves = Vec::new();
    let mut uncertified = Vec::new();
    let jobs: Vec<_> = arrivals.into_iter().map(|(id, (l, c, s))| (id, l, c, s)).collect();
    for (id, _, claimed, states) in &jobs {
        for (i, _) in states {
            if !claimed.contains(&subsets[*i]) {
                soundness_failures.push(format!("{} reached leaf {id} claiming {:?}", labels[*i], claimed));
            }
        }
    }
    let certs: Vec<LeafCertificate> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, l, _, st)| {
                s.spawn(move || {
                    let v: Vec<ExtendedState> = st.iter().map(|(_, e)| e.clone()).collect();
                    leaf_distinguishable(l, &v)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("leaf certifier panicked")).collect()
    });
    for ((id, _, claimed, states), cert) in jobs.iter().zip(certs) {
        if !cert.certified {
            uncertified.push(id.clone());
        }
        leaves.push(LeafReport {
            id: id.clone(),
            claimed: claimed.clone(),
            states: states.iter().map(|(i, _)| labels[*i].clone()).collect(),
            certificate: cert,
        });
    }
    let ebits = ebit_accounting(tree, &transcripts, labels.len());
    let verdict = soundness_failures.is_empty()
        && uncertified.is_empty()
        && probability_residual < PROB_TOL
        && ebits.within_budget;
    Ok(ProtocolResult {
        tree: tree.name.clone(),
        family: tree.family.clone(),
        dims: tree.dims.as_slice().to_vec(),
        states: labels.len(),
        check,
        verdict,
        soundness_failures,
        uncertified_leaves: uncertified,
        probability_residual,
        ebits,
        leaves,
        transcripts,
    })
}
