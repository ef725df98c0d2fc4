//! Tile combinatorics under a bipartition: projection sets, the inclusion
//! test on V_i, projection-inclusion (PI/UPI) sets, set sequences, overlap
//! connectivity, and the combined structural verdict.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::construct::OpsInstance;
use crate::error::Result;
use crate::state::{unflatten, Bipartition};

pub type IndexSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionSets {
    pub bipartition: Bipartition,
    pub dim_x: usize,
    pub dim_y: usize,
    /// S_r^(X), per subset.
    pub x: Vec<IndexSet>,
    /// S_r^(Y), per subset.
    pub y: Vec<IndexSet>,
}

fn side_projection(block: &[Vec<usize>], parties: &[usize], radices: &[usize]) -> IndexSet {
    let mut out = IndexSet::new();
    let total: usize = radices.iter().product();
    for idx in 0..total {
        let digits = unflatten(idx, radices);
        if parties.iter().zip(&digits).all(|(&k, d)| block[k].contains(d)) {
            out.insert(idx);
        }
    }
    out
}

pub fn projection_sets(ops: &OpsInstance, bip: &Bipartition) -> ProjectionSets {
    let rx: Vec<usize> = bip.x.iter().map(|&k| ops.dims.get(k)).collect();
    let ry: Vec<usize> = bip.y.iter().map(|&k| ops.dims.get(k)).collect();
    ProjectionSets {
        bipartition: bip.clone(),
        dim_x: rx.iter().product(),
        dim_y: ry.iter().product(),
        x: ops.subsets.iter().map(|s| side_projection(&s.block, &bip.x, &rx)).collect(),
        y: ops.subsets.iter().map(|s| side_projection(&s.block, &bip.y, &ry)).collect(),
    }
}

fn meets(a: &IndexSet, b: &IndexSet) -> bool {
    a.iter().any(|i| b.contains(i))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViCertificate {
    pub i: usize,
    #[serde(rename = "V_i")]
    pub v: IndexSet,
    #[serde(rename = "S_tilde")]
    pub s_tilde: IndexSet,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionI {
    pub pass: bool,
    pub per_i: Vec<ViCertificate>,
}

/// V_i and S̃_{V_i} for every X index except the last. With `order`, the
/// X basis is relabelled so that position p holds index `order[p]`.
pub fn check_condition_i(ps: &ProjectionSets, order: Option<&[usize]>) -> ConditionI {
    let natural: Vec<usize> = (0..ps.dim_x).collect();
    let order = order.unwrap_or(&natural);
    let mut per_i = Vec::new();
    for p in 0..ps.dim_x.saturating_sub(1) {
        let i = order[p];
        let mut v = IndexSet::new();
        for (sx, sy) in ps.x.iter().zip(&ps.y) {
            if sx.contains(&i) {
                v.extend(sy.iter().copied());
            }
        }
        let mut s_tilde = IndexSet::new();
        for (sx, sy) in ps.x.iter().zip(&ps.y) {
            if meets(sy, &v) {
                s_tilde.extend(sx.iter().copied());
            }
        }
        let pass = order[p..].iter().all(|j| s_tilde.contains(j));
        per_i.push(ViCertificate { i, v, s_tilde, pass });
    }
    ConditionI {
        pass: per_i.iter().all(|c| c.pass),
        per_i,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiSet {
    pub target: usize,
    pub family: Vec<usize>,
    pub witness_y: usize,
    pub upi_witness: Option<usize>,
}

impl PiSet {
    pub fn is_upi(&self) -> bool {
        self.upi_witness.is_some()
    }

    /// Re-checks both defining clauses from the stored data.
    pub fn verify(&self, ps: &ProjectionSets) -> bool {
        let r = self.target;
        !self.family.is_empty()
            && !self.family.contains(&r)
            && self.family.iter().all(|&k| ps.y[k].contains(&self.witness_y))
            && ps.x[r]
                .iter()
                .all(|i| self.family.iter().any(|&k| ps.x[k].contains(i)))
            && self.upi_witness.is_none_or(|k| {
                self.family.contains(&k) && ps.x[r].intersection(&ps.x[k]).count() == 1
            })
    }
}

/// Whether `family` is a PI set for `r`.
pub fn is_pi_set(ps: &ProjectionSets, r: usize, family: &[usize]) -> bool {
    if family.is_empty() || family.contains(&r) {
        return false;
    }
    let common = (0..ps.dim_y).any(|y| family.iter().all(|&k| ps.y[k].contains(&y)));
    common && ps.x[r].iter().all(|i| family.iter().any(|&k| ps.x[k].contains(i)))
}

fn upi_member(ps: &ProjectionSets, r: usize, family: &[usize]) -> Option<usize> {
    family
        .iter()
        .copied()
        .find(|&k| ps.x[r].intersection(&ps.x[k]).count() == 1)
}

/// Every maximal family T_y = {k ≠ r : y ∈ S_k^(Y)} that covers S_r^(X).
pub fn find_pi_sets(ps: &ProjectionSets, r: usize) -> Vec<PiSet> {
    let mut out: Vec<PiSet> = Vec::new();
    for y in 0..ps.dim_y {
        let family: Vec<usize> = (0..ps.x.len())
            .filter(|&k| k != r && ps.y[k].contains(&y))
            .collect();
        if family.is_empty() || out.iter().any(|p| p.family == family) {
            continue;
        }
        let covered = ps.x[r].iter().all(|i| family.iter().any(|&k| ps.x[k].contains(i)));
        if covered {
            let upi_witness = upi_member(ps, r, &family);
            out.push(PiSet {
                target: r,
                family,
                witness_y: y,
                upi_witness,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetSequence {
    pub groups: Vec<Vec<usize>>,
    /// Per group, per member: true when NIC.
    pub nic: Vec<Vec<bool>>,
}

impl SetSequence {
    pub fn group_of(&self, r: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&r))
    }

    /// Accepts a caller-chosen grouping after checking that it partitions the
    /// subsets, that G_1 members all have UPI sets, and that every later
    /// member overlaps the previous group on X.
    pub fn from_groups(
        ps: &ProjectionSets,
        pis: &[Vec<PiSet>],
        groups: Vec<Vec<usize>>,
    ) -> std::result::Result<SetSequence, String> {
        let m = ps.x.len();
        let mut seen = vec![false; m];
        for &r in groups.iter().flatten() {
            if r >= m || std::mem::replace(&mut seen[r], true) {
                return Err(format!("subset {r} missing or repeated"));
            }
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(format!("subset {r} not placed"));
        }
        let first = groups.first().ok_or("empty sequence")?;
        if let Some(&r) = first.iter().find(|&&r| !pis[r].iter().any(|p| p.is_upi())) {
            return Err(format!("subset {r} in G_1 has no UPI set"));
        }
        for x in 1..groups.len() {
            if let Some(&r) = groups[x]
                .iter()
                .find(|&&r| !groups[x - 1].iter().any(|&k| meets(&ps.x[r], &ps.x[k])))
            {
                return Err(format!("subset {r} does not meet group {x}"));
            }
        }
        let nic = groups.iter().map(|g| classify_nic(ps, g)).collect();
        Ok(SetSequence { groups, nic })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceFailureKind {
    /// No subset has a UPI set, so G_1 is empty.
    NoUpiSubset,
    /// Some subsets are not reachable from G_1 through X-overlaps. Every
    /// member of a later group chains back to G_1, so no grouping at all
    /// can absorb them.
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceFailure {
    pub kind: SequenceFailureKind,
    pub partial: Vec<Vec<usize>>,
    pub leftover: Vec<usize>,
}

fn classify_nic(ps: &ProjectionSets, group: &[usize]) -> Vec<bool> {
    group
        .iter()
        .map(|&r| {
            !group
                .iter()
                .any(|&q| q != r && ps.x[r].is_subset(&ps.x[q]) && ps.x[r] != ps.x[q])
        })
        .collect()
}

pub fn build_set_sequence(
    ps: &ProjectionSets,
    pis: &[Vec<PiSet>],
) -> std::result::Result<SetSequence, SequenceFailure> {
    let m = ps.x.len();
    let g1: Vec<usize> = (0..m).filter(|&r| pis[r].iter().any(|p| p.is_upi())).collect();
    if g1.is_empty() {
        return Err(SequenceFailure {
            kind: SequenceFailureKind::NoUpiSubset,
            partial: vec![],
            leftover: (0..m).collect(),
        });
    }
    let mut placed = vec![false; m];
    for &r in &g1 {
        placed[r] = true;
    }
    let mut groups = vec![g1];
    while placed.iter().any(|p| !p) {
        let last = groups.last().unwrap();
        let next: Vec<usize> = (0..m)
            .filter(|&r| !placed[r] && last.iter().any(|&k| meets(&ps.x[r], &ps.x[k])))
            .collect();
        if next.is_empty() {
            return Err(SequenceFailure {
                kind: SequenceFailureKind::Unreachable,
                partial: groups,
                leftover: (0..m).filter(|&r| !placed[r]).collect(),
            });
        }
        for &r in &next {
            placed[r] = true;
        }
        groups.push(next);
    }
    let nic = groups.iter().map(|g| classify_nic(ps, g)).collect();
    Ok(SetSequence { groups, nic })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IiiWitness {
    /// NIC subset in G_{x+1}: S_via ∈ G_x and S_member in a PI set of the
    /// subset with S_via^X ∩ S_r^X ⊇ S_r^X ∩ S_member^X ≠ ∅.
    Chain {
        subset: usize,
        group: usize,
        via: usize,
        member: usize,
        pi_witness_y: usize,
    },
    /// IC subset: its X projection sits strictly inside a peer's.
    Contained { subset: usize, group: usize, within: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionIii {
    pub pass: bool,
    pub witnesses: Vec<IiiWitness>,
    pub missing: Vec<usize>,
}

pub fn check_condition_iii(ps: &ProjectionSets, pis: &[Vec<PiSet>], seq: &SetSequence) -> ConditionIii {
    let mut witnesses = Vec::new();
    let mut missing = Vec::new();
    for x in 1..seq.groups.len() {
        for (pos, &r) in seq.groups[x].iter().enumerate() {
            if !seq.nic[x][pos] {
                let within = seq.groups[x]
                    .iter()
                    .copied()
                    .find(|&q| q != r && ps.x[r].is_subset(&ps.x[q]) && ps.x[r] != ps.x[q])
                    .unwrap();
                witnesses.push(IiiWitness::Contained { subset: r, group: x, within });
                continue;
            }
            let found = pis[r].iter().find_map(|pi| {
                pi.family.iter().find_map(|&t| {
                    let rt: IndexSet = ps.x[r].intersection(&ps.x[t]).copied().collect();
                    if rt.is_empty() {
                        return None;
                    }
                    let via = if seq.groups[x - 1].contains(&t) {
                        Some(t)
                    } else {
                        seq.groups[x - 1]
                            .iter()
                            .copied()
                            .find(|&k| rt.iter().all(|i| ps.x[k].contains(i)))
                    };
                    via.map(|via| IiiWitness::Chain {
                        subset: r,
                        group: x,
                        via,
                        member: t,
                        pi_witness_y: pi.witness_y,
                    })
                })
            });
            match found {
                Some(w) => witnesses.push(w),
                None => missing.push(r),
            }
        }
    }
    ConditionIii {
        pass: missing.is_empty(),
        witnesses,
        missing,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Component id per subset.
    pub components: Vec<usize>,
}

pub fn check_connectedness(ps: &ProjectionSets) -> Connectivity {
    let m = ps.x.len();
    let mut comp = vec![usize::MAX; m];
    let mut next = 0;
    for start in 0..m {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(a) = stack.pop() {
            for (b, c) in comp.iter_mut().enumerate() {
                if *c == usize::MAX && meets(&ps.x[a], &ps.x[b]) {
                    *c = next;
                    stack.push(b);
                }
            }
        }
        next += 1;
    }
    Connectivity {
        connected: next <= 1,
        components: comp,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    Ii,
    #[serde(rename = "iii")]
    Iii,
    #[serde(rename = "iv")]
    Iv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail { conditions: Vec<Condition> },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn fails(&self, c: Condition) -> bool {
        matches!(self, Verdict::Fail { conditions } if conditions.contains(&c))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub projections: ProjectionSets,
    pub condition_i: ConditionI,
    pub pi_sets: Vec<Vec<PiSet>>,
    pub condition_ii: bool,
    pub sequence: std::result::Result<SetSequence, SequenceFailure>,
    pub condition_iii: Option<ConditionIii>,
    pub connectivity: Connectivity,
    pub verdict: Verdict,
}

pub fn theorem1_verdict(ops: &OpsInstance, bip: &Bipartition) -> Theorem1Report {
    theorem1_with_order(ops, bip, None)
}

/// As [`theorem1_verdict`], with a caller-chosen X basis order for the V_i test.
pub fn theorem1_with_order(ops: &OpsInstance, bip: &Bipartition, order: Option<&[usize]>) -> Theorem1Report {
    let ps = projection_sets(ops, bip);
    let condition_i = check_condition_i(&ps, order);
    let pi_sets: Vec<Vec<PiSet>> = (0..ps.x.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let condition_ii = pi_sets.iter().all(|p| !p.is_empty());
    let sequence = build_set_sequence(&ps, &pi_sets);
    let condition_iii = sequence.as_ref().ok().map(|s| check_condition_iii(&ps, &pi_sets, s));
    let connectivity = check_connectedness(&ps);
    let mut failed = Vec::new();
    if !condition_i.pass {
        failed.push(Condition::I);
    }
    if !condition_ii {
        failed.push(Condition::Ii);
    }
    if !condition_iii.as_ref().is_some_and(|c| c.pass) {
        failed.push(Condition::Iii);
    }
    if !connectivity.connected {
        failed.push(Condition::Iv);
    }
    let verdict = if failed.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail { conditions: failed }
    };
    Theorem1Report {
        projections: ps,
        condition_i,
        pi_sets,
        condition_ii,
        sequence,
        condition_iii,
        connectivity,
        verdict,
    }
}

impl Theorem1Report {
    /// Certificate JSON with subset labels in place of indices.
    pub fn to_json(&self, ops: &OpsInstance) -> Value {
        let name = |r: usize| ops.subsets[r].label.clone();
        let names = |v: &[usize]| v.iter().map(|&r| name(r)).collect::<Vec<_>>();
        let pis: Vec<Value> = self
            .pi_sets
            .iter()
            .flatten()
            .map(|p| {
                json!({
                    "target": name(p.target),
                    "family": names(&p.family),
                    "witness_y": p.witness_y,
                    "upi_witness": p.upi_witness.map(name),
                })
            })
            .collect();
        let sequence = match &self.sequence {
            Ok(s) => json!({
                "groups": s.groups.iter().map(|g| names(g)).collect::<Vec<_>>(),
                "nic": s.nic,
            }),
            Err(f) => json!({
                "failure": f.kind,
                "partial": f.partial.iter().map(|g| names(g)).collect::<Vec<_>>(),
                "leftover": names(&f.leftover),
            }),
        };
        let witnesses: Vec<Value> = self
            .condition_iii
            .iter()
            .flat_map(|c| c.witnesses.iter())
            .map(|w| match w {
                IiiWitness::Chain { subset, group, via, member, pi_witness_y } => json!({
                    "subset": name(*subset), "group": group + 1, "via": name(*via),
                    "pi_member": name(*member), "witness_y": pi_witness_y,
                }),
                IiiWitness::Contained { subset, group, within } => json!({
                    "subset": name(*subset), "group": group + 1, "contained_in": name(*within),
                }),
            })
            .collect();
        json!({
            "bipartition": self.projections.bipartition.label(),
            "conditions": {
                "i": { "pass": self.condition_i.pass, "per_i": self.condition_i.per_i },
                "ii": { "pass": self.condition_ii, "pi_sets": pis },
                "iii": {
                    "pass": self.condition_iii.as_ref().is_some_and(|c| c.pass),
                    "sequence": sequence,
                    "witnesses": witnesses,
                    "missing": self.condition_iii.as_ref().map(|c| names(&c.missing)).unwrap_or_default(),
                },
                "iv": { "pass": self.connectivity.connected, "components": self.connectivity.components },
            },
            "verdict": self.verdict,
        })
    }
}

/// Union of X projections is the whole X basis, and the family is connected.
pub fn corollary2_necessary(ops: &OpsInstance, bip: &Bipartition) -> bool {
    let ps = projection_sets(ops, bip);
    let covered: IndexSet = ps.x.iter().flatten().copied().collect();
    covered.len() == ps.dim_x && check_connectedness(&ps).connected
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralSummary {
    pub groupings: Vec<Theorem1Report>,
    /// None for bipartite sets, where only per-side verdicts are meaningful.
    pub strongest: Option<bool>,
}

/// Structural verdict for every X_i = all parties but i.
pub fn strongest_nonlocality_structural(ops: &OpsInstance) -> Result<StructuralSummary> {
    let n = ops.n();
    let groupings = (0..n)
        .map(|i| Bipartition::cyclic(i, n).map(|b| theorem1_verdict(ops, &b)))
        .collect::<Result<Vec<_>>>()?;
    let strongest = (n >= 3).then(|| groupings.iter().all(|g| g.verdict.passed()));
    Ok(StructuralSummary { groupings, strongest })
}
