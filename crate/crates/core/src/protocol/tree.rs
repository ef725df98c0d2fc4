//! Protocol trees: local projective measurements with classical branching.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::register::Layout;
use super::resources::ResourceConfig;
use crate::error::{Error, Result};
use crate::state::SystemDims;

/// Product of a set of main indices with one value set per owned ancilla.
/// `main: None` and missing ancillas mean "any value".
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main: Option<BTreeSet<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ancilla: BTreeMap<String, BTreeSet<usize>>,
}

impl Block {
    pub fn new(main: impl IntoIterator<Item = usize>) -> Self {
        Block {
            main: Some(main.into_iter().collect()),
            ancilla: BTreeMap::new(),
        }
    }

    pub fn any_main() -> Self {
        Block::default()
    }

    pub fn with(mut self, reg: &str, vals: impl IntoIterator<Item = usize>) -> Self {
        self.ancilla.insert(reg.to_string(), vals.into_iter().collect());
        self
    }

    fn contains(&self, main_idx: usize, anc: &HashMap<&str, usize>) -> bool {
        if let Some(m) = &self.main {
            if !m.contains(&main_idx) {
                return false;
            }
        }
        self.ancilla
            .iter()
            .all(|(r, vals)| anc.get(r.as_str()).is_some_and(|v| vals.contains(v)))
    }
}

/// A projector given as a union of blocks, or the complement of its siblings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub label: String,
    #[serde(default)]
    pub blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rest: bool,
}

impl Element {
    pub fn new(label: &str, blocks: Vec<Block>) -> Self {
        Element {
            label: label.to_string(),
            blocks,
            rest: false,
        }
    }

    pub fn rest(label: &str) -> Self {
        Element {
            label: label.to_string(),
            blocks: Vec::new(),
            rest: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResourceEvent {
    /// Consume one copy of resource `entry` as a fresh register pair.
    Share {
        entry: usize,
        dim: usize,
        left: (usize, String),
        right: (usize, String),
    },
    /// Teleport every main register of `from` to `to`.
    Teleport { entry: usize, from: usize, to: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Measure {
        party: usize,
        elements: Vec<Element>,
        children: Vec<Node>,
    },
    Leaf {
        claimed: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub events: Vec<ResourceEvent>,
    pub kind: NodeKind,
    /// Built from another subtree by relabeling resource values.
    pub mirror: bool,
}

impl Node {
    pub fn measure(id: &str, party: usize, branches: Vec<(Element, Node)>) -> Self {
        let (elements, children) = branches.into_iter().unzip();
        Node {
            id: id.to_string(),
            events: Vec::new(),
            kind: NodeKind::Measure {
                party,
                elements,
                children,
            },
            mirror: false,
        }
    }

    pub fn leaf(id: &str, claimed: &[&str]) -> Self {
        Node {
            id: id.to_string(),
            events: Vec::new(),
            kind: NodeKind::Leaf {
                claimed: claimed.iter().map(|s| s.to_string()).collect(),
            },
            mirror: false,
        }
    }

    pub fn with_events(mut self, events: Vec<ResourceEvent>) -> Self {
        self.events = events;
        self
    }

    pub fn count(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 1,
            NodeKind::Measure { children, .. } => 1 + children.iter().map(Node::count).sum::<usize>(),
        }
    }

    /// Copy with ancilla values shifted by `k` (mod `dim`) on `regs`; ids get `tag`.
    pub fn mirrored(&self, regs: &[&str], k: usize, dim: usize, tag: &str) -> Node {
        let mut n = self.relabel(regs, k, dim, tag);
        n.mirror = true;
        n
    }

    fn relabel(&self, regs: &[&str], k: usize, dim: usize, tag: &str) -> Node {
        let kind = match &self.kind {
            NodeKind::Leaf { claimed } => NodeKind::Leaf { claimed: claimed.clone() },
            NodeKind::Measure {
                party,
                elements,
                children,
            } => NodeKind::Measure {
                party: *party,
                elements: elements.iter().map(|e| shift_element(e, regs, k, dim)).collect(),
                children: children.iter().map(|c| c.relabel(regs, k, dim, tag)).collect(),
            },
        };
        Node {
            id: format!("{}{}", self.id, tag),
            events: self.events.clone(),
            kind,
            mirror: self.mirror,
        }
    }

    /// Rewrites logical ancillas as several physical ones. A value `v` of a
    /// logical register maps to the mixed-radix digits of `v` over the listed
    /// physical registers (first most significant).
    pub fn substituted(&self, map: &BTreeMap<String, Vec<(String, usize)>>) -> Node {
        let kind = match &self.kind {
            NodeKind::Leaf { claimed } => NodeKind::Leaf { claimed: claimed.clone() },
            NodeKind::Measure {
                party,
                elements,
                children,
            } => NodeKind::Measure {
                party: *party,
                elements: elements
                    .iter()
                    .map(|e| Element {
                        label: e.label.clone(),
                        rest: e.rest,
                        blocks: e.blocks.iter().flat_map(|b| substitute_block(b, map)).collect(),
                    })
                    .collect(),
                children: children.iter().map(|c| c.substituted(map)).collect(),
            },
        };
        Node {
            id: self.id.clone(),
            events: self.events.clone(),
            kind,
            mirror: self.mirror,
        }
    }
}

/// Element `k` of a shifted measurement: base element with values moved by `k`.
pub fn shift_element(e: &Element, regs: &[&str], k: usize, dim: usize) -> Element {
    Element {
        label: e.label.clone(),
        rest: e.rest,
        blocks: e
            .blocks
            .iter()
            .map(|b| Block {
                main: b.main.clone(),
                ancilla: b
                    .ancilla
                    .iter()
                    .map(|(r, vals)| {
                        if regs.contains(&r.as_str()) {
                            (r.clone(), vals.iter().map(|v| (v + k) % dim).collect())
                        } else {
                            (r.clone(), vals.clone())
                        }
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn substitute_block(b: &Block, map: &BTreeMap<String, Vec<(String, usize)>>) -> Vec<Block> {
    let mut out = vec![Block {
        main: b.main.clone(),
        ancilla: BTreeMap::new(),
    }];
    for (r, vals) in &b.ancilla {
        match map.get(r) {
            None => {
                for o in &mut out {
                    o.ancilla.insert(r.clone(), vals.clone());
                }
            }
            Some(phys) => {
                let mut next = Vec::new();
                for o in &out {
                    for &v in vals {
                        let mut o2 = o.clone();
                        let mut rem = v;
                        for (name, d) in phys.iter().rev() {
                            o2.ancilla.insert(name.clone(), BTreeSet::from([rem % d]));
                            rem /= d;
                        }
                        next.push(o2);
                    }
                }
                out = next;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTree {
    pub name: String,
    pub family: String,
    pub dims: SystemDims,
    pub resources: ResourceConfig,
    pub root: Node,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCheck {
    pub nodes: usize,
    pub measurements: usize,
    /// Largest deviation of Σ_k P_k from the identity over all measurements.
    pub completeness_residual: f64,
}

/// Applies resource events to a layout.
pub fn apply_events_to_layout(layout: &mut Layout, events: &[ResourceEvent], cfg: &ResourceConfig) -> Result<()> {
    for ev in events {
        match ev {
            ResourceEvent::Share { entry, dim, left, right } => {
                let e = cfg
                    .entries
                    .get(*entry)
                    .ok_or_else(|| Error::InvalidTree(format!("no resource entry {entry}")))?;
                if e.dim != *dim {
                    return Err(Error::InvalidTree(format!(
                        "share of dim {dim} charged to entry {entry} of dim {}",
                        e.dim
                    )));
                }
                let pair = (left.0.min(right.0), left.0.max(right.0));
                if pair != (e.parties.0.min(e.parties.1), e.parties.0.max(e.parties.1)) {
                    return Err(Error::InvalidTree(format!("share between wrong parties for entry {entry}")));
                }
                layout
                    .add_pair((left.0, &left.1), (right.0, &right.1), *dim)
                    .map_err(|e| Error::InvalidTree(e.to_string()))?;
            }
            ResourceEvent::Teleport { entry, from, to } => {
                let e = cfg
                    .entries
                    .get(*entry)
                    .ok_or_else(|| Error::InvalidTree(format!("no resource entry {entry}")))?;
                let moved = layout.main_dim(*from);
                if moved > 1 && e.dim != moved {
                    return Err(Error::InvalidTree(format!(
                        "teleporting dim {moved} needs a resource of that dim, entry {entry} has {}",
                        e.dim
                    )));
                }
                layout.teleport(*from, *to).map_err(|e| Error::InvalidTree(e.to_string()))?;
            }
        }
    }
    Ok(())
}

/// Enumerates the local cells of `party`: (main index, ancilla values).
pub(crate) fn local_cells(layout: &Layout, party: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let anc = layout.ancillas_of(party);
    let dims: Vec<usize> = anc.iter().map(|&r| layout.registers[r].dim).collect();
    let mut combos = vec![Vec::new()];
    for &d in &dims {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..d).map(move |v| {
                    let mut c2 = c.clone();
                    c2.push(v);
                    c2
                })
            })
            .collect();
    }
    (anc, combos)
}

/// Index of the element whose projector contains the given local cell.
pub(crate) fn classify(elements: &[Element], main_idx: usize, anc: &HashMap<&str, usize>) -> Option<usize> {
    elements
        .iter()
        .position(|e| !e.rest && e.blocks.iter().any(|b| b.contains(main_idx, anc)))
        .or_else(|| elements.iter().position(|e| e.rest))
}

impl ProtocolTree {
    pub fn check(&self) -> Result<TreeCheck> {
        let mut layout = Layout::new(&self.dims);
        let mut check = TreeCheck {
            nodes: 0,
            measurements: 0,
            completeness_residual: 0.0,
        };
        let mut seen = BTreeSet::new();
        self.check_node(&self.root, &mut layout, &mut check, &mut seen)?;
        Ok(check)
    }

    fn check_node(
        &self,
        node: &Node,
        layout: &mut Layout,
        check: &mut TreeCheck,
        seen: &mut BTreeSet<String>,
    ) -> Result<()> {
        if !seen.insert(node.id.clone()) {
            return Err(Error::InvalidTree(format!("duplicate node id {}", node.id)));
        }
        check.nodes += 1;
        let mut layout = layout.clone();
        apply_events_to_layout(&mut layout, &node.events, &self.resources)?;
        let (party, elements, children) = match &node.kind {
            NodeKind::Leaf { claimed } => {
                if claimed.is_empty() {
                    return Err(Error::InvalidTree(format!("leaf {} claims nothing", node.id)));
                }
                return Ok(());
            }
            NodeKind::Measure {
                party,
                elements,
                children,
            } => (*party, elements, children),
        };
        let bad = |m: String| Error::InvalidTree(format!("node {}: {m}", node.id));
        if party >= layout.parties() {
            return Err(bad(format!("no party {party}")));
        }
        if elements.len() != children.len() || elements.is_empty() {
            return Err(bad("elements and children differ".into()));
        }
        if elements.iter().filter(|e| e.rest).count() > 1 {
            return Err(bad("more than one rest element".into()));
        }
        let main_dim = layout.main_dim(party);
        let (anc, combos) = local_cells(&layout, party);
        let anc_names: Vec<&str> = anc.iter().map(|&r| layout.registers[r].name.as_str()).collect();
        for e in elements {
            for b in &e.blocks {
                if let Some(m) = &b.main {
                    if m.iter().any(|&i| i >= main_dim) {
                        return Err(bad(format!("{} uses a main index outside 0..{main_dim}", e.label)));
                    }
                }
                for (r, vals) in &b.ancilla {
                    let Some(pos) = anc_names.iter().position(|n| n == r) else {
                        return Err(bad(format!("{} references register {r} not held by the party", e.label)));
                    };
                    let d = layout.registers[anc[pos]].dim;
                    if vals.iter().any(|&v| v >= d) {
                        return Err(bad(format!("{} uses a value outside register {r}", e.label)));
                    }
                }
            }
        }
        // Σ_k P_k is diagonal in the local cell basis; count coverage per cell.
        let mut residual: f64 = 0.0;
        let has_rest = elements.iter().any(|e| e.rest);
        for m in 0..main_dim {
            for c in &combos {
                let map: HashMap<&str, usize> = anc_names.iter().copied().zip(c.iter().copied()).collect();
                let hits = elements
                    .iter()
                    .filter(|e| !e.rest && e.blocks.iter().any(|b| b.contains(m, &map)))
                    .count();
                let total = if hits == 0 && has_rest { 1 } else { hits };
                residual = residual.max((total as f64 - 1.0).abs());
            }
        }
        check.measurements += 1;
        check.completeness_residual = check.completeness_residual.max(residual);
        if residual > 0.0 {
            return Err(bad(format!("elements do not form a projective measurement (residual {residual})")));
        }
        for ch in children {
            self.check_node(ch, &mut layout, check, seen)?;
        }
        Ok(())
    }

    /// Flat JSON: nodes, edges and leaves keyed by id.
    pub fn to_json(&self) -> Value {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut leaves = Vec::new();
        fn walk(n: &Node, nodes: &mut Vec<Value>, edges: &mut Vec<Value>, leaves: &mut Vec<Value>) {
            match &n.kind {
                NodeKind::Leaf { claimed } => leaves.push(json!({
                    "id": n.id, "claimed": claimed, "events": n.events, "mirror": n.mirror,
                })),
                NodeKind::Measure {
                    party,
                    elements,
                    children,
                } => {
                    nodes.push(json!({
                        "id": n.id, "party": party, "elements": elements, "events": n.events, "mirror": n.mirror,
                    }));
                    for (k, c) in children.iter().enumerate() {
                        edges.push(json!({"from": n.id, "outcome": k, "to": c.id}));
                        walk(c, nodes, edges, leaves);
                    }
                }
            }
        }
        walk(&self.root, &mut nodes, &mut edges, &mut leaves);
        json!({
            "name": self.name,
            "family": self.family,
            "dims": self.dims,
            "resources": self.resources,
            "root": self.root.id,
            "nodes": nodes,
            "edges": edges,
            "leaves": leaves,
        })
    }

    pub fn from_json(v: &Value) -> Result<ProtocolTree> {
        #[derive(Deserialize)]
        struct FlatNode {
            id: String,
            party: usize,
            elements: Vec<Element>,
            #[serde(default)]
            events: Vec<ResourceEvent>,
            #[serde(default)]
            mirror: bool,
        }
        #[derive(Deserialize)]
        struct FlatLeaf {
            id: String,
            claimed: Vec<String>,
            #[serde(default)]
            events: Vec<ResourceEvent>,
            #[serde(default)]
            mirror: bool,
        }
        #[derive(Deserialize)]
        struct Edge {
            from: String,
            outcome: usize,
            to: String,
        }
        #[derive(Deserialize)]
        struct Flat {
            name: String,
            family: String,
            dims: SystemDims,
            resources: ResourceConfig,
            root: String,
            nodes: Vec<FlatNode>,
            #[serde(default)]
            edges: Vec<Edge>,
            #[serde(default)]
            leaves: Vec<FlatLeaf>,
        }
        let flat: Flat = serde_json::from_value(v.clone())?;
        let nodes: HashMap<&str, &FlatNode> = flat.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
        let leaves: HashMap<&str, &FlatLeaf> = flat.leaves.iter().map(|n| (n.id.as_str(), n)).collect();
        let mut out_edges: HashMap<&str, BTreeMap<usize, &str>> = HashMap::new();
        for e in &flat.edges {
            if out_edges.entry(e.from.as_str()).or_default().insert(e.outcome, e.to.as_str()).is_some() {
                return Err(Error::InvalidTree(format!("duplicate edge {}#{}", e.from, e.outcome)));
            }
        }
        fn build(
            id: &str,
            nodes: &HashMap<&str, &FlatNode>,
            leaves: &HashMap<&str, &FlatLeaf>,
            edges: &HashMap<&str, BTreeMap<usize, &str>>,
            stack: &mut Vec<String>,
        ) -> Result<Node> {
            if stack.iter().any(|s| s == id) {
                return Err(Error::InvalidTree(format!("cycle through {id}")));
            }
            if let Some(l) = leaves.get(id) {
                return Ok(Node {
                    id: l.id.clone(),
                    events: l.events.clone(),
                    kind: NodeKind::Leaf {
                        claimed: l.claimed.clone(),
                    },
                    mirror: l.mirror,
                });
            }
            let n = nodes
                .get(id)
                .ok_or_else(|| Error::InvalidTree(format!("unknown node {id}")))?;
            stack.push(id.to_string());
            let empty = BTreeMap::new();
            let outs = edges.get(id).unwrap_or(&empty);
            let mut children = Vec::new();
            for k in 0..n.elements.len() {
                let to = outs
                    .get(&k)
                    .ok_or_else(|| Error::InvalidTree(format!("node {id} has no edge for outcome {k}")))?;
                children.push(build(to, nodes, leaves, edges, stack)?);
            }
            if outs.len() != n.elements.len() {
                return Err(Error::InvalidTree(format!("node {id} has extra edges")));
            }
            stack.pop();
            Ok(Node {
                id: n.id.clone(),
                events: n.events.clone(),
                kind: NodeKind::Measure {
                    party: n.party,
                    elements: n.elements.clone(),
                    children,
                },
                mirror: n.mirror,
            })
        }
        let root = build(&flat.root, &nodes, &leaves, &out_edges, &mut Vec::new())?;
        Ok(ProtocolTree {
            name: flat.name,
            family: flat.family,
            dims: flat.dims,
            resources: flat.resources,
            root,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::resources::ResourceEntry;
    use num_rational::Ratio;

    fn toy() -> ProtocolTree {
        let cfg = ResourceConfig {
            entries: vec![ResourceEntry::new(Ratio::from_integer(1), 2, (0, 1)).unwrap()],
        };
        let base = Node::leaf("L", &["S1"]);
        let root = Node::measure(
            "M",
            0,
            vec![
                (Element::new("M1", vec![Block::new([0]).with("a", [0]), Block::new([1]).with("a", [1])]), base.clone()),
                (
                    shift_element(
                        &Element::new("M1", vec![Block::new([0]).with("a", [0]), Block::new([1]).with("a", [1])]),
                        &["a", "b"],
                        1,
                        2,
                    ),
                    base.mirrored(&["a", "b"], 1, 2, "'"),
                ),
            ],
        )
        .with_events(vec![ResourceEvent::Share {
            entry: 0,
            dim: 2,
            left: (0, "a".into()),
            right: (1, "b".into()),
        }]);
        ProtocolTree {
            name: "toy".into(),
            family: "toy".into(),
            dims: SystemDims::new(vec![2, 2]).unwrap(),
            resources: cfg,
            root,
        }
    }

    #[test]
    fn shifted_pair_is_complete() {
        let t = toy();
        let c = t.check().unwrap();
        assert_eq!(c.measurements, 1);
        assert_eq!(c.completeness_residual, 0.0);
    }

    #[test]
    fn overlap_is_rejected() {
        let mut t = toy();
        if let NodeKind::Measure { elements, .. } = &mut t.root.kind {
            elements[1].blocks.push(Block::new([0]).with("a", [0]));
        }
        assert!(t.check().is_err());
    }

    #[test]
    fn foreign_register_is_rejected() {
        let mut t = toy();
        if let NodeKind::Measure { elements, .. } = &mut t.root.kind {
            elements[0].blocks[0] = Block::new([0]).with("b", [0]);
        }
        assert!(t.check().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let t = toy();
        let v = t.to_json();
        assert_eq!(ProtocolTree::from_json(&v).unwrap(), t);
        let mut broken = v.clone();
        broken["edges"].as_array_mut().unwrap().pop();
        assert!(ProtocolTree::from_json(&broken).is_err());
    }

    #[test]
    fn substitution_expands_values() {
        let map = BTreeMap::from([("x".to_string(), vec![("x1".to_string(), 2), ("x2".to_string(), 2)])]);
        let b = Block::new([0]).with("x", [1, 2]).with("y", [0]);
        let out = substitute_block(&b, &map);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].ancilla["x1"], BTreeSet::from([0]));
        assert_eq!(out[0].ancilla["x2"], BTreeSet::from([1]));
        assert_eq!(out[1].ancilla["x1"], BTreeSet::from([1]));
        assert_eq!(out[1].ancilla["x2"], BTreeSet::from([0]));
        assert_eq!(out[1].ancilla["y"], BTreeSet::from([0]));
    }
}
