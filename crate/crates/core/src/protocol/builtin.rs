//! Built-in protocol trees for the twelve-subset, twenty-four-subset and
//! four-party families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::resources::{ResourceConfig, ResourceEntry};
use super::tree::{shift_element, Block, Element, Node, ProtocolTree, ResourceEvent};
use crate::construct::OpsFamilyId;
use crate::error::{Error, Result};
use crate::state::SystemDims;

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinTheorem {
    Thm8,
    Thm9,
    Thm10,
    Thm11,
    Thm12,
    Thm13,
    Thm14a,
    Thm14b,
}

impl BuiltinTheorem {
    pub const ALL: [BuiltinTheorem; 8] = [
        BuiltinTheorem::Thm8,
        BuiltinTheorem::Thm9,
        BuiltinTheorem::Thm10,
        BuiltinTheorem::Thm11,
        BuiltinTheorem::Thm12,
        BuiltinTheorem::Thm13,
        BuiltinTheorem::Thm14a,
        BuiltinTheorem::Thm14b,
    ];

    pub fn family(self) -> OpsFamilyId {
        match self {
            BuiltinTheorem::Thm8 | BuiltinTheorem::Thm9 => OpsFamilyId::H12,
            BuiltinTheorem::Thm10 | BuiltinTheorem::Thm11 | BuiltinTheorem::Thm12 => OpsFamilyId::H8x3,
            _ => OpsFamilyId::U4party,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            BuiltinTheorem::Thm8 => "8",
            BuiltinTheorem::Thm9 => "9",
            BuiltinTheorem::Thm10 => "10",
            BuiltinTheorem::Thm11 => "11",
            BuiltinTheorem::Thm12 => "12",
            BuiltinTheorem::Thm13 => "13",
            BuiltinTheorem::Thm14a => "14a",
            BuiltinTheorem::Thm14b => "14b",
        }
    }
}

impl fmt::Display for BuiltinTheorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thm{}", self.id())
    }
}

impl FromStr for BuiltinTheorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("thm").unwrap_or(&t);
        BuiltinTheorem::ALL
            .into_iter()
            .find(|b| b.id() == t)
            .ok_or_else(|| Error::Domain(format!("unknown theorem {s:?}; expected one of 8, 9, 10, 11, 12, 13, 14a, 14b")))
    }
}

/// Inclusive range, empty when `lo > hi`.
fn rng(lo: usize, hi: usize) -> Vec<usize> {
    if lo > hi {
        Vec::new()
    } else {
        (lo..=hi).collect()
    }
}

/// Indices of B̃ = B ⊗ C for the given B and C values.
fn tilde(bs: &[usize], cs: &[usize], dc: usize) -> Vec<usize> {
    bs.iter().flat_map(|&b| cs.iter().map(move |&c| b * dc + c)).collect()
}

fn leaf(id: &str, claimed: &[&str]) -> Node {
    Node::leaf(id, claimed)
}

fn el(label: &str, blocks: Vec<Block>) -> Element {
    Element::new(label, blocks)
}

/// A measurement whose element `k` is `base` with `regs` shifted by `k`,
/// and whose child `k` is the mirror of `child` under the same shift.
fn shifted(id: &str, party: usize, prefix: &str, base: Vec<Block>, regs: &[&str], dim: usize, child: Node) -> Node {
    let e0 = el(&format!("{prefix}1"), base);
    let branches = (0..dim)
        .map(|k| {
            let mut e = shift_element(&e0, regs, k, dim);
            e.label = format!("{prefix}{}", k + 1);
            let c = if k == 0 {
                child.clone()
            } else {
                child.mirrored(regs, k, dim, &format!("^{id}.{}", k + 1))
            };
            (e, c)
        })
        .collect();
    Node::measure(id, party, branches)
}

fn share(entry: usize, dim: usize, left: (usize, &str), right: (usize, &str)) -> ResourceEvent {
    ResourceEvent::Share {
        entry,
        dim,
        left: (left.0, left.1.to_string()),
        right: (right.0, right.1.to_string()),
    }
}

fn entry(amount: i64, dim: usize, parties: (usize, usize)) -> Result<ResourceEntry> {
    ResourceEntry::new(Ratio::from_integer(amount), dim, parties)
}

fn all_labels(family: &OpsFamilyId, dims: &SystemDims) -> Result<Vec<String>> {
    Ok(crate::construct::build(family, dims)?
        .subsets
        .into_iter()
        .map(|s| s.label)
        .collect())
}

pub fn builtin_tree(thm: BuiltinTheorem, dims: &SystemDims) -> Result<ProtocolTree> {
    let family = thm.family();
    family.admissible(dims)?;
    let (resources, root) = match thm {
        BuiltinTheorem::Thm8 => thm8(dims)?,
        BuiltinTheorem::Thm9 => thm9(dims)?,
        BuiltinTheorem::Thm10 => thm10(dims)?,
        BuiltinTheorem::Thm11 => thm11(dims)?,
        BuiltinTheorem::Thm12 => thm12(dims)?,
        BuiltinTheorem::Thm13 => thm13(dims)?,
        BuiltinTheorem::Thm14a => thm14(dims, false)?,
        BuiltinTheorem::Thm14b => thm14(dims, true)?,
    };
    Ok(ProtocolTree {
        name: thm.to_string(),
        family: family.name().to_string(),
        dims: dims.clone(),
        resources,
        root,
    })
}

fn primes(dims: &SystemDims) -> (usize, usize, usize) {
    (dims.get(A) - 1, dims.get(B) - 1, dims.get(C) - 1)
}

fn thm8(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let (da, db, dc) = primes(dims);
    let w = dims.get(C);
    let bob = Node::measure(
        "N2",
        B,
        vec![
            (el("M21", vec![Block::new(tilde(&[0], &rng(1, dc - 1), w)).with("b", [0])]), leaf("L21", &["H_3"])),
            (el("M22", vec![Block::new(tilde(&rng(1, db - 1), &[dc], w)).with("b", [0])]), leaf("L22", &["H_6"])),
            (el("M23", vec![Block::new(tilde(&[0, db], &[0], w)).with("b", [1])]), leaf("L23", &["H_8"])),
            (el("M24", vec![Block::new(tilde(&rng(0, db - 1), &rng(1, dc - 1), w)).with("b", [1])]), leaf("L24", &["H_5"])),
            (el("M25", vec![Block::new(tilde(&rng(1, db - 1), &[0, dc], w)).with("b", [1])]), leaf("L25", &["H_10"])),
            (
                Element::rest("M26"),
                Node::measure(
                    "N3",
                    A,
                    vec![
                        (
                            el("M31", vec![Block::new([0]).with("a", [0]), Block::new([da]).with("a", [1])]),
                            leaf("L31", &["H_1", "H_7", "H_9", "H_12"]),
                        ),
                        (Element::rest("M32"), leaf("L32", &["H_2", "H_4", "H_11"])),
                    ],
                ),
            ),
        ],
    );
    let root = shifted(
        "N1",
        A,
        "M1",
        vec![Block::new(rng(0, da - 1)).with("a", [0]), Block::new([da]).with("a", [1])],
        &["a", "b"],
        2,
        bob,
    )
    .with_events(vec![
        ResourceEvent::Teleport { entry: 0, from: C, to: B },
        share(1, 2, (A, "a"), (B, "b")),
    ]);
    let cfg = ResourceConfig {
        entries: vec![entry(1, dims.get(C), (B, C))?, entry(1, 2, (A, B))?],
    };
    Ok((cfg, root))
}

fn thm9(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let (da, db, dc) = primes(dims);
    // Conditional pair used only on the M31 branch.
    let bob3 = shifted(
        "N3b",
        B,
        "M3'",
        vec![Block::new([0]).with("b2", [0]), Block::new(rng(1, db)).with("b2", [1])],
        &["a3", "b2"],
        2,
        Node::measure(
            "N3a",
            A,
            vec![
                (el("M3''1", vec![Block::new([0]).with("a3", [1])]), leaf("L3a", &["H_1"])),
                (Element::rest("M3''2"), leaf("L3b", &["H_2", "H_3"])),
            ],
        ),
    )
    .with_events(vec![share(2, 2, (A, "a3"), (B, "b2"))]);
    let tail = Node::measure(
        "N4",
        C,
        vec![
            (el("M41", vec![Block::new(rng(1, dc - 1)).with("c1", [1])]), leaf("L41", &["H_5", "H_12"])),
            (
                Element::rest("M42"),
                Node::measure(
                    "N5",
                    A,
                    vec![
                        (el("M51", vec![Block::new([0]).with("a1", [1])]), leaf("L51", &["H_7"])),
                        (
                            Element::rest("M52"),
                            Node::measure(
                                "N6",
                                B,
                                vec![
                                    (
                                        el("M61", vec![Block::new([0]).with("b1", [0]), Block::new([db]).with("b1", [1])]),
                                        leaf("L61", &["H_8", "H_9", "H_11"]),
                                    ),
                                    (Element::rest("M62"), leaf("L62", &["H_6", "H_10"])),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
        ],
    );
    let alice = Node::measure(
        "N3",
        A,
        vec![
            (el("M31", vec![Block::new(rng(0, da - 1)).with("a1", [0]).with("a2", [1])]), bob3),
            (el("M32", vec![Block::new(rng(1, da - 1)).with("a1", [1]).with("a2", [1])]), leaf("L32", &["H_4"])),
            (Element::rest("M33"), tail),
        ],
    );
    let charlie = shifted(
        "N2",
        C,
        "M2",
        vec![Block::new(rng(0, dc - 1)).with("c1", [1]), Block::new([dc]).with("c1", [0])],
        &["a2", "c1"],
        2,
        alice,
    );
    let root = shifted(
        "N1",
        B,
        "M1",
        vec![Block::new(rng(0, db - 1)).with("b1", [0]), Block::new([db]).with("b1", [1])],
        &["a1", "b1"],
        2,
        charlie,
    )
    .with_events(vec![share(0, 2, (A, "a1"), (B, "b1")), share(1, 2, (A, "a2"), (C, "c1"))]);
    let cfg = ResourceConfig {
        entries: vec![entry(1, 2, (A, B))?, entry(1, 2, (A, C))?, entry(1, 2, (A, B))?],
    };
    Ok((cfg, root))
}

fn thm10(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let (da, db, dc) = primes(dims);
    let w = dims.get(C);
    let t = |bs: &[usize], cs: &[usize]| tilde(bs, cs, w);
    let cat = |parts: Vec<Vec<usize>>| parts.concat();
    let after_m22 = Node::measure(
        "N2a",
        A,
        vec![
            (el("M2'1", vec![Block::new([0]).with("a", [0])]), leaf("L2a1", &["H_31", "H_72"])),
            (Element::rest("M2'2"), leaf("L2a2", &["H_12", "H_51", "H_63"])),
        ],
    );
    let after_m24 = Node::measure(
        "N2b",
        A,
        vec![
            (el("M2''1", vec![Block::new(rng(2, da - 1)).with("a", [1])]), leaf("L2b1", &["H_22"])),
            (Element::rest("M2''2"), leaf("L2b2", &["H_32", "H_81"])),
        ],
    );
    let tail = Node::measure(
        "N3",
        A,
        vec![
            (el("M31", vec![Block::new([da]).with("a", [1])]), leaf("L31", &["H_71"])),
            (
                Element::rest("M32"),
                Node::measure(
                    "N4",
                    B,
                    vec![
                        (el("M41", vec![Block::new(t(&[0], &rng(2, dc - 1)))]), leaf("L41", &["H_23"])),
                        (
                            Element::rest("M42"),
                            Node::measure(
                                "N5",
                                A,
                                vec![
                                    (el("M51", vec![Block::new([1]).with("a", [0])]), leaf("L51", &["H_82"])),
                                    (Element::rest("M52"), leaf("L52", &["H_33", "H_11"])),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
        ],
    );
    let bob = Node::measure(
        "N2",
        B,
        vec![
            (el("M21", vec![Block::new(t(&rng(1, db - 1), &rng(2, dc - 1))).with("b", [1])]), leaf("L21", &["H_62"])),
            (
                el(
                    "M22",
                    vec![
                        Block::new(cat(vec![t(&rng(2, db), &[0, dc]), t(&[db], &rng(2, dc - 1))])).with("b", [0]),
                        Block::new(t(&rng(2, db - 1), &[dc])).with("b", [1]),
                    ],
                ),
                after_m22,
            ),
            (el("M23", vec![Block::new(t(&[0], &[1])).with("b", [1])]), leaf("L23", &["H_13"])),
            (
                el("M24", vec![Block::new(cat(vec![t(&rng(0, db - 1), &[0]), t(&[1], &[1])])).with("b", [1])]),
                after_m24,
            ),
            (el("M25", vec![Block::new(t(&[1], &[dc])).with("b", [1])]), leaf("L25", &["H_53"])),
            (
                // Written with d_B'∘2 only; the range is needed once d_C > 4.
                el("M26", vec![Block::new(cat(vec![t(&rng(2, db), &[1]), t(&[db], &rng(2, dc - 1))])).with("b", [1])]),
                leaf("L26", &["H_52", "H_61"]),
            ),
            (el("M27", vec![Block::new(t(&[db], &[0])).with("b", [1])]), leaf("L27", &["H_73"])),
            (
                el("M28", vec![Block::new(cat(vec![t(&[0], &[0, 1]), t(&[1], &[1])])).with("b", [0])]),
                leaf("L28", &["H_41", "H_42"]),
            ),
            (el("M29", vec![Block::new(t(&[1], &[0])).with("b", [0])]), leaf("L29", &["H_43"])),
            (el("M210", vec![Block::new(t(&[db], &[1])).with("b", [0])]), leaf("L210", &["H_83"])),
            (el("M211", vec![Block::new(t(&rng(2, db - 1), &rng(1, dc - 1))).with("b", [0])]), leaf("L211", &["H_21"])),
            (Element::rest("M212"), tail),
        ],
    );
    let root = shifted(
        "N1",
        A,
        "M1",
        vec![Block::new([0, 1]).with("a", [0]), Block::new(rng(2, da)).with("a", [1])],
        &["a", "b"],
        2,
        bob,
    )
    .with_events(vec![
        ResourceEvent::Teleport { entry: 0, from: C, to: B },
        share(1, 2, (A, "a"), (B, "b")),
    ]);
    let cfg = ResourceConfig {
        entries: vec![entry(1, dims.get(C), (B, C))?, entry(1, 2, (A, B))?],
    };
    Ok((cfg, root))
}

/// Measurement part of the four-dimensional-ancilla protocol, without resource events.
fn thm11_measurements(dims: &SystemDims) -> Node {
    let (da, db, dc) = primes(dims);
    let blk = |a: Vec<usize>, a1: &[usize], a2: &[usize]| {
        let mut b = Block::new(a).with("a1", a1.iter().copied());
        if !a2.is_empty() {
            b = b.with("a2", a2.iter().copied());
        }
        b
    };
    let m55 = Node::measure(
        "N5a",
        C,
        vec![
            (el("M5'1", vec![Block::new([1]).with("c1", [0])]), leaf("L5a1", &["H_83"])),
            (Element::rest("M5'2"), leaf("L5a2", &["H_12", "H_31"])),
        ],
    );
    let m56 = Node::measure(
        "N6",
        C,
        vec![
            (el("M61", vec![Block::new([0]).with("c1", [0])]), leaf("L61", &["H_32", "H_73"])),
            (Element::rest("M62"), leaf("L62", &["H_13", "H_52", "H_61"])),
        ],
    );
    let alice5 = Node::measure(
        "N5",
        A,
        vec![
            (el("M51", vec![blk(vec![0, 1], &[0, 1], &[0])]), leaf("L51", &["H_43", "H_42"])),
            (el("M52", vec![blk(rng(2, da), &[1, 2], &[1])]), leaf("L52", &["H_62"])),
            (el("M53", vec![blk(rng(1, da - 1), &[0], &[1])]), leaf("L53", &["H_23"])),
            (el("M54", vec![blk(vec![0], &[2], &[])]), leaf("L54", &["H_21"])),
            (
                el(
                    "M55",
                    vec![blk(vec![0, 1], &[3], &[0]), blk(vec![0], &[3], &[1]), blk(vec![1], &[2], &[0])],
                ),
                m55,
            ),
            (Element::rest("M56"), m56),
        ],
    );
    let alice3 = Node::measure(
        "N3",
        A,
        vec![
            (el("M31", vec![blk(vec![da], &[0], &[1])]), leaf("L31", &["H_71"])),
            (el("M32", vec![blk(vec![1], &[0], &[0])]), leaf("L32", &["H_41"])),
            (el("M33", vec![blk(rng(2, da - 1), &[1, 2], &[0])]), leaf("L33", &["H_22"])),
            (el("M34", vec![blk(vec![0], &[1], &[1])]), leaf("L34", &["H_11"])),
            (el("M35", vec![blk(vec![da], &[1], &[0])]), leaf("L35", &["H_81"])),
            (el("M36", vec![blk(rng(1, da - 1), &[2], &[1])]), leaf("L36", &["H_63"])),
            (el("M37", vec![blk(vec![1], &[3], &[1])]), leaf("L37", &["H_51"])),
            (
                Element::rest("M38"),
                Node::measure(
                    "N4",
                    C,
                    vec![
                        (el("M41", vec![Block::new([dc]).with("c1", [1])]), leaf("L41", &["H_33", "H_53", "H_72", "H_82"])),
                        (Element::rest("M42"), alice5),
                    ],
                ),
            ),
        ],
    );
    let charlie = shifted(
        "N2",
        C,
        "M2",
        vec![Block::new([0, 1]).with("c1", [0]), Block::new(rng(2, dc)).with("c1", [1])],
        &["a2", "c1"],
        2,
        alice3,
    );
    shifted(
        "N1",
        B,
        "M1",
        vec![
            Block::new([0]).with("b1", [0]),
            Block::new([1]).with("b1", [1]),
            Block::new(rng(2, db - 1)).with("b1", [2]),
            Block::new([db]).with("b1", [3]),
        ],
        &["a1", "b1"],
        4,
        charlie,
    )
}

fn thm11(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let root = thm11_measurements(dims).with_events(vec![share(0, 4, (A, "a1"), (B, "b1")), share(1, 2, (A, "a2"), (C, "c1"))]);
    let cfg = ResourceConfig {
        entries: vec![entry(1, 4, (A, B))?, entry(1, 2, (A, C))?],
    };
    Ok((cfg, root))
}

fn split_map(pairs: &[(&str, &[&str])], dim: usize) -> BTreeMap<String, Vec<(String, usize)>> {
    pairs
        .iter()
        .map(|(l, ps)| (l.to_string(), ps.iter().map(|p| (p.to_string(), dim)).collect()))
        .collect()
}

fn thm12(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let map = split_map(&[("a1", &["a1", "a2"]), ("b1", &["b1", "b2"]), ("a2", &["a3"])], 2);
    let root = thm11_measurements(dims).substituted(&map).with_events(vec![
        share(0, 2, (A, "a1"), (B, "b1")),
        share(0, 2, (A, "a2"), (B, "b2")),
        share(1, 2, (A, "a3"), (C, "c1")),
    ]);
    let cfg = ResourceConfig {
        entries: vec![entry(2, 2, (A, B))?, entry(1, 2, (A, C))?],
    };
    Ok((cfg, root))
}

fn thm13(dims: &SystemDims) -> Result<(ResourceConfig, Node)> {
    let da = dims.get(A) - 1;
    let labels = all_labels(&OpsFamilyId::U4party, dims)?;
    let claimed: Vec<&str> = labels.iter().map(String::as_str).collect();
    let root = shifted(
        "N1",
        A,
        "M1",
        vec![
            Block::new([0]).with("a", [0]),
            Block::new(rng(1, da - 1)).with("a", [1]),
            Block::new([da]).with("a", [2]),
        ],
        &["a", "b"],
        3,
        leaf("L1", &claimed),
    )
    .with_events(vec![
        ResourceEvent::Teleport { entry: 0, from: C, to: B },
        ResourceEvent::Teleport { entry: 1, from: D, to: B },
        share(2, 3, (A, "a"), (B, "b")),
    ]);
    let cfg = ResourceConfig {
        entries: vec![
            entry(1, dims.get(C), (B, C))?,
            entry(1, dims.get(D), (B, D))?,
            entry(1, 3, (A, B))?,
        ],
    };
    Ok((cfg, root))
}

/// Parties B, C and D each hand the class of their index (first, middle,
/// last) to Alice through a shared pair; Alice then holds everything needed.
/// With `split`, each link is a four-dimensional pair realized by two EPR pairs.
fn thm14(dims: &SystemDims, split: bool) -> Result<(ResourceConfig, Node)> {
    let labels = all_labels(&OpsFamilyId::U4party, dims)?;
    let claimed: Vec<&str> = labels.iter().map(String::as_str).collect();
    let link = if split { 4 } else { 3 };
    let mut node = leaf("L", &claimed);
    for (party, anc, reg) in [(D, "a3", "d"), (C, "a2", "c"), (B, "a1", "b")].into_iter() {
        let dp = dims.get(party) - 1;
        node = shifted(
            &format!("N{}", crate::state::party_name(party)),
            party,
            &format!("M{}", crate::state::party_name(party)),
            vec![
                Block::new([0]).with(reg, [0]),
                Block::new(rng(1, dp - 1)).with(reg, [1]),
                Block::new([dp]).with(reg, [2]),
            ],
            &[anc, reg],
            link,
            node,
        );
    }
    let links = [(B, "a1", "b"), (C, "a2", "c"), (D, "a3", "d")];
    if !split {
        let events = links
            .iter()
            .enumerate()
            .map(|(k, &(p, a, r))| share(k, 3, (A, a), (p, r)))
            .collect();
        let cfg = ResourceConfig {
            entries: vec![entry(1, 3, (A, B))?, entry(1, 3, (A, C))?, entry(1, 3, (A, D))?],
        };
        return Ok((cfg, node.with_events(events)));
    }
    let mut map = BTreeMap::new();
    let mut events = Vec::new();
    for (k, &(p, a, r)) in links.iter().enumerate() {
        let (a_hi, a_lo, r_hi, r_lo) = (format!("{a}h"), format!("{a}l"), format!("{r}h"), format!("{r}l"));
        events.push(share(k, 2, (A, &a_hi), (p, &r_hi)));
        events.push(share(k, 2, (A, &a_lo), (p, &r_lo)));
        map.insert(a.to_string(), vec![(a_hi, 2), (a_lo, 2)]);
        map.insert(r.to_string(), vec![(r_hi, 2), (r_lo, 2)]);
    }
    let cfg = ResourceConfig {
        entries: vec![entry(2, 2, (A, B))?, entry(2, 2, (A, C))?, entry(2, 2, (A, D))?],
    };
    Ok((cfg, node.substituted(&map).with_events(events)))
}
