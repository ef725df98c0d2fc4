//! Frozen PI families, set sequences and condition iii) witnesses for the
//! S48, H8x3 and U4party sets on the X = all-but-first grouping.

use nonloc_core::plane::{
    build_set_sequence, check_condition_iii, find_pi_sets, is_pi_set, projection_sets, IiiWitness, ProjectionSets, SetSequence,
};
use nonloc_core::*;

mod common;
use common::*;

fn setup(family: OpsFamilyId, d: &[usize]) -> (OpsInstance, ProjectionSets) {
    let ops = build(&family, &SystemDims::new(d.to_vec()).unwrap()).unwrap();
    let bip = Bipartition::cyclic(0, d.len()).unwrap();
    let ps = projection_sets(&ops, &bip);
    (ops, ps)
}

fn idx(ops: &OpsInstance, label: &str) -> usize {
    ops.subset_index(label).unwrap_or_else(|| panic!("no subset {label}"))
}

fn labels(ops: &OpsInstance, v: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = v.iter().map(|&k| ops.subsets[k].label.clone()).collect();
    out.sort();
    out
}

fn sorted(v: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    out.sort();
    out
}

/// Each listed family must be a valid PI set for its target and sit inside
/// one of the families reported by the search.
fn check_pi_table(ops: &OpsInstance, ps: &ProjectionSets, prefix: &str, table: &[(&str, &[&str])]) {
    for (target, fam) in table {
        let r = idx(ops, &format!("{prefix}_{target}"));
        let f: Vec<usize> = fam.iter().map(|l| idx(ops, &format!("{prefix}_{l}"))).collect();
        assert!(is_pi_set(ps, r, &f), "{target}: {fam:?} is not a PI set");
        let found = find_pi_sets(ps, r);
        assert!(
            found.iter().any(|p| f.iter().all(|k| p.family.contains(k))),
            "{target}: {fam:?} not inside any reported family"
        );
        assert!(found.iter().all(|p| p.verify(ps)));
    }
}

#[test]
fn s48_pi_families() {
    let (ops, ps) = setup(OpsFamilyId::S48, &[4, 4, 4]);
    check_pi_table(&ops, &ps, "S", S48_TABLE);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let seq = build_set_sequence(&ps, &pis).unwrap();
    assert_eq!(seq.groups.len(), 1);
}

#[test]
fn h8x3_pi_families_and_sequence() {
    let (ops, ps) = setup(OpsFamilyId::H8x3, &[4, 4, 4]);
    check_pi_table(&ops, &ps, "H", S48_TABLE);
    let (ops, ps) = setup(OpsFamilyId::H8x3, &[5, 5, 5]);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let seq = build_set_sequence(&ps, &pis).unwrap();
    assert_eq!(seq.groups.len(), 2);
    assert_eq!(labels(&ops, &seq.groups[1]), sorted(&["H_21", "H_23", "H_62", "H_63"]));
    assert!(seq.nic[1].iter().all(|&b| b));
    let iii = check_condition_iii(&ps, &pis, &seq);
    assert!(iii.pass);
    for (r, k) in [("21", "52"), ("23", "71"), ("62", "11"), ("63", "72")] {
        let r = idx(&ops, &format!("H_{r}"));
        let k = idx(&ops, &format!("H_{k}"));
        assert!(seq.groups[0].contains(&k));
        assert!(pis[r].iter().any(|p| p.family.contains(&k)));
    }
}

#[test]
fn h12_sequence_at_444() {
    let (ops, ps) = setup(OpsFamilyId::H12, &[4, 4, 4]);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let seq = build_set_sequence(&ps, &pis).unwrap();
    let got: Vec<Vec<String>> = seq.groups.iter().map(|g| labels(&ops, g)).collect();
    assert_eq!(
        got,
        vec![
            sorted(&["H_2", "H_4", "H_7", "H_8", "H_9", "H_11"]),
            sorted(&["H_1", "H_10", "H_12"]),
            sorted(&["H_5", "H_6"]),
            sorted(&["H_3"]),
        ]
    );
    let iii = check_condition_iii(&ps, &pis, &seq);
    assert!(iii.pass, "missing {:?}", labels(&ops, &iii.missing));
    // H_1 is reached from H_2 with H_10 in its PI set, intersections equal
    let (h1, h2, h10) = (idx(&ops, "H_1"), idx(&ops, "H_2"), idx(&ops, "H_10"));
    assert!(pis[h1].iter().any(|p| p.family.contains(&h10)));
    let a: Vec<_> = ps.x[h1].intersection(&ps.x[h2]).collect();
    let b: Vec<_> = ps.x[h1].intersection(&ps.x[h10]).collect();
    assert_eq!(a, b);
}

#[test]
fn u4party_pi_families() {
    let (ops, ps) = setup(OpsFamilyId::U4party, &[3, 3, 3, 3]);
    check_pi_table(&ops, &ps, "U", U4_TABLE);
}

fn u4_groups(ops: &OpsInstance) -> Vec<Vec<usize>> {
    U4_GROUPS
        .iter()
        .map(|g| g.iter().map(|s| idx(ops, &format!("U_{s}"))).collect())
        .collect()
}

#[test]
fn u4party_listed_sequence_and_links() {
    let (ops, ps) = setup(OpsFamilyId::U4party, &[3, 3, 3, 3]);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let seq = SetSequence::from_groups(&ps, &pis, u4_groups(&ops)).unwrap();
    for (r, k) in U4_LINKS {
        let r = idx(&ops, &format!("U_{r}"));
        let k = idx(&ops, &format!("U_{k}"));
        let x = seq.group_of(r).unwrap();
        assert!(x > 0 && seq.groups[x - 1].contains(&k));
        assert!(pis[r].iter().any(|p| p.family.contains(&k)));
    }
    // U_32 is reached through U_51 in the previous group and U_91 in its PI family
    let (u32_, u51, u91) = (idx(&ops, "U_32"), idx(&ops, "U_51"), idx(&ops, "U_91"));
    assert_eq!(seq.group_of(u32_), Some(2));
    assert_eq!(seq.group_of(u51), Some(1));
    assert!(pis[u32_].iter().any(|p| p.family.contains(&u91)));
    let a: Vec<_> = ps.x[u32_].intersection(&ps.x[u51]).collect();
    let b: Vec<_> = ps.x[u32_].intersection(&ps.x[u91]).collect();
    assert_eq!(a, b);
    let iii = check_condition_iii(&ps, &pis, &seq);
    assert!(iii.pass, "missing {:?}", labels(&ops, &iii.missing));
    assert!(iii.witnesses.iter().any(|w| matches!(w, IiiWitness::Chain { subset, .. } if *subset == u32_)));
}

#[test]
fn u4party_greedy_sequence_passes() {
    let (ops, ps) = setup(OpsFamilyId::U4party, &[3, 3, 3, 3]);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let seq = build_set_sequence(&ps, &pis).unwrap();
    // every subset of the listed first group is UPI, so greedy's G_1 contains it
    for r in &u4_groups(&ops)[0] {
        assert_eq!(seq.group_of(*r), Some(0));
    }
    let iii = check_condition_iii(&ps, &pis, &seq);
    assert!(iii.pass, "missing {:?}", labels(&ops, &iii.missing));
}

#[test]
fn listed_sequence_is_validated() {
    let (ops, ps) = setup(OpsFamilyId::U4party, &[3, 3, 3, 3]);
    let pis: Vec<_> = (0..ops.subsets.len()).map(|r| find_pi_sets(&ps, r)).collect();
    let mut g = u4_groups(&ops);
    let last = g.pop().unwrap();
    assert!(SetSequence::from_groups(&ps, &pis, g.clone()).is_err());
    g[0].extend(last.iter().copied());
    let dup = g[0][0];
    g[0].push(dup);
    assert!(SetSequence::from_groups(&ps, &pis, g).is_err());
}
