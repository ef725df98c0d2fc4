use std::collections::BTreeMap;

use num_complex::Complex64;
use nonloc_core::construct::{blocks_disjoint, check_symmetric};
use nonloc_core::plane::{check_condition_i, find_pi_sets, is_pi_set, projection_sets, theorem1_verdict};
use nonloc_core::povm::{assemble_constraints, nullspace_dimension, oracle_for};
use nonloc_core::protocol::{rationalize, LogSum, Q};
use nonloc_core::*;
use proptest::prelude::*;

fn dims(v: &[usize]) -> SystemDims {
    SystemDims::new(v.to_vec()).unwrap()
}

fn cyclic(n: usize) -> Vec<Bipartition> {
    (0..n).map(|i| Bipartition::cyclic(i, n).unwrap()).collect()
}

fn amp() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_filter_map("nonzero", |(re, im)| {
        let z = Complex64::new(re, im);
        (z.norm() > 1e-3).then_some(z)
    })
}

/// A dense random product state together with its dims.
fn product_state() -> impl Strategy<Value = (SystemDims, ProductState)> {
    prop::collection::vec(2usize..5, 2..5).prop_flat_map(|ds| {
        let factors: Vec<_> = ds.iter().map(|&d| prop::collection::vec(amp(), d)).collect();
        (Just(ds), factors).prop_map(|(ds, amps)| {
            let factors = amps
                .into_iter()
                .enumerate()
                .map(|(k, a)| LocalVector::new(k, ds[k], (0..ds[k]).collect(), a).unwrap())
                .collect();
            (dims(&ds), ProductState::new(factors, StateTag { subset: 0, index: 0 }).unwrap())
        })
    })
}

fn bipartition(n: usize) -> impl Strategy<Value = Bipartition> {
    (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..n).prop_map(move |(p, k)| {
        Bipartition::new(p[..k].to_vec(), p[k..].to_vec(), n).unwrap()
    })
}

fn h12_dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(3usize..6, 3)
}

fn small_fixture() -> impl Strategy<Value = OpsInstance> {
    prop_oneof![
        Just(build(&OpsFamilyId::Yuan333, &dims(&[3, 3, 3])).unwrap()),
        prop::collection::vec(3usize..5, 3).prop_map(|d| build(&OpsFamilyId::H12, &dims(&d)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_rows_are_orthogonal(d in 2usize..10, off in 0usize..5, len in 1usize..8, zh in any::<bool>()) {
        let off = if zh { off.max(1) } else { off };
        prop_assume!(off + len <= d);
        let order = len + zh as usize;
        let rows: Vec<_> = (0..order).map(|r| dft_local_vector(0, d, off, len, r, order, zh).unwrap()).collect();
        for i in 0..order {
            prop_assert!(rows[i].amps.iter().all(|a| a.norm() > 0.0));
            for j in i + 1..order {
                prop_assert!(rows[i].inner(&rows[j]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn group_then_ungroup_is_lossless((d, s) in product_state(), seed in any::<u64>()) {
        let n = d.n();
        let perm_k = (seed as usize) % (n - 1) + 1;
        let mut parties: Vec<usize> = (0..n).collect();
        parties.rotate_left((seed >> 8) as usize % n);
        let bip = Bipartition::new(parties[..perm_k].to_vec(), parties[perm_k..].to_vec(), n).unwrap();
        let (x, y) = group_vector(&s, &bip, &d).unwrap();
        prop_assert_eq!(x.len() * y.len(), d.total() as usize);
        let back = ungroup(&x, &y, &bip, &d);
        let full = s.to_dense(&d);
        let err = back.iter().zip(&full).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "round trip error {}", err);
        prop_assert!(inner_product(&s, &s).unwrap().re > 0.0);
    }

    #[test]
    fn any_grouping_round_trips((d, s, b) in product_state().prop_flat_map(|(d, s)| {
        let n = d.n();
        (Just(d), Just(s), bipartition(n))
    })) {
        let (x, y) = group_vector(&s, &b, &d).unwrap();
        let back = ungroup(&x, &y, &b, &d);
        let err = back.iter().zip(&s.to_dense(&d)).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn built_sets_are_consistent(d in h12_dims(), fam in 0usize..2) {
        let (f, d) = if fam == 0 { (OpsFamilyId::H12, d) } else { (OpsFamilyId::H8x3, d.iter().map(|x| x + 1).collect()) };
        let ops = build(&f, &dims(&d)).unwrap();
        prop_assert_eq!(ops.len(), expected_size(&f, &dims(&d)).unwrap());
        prop_assert!(ops.first_non_orthogonal_pair().is_none());
        for s in ops.states() {
            prop_assert!(s.factors.iter().all(|v| v.amps.iter().all(|a| a.norm() > 0.0)));
            prop_assert!(inner_product(s, s).unwrap().re > 0.0);
        }
        for a in 0..ops.subsets.len() {
            for b in a + 1..ops.subsets.len() {
                prop_assert!(blocks_disjoint(&ops.subsets[a].block, &ops.subsets[b].block));
            }
        }
        if d.iter().all(|&x| x == d[0]) {
            prop_assert!(check_symmetric(&ops).unwrap());
        }
        let back = OpsInstance::from_json(&ops.to_json().unwrap()).unwrap();
        for (p, q) in back.states().zip(ops.states()) {
            for (u, v) in p.factors.iter().zip(&q.factors) {
                prop_assert_eq!(&u.support, &v.support);
                for (x, y) in u.amps.iter().zip(&v.amps) {
                    prop_assert!((x - y).norm() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn identity_is_in_every_nullspace(ops in small_fixture()) {
        for b in cyclic(3) {
            prop_assert!(assemble_constraints(&ops, &b).unwrap().identity_residual() < 1e-12);
        }
    }

    #[test]
    fn oracle_is_scale_invariant(ops in small_fixture(), scales in prop::collection::vec(amp(), 64)) {
        let mut scaled = ops.clone();
        let mut k = 0;
        for sub in &mut scaled.subsets {
            for s in &mut sub.states {
                let z = scales[k % scales.len()] * 3.0;
                k += 1;
                s.factors[k % 3].amps.iter_mut().for_each(|a| *a *= z);
            }
        }
        for b in cyclic(3) {
            let p = oracle_for(&ops, &b).unwrap();
            let q = oracle_for(&scaled, &b).unwrap();
            prop_assert_eq!(p.nullspace_dim, q.nullspace_dim);
            prop_assert_eq!(p.trivial, q.trivial);
        }
    }

    #[test]
    fn constraints_ignore_pair_order(ops in small_fixture(), e in prop::collection::vec(amp(), 400)) {
        let b = Bipartition::cyclic(0, 3).unwrap();
        let sys = assemble_constraints(&ops, &b).unwrap();
        // a random Hermitian E: ⟨ψ|E|φ⟩ is the conjugate of ⟨φ|E|ψ⟩
        let d = sys.dim_x;
        let m = |i: usize, j: usize| if i <= j { e[(i * d + j) % e.len()] } else { e[(j * d + i) % e.len()].conj() };
        let herm = |i: usize, j: usize| if i == j { Complex64::new(m(i, i).re, 0.0) } else { m(i, j) };
        let form = |a: &[Complex64], c: &[Complex64]| -> Complex64 {
            (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| a[i].conj() * herm(i, j) * c[j]).sum()
        };
        for (a, c) in sys.constraints.iter().take(30) {
            prop_assert!((form(a, c) - form(c, a).conj()).norm() < 1e-9);
        }
        let mut swapped = sys.clone();
        swapped.constraints.iter_mut().for_each(|(a, c)| std::mem::swap(a, c));
        swapped.constraints.reverse();
        let p = nullspace_dimension(&sys).unwrap();
        let q = nullspace_dimension(&swapped).unwrap();
        prop_assert_eq!(p.nullspace_dim, q.nullspace_dim);
        prop_assert!((p.sigma_max - q.sigma_max).abs() < 1e-9 * p.sigma_max);
    }

    #[test]
    fn symmetric_sets_transport_across_groupings(d in 3usize..6) {
        let ops = build(&OpsFamilyId::H12, &dims(&[d, d, d])).unwrap();
        let reps: Vec<_> = cyclic(3).iter().map(|b| theorem1_verdict(&ops, b)).collect();
        for r in &reps[1..] {
            prop_assert_eq!(&r.verdict, &reps[0].verdict);
            let sizes = |r: &plane::Theorem1Report| {
                let mut v: Vec<usize> = r.projections.x.iter().map(|s| s.len()).collect();
                v.sort_unstable();
                v
            };
            prop_assert_eq!(sizes(r), sizes(&reps[0]));
        }
    }

    #[test]
    fn full_cover_implies_condition_i(ops in small_fixture()) {
        for b in cyclic(3) {
            let ps = projection_sets(&ops, &b);
            let c = check_condition_i(&ps, None);
            if c.per_i.iter().all(|v| v.s_tilde.len() == ps.dim_x) {
                prop_assert!(c.pass);
            }
        }
    }

    #[test]
    fn render_matches_projections(ops in small_fixture(), i in 0usize..3) {
        let b = Bipartition::cyclic(i, 3).unwrap();
        let g = render_grid(&ops, &b);
        let ps = projection_sets(&ops, &b);
        let mut m = BTreeMap::new();
        for r in 0..ps.x.len() {
            for &x in &ps.x[r] {
                for &y in &ps.y[r] {
                    prop_assert!(m.insert((x, y), r).is_none());
                }
            }
        }
        prop_assert_eq!(g.cell_map(), m);
    }

    #[test]
    fn rationalize_recovers_fractions(p in -500i64..500, q in 1i64..1000) {
        let x = p as f64 / q as f64;
        prop_assert_eq!(rationalize(x, 1_000_000, 1e-12), Some(Q::new(p, q)));
    }

    #[test]
    fn log_sums_add_like_reals(a in 2u64..40, b in 2u64..40, p in 0i64..20, q in 1i64..20) {
        let x = LogSum::log2(a).scale(Q::new(p, q));
        let y = LogSum::log2(b).add(&LogSum::rational(Q::new(q, p + 1)));
        prop_assert_eq!(x.add(&y), y.add(&x));
        let want = (a as f64).log2() * p as f64 / q as f64 + (b as f64).log2() + q as f64 / (p + 1) as f64;
        prop_assert!((x.add(&y).to_f64() - want).abs() < 1e-9);
    }
}

#[test]
fn pi_search_is_complete_on_yuan() {
    let ops = build(&OpsFamilyId::Yuan333, &dims(&[3, 3, 3])).unwrap();
    let m = ops.subsets.len();
    for b in cyclic(3) {
        let ps = projection_sets(&ops, &b);
        for r in 0..m {
            let found = find_pi_sets(&ps, r);
            assert!(found.iter().all(|p| p.verify(&ps)));
            let others: Vec<usize> = (0..m).filter(|&k| k != r).collect();
            let mut fams: Vec<Vec<usize>> = others.iter().map(|&a| vec![a]).collect();
            for (i, &a) in others.iter().enumerate() {
                for (j, &c) in others.iter().enumerate().skip(i + 1) {
                    fams.push(vec![a, c]);
                    for &e in &others[j + 1..] {
                        fams.push(vec![a, c, e]);
                    }
                }
            }
            for f in fams {
                if is_pi_set(&ps, r, &f) {
                    assert!(
                        found.iter().any(|p| f.iter().all(|k| p.family.contains(k))),
                        "{} {}: {f:?} missed",
                        b.label(),
                        r
                    );
                }
            }
        }
    }
}

fn admissible_case() -> impl Strategy<Value = (BuiltinTheorem, Vec<usize>)> {
    prop_oneof![
        (Just(BuiltinTheorem::Thm8), prop::collection::vec(3usize..6, 3)),
        (Just(BuiltinTheorem::Thm9), prop::collection::vec(3usize..6, 3)),
        (Just(BuiltinTheorem::Thm10), prop::collection::vec(4usize..6, 3)),
        (Just(BuiltinTheorem::Thm11), prop::collection::vec(4usize..6, 3)),
        (Just(BuiltinTheorem::Thm12), prop::collection::vec(4usize..6, 3)),
        (Just(BuiltinTheorem::Thm13), prop::collection::vec(3usize..5, 4)),
        (Just(BuiltinTheorem::Thm14a), Just(vec![3, 3, 3, 3])),
        (Just(BuiltinTheorem::Thm14b), Just(vec![3, 3, 3, 3])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn protocols_conserve_probability((thm, d) in admissible_case()) {
        let tree = builtin_tree(thm, &dims(&d)).unwrap();
        prop_assert!(tree.check().unwrap().completeness_residual < 1e-10);
        let ops = build(&thm.family(), &dims(&d)).unwrap();
        let r = run_protocol(&tree, &ops).unwrap();
        prop_assert!(r.verdict, "{} {:?}: {:?} {:?}", thm, d, r.soundness_failures, r.uncertified_leaves);
        let mut total: BTreeMap<&str, f64> = BTreeMap::new();
        for t in &r.transcripts {
            prop_assert!(t.weight > 0.0);
            *total.entry(&t.state).or_default() += t.weight;
        }
        prop_assert_eq!(total.len(), ops.len());
        prop_assert!(total.values().all(|w| (w - 1.0).abs() < 1e-10));
        // resource consistency: expectations stay inside the declared amounts
        prop_assert!(r.ebits.within_budget);
        for e in &r.ebits.entries {
            let used: Q = e.expected_copies.parse().unwrap();
            let declared = tree.resources.entries.iter().find(|x| x.label() == e.entry).unwrap().amount;
            prop_assert!(used <= declared, "{}: {} > {}", e.entry, used, declared);
        }
        let f = |x: usize| LogSum::log2(x as u64);
        let one = LogSum::rational(Q::from_integer(1));
        match thm {
            BuiltinTheorem::Thm8 | BuiltinTheorem::Thm10 => prop_assert_eq!(&r.ebits.expected_total, &one.add(&f(d[2]))),
            BuiltinTheorem::Thm13 => prop_assert_eq!(&r.ebits.expected_total, &f(3 * d[2] * d[3])),
            _ => {}
        }
    }

    #[test]
    fn trees_round_trip_through_json((thm, d) in admissible_case()) {
        let tree = builtin_tree(thm, &dims(&d)).unwrap();
        let back = ProtocolTree::from_json(&tree.to_json()).unwrap();
        prop_assert_eq!(back, tree);
    }
}
