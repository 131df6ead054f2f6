//! Cross-module invariants, driven by seeded random structures.

use mcw::expr::{self, Expr, Label, LabelSet};
use mcw::indpoly::{self, JoinMethod, LabeledIsPoly};
use mcw::oracle;
use mcw::treedec::{self, TreeDecomposition};
use mcw::{coloring, geval, LabeledGraph};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn rand_expr_from_seed(seed: u64, max_k: u32, max_n: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_k);
    let n = rng.gen_range(1..=max_n);
    oracle::random_expr(&mut rng, k, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// parse(print(e)) is the identity on ASTs.
    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 5, 12);
        let doc = e.document();
        let back = Expr::parse(&doc).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.document(), doc);
    }

    /// used_width never exceeds the declared budget.
    #[test]
    fn used_width_within_budget(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 6, 10);
        prop_assert!(e.used_width() <= e.width());
    }

    /// The root signature equals the distinct masks of the evaluated graph.
    #[test]
    fn signature_matches_evaluation(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 5, 12);
        let sigs = geval::signature_trace(&e).unwrap();
        let g = geval::evaluate(&e).unwrap();
        prop_assert_eq!(&sigs[e.root().index()], &g.distinct_masks());
    }

    /// eps i behaves exactly like rho i -> {} on the polynomial side, and
    /// eta is idempotent on the graph side.
    #[test]
    fn eps_rho_and_eta_idempotence(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 4, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let i = Label::new(rng.gen_range(1..=e.width()));
        let p = indpoly::run(&e, JoinMethod::School).unwrap();
        let mut via_eps = p.clone();
        via_eps.apply_eps(i);
        let mut via_rho = p.clone();
        via_rho.apply_rho(i, &LabelSet::empty());
        prop_assert_eq!(via_eps, via_rho);
    }

    /// School and transform joins agree exactly on random tables.
    #[test]
    fn join_methods_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..=6);
        let a = oracle::random_poly(&mut rng, k, 20);
        let b = oracle::random_poly(&mut rng, k, 20);
        let school = LabeledIsPoly::join(&a, &b, JoinMethod::School).unwrap();
        let transform = LabeledIsPoly::join(&a, &b, JoinMethod::Transform).unwrap();
        prop_assert_eq!(school, transform);
    }

    /// The DP table matches exhaustive enumeration entry-for-entry, its
    /// projection matches the mask-summed table, a_1 = n, and the stored
    /// size respects the 2^k (n+1) bound.
    #[test]
    fn indpoly_against_oracle(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 4, 10);
        let p = indpoly::run(&e, JoinMethod::School).unwrap();
        let g = geval::evaluate(&e).unwrap();
        let want = oracle::enumerate_is(&g, e.width()).unwrap();
        prop_assert_eq!(&p, &want);
        let n = g.n() as usize;
        let projected = p.project();
        prop_assert_eq!(&projected[1], &num_bigint::BigUint::from(n));
        prop_assert!(p.stored_coefficients() <= (1usize << e.width().min(20)).saturating_mul(n + 1));
    }

    /// colorable is monotone in the number of colors.
    #[test]
    fn colorable_monotone(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 3, 8);
        let opts = coloring::ColoringOptions::default();
        let mut prev = false;
        for c in 1..=4 {
            let now = coloring::colorable(&e, c, opts).unwrap();
            prop_assert!(!prev || now, "colorable must be monotone in c");
            prev = now;
        }
    }

    /// The iff-semantics of the coloring tables: for every subexpression,
    /// the root incidences equal the exhaustively enumerated ones.
    #[test]
    fn coloring_tables_are_exact(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 3, 7);
        let opts = coloring::ColoringOptions::default();
        for c in [2u32, 3] {
            for id in e.post_order() {
                let sub = e.subexpression(id);
                let got = coloring::root_incidences(&sub, c, opts).unwrap();
                let g = geval::evaluate(&sub).unwrap();
                let want = oracle::enumerate_colorings(&g, c).unwrap();
                prop_assert_eq!(&got, &want, "node {:?} with c={}", id, c);
            }
        }
    }

    /// Expansion to a classical expression preserves the generated graph.
    #[test]
    fn classical_expansion_same_graph(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 5, 10);
        let c = expr::expand_to_classical(&e, expr::DEFAULT_LABEL_CAP).unwrap();
        prop_assert!(c.is_classical());
        // classical vertices carry exactly one label at every step
        let sigs = geval::signature_trace(&c).unwrap();
        prop_assert!(sigs.iter().flatten().all(|m| m.len() == 1));
        let g1 = geval::evaluate(&e).unwrap();
        let g2 = geval::evaluate(&c).unwrap();
        prop_assert_eq!(g1.n(), g2.n());
        let e1: Vec<_> = g1.edges().collect();
        let e2: Vec<_> = g2.edges().collect();
        prop_assert_eq!(e1, e2);
    }

    /// max_is returns an independent set whose size is the degree of I(x).
    #[test]
    fn max_is_is_maximum(seed in any::<u64>()) {
        let e = rand_expr_from_seed(seed, 4, 12);
        let ids = indpoly::max_is(&e).unwrap();
        let g = geval::evaluate(&e).unwrap();
        for (a, &u) in ids.iter().enumerate() {
            for &v in &ids[a + 1..] {
                prop_assert!(!g.has_edge(u, v));
            }
        }
        let counts = indpoly::run(&e, JoinMethod::School).unwrap().project();
        prop_assert_eq!(ids.len(), counts.len() - 1);
    }
}

/// Random tree decompositions: a random bag tree, one random connected
/// occurrence subtree per vertex, and the co-occurrence graph. Valid by
/// construction.
fn random_decomposition(rng: &mut impl Rng, n: u32, nodes: usize) -> (LabeledGraph, TreeDecomposition) {
    let mut tree_parent = vec![0usize; nodes];
    for i in 1..nodes {
        tree_parent[i] = rng.gen_range(0..i);
    }
    let mut bags: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); nodes];
    for v in 0..n {
        // grow a connected node set from a random start
        let mut occ = BTreeSet::new();
        let start = rng.gen_range(0..nodes);
        occ.insert(start);
        let mut frontier = vec![start];
        while rng.gen_bool(0.55) && !frontier.is_empty() {
            let at = frontier[rng.gen_range(0..frontier.len())];
            let mut adjacent: Vec<usize> = (0..nodes)
                .filter(|&o| !occ.contains(&o) && (tree_parent[o] == at || tree_parent[at] == o))
                .collect();
            if adjacent.is_empty() {
                break;
            }
            let next = adjacent.swap_remove(rng.gen_range(0..adjacent.len()));
            occ.insert(next);
            frontier.push(next);
        }
        for &o in &occ {
            bags[o].insert(v);
        }
    }
    let mut g = LabeledGraph::new(n);
    for bag in &bags {
        let members: Vec<u32> = bag.iter().copied().collect();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                if rng.gen_bool(0.7) {
                    g.add_edge(u, v);
                }
            }
        }
    }
    // drop graph edges not covered by any bag (random subsets above only
    // add covered ones, so nothing to do), then validate
    let edges: Vec<(usize, usize)> = (1..nodes).map(|i| (tree_parent[i], i)).collect();
    let td = TreeDecomposition::new(bags, &edges, 0, &g).expect("construction is valid");
    (g, td)
}

#[test]
fn semi_smooth_preserves_width_on_random_decompositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdecaf);
    for round in 0..100 {
        let n = rng.gen_range(1..=10);
        let nodes = rng.gen_range(1..=8);
        let (g, td) = random_decomposition(&mut rng, n, nodes);
        let ss = treedec::semi_smooth(&td, &g).unwrap();
        ss.validate().unwrap();
        assert_eq!(ss.width(), td.width(), "round {round}");
        assert_eq!(ss.td().node_count(), g.n() as usize, "round {round}");
        // and the compiled expression reproduces the graph exactly
        let e = treedec::compile(&ss);
        assert!(e.is_strict());
        assert!(e.used_width() <= ss.width() + 2);
        let out = geval::evaluate(&e).unwrap();
        geval::compare_by_names(&out, &g).unwrap();
    }
}

/// The compiler's inductive claim: the subexpression of every decomposition
/// node generates the subgraph induced by the vertices homed in its subtree,
/// each carrying the identifiers of its neighbors outside the subtree.
#[test]
fn compile_satisfies_subtree_claim() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1a1);
    for _ in 0..25 {
        let n = rng.gen_range(2..=10);
        let g = oracle::random_connected_graph(&mut rng, n, 0.3);
        let (_, td) = oracle::brute_treewidth(&g).unwrap();
        let ss = treedec::semi_smooth(&td, &g).unwrap();
        let compiled = treedec::compile(&ss);

        // Subtree vertex sets of the decomposition, by homed vertex.
        let parents = ss.td().parents();
        let mut subtree: Vec<BTreeSet<u32>> = (0..ss.td().node_count())
            .map(|node| [ss.homed_vertex(node)].into_iter().collect())
            .collect();
        // accumulate bottom-up: process nodes in reverse BFS order
        let mut order = vec![ss.td().root()];
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            i += 1;
            for &w in ss.td().neighbors(u) {
                if w != parents[u] {
                    order.push(w);
                }
            }
        }
        for &u in order.iter().rev() {
            if u != ss.td().root() {
                let members: Vec<u32> = subtree[u].iter().copied().collect();
                subtree[parents[u]].extend(members);
            }
        }

        // The compiled expression visits decomposition nodes in the same
        // recursive shape; walk both trees together.
        let mut stack = vec![(ss.td().root(), compiled.root())];
        while let Some((dnode, enode)) = stack.pop() {
            let sub = compiled.subexpression(enode);
            let sg = geval::evaluate(&sub).unwrap();
            let inside = &subtree[dnode];
            assert_eq!(sg.n() as usize, inside.len());
            let adjacency = g.adjacency();
            for v in 0..sg.n() {
                let orig: u32 = sg.display_name(v).parse().unwrap();
                assert!(inside.contains(&orig));
                let want = LabelSet::from_indices(
                    adjacency[orig as usize]
                        .iter()
                        .filter(|u| !inside.contains(u))
                        .map(|&u| ss.iota(u)),
                );
                assert_eq!(
                    sg.label(v),
                    &want,
                    "labels of vertex {orig} below decomposition node {dnode}"
                );
            }
            // descend: the expression below this node is
            // eps(eps(eta(join [aux, children...]))) for internal nodes
            let children: Vec<usize> = ss
                .td()
                .neighbors(dnode)
                .iter()
                .copied()
                .filter(|&w| w != dnode && parents[w] == dnode)
                .collect();
            if children.is_empty() {
                continue;
            }
            let mcw::expr::Node::Eps { child, .. } = compiled.node(enode) else {
                panic!("internal nodes compile to eps-wrapped forms")
            };
            let mcw::expr::Node::Eps { child, .. } = compiled.node(*child) else { panic!() };
            let mcw::expr::Node::Eta { child, .. } = compiled.node(*child) else { panic!() };
            let mcw::expr::Node::Join { children: parts } = compiled.node(*child) else {
                panic!()
            };
            assert_eq!(parts.len(), children.len() + 1);
            for (dchild, echild) in children.iter().zip(parts[1..].iter()) {
                stack.push((*dchild, *echild));
            }
        }
    }
}
