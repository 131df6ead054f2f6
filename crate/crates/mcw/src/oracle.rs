//! Brute-force reference implementations, a small named corpus, and seeded
//! random generators. Everything here is desk-scale by design: the guards
//! are hard errors, never silent truncation.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use rand::Rng;

use crate::expr::{Expr, ExprBuilder, Label, LabelSet};
use crate::gen;
use crate::geval::{LabeledGraph, MaskSignature};
use crate::indpoly::LabeledIsPoly;
use crate::treedec::TreeDecomposition;

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum OracleError {
    #[error("{what} supports {limit}, got {got}")]
    SizeGuard { what: &'static str, limit: &'static str, got: u64 },
}

fn guard(what: &'static str, limit: &'static str, ok: bool, got: u64) -> Result<(), OracleError> {
    if ok {
        Ok(())
    } else {
        Err(OracleError::SizeGuard { what, limit, got })
    }
}

/// Exact labeled independent-set table by exhausting all vertex subsets.
pub fn enumerate_is(g: &LabeledGraph, k: u32) -> Result<LabeledIsPoly, OracleError> {
    let n = g.n();
    guard("enumerate_is", "n <= 24", n <= 24, n as u64)?;
    let adj: Vec<u32> = {
        let mut adj = vec![0u32; n as usize];
        for (u, v) in g.edges() {
            adj[u as usize] |= 1 << v;
            adj[v as usize] |= 1 << u;
        }
        adj
    };
    let masks: Vec<u64> = (0..n)
        .map(|v| g.label(v).bits().expect("oracle graphs use labels within u64"))
        .collect();
    let mut counts: HashMap<(usize, u64), u64> = HashMap::new();
    for subset in 0u32..1 << n {
        let mut independent = true;
        let mut union = 0u64;
        let mut rest = subset;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            if adj[v as usize] & subset != 0 {
                independent = false;
                break;
            }
            union |= masks[v as usize];
        }
        if independent {
            *counts.entry((subset.count_ones() as usize, union)).or_default() += 1;
        }
    }
    LabeledIsPoly::from_entries(k, counts.into_iter().map(|((s, m), c)| (s, m, BigUint::from(c))))
        .map_err(|_| OracleError::SizeGuard { what: "enumerate_is", limit: "k <= 64", got: k as u64 })
}

/// All color/label incidence patterns realized by proper c-colorings, each
/// as a sorted list of `(color, label)` pairs. Empty iff no proper coloring
/// exists.
pub fn enumerate_colorings(
    g: &LabeledGraph,
    c: u32,
) -> Result<BTreeSet<Vec<(u32, u32)>>, OracleError> {
    let n = g.n();
    let mut work = 1u64;
    for _ in 0..n {
        work = work.saturating_mul(c as u64);
    }
    guard("enumerate_colorings", "c^n <= 10^7", c >= 1 && work <= 10_000_000, work)?;
    let adj = g.adjacency();
    let mut colors = vec![0u32; n as usize];
    let mut out = BTreeSet::new();
    // backtracking over vertices in id order
    let mut v: i64 = 0;
    if n == 0 {
        out.insert(Vec::new());
        return Ok(out);
    }
    colors[0] = 0; // will be incremented to 1 first
    while v >= 0 {
        let vu = v as usize;
        colors[vu] += 1;
        if colors[vu] > c {
            colors[vu] = 0;
            v -= 1;
            continue;
        }
        let conflict =
            adj[vu].iter().any(|&u| (u as usize) < vu && colors[u as usize] == colors[vu]);
        if conflict {
            continue;
        }
        if vu + 1 == n as usize {
            let mut pairs = BTreeSet::new();
            for w in 0..n {
                for l in g.label(w).iter() {
                    pairs.insert((colors[w as usize], l.index()));
                }
            }
            out.insert(pairs.into_iter().collect());
        } else {
            v += 1;
            colors[v as usize] = 0;
        }
    }
    Ok(out)
}

/// Optimal tree-width by the subset DP over elimination prefixes, with a
/// witness decomposition built from the optimal elimination order.
pub fn brute_treewidth(g: &LabeledGraph) -> Result<(u32, TreeDecomposition), OracleError> {
    let n = g.n() as usize;
    guard("brute_treewidth", "1 <= n <= 12", (1..=12).contains(&n), n as u64)?;
    let mut adj = vec![0u16; n];
    for (u, v) in g.edges() {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    let full: u16 = if n == 16 { u16::MAX } else { (1 << n) - 1 };

    // Vertices adjacent to v or reachable from it through eliminated set x.
    let reach = |x: u16, v: usize| -> u16 {
        let mut comp = 1u16 << v;
        let mut frontier = 1u16 << v;
        let mut seen_out = 0u16;
        while frontier != 0 {
            let mut next = 0u16;
            let mut f = frontier;
            while f != 0 {
                let u = f.trailing_zeros() as usize;
                f &= f - 1;
                let nb = adj[u];
                seen_out |= nb & !x;
                next |= nb & x & !comp;
            }
            comp |= next;
            frontier = next;
        }
        seen_out & !(1 << v)
    };

    let size = 1usize << n;
    let mut best = vec![u8::MAX; size];
    let mut choice = vec![0u8; size];
    best[0] = 0;
    for s in 1..size {
        let mut rest = s as u16;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let without = s & !(1 << v);
            let q = reach(without as u16, v).count_ones() as u8;
            let cand = best[without].max(q);
            if cand < best[s] {
                best[s] = cand;
                choice[s] = v as u8;
            }
        }
    }
    let width = best[size - 1] as u32;

    // Optimal elimination order, first-eliminated first.
    let mut order = Vec::with_capacity(n);
    let mut s = full as usize;
    while s != 0 {
        let v = choice[s] as usize;
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();

    // Bags from simulated elimination on the fill-in graph; bag i attaches
    // to the bag of the first-eliminated remaining neighbor.
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut fill = adj.clone();
    let mut alive = full;
    let mut bags: Vec<BTreeSet<u32>> = Vec::with_capacity(n);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        alive &= !(1 << v);
        let nb = fill[v] & alive;
        let mut bag: BTreeSet<u32> = BTreeSet::new();
        bag.insert(v as u32);
        let mut rest = nb;
        let mut first_next: Option<usize> = None;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            bag.insert(u as u32);
            if first_next.is_none_or(|f| pos[u] < pos[f]) {
                first_next = Some(u);
            }
        }
        // make the neighborhood a clique
        let mut r1 = nb;
        while r1 != 0 {
            let u = r1.trailing_zeros() as usize;
            r1 &= r1 - 1;
            fill[u] |= nb & !(1 << u);
        }
        bags.push(bag);
        match first_next {
            Some(u) => edges.push((i, pos[u])),
            None if i + 1 < n => edges.push((i, i + 1)),
            None => {}
        }
    }
    let td = TreeDecomposition::new(bags, &edges, n - 1, g)
        .expect("elimination-order bags form a valid decomposition");
    debug_assert_eq!(td.width(), width, "witness must achieve the DP optimum");
    Ok((width, td))
}

/// An expression for an arbitrary graph over n labels, built independently
/// of the decomposition compiler: one singleton-labeled atom per vertex, one
/// multi-way join, one `eta` per edge, then an `eps` per used label. Names
/// are carried over.
pub fn naive_expr(g: &LabeledGraph) -> Expr {
    let n = g.n();
    assert!(n >= 1, "expressions create at least one vertex");
    let mut b = ExprBuilder::new(n);
    let atoms: Vec<_> = (0..n)
        .map(|v| {
            b.create_named(
                1,
                LabelSet::singleton(Label::new(v + 1)),
                vec![Some(g.display_name(v))],
            )
            .unwrap()
        })
        .collect();
    let mut acc = if n == 1 { atoms[0] } else { b.join(atoms).unwrap() };
    for (u, v) in g.edges() {
        acc = b.eta(Label::new(u + 1), Label::new(v + 1), acc).unwrap();
    }
    for v in 0..n {
        acc = b.eps(Label::new(v + 1), acc).unwrap();
    }
    b.finish(acc).unwrap()
}

/// Uniform spanning-tree skeleton plus independent extra edges: connected,
/// seeded, deterministic.
pub fn random_connected_graph(rng: &mut impl Rng, n: u32, extra_edge_prob: f64) -> LabeledGraph {
    let mut g = LabeledGraph::new(n);
    for v in 1..n {
        g.add_edge(rng.gen_range(0..v), v);
    }
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) && rng.gen_bool(extra_edge_prob) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// A random valid expression of width `k` creating roughly `target`
/// vertices. Operations are sampled with the `eta` precondition maintained
/// via running mask signatures, so the result always evaluates.
pub fn random_expr(rng: &mut impl Rng, k: u32, target: u64) -> Expr {
    assert!(k >= 1 && target >= 1);
    let mut b = ExprBuilder::new(k);
    // pool of (node, signature, vertex count)
    let mut pool: Vec<(crate::expr::NodeId, MaskSignature, u64)> = Vec::new();
    let mut created = 0u64;

    let random_set = |rng: &mut dyn rand::RngCore, k: u32| -> LabelSet {
        LabelSet::from_indices((1..=k).filter(|_| rng.gen_bool(0.45)))
    };

    loop {
        let need_atoms = created < target;
        if pool.len() == 1 && !need_atoms && rng.gen_bool(0.6) {
            break;
        }
        let action = rng.gen_range(0..10);
        if need_atoms && (pool.is_empty() || action < 4) {
            let m = rng.gen_range(1..=3.min(target - created).max(1));
            let labels = random_set(rng, k);
            let id = b.create(m, labels.clone()).unwrap();
            pool.push((id, [labels].into_iter().collect(), m));
            created += m;
        } else if pool.len() >= 2 && action < 7 {
            let take = rng.gen_range(2..=pool.len().min(3));
            let mut parts = Vec::new();
            for _ in 0..take {
                let at = rng.gen_range(0..pool.len());
                parts.push(pool.swap_remove(at));
            }
            let ids: Vec<_> = parts.iter().map(|(id, _, _)| *id).collect();
            let mut sig = MaskSignature::new();
            let mut count = 0;
            for (_, s, m) in parts {
                sig.extend(s);
                count += m;
            }
            let id = b.join(ids).unwrap();
            pool.push((id, sig, count));
        } else if !pool.is_empty() {
            let at = rng.gen_range(0..pool.len());
            let (id, sig, m) = pool.swap_remove(at);
            let choice = rng.gen_range(0..3);
            if choice == 0 && k >= 2 {
                // a legal eta pair, if any
                let mut pairs = Vec::new();
                for i in 1..=k {
                    for j in 1..=k {
                        if i != j
                            && !sig
                                .iter()
                                .any(|s| s.contains(Label::new(i)) && s.contains(Label::new(j)))
                        {
                            pairs.push((i, j));
                        }
                    }
                }
                if pairs.is_empty() {
                    pool.push((id, sig, m));
                } else {
                    let (i, j) = pairs[rng.gen_range(0..pairs.len())];
                    let id = b.eta(Label::new(i), Label::new(j), id).unwrap();
                    pool.push((id, sig, m));
                }
            } else if choice == 1 {
                let i = Label::new(rng.gen_range(1..=k));
                let to = random_set(rng, k);
                let id2 = b.rho(i, to.clone(), id).unwrap();
                let sig2: MaskSignature = sig.iter().map(|s| s.relabel(i, &to)).collect();
                pool.push((id2, sig2, m));
            } else {
                let i = Label::new(rng.gen_range(1..=k));
                let id2 = b.eps(i, id).unwrap();
                let empty = LabelSet::empty();
                let sig2: MaskSignature = sig.iter().map(|s| s.relabel(i, &empty)).collect();
                pool.push((id2, sig2, m));
            }
        }
    }
    let (root, _, _) = pool.pop().unwrap();
    b.finish(root).unwrap()
}

/// A random labeled polynomial table: masks over `k` labels, degrees up to
/// `max_degree`, coefficient sizes up to a few machine words.
pub fn random_poly(rng: &mut impl Rng, k: u32, max_degree: usize) -> LabeledIsPoly {
    let mut entries: Vec<(usize, u64, BigUint)> = vec![(0, 0, BigUint::from(1u32))];
    let masks = 1u64 << k;
    for _ in 0..rng.gen_range(1..=16) {
        let mask = rng.gen_range(0..masks);
        let min_size = usize::from(mask != 0);
        let size = rng.gen_range(min_size..=max_degree.max(min_size));
        let coeff = BigUint::from(rng.gen_range(1u64..1 << 40)) * BigUint::from(rng.gen_range(1u64..1 << 30));
        entries.push((size, mask, coeff));
    }
    LabeledIsPoly::from_entries(k, entries).expect("k is small")
}

/// A named expression with oracle-checkable scale.
pub struct CorpusEntry {
    pub name: String,
    pub expr: Expr,
}

fn entry(name: &str, expr: Expr) -> CorpusEntry {
    CorpusEntry { name: name.to_string(), expr }
}

fn literal(name: &str, text: &str) -> CorpusEntry {
    entry(name, Expr::parse(text).expect("corpus literals parse"))
}

/// The bundled corpus: generator families at several sizes, hand-written
/// expressions exercising multi-label atoms, set-target `rho`, `eps`, and
/// multi-way joins, plus seeded random expressions.
pub fn corpus() -> Vec<CorpusEntry> {
    use rand::SeedableRng;
    let mut entries = Vec::new();
    for n in [1u64, 2, 3, 4, 5, 6, 10] {
        entries.push(entry(&format!("path-{n}"), gen::path(n).unwrap()));
    }
    for n in [3u64, 4, 5, 6, 7, 8] {
        entries.push(entry(&format!("cycle-{n}"), gen::cycle(n).unwrap()));
    }
    for n in [1u64, 2, 3, 4, 5, 6] {
        entries.push(entry(&format!("clique-{n}"), gen::clique(n).unwrap()));
    }
    for (a, b) in [(1u64, 1u64), (2, 3), (3, 3), (1, 4)] {
        entries.push(entry(&format!("bipartite-{a}-{b}"), gen::complete_bipartite(a, b).unwrap()));
    }
    for (w, h) in [(2u32, 2u32), (2, 3), (3, 3), (2, 5)] {
        entries.push(entry(&format!("grid-{w}x{h}"), gen::grid(w, h).unwrap()));
    }

    entries.push(literal("edge", "#mcw k=2\n(eta 1 2 (join (v 1 1) (v 1 2)))"));
    entries.push(literal("isolated-5", "#mcw k=2\n(v 5)"));
    entries.push(literal(
        "p4-three-labels",
        "#mcw k=3\n(eps 3 (eta 2 3 (join (eta 1 2 (join (eps 2 (eta 1 2 (join (v 1 2) (v 1 1)))) (v 1 2))) (v 1 3))))",
    ));
    entries.push(literal(
        "star-1-4",
        "#mcw k=2\n(eps 1 (eps 2 (eta 1 2 (join (v 1 1) (v 4 2)))))",
    ));
    entries.push(literal(
        "diamond",
        // K_4 minus an edge: the tips share a label, hubs get one each
        "#mcw k=3\n(eta 2 3 (eta 1 3 (eta 1 2 (join (v 2 1) (v 1 2) (v 1 3)))))",
    ));
    entries.push(literal(
        "paw",
        // triangle on labels 1,2,3, then a pendant on the label-1 corner
        "#mcw k=3\n(eta 1 2 (join (eps 3 (eps 2 (eta 2 3 (eta 1 3 (eta 1 2 (join (v 1 1) (v 1 2) (v 1 3))))))) (v 1 2)))",
    ));
    entries.push(literal(
        "two-triangles",
        "#mcw k=2\n(join (rho 2 (1) (eta 1 2 (join (rho 2 (1) (eta 1 2 (join (v 1 1) (v 1 2)))) (v 1 2)))) \
         (rho 2 (1) (eta 1 2 (join (rho 2 (1) (eta 1 2 (join (v 1 1) (v 1 2)))) (v 1 2)))))",
    ));
    entries.push(literal(
        "group-atoms",
        "#mcw k=4\n(eta 1 4 (eps 2 (eta 2 3 (join (v 3 1 2) (v 2 3 4)))))",
    ));
    entries.push(literal(
        "rho-set-target",
        "#mcw k=4\n(eta 3 4 (rho 1 (2 3) (eta 1 4 (join (v 2 1) (join (v 1 4) (v 2 2 4))))))",
    ));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    for i in 0..6 {
        entries.push(entry(&format!("random-k3-{i}"), random_expr(&mut rng, 3, 8 + i)));
    }
    for i in 0..4 {
        entries.push(entry(&format!("random-k5-{i}"), random_expr(&mut rng, 5, 12 + 2 * i)));
    }
    entries
}
