//! Tree decompositions: parsing, validation, semi-smooth normalization, and
//! compilation into strict multi-(k+2)-expressions.
//!
//! A semi-smooth decomposition is rooted, every bag holds exactly one vertex
//! absent from its parent's bag (that node is the vertex's *home*), and the
//! root bag is a singleton. Each vertex therefore has exactly one home and
//! the tree has exactly one node per graph vertex.
//!
//! Compilation creates each vertex at its home carrying the identifiers of
//! its not-yet-created bag neighbors plus a reserved label `k+2`; one
//! `eta iota(v) k+2` per internal node wires the vertex to the descendants
//! that were waiting for it, and two `eps` operations retire both labels.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{Expr, ExprBuilder, Label, LabelSet, NodeId};
use crate::geval::LabeledGraph;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum TdError {
    #[error("line {0}: {1}")]
    Syntax(u32, String),
    #[error("missing `s td <bags> <max-bag-size> <vertices>` header")]
    MissingHeader,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("line {line}: vertex {v} out of range (graph has {n})")]
    VertexRange { line: u32, v: u64, n: u32 },
    #[error("bag id {0} out of range or repeated")]
    BadBagId(u64),
    #[error("bag nodes do not form a tree")]
    NotATree,
    #[error("vertex {0} is in no bag")]
    UncoveredVertex(u32),
    #[error("edge {{{0}, {1}}} is inside no bag")]
    UncoveredEdge(u32, u32),
    #[error("bags containing vertex {0} do not induce a connected subtree")]
    DisconnectedOccurrence(u32),
    #[error("the graph has no vertices; nothing to decompose")]
    EmptyGraph,
    #[error("not semi-smooth: {0}")]
    NotSemiSmooth(String),
}

/// A rooted tree decomposition of a specific graph.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TreeDecomposition {
    bags: Vec<BTreeSet<u32>>,
    adj: Vec<Vec<usize>>,
    root: usize,
    n_vertices: u32,
}

impl TreeDecomposition {
    /// Builds and validates a decomposition. `edges` are index pairs into
    /// `bags`; validation checks the tree shape and all three decomposition
    /// properties against `graph`.
    pub fn new(
        bags: Vec<BTreeSet<u32>>,
        edges: &[(usize, usize)],
        root: usize,
        graph: &LabeledGraph,
    ) -> Result<TreeDecomposition, TdError> {
        let mut adj = vec![Vec::new(); bags.len()];
        for &(a, b) in edges {
            if a >= bags.len() || b >= bags.len() {
                return Err(TdError::NotATree);
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let td = TreeDecomposition { bags, adj, root, n_vertices: graph.n() };
        td.validate(graph)?;
        Ok(td)
    }

    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, node: usize) -> &BTreeSet<u32> {
        &self.bags[node]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Largest bag size minus one.
    pub fn width(&self) -> u32 {
        self.bags.iter().map(|b| b.len() as u32).max().unwrap_or(0).saturating_sub(1)
    }

    /// Parent array oriented away from the root (root maps to itself).
    pub fn parents(&self) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.bags.len()];
        let mut stack = vec![self.root];
        parent[self.root] = self.root;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
        parent
    }

    pub fn validate(&self, graph: &LabeledGraph) -> Result<(), TdError> {
        if self.bags.is_empty() || self.root >= self.bags.len() {
            return Err(TdError::NotATree);
        }
        // tree shape: connected with |edges| = |nodes| - 1
        let edge_count: usize = self.adj.iter().map(Vec::len).sum::<usize>() / 2;
        let parents = self.parents();
        if edge_count != self.bags.len() - 1 || parents.iter().any(|&p| p == usize::MAX) {
            return Err(TdError::NotATree);
        }
        // property 1: every vertex in some bag
        let mut covered = vec![false; graph.n() as usize];
        for bag in &self.bags {
            for &v in bag {
                covered[v as usize] = true;
            }
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return Err(TdError::UncoveredVertex(v as u32));
        }
        // property 2: every edge inside some bag
        'edges: for (u, v) in graph.edges() {
            for bag in &self.bags {
                if bag.contains(&u) && bag.contains(&v) {
                    continue 'edges;
                }
            }
            return Err(TdError::UncoveredEdge(u, v));
        }
        // property 3: occurrences induce subtrees
        for v in 0..graph.n() {
            let holders: Vec<usize> =
                (0..self.bags.len()).filter(|&i| self.bags[i].contains(&v)).collect();
            let mut seen = vec![false; self.bags.len()];
            let mut stack = vec![holders[0]];
            seen[holders[0]] = true;
            let mut reached = 0;
            while let Some(u) = stack.pop() {
                reached += 1;
                for &w in &self.adj[u] {
                    if !seen[w] && self.bags[w].contains(&v) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            if reached != holders.len() {
                return Err(TdError::DisconnectedOccurrence(v));
            }
        }
        Ok(())
    }

    /// PACE-style input: `c` comment lines, an `s td <bags> <max-bag-size>
    /// <vertices>` header, `b <bag-id> <v...>` lines with 1-based bag ids
    /// and 0-based vertex ids (matching the graph file), then one
    /// `<id1> <id2>` line per tree edge. Rooted at bag 1.
    pub fn parse(text: &str, graph: &LabeledGraph) -> Result<TreeDecomposition, TdError> {
        let mut header: Option<(u64, u64, u64)> = None;
        let mut bags: Vec<Option<BTreeSet<u32>>> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx as u32 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut it = line.split_whitespace();
            let first = it.next().unwrap();
            let mut uint = |what: &str| -> Result<u64, TdError> {
                it.next()
                    .and_then(|w| w.parse::<u64>().ok())
                    .ok_or_else(|| TdError::Syntax(lineno, format!("expected {what}")))
            };
            match first {
                "s" => {
                    if header.is_some() {
                        return Err(TdError::Syntax(lineno, "duplicate header".into()));
                    }
                    let tag = it.next();
                    if tag != Some("td") {
                        return Err(TdError::Syntax(lineno, "expected `s td ...`".into()));
                    }
                    let mut uint = |what: &str| -> Result<u64, TdError> {
                        it.next()
                            .and_then(|w| w.parse::<u64>().ok())
                            .ok_or_else(|| TdError::Syntax(lineno, format!("expected {what}")))
                    };
                    let nb = uint("bag count")?;
                    let mb = uint("max bag size")?;
                    let nv = uint("vertex count")?;
                    bags = (0..nb).map(|_| None).collect();
                    header = Some((nb, mb, nv));
                }
                "b" => {
                    if header.is_none() {
                        return Err(TdError::MissingHeader);
                    }
                    let id = uint("bag id")?;
                    if id == 0 || id > bags.len() as u64 || bags[id as usize - 1].is_some() {
                        return Err(TdError::BadBagId(id));
                    }
                    let mut bag = BTreeSet::new();
                    for w in it.by_ref() {
                        let v: u64 = w
                            .parse()
                            .map_err(|_| TdError::Syntax(lineno, "bad vertex id".into()))?;
                        if v >= graph.n() as u64 {
                            return Err(TdError::VertexRange { line: lineno, v, n: graph.n() });
                        }
                        bag.insert(v as u32);
                    }
                    bags[id as usize - 1] = Some(bag);
                }
                _ => {
                    if header.is_none() {
                        return Err(TdError::MissingHeader);
                    }
                    let a: u64 = first
                        .parse()
                        .map_err(|_| TdError::Syntax(lineno, "expected tree edge".into()))?;
                    let b = uint("tree edge endpoint")?;
                    for &x in &[a, b] {
                        if x == 0 || x > bags.len() as u64 {
                            return Err(TdError::BadBagId(x));
                        }
                    }
                    edges.push((a as usize - 1, b as usize - 1));
                }
            }
        }
        let (nb, mb, nv) = header.ok_or(TdError::MissingHeader)?;
        if nv != graph.n() as u64 {
            return Err(TdError::HeaderMismatch(format!(
                "header declares {nv} vertices, graph has {}",
                graph.n()
            )));
        }
        let bags: Vec<BTreeSet<u32>> = bags
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or(TdError::HeaderMismatch(format!("bag {} missing", i + 1))))
            .collect::<Result<_, _>>()?;
        let actual_max = bags.iter().map(BTreeSet::len).max().unwrap_or(0) as u64;
        if actual_max != mb {
            return Err(TdError::HeaderMismatch(format!(
                "header declares max bag size {mb}, actual {actual_max}"
            )));
        }
        let _ = nb;
        TreeDecomposition::new(bags, &edges, 0, graph)
    }
}

/// A semi-smooth decomposition plus the top-down identifier assignment used
/// by the compiler. Nodes and graph vertices are in bijection via homes.
#[derive(Clone, Debug)]
pub struct SemiSmooth {
    td: TreeDecomposition,
    graph: LabeledGraph,
    /// vertex -> its home node
    home: Vec<usize>,
    /// node -> the vertex homed there
    homed: Vec<u32>,
    /// vertex -> identifier in 1..=width+1; distinct within every bag
    iota: Vec<u32>,
    width: u32,
}

impl SemiSmooth {
    pub fn td(&self) -> &TreeDecomposition {
        &self.td
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn home(&self, v: u32) -> usize {
        self.home[v as usize]
    }

    pub fn homed_vertex(&self, node: usize) -> u32 {
        self.homed[node]
    }

    pub fn iota(&self, v: u32) -> u32 {
        self.iota[v as usize]
    }

    /// Checks the semi-smooth shape on top of the base validation: the root
    /// bag is a singleton, every other bag has exactly one vertex absent
    /// from its parent, homes and identifiers are consistent, and there is
    /// exactly one node per graph vertex.
    pub fn validate(&self) -> Result<(), TdError> {
        self.td.validate(&self.graph)?;
        let parents = self.td.parents();
        let shape_err = TdError::NotSemiSmooth;
        if self.td.node_count() != self.graph.n() as usize {
            return Err(shape_err(format!(
                "semi-smooth node count {} != vertex count {}",
                self.td.node_count(),
                self.graph.n()
            )));
        }
        for node in 0..self.td.node_count() {
            let bag = self.td.bag(node);
            let fresh: Vec<u32> = if node == self.td.root() {
                bag.iter().copied().collect()
            } else {
                bag.difference(self.td.bag(parents[node])).copied().collect()
            };
            if fresh.len() != 1 || fresh[0] != self.homed[node] {
                return Err(shape_err(format!("node {node} does not home exactly one vertex")));
            }
            let mut seen = BTreeSet::new();
            for &v in bag {
                if self.iota[v as usize] == 0 || self.iota[v as usize] > self.width + 1 {
                    return Err(shape_err(format!("iota({v}) out of range")));
                }
                if !seen.insert(self.iota[v as usize]) {
                    return Err(shape_err(format!("duplicate identifier in bag of node {node}")));
                }
            }
        }
        for v in 0..self.graph.n() {
            if self.homed[self.home[v as usize]] != v {
                return Err(shape_err(format!("home of vertex {v} is inconsistent")));
            }
        }
        Ok(())
    }
}

/// Normalizes a valid decomposition to semi-smooth form of the same graph
/// and equal width: contained bags are contracted into their parents, then
/// nodes homing several vertices are split into chains introducing one
/// vertex each, and identifiers are assigned top-down.
pub fn semi_smooth(td: &TreeDecomposition, graph: &LabeledGraph) -> Result<SemiSmooth, TdError> {
    if graph.n() == 0 {
        return Err(TdError::EmptyGraph);
    }
    // Re-root if the root bag is empty; some bag is nonempty since n > 0.
    let root = if td.bag(td.root()).is_empty() {
        (0..td.node_count()).find(|&i| !td.bag(i).is_empty()).expect("nonempty bag exists")
    } else {
        td.root()
    };

    // Orient, then contract bags contained in their surviving parent.
    let mut order = vec![root];
    let mut parent = vec![usize::MAX; td.node_count()];
    parent[root] = root;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for &v in td.neighbors(u) {
            if parent[v] == usize::MAX {
                parent[v] = u;
                order.push(v);
            }
        }
    }
    // Top-down: surviving[u] is the closest kept ancestor-or-self.
    let mut surviving = vec![usize::MAX; td.node_count()];
    let mut kept: Vec<usize> = Vec::new();
    for &u in &order {
        if u == root {
            surviving[u] = u;
            kept.push(u);
            continue;
        }
        let sp = surviving[parent[u]];
        if td.bag(u).is_subset(td.bag(sp)) {
            surviving[u] = sp;
        } else {
            surviving[u] = u;
            kept.push(u);
        }
    }

    // Split each kept node into a chain, one new vertex per node.
    let mut bags: Vec<BTreeSet<u32>> = Vec::new();
    let mut new_parent: Vec<usize> = Vec::new();
    let mut homed: Vec<u32> = Vec::new();
    // kept node -> id of the bottom (full-bag) chain node
    let mut bottom = vec![usize::MAX; td.node_count()];
    for &u in &kept {
        let parent_bag: BTreeSet<u32> = if u == root {
            BTreeSet::new()
        } else {
            td.bag(surviving[parent[u]]).clone()
        };
        let fresh: Vec<u32> = td.bag(u).difference(&parent_bag).copied().collect();
        debug_assert!(!fresh.is_empty(), "kept nodes contribute a vertex");
        let attach = if u == root { usize::MAX } else { bottom[surviving[parent[u]]] };
        let mut upper = attach;
        let mut bag: BTreeSet<u32> = td.bag(u).intersection(&parent_bag).copied().collect();
        for &v in &fresh {
            bag.insert(v);
            bags.push(bag.clone());
            homed.push(v);
            new_parent.push(upper);
            upper = bags.len() - 1;
        }
        bottom[u] = upper;
    }

    let mut home = vec![usize::MAX; graph.n() as usize];
    for (node, &v) in homed.iter().enumerate() {
        if home[v as usize] != usize::MAX {
            return Err(TdError::NotSemiSmooth(format!("vertex {v} has two homes")));
        }
        home[v as usize] = node;
    }
    if let Some(v) = home.iter().position(|&h| h == usize::MAX) {
        return Err(TdError::UncoveredVertex(v as u32));
    }

    let edges: Vec<(usize, usize)> = (0..bags.len())
        .filter(|&i| new_parent[i] != usize::MAX)
        .map(|i| (new_parent[i], i))
        .collect();
    // The root chain is emitted first, its top node at index 0.
    let td2 = TreeDecomposition::new(bags, &edges, 0, graph)?;
    let width = td2.width();

    // Identifiers, top-down: the smallest value unused in the home bag.
    let mut iota = vec![0u32; graph.n() as usize];
    let mut order2 = vec![td2.root()];
    let mut seen = vec![false; td2.node_count()];
    seen[td2.root()] = true;
    let mut i = 0;
    while i < order2.len() {
        let u = order2[i];
        i += 1;
        for &w in td2.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                order2.push(w);
            }
        }
    }
    for &node in &order2 {
        let v = homed[node];
        let used: BTreeSet<u32> =
            td2.bag(node).iter().filter(|&&u| u != v).map(|&u| iota[u as usize]).collect();
        let mut cand = 1u32;
        while used.contains(&cand) {
            cand += 1;
        }
        debug_assert!(cand <= width + 1, "a bag of size <= width+1 leaves an identifier free");
        iota[v as usize] = cand;
    }

    let ss = SemiSmooth { td: td2, graph: graph.clone(), home, homed, iota, width };
    ss.validate()?;
    Ok(ss)
}

/// Compiles a semi-smooth decomposition of width k into a strict
/// multi-(k+2)-expression that evaluates to exactly the source graph (same
/// names via atom metadata, same edges, empty label sets).
pub fn compile(ss: &SemiSmooth) -> Expr {
    let k = ss.width();
    let special = Label::new(k + 2);
    let mut builder = ExprBuilder::new(k + 2);
    let td = ss.td();
    let parents = td.parents();
    let adjacency = ss.graph().adjacency();

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); td.node_count()];
    for node in 0..td.node_count() {
        if node != td.root() {
            children[parents[node]].push(node);
        }
    }

    // Identifiers of v's neighbors inside its home bag: exactly the
    // neighbors that are created later (their homes are proper ancestors).
    let waiting_labels = |node: usize| -> LabelSet {
        let v = ss.homed_vertex(node);
        let bag = td.bag(node);
        LabelSet::from_indices(
            adjacency[v as usize]
                .iter()
                .filter(|&&u| bag.contains(&u))
                .map(|&u| ss.iota(u)),
        )
    };

    let mut built: Vec<Option<NodeId>> = vec![None; td.node_count()];
    // post-order over the decomposition tree
    let mut stack: Vec<(usize, bool)> = vec![(td.root(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if !expanded {
            stack.push((node, true));
            for &c in children[node].iter().rev() {
                stack.push((c, false));
            }
            continue;
        }
        let v = ss.homed_vertex(node);
        let name = ss.graph().display_name(v);
        let expr = if children[node].is_empty() {
            // regular leaf: all bag neighbors are upper neighbors
            builder
                .create_named(1, waiting_labels(node), vec![Some(name)])
                .expect("leaf atoms are valid")
        } else {
            let mut labels = waiting_labels(node);
            labels.insert(special);
            let aux = builder
                .create_named(1, labels, vec![Some(name)])
                .expect("auxiliary atoms are valid");
            let mut parts = vec![aux];
            parts.extend(children[node].iter().map(|&c| built[c].take().expect("post-order")));
            let joined = builder.join(parts).expect("internal nodes have >= 2 parts");
            let vi = Label::new(ss.iota(v));
            let wired = builder.eta(vi, special, joined).expect("iota(v) <= k+1 < k+2");
            let e1 = builder.eps(vi, wired).expect("valid label");
            builder.eps(special, e1).expect("valid label")
        };
        built[node] = Some(expr);
    }
    let root = built[td.root()].take().expect("root compiled");
    builder.finish(root).expect("compiler consumes every node")
}
