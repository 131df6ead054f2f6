//! Abstract syntax for multi-k-expressions.
//!
//! An expression document declares a width budget `k` in its header; every
//! label index must lie in `1..=k`. The actual number of distinct labels an
//! expression touches ([`Expr::used_width`]) may be smaller than the budget.
//!
//! Expressions are stored as an arena of nodes so that all traversals can be
//! iterative; compiled expressions routinely nest thousands of levels deep.

mod classical;
mod parse;
mod print;

pub use classical::{expand_to_classical, ExpandError, DEFAULT_LABEL_CAP};
pub use parse::{parse, ParseError};
pub use print::{body, document};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A label index in `1..=k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Label(u32);

impl Label {
    /// Panics on 0; width bounds are checked against the enclosing
    /// expression during construction, not here.
    pub fn new(index: u32) -> Label {
        assert!(index >= 1, "label indices are 1-based");
        Label(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of label indices. Kept sorted and duplicate-free.
///
/// Label indices can exceed 64 (classical expansions number labels up to
/// 2^k), so the set is not a machine-word bitmask; [`LabelSet::bits`]
/// produces one when every member fits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelSet(Vec<u32>);

impl LabelSet {
    pub fn empty() -> LabelSet {
        LabelSet(Vec::new())
    }

    pub fn singleton(label: Label) -> LabelSet {
        LabelSet(vec![label.index()])
    }

    /// Builds a set from arbitrary indices, sorting and deduplicating.
    /// Panics if any index is 0.
    pub fn from_indices<I: IntoIterator<Item = u32>>(indices: I) -> LabelSet {
        let mut v: Vec<u32> = indices.into_iter().collect();
        assert!(v.iter().all(|&l| l >= 1), "label indices are 1-based");
        v.sort_unstable();
        v.dedup();
        LabelSet(v)
    }

    /// Interprets bit `i` of `mask` as label `i+1`.
    pub fn from_bits(mask: u64) -> LabelSet {
        LabelSet((0..64).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect())
    }

    /// The bitmask with bit `l-1` set per member `l`, when all members fit
    /// in 64 bits.
    pub fn bits(&self) -> Option<u64> {
        if self.0.last().is_some_and(|&m| m > 64) {
            return None;
        }
        Some(self.0.iter().fold(0u64, |acc, &l| acc | 1 << (l - 1)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.0.binary_search(&label.index()).is_ok()
    }

    pub fn insert(&mut self, label: Label) {
        if let Err(pos) = self.0.binary_search(&label.index()) {
            self.0.insert(pos, label.index());
        }
    }

    pub fn remove(&mut self, label: Label) {
        if let Ok(pos) = self.0.binary_search(&label.index()) {
            self.0.remove(pos);
        }
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        LabelSet::from_indices(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn max_index(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().map(|&l| Label(l))
    }

    /// Applies the relabeling `rho i -> to`: if `i` is present it is removed
    /// and `to` is unioned in; otherwise the set is returned unchanged.
    pub fn relabel(&self, i: Label, to: &LabelSet) -> LabelSet {
        if !self.contains(i) {
            return self.clone();
        }
        let mut out = self.clone();
        out.remove(i);
        out.union(to)
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, l) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<u32> for LabelSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> LabelSet {
        LabelSet::from_indices(iter)
    }
}

/// Index of a node in an [`Expr`] arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One operation of a multi-k-expression.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Node {
    /// Creates `count` vertices, each carrying `labels`. `names`, when
    /// nonempty, has exactly `count` entries naming the created vertices in
    /// creation order.
    Create {
        count: u64,
        labels: LabelSet,
        names: Vec<Option<String>>,
    },
    /// Inserts every edge between label-`i` and label-`j` vertices.
    Eta { i: Label, j: Label, child: NodeId },
    /// Replaces label `i` by the set `to` on every vertex carrying `i`.
    Rho { i: Label, to: LabelSet, child: NodeId },
    /// Deletes label `i` from all vertices (`rho i -> {}`).
    Eps { i: Label, child: NodeId },
    /// Disjoint union; flattened, so no child is itself a `Join`.
    Join { children: Vec<NodeId> },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Create { .. } => &[],
            Node::Eta { child, .. } | Node::Rho { child, .. } | Node::Eps { child, .. } => {
                std::slice::from_ref(child)
            }
            Node::Join { children } => children,
        }
    }

    /// Short operator name for error paths.
    fn op_name(&self) -> &'static str {
        match self {
            Node::Create { .. } => "v",
            Node::Eta { .. } => "eta",
            Node::Rho { .. } => "rho",
            Node::Eps { .. } => "eps",
            Node::Join { .. } => "join",
        }
    }
}

/// Structural violations caught when assembling an expression.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum InvalidExpr {
    #[error("atom must create at least one vertex")]
    CreateZero,
    #[error("eta requires two distinct labels, got {0} twice")]
    EtaEqualLabels(Label),
    #[error("label {label} exceeds declared width k={width}")]
    WidthViolation { label: u32, width: u32 },
    #[error("join requires at least 2 children, got {0}")]
    JoinTooSmall(usize),
    #[error("atom names a vertex it does not create ({names} names for {count} vertices)")]
    NameCount { names: usize, count: u64 },
    #[error("node used as a child more than once")]
    ChildReused,
    #[error("expression has unreachable nodes (every node must feed the root)")]
    Unreachable,
}

/// A validated multi-k-expression.
///
/// Always structurally valid: width bounds, `eta` label distinctness,
/// positive atom counts, and flattened joins are enforced at construction.
#[derive(Clone, Debug)]
pub struct Expr {
    width: u32,
    nodes: Vec<Node>,
    root: NodeId,
}

impl Expr {
    /// Parses a full expression document (`#mcw k=<width>` header plus one
    /// s-expression body).
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse(text)
    }

    /// Canonical document text; [`Expr::parse`] of it is structurally equal.
    pub fn document(&self) -> String {
        document(self)
    }

    /// The body s-expression without header or name directives.
    pub fn body_string(&self) -> String {
        body(self)
    }

    /// Declared width budget `k` from the document header.
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All nodes in arena order (not traversal order).
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> + '_ {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i as u32), n))
    }

    /// Node ids with every child preceding its parent; the root is last.
    pub fn post_order(&self) -> Vec<NodeId> {
        self.post_order_from(self.root)
    }

    fn post_order_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut order = Vec::new();
        // (node, next child position)
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (id, ref mut pos)) = stack.last_mut() {
            let children = self.node(id).children();
            if *pos < children.len() {
                let next = children[*pos];
                *pos += 1;
                stack.push((next, 0));
            } else {
                order.push(id);
                stack.pop();
            }
        }
        order
    }

    /// A standalone copy of the subtree rooted at `id`, with the same
    /// declared width.
    pub fn subexpression(&self, id: NodeId) -> Expr {
        let mut b = ExprBuilder::new(self.width);
        let mut map: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        for old in self.post_order_from(id) {
            let new = match self.node(old) {
                Node::Create { count, labels, names } => {
                    b.create_named(*count, labels.clone(), names.clone())
                }
                Node::Eta { i, j, child } => b.eta(*i, *j, map[child.index()].take().unwrap()),
                Node::Rho { i, to, child } => {
                    b.rho(*i, to.clone(), map[child.index()].take().unwrap())
                }
                Node::Eps { i, child } => b.eps(*i, map[child.index()].take().unwrap()),
                Node::Join { children } => {
                    b.join(children.iter().map(|c| map[c.index()].take().unwrap()).collect())
                }
            }
            .expect("subtrees of valid expressions are valid");
            map[old.index()] = Some(new);
        }
        b.finish(map[id.index()].take().unwrap()).expect("subtree copy is complete")
    }

    /// Child indices from the root to `id`, rendered like `/2/0`, plus the
    /// operator at the end. Used in diagnostics.
    pub fn path_to(&self, target: NodeId) -> String {
        let parent = self.parents();
        let mut steps = Vec::new();
        let mut cur = target;
        while let Some((p, slot)) = parent[cur.index()] {
            steps.push(slot);
            cur = p;
        }
        steps.reverse();
        let mut s = String::new();
        for step in steps {
            s.push_str(&format!("/{step}"));
        }
        if s.is_empty() {
            s.push('/');
        }
        format!("{s} ({})", self.node(target).op_name())
    }

    fn parents(&self) -> Vec<Option<(NodeId, usize)>> {
        let mut parent = vec![None; self.nodes.len()];
        for id in 0..self.nodes.len() {
            let nid = NodeId(id as u32);
            for (slot, &c) in self.node(nid).children().iter().enumerate() {
                parent[c.index()] = Some((nid, slot));
            }
        }
        parent
    }

    /// Number of vertices each subexpression creates, indexed by node.
    pub fn vertex_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.nodes.len()];
        for id in self.post_order() {
            counts[id.index()] = match self.node(id) {
                Node::Create { count, .. } => *count,
                Node::Eta { child, .. } | Node::Rho { child, .. } | Node::Eps { child, .. } => {
                    counts[child.index()]
                }
                Node::Join { children } => children.iter().map(|c| counts[c.index()]).sum(),
            };
        }
        counts
    }

    /// Total vertices the expression generates.
    pub fn vertex_count(&self) -> u64 {
        self.vertex_counts()[self.root.index()]
    }

    /// First vertex id (in creation order) of each subexpression. A node
    /// generating `m` vertices owns ids `start..start+m`.
    pub fn vertex_offsets(&self) -> Vec<u64> {
        let counts = self.vertex_counts();
        let mut offsets = vec![0u64; self.nodes.len()];
        // Root starts at 0; each child starts where its left siblings end.
        let mut stack = vec![(self.root, 0u64)];
        while let Some((id, start)) = stack.pop() {
            offsets[id.index()] = start;
            let mut at = start;
            for &c in self.node(id).children() {
                stack.push((c, at));
                at += counts[c.index()];
            }
        }
        offsets
    }

    /// Every label index appearing anywhere: atom label sets, `eta` pairs,
    /// `rho` sources and targets, `eps`.
    pub fn used_labels(&self) -> LabelSet {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            match node {
                Node::Create { labels, .. } => seen.extend(labels.iter().map(Label::index)),
                Node::Eta { i, j, .. } => {
                    seen.insert(i.index());
                    seen.insert(j.index());
                }
                Node::Rho { i, to, .. } => {
                    seen.insert(i.index());
                    seen.extend(to.iter().map(Label::index));
                }
                Node::Eps { i, .. } => {
                    seen.insert(i.index());
                }
                Node::Join { .. } => {}
            }
        }
        LabelSet::from_indices(seen)
    }

    /// Number of distinct labels used; at most [`Expr::width`].
    pub fn used_width(&self) -> u32 {
        self.used_labels().len() as u32
    }

    /// True iff every atom carries exactly one label, every `rho` target is
    /// a singleton, and no `eps` appears: the classical k-expression subset.
    pub fn is_classical(&self) -> bool {
        self.nodes.iter().all(|node| match node {
            Node::Create { labels, .. } => labels.len() == 1,
            Node::Rho { to, .. } => to.len() == 1,
            Node::Eps { .. } => false,
            Node::Eta { .. } | Node::Join { .. } => true,
        })
    }

    /// True iff the expression contains no `rho` (`eps` is allowed).
    pub fn is_strict(&self) -> bool {
        !self.nodes.iter().any(|node| matches!(node, Node::Rho { .. }))
    }
}

/// Structural equality on the trees (arena layout is irrelevant).
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        if self.width != other.width {
            return false;
        }
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (self.node(a), other.node(b));
            let payload_eq = match (na, nb) {
                (
                    Node::Create { count: c1, labels: l1, names: n1 },
                    Node::Create { count: c2, labels: l2, names: n2 },
                ) => c1 == c2 && l1 == l2 && n1 == n2,
                (Node::Eta { i: i1, j: j1, .. }, Node::Eta { i: i2, j: j2, .. }) => {
                    i1 == i2 && j1 == j2
                }
                (Node::Rho { i: i1, to: t1, .. }, Node::Rho { i: i2, to: t2, .. }) => {
                    i1 == i2 && t1 == t2
                }
                (Node::Eps { i: i1, .. }, Node::Eps { i: i2, .. }) => i1 == i2,
                (Node::Join { .. }, Node::Join { .. }) => true,
                _ => false,
            };
            if !payload_eq {
                return false;
            }
            let (ca, cb) = (na.children(), nb.children());
            if ca.len() != cb.len() {
                return false;
            }
            stack.extend(ca.iter().copied().zip(cb.iter().copied()));
        }
        true
    }
}

impl Eq for Expr {}

/// Incremental arena construction with validation.
///
/// Children must be built before parents and may be consumed exactly once;
/// `finish` checks that everything feeds the root. Joining a join splices
/// its operands, keeping the flattened normal form.
pub struct ExprBuilder {
    width: u32,
    nodes: Vec<Node>,
    consumed: Vec<bool>,
    /// Join husks emptied by flattening; compacted away in `finish`.
    dead: Vec<bool>,
}

impl ExprBuilder {
    pub fn new(width: u32) -> ExprBuilder {
        ExprBuilder { width, nodes: Vec::new(), consumed: Vec::new(), dead: Vec::new() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    fn check_label(&self, label: Label) -> Result<(), InvalidExpr> {
        if label.index() > self.width {
            return Err(InvalidExpr::WidthViolation { label: label.index(), width: self.width });
        }
        Ok(())
    }

    fn check_set(&self, set: &LabelSet) -> Result<(), InvalidExpr> {
        if let Some(max) = set.max_index() {
            if max > self.width {
                return Err(InvalidExpr::WidthViolation { label: max, width: self.width });
            }
        }
        Ok(())
    }

    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.consumed.push(false);
        self.dead.push(false);
        id
    }

    fn take(&mut self, child: NodeId) -> Result<(), InvalidExpr> {
        let slot = &mut self.consumed[child.index()];
        if *slot {
            return Err(InvalidExpr::ChildReused);
        }
        *slot = true;
        Ok(())
    }

    pub fn create(&mut self, count: u64, labels: LabelSet) -> Result<NodeId, InvalidExpr> {
        self.create_named(count, labels, Vec::new())
    }

    pub fn create_named(
        &mut self,
        count: u64,
        labels: LabelSet,
        names: Vec<Option<String>>,
    ) -> Result<NodeId, InvalidExpr> {
        if count == 0 {
            return Err(InvalidExpr::CreateZero);
        }
        self.check_set(&labels)?;
        let names = if names.iter().all(Option::is_none) { Vec::new() } else { names };
        if !names.is_empty() && names.len() as u64 != count {
            return Err(InvalidExpr::NameCount { names: names.len(), count });
        }
        Ok(self.push(Node::Create { count, labels, names }))
    }

    pub fn eta(&mut self, i: Label, j: Label, child: NodeId) -> Result<NodeId, InvalidExpr> {
        if i == j {
            return Err(InvalidExpr::EtaEqualLabels(i));
        }
        self.check_label(i)?;
        self.check_label(j)?;
        self.take(child)?;
        Ok(self.push(Node::Eta { i, j, child }))
    }

    pub fn rho(&mut self, i: Label, to: LabelSet, child: NodeId) -> Result<NodeId, InvalidExpr> {
        self.check_label(i)?;
        self.check_set(&to)?;
        self.take(child)?;
        Ok(self.push(Node::Rho { i, to, child }))
    }

    pub fn eps(&mut self, i: Label, child: NodeId) -> Result<NodeId, InvalidExpr> {
        self.check_label(i)?;
        self.take(child)?;
        Ok(self.push(Node::Eps { i, child }))
    }

    pub fn join(&mut self, children: Vec<NodeId>) -> Result<NodeId, InvalidExpr> {
        if children.len() < 2 {
            return Err(InvalidExpr::JoinTooSmall(children.len()));
        }
        for &c in &children {
            self.take(c)?;
        }
        // Flatten: operands that are joins melt into this one.
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            if let Node::Join { children: inner } = &mut self.nodes[c.index()] {
                flat.append(inner);
                self.dead[c.index()] = true;
            } else {
                flat.push(c);
            }
        }
        Ok(self.push(Node::Join { children: flat }))
    }

    pub fn finish(mut self, root: NodeId) -> Result<Expr, InvalidExpr> {
        self.take(root)?;
        if !self.consumed.iter().all(|&c| c) {
            return Err(InvalidExpr::Unreachable);
        }
        if !self.dead.iter().any(|&d| d) {
            return Ok(Expr { width: self.width, nodes: self.nodes, root });
        }
        // Compact flattened-away join husks out of the arena.
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.into_iter().enumerate() {
            if self.dead[i] {
                continue;
            }
            remap[i] = nodes.len() as u32;
            nodes.push(node);
        }
        for node in &mut nodes {
            let fix = |id: &mut NodeId| {
                debug_assert!(remap[id.index()] != u32::MAX, "children of live nodes are live");
                *id = NodeId(remap[id.index()]);
            };
            match node {
                Node::Create { .. } => {}
                Node::Eta { child, .. } | Node::Rho { child, .. } | Node::Eps { child, .. } => {
                    fix(child)
                }
                Node::Join { children } => children.iter_mut().for_each(fix),
            }
        }
        Ok(Expr { width: self.width, nodes, root: NodeId(remap[root.index()]) })
    }
}
