//! The labeled independent set polynomial, computed by dynamic programming
//! over the expression parse tree.
//!
//! For a k-labeled graph, the table stores exact counts of independent sets
//! indexed by (size, set of labels present among the chosen vertices). The
//! five rules:
//!
//! - atom `m` with labels `S`: `1 + ((1+x)^m - 1) * prod x_S`;
//! - `eta i j`: drop every entry whose mask contains both `i` and `j`;
//! - `rho i S`: re-accumulate entries at `(mask \ i) | S`;
//! - `eps i`: `rho i {}`;
//! - `join`: union-convolution over masks, ordinary convolution in size.
//!
//! Joins come in two interchangeable flavors: sparse schoolbook
//! multiplication, and a dense subset-zeta transform that evaluates each
//! label variable at 0/1, multiplies pointwise, and Mobius-inverts. They
//! agree exactly; `school` wins on the sparse tables the compiler emits,
//! `transform` on dense ones.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{Expr, Label, LabelSet, Node};
use crate::geval::{self, EtaViolation, EvalError, MaskSignature};

/// Widths past this cannot key masks into a machine word.
pub const MAX_WIDTH: u32 = 64;
/// The dense transform materializes 2^k coefficient vectors.
pub const MAX_TRANSFORM_WIDTH: u32 = 20;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum IndpolyError {
    #[error("{0}")]
    Eta(EtaViolation),
    #[error("expression creates {0} vertices, more than the DP supports")]
    TooManyVertices(u64),
    #[error("width k={0} exceeds the {MAX_WIDTH}-label limit of the polynomial DP")]
    WidthTooLarge(u32),
    #[error("transform join needs k <= {MAX_TRANSFORM_WIDTH}, got {0}; use the school method")]
    TransformWidth(u32),
    #[error("join of polynomials with different widths: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("eta {i} {j}: some vertex carries both labels")]
    EtaPrecondition { i: Label, j: Label },
}

impl From<EvalError> for IndpolyError {
    fn from(e: EvalError) -> IndpolyError {
        match e {
            EvalError::Eta(v) => IndpolyError::Eta(v),
            EvalError::TooManyVertices(n) => IndpolyError::TooManyVertices(n),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum JoinMethod {
    #[default]
    School,
    Transform,
}

/// Coefficient table of the labeled independent set polynomial.
///
/// Sparse over masks; per mask a dense vector of counts by independent-set
/// size, trailing zeros trimmed. The entry `(0, {})` is always 1 (the empty
/// set), and a nonempty mask needs at least one vertex, so its vector starts
/// with a zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabeledIsPoly {
    k: u32,
    table: BTreeMap<u64, Vec<BigUint>>,
}

fn trim(v: &mut Vec<BigUint>) {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
}

/// `target[offset + i + j] += a[i] * b[j]`, skipping zero terms and not
/// multiplying by one.
fn add_product(target: &mut Vec<BigUint>, a: &[BigUint], b: &[BigUint]) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    let need = a.len() + b.len() - 1;
    if target.len() < need {
        target.resize(need, BigUint::zero());
    }
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let slot = &mut target[i + j];
            if x.is_one() {
                *slot += y;
            } else if y.is_one() {
                *slot += x;
            } else {
                *slot += x * y;
            }
        }
    }
}

impl LabeledIsPoly {
    fn check_width(k: u32) -> Result<(), IndpolyError> {
        if k > MAX_WIDTH {
            return Err(IndpolyError::WidthTooLarge(k));
        }
        Ok(())
    }

    /// The multiplicative identity: just the empty independent set.
    pub fn unit(k: u32) -> Result<LabeledIsPoly, IndpolyError> {
        Self::check_width(k)?;
        let mut table = BTreeMap::new();
        table.insert(0u64, vec![BigUint::one()]);
        Ok(LabeledIsPoly { k, table })
    }

    /// Polynomial of an atom creating `m` vertices labeled `labels`:
    /// `coeff(0, {}) = 1` and `coeff(l, labels) = C(m, l)` for `1 <= l <= m`,
    /// with binomials from the rising recurrence.
    pub fn atom(m: u64, labels: &LabelSet, k: u32) -> Result<LabeledIsPoly, IndpolyError> {
        Self::check_width(k)?;
        assert!(m >= 1, "atoms create at least one vertex");
        assert!(labels.max_index().unwrap_or(0) <= k, "atom labels must respect the width");
        let mask = labels.bits().expect("width-checked labels fit u64");
        let len = usize::try_from(m).map_err(|_| IndpolyError::TooManyVertices(m))?;
        let mut binom: Vec<BigUint> = Vec::with_capacity(len + 1);
        binom.push(BigUint::one());
        let mut c = BigUint::one();
        for l in 0..m {
            // C(m, l+1) = C(m, l) * (m - l) / (l + 1), exactly
            c = c * (m - l) / (l + 1);
            binom.push(c.clone());
        }
        let mut table = BTreeMap::new();
        if mask == 0 {
            table.insert(0u64, binom);
        } else {
            table.insert(0u64, vec![BigUint::one()]);
            binom[0] = BigUint::zero();
            table.insert(mask, binom);
        }
        Ok(LabeledIsPoly { k, table })
    }

    /// Builds a table from raw `(size, mask, count)` entries, accumulating
    /// duplicates. Used by brute-force oracles and random-table generators.
    pub fn from_entries(
        k: u32,
        entries: impl IntoIterator<Item = (usize, u64, BigUint)>,
    ) -> Result<LabeledIsPoly, IndpolyError> {
        Self::check_width(k)?;
        let mut table: BTreeMap<u64, Vec<BigUint>> = BTreeMap::new();
        for (size, mask, count) in entries {
            debug_assert!(k == 64 || mask < 1 << k);
            let v = table.entry(mask).or_default();
            if v.len() <= size {
                v.resize(size + 1, BigUint::zero());
            }
            v[size] += count;
        }
        for v in table.values_mut() {
            trim(v);
        }
        table.retain(|_, v| !v.is_empty());
        Ok(LabeledIsPoly { k, table })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coeff(&self, size: usize, mask: u64) -> BigUint {
        self.table.get(&mask).and_then(|v| v.get(size)).cloned().unwrap_or_default()
    }

    /// Nonzero-capable entries as `(size, mask, coefficient)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u64, &BigUint)> + '_ {
        self.table.iter().flat_map(|(&mask, v)| {
            v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(i, c)| (i, mask, c))
        })
    }

    /// Number of stored coefficients (the paper bound is `2^k * (n+1)`).
    pub fn stored_coefficients(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    pub fn degree(&self) -> usize {
        self.table.values().map(|v| v.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Total count of independent sets: the sum of every coefficient.
    pub fn total(&self) -> BigUint {
        self.table.values().flatten().sum()
    }

    /// Drops every entry whose mask contains both `i` and `j`. The
    /// precondition (no single vertex carries both) is certified by the
    /// mask signature of the underlying subgraph.
    pub fn apply_eta(
        &mut self,
        i: Label,
        j: Label,
        sig: &MaskSignature,
    ) -> Result<(), IndpolyError> {
        if sig.iter().any(|m| m.contains(i) && m.contains(j)) {
            return Err(IndpolyError::EtaPrecondition { i, j });
        }
        let bits = 1u64 << (i.index() - 1) | 1u64 << (j.index() - 1);
        self.table.retain(|mask, _| mask & bits != bits);
        Ok(())
    }

    /// Re-accumulates every entry at `(mask \ i) | S`.
    pub fn apply_rho(&mut self, i: Label, to: &LabelSet) {
        assert!(i.index() <= self.k && to.max_index().unwrap_or(0) <= self.k);
        let bit = 1u64 << (i.index() - 1);
        let to_bits = to.bits().expect("width-checked labels fit u64");
        let old = std::mem::take(&mut self.table);
        for (mask, coeffs) in old {
            let target = if mask & bit != 0 { (mask & !bit) | to_bits } else { mask };
            match self.table.entry(target) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(coeffs);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let slot = e.get_mut();
                    if slot.len() < coeffs.len() {
                        slot.resize(coeffs.len(), BigUint::zero());
                    }
                    for (s, c) in slot.iter_mut().zip(coeffs) {
                        *s += c;
                    }
                }
            }
        }
    }

    /// Replaces `x_i` by 1: the `rho i -> {}` special case.
    pub fn apply_eps(&mut self, i: Label) {
        self.apply_rho(i, &LabelSet::empty());
    }

    /// Product under disjoint union: sizes add, masks union.
    pub fn join(
        a: &LabeledIsPoly,
        b: &LabeledIsPoly,
        method: JoinMethod,
    ) -> Result<LabeledIsPoly, IndpolyError> {
        if a.k != b.k {
            return Err(IndpolyError::WidthMismatch(a.k, b.k));
        }
        match method {
            JoinMethod::School => Ok(Self::join_school(a, b)),
            JoinMethod::Transform => Self::join_transform(a, b),
        }
    }

    fn join_school(a: &LabeledIsPoly, b: &LabeledIsPoly) -> LabeledIsPoly {
        let mut table: BTreeMap<u64, Vec<BigUint>> = BTreeMap::new();
        for (&ma, va) in &a.table {
            for (&mb, vb) in &b.table {
                add_product(table.entry(ma | mb).or_default(), va, vb);
            }
        }
        for v in table.values_mut() {
            trim(v);
        }
        table.retain(|_, v| !v.is_empty());
        LabeledIsPoly { k: a.k, table }
    }

    /// Subset-zeta over masks (evaluate each `x_l` at 0/1 keeping `x`
    /// symbolic), pointwise convolution, exact Mobius inversion.
    fn join_transform(a: &LabeledIsPoly, b: &LabeledIsPoly) -> Result<LabeledIsPoly, IndpolyError> {
        let k = a.k;
        if k > MAX_TRANSFORM_WIDTH {
            return Err(IndpolyError::TransformWidth(k));
        }
        let size = 1usize << k;
        let dense = |p: &LabeledIsPoly| -> Vec<Vec<BigInt>> {
            let mut f = vec![Vec::new(); size];
            for (&mask, v) in &p.table {
                f[mask as usize] = v.iter().map(|c| BigInt::from(c.clone())).collect();
            }
            f
        };
        let zeta = |f: &mut Vec<Vec<BigInt>>| {
            for bit in 0..k {
                for t in 0..size {
                    if t >> bit & 1 == 1 {
                        let (lo, hi) = f.split_at_mut(t);
                        let src = &lo[t ^ (1 << bit)];
                        let dst = &mut hi[0];
                        if dst.len() < src.len() {
                            dst.resize(src.len(), BigInt::zero());
                        }
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                }
            }
        };
        let mut fa = dense(a);
        let mut fb = dense(b);
        zeta(&mut fa);
        zeta(&mut fb);
        let mut h: Vec<Vec<BigInt>> = Vec::with_capacity(size);
        for (va, vb) in fa.iter().zip(&fb) {
            let mut out = Vec::new();
            if !va.is_empty() && !vb.is_empty() {
                out.resize(va.len() + vb.len() - 1, BigInt::zero());
                for (i, x) in va.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in vb.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
            }
            h.push(out);
        }
        // Mobius: invert the zeta dimension by dimension.
        for bit in 0..k {
            for t in 0..size {
                if t >> bit & 1 == 1 {
                    let (lo, hi) = h.split_at_mut(t);
                    let src = &lo[t ^ (1 << bit)];
                    let dst = &mut hi[0];
                    if dst.len() < src.len() {
                        dst.resize(src.len(), BigInt::zero());
                    }
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= s;
                    }
                }
            }
        }
        let mut table = BTreeMap::new();
        for (mask, v) in h.into_iter().enumerate() {
            let mut out: Vec<BigUint> = v
                .into_iter()
                .map(|c| c.to_biguint().expect("independent set counts are nonnegative"))
                .collect();
            trim(&mut out);
            if !out.is_empty() {
                table.insert(mask as u64, out);
            }
        }
        Ok(LabeledIsPoly { k, table })
    }

    /// `I(x) = P(x, 1, ..., 1)`: coefficients by size, masks summed out.
    pub fn project(&self) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); self.degree() + 1];
        for v in self.table.values() {
            for (i, c) in v.iter().enumerate() {
                out[i] += c;
            }
        }
        trim(&mut out);
        if out.is_empty() {
            out.push(BigUint::zero());
        }
        out
    }
}

/// Bottom-up DP over the parse tree; the result is the labeled polynomial of
/// the generated graph.
pub fn run(expr: &Expr, method: JoinMethod) -> Result<LabeledIsPoly, IndpolyError> {
    LabeledIsPoly::check_width(expr.width())?;
    let sigs = geval::signature_trace(expr)?;
    let k = expr.width();
    let mut values: Vec<Option<LabeledIsPoly>> = (0..expr.node_count()).map(|_| None).collect();
    for id in expr.post_order() {
        let poly = match expr.node(id) {
            Node::Create { count, labels, .. } => LabeledIsPoly::atom(*count, labels, k)?,
            Node::Eta { i, j, child } => {
                let mut p = values[child.index()].take().expect("post-order");
                p.apply_eta(*i, *j, &sigs[child.index()])?;
                p
            }
            Node::Rho { i, to, child } => {
                let mut p = values[child.index()].take().expect("post-order");
                p.apply_rho(*i, to);
                p
            }
            Node::Eps { i, child } => {
                let mut p = values[child.index()].take().expect("post-order");
                p.apply_eps(*i);
                p
            }
            Node::Join { children } => {
                let mut acc = values[children[0].index()].take().expect("post-order");
                for c in &children[1..] {
                    let next = values[c.index()].take().expect("post-order");
                    acc = LabeledIsPoly::join(&acc, &next, method)?;
                }
                acc
            }
        };
        values[id.index()] = Some(poly);
    }
    Ok(values[expr.root().index()].take().expect("root computed"))
}

/// Independent set counts by size for the generated graph.
pub fn independent_set_counts(expr: &Expr, method: JoinMethod) -> Result<Vec<BigUint>, IndpolyError> {
    Ok(run(expr, method)?.project())
}

// ---------------------------------------------------------------------------
// Maximum independent set with witness: the (max, +) shadow of the DP above,
// with provenance for backtracking.

#[derive(Clone, Debug)]
enum Prov {
    /// Take the first `take` vertices of the atom's creation range.
    Atom { take: u64 },
    /// Same mask in the single child.
    Keep,
    /// Accumulated from this mask before the relabeling.
    From(u64),
    /// Join split: `left` in the accumulated prefix, `right` in the child.
    Split { left: u64, right: u64 },
}

type MisEntries = BTreeMap<u64, (u64, Prov)>;

/// Best independent-set size per label mask, the `(max, +)` collapse of the
/// full table; kept only for the largest size per mask.
#[derive(Clone, Debug)]
pub struct MisTable {
    entries: MisEntries,
}

impl MisTable {
    pub fn best(&self, mask: u64) -> Option<u64> {
        self.entries.get(&mask).map(|&(best, _)| best)
    }

    pub fn masks(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.entries.iter().map(|(&m, &(b, _))| (m, b))
    }
}

fn bump(entries: &mut MisEntries, mask: u64, size: u64, prov: Prov) {
    match entries.entry(mask) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert((size, prov));
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            if size > e.get().0 {
                *e.get_mut() = (size, prov);
            }
        }
    }
}

/// Which table a backtracking step reads: a plain node, or one fold step of
/// an n-ary join (step `s` covers children `0..=s+1`).
#[derive(Clone, Copy, Debug)]
enum Slot {
    Node(u32),
    Step(u32, usize),
}

struct MisDp {
    /// Per node: one table, or one per join fold step.
    tables: Vec<Vec<MisEntries>>,
}

fn mis_dp(expr: &Expr, sigs: &[MaskSignature]) -> Result<MisDp, IndpolyError> {
    let mut tables: Vec<Vec<MisEntries>> = (0..expr.node_count()).map(|_| Vec::new()).collect();
    for id in expr.post_order() {
        let out: Vec<MisEntries> = match expr.node(id) {
            Node::Create { count, labels, .. } => {
                let mask = labels.bits().expect("width-checked");
                let mut t = MisEntries::new();
                t.insert(0, (0, Prov::Atom { take: 0 }));
                if mask == 0 {
                    t.insert(0, (*count, Prov::Atom { take: *count }));
                } else {
                    t.insert(mask, (*count, Prov::Atom { take: *count }));
                }
                vec![t]
            }
            Node::Eta { i, j, child } => {
                if sigs[child.index()].iter().any(|m| m.contains(*i) && m.contains(*j)) {
                    return Err(IndpolyError::EtaPrecondition { i: *i, j: *j });
                }
                let bits = 1u64 << (i.index() - 1) | 1u64 << (j.index() - 1);
                let t = tables[child.index()]
                    .last()
                    .expect("post-order")
                    .iter()
                    .filter(|(&m, _)| m & bits != bits)
                    .map(|(&m, &(b, _))| (m, (b, Prov::Keep)))
                    .collect();
                vec![t]
            }
            Node::Rho { i, to, child } => {
                vec![mis_relabel(tables[child.index()].last().expect("post-order"), *i, to.bits().expect("width-checked"))]
            }
            Node::Eps { i, child } => {
                vec![mis_relabel(tables[child.index()].last().expect("post-order"), *i, 0)]
            }
            Node::Join { children } => {
                let mut steps: Vec<MisEntries> = Vec::with_capacity(children.len() - 1);
                let mut acc: MisEntries =
                    tables[children[0].index()].last().expect("post-order").clone();
                // acc of the first child alone reuses its provenance via Slot
                for c in &children[1..] {
                    let right = tables[c.index()].last().expect("post-order");
                    let mut next = MisEntries::new();
                    for (&ml, &(bl, _)) in &acc {
                        for (&mr, &(br, _)) in right {
                            bump(&mut next, ml | mr, bl + br, Prov::Split { left: ml, right: mr });
                        }
                    }
                    steps.push(next.clone());
                    acc = next;
                }
                steps
            }
        };
        tables[id.index()] = out;
    }
    Ok(MisDp { tables })
}

fn mis_relabel(child: &MisEntries, i: Label, to_bits: u64) -> MisEntries {
    let bit = 1u64 << (i.index() - 1);
    let mut t = MisEntries::new();
    for (&m, &(b, _)) in child {
        let target = if m & bit != 0 { (m & !bit) | to_bits } else { m };
        bump(&mut t, target, b, Prov::From(m));
    }
    t
}

/// The root (max, +) table of the expression.
pub fn max_is_table(expr: &Expr) -> Result<MisTable, IndpolyError> {
    LabeledIsPoly::check_width(expr.width())?;
    let sigs = geval::signature_trace(expr)?;
    let dp = mis_dp(expr, &sigs)?;
    let entries = dp.tables[expr.root().index()].last().expect("root computed").clone();
    Ok(MisTable { entries })
}

/// A maximum independent set of the generated graph, as vertex ids of
/// [`geval::evaluate`], reconstructed by backtracking and verified
/// independent before returning.
pub fn max_is(expr: &Expr) -> Result<Vec<u32>, IndpolyError> {
    LabeledIsPoly::check_width(expr.width())?;
    let graph = geval::evaluate(expr)?;
    let sigs = geval::signature_trace(expr)?;
    let dp = mis_dp(expr, &sigs)?;
    let offsets = expr.vertex_offsets();

    let root_table = dp.tables[expr.root().index()].last().expect("root computed");
    let (&start_mask, &(want, _)) = root_table
        .iter()
        .max_by_key(|(&mask, &(best, _))| (best, std::cmp::Reverse(mask)))
        .expect("table always contains the empty mask");

    let root_slot = match expr.node(expr.root()) {
        Node::Join { .. } => Slot::Step(expr.root().0, dp.tables[expr.root().index()].len() - 1),
        _ => Slot::Node(expr.root().0),
    };
    let mut picked: Vec<u32> = Vec::new();
    let mut stack: Vec<(Slot, u64)> = vec![(root_slot, start_mask)];
    while let Some((slot, mask)) = stack.pop() {
        let (node_id, step) = match slot {
            Slot::Node(n) => (crate::expr::NodeId(n), None),
            Slot::Step(n, s) => (crate::expr::NodeId(n), Some(s)),
        };
        let table = match step {
            None => dp.tables[node_id.index()].last().expect("computed"),
            Some(s) => &dp.tables[node_id.index()][s],
        };
        let (_, prov) = table.get(&mask).expect("backtracking follows stored masks");
        let child_slot = |c: crate::expr::NodeId| match expr.node(c) {
            Node::Join { .. } => Slot::Step(c.0, dp.tables[c.index()].len() - 1),
            _ => Slot::Node(c.0),
        };
        match (expr.node(node_id), prov, step) {
            (Node::Create { .. }, Prov::Atom { take }, _) => {
                let start = offsets[node_id.index()];
                picked.extend((start..start + take).map(|v| v as u32));
            }
            (Node::Eta { child, .. }, Prov::Keep, _) => stack.push((child_slot(*child), mask)),
            (Node::Rho { child, .. }, Prov::From(m), _)
            | (Node::Eps { child, .. }, Prov::From(m), _) => {
                stack.push((child_slot(*child), *m))
            }
            (Node::Join { children }, Prov::Split { left, right }, Some(s)) => {
                stack.push((child_slot(children[s + 1]), *right));
                if s == 0 {
                    stack.push((child_slot(children[0]), *left));
                } else {
                    stack.push((Slot::Step(node_id.0, s - 1), *left));
                }
            }
            other => unreachable!("provenance shape mismatch: {other:?}"),
        }
    }

    picked.sort_unstable();
    assert_eq!(picked.len() as u64, want, "backtracking must reproduce the table optimum");
    for (a, &u) in picked.iter().enumerate() {
        for &v in &picked[a + 1..] {
            assert!(!graph.has_edge(u, v), "backtracked set must be independent");
        }
    }
    Ok(picked)
}
