//! c-colorability by dynamic programming over color/label incidence graphs.
//!
//! For each subexpression the DP keeps one boolean per bipartite graph
//! between the `c` colors and the `k` labels: entry `E` is true iff some
//! proper coloring of the generated subgraph has a vertex of color `q`
//! carrying label `l` exactly for the pairs `(q, l)` in `E`. The root graph
//! is c-colorable iff any entry is true.
//!
//! Tables have `2^(c*k)` entries, so `c*k` is capped (24 bits by default).
//! The pipeline remaps label indices to a dense range first, which makes the
//! cap a function of the labels actually used.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{Expr, Label, LabelSet, Node};
use crate::geval::{self, EtaViolation, EvalError};

/// Default cap on `c * k` incidence bits.
pub const DEFAULT_BIT_CAP: u32 = 24;
/// Above this, the zeta-transform join would need gigabyte count arrays.
const MAX_ZETA_BITS: u32 = 20;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ColoringError {
    #[error("{0}")]
    Eta(EtaViolation),
    #[error("table needs {bits} incidence bits (c={c} x k={k}), over the cap of {cap}")]
    Resource { c: u32, k: u32, bits: u32, cap: u32 },
    #[error("tables have different dimensions: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("coloring needs at least one color")]
    NoColors,
}

/// Atom rule flavor.
///
/// `Exact` marks every achievable incidence of an atom: any nonempty set of
/// up to `min(m, c)` colors spread over the `m` identically labeled
/// vertices. `SingleColor` marks only one-color incidences; it is sound for
/// the yes/no question (identically labeled isolated vertices can share a
/// color) but its tables under-approximate the achievable incidences for
/// `m >= 2`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum AtomRule {
    #[default]
    Exact,
    SingleColor,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ColorJoinMethod {
    /// Integer subset-zeta transform, pointwise product, Mobius inversion.
    #[default]
    Zeta,
    /// Double loop over the true entries of both tables.
    Direct,
}

/// Boolean table over color/label incidence graphs. Bit position of the
/// incidence pair `(q, l)` is `(q-1)*k + (l-1)`, colors and labels 1-based.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColorTable {
    c: u32,
    k: u32,
    bits: Vec<u64>,
}

impl ColorTable {
    pub fn new_false(c: u32, k: u32, bit_cap: u32) -> Result<ColorTable, ColoringError> {
        if c == 0 {
            return Err(ColoringError::NoColors);
        }
        let bits = c * k;
        if bits > bit_cap || bit_cap > 30 {
            return Err(ColoringError::Resource { c, k, bits, cap: bit_cap.min(30) });
        }
        let entries = 1usize << bits;
        Ok(ColorTable { c, k, bits: vec![0; entries.div_ceil(64)] })
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn entry_count(&self) -> usize {
        1usize << (self.c * self.k)
    }

    fn pair_bit(&self, q: u32, l: u32) -> u32 {
        debug_assert!(1 <= q && q <= self.c && 1 <= l && l <= self.k);
        (q - 1) * self.k + (l - 1)
    }

    pub fn get(&self, e: u32) -> bool {
        self.bits[e as usize / 64] >> (e % 64) & 1 == 1
    }

    pub fn set(&mut self, e: u32) {
        self.bits[e as usize / 64] |= 1 << (e % 64);
    }

    fn clear(&mut self, e: u32) {
        self.bits[e as usize / 64] &= !(1 << (e % 64));
    }

    pub fn any_true(&self) -> bool {
        self.bits.iter().any(|&w| w != 0)
    }

    pub fn count_true(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Indices of true entries, ascending.
    pub fn true_entries(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &word) in self.bits.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = w.trailing_zeros();
                out.push((wi * 64) as u32 + b);
                w &= w - 1;
            }
        }
        out
    }

    /// Atom table for `m` vertices all labeled `labels`.
    pub fn atom(
        m: u64,
        labels: &LabelSet,
        c: u32,
        k: u32,
        rule: AtomRule,
        bit_cap: u32,
    ) -> Result<ColorTable, ColoringError> {
        assert!(m >= 1, "atoms create at least one vertex");
        let mut t = ColorTable::new_false(c, k, bit_cap)?;
        if labels.is_empty() {
            // unlabeled vertices realize only the empty incidence
            t.set(0);
            return Ok(t);
        }
        // incidence footprint of one vertex colored q
        let pattern: Vec<u32> = (1..=c)
            .map(|q| labels.iter().fold(0u32, |acc, l| acc | 1 << t.pair_bit(q, l.index())))
            .collect();
        let max_colors = match rule {
            AtomRule::Exact => m.min(c as u64) as u32,
            AtomRule::SingleColor => 1,
        };
        for subset in 1u32..1 << c {
            if subset.count_ones() > max_colors {
                continue;
            }
            let e = (0..c).filter(|q| subset >> q & 1 == 1).fold(0, |acc, q| {
                acc | pattern[q as usize]
            });
            t.set(e);
        }
        Ok(t)
    }

    /// New edges between labels `i` and `j` invalidate colorings where some
    /// color appears on both sides.
    pub fn eta(&self, i: Label, j: Label) -> ColorTable {
        let mut out = self.clone();
        let conflicts: Vec<u32> = (1..=self.c)
            .map(|q| 1 << self.pair_bit(q, i.index()) | 1 << self.pair_bit(q, j.index()))
            .collect();
        for e in self.true_entries() {
            if conflicts.iter().any(|&m| e & m == m) {
                out.clear(e);
            }
        }
        out
    }

    /// Relabeling `rho i -> S` rewrites each true incidence: every `(q, i)`
    /// edge is replaced by `{(q, l) : l in S}`. `S = {}` realizes `eps i`.
    pub fn rho(&self, i: Label, to: &LabelSet) -> ColorTable {
        let mut out = ColorTable { c: self.c, k: self.k, bits: vec![0; self.bits.len()] };
        let per_color: Vec<(u32, u32)> = (1..=self.c)
            .map(|q| {
                let src = 1u32 << self.pair_bit(q, i.index());
                let dst = to.iter().fold(0u32, |acc, l| acc | 1 << self.pair_bit(q, l.index()));
                (src, dst)
            })
            .collect();
        for e in self.true_entries() {
            let mut e2 = e;
            for &(src, dst) in &per_color {
                if e2 & src != 0 {
                    e2 = (e2 & !src) | dst;
                }
            }
            out.set(e2);
        }
        out
    }

    /// Disjoint union: an incidence is achievable iff it splits as a union
    /// of achievable incidences of the parts.
    pub fn join(&self, other: &ColorTable, method: ColorJoinMethod) -> Result<ColorTable, ColoringError> {
        if self.c != other.c || self.k != other.k {
            return Err(ColoringError::DimensionMismatch(self.c, self.k, other.c, other.k));
        }
        match method {
            ColorJoinMethod::Direct => {
                let mut out = ColorTable { c: self.c, k: self.k, bits: vec![0; self.bits.len()] };
                let b_true = other.true_entries();
                for ea in self.true_entries() {
                    for &eb in &b_true {
                        out.set(ea | eb);
                    }
                }
                Ok(out)
            }
            ColorJoinMethod::Zeta => {
                let bits = self.c * self.k;
                if bits > MAX_ZETA_BITS {
                    // fall back rather than allocate gigabytes of counts
                    return self.join(other, ColorJoinMethod::Direct);
                }
                let size = 1usize << bits;
                let counts = |t: &ColorTable| -> Vec<u64> {
                    let mut f = vec![0u64; size];
                    for e in t.true_entries() {
                        f[e as usize] = 1;
                    }
                    for b in 0..bits {
                        for e in 0..size {
                            if e >> b & 1 == 1 {
                                f[e] += f[e ^ (1 << b)];
                            }
                        }
                    }
                    f
                };
                let fa = counts(self);
                let fb = counts(other);
                let mut h: Vec<u64> = fa.iter().zip(&fb).map(|(a, b)| a * b).collect();
                for b in 0..bits {
                    for e in 0..size {
                        if e >> b & 1 == 1 {
                            h[e] -= h[e ^ (1 << b)];
                        }
                    }
                }
                let mut out = ColorTable { c: self.c, k: self.k, bits: vec![0; self.bits.len()] };
                for (e, &cnt) in h.iter().enumerate() {
                    if cnt > 0 {
                        out.set(e as u32);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Table with colors renamed by `perm` (a permutation of `0..c`,
    /// mapping color `q` to `perm[q-1] + 1`). The truth set of a table with
    /// exact semantics is invariant under this.
    pub fn permute_colors(&self, perm: &[u32]) -> ColorTable {
        assert_eq!(perm.len(), self.c as usize);
        let mut out = ColorTable { c: self.c, k: self.k, bits: vec![0; self.bits.len()] };
        for e in self.true_entries() {
            let mut e2 = 0u32;
            for q in 1..=self.c {
                let chunk = e >> ((q - 1) * self.k) & ((1 << self.k) - 1);
                e2 |= chunk << (perm[(q - 1) as usize] * self.k);
            }
            out.set(e2);
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ColoringOptions {
    pub rule: AtomRule,
    pub join: ColorJoinMethod,
    pub bit_cap: u32,
}

impl Default for ColoringOptions {
    fn default() -> ColoringOptions {
        ColoringOptions {
            rule: AtomRule::default(),
            join: ColorJoinMethod::default(),
            bit_cap: DEFAULT_BIT_CAP,
        }
    }
}

/// The root incidence table of `expr` under `c` colors. Label indices are
/// compacted to the set actually used, so the cap applies to
/// `c * used_width`.
pub fn root_table(expr: &Expr, c: u32, opts: ColoringOptions) -> Result<ColorTable, ColoringError> {
    if c == 0 {
        return Err(ColoringError::NoColors);
    }
    let used = expr.used_labels();
    let compact: std::collections::HashMap<u32, u32> = used
        .iter()
        .enumerate()
        .map(|(pos, l)| (l.index(), pos as u32 + 1))
        .collect();
    let k = used.len() as u32;
    let remap_label = |l: Label| Label::new(compact[&l.index()]);
    let remap_set =
        |s: &LabelSet| LabelSet::from_indices(s.iter().map(|l| compact[&l.index()]));

    let sigs = geval::signature_trace(expr).map_err(|e| match e {
        EvalError::Eta(v) => ColoringError::Eta(v),
        EvalError::TooManyVertices(_) => unreachable!("signature trace materializes no vertices"),
    })?;
    let _ = &sigs; // preconditions checked; rules below assume them

    let mut values: Vec<Option<ColorTable>> = (0..expr.node_count()).map(|_| None).collect();
    for id in expr.post_order() {
        let table = match expr.node(id) {
            Node::Create { count, labels, .. } => {
                ColorTable::atom(*count, &remap_set(labels), c, k, opts.rule, opts.bit_cap)?
            }
            Node::Eta { i, j, child } => {
                let t = values[child.index()].take().expect("post-order");
                t.eta(remap_label(*i), remap_label(*j))
            }
            Node::Rho { i, to, child } => {
                let t = values[child.index()].take().expect("post-order");
                t.rho(remap_label(*i), &remap_set(to))
            }
            Node::Eps { i, child } => {
                let t = values[child.index()].take().expect("post-order");
                t.rho(remap_label(*i), &LabelSet::empty())
            }
            Node::Join { children } => {
                let mut acc = values[children[0].index()].take().expect("post-order");
                for ch in &children[1..] {
                    let next = values[ch.index()].take().expect("post-order");
                    acc = acc.join(&next, opts.join)?;
                }
                acc
            }
        };
        values[id.index()] = Some(table);
    }
    Ok(values[expr.root().index()].take().expect("root computed"))
}

/// True iff the generated graph has a proper c-coloring.
pub fn colorable(expr: &Expr, c: u32, opts: ColoringOptions) -> Result<bool, ColoringError> {
    Ok(root_table(expr, c, opts)?.any_true())
}

/// Incidence masks of the root table translated back to the uncompacted
/// `(q, l)` pairs over the full declared width, for oracle comparison.
pub fn root_incidences(
    expr: &Expr,
    c: u32,
    opts: ColoringOptions,
) -> Result<BTreeSet<Vec<(u32, u32)>>, ColoringError> {
    let used: Vec<u32> = expr.used_labels().iter().map(Label::index).collect();
    let k = used.len() as u32;
    let table = root_table(expr, c, opts)?;
    let mut out = BTreeSet::new();
    for e in table.true_entries() {
        let mut pairs = Vec::new();
        for q in 1..=c {
            for (pos, &orig) in used.iter().enumerate() {
                if e >> ((q - 1) * k + pos as u32) & 1 == 1 {
                    pairs.push((q, orig));
                }
            }
        }
        pairs.sort_unstable();
        out.insert(pairs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn e(text: &str) -> Expr {
        parse(text).unwrap()
    }

    fn ls<const N: usize>(v: [u32; N]) -> LabelSet {
        LabelSet::from_indices(v)
    }

    #[test]
    fn atom_single_vertex() {
        // m=1, S={1}, c=2, k=1: exactly {(1,1)} and {(2,1)}
        let t = ColorTable::atom(1, &ls([1]), 2, 1, AtomRule::Exact, 24).unwrap();
        assert_eq!(t.true_entries(), vec![0b01, 0b10]);
    }

    #[test]
    fn atom_multi_vertex_spreads_colors() {
        // m=3, S={1}, c=2: additionally both colors at once
        let t = ColorTable::atom(3, &ls([1]), 2, 1, AtomRule::Exact, 24).unwrap();
        assert_eq!(t.true_entries(), vec![0b01, 0b10, 0b11]);
        // the paper's single-color rule leaves the two-color entry out
        let t = ColorTable::atom(3, &ls([1]), 2, 1, AtomRule::SingleColor, 24).unwrap();
        assert_eq!(t.true_entries(), vec![0b01, 0b10]);
        // m=2 caps the spread at 2 colors even with c=3
        let t = ColorTable::atom(2, &ls([1]), 3, 1, AtomRule::Exact, 24).unwrap();
        assert_eq!(t.true_entries().len(), 3 + 3);
    }

    #[test]
    fn atom_unlabeled() {
        let t = ColorTable::atom(2, &ls([]), 2, 1, AtomRule::Exact, 24).unwrap();
        assert_eq!(t.true_entries(), vec![0]);
    }

    #[test]
    fn eta_kills_shared_colors() {
        // k=2, c=2; entry with (1,1) and (1,2): forced false by eta 1 2
        let mut t = ColorTable::new_false(2, 2, 24).unwrap();
        let e_bad = 1 << 0 | 1 << 1; // (1,1), (1,2)
        let e_ok = 1 << 0 | 1 << 3; // (1,1), (2,2)
        t.set(e_bad);
        t.set(e_ok);
        let t2 = t.eta(Label::new(1), Label::new(2));
        assert!(!t2.get(e_bad));
        assert!(t2.get(e_ok));
    }

    #[test]
    fn rho_rewrites_incidences() {
        let mut t = ColorTable::new_false(2, 2, 24).unwrap();
        t.set(1 << 0); // (1,1)
        // rho 1 -> {2}: (q,1) edges become (q,2)
        let t2 = t.rho(Label::new(1), &ls([2]));
        assert_eq!(t2.true_entries(), vec![1 << 1]);
        // untouched tables pass through
        let mut t = ColorTable::new_false(2, 2, 24).unwrap();
        t.set(1 << 1); // (1,2)
        let t3 = t.rho(Label::new(1), &ls([2]));
        assert_eq!(t3.true_entries(), vec![1 << 1]);
        // eps drops the edges
        let mut t = ColorTable::new_false(2, 2, 24).unwrap();
        t.set(1 << 0 | 1 << 3);
        let t4 = t.rho(Label::new(1), &ls([]));
        assert_eq!(t4.true_entries(), vec![1 << 3]);
    }

    #[test]
    fn join_methods_agree() {
        let a = ColorTable::atom(1, &ls([1]), 2, 2, AtomRule::Exact, 24).unwrap();
        let b = ColorTable::atom(2, &ls([2]), 2, 2, AtomRule::Exact, 24).unwrap();
        let d = a.join(&b, ColorJoinMethod::Direct).unwrap();
        let z = a.join(&b, ColorJoinMethod::Zeta).unwrap();
        assert_eq!(d, z);
        // identity: join with the empty-incidence-only table
        let mut unit = ColorTable::new_false(2, 2, 24).unwrap();
        unit.set(0);
        assert_eq!(a.join(&unit, ColorJoinMethod::Zeta).unwrap(), a);
    }

    #[test]
    fn two_single_vertices() {
        // two unlabeled-joined single vertices with k=1 labels each, c=2:
        // all unions of one edge from each side
        let a = ColorTable::atom(1, &ls([1]), 2, 1, AtomRule::Exact, 24).unwrap();
        let j = a.join(&a, ColorJoinMethod::Direct).unwrap();
        assert_eq!(j.true_entries(), vec![0b01, 0b10, 0b11]);
    }

    #[test]
    fn odd_cycle_and_triangle() {
        // K_3 via repeated eta; 2 colors fail, 3 work
        let k3 = "#mcw k=2\n(rho 2 (1) (eta 1 2 (join (rho 2 (1) (eta 1 2 (join (v 1 1) (v 1 2)))) (v 1 2))))";
        let expr = e(k3);
        assert!(!colorable(&expr, 2, ColoringOptions::default()).unwrap());
        assert!(colorable(&expr, 3, ColoringOptions::default()).unwrap());
    }

    #[test]
    fn atom_rule_variants_decide_alike() {
        let exprs = [
            "#mcw k=2\n(eta 1 2 (join (v 3 1) (v 2 2)))",
            "#mcw k=2\n(rho 1 (2) (join (v 2 1) (v 2 2)))",
            "#mcw k=3\n(eta 1 3 (eta 1 2 (join (v 2 1) (v 1 2 3))))",
        ];
        for s in exprs {
            for c in 1..=3 {
                let exact = colorable(
                    &e(s),
                    c,
                    ColoringOptions { rule: AtomRule::Exact, ..Default::default() },
                )
                .unwrap();
                let single = colorable(
                    &e(s),
                    c,
                    ColoringOptions { rule: AtomRule::SingleColor, ..Default::default() },
                )
                .unwrap();
                assert_eq!(exact, single, "{s} with c={c}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let expr = e("#mcw k=6\n(v 1 1 2 3 4 5 6)");
        let err = colorable(&expr, 5, ColoringOptions::default()).unwrap_err();
        assert!(matches!(err, ColoringError::Resource { bits: 30, cap: 24, .. }));
        // compaction: declared width large, used width small
        let expr = e("#mcw k=60\n(eta 1 60 (join (v 1 1) (v 1 60)))");
        assert!(colorable(&expr, 3, ColoringOptions::default()).unwrap());
    }

    #[test]
    fn color_permutation_preserves_truth_set() {
        let a = ColorTable::atom(2, &ls([1, 2]), 3, 2, AtomRule::Exact, 24).unwrap();
        let b = ColorTable::atom(1, &ls([2]), 3, 2, AtomRule::Exact, 24).unwrap();
        let t = a.join(&b, ColorJoinMethod::Zeta).unwrap().eta(Label::new(1), Label::new(2));
        for perm in [[1u32, 0, 2], [2, 1, 0], [1, 2, 0]] {
            assert_eq!(t.permute_colors(&perm), t);
        }
    }
}
