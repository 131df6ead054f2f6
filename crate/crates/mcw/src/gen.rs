//! Expression generators for standard graph families, each with a small
//! documented width:
//!
//! - `path n`: width 2 (alternate two labels along the path, deleting each
//!   after its edge is placed);
//! - `cycle n`: width 3 (a path plus an anchor label on the first vertex);
//! - `clique n`: width 2 (grow with a fresh label, merge via `rho`);
//! - `complete-bipartite a b`: width 2 (two atoms and one `eta`);
//! - `grid w h`: width `min(w,h)+2`, compiled from the sliding-window path
//!   decomposition of the grid.

use thiserror::Error;

use crate::expr::{Expr, ExprBuilder, Label, LabelSet};
use crate::geval::LabeledGraph;
use crate::treedec::{self, TreeDecomposition};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum GenError {
    #[error("{family} needs {what}, got {got}")]
    TooSmall { family: &'static str, what: &'static str, got: u64 },
}

fn parity_label(i: u64) -> Label {
    Label::new(if i % 2 == 1 { 1 } else { 2 })
}

/// P_n with vertices in path order.
pub fn path(n: u64) -> Result<Expr, GenError> {
    if n == 0 {
        return Err(GenError::TooSmall { family: "path", what: "n >= 1", got: n });
    }
    let mut b = ExprBuilder::new(2);
    if n == 1 {
        let v = b.create(1, LabelSet::empty()).unwrap();
        return Ok(b.finish(v).unwrap());
    }
    let mut acc = b.create(1, LabelSet::singleton(parity_label(1))).unwrap();
    for i in 2..=n {
        let prev = parity_label(i - 1);
        let cur = parity_label(i);
        let fresh = b.create(1, LabelSet::singleton(cur)).unwrap();
        let joined = b.join(vec![acc, fresh]).unwrap();
        let wired = b.eta(prev, cur, joined).unwrap();
        acc = b.eps(prev, wired).unwrap();
    }
    let acc = b.eps(parity_label(n), acc).unwrap();
    Ok(b.finish(acc).unwrap())
}

/// C_n with vertices in cycle order; label 3 anchors the closing edge.
pub fn cycle(n: u64) -> Result<Expr, GenError> {
    if n < 3 {
        return Err(GenError::TooSmall { family: "cycle", what: "n >= 3", got: n });
    }
    let mut b = ExprBuilder::new(3);
    let anchor = Label::new(3);
    let mut acc = b.create(1, LabelSet::from_indices([1, 3])).unwrap();
    for i in 2..=n {
        let prev = parity_label(i - 1);
        let cur = parity_label(i);
        let fresh = b.create(1, LabelSet::singleton(cur)).unwrap();
        let joined = b.join(vec![acc, fresh]).unwrap();
        let wired = b.eta(prev, cur, joined).unwrap();
        acc = b.eps(prev, wired).unwrap();
    }
    let last = parity_label(n);
    let closed = b.eta(anchor, last, acc).unwrap();
    let e1 = b.eps(anchor, closed).unwrap();
    let acc = b.eps(last, e1).unwrap();
    Ok(b.finish(acc).unwrap())
}

/// K_n: every finished vertex carries label 1, newcomers arrive as label 2.
pub fn clique(n: u64) -> Result<Expr, GenError> {
    if n == 0 {
        return Err(GenError::TooSmall { family: "clique", what: "n >= 1", got: n });
    }
    let mut b = ExprBuilder::new(2);
    if n == 1 {
        let v = b.create(1, LabelSet::empty()).unwrap();
        return Ok(b.finish(v).unwrap());
    }
    let one = Label::new(1);
    let two = Label::new(2);
    let mut acc = b.create(1, LabelSet::singleton(one)).unwrap();
    for _ in 2..=n {
        let fresh = b.create(1, LabelSet::singleton(two)).unwrap();
        let joined = b.join(vec![acc, fresh]).unwrap();
        let wired = b.eta(one, two, joined).unwrap();
        acc = b.rho(two, LabelSet::singleton(one), wired).unwrap();
    }
    let acc = b.eps(one, acc).unwrap();
    Ok(b.finish(acc).unwrap())
}

/// K_{a,b}: one atom per side, one `eta`.
pub fn complete_bipartite(a: u64, bn: u64) -> Result<Expr, GenError> {
    if a == 0 || bn == 0 {
        return Err(GenError::TooSmall {
            family: "complete-bipartite",
            what: "both sides >= 1",
            got: a.min(bn),
        });
    }
    let mut b = ExprBuilder::new(2);
    let left = b.create(a, LabelSet::singleton(Label::new(1))).unwrap();
    let right = b.create(bn, LabelSet::singleton(Label::new(2))).unwrap();
    let joined = b.join(vec![left, right]).unwrap();
    let wired = b.eta(Label::new(1), Label::new(2), joined).unwrap();
    let e1 = b.eps(Label::new(1), wired).unwrap();
    let acc = b.eps(Label::new(2), e1).unwrap();
    Ok(b.finish(acc).unwrap())
}

/// The w-by-h grid graph, vertices row-major with `min(w,h)` columns.
pub fn grid_graph(w: u32, h: u32) -> Result<LabeledGraph, GenError> {
    if w == 0 || h == 0 {
        return Err(GenError::TooSmall {
            family: "grid",
            what: "both dimensions >= 1",
            got: w.min(h) as u64,
        });
    }
    let (cols, rows) = if w <= h { (w, h) } else { (h, w) };
    let n = cols * rows;
    let mut g = LabeledGraph::new(n);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.add_edge(v, v + 1);
            }
            if r + 1 < rows {
                g.add_edge(v, v + cols);
            }
        }
    }
    Ok(g)
}

/// The natural path decomposition of the grid: bags are sliding windows of
/// `min(w,h)+1` consecutive row-major vertices, width `min(w,h)`.
pub fn grid_decomposition(w: u32, h: u32) -> Result<(LabeledGraph, TreeDecomposition), GenError> {
    let g = grid_graph(w, h)?;
    let cols = w.min(h);
    let n = g.n();
    let bags: Vec<std::collections::BTreeSet<u32>> = if n <= cols {
        vec![(0..n).collect()]
    } else {
        (0..n - cols).map(|t| (t..=t + cols).collect()).collect()
    };
    let edges: Vec<(usize, usize)> = (1..bags.len()).map(|i| (i - 1, i)).collect();
    let td = TreeDecomposition::new(bags, &edges, 0, &g)
        .expect("sliding windows form a valid path decomposition");
    Ok((g, td))
}

/// Grid expression of width `min(w,h)+2`, compiled from the sliding-window
/// decomposition. Atoms carry the row-major vertex ids as names.
pub fn grid(w: u32, h: u32) -> Result<Expr, GenError> {
    let (g, td) = grid_decomposition(w, h)?;
    let ss = treedec::semi_smooth(&td, &g).expect("valid decomposition normalizes");
    Ok(treedec::compile(&ss))
}
