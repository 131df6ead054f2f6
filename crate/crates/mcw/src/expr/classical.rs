//! Expansion of a multi-k-expression into a classical expression over at
//! most 2^k labels: one classical label per label *set*.
//!
//! The classical label encoding a set `S` is `1 + bits(S)`, so codes are
//! stable and debuggable; unused codes are not compacted. Multi-label
//! operations translate per occupied label set (taken from the mask
//! signature trace), which keeps the output linear in the input for fixed k.

use thiserror::Error;

use crate::geval::{self, EvalError};

use super::{Expr, ExprBuilder, Label, LabelSet, Node, NodeId};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ExpandError {
    #[error("expansion needs {required} labels, over the cap of {cap}")]
    TooManyLabels { required: u64, cap: u64 },
    #[error("expression does not generate a graph: {0}")]
    Eval(#[from] EvalError),
}

pub const DEFAULT_LABEL_CAP: u64 = 1 << 20;

fn encode(set: &LabelSet) -> Label {
    let bits = set.bits().expect("expansion widths are capped well below 64");
    Label::new(bits as u32 + 1)
}

/// Joins stay pending until consumed by a non-join parent, which keeps the
/// rebuilt arena free of nested or orphaned join nodes.
enum Mapped {
    Id(NodeId),
    PendingJoin(Vec<NodeId>),
}

fn settle(builder: &mut ExprBuilder, mapped: Mapped) -> NodeId {
    match mapped {
        Mapped::Id(id) => id,
        Mapped::PendingJoin(children) => {
            builder.join(children).expect("pending joins have >= 2 distinct children")
        }
    }
}

/// Rewrites `expr` into a classical expression (singleton atoms and `rho`
/// targets, no `eps`) over at most `2^k` labels generating the same graph
/// under the creation-order vertex correspondence.
pub fn expand_to_classical(expr: &Expr, label_cap: u64) -> Result<Expr, ExpandError> {
    let k = expr.width();
    // Codes must fit a u32 label index; 2^31 labels is far past any cap in use.
    if k > 31 || (1u64 << k) > label_cap {
        let required = if k <= 63 { 1u64 << k } else { u64::MAX };
        return Err(ExpandError::TooManyLabels { required, cap: label_cap });
    }
    let sigs = geval::signature_trace(expr)?;
    let new_width = 1u32 << k;
    let mut builder = ExprBuilder::new(new_width);
    let mut mapped: Vec<Option<Mapped>> = (0..expr.node_count()).map(|_| None).collect();

    for id in expr.post_order() {
        let built = match expr.node(id) {
            Node::Create { count, labels, names } => Mapped::Id(
                builder
                    .create_named(*count, LabelSet::singleton(encode(labels)), names.clone())
                    .expect("valid source atoms stay valid"),
            ),
            Node::Eta { i, j, child } => {
                let child_sig = &sigs[child.index()];
                let mut cur = mapped[child.index()].take().expect("children built first");
                // Every occupied (A ni i, B ni j) class pair gets one eta.
                // A != B always: a class containing both i and j would have
                // tripped the precondition check in the signature trace.
                for a in child_sig.iter().filter(|m| m.contains(*i)) {
                    for b in child_sig.iter().filter(|m| m.contains(*j)) {
                        let node = settle(&mut builder, cur);
                        cur = Mapped::Id(
                            builder
                                .eta(encode(a), encode(b), node)
                                .expect("distinct encodings for distinct sets"),
                        );
                    }
                }
                cur
            }
            Node::Rho { i, to, child } => {
                relabel_classes(&mut builder, &sigs[child.index()], *i, to, &mut mapped, *child)
            }
            Node::Eps { i, child } => {
                let empty = LabelSet::empty();
                relabel_classes(&mut builder, &sigs[child.index()], *i, &empty, &mut mapped, *child)
            }
            Node::Join { children } => {
                let mut flat = Vec::new();
                for c in children {
                    match mapped[c.index()].take().expect("children built first") {
                        Mapped::Id(id) => flat.push(id),
                        Mapped::PendingJoin(inner) => flat.extend(inner),
                    }
                }
                Mapped::PendingJoin(flat)
            }
        };
        mapped[id.index()] = Some(built);
    }

    let root = mapped[expr.root().index()].take().expect("root built");
    let root = settle(&mut builder, root);
    Ok(builder.finish(root).expect("rebuild consumes every node"))
}

/// `rho i -> S` (and `eps i` with empty `S`) becomes one classical
/// relabeling per occupied class containing `i`. Sources all contain `i`
/// and targets never do, so the relabelings cannot capture each other and
/// any application order is correct.
fn relabel_classes(
    builder: &mut ExprBuilder,
    child_sig: &crate::geval::MaskSignature,
    i: Label,
    to: &LabelSet,
    mapped: &mut [Option<Mapped>],
    child: NodeId,
) -> Mapped {
    let mut cur = mapped[child.index()].take().expect("children built first");
    for class in child_sig.iter().filter(|m| m.contains(i)) {
        let target = encode(&class.relabel(i, to));
        let node = settle(builder, cur);
        cur = Mapped::Id(
            builder
                .rho(encode(class), LabelSet::singleton(target), node)
                .expect("singleton rho targets are classical"),
        );
    }
    cur
}
