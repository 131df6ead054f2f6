//! Canonical text rendering. `parse(document(e)) == e` for every valid `e`.

use super::{Expr, Node, NodeId};

/// The body s-expression on a single line, canonical spacing.
pub fn body(expr: &Expr) -> String {
    let mut out = String::new();
    enum Step {
        Node(NodeId),
        Text(&'static str),
    }
    let mut stack = vec![Step::Node(expr.root())];
    while let Some(step) = stack.pop() {
        let id = match step {
            Step::Text(t) => {
                out.push_str(t);
                continue;
            }
            Step::Node(id) => id,
        };
        match expr.node(id) {
            Node::Create { count, labels, .. } => {
                out.push_str(&format!("(v {count}"));
                for l in labels.iter() {
                    out.push_str(&format!(" {l}"));
                }
                out.push(')');
            }
            Node::Eta { i, j, child } => {
                out.push_str(&format!("(eta {i} {j} "));
                stack.push(Step::Text(")"));
                stack.push(Step::Node(*child));
            }
            Node::Rho { i, to, child } => {
                out.push_str(&format!("(rho {i} ("));
                let members: Vec<String> = to.iter().map(|l| l.to_string()).collect();
                out.push_str(&members.join(" "));
                out.push_str(") ");
                stack.push(Step::Text(")"));
                stack.push(Step::Node(*child));
            }
            Node::Eps { i, child } => {
                out.push_str(&format!("(eps {i} "));
                stack.push(Step::Text(")"));
                stack.push(Step::Node(*child));
            }
            Node::Join { children } => {
                out.push_str("(join ");
                stack.push(Step::Text(")"));
                for (pos, &c) in children.iter().enumerate().rev() {
                    stack.push(Step::Node(c));
                    if pos != 0 {
                        stack.push(Step::Text(" "));
                    }
                }
            }
        }
    }
    out
}

/// The full document: header, `;name` directives for named vertices, body.
pub fn document(expr: &Expr) -> String {
    let mut out = format!("#mcw k={}\n", expr.width());
    let offsets = expr.vertex_offsets();
    let mut directives: Vec<(u64, &str)> = Vec::new();
    for (i, node) in (0..expr.node_count()).map(|i| (i, expr.node(NodeId(i as u32)))) {
        if let Node::Create { names, .. } = node {
            let start = offsets[i];
            for (pos, name) in names.iter().enumerate() {
                if let Some(name) = name {
                    directives.push((start + pos as u64, name));
                }
            }
        }
    }
    directives.sort_unstable();
    for (index, name) in directives {
        out.push_str(&format!(";name {index} {name}\n"));
    }
    out.push_str(&body(expr));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::super::{ExprBuilder, Label, LabelSet};
    use super::*;

    #[test]
    fn canonical_forms() {
        let mut b = ExprBuilder::new(2);
        let a = b.create(3, LabelSet::from_indices([1, 2])).unwrap();
        let e = b.finish(a).unwrap();
        assert_eq!(body(&e), "(v 3 1 2)");

        let mut b = ExprBuilder::new(2);
        let a = b.create(1, LabelSet::from_indices([2])).unwrap();
        let e = b.eps(Label::new(2), a).unwrap();
        let e = b.finish(e).unwrap();
        assert_eq!(body(&e), "(eps 2 (v 1 2))");

        let mut b = ExprBuilder::new(3);
        let x = b.create(1, LabelSet::from_indices([1])).unwrap();
        let y = b.create(1, LabelSet::from_indices([2])).unwrap();
        let z = b.create(1, LabelSet::from_indices([3])).unwrap();
        let j = b.join(vec![x, y, z]).unwrap();
        let e = b.finish(j).unwrap();
        assert_eq!(body(&e), "(join (v 1 1) (v 1 2) (v 1 3))");

        let mut b = ExprBuilder::new(3);
        let x = b.create(2, LabelSet::from_indices([1])).unwrap();
        let r = b.rho(Label::new(1), LabelSet::from_indices([2, 3]), x).unwrap();
        let e = b.finish(r).unwrap();
        assert_eq!(body(&e), "(rho 1 (2 3) (v 2 1))");

        let mut b = ExprBuilder::new(3);
        let x = b.create(1, LabelSet::from_indices([1])).unwrap();
        let r = b.rho(Label::new(1), LabelSet::empty(), x).unwrap();
        let e = b.finish(r).unwrap();
        assert_eq!(body(&e), "(rho 1 () (v 1 1))");
    }

    #[test]
    fn round_trip() {
        let samples = [
            "#mcw k=1\n(v 1 1)",
            "#mcw k=4\n(eta 1 2 (join (v 1 1) (v 2 2) (eps 3 (v 1 3 4))))",
            "#mcw k=3\n(rho 2 (1 3) (join (v 5 2) (v 1 1)))",
            "#mcw k=2\n;name 0 a\n;name 1 b\n(eta 1 2 (join (v 1 1) (v 1 2)))",
        ];
        for s in samples {
            let e = parse(s).unwrap();
            let printed = document(&e);
            let reparsed = parse(&printed).unwrap();
            assert_eq!(reparsed, e, "round trip failed for {s}");
            // printing is a fixpoint
            assert_eq!(document(&reparsed), printed);
        }
    }
}
