//! Multi-clique-width expression toolkit.
//!
//! A multi-k-expression builds a labeled graph from atoms that create
//! vertices carrying *sets* of labels, edge insertion `eta i j`, relabeling
//! `rho i S`, label deletion `eps i`, and disjoint union `join`. This crate
//! provides:
//!
//! - [`expr`]: abstract syntax, a concrete text format, validation, width
//!   metrics, and conversion to classical (single-label) expressions;
//! - [`geval`]: materializing the labeled graph an expression generates;
//! - [`treedec`]: tree-decomposition parsing, semi-smooth normalization, and
//!   compilation into strict multi-(k+2)-expressions;
//! - [`indpoly`]: the labeled independent set polynomial DP, projection to
//!   I(x), and maximum-independent-set extraction with witness;
//! - [`coloring`]: c-colorability over color/label incidence tables;
//! - [`oracle`]: brute-force reference implementations and a test corpus;
//! - [`gen`]: expression generators for standard graph families.

pub mod coloring;
pub mod expr;
pub mod gen;
pub mod geval;
pub mod indpoly;
pub mod oracle;
pub mod treedec;

pub use coloring::ColorTable;
pub use expr::{Expr, ExprBuilder, Label, LabelSet, Node, NodeId};
pub use geval::{LabeledGraph, MaskSignature};
pub use indpoly::LabeledIsPoly;
pub use treedec::{SemiSmooth, TreeDecomposition};
