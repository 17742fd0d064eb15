use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minterm::{attribute_bit, AttributeVector, MAX_ATTRIBUTES};

/// Gains closer than this are treated as equal; the lower attribute index wins.
const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Leaf(bool),
    /// Branches on attribute `attribute` (0-based): `negated` is the `1 - x` edge, `positive` the `x` edge.
    Split {
        attribute: usize,
        negated: Box<Node>,
        positive: Box<Node>,
    },
}

/// A decision tree over attribute literals whose 1-leaves select a set of minterms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicTree {
    n_atts: usize,
    root: Node,
}

/// An attribute occurrence on a path, negated or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub attribute: usize,
    pub negated: bool,
}

impl Literal {
    pub fn eval(&self, x: &AttributeVector) -> f64 {
        let v = x.get(self.attribute);
        if self.negated {
            1.0 - v
        } else {
            v
        }
    }
}

/// Conjunction of the literals from the root to one 1-leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeafPath {
    pub literals: Vec<Literal>,
}

impl LeafPath {
    pub fn depth(&self) -> usize {
        self.literals.len()
    }

    /// Number of minterms the conjunction covers: `2^(n - depth)`.
    pub fn covered_minterms(&self, n_atts: usize) -> usize {
        1 << (n_atts - self.depth())
    }

    /// The covered minterm ids, ascending.
    pub fn minterms(&self, n_atts: usize) -> Vec<usize> {
        (0..1usize << n_atts)
            .filter(|&k| {
                self.literals
                    .iter()
                    .all(|l| attribute_bit(k, l.attribute, n_atts) != l.negated)
            })
            .collect()
    }

    /// `[l]^i`: the product of the literal values.
    pub fn eval(&self, x: &AttributeVector) -> f64 {
        self.literals.iter().map(|l| l.eval(x)).product()
    }

    /// Literals sorted by attribute, for set comparisons.
    pub fn literal_set(&self) -> Vec<Literal> {
        let mut set = self.literals.clone();
        set.sort();
        set
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.literals.is_empty() {
            return "⊤".to_string();
        }
        self.literals
            .iter()
            .map(|l| {
                let name = names
                    .get(l.attribute)
                    .cloned()
                    .unwrap_or_else(|| format!("a{}", l.attribute + 1));
                if l.negated {
                    format!("¬{name}")
                } else {
                    name
                }
            })
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }
}

impl LogicTree {
    pub fn n_atts(&self) -> usize {
        self.n_atts
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Probabilistic evaluation: negation is `1 - x`, a conjunction is a product and the two
    /// exclusive branches of a node add up.
    pub fn eval(&self, x: &AttributeVector) -> f64 {
        fn go(node: &Node, x: &AttributeVector) -> f64 {
            match node {
                Node::Leaf(v) => *v as u8 as f64,
                Node::Split {
                    attribute,
                    negated,
                    positive,
                } => {
                    let v = x.get(*attribute);
                    (1.0 - v) * go(negated, x) + v * go(positive, x)
                }
            }
        }
        go(&self.root, x)
    }

    /// All root-to-1-leaf paths, negated branches first.
    pub fn leaf_paths(&self) -> Vec<LeafPath> {
        fn go(node: &Node, prefix: &mut Vec<Literal>, out: &mut Vec<LeafPath>) {
            match node {
                Node::Leaf(true) => out.push(LeafPath {
                    literals: prefix.clone(),
                }),
                Node::Leaf(false) => {}
                Node::Split {
                    attribute,
                    negated,
                    positive,
                } => {
                    prefix.push(Literal {
                        attribute: *attribute,
                        negated: true,
                    });
                    go(negated, prefix, out);
                    prefix.pop();
                    prefix.push(Literal {
                        attribute: *attribute,
                        negated: false,
                    });
                    go(positive, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Minterms selected by the 1-leaves, ascending.
    pub fn minterms(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.leaf_paths().iter().flat_map(|p| p.minterms(self.n_atts)).collect();
        all.sort_unstable();
        all
    }

    /// Graphviz rendering of the 1-paths: solid edges for non-negated literals, dashed for negated.
    pub fn to_dot(&self, names: &[String], title: &str) -> String {
        fn has_one(node: &Node) -> bool {
            match node {
                Node::Leaf(v) => *v,
                Node::Split { negated, positive, .. } => has_one(negated) || has_one(positive),
            }
        }
        fn go(node: &Node, names: &[String], out: &mut String, next: &mut usize) -> usize {
            let id = *next;
            *next += 1;
            match node {
                Node::Leaf(v) => {
                    let _ = writeln!(out, "  n{id} [label=\"{}\", shape=box];", *v as u8);
                }
                Node::Split {
                    attribute,
                    negated,
                    positive,
                } => {
                    let name = names
                        .get(*attribute)
                        .cloned()
                        .unwrap_or_else(|| format!("a{}", attribute + 1));
                    let _ = writeln!(out, "  n{id} [label=\"{}\"];", escape(&name));
                    for (child, style) in [(negated, "dashed"), (positive, "solid")] {
                        if has_one(child) {
                            let child_id = go(child, names, out, next);
                            let _ = writeln!(out, "  n{id} -> n{child_id} [style={style}];");
                        }
                    }
                }
            }
            id
        }
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(title));
        let _ = writeln!(out, "  node [shape=ellipse];");
        if has_one(&self.root) {
            go(&self.root, names, &mut out, &mut 0);
        } else {
            let _ = writeln!(out, "  n0 [label=\"0\", shape=box];");
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Exact ID3 tree over the full truth table: rows are the bit codes of all `2^n` minterms,
/// labelled 1 iff the minterm is in `minterms`. Splits maximize information gain, ties go
/// to the lowest attribute index, and growth stops only at pure nodes.
pub fn build_tree(minterms: &[usize], n_atts: usize) -> Result<LogicTree> {
    if n_atts == 0 || n_atts > MAX_ATTRIBUTES {
        return Err(Error::range(
            "attribute count",
            n_atts,
            format!("[1, {MAX_ATTRIBUTES}]"),
        ));
    }
    let size = 1usize << n_atts;
    let mut labels = vec![false; size];
    for &k in minterms {
        if k >= size {
            return Err(Error::range("minterm index", k, format!("[0, {})", size)));
        }
        labels[k] = true;
    }
    let rows: Vec<usize> = (0..size).collect();
    Ok(LogicTree {
        n_atts,
        root: grow(&rows, &labels, 0, n_atts),
    })
}

fn grow(rows: &[usize], labels: &[bool], used: u32, n_atts: usize) -> Node {
    let ones = rows.iter().filter(|&&k| labels[k]).count();
    if ones == 0 || ones == rows.len() {
        return Node::Leaf(ones > 0);
    }
    let parent = entropy(ones, rows.len());
    let mut best: Option<(f64, usize)> = None;
    for j in (0..n_atts).filter(|j| used >> j & 1 == 0) {
        let (mut n1, mut o1, mut n0, mut o0) = (0, 0, 0, 0);
        for &k in rows {
            if attribute_bit(k, j, n_atts) {
                n1 += 1;
                o1 += labels[k] as usize;
            } else {
                n0 += 1;
                o0 += labels[k] as usize;
            }
        }
        let total = rows.len() as f64;
        let gain = parent - (n0 as f64 / total) * entropy(o0, n0) - (n1 as f64 / total) * entropy(o1, n1);
        if best.is_none_or(|(g, _)| gain > g + GAIN_TIE) {
            best = Some((gain, j));
        }
    }
    // an impure sub-cube always has an unused attribute left
    let (_, j) = best.expect("impure node with every attribute used");
    let (pos, neg): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&k| attribute_bit(k, j, n_atts));
    Node::Split {
        attribute: j,
        negated: Box::new(grow(&neg, labels, used | 1 << j, n_atts)),
        positive: Box::new(grow(&pos, labels, used | 1 << j, n_atts)),
    }
}

fn entropy(ones: usize, total: usize) -> f64 {
    if total == 0 || ones == 0 || ones == total {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}
