//! Feynman-tree expansion of `U_{t1}^{t2} f` for linear `f` and `N(u) = lambda u^k`.
//!
//! The order-`n` part of `(U_{t1}^{t2} f)(phi)` is a sum over increasing trees
//! on vertices `1..=n`. Vertex `1` hangs from the root (the single slot of
//! `f`), every later vertex hangs from an earlier one, and vertex `i` carries
//! an interaction time `tau_i` with `t1 < tau_1 < ... < tau_n < t2` (the order
//! is reversed, with a sign `(-1)^n`, when `t2 < t1`). A vertex with `c`
//! children has `k - c` leaves. Its multiplicity is the product, over the
//! attachments, of the free slots of the parent at that moment.
//!
//! With the lifts of [`InteractionLift`], an edge from vertex `a` at node `y`
//! to vertex `b` at node `z` carries `w_y(tau_a) . g_z(tau_b)`, the root edge
//! carries `f(g_y(tau_1))`, and every leaf of a vertex at node `y` carries
//! `w_y(tau) . phi`.

use crate::duhamel::{InteractionLift, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::multilinear::SymFunctional;
use crate::propagator::{DispersionKind, DispersionRelation, FreeSolution, Grid};
use crate::quadrature::ordered_simplex_rule;

/// Gauss-Legendre points per simplex direction.
pub const TREE_QUADRATURE_ORDER: usize = 8;

/// An increasing tree with `k`-ary interaction vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeynmanTree {
    /// `parents[i]` is the parent of vertex `i + 1`; `0` is the root.
    parents: Vec<usize>,
    arity: usize,
    multiplicity: u64,
}

impl FeynmanTree {
    /// The tree without interaction vertices: `f` evaluated directly.
    pub fn leaf(arity: usize) -> Self {
        Self {
            parents: Vec::new(),
            arity,
            multiplicity: 1,
        }
    }

    pub fn order(&self) -> usize {
        self.parents.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn multiplicity(&self) -> u64 {
        self.multiplicity
    }

    /// Parent of vertex `v` (1-based); `0` is the root.
    pub fn parent(&self, v: usize) -> usize {
        self.parents[v - 1]
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == v)
            .map(|(i, _)| i + 1)
    }

    pub fn leaves(&self, v: usize) -> usize {
        self.arity - self.children(v).count()
    }
}

/// All increasing trees with `order` vertices of arity `k` under a one-slot root.
pub fn enumerate_trees(order: usize, k: usize) -> Vec<FeynmanTree> {
    let mut out = Vec::new();
    let mut parents = Vec::with_capacity(order);
    grow(order, k, &mut parents, 1, &mut out);
    out
}

fn grow(order: usize, k: usize, parents: &mut Vec<usize>, mult: u64, out: &mut Vec<FeynmanTree>) {
    if parents.len() == order {
        out.push(FeynmanTree {
            parents: parents.clone(),
            arity: k,
            multiplicity: mult,
        });
        return;
    }
    let next = parents.len() + 1;
    for parent in 0..next {
        let capacity = if parent == 0 { 1 } else { k };
        let used = parents.iter().filter(|p| **p == parent).count();
        if used >= capacity {
            continue;
        }
        parents.push(parent);
        grow(order, k, parents, mult * (capacity - used) as u64, out);
        parents.pop();
    }
}

/// Trees up to a given order with everything needed to evaluate them.
#[derive(Clone, Debug)]
pub struct TreeExpansion {
    grid: Grid,
    disp: DispersionRelation,
    lambda: f64,
    arity: usize,
    weights: Vec<f64>,
    t1: f64,
    t2: f64,
    pub trees: Vec<FeynmanTree>,
}

/// Values of an expansion at one free solution.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeValues {
    pub per_tree: Vec<f64>,
    /// Sum of the trees of each order `0..=K`.
    pub per_order: Vec<f64>,
    pub total: f64,
}

/// Enumerates the trees of order `<= max_order` for the linear functional `f`.
pub fn tree_expand(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    f: &SymFunctional,
    t1: f64,
    t2: f64,
    max_order: usize,
) -> Result<TreeExpansion> {
    if disp.kind != DispersionKind::KleinGordon {
        return Err(Error::Unsupported("tree expansion is implemented for Klein-Gordon".into()));
    }
    let (arity, lambda) = match nonlin.as_monomial() {
        Some((k, l)) if k >= 1 => (k, l),
        _ if nonlin.is_zero() => (1, 0.0),
        _ => {
            return Err(Error::Unsupported(
                "tree expansion needs a single monomial nonlinearity of degree >= 1".into(),
            ))
        }
    };
    let d = 2 * grid.points();
    if f.dim() != d || f.codomain_dim() != 1 || f.terms().any(|t| t.degree() != 1) {
        return Err(Error::Domain("tree expansion needs a scalar linear functional on the chart".into()));
    }
    let weights = f.term(1).map_or(vec![0.0; d], |t| t.coeffs().to_vec());
    let mut trees = vec![FeynmanTree::leaf(arity)];
    for n in 1..=max_order {
        trees.extend(enumerate_trees(n, arity));
    }
    Ok(TreeExpansion {
        grid: grid.clone(),
        disp: *disp,
        lambda,
        arity,
        weights,
        t1,
        t2,
        trees,
    })
}

impl TreeExpansion {
    pub fn max_order(&self) -> usize {
        self.trees.iter().map(|t| t.order()).max().unwrap_or(0)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates every tree at `phi`, which plays the role of `Theta_{t2} u`.
    pub fn evaluate(&self, phi: &FreeSolution) -> Result<TreeValues> {
        let c = phi.chart().to_real_vec();
        if c.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: c.len(),
            });
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut per_tree = vec![0.0; self.trees.len()];
        let span = self.t2 - self.t1;
        for n in 0..=self.max_order() {
            let members: Vec<usize> = (0..self.trees.len()).filter(|&i| self.trees[i].order() == n).collect();
            if n == 0 {
                for &i in &members {
                    per_tree[i] = dot(&self.weights, &c);
                }
                continue;
            }
            if self.lambda == 0.0 || span == 0.0 {
                continue;
            }
            let scale = self.lambda.powi(n as i32) * span.powi(n as i32);
            for (u, w) in ordered_simplex_rule(n, TREE_QUADRATURE_ORDER) {
                let lifts: Vec<InteractionLift> = u
                    .iter()
                    .map(|ui| InteractionLift::new(&self.grid, &self.disp, self.t1 + span * ui))
                    .collect::<Result<_>>()?;
                for &i in &members {
                    per_tree[i] += scale * w * self.trees[i].multiplicity() as f64 * self.contract(&self.trees[i], &lifts, &c);
                }
            }
        }
        let mut per_order = vec![0.0; self.max_order() + 1];
        for (t, v) in self.trees.iter().zip(&per_tree) {
            per_order[t.order()] += v;
        }
        Ok(TreeValues {
            total: per_order.iter().sum(),
            per_tree,
            per_order,
        })
    }

    /// Sum over node assignments of one tree at fixed interaction times.
    fn contract(&self, tree: &FeynmanTree, lifts: &[InteractionLift], c: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let n = tree.order();
        let nodes = lifts[0].nodes();
        let mut messages: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
        for v in (1..=n).rev() {
            let lift = &lifts[v - 1];
            let leaves = tree.leaves(v) as i32;
            let mut msg: Vec<f64> = (0..nodes).map(|y| dot(&lift.w[y], c).powi(leaves)).collect();
            for child in tree.children(v) {
                let cl = &lifts[child - 1];
                for (y, m) in msg.iter_mut().enumerate() {
                    let s: f64 = (0..nodes).map(|z| dot(&lift.w[y], &cl.g[z]) * messages[child][z]).sum();
                    *m *= s;
                }
            }
            messages[v] = msg;
        }
        let first = &lifts[0];
        (0..nodes).map(|y| dot(&self.weights, &first.g[y]) * messages[1][y]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_tree_counts_and_weights() {
        let one = enumerate_trees(1, 3);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].multiplicity(), 1);
        let two = enumerate_trees(2, 3);
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].multiplicity(), 3);
        assert_eq!(two[0].parent(2), 1);
        let three = enumerate_trees(3, 3);
        let mut weights: Vec<u64> = three.iter().map(|t| t.multiplicity()).collect();
        weights.sort();
        assert_eq!(weights, vec![6, 9]);
    }

    #[test]
    fn weights_count_iterated_derivative_terms() {
        // the order-n weights add up to prod_{i<n} (1 + i (k - 1))
        for k in 2..5usize {
            for n in 0..5usize {
                let total: u64 = enumerate_trees(n, k).iter().map(|t| t.multiplicity()).sum();
                let expected: u64 = (0..n).map(|i| 1 + i as u64 * (k as u64 - 1)).product();
                assert_eq!(total, expected, "k = {k}, n = {n}");
            }
        }
    }

    #[test]
    fn leaves_complement_children() {
        let t = &enumerate_trees(3, 3)[0];
        let total_leaves: usize = (1..=3).map(|v| t.leaves(v)).sum();
        assert_eq!(total_leaves, 3 * 3 - 2);
    }
}
