//! Graph structure of a kernel: closed classes, absorbing sets and the
//! indecomposability certificate.
//!
//! Structural queries (edges, classes, reachability) read the stored matrix
//! exactly: `i -> j` is an edge iff `P[i][j] > 0`. Mass queries such as
//! [`is_absorbing`] allow a leak of at most [`tol::ABSORBING`].

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{StateSet, StochasticKernel};
use crate::tol;

/// Adjacency lists of the support digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportDigraph {
    successors: Vec<Vec<usize>>,
}

pub fn support_digraph(p: &StochasticKernel) -> SupportDigraph {
    let successors = (0..p.n()).map(|i| p.row_support(i).map(|(j, _)| j).collect()).collect();
    SupportDigraph { successors }
}

impl SupportDigraph {
    pub fn n(&self) -> usize {
        self.successors.len()
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.successors[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }

    /// States reachable from `x` by paths of length `>= 0`.
    pub fn reachable_from(&self, x: usize) -> StateSet {
        let mut seen = StateSet::empty(self.n());
        let mut queue = VecDeque::from([x]);
        seen.insert(x);
        while let Some(i) = queue.pop_front() {
            for &j in &self.successors[i] {
                if !seen.contains(j) {
                    seen.insert(j);
                    queue.push_back(j);
                }
            }
        }
        seen
    }
}

/// Strongly connected components of the support digraph, ordered by smallest member.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecomposition {
    classes: Vec<StateSet>,
    closed: Vec<bool>,
    transient: StateSet,
}

impl ClassDecomposition {
    pub fn classes(&self) -> &[StateSet] {
        &self.classes
    }

    pub fn closed_flags(&self) -> &[bool] {
        &self.closed
    }

    pub fn closed_classes(&self) -> impl Iterator<Item = &StateSet> + '_ {
        self.classes.iter().zip(&self.closed).filter(|(_, &c)| c).map(|(s, _)| s)
    }

    pub fn closed_count(&self) -> usize {
        self.closed.iter().filter(|&&c| c).count()
    }

    /// Union of the classes that are not closed.
    pub fn transient(&self) -> &StateSet {
        &self.transient
    }

    /// Union of the closed classes.
    pub fn recurrent(&self) -> StateSet {
        self.transient.complement()
    }
}

pub fn class_decomposition(p: &StochasticKernel) -> ClassDecomposition {
    let n = p.n();
    let digraph = support_digraph(p);
    let mut g = DiGraph::<(), ()>::with_capacity(n, digraph.edges().count());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (i, j) in digraph.edges() {
        g.add_edge(nodes[i], nodes[j], ());
    }
    let mut classes: Vec<StateSet> = tarjan_scc(&g)
        .into_iter()
        .map(|comp| {
            let mut class = StateSet::empty(n);
            for v in comp {
                class.insert(v.index());
            }
            class
        })
        .collect();
    classes.sort_by_key(|c| c.min());

    let closed: Vec<bool> = classes
        .iter()
        .map(|c| c.iter().all(|i| digraph.successors(i).iter().all(|&j| c.contains(j))))
        .collect();
    let mut transient = StateSet::empty(n);
    for (c, &is_closed) in classes.iter().zip(&closed) {
        if !is_closed {
            transient = transient.union(c);
        }
    }
    ClassDecomposition { classes, closed, transient }
}

/// Outcome of an absorption test; the empty set is absorbing only vacuously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Absorption {
    Empty,
    Absorbing,
    /// `state` sends `mass` outside the set.
    Leaking { state: usize, mass: f64 },
}

pub fn absorption(p: &StochasticKernel, set: &StateSet) -> Absorption {
    if set.is_empty() {
        return Absorption::Empty;
    }
    for i in set.iter() {
        let mass = p.row_mass_outside(i, set);
        if mass > tol::ABSORBING {
            return Absorption::Leaking { state: i, mass };
        }
    }
    Absorption::Absorbing
}

/// `P(x, A) = 1` for every `x` in `A`, up to a leak of `1e-12` per row.
/// True for the empty set.
pub fn is_absorbing(p: &StochasticKernel, set: &StateSet) -> bool {
    !matches!(absorption(p, set), Absorption::Leaking { .. })
}

/// The largest absorbing subset of `a`: the greatest fixed point of
/// `S -> {x in S : P(x, S) = 1}` started at `S = a`. Possibly empty.
pub fn largest_absorbing_subset(p: &StochasticKernel, a: &StateSet) -> StateSet {
    let mut current = a.clone();
    loop {
        let next = StateSet::from_predicate(p.n(), |i| {
            current.contains(i) && p.row_mass_outside(i, &current) <= tol::ABSORBING
        });
        if next == current {
            return current;
        }
        current = next;
    }
}

/// `(largest absorbing subset of A, largest absorbing subset of A^c)`.
pub fn absorbing_witness_pair(p: &StochasticKernel, a: &StateSet) -> (StateSet, StateSet) {
    (largest_absorbing_subset(p, a), largest_absorbing_subset(p, &a.complement()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decomposability {
    Indecomposable,
    Decomposable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndecomposabilityCertificate {
    pub verdict: Decomposability,
    /// Two disjoint nonempty absorbing sets, present iff decomposable.
    pub witness: Option<(StateSet, StateSet)>,
    pub closed_classes: Vec<StateSet>,
    pub transient: StateSet,
}

/// Decomposable iff there are at least two closed classes; the witness is the pair
/// of closed classes with the smallest minimal states.
pub fn indecomposability_certificate(p: &StochasticKernel) -> Result<IndecomposabilityCertificate> {
    let classes = class_decomposition(p);
    let closed: Vec<StateSet> = classes.closed_classes().cloned().collect();
    let cert = if closed.len() >= 2 {
        IndecomposabilityCertificate {
            verdict: Decomposability::Decomposable,
            witness: Some((closed[0].clone(), closed[1].clone())),
            closed_classes: closed,
            transient: classes.transient().clone(),
        }
    } else {
        IndecomposabilityCertificate {
            verdict: Decomposability::Indecomposable,
            witness: None,
            closed_classes: closed,
            transient: classes.transient().clone(),
        }
    };
    cert.verify(p)?;
    Ok(cert)
}

impl IndecomposabilityCertificate {
    /// Re-checks the certificate against `p`.
    pub fn verify(&self, p: &StochasticKernel) -> Result<()> {
        let fail = |msg: &str| Err(Error::CertificateViolation(msg.to_string()));
        let n = p.n();
        if self.transient.universe() != n || self.closed_classes.iter().any(|c| c.universe() != n) {
            return fail("state sets do not match the kernel size");
        }
        let mut covered = self.transient.clone();
        for c in &self.closed_classes {
            if c.is_empty() || !c.is_disjoint(&covered) {
                return fail("closed classes and transient states must be nonempty and disjoint");
            }
            if !is_absorbing(p, c) {
                return fail("a closed class is not absorbing");
            }
            covered = covered.union(c);
        }
        if covered != StateSet::full(n) {
            return fail("classes do not cover the state space");
        }
        if self.closed_classes.is_empty() {
            return fail("a finite kernel has at least one closed class");
        }
        match (&self.verdict, &self.witness) {
            (Decomposability::Decomposable, Some((a, b))) => {
                if a.is_empty() || b.is_empty() || !a.is_disjoint(b) {
                    return fail("witness sets must be nonempty and disjoint");
                }
                if !is_absorbing(p, a) || !is_absorbing(p, b) {
                    return fail("witness sets must be absorbing");
                }
                if self.closed_classes.len() < 2 {
                    return fail("decomposable verdict with a single closed class");
                }
            }
            (Decomposability::Indecomposable, None) => {
                if self.closed_classes.len() != 1 {
                    return fail("indecomposable verdict requires exactly one closed class");
                }
                // Every nonempty absorbing set must then contain the class.
                let class = &self.closed_classes[0];
                let g = support_digraph(p);
                let hub = class.min().expect("nonempty");
                if !class.is_subset(&g.reachable_from(hub)) {
                    return fail("closed class is not strongly connected");
                }
                if (0..n).any(|x| g.reachable_from(x).is_disjoint(class)) {
                    return fail("some state cannot reach the closed class");
                }
            }
            _ => return fail("verdict and witness disagree"),
        }
        Ok(())
    }
}
