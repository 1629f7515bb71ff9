//! Control-flow graphs whose edges carry statements.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Atom, Formula, LinExpr, Rel, Var};
use crate::numeric::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("node index {0} out of range")]
    NodeIndex(usize),
    #[error("graph has no nodes")]
    Empty,
    #[error("nodes outside the cut set form a cycle through `{0}`")]
    CyclicInterior(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub stmt: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    nodes: Vec<String>,
    start: usize,
    edges: Vec<Edge>,
}

impl Cfg {
    pub fn new(nodes: Vec<String>, start: usize, edges: Vec<Edge>) -> Result<Cfg, CfgError> {
        if nodes.is_empty() {
            return Err(CfgError::Empty);
        }
        if start >= nodes.len() {
            return Err(CfgError::NodeIndex(start));
        }
        for e in &edges {
            for n in [e.src, e.dst] {
                if n >= nodes.len() {
                    return Err(CfgError::NodeIndex(n));
                }
            }
        }
        Ok(Cfg { nodes, start, edges })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, u: usize) -> &str {
        &self.nodes[u]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Indices of edges entering `v`, in declaration order.
    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].dst == v)
    }

    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].src == u)
    }

    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([self.start]);
        let mut stack = vec![self.start];
        while let Some(u) = stack.pop() {
            for e in self.out_edges(u) {
                if seen.insert(self.edges[e].dst) {
                    stack.push(self.edges[e].dst);
                }
            }
        }
        seen
    }

    /// The subgraph on nodes reachable from the start, plus the names of the
    /// nodes that were removed.
    pub fn drop_unreachable(&self) -> (Cfg, Vec<String>) {
        let keep = self.reachable();
        if keep.len() == self.nodes.len() {
            return (self.clone(), Vec::new());
        }
        let dropped = (0..self.nodes.len())
            .filter(|u| !keep.contains(u))
            .map(|u| self.nodes[u].clone())
            .collect();
        (self.restrict(&keep, self.edges.clone()), dropped)
    }

    fn restrict(&self, keep: &BTreeSet<usize>, edges: Vec<Edge>) -> Cfg {
        let index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        Cfg {
            nodes: keep.iter().map(|&u| self.nodes[u].clone()).collect(),
            start: index[&self.start],
            edges: edges
                .into_iter()
                .filter(|e| index.contains_key(&e.src) && index.contains_key(&e.dst))
                .map(|e| Edge {
                    src: index[&e.src],
                    dst: index[&e.dst],
                    stmt: e.stmt,
                })
                .collect(),
        }
    }

    /// Targets of back edges of a depth-first search from the start that
    /// visits successors in edge declaration order. Removing them leaves the
    /// reachable part of the graph acyclic.
    pub fn feedback_vertex_set(&self) -> BTreeSet<usize> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark = vec![Mark::New; self.nodes.len()];
        let mut out = BTreeSet::new();
        let succ: Vec<Vec<usize>> = (0..self.nodes.len())
            .map(|u| self.out_edges(u).map(|e| self.edges[e].dst).collect())
            .collect();
        let mut stack: Vec<(usize, usize)> = vec![(self.start, 0)];
        mark[self.start] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let (u, next) = *top;
            if next == succ[u].len() {
                mark[u] = Mark::Done;
                stack.pop();
                continue;
            }
            top.1 += 1;
            let v = succ[u][next];
            match mark[v] {
                Mark::New => {
                    mark[v] = Mark::Active;
                    stack.push((v, 0));
                }
                Mark::Active => {
                    out.insert(v);
                }
                Mark::Done => {}
            }
        }
        out
    }

    /// Merges all paths between nodes of `{start} ∪ cut` into single edges.
    ///
    /// Intermediate states become auxiliary variables named `x@node`; the
    /// auxiliary variables of an original edge `k` get the suffix `%ek`. A node
    /// reached along several paths is encoded once, as a top-level conjunct
    /// `b ≤ 0 ∨ paths(node)` referenced by `b ≥ 1`.
    pub fn compress(&self, cut: &BTreeSet<usize>) -> Result<Cfg, CfgError> {
        if let Some(&bad) = cut.iter().find(|&&u| u >= self.nodes.len()) {
            return Err(CfgError::NodeIndex(bad));
        }
        let mut keep = cut.clone();
        keep.insert(self.start);
        self.check_interior_acyclic(&keep)?;
        let mut edges = Vec::new();
        for &u in &keep {
            for &v in &keep {
                if let Some(stmt) = self.merged_paths(u, v, &keep) {
                    edges.push(Edge { src: u, dst: v, stmt });
                }
            }
        }
        Ok(self.restrict(&keep, edges))
    }

    fn check_interior_acyclic(&self, keep: &BTreeSet<usize>) -> Result<(), CfgError> {
        let interior: BTreeSet<usize> = (0..self.nodes.len()).filter(|u| !keep.contains(u)).collect();
        let mut indeg: BTreeMap<usize, usize> = interior.iter().map(|&u| (u, 0)).collect();
        for e in &self.edges {
            if interior.contains(&e.src) && interior.contains(&e.dst) {
                *indeg.get_mut(&e.dst).expect("interior") += 1;
            }
        }
        let mut ready: Vec<usize> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&u, _)| u).collect();
        let mut removed = 0;
        while let Some(u) = ready.pop() {
            removed += 1;
            for e in self.out_edges(u) {
                let w = self.edges[e].dst;
                if let Some(d) = indeg.get_mut(&w) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        if removed == interior.len() {
            return Ok(());
        }
        let stuck = indeg
            .iter()
            .find(|(_, &d)| d > 0)
            .map(|(&u, _)| u)
            .expect("cycle exists");
        Err(CfgError::CyclicInterior(self.nodes[stuck].clone()))
    }

    fn merged_paths(&self, u: usize, v: usize, keep: &BTreeSet<usize>) -> Option<Formula> {
        let interior = |w: usize| !keep.contains(&w);
        // Interior nodes reachable from u without passing through a kept node.
        let mut fwd = BTreeSet::new();
        let mut stack: Vec<usize> = self
            .out_edges(u)
            .map(|e| self.edges[e].dst)
            .filter(|&w| interior(w))
            .collect();
        while let Some(w) = stack.pop() {
            if fwd.insert(w) {
                stack.extend(self.out_edges(w).map(|e| self.edges[e].dst).filter(|&x| interior(x)));
            }
        }
        // Of those, the ones that reach v the same way.
        let mut relevant = BTreeSet::new();
        let mut stack: Vec<usize> = self
            .in_edges(v)
            .map(|e| self.edges[e].src)
            .filter(|w| fwd.contains(w))
            .collect();
        while let Some(w) = stack.pop() {
            if relevant.insert(w) {
                stack.extend(self.in_edges(w).map(|e| self.edges[e].src).filter(|x| fwd.contains(x)));
            }
        }
        let useful = |e: &Edge| e.dst == v || relevant.contains(&e.dst);
        let top: Vec<usize> = self.out_edges(u).filter(|&e| useful(&self.edges[e])).collect();
        if top.is_empty() {
            return None;
        }
        let mut indeg: BTreeMap<usize, usize> = BTreeMap::new();
        for e in top
            .iter()
            .copied()
            .chain(relevant.iter().flat_map(|&w| self.out_edges(w)))
        {
            let d = self.edges[e].dst;
            if relevant.contains(&d) {
                *indeg.entry(d).or_default() += 1;
            }
        }
        let enc = Encoder {
            cfg: self,
            u,
            v,
            relevant: &relevant,
            hoisted: indeg.iter().filter(|(_, &d)| d >= 2).map(|(&w, _)| w).collect(),
        };
        let mut parts = vec![enc.alternatives(&top)];
        for &w in &enc.hoisted {
            let flag = Atom::le(LinExpr::var(enc.flag(w)), Rat::zero());
            parts.push(Formula::or(flag.into(), enc.paths(w)));
        }
        Some(Formula::and(parts).relabel_selectors())
    }
}

struct Encoder<'a> {
    cfg: &'a Cfg,
    u: usize,
    v: usize,
    relevant: &'a BTreeSet<usize>,
    hoisted: BTreeSet<usize>,
}

impl Encoder<'_> {
    fn state(&self, node: usize, i: usize, post: bool) -> Var {
        if node == self.v && post {
            Var::Post(i)
        } else if node == self.u && !post {
            Var::Pre(i)
        } else {
            Var::aux(&format!("x{i}@{}", self.cfg.nodes[node]))
        }
    }

    fn flag(&self, w: usize) -> Var {
        Var::aux(&format!("b@{}", self.cfg.nodes[w]))
    }

    fn step(&self, e: usize) -> Formula {
        let edge = &self.cfg.edges[e];
        edge.stmt.map_vars(&|x| match x {
            Var::Pre(i) => self.state(edge.src, *i, false),
            Var::Post(i) => self.state(edge.dst, *i, true),
            Var::Aux(a) => Var::aux(&format!("{a}%e{e}")),
        })
    }

    fn alternatives(&self, edges: &[usize]) -> Formula {
        let mut options = edges.iter().map(|&e| {
            let d = self.cfg.edges[e].dst;
            let step = self.step(e);
            if d == self.v {
                step
            } else if self.hoisted.contains(&d) {
                let on = Atom::new(&LinExpr::constant(Rat::one()), Rel::Le, &LinExpr::var(self.flag(d)));
                Formula::and([step, on.into()])
            } else {
                Formula::and([step, self.paths(d)])
            }
        });
        let first = options.next().unwrap_or_else(|| Atom::falsum().into());
        options.fold(first, Formula::or)
    }

    fn paths(&self, w: usize) -> Formula {
        let out: Vec<usize> = self
            .cfg
            .out_edges(w)
            .filter(|&e| {
                let d = self.cfg.edges[e].dst;
                d == self.v || self.relevant.contains(&d)
            })
            .collect();
        self.alternatives(&out)
    }
}
