//! Dependency structure over tasks and sources, and its triangulation.
//!
//! Vertices of the combined graph are numbered tasks first (`0..D`) and
//! sources after (`D..D+m`). Every source has an implicit edge to the task it
//! votes on; the explicit edge sets hold task–task and source–source edges.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A vertex of the dependency graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Task(usize),
    Source(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Task(d) => write!(f, "Y{}", d + 1),
            Vertex::Source(i) => write!(f, "L{}", i + 1),
        }
    }
}

pub(crate) fn describe(members: &[Vertex]) -> String {
    let names: Vec<String> = members.iter().map(ToString::to_string).collect();
    format!("{{{}}}", names.join(","))
}

/// Conditional-dependence structure between tasks and labeling sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    tasks: usize,
    assignment: Vec<usize>,
    task_edges: BTreeSet<(usize, usize)>,
    source_edges: BTreeSet<(usize, usize)>,
}

/// Incremental constructor for [`DependencyGraph`]; all checks happen in [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    tasks: usize,
    assignment: Vec<Option<usize>>,
    task_edges: Vec<(usize, usize)>,
    source_edges: Vec<(usize, usize)>,
}

impl GraphBuilder {
    pub fn assign(mut self, source: usize, task: usize) -> Self {
        if source >= self.assignment.len() {
            self.assignment.resize(source + 1, None);
        }
        self.assignment[source] = Some(task);
        self
    }

    pub fn assign_all(mut self, task: usize) -> Self {
        self.assignment.iter_mut().for_each(|a| *a = Some(task));
        self
    }

    pub fn task_edge(mut self, d: usize, e: usize) -> Self {
        self.task_edges.push((d, e));
        self
    }

    pub fn source_edge(mut self, i: usize, j: usize) -> Self {
        self.source_edges.push((i, j));
        self
    }

    pub fn build(self) -> Result<DependencyGraph> {
        let m = self.assignment.len();
        let mut assignment = Vec::with_capacity(m);
        for (i, a) in self.assignment.iter().enumerate() {
            let d = a.ok_or(Error::AssignmentMissing { source_index: i })?;
            if d >= self.tasks {
                return Err(Error::IndexOutOfRange { what: "task", index: d, limit: self.tasks });
            }
            assignment.push(d);
        }
        let mut task_edges = BTreeSet::new();
        for (d, e) in self.task_edges {
            for x in [d, e] {
                if x >= self.tasks {
                    return Err(Error::IndexOutOfRange { what: "task", index: x, limit: self.tasks });
                }
            }
            if d == e {
                return Err(Error::SelfEdge { vertex: Vertex::Task(d).to_string() });
            }
            task_edges.insert((d.min(e), d.max(e)));
        }
        let mut source_edges = BTreeSet::new();
        for (i, j) in self.source_edges {
            for x in [i, j] {
                if x >= m {
                    return Err(Error::IndexOutOfRange { what: "source", index: x, limit: m });
                }
            }
            if i == j {
                return Err(Error::SelfEdge { vertex: Vertex::Source(i).to_string() });
            }
            if assignment[i] != assignment[j] {
                return Err(Error::CrossTaskSourceEdge { first: i, second: j });
            }
            source_edges.insert((i.min(j), i.max(j)));
        }
        Ok(DependencyGraph { tasks: self.tasks, assignment, task_edges, source_edges })
    }
}

impl DependencyGraph {
    pub fn builder(tasks: usize, sources: usize) -> GraphBuilder {
        GraphBuilder {
            tasks,
            assignment: vec![None; sources],
            task_edges: Vec::new(),
            source_edges: Vec::new(),
        }
    }

    /// One task with `m` conditionally independent sources.
    pub fn star(m: usize) -> Self {
        Self::builder(1, m).assign_all(0).build().expect("star graph is well formed")
    }

    /// `tasks` tasks in a chain, each with its own `per_task` sources.
    pub fn chain(tasks: usize, per_task: usize) -> Self {
        let mut b = Self::builder(tasks, tasks * per_task);
        for i in 0..tasks * per_task {
            b = b.assign(i, i / per_task);
        }
        for d in 1..tasks {
            b = b.task_edge(d - 1, d);
        }
        b.build().expect("chain graph is well formed")
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.assignment.len()
    }

    /// Task that source `i` votes on.
    pub fn task_of(&self, source: usize) -> usize {
        self.assignment[source]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn task_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.task_edges
    }

    pub fn source_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.source_edges
    }

    pub fn sources_dependent(&self, i: usize, j: usize) -> bool {
        self.source_edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn sources_of_task(&self, task: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter(move |(_, &d)| d == task).map(|(i, _)| i)
    }

    pub(crate) fn n_vertices(&self) -> usize {
        self.tasks + self.assignment.len()
    }

    pub(crate) fn vertex(&self, idx: usize) -> Vertex {
        if idx < self.tasks {
            Vertex::Task(idx)
        } else {
            Vertex::Source(idx - self.tasks)
        }
    }

    pub(crate) fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.n_vertices()];
        let mut link = |a: usize, b: usize| {
            adj[a].insert(b);
            adj[b].insert(a);
        };
        for (i, &d) in self.assignment.iter().enumerate() {
            link(self.tasks + i, d);
        }
        for &(d, e) in &self.task_edges {
            link(d, e);
        }
        for &(i, j) in &self.source_edges {
            link(self.tasks + i, self.tasks + j);
        }
        adj
    }

    /// Every edge of the combined graph, including the implicit source–task edges.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        for (a, nbrs) in adj.iter().enumerate() {
            for &b in nbrs.range(a + 1..) {
                out.push((self.vertex(a), self.vertex(b)));
            }
        }
        out
    }

    pub fn is_triangulated(&self) -> bool {
        is_chordal(&self.adjacency())
    }
}

/// Maximum cardinality search; ties go to the lowest vertex index.
/// Returns the visit order (first visited first).
pub(crate) fn mcs_order(adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if !visited[v] && best.is_none_or(|b| weight[v] > weight[b]) {
                best = Some(v);
            }
        }
        let v = best.expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// For each vertex, its neighbours visited before it in `order`.
pub(crate) fn earlier_neighbours(adj: &[BTreeSet<usize>], order: &[usize]) -> Vec<Vec<usize>> {
    let mut pos = vec![0usize; adj.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    (0..adj.len())
        .map(|v| adj[v].iter().copied().filter(|&u| pos[u] < pos[v]).collect())
        .collect()
}

pub(crate) fn is_chordal(adj: &[BTreeSet<usize>]) -> bool {
    let order = mcs_order(adj);
    let earlier = earlier_neighbours(adj, &order);
    earlier.iter().all(|nbrs| {
        nbrs.iter().enumerate().all(|(k, &a)| nbrs[k + 1..].iter().all(|&b| adj[a].contains(&b)))
    })
}

/// Maximal cliques of a chordal graph, each sorted, listed in lexicographic order.
pub(crate) fn maximal_cliques(adj: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let order = mcs_order(adj);
    let earlier = earlier_neighbours(adj, &order);
    let mut candidates: Vec<Vec<usize>> = (0..adj.len())
        .map(|v| {
            let mut c = earlier[v].clone();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for c in candidates {
        let covered = kept.iter().any(|k| c.iter().all(|x| k.binary_search(x).is_ok()));
        if !covered {
            kept.push(c);
        }
    }
    kept.sort();
    kept
}

/// Fill edges from a minimum-degree elimination (ties to the lowest index).
fn min_degree_fill(adj: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let n = adj.len();
    let mut work: Vec<BTreeSet<usize>> = adj.to_vec();
    let mut alive = vec![true; n];
    let mut fill = Vec::new();
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (work[v].len(), v))
            .expect("live vertex remains");
        let nbrs: Vec<usize> = work[v].iter().copied().collect();
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                if work[a].insert(b) {
                    work[b].insert(a);
                    fill.push((a.min(b), a.max(b)));
                }
            }
        }
        for &u in &nbrs {
            work[u].remove(&v);
        }
        work[v].clear();
        alive[v] = false;
    }
    fill
}

/// Returns a triangulated copy of `g`, adding minimum-degree fill edges when the
/// graph is not already chordal, and checks that every maximal clique is one the
/// recovery stage supports (at most three vertices, and at most one task when a
/// source is present). The source-to-task assignment is never changed.
pub fn validate_graph(g: &DependencyGraph) -> Result<DependencyGraph> {
    let adj = g.adjacency();
    let mut out = g.clone();
    if !is_chordal(&adj) {
        for (a, b) in min_degree_fill(&adj) {
            match (g.vertex(a), g.vertex(b)) {
                (Vertex::Task(d), Vertex::Task(e)) => {
                    out.task_edges.insert((d.min(e), d.max(e)));
                }
                (Vertex::Source(i), Vertex::Source(j)) => {
                    if g.task_of(i) != g.task_of(j) {
                        return Err(Error::CrossTaskSourceEdge { first: i, second: j });
                    }
                    out.source_edges.insert((i.min(j), i.max(j)));
                }
                (x, y) => {
                    return Err(Error::UnsupportedClique { members: describe(&[x, y]) });
                }
            }
        }
    }
    for clique in maximal_cliques(&out.adjacency()) {
        let members: Vec<Vertex> = clique.iter().map(|&x| out.vertex(x)).collect();
        let n_tasks = members.iter().filter(|v| matches!(v, Vertex::Task(_))).count();
        let has_source = n_tasks < members.len();
        if members.len() > 3 || (has_source && n_tasks != 1) {
            return Err(Error::UnsupportedClique { members: describe(&members) });
        }
    }
    Ok(out)
}
