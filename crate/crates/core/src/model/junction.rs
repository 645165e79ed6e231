use std::collections::BTreeMap;

use super::graph::{is_chordal, maximal_cliques, DependencyGraph, Vertex};
use crate::error::{Error, Result};

/// A separator set together with `d(S)`, the number of maximal cliques it joins.
///
/// The junction-tree product divides by each separator marginal `d(S) - 1` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separator {
    pub members: Vec<Vertex>,
    pub degree: usize,
}

/// Clique/separator decomposition of a triangulated dependency graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionTree {
    cliques: Vec<Vec<Vertex>>,
    tree_edges: Vec<(usize, usize)>,
    separators: Vec<Separator>,
}

impl JunctionTree {
    /// Builds the tree as a maximum-weight spanning forest of the clique
    /// intersection graph. Ties break on clique index, so the result is
    /// deterministic for a given graph.
    pub fn build(g: &DependencyGraph) -> Result<Self> {
        let adj = g.adjacency();
        if !is_chordal(&adj) {
            return Err(Error::NotTriangulated);
        }
        let raw = maximal_cliques(&adj);
        let cliques: Vec<Vec<Vertex>> =
            raw.iter().map(|c| c.iter().map(|&x| g.vertex(x)).collect()).collect();

        let mut candidates = Vec::new();
        for a in 0..raw.len() {
            for b in a + 1..raw.len() {
                let w = raw[a].iter().filter(|x| raw[b].binary_search(x).is_ok()).count();
                if w > 0 {
                    candidates.push((w, a, b));
                }
            }
        }
        candidates.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| (x.1, x.2).cmp(&(y.1, y.2))));

        let mut parent: Vec<usize> = (0..raw.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut y = x;
            while parent[y] != r {
                let next = parent[y];
                parent[y] = r;
                y = next;
            }
            r
        }
        let mut tree_edges = Vec::new();
        let mut sep_counts: BTreeMap<Vec<Vertex>, usize> = BTreeMap::new();
        for (_, a, b) in candidates {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                continue;
            }
            parent[ra] = rb;
            tree_edges.push((a, b));
            let shared: Vec<Vertex> =
                cliques[a].iter().copied().filter(|v| cliques[b].contains(v)).collect();
            *sep_counts.entry(shared).or_insert(0) += 1;
        }
        let separators = sep_counts
            .into_iter()
            .map(|(members, edges)| Separator { members, degree: edges + 1 })
            .collect();
        Ok(Self { cliques, tree_edges, separators })
    }

    /// Rebuilds a tree from stored cliques and separators (no tree edges).
    pub fn from_parts(cliques: Vec<Vec<Vertex>>, separators: Vec<Separator>) -> Self {
        Self { cliques, tree_edges: Vec::new(), separators }
    }

    pub fn cliques(&self) -> &[Vec<Vertex>] {
        &self.cliques
    }

    pub fn separators(&self) -> &[Separator] {
        &self.separators
    }

    pub fn tree_edges(&self) -> &[(usize, usize)] {
        &self.tree_edges
    }

    /// Every vertex's cliques form a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        let mut vertices: Vec<Vertex> = self.cliques.iter().flatten().copied().collect();
        vertices.sort();
        vertices.dedup();
        vertices.into_iter().all(|v| {
            let holding: Vec<usize> =
                (0..self.cliques.len()).filter(|&c| self.cliques[c].contains(&v)).collect();
            let mut reached = vec![holding[0]];
            let mut frontier = vec![holding[0]];
            while let Some(c) = frontier.pop() {
                for &(a, b) in &self.tree_edges {
                    let other = if a == c {
                        b
                    } else if b == c {
                        a
                    } else {
                        continue;
                    };
                    if holding.contains(&other) && !reached.contains(&other) {
                        reached.push(other);
                        frontier.push(other);
                    }
                }
            }
            reached.len() == holding.len()
        })
    }
}

/// Convenience wrapper matching the pipeline naming.
pub fn build_junction_tree(g: &DependencyGraph) -> Result<JunctionTree> {
    JunctionTree::build(g)
}
