//! Strongly connected components by an iterative Tarjan search.

use crate::sparse::SparseMatrix;

/// Directed graph in compressed adjacency form.
#[derive(Clone, Debug, Default)]
pub struct Digraph {
    start: Vec<usize>,
    adj: Vec<u32>,
}

impl Digraph {
    pub fn from_adjacency<I, J>(lists: I) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = usize>,
    {
        let mut start = vec![0];
        let mut adj = Vec::new();
        for l in lists {
            adj.extend(l.into_iter().map(|j| j as u32));
            start.push(adj.len());
        }
        Digraph { start, adj }
    }

    /// The support graph of `p`: an arc `i -> j` for every stored entry.
    pub fn support(p: &SparseMatrix) -> Self {
        Self::from_adjacency((0..p.n()).map(|i| p.row(i).cols()))
    }

    pub fn n(&self) -> usize {
        self.start.len() - 1
    }

    #[inline]
    pub fn succ(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[self.start[v]..self.start[v + 1]].iter().map(|&w| w as usize)
    }
}

const UNVISITED: usize = usize::MAX;

/// Components in reverse topological order: a component only reaches
/// components listed before it. States inside a component are sorted.
pub fn strongly_connected_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, g.start[root]));
        while let Some(&(v, pos)) = frames.last() {
            if pos < g.start[v + 1] {
                let w = g.adj[pos] as usize;
                frames.last_mut().expect("frame").1 += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, g.start[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
            if let Some(&(u, _)) = frames.last() {
                low[u] = low[u].min(low[v]);
            }
        }
    }
    out
}
