//! Maximal clique enumeration via Bron–Kerbosch with pivoting, with the
//! outer loop over a degeneracy ordering.

/// All maximal cliques with at least `n_min` nodes in the simple undirected
/// topology given by `edges` (0-based, self-loops and duplicates ignored by
/// construction of the callers).
///
/// Output is canonical regardless of internal branch order: each clique is
/// sorted ascending and the list is sorted lexicographically.
pub fn maximal_cliques(node_count: usize, edges: &[(usize, usize)], n_min: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let order = degeneracy_order(node_count, &adj);
    let mut rank = vec![0usize; node_count];
    for (pos, &v) in order.iter().enumerate() {
        rank[v] = pos;
    }

    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut r = Vec::new();
    for &v in &order {
        let p: Vec<usize> = adj[v].iter().copied().filter(|&u| rank[u] > rank[v]).collect();
        let x: Vec<usize> = adj[v].iter().copied().filter(|&u| rank[u] < rank[v]).collect();
        r.push(v);
        bron_kerbosch(&adj, &mut r, p, x, &mut cliques);
        r.pop();
    }

    let mut out: Vec<Vec<usize>> = cliques
        .into_iter()
        .filter(|c| c.len() >= n_min)
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

fn is_adjacent(adj: &[Vec<usize>], a: usize, b: usize) -> bool {
    adj[a].binary_search(&b).is_ok()
}

/// Recursive pivoted expansion. `p` and `x` are sorted candidate/exclusion
/// sets; `r` is the growing clique.
fn bron_kerbosch(
    adj: &[Vec<usize>],
    r: &mut Vec<usize>,
    p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    // Pivot on the vertex of P ∪ X covering the most of P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&w| is_adjacent(adj, u, w)).count())
        .unwrap();

    let candidates: Vec<usize> = p
        .iter()
        .copied()
        .filter(|&v| !is_adjacent(adj, pivot, v))
        .collect();

    let mut p = p;
    for v in candidates {
        let next_p: Vec<usize> = p
            .iter()
            .copied()
            .filter(|&u| u != v && is_adjacent(adj, v, u))
            .collect();
        let next_x: Vec<usize> = x
            .iter()
            .copied()
            .filter(|&u| is_adjacent(adj, v, u))
            .collect();
        r.push(v);
        bron_kerbosch(adj, r, next_p, next_x, out);
        r.pop();
        p.retain(|&u| u != v);
        match x.binary_search(&v) {
            Ok(_) => {}
            Err(pos) => x.insert(pos, v),
        }
    }
}

/// Order vertices by repeatedly removing a minimum-degree vertex. Lazy
/// bucket queue with stale entries skipped on pop; O(N + E) overall and
/// fully deterministic.
fn degeneracy_order(node_count: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_degree + 1];
    for v in (0..node_count).rev() {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; node_count];
    let mut order = Vec::with_capacity(node_count);
    let mut cursor = 0usize;
    while order.len() < node_count {
        let v = loop {
            match buckets[cursor].pop() {
                Some(v) if !removed[v] && degree[v] == cursor => break v,
                Some(_) => continue, // stale entry from an earlier degree
                None => cursor += 1,
            }
        };
        removed[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !removed[u] {
                degree[u] -= 1;
                buckets[degree[u]].push(u);
            }
        }
        // A neighbor may have dropped one bucket below the current one.
        cursor = cursor.saturating_sub(1);
    }
    order
}
