//! Strongly connected components (iterative Tarjan).

/// Partitions the nodes of `adj` into maximal strongly connected
/// components. Each component is sorted, and components are ordered by
/// their smallest node.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;
    // (node, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, pos)) = call.last() {
            if pos < adj[v].len() {
                let w = adj[v][pos];
                if let Some(top) = call.last_mut() {
                    top.1 += 1;
                }
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Component id of every node, numbering as in
/// [`strongly_connected_components`].
pub fn component_ids(comps: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut id = vec![usize::MAX; n];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            id[v] = i;
        }
    }
    id
}

/// Components with no edge leaving them.
pub fn bottom_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comps = strongly_connected_components(adj);
    let id = component_ids(&comps, adj.len());
    comps
        .into_iter()
        .enumerate()
        .filter(|(i, c)| c.iter().all(|&v| adj[v].iter().all(|&w| id[w] == *i)))
        .map(|(_, c)| c)
        .collect()
}

/// Nodes from which some node in `target` is reachable.
pub fn can_reach(adj: &[Vec<usize>], target: &[bool]) -> Vec<bool> {
    let n = adj.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, succ) in adj.iter().enumerate() {
        for &w in succ {
            pred[w].push(v);
        }
    }
    let mut seen = target.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&v| target[v]).collect();
    while let Some(w) = queue.pop() {
        for &v in &pred[w] {
            if !seen[v] {
                seen[v] = true;
                queue.push(v);
            }
        }
    }
    seen
}

/// Nodes reachable from `start`.
pub fn reachable_from(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut queue = vec![start];
    while let Some(v) = queue.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push(w);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cycle_is_one_component() {
        let adj = vec![vec![1], vec![2], vec![0]];
        assert_eq!(strongly_connected_components(&adj), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn dag_gives_singletons() {
        let adj = vec![vec![1, 2], vec![3], vec![3], vec![]];
        let comps = strongly_connected_components(&adj);
        assert_eq!(comps, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(bottom_components(&adj), vec![vec![3]]);
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n]).collect();
        assert_eq!(strongly_connected_components(&adj).len(), 1);
    }

    #[test]
    fn reachability_helpers() {
        let adj = vec![vec![1], vec![], vec![1]];
        assert_eq!(can_reach(&adj, &[false, true, false]), vec![true, true, true]);
        assert_eq!(reachable_from(&adj, 0), vec![true, true, false]);
    }
}
