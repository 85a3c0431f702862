//! Density-based clustering driven by an arbitrary neighbourhood query.
//!
//! Points are visited in index order. A point whose neighbourhood (itself
//! included) has at least `min_pts` members seeds a cluster, and the cluster
//! grows by merging the neighbourhoods of every core point reached. A border
//! point reachable from two clusters stays with the one discovered first.

/// Result of one clustering run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanOutcome {
    /// Cluster index per point, `None` for noise. Clusters are numbered in
    /// discovery order.
    pub labels: Vec<Option<usize>>,
    pub cluster_count: usize,
    /// How many times the neighbourhood query ran (at most once per point).
    pub neighbor_queries: usize,
}

impl DbscanOutcome {
    /// Members of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.is_none().then_some(i))
            .collect()
    }
}

/// Runs DBSCAN over `n` points. `neighbors(i)` must return every index
/// within reach of `i`, including `i` itself; the relation is expected to be
/// symmetric.
pub fn dbscan<F>(n: usize, min_pts: usize, mut neighbors: F) -> DbscanOutcome
where
    F: FnMut(usize) -> Vec<usize>,
{
    let mut visited = vec![false; n];
    let mut labels: Vec<Option<usize>> = vec![None; n];
    // queued[j] == cluster + 1 once j has been merged into that cluster's seed list
    let mut queued = vec![0usize; n];
    let mut cluster_count = 0;
    let mut neighbor_queries = 0;

    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let seeds = neighbors(start);
        neighbor_queries += 1;
        if seeds.len() < min_pts {
            continue;
        }
        let cluster = cluster_count;
        cluster_count += 1;
        let stamp = cluster + 1;
        labels[start] = Some(cluster);
        queued[start] = stamp;

        let mut frontier: Vec<usize> = Vec::with_capacity(seeds.len());
        for s in seeds {
            if queued[s] != stamp {
                queued[s] = stamp;
                frontier.push(s);
            }
        }
        let mut cursor = 0;
        while cursor < frontier.len() {
            let point = frontier[cursor];
            cursor += 1;
            if labels[point].is_none() {
                labels[point] = Some(cluster);
            }
            if visited[point] {
                continue;
            }
            visited[point] = true;
            let reach = neighbors(point);
            neighbor_queries += 1;
            if reach.len() >= min_pts {
                for q in reach {
                    if queued[q] != stamp {
                        queued[q] = stamp;
                        frontier.push(q);
                    }
                }
            }
        }
    }

    DbscanOutcome { labels, cluster_count, neighbor_queries }
}
