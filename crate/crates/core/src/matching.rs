//! Bipartite matching routines on buyer/good graphs.

use std::collections::VecDeque;

/// Tries to match `buyer` along an augmenting path (Kuhn). `owner[j]` is the buyer holding `j`.
fn augment(adj: &[Vec<usize>], buyer: usize, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &adj[buyer] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match owner[j] {
            None => true,
            Some(k) => augment(adj, k, owner, seen),
        };
        if free {
            owner[j] = Some(buyer);
            return true;
        }
    }
    false
}

/// Maximum matching restricted to `buyers`, tried in the given order.
/// Returns the owner of every good.
pub fn max_matching(adj: &[Vec<usize>], num_goods: usize, buyers: &[usize]) -> Vec<Option<usize>> {
    let mut owner = vec![None; num_goods];
    for &i in buyers {
        let mut seen = vec![false; num_goods];
        augment(adj, i, &mut owner, &mut seen);
    }
    owner
}

/// Which required vertex a covering search could not reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Uncovered {
    Buyer(usize),
    Good(usize),
}

/// A matching of `adj` that covers every required buyer and every required good.
///
/// Required buyers are matched first by augmenting paths. Each uncovered required good then
/// runs a breadth-first alternating search that ends at an unmatched buyer, or at a buyer
/// holding a non-required good which is released. Both moves keep earlier vertices covered.
pub fn covering_matching(
    adj: &[Vec<usize>],
    required_buyers: &[bool],
    required_goods: &[bool],
) -> std::result::Result<Vec<Option<usize>>, Uncovered> {
    let n = adj.len();
    let m = required_goods.len();
    let first: Vec<usize> = (0..n).filter(|&i| required_buyers[i]).collect();
    let mut owner = max_matching(adj, m, &first);
    let mut matched = vec![false; n];
    for i in owner.iter().flatten() {
        matched[*i] = true;
    }
    if let Some(&i) = first.iter().find(|&&i| !matched[i]) {
        return Err(Uncovered::Buyer(i));
    }
    let mut buyers_of_good: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, row) in adj.iter().enumerate() {
        for &j in row {
            buyers_of_good[j].push(i);
        }
    }
    for g in 0..m {
        if required_goods[g] && owner[g].is_none() && !cover_good(g, n, &buyers_of_good, required_goods, &mut owner) {
            return Err(Uncovered::Good(g));
        }
    }
    Ok(owner)
}

fn cover_good(
    start: usize,
    n: usize,
    buyers_of_good: &[Vec<usize>],
    required_goods: &[bool],
    owner: &mut [Option<usize>],
) -> bool {
    let mut good_of = vec![None; n];
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = *o {
            good_of[i] = Some(j);
        }
    }
    // parent[i] = good from which buyer i was reached.
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; owner.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(j) = queue.pop_front() {
        for &i in &buyers_of_good[j] {
            if parent[i].is_some() {
                continue;
            }
            parent[i] = Some(j);
            match good_of[i] {
                Some(next) if required_goods[next] => {
                    if !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
                end => {
                    if let Some(released) = end {
                        owner[released] = None;
                    }
                    // Walk back, handing each buyer the good it was reached from.
                    let mut buyer = i;
                    loop {
                        let g = parent[buyer].expect("reached buyer has a parent");
                        let previous = owner[g];
                        owner[g] = Some(buyer);
                        if g == start {
                            return true;
                        }
                        buyer = previous.expect("intermediate good is matched");
                    }
                }
            }
        }
    }
    false
}

/// Converts an owner table (per good) into a per-buyer assignment.
pub fn assignment_from_owners(owner: &[Option<usize>], num_buyers: usize) -> Vec<Option<usize>> {
    let mut out = vec![None; num_buyers];
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = *o {
            out[i] = Some(j);
        }
    }
    out
}

/// Maximum-weight assignment of a dense `n x m` weight matrix (Hungarian method, O(k^3)).
/// Negative and zero weights are never used: such pairs are left unassigned.
/// Returns the per-row assignment and the total weight.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return (vec![None; n], 0.0);
    }
    let k = n.max(m);
    let top = weights.iter().flatten().fold(0.0_f64, |a, &w| a.max(w));
    // Minimise top - w over a square matrix padded with zero-weight cells.
    let cost = |i: usize, j: usize| -> f64 {
        let w = if i < n && j < m { weights[i][j].max(0.0) } else { 0.0 };
        top - w
    };

    // 1-indexed potentials, standard e-maxx formulation.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![None; n];
    let mut total = 0.0;
    for j in 1..=k {
        let i = p[j];
        if i == 0 || i > n || j > m {
            continue;
        }
        let w = weights[i - 1][j - 1];
        if w > 0.0 {
            assignment[i - 1] = Some(j - 1);
            total += w;
        }
    }
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(weights: &[Vec<f64>]) -> f64 {
        fn go(weights: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == weights.len() {
                return 0.0;
            }
            let mut best = go(weights, i + 1, used);
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(weights[i][j] + go(weights, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let m = weights.first().map_or(0, Vec::len);
        go(weights, 0, &mut vec![false; m])
    }

    #[test]
    fn hungarian_small_examples() {
        let (a, w) = max_weight_assignment(&[vec![3.0, 1.0], vec![2.0, 2.0]]);
        assert_eq!(a, vec![Some(0), Some(1)]);
        assert_eq!(w, 5.0);
        let (a, w) = max_weight_assignment(&[vec![5.0], vec![3.0]]);
        assert_eq!(a, vec![Some(0), None]);
        assert_eq!(w, 5.0);
        let (a, w) = max_weight_assignment(&[vec![0.0, 0.0]]);
        assert_eq!(a, vec![None]);
        assert_eq!(w, 0.0);
        assert_eq!(max_weight_assignment(&[]).1, 0.0);
    }

    #[test]
    fn hungarian_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=5);
            let w: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0..=10) as f64).collect())
                .collect();
            let (a, total) = max_weight_assignment(&w);
            assert_eq!(total, brute_force(&w));
            let mut seen = vec![false; m];
            let mut sum = 0.0;
            for (i, g) in a.iter().enumerate() {
                if let Some(j) = *g {
                    assert!(!seen[j]);
                    seen[j] = true;
                    sum += w[i][j];
                }
            }
            assert_eq!(sum, total);
        }
    }

    #[test]
    fn kuhn_finds_perfect_matching() {
        let adj = vec![vec![0, 1], vec![0]];
        let owner = max_matching(&adj, 2, &[0, 1]);
        assert_eq!(owner, vec![Some(1), Some(0)]);
        assert_eq!(assignment_from_owners(&owner, 2), vec![Some(1), Some(0)]);
    }

    #[test]
    fn covering_releases_optional_goods() {
        // Buyer 0 grabs good 0 first; required good 1 then takes it over.
        let owner = covering_matching(&[vec![0, 1]], &[true], &[false, true]).unwrap();
        assert_eq!(owner, vec![None, Some(0)]);
        // Both required goods end up covered.
        let adj = vec![vec![0, 2], vec![0, 1]];
        let owner = covering_matching(&adj, &[true, true], &[true, false, true]).unwrap();
        assert_eq!(assignment_from_owners(&owner, 2), vec![Some(2), Some(0)]);
        assert_eq!(
            covering_matching(&[vec![0]], &[false], &[true, true]),
            Err(Uncovered::Good(1))
        );
        assert_eq!(
            covering_matching(&[vec![], vec![0]], &[true, false], &[false]),
            Err(Uncovered::Buyer(0))
        );
    }
}
