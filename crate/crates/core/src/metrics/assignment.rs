//! Minimum-cost one-to-one assignment on rectangular cost matrices.

/// Exhaustive search over all injective pairings. Ties keep the first
/// pairing found in lexicographic order. Exponential; meant for small inputs.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| if transpose { cost[j][i] } else { cost[i][j] };

    fn search(
        i: usize,
        n: usize,
        m: usize,
        at: &dyn Fn(usize, usize) -> f64,
        used: &mut [bool],
        current: &mut Vec<usize>,
        acc: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        if i == n {
            if acc < best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                current.push(j);
                search(i + 1, n, m, at, used, current, acc + at(i, j), best);
                current.pop();
                used[j] = false;
            }
        }
    }

    let mut best = (f64::INFINITY, Vec::new());
    search(0, n, m, &at, &mut vec![false; m], &mut Vec::with_capacity(n), 0.0, &mut best);
    best.1
        .into_iter()
        .enumerate()
        .map(|(i, j)| if transpose { (j, i) } else { (i, j) })
        .collect()
}

/// Hungarian algorithm with potentials, O(n²·m) for n ≤ m.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| if transpose { cost[j][i] } else { cost[i][j] };

    // 1-based arrays; column 0 is a virtual sink.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
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
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| {
            let (i, j) = (p[j] - 1, j - 1);
            if transpose {
                (j, i)
            } else {
                (i, j)
            }
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Largest side length solved by exhaustive search.
pub const BRUTE_FORCE_LIMIT: usize = 5;

/// Optimal assignment: exhaustive up to [`BRUTE_FORCE_LIMIT`], Hungarian above.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows.max(cols) <= BRUTE_FORCE_LIMIT {
        brute_force_assignment(cost)
    } else {
        hungarian(cost)
    }
}

pub fn total_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| cost[i][j]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_trap() {
        // Greedy takes (0,0)=1 and is then forced into (1,1)=100.
        let cost = vec![vec![1.0, 2.0], vec![3.0, 100.0]];
        assert_eq!(brute_force_assignment(&cost), vec![(0, 1), (1, 0)]);
        assert_eq!(hungarian(&cost), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn rectangular_and_empty() {
        let cost = vec![vec![5.0, 1.0, 9.0]];
        assert_eq!(hungarian(&cost), vec![(0, 1)]);
        let tall = vec![vec![5.0], vec![0.5], vec![2.0]];
        assert_eq!(hungarian(&tall), vec![(1, 0)]);
        assert_eq!(brute_force_assignment(&tall), vec![(1, 0)]);
        assert!(hungarian(&[]).is_empty());
        assert!(min_cost_assignment(&[vec![]]).is_empty());
    }

    #[test]
    fn hungarian_matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..180.0)).collect())
                .collect();
            let h = hungarian(&cost);
            let b = brute_force_assignment(&cost);
            assert_eq!(h.len(), n.min(m));
            assert!((total_cost(&cost, &h) - total_cost(&cost, &b)).abs() < 1e-9);
        }
    }
}
