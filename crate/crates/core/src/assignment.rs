//! Maximum-weight one-to-one assignment between two vertex sets.
//!
//! Dense Hungarian method (shortest augmenting paths with potentials) over a
//! square matrix padded with zero-cost dummy rows/columns. Pairs below the
//! gate cost nothing, which is the same as leaving both sides unmatched.

/// Returns `(row, col)` pairs of a maximum total weight matching restricted
/// to pairs with `weight >= gate`, sorted by row.
///
/// Pairs whose weight is not positive add nothing to the total and are never
/// reported, so the result is the smallest optimal matching.
pub fn max_weight_matching(weights: &[Vec<f64>], gate: f64) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    debug_assert!(weights.iter().all(|r| r.len() == cols));
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let usable = |i: usize, j: usize| {
        let w = weights[i][j];
        w >= gate && w > 0.0
    };
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols && usable(i, j) {
            -weights[i][j]
        } else {
            0.0
        }
    };

    // 1-based arrays; column 0 is the virtual root of each augmentation.
    let mut u = vec![0f64; n + 1];
    let mut v = vec![0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
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
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&j| owner[j] > 0)
        .map(|j| (owner[j] - 1, j - 1))
        .filter(|&(i, j)| i < rows && j < cols && usable(i, j))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Sum of matched weights, accumulated in row order.
pub fn matching_total(weights: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| weights[i][j]).sum()
}
