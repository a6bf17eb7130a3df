use crate::error::{Error, Result};

/// Exact maximum-weight perfect matching on a square score matrix.
///
/// Returns `assign` with row `i` matched to column `assign[i]`, maximizing
/// `Σ score[i][assign[i]]`. Shortest augmenting paths with potentials, O(n³).
/// Rows are inserted in index order and ties resolve to the lowest column,
/// so the result is a pure function of the input.
pub fn solve_lap(score: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = score.len();
    if let Some((i, row)) = score.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::dim(format!("score matrix row {i} has {} entries, expected {n}", row.len())));
    }
    if score.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::arg("score matrix has a non-finite entry"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // minimize cost = -score; index 0 is a sentinel column
    let cost = |i: usize, j: usize| -score[i - 1][j - 1];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    Ok(assign)
}

pub(crate) fn assignment_score(score: &[Vec<f64>], assign: &[usize]) -> f64 {
    assign.iter().enumerate().map(|(i, &j)| score[i][j]).sum()
}
