//! Dense primal simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! Only used for XOS certificates of explicit tables at tiny `m`, where the
//! tableau has a few dozen rows. Bland's rule rules out cycling.

const EPS: f64 = 1e-12;

pub(crate) struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

/// Returns `None` when the program is unbounded.
pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let n = c.len();
    let rows = a.len();
    debug_assert!(b.iter().all(|&v| v >= 0.0));
    // Tableau columns: n structural, rows slack, then rhs.
    let width = n + rows + 1;
    let mut t: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut line = vec![0.0; width];
            line[..n].copy_from_slice(row);
            line[n + r] = 1.0;
            line[width - 1] = b[r];
            line
        })
        .collect();
    // Objective row holds reduced costs -c.
    let mut obj = vec![0.0; width];
    for (k, &ck) in c.iter().enumerate() {
        obj[k] = -ck;
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    while let Some(enter) = (0..width - 1).find(|&k| obj[k] < -EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for (r, line) in t.iter().enumerate() {
            if line[enter] > EPS {
                let ratio = line[width - 1] / line[enter];
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, best)) => {
                        if ratio < best - EPS || (ratio <= best + EPS && basis[r] < basis[lr]) {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let (pivot_row, _) = leave?;
        let pivot = t[pivot_row][enter];
        for v in t[pivot_row].iter_mut() {
            *v /= pivot;
        }
        let pivot_line = t[pivot_row].clone();
        for (r, line) in t.iter_mut().enumerate() {
            if r != pivot_row && line[enter] != 0.0 {
                let f = line[enter];
                for (v, p) in line.iter_mut().zip(&pivot_line) {
                    *v -= f * p;
                }
            }
        }
        let f = obj[enter];
        for (v, p) in obj.iter_mut().zip(&pivot_line) {
            *v -= f * p;
        }
        basis[pivot_row] = enter;
    }

    let mut x = vec![0.0; n];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[r][width - 1].max(0.0);
        }
    }
    Some(LpSolution {
        value: obj[width - 1],
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_program() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.value - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_none() {
        assert!(maximize(&[1.0, 0.0], &[vec![0.0, 1.0]], &[1.0]).is_none());
    }

    #[test]
    fn degenerate_zero_rhs() {
        let sol = maximize(&[1.0, 1.0], &[vec![1.0, 0.0], vec![1.0, 1.0]], &[0.0, 2.0]).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
    }
}
