//! Small dense linear algebra: singular values by one-sided Jacobi and an
//! LU solver with partial pivoting. Matrices here are tiny (a handful of
//! sites), so simplicity and robustness win over speed.

/// Row-major dense matrix view helpers.
#[derive(Debug, Clone)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transposed(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Singular values of a dense matrix, descending, via one-sided Jacobi
/// rotations on the columns. Converges quadratically for these sizes.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // work on a tall matrix so columns are the short dimension
    let mut m = if a.rows >= a.cols {
        a.clone()
    } else {
        a.transposed()
    };
    let (rows, cols) = (m.rows, m.cols);
    if cols == 0 {
        return vec![];
    }
    let col = |m: &Matrix, j: usize| -> Vec<f64> { (0..rows).map(|i| m.get(i, j)).collect() };
    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let x = m.get(i, p);
                    let y = m.get(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = m.get(i, p);
                    let y = m.get(i, q);
                    m.set(i, p, c * x - s * y);
                    m.set(i, q, s * x + c * y);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| col(&m, j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Numerical rank: singular values above `rtol` times the largest.
pub fn rank_with_tolerance(a: &Matrix, rtol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        None => 0,
        Some(&s0) => {
            if s0 == 0.0 {
                0
            } else {
                sv.iter().filter(|&&s| s > rtol * s0).count()
            }
        }
    }
}

/// Solve `A x = b` in place by LU with partial pivoting. Returns `None` for
/// a numerically singular matrix. `a` is row-major n×n and is destroyed.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let factor = a[i * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[i * n + k] = 0.0;
            for j in (k + 1)..n {
                a[i * n + j] -= factor * a[k * n + j];
            }
            b[i] -= factor * b[k];
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in (i + 1)..n {
            acc -= a[i * n + j] * b[j];
        }
        b[i] = acc / a[i * n + i];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0], vec![0.0, 0.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 4.0).abs() < 1e-12);
        assert!((sv[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_known_2x2() {
        // A = [[1, 1], [0, 1]]: σ² are eigenvalues of AᵀA = [[1,1],[1,2]],
        // (3 ± √5)/2.
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let sv = singular_values(&a);
        let want0 = ((3.0 + 5.0_f64.sqrt()) / 2.0).sqrt();
        let want1 = ((3.0 - 5.0_f64.sqrt()) / 2.0).sqrt();
        assert!((sv[0] - want0).abs() < 1e-12);
        assert!((sv[1] - want1).abs() < 1e-12);
    }

    #[test]
    fn rank_detects_dependence() {
        let a = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 1.0],
        ]);
        assert_eq!(rank_with_tolerance(&a, 1e-8), 2);
        // wide matrices go through the transpose path
        let w = Matrix::from_rows(&[vec![1.0, 0.0, 2.0, 0.0], vec![0.0, 3.0, 0.0, 0.0]]);
        assert_eq!(rank_with_tolerance(&w, 1e-8), 2);
    }

    #[test]
    fn lu_solves_and_flags_singularity() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        solve_in_place(&mut a, &mut b, 3).unwrap();
        let want = [2.0, 3.0, -1.0];
        for (x, w) in b.iter().zip(want.iter()) {
            assert!((x - w).abs() < 1e-12);
        }
        let mut sing = vec![1.0, 2.0, 2.0, 4.0];
        let mut rhs = vec![1.0, 2.0];
        assert!(solve_in_place(&mut sing, &mut rhs, 2).is_none());
    }
}
