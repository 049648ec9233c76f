//! Least-squares solve by Householder QR with column pivoting.

/// Column-major dense matrix.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<f64>,
    /// Numerical rank found by the pivoted factorization.
    pub rank: usize,
}

/// Relative threshold on `|R_kk| / |R_00|` below which a pivot counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Minimizes `||A x - b||_2`. Columns beyond the numerical rank get zero
/// coefficients (basic solution).
pub fn lstsq(a: &ColMatrix, b: &[f64]) -> LstsqSolution {
    assert_eq!(b.len(), a.rows, "rhs length must equal row count");
    let (m, n) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut diag = Vec::with_capacity(steps);

    for k in 0..steps {
        // pivot on the largest remaining column norm
        let norm_below = |c: &[f64]| c[k..].iter().map(|v| v * v).sum::<f64>();
        let (p, _) = (k..n)
            .map(|j| (j, norm_below(r.col(j))))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != k {
            for i in 0..m {
                r.data.swap(k * m + i, p * m + i);
            }
            perm.swap(k, p);
        }

        let x = &r.col(k)[k..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv > 0.0 {
            for j in k + 1..n {
                let col = &mut r.col_mut(j)[k..];
                let s = 2.0 * v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() / vtv;
                col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
            }
            let tail = &mut rhs[k..];
            let s = 2.0 * v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>() / vtv;
            tail.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
        }
        let col = r.col_mut(k);
        col[k] = alpha;
        col[k + 1..].iter_mut().for_each(|c| *c = 0.0);
        diag.push(alpha);
    }

    let lead = diag.first().map_or(0.0, |d| d.abs());
    let rank = diag
        .iter()
        .take_while(|d| lead > 0.0 && d.abs() > RANK_TOL * lead)
        .count();

    let mut z = vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= r.get(i, j) * z[j];
        }
        z[i] = s / r.get(i, i);
    }
    let mut x = vec![0.0; n];
    for (k, &orig) in perm.iter().enumerate() {
        x[orig] = z[k];
    }
    LstsqSolution { x, rank }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn from_rows(rows: &[Vec<f64>]) -> ColMatrix {
        let mut a = ColMatrix::zeros(rows.len(), rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        a
    }

    #[test]
    fn solves_square_system() {
        let a = from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let s = lstsq(&a, &[3.0, 5.0]);
        assert_eq!(s.rank, 2);
        assert!((s.x[0] - 0.8).abs() < 1e-14 && (s.x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_matches_normal_equations() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = lstsq(&from_rows(&rows), &b);
        // residual must be orthogonal to every column
        for j in 0..3 {
            let dot: f64 = rows
                .iter()
                .zip(&b)
                .map(|(r, bi)| r[j] * (bi - r.iter().zip(&s.x).map(|(a, x)| a * x).sum::<f64>()))
                .sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn detects_rank_deficiency() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let s = lstsq(&from_rows(&rows), &vec![1.0; 10]);
        assert_eq!(s.rank, 2);
    }
}
