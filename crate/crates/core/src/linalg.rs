//! Small dense helpers for the low-dimensional vectors used throughout.

pub type Vector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vector {
    a.iter().map(|x| c * x).collect()
}

pub fn neg(a: &[f64]) -> Vector {
    a.iter().map(|x| -x).collect()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn approx_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && dist_inf(a, b) <= tol
}

/// Rank of the matrix whose rows are `rows`, by Gaussian elimination with
/// partial pivoting. Pivots below `tol` (relative to the largest entry) count
/// as zero.
pub fn rank(rows: &[Vector], tol: f64) -> usize {
    orthonormal_basis(rows, tol).len()
}

/// Orthonormal basis of the row span (modified Gram-Schmidt with
/// re-orthogonalisation).
pub fn orthonormal_basis(rows: &[Vector], tol: f64) -> Vec<Vector> {
    let scale_ref = rows.iter().map(|r| norm_inf(r)).fold(0.0, f64::max);
    if scale_ref == 0.0 {
        return Vec::new();
    }
    let mut basis: Vec<Vector> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let n = norm2(&v);
        if n > tol * scale_ref.max(1.0) {
            basis.push(scale(&v, 1.0 / n));
        }
    }
    basis
}

/// Solves the square system `a x = b`. Returns `None` when the matrix is
/// numerically singular.
pub fn solve(a: &[Vector], b: &[f64]) -> Option<Vector> {
    let n = b.len();
    let mut m: Vec<Vector> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale_ref = a.iter().map(|r| norm_inf(r)).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale_ref {
            return None;
        }
        m.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = m[i][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[i][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Calls `f` with every `k`-element subset of `0..n`, in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
