//! Exact rational scalars and small dense linear algebra.
//!
//! Everything geometric in this crate happens in dimension ≤ 3, so the
//! routines here are straightforward Gaussian elimination over `Rational64`.
//! No floating point is involved anywhere in this module.

use num_traits::{One, Signed, Zero};

/// The scalar type used throughout: exact rationals with `i64` parts.
pub type Q = num_rational::Rational64;

/// Rational from numerator/denominator.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// Rational from an integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

pub type QVec = Vec<Q>;
pub type QMat = Vec<QVec>;

pub fn zeros(n: usize) -> QVec {
    vec![Q::zero(); n]
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Q], c: Q) -> QVec {
    a.iter().map(|x| x * c).collect()
}

pub fn neg(a: &[Q]) -> QVec {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero_vec(a: &[Q]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Matrix (rows) times column vector.
pub fn mat_vec(m: &[QVec], v: &[Q]) -> QVec {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Matrix product (both row-major).
pub fn mat_mul(a: &[QVec], b: &[QVec]) -> QMat {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![zeros(p); n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..p {
                let t = out[i][j] + aik * b[k][j];
                out[i][j] = t;
            }
        }
    }
    out
}

pub fn identity(n: usize) -> QMat {
    let mut m = vec![zeros(n); n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn transpose(m: &[QVec]) -> QMat {
    let ncols = m.first().map_or(0, Vec::len);
    (0..ncols)
        .map(|c| m.iter().map(|row| row[c]).collect())
        .collect()
}

/// Row-reduce in place; returns pivot columns.
fn row_reduce(rows: &mut QMat) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        rows[r] = scale(&rows[r], inv);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c];
                rows[i] = sub(&rows[i], &scale(&rows[r], f));
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Reduced row-echelon form with zero rows dropped: a canonical basis of the
/// row space, usable as a key for comparing subspaces.
pub fn rref(rows: &[QVec]) -> QMat {
    let mut m: QMat = rows.to_vec();
    let npiv = row_reduce(&mut m).len();
    m.truncate(npiv);
    m
}

pub fn rank(rows: &[QVec]) -> usize {
    let mut m: QMat = rows.to_vec();
    row_reduce(&mut m).len()
}

/// Basis of the null space {x : row · x = 0 for every row}.
pub fn kernel(rows: &[QVec], ncols: usize) -> Vec<QVec> {
    let mut m: QMat = rows.to_vec();
    if m.is_empty() {
        return identity(ncols);
    }
    let pivots = row_reduce(&mut m);
    let mut basis = Vec::new();
    for c in 0..ncols {
        if pivots.contains(&c) {
            continue;
        }
        let mut v = zeros(ncols);
        v[c] = Q::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][c];
        }
        basis.push(v);
    }
    basis
}

/// One solution of the system rows · x = rhs, if consistent.
pub fn solve(rows: &[QVec], rhs: &[Q], ncols: usize) -> Option<QVec> {
    let mut m: QMat = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(*b);
            row
        })
        .collect();
    if m.is_empty() {
        return Some(zeros(ncols));
    }
    let pivots = row_reduce(&mut m);
    // A pivot in the augmented column means 0 = 1.
    if pivots.contains(&ncols) {
        return None;
    }
    let mut x = zeros(ncols);
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = m[r][ncols];
    }
    Some(x)
}

/// Is v in the row span of `rows`?
pub fn in_span(rows: &[QVec], v: &[Q]) -> bool {
    if is_zero_vec(v) {
        return true;
    }
    let mut m: QMat = rows.to_vec();
    let base = row_reduce(&mut m).len();
    m.truncate(base);
    m.push(v.to_vec());
    rank(&m) == base
}

/// Sign of the determinant of a square matrix: -1, 0, or 1.
pub fn det_sign(m: &[QVec]) -> i32 {
    let n = m.len();
    let mut a: QMat = m.to_vec();
    let mut sign = 1i32;
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return 0;
        };
        if p != c {
            a.swap(c, p);
            sign = -sign;
        }
        if a[c][c].is_negative() {
            sign = -sign;
        }
        let piv = a[c][c];
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = a[i][c] / piv;
                a[i] = sub(&a[i], &scale(&a[c], f));
            }
        }
    }
    sign
}

/// Affine dimension of a point set (dimension of the span of differences).
pub fn affine_dim(points: &[QVec]) -> Option<usize> {
    let first = points.first()?;
    let diffs: QMat = points[1..].iter().map(|p| sub(p, first)).collect();
    Some(rank(&diffs))
}
