//! Small dense vector helpers. Ranks here are tiny (k <= ~8), so plain
//! slices and `Vec`s are used instead of a matrix library.

use crate::scalar::Scalar;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator.
pub fn sum_compensated<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    sum_compensated(a.iter().zip(b).map(|(&x, &y)| x * y))
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    norm(&sub(a, b))
}

/// Returns `a / |a|`, or `None` for the zero vector.
pub fn normalized<T: Scalar>(a: &[T]) -> Option<Vec<T>> {
    let n = norm(a);
    if n > T::zero() && n.is_finite() {
        Some(scale(a, n.recip()))
    } else {
        None
    }
}

/// Numerical rank of the matrix whose rows are `rows`, by Gaussian
/// elimination with full pivoting. Pivots below `rel_tol * max|a_ij|` count
/// as zero.
pub fn numerical_rank<T: Scalar>(rows: &[Vec<T>], rel_tol: T) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<T>> = rows.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if scale == T::zero() {
        return 0;
    }
    let threshold = rel_tol * scale;
    let nrows = m.len();
    let mut rank = 0;
    let mut col_used = vec![false; ncols];
    let mut row_used = vec![false; nrows];
    for _ in 0..nrows.min(ncols) {
        let mut best = T::zero();
        let mut pivot = None;
        for (i, row) in m.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !col_used[j] && v.abs() > best {
                    best = v.abs();
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if best <= threshold {
            break;
        }
        row_used[pi] = true;
        col_used[pj] = true;
        rank += 1;
        let prow = m[pi].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if row_used[i] {
                continue;
            }
            let f = row[pj] / prow[pj];
            for (x, &p) in row.iter_mut().zip(&prow) {
                *x -= f * p;
            }
        }
    }
    rank
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|i| (i, m[i][col].abs()))
            .fold((col, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best == T::zero() || !best.is_finite() {
            return None;
        }
        m.swap(col, piv);
        let prow = m[col].clone();
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / prow[col];
            for (x, &p) in row.iter_mut().zip(&prow).skip(col) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = CompensatedSum::new();
        acc.add(m[i][n]);
        for j in i + 1..n {
            acc.add(-m[i][j] * x[j]);
        }
        x[i] = acc.value() / m[i][i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Determinant by elimination with partial pivoting.
pub fn determinant<T: Scalar>(a: &[Vec<T>]) -> T {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|i| (i, m[i][col].abs()))
            .fold((col, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best == T::zero() {
            return T::zero();
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        let prow = m[col].clone();
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / prow[col];
            for (x, &p) in row.iter_mut().zip(&prow).skip(col) {
                *x -= f * p;
            }
        }
    }
    det
}

/// Generalized cross product: a vector orthogonal to the `k - 1` given rows
/// in `R^k`, built from signed maximal minors. Zero when the rows are
/// dependent.
pub fn orthogonal_complement<T: Scalar>(rows: &[&[T]]) -> Vec<T> {
    let k = rows.len() + 1;
    (0..k)
        .map(|skip| {
            let minor: Vec<Vec<T>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let d = if minor.is_empty() {
                T::one()
            } else {
                determinant(&minor)
            };
            if skip % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}
