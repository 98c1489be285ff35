//! Small dense exact linear algebra over the rationals.

use num_traits::{Signed, Zero};

use crate::exactmath::Rational;

/// Row-reduce in place; returns the pivot columns.
fn eliminate(a: &mut [Vec<Rational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == a.len() {
            break;
        }
        let Some(p) = (row..a.len()).find(|&i| !a[i][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for c in col..a[row].len() {
            let v = &a[row][c] * &inv;
            a[row][c] = v;
        }
        for i in 0..a.len() {
            if i != row && !a[i][col].is_zero() {
                let factor = a[i][col].clone();
                for c in col..a[i].len() {
                    let v = &a[row][c] * &factor;
                    a[i][c] -= v;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Unique solution of the square system `a y = b`, if any.
pub(crate) fn solve(a: &[&[Rational]], b: &[&Rational]) -> Option<Vec<Rational>> {
    let m = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| row.iter().cloned().chain(std::iter::once((*rhs).clone())).collect())
        .collect();
    let piv = eliminate(&mut aug, m);
    (piv.len() == m).then(|| aug.into_iter().map(|r| r[m].clone()).collect())
}

pub(crate) fn rank(rows: &[Vec<Rational>], cols: usize) -> usize {
    let mut a = rows.to_vec();
    eliminate(&mut a, cols).len()
}

/// Pivot columns of the matrix with the given rows.
pub(crate) fn pivot_columns(rows: &[Vec<Rational>], cols: usize) -> Vec<usize> {
    let mut a = rows.to_vec();
    eliminate(&mut a, cols)
}

/// A nonzero vector spanning the kernel of `rows` when the kernel is one-dimensional.
pub(crate) fn kernel_line(rows: &[&[Rational]], cols: usize) -> Option<Vec<Rational>> {
    let mut a: Vec<Vec<Rational>> = rows.iter().map(|r| r.to_vec()).collect();
    let piv = eliminate(&mut a, cols);
    if piv.len() + 1 != cols {
        return None;
    }
    let free = (0..cols).find(|c| !piv.contains(c))?;
    let mut v = vec![Rational::zero(); cols];
    v[free] = Rational::from_integer(1.into());
    for (r, &pc) in piv.iter().enumerate() {
        v[pc] = -a[r][free].clone();
    }
    Some(v)
}

pub(crate) fn det(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut d = Rational::from_integer(1.into());
    for col in 0..n {
        let Some(p) = (col..n).find(|&i| !a[i][col].is_zero()) else { return Rational::zero() };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        d *= &a[col][col];
        let inv = a[col][col].recip();
        for i in col + 1..n {
            if a[i][col].is_zero() {
                continue;
            }
            let f = &a[i][col] * &inv;
            for c in col..n {
                let v = &a[col][c] * &f;
                a[i][c] -= v;
            }
        }
    }
    d
}

pub(crate) fn abs(r: Rational) -> Rational {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rat;

    #[test]
    fn small_systems() {
        let r1 = [rat(1, 1), rat(1, 1)];
        let r2 = [rat(1, 1), rat(2, 1)];
        let y = solve(&[&r1, &r2], &[&rat(1, 1), &rat(0, 1)]).unwrap();
        assert_eq!(y, vec![rat(2, 1), rat(-1, 1)]);
        assert!(solve(&[&r1, &r1], &[&rat(1, 1), &rat(0, 1)]).is_none());
        assert_eq!(det(vec![r1.to_vec(), r2.to_vec()]), rat(1, 1));
        let k = kernel_line(&[&r1], 2).unwrap();
        assert_eq!(k, vec![rat(-1, 1), rat(1, 1)]);
    }
}
