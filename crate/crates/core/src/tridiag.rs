//! Direct elimination for tridiagonal systems (Thomas algorithm).
//!
//! No pivoting is performed. The systems assembled by the implicit scheme are
//! strictly diagonally dominant M-matrices whenever the upper mesh bound on
//! `h` holds, for which plain elimination is stable.

use crate::error::{Error, Result};

/// Pivots below this multiple of the row magnitude count as zero.
const PIVOT_EPS: f64 = 1e-14;

/// Solves `A x = rhs` for tridiagonal `A`.
///
/// Row `i` reads `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`;
/// `sub[0]` and `sup[n−1]` are ignored. `scratch` holds the modified
/// super-diagonal and must have the same length as `diag`.
pub fn solve(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    scratch: &mut [f64],
    x: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 || sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::invalid("tridiagonal", "band and right-hand side lengths differ"));
    }
    if scratch.len() != n || x.len() != n {
        return Err(Error::invalid("tridiagonal", "workspace length differs from system size"));
    }

    let pivot = diag[0];
    check_pivot(0, pivot, diag[0].abs() + sup[0].abs())?;
    scratch[0] = sup[0] / pivot;
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        let pivot = diag[i] - sub[i] * scratch[i - 1];
        check_pivot(i, pivot, sub[i].abs() + diag[i].abs() + sup[i].abs())?;
        scratch[i] = sup[i] / pivot;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= scratch[i] * x[i + 1];
    }
    Ok(())
}

#[inline]
fn check_pivot(row: usize, pivot: f64, scale: f64) -> Result<()> {
    if pivot.abs() <= PIVOT_EPS * scale || !pivot.is_finite() {
        return Err(Error::SingularSystem { row, pivot });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn dense_mul(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut acc = diag[i] * x[i];
                if i > 0 {
                    acc += sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    #[test]
    fn solves_small_system() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let truth = [1.0, -2.0, 0.5, 3.0];
        let rhs = dense_mul(&sub, &diag, &sup, &truth);
        let mut scratch = vec![0.0; 4];
        let mut x = vec![0.0; 4];
        solve(&sub, &diag, &sup, &rhs, &mut scratch, &mut x).unwrap();
        for (a, b) in x.iter().zip(truth) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_row() {
        let mut scratch = [0.0];
        let mut x = [0.0];
        solve(&[0.0], &[2.0], &[0.0], &[3.0], &mut scratch, &mut x).unwrap();
        assert_eq!(x[0], 1.5);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut scratch = [0.0; 3];
        let mut x = [0.0; 3];
        let err = solve(
            &[0.0, 1.0, 1.0],
            &[1.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0],
            &[1.0, 1.0, 1.0],
            &mut scratch,
            &mut x,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularSystem { row: 1, .. }));
    }

    #[test]
    fn length_mismatch() {
        let mut scratch = [0.0; 2];
        let mut x = [0.0; 2];
        assert!(solve(&[0.0], &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], &mut scratch, &mut x).is_err());
    }

    proptest::proptest! {
        #[test]
        fn residual_small_for_dominant_systems(
            seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -5.0f64..5.0), 2..60)
        ) {
            let n = seed.len();
            let sub: Vec<f64> = seed.iter().map(|s| s.0).collect();
            let sup: Vec<f64> = seed.iter().map(|s| s.1).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.5 + sub[i].abs() + sup[i].abs()).collect();
            let rhs: Vec<f64> = seed.iter().map(|s| s.2).collect();
            let mut scratch = vec![0.0; n];
            let mut x = vec![0.0; n];
            solve(&sub, &diag, &sup, &rhs, &mut scratch, &mut x).unwrap();
            let back = dense_mul(&sub, &diag, &sup, &x);
            for (a, b) in back.iter().zip(&rhs) {
                proptest::prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
