//! Fixed-capacity dense helpers for the small symmetric systems of the modal model.

use crate::MAX_MODES;

pub(crate) type SquareN = [[f64; MAX_MODES]; MAX_MODES];
pub(crate) type VecN = [f64; MAX_MODES];

/// In-place Cholesky factorization of the leading `n × n` block. Returns
/// `None` when the block is not positive definite.
pub(crate) fn cholesky(a: &SquareN, n: usize) -> Option<SquareN> {
    let mut l = [[0.0; MAX_MODES]; MAX_MODES];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Some(l)
}

pub(crate) fn cholesky_solve(l: &SquareN, n: usize, b: &VecN) -> VecN {
    let mut y = [0.0; MAX_MODES];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; MAX_MODES];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Inverse of an SPD block via its Cholesky factor.
pub(crate) fn spd_inverse(a: &SquareN, n: usize) -> Option<SquareN> {
    let l = cholesky(a, n)?;
    let mut inv = [[0.0; MAX_MODES]; MAX_MODES];
    for j in 0..n {
        let mut e = [0.0; MAX_MODES];
        e[j] = 1.0;
        let col = cholesky_solve(&l, n, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    // symmetrize against rounding
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Some(inv)
}
