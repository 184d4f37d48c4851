//! Banded LU with partial pivoting, used for log-determinants of large
//! sparse Kasteleyn matrices whose rows and columns are ordered spatially.
//! Elimination runs in double-double precision: planar Kasteleyn matrices
//! have exponentially large inverses, so plain `f64` loses the determinant
//! around a few thousand rows.

use twofloat::TwoFloat;

/// Sign and log of |det| of the `n × n` matrix given by its nonzero entries.
/// Returns sign 0 for a singular matrix.
pub fn banded_log_det(n: usize, entries: &[(usize, usize, f64)]) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for &(i, j, _) in entries {
        if i > j {
            kl = kl.max(i - j);
        } else {
            ku = ku.max(j - i);
        }
    }
    let width = 2 * kl + ku + 1;
    let mut a = vec![TwoFloat::from(0.0); n * width];
    // column j of row i lives at i * width + (j + kl - i)
    let at = |i: usize, j: usize| i * width + j + kl - i;
    for &(i, j, v) in entries {
        a[at(i, j)] += TwoFloat::from(v);
    }
    let mut sign = 1.0;
    let mut log = 0.0;
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + ku + kl).min(n - 1);
        let mut p = k;
        let mut best = a[at(k, k)].abs().hi();
        for i in k + 1..=last_row {
            let v = a[at(i, k)].abs().hi();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if p != k {
            for j in k..=last_col {
                a.swap(at(k, j), at(p, j));
            }
            sign = -sign;
        }
        let piv = a[at(k, k)];
        if piv.hi() < 0.0 {
            sign = -sign;
        }
        log += piv.hi().abs().ln() + (piv.lo() / piv.hi()).ln_1p();
        for i in k + 1..=last_row {
            let num = a[at(i, k)];
            // twofloat's own division is only f64-accurate; one correction step
            let q = TwoFloat::from(num.hi() / piv.hi());
            let f = q + (num - q * piv) / piv.hi();
            if f.hi() == 0.0 {
                continue;
            }
            for j in k + 1..=last_col {
                let u = a[at(k, j)];
                a[at(i, j)] -= f * u;
            }
        }
    }
    (sign, log)
}
