//! Scalar numerical kernels shared by the closed forms: cancellation-free
//! exponential helpers, divided differences of `exp`, and pairwise summation.

/// `(e^t - 1) / t`, continuous at `t = 0`.
#[inline]
pub fn exprel(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0 + 0.5 * t
    } else {
        t.exp_m1() / t
    }
}

/// `∫_c^d e^{r y} dy`, exact for any sign of `r` and `d < c` allowed.
#[inline]
pub fn exp_integral(r: f64, c: f64, d: f64) -> f64 {
    let len = d - c;
    if len == 0.0 {
        return 0.0;
    }
    (r * c).exp() * len * exprel(r * len)
}

/// Sum with pairwise (tree) reduction. Error grows like `O(log n)` ulps.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Divided difference `exp[z_0, ..., z_k]` of the exponential function.
///
/// Works for arbitrary (also coincident) nodes. With the nodes sorted, the
/// table entry for `z_i..z_j` comes from the Newton recurrence when
/// `z_j - z_i` exceeds `2k`, where the two operands differ enough that the
/// subtraction loses little. Tighter clusters are read off `exp(M)` for the
/// bidiagonal matrix with the cluster on the diagonal and ones above it.
pub fn exp_divided_difference(z: &[f64]) -> f64 {
    let n = z.len();
    assert!(n >= 1, "need at least one node");
    if n == 1 {
        return z[0].exp();
    }
    if n == 2 {
        let (lo, hi) = if z[0] <= z[1] { (z[0], z[1]) } else { (z[1], z[0]) };
        let d = hi - lo;
        if d > 1.0 {
            return (hi.exp() - lo.exp()) / d;
        }
        return lo.exp() * exprel(d);
    }
    let mut w = z.to_vec();
    w.sort_by(f64::total_cmp);
    // exp[z + c] = e^c exp[z]: work with the largest node at zero
    let shift = w[n - 1];
    for v in w.iter_mut() {
        *v -= shift;
    }
    let tau = 2.0 * (n - 1) as f64;
    let mut table = vec![0.0; n * n];
    let mut covered = 0;
    for i in 0..n {
        let mut hi = i;
        while hi + 1 < n && w[hi + 1] - w[i] <= tau {
            hi += 1;
        }
        if hi > i && hi >= covered.max(i + 1) {
            let block = exp_bidiagonal(&w[i..=hi]);
            let len = hi - i + 1;
            for r in 0..len {
                for c in r..len {
                    table[(i + r) * n + i + c] = block[r * len + c];
                }
            }
            covered = hi + 1;
        }
    }
    for k in 0..n {
        for i in 0..n - k {
            let j = i + k;
            if k == 0 {
                table[i * n + i] = w[i].exp();
            } else if w[j] - w[i] > tau {
                table[i * n + j] = (table[(i + 1) * n + j] - table[i * n + j - 1]) / (w[j] - w[i]);
            }
        }
    }
    shift.exp() * table[n - 1]
}

/// `exp(M)` for the upper bidiagonal `M` with `z` on the diagonal and ones on
/// the superdiagonal, in row-major order. Writing `M = z_min I + B` leaves `B`
/// entrywise nonnegative, so neither the Taylor series nor the squaring
/// steps ever subtract. Meant for node spreads of order `z.len()`.
fn exp_bidiagonal(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm = zmax - zmin + 1.0;
    let mut s = 0;
    let mut h = 1.0;
    while norm * h > 0.5 {
        h *= 0.5;
        s += 1;
    }
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = (z[i] - zmin) * h;
        if i + 1 < n {
            b[i * n + i + 1] = h;
        }
    }
    let mut acc = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        acc[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    let mut next = vec![0.0; n * n];
    for k in 1..30 {
        upper_mul(&term, &b, &mut next, n);
        let inv = 1.0 / k as f64;
        let mut biggest: f64 = 0.0;
        for (t, nx) in term.iter_mut().zip(next.iter()) {
            *t = nx * inv;
            biggest = biggest.max(*t);
        }
        // every term is nonnegative, so small corner entries stay relatively
        // accurate; stop once each entry's relative increment is negligible
        let mut done = true;
        for (a, t) in acc.iter_mut().zip(term.iter()) {
            *a += t;
            if *t > 1e-17 * *a {
                done = false;
            }
        }
        if done || biggest == 0.0 {
            break;
        }
    }
    for _ in 0..s {
        upper_mul(&acc, &acc, &mut next, n);
        std::mem::swap(&mut acc, &mut next);
    }
    let scale = zmin.exp();
    for a in acc.iter_mut() {
        *a *= scale;
    }
    acc
}

fn upper_mul(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            if j >= i {
                for k in i..=j {
                    s += a[i * n + k] * b[k * n + j];
                }
            }
            out[i * n + j] = s;
        }
    }
}
