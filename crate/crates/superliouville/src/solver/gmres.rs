//! Restarted GMRES for the matrix-free linearized system.
//!
//! Standard Saad–Schultz iteration: Arnoldi with modified Gram–Schmidt,
//! Givens rotations to maintain the QR factorization of the Hessenberg
//! matrix, restart after a fixed Krylov dimension. The operator is
//! supplied as a closure computing `y = A·x`.
//!
//! All inner products and norms are plain serial loops in index order, so
//! repeated runs are bitwise deterministic.

/// Result of a GMRES run.
#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    /// Whether the relative residual reached the requested tolerance.
    pub converged: bool,
    /// Total operator applications performed.
    pub iterations: usize,
    /// Final relative residual ‖b - A·x‖ / ‖b‖.
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve A·x = b with restarted GMRES; `x` holds the initial guess on
/// entry and the best iterate on exit.
///
/// * `apply`: computes `y = A·x` (dimensions equal to `b.len()`).
/// * `restart`: Krylov subspace dimension per cycle (clamped to the
///   problem size).
/// * `max_iters`: cap on total operator applications across restarts.
/// * `tol`: relative residual target, measured against ‖b‖.
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    max_iters: usize,
    tol: f64,
) -> GmresOutcome {
    let n = b.len();
    assert_eq!(x.len(), n, "solution/rhs dimension mismatch");
    assert!(restart >= 1 && max_iters >= 1 && tol > 0.0);
    let m = restart.min(n);

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return GmresOutcome { converged: true, iterations: 0, rel_residual: 0.0 };
    }

    let mut total_iters = 0usize;
    let mut work = vec![0.0; n];
    // Krylov basis, Hessenberg columns, and Givens data for one cycle.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m); // column k holds k+2 entries
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    loop {
        // residual of the current iterate
        apply(x, &mut work);
        total_iters += 1;
        let mut r0 = vec![0.0; n];
        for k in 0..n {
            r0[k] = b[k] - work[k];
        }
        let beta = norm2(&r0);
        let mut rel = beta / b_norm;
        if rel <= tol {
            return GmresOutcome { converged: true, iterations: total_iters, rel_residual: rel };
        }
        if total_iters >= max_iters {
            return GmresOutcome { converged: false, iterations: total_iters, rel_residual: rel };
        }

        basis.clear();
        hess.clear();
        for v in r0.iter_mut() {
            *v /= beta;
        }
        basis.push(r0);
        g.fill(0.0);
        g[0] = beta;

        let mut k_used = 0;
        for k in 0..m {
            apply(&basis[k], &mut work);
            total_iters += 1;
            // modified Gram–Schmidt
            let mut hcol = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &work);
                hcol[i] = hik;
                for t in 0..n {
                    work[t] -= hik * v[t];
                }
            }
            let hnext = norm2(&work);
            hcol[k + 1] = hnext;

            // apply accumulated Givens rotations to the new column
            for i in 0..k {
                let (c, s) = (cs[i], sn[i]);
                let tmp = c * hcol[i] + s * hcol[i + 1];
                hcol[i + 1] = -s * hcol[i] + c * hcol[i + 1];
                hcol[i] = tmp;
            }
            // new rotation annihilating hcol[k+1]
            let denom = (hcol[k] * hcol[k] + hcol[k + 1] * hcol[k + 1]).sqrt();
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hcol[k] / denom, hcol[k + 1] / denom) };
            cs[k] = c;
            sn[k] = s;
            hcol[k] = c * hcol[k] + s * hcol[k + 1];
            hcol[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            hess.push(hcol);
            k_used = k + 1;

            rel = g[k + 1].abs() / b_norm;
            let lucky_breakdown = hnext <= 1e-14 * b_norm.max(1.0);
            if rel <= tol || total_iters >= max_iters || lucky_breakdown {
                break;
            }
            let mut vnext = work.clone();
            for v in vnext.iter_mut() {
                *v /= hnext;
            }
            basis.push(vnext);
        }

        // back-substitution: solve the k_used × k_used triangular system
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for t in 0..n {
                x[t] += yj * basis[j][t];
            }
        }

        if rel <= tol {
            // verified against the true residual at the top of the next loop
            continue;
        }
        if total_iters >= max_iters {
            // final true residual for honest reporting
            apply(x, &mut work);
            let mut r = 0.0;
            for k in 0..n {
                let d = b[k] - work[k];
                r += d * d;
            }
            rel = r.sqrt() / b_norm;
            return GmresOutcome { converged: rel <= tol, iterations: total_iters, rel_residual: rel };
        }
    }
}
