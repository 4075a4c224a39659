//! Dense complex singular value decomposition.
//!
//! A column-pivoted Householder QR first reveals the numerical rank r and
//! compresses A ≈ Q R Pᵀ. One-sided Jacobi rotations then orthogonalize the
//! r columns of W = (R Pᵀ)ᴴ, which yields W = V Σ Jᴴ and A = (QJ) Σ Vᴴ.
//! The preconditioning step keeps the Jacobi sweeps O(n r²) for the
//! numerically low-rank kernels produced by smooth biphoton amplitudes.
//!
//! Output is deterministic: fixed pivot and sweep order, singular values
//! descending, and each left vector rotated so its largest-magnitude entry
//! is real positive (the right vector receives the same phase).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Columns whose residual norm falls below this fraction of ‖A‖_F are
/// treated as numerically zero by the rank-revealing QR.
const RANK_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct Svd {
    /// m × r, orthonormal columns.
    pub u: Array2<Complex64>,
    /// r singular values, descending, all positive.
    pub d: Vec<f64>,
    /// n × r, orthonormal columns.
    pub v: Array2<Complex64>,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// U diag(d) Vᴴ.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut a = Array2::zeros((m, n));
        for (l, &d) in self.d.iter().enumerate() {
            for i in 0..m {
                let ud = self.u[[i, l]] * d;
                for j in 0..n {
                    a[[i, j]] += ud * self.v[[j, l]].conj();
                }
            }
        }
        a
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // aᴴ b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

struct Reflector {
    start: usize,
    v: Vec<Complex64>,
}

impl Reflector {
    /// x ← (I − 2vvᴴ) x on rows start..
    fn apply(&self, x: &mut [Complex64]) {
        let tail = &mut x[self.start..];
        let w = dot(&self.v, tail) * 2.0;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= w * v;
        }
    }
}

/// Thin SVD of a dense complex matrix.
pub fn svd(a: &Array2<Complex64>) -> Result<Svd> {
    let (m, n) = a.dim();
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("svd input has non-finite entries".into()));
    }
    let frob = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if frob == 0.0 || m == 0 || n == 0 {
        return Ok(Svd {
            u: Array2::zeros((m, 0)),
            d: Vec::new(),
            v: Array2::zeros((n, 0)),
        });
    }

    // Column-pivoted Householder QR, columns stored contiguously.
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::new();
    let cutoff = RANK_TOL * frob;
    for j in 0..m.min(n) {
        let (mut piv, mut best) = (j, -1.0);
        for (c, col) in cols.iter().enumerate().skip(j) {
            let s = norm_sq(&col[j..]);
            if s > best {
                best = s;
                piv = c;
            }
        }
        if best.sqrt() <= cutoff {
            break;
        }
        cols.swap(j, piv);
        perm.swap(j, piv);

        let x = &cols[j][j..];
        let alpha = norm_sq(x).sqrt();
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let beta = -phase * alpha;
        let mut v = x.to_vec();
        v[0] -= beta;
        let vn = norm_sq(&v).sqrt();
        if vn > 0.0 {
            v.iter_mut().for_each(|z| *z /= vn);
            let h = Reflector { start: j, v };
            for col in cols.iter_mut().skip(j) {
                h.apply(col);
            }
            reflectors.push(h);
        } else {
            reflectors.push(Reflector {
                start: j,
                v: vec![Complex64::new(0.0, 0.0); m - j],
            });
        }
        cols[j][j] = beta;
        for z in cols[j][j + 1..].iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let r = reflectors.len();

    // W = (R Pᵀ)ᴴ, n × r, stored by column.
    let mut w: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; r];
    for (c, col) in cols.iter().enumerate() {
        for i in 0..r.min(c + 1) {
            w[i][perm[c]] = col[i].conj();
        }
    }
    let mut jac: Vec<Vec<Complex64>> = (0..r)
        .map(|i| {
            let mut e = vec![Complex64::new(0.0, 0.0); r];
            e[i] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = f64::EPSILON * n as f64;
    let mut converged = r < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..r {
            for q in p + 1..r {
                let alpha = norm_sq(&w[p]);
                let beta = norm_sq(&w[q]);
                let gamma = dot(&w[p], &w[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g; // e^{iφ}
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (se, sec) = (e * s, e.conj() * s);
                rotate(&mut w, p, q, c, se, sec);
                rotate(&mut jac, p, q, c, se, sec);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    // Assemble singular triplets.
    let mut triplets: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = Vec::with_capacity(r);
    for l in 0..r {
        let d = norm_sq(&w[l]).sqrt();
        if d == 0.0 {
            continue;
        }
        let mut v: Vec<Complex64> = w[l].iter().map(|z| z / d).collect();
        let mut u = vec![Complex64::new(0.0, 0.0); m];
        u[..r].copy_from_slice(&jac[l]);
        for h in reflectors.iter().rev() {
            h.apply(&mut u);
        }
        fix_phase(&mut u, &mut v);
        triplets.push((d, u, v));
    }
    order_triplets(&mut triplets);

    let k = triplets.len();
    let mut uu = Array2::zeros((m, k));
    let mut vv = Array2::zeros((n, k));
    let mut d = Vec::with_capacity(k);
    for (l, (s, u, v)) in triplets.into_iter().enumerate() {
        d.push(s);
        for i in 0..m {
            uu[[i, l]] = u[i];
        }
        for j in 0..n {
            vv[[j, l]] = v[j];
        }
    }
    Ok(Svd { u: uu, d, v: vv })
}

/// Column update  x_p ← c x_p − s e^{−iφ} x_q,  x_q ← s e^{iφ} x_p + c x_q.
fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, se: Complex64, sec: Complex64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (xp, xq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (ap, bq) = (*a, *b);
        *a = ap * c - sec * bq;
        *b = se * ap + bq * c;
    }
}

fn fix_phase(u: &mut [Complex64], v: &mut [Complex64]) {
    let mut imax = 0;
    let mut best = -1.0;
    for (i, z) in u.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            imax = i;
        }
    }
    if best <= 0.0 {
        return;
    }
    let ph = u[imax].conj() / best;
    u.iter_mut().for_each(|z| *z *= ph);
    v.iter_mut().for_each(|z| *z *= ph);
    u[imax] = Complex64::new(best, 0.0);
}

fn first_nonzero_phase(u: &[Complex64]) -> f64 {
    u.iter()
        .find(|z| z.norm() > 0.0)
        .map(|z| z.arg())
        .unwrap_or(0.0)
}

/// Descending by singular value; values within 1e-12·d₁ of each other are
/// ordered by the phase of the first nonzero entry of the left vector.
fn order_triplets(t: &mut [(f64, Vec<Complex64>, Vec<Complex64>)]) {
    t.sort_by(|a, b| b.0.total_cmp(&a.0));
    let Some(dmax) = t.first().map(|x| x.0) else {
        return;
    };
    let tie = 1e-12 * dmax;
    let mut start = 0;
    while start < t.len() {
        let mut end = start + 1;
        while end < t.len() && (t[start].0 - t[end].0).abs() < tie {
            end += 1;
        }
        if end - start > 1 {
            t[start..end].sort_by(|a, b| {
                first_nonzero_phase(&a.1).total_cmp(&first_nonzero_phase(&b.1))
            });
        }
        start = end;
    }
}
