//! Spherical Wigner quasiprobability of Dicke states.
//!
//! The pure-state density operator is expanded in orthonormal spherical
//! tensor components rho_kq (k up to N) and the function evaluated as
//! W(theta, phi) = kappa * sum_kq rho_kq conj(Y_kq), with kappa fixed so the
//! k = 0 term integrates to 1 over the sphere. The tensor diagonals are
//! eigenvectors of a tridiagonal operator with exactly known eigenvalues
//! k(k+1) - q(q-1), computed by inverse iteration, which stays orthonormal
//! for N in the hundreds where the naive ladder recursions blow up; the
//! spherical harmonics come from the standard fully-normalized associated
//! Legendre recursion with Condon-Shortley phases.

use num_complex::Complex64;

use crate::dicke::DickeState;
use crate::{Error, Result};

/// W sampled on a (theta, phi) grid. Polar samples sit at cell centers
/// theta_i = (i + 1/2) pi / n_polar; azimuth at phi_j = 2 pi j / n_azimuth.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Row-major: values[i * n_azimuth + j] = W(theta_i, phi_j).
    pub values: Vec<f64>,
}

impl SphereGrid {
    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * std::f64::consts::PI / self.n_polar as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_azimuth as f64
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_azimuth + j]
    }

    /// Quadrature of W over the sphere from the grid samples. The polar
    /// nodes cos(theta_i) are Chebyshev nodes, so Fejer weights integrate
    /// polynomials in cos(theta) of degree < n_polar exactly; the azimuthal
    /// sum is exact for harmonics below n_azimuth. The result is 1 to
    /// roundoff whenever the grid resolves the state (n_polar, n_azimuth > N).
    pub fn integral(&self) -> f64 {
        let n = self.n_polar;
        let dph = 2.0 * std::f64::consts::PI / self.n_azimuth as f64;
        let mut s = 0.0;
        for i in 0..n {
            let th = self.theta(i);
            let mut w = 1.0;
            for m in 1..=(n / 2) {
                w -= 2.0 * (2.0 * m as f64 * th).cos() / (4.0 * (m * m) as f64 - 1.0);
            }
            w *= 2.0 / n as f64;
            let row: f64 = (0..self.n_azimuth).map(|j| self.value(i, j)).sum();
            s += w * row * dph;
        }
        s
    }

    /// Grid location of the maximum value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut bv = f64::NEG_INFINITY;
        for i in 0..self.n_polar {
            for j in 0..self.n_azimuth {
                if self.value(i, j) > bv {
                    bv = self.value(i, j);
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// LU with partial pivoting for (T - lam I) x = b, T symmetric tridiagonal.
fn lu_tridiag_solve(diag: &[f64], off: &[f64], lam: f64, b: &mut [f64]) {
    let n = diag.len();
    if n == 1 {
        let d = diag[0] - lam;
        b[0] /= if d == 0.0 { f64::EPSILON } else { d };
        return;
    }
    // band storage: a = subdiag, d = diag, c = superdiag, e = second super
    let mut a: Vec<f64> = (0..n - 1).map(|i| off[i]).collect();
    let mut d: Vec<f64> = diag.iter().map(|v| v - lam).collect();
    let mut c: Vec<f64> = (0..n - 1).map(|i| off[i]).collect();
    let mut e = vec![0.0; n];
    let mut perm = vec![false; n - 1];
    let mut l = vec![0.0; n - 1];
    for i in 0..n - 1 {
        if d[i].abs() < a[i].abs() {
            perm[i] = true;
            std::mem::swap(&mut d[i], &mut a[i]);
            // row i now starts with the old row i+1: its superdiag is d[i+1],
            // second-super is c[i+1] (if present); old row i becomes row i+1
            std::mem::swap(&mut c[i], &mut d[i + 1]);
            if i + 1 < n - 1 {
                e[i] = c[i + 1];
                c[i + 1] = 0.0;
            }
        }
        let piv = if d[i] == 0.0 {
            f64::EPSILON * (1.0 + lam.abs())
        } else {
            d[i]
        };
        let f = a[i] / piv;
        l[i] = f;
        d[i + 1] -= f * c[i];
        if i + 1 < n - 1 {
            c[i + 1] -= f * e[i];
        }
        if perm[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= f * b[i];
    }
    // back substitution
    let dn = if d[n - 1] == 0.0 {
        f64::EPSILON * (1.0 + lam.abs())
    } else {
        d[n - 1]
    };
    b[n - 1] /= dn;
    if n >= 2 {
        let piv = if d[n - 2] == 0.0 { f64::EPSILON } else { d[n - 2] };
        b[n - 2] = (b[n - 2] - c[n - 2] * b[n - 1]) / piv;
    }
    for i in (0..n.saturating_sub(2)).rev() {
        let mut v = b[i] - c[i] * b[i + 1];
        if i + 2 < n {
            v -= e[i] * b[i + 2];
        }
        let piv = if d[i] == 0.0 { f64::EPSILON } else { d[i] };
        b[i] = v / piv;
    }
}

/// Diagonal of the orthonormal spherical tensor T_kq in the Dicke ladder:
/// `t[i] = <S, m+q | T_kq | S, m>` with m = i - S, i = 0..=N-q. Condon-Shortley
/// phase convention (edge element carries sign (-1)^q). Panics unless
/// q <= k <= n.
pub fn tensor_diagonal(n: usize, k: usize, q: usize) -> Vec<f64> {
    assert!(q <= k && k <= n, "need q <= k <= n");
    let s = n as f64 / 2.0;
    let len = n - q + 1;
    let g = |m: f64| s * (s + 1.0) - m * (m - 1.0);
    // shift the known eigenvalue off exact singularity; the offset is tiny
    // against the >= 2(k+1) spectral gap, so iteration still converges to
    // machine precision in two passes
    let lam = (k as f64 * (k as f64 + 1.0) - q as f64 * (q as f64 - 1.0))
        * (1.0 + 1e-14)
        + 1e-12;
    let sign_edge = if q % 2 == 0 { 1.0 } else { -1.0 };
    if len == 1 {
        return vec![sign_edge];
    }
    let diag: Vec<f64> = (0..len)
        .map(|i| {
            let m = i as f64 - s;
            g(m + q as f64) + g(m + 1.0)
        })
        .collect();
    let off: Vec<f64> = (0..len - 1)
        .map(|i| {
            let m = i as f64 - s;
            -(g(m + q as f64 + 1.0) * g(m + 1.0)).sqrt()
        })
        .collect();
    // deterministic pseudo-random seed vector, then two inverse iterations
    let mut x: Vec<f64> = (0..len)
        .map(|i| {
            let h = crate::task_seed(0x007e_4a11 + k as u64, (q * (n + 1) + i) as u64);
            (h as f64 / u64::MAX as f64) - 0.5
        })
        .collect();
    let norm = |v: &mut Vec<f64>| {
        let s: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 0.0 {
            for e in v.iter_mut() {
                *e /= s;
            }
        }
    };
    norm(&mut x);
    for _ in 0..3 {
        lu_tridiag_solve(&diag, &off, lam, &mut x);
        norm(&mut x);
    }
    if x[len - 1] * sign_edge < 0.0 {
        for e in x.iter_mut() {
            *e = -*e;
        }
    }
    x
}

/// Multipole components rho_kq = <T_kq> of a pure state, for q >= 0
/// (negative q follows from rho_{k,-q} = (-1)^q conj(rho_kq)).
pub fn multipoles(state: &DickeState) -> Vec<Vec<Complex64>> {
    let n = state.n_atoms();
    let a = state.amplitudes();
    let mut rho = vec![Vec::new(); n + 1];
    for (k, row) in rho.iter_mut().enumerate() {
        row.reserve(k + 1);
        for q in 0..=k {
            let t = tensor_diagonal(n, k, q);
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, tv) in t.iter().enumerate() {
                acc += a[i + q].conj() * tv * a[i];
            }
            row.push(acc);
        }
    }
    rho
}

/// Fully normalized associated Legendre values `P_bar[k][q]` at cos(theta),
/// Condon-Shortley phases included; Y_kq = P_bar_kq e^{i q phi}.
pub fn legendre_table(kmax: usize, ct: f64, st: f64) -> Vec<Vec<f64>> {
    legendre_normalized(kmax, ct, st)
}

fn legendre_normalized(kmax: usize, ct: f64, st: f64) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; kmax + 1]; kmax + 1];
    p[0][0] = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for q in 1..=kmax {
        p[q][q] = -p[q - 1][q - 1] * st * ((2.0 * q as f64 + 1.0) / (2.0 * q as f64)).sqrt();
    }
    for q in 0..kmax {
        p[q + 1][q] = ct * (2.0 * q as f64 + 3.0).sqrt() * p[q][q];
        for k in (q + 2)..=kmax {
            let kf = k as f64;
            let qf = q as f64;
            let a = ((4.0 * kf * kf - 1.0) / (kf * kf - qf * qf)).sqrt();
            let b = (((kf - 1.0) * (kf - 1.0) - qf * qf) / (4.0 * (kf - 1.0) * (kf - 1.0) - 1.0))
                .sqrt();
            p[k][q] = a * (ct * p[k - 1][q] - b * p[k - 2][q]);
        }
    }
    p
}

/// Evaluate the Wigner quasiprobability of a pure Dicke state on a sphere
/// grid. The imaginary parts cancel structurally (conjugate q pairs); the
/// returned values are the real parts.
pub fn wigner_grid(state: &DickeState, n_polar: usize, n_azimuth: usize) -> Result<SphereGrid> {
    if n_polar < 8 || n_azimuth < 8 {
        return Err(Error::InvalidArgument("grid too coarse (need >= 8 each)".into()));
    }
    let n = state.n_atoms();
    let rho = multipoles(state);
    let kappa = ((n as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt();
    let mut values = vec![0.0; n_polar * n_azimuth];
    for i in 0..n_polar {
        let theta = (i as f64 + 0.5) * std::f64::consts::PI / n_polar as f64;
        let p = legendre_normalized(n, theta.cos(), theta.sin());
        // g_q = sum_k rho_kq P_kq(theta)
        let mut gq = vec![Complex64::new(0.0, 0.0); n + 1];
        for k in 0..=n {
            for q in 0..=k {
                gq[q] += rho[k][q] * p[k][q];
            }
        }
        for j in 0..n_azimuth {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_azimuth as f64;
            let mut tot = gq[0].re;
            for (q, g) in gq.iter().enumerate().skip(1) {
                // rho_kq conj(Y_kq) + rho_{k,-q} conj(Y_{k,-q}) = 2 Re(g e^{-iq phi})
                let rot = Complex64::from_polar(1.0, -(q as f64) * phi);
                tot += 2.0 * (g * rot).re;
            }
            values[i * n_azimuth + j] = kappa * tot;
        }
    }
    Ok(SphereGrid { n_polar, n_azimuth, values })
}
