//! Exact state-vector dynamics of a collective spin S = N/2 in the Dicke basis.
//!
//! Amplitudes are indexed by k = 0..=N with m = k - S (ascending m, shared
//! convention for every module). Rotations are active, `exp(-i * angle * S_axis)`.
//! y-rotations go through the Wigner small-d matrix built by recursive
//! spin-1/2 coupling, which stays numerically clean far beyond the N ~ 170
//! limit where factorial expressions overflow.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// Rotation generator axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

/// An active rotation `exp(-i * angle * S_axis)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RotationSpec {
    pub axis: RotationAxis,
    pub angle: f64,
}

/// First and second spin moments plus the contrast `|<S>|/S0`.
#[derive(Debug, Clone, Copy)]
pub struct SpinMoments {
    pub mean_sx: f64,
    pub mean_sy: f64,
    pub mean_sz: f64,
    pub var_sx: f64,
    pub var_sy: f64,
    pub var_sz: f64,
    pub contrast: f64,
}

impl SpinMoments {
    /// Normalized variance 2 var(S_y)/S0; equals 1 for a coherent spin state.
    pub fn sigma_y_sq(&self, n_atoms: usize) -> f64 {
        2.0 * self.var_sy / (n_atoms as f64 / 2.0)
    }
}

/// Pure state of the symmetric N-spin manifold.
#[derive(Debug, Clone)]
pub struct DickeState {
    n_atoms: usize,
    amplitudes: Vec<Complex64>,
}

/// Natural-log factorials 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

impl DickeState {
    /// Spin-coherent state |polar, azimuth>; (pi/2, 0) points along +x.
    ///
    /// Amplitudes are binomial, assembled in log space so N can exceed the
    /// factorial overflow limit. At the poles the state is an exact S_z
    /// eigenvector.
    pub fn make_css(n_atoms: usize, polar: f64, azimuth: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("n_atoms must be >= 1".into()));
        }
        if !polar.is_finite() || !azimuth.is_finite() {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        let n = n_atoms;
        let c = (polar / 2.0).cos();
        let s = (polar / 2.0).sin();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        if s == 0.0 {
            // all spins up (m = +S); global phase dropped
            amplitudes[n] = Complex64::new(1.0, 0.0);
        } else if c == 0.0 {
            amplitudes[0] = Complex64::new(1.0, 0.0);
        } else {
            let lf = ln_factorials(n);
            let (lc, ls) = (c.abs().ln(), s.abs().ln());
            let (sc, ss) = (c.signum(), s.signum());
            for k in 0..=n {
                let log_binom = 0.5 * (lf[n] - lf[k] - lf[n - k]);
                let mag = (log_binom + k as f64 * lc + (n - k) as f64 * ls).exp()
                    * sc.powi(k as i32)
                    * ss.powi((n - k) as i32);
                let phase = azimuth * (n - k) as f64;
                amplitudes[k] = Complex64::from_polar(mag, phase);
            }
        }
        let mut st = Self { n_atoms, amplitudes };
        st.renormalize();
        Ok(st)
    }

    /// Build a state directly from amplitudes (normalized on entry).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 amplitudes (N >= 1)".into(),
            ));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidArgument("amplitudes not normalizable".into()));
        }
        let n_atoms = amplitudes.len() - 1;
        let mut st = Self { n_atoms, amplitudes };
        st.renormalize();
        Ok(st)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Total spin S = N/2.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// m value of basis index k.
    pub fn m_value(&self, k: usize) -> f64 {
        k as f64 - self.spin()
    }

    fn renormalize(&mut self) {
        let norm: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut self.amplitudes {
            *a /= norm;
        }
    }

    /// Apply `exp(-i * angle * S_axis)`.
    pub fn rotate(&self, spec: RotationSpec) -> Result<Self> {
        if !spec.angle.is_finite() {
            return Err(Error::InvalidArgument("rotation angle must be finite".into()));
        }
        let out = match spec.axis {
            RotationAxis::Z => self.rotate_z(spec.angle),
            RotationAxis::Y => self.rotate_y(spec.angle),
            RotationAxis::X => {
                // R_x(a) = R_z(-pi/2) R_y(a) R_z(pi/2)
                let q = std::f64::consts::FRAC_PI_2;
                self.rotate_z(q).rotate_y(spec.angle).rotate_z(-q)
            }
        };
        Ok(out)
    }

    fn rotate_z(&self, angle: f64) -> Self {
        let s = self.spin();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a * Complex64::from_polar(1.0, -angle * (k as f64 - s)))
            .collect();
        Self { n_atoms: self.n_atoms, amplitudes }
    }

    fn rotate_y(&self, angle: f64) -> Self {
        let basis = y_eigenbasis(self.n_atoms);
        let mut st = Self {
            n_atoms: self.n_atoms,
            amplitudes: basis.rotate_y(&self.amplitudes, angle),
        };
        st.renormalize();
        st
    }

    /// One-axis twisting: multiply amplitude at m by exp(-i (q/sqrt(N)) m^2).
    /// Negative `q_tilde` is the time-reversed evolution.
    pub fn oat_evolve(&self, q_tilde: f64) -> Result<Self> {
        if !q_tilde.is_finite() {
            return Err(Error::InvalidArgument("q_tilde must be finite".into()));
        }
        let s = self.spin();
        let w = q_tilde / (self.n_atoms as f64).sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let m = k as f64 - s;
                a * Complex64::from_polar(1.0, -w * m * m)
            })
            .collect();
        Ok(Self { n_atoms: self.n_atoms, amplitudes })
    }

    /// Probability distribution of outcomes m along a measurement axis.
    pub fn measure_distribution(&self, axis: RotationAxis) -> Vec<f64> {
        let q = std::f64::consts::FRAC_PI_2;
        let probe = match axis {
            RotationAxis::Z => self.clone(),
            // S_x = U S_z U^dag with U = R_y(pi/2): project on U|m>, i.e. rotate by -pi/2
            RotationAxis::X => self.rotate_y(-q),
            // S_y = U S_z U^dag with U = R_x(-pi/2): apply U^dag = R_x(+pi/2)
            RotationAxis::Y => self
                .rotate(RotationSpec { axis: RotationAxis::X, angle: q })
                .expect("finite angle"),
        };
        probe.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// First/second moments of S_x, S_y, S_z via the tridiagonal ladder action.
    pub fn moments(&self) -> SpinMoments {
        let n = self.n_atoms;
        let s = self.spin();
        let ss1 = s * (s + 1.0);
        let a = &self.amplitudes;
        let mut mz = 0.0;
        let mut mz2 = 0.0;
        let mut spsm = 0.0;
        let mut smsp = 0.0;
        let mut sp = Complex64::new(0.0, 0.0);
        let mut sp2 = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            let m = k as f64 - s;
            let p = a[k].norm_sqr();
            mz += m * p;
            mz2 += m * m * p;
            spsm += (ss1 - m * (m - 1.0)) * p;
            smsp += (ss1 - m * (m + 1.0)) * p;
            if k < n {
                let c = (ss1 - m * (m + 1.0)).sqrt();
                sp += a[k + 1].conj() * c * a[k];
                if k + 2 <= n {
                    let m1 = m + 1.0;
                    let c2 = (ss1 - m1 * (m1 + 1.0)).sqrt();
                    sp2 += a[k + 2].conj() * c2 * c * a[k];
                }
            }
        }
        let mean_sx = sp.re;
        let mean_sy = sp.im;
        let sx2 = 0.5 * sp2.re + 0.25 * (spsm + smsp);
        let sy2 = -0.5 * sp2.re + 0.25 * (spsm + smsp);
        let s0 = s;
        SpinMoments {
            mean_sx,
            mean_sy,
            mean_sz: mz,
            var_sx: (sx2 - mean_sx * mean_sx).max(0.0),
            var_sy: (sy2 - mean_sy * mean_sy).max(0.0),
            var_sz: (mz2 - mz * mz).max(0.0),
            contrast: (mean_sx * mean_sx + mean_sy * mean_sy + mz * mz).sqrt() / s0,
        }
    }

    /// Squared-norm deviation from 1; every operation keeps this below 1e-12.
    pub fn norm_error(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs()
    }
}

/// Deterministic sampling of measurement outcomes m from a distribution over
/// the Dicke ladder. The distribution must sum to 1 within 1e-9.
pub fn sample_shots(dist: &[f64], n_shots: usize, seed: u64) -> Result<Vec<f64>> {
    if dist.len() < 2 {
        return Err(Error::InvalidArgument("distribution too short".into()));
    }
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be >= 1".into()));
    }
    let total: f64 = dist.iter().sum();
    if dist.iter().any(|p| !p.is_finite() || *p < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "malformed distribution (sum = {total})"
        )));
    }
    let s = (dist.len() - 1) as f64 / 2.0;
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in dist {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let last = *cdf.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = (0..n_shots)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * last;
            let k = cdf.partition_point(|&c| c < u).min(dist.len() - 1);
            k as f64 - s
        })
        .collect();
    Ok(shots)
}

/// Wigner small-d matrix d^j(theta) for 2j = `two_j`, dense row-major
/// (2j+1)x(2j+1), element [i', i] = <j, i'-j | exp(-i theta S_y) | j, i-j>.
///
/// Built by coupling one spin-1/2 per step (no factorials), which is stable
/// for 2j well past 800; validated against the factorial sum at small j.
pub fn wigner_d(two_j: usize, theta: f64) -> Vec<f64> {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    // d^{1/2}[i', i], index 0 = m -1/2, 1 = m +1/2
    let dh = [[c, s], [-s, c]];
    let mut cur = vec![1.0_f64];
    let mut cur_n = 1usize;
    for step in 0..two_j {
        let j2 = step + 1; // target 2j
        let nn = j2 + 1;
        let mut out = vec![0.0_f64; nn * nn];
        // a_plus[i] = sqrt(i / 2j) (weight of child m-1/2), a_minus[i] = sqrt((2j-i)/2j)
        let inv = 1.0 / j2 as f64;
        let ap: Vec<f64> = (0..nn).map(|i| (i as f64 * inv).sqrt()).collect();
        let am: Vec<f64> = (0..nn).map(|i| ((j2 - i) as f64 * inv).sqrt()).collect();
        // child index for sigma=+1/2 is i-1, for sigma=-1/2 is i
        for (sp_idx, wp, r0) in [(1usize, &ap, 1usize), (0usize, &am, 0usize)] {
            let rows = if r0 == 1 { 1..nn } else { 0..nn - 1 };
            for ip in rows {
                let kp = ip - r0;
                let wrow = wp[ip];
                for (sg_idx, wm, c0) in [(1usize, &ap, 1usize), (0usize, &am, 0usize)] {
                    let f = dh[sp_idx][sg_idx] * wrow;
                    let cols = if c0 == 1 { 1..nn } else { 0..nn - 1 };
                    for i in cols {
                        let k = i - c0;
                        out[ip * nn + i] += f * wm[i] * cur[kp * cur_n + k];
                    }
                }
            }
        }
        cur = out;
        cur_n = nn;
    }
    cur
}

/// Eigenbasis of S_y used to apply y-rotations as two dense mat-vecs.
struct YBasis {
    n: usize,
    /// u[i][k]: columns are S_y eigenvectors with eigenvalue m_k = k - S.
    u: Vec<Complex64>,
}

impl YBasis {
    fn build(n: usize) -> Self {
        // S_y = U S_z U^dag with U = R_x(-pi/2) = R_z(-pi/2) R_y(-pi/2) R_z(pi/2)
        let q = std::f64::consts::FRAC_PI_2;
        let d = wigner_d(n, -q);
        let nn = n + 1;
        let s = n as f64 / 2.0;
        let mut u = vec![Complex64::new(0.0, 0.0); nn * nn];
        for i in 0..nn {
            let mi = i as f64 - s;
            let left = Complex64::from_polar(1.0, q * mi); // R_z(-pi/2) diagonal
            for k in 0..nn {
                let mk = k as f64 - s;
                let right = Complex64::from_polar(1.0, -q * mk); // R_z(pi/2) diagonal
                u[i * nn + k] = left * d[i * nn + k] * right;
            }
        }
        Self { n, u }
    }

    /// exp(-i angle S_y) psi = U exp(-i angle m) U^dag psi
    fn rotate_y(&self, amps: &[Complex64], angle: f64) -> Vec<Complex64> {
        let nn = self.n + 1;
        let s = self.n as f64 / 2.0;
        let mut w = vec![Complex64::new(0.0, 0.0); nn];
        // w = U^dag psi
        for k in 0..nn {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..nn {
                acc += self.u[i * nn + k].conj() * amps[i];
            }
            w[k] = acc * Complex64::from_polar(1.0, -angle * (k as f64 - s));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); nn];
        for i in 0..nn {
            let row = &self.u[i * nn..(i + 1) * nn];
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..nn {
                acc += row[k] * w[k];
            }
            out[i] = acc;
        }
        out
    }
}

fn y_eigenbasis(n: usize) -> Arc<YBasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<YBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().unwrap().get(&n) {
        return b.clone();
    }
    let built = Arc::new(YBasis::build(n));
    cache.lock().unwrap().entry(n).or_insert_with(|| built.clone());
    built
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn css_x(n: usize) -> DickeState {
        DickeState::make_css(n, FRAC_PI_2, 0.0).unwrap()
    }

    /// Factorial-sum d-matrix, valid only at small j; the independent check.
    fn wigner_d_factorial(two_j: usize, theta: f64) -> Vec<f64> {
        let n = two_j + 1;
        let j = two_j as f64 / 2.0;
        let fact = |x: i64| -> f64 { (1..=x).map(|v| v as f64).product::<f64>() };
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        let mut d = vec![0.0; n * n];
        for ip in 0..n {
            let mp = ip as f64 - j;
            for i in 0..n {
                let m = i as f64 - j;
                let kmin = 0.max((m - mp).round() as i64);
                let kmax = ((j + m).round() as i64).min((j - mp).round() as i64);
                let pref = (fact((j + m).round() as i64)
                    * fact((j - m).round() as i64)
                    * fact((j + mp).round() as i64)
                    * fact((j - mp).round() as i64))
                .sqrt();
                let mut tot = 0.0;
                for k in kmin..=kmax {
                    let den = fact((j + m).round() as i64 - k)
                        * fact(k)
                        * fact((j - mp).round() as i64 - k)
                        * fact((mp - m).round() as i64 + k);
                    let pc = (2.0 * j - mp + m).round() as i32 - 2 * k as i32;
                    let ps = (mp - m).round() as i32 + 2 * k as i32;
                    let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let cc = if pc == 0 { 1.0 } else { c.powi(pc) };
                    let ssv = if ps == 0 { 1.0 } else { s.powi(ps) };
                    tot += sgn * cc * ssv / den;
                }
                let extra = if ((mp - m).round() as i64) % 2 == 0 { 1.0 } else { -1.0 };
                d[ip * n + i] = pref * tot * extra;
            }
        }
        d
    }

    #[test]
    fn css_small_examples() {
        // N=2 x-CSS: binomial amplitudes (1/2, 1/sqrt2, 1/2)
        let st = css_x(2);
        let a = st.amplitudes();
        assert!((a[0].re - 0.5).abs() < 1e-14);
        assert!((a[1].re - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((a[2].re - 0.5).abs() < 1e-14);
        // N=1 pole: all spins up
        let up = DickeState::make_css(1, 0.0, 0.0).unwrap();
        assert!(up.amplitudes()[0].norm() < 1e-15);
        assert!((up.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        // N=220: CSS projection noise var_sz = N/4
        let st = css_x(220);
        let mom = st.moments();
        assert!((mom.var_sz - 55.0).abs() < 1e-9, "var_sz = {}", mom.var_sz);
        assert!((mom.contrast - 1.0).abs() < 1e-12);
    }

    #[test]
    fn css_rejects_zero_atoms() {
        assert!(DickeState::make_css(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn non_finite_parameters_rejected() {
        let st = css_x(4);
        assert!(st
            .rotate(RotationSpec { axis: RotationAxis::Y, angle: f64::NAN })
            .is_err());
        assert!(st
            .rotate(RotationSpec { axis: RotationAxis::Z, angle: f64::INFINITY })
            .is_err());
        assert!(st.oat_evolve(f64::NAN).is_err());
    }

    #[test]
    fn moments_css() {
        let st = css_x(2);
        let mom = st.moments();
        assert!((mom.mean_sx - 1.0).abs() < 1e-12);
        assert!((mom.contrast - 1.0).abs() < 1e-12);
        // sigma_y^2 = 1 for a CSS at any N
        for n in [1, 2, 7, 40, 221, 400] {
            let m = css_x(n).moments();
            assert!((m.sigma_y_sq(n) - 1.0).abs() < 1e-10, "N={n}");
            assert!((m.var_sz - n as f64 / 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rotate_z_moves_x_to_y() {
        let st = css_x(8)
            .rotate(RotationSpec { axis: RotationAxis::Z, angle: FRAC_PI_2 })
            .unwrap();
        let mom = st.moments();
        assert!((mom.mean_sy - 4.0).abs() < 1e-12);
        assert!(mom.mean_sx.abs() < 1e-12);
    }

    #[test]
    fn rotate_y_identity_and_small_angle() {
        let st = css_x(12);
        let rot = st
            .rotate(RotationSpec { axis: RotationAxis::Y, angle: 0.0 })
            .unwrap();
        for (a, b) in st.amplitudes().iter().zip(rot.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
        // |<S_z>| = S0 sin(phi) for a rotated x-CSS; the sign is fixed by the
        // active right-handed convention (here +x tilts toward -z).
        let phi = 0.05;
        let st = css_x(220)
            .rotate(RotationSpec { axis: RotationAxis::Y, angle: phi })
            .unwrap();
        let mom = st.moments();
        assert!(
            (mom.mean_sz.abs() - 110.0 * phi.sin()).abs() < 1e-9,
            "mean_sz = {}",
            mom.mean_sz
        );
        assert!(mom.mean_sz < 0.0);
    }

    #[test]
    fn rotate_x_composition_matches_y_frame() {
        // R_x applied to an x-CSS leaves it fixed
        let st = css_x(30);
        let rot = st
            .rotate(RotationSpec { axis: RotationAxis::X, angle: 0.7321 })
            .unwrap();
        let mom = rot.moments();
        assert!((mom.mean_sx - 15.0).abs() < 1e-10);
        assert!(mom.mean_sy.abs() < 1e-10);
    }

    #[test]
    fn oat_zero_is_identity_and_reversal_is_exact() {
        let st = css_x(20).oat_evolve(0.0).unwrap();
        for (a, b) in st.amplitudes().iter().zip(css_x(20).amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let twisted = css_x(20).oat_evolve(0.5).unwrap();
        let back = twisted.oat_evolve(-0.5).unwrap();
        for (a, b) in back.amplitudes().iter().zip(css_x(20).amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn oat_leaves_z_distribution_invariant() {
        let st = css_x(41);
        let before = st.measure_distribution(RotationAxis::Z);
        let after = st.oat_evolve(0.9).unwrap().measure_distribution(RotationAxis::Z);
        for (p, q) in before.iter().zip(&after) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn oat_contrast_closed_form() {
        // |<S>|/S0 after twisting a CSS is cos^(N-1)(q/sqrt(N))
        for (n, q) in [(20usize, 0.5f64), (220, 0.5), (220, 1.0)] {
            let st = css_x(n).oat_evolve(q).unwrap();
            let mom = st.moments();
            let expect = (q / (n as f64).sqrt()).cos().powi(n as i32 - 1);
            assert!(
                (mom.contrast - expect).abs() < 1e-10,
                "N={n} q={q}: {} vs {}",
                mom.contrast,
                expect
            );
        }
    }

    #[test]
    fn measure_distribution_examples() {
        // pole state measured along z: delta at m = +S
        let up = DickeState::make_css(3, 0.0, 0.0).unwrap();
        let d = up.measure_distribution(RotationAxis::Z);
        assert!((d[3] - 1.0).abs() < 1e-12);
        // x-CSS along z at N=2: (1/4, 1/2, 1/4)
        let d = css_x(2).measure_distribution(RotationAxis::Z);
        assert!((d[0] - 0.25).abs() < 1e-12);
        assert!((d[1] - 0.5).abs() < 1e-12);
        assert!((d[2] - 0.25).abs() < 1e-12);
        // CSS along +y measured along y: delta at m = +S
        let css_y = DickeState::make_css(12, FRAC_PI_2, FRAC_PI_2).unwrap();
        let d = css_y.measure_distribution(RotationAxis::Y);
        assert!((d[12] - 1.0).abs() < 1e-10, "d = {:?}", &d[9..]);
        // x-CSS measured along x: delta at m = +S
        let d = css_x(12).measure_distribution(RotationAxis::X);
        assert!((d[12] - 1.0).abs() < 1e-10);
        // probabilities sum to 1
        let tw = css_x(51).oat_evolve(1.3).unwrap();
        for axis in [RotationAxis::X, RotationAxis::Y, RotationAxis::Z] {
            let d = tw.measure_distribution(axis);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_moments_match_ladder_moments() {
        let st = css_x(40).oat_evolve(0.8).unwrap();
        let mom = st.moments();
        let d = st.measure_distribution(RotationAxis::Y);
        let mean: f64 = d.iter().enumerate().map(|(k, p)| st.m_value(k) * p).sum();
        let second: f64 = d
            .iter()
            .enumerate()
            .map(|(k, p)| st.m_value(k).powi(2) * p)
            .sum();
        assert!((mean - mom.mean_sy).abs() < 1e-10);
        assert!((second - (mom.var_sy + mom.mean_sy.powi(2))).abs() < 1e-9);
    }

    #[test]
    fn wigner_d_matches_factorial_sum_small_j() {
        for two_j in 1..=10 {
            for &theta in &[0.3, FRAC_PI_2, 2.4, -1.1] {
                let a = wigner_d(two_j, theta);
                let b = wigner_d_factorial(two_j, theta);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-10, "2j={two_j} theta={theta}");
                }
            }
        }
    }

    #[test]
    fn rotation_group_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 8, 21, 50] {
            let alpha: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let beta: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let st = css_x(n).oat_evolve(0.4).unwrap();
            let ab = st
                .rotate(RotationSpec { axis: RotationAxis::Y, angle: beta })
                .unwrap()
                .rotate(RotationSpec { axis: RotationAxis::Y, angle: alpha })
                .unwrap();
            let sum = st
                .rotate(RotationSpec { axis: RotationAxis::Y, angle: alpha + beta })
                .unwrap();
            for (x, y) in ab.amplitudes().iter().zip(sum.amplitudes()) {
                assert!((x - y).norm() < 1e-10);
            }
            // R_y(2pi) = (-1)^N identity
            let full = st
                .rotate(RotationSpec { axis: RotationAxis::Y, angle: 2.0 * PI })
                .unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for (x, y) in full.amplitudes().iter().zip(st.amplitudes()) {
                assert!((x - y * sign).norm() < 1e-10, "N={n}");
            }
        }
    }

    #[test]
    fn sample_shots_contract() {
        // delta distribution: every shot is that m
        let mut d = vec![0.0; 9];
        d[6] = 1.0;
        let shots = sample_shots(&d, 100, 1).unwrap();
        assert!(shots.iter().all(|&m| m == 2.0));
        // determinism
        let dist = css_x(220).measure_distribution(RotationAxis::Z);
        let a = sample_shots(&dist, 5000, 42).unwrap();
        let b = sample_shots(&dist, 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_shots(&dist, 5000, 43).unwrap();
        assert_ne!(a, c);
        // binomial statistics: sample variance of m within 3 sigma of N/4
        let shots = sample_shots(&dist, 100_000, 7).unwrap();
        let mean: f64 = shots.iter().sum::<f64>() / shots.len() as f64;
        let var: f64 =
            shots.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (shots.len() - 1) as f64;
        let sigma = 55.0 * (2.0 / (shots.len() as f64 - 1.0)).sqrt();
        assert!((var - 55.0).abs() < 3.0 * sigma, "var = {var}");
        // empirical mean converges to the distribution mean (0 for the x-CSS)
        assert!(mean.abs() < 3.0 * (55.0f64 / shots.len() as f64).sqrt());
        // malformed distribution rejected
        assert!(sample_shots(&[0.5, 0.2], 10, 0).is_err());
    }

    #[test]
    fn heisenberg_robertson_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let st = css_x(n)
                .oat_evolve(rng.random::<f64>() * 2.0)
                .unwrap()
                .rotate(RotationSpec {
                    axis: RotationAxis::Y,
                    angle: rng.random::<f64>(),
                })
                .unwrap();
            let m = st.moments();
            assert!(m.var_sy * m.var_sz >= m.mean_sx * m.mean_sx / 4.0 - 1e-9);
        }
    }
}
