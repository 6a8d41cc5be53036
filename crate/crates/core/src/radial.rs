//! Coulomb-approximation radial wavefunctions.
//!
//! The radial equation is integrated inward with the Numerov method on the
//! mesh x = sqrt(r), x_i = i h, using the substitution u(r) = x^{1/2} y(x),
//! which turns u'' = (l(l+1)/r^2 - 2/r - 2E) u into y'' = g(x) y with
//! g = (2l+1/2)(2l+3/2)/x^2 - 8 - 8 E x^2.  The energy is the quantum-defect
//! energy E = -1/(2 n_eff^2); the solution is discarded below the inner cutoff
//! r_min and, inside the inner classical turning point, wherever it starts to
//! grow toward the origin.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{j0, CompensatedSum};

/// Mesh settings for a single solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    /// Step in x = sqrt(r).
    pub step: f64,
    /// Inner cutoff in bohr.
    pub r_min: f64,
}

impl MeshSpec {
    /// Smallest number of mesh points per local de Broglie wavelength in x
    /// that the solver accepts.
    pub const MIN_POINTS_PER_WAVELENGTH: f64 = 40.0;

    /// Largest local wavenumber in x is sqrt(8) (reached where the Coulomb
    /// term dominates), so this bounds the step from above.
    pub fn max_step() -> f64 {
        2.0 * std::f64::consts::PI / (8f64.sqrt() * Self::MIN_POINTS_PER_WAVELENGTH)
    }

    /// Outer edge of the mesh: r_max = 2 n_eff (n_eff + 15).
    pub fn r_max(n_eff: f64) -> f64 {
        2.0 * n_eff * (n_eff + 15.0)
    }

    /// Short content hash identifying the mesh for a given state; used as a
    /// cache key component.
    pub fn hash(&self, n_eff: f64, l: u32) -> String {
        let mut h = Sha256::new();
        h.update(b"sqrt-mesh-numerov-v1");
        h.update(self.step.to_bits().to_le_bytes());
        h.update(self.r_min.to_bits().to_le_bytes());
        h.update(n_eff.to_bits().to_le_bytes());
        h.update(l.to_le_bytes());
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A normalized radial solution on the sqrt mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialWavefunction {
    pub n_eff: f64,
    pub l: u32,
    pub step: f64,
    /// Index of the first mesh point: x = (i_min + k) h.
    pub i_min: usize,
    /// y(x) values; u(r) = x^{1/2} y.
    pub y: Vec<f64>,
    /// |integral u^2 dr - 1| after normalization.
    pub norm_residual: f64,
    /// Outer classical turning point in bohr.
    pub outer_turning_point: f64,
    pub mesh_hash: String,
}

impl RadialWavefunction {
    pub fn x(&self, k: usize) -> f64 {
        (self.i_min + k) as f64 * self.step
    }

    /// Mesh in bohr, r_k = x_k^2.
    pub fn r_mesh(&self) -> Vec<f64> {
        (0..self.y.len()).map(|k| self.x(k).powi(2)).collect()
    }

    /// Reduced radial function u(r) on [`Self::r_mesh`].
    pub fn u(&self) -> Vec<f64> {
        self.y.iter().enumerate().map(|(k, y)| self.x(k).sqrt() * y).collect()
    }

    /// Integral of u^2 w(r) dr.
    pub fn integrate_density<W: Fn(f64) -> f64>(&self, w: W) -> f64 {
        let mut s = CompensatedSum::new();
        for (k, &y) in self.y.iter().enumerate() {
            let x = self.x(k);
            s.add(x * x * y * y * w(x * x));
        }
        2.0 * s.value() * self.step
    }

    /// <r^p>.
    pub fn expectation_r(&self, p: i32) -> f64 {
        self.integrate_density(|r| r.powi(p))
    }

    /// Spherically averaged <j0(2 k r)>.
    pub fn j0_expectation(&self, k: f64) -> f64 {
        self.integrate_density(|r| j0(2.0 * k * r))
    }
}

/// Solve for the radial function of effective quantum number `n_eff` and
/// orbital angular momentum `l`.
pub fn solve(n_eff: f64, l: u32, mesh: MeshSpec) -> Result<RadialWavefunction> {
    let lf = l as f64;
    if !(n_eff > lf) {
        return Err(Error::InvalidState(format!("n_eff = {n_eff} must exceed l = {l} for a bound solution")));
    }
    if !(mesh.step > 0.0 && mesh.step <= MeshSpec::max_step()) {
        return Err(Error::InvalidArgument(format!(
            "radial step {} outside (0, {:.4}] (fewer than {} points per wavelength)",
            mesh.step,
            MeshSpec::max_step(),
            MeshSpec::MIN_POINTS_PER_WAVELENGTH
        )));
    }
    if !(mesh.r_min > 0.0) {
        return Err(Error::InvalidArgument("r_min must be positive".into()));
    }
    let h = mesh.step;
    let e = -0.5 / (n_eff * n_eff);
    let x_max = MeshSpec::r_max(n_eff).sqrt();
    let i_min = ((mesh.r_min.sqrt() / h).ceil() as usize).max(1);
    let i_max = (x_max / h).floor() as usize;
    if i_max < i_min + 10 {
        return Err(Error::InvalidArgument("radial mesh has too few points".into()));
    }
    let n = i_max - i_min + 1;
    let ll = (2.0 * lf + 0.5) * (2.0 * lf + 1.5);
    let g = |x: f64| ll / (x * x) - 8.0 - 8.0 * e * x * x;
    let h12 = h * h / 12.0;

    let mut y = vec![0.0; n];
    y[n - 1] = 1e-10;
    y[n - 2] = 1e-10 * (1.0 + h * g(i_max as f64 * h).max(0.0).sqrt());
    for k in (1..n - 1).rev() {
        let i = i_min + k;
        let (xp, x0, xm) = ((i + 1) as f64 * h, i as f64 * h, (i - 1) as f64 * h);
        y[k - 1] = (2.0 * (1.0 + 5.0 * h12 * g(x0)) * y[k] - (1.0 - h12 * g(xp)) * y[k + 1]) / (1.0 - h12 * g(xm));
        if y[k - 1].abs() > 1e100 {
            for v in &mut y[k - 1..] {
                *v *= 1e-100;
            }
        }
    }

    // inner classical turning point of the Coulomb problem at energy e
    let lfac = lf * (lf + 1.0);
    let a_e = -e;
    let r_in = if lfac > 0.0 { (1.0 - (1.0 - 2.0 * a_e * lfac).max(0.0).sqrt()) / (2.0 * a_e) } else { 0.0 };
    let xs = |k: usize| (i_min + k) as f64 * h;
    let u = |k: usize, y: &[f64]| xs(k).sqrt() * y[k];
    let mut cut = 0;
    for k in (0..n - 1).rev() {
        if xs(k) * xs(k) < r_in && u(k, &y).abs() > u(k + 1, &y).abs() {
            cut = k + 1;
            break;
        }
    }
    for v in &mut y[..cut] {
        *v = 0.0;
    }

    let mut s = CompensatedSum::new();
    for (k, &v) in y.iter().enumerate() {
        s.add(xs(k) * xs(k) * v * v);
    }
    let norm = (2.0 * s.value() * h).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidState(format!("radial solution for n_eff = {n_eff}, l = {l} is not normalizable")));
    }
    // fix the overall sign so the outermost lobe is positive
    let sign = if y[n.saturating_sub(30)] < 0.0 { -1.0 } else { 1.0 };
    for v in &mut y {
        *v *= sign / norm;
    }

    let mut wf = RadialWavefunction {
        n_eff,
        l,
        step: h,
        i_min,
        y,
        norm_residual: 0.0,
        outer_turning_point: n_eff * n_eff * (1.0 + (1.0 - lfac / (n_eff * n_eff)).max(0.0).sqrt()),
        mesh_hash: mesh.hash(n_eff, l),
    };
    wf.norm_residual = (wf.expectation_r(0) - 1.0).abs();
    Ok(wf)
}

/// Radial integral of `u_a r^p u_b dr` over the overlap of the two meshes.
pub fn radial_integral(a: &RadialWavefunction, b: &RadialWavefunction, p: i32) -> f64 {
    debug_assert_eq!(a.step, b.step);
    let lo = a.i_min.max(b.i_min);
    let hi = (a.i_min + a.y.len()).min(b.i_min + b.y.len());
    if hi <= lo {
        return 0.0;
    }
    let mut s = CompensatedSum::new();
    for i in lo..hi {
        let x = i as f64 * a.step;
        let r = x * x;
        s.add(x * x * r.powi(p) * a.y[i - a.i_min] * b.y[i - b.i_min]);
    }
    2.0 * s.value() * a.step
}

/// Radial dipole integral <a|r|b>.
pub fn radial_dipole(a: &RadialWavefunction, b: &RadialWavefunction) -> f64 {
    radial_integral(a, b, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hydrogen(n: u32, l: u32) -> RadialWavefunction {
        solve(n as f64, l, MeshSpec { step: 0.01, r_min: 1e-3 }).unwrap()
    }

    #[test]
    fn hydrogen_r_expectation() {
        let w = hydrogen(2, 1);
        assert_relative_eq!(w.expectation_r(1), 5.0, max_relative = 1e-6);
    }

    #[test]
    fn hydrogen_r2_scan() {
        for n in 1..=20u32 {
            for l in [0, n / 2, n - 1] {
                let w = hydrogen(n, l);
                let nf = n as f64;
                let lf = l as f64;
                let exact = nf * nf * (5.0 * nf * nf + 1.0 - 3.0 * lf * (lf + 1.0)) / 2.0;
                assert_relative_eq!(w.expectation_r(2), exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn hydrogen_1s_2p() {
        let exact = 128.0 * 6f64.sqrt() / 243.0;
        let r = radial_dipole(&hydrogen(1, 0), &hydrogen(2, 1)).abs();
        assert_relative_eq!(r, exact, max_relative = 1e-6);
        assert!((r - 1.2902).abs() < 1e-4);
    }

    #[test]
    fn normalized_and_decaying() {
        let w = solve(22.32, 2, MeshSpec { step: 0.01, r_min: 1.3 }).unwrap();
        assert!(w.norm_residual < 1e-8);
        let u = w.u();
        let r = w.r_mesh();
        let tail: f64 = u.iter().zip(&r).filter(|(_, &r)| r > 1.5 * w.outer_turning_point).map(|(u, _)| u.abs()).fold(0.0, f64::max);
        let peak = u.iter().map(|u| u.abs()).fold(0.0, f64::max);
        assert!(tail < 1e-3 * peak);
        assert!(*r.last().unwrap() >= MeshSpec::r_max(22.32) * 0.999);
    }

    #[test]
    fn step_halving_is_stable() {
        let m1 = MeshSpec { step: 0.01, r_min: 1.3 };
        let m2 = MeshSpec { step: 0.005, r_min: 1.3 };
        let d = |m| radial_dipole(&solve(25.33, 2, m).unwrap(), &solve(26.11, 1, m).unwrap());
        assert_relative_eq!(d(m1), d(m2), max_relative = 1e-6);
        let r2 = |m| solve(25.33, 2, m).unwrap().expectation_r(2);
        assert_relative_eq!(r2(m1), r2(m2), max_relative = 1e-6);
    }

    #[test]
    fn rejects_unbound_and_coarse_mesh() {
        assert!(solve(1.5, 2, MeshSpec { step: 0.01, r_min: 1.0 }).is_err());
        assert!(solve(10.0, 0, MeshSpec { step: 0.2, r_min: 1.0 }).is_err());
    }

    #[test]
    fn mesh_hash_changes_with_settings() {
        let a = MeshSpec { step: 0.01, r_min: 1.0 };
        let b = MeshSpec { step: 0.005, r_min: 1.0 };
        assert_ne!(a.hash(20.0, 1), b.hash(20.0, 1));
        assert_eq!(a.hash(20.0, 1), a.hash(20.0, 1));
    }
}
