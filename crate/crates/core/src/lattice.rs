//! Optical-lattice shifts beyond the dipole approximation and the
//! magic-wavelength condition for metastable -> Rydberg transitions.
//!
//! A Rydberg electron in a standing wave of amplitude E0, angular frequency
//! omega and wavenumber k, with the nucleus at X0, is shifted by
//!
//!   (E0^2/omega^2) [ sin^2(k X0) (1 - 2<sin^2(k x)>) + <sin^2(k x)> ],
//!
//! while the metastable state sees -E0^2 alpha(omega) sin^2(k X0).  The
//! transition is insensitive to X0 when alpha(omega) + (1 - 2<sin^2>)/omega^2 = 0.

use crate::atom::Atom;
use crate::error::{Error, Result};
use crate::numerics::bracketed_root;
use crate::polarizability::ac_polarizability_metastable;
use crate::species::{RydbergState, SpeciesData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    /// Lattice angular frequency, a.u.
    pub omega: f64,
    /// Effective lattice wavenumber, a.u.; at most omega / c.
    pub k: f64,
    /// Antinode intensity, kW/cm^2.
    pub intensity_kw_cm2: f64,
    /// Nuclear position along the lattice axis, bohr.
    pub x0: f64,
}

impl LatticeConfig {
    /// Lattice of vacuum wavelength `nm` whose effective wavenumber is
    /// `ratio` times omega/c (1 for counterpropagating beams).
    pub fn from_wavelength(species: &SpeciesData, nm: f64, ratio: f64, intensity_kw_cm2: f64, x0: f64) -> Result<Self> {
        let omega = species.constants.omega_from_nm(nm);
        let cfg = Self { omega, k: ratio * omega / species.constants.c_au, intensity_kw_cm2, x0 };
        cfg.validate(species)?;
        Ok(cfg)
    }

    pub fn validate(&self, species: &SpeciesData) -> Result<()> {
        let kmax = self.omega / species.constants.c_au;
        if !(self.omega > 0.0 && self.k > 0.0 && self.k <= kmax * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "lattice needs omega > 0 and 0 < k <= omega/c (k = {}, omega/c = {kmax})",
                self.k
            )));
        }
        if !(self.intensity_kw_cm2 >= 0.0) {
            return Err(Error::InvalidArgument("lattice intensity must be >= 0".into()));
        }
        Ok(())
    }

    /// Lattice period pi / k in micrometres.
    pub fn spacing_um(&self, species: &SpeciesData) -> f64 {
        std::f64::consts::PI / self.k * species.constants.bohr_m * 1e6
    }
}

/// Wavenumber (a.u.) of a lattice with the given period in micrometres.
pub fn k_from_spacing_um(species: &SpeciesData, spacing_um: f64) -> f64 {
    std::f64::consts::PI / (spacing_um * 1e-6 / species.constants.bohr_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergLatticeShift {
    /// Coefficient of sin^2(k X0) times sin^2(k X0), Hz.
    pub position_dependent_hz: f64,
    /// X0-independent part, Hz.
    pub position_independent_hz: f64,
    /// <sin^2(k x)> over the Rydberg orbit.
    pub sin2: f64,
}

impl RydbergLatticeShift {
    pub fn total_hz(&self) -> f64 {
        self.position_dependent_hz + self.position_independent_hz
    }
}

pub fn rydberg_lattice_shift(atom: &Atom, st: &RydbergState, cfg: &LatticeConfig) -> Result<RydbergLatticeShift> {
    cfg.validate(&atom.species)?;
    let k = &atom.species.constants;
    let s = atom.sin2_matrix_element(st, cfg.k)?;
    let pref = k.lattice_e0_sq(cfg.intensity_kw_cm2) / (cfg.omega * cfg.omega) * k.hartree_hz;
    let node = (cfg.k * cfg.x0).sin().powi(2);
    Ok(RydbergLatticeShift {
        position_dependent_hz: pref * node * (1.0 - 2.0 * s),
        position_independent_hz: pref * s,
        sin2: s,
    })
}

/// -E0^2 alpha(omega) sin^2(k X0), Hz.
pub fn metastable_lattice_shift(species: &SpeciesData, cfg: &LatticeConfig) -> Result<f64> {
    cfg.validate(species)?;
    let k = &species.constants;
    let alpha = ac_polarizability_metastable(species, cfg.omega)?.value;
    Ok(-k.lattice_e0_sq(cfg.intensity_kw_cm2) * alpha * (cfg.k * cfg.x0).sin().powi(2) * k.hartree_hz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagicResult {
    pub wavelength_nm: f64,
    pub omega: f64,
    /// Metastable polarizability at the root, kHz/(kW/cm^2) (signed).
    pub alpha_khz_per_kw_cm2: f64,
    /// Metastable polarizability at the root, a.u.
    pub alpha_au: f64,
    /// Value of alpha + (1 - 2<sin^2>)/omega^2 at the root, a.u.
    pub residual: f64,
    pub sin2: f64,
    /// Sub-bracket (nm) that contained the root.
    pub bracket_nm: (f64, f64),
    /// A trapping magic wavelength needs alpha < 0.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicSettings {
    /// k / (omega / c).
    pub k_ratio: f64,
    /// Scan points across the window.
    pub scan_points: usize,
    /// Relative tolerance on omega.
    pub tolerance: f64,
    /// Replace <sin^2> by 0 (dipole approximation).
    pub dipole_only: bool,
}

impl Default for MagicSettings {
    fn default() -> Self {
        Self { k_ratio: 1.0, scan_points: 120, tolerance: 1e-10, dipole_only: false }
    }
}

/// Magic-condition residual at angular frequency `omega`.
pub fn magic_residual(atom: &Atom, st: &RydbergState, omega: f64, settings: &MagicSettings) -> Result<(f64, f64, f64)> {
    let alpha = ac_polarizability_metastable(&atom.species, omega)?.value;
    let s = if settings.dipole_only {
        0.0
    } else {
        atom.sin2_matrix_element(st, settings.k_ratio * omega / atom.species.constants.c_au)?
    };
    Ok((alpha + (1.0 - 2.0 * s) / (omega * omega), alpha, s))
}

/// All roots of the magic condition in [lo_nm, hi_nm].  Sub-brackets that
/// straddle a metastable resonance are skipped (the sign change there is a
/// pole); if no root remains the error names the bracket.
pub fn solve_magic_wavelength(
    atom: &Atom,
    st: &RydbergState,
    lo_nm: f64,
    hi_nm: f64,
    settings: &MagicSettings,
) -> Result<Vec<MagicResult>> {
    if !(lo_nm > 0.0 && hi_nm > lo_nm) {
        return Err(Error::InvalidArgument(format!("bad wavelength window [{lo_nm}, {hi_nm}] nm")));
    }
    if !(settings.k_ratio > 0.0 && settings.k_ratio <= 1.0) {
        return Err(Error::InvalidArgument("k ratio must lie in (0, 1]".into()));
    }
    let sp = &atom.species;
    let k = &sp.constants;
    let lines = &sp.metastable()?.state.lines;
    let resonances: Vec<f64> = lines.iter().map(|l| l.omega.abs()).collect();
    let npts = settings.scan_points.max(2);
    let w_hi = k.omega_from_nm(lo_nm);
    let w_lo = k.omega_from_nm(hi_nm);
    let grid: Vec<f64> = (0..=npts).map(|i| w_lo + (w_hi - w_lo) * i as f64 / npts as f64).collect();

    let eval = |w: f64| -> Option<f64> { magic_residual(atom, st, w, settings).ok().map(|r| r.0) };
    let mut vals = Vec::with_capacity(grid.len());
    for &w in &grid {
        vals.push(eval(w));
    }
    let mut roots = Vec::new();
    let mut spans_resonance = None;
    for i in 0..npts {
        let (a, b) = (grid[i], grid[i + 1]);
        let (Some(fa), Some(fb)) = (vals[i], vals[i + 1]) else { continue };
        if fa.signum() == fb.signum() {
            continue;
        }
        if let Some(r) = resonances.iter().find(|&&r| r >= a && r <= b) {
            spans_resonance = Some(*r);
            continue;
        }
        let mut failed = None;
        let root = bracketed_root(
            |w| match magic_residual(atom, st, w, settings) {
                Ok(r) => r.0,
                Err(e) => {
                    failed.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            settings.tolerance,
        );
        if let Some(e) = failed {
            return Err(e);
        }
        let Some(w) = root else {
            return Err(Error::NonConvergence(format!("magic root in [{a}, {b}] a.u.")));
        };
        let (res, alpha, s) = magic_residual(atom, st, w, settings)?;
        roots.push(MagicResult {
            wavelength_nm: k.nm_from_omega(w),
            omega: w,
            alpha_khz_per_kw_cm2: alpha * k.pol_au_in_khz_per_kw_cm2(),
            alpha_au: alpha,
            residual: res,
            sin2: s,
            bracket_nm: (k.nm_from_omega(b), k.nm_from_omega(a)),
            valid: alpha < 0.0,
        });
    }
    if roots.is_empty() {
        if let Some(r) = spans_resonance {
            return Err(Error::NoRoot { lo_nm, hi_nm }).map_err(|_| {
                Error::NonConvergence(format!(
                    "only sign change in [{lo_nm}, {hi_nm}] nm is the metastable resonance at {:.3} nm",
                    k.nm_from_omega(r)
                ))
            });
        }
        return Err(Error::NoRoot { lo_nm, hi_nm });
    }
    roots.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
    Ok(roots)
}

/// Valid root nearest the midpoint of the species' configured window, for
/// the configured magic series member `n`.
pub fn default_magic(atom: &Atom, n: u32, settings: &MagicSettings) -> Result<(RydbergState, MagicResult)> {
    let mc = atom.species.magic()?.clone();
    let st = atom.species.state(mc.series, n)?;
    let roots = solve_magic_wavelength(atom, &st, mc.window_min_nm, mc.window_max_nm, settings)?;
    let mid = 0.5 * (mc.window_min_nm + mc.window_max_nm);
    let best = roots
        .into_iter()
        .filter(|r| r.valid)
        .min_by(|a, b| (a.wavelength_nm - mid).abs().total_cmp(&(b.wavelength_nm - mid).abs()))
        .ok_or(Error::NoRoot { lo_nm: mc.window_min_nm, hi_nm: mc.window_max_nm })?;
    Ok((st, best))
}

/// Depth |alpha(omega_m)| I of the metastable-state lattice, Hz.
pub fn trap_depth(magic: &MagicResult, intensity_kw_cm2: f64) -> Result<f64> {
    if !(intensity_kw_cm2 >= 0.0) {
        return Err(Error::InvalidArgument("intensity must be >= 0".into()));
    }
    Ok(magic.alpha_khz_per_kw_cm2.abs() * 1e3 * intensity_kw_cm2)
}

/// Excitation wavelength (nm) from the metastable state to `st` using
/// `photons` equal photons.
pub fn transition_wavelength(species: &SpeciesData, st: &RydbergState, photons: u32) -> Result<f64> {
    if photons == 0 {
        return Err(Error::InvalidArgument("photon number must be >= 1".into()));
    }
    let de = st.energy - species.metastable()?.state.energy;
    if !(de > 1e-9 * st.energy.abs()) {
        return Err(Error::InvalidState(format!("{st} lies below the metastable state")));
    }
    Ok(photons as f64 * species.constants.nm_from_omega(de))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn yb() -> Atom {
        Atom::load("yb").unwrap()
    }

    #[test]
    fn yb_n25_magic() {
        let a = yb();
        let (_, m) = default_magic(&a, 25, &MagicSettings::default()).unwrap();
        assert!((m.wavelength_nm / 1203.0 - 1.0).abs() < 0.02);
        assert!(m.valid);
        assert!(m.residual.abs() < 1e-8 * m.alpha_au.abs());
    }

    #[test]
    fn dipole_only_root_matches_free_electron_condition() {
        let a = yb();
        let st = a.species.state_str("3P0", 25).unwrap();
        let s = MagicSettings { dipole_only: true, ..Default::default() };
        let roots = solve_magic_wavelength(&a, &st, 1100.0, 1250.0, &s).unwrap();
        for r in roots {
            assert_relative_eq!(r.alpha_au, -1.0 / (r.omega * r.omega), max_relative = 1e-8);
        }
    }

    #[test]
    fn magic_wavelength_monotone_in_n() {
        let a = yb();
        let lams: Vec<f64> = (15..=40)
            .step_by(5)
            .map(|n| default_magic(&a, n, &MagicSettings::default()).unwrap().1.wavelength_nm)
            .collect();
        assert!(lams.windows(2).all(|w| w[1] < w[0]), "{lams:?}");
    }

    #[test]
    fn transition_wavelengths() {
        let a = yb();
        let s15 = a.species.state_str("3P0", 15).unwrap();
        assert!((transition_wavelength(&a.species, &s15, 2).unwrap() / 620.2 - 1.0).abs() < 5e-3);
        let sr = crate::species::load_named("sr").unwrap();
        let s = sr.state_str("3D1", 30).unwrap();
        assert!(transition_wavelength(&sr, &s, 1).unwrap() < 319.0);
        let low = sr.state_str("3S1", 6).unwrap();
        assert!(transition_wavelength(&sr, &low, 1).is_ok());
        assert!(transition_wavelength(&sr, &sr.state_str("3P0", 5).unwrap(), 1).is_err());
    }

    #[test]
    fn trap_depth_linear() {
        let a = yb();
        let (_, m) = default_magic(&a, 15, &MagicSettings::default()).unwrap();
        assert_eq!(trap_depth(&m, 0.0).unwrap(), 0.0);
        assert_eq!(trap_depth(&m, 2.0).unwrap(), 2.0 * trap_depth(&m, 1.0).unwrap());
    }

    #[test]
    fn lattice_shift_geometry() {
        let a = yb();
        let sp = &a.species;
        let st = sp.state_str("3P0", 25).unwrap();
        let node = LatticeConfig::from_wavelength(sp, 1203.0, 1.0, 10.0, 0.0).unwrap();
        let r = rydberg_lattice_shift(&a, &st, &node).unwrap();
        assert_eq!(r.position_dependent_hz, 0.0);
        assert_eq!(metastable_lattice_shift(sp, &node).unwrap(), 0.0);
        let quarter = std::f64::consts::FRAC_PI_2 / node.k;
        let anti = LatticeConfig { x0: quarter, ..node };
        let alpha = ac_polarizability_metastable(sp, anti.omega).unwrap().value;
        let full = -sp.constants.lattice_e0_sq(10.0) * alpha * sp.constants.hartree_hz;
        assert_relative_eq!(metastable_lattice_shift(sp, &anti).unwrap(), full, max_relative = 1e-12);
        assert!(metastable_lattice_shift(sp, &anti).unwrap() > 0.0);
        // large-orbit limit: position dependence vanishes
        let hi = a.species.state_str("3P0", 60).unwrap();
        let uv = LatticeConfig::from_wavelength(sp, 400.0, 1.0, 10.0, quarter).unwrap();
        let r = rydberg_lattice_shift(&a, &hi, &uv).unwrap();
        assert!(r.position_dependent_hz.abs() < 0.05 * r.position_independent_hz);
        let k_far = 100.0 / (hi.n_eff * hi.n_eff);
        assert!((a.sin2_matrix_element(&hi, k_far).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn position_independent_term_shrinks_with_spacing() {
        let a = Atom::load("sr").unwrap();
        let st = a.state("3S1", 25).unwrap();
        let mut prev = f64::INFINITY;
        for um in [1.0, 2.0, 4.0, 8.0] {
            let s = a.sin2_matrix_element(&st, k_from_spacing_um(&a.species, um)).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn rejects_bad_lattice() {
        let sp = crate::species::load_named("yb").unwrap();
        assert!(LatticeConfig::from_wavelength(&sp, 1200.0, 1.5, 1.0, 0.0).is_err());
        assert!(LatticeConfig::from_wavelength(&sp, 1200.0, 1.0, -1.0, 0.0).is_err());
    }
}
