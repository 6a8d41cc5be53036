//! Scalar dynamic polarizabilities.
//!
//! For a Rydberg state the sum runs over its transition table,
//! alpha(omega) = sum_k 2 z_k^2 omega_k / (omega_k^2 - omega^2), completed by
//! the oscillator strength missing from the table placed at the ionization
//! threshold.  Listed (low-lying) states use their line list plus a constant
//! remainder.

use crate::atom::{Atom, TransitionTable};
use crate::bbr::listed_line_strength;
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::species::{ListedState, RydbergState, SpeciesData};
use crate::units::PhysicalConstants;

/// Fractional guard band around each resonance.
pub const GUARD_BAND: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizabilityResult {
    /// Atomic units.
    pub value: f64,
    /// Angular frequency, a.u.
    pub omega: f64,
    /// Contributions by channel id, a.u.
    pub channels: Vec<(String, f64)>,
    /// Detuning omega - |omega_k| from the nearest resonance, and its id.
    pub nearest_resonance: Option<(String, f64)>,
}

impl PolarizabilityResult {
    pub fn hz_m2_per_v2(&self, k: &PhysicalConstants) -> f64 {
        self.value * k.pol_au_in_hz_m2_per_v2()
    }

    pub fn khz_per_kw_cm2(&self, k: &PhysicalConstants) -> f64 {
        self.value * k.pol_au_in_khz_per_kw_cm2()
    }
}

fn term(z2: f64, omega_k: f64, omega: f64) -> f64 {
    2.0 * z2 * omega_k / (omega_k * omega_k - omega * omega)
}

fn guard(id: &str, omega_k: f64, omega: f64) -> Result<()> {
    if omega > 0.0 && (omega - omega_k.abs()).abs() < GUARD_BAND * omega {
        return Err(Error::ResonanceGuard { omega, resonance: id.to_string() });
    }
    Ok(())
}

fn nearest<I: Iterator<Item = (String, f64)>>(it: I, omega: f64) -> Option<(String, f64)> {
    it.map(|(id, w)| (id, omega - w.abs())).min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
}

/// Dynamic polarizability of a Rydberg state from a prepared table.
pub fn ac_polarizability_table(atom: &Atom, table: &TransitionTable, omega: f64) -> Result<PolarizabilityResult> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be >= 0, got {omega}")));
    }
    let mut channels = Vec::with_capacity(table.channels.len() + 1);
    let mut sum = CompensatedSum::new();
    let mut f_sum = CompensatedSum::new();
    for c in &table.channels {
        let id = c.id();
        guard(&id, c.omega, omega)?;
        let v = term(c.line_strength, c.omega, omega);
        sum.add(v);
        f_sum.add(c.oscillator_strength());
        channels.push((id, v));
    }
    let w_t = atom.species.binding_energy(&table.state);
    guard("threshold", w_t, omega)?;
    let tail = (1.0 - f_sum.value()) / (w_t * w_t - omega * omega);
    sum.add(tail);
    channels.push(("tail".into(), tail));
    let nearest_resonance = nearest(table.channels.iter().map(|c| (c.id(), c.omega)), omega);
    Ok(PolarizabilityResult { value: sum.value(), omega, channels, nearest_resonance })
}

pub fn ac_polarizability(atom: &Atom, st: &RydbergState, omega: f64, span: u32) -> Result<PolarizabilityResult> {
    let table = atom.transition_table(st, span)?;
    ac_polarizability_table(atom, &table, omega)
}

pub fn static_polarizability(atom: &Atom, st: &RydbergState, span: u32) -> Result<PolarizabilityResult> {
    ac_polarizability(atom, st, 0.0, span)
}

/// Dynamic polarizability of a listed state (line list plus constant remainder).
pub fn listed_polarizability(state: &ListedState, omega: f64) -> Result<PolarizabilityResult> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be >= 0, got {omega}")));
    }
    let mut channels = Vec::with_capacity(state.lines.len() + 1);
    let mut sum = CompensatedSum::new();
    for l in &state.lines {
        guard(&l.label, l.omega, omega)?;
        let v = term(listed_line_strength(state, l.d), l.omega, omega);
        sum.add(v);
        channels.push((l.label.clone(), v));
    }
    sum.add(state.core);
    channels.push(("core".into(), state.core));
    let nearest_resonance = nearest(state.lines.iter().map(|l| (l.label.clone(), l.omega)), omega);
    Ok(PolarizabilityResult { value: sum.value(), omega, channels, nearest_resonance })
}

/// Polarizability of the metastable clock state.
pub fn ac_polarizability_metastable(species: &SpeciesData, omega: f64) -> Result<PolarizabilityResult> {
    listed_polarizability(&species.metastable()?.state, omega)
}

/// DC Stark shift -alpha(0) E^2 / 2 in Hz for a field in V/m.  Rejects fields
/// whose shift exceeds a tenth of the distance to the nearest coupled level.
pub fn dc_stark_shift(atom: &Atom, st: &RydbergState, field_v_per_m: f64, span: u32) -> Result<f64> {
    if !(field_v_per_m >= 0.0) {
        return Err(Error::InvalidArgument(format!("field must be >= 0, got {field_v_per_m}")));
    }
    let table = atom.transition_table(st, span)?;
    let alpha = ac_polarizability_table(atom, &table, 0.0)?.value;
    let k = &atom.species.constants;
    let f = field_v_per_m / k.field_au_v_per_m;
    let shift_au = -0.5 * alpha * f * f;
    if let Some(gap) = table.channels.iter().map(|c| c.omega.abs()).reduce(f64::min) {
        if shift_au.abs() > 0.1 * gap {
            return Err(Error::NonPerturbative(format!(
                "{st}: shift {:.3e} Hz exceeds 10% of the nearest level spacing {:.3e} Hz",
                shift_au * k.hartree_hz,
                gap * k.hartree_hz
            )));
        }
    }
    Ok(shift_au * k.hartree_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sr() -> Atom {
        Atom::load("sr").unwrap()
    }

    #[test]
    fn static_equals_zero_frequency() {
        let a = sr();
        let st = a.state("3D1", 25).unwrap();
        let s = static_polarizability(&a, &st, 35).unwrap();
        let table = a.transition_table(&st, 35).unwrap();
        let direct = crate::numerics::compensated_sum(table.channels.iter().map(|c| 2.0 * c.line_strength / c.omega))
            + (1.0 - table.oscillator_sum()) / a.species.binding_energy(&st).powi(2);
        assert_relative_eq!(s.value, direct, max_relative = 1e-10);
    }

    #[test]
    fn free_electron_limit_far_above_resonances() {
        let a = sr();
        let st = a.state("3S1", 30).unwrap();
        let omega = 2.0;
        let v = ac_polarizability(&a, &st, omega, 35).unwrap().value;
        assert_relative_eq!(v, -1.0 / (omega * omega), max_relative = 1e-2);
    }

    #[test]
    fn nd_static_polarizability_negative() {
        let a = sr();
        for n in (20..=40).step_by(5) {
            let st = a.state("3D1", n).unwrap();
            assert!(static_polarizability(&a, &st, 35).unwrap().value < 0.0, "n={n}");
        }
    }

    #[test]
    fn metastable_sign_structure() {
        let a = sr();
        let k = &a.species.constants;
        assert!(ac_polarizability_metastable(&a.species, 0.0).unwrap().value > 0.0);
        assert!(ac_polarizability_metastable(&a.species, k.omega_from_nm(2390.0)).unwrap().value < 0.0);
        let yb = crate::species::load_named("yb").unwrap();
        let kk = &yb.constants;
        let v = ac_polarizability_metastable(&yb, kk.omega_from_nm(1203.0)).unwrap();
        assert!(v.value < 0.0);
        // exactly one sign change across the IR resonance
        let w_ir = yb.metastable().unwrap().state.lines[0].omega;
        let vals: Vec<f64> = (1..400)
            .map(|i| w_ir * (0.97 + 0.06 * i as f64 / 400.0))
            .filter(|w| (w - w_ir).abs() > GUARD_BAND * w)
            .map(|w| ac_polarizability_metastable(&yb, w).unwrap().value)
            .collect();
        let changes = vals.windows(2).filter(|p| p[0].signum() != p[1].signum()).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn monotone_between_resonances() {
        let yb = crate::species::load_named("yb").unwrap();
        let lines = &yb.metastable().unwrap().state.lines;
        let mut poles: Vec<f64> = lines.iter().map(|l| l.omega).collect();
        poles.sort_by(f64::total_cmp);
        for w in poles.windows(2) {
            let (a, b) = (w[0] * (1.0 + 2e-4), w[1] * (1.0 - 2e-4));
            let vals: Vec<f64> = (0..=200)
                .map(|i| a + (b - a) * i as f64 / 200.0)
                .map(|x| ac_polarizability_metastable(&yb, x).unwrap().value)
                .collect();
            assert!(vals.windows(2).all(|p| p[1] > p[0]));
        }
    }

    #[test]
    fn guard_band_reports_resonance() {
        let yb = crate::species::load_named("yb").unwrap();
        let w = yb.metastable().unwrap().state.lines[1].omega * (1.0 + 1e-6);
        assert!(matches!(ac_polarizability_metastable(&yb, w), Err(Error::ResonanceGuard { .. })));
    }

    #[test]
    fn unit_representations_consistent() {
        let a = sr();
        let k = &a.species.constants;
        let r = ac_polarizability_metastable(&a.species, 0.0).unwrap();
        let hz = crate::units::convert(r.value, crate::units::Unit::PolarizabilityAu, crate::units::Unit::HzM2PerV2, k).unwrap();
        assert_relative_eq!(hz, r.hz_m2_per_v2(k), max_relative = 1e-12);
        let khz = crate::units::convert(hz, crate::units::Unit::HzM2PerV2, crate::units::Unit::KhzPerKwCm2, k).unwrap();
        assert_relative_eq!(khz, r.khz_per_kw_cm2(k), max_relative = 1e-10);
    }

    #[test]
    fn dc_stark_quadratic_and_ratio() {
        let a = sr();
        let s25 = a.state("3D1", 25).unwrap();
        let s30 = a.state("3D1", 30).unwrap();
        assert_eq!(dc_stark_shift(&a, &s25, 0.0, 35).unwrap(), 0.0);
        let e1 = dc_stark_shift(&a, &s25, 1.0, 35).unwrap();
        let e2 = dc_stark_shift(&a, &s25, 2.0, 35).unwrap();
        assert_relative_eq!(e2, 4.0 * e1, max_relative = 1e-14);
        let r = dc_stark_shift(&a, &s30, 1.0, 35).unwrap() / e1;
        let ra = static_polarizability(&a, &s30, 35).unwrap().value / static_polarizability(&a, &s25, 35).unwrap().value;
        assert_relative_eq!(r, ra, max_relative = 1e-12);
        assert!(matches!(dc_stark_shift(&a, &s30, 1e5, 35), Err(Error::NonPerturbative(_))));
    }
}
