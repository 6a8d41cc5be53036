//! Blackbody-radiation Stark shifts, asymptotic limits and BBR/natural
//! linewidths.
//!
//! Shifts are computed in atomic units and reported in Hz (energy shift
//! divided by h).  Widths are reported as Gamma / 2pi in Hz.

use std::f64::consts::PI;

use crate::atom::{Atom, Channel, TransitionTable};
use crate::error::{Error, Result};
use crate::fw::farley_wing;
use crate::numerics::{compensated_sum, integrate_pieces, CompensatedSum};
use crate::species::{ListedState, RydbergState};
use crate::units::PhysicalConstants;

/// Highest temperature accepted anywhere.
pub const T_MAX: f64 = 1000.0;

pub fn check_temperature(t: f64) -> Result<()> {
    if (0.0..=T_MAX).contains(&t) {
        Ok(())
    } else {
        Err(Error::TemperatureRange(t))
    }
}

/// Planck spectral density of the squared field, 8 omega^3 / (pi c^3 (e^{omega/kT} - 1)).
pub fn planck_spectral_density(omega: f64, t: f64, k: &PhysicalConstants) -> f64 {
    let kt = k.kt(t);
    if kt <= 0.0 || omega <= 0.0 {
        return 0.0;
    }
    let x = omega / kt;
    if x > 700.0 {
        return 0.0;
    }
    8.0 * omega.powi(3) / (PI * k.c_au.powi(3) * x.exp_m1())
}

fn planck_derivative(omega: f64, kt: f64, c: f64) -> f64 {
    let x = omega / kt;
    if x > 700.0 {
        return 0.0;
    }
    let em = x.exp_m1();
    8.0 / (PI * c.powi(3)) * (3.0 * omega * omega / em - omega.powi(3) * (em + 1.0) / (kt * em * em))
}

/// Integral of the spectral density over all frequencies,
/// 8 pi^3 (kT)^4 / (15 c^3).
pub fn total_field_squared(t: f64, k: &PhysicalConstants) -> f64 {
    8.0 * PI.powi(3) * k.kt(t).powi(4) / (15.0 * k.c_au.powi(3))
}

/// RMS blackbody field in V/m, sqrt(<E^2>) with <E^2> = half the integrated
/// spectral density.
pub fn rms_field_v_per_m(t: f64, k: &PhysicalConstants) -> f64 {
    (0.5 * total_field_squared(t, k)).sqrt() * k.field_au_v_per_m
}

/// Free-electron (ponderomotive) shift pi (kT)^2 / (3 c^3), in Hz.
pub fn free_electron_shift(t: f64, k: &PhysicalConstants) -> f64 {
    PI * k.kt(t).powi(2) / (3.0 * k.c_au.powi(3)) * k.hartree_hz
}

/// Temperature derivative of [`free_electron_shift`], Hz/K.
pub fn free_electron_sensitivity(t: f64, k: &PhysicalConstants) -> f64 {
    2.0 * PI * k.kb_au_per_k * k.kt(t) / (3.0 * k.c_au.powi(3)) * k.hartree_hz
}

/// Low-frequency limit -2 pi^3 alpha0 (kT)^4 / (15 c^3), in Hz.
pub fn static_limit_shift(alpha0: f64, t: f64, k: &PhysicalConstants) -> f64 {
    -2.0 * PI.powi(3) * alpha0 * k.kt(t).powi(4) / (15.0 * k.c_au.powi(3)) * k.hartree_hz
}

/// Shift (a.u.) of one channel with squared dipole `z2` at frequency `omega`.
fn channel_shift_au(z2: f64, omega: f64, kt: f64, c: f64) -> f64 {
    -2.0 / (PI * c.powi(3)) * kt.powi(3) * z2 * farley_wing(omega / kt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbrShiftResult {
    /// Total shift including the tail, Hz.
    pub shift_hz: f64,
    pub temperature: f64,
    /// Per-channel contributions, Hz, in table order.
    pub channels: Vec<(String, f64)>,
    /// Truncation tail, Hz.
    pub tail_hz: f64,
    pub converged: bool,
    pub span: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbrSettings {
    pub span: u32,
    /// Relative stability required between span and span - 10.
    pub tolerance: f64,
    /// Absolute floor for the stability test, Hz.
    pub floor_hz: f64,
}

impl Default for BbrSettings {
    fn default() -> Self {
        Self { span: 35, tolerance: 1e-3, floor_hz: 1e-3 }
    }
}

/// Free-electron completion of the sum: the oscillator strength missing from
/// the table, 1 - sum f, shifted as if concentrated at the ionization
/// threshold, (1 - sum f) FE(T) g(y), with g(y) = -3 F(y)/(pi^2 y) -> 1 for
/// y -> 0.
pub fn tail_shift_hz(atom: &Atom, table: &TransitionTable, channels: &[&Channel], t: f64) -> f64 {
    let k = &atom.species.constants;
    if t == 0.0 {
        return 0.0;
    }
    let missing = 1.0 - compensated_sum(channels.iter().map(|c| c.oscillator_strength()));
    let y = atom.species.binding_energy(&table.state) / k.kt(t);
    let g = -3.0 * farley_wing(y) / (PI * PI * y);
    missing * free_electron_shift(t, k) * g
}

fn sum_over(atom: &Atom, table: &TransitionTable, channels: &[&Channel], t: f64) -> (Vec<(String, f64)>, f64, f64) {
    let k = &atom.species.constants;
    let kt = k.kt(t);
    let contrib: Vec<(String, f64)> = channels
        .iter()
        .map(|c| {
            let v = if kt > 0.0 { channel_shift_au(c.line_strength, c.omega, kt, k.c_au) * k.hartree_hz } else { 0.0 };
            (c.id(), v)
        })
        .collect();
    let tail = tail_shift_hz(atom, table, channels, t);
    let total = compensated_sum(contrib.iter().map(|(_, v)| *v)) + tail;
    (contrib, tail, total)
}

/// Sum-over-states BBR shift for an already built table, with the
/// span-stability convergence test against the sub-table of span - 10.
pub fn bbr_shift_from_table(atom: &Atom, table: &TransitionTable, t: f64, settings: &BbrSettings) -> Result<BbrShiftResult> {
    check_temperature(t)?;
    let all: Vec<&Channel> = table.channels.iter().collect();
    let (channels, tail_hz, shift_hz) = sum_over(atom, table, &all, t);
    let inner = table.span.saturating_sub(10).max(1);
    let n = table.state.n;
    let sub: Vec<&Channel> = table
        .channels
        .iter()
        .filter(|c| c.target.n <= n + inner)
        .collect();
    let (_, _, coarse) = sum_over(atom, table, &sub, t);
    let converged = (shift_hz - coarse).abs() <= (settings.tolerance * shift_hz.abs()).max(settings.floor_hz);
    Ok(BbrShiftResult { shift_hz, temperature: t, channels, tail_hz, converged, span: table.span })
}

/// Sum-over-states BBR shift of a Rydberg state.
pub fn bbr_shift_sum(atom: &Atom, st: &RydbergState, t: f64, settings: &BbrSettings) -> Result<BbrShiftResult> {
    check_temperature(t)?;
    let table = atom.transition_table(st, settings.span)?;
    bbr_shift_from_table(atom, &table, t, settings)
}

/// Pole bookkeeping for the frequency integral.
struct PoleModel {
    /// (|omega_k|, sign(omega_k) z^2) for every channel.
    regular: Vec<(f64, f64)>,
    /// Distinct pole positions p and the coefficient s of s/(omega - p).
    poles: Vec<(f64, f64)>,
}

impl PoleModel {
    fn new(channels: &[(f64, f64)]) -> Self {
        let mut regular = Vec::with_capacity(channels.len());
        let mut poles: Vec<(f64, f64)> = Vec::new();
        for &(omega, z2) in channels {
            let p = omega.abs();
            let sg = omega.signum();
            regular.push((p, sg * z2));
            poles.push((p, -sg * z2));
        }
        poles.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(poles.len());
        for (p, s) in poles {
            match merged.last_mut() {
                Some(last) if (p - last.0).abs() <= 1e-13 * p => last.1 += s,
                _ => merged.push((p, s)),
            }
        }
        Self { regular, poles: merged }
    }

    fn regular_part(&self, omega: f64) -> f64 {
        let mut s = CompensatedSum::new();
        for &(p, a) in &self.regular {
            s.add(a / (p + omega));
        }
        s.value()
    }

    /// alpha(omega) with the singular term of pole `skip` removed.
    fn alpha_without(&self, omega: f64, skip: Option<usize>) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.regular_part(omega));
        for (i, &(p, c)) in self.poles.iter().enumerate() {
            if Some(i) != skip {
                s.add(c / (omega - p));
            }
        }
        s.value()
    }
}

/// Evaluate -(1/4) integral rho(omega, T) alpha(omega) d omega (a.u.) for a
/// polarizability built from signed channels (omega_k, z_k^2), taking the
/// principal value at each resonance by pairing points symmetric about it.
pub fn field_integral_shift_au(channels: &[(f64, f64)], t: f64, k: &PhysicalConstants) -> f64 {
    let kt = k.kt(t);
    if kt <= 0.0 || channels.is_empty() {
        return 0.0;
    }
    let c = k.c_au;
    let rho = |w: f64| planck_spectral_density(w, t, k);
    let model = PoleModel::new(channels);
    let cutoff = 80.0 * kt;
    let inside: Vec<usize> = (0..model.poles.len()).filter(|&i| model.poles[i].0 < cutoff).collect();

    let scale = 0.25 * total_field_squared(t, k) * channels.iter().map(|&(w, z2)| z2 / w.abs().max(kt)).sum::<f64>();
    let pieces = (2 * inside.len() + 1) as f64;
    let tol = 1e-10 * scale / pieces;
    let breaks: Vec<f64> = [0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 40.0].iter().map(|b| b * kt).collect();

    let half_width = |i: usize| {
        let p = model.poles[i].0;
        let mut d = 0.5 * p;
        if i > 0 {
            d = d.min(0.5 * (p - model.poles[i - 1].0));
        }
        if i + 1 < model.poles.len() {
            d = d.min(0.5 * (model.poles[i + 1].0 - p));
        }
        d
    };

    let full = |w: f64| rho(w) * model.alpha_without(w, None);
    let mut total = CompensatedSum::new();
    let mut left = 0.0;
    for &i in &inside {
        let (p, s) = model.poles[i];
        let d = half_width(i);
        total.add(integrate_pieces(&full, left, p - d, &breaks, tol));
        let pair = |tt: f64| {
            let sing = if tt < 1e-9 * p {
                2.0 * s * planck_derivative(p, kt, c)
            } else {
                s * (rho(p + tt) - rho(p - tt)) / tt
            };
            rho(p + tt) * model.alpha_without(p + tt, Some(i)) + rho(p - tt) * model.alpha_without(p - tt, Some(i)) + sing
        };
        total.add(integrate_pieces(&pair, 0.0, d, &[], tol));
        left = p + d;
    }
    total.add(integrate_pieces(&full, left, cutoff.max(left), &breaks, tol));
    -0.25 * total.value()
}

/// BBR shift from the frequency integral over the table's polarizability,
/// plus the same free-electron tail as [`bbr_shift_sum`].
pub fn bbr_shift_integral(atom: &Atom, table: &TransitionTable, t: f64) -> Result<BbrShiftResult> {
    check_temperature(t)?;
    let k = &atom.species.constants;
    let chans: Vec<(f64, f64)> = table.channels.iter().map(|c| (c.omega, c.line_strength)).collect();
    let integral = field_integral_shift_au(&chans, t, k) * k.hartree_hz;
    if !integral.is_finite() {
        return Err(Error::NonConvergence(format!("BBR frequency integral for {} at {t} K", table.state)));
    }
    let all: Vec<&Channel> = table.channels.iter().collect();
    let tail_hz = tail_shift_hz(atom, table, &all, t);
    Ok(BbrShiftResult {
        shift_hz: integral + tail_hz,
        temperature: t,
        channels: vec![("integral".into(), integral)],
        tail_hz,
        converged: true,
        span: table.span,
    })
}

/// Squared dipole of a listed line, z^2 = d^2 / (3(2J+1)).
pub fn listed_line_strength(state: &ListedState, d: f64) -> f64 {
    d * d / (3.0 * (2 * state.j + 1) as f64)
}

/// BBR shift (Hz) of a low-lying state described by a line list plus a
/// frequency-independent remainder, which enters through the static limit.
pub fn listed_state_shift(state: &ListedState, t: f64, k: &PhysicalConstants) -> Result<f64> {
    check_temperature(t)?;
    let kt = k.kt(t);
    if kt == 0.0 {
        return Ok(0.0);
    }
    let lines = compensated_sum(
        state
            .lines
            .iter()
            .map(|l| channel_shift_au(listed_line_strength(state, l.d), l.omega, kt, k.c_au) * k.hartree_hz),
    );
    Ok(lines + static_limit_shift(state.core, t, k))
}

/// Frequency-integral counterpart of [`listed_state_shift`].
pub fn listed_state_shift_integral(state: &ListedState, t: f64, k: &PhysicalConstants) -> Result<f64> {
    check_temperature(t)?;
    let chans: Vec<(f64, f64)> = state.lines.iter().map(|l| (l.omega, listed_line_strength(state, l.d))).collect();
    Ok(field_integral_shift_au(&chans, t, k) * k.hartree_hz + static_limit_shift(state.core, t, k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinewidthResult {
    /// Gamma_nat / 2pi, Hz.
    pub natural_hz: f64,
    /// Gamma_BBR / 2pi, Hz.
    pub bbr_hz: f64,
    pub total_hz: f64,
}

/// Einstein A coefficient (s^-1) of one channel, 4 |omega|^3 z^2 / c^3.
pub fn einstein_a(channel: &Channel, k: &PhysicalConstants) -> f64 {
    4.0 * channel.omega.abs().powi(3) * channel.line_strength / k.c_au.powi(3) / k.time_au_s
}

/// Total spontaneous decay rate (s^-1), downward channels only.
pub fn spontaneous_rate(table: &TransitionTable, k: &PhysicalConstants) -> f64 {
    compensated_sum(table.channels.iter().filter(|c| c.omega < 0.0).map(|c| einstein_a(c, k)))
}

/// Natural linewidth Gamma/2pi in Hz.
pub fn natural_linewidth(table: &TransitionTable, k: &PhysicalConstants) -> f64 {
    spontaneous_rate(table, k) / (2.0 * PI)
}

fn bose(omega: f64, kt: f64) -> f64 {
    if kt <= 0.0 {
        return 0.0;
    }
    let x = omega.abs() / kt;
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// BBR-induced depopulation Gamma_BBR/2pi in Hz: stimulated emission and
/// absorption to every channel, A n(omega, T).
pub fn bbr_depopulation_rate(table: &TransitionTable, t: f64, k: &PhysicalConstants) -> Result<f64> {
    check_temperature(t)?;
    let kt = k.kt(t);
    Ok(compensated_sum(table.channels.iter().map(|c| einstein_a(c, k) * bose(c.omega, kt))) / (2.0 * PI))
}

pub fn linewidth(atom: &Atom, st: &RydbergState, t: f64, span: u32) -> Result<LinewidthResult> {
    check_temperature(t)?;
    let table = atom.transition_table(st, span)?;
    let k = &atom.species.constants;
    let natural_hz = natural_linewidth(&table, k);
    let bbr_hz = bbr_depopulation_rate(&table, t, k)?;
    Ok(LinewidthResult { natural_hz, bbr_hz, total_hz: natural_hz + bbr_hz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k() -> &'static PhysicalConstants {
        PhysicalConstants::codata2018()
    }

    #[test]
    fn zero_temperature_vanishes() {
        assert_eq!(planck_spectral_density(0.01, 0.0, k()), 0.0);
        assert_eq!(free_electron_shift(0.0, k()), 0.0);
        assert_eq!(free_electron_sensitivity(0.0, k()), 0.0);
        assert_eq!(static_limit_shift(100.0, 0.0, k()), 0.0);
        let sr = Atom::load("sr").unwrap();
        let st = sr.state("3S1", 20).unwrap();
        let r = bbr_shift_sum(&sr, &st, 0.0, &BbrSettings { span: 15, ..Default::default() }).unwrap();
        assert_eq!(r.shift_hz, 0.0);
        let table = sr.transition_table(&st, 15).unwrap();
        assert_eq!(bbr_shift_integral(&sr, &table, 0.0).unwrap().shift_hz, 0.0);
        assert_eq!(bbr_depopulation_rate(&table, 0.0, k()).unwrap(), 0.0);
    }

    #[test]
    fn rms_field_at_room_temperature() {
        // numerically integrated spectral density agrees with the closed form
        let num = integrate_pieces(&|w| planck_spectral_density(w, 300.0, k()), 0.0, 0.1, &[0.002, 0.01], 1e-30);
        assert_relative_eq!(num, total_field_squared(300.0, k()), max_relative = 1e-9);
        assert_relative_eq!(rms_field_v_per_m(300.0, k()), 832.0, max_relative = 5e-3);
    }

    #[test]
    fn spectral_peak_position() {
        let kt = k().kt(300.0);
        let root = crate::numerics::bracketed_root(
            |x| planck_derivative(x * kt, kt, k().c_au),
            1.0,
            5.0,
            1e-12,
        )
        .unwrap();
        assert!((root - 2.8214).abs() < 1e-3);
    }

    #[test]
    fn free_electron_values() {
        assert_relative_eq!(free_electron_shift(300.0, k()), 2400.0, max_relative = 1e-2);
        assert_relative_eq!(free_electron_sensitivity(300.0, k()), 16.0, max_relative = 1e-2);
        assert_eq!(free_electron_shift(600.0, k()), 4.0 * free_electron_shift(300.0, k()));
        let h = 1e-3;
        let fd = (free_electron_shift(300.0 + h, k()) - free_electron_shift(300.0 - h, k())) / (2.0 * h);
        assert_relative_eq!(fd, free_electron_sensitivity(300.0, k()), max_relative = 1e-6);
    }

    #[test]
    fn static_limit_is_quartic() {
        let s = |t| static_limit_shift(200.0, t, k());
        let slope = (s(400.0) / s(200.0)).ln() / 2f64.ln();
        assert!((slope - 4.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_range_enforced() {
        assert!(matches!(check_temperature(-1.0), Err(Error::TemperatureRange(_))));
        assert!(matches!(check_temperature(1000.5), Err(Error::TemperatureRange(_))));
    }

    #[test]
    fn integral_matches_farley_wing_for_single_channels() {
        let kt = k().kt(300.0);
        for y in [-30.0, -2.0, -0.3, 0.05, 0.7, 3.0, 25.0, 300.0] {
            let sum = channel_shift_au(1.0, y * kt, kt, k().c_au);
            let int = field_integral_shift_au(&[(y * kt, 1.0)], 300.0, k());
            assert_relative_eq!(int, sum, max_relative = 1e-7);
        }
    }

    #[test]
    fn integral_handles_clustered_poles() {
        let kt = k().kt(300.0);
        let chans = [(0.9 * kt, 2.0), (-0.9 * kt, 1.0), (0.9001 * kt, 0.5), (4.0 * kt, -0.3), (-0.02 * kt, 3.0)];
        let sum: f64 = chans.iter().map(|&(w, z)| channel_shift_au(z, w, kt, k().c_au)).sum();
        let int = field_integral_shift_au(&chans, 300.0, k());
        assert_relative_eq!(int, sum, max_relative = 1e-7);
    }

    #[test]
    fn ground_state_matches_static_limit() {
        let sr = crate::species::load_named("sr").unwrap();
        let g = sr.ground.as_ref().unwrap();
        let alpha0 = g.core + g.lines.iter().map(|l| 2.0 * listed_line_strength(g, l.d) / l.omega).sum::<f64>();
        let sum = listed_state_shift(g, 300.0, k()).unwrap();
        assert_relative_eq!(sum, static_limit_shift(alpha0, 300.0, k()), max_relative = 1e-2);
        assert_relative_eq!(listed_state_shift_integral(g, 300.0, k()).unwrap(), sum, max_relative = 1e-6);
    }

    #[test]
    fn hydrogen_2p_einstein_a() {
        let h = Atom::load("h").unwrap();
        let p = h.state("1P1", 2).unwrap();
        let table = h.transition_table(&p, 1).unwrap();
        let a = spontaneous_rate(&table, &h.species.constants);
        assert_relative_eq!(a, 6.2649e8, max_relative = 1e-3);
    }

    #[test]
    fn widths_nonnegative_and_monotone_in_t() {
        let sr = Atom::load("sr").unwrap();
        let st = sr.state("3P1", 30).unwrap();
        let table = sr.transition_table(&st, 20).unwrap();
        assert!(natural_linewidth(&table, k()) >= 0.0);
        let mut prev = 0.0;
        for t in [0.0, 50.0, 150.0, 300.0, 600.0] {
            let g = bbr_depopulation_rate(&table, t, k()).unwrap();
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn span_convergence_flag() {
        let sr = Atom::load("sr").unwrap();
        let st = sr.state("3S1", 30).unwrap();
        let r35 = bbr_shift_sum(&sr, &st, 300.0, &BbrSettings::default()).unwrap();
        let r45 = bbr_shift_sum(&sr, &st, 300.0, &BbrSettings { span: 45, ..Default::default() }).unwrap();
        assert!(r35.converged);
        assert_relative_eq!(r35.shift_hz, r45.shift_hz, max_relative = 1e-3);
    }
}
