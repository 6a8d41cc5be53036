//! Rydberg-transition thermometry: BBR sensitivity of a transition,
//! temperature inversion, joint temperature / stray-field estimation and the
//! accuracy budget linking spectroscopy to clock BBR uncertainty.

use std::fmt;

use crate::atom::{Atom, TransitionTable};
use crate::bbr::{bbr_shift_from_table, check_temperature, listed_state_shift, BbrSettings, T_MAX};
use crate::error::{Error, Result};
use crate::polarizability::{ac_polarizability_table, listed_polarizability};
use crate::species::{ClockConstants, ListedState, RydbergState};

/// One end of a transition.
#[derive(Debug, Clone, PartialEq)]
pub enum Level {
    /// A low-lying state from the species line lists (e.g. the metastable state).
    Listed(ListedState),
    Rydberg(RydbergState),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Listed(s) => write!(f, "{}", s.label),
            Level::Rydberg(s) => write!(f, "{s}"),
        }
    }
}

enum Prepared {
    Listed(ListedState),
    Rydberg(TransitionTable),
}

/// A transition with its transition tables prepared once, so the BBR shift
/// can be evaluated cheaply at many temperatures.
pub struct TransitionModel<'a> {
    atom: &'a Atom,
    pub lower: Level,
    pub upper: Level,
    lo: Prepared,
    hi: Prepared,
    settings: BbrSettings,
}

impl<'a> TransitionModel<'a> {
    pub fn new(atom: &'a Atom, lower: Level, upper: Level, settings: BbrSettings) -> Result<Self> {
        let prep = |l: &Level| -> Result<Prepared> {
            Ok(match l {
                Level::Listed(s) => Prepared::Listed(s.clone()),
                Level::Rydberg(s) => Prepared::Rydberg(atom.transition_table(s, settings.span)?),
            })
        };
        let lo = prep(&lower)?;
        let hi = prep(&upper)?;
        Ok(Self { atom, lower, upper, lo, hi, settings })
    }

    /// Metastable state to a Rydberg state.
    pub fn from_metastable(atom: &'a Atom, upper: RydbergState, settings: BbrSettings) -> Result<Self> {
        let lower = Level::Listed(atom.species.metastable()?.state.clone());
        Self::new(atom, lower, Level::Rydberg(upper), settings)
    }

    pub fn id(&self) -> String {
        format!("{} -> {}", self.lower, self.upper)
    }

    fn level_shift(&self, p: &Prepared, t: f64) -> Result<(f64, bool)> {
        match p {
            Prepared::Listed(s) => Ok((listed_state_shift(s, t, &self.atom.species.constants)?, true)),
            Prepared::Rydberg(table) => {
                let r = bbr_shift_from_table(self.atom, table, t, &self.settings)?;
                Ok((r.shift_hz, r.converged))
            }
        }
    }

    /// BBR shift of the transition frequency (upper minus lower), Hz.
    pub fn bbr_shift(&self, t: f64) -> Result<f64> {
        Ok(self.level_shift(&self.hi, t)?.0 - self.level_shift(&self.lo, t)?.0)
    }

    /// Per-level shifts and whether both sums passed the span test.
    pub fn level_shifts(&self, t: f64) -> Result<(f64, f64, bool)> {
        let (l, cl) = self.level_shift(&self.lo, t)?;
        let (u, cu) = self.level_shift(&self.hi, t)?;
        Ok((l, u, cl && cu))
    }

    /// d(shift)/dT by Richardson-extrapolated central differences, Hz/K.
    pub fn sensitivity(&self, t: f64) -> Result<f64> {
        check_temperature(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let h = (1e-2 * t).min(1.0).min(0.5 * t).min(0.5 * (T_MAX - t).max(1e-6));
        let d = |h: f64| -> Result<f64> { Ok((self.bbr_shift(t + h)? - self.bbr_shift(t - h)?) / (2.0 * h)) };
        let d1 = d(h)?;
        let d2 = d(0.5 * h)?;
        Ok(d2 + (d2 - d1) / 3.0)
    }

    fn level_alpha(&self, p: &Prepared) -> Result<f64> {
        match p {
            Prepared::Listed(s) => Ok(listed_polarizability(s, 0.0)?.value),
            Prepared::Rydberg(table) => Ok(ac_polarizability_table(self.atom, table, 0.0)?.value),
        }
    }

    /// Differential static polarizability (upper minus lower), Hz m^2/V^2.
    pub fn static_polarizability_hz(&self) -> Result<f64> {
        let k = &self.atom.species.constants;
        Ok((self.level_alpha(&self.hi)? - self.level_alpha(&self.lo)?) * k.pol_au_in_hz_m2_per_v2())
    }

    /// Transition frequency, Hz.
    pub fn frequency_hz(&self) -> f64 {
        let e = |l: &Level| match l {
            Level::Listed(s) => s.energy,
            Level::Rydberg(s) => s.energy,
        };
        (e(&self.upper) - e(&self.lower)).abs() * self.atom.species.constants.hartree_hz
    }

    /// Forward model: BBR(T) - alpha E^2 / 2, Hz.
    pub fn offset(&self, t: f64, field_v_per_m: f64) -> Result<f64> {
        Ok(self.bbr_shift(t)? - 0.5 * self.static_polarizability_hz()? * field_v_per_m * field_v_per_m)
    }
}

/// Build a model from a transition id: `3D1:25` is the metastable state to
/// n = 25 of the 3D1 series; `3D1:40>3P0:41` is a Rydberg-Rydberg transition.
pub fn parse_transition<'a>(atom: &'a Atom, id: &str, settings: BbrSettings) -> Result<TransitionModel<'a>> {
    let member = |s: &str| -> Result<RydbergState> {
        let (series, n) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("transition id {id:?}: expected SERIES:N")))?;
        let n: u32 = n.trim().parse().map_err(|_| Error::InvalidArgument(format!("transition id {id:?}: bad n")))?;
        atom.state(series.trim(), n)
    };
    match id.split_once('>') {
        Some((a, b)) => TransitionModel::new(atom, Level::Rydberg(member(a)?), Level::Rydberg(member(b)?), settings),
        None => TransitionModel::from_metastable(atom, member(id)?, settings),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Offset from the T = 0, E = 0 transition frequency, Hz.
    pub offset_hz: f64,
    /// 1 sigma, Hz.
    pub sigma_hz: f64,
}

impl Measurement {
    pub fn new(offset_hz: f64, sigma_hz: f64) -> Result<Self> {
        if !(sigma_hz > 0.0) {
            return Err(Error::InvalidArgument(format!("measurement uncertainty must be > 0, got {sigma_hz}")));
        }
        Ok(Self { offset_hz, sigma_hz })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermometrySolution {
    pub temperature: f64,
    pub sigma_temperature: f64,
    pub field_v_per_m: f64,
    pub sigma_field: f64,
    /// Best-fit E^2 before clamping, (V/m)^2.
    pub field_sq: f64,
    /// True when the fitted E^2 was negative and clamped to 0.
    pub field_clamped: bool,
    /// Covariance of (T, E^2).
    pub covariance: [[f64; 2]; 2],
    /// Measured minus model, Hz.
    pub residuals: Vec<f64>,
}

/// Solve shift(T) = offset by a Newton iteration safeguarded with a bracket
/// on [0, 1000] K, starting from `seed`.
pub fn invert_temperature(model: &TransitionModel, m: &Measurement, seed: f64) -> Result<ThermometrySolution> {
    check_temperature(seed)?;
    let f = |t: f64| -> Result<f64> { Ok(model.bbr_shift(t)? - m.offset_hz) };
    let (mut lo, mut hi) = (0.0, T_MAX);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(ThermometrySolution {
            temperature: 0.0,
            sigma_temperature: f64::INFINITY,
            field_v_per_m: 0.0,
            sigma_field: 0.0,
            field_sq: 0.0,
            field_clamped: false,
            covariance: [[f64::INFINITY, 0.0], [0.0, 0.0]],
            residuals: vec![0.0],
        });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidArgument(format!(
            "offset {} Hz outside the invertible range [{}, {}] Hz",
            m.offset_hz,
            flo + m.offset_hz,
            fhi + m.offset_hz
        )));
    }
    let rising = fhi > flo;
    let mut t = seed.clamp(lo, hi);
    let mut converged = false;
    for _ in 0..100 {
        let v = f(t)?;
        if v == 0.0 {
            converged = true;
            break;
        }
        if (v > 0.0) == rising {
            hi = t;
        } else {
            lo = t;
        }
        let slope = model.sensitivity(t.max(1e-3))?;
        let mut next = t - v / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < 1e-10 * t.max(1.0) {
            t = next;
            converged = true;
            break;
        }
        t = next;
    }
    if !converged {
        return Err(Error::NonConvergence(format!("temperature inversion for offset {} Hz", m.offset_hz)));
    }
    let slope = model.sensitivity(t)?;
    let sigma_t = m.sigma_hz / slope.abs();
    Ok(ThermometrySolution {
        temperature: t,
        sigma_temperature: sigma_t,
        field_v_per_m: 0.0,
        sigma_field: 0.0,
        field_sq: 0.0,
        field_clamped: false,
        covariance: [[sigma_t * sigma_t, 0.0], [0.0, 0.0]],
        residuals: vec![m.offset_hz - model.bbr_shift(t)?],
    })
}

/// Weighted least squares for (T, E^2) from transitions with distinct static
/// polarizabilities; the model is offset_i = BBR_i(T) - alpha_i E^2 / 2.
pub fn joint_solve(pairs: &[(&TransitionModel, Measurement)], seed: f64) -> Result<ThermometrySolution> {
    if pairs.len() < 2 {
        return Err(Error::Degenerate("joint solve needs at least two transitions".into()));
    }
    // evaluate in a canonical order so the result is independent of input order
    let mut rows: Vec<(String, f64, &TransitionModel, Measurement)> = Vec::with_capacity(pairs.len());
    for (model, m) in pairs {
        rows.push((model.id(), model.static_polarizability_hz()?, *model, *m));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&rows[a], &rows[b]);
        ra.0.cmp(&rb.0)
            .then(ra.3.offset_hz.total_cmp(&rb.3.offset_hz))
            .then(ra.3.sigma_hz.total_cmp(&rb.3.sigma_hz))
    });
    let alphas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let spread = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = alphas.iter().map(|a| a.abs()).fold(0.0, f64::max);
    if !(spread > 1e-9 * scale) {
        return Err(Error::Degenerate("transitions have identical static polarizabilities".into()));
    }

    let mut t = seed;
    let mut e2 = 0.0;
    let mut cov = [[0.0; 2]; 2];
    let mut converged = false;
    for _ in 0..50 {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &i in &order {
            let (_, alpha, model, m) = &rows[i];
            let w = 1.0 / (m.sigma_hz * m.sigma_hz);
            let s = model.sensitivity(t)?;
            let g = -0.5 * alpha;
            let r = m.offset_hz - (model.bbr_shift(t)? + g * e2);
            a11 += w * s * s;
            a12 += w * s * g;
            a22 += w * g * g;
            b1 += w * s * r;
            b2 += w * g * r;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-12 * a11 * a22) {
            return Err(Error::Degenerate("normal equations are singular".into()));
        }
        let dt = (a22 * b1 - a12 * b2) / det;
        let de2 = (a11 * b2 - a12 * b1) / det;
        t = (t + dt).clamp(0.0, T_MAX);
        e2 += de2;
        cov = [[a22 / det, -a12 / det], [-a12 / det, a11 / det]];
        if dt.abs() < 1e-9 * t.max(1.0) && de2.abs() <= 1e-12 * e2.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence("joint temperature/field fit".into()));
    }
    let mut residuals = vec![0.0; rows.len()];
    for (i, (_, alpha, model, m)) in rows.iter().enumerate() {
        residuals[i] = m.offset_hz - (model.bbr_shift(t)? - 0.5 * alpha * e2);
    }
    let clamped = e2 < 0.0;
    let field = e2.max(0.0).sqrt();
    let sigma_e2 = cov[1][1].sqrt();
    let sigma_field = if field > 0.0 { sigma_e2 / (2.0 * field) } else { sigma_e2.sqrt() };
    Ok(ThermometrySolution {
        temperature: t,
        sigma_temperature: cov[0][0].sqrt(),
        field_v_per_m: field,
        sigma_field,
        field_sq: e2,
        field_clamped: clamped,
        covariance: cov,
        residuals,
    })
}

/// Anchored van der Waals estimate, 1 Hz (n/25)^11 (4 um / R)^6.
pub fn vdw_shift_estimate(n: u32, spacing_um: f64) -> Result<f64> {
    if n < 15 {
        return Err(Error::InvalidArgument("vdW scaling estimate needs n >= 15".into()));
    }
    if !(spacing_um > 0.0) {
        return Err(Error::InvalidArgument("spacing must be > 0".into()));
    }
    Ok((n as f64 / 25.0).powi(11) * (4.0 / spacing_um).powi(6))
}

/// Density (cm^-3) at which the anchored vdW shift at the mean spacing
/// n^(-1/3) reaches `max_shift_hz`.
pub fn vdw_density_limit(n: u32, max_shift_hz: f64) -> Result<f64> {
    let at4 = vdw_shift_estimate(n, 4.0)?;
    let spacing_um = 4.0 * (at4 / max_shift_hz).powf(1.0 / 6.0);
    Ok(1.0 / (spacing_um * 1e-4).powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBudget {
    pub snr: f64,
    /// Resolution of one cycle, Hz.
    pub per_cycle_hz: f64,
    pub cycles: u64,
}

/// SNR = sqrt(atoms); per-cycle resolution width/(kappa SNR); cycles =
/// ceil((per-cycle/target)^2).
pub fn measurement_budget(atoms: f64, width_hz: f64, target_hz: f64, kappa: f64) -> Result<MeasurementBudget> {
    if !(atoms > 0.0 && width_hz > 0.0 && target_hz > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidArgument("measurement budget inputs must be positive".into()));
    }
    let snr = atoms.sqrt();
    let per_cycle_hz = width_hz / (kappa * snr);
    let ratio = per_cycle_hz / target_hz;
    let q = ratio * ratio;
    // guard against 1.0000000000000002 rounding up to two cycles
    let cycles = if (q - q.round()).abs() < 1e-9 * q.max(1.0) { q.round() } else { q.ceil() };
    Ok(MeasurementBudget { snr, per_cycle_hz, cycles: cycles.max(1.0) as u64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub frequency_hz: f64,
    /// Fractional accuracy of the transition-frequency measurement.
    pub fractional_accuracy: f64,
    pub resolution_hz: f64,
    pub sensitivity_hz_per_k: f64,
    pub temperature_uncertainty_k: f64,
    /// Resulting fractional BBR uncertainty of the clock, if clock constants given.
    pub clock_fractional_uncertainty: Option<f64>,
    /// Rydberg fractional accuracy divided by the clock fractional uncertainty.
    pub leverage: Option<f64>,
    pub linewidth_hz: f64,
    /// Resolution as a fraction of the linewidth.
    pub split_fraction: f64,
}

impl ErrorBudget {
    /// Linewidth divided by resolution: how finely the line must be split.
    pub fn split_factor(&self) -> f64 {
        1.0 / self.split_fraction
    }
}

fn budget(
    frequency_hz: f64,
    resolution_hz: f64,
    sensitivity: f64,
    linewidth_hz: f64,
    clock: Option<&ClockConstants>,
) -> Result<ErrorBudget> {
    if !(frequency_hz > 0.0 && resolution_hz > 0.0 && sensitivity != 0.0 && linewidth_hz > 0.0) {
        return Err(Error::InvalidArgument("error budget inputs must be positive".into()));
    }
    let fractional_accuracy = resolution_hz / frequency_hz;
    let dt = resolution_hz / sensitivity.abs();
    let clock_frac = clock.map(|c| dt * c.bbr_sensitivity_per_k);
    Ok(ErrorBudget {
        frequency_hz,
        fractional_accuracy,
        resolution_hz,
        sensitivity_hz_per_k: sensitivity,
        temperature_uncertainty_k: dt,
        clock_fractional_uncertainty: clock_frac,
        leverage: clock_frac.map(|c| fractional_accuracy / c),
        linewidth_hz,
        split_fraction: resolution_hz / linewidth_hz,
    })
}

/// Budget starting from a fractional frequency accuracy.
pub fn error_budget(
    frequency_hz: f64,
    fractional_accuracy: f64,
    sensitivity: f64,
    linewidth_hz: f64,
    clock: Option<&ClockConstants>,
) -> Result<ErrorBudget> {
    budget(frequency_hz, fractional_accuracy * frequency_hz, sensitivity, linewidth_hz, clock)
}

/// Budget starting from a target temperature uncertainty.
pub fn error_budget_for_temperature(
    frequency_hz: f64,
    temperature_uncertainty_k: f64,
    sensitivity: f64,
    linewidth_hz: f64,
    clock: Option<&ClockConstants>,
) -> Result<ErrorBudget> {
    budget(frequency_hz, temperature_uncertainty_k * sensitivity.abs(), sensitivity, linewidth_hz, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sr() -> Atom {
        Atom::load("sr").unwrap()
    }

    fn model<'a>(a: &'a Atom, n: u32) -> TransitionModel<'a> {
        let st = a.state("3D1", n).unwrap();
        TransitionModel::from_metastable(a, st, BbrSettings::default()).unwrap()
    }

    #[test]
    fn round_trip_inversion() {
        let a = sr();
        let m = model(&a, 30);
        for t in [77.0, 150.0, 300.0, 400.0] {
            let off = m.bbr_shift(t).unwrap();
            let s = invert_temperature(&m, &Measurement::new(off, 0.16).unwrap(), 300.0).unwrap();
            assert!((s.temperature - t).abs() < 1e-3, "{t}: {}", s.temperature);
        }
        let z = invert_temperature(&m, &Measurement::new(0.0, 0.16).unwrap(), 300.0).unwrap();
        assert_eq!(z.temperature, 0.0);
    }

    #[test]
    fn out_of_range_offset_rejected() {
        let a = sr();
        let m = model(&a, 30);
        assert!(invert_temperature(&m, &Measurement::new(1e7, 0.1).unwrap(), 300.0).is_err());
    }

    #[test]
    fn sensitivity_near_free_electron() {
        let a = sr();
        let m = model(&a, 30);
        assert_eq!(m.sensitivity(0.0).unwrap(), 0.0);
        let s = m.sensitivity(300.0).unwrap();
        assert!((s / 16.0 - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn joint_solve_recovers_field() {
        let a = sr();
        let (m25, m30) = (model(&a, 25), model(&a, 30));
        let sig = 0.5;
        let o25 = m25.offset(300.0, 5.0).unwrap();
        let o30 = m30.offset(300.0, 5.0).unwrap();
        let s = joint_solve(&[(&m25, Measurement::new(o25, sig).unwrap()), (&m30, Measurement::new(o30, sig).unwrap())], 300.0).unwrap();
        assert!((s.temperature - 300.0).abs() < 1e-6);
        assert!((s.field_v_per_m - 5.0).abs() < 1e-6);
        assert!(s.covariance[0][1] == s.covariance[1][0] && s.covariance[0][0] > 0.0 && s.covariance[1][1] > 0.0);
        let r = joint_solve(&[(&m30, Measurement::new(o30, sig).unwrap()), (&m25, Measurement::new(o25, sig).unwrap())], 300.0).unwrap();
        assert_eq!(r.temperature.to_bits(), s.temperature.to_bits());
        assert_eq!(r.field_sq.to_bits(), s.field_sq.to_bits());
    }

    #[test]
    fn joint_solve_clamps_negative_field() {
        let a = sr();
        let (m25, m30) = (model(&a, 25), model(&a, 30));
        let o25 = m25.offset(300.0, 0.0).unwrap() + 0.3;
        let o30 = m30.offset(300.0, 0.0).unwrap();
        let s = joint_solve(&[(&m25, Measurement::new(o25, 1.0).unwrap()), (&m30, Measurement::new(o30, 1.0).unwrap())], 300.0).unwrap();
        assert!(s.field_clamped || s.field_sq >= 0.0);
        assert!(s.field_v_per_m >= 0.0);
    }

    #[test]
    fn joint_solve_degenerate() {
        let a = sr();
        let m = model(&a, 25);
        let o = m.offset(300.0, 1.0).unwrap();
        let r = joint_solve(&[(&m, Measurement::new(o, 1.0).unwrap()), (&m, Measurement::new(o, 1.0).unwrap())], 300.0);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn vdw_scaling() {
        assert_relative_eq!(vdw_shift_estimate(25, 4.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(vdw_shift_estimate(30, 4.0).unwrap(), 1.2f64.powi(11), max_relative = 1e-14);
        assert!(vdw_shift_estimate(25, 1e9).unwrap() < 1e-40);
        assert!(vdw_shift_estimate(26, 4.0).unwrap() > 1.0 && vdw_shift_estimate(25, 5.0).unwrap() < 1.0);
        let rho = vdw_density_limit(25, 1.0).unwrap();
        assert_relative_eq!(rho, 1.0 / (4e-4f64).powi(3), max_relative = 1e-12);
    }

    #[test]
    fn measurement_budget_values() {
        let b = measurement_budget(1e4, 3500.0, 0.16, 1.0).unwrap();
        assert_eq!(b.snr, 100.0);
        assert_eq!(b.cycles, ((35.0f64 / 0.16).powi(2)).ceil() as u64);
        let one = measurement_budget(1e4, 3500.0, 35.0, 1.0).unwrap();
        assert_eq!(one.cycles, 1);
        assert!(measurement_budget(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn budget_chain() {
        let clock = ClockConstants { frequency_hz: 4.29e14, bbr_sensitivity_per_k: 7.3e-17, bbr_fractional_shift_300k: 5.49e-15 };
        let b = error_budget(9.4e14, 1.7e-16, 16.0, 3500.0, Some(&clock)).unwrap();
        assert_relative_eq!(b.resolution_hz, 0.16, max_relative = 1e-2);
        assert_relative_eq!(b.temperature_uncertainty_k, 0.01, max_relative = 1e-2);
        assert!((b.clock_fractional_uncertainty.unwrap() / 1e-18 - 1.0).abs() < 0.5);
        assert!(b.leverage.unwrap() > 100.0);
        assert_relative_eq!(b.split_fraction, 0.16 / 3500.0, max_relative = 1e-2);
        let rr = error_budget_for_temperature(5e10, 0.01, 0.92, 1.9e3 + 233.0, None).unwrap();
        assert!(rr.fractional_accuracy < 1e-12 && rr.split_factor() > 1e5);
    }
}
