//! Physical constants and unit conversion.
//!
//! All computations run in Hartree atomic units.  SI (and the lab units the
//! lattice literature uses, such as kHz/(kW/cm^2)) only appear at the edges,
//! through [`convert`] and the helper methods on [`PhysicalConstants`].

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kv::KvFile;

const SHIPPED_CONSTANTS: &str = include_str!("../data/constants.kv");

/// CODATA constants in the combinations the library needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    pub data_version: String,
    /// Speed of light in atomic units (1/alpha).
    pub c_au: f64,
    /// Boltzmann constant in hartree per kelvin.
    pub kb_au_per_k: f64,
    pub hartree_hz: f64,
    pub hartree_cm1: f64,
    pub bohr_m: f64,
    pub field_au_v_per_m: f64,
    pub time_au_s: f64,
    /// Intensity of a plane wave with a peak field of one atomic unit.
    pub intensity_au_w_per_cm2: f64,
    pub c_m_per_s: f64,
    pub electron_mass_u: f64,
}

impl PhysicalConstants {
    /// The shipped CODATA-2018 set (parsed once, then shared).
    pub fn codata2018() -> &'static PhysicalConstants {
        static CELL: OnceLock<PhysicalConstants> = OnceLock::new();
        CELL.get_or_init(|| {
            Self::from_str(SHIPPED_CONSTANTS, Path::new("<shipped constants.kv>"))
                .expect("shipped constants file is valid")
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let kv = KvFile::read(path)?;
        Self::from_kv(kv)
    }

    pub fn from_str(text: &str, origin: &Path) -> Result<Self> {
        Self::from_kv(KvFile::parse(text, origin)?)
    }

    fn from_kv(mut kv: KvFile) -> Result<Self> {
        let version = kv.take_u32("format_version")?;
        if version != 1 {
            return Err(Error::Validation(format!("constants: unsupported format_version {version}")));
        }
        let k = Self {
            data_version: kv.take_str("data_version")?,
            c_au: kv.take_f64("c_au")?,
            kb_au_per_k: kv.take_f64("kb_hartree_per_k")?,
            hartree_hz: kv.take_f64("hartree_hz")?,
            hartree_cm1: kv.take_f64("hartree_cm1")?,
            bohr_m: kv.take_f64("bohr_m")?,
            field_au_v_per_m: kv.take_f64("field_au_v_per_m")?,
            time_au_s: kv.take_f64("time_au_s")?,
            intensity_au_w_per_cm2: kv.take_f64("intensity_au_w_per_cm2")?,
            c_m_per_s: kv.take_f64("c_m_per_s")?,
            electron_mass_u: kv.take_f64("electron_mass_u")?,
        };
        kv.finish()?;
        let all = [
            k.c_au,
            k.kb_au_per_k,
            k.hartree_hz,
            k.hartree_cm1,
            k.bohr_m,
            k.field_au_v_per_m,
            k.time_au_s,
            k.intensity_au_w_per_cm2,
            k.c_m_per_s,
            k.electron_mass_u,
        ];
        if all.iter().any(|&x| x <= 0.0) {
            return Err(Error::Validation("constants must be strictly positive".into()));
        }
        Ok(k)
    }

    /// k_B T in hartree.
    pub fn kt(&self, t_kelvin: f64) -> f64 {
        self.kb_au_per_k * t_kelvin
    }

    /// Angular frequency (a.u.) of light with vacuum wavelength `nm`.
    pub fn omega_from_nm(&self, nm: f64) -> f64 {
        let lambda_au = nm * 1e-9 / self.bohr_m;
        2.0 * std::f64::consts::PI * self.c_au / lambda_au
    }

    /// Vacuum wavelength (nm) of light with angular frequency `omega` (a.u.).
    pub fn nm_from_omega(&self, omega: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.c_au / omega * self.bohr_m * 1e9
    }

    /// Polarizability: one atomic unit in Hz/(V/m)^2, for dE = -alpha F^2 / 2.
    pub fn pol_au_in_hz_m2_per_v2(&self) -> f64 {
        self.hartree_hz / (self.field_au_v_per_m * self.field_au_v_per_m)
    }

    /// Polarizability: one atomic unit expressed as a lattice depth in
    /// kHz/(kW/cm^2).  The standing-wave amplitude E0 of the lattice field
    /// relates to the antinode intensity I by E0^2 = I / (4 I_au), and the
    /// metastable-state shift is alpha * E0^2.
    pub fn pol_au_in_khz_per_kw_cm2(&self) -> f64 {
        self.hartree_hz * 1e3 / (4.0 * self.intensity_au_w_per_cm2) / 1e3
    }

    /// Lattice amplitude squared E0^2 (a.u.) for an antinode intensity in kW/cm^2.
    pub fn lattice_e0_sq(&self, intensity_kw_cm2: f64) -> f64 {
        intensity_kw_cm2 * 1e3 / (4.0 * self.intensity_au_w_per_cm2)
    }

    /// Reduced-mass factor m_red / m_e for a nucleus of `mass_u`.
    pub fn reduced_mass_factor(&self, nuclear_mass_u: Option<f64>) -> f64 {
        match nuclear_mass_u {
            Some(m) => 1.0 / (1.0 + self.electron_mass_u / m),
            None => 1.0,
        }
    }
}

/// Units accepted by [`convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    // energy / frequency
    Hartree,
    Hz,
    InverseCm,
    /// Temperature as an energy, k_B T.
    Kelvin,
    // length
    Bohr,
    Metre,
    Nanometre,
    Micrometre,
    // electric field
    FieldAu,
    VoltPerMetre,
    // intensity
    IntensityAu,
    WattPerCm2,
    KilowattPerCm2,
    // time
    TimeAu,
    Second,
    // polarizability
    PolarizabilityAu,
    HzM2PerV2,
    KhzPerKwCm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Energy,
    Length,
    Field,
    Intensity,
    Time,
    Polarizability,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Unit {
    /// (dimension, value of one of this unit in atomic units)
    fn scale(self, k: &PhysicalConstants) -> (Dimension, f64) {
        use Dimension::*;
        match self {
            Unit::Hartree => (Energy, 1.0),
            Unit::Hz => (Energy, 1.0 / k.hartree_hz),
            Unit::InverseCm => (Energy, 1.0 / k.hartree_cm1),
            Unit::Kelvin => (Energy, k.kb_au_per_k),
            Unit::Bohr => (Length, 1.0),
            Unit::Metre => (Length, 1.0 / k.bohr_m),
            Unit::Nanometre => (Length, 1e-9 / k.bohr_m),
            Unit::Micrometre => (Length, 1e-6 / k.bohr_m),
            Unit::FieldAu => (Field, 1.0),
            Unit::VoltPerMetre => (Field, 1.0 / k.field_au_v_per_m),
            Unit::IntensityAu => (Intensity, 1.0),
            Unit::WattPerCm2 => (Intensity, 1.0 / k.intensity_au_w_per_cm2),
            Unit::KilowattPerCm2 => (Intensity, 1e3 / k.intensity_au_w_per_cm2),
            Unit::TimeAu => (Time, 1.0),
            Unit::Second => (Time, 1.0 / k.time_au_s),
            Unit::PolarizabilityAu => (Polarizability, 1.0),
            Unit::HzM2PerV2 => (Polarizability, 1.0 / k.pol_au_in_hz_m2_per_v2()),
            Unit::KhzPerKwCm2 => (Polarizability, 1.0 / k.pol_au_in_khz_per_kw_cm2()),
        }
    }
}

/// Linear conversion between two units of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit, k: &PhysicalConstants) -> Result<f64> {
    let (d_from, s_from) = from.scale(k);
    let (d_to, s_to) = to.scale(k);
    if d_from != d_to {
        return Err(Error::IncompatibleUnits { from: from.to_string(), to: to.to_string() });
    }
    Ok(value * s_from / s_to)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALL: [Unit; 18] = [
        Unit::Hartree,
        Unit::Hz,
        Unit::InverseCm,
        Unit::Kelvin,
        Unit::Bohr,
        Unit::Metre,
        Unit::Nanometre,
        Unit::Micrometre,
        Unit::FieldAu,
        Unit::VoltPerMetre,
        Unit::IntensityAu,
        Unit::WattPerCm2,
        Unit::KilowattPerCm2,
        Unit::TimeAu,
        Unit::Second,
        Unit::PolarizabilityAu,
        Unit::HzM2PerV2,
        Unit::KhzPerKwCm2,
    ];

    #[test]
    fn shipped_constants_parse() {
        let k = PhysicalConstants::codata2018();
        assert_eq!(k.data_version, "codata-2018");
        assert_relative_eq!(k.c_au, 137.035999084);
    }

    #[test]
    fn round_trips_are_identity() {
        let k = PhysicalConstants::codata2018();
        for &a in &ALL {
            for &b in &ALL {
                match convert(1.2345, a, b, k) {
                    Ok(x) => {
                        let back = convert(x, b, a, k).unwrap();
                        assert!(((back - 1.2345) / 1.2345).abs() < 1e-12, "{a} <-> {b}");
                    }
                    Err(Error::IncompatibleUnits { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn incompatible_dimensions() {
        let k = PhysicalConstants::codata2018();
        assert!(convert(1.0, Unit::Hartree, Unit::Bohr, k).is_err());
    }

    #[test]
    fn temperature_to_hartree() {
        let k = PhysicalConstants::codata2018();
        let e = convert(300.0, Unit::Kelvin, Unit::Hartree, k).unwrap();
        assert_relative_eq!(e, 300.0 * k.kb_au_per_k, max_relative = 1e-15);
    }

    #[test]
    fn polarizability_si_from_first_principles() {
        // 1 a.u. of polarizability is e^2 a0^2 / E_h.  In Hz/(V/m)^2 that is
        // e^2 a0^2 / (E_h h), computed here from SI constants directly.
        let e = 1.602176634e-19_f64;
        let h = 6.62607015e-34_f64;
        let a0 = 5.29177210903e-11_f64;
        let eh = 4.3597447222071e-18_f64;
        let expected = e * e * a0 * a0 / eh / h;
        let k = PhysicalConstants::codata2018();
        let got = convert(1.0, Unit::PolarizabilityAu, Unit::HzM2PerV2, k).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-9);
    }

    #[test]
    fn lattice_polarizability_unit() {
        // 700 a.u. corresponds to roughly 32.8 kHz/(kW/cm^2)
        let k = PhysicalConstants::codata2018();
        let v = convert(700.0, Unit::PolarizabilityAu, Unit::KhzPerKwCm2, k).unwrap();
        assert!((v - 32.81).abs() < 0.02, "{v}");
    }

    #[test]
    fn wavelength_round_trip() {
        let k = PhysicalConstants::codata2018();
        let w = k.omega_from_nm(1209.0);
        assert_relative_eq!(k.nm_from_omega(w), 1209.0, max_relative = 1e-14);
        // 1209 nm photon energy in cm^-1
        assert_relative_eq!(w * k.hartree_cm1, 1e7 / 1209.0, max_relative = 1e-9);
    }
}
