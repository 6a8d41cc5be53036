//! Per-species input data: ionization limit, quantum-defect series, level
//! energies, line lists for the ground and metastable states, clock
//! constants, radial-solver settings and magic-lattice configuration.
//!
//! The on-disk format is documented in `docs/species-format.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::units::PhysicalConstants;

const L_LETTERS: &[u8] = b"SPDFGHIK";

/// LS-coupling term label such as `3D1` (multiplicity, L, J).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeriesLabel {
    pub multiplicity: u32,
    pub l: u32,
    pub j: u32,
}

impl SeriesLabel {
    pub fn new(multiplicity: u32, l: u32, j: u32) -> Result<Self> {
        let s2 = multiplicity
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidState("multiplicity must be >= 1".into()))?;
        // J must lie in |L-S| ..= L+S with 2S = multiplicity - 1
        let two_j = 2 * j as i64;
        let (two_l, two_s) = (2 * l as i64, s2 as i64);
        if two_j < (two_l - two_s).abs() || two_j > two_l + two_s || (two_j + two_l + two_s) % 2 != 0 {
            return Err(Error::InvalidState(format!("J = {j} impossible for multiplicity {multiplicity}, L = {l}")));
        }
        if l as usize >= L_LETTERS.len() {
            return Err(Error::InvalidState(format!("L = {l} not supported")));
        }
        Ok(Self { multiplicity, l, j })
    }

    /// Twice the total spin.
    pub fn two_s(&self) -> u32 {
        self.multiplicity - 1
    }
}

impl fmt::Display for SeriesLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.multiplicity, L_LETTERS[self.l as usize] as char, self.j)
    }
}

impl FromStr for SeriesLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidState(format!("malformed series label `{s}` (expected e.g. 3D1)"));
        let pos = s.find(|c: char| c.is_ascii_alphabetic()).ok_or_else(bad)?;
        let mult: u32 = s[..pos].parse().map_err(|_| bad())?;
        let letter = s.as_bytes()[pos].to_ascii_uppercase();
        let l = L_LETTERS.iter().position(|&c| c == letter).ok_or_else(bad)? as u32;
        let j: u32 = s[pos + 1..].parse().map_err(|_| bad())?;
        SeriesLabel::new(mult, l, j)
    }
}

/// One Rydberg series with modified Rydberg-Ritz quantum defects and optional
/// tabulated level energies for its low members.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDefectSeries {
    pub label: SeriesLabel,
    pub mu0: f64,
    pub mu2: f64,
    pub mu4: f64,
    /// Smallest n for which the Ritz expansion is used.
    pub ritz_n_min: u32,
    /// Lowest bound member of the series.
    pub n_lowest: u32,
    /// Tabulated energies (hartree above the ground state), keyed by n.
    pub levels: BTreeMap<u32, f64>,
}

/// An E1 line from a low-lying state: transition energy and reduced matrix
/// element |<J'||D||J>|, both in atomic units.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub omega: f64,
    pub d: f64,
}

/// A low-lying state described by a curated line list plus a constant
/// (frequency-independent) remainder of the polarizability.
#[derive(Debug, Clone, PartialEq)]
pub struct ListedState {
    pub label: String,
    pub j: u32,
    /// Energy above the ground state, hartree.
    pub energy: f64,
    pub lines: Vec<Line>,
    pub core: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metastable {
    pub state: ListedState,
    /// The Rydberg series and member that this level belongs to.
    pub series: SeriesLabel,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockConstants {
    pub frequency_hz: f64,
    pub bbr_sensitivity_per_k: f64,
    pub bbr_fractional_shift_300k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialConfig {
    pub r_min_offset: f64,
    pub r_min_l_coeff: f64,
    /// Step in x = sqrt(r).
    pub step: f64,
    pub n_max: u32,
}

impl RadialConfig {
    pub fn r_min(&self, l: u32) -> f64 {
        self.r_min_offset + self.r_min_l_coeff * (l * (l + 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagicConfig {
    pub series: SeriesLabel,
    pub photons: u32,
    pub window_min_nm: f64,
    pub window_max_nm: f64,
    /// 1-based index into the metastable line list of the infrared line the
    /// magic wavelength sits above.
    pub ir_line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesData {
    pub name: String,
    pub data_version: String,
    pub source: PathBuf,
    /// Ionization limit above the ground state, hartree.
    pub ionization_limit: f64,
    pub nuclear_mass_u: Option<f64>,
    /// m_red / m_e, scaling the Rydberg constant.
    pub mass_factor: f64,
    pub series: BTreeMap<SeriesLabel, QuantumDefectSeries>,
    pub ground: Option<ListedState>,
    pub metastable: Option<Metastable>,
    pub clock: Option<ClockConstants>,
    pub radial: RadialConfig,
    pub magic: Option<MagicConfig>,
    pub constants: PhysicalConstants,
}

fn take_energy(kv: &mut KvFile, base: &str, k: &PhysicalConstants) -> Result<Option<f64>> {
    let h = kv.take_f64_opt(&format!("{base}_hartree"))?;
    let c = kv.take_f64_opt(&format!("{base}_cm1"))?;
    match (h, c) {
        (Some(_), Some(_)) => Err(Error::Validation(format!("both {base}_hartree and {base}_cm1 given"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(v / k.hartree_cm1)),
        (None, None) => Ok(None),
    }
}

fn take_lines(kv: &mut KvFile, prefix: &str) -> Result<Vec<Line>> {
    let mut idx: Vec<usize> = Vec::new();
    for key in kv.keys_with_prefix(prefix) {
        let rest = &key[prefix.len()..];
        let Some((num, _)) = rest.split_once('.') else { continue };
        let i: usize = num
            .parse()
            .map_err(|_| Error::Validation(format!("line index in `{key}` is not an integer")))?;
        if !idx.contains(&i) {
            idx.push(i);
        }
    }
    idx.sort_unstable();
    for (expect, &got) in (1..).zip(&idx) {
        if expect != got {
            return Err(Error::Validation(format!("{prefix}<i> indices must run 1, 2, ... (missing {expect})")));
        }
    }
    let mut lines = Vec::new();
    for i in idx {
        let label = kv.take_str_opt(&format!("{prefix}{i}.label"))?.unwrap_or_else(|| format!("line {i}"));
        let omega = kv.take_f64(&format!("{prefix}{i}.omega_au"))?;
        let d = kv.take_f64(&format!("{prefix}{i}.d_au"))?;
        if omega == 0.0 {
            return Err(Error::Validation(format!("{prefix}{i}.omega_au must be nonzero")));
        }
        if d < 0.0 {
            return Err(Error::Validation(format!("{prefix}{i}.d_au must be non-negative")));
        }
        lines.push(Line { label, omega, d });
    }
    Ok(lines)
}

impl SpeciesData {
    /// Load and validate a species file using the shipped constants.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, PhysicalConstants::codata2018().clone())
    }

    pub fn load_with(path: &Path, constants: PhysicalConstants) -> Result<Self> {
        Self::from_kv(KvFile::read(path)?, constants)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        Self::from_kv(KvFile::parse(text, origin)?, PhysicalConstants::codata2018().clone())
    }

    fn from_kv(mut kv: KvFile, k: PhysicalConstants) -> Result<Self> {
        let source = kv.path().to_path_buf();
        let fv = kv.take_u32("format_version")?;
        if fv != 1 {
            return Err(Error::Validation(format!("unsupported format_version {fv}")));
        }
        let name = kv.take_str("name")?;
        let data_version = kv.take_str("data_version")?;
        let nuclear_mass_u = kv.take_f64_opt("nuclear_mass_u")?;
        let ionization_limit = take_energy(&mut kv, "ionization_limit", &k)?
            .ok_or_else(|| Error::Validation("missing ionization_limit_hartree".into()))?;

        let radial = RadialConfig {
            r_min_offset: kv.take_f64_opt("radial.r_min_offset")?.unwrap_or(1.0),
            r_min_l_coeff: kv.take_f64_opt("radial.r_min_l_coeff")?.unwrap_or(0.05),
            step: kv.take_f64_opt("radial.step")?.unwrap_or(0.01),
            n_max: kv.take_u32_opt("radial.n_max")?.unwrap_or(80),
        };

        let mut series = BTreeMap::new();
        let mut labels: Vec<String> = Vec::new();
        for key in kv.keys_with_prefix("defect.") {
            let rest = &key["defect.".len()..];
            if let Some((lab, _)) = rest.split_once('.') {
                if !labels.iter().any(|l| l == lab) {
                    labels.push(lab.to_string());
                }
            }
        }
        for lab in labels {
            let label: SeriesLabel = lab.parse()?;
            let p = format!("defect.{lab}.");
            let mu0 = kv.take_f64(&format!("{p}mu0"))?;
            let mu2 = kv.take_f64_opt(&format!("{p}mu2"))?.unwrap_or(0.0);
            let mu4 = kv.take_f64_opt(&format!("{p}mu4"))?.unwrap_or(0.0);
            let ritz_n_min = kv.take_u32(&format!("{p}ritz_n_min"))?;
            let n_lowest = kv.take_u32(&format!("series.{lab}.n_lowest"))?;
            let mut levels = BTreeMap::new();
            let lp = format!("level.{lab}.");
            for key in kv.keys_with_prefix(&lp) {
                let rest = &key[lp.len()..];
                let Some((num, unit)) = rest.split_once('.') else {
                    return Err(Error::Validation(format!("malformed level key `{key}`")));
                };
                let n: u32 = num
                    .parse()
                    .map_err(|_| Error::Validation(format!("level key `{key}`: n is not an integer")))?;
                let e = match unit {
                    "energy_cm1" => kv.take_f64(&key)? / k.hartree_cm1,
                    "energy_hartree" => kv.take_f64(&key)?,
                    _ => return Err(Error::Validation(format!("unknown level key `{key}`"))),
                };
                levels.insert(n, e);
            }
            series.insert(label, QuantumDefectSeries { label, mu0, mu2, mu4, ritz_n_min, n_lowest, levels });
        }

        let ground = if kv.contains("ground.j") {
            Some(ListedState {
                label: kv.take_str_opt("ground.label")?.unwrap_or_else(|| "ground".into()),
                j: kv.take_u32("ground.j")?,
                energy: 0.0,
                lines: take_lines(&mut kv, "ground.line.")?,
                core: kv.take_f64_opt("ground.core_au")?.unwrap_or(0.0),
            })
        } else {
            None
        };

        let metastable = if kv.contains("metastable.series") {
            let series_label: SeriesLabel = kv.take_str("metastable.series")?.parse()?;
            let state = ListedState {
                label: kv.take_str_opt("metastable.label")?.unwrap_or_else(|| "metastable".into()),
                j: kv.take_u32("metastable.j")?,
                energy: take_energy(&mut kv, "metastable.energy", &k)?
                    .ok_or_else(|| Error::Validation("missing metastable.energy_cm1".into()))?,
                lines: take_lines(&mut kv, "line.")?,
                core: kv.take_f64_opt("metastable.core_au")?.unwrap_or(0.0),
            };
            Some(Metastable { state, series: series_label, n: kv.take_u32("metastable.n")? })
        } else {
            None
        };

        let clock = if kv.contains("clock.frequency_hz") {
            Some(ClockConstants {
                frequency_hz: kv.take_f64("clock.frequency_hz")?,
                bbr_sensitivity_per_k: kv.take_f64("clock.bbr_sensitivity_per_K")?,
                bbr_fractional_shift_300k: kv.take_f64("clock.bbr_fractional_shift_300k")?,
            })
        } else {
            None
        };

        let magic = if kv.contains("magic.series") {
            Some(MagicConfig {
                series: kv.take_str("magic.series")?.parse()?,
                photons: kv.take_u32("magic.photons")?,
                window_min_nm: kv.take_f64("magic.window_min_nm")?,
                window_max_nm: kv.take_f64("magic.window_max_nm")?,
                ir_line: kv.take_u32("magic.ir_line")? as usize,
            })
        } else {
            None
        };

        kv.finish()?;

        let mass_factor = k.reduced_mass_factor(nuclear_mass_u);
        let data = SpeciesData {
            name,
            data_version,
            source,
            ionization_limit,
            nuclear_mass_u,
            mass_factor,
            series,
            ground,
            metastable,
            clock,
            radial,
            magic,
            constants: k,
        };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(format!("{}: {m}", self.name)));
        if !(self.ionization_limit > 0.0) {
            return fail("ionization limit must be positive".into());
        }
        if let Some(m) = self.nuclear_mass_u {
            if m <= 0.0 {
                return fail("nuclear_mass_u must be positive".into());
            }
        }
        let r = &self.radial;
        if !(r.step > 0.0 && r.r_min_offset > 0.0 && r.r_min_l_coeff >= 0.0 && r.n_max >= 2) {
            return fail("radial settings must be positive".into());
        }
        for s in self.series.values() {
            if s.n_lowest <= s.label.l {
                return fail(format!("series {}: n_lowest must exceed l", s.label));
            }
            if s.ritz_n_min < s.n_lowest {
                return fail(format!("series {}: ritz_n_min below n_lowest", s.label));
            }
            if let Some((&n, _)) = s.levels.iter().next() {
                if n < s.n_lowest {
                    return fail(format!("series {}: level n = {n} below n_lowest", s.label));
                }
            }
            let mut prev = f64::NEG_INFINITY;
            for n in s.n_lowest..=r.n_max {
                let ns = self.n_eff_of(s, n);
                if !(ns > 0.0) {
                    return fail(format!(
                        "series {}: effective quantum number n - mu = {ns:.4} <= 0 at n = {n}",
                        s.label
                    ));
                }
                let e = self.energy_from_n_eff(ns);
                if !(e > prev) {
                    return fail(format!("series {}: energies not increasing at n = {n}", s.label));
                }
                if e >= self.ionization_limit {
                    return fail(format!("series {}: n = {n} lies above the ionization limit", s.label));
                }
                prev = e;
            }
        }
        if let Some(c) = &self.clock {
            if !(c.frequency_hz > 0.0 && c.bbr_sensitivity_per_k > 0.0 && c.bbr_fractional_shift_300k > 0.0) {
                return fail("clock constants must be positive".into());
            }
        }
        if let Some(m) = &self.metastable {
            if !self.series.contains_key(&m.series) {
                return fail(format!("metastable.series {} has no quantum-defect data", m.series));
            }
            if m.state.lines.is_empty() {
                return fail("metastable state needs at least one line".into());
            }
        }
        if let Some(mg) = &self.magic {
            if !self.series.contains_key(&mg.series) {
                return fail(format!("magic.series {} has no quantum-defect data", mg.series));
            }
            if !(mg.photons == 1 || mg.photons == 2) {
                return fail("magic.photons must be 1 or 2".into());
            }
            if !(mg.window_min_nm > 0.0 && mg.window_max_nm > mg.window_min_nm) {
                return fail("magic window must satisfy 0 < min < max".into());
            }
            let nlines = self.metastable.as_ref().map_or(0, |m| m.state.lines.len());
            if mg.ir_line == 0 || mg.ir_line > nlines {
                return fail("magic.ir_line must index the metastable line list".into());
            }
        }
        Ok(())
    }

    /// Half the reduced-mass Rydberg constant in hartree.
    fn rydberg(&self) -> f64 {
        0.5 * self.mass_factor
    }

    fn energy_from_n_eff(&self, n_eff: f64) -> f64 {
        self.ionization_limit - self.rydberg() / (n_eff * n_eff)
    }

    fn n_eff_from_energy(&self, e: f64) -> f64 {
        (self.rydberg() / (self.ionization_limit - e)).sqrt()
    }

    fn ritz(s: &QuantumDefectSeries, n: u32) -> f64 {
        let m = n as f64 - s.mu0;
        let m2 = m * m;
        s.mu0 + s.mu2 / m2 + s.mu4 / (m2 * m2)
    }

    fn defect_of(&self, s: &QuantumDefectSeries, n: u32) -> f64 {
        if let Some(&e) = s.levels.get(&n) {
            return n as f64 - self.n_eff_from_energy(e);
        }
        if n >= s.ritz_n_min {
            return Self::ritz(s, n);
        }
        // interpolate between the nearest anchors (tabulated levels or the
        // first Ritz member); hold the upper anchor's value below the lowest
        let upper = s
            .levels
            .range(n + 1..s.ritz_n_min)
            .next()
            .map(|(&m, _)| m)
            .unwrap_or(s.ritz_n_min);
        let du = self.defect_of(s, upper);
        match s.levels.range(..n).next_back() {
            None => du,
            Some((&lo, _)) => {
                let dl = self.defect_of(s, lo);
                dl + (du - dl) * (n - lo) as f64 / (upper - lo) as f64
            }
        }
    }

    fn n_eff_of(&self, s: &QuantumDefectSeries, n: u32) -> f64 {
        n as f64 - self.defect_of(s, n)
    }

    pub fn series(&self, label: SeriesLabel) -> Result<&QuantumDefectSeries> {
        self.series
            .get(&label)
            .ok_or_else(|| Error::InvalidState(format!("{} has no {label} series data", self.name)))
    }

    /// Quantum defect mu(n) of a series member.
    pub fn quantum_defect(&self, label: SeriesLabel, n: u32) -> Result<f64> {
        let s = self.series(label)?;
        if n < s.n_lowest {
            return Err(Error::InvalidState(format!("{label}: n = {n} below lowest member {}", s.n_lowest)));
        }
        Ok(self.defect_of(s, n))
    }

    /// Build a validated Rydberg state.
    pub fn state(&self, label: SeriesLabel, n: u32) -> Result<RydbergState> {
        let s = self.series(label)?;
        if n < s.n_lowest {
            return Err(Error::InvalidState(format!("{label}: n = {n} below lowest member {}", s.n_lowest)));
        }
        if n > self.radial.n_max {
            return Err(Error::MeshOverflow { n, n_max: self.radial.n_max });
        }
        let n_eff = self.n_eff_of(s, n);
        if !(n_eff > label.l as f64) {
            return Err(Error::InvalidState(format!(
                "{label} n = {n}: n_eff = {n_eff:.4} does not exceed l = {}",
                label.l
            )));
        }
        Ok(RydbergState { series: label, n, n_eff, energy: self.energy_from_n_eff(n_eff) })
    }

    /// Parse `"3D1"` and build the state.
    pub fn state_str(&self, label: &str, n: u32) -> Result<RydbergState> {
        self.state(label.parse()?, n)
    }

    /// Binding energy -E relative to the ionization limit, hartree.
    pub fn binding_energy(&self, st: &RydbergState) -> f64 {
        self.ionization_limit - st.energy
    }

    pub fn metastable(&self) -> Result<&Metastable> {
        self.metastable
            .as_ref()
            .ok_or_else(|| Error::InvalidState(format!("{} has no metastable state data", self.name)))
    }

    pub fn ground(&self) -> Result<&ListedState> {
        self.ground
            .as_ref()
            .ok_or_else(|| Error::InvalidState(format!("{} has no ground-state line list", self.name)))
    }

    pub fn clock(&self) -> Result<&ClockConstants> {
        self.clock
            .as_ref()
            .ok_or_else(|| Error::InvalidState(format!("{} has no clock constants", self.name)))
    }

    pub fn magic(&self) -> Result<&MagicConfig> {
        self.magic
            .as_ref()
            .ok_or_else(|| Error::InvalidState(format!("{} has no magic-lattice configuration", self.name)))
    }
}

/// A member of a Rydberg series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergState {
    pub series: SeriesLabel,
    pub n: u32,
    /// Effective principal quantum number n - mu(n).
    pub n_eff: f64,
    /// Energy above the ground state, hartree.
    pub energy: f64,
}

impl RydbergState {
    pub fn l(&self) -> u32 {
        self.series.l
    }

    /// Energy relative to the ionization limit in the Coulomb picture, -1/(2 n_eff^2).
    pub fn coulomb_energy(&self) -> f64 {
        -0.5 / (self.n_eff * self.n_eff)
    }
}

impl fmt::Display for RydbergState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} {}", self.n, self.series)
    }
}

/// Directory holding the shipped data files.  `RYDTHERM_DATA_DIR` overrides
/// the compiled-in location.
pub fn data_dir() -> PathBuf {
    match std::env::var_os("RYDTHERM_DATA_DIR") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"),
    }
}

/// Load a shipped species by short name (`sr`, `yb`, `h`) or by file path.
pub fn load_named(name: &str) -> Result<SpeciesData> {
    let file = match name.to_ascii_lowercase().as_str() {
        "sr" | "sr88" => "sr88.kv",
        "yb" | "yb174" => "yb174.kv",
        "h" | "hydrogen" => "hydrogen.kv",
        _ => return SpeciesData::load(Path::new(name)),
    };
    SpeciesData::load(&data_dir().join(file))
}
