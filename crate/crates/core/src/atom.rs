//! An [`Atom`] couples species data with cached radial wavefunctions and
//! matrix elements, and builds transition tables for Rydberg states.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::angular::{e1_allowed, ls_weight};
use crate::cache::MatrixElementCache;
use crate::error::{Error, Result};
use crate::radial::{self, MeshSpec, RadialWavefunction};
use crate::species::{self, RydbergState, SeriesLabel, SpeciesData};

pub struct Atom {
    pub species: SpeciesData,
    wavefunctions: RwLock<HashMap<(SeriesLabel, u32), Arc<RadialWavefunction>>>,
    elements: MatrixElementCache,
}

/// One dipole channel out of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub target: RydbergState,
    /// Signed transition angular frequency E(target) - E(state), hartree.
    pub omega: f64,
    /// Radial integral <state|r|target>, bohr.
    pub radial: f64,
    /// Angular weight W (see [`crate::angular::ls_weight`]).
    pub angular: f64,
    /// |<target|z|state>|^2 summed over target sublevels, W R^2.
    pub line_strength: f64,
}

impl Channel {
    pub fn id(&self) -> String {
        format!("{}{}", self.target.n, self.target.series)
    }

    /// Absorption oscillator strength 2 omega z^2 (negative for emission).
    pub fn oscillator_strength(&self) -> f64 {
        2.0 * self.omega * self.line_strength
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub state: RydbergState,
    pub span: u32,
    /// Channels sorted by |omega|.
    pub channels: Vec<Channel>,
    /// Series members inside the span that have no Coulomb-approximation
    /// wavefunction (n_eff <= l) and were left out.
    pub excluded: Vec<RydbergState>,
    /// Highest n' included in any series (clipped at the mesh limit).
    pub n_upper: u32,
}

impl TransitionTable {
    pub fn oscillator_sum(&self) -> f64 {
        crate::numerics::compensated_sum(self.channels.iter().map(Channel::oscillator_strength))
    }

    pub fn total_line_strength(&self) -> f64 {
        crate::numerics::compensated_sum(self.channels.iter().map(|c| c.line_strength))
    }
}

impl Atom {
    pub fn new(species: SpeciesData) -> Self {
        let elements = MatrixElementCache::new(&species.data_version);
        Self { species, wavefunctions: RwLock::new(HashMap::new()), elements }
    }

    /// Load a shipped species by short name (`sr`, `yb`, `h`) or a path.
    pub fn load(name: &str) -> Result<Self> {
        Ok(Self::new(species::load_named(name)?))
    }

    pub fn cache(&self) -> &MatrixElementCache {
        &self.elements
    }

    pub fn load_cache(&self, path: &Path) -> Result<usize> {
        self.elements.load(path)
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        self.elements.save(path)
    }

    pub fn state(&self, series: &str, n: u32) -> Result<RydbergState> {
        self.species.state_str(series, n)
    }

    pub fn mesh(&self, l: u32) -> MeshSpec {
        MeshSpec { step: self.species.radial.step, r_min: self.species.radial.r_min(l) }
    }

    pub fn wavefunction(&self, st: &RydbergState) -> Result<Arc<RadialWavefunction>> {
        let key = (st.series, st.n);
        if let Some(w) = self.wavefunctions.read().expect("wavefunction lock poisoned").get(&key) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(radial::solve(st.n_eff, st.l(), self.mesh(st.l()))?);
        let mut map = self.wavefunctions.write().expect("wavefunction lock poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(w)))
    }

    fn mesh_hash_pair(&self, a: &RydbergState, b: &RydbergState) -> String {
        let ha = self.mesh(a.l()).hash(a.n_eff, a.l());
        let hb = self.mesh(b.l()).hash(b.n_eff, b.l());
        let x = u64::from_str_radix(&ha, 16).unwrap_or(0) ^ u64::from_str_radix(&hb, 16).unwrap_or(0).rotate_left(17);
        format!("{x:016x}")
    }

    /// Radial integral <a|r^p|b>, cached.
    pub fn radial_integral(&self, a: &RydbergState, b: &RydbergState, p: i32) -> Result<f64> {
        // order the pair canonically so <a|r|b> and <b|r|a> share an entry
        let (x, y) = if (a.series, a.n) <= (b.series, b.n) { (a, b) } else { (b, a) };
        let key = format!("{}:{}|{}:{}|r{p}", x.series, x.n, y.series, y.n);
        let hash = self.mesh_hash_pair(x, y);
        self.elements.get_or_insert_with(key, &hash, || {
            let wx = self.wavefunction(x)?;
            let wy = self.wavefunction(y)?;
            Ok(radial::radial_integral(&wx, &wy, p))
        })
    }

    /// Radial dipole integral; errors unless |l_a - l_b| = 1.
    pub fn radial_dipole(&self, a: &RydbergState, b: &RydbergState) -> Result<f64> {
        if a.l().abs_diff(b.l()) != 1 {
            return Err(Error::DipoleForbidden(format!("{a} -> {b}: |l - l'| must be 1")));
        }
        self.radial_integral(a, b, 1)
    }

    /// Dipole matrix element sqrt(W(a -> b)) R.  The angular weight counts
    /// the sublevels of `b`, so the element is symmetric only after
    /// multiplying by sqrt(2J+1) of the initial state:
    /// (2J_a+1) d(a,b)^2 = (2J_b+1) d(b,a)^2.
    pub fn dipole_matrix_element(&self, a: &RydbergState, b: &RydbergState) -> Result<f64> {
        let r = self.radial_dipole(a, b)?;
        if !e1_allowed(a.series, b.series) {
            return Err(Error::DipoleForbidden(format!("{} -> {} violates LS selection rules", a.series, b.series)));
        }
        Ok(ls_weight(a.series, b.series).sqrt() * r)
    }

    /// <r^p> of a state.
    pub fn expectation_r(&self, st: &RydbergState, p: i32) -> Result<f64> {
        self.radial_integral(st, st, p)
    }

    /// Spherically averaged <sin^2(k x)> = (1 - <j0(2 k r)>)/2, k in inverse bohr.
    pub fn sin2_matrix_element(&self, st: &RydbergState, k: f64) -> Result<f64> {
        if !(k >= 0.0) {
            return Err(Error::InvalidArgument(format!("lattice wavenumber must be >= 0, got {k}")));
        }
        if k == 0.0 {
            return Ok(0.0);
        }
        let w = self.wavefunction(st)?;
        Ok((0.5 * (1.0 - w.j0_expectation(k))).clamp(0.0, 1.0))
    }

    /// All dipole-allowed channels from `st` to members n' of every series
    /// with n' in [n_lowest', min(n + span, n_max)].
    ///
    /// Every bound member below the state is kept regardless of `span`: the
    /// truncation tail models missing oscillator strength near threshold, so
    /// it cannot stand in for low-lying (large |omega|, emission) channels.
    pub fn transition_table(&self, st: &RydbergState, span: u32) -> Result<TransitionTable> {
        if span < 1 {
            return Err(Error::InvalidArgument("span must be >= 1".into()));
        }
        let sp = &self.species;
        let n_upper = (st.n + span).min(sp.radial.n_max);
        let mut targets = Vec::new();
        let mut excluded = Vec::new();
        for (&label, ser) in &sp.series {
            if !e1_allowed(st.series, label) {
                continue;
            }
            let lo = ser.n_lowest;
            for n in lo..=n_upper {
                match sp.state(label, n) {
                    Ok(t) => targets.push(t),
                    Err(Error::InvalidState(_)) => {
                        let mu = sp.quantum_defect(label, n)?;
                        excluded.push(RydbergState { series: label, n, n_eff: n as f64 - mu, energy: f64::NAN });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        let mut channels = targets
            .par_iter()
            .map(|t| {
                let radial = self.radial_dipole(st, t)?;
                let angular = ls_weight(st.series, t.series);
                Ok(Channel {
                    target: *t,
                    omega: t.energy - st.energy,
                    radial,
                    angular,
                    line_strength: angular * radial * radial,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        channels.sort_by(|a, b| {
            a.omega.abs().total_cmp(&b.omega.abs()).then((a.target.series, a.target.n).cmp(&(b.target.series, b.target.n)))
        });
        Ok(TransitionTable { state: *st, span, channels, excluded, n_upper })
    }
}
