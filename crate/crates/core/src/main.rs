#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rydtherm::atom::Atom;
use rydtherm::bbr::{bbr_shift_integral, bbr_shift_sum, check_temperature, linewidth, listed_state_shift, BbrSettings};
use rydtherm::fw::farley_wing;
use rydtherm::lattice::{default_magic, solve_magic_wavelength, transition_wavelength, MagicSettings};
use rydtherm::output::{read_measurements, Cell, RunManifest, Table};
use rydtherm::polarizability::{ac_polarizability, listed_polarizability, PolarizabilityResult};
use rydtherm::species::{load_named, ListedState, SpeciesData};
use rydtherm::thermometry::{
    error_budget, error_budget_for_temperature, invert_temperature, joint_solve, measurement_budget, parse_transition,
    Level, Measurement,
};
use rydtherm::units::{convert, Unit};
use rydtherm::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "rydtherm", version, about = "Blackbody shifts, magic lattices and Rydberg thermometry for Sr and Yb")]
struct Cli {
    /// Shipped species (sr, yb, h); ignored when --species-file is given.
    #[arg(long, global = true, default_value = "sr")]
    species: String,
    /// Species data file to use instead of a shipped one.
    #[arg(long, global = true)]
    species_file: Option<PathBuf>,
    /// Blackbody temperature, K.
    #[arg(long, global = true, default_value_t = 300.0)]
    temperature: f64,
    /// Channels above n included in every transition table.
    #[arg(long, global = true, default_value_t = 35)]
    span: u32,
    /// Relative stability required of the truncated BBR sum.
    #[arg(long, global = true, default_value_t = 1e-3)]
    tolerance: f64,
    /// Write the run manifest here.
    #[arg(long, global = true)]
    manifest_out: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Matrix-element cache file, read at start and rewritten at exit.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Farley-Wing function at the given y values.
    Fw {
        #[arg(required = true, allow_negative_numbers = true)]
        y: Vec<f64>,
    },
    /// BBR shift of Rydberg series members or of the ground/metastable state.
    Bbr {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = Method::Sum)]
        method: Method,
    },
    /// Dynamic (or static) polarizability of one state.
    Polarizability {
        #[command(flatten)]
        target: Target,
        /// Field wavelength, nm (omit for the static value).
        #[arg(long, conflicts_with = "omega")]
        nm: Option<f64>,
        /// Field angular frequency, atomic units.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, value_enum, default_value_t = PolUnit::HzM2PerV2)]
        units: PolUnit,
    },
    /// Magic wavelengths for metastable -> Rydberg transitions.
    Magic {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long)]
        min_nm: Option<f64>,
        #[arg(long)]
        max_nm: Option<f64>,
        /// Emit every root in the window, not only the default one.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Natural and BBR-induced linewidths.
    Linewidth {
        #[command(flatten)]
        target: Target,
    },
    /// Temperature and stray-field estimation.
    Thermo {
        #[command(subcommand)]
        command: ThermoCommand,
    },
    /// Farley-Wing curve.
    Fig2 {
        #[arg(long, default_value_t = 0.01)]
        y_min: f64,
        #[arg(long, default_value_t = 20.0)]
        y_max: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        /// Logarithmic grid.
        #[arg(long)]
        log: bool,
    },
    /// BBR shift against n for several series.
    Fig3 {
        #[arg(long, value_delimiter = ',', default_value = "3S1,3P0,3P1,3P2,3D1,3D2,3D3")]
        series: Vec<String>,
        #[arg(long, default_value_t = 8)]
        n_min: u32,
        #[arg(long, default_value_t = 50)]
        n_max: u32,
    },
    /// Magic wavelength, polarizability and excitation wavelength against n.
    Table1 {
        #[arg(long, value_delimiter = ',', default_value = "15,20,25,30,35,40")]
        n: Vec<u32>,
        #[command(flatten)]
        geometry: Geometry,
    },
}

#[derive(Subcommand, Debug)]
enum ThermoCommand {
    /// Invert each measured offset to a temperature.
    Invert {
        /// CSV with columns transition,offset_hz,sigma_hz.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        seed: f64,
    },
    /// Joint temperature and DC-field fit over several transitions.
    Joint {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        seed: f64,
    },
    /// Accuracy chain from spectroscopy to clock BBR uncertainty.
    Budget {
        /// Transition id, e.g. 3D1:25 or 3D1:40>3P0:41.
        #[arg(long)]
        transition: String,
        /// Target fractional accuracy of the transition frequency.
        #[arg(long, conflicts_with = "delta_t")]
        fractional: Option<f64>,
        /// Target temperature uncertainty, K.
        #[arg(long)]
        delta_t: Option<f64>,
        /// Linewidth, Hz (default: summed computed widths of the Rydberg levels).
        #[arg(long)]
        linewidth: Option<f64>,
        #[arg(long, default_value_t = 1e4)]
        atoms: f64,
        /// Line-split factor per unit SNR.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
}

#[derive(Args, Debug)]
struct Target {
    /// Series label (e.g. 3D1) or `ground` / `metastable`.
    #[arg(long)]
    state: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
}

#[derive(Args, Debug)]
struct Geometry {
    /// Lattice wavevector in units of omega/c.
    #[arg(long, default_value_t = 1.0)]
    k_ratio: f64,
    /// Drop the ponderomotive <sin^2> term.
    #[arg(long)]
    dipole_only: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    Sum,
    Integral,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolUnit {
    Au,
    HzM2PerV2,
    KhzPerKwCm2,
}

struct Run {
    atom: Atom,
    bbr: BbrSettings,
    temperature: f64,
}

/// Tables plus a flag that is false when any requested computation did not
/// converge.
struct Outcome {
    table: Table,
    converged: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, converged: true }
    }
}

fn load_species(cli: &Cli) -> Result<SpeciesData> {
    match &cli.species_file {
        Some(p) => SpeciesData::load(p),
        None => load_named(&cli.species),
    }
}

fn listed<'a>(species: &'a SpeciesData, name: &str) -> Result<Option<&'a ListedState>> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "ground" => Some(species.ground()?),
        "metastable" => Some(&species.metastable()?.state),
        _ => None,
    })
}

fn require_n(t: &Target) -> Result<()> {
    if t.n.is_empty() {
        return Err(Error::InvalidArgument(format!("--n is required for series {}", t.state)));
    }
    Ok(())
}

fn magic_settings(g: &Geometry) -> MagicSettings {
    MagicSettings { k_ratio: g.k_ratio, dipole_only: g.dipole_only, ..MagicSettings::default() }
}

fn cmd_fw(ys: &[f64]) -> Outcome {
    let mut t = Table::new("fw", &["y", "F"]);
    for &y in ys {
        t.push(vec![y.into(), farley_wing(y).into()]);
    }
    Outcome::ok(t)
}

fn cmd_fig2(y_min: f64, y_max: f64, points: usize, log: bool) -> Result<Outcome> {
    if !(y_min < y_max) || points < 2 || (log && !(y_min > 0.0)) {
        return Err(Error::InvalidArgument(format!("empty or invalid y range [{y_min}, {y_max}] with {points} points")));
    }
    let mut t = Table::new("fig2", &["y", "F"]);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let y = if log { y_min * (y_max / y_min).powf(f) } else { y_min + (y_max - y_min) * f };
        let y = if i == points - 1 { y_max } else { y };
        t.push(vec![y.into(), farley_wing(y).into()]);
    }
    Ok(Outcome::ok(t))
}

fn cmd_bbr(run: &Run, target: &Target, method: Method) -> Result<Outcome> {
    let k = &run.atom.species.constants;
    let mut t = Table::new("bbr", &["state", "n", "temperature_k", "shift_hz", "tail_hz", "converged", "method"]);
    let method_name = match method {
        Method::Sum => "sum",
        Method::Integral => "integral",
    };
    if let Some(ls) = listed(&run.atom.species, &target.state)? {
        let shift = match method {
            Method::Sum => listed_state_shift(ls, run.temperature, k)?,
            Method::Integral => rydtherm::bbr::listed_state_shift_integral(ls, run.temperature, k)?,
        };
        t.push(vec![ls.label.as_str().into(), "".into(), run.temperature.into(), shift.into(), 0.0.into(), true.into(), method_name.into()]);
        return Ok(Outcome::ok(t));
    }
    require_n(target)?;
    let mut converged = true;
    for &n in &target.n {
        let st = run.atom.state(&target.state, n)?;
        let r = match method {
            Method::Sum => bbr_shift_sum(&run.atom, &st, run.temperature, &run.bbr)?,
            Method::Integral => {
                let table = run.atom.transition_table(&st, run.bbr.span)?;
                let mut r = bbr_shift_integral(&run.atom, &table, run.temperature)?;
                // the stability test lives in the sum form
                r.converged = bbr_shift_sum(&run.atom, &st, run.temperature, &run.bbr)?.converged;
                r
            }
        };
        converged &= r.converged;
        t.push(vec![
            target.state.as_str().into(),
            n.into(),
            run.temperature.into(),
            r.shift_hz.into(),
            r.tail_hz.into(),
            r.converged.into(),
            method_name.into(),
        ]);
    }
    Ok(Outcome { table: t, converged })
}

fn cmd_polarizability(run: &Run, target: &Target, nm: Option<f64>, omega: Option<f64>, units: PolUnit) -> Result<Outcome> {
    let k = &run.atom.species.constants;
    let w = match (nm, omega) {
        (Some(l), _) => {
            if !(l > 0.0) {
                return Err(Error::InvalidArgument("wavelength must be > 0".into()));
            }
            k.omega_from_nm(l)
        }
        (None, Some(w)) => w,
        (None, None) => 0.0,
    };
    let (unit, label) = match units {
        PolUnit::Au => (Unit::PolarizabilityAu, "alpha_au"),
        PolUnit::HzM2PerV2 => (Unit::HzM2PerV2, "alpha_hz_m2_per_v2"),
        PolUnit::KhzPerKwCm2 => (Unit::KhzPerKwCm2, "alpha_khz_per_kw_cm2"),
    };
    let mut t = Table::new("polarizability", &["state", "n", "omega_au", label, "nearest_resonance"]);
    let push = |t: &mut Table, name: &str, n: Cell, r: &PolarizabilityResult| -> Result<()> {
        t.push(vec![
            name.into(),
            n,
            r.omega.into(),
            convert(r.value, Unit::PolarizabilityAu, unit, k)?.into(),
            r.nearest_resonance.as_ref().map(|(id, _)| id.clone()).unwrap_or_default().into(),
        ]);
        Ok(())
    };
    if let Some(ls) = listed(&run.atom.species, &target.state)? {
        let r = listed_polarizability(ls, w)?;
        push(&mut t, &ls.label, "".into(), &r)?;
        return Ok(Outcome::ok(t));
    }
    require_n(target)?;
    for &n in &target.n {
        let st = run.atom.state(&target.state, n)?;
        let r = ac_polarizability(&run.atom, &st, w, run.bbr.span)?;
        push(&mut t, &target.state, n.into(), &r)?;
    }
    Ok(Outcome::ok(t))
}

fn cmd_magic(run: &Run, ns: &[u32], min_nm: Option<f64>, max_nm: Option<f64>, all: bool, g: &Geometry) -> Result<Outcome> {
    let species = &run.atom.species;
    let mc = species.magic()?.clone();
    let settings = magic_settings(g);
    let (lo, hi) = (min_nm.unwrap_or(mc.window_min_nm), max_nm.unwrap_or(mc.window_max_nm));
    let mut t = Table::new(
        "magic",
        &["n", "lambda_m_nm", "alpha_khz_per_kw_cm2", "lambda_i_nm", "sin2", "residual_au", "valid"],
    );
    let results: Vec<Result<Vec<Vec<Cell>>>> = ns
        .par_iter()
        .map(|&n| {
            let st = species.state(mc.series, n)?;
            let li = transition_wavelength(species, &st, mc.photons)?;
            let roots = if all || min_nm.is_some() || max_nm.is_some() {
                let mut r = solve_magic_wavelength(&run.atom, &st, lo, hi, &settings)?;
                if !all {
                    let mid = 0.5 * (lo + hi);
                    r.retain(|m| m.valid);
                    r.sort_by(|a, b| (a.wavelength_nm - mid).abs().total_cmp(&(b.wavelength_nm - mid).abs()));
                    r.truncate(1);
                    if r.is_empty() {
                        return Err(Error::NoRoot { lo_nm: lo, hi_nm: hi });
                    }
                }
                r
            } else {
                vec![default_magic(&run.atom, n, &settings)?.1]
            };
            Ok(roots
                .into_iter()
                .map(|m| {
                    vec![
                        n.into(),
                        m.wavelength_nm.into(),
                        m.alpha_khz_per_kw_cm2.into(),
                        li.into(),
                        m.sin2.into(),
                        m.residual.into(),
                        m.valid.into(),
                    ]
                })
                .collect())
        })
        .collect();
    for r in results {
        for row in r? {
            t.push(row);
        }
    }
    Ok(Outcome::ok(t))
}

fn cmd_table1(run: &Run, ns: &[u32], g: &Geometry) -> Result<Outcome> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("empty n list".into()));
    }
    let species = &run.atom.species;
    let mc = species.magic()?.clone();
    let settings = magic_settings(g);
    let rows: Vec<Result<Vec<Cell>>> = ns
        .par_iter()
        .map(|&n| {
            let (st, m) = default_magic(&run.atom, n, &settings)?;
            let li = transition_wavelength(species, &st, mc.photons)?;
            Ok(vec![n.into(), m.wavelength_nm.into(), m.alpha_khz_per_kw_cm2.abs().into(), li.into()])
        })
        .collect();
    let mut t = Table::new("table1", &["n", "lambda_m_nm", "alpha_khz_per_kw_cm2", "lambda_i_nm"]);
    for r in rows {
        t.push(r?);
    }
    Ok(Outcome::ok(t))
}

fn cmd_linewidth(run: &Run, target: &Target) -> Result<Outcome> {
    require_n(target)?;
    let mut t = Table::new("linewidth", &["state", "n", "temperature_k", "natural_hz", "bbr_hz", "total_hz"]);
    for &n in &target.n {
        let st = run.atom.state(&target.state, n)?;
        let w = linewidth(&run.atom, &st, run.temperature, run.bbr.span)?;
        t.push(vec![
            target.state.as_str().into(),
            n.into(),
            run.temperature.into(),
            w.natural_hz.into(),
            w.bbr_hz.into(),
            w.total_hz.into(),
        ]);
    }
    Ok(Outcome::ok(t))
}

fn cmd_fig3(run: &Run, series: &[String], n_min: u32, n_max: u32) -> Result<Outcome> {
    if series.is_empty() || n_min > n_max {
        return Err(Error::InvalidArgument(format!("empty fig3 request: n in [{n_min}, {n_max}]")));
    }
    let jobs: Vec<(&String, u32)> = series.iter().flat_map(|s| (n_min..=n_max).map(move |n| (s, n))).collect();
    let rows: Vec<Result<(String, u32, f64, bool)>> = jobs
        .par_iter()
        .map(|&(s, n)| {
            let st = run.atom.state(s, n)?;
            let r = bbr_shift_sum(&run.atom, &st, run.temperature, &run.bbr)?;
            Ok((s.clone(), n, r.shift_hz, r.converged))
        })
        .collect();
    let mut t = Table::new("fig3", &["n", "series", "shift_hz", "converged"]);
    let mut converged = true;
    for r in rows {
        let (s, n, shift, c) = r?;
        converged &= c;
        t.push(vec![n.into(), s.into(), shift.into(), c.into()]);
    }
    Ok(Outcome { table: t, converged })
}

fn read_input(path: &PathBuf) -> Result<Vec<rydtherm::output::MeasurementRow>> {
    let f = File::open(path).map_err(|source| Error::Io { path: path.clone(), source })?;
    let rows = read_measurements(f)?;
    if rows.is_empty() {
        return Err(Error::Validation(format!("{}: no measurements", path.display())));
    }
    Ok(rows)
}

fn cmd_thermo(run: &Run, cmd: &ThermoCommand) -> Result<Outcome> {
    match cmd {
        ThermoCommand::Invert { input, seed } => {
            let rows = read_input(input)?;
            let mut t = Table::new(
                "thermo-invert",
                &["transition", "offset_hz", "sigma_hz", "temperature_k", "sigma_temperature_k", "residual_hz"],
            );
            for r in rows {
                let model = parse_transition(&run.atom, &r.transition, run.bbr)?;
                let s = invert_temperature(&model, &Measurement::new(r.offset_hz, r.sigma_hz)?, *seed)?;
                t.push(vec![
                    r.transition.into(),
                    r.offset_hz.into(),
                    r.sigma_hz.into(),
                    s.temperature.into(),
                    s.sigma_temperature.into(),
                    s.residuals[0].into(),
                ]);
            }
            Ok(Outcome::ok(t))
        }
        ThermoCommand::Joint { input, seed } => {
            let rows = read_input(input)?;
            let models = rows
                .iter()
                .map(|r| parse_transition(&run.atom, &r.transition, run.bbr))
                .collect::<Result<Vec<_>>>()?;
            let ms = rows.iter().map(|r| Measurement::new(r.offset_hz, r.sigma_hz)).collect::<Result<Vec<_>>>()?;
            let pairs: Vec<_> = models.iter().zip(ms).collect();
            let s = joint_solve(&pairs, *seed)?;
            let mut t = Table::new("thermo-joint", &["quantity", "value", "unit"]);
            let mut q = |name: &str, v: Cell, unit: &str| t.push(vec![name.into(), v, unit.into()]);
            q("temperature", s.temperature.into(), "K");
            q("sigma_temperature", s.sigma_temperature.into(), "K");
            q("field", s.field_v_per_m.into(), "V/m");
            q("sigma_field", s.sigma_field.into(), "V/m");
            q("field_squared", s.field_sq.into(), "V^2/m^2");
            q("field_clamped", s.field_clamped.into(), "");
            q("cov_t_t", s.covariance[0][0].into(), "K^2");
            q("cov_t_e2", s.covariance[0][1].into(), "K V^2/m^2");
            q("cov_e2_e2", s.covariance[1][1].into(), "V^4/m^4");
            for (r, res) in rows.iter().zip(&s.residuals) {
                q(&format!("residual[{}]", r.transition), (*res).into(), "Hz");
            }
            Ok(Outcome::ok(t))
        }
        ThermoCommand::Budget { transition, fractional, delta_t, linewidth: lw, atoms, kappa } => {
            let model = parse_transition(&run.atom, transition, run.bbr)?;
            let sens = model.sensitivity(run.temperature)?;
            let freq = model.frequency_hz();
            let width = match lw {
                Some(w) => *w,
                None => {
                    // the metastable lower level contributes nothing on this scale
                    let mut w = 0.0;
                    for level in [&model.lower, &model.upper] {
                        if let Level::Rydberg(st) = level {
                            w += linewidth(&run.atom, st, run.temperature, run.bbr.span)?.total_hz;
                        }
                    }
                    w
                }
            };
            let clock = match model.lower {
                Level::Listed(_) => run.atom.species.clock.as_ref(),
                Level::Rydberg(_) => None,
            };
            let b = match (fractional, delta_t) {
                (_, Some(dt)) => error_budget_for_temperature(freq, *dt, sens, width, clock)?,
                (f, None) => error_budget(freq, f.unwrap_or(1.7e-16), sens, width, clock)?,
            };
            let mb = measurement_budget(*atoms, width, b.resolution_hz, *kappa)?;
            let mut t = Table::new("thermo-budget", &["quantity", "value", "unit"]);
            let mut q = |name: &str, v: Cell, unit: &str| t.push(vec![name.into(), v, unit.into()]);
            q("transition_frequency", freq.into(), "Hz");
            q("temperature", run.temperature.into(), "K");
            q("sensitivity", sens.into(), "Hz/K");
            q("fractional_accuracy", b.fractional_accuracy.into(), "");
            q("frequency_resolution", b.resolution_hz.into(), "Hz");
            q("temperature_uncertainty", b.temperature_uncertainty_k.into(), "K");
            if let Some(c) = b.clock_fractional_uncertainty {
                q("clock_fractional_bbr_uncertainty", c.into(), "");
            }
            if let Some(l) = b.leverage {
                q("leverage", l.into(), "");
            }
            q("linewidth", width.into(), "Hz");
            q("split_fraction", b.split_fraction.into(), "");
            q("split_factor", b.split_factor().into(), "");
            q("atoms", (*atoms).into(), "");
            q("snr", mb.snr.into(), "");
            q("kappa", (*kappa).into(), "");
            q("per_cycle_resolution", mb.per_cycle_hz.into(), "Hz");
            q("cycles", mb.cycles.into(), "");
            Ok(Outcome::ok(t))
        }
    }
}

fn execute(cli: &Cli) -> Result<(Outcome, RunManifest)> {
    check_temperature(cli.temperature)?;
    if !(cli.tolerance > 0.0) || cli.span == 0 {
        return Err(Error::InvalidArgument("--tolerance must be > 0 and --span >= 1".into()));
    }
    let atom = Atom::new(load_species(cli)?);
    if let Some(c) = &cli.cache {
        if c.exists() {
            atom.load_cache(c)?;
        }
    }
    let bbr = BbrSettings { span: cli.span, tolerance: cli.tolerance, ..BbrSettings::default() };
    let settings = vec![
        ("species_source".to_string(), atom.species.source.display().to_string()),
        ("temperature_k".to_string(), cli.temperature.to_string()),
        ("span".to_string(), bbr.span.to_string()),
        ("tolerance".to_string(), bbr.tolerance.to_string()),
        ("floor_hz".to_string(), bbr.floor_hz.to_string()),
        ("magic_scan_points".to_string(), MagicSettings::default().scan_points.to_string()),
        ("magic_root_tolerance".to_string(), MagicSettings::default().tolerance.to_string()),
        ("radial_step".to_string(), atom.species.radial.step.to_string()),
        ("radial_n_max".to_string(), atom.species.radial.n_max.to_string()),
    ];
    let manifest = RunManifest::new(&atom.species.data_version, std::env::args().collect(), settings);
    let run = Run { atom, bbr, temperature: cli.temperature };
    let outcome = match &cli.command {
        Command::Fw { y } => cmd_fw(y),
        Command::Fig2 { y_min, y_max, points, log } => cmd_fig2(*y_min, *y_max, *points, *log)?,
        Command::Bbr { target, method } => cmd_bbr(&run, target, *method)?,
        Command::Polarizability { target, nm, omega, units } => cmd_polarizability(&run, target, *nm, *omega, *units)?,
        Command::Magic { n, min_nm, max_nm, all, geometry } => cmd_magic(&run, n, *min_nm, *max_nm, *all, geometry)?,
        Command::Linewidth { target } => cmd_linewidth(&run, target)?,
        Command::Thermo { command } => cmd_thermo(&run, command)?,
        Command::Fig3 { series, n_min, n_max } => cmd_fig3(&run, series, *n_min, *n_max)?,
        Command::Table1 { n, geometry } => cmd_table1(&run, n, geometry)?,
    };
    if let Some(c) = &cli.cache {
        run.atom.save_cache(c)?;
    }
    Ok((outcome, manifest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (outcome, mut manifest) = match execute(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let id = manifest.id();
    let written = match &cli.output {
        Some(p) => File::create(p)
            .map_err(|source| Error::Io { path: p.clone(), source })
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                outcome.table.write(&mut w, &id)?;
                w.flush().map_err(|source| Error::Io { path: p.clone(), source })
            }),
        None => outcome.table.write(std::io::stdout().lock(), &id),
    };
    let saved = match &cli.manifest_out {
        Some(p) => manifest.save(p),
        None => Ok(()),
    };
    if let Err(e) = written.and(saved) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    if !outcome.converged {
        eprintln!("warning: some requested values did not meet the convergence test");
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}
