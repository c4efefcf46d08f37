//! Deterministic parameter-sweep engine, finite-difference analysis, kink
//! detection, and the parameter-locked figure dataset registry.
//!
//! Grid points are independent work items computed in parallel and collected
//! back into grid order, so two runs of the same spec serialize to
//! byte-identical CSV.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics;
use crate::error::{Error, Result};
use crate::eur::{self, ObservableSet};
use crate::model::{self, ChargingParams, Reservoir};
use crate::qla::LogBase;
use crate::workext;

/// Default multiplier for the kink detector: a derivative jump counts as a
/// kink when it exceeds this many times the median jump of the series.
pub const DEFAULT_KINK_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    JOverG,
    FOverG,
    DeltaOverG,
    NB,
    NF,
    Time,
}

impl SweptParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParam::JOverG => "J_over_g",
            SweptParam::FOverG => "F_over_g",
            SweptParam::DeltaOverG => "Delta_over_g",
            SweptParam::NB => "n_b",
            SweptParam::NF => "n_f",
            SweptParam::Time => "t",
        }
    }
}

impl FromStr for SweptParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "J_over_g" => Ok(SweptParam::JOverG),
            "F_over_g" => Ok(SweptParam::FOverG),
            "Delta_over_g" => Ok(SweptParam::DeltaOverG),
            "n_b" => Ok(SweptParam::NB),
            "n_f" => Ok(SweptParam::NF),
            "t" => Ok(SweptParam::Time),
            other => Err(Error::InvalidParams(format!(
                "unknown sweep parameter `{other}` (J_over_g, F_over_g, Delta_over_g, n_b, n_f, t)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    EB,
    DEB,
    Wf,
    We,
    Eta1,
    Eta2,
    Ul,
    Ur,
    Tightness,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::EB,
        Quantity::DEB,
        Quantity::Wf,
        Quantity::We,
        Quantity::Eta1,
        Quantity::Eta2,
        Quantity::Ul,
        Quantity::Ur,
        Quantity::Tightness,
    ];

    pub fn column_name(&self) -> &'static str {
        match self {
            Quantity::EB => "E_B",
            Quantity::DEB => "dE_B",
            Quantity::Wf => "W_f",
            Quantity::We => "W_e",
            Quantity::Eta1 => "eta1",
            Quantity::Eta2 => "eta2",
            Quantity::Ul => "U_l",
            Quantity::Ur => "U_r",
            Quantity::Tightness => "tightness",
        }
    }

    /// Whether the column carries units of omega0 (and rescales with it).
    pub fn is_energy(&self) -> bool {
        matches!(self, Quantity::EB | Quantity::DEB | Quantity::Wf | Quantity::We)
    }

    fn extract(&self, work: &workext::WorkReport, eur: &eur::EurReport) -> Option<f64> {
        match self {
            Quantity::EB => Some(work.e_b),
            Quantity::DEB => Some(work.de_b),
            Quantity::Wf => Some(work.w_f),
            Quantity::We => Some(work.w_e),
            Quantity::Eta1 => work.eta1,
            Quantity::Eta2 => work.eta2,
            Quantity::Ul => Some(eur.u_l),
            Quantity::Ur => Some(eur.u_r),
            Quantity::Tightness => Some(eur.tightness),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.column_name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown quantity `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Steady,
    Trajectory,
}

/// One sweep: a parameter axis, a grid, the fixed parameter template, and
/// the quantities to tabulate.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub swept: SweptParam,
    pub grid: Vec<f64>,
    pub fixed: ChargingParams,
    pub quantities: Vec<Quantity>,
    pub mode: SweepMode,
    /// Integration step for trajectory mode, in units of 1/g.
    pub dt: f64,
    /// Entropy base inside the free energies.
    pub thermo_log_base: LogBase,
}

impl SweepSpec {
    pub fn steady(swept: SweptParam, grid: Vec<f64>, fixed: ChargingParams) -> Self {
        SweepSpec {
            swept,
            grid,
            fixed,
            quantities: Quantity::ALL.to_vec(),
            mode: SweepMode::Steady,
            dt: dynamics::DEFAULT_DT,
            thermo_log_base: LogBase::E,
        }
    }

    pub fn with_quantities(mut self, quantities: Vec<Quantity>) -> Self {
        self.quantities = quantities;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        if self.grid.is_empty() {
            return Err(Error::InvalidParams("sweep grid is empty".into()));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParams("sweep grid must be strictly ascending".into()));
        }
        for &x in &self.grid {
            let in_domain = match self.swept {
                SweptParam::JOverG | SweptParam::FOverG => x >= 0.0,
                SweptParam::DeltaOverG => x.is_finite(),
                SweptParam::NB => x >= 0.0,
                SweptParam::NF => (0.0..=1.0).contains(&x),
                SweptParam::Time => x >= 0.0,
            };
            if !in_domain {
                return Err(Error::InvalidParams(format!(
                    "grid value {x} outside the domain of {}",
                    self.swept.name()
                )));
            }
        }
        if self.mode == SweepMode::Trajectory && self.swept != SweptParam::Time {
            return Err(Error::InvalidParams("trajectory mode sweeps t".into()));
        }
        if self.mode == SweepMode::Steady && self.swept == SweptParam::Time {
            return Err(Error::InvalidParams("steady mode cannot sweep t".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

/// Tabulated sweep results, one row per grid point in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Column names, starting with the swept parameter.
    pub header: Vec<String>,
    /// Per value-column flag: does the column carry units of omega0?
    pub energy_columns: Vec<bool>,
    pub rows: Vec<SweepRow>,
    /// `#`-prefixed metadata lines (without the prefix).
    pub comments: Vec<String>,
}

impl SweepTable {
    /// Rescale energy columns; everything is computed with omega0 = 1
    /// internally and scaled only on output.
    pub fn scale_energies(&mut self, omega0: f64) {
        for row in &mut self.rows {
            for (value, &is_energy) in row.values.iter_mut().zip(&self.energy_columns) {
                if is_energy {
                    if let Some(v) = value {
                        *v *= omega0;
                    }
                }
            }
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.header.iter().position(|h| h == name)?;
        if idx == 0 {
            return Some(self.rows.iter().map(|r| Some(r.x)).collect());
        }
        Some(self.rows.iter().map(|r| r.values.get(idx - 1).copied().flatten()).collect())
    }

    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.x).collect()
    }

    /// Serialize to CSV: comment lines, header, then one row per grid point
    /// with 17 significant digits and absent values as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in &self.comments {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let mut fields = vec![fmt_float(row.x)];
            for value in &row.values {
                fields.push(value.map(fmt_float).unwrap_or_default());
            }
            if self.header.len() == row.values.len() + 2 {
                fields.push(row.error.clone().unwrap_or_default());
            }
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn params_comment(p: &ChargingParams) -> String {
    let kind = match p.reservoir.kind() {
        model::ReservoirKind::Bosonic => "bosonic",
        model::ReservoirKind::Fermionic => "fermionic",
    };
    format!(
        "omega0={} g={} F={} J={} delta_A={} delta_B={} reservoir={} n={} beta={}",
        p.omega0,
        p.g,
        p.drive,
        p.dissipation,
        p.delta_a,
        p.delta_b,
        kind,
        p.reservoir.occupancy(),
        p.beta
    )
}

fn apply_swept(template: &ChargingParams, swept: SweptParam, x: f64) -> Result<ChargingParams> {
    let mut p = *template;
    match swept {
        SweptParam::JOverG => p.dissipation = x * p.g,
        SweptParam::FOverG => p.drive = x * p.g,
        SweptParam::DeltaOverG => {
            p.delta_a = x * p.g;
            p.delta_b = x * p.g;
        }
        SweptParam::NB => p.reservoir = Reservoir::bosonic(x)?,
        SweptParam::NF => p.reservoir = Reservoir::fermionic(x)?,
        SweptParam::Time => {}
    }
    Ok(p)
}

/// All requested quantities at one steady-state grid point, with the
/// charging reference |gg><gg|.  Public so tests can recompute single points
/// (and reversed grids) independently of the engine's execution order.
pub fn evaluate_point(spec: &SweepSpec, x: f64) -> Result<Vec<Option<f64>>> {
    let p = apply_swept(&spec.fixed, spec.swept, x)?;
    let rho = dynamics::steady_state(&p)?;
    let work = workext::work_report(&rho, &model::initial_state(), &p, spec.thermo_log_base)?;
    let eur = eur::eur_report(&rho, &ObservableSet::xz())?;
    Ok(spec.quantities.iter().map(|q| q.extract(&work, &eur)).collect())
}

/// Run a sweep.  Points are computed in parallel; per-point failures land in
/// the `error` column without aborting the rest of the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    if spec.mode == SweepMode::Trajectory {
        return trajectory_table(spec);
    }
    let rows: Vec<SweepRow> = spec
        .grid
        .par_iter()
        .map(|&x| match evaluate_point(spec, x) {
            Ok(values) => SweepRow { x, values, error: None },
            Err(e) => SweepRow {
                x,
                values: vec![None; spec.quantities.len()],
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut header = vec![spec.swept.name().to_string()];
    header.extend(spec.quantities.iter().map(|q| q.column_name().to_string()));
    header.push("error".to_string());
    Ok(SweepTable {
        header,
        energy_columns: spec.quantities.iter().map(Quantity::is_energy).collect(),
        rows,
        comments: vec![
            format!("qbattery sweep v{}", env!("CARGO_PKG_VERSION")),
            format!("swept={} mode=steady", spec.swept.name()),
            params_comment(&spec.fixed),
        ],
    })
}

/// Trajectory sweep: evolve from |gg><gg| and tabulate quantities at the
/// requested (uniform, from zero) record times.
fn trajectory_table(spec: &SweepSpec) -> Result<SweepTable> {
    let grid = &spec.grid;
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::InvalidParams("trajectory grid must start at t = 0".into()));
    }
    let spacing = grid[1] - grid[0];
    let max_dev = grid
        .windows(2)
        .map(|w| ((w[1] - w[0]) - spacing).abs())
        .fold(0.0, f64::max);
    if max_dev > 1e-9 * spacing {
        return Err(Error::NonUniformGrid { dev: max_dev });
    }
    // choose a dt that lands exactly on the record times
    let per_record = (spacing / spec.dt).ceil().max(1.0);
    let dt = spacing / per_record;
    let t_end = *grid.last().expect("validated nonempty");
    let rho0 = model::initial_state();
    let traj = dynamics::evolve(&spec.fixed, &rho0, t_end, dt, per_record as usize)?;

    let mut rows = Vec::with_capacity(grid.len());
    for (&t, rho) in traj.times.iter().zip(&traj.states) {
        let work = workext::work_report(rho, &rho0, &spec.fixed, spec.thermo_log_base)?;
        let eur = eur::eur_report(rho, &ObservableSet::xz())?;
        rows.push(SweepRow {
            x: t,
            values: spec.quantities.iter().map(|q| q.extract(&work, &eur)).collect(),
            error: None,
        });
    }

    let mut header = vec!["t".to_string()];
    header.extend(spec.quantities.iter().map(|q| q.column_name().to_string()));
    header.push("error".to_string());
    Ok(SweepTable {
        header,
        energy_columns: spec.quantities.iter().map(Quantity::is_energy).collect(),
        rows,
        comments: vec![
            format!("qbattery sweep v{}", env!("CARGO_PKG_VERSION")),
            format!("swept=t mode=trajectory dt={dt}"),
            params_comment(&spec.fixed),
        ],
    })
}

/// One-sided and central finite-difference estimates on a uniform grid.
/// Endpoints only have the inward one-sided estimate.
#[derive(Debug, Clone)]
pub struct DerivativeSeries {
    pub grid: Vec<f64>,
    pub left: Vec<Option<f64>>,
    pub right: Vec<Option<f64>>,
    pub central: Vec<Option<f64>>,
}

pub fn finite_difference(grid: &[f64], values: &[f64]) -> Result<DerivativeSeries> {
    if grid.len() < 3 {
        return Err(Error::InvalidParams("finite differences need >= 3 points".into()));
    }
    if grid.len() != values.len() {
        return Err(Error::InvalidParams("grid and series lengths differ".into()));
    }
    let h = grid[1] - grid[0];
    if h <= 0.0 {
        return Err(Error::InvalidParams("grid must be ascending".into()));
    }
    let max_dev = grid.windows(2).map(|w| ((w[1] - w[0]) - h).abs()).fold(0.0, f64::max);
    if max_dev > 1e-9 * h {
        return Err(Error::NonUniformGrid { dev: max_dev });
    }
    let n = grid.len();
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    let mut central = vec![None; n];
    for i in 0..n {
        if i > 0 {
            left[i] = Some((values[i] - values[i - 1]) / h);
        }
        if i + 1 < n {
            right[i] = Some((values[i + 1] - values[i]) / h);
        }
        if i > 0 && i + 1 < n {
            central[i] = Some((values[i + 1] - values[i - 1]) / (2.0 * h));
        }
    }
    Ok(DerivativeSeries { grid: grid.to_vec(), left, right, central })
}

/// Grid locations where the left and right one-sided derivatives disagree by
/// more than `threshold` times the median disagreement of the series.
///
/// The small absolute floor keeps round-off on analytically smooth series
/// from registering as kinks when the median jump is zero.
pub fn detect_kink(series: &DerivativeSeries, threshold: f64) -> Vec<f64> {
    let n = series.grid.len();
    let mut jumps: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        if let (Some(l), Some(r)) = (series.left[i], series.right[i]) {
            jumps.push((i, (r - l).abs()));
        }
    }
    if jumps.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = jumps.iter().map(|&(_, j)| j).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let scale = series
        .central
        .iter()
        .flatten()
        .map(|d| d.abs())
        .fold(0.0, f64::max);
    let floor = 1e-9 * (1.0 + scale);
    jumps
        .into_iter()
        .filter(|&(_, jump)| jump > threshold * median + floor)
        .map(|(i, _)| series.grid[i])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig5d,
    Fig6a,
    Fig6b,
    Fig6c,
    Fig6d,
    S1a,
    S1b,
    S1c,
    S1d,
    S2a,
    S2b,
}

impl FigureId {
    pub const ALL: [FigureId; 22] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig4c,
        FigureId::Fig4d,
        FigureId::Fig5a,
        FigureId::Fig5b,
        FigureId::Fig5c,
        FigureId::Fig5d,
        FigureId::Fig6a,
        FigureId::Fig6b,
        FigureId::Fig6c,
        FigureId::Fig6d,
        FigureId::S1a,
        FigureId::S1b,
        FigureId::S1c,
        FigureId::S1d,
        FigureId::S2a,
        FigureId::S2b,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig4c => "fig4c",
            FigureId::Fig4d => "fig4d",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
            FigureId::Fig5c => "fig5c",
            FigureId::Fig5d => "fig5d",
            FigureId::Fig6a => "fig6a",
            FigureId::Fig6b => "fig6b",
            FigureId::Fig6c => "fig6c",
            FigureId::Fig6d => "fig6d",
            FigureId::S1a => "s1a",
            FigureId::S1b => "s1b",
            FigureId::S1c => "s1c",
            FigureId::S1d => "s1d",
            FigureId::S2a => "s2a",
            FigureId::S2b => "s2b",
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = FigureId::ALL.iter().map(|id| id.name()).collect();
            Error::UnknownFigure(s.to_string(), valid.join(", "))
        })
    }
}

/// Uniform grid with exact endpoints; each point computed the same way every
/// run so tables are reproducible bit for bit.  The convex-combination form
/// keeps symmetric interior points (like the midpoint of a symmetric range)
/// exactly representable instead of off by one ulp.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            a * (1.0 - t) + b * t
        })
        .collect()
}

fn resonance_template() -> ChargingParams {
    ChargingParams::resonance(2.0, 2.0)
}

fn fixed(f_drive: f64, j: f64, delta: f64) -> ChargingParams {
    let mut p = resonance_template();
    p.drive = f_drive;
    p.dissipation = j;
    p.delta_a = delta;
    p.delta_b = delta;
    p
}

const WORK_COLUMNS: [Quantity; 5] =
    [Quantity::Wf, Quantity::We, Quantity::Eta1, Quantity::Eta2, Quantity::Tightness];
const EUR_COLUMNS: [Quantity; 3] = [Quantity::Ul, Quantity::Ur, Quantity::Eta2];
const S1_COLUMNS: [Quantity; 4] =
    [Quantity::Eta1, Quantity::Eta2, Quantity::Ul, Quantity::Tightness];
const S2_COLUMNS: [Quantity; 4] = [Quantity::Wf, Quantity::We, Quantity::Eta1, Quantity::Eta2];

/// Sweep specification behind a figure id.
/// The s2 panels post-process their sweep into derivative columns.
pub fn figure_spec(id: FigureId) -> SweepSpec {
    use FigureId::*;
    let coarse = linspace(0.25, 4.0, 16); // step 0.25
    let fine = linspace(0.0, 4.0, 33);
    let nb_grid = linspace(0.0, 2.0, 33);
    let nf_grid = linspace(0.05, 0.95, 19); // step 0.05
    let (swept, grid, template, quantities): (SweptParam, Vec<f64>, ChargingParams, &[Quantity]) =
        match id {
            Fig2a => (SweptParam::JOverG, coarse, fixed(2.0, 2.0, 0.0), &WORK_COLUMNS),
            Fig2b => (SweptParam::FOverG, coarse, fixed(2.0, 2.0, 0.0), &WORK_COLUMNS),
            Fig3a => (SweptParam::DeltaOverG, fine, fixed(6.0, 3.0, 0.0), &WORK_COLUMNS),
            Fig3b => (SweptParam::DeltaOverG, fine, fixed(2.0, 4.0, 0.0), &WORK_COLUMNS),
            Fig4a => (SweptParam::NB, nb_grid, fixed(4.0, 2.0, 0.0), &WORK_COLUMNS),
            Fig4b => (SweptParam::NB, nb_grid, fixed(2.0, 4.0, 0.0), &WORK_COLUMNS),
            Fig4c => (SweptParam::NB, nb_grid, fixed(4.0, 2.0, 0.1), &WORK_COLUMNS),
            Fig4d => (SweptParam::NB, nb_grid, fixed(2.0, 4.0, 0.1), &WORK_COLUMNS),
            Fig5a => (SweptParam::NF, nf_grid, fixed(4.0, 2.0, 0.0), &WORK_COLUMNS),
            Fig5b => (SweptParam::NF, nf_grid, fixed(2.0, 4.0, 0.0), &WORK_COLUMNS),
            Fig5c => (SweptParam::NF, nf_grid, fixed(4.0, 2.0, 0.1), &WORK_COLUMNS),
            Fig5d => (SweptParam::NF, nf_grid, fixed(2.0, 4.0, 0.1), &WORK_COLUMNS),
            Fig6a => (SweptParam::FOverG, coarse, fixed(2.0, 2.0, 0.0), &EUR_COLUMNS),
            Fig6b => (SweptParam::DeltaOverG, fine, fixed(6.0, 3.0, 0.0), &EUR_COLUMNS),
            Fig6c => (SweptParam::NB, nb_grid, fixed(2.0, 4.0, 0.0), &EUR_COLUMNS),
            Fig6d => (SweptParam::NF, nf_grid, fixed(2.0, 4.0, 0.0), &EUR_COLUMNS),
            S1a => (SweptParam::FOverG, coarse, fixed(2.0, 4.0, 0.0), &S1_COLUMNS),
            S1b => (SweptParam::FOverG, coarse, fixed(2.0, 10.0, 0.0), &S1_COLUMNS),
            S1c => (SweptParam::FOverG, coarse, fixed(2.0, 100.0, 0.0), &S1_COLUMNS),
            S1d => (SweptParam::FOverG, coarse, fixed(2.0, 1000.0, 0.0), &S1_COLUMNS),
            S2a => (SweptParam::NF, nf_grid, fixed(4.0, 2.0, 0.0), &S2_COLUMNS),
            S2b => (SweptParam::NF, nf_grid, fixed(2.0, 4.0, 0.0), &S2_COLUMNS),
        };
    SweepSpec::steady(swept, grid, template).with_quantities(quantities.to_vec())
}

/// Parameter-locked figure dataset.
pub fn figure_dataset(id: FigureId) -> Result<SweepTable> {
    let spec = figure_spec(id);
    let mut table = run_sweep(&spec)?;
    table.comments[1] = format!("figure={} {}", id.name(), table.comments[1]);
    if matches!(id, FigureId::S2a | FigureId::S2b) {
        table = derivative_table(id, &spec, &table)?;
    }
    Ok(table)
}

/// First-order partial derivatives of the s2 columns with respect to n_f:
/// central differences away from kinks, one-sided at boundaries and within
/// one grid step of a detected kink.
fn derivative_table(id: FigureId, spec: &SweepSpec, table: &SweepTable) -> Result<SweepTable> {
    let grid = table.grid();
    let mut header = vec![spec.swept.name().to_string()];
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for q in &spec.quantities {
        let values: Vec<f64> = table
            .column(q.column_name())
            .expect("column present")
            .into_iter()
            .map(|v| v.ok_or_else(|| Error::InvalidParams("absent value in sweep".into())))
            .collect::<Result<_>>()?;
        let series = finite_difference(&grid, &values)?;
        let kinks = detect_kink(&series, DEFAULT_KINK_THRESHOLD);
        let kink_indices: Vec<usize> = kinks
            .iter()
            .map(|&x| grid.iter().position(|&g| g == x).expect("kink lies on the grid"))
            .collect();
        let n = grid.len();
        let mut column = Vec::with_capacity(n);
        for i in 0..n {
            let near_kink = kink_indices.iter().any(|&k| i + 1 == k || i == k || i == k + 1);
            let estimate = if i == 0 {
                series.right[i]
            } else if i + 1 == n {
                series.left[i]
            } else if near_kink {
                // one-sided from the side facing away from the kink; at the
                // kink point itself take the post-transition slope
                let before = kink_indices.iter().any(|&k| i + 1 == k);
                if before {
                    series.left[i]
                } else {
                    series.right[i]
                }
            } else {
                series.central[i]
            };
            column.push(estimate);
        }
        header.push(format!("d{}_d{}", q.column_name(), spec.swept.name()));
        columns.push(column);
    }

    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| SweepRow {
            x,
            values: columns.iter().map(|col| col[i]).collect(),
            error: None,
        })
        .collect();
    let mut comments = table.comments.clone();
    comments[1] = format!(
        "figure={} derivative columns, kink threshold {}",
        id.name(),
        DEFAULT_KINK_THRESHOLD
    );
    Ok(SweepTable {
        header,
        energy_columns: spec.quantities.iter().map(Quantity::is_energy).collect(),
        rows,
        comments,
    })
}
