//! `qbattery`: steady states, trajectories, parameter sweeps, figure
//! datasets, and derivative/kink analysis from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbattery_core::dynamics::DEFAULT_DT;
use qbattery_core::eur::{self, Observable, ObservableSet};
use qbattery_core::model::{self, ChargingParams, Reservoir};
use qbattery_core::sweep::{
    detect_kink, figure_dataset, finite_difference, linspace, run_sweep, FigureId, Quantity,
    SweepMode, SweepSpec, SweptParam, DEFAULT_KINK_THRESHOLD,
};
use qbattery_core::workext::work_report;
use qbattery_core::{Error as CoreError, LogBase};

#[derive(Parser)]
#[command(name = "qbattery", version, about = "Driven-dissipative charger-battery workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state with its work and uncertainty reports.
    Steady {
        #[command(flatten)]
        params: ParamArgs,
        /// Machine-readable JSON instead of the text report.
        #[arg(long)]
        json: bool,
        /// Measured observables: Pauli labels ("xz", "xyz") or Bloch
        /// triples "nx,ny,nz;nx,ny,nz".
        #[arg(long, default_value = "xz")]
        observables: String,
    },
    /// Evolve from the joint ground state and tabulate quantities vs time.
    Evolve {
        #[command(flatten)]
        params: ParamArgs,
        /// Final time in units of 1/g.
        #[arg(long = "t-end")]
        t_end: f64,
        /// Integration step in units of 1/g.
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Number of recorded rows (including t = 0).
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Steady-state quantities over a parameter grid.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        /// Swept axis: J_over_g, F_over_g, Delta_over_g, n_b or n_f.
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// Comma-separated column subset (default: all quantities).
        #[arg(long)]
        quantities: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter-locked reproduction dataset for a known figure id.
    Figure {
        /// Figure id, e.g. fig2a, fig4c, s1b, s2a.
        id: String,
        /// Energy unit used to rescale output columns.
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite differences and kink report for a column of a sweep CSV.
    Derive {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        column: String,
        /// Kink sensitivity: jump must exceed this multiple of the median.
        #[arg(long, default_value_t = DEFAULT_KINK_THRESHOLD)]
        threshold: f64,
        /// Optional CSV of the derivative estimates.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReservoirArg {
    Bosonic,
    Fermionic,
}

/// Physical parameters from an optional TOML file plus flags; flags win.
#[derive(Args)]
struct ParamArgs {
    /// TOML parameter file (units, omega0, g, F, J, delta_A, delta_B, beta,
    /// [reservoir]).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long = "F-over-g")]
    f_over_g: Option<f64>,
    #[arg(long = "J-over-g")]
    j_over_g: Option<f64>,
    /// Sets both detunings Delta_A = Delta_B.
    #[arg(long = "delta-over-g")]
    delta_over_g: Option<f64>,
    #[arg(long, value_enum)]
    reservoir: Option<ReservoirArg>,
    /// Reservoir occupancy n.
    #[arg(long)]
    n: Option<f64>,
    /// Dimensionless inverse extraction temperature beta * omega0.
    #[arg(long = "beta-omega0")]
    beta_omega0: Option<f64>,
    /// Energy unit; rescales output only (all math runs at omega0 = 1).
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ChargingParams, CliError> {
        let mut p = match &self.params {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read {}: {e}", path.display()))
                })?;
                model::params_from_toml(&text).map_err(CliError::from)?
            }
            None => ChargingParams::resonance(2.0, 2.0),
        };
        if let Some(k) = self.f_over_g {
            p.drive = k * p.g;
        }
        if let Some(l) = self.j_over_g {
            p.dissipation = l * p.g;
        }
        if let Some(m) = self.delta_over_g {
            p.delta_a = m * p.g;
            p.delta_b = m * p.g;
        }
        match (self.reservoir, self.n) {
            (Some(kind), n) => {
                let n = n.unwrap_or(0.0);
                p.reservoir = match kind {
                    ReservoirArg::Bosonic => Reservoir::bosonic(n),
                    ReservoirArg::Fermionic => Reservoir::fermionic(n),
                }?;
            }
            (None, Some(n)) => {
                p.reservoir = Reservoir::new(p.reservoir.kind(), n)?;
            }
            (None, None) => {}
        }
        if let Some(b) = self.beta_omega0 {
            p.beta = b;
        }
        p.validate()?;
        Ok(p)
    }
}

enum CliError {
    Usage(String),
    Numeric(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParams(_)
            | CoreError::Config(_)
            | CoreError::UnknownFigure(..)
            | CoreError::NonUniformGrid { .. }
            | CoreError::DegenerateObservable { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Steady { params, json, observables } => steady(&params, json, &observables),
        Command::Evolve { params, t_end, dt, points, out } => {
            evolve(&params, t_end, dt, points, &out)
        }
        Command::Sweep { params, sweep, from, to, points, quantities, out } => {
            sweep_cmd(&params, &sweep, from, to, points, quantities.as_deref(), &out)
        }
        Command::Figure { id, omega0, out } => figure(&id, omega0, &out),
        Command::Derive { input, column, threshold, out } => {
            derive(&input, &column, threshold, out.as_deref())
        }
    }
}

fn parse_observables(text: &str) -> Result<ObservableSet, CliError> {
    if text.contains(',') {
        // Bloch triples: "nx,ny,nz;nx,ny,nz;..."
        let mut observables = Vec::new();
        for triple in text.split(';') {
            let parts: Vec<f64> = triple
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("bad Bloch component in `{triple}`: {e}")))?;
            let [x, y, z]: [f64; 3] = parts
                .try_into()
                .map_err(|_| CliError::Usage(format!("`{triple}` is not a 3-vector")))?;
            observables.push(Observable::from_bloch([x, y, z])?);
        }
        Ok(ObservableSet::new(observables)?)
    } else {
        Ok(ObservableSet::paulis(text)?)
    }
}

fn steady(params: &ParamArgs, json: bool, observables: &str) -> Result<(), CliError> {
    let p = params.resolve()?;
    let set = parse_observables(observables)?;
    let rho = qbattery_core::dynamics::steady_state(&p)?;
    let mut work = work_report(&rho, &model::initial_state(), &p, LogBase::E)?;
    let eur = eur::eur_report(&rho, &set)?;

    let scale = params.omega0;
    work.e_b *= scale;
    work.de_b *= scale;
    work.w_f *= scale;
    work.w_e *= scale;

    if json {
        let rho_json: Vec<Vec<[f64; 2]>> = (0..4)
            .map(|i| (0..4).map(|j| [rho[(i, j)].re, rho[(i, j)].im]).collect())
            .collect();
        let doc = serde_json::json!({
            "params": p,
            "omega0": scale,
            "rho": rho_json,
            "work": work,
            "eur": eur,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable reports"));
    } else {
        println!("steady state (rows |ee>, |eg>, |ge>, |gg>):");
        for i in 0..4 {
            let row: Vec<String> =
                (0..4).map(|j| format!("{:+.6}{:+.6}i", rho[(i, j)].re, rho[(i, j)].im)).collect();
            println!("  [{}]", row.join("  "));
        }
        println!("E_B        = {:.12}", work.e_b);
        println!("dE_B       = {:.12}", work.de_b);
        println!("W_f        = {:.12}", work.w_f);
        println!("W_e        = {:.12}", work.w_e);
        match work.eta1 {
            Some(v) => println!("eta1       = {v:.12}"),
            None => println!("eta1       = (undefined: no stored energy)"),
        }
        match work.eta2 {
            Some(v) => println!("eta2       = {v:.12}"),
            None => println!("eta2       = (undefined: no stored energy)"),
        }
        println!("U_l        = {:.12}", eur.u_l);
        println!("U_r        = {:.12}", eur.u_r);
        println!("tightness  = {:.12}", eur.tightness);
        println!("f          = {:.12}", eur.f);
    }
    Ok(())
}

fn write_table(
    mut table: qbattery_core::sweep::SweepTable,
    omega0: f64,
    out: &std::path::Path,
) -> Result<(), CliError> {
    table.scale_energies(omega0);
    fs::write(out, table.to_csv())
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))
}

fn evolve(
    params: &ParamArgs,
    t_end: f64,
    dt: f64,
    points: usize,
    out: &std::path::Path,
) -> Result<(), CliError> {
    if t_end <= 0.0 || t_end.is_nan() {
        return Err(CliError::Usage(format!("--t-end {t_end} must be > 0")));
    }
    if points < 2 {
        return Err(CliError::Usage("--points must be >= 2".into()));
    }
    let mut spec = SweepSpec::steady(SweptParam::Time, linspace(0.0, t_end, points), params.resolve()?);
    spec.mode = SweepMode::Trajectory;
    spec.dt = dt;
    write_table(run_sweep(&spec)?, params.omega0, out)
}

fn sweep_cmd(
    params: &ParamArgs,
    sweep: &str,
    from: f64,
    to: f64,
    points: usize,
    quantities: Option<&str>,
    out: &std::path::Path,
) -> Result<(), CliError> {
    let swept = SweptParam::from_str(sweep)?;
    if points < 2 {
        return Err(CliError::Usage("--points must be >= 2".into()));
    }
    let mut spec = SweepSpec::steady(swept, linspace(from, to, points), params.resolve()?);
    if swept == SweptParam::Time {
        spec.mode = SweepMode::Trajectory;
    }
    if let Some(list) = quantities {
        let parsed: Vec<Quantity> = list
            .split(',')
            .map(|s| Quantity::from_str(s.trim()))
            .collect::<Result<_, _>>()?;
        spec = spec.with_quantities(parsed);
    }
    write_table(run_sweep(&spec)?, params.omega0, out)
}

fn figure(id: &str, omega0: f64, out: &std::path::Path) -> Result<(), CliError> {
    let id = FigureId::from_str(id)?;
    write_table(figure_dataset(id)?, omega0, out)
}

fn derive(
    input: &std::path::Path,
    column: &str,
    threshold: f64,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let (x_name, grid, values) = read_csv_column(&text, column)?;
    let series = finite_difference(&grid, &values)?;
    let kinks = detect_kink(&series, threshold);

    println!("derivative of {column} with respect to {x_name} ({} points)", grid.len());
    if kinks.is_empty() {
        println!("kinks: none");
    } else {
        let list: Vec<String> = kinks.iter().map(|x| format!("{x}")).collect();
        println!("kinks: {}", list.join(", "));
    }
    for (i, &x) in series.grid.iter().enumerate() {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:+.8e}"));
        println!(
            "  {x:<12} left {}  right {}  central {}",
            fmt(series.left[i]),
            fmt(series.right[i]),
            fmt(series.central[i]),
        );
    }

    if let Some(path) = out {
        let mut csv = format!("{x_name},left,right,central\n");
        for (i, &x) in series.grid.iter().enumerate() {
            let cell = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.16e}"));
            csv.push_str(&format!(
                "{x:.16e},{},{},{}\n",
                cell(series.left[i]),
                cell(series.right[i]),
                cell(series.central[i]),
            ));
        }
        fs::write(path, csv)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Grid column and one named column out of a sweep CSV (header row,
/// `#` comments, empty cells for absent values).
fn read_csv_column(text: &str, column: &str) -> Result<(String, Vec<f64>, Vec<f64>), CliError> {
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Usage("CSV has no header row".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let idx = header
        .iter()
        .position(|&h| h == column)
        .ok_or_else(|| CliError::Usage(format!("no column `{column}` (have: {})", header.join(", "))))?;
    if idx == 0 {
        return Err(CliError::Usage("the first column is the sweep axis, not a quantity".into()));
    }

    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (row_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() <= idx {
            return Err(CliError::Usage(format!("row {} is too short", row_no + 1)));
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                CliError::Usage(format!("row {}: bad number `{}`: {e}", row_no + 1, s.trim()))
            })
        };
        if cells[idx].trim().is_empty() {
            return Err(CliError::Usage(format!(
                "column `{column}` has an absent value at row {}",
                row_no + 1
            )));
        }
        grid.push(parse(cells[0])?);
        values.push(parse(cells[idx])?);
    }
    Ok((header[0].to_string(), grid, values))
}
