//! Batch front end: argument parsing, dispatch to the library, CSV tables
//! with a provenance header, and log–log SVG plots for scale studies.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certify::{
    certificate, dilation_uniform_certificate, empirical_frame_bounds, fundamental_nu_grid, schur_epsilon, Certificate,
    FrameModel, OmegaSource, SchurConfig, EMPIRICAL_ALLOWANCE,
};
use crate::discrepancy::{admissible_rate, decay_fit, dilation_discrepancy, shift_discrepancy, ShiftConfig};
use crate::error::{Error, Result};
use crate::gabor::{golden_section_min, omega_gaussian_closed, omega_numeric, GaussianWindow};
use crate::geometry::Rect;
use crate::lattice::{parse_lattice_config, Lattice};
use crate::quadrature::{kh_bound, partial_norms, qmc_weights, quadrature_error_within, Gaussian, PointSet, Sampling};

/// `1/√2`, the minimizer of the closed-form Ω.
pub const SIGMA_OPT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Exit status of a successful run whose certificate does not certify.
pub const EXIT_INVALID_CERTIFICATE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "qmcframes", version, about = "Discrepancy, planar quadrature and Gabor frame certificates")]
#[command(allow_negative_numbers = true, propagate_version = true)]
pub struct RunConfig {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CommonArgs {
    /// `golden`, `zsq`, or a lattice config file.
    #[arg(long, global = true, default_value = "golden")]
    pub lattice: String,
    /// Lattice scale `a`.
    #[arg(long, global = true, allow_negative_numbers = true, value_parser = positive("scale"))]
    pub scale: Option<f64>,
    /// Lattice dilation, also used as the window dilation.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0, value_parser = positive("tau"))]
    pub tau: f64,
    /// Window width parameter.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = SIGMA_OPT, value_parser = positive("sigma"))]
    pub sigma: f64,
    /// Discrepancy anchors per side of the fundamental parallelogram.
    #[arg(long, global = true, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub grid: u32,
    /// Discrepancy refinement rounds.
    #[arg(long, global = true, default_value_t = 3)]
    pub refine: usize,
    /// Directory for CSV and SVG output; stdout only when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Shift discrepancy of the scaled lattice.
    Discrepancy,
    /// Shift discrepancy over a ladder of scales with a log–log fit.
    Decay {
        #[arg(long, value_delimiter = ',', value_parser = positive("scales"),
              default_values_t = [0.5, 0.25, 0.125, 0.0625, 0.03125])]
        scales: Vec<f64>,
    },
    /// Dilation discrepancy over `τ` samples, for one or more scales.
    Dilation {
        #[arg(long, value_delimiter = ',', value_parser = positive("scales"))]
        scales: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = positive("taus"),
              default_values_t = [0.25, 0.5, 1.0, 2.0, 4.0])]
        taus: Vec<f64>,
    },
    /// Quadrature weights of the lattice (or a point file) inside a box.
    Weights {
        /// `x0,x1,y0,y1`.
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [-3.0, 3.0, -3.0, 3.0])]
        region: Vec<f64>,
        /// CSV with `x,y,weight` columns; the weight column is ignored.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Quadrature error of a Gaussian test function against the KH bound.
    Quadrature {
        /// `cx,cy`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0])]
        center: Vec<f64>,
        /// `sx,sy` in `exp(−π(x²/sx² + y²/sy²))`.
        #[arg(long, value_delimiter = ',', value_parser = positive("widths"), default_values_t = [1.0, 1.0])]
        widths: Vec<f64>,
        #[arg(long, default_value_t = 1e-12, value_parser = positive("tol"))]
        tol: f64,
    },
    /// Closed-form and numeric Ω of the Gaussian window.
    Omega,
    /// Direct Schur estimate of `ε`.
    Schur {
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
        nu_grid: u32,
        #[arg(long, default_value_t = 1e-10, value_parser = positive("tol"))]
        tol: f64,
    },
    /// Frame-bound certificate `1 ± D*·Ω`.
    Certify {
        #[arg(long, value_enum, default_value_t = OmegaChoice::Closed)]
        omega: OmegaChoice,
        /// Window dilations for a dilation-uniform certificate.
        #[arg(long, value_delimiter = ',', value_parser = positive("taus"))]
        uniform_taus: Vec<f64>,
    },
    /// Empirical frame bounds on a Hermite test subspace.
    Framebounds {
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
        dim: u32,
        #[arg(long, value_parser = positive("time-span"))]
        time_span: Option<f64>,
        #[arg(long, value_parser = positive("freq-span"))]
        freq_span: Option<f64>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        samples: Option<u32>,
    },
    /// Finite-box admissibility margin and continued-fraction criterion.
    Admissibility {
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        bound: u64,
        #[arg(long, default_value_t = 10_000)]
        terms: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OmegaChoice {
    Closed,
    Numeric,
}

impl From<OmegaChoice> for OmegaSource {
    fn from(c: OmegaChoice) -> Self {
        match c {
            OmegaChoice::Closed => OmegaSource::Closed,
            OmegaChoice::Numeric => OmegaSource::Numeric,
        }
    }
}

fn positive(name: &'static str) -> impl Fn(&str) -> std::result::Result<f64, String> + Clone {
    move |s: &str| {
        let v: f64 = s.trim().parse().map_err(|_| format!("{name} must be a number"))?;
        if !v.is_finite() {
            return Err(format!("{name} must be finite"));
        }
        if v <= 0.0 {
            return Err(format!("{name} must be positive"));
        }
        Ok(v)
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Discrepancy => "discrepancy",
            Command::Decay { .. } => "decay",
            Command::Dilation { .. } => "dilation",
            Command::Weights { .. } => "weights",
            Command::Quadrature { .. } => "quadrature",
            Command::Omega => "omega",
            Command::Schur { .. } => "schur",
            Command::Certify { .. } => "certify",
            Command::Framebounds { .. } => "framebounds",
            Command::Admissibility { .. } => "admissibility",
        }
    }
}

/// Failure of a CLI run: a usage problem or a library error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Library(_) => "library",
            CliError::Io(_) => "io",
        }
    }

    /// One line, `error kind=<kind> message="<text>"`.
    pub fn machine_line(&self) -> String {
        let msg = self.to_string().replace('\n', " ").replace('"', "'");
        format!("error kind={} message=\"{}\"", self.kind(), msg.trim())
    }
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

/// One CSV table of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, provenance: &str) -> String {
        let mut s = String::from(provenance);
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Value of `column` in the first row whose first cell is `key`.
    pub fn lookup(&self, key: &str, column: &str) -> Option<&str> {
        let c = self.header.iter().position(|h| h == column)?;
        self.rows.iter().find(|r| r[0] == key).map(|r| r[c].as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub plots: Vec<(String, String)>,
    /// True when a certificate was computed and does not certify.
    pub invalid_certificate: bool,
}

/// Full-precision, locale-independent float formatting.
fn num(v: f64) -> String {
    format!("{v:e}")
}

fn kv(table: &mut Table, key: &str, v: String) {
    table.push(vec![key.into(), v]);
}

impl RunConfig {
    pub fn shift_config(&self) -> ShiftConfig {
        ShiftConfig {
            grid_resolution: 1.0 / self.common.grid as f64,
            refinement_rounds: self.common.refine,
            ..ShiftConfig::default()
        }
    }

    /// Comment header listing the subcommand and every effective parameter.
    pub fn provenance(&self) -> String {
        let c = &self.common;
        let cfg = self.shift_config();
        let mut s = String::new();
        let _ = writeln!(s, "# qmcframes {} {}", env!("CARGO_PKG_VERSION"), self.command.name());
        let _ = writeln!(
            s,
            "# lattice={} scale={} tau={} sigma={} grid_resolution={} refinement_rounds={} refine_candidates={} seed={}",
            c.lattice,
            c.scale.map_or("none".into(), num),
            num(c.tau),
            num(c.sigma),
            num(cfg.grid_resolution),
            cfg.refinement_rounds,
            cfg.refine_candidates,
            c.seed
        );
        let _ = writeln!(s, "# command={:?}", self.command);
        s
    }

    fn base_lattice(&self) -> std::result::Result<Lattice, CliError> {
        match self.common.lattice.as_str() {
            "golden" => Ok(Lattice::golden()),
            "zsq" => Ok(Lattice::integer()),
            path => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read lattice file `{path}`: {e}")))?;
                Ok(parse_lattice_config(&text)?)
            }
        }
    }

    fn scale(&self, base: &Lattice) -> f64 {
        self.common.scale.unwrap_or(base.scale())
    }

    /// Base lattice at the requested scale and dilation.
    fn lattice(&self) -> std::result::Result<Lattice, CliError> {
        let base = self.base_lattice()?;
        let a = self.scale(&base);
        Ok(base.with_scale(a)?.with_tau(self.common.tau)?)
    }

    fn window(&self) -> Result<GaussianWindow> {
        GaussianWindow::new(self.common.sigma, self.common.tau)
    }
}

fn expect_len(flag: &str, v: &[f64], n: usize) -> std::result::Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::Usage(format!("{flag} takes {n} comma-separated values, got {}", v.len())));
    }
    Ok(())
}

/// Runs the configured subcommand and collects its tables and plots.
pub fn execute(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let shift = cfg.shift_config();
    let mut report = Report::default();
    match &cfg.command {
        Command::Discrepancy => {
            let lat = cfg.lattice()?;
            let d = shift_discrepancy(&lat, &shift)?;
            let mut t = Table::new(
                "discrepancy",
                &["a", "tau", "d_lower", "d_estimate", "grid_resolution", "anchors", "argmax_x", "argmax_y"],
            );
            t.push(vec![
                num(lat.scale()),
                num(lat.tau()),
                num(d.lower_bound),
                num(d.estimate),
                num(d.grid_resolution),
                d.anchors_evaluated.to_string(),
                num(d.argmax_anchor[0]),
                num(d.argmax_anchor[1]),
            ]);
            report.tables.push(t);
        }
        Command::Decay { scales } => {
            let lat = cfg.base_lattice()?.with_tau(cfg.common.tau)?;
            let fit = decay_fit(&lat, scales, &shift)?;
            let mut t = Table::new("decay", &["a", "d_lower", "d_estimate", "reference_rate"]);
            for r in &fit.table {
                t.push(vec![
                    num(r.a),
                    num(r.estimate.lower_bound),
                    num(r.estimate.estimate),
                    num(admissible_rate(r.a)),
                ]);
            }
            let mut f = Table::new("decay_fit", &["quantity", "value"]);
            kv(&mut f, "slope", num(fit.slope));
            kv(&mut f, "c_hat", num(fit.c_hat));
            let pts: Vec<(f64, f64)> = fit.table.iter().map(|r| (r.a, r.estimate.estimate)).collect();
            report.plots.push(("decay".into(), decay_plot("shift discrepancy", &pts, fit.slope, fit.c_hat)));
            report.tables.push(t);
            report.tables.push(f);
        }
        Command::Dilation { scales, taus } => {
            let base = cfg.base_lattice()?;
            let scales = if scales.is_empty() { vec![cfg.scale(&base)] } else { scales.clone() };
            let mut per = Table::new("dilation", &["a", "tau", "d_lower", "d_estimate"]);
            let mut sum = Table::new("dilation_summary", &["a", "d_dil", "argmax_tau", "ratio_to_tau1"]);
            let mut pts = Vec::new();
            for &a in &scales {
                let dil = dilation_discrepancy(&base, a, taus, &shift)?;
                for (tau, est) in &dil.per_tau {
                    per.push(vec![num(a), num(*tau), num(est.lower_bound), num(est.estimate)]);
                }
                let ratio = dil
                    .per_tau
                    .iter()
                    .find(|(t, _)| *t == 1.0)
                    .map_or("none".into(), |(_, e)| num(dil.estimate.estimate / e.estimate));
                sum.push(vec![num(a), num(dil.estimate.estimate), num(dil.argmax_tau), ratio]);
                pts.push((a, dil.estimate.estimate));
            }
            if pts.len() >= 2 {
                let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
                let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
                let slope = crate::discrepancy::least_squares_slope(&xs, &ys);
                let c_hat = pts.iter().map(|&(a, d)| d / admissible_rate(a)).fold(0.0, f64::max);
                let mut f = Table::new("dilation_fit", &["quantity", "value"]);
                kv(&mut f, "slope", num(slope));
                kv(&mut f, "c_hat", num(c_hat));
                report.plots.push(("dilation".into(), decay_plot("dilation discrepancy", &pts, slope, c_hat)));
                report.tables.extend([per, sum, f]);
            } else {
                report.tables.extend([per, sum]);
            }
        }
        Command::Weights { region, points } => {
            expect_len("--box", region, 4)?;
            let rect = Rect::new(region[0], region[1], region[2], region[3])?;
            let set = match points {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| CliError::Usage(format!("cannot read point file `{}`: {e}", path.display())))?;
                    let pts = PointSet::from_csv(&text)?;
                    qmc_weights(Sampling::Points(pts.points()), &rect)?
                }
                None => qmc_weights(Sampling::Lattice(&cfg.lattice()?), &rect)?,
            };
            let mut t = Table::new("weights", &["x", "y", "weight"]);
            for (p, w) in set.points().iter().zip(set.weights()) {
                t.push(vec![num(p[0]), num(p[1]), num(*w)]);
            }
            report.tables.push(t);
        }
        Command::Quadrature { center, widths, tol } => {
            expect_len("--center", center, 2)?;
            expect_len("--widths", widths, 2)?;
            let lat = cfg.lattice()?;
            let h = Gaussian::new([center[0], center[1]], widths[0], widths[1])?;
            let q = quadrature_error_within(&h, &lat, *tol)?;
            let d = shift_discrepancy(&lat, &shift)?;
            let norms = partial_norms(&h)?;
            let bound = kh_bound(&h, d.estimate)?;
            let mut t = Table::new("quadrature", &["quantity", "value"]);
            kv(&mut t, "error_re", num(q.value.re));
            kv(&mut t, "error_im", num(q.value.im));
            kv(&mut t, "integral", num(q.integral.re));
            kv(&mut t, "weighted_sum", num(q.weighted_sum.re));
            kv(&mut t, "budget", num(q.budget));
            kv(&mut t, "radius", num(q.radius));
            kv(&mut t, "points_used", q.points_used.to_string());
            kv(&mut t, "norm_d1", num(norms.norms[0]));
            kv(&mut t, "norm_d2", num(norms.norms[1]));
            kv(&mut t, "norm_d12", num(norms.norms[2]));
            kv(&mut t, "d_estimate", num(d.estimate));
            kv(&mut t, "kh_bound", num(bound));
            kv(&mut t, "kh_holds", (q.value.norm() <= bound).to_string());
            report.tables.push(t);
        }
        Command::Omega => {
            let w = cfg.window()?;
            let s = w.width();
            let closed = omega_gaussian_closed(s)?;
            let opt = golden_section_min(|x| omega_gaussian_closed(x).unwrap_or(f64::INFINITY), 0.1, 10.0, 1e-10);
            let numeric = omega_numeric(&w)?;
            let mut t = Table::new("omega", &["quantity", "value"]);
            kv(&mut t, "omega_closed", format!("{closed:.10}"));
            kv(&mut t, "sigma_opt", format!("{opt:.10}"));
            kv(&mut t, "omega_numeric", num(numeric.bound));
            for (k, name) in ["norm_g", "norm_dg", "norm_zg", "norm_zdg"].iter().enumerate() {
                kv(&mut t, name, num(numeric.norms[k]));
            }
            kv(&mut t, "relative_deviation", num(numeric.relative_deviation));
            kv(&mut t, "flagged", numeric.flagged.to_string());
            kv(&mut t, "integration_error", num(numeric.integration_error));
            report.tables.push(t);
        }
        Command::Schur { nu_grid, tol } => {
            let lat = cfg.lattice()?;
            let w = cfg.window()?;
            let nus = fundamental_nu_grid(&lat, *nu_grid as usize);
            let sc = SchurConfig { nu_grid: *nu_grid as usize, abs_tol: *tol, ..SchurConfig::default() };
            let est = schur_epsilon(&lat, &w, &nus, &sc)?;
            let mut t = Table::new("schur", &["quantity", "value"]);
            kv(&mut t, "epsilon", num(est.epsilon));
            kv(&mut t, "budget", num(est.budget));
            kv(&mut t, "argmax_nu_x", num(est.argmax_nu[0]));
            kv(&mut t, "argmax_nu_y", num(est.argmax_nu[1]));
            let mut per = Table::new("schur_nu", &["nu_x", "nu_y", "integral"]);
            for (nu, v) in &est.per_nu {
                per.push(vec![num(nu[0]), num(nu[1]), num(*v)]);
            }
            report.tables.extend([t, per]);
        }
        Command::Certify { omega, uniform_taus } => {
            let base = cfg.base_lattice()?.with_tau(1.0)?;
            let a = cfg.scale(&base);
            let w = cfg.window()?;
            let cert = if uniform_taus.is_empty() {
                certificate(&base.with_tau(cfg.common.tau)?, a, &w, &shift, (*omega).into())?
            } else {
                dilation_uniform_certificate(&base, a, &w, uniform_taus, &shift, (*omega).into())?
            };
            let numeric = omega_numeric(&w.with_tau(if cert.dilation_uniform { 1.0 } else { w.tau() })?)?;
            report.invalid_certificate = !cert.valid;
            report.tables.push(certificate_table(cfg, &cert, numeric.bound));
        }
        Command::Framebounds { dim, time_span, freq_span, samples } => {
            let base = cfg.base_lattice()?;
            let a = cfg.scale(&base);
            let model = FrameModel {
                signal_length: samples.map(|n| n as usize),
                time_span: *time_span,
                freq_span: *freq_span,
                test_subspace_dim: *dim as usize,
                seed: cfg.common.seed,
            };
            let fb = empirical_frame_bounds(&base, a, &cfg.window()?, &model)?;
            let mut t = Table::new("framebounds", &["quantity", "value"]);
            kv(&mut t, "lower", num(fb.lower));
            kv(&mut t, "upper", num(fb.upper));
            kv(&mut t, "atoms", fb.atoms.to_string());
            kv(&mut t, "sweeps", fb.sweeps.to_string());
            kv(&mut t, "boundary_energy", num(fb.boundary_energy));
            kv(&mut t, "self_adjoint_defect", num(fb.self_adjoint_defect));
            kv(&mut t, "time_span", num(fb.time_span));
            kv(&mut t, "freq_span", num(fb.freq_span));
            kv(&mut t, "dt", num(fb.dt));
            kv(&mut t, "delta", num(EMPIRICAL_ALLOWANCE));
            report.tables.push(t);
        }
        Command::Admissibility { bound, terms } => {
            let lat = cfg.base_lattice()?.with_scale(1.0)?.with_tau(1.0)?;
            let m = lat.admissibility_margin(*bound)?;
            let mut t = Table::new("admissibility", &["quantity", "value"]);
            kv(&mut t, "margin", format!("{:.12}", m.margin));
            kv(&mut t, "bound", m.bound.to_string());
            kv(&mut t, "argmin_m", m.argmin.0.to_string());
            kv(&mut t, "argmin_n", m.argmin.1.to_string());
            if let Some(crit) = lat.badly_approximable_generators(*terms) {
                let crit = crit?;
                let show = |o: Option<usize>| o.map_or("none".into(), |v| v.to_string());
                let max_q =
                    |c: &crate::surd::ContinuedFraction| c.max_tail_quotient().map_or("none".into(), |q| q.to_string());
                kv(&mut t, "first_max_quotient", max_q(&crit.cf_first));
                kv(&mut t, "first_period", show(crit.cf_first.period));
                kv(&mut t, "second_max_quotient", max_q(&crit.cf_second));
                kv(&mut t, "second_period", show(crit.cf_second.period));
                kv(&mut t, "badly_approximable_admissible", crit.admissible.to_string());
            }
            report.tables.push(t);
        }
    }
    Ok(report)
}

fn certificate_table(cfg: &RunConfig, c: &Certificate, omega_num: f64) -> Table {
    let mut t = Table::new("certificate", &["quantity", "value"]);
    kv(&mut t, "lattice", cfg.common.lattice.clone());
    kv(&mut t, "a", num(c.scale));
    kv(&mut t, "tau", num(c.tau));
    kv(&mut t, "sigma", num(c.sigma));
    kv(&mut t, "d_lower", num(c.discrepancy.lower_bound));
    kv(&mut t, "d_estimate", num(c.discrepancy.estimate));
    kv(&mut t, "omega_source", c.omega_source.as_str().into());
    kv(&mut t, "omega_closed", num(omega_gaussian_closed(c.sigma * c.tau).unwrap_or(f64::NAN)));
    kv(&mut t, "omega_numeric", num(omega_num));
    kv(&mut t, "epsilon", num(c.epsilon));
    kv(&mut t, "epsilon_optimistic", num(c.epsilon_optimistic));
    kv(&mut t, "lower_bound", num(c.lower_bound));
    kv(&mut t, "upper_bound", num(c.upper_bound));
    kv(&mut t, "valid", c.valid.to_string());
    kv(&mut t, "dilation_uniform", c.dilation_uniform.to_string());
    kv(&mut t, "admissibility_margin", c.admissibility.map_or("none".into(), |m| num(m.margin)));
    kv(&mut t, "delta", num(EMPIRICAL_ALLOWANCE));
    t
}

/// Log–log plot of `(a, D*)` with the fitted power law and the scaled
/// reference `ĉ·a² ln(2 + 1/a)`.
pub fn decay_plot(title: &str, pts: &[(f64, f64)], slope: f64, c_hat: f64) -> String {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (a_lo, a_hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(l, h), p| (l.min(p.0), h.max(p.0)));
    let grid: Vec<f64> = (0..=40).map(|k| a_lo * (a_hi / a_lo).powf(k as f64 / 40.0)).collect();
    let fit: Vec<(f64, f64)> = grid.iter().map(|&a| (a, (my + slope * (a.ln() - mx)).exp())).collect();
    let reference: Vec<(f64, f64)> = grid.iter().map(|&a| (a, c_hat * admissible_rate(a))).collect();
    LogLogPlot {
        title: title.into(),
        x_label: "a".into(),
        y_label: "D*".into(),
        series: vec![
            Series { label: "measured".into(), points: pts.to_vec(), color: "#1f4e9c", markers: true },
            Series { label: format!("fit, slope {slope:.3}"), points: fit, color: "#c0392b", markers: false },
            Series { label: "c a^2 ln(2+1/a)".into(), points: reference, color: "#555555", markers: false },
        ],
    }
    .render()
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub markers: bool,
}

/// Minimal SVG 1.1 log–log line plot.
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LogLogPlot {
    pub fn render(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        const L: f64 = 80.0;
        const R: f64 = 200.0;
        const T: f64 = 40.0;
        const B: f64 = 60.0;
        let finite = |p: &&(f64, f64)| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite();
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().filter(finite).copied()).collect();
        let (mut x0, mut x1, mut y0, mut y1) =
            all.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), p| {
                (a.min(p.0.log10()), b.max(p.0.log10()), c.min(p.1.log10()), d.max(p.1.log10()))
            });
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
        let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
        let px = |x: f64| L + (x.log10() - x0) / (x1 - x0) * (W - L - R);
        let py = |y: f64| H - B - (y.log10() - y0) / (y1 - y0) * (H - T - B);
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            (W - R + L) / 2.0,
            xml(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - L - R,
            H - T - B
        );
        for e in (x0 as i32)..=(x1 as i32) {
            let x = px(10f64.powi(e));
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{T}" x2="{x:.2}" y2="{}" stroke="#dddddd"/>"##, H - B);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#, H - B + 16.0);
        }
        for e in (y0 as i32)..=(y1 as i32) {
            let y = py(10f64.powi(e));
            let _ = writeln!(s, r##"<line x1="{L}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/>"##, W - R);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, L - 6.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (W - R + L) / 2.0,
            H - 20.0,
            xml(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            (H - B + T) / 2.0,
            xml(&self.y_label)
        );
        for (k, ser) in self.series.iter().enumerate() {
            let pts: Vec<String> =
                ser.points.iter().filter(finite).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                ser.color,
                pts.join(" ")
            );
            if ser.markers {
                for &(x, y) in ser.points.iter().filter(finite) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, px(x), py(y), ser.color);
                }
            }
            let ly = T + 16.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{3}" stroke-width="2"/><text x="{4}" y="{5}">{6}</text>"#,
                W - R + 12.0,
                ly,
                W - R + 36.0,
                ser.color,
                W - R + 42.0,
                ly + 4.0,
                xml(&ser.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the report to `stdout` and, when requested, to files in `--out`.
pub fn emit(cfg: &RunConfig, report: &Report, stdout: &mut dyn Write) -> std::result::Result<(), CliError> {
    let prov = cfg.provenance();
    for (k, t) in report.tables.iter().enumerate() {
        if k > 0 {
            writeln!(stdout)?;
        }
        write!(stdout, "{}", t.to_csv(&prov))?;
    }
    if let Some(dir) = &cfg.common.out {
        fs::create_dir_all(dir)?;
        for t in &report.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv(&prov))?;
        }
        for (name, svg) in &report.plots {
            fs::write(dir.join(format!("{name}.svg")), svg)?;
        }
    }
    Ok(())
}

/// Parses, runs and reports; returns the process exit status
/// (0 success, 1 error, 2 non-certifying certificate).
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "{}", e.render());
            let _ = writeln!(stderr, "{}", CliError::Usage(e.to_string()).machine_line());
            return 1;
        }
    };
    let result = (|| {
        if let Some(n) = cfg.common.threads {
            // a second initialization in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
        }
        let report = execute(&cfg)?;
        emit(&cfg, &report, stdout)?;
        Ok::<_, CliError>(report)
    })();
    match result {
        Ok(r) if r.invalid_certificate => EXIT_INVALID_CERTIFICATE,
        Ok(_) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            let _ = writeln!(stderr, "{}", e.machine_line());
            1
        }
    }
}
