//! `wva`: command-line front end for the weak-value amplification simulator.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wva_core::config::{parse_angle, ExperimentFile};
use wva_core::distributions::{postselection_probability, ProbeDistribution, ProbeKind};
use wva_core::hypothesis::{
    c_grid, calibrate_critical_point, power_nps, power_ps, table1_rows, DecisionRule, Table1Row, WeakValueRatio,
};
use wva_core::montecarlo::{run, write_batch_csv, Mode, SimulationConfig, SimulationOutcome};
use wva_core::optics::{refraction_shifts, Case, ExperimentSetup, ShiftPair};
use wva_core::verify::{run_all, VerifyOptions};

/// Exit code for usage and configuration errors.
const EXIT_USAGE: u8 = 2;
/// Exit code for a failed verification.
const EXIT_CHECK_FAILED: u8 = 1;

#[derive(Parser)]
#[command(
    name = "wva",
    version,
    about = "Weak-value amplification of birefringence: densities, powers and Monte Carlo"
)]
struct Cli {
    /// Experiment configuration (JSON). Defaults to the bundled quartz-plate setup.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    A,
    B,
    C,
    /// Angles from the configuration file.
    Custom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Nps,
    Ps,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nps => Mode::Nps,
            ModeArg::Ps => Mode::Ps,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Nps,
    Ps,
    NpsAdjusted,
    PsAdjusted,
}

impl From<KindArg> for ProbeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nps => ProbeKind::Nps,
            KindArg::Ps => ProbeKind::Ps,
            KindArg::NpsAdjusted => ProbeKind::NpsAdjusted,
            KindArg::PsAdjusted => ProbeKind::PsAdjusted,
        }
    }
}

#[derive(Args)]
struct SetupArgs {
    /// Polarizer angles: one of the three reference cases, or those of the config.
    #[arg(long, value_enum, default_value_t = CaseArg::Custom)]
    case: CaseArg,
    /// Override gλ₋ (um) instead of deriving it from the crystal.
    #[arg(long, value_name = "UM", allow_negative_numbers = true)]
    g_lambda_minus: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Beam displacements of the two polarizations and their decomposition.
    Shifts,
    /// Condition C(α, β) and the squared weak-value ratio per analyzer angle.
    Table1 {
        /// Preselection angle (radians, or e.g. "pi/4", "45deg"). Defaults to the config.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Postselection angles; defaults to the three reference cases.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<String>,
    },
    /// Sampled probe density.
    Pdf {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long, value_enum, default_value_t = KindArg::PsAdjusted)]
        kind: KindArg,
        /// Lower end of the y range (um). Defaults to ten waists below the lower centre.
        #[arg(long, allow_negative_numbers = true)]
        y_min: Option<f64>,
        /// Upper end of the y range (um).
        #[arg(long, allow_negative_numbers = true)]
        y_max: Option<f64>,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Power of the |y|/w₀ ≥ c test with and without postselection.
    Power {
        #[command(flatten)]
        setup: SetupArgs,
        /// Critical point; defaults to the config rule.
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
    },
    /// Power against the critical point, with and without postselection.
    PowerCurve {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long, default_value_t = 0.1)]
        c_min: f64,
        #[arg(long, default_value_t = 3.0)]
        c_max: f64,
        #[arg(long, default_value_t = 59)]
        points: usize,
    },
    /// Critical point giving a target size.
    Calibrate {
        /// Size (false-rejection probability) in (0, 1).
        #[arg(long, default_value_t = 0.05)]
        size: f64,
    },
    /// Photon-level Monte Carlo of the test.
    Simulate {
        #[command(flatten)]
        setup: SetupArgs,
        /// Photons emitted.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Ps)]
        mode: ModeArg,
        /// Also write the per-photon batch as CSV.
        #[arg(long, value_name = "PATH")]
        batch_csv: Option<PathBuf>,
    },
    /// Run the acceptance suite and print a JSON report.
    Verify {
        /// Scale erf by (1 + δ) inside the closed-form powers.
        #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
        perturb_erf: f64,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
    },
}

/// Resolved experiment: configuration, active angles, shifts and rule.
struct Experiment {
    file: ExperimentFile,
    setup: ExperimentSetup,
    shifts: ShiftPair,
    rule: DecisionRule,
}

impl Experiment {
    fn load(path: Option<&Path>) -> Result<ExperimentFile> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentFile::from_json(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => ExperimentFile::bundled(),
        };
        Ok(file)
    }

    fn resolve(path: Option<&Path>, args: Option<&SetupArgs>) -> Result<Self> {
        let file = Self::load(path)?;
        let mut setup = file.setup()?;
        let rule = file.rule()?;
        let mut shifts = refraction_shifts(&setup.crystal);
        if let Some(args) = args {
            let case = match args.case {
                CaseArg::A => Some(Case::A),
                CaseArg::B => Some(Case::B),
                CaseArg::C => Some(Case::C),
                CaseArg::Custom => None,
            };
            if let Some(case) = case {
                setup = setup.with_angles(case.alpha(), case.beta());
            }
            if let Some(m) = args.g_lambda_minus {
                if !m.is_finite() {
                    bail!("--g-lambda-minus must be finite");
                }
                shifts = ShiftPair::from_plus_minus(shifts.g_lambda_plus(), m);
            }
        }
        Ok(Self {
            file,
            setup,
            shifts,
            rule,
        })
    }

    fn case_label(&self) -> &'static str {
        Case::matching(self.setup.alpha, self.setup.beta)
            .map(Case::label)
            .unwrap_or("custom")
    }

    fn header(&self) -> String {
        let s = &self.setup;
        let mut h = String::new();
        let _ = writeln!(
            h,
            "# case={} alpha_rad={} beta_rad={} C={}",
            self.case_label(),
            num(s.alpha),
            num(s.beta),
            num(s.condition_c())
        );
        let _ = writeln!(
            h,
            "# beam_waist_um={} g_lambda_plus_um={} g_lambda_minus_um={}",
            num(s.beam_waist_um),
            num(self.shifts.g_lambda_plus()),
            num(self.shifts.g_lambda_minus())
        );
        h
    }

    fn params_json(&self) -> Value {
        let s = &self.setup;
        json!({
            "case": self.case_label(),
            "alpha_rad": s.alpha,
            "beta_rad": s.beta,
            "condition_c": s.condition_c(),
            "beam_waist_um": s.beam_waist_um,
            "g_lambda_plus_um": self.shifts.g_lambda_plus(),
            "g_lambda_minus_um": self.shifts.g_lambda_minus(),
        })
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn cmd_shifts(cli: &Cli) -> Result<String> {
    let exp = Experiment::resolve(cli.config.as_deref(), None)?;
    let s = exp.shifts;
    let rows = [
        ("shift_h_um", s.shift_h),
        ("shift_v_um", s.shift_v),
        ("g_lambda_plus_um", s.g_lambda_plus()),
        ("g_lambda_minus_um", s.g_lambda_minus()),
    ];
    Ok(match cli.format {
        Format::Csv => {
            let c = &exp.file.crystal;
            let mut out = format!(
                "# thickness_um={} n_e={} n_o={} theta_deg={}\nquantity,value\n",
                c.thickness_um, c.n_e, c.n_o, c.theta_deg
            );
            for (name, value) in rows {
                let _ = writeln!(out, "{name},{}", num(value));
            }
            out
        }
        Format::Json => pretty(&Value::Object(
            rows.iter().map(|(k, v)| (k.to_string(), json!(v))).collect(),
        )),
    })
}

fn cmd_table1(cli: &Cli, alpha: Option<&str>, betas: &[String]) -> Result<String> {
    let file = Experiment::load(cli.config.as_deref())?;
    let alpha = match alpha {
        Some(text) => parse_angle(text).map_err(|e| anyhow!("--alpha: {e}"))?,
        None => file.alpha_rad.0,
    };
    let betas: Vec<(String, f64)> = if betas.is_empty() {
        Case::ALL.iter().map(|c| (c.label().to_string(), c.beta())).collect()
    } else {
        betas
            .iter()
            .map(|b| {
                parse_angle(b)
                    .map(|v| (b.clone(), v))
                    .map_err(|e| anyhow!("--beta: {e}"))
            })
            .collect::<Result<_>>()?
    };
    let rows = table1_rows(alpha, &betas);
    Ok(match cli.format {
        Format::Csv => {
            let mut out = format!("# alpha_rad={}\nbeta_rad,C,weak_value_ratio_sq\n", num(alpha));
            for Table1Row {
                beta,
                condition_c,
                weak_value_ratio_sq,
                ..
            } in &rows
            {
                let ratio = match weak_value_ratio_sq {
                    WeakValueRatio::Value(v) => num(*v),
                    WeakValueRatio::Indeterminate => weak_value_ratio_sq.to_string(),
                };
                let _ = writeln!(out, "{},{},{ratio}", num(*beta), num(*condition_c));
            }
            out
        }
        Format::Json => pretty(&json!({ "alpha_rad": alpha, "rows": rows })),
    })
}

fn cmd_pdf(
    cli: &Cli,
    args: &SetupArgs,
    kind: KindArg,
    y_min: Option<f64>,
    y_max: Option<f64>,
    points: usize,
) -> Result<String> {
    let exp = Experiment::resolve(cli.config.as_deref(), Some(args))?;
    let density = ProbeDistribution::new(kind.into(), exp.setup, exp.shifts)?;
    let (lo, hi) = density.window();
    let (lo, hi) = (y_min.unwrap_or(lo), y_max.unwrap_or(hi));
    if points < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
        bail!("need --points >= 2 and y-min < y-max");
    }
    let ys: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let kind_name = serde_json::to_value(ProbeKind::from(kind))?;
    Ok(match cli.format {
        Format::Csv => {
            let mut out = exp.header();
            let _ = writeln!(
                out,
                "# kind={} acceptance={}",
                kind_name.as_str().unwrap_or(""),
                num(density.acceptance())
            );
            out.push_str("y_um,density_per_um\n");
            for y in ys {
                let _ = writeln!(out, "{},{}", num(y), num(density.pdf(y)));
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = ys
                .iter()
                .map(|&y| json!({ "y_um": y, "density_per_um": density.pdf(y) }))
                .collect();
            pretty(
                &json!({ "parameters": exp.params_json(), "kind": kind_name, "acceptance": density.acceptance(), "rows": rows }),
            )
        }
    })
}

/// `(b_ps or None, b_nps, reason)` at one critical point.
fn power_row(exp: &Experiment, rule: &DecisionRule) -> (Option<f64>, f64, String) {
    let m = exp.shifts.g_lambda_minus();
    let b_nps = power_nps(m, exp.setup.beam_waist_um, rule);
    match power_ps(m, &exp.setup, rule) {
        Ok(b) => (Some(b), b_nps, String::new()),
        Err(e) => (None, b_nps, e.to_string()),
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`; `-0` prints as `0`.
fn num(x: f64) -> String {
    let x = x + 0.0;
    let mag = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&mag) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_power(cli: &Cli, args: &SetupArgs, c: Option<f64>) -> Result<String> {
    let exp = Experiment::resolve(cli.config.as_deref(), Some(args))?;
    let rule = match c {
        Some(c) => DecisionRule::new(c)?,
        None => exp.rule,
    };
    let (b_ps, b_nps, reason) = power_row(&exp, &rule);
    Ok(match cli.format {
        Format::Csv => format!(
            "{}c,b_ps,b_nps,reason\n{},{},{},{}\n",
            exp.header(),
            num(rule.critical_point()),
            cell(b_ps),
            num(b_nps),
            csv_text(&reason)
        ),
        Format::Json => pretty(&json!({
            "parameters": exp.params_json(),
            "c": rule.critical_point(),
            "b_ps": b_ps,
            "b_nps": b_nps,
            "reason": if reason.is_empty() { Value::Null } else { json!(reason) },
        })),
    })
}

fn cmd_power_curve(cli: &Cli, args: &SetupArgs, c_min: f64, c_max: f64, points: usize) -> Result<String> {
    let exp = Experiment::resolve(cli.config.as_deref(), Some(args))?;
    let grid = c_grid(c_min, c_max, points)?;
    let rows: Vec<(f64, Option<f64>, f64, String)> = grid
        .iter()
        .map(|&c| {
            let (b_ps, b_nps, reason) = power_row(&exp, &DecisionRule::new(c)?);
            Ok((c, b_ps, b_nps, reason))
        })
        .collect::<wva_core::Result<_>>()?;
    Ok(match cli.format {
        Format::Csv => {
            let mut out = exp.header();
            let _ = writeln!(out, "# c_min={c_min} c_max={c_max} points={points}");
            out.push_str("c,b_ps,b_nps,reason\n");
            for (c, b_ps, b_nps, reason) in &rows {
                let _ = writeln!(out, "{},{},{},{}", num(*c), cell(*b_ps), num(*b_nps), csv_text(reason));
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(c, b_ps, b_nps, reason)| {
                    json!({ "c": c, "b_ps": b_ps, "b_nps": b_nps,
                            "reason": if reason.is_empty() { Value::Null } else { json!(reason) } })
                })
                .collect();
            pretty(&json!({ "parameters": exp.params_json(), "rows": rows }))
        }
    })
}

fn cmd_calibrate(cli: &Cli, size: f64) -> Result<String> {
    let rule = calibrate_critical_point(size)?;
    let c = rule.critical_point();
    let achieved = power_nps(0.0, 1.0, &rule);
    Ok(match cli.format {
        Format::Csv => format!("size,c,achieved_size\n{},{},{}\n", num(size), num(c), num(achieved)),
        Format::Json => pretty(&json!({ "size": size, "c": c, "achieved_size": achieved })),
    })
}

fn cmd_simulate(
    cli: &Cli,
    args: &SetupArgs,
    n: u64,
    seed: u64,
    mode: ModeArg,
    batch_csv: Option<&Path>,
) -> Result<String> {
    let exp = Experiment::resolve(cli.config.as_deref(), Some(args))?;
    let config = SimulationConfig {
        setup: exp.setup,
        shifts: exp.shifts,
        rule: exp.rule,
        n_emitted: n,
        seed,
        mode: mode.into(),
    };
    let outcome = run(&config)?;
    let mut summary = json!({
        "parameters": exp.params_json(),
        "mode": Mode::from(mode),
        "seed": seed,
        "n_emitted": n,
        "critical_point": exp.rule.critical_point(),
    });
    let fields = summary.as_object_mut().expect("object literal");
    match &outcome {
        SimulationOutcome::Detected { batch, power } => {
            let m = exp.shifts.g_lambda_minus();
            let analytic = match config.mode {
                Mode::Nps => power_nps(m, exp.setup.beam_waist_um, &exp.rule),
                Mode::Ps => power_ps(m, &exp.setup, &exp.rule)?,
            };
            let sigma = (analytic * (1.0 - analytic) / power.n_detected as f64).sqrt();
            let z = if sigma > 0.0 {
                Some((power.estimate - analytic) / sigma)
            } else {
                None
            };
            let acceptance = match config.mode {
                Mode::Nps => 1.0,
                Mode::Ps => postselection_probability(&exp.setup, &exp.shifts),
            };
            fields.insert("outcome".into(), json!("detected"));
            fields.insert("n_detected".into(), json!(power.n_detected));
            fields.insert("expected_detected".into(), json!(acceptance * n as f64));
            fields.insert("empirical_power".into(), json!(power.estimate));
            fields.insert("std_error".into(), json!(power.std_error));
            fields.insert("analytic_power".into(), json!(analytic));
            fields.insert("z_score".into(), json!(z));
            if let Some(path) = batch_csv {
                write_csv_file(path, |w| write_batch_csv(batch, exp.setup.beam_waist_um, &exp.rule, w))?;
            }
        }
        SimulationOutcome::NoData { acceptance, .. } => {
            fields.insert("outcome".into(), json!("no data detected"));
            fields.insert("n_detected".into(), json!(0));
            fields.insert("acceptance".into(), json!(acceptance));
            if let Some(path) = batch_csv {
                write_csv_file(path, |w| {
                    writeln!(w, "photon_index,detected,y_adjusted_um,decision")?;
                    (0..n).try_for_each(|i| writeln!(w, "{i},0,,"))
                })?;
            }
        }
    }
    Ok(pretty(&summary))
}

fn write_csv_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
{
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = io::BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

fn cmd_verify(perturb_erf: f64, seeds: usize) -> Result<(String, bool)> {
    let report = run_all(&VerifyOptions {
        erf_perturbation: perturb_erf,
        mc_seeds: seeds,
    });
    for c in &report.criteria {
        eprintln!(
            "{} criterion {:>2}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.title
        );
    }
    Ok((pretty(&serde_json::to_value(&report)?), report.passed))
}

fn execute(cli: &Cli) -> Result<bool> {
    let (text, passed) = match &cli.command {
        Command::Shifts => (cmd_shifts(cli)?, true),
        Command::Table1 { alpha, beta } => (cmd_table1(cli, alpha.as_deref(), beta)?, true),
        Command::Pdf {
            setup,
            kind,
            y_min,
            y_max,
            points,
        } => (cmd_pdf(cli, setup, *kind, *y_min, *y_max, *points)?, true),
        Command::Power { setup, c } => (cmd_power(cli, setup, *c)?, true),
        Command::PowerCurve {
            setup,
            c_min,
            c_max,
            points,
        } => (cmd_power_curve(cli, setup, *c_min, *c_max, *points)?, true),
        Command::Calibrate { size } => (cmd_calibrate(cli, *size)?, true),
        Command::Simulate {
            setup,
            n,
            seed,
            mode,
            batch_csv,
        } => (cmd_simulate(cli, setup, *n, *seed, *mode, batch_csv.as_deref())?, true),
        Command::Verify { perturb_erf, seeds } => cmd_verify(*perturb_erf, *seeds)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
