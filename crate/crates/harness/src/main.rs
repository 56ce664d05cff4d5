use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relaylab::analytics::write_curve_csv;
use relaylab::model::{scaling_report, Exponent, ScalingExponents, SinrScaleReport};
use relaylab_harness::acceptance::{run_suites, Suite};
use relaylab_harness::config::{self, ExperimentConfig};
use relaylab_harness::experiments::{self, analytic_curves, create, records_dataset, write_figure, write_text, Figure, RunOptions};
use relaylab_harness::scenarios::table_one;
use relaylab_harness::{HarnessError, Result};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "relaylab", version, about = "Massive-MIMO relay experiments")]
struct Cli {
    /// Experiment configuration (key = value text or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per grid point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads for the trial engine.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SINR scaling report for an exponent tuple or the built-in table.
    Scaling {
        #[arg(long, value_name = "RATIONAL")]
        r_k: Option<Exponent>,
        #[arg(long, value_name = "RATIONAL")]
        r_p: Option<Exponent>,
        #[arg(long, value_name = "RATIONAL")]
        r_q: Option<Exponent>,
        #[arg(long, value_name = "RATIONAL")]
        r_c: Option<Exponent>,
    },
    /// Simulate every grid point of a configuration and compare with the closed forms.
    Simulate {
        /// Also write per-trial samples.
        #[arg(long)]
        samples: bool,
    },
    /// Closed-form curves over a configuration's grid, without simulation.
    Analyze,
    /// Emit a figure dataset.
    Figure {
        #[arg(value_enum)]
        figure: FigureArg,
    },
    /// Run acceptance suites; exits with 3 on any failure.
    Acceptance {
        /// Suite name or `all`.
        suite: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig1 => Figure::Fig1,
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
            FigureArg::Fig5 => Figure::Fig5,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Scaling { r_k, r_p, r_q, r_c } => scaling(cli, [*r_k, *r_p, *r_q, *r_c]),
        Command::Simulate { samples } => simulate(cli, *samples),
        Command::Analyze => analyze(cli),
        Command::Figure { figure } => figure_cmd(cli, (*figure).into()),
        Command::Acceptance { suite } => acceptance(cli, suite),
    }
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

#[derive(Serialize)]
struct NamedReport {
    name: String,
    #[serde(flatten)]
    report: SinrScaleReport,
}

fn scaling(cli: &Cli, r: [Option<Exponent>; 4]) -> Result<u8> {
    let reports: Vec<NamedReport> = if r.iter().all(Option::is_none) {
        table_one()
            .iter()
            .map(|s| NamedReport {
                name: s.name.into(),
                report: scaling_report(&s.exponents),
            })
            .collect()
    } else {
        let z = Exponent::from_integer(0);
        let e = ScalingExponents::new(r[0].unwrap_or(z), r[1].unwrap_or(z), r[2].unwrap_or(z), r[3].unwrap_or(z))?;
        vec![NamedReport {
            name: "custom".into(),
            report: scaling_report(&e),
        }]
    };
    if cli.json {
        if reports.len() == 1 {
            print_json(&reports[0].report);
        } else {
            print_json(&reports);
        }
    } else {
        println!("{:<8} {:>5} {:>11} {:>13} {:>7} binding", "name", "r_s", "favourable", "deterministic", "linear");
        for n in &reports {
            let r = &n.report;
            println!(
                "{:<8} {:>5} {:>11} {:>13} {:>7} {:?}",
                n.name,
                r.r_s.to_string(),
                r.favourable,
                r.deterministic_sufficient,
                r.linear_regime,
                r.binding_term
            );
        }
    }
    Ok(0)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Usage("this command needs --config PATH".into()))?;
    let mut cfg = config::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.trials {
        cfg.trials = n;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn refuse_existing(paths: &[&Path], force: bool) -> Result<()> {
    match paths.iter().find(|p| p.exists()) {
        Some(p) if !force => Err(HarnessError::Overwrite(p.to_path_buf())),
        _ => Ok(()),
    }
}

fn simulate(cli: &Cli, samples: bool) -> Result<u8> {
    let cfg = load_config(cli)?;
    let json_path = cfg.out.join("records.json");
    let csv_path = cfg.out.join("records.csv");
    let cfg_path = cfg.out.join("config.txt");
    refuse_existing(&[&json_path, &csv_path, &cfg_path], cli.force)?;
    let records = experiments::run_with_samples(&cfg, cli.threads, |m, s| {
        if samples {
            let mut f = create(&cfg.out.join(format!("samples_M{m}.csv")), cli.force)?;
            s.write_csv(&mut f)?;
        }
        Ok(())
    })?;
    write_text(&cfg_path, &cfg.to_kv(), cli.force)?;
    write_text(&csv_path, &records_dataset(&records).to_csv(), cli.force)?;
    let json = serde_json::to_string_pretty(&records).expect("records serialize");
    write_text(&json_path, &(json + "\n"), cli.force)?;
    if cli.json {
        print_json(&records);
    } else {
        for r in &records {
            println!(
                "M={:<5} K={:<3} mean SINR {:.4} rate {:.4} (bound {:.4}) {:.2} s",
                r.m,
                r.params.k(),
                r.empirical.sinr.mean,
                r.empirical.rate,
                r.analytic["rate_lb_eq14"],
                r.wall_clock_s
            );
        }
        println!("wrote {}", csv_path.display());
    }
    Ok(0)
}

fn analyze(cli: &Cli) -> Result<u8> {
    let cfg = load_config(cli)?;
    let pts = analytic_curves(&cfg)?;
    let path = cfg.out.join("analytic.csv");
    let mut f = create(&path, cli.force)?;
    write_curve_csv(&mut f, &pts)?;
    if !cli.json {
        println!("wrote {} ({} rows)", path.display(), pts.len());
    } else {
        let rows: Vec<_> = pts
            .iter()
            .map(|p| serde_json::json!({"x": p.x, "value": p.value, "form": p.form, "valid_flags": p.valid_flags}))
            .collect();
        print_json(&rows);
    }
    Ok(0)
}

fn figure_cmd(cli: &Cli, fig: Figure) -> Result<u8> {
    let opts = RunOptions {
        seed: cli.seed.unwrap_or(1),
        trials: cli.trials.unwrap_or_else(|| fig.default_trials()),
        threads: cli.threads,
    };
    if opts.trials < config::MIN_TRIALS {
        return Err(HarnessError::config(None, Some("trials"), format!("need at least {}", config::MIN_TRIALS)));
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let path = write_figure(fig, &opts, &out, cli.force)?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn acceptance(cli: &Cli, suite: &str) -> Result<u8> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            HarnessError::Usage(format!("unknown suite `{suite}`; expected one of {} or all", names.join(", ")))
        })?]
    };
    let verdicts = run_suites(&suites, cli.threads)?;
    if cli.json {
        print_json(&verdicts);
    } else {
        for v in &verdicts {
            println!("{v}");
        }
    }
    Ok(if verdicts.iter().all(|v| v.pass) { 0 } else { EXIT_ACCEPTANCE })
}
