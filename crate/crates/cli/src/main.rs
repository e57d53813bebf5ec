use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use biosec::experiment::{strategy_for, ExperimentConfig};
use biosec::metrics::{AttackView, Strategy};
use biosec::presets::{self, SidebarFixture};
use biosec::smc::{self, ClientOptions, Keypair, ServerConfig, TemplateStore};
use biosec::{rng, BitVector, StoredTemplate};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "biosec", version, about = "Protected biometric templates: enrollment, matching and metrics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: sidebar-b or bsc16.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Monte Carlo trials; implies sampling unless --exact is also given.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Enumerate instead of sampling.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Enroll a feature vector and write the stored template.
    Enroll {
        /// Feature bits, e.g. 1011.
        #[arg(long)]
        input: BitVector,
        /// Key file; created with a fresh key when missing.
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// Authenticate a probe; exit 0 on accept, 1 on reject.
    Auth {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        probe: BitVector,
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// FAR, FRR, SAR, leakage and storage over the config's threshold grid.
    Metrics,
    /// Attack success rate at every threshold.
    Attack {
        /// Side information: none, s, k, a or a combination such as s_k.
        #[arg(long, default_value = "s")]
        view: String,
        /// blind_guess, replay_biometric or stored_data_inversion; the
        /// strongest one the view allows by default.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Run an encrypted-matching device.
    SmcServe {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        /// Template store; kept in memory when absent.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Enroll at or authenticate against an encrypted-matching device.
    SmcAuth {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        #[arg(long)]
        id: String,
        #[arg(long)]
        probe: BitVector,
        /// Store the probe as the template instead of authenticating.
        #[arg(long)]
        enroll: bool,
        /// Largest accepted squared distance.
        #[arg(long, default_value_t = 0)]
        theta: u64,
        /// Prime size of the claimant's key, derived from --seed.
        #[arg(long, default_value_t = 256)]
        key_bits: u64,
    },
    /// Re-run every worked example with a published value.
    PaperCheck {
        /// Replacement for the built-in example matrices and enrollment.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

/// Exit status for an error: 3 for IO, 2 for everything else.
fn error_code(e: &anyhow::Error) -> u8 {
    let io = e.chain().any(|c| {
        c.is::<io::Error>()
            || matches!(c.downcast_ref::<biosec::Error>(), Some(biosec::Error::Io(_)))
            || matches!(c.downcast_ref::<biosec::Error>(), Some(biosec::Error::Protocol(p)) if matches!(p, biosec::smc::wire::ProtocolError::Closed))
    });
    if io {
        3
    } else {
        2
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_json(&read(path)?).map_err(|e| anyhow!(e).context(format!("config {}", path.display())))?,
            (None, Some(name)) => presets::preset(name)?,
            (None, None) => return Err(anyhow!(biosec::Error::InvalidParameter("pass --config or --preset".into()))),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
            cfg.exact = self.exact;
        } else if self.exact {
            cfg.exact = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_key(path: Option<&Path>) -> Result<Option<biosec::cancelable::TransformKey>> {
    path.map(|p| Ok(serde_json::from_str(&read(p)?)?)).transpose()
}

/// Runs a command; `Ok(false)` means a reject or a failed check.
fn run(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    let out = common.out.as_deref();
    match cli.command {
        Command::Enroll { input, key } => {
            let cfg = common.config()?;
            let mut r = rng::stream(cfg.seed, "cli-enroll");
            let key = match key.as_deref() {
                Some(p) if p.exists() => load_key(Some(p))?,
                Some(p) => {
                    let fresh = cfg.fresh_key(&mut r)?;
                    if let Some(k) = &fresh {
                        fs::write(p, serde_json::to_string_pretty(k)?).with_context(|| format!("writing {}", p.display()))?;
                    }
                    fresh
                }
                None => None,
            };
            let template = cfg.enroll(&input, key.as_ref(), &mut r)?;
            emit(out, &template.to_json()?)?;
            Ok(true)
        }
        Command::Auth { template, probe, key } => {
            let cfg = common.config()?;
            let stored = StoredTemplate::from_json(&read(&template)?)?;
            let accepted = cfg.authenticate(&stored, &probe, load_key(key.as_deref())?.as_ref())?;
            emit(out, &serde_json::json!({ "accepted": accepted }).to_string())?;
            Ok(accepted)
        }
        Command::Metrics => {
            let report = common.config()?.run_metrics()?;
            let text = match common.format {
                Format::Json => report.to_json()?,
                Format::Csv => report.to_csv(),
            };
            emit(out, &text)?;
            Ok(true)
        }
        Command::Attack { view, strategy } => {
            let cfg = common.config()?;
            let view = AttackView::parse(&view).ok_or_else(|| anyhow!(biosec::Error::InvalidParameter(format!("unknown view {view:?}"))))?;
            let strategy: Strategy = match strategy {
                Some(s) => serde_json::from_value(serde_json::Value::String(s))
                    .map_err(|_| anyhow!(biosec::Error::InvalidParameter("unknown strategy".into())))?,
                None => strategy_for(view),
            };
            let rows = cfg.run_attack(view, strategy)?;
            let text = match common.format {
                Format::Json => serde_json::to_string_pretty(
                    &rows.iter().map(|(tau, e)| serde_json::json!({ "tau": tau, "sar": e })).collect::<Vec<_>>(),
                )?,
                Format::Csv => {
                    let mut s = String::from("tau,sar,stderr,trials\n");
                    for (tau, e) in &rows {
                        s.push_str(&format!("{tau},{},{},{}\n", e.value, e.stderr, e.trials));
                    }
                    s
                }
            };
            emit(out, &text)?;
            Ok(true)
        }
        Command::SmcServe { addr, store } => {
            let store = match store {
                Some(p) => TemplateStore::open(p)?,
                None => TemplateStore::in_memory(),
            };
            let handle = smc::serve(addr.as_str(), store, ServerConfig { seed: common.seed, ..ServerConfig::default() })?;
            log::info!("listening on {}", handle.addr());
            eprintln!("listening on {}", handle.addr());
            handle.join();
            Ok(true)
        }
        Command::SmcAuth { addr, id, probe, enroll, theta, key_bits } => {
            let seed = common.seed.unwrap_or(0);
            let keypair = Keypair::generate(key_bits, seed)?;
            let mut r = rng::stream(seed, "cli-smc");
            let features = smc::features_of(&probe);
            if enroll {
                smc::enroll_remote(addr.as_str(), &id, keypair.public(), &features, theta, 1, &mut r)?;
                emit(out, &serde_json::json!({ "enrolled": id }).to_string())?;
                return Ok(true);
            }
            let accepted = smc::authenticate_remote(addr.as_str(), &id, &features, &keypair, &ClientOptions::default(), &mut r)?;
            emit(out, &serde_json::json!({ "accepted": accepted }).to_string())?;
            Ok(accepted)
        }
        Command::PaperCheck { fixture } => {
            let fixture: SidebarFixture = match fixture {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => SidebarFixture::default(),
            };
            let checks = presets::reference_checks(&fixture);
            let mut text: String = checks.iter().map(|c| format!("{c}\n")).collect();
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if failed.is_empty() {
                text.push_str(&format!("all {} checks passed\n", checks.len()));
            } else {
                text.push_str(&format!("failed: {}\n", failed.join(", ")));
            }
            emit(out, &text)?;
            Ok(failed.is_empty())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
