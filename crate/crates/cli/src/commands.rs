//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use taskbot_core::config::parse_prompt_script;
use taskbot_core::planner::{default_headers, generate_dataset, records_to_jsonl, template_plan, PlannerKind, PlannerRequest, RemoteConfig};
use taskbot_core::replicate::run_table2;
use taskbot_core::world::{builtin_prompts, vocabulary::COCO_CLASSES};
use taskbot_core::{
    grade, parse_plan, Deployment, EntityName, ExecMode, KbMode, MetricsSample, PlannerChoice, ResourceProfile,
    RunConfig, TaskResult,
};

use crate::plot::plot_metrics;
use crate::server::{router, AppState, ServeOptions};

#[derive(Parser, Debug)]
#[command(name = "taskbot", version, about = "Language-guided task planning on a simulated robot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Execute a prompt script and write task results and metrics.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Prompt script, one prompt per line. Defaults to the scenario's own script.
        #[arg(long)]
        prompts: Option<PathBuf>,
        /// Directory for results.jsonl and metrics.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write events.jsonl.
        #[arg(long)]
        events: bool,
    },
    /// Serve the HTTP API and event stream.
    Serve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Simulated seconds per wall-clock second; 0 runs as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Generate the instruction dataset as train.jsonl and test.jsonl.
    GenDataset {
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 0.75)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Re-plan every record with the template planner and report agreement.
        #[arg(long)]
        check: bool,
    },
    /// Score a planner output against an expected plan.
    Grade {
        #[arg(long)]
        expected: PathBuf,
        #[arg(long)]
        actual: PathBuf,
    },
    /// Reproduction scripts.
    Replicate {
        #[command(subcommand)]
        which: Replicate,
    },
    /// Render power, RAM, swap and latency panels as SVG.
    PlotMetrics {
        #[arg(long)]
        metrics: PathBuf,
        /// Task results, used for decode shading and the latency panel.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum Replicate {
    /// Fixed versus growing knowledge base on the home and office scripts.
    Table2 {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
        #[arg(long, value_enum)]
        kb: Option<KbArg>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ScenarioArg {
    Home,
    Office,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum KbArg {
    Fixed,
    Growing,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ExecArg {
    Strict,
    Lenient,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum DeploymentArg {
    Onboard,
    Cloud,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum PlannerArg {
    Template,
    Remote,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    pub run_config: Option<PathBuf>,
    /// Built-in scenario name (home, office) or path to a scenario file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum)]
    pub kb: Option<KbArg>,
    #[arg(long, value_enum)]
    pub exec: Option<ExecArg>,
    #[arg(long, value_enum)]
    pub deployment: Option<DeploymentArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub planner: Option<PlannerArg>,
    /// Base URL of the remote planner.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// JSON resource profile overriding the defaults.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.run_config {
            Some(path) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        if let Some(kb) = self.kb {
            cfg.kb_mode = match kb {
                KbArg::Fixed => KbMode::Fixed,
                KbArg::Growing => KbMode::Growing,
            };
        }
        if let Some(exec) = self.exec {
            cfg.exec_mode = match exec {
                ExecArg::Strict => ExecMode::Strict,
                ExecArg::Lenient => ExecMode::Lenient,
            };
        }
        if let Some(d) = self.deployment {
            cfg.config = match d {
                DeploymentArg::Onboard => Deployment::Onboard,
                DeploymentArg::Cloud => Deployment::Cloud,
            };
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(path) = &self.profile {
            let profile: ResourceProfile =
                serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            cfg.profile = profile;
        }
        match (self.planner, &self.endpoint) {
            (Some(PlannerArg::Template), _) => cfg.planner = PlannerChoice::Template,
            (Some(PlannerArg::Remote), Some(url)) => cfg.planner = PlannerChoice::Remote(RemoteConfig::new(url.clone())),
            (Some(PlannerArg::Remote), None) => {
                if !matches!(cfg.planner, PlannerChoice::Remote(_)) {
                    bail!("--planner remote requires --endpoint");
                }
            }
            (None, Some(url)) => match &mut cfg.planner {
                PlannerChoice::Remote(remote) => remote.endpoint = url.clone(),
                PlannerChoice::Template => bail!("--endpoint requires --planner remote"),
            },
            (None, None) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn cmd_run(run: &RunArgs, prompts: Option<&Path>, out: Option<&Path>, events: bool) -> Result<()> {
    let cfg = run.to_config()?;
    let script = match prompts {
        Some(path) => read(path)?,
        None => builtin_prompts(&cfg.scenario)
            .with_context(|| format!("scenario {:?} has no built-in prompt script; pass --prompts", cfg.scenario))?
            .to_string(),
    };
    let prompts = parse_prompt_script(&script);
    let mut agent = cfg.build_agent()?;
    let ids: Vec<u64> = prompts.iter().map(|p| agent.submit(p)).collect();
    agent.run_until_idle();
    agent.finish_metrics();
    let results: Vec<TaskResult> = ids.iter().map(|id| agent.result(*id).expect("finished").clone()).collect();
    for r in &results {
        println!("task {}: {:>5}  {}", r.task_id, r.score.to_string(), r.prompt);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("results.jsonl"), &jsonl(&results))?;
        write(&dir.join("metrics.jsonl"), &jsonl(agent.metrics().samples()))?;
        if events {
            write(&dir.join("events.jsonl"), &jsonl(&agent.take_events()))?;
        }
    }
    Ok(())
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("serializable") + "\n").collect()
}

fn cmd_serve(run: &RunArgs, addr: &str, speed: f64) -> Result<()> {
    let cfg = run.to_config()?;
    let state = AppState::start(cfg, ServeOptions { speed })?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}

fn cmd_gen_dataset(n: usize, ratio: f64, seed: u64, out: &Path, check: bool) -> Result<()> {
    let classes: Vec<EntityName> = COCO_CLASSES.iter().map(|c| EntityName::new(c).expect("canonical")).collect();
    let data = generate_dataset(&classes, &default_headers(), n, ratio, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("train.jsonl"), &records_to_jsonl(&data.train))?;
    write(&out.join("test.jsonl"), &records_to_jsonl(&data.test))?;
    println!("train: {} records", data.train.len());
    println!("test: {} records", data.test.len());
    if check {
        let profile = ResourceProfile::default();
        let all = data.train.iter().chain(&data.test);
        let agree = all
            .clone()
            .filter(|r| {
                let req = PlannerRequest {
                    system_header: r.system_header.clone(),
                    user_prompt: r.prompt.clone(),
                    planner_kind: PlannerKind::Template,
                };
                let resp = template_plan(&req, &profile, Deployment::Onboard);
                grade(&r.expected_plan, &resp.raw_text).matched == r.expected_plan.len()
            })
            .count();
        println!("self-consistency: {agree}/{}", all.count());
    }
    Ok(())
}

fn cmd_grade(expected: &Path, actual: &Path) -> Result<()> {
    let expected = parse_plan(&read(expected)?).context("expected plan does not parse")?;
    println!("{}", grade(&expected, &read(actual)?));
    Ok(())
}

fn cmd_table2(scenario: Option<ScenarioArg>, kb: Option<KbArg>) -> Result<()> {
    let scenarios: Vec<&str> = match scenario {
        Some(ScenarioArg::Home) => vec!["home"],
        Some(ScenarioArg::Office) => vec!["office"],
        None => vec!["home", "office"],
    };
    let modes: Vec<KbMode> = match kb {
        Some(KbArg::Fixed) => vec![KbMode::Fixed],
        Some(KbArg::Growing) => vec![KbMode::Growing],
        None => vec![KbMode::Fixed, KbMode::Growing],
    };
    let mut all_passed = true;
    for s in &scenarios {
        for m in &modes {
            let column = run_table2(s, *m, &RunConfig::default())?;
            all_passed &= column.passed();
            print!("{column}");
        }
    }
    println!("table2: {}", if all_passed { "PASS" } else { "FAIL" });
    Ok(())
}

fn cmd_plot(metrics: &Path, results: Option<&Path>, out: &Path) -> Result<()> {
    let samples: Vec<MetricsSample> = read_jsonl(metrics)?;
    let results: Vec<TaskResult> = match results {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    for path in plot_metrics(out, &samples, &results)? {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { run, prompts, out, events } => cmd_run(&run, prompts.as_deref(), out.as_deref(), events),
        Command::Serve { run, addr, speed } => cmd_serve(&run, &addr, speed),
        Command::GenDataset { n, ratio, seed, out, check } => cmd_gen_dataset(n, ratio, seed, &out, check),
        Command::Grade { expected, actual } => cmd_grade(&expected, &actual),
        Command::Replicate { which: Replicate::Table2 { scenario, kb } } => cmd_table2(scenario, kb),
        Command::PlotMetrics { metrics, results, out } => cmd_plot(&metrics, results.as_deref(), &out),
    }
}
