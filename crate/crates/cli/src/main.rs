use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ptr_core::control::{ptr, ptrstar, PtrConfig, Termination};
use ptr_core::dtgraph::DtGraph;
use ptr_core::flow::{bottom_up, root_flows, top_down};
use ptr_core::harness::{metrics_csv, oracle_conditional_weight, oracle_unused_probability, run_experiment, ExperimentSpec};
use ptr_core::revision::{r_values, relevance_sets};
use ptr_core::theory::{parse_exemplar, parse_exemplars, parse_theory, DomainTheory, Example};
use ptr_core::weights::{default_weights, Prior, DEFAULT_C};

#[derive(Parser)]
#[command(name = "ptr", version, about = "Probabilistic theory revision")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify exemplars with a theory and report disagreements.
    Classify {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        exemplars: PathBuf,
    },
    /// Print flows, adjusted flows and updated weights for one exemplar.
    Flow {
        #[command(flatten)]
        graph: GraphArgs,
        /// Exemplar line, e.g. "a b | r=1".
        #[arg(long)]
        exemplar: String,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Print default weights as a weight file.
    Weights {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: f64,
        /// Lines of `prop probability`; unlisted observables default to .5.
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Relevance ratios of one edge and the needed/destructive sets.
    Relevance {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        exemplars: PathBuf,
        /// Edge as `parent/child`.
        #[arg(long)]
        edge: String,
    },
    /// Run PTR and write `<out>.theory`, `<out>.log.jsonl` and `<out>.weights`.
    Revise {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        exemplars: PathBuf,
        #[arg(long, default_value = "revised")]
        out: PathBuf,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Label the top percent of examples by root flow as positive.
    Star {
        #[command(flatten)]
        graph: GraphArgs,
        /// One example per line; anything after `|` is ignored.
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        percent: f64,
    },
    /// Run the synthetic-theory experiment and print CSV.
    Synth {
        #[arg(long, default_value_t = 3)]
        errors: usize,
        #[arg(long, default_value = "20,40,60,80,100")]
        train: String,
        #[arg(long, default_value_t = 100)]
        test: usize,
        #[arg(long, default_value_t = 10)]
        partitions: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        bias: Option<f64>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force subgraph oracles.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Probability that an edge is absent or its lower node is true.
    Unused {
        #[command(flatten)]
        graph: GraphArgs,
        /// Observables that are true, space separated.
        #[arg(long, default_value = "")]
        example: String,
        #[arg(long)]
        edge: String,
    },
    /// Probability that an edge is present given a correct classification.
    Cond {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        exemplar: String,
        #[arg(long)]
        edge: String,
    },
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    theory: PathBuf,
    /// Weight file; listed edges override the default weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Start from weight 1 everywhere instead of the default weights.
    #[arg(long)]
    crisp: bool,
}

#[derive(Args)]
struct CfgArgs {
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.7)]
    lambda: f64,
    #[arg(long, default_value_t = 0.03)]
    dsigma: f64,
    #[arg(long, default_value_t = 0.03)]
    dlambda: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    no_simplify: bool,
    #[arg(long)]
    max_cycles: Option<usize>,
}

impl CfgArgs {
    fn config(&self) -> PtrConfig {
        PtrConfig {
            sigma: self.sigma,
            lambda: self.lambda,
            dsigma: self.dsigma,
            dlambda: self.dlambda,
            eps: self.eps,
            seed: self.seed,
            simplify: !self.no_simplify,
            max_cycles: self.max_cycles,
            ..PtrConfig::default()
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_theory(path: &Path) -> Result<DomainTheory> {
    parse_theory(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

impl GraphArgs {
    fn load(&self) -> Result<DtGraph> {
        let t = load_theory(&self.theory)?;
        let g = DtGraph::build(&t);
        let mut g = if self.crisp { g } else { default_weights(&g, DEFAULT_C, &Prior::default()) };
        if let Some(w) = &self.weights {
            g.apply_weight_file(&read(w)?).with_context(|| format!("applying {}", w.display()))?;
        }
        Ok(g)
    }
}

fn edge(g: &DtGraph, name: &str) -> Result<usize> {
    Ok(g.edge_by_name_or_err(name)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Classify { theory, exemplars } => {
            let t = load_theory(&theory)?;
            let z = parse_exemplars(&read(&exemplars)?)?;
            let mut wrong = 0;
            for (i, x) in z.iter().enumerate() {
                let c = t.classify(&x.example)?;
                let ok = t.agrees(x)?;
                wrong += usize::from(!ok);
                let cls: Vec<String> = c.iter().map(|(r, v)| format!("{r}={}", u8::from(*v))).collect();
                println!("{i}\t{}\t{}", cls.join(" "), if ok { "ok" } else { "WRONG" });
            }
            println!("{wrong}/{} misclassified", z.len());
        }
        Cmd::Flow { graph, exemplar, eps } => {
            let g = graph.load()?;
            let x = parse_exemplar(&exemplar)?;
            let u = bottom_up(&g, &x.example);
            let upd = top_down(&g, &u, &x.target, eps);
            println!("edge\tp\tu\tv\tp_new");
            for &e in g.topo_edges() {
                println!("{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", g.edge_name(e), g.weight(e), u[e], upd.v[e], upd.p_new[e]);
            }
        }
        Cmd::Weights { theory, c, prior } => {
            let t = load_theory(&theory)?;
            let prior = match prior {
                Some(p) => Prior::parse(&read(&p)?)?,
                None => Prior::default(),
            };
            print!("{}", default_weights(&DtGraph::build(&t), c, &prior).weight_file());
        }
        Cmd::Relevance { graph, exemplars, edge: name } => {
            let g = graph.load()?;
            let z = parse_exemplars(&read(&exemplars)?)?;
            let e = edge(&g, &name)?;
            for (i, x) in z.iter().enumerate() {
                let r: Vec<String> = r_values(&g, x, e).iter().map(|v| format!("{v:.4}")).collect();
                println!("{i}\t{}\t{x}", r.join(" "));
            }
            let sets = relevance_sets(&g, &z, e);
            println!("needed: {:?}", sets.needed);
            println!("destructive: {:?}", sets.destructive);
        }
        Cmd::Revise { graph, exemplars, out, cfg } => {
            let g = graph.load()?;
            let z = parse_exemplars(&read(&exemplars)?)?;
            let res = ptr(&g, &z, &cfg.config())?;
            let with_ext = |ext: &str| {
                let mut p = out.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            fs::write(with_ext(".theory"), res.theory.to_string())?;
            fs::write(with_ext(".weights"), res.graph.weight_file())?;
            let mut log = String::new();
            for entry in &res.log {
                log.push_str(&serde_json::to_string(entry)?);
                log.push('\n');
            }
            fs::write(with_ext(".log.jsonl"), log)?;
            println!(
                "{:?} after {} exemplars, {} cycles, {} revisions",
                res.terminated_by, res.exemplars_processed, res.cycles, res.revisions
            );
            if res.terminated_by != Termination::AllCorrect {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Star { graph, examples, percent } => {
            let g = graph.load()?;
            let xs: Vec<Example> = read(&examples)?
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").split('|').next().unwrap_or("").trim().to_string())
                .filter(|l| !l.is_empty())
                .map(|l| Example::new(l.split_whitespace()))
                .collect();
            let labels = ptrstar(&g, &xs, percent)?;
            for (x, y) in xs.iter().zip(labels) {
                let u = root_flows(&g, &bottom_up(&g, x))[0];
                let obs: Vec<&str> = x.true_observables.iter().map(String::as_str).collect();
                println!("{}\t{u:.6}\t{}", u8::from(y), obs.join(" "));
            }
        }
        Cmd::Synth { errors, train, test, partitions, trials, seed, bias, out } => {
            let train = train
                .split(',')
                .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad train size `{s}`")))
                .collect::<Result<Vec<_>>>()?;
            let spec = ExperimentSpec { errors, train, test, partitions, trials, seed, bias, ..Default::default() };
            let csv = metrics_csv(&run_experiment(&spec)?);
            match out {
                Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
        Cmd::Oracle(OracleCmd::Unused { graph, example, edge: name }) => {
            let g = graph.load()?;
            let e = edge(&g, &name)?;
            println!("{:.12}", oracle_unused_probability(&g, &Example::new(example.split_whitespace()), e)?);
        }
        Cmd::Oracle(OracleCmd::Cond { graph, exemplar, edge: name }) => {
            let g = graph.load()?;
            let e = edge(&g, &name)?;
            let x = parse_exemplar(&exemplar)?;
            if x.target.is_empty() {
                bail!("exemplar needs a classification after `|`");
            }
            println!("{:.12}", oracle_conditional_weight(&g, &x, e)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PTR_LOG")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
