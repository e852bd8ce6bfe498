use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use npkwt::baselines::{self, Baseline, FsstDesign};
use npkwt::bellman::{backward_recursion, CostTable, NominalModel};
use npkwt::export;
use npkwt::policy::{self, PolicyTree, Strategy};
use npkwt::rational::{self, Rational};

#[derive(Parser)]
#[command(
    name = "npkwt",
    version,
    about = "Exact nonparametric Kiefer-Weiss test design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the backward recursion and write the cost table.
    Design(DesignArgs),
    /// Extract the policy tree and write it as DOT and JSON.
    Tree(TreeArgs),
    /// Exact expected sample size and error probabilities under probes.
    Eval(EvalArgs),
    /// Baseline curves, threshold tables and the horizon sweep as CSV.
    Compare(CompareArgs),
    /// Check equalization and LFD support; exit 1 on failure.
    Verify(VerifyArgs),
    /// Monte Carlo run of the policy.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Success probability under H1 (two-symbol model).
    #[arg(long)]
    theta1: Option<String>,
    /// Success probability under H2 (two-symbol model).
    #[arg(long)]
    theta2: Option<String>,
    /// PMF under H1, comma separated.
    #[arg(long)]
    pmf1: Option<String>,
    /// PMF under H2, comma separated.
    #[arg(long)]
    pmf2: Option<String>,
    /// Cost of either error; overridden by --lambda1/--lambda2.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lambda1: Option<String>,
    #[arg(long)]
    lambda2: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    model: ModelArgs,
    /// Cost table written by `design`, instead of model flags.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output path of the cost table JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    source: Source,
    /// Number of levels to draw (default: min(7, horizon)).
    #[arg(long)]
    depth: Option<usize>,
    /// Output directory for tree.dot and tree.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
    /// `p1`, `p2`, `uniform` or a comma separated PMF; repeatable.
    #[arg(long)]
    probe: Vec<String>,
    /// Output path of the evaluation report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target error level of the SPRT, FSST and KWT designs.
    #[arg(long, default_value = "1e-4")]
    alpha: String,
    /// Success probabilities, `start:step:end` or comma separated.
    #[arg(long, default_value = "0.05:0.05:0.95")]
    grid: String,
    /// Horizon of the KWT backward induction.
    #[arg(long, default_value_t = 60)]
    kwt_horizon: usize,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Policy tree JSON written by `tree`, instead of a design.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Restrict the LFD support check to nodes above this depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// `lfd`, `alternating`, `p1`, `p2`, `uniform` or a comma separated PMF.
    #[arg(long, default_value = "lfd")]
    probe: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path of the statistics JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad flags or inputs; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn num(flag: &str, s: &str) -> Result<Rational> {
    rational::parse(s).map_err(|e| Usage(format!("--{flag}: {e}")).into())
}

fn build_model(a: &ModelArgs) -> Result<NominalModel> {
    let lambda = a.lambda.as_deref().map(|s| num("lambda", s)).transpose()?;
    let l1 = match &a.lambda1 {
        Some(s) => num("lambda1", s)?,
        None => lambda
            .clone()
            .ok_or_else(|| Usage("--lambda or --lambda1 required".into()))?,
    };
    let l2 = match &a.lambda2 {
        Some(s) => num("lambda2", s)?,
        None => lambda.ok_or_else(|| Usage("--lambda or --lambda2 required".into()))?,
    };
    let Some(horizon) = a.horizon else {
        return usage("--horizon required");
    };
    let model = match (&a.pmf1, &a.pmf2, &a.theta1, &a.theta2) {
        (Some(p1), Some(p2), None, None) => {
            let p1 = rational::parse_list(p1).map_err(|e| Usage(format!("--pmf1: {e}")))?;
            let p2 = rational::parse_list(p2).map_err(|e| Usage(format!("--pmf2: {e}")))?;
            NominalModel::new(p1, p2, l1, l2, horizon)
        }
        (None, None, Some(t1), Some(t2)) => {
            NominalModel::bernoulli(num("theta1", t1)?, num("theta2", t2)?, l1, l2, horizon)
        }
        _ => return usage("give either --theta1/--theta2 or --pmf1/--pmf2"),
    };
    model.map_err(|e| Usage(e.to_string()).into())
}

fn load_table(src: &Source) -> Result<CostTable> {
    match &src.table {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            export::cost_table_from_str(&text)
                .with_context(|| format!("loading cost table {}", path.display()))
        }
        None => Ok(backward_recursion(&build_model(&src.model)?)),
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_probe(model: &NominalModel, s: &str) -> Result<Vec<Rational>> {
    let k = model.alphabet_size();
    let pmf = match s {
        "p1" => model.p1.clone(),
        "p2" => model.p2.clone(),
        "uniform" => vec![Rational::new(1.into(), (k as i64).into()); k],
        _ => rational::parse_list(s).map_err(|e| Usage(format!("--probe: {e}")))?,
    };
    if pmf.len() != k {
        return usage(format!("--probe {s}: expected {k} probabilities"));
    }
    rational::check_pmf(&pmf).map_err(|e| Usage(format!("--probe {s}: {e}")))?;
    Ok(pmf)
}

fn parse_grid(s: &str) -> Result<Vec<Rational>> {
    let bad = || Usage(format!("--grid: cannot read {s:?}"));
    let grid = if let [a, step, b] = s.split(':').collect::<Vec<_>>()[..] {
        let a = rational::parse(a).map_err(|_| bad())?;
        let step = rational::parse(step).map_err(|_| bad())?;
        let b = rational::parse(b).map_err(|_| bad())?;
        if step <= Rational::from_integer(0.into()) {
            return Err(bad().into());
        }
        let mut out = Vec::new();
        let mut t = a;
        while t <= b {
            out.push(t.clone());
            t += &step;
        }
        out
    } else {
        rational::parse_list(s).map_err(|_| bad())?
    };
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    if grid.is_empty() || grid.iter().any(|t| *t <= zero || *t >= one) {
        return usage("--grid points must lie in (0, 1)");
    }
    Ok(grid)
}

fn cmd_design(a: &DesignArgs) -> Result<bool> {
    let model = build_model(&a.model)?;
    let table = backward_recursion(&model);
    let value = table.root_value();
    println!("horizon: {}", model.horizon);
    println!(
        "states: {}",
        table.levels.iter().map(|l| l.len()).sum::<usize>()
    );
    println!(
        "root value rho(1): {} ({})",
        rational::to_string(&value),
        export::decimal(&value)
    );
    println!(
        "root expected sample size: {}",
        table.root_expected_sample_size()
    );
    if let Some(out) = &a.out {
        write_atomic(out, &export::cost_table_to_string(&table))?;
        println!("wrote {}", out.display());
    }
    Ok(true)
}

fn cmd_tree(a: &TreeArgs) -> Result<bool> {
    let table = load_table(&a.source)?;
    let depth = a.depth.unwrap_or(table.horizon().min(7));
    if depth > table.horizon() {
        return usage(format!("--depth {depth} exceeds the horizon"));
    }
    let tree = policy::extract_tree(&table, depth)?;
    let root = tree.root();
    println!("nodes: {}", tree.nodes.len());
    println!(
        "root: {}/{}",
        root.e_enter,
        root.e_continue.map_or("-".to_string(), |e| e.to_string())
    );
    println!(
        "max conditional remaining sample size: {}",
        policy::max_conditional_remaining(&tree)
    );
    if let Some(dir) = &a.out {
        write_atomic(&dir.join("tree.dot"), &export::tree_to_dot(&tree))?;
        write_atomic(&dir.join("tree.json"), &export::tree_to_string(&tree))?;
        println!("wrote {}", dir.display());
    }
    Ok(true)
}

fn cmd_eval(a: &EvalArgs) -> Result<bool> {
    let table = load_table(&a.source)?;
    let model = table.model.clone();
    let names: Vec<String> = if a.probe.is_empty() {
        vec!["p1".into(), "p2".into(), "uniform".into()]
    } else {
        a.probe.clone()
    };
    let probes = names
        .iter()
        .map(|n| parse_probe(&model, n))
        .collect::<Result<Vec<_>>>()?;
    let tree = policy::extract_tree(&table, model.horizon)?;
    println!("probe\texpected_sample_size\talpha1\talpha2");
    let mut reports = Vec::new();
    for (name, r) in names.iter().zip(policy::evaluate_many(&tree, &probes)?) {
        println!(
            "{name}\t{}\t{}\t{}",
            export::decimal(&r.expected_sample_size),
            export::decimal(&r.alpha1),
            export::decimal(&r.alpha2)
        );
        reports.push((name.clone(), r));
    }
    let a1 = reports
        .iter()
        .find(|(n, _)| n == "p1")
        .map(|(_, r)| &r.alpha1);
    let a2 = reports
        .iter()
        .find(|(n, _)| n == "p2")
        .map(|(_, r)| &r.alpha2);
    if let (Some(a1), Some(a2)) = (a1, a2) {
        let avg = (a1 + a2) / Rational::from_integer(2.into());
        println!("average error: {}", export::decimal(&avg));
    }
    if let Some(out) = &a.out {
        write_atomic(out, &export::eval_reports_to_string(&reports))?;
        println!("wrote {}", out.display());
    }
    Ok(true)
}

fn cmd_compare(a: &CompareArgs) -> Result<bool> {
    let model = build_model(&a.model)?;
    let (t1, t2) = baselines::bernoulli_thetas(&model).map_err(|e| Usage(e.to_string()))?;
    let alpha = num("alpha", &a.alpha)?;
    let grid = parse_grid(&a.grid)?;

    let (sprt, sprt_err) =
        baselines::sprt_design(&model, &alpha).map_err(|e| Usage(e.to_string()))?;
    let (fsst, fsst_err) = baselines::fsst_design(&model, &alpha)?;
    let kwt_model = model
        .with_horizon(a.kwt_horizon)
        .map_err(|e| Usage(e.to_string()))?;
    let half = rational::ratio(1, 2);
    let kwt = baselines::kwt_calibrate(&kwt_model, &[half.clone(), half.clone()], &alpha)?;
    let kwt_err = kwt.errors();
    println!(
        "SPRT: thresholds +-{}, alpha1 {}",
        sprt.upper,
        export::decimal(&sprt_err.0)
    );
    println!(
        "FSST: n = {}, alpha1 {}",
        fsst.n,
        export::decimal(&fsst_err.0)
    );
    println!(
        "KWT: lambda {}, truncation {}, alpha1 {}",
        rational::to_string(&kwt.lambda1),
        kwt.truncation(),
        export::decimal(&kwt_err.0)
    );
    let tests = [
        Baseline::Sprt(sprt),
        Baseline::Fsst(fsst),
        Baseline::Kwt(Box::new(kwt.clone())),
    ];
    let rows = baselines::sample_size_curve(&tests, &t1, &t2, &grid)?;

    let reach = kwt.horizon.max(fsst.n as usize);
    let mut thresholds = String::from("n,test_name,continue_min,continue_max\n");
    let kwt_bounds = kwt.bounds();
    for n in 0..reach {
        let lim = n as i64;
        let lo = (sprt.lower + 1).max(-lim);
        let hi = (sprt.upper - 1).min(lim);
        thresholds.push_str(&format!("{n},SPRT,{lo},{hi}\n"));
        if n < fsst.n as usize {
            thresholds.push_str(&format!("{n},FSST,{},{}\n", -lim, lim));
        }
        if let Some(Some((lo, hi))) = kwt_bounds.get(n) {
            thresholds.push_str(&format!("{n},KWT,{lo},{hi}\n"));
        }
    }

    let mut sweep = String::from(
        "horizon,npkwt_expected_sample_size,npkwt_average_error,fsst_sample_size,fsst_average_error\n",
    );
    let two = Rational::from_integer(2.into());
    for n in (3..=model.horizon).step_by(2) {
        let m = model.with_horizon(n)?;
        let table = backward_recursion(&m);
        let tree = policy::extract_tree(&table, n)?;
        let both = policy::evaluate_many(&tree, &[m.p1.clone(), m.p2.clone()])?;
        let (r1, r2) = (&both[0], &both[1]);
        let avg = (&r1.alpha1 + &r2.alpha2) / &two;
        let e = table.root_expected_sample_size();
        let f = FsstDesign::symmetric(e as u32);
        let (f1, f2) = baselines::fsst_errors(&f, &t1, &t2);
        let favg = (f1 + f2) / &two;
        sweep.push_str(&format!(
            "{n},{e},{},{e},{}\n",
            export::decimal(&avg),
            export::decimal(&favg)
        ));
        println!(
            "horizon {n}: NP-KWT E = {e}, average error {}, FSST({e}) {}",
            export::decimal(&avg),
            export::decimal(&favg)
        );
    }

    if let Some(dir) = &a.out {
        write_atomic(&dir.join("curves.csv"), &export::curves_to_csv(&rows))?;
        write_atomic(&dir.join("thresholds.csv"), &thresholds)?;
        write_atomic(&dir.join("horizon_sweep.csv"), &sweep)?;
        println!("wrote {}", dir.display());
    }
    Ok(true)
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let tree: PolicyTree = match &a.policy {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            export::tree_from_str(&text)
                .with_context(|| format!("loading policy {}", path.display()))?
        }
        None => {
            let table = load_table(&a.source)?;
            policy::extract_tree(&table, table.horizon())?
        }
    };
    let cert = policy::verify_equalization(&tree)?;
    println!("c = {}", cert.c_root);
    println!("paths checked: {}", cert.paths_checked);
    println!(
        "max path expectation: {}",
        rational::to_string(&cert.max_path_expectation)
    );
    for v in cert.violating_paths.iter().take(20) {
        println!(
            "  equalization violated on {:?}: {}",
            v.path,
            rational::to_string(&v.expectation)
        );
    }
    let depth = a.depth.unwrap_or(tree.model.horizon);
    let support: Vec<_> = policy::verify_lfd_support(&tree)
        .into_iter()
        .filter(|v| v.path.len() < depth)
        .collect();
    for v in support.iter().take(20) {
        println!("  LFD support violated at {:?}: {}", v.path, v.reason);
    }
    println!(
        "equalization: {}",
        if cert.passed() { "pass" } else { "FAIL" }
    );
    println!(
        "lfd support (depth < {depth}): {}",
        if support.is_empty() { "pass" } else { "FAIL" }
    );
    Ok(cert.passed() && support.is_empty())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<bool> {
    let table = load_table(&a.source)?;
    let strategy = match a.probe.as_str() {
        "lfd" => Strategy::LfdReplay,
        "alternating" => Strategy::Alternating,
        s => Strategy::Fixed(parse_probe(&table.model, s)?),
    };
    if a.trials == 0 {
        return usage("--trials must be at least 1");
    }
    let tree = policy::extract_tree(&table, table.horizon())?;
    let stats = policy::simulate(&tree, &strategy, a.trials, a.seed)?;
    let report = serde_json::json!({
        "probe": a.probe,
        "trials": stats.trials,
        "seed": a.seed,
        "mean_stopping_time": stats.mean_stopping_time,
        "std_error": stats.std_error,
        "decide_h1": stats.decide_h1,
        "decide_h2": stats.decide_h2,
        "histogram": stats.histogram,
    });
    println!("trials: {}", stats.trials);
    println!(
        "mean stopping time: {:.6} (standard error {:.6})",
        stats.mean_stopping_time, stats.std_error
    );
    println!("decisions: H1 {}, H2 {}", stats.decide_h1, stats.decide_h2);
    if let Some(out) = &a.out {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_atomic(out, &text)?;
        println!("wrote {}", out.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Tree(a) => cmd_tree(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
