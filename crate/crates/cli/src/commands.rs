use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use herodraft_core::harness::{round_robin, sweep_exploration};
use herodraft_core::reward::MODEL_FORMAT;
use herodraft_core::uct::{self, SearchBudget, UctConfig};
use herodraft_core::{
    evaluate, hero_stats, mine_rules, synth_generate, train, DraftSchedule, GroundTruthModel,
    HeroStats, MatchDataset, ModelKind, PartialDraft, RewardModel, RuleSet, SimulationConfig,
    StrategyContext, StrategySpec, TrainConfig, WinPredictor,
};
use herodraft_service::api::UctSettings;
use herodraft_service::{AppState, ServiceConfig};
use serde_json::{json, Value};

use crate::{
    Cli, Command, EvalArgs, MineArgs, RecommendArgs, ServeArgs, SimArgs, SweepArgs, SynthArgs,
    TournamentArgs, TrainArgs,
};

/// An invalid combination of options, reported as a usage error.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

/// What a command reports: the settings it ran with, its machine-readable
/// result and a human rendering of that result.
struct Report {
    command: &'static str,
    config: Value,
    result: Value,
    human: String,
}

impl Report {
    fn print(&self, as_json: bool) -> Result<()> {
        if as_json {
            let doc = json!({
                "command": self.command,
                "config": self.config,
                "result": self.result,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        } else {
            println!(
                "# herodraft {} {}",
                self.command,
                serde_json::to_string(&self.config)?
            );
            print!("{}", self.human);
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let report = match &cli.command {
        Command::Synth(a) => synth(a)?,
        Command::Train(a) => train_cmd(a)?,
        Command::Eval(a) => eval(a)?,
        Command::Mine(a) => mine(a)?,
        Command::Tournament(a) => tournament(a)?,
        Command::Sweep(a) => sweep(a)?,
        Command::Recommend(a) => recommend(a)?,
        Command::Serve(a) => return serve(a),
    };
    report.print(cli.json)
}

/// Reads a reward model or a ground-truth model, told apart by the reward
/// model's format tag.
pub fn load_predictor(path: &Path) -> Result<Arc<dyn WinPredictor>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let model: Arc<dyn WinPredictor> = if value.get("format").and_then(Value::as_str)
        == Some(MODEL_FORMAT)
    {
        Arc::new(
            RewardModel::from_json(&text).with_context(|| format!("loading {}", path.display()))?,
        )
    } else {
        Arc::new(
            serde_json::from_value::<GroundTruthModel>(value).with_context(|| {
                format!(
                    "{} is neither a reward model nor a ground-truth model",
                    path.display()
                )
            })?,
        )
    };
    Ok(model)
}

fn load_dataset(path: &Path) -> Result<MatchDataset> {
    MatchDataset::load(path).with_context(|| format!("loading {}", path.display()))
}

fn load_schedule(arg: &str, n_heroes: usize) -> Result<DraftSchedule> {
    match arg {
        "all_pick" | "all-pick" | "captain_mode" | "captain-mode" => {
            Ok(DraftSchedule::preset(arg, n_heroes)?)
        }
        path => DraftSchedule::load(path).with_context(|| format!("loading schedule {path}")),
    }
}

fn synth(a: &SynthArgs) -> Result<Report> {
    let truth_seed = a.truth_seed.unwrap_or(a.seed);
    let truth = match &a.truth {
        Some(path) => {
            GroundTruthModel::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => GroundTruthModel::random(
            a.heroes,
            a.base_range,
            a.pairs,
            a.pair_magnitude,
            a.noise,
            truth_seed,
        )?,
    };
    let dataset = synth_generate(&truth, a.matches, a.seed)?;
    dataset.save(&a.out)?;
    if let Some(path) = &a.truth_out {
        truth.save(path)?;
    }
    let config = match &a.truth {
        Some(path) => json!({ "truth": path, "matches": a.matches, "seed": a.seed }),
        None => json!({
            "heroes": a.heroes,
            "pairs": a.pairs,
            "base_range": a.base_range,
            "pair_magnitude": a.pair_magnitude,
            "noise": a.noise,
            "truth_seed": truth_seed,
            "matches": a.matches,
            "seed": a.seed,
        }),
    };
    let result = json!({
        "out": a.out,
        "truth_out": a.truth_out,
        "n_heroes": dataset.n_heroes(),
        "n_matches": dataset.len(),
        "radiant_win_rate": dataset.radiant_win_rate(),
        "fingerprint": dataset.fingerprint(),
    });
    let human = format!(
        "wrote {} matches over {} heroes to {} (radiant win rate {:.4}, fingerprint {})\n",
        dataset.len(),
        dataset.n_heroes(),
        a.out.display(),
        dataset.radiant_win_rate(),
        dataset.fingerprint()
    );
    Ok(Report {
        command: "synth",
        config,
        result,
        human,
    })
}

fn eval_json(report: &herodraft_core::EvalReport) -> Value {
    json!({ "accuracy": report.accuracy, "auc": report.auc, "n_samples": report.n_samples })
}

fn eval_line(report: &herodraft_core::EvalReport) -> String {
    let auc = report
        .auc
        .map_or("undefined".to_string(), |v| format!("{v:.4}"));
    format!(
        "accuracy {:.4}  auc {auc}  samples {}",
        report.accuracy, report.n_samples
    )
}

fn train_cmd(a: &TrainArgs) -> Result<Report> {
    let kind: ModelKind = a
        .kind
        .parse()
        .map_err(|e: herodraft_core::Error| usage(e.to_string()))?;
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(usage("--holdout must lie in [0, 1)"));
    }
    let config = TrainConfig {
        hidden_units: a.hidden,
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        l2_penalty: a.l2,
        validation_fraction: a.validation,
        seed: a.seed,
    };
    let dataset = load_dataset(&a.data)?;
    let (train_set, test_set) = dataset.split(a.holdout, a.seed)?;
    if let Some(path) = &a.test_out {
        test_set.save(path)?;
    }
    let model = train(&train_set, kind, &config)?;
    model.save(&a.out)?;
    let meta = model
        .metadata()
        .context("trained model carries no metadata")?;
    let holdout = if test_set.is_empty() {
        None
    } else {
        Some(evaluate(&model, &test_set)?)
    };

    let mut human = format!(
        "trained {kind:?} on {} matches ({} for validation), saved to {}\n",
        meta.n_train,
        meta.n_validation,
        a.out.display()
    );
    if let Some(loss) = meta.epoch_losses.last() {
        writeln!(human, "final training loss {loss:.6}")?;
    }
    if let Some(v) = &meta.validation {
        writeln!(human, "validation: {}", eval_line(v))?;
    }
    if let Some(h) = &holdout {
        writeln!(human, "holdout:    {}", eval_line(h))?;
    }
    let result = json!({
        "out": a.out,
        "kind": kind,
        "n_train": meta.n_train,
        "n_validation": meta.n_validation,
        "epoch_losses": meta.epoch_losses,
        "validation": meta.validation.as_ref().map(eval_json),
        "test_out": a.test_out,
        "holdout": holdout.as_ref().map(eval_json),
        "dataset_fingerprint": meta.dataset_fingerprint,
    });
    let config = json!({
        "data": a.data,
        "kind": kind,
        "train": config,
        "holdout": a.holdout,
        "split_seed": a.seed,
    });
    Ok(Report {
        command: "train",
        config,
        result,
        human,
    })
}

fn eval(a: &EvalArgs) -> Result<Report> {
    let model = load_predictor(&a.model)?;
    let dataset = load_dataset(&a.data)?;
    let report = evaluate(&*model, &dataset)?;
    Ok(Report {
        command: "eval",
        config: json!({ "model": a.model, "data": a.data }),
        result: eval_json(&report),
        human: format!("{}\n", eval_line(&report)),
    })
}

fn mine(a: &MineArgs) -> Result<Report> {
    let dataset = load_dataset(&a.data)?;
    let rules = mine_rules(&dataset, a.min_support, a.max_size)?;
    rules.save(&a.out)?;
    let (ally, enemy) = (rules.ally().count(), rules.enemy().count());
    Ok(Report {
        command: "mine",
        config: json!({ "data": a.data, "min_support": a.min_support, "max_size": a.max_size }),
        result: json!({
            "out": a.out,
            "n_matches": rules.n_matches,
            "n_rules": rules.rules.len(),
            "n_ally": ally,
            "n_enemy": enemy,
        }),
        human: format!(
            "mined {} rules ({ally} ally, {enemy} enemy) from {} matches, saved to {}\n",
            rules.rules.len(),
            rules.n_matches,
            a.out.display()
        ),
    })
}

struct Simulation {
    config: SimulationConfig,
    stats: Option<Arc<HeroStats>>,
    echo: Value,
}

fn simulation(a: &SimArgs) -> Result<Simulation> {
    if a.sims == 0 {
        return Err(usage("--sims must be positive"));
    }
    if !a.no_swap && !a.sims.is_multiple_of(2) {
        return Err(usage("--sims must be even unless --no-swap is given"));
    }
    let model = load_predictor(&a.model)?;
    let schedule = load_schedule(&a.schedule, model.n_features())?;
    let stats = match &a.data {
        Some(path) => Some(Arc::new(hero_stats(&load_dataset(path)?))),
        None => None,
    };
    let mut config = SimulationConfig::new(Arc::new(schedule), model);
    config.n_simulations = a.sims;
    config.base_seed = a.seed;
    config.swap_sides = !a.no_swap;
    config.parallel = !a.serial;
    config.first_action_weights = if a.uniform_first { None } else { stats.clone() };
    config.validate()?;
    let echo = json!({
        "model": a.model,
        "schedule": a.schedule,
        "n_heroes": config.schedule.n_heroes(),
        "sims": a.sims,
        "seed": a.seed,
        "swap_sides": config.swap_sides,
        "data": a.data,
        "first_action": if config.first_action_weights.is_some() { "pick_counts" } else { "uniform" },
    });
    Ok(Simulation {
        config,
        stats,
        echo,
    })
}

fn tournament(a: &TournamentArgs) -> Result<Report> {
    let specs: Vec<String> = match (&a.a, &a.b, &a.strategies) {
        (Some(x), Some(y), None) => vec![x.clone(), y.clone()],
        (None, None, Some(list)) if list.len() >= 2 => list.clone(),
        (None, None, Some(_)) => return Err(usage("--strategies needs at least two specs")),
        _ => return Err(usage("give either --a and --b or --strategies")),
    };
    let specs: Vec<StrategySpec> = specs
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|e: herodraft_core::Error| usage(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let needs_rules = specs
        .iter()
        .any(|s| matches!(s, StrategySpec::AssociationRules { .. }));
    let needs_stats = specs
        .iter()
        .any(|s| matches!(s, StrategySpec::HighestWinRate));
    if needs_rules && a.rules.is_none() {
        return Err(usage("ar needs --rules"));
    }
    if needs_stats && a.sim.data.is_none() {
        return Err(usage("hwr needs --data"));
    }

    let sim = simulation(&a.sim)?;
    let rules = match &a.rules {
        Some(path) => Some(Arc::new(
            RuleSet::load(path).with_context(|| format!("loading {}", path.display()))?,
        )),
        None => None,
    };
    let ctx = StrategyContext {
        model: sim.config.reward_model.clone(),
        stats: sim.stats.clone(),
        rules,
    };
    let built = specs
        .iter()
        .map(|s| s.build(&ctx))
        .collect::<herodraft_core::Result<Vec<_>>>()?;
    let refs: Vec<_> = built.iter().map(|b| b.as_ref()).collect();
    let (matrix, results) = round_robin(&refs, &sim.config)?;

    let csv = matrix.to_csv();
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv)?;
    }
    if let Some(path) = &a.trace {
        std::fs::write(path, serde_json::to_string_pretty(&results)?)?;
    }
    let mut human = csv;
    for r in &results {
        writeln!(
            human,
            "mean win rate of {} against {}: {:.4} (opponent {:.4}; mean decision time {:.3} ms vs {:.3} ms)",
            r.strategy_a,
            r.strategy_b,
            r.mean_win_rate,
            r.opponent_mean_win_rate,
            r.timing_a.mean_millis,
            r.timing_b.mean_millis
        )?;
    }
    let mut config = sim.echo;
    config["strategies"] = json!(specs.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    config["rules"] = json!(a.rules);
    Ok(Report {
        command: "tournament",
        config,
        result: json!({ "matrix": matrix, "results": results }),
        human,
    })
}

fn sweep(a: &SweepArgs) -> Result<Report> {
    if a.cs.iter().any(|c| !(c.is_finite() && *c >= 0.0))
        || !(a.benchmark_c.is_finite() && a.benchmark_c >= 0.0)
    {
        return Err(usage(
            "exploration constants must be finite and non-negative",
        ));
    }
    if a.iters.contains(&0) {
        return Err(usage("iteration counts must be positive"));
    }
    let sim = simulation(&a.sim)?;
    let result = sweep_exploration(&a.iters, &a.cs, a.benchmark_c, &sim.config)?;
    let csv = result.to_csv();
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv)?;
    }
    let mut config = sim.echo;
    config["iters"] = json!(a.iters);
    config["cs"] = json!(a.cs);
    config["benchmark_c"] = json!(a.benchmark_c);
    Ok(Report {
        command: "sweep",
        config,
        result: serde_json::to_value(&result)?,
        human: csv,
    })
}

fn recommend(a: &RecommendArgs) -> Result<Report> {
    if a.top_k == 0 {
        return Err(usage("--top-k must be positive"));
    }
    if a.iters == 0 || a.millis == Some(0) {
        return Err(usage("the search budget must be positive"));
    }
    if !(a.c.is_finite() && a.c >= 0.0) {
        return Err(usage("--c must be finite and non-negative"));
    }
    let model = load_predictor(&a.model)?;
    let partial =
        PartialDraft::load(&a.state).with_context(|| format!("loading {}", a.state.display()))?;
    let partial = PartialDraft {
        n_heroes: partial.n_heroes.or(Some(model.n_features())),
        ..partial
    };
    let state = partial.to_state()?;
    let budget = match a.millis {
        Some(ms) => SearchBudget::WallClock(ms),
        None => SearchBudget::Iterations(a.iters),
    };
    let config = UctConfig {
        budget,
        ..UctConfig::iterations(a.iters, a.c, a.seed)
    };
    let report = uct::search(&state, &*model, &config)?;
    let edges: Vec<_> = report.edges.iter().take(a.top_k).collect();

    let mut human = format!(
        "recommend hero {} for {:?} at step {}\n{} iterations, {} nodes, {:.1} ms, root value {:.4}\n",
        report.best,
        report.acting_team,
        state.step(),
        report.iterations,
        report.nodes,
        report.elapsed_micros as f64 / 1e3,
        report.root_value
    );
    writeln!(human, "hero,win_rate,visits")?;
    for e in &edges {
        writeln!(human, "{},{:.4},{}", e.hero, e.mean_reward, e.visits)?;
    }
    let result = json!({
        "hero": report.best,
        "acting_team": report.acting_team,
        "step": state.step(),
        "iterations": report.iterations,
        "root_value": report.root_value,
        "root_selections": report.root_selections,
        "nodes": report.nodes,
        "elapsed_millis": report.elapsed_micros as f64 / 1e3,
        "stop_reason": report.stop_reason,
        "edges": edges,
    });
    let config = json!({
        "state": a.state,
        "model": a.model,
        "iters": a.iters,
        "millis": a.millis,
        "c": a.c,
        "seed": a.seed,
        "top_k": a.top_k,
    });
    Ok(Report {
        command: "recommend",
        config,
        result,
        human,
    })
}

fn serve(a: &ServeArgs) -> Result<()> {
    let mut models = BTreeMap::new();
    models.insert(
        herodraft_service::api::DEFAULT_MODEL.to_string(),
        load_predictor(&a.model)?,
    );
    for entry in &a.extra_models {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| usage(format!("--extra-model expects NAME=FILE, got `{entry}`")))?;
        models.insert(name.to_string(), load_predictor(Path::new(path))?);
    }
    let hero_names: Vec<String> = match &a.hero_names {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("{} must hold a JSON array of names", path.display()))?,
        None => Vec::new(),
    };
    if a.iters == 0 || !(a.c.is_finite() && a.c >= 0.0) || a.max_millis == 0 {
        return Err(usage("search defaults must be positive and finite"));
    }
    let config = ServiceConfig {
        default_uct: UctSettings {
            iterations: a.iters,
            exploration_c: a.c,
            seed: a.seed,
        },
        max_search_millis: a.max_millis,
        session_log: a.session_log.clone(),
        ..ServiceConfig::default()
    };
    let state = AppState::new(config, models, hero_names).map_err(anyhow::Error::msg)?;
    eprintln!(
        "# herodraft serve {}",
        json!({
            "addr": a.addr.to_string(),
            "model": a.model,
            "extra_models": a.extra_models,
            "session_log": a.session_log,
            "iters": a.iters,
            "c": a.c,
            "seed": a.seed,
            "max_millis": a.max_millis,
            "restored_sessions": state.session_count(),
        })
    );
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(herodraft_service::serve(a.addr, state))?;
    Ok(())
}
