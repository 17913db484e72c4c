//! UCT: Monte Carlo Tree Search with UCB1 as the tree policy.
//!
//! Each iteration selects down the tree by UCB1 until it reaches a terminal
//! node or a node with unexpanded actions, expands one uniformly chosen
//! unexpanded action, plays uniformly random actions to the end of the draft,
//! and backpropagates the reward along the visited path.
//!
//! Rewards stay in `[0, 1]`. A node stores the reward from the point of view
//! of the team whose action led into it: Radiant's win probability `w` for
//! Radiant actions, `1 - w` for Dire actions. A node's visit count is bumped
//! every time backpropagation passes through it, including the iteration
//! that created it.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::draft::{DraftState, HeroId, Team};
use crate::error::{Error, Result};
use crate::reward::WinPredictor;
use crate::rng::{self, DraftRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchBudget {
    Iterations(u64),
    WallClock(u64),
}

impl SearchBudget {
    fn validate(self) -> Result<()> {
        match self {
            SearchBudget::Iterations(0) => {
                Err(Error::Config("iteration budget must be at least 1".into()))
            }
            SearchBudget::WallClock(0) => Err(Error::Config(
                "wall-clock budget must be at least 1 ms".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UctConfig {
    pub exploration_c: f64,
    pub budget: SearchBudget,
    pub seed: u64,
    /// Stop early once the tree holds this many nodes.
    #[serde(default)]
    pub max_nodes: Option<usize>,
    /// Hard wall-clock cap on top of an iteration budget.
    #[serde(default)]
    pub time_cap_millis: Option<u64>,
}

impl UctConfig {
    pub fn iterations(iterations: u64, exploration_c: f64, seed: u64) -> Self {
        UctConfig {
            exploration_c,
            budget: SearchBudget::Iterations(iterations),
            seed,
            max_nodes: None,
            time_cap_millis: None,
        }
    }

    pub fn wall_clock(millis: u64, exploration_c: f64, seed: u64) -> Self {
        UctConfig {
            budget: SearchBudget::WallClock(millis),
            ..Self::iterations(1, exploration_c, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.exploration_c.is_finite() && self.exploration_c >= 0.0) {
            return Err(Error::Config(format!(
                "exploration constant {} must be a non-negative number",
                self.exploration_c
            )));
        }
        if self.max_nodes == Some(0) {
            return Err(Error::Config("max_nodes must be at least 1".into()));
        }
        self.budget.validate()
    }
}

/// `mean + c * sqrt(ln(parent_visits) / edge_visits)`.
pub fn ucb1_score(mean_reward: f64, parent_visits: u64, edge_visits: u64, c: f64) -> Result<f64> {
    if edge_visits == 0 {
        return Err(Error::IllegalQuery(
            "UCB1 is undefined for an unvisited edge".into(),
        ));
    }
    if parent_visits == 0 {
        return Err(Error::IllegalQuery("UCB1 needs a visited parent".into()));
    }
    Ok(ucb1_unchecked(mean_reward, parent_visits, edge_visits, c))
}

#[inline]
fn ucb1_unchecked(mean_reward: f64, parent_visits: u64, edge_visits: u64, c: f64) -> f64 {
    mean_reward + c * ((parent_visits as f64).ln() / edge_visits as f64).sqrt()
}

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Node {
    action: Option<HeroId>,
    actor: Option<Team>,
    parent: Option<NodeId>,
    visits: u64,
    value_sum: f64,
    radiant_sum: f64,
    terminal: bool,
    children: Vec<NodeId>,
    unexpanded: Vec<HeroId>,
}

impl Node {
    /// The action on the incoming edge; `None` for the root.
    pub fn action(&self) -> Option<HeroId> {
        self.action
    }

    /// Team that took the incoming action.
    pub fn actor(&self) -> Option<Team> {
        self.actor
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    /// Mean reward of the incoming edge from the actor's point of view.
    pub fn mean_reward(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }

    /// Mean of Radiant's win probability over the rewards seen here.
    pub fn mean_radiant_reward(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.radiant_sum / self.visits as f64
        }
    }

    pub fn value_sum(&self) -> f64 {
        self.value_sum
    }

    pub fn radiant_sum(&self) -> f64 {
        self.radiant_sum
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn unexpanded(&self) -> &[HeroId] {
        &self.unexpanded
    }

    pub fn is_expandable(&self) -> bool {
        !self.terminal && !self.unexpanded.is_empty()
    }
}

/// The search tree, kept as an arena; node 0 is the root.
#[derive(Clone, Debug)]
pub struct SearchTree {
    nodes: Vec<Node>,
}

impl SearchTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub hero: HeroId,
    pub visits: u64,
    /// Mean reward from the acting team's point of view.
    pub mean_reward: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    NodeLimit,
    TimeCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best: HeroId,
    pub acting_team: Team,
    /// Root edges with at least one visit, best mean reward first.
    pub edges: Vec<EdgeStats>,
    pub iterations: u64,
    /// Mean reward over all iterations, for the acting team.
    pub root_value: f64,
    /// UCB1 selection steps taken at the root.
    pub root_selections: u64,
    /// UCB1 selection steps taken anywhere in the tree.
    pub total_selections: u64,
    pub nodes: usize,
    pub elapsed_micros: u64,
    pub stop_reason: StopReason,
}

/// Runs UCT from `state` and returns the root child with the highest mean
/// reward.
pub fn recommend(
    state: &DraftState,
    model: &(impl WinPredictor + ?Sized),
    config: &UctConfig,
) -> Result<HeroId> {
    Ok(search(state, model, config)?.best)
}

pub fn search(
    state: &DraftState,
    model: &(impl WinPredictor + ?Sized),
    config: &UctConfig,
) -> Result<SearchReport> {
    Ok(search_with_tree(state, model, config)?.0)
}

/// Like [`search`], also handing back the final tree.
pub fn search_with_tree(
    state: &DraftState,
    model: &(impl WinPredictor + ?Sized),
    config: &UctConfig,
) -> Result<(SearchReport, SearchTree)> {
    config.validate()?;
    if state.is_terminal() {
        return Err(Error::IllegalQuery(
            "cannot search from a finished draft".into(),
        ));
    }
    if model.n_features() != state.n_heroes() {
        return Err(Error::Dimension {
            expected: model.n_features(),
            actual: state.n_heroes(),
        });
    }
    let legal = state.legal_actions();
    if legal.is_empty() {
        return Err(Error::IllegalQuery("no legal actions".into()));
    }
    let acting_team = state.turn()?.team;

    let mut search = Search {
        root_state: state,
        model,
        c: config.exploration_c,
        rng: rng::seeded(config.seed),
        tree: SearchTree {
            nodes: vec![Node {
                action: None,
                actor: None,
                parent: None,
                visits: 0,
                value_sum: 0.0,
                radiant_sum: 0.0,
                terminal: false,
                children: Vec::new(),
                unexpanded: legal,
            }],
        },
        path: Vec::with_capacity(state.remaining_turns() + 1),
        available: Vec::with_capacity(state.n_heroes()),
        root_selections: 0,
        total_selections: 0,
    };

    let start = Instant::now();
    let deadline = |millis: u64| start + Duration::from_millis(millis);
    let wall = match config.budget {
        SearchBudget::WallClock(ms) => Some(deadline(ms)),
        SearchBudget::Iterations(_) => None,
    };
    let cap = config.time_cap_millis.map(deadline);
    let mut iterations = 0u64;
    let stop_reason = loop {
        search.iterate();
        iterations += 1;
        if let SearchBudget::Iterations(k) = config.budget {
            if iterations >= k {
                break StopReason::Budget;
            }
        }
        if config.max_nodes.is_some_and(|cap| search.tree.len() >= cap) {
            break StopReason::NodeLimit;
        }
        if wall.is_some() || cap.is_some() {
            let now = Instant::now();
            if wall.is_some_and(|d| now >= d) {
                break StopReason::Budget;
            }
            if cap.is_some_and(|d| now >= d) {
                break StopReason::TimeCap;
            }
        }
    };
    let elapsed = start.elapsed();

    let best = search.best_root_action();
    let tree = search.tree;
    let root = tree.root();
    let mut edges: Vec<EdgeStats> = root
        .children
        .iter()
        .map(|&c| {
            let n = &tree.nodes[c];
            EdgeStats {
                hero: n.action.expect("non-root node has an action"),
                visits: n.visits,
                mean_reward: n.mean_reward(),
            }
        })
        .filter(|e| e.visits > 0)
        .collect();
    edges.sort_by(|a, b| {
        b.mean_reward
            .total_cmp(&a.mean_reward)
            .then(b.visits.cmp(&a.visits))
            .then(a.hero.cmp(&b.hero))
    });
    let report = SearchReport {
        best,
        acting_team,
        edges,
        iterations,
        root_value: acting_team.perspective(root.mean_radiant_reward()),
        root_selections: search.root_selections,
        total_selections: search.total_selections,
        nodes: tree.len(),
        elapsed_micros: elapsed.as_micros() as u64,
        stop_reason,
    };
    Ok((report, tree))
}

struct Search<'a, P: WinPredictor + ?Sized> {
    root_state: &'a DraftState,
    model: &'a P,
    c: f64,
    rng: DraftRng,
    tree: SearchTree,
    path: Vec<NodeId>,
    available: Vec<HeroId>,
    root_selections: u64,
    total_selections: u64,
}

impl<P: WinPredictor + ?Sized> Search<'_, P> {
    fn iterate(&mut self) {
        let mut state = self.root_state.clone();
        self.path.clear();
        let mut node = 0;
        self.path.push(node);

        loop {
            if self.tree.nodes[node].terminal {
                break;
            }
            if !self.tree.nodes[node].unexpanded.is_empty() {
                node = self.expand(node, &mut state);
                self.path.push(node);
                self.rollout(&mut state);
                break;
            }
            if node == 0 {
                self.root_selections += 1;
            }
            self.total_selections += 1;
            node = self.select(node);
            let action = self.tree.nodes[node].action.expect("child has an action");
            state
                .apply_in_place(action)
                .expect("tree actions are legal in their state");
            self.path.push(node);
        }

        let w = self
            .model
            .win_probability(&state.picks(Team::Radiant), &state.picks(Team::Dire));
        for &id in &self.path {
            let n = &mut self.tree.nodes[id];
            n.visits += 1;
            n.radiant_sum += w;
            n.value_sum += match n.actor {
                Some(team) => team.perspective(w),
                None => w,
            };
        }
    }

    fn expand(&mut self, parent: NodeId, state: &mut DraftState) -> NodeId {
        let actor = state
            .turn()
            .expect("expandable nodes are non-terminal")
            .team;
        let unexpanded = &mut self.tree.nodes[parent].unexpanded;
        let pick = self.rng.gen_range(0..unexpanded.len());
        let action = unexpanded.swap_remove(pick);
        state
            .apply_in_place(action)
            .expect("unexpanded actions are legal");
        let terminal = state.is_terminal();
        let id = self.tree.nodes.len();
        self.tree.nodes.push(Node {
            action: Some(action),
            actor: Some(actor),
            parent: Some(parent),
            visits: 0,
            value_sum: 0.0,
            radiant_sum: 0.0,
            terminal,
            children: Vec::new(),
            unexpanded: if terminal {
                Vec::new()
            } else {
                state.legal_actions()
            },
        });
        self.tree.nodes[parent].children.push(id);
        id
    }

    fn rollout(&mut self, state: &mut DraftState) {
        if state.is_terminal() {
            return;
        }
        self.available.clear();
        self.available.extend(state.legal_actions());
        while !state.is_terminal() {
            let i = self.rng.gen_range(0..self.available.len());
            let hero = self.available.swap_remove(i);
            state
                .apply_in_place(hero)
                .expect("rollout actions are legal");
        }
    }

    /// UCB1 over fully expanded children; ties broken uniformly at random.
    fn select(&mut self, parent: NodeId) -> NodeId {
        let p = &self.tree.nodes[parent];
        let mut best = f64::NEG_INFINITY;
        let mut tied: Vec<NodeId> = Vec::new();
        for &child in &p.children {
            let n = &self.tree.nodes[child];
            let score = ucb1_unchecked(n.mean_reward(), p.visits, n.visits, self.c);
            if score > best {
                best = score;
                tied.clear();
                tied.push(child);
            } else if score == best {
                tied.push(child);
            }
        }
        if tied.len() == 1 {
            tied[0]
        } else {
            tied[self.rng.gen_range(0..tied.len())]
        }
    }

    fn best_root_action(&mut self) -> HeroId {
        let root = &self.tree.nodes[0];
        let mut best = f64::NEG_INFINITY;
        let mut tied: Vec<HeroId> = Vec::new();
        for &child in &root.children {
            let n = &self.tree.nodes[child];
            if n.visits == 0 {
                continue;
            }
            let mean = n.mean_reward();
            let action = n.action.expect("child has an action");
            if mean > best {
                best = mean;
                tied.clear();
                tied.push(action);
            } else if mean == best {
                tied.push(action);
            }
        }
        match tied.len() {
            0 => unreachable!("at least one iteration expands a root child"),
            1 => tied[0],
            n => tied[self.rng.gen_range(0..n)],
        }
    }
}
