//! Exhaustive minimax over the remaining draft, used to verify UCT on small
//! instances. Radiant maximizes and Dire minimizes Radiant's win
//! probability, for picks and bans alike.

use serde::{Deserialize, Serialize};

use crate::draft::{DraftState, HeroId, Team};
use crate::error::{Error, Result};
use crate::reward::WinPredictor;

/// Maximum number of complete action lines the solver will enumerate.
pub const MAX_LINES: f64 = 1e7;

/// Values within this distance of the optimum count as optimal.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    /// Game value as Radiant's win probability.
    pub value: f64,
    /// Every root action achieving the value, ascending; empty at a terminal
    /// state.
    pub optimal_actions: Vec<HeroId>,
}

/// Number of complete action lines from `state`.
pub fn line_count(state: &DraftState) -> f64 {
    let available = state.legal_actions().len();
    (0..state.remaining_turns())
        .map(|k| available.saturating_sub(k) as f64)
        .product()
}

pub fn minimax_solve(
    state: &DraftState,
    model: &(impl WinPredictor + ?Sized),
) -> Result<MinimaxSolution> {
    if model.n_features() != state.n_heroes() {
        return Err(Error::Dimension {
            expected: model.n_features(),
            actual: state.n_heroes(),
        });
    }
    if state.is_terminal() {
        return Ok(MinimaxSolution {
            value: model.evaluate(state)?,
            optimal_actions: Vec::new(),
        });
    }
    let size = line_count(state);
    if size > MAX_LINES {
        return Err(Error::SearchTooLarge {
            size,
            limit: MAX_LINES,
        });
    }

    let maximizing = state.turn()?.team == Team::Radiant;
    let children: Vec<(HeroId, f64)> = state
        .legal_actions()
        .into_iter()
        .map(|hero| {
            let mut child = state.clone();
            child.apply_in_place(hero).expect("legal action");
            (hero, value_of(&mut child, model))
        })
        .collect();

    let value = if maximizing {
        children
            .iter()
            .map(|c| c.1)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        children.iter().map(|c| c.1).fold(f64::INFINITY, f64::min)
    };
    let optimal_actions = children
        .iter()
        .filter(|(_, v)| (v - value).abs() <= TIE_EPS)
        .map(|(h, _)| *h)
        .collect();
    Ok(MinimaxSolution {
        value,
        optimal_actions,
    })
}

fn value_of(state: &mut DraftState, model: &(impl WinPredictor + ?Sized)) -> f64 {
    if state.is_terminal() {
        return model.win_probability(&state.picks(Team::Radiant), &state.picks(Team::Dire));
    }
    let maximizing = state.turn().expect("non-terminal").team == Team::Radiant;
    let mut best = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for hero in state.legal_actions() {
        let mut child = state.clone();
        child.apply_in_place(hero).expect("legal action");
        let v = value_of(&mut child, model);
        best = if maximizing { best.max(v) } else { best.min(v) };
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draft::DraftSchedule;
    use crate::reward::RewardModel;
    use std::sync::Arc;

    #[test]
    fn terminal_state_is_leaf_value() {
        let sched = Arc::new(DraftSchedule::all_pick(10).unwrap());
        let s =
            DraftState::from_actions(sched, &(0..10).map(HeroId::new).collect::<Vec<_>>()).unwrap();
        let model = RewardModel::logistic((0..10).map(|i| i as f64 * 0.1).collect(), 0.0);
        let sol = minimax_solve(&s, &model).unwrap();
        assert_eq!(sol.value, model.evaluate(&s).unwrap());
        assert!(sol.optimal_actions.is_empty());
    }

    #[test]
    fn last_radiant_pick_maximizes() {
        // Schedule ends with a Radiant pick when the last two turns are D, R.
        use crate::draft::Turn;
        use Team::*;
        let turns = [
            Radiant, Dire, Dire, Radiant, Radiant, Dire, Dire, Radiant, Dire, Radiant,
        ]
        .into_iter()
        .map(Turn::pick)
        .collect();
        let sched = Arc::new(DraftSchedule::new(turns, 14).unwrap());
        let s =
            DraftState::from_actions(sched, &(0..9).map(HeroId::new).collect::<Vec<_>>()).unwrap();
        let mut weights = vec![0.0; 14];
        weights[12] = 2.0;
        weights[11] = 1.0;
        let model = RewardModel::logistic(weights, 0.0);
        let sol = minimax_solve(&s, &model).unwrap();
        assert_eq!(sol.optimal_actions, vec![HeroId::new(12)]);
    }

    #[test]
    fn size_guard() {
        let s = DraftState::new(Arc::new(DraftSchedule::all_pick(111).unwrap()));
        let model = RewardModel::logistic(vec![0.0; 111], 0.0);
        assert!(matches!(
            minimax_solve(&s, &model),
            Err(Error::SearchTooLarge { .. })
        ));
    }
}
