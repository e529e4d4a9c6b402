//! Provenance games: explanations with won/lost labels, negated tuple nodes
//! and EDB fact nodes, and the translations to and from explanations.

use std::fmt;

use crate::datalog::{Program, Status};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeKind, NodeStatus, ProvGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GameStatus {
    W,
    L,
}

impl GameStatus {
    fn won_if(b: bool) -> GameStatus {
        if b {
            GameStatus::W
        } else {
            GameStatus::L
        }
    }

    pub fn invert(self) -> GameStatus {
        GameStatus::won_if(self == GameStatus::L)
    }
}

impl fmt::Display for GameStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameStatus::W => "W",
            GameStatus::L => "L",
        })
    }
}

impl NodeStatus for GameStatus {
    fn fill_color(self) -> &'static str {
        match self {
            GameStatus::W => "green",
            GameStatus::L => "darkred",
        }
    }

    fn font_color(self) -> &'static str {
        match self {
            GameStatus::W => "black",
            GameStatus::L => "white",
        }
    }
}

pub type GameGraph = Graph<GameStatus>;

fn truth(s: Status) -> Result<bool> {
    match s {
        Status::T => Ok(true),
        Status::F => Ok(false),
        Status::U => Err(Error::UndeterminedStatusPresent),
    }
}

/// Translates an explanation into a game explanation. `program` tells EDB
/// tuples (which get fact nodes when present) from IDB tuples.
pub fn to_game(expl: &ProvGraph, program: &Program) -> Result<GameGraph> {
    let mut game = GameGraph::new();
    game.copy_metadata_from(expl);
    // Game node that edges into each explanation node attach to, and from.
    let mut incoming = Vec::with_capacity(expl.node_count());
    let mut positive = Vec::with_capacity(expl.node_count());
    for (label, status) in expl.nodes() {
        let t = truth(status)?;
        match label.kind {
            NodeKind::Tuple => {
                let neg = game.add_node(label.with_kind(NodeKind::NegTuple), GameStatus::won_if(!t));
                let pos = game.add_node(label.clone(), GameStatus::won_if(t));
                game.add_edge_idx(neg, pos);
                if t && !program.is_idb(&label.name) {
                    let fact = game.add_node(label.with_kind(NodeKind::EdbFact), GameStatus::L);
                    game.add_edge_idx(pos, fact);
                }
                incoming.push((neg, pos));
                positive.push(pos);
            }
            NodeKind::Rule => {
                let n = game.add_node(label.clone(), GameStatus::won_if(!t));
                incoming.push((n, n));
                positive.push(n);
            }
            NodeKind::Goal => {
                let n = game.add_node(label.clone(), GameStatus::won_if(t));
                incoming.push((n, n));
                positive.push(n);
            }
            NodeKind::NegTuple | NodeKind::EdbFact => {
                return Err(Error::Invalid(format!("{label} cannot occur in an explanation")));
            }
        }
    }
    for (a, b) in expl.edge_indices() {
        let target = if expl.label(a).kind == NodeKind::Goal && expl.label(b).kind == NodeKind::Tuple {
            let same = expl.status_at(a) == expl.status_at(b);
            if same {
                incoming[b].0
            } else {
                incoming[b].1
            }
        } else {
            incoming[b].1
        };
        game.add_edge_idx(positive[a], target);
    }
    Ok(game)
}

fn malformed(msg: String) -> Error {
    Error::MalformedGame(msg)
}

/// Collapses `¬R(t) -> R(t) [-> r_R(t)]` fragments back into tuple nodes.
pub fn from_game(game: &GameGraph) -> Result<ProvGraph> {
    let succ = game.successors();
    let preds = game.predecessors();
    let mut expl = ProvGraph::new();
    expl.copy_metadata_from(game);
    let mut map = vec![usize::MAX; game.node_count()];
    for (i, (label, status)) in game.nodes().enumerate() {
        match label.kind {
            NodeKind::Tuple => {
                let neg = label.with_kind(NodeKind::NegTuple);
                let Some(j) = game.index_of(&neg) else {
                    return Err(malformed(format!("{label} has no negated partner")));
                };
                if game.status_at(j) != status.invert() {
                    return Err(malformed(format!("{label} and {neg} have inconsistent labels")));
                }
                if !succ[j].contains(&i) {
                    return Err(malformed(format!("missing edge {neg} -> {label}")));
                }
                let st = if status == GameStatus::W { Status::T } else { Status::F };
                map[i] = expl.add_node(label.clone(), st);
            }
            NodeKind::Rule => {
                let st = if status == GameStatus::L { Status::T } else { Status::F };
                map[i] = expl.add_node(label.clone(), st);
            }
            NodeKind::Goal => {
                let st = if status == GameStatus::W { Status::T } else { Status::F };
                map[i] = expl.add_node(label.clone(), st);
            }
            NodeKind::NegTuple => {
                if game.index_of(&label.with_kind(NodeKind::Tuple)).is_none() {
                    return Err(malformed(format!("{label} has no positive partner")));
                }
            }
            NodeKind::EdbFact => {
                let tuple = label.with_kind(NodeKind::Tuple);
                let ok = game.index_of(&tuple).is_some_and(|t| preds[i] == [t] && game.status_at(t) == GameStatus::W);
                if !ok || !succ[i].is_empty() || status != GameStatus::L {
                    return Err(malformed(format!("{label} is not the fact of a won tuple")));
                }
            }
        }
    }
    for (i, label) in (0..game.node_count()).map(|i| (i, game.label(i))) {
        if label.kind == NodeKind::NegTuple {
            map[i] = map[game.index_of(&label.with_kind(NodeKind::Tuple)).expect("checked above")];
        }
    }
    for (a, b) in game.edge_indices() {
        let (la, lb) = (game.label(a), game.label(b));
        match (la.kind, lb.kind) {
            (NodeKind::NegTuple, NodeKind::Tuple) if la.name == lb.name && la.args == lb.args => continue,
            (NodeKind::Tuple, NodeKind::EdbFact) => continue,
            (NodeKind::NegTuple, _) | (_, NodeKind::EdbFact) => {
                return Err(malformed(format!("unexpected edge {la} -> {lb}")));
            }
            _ => expl.add_edge_idx(map[a], map[b]),
        }
    }
    Ok(expl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::graph::NodeLabel;

    fn single_fact(status: Status) -> (ProvGraph, Program) {
        let program = parse_program("Q(X) :- R(X).").unwrap();
        let mut g = ProvGraph::new();
        g.add_node(NodeLabel::tuple("R", &["a"]), status);
        (g, program)
    }

    #[test]
    fn existing_fact_becomes_three_node_chain() {
        let (g, p) = single_fact(Status::T);
        let game = to_game(&g, &p).unwrap();
        assert_eq!(
            game.edge_lines(),
            ["NOT_REL:R(a):L -> REL:R(a):W", "REL:R(a):W -> FACT:R(a):L"]
        );
        assert_eq!(from_game(&game).unwrap(), g);
    }

    #[test]
    fn missing_fact_becomes_two_node_chain() {
        let (g, p) = single_fact(Status::F);
        let game = to_game(&g, &p).unwrap();
        assert_eq!(game.edge_lines(), ["NOT_REL:R(a):W -> REL:R(a):L"]);
        assert_eq!(from_game(&game).unwrap(), g);
    }

    #[test]
    fn undetermined_is_rejected() {
        let (g, p) = single_fact(Status::U);
        assert_eq!(to_game(&g, &p), Err(Error::UndeterminedStatusPresent));
    }

    #[test]
    fn malformed_games() {
        let mut game = GameGraph::new();
        game.add_node(NodeLabel::tuple("R", &["a"]), GameStatus::W);
        assert!(matches!(from_game(&game), Err(Error::MalformedGame(_))));
        let neg = game.add_node(NodeLabel::tuple("R", &["a"]).with_kind(NodeKind::NegTuple), GameStatus::W);
        game.add_edge_idx(neg, 0);
        assert!(matches!(from_game(&game), Err(Error::MalformedGame(_))));
    }
}
