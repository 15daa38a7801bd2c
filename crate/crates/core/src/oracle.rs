//! Exact ground truth for small horizons.
//!
//! The strategy tree alternates belief nodes and rule branches. Each rule
//! branch is kept only if some parameter value can reach it: its region is
//! the region of the parent node intersected with the rule's effective
//! interval at the parent's belief. Observation edges carry `Pr(o | b, a)`
//! and are dropped when that is zero. A node is a leaf at depth `H` or once
//! its belief puts all mass on goal states.
//!
//! A braid is a maximal set of leaves reachable by one parameter value; the
//! parameter values sharing a braid form one partition of the domain, and
//! the expected cost is constant on it.

use std::cmp::Ordering;

use thiserror::Error;

use crate::bsq::BsqPreference;
use crate::interval::{IntervalError, IntervalSet, ParamSpace};
use crate::pomdp::{condition, likelihood_of_prediction, predict, Belief, GPomdp};
use crate::scalar::Scalar;

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// Expected costs closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("strategy tree exceeds the node budget of {0}")]
    NodeBudget(usize),
    #[error("no partition reaches the goal with positive probability")]
    NoSolution,
    #[error("parameter vector lies outside the domain")]
    OutOfDomain,
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone)]
pub struct ObsEdge {
    pub observation: usize,
    pub probability: f64,
    pub node: usize,
}

#[derive(Debug, Clone)]
pub struct RuleBranch<T> {
    pub rule: usize,
    pub action: usize,
    /// Effective interval of the rule at the parent belief.
    pub effective: IntervalSet<T>,
    /// Parameter values that reach this branch.
    pub region: IntervalSet<T>,
    pub children: Vec<ObsEdge>,
}

#[derive(Debug, Clone)]
pub struct BeliefNode<T> {
    pub belief: Belief<T>,
    pub depth: usize,
    /// `(parent node, rule, observation)` on the edge into this node.
    pub via: Option<(usize, usize, usize)>,
    /// Product of observation-edge probabilities from the root.
    pub path_probability: f64,
    /// Sum of `b(not G)` over the beliefs strictly above this node.
    pub cost_to_here: f64,
    pub goal_mass: f64,
    pub branches: Vec<RuleBranch<T>>,
}

impl<T> BeliefNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.branches.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct StrategyTree<T> {
    pub nodes: Vec<BeliefNode<T>>,
    pub horizon: usize,
    pub space: ParamSpace<T>,
    branch_count: usize,
}

/// A root-to-leaf path.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub node: usize,
    /// `(rule, observation)` pairs from the root.
    pub path: Vec<(usize, usize)>,
    pub path_probability: f64,
    /// Expected number of non-goal steps attributed to this path.
    pub cost: f64,
    pub goal_probability: f64,
}

#[derive(Debug, Clone)]
pub struct ExactPartition<T> {
    pub interval: IntervalSet<T>,
    /// Leaf node ids, ascending.
    pub leaves: Vec<usize>,
    pub expected_cost: f64,
    pub goal_probability: f64,
}

fn goal_mass<T: Scalar>(m: &GPomdp<T>, b: &Belief<T>) -> f64 {
    b.mass(m.goal_mask()).as_f64()
}

fn all_goal<T: Scalar>(m: &GPomdp<T>, b: &Belief<T>) -> bool {
    b.support().iter().all(|&(s, _)| m.is_goal(s))
}

pub fn build_tree<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    horizon: usize,
    node_budget: usize,
) -> Result<StrategyTree<T>, OracleError> {
    let root = m.initial_belief().clone();
    let mut tree = StrategyTree {
        nodes: vec![BeliefNode {
            goal_mass: goal_mass(m, &root),
            belief: root,
            depth: 0,
            via: None,
            path_probability: 1.0,
            cost_to_here: 0.0,
            branches: Vec::new(),
        }],
        horizon,
        space: pref.space.clone(),
        branch_count: 0,
    };
    let full = pref.space.full();
    expand(m, pref, &mut tree, 0, &full, node_budget)?;
    Ok(tree)
}

fn expand<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    tree: &mut StrategyTree<T>,
    id: usize,
    region: &IntervalSet<T>,
    budget: usize,
) -> Result<(), OracleError> {
    let (depth, belief) = (tree.nodes[id].depth, tree.nodes[id].belief.clone());
    if depth >= tree.horizon || all_goal(m, &belief) {
        return Ok(());
    }
    let here = tree.nodes[id].cost_to_here + (1.0 - tree.nodes[id].goal_mass);
    let path_p = tree.nodes[id].path_probability;
    for (rule, eff) in pref.effective_intervals(&belief).into_iter().enumerate() {
        if eff.is_empty() {
            continue;
        }
        let reach = region.intersect(&eff)?;
        if reach.is_empty() {
            continue;
        }
        tree.branch_count += 1;
        let action = pref.rules[rule].action;
        let pred = predict(m, &belief, action);
        let lik = likelihood_of_prediction(m, &pred, action);
        let mut children = Vec::new();
        for (o, p) in lik.iter().enumerate() {
            let p = p.as_f64();
            if p <= 0.0 {
                continue;
            }
            if tree.nodes.len() + tree.branch_count >= budget {
                return Err(OracleError::NodeBudget(budget));
            }
            let nb = condition(m, &pred, action, o).expect("positive likelihood");
            let child = tree.nodes.len();
            tree.nodes.push(BeliefNode {
                goal_mass: goal_mass(m, &nb),
                belief: nb,
                depth: depth + 1,
                via: Some((id, rule, o)),
                path_probability: path_p * p,
                cost_to_here: here,
                branches: Vec::new(),
            });
            children.push(ObsEdge {
                observation: o,
                probability: p,
                node: child,
            });
            expand(m, pref, tree, child, &reach, budget)?;
        }
        tree.nodes[id].branches.push(RuleBranch {
            rule,
            action,
            effective: eff,
            region: reach,
            children,
        });
    }
    Ok(())
}

impl<T: Scalar> StrategyTree<T> {
    pub fn root(&self) -> &BeliefNode<T> {
        &self.nodes[0]
    }

    /// Belief nodes plus rule branches.
    pub fn size(&self) -> usize {
        self.nodes.len() + self.branch_count
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_leaf())
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn leaf(&self, id: usize) -> Leaf {
        let n = &self.nodes[id];
        let mut path = Vec::with_capacity(n.depth);
        let mut cur = id;
        while let Some((parent, rule, o)) = self.nodes[cur].via {
            path.push((rule, o));
            cur = parent;
        }
        path.reverse();
        Leaf {
            node: id,
            path,
            path_probability: n.path_probability,
            cost: n.cost_to_here,
            goal_probability: n.goal_mass,
        }
    }

    /// Expected cost and goal probability of the policy at `theta`.
    pub fn exact_expected_cost(&self, theta: &[T]) -> Result<(f64, f64), OracleError> {
        if !self.space.contains(theta) {
            return Err(OracleError::OutOfDomain);
        }
        Ok(self.walk(0, theta))
    }

    fn walk(&self, id: usize, theta: &[T]) -> (f64, f64) {
        let n = &self.nodes[id];
        if n.is_leaf() {
            return (0.0, n.goal_mass);
        }
        let br = n
            .branches
            .iter()
            .find(|b| b.region.boxes().iter().any(|bx| bx.contains(theta)))
            .expect("branch regions tile the node region");
        let (mut cost, mut goal) = (1.0 - n.goal_mass, 0.0);
        for e in &br.children {
            let (c, g) = self.walk(e.node, theta);
            cost += e.probability * c;
            goal += e.probability * g;
        }
        (cost, goal)
    }

    /// Every braid with its partition interval, in rule-major,
    /// observation-minor order.
    pub fn enumerate_braids(&self) -> Vec<ExactPartition<T>> {
        let mut out = self.pieces(0, &self.space.full());
        for p in &mut out {
            p.leaves.sort_unstable();
        }
        out
    }

    fn pieces(&self, id: usize, within: &IntervalSet<T>) -> Vec<ExactPartition<T>> {
        let n = &self.nodes[id];
        if n.is_leaf() {
            return vec![ExactPartition {
                interval: within.clone(),
                leaves: vec![id],
                expected_cost: 0.0,
                goal_probability: n.goal_mass,
            }];
        }
        let mut out = Vec::new();
        for br in &n.branches {
            let start = within.intersect(&br.effective).expect("same space");
            if start.is_empty() {
                continue;
            }
            let mut acc = vec![ExactPartition {
                interval: start,
                leaves: Vec::new(),
                expected_cost: 1.0 - n.goal_mass,
                goal_probability: 0.0,
            }];
            for e in &br.children {
                let mut next = Vec::new();
                for piece in acc {
                    for sub in self.pieces(e.node, &piece.interval) {
                        let mut leaves = piece.leaves.clone();
                        leaves.extend(sub.leaves);
                        next.push(ExactPartition {
                            interval: sub.interval,
                            leaves,
                            expected_cost: piece.expected_cost + e.probability * sub.expected_cost,
                            goal_probability: piece.goal_probability
                                + e.probability * sub.goal_probability,
                        });
                    }
                }
                acc = next;
            }
            out.extend(acc);
        }
        out
    }
}

/// Number of leaves of the tree that branches on every rule at every belief,
/// i.e. without removing unreachable rule branches.
pub fn count_unpruned_leaves<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    horizon: usize,
    node_budget: usize,
) -> Result<usize, OracleError> {
    fn go<T: Scalar>(
        m: &GPomdp<T>,
        pref: &BsqPreference<T>,
        b: &Belief<T>,
        left: usize,
        seen: &mut usize,
        budget: usize,
    ) -> Result<usize, OracleError> {
        *seen += 1;
        if *seen > budget {
            return Err(OracleError::NodeBudget(budget));
        }
        if left == 0 || all_goal(m, b) {
            return Ok(1);
        }
        let mut total = 0;
        for r in &pref.rules {
            let pred = predict(m, b, r.action);
            for (o, p) in likelihood_of_prediction(m, &pred, r.action)
                .iter()
                .enumerate()
            {
                if p.as_f64() > 0.0 {
                    let nb = condition(m, &pred, r.action, o).expect("positive likelihood");
                    total += go(m, pref, &nb, left - 1, seen, budget)?;
                }
            }
        }
        Ok(total)
    }
    let mut seen = 0;
    go(m, pref, m.initial_belief(), horizon, &mut seen, node_budget)
}

/// Fraction of unpruned leaves that the reachable tree removes.
pub fn pruned_fraction<T: Scalar>(
    m: &GPomdp<T>,
    pref: &BsqPreference<T>,
    horizon: usize,
    node_budget: usize,
) -> Result<f64, OracleError> {
    let full = count_unpruned_leaves(m, pref, horizon, node_budget)?;
    let kept = build_tree(m, pref, horizon, node_budget)?.leaf_count();
    Ok(1.0 - kept as f64 / full as f64)
}

/// Lowest-cost partition among those reaching the goal with positive
/// probability; ties within [`TIE_TOLERANCE`] go to the canonically
/// smallest interval.
pub fn oracle_optimum<T: Scalar>(
    parts: &[ExactPartition<T>],
) -> Result<&ExactPartition<T>, OracleError> {
    parts
        .iter()
        .filter(|p| p.goal_probability > 0.0)
        .min_by(|a, b| {
            if (a.expected_cost - b.expected_cost).abs() <= TIE_TOLERANCE {
                a.interval.canonical_cmp(&b.interval)
            } else {
                a.expected_cost
                    .partial_cmp(&b.expected_cost)
                    .unwrap_or(Ordering::Equal)
            }
        })
        .ok_or(OracleError::NoSolution)
}
