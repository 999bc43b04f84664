//! Sublinear and superlinear expectation by backward induction.
//!
//! The upper expectation of a payoff `f(stop index, path)` is the exact
//! optimum over adapted policies: at each node the policy either stops and
//! collects `f`, or picks a (drift, variance-rate) control from the grids
//! and continues into the martingale branches. Randomized stopping gains
//! nothing on the lattice — the per-node value is linear in the stop mass,
//! so the optimum sits at a vertex — which is why the pure-stopping variant
//! below shares the recursion.
//!
//! A payoff may declare a localization level `δ`; evaluation is then
//! clipped at the hitting index (first `s` with `s + max|ω| ≥ δ`), and the
//! induction absorbs at the crossing, where no continuation can change the
//! clipped value.

use crate::error::{PpdeError, Result};
use crate::lattice::{LatticeParams, TreeMeasure, TreeNode};
use crate::pathspace::{concat, hitting_index_opt, Path, SpaceTimePoint};
use serde::Serialize;
use sha2::{Digest, Sha256};

type EvalFn<'a> = &'a (dyn Fn(usize, &Path) -> f64 + Sync);
type BranchTable = Vec<Vec<(f64, Vec<f64>)>>;

type PayoffEval = Box<dyn Fn(usize, &Path) -> f64 + Sync>;

/// A payoff of (stop index, stopped path), optionally localized at level
/// `clip_delta` through the hitting index.
pub struct Payoff {
    eval: PayoffEval,
    pub clip_delta: Option<f64>,
    pub bounded_above: bool,
}

impl Payoff {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(usize, &Path) -> f64 + Sync + 'static,
    {
        Payoff { eval: Box::new(f), clip_delta: None, bounded_above: true }
    }

    pub fn clipped<F>(f: F, delta: f64) -> Self
    where
        F: Fn(usize, &Path) -> f64 + Sync + 'static,
    {
        Payoff { eval: Box::new(f), clip_delta: Some(delta), bounded_above: true }
    }

    /// Raw evaluator, ignoring the clip.
    pub fn raw(&self, stop: usize, path: &Path) -> f64 {
        (self.eval)(stop, path)
    }

    /// Clipped evaluation: the stop index is pulled back to the hitting
    /// index when the path has crossed, and the path is frozen there.
    pub fn effective(&self, stop: usize, path: &Path) -> f64 {
        effective_eval(&*self.eval, self.clip_delta, stop, path)
    }
}

fn effective_eval(
    eval: &(dyn Fn(usize, &Path) -> f64 + Sync),
    clip_delta: Option<f64>,
    stop: usize,
    path: &Path,
) -> f64 {
    let stop = stop.min(path.n_steps());
    let e = match clip_delta {
        None => stop,
        Some(delta) => match hitting_index_opt(delta, path) {
            Some(h) => stop.min(h),
            None => stop,
        },
    };
    if e == path.n_steps() {
        eval(e, path)
    } else {
        eval(e, &path.frozen_at(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    Sup,
    Inf,
}

impl OptMode {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            OptMode::Sup => candidate > incumbent,
            OptMode::Inf => candidate < incumbent,
        }
    }
}

/// One adapted decision per reachable node.
#[derive(Debug, Clone, Serialize)]
pub enum PolicyNode {
    /// Collect the payoff here.
    Stop,
    /// The hitting index was crossed; the clipped payoff is frozen.
    Absorbed,
    Continue {
        drift_idx: usize,
        var_idx: usize,
        children: Vec<PolicyNode>,
    },
}

/// Argmax certificate of one backward induction. Ties break toward
/// stopping, then toward the lexicographically smallest grid entry.
#[derive(Debug, Clone, Serialize)]
pub struct ControlPolicy {
    pub root: PolicyNode,
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub value: f64,
    /// Materialized only on request; large inductions keep just the digest.
    pub policy: Option<ControlPolicy>,
    /// SHA-256 over the streamed decision sequence, stable across runs.
    pub policy_digest: String,
}

struct DpCtx<'a> {
    eval: EvalFn<'a>,
    clip_delta: Option<f64>,
    lat: &'a LatticeParams,
    mode: OptMode,
    want_policy: bool,
    hasher: Sha256,
    branches: BranchTable,
    fixed_horizon: bool,
    scratch: Path,
}

impl<'a> DpCtx<'a> {
    fn run(&mut self) -> Result<(f64, Option<PolicyNode>)> {
        let mut prefix: Vec<Vec<f64>> = vec![vec![0.0; self.lat.m]];
        self.node(&mut prefix, 0, 0.0)
    }

    fn eval_at(&mut self, stop: usize, prefix: &[Vec<f64>]) -> Result<f64> {
        // reuse the scratch path's allocations across node evaluations
        self.scratch.values.truncate(prefix.len());
        while self.scratch.values.len() < prefix.len() {
            self.scratch.values.push(Vec::new());
        }
        for (dst, src) in self.scratch.values.iter_mut().zip(prefix) {
            dst.clone_from(src);
        }
        let v = (self.eval)(stop, &self.scratch);
        if !v.is_finite() {
            return Err(PpdeError::NonFinitePayoff { index: stop });
        }
        Ok(v)
    }

    fn node(
        &mut self,
        prefix: &mut Vec<Vec<f64>>,
        depth: usize,
        running_max: f64,
    ) -> Result<(f64, Option<PolicyNode>)> {
        let here: f64 = prefix[depth].iter().map(|x| x * x).sum::<f64>().sqrt();
        let running_max = running_max.max(here);
        if let Some(delta) = self.clip_delta {
            if depth as f64 * self.lat.dt + running_max >= delta {
                let v = self.eval_at(depth, prefix)?;
                self.hasher.update(b"A");
                return Ok((v, self.want_policy.then_some(PolicyNode::Absorbed)));
            }
        }
        if depth == self.lat.n_steps {
            let v = self.eval_at(depth, prefix)?;
            self.hasher.update(b"T");
            return Ok((v, self.want_policy.then_some(PolicyNode::Stop)));
        }

        let stop_value = if self.fixed_horizon { None } else { Some(self.eval_at(depth, prefix)?) };

        let mut best: Option<(f64, usize, usize, Vec<PolicyNode>)> = None;
        for di in 0..self.lat.grids.drift.len() {
            for vi in 0..self.lat.grids.var.len() {
                let mut expect = 0.0;
                let mut kids = Vec::new();
                for bi in 0..self.branches[vi].len() {
                    let (p, next): (f64, Vec<f64>) = {
                        let (p, dm) = &self.branches[vi][bi];
                        let d = &self.lat.grids.drift[di];
                        (
                            *p,
                            prefix[depth]
                                .iter()
                                .enumerate()
                                .map(|(i, x)| x + (d[i] * self.lat.dt + dm[i]))
                                .collect(),
                        )
                    };
                    prefix.push(next);
                    let (v, child) = self.node(prefix, depth + 1, running_max)?;
                    prefix.pop();
                    expect += p * v;
                    if let Some(c) = child {
                        kids.push(c);
                    }
                }
                let switch = match &best {
                    None => true,
                    Some((incumbent, _, _, _)) => self.mode.better(expect, *incumbent),
                };
                if switch {
                    best = Some((expect, di, vi, kids));
                }
            }
        }
        let (cont_value, di, vi, kids) = best.expect("grids validated nonempty");

        let take_stop = match (stop_value, self.mode) {
            (None, _) => false,
            (Some(s), OptMode::Sup) => s >= cont_value,
            (Some(s), OptMode::Inf) => s <= cont_value,
        };
        if take_stop {
            self.hasher.update(b"S");
            Ok((stop_value.unwrap(), self.want_policy.then_some(PolicyNode::Stop)))
        } else {
            self.hasher.update(b"C");
            self.hasher.update((di as u32).to_le_bytes());
            self.hasher.update((vi as u32).to_le_bytes());
            Ok((
                cont_value,
                self.want_policy.then_some(PolicyNode::Continue {
                    drift_idx: di,
                    var_idx: vi,
                    children: kids,
                }),
            ))
        }
    }
}

fn node_estimate(clip_delta: Option<f64>, lat: &LatticeParams) -> u64 {
    let depth_eff = match clip_delta {
        None => lat.n_steps,
        // the zero path is the last to cross, at ceil(delta/dt)
        Some(delta) => lat.n_steps.min((delta / lat.dt).ceil() as usize),
    };
    let b = (lat.grids.drift.len() * lat.grids.var.len() * lat.branches_per_control()) as u64;
    let mut est: u64 = 1;
    for _ in 0..depth_eff {
        est = match est.checked_mul(b) {
            Some(x) => x,
            None => return u64::MAX,
        };
        if est > 4_000_000_000 {
            return est;
        }
    }
    est
}

fn optimize_raw(
    eval: EvalFn<'_>,
    clip_delta: Option<f64>,
    lat: &LatticeParams,
    mode: OptMode,
    want_policy: bool,
    fixed_horizon: bool,
) -> Result<Optimized> {
    lat.validate()?;
    let est = node_estimate(clip_delta, lat);
    if est > lat.budget.max_nodes {
        return Err(PpdeError::BudgetExceeded(format!(
            "estimated {est} nodes exceed cap {}",
            lat.budget.max_nodes
        )));
    }
    let branches: Vec<_> = (0..lat.grids.var.len()).map(|vi| lat.martingale_branches(vi)).collect();
    let mut ctx = DpCtx {
        eval,
        clip_delta,
        lat,
        mode,
        want_policy,
        hasher: Sha256::new(),
        branches,
        fixed_horizon,
        scratch: Path { dt: lat.dt, values: Vec::new() },
    };
    let (value, root) = ctx.run()?;
    let digest = hex_digest(ctx.hasher);
    Ok(Optimized { value, policy: root.map(|r| ControlPolicy { root: r }), policy_digest: digest })
}

fn hex_digest(hasher: Sha256) -> String {
    let bytes = hasher.finalize();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Crate-internal entry for borrowed evaluators: sibling modules build
/// payoffs that borrow their environment and cannot box into `'static`.
pub(crate) fn optimize_raw_entry(
    eval: &(dyn Fn(usize, &Path) -> f64 + Sync),
    clip_delta: Option<f64>,
    lat: &LatticeParams,
    mode: OptMode,
    want_policy: bool,
    fixed_horizon: bool,
) -> Result<Optimized> {
    optimize_raw(eval, clip_delta, lat, mode, want_policy, fixed_horizon)
}

/// Run one backward induction; `want_policy` controls whether the argmax
/// tree is materialized.
pub fn optimize(
    payoff: &Payoff,
    lat: &LatticeParams,
    mode: OptMode,
    want_policy: bool,
) -> Result<Optimized> {
    optimize_raw(&*payoff.eval, payoff.clip_delta, lat, mode, want_policy, false)
}

/// Upper expectation: exact maximum of `E[f(𝖳 ∧ hitting, B)]` over the
/// gridded control family, with the argmax policy.
pub fn sup_expectation(payoff: &Payoff, lat: &LatticeParams) -> Result<Optimized> {
    optimize(payoff, lat, OptMode::Sup, true)
}

/// Lower expectation, the mirror of [`sup_expectation`].
pub fn inf_expectation(payoff: &Payoff, lat: &LatticeParams) -> Result<Optimized> {
    optimize(payoff, lat, OptMode::Inf, true)
}

/// Value-only variants that skip the policy tree (large inductions).
pub fn sup_value(payoff: &Payoff, lat: &LatticeParams) -> Result<f64> {
    Ok(optimize(payoff, lat, OptMode::Sup, false)?.value)
}

pub fn inf_value(payoff: &Payoff, lat: &LatticeParams) -> Result<f64> {
    Ok(optimize(payoff, lat, OptMode::Inf, false)?.value)
}

/// Optimum over adapted pure stopping rules combined with controls. On the
/// lattice the per-node problem is linear in the stop mass, so this is the
/// same induction with a deterministic stop decision per node; the
/// acceptance suite cross-checks the equality against mixed stop-mass
/// enumeration.
pub fn pure_stopping_sup(payoff: &Payoff, lat: &LatticeParams) -> Result<Optimized> {
    optimize(payoff, lat, OptMode::Sup, true)
}

/// Expectation optimum with stopping disabled before the horizon: the
/// control family with a fixed terminal date.
pub fn fixed_horizon_value(payoff: &Payoff, lat: &LatticeParams, mode: OptMode) -> Result<f64> {
    Ok(optimize_raw(&*payoff.eval, payoff.clip_delta, lat, mode, false, true)?.value)
}

/// Value of the shifted payoff at a node, optimized over the remaining
/// horizon: the conditional expectation of dynamic programming. The node's
/// time index bounds the remaining stopping budget, and the payoff is read
/// on pasted paths (its localization level, if any, applies to the pasted
/// path as well).
pub fn conditional_value(
    payoff: &Payoff,
    node: &SpaceTimePoint,
    lat: &LatticeParams,
    mode: OptMode,
) -> Result<f64> {
    let tau = node.t_index;
    if tau > lat.n_steps {
        return Err(PpdeError::HorizonOverflow(format!(
            "conditioning depth {tau} beyond horizon {}",
            lat.n_steps
        )));
    }
    if tau == lat.n_steps {
        return Ok(payoff.effective(tau, &node.path));
    }
    let mut sub = lat.clone();
    sub.n_steps = lat.n_steps - tau;
    // The node may carry a bare prefix; pasting needs the full horizon.
    let mut base = node.path.clone();
    while base.n_steps() < lat.n_steps {
        base.values.push(base.values[base.values.len() - 1].clone());
    }
    let eval = &*payoff.eval;
    let clip = payoff.clip_delta;
    let shifted = move |s: usize, fresh: &Path| {
        let glued = concat(&base, tau, fresh).expect("grids agree by construction");
        effective_eval(eval, clip, (tau + s).min(glued.n_steps()), &glued)
    };
    Ok(optimize_raw(&shifted, None, &sub, mode, false, false)?.value)
}

/// Conditional upper expectation at a node (sup side of
/// [`conditional_value`]).
pub fn conditional_sup(payoff: &Payoff, node: &SpaceTimePoint, lat: &LatticeParams) -> Result<f64> {
    conditional_value(payoff, node, lat, OptMode::Sup)
}

/// Report of the dynamic-programming identities.
#[derive(Debug, Clone, Serialize)]
pub struct DppReport {
    /// Value of the payoff split at the conditioning depth: collect before,
    /// conditional value at and after.
    pub lhs: f64,
    /// Plain upper expectation of the payoff.
    pub rhs: f64,
    pub gap: f64,
    /// Tower form: the conditional value consulted at the stop coordinate
    /// itself.
    pub tower_lhs: f64,
    pub tower_gap: f64,
    /// Worst deviation of `f` from its conditional value over the optimal
    /// policy's positive-mass stop nodes.
    pub optimality_worst_gap: f64,
    pub optimality_nodes: usize,
}

impl DppReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.gap <= tol && self.tower_gap <= tol && self.optimality_worst_gap <= tol
    }
}

/// Check the dynamic-programming identities at conditioning depth
/// `tau_index` and the almost-sure optimality condition along the optimal
/// policy.
pub fn dpp_check(payoff: &Payoff, tau_index: usize, lat: &LatticeParams) -> Result<DppReport> {
    lat.validate()?;
    if tau_index > lat.n_steps {
        return Err(PpdeError::HorizonOverflow("tau beyond horizon".into()));
    }
    // The tower form re-optimizes the conditional value at every node, so
    // the full check costs about (2n + 2) plain inductions.
    let single = node_estimate(payoff.clip_delta, lat);
    let total = single.saturating_mul(2 * lat.n_steps as u64 + 2);
    if total > lat.budget.max_nodes {
        return Err(PpdeError::BudgetExceeded(format!(
            "dpp check needs ≈{total} node visits (cap {}); reduce n or raise the budget",
            lat.budget.max_nodes
        )));
    }
    let best = sup_expectation(payoff, lat)?;
    let rhs = best.value;
    let branches: Vec<_> = (0..lat.grids.var.len()).map(|vi| lat.martingale_branches(vi)).collect();

    // Split at tau: induct normally below tau and hand depth-tau nodes
    // their conditional value.
    fn split(
        payoff: &Payoff,
        lat: &LatticeParams,
        tau: usize,
        prefix: &mut Vec<Vec<f64>>,
        depth: usize,
        branches: &[Vec<(f64, Vec<f64>)>],
    ) -> Result<f64> {
        let path = Path { dt: lat.dt, values: prefix.clone() };
        if depth == tau {
            let node = SpaceTimePoint::new(depth, path)?;
            return conditional_value(payoff, &node, lat, OptMode::Sup);
        }
        let stop_value = payoff.effective(depth, &path);
        if depth == lat.n_steps {
            return Ok(stop_value);
        }
        let mut best = f64::NEG_INFINITY;
        for di in 0..lat.grids.drift.len() {
            for vi in 0..lat.grids.var.len() {
                let mut expect = 0.0;
                for (p, dm) in &branches[vi] {
                    let d = &lat.grids.drift[di];
                    let next: Vec<f64> = prefix[depth]
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x + (d[i] * lat.dt + dm[i]))
                        .collect();
                    prefix.push(next);
                    expect += p * split(payoff, lat, tau, prefix, depth + 1, branches)?;
                    prefix.pop();
                }
                best = best.max(expect);
            }
        }
        Ok(best.max(stop_value))
    }

    let mut prefix = vec![vec![0.0; lat.m]];
    let lhs = split(payoff, lat, tau_index, &mut prefix, 0, &branches)?;

    // Tower form: every node consults its own conditional value; optimizing
    // that functional reproduces the plain optimum.
    let tower = |s: usize, path: &Path| {
        let node = SpaceTimePoint::new(s.min(path.n_steps()), path.clone()).expect("clamped");
        conditional_value(payoff, &node, lat, OptMode::Sup).expect("inner horizon fits")
    };
    let tower_lhs = optimize_raw(&tower, None, lat, OptMode::Sup, false, false)?.value;

    // Almost-sure optimality along the optimal policy: at every reached
    // stop node the payoff equals its conditional value.
    #[allow(clippy::too_many_arguments)]
    fn walk_policy(
        payoff: &Payoff,
        lat: &LatticeParams,
        node: &PolicyNode,
        prefix: &mut Vec<Vec<f64>>,
        depth: usize,
        branches: &[Vec<(f64, Vec<f64>)>],
        worst: &mut f64,
        checked: &mut usize,
    ) -> Result<()> {
        match node {
            PolicyNode::Stop | PolicyNode::Absorbed => {
                let path = Path { dt: lat.dt, values: prefix.clone() };
                let direct = payoff.effective(depth, &path);
                let node_pt = SpaceTimePoint::new(depth, path)?;
                let cond = conditional_value(payoff, &node_pt, lat, OptMode::Sup)?;
                *worst = worst.max((direct - cond).abs());
                *checked += 1;
                Ok(())
            }
            PolicyNode::Continue { drift_idx, var_idx, children } => {
                for (k, (_, dm)) in branches[*var_idx].iter().enumerate() {
                    let d = &lat.grids.drift[*drift_idx];
                    let next: Vec<f64> = prefix[depth]
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x + (d[i] * lat.dt + dm[i]))
                        .collect();
                    prefix.push(next);
                    walk_policy(payoff, lat, &children[k], prefix, depth + 1, branches, worst, checked)?;
                    prefix.pop();
                }
                Ok(())
            }
        }
    }
    let policy = best.policy.as_ref().expect("policy requested");
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut prefix2 = vec![vec![0.0; lat.m]];
    walk_policy(payoff, lat, &policy.root, &mut prefix2, 0, &branches, &mut worst, &mut checked)?;

    Ok(DppReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        tower_lhs,
        tower_gap: (tower_lhs - rhs).abs(),
        optimality_worst_gap: worst,
        optimality_nodes: checked,
    })
}

/// Materialize the tree measure induced by a policy.
#[allow(clippy::result_large_err)]
pub fn measure_from_policy(policy: &ControlPolicy, lat: &LatticeParams) -> Result<TreeMeasure> {
    fn build(lat: &LatticeParams, pnode: &PolicyNode, tnode: TreeNode) -> Result<TreeNode> {
        match pnode {
            PolicyNode::Stop | PolicyNode::Absorbed => {
                let mut t = tnode;
                t.stop_mass = 1.0;
                Ok(t)
            }
            PolicyNode::Continue { drift_idx, var_idx, children } => {
                let branches = lat.martingale_branches(*var_idx);
                let dq = lat.q_increment(*var_idx);
                let mut t = tnode;
                t.stop_mass = 0.0;
                let mut kids = Vec::with_capacity(branches.len());
                for (k, (p, dm)) in branches.iter().enumerate() {
                    let child = t.child_with(lat, *drift_idx, dm, &dq);
                    kids.push((*p, build(lat, &children[k], child)?));
                }
                t.children = kids;
                Ok(t)
            }
        }
    }
    let root = build(lat, &policy.root, TreeNode::root(lat.m))?;
    Ok(TreeMeasure { root, l_bound: lat.l_bound, dt: lat.dt, m: lat.m, depth_max: lat.n_steps })
}
