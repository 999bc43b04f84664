//! Scenario lattices: the discrete carrier of the bounded control family.
//!
//! A lattice measure is a non-recombining tree over path prefixes. Each
//! node carries the decomposition of the canonical path into a
//! finite-variation part and a martingale part together with the running
//! quadratic variation, a stop mass (the law of the randomized stopping
//! coordinate), and branch probabilities. Per step the drift rate and the
//! quadratic-variation rate are bounded by the control constant `L`.
//!
//! Martingale increments are symmetric two-point draws `±√(c·dt)` with
//! probability ½ each (per eigendirection when m > 1), which matches the
//! quadratic-variation increment exactly; a trinomial rule is available
//! behind a flag for convergence studies.

use crate::error::{PpdeError, Result};
use crate::pathspace::{Path, SymMat};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

/// Desk-scale guards. `max_nodes` caps the estimated node count of one
/// backward induction; the CLI lets `PPDE_BUDGET` override it.
#[derive(Debug, Clone, Serialize)]
pub struct Budget {
    pub max_dp_depth: usize,
    pub max_drift: usize,
    pub max_var: usize,
    pub max_enum_depth: usize,
    pub max_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_dp_depth: 12, max_drift: 5, max_var: 3, max_enum_depth: 4, max_nodes: 500_000_000 }
    }
}

/// Node-wise control choices: drift vectors in `[-L, L]^m` (sup norm) and
/// variance-rate matrices `0 ⪯ c`, `|c| ≤ L`.
#[derive(Debug, Clone, Serialize)]
pub struct ControlGrids {
    pub drift: Vec<Vec<f64>>,
    pub var: Vec<SymMat>,
}

impl ControlGrids {
    pub fn scalar(drifts: &[f64], vars: &[f64]) -> Self {
        let mut d: Vec<f64> = drifts.to_vec();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut v: Vec<f64> = vars.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ControlGrids {
            drift: d.into_iter().map(|x| vec![x]).collect(),
            var: v.into_iter().map(SymMat::scalar).collect(),
        }
    }

    pub fn validate(&self, l_bound: f64, m: usize) -> Result<()> {
        if self.drift.is_empty() || self.var.is_empty() {
            return Err(PpdeError::InvalidInput("control grids must be nonempty".into()));
        }
        for d in &self.drift {
            if d.len() != m {
                return Err(PpdeError::GridMismatch("drift entry dimension".into()));
            }
            if d.iter().any(|x| x.abs() > l_bound + 1e-12) {
                return Err(PpdeError::InvalidInput("drift entry outside [-L, L]".into()));
            }
        }
        for c in &self.var {
            if c.dim() != m {
                return Err(PpdeError::GridMismatch("variance entry dimension".into()));
            }
            if !c.is_psd(1e-12) || c.spectral_norm() > l_bound + 1e-12 {
                return Err(PpdeError::InvalidInput(
                    "variance entry must be PSD with norm <= L".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Branching {
    TwoPoint,
    /// m = 1 only: `{+h, 0, -h}` with `P(±h) = jump_prob` and
    /// `h = √(c·dt / (2·jump_prob))`.
    Trinomial { jump_prob: f64 },
}

/// Everything one backward induction needs to know about the lattice.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeParams {
    pub l_bound: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub m: usize,
    pub grids: ControlGrids,
    pub branching: Branching,
    pub budget: Budget,
}

impl LatticeParams {
    /// Scalar lattice with given drift/variance grids.
    pub fn scalar(l_bound: f64, n_steps: usize, dt: f64, drifts: &[f64], vars: &[f64]) -> Self {
        LatticeParams {
            l_bound,
            n_steps,
            dt,
            m: 1,
            grids: ControlGrids::scalar(drifts, vars),
            branching: Branching::TwoPoint,
            budget: Budget::default(),
        }
    }

    /// Scalar lattice with the default grids `{-L, 0, L} × {0, L}`.
    pub fn scalar_default(l_bound: f64, n_steps: usize, dt: f64) -> Self {
        Self::scalar(l_bound, n_steps, dt, &[-l_bound, 0.0, l_bound], &[0.0, l_bound])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || self.l_bound <= 0.0 || self.m == 0 {
            return Err(PpdeError::InvalidInput("lattice parameters must be positive".into()));
        }
        self.grids.validate(self.l_bound, self.m)?;
        if let Branching::Trinomial { jump_prob } = self.branching {
            if self.m != 1 {
                return Err(PpdeError::InvalidInput("trinomial branching is m = 1 only".into()));
            }
            if !(jump_prob > 0.0 && jump_prob <= 0.5) {
                return Err(PpdeError::InvalidInput("jump_prob must lie in (0, 1/2]".into()));
            }
        }
        let b = &self.budget;
        if self.n_steps > b.max_dp_depth {
            return Err(PpdeError::BudgetExceeded(format!(
                "n_steps {} exceeds max_dp_depth {}",
                self.n_steps, b.max_dp_depth
            )));
        }
        if self.grids.drift.len() > b.max_drift || self.grids.var.len() > b.max_var {
            return Err(PpdeError::BudgetExceeded(format!(
                "grid sizes {}x{} exceed {}x{}",
                self.grids.drift.len(),
                self.grids.var.len(),
                b.max_drift,
                b.max_var
            )));
        }
        Ok(())
    }

    pub fn t_horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Children per (drift, variance) control.
    pub fn branches_per_control(&self) -> usize {
        match self.branching {
            Branching::TwoPoint => 2 * self.m,
            Branching::Trinomial { .. } => 3,
        }
    }

    /// Martingale branch increments for one variance-rate entry:
    /// `(probability, ΔM)` pairs with zero mean and second moment equal to
    /// the stored quadratic-variation increment.
    pub fn martingale_branches(&self, var_idx: usize) -> Vec<(f64, Vec<f64>)> {
        let c = &self.grids.var[var_idx];
        match self.branching {
            Branching::TwoPoint => {
                if self.m == 1 {
                    let x = (c.get(0, 0) * self.dt).sqrt();
                    vec![(0.5, vec![x]), (0.5, vec![-x])]
                } else {
                    let mf = self.m as f64;
                    let mut out = Vec::with_capacity(2 * self.m);
                    for (lambda, v) in c.eigenpairs() {
                        let scale = (mf * lambda.max(0.0) * self.dt).sqrt();
                        let up: Vec<f64> = v.iter().map(|x| x * scale).collect();
                        let dn: Vec<f64> = up.iter().map(|x| -x).collect();
                        out.push((0.5 / mf, up));
                        out.push((0.5 / mf, dn));
                    }
                    out
                }
            }
            Branching::Trinomial { jump_prob } => {
                let h = (c.get(0, 0) * self.dt / (2.0 * jump_prob)).sqrt();
                vec![(jump_prob, vec![h]), (1.0 - 2.0 * jump_prob, vec![0.0]), (jump_prob, vec![-h])]
            }
        }
    }

    /// Quadratic-variation increment matching [`Self::martingale_branches`]
    /// exactly: computed from the realized increments so that
    /// `E[ΔM ΔMᵀ] = Δq` holds bitwise, not just up to rounding.
    pub fn q_increment(&self, var_idx: usize) -> SymMat {
        let branches = self.martingale_branches(var_idx);
        let mut q = SymMat::zero(self.m);
        for i in 0..self.m {
            for j in i..self.m {
                let mut acc = 0.0;
                for (p, dm) in &branches {
                    acc += p * dm[i] * dm[j];
                }
                q.set_sym(i, j, acc);
            }
        }
        q
    }
}

/// One node of a scenario tree. Prefixes include the node's own grid point,
/// so a node at depth `k` stores `k + 1` samples of each canonical process.
#[derive(Debug, Clone, Serialize)]
pub struct TreeNode {
    pub depth: usize,
    pub prefix_b: Vec<Vec<f64>>,
    pub prefix_a: Vec<Vec<f64>>,
    pub prefix_m: Vec<Vec<f64>>,
    pub prefix_q: Vec<SymMat>,
    pub stop_mass: f64,
    pub children: Vec<(f64, TreeNode)>,
}

impl TreeNode {
    pub(crate) fn root(m: usize) -> Self {
        TreeNode {
            depth: 0,
            prefix_b: vec![vec![0.0; m]],
            prefix_a: vec![vec![0.0; m]],
            prefix_m: vec![vec![0.0; m]],
            prefix_q: vec![SymMat::zero(m)],
            stop_mass: 0.0,
            children: Vec::new(),
        }
    }

    /// Extend this node's prefixes by one step of the given control.
    pub(crate) fn child_with(&self, lat: &LatticeParams, drift_idx: usize, dm: &[f64], dq: &SymMat) -> TreeNode {
        let d = &lat.grids.drift[drift_idx];
        let last_b = &self.prefix_b[self.depth];
        let last_a = &self.prefix_a[self.depth];
        let last_m = &self.prefix_m[self.depth];
        let last_q = &self.prefix_q[self.depth];
        let mut node = self.clone();
        node.depth += 1;
        node.stop_mass = 0.0;
        node.children = Vec::new();
        let da: Vec<f64> = d.iter().map(|x| x * lat.dt).collect();
        node.prefix_a.push(last_a.iter().zip(&da).map(|(a, x)| a + x).collect());
        node.prefix_m.push(last_m.iter().zip(dm).map(|(m0, x)| m0 + x).collect());
        node.prefix_b
            .push(last_b.iter().zip(da.iter().zip(dm)).map(|(b, (x, y))| b + (x + y)).collect());
        node.prefix_q.push(last_q.add(dq).expect("dimension fixed"));
        node
    }

    /// The node's path prefix as a [`Path`].
    pub fn b_path(&self, dt: f64) -> Path {
        Path { dt, values: self.prefix_b.clone() }
    }
}

/// A probability measure on (stop index, path prefix) realized as a tree.
#[derive(Debug, Clone, Serialize)]
pub struct TreeMeasure {
    pub root: TreeNode,
    pub l_bound: f64,
    pub dt: f64,
    pub m: usize,
    pub depth_max: usize,
}

impl TreeMeasure {
    /// Total probability over (stop node, leaf) pairs.
    pub fn total_mass(&self) -> f64 {
        fn walk(node: &TreeNode, mass: f64) -> f64 {
            if node.children.is_empty() {
                return mass;
            }
            let mut acc = mass * node.stop_mass;
            for (p, c) in &node.children {
                acc += walk(c, mass * (1.0 - node.stop_mass) * p);
            }
            acc
        }
        walk(&self.root, 1.0)
    }

    /// Check every node invariant by traversal: the additive decomposition
    /// of the path, the drift and variance rate bounds, zero-mean martingale
    /// increments, and the exact match between second moments and the
    /// quadratic-variation increments.
    pub fn validate(&self) -> Result<()> {
        let dt = self.dt;
        let l = self.l_bound;
        fn walk(node: &TreeNode, dt: f64, l: f64, depth_max: usize) -> Result<()> {
            if node.depth > depth_max {
                return Err(PpdeError::HorizonOverflow(format!(
                    "node depth {} beyond {}",
                    node.depth, depth_max
                )));
            }
            if !(0.0..=1.0).contains(&node.stop_mass) {
                return Err(PpdeError::InvalidInput("stop mass outside [0,1]".into()));
            }
            if node.children.is_empty() && node.stop_mass != 1.0 && node.depth != depth_max {
                return Err(PpdeError::InvalidInput("childless interior node must stop".into()));
            }
            for k in 0..=node.depth {
                for i in 0..node.prefix_b[k].len() {
                    let gap = node.prefix_b[k][i] - node.prefix_a[k][i] - node.prefix_m[k][i];
                    if gap.abs() > 1e-12 {
                        return Err(PpdeError::InvalidInput(format!(
                            "B != A + M at depth {k} (gap {gap:e})"
                        )));
                    }
                }
            }
            for k in 1..=node.depth {
                let da_max = node.prefix_a[k]
                    .iter()
                    .zip(&node.prefix_a[k - 1])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                if da_max / dt > l + 1e-9 {
                    return Err(PpdeError::InvalidInput("drift rate bound violated".into()));
                }
                let dq = node.prefix_q[k].sub(&node.prefix_q[k - 1])?;
                if !dq.is_psd(1e-12) || dq.spectral_norm() / dt > l + 1e-9 {
                    return Err(PpdeError::InvalidInput("variance rate bound violated".into()));
                }
            }
            if !node.children.is_empty() {
                let psum: f64 = node.children.iter().map(|(p, _)| p).sum();
                if (psum - 1.0).abs() > 1e-12 {
                    return Err(PpdeError::InvalidInput("branch probabilities must sum to 1".into()));
                }
                let m = node.prefix_b[0].len();
                let mut mean = vec![0.0; m];
                let mut second = SymMat::zero(m);
                let mut dq_mean = SymMat::zero(m);
                for (p, c) in &node.children {
                    let step = c.depth;
                    let dm: Vec<f64> = c.prefix_m[step]
                        .iter()
                        .zip(&node.prefix_m[node.depth])
                        .map(|(x, y)| x - y)
                        .collect();
                    let dq_c = c.prefix_q[step].sub(&node.prefix_q[node.depth])?;
                    for i in 0..m {
                        mean[i] += p * dm[i];
                        let dba = (c.prefix_b[step][i] - c.prefix_a[step][i])
                            - (node.prefix_b[node.depth][i] - node.prefix_a[node.depth][i]);
                        // B − A must carry the same martingale increment.
                        if (dba - dm[i]).abs() > 1e-12 {
                            return Err(PpdeError::InvalidInput("B - A drifted from M".into()));
                        }
                        for j in i..m {
                            second.set_sym(i, j, second.get(i, j) + p * dm[i] * dm[j]);
                            dq_mean.set_sym(i, j, dq_mean.get(i, j) + p * dq_c.get(i, j));
                        }
                    }
                }
                if mean.iter().any(|x| x.abs() > 1e-13) {
                    return Err(PpdeError::InvalidInput("martingale increment has nonzero mean".into()));
                }
                // The control may be randomized across branches (e.g. after
                // pasting); the martingale-vs-Q compatibility then reads on
                // conditional expectations.
                for i in 0..m {
                    for j in 0..m {
                        if (second.get(i, j) - dq_mean.get(i, j)).abs() > 1e-13 {
                            return Err(PpdeError::InvalidInput(
                                "second moment disagrees with q increment".into(),
                            ));
                        }
                    }
                }
                for (_, c) in &node.children {
                    walk(c, dt, l, depth_max)?;
                }
            }
            Ok(())
        }
        walk(&self.root, dt, l, self.depth_max)?;
        let mass = self.total_mass();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(PpdeError::InvalidInput(format!("total mass {mass} != 1")));
        }
        Ok(())
    }

    /// Expectation of `f(stop index, stopped path)` under this measure.
    pub fn expectation<F>(&self, f: &F) -> f64
    where
        F: Fn(usize, &Path) -> f64 + ?Sized,
    {
        fn walk<F>(node: &TreeNode, mass: f64, dt: f64, f: &F) -> f64
        where
            F: Fn(usize, &Path) -> f64 + ?Sized,
        {
            if mass == 0.0 {
                return 0.0;
            }
            let here = Path { dt, values: node.prefix_b.clone() };
            if node.children.is_empty() {
                return mass * f(node.depth, &here);
            }
            let mut acc = mass * node.stop_mass * f(node.depth, &here);
            for (p, c) in &node.children {
                acc += walk(c, mass * (1.0 - node.stop_mass) * p, dt, f);
            }
            acc
        }
        walk(&self.root, 1.0, self.dt, f)
    }
}

/// Visit every lattice measure whose node-wise controls come from the grids
/// and whose stop decisions come from `stop_masses`. The closure sees each
/// measure once; trees are materialized one at a time.
pub fn for_each_measure<F>(lat: &LatticeParams, stop_masses: &[f64], visit: &mut F) -> Result<()>
where
    F: FnMut(&TreeMeasure),
{
    lat.validate()?;
    if stop_masses.is_empty() || stop_masses.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(PpdeError::InvalidInput("stop masses must lie in [0,1]".into()));
    }
    if lat.n_steps > lat.budget.max_enum_depth {
        return Err(PpdeError::BudgetExceeded(format!(
            "enumeration depth {} exceeds {}",
            lat.n_steps, lat.budget.max_enum_depth
        )));
    }
    let count = count_measures(lat, stop_masses)?;
    if count > lat.budget.max_nodes {
        return Err(PpdeError::BudgetExceeded(format!("{count} measures to enumerate")));
    }

    let mut current = TreeNode::root(lat.m);
    build_policies(lat, stop_masses, &mut current, &mut |root| {
        let measure = TreeMeasure {
            root: root.clone(),
            l_bound: lat.l_bound,
            dt: lat.dt,
            m: lat.m,
            depth_max: lat.n_steps,
        };
        visit(&measure);
    });
    Ok(())
}

/// Number of distinct lattice measures the enumeration will produce.
pub fn count_measures(lat: &LatticeParams, stop_masses: &[f64]) -> Result<u64> {
    let controls = (lat.grids.drift.len() * lat.grids.var.len()) as u64;
    let continuing = stop_masses.iter().filter(|&&q| q < 1.0).count() as u64;
    let stopping = stop_masses.iter().filter(|&&q| q == 1.0).count() as u64;
    let kids = lat.branches_per_control() as u32;
    let mut c: u64 = 1; // depth n: forced stop
    for _ in 0..lat.n_steps {
        let pow = c.checked_pow(kids).ok_or_else(|| {
            PpdeError::BudgetExceeded("measure count overflows u64".into())
        })?;
        c = stopping
            .checked_add(
                continuing
                    .checked_mul(controls)
                    .and_then(|x| x.checked_mul(pow))
                    .ok_or_else(|| PpdeError::BudgetExceeded("measure count overflows u64".into()))?,
            )
            .ok_or_else(|| PpdeError::BudgetExceeded("measure count overflows u64".into()))?;
    }
    Ok(c)
}

fn build_policies(
    lat: &LatticeParams,
    stop_masses: &[f64],
    node: &mut TreeNode,
    emit: &mut dyn FnMut(&TreeNode),
) {
    // Enumerate choices at `node`, recursively completing children for each
    // control, then hand the finished subtree upward. Dynamic dispatch on
    // the continuations keeps the recursion monomorphization-free.
    fn expand(
        lat: &LatticeParams,
        stop_masses: &[f64],
        node: TreeNode,
        done: &mut dyn FnMut(TreeNode),
    ) {
        if node.depth == lat.n_steps {
            let mut leaf = node;
            leaf.stop_mass = 1.0;
            done(leaf);
            return;
        }
        for &q in stop_masses {
            if q == 1.0 {
                let mut stopped = node.clone();
                stopped.stop_mass = 1.0;
                stopped.children = Vec::new();
                done(stopped);
                continue;
            }
            for di in 0..lat.grids.drift.len() {
                for vi in 0..lat.grids.var.len() {
                    let branches = lat.martingale_branches(vi);
                    let dq = lat.q_increment(vi);
                    fill(lat, stop_masses, &node, q, di, &branches, &dq, 0, Vec::new(), done);
                }
            }
        }
    }

    // Complete the children of one (stop mass, control) choice slot by slot.
    #[allow(clippy::too_many_arguments)]
    fn fill(
        lat: &LatticeParams,
        stop_masses: &[f64],
        base: &TreeNode,
        q: f64,
        di: usize,
        branches: &[(f64, Vec<f64>)],
        dq: &SymMat,
        slot: usize,
        acc: Vec<(f64, TreeNode)>,
        done: &mut dyn FnMut(TreeNode),
    ) {
        if slot == branches.len() {
            let mut filled = base.clone();
            filled.stop_mass = q;
            filled.children = acc;
            done(filled);
            return;
        }
        let (p, dm) = &branches[slot];
        let child = base.child_with(lat, di, dm, dq);
        expand(lat, stop_masses, child, &mut |sub| {
            let mut next = acc.clone();
            next.push((*p, sub));
            fill(lat, stop_masses, base, q, di, branches, dq, slot + 1, next, done);
        });
    }

    expand(lat, stop_masses, node.clone(), &mut |t| emit(&t));
}

/// Materialize the full set of lattice measures (budget-guarded). Intended
/// for tiny horizons; larger sweeps should stream via [`for_each_measure`].
pub fn enumerate_measures(lat: &LatticeParams, stop_masses: &[f64]) -> Result<Vec<TreeMeasure>> {
    let mut out = Vec::new();
    for_each_measure(lat, stop_masses, &mut |m| out.push(m.clone()))?;
    Ok(out)
}

/// Expectation of `f` under every enumerable measure, one entry per policy
/// assignment. This walks fixed policies bottom-up with explicit
/// cross-products over branch continuations — no optimization is
/// interleaved — so it serves as the brute-force oracle for the backward
/// induction.
pub fn enumerate_expectations(
    lat: &LatticeParams,
    stop_masses: &[f64],
    f: &(dyn Fn(usize, &Path) -> f64 + Sync),
) -> Result<Vec<f64>> {
    lat.validate()?;
    if stop_masses.is_empty() || stop_masses.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(PpdeError::InvalidInput("stop masses must lie in [0,1]".into()));
    }
    if lat.n_steps > lat.budget.max_enum_depth {
        return Err(PpdeError::BudgetExceeded(format!(
            "enumeration depth {} exceeds {}",
            lat.n_steps, lat.budget.max_enum_depth
        )));
    }
    let count = count_measures(lat, stop_masses)?;
    if count > lat.budget.max_nodes {
        return Err(PpdeError::BudgetExceeded(format!("{count} policies to enumerate")));
    }

    fn cross(parts: &[Vec<f64>], weights: &[f64], idx: usize, acc: f64, out: &mut Vec<f64>) {
        if idx == parts.len() {
            out.push(acc);
            return;
        }
        for v in &parts[idx] {
            cross(parts, weights, idx + 1, acc + weights[idx] * v, out);
        }
    }

    fn rec(
        lat: &LatticeParams,
        masses: &[f64],
        f: &(dyn Fn(usize, &Path) -> f64 + Sync),
        prefix: &mut Vec<Vec<f64>>,
        depth: usize,
    ) -> Vec<f64> {
        let here = f(depth, &Path { dt: lat.dt, values: prefix.clone() });
        if depth == lat.n_steps {
            return vec![here];
        }
        let mut out = Vec::new();
        for &q in masses {
            if q == 1.0 {
                out.push(here);
                continue;
            }
            for di in 0..lat.grids.drift.len() {
                for vi in 0..lat.grids.var.len() {
                    let branches = lat.martingale_branches(vi);
                    let mut parts = Vec::with_capacity(branches.len());
                    let mut weights = Vec::with_capacity(branches.len());
                    for (p, dm) in &branches {
                        let d = &lat.grids.drift[di];
                        let next: Vec<f64> = prefix[depth]
                            .iter()
                            .enumerate()
                            .map(|(i, x)| x + (d[i] * lat.dt + dm[i]))
                            .collect();
                        prefix.push(next);
                        parts.push(rec(lat, masses, f, prefix, depth + 1));
                        prefix.pop();
                        weights.push(*p);
                    }
                    let mut combos = Vec::new();
                    cross(&parts, &weights, 0, 0.0, &mut combos);
                    out.extend(combos.into_iter().map(|c| q * here + (1.0 - q) * c));
                }
            }
        }
        out
    }

    let mut prefix = vec![vec![0.0; lat.m]];
    Ok(rec(lat, stop_masses, f, &mut prefix, 0))
}

/// Paste continuation measures onto `measure`. The kernel `nu` is consulted
/// at the first node where `tau` fires along each branch and at every node
/// where stop mass accrues beforehand, matching the concatenation of
/// measures at the minimum of the stop coordinate and `tau`. A kernel that
/// returns an immediate-stop tree off the `tau` set reproduces plain
/// "follow until `tau`, then graft".
pub fn concat_measure(
    measure: &TreeMeasure,
    tau: &dyn Fn(&TreeNode) -> bool,
    nu: &dyn Fn(&TreeNode) -> Result<TreeMeasure>,
) -> Result<TreeMeasure> {
    fn shift_onto(at: &TreeNode, graft: &TreeNode, depth_max: usize) -> Result<TreeNode> {
        if at.depth + graft.depth > depth_max {
            return Err(PpdeError::HorizonOverflow(format!(
                "graft reaches depth {} beyond {}",
                at.depth + graft.depth,
                depth_max
            )));
        }
        let m = at.prefix_b[0].len();
        let mut node = TreeNode {
            depth: at.depth + graft.depth,
            prefix_b: at.prefix_b.clone(),
            prefix_a: at.prefix_a.clone(),
            prefix_m: at.prefix_m.clone(),
            prefix_q: at.prefix_q.clone(),
            stop_mass: graft.stop_mass,
            children: Vec::new(),
        };
        let (b0, a0, m0) =
            (&at.prefix_b[at.depth], &at.prefix_a[at.depth], &at.prefix_m[at.depth]);
        let q0 = &at.prefix_q[at.depth];
        for k in 1..=graft.depth {
            node.prefix_b.push((0..m).map(|i| b0[i] + graft.prefix_b[k][i]).collect());
            node.prefix_a.push((0..m).map(|i| a0[i] + graft.prefix_a[k][i]).collect());
            node.prefix_m.push((0..m).map(|i| m0[i] + graft.prefix_m[k][i]).collect());
            node.prefix_q.push(q0.add(&graft.prefix_q[k])?);
        }
        for (p, c) in &graft.children {
            node.children.push((*p, shift_onto(at, c, depth_max)?));
        }
        Ok(node)
    }

    fn rebuild(
        node: &TreeNode,
        tau: &dyn Fn(&TreeNode) -> bool,
        nu: &dyn Fn(&TreeNode) -> Result<TreeMeasure>,
        dt: f64,
        m_dim: usize,
        depth_max: usize,
    ) -> Result<TreeNode> {
        if tau(node) {
            let cont = nu(node)?;
            if cont.dt != dt || cont.m != m_dim {
                return Err(PpdeError::GridMismatch("continuation grid differs".into()));
            }
            return shift_onto(node, &cont.root, depth_max);
        }
        let q = node.stop_mass;
        if node.children.is_empty() {
            // All mass stops here; the kernel extends it.
            let cont = nu(node)?;
            if cont.dt != dt || cont.m != m_dim {
                return Err(PpdeError::GridMismatch("continuation grid differs".into()));
            }
            return shift_onto(node, &cont.root, depth_max);
        }
        let mut out = node.clone();
        if q > 0.0 {
            let cont = nu(node)?;
            if cont.dt != dt || cont.m != m_dim {
                return Err(PpdeError::GridMismatch("continuation grid differs".into()));
            }
            let grafted = shift_onto(node, &cont.root, depth_max)?;
            let new_stop = q * grafted.stop_mass;
            let mut children: Vec<(f64, TreeNode)> = Vec::new();
            let nu_branch_mass = q * (1.0 - grafted.stop_mass);
            for (p, c) in &grafted.children {
                children.push((nu_branch_mass * p / (1.0 - new_stop), c.clone()));
            }
            for (p, c) in &node.children {
                let rebuilt = rebuild(c, tau, nu, dt, m_dim, depth_max)?;
                children.push(((1.0 - q) * p / (1.0 - new_stop), rebuilt));
            }
            out.stop_mass = new_stop;
            out.children = children;
        } else {
            let mut children = Vec::with_capacity(node.children.len());
            for (p, c) in &node.children {
                children.push((*p, rebuild(c, tau, nu, dt, m_dim, depth_max)?));
            }
            out.children = children;
        }
        Ok(out)
    }

    let root = rebuild(&measure.root, tau, nu, measure.dt, measure.m, measure.depth_max)?;
    Ok(TreeMeasure {
        root,
        l_bound: measure.l_bound,
        dt: measure.dt,
        m: measure.m,
        depth_max: measure.depth_max,
    })
}

/// Point mass at "stop immediately": the unit of measure concatenation.
pub fn immediate_stop(lat_m: usize, l_bound: f64, dt: f64, depth_max: usize) -> TreeMeasure {
    let mut root = TreeNode::root(lat_m);
    root.stop_mass = 1.0;
    TreeMeasure { root, l_bound, dt, m: lat_m, depth_max }
}

/// One draw from a tree measure.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub stop_index: usize,
    pub b: Path,
    pub a: Path,
    pub martingale: Path,
    pub q: Vec<SymMat>,
}

/// Sample a scenario; deterministic for a fixed seed.
pub fn sample_scenario(measure: &TreeMeasure, seed: u64) -> Scenario {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut node = &measure.root;
    loop {
        if node.children.is_empty() || rng.gen::<f64>() < node.stop_mass {
            break;
        }
        let mut u: f64 = rng.gen();
        let mut pick = &node.children[node.children.len() - 1].1;
        for (p, c) in &node.children {
            if u < *p {
                pick = c;
                break;
            }
            u -= p;
        }
        node = pick;
    }
    Scenario {
        stop_index: node.depth,
        b: Path { dt: measure.dt, values: node.prefix_b.clone() },
        a: Path { dt: measure.dt, values: node.prefix_a.clone() },
        martingale: Path { dt: measure.dt, values: node.prefix_m.clone() },
        q: node.prefix_q.clone(),
    }
}

/// Write scenario draws as CSV rows `(draw, stop_index, t, b_1.., a_1.., m_1..)`.
pub fn scenarios_to_csv<W: std::io::Write>(scenarios: &[Scenario], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let m = scenarios.first().map(|s| s.b.m()).unwrap_or(1);
    let mut header = vec!["draw".to_string(), "stop_index".to_string(), "t".to_string()];
    for tag in ["b", "a", "m"] {
        for i in 1..=m {
            header.push(format!("{tag}_{i}"));
        }
    }
    wtr.write_record(&header).map_err(|e| PpdeError::Io(std::io::Error::other(e)))?;
    for (k, s) in scenarios.iter().enumerate() {
        for idx in 0..=s.stop_index {
            let mut row = vec![k.to_string(), s.stop_index.to_string(), format!("{}", idx as f64 * s.b.dt)];
            for path in [&s.b, &s.a, &s.martingale] {
                row.extend(path.at(idx).iter().map(|x| format!("{x}")));
            }
            wtr.write_record(&row).map_err(|e| PpdeError::Io(std::io::Error::other(e)))?;
        }
    }
    wtr.flush()?;
    Ok(())
}
