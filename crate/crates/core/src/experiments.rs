//! Assembled demonstrations: heat-type reference solutions, end-to-end
//! viscosity verification, the sup-envelope construction, and the
//! stability probe.

use crate::error::{PpdeError, Result};
use crate::expectation::{optimize, OptMode, Payoff};
use crate::lattice::{Budget, LatticeParams};
use crate::pathspace::{backward_metric, concat, Jet, Path, SpaceTimePoint};
use crate::tol;
use crate::viscosity::{
    check_side, fd_jet, residual, subjet_test, CheckReport, GFunction, JetSearch, PathFunctional,
    Role,
};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

/// Budget block of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub max_dp_depth: usize,
    pub max_drift: usize,
    pub max_var: usize,
    pub max_enum_depth: usize,
    pub max_nodes: u64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = Budget::default();
        BudgetConfig {
            max_dp_depth: b.max_dp_depth,
            max_drift: b.max_drift,
            max_var: b.max_var,
            max_enum_depth: b.max_enum_depth,
            max_nodes: b.max_nodes,
        }
    }
}

impl BudgetConfig {
    pub fn to_budget(&self) -> Budget {
        Budget {
            max_dp_depth: self.max_dp_depth,
            max_drift: self.max_drift,
            max_var: self.max_var,
            max_enum_depth: self.max_enum_depth,
            max_nodes: self.max_nodes,
        }
    }
}

/// One experiment's knobs. An empty configuration file yields the desk
/// defaults (N = 8 on [0, 1], m = 1, L = 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub t_horizon: f64,
    pub m: usize,
    pub l_bound: f64,
    pub drift_grid: Vec<f64>,
    pub var_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub n_ladder: Vec<f64>,
    pub g_name: String,
    pub terminal_name: String,
    pub seed: u64,
    pub sample_count: usize,
    pub p_exponent: f64,
    pub budget: BudgetConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 8,
            t_horizon: 1.0,
            m: 1,
            l_bound: 1.0,
            drift_grid: vec![-1.0, 0.0, 1.0],
            var_grid: vec![0.0, 1.0],
            delta_grid: vec![0.45, 0.3, 0.15],
            n_ladder: vec![2.0, 5.0, 10.0, 20.0],
            g_name: "heat".into(),
            terminal_name: "value-sq".into(),
            seed: 42,
            sample_count: 10,
            p_exponent: 2.0,
            budget: BudgetConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn dt(&self) -> f64 {
        self.t_horizon / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t_horizon <= 0.0 || self.m == 0 || self.l_bound <= 0.0 {
            return Err(PpdeError::Config(
                "n, t_horizon, m and l_bound must be positive".into(),
            ));
        }
        if self.n > self.budget.max_dp_depth {
            return Err(PpdeError::Config(format!(
                "budget exceeded: n={} beyond max_dp_depth={}",
                self.n, self.budget.max_dp_depth
            )));
        }
        if self.drift_grid.len() > self.budget.max_drift
            || self.var_grid.len() > self.budget.max_var
        {
            return Err(PpdeError::Config(format!(
                "budget exceeded: grids {}x{} beyond {}x{}",
                self.drift_grid.len(),
                self.var_grid.len(),
                self.budget.max_drift,
                self.budget.max_var
            )));
        }
        if self.drift_grid.iter().any(|d| d.abs() > self.l_bound + 1e-12) {
            return Err(PpdeError::Config("drift_grid entries must lie in [-L, L]".into()));
        }
        if self.var_grid.iter().any(|&c| !(0.0..=self.l_bound + 1e-12).contains(&c)) {
            return Err(PpdeError::Config("var_grid entries must lie in [0, L]".into()));
        }
        if self.delta_grid.iter().any(|&d| d <= 0.0) || self.delta_grid.is_empty() {
            return Err(PpdeError::Config("delta_grid must be positive and nonempty".into()));
        }
        if self.n_ladder.iter().any(|&x| x <= 0.0) || self.n_ladder.is_empty() {
            return Err(PpdeError::Config("n_ladder must be positive and nonempty".into()));
        }
        if self.p_exponent < 1.0 {
            return Err(PpdeError::Config("p_exponent must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lattice(&self) -> LatticeParams {
        let mut lat = LatticeParams::scalar(self.l_bound, self.n, self.dt(), &self.drift_grid, &self.var_grid);
        lat.budget = self.budget.to_budget();
        lat
    }

    /// Seeded sample points on the lattice: frozen random-walk prefixes.
    pub fn sample_points(&self) -> Vec<SpaceTimePoint> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let dt = self.dt();
        (0..self.sample_count)
            .map(|_| {
                let mut values = vec![0.0f64];
                for _ in 0..self.n {
                    let prev = *values.last().unwrap();
                    let step = rng.gen_range(-1.0..1.0) * (self.l_bound * dt).sqrt();
                    values.push(prev + step);
                }
                let t = rng.gen_range(0..self.n);
                SpaceTimePoint::new(t, Path::scalar(dt, &values).unwrap().frozen_at(t)).unwrap()
            })
            .collect()
    }
}

/// Reference solution of the heat-type equation with variance rate `c`:
/// the expectation of the terminal functional over the single martingale
/// tree grafted at θ (zero drift, no stopping).
pub fn heat_reference(
    xi: &(dyn Fn(&Path) -> f64 + Sync),
    c: f64,
    theta: &SpaceTimePoint,
    lat: &LatticeParams,
) -> Result<f64> {
    if c < 0.0 || c > lat.l_bound + 1e-12 {
        return Err(PpdeError::InvalidInput("variance rate outside [0, L]".into()));
    }
    let mut base = theta.path.clone();
    while base.n_steps() < lat.n_steps {
        base.values.push(base.values[base.values.len() - 1].clone());
    }
    let t = theta.t_index;
    if t == lat.n_steps {
        return Ok(xi(&base.frozen_at(t)));
    }
    let mut single = LatticeParams::scalar(lat.l_bound, lat.n_steps - t, lat.dt, &[0.0], &[c]);
    single.budget = lat.budget.clone();
    let eval = move |_s: usize, fresh: &Path| {
        let glued = concat(&base, t, fresh).expect("grids agree");
        xi(&glued)
    };
    Ok(crate::expectation::optimize_raw_entry(&eval, None, &single, OptMode::Sup, false, true)?
        .value)
}

/// Two-sided verification report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub sub: CheckReport,
    pub sup: CheckReport,
    pub pass: bool,
}

/// Run both one-sided checks on a candidate solution at the sampled
/// points.
pub fn viscosity_verify(
    u: &dyn PathFunctional,
    g: &GFunction,
    points: &[SpaceTimePoint],
    delta_grid: &[f64],
    lat: &LatticeParams,
) -> Result<VerifyReport> {
    let search = JetSearch::for_grid(lat.dt);
    let residual_tol = tol::residual(lat.dt);
    let sub = check_side(u, g, Role::Sub, points, &search, delta_grid, residual_tol, lat)?;
    let sup = check_side(u, g, Role::Super, points, &search, delta_grid, residual_tol, lat)?;
    let pass = sub.pass && sup.pass;
    Ok(VerifyReport { sub, sup, pass })
}

/// Pointwise supremum of a family of functionals.
pub struct Envelope<'a> {
    pub members: Vec<&'a dyn PathFunctional>,
}

impl PathFunctional for Envelope<'_> {
    fn eval(&self, theta: &SpaceTimePoint) -> f64 {
        self.members.iter().map(|u| u.eval(theta)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerronReport {
    pub member_count: usize,
    /// envelope dominates every member on the evaluation set
    pub dominates_members: bool,
    /// envelope stays below the upper barrier on the evaluation set
    pub below_upper_barrier: bool,
    pub sub_check: CheckReport,
    /// recorded, not asserted: whether the supersolution side also passes
    pub super_side_pass: Option<bool>,
    pub pass: bool,
}

/// Build the pointwise sup over a family of verified subsolutions, re-run
/// the subsolution check on it, and record the supersolution side.
#[allow(clippy::too_many_arguments)]
pub fn perron_envelope(
    family: &[&dyn PathFunctional],
    upper_barrier: &dyn PathFunctional,
    g: &GFunction,
    eval_set: &[SpaceTimePoint],
    check_points: &[SpaceTimePoint],
    delta_grid: &[f64],
    lat: &LatticeParams,
) -> Result<(Vec<f64>, PerronReport)> {
    if family.is_empty() {
        return Err(PpdeError::EmptySet("envelope needs at least one member".into()));
    }
    let envelope = Envelope { members: family.to_vec() };
    let mut dominates = true;
    let mut below = true;
    let mut values = Vec::with_capacity(eval_set.len());
    for pt in eval_set {
        let v = envelope.eval(pt);
        values.push(v);
        for u in family {
            if u.eval(pt) > v + tol::EXACT {
                dominates = false;
            }
        }
        if v > upper_barrier.eval(pt) + tol::EXACT {
            below = false;
        }
    }
    let search = JetSearch::for_grid(lat.dt);
    let residual_tol = tol::residual(lat.dt);
    let sub_check =
        check_side(&envelope, g, Role::Sub, check_points, &search, delta_grid, residual_tol, lat)?;
    let super_side = check_side(
        &envelope,
        g,
        Role::Super,
        check_points,
        &search,
        delta_grid,
        residual_tol,
        lat,
    )
    .map(|r| r.pass)
    .ok();
    let pass = dominates && below && sub_check.pass;
    Ok((
        values,
        PerronReport {
            member_count: family.len(),
            dominates_members: dominates,
            below_upper_barrier: below,
            sub_check,
            super_side_pass: super_side,
            pass,
        },
    ))
}

/// One rung of the stability probe.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityTrace {
    pub index: usize,
    pub found: bool,
    /// backward distance from the probe point to the target point
    pub point_gap: f64,
    pub value_gap: f64,
    pub alpha_gap: f64,
    pub beta_gap: f64,
    /// max of the gaps above: the headline approximation error
    pub trace_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub traces: Vec<StabilityTrace>,
    /// residual of the limit jet against the limit nonlinearity
    pub limit_residual: f64,
    pub all_found: bool,
}

/// For each member of an approximating family, search nearby points for a
/// member jet with the target curvature and record how closely it
/// approximates the limit jet. A failed search is reported, not raised.
#[allow(clippy::too_many_arguments)]
pub fn stability_probe(
    family: &[&dyn PathFunctional],
    u_limit: &dyn PathFunctional,
    g_limit: &GFunction,
    theta: &SpaceTimePoint,
    jet: &Jet,
    nearby: &[SpaceTimePoint],
    p_exponent: f64,
    lat: &LatticeParams,
) -> Result<StabilityReport> {
    let search = JetSearch::for_grid(lat.dt);
    let u_theta = u_limit.eval(theta);
    let limit_residual = residual(g_limit, theta, u_theta, jet);

    // candidate points sorted by distance to the target
    let mut points: Vec<SpaceTimePoint> = Vec::with_capacity(nearby.len() + 1);
    points.push(theta.clone());
    points.extend(nearby.iter().cloned());
    let mut order: Vec<usize> = (0..points.len()).collect();
    let dist: Vec<f64> = points
        .iter()
        .map(|p| backward_metric(p_exponent, p, theta).unwrap_or(f64::INFINITY))
        .collect();
    order.sort_by(|&i, &j| dist[i].partial_cmp(&dist[j]).unwrap());

    let mut traces = Vec::with_capacity(family.len());
    for (idx, u_n) in family.iter().enumerate() {
        let mut found = None;
        'search: for &pi in &order {
            let probe = &points[pi];
            if probe.t_index >= lat.n_steps {
                continue;
            }
            let seed = match fd_jet(*u_n, probe, lat, search.fd_bump) {
                Ok(s) => search.clamped(&s),
                Err(_) => continue,
            };
            let delta = self::probe_delta(probe, lat);
            // scan outward from the seed so the closest member wins
            let mut offsets = vec![0i32];
            for k in 1..=search.alpha_range {
                offsets.push(-k);
                offsets.push(k);
            }
            for ka in offsets {
                let cand = Jet::new(
                    seed.alpha + f64::from(ka) * search.alpha_step,
                    seed.beta.clone(),
                    jet.gamma.clone(),
                )?;
                let tol_member = tol::jet_grid(lat.dt, cand.gamma.spectral_norm());
                let rep = subjet_test(*u_n, probe, &cand, delta, tol_member, lat)?;
                if rep.member {
                    found = Some((pi, cand));
                    break 'search;
                }
            }
        }
        match found {
            None => traces.push(StabilityTrace {
                index: idx,
                found: false,
                point_gap: f64::NAN,
                value_gap: f64::NAN,
                alpha_gap: f64::NAN,
                beta_gap: f64::NAN,
                trace_gap: f64::NAN,
            }),
            Some((pi, cand)) => {
                let probe = &points[pi];
                let point_gap = dist[pi];
                let value_gap = (u_n.eval(probe) - u_theta).abs();
                let alpha_gap = (cand.alpha - jet.alpha).abs();
                let beta_gap: f64 = cand
                    .beta
                    .iter()
                    .zip(&jet.beta)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let trace_gap = point_gap.max(value_gap).max(alpha_gap).max(beta_gap);
                traces.push(StabilityTrace {
                    index: idx,
                    found: true,
                    point_gap,
                    value_gap,
                    alpha_gap,
                    beta_gap,
                    trace_gap,
                });
            }
        }
    }
    let all_found = traces.iter().all(|t| t.found);
    Ok(StabilityReport { traces, limit_residual, all_found })
}

fn probe_delta(probe: &SpaceTimePoint, lat: &LatticeParams) -> f64 {
    0.3f64.min((lat.n_steps - probe.t_index) as f64 * lat.dt)
}

/// Node-wise tower identity of a reference solution: the value at a node
/// equals the mean of its one-step continuations.
pub fn heat_tower_gap(
    xi: &(dyn Fn(&Path) -> f64 + Sync),
    c: f64,
    theta: &SpaceTimePoint,
    lat: &LatticeParams,
) -> Result<f64> {
    if theta.t_index >= lat.n_steps {
        return Ok(0.0);
    }
    let here = heat_reference(xi, c, theta, lat)?;
    let step = (c * lat.dt).sqrt();
    let mut mean = 0.0;
    for sgn in [1.0, -1.0] {
        let mut path = theta.path.clone();
        while path.n_steps() < lat.n_steps {
            path.values.push(path.values[path.values.len() - 1].clone());
        }
        let base = path.at(theta.t_index)[0];
        for v in path.values.iter_mut().skip(theta.t_index + 1) {
            v[0] = base + sgn * step;
        }
        let next = SpaceTimePoint::new(theta.t_index + 1, path)?;
        mean += 0.5 * heat_reference(xi, c, &next, lat)?;
    }
    Ok((here - mean).abs())
}

/// Collect the payoff optimum alongside its policy digest (the CLI's
/// expectation command).
pub fn expectation_run(
    payoff: &Payoff,
    lat: &LatticeParams,
    mode: OptMode,
) -> Result<(f64, String)> {
    let opt = optimize(payoff, lat, mode, false)?;
    Ok((opt.value, opt.policy_digest))
}
