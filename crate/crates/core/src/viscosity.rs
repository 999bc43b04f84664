//! Jet membership and viscosity-solution checks on the lattice.
//!
//! A jet (α, β, γ) belongs to the subjet of `u` at θ when the shifted
//! difference `u^θ − φ^{α,β,γ}`, stopped at the hitting index of level δ,
//! has upper expectation exactly `u(θ)`. Stopping immediately always
//! yields `u(θ)`, so the lattice value can only exceed it; membership is a
//! tolerance band around equality. The superjet is the mirror statement
//! under the lower expectation.
//!
//! A candidate solution is checked by sampling points, searching a
//! neighborhood of its finite-difference jets — the only candidates a
//! smooth function admits — and asserting the one-sided residual
//! inequality `−α − G(θ, u(θ), β, γ) ≤ 0` over the members found.

use crate::error::{PpdeError, Result};
use crate::expectation::{optimize_raw_entry, OptMode};
use crate::lattice::LatticeParams;
use crate::pathspace::{
    backward_metric, concat, test_monomial, Jet, Path, SpaceTimePoint, SymMat,
};
use crate::tol;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// A real functional of space-time points.
pub trait PathFunctional: Sync {
    fn eval(&self, theta: &SpaceTimePoint) -> f64;
}

impl<F> PathFunctional for F
where
    F: Fn(&SpaceTimePoint) -> f64 + Sync + ?Sized,
{
    fn eval(&self, theta: &SpaceTimePoint) -> f64 {
        self(theta)
    }
}

type GEval = Box<dyn Fn(&SpaceTimePoint, f64, &[f64], &SymMat) -> f64 + Sync>;

/// The nonlinearity of the equation, with its declared structure.
pub struct GFunction {
    pub name: String,
    eval: GEval,
    pub lipschitz_l: f64,
    pub monotone_in_r: bool,
    pub elliptic: bool,
}

impl GFunction {
    pub fn new<F>(name: &str, lipschitz_l: f64, f: F) -> Self
    where
        F: Fn(&SpaceTimePoint, f64, &[f64], &SymMat) -> f64 + Sync + 'static,
    {
        GFunction {
            name: name.to_string(),
            eval: Box::new(f),
            lipschitz_l,
            monotone_in_r: true,
            elliptic: true,
        }
    }

    pub fn eval(&self, theta: &SpaceTimePoint, r: f64, beta: &[f64], gamma: &SymMat) -> f64 {
        (self.eval)(theta, r, beta, gamma)
    }

    /// `G ≡ 0`.
    pub fn zero() -> Self {
        GFunction::new("zero", 0.0, |_, _, _, _| 0.0)
    }

    /// Heat nonlinearity `(rate/2)·tr γ`.
    pub fn heat(rate: f64) -> Self {
        GFunction::new(&format!("heat({rate})"), rate / 2.0, move |_, _, _, g| {
            rate / 2.0 * g.trace()
        })
    }

    /// Heat plus a state term: `(rate/2)·tr γ + eps·ω_t⁽¹⁾`. The state term
    /// makes the nonlinearity genuinely θ-dependent.
    pub fn heat_with_state(rate: f64, eps: f64) -> Self {
        GFunction::new(
            &format!("heat({rate})+{eps}·x"),
            rate / 2.0,
            move |theta: &SpaceTimePoint, _, _, g| rate / 2.0 * g.trace() + eps * theta.value()[0],
        )
    }

    /// Sampled Lipschitz bound in (β, γ): `|G(θ,r,β+β',γ+γ') − G(θ,r,β,γ)|
    /// ≤ L(|β'| + |γ'|)` over seeded random quadruples.
    pub fn check_lipschitz(&self, m: usize, samples: usize, seed: u64) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let theta = random_point(&mut rng, m);
            let r: f64 = rng.gen_range(-2.0..2.0);
            let beta: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let gamma = random_sym(&mut rng, m, 2.0);
            let dbeta: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dgamma = random_sym(&mut rng, m, 1.0);
            let beta2: Vec<f64> = beta.iter().zip(&dbeta).map(|(a, b)| a + b).collect();
            let gamma2 = gamma.add(&dgamma)?;
            let lhs = (self.eval(&theta, r, &beta2, &gamma2) - self.eval(&theta, r, &beta, &gamma))
                .abs();
            let dbeta_norm: f64 = dbeta.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rhs = self.lipschitz_l * (dbeta_norm + dgamma.spectral_norm());
            if lhs > rhs + 1e-9 {
                return Err(PpdeError::InvalidInput(format!(
                    "Lipschitz bound violated for {}: {lhs} > {rhs}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Sampled degenerate ellipticity: `γ ⪯ γ'` implies `G(γ) ≤ G(γ')`.
    pub fn check_ellipticity(&self, m: usize, samples: usize, seed: u64) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let theta = random_point(&mut rng, m);
            let r: f64 = rng.gen_range(-2.0..2.0);
            let beta: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let gamma = random_sym(&mut rng, m, 2.0);
            let mut bump = random_sym(&mut rng, m, 1.0);
            // square the bump to force PSD
            let evs = bump.eigenpairs();
            bump = SymMat::zero(m);
            for (l, v) in evs {
                for i in 0..m {
                    for j in i..m {
                        bump.set_sym(i, j, bump.get(i, j) + l.abs() * v[i] * v[j]);
                    }
                }
            }
            let bigger = gamma.add(&bump)?;
            if self.eval(&theta, r, &beta, &gamma) > self.eval(&theta, r, &beta, &bigger) + 1e-9 {
                return Err(PpdeError::InvalidInput(format!(
                    "ellipticity violated for {}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

fn random_point(rng: &mut impl Rng, m: usize) -> SpaceTimePoint {
    let n = 4;
    let mut values = vec![vec![0.0; m]];
    for _ in 0..n {
        let prev = values[values.len() - 1].clone();
        values.push((0..m).map(|i| prev[i] + rng.gen_range(-0.5..0.5)).collect());
    }
    let t = rng.gen_range(0..=n);
    SpaceTimePoint::new(t, Path::new(0.25, values).unwrap()).unwrap()
}

fn random_sym(rng: &mut impl Rng, m: usize, scale: f64) -> SymMat {
    let mut s = SymMat::zero(m);
    for i in 0..m {
        for j in i..m {
            s.set_sym(i, j, rng.gen_range(-scale..scale));
        }
    }
    s
}

/// `sup_{|x| ≤ 1} ⟨γx, x⟩`: the positive part of the largest eigenvalue.
pub fn pucci_plus(gamma: &SymMat) -> f64 {
    gamma.eigenvalues().last().copied().unwrap_or(0.0).max(0.0)
}

/// One-sided residual of the equation at a jet: `−α − G(θ, u(θ), β, γ)`.
pub fn residual(g: &GFunction, theta: &SpaceTimePoint, u_value: f64, jet: &Jet) -> f64 {
    -jet.alpha - g.eval(theta, u_value, &jet.beta, &jet.gamma)
}

/// Outcome of one membership test.
#[derive(Debug, Clone, Serialize)]
pub struct JetTestReport {
    pub member: bool,
    /// `u(θ)` minus the lattice expectation; nonpositive up to rounding.
    pub value_gap: f64,
    pub delta_used: f64,
    pub tol_used: f64,
    /// Filled by the solution checks: `−α − G(θ, u(θ), β, γ)`.
    pub residual: Option<f64>,
}

fn extend_to(path: &Path, n_steps: usize) -> Path {
    let mut p = path.clone();
    while p.n_steps() < n_steps {
        p.values.push(p.values[p.values.len() - 1].clone());
    }
    p
}

fn jet_payoff_value(
    u: &dyn PathFunctional,
    theta: &SpaceTimePoint,
    jet: &Jet,
    delta: f64,
    lat: &LatticeParams,
    mode: OptMode,
) -> Result<(f64, f64)> {
    if theta.t_index >= lat.n_steps {
        return Err(PpdeError::InvalidInput(
            "jet tests need strictly positive remaining time".into(),
        ));
    }
    let remaining = (lat.n_steps - theta.t_index) as f64 * lat.dt;
    let delta_used = delta.min(remaining);
    if delta_used <= 0.0 {
        return Err(PpdeError::InvalidInput("localization level must be positive".into()));
    }
    let base = extend_to(&theta.path, lat.n_steps);
    let t = theta.t_index;
    let jet = jet.clone();
    let u_ref = &u;
    let payoff = move |s: usize, fresh: &Path| {
        let glued = concat(&base, t, fresh).expect("grids agree");
        let global = SpaceTimePoint { t_index: (t + s).min(glued.n_steps()), path: glued };
        let probe = SpaceTimePoint { t_index: s, path: fresh.clone() };
        u_ref.eval(&global) - test_monomial(&jet, &probe)
    };
    let mut sub = lat.clone();
    sub.n_steps = lat.n_steps - theta.t_index;
    let value = optimize_raw_entry(&payoff, Some(delta_used), &sub, mode, false, false)?.value;
    Ok((value, delta_used))
}

/// Test `(α, β, γ)` against the subjet of `u` at θ: the clipped upper
/// expectation of the shifted difference must return `u(θ)`.
pub fn subjet_test(
    u: &dyn PathFunctional,
    theta: &SpaceTimePoint,
    jet: &Jet,
    delta: f64,
    tol: f64,
    lat: &LatticeParams,
) -> Result<JetTestReport> {
    let (value, delta_used) = jet_payoff_value(u, theta, jet, delta, lat, OptMode::Sup)?;
    let gap = u.eval(theta) - value;
    Ok(JetTestReport { member: gap.abs() <= tol, value_gap: gap, delta_used, tol_used: tol, residual: None })
}

/// Mirror of [`subjet_test`] under the lower expectation.
pub fn superjet_test(
    u: &dyn PathFunctional,
    theta: &SpaceTimePoint,
    jet: &Jet,
    delta: f64,
    tol: f64,
    lat: &LatticeParams,
) -> Result<JetTestReport> {
    let (value, delta_used) = jet_payoff_value(u, theta, jet, delta, lat, OptMode::Inf)?;
    let gap = u.eval(theta) - value;
    Ok(JetTestReport { member: gap.abs() <= tol, value_gap: gap, delta_used, tol_used: tol, residual: None })
}

/// Finite-difference expansion of `u` at θ, the seed of the jet search.
/// Space differences probe at index `max(t, 1)` so that paths keep their
/// zero start.
pub fn fd_jet(u: &dyn PathFunctional, theta: &SpaceTimePoint, lat: &LatticeParams, bump: f64) -> Result<Jet> {
    if lat.m != 1 {
        return Err(PpdeError::InvalidInput("finite-difference jets are built for m = 1".into()));
    }
    let t = theta.t_index;
    let frozen = extend_to(&theta.path.frozen_at(t), lat.n_steps);
    let u0 = u.eval(theta);
    let t_next = (t + 1).min(lat.n_steps);
    let alpha = if t_next == t {
        0.0
    } else {
        (u.eval(&SpaceTimePoint { t_index: t_next, path: frozen.clone() }) - u0)
            / ((t_next - t) as f64 * lat.dt)
    };
    let tp = t.max(1);
    let shifted = |eps: f64| -> f64 {
        let mut p = frozen.clone();
        for v in p.values.iter_mut().skip(tp) {
            v[0] += eps;
        }
        u.eval(&SpaceTimePoint { t_index: tp, path: p })
    };
    let up = shifted(bump);
    let mid = shifted(0.0);
    let dn = shifted(-bump);
    let beta = (up - dn) / (2.0 * bump);
    let gamma = (up - 2.0 * mid + dn) / (bump * bump);
    Ok(Jet::scalar(alpha, beta, gamma))
}

/// Neighborhood of the finite-difference jet explored by the checks.
#[derive(Debug, Clone, Serialize)]
pub struct JetSearch {
    pub alpha_step: f64,
    pub alpha_range: i32,
    pub beta_step: f64,
    pub beta_range: i32,
    pub gamma_step: f64,
    pub gamma_range: i32,
    pub fd_bump: f64,
    /// Finite-difference seeds are clamped into `[-seed_cap, seed_cap]`
    /// component-wise; curvature beyond it is outside desk scale.
    pub seed_cap: f64,
}

impl JetSearch {
    pub fn for_grid(dt: f64) -> Self {
        JetSearch {
            alpha_step: dt,
            alpha_range: 4,
            beta_step: dt,
            beta_range: 1,
            gamma_step: dt,
            gamma_range: 1,
            fd_bump: 5e-3,
            seed_cap: 8.0,
        }
    }

    /// Search tuned for finite-set envelopes, which are cone fields at
    /// micro scale: probe at the lattice's own spatial step so differences
    /// land on neighboring anchors.
    pub fn for_envelope(dt: f64, l_bound: f64) -> Self {
        JetSearch { fd_bump: (l_bound * dt).sqrt(), ..Self::for_grid(dt) }
    }

    /// Clamp a finite-difference seed into the search box.
    pub fn clamped(&self, seed: &Jet) -> Jet {
        let c = self.seed_cap;
        Jet::scalar(
            seed.alpha.clamp(-c, c),
            seed.beta[0].clamp(-c, c),
            seed.gamma.get(0, 0).clamp(-c, c),
        )
    }

    fn candidates(&self, seed: &Jet) -> Vec<Jet> {
        let seed = self.clamped(seed);
        let mut out = Vec::new();
        for ka in -self.alpha_range..=self.alpha_range {
            for kb in -self.beta_range..=self.beta_range {
                for kg in -self.gamma_range..=self.gamma_range {
                    out.push(Jet::scalar(
                        seed.alpha + f64::from(ka) * self.alpha_step,
                        seed.beta[0] + f64::from(kb) * self.beta_step,
                        seed.gamma.get(0, 0) + f64::from(kg) * self.gamma_step,
                    ));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Sub,
    Super,
}

/// Outcome of a one-sided solution check over sampled points.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub role: Role,
    pub points_checked: usize,
    pub member_jets: usize,
    /// Largest signed violation of the one-sided inequality across member
    /// jets: positive means the inequality failed by that much.
    pub worst_excess: f64,
    pub worst_point: Option<usize>,
    pub worst_jet: Option<Jet>,
    pub tol: f64,
    pub pass: bool,
}

/// One-sided viscosity check: for every sampled point, each member jet in
/// the search neighborhood must satisfy the corresponding residual
/// inequality within `residual_tol`. Membership is decided at the smallest
/// feasible level of the decreasing δ grid.
#[allow(clippy::too_many_arguments)]
pub fn check_side(
    u: &dyn PathFunctional,
    g: &GFunction,
    role: Role,
    points: &[SpaceTimePoint],
    search: &JetSearch,
    delta_grid: &[f64],
    residual_tol: f64,
    lat: &LatticeParams,
) -> Result<CheckReport> {
    if points.is_empty() || delta_grid.is_empty() {
        return Err(PpdeError::EmptySet("solution check needs points and a delta grid".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = None;
    let mut worst_jet = None;
    let mut members = 0usize;
    for (pi, theta) in points.iter().enumerate() {
        if theta.t_index >= lat.n_steps {
            continue;
        }
        let remaining = (lat.n_steps - theta.t_index) as f64 * lat.dt;
        let delta = delta_grid
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .map(|d| d.min(remaining))
            .fold(f64::INFINITY, f64::min);
        let seed = fd_jet(u, theta, lat, search.fd_bump)?;
        let u_here = u.eval(theta);
        for jet in search.candidates(&seed) {
            let tol_member = tol::jet_grid(lat.dt, jet.gamma.spectral_norm());
            let report = match role {
                Role::Sub => subjet_test(u, theta, &jet, delta, tol_member, lat)?,
                Role::Super => superjet_test(u, theta, &jet, delta, tol_member, lat)?,
            };
            if !report.member {
                continue;
            }
            members += 1;
            let r = residual(g, theta, u_here, &jet);
            let excess = match role {
                Role::Sub => r,
                Role::Super => -r,
            };
            if excess > worst {
                worst = excess;
                worst_point = Some(pi);
                worst_jet = Some(jet.clone());
            }
        }
    }
    if members == 0 {
        return Err(PpdeError::EmptySet(
            "jet search produced no members; widen the search or the tolerance".into(),
        ));
    }
    Ok(CheckReport {
        role,
        points_checked: points.len(),
        member_jets: members,
        worst_excess: worst,
        worst_point,
        worst_jet,
        tol: residual_tol,
        pass: worst <= residual_tol,
    })
}

/// Build the extremal nonlinearity whose equation is solved by the
/// value-function construction: `G(θ, r, β', γ') = −α − L|β + γω_t − β'| −
/// L(γ − γ')⁺`.
pub fn pucci_operator_g(jet: &Jet, l_bound: f64) -> GFunction {
    let jet = jet.clone();
    GFunction::new(&format!("pucci(L={l_bound})"), l_bound, move |theta, _, beta_p, gamma_p| {
        let x = theta.value();
        let target: Vec<f64> = jet
            .beta
            .iter()
            .zip(jet.gamma.mul_vec(x))
            .map(|(b, gx)| b + gx)
            .collect();
        let dist: f64 =
            target.iter().zip(beta_p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let defect = jet.gamma.sub(gamma_p).expect("dimensions agree");
        -jet.alpha - l_bound * dist - l_bound * pucci_plus(&defect)
    })
}

/// Value functional `𝔼-inf over fixed-horizon controls of ξ^θ` plus the
/// test monomial: the canonical extremal subsolution.
pub fn value_function_phi(
    xi: &(dyn Fn(&Path) -> f64 + Sync),
    jet: &Jet,
    theta: &SpaceTimePoint,
    lat: &LatticeParams,
) -> Result<f64> {
    let base = extend_to(&theta.path, lat.n_steps);
    let t = theta.t_index;
    let eval = move |_s: usize, fresh: &Path| {
        let glued = concat(&base, t, fresh).expect("grids agree");
        xi(&glued)
    };
    let mut sub = lat.clone();
    sub.n_steps = lat.n_steps - theta.t_index.min(lat.n_steps);
    let v = if sub.n_steps == 0 {
        xi(&extend_to(&theta.path, lat.n_steps))
    } else {
        optimize_raw_entry(&eval, None, &sub, OptMode::Inf, false, true)?.value
    };
    Ok(v + test_monomial(jet, theta))
}

/// Empirical modulus of θ-continuity of `G` at scale `x`: the supremum of
/// `|G(θ,β,γ) − G(θ',β,γ)|` over sampled pairs within backward distance
/// `x`, with (β, γ) drawn from a compact box. A lower estimate of the true
/// modulus.
pub fn continuity_modulus(
    g: &GFunction,
    x: f64,
    p_exponent: f64,
    lat: &LatticeParams,
    sample_budget: usize,
    seed: u64,
) -> Result<f64> {
    if x < 0.0 {
        return Err(PpdeError::InvalidInput("modulus scale must be nonnegative".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = lat.m;
    let mut best = 0.0f64;
    let bound = 2.0 * lat.l_bound;

    let mut consider = |a: &SpaceTimePoint, b: &SpaceTimePoint, rng: &mut rand_chacha::ChaCha8Rng| {
        if let Ok(d) = backward_metric(p_exponent, a, b) {
            if d <= x {
                for _ in 0..8 {
                    let beta: Vec<f64> = (0..m).map(|_| rng.gen_range(-bound..bound)).collect();
                    let gamma = random_sym(rng, m, bound);
                    let diff = (g.eval(a, 0.0, &beta, &gamma) - g.eval(b, 0.0, &beta, &gamma)).abs();
                    best = best.max(diff);
                }
            }
        }
    };

    // Deterministic family: pairs differing only in the current value, with
    // the bump sized to land exactly at distance x.
    let bump = x / (1.0 + lat.dt.powf(1.0 / p_exponent)) * (1.0 - 1e-9);
    for t in 1..=lat.n_steps {
        let base = SpaceTimePoint::new(t, Path::zero(lat.dt, lat.n_steps, m)).unwrap();
        let mut moved = base.clone();
        for v in moved.path.values.iter_mut().skip(t) {
            v[0] += bump;
        }
        consider(&base, &moved, &mut rng);
    }

    // Random pairs: jittered copies of random paths.
    for _ in 0..sample_budget {
        let mut values = vec![vec![0.0; m]];
        for _ in 0..lat.n_steps {
            let prev = values[values.len() - 1].clone();
            values.push(
                (0..m)
                    .map(|i| prev[i] + rng.gen_range(-1.0..1.0) * (lat.l_bound * lat.dt).sqrt())
                    .collect(),
            );
        }
        let t = rng.gen_range(0..=lat.n_steps);
        let a = SpaceTimePoint::new(t, Path::new(lat.dt, values.clone()).unwrap()).unwrap();
        let scale: f64 = rng.gen_range(0.0..x);
        let mut moved = values;
        for v in moved.iter_mut().skip(t.max(1)) {
            v[0] += scale / 2.0;
        }
        let tb = if t < lat.n_steps && rng.gen::<bool>() { t + 1 } else { t };
        let b = SpaceTimePoint::new(tb, Path::new(lat.dt, moved).unwrap()).unwrap();
        consider(&a, &b, &mut rng);
    }
    Ok(best)
}

/// Locate a strictly-before-the-crossing stopping point of the clipped
/// problem and the jet it certifies. Returns `None` when waiting to the
/// crossing is already optimal (the premise of the extraction fails).
pub fn optimal_stopping_point(
    u: &dyn PathFunctional,
    jet: &Jet,
    delta: f64,
    lat: &LatticeParams,
) -> Result<Option<(SpaceTimePoint, Jet, JetTestReport)>> {
    let origin = SpaceTimePoint::origin(lat.dt, lat.n_steps, lat.m);
    let u0 = u.eval(&origin);
    let jet_c = jet.clone();
    let u_ref = &u;
    let payoff = move |s: usize, fresh: &Path| {
        let probe = SpaceTimePoint { t_index: s, path: fresh.clone() };
        u_ref.eval(&probe) - test_monomial(&jet_c, &probe)
    };
    // Forced continuation to the crossing: no stopping before the hitting
    // index.
    let forced = optimize_raw_entry(&payoff, Some(delta), lat, OptMode::Sup, false, true)?.value;
    if u0 - test_monomial(jet, &origin) <= forced + 1e-12 {
        return Ok(None);
    }
    // With stopping allowed, the optimum exceeds the forced value; its
    // policy stops strictly before the crossing somewhere.
    let opt = optimize_raw_entry(&payoff, Some(delta), lat, OptMode::Sup, true, false)?;
    let policy = opt.policy.expect("policy requested");

    use crate::expectation::PolicyNode;
    fn find_stop(
        node: &PolicyNode,
        lat: &LatticeParams,
        prefix: &mut Vec<Vec<f64>>,
        depth: usize,
    ) -> Option<(usize, Vec<Vec<f64>>)> {
        match node {
            PolicyNode::Stop if depth < lat.n_steps => Some((depth, prefix.clone())),
            PolicyNode::Stop | PolicyNode::Absorbed => None,
            PolicyNode::Continue { drift_idx, var_idx, children } => {
                let branches = lat.martingale_branches(*var_idx);
                for (k, (_, dm)) in branches.iter().enumerate() {
                    let d = &lat.grids.drift[*drift_idx];
                    let next: Vec<f64> = prefix[depth]
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x + (d[i] * lat.dt + dm[i]))
                        .collect();
                    prefix.push(next);
                    let found = find_stop(&children[k], lat, prefix, depth + 1);
                    prefix.pop();
                    if found.is_some() {
                        return found;
                    }
                }
                None
            }
        }
    }
    let mut prefix = vec![vec![0.0; lat.m]];
    let Some((depth, values)) = find_stop(&policy.root, lat, &mut prefix, 0) else {
        return Ok(None);
    };
    let star_path = extend_to(&Path { dt: lat.dt, values }, lat.n_steps).frozen_at(depth);
    let star = SpaceTimePoint::new(depth, star_path)?;
    let shifted_beta: Vec<f64> = jet
        .beta
        .iter()
        .zip(jet.gamma.mul_vec(star.value()))
        .map(|(b, gx)| b + gx)
        .collect();
    let star_jet = Jet::new(jet.alpha, shifted_beta, jet.gamma.clone())?;
    let tol = tol::jet_grid(lat.dt, jet.gamma.spectral_norm());
    let report = subjet_test(u, &star, &star_jet, delta, tol, lat)?;
    Ok(Some((star, star_jet, report)))
}
