//! The Hilbert-space lift of path functionals.
//!
//! A space-time point (t, ω) is identified with the pair `x = (x₀, x₁)`
//! where `x₀ = ω(t)` is the current value and `x₁(s) = ω(s + t)` on
//! `[−t, 0]` (zero extension further back) is the history read backward.
//! The shift semigroup `S`, its generator `A` (differentiation with the
//! domain gluing `x₀ = x₁(0)`), and the resolvent `(A − I)⁻¹` act on these
//! pairs. The resolvent-weighted norm
//!
//! `|x|_B² = |x₀|² + ∫_{−∞}^0 |eˢx₀ + ∫_s^0 e^{s−r} x₁(r) dr|² ds`
//!
//! is weaker than the product norm; the matching pseudo-metric on path
//! space compares running integrals over all window lengths.
//!
//! History samples live on the grid of `[−t_ext, 0]` with the path step;
//! the vanishing tail beyond `−t_ext` lets quadratures finish with a
//! closed-form exponential term instead of truncation error.

use crate::error::{PpdeError, Result};
use crate::lattice::Scenario;
use crate::pathspace::{Path, SpaceTimePoint};
use serde::Serialize;

/// A point of the lifted state space: current value plus sampled history.
/// `x1[j]` sits at `s = −t_ext + j·dt`; the last sample is at `s = 0`; the
/// function vanishes identically below `−t_ext`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertPoint {
    pub x0: Vec<f64>,
    pub x1: Vec<Vec<f64>>,
    pub dt: f64,
}

impl HilbertPoint {
    pub fn new(x0: Vec<f64>, x1: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if x1.is_empty() || x1.iter().any(|v| v.len() != x0.len()) {
            return Err(PpdeError::InvalidInput("history samples must match the dimension".into()));
        }
        if dt <= 0.0 {
            return Err(PpdeError::InvalidInput("dt must be positive".into()));
        }
        Ok(HilbertPoint { x0, x1, dt })
    }

    pub fn zero(m: usize, steps: usize, dt: f64) -> Self {
        HilbertPoint { x0: vec![0.0; m], x1: vec![vec![0.0; m]; steps + 1], dt }
    }

    pub fn m(&self) -> usize {
        self.x0.len()
    }

    /// Number of history steps (grid extends to `−steps·dt`).
    pub fn history_steps(&self) -> usize {
        self.x1.len() - 1
    }

    /// History sample at `s = −back·dt`, zero below the stored extent.
    pub fn history_at(&self, back: usize) -> Vec<f64> {
        let k = self.x1.len() - 1;
        if back > k {
            vec![0.0; self.m()]
        } else {
            self.x1[k - back].clone()
        }
    }

    pub fn sub(&self, other: &HilbertPoint) -> Result<HilbertPoint> {
        if self.m() != other.m() || self.dt != other.dt {
            return Err(PpdeError::GridMismatch("lift points on different grids".into()));
        }
        let steps = self.history_steps().max(other.history_steps());
        let mut x1 = Vec::with_capacity(steps + 1);
        for back in (0..=steps).rev() {
            let a = self.history_at(back);
            let b = other.history_at(back);
            x1.push(a.iter().zip(&b).map(|(p, q)| p - q).collect());
        }
        Ok(HilbertPoint {
            x0: self.x0.iter().zip(&other.x0).map(|(p, q)| p - q).collect(),
            x1,
            dt: self.dt,
        })
    }

    /// Product-space norm `(|x₀|² + ‖x₁‖²_{L²})^{1/2}` (trapezoid).
    pub fn product_norm(&self) -> f64 {
        let head: f64 = self.x0.iter().map(|v| v * v).sum();
        let sq: Vec<f64> = self.x1.iter().map(|v| v.iter().map(|z| z * z).sum()).collect();
        head.max(0.0).sqrt().hypot(trapezoid(&sq, self.dt).sqrt())
    }
}

/// A lift point satisfying the generator-domain gluing `x₀ = x₁(0)`.
#[derive(Debug, Clone, Serialize)]
pub struct DomainAPoint(pub HilbertPoint);

impl DomainAPoint {
    pub fn new(point: HilbertPoint) -> Result<Self> {
        let end = &point.x1[point.x1.len() - 1];
        for (a, b) in point.x0.iter().zip(end) {
            if (a - b).abs() > 1e-12 {
                return Err(PpdeError::InvalidInput(
                    "domain gluing x0 = x1(0) violated".into(),
                ));
            }
        }
        Ok(DomainAPoint(point))
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Identify a space-time point with its lifted state: current value plus
/// backward-read history supported on `[−t, 0]`.
pub fn lift(theta: &SpaceTimePoint) -> HilbertPoint {
    let t = theta.t_index;
    let n = theta.path.n_steps();
    let m = theta.path.m();
    // history grid spans [−T, 0] so lifts share one extent per experiment
    let mut x1 = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let back = n - j;
        if back > t {
            x1.push(vec![0.0; m]);
        } else {
            x1.push(theta.path.at(t - back).to_vec());
        }
    }
    HilbertPoint { x0: theta.value().to_vec(), x1, dt: theta.path.dt }
}

/// Apply the shift semigroup for `k` grid steps: the current value floods
/// the closed window `[−k·dt, 0]` and the old history slides left.
pub fn semigroup_apply(k: usize, x: &HilbertPoint) -> HilbertPoint {
    if k == 0 {
        return x.clone();
    }
    let steps = x.history_steps() + k;
    let mut x1 = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let back = steps - j;
        if back <= k {
            x1.push(x.x0.clone());
        } else {
            x1.push(x.history_at(back - k));
        }
    }
    HilbertPoint { x0: x.x0.clone(), x1, dt: x.dt }
}

/// Resolvent `(A − I)⁻¹ x = (−x₀, −eˢx₀ − ∫_s^0 e^{−(r−s)} x₁(r) dr)`,
/// evaluated by trapezoid quadrature on the history grid. The output obeys
/// the domain gluing exactly.
pub fn resolvent(x: &HilbertPoint) -> DomainAPoint {
    let steps = x.history_steps();
    let m = x.m();
    let dt = x.dt;
    // cumulative I(s) = ∫_s^0 e^{−r} x1(r) dr from the right end
    let mut cum = vec![vec![0.0; m]; steps + 1];
    #[allow(clippy::needless_range_loop)]
    for j in (0..steps).rev() {
        let s_j = -((steps - j) as f64) * dt;
        let s_next = s_j + dt;
        for i in 0..m {
            let a = (-s_j).exp() * x.x1[j][i];
            let b = (-s_next).exp() * x.x1[j + 1][i];
            cum[j][i] = cum[j + 1][i] + 0.5 * dt * (a + b);
        }
    }
    let mut y1 = Vec::with_capacity(steps + 1);
    for (j, c) in cum.iter().enumerate() {
        let s = -((steps - j) as f64) * dt;
        let es = s.exp();
        y1.push((0..m).map(|i| -es * x.x0[i] - es * c[i]).collect());
    }
    let y0: Vec<f64> = x.x0.iter().map(|v| -v).collect();
    DomainAPoint(HilbertPoint { x0: y0, x1: y1, dt })
}

/// `(A − I) x = (−x₀, ẋ₁ − x₁)`: central differences inside, second-order
/// one-sided stencils at both ends of the stored grid.
pub fn apply_generator_minus_id(x: &DomainAPoint) -> Result<HilbertPoint> {
    let p = &x.0;
    let steps = p.history_steps();
    if steps < 2 {
        return Err(PpdeError::InvalidInput("need at least three history samples".into()));
    }
    let m = p.m();
    let dt = p.dt;
    let mut y1 = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let deriv: Vec<f64> = (0..m)
            .map(|i| {
                if j == 0 {
                    (-3.0 * p.x1[0][i] + 4.0 * p.x1[1][i] - p.x1[2][i]) / (2.0 * dt)
                } else if j == steps {
                    (3.0 * p.x1[steps][i] - 4.0 * p.x1[steps - 1][i] + p.x1[steps - 2][i])
                        / (2.0 * dt)
                } else {
                    (p.x1[j + 1][i] - p.x1[j - 1][i]) / (2.0 * dt)
                }
            })
            .collect();
        y1.push((0..m).map(|i| deriv[i] - p.x1[j][i]).collect());
    }
    Ok(HilbertPoint { x0: p.x0.iter().map(|v| -v).collect(), x1: y1, dt })
}

/// Resolvent-weighted norm: quadrature on the stored grid plus the
/// closed-form exponential tail (the history vanishes beyond the grid, so
/// the integrand below it is exactly `e^{2s}|x₀ + ∫ e^{−r}x₁|²`).
pub fn resolvent_norm(x: &HilbertPoint) -> f64 {
    let steps = x.history_steps();
    let m = x.m();
    let dt = x.dt;
    let mut cum = vec![vec![0.0; m]; steps + 1];
    #[allow(clippy::needless_range_loop)]
    for j in (0..steps).rev() {
        let s_j = -((steps - j) as f64) * dt;
        let s_next = s_j + dt;
        for i in 0..m {
            let a = (-s_j).exp() * x.x1[j][i];
            let b = (-s_next).exp() * x.x1[j + 1][i];
            cum[j][i] = cum[j + 1][i] + 0.5 * dt * (a + b);
        }
    }
    let g_sq: Vec<f64> = (0..=steps)
        .map(|j| {
            let s = -((steps - j) as f64) * dt;
            let es = s.exp();
            (0..m).map(|i| (es * (x.x0[i] + cum[j][i])).powi(2)).sum()
        })
        .collect();
    let body = trapezoid(&g_sq, dt);
    let t_ext = steps as f64 * dt;
    let tail_w: f64 = (0..m).map(|i| (x.x0[i] + cum[0][i]).powi(2)).sum();
    let tail = (-2.0 * t_ext).exp() / 2.0 * tail_w;
    let head: f64 = x.x0.iter().map(|v| v * v).sum();
    (head + body + tail).sqrt()
}

/// Weak pseudo-metric on space-time points matching the resolvent norm of
/// the lift: current values, running integrals, and an L² average of
/// windowed integrals over all window lengths.
pub fn resolvent_metric(a: &SpaceTimePoint, b: &SpaceTimePoint) -> Result<f64> {
    if a.path.dt != b.path.dt || a.path.m() != b.path.m() {
        return Err(PpdeError::GridMismatch("metric needs a shared grid".into()));
    }
    let dt = a.path.dt;
    let m = a.path.m();
    let n = a.path.n_steps().max(b.path.n_steps());

    // running integrals I(j) = ∫_0^{j·dt} ω by trapezoid
    let running = |p: &SpaceTimePoint| -> Vec<Vec<f64>> {
        let mut acc = vec![vec![0.0; m]];
        for j in 1..=p.t_index {
            let prev = &acc[j - 1];
            let next: Vec<f64> = (0..m)
                .map(|i| prev[i] + 0.5 * dt * (p.path.at(j - 1)[i] + p.path.at(j)[i]))
                .collect();
            acc.push(next);
        }
        acc
    };
    let ia = running(a);
    let ib = running(b);
    let full_a = &ia[a.t_index];
    let full_b = &ib[b.t_index];

    let head_t = (a.time() - b.time()).abs();
    let head_x: f64 =
        a.value().iter().zip(b.value()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let head_i: f64 =
        full_a.iter().zip(full_b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();

    // windowed integrals J(ρ) = ∫_{(t−ρ)∨0}^t ω = I(t) − I((t−ρ)∨0)
    let window_sq: Vec<f64> = (0..=n)
        .map(|k| {
            (0..m)
                .map(|i| {
                    let ja = full_a[i] - ia[a.t_index.saturating_sub(k)][i];
                    let jb = full_b[i] - ib[b.t_index.saturating_sub(k)][i];
                    (ja - jb) * (ja - jb)
                })
                .sum()
        })
        .collect();
    let body = trapezoid(&window_sq, dt).sqrt();
    Ok(head_t + head_x + head_i + body)
}

/// Grid convolution `∫_0^t ⟨f(r), ω(t − r)⟩ dr` by trapezoid.
pub fn conv_functional(f: &[Vec<f64>], theta: &SpaceTimePoint) -> Result<f64> {
    let t = theta.t_index;
    let m = theta.path.m();
    if f.len() < theta.path.n_steps() + 1 {
        return Err(PpdeError::GridMismatch("kernel shorter than the path grid".into()));
    }
    if f.iter().any(|v| v.len() != m) {
        return Err(PpdeError::GridMismatch("kernel dimension mismatch".into()));
    }
    let vals: Vec<f64> = (0..=t)
        .map(|j| (0..m).map(|i| f[j][i] * theta.path.at(t - j)[i]).sum())
        .collect();
    Ok(trapezoid(&vals, theta.path.dt))
}

/// One refinement rung of the continuity experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityRung {
    pub refinement: usize,
    pub metric_gap: f64,
    pub functional_gap: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub rungs: Vec<ContinuityRung>,
}

impl ContinuityReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.ratio).collect()
    }
}

/// Ratio sweep `|F(θ) − F(θ')| / d_B(θ, θ')` over a family of pairs whose
/// metric gap shrinks by construction; a bounded sweep witnesses weak
/// continuity of the convolution kernel, a growing one witnesses its
/// failure. Degenerate pairs are skipped.
pub fn conv_continuity_experiment(
    f_kernel: &dyn Fn(f64) -> f64,
    pairs: &[(SpaceTimePoint, SpaceTimePoint)],
) -> Result<ContinuityReport> {
    let mut rungs = Vec::new();
    for (k, (a, b)) in pairs.iter().enumerate() {
        let d = resolvent_metric(a, b)?;
        if d == 0.0 {
            continue;
        }
        let n = a.path.n_steps();
        let grid_f: Vec<Vec<f64>> =
            (0..=n).map(|j| vec![f_kernel(j as f64 * a.path.dt)]).collect();
        let fa = conv_functional(&grid_f, a)?;
        let fb = conv_functional(&grid_f, b)?;
        let gap = (fa - fb).abs();
        rungs.push(ContinuityRung {
            refinement: k,
            metric_gap: d,
            functional_gap: gap,
            ratio: gap / d,
        });
    }
    if rungs.is_empty() {
        return Err(PpdeError::EmptySet("all pairs were metrically degenerate".into()));
    }
    Ok(ContinuityReport { rungs })
}

/// Single-frequency oscillation family: pairs (flat path, sinusoid of
/// frequency `ν₀·2^k`) at the horizon, each on a grid fine enough to
/// resolve its frequency. The metric gap decays like `1/ν`.
pub fn oscillation_pairs(
    t_total: f64,
    base_freq: usize,
    refinements: usize,
    samples_per_period: usize,
) -> Vec<(SpaceTimePoint, SpaceTimePoint)> {
    let mut out = Vec::new();
    for k in 0..refinements {
        let freq = base_freq << k;
        let n = (samples_per_period * freq).max(16);
        let dt = t_total / n as f64;
        let flat = SpaceTimePoint::new(n, Path::zero(dt, n, 1)).unwrap();
        let osc_vals: Vec<f64> = (0..=n)
            .map(|j| (2.0 * std::f64::consts::PI * freq as f64 * j as f64 / n as f64).sin())
            .collect();
        let osc = SpaceTimePoint::new(n, Path::scalar(dt, &osc_vals).unwrap()).unwrap();
        out.push((flat, osc));
    }
    out
}

/// Shrinking-dipole family: a negative hat just before the midpoint and a
/// positive hat just after, total mass zero, width `w₀·4^{−k}`. The
/// windowed-integral term of the metric sees only a tent of height `q·w`
/// over a base of length `4w`, so the metric gap scales like `w^{3/2}`
/// while a kernel jumping at the midpoint picks up the full `q·w`.
pub fn dipole_pairs(
    t_total: f64,
    base_width_cells: usize,
    refinements: usize,
) -> Vec<(SpaceTimePoint, SpaceTimePoint)> {
    let mut out = Vec::new();
    for k in 0..refinements {
        // width in cells stays fixed while the grid refines 4× per rung
        let n = 16 * base_width_cells * 4usize.pow(k as u32);
        let dt = t_total / n as f64;
        let w = base_width_cells as f64 * 4.0 * dt; // hat half-base
        let mid = t_total / 2.0;
        let hat = |s: f64, center: f64| -> f64 {
            let z = 1.0 - (s - center).abs() / w;
            z.max(0.0)
        };
        let vals: Vec<f64> = (0..=n)
            .map(|j| {
                let s = j as f64 * dt;
                hat(s, mid + w) - hat(s, mid - w)
            })
            .collect();
        let flat = SpaceTimePoint::new(n, Path::zero(dt, n, 1)).unwrap();
        let dip = SpaceTimePoint::new(n, Path::scalar(dt, &vals).unwrap()).unwrap();
        out.push((flat, dip));
    }
    out
}

/// Trajectory of the lifted state along one scenario: before `t` the state
/// is frozen at `x`; afterwards the current value follows the scenario's
/// drift and martingale increments while the history window slides.
pub fn lifted_state_process(
    t_index: usize,
    x: &HilbertPoint,
    scenario: &Scenario,
    n_steps: usize,
) -> Result<Vec<HilbertPoint>> {
    if scenario.a.n_steps() < scenario.stop_index || n_steps < t_index {
        return Err(PpdeError::HorizonOverflow("scenario shorter than the horizon".into()));
    }
    let m = x.m();
    let mut out = Vec::with_capacity(n_steps + 1);
    #[allow(clippy::needless_range_loop)]
    for s in 0..=n_steps {
        if s <= t_index {
            out.push(x.clone());
            continue;
        }
        let el = s - t_index;
        let z0: Vec<f64> = (0..m)
            .map(|i| x.x0[i] + scenario.a.at(el)[i] + scenario.martingale.at(el)[i])
            .collect();
        let steps = x.history_steps() + el;
        let mut x1 = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            let back = steps - j;
            if back >= el {
                x1.push(x.history_at(back - el));
            } else {
                // Z₁(r) = Z₀ at global time r + s for r in (−(s−t), 0]
                let el_back = el - back;
                x1.push(
                    (0..m)
                        .map(|i| {
                            x.x0[i] + scenario.a.at(el_back)[i] + scenario.martingale.at(el_back)[i]
                        })
                        .collect(),
                );
            }
        }
        out.push(HilbertPoint { x0: z0, x1, dt: x.dt });
    }
    Ok(out)
}
