//! Discretized path space.
//!
//! Paths live on a uniform time grid `{0, dt, 2·dt, …}`, start at the
//! origin, and take values in ℝ^m. A space-time point pairs a grid index
//! with a path; all functionals of interest are *adapted*, i.e. they read
//! the path only up to the current index, so a point whose path is frozen
//! beyond its index carries the same information as the raw prefix.
//!
//! Besides shifts, concatenation and stopping, the module provides
//!
//! * the hitting index: first grid time `s` with `s + max_{r≤s}|ω_r| ≥ δ`,
//!   used to localize jet tests;
//! * the quadratic test monomial `α·t + ⟨β, ω_t⟩ + ½⟨γ ω_t, ω_t⟩`;
//! * the uniform pseudo-metric `|t−t'| + |ω_{t∧·} − ω'_{t'∧·}|_∞`;
//! * the backward p-metric, which compares the recent history of two paths
//!   read backward from their current times, with zero extension before
//!   time 0.

use crate::error::{PpdeError, Result};
use serde::{Deserialize, Serialize};

/// A path sampled on a uniform grid. `values[k]` is the position at time
/// `k·dt`; `values[0]` must be the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub dt: f64,
    pub values: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(PpdeError::InvalidInput("dt must be positive".into()));
        }
        if values.is_empty() {
            return Err(PpdeError::InvalidInput("path needs at least one grid point".into()));
        }
        let m = values[0].len();
        if m == 0 {
            return Err(PpdeError::InvalidInput("spatial dimension must be positive".into()));
        }
        if values.iter().any(|v| v.len() != m) {
            return Err(PpdeError::InvalidInput("ragged path values".into()));
        }
        if values[0].iter().any(|&x| x != 0.0) {
            return Err(PpdeError::InvalidInput("paths start at the origin".into()));
        }
        Ok(Path { dt, values })
    }

    /// Scalar (m = 1) path from raw samples.
    pub fn scalar(dt: f64, values: &[f64]) -> Result<Self> {
        Path::new(dt, values.iter().map(|&x| vec![x]).collect())
    }

    /// The all-zero path on `n_steps + 1` grid points.
    pub fn zero(dt: f64, n_steps: usize, m: usize) -> Self {
        Path { dt, values: vec![vec![0.0; m]; n_steps + 1] }
    }

    pub fn m(&self) -> usize {
        self.values[0].len()
    }

    /// Number of steps, i.e. last valid index.
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Value at `idx`, clamped to the last stored point. Adapted reads past
    /// the stored horizon see the frozen value.
    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx.min(self.values.len() - 1)]
    }

    /// Euclidean norm of the value at `idx`.
    pub fn norm_at(&self, idx: usize) -> f64 {
        self.at(idx).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Freeze the path at `idx`: values beyond it are replaced by the value
    /// at `idx`, the grid length is preserved.
    pub fn frozen_at(&self, idx: usize) -> Path {
        let idx = idx.min(self.n_steps());
        let mut values = self.values.clone();
        let pin = values[idx].clone();
        for v in values.iter_mut().skip(idx + 1) {
            v.clone_from(&pin);
        }
        Path { dt: self.dt, values }
    }

    fn same_grid(&self, other: &Path) -> Result<()> {
        if self.dt != other.dt || self.m() != other.m() {
            return Err(PpdeError::GridMismatch(format!(
                "dt {} vs {}, m {} vs {}",
                self.dt,
                other.dt,
                self.m(),
                other.m()
            )));
        }
        Ok(())
    }
}

/// A pair (time index, path); the evaluation point of every path functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub t_index: usize,
    pub path: Path,
}

impl SpaceTimePoint {
    pub fn new(t_index: usize, path: Path) -> Result<Self> {
        if t_index > path.n_steps() {
            return Err(PpdeError::InvalidInput(format!(
                "t_index {} beyond path horizon {}",
                t_index,
                path.n_steps()
            )));
        }
        Ok(SpaceTimePoint { t_index, path })
    }

    /// The origin point on an `n_steps` grid.
    pub fn origin(dt: f64, n_steps: usize, m: usize) -> Self {
        SpaceTimePoint { t_index: 0, path: Path::zero(dt, n_steps, m) }
    }

    /// Current time in time units.
    pub fn time(&self) -> f64 {
        self.t_index as f64 * self.path.dt
    }

    /// Current position.
    pub fn value(&self) -> &[f64] {
        self.path.at(self.t_index)
    }
}

/// Symmetric m×m matrix, stored row-major. Construction rejects
/// asymmetric data outright to keep every jet curvature exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    m: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(PpdeError::InvalidInput("matrix data length != m*m".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if data[i * m + j] != data[j * m + i] {
                    return Err(PpdeError::InvalidInput("asymmetric matrix rejected".into()));
                }
            }
        }
        Ok(SymMat { m, data })
    }

    pub fn zero(m: usize) -> Self {
        SymMat { m, data: vec![0.0; m * m] }
    }

    pub fn identity(m: usize) -> Self {
        let mut s = SymMat::zero(m);
        for i in 0..m {
            s.data[i * m + i] = 1.0;
        }
        s
    }

    /// Scalar curvature as a 1×1 matrix.
    pub fn scalar(c: f64) -> Self {
        SymMat { m: 1, data: vec![c] }
    }

    /// `c` times the identity.
    pub fn scaled_identity(m: usize, c: f64) -> Self {
        let mut s = SymMat::zero(m);
        for i in 0..m {
            s.data[i * m + i] = c;
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] = v;
        self.data[j * self.m + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    pub fn sub(&self, other: &SymMat) -> Result<SymMat> {
        if self.m != other.m {
            return Err(PpdeError::GridMismatch("matrix dimension mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(SymMat { m: self.m, data })
    }

    pub fn add(&self, other: &SymMat) -> Result<SymMat> {
        if self.m != other.m {
            return Err(PpdeError::GridMismatch("matrix dimension mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(SymMat { m: self.m, data })
    }

    /// Quadratic form ⟨γx, x⟩.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                acc += self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }

    /// Matrix-vector product γx.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.m == 1 {
            return vec![self.data[0]];
        }
        let mat = nalgebra::DMatrix::from_row_slice(self.m, self.m, &self.data);
        let mut ev: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Spectral decomposition: pairs (eigenvalue, unit eigenvector).
    pub fn eigenpairs(&self) -> Vec<(f64, Vec<f64>)> {
        if self.m == 1 {
            return vec![(self.data[0], vec![1.0])];
        }
        let mat = nalgebra::DMatrix::from_row_slice(self.m, self.m, &self.data);
        let se = mat.symmetric_eigen();
        (0..self.m)
            .map(|k| (se.eigenvalues[k], se.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |a, &l| a.max(l.abs()))
    }

    /// Positive semidefinite within `eps`.
    pub fn is_psd(&self, eps: f64) -> bool {
        self.eigenvalues().iter().all(|&l| l >= -eps)
    }
}

/// First- and second-order expansion data: time slope, space slope,
/// symmetric curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: SymMat,
}

impl Jet {
    pub fn new(alpha: f64, beta: Vec<f64>, gamma: SymMat) -> Result<Self> {
        if beta.len() != gamma.dim() {
            return Err(PpdeError::InvalidInput("jet dimensions disagree".into()));
        }
        Ok(Jet { alpha, beta, gamma })
    }

    /// Scalar (m = 1) jet.
    pub fn scalar(alpha: f64, beta: f64, gamma: f64) -> Self {
        Jet { alpha, beta: vec![beta], gamma: SymMat::scalar(gamma) }
    }

    pub fn m(&self) -> usize {
        self.beta.len()
    }
}

/// Paste `omega_prime` onto `omega` at index `t_index`: the result follows
/// `omega` up to the junction and then moves by the increments of
/// `omega_prime`, clipped at `omega`'s horizon.
pub fn concat(omega: &Path, t_index: usize, omega_prime: &Path) -> Result<Path> {
    omega.same_grid(omega_prime)?;
    let n = omega.n_steps();
    if t_index > n {
        return Err(PpdeError::InvalidInput(format!("t_index {t_index} beyond horizon {n}")));
    }
    let mut values = Vec::with_capacity(n + 1);
    values.extend_from_slice(&omega.values[..=t_index]);
    let base = omega.values[t_index].clone();
    for s in (t_index + 1)..=n {
        let inc = omega_prime.at(s - t_index);
        values.push(base.iter().zip(inc).map(|(b, i)| b + i).collect());
    }
    Ok(Path { dt: omega.dt, values })
}

/// Stop a point at index `s`: time clamps to `min(t, s)` and the path
/// freezes there.
pub fn stopped(theta: &SpaceTimePoint, s_index: usize) -> SpaceTimePoint {
    let t = theta.t_index.min(s_index);
    SpaceTimePoint { t_index: t, path: theta.path.frozen_at(t) }
}

/// View a functional `u` from the point `theta`: the shifted functional
/// evaluates `u` at time `(t + t') ∧ T` on the pasted path.
pub fn shift_functional<'a, F>(u: F, theta: &'a SpaceTimePoint) -> impl Fn(&SpaceTimePoint) -> f64 + 'a
where
    F: Fn(&SpaceTimePoint) -> f64 + 'a,
{
    let base = theta.clone();
    move |inner: &SpaceTimePoint| {
        let n = base.path.n_steps();
        let t_new = (base.t_index + inner.t_index).min(n);
        let pasted = concat(&base.path, base.t_index, &inner.path)
            .expect("shifted functional requires matching grids");
        u(&SpaceTimePoint { t_index: t_new, path: pasted })
    }
}

/// First grid index `s` with `s·dt + max_{r ≤ s} |ω_r| ≥ delta`, or `None`
/// when the level is not reached within the stored horizon.
pub fn hitting_index_opt(delta: f64, path: &Path) -> Option<usize> {
    debug_assert!(delta > 0.0);
    let mut running_max = 0.0f64;
    for s in 0..=path.n_steps() {
        running_max = running_max.max(path.norm_at(s));
        if s as f64 * path.dt + running_max >= delta {
            return Some(s);
        }
    }
    None
}

/// First grid index `s` with `s·dt + max_{r ≤ s} |ω_r| ≥ delta`, clipped at
/// the path horizon. Returns the horizon when the level is never reached.
pub fn hitting_index(delta: f64, path: &Path) -> usize {
    hitting_index_opt(delta, path).unwrap_or_else(|| path.n_steps())
}

/// The quadratic test monomial `α·t + ⟨β, ω_t⟩ + ½⟨γ ω_t, ω_t⟩`.
pub fn test_monomial(jet: &Jet, theta: &SpaceTimePoint) -> f64 {
    let x = theta.value();
    let lin: f64 = jet.beta.iter().zip(x).map(|(b, v)| b * v).sum();
    jet.alpha * theta.time() + lin + 0.5 * jet.gamma.quad_form(x)
}

/// Uniform pseudo-metric: `|t−t'| + sup_s |ω_{t∧s} − ω'_{t'∧s}|`.
pub fn sup_metric(a: &SpaceTimePoint, b: &SpaceTimePoint) -> Result<f64> {
    a.path.same_grid(&b.path)?;
    let mut dev = 0.0f64;
    for s in 0..=a.t_index.max(b.t_index) {
        let xa = a.path.at(s.min(a.t_index));
        let xb = b.path.at(s.min(b.t_index));
        let d: f64 = xa.iter().zip(xb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        dev = dev.max(d);
    }
    Ok((a.time() - b.time()).abs() + dev)
}

fn squared_gap_before(a: &SpaceTimePoint, b: &SpaceTimePoint, back: usize) -> f64 {
    // Squared distance `back` steps behind the current indices, with zero
    // extension before time 0.
    let m = a.path.m();
    let mut acc = 0.0;
    for i in 0..m {
        let xa = if back > a.t_index { 0.0 } else { a.path.at(a.t_index - back)[i] };
        let xb = if back > b.t_index { 0.0 } else { b.path.at(b.t_index - back)[i] };
        acc += (xa - xb) * (xa - xb);
    }
    acc
}

/// Backward p-metric: `|t−t'| + |ω_t − ω'_{t'}| + (Σ_k dt·|ω_{t−s_k} −
/// ω'_{t'−s_k}|^p)^{1/p}`, left-endpoint rule over the grid of `[0, T]`,
/// with paths extended by zero on negative times.
pub fn backward_metric(p: f64, a: &SpaceTimePoint, b: &SpaceTimePoint) -> Result<f64> {
    if p < 1.0 {
        return Err(PpdeError::InvalidInput("backward metric needs p >= 1".into()));
    }
    a.path.same_grid(&b.path)?;
    let dt = a.path.dt;
    let n = a.path.n_steps().max(b.path.n_steps());
    let head = squared_gap_before(a, b, 0).sqrt();
    let mut acc = 0.0f64;
    if p == 2.0 {
        for k in 0..n {
            acc += dt * squared_gap_before(a, b, k);
        }
        acc = acc.sqrt();
    } else if p == 1.0 {
        for k in 0..n {
            acc += dt * squared_gap_before(a, b, k).sqrt();
        }
    } else {
        for k in 0..n {
            acc += dt * squared_gap_before(a, b, k).sqrt().powf(p);
        }
        acc = acc.powf(1.0 / p);
    }
    Ok((a.time() - b.time()).abs() + head + acc)
}

/// Serialized form of a path: grid metadata header plus the sample array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFile {
    pub meta: GridMeta,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_steps: usize,
    pub dt: f64,
    pub m: usize,
}

impl PathFile {
    pub fn from_path(p: &Path) -> Self {
        PathFile {
            meta: GridMeta { n_steps: p.n_steps(), dt: p.dt, m: p.m() },
            values: p.values.clone(),
        }
    }

    pub fn into_path(self) -> Result<Path> {
        let p = Path::new(self.meta.dt, self.values)?;
        if p.n_steps() != self.meta.n_steps || p.m() != self.meta.m {
            return Err(PpdeError::GridMismatch("header disagrees with samples".into()));
        }
        Ok(p)
    }
}

/// Write a path as CSV rows `t, ω_1, …, ω_m`.
pub fn path_to_csv<W: std::io::Write>(path: &Path, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let m = path.m();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("omega_{i}")));
    wtr.write_record(&header).map_err(|e| PpdeError::Io(std::io::Error::other(e)))?;
    for (k, v) in path.values.iter().enumerate() {
        let mut row = vec![format!("{}", k as f64 * path.dt)];
        row.extend(v.iter().map(|x| format!("{x}")));
        wtr.write_record(&row).map_err(|e| PpdeError::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a path written by [`path_to_csv`]; `dt` is recovered from the time
/// column.
pub fn path_from_csv<R: std::io::Read>(r: R) -> Result<Path> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| PpdeError::InvalidInput(format!("csv: {e}")))?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| PpdeError::InvalidInput(format!("csv number: {e}")))?;
        if nums.len() < 2 {
            return Err(PpdeError::InvalidInput("csv row needs t plus one coordinate".into()));
        }
        times.push(nums[0]);
        rows.push(nums[1..].to_vec());
    }
    if rows.len() < 2 {
        return Err(PpdeError::InvalidInput("csv path needs at least two rows".into()));
    }
    let dt = times[1] - times[0];
    Path::new(dt, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_point(dt: f64, t_index: usize, values: &[f64]) -> SpaceTimePoint {
        SpaceTimePoint::new(t_index, Path::scalar(dt, values).unwrap()).unwrap()
    }

    #[test]
    fn concat_at_zero_is_identity() {
        let omega = Path::scalar(0.25, &[0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        let other = Path::scalar(0.25, &[0.0, -1.0, 2.0, -3.0, 4.0]).unwrap();
        assert_eq!(concat(&omega, 0, &other).unwrap(), other);
    }

    #[test]
    fn concat_with_zero_freezes() {
        let omega = Path::scalar(0.25, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let zero = Path::zero(0.25, 4, 1);
        let glued = concat(&omega, 2, &zero).unwrap();
        assert_eq!(glued, Path::scalar(0.25, &[0.0, 1.0, 2.0, 2.0, 2.0]).unwrap());
    }

    #[test]
    fn concat_hand_case() {
        // m=1, T=1, N=4, junction at index 2.
        let omega = Path::scalar(0.25, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let other = Path::scalar(0.25, &[0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        let glued = concat(&omega, 2, &other).unwrap();
        assert_eq!(glued, Path::scalar(0.25, &[0.0, 0.25, 0.5, 1.0, 1.5]).unwrap());
    }

    #[test]
    fn concat_rejects_grid_mismatch() {
        let omega = Path::scalar(0.25, &[0.0, 1.0]).unwrap();
        let other = Path::scalar(0.5, &[0.0, 1.0]).unwrap();
        assert!(concat(&omega, 0, &other).is_err());
    }

    #[test]
    fn stopped_late_is_noop() {
        let theta = scalar_point(0.25, 2, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let s = stopped(&theta, 4);
        assert_eq!(s.t_index, 2);
        assert_eq!(s.path.values, vec![vec![0.0], vec![1.0], vec![2.0], vec![2.0], vec![2.0]]);
    }

    #[test]
    fn stopped_at_zero_gives_zero_path() {
        let theta = scalar_point(0.25, 0, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let s = stopped(&theta, 3);
        assert_eq!(s.t_index, 0);
        assert_eq!(s.path, Path::zero(0.25, 4, 1));
    }

    #[test]
    fn stopped_hand_case() {
        let theta = scalar_point(0.25, 4, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let s = stopped(&theta, 2);
        assert_eq!(s.t_index, 2);
        assert_eq!(s.path, Path::scalar(0.25, &[0.0, 1.0, 2.0, 2.0, 2.0]).unwrap());
    }

    #[test]
    fn shift_at_origin_is_identity() {
        let u = |th: &SpaceTimePoint| th.time() + th.value()[0];
        let origin = SpaceTimePoint::origin(0.25, 4, 1);
        let shifted = shift_functional(u, &origin);
        let probe = scalar_point(0.25, 3, &[0.0, 1.0, -1.0, 0.5, 0.0]);
        assert_eq!(shifted(&probe), u(&probe));
    }

    #[test]
    fn shift_of_constant_is_constant() {
        let u = |_: &SpaceTimePoint| 7.5;
        let theta = scalar_point(0.25, 2, &[0.0, 1.0, 2.0, 2.0, 2.0]);
        let shifted = shift_functional(u, &theta);
        let probe = scalar_point(0.25, 1, &[0.0, -3.0, 0.0, 0.0, 0.0]);
        assert_eq!(shifted(&probe), 7.5);
    }

    #[test]
    fn shift_of_current_value() {
        // u(t', ω') = ω'(t'); shifted by θ = (t, ω) it reads ω(t) + ω'(t')
        // as long as t + t' stays inside the horizon.
        let u = |th: &SpaceTimePoint| th.value()[0];
        let theta = scalar_point(0.25, 2, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let shifted = shift_functional(u, &theta);
        let probe = scalar_point(0.25, 1, &[0.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(shifted(&probe), 2.0 + 0.5);
    }

    #[test]
    fn hitting_index_zero_path() {
        let path = Path::zero(0.1, 10, 1);
        assert_eq!(hitting_index(0.35, &path), 4); // grid ceiling of 0.35
    }

    #[test]
    fn hitting_index_never_reached() {
        let path = Path::scalar(0.1, &[0.0, 0.1, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!(hitting_index(10.0, &path), 4);
    }

    #[test]
    fn hitting_index_unit_slope() {
        let vals: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let path = Path::scalar(0.1, &vals).unwrap();
        // s·dt + s·dt ≥ 0.5 first at s = 3 (0.3 + 0.3 = 0.6).
        assert_eq!(hitting_index(0.5, &path), 3);
    }

    #[test]
    fn monomial_vanishes_at_time_zero() {
        let jet = Jet::scalar(3.0, -2.0, 5.0);
        let origin = SpaceTimePoint::origin(0.1, 4, 1);
        assert_eq!(test_monomial(&jet, &origin), 0.0);
    }

    #[test]
    fn monomial_pure_time() {
        let jet = Jet::scalar(1.0, 0.0, 0.0);
        let theta = scalar_point(0.1, 3, &[0.0, 1.0, -1.0, 2.0, 0.0]);
        assert!((test_monomial(&jet, &theta) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn monomial_hand_value() {
        let jet = Jet::scalar(0.0, 2.0, 4.0);
        let theta = scalar_point(0.1, 2, &[0.0, 0.25, 0.5]).clone();
        // 2·0.5 + ½·4·0.25 = 1.5
        assert!((test_monomial(&jet, &theta) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sup_metric_stopped_prefixes() {
        let a = scalar_point(0.5, 2, &[0.0, 1.0, 3.0]);
        let b = scalar_point(0.5, 1, &[0.0, 1.0, 3.0]);
        // |t-t'| = 0.5; stopped prefixes deviate at s=2: |3-1| = 2.
        assert!((sup_metric(&a, &b).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn backward_metric_hand_case() {
        // θ = (T, 0), θ' = (T, unit slope), p = 1, T = 1, N = 4:
        // |ω_T − ω'_T| = 1 plus the left-endpoint sum 0.25·(1+0.75+0.5+0.25).
        let a = scalar_point(0.25, 4, &[0.0; 5]);
        let b = scalar_point(0.25, 4, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let d = backward_metric(1.0, &a, &b).unwrap();
        assert!((d - (1.0 + 0.625)).abs() < 1e-12);

        // Double-resolution quadrature oracle: the same pair on the N = 8
        // grid; the left-endpoint sums differ by O(dt).
        let fine: Vec<f64> = (0..=8).map(|k| k as f64 * 0.125).collect();
        let a8 = scalar_point(0.125, 8, &[0.0; 9]);
        let b8 = scalar_point(0.125, 8, &fine);
        let d8 = backward_metric(1.0, &a8, &b8).unwrap();
        assert!((d - d8).abs() <= 0.25, "coarse {d} vs refined {d8}");
    }

    #[test]
    fn path_csv_roundtrip() {
        let p = Path::scalar(0.25, &[0.0, 1.0, -0.5, 0.25, 0.0]).unwrap();
        let mut buf = Vec::new();
        path_to_csv(&p, &mut buf).unwrap();
        let q = path_from_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn path_json_header_checked() {
        let p = Path::scalar(0.25, &[0.0, 1.0, 2.0]).unwrap();
        let f = PathFile::from_path(&p);
        let js = serde_json::to_string(&f).unwrap();
        let g: PathFile = serde_json::from_str(&js).unwrap();
        assert_eq!(g.into_path().unwrap(), p);
    }

    fn arb_scalar_path(n: usize) -> impl Strategy<Value = Path> {
        proptest::collection::vec(-5.0f64..5.0, n).prop_map(move |mut v| {
            let mut values = vec![0.0];
            values.append(&mut v);
            Path::scalar(0.25, &values).unwrap()
        })
    }

    proptest! {
        #[test]
        fn concat_preserves_prefix(a in arb_scalar_path(6), b in arb_scalar_path(6), t in 0usize..=6) {
            let glued = concat(&a, t, &b).unwrap();
            for s in 0..=t {
                prop_assert_eq!(glued.at(s), a.at(s));
            }
        }

        #[test]
        fn hitting_index_monotone_in_delta(p in arb_scalar_path(8), d1 in 0.05f64..1.0, d2 in 0.05f64..1.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(hitting_index(lo, &p) <= hitting_index(hi, &p));
        }

        #[test]
        fn hitting_index_shrinks_under_enlargement(p in arb_scalar_path(8), scale in 1.0f64..4.0, delta in 0.05f64..2.0) {
            let big = Path::scalar(p.dt, &p.values.iter().map(|v| v[0] * scale).collect::<Vec<_>>()).unwrap();
            prop_assert!(hitting_index(delta, &big) <= hitting_index(delta, &p));
        }

        #[test]
        fn monomial_zero_at_origin_time(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, gamma in -3.0f64..3.0, p in arb_scalar_path(5)) {
            let jet = Jet::scalar(alpha, beta, gamma);
            let theta = SpaceTimePoint::new(0, p).unwrap();
            prop_assert_eq!(test_monomial(&jet, &theta), 0.0);
        }

        #[test]
        fn sup_metric_symmetric(a in arb_scalar_path(6), b in arb_scalar_path(6), ta in 0usize..=6, tb in 0usize..=6) {
            let pa = SpaceTimePoint::new(ta, a).unwrap();
            let pb = SpaceTimePoint::new(tb, b).unwrap();
            prop_assert_eq!(sup_metric(&pa, &pb).unwrap(), sup_metric(&pb, &pa).unwrap());
        }

        #[test]
        fn backward_metric_zero_means_same_stopped_prefix(a in arb_scalar_path(6), ta in 0usize..=6, tb in 0usize..=6) {
            let pa = SpaceTimePoint::new(ta, a.clone()).unwrap();
            let pb = SpaceTimePoint::new(tb, a.frozen_at(tb)).unwrap();
            let d = backward_metric(2.0, &pa, &pb).unwrap();
            if d == 0.0 {
                prop_assert_eq!(ta, tb);
                for s in 0..=ta {
                    prop_assert_eq!(pa.path.at(s), pb.path.at(s));
                }
            }
        }

        #[test]
        fn backward_metric_triangle(a in arb_scalar_path(5), b in arb_scalar_path(5), c in arb_scalar_path(5),
                                    ta in 0usize..=5, tb in 0usize..=5, tc in 0usize..=5) {
            let pa = SpaceTimePoint::new(ta, a).unwrap();
            let pb = SpaceTimePoint::new(tb, b).unwrap();
            let pc = SpaceTimePoint::new(tc, c).unwrap();
            let ab = backward_metric(2.0, &pa, &pb).unwrap();
            let bc = backward_metric(2.0, &pb, &pc).unwrap();
            let ac = backward_metric(2.0, &pa, &pc).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn sup_metric_dominates_backward(a in arb_scalar_path(6), b in arb_scalar_path(6),
                                         ta in 0usize..=6, tb in 0usize..=6, p in 1.0f64..3.0) {
            // backward ≤ |t−t'| + |ω_t−ω'_{t'}| + T^{1/p}·(sup deviation of
            // stopped prefixes), so sup_metric controls it up to (1+T^{1/p}).
            let pa = SpaceTimePoint::new(ta, a).unwrap();
            let pb = SpaceTimePoint::new(tb, b).unwrap();
            let t_total = pa.path.dt * pa.path.n_steps() as f64;
            let bw = backward_metric(p, &pa, &pb).unwrap();
            let head: f64 = pa.value().iter().zip(pb.value()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let dtime = (pa.time() - pb.time()).abs();
            // max deviation over backward-aligned reads, which zero
            // extension bounds by the largest pointwise gap seen.
            let mut dev = 0.0f64;
            for k in 0..=pa.path.n_steps() {
                dev = dev.max(super::squared_gap_before(&pa, &pb, k).sqrt());
            }
            prop_assert!(bw <= dtime + head + t_total.powf(1.0 / p) * dev + 1e-9);
        }
    }
}
