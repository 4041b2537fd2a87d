//! The Hölder kernel classes, their validators, and the LP-based
//! evaluation of the intrinsic amplitudes.
//!
//! A kernel lives on its own endpoint-inclusive grid over `[-R, R]^n`
//! (R = 1 for the compactly supported class). Class membership is a set of
//! linear constraints on the node values — box bounds from the decay
//! envelope, all-pairs Hölder bounds, and a zero-mean equality — so the
//! amplitude `sup_φ |f*φ_t(y)|` over a class is a linear program. The
//! feasible set is symmetric under negation, so one maximize solves the
//! sup of the absolute value.

use crate::error::{Error, Result};
use crate::grid::{Point, SampledField};
use crate::lp::{solve_holder_lp, HolderLp, LpDiagnostics, PairSystem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A sampled candidate kernel for one of the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestKernel {
    dim: usize,
    radius: f64,
    nodes_per_axis: usize,
    values: Vec<f64>,
    pub alpha: f64,
    pub eps: Option<f64>,
    /// When set, interpolation is truncated to the closed unit ball, so the
    /// continuum extension keeps the class's exact support.
    ball_support: bool,
}

impl TestKernel {
    pub fn new(
        dim: usize,
        radius: f64,
        nodes_per_axis: usize,
        values: Vec<f64>,
        alpha: f64,
        eps: Option<f64>,
    ) -> Result<TestKernel> {
        if dim == 0 || dim > 2 {
            return Err(Error::invalid(format!("kernel dim must be 1 or 2, got {dim}")));
        }
        if nodes_per_axis < 3 || nodes_per_axis % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel nodes per axis must be odd and >= 3, got {nodes_per_axis}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("kernel radius must be positive, got {radius}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let expect = nodes_per_axis.pow(dim as u32);
        if values.len() != expect {
            return Err(Error::invalid(format!(
                "kernel value count {} does not match {expect}",
                values.len()
            )));
        }
        Ok(TestKernel {
            dim,
            radius,
            nodes_per_axis,
            values,
            alpha,
            eps,
            ball_support: eps.is_none(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn step(&self) -> f64 {
        self.radius / self.half() as f64
    }

    fn half(&self) -> usize {
        (self.nodes_per_axis - 1) / 2
    }

    /// Node coordinate along an axis, bitwise antisymmetric about 0.
    pub fn axis_node(&self, i: usize) -> f64 {
        let half = self.half();
        if i == half {
            0.0
        } else if i < half {
            -((half - i) as f64 * self.step())
        } else {
            (i - half) as f64 * self.step()
        }
    }

    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        if self.dim == 1 {
            ix
        } else {
            ix * self.nodes_per_axis + iy
        }
    }

    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        if self.dim == 1 {
            (idx, 0)
        } else {
            (idx / self.nodes_per_axis, idx % self.nodes_per_axis)
        }
    }

    pub fn node(&self, idx: usize) -> Point {
        let (ix, iy) = self.unflat(idx);
        let mut p = [0.0; 2];
        p[0] = self.axis_node(ix);
        if self.dim == 2 {
            p[1] = self.axis_node(iy);
        }
        p
    }

    pub fn node_norm(&self, idx: usize) -> f64 {
        let p = self.node(idx);
        if self.dim == 1 {
            p[0].abs()
        } else {
            (p[0] * p[0] + p[1] * p[1]).sqrt()
        }
    }

    /// Quadrature weight per node.
    pub fn quad_weight(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    /// Discrete integral `Σ φ_i h^n`.
    pub fn discrete_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.quad_weight()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L1 norm `Σ |φ_i| h^n`.
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.quad_weight()
    }

    /// Max over node pairs of `|φ_i - φ_j| / |z_i - z_j|^α`.
    pub fn holder_const(&self, alpha: f64) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let zi = self.node(i);
            for j in (i + 1)..n {
                let zj = self.node(j);
                let d = crate::grid::dist(zi, zj, self.dim);
                if d > 0.0 {
                    worst = worst.max((self.values[i] - self.values[j]).abs() / d.powf(alpha));
                }
            }
        }
        worst
    }

    /// Multilinear interpolation of the node values; zero outside the
    /// kernel grid, and zero outside the closed unit ball for
    /// ball-supported kernels.
    pub fn interp(&self, z: Point) -> f64 {
        if self.ball_support {
            let r = if self.dim == 1 { z[0].abs() } else { (z[0] * z[0] + z[1] * z[1]).sqrt() };
            if r > 1.0 {
                return 0.0;
            }
        }
        let m = self.nodes_per_axis;
        let bracket = |x: f64| -> Option<(usize, usize, f64)> {
            if x < -self.radius || x > self.radius {
                return None;
            }
            let r = (x + self.radius) / self.step();
            let i0 = (r.floor() as usize).min(m - 2);
            Some((i0, i0 + 1, (r - i0 as f64).clamp(0.0, 1.0)))
        };
        match self.dim {
            1 => match bracket(z[0]) {
                None => 0.0,
                Some((i0, i1, w)) => (1.0 - w) * self.values[i0] + w * self.values[i1],
            },
            _ => match (bracket(z[0]), bracket(z[1])) {
                (Some((x0, x1, wx)), Some((y0, y1, wy))) => {
                    let v00 = self.values[self.flat(x0, y0)];
                    let v01 = self.values[self.flat(x0, y1)];
                    let v10 = self.values[self.flat(x1, y0)];
                    let v11 = self.values[self.flat(x1, y1)];
                    (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01)
                        + wx * ((1.0 - wy) * v10 + wy * v11)
                }
                _ => 0.0,
            },
        }
    }

    /// Evaluates the dilated kernel `φ_t(u) = t^{-n} φ(u/t)`.
    pub fn dilated(&self, u: Point, t: f64) -> f64 {
        let z = [u[0] / t, u[1] / t];
        self.interp(z) / t.powi(self.dim as i32)
    }

    pub fn scaled(&self, c: f64) -> TestKernel {
        let mut k = self.clone();
        k.values.iter_mut().for_each(|v| *v *= c);
        k
    }

    /// Samples a function on the kernel grid.
    pub fn from_fn(
        dim: usize,
        radius: f64,
        nodes_per_axis: usize,
        alpha: f64,
        eps: Option<f64>,
        f: impl Fn(Point) -> f64,
    ) -> Result<TestKernel> {
        let mut k = TestKernel::new(
            dim,
            radius,
            nodes_per_axis,
            vec![0.0; nodes_per_axis.pow(dim as u32)],
            alpha,
            eps,
        )?;
        for idx in 0..k.len() {
            k.values[idx] = f(k.node(idx));
        }
        Ok(k)
    }
}

/// Outcome of a class validation; carries the first violated constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub pass: bool,
    pub first_violation: Option<String>,
}

impl ValidationOutcome {
    fn ok() -> ValidationOutcome {
        ValidationOutcome { pass: true, first_violation: None }
    }

    fn fail(msg: String) -> ValidationOutcome {
        ValidationOutcome { pass: false, first_violation: Some(msg) }
    }
}

/// Constraint slack: stated tolerances are 1e-10 absolute on the mean and
/// a 1e-9 relative margin on the inequality constraints.
const MEAN_TOL: f64 = 1e-10;
const REL_SLACK: f64 = 1e-9;

/// Validates membership in the compactly supported class: support in the
/// unit ball, zero mean, all-pairs Hölder-α bound with constant 1, and the
/// support-Hölder box corollary `|φ(z)| ≤ (1-|z|)^α`.
pub fn validate_c_alpha(k: &TestKernel, alpha: f64) -> Result<ValidationOutcome> {
    if (k.radius - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "C_alpha kernels live on [-1,1]^n, got radius {}",
            k.radius
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1], got {alpha}")));
    }
    let n = k.len();
    for i in 0..n {
        let r = k.node_norm(i);
        let envelope = (1.0 - r).max(0.0).powf(alpha);
        if k.values[i].abs() > envelope * (1.0 + REL_SLACK) + 1e-12 {
            if r >= 1.0 {
                return Ok(ValidationOutcome::fail(format!(
                    "support: |φ| = {:.3e} at |z| = {r:.3} > 1",
                    k.values[i].abs()
                )));
            }
            return Ok(ValidationOutcome::fail(format!(
                "box: |φ| = {:.3e} > (1-|z|)^α = {envelope:.3e} at node {i}",
                k.values[i].abs()
            )));
        }
    }
    for i in 0..n {
        let zi = k.node(i);
        for j in (i + 1)..n {
            let zj = k.node(j);
            let rhs = crate::grid::dist(zi, zj, k.dim).powf(alpha);
            let lhs = (k.values[i] - k.values[j]).abs();
            if lhs > rhs * (1.0 + REL_SLACK) + 1e-12 {
                return Ok(ValidationOutcome::fail(format!(
                    "holder: |φ_i-φ_j| = {lhs:.3e} > |z_i-z_j|^α = {rhs:.3e} at pair ({i},{j})"
                )));
            }
        }
    }
    let m = k.discrete_mean();
    if m.abs() > MEAN_TOL {
        return Ok(ValidationOutcome::fail(format!("mean: |Σφ h^n| = {:.3e} > 1e-10", m.abs())));
    }
    Ok(ValidationOutcome::ok())
}

/// Decay envelope of the unbounded-support class.
pub fn decay_envelope(r: f64, dim: usize, eps: f64) -> f64 {
    (1.0 + r).powf(-(dim as f64) - eps)
}

/// Validates membership in the unbounded-support class truncated to
/// `[-R, R]^n`: decay bound, two-sided Hölder bound, zero mean.
pub fn validate_c_alpha_eps(k: &TestKernel, alpha: f64, eps: f64) -> Result<ValidationOutcome> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1], got {alpha}")));
    }
    let n = k.len();
    let delta: Vec<f64> = (0..n).map(|i| decay_envelope(k.node_norm(i), k.dim, eps)).collect();
    for i in 0..n {
        if k.values[i].abs() > delta[i] * (1.0 + REL_SLACK) + 1e-12 {
            return Ok(ValidationOutcome::fail(format!(
                "decay: |φ| = {:.3e} > (1+|z|)^(-n-ε) = {:.3e} at node {i}",
                k.values[i].abs(),
                delta[i]
            )));
        }
    }
    for i in 0..n {
        let zi = k.node(i);
        for j in (i + 1)..n {
            let zj = k.node(j);
            let rhs = crate::grid::dist(zi, zj, k.dim).powf(alpha) * (delta[i] + delta[j]);
            let lhs = (k.values[i] - k.values[j]).abs();
            if lhs > rhs * (1.0 + REL_SLACK) + 1e-12 {
                return Ok(ValidationOutcome::fail(format!(
                    "holder: |φ_i-φ_j| = {lhs:.3e} > rhs = {rhs:.3e} at pair ({i},{j})"
                )));
            }
        }
    }
    let m = k.discrete_mean();
    if m.abs() > MEAN_TOL {
        return Ok(ValidationOutcome::fail(format!("mean: |Σφ h^n| = {:.3e} > 1e-10", m.abs())));
    }
    Ok(ValidationOutcome::ok())
}

/// Largest constant `c = c(α, ε, n)` such that `c·φ` lies in the
/// unbounded-support class for every member `φ` of the compact class,
/// found by scanning the constraint families: the box part compares the
/// support-Hölder envelope `(1-r)^α` against the decay envelope, the
/// Hölder part compares constant 1 against the worst-case envelope sum
/// `2·2^(-n-ε)`.
pub fn class_inclusion_constant(alpha: f64, eps: f64, dim: usize) -> f64 {
    let mut c_box = f64::INFINITY;
    let steps = 10_000;
    for i in 0..steps {
        let r = i as f64 / steps as f64;
        let envelope = (1.0 - r).powf(alpha);
        if envelope > 1e-14 {
            c_box = c_box.min(decay_envelope(r, dim, eps) / envelope);
        }
    }
    let c_holder = 2.0 * decay_envelope(1.0, dim, eps);
    c_box.min(c_holder)
}

/// Solver configuration for the amplitude LPs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeSolverConfig {
    /// Kernel nodes per axis (odd, ≥ 21).
    pub kernel_nodes: usize,
    /// Relative optimality tolerance of the LP contract.
    pub lp_rel_tol: f64,
    /// Random feasible kernels drawn by the oracle check.
    pub oracle_samples: usize,
    /// Truncation radius for the unbounded-support class.
    pub truncation_radius: f64,
    /// In 2D, node counts above this per axis switch to the fixed
    /// dictionary lower bound (the all-pairs system grows as m^4).
    pub dictionary_threshold: usize,
    pub dictionary_size: usize,
}

impl Default for AmplitudeSolverConfig {
    fn default() -> Self {
        AmplitudeSolverConfig {
            kernel_nodes: 201,
            lp_rel_tol: 1e-6,
            oracle_samples: 1000,
            truncation_radius: 8.0,
            dictionary_threshold: 33,
            dictionary_size: 64,
        }
    }
}

impl AmplitudeSolverConfig {
    pub fn with_kernel_nodes(mut self, m: usize) -> Self {
        self.kernel_nodes = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_nodes < 21 || self.kernel_nodes % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel_nodes must be odd and >= 21, got {}",
                self.kernel_nodes
            )));
        }
        if !(self.truncation_radius >= 1.0) {
            return Err(Error::invalid(format!(
                "truncation_radius must be >= 1, got {}",
                self.truncation_radius
            )));
        }
        if !(self.lp_rel_tol > 0.0) {
            return Err(Error::invalid("lp_rel_tol must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmplitudeMethod {
    Lp,
    /// Max over the fixed feasible dictionary; a lower bound for the sup.
    DictionaryLowerBound,
}

/// Result of one amplitude evaluation.
#[derive(Debug, Clone)]
pub struct Amplitude {
    pub value: f64,
    pub method: AmplitudeMethod,
    pub diagnostics: Option<LpDiagnostics>,
    /// Kernel L1 mass whose sample points fell outside the field's box
    /// (zero when the field extends by closed form).
    pub truncated_kernel_mass: f64,
    /// For the truncated unbounded-support class: bound on the neglected
    /// tail `sup|f| · ∫_{|x|>R} (1+|x|)^{-n-ε}`.
    pub tail_bound: f64,
}

struct Objective {
    coeffs: Vec<f64>,
    truncated_mass: f64,
}

/// Assembles `c_i = f(y - t z_i) · h^n` over kernel nodes. Out-of-box
/// samples read the closed form when the field carries a preset tag, and
/// zero (recorded as truncation) otherwise.
fn assemble_objective(
    f: &SampledField,
    y: Point,
    t: f64,
    nodes: &KernelGeometry,
) -> Objective {
    let hq = nodes.quad_weight;
    let mut coeffs = Vec::with_capacity(nodes.coords.len());
    let mut truncated = 0.0;
    for z in &nodes.coords {
        let p = [y[0] - t * z[0], y[1] - t * z[1]];
        if f.grid().contains(p) {
            coeffs.push(f.interp(p) * hq);
        } else if let Some(preset) = f.preset() {
            coeffs.push(preset.eval(p, f.grid().dim()) * hq);
        } else {
            coeffs.push(0.0);
            truncated += hq;
        }
    }
    Objective { coeffs, truncated_mass: truncated }
}

struct KernelGeometry {
    dim: usize,
    m: usize,
    coords: Vec<Point>,
    norms: Vec<f64>,
    quad_weight: f64,
    /// (k·step)^α for 1D; ((dx²+dy²)^(1/2)·step)^α indexed dx*m+dy for 2D.
    dist_pow: Vec<f64>,
}

impl KernelGeometry {
    fn build(dim: usize, radius: f64, m: usize, alpha: f64) -> KernelGeometry {
        let template =
            TestKernel::new(dim, radius, m, vec![0.0; m.pow(dim as u32)], alpha, None).unwrap();
        let coords: Vec<Point> = (0..template.len()).map(|i| template.node(i)).collect();
        let norms: Vec<f64> = (0..template.len()).map(|i| template.node_norm(i)).collect();
        let step = template.step();
        let dist_pow = if dim == 1 {
            (0..m).map(|k| (k as f64 * step).powf(alpha)).collect()
        } else {
            let mut v = vec![0.0; m * m];
            for dx in 0..m {
                for dy in 0..m {
                    let d = ((dx * dx + dy * dy) as f64).sqrt() * step;
                    v[dx * m + dy] = d.powf(alpha);
                }
            }
            v
        };
        KernelGeometry { dim, m, coords, norms, quad_weight: template.step().powi(dim as i32), dist_pow }
    }

    fn pair_dist_pow(&self, i: usize, j: usize) -> f64 {
        if self.dim == 1 {
            self.dist_pow[i.abs_diff(j)]
        } else {
            let (ix, iy) = (i / self.m, i % self.m);
            let (jx, jy) = (j / self.m, j % self.m);
            self.dist_pow[ix.abs_diff(jx) * self.m + iy.abs_diff(jy)]
        }
    }

    fn axis_neighbors(&self) -> Vec<(u32, u32)> {
        let m = self.m;
        let mut pairs = Vec::new();
        if self.dim == 1 {
            for i in 0..m - 1 {
                pairs.push((i as u32, i as u32 + 1));
            }
        } else {
            for ix in 0..m {
                for iy in 0..m {
                    let a = (ix * m + iy) as u32;
                    if iy + 1 < m {
                        pairs.push((a, (ix * m + iy + 1) as u32));
                    }
                    if ix + 1 < m {
                        pairs.push((a, ((ix + 1) * m + iy) as u32));
                    }
                }
            }
        }
        pairs
    }
}

/// `A_α(f)(y, t)`: the sup of `|f*φ_t(y)|` over the compact class,
/// evaluated as an LP over kernel node values.
pub fn intrinsic_amplitude(
    f: &SampledField,
    y: Point,
    t: f64,
    alpha: f64,
    cfg: &AmplitudeSolverConfig,
) -> Result<Amplitude> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("scale t must be positive, got {t}")));
    }
    cfg.validate()?;
    let dim = f.grid().dim();
    let geo = KernelGeometry::build(dim, 1.0, effective_m(cfg, dim), alpha);
    let objective = assemble_objective(f, y, t, &geo);
    let bounds: Vec<f64> =
        geo.norms.iter().map(|&r| (1.0 - r).max(0.0).powf(alpha)).collect();

    if dim == 2 && cfg.kernel_nodes > cfg.dictionary_threshold {
        let dict = dictionary(alpha, None, cfg, dim);
        let value = dictionary_max(&objective.coeffs, &dict);
        return Ok(Amplitude {
            value,
            method: AmplitudeMethod::DictionaryLowerBound,
            diagnostics: None,
            truncated_kernel_mass: objective.truncated_mass,
            tail_bound: 0.0,
        });
    }

    let out = run_amplitude_lp(&objective, &bounds, &geo, cfg)?;
    Ok(Amplitude {
        value: out.0,
        method: AmplitudeMethod::Lp,
        diagnostics: Some(out.1),
        truncated_kernel_mass: objective.truncated_mass,
        tail_bound: 0.0,
    })
}

/// The tilde amplitude over the unbounded-support class truncated to
/// `[-R, R]^n`. ε > 0 is accepted; the theorem suites that need ε > α
/// enforce that themselves.
pub fn tilde_amplitude(
    f: &SampledField,
    y: Point,
    t: f64,
    alpha: f64,
    eps: f64,
    cfg: &AmplitudeSolverConfig,
) -> Result<Amplitude> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("scale t must be positive, got {t}")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    cfg.validate()?;
    let dim = f.grid().dim();
    let r = cfg.truncation_radius;
    let geo = KernelGeometry::build(dim, r, effective_m(cfg, dim), alpha);
    let objective = assemble_objective(f, y, t, &geo);
    let delta: Vec<f64> =
        geo.norms.iter().map(|&rr| decay_envelope(rr, dim, eps)).collect();
    let tail = f.linf() * decay_tail_mass(r, dim, eps);

    if dim == 2 && cfg.kernel_nodes > cfg.dictionary_threshold {
        let dict = dictionary(alpha, Some(eps), cfg, dim);
        let value = dictionary_max(&objective.coeffs, &dict);
        return Ok(Amplitude {
            value,
            method: AmplitudeMethod::DictionaryLowerBound,
            diagnostics: None,
            truncated_kernel_mass: objective.truncated_mass,
            tail_bound: tail,
        });
    }

    let scale = objective.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Ok(Amplitude {
            value: 0.0,
            method: AmplitudeMethod::Lp,
            diagnostics: Some(LpDiagnostics {
                m: geo.m,
                iterations: 0,
                objective: 0.0,
                certified_feasible: true,
            }),
            truncated_kernel_mass: objective.truncated_mass,
            tail_bound: tail,
        });
    }
    let normalized: Vec<f64> = objective.coeffs.iter().map(|c| c / scale).collect();
    let mean = vec![1.0; geo.coords.len()];
    let rhs = |i: usize, j: usize| geo.pair_dist_pow(i, j) * (delta[i] + delta[j]);
    let spec = HolderLp {
        objective: &normalized,
        bounds: &delta,
        mean: &mean,
        pairs: PairSystem { n: geo.coords.len(), rhs: &rhs, initial: geo.axis_neighbors() },
        tol: cfg.lp_rel_tol,
    };
    let out = solve_holder_lp(&spec)?;
    let mut diag = out.diagnostics;
    diag.m = geo.m;
    diag.objective = out.value * scale;
    Ok(Amplitude {
        value: out.value * scale,
        method: AmplitudeMethod::Lp,
        diagnostics: Some(diag),
        truncated_kernel_mass: objective.truncated_mass,
        tail_bound: tail,
    })
}

fn effective_m(cfg: &AmplitudeSolverConfig, dim: usize) -> usize {
    if dim == 2 {
        cfg.kernel_nodes.min(cfg.dictionary_threshold.max(21) | 1)
    } else {
        cfg.kernel_nodes
    }
}

fn run_amplitude_lp(
    objective: &Objective,
    bounds: &[f64],
    geo: &KernelGeometry,
    cfg: &AmplitudeSolverConfig,
) -> Result<(f64, LpDiagnostics)> {
    let scale = objective.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Ok((
            0.0,
            LpDiagnostics {
                m: geo.m,
                iterations: 0,
                objective: 0.0,
                certified_feasible: true,
            },
        ));
    }
    let normalized: Vec<f64> = objective.coeffs.iter().map(|c| c / scale).collect();
    let mean = vec![1.0; geo.coords.len()];
    let rhs = |i: usize, j: usize| geo.pair_dist_pow(i, j);
    let spec = HolderLp {
        objective: &normalized,
        bounds,
        mean: &mean,
        pairs: PairSystem { n: geo.coords.len(), rhs: &rhs, initial: geo.axis_neighbors() },
        tol: cfg.lp_rel_tol,
    };
    let out = solve_holder_lp(&spec)?;
    let mut diag = out.diagnostics;
    diag.m = geo.m;
    diag.objective = out.value * scale;
    Ok((out.value * scale, diag))
}

/// Objective value of a concrete kernel against the same quadrature the
/// LP uses; the oracle side of the amplitude check.
pub fn kernel_objective(f: &SampledField, y: Point, t: f64, k: &TestKernel) -> f64 {
    let hq = k.quad_weight();
    let mut acc = 0.0;
    for idx in 0..k.len() {
        let v = k.values()[idx];
        if v == 0.0 {
            continue;
        }
        let z = k.node(idx);
        let p = [y[0] - t * z[0], y[1] - t * z[1]];
        let fv = if f.grid().contains(p) {
            f.interp(p)
        } else if let Some(preset) = f.preset() {
            preset.eval(p, f.grid().dim())
        } else {
            0.0
        };
        acc += fv * v * hq;
    }
    acc
}

fn dictionary_max(coeffs: &[f64], dict: &[TestKernel]) -> f64 {
    let mut best = 0.0f64;
    for k in dict {
        let dot: f64 = coeffs.iter().zip(k.values()).map(|(c, v)| c * v).sum();
        best = best.max(dot.abs());
    }
    best
}

type DictKey = (u64, u64, usize, usize, u64);

fn dictionary(
    alpha: f64,
    eps: Option<f64>,
    cfg: &AmplitudeSolverConfig,
    dim: usize,
) -> Arc<Vec<TestKernel>> {
    static CACHE: OnceLock<Mutex<HashMap<DictKey, Arc<Vec<TestKernel>>>>> = OnceLock::new();
    let m = effective_m(cfg, dim);
    let key: DictKey = (
        alpha.to_bits(),
        eps.unwrap_or(0.0).to_bits(),
        m,
        dim,
        cfg.truncation_radius.to_bits(),
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("dictionary cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| {
            let kernels: Vec<TestKernel> = (0..cfg.dictionary_size as u64)
                .map(|seed| match eps {
                    None => random_feasible_kernel(alpha, seed, m, dim)
                        .expect("dictionary kernel construction"),
                    Some(e) => {
                        random_feasible_tilde_kernel(alpha, e, seed, m, cfg.truncation_radius, dim)
                            .expect("dictionary kernel construction")
                    }
                })
                .collect();
            Arc::new(kernels)
        })
        .clone()
}

/// Deterministic random member of the compact class: random node values
/// under the box envelope, the Hölder upper envelope (a min-plus pass,
/// valid because the snowflake metric satisfies the triangle inequality),
/// a clamp back into the box (safe: the box envelope is itself Hölder),
/// and an exact mean fix by scaling one sign class.
pub fn random_feasible_kernel(
    alpha: f64,
    seed: u64,
    nodes_per_axis: usize,
    dim: usize,
) -> Result<TestKernel> {
    let geo = KernelGeometry::build(dim, 1.0, nodes_per_axis, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = geo.coords.len();
    let bounds: Vec<f64> =
        geo.norms.iter().map(|&r| (1.0 - r).max(0.0).powf(alpha)).collect();
    let raw: Vec<f64> = bounds.iter().map(|&b| rng.random_range(-1.0..1.0) * b).collect();
    let mut phi = vec![0.0; n];
    for i in 0..n {
        let mut env = f64::INFINITY;
        for j in 0..n {
            env = env.min(raw[j] + geo.pair_dist_pow(i, j));
        }
        phi[i] = env.clamp(-bounds[i], bounds[i]);
    }
    crate::lp::repair_mean(&mut phi, &vec![1.0; n]);
    let k = TestKernel::new(dim, 1.0, nodes_per_axis, phi, alpha, None)?;
    debug_assert!(validate_c_alpha(&k, alpha)?.pass);
    Ok(k)
}

/// Deterministic random member of the truncated unbounded-support class:
/// a Hölder field times the decay envelope, scaled by the measured safety
/// factor that makes the product feasible, then mean-fixed.
pub fn random_feasible_tilde_kernel(
    alpha: f64,
    eps: f64,
    seed: u64,
    nodes_per_axis: usize,
    radius: f64,
    dim: usize,
) -> Result<TestKernel> {
    let geo = KernelGeometry::build(dim, radius, nodes_per_axis, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7eaa_11dd);
    let n = geo.coords.len();
    let delta: Vec<f64> = geo.norms.iter().map(|&r| decay_envelope(r, dim, eps)).collect();
    // Hölder-1 field g with |g| <= 1 via the min-plus envelope
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let mut env = f64::INFINITY;
        for j in 0..n {
            env = env.min(raw[j] + geo.pair_dist_pow(i, j));
        }
        g[i] = env.clamp(-1.0, 1.0);
    }
    // safety factor: s·(d^α δ_x + |δ_x - δ_y|) ≤ d^α (δ_x + δ_y) for all pairs
    let mut s = 1.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geo.pair_dist_pow(i, j);
            if d == 0.0 {
                continue;
            }
            let need = d * (delta[i] + delta[j]);
            let have = d * delta[i].max(delta[j]) + (delta[i] - delta[j]).abs();
            if have > 0.0 {
                s = s.min(need / have);
            }
        }
    }
    let mut phi: Vec<f64> = (0..n).map(|i| s * g[i] * delta[i]).collect();
    crate::lp::repair_mean(&mut phi, &vec![1.0; n]);
    let mut k = TestKernel::new(dim, radius, nodes_per_axis, phi, alpha, Some(eps))?;
    // guard against rounding at the feasibility edge
    let outcome = validate_c_alpha_eps(&k, alpha, eps)?;
    if !outcome.pass {
        k = k.scaled(1.0 - 1e-9);
    }
    debug_assert!(validate_c_alpha_eps(&k, alpha, eps)?.pass);
    Ok(k)
}

/// Mass of the decay envelope beyond the truncation radius.
pub fn decay_tail_mass(radius: f64, dim: usize, eps: f64) -> f64 {
    if dim == 1 {
        2.0 * (1.0 + radius).powf(-eps) / eps
    } else {
        2.0 * std::f64::consts::PI
            * ((1.0 + radius).powf(-eps) / eps - (1.0 + radius).powf(-1.0 - eps) / (1.0 + eps))
    }
}

/// The odd tent kernel: `φ(z) = z` on `[0, 1/2]`, `1-z` on `[1/2, 1]`, odd
/// extension; the variational optimum for linear fields at α = 1.
pub fn odd_tent_kernel(nodes_per_axis: usize) -> Result<TestKernel> {
    TestKernel::from_fn(1, 1.0, nodes_per_axis, 1.0, None, |z| {
        let r = z[0].abs();
        let v = if r <= 0.5 { r } else { (1.0 - r).max(0.0) };
        v * z[0].signum()
    })
}

/// Smooth unit-mass kernel `(1-r²)³` on the unit ball, normalized by its
/// discrete sum so the sampled integral is 1 to rounding.
pub fn unit_mass_kernel(dim: usize, nodes_per_axis: usize) -> Result<TestKernel> {
    let mut k = TestKernel::from_fn(dim, 1.0, nodes_per_axis, 1.0, None, |z| {
        let r2 = if dim == 1 { z[0] * z[0] } else { z[0] * z[0] + z[1] * z[1] };
        if r2 >= 1.0 {
            0.0
        } else {
            (1.0 - r2).powi(3)
        }
    })?;
    let mass = k.discrete_mean();
    if mass <= 0.0 {
        return Err(Error::Construction("degenerate unit-mass kernel".into()));
    }
    let inv = 1.0 / mass;
    k.values_mut().iter_mut().for_each(|v| *v *= inv);
    Ok(k)
}

/// `Lip(α,1,0)` seminorm: `sup_Q |Q|^(-1-α/n) ∫_Q |b - b_Q|` over the cube
/// family. Zero for constants; positively homogeneous.
pub fn lip_norm(
    b: &SampledField,
    alpha: f64,
    family: &crate::dyadic::CubeFamily,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::invalid("empty cube family".to_string()));
    }
    let grid = b.grid();
    let n = grid.dim() as f64;
    let hv = grid.cell_volume();
    let mut sup = 0.0f64;
    for cube in &family.cubes {
        let Some(ranges) = crate::dyadic::cube_cells(grid, cube) else {
            continue;
        };
        let mut sum = 0.0;
        let mut count = 0usize;
        for_cells(grid.dim(), ranges, |ix, iy| {
            sum += b.values()[grid.flat(ix, iy)];
            count += 1;
        });
        if count == 0 {
            continue;
        }
        let avg = sum / count as f64;
        let mut dev = 0.0;
        for_cells(grid.dim(), ranges, |ix, iy| {
            dev += (b.values()[grid.flat(ix, iy)] - avg).abs();
        });
        let volume = cube.volume();
        sup = sup.max(volume.powf(-1.0 - alpha / n) * dev * hv);
    }
    Ok(sup)
}

pub(crate) fn for_cells(dim: usize, ranges: [(usize, usize); 2], mut f: impl FnMut(usize, usize)) {
    if dim == 1 {
        for ix in ranges[0].0..ranges[0].1 {
            f(ix, 0);
        }
    } else {
        for ix in ranges[0].0..ranges[0].1 {
            for iy in ranges[1].0..ranges[1].1 {
                f(ix, iy);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Preset};

    #[test]
    fn zero_kernel_passes_both_validators() {
        let k = TestKernel::new(1, 1.0, 41, vec![0.0; 41], 0.7, None).unwrap();
        assert!(validate_c_alpha(&k, 0.7).unwrap().pass);
        let k2 = TestKernel::new(1, 8.0, 41, vec![0.0; 41], 0.7, Some(1.0)).unwrap();
        assert!(validate_c_alpha_eps(&k2, 0.7, 1.0).unwrap().pass);
    }

    #[test]
    fn odd_tent_passes_c_alpha() {
        let k = odd_tent_kernel(201).unwrap();
        let out = validate_c_alpha(&k, 1.0).unwrap();
        assert!(out.pass, "violation: {:?}", out.first_violation);
        assert!(k.discrete_mean().abs() < 1e-12);
    }

    #[test]
    fn constant_plateau_fails_validation() {
        let k = TestKernel::from_fn(1, 1.0, 41, 1.0, None, |z| {
            if z[0].abs() <= 1.0 {
                0.1
            } else {
                0.0
            }
        })
        .unwrap();
        let out = validate_c_alpha(&k, 1.0).unwrap();
        assert!(!out.pass);
    }

    #[test]
    fn decay_violation_detected() {
        // |φ(2)| = 0.5 > 3^{-2} for ε = 1, n = 1
        let k = TestKernel::from_fn(1, 8.0, 81, 1.0, Some(1.0), |z| {
            if (z[0] - 2.0).abs() < 0.05 {
                0.5
            } else {
                0.0
            }
        })
        .unwrap();
        let out = validate_c_alpha_eps(&k, 1.0, 1.0).unwrap();
        assert!(!out.pass);
        assert!(out.first_violation.unwrap().starts_with("decay"));
    }

    #[test]
    fn scaled_c_alpha_member_joins_tilde_class() {
        let c = class_inclusion_constant(1.0, 2.0, 1) * (1.0 - 1e-6);
        assert!(c > 0.0 && c <= 1.0);
        // resample a compact member on the wide grid and scale by c
        let tent = odd_tent_kernel(201).unwrap();
        let k = TestKernel::from_fn(1, 8.0, 321, 1.0, Some(2.0), |z| c * tent.interp(z)).unwrap();
        let mut vals = k.values().to_vec();
        crate::lp::repair_mean(&mut vals, &vec![1.0; 321]);
        let k = TestKernel::new(1, 8.0, 321, vals, 1.0, Some(2.0)).unwrap();
        let out = validate_c_alpha_eps(&k, 1.0, 2.0).unwrap();
        assert!(out.pass, "violation: {:?}", out.first_violation);
    }

    #[test]
    fn random_kernels_validate_and_negate() {
        for seed in 0..25 {
            let k = random_feasible_kernel(0.6, seed, 41, 1).unwrap();
            assert!(validate_c_alpha(&k, 0.6).unwrap().pass, "seed {seed}");
            let neg = k.scaled(-1.0);
            assert!(validate_c_alpha(&neg, 0.6).unwrap().pass, "negated seed {seed}");
            // determinism
            let again = random_feasible_kernel(0.6, seed, 41, 1).unwrap();
            assert_eq!(k.values(), again.values());
        }
        for seed in 0..10 {
            let k = random_feasible_tilde_kernel(0.8, 1.5, seed, 41, 4.0, 1).unwrap();
            assert!(validate_c_alpha_eps(&k, 0.8, 1.5).unwrap().pass, "seed {seed}");
        }
    }

    #[test]
    fn amplitude_annihilates_constants() {
        let grid = Grid::line(4.0, 0.125).unwrap();
        let f = SampledField::from_preset(grid, Preset::Constant { c: 3.0 }).unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(41);
        let a = intrinsic_amplitude(&f, [0.5, 0.0], 1.0, 1.0, &cfg).unwrap();
        assert!(a.value.abs() < 1e-9, "amplitude {}", a.value);
        // near the boundary the closed-form extension keeps it exact
        let a2 = intrinsic_amplitude(&f, [3.9, 0.0], 2.0, 1.0, &cfg).unwrap();
        assert!(a2.value.abs() < 1e-9);
    }

    #[test]
    fn linear_field_amplitude_is_quarter_t() {
        let grid = Grid::line(8.0, 0.0625).unwrap();
        let f = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(101);
        for &(y, t) in &[(0.0, 1.0), (1.5, 0.5), (-2.0, 2.0)] {
            let a = intrinsic_amplitude(&f, [y, 0.0], t, 1.0, &cfg).unwrap();
            let expected = t / 4.0;
            assert!(
                (a.value - expected).abs() < 0.02 * expected,
                "A({y},{t}) = {} vs {expected}",
                a.value
            );
            assert!(a.diagnostics.unwrap().certified_feasible);
        }
    }

    #[test]
    fn linearity_in_f() {
        // f = c1 x + c0 gives |c1| * A(x -> x)
        let grid = Grid::line(8.0, 0.0625).unwrap();
        let f = SampledField::from_preset(grid.clone(), Preset::Linear { c1: -3.0, c0: 2.0 }).unwrap();
        let id = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(61);
        let a = intrinsic_amplitude(&f, [1.0, 0.0], 0.75, 1.0, &cfg).unwrap();
        let b = intrinsic_amplitude(&id, [0.0, 0.0], 0.75, 1.0, &cfg).unwrap();
        assert!((a.value - 3.0 * b.value).abs() < 1e-8 * 3.0 * b.value.max(1e-12));
    }

    #[test]
    fn oracle_never_beats_lp() {
        let grid = Grid::line(4.0, 0.0625).unwrap();
        let f = SampledField::from_preset(
            grid,
            Preset::Bump { center: [0.3, 0.0], width: 1.2, amp: 1.0 },
        )
        .unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(41);
        let a = intrinsic_amplitude(&f, [0.0, 0.0], 0.7, 0.8, &cfg).unwrap();
        for seed in 0..200 {
            let k = random_feasible_kernel(0.8, seed, 41, 1).unwrap();
            let obj = kernel_objective(&f, [0.0, 0.0], 0.7, &k).abs();
            assert!(
                obj <= a.value + cfg.lp_rel_tol * a.value.max(1.0),
                "seed {seed}: oracle {obj} beats LP {}",
                a.value
            );
        }
    }

    #[test]
    fn tilde_dominates_scaled_intrinsic() {
        let grid = Grid::line(4.0, 0.0625).unwrap();
        let f = SampledField::from_preset(
            grid,
            Preset::Bump { center: [0.0, 0.0], width: 1.0, amp: 2.0 },
        )
        .unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(81);
        let (alpha, eps) = (1.0, 2.0);
        let c = class_inclusion_constant(alpha, eps, 1);
        let a = intrinsic_amplitude(&f, [0.2, 0.0], 0.5, alpha, &cfg).unwrap();
        let t = tilde_amplitude(&f, [0.2, 0.0], 0.5, alpha, eps, &cfg).unwrap();
        assert!(
            t.value >= c * a.value * (1.0 - 0.05),
            "tilde {} < c*intrinsic {}",
            t.value,
            c * a.value
        );
    }

    #[test]
    fn amplitude_2d_basics() {
        let grid = Grid::new(2, &[-2.0, -2.0], &[2.0, 2.0], 0.25).unwrap();
        let constant = SampledField::from_preset(grid.clone(), Preset::Constant { c: 1.0 }).unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(21);
        let a = intrinsic_amplitude(&constant, [0.0, 0.0], 0.5, 1.0, &cfg).unwrap();
        assert!(a.value.abs() < 1e-9);
        let linear = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let b = intrinsic_amplitude(&linear, [0.0, 0.0], 0.5, 1.0, &cfg).unwrap();
        assert!(b.value > 0.05, "2d linear amplitude {}", b.value);
    }

    #[test]
    fn dictionary_lower_bound_for_large_2d() {
        let grid = Grid::new(2, &[-2.0, -2.0], &[2.0, 2.0], 0.25).unwrap();
        let f = SampledField::from_preset(
            grid,
            Preset::Bump { center: [0.0, 0.0], width: 1.0, amp: 1.0 },
        )
        .unwrap();
        let mut cfg = AmplitudeSolverConfig::default();
        cfg.kernel_nodes = 41; // above the 2D threshold
        cfg.dictionary_size = 8;
        let a = intrinsic_amplitude(&f, [0.0, 0.0], 0.8, 1.0, &cfg).unwrap();
        assert_eq!(a.method, AmplitudeMethod::DictionaryLowerBound);
        assert!(a.value >= 0.0);
    }

    #[test]
    fn lip_norm_of_constants_is_zero_and_linear_is_quarter() {
        let grid = Grid::line(4.0, 0.03125).unwrap();
        let family = crate::dyadic::CubeFamily::default_for(&grid).unwrap();
        let c = SampledField::from_preset(grid.clone(), Preset::Constant { c: 7.0 }).unwrap();
        assert_eq!(lip_norm(&c, 1.0, &family).unwrap(), 0.0);
        let lin = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let v = lip_norm(&lin, 1.0, &family).unwrap();
        assert!((v - 0.25).abs() < 1e-3, "lip norm {v}");
    }

    #[test]
    fn truncation_is_reported_for_untagged_fields() {
        let grid = Grid::line(1.0, 0.0625).unwrap();
        let f = SampledField::from_fn(grid, |p| 1.0 - p[0].abs()).unwrap();
        let cfg = AmplitudeSolverConfig::default().with_kernel_nodes(41);
        // kernel window [y - t, y + t] pokes out of [-1, 1]
        let a = intrinsic_amplitude(&f, [0.5, 0.0], 1.0, 1.0, &cfg).unwrap();
        assert!(a.truncated_kernel_mass > 0.0);
    }
}
