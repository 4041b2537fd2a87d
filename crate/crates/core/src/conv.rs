//! Convolution quadrature `f * φ_t(y)` and cone integrals over the
//! ladder-discretized upper half-space.

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, SampledField};
use crate::kernel::TestKernel;
use crate::ladder::HalfSpaceLadder;
use crate::par::{map_indexed, Parallelism};

/// Minimum kernel nodes across the support for a meaningful quadrature.
pub const MIN_KERNEL_NODES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvResult {
    pub value: f64,
    /// Kernel L1 mass sampled outside the field's box (reads as zero there
    /// unless the field carries a closed-form tag).
    pub truncated_mass: f64,
}

/// `f*φ_t(y) = ∫ f(y - t z) φ(z) dz` by midpoint quadrature on the kernel
/// grid. Out-of-box samples use the field's closed form when tagged and
/// zero otherwise, with the zeroed kernel mass recorded as truncation.
pub fn convolve_at_detailed(
    f: &SampledField,
    k: &TestKernel,
    t: f64,
    y: Point,
) -> Result<ConvResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("scale t must be positive, got {t}")));
    }
    if k.nodes_per_axis() < MIN_KERNEL_NODES {
        return Err(Error::KernelTooCoarse { nodes: k.nodes_per_axis(), min: MIN_KERNEL_NODES });
    }
    let hq = k.quad_weight();
    let grid = f.grid();
    let mut acc = 0.0;
    let mut truncated = 0.0;
    for idx in 0..k.len() {
        let v = k.values()[idx];
        if v == 0.0 {
            continue;
        }
        let z = k.node(idx);
        let p = [y[0] - t * z[0], y[1] - t * z[1]];
        if grid.contains(p) {
            acc += f.interp(p) * v * hq;
        } else if let Some(preset) = f.preset() {
            acc += preset.eval(p, grid.dim()) * v * hq;
        } else {
            truncated += v.abs() * hq;
        }
    }
    Ok(ConvResult { value: acc, truncated_mass: truncated })
}

pub fn convolve_at(f: &SampledField, k: &TestKernel, t: f64, y: Point) -> Result<f64> {
    convolve_at_detailed(f, k, t, y).map(|r| r.value)
}

/// A function sampled on grid nodes × ladder levels, stored level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField {
    grid: Grid,
    ladder: HalfSpaceLadder,
    values: Vec<f64>,
    tag: String,
}

impl HalfSpaceField {
    pub fn from_values(
        grid: Grid,
        ladder: HalfSpaceLadder,
        values: Vec<f64>,
        tag: impl Into<String>,
    ) -> Result<HalfSpaceField> {
        if values.len() != grid.len() * ladder.len() {
            return Err(Error::invalid(format!(
                "half-space field size {} does not match {} nodes x {} levels",
                values.len(),
                grid.len(),
                ladder.len()
            )));
        }
        Ok(HalfSpaceField { grid, ladder, values, tag: tag.into() })
    }

    /// Samples `(y_i, t_j) -> F` over the whole ladder.
    pub fn build(
        grid: &Grid,
        ladder: &HalfSpaceLadder,
        mode: Parallelism,
        f: impl Fn(Point, f64) -> f64 + Sync + Send,
    ) -> HalfSpaceField {
        let n = grid.len();
        let levels = ladder.levels().to_vec();
        let values = map_indexed(n * levels.len(), mode, |flat| {
            let j = flat / n;
            let i = flat % n;
            f(grid.node(i), levels[j])
        });
        HalfSpaceField {
            grid: grid.clone(),
            ladder: ladder.clone(),
            values,
            tag: String::new(),
        }
    }

    /// Convolution field `f*φ_t(y)` for a fixed kernel (signed values).
    pub fn convolution(
        f: &SampledField,
        k: &TestKernel,
        ladder: &HalfSpaceLadder,
        mode: Parallelism,
    ) -> Result<HalfSpaceField> {
        if k.nodes_per_axis() < MIN_KERNEL_NODES {
            return Err(Error::KernelTooCoarse {
                nodes: k.nodes_per_axis(),
                min: MIN_KERNEL_NODES,
            });
        }
        let mut out = HalfSpaceField::build(f.grid(), ladder, mode, |y, t| {
            convolve_at(f, k, t, y).expect("kernel validated and ladder scales positive")
        });
        out.tag = format!("conv[{}]", k.nodes_per_axis());
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ladder(&self) -> &HalfSpaceLadder {
        &self.ladder
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn set_tag(&mut self, tag: impl Into<String>) {
        self.tag = tag.into();
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, level: usize, node: usize) -> f64 {
        self.values[level * self.grid.len() + node]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> HalfSpaceField {
        HalfSpaceField {
            grid: self.grid.clone(),
            ladder: self.ladder.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            tag: self.tag.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Nodes with `|x - y| < β t`, as a flat index range per axis window.
    fn cone_nodes(&self, x: Point, beta: f64, t: f64) -> Vec<usize> {
        let g = &self.grid;
        let r = beta * t;
        let mut out = Vec::new();
        if g.dim() == 1 {
            let (s, e) = axis_window(g, 0, x[0], r);
            for i in s..e {
                if (g.axis_coord(0, i) - x[0]).abs() < r {
                    out.push(i);
                }
            }
        } else {
            let (sx, ex) = axis_window(g, 0, x[0], r);
            let (sy, ey) = axis_window(g, 1, x[1], r);
            for ix in sx..ex {
                let dx = g.axis_coord(0, ix) - x[0];
                for iy in sy..ey {
                    let dy = g.axis_coord(1, iy) - x[1];
                    if (dx * dx + dy * dy).sqrt() < r {
                        out.push(g.flat(ix, iy));
                    }
                }
            }
        }
        out
    }
}

fn axis_window(g: &Grid, ax: usize, center: f64, radius: f64) -> (usize, usize) {
    let lo = center - radius;
    let hi = center + radius;
    let h = g.spacing();
    let first = g.axis_coord(ax, 0);
    let start = (((lo - first) / h).floor().max(0.0) as usize).min(g.cells(ax));
    let end = ((((hi - first) / h).ceil() + 1.0).max(0.0) as usize).min(g.cells(ax));
    (start, end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeIntegral {
    pub value: f64,
    /// True when the cone missed the grid at every level.
    pub degenerate: bool,
}

/// `∬_{Γ_β(x)} F(y,t) dy dt / t^{n+1}` on the ladder:
/// `Σ_j Σ_{|x-y_i| < β t_j} F(y_i, t_j) h^n ln ρ / t_j^n`.
/// Deterministic left-to-right summation within and across levels.
pub fn cone_integral_detailed(
    field: &HalfSpaceField,
    x: Point,
    beta: f64,
) -> Result<ConeIntegral> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("aperture beta must be positive, got {beta}")));
    }
    let g = field.grid();
    let n = g.dim() as i32;
    let hn = g.cell_volume();
    let log_step = field.ladder().log_step();
    let mut total = 0.0;
    let mut any = false;
    for (j, &t) in field.ladder().levels().iter().enumerate() {
        let nodes = field.cone_nodes(x, beta, t);
        if nodes.is_empty() {
            continue;
        }
        any = true;
        let mut level_sum = 0.0;
        for i in nodes {
            level_sum += field.at(j, i);
        }
        total += level_sum * hn * log_step / t.powi(n);
    }
    Ok(ConeIntegral { value: total, degenerate: !any })
}

pub fn cone_integral(field: &HalfSpaceField, x: Point, beta: f64) -> Result<f64> {
    cone_integral_detailed(field, x, beta).map(|c| c.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Preset;
    use crate::kernel::{odd_tent_kernel, unit_mass_kernel};

    #[test]
    fn mean_zero_kernel_annihilates_constants() {
        let grid = Grid::line(4.0, 0.0625).unwrap();
        let f = SampledField::from_preset(grid, Preset::Constant { c: 1.0 }).unwrap();
        let k = odd_tent_kernel(201).unwrap();
        let v = convolve_at(&f, &k, 0.5, [0.0, 0.0]).unwrap();
        assert!(v.abs() <= 1e-10 * k.l1(), "got {v}");
    }

    #[test]
    fn unit_mass_kernel_reproduces_constants() {
        let grid = Grid::line(4.0, 0.0625).unwrap();
        let f = SampledField::from_preset(grid, Preset::Constant { c: 1.0 }).unwrap();
        let k = unit_mass_kernel(1, 101).unwrap();
        let v = convolve_at(&f, &k, 1.0, [0.3, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn odd_tent_against_linear_field() {
        // f(x) = x, y = 0: f*φ_t(0) = -t ∫ z φ(z) dz = -t/4
        let grid = Grid::line(8.0, 0.03125).unwrap();
        let f = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let k = odd_tent_kernel(401).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            let v = convolve_at(&f, &k, t, [0.0, 0.0]).unwrap();
            assert!(
                (v + t / 4.0).abs() < 2e-4 * t,
                "t = {t}: got {v}, expected {}",
                -t / 4.0
            );
        }
    }

    #[test]
    fn rejects_bad_scale_and_coarse_kernel() {
        let grid = Grid::line(1.0, 0.125).unwrap();
        let f = SampledField::from_preset(grid, Preset::Constant { c: 1.0 }).unwrap();
        let k = odd_tent_kernel(21).unwrap();
        assert!(convolve_at(&f, &k, 0.0, [0.0, 0.0]).is_err());
        assert!(convolve_at(&f, &k, -1.0, [0.0, 0.0]).is_err());
        let coarse = odd_tent_kernel(7).unwrap();
        match convolve_at(&f, &coarse, 1.0, [0.0, 0.0]) {
            Err(Error::KernelTooCoarse { nodes: 7, min: 9 }) => {}
            other => panic!("expected KernelTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn convolution_scaling_for_linear_fields() {
        // convolve(c1 x + c0, φ, t, y) = c1 * convolve(x, φ, t, 0) for mean-zero φ
        let grid = Grid::line(8.0, 0.0625).unwrap();
        let f = SampledField::from_preset(grid.clone(), Preset::Linear { c1: 2.5, c0: -4.0 }).unwrap();
        let id = SampledField::from_preset(grid, Preset::Linear { c1: 1.0, c0: 0.0 }).unwrap();
        let k = odd_tent_kernel(101).unwrap();
        let base = convolve_at(&id, &k, 0.7, [0.0, 0.0]).unwrap();
        for &y in &[-2.0, -0.31, 0.0, 1.27, 3.9] {
            let v = convolve_at(&f, &k, 0.7, [y, 0.0]).unwrap();
            assert!((v - 2.5 * base).abs() < 1e-9, "y = {y}: {v} vs {}", 2.5 * base);
        }
    }

    #[test]
    fn cone_integral_of_zero_and_one() {
        let grid = Grid::line(4.0, 0.0625).unwrap();
        let ladder = HalfSpaceLadder::new(0.5, 2.0, 2f64.powf(0.25)).unwrap();
        let zero = HalfSpaceField::build(&grid, &ladder, Parallelism::Sequential, |_, _| 0.0);
        assert_eq!(cone_integral(&zero, [0.0, 0.0], 1.0).unwrap(), 0.0);

        // F = 1, single level: count * h * ln ρ / t -> 2 ln ρ as h -> 0
        let single = HalfSpaceLadder::new(1.0, 1.0001, 2.0).unwrap();
        assert_eq!(single.len(), 1);
        for &h in &[0.0625, 0.03125, 0.015625] {
            let g = Grid::line(4.0, h).unwrap();
            let one = HalfSpaceField::build(&g, &single, Parallelism::Sequential, |_, _| 1.0);
            let v = cone_integral(&one, [0.0, 0.0], 1.0).unwrap();
            let expect = 2.0 * 2f64.ln();
            assert!(
                (v - expect).abs() < 2.0 * h * expect,
                "h = {h}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn cone_integral_monotone_in_aperture() {
        let grid = Grid::line(4.0, 0.125).unwrap();
        let ladder = HalfSpaceLadder::default_for(&grid).unwrap();
        let f = HalfSpaceField::build(&grid, &ladder, Parallelism::Sequential, |y, t| {
            (1.0 + y[0].cos() + t).abs()
        });
        let v1 = cone_integral(&f, [0.5, 0.0], 1.0).unwrap();
        let v2 = cone_integral(&f, [0.5, 0.0], 2.0).unwrap();
        assert!(v2 >= v1);
        assert!(v1 > 0.0);
    }

    #[test]
    fn degenerate_cone_returns_zero_with_flag() {
        let grid = Grid::line(4.0, 0.5).unwrap();
        let ladder = HalfSpaceLadder::new(0.01, 0.02, 2.0).unwrap();
        let f = HalfSpaceField::build(&grid, &ladder, Parallelism::Sequential, |_, _| 1.0);
        // aperture so small no node falls inside any cone level
        let out = cone_integral_detailed(&f, [0.1, 0.0], 1e-3).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.degenerate);
    }

    #[test]
    fn tent_grouping_matches_level_grouping() {
        use crate::dyadic::{tent_of_sample, DyadicBase};
        let grid = Grid::line(4.0, 0.125).unwrap();
        let ladder = HalfSpaceLadder::default_for(&grid).unwrap();
        let base = DyadicBase::from_grid(&grid).unwrap();
        let field = HalfSpaceField::build(&grid, &ladder, Parallelism::Sequential, |y, t| {
            (y[0] * 1.3).sin() + t.ln().cos()
        });
        // group the full quadrature two ways: by level, and by tent
        let n = grid.len();
        let hn = grid.cell_volume();
        let ls = ladder.log_step();
        let mut by_level = 0.0;
        for (j, &t) in ladder.levels().iter().enumerate() {
            let mut s = 0.0;
            for i in 0..n {
                s += field.at(j, i);
            }
            by_level += s * hn * ls / t;
        }
        let mut tents: std::collections::HashMap<_, f64> = std::collections::HashMap::new();
        for (j, &t) in ladder.levels().iter().enumerate() {
            for i in 0..n {
                let q = tent_of_sample(&base, grid.node(i), t).expect("tent covers ladder");
                *tents.entry(q).or_default() += field.at(j, i) * hn * ls / t;
            }
        }
        let by_tent: f64 = tents.values().sum();
        assert!(
            (by_level - by_tent).abs() <= 1e-12 * by_level.abs().max(by_tent.abs()).max(1e-300),
            "level {by_level} vs tent {by_tent}"
        );
    }
}
