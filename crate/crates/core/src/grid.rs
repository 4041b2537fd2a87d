//! Uniform cell-centered grids and sampled fields.
//!
//! A [`Grid`] covers an axis-aligned box with square cells of spacing `h`;
//! nodes sit at cell centers, `lo + (i + 1/2)·h` per axis, reproducible
//! bit-exactly from `(lo, h, i)`. Midpoint (Riemann) quadrature is used
//! everywhere: the integral of a field over a union of cells is the sum of
//! node values times `h^n`. Cube boundaries that are multiples of `h` from
//! `lo` align exactly with cell boundaries, which keeps cube bookkeeping
//! (weights, tents, level sets) exact.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point, dim: usize) -> f64 {
    let dx = a[0] - b[0];
    if dim == 1 {
        dx.abs()
    } else {
        let dy = a[1] - b[1];
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    spacing: f64,
    cells: [usize; 2],
}

impl Grid {
    /// Builds a grid over the box with the given spacing. Each axis length
    /// must be an integer multiple of `h` (relative tolerance 1e-9).
    pub fn new(dim: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Grid> {
        if dim == 0 || dim > 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!("spacing must be positive, got {h}")));
        }
        let mut lo_a = [0.0; 2];
        let mut hi_a = [0.0; 2];
        let mut cells = [1usize; 2];
        for ax in 0..dim {
            let (l, u) = (lo[ax], hi[ax]);
            if !(u > l) {
                return Err(Error::invalid(format!("axis {ax}: need lo < hi, got [{l}, {u}]")));
            }
            let n_exact = (u - l) / h;
            let n = n_exact.round();
            if (n_exact - n).abs() > 1e-9 * n.max(1.0) || n < 1.0 {
                return Err(Error::invalid(format!(
                    "axis {ax}: box length {} is not an integer multiple of spacing {h}",
                    u - l
                )));
            }
            lo_a[ax] = l;
            hi_a[ax] = u;
            cells[ax] = n as usize;
        }
        Ok(Grid { dim, lo: lo_a, hi: hi_a, spacing: h, cells })
    }

    /// Symmetric 1D grid over `[-half, half]`.
    pub fn line(half: f64, h: f64) -> Result<Grid> {
        Grid::new(1, &[-half], &[half], h)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lo(&self, ax: usize) -> f64 {
        self.lo[ax]
    }

    pub fn hi(&self, ax: usize) -> f64 {
        self.hi[ax]
    }

    pub fn cells(&self, ax: usize) -> usize {
        self.cells[ax]
    }

    /// Total number of nodes (= cells).
    pub fn len(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight per node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.dim {
            let d = self.hi[ax] - self.lo[ax];
            s += d * d;
        }
        s.sqrt()
    }

    /// Coordinate of node `i` along `ax`: the center of cell `i`.
    pub fn axis_coord(&self, ax: usize, i: usize) -> f64 {
        self.lo[ax] + (i as f64 + 0.5) * self.spacing
    }

    /// Flattened index: x varies slowest (row = fixed x) in 2D.
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        if self.dim == 1 {
            ix
        } else {
            ix * self.cells[1] + iy
        }
    }

    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        if self.dim == 1 {
            (idx, 0)
        } else {
            (idx / self.cells[1], idx % self.cells[1])
        }
    }

    pub fn node(&self, idx: usize) -> Point {
        let (ix, iy) = self.unflat(idx);
        let mut p = [0.0; 2];
        p[0] = self.axis_coord(0, ix);
        if self.dim == 2 {
            p[1] = self.axis_coord(1, iy);
        }
        p
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..self.dim).all(|ax| p[ax] >= self.lo[ax] && p[ax] <= self.hi[ax])
    }

    /// Index of the cell containing `p` along `ax` (clamped to valid range);
    /// `None` if outside the box.
    pub fn cell_of(&self, ax: usize, x: f64) -> Option<usize> {
        if x < self.lo[ax] || x > self.hi[ax] {
            return None;
        }
        let i = ((x - self.lo[ax]) / self.spacing).floor() as isize;
        Some((i.max(0) as usize).min(self.cells[ax] - 1))
    }

    /// Snaps a coordinate to the nearest cell boundary index if within
    /// tolerance; used to align cube edges with cells.
    pub fn boundary_index(&self, ax: usize, x: f64) -> Option<usize> {
        let r = (x - self.lo[ax]) / self.spacing;
        let k = r.round();
        if (r - k).abs() <= 1e-6 && k >= 0.0 && k <= self.cells[ax] as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Grid with halved spacing over the same box.
    pub fn refined(&self) -> Grid {
        Grid {
            dim: self.dim,
            lo: self.lo,
            hi: self.hi,
            spacing: self.spacing / 2.0,
            cells: [self.cells[0] * 2, self.cells[1] * 2],
        }
    }
}

/// Closed-form presets a field can be tagged with, so analytically defined
/// inputs stay reproducible from their parameters alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    Constant { c: f64 },
    /// `c1·x + c0` (first axis in 2D).
    Linear { c1: f64, c0: f64 },
    /// Haar step on `[a, b]`: +amp on the left half, -amp on the right.
    Haar { a: f64, b: f64, amp: f64 },
    /// Smooth compactly supported bump `amp · exp(1 - 1/(1-u²))`, `u = |x-c|/width`.
    Bump { center: [f64; 2], width: f64, amp: f64 },
    /// Sum of bumps (random smooth corpus member).
    BumpSum { bumps: Vec<([f64; 2], f64, f64)> },
}

impl Preset {
    pub fn eval(&self, p: Point, dim: usize) -> f64 {
        match self {
            Preset::Constant { c } => *c,
            Preset::Linear { c1, c0 } => c1 * p[0] + c0,
            Preset::Haar { a, b, amp } => {
                let mid = 0.5 * (a + b);
                if p[0] >= *a && p[0] < mid {
                    *amp
                } else if p[0] >= mid && p[0] < *b {
                    -*amp
                } else {
                    0.0
                }
            }
            Preset::Bump { center, width, amp } => bump(p, *center, *width, *amp, dim),
            Preset::BumpSum { bumps } => {
                bumps.iter().map(|&(c, w, a)| bump(p, c, w, a, dim)).sum()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant { .. } => "constant",
            Preset::Linear { .. } => "linear",
            Preset::Haar { .. } => "haar",
            Preset::Bump { .. } => "bump",
            Preset::BumpSum { .. } => "bump-sum",
        }
    }
}

fn bump(p: Point, center: [f64; 2], width: f64, amp: f64, dim: usize) -> f64 {
    let r = dist(p, center, dim) / width;
    if r >= 1.0 {
        0.0
    } else {
        amp * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// A real-valued function sampled at the nodes of a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    grid: Grid,
    values: Vec<f64>,
    preset: Option<Preset>,
}

impl SampledField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<SampledField> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at node {i}")));
        }
        Ok(SampledField { grid, values, preset: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Result<SampledField> {
        let values: Vec<f64> = grid.nodes().map(f).collect();
        SampledField::from_values(grid, values)
    }

    pub fn from_preset(grid: Grid, preset: Preset) -> Result<SampledField> {
        let dim = grid.dim();
        let mut field = SampledField::from_fn(grid, |p| preset.eval(p, dim))?;
        field.preset = Some(preset);
        Ok(field)
    }

    pub fn zero(grid: Grid) -> SampledField {
        let n = grid.len();
        SampledField { grid, values: vec![0.0; n], preset: None }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.preset = None;
        &mut self.values
    }

    pub fn preset(&self) -> Option<&Preset> {
        self.preset.as_ref()
    }

    /// Checks the closed-form tag against the sampled values (1e-12 relative).
    pub fn preset_consistent(&self) -> bool {
        match &self.preset {
            None => true,
            Some(p) => {
                let scale = self.linf().max(1e-300);
                self.grid
                    .nodes()
                    .zip(&self.values)
                    .all(|(x, &v)| (p.eval(x, self.grid.dim) - v).abs() <= 1e-12 * scale)
            }
        }
    }

    /// Multilinear interpolation between cell centers; 0 outside the box,
    /// constant extension within the half-cell rim along each axis.
    pub fn interp(&self, p: Point) -> f64 {
        let g = &self.grid;
        if !g.contains(p) {
            return 0.0;
        }
        match g.dim {
            1 => {
                let (i0, i1, w) = axis_bracket(g, 0, p[0]);
                (1.0 - w) * self.values[i0] + w * self.values[i1]
            }
            _ => {
                let (ix0, ix1, wx) = axis_bracket(g, 0, p[0]);
                let (iy0, iy1, wy) = axis_bracket(g, 1, p[1]);
                let v00 = self.values[g.flat(ix0, iy0)];
                let v01 = self.values[g.flat(ix0, iy1)];
                let v10 = self.values[g.flat(ix1, iy0)];
                let v11 = self.values[g.flat(ix1, iy1)];
                (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11)
            }
        }
    }

    /// Discrete integral (midpoint rule).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete L1 norm.
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete L2 norm.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> SampledField {
        let values = self.values.iter().map(|v| c * v).collect();
        SampledField { grid: self.grid.clone(), values, preset: None }
    }

    /// Writes the CSV field format: header `x,value` (n=1) or `x,y,value`
    /// (n=2), nodes in row-major order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        if self.grid.dim == 1 {
            writeln!(out, "x,value")?;
            for (i, v) in self.values.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e}", self.grid.axis_coord(0, i), v)?;
            }
        } else {
            writeln!(out, "x,y,value")?;
            for ix in 0..self.grid.cells[0] {
                for iy in 0..self.grid.cells[1] {
                    writeln!(
                        out,
                        "{:.16e},{:.16e},{:.16e}",
                        self.grid.axis_coord(0, ix),
                        self.grid.axis_coord(1, iy),
                        self.values[self.grid.flat(ix, iy)]
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)
    }

    /// Reads the CSV field format, inferring a uniform grid from the node
    /// coordinates. Fails with the offending row index when spacing is not
    /// uniform or ordering is not row-major.
    pub fn read_csv<R: BufRead>(input: R) -> Result<SampledField> {
        let mut lines = input.lines().enumerate();
        let header = lines
            .next()
            .ok_or_else(|| Error::CsvFormat { row: 0, msg: "empty file".into() })?
            .1?;
        let dim = match header.trim() {
            "x,value" => 1,
            "x,y,value" => 2,
            other => {
                return Err(Error::CsvFormat {
                    row: 0,
                    msg: format!("unrecognized header {other:?}"),
                })
            }
        };
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (row, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.trim().split(',').collect();
            if parts.len() != dim + 1 {
                return Err(Error::CsvFormat {
                    row,
                    msg: format!("expected {} fields, got {}", dim + 1, parts.len()),
                });
            }
            let mut c = [0.0f64; 2];
            for ax in 0..dim {
                c[ax] = parts[ax]
                    .parse()
                    .map_err(|e| Error::CsvFormat { row, msg: format!("bad number: {e}") })?;
            }
            let v: f64 = parts[dim]
                .parse()
                .map_err(|e| Error::CsvFormat { row, msg: format!("bad number: {e}") })?;
            coords.push(c);
            values.push(v);
        }
        if coords.len() < 2 {
            return Err(Error::CsvFormat { row: 1, msg: "need at least 2 nodes".into() });
        }
        if dim == 1 {
            let h = coords[1][0] - coords[0][0];
            if !(h > 0.0) {
                return Err(Error::CsvFormat { row: 2, msg: "x not increasing".into() });
            }
            for (i, w) in coords.windows(2).enumerate() {
                let step = w[1][0] - w[0][0];
                if (step - h).abs() > 1e-9 * h {
                    return Err(Error::CsvFormat {
                        row: i + 2,
                        msg: format!("non-uniform spacing {step} vs {h}"),
                    });
                }
            }
            let lo = coords[0][0] - 0.5 * h;
            let hi = coords[coords.len() - 1][0] + 0.5 * h;
            let grid = Grid::new(1, &[lo], &[hi], h)?;
            SampledField::from_values(grid, values)
        } else {
            // row-major: x slowest. Infer ny from the first change in x.
            let ny = coords
                .iter()
                .position(|c| c[0] != coords[0][0])
                .unwrap_or(coords.len());
            if coords.len() % ny != 0 {
                return Err(Error::CsvFormat {
                    row: coords.len(),
                    msg: format!("node count {} not divisible by ny={ny}", coords.len()),
                });
            }
            let nx = coords.len() / ny;
            if ny < 2 || nx < 2 {
                return Err(Error::CsvFormat { row: 1, msg: "need at least 2x2 nodes".into() });
            }
            let h = coords[1][1] - coords[0][1];
            if !(h > 0.0) {
                return Err(Error::CsvFormat { row: 2, msg: "y not increasing".into() });
            }
            for ix in 0..nx {
                for iy in 0..ny {
                    let row = ix * ny + iy;
                    let expected_x = coords[0][0] + ix as f64 * (coords[ny][0] - coords[0][0]);
                    let expected_y = coords[0][1] + iy as f64 * h;
                    let c = coords[row];
                    if (c[0] - expected_x).abs() > 1e-9 * h.max(1.0)
                        || (c[1] - expected_y).abs() > 1e-9 * h.max(1.0)
                    {
                        return Err(Error::CsvFormat {
                            row: row + 1,
                            msg: "nodes not in uniform row-major order".into(),
                        });
                    }
                }
            }
            let hx = coords[ny][0] - coords[0][0];
            if (hx - h).abs() > 1e-9 * h {
                return Err(Error::CsvFormat {
                    row: ny + 1,
                    msg: format!("anisotropic spacing: hx={hx}, hy={h}"),
                });
            }
            let lo = [coords[0][0] - 0.5 * h, coords[0][1] - 0.5 * h];
            let hi = [
                coords[coords.len() - 1][0] + 0.5 * h,
                coords[coords.len() - 1][1] + 0.5 * h,
            ];
            let grid = Grid::new(2, &lo, &hi, h)?;
            SampledField::from_values(grid, values)
        }
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<SampledField> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        SampledField::read_csv(f)
    }
}

fn axis_bracket(g: &Grid, ax: usize, x: f64) -> (usize, usize, f64) {
    let first = g.axis_coord(ax, 0);
    let last = g.axis_coord(ax, g.cells[ax] - 1);
    if x <= first {
        return (0, 0, 0.0);
    }
    if x >= last {
        let i = g.cells[ax] - 1;
        return (i, i, 0.0);
    }
    let r = (x - first) / g.spacing;
    let i0 = (r.floor() as usize).min(g.cells[ax] - 2);
    (i0, i0 + 1, r - i0 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_are_cell_centers() {
        let g = Grid::new(1, &[0.0], &[1.0], 0.25).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.axis_coord(0, 0), 0.125);
        assert_eq!(g.axis_coord(0, 3), 0.875);
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_misaligned_box() {
        assert!(Grid::new(1, &[0.0], &[1.0], 0.3).is_err());
        assert!(Grid::new(1, &[0.0], &[1.0], -0.1).is_err());
        assert!(Grid::new(3, &[0.0; 3], &[1.0; 3], 0.5).is_err());
    }

    #[test]
    fn linear_interp_is_exact_on_linear_fields() {
        let g = Grid::line(2.0, 0.125).unwrap();
        let f = SampledField::from_preset(g, Preset::Linear { c1: 3.0, c0: -1.0 }).unwrap();
        for &x in &[-1.5, -0.33, 0.0, 0.4177, 1.77] {
            assert!((f.interp([x, 0.0]) - (3.0 * x - 1.0)).abs() < 1e-12);
        }
        // outside the box reads 0
        assert_eq!(f.interp([5.0, 0.0]), 0.0);
    }

    #[test]
    fn preset_tag_consistency() {
        let g = Grid::line(1.0, 0.125).unwrap();
        let f = SampledField::from_preset(g, Preset::Bump { center: [0.0, 0.0], width: 0.5, amp: 1.0 })
            .unwrap();
        assert!(f.preset_consistent());
    }

    #[test]
    fn csv_round_trip_1d() {
        let g = Grid::line(1.0, 0.25).unwrap();
        let f = SampledField::from_fn(g, |p| p[0] * p[0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let f2 = SampledField::read_csv(&buf[..]).unwrap();
        assert_eq!(f.grid(), f2.grid());
        assert_eq!(f.values(), f2.values());
    }

    #[test]
    fn csv_round_trip_2d() {
        let g = Grid::new(2, &[0.0, -1.0], &[1.0, 0.0], 0.25).unwrap();
        let f = SampledField::from_fn(g, |p| p[0] + 10.0 * p[1]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let f2 = SampledField::read_csv(&buf[..]).unwrap();
        assert_eq!(f.grid(), f2.grid());
        assert_eq!(f.values(), f2.values());
    }

    #[test]
    fn csv_reports_offending_row() {
        let text = "x,value\n0.0,1.0\n0.5,1.0\n0.7,1.0\n";
        match SampledField::read_csv(text.as_bytes()) {
            Err(Error::CsvFormat { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected CsvFormat error, got {other:?}"),
        }
    }
}
