//! Dyadic cubes over a box, tents, and the cube families used by the
//! weight analytics.
//!
//! Cubes are half-open `[lo, hi)` per axis, so children partition the
//! parent exactly and tent assignment is a true partition.

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

use serde::{Deserialize, Serialize};

/// A plain axis-parallel cube given by center and side. `scale(Q, λ)`
/// produces these; they need not be dyadic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub dim: usize,
    pub center: [f64; 2],
    pub side: f64,
}

impl Cube {
    pub fn new1(center: f64, side: f64) -> Cube {
        Cube { dim: 1, center: [center, 0.0], side }
    }

    pub fn new2(center: [f64; 2], side: f64) -> Cube {
        Cube { dim: 2, center, side }
    }

    /// Cube `Q(x0, r)`: centered at `x0` with side length `r`.
    pub fn centered(dim: usize, x0: [f64; 2], r: f64) -> Cube {
        Cube { dim, center: x0, side: r }
    }

    pub fn lo(&self, ax: usize) -> f64 {
        self.center[ax] - 0.5 * self.side
    }

    pub fn hi(&self, ax: usize) -> f64 {
        self.center[ax] + 0.5 * self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// `λQ`: same center, side scaled by λ.
    pub fn scaled(&self, lambda: f64) -> Cube {
        Cube { dim: self.dim, center: self.center, side: self.side * lambda }
    }

    pub fn contains(&self, p: Point) -> bool {
        (0..self.dim).all(|ax| p[ax] >= self.lo(ax) && p[ax] < self.hi(ax))
    }

    pub fn inside_box(&self, grid: &Grid) -> bool {
        (0..self.dim).all(|ax| {
            self.lo(ax) >= grid.lo(ax) - 1e-9 * self.side.max(1.0)
                && self.hi(ax) <= grid.hi(ax) + 1e-9 * self.side.max(1.0)
        })
    }
}

/// Reference frame for a dyadic decomposition: generation `k` cubes have
/// side `base_side · 2^-k` and integer corner coordinates relative to
/// `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicBase {
    pub dim: usize,
    pub origin: [f64; 2],
    pub base_side: f64,
}

impl DyadicBase {
    /// The grid box itself is generation 0. In 2D the box must be square.
    pub fn from_grid(grid: &Grid) -> Result<DyadicBase> {
        let side = grid.hi(0) - grid.lo(0);
        if grid.dim() == 2 {
            let side_y = grid.hi(1) - grid.lo(1);
            if (side - side_y).abs() > 1e-9 * side {
                return Err(Error::invalid(
                    "dyadic decomposition requires a square box in 2D".to_string(),
                ));
            }
        }
        let mut origin = [0.0; 2];
        for ax in 0..grid.dim() {
            origin[ax] = grid.lo(ax);
        }
        Ok(DyadicBase { dim: grid.dim(), origin, base_side: side })
    }

    pub fn side(&self, generation: i32) -> f64 {
        self.base_side * 2f64.powi(-generation)
    }

    /// Number of cubes per axis at a generation (generation ≥ 0).
    pub fn per_axis(&self, generation: i32) -> u64 {
        1u64 << generation.max(0) as u32
    }

    pub fn cube(&self, generation: i32, index: [i64; 2]) -> DyadicCube {
        DyadicCube { generation, index }
    }

    /// The dyadic cube of `generation` containing the point, if inside.
    pub fn locate(&self, generation: i32, p: Point) -> Option<DyadicCube> {
        let side = self.side(generation);
        let per = self.per_axis(generation) as i64;
        let mut index = [0i64; 2];
        for ax in 0..self.dim {
            let i = ((p[ax] - self.origin[ax]) / side).floor() as i64;
            if i < 0 || i >= per {
                return None;
            }
            index[ax] = i;
        }
        Some(DyadicCube { generation, index })
    }

    pub fn to_cube(&self, q: &DyadicCube) -> Cube {
        let side = self.side(q.generation);
        let mut center = [0.0; 2];
        for ax in 0..self.dim {
            center[ax] = self.origin[ax] + (q.index[ax] as f64 + 0.5) * side;
        }
        Cube { dim: self.dim, center, side }
    }

    /// Generation whose tent `(ℓ(Q), 2ℓ(Q)]` contains scale `t`, or None
    /// when `t` is out of range for non-negative generations.
    pub fn tent_generation(&self, t: f64) -> Option<i32> {
        if !(t > 0.0) || t > 2.0 * self.base_side {
            return None;
        }
        // side must satisfy side < t <= 2*side
        let mut g = (self.base_side / t).log2().ceil() as i32;
        for _ in 0..3 {
            let side = self.side(g);
            if side < t && t <= 2.0 * side {
                return Some(g);
            }
            if t <= side {
                g += 1;
            } else {
                g -= 1;
            }
        }
        None
    }
}

/// Dyadic cube: generation plus integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub generation: i32,
    pub index: [i64; 2],
}

impl DyadicCube {
    pub fn parent(&self) -> Option<DyadicCube> {
        if self.generation == 0 {
            return None;
        }
        Some(DyadicCube {
            generation: self.generation - 1,
            index: [self.index[0].div_euclid(2), self.index[1].div_euclid(2)],
        })
    }

    pub fn children(&self, dim: usize) -> Vec<DyadicCube> {
        let g = self.generation + 1;
        let base = [self.index[0] * 2, self.index[1] * 2];
        if dim == 1 {
            vec![
                DyadicCube { generation: g, index: [base[0], 0] },
                DyadicCube { generation: g, index: [base[0] + 1, 0] },
            ]
        } else {
            let mut out = Vec::with_capacity(4);
            for dx in 0..2 {
                for dy in 0..2 {
                    out.push(DyadicCube { generation: g, index: [base[0] + dx, base[1] + dy] });
                }
            }
            out
        }
    }

    /// True when `self` is contained in `other` (dyadic nesting).
    pub fn is_descendant_of(&self, other: &DyadicCube) -> bool {
        if other.generation > self.generation {
            return false;
        }
        let shift = (self.generation - other.generation) as u32;
        self.index[0] >> shift == other.index[0] && self.index[1] >> shift == other.index[1]
    }
}

/// Complete enumeration of dyadic cubes for generations `k_min..=k_max`.
/// Refuses generations finer than the grid spacing.
pub fn dyadic_family(
    base: &DyadicBase,
    grid: &Grid,
    k_min: i32,
    k_max: i32,
) -> Result<Vec<DyadicCube>> {
    if k_min > k_max {
        return Err(Error::invalid(format!("k_min {k_min} > k_max {k_max}")));
    }
    if k_min < 0 {
        return Err(Error::invalid("generations below 0 leave the base box".to_string()));
    }
    let h = grid.spacing();
    if base.side(k_max) < h * (1.0 - 1e-9) {
        return Err(Error::refusal(format!(
            "generation {k_max} has side {} finer than grid spacing {h}",
            base.side(k_max)
        )));
    }
    let mut out = Vec::new();
    for g in k_min..=k_max {
        let per = base.per_axis(g) as i64;
        for ix in 0..per {
            if base.dim == 1 {
                out.push(DyadicCube { generation: g, index: [ix, 0] });
            } else {
                for iy in 0..per {
                    out.push(DyadicCube { generation: g, index: [ix, iy] });
                }
            }
        }
    }
    Ok(out)
}

/// Tent over a cube: `{(y,t) : y ∈ Q, ℓ(Q) < t ≤ 2ℓ(Q)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tent {
    pub cube: Cube,
}

impl Tent {
    pub fn contains(&self, y: Point, t: f64) -> bool {
        self.cube.contains(y) && t > self.cube.side && t <= 2.0 * self.cube.side
    }
}

pub fn tent(base: &DyadicBase, q: &DyadicCube) -> Tent {
    Tent { cube: base.to_cube(q) }
}

/// Assigns a half-space sample to the unique dyadic cube whose tent holds
/// it. `None` when `t` is outside the representable range or `y` outside
/// the base box.
pub fn tent_of_sample(base: &DyadicBase, y: Point, t: f64) -> Option<DyadicCube> {
    let g = base.tent_generation(t)?;
    base.locate(g, y)
}

/// Per-axis half-open cell index ranges `[start, end)` covered by a
/// cell-aligned cube. `None` when the cube's edges do not align with cell
/// boundaries (tolerance 1e-6 of a cell) or it leaves the box.
pub fn cube_cells(grid: &Grid, cube: &Cube) -> Option<[(usize, usize); 2]> {
    let mut out = [(0usize, 1usize); 2];
    for ax in 0..grid.dim() {
        let start = grid.boundary_index(ax, cube.lo(ax))?;
        let end = grid.boundary_index(ax, cube.hi(ax))?;
        if end <= start {
            return None;
        }
        out[ax] = (start, end);
    }
    Some(out)
}

/// Cube family used for A_p suprema and maximal operators: all dyadic
/// cubes of the generation range plus, where they stay inside the box and
/// stay cell-aligned, the same cubes shifted by half a side per axis.
/// Shifted copies catch non-dyadic extrema.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    pub cubes: Vec<Cube>,
    /// generation of each cube (shifted copies share their source's).
    pub generations: Vec<i32>,
    pub k_min: i32,
    pub k_max: i32,
    pub shifted: bool,
}

impl CubeFamily {
    pub fn new(grid: &Grid, k_min: i32, k_max: i32, shifted: bool) -> Result<CubeFamily> {
        let base = DyadicBase::from_grid(grid)?;
        let dyadic = dyadic_family(&base, grid, k_min, k_max)?;
        let mut cubes = Vec::new();
        let mut generations = Vec::new();
        for q in &dyadic {
            cubes.push(base.to_cube(q));
            generations.push(q.generation);
        }
        if shifted {
            for q in &dyadic {
                let c = base.to_cube(q);
                let half = 0.5 * c.side;
                // half-side must stay cell aligned for sampled weights
                if (half / grid.spacing()).fract().abs() > 1e-9
                    && ((half / grid.spacing()).fract() - 1.0).abs() > 1e-9
                {
                    continue;
                }
                let shifts: &[[f64; 2]] = if grid.dim() == 1 {
                    &[[1.0, 0.0]]
                } else {
                    &[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
                };
                for s in shifts {
                    let mut center = c.center;
                    for ax in 0..grid.dim() {
                        center[ax] += s[ax] * half;
                    }
                    let cand = Cube { dim: grid.dim(), center, side: c.side };
                    if cand.inside_box(grid) {
                        cubes.push(cand);
                        generations.push(q.generation);
                    }
                }
            }
        }
        Ok(CubeFamily { cubes, generations, k_min, k_max, shifted })
    }

    /// Default family for weight analytics: generations 0 up to the finest
    /// with side ≥ 2h (so half-shifts stay aligned), with shifted copies.
    pub fn default_for(grid: &Grid) -> Result<CubeFamily> {
        let base = DyadicBase::from_grid(grid)?;
        let mut k_max = 0;
        while base.side(k_max + 1) >= 2.0 * grid.spacing() * (1.0 - 1e-9) {
            k_max += 1;
        }
        CubeFamily::new(grid, 0, k_max, true)
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn descriptor(&self) -> String {
        format!(
            "dyadic generations {}..={}{}",
            self.k_min,
            self.k_max,
            if self.shifted { " + half-shifted copies" } else { "" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::HalfSpaceLadder;

    fn unit_grid() -> Grid {
        Grid::new(1, &[0.0], &[1.0], 0.0625).unwrap()
    }

    #[test]
    fn generation_one_splits_unit_interval() {
        let g = unit_grid();
        let base = DyadicBase::from_grid(&g).unwrap();
        let fam = dyadic_family(&base, &g, 1, 1).unwrap();
        assert_eq!(fam.len(), 2);
        let c0 = base.to_cube(&fam[0]);
        let c1 = base.to_cube(&fam[1]);
        assert!((c0.lo(0) - 0.0).abs() < 1e-15 && (c0.hi(0) - 0.5).abs() < 1e-15);
        assert!((c1.lo(0) - 0.5).abs() < 1e-15 && (c1.hi(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parent_of_right_half_is_root() {
        let g = unit_grid();
        let base = DyadicBase::from_grid(&g).unwrap();
        let right = base.locate(1, [0.75, 0.0]).unwrap();
        let parent = right.parent().unwrap();
        let c = base.to_cube(&parent);
        assert!((c.lo(0) - 0.0).abs() < 1e-15 && (c.hi(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn children_partition_parent() {
        let g = Grid::new(2, &[0.0, 0.0], &[1.0, 1.0], 0.125).unwrap();
        let base = DyadicBase::from_grid(&g).unwrap();
        let root = base.cube(0, [0, 0]);
        let kids = root.children(2);
        assert_eq!(kids.len(), 4);
        for k in &kids {
            assert_eq!(k.parent().unwrap(), root);
            assert!(k.is_descendant_of(&root));
        }
        // sample points land in exactly one child
        for p in g.nodes() {
            let count = kids.iter().filter(|k| base.to_cube(k).contains(p)).count();
            assert_eq!(count, 1);
        }
    }

    #[test]
    fn scale_keeps_center_triples_side() {
        let q = Cube::new1(0.5, 1.0);
        let s = q.scaled(3.0);
        assert!((s.lo(0) + 1.0).abs() < 1e-15);
        assert!((s.hi(0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn refuses_generation_finer_than_spacing() {
        let g = unit_grid(); // h = 1/16
        let base = DyadicBase::from_grid(&g).unwrap();
        assert!(dyadic_family(&base, &g, 0, 4).is_ok()); // side 1/16 = h, allowed
        assert!(dyadic_family(&base, &g, 0, 5).is_err());
    }

    #[test]
    fn tent_assignment_is_a_partition() {
        let g = Grid::line(4.0, 0.125).unwrap();
        let base = DyadicBase::from_grid(&g).unwrap();
        let ladder = HalfSpaceLadder::default_for(&g).unwrap();
        for &t in ladder.levels() {
            for y in g.nodes() {
                let q = tent_of_sample(&base, y, t).expect("sample must land in a tent");
                let tt = tent(&base, &q);
                assert!(tt.contains(y, t), "sample (y={:?}, t={t}) not in its tent", y);
            }
        }
    }

    #[test]
    fn default_family_has_shifted_copies() {
        let g = Grid::line(4.0, 0.125).unwrap();
        let fam = CubeFamily::default_for(&g).unwrap();
        // generations 0..=5 (sides 8..0.25): 63 dyadic + shifted interior copies
        assert!(fam.len() > 63);
        assert!(fam.cubes.iter().all(|c| c.inside_box(&g)));
    }
}
