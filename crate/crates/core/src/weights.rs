//! Muckenhoupt weight analytics: A_p quantities and constants, the
//! critical index, weighted measures and norms, the weighted maximal
//! operator, and the measured doubling / tail / subset bounds.
//!
//! Power weights `|x|^a` carry exact per-cube integrals through closed-form
//! antiderivatives (1D) or radially exact corner quadrature (2D), so the
//! classical identities — `∫_0^1 x^(1/2) = 2/3`, the A_p quantity of a
//! power weight on a cube — hold to rounding rather than to grid error.
//! Sampled weights integrate by the midpoint rule, consistent with the
//! rest of the crate.

use crate::dyadic::{cube_cells, Cube, CubeFamily};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledField};
use crate::kernel::for_cells;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone)]
enum WeightKind {
    Power { a: f64 },
    Sampled { field: SampledField },
}

/// A strictly positive weight on a grid, with cached per-cube integrals.
#[derive(Debug)]
pub struct Weight {
    grid: Grid,
    kind: WeightKind,
    /// prefix sums of per-cell integrals of w^s, keyed by s bits
    prefix_cache: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
    node_values: Vec<f64>,
}

impl Weight {
    /// `w(x) = |x|^a` with `a > -n`. The node value at an exact-zero node is
    /// replaced by the cell average so `w(E)` stays exact for cells touching
    /// the origin.
    pub fn power(grid: Grid, a: f64) -> Result<Weight> {
        let n = grid.dim() as f64;
        if !(a > -n) {
            return Err(Error::invalid(format!("power weight needs a > -n = {}, got {a}", -n)));
        }
        let h = grid.spacing();
        let node_values = grid
            .nodes()
            .map(|p| {
                let r = norm(p, grid.dim());
                if r == 0.0 {
                    // exact cell average around the origin node
                    if grid.dim() == 1 {
                        power_integral_1d(a, -h / 2.0, h / 2.0) / h
                    } else {
                        rect_integral_2d(a, -h / 2.0, h / 2.0, -h / 2.0, h / 2.0) / (h * h)
                    }
                } else {
                    r.powf(a)
                }
            })
            .collect();
        Ok(Weight {
            grid,
            kind: WeightKind::Power { a },
            prefix_cache: Mutex::new(HashMap::new()),
            node_values,
        })
    }

    /// A sampled weight; every node value must be strictly positive.
    pub fn sampled(field: SampledField) -> Result<Weight> {
        if let Some(i) = field.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::invalid(format!(
                "weight must be strictly positive, node {i} has {}",
                field.values()[i]
            )));
        }
        let grid = field.grid().clone();
        let node_values = field.values().to_vec();
        Ok(Weight {
            grid,
            kind: WeightKind::Sampled { field },
            prefix_cache: Mutex::new(HashMap::new()),
            node_values,
        })
    }

    /// Parses a weight spec string: `power:<a>` or `csv:<path>`.
    pub fn from_spec(spec: &str, grid: Option<&Grid>) -> Result<Weight> {
        if let Some(a) = spec.strip_prefix("power:") {
            let a: f64 = a
                .parse()
                .map_err(|e| Error::invalid(format!("bad power exponent {a:?}: {e}")))?;
            let grid = grid
                .ok_or_else(|| Error::invalid("power weight needs a grid".to_string()))?
                .clone();
            Weight::power(grid, a)
        } else if let Some(path) = spec.strip_prefix("csv:") {
            Weight::sampled(SampledField::load_csv(path)?)
        } else {
            Err(Error::invalid(format!(
                "weight spec must be power:<a> or csv:<path>, got {spec:?}"
            )))
        }
    }

    pub fn spec_string(&self) -> String {
        match &self.kind {
            WeightKind::Power { a } => format!("power:{a}"),
            WeightKind::Sampled { .. } => "sampled".to_string(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    /// Per-cell integrals of `w^s`, summed into a prefix table for O(1)
    /// aligned-cube queries.
    fn prefix(&self, s: f64) -> Arc<Vec<f64>> {
        let key = s.to_bits();
        let mut cache = self.prefix_cache.lock().expect("weight cache poisoned");
        if let Some(v) = cache.get(&key) {
            return v.clone();
        }
        let g = &self.grid;
        let h = g.spacing();
        let cell_value = |ix: usize, iy: usize| -> f64 {
            match &self.kind {
                WeightKind::Power { a } => {
                    let c = a * s;
                    if g.dim() == 1 {
                        let x0 = g.lo(0) + ix as f64 * h;
                        power_integral_1d(c, x0, x0 + h)
                    } else {
                        let x0 = g.lo(0) + ix as f64 * h;
                        let y0 = g.lo(1) + iy as f64 * h;
                        rect_integral_2d(c, x0, x0 + h, y0, y0 + h)
                    }
                }
                WeightKind::Sampled { field } => {
                    field.values()[g.flat(ix, iy)].powf(s) * g.cell_volume()
                }
            }
        };
        let table: Vec<f64> = if g.dim() == 1 {
            let n = g.cells(0);
            let mut t = vec![0.0; n + 1];
            for i in 0..n {
                t[i + 1] = t[i] + cell_value(i, 0);
            }
            t
        } else {
            let (nx, ny) = (g.cells(0), g.cells(1));
            let mut t = vec![0.0; (nx + 1) * (ny + 1)];
            for ix in 0..nx {
                for iy in 0..ny {
                    let v = cell_value(ix, iy);
                    t[(ix + 1) * (ny + 1) + iy + 1] = v + t[ix * (ny + 1) + iy + 1]
                        + t[(ix + 1) * (ny + 1) + iy]
                        - t[ix * (ny + 1) + iy];
                }
            }
            t
        };
        let arc = Arc::new(table);
        cache.insert(key, arc.clone());
        arc
    }

    fn prefix_sum(&self, table: &[f64], ranges: [(usize, usize); 2]) -> f64 {
        let g = &self.grid;
        if g.dim() == 1 {
            table[ranges[0].1] - table[ranges[0].0]
        } else {
            let ny = g.cells(1);
            let idx = |ix: usize, iy: usize| table[ix * (ny + 1) + iy];
            idx(ranges[0].1, ranges[1].1) - idx(ranges[0].0, ranges[1].1)
                - idx(ranges[0].1, ranges[1].0)
                + idx(ranges[0].0, ranges[1].0)
        }
    }

    /// `∫_Q w^s` over an arbitrary cube clipped to the box; second return
    /// reports whether clipping occurred.
    pub fn integral_pow_clipped(&self, s: f64, cube: &Cube) -> (f64, bool) {
        let g = &self.grid;
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut clipped = false;
        for ax in 0..g.dim() {
            lo[ax] = cube.lo(ax).max(g.lo(ax));
            hi[ax] = cube.hi(ax).min(g.hi(ax));
            if cube.lo(ax) < g.lo(ax) - 1e-12 || cube.hi(ax) > g.hi(ax) + 1e-12 {
                clipped = true;
            }
            if hi[ax] <= lo[ax] {
                return (0.0, clipped);
            }
        }
        // aligned rectangles go through the exact prefix table
        if let Some(ranges) = self.rect_cells(&lo, &hi) {
            let table = self.prefix(s);
            return (self.prefix_sum(&table, ranges), clipped);
        }
        match &self.kind {
            WeightKind::Power { a } => {
                let c = a * s;
                let v = if g.dim() == 1 {
                    power_integral_1d(c, lo[0], hi[0])
                } else {
                    rect_integral_2d(c, lo[0], hi[0], lo[1], hi[1])
                };
                (v, clipped)
            }
            WeightKind::Sampled { field } => {
                // midpoint over cells with centers inside the clipped cube,
                // partial cells weighted by their covered fraction
                let mut acc = 0.0;
                let h = g.spacing();
                let sx = ((lo[0] - g.lo(0)) / h).floor().max(0.0) as usize;
                let ex = (((hi[0] - g.lo(0)) / h).ceil() as usize).min(g.cells(0));
                let (sy, ey) = if g.dim() == 1 {
                    (0, 1)
                } else {
                    (
                        ((lo[1] - g.lo(1)) / h).floor().max(0.0) as usize,
                        (((hi[1] - g.lo(1)) / h).ceil() as usize).min(g.cells(1)),
                    )
                };
                for ix in sx..ex {
                    let cx0 = g.lo(0) + ix as f64 * h;
                    let fx = overlap(cx0, cx0 + h, lo[0], hi[0]) / h;
                    for iy in sy..ey {
                        let fy = if g.dim() == 1 {
                            1.0
                        } else {
                            let cy0 = g.lo(1) + iy as f64 * h;
                            overlap(cy0, cy0 + h, lo[1], hi[1]) / h
                        };
                        acc += field.values()[g.flat(ix, iy)].powf(s)
                            * g.cell_volume()
                            * fx
                            * fy;
                    }
                }
                (acc, clipped)
            }
        }
    }

    /// `w(E) = ∫_E w` for a union of cubes; every cube must lie in the box.
    pub fn weighted_measure(&self, parts: &[Cube]) -> Result<f64> {
        let mut total = 0.0;
        for cube in parts {
            if !cube.inside_box(&self.grid) {
                return Err(Error::invalid(format!(
                    "measure region {:?} leaves the grid box",
                    cube
                )));
            }
            total += self.integral_pow_clipped(1.0, cube).0;
        }
        Ok(total)
    }

    pub fn measure_cube(&self, cube: &Cube) -> Result<f64> {
        self.weighted_measure(std::slice::from_ref(cube))
    }

    /// Weighted measure of a union of grid cells given by flat indices.
    pub fn measure_cells(&self, cells: &[usize]) -> f64 {
        let masses = self.prefix(1.0);
        let g = &self.grid;
        cells
            .iter()
            .map(|&flat| {
                let (ix, iy) = g.unflat(flat);
                if g.dim() == 1 {
                    masses[ix + 1] - masses[ix]
                } else {
                    let ny = g.cells(1);
                    masses[(ix + 1) * (ny + 1) + iy + 1] - masses[ix * (ny + 1) + iy + 1]
                        - masses[(ix + 1) * (ny + 1) + iy]
                        + masses[ix * (ny + 1) + iy]
                }
            })
            .sum()
    }

    /// The A_p quantity of one cube:
    /// `(|Q|^-1 ∫_Q w)(|Q|^-1 ∫_Q w^(-1/(p-1)))^(p-1)`. Values `p ≤ 1`
    /// route to the A_1 quantity.
    pub fn ap_quantity(&self, p: f64, cube: &Cube) -> Result<f64> {
        if p <= 1.0 {
            return self.a1_quantity(cube);
        }
        if !cube.inside_box(&self.grid) {
            return Err(Error::invalid("cube leaves the grid box".to_string()));
        }
        let vol = cube.volume();
        let avg_w = self.integral_pow_clipped(1.0, cube).0 / vol;
        let conj = self.integral_pow_clipped(-1.0 / (p - 1.0), cube).0 / vol;
        if !conj.is_finite() || !avg_w.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok(avg_w * conj.powf(p - 1.0))
    }

    /// The A_1 quantity `(|Q|^-1 ∫_Q w) / ess-inf_Q w`, with the essential
    /// infimum taken as the minimum over nodes.
    pub fn a1_quantity(&self, cube: &Cube) -> Result<f64> {
        if !cube.inside_box(&self.grid) {
            return Err(Error::invalid("cube leaves the grid box".to_string()));
        }
        let g = &self.grid;
        let ranges = cube_cells(g, cube)
            .ok_or_else(|| Error::invalid("A_1 quantity needs a cell-aligned cube".to_string()))?;
        let avg = self.integral_pow_clipped(1.0, cube).0 / cube.volume();
        let mut inf = f64::INFINITY;
        for_cells(g.dim(), ranges, |ix, iy| {
            inf = inf.min(self.node_values[g.flat(ix, iy)]);
        });
        if inf <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(avg / inf)
    }

    /// Supremum of the A_p quantity over the family, per-generation maxima,
    /// and the growth flag: set when any quantity is non-finite or the
    /// per-generation maxima increase by more than 5% at each of the two
    /// finest generations ("not in A_p up to this resolution").
    pub fn ap_constant(&self, p: f64, family: &CubeFamily) -> Result<ApReport> {
        if family.is_empty() {
            return Err(Error::invalid("empty cube family".to_string()));
        }
        let mut per_cube = Vec::with_capacity(family.len());
        let mut by_gen: HashMap<i32, f64> = HashMap::new();
        let mut sup = 0.0f64;
        for (cube, &generation) in family.cubes.iter().zip(&family.generations) {
            let q = self.ap_quantity(p, cube)?;
            per_cube.push(q);
            sup = sup.max(q);
            let e = by_gen.entry(generation).or_insert(0.0);
            *e = e.max(q);
        }
        let mut gens: Vec<i32> = by_gen.keys().copied().collect();
        gens.sort_unstable();
        let per_generation_max: Vec<f64> = gens.iter().map(|g| by_gen[g]).collect();
        let mut flag = !sup.is_finite();
        let k = per_generation_max.len();
        if k >= 3 {
            let grow1 = per_generation_max[k - 1] > 1.05 * per_generation_max[k - 2];
            let grow2 = per_generation_max[k - 2] > 1.05 * per_generation_max[k - 3];
            if grow1 && grow2 {
                flag = true;
            }
        }
        Ok(ApReport {
            p,
            sup,
            per_generation_max,
            flag,
            family: family.descriptor(),
            per_cube,
        })
    }

    /// Bisection estimate of the critical index `q_w = inf{q > 1 : flag
    /// false at q}` over `q ∈ (1, 16]`.
    pub fn critical_index(&self, tol: f64, family: &CubeFamily) -> Result<CriticalIndexReport> {
        if !(tol > 0.0 && tol < 0.5) {
            return Err(Error::invalid(format!("tol must lie in (0, 0.5), got {tol}")));
        }
        let flag_at = |q: f64| -> Result<bool> { Ok(self.ap_constant(q, family)?.flag) };
        if flag_at(16.0)? {
            return Ok(CriticalIndexReport { estimate: 16.0, saturated: true, tol });
        }
        let mut lo = 1.0;
        let mut hi = 16.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if flag_at(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(CriticalIndexReport { estimate: hi, saturated: false, tol })
    }

    /// `w(λQ)/w(Q)` with the Lemma-A-style bound `A_p(λQ)·λ^(np)`. When λQ
    /// leaves the box the ratio is computed over the clipped cube and the
    /// bound check is skipped.
    pub fn doubling_ratio(&self, cube: &Cube, lambda: f64, p: f64) -> Result<DoublingReport> {
        if !(lambda > 1.0) {
            return Err(Error::invalid(format!("lambda must exceed 1, got {lambda}")));
        }
        if !cube.inside_box(&self.grid) {
            return Err(Error::invalid("cube leaves the grid box".to_string()));
        }
        let big = cube.scaled(lambda);
        let (w_big, clipped) = self.integral_pow_clipped(1.0, &big);
        let w_small = self.integral_pow_clipped(1.0, cube).0;
        if !(w_small > 0.0) {
            return Err(Error::invalid("w(Q) vanished".to_string()));
        }
        let ratio = w_big / w_small;
        if clipped {
            return Ok(DoublingReport { ratio, bound: None, within_bound: None, truncated: true });
        }
        let n = self.grid.dim() as f64;
        let ap_big = self.ap_quantity(p, &big)?;
        let bound = ap_big * lambda.powf(n * p);
        Ok(DoublingReport {
            ratio,
            bound: Some(bound),
            within_bound: Some(ratio <= bound * (1.0 + 1e-6)),
            truncated: false,
        })
    }

    /// Minimum of `w(2Q)/w(Q)` over family cubes whose double stays in the
    /// box; the measured reverse-doubling constant.
    pub fn reverse_doubling_min(&self, family: &CubeFamily) -> Result<f64> {
        let mut min = f64::INFINITY;
        let mut any = false;
        for cube in &family.cubes {
            let big = cube.scaled(2.0);
            if !big.inside_box(&self.grid) {
                continue;
            }
            let w_small = self.integral_pow_clipped(1.0, cube).0;
            let w_big = self.integral_pow_clipped(1.0, &big).0;
            if w_small > 0.0 {
                min = min.min(w_big / w_small);
                any = true;
            }
        }
        if !any {
            return Err(Error::invalid("no family cube has its double inside the box".to_string()));
        }
        Ok(min)
    }

    /// Box-truncated `∫_{|x| ≥ r} w(x)/|x|^(nq) dx` against the Lemma-B
    /// bound `r^(-nq) w(Q(0, 2r))`.
    pub fn tail_integral(&self, r: f64, q: f64) -> Result<TailReport> {
        if !(q > 1.0) {
            return Err(Error::invalid(format!("tail integral needs q > 1, got {q}")));
        }
        if !(r > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        let g = &self.grid;
        let n = g.dim() as f64;
        let value = match &self.kind {
            WeightKind::Power { a } => {
                let c = a - n * q;
                if g.dim() == 1 {
                    let mut v = 0.0;
                    if g.hi(0) > r {
                        v += power_integral_1d(c, r, g.hi(0));
                    }
                    if g.lo(0) < -r {
                        v += power_integral_1d(c, g.lo(0), -r);
                    }
                    v
                } else {
                    // cellwise with the radial cutoff
                    let mut v = 0.0;
                    for i in 0..g.len() {
                        let p = g.node(i);
                        let rr = norm(p, 2);
                        if rr >= r {
                            v += rr.powf(c) * g.cell_volume();
                        }
                    }
                    v
                }
            }
            WeightKind::Sampled { .. } => {
                let mut v = 0.0;
                for i in 0..g.len() {
                    let p = g.node(i);
                    let rr = norm(p, g.dim());
                    if rr >= r {
                        v += self.node_values[i] * rr.powf(-n * q) * g.cell_volume();
                    }
                }
                v
            }
        };
        // Q(0, 2r): the cube centered at 0 with side length 2r
        let bound_cube = Cube::centered(g.dim(), [0.0, 0.0], 2.0 * r);
        let (w_cube, clipped) = self.integral_pow_clipped(1.0, &bound_cube);
        let bound = r.powf(-n * q) * w_cube;
        Ok(TailReport {
            value,
            bound,
            ratio: if bound > 0.0 { value / bound } else { f64::INFINITY },
            bound_cube_clipped: clipped,
        })
    }

    /// Lemma-D check: `w(E)/w(Q) ≥ sup^-1 (|E|/|Q|)^p (1 - 1e-6)` for a
    /// union of cells E inside Q, with `sup` the A_p constant from a report.
    pub fn subset_lower_bound(
        &self,
        cube: &Cube,
        cells: &[usize],
        p: f64,
        ap_sup: f64,
    ) -> Result<SubsetCheck> {
        let w_q = self.measure_cube(cube)?;
        let w_e = self.measure_cells(cells);
        let vol_e = cells.len() as f64 * self.grid.cell_volume();
        let lhs = w_e / w_q;
        let rhs = (vol_e / cube.volume()).powf(p) / ap_sup * (1.0 - 1e-6);
        Ok(SubsetCheck { lhs, rhs, pass: lhs >= rhs })
    }

    /// `L^p_w` norm of a field on the same grid: `(Σ |f_i|^p ∫_cell w)^(1/p)`.
    pub fn lp_norm(&self, f: &SampledField, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::invalid(format!("norm exponent must be positive, got {p}")));
        }
        if f.grid() != &self.grid {
            return Err(Error::invalid("field and weight grids differ".to_string()));
        }
        let masses = self.prefix(1.0);
        let g = &self.grid;
        let mut acc = 0.0;
        for ix in 0..g.cells(0) {
            if g.dim() == 1 {
                let mass = masses[ix + 1] - masses[ix];
                acc += f.values()[ix].abs().powf(p) * mass;
            } else {
                let ny = g.cells(1);
                for iy in 0..ny {
                    let mass = masses[(ix + 1) * (ny + 1) + iy + 1]
                        - masses[ix * (ny + 1) + iy + 1]
                        - masses[(ix + 1) * (ny + 1) + iy]
                        + masses[ix * (ny + 1) + iy];
                    acc += f.values()[g.flat(ix, iy)].abs().powf(p) * mass;
                }
            }
        }
        Ok(acc.powf(1.0 / p))
    }

    /// Weighted maximal operator: `M_w f(x) = sup over family cubes
    /// containing x of w(Q)^-1 ∫_Q |f| w`. The sup runs over the enumerated
    /// family, which bounds it from below by the true maximal function.
    pub fn weighted_maximal(&self, f: &SampledField, family: &CubeFamily) -> Result<SampledField> {
        if f.grid() != &self.grid {
            return Err(Error::invalid("field and weight grids differ".to_string()));
        }
        let g = &self.grid;
        let masses = self.prefix(1.0);
        let mut out = vec![0.0; g.len()];
        for cube in &family.cubes {
            let Some(ranges) = cube_cells(g, cube) else {
                continue;
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for_cells(g.dim(), ranges, |ix, iy| {
                let mass = if g.dim() == 1 {
                    masses[ix + 1] - masses[ix]
                } else {
                    let ny = g.cells(1);
                    masses[(ix + 1) * (ny + 1) + iy + 1] - masses[ix * (ny + 1) + iy + 1]
                        - masses[(ix + 1) * (ny + 1) + iy]
                        + masses[ix * (ny + 1) + iy]
                };
                num += f.values()[g.flat(ix, iy)].abs() * mass;
                den += mass;
            });
            if den <= 0.0 {
                continue;
            }
            let avg = num / den;
            for_cells(g.dim(), ranges, |ix, iy| {
                let i = g.flat(ix, iy);
                if avg > out[i] {
                    out[i] = avg;
                }
            });
        }
        SampledField::from_values(g.clone(), out)
    }
}

fn norm(p: [f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        p[0].abs()
    } else {
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// `∫_a^b |x|^c dx` in closed form; +∞ when the interval touches 0 and
/// `c ≤ -1`.
pub fn power_integral_1d(c: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        one_sided(c, a, b)
    } else if b <= 0.0 {
        one_sided(c, -b, -a)
    } else {
        one_sided(c, 0.0, -a) + one_sided(c, 0.0, b)
    }
}

/// `∫_a^b x^c dx` for `0 ≤ a ≤ b`.
fn one_sided(c: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if c == -1.0 {
        if a == 0.0 {
            return f64::INFINITY;
        }
        return (b / a).ln();
    }
    let e = c + 1.0;
    if a == 0.0 {
        if e <= 0.0 {
            return f64::INFINITY;
        }
        return b.powf(e) / e;
    }
    (b.powf(e) - a.powf(e)) / e
}

/// `∬_R |x|^c dx` over a rectangle, radially exact near the origin.
pub fn rect_integral_2d(c: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    // split along the axes so each piece lives in one closed quadrant
    let xs = split_at_zero(x0, x1);
    let ys = split_at_zero(y0, y1);
    let mut acc = 0.0;
    for &(ax0, ax1) in &xs {
        for &(ay0, ay1) in &ys {
            acc += quadrant_rect(c, ax0, ax1, ay0, ay1, 0);
        }
    }
    acc
}

fn split_at_zero(a: f64, b: f64) -> Vec<(f64, f64)> {
    if a >= 0.0 {
        vec![(a, b)]
    } else if b <= 0.0 {
        vec![(-b, -a)]
    } else {
        vec![(0.0, -a), (0.0, b)]
    }
}

/// Rectangle in the first quadrant, `0 ≤ x0 < x1`, `0 ≤ y0 < y1`.
fn quadrant_rect(c: f64, x0: f64, x1: f64, y0: f64, y1: f64, depth: usize) -> f64 {
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    if x0 == 0.0 && y0 == 0.0 {
        return corner_rect(c, x1, y1);
    }
    let size = (x1 - x0).max(y1 - y0);
    let dist = (x0 * x0 + y0 * y0).sqrt();
    if dist >= 0.5 * size || depth >= 28 {
        return gauss_rect(c, x0, x1, y0, y1);
    }
    let xm = 0.5 * (x0 + x1);
    let ym = 0.5 * (y0 + y1);
    quadrant_rect(c, x0, xm, y0, ym, depth + 1)
        + quadrant_rect(c, xm, x1, y0, ym, depth + 1)
        + quadrant_rect(c, x0, xm, ym, y1, depth + 1)
        + quadrant_rect(c, xm, x1, ym, y1, depth + 1)
}

/// Rectangle `[0,w]×[0,v]` with a corner at the origin: radial integration
/// is exact in r, leaving a smooth angular integral.
fn corner_rect(c: f64, w: f64, v: f64) -> f64 {
    if w <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if c + 2.0 <= 0.0 {
        return f64::INFINITY;
    }
    let e = c + 2.0;
    let theta_split = v.atan2(w);
    let (nodes, weights) = gauss_nodes();
    let mut acc = 0.0;
    // θ in [0, atan(v/w)]: R(θ) = w / cos θ
    let half1 = 0.5 * theta_split;
    for (t, wt) in nodes.iter().zip(weights) {
        let theta = half1 * (t + 1.0);
        acc += wt * half1 * (w / theta.cos()).powf(e);
    }
    // θ in [atan(v/w), π/2]: R(θ) = v / sin θ
    let half2 = 0.5 * (std::f64::consts::FRAC_PI_2 - theta_split);
    for (t, wt) in nodes.iter().zip(weights) {
        let theta = theta_split + half2 * (t + 1.0);
        acc += wt * half2 * (v / theta.sin()).powf(e);
    }
    acc / e
}

fn gauss_rect(c: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (nodes, weights) = gauss_nodes();
    let hx = 0.5 * (x1 - x0);
    let hy = 0.5 * (y1 - y0);
    let cx = 0.5 * (x0 + x1);
    let cy = 0.5 * (y0 + y1);
    let mut acc = 0.0;
    for (tx, wx) in nodes.iter().zip(weights) {
        let x = cx + hx * tx;
        for (ty, wy) in nodes.iter().zip(weights) {
            let y = cy + hy * ty;
            acc += wx * wy * (x * x + y * y).powf(c / 2.0);
        }
    }
    acc * hx * hy
}

/// 16-point Gauss-Legendre rule on [-1, 1], computed once by Newton
/// iteration on the Legendre recurrence.
fn gauss_nodes() -> (&'static [f64; 16], &'static [f64; 16]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| {
        const N: usize = 16;
        let mut nodes = [0.0f64; N];
        let mut weights = [0.0f64; N];
        for i in 0..N {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..60 {
                let (p, dp) = legendre(N, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(N, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    });
    (n, w)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A_p report; serialized with exactly the external-interface keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub sup: f64,
    pub per_generation_max: Vec<f64>,
    pub flag: bool,
    #[serde(skip)]
    pub family: String,
    #[serde(skip)]
    pub per_cube: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalIndexReport {
    pub estimate: f64,
    /// True when the flag is raised for every q up to 16: "q_w ≥ 16".
    pub saturated: bool,
    pub tol: f64,
}

impl std::fmt::Display for CriticalIndexReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.saturated {
            write!(f, ">= 16")
        } else {
            write!(f, "{}", self.estimate)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    pub ratio: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    /// λQ left the box; the check was skipped.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
    pub bound_cube_clipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}
