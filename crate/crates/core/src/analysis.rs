//! UE-grid evaluation, room averages, CDFs, parameter sweeps and noise
//! calibration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{is_los, make_rect_room, BuildingLayout, Point2D, RoomSpec};
use crate::metrics::{BwpResult, Evaluator, GainModels, QuadratureConfig};
use crate::propagation::Scenario;

/// Everything besides the scenario that determines a grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Target UE spacing; each axis is split into `round(extent / resolution)`
    /// equal cells (at least one).
    pub resolution_m: f64,
    pub quad: QuadratureConfig,
    pub models: GainModels,
    /// Wall loss of generated rectangular rooms.
    pub wall_attenuation_db: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution_m: 0.5,
            quad: QuadratureConfig::default(),
            models: GainModels::default(),
            wall_attenuation_db: 10.0,
        }
    }
}

/// Raster of evaluations at cell centres, row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub origin: Point2D,
    pub cell_width: f64,
    pub cell_height: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub cells: Vec<BwpResult>,
}

impl GridMap {
    pub fn get(&self, ix: usize, iy: usize) -> &BwpResult {
        &self.cells[iy * self.n_x + ix]
    }

    /// Same powers with `noise_w` in the interference gain.
    pub fn with_noise(&self, noise_w: f64) -> GridMap {
        GridMap {
            cells: self.cells.iter().map(|c| c.with_noise(noise_w)).collect(),
            ..self.clone()
        }
    }

    pub fn g_i(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.g_i).collect()
    }

    pub fn g_p(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.g_p).collect()
    }
}

fn axis_cells(extent: f64, resolution: f64) -> usize {
    ((extent / resolution).round() as usize).max(1)
}

/// UE locations at the centres of the grid covering the layout bounds.
pub fn grid_points(layout: &BuildingLayout, resolution_m: f64) -> Result<(usize, usize, Vec<Point2D>)> {
    if !(resolution_m.is_finite() && resolution_m > 0.0) {
        return Err(Error::Argument {
            name: "resolution",
            reason: format!("must be positive, got {resolution_m}"),
        });
    }
    let b = layout.bounds();
    let n_x = axis_cells(b.width(), resolution_m);
    let n_y = axis_cells(b.height(), resolution_m);
    let (dx, dy) = (b.width() / n_x as f64, b.height() / n_y as f64);
    let mut pts = Vec::with_capacity(n_x * n_y);
    for iy in 0..n_y {
        for ix in 0..n_x {
            pts.push(Point2D::new(
                b.min.x + (ix as f64 + 0.5) * dx,
                b.min.y + (iy as f64 + 0.5) * dy,
            ));
        }
    }
    Ok((n_x, n_y, pts))
}

/// Evaluates every cell centre of the layout grid in parallel.
pub fn layout_grid_eval(layout: &BuildingLayout, scenario: &Scenario, opts: &GridOptions) -> Result<GridMap> {
    let (n_x, n_y, pts) = grid_points(layout, opts.resolution_m)?;
    let evaluator = Evaluator::new(layout, scenario, &opts.quad, opts.models)?;
    let cells = pts
        .par_iter()
        .map(|&ue| evaluator.evaluate(ue))
        .collect::<Result<Vec<_>>>()?;
    let b = layout.bounds();
    Ok(GridMap {
        origin: b.min,
        cell_width: b.width() / n_x as f64,
        cell_height: b.height() / n_y as f64,
        n_x,
        n_y,
        cells,
    })
}

pub fn room_grid_eval(spec: RoomSpec, scenario: &Scenario, opts: &GridOptions) -> Result<GridMap> {
    let layout = make_rect_room(spec, opts.wall_attenuation_db)?;
    layout_grid_eval(&layout, scenario, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMetrics {
    pub g_i: f64,
    pub g_p: f64,
}

pub fn mean_metrics(grid: &GridMap) -> Result<MeanMetrics> {
    mean_of(grid.cells.iter())
}

fn mean_of<'a>(cells: impl Iterator<Item = &'a BwpResult>) -> Result<MeanMetrics> {
    let (mut n, mut gi, mut gp) = (0usize, 0.0, 0.0);
    for c in cells {
        n += 1;
        gi += c.g_i;
        gp += c.g_p;
    }
    if n == 0 {
        return Err(Error::Empty("grid"));
    }
    Ok(MeanMetrics {
        g_i: gi / n as f64,
        g_p: gp / n as f64,
    })
}

/// Empirical CDF: one `(value, P(X <= value))` pair per distinct value,
/// ascending.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("CDF input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = p,
            _ => out.push((*v, p)),
        }
    }
    Ok(out)
}

/// Groups grid cells into rooms: neighbouring cells whose centres see each
/// other belong to the same room. Labels are numbered in row-major order of
/// first appearance.
pub fn label_rooms(layout: &BuildingLayout, grid: &GridMap) -> Vec<usize> {
    let n = grid.cells.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let join = |a: usize, b: usize, parent: &mut Vec<usize>| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for iy in 0..grid.n_y {
        for ix in 0..grid.n_x {
            let i = iy * grid.n_x + ix;
            let here = grid.cells[i].ue;
            if ix + 1 < grid.n_x && is_los(layout, here, grid.cells[i + 1].ue) {
                join(i, i + 1, &mut parent);
            }
            if iy + 1 < grid.n_y && is_los(layout, here, grid.cells[i + grid.n_x].ue) {
                join(i, i + grid.n_x, &mut parent);
            }
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            if ids[root] == usize::MAX {
                ids[root] = next;
                next += 1;
            }
            ids[root]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSummary {
    pub label: usize,
    pub cells: usize,
    pub centroid: Point2D,
    pub mean: MeanMetrics,
}

pub fn room_means(grid: &GridMap, labels: &[usize]) -> Result<Vec<RoomSummary>> {
    if labels.len() != grid.cells.len() {
        return Err(Error::Shape {
            expected: grid.cells.len(),
            got: labels.len(),
        });
    }
    let rooms = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = Vec::with_capacity(rooms);
    for label in 0..rooms {
        let members: Vec<&BwpResult> = grid.cells.iter().zip(labels).filter(|(_, &l)| l == label).map(|(c, _)| c).collect();
        let k = members.len() as f64;
        let centroid = members
            .iter()
            .fold(Point2D::default(), |acc, c| acc + c.ue * (1.0 / k));
        out.push(RoomSummary {
            label,
            cells: members.len(),
            centroid,
            mean: mean_of(members.into_iter())?,
        });
    }
    Ok(out)
}

/// Parameter set of the single-room sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub areas_m2: Vec<f64>,
    pub aspect_ratios: Vec<f64>,
    pub frequencies_ghz: Vec<f64>,
}

impl SweepSpec {
    /// Areas 20..100 m² in steps of 20 and aspect ratios 1..8.
    pub fn room_set(frequencies_ghz: Vec<f64>) -> Self {
        Self {
            areas_m2: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            aspect_ratios: (1..=8).map(f64::from).collect(),
            frequencies_ghz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::Argument {
                name,
                reason: reason.into(),
            })
        };
        if self.areas_m2.is_empty() || self.areas_m2.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("areas", "need at least one positive area");
        }
        if self.aspect_ratios.is_empty() || self.aspect_ratios.iter().any(|r| !(r.is_finite() && *r >= 1.0)) {
            return bad("aspect-ratios", "need at least one aspect ratio >= 1");
        }
        if self.frequencies_ghz.is_empty() {
            return bad("frequencies", "need at least one frequency");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionRow {
    pub frequency_ghz: f64,
    pub area_m2: f64,
    pub aspect_ratio: f64,
    pub mean: MeanMetrics,
}

/// One row per (frequency, area, aspect ratio), in that nesting order.
pub fn sweep_dimensions(spec: &SweepSpec, scenario: &Scenario, opts: &GridOptions) -> Result<Vec<DimensionRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &f in &spec.frequencies_ghz {
        let s = scenario.with_frequency(f);
        for &area in &spec.areas_m2 {
            for &ar in &spec.aspect_ratios {
                let room = RoomSpec::from_area_aspect(area, ar)?;
                let mean = mean_metrics(&room_grid_eval(room, &s, opts)?)?;
                rows.push(DimensionRow {
                    frequency_ghz: f,
                    area_m2: area,
                    aspect_ratio: ar,
                    mean,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyRow {
    pub frequency_ghz: f64,
    pub mean: MeanMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySweep {
    pub rows: Vec<FrequencyRow>,
    /// Mean `g_p` never drops by more than the slack between grid points.
    pub g_p_non_decreasing: bool,
    /// Differences of mean `g_i` change sign at most once, from + to -.
    pub g_i_unimodal: bool,
    /// Refined maximiser of mean `g_i`.
    pub f_star_ghz: f64,
    pub g_i_star: f64,
    /// Successive `[lo, hi]` brackets of the refinement.
    pub brackets: Vec<(f64, f64)>,
}

/// Relative tolerance used by the trend flags.
pub const TREND_SLACK: f64 = 0.01;

/// `n` frequencies log-spaced over `[from, to]`.
pub fn log_spaced(from: f64, to: f64, n: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to >= from) || n == 0 || (n == 1 && to != from) {
        return Err(Error::Argument {
            name: "points",
            reason: format!("cannot log-space {n} points over [{from}, {to}]"),
        });
    }
    if n == 1 {
        return Ok(vec![from]);
    }
    let (a, b) = (from.ln(), to.ln());
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                to
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

fn non_decreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - slack * w[0].abs())
}

fn unimodal(v: &[f64], slack: f64) -> bool {
    let mut falling = false;
    for w in v.windows(2) {
        let tol = slack * w[0].abs();
        if w[1] < w[0] - tol {
            falling = true;
        } else if w[1] > w[0] + tol && falling {
            return false;
        }
    }
    true
}

/// Evaluates `room` at each frequency, then refines the maximiser of mean
/// `g_i` by golden-section search in `log f` until the bracket is within ±2%.
pub fn sweep_frequency(
    frequencies_ghz: &[f64],
    scenario: &Scenario,
    room: RoomSpec,
    opts: &GridOptions,
) -> Result<FrequencySweep> {
    if frequencies_ghz.is_empty() {
        return Err(Error::Empty("frequencies"));
    }
    let eval = |f: f64| -> Result<MeanMetrics> { mean_metrics(&room_grid_eval(room, &scenario.with_frequency(f), opts)?) };
    let rows = frequencies_ghz
        .iter()
        .map(|&f| eval(f).map(|mean| FrequencyRow { frequency_ghz: f, mean }))
        .collect::<Result<Vec<_>>>()?;
    let g_i: Vec<f64> = rows.iter().map(|r| r.mean.g_i).collect();
    let g_p: Vec<f64> = rows.iter().map(|r| r.mean.g_p).collect();

    let best = g_i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = frequencies_ghz[best.saturating_sub(1)];
    let hi = frequencies_ghz[(best + 1).min(frequencies_ghz.len() - 1)];
    let (f_star, g_i_star, brackets) = golden_max(|f| eval(f).map(|m| m.g_i), lo, hi, rows[best].frequency_ghz, g_i[best])?;
    Ok(FrequencySweep {
        g_p_non_decreasing: non_decreasing(&g_p, TREND_SLACK),
        g_i_unimodal: unimodal(&g_i, TREND_SLACK),
        rows,
        f_star_ghz: f_star,
        g_i_star,
        brackets,
    })
}

/// Golden-section maximisation in `ln f` on `[lo, hi]` until `hi / lo <= 1.04`.
/// `seed` is a known point (typically the best grid point) kept if nothing
/// better is found.
fn golden_max<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    seed_x: f64,
    seed_y: f64,
) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let target = 1.04f64.ln();
    let mut brackets = vec![(lo, hi)];
    let (mut best_x, mut best_y) = (seed_x, seed_y);
    if b - a <= target {
        return Ok((best_x, best_y, brackets));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while b - a > target {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
        brackets.push((a.exp(), b.exp()));
    }
    for (x, y) in [(c, fc), (d, fd)] {
        if y > best_y {
            best_x = x.exp();
            best_y = y;
        }
    }
    Ok((best_x, best_y, brackets))
}

/// Outcome of [`calibrate_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCalibration {
    /// Smallest σ² (W) with zero violation, if any.
    pub sigma2_w: Option<f64>,
    /// σ² with the smallest violation and that violation: the summed distance
    /// of per-room mean `g_i` from the target interval.
    pub best_sigma2_w: f64,
    pub best_residual: f64,
    /// Every room has `i_b = i_o` everywhere, so `g_i = 1` whatever σ² is.
    pub degenerate: bool,
    pub room_means_at_best: Vec<f64>,
}

fn violation(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

/// Searches σ² ∈ {0} ∪ log-grid so that the mean `g_i` of every room lies in
/// `[lo, hi]`. Rooms are given as precomputed grids; their noise is ignored.
pub fn calibrate_noise(rooms: &[GridMap], lo: f64, hi: f64) -> Result<NoiseCalibration> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Argument {
            name: "target",
            reason: format!("invalid interval [{lo}, {hi}]"),
        });
    }
    if rooms.is_empty() || rooms.iter().any(|g| g.cells.is_empty()) {
        return Err(Error::Empty("rooms"));
    }
    let cells = || rooms.iter().flat_map(|g| g.cells.iter());
    let degenerate = cells().all(|c| {
        let b = &c.breakdown;
        (b.i_o - b.i_b).abs() <= 1e-12 * b.i_o.abs().max(b.i_b.abs())
    });
    let smallest = cells().map(|c| c.breakdown.i_b.min(c.breakdown.i_o)).fold(f64::INFINITY, f64::min);
    let largest = cells().map(|c| c.breakdown.i_b.max(c.breakdown.i_o)).fold(0.0, f64::max);

    let mut candidates = vec![0.0];
    if smallest > 0.0 && largest.is_finite() {
        let (a, b) = ((smallest * 1e-4).ln(), (largest * 1e4).ln());
        let steps = 400;
        candidates.extend((0..=steps).map(|k| (a + (b - a) * k as f64 / steps as f64).exp()));
    }

    let means_at = |sigma2: f64| -> Result<Vec<f64>> {
        rooms
            .iter()
            .map(|g| {
                let n = g.cells.len() as f64;
                Ok(g.cells.iter().map(|c| c.with_noise(sigma2).g_i).sum::<f64>() / n)
            })
            .collect()
    };
    let mut best = (f64::INFINITY, 0.0);
    for &sigma2 in &candidates {
        let residual: f64 = means_at(sigma2)?.iter().map(|&m| violation(m, lo, hi)).sum();
        if residual < best.0 {
            best = (residual, sigma2);
        }
        if residual == 0.0 {
            break;
        }
    }
    Ok(NoiseCalibration {
        sigma2_w: (best.0 == 0.0).then_some(best.1),
        best_sigma2_w: best.1,
        best_residual: best.0,
        degenerate,
        room_means_at_best: means_at(best.1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_office_layout, OfficeSpec};
    use crate::metrics::{GainModels, NlosModel, PowerBreakdown};
    use crate::propagation::PathGainModel;

    fn coarse() -> GridOptions {
        GridOptions {
            resolution_m: 1.0,
            quad: QuadratureConfig {
                angular: 180,
                ..QuadratureConfig::default()
            },
            ..GridOptions::default()
        }
    }

    #[test]
    fn grid_covers_room_with_half_cell_margin() {
        let s = Scenario::at_frequency(28.0);
        let g = room_grid_eval(RoomSpec::new(4.0, 5.0).unwrap(), &s, &coarse()).unwrap();
        assert_eq!((g.n_x, g.n_y), (4, 5));
        assert_eq!(g.get(0, 0).ue, Point2D::new(0.5, 0.5));
        assert_eq!(g.get(3, 4).ue, Point2D::new(3.5, 4.5));
    }

    #[test]
    fn single_cell_grid() {
        let s = Scenario::at_frequency(28.0);
        let opts = GridOptions {
            resolution_m: 10.0,
            ..coarse()
        };
        let g = room_grid_eval(RoomSpec::new(3.0, 4.0).unwrap(), &s, &opts).unwrap();
        assert_eq!(g.cells.len(), 1);
        let m = mean_metrics(&g).unwrap();
        assert_eq!(m.g_i, g.cells[0].g_i);
        assert_eq!(m.g_p, g.cells[0].g_p);
    }

    #[test]
    fn mean_of_constant_field() {
        let s = Scenario::at_frequency(28.0);
        let mut g = room_grid_eval(RoomSpec::new(2.0, 2.0).unwrap(), &s, &coarse()).unwrap();
        let first = g.cells[0];
        for c in &mut g.cells {
            *c = first;
        }
        let m = mean_metrics(&g).unwrap();
        assert_eq!(m.g_i, first.g_i);
        assert_eq!(m.g_p, first.g_p);
        g.cells.clear();
        assert!(mean_metrics(&g).is_err());
    }

    #[test]
    fn cdf_basics() {
        let c = cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        let c = cdf(&[1.0, 1.0, 5.0, 1.0]).unwrap();
        assert_eq!(c, vec![(1.0, 0.75), (5.0, 1.0)]);
        assert!(cdf(&[]).is_err());
    }

    #[test]
    fn office_rooms_are_labelled_separately() {
        let layout = make_office_layout(&OfficeSpec::default()).unwrap();
        let s = Scenario::at_frequency(28.0);
        let opts = GridOptions {
            resolution_m: 2.5,
            quad: QuadratureConfig {
                angular: 16,
                ..QuadratureConfig::default()
            },
            ..GridOptions::default()
        };
        let g = layout_grid_eval(&layout, &s, &opts).unwrap();
        let labels = label_rooms(&layout, &g);
        let rooms = room_means(&g, &labels).unwrap();
        // 40 offices and 2 corridors.
        assert_eq!(rooms.len(), 42);
        assert_eq!(rooms.iter().map(|r| r.cells).sum::<usize>(), g.cells.len());
        assert_eq!(rooms.iter().filter(|r| r.cells == 16).count(), 40);
    }

    #[test]
    fn single_entry_sweep_is_direct_evaluation() {
        let s = Scenario::at_frequency(6.0);
        let spec = SweepSpec {
            areas_m2: vec![20.0],
            aspect_ratios: vec![2.0],
            frequencies_ghz: vec![28.0],
        };
        let rows = sweep_dimensions(&spec, &s, &coarse()).unwrap();
        let direct = mean_metrics(
            &room_grid_eval(RoomSpec::from_area_aspect(20.0, 2.0).unwrap(), &Scenario::at_frequency(28.0), &coarse()).unwrap(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean, direct);
    }

    #[test]
    fn trend_flags() {
        assert!(non_decreasing(&[1.0, 2.0, 1.995, 3.0], 0.01));
        assert!(!non_decreasing(&[1.0, 2.0, 1.9], 0.01));
        assert!(unimodal(&[1.0, 2.0, 3.0, 2.5, 1.0], 0.01));
        assert!(unimodal(&[3.0, 2.0, 1.0], 0.01));
        assert!(!unimodal(&[1.0, 3.0, 2.0, 3.0], 0.01));
    }

    #[test]
    fn log_spacing_hits_both_ends() {
        let f = log_spaced(0.5, 100.0, 24).unwrap();
        assert_eq!(f.len(), 24);
        assert_eq!(f[0], 0.5);
        assert_eq!(f[23], 100.0);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(log_spaced(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn golden_section_brackets_shrink() {
        let (x, _, brackets) = golden_max(|f: f64| Ok(-(f.ln() - 3f64.ln()).powi(2)), 1.0, 10.0, 1.0, -1.0).unwrap();
        assert!((x / 3.0 - 1.0).abs() < 0.02, "{x}");
        for w in brackets.windows(2) {
            assert!(w[1].1 / w[1].0 < w[0].1 / w[0].0);
        }
        let last = brackets.last().unwrap();
        assert!(last.1 / last.0 <= 1.04);
    }

    fn fake_grid(i_o: f64, i_b: f64) -> GridMap {
        let ue = Point2D::new(0.5, 0.5);
        let b = PowerBreakdown {
            p_o: 1.0,
            i_o,
            p_b: 1.0,
            i_b,
            p_b_los: 1.0,
            p_b_nlos: 0.0,
            i_b_los: 0.0,
            i_b_nlos: i_b,
        };
        GridMap {
            origin: Point2D::default(),
            cell_width: 1.0,
            cell_height: 1.0,
            n_x: 1,
            n_y: 1,
            cells: vec![BwpResult::from_breakdown(ue, b, 0.0)],
        }
    }

    #[test]
    fn calibration_accepts_zero_noise_for_open_target() {
        let rooms = [fake_grid(50.0, 1.0), fake_grid(10.0, 1.0)];
        let c = calibrate_noise(&rooms, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(c.sigma2_w, Some(0.0));
        assert!(!c.degenerate);
    }

    #[test]
    fn calibration_finds_noise_that_compresses_gains() {
        // g_i = (50 + σ²)/(1 + σ²) and (10 + σ²)/(1 + σ²) both lie in
        // [2, 12] for σ² in [38/11, 8], and never both in [5, 6].
        let rooms = [fake_grid(50.0, 1.0), fake_grid(10.0, 1.0)];
        let c = calibrate_noise(&rooms, 2.0, 12.0).unwrap();
        let s = c.sigma2_w.expect("feasible");
        assert!((38.0 / 11.0..=8.0).contains(&s), "{s}");
        let none = calibrate_noise(&rooms, 5.0, 6.0).unwrap();
        assert_eq!(none.sigma2_w, None);
        assert!(none.best_residual > 0.0);
    }

    #[test]
    fn calibration_reports_degeneracy() {
        let rooms = [fake_grid(3.0, 3.0)];
        let c = calibrate_noise(&rooms, 41.0, 46.0).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.sigma2_w, None);
        assert_eq!(c.room_means_at_best, vec![1.0]);
    }

    #[test]
    fn uniform_open_space_models_give_unit_grid() {
        let mut s = Scenario::at_frequency(28.0);
        s.r_max_m = 2000.0;
        let opts = GridOptions {
            models: GainModels {
                los: PathGainModel::OpenSpaceTwoRay,
                nlos: NlosModel::Override(PathGainModel::OpenSpaceTwoRay),
            },
            ..coarse()
        };
        let g = room_grid_eval(RoomSpec::new(2.0, 3.0).unwrap(), &s, &opts).unwrap();
        for c in &g.cells {
            assert!((c.g_p - 1.0).abs() < 1e-9 && (c.g_i - 1.0).abs() < 1e-9);
        }
    }
}
