//! Intended and interference powers of the continuum transmitter field, and
//! the interference gain `g_i` and power gain `g_p` derived from them.
//!
//! Every point of the plane within `r_max` of the UE radiates `P_T dΩ`. A
//! point is *intended* when its link is detectable (`P_T G(r) > P_th`) and
//! *interference* otherwise. In open space the gain is the two-ray law; in the
//! building it is the LOS law for links that cross no wall and the NLOS law
//! (single-slope or multi-wall) for the rest.
//!
//! The in-building integral is evaluated on a polar grid centred at the UE:
//! a midpoint rule in angle, and along each ray an exact piecewise
//! integration between the breakpoints where the link class changes (wall
//! hits, coverage radii, `r_min`, `r_max`). Laws without a closed-form radial
//! moment (the coherent two-ray) fall back to adaptive Gauss-Kronrod panels.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{crossing_loss, ray_hits, BuildingLayout, Point2D};
use crate::propagation::{detection_radius, GainLaw, PathGainModel, Scenario};
use crate::quadrature::RadialRule;

/// Resolution of the polar integration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Number of equal angular sectors around the UE.
    pub angular: usize,
    /// Rule for radial integrands without closed form.
    pub radial: RadialRule,
    /// Overrides `Scenario::r_max_m` when set.
    pub r_max_m: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            angular: 720,
            radial: RadialRule::default(),
            r_max_m: None,
        }
    }
}

impl QuadratureConfig {
    /// Multiplies both resolutions by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self {
            angular: self.angular * factor,
            radial: RadialRule {
                panels: self.radial.panels * factor,
                rel_tol: self.radial.rel_tol / (factor * factor) as f64,
            },
            r_max_m: self.r_max_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.angular == 0 || self.radial.panels == 0 || !(self.radial.rel_tol > 0.0) {
            return Err(Error::Argument {
                name: "quadrature",
                reason: "resolutions and tolerance must be positive".into(),
            });
        }
        if let Some(r) = self.r_max_m {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Argument {
                    name: "r_max_m",
                    reason: format!("must be positive, got {r}"),
                });
            }
        }
        Ok(())
    }

    pub fn r_max(&self, scenario: &Scenario) -> f64 {
        self.r_max_m.unwrap_or(scenario.r_max_m)
    }
}

/// Gain law used for NLOS links in the building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NlosModel {
    /// Single-slope law with exponent `n_nlos`.
    SingleSlope,
    /// LOS law minus the summed losses of the walls crossed.
    MultiWall,
    /// A fixed law regardless of the walls crossed.
    Override(PathGainModel),
}

/// Gain laws for LOS and NLOS links in the building scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainModels {
    pub los: PathGainModel,
    pub nlos: NlosModel,
}

impl Default for GainModels {
    fn default() -> Self {
        Self {
            los: PathGainModel::InBuildingLos,
            nlos: NlosModel::SingleSlope,
        }
    }
}

impl GainModels {
    pub fn multi_wall() -> Self {
        Self {
            nlos: NlosModel::MultiWall,
            ..Self::default()
        }
    }

    /// Both link classes use `model`; with no walls this reproduces the
    /// open-space benchmark.
    pub fn uniform(model: PathGainModel) -> Self {
        Self {
            los: model,
            nlos: NlosModel::Override(model),
        }
    }

    /// Law for a link crossing `crossings` walls of total loss `loss_db`.
    pub fn model_for(&self, crossings: usize, loss_db: f64) -> PathGainModel {
        if crossings == 0 {
            return self.los;
        }
        match self.nlos {
            NlosModel::SingleSlope => PathGainModel::InBuildingNlos,
            NlosModel::MultiWall => PathGainModel::MultiWall {
                crossings: crossings as u32,
                loss_db,
            },
            NlosModel::Override(m) => m,
        }
    }
}

/// Where a transmit element sits relative to the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Open space, intended.
    Po,
    /// Open space, interference.
    Io,
    /// In building, LOS intended.
    Pl,
    /// In building, NLOS intended.
    Pn,
    /// In building, LOS interference.
    Il,
    /// In building, NLOS interference.
    In,
}

/// The propagation environment of a classification query.
#[derive(Debug, Clone, Copy)]
pub enum Environment<'a> {
    OpenSpace,
    Building {
        layout: &'a BuildingLayout,
        models: GainModels,
    },
}

pub fn classify_region(env: Environment<'_>, scenario: &Scenario, ue: Point2D, tx: Point2D) -> Region {
    let r = ue.distance(tx);
    match env {
        Environment::OpenSpace => {
            if r <= detection_radius(PathGainModel::OpenSpaceTwoRay, scenario) {
                Region::Po
            } else {
                Region::Io
            }
        }
        Environment::Building { layout, models } => {
            let (k, loss) = crossing_loss(layout, tx, ue);
            let intended = r <= detection_radius(models.model_for(k, loss), scenario);
            match (k == 0, intended) {
                (true, true) => Region::Pl,
                (true, false) => Region::Il,
                (false, true) => Region::Pn,
                (false, false) => Region::In,
            }
        }
    }
}

/// Received powers (W) in both scenarios, split by region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub p_o: f64,
    pub i_o: f64,
    pub p_b: f64,
    pub i_b: f64,
    pub p_b_los: f64,
    pub p_b_nlos: f64,
    pub i_b_los: f64,
    pub i_b_nlos: f64,
}

impl PowerBreakdown {
    pub fn new(open: OpenSpacePowers, p_b_los: f64, p_b_nlos: f64, i_b_los: f64, i_b_nlos: f64) -> Self {
        Self {
            p_o: open.p_o,
            i_o: open.i_o,
            p_b: p_b_los + p_b_nlos,
            i_b: i_b_los + i_b_nlos,
            p_b_los,
            p_b_nlos,
            i_b_los,
            i_b_nlos,
        }
    }
}

/// Evaluation at one UE location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwpResult {
    pub ue: Point2D,
    pub breakdown: PowerBreakdown,
    /// Noise power (W) used for `g_i`.
    pub noise_w: f64,
    pub g_p: f64,
    pub g_i: f64,
    /// `γ_B / γ_O`, equal to `g_p * g_i`.
    pub gamma_ratio: f64,
}

impl BwpResult {
    pub fn from_breakdown(ue: Point2D, breakdown: PowerBreakdown, noise_w: f64) -> Self {
        let g_p = breakdown.p_b / breakdown.p_o;
        let g_i = (breakdown.i_o + noise_w) / (breakdown.i_b + noise_w);
        Self {
            ue,
            breakdown,
            noise_w,
            g_p,
            g_i,
            gamma_ratio: g_p * g_i,
        }
    }

    /// Same powers, different noise level.
    pub fn with_noise(&self, noise_w: f64) -> Self {
        Self::from_breakdown(self.ue, self.breakdown, noise_w)
    }

    pub fn sinr_building(&self) -> f64 {
        self.breakdown.p_b / (self.breakdown.i_b + self.noise_w)
    }

    pub fn sinr_open(&self) -> f64 {
        self.breakdown.p_o / (self.breakdown.i_o + self.noise_w)
    }
}

/// Open-space intended and interference powers (independent of the UE).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenSpacePowers {
    pub p_o: f64,
    pub i_o: f64,
}

/// Intended and interference powers of a radially symmetric field using
/// `model` everywhere, integrated over the disk of radius `r_max`.
pub fn radial_powers(model: PathGainModel, scenario: &Scenario, quad: &QuadratureConfig) -> Result<OpenSpacePowers> {
    scenario.validate()?;
    quad.validate()?;
    let r_max = quad.r_max(scenario);
    let coverage = detection_radius(model, scenario);
    if coverage == 0.0 {
        return Err(Error::Numerical(format!("{model:?}: no detectable region")));
    }
    if coverage >= r_max {
        return Err(Error::Unreachable {
            distance_m: coverage,
            r_max_m: r_max,
        });
    }
    let law = GainLaw::new(model, scenario);
    let w = 2.0 * PI * scenario.p_t();
    Ok(OpenSpacePowers {
        p_o: w * law.radial_moment(scenario.r_min_m, 0.0, coverage, quad.radial),
        i_o: w * law.radial_moment(scenario.r_min_m, coverage, r_max, quad.radial),
    })
}

/// `P_O` and `I_O` of the open-space benchmark.
pub fn open_space_powers(scenario: &Scenario, quad: &QuadratureConfig) -> Result<OpenSpacePowers> {
    radial_powers(PathGainModel::OpenSpaceTwoRay, scenario, quad)
}

/// Evaluates many UE locations against one layout and scenario, sharing the
/// UE-independent open-space benchmark.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    layout: &'a BuildingLayout,
    scenario: Scenario,
    quad: QuadratureConfig,
    models: GainModels,
    open: OpenSpacePowers,
    r_max: f64,
    los_law: GainLaw,
    los_radius: f64,
    nlos_fixed: Option<(GainLaw, f64)>,
}

#[derive(Default)]
struct Accumulator {
    p_los: f64,
    p_nlos: f64,
    i_los: f64,
    i_nlos: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        layout: &'a BuildingLayout,
        scenario: &Scenario,
        quad: &QuadratureConfig,
        models: GainModels,
    ) -> Result<Self> {
        let open = open_space_powers(scenario, quad)?;
        let law_radius = |m: PathGainModel| (GainLaw::new(m, scenario), detection_radius(m, scenario));
        let (los_law, los_radius) = law_radius(models.los);
        let nlos_fixed = match models.nlos {
            NlosModel::SingleSlope => Some(law_radius(PathGainModel::InBuildingNlos)),
            NlosModel::Override(m) => Some(law_radius(m)),
            NlosModel::MultiWall => None,
        };
        Ok(Self {
            layout,
            scenario: scenario.clone(),
            quad: *quad,
            models,
            open,
            r_max: quad.r_max(scenario),
            los_law,
            los_radius,
            nlos_fixed,
        })
    }

    pub fn layout(&self) -> &BuildingLayout {
        self.layout
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn models(&self) -> GainModels {
        self.models
    }

    pub fn open_space(&self) -> OpenSpacePowers {
        self.open
    }

    pub fn building_powers(&self, ue: Point2D) -> Result<PowerBreakdown> {
        if !ue.is_finite() || !self.layout.bounds().strictly_contains(ue) {
            return Err(Error::UeOutsideBounds { x: ue.x, y: ue.y });
        }
        let n = self.quad.angular;
        let dtheta = 2.0 * PI / n as f64;
        let mut acc = Accumulator::default();
        let mut hits = Vec::with_capacity(self.layout.walls().len());
        for j in 0..n {
            let theta = (j as f64 + 0.5) * dtheta;
            let dir = Point2D::new(theta.cos(), theta.sin());
            ray_hits(self.layout, ue, dir, &mut hits);
            let mut start = 0.0;
            let mut crossings = 0usize;
            let mut loss = 0.0;
            for hit in &hits {
                if start >= self.r_max {
                    break;
                }
                let end = hit.distance.min(self.r_max);
                self.segment(start, end, crossings, loss, &mut acc);
                start = end;
                crossings += 1;
                loss += hit.attenuation_db;
            }
            if start < self.r_max {
                self.segment(start, self.r_max, crossings, loss, &mut acc);
            }
        }
        let w = self.scenario.p_t() * dtheta;
        Ok(PowerBreakdown::new(
            self.open,
            w * acc.p_los,
            w * acc.p_nlos,
            w * acc.i_los,
            w * acc.i_nlos,
        ))
    }

    fn segment(&self, a: f64, b: f64, crossings: usize, loss_db: f64, acc: &mut Accumulator) {
        if b <= a {
            return;
        }
        let (law, radius) = if crossings == 0 {
            (self.los_law, self.los_radius)
        } else if let Some(fixed) = self.nlos_fixed {
            fixed
        } else {
            let model = self.models.model_for(crossings, loss_db);
            let law = GainLaw::new(model, &self.scenario);
            (law, detection_radius(model, &self.scenario))
        };
        let r_min = self.scenario.r_min_m;
        let rule = self.quad.radial;
        let split = radius.clamp(a, b);
        let intended = law.radial_moment(r_min, a, split, rule);
        let interference = law.radial_moment(r_min, split, b, rule);
        if crossings == 0 {
            acc.p_los += intended;
            acc.i_los += interference;
        } else {
            acc.p_nlos += intended;
            acc.i_nlos += interference;
        }
    }

    pub fn evaluate(&self, ue: Point2D) -> Result<BwpResult> {
        let breakdown = self.building_powers(ue)?;
        Ok(BwpResult::from_breakdown(ue, breakdown, self.scenario.noise_w()))
    }
}

/// In-building powers at `ue` (together with the open-space benchmark).
pub fn building_powers(
    layout: &BuildingLayout,
    scenario: &Scenario,
    ue: Point2D,
    quad: &QuadratureConfig,
    models: GainModels,
) -> Result<PowerBreakdown> {
    Evaluator::new(layout, scenario, quad, models)?.building_powers(ue)
}

pub fn evaluate(
    layout: &BuildingLayout,
    scenario: &Scenario,
    ue: Point2D,
    quad: &QuadratureConfig,
    models: GainModels,
) -> Result<BwpResult> {
    Evaluator::new(layout, scenario, quad, models)?.evaluate(ue)
}
