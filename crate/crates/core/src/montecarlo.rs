//! Monte Carlo estimate of the same powers as [`crate::metrics`], for
//! validating the quadrature.
//!
//! Transmit elements are drawn uniformly on the disk of radius `r_max`
//! around the UE. Each element carries power `P_T π r_max² / N` and is
//! classified by direct link tests, independently of the ray casting used by
//! the quadrature.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{crossing_loss, BuildingLayout, Point2D};
use crate::metrics::{GainModels, PowerBreakdown};
use crate::propagation::{detection_radius, GainLaw, PathGainModel, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Transmit elements per repetition.
    pub n_elements: usize,
    pub seed: u64,
    /// Independent streams; they run in parallel and are pooled.
    pub repetitions: usize,
    /// Overrides `Scenario::r_max_m` when set.
    pub r_max_m: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_elements: 1_000_000,
            seed: 1,
            repetitions: 4,
            r_max_m: None,
        }
    }
}

/// Pooled estimate with one standard error per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub mean: PowerBreakdown,
    pub std_err: PowerBreakdown,
    pub samples: usize,
}

impl McResult {
    pub fn g_p(&self) -> f64 {
        self.mean.p_b / self.mean.p_o
    }

    pub fn g_i(&self, noise_w: f64) -> f64 {
        (self.mean.i_o + noise_w) / (self.mean.i_b + noise_w)
    }
}

// p_o, i_o, p_b_los, p_b_nlos, i_b_los, i_b_nlos, p_b, i_b
const COMPONENTS: usize = 8;

#[derive(Clone, Copy)]
struct Moments {
    sum: [f64; COMPONENTS],
    sum_sq: [f64; COMPONENTS],
}

impl Moments {
    fn zero() -> Self {
        Self {
            sum: [0.0; COMPONENTS],
            sum_sq: [0.0; COMPONENTS],
        }
    }

    fn add(&mut self, x: &[f64; COMPONENTS]) {
        for k in 0..COMPONENTS {
            self.sum[k] += x[k];
            self.sum_sq[k] += x[k] * x[k];
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        for k in 0..COMPONENTS {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
        self
    }
}

struct Laws {
    open: (GainLaw, f64),
    los: (GainLaw, f64),
}

pub fn mc_powers(
    layout: &BuildingLayout,
    scenario: &Scenario,
    ue: Point2D,
    models: GainModels,
    cfg: &McConfig,
) -> Result<McResult> {
    scenario.validate()?;
    if cfg.n_elements == 0 || cfg.repetitions == 0 {
        return Err(Error::Argument {
            name: "n_elements",
            reason: "element and repetition counts must be positive".into(),
        });
    }
    if !ue.is_finite() || !layout.bounds().strictly_contains(ue) {
        return Err(Error::UeOutsideBounds { x: ue.x, y: ue.y });
    }
    let r_max = cfg.r_max_m.unwrap_or(scenario.r_max_m);
    if !(r_max.is_finite() && r_max > scenario.r_min_m) {
        return Err(Error::Argument {
            name: "r_max_m",
            reason: format!("must exceed r_min_m, got {r_max}"),
        });
    }
    let law_radius = |m: PathGainModel| (GainLaw::new(m, scenario), detection_radius(m, scenario));
    let laws = Laws {
        open: law_radius(PathGainModel::OpenSpaceTwoRay),
        los: law_radius(models.los),
    };
    let weight = scenario.p_t() * PI * r_max * r_max;

    let moments = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(rep as u64);
            let mut m = Moments::zero();
            for _ in 0..cfg.n_elements {
                let r = r_max * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                let tx = ue + Point2D::new(theta.cos(), theta.sin()) * r;
                m.add(&sample(layout, scenario, models, &laws, ue, tx, r, weight));
            }
            m
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(Moments::zero(), |acc, m| acc.merge(m));

    let n = (cfg.n_elements * cfg.repetitions) as f64;
    let mut mean = [0.0; COMPONENTS];
    let mut se = [0.0; COMPONENTS];
    for k in 0..COMPONENTS {
        mean[k] = moments.sum[k] / n;
        let var = if n > 1.0 {
            ((moments.sum_sq[k] - n * mean[k] * mean[k]) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        se[k] = (var / n).sqrt();
    }
    let pack = |v: &[f64; COMPONENTS]| PowerBreakdown {
        p_o: v[0],
        i_o: v[1],
        p_b_los: v[2],
        p_b_nlos: v[3],
        i_b_los: v[4],
        i_b_nlos: v[5],
        p_b: v[6],
        i_b: v[7],
    };
    Ok(McResult {
        mean: pack(&mean),
        std_err: pack(&se),
        samples: n as usize,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample(
    layout: &BuildingLayout,
    scenario: &Scenario,
    models: GainModels,
    laws: &Laws,
    ue: Point2D,
    tx: Point2D,
    r: f64,
    weight: f64,
) -> [f64; COMPONENTS] {
    let mut x = [0.0; COMPONENTS];
    let rc = r.max(scenario.r_min_m);

    let (open, r_o) = laws.open;
    let g = weight * open.eval(rc);
    if r <= r_o {
        x[0] = g;
    } else {
        x[1] = g;
    }

    let (k, loss) = crossing_loss(layout, tx, ue);
    let (law, radius) = if k == 0 {
        laws.los
    } else {
        let model = models.model_for(k, loss);
        (GainLaw::new(model, scenario), detection_radius(model, scenario))
    };
    let g = weight * law.eval(rc);
    let slot = match (k == 0, r <= radius) {
        (true, true) => 2,
        (false, true) => 3,
        (true, false) => 4,
        (false, false) => 5,
    };
    x[slot] = g;
    if slot == 2 || slot == 3 {
        x[6] = g;
    } else {
        x[7] = g;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_rect_room, RoomSpec};

    fn cfg(n: usize, seed: u64) -> McConfig {
        McConfig {
            n_elements: n,
            seed,
            repetitions: 2,
            r_max_m: Some(60.0),
        }
    }

    fn room() -> BuildingLayout {
        make_rect_room(RoomSpec::new(4.0, 6.0).unwrap(), 10.0).unwrap()
    }

    #[test]
    fn same_seed_same_result() {
        let s = Scenario::at_frequency(28.0);
        let ue = Point2D::new(1.0, 2.0);
        let a = mc_powers(&room(), &s, ue, GainModels::default(), &cfg(5_000, 7)).unwrap();
        let b = mc_powers(&room(), &s, ue, GainModels::default(), &cfg(5_000, 7)).unwrap();
        assert_eq!(a, b);
        let c = mc_powers(&room(), &s, ue, GainModels::default(), &cfg(5_000, 8)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn components_partition_the_disk() {
        let s = Scenario::at_frequency(6.0);
        let r = mc_powers(&room(), &s, Point2D::new(2.0, 3.0), GainModels::multi_wall(), &cfg(2_000, 3)).unwrap();
        let m = r.mean;
        assert!((m.p_b - (m.p_b_los + m.p_b_nlos)).abs() <= 1e-12 * m.p_b);
        assert!((m.i_b - (m.i_b_los + m.i_b_nlos)).abs() <= 1e-12 * m.i_b);
        assert_eq!(r.samples, 4_000);
    }

    #[test]
    fn standard_error_shrinks_like_inverse_sqrt_n() {
        let s = Scenario::at_frequency(28.0);
        let ue = Point2D::new(2.0, 3.0);
        let small = mc_powers(&room(), &s, ue, GainModels::default(), &cfg(4_000, 11)).unwrap();
        let large = mc_powers(&room(), &s, ue, GainModels::default(), &cfg(64_000, 11)).unwrap();
        let ratio = small.std_err.i_b / large.std_err.i_b;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_config() {
        let s = Scenario::at_frequency(28.0);
        let ue = Point2D::new(2.0, 3.0);
        assert!(mc_powers(&room(), &s, ue, GainModels::default(), &cfg(0, 1)).is_err());
        assert!(mc_powers(&room(), &s, Point2D::new(9.0, 3.0), GainModels::default(), &cfg(10, 1)).is_err());
    }
}
