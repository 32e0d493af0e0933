//! Path-gain models and coverage distances.
//!
//! All in-building laws share the free-space intercept at 1 m,
//! `32.4 + 20 log10(f_GHz)` dB, and differ only in their path-loss exponent
//! (and, for the multi-wall law, an added penetration loss). Gains below
//! `r_min_m` are held at their value at `r_min_m`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_radial, power_moment, RadialRule};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space loss at 1 m and 1 GHz, dB.
pub const FREE_SPACE_INTERCEPT_DB: f64 = 32.4;

/// How the open-space ground-reflection channel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoRayForm {
    /// Free-space decay up to the crossover distance `4π h_t h_r / λ`, then
    /// the flat-earth asymptote `(h_t h_r)² / r⁴`. Continuous and monotone.
    Asymptotic,
    /// Coherent sum of the direct ray and a ground-reflected ray with
    /// reflection coefficient `ground_reflection_coeff`.
    Coherent,
}

impl TwoRayForm {
    pub fn as_str(self) -> &'static str {
        match self {
            TwoRayForm::Asymptotic => "asymptotic",
            TwoRayForm::Coherent => "coherent",
        }
    }
}

impl std::str::FromStr for TwoRayForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "asymptotic" => Ok(TwoRayForm::Asymptotic),
            "coherent" => Ok(TwoRayForm::Coherent),
            other => Err(format!("unknown two-ray form `{other}` (asymptotic|coherent)")),
        }
    }
}

/// Radio configuration shared by the open-space and in-building scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub frequency_ghz: f64,
    /// Transmit power density P_T, dBW/m².
    pub p_t_dbw_per_m2: f64,
    /// Detectability threshold P_th, dBW/m².
    pub p_th_dbw_per_m2: f64,
    /// Thermal noise power; `-inf` means noise-free.
    pub noise_dbw: f64,
    pub n_los: f64,
    pub n_nlos: f64,
    pub antenna_height_m: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub ground_reflection_coeff: f64,
    pub two_ray: TwoRayForm,
}

impl Scenario {
    pub const DEFAULT_R_MAX_M: f64 = 20_000.0;

    /// Default radio parameters at `frequency_ghz`.
    pub fn at_frequency(frequency_ghz: f64) -> Self {
        Self {
            frequency_ghz,
            p_t_dbw_per_m2: -34.0,
            p_th_dbw_per_m2: -110.0,
            noise_dbw: f64::NEG_INFINITY,
            n_los: 1.73,
            n_nlos: 3.19,
            antenna_height_m: 1.2,
            r_min_m: 0.5,
            r_max_m: Self::DEFAULT_R_MAX_M,
            ground_reflection_coeff: -1.0,
            two_ray: TwoRayForm::Asymptotic,
        }
    }

    pub fn with_frequency(&self, frequency_ghz: f64) -> Self {
        Self {
            frequency_ghz,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if !(0.5..=100.0).contains(&self.frequency_ghz) {
            return bad(format!(
                "frequency_ghz must lie in [0.5, 100], got {}",
                self.frequency_ghz
            ));
        }
        if !self.p_t_dbw_per_m2.is_finite() || !self.p_th_dbw_per_m2.is_finite() {
            return bad("P_T and P_th must be finite".into());
        }
        if self.p_t_dbw_per_m2 <= self.p_th_dbw_per_m2 {
            return bad(format!(
                "P_T ({} dBW/m²) must exceed P_th ({} dBW/m²)",
                self.p_t_dbw_per_m2, self.p_th_dbw_per_m2
            ));
        }
        if self.noise_dbw.is_nan() || self.noise_dbw == f64::INFINITY {
            return bad("noise_dbw must be finite or -inf".into());
        }
        if !(self.n_los > 0.0 && self.n_nlos > 0.0) {
            return bad("path-loss exponents must be positive".into());
        }
        if !(self.antenna_height_m.is_finite() && self.antenna_height_m > 0.0) {
            return bad("antenna height must be positive".into());
        }
        if !(self.r_min_m > 0.0 && self.r_min_m < self.r_max_m && self.r_max_m.is_finite()) {
            return bad(format!(
                "need 0 < r_min_m < r_max_m, got {} and {}",
                self.r_min_m, self.r_max_m
            ));
        }
        if !(-1.0..=0.0).contains(&self.ground_reflection_coeff) {
            return bad("ground_reflection_coeff must lie in [-1, 0]".into());
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.frequency_ghz * 1e9)
    }

    /// Linear gain at 1 m shared by all laws.
    pub fn intercept_gain(&self) -> f64 {
        db_to_linear(-(FREE_SPACE_INTERCEPT_DB + 20.0 * self.frequency_ghz.log10()))
    }

    pub fn p_t(&self) -> f64 {
        db_to_linear(self.p_t_dbw_per_m2)
    }

    pub fn p_th(&self) -> f64 {
        db_to_linear(self.p_th_dbw_per_m2)
    }

    /// Noise power in watts (0 for `-inf` dBW).
    pub fn noise_w(&self) -> f64 {
        db_to_linear(self.noise_dbw)
    }

    /// Distance at which the asymptotic two-ray law switches from r⁻² to r⁻⁴.
    pub fn two_ray_crossover_m(&self) -> f64 {
        4.0 * PI * self.antenna_height_m * self.antenna_height_m / self.wavelength_m()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

/// The gain law applied to one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathGainModel {
    OpenSpaceTwoRay,
    InBuildingLos,
    InBuildingNlos,
    /// LOS distance law minus the summed loss of the `crossings` walls on the
    /// link.
    MultiWall { crossings: u32, loss_db: f64 },
}

impl PathGainModel {
    /// Multi-wall law for a link crossing walls with the given losses.
    pub fn multi_wall(losses_db: &[f64]) -> Self {
        PathGainModel::MultiWall {
            crossings: losses_db.len() as u32,
            loss_db: losses_db.iter().sum(),
        }
    }

    fn check(&self) -> Result<()> {
        if let PathGainModel::MultiWall { crossings, loss_db } = *self {
            if crossings == 0 {
                return Err(Error::Scenario("multi-wall model needs at least one crossing".into()));
            }
            if loss_db.is_nan() || loss_db < 0.0 {
                return Err(Error::Scenario(format!("invalid wall loss {loss_db} dB")));
            }
        }
        Ok(())
    }
}

/// Closed-form description of a gain law, without the near-field clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum GainLaw {
    /// `coeff * r^-exponent`
    Power { coeff: f64, exponent: f64 },
    /// `coeff / r²` up to `crossover`, `coeff * crossover² / r⁴` beyond.
    Broken { coeff: f64, crossover: f64 },
    /// `coeff * |e^{-jk d1}/d1 + Γ e^{-jk d2}/d2|²`, `d2 = sqrt(r² + (2h)²)`.
    Coherent {
        coeff: f64,
        wavenumber: f64,
        two_h: f64,
        gamma: f64,
    },
}

impl GainLaw {
    pub(crate) fn new(model: PathGainModel, s: &Scenario) -> Self {
        let coeff = s.intercept_gain();
        match model {
            PathGainModel::InBuildingLos => GainLaw::Power {
                coeff,
                exponent: s.n_los,
            },
            PathGainModel::InBuildingNlos => GainLaw::Power {
                coeff,
                exponent: s.n_nlos,
            },
            PathGainModel::MultiWall { loss_db, .. } => GainLaw::Power {
                coeff: coeff * db_to_linear(-loss_db),
                exponent: s.n_los,
            },
            PathGainModel::OpenSpaceTwoRay => match s.two_ray {
                TwoRayForm::Asymptotic => GainLaw::Broken {
                    coeff,
                    crossover: s.two_ray_crossover_m(),
                },
                TwoRayForm::Coherent => GainLaw::Coherent {
                    coeff,
                    wavenumber: 2.0 * PI / s.wavelength_m(),
                    two_h: 2.0 * s.antenna_height_m,
                    gamma: s.ground_reflection_coeff,
                },
            },
        }
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        match *self {
            GainLaw::Power { coeff, exponent } => coeff * r.powf(-exponent),
            GainLaw::Broken { coeff, crossover } => {
                if r <= crossover {
                    coeff / (r * r)
                } else {
                    let q = crossover / r;
                    coeff * q * q / (r * r)
                }
            }
            GainLaw::Coherent {
                coeff,
                wavenumber,
                two_h,
                gamma,
            } => {
                let d1 = r;
                let d2 = r.hypot(two_h);
                let direct = Complex64::from_polar(1.0 / d1, -wavenumber * d1);
                let reflected = Complex64::from_polar(gamma / d2, -wavenumber * d2);
                coeff * (direct + reflected).norm_sqr()
            }
        }
    }

    /// Monotone envelope used for detectability: the coherent sum is replaced
    /// by its free-space (Γ = 0) envelope.
    pub(crate) fn envelope(&self) -> GainLaw {
        match *self {
            GainLaw::Coherent { coeff, .. } => GainLaw::Power {
                coeff,
                exponent: 2.0,
            },
            other => other,
        }
    }

    /// Radius solving `gain(r) = target` on the envelope (no clamp).
    pub(crate) fn envelope_radius(&self, target: f64) -> f64 {
        match self.envelope() {
            GainLaw::Power { coeff, exponent } => (coeff / target).powf(1.0 / exponent),
            GainLaw::Broken { coeff, crossover } => {
                let free = (coeff / target).sqrt();
                if free <= crossover {
                    free
                } else {
                    (free * crossover).sqrt()
                }
            }
            GainLaw::Coherent { .. } => unreachable!("envelope is never coherent"),
        }
    }

    /// `∫_a^b g(max(r, r_min)) r dr` for `0 <= a <= b`.
    pub(crate) fn radial_moment(&self, r_min: f64, a: f64, b: f64, rule: RadialRule) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        if lo < r_min {
            let hi = b.min(r_min);
            total += self.eval(r_min) * 0.5 * (hi * hi - lo * lo);
            lo = hi;
        }
        if b <= lo {
            return total;
        }
        total
            + match *self {
                GainLaw::Power { coeff, exponent } => {
                    if coeff == 0.0 {
                        0.0
                    } else {
                        coeff * power_moment(exponent, lo, b)
                    }
                }
                GainLaw::Broken { coeff, crossover } => {
                    let near = if lo < crossover {
                        power_moment(2.0, lo, b.min(crossover))
                    } else {
                        0.0
                    };
                    let far = if b > crossover {
                        crossover * crossover * power_moment(4.0, lo.max(crossover), b)
                    } else {
                        0.0
                    };
                    coeff * (near + far)
                }
                GainLaw::Coherent { coeff, .. } => {
                    // Scale estimate from the envelope (mean of |.|² is about
                    // twice free space).
                    let scale = 2.0 * coeff * power_moment(2.0, lo, b);
                    integrate_radial(|r| self.eval(r) * r, lo, b, rule, scale)
                }
            }
    }
}

fn check_distance(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Argument {
            name: "r",
            reason: format!("link distance must be positive, got {r}"),
        });
    }
    Ok(())
}

/// Linear path gain at distance `r` (clamped to `r_min_m`).
pub fn path_gain(model: PathGainModel, scenario: &Scenario, r: f64) -> Result<f64> {
    check_distance(r)?;
    model.check()?;
    Ok(GainLaw::new(model, scenario).eval(r.max(scenario.r_min_m)))
}

pub fn path_gain_db(model: PathGainModel, scenario: &Scenario, r: f64) -> Result<f64> {
    path_gain(model, scenario, r).map(linear_to_db)
}

/// Gain of the monotone envelope used to solve coverage distances; equals
/// [`path_gain_db`] except for the coherent two-ray form.
pub fn envelope_gain_db(model: PathGainModel, scenario: &Scenario, r: f64) -> Result<f64> {
    check_distance(r)?;
    model.check()?;
    Ok(linear_to_db(
        GainLaw::new(model, scenario).envelope().eval(r.max(scenario.r_min_m)),
    ))
}

/// Radius inside which `P_T G(r) > P_th`; zero when nothing is detectable,
/// unbounded by `r_max_m`.
pub fn detection_radius(model: PathGainModel, scenario: &Scenario) -> f64 {
    let law = GainLaw::new(model, scenario);
    let target = scenario.p_th() / scenario.p_t();
    let r = law.envelope_radius(target);
    if r > scenario.r_min_m {
        r
    } else {
        0.0
    }
}

/// Coverage distance `R_s` solving `P_T G_s(R_s) = P_th`.
pub fn coverage_distance(model: PathGainModel, scenario: &Scenario) -> Result<f64> {
    scenario.validate()?;
    model.check()?;
    let r = detection_radius(model, scenario);
    if r == 0.0 {
        return Err(Error::Scenario(format!(
            "link budget is not met even at r_min = {} m",
            scenario.r_min_m
        )));
    }
    if r > scenario.r_max_m {
        return Err(Error::Unreachable {
            distance_m: r,
            r_max_m: scenario.r_max_m,
        });
    }
    Ok(r)
}
