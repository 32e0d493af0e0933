//! Building wireless performance (BWP) of 2-D layouts.
//!
//! A building is judged by how it changes the signal and interference a user
//! equipment (UE) receives from a dense continuum of transmitters, relative to
//! the same transmitters in open space:
//!
//! * power gain `g_p = P_B / P_O`
//! * interference gain `g_i = (I_O + σ²) / (I_B + σ²)`
//!
//! so that the SINR ratio is `γ_B / γ_O = g_p g_i`.
//!
//! ```
//! use bwp_core::{evaluate, make_rect_room, GainModels, Point2D, QuadratureConfig, RoomSpec, Scenario};
//!
//! let room = make_rect_room(RoomSpec::new(4.0, 5.0).unwrap(), 10.0).unwrap();
//! let s = Scenario::at_frequency(28.0);
//! let r = evaluate(&room, &s, Point2D::new(2.0, 2.5), &QuadratureConfig::default(), GainModels::default()).unwrap();
//! assert!(r.g_i > 1.0);
//! ```

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod layout_file;
pub mod metrics;
pub mod montecarlo;
pub mod propagation;
pub mod quadrature;
pub mod scenario_file;
pub mod surrogate;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{
    crossing_count, crossing_loss, is_los, make_office_layout, make_rect_room, BuildingLayout, Bounds, OfficeSpec,
    Point2D, RoomSpec, Wall,
};
pub use layout_file::{format_layout, parse_layout};
pub use metrics::{
    building_powers, classify_region, evaluate, open_space_powers, BwpResult, Environment, Evaluator, GainModels,
    NlosModel, OpenSpacePowers, PowerBreakdown, QuadratureConfig, Region,
};
pub use propagation::{coverage_distance, path_gain, path_gain_db, PathGainModel, Scenario, TwoRayForm};
pub use scenario_file::{format_scenario, parse_scenario};
