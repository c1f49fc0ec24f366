//! Monte Carlo of the search economy and synthetic panel generation.

pub mod calibrate;
pub mod panel;
pub mod rng;
pub mod steady_state;

pub use calibrate::{calibrate_shock, Calibration, CalibrationOutcome, ShockKnob};
pub use panel::{
    generate_panel, staggered_treatment_years, CoupleGroup, CovariateLaw, CovariateSpec, HoursSpec,
    MarriageSpec, OutcomeNoise, PanelDataset, PanelMeta, PanelScenario, TrendSpec,
};
pub use steady_state::{simulate_steady_state, AgentState, Estimate, SimConfig, SimStats, Status};
