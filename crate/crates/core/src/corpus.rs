//! Built-in scenario corpus, embedded from `scenarios/`.

use crate::scenario::{parse_scenario_str, ScenarioError};
use crate::sim_engine::Scenario;

/// `(name, json)` for every bundled scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("bicycle_head_on_reverse", include_str!("../scenarios/bicycle_head_on_reverse.json")),
    ("bicycle_overtake", include_str!("../scenarios/bicycle_overtake.json")),
    ("bicycle_perpendicular", include_str!("../scenarios/bicycle_perpendicular.json")),
    ("bicycle_static_brake", include_str!("../scenarios/bicycle_static_brake.json")),
    ("bicycle_static_turn", include_str!("../scenarios/bicycle_static_turn.json")),
    ("point_mass_crossing", include_str!("../scenarios/point_mass_crossing.json")),
    ("point_mass_head_on", include_str!("../scenarios/point_mass_head_on.json")),
    ("point_mass_high_speed", include_str!("../scenarios/point_mass_high_speed.json")),
    ("point_mass_unsafe_start", include_str!("../scenarios/point_mass_unsafe_start.json")),
    ("quadrotor_moving_sphere", include_str!("../scenarios/quadrotor_moving_sphere.json")),
    ("quadrotor_static_cylinder", include_str!("../scenarios/quadrotor_static_cylinder.json")),
    ("quadrotor_static_sphere", include_str!("../scenarios/quadrotor_static_sphere.json")),
    ("quadrotor_unsafe_start", include_str!("../scenarios/quadrotor_unsafe_start.json")),
    ("unicycle_head_on_reverse", include_str!("../scenarios/unicycle_head_on_reverse.json")),
    ("unicycle_multi_agent", include_str!("../scenarios/unicycle_multi_agent.json")),
    ("unicycle_multi_obstacle", include_str!("../scenarios/unicycle_multi_obstacle.json")),
    ("unicycle_overtake", include_str!("../scenarios/unicycle_overtake.json")),
    ("unicycle_perpendicular", include_str!("../scenarios/unicycle_perpendicular.json")),
    ("unicycle_static_brake", include_str!("../scenarios/unicycle_static_brake.json")),
    ("unicycle_static_turn", include_str!("../scenarios/unicycle_static_turn.json")),
    ("unicycle_unsafe_start", include_str!("../scenarios/unicycle_unsafe_start.json")),
];

pub fn source(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<Scenario, ScenarioError> {
    let text = source(name).ok_or_else(|| ScenarioError::Semantic(format!("no bundled scenario `{name}`")))?;
    parse_scenario_str(text)
}
