use c3bf::barriers::BarrierKind;
use c3bf::corpus;
use c3bf::scenario::{parse_scenario, parse_scenario_str, ScenarioError};
use c3bf::sim_engine::{multi_agent_run, RunStatus};
use c3bf::validate::HIGH_SPEED_SCENARIO;
use serde_json::{json, Value};

fn base() -> Value {
    json!({
        "model": "unicycle",
        "initial_state": {"x": 0, "y": 0, "theta": 0, "v": 1, "omega": 0},
        "obstacles": [{"shape": {"type": "ellipse", "c1": 0.5, "c2": 0.5}, "center": [5, 2]}],
        "barrier": {"kind": "c3bf"},
        "target": {"type": "constant_velocity", "speed": 1, "heading": 0}
    })
}

#[test]
fn every_bundled_scenario_parses() {
    for (name, _) in corpus::SCENARIOS {
        corpus::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn hocbf_needs_gamma() {
    let mut v = base();
    v["barrier"] = json!({"kind": "hocbf"});
    match parse_scenario_str(&v.to_string()) {
        Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "barrier.gamma"),
        other => panic!("{other:?}"),
    }
    v["barrier"] = json!({"kind": "hocbf", "gamma": 1.5});
    let sc = parse_scenario_str(&v.to_string()).unwrap();
    assert_eq!(sc.barrier, BarrierKind::Hocbf { gamma: 1.5 });
}

#[test]
fn unknown_keys_are_named() {
    let mut v = base();
    v["sim"] = json!({"dt": 0.01, "stepz": 3});
    match parse_scenario_str(&v.to_string()) {
        Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "sim.stepz"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn start_inside_obstacle_is_rejected() {
    let mut v = base();
    v["obstacles"][0]["center"] = json!([0.2, 0.0]);
    assert!(matches!(parse_scenario_str(&v.to_string()), Err(ScenarioError::Semantic(_))));
    v["flags"] = json!({"start_unsafe": true});
    assert!(matches!(parse_scenario_str(&v.to_string()), Err(ScenarioError::Semantic(_))));
}

#[test]
fn negative_initial_barrier_needs_flag() {
    let mut v = base();
    v["obstacles"][0]["center"] = json!([5.0, 0.0]);
    assert!(matches!(parse_scenario_str(&v.to_string()), Err(ScenarioError::Semantic(_))));
    v["flags"] = json!({"start_unsafe": true});
    assert!(parse_scenario_str(&v.to_string()).unwrap().start_unsafe);
}

#[test]
fn malformed_json_reports_position() {
    assert!(matches!(parse_scenario_str("{\"model\": "), Err(ScenarioError::Parse { .. })));
    assert!(matches!(parse_scenario_str(&format!("{} x", base())), Err(ScenarioError::Parse { .. })));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_scenario(std::path::Path::new("/nonexistent/scenario.json")).unwrap_err();
    assert!(matches!(err, ScenarioError::Io { .. }));
}

#[test]
fn high_speed_comparison() {
    let sc = corpus::load(HIGH_SPEED_SCENARIO).unwrap();
    let c3 = multi_agent_run(&sc).swap_remove(0);
    assert_eq!(c3.status, RunStatus::Completed);
    let ho = multi_agent_run(&sc.with_barrier(BarrierKind::Hocbf { gamma: 1.0 })).swap_remove(0);
    assert!(matches!(ho.status, RunStatus::FailedInfeasible | RunStatus::FailedPenetration), "{:?}", ho.status);
}

#[test]
fn multi_agent_logs_one_per_agent() {
    let sc = corpus::load("unicycle_multi_agent").unwrap();
    let logs = multi_agent_run(&sc);
    assert_eq!(logs.len(), 2);
    assert_eq!(logs[0].agent_id, "east");
    assert_eq!(logs[1].agent_id, "west");
    assert!(logs.iter().all(|l| l.status == RunStatus::Completed));
    assert_eq!(logs[0].records.len(), logs[1].records.len());
}

#[test]
fn step_count_is_capped() {
    let mut v = base();
    v["sim"] = json!({"dt": 1e-9, "duration": 20});
    assert!(matches!(parse_scenario_str(&v.to_string()), Err(ScenarioError::Semantic(_))));
    v["sim"] = json!({"dt": 1e-3, "duration": 20});
    assert!(parse_scenario_str(&v.to_string()).is_ok());
}
