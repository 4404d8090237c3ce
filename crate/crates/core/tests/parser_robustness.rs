//! Mutated seeds and arbitrary text must never panic the parsers, and any
//! scenario they accept must run.

use c3bf::corpus::SCENARIOS;
use c3bf::scenario::parse_scenario_str;
use c3bf::sim_engine::multi_agent_run;
use c3bf::trajectory_csv::{parse_csv, to_csv_string};
use proptest::prelude::*;
use serde_json::Value;

fn short_run(text: &str) {
    if let Ok(mut sc) = parse_scenario_str(text) {
        sc.sim.duration = sc.sim.duration.min(20.0 * sc.sim.dt);
        let _ = multi_agent_run(&sc);
    }
}

fn csv_seed() -> String {
    let mut sc = c3bf::corpus::load("unicycle_multi_obstacle").unwrap();
    sc.sim.duration = 0.05;
    to_csv_string(&multi_agent_run(&sc)[0])
}

/// Replaces the `k`-th number in the document with `x`.
fn replace_number(v: &mut Value, k: &mut usize, x: f64) -> bool {
    match v {
        Value::Number(_) => {
            if *k == 0 {
                *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
                return true;
            }
            *k -= 1;
            false
        }
        Value::Array(a) => a.iter_mut().any(|e| replace_number(e, k, x)),
        Value::Object(o) => o.values_mut().any(|e| replace_number(e, k, x)),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn scenario_byte_mutations(seed in 0..SCENARIOS.len(), pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<bool>()) {
        let mut bytes = SCENARIOS[seed].1.as_bytes().to_vec();
        let i = pos.index(bytes.len());
        if cut {
            bytes.truncate(i);
        } else {
            bytes[i] = byte;
        }
        if let Ok(text) = std::str::from_utf8(&bytes) {
            short_run(text);
        }
    }

    #[test]
    fn scenario_number_mutations(seed in 0..SCENARIOS.len(), k in 0usize..64,
                                 x in prop_oneof![Just(0.0), Just(-1.0), Just(1e300), Just(-1e-300), Just(1e9), -100.0..100.0f64]) {
        let mut v: Value = serde_json::from_str(SCENARIOS[seed].1).unwrap();
        let mut k = k;
        replace_number(&mut v, &mut k, x);
        short_run(&v.to_string());
    }

    #[test]
    fn arbitrary_text(s in "\\PC{0,200}") {
        short_run(&s);
        let _ = parse_csv(&s);
    }

    #[test]
    fn csv_mutations(pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<bool>()) {
        let mut bytes = csv_seed().into_bytes();
        let i = pos.index(bytes.len());
        if cut {
            bytes.truncate(i);
        } else {
            bytes[i] = byte;
        }
        if let Ok(text) = std::str::from_utf8(&bytes) {
            let _ = parse_csv(text);
        }
    }
}
