#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // accepted scenarios must also be runnable; keep them short
    if let Ok(mut sc) = c3bf::scenario::parse_scenario_str(text) {
        sc.sim.duration = sc.sim.duration.min(20.0 * sc.sim.dt);
        let _ = c3bf::sim_engine::multi_agent_run(&sc);
    }
});
