use c3bf::barriers::{cone_terms, evaluate, hocbf_effective_angle, projector, BarrierKind, EffectiveCone};
use c3bf::obstacles::Obstacle;
use c3bf::reference_control::wrap_angle;
use c3bf::safety_filter::{kkt_residuals, solve_active_set, solve_single_constraint, FilterStatus};
use c3bf::sim_engine::{collision_report, TrajectoryLog};
use c3bf::trajectory_csv::{format_f64, parse_csv, to_csv_string};
use c3bf::validate::random_problem;
use c3bf::vehicle_models::{PointMassParams, PointMassState, Vec2, Vec3, Vehicle, VehicleState};
use nalgebra::Vector2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

proptest! {
    #[test]
    fn h_scales_with_relative_velocity(px in coord(), py in coord(), vx in coord(), vy in coord(),
                                       frac in 0.0..0.95f64, lambda in 0.01..50.0f64) {
        let p = Vector2::new(px, py);
        prop_assume!(p.norm() > 1e-3);
        let v = Vector2::new(vx, vy);
        let r = frac * p.norm();
        let (h, _) = cone_terms(&p, &v, r).unwrap();
        let (hs, _) = cone_terms(&p, &(v * lambda), r).unwrap();
        prop_assert!((hs - lambda * h).abs() <= 1e-12 * lambda * (1.0 + v.norm() * p.norm()));
    }

    #[test]
    fn hocbf_never_exceeds_c3bf_when_faster_than_gamma(px in 1.5..10.0f64, py in coord(), vx in coord(), vy in coord(),
                                                       gamma in 0.1..3.0f64) {
        let s = VehicleState::PointMass(PointMassState { pos: Vec2::zeros(), vel: Vec2::new(vx, vy) });
        prop_assume!(Vec2::new(vx, vy).norm() >= gamma);
        let vehicle = Vehicle::PointMass(PointMassParams { width: 0.0 });
        let o = Obstacle::circle("o", 1.0, px, py);
        let c3 = evaluate(&vehicle, &s, &o, BarrierKind::C3bf).unwrap();
        let ho = evaluate(&vehicle, &s, &o, BarrierKind::Hocbf { gamma }).unwrap();
        prop_assert!(ho.h <= c3.h + 1e-12 * (1.0 + c3.h.abs()));
        let g = c3.geometry.unwrap();
        match hocbf_effective_angle(gamma, g.v_rel.norm(), g.cos_phi) {
            EffectiveCone::CosPhi(c) => prop_assert!(c <= g.cos_phi),
            EffectiveCone::NoCone(_) => prop_assert!(false, "no cone although ‖v‖ ≥ γ"),
        }
    }

    #[test]
    fn projector_is_idempotent(nx in coord(), ny in coord(), nz in coord(), x in coord(), y in coord(), z in coord()) {
        let n = Vec3::new(nx, ny, nz);
        prop_assume!(n.norm() > 1e-3);
        let n = n.normalize();
        let p = projector(&n);
        let v = Vec3::new(x, y, z);
        let pv = p * v;
        prop_assert!((p * pv - pv).amax() <= 1e-12 * (1.0 + v.norm()));
        prop_assert!(pv.dot(&n).abs() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn qp_solutions_are_kkt_points(seed in any::<u64>(), m in 1usize..=4, k in 0usize..=4, bounded in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&mut rng, m, k, bounded);
        let r = solve_active_set(&p).unwrap();
        prop_assert_eq!(r.status, FilterStatus::Optimal);
        prop_assert!(kkt_residuals(&p, &r).max() <= 1e-8);
        if p.is_feasible(&p.u_ref) {
            prop_assert_eq!(&r.u_star, &p.u_ref);
        }
    }

    #[test]
    fn single_constraint_solvers_agree(seed in any::<u64>(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&mut rng, m, 1, false);
        let single = solve_single_constraint(&p.u_ref, &p.constraints[0]).unwrap();
        let general = solve_active_set(&p).unwrap().u_star;
        for (a, b) in single.iter().zip(&general) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn wrapped_angles_stay_in_range(a in -1e3..1e3f64) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        let turns = (a - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn floats_survive_text_formatting(x in any::<f64>()) {
        let back: f64 = format_f64(x).parse().unwrap();
        prop_assert!(back.to_bits() == x.to_bits() || (x.is_nan() && back.is_nan()));
    }
}

fn short_log(name: &str) -> TrajectoryLog {
    let mut sc = c3bf::corpus::load(name).unwrap();
    sc.sim.duration = 1.0;
    c3bf::sim_engine::run(&sc)
}

#[test]
fn csv_round_trip_of_a_run() {
    let log = short_log("unicycle_multi_obstacle");
    let table = parse_csv(&to_csv_string(&log)).unwrap();
    assert_eq!(table.obstacle_count, 4);
    assert_eq!(table.rows.len(), log.records.len());
    for (row, rec) in table.rows.iter().zip(&log.records) {
        assert_eq!(row.t.to_bits(), rec.t.to_bits());
        assert_eq!(row.state, rec.state);
        assert_eq!(row.u_star, rec.u_star);
        assert_eq!(row.active_count, rec.active_set.len());
    }
}

#[test]
fn report_is_invariant_under_relabeling() {
    let mut log = short_log("unicycle_multi_obstacle");
    let before = collision_report(&log);
    for (i, id) in log.obstacle_ids.iter_mut().enumerate() {
        *id = format!("renamed{i}");
    }
    let after = collision_report(&log);
    assert_eq!(before.min_margin(), after.min_margin());
    assert_eq!(before.min_h(), after.min_h());
    assert_eq!(before.first_violation(), after.first_violation());
}
