use rqfarm::experiment::{
    bench_tsv, random_instance, scale_bench, sweep, sweep_tsv, verify, verify_passed, CheckOutcome, VerifyOptions,
};
use rqfarm::optimizer::{solve_m2, SolveOptions, SolveStatus};
use rqfarm::reference::reference_system;
use rqfarm::simulator::{simulate, SimConfig};

fn quick() -> SolveOptions {
    SolveOptions {
        restarts: 4,
        ..SolveOptions::default()
    }
}

#[test]
fn sweep_cell_equals_solve_then_simulate() {
    let sys = reference_system(4.0, 0.01);
    let sim = SimConfig::new(2_000.0, 2, 9);
    let cells = sweep(&sys, &[8.0], &[0.02], &quick(), &sim).unwrap();
    let direct_sys = sys.with_sla(8.0, 0.02).unwrap();
    let plan = solve_m2(&direct_sys, &quick()).unwrap();
    let report = simulate(&direct_sys, &plan.policy, &sim).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].planned_power, plan.objective);
    assert_eq!(cells[0].simulated_power, Some(report.total_power));
    let v: Vec<f64> = report.servers.iter().map(|s| s.violation.probability).collect();
    assert_eq!(cells[0].violation, v);
}

#[test]
fn infeasible_cells_are_marked_not_fatal() {
    let sys = reference_system(4.0, 0.01);
    let cells = sweep(&sys, &[1.0, 8.0], &[0.1], &quick(), &SimConfig::new(500.0, 1, 1)).unwrap();
    assert_eq!(cells[0].status, SolveStatus::Infeasible);
    assert!(cells[0].simulated_power.is_none());
    assert!(cells[1].simulated_power.is_some());
    let tsv = sweep_tsv(&cells);
    assert_eq!(tsv.lines().count(), 3);
    assert!(tsv.lines().nth(1).unwrap().contains("infeasible\t"));
    assert!(tsv.lines().nth(1).unwrap().contains("NA"));
}

#[test]
fn verify_table_and_negative_control() {
    let rows = verify(&VerifyOptions {
        draws: 60,
        ..VerifyOptions::default()
    });
    assert!(verify_passed(&rows));
    assert!(rows.iter().any(|r| r.check.contains("single-job") && r.outcome == CheckOutcome::Pass));
    let flipped = verify(&VerifyOptions {
        draws: 60,
        flip_constant_sign: true,
        ..VerifyOptions::default()
    });
    assert!(!verify_passed(&flipped));
    let failed: Vec<_> = flipped.iter().filter(|r| r.outcome == CheckOutcome::Fail).map(|r| r.check.as_str()).collect();
    assert_eq!(failed, vec!["bound at the minimal feasible speed equals delta"]);
}

#[test]
fn random_instances_are_reproducible_and_feasible() {
    let a = random_instance(40, 10, 10.0, 0.01, 4).unwrap();
    let b = random_instance(40, 10, 10.0, 0.01, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.num_apps(), 4);
    assert!(random_instance(5, 10, 10.0, 0.01, 4).is_err());
}

#[test]
fn small_bench_runs() {
    let rows = scale_bench(&[10, 20], 10, 1, 1, &quick()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.status == SolveStatus::OptimalLocal));
    assert!(rows[0].median_seconds < 5.0);
    assert_eq!(bench_tsv(&rows).lines().count(), 3);
}
