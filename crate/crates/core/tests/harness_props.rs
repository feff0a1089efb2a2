mod common;

use bpdec_core::bp::BpSettings;
use bpdec_core::decimation::{ContradictionMode, OrderPolicy};
use bpdec_core::error::Error;
use bpdec_core::formula::{GenModel, GenParams};
use bpdec_core::harness::{
    read_trace, record, replay, replay_reader, run_sweep, write_summary_csv, write_trace,
    write_trials_csv, AlgorithmSpec, Density, ExperimentConfig, FormulaSpec, SweepGrid, TraceSpec,
};
use proptest::prelude::*;

fn cfg(seed: u64, trials: usize, policy: OrderPolicy) -> ExperimentConfig {
    ExperimentConfig {
        model: GenModel::ProperUniform,
        k: 3,
        n: 30,
        density: Density::Ratio(2.0),
        omega: Some(4),
        policy,
        trials,
        seed,
        ..ExperimentConfig::default()
    }
}

fn csv(cfg: &ExperimentConfig, grid: &SweepGrid) -> (String, String) {
    let r = run_sweep(cfg, grid).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_summary_csv(&r, &mut a).unwrap();
    write_trials_csv(&r, &mut b).unwrap();
    (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap())
}

fn trace_text(spec: &TraceSpec) -> String {
    let (_, rec) = record(spec).unwrap();
    let mut buf = Vec::new();
    write_trace(&rec, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn generated(n: usize, r: f64, seed: u64, omega: usize) -> TraceSpec {
    TraceSpec {
        formula: FormulaSpec::Generated {
            params: GenParams::with_density(GenModel::ProperUniform, n, r, 3),
            seed,
        },
        bp: BpSettings::fixed(omega),
        algorithm: AlgorithmSpec::Bpdec {
            policy: OrderPolicy::NaturalOrder,
            contradiction: ContradictionMode::Continue,
            bias: None,
        },
        seed: seed ^ 0x55,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_are_byte_identical(seed in any::<u64>(), jobs in 1usize..4) {
        let grid = SweepGrid::ratios(&[1.5, 3.0], &[3], &[20, 30]).unwrap();
        let mut c = cfg(seed, 3, OrderPolicy::RandomPermutation);
        let first = csv(&c, &grid);
        c.jobs = Some(jobs);
        prop_assert_eq!(csv(&c, &grid), first);
    }

    #[test]
    fn aggregates_follow_from_trial_rows(seed in any::<u64>(), trials in 1usize..6) {
        let grid = SweepGrid::ratios(&[2.0, 4.0], &[3], &[25]).unwrap();
        let r = run_sweep(&cfg(seed, trials, OrderPolicy::NaturalOrder), &grid).unwrap();
        prop_assert_eq!(r.rows.len(), grid.points().len());
        for (i, row) in r.rows.iter().enumerate() {
            let mine: Vec<_> = r.trials.iter().filter(|t| t.point == i).collect();
            prop_assert_eq!(mine.len(), trials);
            let s = mine.iter().filter(|t| t.success).count();
            prop_assert_eq!(row.estimate.successes, s);
            prop_assert_eq!(row.estimate.rate, s as f64 / trials as f64);
            let half: Vec<f64> = mine.iter().filter_map(|t| t.biased_half).collect();
            prop_assert_eq!(row.n_biased_half, half.len());
            if !half.is_empty() {
                prop_assert_eq!(row.mean_biased_half, Some(half.iter().sum::<f64>() / half.len() as f64));
            }
            let ct: Vec<f64> = mine.iter().filter_map(|t| t.contradiction_t.map(|c| c as f64)).collect();
            prop_assert_eq!(row.n_contradictions, ct.len());
            prop_assert_eq!(row.n_contradictions, trials - s);
            if !ct.is_empty() {
                prop_assert_eq!(row.mean_contradiction_t, Some(ct.iter().sum::<f64>() / ct.len() as f64));
            }
        }
    }

    #[test]
    fn fresh_traces_replay(n in 5usize..60, r in 0.5f64..5.0, seed in any::<u64>(), omega in 0usize..10) {
        let text = trace_text(&generated(n, r, seed, omega));
        prop_assert!(replay_reader(text.as_bytes()).is_ok());
    }

    #[test]
    fn a_flipped_bit_fails_at_its_step(n in 10usize..40, seed in any::<u64>(), pick in any::<usize>()) {
        let text = trace_text(&generated(n, 3.0, seed, 5));
        let lines: Vec<&str> = text.lines().collect();
        let first_row = lines.iter().position(|l| l.starts_with("t,")).unwrap() + 1;
        let rows = lines.len() - first_row;
        let step = pick % rows;
        let mut cols: Vec<String> = lines[first_row + step].split(',').map(str::to_string).collect();
        cols[3] = if cols[3] == "1" { "0".into() } else { "1".into() };
        let mut tampered: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        tampered[first_row + step] = cols.join(",");
        match replay_reader(tampered.join("\n").as_bytes()) {
            Err(Error::Reproducibility { step: s, .. }) => prop_assert_eq!(s, step + 1),
            other => prop_assert!(false, "expected a failure, got {:?}", other),
        }
    }
}

#[test]
fn identical_bytes_for_the_same_seed() {
    let grid = SweepGrid::ratios(&[2.0], &[3], &[200]).unwrap();
    let c = ExperimentConfig {
        n: 200,
        omega: Some(8),
        trials: 10,
        seed: 42,
        ..ExperimentConfig::default()
    };
    assert_eq!(csv(&c, &grid), csv(&c, &grid));
}

#[test]
fn too_many_clauses_is_a_config_error() {
    let grid = SweepGrid::new(vec![Density::Clauses(100)], vec![3], vec![4]).unwrap();
    let c = ExperimentConfig {
        n: 4,
        ..ExperimentConfig::default()
    };
    assert!(matches!(run_sweep(&c, &grid), Err(Error::Config(_))));
}

#[test]
fn summary_rows_echo_parameters() {
    let grid = SweepGrid::ratios(&[2.5], &[3, 4], &[40]).unwrap();
    let (summary, _) = csv(&cfg(7, 2, OrderPolicy::RandomPermutation), &grid);
    let lines: Vec<&str> = summary.lines().collect();
    assert!(lines[0].starts_with("# "));
    assert!(lines[0].contains("schema="));
    assert!(lines[1].starts_with("k,n,r,m,omega,c,policy,contradiction,seed,"));
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("3,40,2.5,100,4,0.2,random,abort,7,"));
    assert!(lines[3].starts_with("4,40,2.5,100,4,0.2,random,abort,7,"));
}

#[test]
fn a_different_omega_fails_at_step_one() {
    let text = trace_text(&generated(60, 4.0, 3, 2));
    let other = text.replace("# bp=fixed omega=2", "# bp=fixed omega=3");
    assert_ne!(text, other);
    match replay_reader(other.as_bytes()) {
        Err(Error::Reproducibility { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected a failure, got {other:?}"),
    }
}

#[test]
fn replay_from_disk() {
    let dir = std::env::temp_dir().join(format!("bpdec-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    std::fs::write(&path, trace_text(&generated(40, 3.0, 9, 6))).unwrap();
    let report = replay(&path).unwrap();
    let rec = read_trace(std::fs::read(&path).unwrap().as_slice()).unwrap();
    assert_eq!(report.hash, rec.hash);
    assert_eq!(report.steps, rec.rows.len());
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(matches!(replay(&path), Err(Error::Io(_))));
}

#[test]
fn config_file_drives_a_sweep() {
    let text = "model=proper\nk=3\nn=20,30\nr=1.0,2.0\ntrials=2\nseed=5\nomega=3\n";
    let map = bpdec_core::harness::parse_kv(text).unwrap();
    let c = ExperimentConfig::from_kv(text).unwrap();
    let grid = SweepGrid::from_kv(&map, &c).unwrap();
    assert_eq!(grid.points().len(), 4);
    assert_eq!(run_sweep(&c, &grid).unwrap().rows.len(), 4);
}
