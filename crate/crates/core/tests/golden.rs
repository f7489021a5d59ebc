//! Byte-level regression of the CSV outputs on a 100-slot micro-run.
//!
//! Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden` after an
//! intentional change to the schema or the simulation.

use std::fs;
use std::path::Path;

use agesched::config::ExperimentSpec;
use agesched::scheduler::Policy;
use agesched::sweep::run_sweep;

#[test]
fn micro_run_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::evaluation();
    spec.name = "micro".into();
    spec.base.slots = 100;
    spec.base.repetitions = 2;
    spec.horizons = vec![2];
    spec.policies = vec![Policy::FiniteHorizon, Policy::RoundRobin];
    spec.out_dir = dir.path().to_path_buf();
    run_sweep(&spec, Some(1)).unwrap();

    let update = std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    if update {
        fs::create_dir_all(&golden).unwrap();
    }
    for name in [
        "micro-fh-h2.csv",
        "micro-round_robin-h2.csv",
        "summary.csv",
        "plot_mse.csv",
        "plot_aoi.csv",
    ] {
        let produced = fs::read(dir.path().join(name)).unwrap();
        if update {
            fs::write(golden.join(name), &produced).unwrap();
        }
        let expected =
            fs::read(golden.join(name)).unwrap_or_else(|_| panic!("missing golden file {name}"));
        assert!(produced == expected, "{name} differs from its golden copy");
    }
}
