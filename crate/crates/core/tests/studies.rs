use spikerate::experiments::{run_study, StudyConfig, StudyKind, StudyOutput};
use spikerate::model::ModelParams;

fn small(kind: StudyKind) -> StudyConfig {
    let mut cfg = StudyConfig::reference(kind);
    cfg.params = ModelParams::new(5, 1.0, 1.0, 2.0).unwrap();
    cfg.d = 0.65;
    cfg.points = vec![0.3];
    cfg.horizons = vec![12.0, 24.0];
    cfg.replications = 6;
    cfg.seed = 51;
    cfg.options.times = vec![0.5, 1.0, 2.0];
    cfg.options.grid_points = 41;
    cfg.options.scv_grid_size = 6;
    if kind == StudyKind::Likelihood {
        // The bump half-width t^(-1/3) must stay below the point.
        cfg.horizons = vec![40.0, 60.0];
    }
    cfg
}

/// CSV text of every table plus the pretty summary, so NaN cells compare equal.
fn rendered(out: &StudyOutput) -> Vec<String> {
    let mut text: Vec<String> = out.tables.iter().map(|(stem, t)| format!("{stem}\n{}", t.to_csv().unwrap())).collect();
    text.push(serde_json::to_string_pretty(&out.summary).unwrap());
    text
}

fn run_with_threads(cfg: &StudyConfig, threads: usize) -> Vec<String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| rendered(&run_study(cfg).unwrap()))
}

#[test]
fn every_study_is_identical_across_thread_counts() {
    for kind in StudyKind::ALL {
        let cfg = small(kind);
        assert_eq!(run_with_threads(&cfg, 1), run_with_threads(&cfg, 3), "{kind} study differs");
    }
}

#[test]
fn seed_changes_the_output() {
    let mut cfg = small(StudyKind::Rate);
    let a = rendered(&run_study(&cfg).unwrap());
    cfg.seed += 1;
    let b = rendered(&run_study(&cfg).unwrap());
    assert_ne!(a, b);
}

#[test]
fn written_files_match_the_output() {
    let dir = tempfile::TempDir::new().unwrap();
    let out = run_study(&small(StudyKind::Exchange)).unwrap();
    let paths = out.write(dir.path(), true).unwrap();
    assert_eq!(paths, out.paths(dir.path()));
    assert!(paths.iter().all(|p| p.exists()));
    assert!(out.write(dir.path(), true).is_err());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(paths.last().unwrap()).unwrap()).unwrap();
    assert_eq!(summary, out.summary);
}
