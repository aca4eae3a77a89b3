use lls_core::family::{Mode, Stratum};
use lls_core::{verify_family, Checkpoint, FamilyConfig, Params, Report, Sink};

fn config() -> FamilyConfig {
    let p = Params::new(22, 6, 25, None).unwrap();
    let mut c = FamilyConfig::new(
        p,
        vec![
            Stratum { swaps: vec![1], mode: Mode::Sampled { n: 1500, seed: 4 } },
            Stratum { swaps: vec![0], mode: Mode::Sampled { n: 700, seed: 5 } },
        ],
    );
    c.unit_size = 100;
    c.batch_units = 3;
    c
}

fn run_in_pool(threads: usize, config: &FamilyConfig) -> (Report, Vec<u8>) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let mut out = Vec::new();
        let report = {
            let mut sink = Sink { out: Some(&mut out), checkpoint: None };
            verify_family(config, &mut sink, None).unwrap()
        };
        (report, out)
    })
}

#[test]
fn stream_is_identical_across_thread_counts() {
    let c = config();
    let (serial, a) = run_in_pool(1, &c);
    let (parallel, b) = run_in_pool(3, &c);
    assert_eq!(a, b);
    assert_eq!(serial.stream_hash, parallel.stream_hash);
    assert_eq!(serde_json::to_value(&serial).unwrap(), serde_json::to_value(&parallel).unwrap());
}

#[test]
fn report_counts_add_up() {
    let (report, out) = run_in_pool(2, &config());
    assert!(report.complete && report.ok());
    assert_eq!(report.processed, 2200);
    assert_eq!(report.strata[0].processed, 1500);
    assert_eq!(report.strata[1].processed, 700);
    assert_eq!(report.strata[0].population, 128_035_908);
    for s in &report.strata {
        assert_eq!(s.passed + s.failed, s.processed);
        assert_eq!(s.classes.values().sum::<u64>(), s.processed);
    }
    assert_eq!(report.classes.values().sum::<u64>(), 2200);
    assert_eq!(report.classes.get("NoSwap"), Some(&700));
    assert_eq!(report.classes.get("Single"), Some(&1500));
    assert_eq!(report.candidates.values().sum::<u64>(), 2200);
    assert_eq!(report.violations, 0);
    assert_eq!(report.left_weights.len(), 21);
    let lines: Vec<&[u8]> = out.split(|&b| b == b'\n').filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 2200);
    let first: serde_json::Value = serde_json::from_slice(lines[0]).unwrap();
    assert_eq!(first["stratum"], 0);
    assert_eq!(first["index"], 0);
    assert_eq!(first["pass"], true);
}

#[test]
fn interrupted_run_resumes_to_the_same_stream() {
    let c = config();
    let (full, full_bytes) = run_in_pool(1, &c);

    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("run.ckpt");
    let mut out = Vec::new();
    let mut stopped = c.clone();
    stopped.stop_after_batches = Some(3);
    let partial = {
        let mut sink = Sink { out: Some(&mut out), checkpoint: Some(ckpt.clone()) };
        verify_family(&stopped, &mut sink, None).unwrap()
    };
    assert!(!partial.complete);
    assert!(partial.processed > 0 && partial.processed < full.processed);

    let saved = Checkpoint::load(&ckpt).unwrap();
    assert_eq!(saved.bytes as usize, out.len());
    // a second interruption inside the next stratum
    let partial2 = {
        let mut sink = Sink { out: Some(&mut out), checkpoint: Some(ckpt.clone()) };
        verify_family(&stopped, &mut sink, Some(saved)).unwrap()
    };
    assert!(!partial2.complete);
    let saved = Checkpoint::load(&ckpt).unwrap();
    let resumed = {
        let mut sink = Sink { out: Some(&mut out), checkpoint: Some(ckpt.clone()) };
        verify_family(&c, &mut sink, Some(saved)).unwrap()
    };
    assert!(resumed.complete);
    assert_eq!(out, full_bytes);
    assert_eq!(resumed.stream_hash, full.stream_hash);
    assert_eq!(resumed.processed, full.processed);
    assert_eq!(resumed.classes, full.classes);
}

#[test]
fn checkpoint_from_another_configuration_is_rejected() {
    let c = config();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("run.ckpt");
    let mut stopped = c.clone();
    stopped.stop_after_batches = Some(1);
    verify_family(&stopped, &mut Sink { out: None, checkpoint: Some(ckpt.clone()) }, None).unwrap();
    let saved = Checkpoint::load(&ckpt).unwrap();
    let mut other = c;
    other.strata[0].mode = Mode::Sampled { n: 1500, seed: 99 };
    assert!(verify_family(&other, &mut Sink::none(), Some(saved)).is_err());
}

#[test]
fn exhaustive_small_family_reports_undefined_defaults() {
    // r = 1 has no default multidegree, so every table fails cleanly
    let p = Params::new(7, 1, 5, None).unwrap();
    let report = verify_family(&FamilyConfig::exhaustive(p), &mut Sink::none(), None).unwrap();
    assert!(report.complete);
    assert!(report.processed > 0);
    assert_eq!(report.failures_total, report.processed);
    assert!(!report.ok());
    assert!(report.failures.len() as u64 <= 100);
}

#[test]
fn stratified_config_walks_the_top_stratum() {
    let p = Params::new(23, 6, 26, None).unwrap();
    let c = FamilyConfig::stratified(p, 10, 1);
    assert_eq!(c.strata.len(), 2);
    assert_eq!(c.strata[0].swaps, vec![2]);
    assert!(matches!(c.strata[0].mode, Mode::Exhaustive));
    assert_eq!(c.strata[1].swaps, vec![0, 1]);
    let p0 = Params::new(21, 6, 24, None).unwrap();
    assert!(matches!(FamilyConfig::stratified(p0, 10, 1).strata[0].mode, Mode::Exhaustive));
}

#[test]
fn exhaustive_run_resumes_inside_the_tree() {
    let p = Params::new(9, 2, 8, None).unwrap();
    let mut c = FamilyConfig::exhaustive(p);
    c.unit_size = 5;
    c.batch_units = 2;
    let mut full_bytes = Vec::new();
    let full = verify_family(&c, &mut Sink { out: Some(&mut full_bytes), checkpoint: None }, None).unwrap();
    assert!(full.processed > 20);

    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("tree.ckpt");
    let mut stopped = c.clone();
    stopped.stop_after_batches = Some(2);
    let mut out = Vec::new();
    let mut resume = None;
    loop {
        let report = {
            let mut sink = Sink { out: Some(&mut out), checkpoint: Some(ckpt.clone()) };
            verify_family(&stopped, &mut sink, resume.take()).unwrap()
        };
        if report.complete {
            assert_eq!(report.stream_hash, full.stream_hash);
            break;
        }
        let saved = Checkpoint::load(&ckpt).unwrap();
        assert!(!saved.cursor.prefix.is_empty() || saved.cursor.unit == 0);
        resume = Some(saved);
    }
    assert_eq!(out, full_bytes);
}
