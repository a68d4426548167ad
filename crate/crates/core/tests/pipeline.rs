mod common;

use common::*;
use synten::diagnostics::unit;
use synten::factorization::FitConfig;
use synten::pipeline::{
    compare_methods, extract_constd, extract_nmf_benchmark, extract_parafac, extract_tucker,
    generate_synthetic, shuffle_validation, shuffle_validation_with, tensorize, Epoch, Method,
    Noise, PipelineConfig, RecordingSet, SynergyLabel, SynthSpec,
};

fn synth(seed: u64, noise: Noise) -> (RecordingSet, synten::pipeline::GroundTruth) {
    generate_synthetic(&SynthSpec { seed, noise, ..SynthSpec::default() }).unwrap()
}

#[test]
fn tensorize_reference_dims_and_order() {
    let (rs, _) = synth(0, Noise::SnrDb(20.0));
    let t = tensorize(&rs, 500).unwrap();
    assert_eq!(t.tensor.dims(), [500, 10, 20]);
    let mut sorted = t.labels.clone();
    sorted.sort();
    assert_eq!(t.labels, sorted);
    for (k, l) in t.labels.iter().enumerate() {
        assert_eq!(t.slice_of(l.task, l.repetition), Some(k));
        let e = rs.epochs().iter().find(|e| e.task_id == l.task && e.repetition_id == l.repetition).unwrap();
        assert_eq!(t.tensor.frontal_slice(k), e.samples);
    }
}

#[test]
fn constd_labels_follow_plants() {
    let (rs, truth) = synth(2, Noise::SnrDb(10.0));
    let r = extract_constd(&rs, 1, &PipelineConfig::default()).unwrap();
    assert_eq!(r.method, Method::Constd);
    let labels: Vec<SynergyLabel> = r.synergies.iter().map(|s| s.label).collect();
    assert_eq!(
        labels,
        vec![SynergyLabel::TaskSpecific { task: 1 }, SynergyLabel::TaskSpecific { task: 2 }, SynergyLabel::Shared]
    );
    assert!(corr(&r.shared()[0].vector, &truth.shared(1).unwrap().vector) > 0.95);
    for task in [1, 2] {
        let own = corr(&r.task_specific(task).unwrap().vector, &truth.task_specific(task).unwrap().vector);
        let other = corr(&r.task_specific(task).unwrap().vector, &truth.task_specific(3 - task).unwrap().vector);
        assert!(own > other, "task {task}: {own} vs {other}");
    }
    assert!(r.fit.explained_variance.unwrap() >= 70.0);
    assert_eq!(r.repetition.as_ref().unwrap().len(), 3);
    assert_eq!(r.repetition_labels.len(), 20);
}

#[test]
fn constd_rejects_wrong_task_count() {
    let (rs, _) = synth(0, Noise::None);
    assert!(extract_constd(&rs, 2, &PipelineConfig::default()).is_err());
    let one_task: Vec<Epoch> = rs.epochs().iter().filter(|e| e.task_id == 1).cloned().collect();
    let rs1 = RecordingSet::new(one_task, 100.0).unwrap();
    assert!(extract_constd(&rs1, 1, &PipelineConfig::default()).is_err());
}

#[test]
fn nmf_benchmark_noiseless_labels() {
    let (rs, truth) = synth(1, Noise::None);
    let r = extract_nmf_benchmark(&rs, 2, &PipelineConfig::default()).unwrap();
    assert_eq!(r.method, Method::Nmf);
    assert_eq!(r.fit.vaf_per_repetition.len(), 20);
    assert!(r.fit.vaf_per_repetition.iter().all(|v| v.vaf > 99.99));
    let shared = r.shared();
    assert_eq!(shared.len(), 1);
    assert!(corr(&shared[0].vector, &truth.shared(1).unwrap().vector) > 0.99);
    for task in [1, 2] {
        let found = r.task_specific(task).unwrap();
        assert!(corr(&found.vector, &truth.task_specific(task).unwrap().vector) > 0.99);
    }
}

#[test]
fn nmf_identical_repetitions_average_to_one() {
    let (rs, _) = synth(3, Noise::None);
    let template: Vec<Epoch> = rs.epochs().iter().filter(|e| e.repetition_id == 1).cloned().collect();
    let copies: Vec<Epoch> = (1..=4)
        .flat_map(|rep| template.iter().map(move |e| Epoch { repetition_id: rep, ..e.clone() }))
        .collect();
    let rs = RecordingSet::new(copies, 100.0).unwrap();
    let single = extract_nmf_benchmark(&rs, 2, &PipelineConfig::default()).unwrap();
    for ts in &single.task_synergies {
        let epoch = &template.iter().find(|e| e.task_id == ts.task).unwrap().samples;
        let one = synten::factorization::nmf(epoch, 2, &PipelineConfig::default().nmf).unwrap();
        let direct: Vec<Vec<f64>> = one.spatial.columns().iter().map(|c| unit(c)).collect();
        let m = synten::diagnostics::match_synergies(&direct, &ts.synergies).unwrap();
        for p in m.pairs {
            assert!(max_abs_diff(&direct[p.a], &ts.synergies[p.b]) < 1e-12);
        }
    }
}

#[test]
fn nmf_benchmark_needs_two_repetitions() {
    let (rs, _) = synth(0, Noise::None);
    let first: Vec<Epoch> = rs.epochs().iter().filter(|e| e.repetition_id == 1).cloned().collect();
    let rs = RecordingSet::new(first, 100.0).unwrap();
    assert!(extract_nmf_benchmark(&rs, 2, &PipelineConfig::default()).is_err());
}

#[test]
fn comparison_on_synthetic_set() {
    let (rs, _) = synth(4, Noise::SnrDb(20.0));
    let c = compare_methods(&rs, 1, &PipelineConfig::default()).unwrap();
    let shared_col = c.full.col_labels.iter().position(|l| l == "shared").unwrap();
    let shared_rows: Vec<usize> = (0..c.full.row_labels.len()).filter(|&r| c.full.row_labels[r].ends_with("(shared)")).collect();
    assert_eq!(shared_rows.len(), 2);
    for r in shared_rows {
        assert!(c.full.get(r, shared_col) > 0.9, "{}", c.full.get(r, shared_col));
    }
    // Each task-specific column is closest to its own task.
    for (col, task_row) in [(0, 0), (1, 1)] {
        assert!(c.by_task.get(task_row, col) > c.by_task.get(1 - task_row, col));
    }
    assert_eq!(c.by_task.row_labels, vec!["task1", "task2"]);
}

#[test]
fn comparison_same_mixture_is_diagonal_dominant() {
    let (rs, _) = synth(5, Noise::None);
    let c = compare_methods(&rs, 1, &PipelineConfig::default()).unwrap();
    // Rows follow each task's NMF synergies; the best column per row must be
    // the one with the same label.
    for (r, label) in c.full.row_labels.iter().enumerate() {
        let best = (0..3).fold(0, |b, k| if c.full.get(r, k) > c.full.get(r, b) { k } else { b });
        let want = if label.ends_with("(shared)") { "shared".to_string() } else { label[..5].to_string() };
        assert_eq!(c.full.col_labels[best], want, "row {label}");
        assert!(c.full.get(r, best) > 0.95);
    }
}

#[test]
fn shuffle_identity_reproduces_intact_fit() {
    let (rs, _) = synth(0, Noise::SnrDb(20.0));
    let t = tensorize(&rs, 500).unwrap();
    let id: Vec<usize> = (0..20).collect();
    let v = shuffle_validation_with(&t.tensor, 1, 10, &[id], &FitConfig::constd()).unwrap();
    assert_eq!(v.shared_r, vec![1.0]);
    assert_eq!(v.task_specific_r, vec![1.0]);
}

#[test]
fn shuffle_validation_bookkeeping() {
    let (rs, _) = synth(1, Noise::SnrDb(20.0));
    let cfg = PipelineConfig::default().with_seed(3);
    let a = shuffle_validation(&rs, 1, 3, &cfg).unwrap();
    let b = shuffle_validation(&rs, 1, 3, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shared_r.len(), 3);
    let id: Vec<usize> = (0..20).collect();
    for p in &a.permutations {
        assert_ne!(p, &id);
        let mut s = p.clone();
        s.sort();
        assert_eq!(s, id);
    }
    assert!(a.shared_r.iter().all(|r| (-1.0..=1.0).contains(r)));
    assert!(shuffle_validation(&rs, 1, 0, &cfg).is_err());
}

#[test]
fn parafac_and_tucker_reports() {
    let (rs, _) = synth(0, Noise::SnrDb(20.0));
    let cfg = PipelineConfig { fit: FitConfig::default(), ..PipelineConfig::default() };
    let p = extract_parafac(&rs, 3, &cfg).unwrap();
    assert_eq!(p.method, Method::Parafac);
    assert!(p.fit.corcondia.is_some());
    assert_eq!(p.synergies.len(), 3);
    assert!(p.synergies.iter().all(|s| matches!(s.label, SynergyLabel::Component { .. })));
    let t = extract_tucker(&rs, [3, 3, 3], &cfg).unwrap();
    assert_eq!(t.method, Method::Tucker);
    assert!(t.fit.explained_variance.unwrap() > 80.0);
}

#[test]
fn generator_snr_and_exact_nmf() {
    let (_, truth) = synth(6, Noise::SnrDb(10.0));
    for snr in truth.snr_db.iter().map(|s| s.unwrap()) {
        assert!((snr - 10.0).abs() < 1.0, "{snr}");
    }
    let (rs, _) = synth(6, Noise::None);
    let r = extract_nmf_benchmark(&rs, 2, &PipelineConfig::default()).unwrap();
    assert!(r.fit.vaf_per_repetition.iter().all(|v| v.vaf > 99.99));
}
