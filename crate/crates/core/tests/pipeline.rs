use pclones::baseline::{measure_with_nonactive_clones, train_regular};
use pclones::checkpoint;
use pclones::clones::{clone_phases, no_observer};
use pclones::metrics::{import_surface_csv, export_surface_csv, sum_over_history};
use pclones::network::init_params;
use pclones::recall::seed_and_generate;
use pclones::{train_target, Corpus, Dimensions, FeedbackMode, NetworkParams, RunConfig, SweepRecord};

const TEXT: &str = "the cat sat on the mat and the cat ate the rat";

fn config(clones: usize, iterations: usize) -> RunConfig {
    RunConfig {
        clones,
        iterations,
        hidden: 24,
        rng_seed: 3,
        ..RunConfig::default()
    }
}

fn bits(p: &NetworkParams) -> Vec<u64> {
    p.values().map(f64::to_bits).collect()
}

#[test]
fn clones_memorise_a_short_text() {
    let c = Corpus::from_text(TEXT).unwrap();
    let cfg = RunConfig { hidden: 48, ..config(c.len() - 1, 150) };
    let (params, surface) = train_target(&c.sequence, c.vocab.len(), &cfg, no_observer).unwrap();
    assert_eq!((surface.iterations(), surface.levels()), (150, c.len() - 1));
    let sums = sum_over_history(&surface);
    assert!(sums[149] < 0.1 * sums[0], "{} vs {}", sums[149], sums[0]);
    let best = [FeedbackMode::Raw, FeedbackMode::OneHot]
        .map(|m| seed_and_generate(&params, &c.sequence, &c.vocab, 10, m).unwrap().edit_distance);
    assert!(best.contains(&0), "edit distances {best:?}");
}

#[test]
fn observer_sees_every_iteration_in_order() {
    let c = Corpus::from_text(TEXT).unwrap();
    let mut seen = Vec::new();
    let (_, surface) = train_target(&c.sequence, c.vocab.len(), &config(9, 3), |i: usize, _: &NetworkParams, r: &SweepRecord| {
        seen.push((i, r.mean_loss_by_step.len()));
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, [(1, c.len() - 1), (2, c.len() - 1), (3, c.len() - 1)]);
    assert_eq!(surface.iterations(), 3);
}

#[test]
fn spaced_clones_train_with_finite_losses() {
    let c = Corpus::from_text(TEXT).unwrap();
    assert_eq!(clone_phases(5, c.len()), vec![1, 10, 19, 28, 37]);
    let (params, surface) = train_target(&c.sequence, c.vocab.len(), &config(5, 4), no_observer).unwrap();
    assert!(params.is_finite());
    assert!(surface.rows().iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn baseline_starts_from_the_target_initialisation() {
    let c = Corpus::from_text(TEXT).unwrap();
    let cfg = RunConfig { lr: 1e-300, ..config(c.len() - 1, 1) };
    let (regular, _) = train_regular(&c.sequence, c.vocab.len(), &cfg, no_observer).unwrap();
    let init = init_params(Dimensions::new(c.vocab.len(), cfg.hidden), cfg.rng_seed);
    // A vanishing step leaves the (non-zero) weights where they started; the
    // zero-initialised biases do move.
    let weights = |p: &NetworkParams| p.w_ih.iter().chain(&p.w_ho).map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(weights(&regular), weights(&init));
}

#[test]
fn measurement_is_read_only() {
    let c = Corpus::from_text(TEXT).unwrap();
    let p = init_params(Dimensions::new(c.vocab.len(), 12), 1);
    let before = bits(&p);
    let record = measure_with_nonactive_clones(&p, &c.sequence, c.len() - 1, 2).unwrap();
    assert_eq!(record.mean_loss_by_step.len(), c.len() - 1);
    assert_eq!(bits(&p), before);
}

#[test]
fn checkpoint_and_surface_survive_the_disk() {
    let c = Corpus::from_text(TEXT).unwrap();
    let (params, surface) = train_target(&c.sequence, c.vocab.len(), &config(c.len() - 1, 5), no_observer).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (ck, csv) = (dir.path().join("p.ckpt"), dir.path().join("s.csv"));
    checkpoint::save(&params, &ck).unwrap();
    export_surface_csv(&surface, &csv).unwrap();
    let loaded = checkpoint::load(&ck).unwrap();
    assert_eq!(bits(&loaded), bits(&params));
    assert_eq!(import_surface_csv(&csv).unwrap(), surface);
    let a = seed_and_generate(&params, &c.sequence, &c.vocab, 10, FeedbackMode::Raw).unwrap();
    let b = seed_and_generate(&loaded, &c.sequence, &c.vocab, 10, FeedbackMode::Raw).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bundled_corpus_counts() {
    let c = Corpus::moby_dick().unwrap();
    assert_eq!((c.len(), c.vocab.len()), (500, 42));
    assert!(c.text.starts_with("CHAPTER 1. Loomings."));
}

#[test]
fn untrained_network_is_near_uniform_and_recalls_badly() {
    let c = Corpus::moby_dick().unwrap();
    let dims = Dimensions::new(c.vocab.len(), pclones::config::DEFAULT_HIDDEN);
    let p = init_params(dims, 0);
    let mut engine = pclones::CloneEngine::for_sequence(dims, c.len() - 1, c.len(), 1).unwrap();
    let first = engine.measure_step(&p, &c.sequence, 1).unwrap();
    let uniform = (c.vocab.len() as f64).ln();
    assert!((first - uniform).abs() < 0.1 * uniform, "{first} vs {uniform}");
    let r = seed_and_generate(&p, &c.sequence, &c.vocab, 10, FeedbackMode::Raw).unwrap();
    assert!(r.edit_distance > 300, "{}", r.edit_distance);
}
