//! End-to-end behaviour of the coding schemes and the harness.

use coordsim::coding::{
    case_a_bound, encoder_failure_probability, scan_codebook, search_bins, BinnedSchemeConfig, CodebookSpec,
    DecodeStatus, DirectSchemeConfig,
};
use coordsim::harness::{self, ExperimentConfig, SweepGrid};
use coordsim::probkit;
use coordsim::typicality::is_strongly_typical;
use coordsim::{draw_actions, CondPmf, ErrorCase, MarkovLaw, Pmf, Scheme, SourceConfig};

fn bsc_law(obs: f64, chan: f64) -> MarkovLaw {
    MarkovLaw::new(
        Pmf::uniform(2).unwrap(),
        CondPmf::binary_symmetric(obs).unwrap(),
        CondPmf::binary_symmetric(chan).unwrap(),
    )
    .unwrap()
}

fn direct_config(law: MarkovLaw, rate: f64, eps: f64, agents: usize, n: usize, trials: u64) -> ExperimentConfig {
    let source = SourceConfig::new(law.p0().clone(), law.obs().clone(), agents, n).unwrap();
    let target = law.induced_target();
    let scheme = DirectSchemeConfig::new(law, vec![rate], vec![0.0], eps).unwrap();
    ExperimentConfig::new(source, Scheme::Direct(scheme), target, trials, 11)
}

#[test]
fn encoder_failure_rate_matches_exact_probability() {
    let law = bsc_law(0.2, 0.3);
    let xhat = [0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0];
    let eps = 0.5;
    let size = 2;
    let runs = 4000u64;
    let failures = (0..runs)
        .filter(|&seed| {
            let book = CodebookSpec::with_counts(xhat.len(), size, 1, law.p_y().clone(), seed, 0).unwrap();
            !scan_codebook(&xhat, &book, law.p_xhat_y(), eps, None).found
        })
        .count() as f64;
    let p = encoder_failure_probability(&xhat, law.p_xhat_y(), eps, size).unwrap();
    let freq = failures / runs as f64;
    let sd = (p * (1.0 - p) / runs as f64).sqrt();
    assert!(p > 0.05 && p < 0.95, "uninformative setting: {p}");
    assert!((freq - p).abs() < 4.0 * sd, "frequency {freq} vs exact {p}");
}

#[test]
fn case_a_frequency_respects_its_bound() {
    let law = bsc_law(0.1, 0.1);
    let (n, eps, agents) = (8000, 2.0, 2);
    let bound = case_a_bound(n as u64, eps, 2, agents);
    assert!(bound < 1e-6, "{bound}");
    let source = SourceConfig::new(law.p0().clone(), law.obs().clone(), agents, n).unwrap();
    let hits = (0..200)
        .filter(|&t| coordsim::coding::source_atypical(&draw_actions(&source, 3, t), &law, eps))
        .count();
    assert_eq!(hits, 0);
}

#[test]
fn successful_trials_are_within_half_epsilon() {
    let law = bsc_law(0.1, 0.2);
    let rate = probkit::mutual_information(law.p_xhat_y()) + 0.15;
    let cfg = direct_config(law, rate, 1.0, 2, 24, 300);
    let records = harness::run_trials(&cfg).unwrap();
    let ok: Vec<_> = records.iter().filter(|r| r.error_case == ErrorCase::None).collect();
    assert!(ok.len() > 30, "only {} successes", ok.len());
    for r in ok {
        assert!(r.tv < 1.0 / 2.0, "tv {}", r.tv);
    }
}

#[test]
fn planted_tuple_is_decoded_uniquely() {
    let law = bsc_law(0.1, 0.2);
    let eps = 0.6;
    // Type (x, y) of these sequences is exactly p_XY at n = 10 up to rounding.
    let planted = vec![0, 0, 0, 0, 1, 1, 1, 1, 0, 1];
    let x = vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 0];
    assert!(is_strongly_typical(&x, &planted, law.p_x_y(), eps).unwrap());
    let decoy = vec![0; 10];
    let status = search_bins(&[vec![decoy.clone(), planted.clone(), decoy]], &law, eps);
    assert_eq!(status, DecodeStatus::Unique { tuple: vec![1] });
    let status = search_bins(&[vec![planted.clone(), planted]], &law, eps);
    assert_eq!(status, DecodeStatus::Ambiguous { count: 2 });
    assert_eq!(search_bins(&[vec![vec![0; 10]]], &law, eps), DecodeStatus::NoTuple);
}

#[test]
fn experiments_do_not_depend_on_the_thread_count() {
    let law = bsc_law(0.1, 0.2);
    let cfg = direct_config(law, 0.3, 0.5, 2, 16, 64);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| harness::run_experiment(&cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn resumed_sweep_equals_fresh_sweep() {
    let law = bsc_law(0.1, 0.2);
    let source = SourceConfig::new(law.p0().clone(), law.obs().clone(), 1, 6).unwrap();
    let target = law.induced_target();
    let scheme = BinnedSchemeConfig::new(law, 0.2, 0.0, 0.2, 0.0, 1.2).unwrap();
    let cfg = ExperimentConfig::new(source, Scheme::Binned(scheme), target, 24, 5);
    let grid = SweepGrid {
        n_list: vec![6],
        agents_list: vec![1, 2],
        rate_list: vec![vec![0.2, 0.2]],
        delta_list: vec![0.1, 0.3],
    };
    let fresh = harness::sweep(&cfg, &grid, &[]).unwrap();
    let resumed = harness::sweep(&cfg, &grid, &fresh[..2]).unwrap();
    assert_eq!(fresh, resumed);
    let mut buf = Vec::new();
    harness::write_rows(&mut buf, &fresh).unwrap();
    assert!(buf.starts_with(harness::CSV_SCHEMA.as_bytes()));
    assert_eq!(harness::read_rows(&buf[..]).unwrap(), fresh);
}
