use fact_core::analysis::{phase_only_protocol, ProtocolReport, Representation};
use fact_core::corpus::{synth_generate, SynthConfig};
use fact_core::coteacher::{FactConfig, ModelSpec};

#[test]
fn phase_only_transfers_and_amplitude_only_does_not() {
    let corpus = synth_generate(&SynthConfig {
        train_fraction: 0.7,
        seed: 0,
        ..Default::default()
    })
    .unwrap();
    let cfg = FactConfig {
        epochs: 40,
        batch_size: 8,
        lr: 0.005,
        model: ModelSpec {
            conv_channels: vec![],
            hidden: vec![64, 32],
        },
        ..Default::default()
    };
    let report = phase_only_protocol(&corpus, &cfg).unwrap();
    eprint!("{}", report.summary());
    let delta = report.delta(Representation::PhaseOnly);
    let n = delta.len();
    let not_worse = (0..n)
        .flat_map(|s| (0..n).map(move |t| (s, t)))
        .filter(|&(s, t)| s != t && delta[s][t] >= 0.0)
        .count();
    assert!(2 * not_worse > n * (n - 1), "phase-only not worse in {not_worse} of {} cells", n * (n - 1));

    let chance = 1.0 / corpus.num_classes() as f64;
    let amp = ProtocolReport::mean_cross_domain(report.matrix(Representation::AmplitudeOnly));
    let orig = ProtocolReport::mean_cross_domain(report.matrix(Representation::Original));
    assert!(amp < chance + 0.15, "amplitude-only cross-domain accuracy {amp}");
    assert!(amp < orig);
}
