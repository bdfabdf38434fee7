use fact_core::corpus::{
    load_corpus, synth_generate, write_corpus, BatchConfig, BatchPlan, Manifest, PairSampler, PairingStrategy, Split,
    SynthConfig,
};
use fact_core::rng::stream;
use proptest::prelude::*;

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n_per_cell: 4,
        height: 8,
        width: 8,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splits_partition_every_domain(seed in 0u64..1000) {
        let c = synth_generate(&small(seed)).unwrap();
        let (tr, va) = (c.indices(Split::Train), c.indices(Split::Val));
        prop_assert_eq!(tr.len() + va.len(), c.len());
        for d in 0..c.num_domains() {
            prop_assert!(!c.domain_indices(d, Some(Split::Train)).is_empty());
        }
        prop_assert!(c.samples().iter().all(|s| s.image.data().iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn partners_respect_the_pairing_strategy(seed in 0u64..1000) {
        let c = synth_generate(&small(seed)).unwrap();
        let sampler = PairSampler::new(&c);
        let mut rng = stream(seed, 3, 0);
        for anchor in c.indices(Split::Train) {
            let dom = c.sample(anchor).domain_id;
            let r = sampler.sample(anchor, PairingStrategy::Random, &mut rng).unwrap();
            let intra = sampler.sample(anchor, PairingStrategy::IntraDomain, &mut rng).unwrap();
            let inter = sampler.sample(anchor, PairingStrategy::InterDomain, &mut rng).unwrap();
            prop_assert!(r != anchor && intra != anchor);
            prop_assert_eq!(c.sample(intra).domain_id, dom);
            prop_assert!(c.sample(inter).domain_id != dom);
            for p in [r, intra, inter] {
                prop_assert_eq!(c.split_of(p), Split::Train);
            }
        }
    }

    #[test]
    fn batches_cover_the_train_split(seed in 0u64..1000, bs in 1usize..6) {
        let c = synth_generate(&small(seed)).unwrap();
        let plan = BatchPlan::new(&c, BatchConfig {
            batch_size: bs,
            augment: None,
            pairing: PairingStrategy::Random,
            hflip: false,
            seed,
        }).unwrap();
        let mut anchors = Vec::new();
        for b in plan.epoch(0) {
            let b = b.unwrap();
            let k = b.anchors();
            prop_assert!(k >= 1 && k <= bs);
            prop_assert_eq!(b.augmented.len(), b.originals.len());
            prop_assert_eq!(&b.augmented, &b.originals);
            for (i, &idx) in b.sample_indices.iter().enumerate() {
                prop_assert_eq!(b.labels[i], c.sample(idx).class_id);
                prop_assert_eq!(b.domains[i], c.sample(idx).domain_id);
            }
            anchors.extend_from_slice(&b.sample_indices[..k]);
        }
        anchors.sort();
        prop_assert_eq!(anchors, c.indices(Split::Train));
    }
}

#[test]
fn synth_is_seed_deterministic() {
    let gen = |seed| synth_generate(&small(seed)).unwrap();
    let (a, b, c) = (gen(3), gen(3), gen(4));
    assert_eq!(a.samples(), b.samples());
    assert_eq!(a.splits(), b.splits());
    assert_ne!(a.samples(), c.samples());
}

#[test]
fn written_corpus_round_trips_within_quantisation() {
    let c = synth_generate(&small(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = write_corpus(&c, dir.path(), 0.75, 9).unwrap();
    let back = load_corpus(
        dir.path(),
        &Manifest::from_file(&dir.path().join("manifest.toml")).unwrap(),
    )
    .unwrap();
    assert_eq!(m, Manifest::from_file(&dir.path().join("manifest.toml")).unwrap());
    assert_eq!(back.len(), c.len());
    assert_eq!(back.domain_names(), c.domain_names());
    assert_eq!(back.class_names(), c.class_names());
    for (a, b) in back.samples().iter().zip(c.samples()) {
        assert_eq!((a.class_id, a.domain_id), (b.class_id, b.domain_id));
        assert!(a.image.max_abs_diff(&b.image) <= 0.5 / 255.0 + 1e-12);
    }
}
