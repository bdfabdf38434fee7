//! Where the synthetic corpus keeps its labels: domain in the amplitude,
//! class in the phase.

use fact_core::analysis::{amplitude_features, phase_randomized, LinearProbe, ProbeConfig};
use fact_core::corpus::{synth_generate, MultiDomainCorpus, Split, SynthConfig};
use fact_core::rng::stream;
use fact_core::spectral::PolarImage;

fn corpus() -> MultiDomainCorpus {
    synth_generate(&SynthConfig {
        train_fraction: 0.5,
        seed: 4,
        ..Default::default()
    })
    .unwrap()
}

fn probe(
    c: &MultiDomainCorpus,
    feat: impl Fn(usize) -> Vec<f64>,
    label: impl Fn(usize) -> usize,
    classes: usize,
) -> f64 {
    let (tr, va) = (c.indices(Split::Train), c.indices(Split::Val));
    let xt: Vec<_> = tr.iter().map(|&i| feat(i)).collect();
    let yt: Vec<_> = tr.iter().map(|&i| label(i)).collect();
    let xv: Vec<_> = va.iter().map(|&i| feat(i)).collect();
    let yv: Vec<_> = va.iter().map(|&i| label(i)).collect();
    LinearProbe::fit(&xt, &yt, classes, &ProbeConfig::default())
        .unwrap()
        .accuracy(&xv, &yv)
        .unwrap()
}

#[test]
fn amplitude_predicts_domain() {
    let c = corpus();
    let acc = probe(
        &c,
        |i| amplitude_features(&PolarImage::from_image(&c.sample(i).image).unwrap(), 8).unwrap(),
        |i| c.sample(i).domain_id,
        c.num_domains(),
    );
    assert!(acc > 0.9, "amplitude -> domain {acc}");
}

#[test]
fn phase_randomized_images_lose_the_class() {
    let c = corpus();
    let randomized: Vec<Vec<f64>> = (0..c.len())
        .map(|i| {
            let mut rng = stream(4, 0, i as u64);
            phase_randomized(&c.sample(i).image, &mut rng).unwrap().data().to_vec()
        })
        .collect();
    let label = |i: usize| c.sample(i).class_id;
    let scrambled = probe(&c, |i| randomized[i].clone(), label, c.num_classes());
    let intact = probe(&c, |i| c.sample(i).image.data().to_vec(), label, c.num_classes());
    let chance = 1.0 / c.num_classes() as f64;
    eprintln!("phase-randomized {scrambled:.3}, intact {intact:.3}");
    assert!(
        scrambled < chance + 0.15,
        "phase-randomized pixels -> class {scrambled}"
    );
    assert!(intact > scrambled + 0.2, "intact pixels -> class {intact}");
}
