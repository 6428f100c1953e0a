//! Scratch calibration run; not part of the deliverable surface.

use sonomask_core::asr::{synth_corpus, train, transcribe, TrainConfig, Transcription, Vocabulary};
use sonomask_core::attack::{generate, stage1, stage2, AttackConfig};
use sonomask_core::audio::{add_white_noise, AudioClip};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let vocab = Vocabulary::default_synthetic();
    let corpus = synth_corpus(&vocab, 240, 1234, 16000).unwrap();
    let cfg = TrainConfig::default();
    let (model, report) = train(&corpus, &vocab, &cfg).unwrap();
    println!(
        "train: {:.1}s frame_acc={:.4} seq_match={:.4} holdout={} loss={:.4}",
        t0.elapsed().as_secs_f64(),
        report.frame_accuracy,
        report.sequence_match,
        report.holdout_count,
        report.final_loss
    );

    // Attack fixture: 3-token target, pinned config.
    let target = vocab.map_text("hui che ba").unwrap();
    let acfg = AttackConfig { seed: 7, ..AttackConfig::default() };
    let t1 = Instant::now();
    let s1 = stage1(&model, &target, &acfg).unwrap();
    println!(
        "stage1: {:.1}s success={} iters={} energy={:.6e}",
        t1.elapsed().as_secs_f64(),
        s1.success,
        s1.iterations_used,
        s1.l2_energy
    );
    if !s1.success {
        println!("decode: {:?}", vocab.render(&s1.achieved));
        return;
    }

    for alpha in [60.0, 120.0, 240.0] {
        let t2 = Instant::now();
        let cfg2 = AttackConfig { alpha_init: alpha, ..acfg.clone() };
        let s2 = stage2(&model, &s1, &target, &cfg2).unwrap();
        let reduction = 1.0 - s2.l2_energy / s1.l2_energy;
        // Noise robustness at training sigma.
        let mut hits = 0;
        for trial in 0..50u64 {
            let noisy = add_white_noise(&s2.delta, acfg.sigma, 9000 + trial).unwrap();
            if transcribe(&model, &noisy).unwrap() == target {
                hits += 1;
            }
        }
        println!(
            "stage2 alpha={alpha}: {:.1}s reduction={:.3} robust={}/50 success={}",
            t2.elapsed().as_secs_f64(),
            reduction,
            hits,
            s2.success
        );
    }

    // Quick multi-target pass at default alpha.
    let t3 = Instant::now();
    let mut ok = 0;
    for seed in 0..6u64 {
        let tgt = random_target(&vocab, seed);
        let cfg = AttackConfig { seed, ..AttackConfig::default() };
        let r = generate(&model, &tgt, &cfg).unwrap();
        if r.success {
            ok += 1;
        }
        println!(
            "  target {} -> success={} iters={} energy={:.3e}",
            vocab.render(&tgt),
            r.success,
            r.iterations_used,
            r.l2_energy
        );
    }
    println!("multi: {ok}/6 in {:.1}s", t3.elapsed().as_secs_f64());
}

fn random_target(vocab: &Vocabulary, seed: u64) -> Transcription {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xFACE);
    let speech = vocab.speech_tokens();
    let len = rng.random_range(2..=4usize);
    let mut tokens: Vec<usize> = Vec::new();
    while tokens.len() < len {
        let t = speech[rng.random_range(0..speech.len())];
        if tokens.last() != Some(&t) {
            tokens.push(t);
        }
    }
    let _ = AudioClip::silence(0, 16000);
    Transcription::new(tokens).unwrap()
}
