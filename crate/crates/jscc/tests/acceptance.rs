//! End-to-end acceptance suite. Each test covers one release criterion and
//! prints a single PASS line on success; a panic marks the criterion failed.
//!
//! The long-running tests (waterfall, efficiency sweep) pin their full
//! configuration -- image, library, margins, seeds, trial counts -- so the
//! numbers they assert against are reproducible bit-for-bit.

use jscc::bcjr::WrapMode;
use jscc::channel::{inverse_binary_entropy, Bsc};
use jscc::context::MarkovState;
use jscc::decode::{decode_bits, split_llrs, BpConfig, SourcePrior};
use jscc::dwt::{forward_dwt, inverse_dwt_image, stripe_scan, WaveletFilter};
use jscc::entropy::{decode_plane, encode_plane, ArithDecoder, ArithEncoder};
use jscc::gf2::{circ_inverse, Gf2Poly};
use jscc::image::{psnr, ImagePlane};
use jscc::library::chain_only_library;
use jscc::model::{
    band_kinds, empirical_entropy, estimate_model, plane_sequence, update_top_significance,
    AllocationMode,
};
use jscc::pipeline::{
    analyze, efficiency_sweep, jscc_decode, jscc_encode, model_study, threshold_experiment,
    CodecConfig,
};
use jscc::quant::{quantize, reconstruct, soft_reconstruct_sample, QuantizerBank};
use jscc::turbo::{
    circulation_state, jscc_rcc, rcc_encode_tailbiting, PuncturePattern, RccSpec, TurboCode,
};
use jscc::JsccError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(name: &str, detail: &str) {
    println!("[acceptance] {name}: PASS ({detail})");
}

/// Criterion 1: golden vectors for the circulant algebra underlying
/// tail-biting initialization.
#[test]
fn circulant_inverse_golden_vectors() {
    let a = Gf2Poly::from_octal(0o23);

    let tau16 = circ_inverse(&a, 16).unwrap();
    assert_eq!(
        tau16.to_bits(16),
        vec![1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1],
        "tau for K=16 differs from the golden vector"
    );
    assert_eq!(tau16.weight(), 9, "tau weight at K=16");

    let tau64 = circ_inverse(&a, 64).unwrap();
    assert_eq!(tau64.weight(), 33, "tau weight at K=64");

    // u(D) = 1 at K=16 must circulate from the all-ones state (1,1,1,1).
    let mut u = vec![0u8; 16];
    u[0] = 1;
    let s0 = circulation_state(&jscc_rcc(), &u).unwrap();
    assert_eq!(s0, 0b1111, "circulation state for u(D)=1, K=16");

    // K=30 is a multiple of the feedback period 15: no inverse exists.
    assert!(
        matches!(circ_inverse(&a, 30), Err(JsccError::SingularLength { k: 30 })),
        "K=30 must be rejected as singular"
    );

    pass(
        "circulant_inverse_golden_vectors",
        "tau K=16/K=64 exact, state (1,1,1,1), K=30 singular",
    );
}

/// Criterion 2: converged BP posteriors against the exhaustive joint-MAP
/// oracle on small blocks.
///
/// Instance distribution (pinned): K in {10, 11}, mu = 2 components
/// (7,5)_8, unpunctured rate 1/3, window-2 Markov source with per-state
/// LLRs in [-2, 2], BSC rho in [0.01, 0.06]. Loopy BP is not exact on
/// these tiny graphs, so the criterion is statistical: at least 95% of
/// instances must match the oracle within 1e-4 in probability, and at
/// least 95% must agree with the symbol-MAP hard decisions everywhere.
#[test]
fn joint_bp_matches_exhaustive_map_on_small_blocks() {
    const INSTANCES: usize = 500;
    const WINDOW: usize = 2;
    let spec = RccSpec::from_octal(0o7, 0o5, 2);
    let cfg = BpConfig {
        max_iters: 100,
        wrap: WrapMode::Exact,
        clamp: 80.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut close = 0usize;
    let mut hard_ok = 0usize;
    for _ in 0..INSTANCES {
        let k = rng.gen_range(10..=11usize);
        let nu_table: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let rho: f64 = rng.gen_range(0.01..0.06);
        let interleaver_seed: u64 = rng.gen();
        let noise_seed: u64 = rng.gen();

        // sample the source by walking the chain from state 0
        let mut state = MarkovState(0);
        let mut u = Vec::with_capacity(k);
        for _ in 0..k {
            let p1 = 1.0 / (1.0 + nu_table[state.0 as usize].exp());
            let bit = rng.gen_bool(p1) as u8;
            state = state.push(bit, WINDOW);
            u.push(bit);
        }

        let pattern = PuncturePattern {
            r0: (0..k as u32).collect(),
            r1: (0..k as u32).collect(),
            r2: (0..k as u32).collect(),
        };
        let code = TurboCode::new(spec, k, interleaver_seed, pattern).unwrap();
        let ch = Bsc::new(rho);
        let y = ch.transmit(&code.encode(&u).unwrap(), noise_seed);

        // exhaustive oracle: posterior marginals over all 2^k words
        let mut num1 = vec![0.0f64; k];
        let mut total = 0.0f64;
        for word in 0u32..(1u32 << k) {
            let w: Vec<u8> = (0..k).map(|i| ((word >> i) & 1) as u8).collect();
            let mut weight = 1.0f64;
            let mut st = MarkovState(0);
            for &bit in &w {
                let p1 = 1.0 / (1.0 + nu_table[st.0 as usize].exp());
                weight *= if bit == 1 { p1 } else { 1.0 - p1 };
                st = st.push(bit, WINDOW);
            }
            let x = code.encode(&w).unwrap();
            for (a, b) in x.iter().zip(&y) {
                weight *= if a == b { 1.0 - rho } else { rho };
            }
            total += weight;
            for i in 0..k {
                if w[i] == 1 {
                    num1[i] += weight;
                }
            }
        }
        let oracle_p1: Vec<f64> = num1.iter().map(|&n| n / total).collect();

        let nu_fn = move |_pos: usize, st: u32| nu_table[st as usize];
        let (l_sys, l_p1, l_p2) = split_llrs(&code, &ch, &y);
        let out = decode_bits(
            &SourcePrior::Trellis {
                window: WINDOW,
                nu: &nu_fn,
            },
            &code,
            &l_sys,
            &l_p1,
            &l_p2,
            &cfg,
        );

        let bp_p1: Vec<f64> = out.posterior.iter().map(|&l| 1.0 / (1.0 + l.exp())).collect();
        if bp_p1
            .iter()
            .zip(&oracle_p1)
            .all(|(a, b)| (a - b).abs() <= 1e-4)
        {
            close += 1;
        }
        if out
            .hard
            .iter()
            .zip(&oracle_p1)
            .all(|(&h, &p)| h == u8::from(p > 0.5))
        {
            hard_ok += 1;
        }
    }
    assert!(
        close >= 475,
        "only {close}/{INSTANCES} instances within 1e-4 of the oracle (need >= 475)"
    );
    assert!(
        hard_ok >= 475,
        "only {hard_ok}/{INSTANCES} instances match symbol-MAP hard decisions (need >= 475)"
    );
    pass(
        "joint_bp_matches_exhaustive_map_on_small_blocks",
        &format!("{close}/500 within 1e-4, {hard_ok}/500 hard-decision match"),
    );
}

/// Criterion 3: Bernoulli-source waterfall around the Shannon limit.
/// H(U) = 0.5, C = 0.5 (rho ~ 0.110): BER < 1e-2 at eta = 0.8, > 1e-1
/// at eta = 1.2, monotone between, over 20 seeded trials per point.
#[test]
fn bernoulli_threshold_waterfall() {
    let h = 0.5f64;
    let rho = inverse_binary_entropy(0.5);
    let lib = chain_only_library(rho, 4096, 7);
    let etas = [0.8, 0.9, 1.0, 1.1, 1.2];
    let bp = BpConfig::default();
    let points = threshold_experiment(h, rho, 1 << 16, &etas, 20, &lib, &bp, 71).unwrap();
    for p in &points {
        println!(
            "[acceptance]   waterfall eta {:.2} -> ber {:.5}",
            p.eta, p.ber
        );
    }
    assert!(
        points[0].ber < 1e-2,
        "eta=0.8 ber {} not below 1e-2",
        points[0].ber
    );
    assert!(
        points[4].ber > 1e-1,
        "eta=1.2 ber {} not above 1e-1",
        points[4].ber
    );
    for w in points.windows(2) {
        assert!(
            w[0].ber <= w[1].ber + 0.01,
            "ber not monotone (within slack) between eta {} and {}",
            w[0].eta,
            w[1].eta
        );
    }
    pass(
        "bernoulli_threshold_waterfall",
        &format!(
            "ber(0.8)={:.5}, ber(1.2)={:.5}, monotone",
            points[0].ber, points[4].ber
        ),
    );
}

/// Criterion 4: compression-only consistency. The arithmetic-coded length
/// stays within 0.01 bits/sample of the conditional empirical entropy, and
/// the model-allocation description lengths are ordered brute-force <=
/// Rissanen <= raw K(P+1). Absolute bits-per-sample figures are printed as
/// a sanity band only; no external reference values are asserted.
#[test]
fn arithmetic_code_length_matches_entropy_and_allocation_order() {
    for (w, hgt, seed) in [(64usize, 64usize, 9u64), (128, 128, 5)] {
        let img = ImagePlane::synthetic(w, hgt, seed);
        let cfg = CodecConfig::default();
        let analysis = analyze(&img, &cfg).unwrap();
        let model = &analysis.build.model;
        let k_samples = analysis.sites.len();

        // walk the planes in decode order, coding each under the same
        // progressive significance state the entropy estimate uses
        let mut top = vec![0u8; k_samples];
        let plane_order: Vec<usize> = (1..=cfg.planes).rev().chain(std::iter::once(0)).collect();
        let mut ac_bits = 0usize;
        let mut entropy_bits = 0.0f64;
        for &p in &plane_order {
            let zero: Vec<bool> = model.segments[p].iter().map(|s| s.zero).collect();
            let seq = plane_sequence(&analysis.sites, &zero);
            if seq.is_empty() {
                continue;
            }
            let h = empirical_entropy(
                p,
                &seq,
                &analysis.bits.planes[p],
                &analysis.sites,
                &analysis.bands,
                &top,
                model,
            );
            let (bytes, bit_len) = encode_plane(
                p,
                &seq,
                &analysis.bits.planes[p],
                &analysis.sites,
                &analysis.bands,
                &top,
                model,
            );
            // the coded stream must also decode back to the same bits
            let back = decode_plane(
                &bytes,
                bit_len,
                p,
                &seq,
                &analysis.sites,
                &analysis.bands,
                &top,
                model,
            )
            .unwrap();
            for (i, &scan) in seq.iter().enumerate() {
                assert_eq!(back[i], analysis.bits.planes[p][scan as usize]);
            }
            ac_bits += bit_len;
            entropy_bits += h * seq.len() as f64;
            if p >= 1 {
                update_top_significance(&mut top, &analysis.bits.planes[p], p);
            }
        }
        let h_hat = entropy_bits / k_samples as f64;
        let rate = ac_bits as f64 / k_samples as f64;
        assert!(
            rate >= h_hat - 1e-9,
            "{w}x{hgt}: coded rate {rate} below the empirical entropy {h_hat}"
        );
        assert!(
            rate <= h_hat + 0.01,
            "{w}x{hgt}: coded rate {rate} exceeds empirical entropy {h_hat} + 0.01"
        );

        // allocation ordering: joint search <= Rissanen rule <= raw bits
        let grid = forward_dwt(&img, cfg.levels, cfg.filter).unwrap();
        let sites = stripe_scan(&grid.geometry);
        let bank = QuantizerBank::fit(&grid, cfg.planes);
        let bits = quantize(&grid, &bank, &sites);
        let brute = estimate_model(
            &bits,
            &sites,
            &grid.geometry,
            &bank.delta,
            AllocationMode::BruteForce,
        );
        let riss = estimate_model(
            &bits,
            &sites,
            &grid.geometry,
            &bank.delta,
            AllocationMode::Rissanen,
        );
        let raw = (k_samples * (cfg.planes + 1)) as f64;
        assert!(
            brute.total_bits() <= riss.total_bits() + 1e-9,
            "{w}x{hgt}: brute-force allocation {} beats Rissanen {}",
            brute.total_bits(),
            riss.total_bits()
        );
        assert!(
            riss.total_bits() <= raw,
            "{w}x{hgt}: Rissanen allocation {} exceeds raw {} bits",
            riss.total_bits(),
            raw
        );

        // sanity band (report only): allocation-strategy comparison
        println!(
            "[acceptance]   {w}x{hgt}: coded {rate:.4} bps vs entropy {h_hat:.4} bps \
             (overhead {:.5})",
            rate - h_hat
        );
        for row in model_study(&img, &cfg).unwrap() {
            println!(
                "[acceptance]   {w}x{hgt} allocation {:>12}: {:.4} bps \
                 (data {:.0}, side {:.0})",
                row.label, row.bits_per_sample, row.data_bits, row.side_bits
            );
        }
    }
    pass(
        "arithmetic_code_length_matches_entropy_and_allocation_order",
        "rate within [H, H+0.01] bps, brute <= Rissanen <= K(P+1)",
    );
}

/// Criterion 5: the headline contrast. Sweeping the transmission budget
/// across [0.7, 1.3] x the Shannon-limit efficiency on a 128x128 image at
/// rho = 0.05, the separate-coding baseline falls off a cliff (>= 15 dB in
/// one grid step) while the joint codec degrades by <= 5 dB per step, and
/// at 0.95 of the limit the joint codec leads by >= 3 dB. Ten seeds per
/// grid point; both systems spend the same number of channel uses.
#[test]
fn jscc_degrades_gracefully_where_sscc_falls_off_cliff() {
    let img = ImagePlane::synthetic(128, 128, 5);
    let lib = chain_only_library(0.05, 4096, 7);
    let mut cfg = CodecConfig {
        rate_factor: 1.5,
        ..CodecConfig::default()
    };
    cfg.bp.max_iters = 40;
    let fracs = [0.7, 0.8, 0.9, 0.95, 1.0, 1.1, 1.2, 1.3];
    let rows = efficiency_sweep(&img, &lib, &cfg, &fracs, 10, 100).unwrap();
    for r in &rows {
        println!(
            "[acceptance]   frac {:.2} | jscc {:6.2} dB | sscc {:6.2} dB | quant {:6.2} dB",
            r.eta_frac, r.jscc_psnr_db, r.sscc_psnr_db, r.quant_psnr_db
        );
    }

    let mut max_jscc_step = 0.0f64;
    let mut max_sscc_step = 0.0f64;
    for w in rows.windows(2) {
        max_jscc_step = max_jscc_step.max(w[0].jscc_psnr_db - w[1].jscc_psnr_db);
        max_sscc_step = max_sscc_step.max(w[0].sscc_psnr_db - w[1].sscc_psnr_db);
    }
    assert!(
        max_sscc_step >= 15.0,
        "sscc curve shows no cliff: max step {max_sscc_step:.2} dB < 15"
    );
    assert!(
        max_jscc_step <= 5.0,
        "jscc curve not graceful: max step {max_jscc_step:.2} dB > 5"
    );
    let near = rows
        .iter()
        .find(|r| (r.eta_frac - 0.95).abs() < 1e-9)
        .expect("0.95 grid point present");
    assert!(
        near.jscc_psnr_db >= near.sscc_psnr_db + 3.0,
        "at 0.95 of the limit: jscc {:.2} dB vs sscc {:.2} dB (need >= 3 dB lead)",
        near.jscc_psnr_db,
        near.sscc_psnr_db
    );
    pass(
        "jscc_degrades_gracefully_where_sscc_falls_off_cliff",
        &format!(
            "sscc cliff {max_sscc_step:.1} dB, jscc max step {max_jscc_step:.1} dB, \
             0.95-point lead {:.1} dB",
            near.jscc_psnr_db - near.sscc_psnr_db
        ),
    );
}

/// Criterion 6: at zero noise the decoder's hard decisions are
/// bit-identical to the quantizer output, the hard reconstruction hits the
/// quantization limit exactly, and repeated runs are byte-identical.
#[test]
fn noiseless_channel_is_bit_exact_and_deterministic() {
    let img = ImagePlane::synthetic(64, 64, 3);
    let cfg = CodecConfig {
        rate_factor: 1.5,
        ..CodecConfig::default()
    };
    let lib = chain_only_library(0.05, 4096, 7);

    let enc = jscc_encode(&img, &lib, &cfg).unwrap();
    // zero noise: the payload arrives unchanged
    let dec = jscc_decode(&enc.container, &enc.payload, &lib, &cfg).unwrap();
    assert_eq!(
        dec.hard, enc.analysis.bits,
        "hard decisions differ from the quantizer output"
    );

    // reconstructing from the (identical) hard bits lands exactly on the
    // quantization limit
    let quant_grid = reconstruct(
        &enc.analysis.bits,
        &enc.analysis.bank,
        &enc.analysis.sites,
        &enc.analysis.grid.geometry,
    );
    let quant_img = inverse_dwt_image(&quant_grid, cfg.filter);
    let hard_grid = reconstruct(
        &dec.hard,
        &enc.analysis.bank,
        &enc.analysis.sites,
        &enc.analysis.grid.geometry,
    );
    let hard_img = inverse_dwt_image(&hard_grid, cfg.filter);
    assert_eq!(hard_img.samples, quant_img.samples, "reconstruction differs");
    let quant_psnr = psnr(&img, &quant_img);
    assert_eq!(psnr(&img, &hard_img), quant_psnr, "psnr differs from limit");
    // the delivered soft-bit image sits within a whisker of the limit
    let soft_psnr = psnr(&img, &dec.image);
    assert!(
        (soft_psnr - quant_psnr).abs() < 0.05,
        "soft image {soft_psnr:.3} dB vs quantization limit {quant_psnr:.3} dB"
    );

    // determinism: a second encode/decode is byte- and sample-identical
    let enc2 = jscc_encode(&img, &lib, &cfg).unwrap();
    assert_eq!(enc2.payload, enc.payload, "encoder payload not deterministic");
    assert_eq!(
        enc2.container.serialize(),
        enc.container.serialize(),
        "container bytes not deterministic"
    );
    let dec2 = jscc_decode(&enc2.container, &enc2.payload, &lib, &cfg).unwrap();
    assert_eq!(dec2.image.samples, dec.image.samples, "decode not deterministic");
    pass(
        "noiseless_channel_is_bit_exact_and_deterministic",
        &format!("bit-exact at quantization limit {quant_psnr:.2} dB, byte-identical reruns"),
    );
}

/// Criterion 7: the closed-form soft-bit estimate equals the brute-force
/// conditional mean over all 2^(P+1) bit patterns.
#[test]
fn soft_bit_formula_matches_brute_force_mean() {
    const P: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10_000 {
        let llrs: Vec<f64> = (0..=P).map(|_| rng.gen_range(-15.0..15.0)).collect();
        let delta = [0.5f64, 1.0, 2.0][trial % 3];
        let fast = soft_reconstruct_sample(&llrs, delta);
        // brute force: sum over all sign/magnitude patterns, weighting by
        // the product of independent per-bit probabilities P(b=1)=1/(1+e^l)
        let mut mean = 0.0f64;
        for pattern in 0u32..(1 << (P + 1)) {
            let mut w = 1.0f64;
            for (b, &l) in llrs.iter().enumerate() {
                let p1 = 1.0 / (1.0 + l.exp());
                w *= if (pattern >> b) & 1 == 1 { p1 } else { 1.0 - p1 };
            }
            let m = (pattern >> 1) as f64;
            let sign = if pattern & 1 == 1 { -1.0 } else { 1.0 };
            mean += w * sign * delta * m;
        }
        assert!(
            (fast - mean).abs() < 1e-9,
            "trial {trial}: fast {fast} vs brute {mean}"
        );
    }
    pass(
        "soft_bit_formula_matches_brute_force_mean",
        "10000 random LLR vectors, P=8, within 1e-9",
    );
}

/// Criterion 8: statistics of the tail-biting initialization. The
/// circulation state of biased-i.i.d. inputs is uniform over the 16 states
/// (chi-square at significance 1e-3), and the parity stream of a biased
/// input is balanced.
#[test]
fn circulation_state_statistics() {
    let spec = jscc_rcc();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // chi-square over 2^4 bins, 20000 words of K=64 Bernoulli(0.2) bits
    let mut counts = [0usize; 16];
    const WORDS: usize = 20_000;
    for _ in 0..WORDS {
        let u: Vec<u8> = (0..64).map(|_| rng.gen_bool(0.2) as u8).collect();
        counts[circulation_state(&spec, &u).unwrap() as usize] += 1;
    }
    let expected = WORDS as f64 / 16.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    // chi-square critical value, 15 degrees of freedom, alpha = 1e-3
    assert!(
        chi2 < 37.697,
        "circulation state not uniform: chi2 = {chi2:.2} >= 37.697"
    );

    // parity balance: Bernoulli(0.1) input of length 2^16
    let k = 1usize << 16;
    let u: Vec<u8> = (0..k).map(|_| rng.gen_bool(0.1) as u8).collect();
    let parity = rcc_encode_tailbiting(&spec, &u).unwrap();
    let ones = parity.iter().filter(|&&b| b == 1).count() as f64 / k as f64;
    assert!(
        (0.48..=0.52).contains(&ones),
        "parity ones-fraction {ones:.4} outside [0.48, 0.52]"
    );
    pass(
        "circulation_state_statistics",
        &format!("chi2 = {chi2:.2} < 37.697, parity ones-fraction {ones:.4}"),
    );
}

/// Criterion 9: the lossless building blocks round-trip exactly -- integer
/// DWT, arithmetic coder, sideband serialization, and turbo linearity.
#[test]
fn lossless_roundtrips() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // integer 5/3 DWT: perfect reconstruction on random images
    for (w, h, levels) in [(32usize, 32usize, 2usize), (64, 32, 2), (64, 64, 3), (128, 64, 2)] {
        let samples: Vec<i32> = (0..w * h).map(|_| rng.gen_range(0..256)).collect();
        let img = ImagePlane::new(w, h, samples);
        let grid = forward_dwt(&img, levels, WaveletFilter::LeGall53).unwrap();
        let back = inverse_dwt_image(&grid, WaveletFilter::LeGall53);
        assert_eq!(back.samples, img.samples, "{w}x{h} L={levels} not lossless");
    }

    // arithmetic coder: 1000 random (bit, probability) streams
    for stream in 0..1000 {
        let len = rng.gen_range(1..400usize);
        let probs: Vec<u16> = (0..len).map(|_| rng.gen_range(1..=u16::MAX - 1)).collect();
        let bits: Vec<u8> = probs
            .iter()
            .map(|&p| rng.gen_bool(p as f64 / 65536.0) as u8)
            .collect();
        let mut enc = ArithEncoder::new();
        for (&b, &p) in bits.iter().zip(&probs) {
            enc.encode(b, p);
        }
        let (bytes, bit_len) = enc.finish();
        let mut dec = ArithDecoder::new(&bytes, bit_len);
        for (i, (&b, &p)) in bits.iter().zip(&probs).enumerate() {
            assert_eq!(dec.decode(p), b, "stream {stream} bit {i}");
        }
    }

    // sideband: serialize/deserialize identity for an estimated model
    let img = ImagePlane::synthetic(64, 64, 11);
    let cfg = CodecConfig::default();
    let analysis = analyze(&img, &cfg).unwrap();
    let bytes = jscc::sideband::serialize(&analysis.build.model, &analysis.grid.geometry);
    let (model2, geom2) = jscc::sideband::deserialize(&bytes).unwrap();
    assert_eq!(model2, analysis.build.model, "model not identical after roundtrip");
    assert_eq!(geom2, analysis.grid.geometry, "geometry not identical");
    let _ = band_kinds(&geom2);

    // turbo encoding is linear: x(u) + x(v) = x(u + v) over GF(2)
    for pair in 0..1000 {
        let k = loop {
            let k = rng.gen_range(8..200usize);
            if k % 15 != 0 {
                break k;
            }
        };
        let pattern = PuncturePattern {
            r0: (0..k as u32).collect(),
            r1: (0..k as u32).step_by(2).collect(),
            r2: (0..k as u32).step_by(3).collect(),
        };
        let code = TurboCode::new(jscc_rcc(), k, rng.gen(), pattern).unwrap();
        let u: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
        let v: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
        let uv: Vec<u8> = u.iter().zip(&v).map(|(a, b)| a ^ b).collect();
        let xu = code.encode(&u).unwrap();
        let xv = code.encode(&v).unwrap();
        let xuv = code.encode(&uv).unwrap();
        let sum: Vec<u8> = xu.iter().zip(&xv).map(|(a, b)| a ^ b).collect();
        assert_eq!(sum, xuv, "pair {pair} (k={k}): encoder not linear");
    }

    pass(
        "lossless_roundtrips",
        "DWT, arithmetic coder, sideband, and turbo linearity all exact",
    );
}
