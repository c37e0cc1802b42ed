//! Acceptance suite. Every test writes one `PASS`/`FAIL` line for its
//! criterion straight to stdout before asserting, so the report shows up even
//! without `--nocapture`.

use std::io::Write;
use std::sync::OnceLock;

use biasprobe::complexity::{lz78_phrases, measure_sample, poly_complexity, spectrum, PolyOptions};
use biasprobe::experiments::*;
use biasprobe::grid::{sample_grid, FunctionSample, GridSpec};
use biasprobe::net::{ActivationKind, ArchSpec, InitSpec, Network};
use biasprobe::stats::{self, ks_two_sample};
use biasprobe::transformer::{sequence_complexities, uniform_control, TransformerConfig, GENERATED_TOKENS};
use biasprobe::Measure;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use ActivationKind::{Gaussian, Relu, Sine, Tanh};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {id:>2} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} {name} failed: {detail}");
}

const HEATMAP_ACTS: [ActivationKind; 4] = [Relu, Tanh, Gaussian, Sine];
const DEEP: usize = 6;

#[derive(Clone, Copy, PartialEq)]
enum Variant {
    Residual,
    LayerNorm,
    Gating,
}

/// Plain heatmaps at every depth, component variants at the deepest depth and
/// the unbiased model, all min-max normalized together.
struct Zoo {
    plain: Vec<(ActivationKind, SweepResult)>,
    variants: Vec<(ActivationKind, Variant, SweepResult)>,
    unbiased: SweepResult,
}

impl Zoo {
    fn plain(&self, act: ActivationKind) -> &SweepResult {
        &self.plain.iter().find(|(a, _)| *a == act).unwrap().1
    }

    fn variant(&self, act: ActivationKind, v: Variant) -> &SweepResult {
        &self.variants.iter().find(|(a, w, _)| *a == act && *w == v).unwrap().2
    }
}

fn zoo() -> &'static Zoo {
    static ZOO: OnceLock<Zoo> = OnceLock::new();
    ZOO.get_or_init(|| {
        let mut specs = Vec::new();
        for act in HEATMAP_ACTS {
            specs.push(SweepSpec::new(ArchSpec::mlp(act, 1, 64)));
        }
        for act in HEATMAP_ACTS {
            for v in [Variant::Residual, Variant::LayerNorm, Variant::Gating] {
                let t = ArchSpec::mlp(act, DEEP, 64)
                    .with_residual(v == Variant::Residual)
                    .with_layernorm(v == Variant::LayerNorm)
                    .with_gating(v == Variant::Gating);
                specs.push(SweepSpec { depths: vec![DEEP], ..SweepSpec::new(t) });
            }
        }
        specs.push(SweepSpec::new(ArchSpec::unbiased(2, 32)));
        let mut results: Vec<SweepResult> = specs.iter().map(|s| run_heatmap_sweep(s).unwrap()).collect();
        normalize_jointly(&mut results);
        let unbiased = results.pop().unwrap();
        let mut it = results.into_iter();
        let plain = HEATMAP_ACTS.iter().map(|&a| (a, it.next().unwrap())).collect();
        let mut variants = Vec::new();
        for act in HEATMAP_ACTS {
            for v in [Variant::Residual, Variant::LayerNorm, Variant::Gating] {
                variants.push((act, v, it.next().unwrap()));
            }
        }
        Zoo { plain, variants, unbiased }
    })
}

/// Per-scale cell means at depth index `di`.
fn scale_curve(r: &SweepResult, di: usize) -> Vec<f64> {
    r.cells(Measure::Fourier)[di].iter().map(|c| c.mean).collect()
}

fn spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn deep_index(r: &SweepResult) -> usize {
    r.spec.depths.iter().position(|&d| d == DEEP).unwrap()
}

#[test]
fn c01_relu_heatmap_is_flat() {
    let cells: Vec<_> = zoo().plain(Relu).cells(Measure::Fourier).into_iter().flatten().collect();
    let means: Vec<f64> = cells.iter().map(|c| c.mean).collect();
    let range = spread(&means);
    let max_sd = cells.iter().map(|c| c.std).fold(0.0, f64::max);
    report(
        1,
        "relu flatness",
        range < 0.05 && max_sd < 0.02,
        format!("mean range {range:.4} (< 0.05), max cell sd {max_sd:.4} (< 0.02)"),
    );
}

#[test]
fn c02_non_relu_complexity_grows_with_scale() {
    let mut ok = true;
    let mut notes = Vec::new();
    for act in [Tanh, Gaussian, Sine] {
        let r = zoo().plain(act);
        let mut worst = 0;
        for di in 0..r.spec.depths.len() {
            if r.spec.depths[di] < 2 {
                continue;
            }
            let c = scale_curve(r, di);
            let inversions = c.windows(2).filter(|w| w[1] <= w[0]).count();
            worst = worst.max(inversions);
        }
        let cells = r.cells(Measure::Fourier);
        let gap = cells.last().unwrap().last().unwrap().mean - cells[0][0].mean;
        ok &= worst <= 1 && gap >= 0.3;
        notes.push(format!("{act}: max inversions {worst}, corner gap {gap:.3}"));
    }
    report(2, "non-relu growth", ok, notes.join("; "));
}

#[test]
fn c03_component_effects() {
    let z = zoo();
    let mut ok = true;
    let mut notes = Vec::new();
    for act in HEATMAP_ACTS {
        let plain = z.plain(act);
        let res = z.variant(act, Variant::Residual);
        let p = stats::mean(&scale_curve(plain, deep_index(plain)));
        let q = stats::mean(&scale_curve(res, 0));
        ok &= q < p;
        notes.push(format!("{act} residual {q:.3} vs {p:.3}"));
    }
    for act in [Tanh, Gaussian, Sine] {
        let plain = z.plain(act);
        let p = spread(&scale_curve(plain, deep_index(plain)));
        let q = spread(&scale_curve(z.variant(act, Variant::LayerNorm), 0));
        let ratio = p / q;
        ok &= ratio >= 5.0;
        notes.push(format!("{act} layernorm range ratio {ratio:.2}"));
    }
    let plain = z.plain(Relu);
    let p = spread(&scale_curve(plain, deep_index(plain)));
    let q = spread(&scale_curve(z.variant(Relu, Variant::Gating), 0));
    ok &= p < 0.05 && q > 0.15;
    notes.push(format!("relu gating range {p:.3} -> {q:.3}"));
    report(3, "component effects", ok, notes.join("; "));
}

fn fourier_of(arch: &ArchSpec, seed: u64) -> f64 {
    let net = Network::init(arch, &InitSpec::seeded(seed)).unwrap();
    measure_sample(&sample_grid(&net, GridSpec::default()).unwrap(), Measure::Fourier).unwrap().raw
}

#[test]
fn c04_width_has_no_effect() {
    let widths = [16, 64, 256];
    let mut min_p = 1.0f64;
    let mut notes = Vec::new();
    for act in HEATMAP_ACTS {
        let dists: Vec<Vec<f64>> = widths
            .iter()
            .map(|&w| {
                let arch = ArchSpec::mlp(act, 3, w);
                (0..100u64).into_par_iter().map(|s| fourier_of(&arch, biasprobe::rng::derive(4, &[s]))).collect()
            })
            .collect();
        let mut ps = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                ps.push(ks_two_sample(&dists[i], &dists[j]).unwrap().p_value);
            }
        }
        let p = ps.iter().cloned().fold(1.0, f64::min);
        min_p = min_p.min(p);
        notes.push(format!("{act} min p {p:.3}"));
    }
    report(4, "width stationarity", min_p > 0.01, format!("depth 3, scale 1, 100 seeds: {}", notes.join("; ")));
}

#[test]
fn c05_unbiased_model_is_flat_and_complex() {
    let z = zoo();
    let lowest = z.unbiased.cells(Measure::Fourier)[0].iter().map(|c| c.mean).fold(f64::INFINITY, f64::min);
    let arch = ArchSpec::unbiased(2, 32);
    let spectra: Vec<Vec<f64>> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let net = Network::init(&arch, &InitSpec::seeded(biasprobe::rng::derive(5, &[s]))).unwrap();
            spectrum(&sample_grid(&net, GridSpec::default()).unwrap()).unwrap().magnitudes
        })
        .collect();
    let cv = |m: &[f64]| {
        let nz = &m[1..];
        stats::std_dev(nz) / stats::mean(nz)
    };
    let mut avg = vec![0.0; spectra[0].len()];
    for s in &spectra {
        for (a, v) in avg.iter_mut().zip(s) {
            *a += v / spectra.len() as f64;
        }
    }
    let averaged = cv(&avg);
    let per_seed = stats::mean(&spectra.iter().map(|s| cv(s)).collect::<Vec<_>>());
    report(
        5,
        "unbiased model",
        averaged < 0.2 && lowest > 0.9,
        format!("cv of seed-averaged spectrum {averaged:.3}, mean per-seed cv {per_seed:.3}, lowest cell {lowest:.3}"),
    );
}

#[test]
fn c06_measures_agree() {
    let pool = random_pool(200, 0);
    let study = run_correlation_study(&pool, &[Measure::Fourier, Measure::Chebyshev, Measure::Lz], GridSpec::default())
        .unwrap();
    let rhos: Vec<String> = study.pairs.iter().map(|(a, b, r)| format!("{a}-{b} {r:.3}")).collect();
    let min = study.pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    report(6, "measure correlation", min >= 0.8, format!("spearman {}", rhos.join(", ")));
}

#[test]
fn c07_modulo_generalization() {
    let spec = ModuloStudySpec {
        runs: vec![(Relu, vec![1.0]), (Gaussian, vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])],
        seeds: 3,
        ..ModuloStudySpec::default()
    };
    let study = run_modulo_study(&spec).unwrap();
    let relu = |m: usize| {
        let rows = study.select(m, Relu);
        let test = stats::mean(&rows.iter().map(|r| r.test_accuracy).collect::<Vec<_>>());
        let train = rows.iter().map(|r| r.train_accuracy).fold(1.0, f64::min);
        (test, train)
    };
    let (t10, tr10) = relu(10);
    let (t4, tr4) = relu(4);
    let peaks: Vec<f64> = [10, 7, 4].iter().map(|&m| study.peak(m).unwrap()).collect();
    let increasing = peaks.windows(2).all(|w| w[1] > w[0]);
    report(
        7,
        "modulo generalization",
        t10 > 0.9 && t4 < 0.65 && tr10 >= 0.99 && tr4 >= 0.99 && increasing,
        format!(
            "relu test M10 {t10:.3} M4 {t4:.3}, min train M10 {tr10:.3} M4 {tr4:.3}; gaussian peaks {:.2} {:.2} {:.2}",
            peaks[0], peaks[1], peaks[2]
        ),
    );
}

#[test]
fn c08_colored_mnist_shortcut() {
    let spec = CmnistStudySpec { seeds: 1, iterations: 1000, train_size: 2000, ..CmnistStudySpec::default() };
    let study = run_cmnist_study(&spec).unwrap();
    let smallest = spec.prefactors[0];
    let mut shortcut = true;
    let mut interior = 0;
    let mut notes = Vec::new();
    for &act in &spec.activations {
        let c = study.cell(act, smallest).unwrap();
        shortcut &= c.color_accuracy - c.digit_accuracy >= 0.1;
        let curve = study.digit_curve(act);
        let best = (0..curve.len()).max_by(|&i, &j| curve[i].total_cmp(&curve[j])).unwrap();
        if best > 0 && best + 1 < curve.len() {
            interior += 1;
        }
        notes.push(format!(
            "{act}: color {:.3} digit {:.3} at p={smallest}, digit peak at p={}",
            c.color_accuracy, c.digit_accuracy, spec.prefactors[best]
        ));
    }
    report(8, "colored-mnist shortcut", shortcut && interior >= 2, notes.join("; "));
}

#[test]
fn c09_shuffled_relu_returns_to_random() {
    let spec = CoordinateStudySpec {
        targets: vec![CoordinateTarget::Shapes],
        activations: vec![Relu],
        scales: vec![1.0],
        ..CoordinateStudySpec::default()
    };
    let study = run_coordinate_study(&spec).unwrap();
    let r = &study.runs[0];
    let (zt, zs) = (r.z(r.trained_complexity), r.z(r.shuffled_complexity));
    report(
        9,
        "shuffle analysis",
        zs.abs() <= 1.5 && zt > 3.0,
        format!(
            "untrained {:.3} ± {:.3}, trained z {zt:.2}, shuffled z {zs:.2}",
            r.reference_mean(),
            r.reference_std()
        ),
    );
}

#[test]
fn c10_random_transformers_prefer_simple_sequences() {
    let n = 1000;
    let base = TransformerConfig::default();
    let mean_lz = |cfg: &TransformerConfig| {
        let lz = sequence_complexities(cfg, n).unwrap();
        let v: Vec<f64> = lz.iter().map(|&c| c as f64).collect();
        (stats::mean(&v), stats::std_err(&v))
    };
    let control: Vec<f64> =
        uniform_control(base.vocab_size, GENERATED_TOKENS, n, base.seed).iter().map(|&c| c as f64).collect();
    let (cm, cse) = (stats::mean(&control), stats::std_err(&control));
    let (gelu, gse) = mean_lz(&base);
    let (relu, _) = mean_lz(&TransformerConfig { activation: Relu, ..base });
    let mut by_gamma = Vec::new();
    for g in [0.5, 1.0, 2.0, 4.0] {
        by_gamma.push(if g == 1.0 { gelu } else { mean_lz(&TransformerConfig { ln_scaling: g, ..base }).0 });
    }
    let below = cm - gelu > 3.0 * (cse * cse + gse * gse).sqrt();
    let monotone = by_gamma.windows(2).all(|w| w[1] >= w[0]);
    report(
        10,
        "transformer sequence bias",
        below && relu <= gelu && monotone,
        format!(
            "control {cm:.2} ± {cse:.2}, gelu {gelu:.2} ± {gse:.2}, relu {relu:.2}, by gamma {:.2} {:.2} {:.2} {:.2}",
            by_gamma[0], by_gamma[1], by_gamma[2], by_gamma[3]
        ),
    );
}

fn finite_difference(net: &Network, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = net.clone();
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let mut out = Vec::new();
    for (t, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.params()[t][i];
            probe.params_mut()[t][i] = orig + h;
            let plus = probe.forward(x).unwrap();
            probe.params_mut()[t][i] = orig - h;
            let minus = probe.forward(x).unwrap();
            probe.params_mut()[t][i] = orig;
            out.push((plus - minus) / (2.0 * h));
        }
    }
    out
}

fn gradient_error(net: &Network, x: &[f64]) -> f64 {
    let g = net.backward(x, 1.0).unwrap().flat();
    let fd = finite_difference(net, x, 1e-5);
    g.iter().zip(&fd).map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6)).fold(0.0, f64::max)
}

/// Full 2D DFT energy by direct summation.
fn direct_spectral_energy(s: &FunctionSample) -> f64 {
    let m = s.grid.points_per_axis;
    let tw: Vec<(f64, f64)> =
        (0..m).map(|k| 2.0 * std::f64::consts::PI * k as f64 / m as f64).map(|a| (a.cos(), -a.sin())).collect();
    let mut total = 0.0;
    for k1 in 0..m {
        for k2 in 0..m {
            let (mut re, mut im) = (0.0, 0.0);
            for x1 in 0..m {
                for x2 in 0..m {
                    let (c, sn) = tw[(k1 * x1 + k2 * x2) % m];
                    let v = s.values[x1 * m + x2];
                    re += v * c;
                    im += v * sn;
                }
            }
            total += re * re + im * im;
        }
    }
    total / (m * m) as f64
}

fn phrase_set_oracle(symbols: &[u8]) -> usize {
    let mut dict = std::collections::HashSet::new();
    let mut cur = Vec::new();
    for &s in symbols {
        cur.push(s);
        if !dict.contains(&cur) {
            dict.insert(std::mem::take(&mut cur));
        }
    }
    dict.len()
}

#[test]
fn c11_numerical_foundations() {
    let mut notes = Vec::new();

    let mut worst_grad = 0.0f64;
    for act in ActivationKind::ALL {
        for flags in 0..8u8 {
            let spec = ArchSpec::mlp(act, 3, 6)
                .with_residual(flags & 1 != 0)
                .with_layernorm(flags & 2 != 0)
                .with_gating(flags & 4 != 0)
                .with_weight_scale(1.2);
            let net = Network::init(&spec, &InitSpec::seeded(flags as u64 + 11)).unwrap();
            worst_grad = worst_grad.max(gradient_error(&net, &[0.31, -0.47]));
        }
    }
    let unbiased = Network::init(&ArchSpec::unbiased(2, 4), &InitSpec::seeded(3)).unwrap();
    worst_grad = worst_grad.max(gradient_error(&unbiased, &[-0.2, 0.65]));
    let grad_ok = worst_grad < 1e-4;
    notes.push(format!("gradient rel err {worst_grad:.1e}"));

    let mut worst_parseval = 0.0f64;
    for (i, act) in HEATMAP_ACTS.iter().enumerate() {
        let net = Network::init(&ArchSpec::mlp(*act, 2, 16).with_weight_scale(2.0), &InitSpec::seeded(i as u64)).unwrap();
        let s = sample_grid(&net, GridSpec::square(32)).unwrap();
        let energy: f64 = s.values.iter().map(|v| v * v).sum();
        worst_parseval = worst_parseval.max((direct_spectral_energy(&s) - energy).abs() / energy);
        spectrum(&s).unwrap();
    }
    let parseval_ok = worst_parseval < 1e-6;
    notes.push(format!("parseval rel err {worst_parseval:.1e}"));

    let t5 = FunctionSample::from_fn(
        GridSpec::new(1, 64).unwrap(),
        |p| 16.0 * p[0].powi(5) - 20.0 * p[0].powi(3) + 5.0 * p[0],
        "t5",
    )
    .unwrap();
    let order = poly_complexity(&t5, PolyOptions { border: 0, ..PolyOptions::default() }).unwrap().0;
    let t5_ok = (order - 5.0).abs() <= 0.1;
    notes.push(format!("T5 order {order:.4}"));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut lz_mismatch = 0;
    for _ in 0..1000 {
        let len = rng.random_range(0..64);
        let alphabet = rng.random_range(1..5u8);
        let s: Vec<u8> = (0..len).map(|_| rng.random_range(0..alphabet)).collect();
        if lz78_phrases(&s) != phrase_set_oracle(&s) {
            lz_mismatch += 1;
        }
    }
    notes.push(format!("lz78 mismatches {lz_mismatch}/1000"));

    let sweep = SweepSpec {
        depths: vec![1, 4],
        scales: vec![0.5, 3.0],
        seeds: 6,
        measures: vec![Measure::Fourier, Measure::Lz],
        grid: GridSpec::square(24),
        ..SweepSpec::new(ArchSpec::mlp(Tanh, 1, 32))
    };
    let bytes = |jobs: usize| {
        let r = with_jobs(jobs, || run_heatmap_sweep(&sweep).unwrap()).unwrap();
        (r.rows_csv().into_string(), r.cells_csv().into_string())
    };
    let jobs_ok = bytes(1) == bytes(4);
    notes.push(format!("worker-count invariance {jobs_ok}"));

    report(11, "numerical foundations", grad_ok && parseval_ok && t5_ok && lz_mismatch == 0 && jobs_ok, notes.join("; "));
}
