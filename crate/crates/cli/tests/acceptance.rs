//! Every acceptance criterion at its stated tolerance and runtime budget,
//! run sequentially so the timings are not skewed by sharing the CPU.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use guigan_core::compose::render_sequence;
use guigan_core::corpus::{segment_subtrees, Bounds, ComponentNode, GuiScreen, SegmentParams, SubtreeRepository};
use guigan_core::eval::{evaluate, fid, one_nna, EvalSet, Source, FID_RIDGE};
use guigan_core::gan::{self, FusionMode, GanConfig, Policy, TrainOutput};
use guigan_core::losses::{homogeneity, med, sequence_homogeneity, structure_loss, style_loss};
use guigan_core::style::{train_siamese, SiameseConfig};
use guigan_core::synth::{generate_corpus, SynthSpec};
use guigan_core::{EmbeddingTable, TokenSequence};
use guigan_ndnet::gradsuite;
use image::RgbImage;
use rand::Rng;

type Outcome = (bool, String);

fn check(ok: bool, what: impl Into<String>, failures: &mut Vec<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn outcome(failures: Vec<String>, detail: String) -> Outcome {
    if failures.is_empty() {
        (true, detail)
    } else {
        (false, format!("{detail}; failed: {}", failures.join("; ")))
    }
}

fn fixture_screen(w: i64, h: i64, children: Vec<ComponentNode>) -> GuiScreen {
    GuiScreen {
        app_id: "fixture".into(),
        screen_id: "0".into(),
        width: w as u32,
        height: h as u32,
        root: ComponentNode::with_children("Root", Bounds::new(0, 0, w, h), children),
        screenshot: RgbImage::new(w as u32, h as u32),
        scale: (1.0, 1.0),
    }
}

fn c1_segmentation() -> Outcome {
    let mut failures = Vec::new();
    let screens = generate_corpus(&SynthSpec::new(1, 2, 10)).unwrap();
    let p = SegmentParams::default();
    for s in &screens {
        let got: Vec<Bounds> = segment_subtrees(&s.screen, &p).unwrap().iter().map(|g| g.bounds).collect();
        let want: Vec<Bounds> = s.blocks.iter().map(|b| b.1).collect();
        check(got == want, format!("screen {}", s.screen.key()), &mut failures);
    }
    let leaf = |x1, y1, x2, y2| ComponentNode::leaf("V", Bounds::new(x1, y1, x2, y2));
    let wide = ComponentNode::with_children(
        "Wrap",
        Bounds::new(0, 0, 950, 400),
        vec![leaf(0, 0, 400, 200), leaf(500, 0, 900, 200)],
    );
    let got: Vec<Bounds> =
        segment_subtrees(&fixture_screen(1000, 2000, vec![wide]), &p).unwrap().iter().map(|g| g.bounds).collect();
    check(got == [Bounds::new(0, 0, 400, 200), Bounds::new(500, 0, 900, 200)], "90%-width recursion fixture", &mut failures);
    let dup = fixture_screen(1000, 2000, vec![leaf(10, 10, 200, 100), leaf(10, 10, 200, 100)]);
    let got: Vec<Bounds> = segment_subtrees(&dup, &p).unwrap().iter().map(|g| g.bounds).collect();
    check(got == [Bounds::new(10, 10, 200, 100)], "duplicate-bounds fixture", &mut failures);
    outcome(failures, format!("{} synthetic screens + 2 fixtures", screens.len()))
}

fn c2_edit_distance() -> Outcome {
    let mut r = rng(2);
    let word = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<u8> {
        let n = r.gen_range(0..=12);
        (0..n).map(|_| r.gen_range(b'a'..=b'd')).collect()
    };
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = (0..1000).map(|_| (word(&mut r), word(&mut r))).collect();
    let mut mismatches = 0;
    let mut axiom_violations = 0;
    for (i, (a, b)) in pairs.iter().enumerate() {
        let d = med(a, b);
        if d != levenshtein_oracle(a, b) {
            mismatches += 1;
        }
        let c = &pairs[(i + 1) % pairs.len()].0;
        let ok = med(a, a) == 0
            && (d == 0) == (a == b)
            && d == med(b, a)
            && med(a, c) <= d + med(b, c);
        if !ok {
            axiom_violations += 1;
        }
    }
    let ok = mismatches == 0 && axiom_violations == 0;
    (ok, format!("1000 pairs: {mismatches} mismatches, {axiom_violations} axiom violations"))
}

fn c3_homogeneity() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.gen_range(1..=8);
        let classes: Vec<usize> = (0..n).map(|_| r.gen_range(0..3)).collect();
        let clusters: Vec<usize> = (0..n).map(|_| r.gen_range(0..3)).collect();
        let h = homogeneity(&classes, &clusters).unwrap();
        worst = worst.max((h - homogeneity_oracle(&classes, &clusters)).abs());
    }
    let (repo, _) = synthetic(3, 2, 4);
    let emb = color_embeddings(&repo);
    let (mut single, mut multi, mut bad) = (0, 0, 0);
    for _ in 0..500 {
        let len = r.gen_range(1..=8);
        let tokens: Vec<usize> = (0..len).map(|_| r.gen_range(0..repo.len())).collect();
        let apps: std::collections::BTreeSet<&str> = tokens.iter().map(|&t| repo.app_of(t).unwrap()).collect();
        let l = style_loss(&tokens, &repo, &emb).unwrap();
        if apps.len() == 1 {
            single += 1;
            bad += usize::from(l != 0.0);
        } else {
            multi += 1;
            bad += usize::from(!((-1.0f64).exp() - 1e-12..=1.0).contains(&l));
        }
    }
    let ok = worst <= 1e-9 && bad == 0 && single > 0 && multi > 0;
    (ok, format!("max |Δh| {worst:.1e} over 200 labelings; {single} single-app, {multi} multi-app sequences, {bad} out of range"))
}

fn c4_gradients() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut run = |name: &str, f: &dyn Fn(u64) -> guigan_ndnet::gradcheck::GradCheckReport| {
        let (mut skipped, mut checked) = (0, 0);
        for seed in 0..20 {
            let rep = f(seed);
            worst = worst.max(rep.max_rel_err);
            if !rep.passes(1e-3) {
                failures.push(format!("{name} seed {seed}: {:.2e}", rep.max_rel_err));
            }
            skipped += rep.skipped_kinks;
            checked += rep.checked;
        }
        if skipped * 20 >= checked {
            failures.push(format!("{name}: {skipped} kinks of {checked}"));
        }
    };
    for (name, f) in gradsuite::all() {
        run(name, &f);
    }
    run("siamese pair path", &siamese_gradcheck);
    run("discriminator path", &discriminator_gradcheck);
    let fuse_worst = (0..20).map(fuse_gradcheck).fold(0.0, f64::max);
    if fuse_worst >= 1e-3 {
        failures.push(format!("fuse s-gradients: {fuse_worst:.2e}"));
    }
    let detail = format!("{} ndnet layers + siamese + discriminator + fuse, 20 seeds each, worst rel err {:.1e}", gradsuite::all().len(), worst.max(fuse_worst));
    outcome(failures, detail)
}

fn c5_siamese() -> Outcome {
    let (repo, _) = synthetic(0, 2, 8);
    let cfg = SiameseConfig::desk();
    let accs: Vec<f64> = (0..3)
        .map(|seed| train_siamese(&cfg, &repo, &mut rng(seed)).unwrap().log.last().unwrap().heldout_accuracy)
        .collect();
    let ok = cfg.epochs <= 10 && accs.iter().all(|&a| a >= 0.90);
    (ok, format!("held-out accuracy after {} epochs: {accs:.3?}", cfg.epochs))
}

fn c6_fid() -> Outcome {
    let mut failures = Vec::new();
    let mut r = rng(6);
    let a = gaussian_rows(&mut r, 30, 4, 0.0, 1.0);
    let fa = features(&a, Source::Real);
    let same = fid(&fa, &features(&a, Source::Generated)).unwrap();
    check(same < 1e-8, format!("identical sets {same:.1e}"), &mut failures);
    let shift = fid(&features(&[vec![-1.0], vec![1.0]], Source::Real), &features(&[vec![0.0], vec![2.0]], Source::Generated)).unwrap();
    check((shift - 1.0).abs() <= 1e-6, format!("mean shift {shift}"), &mut failures);
    let mut diag_err = 0.0f64;
    for _ in 0..20 {
        let d = r.gen_range(1..6);
        let va: Vec<f64> = (0..d).map(|_| r.gen_range(0.1..4.0)).collect();
        let vb: Vec<f64> = (0..d).map(|_| r.gen_range(0.1..4.0)).collect();
        let mu: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let got = fid(&features(&diagonal_design(&va, &mu), Source::Real), &features(&diagonal_design(&vb, &mu), Source::Generated)).unwrap();
        diag_err = diag_err.max((got - diagonal_fid_oracle(&va, &vb, FID_RIDGE)).abs());
    }
    check(diag_err <= 1e-6, format!("diagonal closed form {diag_err:.1e}"), &mut failures);
    let mut sym = 0.0f64;
    for _ in 0..20 {
        let b = gaussian_rows(&mut r, 25, 4, 0.7, 1.3);
        let fb = features(&b, Source::Generated);
        sym = sym.max((fid(&fa, &fb).unwrap() - fid(&fb, &fa).unwrap()).abs());
    }
    check(sym <= 1e-8, format!("symmetry {sym:.1e}"), &mut failures);
    outcome(failures, format!("identical {same:.1e}, shift {shift:.9}, diagonal err {diag_err:.1e}, asymmetry {sym:.1e}"))
}

fn c7_one_nna() -> Outcome {
    let mean = (0..10).map(|s| same_distribution_nna(s, 200, 2)).sum::<f64>() / 10.0;
    let mut r = rng(7);
    let a = gaussian_rows(&mut r, 50, 3, 0.0, 1.0);
    let dup = one_nna(&features(&a, Source::Real), &features(&a, Source::Generated)).unwrap();
    let far = gaussian_rows(&mut r, 50, 3, 100.0, 1.0);
    let sep = one_nna(&features(&a, Source::Real), &features(&far, Source::Generated)).unwrap();
    let ok = (mean - 0.5).abs() <= 0.07 && dup == 0.0 && sep == 1.0;
    (ok, format!("same-distribution mean {mean:.3}, duplicates {dup}, separated {sep}"))
}

fn c8_policy_gradient() -> Outcome {
    let traj = bandit_trajectory(0, 50);
    let s = smooth(&traj, 5);
    let monotone = s.windows(2).all(|w| w[1] >= w[0] - 1e-4);
    let rose = traj[50] > traj[0];
    let pg = (0..5).map(pg_vs_mle).fold(0.0, f64::max);
    let ok = monotone && rose && pg < 1e-5;
    (ok, format!("π(B|A) {:.3} → {:.3}, smoothed monotone {monotone}; |PG − MLE| {pg:.1e}", traj[0], traj[50]))
}

struct ModeStats {
    style: f64,
    homogeneity: f64,
    structure: f64,
}

fn sample(out: &TrainOutput, params: &guigan_ndnet::ParamSet, policy: Policy, seed: u64) -> Vec<TokenSequence> {
    gan::generate(&out.generator, params, &out.context, 512, policy, &mut rng(seed)).unwrap()
}

fn mode_stats(seqs: &[TokenSequence], repo: &SubtreeRepository, emb: &EmbeddingTable, real: &[Vec<u32>]) -> ModeStats {
    let n = seqs.len() as f64;
    let mut m = ModeStats { style: 0.0, homogeneity: 0.0, structure: 0.0 };
    for s in seqs {
        m.style += style_loss(&s.tokens, repo, emb).unwrap() / n;
        m.homogeneity += sequence_homogeneity(&s.tokens, repo, emb).unwrap().unwrap_or(1.0) / n;
        m.structure += structure_loss(&repo.sequence_structure(&s.tokens), real).unwrap() / n;
    }
    m
}

fn render_set(repo: &SubtreeRepository, seqs: Vec<Vec<usize>>) -> EvalSet {
    let (w, h) = repo.canonical_screen_size();
    let images = seqs.iter().map(|s| render_sequence(s, repo, w, h, false).unwrap()).collect();
    EvalSet { images, sequences: seqs }
}

fn c9_training_effect() -> Outcome {
    let seeds = 5u64;
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    let mut add = |k: &'static str, v: f64| *sums.entry(k).or_default() += v / seeds as f64;
    for seed in 0..seeds {
        let (repo, real) = synthetic(seed, 2, 32);
        let st = train_siamese(&SiameseConfig::desk(), &repo, &mut rng(seed)).unwrap();
        let emb = st.model.embed_repository(&st.params, &repo).unwrap();
        let real_structs: Vec<_> = real.iter().map(|s| repo.sequence_structure(&s.tokens)).collect();
        let real_set = render_set(&repo, real.iter().map(|s| s.tokens.clone()).collect());
        let run = |mode| gan::train(&GanConfig { mode, ..GanConfig::default() }, &repo, &emb, &mut rng(seed + 100), None).unwrap();
        let (full, style_only, structure_only) = (run(FusionMode::Full), run(FusionMode::StyleOnly), run(FusionMode::StructureOnly));
        let stats = |out: &TrainOutput, ps| mode_stats(&sample(out, ps, Policy::Sample, seed + 7), &repo, &emb, &real_structs);
        add("style_full", stats(&full, &full.gen_params).style);
        add("style_pre", stats(&full, &full.pretrained_params).style);
        let so = stats(&style_only, &style_only.gen_params);
        let sto = stats(&structure_only, &structure_only.gen_params);
        add("h_style_only", so.homogeneity);
        add("h_structure_only", sto.homogeneity);
        add("lc_style_only", so.structure);
        add("lc_structure_only", sto.structure);
        for (key_fid, key_nna, policy) in [("fid_full", "nna_full", Policy::Sample), ("fid_random", "nna_random", Policy::Uniform)] {
            let gen = render_set(&repo, sample(&full, &full.gen_params, policy, seed + 7).into_iter().map(|s| s.tokens).collect());
            let rep = evaluate(&real_set, &gen, &st.model, &st.params, &repo, seed, String::new()).unwrap();
            add(key_fid, rep.fid);
            add(key_nna, rep.one_nna);
        }
    }
    let s = |k: &str| sums[k];
    let reduction = 1.0 - s("style_full") / s("style_pre");
    let parts = [
        ("a", reduction >= 0.20, format!("style loss full {:.4} vs pretrain {:.4} (−{:.0}%)", s("style_full"), s("style_pre"), 100.0 * reduction)),
        ("b", s("h_style_only") >= s("h_structure_only"), format!("homogeneity {:.3} ≥ {:.3}", s("h_style_only"), s("h_structure_only"))),
        ("c", s("lc_structure_only") <= s("lc_style_only"), format!("structure loss {:.4} ≤ {:.4}", s("lc_structure_only"), s("lc_style_only"))),
        ("d", s("fid_full") < s("fid_random"), format!("FID {:.1} < {:.1}", s("fid_full"), s("fid_random"))),
        ("e", s("nna_full") < s("nna_random"), format!("1-NNA {:.3} < {:.3}", s("nna_full"), s("nna_random"))),
    ];
    let ok = parts.iter().all(|p| p.1);
    let detail = parts
        .iter()
        .map(|(k, pass, d)| format!("({k}) {} {d}", if *pass { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn guigan(cwd: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_guigan")).current_dir(cwd).args(args).output().unwrap();
    assert!(out.status.success(), "guigan {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn pipeline(cwd: &Path) {
    guigan(cwd, &["corpus", "synth", "--seed", "4", "--apps", "2", "--screens", "4", "--output", "synth"]);
    guigan(cwd, &["corpus", "build", "--input", "synth", "--output", "repo"]);
    guigan(cwd, &["style", "train", "--seed", "4", "--repo", "repo", "--epochs", "2", "--output", "style/siamese.json"]);
    guigan(cwd, &["style", "embed", "--repo", "repo", "--ckpt", "style/siamese.json", "--output", "style/embeddings.json"]);
    guigan(cwd, &[
        "gan", "train", "--seed", "4", "--repo", "repo", "--embeddings", "style/embeddings.json", "--mode", "full",
        "--rounds", "2", "--pretrain-epochs", "2", "--output", "run",
    ]);
    guigan(cwd, &["generate", "--seed", "4", "--run", "run", "--count", "6", "--render", "--separators", "--output", "gen"]);
    guigan(cwd, &["evaluate", "--seed", "4", "--real", "repo", "--generated", "gen", "--ckpt", "style/siamese.json", "--output", "report.json"]);
}

/// Relative path → bytes for every file under `root`.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn c10_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    // source.json records the absolute repository path, which differs by design.
    let strip = |mut t: BTreeMap<String, Vec<u8>>| {
        t.remove("run/source.json");
        t
    };
    let (ta, tb) = (strip(tree(a.path())), strip(tree(b.path())));
    let differing: Vec<&String> = ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect();
    let kinds = ["repo/repo.json", "style/siamese.bin", "run/log.jsonl", "gen/gen_0.png", "report.json"];
    let present = kinds.iter().all(|k| ta.contains_key(*k));
    let ok = ta.len() == tb.len() && differing.is_empty() && present;
    (ok, format!("{} files compared across two full CLI runs, {} differ", ta.len(), differing.len()))
}

#[test]
fn acceptance_criteria() {
    // Criterion 10 states no runtime budget.
    let criteria: [(u32, &str, Option<Duration>, fn() -> Outcome); 10] = [
        (1, "segmentation oracle", Some(Duration::from_secs(5)), c1_segmentation),
        (2, "edit-distance oracle", Some(Duration::from_secs(10)), c2_edit_distance),
        (3, "homogeneity and style loss", Some(Duration::from_secs(5)), c3_homogeneity),
        (4, "gradient suite", Some(Duration::from_secs(120)), c4_gradients),
        (5, "siamese learnability", Some(Duration::from_secs(300)), c5_siamese),
        (6, "FID correctness", Some(Duration::from_secs(5)), c6_fid),
        (7, "1-NNA calibration", Some(Duration::from_secs(30)), c7_one_nna),
        (8, "policy-gradient sanity", Some(Duration::from_secs(60)), c8_policy_gradient),
        (9, "end-to-end training effect", Some(Duration::from_secs(900)), c9_training_effect),
        (10, "CLI determinism", None, c10_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let t0 = Instant::now();
        let (ok, detail) = run();
        let took = t0.elapsed();
        let in_budget = budget.is_none_or(|b| took <= b);
        let pass = ok && in_budget;
        println!(
            "criterion {id:>2} {name}: {} [{:.1}s / {}] {detail}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.map_or("no budget".to_string(), |b| format!("{}s", b.as_secs()))
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
