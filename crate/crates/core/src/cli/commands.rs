use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classify::{
    evaluate, export_weight_map, read_classifier_file, train, write_classifier_file, write_history_csv,
    write_weight_map_csv, Classifier, FeatureExtractor, FeatureKind, FeatureSet, Init, NormStats, TrainConfig,
    ADAM_LEARNING_RATE,
};
use crate::dataset::{list_classes, list_images, load_image, save_png, scan_dataset, Sample, DEFAULT_EXTENSIONS};
use crate::error::Error;
use crate::filterbank::{all_builtin, builtin_filter, verify_alias, verify_pr, WaveletFilter, BUILTIN_TOLERANCE};
use crate::packets::{packet_labels, write_packet_csv, write_wpk_file, Ordering, WaveletPacket2d};
use crate::sparse_transform::{
    analysis_matrix_1d, analysis_matrix_2d, synthesis_matrix_1d, synthesis_matrix_2d, BoundaryMode, SparseOperator,
};
use crate::stats::{
    ln_abs_scale, packet_curve, packet_profile, stats_difference, write_curve_csv, write_heatmap_csv, ChannelPolicy,
    CurvePoint, PacketStats,
};
use crate::synthetic::{SyntheticConfig, SyntheticGenerator};

use super::config::{ConfigFile, Resolver};
use super::{
    Cli, CliError, Command, EvaluateArgs, FeatureChoice, LabelsArgs, PacketsArgs, SeedList, SplitChoice, StatsArgs,
    SynthArgs, TrainArgs, TransformArgs, VerifyArgs,
};

type CliResult<T = ()> = Result<T, CliError>;

/// Images per parallel work unit when streaming statistics.
const STATS_SHARD: usize = 64;

pub(super) fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut r = Resolver::new(config);
    match cli.command {
        Command::Verify(a) => verify(a, &mut r, out, err),
        Command::Transform(a) => transform(a, &mut r, out, err),
        Command::Packets(a) => packets(a, &mut r, out, err),
        Command::Stats(a) => stats(a, &mut r, out, err),
        Command::Train(a) => train_cmd(a, &mut r, out, err),
        Command::Evaluate(a) => evaluate_cmd(a, &mut r, out, err),
        Command::Labels(a) => labels(a, &mut r, out, err),
        Command::Synth(a) => synth(a, &mut r, out, err),
    }
}

fn echo(r: &Resolver, command: &str, err: &mut dyn Write) -> CliResult {
    writeln!(err, "{}", r.summary(command))?;
    Ok(())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> CliResult {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn select_filters(name: &str) -> CliResult<Vec<WaveletFilter>> {
    if name.eq_ignore_ascii_case("all") {
        Ok(all_builtin())
    } else {
        Ok(vec![builtin_filter(name)?])
    }
}

fn verify(a: VerifyArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let name = r.get("filter", a.filter, "all".to_string())?;
    let size = r.get("size", a.size, 32usize)?;
    let levels = r.get("levels", a.levels, 3usize)?;
    let mode = r.get("mode", a.mode, BoundaryMode::GramSchmidt)?;
    let tol = r.get("tolerance", a.tolerance, 1e-8)?;
    echo(r, "verify", err)?;
    if levels == 0 {
        return Err(CliError::Usage("--levels must be at least 1".into()));
    }
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut report = |label: String, value: f64, bound: f64, out: &mut dyn Write| -> CliResult {
        checks += 1;
        let ok = value < bound;
        writeln!(out, "{label}: {value:.3e} {}", if ok { "ok" } else { "FAIL" })?;
        if !ok {
            failures.push(label);
        }
        Ok(())
    };
    for f in select_filters(&name)? {
        let pr = verify_pr(&f, BUILTIN_TOLERANCE);
        report(format!("{} perfect-reconstruction residual", f.name), pr.max_residual, BUILTIN_TOLERANCE, out)?;
        report(format!("{} alias residual", f.name), verify_alias(&f, BUILTIN_TOLERANCE), BUILTIN_TOLERANCE, out)?;
        for level in 1..=levels {
            let a1 = analysis_matrix_1d(&f, size, level, mode)?;
            let s1 = synthesis_matrix_1d(&f, size, level, mode)?;
            let dev = s1.matmul(&a1)?.max_deviation_from_identity();
            report(format!("{} 1d n={size} level {level} max|S*A-I|", f.name), dev, tol, out)?;
        }
        for level in 1..=levels {
            let a2 = analysis_matrix_2d(&f, size, size, level, mode)?;
            let s2 = synthesis_matrix_2d(&f, size, size, level, mode)?;
            let dev = s2.matmul(&a2)?.max_deviation_from_identity();
            report(format!("{} 2d {size}x{size} level {level} max|S*A-I|", f.name), dev, tol, out)?;
        }
    }
    writeln!(out, "verify: {checks} checks, {} failed", failures.len())?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failures.join("; ")))
    }
}

fn transform(a: TransformArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let filter = builtin_filter(&r.get("wavelet", a.wavelet, "haar".to_string())?)?;
    let dim = r.get("dim", a.dim, 1usize)?;
    let size = r.get("size", a.size, 16usize)?;
    let levels = r.get("levels", a.levels, 1usize)?;
    let mode = r.get("mode", a.mode, BoundaryMode::GramSchmidt)?;
    let synthesis = r.flag("synthesis", a.synthesis)?;
    let op = match dim {
        1 => {
            if synthesis {
                synthesis_matrix_1d(&filter, size, levels, mode)?
            } else {
                analysis_matrix_1d(&filter, size, levels, mode)?
            }
        }
        2 => {
            let height = r.get("height", a.height, size)?;
            let width = r.get("width", a.width, size)?;
            if synthesis {
                synthesis_matrix_2d(&filter, height, width, levels, mode)?
            } else {
                analysis_matrix_2d(&filter, height, width, levels, mode)?
            }
        }
        d => return Err(CliError::Usage(format!("--dim must be 1 or 2, got {d}"))),
    };
    echo(r, "transform", err)?;
    writeln!(err, "operator {}x{} with {} nonzeros", op.rows(), op.cols(), op.nnz())?;
    match &a.output {
        Some(path) => op.write_csv(create(path)?)?,
        None => op.write_csv(&mut *out)?,
    }
    if let Some(path) = &a.mask {
        write_mask(&op, path)?;
    }
    Ok(())
}

fn write_mask(op: &SparseOperator, path: &Path) -> CliResult {
    let mut w = create(path)?;
    w.write_all(op.sparsity_mask().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn collect_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(list_images(p, DEFAULT_EXTENSIONS)?);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(io_err(p, "no such file or directory"));
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("no input images".into()));
    }
    Ok(files)
}

fn packets(a: PacketsArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let filter = builtin_filter(&r.get("wavelet", a.wavelet, "haar".to_string())?)?;
    let level = r.get("level", a.level, 3usize)?;
    let mode = r.get("mode", a.mode, BoundaryMode::GramSchmidt)?;
    let ordering = r.get("ordering", a.ordering, Ordering::Natural)?;
    let output: PathBuf = r.require("output", a.output.map(|p| p.display().to_string()))?.into();
    let csv = r.flag("csv", a.csv)?;
    echo(r, "packets", err)?;
    let files = collect_inputs(&a.inputs)?;
    create_dir(&output)?;
    let written: Vec<Result<PathBuf, Error>> = files
        .par_iter()
        .map(|path| {
            let img = load_image(path)?;
            let tensor = WaveletPacket2d::new(&filter, img.height, img.width, level, mode)?.analyze(&img, ordering)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let dest = output.join(format!("{stem}.wpk"));
            write_wpk_file(&tensor, &dest)?;
            if csv {
                let w = BufWriter::new(File::create(output.join(format!("{stem}.csv")))?);
                write_packet_csv(&tensor, w)?;
            }
            Ok(dest)
        })
        .collect();
    for (src, dest) in files.iter().zip(written) {
        writeln!(out, "{} -> {}", src.display(), dest?.display())?;
    }
    Ok(())
}

fn stats(a: StatsArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let root: PathBuf = r.require("dataset", a.dataset.map(|p| p.display().to_string()))?.into();
    let output: PathBuf = r.require("output", a.output.map(|p| p.display().to_string()))?.into();
    let filter = builtin_filter(&r.get("wavelet", a.wavelet, "haar".to_string())?)?;
    let level = r.get("level", a.level, 3usize)?;
    let mode = r.get("mode", a.mode, BoundaryMode::GramSchmidt)?;
    let ordering = r.get("ordering", a.ordering, Ordering::Frequency)?;
    let policy = r.get("channel-policy", a.channel_policy, ChannelPolicy::Averaged)?;
    echo(r, "stats", err)?;
    let classes = list_classes(&root, DEFAULT_EXTENSIONS)?;
    create_dir(&output)?;
    let first = load_image(&classes[0].1[0])?;
    let wpt = WaveletPacket2d::new(&filter, first.height, first.width, level, mode)?;
    let mut all = Vec::new();
    for (name, files) in &classes {
        let shards: Vec<Result<PacketStats, Error>> = files
            .par_chunks(STATS_SHARD)
            .map(|chunk| {
                let mut acc: Option<PacketStats> = None;
                for path in chunk {
                    let t = ln_abs_scale(&wpt.analyze(&load_image(path)?, Ordering::Natural)?, policy);
                    acc.get_or_insert_with(|| PacketStats::empty_like(&t)).push(&t)?;
                }
                Ok(acc.expect("non-empty shard"))
            })
            .collect();
        let mut total: Option<PacketStats> = None;
        for s in shards {
            let s = s?;
            match &mut total {
                None => total = Some(s),
                Some(t) => t.merge(&s)?,
            }
        }
        let stats = total.expect("non-empty class");
        if stats.sample_count() < 2 {
            return Err(Error::TooFewSamples(stats.sample_count()).into());
        }
        write_curve_csv(&packet_curve(&stats, ordering)?, create(&output.join(format!("curve_{name}.csv")))?)?;
        write_heatmap_csv(
            &stats.mean_tensor().reordered(ordering),
            create(&output.join(format!("mean_{name}.csv")))?,
        )?;
        write_heatmap_csv(
            &stats.std_tensor()?.reordered(ordering),
            create(&output.join(format!("std_{name}.csv")))?,
        )?;
        writeln!(out, "class {name}: {} images", stats.sample_count())?;
        all.push((name.clone(), stats));
    }
    let (base_name, base) = &all[0];
    for (name, s) in &all[1..] {
        let diff = stats_difference(base, s)?;
        let tag = format!("{base_name}_vs_{name}");
        write_heatmap_csv(
            &diff.mean_abs_diff.reordered(ordering),
            create(&output.join(format!("diff_mean_{tag}.csv")))?,
        )?;
        write_heatmap_csv(
            &diff.std_abs_diff.reordered(ordering),
            create(&output.join(format!("diff_std_{tag}.csv")))?,
        )?;
        let labels = packet_labels(level, ordering)?;
        let curve: Vec<CurvePoint> = labels
            .into_iter()
            .zip(packet_profile(&diff.mean_abs_diff, ordering))
            .zip(packet_profile(&diff.std_abs_diff, ordering))
            .enumerate()
            .map(|(index, ((label, mean), std))| CurvePoint { index, label, mean, std })
            .collect();
        write_curve_csv(&curve, create(&output.join(format!("curve_diff_{tag}.csv")))?)?;
    }
    Ok(())
}

/// Features for every manifest file, computed once across seeds.
struct FeatureCache {
    extractor: FeatureExtractor,
    rows: HashMap<PathBuf, Vec<f64>>,
}

impl FeatureCache {
    fn features(&mut self, samples: &[Sample], classes: usize) -> CliResult<FeatureSet> {
        let missing: Vec<&PathBuf> = samples
            .iter()
            .map(|s| &s.path)
            .filter(|p| !self.rows.contains_key(*p))
            .collect();
        let extractor = &self.extractor;
        let computed: Vec<Result<Vec<f64>, Error>> = missing
            .par_iter()
            .map(|p| extractor.extract(&load_image(p)?))
            .collect();
        for (p, row) in missing.into_iter().zip(computed) {
            self.rows.insert(p.clone(), row?);
        }
        let mut data = Vec::with_capacity(samples.len() * extractor.layout().dim());
        for s in samples {
            data.extend_from_slice(&self.rows[&s.path]);
        }
        Ok(FeatureSet::new(
            extractor.layout().dim(),
            classes,
            data,
            samples.iter().map(|s| s.label).collect(),
        )?)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn train_cmd(a: TrainArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let root: PathBuf = r.require("dataset", a.dataset.map(|p| p.display().to_string()))?.into();
    let output: Option<PathBuf> = r
        .get("output", a.output.map(|p| p.display().to_string()), String::new())
        .map(|s| (!s.is_empty()).then(|| PathBuf::from(s)))?;
    let choice = r.get("features", a.features, FeatureChoice::Packet)?;
    let kind = match choice {
        FeatureChoice::Pixel => FeatureKind::Pixels,
        FeatureChoice::Packet => FeatureKind::Packets {
            wavelet: builtin_filter(&r.get("wavelet", a.wavelet, "haar".to_string())?)?.name,
            level: r.get("level", a.level, 3usize)?,
            mode: r.get("mode", a.mode, BoundaryMode::GramSchmidt)?,
        },
    };
    let seeds = r.get("seed", a.seed, SeedList(vec![0]))?;
    let base = TrainConfig {
        epochs: r.get("epochs", a.epochs, 10usize)?,
        batch_size: r.get("batch-size", a.batch_size, 512usize)?,
        learning_rate: r.get("learning-rate", a.learning_rate, ADAM_LEARNING_RATE)?,
        seed: 0,
        init: if r.flag("symmetric-init", a.symmetric_init)? {
            Init::Symmetric
        } else {
            Init::Uniform
        },
    };
    echo(r, "train", err)?;
    if seeds.0.is_empty() {
        return Err(CliError::Usage("no seeds".into()));
    }
    if let Some(dir) = &output {
        create_dir(dir)?;
    }
    let mut cache: Option<FeatureCache> = None;
    let mut accuracies = Vec::new();
    for &seed in &seeds.0 {
        let manifest = scan_dataset(&root, DEFAULT_EXTENSIONS, seed)?;
        let (c, h, w) = manifest.image_shape;
        let cache = match &mut cache {
            Some(cache) => cache,
            None => cache.insert(FeatureCache {
                extractor: FeatureExtractor::new(&kind, c, h, w)?,
                rows: HashMap::new(),
            }),
        };
        let layout = cache.extractor.layout();
        let classes = manifest.classes.len();
        let mut train_set = cache.features(&manifest.train, classes)?;
        let mut val_set = cache.features(&manifest.val, classes)?;
        let mut test_set = cache.features(&manifest.test, classes)?;
        let norm = NormStats::fit(&train_set, &layout)?;
        for set in [&mut train_set, &mut val_set, &mut test_set] {
            norm.apply(set, &layout)?;
        }
        let outcome = train(&train_set, &val_set, &TrainConfig { seed, ..base.clone() })?;
        let test = evaluate(&outcome.model, &test_set)?;
        writeln!(
            out,
            "seed {seed}: test accuracy {:.2} % (best epoch {}, val {:.2} %)",
            100.0 * test.accuracy,
            outcome.best_epoch,
            100.0 * outcome.best_val_accuracy
        )?;
        accuracies.push(100.0 * test.accuracy);
        if let Some(dir) = &output {
            let bundle = Classifier {
                kind: kind.clone(),
                layout,
                norm,
                model: outcome.model.clone(),
                class_names: manifest.classes.clone(),
            };
            write_classifier_file(&bundle, &dir.join(format!("model_seed{seed}.wlm")))?;
            write_history_csv(&outcome.history, create(&dir.join(format!("history_seed{seed}.csv")))?)?;
            manifest.write_csv(create(&dir.join(format!("manifest_seed{seed}.csv")))?)?;
            if matches!(kind, FeatureKind::Packets { .. }) {
                let maps = export_weight_map(&outcome.model, &layout, Ordering::Frequency)?;
                write_weight_map_csv(&maps, create(&dir.join(format!("weights_seed{seed}.csv")))?)?;
            }
        }
    }
    let (mean, std) = mean_std(&accuracies);
    writeln!(out, "{kind}: {mean:.2} ± {std:.2} %")?;
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let model_path: PathBuf = r.require("model", a.model.map(|p| p.display().to_string()))?.into();
    let root: PathBuf = r.require("dataset", a.dataset.map(|p| p.display().to_string()))?.into();
    let split = r.get("split", a.split, SplitChoice::One(crate::dataset::Split::Test))?;
    let seed = r.get("seed", a.seed, 0u64)?;
    echo(r, "evaluate", err)?;
    let bundle = read_classifier_file(&model_path)?;
    let manifest = scan_dataset(&root, DEFAULT_EXTENSIONS, seed)?;
    if manifest.classes != bundle.class_names {
        return Err(CliError::Usage(format!(
            "dataset classes {:?} differ from model classes {:?}",
            manifest.classes, bundle.class_names
        )));
    }
    let samples: Vec<Sample> = match split {
        SplitChoice::One(s) => manifest.split(s).to_vec(),
        SplitChoice::All => crate::dataset::Split::ALL
            .iter()
            .flat_map(|&s| manifest.split(s).iter().cloned())
            .collect(),
    };
    let (c, h, w) = manifest.image_shape;
    let extractor = FeatureExtractor::new(&bundle.kind, c, h, w)?;
    if extractor.layout() != bundle.layout {
        return Err(CliError::Usage("dataset images do not match the model's feature layout".into()));
    }
    let mut cache = FeatureCache {
        extractor,
        rows: HashMap::new(),
    };
    let mut set = cache.features(&samples, manifest.classes.len())?;
    bundle.norm.apply(&mut set, &bundle.layout)?;
    let e = evaluate(&bundle.model, &set)?;
    let correct: usize = (0..e.confusion.len()).map(|k| e.confusion[k][k]).sum();
    writeln!(out, "accuracy {:.2} % ({correct}/{})", 100.0 * e.accuracy, set.len())?;
    writeln!(out, "confusion (rows true, columns predicted): {}", bundle.class_names.join(" "))?;
    for (name, row) in bundle.class_names.iter().zip(&e.confusion) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(out, "{name}: {}", cells.join(" "))?;
    }
    if let Some(path) = &a.output {
        let mut w = create(path)?;
        writeln!(w, "true,predicted,count")?;
        for (t, row) in e.confusion.iter().enumerate() {
            for (p, n) in row.iter().enumerate() {
                writeln!(w, "{},{},{n}", bundle.class_names[t], bundle.class_names[p])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn labels(a: LabelsArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let level = r.get("level", a.level, 3usize)?;
    let grid = r.flag("grid", a.grid)?;
    let ordering = r.get(
        "ordering",
        a.ordering,
        if grid { Ordering::Frequency } else { Ordering::Natural },
    )?;
    echo(r, "labels", err)?;
    let labels = packet_labels(level, ordering)?;
    if grid {
        let side = 1 << level;
        for row in labels.chunks(side) {
            writeln!(out, "{}", row.join(" "))?;
        }
    } else {
        for l in labels {
            writeln!(out, "{l}")?;
        }
    }
    Ok(())
}

fn synth(a: SynthArgs, r: &mut Resolver, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let output: PathBuf = r.require("output", a.output.map(|p| p.display().to_string()))?.into();
    let defaults = SyntheticConfig::default();
    let per_class = r.get("per-class", a.per_class, 150usize)?;
    let config = SyntheticConfig {
        size: r.get("size", a.size, defaults.size)?,
        noise_std: r.get("noise", a.noise, defaults.noise_std)?,
        ..defaults
    };
    let seed = r.get("seed", a.seed, 0u64)?;
    echo(r, "synth", err)?;
    if config.size < 2 || per_class == 0 {
        return Err(CliError::Usage("--size must be at least 2 and --per-class positive".into()));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut generator = SyntheticGenerator::new(config);
    for (label, name) in ["0_smooth", "1_noisy"].into_iter().enumerate() {
        let dir = output.join(name);
        create_dir(&dir)?;
        for i in 0..per_class {
            save_png(&generator.sample(&mut rng, label == 1), &dir.join(format!("{i:04}.png")))?;
        }
        writeln!(out, "{}: {per_class} images", dir.display())?;
    }
    Ok(())
}
