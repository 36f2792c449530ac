//! The eight subcommands as plain functions; the binary is a thin argument
//! parser over these, and the test suites drive them directly.

use crate::config::RunConfig;
use crate::data::{self, Dataset, DatasetKind};
use crate::CliError;
use std::path::Path;
use steernet::channelprune::{fill_zero, prune, zero_least_salient, FillZeroCfg};
use steernet::engine::{evaluate, train, TaskKind, TrainCfg};
use steernet::explainsteer::{
    e0_csv, e1_csv, explain_network_with_threads, global_spectrum, heatmap_svg, saliency,
    spectra_csv, SaliencyCfg, SaliencyScores,
};
use steernet::filterbank::{
    dct2_filters, ghaar_filters, ones_filters, psine_filters, unchanged_random, Basis, FilterSpec,
    GhaarStyle, Method,
};
use steernet::netgraph::{
    build_tiny_densenet, build_tiny_resnet, build_unetd, deserialize, serialize, InitOptions,
    NetworkGraph,
};
use steernet::numerics::{RngStream, Tensor};

/// Worker threads for per-layer spectra, from STEERNET_THREADS (default 1).
/// Results are identical for any value; this only affects wall time.
pub fn worker_threads() -> usize {
    std::env::var("STEERNET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn save_net(net: &NetworkGraph, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let (text, blob) = serialize(net);
    std::fs::write(dir.join("net.nfg"), text)?;
    std::fs::write(dir.join("net.nfw"), blob)?;
    Ok(())
}

/// Load a network from a directory holding `net.nfg`/`net.nfw` or from an
/// explicit `.nfg` path with its sibling `.nfw`.
pub fn load_net(path: &Path) -> Result<NetworkGraph, CliError> {
    let (nfg, nfw) = if path.is_dir() {
        (path.join("net.nfg"), path.join("net.nfw"))
    } else {
        (path.to_path_buf(), path.with_extension("nfw"))
    };
    let text = std::fs::read_to_string(&nfg)
        .map_err(|e| CliError::Io(format!("{}: {e}", nfg.display())))?;
    let blob = std::fs::read(&nfw).map_err(|e| CliError::Io(format!("{}: {e}", nfw.display())))?;
    Ok(deserialize(&text, &blob)?)
}

fn write_metrics_csv(path: &Path, rows: &[steernet::engine::EpochMetrics]) -> Result<(), CliError> {
    let mut out = String::from("epoch,loss,metric,seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            r.epoch, r.loss, r.metric, r.seconds
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn kernels_svg(bank: &Tensor) -> String {
    let (n, h, w) = (bank.shape()[0], bank.shape()[1], bank.shape()[2]);
    let cell = 10usize;
    let pad = 6usize;
    let per_row = 8usize.min(n.max(1));
    let rows = n.div_ceil(per_row.max(1));
    let width = per_row * (w * cell + pad) + pad;
    let height = rows * (h * cell + pad) + pad;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\">\n"
    );
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for k in 0..n {
        let kernel = &bank.data()[k * h * w..(k + 1) * h * w];
        let lo = kernel.iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = kernel.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let x0 = pad + (k % per_row) * (w * cell + pad);
        let y0 = pad + (k / per_row) * (h * cell + pad);
        for y in 0..h {
            for x in 0..w {
                let v = kernel[y * w + x];
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let g = (t * 255.0).round() as u8;
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"#{g:02x}{g:02x}{g:02x}\"/>\n",
                    x0 + x * cell,
                    y0 + y * cell
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn cmd_gen_filters(
    method_name: &str,
    shape: (usize, usize),
    count: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let method = Method::parse(method_name)
        .ok_or_else(|| CliError::Config(format!("unknown method '{method_name}'")))?;
    if method.requires_guide() {
        return Err(CliError::Config(format!(
            "method '{method_name}' needs a guide network; use `init --guide`"
        )));
    }
    let spec = FilterSpec {
        method,
        kernel: shape,
        count,
        seed,
    };
    let mut rng = RngStream::new(seed);
    let bank = match method {
        Method::Ones => ones_filters(&spec),
        Method::Dct2 => {
            let basis = Basis::dct2(shape.0, shape.1);
            dct2_filters(&spec, &basis, &mut rng)?
        }
        Method::GHaar => ghaar_filters(&spec, GhaarStyle::default(), &mut rng)?,
        Method::Psine => psine_filters(&spec, &mut rng)?,
        Method::UnchangedRandom => unchanged_random(&spec, shape.0 * shape.1, &mut rng),
        _ => unreachable!(),
    };
    std::fs::create_dir_all(out)?;
    let blob: Vec<u8> = bank.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(out.join("filters.nfw"), &blob)?;
    std::fs::write(out.join("filters.svg"), kernels_svg(&bank))?;
    let mut cfg = RunConfig::default();
    cfg.set("command", "gen-filters");
    cfg.set("method", method.name());
    cfg.set("shape", format!("{}x{}", shape.0, shape.1));
    cfg.set("count", count);
    cfg.set("seed", seed);
    cfg.set("blob_fnv1a64", format!("{:016x}", fnv1a64(&blob)));
    cfg.write_into(out)?;
    Ok(())
}

pub fn cmd_gen_data(
    kind_name: &str,
    count: usize,
    size: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let kind = DatasetKind::parse(kind_name)
        .ok_or_else(|| CliError::Config(format!("unknown dataset kind '{kind_name}'")))?;
    if size < 16 || size % 16 != 0 {
        return Err(CliError::Config(format!(
            "size {size} must be a positive multiple of 16"
        )));
    }
    let ds = data::generate(kind, count, size, seed);
    std::fs::create_dir_all(out)?;
    data::save(&ds, &out.join("data.nfds"))?;
    let mut cfg = RunConfig::default();
    cfg.set("command", "gen-data");
    cfg.set("kind", kind.name());
    cfg.set("count", count);
    cfg.set("size", size);
    cfg.set("seed", seed);
    cfg.write_into(out)?;
    Ok(())
}

pub struct ArchSpec {
    pub arch: String,
    pub widths: [usize; 5],
    pub expansion: usize,
    pub stages: usize,
    pub width: usize,
    pub blocks: usize,
    pub growth: usize,
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            arch: "unetd".into(),
            widths: [3, 8, 16, 32, 64],
            expansion: 6,
            stages: 2,
            width: 8,
            blocks: 2,
            growth: 4,
        }
    }
}

pub fn build_arch(spec: &ArchSpec, seed: u64) -> Result<NetworkGraph, CliError> {
    Ok(match spec.arch.as_str() {
        "unetd" => build_unetd(spec.widths, spec.expansion, seed),
        "tinyresnet" => build_tiny_resnet(spec.stages, spec.width, seed),
        "tinydensenet" => build_tiny_densenet(spec.blocks, spec.growth, seed),
        other => return Err(CliError::Config(format!("unknown arch '{other}'"))),
    })
}

pub fn cmd_init(
    arch: &ArchSpec,
    method_name: &str,
    seed: u64,
    guide: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let method = Method::parse(method_name)
        .ok_or_else(|| CliError::Config(format!("unknown method '{method_name}'")))?;
    let net = build_arch(arch, seed)?;
    let guide_net = match guide {
        Some(p) => Some(load_net(p)?),
        None => None,
    };
    let done = net.apply_initializer(method, seed, guide_net.as_ref(), &InitOptions::default())?;
    done.validate()?;
    save_net(&done, out)?;
    let mut cfg = RunConfig::default();
    cfg.set("command", "init");
    cfg.set("arch", &arch.arch);
    cfg.set("method", method.name());
    cfg.set("seed", seed);
    cfg.set("params_total", done.count_params());
    cfg.set("params_spatial", done.count_spatial_params());
    cfg.write_into(out)?;
    Ok(())
}

fn train_cfg_for(ds: &Dataset, lr: f32, epochs: usize, seed: u64) -> TrainCfg {
    match ds.kind.task() {
        TaskKind::Segmentation => TrainCfg::segmentation(lr, epochs, seed),
        TaskKind::MultiLabel => TrainCfg::multilabel(lr, epochs, seed, ds.class_counts()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    net_path: &Path,
    data_path: &Path,
    lr: f32,
    lr_mult: f32,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let net = load_net(net_path)?;
    let ds = data::load(data_path)?;
    if ds.is_empty() {
        return Err(CliError::Config("dataset is empty".into()));
    }
    let cfg = train_cfg_for(&ds, lr * lr_mult, epochs, seed);
    let batches = ds.batches(batch_size);
    let (trained, metrics) = train(&net, &batches, &cfg)?;
    save_net(&trained, out)?;
    write_metrics_csv(&out.join("metrics.csv"), &metrics)?;
    let mut rc = RunConfig::default();
    rc.set("command", "train");
    rc.set("net", net_path.display());
    rc.set("data", data_path.display());
    rc.set("lr", lr);
    rc.set("lr_mult", lr_mult);
    rc.set("epochs", epochs);
    rc.set("batch_size", batch_size);
    rc.set("seed", seed);
    rc.write_into(out)?;
    Ok(())
}

pub fn saliency_from_dataset(
    net: &NetworkGraph,
    ds: &Dataset,
    minibatches: usize,
    batch_size: usize,
    grad_only: bool,
) -> Result<SaliencyScores, CliError> {
    let batches: Vec<_> = ds.batches(batch_size).into_iter().take(minibatches).collect();
    if batches.is_empty() {
        return Err(CliError::Config("dataset has no batches for saliency".into()));
    }
    Ok(saliency(
        net,
        &batches,
        &SaliencyCfg {
            grad_only,
            ..Default::default()
        },
    )?)
}

/// Weight-magnitude fallback scores for pruning without labeled data.
pub fn magnitude_scores(net: &NetworkGraph) -> SaliencyScores {
    let mut pairs = Vec::new();
    for &(idx, o, ipg, kh, kw) in &net.spatial_layers() {
        let id = net.nodes[idx].id.clone();
        let w = &net.param(&id, "weight").unwrap().tensor;
        let m = kh * kw;
        let mut grid = Tensor::zeros(&[o, ipg]);
        for oo in 0..o {
            for ii in 0..ipg {
                let s: f32 = w.data()[(oo * ipg + ii) * m..][..m]
                    .iter()
                    .map(|v| v.abs())
                    .sum();
                grid.set2(oo, ii, s);
            }
        }
        pairs.push((id, grid));
    }
    SaliencyScores::from_layers(pairs)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_explain(
    net_path: &Path,
    data_path: Option<&Path>,
    use_saliency: bool,
    minibatches: usize,
    batch_size: usize,
    grad_only: bool,
    out: &Path,
) -> Result<(), CliError> {
    let net = load_net(net_path)?;
    let scores = if use_saliency {
        let dp = data_path.ok_or_else(|| {
            CliError::Config("--saliency needs --data with labeled examples".into())
        })?;
        let ds = data::load(dp)?;
        Some(saliency_from_dataset(&net, &ds, minibatches, batch_size, grad_only)?)
    } else {
        None
    };
    let mut spectra = explain_network_with_threads(&net, scores.as_ref(), worker_threads())?;
    // group layers by kernel size; one heatmap per group
    let mut sizes: Vec<(usize, usize)> = Vec::new();
    for s in &spectra {
        if !sizes.contains(&s.sizes) {
            sizes.push(s.sizes);
        }
    }
    std::fs::create_dir_all(out)?;
    for &(h, w) in &sizes {
        let basis = Basis::dct2(h, w);
        let group: Vec<_> = spectra.iter().filter(|s| s.sizes == (h, w)).cloned().collect();
        let svg = heatmap_svg(&group, &basis)?;
        let name = if sizes.len() == 1 {
            "heatmap.svg".to_string()
        } else {
            format!("heatmap_{h}x{w}.svg")
        };
        std::fs::write(out.join(name), svg)?;
        spectra.push(global_spectrum(&net, scores.as_ref(), (h, w))?);
    }
    let basis0 = Basis::dct2(sizes[0].0, sizes[0].1);
    std::fs::write(out.join("spectra.csv"), spectra_csv(&spectra, &basis0))?;
    std::fs::write(out.join("e1.csv"), e1_csv(&spectra))?;
    std::fs::write(out.join("e0.csv"), e0_csv(&spectra))?;
    let mut rc = RunConfig::default();
    rc.set("command", "explain");
    rc.set("net", net_path.display());
    rc.set("weights", if use_saliency { "saliency" } else { "uniform" });
    if let Some(dp) = data_path {
        rc.set("data", dp.display());
    }
    rc.set("saliency_batches", minibatches);
    rc.set("batch_size", batch_size);
    rc.write_into(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_prune(
    net_path: &Path,
    fraction: f64,
    fillzero: bool,
    seed: u64,
    data_path: Option<&Path>,
    minibatches: usize,
    batch_size: usize,
    out: &Path,
) -> Result<(), CliError> {
    let net = load_net(net_path)?;
    let scores = match data_path {
        Some(dp) => {
            let ds = data::load(dp)?;
            saliency_from_dataset(&net, &ds, minibatches, batch_size, false)?
        }
        None => magnitude_scores(&net),
    };
    let (zeroed, mask) = zero_least_salient(&net, &scores, fraction)?;
    let (pruned, report) = prune(&zeroed, &mask)?;
    let final_net = if fillzero {
        fill_zero(&pruned, &RngStream::new(seed), &FillZeroCfg::default())
    } else {
        pruned
    };
    final_net.validate()?;
    save_net(&final_net, out)?;
    std::fs::write(out.join("prune_report.txt"), report.render())?;
    let mut rc = RunConfig::default();
    rc.set("command", "prune");
    rc.set("net", net_path.display());
    rc.set("fraction", fraction);
    rc.set("fillzero", fillzero);
    rc.set("seed", seed);
    rc.set("scores", if data_path.is_some() { "saliency" } else { "magnitude" });
    // fine-tuning a pruned net wants twice the learning rate
    rc.set("suggested_lr_mult", 2.0);
    rc.write_into(out)?;
    Ok(())
}

pub fn cmd_eval(net_path: &Path, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let net = load_net(net_path)?;
    let ds = data::load(data_path)?;
    if ds.is_empty() {
        return Err(CliError::Config("dataset is empty".into()));
    }
    let cfg = train_cfg_for(&ds, 0.0, 0, 0);
    let (loss, metric) = evaluate(&net, &ds.batches(8), &cfg)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(
        out.join("eval.csv"),
        format!("loss,metric\n{loss:.6},{metric:.6}\n"),
    )?;
    let mut rc = RunConfig::default();
    rc.set("command", "eval");
    rc.set("net", net_path.display());
    rc.set("data", data_path.display());
    rc.set("loss", format!("{loss:.6}"));
    rc.set("metric", format!("{metric:.6}"));
    rc.write_into(out)?;
    println!("loss {loss:.6} metric {metric:.6}");
    Ok(())
}

/// Progressive zeroing curves: evaluate the metric after zeroing the least-
/// and the most-salient fraction of kernels, for each requested fraction.
#[allow(clippy::too_many_arguments)]
pub fn cmd_zero_sweep(
    net_path: &Path,
    data_path: &Path,
    fractions: &[f64],
    minibatches: usize,
    batch_size: usize,
    out: &Path,
) -> Result<(), CliError> {
    let net = load_net(net_path)?;
    let ds = data::load(data_path)?;
    let scores = saliency_from_dataset(&net, &ds, minibatches, batch_size, false)?;
    // negated scores turn least-first ordering into most-first
    let negated = SaliencyScores::from_layers(
        net.spatial_layers()
            .iter()
            .map(|&(idx, _, _, _, _)| {
                let id = net.nodes[idx].id.clone();
                let t = scores.layer(&id).unwrap();
                let max = t.data().iter().cloned().fold(0.0f32, f32::max);
                let inv = Tensor::from_vec(
                    t.shape(),
                    t.data().iter().map(|&v| max - v).collect(),
                );
                (id, inv)
            })
            .collect(),
    );
    let eval_cfg = train_cfg_for(&ds, 0.0, 0, 0);
    let batches = ds.batches(batch_size.max(8));
    let mut rows = String::from("fraction,least_first_metric,most_first_metric\n");
    for &f in fractions {
        let (least, _) = zero_least_salient(&net, &scores, f)?;
        let (most, _) = zero_least_salient(&net, &negated, f)?;
        let (_, m_least) = evaluate(&least, &batches, &eval_cfg)?;
        let (_, m_most) = evaluate(&most, &batches, &eval_cfg)?;
        rows.push_str(&format!("{f:.4},{m_least:.6},{m_most:.6}\n"));
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("sweep.csv"), &rows)?;
    let mut rc = RunConfig::default();
    rc.set("command", "zero-sweep");
    rc.set("net", net_path.display());
    rc.set("data", data_path.display());
    rc.set(
        "fractions",
        fractions
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    rc.write_into(out)?;
    Ok(())
}
