use std::path::{Path, PathBuf};

use clap::Parser;
use multinet_core::baselines::{spec_embedding, EmbeddingType};
use multinet_core::cluster::{community_cluster_dbscan, community_cluster_km, misclustering_rate, ItemKind, KmeansOptions};
use multinet_core::generate::{generate_mmlsm, generate_mmsbm, CoreInit, GenList, Kernel, MmlsmParams, MmsbmParams};
use multinet_core::io::{
    binarize, format_embedding_csv, format_labels, format_labels_csv, format_truth_json, format_tns, load_tensor,
    read_embedding_csv, read_integer_labels, read_labels, read_labels_csv, read_truth_json, sidecar_path,
};
use multinet_core::lsm::{initialization_lsm, projected_gd, GdConfig, Link, LsmInitConfig, LsmInitType, Sampling};
use multinet_core::tensor::Tensor3;
use multinet_core::twist::{default_ranks, initialization_mmsbm, power_iteration, IterationType, TwistConfig};
use multinet_core::{Error, Result};
use serde_json::json;

use crate::args::*;
use crate::manifest::{read_manifest, Recorder};
use crate::plot;

/// Runs one parsed command. `argv` is what gets recorded for replay.
pub fn run(command: Command, argv: Vec<String>) -> Result<()> {
    let cwd = std::env::current_dir().map_err(|e| Error::Io {
        path: PathBuf::from("."),
        source: e,
    })?;
    let rec = Recorder::new(argv, cwd);
    match command {
        Command::Generate(GenerateCmd::Mmsbm(a)) => generate_sbm(a, rec),
        Command::Generate(GenerateCmd::Mmlsm(a)) => generate_lsm(a, rec),
        Command::Embed(EmbedCmd::Twist(a)) => {
            let cfg = TwistConfig {
                delta1: a.delta1,
                delta2: a.delta2,
                max_iter: a.max_iter,
                tol: a.tol,
                ..TwistConfig::new(resolve_ranks(&a.ranks)?)
            };
            embed_tucker("embed twist", &a.input, cfg, rec)
        }
        Command::Embed(EmbedCmd::Tucker(a)) => {
            let cfg = TwistConfig {
                max_iter: a.max_iter,
                tol: a.tol,
                ..TwistConfig::tucker(resolve_ranks(&a.ranks)?)
            };
            embed_tucker("embed tucker", &a.input, cfg, rec)
        }
        Command::Embed(EmbedCmd::SumAdj(a)) => embed_spectral("embed sum-adj", &a.input, a.rank, EmbeddingType::Node, rec),
        Command::Embed(EmbedCmd::M3Sc(a)) => embed_spectral("embed m3-sc", &a.input, a.rank, EmbeddingType::Layer, rec),
        Command::Embed(EmbedCmd::Spectral(a)) => {
            let kind = match a.embedding_type {
                EmbeddingTypeArg::Node => EmbeddingType::Node,
                EmbeddingTypeArg::Layer => EmbeddingType::Layer,
            };
            embed_spectral("embed spectral", &a.input, a.rank, kind, rec)
        }
        Command::Embed(EmbedCmd::Lsm(a)) => embed_lsm(a, rec),
        Command::Cluster(ClusterCmd::Kmeans(a)) => cluster_kmeans(a, rec),
        Command::Cluster(ClusterCmd::Dbscan(a)) => cluster_dbscan(a, rec),
        Command::Cluster(ClusterCmd::Eval(a)) => cluster_eval(a),
        Command::Plot(PlotCmd::Embedding(a)) => plot_embedding(a, rec),
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn replay(path: &Path) -> Result<()> {
    let manifest = read_manifest(path)?;
    std::env::set_current_dir(&manifest.cwd).map_err(|source| Error::Io {
        path: manifest.cwd.clone(),
        source,
    })?;
    let cli = Cli::try_parse_from(std::iter::once("multinet".to_string()).chain(manifest.argv.iter().cloned()))
        .map_err(|e| Error::Argument(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Error::Argument("a manifest cannot replay another replay".into()));
    }
    run(cli.command, manifest.argv)
}

fn write_truth(g: &GenList, out: &Path, rec: &mut Recorder) -> Result<()> {
    rec.write(
        sidecar_path(out, ".truth.layers.txt"),
        format_labels(&g.truth.layer_types).as_bytes(),
    )?;
    if !g.truth.memberships.is_empty() {
        let n = g.truth.memberships[0].len();
        let rows: Vec<String> = (0..n)
            .map(|i| {
                g.truth
                    .memberships
                    .iter()
                    .map(|z| z[i].to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        rec.write(sidecar_path(out, ".truth.nodes.txt"), format_labels(&rows).as_bytes())?;
    }
    rec.write(sidecar_path(out, ".truth.json"), format_truth_json(&g.truth).as_bytes())
}

fn generate_sbm(a: MmsbmArgs, mut rec: Recorder) -> Result<()> {
    let mut p = MmsbmParams::new(a.n, a.m, a.layers, a.k, a.seed);
    p.degree = a.d;
    p.out_in_ratio = a.r;
    let g = generate_mmsbm(&p)?;
    let blocks = g.blocks.expect("block model has block probabilities");
    rec.write(&a.output, format_tns(&g.tensor).as_bytes())?;
    write_truth(&g, &a.output, &mut rec)?;
    let params = json!({
        "n": p.n, "m": p.m, "L": p.layers, "K": p.k,
        "d": p.resolved_degree(), "r": p.resolved_ratio(),
        "p_in": blocks.p_in, "p_out": blocks.p_out,
    });
    rec.finish("generate mmsbm", params, Some(a.seed), sidecar_path(&a.output, ".manifest.json"))?;
    Ok(())
}

fn generate_lsm(a: MmlsmArgs, mut rec: Recorder) -> Result<()> {
    let p = MmlsmParams {
        u_mean: a.u_mean,
        cmax: a.cmax,
        degree: a.d,
        int_type: match a.int_type {
            CoreInitArg::Uniform => CoreInit::Uniform,
            CoreInitArg::Norm => CoreInit::Norm,
        },
        kernel: match a.kernel {
            KernelArg::Logit => Kernel::Logit,
            KernelArg::Probit => Kernel::Probit,
        },
        scale_par: a.scale_par,
        ..MmlsmParams::new(a.n, a.m, a.layers, a.rank, a.seed)
    };
    let g = generate_mmlsm(&p)?;
    rec.write(&a.output, format_tns(&g.tensor).as_bytes())?;
    write_truth(&g, &a.output, &mut rec)?;
    let offset = g.truth.latent.as_ref().map_or(0.0, |l| l.offset);
    let mut params = serde_json::to_value(&p).expect("params serialize");
    params["offset"] = json!(offset);
    rec.finish("generate mmlsm", params, Some(a.seed), sidecar_path(&a.output, ".manifest.json"))?;
    Ok(())
}

fn load_input(a: &InputArgs, rec: &mut Recorder) -> Result<Tensor3> {
    let file = load_tensor(&a.input, a.dataset.as_deref())?;
    if file.duplicates > 0 {
        eprintln!("warning: {} duplicate coordinates in {}", file.duplicates, a.input.display());
    }
    rec.input(&a.input);
    Ok(match a.binarize {
        Some(thr) => binarize(&file.tensor, thr),
        None => file.tensor,
    })
}

fn input_params(a: &InputArgs) -> serde_json::Value {
    json!({ "dataset": a.dataset, "binarize": a.binarize })
}

fn resolve_ranks(r: &RankArgs) -> Result<[usize; 3]> {
    match (&r.ranks, r.m, r.k) {
        (Some(v), _, _) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        (Some(v), _, _) => Err(Error::Argument(format!("--ranks needs three values, got {}", v.len()))),
        (None, Some(m), Some(k)) if m > 0 && k > 0 => Ok(default_ranks(m, k)),
        (None, Some(_), Some(_)) => Err(Error::Argument("--m and --K must be positive".into())),
        _ => Err(Error::Argument("give either --ranks r1,r2,r3 or both --m and --K".into())),
    }
}

fn embed_tucker(name: &str, input: &InputArgs, cfg: TwistConfig, mut rec: Recorder) -> Result<()> {
    let t = load_input(input, &mut rec)?;
    let init = initialization_mmsbm(&t, cfg.ranks)?;
    let res = power_iteration(&t, &cfg, &init)?;
    eprintln!("iterations={} converged={}", res.iterations, res.converged);
    let prefix = &input.output;
    rec.write(format!("{prefix}.nodes.csv"), format_embedding_csv(res.node_embedding.matrix()).as_bytes())?;
    rec.write(format!("{prefix}.layers.csv"), format_embedding_csv(res.layer_embedding.matrix()).as_bytes())?;
    rec.write(format!("{prefix}.core.tns"), format_tns(&res.core).as_bytes())?;
    let params = json!({
        "input": input_params(input),
        "ranks": cfg.ranks,
        "type": match cfg.kind { IterationType::Twist => "twist", IterationType::Tucker => "tucker" },
        "delta1": cfg.delta1,
        "delta2": cfg.delta2,
        "max_iter": cfg.max_iter,
        "tol": cfg.tol,
        "iterations": res.iterations,
        "converged": res.converged,
    });
    rec.finish(name, params, None, format!("{prefix}.manifest.json"))?;
    Ok(())
}

fn embed_spectral(name: &str, input: &InputArgs, rank: usize, kind: EmbeddingType, mut rec: Recorder) -> Result<()> {
    let t = load_input(input, &mut rec)?;
    let emb = spec_embedding(&t, rank, kind)?;
    let prefix = &input.output;
    let file = match kind {
        EmbeddingType::Node => format!("{prefix}.nodes.csv"),
        EmbeddingType::Layer => format!("{prefix}.layers.csv"),
    };
    rec.write(file, format_embedding_csv(emb.matrix()).as_bytes())?;
    let params = json!({ "input": input_params(input), "rank": rank, "embedding_type": kind });
    rec.finish(name, params, None, format!("{prefix}.manifest.json"))?;
    Ok(())
}

fn embed_lsm(a: LsmArgs, mut rec: Recorder) -> Result<()> {
    let t = load_input(&a.input, &mut rec)?;
    let int_type = match a.init {
        InitArg::Spec => LsmInitType::Spec,
        InitArg::Rand => LsmInitType::Rand,
        InitArg::Warm => LsmInitType::Warm,
    };
    let truth_path = match &a.truth {
        Some(p) => Some(p.clone()),
        None if int_type == LsmInitType::Warm => {
            let p = sidecar_path(&a.input.input, ".truth.json");
            p.exists().then_some(p)
        }
        None => None,
    };
    let truth = match &truth_path {
        Some(p) => {
            rec.input(p);
            Some(read_truth_json(p)?)
        }
        None => None,
    };
    let cfg = LsmInitConfig {
        n: t.dims()[0],
        rank: a.rank,
        m: a.m,
        perturb: a.perturb,
        int_type,
        seed: a.seed,
    };
    let init = initialization_lsm(&t, truth.as_ref(), &cfg)?;
    let gd = GdConfig {
        cmax: a.cmax,
        eta: a.eta,
        tmax: a.tmax,
        link: match a.link {
            LinkArg::Logit => Link::Logit,
            LinkArg::Probit => Link::Probit,
            LinkArg::Poisson => Link::Poisson,
        },
        sampling: match a.rd {
            SamplingArg::Rand => Sampling::Random,
            SamplingArg::Non => Sampling::Full,
        },
        show: !a.quiet,
        sgma: a.sgma,
        sample_size: a.sample_size,
        seed: a.seed,
    };
    let res = projected_gd(&init, &gd)?;
    let prefix = &a.input.output;
    rec.write(format!("{prefix}.nodes.csv"), format_embedding_csv(&res.u).as_bytes())?;
    rec.write(format!("{prefix}.layers.csv"), format_embedding_csv(&res.w).as_bytes())?;
    rec.write(format!("{prefix}.core.tns"), format_tns(&res.c).as_bytes())?;
    let mut loss = String::from("iter,loss\n");
    for (i, v) in res.loss_trace.iter().enumerate() {
        loss.push_str(&format!("{i},{v}\n"));
    }
    rec.write(format!("{prefix}.loss.csv"), loss.as_bytes())?;
    let params = json!({
        "input": input_params(&a.input),
        "init": cfg,
        "deltas": init.deltas,
        "gd": gd,
    });
    rec.finish("embed lsm", params, Some(a.seed), format!("{prefix}.manifest.json"))?;
    Ok(())
}

fn cluster_kmeans(a: KmeansArgs, mut rec: Recorder) -> Result<()> {
    let kind = ItemKind::from_tag(&a.kind)?;
    let emb = read_embedding_csv(&a.input)?;
    rec.input(&a.input);
    let opts = KmeansOptions {
        normalize: a.normalize,
        ..KmeansOptions::default()
    };
    let out = community_cluster_km(&emb, kind, a.k, a.seed, &opts)?;
    rec.write(&a.output, format_labels_csv(&out.labels).as_bytes())?;
    let params = json!({
        "k": a.k, "type": kind.tag().to_string(), "normalize": a.normalize,
        "restarts": opts.restarts, "max_iter": opts.max_iter,
    });
    rec.finish("cluster kmeans", params, Some(a.seed), sidecar_path(&a.output, ".manifest.json"))?;
    Ok(())
}

fn cluster_dbscan(a: DbscanArgs, mut rec: Recorder) -> Result<()> {
    let kind = ItemKind::from_tag(&a.kind)?;
    let emb = read_embedding_csv(&a.input)?;
    rec.input(&a.input);
    let out = community_cluster_dbscan(&emb, kind, a.eps, a.min_pts)?;
    eprintln!("clusters={} noise={}", out.k, out.noise_count());
    rec.write(&a.output, format_labels_csv(&out.labels).as_bytes())?;
    let params = json!({ "eps": a.eps, "min_pts": a.min_pts, "type": kind.tag().to_string(), "clusters": out.k });
    rec.finish("cluster dbscan", params, None, sidecar_path(&a.output, ".manifest.json"))?;
    Ok(())
}

fn cluster_eval(a: EvalArgs) -> Result<()> {
    let pred = read_labels_csv(&a.pred)?;
    let truth = if a.truth.extension().is_some_and(|e| e == "csv") {
        read_labels_csv(&a.truth)?
            .into_iter()
            .map(|l| {
                usize::try_from(l).map_err(|_| Error::Validation(format!("truth label {l} is negative")))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        read_integer_labels(&a.truth, a.truth_column)?
    };
    let rate = misclustering_rate(&pred, &truth)?;
    println!("{rate:.6}");
    Ok(())
}

fn read_plot_labels(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.lines().next().is_some_and(|l| l.trim() == "item,label") {
        Ok(read_labels_csv(path)?.iter().map(|l| l.to_string()).collect())
    } else {
        read_labels(path)
    }
}

fn plot_embedding(a: PlotArgs, mut rec: Recorder) -> Result<()> {
    let emb = read_embedding_csv(&a.input)?;
    rec.input(&a.input);
    let labels = match &a.labels {
        Some(p) => {
            rec.input(p);
            Some(read_plot_labels(p)?)
        }
        None => None,
    };
    let svg = plot::render_svg(emb.matrix(), a.paxis, labels.as_deref())?;
    let csv = plot::plotted_csv(emb.matrix(), a.paxis, labels.as_deref())?;
    rec.write(&a.output, svg.as_bytes())?;
    rec.write(a.output.with_extension("csv"), csv.as_bytes())?;
    let params = json!({
        "paxis": a.paxis,
        "columns": plot::plotted_columns(a.paxis),
        "panels": plot::panels(a.paxis).len(),
    });
    rec.finish("plot embedding", params, None, sidecar_path(&a.output, ".manifest.json"))?;
    Ok(())
}
