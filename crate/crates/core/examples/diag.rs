use evgraph_core::experiments::*;
use evgraph_core::graph::Graph;
use evgraph_core::nn::*;
use evgraph_core::rng;
use evgraph_core::signal::GraphSignal;
use ndarray::Array2;
use rand::Rng;

fn gen_fixed(g: &Graph, c_count: usize, t_max: usize, rng: &mut impl Rng) -> (GraphSignal, usize) {
    let block = g.num_nodes() / c_count;
    let community = rng.random_range(1..=c_count);
    let start = (community - 1) * block;
    let node = (start..start + block).max_by_key(|&i| (g.degree(i), std::cmp::Reverse(i))).unwrap();
    let t = rng.random_range(0..=t_max);
    (g.diffuse_delta(node, t).unwrap(), community)
}

fn main() {
    let mut sums = vec![0.0f64; 7];
    let mut sq = vec![0.0f64; 7];
    let runs = 10;
    for run in 0..runs {
        let (graph_seed, data_ix) = (run / 2, run % 2);
        let cfg = SourceLocConfig::desk_scale(1);
        let (graph, _) = sample_connected_sbm(&cfg, graph_seed).unwrap();
        let data_seed = rng::derive_seed(1, "d", &[graph_seed as u64, data_ix as u64]);
        let mut raw: Vec<(Vec<f64>, usize, Split)> = Vec::new();
        let mut r = rng::stream(data_seed, "tr", &[]);
        for _ in 0..2000 {
            let (x, l) = gen_fixed(&graph, 5, 50, &mut r);
            raw.push((x.values().column(0).to_vec(), l, Split::Train));
        }
        let mut r = rng::stream(data_seed, "te", &[]);
        for _ in 0..200 {
            let (x, l) = gen_fixed(&graph, 5, 50, &mut r);
            raw.push((x.values().column(0).to_vec(), l, Split::Test));
        }
        let n = 50usize;
        let n_train = 2000.0;
        let mut mean = vec![0.0; n];
        for (x, _, s) in &raw { if *s == Split::Train { for j in 0..n { mean[j] += x[j]; } } }
        for m in &mut mean { *m /= n_train; }
        let mut var = vec![0.0; n];
        for (x, _, s) in &raw { if *s == Split::Train { for j in 0..n { var[j] += (x[j] - mean[j]).powi(2); } } }
        let std: Vec<f64> = var.iter().map(|v| (v / n_train).sqrt().max(1e-8)).collect();
        let mut data = Dataset::new(5).unwrap();
        for (x, l, s) in &raw {
            let z: Vec<f64> = (0..n).map(|j| (x[j] - mean[j]) / std[j]).collect();
            data.push(GraphSignal::new(Array2::from_shape_vec((n, 1), z).unwrap()).unwrap(), *l, *s).unwrap();
        }
        let cfg = SourceLocConfig::desk_scale(1); // F=1 architectures
        for (arch_ix, arch) in cfg.architectures.iter().enumerate() {
            let ctx = GraphContext::for_model_spec(graph.clone(), &arch.model).unwrap();
            let seed = rng::derive_seed(1, "model-init", &[arch_ix as u64, run as u64]);
            let mut model = Model::init(&arch.model, &ctx, seed).unwrap();
            let adam = AdamConfig { seed: rng::derive_seed(1, "sh", &[arch_ix as u64, run as u64]), ..AdamConfig::default() };
            train(&mut model, &ctx, &data, &adam).unwrap();
            let acc = evaluate(&model, &ctx, &data, Split::Test).unwrap();
            sums[arch_ix] += acc;
            sq[arch_ix] += acc * acc;
        }
        eprintln!("run {run} done");
    }
    let cfg = SourceLocConfig::desk_scale(1);
    for (i, arch) in cfg.architectures.iter().enumerate() {
        let m = sums[i] / runs as f64;
        let s = ((sq[i] / runs as f64 - m * m).max(0.0)).sqrt();
        println!("{:12} mean {:.3} std {:.3}", arch.name, m, s);
    }
}
