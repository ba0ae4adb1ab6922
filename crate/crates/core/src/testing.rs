//! Test support: dense reference operators and synthetic data generators.
//!
//! The dense assemblies here follow the filter definitions directly with
//! dense matrix algebra and never touch the sparse recursion paths, so
//! tests can compare both routes independently.

use ndarray::Array2;
use rand::Rng;

use crate::filters::{FilterParams, SpectralEVBasis};
use crate::graph::Graph;
use crate::rng;
use crate::signal::GraphSignal;
use crate::wan::{Corpus, Excerpt};

/// Dense operator H(S) assembled from a filter's definition.
///
/// `spectrum_u` is required by the spectral families (eigenvector matrix U);
/// vertex-domain families use the dense copy of the graph shift.
pub fn dense_operator(
    filter: &FilterParams,
    graph: &Graph,
    spectrum_u: Option<&Array2<f64>>,
    basis: Option<&SpectralEVBasis>,
) -> Array2<f64> {
    let n = graph.num_nodes();
    let s = graph.shift().to_dense();
    match filter {
        FilterParams::Polynomial(p) => {
            let mut h = Array2::zeros((n, n));
            let mut power: Array2<f64> = Array2::eye(n);
            for (k, &tap) in p.taps().iter().enumerate() {
                if k > 0 {
                    power = s.dot(&power);
                }
                h.scaled_add(tap, &power);
            }
            h
        }
        FilterParams::EdgeVariant(p) => {
            let mut h = Array2::zeros((n, n));
            let mut product: Array2<f64> = Array2::eye(n);
            for coeff in p.coeffs() {
                product = coeff.to_dense().dot(&product);
                h += &product;
            }
            h
        }
        FilterParams::Spectral(p) => {
            let u = spectrum_u.expect("spectral oracle needs U");
            let response = p.response();
            u.dot(&diag(&response)).dot(&u.t())
        }
        FilterParams::NodeVariant(p) => {
            let mut h = Array2::zeros((n, n));
            let mut power: Array2<f64> = Array2::eye(n);
            for k in 0..=p.order() {
                if k > 0 {
                    power = s.dot(&power);
                }
                let gains: Vec<f64> = (0..n)
                    .map(|i| p.taps()[(k, p.privileged().assigned_index(i))])
                    .collect();
                h += &diag(&gains).dot(&power);
            }
            h
        }
        FilterParams::HybridEv(p) => {
            let mut d0 = Array2::zeros((n, n));
            for (rank, &node) in p.privileged().nodes().iter().enumerate() {
                d0[(node, node)] = p.diag0()[rank];
            }
            let mut h = Array2::zeros((n, n));
            let mut chain = d0;
            let mut power: Array2<f64> = Array2::eye(n);
            for k in 0..=p.order() {
                if k > 0 {
                    chain = p.edge_stages()[k - 1].to_dense().dot(&chain);
                    power = s.dot(&power);
                }
                h += &chain;
                h.scaled_add(p.global_taps()[k], &power);
            }
            h
        }
        FilterParams::SpectralEv(p) => {
            let u = spectrum_u.expect("spectral-ev oracle needs U");
            let b = basis.expect("spectral-ev oracle needs the basis");
            let mut h = Array2::zeros((n, n));
            let mut product: Array2<f64> = Array2::eye(n);
            for mu_k in p.mu() {
                let response = b.response(mu_k).expect("rank checked by params");
                let phi = u.dot(&diag(&response)).dot(&u.t());
                product = phi.dot(&product);
                h += &product;
            }
            h
        }
    }
}

fn diag(values: &[f64]) -> Array2<f64> {
    let n = values.len();
    let mut d = Array2::zeros((n, n));
    for (i, &v) in values.iter().enumerate() {
        d[(i, i)] = v;
    }
    d
}

/// Largest absolute entry difference between two matrices.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Overwrites every learnable scalar with a uniform draw from [-1, 1].
pub fn randomize_filter(filter: &mut FilterParams, rng: &mut impl Rng) {
    let values: Vec<f64> = (0..filter.num_params())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    filter.read_params(&values).expect("length matches");
}

/// Random undirected graph: every pair appears with probability `p`.
/// Isolated graphs are nudged by wiring node 0 to node 1.
pub fn random_undirected_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() && n >= 2 {
        edges.push((0, 1));
    }
    Graph::undirected_adjacency(n, &edges).expect("valid edges")
}

/// Random dense signal with entries uniform in [-1, 1].
pub fn random_signal(n: usize, f: usize, rng: &mut impl Rng) -> GraphSignal {
    GraphSignal::new(Array2::from_shape_fn((n, f), |_| rng.random_range(-1.0..1.0)))
        .expect("finite by construction")
}

const SYNTH_VOCAB_SIZE: usize = 40;

/// Function words of the synthetic corpus: “qa”..“qz”, “wa”..“wn”.
pub fn synthetic_vocabulary() -> Vec<String> {
    let mut words = Vec::with_capacity(SYNTH_VOCAB_SIZE);
    for c in b'a'..=b'z' {
        words.push(format!("q{}", c as char));
    }
    for c in b'a'..=b'n' {
        words.push(format!("w{}", c as char));
    }
    words
}

/// Two-author corpus with planted, author-specific function-word
/// transition statistics.
///
/// Each author emits a first-order Markov chain over the synthetic
/// vocabulary interleaved with filler words: author “alice” biases draws
/// toward the first half of the vocabulary with cyclic step +1, author
/// “bob” toward the second half with step +5. Frequency profiles and
/// transition structure therefore both separate the classes.
pub fn synthetic_two_author_corpus(
    excerpts_per_author: usize,
    tokens_per_excerpt: usize,
    seed: u64,
) -> Corpus {
    let vocab = synthetic_vocabulary();
    let mut excerpts = Vec::with_capacity(2 * excerpts_per_author);
    for (author_idx, author) in ["alice", "bob"].iter().enumerate() {
        for e in 0..excerpts_per_author {
            let mut stream = rng::stream(seed, "synthetic-corpus", &[author_idx as u64, e as u64]);
            let tokens = synthetic_excerpt(
                author_idx,
                tokens_per_excerpt,
                &vocab,
                &mut stream,
            );
            excerpts.push(Excerpt {
                author: author.to_string(),
                name: format!("{author}-{e:03}"),
                tokens,
            });
        }
    }
    Corpus {
        excerpts,
        function_words: vocab,
    }
}

fn synthetic_excerpt(
    author_idx: usize,
    length: usize,
    vocab: &[String],
    rng: &mut impl Rng,
) -> Vec<String> {
    let half = SYNTH_VOCAB_SIZE / 2;
    let (step, favored) = if author_idx == 0 { (1, 0) } else { (5, half) };
    let mut current = rng.random_range(0..SYNTH_VOCAB_SIZE);
    let mut tokens = Vec::with_capacity(length);
    while tokens.len() < length {
        if rng.random::<f64>() < 0.3 {
            let filler = b'a' + rng.random_range(0..26u8);
            tokens.push(format!("k{}", filler as char));
            continue;
        }
        current = if rng.random::<f64>() < 0.6 {
            // biased jump into the author's favored half
            favored + rng.random_range(0..half)
        } else {
            (current + step) % SYNTH_VOCAB_SIZE
        };
        tokens.push(vocab[current].clone());
    }
    tokens
}

/// Materializes a synthetic corpus as `dir/<author>/<name>.txt` files.
pub fn write_synthetic_corpus(
    dir: &std::path::Path,
    excerpts_per_author: usize,
    tokens_per_excerpt: usize,
    seed: u64,
) -> std::io::Result<()> {
    let corpus = synthetic_two_author_corpus(excerpts_per_author, tokens_per_excerpt, seed);
    for excerpt in &corpus.excerpts {
        let author_dir = dir.join(&excerpt.author);
        std::fs::create_dir_all(&author_dir)?;
        std::fs::write(
            author_dir.join(format!("{}.txt", excerpt.name)),
            excerpt.tokens.join(" "),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpus_separates_class_frequencies() {
        let corpus = synthetic_two_author_corpus(5, 600, 1);
        assert_eq!(corpus.excerpts.len(), 10);
        let half = SYNTH_VOCAB_SIZE / 2;
        for excerpt in &corpus.excerpts {
            let x = crate::wan::frequency_signal(&excerpt.tokens, &corpus.function_words).unwrap();
            let first: f64 = (0..half).map(|i| x.values()[(i, 0)]).sum();
            let second: f64 = (half..SYNTH_VOCAB_SIZE).map(|i| x.values()[(i, 0)]).sum();
            if excerpt.author == "alice" {
                assert!(first > second, "alice excerpt leans low: {first} vs {second}");
            } else {
                assert!(second > first, "bob excerpt leans high: {second} vs {first}");
            }
        }
    }

    #[test]
    fn synthetic_tokens_survive_the_tokenizer() {
        let corpus = synthetic_two_author_corpus(1, 100, 2);
        let text = corpus.excerpts[0].tokens.join(" ");
        assert_eq!(crate::wan::tokenize(&text), corpus.excerpts[0].tokens);
    }
}
