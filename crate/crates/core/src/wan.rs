//! Word adjacency networks for authorship attribution.
//!
//! Each text excerpt becomes a directed graph over a fixed function-word
//! vocabulary: an occurrence of word u followed within the window by word v
//! adds a decayed weight to the edge u -> v. The target author's training
//! WANs sum into a signature graph (symmetrized, spectral-radius
//! normalized), and the function-word frequency counts of each excerpt act
//! as the graph signals to classify.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{Dataset, Split};
use crate::rng;
use crate::signal::GraphSignal;

/// Packaged inventory of English function words, one per line.
const FUNCTION_WORDS: &str = include_str!("../assets/function_words.txt");

/// The packaged function-word vocabulary (lowercase, deduplicated, in file
/// order).
pub fn default_function_words() -> Vec<String> {
    parse_function_words(FUNCTION_WORDS)
}

/// Parses a function-word list: one word per line, blanks ignored.
pub fn parse_function_words(text: &str) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut words = Vec::new();
    for line in text.lines() {
        let w = line.trim().to_lowercase();
        if !w.is_empty() && seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Lowercases and splits on non-alphabetic characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// WAN construction parameters.
#[derive(Debug, Clone)]
pub struct WanConfig {
    /// Window length D: co-occurrences up to D tokens apart count.
    pub window: usize,
    /// Decay alpha in (0, 1): an offset-d pair contributes alpha^(d-1).
    pub decay: f64,
    /// Normalize each nonzero row of the stored matrix to sum 1.
    pub normalize: bool,
}

impl Default for WanConfig {
    fn default() -> Self {
        Self {
            window: 10,
            decay: 0.8,
            normalize: true,
        }
    }
}

impl WanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("window length must be positive"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid("decay must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Builds the directed WAN of one token sequence over `vocab`.
///
/// For every occurrence of function word u followed by function word v at
/// token offset d <= window, the edge u -> v gains alpha^(d-1). The offset
/// counts all tokens, not only function words.
pub fn build_wan<T: AsRef<str>>(tokens: &[T], vocab: &[String], cfg: &WanConfig) -> Result<Graph> {
    if vocab.is_empty() {
        return Err(Error::invalid("the function-word vocabulary is empty"));
    }
    cfg.validate()?;
    let index: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    // (position, vocab id) of every function-word occurrence
    let occurrences: Vec<(usize, usize)> = tokens
        .iter()
        .enumerate()
        .filter_map(|(pos, t)| index.get(t.as_ref()).map(|&id| (pos, id)))
        .collect();

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (a, &(pos_u, u)) in occurrences.iter().enumerate() {
        for &(pos_v, v) in occurrences[a + 1..].iter() {
            let d = pos_v - pos_u;
            if d > cfg.window {
                break;
            }
            // edge u -> v is stored at (row v, column u)
            *weights.entry((v, u)).or_insert(0.0) += cfg.decay.powi(d as i32 - 1);
        }
    }

    let mut entries: Vec<(usize, usize, f64)> =
        weights.into_iter().map(|((i, j), w)| (i, j, w)).collect();
    if cfg.normalize {
        let mut row_sums = vec![0.0; vocab.len()];
        for &(i, _, w) in &entries {
            row_sums[i] += w;
        }
        for (i, _, w) in &mut entries {
            if row_sums[*i] > 0.0 {
                *w /= row_sums[*i];
            }
        }
    }
    Graph::from_entries(vocab.len(), &entries, false)
}

/// Function-word frequency counts of one token sequence as a graph signal.
pub fn frequency_signal<T: AsRef<str>>(tokens: &[T], vocab: &[String]) -> Result<GraphSignal> {
    if vocab.is_empty() {
        return Err(Error::invalid("the function-word vocabulary is empty"));
    }
    let index: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let mut counts = vec![0.0; vocab.len()];
    for t in tokens {
        if let Some(&id) = index.get(t.as_ref()) {
            counts[id] += 1.0;
        }
    }
    GraphSignal::from_column(counts)
}

/// Sums the WAN adjacency matrices entrywise, symmetrizes the result as
/// (A + Aᵀ)/2, and normalizes it by its spectral radius.
pub fn signature_graph(wans: &[Graph]) -> Result<Graph> {
    let first = wans
        .first()
        .ok_or_else(|| Error::invalid("signature needs at least one WAN"))?;
    let n = first.num_nodes();
    if wans.iter().any(|g| g.num_nodes() != n) {
        return Err(Error::invalid(
            "all WANs must share one vocabulary (sizes differ)",
        ));
    }
    let mut sum: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for g in wans {
        for (i, j, w) in g.shift().entries() {
            *sum.entry((i, j)).or_insert(0.0) += w;
        }
    }
    // one value per unordered pair keeps both triangles bit-identical
    let mut entries = Vec::new();
    for (&(i, j), &w) in &sum {
        if i < j {
            let mirrored = sum.get(&(j, i)).copied().unwrap_or(0.0);
            let v = (w + mirrored) / 2.0;
            if v != 0.0 {
                entries.push((i, j, v));
                entries.push((j, i, v));
            }
        } else if i == j && w != 0.0 {
            entries.push((i, i, w));
        } else if !sum.contains_key(&(j, i)) {
            // lower-triangle entry without an upper mirror
            let v = w / 2.0;
            if v != 0.0 {
                entries.push((i, j, v));
                entries.push((j, i, v));
            }
        }
    }
    Graph::from_entries(n, &entries, true)?.normalize_by_spectral_radius()
}

/// One text excerpt of a labeled corpus.
#[derive(Debug, Clone)]
pub struct Excerpt {
    pub author: String,
    pub name: String,
    pub tokens: Vec<String>,
}

/// A collection of excerpts plus the function-word vocabulary that defines
/// node identity.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub excerpts: Vec<Excerpt>,
    pub function_words: Vec<String>,
}

impl Corpus {
    pub fn authors(&self) -> Vec<String> {
        let mut authors: Vec<String> = self
            .excerpts
            .iter()
            .map(|e| e.author.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        authors.sort();
        authors
    }

    pub fn excerpts_of(&self, author: &str) -> Vec<&Excerpt> {
        self.excerpts.iter().filter(|e| e.author == author).collect()
    }
}

/// Loads a corpus from `dir/<author>/<excerpt>.txt`, tokenizing each file.
/// Authors and excerpts load in lexicographic order.
pub fn load_corpus(dir: &Path, function_words: Vec<String>) -> Result<Corpus> {
    if function_words.is_empty() {
        return Err(Error::invalid("the function-word vocabulary is empty"));
    }
    let mut excerpts = Vec::new();
    let mut authors: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    authors.sort();
    for author_dir in authors {
        let author = author_dir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::invalid("author directory has a non-UTF8 name"))?
            .to_string();
        let mut files: Vec<_> = std::fs::read_dir(&author_dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
            .collect();
        files.sort();
        for file in files {
            let text = std::fs::read_to_string(&file)?;
            let tokens = tokenize(&text);
            if tokens.is_empty() {
                continue;
            }
            excerpts.push(Excerpt {
                author: author.clone(),
                name: file
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string(),
                tokens,
            });
        }
    }
    if excerpts.is_empty() {
        return Err(Error::invalid(format!(
            "no text excerpts found under {}",
            dir.display()
        )));
    }
    Ok(Corpus {
        excerpts,
        function_words,
    })
}

/// Assembles the binary attribution dataset for one target author.
///
/// The target's excerpts are shuffled and split per `split_sizes`
/// (train, val, test); an equal number of other-author excerpts completes
/// each split. The signature graph uses only the target's training split.
/// Labels: target author = 1, others = 2.
pub fn assemble_author_dataset(
    corpus: &Corpus,
    target_author: &str,
    split_sizes: (usize, usize, usize),
    wan_cfg: &WanConfig,
    seed: u64,
) -> Result<(Dataset, Graph)> {
    let (n_train, n_val, n_test) = split_sizes;
    let need = n_train + n_val + n_test;
    if n_train == 0 {
        return Err(Error::invalid("the training split must be non-empty"));
    }
    let target: Vec<&Excerpt> = corpus.excerpts_of(target_author);
    let others: Vec<&Excerpt> = corpus
        .excerpts
        .iter()
        .filter(|e| e.author != target_author)
        .collect();
    if target.len() < need || others.len() < need {
        return Err(Error::invalid(format!(
            "need {need} excerpts per class, have {} by {target_author} and {} by others",
            target.len(),
            others.len()
        )));
    }

    let mut target_order: Vec<usize> = (0..target.len()).collect();
    target_order.shuffle(&mut rng::stream(seed, "target-split", &[]));
    let mut other_order: Vec<usize> = (0..others.len()).collect();
    other_order.shuffle(&mut rng::stream(seed, "other-split", &[]));

    // signature from the target training split only: no test-set leakage
    let train_wans: Vec<Graph> = target_order[..n_train]
        .iter()
        .map(|&i| build_wan(&target[i].tokens, &corpus.function_words, wan_cfg))
        .collect::<Result<_>>()?;
    let signature = signature_graph(&train_wans)?;

    let mut data = Dataset::new(2)?;
    let splits = [
        (Split::Train, 0, n_train),
        (Split::Val, n_train, n_train + n_val),
        (Split::Test, n_train + n_val, need),
    ];
    for (split, start, end) in splits {
        for pos in start..end {
            let excerpt = target[target_order[pos]];
            data.push(
                frequency_signal(&excerpt.tokens, &corpus.function_words)?,
                1,
                split,
            )?;
            let excerpt = others[other_order[pos]];
            data.push(
                frequency_signal(&excerpt.tokens, &corpus.function_words)?,
                2,
                split,
            )?;
        }
    }
    Ok((data, signature))
}

/// CSV of excerpt signals: one row per sample (vocabulary counts, then the
/// 1-based label).
pub fn write_signals_csv<W: Write>(data: &Dataset, vocab: &[String], mut w: W) -> Result<()> {
    let header: Vec<String> = vocab.iter().cloned().chain(["label".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..data.len() {
        let (signal, label) = data.sample(i);
        let mut fields: Vec<String> = signal
            .values()
            .column(0)
            .iter()
            .map(|v| v.to_string())
            .collect();
        fields.push(label.to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn packaged_vocabulary_is_clean() {
        let words = default_function_words();
        assert!(words.len() >= 150, "inventory has {} entries", words.len());
        let unique: std::collections::BTreeSet<_> = words.iter().collect();
        assert_eq!(unique.len(), words.len());
        assert!(words.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn tokenizer_lowercases_and_splits_on_non_alphabetic() {
        assert_eq!(
            tokenize("The cat, the CAT-dog; 42 birds!"),
            vec!["the", "cat", "the", "cat", "dog", "birds"]
        );
        assert!(tokenize("123 456 !!!").is_empty());
    }

    #[test]
    fn self_edge_from_repeated_function_word() {
        // "the cat the": offset 2 pair (the, the) with alpha = 0.5 -> 0.5
        let tokens = tokenize("the cat the");
        let cfg = WanConfig {
            window: 2,
            decay: 0.5,
            normalize: false,
        };
        let g = build_wan(&tokens, &vocab(&["the"]), &cfg).unwrap();
        assert_eq!(g.shift().value_at(0, 0), 0.5);
        assert_eq!(g.num_directed_edges(), 0);
    }

    #[test]
    fn no_function_words_builds_an_edgeless_graph() {
        let tokens = tokenize("lorem ipsum dolor sit amet");
        let g = build_wan(&tokens, &vocab(&["the", "of"]), &WanConfig::default()).unwrap();
        assert_eq!(g.shift().nnz(), 0);
    }

    #[test]
    fn concatenation_doubles_raw_weights() {
        let base = tokenize("the cat of the house of it");
        let cfg = WanConfig {
            normalize: false,
            ..WanConfig::default()
        };
        let v = vocab(&["the", "of", "it"]);
        let single = build_wan(&base, &v, &cfg).unwrap();
        // separate the copies with > window non-function tokens
        let mut doubled = base.clone();
        doubled.extend(std::iter::repeat_n("filler".to_string(), cfg.window + 1));
        doubled.extend(base.clone());
        let twice = build_wan(&doubled, &v, &cfg).unwrap();
        for (i, j, w) in single.shift().entries() {
            assert!((twice.shift().value_at(i, j) - 2.0 * w).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_rows_sum_to_one() {
        let tokens = tokenize("the cat of the house of it and the mouse and it");
        let v = vocab(&["the", "of", "it", "and"]);
        let g = build_wan(&tokens, &v, &WanConfig::default()).unwrap();
        for i in 0..4 {
            let row_sum: f64 = g
                .shift()
                .entries()
                .filter(|&(r, _, _)| r == i)
                .map(|(_, _, w)| w)
                .sum();
            if row_sum != 0.0 {
                assert!((row_sum - 1.0).abs() < 1e-12);
            }
        }
        assert!(g.shift().values().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn frequency_counts_are_exact() {
        let tokens = tokenize("the of the");
        let x = frequency_signal(&tokens, &vocab(&["the", "of"])).unwrap();
        assert_eq!(x.values().column(0).to_vec(), vec![2.0, 1.0]);
        let none = frequency_signal(&tokenize("xyz"), &vocab(&["the"])).unwrap();
        assert_eq!(none.max_abs(), 0.0);
    }

    #[test]
    fn frequency_signal_is_permutation_equivariant() {
        let tokens = tokenize("the of it the it it");
        let a = frequency_signal(&tokens, &vocab(&["the", "of", "it"])).unwrap();
        let b = frequency_signal(&tokens, &vocab(&["it", "the", "of"])).unwrap();
        assert_eq!(a.values()[(0, 0)], b.values()[(1, 0)]);
        assert_eq!(a.values()[(1, 0)], b.values()[(2, 0)]);
        assert_eq!(a.values()[(2, 0)], b.values()[(0, 0)]);
    }

    #[test]
    fn signature_is_symmetric_normalized_and_scale_invariant() {
        let cfg = WanConfig {
            normalize: false,
            ..WanConfig::default()
        };
        let v = vocab(&["the", "of", "it"]);
        let w1 = build_wan(&tokenize("the of it the of"), &v, &cfg).unwrap();
        let w2 = build_wan(&tokenize("of the it of it"), &v, &cfg).unwrap();
        let single = signature_graph(&[w1.clone()]).unwrap();
        assert_eq!(single.shift().asymmetry(), 0.0);
        assert!(single.has_unit_spectral_radius());
        // two identical inputs give the same shift (scale cancels)
        let twice = signature_graph(&[w1.clone(), w1.clone()]).unwrap();
        assert!(
            (0..3).all(|i| (0..3).all(|j| {
                (single.shift().value_at(i, j) - twice.shift().value_at(i, j)).abs() < 1e-12
            }))
        );
        // dense addition oracle for a mixed sum
        let mixed = signature_graph(&[w1.clone(), w2.clone()]).unwrap();
        let a = w1.shift().to_dense() + w2.shift().to_dense();
        let sym = (&a + &a.t()) / 2.0;
        let (eigs, _) = crate::eigen::symmetric_eigen(&sym).unwrap();
        let lambda_max = eigs.last().copied().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (mixed.shift().value_at(i, j) - sym[(i, j)] / lambda_max).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn vocabulary_size_mismatch_is_rejected() {
        let cfg = WanConfig::default();
        let a = build_wan(&tokenize("the of"), &vocab(&["the", "of"]), &cfg).unwrap();
        let b = build_wan(&tokenize("the of it"), &vocab(&["the", "of", "it"]), &cfg).unwrap();
        assert!(signature_graph(&[a, b]).is_err());
    }

    #[test]
    fn author_dataset_counts_and_determinism() {
        let corpus = crate::testing::synthetic_two_author_corpus(8, 400, 5);
        let authors = corpus.authors();
        assert_eq!(authors.len(), 2);
        let cfg = WanConfig::default();
        let (data, sig) =
            assemble_author_dataset(&corpus, &authors[0], (4, 1, 2), &cfg, 3).unwrap();
        assert_eq!(data.split_len(Split::Train), 8);
        assert_eq!(data.split_len(Split::Val), 2);
        assert_eq!(data.split_len(Split::Test), 4);
        assert_eq!(sig.num_nodes(), corpus.function_words.len());
        // same seed, same splits
        let (data2, _) =
            assemble_author_dataset(&corpus, &authors[0], (4, 1, 2), &cfg, 3).unwrap();
        for i in 0..data.len() {
            assert_eq!(data.sample(i).1, data2.sample(i).1);
            assert_eq!(
                data.sample(i).0.values(),
                data2.sample(i).0.values()
            );
        }
        // insufficient excerpts error names the counts
        let err = assemble_author_dataset(&corpus, &authors[0], (8, 1, 2), &cfg, 3).unwrap_err();
        assert!(err.to_string().contains("have 8"));
    }
}
