//! Batch subcommands. Progress goes to stdout, artifacts only to files.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use reviewscope::corpus::{
    load_reviews, read_jsonl, sample_balanced, sentences_from_reviews, write_jsonl, CorpusManifest, ProductInfo,
    Review, ReviewFormat, Sentence,
};
use reviewscope::eval::{build_examples, render_markdown, run_experiment, EvalReport, ExperimentConfig, Example};
use reviewscope::features::{fit_tfidf, train_word2vec, EmbeddingTable};
use reviewscope::models::{cnn_token_ids, train_cnn, train_svm_br, ClassifierModel, LabelBitset};
use reviewscope::synth;
use reviewscope::taxonomy::{label_distribution, parse_label_records, LabelDistribution, LabelRecord};
use reviewscope::features::avg_embedding;

use crate::{
    DistributionArgs, EvaluateArgs, FixturesArgs, GlobalOpts, IngestArgs, ReportArgs, TrainArgs, TrainW2vArgs,
};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_catalog(path: Option<&Path>) -> Result<Vec<ProductInfo>> {
    path.map(read_json).transpose().map(Option::unwrap_or_default)
}

pub fn fixtures(global: &GlobalOpts, args: &FixturesArgs, out: &Path) -> Result<()> {
    let ds = synth::bundled_dataset(global.seed);
    write_jsonl(&out.join("reviews.jsonl"), &ds.reviews)?;
    write_jsonl(&out.join("labels.jsonl"), &ds.labels)?;
    write_json(&out.join("products.json"), &ds.catalog)?;
    let unlabeled = synth::unlabeled_reviews(global.seed, args.unlabeled);
    write_jsonl(&out.join("unlabeled.jsonl"), &unlabeled)?;
    let corpus = synth::cooccurrence_corpus(global.seed, args.cooccurrence_tokens);
    let mut text = String::new();
    for line in &corpus {
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    fs::write(out.join("cooccurrence.txt"), text)?;
    println!(
        "fixtures: {} reviews ({} labeled sentences), {} unlabeled reviews, {} co-occurrence sentences",
        ds.reviews.len(),
        ds.labels.len(),
        unlabeled.len(),
        corpus.len()
    );
    Ok(())
}

pub fn ingest(global: &GlobalOpts, args: &IngestArgs, out: &Path) -> Result<()> {
    let format = args.format.unwrap_or_else(|| ReviewFormat::from_path(&args.reviews));
    let reviews = load_reviews(&args.reviews, format)?;
    let loaded = reviews.len();
    let candidates: Vec<Review> = if args.include_unverified {
        reviews
    } else {
        reviews.into_iter().filter(|r| r.verified).collect()
    };
    let picked = sample_balanced(&candidates, args.per_star, args.max_sentences, global.seed);
    let sentences = sentences_from_reviews(&picked);
    let catalog = load_catalog(args.products.as_deref())?;
    let manifest = CorpusManifest::build(&picked, &sentences, &catalog);
    write_jsonl(&out.join("sentences.jsonl"), &sentences)?;
    write_json(&out.join("manifest.json"), &manifest)?;

    println!(
        "ingest: {loaded} reviews loaded, {} eligible, {} selected, {} sentences",
        candidates.len(),
        picked.len(),
        sentences.len()
    );
    print!("{}", manifest_table(&manifest));
    Ok(())
}

pub fn manifest_table(m: &CorpusManifest) -> String {
    let mut s = String::from("| # | Product | 1-star | 2-star | 3-star | 4-star | 5-star | Total |\n|---|---|---|---|---|---|---|---|\n");
    for (i, e) in m.products.iter().enumerate() {
        let stars: Vec<String> = e.sentences_per_star.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "| {} | {} | {} | {} |", i + 1, e.name, stars.join(" | "), e.total);
    }
    let _ = writeln!(s, "| | Total sentences | | | | | | {} |", m.total_sentences);
    s
}

pub fn distribution_markdown(d: &LabelDistribution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| Category | Count | Percentage |\n|---|---|---|");
    for c in &d.top_level {
        let _ = writeln!(s, "| {} | {} | {:.2}% |", c.name, c.count, c.percent);
    }
    let _ = writeln!(s, "\nSentences: {}\n", d.sentences);
    let _ = writeln!(s, "| Software sub-category | Count | % of software | % of all |\n|---|---|---|---|");
    for c in &d.software {
        let _ = writeln!(s, "| {} | {} | {:.2}% | {:.2}% |", c.name, c.count, c.percent_of_software, c.percent_of_all);
    }
    if d.hardware.iter().any(|c| c.count > 0) {
        let _ = writeln!(s, "\n| Hardware sub-category | Count | % of hardware | % of all |\n|---|---|---|---|");
        for c in &d.hardware {
            let _ = writeln!(s, "| {} | {} | {:.2}% | {:.2}% |", c.name, c.count, c.percent_of_software, c.percent_of_all);
        }
    }
    let _ = writeln!(
        s,
        "\nDirectly applicable (FR + PD + IQ): {:.2}% of software sentences, {:.2}% of all sentences",
        d.directly_applicable_percent_of_software, d.directly_applicable_percent
    );
    s
}

pub fn distribution(args: &DistributionArgs, out: &Path) -> Result<()> {
    let records: Vec<LabelRecord> = read_jsonl(&args.labels)?;
    let parsed = parse_label_records(&records)?;
    let sets: Vec<_> = parsed.into_iter().map(|(_, ls)| ls).collect();
    let d = label_distribution(&sets);
    write_json(&out.join("distribution.json"), &d)?;
    let md = distribution_markdown(&d);
    fs::write(out.join("distribution.md"), &md)?;
    print!("{md}");
    Ok(())
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let reader = BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let tokens: Vec<String> = line?.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

pub fn train_w2v(global: &GlobalOpts, args: &TrainW2vArgs, out: &Path) -> Result<()> {
    if args.reviews.is_empty() && args.sentences.is_empty() && args.tokens.is_empty() {
        bail!("train-w2v needs at least one --reviews, --sentences or --tokens input");
    }
    let mut corpus: Vec<Vec<String>> = Vec::new();
    for path in &args.reviews {
        let reviews = load_reviews(path, ReviewFormat::from_path(path))?;
        corpus.extend(sentences_from_reviews(&reviews).into_iter().map(|s| s.tokens));
    }
    for path in &args.sentences {
        let sentences: Vec<Sentence> = read_jsonl(path)?;
        corpus.extend(sentences.into_iter().map(|s| s.tokens));
    }
    for path in &args.tokens {
        corpus.extend(read_token_lines(path)?);
    }
    let n_tokens: usize = corpus.iter().map(Vec::len).sum();
    println!("train-w2v: {} sentences, {n_tokens} tokens", corpus.len());

    let cfg = args.config(global.seed);
    let trained = train_word2vec(&corpus, &cfg)?;
    trained.table.save(&out.join("embeddings.txt"))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a reviewscope::features::Word2VecConfig,
        corpus_tokens: usize,
        vocabulary: usize,
        epoch_losses: &'a [f64],
    }
    write_json(
        &out.join("w2v.json"),
        &Summary { config: &cfg, corpus_tokens: n_tokens, vocabulary: trained.table.len(), epoch_losses: &trained.epoch_losses },
    )?;
    for (e, loss) in trained.epoch_losses.iter().enumerate() {
        println!("  epoch {}: loss {loss:.4}", e + 1);
    }
    println!("  vocabulary {} words, dimension {}", trained.table.len(), trained.table.dim());
    Ok(())
}

/// Sentences joined with their labels for the chosen group.
pub fn load_examples(sentences: &Path, labels: &Path, group: reviewscope::LabelGroup) -> Result<Vec<Example>> {
    let sentences: Vec<Sentence> = read_jsonl(sentences)?;
    let records: Vec<LabelRecord> = read_jsonl(labels)?;
    Ok(build_examples(&sentences, &records, group)?)
}

fn load_embeddings(path: Option<&Path>, needed: bool) -> Result<Option<EmbeddingTable>> {
    match path {
        Some(p) => Ok(Some(EmbeddingTable::load(p)?)),
        None if needed => bail!("this method needs --embeddings"),
        None => Ok(None),
    }
}

pub fn train(global: &GlobalOpts, args: &TrainArgs, out: &Path) -> Result<()> {
    let examples = load_examples(&args.sentences, &args.labels, args.group)?;
    if examples.is_empty() {
        bail!("no labeled sentences for group {}", args.group);
    }
    let labels: Vec<String> = args.group.labels().iter().map(|s| s.to_string()).collect();
    let ys: Vec<LabelBitset> = examples.iter().map(|e| e.labels.clone()).collect();
    let table = load_embeddings(args.embeddings.as_deref(), args.method.needs_embeddings())?;
    println!("train: {} on {} sentences, group {}", args.method, examples.len(), args.group);

    use reviewscope::eval::Method;
    let model = match args.method {
        Method::SvmTfidf => {
            let docs: Vec<&[String]> = examples.iter().map(|e| e.tokens.as_slice()).collect();
            let tfidf = fit_tfidf(&docs)?;
            write_json(&out.join("tfidf.json"), &tfidf)?;
            let xs: Vec<_> = examples.iter().map(|e| tfidf.vector(&e.tokens)).collect();
            ClassifierModel::Svm(train_svm_br(&xs, &ys, &labels, &args.model.svm(global.seed))?)
        }
        Method::SvmW2v => {
            let table = table.as_ref().expect("checked above");
            let xs: Vec<_> = examples.iter().map(|e| avg_embedding(&e.tokens, table)).collect();
            ClassifierModel::Svm(train_svm_br(&xs, &ys, &labels, &args.model.svm(global.seed))?)
        }
        Method::CnnW2v => {
            let table = table.as_ref().expect("checked above");
            let seqs: Vec<_> = examples.iter().map(|e| cnn_token_ids(table, &e.tokens)).collect();
            let model = train_cnn(&seqs, &ys, &labels, table, &args.model.cnn(global.seed))?;
            for (e, loss) in model.epoch_losses.iter().enumerate() {
                println!("  epoch {}: loss {loss:.4}", e + 1);
            }
            ClassifierModel::Cnn(model)
        }
    };
    if let ClassifierModel::Svm(m) = &model {
        for w in &m.warnings {
            println!("  warning: {w}");
        }
    }
    model.save(&out.join("model.json"))?;
    println!("  model written to {}", out.join("model.json").display());
    Ok(())
}

fn product_names(path: Option<&Path>) -> Result<Vec<(String, String)>> {
    Ok(load_catalog(path)?.into_iter().map(|p| (p.product_id, p.name)).collect())
}

pub fn evaluate(global: &GlobalOpts, args: &EvaluateArgs, out: &Path) -> Result<()> {
    let examples = load_examples(&args.sentences, &args.labels, args.group)?;
    let table = load_embeddings(args.embeddings.as_deref(), args.method.needs_embeddings())?;
    let cfg = ExperimentConfig {
        dataset: Some(args.labels.display().to_string()),
        embeddings: args.embeddings.as_ref().map(|p| p.display().to_string()),
        label_group: args.group,
        method: args.method,
        cv: args.cv,
        folds: args.folds,
        seed: global.seed,
        svm: args.model.svm(global.seed),
        cnn: args.model.cnn(global.seed),
    };
    println!(
        "evaluate: {} / {} / {} on {} sentences",
        args.method, args.cv, args.group, examples.len()
    );
    let output = run_experiment(&examples, &cfg, table.as_ref())?;
    write_json(&out.join("report.json"), &output.report)?;
    write_jsonl(&out.join("predictions.jsonl"), &output.predictions)?;
    let md = output.report.to_markdown(&product_names(args.products.as_deref())?);
    fs::write(out.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}

pub fn report(args: &ReportArgs, out: &Path) -> Result<()> {
    let reports: Vec<EvalReport> = args.reports.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
    let md = render_markdown(&reports, &product_names(args.products.as_deref())?);
    fs::write(out.join("tables.md"), &md)?;
    print!("{md}");
    Ok(())
}
