use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use amrproj::concept_align::{
    em_align, merge_base_counted, rule_align, train_ibm1_with_history, training_pair,
    NegationLexicons, RuleConfig, TranslationTable,
};
use amrproj::embedding::{read_embeddings, read_token_file, EmbeddingCorpus, SentenceEmbedding};
use amrproj::graph::{read_treebank, write_treebank};
use amrproj::projector::{
    combine_ba_then_ap, combine_intersect, coverage, merge_treebanks, project,
    project_intersection, project_max, project_pharaoh, ProjectionReport, Source, SourceCounts,
    Strategy, REPORT_HEADER,
};
use amrproj::smatch::{smatch_score, SmatchTotals, DEFAULT_RESTARTS};
use amrproj::word_align::{align_directional, intersect, Direction, PharaohLine};
use amrproj::{AmrGraph, NodeAlignment, TreebankEntry};
use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "amrproj",
    version,
    about = "Cross-lingual AMR annotation projection"
)]
struct Cli {
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress summaries on standard error
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Word alignments from contextual embeddings, in Pharaoh format
    AlignWords(AlignWordsArgs),
    /// Align English concepts to tokens with rules and an EM table
    AlignConcepts(AlignConceptsArgs),
    /// Train an IBM Model 1 concept/token table
    TrainEm(TrainEmArgs),
    /// Project English alignments onto foreign sentences
    Project(ProjectArgs),
    /// Concatenate treebanks into one multilingual treebank
    Merge(MergeArgs),
    /// Alignment coverage per entry
    Coverage(CoverageArgs),
    /// Smatch between candidate and reference treebanks
    Score(ScoreArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fe,
    Ef,
    Intersect,
}

#[derive(Args)]
struct AlignWordsArgs {
    /// English tokens, one sentence per line
    #[arg(long)]
    src_tokens: PathBuf,
    /// Foreign tokens, one sentence per line
    #[arg(long)]
    tgt_tokens: PathBuf,
    #[arg(long)]
    src_emb: PathBuf,
    #[arg(long)]
    tgt_emb: PathBuf,
    #[arg(long, value_enum, default_value = "intersect")]
    mode: Mode,
    /// Append cosine scores to each line
    #[arg(long)]
    scores: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RuleArgs {
    /// Language tag for the negation lexicon (default: each entry's tag)
    #[arg(long)]
    lang: Option<String>,
    /// Replacement negation lexicon (`lang<TAB>word,word` lines)
    #[arg(long)]
    negations: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    prefix_len: usize,
    /// Skip the rule aligner
    #[arg(long)]
    no_rules: bool,
}

#[derive(Args)]
struct AlignConceptsArgs {
    #[arg(long)]
    treebank: PathBuf,
    /// EM table from `train-em`; without it only rules are used
    #[arg(long)]
    table: Option<PathBuf>,
    #[command(flatten)]
    rules: RuleArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainEmArgs {
    /// Training treebanks (tokens and graphs)
    #[arg(long, required = true)]
    treebank: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Write the log-likelihood after each iteration here
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    /// English treebank; entries without alignments are aligned with rules
    #[arg(long)]
    treebank: PathBuf,
    #[arg(long)]
    foreign_tokens: PathBuf,
    #[arg(long, default_value = "ea", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Word alignments in Pharaoh format, English index first
    #[arg(long, conflicts_with_all = ["src_emb", "tgt_emb"])]
    alignments: Option<PathBuf>,
    #[arg(long, requires = "tgt_emb")]
    src_emb: Option<PathBuf>,
    #[arg(long, requires = "src_emb")]
    tgt_emb: Option<PathBuf>,
    /// EM table over foreign tokens, used for direct foreign alignment
    #[arg(long)]
    table: Option<PathBuf>,
    /// EM table over English tokens, used for entries lacking alignments
    #[arg(long)]
    en_table: Option<PathBuf>,
    /// Language tag of the foreign side
    #[arg(long)]
    lang: String,
    #[arg(long)]
    negations: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    prefix_len: usize,
    /// Per-entry report (TSV)
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    /// `LANG=PATH`, in output order
    #[arg(long = "input", required = true, value_parser = parse_tagged)]
    inputs: Vec<(String, PathBuf)>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    treebank: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Also print the mean of per-pair F1
    #[arg(long = "macro")]
    macro_average: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn parse_tagged(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((lang, path)) if !lang.is_empty() && !path.is_empty() => {
            Ok((lang.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected LANG=PATH, got `{s}`")),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        ensure!(jobs >= 1, "--jobs must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::AlignWords(a) => align_words(&ctx, a),
        Command::AlignConcepts(a) => align_concepts(&ctx, a),
        Command::TrainEm(a) => train_em(&ctx, a),
        Command::Project(a) => project_cmd(&ctx, a),
        Command::Merge(a) => merge(&ctx, a),
        Command::Coverage(a) => coverage_cmd(a),
        Command::Score(a) => score(&ctx, a),
    }
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_entries(entries: &[TreebankEntry], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_treebank(entries, p)?,
        None => {
            let mut out = output(None)?;
            out.write_all(amrproj::graph::format_treebank(entries).as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Splits per-sentence results; fails listing every failing index after
/// `emit` has written the successes.
fn split_results<T>(results: Vec<Result<T, String>>) -> (Vec<T>, Vec<(usize, String)>) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((i, e)),
        }
    }
    (ok, failed)
}

fn check_failures(failed: &[(usize, String)], total: usize) -> Result<()> {
    if failed.is_empty() {
        return Ok(());
    }
    for (i, e) in failed {
        eprintln!("sentence {i}: {e}");
    }
    let list: Vec<String> = failed.iter().map(|(i, _)| i.to_string()).collect();
    bail!(
        "{} of {} sentences failed (indices {})",
        failed.len(),
        total,
        list.join(",")
    )
}

fn load_lexicons(path: Option<&Path>) -> Result<NegationLexicons> {
    match path {
        None => Ok(NegationLexicons::builtin()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok(NegationLexicons::parse(&text).with_context(|| format!("in {}", p.display()))?)
        }
    }
}

fn load_table(path: Option<&Path>) -> Result<Option<TranslationTable>> {
    path.map(|p| {
        TranslationTable::read_tsv(p).with_context(|| format!("cannot load table {}", p.display()))
    })
    .transpose()
}

fn check_rows(emb: &SentenceEmbedding, tokens: usize, side: &str) -> Result<(), String> {
    if emb.len() != tokens {
        return Err(format!(
            "{side} embedding has {} rows for {tokens} tokens",
            emb.len()
        ));
    }
    Ok(())
}

fn load_pair(src: &Path, tgt: &Path) -> Result<(EmbeddingCorpus, EmbeddingCorpus)> {
    let s = read_embeddings(src).with_context(|| format!("cannot read {}", src.display()))?;
    let t = read_embeddings(tgt).with_context(|| format!("cannot read {}", tgt.display()))?;
    ensure!(
        s.dim() == t.dim(),
        "embedding dimensions differ: {} vs {}",
        s.dim(),
        t.dim()
    );
    Ok((s, t))
}

fn align_words(ctx: &Ctx, a: AlignWordsArgs) -> Result<()> {
    let src_tokens = read_token_file(&a.src_tokens)?;
    let tgt_tokens = read_token_file(&a.tgt_tokens)?;
    let (src, tgt) = load_pair(&a.src_emb, &a.tgt_emb)?;
    let n = src_tokens.len();
    ensure!(
        tgt_tokens.len() == n && src.len() == n && tgt.len() == n,
        "sentence counts differ: {} and {} token lines, {} and {} embedding records",
        n,
        tgt_tokens.len(),
        src.len(),
        tgt.len()
    );

    let results: Vec<Result<String, String>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (e, f) = (&src.sentences()[i], &tgt.sentences()[i]);
            check_rows(e, src_tokens[i].len(), "source")?;
            check_rows(f, tgt_tokens[i].len(), "target")?;
            let line = match a.mode {
                Mode::Fe => {
                    align_directional(e, f, Direction::FGivenE).map(|d| d.to_pharaoh(a.scores))
                }
                Mode::Ef => {
                    align_directional(f, e, Direction::EGivenF).map(|d| d.to_pharaoh(a.scores))
                }
                Mode::Intersect => align_directional(e, f, Direction::FGivenE).and_then(|fe| {
                    let ef = align_directional(f, e, Direction::EGivenF)?;
                    Ok(intersect(&fe, &ef)?.to_pharaoh(a.scores))
                }),
            };
            line.map(|l| l.to_string()).map_err(|e| e.to_string())
        })
        .collect();

    let (lines, failed) = split_results(results);
    let mut out = output(a.output.as_deref())?;
    for l in &lines {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    check_failures(&failed, n)?;
    ctx.note(format!("aligned {n} sentence pairs"));
    Ok(())
}

fn rule_config(lexicons: &NegationLexicons, lang: &str, prefix_len: usize) -> Result<RuleConfig> {
    Ok(RuleConfig::for_language(lexicons, lang).with_prefix_len(prefix_len)?)
}

fn baseline(
    tokens: &[String],
    graph: &AmrGraph,
    rules: Option<&RuleConfig>,
    table: Option<&TranslationTable>,
) -> Result<(NodeAlignment, usize, usize), String> {
    let rule = rules.map_or_else(
        || NodeAlignment::new(tokens.len()),
        |c| rule_align(tokens, graph, c),
    );
    let em = table.map_or_else(
        || NodeAlignment::new(tokens.len()),
        |t| em_align(tokens, graph, t),
    );
    let (merged, counts) = merge_base_counted(&rule, &em).map_err(|e| e.to_string())?;
    Ok((merged, counts.rule, counts.em))
}

fn align_concepts(ctx: &Ctx, a: AlignConceptsArgs) -> Result<()> {
    let entries = read_treebank(&a.treebank)?;
    let lexicons = load_lexicons(a.rules.negations.as_deref())?;
    let table = load_table(a.table.as_deref())?;
    rule_config(&lexicons, "en", a.rules.prefix_len)?;

    let results: Vec<Result<(TreebankEntry, usize, usize), String>> = entries
        .into_par_iter()
        .map(|entry| {
            let lang = a
                .rules
                .lang
                .clone()
                .unwrap_or_else(|| entry.language.clone());
            let lang = if lang.is_empty() {
                "en".to_string()
            } else {
                lang
            };
            let cfg =
                rule_config(&lexicons, &lang, a.rules.prefix_len).map_err(|e| e.to_string())?;
            let rules = (!a.rules.no_rules).then_some(&cfg);
            let (alignment, r, m) = baseline(&entry.tokens, &entry.graph, rules, table.as_ref())?;
            Ok((
                TreebankEntry {
                    alignment: Some(alignment),
                    ..entry
                },
                r,
                m,
            ))
        })
        .collect();
    let total = results.len();
    let (done, failed) = split_results(results);
    let (rule_n, em_n) = done
        .iter()
        .fold((0, 0), |acc, d| (acc.0 + d.1, acc.1 + d.2));
    let vars: usize = done.iter().map(|d| d.0.graph.num_variables()).sum();
    let entries: Vec<TreebankEntry> = done.into_iter().map(|d| d.0).collect();
    write_entries(&entries, a.output.as_deref())?;
    check_failures(&failed, total)?;
    ctx.note(format!(
        "aligned {} of {} variables (rules {rule_n}, em {em_n})",
        rule_n + em_n,
        vars
    ));
    Ok(())
}

fn train_em(ctx: &Ctx, a: TrainEmArgs) -> Result<()> {
    let mut corpus = Vec::new();
    for path in &a.treebank {
        for entry in read_treebank(path)? {
            corpus.push(training_pair(&entry.tokens, &entry.graph));
        }
    }
    let (table, history) = train_ibm1_with_history(&corpus, a.iterations)?;
    table.write_tsv(&a.output)?;
    if let Some(path) = &a.history {
        let mut out = output(Some(path))?;
        for (k, ll) in history.iter().enumerate() {
            writeln!(out, "{k}\t{ll}")?;
        }
        out.flush()?;
    }
    ctx.note(format!(
        "trained on {} sentences, {} concepts; log-likelihood {}",
        corpus.len(),
        table.concept_vocab_size(),
        history.last().copied().unwrap_or(f64::NAN)
    ));
    Ok(())
}

enum WordLinks {
    None,
    Pharaoh(Vec<PharaohLine>),
    Embeddings(EmbeddingCorpus, EmbeddingCorpus),
}

fn project_cmd(ctx: &Ctx, a: ProjectArgs) -> Result<()> {
    let entries = read_treebank(&a.treebank)?;
    let foreign = read_token_file(&a.foreign_tokens)?;
    let n = entries.len();
    ensure!(
        foreign.len() == n,
        "treebank has {n} entries but {} foreign sentences",
        foreign.len()
    );

    let links = match (&a.alignments, &a.src_emb, &a.tgt_emb) {
        (Some(p), _, _) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let lines = text
                .lines()
                .enumerate()
                .map(|(i, l)| {
                    l.parse::<PharaohLine>()
                        .with_context(|| format!("{}:{}", p.display(), i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            ensure!(
                lines.len() == n,
                "treebank has {n} entries but {} alignment lines",
                lines.len()
            );
            WordLinks::Pharaoh(lines)
        }
        (None, Some(s), Some(t)) => {
            let (s, t) = load_pair(s, t)?;
            ensure!(
                s.len() == n && t.len() == n,
                "treebank has {n} entries but embeddings hold {} and {} sentences",
                s.len(),
                t.len()
            );
            WordLinks::Embeddings(s, t)
        }
        _ => WordLinks::None,
    };
    match (&links, a.strategy) {
        (WordLinks::None, Strategy::Ap | Strategy::EaBaThenAp) => {
            bail!(
                "strategy {} needs --alignments or --src-emb/--tgt-emb",
                a.strategy
            )
        }
        (WordLinks::Embeddings(..), _) | (_, Strategy::Ba) => {}
        (_, Strategy::EaIntersect) => bail!("strategy intersect-ea needs --src-emb/--tgt-emb"),
        _ => {}
    }

    let lexicons = load_lexicons(a.negations.as_deref())?;
    let foreign_rules = rule_config(&lexicons, &a.lang, a.prefix_len)?;
    let english_rules = rule_config(&lexicons, "en", a.prefix_len)?;
    let table = load_table(a.table.as_deref())?;
    let en_table = load_table(a.en_table.as_deref())?;

    let results: Vec<Result<(TreebankEntry, ProjectionReport), String>> = entries
        .into_par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let ftoks = &foreign[i];
            if ftoks.is_empty() {
                return Err("empty foreign sentence".to_string());
            }
            let graph = &entry.graph;
            let ba_en = match &entry.alignment {
                Some(al) => al.clone(),
                None => {
                    baseline(
                        &entry.tokens,
                        graph,
                        Some(&english_rules),
                        en_table.as_ref(),
                    )?
                    .0
                }
            };
            let direct =
                || baseline(ftoks, graph, Some(&foreign_rules), table.as_ref()).map(|b| b.0);
            let err = |e: amrproj::projector::ProjectionError| e.to_string();

            let directional = |dir: Direction| -> Result<_, String> {
                let WordLinks::Embeddings(s, t) = &links else {
                    unreachable!("checked above")
                };
                let (e, f) = (&s.sentences()[i], &t.sentences()[i]);
                check_rows(e, entry.tokens.len(), "English")?;
                check_rows(f, ftoks.len(), "foreign")?;
                match dir {
                    Direction::FGivenE => align_directional(e, f, dir),
                    Direction::EGivenF => align_directional(f, e, dir),
                }
                .map_err(|e| e.to_string())
            };
            let ap = || -> Result<NodeAlignment, String> {
                match &links {
                    WordLinks::Pharaoh(lines) => {
                        project_pharaoh(&ba_en, &lines[i], ftoks.len()).map_err(err)
                    }
                    WordLinks::Embeddings(..) => {
                        project(&ba_en, &directional(Direction::FGivenE)?, ftoks.len()).map_err(err)
                    }
                    WordLinks::None => unreachable!("checked above"),
                }
            };

            let (alignment, report) = match a.strategy {
                Strategy::Ap => {
                    let al = ap()?;
                    let r = ProjectionReport::single(Strategy::Ap, Source::Ap, graph, &al);
                    (al, r)
                }
                Strategy::Ba => {
                    let al = direct()?;
                    let r = ProjectionReport::single(Strategy::Ba, Source::Ba, graph, &al);
                    (al, r)
                }
                Strategy::EaBaThenAp => {
                    combine_ba_then_ap(graph, &direct()?, &ap()?).map_err(err)?
                }
                Strategy::EaIntersect => {
                    let fe = directional(Direction::FGivenE)?;
                    let ef = directional(Direction::EGivenF)?;
                    let sym = intersect(&fe, &ef).map_err(|e| e.to_string())?;
                    let iap = project_intersection(&ba_en, &sym).map_err(err)?;
                    let maxap = project_max(&ba_en, &fe, &ef).map_err(err)?;
                    combine_intersect(graph, &iap, &direct()?, &maxap).map_err(err)?
                }
            };
            let out = TreebankEntry::new(
                entry.id.clone(),
                a.lang.clone(),
                ftoks.clone(),
                entry.graph,
                Some(alignment),
            )
            .map_err(|e| e.to_string())?;
            Ok((out, report))
        })
        .collect();

    let (done, failed) = split_results(results);
    let entries: Vec<TreebankEntry> = done.iter().map(|d| d.0.clone()).collect();
    write_entries(&entries, a.output.as_deref())?;

    let mut sums = SourceCounts::default();
    let (mut aligned, mut vars, mut coll) = (0, 0, 0);
    for (e, r) in &done {
        sums.intersect_ap += r.sources.intersect_ap;
        sums.ba += r.sources.ba;
        sums.ap += r.sources.ap;
        sums.max_ap += r.sources.max_ap;
        aligned += e.alignment.as_ref().map_or(0, |al| al.len());
        vars += e.graph.num_variables();
        coll += r.collisions;
    }
    let corpus_cov = if vars == 0 {
        0.0
    } else {
        aligned as f64 / vars as f64
    };
    let summary = ProjectionReport {
        strategy: a.strategy,
        coverage: corpus_cov,
        sources: sums,
        collisions: coll,
    };
    if let Some(path) = &a.report {
        let mut out = output(Some(path))?;
        writeln!(out, "{REPORT_HEADER}")?;
        for (e, r) in &done {
            writeln!(out, "{}", r.tsv_row(&e.id))?;
        }
        writeln!(out, "{}", summary.tsv_row("TOTAL"))?;
        out.flush()?;
    }
    check_failures(&failed, n)?;
    ctx.note(format!(
        "projected {} entries with {}: coverage {:.4} ({aligned}/{vars}), collisions {coll}",
        done.len(),
        a.strategy,
        corpus_cov
    ));
    Ok(())
}

fn merge(ctx: &Ctx, a: MergeArgs) -> Result<()> {
    let mut treebanks = Vec::with_capacity(a.inputs.len());
    for (lang, path) in &a.inputs {
        treebanks.push((lang.clone(), read_treebank(path)?));
    }
    let merged = merge_treebanks(treebanks);
    write_entries(&merged, a.output.as_deref())?;
    ctx.note(format!(
        "merged {} treebanks, {} entries",
        a.inputs.len(),
        merged.len()
    ));
    Ok(())
}

fn coverage_cmd(a: CoverageArgs) -> Result<()> {
    let entries = read_treebank(&a.treebank)?;
    let mut out = output(a.output.as_deref())?;
    writeln!(out, "id\tcoverage\taligned\tvariables")?;
    let (mut aligned, mut vars) = (0, 0);
    for e in &entries {
        let (cov, n) = match &e.alignment {
            Some(al) => (coverage(al, &e.graph), al.len()),
            None => (0.0, 0),
        };
        aligned += n;
        vars += e.graph.num_variables();
        writeln!(out, "{}\t{cov:.4}\t{n}\t{}", e.id, e.graph.num_variables())?;
    }
    let total = if vars == 0 {
        0.0
    } else {
        aligned as f64 / vars as f64
    };
    writeln!(out, "TOTAL\t{total:.4}\t{aligned}\t{vars}")?;
    out.flush()?;
    Ok(())
}

fn score(ctx: &Ctx, a: ScoreArgs) -> Result<()> {
    let cand = read_treebank(&a.candidate)?;
    let refs = read_treebank(&a.reference)?;
    ensure!(!cand.is_empty() || !refs.is_empty(), "no pairs");
    ensure!(
        cand.len() == refs.len(),
        "candidate has {} entries, reference has {}",
        cand.len(),
        refs.len()
    );
    if let Some((i, (c, r))) = cand
        .iter()
        .zip(&refs)
        .enumerate()
        .find(|(_, (c, r))| c.id != r.id)
    {
        bail!(
            "id mismatch at entry {i}: candidate `{}`, reference `{}`",
            c.id,
            r.id
        );
    }

    let results: Vec<Result<_, String>> = cand
        .par_iter()
        .zip(refs.par_iter())
        .map(|(c, r)| {
            smatch_score(&c.graph, &r.graph, a.restarts, ctx.seed).map_err(|e| e.to_string())
        })
        .collect();
    let (scores, failed) = split_results(results);
    check_failures(&failed, cand.len())?;

    let mut out = output(a.output.as_deref())?;
    let mut totals = SmatchTotals::default();
    for (c, s) in cand.iter().zip(&scores) {
        totals.add(s);
        writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}",
            c.id, s.precision, s.recall, s.f1
        )?;
    }
    let (p, r, f) = totals.micro();
    writeln!(out, "TOTAL\t{p:.4}\t{r:.4}\t{f:.4}")?;
    if a.macro_average {
        writeln!(out, "MACRO\t-\t-\t{:.4}", totals.macro_f1())?;
    }
    out.flush()?;
    ctx.note(format!(
        "scored {} pairs, {} of {} triples matched",
        totals.pairs, totals.matched, totals.reference_triples
    ));
    Ok(())
}
