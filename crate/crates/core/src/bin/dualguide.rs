//! Command-line front end: build an index, search it, evaluate runs, and
//! verify the traversal's relevance properties.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use dualguide::eval::{evaluate_run, latency_stats, Metric};
use dualguide::index::{build_index, load_index, serialize_index, AlignmentMode, FillMode};
use dualguide::query::{execute, read_queries_path, Algorithm, QueryRun, TraversalConfig};
use dualguide::trec::{read_qrels_path, read_run_path, write_run};
use dualguide::verify::{run_campaigns, CampaignConfig};
use dualguide::{Bm25Params, MixCoefficients};

#[derive(Parser)]
#[command(
    name = "dualguide",
    about = "Learned-sparse retrieval with dual-weight guided index traversal",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_fill(s: &str) -> Result<FillMode, String> {
    match s {
        "zero" => Ok(FillMode::ZeroFill),
        "one" => Ok(FillMode::OneFill),
        "scaled" => Ok(FillMode::ScaledFill),
        other => Err(format!("unknown alignment `{other}` (use zero|one|scaled)")),
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Subcommand)]
enum Command {
    /// Build a dual-weight index from a tokenized corpus.
    Build {
        /// Corpus file: `doc_id<TAB>term_id:tf:w_L ...` per line.
        corpus: PathBuf,
        /// Output index file.
        index: PathBuf,
        /// Fill policy for postings missing a BM25 weight.
        #[arg(long, value_parser = parse_fill, default_value = "zero")]
        alignment: FillMode,
        /// Postings per logical block.
        #[arg(long, default_value_t = 64)]
        block_size: u32,
        #[arg(long, default_value_t = 0.9)]
        bm25_k1: f64,
        #[arg(long, default_value_t = 0.4)]
        bm25_b: f64,
        /// Keep postings whose learned weight is zero.
        #[arg(long)]
        keep_learned_zero: bool,
    },
    /// Run queries against an index, writing a TREC run file.
    Search {
        index: PathBuf,
        /// Query file: `qid<TAB>term_id term_id ...` per line.
        queries: PathBuf,
        #[arg(long, value_parser = parse_algorithm, default_value = "maxscore-2gti")]
        algorithm: Algorithm,
        /// Global-pruning mix coefficient.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Local-pruning mix coefficient.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Final-ranking mix coefficient.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Skip-threshold factor (>1 over-estimates, <1 under-estimates).
        #[arg(long, default_value_t = 1.0)]
        factor_f: f64,
        /// TREC run output path.
        #[arg(long)]
        runs_out: PathBuf,
        /// Optional per-query counter/latency CSV.
        #[arg(long)]
        counters_out: Option<PathBuf>,
        /// Worker threads across queries; per-query work stays single-threaded.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Tag column of the run file.
        #[arg(long, default_value = "dualguide")]
        tag: String,
    },
    /// Evaluate a TREC run against qrels.
    Eval {
        run: PathBuf,
        qrels: PathBuf,
        /// `mrr@K`, `recall@K`, or `ndcg@10`.
        #[arg(long, value_parser = parse_metric)]
        metric: Metric,
        /// Print per-query values.
        #[arg(long)]
        per_query: bool,
        /// Write per-query values as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Run the randomized property campaigns.
    Verify {
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Largest random corpus size.
        #[arg(long, default_value_t = 2000)]
        max_docs: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Build {
            corpus,
            index,
            alignment,
            block_size,
            bm25_k1,
            bm25_b,
            keep_learned_zero,
        } => {
            let params = Bm25Params::new(bm25_k1, bm25_b)?;
            let corpus = dualguide::corpus::Corpus::read_path(&corpus)?;
            let mode = AlignmentMode {
                fill: alignment,
                include_learned_zero: keep_learned_zero,
            };
            let out = build_index(&corpus, params, block_size, mode)?;
            serialize_index(&out.index, &index)?;
            println!(
                "indexed {} docs, {} terms, {} postings (filled {}, dropped {}) -> {}",
                out.index.num_docs,
                out.index.num_terms(),
                out.stats.num_postings,
                out.stats.filled_count,
                out.stats.dropped_learned_zero,
                index.display()
            );
            if let Some(scale) = out.scale {
                println!(
                    "scaled alignment: mean_b={:.6} mean_l={:.6} ratio={:.6}",
                    scale.mean_b, scale.mean_l, scale.scale_ratio
                );
            }
            Ok(0)
        }
        Command::Search {
            index,
            queries,
            algorithm,
            alpha,
            beta,
            gamma,
            k,
            factor_f,
            runs_out,
            counters_out,
            threads,
            tag,
        } => {
            let coeffs = MixCoefficients::new(alpha, beta, gamma)?;
            let config = TraversalConfig::new(coeffs, k, factor_f, algorithm)
                .with_counters(counters_out.is_some());
            config.validate()?;
            let index = load_index(&index)?;
            let queries = read_queries_path(&queries)?;
            let mut runs = run_batch(&index, &queries, &config, threads)?;
            runs.sort_by(|a, b| a.query_id.cmp(&b.query_id));

            let file = std::fs::File::create(&runs_out)?;
            write_run(std::io::BufWriter::new(file), &runs, &tag)?;

            if let Some(path) = counters_out {
                let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                writeln!(
                    w,
                    "query_id,latency_ms,docs_fully_scored,docs_locally_pruned,\
                     docs_globally_skipped,postings_touched,repartition_count,blocks_opened"
                )?;
                for r in &runs {
                    let c = r.counters;
                    writeln!(
                        w,
                        "{},{:.4},{},{},{},{},{},{}",
                        r.query_id,
                        r.latency_ms,
                        c.docs_fully_scored,
                        c.docs_locally_pruned,
                        c.docs_globally_skipped,
                        c.postings_touched,
                        c.repartition_count,
                        c.blocks_opened
                    )?;
                }
            }

            if runs.is_empty() {
                println!("0 queries");
            } else {
                let latencies: Vec<f64> = runs.iter().map(|r| r.latency_ms).collect();
                let (mean, p99) = latency_stats(&latencies)?;
                let scored: u64 = runs.iter().map(|r| r.counters.docs_fully_scored).sum();
                let pruned: u64 = runs.iter().map(|r| r.counters.docs_locally_pruned).sum();
                println!(
                    "{} queries | algorithm {} | MRT {:.3} ms (P99 {:.3} ms) | fully scored {} | locally pruned {}",
                    runs.len(),
                    algorithm,
                    mean,
                    p99,
                    scored,
                    pruned
                );
            }
            Ok(0)
        }
        Command::Eval {
            run,
            qrels,
            metric,
            per_query,
            csv_out,
        } => {
            let run = read_run_path(&run)?;
            let qrels = read_qrels_path(&qrels)?;
            let report = evaluate_run(&run, &qrels, metric)?;
            println!("metric     {}", report.metric);
            println!("queries    {}", report.per_query.len());
            println!("aggregate  {:.6}", report.aggregate);
            if per_query {
                for (qid, v) in &report.per_query {
                    println!("{qid}\t{v:.6}");
                }
            }
            if let Some(path) = csv_out {
                let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                writeln!(w, "query_id,{}", report.metric)?;
                for (qid, v) in &report.per_query {
                    writeln!(w, "{qid},{v:.6}")?;
                }
                writeln!(w, "ALL,{:.6}", report.aggregate)?;
            }
            Ok(0)
        }
        Command::Verify {
            trials,
            seed,
            max_docs,
        } => {
            let report = run_campaigns(&CampaignConfig {
                trials,
                seed,
                max_docs,
            })?;
            for p in &report.properties {
                let status = if p.violations == 0 { "PASS" } else { "FAIL" };
                print!(
                    "{:<30} trials={:<6} violations={:<4} {}",
                    p.name, p.trials, p.violations, status
                );
                if let Some(s) = p.first_violation_seed {
                    print!("  repro-seed={s}");
                }
                println!();
            }
            if report.passed() {
                println!("VERIFY PASS");
                Ok(0)
            } else {
                println!("VERIFY FAIL");
                Ok(1)
            }
        }
    }
}

/// Runs the query batch, timing each traversal call alone (index load and
/// output writing excluded).
fn run_batch(
    index: &dualguide::DualIndex,
    queries: &[dualguide::Query],
    config: &TraversalConfig,
    threads: usize,
) -> anyhow::Result<Vec<QueryRun>> {
    let run_one = |q: &dualguide::Query| -> dualguide::Result<QueryRun> {
        let start = Instant::now();
        let mut run = execute(q, index, config)?;
        run.latency_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(run)
    };
    if threads <= 1 {
        Ok(queries.iter().map(run_one).collect::<dualguide::Result<_>>()?)
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        Ok(pool.install(|| {
            queries
                .par_iter()
                .map(run_one)
                .collect::<dualguide::Result<Vec<_>>>()
        })?)
    }
}
