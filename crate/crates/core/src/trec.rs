//! TREC-format run and qrels files.
//!
//! Run lines: `qid Q0 docid rank score tag`. Qrels lines: `qid 0 docid grade`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::query::QueryRun;
use crate::score::{RankedList, ScoredDoc};

/// Writes query results as a TREC run file; ranks are 1-based and scores
/// carry six decimals so reruns are byte-identical.
pub fn write_run(mut writer: impl Write, runs: &[QueryRun], tag: &str) -> Result<()> {
    for run in runs {
        for (i, doc) in run.results.iter().enumerate() {
            writeln!(
                writer,
                "{} Q0 {} {} {:.6} {}",
                run.query_id,
                doc.doc_id,
                i + 1,
                doc.score,
                tag
            )?;
        }
    }
    Ok(())
}

/// Parses a TREC run file back into per-query ranked lists (run order is
/// taken from the rank column).
pub fn read_run(reader: impl BufRead) -> Result<BTreeMap<String, RankedList>> {
    let mut rows: BTreeMap<String, Vec<(u32, ScoredDoc)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::TrecParse {
                line: lineno,
                msg: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let parse_err = |what: &str, v: &str| Error::TrecParse {
            line: lineno,
            msg: format!("invalid {what} `{v}`"),
        };
        let doc_id: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err("doc id", fields[2]))?;
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| parse_err("rank", fields[3]))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err("score", fields[4]))?;
        rows.entry(fields[0].to_string())
            .or_default()
            .push((rank, ScoredDoc { doc_id, score }));
    }
    Ok(rows
        .into_iter()
        .map(|(qid, mut docs)| {
            docs.sort_by_key(|&(rank, _)| rank);
            let list = RankedList::from_unsorted(docs.into_iter().map(|(_, d)| d).collect());
            (qid, list)
        })
        .collect())
}

pub fn read_run_path(path: impl AsRef<Path>) -> Result<BTreeMap<String, RankedList>> {
    let file = std::fs::File::open(path)?;
    read_run(std::io::BufReader::new(file))
}

/// Parses TREC qrels.
pub fn read_qrels(reader: impl BufRead) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::TrecParse {
                line: lineno,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let doc_id: u32 = fields[2].parse().map_err(|_| Error::TrecParse {
            line: lineno,
            msg: format!("invalid doc id `{}`", fields[2]),
        })?;
        let grade: u32 = fields[3].parse().map_err(|_| Error::TrecParse {
            line: lineno,
            msg: format!("invalid grade `{}`", fields[3]),
        })?;
        qrels.insert(fields[0], doc_id, grade);
    }
    Ok(qrels)
}

pub fn read_qrels_path(path: impl AsRef<Path>) -> Result<Qrels> {
    let file = std::fs::File::open(path)?;
    read_qrels(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{EffortCounters, QueryRun};

    fn sample_runs() -> Vec<QueryRun> {
        let mk = |qid: &str, docs: Vec<(u32, f64)>| QueryRun {
            query_id: qid.to_string(),
            results: RankedList::from_unsorted(
                docs.into_iter()
                    .map(|(doc_id, score)| ScoredDoc { doc_id, score })
                    .collect(),
            ),
            counters: EffortCounters::default(),
            final_thetas: (0.0, 0.0, 0.0),
            latency_ms: 0.0,
            trace: None,
        };
        vec![
            mk("q1", vec![(3, 2.5), (9, 1.25)]),
            mk("q2", vec![(1, 0.5)]),
        ]
    }

    #[test]
    fn run_round_trips_through_trec_format() {
        let runs = sample_runs();
        let mut buf = Vec::new();
        write_run(&mut buf, &runs, "test").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("q1 Q0 3 1 2.500000 test\n"));
        let parsed = read_run(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 2);
        let q1 = &parsed["q1"];
        assert_eq!(q1.doc_ids().collect::<Vec<_>>(), vec![3, 9]);
        assert_eq!(q1.as_slice()[0].score, 2.5);
    }

    #[test]
    fn qrels_parse_and_relevant_sets() {
        let text = "q1 0 3 1\nq1 0 9 0\nq2 0 1 2\n";
        let qrels = read_qrels(text.as_bytes()).unwrap();
        assert_eq!(qrels.relevant_set("q1"), std::collections::BTreeSet::from([3]));
        assert_eq!(qrels.graded("q2").unwrap()[&1], 2);
    }

    #[test]
    fn malformed_lines_name_their_line_number() {
        match read_run("q1 Q0 3 1 2.5\n".as_bytes()) {
            Err(Error::TrecParse { line: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
        match read_qrels("q1 0 3 1\nq1 0 x 1\n".as_bytes()) {
            Err(Error::TrecParse { line: 2, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
