//! Tokenized corpus input.
//!
//! Line-oriented text, one document per line:
//!
//! ```text
//! doc_id<TAB>term_id:tf:w_L term_id:tf:w_L ...
//! ```
//!
//! `tf` is the raw lexical term frequency (0 for learned-only postings) and
//! `w_L` the learned impact weight. A line with no postings describes an
//! empty document.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One (term, tf, learned-weight) posting of a document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusEntry {
    pub term_id: u32,
    pub tf: u32,
    pub w_l: f64,
}

/// One tokenized document.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDoc {
    pub doc_id: u32,
    pub entries: Vec<CorpusEntry>,
}

impl CorpusDoc {
    /// Original tokenized length: the sum of raw term frequencies.
    pub fn token_length(&self) -> u32 {
        self.entries.iter().map(|e| e.tf).sum()
    }
}

/// An in-memory tokenized corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub docs: Vec<CorpusDoc>,
}

impl Corpus {
    pub fn from_docs(docs: Vec<CorpusDoc>) -> Self {
        Corpus { docs }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut docs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            docs.push(parse_doc_line(&line, lineno)?);
        }
        Ok(Corpus { docs })
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Writes the text form; learned weights keep at least 6 significant digits.
    pub fn write_to(&self, mut writer: impl Write) -> Result<()> {
        for doc in &self.docs {
            write!(writer, "{}", doc.doc_id)?;
            for (i, e) in doc.entries.iter().enumerate() {
                let sep = if i == 0 { '\t' } else { ' ' };
                write!(writer, "{}{}:{}:{:.9e}", sep, e.term_id, e.tf, e.w_l)?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }
}

fn parse_doc_line(line: &str, lineno: usize) -> Result<CorpusDoc> {
    let err = |msg: String| Error::CorpusParse { line: lineno, msg };
    let (id_part, rest) = match line.split_once('\t') {
        Some((id, rest)) => (id, rest),
        None => (line.trim_end(), ""),
    };
    let doc_id: u32 = id_part
        .trim()
        .parse()
        .map_err(|_| err(format!("invalid doc id `{id_part}`")))?;
    let mut entries = Vec::new();
    for tok in rest.split_whitespace() {
        let mut parts = tok.splitn(3, ':');
        let (t, f, w) = match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(f), Some(w)) => (t, f, w),
            _ => return Err(err(format!("malformed posting `{tok}`"))),
        };
        let term_id: u32 = t
            .parse()
            .map_err(|_| err(format!("invalid term id `{t}`")))?;
        let tf: u32 = f
            .parse()
            .map_err(|_| err(format!("invalid term frequency `{f}`")))?;
        let w_l: f64 = w
            .parse()
            .map_err(|_| err(format!("invalid learned weight `{w}`")))?;
        if !w_l.is_finite() {
            return Err(err(format!("learned weight `{w}` is not finite")));
        }
        if w_l < 0.0 {
            return Err(Error::NegativeWeight {
                doc_id,
                term_id,
                value: w_l,
            });
        }
        entries.push(CorpusEntry { term_id, tf, w_l });
    }
    Ok(CorpusDoc { doc_id, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documents_and_postings() {
        let text = "0\t3:2:1.5 7:0:0.25\n1\t3:1:2.0\n2\n";
        let corpus = Corpus::read_from(text.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.docs[0].doc_id, 0);
        assert_eq!(
            corpus.docs[0].entries,
            vec![
                CorpusEntry { term_id: 3, tf: 2, w_l: 1.5 },
                CorpusEntry { term_id: 7, tf: 0, w_l: 0.25 },
            ]
        );
        assert_eq!(corpus.docs[0].token_length(), 2);
        assert!(corpus.docs[2].entries.is_empty());
    }

    #[test]
    fn rejects_malformed_lines_with_line_numbers() {
        let bad = "0\t3:2:1.5\nnot-a-doc\t1:1:1.0\n";
        match Corpus::read_from(bad.as_bytes()) {
            Err(Error::CorpusParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let neg = "0\t3:2:-1.0\n";
        assert!(matches!(
            Corpus::read_from(neg.as_bytes()),
            Err(Error::NegativeWeight { .. })
        ));
        let trunc = "0\t3:2\n";
        assert!(matches!(
            Corpus::read_from(trunc.as_bytes()),
            Err(Error::CorpusParse { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_read_preserves_structure() {
        let corpus = Corpus::from_docs(vec![
            CorpusDoc {
                doc_id: 0,
                entries: vec![CorpusEntry { term_id: 1, tf: 3, w_l: 0.125 }],
            },
            CorpusDoc { doc_id: 1, entries: vec![] },
        ]);
        let mut buf = Vec::new();
        corpus.write_to(&mut buf).unwrap();
        let back = Corpus::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.docs.len(), 2);
        assert_eq!(back.docs[0].entries[0].term_id, 1);
        assert!((back.docs[0].entries[0].w_l - 0.125).abs() < 1e-9);
    }
}
