//! Binary index file format.
//!
//! Single little-endian file: magic bytes `2GTI`, a format version, then the
//! header, document lengths, term table, postings, and block tables, in that
//! order. Field layout is documented in `FORMATS.md` at the repository root
//! and frozen by the round-trip tests.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

use super::{AlignmentMode, BlockMeta, DualIndex, FillMode, PostingList, PostingRecord};

pub const MAGIC: &[u8; 4] = b"2GTI";
pub const FORMAT_VERSION: u32 = 1;

fn fill_code(fill: FillMode) -> u8 {
    match fill {
        FillMode::ZeroFill => 0,
        FillMode::OneFill => 1,
        FillMode::ScaledFill => 2,
    }
}

fn fill_from_code(code: u8) -> Result<FillMode> {
    match code {
        0 => Ok(FillMode::ZeroFill),
        1 => Ok(FillMode::OneFill),
        2 => Ok(FillMode::ScaledFill),
        other => Err(Error::IndexFormat {
            section: "header".into(),
            msg: format!("unknown alignment fill code {other}"),
        }),
    }
}

/// Writes the index to `path`.
pub fn serialize_index(index: &DualIndex, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(FORMAT_VERSION)?;

    // header
    w.write_u32::<LE>(index.num_docs)?;
    w.write_f64::<LE>(index.avg_doc_length)?;
    w.write_u32::<LE>(index.block_size)?;
    w.write_u8(fill_code(index.alignment.fill))?;
    w.write_u8(u8::from(index.alignment.include_learned_zero))?;
    w.write_u32::<LE>(index.num_terms() as u32)?;

    // doc lengths
    for &len in &index.doc_lengths {
        w.write_u32::<LE>(len)?;
    }

    // term table
    for list in index.lists() {
        w.write_u32::<LE>(list.term_id)?;
        w.write_u64::<LE>(list.records.len() as u64)?;
        w.write_u32::<LE>(list.blocks.len() as u32)?;
        w.write_f64::<LE>(list.sigma_b)?;
        w.write_f64::<LE>(list.sigma_l)?;
    }

    // postings
    for list in index.lists() {
        for r in &list.records {
            w.write_u32::<LE>(r.doc_id)?;
            w.write_u32::<LE>(r.tf)?;
            w.write_f64::<LE>(r.w_b)?;
            w.write_f64::<LE>(r.w_l)?;
        }
    }

    // block tables
    for list in index.lists() {
        for b in &list.blocks {
            w.write_u32::<LE>(b.first_index)?;
            w.write_u32::<LE>(b.last_index)?;
            w.write_u32::<LE>(b.max_doc_id)?;
            w.write_f64::<LE>(b.delta_b)?;
            w.write_f64::<LE>(b.delta_l)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an index written by [`serialize_index`].
pub fn load_index(path: impl AsRef<Path>) -> Result<DualIndex> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_section(&mut r, "magic", |r| r.read_exact(&mut magic))?;
    if &magic != MAGIC {
        return Err(Error::IndexFormat {
            section: "magic".into(),
            msg: format!("bad magic bytes {magic:?}"),
        });
    }
    let version = read_section(&mut r, "version", |r| r.read_u32::<LE>())?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let (num_docs, avg_doc_length, block_size, fill, include_learned_zero, num_terms) =
        read_section(&mut r, "header", |r| {
            let num_docs = r.read_u32::<LE>()?;
            let avg = r.read_f64::<LE>()?;
            let block_size = r.read_u32::<LE>()?;
            let fill = r.read_u8()?;
            let keep = r.read_u8()?;
            let num_terms = r.read_u32::<LE>()?;
            Ok::<_, std::io::Error>((num_docs, avg, block_size, fill, keep, num_terms))
        })?;
    let fill = fill_from_code(fill)?;
    if block_size == 0 {
        return Err(Error::IndexFormat {
            section: "header".into(),
            msg: "block_size must be >= 1".into(),
        });
    }

    let mut doc_lengths = Vec::with_capacity(num_docs as usize);
    read_section(&mut r, "doc_lengths", |r| {
        for _ in 0..num_docs {
            doc_lengths.push(r.read_u32::<LE>()?);
        }
        Ok::<_, std::io::Error>(())
    })?;

    struct TermEntry {
        term_id: u32,
        num_records: u64,
        num_blocks: u32,
        sigma_b: f64,
        sigma_l: f64,
    }
    let mut table = Vec::with_capacity(num_terms as usize);
    read_section(&mut r, "term_table", |r| {
        for _ in 0..num_terms {
            table.push(TermEntry {
                term_id: r.read_u32::<LE>()?,
                num_records: r.read_u64::<LE>()?,
                num_blocks: r.read_u32::<LE>()?,
                sigma_b: r.read_f64::<LE>()?,
                sigma_l: r.read_f64::<LE>()?,
            });
        }
        Ok::<_, std::io::Error>(())
    })?;
    for pair in table.windows(2) {
        if pair[0].term_id >= pair[1].term_id {
            return Err(Error::IndexFormat {
                section: "term_table".into(),
                msg: format!("term ids not strictly ascending at {}", pair[1].term_id),
            });
        }
    }

    let mut all_records: Vec<Vec<PostingRecord>> = Vec::with_capacity(table.len());
    read_section(&mut r, "postings", |r| {
        for entry in &table {
            let mut records = Vec::with_capacity(entry.num_records as usize);
            for _ in 0..entry.num_records {
                records.push(PostingRecord {
                    doc_id: r.read_u32::<LE>()?,
                    tf: r.read_u32::<LE>()?,
                    w_b: r.read_f64::<LE>()?,
                    w_l: r.read_f64::<LE>()?,
                });
            }
            all_records.push(records);
        }
        Ok::<_, std::io::Error>(())
    })?;
    for (entry, records) in table.iter().zip(&all_records) {
        for pair in records.windows(2) {
            if pair[0].doc_id >= pair[1].doc_id {
                return Err(Error::IndexFormat {
                    section: "postings".into(),
                    msg: format!(
                        "doc ids not strictly ascending in term {} near doc {}",
                        entry.term_id, pair[1].doc_id
                    ),
                });
            }
        }
        if records.iter().any(|rec| rec.doc_id >= num_docs) {
            return Err(Error::IndexFormat {
                section: "postings".into(),
                msg: format!("doc id out of range in term {}", entry.term_id),
            });
        }
    }

    let mut lists = BTreeMap::new();
    read_section(&mut r, "block_tables", |r| {
        for (entry, records) in table.iter().zip(all_records.drain(..)) {
            let mut blocks = Vec::with_capacity(entry.num_blocks as usize);
            for _ in 0..entry.num_blocks {
                blocks.push(BlockMeta {
                    first_index: r.read_u32::<LE>()?,
                    last_index: r.read_u32::<LE>()?,
                    max_doc_id: r.read_u32::<LE>()?,
                    delta_b: r.read_f64::<LE>()?,
                    delta_l: r.read_f64::<LE>()?,
                });
            }
            lists.insert(
                entry.term_id,
                PostingList {
                    term_id: entry.term_id,
                    records,
                    sigma_b: entry.sigma_b,
                    sigma_l: entry.sigma_l,
                    blocks,
                },
            );
        }
        Ok::<_, std::io::Error>(())
    })?;
    for list in lists.values() {
        validate_blocks(list)?;
    }

    // trailing garbage is a malformed file, not silently ignored
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => {
            return Err(Error::IndexFormat {
                section: "block_tables".into(),
                msg: "trailing bytes after final section".into(),
            })
        }
        Err(e) => return Err(e.into()),
    }

    Ok(DualIndex::from_parts(
        num_docs,
        doc_lengths,
        avg_doc_length,
        block_size,
        AlignmentMode {
            fill,
            include_learned_zero: include_learned_zero != 0,
        },
        lists,
    ))
}

fn validate_blocks(list: &PostingList) -> Result<()> {
    let n = list.records.len() as u32;
    let mut expected_first = 0u32;
    for b in &list.blocks {
        if b.first_index != expected_first || b.last_index < b.first_index || b.last_index >= n {
            return Err(Error::IndexFormat {
                section: "block_tables".into(),
                msg: format!(
                    "blocks do not partition term {} (block {}..{} over {} records)",
                    list.term_id, b.first_index, b.last_index, n
                ),
            });
        }
        expected_first = b.last_index + 1;
    }
    if expected_first != n {
        return Err(Error::IndexFormat {
            section: "block_tables".into(),
            msg: format!("blocks cover {expected_first} of {n} records in term {}", list.term_id),
        });
    }
    Ok(())
}

/// Maps early EOF and IO failures to a parse error naming the section.
fn read_section<R, T, E>(
    reader: &mut R,
    section: &str,
    f: impl FnOnce(&mut R) -> std::result::Result<T, E>,
) -> Result<T>
where
    E: Into<std::io::Error>,
{
    f(reader).map_err(|e| {
        let e: std::io::Error = e.into();
        Error::IndexFormat {
            section: section.into(),
            msg: e.to_string(),
        }
    })
}
