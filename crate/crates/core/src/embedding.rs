//! Per-token contextual embeddings and the `CEMB` binary container.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CEMB" | u32 version = 1 | u32 dim | u64 sentence_count
//! per sentence: u32 token_count n | n * dim f32, row-major
//! ```
//!
//! Record `k` pairs with line `k` of a companion token file.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("truncated file: {0}")]
    Truncated(&'static str),
    #[error("trailing bytes after the last record")]
    TrailingBytes,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("sentence has dimension {found}, corpus has {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("word spans must partition {pieces} piece rows in order: {reason}")]
    BadSpans { pieces: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Contextual vectors for the tokens of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    dim: usize,
    data: Vec<f32>,
}

impl SentenceEmbedding {
    /// Builds from row-major values; `data.len()` must be a multiple of `dim`.
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDim);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(EmbeddingError::Shape {
                expected: data.len().div_ceil(dim) * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(SentenceEmbedding { dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(dim: usize, rows: &[R]) -> Result<Self, EmbeddingError> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(EmbeddingError::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        SentenceEmbedding::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCorpus {
    dim: usize,
    sentences: Vec<SentenceEmbedding>,
}

impl EmbeddingCorpus {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDim);
        }
        Ok(EmbeddingCorpus {
            dim,
            sentences: Vec::new(),
        })
    }

    pub fn push(&mut self, sentence: SentenceEmbedding) -> Result<(), EmbeddingError> {
        if sentence.dim != self.dim {
            return Err(EmbeddingError::DimMismatch {
                expected: self.dim,
                found: sentence.dim,
            });
        }
        self.sentences.push(sentence);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&SentenceEmbedding> {
        self.sentences.get(k)
    }

    pub fn sentences(&self) -> &[SentenceEmbedding] {
        &self.sentences
    }
}

pub fn encode_embeddings(corpus: &EmbeddingCorpus, out: &mut impl Write) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(corpus.dim as u32).to_le_bytes())?;
    out.write_all(&(corpus.sentences.len() as u64).to_le_bytes())?;
    for s in &corpus.sentences {
        out.write_all(&(s.len() as u32).to_le_bytes())?;
        for x in &s.data {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<const N: usize>(
    input: &mut impl Read,
    what: &'static str,
) -> Result<[u8; N], EmbeddingError> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|_| EmbeddingError::Truncated(what))?;
    Ok(buf)
}

pub fn decode_embeddings(input: &mut impl Read) -> Result<EmbeddingCorpus, EmbeddingError> {
    let magic = read_exact::<4>(input, "magic")?;
    if &magic != MAGIC {
        return Err(EmbeddingError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(read_exact(input, "version")?);
    if version != VERSION {
        return Err(EmbeddingError::Version(version));
    }
    let dim = u32::from_le_bytes(read_exact(input, "dim")?) as usize;
    let count = u64::from_le_bytes(read_exact(input, "sentence count")?);
    let mut corpus = EmbeddingCorpus::new(dim)?;
    for _ in 0..count {
        let n = u32::from_le_bytes(read_exact(input, "token count")?) as usize;
        let mut bytes = vec![0u8; n * dim * 4];
        input
            .read_exact(&mut bytes)
            .map_err(|_| EmbeddingError::Truncated("vector data"))?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        corpus.sentences.push(SentenceEmbedding::new(dim, data)?);
    }
    let mut probe = [0u8; 1];
    match input.read(&mut probe) {
        Ok(0) => Ok(corpus),
        _ => Err(EmbeddingError::TrailingBytes),
    }
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingCorpus, EmbeddingError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_embeddings(&mut BufReader::new(file))
}

pub fn write_embeddings(
    corpus: &EmbeddingCorpus,
    path: impl AsRef<Path>,
) -> Result<(), EmbeddingError> {
    let path = path.as_ref();
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    encode_embeddings(corpus, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Reads a companion token file: one sentence per line, space-separated.
pub fn read_token_file(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>, EmbeddingError> {
    let path = path.as_ref();
    let io_err = |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    BufReader::new(file)
        .lines()
        .map(|l| {
            l.map(|l| l.split_whitespace().map(str::to_string).collect())
                .map_err(io_err)
        })
        .collect()
}

/// Pools subword piece vectors into word vectors: row `w` of the result is
/// the mean of the piece rows in `word_spans[w]` (inclusive bounds). Spans
/// must cover every piece row exactly once, in order.
pub fn average_subwords<R: AsRef<[f32]>>(
    piece_vectors: &[R],
    word_spans: &[(usize, usize)],
) -> Result<SentenceEmbedding, EmbeddingError> {
    let pieces = piece_vectors.len();
    let bad = |reason: String| EmbeddingError::BadSpans { pieces, reason };
    let dim = piece_vectors
        .first()
        .map(|r| r.as_ref().len())
        .ok_or_else(|| bad("no pieces".into()))?;
    if dim == 0 {
        return Err(EmbeddingError::ZeroDim);
    }
    let mut expected_start = 0;
    let mut data = Vec::with_capacity(word_spans.len() * dim);
    let mut acc = vec![0f64; dim];
    for (w, &(start, end)) in word_spans.iter().enumerate() {
        if start != expected_start {
            return Err(bad(format!(
                "word {w} starts at {start}, expected {expected_start}"
            )));
        }
        if end < start {
            return Err(bad(format!("word {w} ends before it starts")));
        }
        if end >= pieces {
            return Err(bad(format!("word {w} ends at {end}")));
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
        for row in &piece_vectors[start..=end] {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(EmbeddingError::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (a, &x) in acc.iter_mut().zip(row) {
                *a += f64::from(x);
            }
        }
        let n = (end - start + 1) as f64;
        data.extend(acc.iter().map(|a| (a / n) as f32));
        expected_start = end + 1;
    }
    if expected_start != pieces {
        return Err(bad(format!("rows {expected_start}.. are not covered")));
    }
    SentenceEmbedding::new(dim, data)
}
