use crate::error::{Error, Result};

/// A vote in `{-1, 0, +1}`; zero means the source abstained.
pub type Vote = i8;

/// Dense `n × m` matrix of source votes, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: usize,
    sources: usize,
    votes: Vec<Vote>,
}

impl LabelMatrix {
    /// Builds a matrix from row-major votes, rejecting anything outside `{-1, 0, 1}`.
    pub fn new(rows: usize, sources: usize, votes: Vec<Vote>) -> Result<Self> {
        if votes.len() != rows * sources {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{sources} = {} entries", rows * sources),
                found: format!("{} entries", votes.len()),
            });
        }
        if let Some(pos) = votes.iter().position(|v| !(-1..=1).contains(v)) {
            return Err(Error::InvalidVote {
                row: pos / sources.max(1),
                column: pos % sources.max(1),
                value: votes[pos] as i64,
            });
        }
        Ok(Self { rows, sources, votes })
    }

    pub fn from_rows<R: AsRef<[Vote]>>(rows: &[R]) -> Result<Self> {
        let sources = rows.first().map_or(0, |r| r.as_ref().len());
        let mut votes = Vec::with_capacity(rows.len() * sources);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != sources {
                return Err(Error::ShapeMismatch {
                    expected: format!("{sources} columns"),
                    found: format!("{} columns in row {r}", row.len()),
                });
            }
            votes.extend_from_slice(row);
        }
        Self::new(rows.len(), sources, votes)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    pub fn get(&self, row: usize, source: usize) -> Vote {
        self.votes[row * self.sources + source]
    }

    pub fn row(&self, row: usize) -> &[Vote] {
        &self.votes[row * self.sources..(row + 1) * self.sources]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Vote]> + '_ {
        self.votes.chunks_exact(self.sources.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[Vote] {
        &self.votes
    }

    /// Copy of the matrix with every vote mapped through `f`.
    pub fn map(&self, mut f: impl FnMut(usize, usize, Vote) -> Vote) -> Result<Self> {
        let mut votes = Vec::with_capacity(self.votes.len());
        for r in 0..self.rows {
            for c in 0..self.sources {
                votes.push(f(r, c, self.get(r, c)));
            }
        }
        Self::new(self.rows, self.sources, votes)
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            sources: self.sources,
            votes: self.votes[start * self.sources..end * self.sources].to_vec(),
        }
    }
}
