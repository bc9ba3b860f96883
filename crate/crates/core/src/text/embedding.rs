//! Pretrained word vectors in the word2vec text format: a header line
//! `<vocab_size> <dimension>` followed by one `term v1 .. vD` line per term.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    terms: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            terms: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::new(dim)?;
        for (term, v) in entries {
            table.insert(term.into(), v)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, term: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Input(format!(
                "vector for `{term}` has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(&term) {
            return Err(Error::Input(format!("duplicate term `{term}`")));
        }
        self.index.insert(term.clone(), self.terms.len());
        self.terms.push(term);
        self.data.extend(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.index
            .get(term)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// Re-keys the vocabulary through `normalize`. Terms mapping to `None`
    /// are dropped; terms that collide are averaged, keyed in first-seen order.
    pub fn rekeyed<F>(&self, mut normalize: F) -> Self
    where
        F: FnMut(&str) -> Option<String>,
    {
        let mut order: Vec<String> = Vec::new();
        let mut sums: HashMap<String, (Vec<f64>, usize)> = HashMap::new();
        for (i, term) in self.terms.iter().enumerate() {
            let Some(key) = normalize(term) else { continue };
            let v = &self.data[i * self.dim..(i + 1) * self.dim];
            match sums.get_mut(&key) {
                Some((acc, n)) => {
                    acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
                    *n += 1;
                }
                None => {
                    order.push(key.clone());
                    sums.insert(key, (v.to_vec(), 1));
                }
            }
        }
        let mut out = Self {
            dim: self.dim,
            terms: Vec::with_capacity(order.len()),
            index: HashMap::with_capacity(order.len()),
            data: Vec::with_capacity(order.len() * self.dim),
        };
        for key in order {
            let (acc, n) = sums.remove(&key).expect("key recorded");
            let v = acc.into_iter().map(|x| x / n as f64).collect();
            out.insert(key, v).expect("unique keys, matching dimension");
        }
        out
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, term) in self.terms.iter().enumerate() {
            write!(w, "{term}")?;
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Format {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Format {
        line: 1,
        message: format!("header must be `<vocab_size> <dimension>`, got `{header}`"),
    };
    if fields.len() != 2 {
        return Err(bad_header());
    }
    let vocab: usize = fields[0].parse().map_err(|_| bad_header())?;
    let dim: usize = fields[1].parse().map_err(|_| bad_header())?;
    if dim == 0 {
        return Err(Error::Format {
            line: 1,
            message: "dimension must be positive".into(),
        });
    }

    let mut table = EmbeddingTable::new(dim)?;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if table.len() == vocab {
            return Err(Error::Format {
                line: lineno,
                message: format!("more rows than the declared vocabulary size {vocab}"),
            });
        }
        let mut parts = line.split_whitespace();
        let term = parts.next().expect("non-blank line").to_string();
        let mut vector = Vec::with_capacity(dim);
        for p in parts {
            let x: f64 = p.parse().map_err(|_| Error::Format {
                line: lineno,
                message: format!("non-numeric component `{p}` for `{term}`"),
            })?;
            if !x.is_finite() {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("non-finite component for `{term}`"),
                });
            }
            vector.push(x);
        }
        if vector.len() != dim {
            return Err(Error::Format {
                line: lineno,
                message: format!(
                    "`{term}` has {} components, expected {dim}",
                    vector.len()
                ),
            });
        }
        if table.contains(&term) {
            return Err(Error::Format {
                line: lineno,
                message: format!("duplicate term `{term}`"),
            });
        }
        table.insert(term, vector)?;
    }
    if table.len() != vocab {
        return Err(Error::Format {
            line: text.lines().count(),
            message: format!(
                "header declares {vocab} terms but {} were found",
                table.len()
            ),
        });
    }
    Ok(table)
}
