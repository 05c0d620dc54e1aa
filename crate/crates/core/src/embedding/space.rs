use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two graphs an identifier belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Kg1,
    Kg2,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Kg1, Side::Kg2];

    pub fn index(self) -> usize {
        match self {
            Side::Kg1 => 0,
            Side::Kg2 => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Kg1 => Side::Kg2,
            Side::Kg2 => Side::Kg1,
        }
    }
}

/// Dense row-major table of `dim`-sized vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    dim: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// I.i.d. uniform in `[-bound, bound]`.
    pub fn uniform(rows: usize, dim: usize, bound: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn normalize_row(&mut self, i: usize) {
        let row = self.row_mut(i);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }

    pub fn normalize_all(&mut self) {
        for i in 0..self.rows() {
            self.normalize_row(i);
        }
    }

    /// Serialises as row-major little-endian `f32`.
    fn write_f32(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for &x in &self.data {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    fn read_f32(path: &Path, rows: usize, dim: usize) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() != rows * dim * 4 {
            return Err(Error::Validation(format!(
                "{}: expected {} bytes for {rows}x{dim} f32, found {}",
                path.display(),
                rows * dim * 4,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self { dim, data })
    }
}

pub type Index = BTreeMap<String, usize>;

/// Entity, relation, attribute and character vectors for a pair of KGs.
///
/// Rows of one table may be addressed from both sides; under parameter
/// sharing an aligned pair maps to a single entity row. `transform`, when
/// present, maps KG1 entity vectors into the KG2 space.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    pub dim: usize,
    pub normalized: bool,
    pub entities: Table,
    pub entity_index: [Index; 2],
    pub relations: Table,
    pub relation_index: [Index; 2],
    pub attributes: Option<Table>,
    pub attribute_index: [Index; 2],
    /// Row 0 is the shared unknown-character vector.
    pub chars: Option<Table>,
    pub char_index: BTreeMap<char, usize>,
    /// Row-major `dim x dim`.
    pub transform: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Metadata {
    dim: usize,
    normalized: bool,
    entity_rows: usize,
    relation_rows: usize,
    attribute_rows: Option<usize>,
    char_rows: Option<usize>,
    transform: bool,
}

impl EmbeddingSpace {
    pub fn new(dim: usize, entities: Table, entity_index: [Index; 2], relations: Table, relation_index: [Index; 2]) -> Self {
        Self {
            dim,
            normalized: false,
            entities,
            entity_index,
            relations,
            relation_index,
            attributes: None,
            attribute_index: [Index::new(), Index::new()],
            chars: None,
            char_index: BTreeMap::new(),
            transform: None,
        }
    }

    pub fn entity_row(&self, side: Side, id: &str) -> Option<usize> {
        self.entity_index[side.index()].get(id).copied()
    }

    pub fn entity(&self, side: Side, id: &str) -> Option<&[f64]> {
        self.entity_row(side, id).map(|r| self.entities.row(r))
    }

    /// Entity vector in the shared comparison space: KG1 vectors pass
    /// through the transform when one is present.
    pub fn aligned_entity(&self, side: Side, id: &str) -> Option<Vec<f64>> {
        let v = self.entity(side, id)?;
        Some(match (&self.transform, side) {
            (Some(m), Side::Kg1) => mat_vec(m, v, self.dim),
            _ => v.to_vec(),
        })
    }

    /// Stacks the comparison-space vectors of `ids`; unknown ids are an error.
    pub fn aligned_matrix(&self, side: Side, ids: &[String]) -> Result<ndarray::Array2<f64>> {
        let mut out = ndarray::Array2::zeros((ids.len(), self.dim));
        for (i, id) in ids.iter().enumerate() {
            let v = self
                .aligned_entity(side, id)
                .ok_or_else(|| Error::Validation(format!("no embedding for {side:?} entity {id}")))?;
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&v[..]));
        }
        Ok(out)
    }

    pub fn max_entity_norm_error(&self) -> f64 {
        (0..self.entities.rows())
            .map(|i| (l2(self.entities.row(i)) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = Metadata {
            dim: self.dim,
            normalized: self.normalized,
            entity_rows: self.entities.rows(),
            relation_rows: self.relations.rows(),
            attribute_rows: self.attributes.as_ref().map(Table::rows),
            char_rows: self.chars.as_ref().map(Table::rows),
            transform: self.transform.is_some(),
        };
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        self.entities.write_f32(&dir.join("entities.bin"))?;
        self.relations.write_f32(&dir.join("relations.bin"))?;
        for side in Side::BOTH {
            let n = side.index() + 1;
            write_index(&dir.join(format!("entities_{n}.tsv")), &self.entity_index[side.index()])?;
            write_index(&dir.join(format!("relations_{n}.tsv")), &self.relation_index[side.index()])?;
        }
        if let Some(attrs) = &self.attributes {
            attrs.write_f32(&dir.join("attributes.bin"))?;
            for side in Side::BOTH {
                let n = side.index() + 1;
                write_index(&dir.join(format!("attributes_{n}.tsv")), &self.attribute_index[side.index()])?;
            }
        }
        if let Some(chars) = &self.chars {
            chars.write_f32(&dir.join("chars.bin"))?;
            let idx: Index = self
                .char_index
                .iter()
                .map(|(c, &r)| ((*c as u32).to_string(), r))
                .collect();
            write_index(&dir.join("chars.tsv"), &idx)?;
        }
        if let Some(m) = &self.transform {
            Table::from_vec(self.dim, m.clone())?.write_f32(&dir.join("transform.bin"))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        if !meta_path.exists() {
            return Err(Error::MissingFile(meta_path));
        }
        let meta: Metadata = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        let d = meta.dim;
        let entities = Table::read_f32(&dir.join("entities.bin"), meta.entity_rows, d)?;
        let relations = Table::read_f32(&dir.join("relations.bin"), meta.relation_rows, d)?;
        let mut entity_index = [Index::new(), Index::new()];
        let mut relation_index = [Index::new(), Index::new()];
        let mut attribute_index = [Index::new(), Index::new()];
        for side in Side::BOTH {
            let n = side.index() + 1;
            entity_index[side.index()] = read_index(&dir.join(format!("entities_{n}.tsv")), meta.entity_rows)?;
            relation_index[side.index()] = read_index(&dir.join(format!("relations_{n}.tsv")), meta.relation_rows)?;
        }
        let attributes = match meta.attribute_rows {
            Some(rows) => {
                for side in Side::BOTH {
                    let n = side.index() + 1;
                    attribute_index[side.index()] = read_index(&dir.join(format!("attributes_{n}.tsv")), rows)?;
                }
                Some(Table::read_f32(&dir.join("attributes.bin"), rows, d)?)
            }
            None => None,
        };
        let (chars, char_index) = match meta.char_rows {
            Some(rows) => {
                let raw = read_index(&dir.join("chars.tsv"), rows)?;
                let mut idx = BTreeMap::new();
                for (code, r) in raw {
                    let c = code
                        .parse::<u32>()
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| Error::Validation(format!("bad character code {code}")))?;
                    idx.insert(c, r);
                }
                (Some(Table::read_f32(&dir.join("chars.bin"), rows, d)?), idx)
            }
            None => (None, BTreeMap::new()),
        };
        let transform = if meta.transform {
            Some(Table::read_f32(&dir.join("transform.bin"), d, d)?.data)
        } else {
            None
        };
        Ok(Self {
            dim: d,
            normalized: meta.normalized,
            entities,
            entity_index,
            relations,
            relation_index,
            attributes,
            attribute_index,
            chars,
            char_index,
            transform,
        })
    }
}

fn write_index(path: &Path, index: &Index) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in index {
        writeln!(w, "{k}\t{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_index(path: &Path, rows: usize) -> Result<Index> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut index = Index::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected identifier<TAB>row".into()))?;
        let row: usize = v.parse().map_err(|_| parse_err(format!("bad row number {v}")))?;
        if row >= rows {
            return Err(parse_err(format!("row {row} out of range ({rows} rows)")));
        }
        index.insert(k.to_string(), row);
    }
    Ok(index)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `m * v` for a row-major `dim x dim` matrix.
pub fn mat_vec(m: &[f64], v: &[f64], dim: usize) -> Vec<f64> {
    (0..dim).map(|i| dot(&m[i * dim..(i + 1) * dim], v)).collect()
}

pub(crate) fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample_space() -> EmbeddingSpace {
        let mut r = rng::seeded(1);
        let mut ent = [Index::new(), Index::new()];
        ent[0].insert("a".into(), 0);
        ent[0].insert("b".into(), 1);
        ent[1].insert("x".into(), 1);
        ent[1].insert("y".into(), 2);
        let mut rel = [Index::new(), Index::new()];
        rel[0].insert("r".into(), 0);
        rel[1].insert("q".into(), 1);
        let mut s = EmbeddingSpace::new(3, Table::uniform(3, 3, 1.0, &mut r), ent, Table::uniform(2, 3, 1.0, &mut r), rel);
        s.entities.normalize_all();
        s.normalized = true;
        s.chars = Some(Table::uniform(3, 3, 1.0, &mut r));
        s.char_index.insert('\t', 1);
        s.char_index.insert('é', 2);
        s.transform = Some(vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        s
    }

    #[test]
    fn save_load_round_trip_at_f32_precision() {
        let s = sample_space();
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        let back = EmbeddingSpace::load(dir.path()).unwrap();
        assert_eq!(back.entity_index, s.entity_index);
        assert_eq!(back.char_index, s.char_index);
        for (a, b) in back.entities.as_slice().iter().zip(s.entities.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
        // A second save of the loaded space is byte-identical.
        let dir2 = tempfile::tempdir().unwrap();
        back.save(dir2.path()).unwrap();
        for f in ["entities.bin", "entities_1.tsv", "chars.tsv", "transform.bin", "meta.json"] {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(dir2.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn shared_rows_and_transform() {
        let s = sample_space();
        assert_eq!(s.entity(Side::Kg1, "b"), s.entity(Side::Kg2, "x"));
        let mapped = s.aligned_entity(Side::Kg1, "a").unwrap();
        let raw = s.entity(Side::Kg1, "a").unwrap();
        assert_eq!(mapped[1], 2.0 * raw[1]);
        assert!(s.aligned_entity(Side::Kg2, "nope").is_none());
        assert!(s.max_entity_norm_error() < 1e-12);
    }

    #[test]
    fn corrupt_binary_rejected() {
        let s = sample_space();
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        fs::write(dir.path().join("entities.bin"), [0u8; 5]).unwrap();
        assert!(EmbeddingSpace::load(dir.path()).is_err());
    }
}
