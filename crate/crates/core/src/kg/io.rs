//! Tab-separated dataset layout:
//!
//! ```text
//! rel_triples_1   rel_triples_2      head \t relation \t tail
//! attr_triples_1  attr_triples_2     entity \t attribute \t literal   (optional)
//! entities_1      entities_2         entity                           (optional)
//! ent_links                          kg1 entity \t kg2 entity
//! folds/<k>/{train_links,valid_links,test_links}                      (optional, k = 1..5)
//! ```
//!
//! `entities_*` lists the full entity set so that entities without any
//! triple survive a write/load round trip.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{AlignmentSet, DatasetBundle, Fold, KnowledgeGraph, FOLD_COUNT};
use crate::error::{Error, Result};

/// Record counts per file read by [`load_dataset_with_report`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub files: Vec<(String, usize)>,
}

/// Reads tab-separated records of exactly `fields` columns. When
/// `literal_tail` is set the last column may itself contain tabs.
fn read_records(path: &Path, fields: usize, literal_tail: bool) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let found = line.split('\t').count();
        let arity_ok = if literal_tail { found >= fields } else { found == fields };
        let parts: Vec<String> = line.splitn(fields, '\t').map(str::to_owned).collect();
        if !arity_ok || parts[..fields - 1].iter().any(String::is_empty) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected {fields} tab-separated fields, found {found}"),
            });
        }
        out.push(parts);
    }
    Ok(out)
}

fn into_triples(records: Vec<Vec<String>>) -> Vec<(String, String, String)> {
    records
        .into_iter()
        .map(|r| {
            let mut it = r.into_iter();
            (it.next().unwrap(), it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

pub fn read_rel_triples(path: &Path) -> Result<Vec<(String, String, String)>> {
    Ok(into_triples(read_records(path, 3, false)?))
}

pub fn read_attr_triples(path: &Path) -> Result<Vec<(String, String, String)>> {
    Ok(into_triples(read_records(path, 3, true)?))
}

pub fn read_links(path: &Path) -> Result<AlignmentSet> {
    Ok(read_records(path, 2, false)?
        .into_iter()
        .map(|r| {
            let mut it = r.into_iter();
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect())
}

fn read_entities(path: &Path) -> Result<Vec<String>> {
    Ok(read_records(path, 1, false)?
        .into_iter()
        .map(|mut r| r.remove(0))
        .collect())
}

pub fn load_dataset(root: &Path) -> Result<DatasetBundle> {
    load_dataset_with_report(root).map(|(b, _)| b)
}

pub fn load_dataset_with_report(root: &Path) -> Result<(DatasetBundle, LoadReport)> {
    let mut report = LoadReport::default();
    let mut count = |name: &str, n: usize| report.files.push((name.to_string(), n));

    let mut kgs = Vec::with_capacity(2);
    for side in 1..=2 {
        let rel_name = format!("rel_triples_{side}");
        let rel = read_rel_triples(&root.join(&rel_name))?;
        count(&rel_name, rel.len());

        let attr_name = format!("attr_triples_{side}");
        let attr_path = root.join(&attr_name);
        let attr = if attr_path.exists() {
            let a = read_attr_triples(&attr_path)?;
            count(&attr_name, a.len());
            a
        } else {
            Vec::new()
        };

        let ent_name = format!("entities_{side}");
        let ent_path = root.join(&ent_name);
        let entities = if ent_path.exists() {
            let e = read_entities(&ent_path)?;
            count(&ent_name, e.len());
            e
        } else {
            Vec::new()
        };
        kgs.push(KnowledgeGraph::from_parts(entities, rel, attr));
    }

    let links = read_links(&root.join("ent_links"))?;
    count("ent_links", links.len());

    let folds_dir = root.join("folds");
    let folds = if folds_dir.is_dir() {
        let mut folds = Vec::with_capacity(FOLD_COUNT);
        for k in 1..=FOLD_COUNT {
            let dir = folds_dir.join(k.to_string());
            let mut part = |name: &str| -> Result<AlignmentSet> {
                let set = read_links(&dir.join(name))?;
                count(&format!("folds/{k}/{name}"), set.len());
                Ok(set)
            };
            folds.push(Fold {
                train: part("train_links")?,
                valid: part("valid_links")?,
                test: part("test_links")?,
            });
        }
        Some(folds)
    } else {
        None
    };

    let kg2 = kgs.pop().unwrap();
    let kg1 = kgs.pop().unwrap();
    let bundle = DatasetBundle {
        kg1,
        kg2,
        links,
        folds,
    };
    bundle.validate()?;
    for (name, n) in &report.files {
        log::info!("{}: {n} records", name);
    }
    Ok((bundle, report))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_alignment(path: &Path, links: &AlignmentSet) -> Result<()> {
    let mut w = create(path)?;
    for (a, b) in links.iter() {
        writeln!(w, "{a}\t{b}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one graph's `rel_triples_<side>`, `attr_triples_<side>` and
/// `entities_<side>` files in canonical (sorted) order.
pub fn write_kg_files(root: &Path, side: usize, kg: &KnowledgeGraph) -> Result<Vec<PathBuf>> {
    let rel_path = root.join(format!("rel_triples_{side}"));
    let mut w = create(&rel_path)?;
    for (h, r, t) in kg.named_rel_triples() {
        writeln!(w, "{h}\t{r}\t{t}")?;
    }
    w.flush()?;

    let attr_path = root.join(format!("attr_triples_{side}"));
    let mut w = create(&attr_path)?;
    for (e, a, v) in kg.named_attr_triples() {
        writeln!(w, "{e}\t{a}\t{v}")?;
    }
    w.flush()?;

    let ent_path = root.join(format!("entities_{side}"));
    let mut w = create(&ent_path)?;
    for e in kg.entities() {
        writeln!(w, "{e}")?;
    }
    w.flush()?;
    Ok(vec![rel_path, attr_path, ent_path])
}

/// Writes the full layout and returns the paths written.
pub fn write_dataset(bundle: &DatasetBundle, root: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(root)?;
    let mut written = write_kg_files(root, 1, &bundle.kg1)?;
    written.extend(write_kg_files(root, 2, &bundle.kg2)?);

    let links_path = root.join("ent_links");
    write_alignment(&links_path, &bundle.links.sorted())?;
    written.push(links_path);

    if let Some(folds) = &bundle.folds {
        for (k, fold) in folds.iter().enumerate() {
            let dir = root.join("folds").join((k + 1).to_string());
            for (name, part) in [
                ("train_links", &fold.train),
                ("valid_links", &fold.valid),
                ("test_links", &fold.test),
            ] {
                let p = dir.join(name);
                write_alignment(&p, part)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::make_folds;

    fn write(dir: &Path, name: &str, body: &str) {
        let p = dir.join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    fn minimal(dir: &Path) {
        write(dir, "rel_triples_1", "a\tr\tb\nb\tr\tc\n");
        write(dir, "rel_triples_2", "x\tq\ty\ny\tq\tz\n");
        write(dir, "ent_links", "a\tx\n");
    }

    #[test]
    fn minimal_dataset_loads() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        let (b, report) = load_dataset_with_report(dir.path()).unwrap();
        assert_eq!(b.links.len(), 1);
        assert_eq!(b.kg1.rel_triples().len(), 2);
        assert!(b.folds.is_none());
        assert!(report.files.contains(&("ent_links".to_string(), 1)));
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "rel_triples_1", "a\tr\tb\n");
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(&err, Error::MissingFile(p) if p.ends_with("rel_triples_2")), "{err}");
    }

    #[test]
    fn short_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), "rel_triples_1", "a\tr\tb\na\tr\n");
        match load_dataset(dir.path()).unwrap_err() {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert!(path.ends_with("rel_triples_1"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn long_rel_line_rejected() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), "rel_triples_2", "x\tq\ty\tw\n");
        assert!(matches!(load_dataset(dir.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn dangling_link_rejected() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), "ent_links", "a\tx\nnope\ty\n");
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn duplicate_lines_dropped_and_literals_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), "rel_triples_1", "a\tr\tb\na\tr\tb\nb\tr\tc\n");
        write(dir.path(), "attr_triples_1", "a\tname\t\"Alpha\"@en\ta\n");
        let b = load_dataset(dir.path()).unwrap();
        assert_eq!(b.kg1.rel_triples().len(), 2);
        assert_eq!(b.kg1.named_attr_triples().next().unwrap().2, "\"Alpha\"@en\ta");
    }

    #[test]
    fn round_trip_is_canonical() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "rel_triples_1", "c\tr\ta\na\tr\tb\nb\ts\tc\n");
        write(dir.path(), "rel_triples_2", "z\tq\tx\nx\tq\ty\n");
        write(dir.path(), "attr_triples_1", "a\tname\tA\n");
        let links: String = ["a\tx", "b\ty", "c\tz"].join("\n");
        write(dir.path(), "ent_links", &links);
        let mut b = load_dataset(dir.path()).unwrap();

        let extra: AlignmentSet = (0..10).map(|i| (format!("p{i}"), format!("q{i}"))).collect();
        let mut kg1_ents: Vec<String> = b.kg1.entities().to_vec();
        kg1_ents.extend(extra.sources().map(str::to_owned));
        let mut kg2_ents: Vec<String> = b.kg2.entities().to_vec();
        kg2_ents.extend(extra.targets().map(str::to_owned));
        b.kg1 = KnowledgeGraph::from_parts(
            kg1_ents,
            b.kg1.named_rel_triples().map(|(h, r, t)| (h.into(), r.into(), t.into())),
            b.kg1.named_attr_triples().map(|(h, r, t)| (h.into(), r.into(), t.into())),
        );
        b.kg2 = KnowledgeGraph::from_parts(
            kg2_ents,
            b.kg2.named_rel_triples().map(|(h, r, t)| (h.into(), r.into(), t.into())),
            std::iter::empty(),
        );
        let mut all = b.links.clone().into_pairs();
        all.extend(extra.into_pairs());
        b.links = AlignmentSet::new(all);
        b.folds = Some(make_folds(&b.links, 5).unwrap());

        let out = tempfile::tempdir().unwrap();
        write_dataset(&b, out.path()).unwrap();
        let again = load_dataset(out.path()).unwrap();
        assert_eq!(again.kg1, b.kg1);
        assert_eq!(again.kg2, b.kg2);
        assert_eq!(again.folds, b.folds);

        let out2 = tempfile::tempdir().unwrap();
        write_dataset(&again, out2.path()).unwrap();
        for name in ["rel_triples_1", "rel_triples_2", "attr_triples_1", "ent_links", "folds/3/test_links"] {
            assert_eq!(
                fs::read(out.path().join(name)).unwrap(),
                fs::read(out2.path().join(name)).unwrap(),
                "{name}"
            );
        }
        let rel = fs::read_to_string(out.path().join("rel_triples_1")).unwrap();
        assert_eq!(rel, "a\tr\tb\nb\ts\tc\nc\tr\ta\n");
    }
}
