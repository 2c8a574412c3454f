use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functions::Matrix;

use super::manifest::{ColumnRef, DatasetManifestEntry, LabelPosition};
use super::{split, Dataset};

/// A loaded entry: one table, or the predefined train/test pair.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Single(Dataset),
    Partitioned { train: Dataset, test: Dataset },
}

/// Parse the file(s) of `entry` from `dir/<entry name>/`.
///
/// Labels are encoded against one class table shared by both files of a
/// partitioned entry.
pub fn load_dataset(entry: &DatasetManifestEntry, dir: &Path) -> Result<Loaded> {
    entry.validate()?;
    let tables = entry
        .file_names()
        .iter()
        .map(|f| read_table(entry, &dir.join(&entry.name).join(f)))
        .collect::<Result<Vec<_>>>()?;

    let class_names = class_table(tables.iter().flat_map(|t| t.labels.iter().map(String::as_str)));
    if class_names.len() < 2 {
        return Err(Error::SingleClass(class_names.len()));
    }
    if let [first, second] = tables.as_slice() {
        if first.x.ncols() != second.x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}: train file has {} features, test file has {}",
                entry.name,
                first.x.ncols(),
                second.x.ncols()
            )));
        }
    }
    let mut datasets = tables
        .into_iter()
        .map(|t| {
            let y = t
                .labels
                .iter()
                .map(|raw| encode(&class_names, raw))
                .collect();
            Dataset::new(entry.name.clone(), t.x, y, class_names.clone())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(if datasets.len() == 2 {
        let test = datasets.pop().unwrap();
        let train = datasets.pop().unwrap();
        Loaded::Partitioned { train, test }
    } else {
        Loaded::Single(datasets.pop().unwrap())
    })
}

/// Train/test partitions of an entry: the predefined files, or the
/// unshuffled split of a single file at its `test_fraction`.
pub fn load_partitions(entry: &DatasetManifestEntry, dir: &Path) -> Result<(Dataset, Dataset)> {
    match load_dataset(entry, dir)? {
        Loaded::Partitioned { train, test } => Ok((train, test)),
        Loaded::Single(d) => {
            let fraction = entry
                .test_fraction
                .ok_or_else(|| Error::Manifest(format!("{}: missing test_fraction", entry.name)))?;
            split(&d, fraction)
        }
    }
}

struct RawTable {
    x: Matrix,
    labels: Vec<String>,
}

fn read_table(entry: &DatasetManifestEntry, path: &Path) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let header: Option<Vec<String>> = if entry.has_header {
        let (_, line) = lines
            .next()
            .ok_or_else(|| Error::Empty(format!("{} has no header", path.display())))?;
        Some(entry.format.split_line(line).into_iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut layout: Option<Layout> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();

    for (line_no, line) in lines {
        let fields = entry.format.split_line(line);
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(malformed(
                line_no,
                format!("expected {expected} columns, found {}", fields.len()),
            ));
        }
        let layout = match &layout {
            Some(l) => l,
            None => layout.insert(Layout::resolve(entry, header.as_deref(), expected, path)?),
        };
        for &col in &layout.features {
            let raw = fields[col];
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        path: path.to_path_buf(),
                        line: line_no,
                        column: column_label(header.as_deref(), col),
                        value: raw.to_string(),
                    })
                }
            }
        }
        labels.push(fields[layout.label].to_string());
    }

    let Some(layout) = layout else {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    };
    let x = Matrix::from_shape_vec((labels.len(), layout.features.len()), values)
        .map_err(|e| malformed(0, e.to_string()))?;
    Ok(RawTable { x, labels })
}

struct Layout {
    label: usize,
    features: Vec<usize>,
}

impl Layout {
    fn resolve(entry: &DatasetManifestEntry, header: Option<&[String]>, width: usize, path: &Path) -> Result<Self> {
        let resolve = |col: &ColumnRef| -> Result<usize> {
            let idx = match col {
                ColumnRef::Index(i) => Some(*i),
                ColumnRef::Name(name) => header.and_then(|h| h.iter().position(|c| c == name)),
            };
            idx.filter(|&i| i < width).ok_or_else(|| {
                Error::Manifest(format!(
                    "{}: column {col} not found in {}",
                    entry.name,
                    path.display()
                ))
            })
        };
        let label = match &entry.label {
            LabelPosition::First => 0,
            LabelPosition::Last => width - 1,
            LabelPosition::Column(c) => resolve(c)?,
        };
        let dropped = entry
            .drop_columns
            .iter()
            .map(resolve)
            .collect::<Result<BTreeSet<_>>>()?;
        let features: Vec<usize> = (0..width).filter(|c| *c != label && !dropped.contains(c)).collect();
        if features.is_empty() {
            return Err(Error::Manifest(format!("{}: no feature columns left", entry.name)));
        }
        Ok(Layout { label, features })
    }
}

fn column_label(header: Option<&[String]>, col: usize) -> String {
    match header.and_then(|h| h.get(col)) {
        Some(name) => format!("{name:?} (index {col})"),
        None => format!("{col}"),
    }
}

/// Distinct raw labels in ascending order: numerically when every label
/// parses as a number, lexicographically otherwise.
pub(crate) fn class_table<'a>(raw: impl Iterator<Item = &'a str>) -> Vec<String> {
    let distinct: BTreeSet<&str> = raw.collect();
    let mut names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut pairs: Vec<(f64, String)> = keys.into_iter().zip(names).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(&b.1)));
        names = pairs.into_iter().map(|(_, n)| n).collect();
    }
    names
}

fn encode(class_names: &[String], raw: &str) -> usize {
    class_names
        .iter()
        .position(|c| c == raw)
        .expect("class table built from the same labels")
}

/// Where `fetch` stores (and `load_dataset` reads) the file for `url`.
pub(crate) fn local_path(entry: &DatasetManifestEntry, dir: &Path, file_name: &str) -> PathBuf {
    dir.join(&entry.name).join(file_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FileFormat, Manifest};
    use std::fs;

    fn entry(toml_body: &str) -> DatasetManifestEntry {
        Manifest::parse(&format!("[[dataset]]\n{toml_body}"))
            .unwrap()
            .datasets
            .remove(0)
    }

    fn write(dir: &Path, name: &str, file: &str, body: &str) {
        fs::create_dir_all(dir.join(name)).unwrap();
        fs::write(dir.join(name).join(file), body).unwrap();
    }

    #[test]
    fn loads_header_file_with_named_label_and_dropped_column() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "pk",
            "pk.data",
            "name,a,status,b\nx1,1.5,1,2\nx2,2.5,0,3\n\nx3,3.5,1,4\n",
        );
        let e = entry(
            r#"name = "pk"
urls = ["http://h/pk.data"]
format = "comma"
has_header = true
label = { column = "status" }
drop_columns = ["name"]
test_fraction = 0.5"#,
        );
        let Loaded::Single(d) = load_dataset(&e, dir.path()).unwrap() else {
            panic!("expected single table")
        };
        assert_eq!(d.x, ndarray::array![[1.5, 2.0], [2.5, 3.0], [3.5, 4.0]]);
        assert_eq!(d.y, vec![1, 0, 1]);
        assert_eq!(d.class_names, vec!["0", "1"]);
        let (train, test) = load_partitions(&e, dir.path()).unwrap();
        assert_eq!((train.n_samples(), test.n_samples()), (2, 1));
    }

    #[test]
    fn partitioned_entries_share_one_class_table() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "sp", "a.train", "1,0.5,0.25\n0,1,2\n");
        write(dir.path(), "sp", "a.test", "2,3,4\n1,5,6\n");
        let e = entry(
            r#"name = "sp"
urls = ["http://h/a.train", "http://h/a.test"]
format = "comma"
label = "first""#,
        );
        let (train, test) = load_partitions(&e, dir.path()).unwrap();
        assert_eq!(train.class_names, vec!["0", "1", "2"]);
        assert_eq!(train.class_names, test.class_names);
        assert_eq!(train.y, vec![1, 0]);
        assert_eq!(test.y, vec![2, 1]);
        assert_eq!(test.x, ndarray::array![[3.0, 4.0], [5.0, 6.0]]);
    }

    #[test]
    fn numeric_labels_sort_by_value() {
        let names = class_table(["10", "9", "-1", "9"].into_iter());
        assert_eq!(names, vec!["-1", "9", "10"]);
        let names = class_table(["b", "a", "B"].into_iter());
        assert_eq!(names, vec!["B", "a", "b"]);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m", "m.txt", "1 2 0\n\n3 4\n");
        let e = entry(
            r#"name = "m"
urls = ["http://h/m.txt"]
format = "whitespace"
label = "last"
test_fraction = 0.5"#,
        );
        match load_dataset(&e, dir.path()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_feature_names_the_column() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "n", "n.csv", "age,size,label\n1,2,a\n3,?,b\n");
        let e = entry(
            r#"name = "n"
urls = ["http://h/n.csv"]
format = "comma"
has_header = true
label = "last"
test_fraction = 0.5"#,
        );
        match load_dataset(&e, dir.path()) {
            Err(Error::NonNumeric { line, column, value, .. }) => {
                assert_eq!(line, 3);
                assert!(column.contains("size"), "{column}");
                assert_eq!(value, "?");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tab_separated_and_single_class_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t", "t.txt", "-64\t-56\t1\n-68\t-57\t1\n");
        let e = entry(
            r#"name = "t"
urls = ["http://h/t.txt"]
format = "tab"
label = "last"
test_fraction = 0.5"#,
        );
        assert_eq!(e.format, FileFormat::Tab);
        assert!(matches!(load_dataset(&e, dir.path()), Err(Error::SingleClass(1))));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry(
            r#"name = "gone"
urls = ["http://h/gone.csv"]
format = "comma"
label = "last"
test_fraction = 0.5"#,
        );
        assert!(matches!(load_dataset(&e, dir.path()), Err(Error::Io { .. })));
    }
}
