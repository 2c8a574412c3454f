use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shipped dataset manifest: a TOML file with one `[[dataset]]` table per
/// entry.
///
/// ```toml
/// [[dataset]]
/// name = "parkinsons"
/// urls = ["https://.../parkinsons.data"]
/// format = "comma"            # comma | whitespace | tab
/// has_header = true
/// label = { column = "status" }   # "first" | "last" | { column = <name or index> }
/// drop_columns = ["name"]
/// test_fraction = 0.2         # only for single-file entries
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        for entry in &manifest.datasets {
            entry.validate()?;
        }
        let mut names: Vec<&str> = manifest.datasets.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Manifest(format!("duplicate dataset name {:?}", w[0])));
        }
        Ok(manifest)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn entry(&self, name: &str) -> Option<&DatasetManifestEntry> {
        self.datasets.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.datasets.iter().map(|e| e.name.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Comma,
    Whitespace,
    Tab,
}

impl FileFormat {
    pub(crate) fn split_line<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            FileFormat::Comma => line.split(',').map(clean_field).collect(),
            FileFormat::Tab => line.split('\t').map(clean_field).collect(),
            FileFormat::Whitespace => line.split_whitespace().map(clean_field).collect(),
        }
    }
}

fn clean_field(field: &str) -> &str {
    let field = field.trim();
    field
        .strip_prefix('"')
        .and_then(|f| f.strip_suffix('"'))
        .unwrap_or(field)
}

/// A column addressed by zero-based position or by header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelSpec", into = "LabelSpec")]
pub enum LabelPosition {
    First,
    Last,
    Column(ColumnRef),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelSpec {
    Keyword(String),
    Column { column: ColumnRef },
}

impl TryFrom<LabelSpec> for LabelPosition {
    type Error = String;

    fn try_from(spec: LabelSpec) -> std::result::Result<Self, String> {
        match spec {
            LabelSpec::Keyword(k) if k == "first" => Ok(LabelPosition::First),
            LabelSpec::Keyword(k) if k == "last" => Ok(LabelPosition::Last),
            LabelSpec::Keyword(k) => Err(format!(
                "label must be \"first\", \"last\" or {{ column = ... }}, got {k:?}"
            )),
            LabelSpec::Column { column } => Ok(LabelPosition::Column(column)),
        }
    }
}

impl From<LabelPosition> for LabelSpec {
    fn from(pos: LabelPosition) -> Self {
        match pos {
            LabelPosition::First => LabelSpec::Keyword("first".into()),
            LabelPosition::Last => LabelSpec::Keyword("last".into()),
            LabelPosition::Column(column) => LabelSpec::Column { column },
        }
    }
}

/// One dataset: where to download it and how to parse it.
///
/// One URL means a single file that is split with `test_fraction`; two URLs
/// are predefined train and test files, in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifestEntry {
    pub name: String,
    pub urls: Vec<String>,
    pub format: FileFormat,
    #[serde(default)]
    pub has_header: bool,
    pub label: LabelPosition,
    #[serde(default)]
    pub drop_columns: Vec<ColumnRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
}

impl DatasetManifestEntry {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Manifest(format!("{}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return fail("name must be a non-empty path-safe identifier".into());
        }
        match (self.urls.len(), self.test_fraction) {
            (1, Some(f)) if f > 0.0 && f < 1.0 => {}
            (1, Some(f)) => return fail(format!("test_fraction {f} outside (0, 1)")),
            (1, None) => return fail("single-file entry needs test_fraction".into()),
            (2, None) => {}
            (2, Some(_)) => return fail("test_fraction is only allowed with a single url".into()),
            (n, _) => return fail(format!("expected 1 or 2 urls, got {n}")),
        }
        for url in &self.urls {
            if file_name_of(url).is_none() {
                return fail(format!("cannot derive a file name from {url:?}"));
            }
        }
        Ok(())
    }

    /// Local file names, one per URL.
    pub fn file_names(&self) -> Vec<String> {
        self.urls
            .iter()
            .map(|u| file_name_of(u).unwrap_or_default().to_string())
            .collect()
    }

    pub fn is_partitioned(&self) -> bool {
        self.urls.len() == 2
    }
}

fn file_name_of(url: &str) -> Option<&str> {
    let path = url.split(['?', '#']).next()?;
    let name = path.rsplit('/').next()?;
    (!name.is_empty() && name != "." && name != "..").then_some(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[[dataset]]
name = "parkinsons"
urls = ["https://example.org/parkinsons/parkinsons.data"]
format = "comma"
has_header = true
label = { column = "status" }
drop_columns = ["name"]
test_fraction = 0.2

[[dataset]]
name = "optdigits"
urls = ["https://example.org/optdigits.tra", "https://example.org/optdigits.tes"]
format = "comma"
label = "last"

[[dataset]]
name = "wdbc"
urls = ["https://example.org/wdbc.data"]
format = "comma"
label = { column = 1 }
drop_columns = [0]
test_fraction = 0.2
"#;

    #[test]
    fn parses_all_label_forms() {
        let m = Manifest::parse(SAMPLE).unwrap();
        assert_eq!(m.datasets.len(), 3);
        let p = m.entry("parkinsons").unwrap();
        assert_eq!(p.label, LabelPosition::Column(ColumnRef::Name("status".into())));
        assert_eq!(p.drop_columns, vec![ColumnRef::Name("name".into())]);
        assert_eq!(p.file_names(), vec!["parkinsons.data"]);
        let o = m.entry("optdigits").unwrap();
        assert!(o.is_partitioned());
        assert_eq!(o.label, LabelPosition::Last);
        assert!(!o.has_header);
        let w = m.entry("wdbc").unwrap();
        assert_eq!(w.label, LabelPosition::Column(ColumnRef::Index(1)));
        assert_eq!(w.drop_columns, vec![ColumnRef::Index(0)]);
    }

    #[test]
    fn round_trips_through_toml() {
        let m = Manifest::parse(SAMPLE).unwrap();
        let text = toml::to_string(&m).unwrap();
        assert_eq!(Manifest::parse(&text).unwrap(), m);
    }

    #[test]
    fn test_fraction_iff_single_url() {
        let bad = SAMPLE.replace("label = \"last\"", "label = \"last\"\ntest_fraction = 0.3");
        assert!(Manifest::parse(&bad).is_err());
        let bad = SAMPLE.replace("test_fraction = 0.2\n\n[[dataset]]\nname = \"optdigits\"", "\n[[dataset]]\nname = \"optdigits\"");
        assert!(Manifest::parse(&bad).is_err());
        let bad = SAMPLE.replacen("test_fraction = 0.2", "test_fraction = 1.5", 1);
        assert!(Manifest::parse(&bad).is_err());
    }

    #[test]
    fn rejects_unknown_label_keyword_and_duplicates() {
        let bad = SAMPLE.replace("label = \"last\"", "label = \"middle\"");
        assert!(Manifest::parse(&bad).is_err());
        let dup = SAMPLE.replace("name = \"wdbc\"", "name = \"optdigits\"");
        assert!(Manifest::parse(&dup).is_err());
    }

    #[test]
    fn splits_and_cleans_fields() {
        assert_eq!(FileFormat::Comma.split_line(" 47,100, 27 ,\"x\""), vec!["47", "100", "27", "x"]);
        assert_eq!(FileFormat::Whitespace.split_line("  1 2\t3 "), vec!["1", "2", "3"]);
        assert_eq!(FileFormat::Tab.split_line("-64\t-56\t1"), vec!["-64", "-56", "1"]);
    }
}
