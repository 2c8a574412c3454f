use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use ureq::Agent;

use super::load::local_path;
use super::manifest::DatasetManifestEntry;

/// Outcome of [`fetch`]. Failures do not stop the remaining entries.
#[derive(Debug, Default)]
pub struct FetchReport {
    pub downloaded: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
    pub failures: Vec<FetchFailure>,
}

impl FetchReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug)]
pub struct FetchFailure {
    pub entry: String,
    pub url: String,
    pub message: String,
}

impl std::fmt::Display for FetchFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.entry, self.url, self.message)
    }
}

/// Download every URL of every entry to `dest/<entry>/<file>`.
///
/// A file already on disk whose size equals the server's `Content-Length`
/// is left alone, so a rerun on a complete directory downloads nothing.
pub fn fetch(entries: &[DatasetManifestEntry], dest: &Path) -> FetchReport {
    let agent: Agent = Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(120)))
        .build()
        .into();
    fetch_with_agent(&agent, entries, dest)
}

pub fn fetch_with_agent(agent: &Agent, entries: &[DatasetManifestEntry], dest: &Path) -> FetchReport {
    let mut report = FetchReport::default();
    for entry in entries {
        for (url, file) in entry.urls.iter().zip(entry.file_names()) {
            let path = local_path(entry, dest, &file);
            let fail = |message: String| FetchFailure {
                entry: entry.name.clone(),
                url: url.clone(),
                message,
            };
            match fetch_one(agent, url, &path) {
                Ok(true) => {
                    info!("downloaded {}", path.display());
                    report.downloaded.push(path);
                }
                Ok(false) => report.skipped.push(path),
                Err(e) => {
                    warn!("{}: {url}: {e}", entry.name);
                    report.failures.push(fail(e.to_string()));
                }
            }
        }
    }
    report
}

/// Returns `Ok(false)` when the existing file already matches.
fn fetch_one(agent: &Agent, url: &str, path: &Path) -> io::Result<bool> {
    if let Ok(meta) = fs::metadata(path) {
        if remote_size(agent, url) == Some(meta.len()) {
            return Ok(false);
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let response = agent.get(url).call().map_err(io::Error::other)?;
    let mut partial = path.as_os_str().to_owned();
    partial.push(".part");
    let partial = PathBuf::from(partial);
    let result = (|| {
        let mut out = fs::File::create(&partial)?;
        io::copy(&mut response.into_body().into_reader(), &mut out)?;
        out.sync_all()?;
        fs::rename(&partial, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&partial);
    }
    result.map(|_| true)
}

fn remote_size(agent: &Agent, url: &str) -> Option<u64> {
    let response = agent.head(url).call().ok()?;
    response
        .headers()
        .get("content-length")?
        .to_str()
        .ok()?
        .parse()
        .ok()
}
