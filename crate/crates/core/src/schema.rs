//! `MAJOR.MINOR` version strings carried by every file this crate writes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VersionError {
    #[error("unreadable format version `{0}`")]
    Malformed(String),
    #[error("format version {found} is newer than the supported {supported}; upgrade graphsal to read it")]
    Newer { found: String, supported: String },
}

fn major(version: &str) -> Option<u64> {
    let (major, minor) = version.split_once('.')?;
    minor.parse::<u64>().ok()?;
    major.parse().ok()
}

/// Accepts `found` when its major version is not above `supported`'s.
pub fn check_version(found: &str, supported: &str) -> Result<(), VersionError> {
    let have = major(found).ok_or_else(|| VersionError::Malformed(found.to_string()))?;
    let want = major(supported).expect("supported version is well formed");
    if have > want {
        return Err(VersionError::Newer {
            found: found.to_string(),
            supported: supported.to_string(),
        });
    }
    Ok(())
}
