//! Artifact writing: CSV tables and JSON reports whose bytes are a pure
//! function of the scenario file, so reruns can be diffed.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use crate::Failure;

/// FNV-1a 64-bit hash of the scenario file bytes; stamped into every
/// estimates row so a table can be traced back to its exact configuration.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Shortest decimal representation that round-trips to the same `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// A CSV document from a header line and stringified rows (no quoting: all
/// cells here are numbers or plain labels).
pub fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Destination for a command's artifacts.  Files are written only when an
/// output directory was given, and only for artifact names the scenario
/// requested (an empty request list means everything the command produces).
pub struct Artifacts {
    dir: Option<PathBuf>,
    requested: BTreeSet<String>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>, requested: &[String]) -> Self {
        Artifacts {
            dir,
            requested: requested.iter().cloned().collect(),
        }
    }

    fn wants(&self, name: &str) -> bool {
        self.requested.is_empty() || self.requested.contains(name)
    }

    /// Writes `text` as `<out>/<file>` if the artifact is wanted; returns
    /// whether a file was produced.
    pub fn write(&self, name: &str, file: &str, text: &str) -> Result<bool, Failure> {
        let Some(dir) = &self.dir else {
            return Ok(false);
        };
        if !self.wants(name) {
            return Ok(false);
        }
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Invalid(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(file);
        fs::write(&path, text)
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(true)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // reference digits kept verbatim
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn floats_round_trip_through_fmt() {
        for &x in &[0.1, 1.0, -2.5e-7, 0.393_469_340_287_366_58, 1e300] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_assembles_header_and_rows() {
        let doc = csv(
            "a,b",
            &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]],
        );
        assert_eq!(doc, "a,b\n1,2\n3,4\n");
    }
}
