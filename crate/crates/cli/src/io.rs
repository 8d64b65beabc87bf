//! File input and output.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use avatar_core::log::{build_variant_logs, read_csv_log, read_variants, Variant, VariantLog};
use avatar_core::petri::PetriNet;
use serde::de::DeserializeOwned;

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

pub fn read_net(path: &Path) -> Result<PetriNet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    PetriNet::from_json(&text).with_context(|| format!("invalid net in {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("invalid JSON in {}", path.display()))
}

pub fn read_variants_file(path: &Path) -> Result<Vec<Variant>> {
    read_variants(open(path)?).with_context(|| format!("invalid variant TSV in {}", path.display()))
}

pub fn read_variant_set(path: &Path) -> Result<BTreeSet<Variant>> {
    Ok(read_variants_file(path)?.into_iter().collect())
}

/// A `.csv` file is an event log; anything else is variant TSV, one
/// trace per line.
pub fn read_log(path: &Path) -> Result<VariantLog> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let log = read_csv_log(open(path)?).with_context(|| format!("invalid event log {}", path.display()))?;
        Ok(build_variant_logs(&log)?.0)
    } else {
        Ok(VariantLog::new(read_variants_file(path)?))
    }
}

/// File stem used to name systems and models.
pub fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
