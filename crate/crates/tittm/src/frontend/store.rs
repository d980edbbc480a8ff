//! The program store: programs indexed by the naturals machines write on
//! their oracle-index tapes, plus corpus loading.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::machine::Program;

use super::parse::{parse_program, ParseError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no program with id {0}")]
    UnknownProgram(u64),
    #[error("id {id} already taken by `{holder}`")]
    IdTaken { id: u64, holder: String },
    #[error("duplicate program name `{0}`")]
    DuplicateName(String),
    #[error("corpus parse error in {file}: {err}")]
    Parse { file: String, err: ParseError },
    #[error("corpus io error on {file}: {err}")]
    Io { file: String, err: std::io::Error },
}

#[derive(Debug, Default, Clone)]
pub struct ProgramStore {
    programs: BTreeMap<u64, Program>,
    by_name: HashMap<String, u64>,
}

impl ProgramStore {
    pub fn new() -> Self {
        ProgramStore::default()
    }

    pub fn get(&self, id: u64) -> Option<&Program> {
        self.programs.get(&id)
    }

    pub fn id_of(&self, name: &str) -> Option<u64> {
        self.by_name.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Program)> {
        self.programs.iter().map(|(id, p)| (*id, p))
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    fn next_free(&self) -> u64 {
        let mut id = 0u64;
        while self.programs.contains_key(&id) {
            id += 1;
        }
        id
    }

    /// Insert a program under its requested id, or the next free one.
    pub fn add_program(&mut self, p: Program) -> Result<u64, StoreError> {
        if self.by_name.contains_key(&p.name) {
            return Err(StoreError::DuplicateName(p.name.clone()));
        }
        let id = match p.requested_id {
            Some(id) => {
                if let Some(holder) = self.programs.get(&id) {
                    return Err(StoreError::IdTaken {
                        id,
                        holder: holder.name.clone(),
                    });
                }
                id
            }
            None => self.next_free(),
        };
        self.by_name.insert(p.name.clone(), id);
        self.programs.insert(id, p);
        Ok(id)
    }

    pub fn add_source(&mut self, src: &str, name: &str) -> Result<u64, StoreError> {
        let p = parse_program(src, name).map_err(|err| StoreError::Parse {
            file: name.to_string(),
            err,
        })?;
        self.add_program(p)
    }
}

/// Corpus directory: `TITTM_CORPUS` overrides, default `./corpus`.
pub fn corpus_dir() -> PathBuf {
    std::env::var_os("TITTM_CORPUS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("corpus"))
}

/// Load every `.fit` file in the directory (sorted by filename, pinned ids
/// first) into a store.
pub fn load_corpus(dir: &Path) -> Result<ProgramStore, StoreError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|err| StoreError::Io {
            file: dir.display().to_string(),
            err,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "fit"))
        .collect();
    files.sort();
    let mut store = ProgramStore::new();
    let mut deferred: Vec<(String, Program)> = Vec::new();
    for path in files {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let src = std::fs::read_to_string(&path).map_err(|err| StoreError::Io {
            file: path.display().to_string(),
            err,
        })?;
        let p = parse_program(&src, &name).map_err(|err| StoreError::Parse {
            file: path.display().to_string(),
            err,
        })?;
        if p.requested_id.is_some() {
            store.add_program(p)?;
        } else {
            deferred.push((name, p));
        }
    }
    for (_, p) in deferred {
        store.add_program(p)?;
    }
    Ok(store)
}
