//! File-backed store: a single versioned JSON document holding the
//! schema text, every warehouse object and the rule journal.
//!
//! Saves are atomic (write-temp-then-rename); one advisory lock file
//! guards each store against concurrent writers. Reloading a saved
//! store yields a value-identical store.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::dsl::{parse_ddl, DslError};
use crate::model::{
    CurrentState, FiringRecord, HistState, Value, WarehouseObject, WarehouseStore,
};
use crate::temporal::{Instant, TemporalDomain};

pub const FORMAT_NAME: &str = "twq-store";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("store is locked: {0} exists")]
    Locked(PathBuf),
    #[error(transparent)]
    Dsl(#[from] DslError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Advisory write lock; the file is removed on drop.
pub struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    pub fn acquire(store_path: &Path) -> Result<StoreLock, StoreError> {
        let path = lock_path(store_path);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(StoreLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StoreError::Locked(path))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn lock_path(store_path: &Path) -> PathBuf {
    let mut name = store_path.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    store_path.with_file_name(name)
}

fn state_json(s: &HistState) -> serde_json::Value {
    json!({"value": s.value.to_json(), "domain": s.domain.to_string()})
}

fn object_json(o: &WarehouseObject) -> serde_json::Value {
    json!({
        "oid": o.oid,
        "class": o.class,
        "active": o.active,
        "current": {"value": o.current.value.to_json(), "since": o.current.since.to_string()},
        "past": o.past.iter().map(state_json).collect::<Vec<_>>(),
        "archive": o.archive.iter().map(state_json).collect::<Vec<_>>(),
    })
}

pub fn to_document(store: &WarehouseStore) -> serde_json::Value {
    json!({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "ddl": store.ddl_source,
        "last_refresh": store.last_refresh.map(|i| i.to_string()),
        "objects": store.objects.values().map(object_json).collect::<Vec<_>>(),
        "journal": store.journal.iter().map(|f| json!({
            "at": f.at.to_string(),
            "rule": f.rule,
            "oid": f.oid,
            "states": f.states,
        })).collect::<Vec<_>>(),
    })
}

/// Atomic save: the document is written to a temporary sibling and
/// renamed over the destination.
pub fn save(store: &WarehouseStore, path: &Path) -> Result<(), StoreError> {
    let tmp = write_temp(store, path)?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

fn write_temp(store: &WarehouseStore, path: &Path) -> Result<PathBuf, StoreError> {
    let doc = to_document(store);
    let text = serde_json::to_string_pretty(&doc).expect("document serializes");
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(&format!(".tmp.{}", std::process::id()));
    let tmp = path.with_file_name(name);
    fs::write(&tmp, text.as_bytes()).map_err(io_err(&tmp))?;
    let f = fs::File::open(&tmp).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    Ok(tmp)
}

/// Fault-injection hook: performs every step of [`save`] except the
/// final rename, simulating a crash mid-save.
#[doc(hidden)]
pub fn save_aborted_before_rename(
    store: &WarehouseStore,
    path: &Path,
) -> Result<PathBuf, StoreError> {
    write_temp(store, path)
}

pub fn load(path: &Path) -> Result<WarehouseStore, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let fail = |message: String| StoreError::Format {
        path: path.to_path_buf(),
        message,
    };
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    let format = doc.get("format").and_then(|v| v.as_str()).unwrap_or("");
    if format != FORMAT_NAME {
        return Err(fail(format!("not a {FORMAT_NAME} document")));
    }
    let version = doc.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != FORMAT_VERSION {
        return Err(fail(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let ddl = doc
        .get("ddl")
        .and_then(|v| v.as_str())
        .ok_or_else(|| fail("missing \"ddl\"".into()))?
        .to_string();
    let schema = parse_ddl(&ddl)?.to_schema()?;
    let mut store = WarehouseStore::new(schema, ddl);

    if let Some(last) = doc.get("last_refresh").and_then(|v| v.as_str()) {
        let at: Instant = last
            .parse()
            .map_err(|e: crate::temporal::TemporalError| fail(e.to_string()))?;
        store.last_refresh = Some(at);
    }

    let parse_state = |v: &serde_json::Value| -> Result<HistState, StoreError> {
        let value = Value::from_json(
            v.get("value").ok_or_else(|| fail("state without value".into()))?,
        )
        .map_err(|e| fail(e.to_string()))?;
        let domain: TemporalDomain = v
            .get("domain")
            .and_then(|d| d.as_str())
            .ok_or_else(|| fail("state without domain".into()))?
            .parse()
            .map_err(|e: crate::temporal::TemporalError| fail(e.to_string()))?;
        Ok(HistState { value, domain })
    };

    for obj in doc
        .get("objects")
        .and_then(|v| v.as_array())
        .ok_or_else(|| fail("missing \"objects\"".into()))?
    {
        let oid = obj
            .get("oid")
            .and_then(|v| v.as_str())
            .ok_or_else(|| fail("object without oid".into()))?
            .to_string();
        let class = obj
            .get("class")
            .and_then(|v| v.as_str())
            .ok_or_else(|| fail("object without class".into()))?
            .to_string();
        let active = obj.get("active").and_then(|v| v.as_bool()).unwrap_or(true);
        let current = obj
            .get("current")
            .ok_or_else(|| fail("object without current state".into()))?;
        let value = Value::from_json(
            current
                .get("value")
                .ok_or_else(|| fail("current state without value".into()))?,
        )
        .map_err(|e| fail(e.to_string()))?;
        let since: Instant = current
            .get("since")
            .and_then(|v| v.as_str())
            .ok_or_else(|| fail("current state without since".into()))?
            .parse()
            .map_err(|e: crate::temporal::TemporalError| fail(e.to_string()))?;
        let mut past = Vec::new();
        for s in obj.get("past").and_then(|v| v.as_array()).unwrap_or(&vec![]) {
            past.push(parse_state(s)?);
        }
        let mut archive = Vec::new();
        for s in obj.get("archive").and_then(|v| v.as_array()).unwrap_or(&vec![]) {
            archive.push(parse_state(s)?);
        }
        store.objects.insert(
            oid.clone(),
            WarehouseObject {
                oid,
                class,
                active,
                current: CurrentState { value, since },
                past,
                archive,
            },
        );
    }

    for f in doc.get("journal").and_then(|v| v.as_array()).unwrap_or(&vec![]) {
        let at: Instant = f
            .get("at")
            .and_then(|v| v.as_str())
            .ok_or_else(|| fail("journal entry without at".into()))?
            .parse()
            .map_err(|e: crate::temporal::TemporalError| fail(e.to_string()))?;
        store.journal.push(FiringRecord {
            at,
            rule: f
                .get("rule")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            oid: f
                .get("oid")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            states: f.get("states").and_then(|v| v.as_u64()).unwrap_or(0) as usize,
        });
    }

    Ok(store)
}
