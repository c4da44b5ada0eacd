//! Record/replay cache: one JSON file per request under
//! `<cache_dir>/<backend-name>/<fingerprint>.json`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::clock::{Clock, SystemClock};
use super::{fingerprint, BackendError, ChatBackend, Completion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub fingerprint: String,
    pub prompt: String,
    pub temperature: f64,
    pub response: String,
    pub model: String,
}

pub struct ReplayBackend {
    name: String,
    model: String,
    temperature: f64,
    dir: PathBuf,
    delegate: Option<Arc<dyn ChatBackend>>,
    clock: Arc<dyn Clock>,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    delegate_calls: AtomicUsize,
}

impl std::fmt::Debug for ReplayBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReplayBackend")
            .field("name", &self.name)
            .field("dir", &self.dir)
            .field("recording", &self.delegate.is_some())
            .finish()
    }
}

/// Wraps `inner` so that misses are delegated and persisted, and hits are
/// served from disk without touching `inner`.
pub fn record_replay(inner: Arc<dyn ChatBackend>, cache_dir: &Path) -> Arc<dyn ChatBackend> {
    Arc::new(ReplayBackend::recording(inner, cache_dir))
}

impl ReplayBackend {
    pub fn recording(inner: Arc<dyn ChatBackend>, cache_dir: &Path) -> Self {
        Self {
            name: inner.name().to_string(),
            model: inner.model().to_string(),
            temperature: inner.temperature(),
            dir: cache_dir.join(inner.name()),
            delegate: Some(inner),
            clock: Arc::new(SystemClock::new()),
            in_flight: Mutex::new(HashMap::new()),
            delegate_calls: AtomicUsize::new(0),
        }
    }

    /// Serves only what is already cached; a miss is an error.
    pub fn replay_only(
        name: impl Into<String>,
        model: impl Into<String>,
        temperature: f64,
        cache_dir: &Path,
    ) -> Self {
        let name = name.into();
        Self {
            dir: cache_dir.join(&name),
            name,
            model: model.into(),
            temperature,
            delegate: None,
            clock: Arc::new(SystemClock::new()),
            in_flight: Mutex::new(HashMap::new()),
            delegate_calls: AtomicUsize::new(0),
        }
    }

    pub fn delegate_calls(&self) -> usize {
        self.delegate_calls.load(Ordering::SeqCst)
    }

    pub fn entry_path(&self, fp: &str) -> PathBuf {
        self.dir.join(format!("{fp}.json"))
    }

    fn read_entry(&self, path: &Path) -> Result<Option<CacheEntry>, BackendError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(BackendError::CacheIo {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| BackendError::CacheCorrupt {
                file: path.display().to_string(),
                msg: e.to_string(),
            })
    }

    fn write_entry(&self, path: &Path, entry: &CacheEntry) -> Result<(), BackendError> {
        let io = |source| BackendError::CacheIo {
            path: path.display().to_string(),
            source,
        };
        fs::create_dir_all(&self.dir).map_err(io)?;
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        let body = serde_json::to_vec_pretty(entry).expect("cache entry serializes");
        f.write_all(&body).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    fn hit(&self, entry: CacheEntry) -> Completion {
        let now = self.clock.now();
        Completion {
            text: entry.response,
            model: entry.model,
            latency: Duration::ZERO,
            attempt_count: 1,
            started: now,
            finished: now,
        }
    }

    fn fingerprint_lock(&self, fp: &str) -> Arc<Mutex<()>> {
        self.in_flight
            .lock()
            .unwrap()
            .entry(fp.to_string())
            .or_default()
            .clone()
    }
}

impl ChatBackend for ReplayBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        let fp = fingerprint(&self.name, prompt, self.temperature);
        let path = self.entry_path(&fp);
        if let Some(entry) = self.read_entry(&path)? {
            return Ok(self.hit(entry));
        }
        let Some(delegate) = &self.delegate else {
            return Err(BackendError::CacheMiss {
                backend: self.name.clone(),
                fingerprint: fp,
            });
        };

        // Concurrent misses on one fingerprint produce a single delegate call.
        let lock = self.fingerprint_lock(&fp);
        let _guard = lock.lock().unwrap();
        if let Some(entry) = self.read_entry(&path)? {
            return Ok(self.hit(entry));
        }
        self.delegate_calls.fetch_add(1, Ordering::SeqCst);
        let completion = delegate.complete(prompt)?;
        let entry = CacheEntry {
            fingerprint: fp,
            prompt: prompt.to_string(),
            temperature: self.temperature,
            response: completion.text.clone(),
            model: completion.model.clone(),
        };
        self.write_entry(&path, &entry)?;
        Ok(completion)
    }
}
