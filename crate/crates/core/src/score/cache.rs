//! Persistent score cache: an append-only file of (key digest, score)
//! records keyed on (backend version, model, prefix, continuation), plus a
//! caching backend wrapper with in-flight request deduplication.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use super::{LogProbScore, ScoreBackend, ScoreRequest};
use crate::error::ScoreError;

pub type CacheKey = [u8; 32];

/// Digest of everything that determines a score. Backend upgrades change the
/// version string and thereby invalidate all prior entries.
pub fn cache_key(backend_version: &str, req: &ScoreRequest) -> CacheKey {
    let mut hasher = Sha256::new();
    hasher.update(backend_version.as_bytes());
    hasher.update([0x1f]);
    hasher.update(req.model_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(req.prefix.as_bytes());
    hasher.update([0x1f]);
    hasher.update(req.continuation.as_bytes());
    hasher.finalize().into()
}

/// Append-only file store of scored requests. Records are one line each:
/// `<key hex> <logprob_sum> <token_count> <created_at>`. Entries are
/// immutable once written; corrupt lines are dropped with a warning and the
/// request is simply rescored.
pub struct ScoreCache {
    path: PathBuf,
    map: RwLock<HashMap<CacheKey, LogProbScore>>,
    writer: Mutex<BufWriter<File>>,
    corrupt_dropped: u64,
}

impl ScoreCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ScoreError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut map = HashMap::new();
        let mut corrupt_dropped = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_line(&line) {
                    Some((key, score)) => {
                        // First write wins; duplicates are identical anyway.
                        map.entry(key).or_insert(score);
                    }
                    None => {
                        corrupt_dropped += 1;
                        log::warn!("dropping corrupt cache line: {line:?}");
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            map: RwLock::new(map),
            writer: Mutex::new(BufWriter::new(file)),
            corrupt_dropped,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lines skipped while loading the file.
    pub fn corrupt_dropped(&self) -> u64 {
        self.corrupt_dropped
    }

    pub fn get(&self, key: &CacheKey) -> Option<LogProbScore> {
        self.map.read().expect("cache lock").get(key).copied()
    }

    pub fn put(&self, key: CacheKey, score: LogProbScore) -> Result<(), ScoreError> {
        {
            let mut map = self.map.write().expect("cache lock");
            if map.contains_key(&key) {
                return Ok(());
            }
            map.insert(key, score);
        }
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut writer = self.writer.lock().expect("cache writer lock");
        writeln!(
            writer,
            "{} {} {} {}",
            hex::encode(key),
            score.logprob_sum,
            score.token_count,
            created_at
        )?;
        writer.flush()?;
        Ok(())
    }
}

fn parse_line(line: &str) -> Option<(CacheKey, LogProbScore)> {
    let mut parts = line.split_whitespace();
    let key_hex = parts.next()?;
    let logprob_sum: f64 = parts.next()?.parse().ok()?;
    let token_count: u32 = parts.next()?.parse().ok()?;
    let _created_at = parts.next()?;
    let bytes = hex::decode(key_hex).ok()?;
    let key: CacheKey = bytes.try_into().ok()?;
    if token_count == 0 || !logprob_sum.is_finite() {
        return None;
    }
    Some((
        key,
        LogProbScore {
            logprob_sum,
            token_count,
        },
    ))
}

struct Inflight {
    done: Mutex<bool>,
    cv: Condvar,
}

/// Wraps a backend with the persistent cache. Hits return the stored score
/// without touching the backend; concurrent identical requests collapse to
/// one backend call. The wrapper is transparent: for any request sequence,
/// results equal the uncached backend's.
pub struct CachedBackend<B> {
    inner: B,
    cache: ScoreCache,
    inflight: Mutex<HashMap<CacheKey, Arc<Inflight>>>,
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl<B: ScoreBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: ScoreCache) -> Self {
        Self {
            inner,
            cache,
            inflight: Mutex::new(HashMap::new()),
            backend_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn open(inner: B, cache_path: impl AsRef<Path>) -> Result<Self, ScoreError> {
        Ok(Self::new(inner, ScoreCache::open(cache_path)?))
    }

    /// Backend calls actually performed (cache misses).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn get_or_score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        let key = cache_key(&self.inner.version(), req);
        loop {
            if let Some(score) = self.cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(score);
            }
            let existing = {
                let mut inflight = self.inflight.lock().expect("inflight lock");
                // Re-check under the lock: a claimer publishes to the cache
                // before releasing its slot, so a miss observed before the
                // lock may have resolved by now.
                if let Some(score) = self.cache.get(&key) {
                    self.cache_hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(score);
                }
                match inflight.get(&key) {
                    Some(slot) => Some(Arc::clone(slot)),
                    None => {
                        inflight.insert(
                            key,
                            Arc::new(Inflight {
                                done: Mutex::new(false),
                                cv: Condvar::new(),
                            }),
                        );
                        None
                    }
                }
            };
            match existing {
                Some(slot) => {
                    // Another worker is scoring this request; wait and re-check.
                    let mut done = slot.done.lock().expect("inflight slot lock");
                    while !*done {
                        done = slot.cv.wait(done).expect("inflight slot wait");
                    }
                }
                None => {
                    let result = self.inner.score(req);
                    self.backend_calls.fetch_add(1, Ordering::Relaxed);
                    let put_result = match &result {
                        Ok(score) => self.cache.put(key, *score),
                        Err(_) => Ok(()),
                    };
                    let slot = {
                        let mut inflight = self.inflight.lock().expect("inflight lock");
                        inflight.remove(&key)
                    };
                    if let Some(slot) = slot {
                        let mut done = slot.done.lock().expect("inflight slot lock");
                        *done = true;
                        slot.cv.notify_all();
                    }
                    put_result?;
                    return result;
                }
            }
        }
    }
}

impl<B: ScoreBackend> ScoreBackend for CachedBackend<B> {
    fn version(&self) -> String {
        self.inner.version()
    }

    fn proper(&self) -> bool {
        self.inner.proper()
    }

    fn supports_model(&self, model_id: &str) -> bool {
        self.inner.supports_model(model_id)
    }

    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        self.get_or_score(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::MockBackend;

    fn req(text: &str) -> ScoreRequest {
        ScoreRequest::new("mock-small", "prefix", text).unwrap()
    }

    #[test]
    fn second_call_hits_cache_without_backend() {
        let dir = tempfile::tempdir().unwrap();
        let backend =
            CachedBackend::open(MockBackend::new(3), dir.path().join("scores.cache")).unwrap();
        let a = backend.score(&req(" wrong.")).unwrap();
        let b = backend.score(&req(" wrong.")).unwrap();
        assert_eq!(a, b);
        assert_eq!(backend.backend_calls(), 1);
        assert_eq!(backend.cache_hits(), 1);
    }

    #[test]
    fn cache_survives_reopen_and_clearing_rescores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        let first = {
            let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
            backend.score(&req(" wrong.")).unwrap()
        };
        // Reopen: persisted entry served without a backend call.
        let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
        assert_eq!(backend.score(&req(" wrong.")).unwrap(), first);
        assert_eq!(backend.backend_calls(), 0);

        // Clearing the store forces a rescore.
        std::fs::remove_file(&path).unwrap();
        let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
        assert_eq!(backend.score(&req(" wrong.")).unwrap(), first);
        assert_eq!(backend.backend_calls(), 1);
    }

    #[test]
    fn model_ids_never_share_entries() {
        let dir = tempfile::tempdir().unwrap();
        let backend =
            CachedBackend::open(MockBackend::new(3), dir.path().join("scores.cache")).unwrap();
        let a = ScoreRequest::new("mock-a", "p", " c.").unwrap();
        let b = ScoreRequest::new("mock-b", "p", " c.").unwrap();
        backend.score(&a).unwrap();
        backend.score(&b).unwrap();
        assert_eq!(backend.backend_calls(), 2);
        assert_eq!(backend.cache().len(), 2);
    }

    #[test]
    fn backend_version_partitions_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        {
            let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
            backend.score(&req(" wrong.")).unwrap();
        }
        // A different seed is a different backend version: cache misses.
        let upgraded = CachedBackend::open(MockBackend::new(4), &path).unwrap();
        upgraded.score(&req(" wrong.")).unwrap();
        assert_eq!(upgraded.backend_calls(), 1);
    }

    #[test]
    fn corrupt_entries_dropped_and_rescored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        {
            let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
            backend.score(&req(" wrong.")).unwrap();
        }
        // Corrupt the stored line.
        let contents = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, contents.replace(' ', "_")).unwrap();
        let backend = CachedBackend::open(MockBackend::new(3), &path).unwrap();
        assert_eq!(backend.cache().corrupt_dropped(), 1);
        let rescored = backend.score(&req(" wrong.")).unwrap();
        assert_eq!(backend.backend_calls(), 1);
        assert!(rescored.logprob_sum < 0.0);
    }

    #[test]
    fn caching_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let plain = MockBackend::new(11);
        let cached =
            CachedBackend::open(MockBackend::new(11), dir.path().join("scores.cache")).unwrap();
        let requests = [
            req(" right."),
            req(" wrong."),
            req(" right."),
            req(" ethical."),
        ];
        for r in &requests {
            assert_eq!(plain.score(r).unwrap(), cached.score(r).unwrap());
        }
    }

    #[test]
    fn concurrent_identical_requests_collapse_to_one_call() {
        use std::sync::Barrier;
        let dir = tempfile::tempdir().unwrap();
        let backend = Arc::new(
            CachedBackend::open(MockBackend::new(3), dir.path().join("scores.cache")).unwrap(),
        );
        let barrier = Arc::new(Barrier::new(8));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let backend = Arc::clone(&backend);
            let barrier = Arc::clone(&barrier);
            handles.push(std::thread::spawn(move || {
                barrier.wait();
                backend.score(&req(" never justifiable.")).unwrap()
            }));
        }
        let scores: Vec<LogProbScore> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(backend.backend_calls(), 1);
    }
}
