//! Durable per-principal chains.
//!
//! Layout under the data directory:
//!
//! ```text
//! chains/<urlencoded principal>.log   one record per line: hex(bytes) TAB hex(record_hash)
//! chains/index                        one urlencoded principal per line, in creation order
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Mutex, RwLock};
use tracing::warn;

use super::chain::{verify_records, ChainOptions, ProvenanceChain, VerificationReport};
use super::codec::{deserialize_record, serialize_record};
use super::record::{is_lower_hex, Digest32, PrincipalId, ProvenanceRecord, RecordInput};
use super::ProvenanceError;

const CHAINS_DIR: &str = "chains";
const INDEX_FILE: &str = "index";

/// Formats one persisted line, trailing newline included.
pub fn encode_line(record: &ProvenanceRecord) -> String {
    let bytes = serialize_record(record);
    let mut line = String::with_capacity(bytes.len() * 2 + 66);
    line.push_str(&hex::encode(bytes));
    line.push('\t');
    line.push_str(&record.record_hash.to_hex());
    line.push('\n');
    line
}

/// Parses one line (without its newline). The stated hash must match the
/// hash of the decoded bytes.
pub fn decode_line(line: &[u8]) -> Option<ProvenanceRecord> {
    let tab = line.iter().position(|&b| b == b'\t')?;
    let (body, hash) = (&line[..tab], &line[tab + 1..]);
    if body.len() % 2 != 0 || !body.iter().copied().all(is_lower_hex) {
        return None;
    }
    let stated = Digest32::from_hex(std::str::from_utf8(hash).ok()?)?;
    let bytes = hex::decode(body).ok()?;
    let record = deserialize_record(&bytes).ok()?;
    (record.record_hash == stated).then_some(record)
}

/// Outcome of reading a chain file: the records that decoded, and the index
/// of the first line that did not (if any).
pub struct ChainFile {
    pub records: Vec<ProvenanceRecord>,
    pub bad_line: Option<usize>,
    /// Bytes after the last newline.
    pub torn_tail: usize,
}

pub fn read_chain_file(path: &Path) -> io::Result<ChainFile> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    let complete = raw.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let torn_tail = raw.len() - complete;
    let mut records = Vec::new();
    let mut bad_line = None;
    for (i, line) in raw[..complete].split_inclusive(|&b| b == b'\n').enumerate() {
        match decode_line(&line[..line.len() - 1]) {
            Some(r) => records.push(r),
            None => {
                bad_line = Some(i);
                break;
            }
        }
    }
    Ok(ChainFile {
        records,
        bad_line,
        torn_tail,
    })
}

/// Cold verification of a persisted chain. A torn final line counts as a bad
/// record at that position.
pub fn verify_chain_file(path: &Path, principal: &PrincipalId) -> io::Result<VerificationReport> {
    let file = read_chain_file(path)?;
    let mut report = verify_records(&file.records);
    if report.valid {
        if let Some(i) = file.records.iter().position(|r| &r.principal != principal) {
            report = VerificationReport::bad_at(i);
        }
    }
    if report.valid {
        if let Some(i) = file.bad_line {
            report = VerificationReport::bad_at(i);
        } else if file.torn_tail > 0 {
            report = VerificationReport::bad_at(file.records.len());
        }
    }
    Ok(report)
}

pub fn chain_file_path(root: &Path, principal: &PrincipalId) -> PathBuf {
    root.join(CHAINS_DIR)
        .join(format!("{}.log", urlencoding::encode(principal.as_str())))
}

struct Slot {
    chain: ProvenanceChain,
    file: Option<File>,
}

/// Write access to one chain, held while the store's lock for that
/// principal is held.
pub struct ChainWriter<'a> {
    slot: &'a mut Slot,
    store: &'a ChainStore,
}

/// What the decision pipeline needs from a chain: read access, aggregate
/// retuning, and (possibly durable) appends.
pub trait ChainAccess {
    fn chain(&self) -> &ProvenanceChain;
    fn set_half_life(&mut self, half_life: Duration);
    fn append(&mut self, input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError>;
}

impl ChainAccess for ProvenanceChain {
    fn chain(&self) -> &ProvenanceChain {
        self
    }

    fn set_half_life(&mut self, half_life: Duration) {
        ProvenanceChain::set_half_life(self, half_life)
    }

    fn append(&mut self, input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError> {
        self.append_record(input)
    }
}

impl ChainAccess for ChainWriter<'_> {
    fn chain(&self) -> &ProvenanceChain {
        &self.slot.chain
    }

    fn set_half_life(&mut self, half_life: Duration) {
        self.slot.chain.set_half_life(half_life)
    }

    /// The record is on disk (fsynced) before this returns.
    fn append(&mut self, input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError> {
        let record = self.slot.chain.prepare(input)?;
        let event_id = record.interaction.event.event_id.clone();
        if !self.store.events.lock().insert(event_id.clone()) {
            return Err(ProvenanceError::DuplicateEvent(event_id));
        }
        if let Some(root) = &self.store.root {
            if let Err(e) = self.persist(root, &record) {
                self.store.events.lock().remove(&event_id);
                return Err(e.into());
            }
        }
        self.slot.chain.commit(record.clone());
        Ok(record)
    }
}

impl ChainWriter<'_> {
    fn persist(&mut self, root: &Path, record: &ProvenanceRecord) -> io::Result<()> {
        if self.slot.file.is_none() {
            let principal = self.slot.chain.principal();
            let path = chain_file_path(root, principal);
            let fresh = !path.exists();
            let file = OpenOptions::new().create(true).append(true).open(&path)?;
            if fresh {
                self.store.register(root, principal)?;
            }
            self.slot.file = Some(file);
        }
        let file = self.slot.file.as_mut().expect("opened above");
        file.write_all(encode_line(record).as_bytes())?;
        file.sync_data()
    }
}

/// All chains known to the engine, optionally backed by a data directory.
///
/// Appends to one chain are serialized; readers of a chain see a complete
/// prefix. Different principals never contend on the same lock.
pub struct ChainStore {
    root: Option<PathBuf>,
    options: RwLock<ChainOptions>,
    slots: RwLock<HashMap<PrincipalId, Arc<RwLock<Slot>>>>,
    events: Mutex<BTreeSet<String>>,
    index: Mutex<()>,
}

impl ChainStore {
    pub fn in_memory(options: ChainOptions) -> Self {
        Self {
            root: None,
            options: RwLock::new(options),
            slots: RwLock::new(HashMap::new()),
            events: Mutex::new(BTreeSet::new()),
            index: Mutex::new(()),
        }
    }

    /// In-memory store seeded with existing chains.
    pub fn from_chains(
        options: ChainOptions,
        chains: impl IntoIterator<Item = ProvenanceChain>,
    ) -> Self {
        let store = Self::in_memory(options);
        {
            let mut slots = store.slots.write();
            let mut events = store.events.lock();
            for mut chain in chains {
                chain.set_half_life(options.half_life);
                for r in chain.records() {
                    events.insert(r.interaction.event.event_id.clone());
                }
                slots.insert(
                    chain.principal().clone(),
                    Arc::new(RwLock::new(Slot { chain, file: None })),
                );
            }
        }
        store
    }

    /// Opens (creating if needed) a data directory and loads every chain.
    /// A torn final line left by a crash is truncated; any other damage
    /// refuses the open.
    pub fn open(root: impl Into<PathBuf>, options: ChainOptions) -> Result<Self, ProvenanceError> {
        let root = root.into();
        let dir = root.join(CHAINS_DIR);
        fs::create_dir_all(&dir)?;
        let mut principals = Vec::new();
        let mut seen = HashSet::new();
        if let Ok(index) = fs::read_to_string(dir.join(INDEX_FILE)) {
            for line in index.lines().filter(|l| !l.is_empty()) {
                if let Some(p) = decode_principal(line) {
                    if seen.insert(p.clone()) {
                        principals.push(p);
                    }
                }
            }
        }
        let mut extra = Vec::new();
        for entry in fs::read_dir(&dir)? {
            let name = entry?.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".log")) else {
                continue;
            };
            if let Some(p) = decode_principal(stem) {
                if !seen.contains(&p) {
                    extra.push(p);
                }
            }
        }
        extra.sort();
        for p in extra {
            warn!(principal = %p, "chain file missing from index");
            seen.insert(p.clone());
            principals.push(p);
        }

        let store = Self::in_memory(options);
        let store = Self {
            root: Some(root.clone()),
            ..store
        };
        {
            let mut slots = store.slots.write();
            let mut events = store.events.lock();
            for principal in principals {
                let path = chain_file_path(&root, &principal);
                let records = if path.exists() {
                    let file = read_chain_file(&path)?;
                    if let Some(i) = file.bad_line {
                        return Err(ProvenanceError::Corrupt {
                            principal,
                            index: i as u64,
                        });
                    }
                    if file.torn_tail > 0 {
                        warn!(principal = %principal, bytes = file.torn_tail, "truncating torn tail");
                        let len = fs::metadata(&path)?.len() - file.torn_tail as u64;
                        OpenOptions::new().write(true).open(&path)?.set_len(len)?;
                    }
                    file.records
                } else {
                    Vec::new()
                };
                let chain = ProvenanceChain::from_records(principal.clone(), records, options)
                    .map_err(|(report, _)| ProvenanceError::Corrupt {
                        principal: principal.clone(),
                        index: report.first_bad_index.unwrap_or(0),
                    })?;
                for r in chain.records() {
                    events.insert(r.interaction.event.event_id.clone());
                }
                slots.insert(principal, Arc::new(RwLock::new(Slot { chain, file: None })));
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn options(&self) -> ChainOptions {
        *self.options.read()
    }

    /// Changes the relevance half-life for chains touched from now on.
    pub fn set_half_life(&self, half_life: Duration) {
        self.options.write().half_life = half_life;
    }

    fn slot(&self, principal: &PrincipalId) -> Arc<RwLock<Slot>> {
        if let Some(slot) = self.slots.read().get(principal) {
            return Arc::clone(slot);
        }
        let options = self.options();
        let mut slots = self.slots.write();
        Arc::clone(slots.entry(principal.clone()).or_insert_with(|| {
            Arc::new(RwLock::new(Slot {
                chain: ProvenanceChain::new(principal.clone(), options),
                file: None,
            }))
        }))
    }

    fn register(&self, root: &Path, principal: &PrincipalId) -> io::Result<()> {
        let _guard = self.index.lock();
        let mut index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(root.join(CHAINS_DIR).join(INDEX_FILE))?;
        writeln!(index, "{}", urlencoding::encode(principal.as_str()))?;
        index.sync_data()
    }

    /// Runs `f` with exclusive access to `principal`'s chain, creating an
    /// empty chain on first contact.
    pub fn with_writer<R>(
        &self,
        principal: &PrincipalId,
        f: impl FnOnce(&mut ChainWriter<'_>) -> R,
    ) -> R {
        let slot = self.slot(principal);
        let mut guard = slot.write();
        let half_life = self.options().half_life;
        guard.chain.set_half_life(half_life);
        let mut writer = ChainWriter {
            slot: &mut guard,
            store: self,
        };
        f(&mut writer)
    }

    /// Runs `f` against a consistent snapshot of an existing chain.
    pub fn with_chain<R>(
        &self,
        principal: &PrincipalId,
        f: impl FnOnce(&ProvenanceChain) -> R,
    ) -> Option<R> {
        let slot = self.slots.read().get(principal).cloned()?;
        let guard = slot.read();
        Some(f(&guard.chain))
    }

    pub fn append(&self, input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError> {
        let principal = input.principal.clone();
        self.with_writer(&principal, |w| w.append(input))
    }

    /// Verifies the persisted file when the store is durable, the in-memory
    /// chain otherwise. Unknown principals have an empty, valid chain.
    pub fn verify(&self, principal: &PrincipalId) -> io::Result<VerificationReport> {
        let Some(slot) = self.slots.read().get(principal).cloned() else {
            return Ok(VerificationReport::VALID);
        };
        let guard = slot.read();
        match &self.root {
            Some(root) => {
                let path = chain_file_path(root, principal);
                if path.exists() {
                    verify_chain_file(&path, principal)
                } else {
                    Ok(guard.chain.verify())
                }
            }
            None => Ok(guard.chain.verify()),
        }
    }

    pub fn principals(&self) -> Vec<PrincipalId> {
        let mut out: Vec<_> = self.slots.read().keys().cloned().collect();
        out.sort();
        out
    }

    pub fn total_records(&self) -> u64 {
        self.slots
            .read()
            .values()
            .map(|s| s.read().chain.len() as u64)
            .sum()
    }

    /// Deep copy of every chain.
    pub fn snapshot(&self) -> Vec<ProvenanceChain> {
        let slots = self.slots.read();
        let mut out: Vec<_> = slots.values().map(|s| s.read().chain.clone()).collect();
        out.sort_by(|a, b| a.principal().cmp(b.principal()));
        out
    }
}

fn decode_principal(encoded: &str) -> Option<PrincipalId> {
    let decoded = urlencoding::decode(encoded).ok()?;
    PrincipalId::new(decoded.into_owned()).ok()
}
