//! HTTP/JSON decision service over a durable chain store.
//!
//! | method | path                               | body                   |
//! |--------|------------------------------------|------------------------|
//! | POST   | `/v1/decide`                       | access request         |
//! | POST   | `/v1/interactions`                 | record input           |
//! | GET    | `/v1/chains/{principal}/verify`    |                        |
//! | GET    | `/v1/config`                       |                        |
//! | PUT    | `/v1/config`                       | partial engine config  |
//! | POST   | `/v1/policies/reload`              |                        |
//!
//! Every response body is a JSON object carrying `seq` (increasing across
//! all responses) and `server_time` (Unix milliseconds). Errors carry
//! `error` (a stable code) and `message`.

mod handlers;
mod server;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{
    AccessRequest, ConfigError, DecideError, Decision, Engine, EngineConfig, FieldError,
};
use crate::policy::{PolicyError, PolicySet};
use crate::provenance::{
    ChainAccess, ChainStore, Digest32, PrincipalId, ProvenanceChain, ProvenanceError,
    ProvenanceRecord, RecordInput, VerificationReport,
};

pub use handlers::router;
pub use server::{serve, ServerHandle};

/// File in the data directory holding the engine configuration last set
/// through the API; it takes precedence over the config file on restart.
pub const CONFIG_OVERRIDE_FILE: &str = "config.json";

/// Contents of the daemon's `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaemonConfig {
    pub engine: EngineConfig,
    /// JSON policy document; no roles at all when absent.
    pub policy_path: Option<PathBuf>,
}

impl DaemonConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.policy_path.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.engine.rule_base_path.as_mut() {
            resolve(p);
        }
        Ok(config)
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum ConfigUpdateError {
    #[error("config update must be a JSON object")]
    NotAnObject,
    #[error("{0}")]
    Unparseable(String),
    #[error("invalid configuration")]
    Invalid(Vec<FieldError>),
    #[error("persisting the configuration failed: {0}")]
    Io(#[from] io::Error),
}

/// A decision together with the record that logged it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedDecision {
    pub decision: Decision,
    pub record_hash: Digest32,
    pub chain_length: u64,
}

/// Everything the handlers share. Engine and policies are swapped
/// atomically; each request reads them once at its start.
pub struct AppState {
    store: ChainStore,
    engine: RwLock<Arc<Engine>>,
    policies: RwLock<Arc<PolicySet>>,
    policy_path: Option<PathBuf>,
    data_dir: Option<PathBuf>,
    seq: AtomicU64,
}

impl AppState {
    /// Opens (creating if needed) `data_dir` and loads every persisted chain.
    pub fn open(config: DaemonConfig, data_dir: &Path) -> Result<Self, ServiceError> {
        fs::create_dir_all(data_dir)?;
        let override_path = data_dir.join(CONFIG_OVERRIDE_FILE);
        let engine_config = if override_path.exists() {
            let text = fs::read_to_string(&override_path)?;
            serde_json::from_str(&text)
                .map_err(|e| ServiceError::Config(format!("{}: {e}", override_path.display())))?
        } else {
            config.engine
        };
        let engine = Engine::new(engine_config)?;
        let policies = match &config.policy_path {
            Some(path) => PolicySet::load(path)?,
            None => PolicySet::default(),
        };
        let store = ChainStore::open(data_dir, engine.config().chain_options())?;
        Ok(Self::assemble(
            store,
            engine,
            policies,
            config.policy_path,
            Some(data_dir.to_path_buf()),
        ))
    }

    /// Non-durable state over the given chains.
    pub fn in_memory(
        engine: Engine,
        policies: PolicySet,
        chains: impl IntoIterator<Item = ProvenanceChain>,
    ) -> Self {
        let store = ChainStore::from_chains(engine.config().chain_options(), chains);
        Self::assemble(store, engine, policies, None, None)
    }

    fn assemble(
        store: ChainStore,
        engine: Engine,
        policies: PolicySet,
        policy_path: Option<PathBuf>,
        data_dir: Option<PathBuf>,
    ) -> Self {
        let seq = AtomicU64::new(store.total_records());
        Self {
            store,
            engine: RwLock::new(Arc::new(engine)),
            policies: RwLock::new(Arc::new(policies)),
            policy_path,
            data_dir,
            seq,
        }
    }

    pub fn store(&self) -> &ChainStore {
        &self.store
    }

    pub fn engine(&self) -> Arc<Engine> {
        Arc::clone(&self.engine.read())
    }

    pub fn policies(&self) -> Arc<PolicySet> {
        Arc::clone(&self.policies.read())
    }

    pub fn next_seq(&self) -> u64 {
        self.seq.fetch_add(1, Ordering::SeqCst) + 1
    }

    /// Decides and durably records the decision before returning it.
    pub fn decide(&self, request: &AccessRequest) -> Result<RecordedDecision, DecideError> {
        let engine = self.engine();
        let policies = self.policies();
        self.store.with_writer(&request.principal, |w| {
            let decision = engine.decide(request, &policies, w)?;
            Ok(RecordedDecision {
                decision,
                record_hash: w.chain().head_hash(),
                chain_length: w.chain().len() as u64,
            })
        })
    }

    pub fn record(&self, input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError> {
        self.store.append(input)
    }

    /// Report and chain length.
    pub fn verify(&self, principal: &PrincipalId) -> io::Result<(VerificationReport, u64)> {
        let report = self.store.verify(principal)?;
        let length = self
            .store
            .with_chain(principal, |c| c.len() as u64)
            .unwrap_or(0);
        Ok((report, length))
    }

    pub fn config(&self) -> EngineConfig {
        self.engine.read().config().clone()
    }

    /// Merges the fields in `patch` into the current configuration,
    /// validates the result, persists it and swaps it in. The clock-skew
    /// tolerance applies to chains loaded after a restart.
    pub fn update_config(
        &self,
        patch: serde_json::Value,
    ) -> Result<EngineConfig, ConfigUpdateError> {
        let serde_json::Value::Object(fields) = patch else {
            return Err(ConfigUpdateError::NotAnObject);
        };
        let mut engine = self.engine.write();
        let mut merged = serde_json::to_value(engine.config()).expect("serializable");
        let target = merged.as_object_mut().expect("config is an object");
        for (k, v) in fields {
            target.insert(k, v);
        }
        let config: EngineConfig = serde_json::from_value(merged)
            .map_err(|e| ConfigUpdateError::Unparseable(e.to_string()))?;
        config.validate().map_err(ConfigUpdateError::Invalid)?;
        let next = Engine::new(config.clone()).map_err(|e| {
            ConfigUpdateError::Invalid(vec![FieldError {
                field: "rule_base_path".into(),
                message: e.to_string(),
            }])
        })?;
        if let Some(dir) = &self.data_dir {
            let tmp = dir.join(format!("{CONFIG_OVERRIDE_FILE}.tmp"));
            let json = serde_json::to_vec_pretty(&config).expect("serializable");
            fs::write(&tmp, json)?;
            fs::File::open(&tmp)?.sync_all()?;
            fs::rename(&tmp, dir.join(CONFIG_OVERRIDE_FILE))?;
        }
        self.store
            .set_half_life(Duration::from_secs(config.half_life_secs));
        *engine = Arc::new(next);
        Ok(config)
    }

    /// Re-reads the policy file; returns the number of roles loaded.
    pub fn reload_policies(&self) -> Result<usize, PolicyError> {
        let Some(path) = &self.policy_path else {
            return Ok(self.policies().roles().count());
        };
        let next = PolicySet::load(path)?;
        let roles = next.roles().count();
        *self.policies.write() = Arc::new(next);
        Ok(roles)
    }
}

/// Wire form of an access request: `requested_at` defaults to the server
/// clock.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideBody {
    pub principal: PrincipalId,
    pub resource: String,
    pub action: String,
    #[serde(default)]
    pub context_tags: BTreeSet<String>,
    pub requested_at: Option<crate::provenance::Timestamp>,
}

impl DecideBody {
    pub fn into_request(self) -> AccessRequest {
        AccessRequest {
            principal: self.principal,
            resource: self.resource,
            action: self.action,
            context_tags: self.context_tags,
            requested_at: self
                .requested_at
                .unwrap_or_else(crate::provenance::Timestamp::now),
        }
    }
}
