//! File-per-campaign persistence of event logs.
//!
//! Each campaign lives in `<store>/<id>.json` as a [`CampaignRecord`]. The
//! stored events are the source of truth: loading replays them and the
//! replay must reproduce every recorded seed draw and suggestion.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adoe_core::engine::{Campaign, CampaignConfig, CampaignEvent};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("campaign `{0}` not found")]
    NotFound(String),
    #[error("campaign `{id}` has schema version {found}; this build reads version {SCHEMA_VERSION}")]
    Version { id: String, found: u64 },
    #[error("campaign `{id}` is corrupt: {reason}")]
    Corrupt { id: String, reason: String },
    #[error("invalid campaign id `{0}`")]
    InvalidId(String),
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] adoe_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StampedEvent {
    pub at: DateTime<Utc>,
    pub event: CampaignEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    pub config: CampaignConfig,
    pub events: Vec<StampedEvent>,
}

impl CampaignRecord {
    pub fn new(id: String, campaign: &Campaign) -> Self {
        let now = Utc::now();
        Self {
            schema_version: SCHEMA_VERSION,
            id,
            seed: campaign.state.config.seed,
            config: campaign.state.config.clone(),
            events: campaign
                .events
                .iter()
                .map(|e| StampedEvent { at: now, event: e.clone() })
                .collect(),
        }
    }

    /// Stamp and append events the campaign gained since this record was written.
    pub fn sync(&mut self, campaign: &Campaign) {
        let now = Utc::now();
        for e in &campaign.events[self.events.len().min(campaign.events.len())..] {
            self.events.push(StampedEvent { at: now, event: e.clone() });
        }
    }

    pub fn replay(&self) -> Result<Campaign, StoreError> {
        let events: Vec<CampaignEvent> = self.events.iter().map(|e| e.event.clone()).collect();
        let campaign = Campaign::replay(&events).map_err(|e| StoreError::Corrupt {
            id: self.id.clone(),
            reason: e.to_string(),
        })?;
        if campaign.state.config != self.config || campaign.state.config.seed != self.seed {
            return Err(StoreError::Corrupt {
                id: self.id.clone(),
                reason: "header config does not match the seeded event".into(),
            });
        }
        Ok(campaign)
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(format!("{id}.json")))
    }

    pub fn new_id() -> String {
        uuid::Uuid::new_v4().simple().to_string()[..12].to_string()
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).is_ok_and(|p| p.exists())
    }

    /// Write via a temporary file and rename, so readers never see a
    /// half-written record.
    pub fn save(&self, record: &CampaignRecord) -> Result<(), StoreError> {
        let path = self.path(&record.id)?;
        let tmp = self.root.join(format!(".{}.{}.tmp", record.id, uuid::Uuid::new_v4().simple()));
        let text = serde_json::to_string_pretty(record).map_err(|e| StoreError::Corrupt {
            id: record.id.clone(),
            reason: e.to_string(),
        })?;
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<CampaignRecord, StoreError> {
        let path = self.path(id)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| StoreError::Corrupt { id: id.to_string(), reason };
        let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        let found = raw
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| corrupt("missing schema_version".into()))?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(StoreError::Version { id: id.to_string(), found });
        }
        let record: CampaignRecord = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if record.id != id {
            return Err(corrupt(format!("file holds campaign `{}`", record.id)));
        }
        Ok(record)
    }

    /// Load and replay, returning the record and the rebuilt campaign.
    pub fn open_campaign(&self, id: &str) -> Result<(CampaignRecord, Campaign), StoreError> {
        let record = self.load(id)?;
        let campaign = record.replay()?;
        Ok((record, campaign))
    }

    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".json")?;
                valid_id(id).then(|| id.to_string())
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}
