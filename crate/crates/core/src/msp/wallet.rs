use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{HealthCard, MspError};
use crate::codec::{from_canonical, to_canonical};

/// Health cards held by the application server, at most one per identity.
///
/// When file-backed, each card lives at `<dir>/<org>/<identity_id>.card`,
/// readable by the owner only.
#[derive(Debug, Default, Clone)]
pub struct Wallet {
    dir: Option<PathBuf>,
    cards: BTreeMap<String, HealthCard>,
}

impl Wallet {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or create) a file-backed wallet and load every card under `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, MspError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut cards = BTreeMap::new();
        for org in fs::read_dir(&dir)? {
            let org = org?;
            if !org.file_type()?.is_dir() {
                continue;
            }
            for entry in fs::read_dir(org.path())? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("card") {
                    continue;
                }
                let bytes = fs::read(&path)?;
                let card: HealthCard = from_canonical(&bytes).map_err(|e| MspError::CorruptCard {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                cards.insert(card.identity_id.clone(), card);
            }
        }
        Ok(Wallet { dir: Some(dir), cards })
    }

    pub fn contains(&self, identity_id: &str) -> bool {
        self.cards.contains_key(identity_id)
    }

    pub fn get(&self, identity_id: &str) -> Option<&HealthCard> {
        self.cards.get(identity_id)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn cards(&self) -> impl Iterator<Item = &HealthCard> {
        self.cards.values()
    }

    pub fn insert(&mut self, card: HealthCard) -> Result<(), MspError> {
        if self.cards.contains_key(&card.identity_id) {
            return Err(MspError::DuplicateIdentity(card.identity_id));
        }
        if let Some(dir) = &self.dir {
            write_card(dir, &card)?;
        }
        self.cards.insert(card.identity_id.clone(), card);
        Ok(())
    }

    /// Deleting the card is the only way to remove a member.
    pub fn remove(&mut self, identity_id: &str) -> Result<Option<HealthCard>, MspError> {
        let Some(card) = self.cards.remove(identity_id) else {
            return Ok(None);
        };
        if let Some(dir) = &self.dir {
            let path = card_path(dir, &card);
            if path.exists() {
                fs::remove_file(path)?;
            }
        }
        Ok(Some(card))
    }
}

fn card_path(dir: &Path, card: &HealthCard) -> PathBuf {
    dir.join(&card.org).join(format!("{}.card", card.identity_id))
}

fn write_card(dir: &Path, card: &HealthCard) -> std::io::Result<()> {
    let path = card_path(dir, card);
    fs::create_dir_all(path.parent().expect("card path has a parent"))?;
    let mut options = fs::OpenOptions::new();
    options.write(true).create_new(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(&path)?;
    file.write_all(&to_canonical(card))?;
    file.sync_all()
}
