use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use hdlt_core::msp::{Role, SessionToken, Stakeholder};
use serde::Serialize;
use thiserror::Error;

/// Sessions end after 30 minutes without a request.
pub const SESSION_IDLE_MS: u64 = 30 * 60 * 1000;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}

/// A clock tests move by hand.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub identity_id: String,
    pub org: String,
    pub role: Role,
    pub stakeholder: Stakeholder,
    #[serde(skip)]
    pub last_seen_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("missing or unknown session token")]
    Missing,
    #[error("session expired")]
    Expired,
}

#[derive(Debug)]
pub struct SessionStore {
    idle_ms: u64,
    sessions: HashMap<SessionToken, Session>,
}

impl SessionStore {
    pub fn new(idle_ms: u64) -> Self {
        SessionStore { idle_ms, sessions: HashMap::new() }
    }

    pub fn insert(&mut self, token: SessionToken, session: Session) {
        self.sessions.insert(token, session);
    }

    /// Look a session up and refresh its idle timer. Expired sessions are dropped.
    pub fn touch(&mut self, token: &SessionToken, now_ms: u64) -> Result<Session, SessionError> {
        let s = self.sessions.get_mut(token).ok_or(SessionError::Missing)?;
        if now_ms.saturating_sub(s.last_seen_ms) > self.idle_ms {
            self.sessions.remove(token);
            return Err(SessionError::Expired);
        }
        s.last_seen_ms = now_ms;
        Ok(s.clone())
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}
