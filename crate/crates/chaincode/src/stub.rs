use std::collections::BTreeMap;

use hdlt_core::codec::to_canonical;
use hdlt_core::ledger::{KvRead, KvWrite, Version, WorldState};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::ChaincodeError;

/// Records every read against a state snapshot and buffers writes.
/// Reads see the transaction's own earlier writes.
pub struct Stub<'a> {
    state: &'a WorldState,
    reads: BTreeMap<String, Option<Version>>,
    writes: BTreeMap<String, Option<Vec<u8>>>,
}

impl<'a> Stub<'a> {
    pub fn new(state: &'a WorldState) -> Self {
        Stub { state, reads: BTreeMap::new(), writes: BTreeMap::new() }
    }

    pub fn get(&mut self, key: &str) -> Option<Vec<u8>> {
        if let Some(w) = self.writes.get(key) {
            return w.clone();
        }
        let found = self.state.get(key);
        self.reads.entry(key.to_string()).or_insert(found.map(|v| v.version));
        found.map(|v| v.value.clone())
    }

    pub fn put(&mut self, key: &str, value: Vec<u8>) {
        self.writes.insert(key.to_string(), Some(value));
    }

    pub fn delete(&mut self, key: &str) {
        self.writes.insert(key.to_string(), None);
    }

    /// Live entries under `prefix`, in key order. Each key found is recorded
    /// as a read; keys created concurrently by other transactions are not
    /// detected (no range locking).
    pub fn scan(&mut self, prefix: &str) -> Vec<(String, Vec<u8>)> {
        let mut found: BTreeMap<String, Vec<u8>> = BTreeMap::new();
        for (k, v) in self.state.scan_prefix(prefix) {
            self.reads.entry(k.clone()).or_insert(Some(v.version));
            found.insert(k.clone(), v.value.clone());
        }
        for (k, w) in self.writes.range(prefix.to_string()..).take_while(|(k, _)| k.starts_with(prefix)) {
            match w {
                Some(v) => found.insert(k.clone(), v.clone()),
                None => found.remove(k),
            };
        }
        found.into_iter().collect()
    }

    pub fn get_json<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>, ChaincodeError> {
        self.get(key)
            .map(|b| serde_json::from_slice(&b).map_err(|e| ChaincodeError::Validation(format!("corrupt record {key}: {e}"))))
            .transpose()
    }

    pub fn put_json<T: Serialize>(&mut self, key: &str, value: &T) {
        self.put(key, to_canonical(value));
    }

    pub fn scan_json<T: DeserializeOwned>(&mut self, prefix: &str) -> Result<Vec<T>, ChaincodeError> {
        self.scan(prefix)
            .into_iter()
            .map(|(k, b)| serde_json::from_slice(&b).map_err(|e| ChaincodeError::Validation(format!("corrupt record {k}: {e}"))))
            .collect()
    }

    pub fn exists(&mut self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn into_sets(self) -> (Vec<KvRead>, Vec<KvWrite>) {
        let reads = self.reads.into_iter().map(|(key, version)| KvRead { key, version }).collect();
        let writes = self.writes.into_iter().map(|(key, value)| KvWrite { key, value }).collect();
        (reads, writes)
    }
}
