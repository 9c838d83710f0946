use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::Sample;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Login {
    pub identity_id: String,
    pub password: String,
}

/// A request a virtual user may issue. `{user}` and `{iter}` in the path or
/// in body strings are replaced by the user index and loop counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTemplate {
    pub role: String,
    pub weight: u32,
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub body: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    #[serde(default = "default_users")]
    pub users: u32,
    #[serde(default = "default_ramp_up")]
    pub ramp_up_s: u32,
    pub duration_s: u32,
    pub target_base_url: String,
    /// Role of user `i` is `roles[i % roles.len()]`.
    pub roles: Vec<String>,
    /// Accounts per role; user `i` logs in with entry `i % len`.
    pub logins: BTreeMap<String, Vec<Login>>,
    pub scenario: Vec<RouteTemplate>,
    #[serde(default)]
    pub think_time_ms: u64,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_ms: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_users() -> u32 {
    100
}

fn default_ramp_up() -> u32 {
    10
}

fn default_request_timeout() -> u64 {
    10_000
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("target {0} is unreachable")]
    TargetUnreachable(String),
    #[error("invalid load config: {0}")]
    Config(String),
}

impl LoadConfig {
    pub fn validate(&self) -> Result<(), LoadError> {
        let bad = |m: String| Err(LoadError::Config(m));
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.roles.is_empty() {
            return bad("roles must not be empty".into());
        }
        for role in &self.roles {
            if !self.scenario.iter().any(|t| &t.role == role && t.weight > 0) {
                return bad(format!("no weighted route for role {role}"));
            }
            if self.logins.get(role).map_or(true, |l| l.is_empty()) {
                return bad(format!("no login for role {role}"));
            }
        }
        Ok(())
    }

    /// Offset at which user `i` starts: users are spread evenly over the ramp-up.
    pub fn activation_ms(&self, i: u32) -> u64 {
        self.ramp_up_s as u64 * 1000 * i as u64 / self.users as u64
    }
}

/// Fail fast when nothing answers at the target.
pub async fn probe(base_url: &str) -> Result<(), LoadError> {
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(5))
        .build()
        .map_err(|_| LoadError::TargetUnreachable(base_url.into()))?;
    client
        .get(format!("{}/health", base_url.trim_end_matches('/')))
        .send()
        .await
        .map(|_| ())
        .map_err(|_| LoadError::TargetUnreachable(base_url.into()))
}

fn substitute(text: &str, user: u32, iter: u64) -> String {
    text.replace("{user}", &user.to_string()).replace("{iter}", &iter.to_string())
}

fn substitute_value(v: &Value, user: u32, iter: u64) -> Value {
    match v {
        Value::String(s) => Value::String(substitute(s, user, iter)),
        Value::Array(a) => Value::Array(a.iter().map(|x| substitute_value(x, user, iter)).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, x)| (k.clone(), substitute_value(x, user, iter))).collect()),
        other => other.clone(),
    }
}

struct User {
    index: u32,
    login: Login,
    routes: Vec<RouteTemplate>,
    rng: ChaCha20Rng,
}

impl User {
    fn pick(&mut self) -> RouteTemplate {
        let total: u32 = self.routes.iter().map(|r| r.weight).sum();
        let mut roll = self.rng.gen_range(0..total);
        for r in &self.routes {
            if roll < r.weight {
                return r.clone();
            }
            roll -= r.weight;
        }
        unreachable!("roll is below the weight total")
    }
}

async fn timed(req: reqwest::RequestBuilder, route: String, epoch: Instant) -> (Sample, Option<Vec<u8>>) {
    let started = Instant::now();
    let started_at_ms = started.duration_since(epoch).as_millis() as u64;
    let (status, body) = match req.send().await {
        // Latency covers the full body, not just the headers.
        Ok(resp) => {
            let status = resp.status().as_u16();
            match resp.bytes().await {
                Ok(b) => (status, Some(b.to_vec())),
                Err(_) => (0, None),
            }
        }
        Err(_) => (0, None),
    };
    (Sample::new(route, started_at_ms, started.elapsed().as_millis() as u64, status), body)
}

async fn run_user(client: reqwest::Client, base: String, mut user: User, epoch: Instant, deadline: Instant, think: Duration, sink: Arc<Mutex<Vec<Sample>>>) {
    let mut token: Option<String> = None;
    let mut iter = 0u64;
    while Instant::now() < deadline {
        let Some(tok) = token.clone() else {
            let req = client.post(format!("{base}/auth/login")).json(&user.login);
            let (sample, body) = timed(req, "POST /auth/login".into(), epoch).await;
            if sample.ok {
                token = body
                    .and_then(|b| serde_json::from_slice::<Value>(&b).ok())
                    .and_then(|v| v.get("token").and_then(Value::as_str).map(String::from));
            }
            sink.lock().expect("sample sink").push(sample);
            if token.is_none() {
                tokio::time::sleep(think.max(Duration::from_millis(100))).await;
            }
            continue;
        };
        let route = user.pick();
        let path = substitute(&route.path, user.index, iter);
        let method = reqwest::Method::from_bytes(route.method.to_ascii_uppercase().as_bytes()).unwrap_or(reqwest::Method::GET);
        let mut req = client.request(method.clone(), format!("{base}{path}")).bearer_auth(&tok);
        if let Some(body) = &route.body {
            req = req.json(&substitute_value(body, user.index, iter));
        }
        let (sample, _) = timed(req, format!("{} {}", method, route.path), epoch).await;
        if sample.status == 401 {
            token = None;
        }
        sink.lock().expect("sample sink").push(sample);
        iter += 1;
        if !think.is_zero() {
            tokio::time::sleep(think).await;
        }
    }
}

/// Drive `users` virtual users against the target for `duration_s` seconds.
/// Every request becomes a sample; an unreachable target yields failed
/// samples rather than an error. Samples are ordered by start time.
pub async fn run_load(config: &LoadConfig) -> Result<Vec<Sample>, LoadError> {
    config.validate()?;
    let client = reqwest::Client::builder()
        .timeout(Duration::from_millis(config.request_timeout_ms))
        .pool_max_idle_per_host(config.users as usize)
        .build()
        .map_err(|e| LoadError::Config(e.to_string()))?;
    let base = config.target_base_url.trim_end_matches('/').to_string();
    let sink = Arc::new(Mutex::new(Vec::new()));
    let epoch = Instant::now();
    let deadline = epoch + Duration::from_secs(config.duration_s as u64);
    let think = Duration::from_millis(config.think_time_ms);
    let mut tasks = Vec::new();
    for i in 0..config.users {
        let role = config.roles[i as usize % config.roles.len()].clone();
        let logins = &config.logins[&role];
        let user = User {
            index: i,
            login: logins[i as usize % logins.len()].clone(),
            routes: config.scenario.iter().filter(|t| t.role == role && t.weight > 0).cloned().collect(),
            rng: ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(i as u64)),
        };
        let start_at = epoch + Duration::from_millis(config.activation_ms(i));
        let (client, base, sink) = (client.clone(), base.clone(), sink.clone());
        tasks.push(tokio::spawn(async move {
            tokio::time::sleep_until(start_at.into()).await;
            run_user(client, base, user, epoch, deadline, think, sink).await;
        }));
    }
    for t in tasks {
        let _ = t.await;
    }
    let mut samples = std::mem::take(&mut *sink.lock().expect("sample sink"));
    samples.sort_by_key(|s| s.started_at_ms);
    Ok(samples)
}
