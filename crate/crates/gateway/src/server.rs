use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard, Weak};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hdlt_core::ledger::Transaction;
use hdlt_core::msp::SessionToken;
use hdlt_core::Digest256;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::session::{Clock, Session, SessionError};
use crate::{Gateway, GatewayError, Invoked, NewUser};

/// Virtual network milliseconds simulated per wall-clock millisecond.
pub const DEFAULT_TICKS_PER_MS: u64 = 50;
/// Most virtual time one driver step may cover, so a stalled step does not
/// snowball into ever larger ones.
const MAX_STEP_TICKS: u64 = 500;
const RETRY: Duration = Duration::from_millis(20);
const RESUBMIT: Duration = Duration::from_millis(1_000);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub ticks_per_ms: u64,
    /// Wall-clock wait for a commit before answering 504.
    pub commit_timeout: Duration,
    pub body_limit: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            ticks_per_ms: DEFAULT_TICKS_PER_MS,
            commit_timeout: Duration::from_secs(10),
            body_limit: crate::docs::DEFAULT_DOC_LIMIT + 1024 * 1024,
        }
    }
}

struct Shared {
    gw: Mutex<Gateway>,
    clock: Arc<dyn Clock>,
    height: watch::Receiver<u64>,
    commit_timeout: Duration,
}

/// Handle shared by all request handlers.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    /// Wrap a started gateway and spawn the task that steps its network.
    /// The task ends when the last handle is dropped.
    pub fn new(gateway: Gateway, clock: Arc<dyn Clock>, config: &ServerConfig) -> Self {
        let (tx, rx) = watch::channel(gateway.height());
        let shared = Arc::new(Shared {
            gw: Mutex::new(gateway),
            clock,
            height: rx,
            commit_timeout: config.commit_timeout,
        });
        tokio::spawn(drive(Arc::downgrade(&shared), tx, config.ticks_per_ms));
        AppState(shared)
    }

    pub fn lock(&self) -> MutexGuard<'_, Gateway> {
        self.0.gw.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn now_ms(&self) -> u64 {
        self.0.clock.now_ms()
    }

    fn session(&self, headers: &HeaderMap) -> Result<Session, GatewayError> {
        let token = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .and_then(|t| t.trim().parse::<SessionToken>().ok())
            .ok_or(SessionError::Missing)?;
        let now = self.now_ms();
        self.lock().session(&token, now)
    }

    /// Order a prepared transaction and wait for the invoker's anchor peer
    /// to commit it, retrying and resubmitting like
    /// [`Gateway::submit_and_wait`] but in wall-clock time.
    pub async fn commit(&self, tx: Transaction) -> Result<Invoked, GatewayError> {
        let org = tx.proposal.invoker_cert.org.clone();
        let deadline = Instant::now() + self.0.commit_timeout;
        let mut next_submit = Instant::now();
        let mut heights = self.0.height.clone();
        loop {
            let now = Instant::now();
            {
                let mut gw = self.lock();
                if let Some(r) = gw.receipt(&org, &tx.tx_id) {
                    return gw.finish(&tx, r);
                }
                if now >= deadline {
                    return Err(GatewayError::Timeout {
                        tx_id: tx.tx_id,
                        timeout_ms: self.0.commit_timeout.as_millis() as u64,
                    });
                }
                if now >= next_submit {
                    next_submit = now + if gw.submit(tx.clone()).is_ok() { RESUBMIT } else { RETRY };
                }
            }
            let wait = deadline.saturating_duration_since(now).min(RETRY);
            if let Ok(Err(_)) = tokio::time::timeout(wait, heights.changed()).await {
                tokio::time::sleep(wait).await;
            }
        }
    }

    async fn invoke(&self, headers: &HeaderMap, function: &str, args: Value) -> ApiResult {
        let session = self.session(headers)?;
        let tx = self.lock().prepare(&session, function, args)?;
        Ok(Json(serde_json::to_value(self.commit(tx).await?).expect("receipt serializes")))
    }

    fn query(&self, headers: &HeaderMap, function: &str, args: Value) -> ApiResult {
        let session = self.session(headers)?;
        Ok(Json(self.lock().query(&session, function, args)?))
    }
}

async fn drive(shared: Weak<Shared>, height: watch::Sender<u64>, ticks_per_ms: u64) {
    let mut interval = tokio::time::interval(Duration::from_millis(1));
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let mut last = Instant::now();
    loop {
        interval.tick().await;
        let Some(shared) = shared.upgrade() else { break };
        let elapsed = last.elapsed().as_millis().max(1) as u64;
        last = Instant::now();
        let h = {
            let mut gw = shared.gw.lock().unwrap_or_else(|e| e.into_inner());
            gw.advance((elapsed * ticks_per_ms).min(MAX_STEP_TICKS));
            gw.height()
        };
        height.send_if_modified(|v| std::mem::replace(v, h) != h);
    }
}

/// Error body: `{"error": <message>, "code": <name>}`.
pub struct ApiError(pub GatewayError);

impl<E: Into<GatewayError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.0.to_string(), "code": self.0.code() }))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;
type Params = Query<HashMap<String, String>>;

/// Request bodies are JSON objects; an empty body is an empty object.
fn object(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Map::new());
    }
    match serde_json::from_slice(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(GatewayError::BadRequest("body must be a JSON object".into()).into()),
        Err(e) => Err(GatewayError::BadRequest(format!("malformed JSON: {e}")).into()),
    }
}

fn with(body: &Bytes, key: &str, value: Value) -> Result<Value, ApiError> {
    let mut m = object(body)?;
    m.insert(key.to_string(), value);
    Ok(Value::Object(m))
}

/// Query parameters as contract arguments: booleans and integers are typed.
fn params(q: HashMap<String, String>) -> Value {
    Value::Object(
        q.into_iter()
            .map(|(k, v)| {
                let typed = match v.as_str() {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    s => s.parse::<u64>().map_or_else(|_| Value::String(v.clone()), Value::from),
                };
                (k, typed)
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct LoginBody {
    identity_id: String,
    password: String,
}

async fn login(State(st): State<AppState>, Json(b): Json<LoginBody>) -> ApiResult {
    let now = st.now_ms();
    let (token, session) = st.lock().login(&b.identity_id, &b.password, now)?;
    Ok(Json(json!({
        "token": token.to_string(),
        "identity_id": session.identity_id,
        "org": session.org,
        "role": session.role,
        "stakeholder": session.stakeholder,
    })))
}

async fn health(State(st): State<AppState>) -> Json<Value> {
    let gw = st.lock();
    Json(json!({ "status": "ok", "height": gw.height(), "leader": gw.network().leader() }))
}

async fn add_user(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let admin = st.session(&headers)?;
    let user: NewUser = serde_json::from_value(Value::Object(object(&body)?))
        .map_err(|e| GatewayError::BadRequest(format!("bad user: {e}")))?;
    let tx = st.lock().prepare_registration(&admin, &user)?;
    match st.commit(tx).await {
        Ok(done) => Ok(Json(serde_json::to_value(done).expect("receipt serializes"))),
        Err(e) => {
            st.lock().rollback_registration(&admin.org, &user.identity_id);
            Err(e.into())
        }
    }
}

async fn register_doctor(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "register_doctor", Value::Object(object(&body)?)).await
}

async fn get_doctor(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.query(&h, "get_doctor", json!({ "doctor_id": id }))
}

async fn list_doctors(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "list_doctors", params(q))
}

async fn approve_doctor(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let mut args = object(&body)?;
    args.entry("decision").or_insert_with(|| json!("approve"));
    args.insert("doctor_id".into(), json!(id));
    st.invoke(&h, "approve_doctor", Value::Object(args)).await
}

async fn submit_credential(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let session = st.session(&h)?;
    if session.identity_id != id {
        return Err(hdlt_chaincode::ChaincodeError::Authorization("doctors update their own credentials only".into()).into());
    }
    st.invoke(&h, "submit_credential_update", Value::Object(object(&body)?)).await
}

async fn approve_credential(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.invoke(&h, "approve_credential", json!({ "credential_id": id })).await
}

async fn list_medicines(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "list_medicines", params(q))
}

async fn add_medicine(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "add_medicine", Value::Object(object(&body)?)).await
}

async fn authorize_medicine(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let mut args = object(&body)?;
    args.entry("authorized").or_insert(Value::Bool(true));
    args.insert("medicine_id".into(), json!(id));
    st.invoke(&h, "set_medicine_authorized", Value::Object(args)).await
}

async fn prescribe(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "create_prescription", Value::Object(object(&body)?)).await
}

async fn history(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.query(&h, "get_medical_history", json!({ "patient_id": id }))
}

async fn request_appointment(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "request_appointment", Value::Object(object(&body)?)).await
}

async fn confirm_appointment(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.invoke(&h, "confirm_appointment", json!({ "appt_id": id })).await
}

async fn cancel_appointment(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.invoke(&h, "cancel_appointment", json!({ "appt_id": id })).await
}

async fn file_complaint(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "file_complaint", Value::Object(object(&body)?)).await
}

async fn list_complaints(State(st): State<AppState>, h: HeaderMap) -> ApiResult {
    st.query(&h, "list_complaints", json!({}))
}

async fn complaint(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.query(&h, "get_complaint_status", json!({ "complaint_id": id }))
}

async fn review_complaint(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let mut args = with(&body, "complaint_id", json!(id))?;
    if let Some(m) = args.as_object_mut() {
        m.entry("action").or_insert_with(|| json!("review"));
    }
    st.invoke(&h, "review_complaint", args).await
}

async fn grant_consent(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "grant_consent", Value::Object(object(&body)?)).await
}

async fn specialists(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "find_specialist", params(q))
}

async fn record_distribution(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "record_distribution", Value::Object(object(&body)?)).await
}

async fn list_distributions(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "list_distributions", params(q))
}

async fn tendency(State(st): State<AppState>, h: HeaderMap, Path(id): Path<String>) -> ApiResult {
    st.query(&h, "prescribing_tendency", json!({ "doctor_id": id }))
}

async fn stats(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "anonymized_stats", params(q))
}

async fn post_news(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.invoke(&h, "post_news", Value::Object(object(&body)?)).await
}

async fn get_news(State(st): State<AppState>, h: HeaderMap, Query(q): Params) -> ApiResult {
    st.query(&h, "get_news", params(q))
}

async fn put_document(State(st): State<AppState>, h: HeaderMap, body: Bytes) -> ApiResult {
    st.session(&h)?;
    let media_type = h
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/octet-stream");
    let size = body.len();
    let digest = st.lock().docs_mut().put(body.to_vec(), media_type)?;
    Ok(Json(json!({ "digest": digest, "media_type": media_type, "size_bytes": size })))
}

async fn get_document(State(st): State<AppState>, h: HeaderMap, Path(digest): Path<String>) -> Result<Response, ApiError> {
    st.session(&h)?;
    let digest: Digest256 = digest
        .parse()
        .map_err(|_| GatewayError::BadRequest(format!("{digest} is not a document digest")))?;
    let gw = st.lock();
    let doc = gw.docs().get(&digest)?;
    Ok(([(header::CONTENT_TYPE, doc.media_type.clone())], doc.content.clone()).into_response())
}

pub fn router(state: AppState, config: &ServerConfig) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/auth/login", post(login))
        .route("/admin/users", post(add_user))
        .route("/doctors", post(register_doctor).get(list_doctors))
        .route("/doctors/{id}", get(get_doctor))
        .route("/doctors/{id}/approve", post(approve_doctor))
        .route("/doctors/{id}/credentials", post(submit_credential))
        .route("/credentials/{id}/approve", post(approve_credential))
        .route("/medicines", get(list_medicines).post(add_medicine))
        .route("/medicines/{id}/authorize", post(authorize_medicine))
        .route("/prescriptions", post(prescribe))
        .route("/patients/{id}/history", get(history))
        .route("/appointments", post(request_appointment))
        .route("/appointments/{id}/confirm", post(confirm_appointment))
        .route("/appointments/{id}/cancel", post(cancel_appointment))
        .route("/complaints", post(file_complaint).get(list_complaints))
        .route("/complaints/{id}", get(complaint))
        .route("/complaints/{id}/review", post(review_complaint))
        .route("/consents", post(grant_consent))
        .route("/specialists", get(specialists))
        .route("/distributions", post(record_distribution).get(list_distributions))
        .route("/analytics/tendency/{doctor_id}", get(tendency))
        .route("/analytics/stats", get(stats))
        .route("/news", post(post_news).get(get_news))
        .route("/documents", axum::routing::put(put_document))
        .route("/documents/{digest}", get(get_document))
        .layer(DefaultBodyLimit::max(config.body_limit))
        .with_state(state)
}

/// A gateway serving HTTP on a bound address.
pub struct RunningGateway {
    pub addr: SocketAddr,
    pub state: AppState,
    task: JoinHandle<()>,
}

impl RunningGateway {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for RunningGateway {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Bind `addr` and serve the API in the background.
pub async fn serve(
    gateway: Gateway,
    addr: SocketAddr,
    clock: Arc<dyn Clock>,
    config: ServerConfig,
) -> std::io::Result<RunningGateway> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let state = AppState::new(gateway, clock, &config);
    let app = router(state.clone(), &config);
    let task = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("gateway server stopped: {e}");
        }
    });
    Ok(RunningGateway { addr, state, task })
}
