//! HTTP API over the campaign store.
//!
//! Mutations of one campaign are serialized by a per-campaign lock held for
//! the whole load → change → save cycle. Reads take no lock: records are
//! replaced by atomic rename, so a read always sees a complete log.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use adoe_core::engine::{Campaign, CampaignConfig, CampaignState, ConvergencePoint};
use adoe_core::{Error, Trial};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_campaign, CampaignAnalysis};
use crate::store::{CampaignRecord, Store, StoreError};

pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(30);

#[derive(Clone)]
pub struct AppState {
    store: Store,
    locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
    time_budget: Duration,
}

impl AppState {
    pub fn new(store: Store, time_budget: Duration) -> Self {
        Self {
            store,
            locks: Arc::default(),
            time_budget,
        }
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pending: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: message.into(),
                pending: None,
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownTrial(_) => StatusCode::NOT_FOUND,
            Error::AlreadyObserved(_) | Error::PendingObservations(_) | Error::NotProposing(_) => StatusCode::CONFLICT,
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::OutOfBox(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::RankDeficient { .. } | Error::Fixture(_) | Error::InvalidGenerator { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::Factorization | Error::HyperparameterFit { .. } | Error::Evaluation { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let pending = match &e {
            Error::PendingObservations(ids) => Some(ids.clone()),
            _ => None,
        };
        Self {
            status,
            body: ErrorBody {
                error: e.to_string(),
                pending,
            },
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) | StoreError::InvalidId(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            StoreError::Engine(inner) => inner.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CampaignView {
    pub id: String,
    pub pending: Vec<String>,
    pub state: CampaignState,
}

impl CampaignView {
    fn of(id: String, campaign: &Campaign) -> Self {
        Self {
            id,
            pending: campaign.state.pending_ids(),
            state: campaign.state.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct SuggestQuery {
    pub count: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ObservationBody {
    pub responses: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManualTrialBody {
    pub settings: Vec<f64>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/campaigns", post(create).get(list))
        .route("/api/campaigns/{id}", get(show))
        .route("/api/campaigns/{id}/suggestions", post(suggest))
        .route("/api/campaigns/{id}/trials", post(add_manual))
        .route("/api/campaigns/{id}/trials/{tid}/observation", post(observe))
        .route("/api/campaigns/{id}/analysis", get(analysis))
        .route("/api/campaigns/{id}/pareto", get(pareto))
        .route("/api/campaigns/{id}/convergence", get(convergence))
        .with_state(state)
}

pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

async fn create(State(app): State<AppState>, Json(config): Json<CampaignConfig>) -> ApiResult<(StatusCode, Json<Created>)> {
    config.validate()?;
    let campaign = tokio::task::spawn_blocking(move || Campaign::start(config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let id = Store::new_id();
    app.store.save(&CampaignRecord::new(id.clone(), &campaign))?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn list(State(app): State<AppState>) -> ApiResult<Json<Vec<String>>> {
    Ok(Json(app.store.list()?))
}

fn snapshot(app: &AppState, id: &str) -> ApiResult<Campaign> {
    Ok(app.store.open_campaign(id)?.1)
}

async fn show(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CampaignView>> {
    let campaign = snapshot(&app, &id)?;
    Ok(Json(CampaignView::of(id, &campaign)))
}

/// Load, apply `change` off the async runtime within the time budget, and
/// save. The per-campaign lock is held throughout.
async fn mutate<T, F>(app: &AppState, id: &str, change: F) -> ApiResult<(Campaign, T)>
where
    T: Send + 'static,
    F: FnOnce(&mut Campaign) -> Result<T, Error> + Send + 'static,
{
    let lock = app.lock_for(id);
    let _guard = lock.lock().await;
    let (mut record, mut campaign) = app.store.open_campaign(id)?;
    let work = tokio::task::spawn_blocking(move || {
        let out = change(&mut campaign);
        (campaign, out)
    });
    let (campaign, out) = tokio::time::timeout(app.time_budget, work)
        .await
        .map_err(|_| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                format!("computation exceeded the {} s time budget", app.time_budget.as_secs_f64()),
            )
        })?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let value = out?;
    record.sync(&campaign);
    app.store.save(&record)?;
    Ok((campaign, value))
}

async fn suggest(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SuggestQuery>,
) -> ApiResult<Json<Vec<Trial>>> {
    let (_, trials) = mutate(&app, &id, move |c| c.suggest(q.count)).await?;
    Ok(Json(trials))
}

async fn add_manual(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ManualTrialBody>,
) -> ApiResult<(StatusCode, Json<Trial>)> {
    let (_, trial) = mutate(&app, &id, move |c| c.add_manual(body.settings)).await?;
    Ok((StatusCode::CREATED, Json(trial)))
}

async fn observe(
    State(app): State<AppState>,
    Path((id, tid)): Path<(String, String)>,
    Json(body): Json<ObservationBody>,
) -> ApiResult<Json<CampaignView>> {
    let (campaign, ()) = mutate(&app, &id, move |c| c.observe(&tid, body.responses)).await?;
    Ok(Json(CampaignView::of(id, &campaign)))
}

async fn analysis(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CampaignAnalysis>> {
    let campaign = snapshot(&app, &id)?;
    // Too few (or too collinear) observations is a sequencing problem: the
    // analysis becomes available as the campaign proceeds.
    analyze_campaign(&campaign.state)
        .map(Json)
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, e.to_string()))
}

async fn pareto(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<Trial>>> {
    let campaign = snapshot(&app, &id)?;
    Ok(Json(campaign.state.pareto().into_iter().cloned().collect()))
}

async fn convergence(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ConvergencePoint>>> {
    let campaign = snapshot(&app, &id)?;
    Ok(Json(campaign.state.convergence()))
}
