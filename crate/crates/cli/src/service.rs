//! HTTP/JSON endpoints for the proofreading UI.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;

use structseg::proofread::{uncertainty_order, Action, Decision};
use structseg::raster::encode_raw_float;
use structseg::Error;

use crate::rle;
use crate::workspace::{list_images, valid_id, Image};

pub struct AppState {
    root: PathBuf,
    token: Option<String>,
    images: Mutex<HashMap<String, Arc<RwLock<Image>>>>,
}

impl AppState {
    pub fn new(root: impl Into<PathBuf>, token: Option<String>) -> Arc<Self> {
        Arc::new(Self {
            root: root.into(),
            token: token.filter(|t| !t.is_empty()),
            images: Mutex::new(HashMap::new()),
        })
    }

    fn image(&self, id: &str) -> Result<Arc<RwLock<Image>>, ApiError> {
        if !valid_id(id) {
            return Err(ApiError::UnknownImage(id.to_string()));
        }
        let mut cache = self.images.lock().expect("image cache lock");
        if let Some(img) = cache.get(id) {
            return Ok(img.clone());
        }
        let dir = self.root.join(id);
        if !dir.is_dir() || crate::workspace::field_path(&dir).is_none() {
            return Err(ApiError::UnknownImage(id.to_string()));
        }
        let img = Arc::new(RwLock::new(Image::open(&dir)?));
        cache.insert(id.to_string(), img.clone());
        Ok(img)
    }
}

#[derive(Debug)]
pub enum ApiError {
    UnknownImage(String),
    Unauthorized,
    BadRequest(String),
    Core(Error),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Core(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            ApiError::UnknownImage(id) => (StatusCode::NOT_FOUND, "UnknownImage", format!("no image {id}")),
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token".into()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "BadRequest", m),
            ApiError::Core(e) => {
                let status = match &e {
                    Error::UnknownBranch(_) => StatusCode::NOT_FOUND,
                    Error::NoOpDecision { .. } => StatusCode::CONFLICT,
                    Error::InvalidParams(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
                    _ => StatusCode::INTERNAL_SERVER_ERROR,
                };
                (status, e.kind(), e.to_string())
            }
        };
        (status, Json(json!({ "error": kind, "message": message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/images", get(images))
        .route("/images/{id}/branches", get(branches))
        .route("/images/{id}/segmentation", get(segmentation))
        .route("/images/{id}/uncertainty", get(uncertainty))
        .route("/images/{id}/decisions", post(decide))
        .route("/images/{id}/history", get(history))
        .layer(middleware::from_fn_with_state(state.clone(), auth))
        .with_state(state)
}

async fn auth(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ImageEntry {
    pub id: String,
    pub has_gt: bool,
}

async fn images(State(state): State<Arc<AppState>>) -> ApiResult<Vec<ImageEntry>> {
    let ids = list_images(&state.root)?;
    Ok(Json(
        ids.into_iter()
            .map(|id| ImageEntry {
                has_gt: state.root.join(&id).join("gt.pgm").is_file(),
                id,
            })
            .collect(),
    ))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BranchInfo {
    pub id: u32,
    /// `None` for a branch that never dies.
    pub persistence: Option<f64>,
    pub probability: f64,
    pub uncertainty: f64,
    pub decision: Decision,
    pub included: bool,
    pub rle: Vec<[u32; 2]>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BranchList {
    pub width: usize,
    pub height: usize,
    pub branches: Vec<BranchInfo>,
}

/// Branches in proofreading order: descending uncertainty.
async fn branches(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<BranchList> {
    let img = state.image(&id)?;
    let img = img.read().expect("image lock");
    let family = img.session.family();
    let mut out = Vec::with_capacity(family.len());
    for bid in uncertainty_order(family, &img.dist)? {
        let b = family.branch(bid).expect("id comes from the family");
        out.push(BranchInfo {
            id: bid,
            persistence: b.persistence.is_finite().then_some(b.persistence),
            probability: img.dist.probability(b.persistence)?,
            uncertainty: img.dist.uncertainty(b.persistence)?,
            decision: img.session.decision(bid),
            included: img.session.is_included(bid)?,
            rle: rle::encode_indices(&b.pixels),
        });
    }
    let (width, height) = family.dims();
    Ok(Json(BranchList {
        width,
        height,
        branches: out,
    }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SegmentationView {
    pub width: usize,
    pub height: usize,
    pub rle: Vec<[u32; 2]>,
    pub voi: Option<f64>,
    pub clicks: usize,
}

fn segmentation_view(img: &Image) -> Result<SegmentationView, ApiError> {
    let seg = img.session.segmentation();
    let (width, height) = seg.dims();
    Ok(SegmentationView {
        width,
        height,
        rle: rle::encode_mask(seg),
        voi: img.session.current_voi()?,
        clicks: img.session.clicks(),
    })
}

async fn segmentation(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SegmentationView> {
    let img = state.image(&id)?;
    let img = img.read().expect("image lock");
    Ok(Json(segmentation_view(&img)?))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct UncertaintyView {
    pub width: usize,
    pub height: usize,
    /// Always `raw-float`: a JSON header line then little-endian f32 values.
    pub encoding: String,
    pub data: String,
}

async fn uncertainty(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<UncertaintyView> {
    let img = state.image(&id)?;
    let img = img.read().expect("image lock");
    let (width, height) = img.uncertainty.dims();
    Ok(Json(UncertaintyView {
        width,
        height,
        encoding: "raw-float".into(),
        data: base64::engine::general_purpose::STANDARD.encode(encode_raw_float(&img.uncertainty)),
    }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DecisionRequest {
    pub branch_id: u32,
    pub action: Action,
}

async fn decide(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<SegmentationView> {
    let req: DecisionRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("bad decision body: {e}")))?;
    let img = state.image(&id)?;
    let mut img = img.write().expect("image lock");
    img.session.apply_decision(req.branch_id, req.action)?;
    img.persist()?;
    Ok(Json(segmentation_view(&img)?))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Click {
    pub branch_id: u32,
    pub action: Action,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct History {
    pub click_log: Vec<Click>,
    pub voi_history: Vec<f64>,
}

async fn history(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<History> {
    let img = state.image(&id)?;
    let img = img.read().expect("image lock");
    let s = img.session.state();
    Ok(Json(History {
        click_log: s
            .click_log
            .iter()
            .map(|&(branch_id, action)| Click { branch_id, action })
            .collect(),
        voi_history: s.voi_history.clone(),
    }))
}

pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
