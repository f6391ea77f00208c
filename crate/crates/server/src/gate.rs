//! Entry gate: fetch landmarks for an image from a provider and classify.
//!
//! Providers speak one shape: `POST /landmarks` with `{"image_ref": ...}`
//! answered by a landmark fixture document. A provider failure is an error,
//! never a verdict, so it cannot admit anyone.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use durian_core::mask::classify_mask;
use durian_core::{LandmarkSet, MaskThresholds, MaskVerdict};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::landmarks::{from_doc, parse_landmarks, to_doc, LandmarkDoc};

pub const DEFAULT_GATE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("landmark provider did not answer within {0:?}")]
    ProviderTimeout(Duration),
    #[error("landmark provider failed: {0}")]
    ProviderError(String),
}

#[async_trait]
pub trait LandmarkProvider: Send + Sync {
    async fn landmarks(&self, image_ref: &str) -> Result<LandmarkSet, GateError>;
}

#[async_trait]
impl<P: LandmarkProvider + ?Sized> LandmarkProvider for Arc<P> {
    async fn landmarks(&self, image_ref: &str) -> Result<LandmarkSet, GateError> {
        (**self).landmarks(image_ref).await
    }
}

/// Reads `<dir>/<image_ref>` (or `<image_ref>.json`) as a landmark fixture.
#[derive(Debug, Clone)]
pub struct FileProvider {
    dir: PathBuf,
}

impl FileProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileProvider { dir: dir.into() }
    }

    fn resolve(&self, image_ref: &str) -> Result<PathBuf, GateError> {
        let rel = Path::new(image_ref);
        if image_ref.is_empty() || rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(GateError::ProviderError(format!("bad image reference {image_ref:?}")));
        }
        let direct = self.dir.join(rel);
        if direct.is_file() {
            return Ok(direct);
        }
        Ok(self.dir.join(format!("{image_ref}.json")))
    }
}

#[async_trait]
impl LandmarkProvider for FileProvider {
    async fn landmarks(&self, image_ref: &str) -> Result<LandmarkSet, GateError> {
        let path = self.resolve(image_ref)?;
        let text = tokio::fs::read_to_string(&path)
            .await
            .map_err(|e| GateError::ProviderError(format!("{}: {e}", path.display())))?;
        parse_landmarks(&text).map_err(|e| GateError::ProviderError(e.to_string()))
    }
}

/// Answers every request with the same landmarks.
#[derive(Debug, Clone)]
pub struct FixedProvider(pub LandmarkSet);

#[async_trait]
impl LandmarkProvider for FixedProvider {
    async fn landmarks(&self, _image_ref: &str) -> Result<LandmarkSet, GateError> {
        Ok(self.0.clone())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LandmarkRequest {
    pub image_ref: String,
}

/// Remote provider reached over HTTP.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: reqwest::Client,
    endpoint: String,
}

impl HttpProvider {
    /// `base` is the provider root, e.g. `http://127.0.0.1:9000`.
    pub fn new(base: &str) -> Self {
        HttpProvider {
            client: reqwest::Client::new(),
            endpoint: format!("{}/landmarks", base.trim_end_matches('/')),
        }
    }
}

#[async_trait]
impl LandmarkProvider for HttpProvider {
    async fn landmarks(&self, image_ref: &str) -> Result<LandmarkSet, GateError> {
        let err = |e: reqwest::Error| GateError::ProviderError(e.to_string());
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&LandmarkRequest { image_ref: image_ref.to_owned() })
            .send()
            .await
            .map_err(err)?
            .error_for_status()
            .map_err(err)?;
        let doc: LandmarkDoc = resp.json().await.map_err(err)?;
        from_doc(&doc).map_err(|e| GateError::ProviderError(e.to_string()))
    }
}

/// Serves any provider as a stand-alone `/landmarks` endpoint.
pub fn provider_router(provider: Arc<dyn LandmarkProvider>) -> Router {
    async fn handle(
        State(p): State<Arc<dyn LandmarkProvider>>,
        Json(req): Json<LandmarkRequest>,
    ) -> Result<Json<LandmarkDoc>, (StatusCode, String)> {
        p.landmarks(&req.image_ref)
            .await
            .map(|set| Json(to_doc(&set)))
            .map_err(|e| (StatusCode::BAD_GATEWAY, e.to_string()))
    }
    Router::new().route("/landmarks", post(handle)).with_state(provider)
}

/// Fetches landmarks for `image_ref` within `timeout` and classifies them.
pub async fn gate_entry(
    provider: &dyn LandmarkProvider,
    image_ref: &str,
    thresholds: &MaskThresholds,
    timeout: Duration,
) -> Result<MaskVerdict, GateError> {
    let set = tokio::time::timeout(timeout, provider.landmarks(image_ref))
        .await
        .map_err(|_| GateError::ProviderTimeout(timeout))??;
    Ok(classify_mask(&set, thresholds))
}

/// Whether a gate result lets the player in.
pub fn admits(result: &Result<MaskVerdict, GateError>) -> bool {
    matches!(result, Ok(v) if v.admits())
}
