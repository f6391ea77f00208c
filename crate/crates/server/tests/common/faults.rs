//! Landmark providers that misbehave in every way we could think of, and a
//! runner that pushes each through the gate.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use durian_core::{LandmarkSet, MaskThresholds, MaskVerdict};
use durian_server::formats::landmarks::{masked_fixture, parse_landmarks, unmasked_fixture};
use durian_server::gate::{admits, gate_entry, GateError, HttpProvider, LandmarkProvider, DEFAULT_GATE_TIMEOUT};

use super::serve_router;

pub struct Failing;

#[async_trait]
impl LandmarkProvider for Failing {
    async fn landmarks(&self, _: &str) -> Result<LandmarkSet, GateError> {
        Err(GateError::ProviderError("detector crashed".into()))
    }
}

pub struct Sleepy(pub Duration);

#[async_trait]
impl LandmarkProvider for Sleepy {
    async fn landmarks(&self, _: &str) -> Result<LandmarkSet, GateError> {
        tokio::time::sleep(self.0).await;
        Ok(masked_fixture())
    }
}

pub struct Panicky;

#[async_trait]
impl LandmarkProvider for Panicky {
    async fn landmarks(&self, _: &str) -> Result<LandmarkSet, GateError> {
        let handle = tokio::spawn(async { panic!("provider bug") });
        handle.await.map_err(|e| GateError::ProviderError(e.to_string()))
    }
}

pub struct Fixed(pub LandmarkSet);

#[async_trait]
impl LandmarkProvider for Fixed {
    async fn landmarks(&self, _: &str) -> Result<LandmarkSet, GateError> {
        Ok(self.0.clone())
    }
}

async fn raw_http(status: StatusCode, body: &'static str, delay: Duration) -> String {
    let app = Router::new().route(
        "/landmarks",
        post(move || async move {
            tokio::time::sleep(delay).await;
            (status, [("content-type", "application/json")], body)
        }),
    );
    format!("http://{}", serve_router(app).await)
}

async fn refused() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}

pub struct FaultCase {
    pub name: &'static str,
    pub result: Result<MaskVerdict, GateError>,
}

impl FaultCase {
    pub fn admitted(&self) -> bool {
        admits(&self.result)
    }
}

/// Every case here must be refused. `slow` controls whether the real-time
/// HTTP timeout case (about 5 s) runs.
pub async fn run_fault_suite(slow: bool) -> Vec<FaultCase> {
    let t = MaskThresholds::default();
    let budget = DEFAULT_GATE_TIMEOUT;
    let no_face = parse_landmarks(include_str!("../../data/fixtures/no_face.json")).unwrap();
    let mut providers: Vec<(&'static str, Arc<dyn LandmarkProvider>)> = vec![
        ("provider error", Arc::new(Failing)),
        ("provider panics", Arc::new(Panicky)),
        ("unmasked face", Arc::new(Fixed(unmasked_fixture()))),
        ("no face found", Arc::new(Fixed(no_face))),
        ("empty landmark set", Arc::new(Fixed(LandmarkSet::new()))),
        ("all confidences zero", Arc::new(Fixed(LandmarkSet::uniform(0.0).unwrap()))),
        ("http 500", Arc::new(HttpProvider::new(&raw_http(StatusCode::INTERNAL_SERVER_ERROR, "{}", Duration::ZERO).await))),
        ("http 404", Arc::new(HttpProvider::new(&raw_http(StatusCode::NOT_FOUND, "", Duration::ZERO).await))),
        ("http 200 garbage", Arc::new(HttpProvider::new(&raw_http(StatusCode::OK, "<html>", Duration::ZERO).await))),
        ("http 200 truncated", Arc::new(HttpProvider::new(&raw_http(StatusCode::OK, "{\"LEFT_EYE\":{\"confid", Duration::ZERO).await))),
        (
            "http unknown landmark",
            Arc::new(HttpProvider::new(&raw_http(StatusCode::OK, r#"{"THIRD_EYE":{"confidence":0.9}}"#, Duration::ZERO).await)),
        ),
        (
            "http confidence out of range",
            Arc::new(HttpProvider::new(&raw_http(StatusCode::OK, r#"{"LEFT_EYE":{"confidence":7}}"#, Duration::ZERO).await)),
        ),
        (
            "http masked-looking partial face",
            Arc::new(HttpProvider::new(
                &raw_http(StatusCode::OK, r#"{"MOUTH_CENTER":{"confidence":0.0},"UPPER_LIP":{"confidence":0.0}}"#, Duration::ZERO)
                    .await,
            )),
        ),
        ("connection refused", Arc::new(HttpProvider::new(&refused().await))),
    ];
    if slow {
        providers.push(("provider sleeps 6 s", Arc::new(Sleepy(Duration::from_secs(6)))));
        let masked = r#"{"LEFT_EYE":{"confidence":0.9}}"#;
        providers.push((
            "http answers after 6 s",
            Arc::new(HttpProvider::new(&raw_http(StatusCode::OK, masked, Duration::from_secs(6)).await)),
        ));
    }
    let runs = providers.into_iter().map(|(name, p)| async move {
        let result = gate_entry(p.as_ref(), "selfie-1", &t, budget).await;
        FaultCase { name, result }
    });
    futures::future::join_all(runs).await
}
