#![allow(dead_code)]

pub mod crash;
pub mod faults;

use std::net::SocketAddr;
use std::sync::Arc;

use durian_core::RoadNetwork;
use durian_server::config::Settings;
use durian_server::formats::landmarks::{masked_fixture, to_doc, unmasked_fixture};
use durian_server::formats::questions::builtin_bank;
use durian_server::gate::LandmarkProvider;
use durian_server::service::protocol::*;
use durian_server::service::AppState;
use durian_server::sim::remote::Client;
use durian_server::store::{PlayerStore, StoreOptions};
use tempfile::TempDir;

pub fn fast_store_options() -> StoreOptions {
    StoreOptions { sync: false, kdf_iterations: 16, ..StoreOptions::default() }
}

pub struct TestServer {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    pub dir: TempDir,
}

impl TestServer {
    pub fn base(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn client(&self) -> Client {
        Client::new(&self.base())
    }
}

pub async fn serve_router(app: axum::Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

pub async fn spawn_server(
    settings: Settings,
    roads: Option<RoadNetwork>,
    provider: Option<Arc<dyn LandmarkProvider>>,
    seed: u64,
) -> TestServer {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(PlayerStore::open(dir.path(), fast_store_options()).unwrap());
    let state = AppState::new(settings, store, roads.map(Arc::new), builtin_bank(), provider, Some(seed));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let st = state.clone();
    tokio::spawn(async move { durian_server::service::serve(listener, st).await.unwrap() });
    TestServer { addr, state, dir }
}

pub async fn default_server(seed: u64) -> TestServer {
    spawn_server(Settings::default(), None, None, seed).await
}

/// Registers `email` and logs in, leaving the client authenticated.
pub async fn player(server: &TestServer, email: &str) -> (Client, LoginResponse) {
    let mut c = server.client();
    let login = c.register_and_login(email, "correct horse").await.unwrap();
    (c, login)
}

pub fn masked_gate() -> GateRequest {
    GateRequest { landmarks: Some(to_doc(&masked_fixture())), image_ref: None }
}

pub fn unmasked_gate() -> GateRequest {
    GateRequest { landmarks: Some(to_doc(&unmasked_fixture())), image_ref: None }
}

/// Gates with the masked fixture and starts a round at `center`.
pub async fn start_round(c: &Client, center: durian_core::GeoPoint) -> SessionView {
    let gate: GateResponse = c.post("/gate/mask", &masked_gate()).await.unwrap();
    assert!(gate.admitted);
    c.post("/session/start", &StartRequest { verdict_id: Some(gate.verdict_id), center })
        .await
        .unwrap()
}
