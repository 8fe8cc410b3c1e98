//! Local HTTP service exposing one simulation session.
//!
//! Reads (`GET /state`) see the last published revision. Mutations and jobs
//! run one at a time under a writer lock and publish a new snapshot
//! atomically when they finish. Job progress and revision changes fan out
//! to every `GET /events` subscriber as server-sent events.

mod api;
mod events;
mod session;

pub use api::{router, ApiError, AppState, ServiceConfig};
pub use events::{Event, JobKind};
pub use session::{DeployRequest, EnvironmentRequest, Session, Stamped};

use std::net::SocketAddr;

/// Default bind address of the `serve` subcommand.
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state)).await
}
