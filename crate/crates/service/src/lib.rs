//! HTTP session API for the active-learning loop.
//!
//! Each session has one exclusive writer; reads go to an immutable snapshot
//! that is swapped after every completed iteration, so GETs never wait for
//! retraining. Simulated-oracle sessions are answered by a background task
//! that calls the same submit path as HTTP clients.

mod api;
mod error;
mod model;
mod state;

use std::net::SocketAddr;

pub use api::router;
pub use error::{ApiError, ErrorBody};
pub use model::{
    BatchItem, BatchResponse, CreateSession, DatasetInfo, FeatureValue, LabelResponse, MetricsResponse, OracleKind,
    SessionStatus, SessionView, SUMMARY_FEATURES,
};
pub use state::{AppState, Checkpoint, DatasetEntry, SessionSlot};

pub const DEFAULT_PORT: u16 = 8640;

/// Restores checkpointed sessions and restarts drivers for unfinished
/// simulated ones. Must run inside a tokio runtime.
pub fn restore_sessions(state: &AppState) -> std::io::Result<usize> {
    let slots = state.restore()?;
    for slot in &slots {
        if slot.oracle == OracleKind::Simulated && slot.view().status != SessionStatus::Finished {
            api::spawn_driver(state.clone(), slot.clone());
        }
    }
    Ok(slots.len())
}

/// Restores sessions, binds `addr` and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let restored = restore_sessions(&state)?;
    if restored > 0 {
        log::info!("restored {restored} sessions");
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
