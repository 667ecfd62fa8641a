//! HTTP control plane for interactive colorization sessions: caption,
//! candidate review, exemplar override, propagation and comparison.
//!
//! Sessions live as directories under a data root and are reloaded from disk
//! on every request, so a restarted server picks up where it left off.

pub mod api;
pub mod error;
pub mod session;

use std::net::SocketAddr;
use std::path::Path;

pub use api::{router, AppState};
pub use error::ApiError;
pub use session::{replay, Session, SessionState, SessionStore};

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, data_root: &Path) -> anyhow::Result<()> {
    let store = SessionStore::open(data_root)?;
    tracing::info!(sessions = store.ids().len(), root = %data_root.display(), "rehydrated session store");
    let app = router(AppState::new(store));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Builds a runtime and blocks on [`serve`].
pub fn serve_blocking(addr: SocketAddr, data_root: &Path) -> anyhow::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, data_root))
}
