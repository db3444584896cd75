//! Delivery layer: chat pipeline, session journal, webhook and HTTP API.

pub mod analytics;
pub mod config;
pub mod http;
pub mod journal;
pub mod media;
pub mod message;
pub mod pipeline;
pub mod sessions;
pub mod webhook;

pub use analytics::{Analytics, AnalyticsSnapshot};
pub use config::{ConfigError, ServiceConfig};
pub use http::{router, serve, AppState};
pub use message::{AudioInput, EncodedAudio, InboundMessage, MessageBody, MessageKind, OutboundMessage};
pub use pipeline::{ChatError, ChatService, Clock, Transcript};
pub use sessions::{SessionStore, StoreError};
