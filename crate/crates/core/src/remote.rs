//! Blocking JSON-over-HTTP client shared by the remote QA, embedding and
//! summarization backends.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemoteFailure {
    /// Connection failure, timeout or a non-200 status.
    Unavailable(String),
    /// The server answered 200 but the body did not match the protocol.
    Protocol(String),
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    url: String,
}

impl JsonClient {
    /// `base` is the backend endpoint (e.g. `http://host:8000`), `path` the
    /// protocol route (e.g. `/qa`).
    pub fn new(base: &str, path: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}{}", base.trim_end_matches('/'), path);
        Self { agent, url }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, RemoteFailure> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| RemoteFailure::Unavailable(format!("{}: {e}", self.url)))?;
        let status = resp.status();
        if status != 200 {
            return Err(RemoteFailure::Unavailable(format!("{} returned HTTP {status}", self.url)));
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| RemoteFailure::Unavailable(format!("{}: {e}", self.url)))?;
        serde_json::from_str(&text).map_err(|e| RemoteFailure::Protocol(format!("{}: {e}", self.url)))
    }
}
