use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendRole, EvidenceError, QaBackend, RawSpan};
use crate::remote::{JsonClient, RemoteFailure};

#[derive(Serialize)]
struct QaRequest<'a> {
    query: &'a str,
    context: &'a str,
}

#[derive(Deserialize)]
struct QaResponse {
    spans: Vec<RawSpan>,
}

/// Client for a reader served over `POST /qa`.
#[derive(Debug, Clone)]
pub struct RemoteQaBackend {
    client: JsonClient,
}

impl RemoteQaBackend {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            client: JsonClient::new(endpoint, "/qa", timeout),
        }
    }
}

impl QaBackend for RemoteQaBackend {
    fn answer(&self, role: BackendRole, query: &str, context: &str) -> Result<Vec<RawSpan>, EvidenceError> {
        self.client
            .post::<_, QaResponse>(&QaRequest { query, context })
            .map(|r| r.spans)
            .map_err(|f| match f {
                RemoteFailure::Unavailable(message) => EvidenceError::Unavailable { role, message },
                RemoteFailure::Protocol(message) => EvidenceError::Protocol { role, message },
            })
    }
}
