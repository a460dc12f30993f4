use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ApiError;
use crate::ids::Id;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Done { result: Value },
    Failed { error: ApiError },
}

/// Background work started by an endpoint and polled by id.
#[derive(Debug, Default, Clone)]
pub struct Jobs {
    inner: Arc<Mutex<HashMap<Id, JobState>>>,
}

impl Jobs {
    pub fn spawn<F>(&self, work: F) -> Id
    where
        F: FnOnce() -> Result<Value, ApiError> + Send + 'static,
    {
        let id = Id::generate();
        self.inner.lock().unwrap().insert(id.clone(), JobState::Pending);
        let inner = self.inner.clone();
        let job = id.clone();
        std::thread::spawn(move || {
            let state = match work() {
                Ok(result) => JobState::Done { result },
                Err(error) => JobState::Failed { error },
            };
            inner.lock().unwrap().insert(job, state);
        });
        id
    }

    pub fn get(&self, id: &Id) -> Option<JobState> {
        self.inner.lock().unwrap().get(id).cloned()
    }
}
