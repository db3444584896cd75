//! Shared plumbing for external providers (translators, speech, LLMs).

use std::sync::{Condvar, Mutex};

/// A provider call failed. Carries the provider name for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("provider {provider} failed: {message}")]
pub struct ProviderError {
    pub provider: String,
    pub message: String,
}

impl ProviderError {
    pub fn new(provider: impl Into<String>, message: impl Into<String>) -> Self {
        Self { provider: provider.into(), message: message.into() }
    }
}

/// Default cap on concurrent calls into one provider.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Counting semaphore bounding concurrent calls into a provider adapter.
#[derive(Debug)]
pub struct InFlightLimit {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    pub fn new(max: usize) -> Self {
        assert!(max > 0, "in-flight limit must be positive");
        Self { max, active: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    /// Runs `f` once a slot is free.
    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
            while *active >= self.max {
                active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
            }
            *active += 1;
        }
        struct Release<'a>(&'a InFlightLimit);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
                *active -= 1;
                self.0.freed.notify_one();
            }
        }
        let _release = Release(self);
        f()
    }
}

impl Default for InFlightLimit {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_IN_FLIGHT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn never_exceeds_limit() {
        let limit = Arc::new(InFlightLimit::new(2));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (limit, current, peak) = (limit.clone(), current.clone(), peak.clone());
                std::thread::spawn(move || {
                    limit.run(|| {
                        let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(5));
                        current.fetch_sub(1, Ordering::SeqCst);
                    })
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
