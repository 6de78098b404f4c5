//! Blocking HTTP access for the tracker and forge crawlers: token-bucket rate
//! limiting, bounded retries and bounded-parallel fan-out.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Token bucket shared by every request to one host.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    refill_per_sec: f64,
    state: Mutex<BucketState>,
}

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(capacity: u32, refill_per_sec: f64) -> Self {
        assert!(capacity > 0, "token bucket capacity must be positive");
        assert!(refill_per_sec > 0.0, "token bucket refill rate must be positive");
        TokenBucket {
            capacity: capacity as f64,
            refill_per_sec,
            state: Mutex::new(BucketState { tokens: capacity as f64, last: Instant::now() }),
        }
    }

    fn refill(&self, state: &mut BucketState, now: Instant) {
        let elapsed = now.duration_since(state.last).as_secs_f64();
        state.tokens = (state.tokens + elapsed * self.refill_per_sec).min(self.capacity);
        state.last = now;
    }

    /// Takes one token if available.
    pub fn try_acquire(&self) -> bool {
        let mut state = self.state.lock().unwrap();
        self.refill(&mut state, Instant::now());
        if state.tokens >= 1.0 {
            state.tokens -= 1.0;
            true
        } else {
            false
        }
    }

    /// Blocks until a token is available, then takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                self.refill(&mut state, Instant::now());
                if state.tokens >= 1.0 {
                    state.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - state.tokens) / self.refill_per_sec)
            };
            thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn delay_for(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("request to {url} failed after {attempts} attempt(s): {message}")]
    Retryable { url: String, attempts: u32, message: String },
    #[error("credentials rejected by {url} (HTTP {status})")]
    Credentials { url: String, status: u16 },
    #[error("request to {url} failed with HTTP {status}")]
    Status { url: String, status: u16 },
}

impl TransportError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, TransportError::Credentials { .. })
    }
}

/// How the token is attached to requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthScheme {
    Bearer,
    Token,
}

pub struct HttpClient {
    agent: ureq::Agent,
    token: Option<String>,
    scheme: AuthScheme,
    limiter: TokenBucket,
    retry: RetryPolicy,
}

impl HttpClient {
    pub fn new(token: Option<String>, scheme: AuthScheme, limiter: TokenBucket, retry: RetryPolicy) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("aucad-crawler")
            .build()
            .into();
        HttpClient { agent, token, scheme, limiter, retry }
    }

    /// GETs `url` and returns the body, or `None` on 404.
    ///
    /// Connection failures, 429 and 5xx responses are retried with exponential
    /// backoff; 401/403 abort immediately.
    pub fn get(&self, url: &str, accept: &str) -> Result<Option<String>, TransportError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.limiter.acquire();
            let mut request = self.agent.get(url).header("Accept", accept);
            if let Some(token) = &self.token {
                let value = match self.scheme {
                    AuthScheme::Bearer => format!("Bearer {token}"),
                    AuthScheme::Token => format!("token {token}"),
                };
                request = request.header("Authorization", value);
            }
            let failure = match request.call() {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    match status {
                        200..=299 => {
                            return response.body_mut().read_to_string().map(Some).map_err(|e| {
                                TransportError::Retryable { url: url.to_string(), attempts: attempt, message: e.to_string() }
                            });
                        }
                        404 => return Ok(None),
                        401 | 403 => return Err(TransportError::Credentials { url: url.to_string(), status }),
                        429 | 500..=599 => format!("HTTP {status}"),
                        _ => return Err(TransportError::Status { url: url.to_string(), status }),
                    }
                }
                Err(e) => e.to_string(),
            };
            if attempt >= self.retry.max_attempts {
                return Err(TransportError::Retryable { url: url.to_string(), attempts: attempt, message: failure });
            }
            log::warn!("{url}: attempt {attempt} failed ({failure}), retrying");
            thread::sleep(self.retry.delay_for(attempt));
        }
    }
}

/// Maps `f` over `items` on at most `workers` threads, preserving input order.
pub fn bounded_map<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| items.into_par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_drains_and_refills() {
        let bucket = TokenBucket::new(2, 50.0);
        assert!(bucket.try_acquire());
        assert!(bucket.try_acquire());
        assert!(!bucket.try_acquire());
        thread::sleep(Duration::from_millis(40));
        assert!(bucket.try_acquire());
    }

    #[test]
    fn acquire_waits_for_refill() {
        let bucket = TokenBucket::new(1, 20.0);
        bucket.acquire();
        let start = Instant::now();
        bucket.acquire();
        assert!(start.elapsed() >= Duration::from_millis(30));
    }

    #[test]
    fn backoff_is_capped() {
        let policy = RetryPolicy {
            max_attempts: 10,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(350),
        };
        assert_eq!(policy.delay_for(1), Duration::from_millis(100));
        assert_eq!(policy.delay_for(2), Duration::from_millis(200));
        assert_eq!(policy.delay_for(3), Duration::from_millis(350));
    }

    #[test]
    fn bounded_map_keeps_order() {
        let out = bounded_map((0..50).collect(), 4, |x: i32| x * 2);
        assert_eq!(out, (0..50).map(|x| x * 2).collect::<Vec<_>>());
    }
}
