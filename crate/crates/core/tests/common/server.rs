//! Throwaway HTTP servers for exercising the remote backend.

use std::sync::Arc;
use std::thread::JoinHandle;

use rolecast::backends::{wire, Backend};

pub struct StubServer {
    pub url: String,
    server: Arc<tiny_http::Server>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serve `handler(method, path, body) -> (status, body)` on a free port.
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&str, &str, &[u8]) -> (u16, String) + Send + Sync + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("ip listener"));
        let handler = Arc::new(handler);
        let srv = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    let mut body = Vec::new();
                    let _ = req.as_reader().read_to_end(&mut body);
                    let (status, text) = handler(req.method().as_str(), req.url(), &body);
                    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                    let _ = req.respond(
                        tiny_http::Response::from_string(text)
                            .with_status_code(status)
                            .with_header(header),
                    );
                });
            }
        });
        Self {
            url,
            server,
            worker: Some(worker),
        }
    }

    /// Serve the wire protocol on top of `backend`.
    pub fn for_backend(backend: Arc<dyn Backend>) -> Self {
        Self::start(move |method, path, body| {
            let r = wire::dispatch(backend.as_ref(), method, path, body);
            (r.status, r.body)
        })
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
