//! Serve the mock backends over the HTTP wire protocol and call them through
//! the remote client.
//!
//!     cargo run --example remote_backend

use std::sync::Arc;

use rolecast::audio::{sine_tone, AudioClip};
use rolecast::backends::{wire, AudioSource, Backend, BackendConfig, MockBackend, RemoteBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").map_err(|e| e.to_string())?);
    let url = format!("http://{}", server.server_addr().to_ip().ok_or("not an ip listener")?);
    let srv = Arc::clone(&server);
    std::thread::spawn(move || {
        let backend = MockBackend::new(42);
        for mut req in srv.incoming_requests() {
            let mut body = Vec::new();
            let _ = req.as_reader().read_to_end(&mut body);
            let r = wire::dispatch(&backend, req.method().as_str(), req.url(), &body);
            let _ = req.respond(tiny_http::Response::from_string(r.body).with_status_code(r.status));
        }
    });

    let remote = RemoteBackend::new(&BackendConfig::remote(&url))?;
    remote.health()?;
    let voice = AudioClip::new(16_000, sine_tone(16_000, 220.0, 400, 6_000.0))?;

    println!(
        "caption:  {}",
        remote.caption_emotion(&AudioSource::Clip(voice.clone()))?
    );
    println!(
        "reason:   {}",
        remote.reason("#ROLE: Monica\n#LAST_TONE: fussy, exasperated")?
    );
    let v = remote.embed(&["fussy, exasperated".into()])?;
    println!("embed:    dim {}", v[0].dim());
    let speech = remote.synthesize("I KNOW!", &voice)?;
    println!(
        "synth:    {} samples at {} Hz",
        speech.samples.len(),
        speech.sample_rate_hz
    );
    match remote.reason("   ") {
        Err(e) => println!("error:    {} ({e})", e.code()),
        Ok(s) => println!("unexpected: {s}"),
    }
    server.unblock();
    Ok(())
}
