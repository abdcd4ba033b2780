//! Starts the decision service in-process on a free port, drives it over
//! HTTP and stops it.
//!
//! cargo run --example embedded_service

use std::fs;
use std::sync::Arc;

use ipbac::service::{AppState, DaemonConfig, ServerHandle};
use reqwest::blocking::Client;
use serde_json::{json, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let policy_path = dir.path().join("policy.json");
    fs::write(
        &policy_path,
        json!({
            "roles": { "viewer": [{ "resource": "report/*", "action": "read" }] },
            "assignments": { "gina": ["viewer"] }
        })
        .to_string(),
    )?;
    let config = DaemonConfig {
        policy_path: Some(policy_path),
        ..DaemonConfig::default()
    };
    let state = Arc::new(AppState::open(config, &dir.path().join("data"))?);
    let server = ServerHandle::spawn(state, "127.0.0.1:0".parse()?)?;
    let base = server.base_url();
    println!("serving on {base}");

    let client = Client::new();
    let show = |label: &str, resp: reqwest::blocking::Response| -> Result<Value, reqwest::Error> {
        let status = resp.status();
        let body: Value = resp.json()?;
        println!(
            "{label}: {status}\n{}",
            serde_json::to_string_pretty(&body).unwrap_or_default()
        );
        Ok(body)
    };

    let t0 = 1_700_000_000_000i64;
    show(
        "record interaction",
        client
            .post(format!("{base}/v1/interactions"))
            .json(&json!({
                "principal": "gina",
                "interaction": {
                    "event": { "event_id": "gina-1", "kind": "review", "initiator": "gina", "occurred_at": t0 },
                    "participants": ["gina", "editor"],
                    "messages": [{ "seq": 0, "sender": "gina", "receiver": "editor", "payload_digest": "00".repeat(32) }]
                },
                "resource": "report/4",
                "action": "write",
                "outcome": "success",
                "recorded_at": t0
            }))
            .send()?,
    )?;

    for action in ["read", "write"] {
        show(
            &format!("decide {action} report/4"),
            client
                .post(format!("{base}/v1/decide"))
                .json(&json!({ "principal": "gina", "resource": "report/4", "action": action, "requested_at": t0 + 60_000 }))
                .send()?,
        )?;
    }

    show(
        "verify",
        client.get(format!("{base}/v1/chains/gina/verify")).send()?,
    )?;
    show(
        "tighten alpha",
        client
            .put(format!("{base}/v1/config"))
            .json(&json!({ "alpha": 0.6 }))
            .send()?,
    )?;
    show(
        "bad config",
        client
            .put(format!("{base}/v1/config"))
            .json(&json!({ "alpha": 2.0, "theta": 0.0 }))
            .send()?,
    )?;

    server.stop()?;
    println!("stopped");
    Ok(())
}
