//! Persists chains to disk, flips one bit in a stored record and shows
//! that verification pins the damage to that record.
//!
//! cargo run --example tamper_detection

use std::collections::BTreeSet;
use std::fs;

use ipbac::provenance::store::chain_file_path;
use ipbac::provenance::{
    verify_chain_file, ChainOptions, ChainStore, Event, Interaction, Outcome, PrincipalId,
    RecordInput, Timestamp,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = ChainStore::open(dir.path(), ChainOptions::default())?;
    let bob = PrincipalId::new("bob")?;
    let gateway = PrincipalId::new("gateway")?;

    for i in 0..6i64 {
        let at = Timestamp::from_millis(1_700_000_000_000 + i * 60_000);
        store.append(RecordInput {
            principal: bob.clone(),
            interaction: Interaction {
                event: Event {
                    event_id: format!("bob-{i}"),
                    kind: "login".into(),
                    initiator: bob.clone(),
                    occurred_at: at,
                },
                participants: vec![bob.clone(), gateway.clone()],
                messages: vec![],
            },
            resource: format!("asset/{}", i % 2),
            action: "read".into(),
            outcome: Outcome::Success,
            context_tags: BTreeSet::new(),
            recorded_at: at,
        })?;
    }
    let path = chain_file_path(dir.path(), &bob);
    println!(
        "{} records in {}",
        store.with_chain(&bob, |c| c.len()).unwrap_or(0),
        path.display()
    );
    println!("clean file: {:?}", verify_chain_file(&path, &bob)?);

    // Flip one bit inside record 3 (zero-based).
    let mut bytes = fs::read(&path)?;
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(
            bytes
                .iter()
                .enumerate()
                .filter(|(_, b)| **b == b'\n')
                .map(|(i, _)| i + 1),
        )
        .collect();
    let target = line_starts[3] + 40;
    bytes[target] ^= 0x01;
    fs::write(&path, &bytes)?;

    let report = verify_chain_file(&path, &bob)?;
    println!("after flipping a bit in record 3: {report:?}");

    drop(store);
    match ChainStore::open(dir.path(), ChainOptions::default()) {
        Ok(_) => println!("reopen unexpectedly succeeded"),
        Err(e) => println!("reopen refused: {e}"),
    }
    Ok(())
}
