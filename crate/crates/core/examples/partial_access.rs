//! Shows the access level theta: below 1 a fuzzy grant covers only a tier
//! of actions on the requested resource.
//!
//! cargo run --example partial_access

use std::collections::BTreeSet;

use ipbac::decision::{mask_permissions, AccessOutcome, AccessRequest, Engine, EngineConfig};
use ipbac::policy::PolicySet;
use ipbac::provenance::{ChainOptions, PrincipalId, ProvenanceChain, Timestamp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frank = PrincipalId::new("frank")?;
    let policies = PolicySet::default();
    let at = Timestamp::from_millis(1_700_000_000_000);

    println!("tiers by theta:");
    let probe = AccessRequest {
        principal: frank.clone(),
        resource: "asset/7".into(),
        action: "read".into(),
        context_tags: BTreeSet::new(),
        requested_at: at,
    };
    for theta in [0.2, 0.5, 0.9, 1.0] {
        let actions: Vec<String> = mask_permissions(&probe, theta)?
            .into_iter()
            .map(|p| p.action)
            .collect();
        println!("  {theta:>4}: {}", actions.join(", "));
    }

    // An empty history scores 1/6, so alpha must sit below that to grant.
    println!("\nfuzzy grants at theta 0.5 with alpha 0.1:");
    let engine = Engine::new(EngineConfig {
        alpha: 0.1,
        theta: 0.5,
        ..EngineConfig::default()
    })?;
    let mut chain = ProvenanceChain::new(frank.clone(), ChainOptions::default());
    for (i, action) in ["read", "write", "delete"].into_iter().enumerate() {
        let request = AccessRequest {
            action: action.into(),
            requested_at: Timestamp::from_millis(at.as_millis() + i as i64 * 1_000),
            ..probe.clone()
        };
        let decision = engine.decide(&request, &policies, &mut chain)?;
        let granted = match &decision.outcome {
            AccessOutcome::Partial { level, granted } => format!(
                "partial level {level}: {:?}",
                granted
                    .iter()
                    .map(|p| p.action.as_str())
                    .collect::<Vec<_>>()
            ),
            other => format!("{other:?}"),
        };
        println!(
            "  {action:<6} ds {:.4}  {granted}  requested action permitted: {}",
            decision.ds.map_or(f64::NAN, |d| d.value()),
            decision.permits(&request)
        );
    }
    Ok(())
}
