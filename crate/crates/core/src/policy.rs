//! Non-fuzzy stage: role permissions with optional history predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::AccessRequest;
use crate::provenance::{Outcome, PrincipalId, ProvenanceChain};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid resource pattern {0:?}: wildcard only as the whole final segment")]
    InvalidPattern(String),
    #[error("permission action must not be empty")]
    EmptyAction,
    #[error("assignment of {principal} references unknown role {role}")]
    UnknownAssignedRole {
        principal: PrincipalId,
        role: String,
    },
    #[error("predicates reference unknown role {0}")]
    UnknownPredicateRole(String),
    #[error("predicate window must be positive")]
    EmptyWindow,
    #[error("reading policy file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing policy file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Action on a resource or resource pattern. `incident/*` covers every
/// resource below `incident/`; a lone `*` covers everything.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawPermission")]
pub struct Permission {
    pub resource: String,
    pub action: String,
}

#[derive(Deserialize)]
struct RawPermission {
    resource: String,
    action: String,
}

impl TryFrom<RawPermission> for Permission {
    type Error = PolicyError;

    fn try_from(raw: RawPermission) -> Result<Self, Self::Error> {
        Permission::new(raw.resource, raw.action)
    }
}

impl Permission {
    pub fn new(
        resource: impl Into<String>,
        action: impl Into<String>,
    ) -> Result<Self, PolicyError> {
        let resource = resource.into();
        let action = action.into();
        let segments: Vec<&str> = resource.split('/').collect();
        let bad_wildcard = segments
            .iter()
            .enumerate()
            .any(|(i, s)| s.contains('*') && (*s != "*" || i + 1 != segments.len()));
        if resource.is_empty() || bad_wildcard {
            return Err(PolicyError::InvalidPattern(resource));
        }
        if action.is_empty() {
            return Err(PolicyError::EmptyAction);
        }
        Ok(Self { resource, action })
    }

    pub fn covers_resource(&self, resource: &str) -> bool {
        if self.resource == "*" {
            return true;
        }
        match self.resource.strip_suffix('*') {
            Some(prefix) => resource.len() > prefix.len() && resource.starts_with(prefix),
            None => self.resource == resource,
        }
    }

    pub fn matches(&self, resource: &str, action: &str) -> bool {
        self.action == action && self.covers_resource(resource)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Role {
    pub name: String,
    pub permissions: BTreeSet<Permission>,
}

/// A condition on the principal's recent history, evaluated at the request
/// time over the window `(requested_at - window, requested_at]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryPredicate {
    MinSuccessfulInteractions { n: u64, window_secs: u64 },
    NoOutcomeInWindow { outcome: Outcome, window_secs: u64 },
}

impl HistoryPredicate {
    pub fn window(&self) -> Duration {
        match *self {
            HistoryPredicate::MinSuccessfulInteractions { window_secs, .. }
            | HistoryPredicate::NoOutcomeInWindow { window_secs, .. } => {
                Duration::from_secs(window_secs)
            }
        }
    }

    pub fn holds(&self, history: &ProvenanceChain, request: &AccessRequest) -> bool {
        let at = request.requested_at;
        match *self {
            HistoryPredicate::MinSuccessfulInteractions { n, .. } => {
                history.count_in_window(Outcome::Success, at, self.window()) as u64 >= n
            }
            HistoryPredicate::NoOutcomeInWindow { outcome, .. } => {
                history.count_in_window(outcome, at, self.window()) == 0
            }
        }
    }
}

/// Immutable set of roles, assignments and predicates. Swap the whole set to
/// reload.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyDocument", into = "PolicyDocument")]
pub struct PolicySet {
    roles: BTreeMap<String, Role>,
    assignments: BTreeMap<PrincipalId, BTreeSet<String>>,
    predicates: BTreeMap<String, Vec<HistoryPredicate>>,
}

/// On-disk JSON shape.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    #[serde(default)]
    pub roles: BTreeMap<String, Vec<Permission>>,
    #[serde(default)]
    pub assignments: BTreeMap<PrincipalId, Vec<String>>,
    #[serde(default)]
    pub predicates: BTreeMap<String, Vec<HistoryPredicate>>,
}

impl TryFrom<PolicyDocument> for PolicySet {
    type Error = PolicyError;

    fn try_from(doc: PolicyDocument) -> Result<Self, Self::Error> {
        let mut set = PolicySet::default();
        for (name, perms) in doc.roles {
            set.add_role(name, perms);
        }
        for (principal, roles) in doc.assignments {
            for role in roles {
                set.assign(principal.clone(), role)?;
            }
        }
        for (role, preds) in doc.predicates {
            for p in preds {
                set.add_predicate(&role, p)?;
            }
        }
        Ok(set)
    }
}

impl From<PolicySet> for PolicyDocument {
    fn from(set: PolicySet) -> Self {
        PolicyDocument {
            roles: set
                .roles
                .into_iter()
                .map(|(n, r)| (n, r.permissions.into_iter().collect()))
                .collect(),
            assignments: set
                .assignments
                .into_iter()
                .map(|(p, r)| (p, r.into_iter().collect()))
                .collect(),
            predicates: set.predicates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DenyReason {
    NoMatchingPermission,
    PredicateFailed {
        role: String,
        predicate: HistoryPredicate,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RbacDecision {
    Allow,
    Deny(DenyReason),
}

impl RbacDecision {
    pub fn is_allow(&self) -> bool {
        matches!(self, RbacDecision::Allow)
    }
}

impl PolicySet {
    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Adds (or replaces) a role.
    pub fn add_role(
        &mut self,
        name: impl Into<String>,
        permissions: impl IntoIterator<Item = Permission>,
    ) {
        let name = name.into();
        let role = Role {
            name: name.clone(),
            permissions: permissions.into_iter().collect(),
        };
        self.roles.insert(name, role);
    }

    pub fn assign(
        &mut self,
        principal: PrincipalId,
        role: impl Into<String>,
    ) -> Result<(), PolicyError> {
        let role = role.into();
        if !self.roles.contains_key(&role) {
            return Err(PolicyError::UnknownAssignedRole { principal, role });
        }
        self.assignments.entry(principal).or_default().insert(role);
        Ok(())
    }

    pub fn unassign(&mut self, principal: &PrincipalId, role: &str) -> bool {
        let Some(roles) = self.assignments.get_mut(principal) else {
            return false;
        };
        let removed = roles.remove(role);
        if roles.is_empty() {
            self.assignments.remove(principal);
        }
        removed
    }

    pub fn add_predicate(
        &mut self,
        role: &str,
        predicate: HistoryPredicate,
    ) -> Result<(), PolicyError> {
        if !self.roles.contains_key(role) {
            return Err(PolicyError::UnknownPredicateRole(role.to_owned()));
        }
        if predicate.window().is_zero() {
            return Err(PolicyError::EmptyWindow);
        }
        self.predicates
            .entry(role.to_owned())
            .or_default()
            .push(predicate);
        Ok(())
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.roles.values()
    }

    pub fn role(&self, name: &str) -> Option<&Role> {
        self.roles.get(name)
    }

    pub fn assigned_roles(&self, principal: &PrincipalId) -> impl Iterator<Item = &Role> {
        self.assignments
            .get(principal)
            .into_iter()
            .flatten()
            .filter_map(|name| self.roles.get(name))
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&PrincipalId, &BTreeSet<String>)> {
        self.assignments.iter()
    }

    pub fn predicates_for(&self, role: &str) -> &[HistoryPredicate] {
        self.predicates.get(role).map_or(&[], Vec::as_slice)
    }

    pub fn has_predicates(&self) -> bool {
        self.predicates.values().any(|p| !p.is_empty())
    }

    /// Union of the permissions of every role assigned to `principal`.
    pub fn permissions_for(&self, principal: &PrincipalId) -> BTreeSet<Permission> {
        self.assigned_roles(principal)
            .flat_map(|r| r.permissions.iter().cloned())
            .collect()
    }
}

/// Allow iff some assigned role grants (resource, action) and every history
/// predicate on that role holds. Roles are tried in name order; the first
/// failing predicate is reported when none passes.
pub fn evaluate_rbac(
    policies: &PolicySet,
    request: &AccessRequest,
    history: &ProvenanceChain,
) -> RbacDecision {
    let mut failed = None;
    for role in policies.assigned_roles(&request.principal) {
        if !role
            .permissions
            .iter()
            .any(|p| p.matches(&request.resource, &request.action))
        {
            continue;
        }
        match policies
            .predicates_for(&role.name)
            .iter()
            .find(|p| !p.holds(history, request))
        {
            None => return RbacDecision::Allow,
            Some(p) => {
                failed.get_or_insert(DenyReason::PredicateFailed {
                    role: role.name.clone(),
                    predicate: *p,
                });
            }
        }
    }
    RbacDecision::Deny(failed.unwrap_or(DenyReason::NoMatchingPermission))
}
