use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Hospital,
    Doctor,
    Patient,
    Device,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Hospital, Role::Doctor, Role::Patient, Role::Device];

    pub fn name(self) -> &'static str {
        match self {
            Role::Hospital => "hospital",
            Role::Doctor => "doctor",
            Role::Patient => "patient",
            Role::Device => "device",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// A registered participant. A patient's `id` is its patient id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Identity {
    pub id: NodeId,
    pub role: Role,
}

impl Identity {
    pub fn new(id: impl Into<NodeId>, role: Role) -> Self {
        Identity { id: id.into(), role }
    }
}

/// Every submitter and requester must resolve to exactly one entry here.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    roles: BTreeMap<NodeId, Role>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `identity`. Returns false (and changes nothing) if the id
    /// is already registered, whatever the role.
    pub fn register(&mut self, identity: Identity) -> bool {
        if self.roles.contains_key(&identity.id) {
            return false;
        }
        self.roles.insert(identity.id, identity.role);
        true
    }

    pub fn resolve(&self, id: &NodeId) -> Option<Identity> {
        self.roles.get(id).map(|&role| Identity {
            id: id.clone(),
            role,
        })
    }

    pub fn role_of(&self, id: &NodeId) -> Option<Role> {
        self.roles.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Identity> + '_ {
        self.roles.iter().map(|(id, &role)| Identity {
            id: id.clone(),
            role,
        })
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut r = Registry::new();
        assert!(r.register(Identity::new("hospital-1", Role::Hospital)));
        assert!(!r.register(Identity::new("hospital-1", Role::Device)));
        assert_eq!(r.role_of(&"hospital-1".into()), Some(Role::Hospital));
        assert_eq!(r.resolve(&"nobody".into()), None);
    }
}
