use std::collections::BTreeSet;

use crate::codec::{Encode, Encoder};
use crate::ids::NodeId;

use super::identity::{Identity, Role};

/// Doctor grants, keyed `(patient_id, grantee_id)`. Derived from committed
/// grant/revoke transactions only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessTable {
    grants: BTreeSet<(String, NodeId)>,
}

impl AccessTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(&mut self, patient_id: &str, grantee: &NodeId) {
        self.grants.insert((patient_id.to_owned(), grantee.clone()));
    }

    pub fn revoke(&mut self, patient_id: &str, grantee: &NodeId) {
        self.grants.remove(&(patient_id.to_owned(), grantee.clone()));
    }

    pub fn contains(&self, patient_id: &str, grantee: &NodeId) -> bool {
        self.grants
            .contains(&(patient_id.to_owned(), grantee.clone()))
    }

    pub fn len(&self) -> usize {
        self.grants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, NodeId)> {
        self.grants.iter()
    }
}

impl Encode for AccessTable {
    fn encode(&self, enc: &mut Encoder) {
        enc.u32(self.grants.len() as u32);
        for (p, g) in &self.grants {
            enc.str(p).value(g);
        }
    }
}

/// Hospitals read everything, patients read their own records, doctors read
/// what they were granted, devices read nothing.
pub fn check_access(requester: &Identity, patient_id: &str, table: &AccessTable) -> bool {
    match requester.role {
        Role::Hospital => true,
        Role::Patient => requester.id.as_str() == patient_id,
        Role::Doctor => table.contains(patient_id, &requester.id),
        Role::Device => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_rules() {
        let mut t = AccessTable::new();
        let doc = Identity::new("doctor-1", Role::Doctor);
        assert!(check_access(&Identity::new("patient-1", Role::Patient), "patient-1", &t));
        assert!(!check_access(&Identity::new("patient-2", Role::Patient), "patient-1", &t));
        assert!(check_access(&Identity::new("hospital-1", Role::Hospital), "patient-1", &t));
        assert!(!check_access(&doc, "patient-1", &t));
        t.grant("patient-1", &doc.id);
        assert!(check_access(&doc, "patient-1", &t));
        assert!(!check_access(&doc, "patient-2", &t));
        t.revoke("patient-1", &doc.id);
        assert!(!check_access(&doc, "patient-1", &t));
    }

    #[test]
    fn devices_are_never_allowed() {
        let mut t = AccessTable::new();
        let dev = Identity::new("device-1", Role::Device);
        t.grant("patient-1", &dev.id);
        // A device even named like the patient is still refused.
        assert!(!check_access(&dev, "patient-1", &t));
        assert!(!check_access(&Identity::new("patient-1", Role::Device), "patient-1", &t));
    }
}
