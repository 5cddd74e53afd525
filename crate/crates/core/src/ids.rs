//! Identifier newtypes shared across the crate.
//!
//! All identifiers are ordered opaque tokens. Ordering by the underlying
//! string is the global tie-breaker wherever a deterministic tie-break is
//! needed (ranking ties, merge order, table row order).

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

id_type!(
    /// A network node or consortium member: a single enterprise or a
    /// regrouping of similar enterprises occupying exactly one tier.
    VenId
);

id_type!(
    /// A product in the breakdown structure.
    ProductId
);

id_type!(
    /// A client order.
    OrderId
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_lexicographic() {
        let a = VenId::from("#1");
        let b = VenId::from("#2");
        let ps = VenId::from("PS");
        assert!(a < b);
        assert!(b < ps);
    }
}
