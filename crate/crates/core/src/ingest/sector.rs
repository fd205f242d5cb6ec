use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

macro_rules! sectors {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The nineteen cybersecurity-related sector tags.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub enum SectorId {
            $($variant),+
        }

        impl SectorId {
            pub const ALL: [SectorId; 19] = [$(SectorId::$variant),+];

            /// Display name, e.g. `"Cloud Security"`.
            pub fn name(self) -> &'static str {
                match self {
                    $(SectorId::$variant => $name),+
                }
            }
        }
    };
}

sectors! {
    ArtificialIntelligence => "Artificial Intelligence",
    Biometrics => "Biometrics",
    Blockchain => "Blockchain",
    CloudSecurity => "Cloud Security",
    CyberSecurity => "Cyber Security",
    ESignature => "E-Signature",
    FacialRecognition => "Facial Recognition",
    FraudDetection => "Fraud Detection",
    InternetOfThings => "Internet of Things",
    IntrusionDetection => "Intrusion Detection",
    MachineLearning => "Machine Learning",
    NetworkSecurity => "Network Security",
    PenetrationTesting => "Penetration Testing",
    Privacy => "Privacy",
    PrivateCloud => "Private Cloud",
    QrCodes => "QR Codes",
    QuantumComputing => "Quantum Computing",
    Security => "Security",
    SpamFiltering => "Spam Filtering",
}

impl SectorId {
    /// Normalized tag that selects this sector.
    pub fn tag(self) -> String {
        normalize_tag(self.name())
    }

    pub fn from_tag(tag: &str) -> Option<SectorId> {
        let tag = normalize_tag(tag);
        SectorId::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SectorId::from_tag(s).ok_or_else(|| Error::Invalid(format!("unknown sector `{s}`")))
    }
}

impl TryFrom<String> for SectorId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<SectorId> for String {
    fn from(s: SectorId) -> Self {
        s.name().to_owned()
    }
}

/// A sector, or the pooled set of all taxonomy firms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectorKey {
    Sector(SectorId),
    AllSectors,
}

impl SectorKey {
    pub fn keys() -> impl Iterator<Item = SectorKey> {
        SectorId::ALL
            .into_iter()
            .map(SectorKey::Sector)
            .chain(std::iter::once(SectorKey::AllSectors))
    }
}

impl fmt::Display for SectorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorKey::Sector(s) => f.write_str(s.name()),
            SectorKey::AllSectors => f.write_str("All sectors"),
        }
    }
}

impl From<SectorId> for SectorKey {
    fn from(s: SectorId) -> Self {
        SectorKey::Sector(s)
    }
}

/// Lowercase, trim, and collapse runs of whitespace, hyphens and underscores
/// into a single space.
pub fn normalize_tag(tag: &str) -> String {
    tag.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|part| !part.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sectors of `taxonomy` whose tag appears among `tags`.
pub fn assign_sectors<'a, I>(tags: I, taxonomy: &BTreeSet<SectorId>) -> BTreeSet<SectorId>
where
    I: IntoIterator<Item = &'a String>,
{
    tags.into_iter()
        .filter_map(|t| SectorId::from_tag(t))
        .filter(|s| taxonomy.contains(s))
        .collect()
}

/// The full nineteen-sector taxonomy.
pub fn full_taxonomy() -> BTreeSet<SectorId> {
    SectorId::ALL.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(ts: &[&str]) -> BTreeSet<String> {
        ts.iter().map(|t| normalize_tag(t)).collect()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_tag("  Cyber-Security "), "cyber security");
        assert_eq!(normalize_tag("E-Signature"), "e signature");
        assert_eq!(normalize_tag("internet   of_things"), "internet of things");
        assert_eq!(SectorId::from_tag("QR codes"), Some(SectorId::QrCodes));
        assert_eq!(SectorId::from_tag("ai"), None);
    }

    #[test]
    fn crypto_is_not_blockchain_sector() {
        let got = assign_sectors(&tags(&["blockchain", "cryptocurrency"]), &full_taxonomy());
        assert_eq!(got, BTreeSet::from([SectorId::Blockchain]));
    }

    #[test]
    fn empty_and_multi() {
        assert!(assign_sectors(&BTreeSet::new(), &full_taxonomy()).is_empty());
        let got = assign_sectors(
            &tags(&["machine learning", "artificial intelligence"]),
            &full_taxonomy(),
        );
        assert_eq!(
            got,
            BTreeSet::from([SectorId::ArtificialIntelligence, SectorId::MachineLearning])
        );
    }

    #[test]
    fn restricted_taxonomy() {
        let tax = BTreeSet::from([SectorId::Privacy]);
        let got = assign_sectors(&tags(&["privacy", "security"]), &tax);
        assert_eq!(got, tax);
    }

    #[test]
    fn names_round_trip() {
        for s in SectorId::ALL {
            assert_eq!(s.name().parse::<SectorId>().unwrap(), s);
        }
        assert_eq!(full_taxonomy().len(), 19);
    }

    proptest! {
        #[test]
        fn assignment_idempotent_and_order_free(
            picks in proptest::collection::vec(0usize..25, 0..8)
        ) {
            let pool: Vec<String> = SectorId::ALL.iter().map(|s| s.name().to_owned())
                .chain(["fintech", "saas", "crypto", "ai", "health", "ml"].map(String::from))
                .collect();
            let list: Vec<String> = picks.iter().map(|&i| normalize_tag(&pool[i])).collect();
            let mut reversed = list.clone();
            reversed.reverse();
            let tax = full_taxonomy();
            let a = assign_sectors(&list, &tax);
            let b = assign_sectors(&reversed, &tax);
            prop_assert_eq!(&a, &b);
            let again: Vec<String> = a.iter().map(|s| s.tag()).collect();
            prop_assert_eq!(assign_sectors(&again, &tax), a);
        }
    }
}
