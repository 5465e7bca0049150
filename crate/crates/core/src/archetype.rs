use std::fmt;
use std::str::FromStr;

/// Behavioral role of a user, shared by both clustering pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Archetype {
    /// No sustained activity: the account is used to read other blogs.
    Reader,
    /// Both publishing and social activity.
    BloggerSocializer,
    /// Mostly social activity (friend list changes).
    Socializer,
    /// Mostly publishing activity.
    Blogger,
}

impl Archetype {
    /// All archetypes, in the order used by comparison tables.
    pub const ALL: [Archetype; 4] = [
        Archetype::Reader,
        Archetype::BloggerSocializer,
        Archetype::Socializer,
        Archetype::Blogger,
    ];

    pub fn index(self) -> usize {
        match self {
            Archetype::Reader => 0,
            Archetype::BloggerSocializer => 1,
            Archetype::Socializer => 2,
            Archetype::Blogger => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Reader => "Reader",
            Archetype::BloggerSocializer => "Blogger-Socializer",
            Archetype::Socializer => "Socializer",
            Archetype::Blogger => "Blogger",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown archetype `{0}`")]
pub struct UnknownArchetype(pub String);

impl FromStr for Archetype {
    type Err = UnknownArchetype;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "reader" => Ok(Archetype::Reader),
            "bloggersocializer" | "bloggersoc" | "bsoc" => Ok(Archetype::BloggerSocializer),
            "socializer" => Ok(Archetype::Socializer),
            "blogger" => Ok(Archetype::Blogger),
            _ => Err(UnknownArchetype(s.to_string())),
        }
    }
}

/// Normalized share of users per archetype.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArchetypeShares([f64; 4]);

impl ArchetypeShares {
    /// Shares of a non-empty collection of labels; `None` when empty.
    pub fn from_labels<I>(labels: I) -> Option<Self>
    where
        I: IntoIterator<Item = Archetype>,
    {
        let mut counts = [0usize; 4];
        let mut total = 0usize;
        for a in labels {
            counts[a.index()] += 1;
            total += 1;
        }
        if total == 0 {
            return None;
        }
        let mut shares = [0.0; 4];
        for (s, c) in shares.iter_mut().zip(counts) {
            *s = c as f64 / total as f64;
        }
        Some(ArchetypeShares(shares))
    }

    pub fn from_array(shares: [f64; 4]) -> Self {
        ArchetypeShares(shares)
    }

    pub fn get(&self, a: Archetype) -> f64 {
        self.0[a.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Archetype, f64)> + '_ {
        Archetype::ALL.iter().map(move |&a| (a, self.get(a)))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for a in Archetype::ALL {
            assert_eq!(a.name().parse::<Archetype>().unwrap(), a);
        }
        assert!("lurker".parse::<Archetype>().is_err());
    }

    #[test]
    fn shares_of_two() {
        let s = ArchetypeShares::from_labels([Archetype::Blogger, Archetype::Reader]).unwrap();
        assert_eq!(s.get(Archetype::Blogger), 0.5);
        assert_eq!(s.get(Archetype::Reader), 0.5);
        assert_eq!(s.get(Archetype::Socializer), 0.0);
        assert!(ArchetypeShares::from_labels([]).is_none());
    }
}
