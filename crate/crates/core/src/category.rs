use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Named-entity category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Person,
    Location,
    Organization,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown entity category {0:?}")]
pub struct UnknownCategory(pub String);

impl Category {
    pub const ALL: [Category; 3] = [Category::Person, Category::Location, Category::Organization];

    /// Short tag used in files and inline markup.
    pub fn code(self) -> &'static str {
        match self {
            Category::Person => "PER",
            Category::Location => "LOC",
            Category::Organization => "ORG",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Person => "Person",
            Category::Location => "Location",
            Category::Organization => "Organization",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Accepts the short codes and the long upper-case names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "PER" | "PERSON" => Ok(Category::Person),
            "LOC" | "LOCATION" => Ok(Category::Location),
            "ORG" | "ORGANIZATION" => Ok(Category::Organization),
            other => Err(UnknownCategory(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.code().parse::<Category>(), Ok(c));
        }
        assert_eq!("LOCATION".parse::<Category>(), Ok(Category::Location));
        assert!("MISC".parse::<Category>().is_err());
    }
}
