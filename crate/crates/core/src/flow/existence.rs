use serde::{Deserialize, Serialize};

/// Formal maximal existence time of the flow from a given background.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceTime {
    Infinite,
    Finite(f64),
    /// The class computation for this background is not implemented.
    NotComputed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Background {
    /// Flat torus; its first Bott-Chern class vanishes.
    FlatTorus,
    /// Left-invariant structure on the named Lie algebra.
    Homogeneous(String),
}

/// First failure of a run: time, grid point and minimum eigenvalue
/// (`point = None`, eigenvalue NaN for non-finite data).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerationEvent {
    pub t: f64,
    pub point: Option<usize>,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceRecord {
    pub tau_star: ExistenceTime,
    pub events: Vec<DegenerationEvent>,
}

impl ExistenceRecord {
    pub fn torus() -> Self {
        formal_existence_time(&Background::FlatTorus)
    }

    pub fn first_failure(&self) -> Option<&DegenerationEvent> {
        self.events.first()
    }
}

/// On the flat torus the class `[omega_0] - t c_1` never leaves the positive
/// cone, so the formal existence time is infinite.
pub fn formal_existence_time(bg: &Background) -> ExistenceRecord {
    let tau_star = match bg {
        Background::FlatTorus => ExistenceTime::Infinite,
        Background::Homogeneous(_) => ExistenceTime::NotComputed,
    };
    ExistenceRecord { tau_star, events: vec![] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_is_immortal_and_homogeneous_is_not_computed() {
        assert_eq!(formal_existence_time(&Background::FlatTorus).tau_star, ExistenceTime::Infinite);
        assert_eq!(
            formal_existence_time(&Background::Homogeneous("sl2c".into())).tau_star,
            ExistenceTime::NotComputed
        );
    }
}
