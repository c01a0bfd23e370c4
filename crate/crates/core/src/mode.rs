use core::fmt;
use core::str::FromStr;

/// Transportation mode of a trip step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Walk,
    Bike,
    Car,
    Public,
    Taxi,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Walk, Mode::Bike, Mode::Car, Mode::Public, Mode::Taxi];
    pub const COUNT: usize = 5;

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Walk => "walk",
            Mode::Bike => "bike",
            Mode::Car => "car",
            Mode::Public => "public",
            Mode::Taxi => "taxi",
        }
    }

    /// Walking and biking never carry a fare.
    pub fn is_fare_free(self) -> bool {
        matches!(self, Mode::Walk | Mode::Bike)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown transportation mode `{0}`")]
pub struct UnknownMode(pub alloc::string::String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMode(s.into()))
    }
}

/// A subset of [`Mode`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);
    pub const ALL: ModeSet = ModeSet(0b1_1111);

    pub fn of(modes: &[Mode]) -> Self {
        modes.iter().fold(Self::EMPTY, |s, &m| s.with(m))
    }

    #[must_use]
    pub fn with(self, mode: Mode) -> Self {
        ModeSet(self.0 | 1 << mode.index())
    }

    pub fn insert(&mut self, mode: Mode) {
        *self = self.with(mode);
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & (1 << mode.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: ModeSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[must_use]
    pub fn intersect(self, other: ModeSet) -> Self {
        ModeSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |&m| self.contains(m))
    }
}

impl FromIterator<Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = Mode>>(iter: I) -> Self {
        iter.into_iter().fold(Self::EMPTY, |s, m| s.with(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exactly_five_modes() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>(), Ok(m));
        }
        assert!("train".parse::<Mode>().is_err());
        assert!("Walk".parse::<Mode>().is_err());
    }

    #[test]
    fn mode_set_ops() {
        let s = ModeSet::of(&[Mode::Walk, Mode::Public]);
        assert!(s.contains(Mode::Walk) && !s.contains(Mode::Car));
        assert!(s.is_subset(ModeSet::ALL));
        assert_eq!(s.iter().count(), 2);
        assert_eq!(ModeSet::ALL.iter().count(), 5);
    }
}
