use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Input stream kind. Ordered `Text < Vision < Audio`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModalityKind {
    Text,
    Vision,
    Audio,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 3] = [ModalityKind::Text, ModalityKind::Vision, ModalityKind::Audio];

    pub fn index(self) -> usize {
        self as usize
    }

    /// One-letter tag used in file names and branch labels.
    pub fn letter(self) -> char {
        match self {
            ModalityKind::Text => 'L',
            ModalityKind::Vision => 'V',
            ModalityKind::Audio => 'A',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModalityKind::Text => "text",
            ModalityKind::Vision => "vision",
            ModalityKind::Audio => "audio",
        }
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ModalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l" | "t" | "text" => Ok(ModalityKind::Text),
            "v" | "vision" => Ok(ModalityKind::Vision),
            "a" | "audio" => Ok(ModalityKind::Audio),
            other => Err(Error::Config(format!("unknown modality {other:?}"))),
        }
    }
}

/// Directed crossmodal interaction: `source` supplies keys and values,
/// `target` supplies queries and keeps its own time base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    pub source: ModalityKind,
    pub target: ModalityKind,
}

impl Branch {
    /// All six directed pairs, grouped by target.
    pub const ALL: [Branch; 6] = [
        Branch::new(ModalityKind::Vision, ModalityKind::Text),
        Branch::new(ModalityKind::Audio, ModalityKind::Text),
        Branch::new(ModalityKind::Text, ModalityKind::Vision),
        Branch::new(ModalityKind::Audio, ModalityKind::Vision),
        Branch::new(ModalityKind::Text, ModalityKind::Audio),
        Branch::new(ModalityKind::Vision, ModalityKind::Audio),
    ];

    pub const fn new(source: ModalityKind, target: ModalityKind) -> Self {
        Branch { source, target }
    }

    /// The opposite direction inside the same modality pair.
    pub fn sibling(self) -> Branch {
        Branch::new(self.target, self.source)
    }

    pub fn index(self) -> usize {
        Branch::ALL
            .iter()
            .position(|b| *b == self)
            .expect("source and target differ")
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, dst) = s
            .split_once("->")
            .ok_or_else(|| Error::Config(format!("branch {s:?} is not of the form SRC->DST")))?;
        let (source, target) = (src.parse()?, dst.parse()?);
        if source == target {
            return Err(Error::Config(format!("branch {s:?} connects a modality to itself")));
        }
        Ok(Branch::new(source, target))
    }
}

/// Subset of the six directed branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchSet(u8);

impl BranchSet {
    pub fn all() -> Self {
        BranchSet(0b11_1111)
    }

    pub fn empty() -> Self {
        BranchSet(0)
    }

    pub fn from_branches(branches: impl IntoIterator<Item = Branch>) -> Self {
        let mut s = BranchSet::empty();
        for b in branches {
            s.insert(b);
        }
        s
    }

    /// The two branches that target `target`.
    pub fn targeting(target: ModalityKind) -> Self {
        BranchSet::from_branches(Branch::ALL.into_iter().filter(|b| b.target == target))
    }

    pub fn insert(&mut self, b: Branch) {
        self.0 |= 1 << b.index();
    }

    pub fn remove(&mut self, b: Branch) {
        self.0 &= !(1 << b.index());
    }

    pub fn contains(&self, b: Branch) -> bool {
        self.0 & (1 << b.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = Branch> + '_ {
        Branch::ALL.into_iter().filter(|b| self.contains(*b))
    }

    pub fn union(self, other: BranchSet) -> BranchSet {
        BranchSet(self.0 | other.0)
    }

    pub fn with_siblings(self) -> BranchSet {
        let mut out = self;
        for b in self.iter() {
            out.insert(b.sibling());
        }
        out
    }

    /// Modalities touched by any branch of the set.
    pub fn modalities(&self) -> Vec<ModalityKind> {
        ModalityKind::ALL
            .into_iter()
            .filter(|m| self.iter().any(|b| b.source == *m || b.target == *m))
            .collect()
    }
}

impl fmt::Display for BranchSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == BranchSet::all() {
            return write!(f, "all");
        }
        let parts: Vec<String> = self.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}
