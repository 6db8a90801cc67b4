use crate::arch::{ModalityInput, ModalityKind, SampleInputs};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Raw features of one modality: `T_m x d_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalitySequence {
    pub kind: ModalityKind,
    pub data: Tensor,
}

impl ModalitySequence {
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    Class(usize),
    /// Sentiment score in `[-3, 3]`.
    Score(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Class,
    Score,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::Class => "class",
            LabelKind::Score => "score",
        }
    }
}

impl Label {
    pub fn kind(self) -> LabelKind {
        match self {
            Label::Class(_) => LabelKind::Class,
            Label::Score(_) => LabelKind::Score,
        }
    }

    /// Sentiment score of the label; class indices map linearly onto
    /// `[-3, 3]`.
    pub fn score(self, classes: usize) -> f64 {
        match self {
            Label::Class(c) => class_to_score(c, classes),
            Label::Score(s) => s,
        }
    }
}

/// Maps class `c` of `classes` evenly onto `[-3, 3]`; for 7 classes this is
/// `c - 3`.
pub fn class_to_score(c: usize, classes: usize) -> f64 {
    debug_assert!(classes >= 2);
    -3.0 + 6.0 * c as f64 / (classes - 1) as f64
}

/// One labelled triple of (possibly differently long) sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct MultimodalSample {
    /// Indexed by [`ModalityKind::index`].
    pub sequences: [ModalitySequence; 3],
    pub label: Label,
}

impl MultimodalSample {
    pub fn new(sequences: [ModalitySequence; 3], label: Label) -> Result<Self> {
        for (m, s) in ModalityKind::ALL.iter().zip(&sequences) {
            if s.kind != *m {
                return Err(Error::Contract(format!(
                    "sequence slot {} holds {}",
                    m.name(),
                    s.kind.name()
                )));
            }
        }
        if let Label::Score(s) = label {
            if !(-3.0..=3.0).contains(&s) {
                return Err(Error::Contract(format!("score label {s} outside [-3, 3]")));
            }
        }
        Ok(MultimodalSample { sequences, label })
    }

    pub fn sequence(&self, m: ModalityKind) -> &ModalitySequence {
        &self.sequences[m.index()]
    }

    pub fn lengths(&self) -> [usize; 3] {
        [
            self.sequences[0].len(),
            self.sequences[1].len(),
            self.sequences[2].len(),
        ]
    }

    /// Unpadded model input.
    pub fn inputs(&self) -> SampleInputs {
        SampleInputs {
            modalities: self
                .sequences
                .clone()
                .map(|s| ModalityInput::unpadded(s.data)),
        }
    }
}
