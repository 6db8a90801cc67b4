use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sample::{Label, MultimodalSample};
use crate::arch::{ModalityInput, ModalityKind, SampleInputs};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One modality of a batch, zero-padded to the longest member.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedModality {
    pub kind: ModalityKind,
    pub max_len: usize,
    pub dim: usize,
    /// One `max_len x dim` tensor per sample.
    pub data: Vec<Tensor>,
    /// `true` on real steps; real steps form a prefix.
    pub mask: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub modalities: [PaddedModality; 3],
    pub labels: Vec<Label>,
    /// Positions of the members in the source slice.
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Padded, masked model input of member `n`.
    pub fn inputs(&self, n: usize) -> SampleInputs {
        SampleInputs {
            modalities: self.modalities.each_ref().map(|p| ModalityInput {
                data: p.data[n].clone(),
                mask: Some(p.mask[n].clone()),
            }),
        }
    }
}

fn pad(samples: &[&MultimodalSample], m: ModalityKind) -> Result<PaddedModality> {
    let dim = samples[0].sequence(m).dim();
    let max_len = samples.iter().map(|s| s.sequence(m).len()).max().unwrap_or(0);
    let mut data = Vec::with_capacity(samples.len());
    let mut mask = Vec::with_capacity(samples.len());
    for s in samples {
        let seq = s.sequence(m);
        if seq.dim() != dim {
            return Err(Error::dim("batch_and_pad", &[dim], &[seq.dim()]));
        }
        let mut t = Tensor::zeros(max_len, dim);
        t.data_mut()[..seq.len() * dim].copy_from_slice(seq.data.data());
        data.push(t);
        mask.push((0..max_len).map(|r| r < seq.len()).collect());
    }
    Ok(PaddedModality {
        kind: m,
        max_len,
        dim,
        data,
        mask,
    })
}

/// Groups `samples` into batches of at most `batch_size`, padding every
/// modality with zeros. With `shuffle_seed` the order is permuted first.
pub fn batch_and_pad(
    samples: &[MultimodalSample],
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Batch>> {
    if samples.is_empty() {
        return Err(Error::Contract("cannot batch an empty sample list".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
        .chunks(batch_size)
        .map(|idx| {
            let members: Vec<&MultimodalSample> = idx.iter().map(|&i| &samples[i]).collect();
            let mut pads = Vec::with_capacity(3);
            for m in ModalityKind::ALL {
                pads.push(pad(&members, m)?);
            }
            Ok(Batch {
                modalities: pads.try_into().expect("three modalities"),
                labels: members.iter().map(|s| s.label).collect(),
                indices: idx.to_vec(),
            })
        })
        .collect()
}
