use crate::error::{Error, Result};

/// Binary masks `χ_C` over the object grid, stored in flat order.
///
/// Measurement block 0 is always the unmasked (pure Fourier) block; mask `i`
/// produces block `i + 1`. With `N_m` masks there are `N_m + 1` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    n: usize,
    d: usize,
    masks: Vec<Vec<bool>>,
}

impl MaskSet {
    pub fn new(n: usize, d: usize, masks: Vec<Vec<bool>>) -> Result<Self> {
        let len = n.pow(d as u32);
        if let Some((i, m)) = masks.iter().enumerate().find(|(_, m)| m.len() != len) {
            return Err(Error::Dimension(format!(
                "mask {i} has {} entries, grid has {len}",
                m.len()
            )));
        }
        Ok(Self { n, d, masks })
    }

    /// Pure Fourier measurements only.
    pub fn unmasked(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            masks: Vec::new(),
        }
    }

    /// Builds masks from 0/1 integer data.
    pub fn from_binary(n: usize, d: usize, masks: Vec<Vec<u8>>) -> Result<Self> {
        let converted = masks
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.into_iter()
                    .map(|v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(Error::Argument(format!("mask {i} has entry {other}, expected 0 or 1"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, d, converted)
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mask_count(&self) -> usize {
        self.masks.len()
    }

    /// `N_m + 1`.
    pub fn block_count(&self) -> usize {
        self.masks.len() + 1
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    /// Support of block `b`; `None` means every entry is let through.
    pub fn block_support(&self, b: usize) -> Option<&[bool]> {
        if b == 0 {
            None
        } else {
            Some(&self.masks[b - 1])
        }
    }
}
